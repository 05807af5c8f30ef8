use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use ymtg::dynamics::Dynamics;
use ymtg::estimates::{run_suite, EnsembleSpec, SuiteReport};
use ymtg::evolution::{evolve, Scheme};
use ymtg::gauge::{coulomb_fix, CoulombOptions};
use ymtg::grid::sampling::{random_vector, with_sobolev_norm};
use ymtg::grid::{TorusGrid, VectorField};
use ymtg::io::{self, ReportFormat};
use ymtg::projections::{hodge_potential, project_cf, project_df, x_norm};
use ymtg::{Error, Result};

use crate::config::{parse_algebra, RunConfig};
use crate::{EstimateArgs, GaugeArgs, NormsArgs, SimulateArgs};

fn load(path: Option<&Path>, command: &str) -> Result<RunConfig> {
    let cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.check_command(command)?;
    Ok(cfg)
}

fn list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::Configuration(format!("bad {what} '{t}'")))
        })
        .collect()
}

/// Splits a comma list while keeping parenthesized arguments intact.
fn case_list(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let (mut depth, mut cur) = (0, String::new());
    for ch in text.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur).trim().to_string());
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

fn as_config(e: Error) -> Error {
    match e {
        Error::InvalidInput(m) | Error::Precondition(m) => Error::Configuration(m),
        other => other,
    }
}

/// Random divergence-free data at half the size bound: `‖A₀‖_{H^s} = ε/2`, `‖∂_t A₀‖_{H^{s−1}} = ε/2`.
fn random_data(grid: &TorusGrid, dim: usize, s: f64, eps: f64, seed: u64) -> (VectorField, VectorField) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = with_sobolev_norm(&project_df(&random_vector(grid, dim, 3, &mut rng)), s, 0.5 * eps);
    let at = with_sobolev_norm(&project_df(&random_vector(grid, dim, 3, &mut rng)), s - 1.0, 0.5 * eps);
    (a, at)
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let cfg = load(a.config.as_deref(), "simulate")?;
    let mut sec = cfg.simulate;
    let ev = &mut sec.evolve;
    if let Some(v) = a.n {
        ev.n = v;
    }
    if let Some(v) = a.dt {
        ev.dt = v;
    }
    if let Some(v) = a.t_end {
        ev.t_end = v;
    }
    if let Some(v) = a.epsilon {
        ev.epsilon = v;
    }
    if let Some(v) = a.s {
        ev.s = v;
    }
    if let Some(v) = a.diag_stride {
        ev.diag_stride = v;
    }
    if let Some(v) = &a.scheme {
        ev.scheme = match v.as_str() {
            "rk4" => Scheme::Rk4,
            "picard" => Scheme::Picard,
            other => return Err(Error::Configuration(format!("unknown scheme '{other}' (rk4 or picard)"))),
        };
    }
    let algebra_spec = a.algebra.or(sec.algebra);
    let data = a.data.or(sec.data);
    let diagnostics = a.out.or(sec.diagnostics);
    let checkpoint = a.checkpoint.or(sec.checkpoint);
    let seed = a.seed.or(cfg.seed).unwrap_or(0);
    let config = sec.evolve;
    config.validate()?;

    let algebra = parse_algebra(algebra_spec.as_deref()).map_err(as_config)?;
    let dim = algebra.dim();
    let dynamics = Dynamics::new(algebra);
    let grid = TorusGrid::standard(config.n)?;
    let (a0, at0) = match &data {
        Some(p) => {
            let (h, fields) = io::read_fields(p)?;
            if h.grid.n() != config.n || h.dim != dim {
                return Err(Error::Configuration(format!(
                    "data holds n={} dim={}, run expects n={} dim={dim}",
                    h.grid.n(),
                    h.dim,
                    config.n
                )));
            }
            match fields.len() {
                3 => (io::read_vector(p, None)?, None),
                9 => {
                    let st = io::read_state(p, None)?;
                    (st.full_field(), Some(st.adf_t))
                }
                k => return Err(Error::Configuration(format!("data checkpoint has {k} components"))),
            }
        }
        None => {
            let (a, at) = random_data(&grid, dim, config.s, config.epsilon, seed);
            (a, Some(at))
        }
    };
    let out = match evolve(&config, &dynamics, &a0, at0.as_ref()) {
        Ok(out) => out,
        Err(Error::BlowUp { t, reason, last_valid }) => {
            if let (Some(p), Some(st)) = (&checkpoint, &last_valid) {
                io::write_state(p, st)?;
            }
            return Err(Error::BlowUp { t, reason, last_valid });
        }
        Err(e) => return Err(e),
    };
    if let Some(p) = &diagnostics {
        io::emit_report(&out.records, ReportFormat::for_path(p), p)?;
    }
    if let Some(p) = &checkpoint {
        io::write_state(p, &out.final_state)?;
    }
    let worst = out.records.iter().map(|r| r.gauss_residual).fold(0.0, f64::max);
    let last = out.records.last().expect("at least the initial record");
    println!(
        "steps={} t={:.6} hs_adf={:.6e} hs_acf={:.6e} max_gauss_residual={:.3e}",
        out.steps, last.t, last.hs_adf, last.hs_acf, worst
    );
    Ok(())
}

pub fn gauge_fix(a: GaugeArgs) -> Result<()> {
    let cfg = load(a.config.as_deref(), "gauge-fix")?;
    let mut sec = cfg.gauge_fix;
    if let Some(v) = a.n {
        sec.n = v;
    }
    if let Some(v) = a.amplitude {
        sec.amplitude = v;
    }
    if let Some(v) = a.s {
        sec.s = v;
    }
    if let Some(v) = a.tol {
        sec.tol = v;
    }
    if let Some(v) = a.max_iter {
        sec.max_iter = v;
    }
    let algebra = parse_algebra(a.algebra.or(sec.algebra).as_deref()).map_err(as_config)?;
    let input = a.input.or(sec.input);
    let out = a.out.or(sec.out);
    let checkpoint = a.checkpoint.or(sec.checkpoint);
    let seed = a.seed.or(cfg.seed).unwrap_or(0);
    if !(sec.s > 0.75) {
        return Err(Error::Configuration(format!("s = {} violates the requirement s > 3/4", sec.s)));
    }
    let a0 = match &input {
        Some(p) => io::read_vector(p, Some((sec.n, algebra.dim()))).map_err(as_config)?,
        None => {
            if !(sec.amplitude >= 0.0) {
                return Err(Error::Configuration("amplitude must be non-negative".into()));
            }
            let grid = TorusGrid::standard(sec.n).map_err(as_config)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            with_sobolev_norm(&random_vector(&grid, algebra.dim(), 3, &mut rng), sec.s, sec.amplitude)
        }
    };
    let options = CoulombOptions { s: sec.s, tol: sec.tol, max_iter: sec.max_iter };
    let result = coulomb_fix(&a0, &algebra, &options).map_err(|e| match e {
        Error::InvalidInput(m) => Error::Configuration(m),
        other => other,
    });
    let result = match result {
        Ok(r) => r,
        Err(Error::NonConvergence { iterations, last, history }) => {
            let mut text = String::from("iter,residual\n");
            for (k, r) in history.iter().enumerate() {
                text.push_str(&format!("{k},{}\n", io::format_number(*r)));
            }
            write_text(out.as_deref(), &text)?;
            return Err(Error::NonConvergence { iterations, last, history });
        }
        Err(e) => return Err(e),
    };
    write_text(out.as_deref(), &result.to_csv())?;
    if let Some(p) = &checkpoint {
        io::write_vector(p, &result.transformed)?;
    }
    if out.is_some() {
        println!(
            "iterations={} final_residual={:.3e}",
            result.iterations,
            result.residual_history.last().copied().unwrap_or(0.0)
        );
    }
    Ok(())
}

pub fn verify_estimates(a: EstimateArgs) -> Result<()> {
    let cfg = load(a.config.as_deref(), "verify-estimates")?;
    let mut sec = cfg.verify_estimates;
    if let Some(v) = &a.cases {
        sec.cases = Some(case_list(v));
    }
    if let Some(v) = &a.grids {
        sec.grids = list(v, "grid size")?;
    }
    if let Some(v) = a.samples {
        sec.samples = v;
    }
    if let Some(v) = &a.ensemble {
        sec.ensemble = v.parse().map_err(as_config)?;
    }
    if let Some(v) = a.s {
        sec.s = v;
    }
    if let Some(v) = a.eps {
        sec.eps = v;
    }
    let out = a.out.or(sec.out.clone());
    let seed = a.seed.or(cfg.seed).unwrap_or(0);
    let cases = sec.case_list().map_err(as_config)?;
    let exponents = sec.exponents()?;
    let spec = EnsembleSpec {
        kind: sec.ensemble,
        count: sec.samples,
        band: sec.band,
        cone_width: sec.cone_width,
        dim: sec.dim,
        window: sec.window,
        ..EnsembleSpec::default()
    };
    let report = run_suite(&spec, &cases, &sec.grids, seed, &exponents).map_err(as_config)?;
    match &out {
        Some(p) => io::write_json(&report, p)?,
        None => write_text(None, &io::json_string(&report)?)?,
    }
    if out.is_some() {
        print_summary(&report);
    }
    Ok(())
}

fn print_summary(report: &SuiteReport) {
    println!("{:<28} {:>5} {:>12} {:>12} {:>9}", "case", "n", "max", "p95", "anomalies");
    for s in &report.summary {
        println!(
            "{:<28} {:>5} {:>12.4e} {:>12.4e} {:>9}",
            s.case.to_string(),
            s.n,
            s.max,
            s.p95,
            s.anomalies
        );
    }
    for g in &report.growth {
        println!(
            "growth {:<21} n={}->{} factor {:.3} {}",
            g.case.to_string(),
            g.coarse_n,
            g.fine_n,
            g.factor,
            if g.passed { "ok" } else { "EXCEEDED" }
        );
    }
}

#[derive(Serialize)]
struct NormEntry {
    name: &'static str,
    s: f64,
    full: f64,
    divergence_free: f64,
    curl_free: f64,
    /// `‖∇φ‖_{H^s}` of the potential with `∇φ = (1−P)A`.
    potential_x: Option<f64>,
}

#[derive(Serialize)]
struct NormsReport {
    n: usize,
    dim: usize,
    time: f64,
    components: usize,
    norms: Vec<NormEntry>,
}

pub fn norms(a: NormsArgs) -> Result<()> {
    let cfg = load(a.config.as_deref(), "norms")?;
    let mut sec = cfg.norms;
    if let Some(v) = &a.s {
        sec.s = list(v, "Sobolev exponent")?;
    }
    let input = a
        .input
        .or(sec.input)
        .ok_or_else(|| Error::Configuration("norms needs --input <checkpoint>".into()))?;
    let out = a.out.or(sec.out);
    let (h, _) = io::read_fields(&input)?;
    let fields: Vec<(&'static str, VectorField)> = match h.components {
        3 => vec![("field", io::read_vector(&input, None)?)],
        9 => {
            let st = io::read_state(&input, None)?;
            vec![("a_df", st.adf), ("a_df_t", st.adf_t), ("a_cf", st.acf)]
        }
        k => return Err(Error::Configuration(format!("checkpoint has {k} components; expected 3 or 9"))),
    };
    let mut entries = Vec::new();
    for (name, v) in &fields {
        let v = v.spectral();
        let (df, cf) = (project_df(&v), project_cf(&v));
        let phi = hodge_potential(&cf).ok();
        for &s in &sec.s {
            entries.push(NormEntry {
                name,
                s,
                full: v.sobolev_norm(s),
                divergence_free: df.sobolev_norm(s),
                curl_free: cf.sobolev_norm(s),
                potential_x: phi.as_ref().map(|p| x_norm(p, s)),
            });
        }
    }
    let report = NormsReport {
        n: h.grid.n(),
        dim: h.dim,
        time: h.time,
        components: h.components,
        norms: entries,
    };
    match &out {
        Some(p) => io::write_json(&report, p),
        None => write_text(None, &io::json_string(&report)?),
    }
}
