//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Run alone with `cargo test --release -p ymtg-core --test acceptance`.
//! Set `YMTG_ACCEPT=3,7` to run a subset.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ymtg::dynamics::Dynamics;
use ymtg::estimates::{
    draw_inputs, evaluate, run_suite, CaseId, EnsembleKind, EnsembleSpec, Exponents, GROWTH_LIMIT,
};
use ymtg::evolution::{
    evolve, evolve_observed, initial_state, picard_solve, EvolveConfig, PicardOptions, Rk4Stepper,
    WavePropagator,
};
use ymtg::gauge::{apply_gauge, coulomb_fix, CoulombOptions, GaugeField};
use ymtg::grid::sampling::{random_scalar, random_vector, with_sobolev_norm};
use ymtg::grid::{TorusGrid, VectorField};
use ymtg::io::{csv_string, json_string};
use ymtg::lie::{Representation, StructureTensor};
use ymtg::projections::{project_cf, project_df};
use ymtg::spacetime::SpaceTimeField;
use ymtg::Result;

const S: f64 = 0.8;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

fn grid(n: usize) -> TorusGrid {
    TorusGrid::standard(n).expect("valid grid")
}

/// Divergence-free small data: `‖A0‖_{H^s} = ‖∂_t A0‖_{H^{s-1}} = eps / 2`.
fn small_data(g: &TorusGrid, dim: usize, eps: f64, seed: u64) -> (VectorField, VectorField) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = with_sobolev_norm(&project_df(&random_vector(g, dim, 4, &mut rng)), S, 0.5 * eps);
    let at = with_sobolev_norm(&project_df(&random_vector(g, dim, 4, &mut rng)), S - 1.0, 0.5 * eps);
    (a, at)
}

fn projection_algebra() -> Result<Outcome> {
    let g = grid(32);
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let a = random_vector(&g, 3, 10, &mut rng);
        let (na, n1) = (a.l2_norm(), a.sobolev_norm(1.0));
        let p = project_df(&a);
        let q = &a - &p;
        let errs = [
            (&project_df(&p) - &p).l2_norm() / na,
            (&(&q - &project_df(&q)) - &q).l2_norm() / na,
            project_df(&q).l2_norm() / na,
            (&project_cf(&a) - &q).l2_norm() / na,
            p.divergence().l2_norm() / n1,
            q.curl().l2_norm() / n1,
        ];
        worst = errs.iter().fold(worst, |m, e| m.max(*e));
    }
    outcome(worst <= 1e-12, format!("worst relative defect {worst:.2e} over 100 su(2) fields, n=32"))
}

fn plane_wave(g: &TorusGrid, xi: [f64; 3], pol: [f64; 3], alg: [f64; 3], phase: f64) -> VectorField {
    VectorField::from_fn(*g, 3, |x, i, o| {
        let p = (xi[0] * x[0] + xi[1] * x[1] + xi[2] * x[2] + phase).cos();
        for a in 0..3 {
            o[a] = pol[i] * alg[a] * p;
        }
    })
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn null_form_vanishing() -> Result<Outcome> {
    let g = grid(32);
    let su2 = Dynamics::new(StructureTensor::su2());
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let xi = loop {
            let m: [f64; 3] = std::array::from_fn(|_| rng.random_range(-2i64..=2) as f64);
            if m.iter().any(|v| *v != 0.0) {
                break m;
            }
        };
        let mut w = VectorField::zeros(g, 3, ymtg::grid::Repr::Physical);
        for mult in [1.0, 2.0] {
            let r: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            // Polarization orthogonal to the wave vector keeps the wave divergence-free.
            let pol = cross(xi, r);
            let alg: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let k = xi.map(|v| mult * v);
            w.axpy(1.0, &plane_wave(&g, k, pol, alg, rng.random_range(0.0..6.0)));
        }
        let n = su2.null_n(&w, &w)?;
        let grad = (0..3).fold(0.0_f64, |m, i| m.max(w.partial_derivative(i).physical().map(|d| d.max_abs()).unwrap_or(f64::NAN)));
        let rel = n.max_abs() / (w.max_abs() * grad);
        worst = worst.max(rel);
    }
    outcome(worst <= 1e-11, format!("worst max|N(A,A)|/(max|A| max|∂A|) = {worst:.2e} over 20 pairs"))
}

fn abelian_oracle() -> Result<Outcome> {
    let g = grid(32);
    let cfg = EvolveConfig { n: 32, dt: 1e-3, t_end: 1.0, epsilon: 1e-2, ..EvolveConfig::default() };
    let ab = Dynamics::new(StructureTensor::abelian(3));
    let (a0, at0) = small_data(&g, 3, 1e-2, 303);
    let out = evolve(&cfg, &ab, &a0, Some(&at0))?;
    let (exact, _) = WavePropagator::new(g, 1.0).apply(&a0.spectral(), &at0.spectral());
    let err = (&out.final_state.full_field() - &exact).sobolev_norm(S);
    outcome(err <= 1e-10, format!("‖A(1) − exact‖_H^0.8 = {err:.2e} after {} steps", out.steps))
}

/// Shared su(2) run at ε = 1e-2, n = 32, dt = 1e-3: constraints throughout,
/// and the C⁰_t H^s distance to the Picard iterate at every node.
struct Su2Run {
    gauss: f64,
    div: f64,
    curl: f64,
    picard_gap: f64,
    ratios: Vec<f64>,
    differences: Vec<f64>,
    rk4_time: Duration,
    picard_time: Duration,
}

fn su2_run() -> Result<Su2Run> {
    let g = grid(32);
    let cfg = EvolveConfig { n: 32, dt: 1e-3, t_end: 1.0, epsilon: 1e-2, ..EvolveConfig::default() };
    let su2 = Dynamics::new(StructureTensor::su2());
    let (a0, at0) = small_data(&g, 3, 1e-2, 404);

    let clock = Instant::now();
    let sol = picard_solve(&cfg, &su2, &a0, Some(&at0), &PicardOptions::default())?;
    let picard_time = clock.elapsed();

    let clock = Instant::now();
    let (mut gauss, mut div, mut curl, mut gap) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    let mut node = 0;
    evolve_observed(&cfg, &su2, &a0, Some(&at0), &mut |st, rec| {
        gauss = gauss.max(rec.gauss_residual);
        div = div.max(rec.div_df_residual);
        curl = curl.max(rec.curl_cf_residual);
        if node < sol.nodes() && (sol.times()[node] - st.t).abs() < 1e-9 {
            let p = sol.state_at(node);
            gap = gap.max((&st.full_field() - &p.full_field()).sobolev_norm(S));
            node += 1;
        }
        Ok(())
    })?;
    if node != sol.nodes() {
        gap = f64::NAN;
    }
    Ok(Su2Run {
        gauss,
        div,
        curl,
        picard_gap: gap,
        ratios: sol.ratios(),
        differences: sol.differences.clone(),
        rk4_time: clock.elapsed(),
        picard_time,
    })
}

fn constraint_persistence(run: &Su2Run) -> Result<Outcome> {
    let ok = run.gauss <= 1e-6 && run.div <= 1e-9 && run.curl <= 1e-9;
    outcome(
        ok,
        format!(
            "max Gauss {:.2e}, div A^df {:.2e}, curl A^cf {:.2e} (rk4 {:.0?})",
            run.gauss, run.div, run.curl, run.rk4_time
        ),
    )
}

fn picard_contraction(run: &Su2Run) -> Result<Outcome> {
    let ratios_ok = run.ratios.iter().all(|r| *r <= 0.5);
    let ok = ratios_ok && !run.ratios.is_empty() && run.picard_gap <= 1e-4;
    let diffs: Vec<String> = run.differences.iter().map(|d| format!("{d:.1e}")).collect();
    outcome(
        ok,
        format!(
            "differences [{}], C0_t H^s gap to RK4 {:.2e} (picard {:.0?})",
            diffs.join(", "),
            run.picard_gap,
            run.picard_time
        ),
    )
}

fn coulomb_gauge() -> Result<Outcome> {
    let g = grid(32);
    let su2 = StructureTensor::su2();
    let opts = CoulombOptions { s: S, tol: 1e-10, max_iter: 20 };
    let (mut worst_ratio, mut most_iter, mut ok) = (0.0_f64, 0, true);
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let a = with_sobolev_norm(&random_vector(&g, 3, 4, &mut rng), S, 0.05);
        let r = coulomb_fix(&a, &su2, &opts)?;
        worst_ratio = r.ratios().iter().fold(worst_ratio, |m, q| m.max(*q));
        most_iter = most_iter.max(r.iterations);
        ok &= r.iterations <= 8 && *r.residual_history.last().unwrap_or(&f64::NAN) <= 1e-10;
    }
    ok &= worst_ratio <= 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(520);
    let a = with_sobolev_norm(&random_vector(&g, 3, 4, &mut rng), S, 0.05);
    let r = coulomb_fix(&a, &StructureTensor::abelian(3), &opts)?;
    let abelian_res = *r.residual_history.last().unwrap_or(&f64::NAN);
    ok &= r.iterations == 1 && abelian_res <= 1e-12;
    outcome(
        ok,
        format!(
            "su(2): worst ratio {worst_ratio:.2e}, at most {most_iter} iterations; abelian: {} iteration, residual {abelian_res:.1e}",
            r.iterations
        ),
    )
}

fn gauge_covariance() -> Result<Outcome> {
    let g = grid(32);
    let su2 = StructureTensor::su2();
    let dynamics = Dynamics::new(su2.clone());
    let rep = Representation::default_for(&su2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let a = with_sobolev_norm(&random_vector(&g, 3, 2, &mut rng), S, 0.3);
        let v = random_scalar(&g, 3, 1, &mut rng);
        let v = v.scale(0.3 / v.physical()?.max_abs());
        let u = GaugeField::exp(&v, rep.clone())?;
        let f = dynamics.curvature(&a)?;
        let f2 = dynamics.curvature(&apply_gauge(&u, &a)?)?;
        for (p, q) in f.parts().iter().zip(f2.parts()) {
            let rotated = u.adjoint(p)?;
            worst = worst.max(rotated.max_abs_diff(q) / p.max_abs());
        }
    }
    outcome(worst <= 1e-10, format!("worst relative curvature mismatch {worst:.2e} over 20 pairs"))
}

fn estimate_suite() -> Result<Outcome> {
    let spec = EnsembleSpec::new(EnsembleKind::FreeWave, 50);
    let report = run_suite(&spec, &CaseId::standard_suite(), &[16, 32], 808, &Exponents::default())?;
    let worst = report
        .growth
        .iter()
        .max_by(|a, b| a.factor.total_cmp(&b.factor))
        .map(|g| format!("{} ×{:.2}", g.case, g.factor))
        .unwrap_or_default();
    let ok = report.growth.len() == 13 && report.growth_ok() && report.all_finite() && report.anomalies() == 0;
    outcome(
        ok,
        format!(
            "13 cases × 50 samples on n=16,32; largest growth {worst} (limit ×{GROWTH_LIMIT}); {} anomalies",
            report.anomalies()
        ),
    )
}

fn continuous_dependence() -> Result<Outcome> {
    let g = grid(32);
    let su2 = Dynamics::new(StructureTensor::su2());
    let (a0, at0) = small_data(&g, 3, 1e-2, 909);
    let delta = 1e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(910);
    let da = with_sobolev_norm(&project_df(&random_vector(&g, 3, 4, &mut rng)), S, delta);
    let b0 = &a0 + &da;
    let (mut x, _) = initial_state(&su2, &a0, Some(&at0))?;
    let (mut y, _) = initial_state(&su2, &b0, Some(&at0))?;
    let (dt, steps) = (5e-3, 200);
    let mut sx = Rk4Stepper::new(&su2, g, dt);
    let mut sy = Rk4Stepper::new(&su2, g, dt);
    let mut worst = (&x.full_field() - &y.full_field()).sobolev_norm(S);
    for _ in 0..steps {
        x = sx.step(&x)?;
        y = sy.step(&y)?;
        worst = worst.max((&x.full_field() - &y.full_field()).sobolev_norm(S));
    }
    outcome(
        worst <= 10.0 * delta,
        format!("sup_t ‖A − B‖_H^0.8 = {worst:.3e} for data {delta:.0e} apart (bound {:.0e})", 10.0 * delta),
    )
}

fn scale_invariance_and_determinism() -> Result<Outcome> {
    let g = grid(16);
    let e = Exponents::default();
    let mut worst: f64 = 0.0;
    let cases: Vec<CaseId> = CaseId::standard_suite().into_iter().chain([CaseId::ProdEq]).collect();
    for (k, kind) in [EnsembleKind::FreeWave, EnsembleKind::RandomBand].into_iter().enumerate() {
        let spec = EnsembleSpec::new(kind, 2);
        let inputs = draw_inputs(&g, &spec, 1000 + k as u64, 0, 3)?;
        let lam = [3.7, 0.02, 11.0];
        let scaled: Vec<SpaceTimeField> = inputs.iter().zip(lam).map(|(u, l)| u.scale(l)).collect();
        for c in &cases {
            let a = evaluate(*c, &inputs, &e)?.ratio().unwrap_or(f64::NAN);
            let b = evaluate(*c, &scaled, &e)?.ratio().unwrap_or(f64::NAN);
            worst = worst.max((a - b).abs() / a.abs());
        }
    }

    let spec = EnsembleSpec::new(EnsembleKind::FreeWave, 2);
    let suite = [CaseId::Energy, CaseId::BilinearStrichartz(-0.2), CaseId::Cnd];
    let r1 = json_string(&run_suite(&spec, &suite, &[8, 16], 7, &e)?)?;
    let r2 = json_string(&run_suite(&spec, &suite, &[8, 16], 7, &e)?)?;
    let cfg = EvolveConfig { n: 16, dt: 5e-3, t_end: 0.05, diag_stride: 1, ..EvolveConfig::default() };
    let su2 = Dynamics::new(StructureTensor::su2());
    let (a0, at0) = small_data(&grid(16), 3, 1e-2, 11);
    let d1 = csv_string(&evolve(&cfg, &su2, &a0, Some(&at0))?.records)?;
    let d2 = csv_string(&evolve(&cfg, &su2, &a0, Some(&at0))?.records)?;
    let identical = r1.as_bytes() == r2.as_bytes() && d1.as_bytes() == d2.as_bytes();
    outcome(
        worst <= 1e-12 && identical,
        format!(
            "worst relative ratio change {worst:.1e} over {} cases; reports byte-identical: {identical}",
            cases.len()
        ),
    )
}

type Check<'a> = Box<dyn FnOnce() -> Result<Outcome> + 'a>;

fn main() -> ExitCode {
    let only: Option<Vec<usize>> = std::env::var("YMTG_ACCEPT")
        .ok()
        .map(|v| v.split(',').filter_map(|k| k.trim().parse().ok()).collect());
    let wanted = |k: usize| only.as_ref().is_none_or(|o| o.contains(&k));

    let shared = std::cell::OnceCell::new();
    let run = || shared.get_or_init(|| su2_run().map_err(|e| e.to_string()));

    let checks: Vec<(usize, &str, u64, Check)> = vec![
        (1, "projection algebra", 10, Box::new(projection_algebra)),
        (2, "null form on parallel plane waves", 5, Box::new(null_form_vanishing)),
        (3, "abelian linear oracle", 60, Box::new(abelian_oracle)),
        (4, "constraint persistence", 600, Box::new(|| match run() {
            Ok(r) => constraint_persistence(r),
            Err(e) => outcome(false, format!("error: {e}")),
        })),
        (5, "Coulomb gauge fixing", 120, Box::new(coulomb_gauge)),
        (6, "gauge covariance", 60, Box::new(gauge_covariance)),
        (7, "Picard contraction", 900, Box::new(|| match run() {
            Ok(r) => picard_contraction(r),
            Err(e) => outcome(false, format!("error: {e}")),
        })),
        (8, "estimate suite boundedness", 1800, Box::new(estimate_suite)),
        (9, "continuous dependence", 1200, Box::new(continuous_dependence)),
        (10, "scale invariance and determinism", 300, Box::new(scale_invariance_and_determinism)),
    ];

    let mut failures = 0;
    for (k, name, budget, check) in checks {
        if !wanted(k) {
            continue;
        }
        let clock = Instant::now();
        let result = check();
        let mut elapsed = clock.elapsed();
        if k == 4 || k == 7 {
            // Both criteria share one run; charge each with its own part.
            if let Some(Ok(r)) = shared.get() {
                elapsed = if k == 4 { r.rk4_time } else { r.picard_time + r.rk4_time };
            }
        }
        let in_time = elapsed.as_secs_f64() <= budget as f64;
        let (passed, detail) = match result {
            Ok(o) => (o.passed && in_time, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failures += 1;
        }
        println!(
            "{} [{k}] {name}: {detail}; {:.1} s (budget {budget} s)",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
