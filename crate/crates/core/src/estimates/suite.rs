use rayon::prelude::*;
use serde::Serialize;

use super::cases::{evaluate_prepared, CaseId, Evaluation, Exponents, Prepared};
use super::ensembles::{cone_concentration, draw_inputs_with, Band, EnsembleKind, EnsembleSpec};
use crate::error::{Error, Result};
use crate::grid::TorusGrid;
use crate::spacetime::SpaceTimeField;

/// One evaluated sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRecord {
    pub case: CaseId,
    pub ensemble: EnsembleKind,
    pub seed: u64,
    pub sample: usize,
    pub n: usize,
    pub n_t: usize,
    pub half_width: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `None` (JSON `null`) marks an anomaly: positive left side over a zero right side.
    pub ratio: Option<f64>,
    pub anomaly: bool,
    pub terms: Vec<f64>,
    pub cone_concentration: f64,
    pub band: Band,
}

impl RatioRecord {
    fn new(case: CaseId, spec: &EnsembleSpec, seed: u64, sample: usize, grid: &TorusGrid, ev: Evaluation, cone: f64) -> Self {
        let ratio = ev.ratio();
        Self {
            case,
            ensemble: spec.kind,
            seed,
            sample,
            n: grid.n(),
            n_t: spec.n_t(grid.n()),
            half_width: spec.half_width,
            lhs: ev.lhs,
            rhs: ev.rhs,
            anomaly: ratio.is_none(),
            ratio,
            terms: ev.terms,
            cone_concentration: cone,
            band: spec.band_for(grid.n()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseSummary {
    pub case: CaseId,
    pub n: usize,
    pub samples: usize,
    pub max: f64,
    pub p95: f64,
    pub anomalies: usize,
    pub all_finite: bool,
}

/// Max-ratio growth of one case between two grids.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthCheck {
    pub case: CaseId,
    pub coarse_n: usize,
    pub fine_n: usize,
    pub coarse_max: f64,
    pub fine_max: f64,
    pub factor: f64,
    pub passed: bool,
}

/// Allowed growth of the maximal ratio per grid doubling.
pub const GROWTH_LIMIT: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub exponents: Exponents,
    pub ensemble: EnsembleSpec,
    pub seed: u64,
    pub records: Vec<RatioRecord>,
    pub summary: Vec<CaseSummary>,
    pub growth: Vec<GrowthCheck>,
}

impl SuiteReport {
    pub fn all_finite(&self) -> bool {
        self.summary.iter().all(|s| s.all_finite)
    }

    pub fn growth_ok(&self) -> bool {
        self.growth.iter().all(|g| g.passed)
    }

    pub fn anomalies(&self) -> usize {
        self.records.iter().filter(|r| r.anomaly).count()
    }
}

/// Nearest-rank percentile of a sorted slice.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

fn summarize(case: CaseId, n: usize, records: &[RatioRecord]) -> CaseSummary {
    let mut finite: Vec<f64> = records.iter().filter_map(|r| r.ratio).filter(|r| r.is_finite()).collect();
    finite.sort_by(f64::total_cmp);
    let anomalies = records.iter().filter(|r| r.anomaly).count();
    CaseSummary {
        case,
        n,
        samples: records.len(),
        max: finite.last().copied().unwrap_or(0.0),
        p95: percentile(&finite, 0.95),
        anomalies,
        all_finite: anomalies == 0
            && finite.len() == records.len()
            && records.iter().all(|r| r.lhs.is_finite() && r.rhs.is_finite()),
    }
}

fn evaluate_sample(
    grid: &TorusGrid,
    spec: &EnsembleSpec,
    cases: &[CaseId],
    seed: u64,
    sample: usize,
    e: &Exponents,
) -> Result<Vec<RatioRecord>> {
    let arity = cases.iter().map(|c| c.arity().max(2)).max().unwrap_or(1);
    let (inputs, _) = draw_inputs_with(grid, spec, seed, sample, arity, None)?;
    let prepared: Vec<Prepared> = inputs.iter().map(Prepared::new).collect();
    drop(inputs);
    let cone = cone_concentration(prepared[0].spectrum(), spec.cone_width);
    cases
        .iter()
        .map(|&case| {
            let ev = evaluate_prepared(case, &prepared, e)?;
            Ok(RatioRecord::new(case, spec, seed, sample, grid, ev, cone))
        })
        .collect()
}

/// Evaluates every case on `spec.count` samples per grid. Records are ordered
/// by grid, case and sample regardless of scheduling.
pub fn run_suite(spec: &EnsembleSpec, cases: &[CaseId], grids: &[usize], seed: u64, e: &Exponents) -> Result<SuiteReport> {
    spec.validate()?;
    if cases.is_empty() || grids.is_empty() {
        return Err(Error::Precondition("run_suite needs at least one case and one grid".into()));
    }
    let mut grids = grids.to_vec();
    grids.sort_unstable();
    grids.dedup();
    let mut records = Vec::new();
    let mut summary = Vec::new();
    for &n in &grids {
        let grid = TorusGrid::standard(n)?;
        let per_sample = (0..spec.count)
            .into_par_iter()
            .map(|k| evaluate_sample(&grid, spec, cases, seed, k, e))
            .collect::<Result<Vec<_>>>()?;
        for (ci, &case) in cases.iter().enumerate() {
            let rows: Vec<RatioRecord> = per_sample.iter().map(|s| s[ci].clone()).collect();
            if rows.iter().any(|r| r.anomaly) {
                log::warn!("case {case} on n={n}: {} anomalous samples", rows.iter().filter(|r| r.anomaly).count());
            }
            summary.push(summarize(case, n, &rows));
            records.extend(rows);
        }
    }
    let mut growth = Vec::new();
    for pair in grids.windows(2) {
        for &case in cases {
            let max_on = |n: usize| {
                summary
                    .iter()
                    .find(|s| s.case == case && s.n == n)
                    .map(|s| s.max)
                    .expect("summarized")
            };
            let (c, f) = (max_on(pair[0]), max_on(pair[1]));
            let factor = if c > 0.0 {
                f / c
            } else if f == 0.0 {
                1.0
            } else {
                f64::INFINITY
            };
            growth.push(GrowthCheck {
                case,
                coarse_n: pair[0],
                fine_n: pair[1],
                coarse_max: c,
                fine_max: f,
                factor,
                passed: f <= GROWTH_LIMIT * c,
            });
        }
    }
    Ok(SuiteReport {
        exponents: *e,
        ensemble: spec.clone(),
        seed,
        records,
        summary,
        growth,
    })
}

fn perturbed(base: &[SpaceTimeField], dirs: &[SpaceTimeField], step: f64) -> Vec<SpaceTimeField> {
    base.iter()
        .zip(dirs)
        .map(|(b, d)| {
            let (nb, nd) = (b.l2_norm(), d.l2_norm());
            let c = if nd > 0.0 { step * nb.max(1e-300) / nd } else { 0.0 };
            let mut out = b.clone();
            for (x, y) in out.data_mut().iter_mut().zip(d.data()) {
                *x += y * c;
            }
            out
        })
        .collect()
}

/// Random-restart hill climbing over the input fields: each step adds a fresh
/// draw from the same ensemble (same direction for plane waves) and keeps it
/// when the ratio increases. Deterministic in `seed`.
pub fn adversarial_search(
    case: CaseId,
    n: usize,
    spec: &EnsembleSpec,
    iters: usize,
    restarts: usize,
    seed: u64,
    e: &Exponents,
) -> Result<RatioRecord> {
    if iters == 0 || restarts == 0 {
        return Err(Error::Precondition("adversarial search needs iters >= 1 and restarts >= 1".into()));
    }
    spec.validate()?;
    let grid = TorusGrid::standard(n)?;
    let arity = case.arity().max(2);
    let score = |inputs: &[SpaceTimeField]| -> Result<(Evaluation, f64, f64)> {
        let prepared: Vec<Prepared> = inputs.iter().map(Prepared::new).collect();
        let ev = evaluate_prepared(case, &prepared, e)?;
        let cone = cone_concentration(prepared[0].spectrum(), spec.cone_width);
        let r = ev.ratio().unwrap_or(f64::NEG_INFINITY);
        Ok((ev, r, cone))
    };
    let mut best: Option<(f64, RatioRecord)> = None;
    for restart in 0..restarts {
        let (mut current, direction) = draw_inputs_with(&grid, spec, seed, restart, arity, None)?;
        let (mut ev, mut ratio, mut cone) = score(&current)?;
        let mut step = 0.5;
        for it in 0..iters {
            let sample = restarts + restart * iters + it;
            let (dirs, _) = draw_inputs_with(&grid, spec, seed, sample, arity, direction)?;
            let trial = perturbed(&current, &dirs, step);
            let (tev, tr, tc) = score(&trial)?;
            if tr > ratio {
                (current, ev, ratio, cone) = (trial, tev, tr, tc);
                step *= 1.5;
            } else {
                step *= 0.5;
            }
        }
        let record = RatioRecord::new(case, spec, seed, restart, &grid, ev, cone);
        if best.as_ref().is_none_or(|(b, _)| ratio > *b) {
            best = Some((ratio, record));
        }
    }
    Ok(best.expect("at least one restart").1)
}
