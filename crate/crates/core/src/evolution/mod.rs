//! Time evolution of the split system: exact linear flow, integrating-factor
//! RK4, and a Duhamel/Picard fixed-point solver.

mod picard;
mod propagator;
mod rk4;

pub use picard::{cumulative_quadrature, picard_solve, PicardOptions, PicardSolution};
pub use propagator::{linear_propagator, WavePropagator};
pub use rk4::{rk4_step, Rk4Stepper};

use serde::{Deserialize, Serialize};

use crate::dynamics::{gradient_norm, Dynamics};
use crate::error::{Error, Result};
use crate::grid::{Repr, TorusGrid, VectorField};
use crate::projections::{project_df, split};

/// `(A^df, ∂_t A^df, A^cf)` at time `t`. The curl-free velocity is never
/// stored; it follows from the Gauss law.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub adf: VectorField,
    pub adf_t: VectorField,
    pub acf: VectorField,
}

impl State {
    pub fn new(t: f64, adf: VectorField, adf_t: VectorField, acf: VectorField) -> Self {
        Self { t, adf, adf_t, acf }
    }

    pub fn zero(grid: TorusGrid, dim: usize) -> Self {
        let z = VectorField::zeros(grid, dim, Repr::Spectral);
        Self::new(0.0, z.clone(), z.clone(), z)
    }

    pub fn grid(&self) -> &TorusGrid {
        self.adf.grid()
    }

    pub fn dim(&self) -> usize {
        self.adf.dim()
    }

    /// `A = A^df + A^cf`.
    pub fn full_field(&self) -> VectorField {
        if self.adf.repr() == self.acf.repr() {
            &self.adf + &self.acf
        } else {
            &self.adf.spectral() + &self.acf.spectral()
        }
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self::new(
            self.t,
            self.adf.scale(lambda),
            self.adf_t.scale(lambda),
            self.acf.scale(lambda),
        )
    }

    pub fn spectral(&self) -> Self {
        Self::new(self.t, self.adf.spectral(), self.adf_t.spectral(), self.acf.spectral())
    }

    pub fn physical(&self) -> Result<Self> {
        Ok(Self::new(
            self.t,
            self.adf.physical()?,
            self.adf_t.physical()?,
            self.acf.physical()?,
        ))
    }

    pub fn is_finite(&self) -> bool {
        self.adf.is_finite() && self.adf_t.is_finite() && self.acf.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Rk4,
    Picard,
}

/// Evolution parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_end: f64,
    pub n: usize,
    /// Data size bound `‖A(0)‖_{H^s}`.
    pub epsilon: f64,
    pub s: f64,
    pub scheme: Scheme,
    /// Steps between diagnostics records.
    pub diag_stride: usize,
    /// Largest tolerated Gauss-law residual.
    pub constraint_ceiling: f64,
    /// Blow-up is declared when an `H^s` norm exceeds `blowup_factor · epsilon`.
    pub blowup_factor: f64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 1.0,
            n: 32,
            epsilon: 1e-2,
            s: 0.8,
            scheme: Scheme::Rk4,
            diag_stride: 10,
            constraint_ceiling: 1e-3,
            blowup_factor: 1e3,
        }
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Configuration(m));
        if !(self.s > 0.75) {
            return bad(format!("s = {} is not allowed: the theory requires s > 3/4", self.s));
        }
        if self.n < 8 || !self.n.is_power_of_two() {
            return bad(format!("n = {} must be a power of two >= 8", self.n));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        let cfl = 0.5 * 2.0 * std::f64::consts::PI / self.n as f64;
        if self.dt > cfl {
            return bad(format!("dt = {} exceeds the step bound 0.5·2π/n = {cfl:.6}", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end = {} must be positive", self.t_end));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon = {} must be positive", self.epsilon));
        }
        if self.diag_stride == 0 {
            return bad("diag_stride must be at least 1".into());
        }
        if !(self.constraint_ceiling > 0.0) || !(self.blowup_factor > 0.0) {
            return bad("constraint_ceiling and blowup_factor must be positive".into());
        }
        Ok(())
    }

    /// Number of equal steps covering `[0, t_end]` and their size.
    pub fn steps(&self) -> (usize, f64) {
        let k = (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize;
        (k, self.t_end / k as f64)
    }
}

/// Monitored quantities at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `‖div ∂_t A + [A_i, ∂_t A_i]‖₂`.
    pub gauss_residual: f64,
    /// `‖div A^df‖₂ / ‖A^df‖_{H¹}`.
    pub div_df_residual: f64,
    /// `‖curl A^cf‖₂ / ‖A^cf‖_{H¹}`.
    pub curl_cf_residual: f64,
    pub hs_adf: f64,
    pub hs_acf: f64,
    pub hamiltonian: f64,
    /// `‖∇A^df‖₂² + ‖∂_t A^df‖₂²`.
    pub linear_energy: f64,
}

fn relative(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Diagnostics of a state; `cf_velocity` may pass a precomputed `∂_t A^cf`.
pub fn diagnostics(
    dynamics: &Dynamics,
    state: &State,
    s: f64,
    cf_velocity: Option<&VectorField>,
) -> Result<DiagnosticsRecord> {
    let a = state.full_field();
    let w = match cf_velocity {
        Some(w) => w.clone(),
        None => dynamics.cf_velocity(&a, &state.adf_t, None)?,
    };
    let at = &state.adf_t.spectral() + &w.spectral();
    let adf = state.adf.spectral();
    let acf = state.acf.spectral();
    let grad = gradient_norm(&adf);
    let vel = state.adf_t.l2_norm();
    Ok(DiagnosticsRecord {
        t: state.t,
        gauss_residual: dynamics.compatibility_residual(&a, &at)?,
        div_df_residual: relative(adf.divergence().l2_norm(), adf.sobolev_norm(1.0)),
        curl_cf_residual: relative(acf.curl().l2_norm(), acf.sobolev_norm(1.0)),
        hs_adf: adf.sobolev_norm(s),
        hs_acf: acf.sobolev_norm(s),
        hamiltonian: grad + w.l2_norm() + vel,
        linear_energy: grad * grad + vel * vel,
    })
}

/// Result of [`evolve`].
#[derive(Debug, Clone)]
pub struct EvolveOutput {
    pub records: Vec<DiagnosticsRecord>,
    pub final_state: State,
    pub steps: usize,
}

/// Builds the initial state from `A(0)` and an optional `∂_t A^df(0)`:
/// splits `A(0)`, projects the velocity, and removes the total charge so
/// that the Gauss law can hold. Returns the state and `∂_t A^cf(0)`.
pub fn initial_state(
    dynamics: &Dynamics,
    a0: &VectorField,
    adf_t0: Option<&VectorField>,
) -> Result<(State, VectorField)> {
    let parts = split(&a0.spectral());
    let vel = match adf_t0 {
        Some(v) => project_df(&v.spectral()),
        None => VectorField::zeros(*a0.grid(), a0.dim(), Repr::Spectral),
    };
    let (vel, w) = dynamics.enforce_compatibility(a0, &vel)?;
    Ok((State::new(0.0, parts.df, vel, parts.cf), w))
}

fn check_data(config: &EvolveConfig, a0: &VectorField) -> Result<()> {
    config.validate()?;
    if a0.grid().n() != config.n {
        return Err(Error::Configuration(format!(
            "data grid has n = {}, configuration says n = {}",
            a0.grid().n(),
            config.n
        )));
    }
    let size = a0.sobolev_norm(config.s);
    if size > config.epsilon * (1.0 + 1e-9) {
        return Err(Error::Precondition(format!(
            "‖A(0)‖_H^{} = {size:.3e} exceeds epsilon = {:.3e}",
            config.s, config.epsilon
        )));
    }
    let cf = split(a0).cf.sobolev_norm(config.s);
    if cf > 1e-10 * size.max(f64::MIN_POSITIVE) {
        log::warn!("initial data is not in the Coulomb gauge (‖A^cf‖ = {cf:.3e}); evolving anyway");
    }
    Ok(())
}

/// Integrates the split system from `A(0)` (and optional `∂_t A^df(0)`) to
/// `t_end` with the configured scheme, calling `observer` at every
/// diagnostics record.
pub fn evolve_observed(
    config: &EvolveConfig,
    dynamics: &Dynamics,
    a0: &VectorField,
    adf_t0: Option<&VectorField>,
    observer: &mut dyn FnMut(&State, &DiagnosticsRecord) -> Result<()>,
) -> Result<EvolveOutput> {
    check_data(config, a0)?;
    let (state, w0) = initial_state(dynamics, a0, adf_t0)?;
    match config.scheme {
        Scheme::Rk4 => run_rk4(config, dynamics, state, w0, observer),
        Scheme::Picard => run_picard(config, dynamics, a0, adf_t0, observer),
    }
}

pub fn evolve(
    config: &EvolveConfig,
    dynamics: &Dynamics,
    a0: &VectorField,
    adf_t0: Option<&VectorField>,
) -> Result<EvolveOutput> {
    evolve_observed(config, dynamics, a0, adf_t0, &mut |_, _| Ok(()))
}

fn guard(config: &EvolveConfig, record: &DiagnosticsRecord, state: &State, last: &State) -> Result<()> {
    let limit = config.blowup_factor * config.epsilon;
    if !(record.hs_adf.is_finite() && record.hs_acf.is_finite()) {
        return Err(Error::BlowUp {
            t: state.t,
            reason: "non-finite norm".into(),
            last_valid: Some(Box::new(last.clone())),
        });
    }
    if record.hs_adf > limit || record.hs_acf > limit {
        return Err(Error::BlowUp {
            t: state.t,
            reason: format!(
                "H^s norm {:.3e} exceeds {limit:.3e}",
                record.hs_adf.max(record.hs_acf)
            ),
            last_valid: Some(Box::new(last.clone())),
        });
    }
    if record.gauss_residual > config.constraint_ceiling {
        return Err(Error::Integrity {
            t: state.t,
            reason: format!(
                "Gauss residual {:.3e} above ceiling {:.3e}",
                record.gauss_residual, config.constraint_ceiling
            ),
        });
    }
    if record.div_df_residual > 1e-10 || record.curl_cf_residual > 1e-10 {
        return Err(Error::Integrity {
            t: state.t,
            reason: format!(
                "split constraints drifted (div {:.3e}, curl {:.3e})",
                record.div_df_residual, record.curl_cf_residual
            ),
        });
    }
    Ok(())
}

fn run_rk4(
    config: &EvolveConfig,
    dynamics: &Dynamics,
    mut state: State,
    w0: VectorField,
    observer: &mut dyn FnMut(&State, &DiagnosticsRecord) -> Result<()>,
) -> Result<EvolveOutput> {
    let (steps, dt) = config.steps();
    let mut stepper = Rk4Stepper::new(dynamics, *state.grid(), dt);
    let mut records = Vec::new();
    let first = diagnostics(dynamics, &state, config.s, Some(&w0))?;
    guard(config, &first, &state, &state)?;
    observer(&state, &first)?;
    records.push(first);
    let limit = config.blowup_factor * config.epsilon;
    for k in 1..=steps {
        let next = stepper.step(&state)?;
        let n_df = next.adf.sobolev_norm(config.s);
        let n_cf = next.acf.sobolev_norm(config.s);
        if !(n_df <= limit && n_cf <= limit) {
            return Err(Error::BlowUp {
                t: next.t,
                reason: format!("H^s norm {:.3e} exceeds {limit:.3e}", n_df.max(n_cf)),
                last_valid: Some(Box::new(state)),
            });
        }
        if k % config.diag_stride == 0 || k == steps {
            let rec = diagnostics(dynamics, &next, config.s, None)?;
            guard(config, &rec, &next, &state)?;
            observer(&next, &rec)?;
            records.push(rec);
        }
        state = next;
    }
    Ok(EvolveOutput {
        records,
        final_state: state,
        steps,
    })
}

fn run_picard(
    config: &EvolveConfig,
    dynamics: &Dynamics,
    a0: &VectorField,
    adf_t0: Option<&VectorField>,
    observer: &mut dyn FnMut(&State, &DiagnosticsRecord) -> Result<()>,
) -> Result<EvolveOutput> {
    let sol = picard_solve(config, dynamics, a0, adf_t0, &PicardOptions::default())?;
    let mut records = Vec::new();
    let mut last = None;
    for m in 0..sol.nodes() {
        let st = sol.state_at(m);
        let rec = diagnostics(dynamics, &st, config.s, None)?;
        guard(config, &rec, &st, last.as_ref().unwrap_or(&st))?;
        observer(&st, &rec)?;
        records.push(rec);
        last = Some(st);
    }
    Ok(EvolveOutput {
        records,
        final_state: last.expect("at least one node"),
        steps: sol.nodes() - 1,
    })
}

/// Advances `state` by `steps` RK4 steps of signed size `dt` without
/// diagnostics (negative `dt` integrates backwards).
pub fn integrate(dynamics: &Dynamics, state: &State, dt: f64, steps: usize) -> Result<State> {
    let mut stepper = Rk4Stepper::new(dynamics, *state.grid(), dt);
    let mut s = state.clone();
    for _ in 0..steps {
        s = stepper.step(&s)?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests;
