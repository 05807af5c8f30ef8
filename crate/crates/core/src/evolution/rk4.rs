use super::propagator::WavePropagator;
use super::State;
use crate::dynamics::Dynamics;
use crate::error::{Error, Result};
use crate::grid::VectorField;
use crate::projections::{project_cf, project_df};

/// `(A^df, ∂_t A^df, A^cf)` in spectral form, used for stages and rates.
#[derive(Clone)]
struct Triple {
    a: VectorField,
    at: VectorField,
    c: VectorField,
}

impl Triple {
    fn axpy(&mut self, h: f64, k: &Triple) {
        self.a.axpy(h, &k.a);
        self.at.axpy(h, &k.at);
        self.c.axpy(h, &k.c);
    }

    fn plus(&self, h: f64, k: &Triple) -> Triple {
        let mut out = self.clone();
        out.axpy(h, k);
        out
    }

    fn propagated(&self, e: &WavePropagator) -> Triple {
        let mut out = self.clone();
        e.apply_in_place(&mut out.a, &mut out.at);
        out
    }
}

/// Integrating-factor (Lawson) RK4: the wave part of `A^df` is propagated
/// exactly, the bracket sources are integrated by classical RK4 in the
/// rotating frame. Reusable across steps of equal size.
pub struct Rk4Stepper<'a> {
    dynamics: &'a Dynamics,
    dt: f64,
    half: WavePropagator,
    full: WavePropagator,
    guess: Option<VectorField>,
}

impl<'a> Rk4Stepper<'a> {
    pub fn new(dynamics: &'a Dynamics, grid: crate::grid::TorusGrid, dt: f64) -> Self {
        Self {
            dynamics,
            dt,
            half: WavePropagator::new(grid, 0.5 * dt),
            full: WavePropagator::new(grid, dt),
            guess: None,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Latest curl-free velocity computed by the stepper, if any.
    pub fn last_cf_velocity(&self) -> Option<&VectorField> {
        self.guess.as_ref()
    }

    /// Stage rate, `None` when the sources vanish identically (abelian algebras).
    fn rate(&mut self, u: &Triple) -> Result<Option<Triple>> {
        if self.dynamics.algebra().is_abelian() {
            return Ok(None);
        }
        let full = &u.a + &u.c;
        let (s, w) = self.dynamics.sources(&full, &u.at, self.guess.as_ref())?;
        self.guess = Some(w.clone());
        Ok(Some(Triple {
            a: VectorField::zeros(*u.a.grid(), u.a.dim(), crate::grid::Repr::Spectral),
            at: s.scale(-1.0),
            c: w,
        }))
    }

    pub fn step(&mut self, state: &State) -> Result<State> {
        let h = self.dt;
        let s = state.spectral();
        let u = Triple {
            a: s.adf,
            at: s.adf_t,
            c: s.acf,
        };
        let plus = |base: Triple, c: f64, k: &Option<Triple>| match k {
            Some(k) => base.plus(c, k),
            None => base,
        };
        let k1 = self.rate(&u)?;
        let k2 = self.rate(&plus(u.clone(), 0.5 * h, &k1).propagated(&self.half))?;
        let u_half = u.propagated(&self.half);
        let k3 = self.rate(&plus(u_half, 0.5 * h, &k2))?;
        let u_full = u.propagated(&self.full);
        let k3p = k3.as_ref().map(|k| k.propagated(&self.half));
        let k4 = self.rate(&plus(u_full.clone(), h, &k3p))?;

        let mut next = u_full;
        if let Some(k1) = &k1 {
            next.axpy(h / 6.0, &k1.propagated(&self.full));
        }
        let mid = match (k2, k3) {
            (Some(mut a), Some(b)) => {
                a.axpy(1.0, &b);
                Some(a)
            }
            (a, b) => a.or(b),
        };
        if let Some(mid) = &mid {
            next.axpy(h / 3.0, &mid.propagated(&self.half));
        }
        if let Some(k4) = &k4 {
            next.axpy(h / 6.0, k4);
        }

        let out = State::new(
            state.t + h,
            project_df(&next.a),
            project_df(&next.at),
            project_cf(&next.c),
        );
        if !out.is_finite() {
            return Err(Error::BlowUp {
                t: out.t,
                reason: "non-finite values after RK4 step".into(),
                last_valid: Some(Box::new(state.clone())),
            });
        }
        Ok(out)
    }
}

/// A single integrating-factor RK4 step of size `dt` (negative steps integrate backwards).
pub fn rk4_step(dynamics: &Dynamics, state: &State, dt: f64) -> Result<State> {
    Rk4Stepper::new(dynamics, *state.adf.grid(), dt).step(state)
}
