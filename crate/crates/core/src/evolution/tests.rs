use super::*;
use crate::grid::sampling::{random_vector, with_sobolev_norm};
use crate::lie::StructureTensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn data(grid: &TorusGrid, dim: usize, eps: f64, seed: u64) -> (VectorField, VectorField) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = with_sobolev_norm(&project_df(&random_vector(grid, dim, 3, &mut rng)), 0.8, eps);
    let at = with_sobolev_norm(&project_df(&random_vector(grid, dim, 3, &mut rng)), -0.2, eps);
    (a, at)
}

fn config(n: usize, t_end: f64, dt: f64) -> EvolveConfig {
    EvolveConfig {
        n,
        t_end,
        dt,
        diag_stride: 5,
        ..EvolveConfig::default()
    }
}

#[test]
fn config_validation() {
    assert!(EvolveConfig::default().validate().is_ok());
    let low_s = EvolveConfig { s: 0.75, ..EvolveConfig::default() };
    match low_s.validate() {
        Err(Error::Configuration(m)) => assert!(m.contains("s > 3/4")),
        other => panic!("{other:?}"),
    }
    assert!(EvolveConfig { dt: 0.2, ..EvolveConfig::default() }.validate().is_err());
    assert!(EvolveConfig { n: 24, ..EvolveConfig::default() }.validate().is_err());
    let parsed: EvolveConfig = serde_json::from_str(r#"{"scheme": "picard", "n": 16}"#).unwrap();
    assert_eq!(parsed.scheme, Scheme::Picard);
    assert_eq!(parsed.dt, 1e-3);
    assert!(serde_json::from_str::<EvolveConfig>(r#"{"bogus": 1}"#).is_err());
    let c = EvolveConfig { t_end: 1.0, dt: 0.3, ..EvolveConfig::default() };
    assert_eq!(c.steps().0, 4);
    assert!((c.steps().1 - 0.25).abs() < 1e-15);
}

#[test]
fn zero_data_gives_zero_diagnostics() {
    let g = TorusGrid::standard(16).unwrap();
    let dynamics = Dynamics::new(StructureTensor::su2());
    let a0 = VectorField::zeros(g, 3, Repr::Spectral);
    let out = evolve(&config(16, 0.1, 0.01), &dynamics, &a0, None).unwrap();
    assert!(out.records.len() >= 2);
    for r in &out.records {
        assert_eq!(r.gauss_residual, 0.0);
        assert_eq!(r.hs_adf, 0.0);
        assert_eq!(r.hamiltonian, 0.0);
    }
    assert_eq!(out.final_state.adf.max_abs(), 0.0);
}

#[test]
fn abelian_evolution_is_the_linear_flow() {
    let g = TorusGrid::standard(16).unwrap();
    let dynamics = Dynamics::new(StructureTensor::abelian(2));
    let (a0, at0) = data(&g, 2, 1e-2, 1);
    let cfg = config(16, 0.5, 0.01);
    let out = evolve(&cfg, &dynamics, &a0, Some(&at0)).unwrap();
    let (exact, _) = linear_propagator(&a0, &at0, 0.5);
    let err = (&out.final_state.adf - &exact).sobolev_norm(0.8);
    assert!(err < 1e-13, "{err}");
    assert!(out.records.iter().all(|r| r.gauss_residual <= 1e-12));
}

#[test]
fn su2_step_keeps_constraints_and_reverses() {
    let g = TorusGrid::standard(16).unwrap();
    let dynamics = Dynamics::new(StructureTensor::su2());
    let (a0, at0) = data(&g, 3, 5e-2, 2);
    let (st, _) = initial_state(&dynamics, &a0, Some(&at0)).unwrap();
    let fwd = integrate(&dynamics, &st, 0.01, 20).unwrap();
    let rec = diagnostics(&dynamics, &fwd, 0.8, None).unwrap();
    assert!(rec.gauss_residual < 1e-8, "{}", rec.gauss_residual);
    assert!(rec.div_df_residual < 1e-12 && rec.curl_cf_residual < 1e-12);
    let back = integrate(&dynamics, &fwd, -0.01, 20).unwrap();
    let err = (&back.adf - &st.adf).sobolev_norm(0.8) + (&back.acf - &st.acf).sobolev_norm(0.8);
    assert!(err < 1e-9, "{err}");
}

#[test]
fn precondition_on_data_size() {
    let g = TorusGrid::standard(16).unwrap();
    let dynamics = Dynamics::new(StructureTensor::su2());
    let (a0, _) = data(&g, 3, 0.5, 3);
    assert!(matches!(
        evolve(&config(16, 0.1, 0.01), &dynamics, &a0, None),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn blow_up_is_reported_with_last_state() {
    let g = TorusGrid::standard(16).unwrap();
    let dynamics = Dynamics::new(StructureTensor::abelian(1));
    let (a0, at0) = data(&g, 1, 1e-2, 4);
    // Velocity much larger than the data bound drives the norm past the limit.
    let cfg = EvolveConfig { blowup_factor: 1.5, ..config(16, 1.0, 0.01) };
    match evolve(&cfg, &dynamics, &a0, Some(&at0.scale(50.0))) {
        Err(Error::BlowUp { last_valid, .. }) => assert!(last_valid.is_some()),
        other => panic!("{other:?}"),
    }
}

#[test]
fn observer_sees_every_record() {
    let g = TorusGrid::standard(16).unwrap();
    let dynamics = Dynamics::new(StructureTensor::su2());
    let (a0, at0) = data(&g, 3, 1e-2, 5);
    let mut seen = 0;
    let out = evolve_observed(&config(16, 0.1, 0.01), &dynamics, &a0, Some(&at0), &mut |_, _| {
        seen += 1;
        Ok(())
    })
    .unwrap();
    assert_eq!(seen, out.records.len());
    assert_eq!(out.records.len(), 3);
}

#[test]
fn picard_trivial_cases() {
    let g = TorusGrid::standard(16).unwrap();
    let cfg = EvolveConfig { n: 16, t_end: 0.2, ..EvolveConfig::default() };
    let su2 = Dynamics::new(StructureTensor::su2());
    let zero = VectorField::zeros(g, 3, Repr::Spectral);
    let sol = picard_solve(&cfg, &su2, &zero, None, &PicardOptions::default()).unwrap();
    assert_eq!(sol.iterations(), 1);

    let abelian = Dynamics::new(StructureTensor::abelian(2));
    let (a0, at0) = data(&g, 2, 1e-2, 6);
    let sol = picard_solve(&cfg, &abelian, &a0, Some(&at0), &PicardOptions::default()).unwrap();
    assert_eq!(sol.iterations(), 2);
    let last = sol.state_at(sol.nodes() - 1);
    let (exact, _) = linear_propagator(&a0, &at0, 0.2);
    assert!((&last.adf - &exact).sobolev_norm(0.8) < 1e-14);
}

#[test]
fn picard_contracts_and_matches_rk4() {
    let g = TorusGrid::standard(16).unwrap();
    let cfg = EvolveConfig { n: 16, t_end: 0.3, dt: 0.005, ..EvolveConfig::default() };
    let su2 = Dynamics::new(StructureTensor::su2());
    let (a0, at0) = data(&g, 3, 1e-2, 7);
    let sol = picard_solve(&cfg, &su2, &a0, Some(&at0), &PicardOptions::default()).unwrap();
    assert!(sol.ratios().iter().skip(1).all(|r| *r <= 0.5), "{:?}", sol.differences);
    let (st, _) = initial_state(&su2, &a0, Some(&at0)).unwrap();
    let rk = integrate(&su2, &st, 0.005, 60).unwrap();
    let pic = sol.state_at(sol.nodes() - 1);
    let err = (&rk.adf - &pic.adf).sobolev_norm(0.8) + (&rk.acf - &pic.acf).sobolev_norm(0.8);
    assert!(err < 1e-8, "{err}");
}
