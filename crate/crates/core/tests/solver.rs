use std::f64::consts::TAU;

use elastowave::norms::sobolev_norm;
use elastowave::solver::{
    continuous_dependence, critical_exponents, validate_regularity, DataSpec, DuhamelRule, PicardMap, PicardSettings,
    Stepper, StepperSettings, StepperState, TheoremMode,
};
use elastowave::spectral::{wave_propagator, Field, Grid, Rank, TimeWindow};
use elastowave::Error;

fn grid(n: usize) -> Grid<f64> {
    Grid::new(2, n, TAU).unwrap()
}

fn settings(dt: f64) -> StepperSettings<f64> {
    StepperSettings { dt, pressure_tol: 1e-13, implicit_tol: 1e-14, det_budget: 1.0, record_every: 1, s: 1.6, nonlinear: true }
}

fn picard(t: f64, samples: usize) -> PicardSettings<f64> {
    PicardSettings {
        window: TimeWindow::new(-4.0, 8.0, samples).unwrap(),
        existence_time: t,
        s: 1.6,
        theta: 0.6,
        max_iters: 30,
        contraction_tol: 1e-10,
        pressure_tol: 1e-11,
        duhamel: DuhamelRule::Spectral,
    }
}

fn periodic(amplitude: f64) -> DataSpec {
    DataSpec::Periodic { amplitude, velocity: amplitude, modes: 2 }
}

fn rel(a: &Field<f64>, b: &Field<f64>, s: f64) -> f64 {
    sobolev_norm(&a.sub(b).unwrap(), s) / sobolev_norm(b, s).max(1e-300)
}

#[test]
fn exponent_table() {
    assert_eq!(critical_exponents(2).unwrap(), (1.0, 1.75));
    assert_eq!(critical_exponents(3).unwrap(), (1.5, 2.0));
    assert!(critical_exponents(4).is_err());
    assert!(validate_regularity(2, 1.6, TheoremMode::Rough).is_ok());
    assert!(validate_regularity(2, 1.5, TheoremMode::Rough).is_err());
    assert!(validate_regularity(2, 1.8, TheoremMode::Rough).is_err());
    // (n+1)/2 = s_0 in three dimensions leaves the rough range empty
    assert!(validate_regularity(3, 2.0, TheoremMode::Rough).is_err());
    assert!(validate_regularity(3, 2.1, TheoremMode::Smooth).is_ok());
    assert!(validate_regularity(2, 1.01, TheoremMode::SmallData { eta: 0.1 }).is_ok());
    assert!(validate_regularity(2, 1.0, TheoremMode::SmallData { eta: 0.1 }).is_err());
}

#[test]
fn zero_data_stays_zero() {
    let g = grid(16);
    let data = DataSpec::Zero.generate(&g, 0).unwrap();
    let run = Stepper::new(&g, settings(0.05)).unwrap().run(StepperState::new(0.0, &data.u, &data.v).unwrap(), 5);
    assert!(run.abort.is_none());
    for r in &run.record.rows {
        assert!(r.values()[1..].iter().all(|&v| v == 0.0));
    }
    let p = PicardMap::new(&g, picard(0.5, 64), &data).unwrap().solve().unwrap();
    assert_eq!(p.iterations, 1);
    assert!(p.u.iter().all(|u| u.max_abs() == 0.0));
}

#[test]
fn linear_stepper_is_the_propagator() {
    let g = grid(16);
    let data = periodic(0.1).generate(&g, 4).unwrap();
    let mut st = settings(0.05);
    st.nonlinear = false;
    let run = Stepper::new(&g, st).unwrap().run(StepperState::new(0.0, &data.u, &data.v).unwrap(), 20);
    let (u, v) = wave_propagator(&data.u, &data.v, 1.0).unwrap();
    assert!(rel(&run.last.u, &u, 0.0) <= 1e-10);
    assert!(rel(&run.last.v, &v, 0.0) <= 1e-10);
}

#[test]
fn stepper_keeps_g_compatible() {
    let g = grid(32);
    let data = periodic(0.1).generate(&g, 2).unwrap();
    let run = Stepper::new(&g, settings(0.02)).unwrap().run(StepperState::new(0.0, &data.u, &data.v).unwrap(), 25);
    assert!(run.abort.is_none());
    let worst = run.record.rows.iter().map(|r| r.compatibility).fold(0.0, f64::max);
    assert!(worst <= 1e-8, "{worst:e}");
}

#[test]
fn flipping_the_velocity_reverses_time() {
    let g = grid(16);
    let data = periodic(0.1).generate(&g, 7).unwrap();
    let stepper = Stepper::new(&g, settings(0.025)).unwrap();
    let fwd = stepper.run(StepperState::new(0.0, &data.u, &data.v).unwrap(), 20).last;
    let back = stepper.run(StepperState::new(0.0, &fwd.u, &fwd.v.scale(-1.0)).unwrap(), 20).last;
    assert!(rel(&back.u, &data.u, 2.6) <= 1e-8, "{:e}", rel(&back.u, &data.u, 2.6));
    assert!(rel(&back.v.scale(-1.0), &data.v, 1.6) <= 1e-8);
}

#[test]
fn shear_manufactured_solution_converges_at_second_order() {
    // U* = (a (1 + t^2) sin 2y_2, 0) is a shear, so the pressure source vanishes
    // and the defect of U_tt - Delta U is a (2 + 4 (1 + t^2)) sin 2y_2
    let a = 0.1;
    let g = grid(16);
    let exact = |t: f64| Field::from_fn(&g, Rank::Vector, |y| vec![a * (1.0 + t * t) * (2.0 * y[1]).sin(), 0.0]);
    let u0 = exact(0.0);
    let v0 = Field::zeros(&g, Rank::Vector);
    let errs: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&dt| {
            let gr = g.clone();
            let src = move |t: f64| Ok(Field::from_fn(&gr, Rank::Vector, |y| vec![a * (6.0 + 4.0 * t * t) * (2.0 * y[1]).sin(), 0.0]));
            let st = Stepper::new(&g, settings(dt)).unwrap().with_source(Box::new(src));
            let run = st.run(StepperState::new(0.0, &u0, &v0).unwrap(), (1.0 / dt).round() as usize);
            assert!(run.abort.is_none());
            assert!((run.last.t - 1.0).abs() < 1e-12);
            rel(&run.last.u, &exact(1.0), 2.6)
        })
        .collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 2.0).abs() <= 0.1, "errors {errs:?}");
    }
}

#[test]
fn nonlinear_stepper_self_converges_at_second_order() {
    let g = grid(16);
    let data = periodic(0.1).generate(&g, 3).unwrap();
    let end = |dt: f64| {
        let run = Stepper::new(&g, settings(dt)).unwrap().run(StepperState::new(0.0, &data.u, &data.v).unwrap(), (0.8 / dt).round() as usize);
        run.last.u
    };
    let (a, b, c) = (end(0.1), end(0.05), end(0.025));
    let ratio = sobolev_norm(&a.sub(&b).unwrap(), 2.6) / sobolev_norm(&b.sub(&c).unwrap(), 2.6);
    assert!((ratio.log2() - 2.0).abs() <= 0.15, "ratio {ratio}");
}

#[test]
fn dependence_constant_is_stable() {
    let g = grid(16);
    let mut st = settings(0.05);
    st.record_every = 5;
    let rep = continuous_dependence(&periodic(0.1), &g, 5, 1.6, &st, 20, &[1e-3, 1e-4, 1e-5]).unwrap();
    assert!(rep.spread() <= 1.05, "{:?}", rep.constants);
    assert!(continuous_dependence(&DataSpec::Zero, &g, 5, 1.6, &st, 2, &[1e-3]).is_err());
}

#[test]
fn smaller_data_contracts_faster() {
    let g = grid(16);
    let worst = |amp: f64| {
        let data = periodic(amp).generate(&g, 1).unwrap();
        let run = PicardMap::new(&g, picard(0.5, 128), &data).unwrap().solve().unwrap();
        run.factors.iter().copied().fold(0.0, f64::max)
    };
    let (big, small) = (worst(0.1), worst(0.05));
    assert!(small < big, "{small} vs {big}");
    assert!(big <= 0.5);
}

#[test]
fn large_data_is_refused() {
    let g = grid(16);
    let data = DataSpec::Periodic { amplitude: 0.1, velocity: 4.0, modes: 2 }.generate(&g, 1).unwrap();
    match PicardMap::new(&g, picard(0.9, 128), &data).unwrap().solve() {
        Err(e @ Error::NonContraction { .. }) => {
            let msg = e.to_string();
            assert!(msg.contains("reduce T or the data size"), "{msg}");
        }
        other => panic!("expected a non-contraction error, got {:?}", other.map(|r| r.factors)),
    }
}
