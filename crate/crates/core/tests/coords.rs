use std::f64::consts::TAU;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use elastowave::coords::{build_map, ld4_check, pull_back, push_forward, random_field, CoordinateMap};
use elastowave::elasticity::gradient_state;
use elastowave::norms::sobolev_norm;
use elastowave::solver::DataSpec;
use elastowave::spectral::{Field, Grid};

fn map(dim: usize, n: usize, amplitude: f64, seed: u64) -> CoordinateMap<f64> {
    let grid = Grid::new(dim, n, TAU).unwrap();
    let data = DataSpec::Periodic { amplitude, velocity: amplitude, modes: 2 }.generate(&grid, seed).unwrap();
    build_map(&gradient_state(0.0, &data.u, &data.v, None).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn push_forward_preserves_l2(seed in 0u64..1000, amplitude in 0.01f64..0.1) {
        let m = map(2, 32, amplitude, seed);
        let f = random_field(m.grid(), 3, &mut ChaCha8Rng::seed_from_u64(seed));
        let bar = push_forward(&f, &m).unwrap();
        let (a, b) = (sobolev_norm(&f, 0.0), sobolev_norm(&bar, 0.0));
        prop_assert!((a - b).abs() <= 1e-6 * a, "{} vs {}", a, b);
        let back = pull_back(&bar, &m).unwrap();
        prop_assert!(back.sub(&f).unwrap().l2_norm() <= 1e-6 * a);
    }

    #[test]
    fn bumps_keep_their_mass(seed in 0u64..1000, cx in 1.0f64..5.0, cy in 1.0f64..5.0) {
        let m = map(2, 32, 0.05, seed);
        let bump = Field::scalar_fn(m.grid(), |y| (2.0 * ((y[0] - cx).cos() + (y[1] - cy).cos() - 2.0)).exp());
        let mass = |f: &Field<f64>| f.component(0).iter().sum::<f64>();
        let bar = push_forward(&bump, &m).unwrap();
        prop_assert!((mass(&bar) / mass(&bump) - 1.0).abs() <= 1e-6);
    }
}

#[test]
fn frame_ratios_are_stable_under_refinement() {
    let worst = |n: usize| {
        let m = map(2, n, 0.05, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        (0..20)
            .map(|_| {
                let r = ld4_check(&random_field(m.grid(), 4, &mut rng), &m, 0.5).unwrap();
                assert!(r.within, "{r:?}");
                r.ratio_forward.max(r.ratio_backward)
            })
            .fold(0.0, f64::max)
    };
    let (coarse, fine) = (worst(16), worst(32));
    assert!((fine / coarse - 1.0).abs() <= 0.1, "{coarse} vs {fine}");
}

#[test]
fn three_dimensional_maps_invert() {
    let m = map(3, 8, 0.05, 1);
    assert!(m.inverse_defect().unwrap() <= 1e-12);
    assert!(m.forward_defect().unwrap() <= 1e-6);
    let f = random_field(m.grid(), 2, &mut ChaCha8Rng::seed_from_u64(2));
    let bar = push_forward(&f, &m).unwrap();
    assert!((bar.l2_norm() / f.l2_norm() - 1.0).abs() <= 1e-6);
}
