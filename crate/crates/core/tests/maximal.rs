use momentlab::calibration::calibration;
use momentlab::field::{tube_indicator_field, union_set_bounds, union_set_field, Grid, ScalarField, UnionConfig};
use momentlab::maximal::{maximal_value, tube_average, MaximalConfig, ParamGrid};
use momentlab::rng::CounterRng;
use momentlab::tube::neighborhood_bounds;
use momentlab::MomentCurve;
use proptest::prelude::*;

const DELTA: f64 = 0.25;

fn grid() -> Grid {
    Grid::cube(3, 1.0, DELTA / 2.0).unwrap()
}

fn exhaustive(s: usize) -> MaximalConfig {
    let mut cfg = MaximalConfig::new(3, s, DELTA, ParamGrid::fixed(vec![0.0; 3 - s], &[0.75])).unwrap();
    cfg.coarse_factor = 1;
    cfg
}

fn field(vals: &[f64]) -> ScalarField {
    ScalarField::dense(grid(), vals.to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn maximal_value_is_monotone_and_homogeneous(
        base in prop::collection::vec(0.0f64..1.0, 4096),
        extra in prop::collection::vec(0.0f64..1.0, 4096),
        lambda in 0.1f64..10.0,
        s in 1usize..=3,
    ) {
        let cfg = exhaustive(s);
        let node = &cfg.params.samples[0];
        let f = field(&base);
        let g = field(&base.iter().zip(&extra).map(|(a, b)| a + b).collect::<Vec<_>>());
        let mf = maximal_value(&f, node, &cfg).unwrap();
        prop_assert!(mf <= maximal_value(&g, node, &cfg).unwrap() + 1e-12);
        let scaled = maximal_value(&f.scaled(lambda).unwrap(), node, &cfg).unwrap();
        prop_assert!((scaled - lambda * mf).abs() <= 1e-9 * (1.0 + lambda * mf));
    }
}

#[test]
fn constant_fields_average_to_the_constant() {
    let f = ScalarField::constant(Grid::cube(3, 2.0, 1.0 / 32.0).unwrap(), 3.5).unwrap();
    let c = MomentCurve::standard(3, 1.0).unwrap();
    assert!((tube_average(&f, &c, 1.0 / 16.0).unwrap() - 3.5).abs() < 1e-12);
}

#[test]
fn union_net_covers_every_family_curve() {
    let delta = 1.0 / 16.0;
    let cfg = UnionConfig::default();
    for s_prime in 1..=3 {
        let (lo, hi) = union_set_bounds(s_prime, 3, delta, &cfg).unwrap();
        let f = union_set_field(s_prime, delta, &Grid::with_spacing(lo, hi, delta / 2.0).unwrap(), &cfg).unwrap();
        let rng = CounterRng::new("net-cover", s_prime as u64);
        for i in 0..2000 {
            let mut s = rng.stream(i);
            let mut x = vec![0.0; 3];
            for v in &mut x[4 - s_prime..] {
                *v = s.range(-0.25, 0.25);
            }
            let c = MomentCurve::from_parts(&x, s.range(0.5, 2.0)).unwrap();
            let p = c.eval(s.range(-1.0, 1.0));
            assert_eq!(f.value_at(&p.coords), 1.0, "s' = {s_prime}: {p:?} on {c:?}");
        }
    }
}

#[test]
fn maximal_values_are_stable_under_grid_refinement() {
    let delta = 1.0 / 16.0;
    let cfg = UnionConfig::default();
    let (lo, hi) = union_set_bounds(1, 3, delta, &cfg).unwrap();
    let nodes = ParamGrid::fixed(vec![], &[0.7, 1.1, 1.6]);
    let mc = MaximalConfig::new(3, 3, delta, nodes).unwrap();
    let at = |h: f64| -> Vec<f64> {
        let f = union_set_field(1, delta, &Grid::with_spacing(lo.clone(), hi.clone(), h).unwrap(), &cfg).unwrap();
        mc.params.samples.iter().map(|p| maximal_value(&f, p, &mc).unwrap()).collect()
    };
    let (a, b) = (at(delta / 2.0), at(delta / 3.0));
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 0.1, "{a:?} vs {b:?}");
    }
}

#[test]
fn nearby_parameters_give_comparable_averages() {
    let bound = calibration().neighborhood;
    let rng = CounterRng::new("neighborhood-check", 11);
    for i in 0..12 {
        let mut s = rng.stream(i);
        let delta = 1.0 / 32.0;
        let x: Vec<f64> = (0..3).map(|_| s.range(-0.25, 0.25)).collect();
        let c = MomentCurve::from_parts(&x, s.range(0.5, 2.0)).unwrap();
        let (lo, hi) = neighborhood_bounds(&c, 5.0 * delta);
        let f = tube_indicator_field(&c, 2.0 * delta, &Grid::with_spacing(lo, hi, delta / 2.0).unwrap()).unwrap();
        let mut p = c.params();
        let v: Vec<f64> = (0..4).map(|_| s.normal()).collect();
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        for (a, b) in p.iter_mut().zip(&v) {
            *a += delta * b / n;
        }
        let moved = MomentCurve::from_parts(&p[..3], p[3]).unwrap();
        let (a, b) = (tube_average(&f, &c, delta).unwrap(), tube_average(&f, &moved, delta).unwrap());
        assert!(a / b <= bound && b / a <= bound, "case {i}: {a} vs {b}");
    }
}
