use momentlab::rng::CounterRng;
use momentlab::{curve_intersections, distance_to_curve, is_tangent, solve_tangent_curve, MomentCurve, Point};

fn random_curve(s: &mut momentlab::rng::Stream, spread: f64) -> MomentCurve {
    let x: Vec<f64> = (0..3).map(|_| s.range(-spread, spread)).collect();
    MomentCurve::from_parts(&x, s.range(0.5, 2.0)).unwrap()
}

fn dense_distance(p: &Point, c: &MomentCurve, n: usize) -> f64 {
    (0..=n)
        .map(|i| c.eval(-1.0 + 2.0 * i as f64 / n as f64).dist(p))
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn distance_matches_dense_scan() {
    let rng = CounterRng::new("distance-oracle", 7);
    for i in 0..200 {
        let mut s = rng.stream(i);
        let c = random_curve(&mut s, 0.5);
        let p = Point::new((0..3).map(|_| s.range(-1.5, 1.5)).collect()).unwrap();
        let (t, dist) = distance_to_curve(&p, &c, 1e-12).unwrap();
        let scan = dense_distance(&p, &c, 200_000);
        // A dense scan can only overestimate, by at most |c'|·step/2.
        assert!(dist <= scan + 1e-12, "case {i}: {dist} > {scan}");
        assert!(scan - dist <= 1e-4, "case {i}: {dist} vs {scan}");
        assert!((c.eval(t).dist(&p) - dist).abs() < 1e-12);
    }
}

#[test]
fn intersections_lie_on_both_curves() {
    let rng = CounterRng::new("intersection-oracle", 7);
    let mut found = 0;
    for i in 0..500 {
        let mut s = rng.stream(i);
        let c1 = random_curve(&mut s, 0.25);
        // Force a common point by moving c2 onto c1(t1).
        let (t1, t2) = (s.range(-0.8, 0.8), s.range(-0.8, 0.8));
        let r2 = s.range(0.5, 2.0);
        let p = c1.eval(t1);
        let q = MomentCurve::standard(3, r2).unwrap().eval(t2);
        let x: Vec<f64> = p.coords.iter().zip(&q.coords).map(|(a, b)| a - b).collect();
        let c2 = MomentCurve::from_parts(&x, r2).unwrap();
        let rep = curve_intersections(&c1, &c2, 1e-9).unwrap();
        assert!(rep.count <= 2, "case {i}: {} points", rep.count);
        for (a, b, pt) in &rep.points {
            assert!(c1.eval(*a).dist(pt) < 1e-8 && c2.eval(*b).dist(pt) < 1e-8, "case {i}");
        }
        if (r2 - c1.scale).abs() > 1e-3 {
            assert!(rep.points.iter().any(|(a, _, _)| (a - t1).abs() < 1e-6), "case {i}: missed t1 = {t1}");
            found += 1;
        }
    }
    assert!(found > 400);
}

#[test]
fn solved_tangent_curves_are_tangent_where_built() {
    let unit = MomentCurve::standard(3, 1.0).unwrap();
    for &(t, r) in &[(0.5, 1.5), (-0.7, 0.6), (0.1, 1.9), (-0.3, 1.2)] {
        let x_last = (1.0f64 - r) * t * t * t;
        let c = solve_tangent_curve(x_last, r, 3).unwrap();
        let (tt, p) = is_tangent(&c, &unit, 1e-9).unwrap().expect("tangent");
        assert!((tt - t).abs() < 1e-6, "{tt} vs {t}");
        assert!(p.dist(&unit.eval(t)) < 1e-9);
    }
}
