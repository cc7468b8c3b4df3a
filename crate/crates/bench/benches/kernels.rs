use criterion::{criterion_group, criterion_main, Criterion};
use momentlab::field::{union_set_bounds, union_set_field, Grid, UnionConfig};
use momentlab::maximal::{maximal_value, MaximalConfig, ParamGrid};
use momentlab::multiplier::{bernstein_check, build_cutoffs, default_kappa, oscillatory_integral};
use momentlab::{intersection_volume, is_tangent, solve_tangent_curve, tube_volume, MomentCurve};
use std::hint::black_box;

fn geometry(c: &mut Criterion) {
    let unit = MomentCurve::standard(3, 1.0).unwrap();
    let other = solve_tangent_curve(-0.25 * 0.125, 1.25, 3).unwrap();
    c.bench_function("is_tangent", |b| b.iter(|| is_tangent(black_box(&other), &unit, 1e-6).unwrap()));
    c.bench_function("tube_volume_1e5", |b| b.iter(|| tube_volume(&unit, black_box(1.0 / 32.0), 100_000, 1).unwrap()));
    let wide = MomentCurve::standard(3, 1.5).unwrap();
    c.bench_function("intersection_volume_1e5", |b| {
        b.iter(|| intersection_volume(&unit, &wide, black_box(1.0 / 32.0), 100_000, 1).unwrap())
    });
}

fn fields(c: &mut Criterion) {
    let delta = 1.0 / 32.0;
    let cfg = UnionConfig::default();
    let (lo, hi) = union_set_bounds(1, 3, delta, &cfg).unwrap();
    let g = Grid::with_spacing(lo, hi, delta / 2.0).unwrap();
    c.bench_function("union_field_s1", |b| b.iter(|| union_set_field(1, black_box(delta), &g, &cfg).unwrap()));
    let f = union_set_field(1, delta, &g, &cfg).unwrap();
    let mc = MaximalConfig::new(3, 3, delta, ParamGrid::fixed(vec![], &[1.0])).unwrap();
    let node = mc.params.samples[0].clone();
    c.bench_function("maximal_value_node", |b| b.iter(|| maximal_value(&f, black_box(&node), &mc).unwrap()));
}

fn multiplier(c: &mut Criterion) {
    let cut = build_cutoffs(3, default_kappa(3)).unwrap();
    c.bench_function("oscillatory_integral", |b| {
        b.iter(|| oscillatory_integral(black_box(&[54.0 * 16.0, 0.0, -16.0]), 0.5, &cut).unwrap())
    });
    c.bench_function("bernstein_s2_r16", |b| b.iter(|| bernstein_check(2, black_box(16.0), 2.0, 1, 1).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = geometry, fields, multiplier
}
criterion_main!(benches);
