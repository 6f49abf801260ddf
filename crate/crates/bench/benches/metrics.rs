use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use vesseltop::morphology::Normalization;
use vesseltop::{cl_x_dice, edt, paired_bundles, skeletonize, VariantSpec};
use vesseltop_bench::tube_pair;

fn distance_and_skeleton(c: &mut Criterion) {
    let mut g = c.benchmark_group("morphology");
    for (n, vol) in [(64, false), (256, false), (48, true)] {
        let (_, mask) = tube_pair(n, vol);
        let id = format!("{}{}", n, if vol { "^3/8" } else { "^2" });
        g.bench_with_input(BenchmarkId::new("edt", &id), &mask, |b, m| b.iter(|| edt(black_box(m))));
        g.bench_with_input(BenchmarkId::new("skeletonize", &id), &mask, |b, m| {
            b.iter(|| skeletonize(black_box(m)))
        });
    }
    g.finish();
}

fn cl_x(c: &mut Criterion) {
    let (pred, reference) = tube_pair(128, false);
    let (bp, bl) = paired_bundles(&pred, &reference, Normalization::PerMask).unwrap();
    let mut g = c.benchmark_group("cl_x_dice");
    for name in ["clDice", "cbDice"] {
        let spec = VariantSpec::parse(name, 2).unwrap();
        g.bench_function(name, |b| b.iter(|| cl_x_dice(&spec, black_box(&bp), black_box(&bl)).unwrap()));
    }
    g.bench_function("bundles", |b| {
        b.iter(|| paired_bundles(black_box(&pred), black_box(&reference), Normalization::PerMask).unwrap())
    });
    g.finish();
}

criterion_group!(benches, distance_and_skeleton, cl_x);
criterion_main!(benches);
