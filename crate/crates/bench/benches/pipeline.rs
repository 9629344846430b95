use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use rand::SeedableRng;
use tristruct_bench::Workload;
use tristruct_core::fitting::{fit, FitConfig};
use tristruct_core::imaging::{encode_png, export_cloud};
use tristruct_core::structure::{assign, TriangularStructure};
use tristruct_core::testkit::fixtures;
use tristruct_core::testkit::oracle::{random_point, random_triangle};
use tristruct_core::IlluminantAxis;

fn geometry(c: &mut Criterion) {
    let mut rng = rand::rngs::StdRng::seed_from_u64(1);
    let pairs: Vec<_> = (0..1024).map(|_| (random_triangle(&mut rng), random_point(&mut rng))).collect();
    let mut g = c.benchmark_group("geometry");
    g.throughput(Throughput::Elements(pairs.len() as u64));
    g.bench_function("closest_point", |b| {
        b.iter(|| pairs.iter().map(|(t, p)| t.closest_point(*p).distance).sum::<f64>())
    });
    g.finish();
}

fn editing(c: &mut Criterion) {
    let w = Workload::fixture("three_materials");
    let mut g = c.benchmark_group("apply_edit");
    g.sample_size(10);
    g.throughput(Throughput::Elements(w.colors.len() as u64));
    for (name, degrees, scale) in [("identity", 0.0, 1.0), ("rotate", 40.0, 1.0), ("rotate_boost", 40.0, 1.5)]
    {
        let plan = w.plan(degrees, scale);
        g.bench_function(format!("{name}_serial"), |b| {
            b.iter(|| plan.apply_all_serial(black_box(&w.colors), &w.assignment).unwrap())
        });
        g.bench_function(format!("{name}_parallel"), |b| {
            b.iter(|| plan.apply_all(black_box(&w.colors), &w.assignment).unwrap())
        });
    }
    g.finish();
}

fn fitting(c: &mut Criterion) {
    let w = Workload::fixture("five_materials");
    let mut g = c.benchmark_group("fit");
    g.sample_size(10);
    g.throughput(Throughput::Elements(w.colors.len() as u64));
    g.bench_function("assign_k3", |b| b.iter(|| assign(black_box(&w.colors), &w.structure)));
    for stride in [1, 4] {
        let init = TriangularStructure::uniform(IlluminantAxis::gray(), 5).unwrap();
        let cfg = FitConfig { stride, ..FitConfig::default() };
        g.bench_function(format!("fit_k5_stride{stride}"), |b| {
            b.iter(|| fit(black_box(&w.colors), &init, &cfg).unwrap())
        });
    }
    g.finish();
}

fn io(c: &mut Criterion) {
    let img = fixtures::fixture("sunset_gradient").unwrap();
    let mut g = c.benchmark_group("io");
    g.sample_size(10);
    g.bench_function("encode_png", |b| b.iter(|| encode_png(black_box(&img)).unwrap()));
    g.bench_function("cloud_binary_20k", |b| {
        b.iter_batched(
            || img.clone(),
            |img| export_cloud(&img, None, 20_000).unwrap().to_binary(),
            BatchSize::LargeInput,
        )
    });
    g.finish();
}

criterion_group!(benches, geometry, editing, fitting, io);
criterion_main!(benches);
