use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use driftlab::fixtures::build_fixture;
use driftlab::generator::{class_drift_from, covariate_drift_from, generate_stream, CovariateSearch};
use driftlab::harness::{prequential_evaluate, IncrementalNaiveBayes, LookupTableClassifier};
use driftlab::measures::path_length;
use driftlab::taxonomy::classify_trajectory;
use driftlab::{
    AttributeSchema, ConceptTrajectory, DistanceFunction, DriftKind, DriftSpec, JointConcept, Law, PiecewiseLinear,
    Segment,
};

fn concepts() -> (JointConcept, JointConcept) {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let schema = AttributeSchema::benchmark();
    (JointConcept::sample(&schema, &mut rng), JointConcept::sample(&schema, &mut rng))
}

fn distances(c: &mut Criterion) {
    let (a, b) = concepts();
    let mut g = c.benchmark_group("distance");
    for d in DistanceFunction::ALL {
        g.bench_function(d.id(), |bench| bench.iter(|| d.distance(black_box(&a), black_box(&b)).unwrap()));
    }
    g.finish();
}

fn generation(c: &mut Criterion) {
    let (base, _) = concepts();
    let mut g = c.benchmark_group("generate");
    g.bench_function("class-drift-pair", |bench| {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        bench.iter(|| class_drift_from(&base, 0.5, &mut rng).unwrap())
    });
    g.bench_function("covariate-drift-pair", |bench| {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let search = CovariateSearch::default();
        bench.iter(|| covariate_drift_from(&base, 0.3, &mut rng, &search).unwrap())
    });
    g.sample_size(20);
    g.bench_function("stream-30000", |bench| {
        let spec = DriftSpec {
            kind: DriftKind::PureClass,
            ..DriftSpec::default()
        };
        bench.iter(|| generate_stream(&spec).unwrap())
    });
    g.finish();
}

fn measures(c: &mut Criterion) {
    let (a, b) = concepts();
    let tr = ConceptTrajectory::new(vec![Segment::new(
        0.0,
        100.0,
        Law::Mixture {
            from: a,
            to: b,
            weight: PiecewiseLinear::linear(),
        },
    )])
    .unwrap();
    let mut g = c.benchmark_group("measure");
    g.sample_size(20);
    g.bench_function("path-length-1024", |bench| {
        bench.iter(|| path_length(&tr, 0.0, 100.0, DistanceFunction::HellingerJoint, 1024).unwrap())
    });
    let f = build_fixture("cyclical-seasons").unwrap();
    g.bench_function("classify-cyclical-seasons", |bench| {
        bench.iter(|| classify_trajectory(&f.trajectory, f.distance, &f.params, 1024, 1.0).unwrap())
    });
    g.finish();
}

fn evaluation(c: &mut Criterion) {
    let (records, truth) = generate_stream(&DriftSpec::default()).unwrap();
    let schema = *truth.trajectory.schema();
    let mut g = c.benchmark_group("prequential-30000");
    g.sample_size(20);
    g.bench_function("naive-bayes", |bench| {
        bench.iter_batched(
            || IncrementalNaiveBayes::new(schema, 1.0).unwrap(),
            |mut l| prequential_evaluate(&mut l, &records, 1000).unwrap(),
            BatchSize::SmallInput,
        )
    });
    g.bench_function("lookup-table", |bench| {
        bench.iter_batched(
            || LookupTableClassifier::new(schema),
            |mut l| prequential_evaluate(&mut l, &records, 1000).unwrap(),
            BatchSize::SmallInput,
        )
    });
    g.finish();
}

criterion_group!(benches, distances, generation, measures, evaluation);
criterion_main!(benches);
