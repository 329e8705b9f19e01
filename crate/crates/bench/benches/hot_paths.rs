use criterion::{black_box, criterion_group, criterion_main, Criterion};
use npvo_core::model_check::{run_sprt, SprtConfig};
use npvo_core::nn::{compute_gradients, CellKind, Masks, WeightSet};
use npvo_core::npvo::{build_multi_agent_npvo, find_safe_velocity, VelocityQuery};
use npvo_core::predictor::{
    predict_obstacle_motion, train_network_online, MotionPredictor, ObservationHistory,
    OnlinePredictor, PredictorConfig,
};
use npvo_core::rng::seeded;
use npvo_core::Vec2;

fn zigzag(n: usize) -> ObservationHistory {
    let mut p = Vec2::ZERO;
    let mut positions = vec![p];
    for i in 0..n {
        p += Vec2::new(0.25, if (i / 4) % 2 == 0 { 0.2 } else { -0.2 });
        positions.push(p);
    }
    ObservationHistory::new(positions, 0.5).unwrap()
}

fn gradients(c: &mut Criterion) {
    let inputs: Vec<Vec<f64>> = (0..30)
        .map(|i| vec![0.1 * (i as f64).sin(), 0.05])
        .collect();
    let targets: Vec<Vec<f64>> = (0..10)
        .map(|i| vec![0.1 * (i as f64).cos(), 0.05])
        .collect();
    for kind in [CellKind::Lstm, CellKind::Rnn] {
        let ws = WeightSet::init(kind, 2, 20, &mut seeded(0));
        c.bench_function(&format!("gradients_{kind:?}_h20_len30"), |b| {
            b.iter(|| {
                compute_gradients(black_box(&inputs), &targets, &ws, &Masks::None, 1.0).unwrap()
            })
        });
    }
}

fn training_and_prediction(c: &mut Criterion) {
    let history = zigzag(50);
    let cfg = PredictorConfig::default();
    c.bench_function("train_online_100_iterations", |b| {
        b.iter(|| train_network_online(black_box(&history), &cfg, None, &mut seeded(1)).unwrap())
    });
    let net = train_network_online(&history, &cfg, None, &mut seeded(1)).unwrap();
    c.bench_function("predict_30_dropout_samples", |b| {
        b.iter(|| {
            predict_obstacle_motion(
                black_box(&history),
                &net.weights,
                &cfg,
                0.95,
                &mut seeded(2),
            )
            .unwrap()
        })
    });
}

fn velocity_selection(c: &mut Criterion) {
    let history = zigzag(40);
    let mut predictor = OnlinePredictor::new(PredictorConfig::default()).unwrap();
    let prediction = predictor
        .predict(&history, 0.95, &mut seeded(3))
        .unwrap()
        .unwrap();
    let offsets = [
        Vec2::new(4.0, 0.0),
        Vec2::new(3.0, 2.0),
        Vec2::new(5.0, -1.5),
    ];
    let predictions: Vec<_> = offsets
        .iter()
        .map(|o| prediction.translated(*o - history.last()))
        .collect();
    let npvo = build_multi_agent_npvo(&predictions, Vec2::ZERO, 0.5, 0.5).unwrap();
    let query = VelocityQuery::new(Vec2::new(1.0, 0.0), 1.5).unwrap();
    c.bench_function("find_safe_velocity_3_obstacles", |b| {
        b.iter(|| find_safe_velocity(black_box(&query), &npvo))
    });
}

fn sprt(c: &mut Criterion) {
    let cfg = SprtConfig::new(0.8);
    c.bench_function("sprt_all_successes", |b| {
        b.iter(|| run_sprt(|| Ok(true), black_box(&cfg)).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = gradients, training_and_prediction, velocity_selection, sprt
}
criterion_main!(benches);
