use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc};
use std::time::{Duration, Instant};

use npvo_core::nn::{AdamState, CellKind, WeightSet};
use npvo_core::predictor::{ObservationHistory, PredictorConfig, TrainedNetwork};
use npvo_core::rng::seeded;
use npvo_core::runtime::{predict_with_snapshot, SnapshotCell, TrainingWorker, WeightSnapshot};
use npvo_core::{Error, Vec2};

/// A network whose every parameter equals `tag`, so torn reads are visible.
fn tagged(tag: f64) -> TrainedNetwork {
    let mut w = WeightSet::zeros(CellKind::Lstm, 2, 8);
    for t in w.tensors_mut() {
        t.fill(tag);
    }
    let optimizer = AdamState::new(&w);
    TrainedNetwork {
        weights: w,
        optimizer,
    }
}

fn snapshot(version: u64) -> WeightSnapshot {
    WeightSnapshot {
        network: tagged(version as f64),
        version,
        history_len: 0,
        epochs: version,
    }
}

fn history(n: usize) -> ObservationHistory {
    ObservationHistory::from_deltas(Vec2::ZERO, &vec![Vec2::new(0.1, 0.05); n], 0.5).unwrap()
}

#[test]
fn initial_snapshot_is_version_zero() {
    let cell = SnapshotCell::new(tagged(0.0));
    assert_eq!(cell.latest().version, 0);
}

#[test]
fn versions_must_increase() {
    let cell = SnapshotCell::new(tagged(0.0));
    cell.publish(snapshot(1)).unwrap();
    cell.publish(snapshot(2)).unwrap();
    assert_eq!(cell.latest().version, 2);
    assert!(matches!(
        cell.publish(snapshot(2)),
        Err(Error::StaleSnapshot {
            offered: 2,
            current: 2
        })
    ));
    assert!(cell.publish(snapshot(1)).is_err());
}

#[test]
fn concurrent_readers_see_whole_monotone_snapshots() {
    let cell = Arc::new(SnapshotCell::new(tagged(0.0)));
    let done = Arc::new(AtomicBool::new(false));
    let readers: Vec<_> = (0..3)
        .map(|_| {
            let cell = Arc::clone(&cell);
            let done = Arc::clone(&done);
            std::thread::spawn(move || {
                let mut last = 0;
                let mut reads = 0u64;
                while !done.load(Ordering::Acquire) || reads < 1000 {
                    let s = cell.latest();
                    assert!(
                        s.version >= last,
                        "version went back from {last} to {}",
                        s.version
                    );
                    let tag = s.version as f64;
                    assert!(
                        s.network.weights.flatten().iter().all(|&x| x == tag),
                        "torn snapshot"
                    );
                    last = s.version;
                    reads += 1;
                }
                let s = cell.latest();
                assert!(s.version >= last);
                s.version
            })
        })
        .collect();
    for v in 1..=1000 {
        cell.publish(snapshot(v)).unwrap();
        if v % 50 == 0 {
            std::thread::yield_now();
        }
    }
    done.store(true, Ordering::Release);
    for r in readers {
        assert_eq!(r.join().unwrap(), 1000);
    }
}

#[test]
fn prediction_latency_ignores_a_stalled_trainer() {
    let (started_tx, started_rx) = mpsc::channel();
    let worker = TrainingWorker::spawn_with(
        tagged(0.0),
        Box::new(move |_, net| {
            let _ = started_tx.send(());
            std::thread::sleep(Duration::from_millis(300));
            Ok(net)
        }),
    );
    let timed = |n: usize| {
        let mut worst = Duration::ZERO;
        for _ in 0..n {
            let t = Instant::now();
            std::hint::black_box(worker.latest());
            worst = worst.max(t.elapsed());
        }
        worst
    };
    let idle = timed(2000);
    worker.submit(history(5));
    started_rx.recv().unwrap();
    let t = Instant::now();
    let stalled = timed(2000);
    assert!(
        t.elapsed() < Duration::from_millis(300),
        "reads waited for training"
    );
    assert_eq!(worker.latest().version, 0);
    assert!(
        stalled < idle.max(Duration::from_micros(200)) * 20,
        "idle {idle:?}, stalled {stalled:?}"
    );
    worker.shutdown().unwrap();
}

#[test]
fn worker_trains_and_publishes() {
    let cfg = PredictorConfig {
        horizon: 3,
        hidden: 6,
        iterations: 5,
        samples: 5,
        max_history: 10,
        ..PredictorConfig::default()
    };
    let worker = TrainingWorker::spawn(cfg.clone()).unwrap();
    let cell = worker.cell();
    worker.submit(history(8));
    worker.shutdown().unwrap();
    let snap = cell.latest();
    assert!(snap.version >= 1);
    assert_eq!(snap.history_len, 8);
    let p = predict_with_snapshot(&snap, &history(8), &cfg, 0.9, &mut seeded(0)).unwrap();
    assert_eq!(p.horizon(), 3);
}

#[test]
fn worker_reports_training_errors() {
    let cfg = PredictorConfig {
        horizon: 3,
        hidden: 6,
        iterations: 5,
        max_history: 10,
        ..PredictorConfig::default()
    };
    let worker = TrainingWorker::spawn(cfg).unwrap();
    worker.submit(history(2));
    assert!(matches!(
        worker.shutdown(),
        Err(Error::InsufficientHistory { .. })
    ));
}
