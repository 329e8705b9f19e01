//! Train-while-predicting execution: a training worker refits weights in the
//! background and publishes immutable versioned snapshots; predictions always
//! read the most recent complete snapshot without waiting for training.

use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use arc_swap::ArcSwap;

use crate::error::{Error, Result};
use crate::predictor::{
    predict_obstacle_motion, train_network_online, ObservationHistory, PredictionDistribution,
    PredictorConfig, TrainedNetwork,
};
use crate::rng::{rng_from, Rng};

/// Published weights. Never mutated after publication.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSnapshot {
    pub network: TrainedNetwork,
    pub version: u64,
    /// Deltas in the history the weights were last trained on.
    pub history_len: usize,
    /// Training calls completed since the cold start.
    pub epochs: u64,
}

/// Single-writer, many-reader holder of the current snapshot.
pub struct SnapshotCell {
    current: ArcSwap<WeightSnapshot>,
    writer: Mutex<()>,
}

impl SnapshotCell {
    /// Starts with `initial` published as version 0.
    pub fn new(initial: TrainedNetwork) -> Self {
        SnapshotCell {
            current: ArcSwap::from_pointee(WeightSnapshot {
                network: initial,
                version: 0,
                history_len: 0,
                epochs: 0,
            }),
            writer: Mutex::new(()),
        }
    }

    /// Atomically replaces the served snapshot. Versions must increase.
    pub fn publish(&self, snapshot: WeightSnapshot) -> Result<()> {
        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let current = self.current.load().version;
        if snapshot.version <= current {
            return Err(Error::StaleSnapshot {
                offered: snapshot.version,
                current,
            });
        }
        self.current.store(Arc::new(snapshot));
        Ok(())
    }

    /// Non-blocking read of the most recent snapshot.
    pub fn latest(&self) -> Arc<WeightSnapshot> {
        self.current.load_full()
    }
}

/// Training step used by a worker: refit `net` on `history`.
pub type Trainer =
    Box<dyn FnMut(&ObservationHistory, TrainedNetwork) -> Result<TrainedNetwork> + Send>;

/// Background thread that trains on the newest submitted history and
/// publishes every result. Submissions that arrive while training is busy
/// are coalesced to the newest one.
pub struct TrainingWorker {
    cell: Arc<SnapshotCell>,
    tx: Option<Sender<ObservationHistory>>,
    handle: Option<JoinHandle<Result<()>>>,
}

impl TrainingWorker {
    /// Worker running online training with `cfg`, seeded from `cfg.seed`.
    pub fn spawn(cfg: PredictorConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = rng_from(cfg.seed, &[crate::rng::stream::INIT]);
        let initial = TrainedNetwork::cold_start(&cfg, &mut rng);
        let mut train_rng = rng_from(cfg.seed, &[crate::rng::stream::PREDICTOR]);
        let trainer: Trainer =
            Box::new(move |h, net| train_network_online(h, &cfg, Some(net), &mut train_rng));
        Ok(Self::spawn_with(initial, trainer))
    }

    pub fn spawn_with(initial: TrainedNetwork, trainer: Trainer) -> Self {
        let cell = Arc::new(SnapshotCell::new(initial));
        let (tx, rx) = mpsc::channel();
        let worker_cell = Arc::clone(&cell);
        let handle = std::thread::spawn(move || worker_loop(&worker_cell, rx, trainer));
        TrainingWorker {
            cell,
            tx: Some(tx),
            handle: Some(handle),
        }
    }

    /// Queues a history for training. Never blocks.
    pub fn submit(&self, history: ObservationHistory) {
        if let Some(tx) = &self.tx {
            // A send error means the worker already stopped on an error,
            // which `shutdown` reports.
            let _ = tx.send(history);
        }
    }

    pub fn latest(&self) -> Arc<WeightSnapshot> {
        self.cell.latest()
    }

    pub fn cell(&self) -> Arc<SnapshotCell> {
        Arc::clone(&self.cell)
    }

    /// Stops accepting work, finishes queued training and joins the thread.
    pub fn shutdown(mut self) -> Result<()> {
        self.stop()
    }

    fn stop(&mut self) -> Result<()> {
        self.tx.take();
        match self.handle.take() {
            Some(h) => h
                .join()
                .unwrap_or_else(|_| Err(Error::Numeric("training worker panicked".into()))),
            None => Ok(()),
        }
    }
}

impl Drop for TrainingWorker {
    fn drop(&mut self) {
        let _ = self.stop();
    }
}

fn worker_loop(
    cell: &SnapshotCell,
    rx: Receiver<ObservationHistory>,
    mut trainer: Trainer,
) -> Result<()> {
    while let Ok(mut history) = rx.recv() {
        while let Ok(newer) = rx.try_recv() {
            history = newer;
        }
        let prev = cell.latest();
        let network = trainer(&history, prev.network.clone())?;
        cell.publish(WeightSnapshot {
            network,
            version: prev.version + 1,
            history_len: history.len(),
            epochs: prev.epochs + 1,
        })?;
    }
    Ok(())
}

/// Prediction from whatever snapshot is current. Uses fixed per-sequence
/// dropout masks; training always uses fresh per-step masks.
pub fn predict_with_snapshot(
    snapshot: &WeightSnapshot,
    history: &ObservationHistory,
    cfg: &PredictorConfig,
    gamma: f64,
    rng: &mut Rng,
) -> Result<PredictionDistribution> {
    predict_obstacle_motion(history, &snapshot.network.weights, cfg, gamma, rng)
}
