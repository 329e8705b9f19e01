use crate::error::{invalid, Result};
use crate::geom::Vec2;

/// Observed positions `p_0..p_n` of one obstacle, sampled every `dt`
/// seconds.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationHistory {
    positions: Vec<Vec2>,
    dt: f64,
}

impl ObservationHistory {
    pub fn new(positions: Vec<Vec2>, dt: f64) -> Result<Self> {
        if positions.is_empty() {
            return Err(invalid("history needs at least one position"));
        }
        if positions.iter().any(|p| !p.is_finite()) {
            return Err(invalid("history positions must be finite"));
        }
        if !(dt > 0.0) {
            return Err(invalid("dt must be positive"));
        }
        Ok(ObservationHistory { positions, dt })
    }

    /// Rebuilds positions from a start point and a delta sequence.
    pub fn from_deltas(start: Vec2, deltas: &[Vec2], dt: f64) -> Result<Self> {
        let mut positions = Vec::with_capacity(deltas.len() + 1);
        let mut p = start;
        positions.push(p);
        for d in deltas {
            p += *d;
            positions.push(p);
        }
        ObservationHistory::new(positions, dt)
    }

    pub fn positions(&self) -> &[Vec2] {
        &self.positions
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn last(&self) -> Vec2 {
        *self.positions.last().expect("non-empty")
    }

    /// Number of deltas `n`.
    pub fn len(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `Δp_k = p_k - p_{k-1}` for `k = 1..n`.
    pub fn deltas(&self) -> Vec<Vec2> {
        deltas_of(&self.positions)
    }

    pub fn push(&mut self, p: Vec2) {
        self.positions.push(p);
    }

    /// The most recent `max_deltas` deltas (all of them if fewer).
    pub fn recent_deltas(&self, max_deltas: usize) -> Vec<Vec2> {
        let start = self.positions.len().saturating_sub(max_deltas + 1);
        deltas_of(&self.positions[start..])
    }
}

pub fn deltas_of(positions: &[Vec2]) -> Vec<Vec2> {
    positions.windows(2).map(|w| w[1] - w[0]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deltas_are_exact_differences() {
        let h = ObservationHistory::new(
            vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(1.0, 0.5),
                Vec2::new(1.5, 0.5),
            ],
            0.5,
        )
        .unwrap();
        assert_eq!(h.len(), 2);
        assert_eq!(h.deltas(), vec![Vec2::new(1.0, 0.5), Vec2::new(0.5, 0.0)]);
        assert_eq!(h.recent_deltas(1), vec![Vec2::new(0.5, 0.0)]);
        assert_eq!(h.recent_deltas(10).len(), 2);
    }

    #[test]
    fn from_deltas_inverts_deltas() {
        let d = vec![Vec2::new(0.125, 0.0), Vec2::new(0.0, -0.25)];
        let h = ObservationHistory::from_deltas(Vec2::new(3.0, 4.0), &d, 1.0).unwrap();
        assert_eq!(h.deltas(), d);
        assert_eq!(h.last(), Vec2::new(3.125, 3.75));
    }
}
