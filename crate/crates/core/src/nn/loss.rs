use crate::error::{invalid, Result};

/// Summed elementwise Huber loss with threshold `delta`, and its derivative
/// with respect to each residual.
pub fn huber_loss(residual: &[f64], delta: f64) -> Result<(f64, Vec<f64>)> {
    if !(delta > 0.0) {
        return Err(invalid(format!(
            "Huber delta must be positive, got {delta}"
        )));
    }
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(residual.len());
    for &r in residual {
        let (l, g) = huber_scalar(r, delta);
        loss += l;
        grad.push(g);
    }
    Ok((loss, grad))
}

#[inline]
pub(crate) fn huber_scalar(r: f64, delta: f64) -> (f64, f64) {
    let a = r.abs();
    if a <= delta {
        (0.5 * r * r, r)
    } else {
        (delta * (a - 0.5 * delta), delta * r.signum())
    }
}
