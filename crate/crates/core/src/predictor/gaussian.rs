use crate::error::{invalid, Error, Result};
use crate::geom::{Sym2, Vec2};
use crate::npvo::Ellipsoid;

/// Smallest eigenvalue allowed in a fitted covariance (m²).
pub const COVARIANCE_FLOOR: f64 = 1e-6;

/// Maximum-likelihood Gaussian fit: sample mean and the biased (divisor
/// `N`) sample covariance, with eigenvalues clamped to at least
/// [`COVARIANCE_FLOOR`].
pub fn fit_gaussian_mle(samples: &[Vec2]) -> Result<(Vec2, Sym2)> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples {
            have: samples.len(),
            need: 2,
        });
    }
    let n = samples.len() as f64;
    let mut mean = Vec2::ZERO;
    for s in samples {
        mean += *s;
    }
    mean = mean * (1.0 / n);
    let (mut xx, mut xy, mut yy) = (0.0, 0.0, 0.0);
    for s in samples {
        let d = *s - mean;
        xx += d.x * d.x;
        xy += d.x * d.y;
        yy += d.y * d.y;
    }
    let cov = Sym2::new(xx / n, xy / n, yy / n);
    Ok((mean, floor_covariance(cov, COVARIANCE_FLOOR)))
}

/// Clamps the eigenvalues of `cov` to at least `floor`, leaving it untouched
/// when it already satisfies the bound.
pub fn floor_covariance(cov: Sym2, floor: f64) -> Sym2 {
    let (l0, l1, u) = cov.eigen();
    if l1 >= floor {
        return cov;
    }
    let (l0, l1) = (l0.max(floor), l1.max(floor));
    let (c, s) = (u.x, u.y);
    Sym2::new(
        l0 * c * c + l1 * s * s,
        (l0 - l1) * c * s,
        l0 * s * s + l1 * c * c,
    )
}

/// Squared Mahalanobis radius enclosing probability `gamma` of a 2-D
/// Gaussian: the chi-square quantile with two degrees of freedom.
pub fn chi2_2d_quantile(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(invalid(format!("confidence {gamma} outside (0, 1)")));
    }
    Ok(-2.0 * (-gamma).ln_1p())
}

/// The `gamma`-confidence ellipse of `N(mean, cov)`.
pub fn confidence_ellipsoid(mean: Vec2, cov: Sym2, gamma: f64) -> Result<Ellipsoid> {
    Ellipsoid::new(mean, cov, chi2_2d_quantile(gamma)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn identical_samples_give_the_floor() {
        let (mu, cov) = fit_gaussian_mle(&[Vec2::new(1.0, 1.0); 5]).unwrap();
        assert_eq!(mu, Vec2::new(1.0, 1.0));
        assert_eq!(cov, Sym2::new(COVARIANCE_FLOOR, 0.0, COVARIANCE_FLOOR));
    }

    #[test]
    fn two_samples_hand_arithmetic() {
        let (mu, cov) = fit_gaussian_mle(&[Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0)]).unwrap();
        assert_eq!(mu, Vec2::new(1.0, 0.0));
        assert_eq!(cov, Sym2::new(1.0, 0.0, COVARIANCE_FLOOR));
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            fit_gaussian_mle(&[Vec2::ZERO]),
            Err(Error::InsufficientSamples { have: 1, need: 2 })
        ));
    }

    fn draw(mean: Vec2, cov: Sym2, n: usize, seed: u64) -> Vec<Vec2> {
        let (l11, l21, l22) = cov.cholesky().unwrap();
        let mut rng = seeded(seed);
        (0..n)
            .map(|_| {
                let z0: f64 = StandardNormal.sample(&mut rng);
                let z1: f64 = StandardNormal.sample(&mut rng);
                mean + Vec2::new(l11 * z0, l21 * z0 + l22 * z1)
            })
            .collect()
    }

    #[test]
    fn recovers_known_gaussian() {
        let mean = Vec2::new(0.4, -1.2);
        let cov = Sym2::new(0.5, 0.2, 0.3);
        let (mu, sigma) = fit_gaussian_mle(&draw(mean, cov, 10_000, 5)).unwrap();
        assert!((mu - mean).norm() / mean.norm() < 0.05);
        assert!(sigma.sub(&cov).frobenius() / cov.frobenius() < 0.05);
    }

    #[test]
    fn unit_covariance_95_percent_disk() {
        let e = confidence_ellipsoid(Vec2::ZERO, Sym2::identity(), 0.95).unwrap();
        assert!((e.threshold() - 5.991464547107979).abs() < 1e-12);
        let (a, b) = e.semi_axes();
        assert!((a - 5.991464547107979f64.sqrt()).abs() < 1e-12);
        assert!((b - a).abs() < 1e-12);
    }

    #[test]
    fn shrinks_to_center_as_confidence_vanishes() {
        let e = confidence_ellipsoid(Vec2::new(2.0, 3.0), Sym2::new(2.0, 0.5, 1.0), 1e-12).unwrap();
        assert!(e.semi_axes().0 < 1e-5);
        assert!(e.contains(Vec2::new(2.0, 3.0)));
    }

    #[test]
    fn rejects_confidence_outside_open_interval() {
        for g in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(chi2_2d_quantile(g).is_err());
        }
    }

    #[test]
    fn monte_carlo_coverage_matches_confidence() {
        // Binomial SE at n = 100 000 is at most 0.0016, so ±0.005 is > 3 SE.
        for (i, gamma) in [0.5, 0.9, 0.95, 0.99].into_iter().enumerate() {
            let mean = Vec2::new(-1.0, 2.0);
            let cov = Sym2::new(1.3, -0.4, 0.6);
            let e = confidence_ellipsoid(mean, cov, gamma).unwrap();
            let pts = draw(mean, cov, 100_000, 100 + i as u64);
            let inside = pts.iter().filter(|p| e.contains(**p)).count() as f64 / pts.len() as f64;
            assert!(
                (inside - gamma).abs() <= 0.005,
                "gamma {gamma}: coverage {inside}"
            );
        }
    }
}
