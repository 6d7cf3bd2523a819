use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::sinogram::{SinogramFrame, SinogramSequence};
use crate::error::{Error, Result};

/// Independent Poisson counts with mean `scale * expected` in every bin.
pub fn sample_poisson(expected: &SinogramSequence, scale: f64, seed: u64) -> Result<SinogramSequence> {
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(Error::InvalidConfig(format!("count scale must be >= 0, got {scale}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frames = Vec::with_capacity(expected.len());
    for f in &expected.frames {
        let mut values = Vec::with_capacity(f.len());
        for &e in f.values() {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "expected counts must be finite and >= 0, got {e}"
                )));
            }
            let mean = scale * e;
            let k = if mean > 0.0 {
                Poisson::new(mean)
                    .map_err(|err| Error::InvalidConfig(format!("poisson mean {mean}: {err}")))?
                    .sample(&mut rng)
            } else {
                0.0
            };
            values.push(k);
        }
        frames.push(SinogramFrame::from_values(f.n_angles(), f.n_bins(), values, f.frame));
    }
    SinogramSequence::new(frames, expected.frame_duration)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(value: f64) -> SinogramSequence {
        SinogramSequence::new(
            vec![SinogramFrame::constant(3, 4, value, 0), SinogramFrame::constant(3, 4, value, 1)],
            0.5,
        )
        .unwrap()
    }

    #[test]
    fn zero_scale_gives_zero_counts() {
        let s = sample_poisson(&seq(7.0), 0.0, 1).unwrap();
        assert_eq!(s.total(), 0.0);
    }

    #[test]
    fn counts_are_integers_and_deterministic() {
        let a = sample_poisson(&seq(3.5), 2.0, 42).unwrap();
        let b = sample_poisson(&seq(3.5), 2.0, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.frames.iter().flat_map(|f| f.values()).all(|v| v.fract() == 0.0 && *v >= 0.0));
        let c = sample_poisson(&seq(3.5), 2.0, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn large_mean_within_five_sigma() {
        let s = sample_poisson(&seq(1e6), 1.0, 9).unwrap();
        for v in s.frames.iter().flat_map(|f| f.values()) {
            assert!((v - 1e6).abs() <= 5000.0, "{v}");
        }
    }

    #[test]
    fn sample_mean_approaches_expectation() {
        let mut total = 0.0;
        let n = 200;
        for seed in 0..n {
            total += sample_poisson(&seq(2.5), 4.0, seed).unwrap().total();
        }
        let mean_per_bin = total / (n as f64 * 24.0);
        // sd of the mean: sqrt(10 / 4800) ~ 0.046
        assert!((mean_per_bin - 10.0).abs() < 0.25, "{mean_per_bin}");
    }

    #[test]
    fn rejects_negative_expectation() {
        assert!(sample_poisson(&seq(-1.0), 1.0, 0).is_err());
        assert!(sample_poisson(&seq(1.0), -1.0, 0).is_err());
    }
}
