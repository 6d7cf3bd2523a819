use super::sinogram::SinogramSequence;
use crate::error::Result;

/// Floor applied to the expected counts inside the logarithm.
pub const FIDELITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fidelity {
    pub value: f64,
    /// Bins with counts but (numerically) zero expectation.
    pub floored_bins: usize,
}

/// Poisson data term `frame_duration * sum (Ku - f log Ku)` with `0 log 0 = 0`.
pub fn kl_fidelity(expected: &SinogramSequence, counts: &SinogramSequence) -> Result<Fidelity> {
    expected.check_compatible(counts)?;
    let mut value = 0.0;
    let mut floored_bins = 0;
    for (e, f) in expected.frames.iter().zip(&counts.frames) {
        for (&ku, &fv) in e.values().iter().zip(f.values()) {
            value += ku;
            if fv > 0.0 {
                let arg = if ku < FIDELITY_FLOOR {
                    floored_bins += 1;
                    FIDELITY_FLOOR
                } else {
                    ku
                };
                value -= fv * arg.ln();
            }
        }
    }
    Ok(Fidelity {
        value: value * expected.frame_duration,
        floored_bins,
    })
}
