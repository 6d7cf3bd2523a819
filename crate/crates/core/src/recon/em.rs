use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::pet::{Projector, SinogramFrame, SinogramSequence};

/// Floor on `Ku` in the EM ratio where counts are present.
pub const EM_FLOOR: f64 = 1e-12;
/// Floor on the previous activity in the surrogate weight.
pub const WEIGHT_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct EmHalfStep {
    pub activities: Vec<ScalarField>,
    /// Bins where `f > 0` but `Ku` fell below the floor.
    pub floored_bins: usize,
}

/// `u_half = u / K*1 * K*(f / Ku)` per frame. Cells with zero sensitivity are left unchanged.
pub fn em_half_step(u_k: &[ScalarField], k: &Projector, f: &SinogramSequence) -> Result<EmHalfStep> {
    if u_k.len() != f.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} activity frames for {} sinogram frames",
            u_k.len(),
            f.len()
        )));
    }
    let sens = k.sensitivity();
    let mut floored_bins = 0;
    let mut activities = Vec::with_capacity(u_k.len());
    for (u, counts) in u_k.iter().zip(&f.frames) {
        let ku = k.project(u)?;
        if !ku.same_shape(counts) {
            return Err(Error::ShapeMismatch("data and projector geometry differ".into()));
        }
        let ratio: Vec<f64> = ku
            .values()
            .iter()
            .zip(counts.values())
            .map(|(&e, &c)| {
                if c <= 0.0 {
                    0.0
                } else if e < EM_FLOOR {
                    floored_bins += 1;
                    c / EM_FLOOR
                } else {
                    c / e
                }
            })
            .collect();
        let back = k.backproject(&SinogramFrame::from_values(ku.n_angles(), ku.n_bins(), ratio, counts.frame))?;
        let vals = u
            .values()
            .iter()
            .zip(sens.values())
            .zip(back.values())
            .map(|((&x, &s), &b)| if s > 0.0 { x / s * b } else { x })
            .collect();
        activities.push(ScalarField::from_vec(*u.grid(), vals)?);
    }
    Ok(EmHalfStep {
        activities,
        floored_bins,
    })
}

/// Surrogate weights `sens / max(u_k, WEIGHT_FLOOR)`.
pub fn surrogate_weight(u_k: &[ScalarField], sens: &ScalarField, floor: f64) -> Result<Vec<ScalarField>> {
    u_k.iter()
        .map(|u| {
            u.check_same_grid(sens)?;
            let vals = u
                .values()
                .iter()
                .zip(sens.values())
                .map(|(&x, &s)| s / x.max(floor))
                .collect();
            ScalarField::from_vec(*u.grid(), vals)
        })
        .collect()
}

/// `sens (u - u_half) / max(u_k, WEIGHT_FLOOR)` per frame.
pub fn residual_weight(
    u: &[ScalarField],
    u_half: &[ScalarField],
    u_k: &[ScalarField],
    sens: &ScalarField,
) -> Result<Vec<ScalarField>> {
    if u.len() != u_half.len() || u.len() != u_k.len() {
        return Err(Error::ShapeMismatch("activity sequences differ in length".into()));
    }
    let w = surrogate_weight(u_k, sens, WEIGHT_FLOOR)?;
    u.iter()
        .zip(u_half)
        .zip(&w)
        .map(|((a, b), w)| {
            a.check_same_grid(b)?;
            let vals = a
                .values()
                .iter()
                .zip(b.values())
                .zip(w.values())
                .map(|((&x, &y), &z)| z * (x - y))
                .collect();
            ScalarField::from_vec(*a.grid(), vals)
        })
        .collect()
}
