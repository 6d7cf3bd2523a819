//! Bernoulli function and Scharfetter-Gummel face fluxes.

const SERIES_CUTOFF: f64 = 1e-4;
const DERIV_SERIES_CUTOFF: f64 = 1e-3;

/// `x / (exp(x) - 1)`, continuous through the removable singularity at 0.
pub fn bernoulli(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        let x2 = x * x;
        1.0 - 0.5 * x + x2 / 12.0 - x2 * x2 / 720.0
    } else {
        x / x.exp_m1()
    }
}

/// Derivative of [`bernoulli`].
pub fn bernoulli_deriv(x: f64) -> f64 {
    if x.abs() < DERIV_SERIES_CUTOFF {
        let x2 = x * x;
        -0.5 + x / 6.0 - x * x2 / 180.0 + x * x2 * x2 / 5040.0
    } else if x > 0.0 {
        // B' = B (1 - x - B) / x  and  B / x = 1 / (e^x - 1)
        (1.0 - x - bernoulli(x)) / x.exp_m1()
    } else {
        // from B(-x) = B(x) + x
        -1.0 - bernoulli_deriv(-x)
    }
}

/// `B(x) - x B'(x)`, an even function; evaluated on `|x|` to avoid cancellation.
fn bernoulli_d_weight(x: f64) -> f64 {
    let y = x.abs();
    bernoulli(y) - y * bernoulli_deriv(y)
}

/// Scharfetter-Gummel coefficients of one face.
///
/// The flux leaving the left cell towards the right cell is
/// `F = c_left * C_left - c_right * C_right` with
/// `c_left = d/h B(-v h/d)` and `c_right = d/h B(v h/d)`, where `v` is the
/// transport velocity along the face normal (positive to the right) and `d`
/// the face diffusivity.
pub fn sg_face_coefficients(d_face: f64, v_face: f64, h: f64) -> (f64, f64) {
    debug_assert!(d_face > 0.0 && h > 0.0);
    let peclet = v_face * h / d_face;
    let s = d_face / h;
    (s * bernoulli(-peclet), s * bernoulli(peclet))
}

/// Partial derivatives of the face coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceSensitivity {
    pub dleft_dd: f64,
    pub dleft_dv: f64,
    pub dright_dd: f64,
    pub dright_dv: f64,
}

pub fn sg_face_sensitivity(d_face: f64, v_face: f64, h: f64) -> FaceSensitivity {
    let peclet = v_face * h / d_face;
    let dd = bernoulli_d_weight(peclet) / h;
    FaceSensitivity {
        dleft_dd: dd,
        dleft_dv: -bernoulli_deriv(-peclet),
        dright_dd: dd,
        dright_dv: bernoulli_deriv(peclet),
    }
}
