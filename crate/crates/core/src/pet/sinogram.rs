use crate::error::{Error, Result};

/// One time frame of detector data, `n_angles x n_bins`, angle-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SinogramFrame {
    n_angles: usize,
    n_bins: usize,
    values: Vec<f64>,
    pub frame: usize,
}

impl SinogramFrame {
    pub fn constant(n_angles: usize, n_bins: usize, value: f64, frame: usize) -> Self {
        Self {
            n_angles,
            n_bins,
            values: vec![value; n_angles * n_bins],
            frame,
        }
    }

    pub fn from_values(n_angles: usize, n_bins: usize, values: Vec<f64>, frame: usize) -> Self {
        assert_eq!(values.len(), n_angles * n_bins, "sinogram size mismatch");
        Self {
            n_angles,
            n_bins,
            values,
            frame,
        }
    }

    pub fn n_angles(&self) -> usize {
        self.n_angles
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn dot(&self, other: &SinogramFrame) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    pub fn same_shape(&self, other: &SinogramFrame) -> bool {
        self.n_angles == other.n_angles && self.n_bins == other.n_bins
    }
}

/// Frames of equal duration covering the acquisition.
#[derive(Debug, Clone, PartialEq)]
pub struct SinogramSequence {
    pub frames: Vec<SinogramFrame>,
    /// Seconds per frame.
    pub frame_duration: f64,
}

impl SinogramSequence {
    pub fn new(frames: Vec<SinogramFrame>, frame_duration: f64) -> Result<Self> {
        if let Some(first) = frames.first() {
            if frames.iter().any(|f| !f.same_shape(first)) {
                return Err(Error::ShapeMismatch("frames have different geometry".into()));
            }
        }
        if !(frame_duration > 0.0 && frame_duration.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "frame duration must be > 0, got {frame_duration}"
            )));
        }
        Ok(Self {
            frames,
            frame_duration,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.frames.iter().map(SinogramFrame::sum).sum()
    }

    pub fn check_compatible(&self, other: &SinogramSequence) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} frames vs {} frames",
                self.len(),
                other.len()
            )));
        }
        for (a, b) in self.frames.iter().zip(&other.frames) {
            if !a.same_shape(b) {
                return Err(Error::ShapeMismatch(format!(
                    "frame {} is {}x{} vs {}x{}",
                    a.frame,
                    a.n_angles(),
                    a.n_bins(),
                    b.n_angles(),
                    b.n_bins()
                )));
            }
        }
        Ok(())
    }
}
