use crate::error::{Error, Result};
use crate::forward::Trajectory;
use crate::grid::ScalarField;

/// Uniform frames over the trajectory, each represented by its midpoint state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSampling {
    n_frames: usize,
    steps_per_frame: usize,
}

impl FrameSampling {
    pub fn new(n_steps: usize, n_frames: usize) -> Result<Self> {
        if n_frames == 0 || !n_steps.is_multiple_of(n_frames) {
            return Err(Error::InvalidConfig(format!(
                "{n_steps} steps cannot be split into {n_frames} equal frames"
            )));
        }
        Ok(Self {
            n_frames,
            steps_per_frame: n_steps / n_frames,
        })
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn steps_per_frame(&self) -> usize {
        self.steps_per_frame
    }

    pub fn n_steps(&self) -> usize {
        self.n_frames * self.steps_per_frame
    }

    /// Time level representing frame `f` (the later of two midpoints for odd frame lengths).
    pub fn level(&self, f: usize) -> usize {
        f * self.steps_per_frame + self.steps_per_frame.div_ceil(2)
    }

    pub fn levels(&self) -> Vec<usize> {
        (0..self.n_frames).map(|f| self.level(f)).collect()
    }

    pub fn frame_duration(&self, tau: f64) -> f64 {
        self.steps_per_frame as f64 * tau
    }

    /// Activity at each frame's level.
    pub fn sample(&self, traj: &Trajectory) -> Result<Vec<ScalarField>> {
        if traj.n_steps() != self.n_steps() {
            return Err(Error::ShapeMismatch(format!(
                "trajectory has {} steps, framing expects {}",
                traj.n_steps(),
                self.n_steps()
            )));
        }
        Ok(self.levels().into_iter().map(|l| traj.states[l].activity()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_levels() {
        let s = FrameSampling::new(40, 10).unwrap();
        assert_eq!(s.levels()[..3], [2, 6, 10]);
        let s = FrameSampling::new(9, 3).unwrap();
        assert_eq!(s.levels(), vec![2, 5, 8]);
        let s = FrameSampling::new(5, 5).unwrap();
        assert_eq!(s.levels(), vec![1, 2, 3, 4, 5]);
        assert!((FrameSampling::new(40, 10).unwrap().frame_duration(0.5) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_uneven_frames() {
        assert!(FrameSampling::new(10, 3).is_err());
        assert!(FrameSampling::new(10, 0).is_err());
    }
}
