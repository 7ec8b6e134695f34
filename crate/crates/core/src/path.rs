//! Continuous piecewise-linear paths: the realizations that walks are
//! embedded into.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::walks::{space_step, time_step, LatticePath, LatticeWalk};

#[derive(Debug, Clone)]
enum Repr {
    /// Knots at `j·dt`, values `origin + positions[j]·2^-level`.
    Lattice {
        dt: f64,
        level: u32,
        origin: f64,
        positions: Arc<Vec<i32>>,
    },
    /// Knots at `j·dt`.
    Uniform { dt: f64, values: Vec<f64> },
    General { times: Vec<f64>, values: Vec<f64> },
}

/// A continuous path, linear between strictly increasing knots from time 0.
#[derive(Debug, Clone)]
pub struct PiecewisePath {
    repr: Repr,
}

/// Borrowed view of a lattice-valued path on a uniform time grid.
pub(crate) struct LatticeView<'a> {
    pub dt: f64,
    pub level: u32,
    pub positions: &'a [i32],
}

impl PiecewisePath {
    /// General knots; times must start at 0 and increase strictly.
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::InvalidConfig("path needs matching, non-empty knot lists".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidConfig("path knots must start at time 0".into()));
        }
        if !times.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::InvalidConfig("path knot times must increase strictly".into()));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidConfig("path values must be finite".into()));
        }
        Ok(PiecewisePath {
            repr: Repr::General { times, values },
        })
    }

    /// Knots at `j·dt`, `j = 0..values.len()`.
    pub fn uniform(dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || values.is_empty() {
            return Err(Error::InvalidConfig("uniform path needs dt > 0 and a knot".into()));
        }
        Ok(PiecewisePath {
            repr: Repr::Uniform { dt, values },
        })
    }

    /// The shrunken walk `B̃_m` as a path; shares the walk's storage.
    pub fn from_walk(walk: &LatticeWalk) -> Self {
        Self::time_scaled_walk(walk, 1.0)
    }

    /// `t ↦ B̃_m(c·t)`: the walk run on a clock `c` times faster.
    pub fn time_scaled_walk(walk: &LatticeWalk, speed: f64) -> Self {
        assert!(speed > 0.0, "clock speed must be positive");
        PiecewisePath {
            repr: Repr::Lattice {
                dt: time_step(walk.level()) / speed,
                level: walk.level(),
                origin: walk.origin(),
                positions: walk.shared_positions(),
            },
        }
    }

    /// Number of knots.
    pub fn knots(&self) -> usize {
        match &self.repr {
            Repr::Lattice { positions, .. } => positions.len(),
            Repr::Uniform { values, .. } => values.len(),
            Repr::General { times, .. } => times.len(),
        }
    }

    pub fn knot_time(&self, i: usize) -> f64 {
        match &self.repr {
            Repr::Lattice { dt, .. } | Repr::Uniform { dt, .. } => i as f64 * dt,
            Repr::General { times, .. } => times[i],
        }
    }

    pub fn knot_value(&self, i: usize) -> f64 {
        match &self.repr {
            Repr::Lattice {
                level,
                origin,
                positions,
                ..
            } => origin + f64::from(positions[i]) * space_step(*level),
            Repr::Uniform { values, .. } | Repr::General { values, .. } => values[i],
        }
    }

    pub fn end_time(&self) -> f64 {
        self.knot_time(self.knots() - 1)
    }

    pub fn start_value(&self) -> f64 {
        self.knot_value(0)
    }

    pub(crate) fn lattice_view(&self) -> Option<LatticeView<'_>> {
        match &self.repr {
            Repr::Lattice {
                dt, level, positions, ..
            } => Some(LatticeView {
                dt: *dt,
                level: *level,
                positions,
            }),
            _ => None,
        }
    }

    /// Index `i` of the segment `[t_i, t_{i+1}]` holding `t`.
    fn segment(&self, t: f64) -> usize {
        let last = self.knots() - 1;
        let i = match &self.repr {
            Repr::Lattice { dt, .. } | Repr::Uniform { dt, .. } => (t / dt).floor() as usize,
            Repr::General { times, .. } => times.partition_point(|&s| s <= t).saturating_sub(1),
        };
        i.min(last.saturating_sub(1))
    }

    /// Path value at `t`, linearly interpolated between knots.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) || t > self.end_time() {
            return Err(Error::out_of_horizon(format!(
                "t = {t} on a path ending at {}",
                self.end_time()
            )));
        }
        if self.knots() == 1 {
            return Ok(self.knot_value(0));
        }
        let i = self.segment(t);
        let (t0, t1) = (self.knot_time(i), self.knot_time(i + 1));
        let (v0, v1) = (self.knot_value(i), self.knot_value(i + 1));
        if t == t0 {
            return Ok(v0);
        }
        if t == t1 {
            return Ok(v1);
        }
        Ok(v0 + (t - t0) / (t1 - t0) * (v1 - v0))
    }

    /// Same path with all knots listed explicitly.
    pub fn to_general(&self) -> PiecewisePath {
        let n = self.knots();
        PiecewisePath {
            repr: Repr::General {
                times: (0..n).map(|i| self.knot_time(i)).collect(),
                values: (0..n).map(|i| self.knot_value(i)).collect(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_malformed_knots() {
        assert!(PiecewisePath::new(vec![], vec![]).is_err());
        assert!(PiecewisePath::new(vec![0.1, 0.2], vec![0.0, 1.0]).is_err());
        assert!(PiecewisePath::new(vec![0.0, 0.2, 0.2], vec![0.0, 1.0, 2.0]).is_err());
        assert!(PiecewisePath::new(vec![0.0, 1.0], vec![0.0]).is_err());
    }

    #[test]
    fn interpolates_between_knots() {
        let p = PiecewisePath::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, -2.0]).unwrap();
        assert_eq!(p.value_at(0.5).unwrap(), 1.0);
        assert_eq!(p.value_at(1.0).unwrap(), 2.0);
        assert_eq!(p.value_at(2.0).unwrap(), 0.0);
        assert_eq!(p.value_at(3.0).unwrap(), -2.0);
        assert!(p.value_at(3.5).is_err());
    }

    #[test]
    fn lattice_and_general_views_agree() {
        let w = LatticeWalk::from_increments(2, 4, &[1, 1, -1, 1, -1, -1, -1]);
        let lattice = PiecewisePath::from_walk(&w);
        let general = lattice.to_general();
        for j in 0..=70 {
            let t = j as f64 * 7.0 / 16.0 / 70.0;
            let v = lattice.value_at(t).unwrap();
            assert!((v - general.value_at(t).unwrap()).abs() < 1e-14);
            assert!((v - w.evaluate(t).unwrap()).abs() < 1e-14);
        }
    }
}
