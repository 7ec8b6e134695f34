//! Discrete up/down local times of lattice walks.
//!
//! `ℓ^±(k, x) = #{j < k : S(j) = x, S(j+1) = x ± 1}` and the scaled field
//! `L^±(t, x) = 2^-m ℓ^±(t 2^2m, x 2^m)`, extended bilinearly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::walks::{space_step, steps_in, time_step, LatticePath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    Both,
}

/// Total crossing counts of an integer path over its first `n` steps,
/// indexed by lattice offset `x - x_min`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CrossingCounts {
    pub x_min: i64,
    pub up: Vec<u64>,
    pub down: Vec<u64>,
}

impl CrossingCounts {
    pub fn from_offsets(offsets: &[i64]) -> Self {
        let x_min = offsets.iter().copied().min().unwrap_or(0);
        let x_max = offsets.iter().copied().max().unwrap_or(0);
        let width = (x_max - x_min + 1) as usize;
        let mut up = vec![0u64; width];
        let mut down = vec![0u64; width];
        for w in offsets.windows(2) {
            let idx = (w[0] - x_min) as usize;
            if w[1] > w[0] {
                up[idx] += 1;
            } else {
                down[idx] += 1;
            }
        }
        CrossingCounts { x_min, up, down }
    }
}

/// Crossing events of a walk, stored per lattice level as sorted step indices.
#[derive(Debug, Clone)]
pub struct LocalTimeField {
    level: u32,
    origin: f64,
    direction: Direction,
    steps: u64,
    x_min: i32,
    up: Vec<Vec<u32>>,
    down: Vec<Vec<u32>>,
}

/// Local-time field of the first `⌊horizon · 2^2m⌋` steps of `walk`.
pub fn discrete_local_time<W: LatticePath + ?Sized>(
    walk: &W,
    direction: Direction,
    horizon: f64,
) -> Result<LocalTimeField> {
    let steps = steps_in(walk.level(), horizon) as usize;
    if steps > walk.steps() {
        return Err(Error::out_of_horizon(format!(
            "local time up to t = {horizon} needs {steps} steps, walk has {}",
            walk.steps()
        )));
    }
    Ok(LocalTimeField::from_steps(walk, direction, steps))
}

impl LocalTimeField {
    /// Field over the first `steps` steps. Panics if the walk is shorter.
    pub fn from_steps<W: LatticePath + ?Sized>(walk: &W, direction: Direction, steps: usize) -> Self {
        assert!(steps <= walk.steps());
        assert!(steps <= u32::MAX as usize, "local-time events are indexed by u32");
        let pos = &walk.positions()[..=steps];
        let x_min = *pos.iter().min().unwrap();
        let x_max = *pos.iter().max().unwrap();
        let width = (x_max - x_min + 1) as usize;

        let mut n_up = vec![0usize; width];
        let mut n_down = vec![0usize; width];
        for w in pos.windows(2) {
            let i = (w[0] - x_min) as usize;
            if w[1] > w[0] {
                n_up[i] += 1;
            } else {
                n_down[i] += 1;
            }
        }
        let mut up: Vec<Vec<u32>> = n_up.iter().map(|&n| Vec::with_capacity(n)).collect();
        let mut down: Vec<Vec<u32>> = n_down.iter().map(|&n| Vec::with_capacity(n)).collect();
        for (j, w) in pos.windows(2).enumerate() {
            let i = (w[0] - x_min) as usize;
            if w[1] > w[0] {
                up[i].push(j as u32);
            } else {
                down[i].push(j as u32);
            }
        }
        LocalTimeField {
            level: walk.level(),
            origin: walk.origin(),
            direction,
            steps: steps as u64,
            x_min,
            up,
            down,
        }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Time covered, `steps · 2^-2m`.
    pub fn horizon(&self) -> f64 {
        self.steps as f64 * time_step(self.level)
    }

    /// Realized lattice offsets `[x_min, x_max]` about the origin.
    pub fn offset_range(&self) -> (i32, i32) {
        (self.x_min, self.x_min + self.up.len() as i32 - 1)
    }

    /// Real spatial range `[origin + x_min 2^-m, origin + x_max 2^-m]`.
    pub fn spatial_range(&self) -> (f64, f64) {
        let (lo, hi) = self.offset_range();
        let dx = space_step(self.level);
        (self.origin + f64::from(lo) * dx, self.origin + f64::from(hi) * dx)
    }

    /// Unscaled count `ℓ^dir(k, x)` at lattice offset `x`; `k` is clamped to
    /// the field's horizon.
    pub fn count(&self, direction: Direction, k: u64, x: i32) -> u64 {
        let Some(i) = x.checked_sub(self.x_min).filter(|&i| i >= 0) else {
            return 0;
        };
        let i = i as usize;
        if i >= self.up.len() {
            return 0;
        }
        let k = k.min(self.steps);
        let prefix = |events: &Vec<u32>| events.partition_point(|&j| u64::from(j) < k) as u64;
        match direction {
            Direction::Up => prefix(&self.up[i]),
            Direction::Down => prefix(&self.down[i]),
            Direction::Both => prefix(&self.up[i]) + prefix(&self.down[i]),
        }
    }

    /// Scaled field value at a grid point.
    pub fn grid_value(&self, direction: Direction, k: u64, x: i32) -> f64 {
        self.count(direction, k, x) as f64 * space_step(self.level)
    }

    /// `L^dir(t, x)` for the field's own direction.
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        self.eval_dir(self.direction, t, x)
    }

    /// Bilinear interpolation on the `(2^-2m, 2^-m)` grid; 0 off the range.
    pub fn eval_dir(&self, direction: Direction, t: f64, x: f64) -> f64 {
        let kf = (t.max(0.0) / time_step(self.level)).min(self.steps as f64);
        let xf = (x - self.origin) / space_step(self.level);
        let (lo, hi) = self.offset_range();
        if !(xf >= f64::from(lo)) || xf > f64::from(hi) {
            return 0.0;
        }
        let k0 = kf.floor();
        let x0 = xf.floor();
        let (theta, phi) = (kf - k0, xf - x0);
        let (k0, x0) = (k0 as u64, x0 as i32);
        let c = |k: u64, x: i32| self.count(direction, k, x) as f64;
        let mut acc = (1.0 - theta) * (1.0 - phi) * c(k0, x0);
        if theta > 0.0 {
            acc += theta * (1.0 - phi) * c(k0 + 1, x0);
        }
        if phi > 0.0 {
            acc += (1.0 - theta) * phi * c(k0, x0 + 1);
            if theta > 0.0 {
                acc += theta * phi * c(k0 + 1, x0 + 1);
            }
        }
        acc * space_step(self.level)
    }

    /// `Σ_x L(k 2^-2m, x) · 2^-m` for the two-sided field; equals `k 2^-2m`.
    pub fn occupation_mass(&self, k: u64) -> f64 {
        let (lo, hi) = self.offset_range();
        let total: u64 = (lo..=hi).map(|x| self.count(Direction::Both, k, x)).sum();
        total as f64 * space_step(self.level) * space_step(self.level)
    }
}

/// `sup` of `|a - b|` over a `(t, x)` sample: `grid_t + 1` equally spaced
/// times in `[0, horizon]` and every lattice point of the coarser field within
/// the union of both spatial ranges.
pub fn field_sup_distance(a: &LocalTimeField, b: &LocalTimeField, direction: Direction, horizon: f64, grid_t: usize) -> f64 {
    let coarse = if a.level() <= b.level() { a } else { b };
    let dx = space_step(coarse.level());
    let (a_lo, a_hi) = a.spatial_range();
    let (b_lo, b_hi) = b.spatial_range();
    let (lo, hi) = (a_lo.min(b_lo), a_hi.max(b_hi));
    let first = ((lo - coarse.origin()) / dx).floor() as i64;
    let last = ((hi - coarse.origin()) / dx).ceil() as i64;
    let mut worst = 0.0f64;
    for i in 0..=grid_t {
        let t = horizon * i as f64 / grid_t as f64;
        for j in first..=last {
            let x = coarse.origin() + j as f64 * dx;
            let d = (a.eval_dir(direction, t, x) - b.eval_dir(direction, t, x)).abs();
            worst = worst.max(d);
        }
    }
    worst
}
