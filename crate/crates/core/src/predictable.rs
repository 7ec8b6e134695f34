//! Predictable integrands: truncated kernels sampled on the Skorohod
//! partition, their stochastic sums, and a Monte Carlo isometry check.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::coin::Seed;
use crate::embedding::{skorohod_embed, EmbeddedWalk};
use crate::error::{Error, Result};
use crate::integrals::{steps_until, RunningSum};
use crate::path::PiecewisePath;
use crate::walks::{build_nested, space_step, steps_in, time_step, LatticePath};

/// Kernels `(t, w) ↦ Y`, evaluated along the path at stopping times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Constant(f64),
    /// `w`
    Value,
    /// `sin w`
    Sine,
    /// `t · w`
    TimeValue,
    /// `1{lo ≤ w < hi}`
    Indicator { lo: f64, hi: f64 },
}

impl Kernel {
    pub fn eval(&self, t: f64, w: f64) -> f64 {
        match *self {
            Kernel::Constant(c) => c,
            Kernel::Value => w,
            Kernel::Sine => w.sin(),
            Kernel::TimeValue => t * w,
            Kernel::Indicator { lo, hi } => {
                if w >= lo && w < hi {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Constant(c) => write!(f, "const:{c}"),
            Kernel::Value => f.write_str("w"),
            Kernel::Sine => f.write_str("sin"),
            Kernel::TimeValue => f.write_str("tw"),
            Kernel::Indicator { lo, hi } => write!(f, "ind:{lo}:{hi}"),
        }
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unknown kernel '{s}'"));
        let num = |p: &str| p.parse::<f64>().map_err(|_| bad());
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["w"] => Ok(Kernel::Value),
            ["sin"] => Ok(Kernel::Sine),
            ["tw"] => Ok(Kernel::TimeValue),
            ["const", c] => Ok(Kernel::Constant(num(c)?)),
            ["ind", lo, hi] => Ok(Kernel::Indicator {
                lo: num(lo)?,
                hi: num(hi)?,
            }),
            _ => Err(bad()),
        }
    }
}

/// A kernel truncated to `[-b, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictableSpec {
    pub kernel: Kernel,
    pub b: f64,
}

impl PredictableSpec {
    pub fn new(kernel: Kernel, b: f64) -> Result<Self> {
        if !(b > 0.0) {
            return Err(Error::InvalidConfig(format!("truncation level must be positive, got {b}")));
        }
        Ok(PredictableSpec { kernel, b })
    }

    pub fn eval(&self, t: f64, w: f64) -> f64 {
        self.kernel.eval(t, w).clamp(-self.b, self.b)
    }
}

/// `ξ_r`, the integrand's value on `(s(r), s(r+1)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleProcess {
    level: u32,
    values: Vec<f64>,
}

impl SimpleProcess {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `αY + βZ`, over the common length.
    pub fn linear_combination(alpha: f64, y: &SimpleProcess, beta: f64, z: &SimpleProcess) -> Result<SimpleProcess> {
        if y.level != z.level {
            return Err(Error::InvalidConfig("processes live on different partitions".into()));
        }
        let values = y.values.iter().zip(&z.values).map(|(a, b)| alpha * a + beta * b).collect();
        Ok(SimpleProcess { level: y.level, values })
    }
}

/// `ξ_r = clamp(Y(s(r), W(s(r))))` for every stopping time of `walk`.
pub fn simple_process(spec: &PredictableSpec, walk: &EmbeddedWalk) -> SimpleProcess {
    let values = (0..=walk.steps())
        .map(|r| spec.eval(walk.stop_time(r), walk.value(r)))
        .collect();
    SimpleProcess {
        level: walk.level(),
        values,
    }
}

/// `Σ_{r ≤ ⌊t 2^2m⌋} ξ_{r-1} X(r) 2^-m`.
pub fn predictable_sum(process: &SimpleProcess, walk: &EmbeddedWalk, t: f64) -> Result<f64> {
    let n = steps_until(walk, t)?;
    if n > process.values.len() {
        return Err(Error::out_of_horizon(format!("process has {} values, {n} needed", process.values.len())));
    }
    let dx = space_step(walk.level());
    let mut acc = RunningSum::default();
    for r in 1..=n {
        acc.add(process.values[r - 1] * f64::from(walk.sign(r)) * dx);
    }
    Ok(acc.value())
}

/// Monte Carlo estimates of both sides of the isometry
/// `E (Y·W)_K² = E ∫_0^K Y² dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsometryReport {
    pub replications: usize,
    /// Mean of the squared sums.
    pub lhs: f64,
    /// Mean of `Σ ξ²_{r-1} 2^-2m`.
    pub rhs: f64,
    /// Standard error of `lhs - rhs`.
    pub stderr: f64,
    /// Mean of the sums themselves.
    pub mean_sum: f64,
    pub mean_stderr: f64,
}

/// One replication: the sum and its quadratic term, on the Brownian path
/// built from `seed` (nested at level `m + 3`).
pub fn isometry_sample(spec: &PredictableSpec, m: u32, horizon: f64, seed: Seed) -> Result<(f64, f64)> {
    let fine = m + 3;
    let n = steps_in(m, horizon) as usize;
    // coarse levels have few steps and a noisy total stopping time, so the
    // fine path is lengthened until the embedded walk covers the horizon
    let mut span = 1.25 * horizon;
    let walk = loop {
        let nested = build_nested(seed, fine, span)?;
        let path = PiecewisePath::from_walk(nested.level(fine));
        let walk = skorohod_embed(&path, m, path.end_time());
        if walk.steps() >= n {
            break walk;
        }
        span *= 2.0;
    };
    let process = simple_process(spec, &walk);
    let sum = predictable_sum(&process, &walk, horizon)?;
    let mut quad = RunningSum::default();
    for r in 1..=n {
        quad.add(process.values[r - 1].powi(2) * time_step(m));
    }
    Ok((sum, quad.value()))
}

/// `∫_0^horizon (Y(t) - Y^b_m(t))² dt` along `path`, with `Y^b_m = ξ_r` on
/// `(s(r), s(r+1)]` and the integral taken on the path's knots.
pub fn truncation_gap(spec: &PredictableSpec, path: &PiecewisePath, walk: &EmbeddedWalk, horizon: f64) -> Result<f64> {
    let process = simple_process(spec, walk);
    let entries = &walk.stop_times().entries;
    let mut acc = RunningSum::default();
    let mut r = 0;
    for i in 1..path.knots() {
        let t = path.knot_time(i);
        if t > horizon {
            break;
        }
        while r + 1 < entries.len() && entries[r + 1] < t {
            r += 1;
        }
        if r + 1 >= entries.len() {
            return Err(Error::out_of_horizon(format!(
                "t = {t} after the last of {} stopping times",
                entries.len()
            )));
        }
        let gap = spec.kernel.eval(t, path.knot_value(i)) - process.values[r];
        acc.add(gap * gap * (t - path.knot_time(i - 1)));
    }
    Ok(acc.value())
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Replication `i` uses `seed.derive(i)`; results do not depend on the
/// thread count.
pub fn isometry_check(spec: &PredictableSpec, m: u32, horizon: f64, replications: usize, seed: Seed) -> Result<IsometryReport> {
    if replications < 2 {
        return Err(Error::InvalidConfig("isometry check needs at least 2 replications".into()));
    }
    let samples: Vec<(f64, f64)> = (0..replications as u64)
        .into_par_iter()
        .map(|i| isometry_sample(spec, m, horizon, seed.derive(i)))
        .collect::<Result<_>>()?;
    let sums: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let squares: Vec<f64> = samples.iter().map(|s| s.0 * s.0).collect();
    let quads: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let diffs: Vec<f64> = samples.iter().map(|s| s.0 * s.0 - s.1).collect();
    let (mean_sum, mean_stderr) = mean_and_stderr(&sums);
    let (_, stderr) = mean_and_stderr(&diffs);
    Ok(IsometryReport {
        replications,
        lhs: mean_and_stderr(&squares).0,
        rhs: mean_and_stderr(&quads).0,
        stderr,
        mean_sum,
        mean_stderr,
    })
}
