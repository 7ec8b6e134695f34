//! Skorohod embedding of dyadic walks into continuous paths.
//!
//! `s(0) = 0` and `s(k+1)` is the first time after `s(k)` at which the path
//! has moved exactly `±2^-m` away from its value at `s(k)`. The values at the
//! stopping times form a scaled simple random walk started at the path's
//! initial value.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::path::PiecewisePath;
use crate::walks::{space_step, steps_in, time_step, LatticePath, NestedWalks, StoppingSequence};

/// Walk values `path(s(k))` together with the stopping times `s(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedWalk {
    level: u32,
    origin: f64,
    /// End of the time window the stopping times were searched in.
    horizon: f64,
    stop_times: StoppingSequence<f64>,
    positions: Vec<i32>,
}

impl EmbeddedWalk {
    pub fn stop_times(&self) -> &StoppingSequence<f64> {
        &self.stop_times
    }

    pub fn stop_time(&self, k: usize) -> f64 {
        self.stop_times.entries[k]
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `B_m(t)` on the walk clock: `B_m(k 2^-2m) = path(s(k))`, linear in between.
    pub fn interpolate(&self, t: f64) -> Result<f64> {
        let scaled = t / time_step(self.level);
        if !(scaled >= 0.0) || scaled > self.steps() as f64 {
            return Err(Error::out_of_horizon(format!(
                "walk time {t} with {} embedded steps",
                self.steps()
            )));
        }
        let i = scaled.floor() as usize;
        let frac = scaled - i as f64;
        if frac == 0.0 {
            return Ok(self.value(i));
        }
        let (a, b) = (self.value(i), self.value(i + 1));
        Ok(a + frac * (b - a))
    }

    /// Number of stopping times at or before `t` (excluding `s(0)`).
    pub fn count_until(&self, t: f64) -> usize {
        self.stop_times.entries.partition_point(|&s| s <= t).saturating_sub(1)
    }
}

impl LatticePath for EmbeddedWalk {
    fn level(&self) -> u32 {
        self.level
    }

    fn origin(&self) -> f64 {
        self.origin
    }

    fn positions(&self) -> &[i32] {
        &self.positions
    }
}

/// Embed the level-`m` walk into `path`, keeping stopping times `≤ horizon`.
///
/// The sequence is marked complete when a further crossing was found after
/// the horizon, and incomplete when the path ended first.
pub fn skorohod_embed(path: &PiecewisePath, m: u32, horizon: f64) -> EmbeddedWalk {
    let (times, positions, complete) = match path.lattice_view() {
        Some(view) if view.level >= m => {
            let barrier = 1i32 << (view.level - m);
            let pos = view.positions;
            let mut times = vec![0.0];
            let mut steps = vec![0i32];
            let mut base = pos[0];
            let mut complete = false;
            for (j, &p) in pos.iter().enumerate().skip(1) {
                let d = p - base;
                if d == barrier || d == -barrier {
                    let t = j as f64 * view.dt;
                    if t > horizon {
                        complete = true;
                        break;
                    }
                    times.push(t);
                    steps.push(steps.last().unwrap() + d.signum());
                    base = p;
                }
            }
            (times, steps, complete)
        }
        _ => embed_general(path, m, horizon),
    };
    EmbeddedWalk {
        level: m,
        origin: path.start_value(),
        horizon: horizon.min(path.end_time()),
        stop_times: StoppingSequence {
            entries: times,
            complete,
        },
        positions,
    }
}

fn embed_general(path: &PiecewisePath, m: u32, horizon: f64) -> (Vec<f64>, Vec<i32>, bool) {
    let delta = space_step(m);
    let origin = path.start_value();
    let barrier = |p: i32| origin + f64::from(p) * delta;
    let mut times = vec![0.0];
    let mut steps = vec![0i32];
    let mut p = 0i32;
    let mut value = origin;
    for i in 0..path.knots().saturating_sub(1) {
        let (t0, t1) = (path.knot_time(i), path.knot_time(i + 1));
        let (v0, v1) = (path.knot_value(i), path.knot_value(i + 1));
        // several crossings can share one segment when it is steep
        loop {
            let (up, down) = (barrier(p + 1), barrier(p - 1));
            let target = if v1 >= up && value < up {
                up
            } else if v1 <= down && value > down {
                down
            } else {
                break;
            };
            let t = if v1 == target {
                t1
            } else {
                t0 + (target - v0) / (v1 - v0) * (t1 - t0)
            };
            if t > horizon {
                return (times, steps, true);
            }
            p += if target == up { 1 } else { -1 };
            value = target;
            times.push(t);
            steps.push(p);
        }
    }
    (times, steps, false)
}

/// Deviation of the composed bridge times from the deterministic grid,
/// with the high-probability bound it is compared to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquidReport {
    pub sup_dev: f64,
    pub bound: f64,
    pub within: bool,
}

/// `(42·C·K·log*K)^½ · m^½ · 2^-m` with `log* K = max(ln K, 1)`.
pub fn equid_bound(m: u32, horizon: f64, c: f64) -> f64 {
    let log_star = horizon.ln().max(1.0);
    (42.0 * c * horizon * log_star).sqrt() * f64::from(m).sqrt() * space_step(m)
}

/// `max_{k ≤ K 2^2m} |2^-2n T_{m,n}(k) - k 2^-2m|` against [`equid_bound`].
pub fn equid_diagnostic(walks: &NestedWalks, m: u32, n: u32, horizon: f64, c: f64) -> Result<EquidReport> {
    if m < 1 || n <= m {
        return Err(Error::InvalidConfig(format!("need n > m ≥ 1, got m = {m}, n = {n}")));
    }
    let upto = steps_in(m, horizon);
    let composed = walks.compose_t_all(m, n, upto)?;
    let (fine, coarse) = (time_step(n), time_step(m));
    let sup_dev = composed
        .iter()
        .enumerate()
        .map(|(k, &t)| (t as f64 * fine - k as f64 * coarse).abs())
        .fold(0.0, f64::max);
    let bound = equid_bound(m, horizon, c);
    Ok(EquidReport {
        sup_dev,
        bound,
        within: sup_dev < bound,
    })
}

/// `sup_{t ≤ horizon} |path(t) - B_m(t)|` with `B_m` interpolated on the walk
/// clock. Evaluated on every path knot and every walk grid point in range.
pub fn embedding_sup_error(path: &PiecewisePath, walk: &EmbeddedWalk, horizon: f64) -> Result<f64> {
    if horizon > path.end_time() {
        return Err(Error::out_of_horizon(format!("path ends before {horizon}")));
    }
    let mut worst = 0.0f64;
    for i in 0..path.knots() {
        let t = path.knot_time(i);
        if t > horizon {
            break;
        }
        worst = worst.max((path.knot_value(i) - walk.interpolate(t)?).abs());
    }
    // a standard-clock lattice path at a finer level already has every walk grid point as a knot
    let grid_is_knots = path
        .lattice_view()
        .is_some_and(|v| v.level >= walk.level() && v.dt == time_step(v.level));
    if !grid_is_knots {
        for k in 0..=steps_in(walk.level(), horizon) as usize {
            let t = k as f64 * time_step(walk.level());
            worst = worst.max((path.value_at(t)? - walk.interpolate(t)?).abs());
        }
    }
    Ok(worst)
}
