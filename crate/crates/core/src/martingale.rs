//! Continuous martingales with closed-form quadratic variation, their
//! Skorohod-type stopping times, discrete quadratic variation, Itô sums and
//! local times, and the Dambis–Dubins–Schwarz time change.

use std::str::FromStr;

use serde::Serialize;

use crate::coin::Seed;
use crate::embedding::{skorohod_embed, EmbeddedWalk};
use crate::error::{Error, Result};
use crate::function::GridFunction;
use crate::integrals::RunningSum;
use crate::local_time::{Direction, LocalTimeField};
use crate::path::PiecewisePath;
use crate::walks::{build_nested, space_step, time_step, LatticePath};

/// Right-continuous piecewise-constant volatility: `h(t) = h_i` on
/// `[t_i, t_{i+1})`, the last value holding forever.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    starts: Vec<f64>,
    values: Vec<f64>,
}

impl Schedule {
    pub fn new(pieces: Vec<(f64, f64)>) -> Result<Self> {
        let bad = |msg: &str| Err(Error::InvalidConfig(format!("volatility schedule: {msg}")));
        if pieces.first().map(|p| p.0) != Some(0.0) {
            return bad("must start at time 0");
        }
        if !pieces.windows(2).all(|w| w[1].0 > w[0].0) {
            return bad("start times must increase");
        }
        if !pieces.iter().all(|p| p.1 >= 0.0 && p.1.is_finite()) {
            return bad("values must be finite and non-negative");
        }
        let (starts, values) = pieces.into_iter().unzip();
        Ok(Schedule { starts, values })
    }

    pub fn constant(h: f64) -> Result<Self> {
        Self::new(vec![(0.0, h)])
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = self.starts.partition_point(|&s| s <= t).saturating_sub(1);
        self.values[i]
    }

    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.starts.iter().copied().zip(self.values.iter().copied())
    }
}

impl FromStr for Schedule {
    type Err = Error;

    /// `"0:1,0.5:2"`: `h = 1` from time 0, `h = 2` from time 0.5.
    fn from_str(s: &str) -> Result<Self> {
        let pieces = s
            .split(',')
            .map(|piece| {
                let (t, h) = piece
                    .split_once(':')
                    .ok_or_else(|| Error::InvalidConfig(format!("bad schedule piece '{piece}'")))?;
                let num = |x: &str| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidConfig(format!("bad number '{x}' in schedule")))
                };
                Ok((num(t)?, num(h)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Schedule::new(pieces)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MartingaleKind {
    /// `M(t) = W(c t)`
    Scaled { c: f64 },
    /// `M(t) = ∫_0^t h dW` with a deterministic step function `h`.
    Volatility(Schedule),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleSpec {
    pub kind: MartingaleKind,
    /// Level of the underlying nested Brownian path.
    pub fine_level: u32,
    pub horizon: f64,
}

impl MartingaleSpec {
    pub fn scaled(c: f64, fine_level: u32, horizon: f64) -> Self {
        MartingaleSpec {
            kind: MartingaleKind::Scaled { c },
            fine_level,
            horizon,
        }
    }

    pub fn volatility(schedule: Schedule, fine_level: u32, horizon: f64) -> Self {
        MartingaleSpec {
            kind: MartingaleKind::Volatility(schedule),
            fine_level,
            horizon,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidConfig(format!("horizon must be positive, got {}", self.horizon)));
        }
        if let MartingaleKind::Scaled { c } = self.kind {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::InvalidConfig(format!("clock speed must be positive, got {c}")));
            }
        }
        Ok(())
    }
}

/// Continuous non-decreasing piecewise-linear `⟨M⟩`, extended past the last
/// knot with the last slope.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticVariation {
    times: Vec<f64>,
    values: Vec<f64>,
    horizon: f64,
}

impl QuadraticVariation {
    /// Knots start at `(0, 0)`; `horizon` bounds [`Self::inverse`].
    fn new(times: Vec<f64>, values: Vec<f64>, horizon: f64) -> Self {
        debug_assert!(times.len() >= 2 && times[0] == 0.0 && values[0] == 0.0);
        QuadraticVariation { times, values, horizon }
    }

    pub fn linear(slope: f64, horizon: f64) -> Self {
        Self::new(vec![0.0, horizon], vec![0.0, slope * horizon], horizon)
    }

    /// `∫_0^t h²` for a volatility schedule.
    pub fn of_schedule(schedule: &Schedule, horizon: f64) -> Self {
        let mut times = vec![0.0];
        let mut values = vec![0.0];
        let pieces: Vec<(f64, f64)> = schedule.pieces().collect();
        for (i, &(start, h)) in pieces.iter().enumerate() {
            let end = pieces.get(i + 1).map_or(horizon, |p| p.0).min(horizon);
            if end <= start {
                break;
            }
            let last = *values.last().unwrap();
            if start > *times.last().unwrap() {
                times.push(start);
                values.push(last);
            }
            times.push(end);
            values.push(last + h * h * (end - start));
        }
        Self::new(times, values, horizon)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.times.len();
        let i = self.times.partition_point(|&s| s <= t).clamp(1, n - 1) - 1;
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        if t == t0 {
            return v0;
        }
        v0 + (t - t0) * (v1 - v0) / (t1 - t0)
    }

    /// `⟨M⟩_horizon`.
    pub fn total(&self) -> f64 {
        self.eval(self.horizon)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `T_s = inf{t ≥ 0 : ⟨M⟩_t ≥ s}`.
    pub fn inverse(&self, s: f64) -> Result<f64> {
        let total = self.total();
        if s > total {
            return Err(Error::BeyondTotalQv { requested: s, total });
        }
        if s <= 0.0 {
            return Ok(0.0);
        }
        let i = self.values.partition_point(|&v| v < s);
        if i >= self.values.len() {
            // the last knot lies before the horizon; continue the final slope
            let n = self.values.len();
            let slope = (self.values[n - 1] - self.values[n - 2]) / (self.times[n - 1] - self.times[n - 2]);
            return Ok(self.times[n - 1] + (s - self.values[n - 1]) / slope);
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        if s == v1 {
            return Ok(t1);
        }
        Ok(t0 + (s - v0) / (v1 - v0) * (t1 - t0))
    }
}

/// `T_s` for the quadratic variation `qv`.
pub fn dds_inverse(qv: &QuadraticVariation, s: f64) -> Result<f64> {
    qv.inverse(s)
}

/// A realized test martingale.
#[derive(Debug, Clone)]
pub struct Martingale {
    pub spec: MartingaleSpec,
    /// `M` on `[0, ≥ horizon]`.
    pub path: PiecewisePath,
    pub qv: QuadraticVariation,
    /// The Brownian motion `W` with `M(t) = W(⟨M⟩_t)`.
    pub dds: PiecewisePath,
}

/// Build the martingale of `spec` from the nested Brownian path of `seed`.
pub fn realize_martingale(spec: &MartingaleSpec, seed: Seed) -> Result<Martingale> {
    spec.validate()?;
    let n = spec.fine_level;
    match &spec.kind {
        MartingaleKind::Scaled { c } => {
            let nested = build_nested(seed, n, c * spec.horizon)?;
            let walk = nested.level(n);
            Ok(Martingale {
                spec: spec.clone(),
                path: PiecewisePath::time_scaled_walk(walk, *c),
                qv: QuadraticVariation::linear(*c, spec.horizon),
                dds: PiecewisePath::from_walk(walk),
            })
        }
        MartingaleKind::Volatility(schedule) => {
            let nested = build_nested(seed, n, spec.horizon)?;
            let walk = nested.level(n);
            let dt = time_step(n);
            let mut acc = RunningSum::default();
            let mut values = Vec::with_capacity(walk.steps() + 1);
            values.push(0.0);
            for j in 1..=walk.steps() {
                let h = schedule.eval((j - 1) as f64 * dt);
                acc.add(h * (walk.value(j) - walk.value(j - 1)));
                values.push(acc.value());
            }
            let qv = QuadraticVariation::of_schedule(schedule, spec.horizon);
            let mut dds_t = vec![0.0];
            let mut dds_v = vec![0.0];
            for (j, &v) in values.iter().enumerate().skip(1) {
                let s = qv.eval(j as f64 * dt);
                if s > *dds_t.last().unwrap() {
                    dds_t.push(s);
                    dds_v.push(v);
                }
            }
            Ok(Martingale {
                spec: spec.clone(),
                path: PiecewisePath::uniform(dt, values)?,
                qv,
                dds: PiecewisePath::new(dds_t, dds_v)?,
            })
        }
    }
}

/// `τ_m(k)`: the Skorohod embedding applied to a martingale path.
pub fn martingale_stopping(path: &PiecewisePath, m: u32, horizon: f64) -> EmbeddedWalk {
    skorohod_embed(path, m, horizon)
}

fn check_time(walk: &EmbeddedWalk, t: f64) -> Result<()> {
    if !(t >= 0.0) || t > walk.horizon() {
        return Err(Error::out_of_horizon(format!(
            "t = {t} beyond stopping times searched up to {}",
            walk.horizon()
        )));
    }
    Ok(())
}

/// `N_m(t) = 2^-2m #{r > 0 : τ_m(r) ≤ t}`.
pub fn discrete_qv(walk: &EmbeddedWalk, t: f64) -> Result<f64> {
    check_time(walk, t)?;
    Ok(walk.count_until(t) as f64 * time_step(walk.level()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QVReport {
    pub times: Vec<f64>,
    pub discrete: Vec<f64>,
    pub exact: Vec<f64>,
    /// `sup_{t ≤ horizon} |N_m(t) - ⟨M⟩_t|`, exact.
    pub sup_dev: f64,
}

/// Compare `N_m` with `⟨M⟩` on `grid + 1` equally spaced times in
/// `[0, horizon]`; the supremum is taken over all `t`, not just the grid.
pub fn qv_report(walk: &EmbeddedWalk, qv: &QuadraticVariation, horizon: f64, grid: usize) -> Result<QVReport> {
    check_time(walk, horizon)?;
    let dt = time_step(walk.level());
    // N is a step function and ⟨M⟩ is continuous and non-decreasing, so the
    // supremum sits at a jump (from either side) or at the horizon
    let mut sup_dev = 0.0f64;
    let jumps = walk.count_until(horizon);
    for r in 1..=jumps {
        let q = qv.eval(walk.stop_time(r));
        sup_dev = sup_dev
            .max((q - (r - 1) as f64 * dt).abs())
            .max((q - r as f64 * dt).abs());
    }
    sup_dev = sup_dev.max((qv.eval(horizon) - jumps as f64 * dt).abs());
    let times: Vec<f64> = (0..=grid).map(|i| horizon * i as f64 / grid.max(1) as f64).collect();
    let discrete = times.iter().map(|&t| discrete_qv(walk, t)).collect::<Result<_>>()?;
    let exact = times.iter().map(|&t| qv.eval(t)).collect();
    Ok(QVReport {
        times,
        discrete,
        exact,
        sup_dev,
    })
}

/// `Σ_{r > 0, τ_m(r) ≤ t} f(M(τ_m(r-1))) 2^-m X(r)`.
pub fn ito_sum_m(f: &GridFunction, walk: &EmbeddedWalk, t: f64) -> Result<f64> {
    check_time(walk, t)?;
    let dx = space_step(walk.level());
    let mut acc = RunningSum::default();
    for r in 1..=walk.count_until(t) {
        acc.add(f.eval(walk.value(r - 1)) * dx * f64::from(walk.sign(r)));
    }
    Ok(acc.value())
}

/// `∫_0^t f(M) dM - ∫_0^{⟨M⟩_t} f(W) dW`, both sides as level-`m` Itô sums
/// indexed by their stopping times.
pub fn time_change_residual(f: &GridFunction, martingale: &Martingale, m: u32, t: f64) -> Result<f64> {
    let s = martingale.qv.eval(t);
    let m_walk = martingale_stopping(&martingale.path, m, t);
    let w_walk = skorohod_embed(&martingale.dds, m, s.min(martingale.dds.end_time()));
    Ok(ito_sum_m(f, &m_walk, t)? - ito_sum_m(f, &w_walk, s.min(w_walk.horizon()))?)
}

/// `L^{M,±}_m`: crossing counts of the `τ`-embedded walk, read off at the
/// discrete quadratic-variation clock.
#[derive(Debug, Clone)]
pub struct MartingaleLocalTime {
    walk: EmbeddedWalk,
    field: LocalTimeField,
}

impl MartingaleLocalTime {
    pub fn walk(&self) -> &EmbeddedWalk {
        &self.walk
    }

    /// The field on the walk's own clock.
    pub fn field(&self) -> &LocalTimeField {
        &self.field
    }

    /// `L^{M,dir}_m(t, x)`.
    pub fn eval(&self, direction: Direction, t: f64, x: f64) -> Result<f64> {
        let clock = discrete_qv(&self.walk, t)?;
        Ok(self.field.eval_dir(direction, clock, x))
    }
}

pub fn martingale_local_time(path: &PiecewisePath, m: u32, horizon: f64) -> Result<MartingaleLocalTime> {
    if horizon > path.end_time() {
        return Err(Error::out_of_horizon(format!(
            "martingale path ends at {} before {horizon}",
            path.end_time()
        )));
    }
    let walk = martingale_stopping(path, m, horizon);
    let field = LocalTimeField::from_steps(&walk, Direction::Both, walk.steps());
    Ok(MartingaleLocalTime { walk, field })
}
