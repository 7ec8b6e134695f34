//! Raw, twisted and shrunken simple symmetric random walks.
//!
//! All walk state lives on the integer lattice: a level-`m` walk stores its
//! partial sums in units of `2^-m`, indexed by steps of length `2^-2m`.
//! Real numbers only appear in [`LatticeWalk::evaluate`] and in the path
//! adapters, so the refinement property can be checked with `==`.

use std::sync::{Arc, OnceLock};

use crate::coin::{CoinMatrix, CoinRow, Seed};
use crate::error::{Error, Result};

/// Default hard cap on raw coins consumed per level (about 1 GiB of
/// positions).
pub const DEFAULT_STEP_CAP: u64 = 1 << 28;

/// Spatial step `2^-m`.
#[inline]
pub fn space_step(level: u32) -> f64 {
    (-(level as f64)).exp2()
}

/// Temporal step `2^-2m`.
#[inline]
pub fn time_step(level: u32) -> f64 {
    (-2.0 * level as f64).exp2()
}

/// `⌊t · 2^2m⌋`, the number of whole level-`m` steps in `[0, t]`.
#[inline]
pub fn steps_in(level: u32, t: f64) -> u64 {
    (t * (2.0 * level as f64).exp2()).floor() as u64
}

/// Common view of a dyadic walk: integer positions about a real origin.
pub trait LatticePath {
    fn level(&self) -> u32;

    /// Real value at step 0.
    fn origin(&self) -> f64;

    /// Positions in lattice units of `2^-level`, relative to the origin.
    fn positions(&self) -> &[i32];

    fn steps(&self) -> usize {
        self.positions().len() - 1
    }

    /// Walk value after `k` steps.
    fn value(&self, k: usize) -> f64 {
        self.origin() + f64::from(self.positions()[k]) * space_step(self.level())
    }

    /// Sign of step `r ≥ 1`.
    fn sign(&self, r: usize) -> i8 {
        (self.positions()[r] - self.positions()[r - 1]) as i8
    }
}

/// A ±1 lattice walk at refinement level `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeWalk {
    level: u32,
    origin_units: i64,
    positions: Arc<Vec<i32>>,
}

impl LatticeWalk {
    /// Panics if `positions` is empty, does not start at 0, or takes a step
    /// other than ±1.
    pub fn new(level: u32, origin_units: i64, positions: Vec<i32>) -> Self {
        assert_eq!(positions.first(), Some(&0), "walk must start at lattice offset 0");
        assert!(
            positions.windows(2).all(|w| (w[1] - w[0]).abs() == 1),
            "walk increments must be ±1"
        );
        LatticeWalk {
            level,
            origin_units,
            positions: Arc::new(positions),
        }
    }

    pub fn from_increments(level: u32, origin_units: i64, increments: &[i8]) -> Self {
        let mut positions = Vec::with_capacity(increments.len() + 1);
        positions.push(0);
        let mut s = 0i32;
        for &x in increments {
            s += i32::from(x);
            positions.push(s);
        }
        LatticeWalk::new(level, origin_units, positions)
    }

    pub fn origin_units(&self) -> i64 {
        self.origin_units
    }

    pub fn position(&self, j: usize) -> i32 {
        self.positions[j]
    }

    pub fn increments(&self) -> impl Iterator<Item = i8> + '_ {
        self.positions.windows(2).map(|w| (w[1] - w[0]) as i8)
    }

    pub(crate) fn shared_positions(&self) -> Arc<Vec<i32>> {
        Arc::clone(&self.positions)
    }

    /// Time covered by the shrunken walk, `steps · 2^-2m`.
    pub fn horizon(&self) -> f64 {
        self.steps() as f64 * time_step(self.level)
    }

    /// The shrunken walk `B̃_m(t) = 2^-m S̃_m(t 2^2m)`, linearly interpolated.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        let scaled = t * (2.0 * self.level as f64).exp2();
        if !(scaled >= 0.0) || scaled > self.steps() as f64 {
            return Err(Error::out_of_horizon(format!(
                "t = {t} on a level-{} walk of horizon {}",
                self.level,
                self.horizon()
            )));
        }
        let i = scaled.floor() as usize;
        let frac = scaled - i as f64;
        let lo = f64::from(self.positions[i]);
        let units = if frac == 0.0 {
            lo
        } else {
            lo + frac * f64::from(self.positions[i + 1] - self.positions[i])
        };
        Ok((units + self.origin_units as f64) * space_step(self.level))
    }
}

impl LatticePath for LatticeWalk {
    fn level(&self) -> u32 {
        self.level
    }

    fn origin(&self) -> f64 {
        self.origin_units as f64 * space_step(self.level)
    }

    fn positions(&self) -> &[i32] {
        &self.positions
    }
}

/// A strictly increasing sequence of stopping indices or times starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingSequence<T = u64> {
    pub entries: Vec<T>,
    /// `false` when the underlying path ended before the next stopping time.
    pub complete: bool,
}

impl<T: Copy> StoppingSequence<T> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, k: usize) -> Option<T> {
        self.entries.get(k).copied()
    }
}

/// The walk `S_m(n) = X_m(1) + … + X_m(n)` from row `m` of the coin matrix.
pub fn raw_walk(matrix: &CoinMatrix, m: u32, n: usize) -> LatticeWalk {
    let increments: Vec<i8> = matrix.row(m).take(n).collect();
    LatticeWalk::from_increments(m, 0, &increments)
}

/// Bridge ends: `T(0) = 0`, `T(k+1)` the first later step at distance 2.
pub fn bridge_times<W: LatticePath + ?Sized>(walk: &W) -> StoppingSequence<u64> {
    let pos = walk.positions();
    let mut entries = Vec::with_capacity(pos.len() / 4 + 1);
    entries.push(0u64);
    let mut anchor = pos[0];
    for (n, &p) in pos.iter().enumerate().skip(1) {
        if (p - anchor).abs() == 2 {
            entries.push(n as u64);
            anchor = p;
        }
    }
    let last = *entries.last().unwrap() as usize;
    StoppingSequence {
        complete: last == pos.len() - 1,
        entries,
    }
}

/// Twist `raw` (level `m`) against the twisted level-`m-1` walk `prev`.
///
/// Bridge `k` keeps its raw increments when its displacement equals
/// `2 · prev_increment(k+1)` and is negated otherwise. The output ends at the
/// bridge covering the last increment of `prev`; later raw steps are dropped.
pub fn twist(prev: &LatticeWalk, raw: &LatticeWalk) -> Result<LatticeWalk> {
    let bridges = bridge_times(raw);
    let needed = prev.steps();
    if bridges.len() - 1 < needed {
        return Err(Error::InsufficientBridges {
            level: raw.level(),
            needed,
            available: bridges.len() - 1,
        });
    }
    let raw_pos = raw.positions();
    let prev_pos = prev.positions();
    let end = bridges.entries[needed] as usize;
    let mut out = Vec::with_capacity(end + 1);
    out.push(0i32);
    for k in 0..needed {
        let (a, b) = (bridges.entries[k] as usize, bridges.entries[k + 1] as usize);
        let wanted = 2 * (prev_pos[k + 1] - prev_pos[k]);
        let flip = raw_pos[b] - raw_pos[a] != wanted;
        let base = *out.last().unwrap();
        for n in a + 1..=b {
            let d = raw_pos[n] - raw_pos[a];
            out.push(if flip { base - d } else { base + d });
        }
    }
    Ok(LatticeWalk::new(raw.level(), 2 * prev.origin_units(), out))
}

/// Parameters of a nested construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NestedConfig {
    pub max_level: u32,
    /// Every level covers at least `⌈horizon · 2^2m⌉` steps.
    pub horizon: f64,
    pub step_cap: u64,
}

impl NestedConfig {
    pub fn new(max_level: u32, horizon: f64) -> Self {
        NestedConfig {
            max_level,
            horizon,
            step_cap: DEFAULT_STEP_CAP,
        }
    }

    fn target(&self, level: u32) -> usize {
        (self.horizon * (2.0 * level as f64).exp2()).ceil() as usize
    }
}

/// The twist-and-shrink walks `B̃_0, …, B̃_M` built from one seed.
#[derive(Debug)]
pub struct NestedWalks {
    seed: Seed,
    horizon: f64,
    levels: Vec<LatticeWalk>,
    bridge_cache: Vec<OnceLock<Vec<u64>>>,
}

/// Build the nested sequence for levels `0..=max_level`.
pub fn build_nested(seed: Seed, max_level: u32, horizon: f64) -> Result<NestedWalks> {
    NestedWalks::build(seed, NestedConfig::new(max_level, horizon))
}

struct LevelState {
    positions: Vec<i32>,
    row: CoinRow,
    bridges: usize,
}

struct Builder {
    cap: u64,
    levels: Vec<LevelState>,
    scratch: Vec<i8>,
}

impl Builder {
    fn len(&self, m: usize) -> usize {
        self.levels[m].positions.len() - 1
    }

    fn take_coin(&mut self, m: usize) -> Result<i8> {
        let state = &mut self.levels[m];
        if state.row.consumed() >= self.cap {
            return Err(Error::StepBudgetExceeded {
                level: m as u32,
                cap: self.cap,
            });
        }
        Ok(state.row.next_sign())
    }

    fn ensure_len(&mut self, m: usize, n: usize) -> Result<()> {
        if m == 0 {
            while self.len(0) < n {
                let c = self.take_coin(0)?;
                let state = &mut self.levels[0];
                let last = *state.positions.last().unwrap();
                state.positions.push(last + i32::from(c));
            }
            return Ok(());
        }
        while self.len(m) < n {
            // a bridge has mean length 4
            let more = ((n - self.len(m)) / 4).max(1);
            let want = self.levels[m].bridges + more;
            self.ensure_bridges(m, want)?;
        }
        Ok(())
    }

    fn ensure_bridges(&mut self, m: usize, b: usize) -> Result<()> {
        self.ensure_len(m - 1, b)?;
        while self.levels[m].bridges < b {
            let k = self.levels[m].bridges;
            let prev = &self.levels[m - 1].positions;
            let wanted = 2 * (prev[k + 1] - prev[k]);

            self.scratch.clear();
            let mut d = 0i32;
            while d.abs() != 2 {
                let c = self.take_coin(m)?;
                d += i32::from(c);
                self.scratch.push(c);
            }
            let flip = d != wanted;
            let state = &mut self.levels[m];
            let mut s = *state.positions.last().unwrap();
            for &c in &self.scratch {
                s += if flip { -i32::from(c) } else { i32::from(c) };
                state.positions.push(s);
            }
            state.bridges += 1;
        }
        Ok(())
    }
}

impl NestedWalks {
    pub fn build(seed: Seed, config: NestedConfig) -> Result<Self> {
        if !(config.horizon > 0.0) || !config.horizon.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "nested construction needs a positive horizon, got {}",
                config.horizon
            )));
        }
        // every step of a level consumes at least one raw coin
        if let Some(m) = (0..=config.max_level).find(|&m| config.target(m) as u64 > config.step_cap) {
            return Err(Error::StepBudgetExceeded {
                level: m,
                cap: config.step_cap,
            });
        }
        let matrix = CoinMatrix::new(seed);
        let top = config.max_level as usize;
        let mut builder = Builder {
            cap: config.step_cap,
            levels: (0..=config.max_level)
                .map(|m| {
                    let mut positions = Vec::with_capacity(config.target(m) + config.target(m) / 8 + 16);
                    positions.push(0);
                    LevelState {
                        positions,
                        row: matrix.row(m),
                        bridges: 0,
                    }
                })
                .collect(),
            scratch: Vec::new(),
        };
        for m in 0..=top {
            builder.ensure_len(m, config.target(m as u32))?;
        }
        // level m+1 must refine at least the horizon of level m
        for m in 1..=top {
            builder.ensure_bridges(m, config.target(m as u32 - 1))?;
        }

        let levels: Vec<LatticeWalk> = builder
            .levels
            .into_iter()
            .enumerate()
            .map(|(m, state)| LatticeWalk {
                level: m as u32,
                origin_units: 0,
                positions: Arc::new(state.positions),
            })
            .collect();
        Ok(NestedWalks {
            seed,
            horizon: config.horizon,
            bridge_cache: (0..levels.len()).map(|_| OnceLock::new()).collect(),
            levels,
        })
    }

    pub fn seed(&self) -> Seed {
        self.seed
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn max_level(&self) -> u32 {
        self.levels.len() as u32 - 1
    }

    pub fn level(&self, m: u32) -> &LatticeWalk {
        &self.levels[m as usize]
    }

    pub fn levels(&self) -> &[LatticeWalk] {
        &self.levels
    }

    /// `T_m(k)` for the twisted level-`m` walk (same as for the raw walk,
    /// since flipping a bridge keeps its endpoints' distance).
    pub fn bridge_times(&self, m: u32) -> &[u64] {
        self.bridge_cache[m as usize].get_or_init(|| bridge_times(&self.levels[m as usize]).entries)
    }

    /// `T_{m,n}(k) = T_n ∘ … ∘ T_{m+1}(k)`, with `T_{m,m}(k) = k`.
    pub fn compose_t(&self, m: u32, n: u32, k: u64) -> Result<u64> {
        if n < m || n > self.max_level() {
            return Err(Error::out_of_horizon(format!("levels {m}..{n}")));
        }
        let mut idx = k;
        for level in m + 1..=n {
            idx = *self
                .bridge_times(level)
                .get(idx as usize)
                .ok_or_else(|| Error::out_of_horizon(format!("T_{level}({idx})")))?;
        }
        if m == n && k as usize > self.level(m).steps() {
            return Err(Error::out_of_horizon(format!("index {k} at level {m}")));
        }
        Ok(idx)
    }

    /// `T_{m,n}(k)` for all `k ≤ upto`.
    pub fn compose_t_all(&self, m: u32, n: u32, upto: u64) -> Result<Vec<u64>> {
        let mut idx: Vec<u64> = (0..=upto).collect();
        for level in m + 1..=n {
            let t = self.bridge_times(level);
            if upto as usize >= idx.len() || idx[upto as usize] as usize >= t.len() {
                return Err(Error::out_of_horizon(format!(
                    "T_{{{m},{level}}}({upto}) needs bridge {} of {}",
                    idx[upto as usize],
                    t.len() - 1
                )));
            }
            for i in idx.iter_mut() {
                *i = t[*i as usize];
            }
        }
        Ok(idx)
    }

    /// First violation of `S̃_{m+1}(T_{m+1}(k)) = 2 S̃_m(k)` over every bridge
    /// of every consecutive pair, or `None` when the property holds.
    pub fn refinement_violation(&self) -> Option<(u32, usize)> {
        for m in 0..self.max_level() {
            let coarse = self.level(m).positions();
            let fine = self.level(m + 1).positions();
            let t = self.bridge_times(m + 1);
            for (k, &tk) in t.iter().enumerate() {
                if k >= coarse.len() {
                    break;
                }
                if fine[tk as usize] != 2 * coarse[k] {
                    return Some((m, k));
                }
            }
        }
        None
    }

    /// Number of bridges checked by [`Self::refinement_violation`].
    pub fn refinement_checks(&self) -> usize {
        (1..=self.max_level())
            .map(|m| self.bridge_times(m).len().min(self.level(m - 1).positions().len()))
            .sum()
    }

    /// `max_{k ≤ K 2^2m} |T_{m+1}(k) 2^-2(m+1) - k 2^-2m|`.
    pub fn max_time_lag(&self, m: u32, horizon: f64) -> Result<f64> {
        let upto = steps_in(m, horizon);
        let t = self.compose_t_all(m, m + 1, upto)?;
        let (fine, coarse) = (time_step(m + 1), time_step(m));
        Ok(t.iter()
            .enumerate()
            .map(|(k, &tk)| (tk as f64 * fine - k as f64 * coarse).abs())
            .fold(0.0, f64::max))
    }
}

/// `sup_{0 ≤ t ≤ horizon} |B̃_coarse(t) - B̃_fine(t)|` for two walks with
/// `coarse.level() ≤ fine.level()`. The supremum of the difference of two
/// piecewise-linear functions sits on a knot; the fine grid holds them all.
pub fn sup_distance(coarse: &LatticeWalk, fine: &LatticeWalk, horizon: f64) -> Result<f64> {
    let (m, n) = (coarse.level(), fine.level());
    if m > n {
        return Err(Error::InvalidConfig(format!("coarse level {m} above fine level {n}")));
    }
    let fine_steps = steps_in(n, horizon) as usize;
    let ratio = 1usize << (2 * (n - m));
    let coarse_steps = fine_steps.div_ceil(ratio);
    if fine_steps > fine.steps() || coarse_steps > coarse.steps() {
        return Err(Error::out_of_horizon(format!("sup distance up to t = {horizon}")));
    }
    let cp = coarse.positions();
    let fp = fine.positions();
    let scale_ratio = (1i64 << (n - m)) as f64;
    let co = coarse.origin_units() as f64 * scale_ratio;
    let fo = fine.origin_units() as f64;
    let mut worst = 0.0f64;
    for j in 0..=fine_steps {
        let cell = j / ratio;
        let frac = (j % ratio) as f64 / ratio as f64;
        let c = if frac == 0.0 {
            f64::from(cp[cell])
        } else {
            f64::from(cp[cell]) + frac * f64::from(cp[cell + 1] - cp[cell])
        };
        // both in fine lattice units
        let diff = (c * scale_ratio + co) - (f64::from(fp[j]) + fo);
        worst = worst.max(diff.abs());
    }
    Ok(worst * space_step(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_walk_follows_the_coin_row() {
        let matrix = CoinMatrix::new(Seed(3));
        let empty = raw_walk(&matrix, 2, 0);
        assert_eq!(empty.positions(), &[0]);
        let w = raw_walk(&matrix, 2, 200);
        for (j, x) in w.increments().enumerate() {
            assert_eq!(x, matrix.coin(2, j as u64 + 1));
        }
        for n in 0..=200 {
            assert_eq!(w.position(n).rem_euclid(2), (n % 2) as i32);
        }
    }

    #[test]
    fn bridge_times_of_hand_walks() {
        let w = LatticeWalk::from_increments(0, 0, &[1, 1, -1, -1, -1, -1]);
        let t = bridge_times(&w);
        assert_eq!(t.entries, vec![0, 2, 4, 6]);
        assert!(t.complete);

        let w = LatticeWalk::from_increments(0, 0, &[1, -1, 1, -1]);
        let t = bridge_times(&w);
        assert_eq!(t.entries, vec![0]);
        assert!(!t.complete);
    }

    #[test]
    fn first_bridge_needs_two_steps() {
        let matrix = CoinMatrix::new(Seed(11));
        let t = bridge_times(&raw_walk(&matrix, 1, 1000));
        assert!(t.entries[1] >= 2);
        assert!(t.entries.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn twist_without_flips_is_identity() {
        let prev = LatticeWalk::from_increments(0, 0, &[1, -1]);
        let raw = LatticeWalk::from_increments(1, 0, &[1, 1, -1, 1, -1, -1]);
        let out = twist(&prev, &raw).unwrap();
        assert_eq!(out.positions(), raw.positions());
    }

    #[test]
    fn twist_flips_a_mismatched_bridge() {
        // raw partial sums 0,-1,-2,-1,0,-1,-2: bridges end at steps 2, 4, 6
        // with displacements -2, +2, -2; prev asks for +2 then -2
        let prev = LatticeWalk::from_increments(0, 0, &[1, -1]);
        let raw = LatticeWalk::from_increments(1, 0, &[-1, -1, 1, 1, -1, -1]);
        let out = twist(&prev, &raw).unwrap();
        let inc: Vec<i8> = out.increments().collect();
        assert_eq!(inc, vec![1, 1, -1, -1]);
        assert_eq!(out.position(2), 2 * prev.position(1));
        assert_eq!(out.position(4), 2 * prev.position(2));
    }

    #[test]
    fn twist_reports_short_raw_walks() {
        let prev = LatticeWalk::from_increments(0, 0, &[1, 1, 1]);
        let raw = LatticeWalk::from_increments(1, 0, &[1, 1, 1, -1]);
        assert!(matches!(
            twist(&prev, &raw),
            Err(Error::InsufficientBridges { needed: 3, available: 1, .. })
        ));
    }

    #[test]
    fn twist_matches_nested_builder() {
        // the lazy builder and the batch twist agree on the same coin rows
        let seed = Seed(2024);
        let nested = build_nested(seed, 3, 1.0).unwrap();
        let matrix = CoinMatrix::new(seed);
        for m in 1..=3u32 {
            let prev = nested.level(m - 1);
            let raw = raw_walk(&matrix, m, 64 * (prev.steps() + 8));
            let twisted = twist(prev, &raw).unwrap();
            let n = twisted.steps().min(nested.level(m).steps());
            assert_eq!(&twisted.positions()[..=n], &nested.level(m).positions()[..=n]);
        }
    }

    #[test]
    fn nested_levels_cover_horizon_and_refine() {
        let nested = build_nested(Seed(5), 6, 1.5).unwrap();
        for m in 0..=6 {
            let need = (1.5 * 4f64.powi(m as i32)).ceil() as usize;
            assert!(nested.level(m).steps() >= need);
        }
        assert_eq!(nested.refinement_violation(), None);
        for m in 0..6u32 {
            let b = nested.bridge_times(m + 1);
            assert!(b.len() > (1.5 * 4f64.powi(m as i32)) as usize);
            for k in 0..b.len().min(nested.level(m).steps()) {
                let fine = nested.level(m + 1).evaluate(b[k] as f64 * time_step(m + 1)).unwrap();
                let coarse = nested.level(m).evaluate(k as f64 * time_step(m)).unwrap();
                assert_eq!(fine, coarse);
            }
        }
    }

    #[test]
    fn level_zero_only_is_the_raw_walk() {
        let nested = build_nested(Seed(8), 0, 10.0).unwrap();
        let raw = raw_walk(&CoinMatrix::new(Seed(8)), 0, nested.level(0).steps());
        assert_eq!(nested.level(0).positions(), raw.positions());
    }

    #[test]
    fn step_budget_is_enforced() {
        let config = NestedConfig {
            max_level: 4,
            horizon: 1.0,
            step_cap: 100,
        };
        assert!(matches!(
            NestedWalks::build(Seed(1), config),
            Err(Error::StepBudgetExceeded { .. })
        ));
    }

    #[test]
    fn evaluate_interpolates_the_shrunken_walk() {
        let w = LatticeWalk::from_increments(1, 3, &[1, 1, -1, 1]);
        // grid: 2^-1 (3 + pos)
        assert_eq!(w.evaluate(0.0).unwrap(), 1.5);
        assert_eq!(w.evaluate(0.5).unwrap(), 2.5);
        assert_eq!(w.evaluate(0.125).unwrap(), 1.75);
        assert!(w.evaluate(1.01).is_err());
        assert!(w.evaluate(-0.1).is_err());
        let (a, b) = (w.evaluate(0.3).unwrap(), w.evaluate(0.45).unwrap());
        assert!((a - b).abs() <= 2.0 * 0.15 + 1e-15);
    }

    #[test]
    fn composition_of_bridge_times() {
        let nested = build_nested(Seed(77), 5, 1.25).unwrap();
        assert_eq!(nested.compose_t(2, 2, 9).unwrap(), 9);
        assert_eq!(nested.compose_t(2, 3, 9).unwrap(), nested.bridge_times(3)[9]);
        let all = nested.compose_t_all(1, 5, 3).unwrap();
        assert!(all.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(all[3], nested.compose_t(1, 5, 3).unwrap());
        assert!(nested.compose_t(1, 5, 1 << 20).is_err());
    }

    #[test]
    fn sup_distance_of_a_walk_to_itself_is_zero() {
        let nested = build_nested(Seed(4), 5, 1.0).unwrap();
        assert_eq!(sup_distance(nested.level(5), nested.level(5), 1.0).unwrap(), 0.0);
        let d = sup_distance(nested.level(2), nested.level(5), 1.0).unwrap();
        // brute force over a fine time grid
        let brute = (0..=4096)
            .map(|j| {
                let t = j as f64 / 4096.0;
                (nested.level(2).evaluate(t).unwrap() - nested.level(5).evaluate(t).unwrap()).abs()
            })
            .fold(0.0, f64::max);
        assert!((d - brute).abs() < 1e-12, "{d} vs {brute}");
    }
}
