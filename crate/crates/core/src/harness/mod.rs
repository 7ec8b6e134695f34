//! Experiment configuration and reproducible convergence tables.
//!
//! Every replication runs on its own derived seed and replications are
//! merged in index order, so a table depends only on its configuration.

mod table;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use table::{format_value, least_squares_slope, median, ConvergenceTable, Format, Row, CSV_HEADER};

use crate::calculus::identity_suite;
use crate::coin::Seed;
use crate::embedding::{embedding_sup_error, equid_diagnostic, skorohod_embed};
use crate::error::{Error, Result};
use crate::function::GridFunction;
use crate::integrals::{ito_sums, ito_tanaka_series, tanaka_check, ConvexDiffSpec};
use crate::local_time::{discrete_local_time, field_sup_distance, Direction, LocalTimeField};
use crate::martingale::{
    martingale_local_time, martingale_stopping, qv_report, realize_martingale, time_change_residual, Martingale,
    MartingaleSpec, Schedule,
};
use crate::path::PiecewisePath;
use crate::predictable::{isometry_check, truncation_gap, Kernel, PredictableSpec};
use crate::walks::{build_nested, space_step, steps_in, sup_distance, time_step, LatticePath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// `sup |B̃_m - B̃_fine|`
    Brownian,
    /// Embedding error and stopping-time lag against the fine path.
    Embedding,
    /// Up local time against the fine level, and the occupation mass.
    Localtime,
    /// The four exact identities on random sequences.
    Identities,
    /// Itô sum of the identity against its closed form.
    Ito,
    /// `sup_t |full_rhs_m(t) - (g(B_fine(t)) - g(a))|`
    ItoTanaka,
    Tanaka,
    Isometry,
    /// Discrete against exact quadratic variation of a test martingale.
    Qv,
    TimeChange,
    /// Martingale up local time against half the DDS local time.
    Mlocaltime,
    /// `∫(Y - Y^b_m)² dt` on the diagonal `b = m`, untruncated `Y` on the
    /// fine path.
    Truncation,
}

impl Experiment {
    pub const ALL: [Experiment; 12] = [
        Experiment::Brownian,
        Experiment::Embedding,
        Experiment::Localtime,
        Experiment::Identities,
        Experiment::Ito,
        Experiment::ItoTanaka,
        Experiment::Tanaka,
        Experiment::Isometry,
        Experiment::Qv,
        Experiment::TimeChange,
        Experiment::Mlocaltime,
        Experiment::Truncation,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Experiment::Brownian => "brownian",
            Experiment::Embedding => "embedding",
            Experiment::Localtime => "localtime",
            Experiment::Identities => "identities",
            Experiment::Ito => "ito",
            Experiment::ItoTanaka => "ito-tanaka",
            Experiment::Tanaka => "tanaka",
            Experiment::Isometry => "isometry",
            Experiment::Qv => "qv",
            Experiment::TimeChange => "time-change",
            Experiment::Mlocaltime => "mlocaltime",
            Experiment::Truncation => "truncation",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.id() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown experiment '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: Seed,
    /// Seeds per level (random-suite size for `identities`, Monte Carlo
    /// replications for `isometry`).
    pub replications: usize,
    pub min_level: u32,
    pub max_level: u32,
    /// Reference level; must exceed `max_level`.
    pub fine_level: u32,
    pub horizon: f64,
    /// Catalog id of `f` or `g`.
    pub function: Option<String>,
    pub kernel: Option<String>,
    /// Truncation level of the kernel.
    pub b: f64,
    /// Clock speed of a scaled Brownian martingale.
    pub c: f64,
    /// Volatility schedule; replaces the scaled martingale when set.
    pub schedule: Option<String>,
    pub max_n: usize,
    /// Time grid for local-time comparisons.
    pub grid_t: usize,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl ExperimentConfig {
    /// Defaults sized for a laptop.
    pub fn new(experiment: Experiment, seed: Seed) -> Self {
        let (min_level, max_level, fine_level, replications) = match experiment {
            Experiment::Brownian | Experiment::Embedding => (4, 10, 12, 20),
            Experiment::Localtime | Experiment::ItoTanaka | Experiment::Mlocaltime => (4, 9, 12, 20),
            Experiment::Identities => (0, 0, 1, 1000),
            Experiment::Ito => (0, 12, 13, 8),
            Experiment::Tanaka => (10, 10, 12, 20),
            Experiment::Isometry => (6, 6, 9, 2000),
            Experiment::Qv => (8, 10, 13, 20),
            Experiment::TimeChange => (8, 8, 11, 20),
            Experiment::Truncation => (1, 6, 9, 20),
        };
        let function = match experiment {
            Experiment::ItoTanaka => Some("abs:0".to_string()),
            Experiment::TimeChange => Some("identity".to_string()),
            _ => None,
        };
        ExperimentConfig {
            experiment,
            seed,
            replications,
            min_level,
            max_level,
            fine_level,
            horizon: 1.0,
            function,
            kernel: matches!(experiment, Experiment::Isometry | Experiment::Truncation).then(|| "w".to_string()),
            b: 3.0,
            c: if experiment == Experiment::TimeChange { 4.0 } else { 1.0 },
            schedule: None,
            max_n: 4096,
            grid_t: 256,
            threads: None,
            output: None,
            format: Format::Csv,
        }
    }

    pub fn levels(&self) -> std::ops::RangeInclusive<u32> {
        self.min_level..=self.max_level
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.min_level > self.max_level {
            return bad(format!("empty level range {}..{}", self.min_level, self.max_level));
        }
        if self.fine_level <= self.max_level {
            return bad(format!(
                "fine level {} must exceed the largest level {}",
                self.fine_level, self.max_level
            ));
        }
        if self.fine_level > 15 {
            return bad(format!("fine level {} is beyond desk scale (max 15)", self.fine_level));
        }
        if self.replications < 1 {
            return bad("replication count must be at least 1".into());
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.b > 0.0) {
            return bad(format!("truncation level must be positive, got {}", self.b));
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return bad(format!("clock speed must be positive, got {}", self.c));
        }
        if self.grid_t == 0 {
            return bad("time grid needs at least one interval".into());
        }
        match self.experiment {
            Experiment::Qv | Experiment::TimeChange | Experiment::Mlocaltime if self.fine_level < self.max_level + 3 => {
                bad(format!(
                    "martingale experiments need fine level ≥ max level + 3, got {} and {}",
                    self.fine_level, self.max_level
                ))
            }
            Experiment::Isometry if self.replications < 2 => bad("isometry needs at least 2 replications".into()),
            Experiment::Embedding if self.min_level == 0 => bad("embedding lag needs levels ≥ 1".into()),
            Experiment::Truncation if self.min_level == 0 => bad("truncation level b = m needs levels ≥ 1".into()),
            Experiment::ItoTanaka => self.convex_spec().map(|_| ()),
            Experiment::TimeChange => self.function().and(self.martingale()).map(|_| ()),
            Experiment::Isometry => self.predictable().map(|_| ()),
            Experiment::Truncation => self.kernel().map(|_| ()),
            Experiment::Qv | Experiment::Mlocaltime => self.martingale().map(|_| ()),
            _ => Ok(()),
        }
    }

    fn convex_spec(&self) -> Result<ConvexDiffSpec> {
        self.function.as_deref().unwrap_or("abs:0").parse()
    }

    fn function(&self) -> Result<GridFunction> {
        self.function.as_deref().unwrap_or("identity").parse()
    }

    fn kernel(&self) -> Result<Kernel> {
        self.kernel.as_deref().unwrap_or("w").parse()
    }

    fn predictable(&self) -> Result<PredictableSpec> {
        PredictableSpec::new(self.kernel()?, self.b)
    }

    fn martingale(&self) -> Result<MartingaleSpec> {
        Ok(match &self.schedule {
            Some(s) => MartingaleSpec::volatility(s.parse::<Schedule>()?, self.fine_level, self.horizon),
            None => MartingaleSpec::scaled(self.c, self.fine_level, self.horizon),
        })
    }
}

/// Run `config`, in parallel over replications when a thread pool allows.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ConvergenceTable> {
    config.validate()?;
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(|| run(config)),
        None => run(config),
    }
}

/// Write the table to `config.output`, or return it as text when unset.
pub fn emit(config: &ExperimentConfig, table: &ConvergenceTable) -> std::io::Result<Option<String>> {
    let text = table.emit(config.format);
    match &config.output {
        Some(path) => std::fs::write(path, text).map(|_| None),
        None => Ok(Some(text)),
    }
}

/// Initial length of fine paths, in horizons.
const EMBED_MARGIN: f64 = 2.0;

type Metrics = Vec<(u32, &'static str, f64)>;

fn run(config: &ExperimentConfig) -> Result<ConvergenceTable> {
    let id = config.experiment.id();
    let mut table = ConvergenceTable::new();
    match config.experiment {
        Experiment::Identities => {
            let r = identity_suite(config.replications, config.max_n, config.seed);
            for (metric, value) in [
                ("stratonovich", r.stratonovich),
                ("ito", r.ito),
                ("ito_tanaka", r.ito_tanaka),
                ("occupation", r.occupation),
            ] {
                table.record(id, 0, config.seed.0, metric, value)?;
            }
        }
        Experiment::Isometry => {
            let spec = config.predictable()?;
            for m in config.levels() {
                let r = isometry_check(&spec, m, config.horizon, config.replications, config.seed)?;
                for (metric, value) in [
                    ("lhs", r.lhs),
                    ("rhs", r.rhs),
                    ("stderr", r.stderr),
                    ("gap", (r.lhs - r.rhs).abs()),
                    ("mean_sum", r.mean_sum),
                    ("mean_stderr", r.mean_stderr),
                ] {
                    table.record(id, m, config.seed.0, metric, value)?;
                }
            }
        }
        _ => {
            let per_seed: Vec<(Seed, Metrics)> = (0..config.replications as u64)
                .into_par_iter()
                .map(|i| {
                    let seed = config.seed.derive(i);
                    replication(config, seed).map(|rows| (seed, rows))
                })
                .collect::<Result<_>>()?;
            for (seed, rows) in per_seed {
                for (m, metric, value) in rows {
                    table.record(id, m, seed.0, metric, value)?;
                }
            }
        }
    }
    Ok(table)
}

fn fine_path(config: &ExperimentConfig, seed: Seed, span: f64) -> Result<PiecewisePath> {
    let nested = build_nested(seed, config.fine_level, span)?;
    Ok(PiecewisePath::from_walk(nested.level(config.fine_level)))
}

/// One replication's rows. Embedding experiments start from a fine path
/// `EMBED_MARGIN` horizons long and double it while a coarse embedded walk
/// falls short of the horizon; the step budget bounds the retries.
fn replication(config: &ExperimentConfig, seed: Seed) -> Result<Metrics> {
    let mut span = EMBED_MARGIN * config.horizon;
    loop {
        match replication_on(config, seed, span) {
            Err(Error::OutOfHorizon { .. }) if uses_embedding(config.experiment) => span *= 2.0,
            other => return other,
        }
    }
}

fn uses_embedding(experiment: Experiment) -> bool {
    matches!(
        experiment,
        Experiment::Embedding | Experiment::ItoTanaka | Experiment::Tanaka | Experiment::Truncation
    )
}

fn replication_on(config: &ExperimentConfig, seed: Seed, span: f64) -> Result<Metrics> {
    let k = config.horizon;
    let fine = config.fine_level;
    let mut out = Metrics::new();
    match config.experiment {
        Experiment::Brownian => {
            let nested = build_nested(seed, fine, k)?;
            for m in config.levels() {
                out.push((m, "sup_error", sup_distance(nested.level(m), nested.level(fine), k)?));
            }
        }
        Experiment::Embedding => {
            let nested = build_nested(seed, fine, span)?;
            let path = PiecewisePath::from_walk(nested.level(fine));
            for m in config.levels() {
                let walk = skorohod_embed(&path, m, path.end_time());
                out.push((m, "sup_error", embedding_sup_error(&path, &walk, k)?));
                let lag = equid_diagnostic(&nested, m, fine, k, 2.0)?;
                out.push((m, "equid_dev", lag.sup_dev));
                out.push((m, "equid_within", if lag.within { 1.0 } else { 0.0 }));
            }
        }
        Experiment::Localtime => {
            let nested = build_nested(seed, fine, k)?;
            let reference = discrete_local_time(nested.level(fine), Direction::Up, k)?;
            for m in config.levels() {
                let walk = nested.level(m);
                let field = discrete_local_time(walk, Direction::Up, k)?;
                out.push((m, "sup_gap_up", field_sup_distance(&field, &reference, Direction::Up, k, config.grid_t)));
                out.push((m, "occupation_defect", occupation_defect(&field)));
            }
        }
        Experiment::Ito => {
            // the embedded walks of a nested path are the nested walks themselves
            let nested = build_nested(seed, config.max_level, 1.25 * k)?;
            for m in config.levels() {
                let walk = nested.level(m);
                let n = steps_until(walk, k)?;
                let sums = ito_sums(&GridFunction::Identity, walk, n);
                let a = walk.origin();
                let worst = (0..=n)
                    .map(|j| {
                        let v = walk.value(j);
                        let closed = (v * v - a * a - j as f64 * time_step(m)) / 2.0;
                        (sums[j] - closed).abs() / closed.abs().max(time_step(m))
                    })
                    .fold(0.0, f64::max);
                out.push((m, "closed_form_rel_error", worst));
            }
        }
        Experiment::ItoTanaka => {
            let spec = config.convex_spec()?;
            let nested = build_nested(seed, fine, span)?;
            let fine_walk = nested.level(fine);
            let path = PiecewisePath::from_walk(fine_walk);
            let a = path.start_value();
            let g0 = spec.g.eval(a);
            let fine_steps = steps_in(fine, k) as usize;
            let truth = (0..=fine_steps).map(|j| spec.g.eval(fine_walk.value(j)) - g0);
            // range of g(B_fine) over each level-m step, coarsened level by level
            let mut blocks = block_ranges(truth, 1 << (2 * (fine - config.max_level)));
            for m in config.levels().rev() {
                if m < config.max_level {
                    blocks = merge_ranges(&blocks, 4);
                }
                let walk = skorohod_embed(&path, m, path.end_time());
                let n = steps_until(&walk, k)?;
                let rhs = ito_tanaka_series(&spec, &walk, n);
                let worst = blocks
                    .iter()
                    .zip(&rhs)
                    .map(|(&(lo, hi), c)| (c - lo).abs().max((hi - c).abs()))
                    .fold(0.0, f64::max);
                out.push((m, "sup_error", worst));
            }
            out.sort_by_key(|row| row.0);
        }
        Experiment::Tanaka => {
            let path = fine_path(config, seed, span)?;
            for m in config.levels() {
                let walk = skorohod_embed(&path, m, path.end_time());
                let field = discrete_local_time(&walk, Direction::Both, k)?;
                let a = path.start_value();
                out.push((m, "abs_residual", tanaka_check(&walk, &field, a, k)?.abs()));
            }
        }
        Experiment::Qv => {
            let mart = realize_martingale(&config.martingale()?, seed)?;
            for m in config.levels() {
                let walk = martingale_stopping(&mart.path, m, k);
                let report = qv_report(&walk, &mart.qv, k, 1)?;
                out.push((m, "sup_dev", report.sup_dev));
                out.push((m, "discrete_at_horizon", report.discrete[1]));
                out.push((m, "exact_at_horizon", report.exact[1]));
            }
        }
        Experiment::TimeChange => {
            let f = config.function()?;
            let mart = realize_martingale(&config.martingale()?, seed)?;
            for m in config.levels() {
                out.push((m, "abs_residual", time_change_residual(&f, &mart, m, k)?.abs()));
            }
        }
        Experiment::Mlocaltime => {
            let mart = realize_martingale(&config.martingale()?, seed)?;
            let reference = dds_local_time(&mart, fine)?;
            for m in config.levels() {
                let lt = martingale_local_time(&mart.path, m, k)?;
                let dx = space_step(m);
                let (lo, hi) = reference.spatial_range();
                let (first, last) = ((lo / dx).floor() as i64, (hi / dx).ceil() as i64);
                let mut worst = 0.0f64;
                for i in 0..=config.grid_t {
                    let t = k * i as f64 / config.grid_t as f64;
                    let s = mart.qv.eval(t);
                    for j in first..=last {
                        let x = j as f64 * dx;
                        let gap = 0.5 * reference.eval_dir(Direction::Both, s, x) - lt.eval(Direction::Up, t, x)?;
                        worst = worst.max(gap.abs());
                    }
                }
                out.push((m, "sup_gap", worst));
            }
        }
        Experiment::Truncation => {
            let kernel = config.kernel()?;
            let path = fine_path(config, seed, span)?;
            for m in config.levels() {
                let spec = PredictableSpec::new(kernel, f64::from(m))?;
                let walk = skorohod_embed(&path, m, path.end_time());
                out.push((m, "l2_gap_sq", truncation_gap(&spec, &path, &walk, k)?));
            }
        }
        Experiment::Identities | Experiment::Isometry => unreachable!("run without replications"),
    }
    Ok(out)
}

/// `(min, max)` of consecutive chunks of `size` values.
fn block_ranges(values: impl Iterator<Item = f64>, size: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut current = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        current = (current.0.min(v), current.1.max(v));
        if (i + 1) % size == 0 {
            out.push(current);
            current = (f64::INFINITY, f64::NEG_INFINITY);
        }
    }
    if current.0 <= current.1 {
        out.push(current);
    }
    out
}

fn merge_ranges(blocks: &[(f64, f64)], factor: usize) -> Vec<(f64, f64)> {
    blocks
        .chunks(factor)
        .map(|c| c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, b| (a.0.min(b.0), a.1.max(b.1))))
        .collect()
}

fn steps_until<W: LatticePath>(walk: &W, t: f64) -> Result<usize> {
    let n = steps_in(walk.level(), t) as usize;
    if n > walk.steps() {
        return Err(Error::out_of_horizon(format!(
            "level-{} walk has {} steps, {n} needed",
            walk.level(),
            walk.steps()
        )));
    }
    Ok(n)
}

/// `max_k |Σ_x L(k 2^-2m, x) 2^-m - k 2^-2m|` over 65 equally spaced `k`
/// and the last step.
fn occupation_defect(field: &LocalTimeField) -> f64 {
    let n = field.steps();
    let stride = (n / 64).max(1);
    (0..=n)
        .step_by(stride as usize)
        .chain(std::iter::once(n))
        .map(|k| (field.occupation_mass(k) - k as f64 * time_step(field.level())).abs())
        .fold(0.0, f64::max)
}

/// Two-sided local time of the DDS Brownian motion at the fine level, over
/// `[0, ⟨M⟩_horizon]`.
fn dds_local_time(mart: &Martingale, fine: u32) -> Result<LocalTimeField> {
    let total = mart.qv.total();
    let walk = skorohod_embed(&mart.dds, fine, total.min(mart.dds.end_time()));
    Ok(LocalTimeField::from_steps(&walk, Direction::Both, walk.steps()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(experiment: Experiment) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(experiment, Seed(99));
        c.replications = if experiment == Experiment::Isometry { 8 } else { 3 };
        c.min_level = c.min_level.min(3).max(if experiment == Experiment::Embedding { 1 } else { 0 });
        c.max_level = c.min_level + 2;
        c.fine_level = c.max_level + 3;
        if experiment == Experiment::Identities {
            c.min_level = 0;
            c.max_level = 0;
            c.fine_level = 1;
            c.replications = 50;
        }
        c.grid_t = 32;
        c
    }

    #[test]
    fn every_experiment_runs_with_expected_cardinality() {
        for e in Experiment::ALL {
            let config = small(e);
            let table = run_experiment(&config).unwrap_or_else(|err| panic!("{e}: {err}"));
            assert!(!table.is_empty(), "{e}");
            let metric = &table.rows()[0].metric;
            let rows = table.rows().iter().filter(|r| &r.metric == metric).count();
            let levels = (config.max_level - config.min_level + 1) as usize;
            let expected = match e {
                Experiment::Identities => 1,
                Experiment::Isometry => levels,
                _ => levels * config.replications,
            };
            assert_eq!(rows, expected, "{e}");
        }
    }

    #[test]
    fn single_replication_gives_single_seed_rows() {
        let mut c = small(Experiment::Brownian);
        c.replications = 1;
        let table = run_experiment(&c).unwrap();
        let seeds: std::collections::BTreeSet<u64> = table.rows().iter().map(|r| r.seed).collect();
        assert_eq!(seeds.len(), 1);
    }

    #[test]
    fn parallel_and_serial_runs_agree() {
        let mut c = small(Experiment::Localtime);
        c.threads = Some(1);
        let serial = run_experiment(&c).unwrap().to_csv();
        c.threads = Some(4);
        let parallel = run_experiment(&c).unwrap().to_csv();
        assert_eq!(serial, parallel);
        assert_eq!(run_experiment(&c).unwrap().to_csv(), parallel);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = small(Experiment::Brownian);
        c.fine_level = c.max_level;
        assert!(matches!(run_experiment(&c), Err(Error::InvalidConfig(_))));
        let mut c = small(Experiment::Brownian);
        c.replications = 0;
        assert!(run_experiment(&c).is_err());
        let mut c = small(Experiment::Qv);
        c.fine_level = c.max_level + 1;
        assert!(run_experiment(&c).is_err());
        let mut c = small(Experiment::ItoTanaka);
        c.function = Some("sine".into());
        assert!(run_experiment(&c).is_err());
        assert!("nope".parse::<Experiment>().is_err());
    }

    #[test]
    fn default_level_range_cardinality() {
        let c = ExperimentConfig::new(Experiment::Localtime, Seed(0));
        assert_eq!(c.levels().count(), 6);
        assert_eq!(c.fine_level, 12);
    }

    #[test]
    fn budget_exhaustion_propagates() {
        let mut c = small(Experiment::Brownian);
        c.fine_level = 15;
        c.max_level = 5;
        assert!(matches!(run_experiment(&c), Err(Error::StepBudgetExceeded { .. })));
    }

    #[test]
    fn diagonal_truncation_gap_decreases() {
        let table = run_experiment(&ExperimentConfig::new(Experiment::Truncation, Seed(17))).unwrap();
        let means: Vec<f64> = (1..=6)
            .map(|m| {
                let v = table.values("l2_gap_sq", m);
                v.iter().sum::<f64>() / v.len() as f64
            })
            .collect();
        assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
        let slope = table.estimate_rate("l2_gap_sq").unwrap();
        assert!((-2.5..=-1.5).contains(&slope), "{slope}");
    }

    #[test]
    fn coarse_embeddings_cover_the_horizon() {
        for experiment in [Experiment::Tanaka, Experiment::ItoTanaka, Experiment::Embedding] {
            let mut c = ExperimentConfig::new(experiment, Seed(5));
            c.min_level = if experiment == Experiment::Embedding { 1 } else { 0 };
            c.max_level = 3;
            c.fine_level = 6;
            c.replications = 40;
            let table = run_experiment(&c).unwrap();
            assert!(table.rows().iter().any(|r| r.m == c.min_level), "{experiment}");
        }
    }
}
