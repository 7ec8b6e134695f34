//! Acceptance suite: one PASS/FAIL line per criterion, written straight to
//! stdout so it shows without `--nocapture`. Each suite's table is also
//! saved as CSV under the cargo target tmpdir.

use std::io::Write;
use std::time::{Duration, Instant};

use rwcalc::harness::{run_experiment, ConvergenceTable, Experiment, ExperimentConfig};
use rwcalc::martingale::{discrete_qv, martingale_stopping};
use rwcalc::walks::time_step;
use rwcalc::{build_nested, PiecewisePath, Seed};

const SEED: Seed = Seed(20_240_917);
const SLOPE_WINDOW: (f64, f64) = (-0.75, -0.25);

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn report(o: &Outcome) {
    let line = format!(
        "criterion {:>2} {:<28} {}  {}\n",
        o.id,
        o.name,
        if o.pass { "PASS" } else { "FAIL" },
        o.detail
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
}

fn save(name: &str, csv: &str) {
    let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join(format!("acceptance-{name}.csv"));
    std::fs::write(path, csv).unwrap();
}

fn in_window(slope: f64) -> bool {
    slope >= SLOPE_WINDOW.0 && slope <= SLOPE_WINDOW.1
}

fn config(experiment: Experiment) -> ExperimentConfig {
    ExperimentConfig::new(experiment, SEED)
}

/// A suite produces its table(s) as one CSV string plus a verdict.
type Suite = fn() -> (String, Outcome);

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

fn identities() -> (String, Outcome) {
    let mut c = config(Experiment::Identities);
    c.replications = 1000;
    c.max_n = 4096;
    let (table, elapsed) = timed(|| run_experiment(&c).unwrap());
    let worst = table.rows().iter().map(|r| r.value).fold(0.0, f64::max);
    let fast = elapsed < Duration::from_secs(10);
    (
        table.to_csv(),
        Outcome {
            id: 1,
            name: "exact identities",
            pass: worst <= 1e-9 && fast,
            detail: format!("max scaled residual {worst:.3e} (≤ 1e-9), {:.2?} (< 10 s)", elapsed),
        },
    )
}

fn refinement() -> (String, Outcome) {
    let (result, elapsed) = timed(|| {
        let mut table = ConvergenceTable::new();
        let mut violations = 0;
        let mut checks = 0;
        for i in 0..20 {
            let seed = SEED.derive(i);
            let nested = build_nested(seed, 11, 1.0).unwrap();
            let bad = nested.refinement_violation().is_some();
            violations += usize::from(bad);
            checks += nested.refinement_checks();
            table.record("refinement", 11, seed.0, "violation", if bad { 1.0 } else { 0.0 }).unwrap();
            table.record("refinement", 11, seed.0, "bridges_checked", nested.refinement_checks() as f64).unwrap();
        }
        (table, violations, checks)
    });
    let (table, violations, checks) = result;
    (
        table.to_csv(),
        Outcome {
            id: 2,
            name: "refinement property",
            pass: violations == 0 && elapsed < Duration::from_secs(30),
            detail: format!("{violations} violations in {checks} bridges over 20 seeds, {elapsed:.2?} (< 30 s)"),
        },
    )
}

fn brownian() -> (String, Outcome) {
    let table = run_experiment(&config(Experiment::Brownian)).unwrap();
    let slope = table.estimate_rate("sup_error").unwrap();
    let medians = table.medians("sup_error");
    let bound = |m: u32| 27.0 * f64::from(m).powf(0.75) * (-f64::from(m) / 2.0).exp2();
    let bounded = [6, 8].iter().all(|&m| medians[&m] <= bound(m));
    (
        table.to_csv(),
        Outcome {
            id: 3,
            name: "Brownian convergence rate",
            pass: in_window(slope) && bounded,
            detail: format!(
                "slope {slope:.3}; median sup error m=6 {:.4} (bound {:.3}), m=8 {:.4} (bound {:.3})",
                medians[&6],
                bound(6),
                medians[&8],
                bound(8)
            ),
        },
    )
}

fn local_time() -> (String, Outcome) {
    let table = run_experiment(&config(Experiment::Localtime)).unwrap();
    let slope = table.estimate_rate("sup_gap_up").unwrap();
    let occupation = table
        .rows()
        .iter()
        .filter(|r| r.metric == "occupation_defect")
        .map(|r| r.value)
        .fold(0.0, f64::max);
    (
        table.to_csv(),
        Outcome {
            id: 4,
            name: "local time",
            pass: in_window(slope) && occupation == 0.0,
            detail: format!("slope {slope:.3}; max occupation-mass defect {occupation:e} (exact 0)"),
        },
    )
}

fn ito_closed_form() -> (String, Outcome) {
    let table = run_experiment(&config(Experiment::Ito)).unwrap();
    let worst = table.rows().iter().map(|r| r.value).fold(0.0, f64::max);
    let seeds = table.rows().iter().map(|r| r.seed).collect::<std::collections::BTreeSet<_>>().len();
    (
        table.to_csv(),
        Outcome {
            id: 5,
            name: "Itô closed form",
            pass: worst <= 1e-12,
            detail: format!("max relative error {worst:e} over m = 0..12, {seeds} seeds (≤ 1e-12)"),
        },
    )
}

fn ito_tanaka() -> (String, Outcome) {
    let mut csv = String::new();
    let mut slopes = Vec::new();
    for g in ["abs:0", "square"] {
        let mut c = config(Experiment::ItoTanaka);
        c.function = Some(g.to_string());
        let table = run_experiment(&c).unwrap();
        slopes.push((g, table.estimate_rate("sup_error").unwrap()));
        csv.push_str(&table.to_csv());
    }
    let tanaka = run_experiment(&config(Experiment::Tanaka)).unwrap();
    let residual = tanaka.medians("abs_residual")[&10];
    csv.push_str(&tanaka.to_csv());
    (
        csv,
        Outcome {
            id: 6,
            name: "Itô–Tanaka",
            pass: slopes.iter().all(|s| in_window(s.1)) && residual <= 0.1,
            detail: format!(
                "slope |x| {:.3}, x² {:.3}; median Tanaka residual at m=10 {residual:.3e} (≤ 0.1)",
                slopes[0].1, slopes[1].1
            ),
        },
    )
}

fn isometry() -> (String, Outcome) {
    let table = run_experiment(&config(Experiment::Isometry)).unwrap();
    let v = |metric: &str| table.values(metric, 6)[0];
    let gap = (v("lhs") - v("rhs")).abs();
    let mean = v("mean_sum").abs();
    (
        table.to_csv(),
        Outcome {
            id: 7,
            name: "isometry",
            pass: gap <= 3.0 * v("stderr") && mean <= 3.0 * v("mean_stderr"),
            detail: format!(
                "|lhs - rhs| {gap:.4} vs 3·se {:.4}; |mean| {mean:.4} vs 3·se {:.4}",
                3.0 * v("stderr"),
                3.0 * v("mean_stderr")
            ),
        },
    )
}

fn quadratic_variation() -> (String, Outcome) {
    let table = run_experiment(&config(Experiment::Qv)).unwrap();
    let medians = table.medians("sup_dev");
    let bound = |m: u32| f64::from(m).powf(1.5) * (-f64::from(m)).exp2();
    let bounded = [8, 10].iter().all(|&m| medians[&m] <= bound(m));
    let line = PiecewisePath::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
    let exact = [8u32, 10].iter().all(|&m| {
        let walk = martingale_stopping(&line, m, 1.0);
        discrete_qv(&walk, 1.0).unwrap() == time_step(m) * (1u64 << m) as f64
    });
    (
        table.to_csv(),
        Outcome {
            id: 8,
            name: "quadratic variation",
            pass: bounded && exact,
            detail: format!(
                "median sup|N_m - t| m=8 {:.2e} (bound {:.3}), m=10 {:.2e} (bound {:.4}); N_m(1) for w(t)=t {}",
                medians[&8],
                bound(8),
                medians[&10],
                bound(10),
                if exact { "exact" } else { "wrong" }
            ),
        },
    )
}

fn time_change() -> (String, Outcome) {
    let four = run_experiment(&config(Experiment::TimeChange)).unwrap();
    let median = four.medians("abs_residual")[&8];
    let mut c = config(Experiment::TimeChange);
    c.c = 1.0;
    let one = run_experiment(&c).unwrap();
    let worst_one = one.rows().iter().map(|r| r.value).fold(0.0, f64::max);
    (
        four.to_csv() + &one.to_csv(),
        Outcome {
            id: 9,
            name: "time-change identity",
            pass: median <= 0.1 && worst_one == 0.0,
            detail: format!("c=4 median |residual| {median:.3e} (≤ 0.1); c=1 max |residual| {worst_one:e} (exact 0)"),
        },
    )
}

#[test]
fn acceptance_criteria() {
    let suites: [(&str, Suite); 9] = [
        ("identities", identities),
        ("refinement", refinement),
        ("brownian", brownian),
        ("localtime", local_time),
        ("ito", ito_closed_form),
        ("ito-tanaka", ito_tanaka),
        ("isometry", isometry),
        ("qv", quadratic_variation),
        ("time-change", time_change),
    ];
    let mut outcomes = Vec::new();
    let mut first_runs = Vec::new();
    for (name, suite) in suites {
        let (csv, outcome) = suite();
        report(&outcome);
        save(name, &csv);
        first_runs.push(csv);
        outcomes.push(outcome);
    }

    let mut differing = Vec::new();
    for ((name, suite), first) in suites.iter().zip(&first_runs) {
        if suite().0 != *first {
            differing.push(*name);
        }
    }
    let determinism = Outcome {
        id: 10,
        name: "determinism",
        pass: differing.is_empty(),
        detail: if differing.is_empty() {
            "all 9 suites re-ran to byte-identical CSV".to_string()
        } else {
            format!("CSV differs on re-run: {}", differing.join(", "))
        },
    };
    report(&determinism);
    outcomes.push(determinism);

    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
