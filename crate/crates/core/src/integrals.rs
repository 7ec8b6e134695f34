//! Itô and Stratonovich sums along embedded walks, the Itô–Tanaka right-hand
//! side for differences of convex functions, and the Tanaka and occupation
//! checks built on them.

use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::function::{GridFunction, PiecewiseLinear};
use crate::local_time::{Direction, LocalTimeField};
use crate::walks::{space_step, steps_in, time_step, LatticePath};

/// `⌊t 2^2m⌋`, checked against the walk length.
pub(crate) fn steps_until<W: LatticePath + ?Sized>(walk: &W, t: f64) -> Result<usize> {
    if !(t >= 0.0) {
        return Err(Error::out_of_horizon(format!("negative time {t}")));
    }
    let n = steps_in(walk.level(), t) as usize;
    if n > walk.steps() {
        return Err(Error::out_of_horizon(format!(
            "t = {t} needs {n} level-{} steps, walk has {}",
            walk.level(),
            walk.steps()
        )));
    }
    Ok(n)
}

/// Running Neumaier sum that can report its value after every term.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct RunningSum {
    sum: f64,
    comp: f64,
}

impl RunningSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `Σ_{r ≤ ⌊t 2^2m⌋} f(B(r-1)) 2^-m X(r)`.
pub fn ito_sum<W: LatticePath + ?Sized>(f: &GridFunction, walk: &W, t: f64) -> Result<f64> {
    let n = steps_until(walk, t)?;
    Ok(*ito_sums(f, walk, n).last().unwrap())
}

/// Itô sums after `0, 1, …, steps` steps.
pub fn ito_sums<W: LatticePath + ?Sized>(f: &GridFunction, walk: &W, steps: usize) -> Vec<f64> {
    let dx = space_step(walk.level());
    let mut acc = RunningSum::default();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(0.0);
    for r in 1..=steps {
        acc.add(f.eval(walk.value(r - 1)) * dx * f64::from(walk.sign(r)));
        out.push(acc.value());
    }
    out
}

/// Running Stratonovich sums after `0..=steps` steps.
pub fn stratonovich_sums<W: LatticePath + ?Sized>(f: &GridFunction, walk: &W, steps: usize) -> Vec<f64> {
    let dx = space_step(walk.level());
    let mut acc = RunningSum::default();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(0.0);
    for r in 1..=steps {
        let mid = 0.5 * (f.eval(walk.value(r - 1)) + f.eval(walk.value(r)));
        acc.add(mid * dx * f64::from(walk.sign(r)));
        out.push(acc.value());
    }
    out
}

/// `Σ_{r ≤ ⌊t 2^2m⌋} ½(f(B(r-1)) + f(B(r))) 2^-m X(r)`.
pub fn stratonovich_sum<W: LatticePath + ?Sized>(f: &GridFunction, walk: &W, t: f64) -> Result<f64> {
    let n = steps_until(walk, t)?;
    let dx = space_step(walk.level());
    let mut acc = RunningSum::default();
    for r in 1..=n {
        let mid = 0.5 * (f.eval(walk.value(r - 1)) + f.eval(walk.value(r)));
        acc.add(mid * dx * f64::from(walk.sign(r)));
    }
    Ok(acc.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub at: f64,
    pub mass: f64,
}

/// Constant density on `[lo, hi]`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityPiece {
    pub lo: f64,
    pub hi: f64,
    pub density: f64,
}

/// A difference of convex functions `g`, its left derivative and the signed
/// measure `μ = g''` as atoms plus piecewise-constant density.
#[derive(Debug, Clone)]
pub struct ConvexDiffSpec {
    pub g: GridFunction,
    pub left_derivative: GridFunction,
    pub atoms: Vec<Atom>,
    pub density: Vec<DensityPiece>,
    /// `μ` is supported in `[-M, M]` when set.
    pub support: Option<f64>,
}

impl ConvexDiffSpec {
    /// `|x - a|`: `μ = 2δ_a`.
    pub fn abs(a: f64) -> Self {
        ConvexDiffSpec {
            g: GridFunction::AbsShift(a),
            left_derivative: GridFunction::LeftSign(a),
            atoms: vec![Atom { at: a, mass: 2.0 }],
            density: Vec::new(),
            support: Some(a.abs()),
        }
    }

    /// `x²`: density 2 everywhere.
    pub fn square() -> Self {
        ConvexDiffSpec {
            g: GridFunction::Square,
            left_derivative: GridFunction::Linear {
                slope: 2.0,
                intercept: 0.0,
            },
            atoms: Vec::new(),
            density: vec![DensityPiece {
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
                density: 2.0,
            }],
            support: None,
        }
    }

    pub fn linear(slope: f64, intercept: f64) -> Self {
        ConvexDiffSpec {
            g: GridFunction::Linear { slope, intercept },
            left_derivative: GridFunction::Constant(slope),
            atoms: Vec::new(),
            density: Vec::new(),
            support: Some(0.0),
        }
    }

    /// A piecewise-linear `g`: atoms at the slope jumps.
    pub fn piecewise_linear(table: PiecewiseLinear) -> Self {
        let atoms: Vec<Atom> = table
            .slope_jumps()
            .into_iter()
            .filter(|&(_, mass)| mass != 0.0)
            .map(|(at, mass)| Atom { at, mass })
            .collect();
        let support = atoms.iter().map(|a| a.at.abs()).fold(0.0, f64::max);
        ConvexDiffSpec {
            g: GridFunction::PiecewiseLinear(table.clone()),
            left_derivative: GridFunction::LeftSlope(table),
            atoms,
            density: Vec::new(),
            support: Some(support),
        }
    }

    /// `μ([lo, hi))`.
    pub fn measure_of(&self, lo: f64, hi: f64) -> f64 {
        if !(hi > lo) {
            return 0.0;
        }
        let atoms: f64 = self.atoms.iter().filter(|a| a.at >= lo && a.at < hi).map(|a| a.mass).sum();
        let density: f64 = self
            .density
            .iter()
            .map(|p| {
                let overlap = hi.min(p.hi) - lo.max(p.lo);
                if overlap > 0.0 {
                    p.density * overlap
                } else {
                    0.0
                }
            })
            .sum();
        atoms + density
    }

    /// `max |g'₋(x + dx) - g'₋(x) - μ([x, x + dx))|` over the lattice
    /// `lo + ℤ dx` within `[lo, hi]`.
    pub fn consistency_defect(&self, lo: f64, hi: f64, dx: f64) -> f64 {
        let n = ((hi - lo) / dx).floor() as usize;
        (0..n)
            .map(|i| {
                let x = lo + i as f64 * dx;
                let y = x + dx;
                let jump = self.left_derivative.eval(y) - self.left_derivative.eval(x);
                (jump - self.measure_of(x, y)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `g^M`: equal to `g` on `[-M, M]`, continued linearly outside, with
    /// `μ` restricted to `[-M, M)`.
    pub fn truncated(&self, bound: f64) -> Self {
        let (g, dg) = (self.g.clone(), self.left_derivative.clone());
        let (g_lo, g_hi) = (g.eval(-bound), g.eval(bound));
        let (s_lo, s_hi) = (dg.eval(-bound), dg.eval(bound));
        let g_trunc = GridFunction::custom(move |x| {
            if x < -bound {
                g_lo + s_lo * (x + bound)
            } else if x > bound {
                g_hi + s_hi * (x - bound)
            } else {
                g.eval(x)
            }
        });
        let dg_trunc = GridFunction::custom(move |x| dg.eval(x.clamp(-bound, bound)));
        ConvexDiffSpec {
            g: g_trunc,
            left_derivative: dg_trunc,
            atoms: self
                .atoms
                .iter()
                .copied()
                .filter(|a| a.at >= -bound && a.at < bound)
                .collect(),
            density: self
                .density
                .iter()
                .filter_map(|p| {
                    let (lo, hi) = (p.lo.max(-bound), p.hi.min(bound));
                    (hi > lo).then_some(DensityPiece { lo, hi, ..*p })
                })
                .collect(),
            support: Some(self.support.map_or(bound, |s| s.min(bound))),
        }
    }

    /// Sum of `μ` against a lattice field given as `value(x_index)` on the
    /// lattice `origin + j dx`, `j ∈ [lo, hi]`: atoms by linear interpolation
    /// (zero outside `[lo, hi]`), density pieces by the lattice trapezoid.
    fn integrate_lattice(&self, origin: f64, dx: f64, (lo, hi): (i32, i32), value: impl Fn(i32) -> f64) -> f64 {
        let mut acc = RunningSum::default();
        for atom in &self.atoms {
            let xf = (atom.at - origin) / dx;
            if !(xf >= f64::from(lo)) || xf > f64::from(hi) {
                continue;
            }
            let x0 = xf.floor();
            let phi = xf - x0;
            let x0 = x0 as i32;
            let mut v = (1.0 - phi) * value(x0);
            if phi > 0.0 {
                v += phi * value(x0 + 1);
            }
            acc.add(atom.mass * v);
        }
        for piece in &self.density {
            for j in lo..=hi {
                let x = origin + f64::from(j) * dx;
                if x < piece.lo || x > piece.hi {
                    continue;
                }
                let w = if x == piece.lo || x == piece.hi { 0.5 } else { 1.0 };
                acc.add(w * piece.density * value(j) * dx);
            }
        }
        acc.value()
    }
}

impl FromStr for ConvexDiffSpec {
    type Err = Error;

    /// Accepts the catalog ids `abs:a`, `square`, `linear:s:b` and `pwl:…`.
    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<GridFunction>()? {
            GridFunction::AbsShift(a) => Ok(Self::abs(a)),
            GridFunction::Square => Ok(Self::square()),
            GridFunction::Identity => Ok(Self::linear(1.0, 0.0)),
            GridFunction::Linear { slope, intercept } => Ok(Self::linear(slope, intercept)),
            GridFunction::Constant(c) => Ok(Self::linear(0.0, c)),
            GridFunction::PiecewiseLinear(t) => Ok(Self::piecewise_linear(t)),
            other => Err(Error::InvalidConfig(format!(
                "{other} has no convex-difference description"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ItoTanakaRhs {
    /// `∫ L(t_m, x) μ(dx)`
    pub integral_term: f64,
    /// `ito_sum(g'₋, t) + ½ integral_term`
    pub full_rhs: f64,
}

fn require_field(field: &LocalTimeField, n: usize) -> Result<()> {
    if (field.steps() as usize) < n {
        return Err(Error::out_of_horizon(format!(
            "local-time field covers {} steps, {n} needed",
            field.steps()
        )));
    }
    Ok(())
}

/// Right-hand side of the Itô–Tanaka formula for `g(B(t)) - g(B(0))`, with
/// the two-sided local time of `walk` in `field`.
pub fn ito_tanaka_rhs<W: LatticePath + ?Sized>(
    spec: &ConvexDiffSpec,
    field: &LocalTimeField,
    walk: &W,
    t: f64,
) -> Result<ItoTanakaRhs> {
    let n = steps_until(walk, t)?;
    require_field(field, n)?;
    let integral_term = spec.integrate_lattice(field.origin(), space_step(field.level()), field.offset_range(), |j| {
        field.grid_value(Direction::Both, n as u64, j)
    });
    let ito = *ito_sums(&spec.left_derivative, walk, n).last().unwrap();
    Ok(ItoTanakaRhs {
        integral_term,
        full_rhs: ito + 0.5 * integral_term,
    })
}

/// `full_rhs` after `0, 1, …, steps` steps in one pass. Agrees with
/// [`ito_tanaka_rhs`] at every grid time for a field over the same steps.
pub fn ito_tanaka_series<W: LatticePath + ?Sized>(spec: &ConvexDiffSpec, walk: &W, steps: usize) -> Vec<f64> {
    let pos = &walk.positions()[..=steps];
    let lo = *pos.iter().min().unwrap();
    let hi = *pos.iter().max().unwrap();
    let dx = space_step(walk.level());
    // μ-weight of one unit of two-sided local time at each lattice point
    let weights: Vec<f64> = (lo..=hi)
        .map(|x| spec.integrate_lattice(walk.origin(), dx, (lo, hi), |j| if j == x { 1.0 } else { 0.0 }))
        .collect();
    let ito = ito_sums(&spec.left_derivative, walk, steps);
    let mut integral = RunningSum::default();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(0.0);
    for r in 1..=steps {
        integral.add(weights[(pos[r - 1] - lo) as usize] * dx);
        out.push(ito[r] + 0.5 * integral.value());
    }
    out
}

/// `L(t_m, a) - (|B(t_m) - a| - |B(0) - a| - ito_sum(sgn(· - a), t))`.
pub fn tanaka_check<W: LatticePath + ?Sized>(walk: &W, field: &LocalTimeField, a: f64, t: f64) -> Result<f64> {
    let dx = space_step(walk.level());
    let offset = (a - walk.origin()) / dx;
    if offset.fract() != 0.0 {
        return Err(Error::OffLattice {
            value: a,
            origin: walk.origin(),
            step: dx,
        });
    }
    let n = steps_until(walk, t)?;
    require_field(field, n)?;
    let local = field.grid_value(Direction::Both, n as u64, offset as i32);
    let ito = ito_sum(&GridFunction::SignShift(a), walk, t)?;
    let lhs = (walk.value(n) - a).abs() - (walk.origin() - a).abs();
    Ok(local - (lhs - ito))
}

/// `Σ_r h(B(r-1)) 2^-2m - Σ_x h(x) L(t_m, x) 2^-m`.
pub fn occupation_check<W: LatticePath + ?Sized>(
    h: &GridFunction,
    walk: &W,
    field: &LocalTimeField,
    t: f64,
) -> Result<f64> {
    let n = steps_until(walk, t)?;
    require_field(field, n)?;
    let (dx, dt) = (space_step(walk.level()), time_step(walk.level()));
    let mut time_side = RunningSum::default();
    for r in 1..=n {
        time_side.add(h.eval(walk.value(r - 1)) * dt);
    }
    let (lo, hi) = field.offset_range();
    let mut space_side = RunningSum::default();
    for j in lo..=hi {
        let x = field.origin() + f64::from(j) * dx;
        space_side.add(h.eval(x) * field.grid_value(Direction::Both, n as u64, j) * dx);
    }
    Ok(time_side.value() - space_side.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coin::Seed;
    use crate::embedding::skorohod_embed;
    use crate::local_time::discrete_local_time;
    use crate::path::PiecewisePath;
    use crate::walks::{build_nested, LatticeWalk};
    use proptest::prelude::*;

    fn brownian(seed: u64, level: u32) -> crate::embedding::EmbeddedWalk {
        let nested = build_nested(Seed(seed), level, 1.25).unwrap();
        let path = PiecewisePath::from_walk(nested.level(level));
        skorohod_embed(&path, level.min(6), 1.2)
    }

    #[test]
    fn sums_of_constants_telescope() {
        let w = brownian(3, 8);
        let n = steps_in(6, 1.0) as usize;
        let s = ito_sum(&GridFunction::Constant(1.0), &w, 1.0).unwrap();
        assert_eq!(s, w.value(n) - w.origin());
        assert_eq!(stratonovich_sum(&GridFunction::Constant(1.0), &w, 1.0).unwrap(), s);
        assert_eq!(ito_sum(&GridFunction::Identity, &w, time_step(6) * 0.5).unwrap(), 0.0);
        assert!(ito_sum(&GridFunction::Identity, &w, 2.0).is_err());
    }

    #[test]
    fn ito_sum_of_identity_closed_form() {
        let w = LatticeWalk::from_increments(3, 5, &[1, 1, -1, -1, -1, 1, -1, -1, -1, 1]);
        for k in 0..=10 {
            let t = k as f64 * time_step(3);
            let v = w.value(k);
            let closed = (v * v - w.origin() * w.origin() - t) / 2.0;
            assert_eq!(ito_sum(&GridFunction::Identity, &w, t).unwrap(), closed);
            let strat = (v * v - w.origin() * w.origin()) / 2.0;
            assert_eq!(stratonovich_sum(&GridFunction::Identity, &w, t).unwrap(), strat);
        }
        let running = stratonovich_sums(&GridFunction::Identity, &w, 10);
        let closed: Vec<f64> = (0..=10).map(|k| (w.value(k).powi(2) - w.origin().powi(2)) / 2.0).collect();
        assert_eq!(running, closed);
    }

    #[test]
    fn stratonovich_minus_ito_is_half_the_increment_sum() {
        let w = brownian(11, 8);
        let f = GridFunction::Sine;
        let n = steps_in(6, 1.0) as usize;
        let dx = space_step(6);
        let direct: f64 = (1..=n)
            .map(|r| 0.5 * (f.eval(w.value(r)) - f.eval(w.value(r - 1))) * f64::from(w.sign(r)) * dx)
            .sum();
        let diff = stratonovich_sum(&f, &w, 1.0).unwrap() - ito_sum(&f, &w, 1.0).unwrap();
        assert!((diff - direct).abs() < 1e-12);
    }

    #[test]
    fn measure_and_left_derivative_are_consistent() {
        let table = PiecewiseLinear::new(vec![(-1.0, 0.0), (0.0, 1.0), (0.5, 0.0), (1.5, 2.0)]).unwrap();
        let specs = [
            ConvexDiffSpec::abs(0.25),
            ConvexDiffSpec::square(),
            ConvexDiffSpec::linear(3.0, 1.0),
            ConvexDiffSpec::piecewise_linear(table),
        ];
        for spec in &specs {
            assert!(spec.consistency_defect(-2.0, 2.0, 0.125) < 1e-12, "{:?}", spec.g);
            let t = spec.truncated(1.0);
            assert!(t.consistency_defect(-3.0, 3.0, 0.125) < 1e-12);
            for x in [-0.75, 0.0, 0.3, 1.0] {
                assert_eq!(t.g.eval(x), spec.g.eval(x));
            }
        }
        let sq = ConvexDiffSpec::square().truncated(1.0);
        assert_eq!(sq.g.eval(2.0), 1.0 + 2.0 * 1.0);
        assert_eq!(sq.g.eval(-3.0), 1.0 + 2.0 * 2.0);
    }

    #[test]
    fn spec_ids_parse() {
        assert_eq!("abs:0".parse::<ConvexDiffSpec>().unwrap().atoms, vec![Atom { at: 0.0, mass: 2.0 }]);
        assert_eq!("square".parse::<ConvexDiffSpec>().unwrap().density.len(), 1);
        assert!("sine".parse::<ConvexDiffSpec>().is_err());
    }

    #[test]
    fn ito_tanaka_integral_terms() {
        let w = brownian(21, 8);
        let field = discrete_local_time(&w, Direction::Both, 1.0).unwrap();
        let lin = ito_tanaka_rhs(&ConvexDiffSpec::linear(2.0, 0.0), &field, &w, 1.0).unwrap();
        assert_eq!(lin.integral_term, 0.0);
        let abs = ito_tanaka_rhs(&ConvexDiffSpec::abs(0.0), &field, &w, 1.0).unwrap();
        assert_eq!(abs.integral_term, 2.0 * field.eval_dir(Direction::Both, 1.0, 0.0));
        for t in [0.25, 0.5, 1.0] {
            let sq = ito_tanaka_rhs(&ConvexDiffSpec::square(), &field, &w, t).unwrap();
            assert!((sq.integral_term - 2.0 * t).abs() < 1e-12);
            // for x² the formula is exact at walk resolution
            let n = steps_in(6, t) as usize;
            assert!((sq.full_rhs - (w.value(n).powi(2) - w.origin().powi(2))).abs() < 1e-12);
        }
    }

    #[test]
    fn series_matches_pointwise_rhs() {
        let w = brownian(5, 8);
        let steps = steps_in(6, 1.0) as usize;
        let field = discrete_local_time(&w, Direction::Both, 1.0).unwrap();
        let table = PiecewiseLinear::new(vec![(-0.5, 0.0), (0.0, 0.25), (0.25, -0.5)]).unwrap();
        for spec in [ConvexDiffSpec::abs(0.0), ConvexDiffSpec::square(), ConvexDiffSpec::piecewise_linear(table)] {
            let series = ito_tanaka_series(&spec, &w, steps);
            for k in (0..=steps).step_by(97) {
                let t = k as f64 * time_step(6);
                let direct = ito_tanaka_rhs(&spec, &field, &w, t).unwrap().full_rhs;
                assert!((series[k] - direct).abs() < 1e-12, "k = {k}");
            }
        }
    }

    #[test]
    fn tanaka_residual_is_small_and_exact_off_range() {
        let w = brownian(8, 8);
        let field = discrete_local_time(&w, Direction::Both, 1.0).unwrap();
        assert_eq!(tanaka_check(&w, &field, 0.0, 0.0).unwrap(), 0.0);
        let r = tanaka_check(&w, &field, 0.0, 1.0).unwrap();
        assert!(r.abs() <= space_step(6) + 1e-12, "{r}");
        let (_, hi) = field.spatial_range();
        assert!(tanaka_check(&w, &field, hi + 1.0, 1.0).unwrap().abs() < 1e-12);
        assert!(matches!(
            tanaka_check(&w, &field, 0.01, 1.0),
            Err(Error::OffLattice { .. })
        ));
    }

    #[test]
    fn occupation_checks() {
        let w = brownian(13, 8);
        let field = discrete_local_time(&w, Direction::Both, 1.0).unwrap();
        assert_eq!(occupation_check(&GridFunction::Constant(1.0), &w, &field, 1.0).unwrap().abs() < 1e-15, true);
        let cut = GridFunction::Indicator { lo: 0.0, hi: f64::INFINITY };
        let r = occupation_check(&cut, &w, &field, 1.0).unwrap();
        assert!(r.abs() <= space_step(6));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn occupation_residual_small_for_catalog_h(seed in 0u64..1000, which in 0usize..4) {
            let h = [GridFunction::Sine, GridFunction::AbsShift(0.1), GridFunction::Cosine, GridFunction::Square][which].clone();
            let nested = build_nested(Seed(seed), 10, 1.1).unwrap();
            let w = nested.level(10);
            let field = discrete_local_time(w, Direction::Both, 1.0).unwrap();
            let r = occupation_check(&h, w, &field, 1.0).unwrap();
            prop_assert!(r.abs() <= 10.0 * space_step(10));
        }
    }
}
