//! Exact algebraic identities for ±1 sequences: trapezoidal sums, the
//! discrete Stratonovich, Itô and Itô–Tanaka formulas, and the discrete
//! occupation time formula.
//!
//! For `S_0 = a`, `S_r = a + (X_1 + … + X_r)·dx` and any `f`, each identity
//! holds exactly; the residual functions return `LHS - RHS`, which is zero up
//! to rounding. The term computation is generic over [`Scalar`] so the same
//! code can be run in exact rational arithmetic.

use std::ops::Neg;

use num_traits::Num;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coin::Seed;
use crate::error::{Error, Result};
use crate::function::{GridFunction, PiecewiseLinear};
use crate::local_time::CrossingCounts;

/// Field the identities are evaluated in.
pub trait Scalar: Clone + Num + Neg<Output = Self> {
    fn from_i64(i: i64) -> Self;

    fn sum_all<I: IntoIterator<Item = Self>>(terms: I) -> Self {
        terms.into_iter().fold(Self::zero(), |acc, x| acc + x)
    }
}

impl Scalar for f64 {
    fn from_i64(i: i64) -> Self {
        i as f64
    }

    fn sum_all<I: IntoIterator<Item = Self>>(terms: I) -> Self {
        neumaier_sum(terms)
    }
}

/// Neumaier's compensated sum.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn half<T: Scalar>() -> T {
    T::one() / T::from_i64(2)
}

/// Trapezoidal sum over `k` lattice steps from `a`, i.e. from `a` to `a + k·dx`.
pub fn trapezoid_steps<T: Scalar, F: Fn(&T) -> T>(f: &F, a: &T, k: i64, dx: &T) -> T {
    if k == 0 {
        return T::zero();
    }
    let dir = k.signum();
    let point = |j: i64| a.clone() + T::from_i64(dir * j) * dx.clone();
    let ends = (f(a) + f(&point(k.abs()))) * half();
    let interior = T::sum_all((1..k.abs()).map(|j| f(&point(j))));
    T::from_i64(dir) * dx.clone() * (ends + interior)
}

/// `T_{x=a}^{b} f(x) dx`; `b` must lie on `a + ℤ·dx`.
pub fn trapezoidal_sum(f: &GridFunction, a: f64, b: f64, dx: f64) -> Result<f64> {
    if !(dx > 0.0) {
        return Err(Error::InvalidConfig(format!("trapezoid step must be positive, got {dx}")));
    }
    let ratio = (b - a) / dx;
    let k = ratio.round();
    if (ratio - k).abs() > 1e-9 * ratio.abs().max(1.0) {
        return Err(Error::OffLattice {
            value: b,
            origin: a,
            step: dx,
        });
    }
    Ok(trapezoid_steps(&|x: &f64| f.eval(*x), &a, k as i64, &dx))
}

/// Both sides of every identity for one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityTerms<T> {
    /// `T_{x=S_0}^{S_n} f(x) dx`
    pub lhs: T,
    pub stratonovich_rhs: T,
    /// `Σ f(S_{r-1}) X_r dx`
    pub ito_sum: T,
    /// `½ Σ (f(S_r) - f(S_{r-1})) / (X_r dx) · dx²`
    pub ito_correction: T,
    /// `½ Σ_x {L⁺(n,x)(f(x+dx) - f(x)) + L⁻(n,x)(f(x) - f(x-dx))}`
    pub tanaka_correction: T,
    /// `Σ h_{X_r dx}(S_{r-1}) dx²`
    pub occupation_lhs: T,
    /// `Σ_x {h_{dx}(x) L⁺(n,x) + h_{-dx}(x) L⁻(n,x)} dx`
    pub occupation_rhs: T,
}

impl<T: Scalar> IdentityTerms<T> {
    pub fn compute<F: Fn(&T) -> T>(f: &F, a: &T, dx: &T, signs: &[i8]) -> Self {
        let mut offsets = Vec::with_capacity(signs.len() + 1);
        offsets.push(0i64);
        for &x in signs {
            offsets.push(offsets.last().unwrap() + i64::from(x));
        }
        let counts = CrossingCounts::from_offsets(&offsets);

        // f on the realized lattice plus one point of padding each side
        let lo = counts.x_min - 1;
        let width = counts.up.len() + 2;
        let values: Vec<T> = (0..width as i64)
            .map(|i| f(&(a.clone() + T::from_i64(lo + i) * dx.clone())))
            .collect();
        let fv = |x: i64| values[(x - lo) as usize].clone();
        let dx2 = dx.clone() * dx.clone();

        let n = *offsets.last().unwrap();
        let lhs = trapezoid_steps(f, a, n, dx);

        let steps = || offsets.windows(2).map(|w| (w[0], w[1], T::from_i64(w[1] - w[0])));
        let stratonovich_rhs =
            T::sum_all(steps().map(|(p, q, x)| (fv(p) + fv(q)) * half::<T>() * x * dx.clone()));
        let ito_sum = T::sum_all(steps().map(|(p, _, x)| fv(p) * x * dx.clone()));
        let ito_correction = half::<T>()
            * T::sum_all(steps().map(|(p, q, x)| (fv(q) - fv(p)) / (x * dx.clone()) * dx2.clone()));
        let occupation_lhs = T::sum_all(steps().map(|(p, q, x)| (fv(q) - fv(p)) / (x * dx.clone()) * dx2.clone()));

        let lattice = || {
            (0..counts.up.len()).map(|i| {
                let x = counts.x_min + i as i64;
                let up = T::from_i64(counts.up[i] as i64) * dx.clone();
                let down = T::from_i64(counts.down[i] as i64) * dx.clone();
                (x, up, down)
            })
        };
        let tanaka_correction = half::<T>()
            * T::sum_all(lattice().map(|(x, up, down)| up * (fv(x + 1) - fv(x)) + down * (fv(x) - fv(x - 1))));
        let occupation_rhs = T::sum_all(lattice().map(|(x, up, down)| {
            let h_up = (fv(x + 1) - fv(x)) / dx.clone();
            let h_down = (fv(x - 1) - fv(x)) / -dx.clone();
            (h_up * up + h_down * down) * dx.clone()
        }));

        IdentityTerms {
            lhs,
            stratonovich_rhs,
            ito_sum,
            ito_correction,
            tanaka_correction,
            occupation_lhs,
            occupation_rhs,
        }
    }

    pub fn stratonovich_residual(&self) -> T {
        self.lhs.clone() - self.stratonovich_rhs.clone()
    }

    pub fn ito_residual(&self) -> T {
        self.lhs.clone() - (self.ito_sum.clone() + self.ito_correction.clone())
    }

    pub fn ito_tanaka_residual(&self) -> T {
        self.lhs.clone() - (self.ito_sum.clone() + self.tanaka_correction.clone())
    }

    pub fn occupation_residual(&self) -> T {
        self.occupation_lhs.clone() - self.occupation_rhs.clone()
    }
}

/// All identity terms for a catalog function in `f64`.
pub fn identity_terms(f: &GridFunction, a: f64, dx: f64, signs: &[i8]) -> IdentityTerms<f64> {
    IdentityTerms::compute(&|x: &f64| f.eval(*x), &a, &dx, signs)
}

pub fn stratonovich_residual(f: &GridFunction, a: f64, dx: f64, signs: &[i8]) -> f64 {
    identity_terms(f, a, dx, signs).stratonovich_residual()
}

pub fn ito_residual(f: &GridFunction, a: f64, dx: f64, signs: &[i8]) -> f64 {
    identity_terms(f, a, dx, signs).ito_residual()
}

pub fn ito_tanaka_residual(f: &GridFunction, a: f64, dx: f64, signs: &[i8]) -> f64 {
    identity_terms(f, a, dx, signs).ito_tanaka_residual()
}

pub fn occupation_residual(f: &GridFunction, a: f64, dx: f64, signs: &[i8]) -> f64 {
    identity_terms(f, a, dx, signs).occupation_residual()
}

/// Worst residual of each identity over a random suite, each scaled by
/// `1 + |LHS|` of its own identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuiteReport {
    pub cases: usize,
    pub stratonovich: f64,
    pub ito: f64,
    pub ito_tanaka: f64,
    pub occupation: f64,
}

impl SuiteReport {
    pub fn max(&self) -> f64 {
        self.stratonovich.max(self.ito).max(self.ito_tanaka).max(self.occupation)
    }
}

/// One randomly drawn identity check.
#[derive(Debug, Clone)]
pub struct IdentityCase {
    pub f: GridFunction,
    pub a: f64,
    pub dx: f64,
    pub signs: Vec<i8>,
}

/// Draw case `index` of a suite: a catalog function, a dyadic start `a`, a
/// step `dx ∈ {1, 2^-m}` and `n ≤ max_n` fair signs. The exponential is only
/// drawn on the diffusive scale `dx ≤ n^-½`, where its values stay moderate.
pub fn draw_case(seed: Seed, index: u64, max_n: usize) -> IdentityCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.derive(index).0);
    let n = rng.gen_range(0..=max_n);
    let mut dx = if rng.gen_bool(0.5) {
        1.0
    } else {
        (-f64::from(rng.gen_range(1u32..=10))).exp2()
    };
    let shift = f64::from(rng.gen_range(-6i32..=6)) * dx;
    let f = match rng.gen_range(0..11) {
        0 => GridFunction::Constant(f64::from(rng.gen_range(-5i32..=5))),
        1 => GridFunction::Identity,
        2 => GridFunction::Linear {
            slope: f64::from(rng.gen_range(-3i32..=3)),
            intercept: 0.5,
        },
        3 => GridFunction::Square,
        4 => GridFunction::AbsShift(shift),
        5 => GridFunction::SignShift(shift),
        6 => GridFunction::Sine,
        7 => GridFunction::Cosine,
        8 => {
            let m = ((n.max(1) as f64).log2() / 2.0).ceil() as u32;
            dx = dx.min((-f64::from(m)).exp2());
            GridFunction::Exp
        }
        9 => GridFunction::Indicator { lo: shift, hi: f64::INFINITY },
        _ => GridFunction::PiecewiseLinear(
            PiecewiseLinear::new(vec![(-1.0, 1.0), (0.0, 0.0), (0.5, 2.0), (2.0, -1.0)]).unwrap(),
        ),
    };
    let a = f64::from(rng.gen_range(-8i32..=8)) * 0.125;
    let signs = (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
    IdentityCase { f, a, dx, signs }
}

/// Run `cases` random identity checks.
pub fn identity_suite(cases: usize, max_n: usize, seed: Seed) -> SuiteReport {
    let mut report = SuiteReport {
        cases,
        stratonovich: 0.0,
        ito: 0.0,
        ito_tanaka: 0.0,
        occupation: 0.0,
    };
    for i in 0..cases {
        let case = draw_case(seed, i as u64, max_n);
        let t = identity_terms(&case.f, case.a, case.dx, &case.signs);
        let scale = 1.0 + t.lhs.abs();
        report.stratonovich = report.stratonovich.max(t.stratonovich_residual().abs() / scale);
        report.ito = report.ito.max(t.ito_residual().abs() / scale);
        report.ito_tanaka = report.ito_tanaka.max(t.ito_tanaka_residual().abs() / scale);
        report.occupation = report
            .occupation
            .max(t.occupation_residual().abs() / (1.0 + t.occupation_lhs.abs()));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::{BigInt, BigRational, Zero};
    use proptest::prelude::*;

    impl Scalar for BigRational {
        fn from_i64(i: i64) -> Self {
            BigRational::from_integer(BigInt::from(i))
        }
    }

    #[test]
    fn trapezoid_basics() {
        let one = GridFunction::Constant(1.0);
        assert_eq!(trapezoidal_sum(&one, 0.0, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(trapezoidal_sum(&one, 0.0, 3.0, 1.0).unwrap(), 3.0);
        let sq = GridFunction::Square;
        let fwd = trapezoidal_sum(&sq, -0.5, 1.25, 0.25).unwrap();
        let back = trapezoidal_sum(&sq, 1.25, -0.5, 0.25).unwrap();
        assert_eq!(fwd, -back);
        assert!(matches!(
            trapezoidal_sum(&one, 0.0, 0.3, 0.25),
            Err(Error::OffLattice { .. })
        ));
    }

    #[test]
    fn hand_case_identity_function() {
        // f = identity, a = 0, dx = 1, signs (+1, +1, -1): S = 0, 1, 2, 1
        let t = identity_terms(&GridFunction::Identity, 0.0, 1.0, &[1, 1, -1]);
        assert_eq!(t.lhs, 0.5);
        assert_eq!(t.stratonovich_rhs, 0.5);
        assert_eq!(t.ito_sum, -1.0);
        assert_eq!(t.ito_correction, 1.5);
        // ½ (ℓ⁺(3,0)·1 + ℓ⁺(3,1)·1 + ℓ⁻(3,2)·1)
        assert_eq!(t.tanaka_correction, 1.5);
        assert_eq!(t.stratonovich_residual(), 0.0);
        assert_eq!(t.ito_residual(), 0.0);
        assert_eq!(t.ito_tanaka_residual(), 0.0);
    }

    #[test]
    fn constant_function_has_no_correction() {
        let f = GridFunction::Constant(2.5);
        let signs = [1, -1, -1, -1, 1, 1, 1, 1];
        let t = identity_terms(&f, 0.25, 0.5, &signs);
        assert_eq!(t.lhs, 2.5 * 0.5 * 2.0);
        assert_eq!(t.ito_correction, 0.0);
        assert_eq!(t.tanaka_correction, 0.0);
        assert_eq!(t.occupation_lhs, 0.0);
        assert_eq!(t.occupation_rhs, 0.0);
        assert_eq!(t.stratonovich_residual(), 0.0);
    }

    #[test]
    fn empty_sequence_is_all_zero() {
        let t = identity_terms(&GridFunction::Sine, 0.3, 1.0, &[]);
        assert_eq!(t.lhs, 0.0);
        assert_eq!(t.ito_tanaka_residual(), 0.0);
        assert_eq!(t.occupation_residual(), 0.0);
    }

    #[test]
    fn occupation_hand_case_for_the_square() {
        // f = x², a = 0, dx = 1, S = 0, 1, 0, -1: h_{±1}(x) = 2x ± 1
        let t = identity_terms(&GridFunction::Square, 0.0, 1.0, &[1, -1, -1]);
        // steps: h_{+1}(0) + h_{-1}(1) + h_{-1}(0) = 1 + 1 - 1
        assert_eq!(t.occupation_lhs, 1.0);
        assert_eq!(t.occupation_rhs, 1.0);
    }

    #[test]
    fn stratonovich_minus_ito_is_the_correction() {
        let signs: Vec<i8> = (0..400).map(|i| if (i * 7 + i / 3) % 5 < 2 { 1 } else { -1 }).collect();
        let t = identity_terms(&GridFunction::Sine, 0.1, 0.125, &signs);
        let diff = t.stratonovich_rhs - t.ito_sum;
        assert!((diff - t.ito_correction).abs() < 1e-13);
    }

    fn rational_case(coeffs: &[i64], a: (i64, i64), dx_pow: u32, signs: &[i8]) -> IdentityTerms<BigRational> {
        let c: Vec<BigRational> = coeffs.iter().map(|&x| BigRational::from_i64(x)).collect();
        let f = |x: &BigRational| c.iter().rev().fold(BigRational::zero(), |acc, k| acc * x + k);
        let a = BigRational::new(BigInt::from(a.0), BigInt::from(a.1));
        let dx = BigRational::new(BigInt::from(1), BigInt::from(1u64 << dx_pow));
        IdentityTerms::compute(&f, &a, &dx, signs)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn identities_are_exact_in_rational_arithmetic(
            coeffs in proptest::collection::vec(-4i64..=4, 1..5),
            a_num in -20i64..20,
            a_den in 1i64..7,
            dx_pow in 0u32..5,
            signs in proptest::collection::vec(prop_oneof![Just(1i8), Just(-1i8)], 0..60),
        ) {
            let t = rational_case(&coeffs, (a_num, a_den), dx_pow, &signs);
            prop_assert!(t.stratonovich_residual().is_zero());
            prop_assert!(t.ito_residual().is_zero());
            prop_assert!(t.ito_tanaka_residual().is_zero());
            prop_assert!(t.occupation_residual().is_zero());
        }

        #[test]
        fn identities_hold_in_floating_point(
            which in 0usize..8,
            a_steps in -8i32..8,
            dx_pow in 0u32..11,
            signs in proptest::collection::vec(prop_oneof![Just(1i8), Just(-1i8)], 0..2000),
        ) {
            let f = [
                GridFunction::Identity,
                GridFunction::Square,
                GridFunction::AbsShift(0.0),
                GridFunction::SignShift(0.0),
                GridFunction::Sine,
                GridFunction::Cosine,
                GridFunction::Indicator { lo: 0.0, hi: f64::INFINITY },
                GridFunction::Constant(-3.0),
            ][which].clone();
            let dx = (-f64::from(dx_pow)).exp2();
            let t = identity_terms(&f, f64::from(a_steps) * 0.125, dx, &signs);
            let tol = 1e-9 * (1.0 + t.lhs.abs());
            prop_assert!(t.stratonovich_residual().abs() <= tol);
            prop_assert!(t.ito_residual().abs() <= tol);
            prop_assert!(t.ito_tanaka_residual().abs() <= tol);
            prop_assert!(t.occupation_residual().abs() <= 1e-9 * (1.0 + t.occupation_lhs.abs()));
        }
    }

    #[test]
    fn random_suite_is_reproducible_and_small() {
        let a = identity_suite(200, 4096, Seed(5));
        let b = identity_suite(200, 4096, Seed(5));
        assert_eq!(a, b);
        assert!(a.max() <= 1e-9, "{a:?}");
    }

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let terms = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(neumaier_sum(terms), 2.0);
    }
}
