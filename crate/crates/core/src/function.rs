//! Real functions used as integrands, with a small parseable catalog.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::Error;

/// `sgn(x)`, with `sgn(0) = 0`.
#[inline]
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Knots `(x_i, y_i)` with strictly increasing `x_i`; linear in between and
/// extended linearly past both ends with the end slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self, Error> {
        if knots.len() < 2 {
            return Err(Error::InvalidConfig("piecewise-linear table needs two knots".into()));
        }
        if !knots.windows(2).all(|w| w[1].0 > w[0].0) {
            return Err(Error::InvalidConfig("piecewise-linear knots must increase".into()));
        }
        let (xs, ys) = knots.into_iter().unzip();
        Ok(PiecewiseLinear { xs, ys })
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    fn slope(&self, i: usize) -> f64 {
        (self.ys[i + 1] - self.ys[i]) / (self.xs[i + 1] - self.xs[i])
    }

    /// Segment index for `x`, with `x` in `(x_i, x_{i+1}]` mapping to `i`.
    fn left_segment(&self, x: f64) -> usize {
        let i = self.xs.partition_point(|&k| k < x);
        i.saturating_sub(1).min(self.xs.len() - 2)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.left_segment(x);
        self.ys[i] + self.slope(i) * (x - self.xs[i])
    }

    /// Left derivative: slope of the segment to the left of `x`.
    pub fn left_slope(&self, x: f64) -> f64 {
        self.slope(self.left_segment(x))
    }

    /// Slope jumps at interior knots, `(x_i, slope_i - slope_{i-1})`.
    pub fn slope_jumps(&self) -> Vec<(f64, f64)> {
        (1..self.xs.len() - 1)
            .map(|i| (self.xs[i], self.slope(i) - self.slope(i - 1)))
            .collect()
    }
}

/// A function `ℝ → ℝ`.
#[derive(Clone)]
pub enum GridFunction {
    Constant(f64),
    Identity,
    Linear { slope: f64, intercept: f64 },
    Square,
    /// `|x - a|`
    AbsShift(f64),
    /// `sgn(x - a)`
    SignShift(f64),
    /// Left derivative of `|x - a|`: `-1` for `x ≤ a`, `+1` for `x > a`.
    LeftSign(f64),
    Sine,
    Cosine,
    Exp,
    /// Indicator of `[lo, hi)`; either end may be infinite.
    Indicator { lo: f64, hi: f64 },
    PiecewiseLinear(PiecewiseLinear),
    /// Left-continuous step function given by the left slopes of a table.
    LeftSlope(PiecewiseLinear),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for GridFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridFunction::Custom(_) => f.write_str("Custom(..)"),
            other => write!(f, "{other}"),
        }
    }
}

impl GridFunction {
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        GridFunction::Custom(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            GridFunction::Constant(c) => *c,
            GridFunction::Identity => x,
            GridFunction::Linear { slope, intercept } => slope * x + intercept,
            GridFunction::Square => x * x,
            GridFunction::AbsShift(a) => (x - a).abs(),
            GridFunction::SignShift(a) => sgn(x - a),
            GridFunction::LeftSign(a) => {
                if x > *a {
                    1.0
                } else {
                    -1.0
                }
            }
            GridFunction::Sine => x.sin(),
            GridFunction::Cosine => x.cos(),
            GridFunction::Exp => x.exp(),
            GridFunction::Indicator { lo, hi } => {
                if x >= *lo && x < *hi {
                    1.0
                } else {
                    0.0
                }
            }
            GridFunction::PiecewiseLinear(t) => t.eval(x),
            GridFunction::LeftSlope(t) => t.left_slope(x),
            GridFunction::Custom(f) => f(x),
        }
    }

    /// Closed-form left derivative, for the entries that are continuous and
    /// have one.
    pub fn left_derivative(&self) -> Option<GridFunction> {
        Some(match self {
            GridFunction::Constant(_) => GridFunction::Constant(0.0),
            GridFunction::Identity => GridFunction::Constant(1.0),
            GridFunction::Linear { slope, .. } => GridFunction::Constant(*slope),
            GridFunction::Square => GridFunction::Linear {
                slope: 2.0,
                intercept: 0.0,
            },
            GridFunction::AbsShift(a) => GridFunction::LeftSign(*a),
            GridFunction::Sine => GridFunction::Cosine,
            GridFunction::Cosine => GridFunction::custom(|x| -x.sin()),
            GridFunction::Exp => GridFunction::Exp,
            GridFunction::PiecewiseLinear(t) => GridFunction::LeftSlope(t.clone()),
            _ => return None,
        })
    }

    /// Catalog id, `None` for custom closures.
    pub fn catalog_id(&self) -> Option<String> {
        match self {
            GridFunction::Custom(_) => None,
            other => Some(other.to_string()),
        }
    }
}

fn fmt_bound(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        x.to_string()
    }
}

impl fmt::Display for GridFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let table = |t: &PiecewiseLinear| {
            t.knots()
                .map(|(x, y)| format!("{x}:{y}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            GridFunction::Constant(c) => write!(f, "const:{c}"),
            GridFunction::Identity => f.write_str("identity"),
            GridFunction::Linear { slope, intercept } => write!(f, "linear:{slope}:{intercept}"),
            GridFunction::Square => f.write_str("square"),
            GridFunction::AbsShift(a) => write!(f, "abs:{a}"),
            GridFunction::SignShift(a) => write!(f, "sign:{a}"),
            GridFunction::LeftSign(a) => write!(f, "leftsign:{a}"),
            GridFunction::Sine => f.write_str("sine"),
            GridFunction::Cosine => f.write_str("cosine"),
            GridFunction::Exp => f.write_str("exp"),
            GridFunction::Indicator { lo, hi } => write!(f, "indicator:{}:{}", fmt_bound(*lo), fmt_bound(*hi)),
            GridFunction::PiecewiseLinear(t) => write!(f, "pwl:{}", table(t)),
            GridFunction::LeftSlope(t) => write!(f, "leftslope:{}", table(t)),
            GridFunction::Custom(_) => f.write_str("custom"),
        }
    }
}

fn parse_f64(s: &str) -> Result<f64, Error> {
    match s {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad number `{s}` in function id"))),
    }
}

fn parse_table(s: &str) -> Result<PiecewiseLinear, Error> {
    let knots = s
        .split(',')
        .map(|pair| {
            let (x, y) = pair
                .split_once(':')
                .ok_or_else(|| Error::InvalidConfig(format!("bad knot `{pair}`, want x:y")))?;
            Ok((parse_f64(x)?, parse_f64(y)?))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    PiecewiseLinear::new(knots)
}

impl FromStr for GridFunction {
    type Err = Error;

    /// Parses the ids produced by `Display`, e.g. `square`, `abs:0.5`,
    /// `indicator:0:inf`, `pwl:-1:1,0:0,1:1`. A missing shift defaults to 0.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        let shift = || rest.map_or(Ok(0.0), parse_f64);
        let two = || -> Result<(f64, f64), Error> {
            let r = rest.ok_or_else(|| Error::InvalidConfig(format!("`{s}` needs two parameters")))?;
            let (a, b) = r
                .split_once(':')
                .ok_or_else(|| Error::InvalidConfig(format!("`{s}` needs two parameters")))?;
            Ok((parse_f64(a)?, parse_f64(b)?))
        };
        Ok(match head {
            "const" => GridFunction::Constant(shift()?),
            "identity" | "x" => GridFunction::Identity,
            "linear" => {
                let (slope, intercept) = two()?;
                GridFunction::Linear { slope, intercept }
            }
            "square" => GridFunction::Square,
            "abs" => GridFunction::AbsShift(shift()?),
            "sign" => GridFunction::SignShift(shift()?),
            "leftsign" => GridFunction::LeftSign(shift()?),
            "sine" | "sin" => GridFunction::Sine,
            "cosine" | "cos" => GridFunction::Cosine,
            "exp" => GridFunction::Exp,
            "indicator" => {
                let (lo, hi) = two()?;
                GridFunction::Indicator { lo, hi }
            }
            "pwl" => GridFunction::PiecewiseLinear(parse_table(rest.unwrap_or(""))?),
            "leftslope" => GridFunction::LeftSlope(parse_table(rest.unwrap_or(""))?),
            _ => return Err(Error::InvalidConfig(format!("unknown function id `{s}`"))),
        })
    }
}
