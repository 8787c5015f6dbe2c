//! Analytic test functions and initial profiles.
//!
//! Test functions are evaluated on embedding coordinates. One-dimensional
//! environments use only the first coordinate.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::Error;
use crate::operator::CoordIndex;

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    Constant(f64),
    /// `cos(2π k x_axis)`
    Cosine { k: u32, axis: usize },
    /// `sin(2π k x_axis)`
    Sine { k: u32, axis: usize },
    /// Gaussian `exp(-|x - c|² / (2σ²))`.
    Bump { center: Point, sigma: f64 },
    /// Values on the sites of a reference graph; `NaN` elsewhere and for all
    /// derivatives.
    Tabulated(Arc<Tabulated>),
}

#[derive(Debug)]
pub struct Tabulated {
    pub name: String,
    index: CoordIndex,
    values: Vec<f64>,
}

impl Tabulated {
    pub fn new(name: impl Into<String>, index: CoordIndex, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            index,
            values,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl PartialEq for Tabulated {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.values == other.values
    }
}

impl TestFunction {
    pub fn value(&self, p: &Point) -> f64 {
        match *self {
            TestFunction::Tabulated(ref t) => t.index.lookup(p).map_or(f64::NAN, |i| t.values[i]),
            TestFunction::Constant(c) => c,
            TestFunction::Cosine { k, axis } => (2.0 * PI * k as f64 * p[axis]).cos(),
            TestFunction::Sine { k, axis } => (2.0 * PI * k as f64 * p[axis]).sin(),
            TestFunction::Bump { center, sigma } => {
                let r2 = (p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2);
                (-r2 / (2.0 * sigma * sigma)).exp()
            }
        }
    }

    pub fn gradient(&self, p: &Point) -> Point {
        match *self {
            TestFunction::Tabulated(_) => [f64::NAN; 2],
            TestFunction::Constant(_) => [0.0, 0.0],
            TestFunction::Cosine { k, axis } => {
                let w = 2.0 * PI * k as f64;
                let mut g = [0.0, 0.0];
                g[axis] = -w * (w * p[axis]).sin();
                g
            }
            TestFunction::Sine { k, axis } => {
                let w = 2.0 * PI * k as f64;
                let mut g = [0.0, 0.0];
                g[axis] = w * (w * p[axis]).cos();
                g
            }
            TestFunction::Bump { center, sigma } => {
                let v = self.value(p);
                let s2 = sigma * sigma;
                [-(p[0] - center[0]) / s2 * v, -(p[1] - center[1]) / s2 * v]
            }
        }
    }

    pub fn hessian(&self, p: &Point) -> [[f64; 2]; 2] {
        match *self {
            TestFunction::Tabulated(_) => [[f64::NAN; 2]; 2],
            TestFunction::Constant(_) => [[0.0; 2]; 2],
            TestFunction::Cosine { k, axis } | TestFunction::Sine { k, axis } => {
                let w = 2.0 * PI * k as f64;
                let mut h = [[0.0; 2]; 2];
                h[axis][axis] = -w * w * self.value(p);
                h
            }
            TestFunction::Bump { center, sigma } => {
                let v = self.value(p);
                let s2 = sigma * sigma;
                let d = [p[0] - center[0], p[1] - center[1]];
                let mut h = [[0.0; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        h[i][j] = v * (d[i] * d[j] / (s2 * s2) - delta / s2);
                    }
                }
                h
            }
        }
    }

    /// `div(A ∇G)` for a constant symmetric matrix `A`.
    pub fn divergence_form(&self, a: &[[f64; 2]; 2], p: &Point) -> f64 {
        let h = self.hessian(p);
        let mut acc = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                acc += a[i][j] * h[i][j];
            }
        }
        acc
    }

    pub fn max_abs_hint(&self) -> f64 {
        match *self {
            TestFunction::Constant(c) => c.abs(),
            TestFunction::Tabulated(ref t) => t.values.iter().fold(0.0, |m, v| m.max(v.abs())),
            _ => 1.0,
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let axis_suffix = |axis: usize| if axis == 1 { "y" } else { "" };
        match self {
            TestFunction::Constant(c) => write!(f, "const:{c}"),
            TestFunction::Cosine { k, axis } => write!(f, "cos{k}{}", axis_suffix(*axis)),
            TestFunction::Sine { k, axis } => write!(f, "sin{k}{}", axis_suffix(*axis)),
            TestFunction::Bump { center, sigma } => {
                write!(f, "bump:{},{},{}", center[0], center[1], sigma)
            }
            TestFunction::Tabulated(t) => f.write_str(&t.name),
        }
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    /// Accepts `one`, `const:<c>`, `cos<k>`, `sin<k>` (append `y` for the
    /// second axis) and `bump:<cx>,<cy>,<sigma>`.
    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        let bad = || Error::Config(format!("unrecognised test function `{s}`"));
        if s == "one" {
            return Ok(TestFunction::Constant(1.0));
        }
        if let Some(rest) = s.strip_prefix("const:") {
            return rest.parse().map(TestFunction::Constant).map_err(|_| bad());
        }
        if let Some(rest) = s.strip_prefix("bump:") {
            let parts: Vec<f64> = rest
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad())?;
            if parts.len() != 3 || parts[2] <= 0.0 {
                return Err(bad());
            }
            return Ok(TestFunction::Bump {
                center: [parts[0], parts[1]],
                sigma: parts[2],
            });
        }
        for (prefix, cosine) in [("cos", true), ("sin", false)] {
            if let Some(rest) = s.strip_prefix(prefix) {
                let (digits, axis) = match rest.strip_suffix('y') {
                    Some(d) => (d, 1),
                    None => (rest, 0),
                };
                let k: u32 = digits.parse().map_err(|_| bad())?;
                if k == 0 {
                    return Err(bad());
                }
                return Ok(if cosine {
                    TestFunction::Cosine { k, axis }
                } else {
                    TestFunction::Sine { k, axis }
                });
            }
        }
        Err(bad())
    }
}

/// Initial density profile `base + amplitude · shape`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub base: f64,
    pub amplitude: f64,
    pub shape: TestFunction,
}

impl Profile {
    pub fn constant(rho: f64) -> Self {
        Self {
            base: rho,
            amplitude: 0.0,
            shape: TestFunction::Constant(0.0),
        }
    }

    /// `(1 + cos 2πx) / 2`.
    pub fn cosine() -> Self {
        Self {
            base: 0.5,
            amplitude: 0.5,
            shape: TestFunction::Cosine { k: 1, axis: 0 },
        }
    }

    pub fn bump(center: Point, sigma: f64) -> Self {
        Self {
            base: 0.0,
            amplitude: 1.0,
            shape: TestFunction::Bump { center, sigma },
        }
    }

    pub fn value(&self, p: &Point) -> f64 {
        self.base + self.amplitude * self.shape.value(p)
    }

    /// Closed-form solution of `∂_t u = D ∂²_x u` on the unit circle, when the
    /// shape is a single Fourier mode along the first axis.
    pub fn fourier_1d(&self, diffusivity: f64, t: f64, x: f64) -> Option<f64> {
        match self.shape {
            TestFunction::Constant(c) => Some(self.base + self.amplitude * c),
            TestFunction::Cosine { k, axis: 0 } | TestFunction::Sine { k, axis: 0 } => {
                let w = 2.0 * PI * k as f64;
                let decay = (-w * w * diffusivity * t).exp();
                Some(self.base + self.amplitude * decay * self.shape.value(&[x, 0.0]))
            }
            _ => None,
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.amplitude == 0.0 {
            write!(f, "const:{}", self.base)
        } else {
            write!(f, "{}+{}*{}", self.base, self.amplitude, self.shape)
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    /// Accepts `cosine`, `const:<rho>`, a bare test function, or
    /// `<base>+<amplitude>*<test function>`.
    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        if s == "cosine" {
            return Ok(Profile::cosine());
        }
        if let Some(rest) = s.strip_prefix("const:") {
            return rest
                .parse()
                .map(Profile::constant)
                .map_err(|_| Error::Config(format!("unrecognised profile `{s}`")));
        }
        if let Some((base, rest)) = s.split_once('+') {
            if let Ok(base) = base.trim().parse::<f64>() {
                let (amp, shape) = rest
                    .split_once('*')
                    .ok_or_else(|| Error::Config(format!("unrecognised profile `{s}`")))?;
                let amplitude = amp
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("unrecognised profile `{s}`")))?;
                return Ok(Profile {
                    base,
                    amplitude,
                    shape: shape.parse()?,
                });
            }
        }
        Ok(Profile {
            base: 0.0,
            amplitude: 1.0,
            shape: s.parse()?,
        })
    }
}
