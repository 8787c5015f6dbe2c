use std::str::FromStr;

use rand::Rng;
use rand_distr::{weighted::WeightedIndex, Distribution};

use super::{Edge, Environment, FamilyTag, FamilyKind, Geometry};
use crate::error::{Error, Result};
use crate::rng::{lane, seeded};

/// A nearest-neighbour bond of the torus, `from → from + e_axis`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bond {
    pub from: usize,
    pub to: usize,
    pub axis: usize,
}

/// Enumerates torus bonds in canonical order: site-major, then axis.
pub(crate) fn torus_bonds(dim: usize, n: usize) -> Vec<Bond> {
    let sites = n.pow(dim as u32);
    let mut bonds = Vec::with_capacity(dim * sites);
    for s in 0..sites {
        let x = s % n;
        let y = s / n;
        bonds.push(Bond {
            from: s,
            to: (x + 1) % n + y * n,
            axis: 0,
        });
        if dim == 2 {
            bonds.push(Bond {
                from: s,
                to: x + ((y + 1) % n) * n,
                axis: 1,
            });
        }
    }
    bonds
}

pub(crate) fn torus_coords(dim: usize, n: usize) -> Vec<[f64; 2]> {
    let sites = n.pow(dim as u32);
    let h = 1.0 / n as f64;
    (0..sites)
        .map(|s| {
            let x = (s % n) as f64 * h;
            let y = if dim == 2 { (s / n) as f64 * h } else { 0.0 };
            [x, y]
        })
        .collect()
}

fn check_torus(dim: usize, n: usize) -> Result<()> {
    if !(1..=2).contains(&dim) {
        return Err(Error::invalid(format!("lattice dimension {dim} not in 1..=2")));
    }
    if n < 2 {
        return Err(Error::invalid(format!("torus side n = {n} must be >= 2")));
    }
    Ok(())
}

/// Nearest-neighbour torus `(n⁻¹ ℤ / ℤ)^d` with `a_n = n^d` and rates from
/// `rate_fn`.
pub fn build_torus_lattice(
    dim: usize,
    n: usize,
    rate_fn: impl Fn(&Bond) -> f64,
) -> Result<Environment> {
    check_torus(dim, n)?;
    let edges = torus_bonds(dim, n)
        .iter()
        .map(|b| Edge {
            i: b.from,
            j: b.to,
            rate: rate_fn(b),
        })
        .collect();
    Environment::new(
        dim,
        n as u32,
        (n as f64).powi(dim as i32),
        Geometry::Torus { n },
        torus_coords(dim, n),
        edges,
        FamilyTag::new(FamilyKind::TorusLattice),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub enum LawKind {
    /// Finite support with (unnormalised) weights.
    Discrete { values: Vec<f64>, weights: Vec<f64> },
    Uniform { lo: f64, hi: f64 },
}

/// Bond-conductance distribution with ellipticity constant `ε₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConductanceLaw {
    pub eps0: f64,
    pub kind: LawKind,
}

impl ConductanceLaw {
    pub fn point(value: f64) -> Self {
        let eps0 = value.min(1.0 / value).min(1.0);
        Self {
            eps0,
            kind: LawKind::Discrete {
                values: vec![value],
                weights: vec![1.0],
            },
        }
    }

    /// Equal-weight law on a finite set of values.
    pub fn uniform_on(values: &[f64], eps0: f64) -> Self {
        Self {
            eps0,
            kind: LawKind::Discrete {
                values: values.to_vec(),
                weights: vec![1.0; values.len()],
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps0 > 0.0 && self.eps0 <= 1.0) {
            return Err(Error::invalid(format!("eps0 = {} not in (0, 1]", self.eps0)));
        }
        let (lo, hi) = (self.eps0, 1.0 / self.eps0);
        let inside = |v: f64| v >= lo * (1.0 - 1e-12) && v <= hi * (1.0 + 1e-12);
        match &self.kind {
            LawKind::Discrete { values, weights } => {
                if values.is_empty() || values.len() != weights.len() {
                    return Err(Error::invalid("discrete law needs matching values and weights"));
                }
                if weights.iter().any(|w| !(*w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
                    return Err(Error::invalid("discrete law weights must be >= 0 with positive sum"));
                }
                for (v, w) in values.iter().zip(weights) {
                    if *w > 0.0 && !inside(*v) {
                        return Err(Error::invalid(format!(
                            "law support value {v} outside [{lo}, {hi}]"
                        )));
                    }
                }
            }
            LawKind::Uniform { lo: a, hi: b } => {
                if !(a <= b) || !inside(*a) || !inside(*b) {
                    return Err(Error::invalid(format!(
                        "uniform law [{a}, {b}] outside [{lo}, {hi}]"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `(E[1/a])⁻¹`, the one-dimensional homogenised coefficient.
    pub fn harmonic_mean(&self) -> f64 {
        match &self.kind {
            LawKind::Discrete { values, weights } => {
                let total: f64 = weights.iter().sum();
                let inv: f64 = values.iter().zip(weights).map(|(v, w)| w / v).sum::<f64>() / total;
                1.0 / inv
            }
            LawKind::Uniform { lo, hi } => {
                if hi == lo {
                    *lo
                } else {
                    (hi - lo) / (hi / lo).ln()
                }
            }
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            LawKind::Discrete { values, weights } => {
                let body: Vec<String> = values
                    .iter()
                    .zip(weights)
                    .map(|(v, w)| format!("{v}@{w}"))
                    .collect();
                format!("discrete[{}]", body.join(";"))
            }
            LawKind::Uniform { lo, hi } => format!("uniform[{lo};{hi}]"),
        }
    }

    fn sampler(&self) -> Result<Sampler<'_>> {
        Ok(match &self.kind {
            LawKind::Discrete { values, weights } => Sampler::Discrete(
                values,
                WeightedIndex::new(weights).map_err(|e| Error::invalid(e.to_string()))?,
            ),
            LawKind::Uniform { lo, hi } => Sampler::Uniform(*lo, *hi),
        })
    }
}

/// `point:v`, `discrete:v1,v2,...` (equal weights) or `uniform:lo,hi`. The
/// ellipticity constant is the tightest one the support allows.
impl FromStr for ConductanceLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse conductance law `{s}`"));
        let (kind, body) = s.split_once(':').ok_or_else(bad)?;
        let values: Vec<f64> = body
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        if values.iter().any(|v| !(*v > 0.0)) {
            return Err(bad());
        }
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(0.0, f64::max);
        let eps0 = lo.min(1.0 / hi).min(1.0);
        let law = match (kind.trim(), values.as_slice()) {
            ("point", [v]) => Self::point(*v),
            ("discrete", vs) if !vs.is_empty() => Self::uniform_on(vs, eps0),
            ("uniform", [lo, hi]) if lo <= hi => Self {
                eps0,
                kind: LawKind::Uniform { lo: *lo, hi: *hi },
            },
            _ => return Err(bad()),
        };
        law.validate()?;
        Ok(law)
    }
}

enum Sampler<'a> {
    Discrete(&'a [f64], WeightedIndex<f64>),
    Uniform(f64, f64),
}

impl Sampler<'_> {
    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Discrete(values, index) => values[index.sample(rng)],
            Sampler::Uniform(lo, hi) => lo + (hi - lo) * rng.random::<f64>(),
        }
    }
}

/// i.i.d. elliptic conductances `ω = n² a` on the torus.
///
/// Bonds draw in canonical order from one stream, so in one dimension the
/// first `n` coefficients are shared by every level built from the same seed.
pub fn gen_elliptic_random(
    dim: usize,
    n: usize,
    law: &ConductanceLaw,
    seed: u64,
) -> Result<Environment> {
    check_torus(dim, n)?;
    law.validate()?;
    let sampler = law.sampler()?;
    let mut rng = seeded(seed, lane::ENVIRONMENT);
    let n2 = (n as f64).powi(2);
    let edges = torus_bonds(dim, n)
        .iter()
        .map(|b| Edge {
            i: b.from,
            j: b.to,
            rate: n2 * sampler.draw(&mut rng),
        })
        .collect();
    let tag = FamilyTag::new(FamilyKind::EllipticRandom)
        .with_seed(seed)
        .param("eps0", law.eps0)
        .param("law", law.describe());
    Environment::new(
        dim,
        n as u32,
        (n as f64).powi(dim as i32),
        Geometry::Torus { n },
        torus_coords(dim, n),
        edges,
        tag,
    )
}

#[cfg(test)]
mod tests {
    #[test]
    fn law_strings() {
        let law: ConductanceLaw = "discrete:0.5,2".parse().unwrap();
        assert_eq!(law, ConductanceLaw::uniform_on(&[0.5, 2.0], 0.5));
        assert!((law.harmonic_mean() - 0.8).abs() < 1e-15);
        let u: ConductanceLaw = "uniform:0.5,2".parse().unwrap();
        assert_eq!(u.eps0, 0.5);
        assert_eq!("point:1".parse::<ConductanceLaw>().unwrap(), ConductanceLaw::point(1.0));
        assert!("uniform:2".parse::<ConductanceLaw>().is_err());
        assert!("gauss:0,1".parse::<ConductanceLaw>().is_err());
    }

    use super::*;

    #[test]
    fn torus_1d_homogeneous() {
        let env = build_torus_lattice(1, 4, |_| 16.0).unwrap();
        assert_eq!(env.site_count(), 4);
        assert_eq!(env.edges().len(), 4);
        assert!(env.edges().iter().all(|e| e.rate == 16.0));
        assert_eq!(env.scaling(), 4.0);
    }

    #[test]
    fn torus_2d_edge_count() {
        let env = build_torus_lattice(2, 3, |_| 1.0).unwrap();
        assert_eq!(env.site_count(), 9);
        assert_eq!(env.edges().len(), 18);
    }

    #[test]
    fn torus_row_sum() {
        let env = build_torus_lattice(1, 128, |_| 128.0 * 128.0).unwrap();
        assert_eq!(env.row_sum_max(), 32768.0);
    }

    #[test]
    fn torus_rejects_degenerate() {
        assert!(build_torus_lattice(1, 1, |_| 1.0).is_err());
        assert!(build_torus_lattice(3, 4, |_| 1.0).is_err());
    }

    #[test]
    fn point_law_is_homogeneous() {
        let a = gen_elliptic_random(2, 6, &ConductanceLaw::point(1.0), 5).unwrap();
        let b = build_torus_lattice(2, 6, |_| 36.0).unwrap();
        assert_eq!(a.edges(), b.edges());
    }

    #[test]
    fn law_support_checked() {
        let bad = ConductanceLaw::uniform_on(&[0.5, 2.0], 0.6);
        assert!(gen_elliptic_random(1, 8, &bad, 1).is_err());
        let bad_uniform = ConductanceLaw {
            eps0: 0.5,
            kind: LawKind::Uniform { lo: 0.1, hi: 1.0 },
        };
        assert!(bad_uniform.validate().is_err());
    }

    #[test]
    fn two_valued_law_fraction() {
        let law = ConductanceLaw::uniform_on(&[0.5, 2.0], 0.5);
        let env = gen_elliptic_random(1, 32, &law, 7).unwrap();
        let n2 = 32.0 * 32.0;
        let mut high = 0usize;
        for e in env.edges() {
            let a = e.rate / n2;
            assert!(a == 0.5 || a == 2.0);
            if a == 2.0 {
                high += 1;
            }
        }
        // Binomial(32, 1/2): mean 16, sd sqrt(8).
        let z = (high as f64 - 16.0) / 8f64.sqrt();
        assert!(z.abs() <= 3.0, "z = {z}");
    }

    #[test]
    fn elliptic_deterministic() {
        let law = ConductanceLaw::uniform_on(&[0.5, 2.0], 0.5);
        let a = gen_elliptic_random(2, 16, &law, 42).unwrap();
        let b = gen_elliptic_random(2, 16, &law, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn harmonic_mean_of_two_valued_law() {
        let law = ConductanceLaw::uniform_on(&[0.5, 2.0], 0.5);
        assert!((law.harmonic_mean() - 0.8).abs() < 1e-15);
    }
}
