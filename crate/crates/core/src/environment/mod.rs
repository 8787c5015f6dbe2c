//! Finite weighted graphs `(X_n, ω^n, a_n, μ_n)`.
//!
//! An [`Environment`] is immutable once built. Conductances are stored once
//! per unordered pair with `i < j`; the measure `μ_n` gives every site the
//! same mass `1 / a_n`.

mod io;
mod lattice;
mod percolation;
mod sierpinski;
mod wmeasure;

use std::fmt;
use std::str::FromStr;

pub use io::{read_environment, write_environment};
pub use lattice::{build_torus_lattice, gen_elliptic_random, Bond, ConductanceLaw, LawKind};
pub use percolation::gen_percolation;
pub use sierpinski::{gasket_vertex_count, gen_sierpinski, MAX_GASKET_LEVEL};
pub use wmeasure::{gen_w_measure_1d, sample_alpha_stable_w, Atom, WMeasure};

use crate::error::{Error, Result};
use crate::testfn::Point;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    TorusLattice,
    EllipticRandom,
    Percolation,
    WMeasure1d,
    Sierpinski,
    Explicit,
}

impl FamilyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FamilyKind::TorusLattice => "torus-lattice",
            FamilyKind::EllipticRandom => "elliptic-random",
            FamilyKind::Percolation => "percolation",
            FamilyKind::WMeasure1d => "w-measure-1d",
            FamilyKind::Sierpinski => "sierpinski",
            FamilyKind::Explicit => "explicit",
        }
    }

    /// Families whose scaling is `a_n = n^d`.
    pub fn is_lattice(&self) -> bool {
        matches!(
            self,
            FamilyKind::TorusLattice
                | FamilyKind::EllipticRandom
                | FamilyKind::Percolation
                | FamilyKind::WMeasure1d
        )
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "torus-lattice" | "homogeneous" => FamilyKind::TorusLattice,
            "elliptic-random" => FamilyKind::EllipticRandom,
            "percolation" => FamilyKind::Percolation,
            "w-measure-1d" => FamilyKind::WMeasure1d,
            "sierpinski" => FamilyKind::Sierpinski,
            "explicit" => FamilyKind::Explicit,
            other => return Err(Error::Config(format!("unknown family `{other}`"))),
        })
    }
}

/// Which generator produced an environment, with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyTag {
    pub kind: FamilyKind,
    pub seed: Option<u64>,
    pub params: Vec<(String, String)>,
}

impl FamilyTag {
    pub fn new(kind: FamilyKind) -> Self {
        Self {
            kind,
            seed: None,
            params: Vec::new(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.params
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

/// How test functions are projected onto sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    /// Sites `x / n` on the unit torus of dimension `dim`; projection uses the
    /// piecewise-linear hat partition.
    Torus { n: usize },
    /// Projection is pointwise evaluation.
    Pointwise,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    dim: usize,
    level: u32,
    scaling: f64,
    geometry: Geometry,
    coords: Vec<Point>,
    edges: Vec<Edge>,
    tag: FamilyTag,
}

impl Environment {
    /// Builds and validates an environment. Edges may be given in any order
    /// and orientation; parallel edges are merged by summing their rates.
    pub fn new(
        dim: usize,
        level: u32,
        scaling: f64,
        geometry: Geometry,
        coords: Vec<Point>,
        edges: Vec<Edge>,
        tag: FamilyTag,
    ) -> Result<Self> {
        let mut env = Self {
            dim,
            level,
            scaling,
            geometry,
            coords,
            edges: canonical_edges(edges)?,
            tag,
        };
        env.validate()?;
        env.edges.shrink_to_fit();
        Ok(env)
    }

    pub fn explicit(scaling: f64, coords: Vec<Point>, edges: Vec<Edge>) -> Result<Self> {
        Self::new(
            2,
            0,
            scaling,
            Geometry::Pointwise,
            coords,
            edges,
            FamilyTag::new(FamilyKind::Explicit),
        )
    }

    /// Shared validator for every generator's output.
    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.dim) {
            return Err(Error::invalid(format!("dimension {} not in 1..=2", self.dim)));
        }
        if !(self.scaling > 0.0 && self.scaling.is_finite()) {
            return Err(Error::invalid(format!("scaling a_n = {} must be > 0", self.scaling)));
        }
        if self.coords.is_empty() {
            return Err(Error::invalid("environment has no sites"));
        }
        let n = self.coords.len();
        for e in &self.edges {
            if e.i >= e.j {
                return Err(Error::invalid(format!("edge ({}, {}) not canonical", e.i, e.j)));
            }
            if e.j >= n {
                return Err(Error::invalid(format!("edge ({}, {}) out of range", e.i, e.j)));
            }
            if !(e.rate >= 0.0 && e.rate.is_finite()) {
                return Err(Error::invalid(format!(
                    "edge ({}, {}) has rate {}",
                    e.i, e.j, e.rate
                )));
            }
        }
        if self.coords.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::invalid("non-finite site coordinate"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// The scaling sequence value `a_n`.
    pub fn scaling(&self) -> f64 {
        self.scaling
    }

    /// `μ_n` mass of every site, `1 / a_n`.
    pub fn site_weight(&self) -> f64 {
        1.0 / self.scaling
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn site_count(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn tag(&self) -> &FamilyTag {
        &self.tag
    }

    pub fn family(&self) -> FamilyKind {
        self.tag.kind
    }

    pub fn total_rate(&self) -> f64 {
        self.edges.iter().map(|e| e.rate).sum()
    }

    /// `max_x Σ_y ω_{x,y}`.
    pub fn row_sum_max(&self) -> f64 {
        let mut rows = vec![0.0; self.site_count()];
        for e in &self.edges {
            rows[e.i] += e.rate;
            rows[e.j] += e.rate;
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// `a_n · max_x ∫ U_x dμ`, bounded by a level-independent constant for a
    /// well-posed partition of unity.
    pub fn hat_mass_bound(&self) -> f64 {
        match self.geometry {
            Geometry::Torus { n } => self.scaling * (n as f64).powi(-(self.dim as i32)),
            Geometry::Pointwise => self.scaling * self.site_weight(),
        }
    }

    /// `|X_n| / a_n`; for percolation this is the realised cluster density.
    pub fn site_density(&self) -> f64 {
        self.site_count() as f64 / self.scaling
    }
}

fn canonical_edges(edges: Vec<Edge>) -> Result<Vec<Edge>> {
    let mut out: Vec<Edge> = edges
        .into_iter()
        .map(|e| {
            if e.i == e.j {
                Err(Error::invalid(format!("self-loop at site {}", e.i)))
            } else if e.i < e.j {
                Ok(e)
            } else {
                Ok(Edge {
                    i: e.j,
                    j: e.i,
                    rate: e.rate,
                })
            }
        })
        .collect::<Result<_>>()?;
    out.sort_by(|a, b| (a.i, a.j).cmp(&(b.i, b.j)));
    out.dedup_by(|later, kept| {
        if later.i == kept.i && later.j == kept.j {
            kept.rate += later.rate;
            true
        } else {
            false
        }
    });
    Ok(out)
}

/// Declarative description of an environment; `build` is a pure function of
/// the spec.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvironmentSpec {
    TorusLattice {
        dim: usize,
        level: usize,
    },
    EllipticRandom {
        dim: usize,
        level: usize,
        law: ConductanceLaw,
        seed: u64,
    },
    Percolation {
        dim: usize,
        level: usize,
        p: f64,
        seed: u64,
    },
    WMeasure {
        level: usize,
        measure: WMeasure,
    },
    Sierpinski {
        level: u32,
    },
}

impl EnvironmentSpec {
    pub fn build(&self) -> Result<Environment> {
        match self {
            EnvironmentSpec::TorusLattice { dim, level } => {
                let n2 = (*level as f64).powi(2);
                build_torus_lattice(*dim, *level, |_| n2)
            }
            EnvironmentSpec::EllipticRandom {
                dim,
                level,
                law,
                seed,
            } => gen_elliptic_random(*dim, *level, law, *seed),
            EnvironmentSpec::Percolation {
                dim,
                level,
                p,
                seed,
            } => gen_percolation(*dim, *level, *p, *seed),
            EnvironmentSpec::WMeasure { level, measure } => gen_w_measure_1d(*level, measure),
            EnvironmentSpec::Sierpinski { level } => gen_sierpinski(*level),
        }
    }

    /// Same family and parameters at another level.
    pub fn at_level(&self, new_level: usize) -> Self {
        let mut out = self.clone();
        match &mut out {
            EnvironmentSpec::TorusLattice { level, .. }
            | EnvironmentSpec::EllipticRandom { level, .. }
            | EnvironmentSpec::Percolation { level, .. }
            | EnvironmentSpec::WMeasure { level, .. } => *level = new_level,
            EnvironmentSpec::Sierpinski { level } => *level = new_level as u32,
        }
        out
    }

    pub fn kind(&self) -> FamilyKind {
        match self {
            EnvironmentSpec::TorusLattice { .. } => FamilyKind::TorusLattice,
            EnvironmentSpec::EllipticRandom { .. } => FamilyKind::EllipticRandom,
            EnvironmentSpec::Percolation { .. } => FamilyKind::Percolation,
            EnvironmentSpec::WMeasure { .. } => FamilyKind::WMeasure1d,
            EnvironmentSpec::Sierpinski { .. } => FamilyKind::Sierpinski,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            EnvironmentSpec::TorusLattice { dim, .. }
            | EnvironmentSpec::EllipticRandom { dim, .. }
            | EnvironmentSpec::Percolation { dim, .. } => *dim,
            EnvironmentSpec::WMeasure { .. } => 1,
            EnvironmentSpec::Sierpinski { .. } => 2,
        }
    }
}
