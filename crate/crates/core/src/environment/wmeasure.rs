use rand::Rng;
use rand_distr::Exp1;

use super::lattice::torus_coords;
use super::{Edge, Environment, FamilyKind, FamilyTag, Geometry};
use crate::error::{Error, Result};
use crate::rng::{lane, seeded};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// Stieltjes measure on the unit circle: `density · dx` plus finitely many
/// atoms in `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WMeasure {
    pub density: f64,
    pub atoms: Vec<Atom>,
}

impl WMeasure {
    pub fn lebesgue() -> Self {
        Self {
            density: 1.0,
            atoms: Vec::new(),
        }
    }

    pub fn with_atom(mut self, location: f64, mass: f64) -> Self {
        self.atoms.push(Atom { location, mass });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.density >= 0.0 && self.density.is_finite()) {
            return Err(Error::invalid(format!("density {} must be >= 0", self.density)));
        }
        for a in &self.atoms {
            if a.location == 0.0 || a.location == 1.0 {
                return Err(Error::invalid("W has an atom at 0"));
            }
            if !(a.location > 0.0 && a.location < 1.0) {
                return Err(Error::invalid(format!("atom location {} not in (0, 1)", a.location)));
            }
            if !(a.mass > 0.0 && a.mass.is_finite()) {
                return Err(Error::invalid(format!("atom mass {} must be > 0", a.mass)));
            }
        }
        Ok(())
    }

    /// `W((k/n, (k+1)/n])` for every cell `k`.
    pub fn cell_masses(&self, n: usize) -> Vec<f64> {
        let mut cells = vec![self.density / n as f64; n];
        for a in &self.atoms {
            let k = ((a.location * n as f64).ceil() as usize).clamp(1, n) - 1;
            cells[k] += a.mass;
        }
        cells
    }

    pub fn total_mass(&self) -> f64 {
        self.density + self.atoms.iter().map(|a| a.mass).sum::<f64>()
    }

    pub fn describe(&self) -> String {
        let atoms: Vec<String> = self
            .atoms
            .iter()
            .map(|a| format!("{}@{}", a.mass, a.location))
            .collect();
        format!("density={};atoms=[{}]", self.density, atoms.join(";"))
    }
}

/// Circle `n⁻¹ ℤ / ℤ` whose bond `(k, k+1)` has resistance `1/ω = W(cell_k) / n`.
///
/// Lebesgue measure gives `ω = n²`, the homogeneous diffusive scaling; an atom
/// inside a cell only raises that cell's resistance.
pub fn gen_w_measure_1d(n: usize, measure: &WMeasure) -> Result<Environment> {
    if n < 2 {
        return Err(Error::invalid(format!("circle size n = {n} must be >= 2")));
    }
    measure.validate()?;
    let cells = measure.cell_masses(n);
    if let Some(k) = cells.iter().position(|&m| m <= 0.0) {
        return Err(Error::invalid(format!("cell {k} has zero W-mass")));
    }
    let edges = cells
        .iter()
        .enumerate()
        .map(|(k, &mass)| Edge {
            i: k,
            j: (k + 1) % n,
            rate: n as f64 / mass,
        })
        .collect();
    let tag = FamilyTag::new(FamilyKind::WMeasure1d).param("w", measure.describe());
    Environment::new(
        1,
        n as u32,
        n as f64,
        Geometry::Torus { n },
        torus_coords(1, n),
        edges,
        tag,
    )
}

/// The `jumps` largest jumps of an `α`-stable subordinator on `[0, 1)`, by the
/// Poisson-point representation: sizes `Γ_k^{-1/α}` with `Γ_k` partial sums of
/// unit exponentials, at independent uniform locations. Lebesgue density 1 is
/// kept so every cell has positive mass.
pub fn sample_alpha_stable_w(alpha: f64, seed: u64, jumps: usize) -> Result<WMeasure> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha = {alpha} not in (0, 1)")));
    }
    if jumps == 0 {
        return Err(Error::invalid("need at least one jump"));
    }
    let mut rng = seeded(seed, lane::ENVIRONMENT);
    let mut gamma = 0.0;
    let mut atoms = Vec::with_capacity(jumps);
    for _ in 0..jumps {
        let e: f64 = rng.sample(Exp1);
        gamma += e;
        let mut location: f64 = rng.random();
        while location == 0.0 {
            location = rng.random();
        }
        atoms.push(Atom {
            location,
            mass: gamma.powf(-1.0 / alpha),
        });
    }
    Ok(WMeasure {
        density: 1.0,
        atoms,
    })
}
