//! Symmetry-reduced product bases |ν⟩ ⊗ (atomic symmetric irrep).

use crate::error::{Error, Result};
use crate::model::{ModelKind, ModelSpec};
use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sector {
    /// Fixed eigenvalue λ of Λ = j + J_z + a†a (TCM only).
    Lambda(usize),
    /// Fixed total excitation number M (3-level RWA only).
    M(usize),
    /// Even (`true`) or odd parity of Λ or M.
    Parity(bool),
    Full,
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sector::Lambda(l) => write!(f, "lambda={l}"),
            Sector::M(m) => write!(f, "M={m}"),
            Sector::Parity(true) => f.write_str("parity=+1"),
            Sector::Parity(false) => f.write_str("parity=-1"),
            Sector::Full => f.write_str("full"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SectorSpec {
    pub sector: Sector,
    /// Photon cutoff n_max; ignored by finite blocks.
    pub fock_cutoff: Option<usize>,
}

impl SectorSpec {
    pub fn lambda(l: usize) -> Self {
        SectorSpec { sector: Sector::Lambda(l), fock_cutoff: None }
    }
    pub fn m(m: usize) -> Self {
        SectorSpec { sector: Sector::M(m), fock_cutoff: None }
    }
    pub fn parity(even: bool, n_max: usize) -> Self {
        SectorSpec { sector: Sector::Parity(even), fock_cutoff: Some(n_max) }
    }
    pub fn full(n_max: usize) -> Self {
        SectorSpec { sector: Sector::Full, fock_cutoff: Some(n_max) }
    }
    pub fn is_finite_block(&self) -> bool {
        matches!(self.sector, Sector::Lambda(_) | Sector::M(_))
    }
    pub fn with_cutoff(&self, n_max: usize) -> Self {
        SectorSpec { sector: self.sector, fock_cutoff: Some(n_max) }
    }
}

/// Basis label. For 2-level models `a = k = j + m ∈ [0, N]` and `b = 0`;
/// for 3-level models `(a, b) = (q, r)` with populations (r, q − r, N − q).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    pub nu: usize,
    pub a: usize,
    pub b: usize,
}

impl Label {
    pub fn two(nu: usize, k: usize) -> Self {
        Label { nu, a: k, b: 0 }
    }
    pub fn three(nu: usize, q: usize, r: usize) -> Self {
        Label { nu, a: q, b: r }
    }
    /// Level occupations (n₁, n₂, n₃) of a 3-level label.
    pub fn occupations(&self, n_atoms: usize) -> [usize; 3] {
        [self.b, self.a - self.b, n_atoms - self.a]
    }
    pub fn from_occupations(nu: usize, n: [usize; 3]) -> Self {
        Label { nu, a: n[0] + n[1], b: n[0] }
    }
}

#[derive(Debug, Clone)]
pub struct Basis {
    pub labels: Vec<Label>,
    pub sector: SectorSpec,
    pub spec: ModelSpec,
    pub id: u64,
    index: HashMap<Label, usize>,
}

fn check_sector(spec: &ModelSpec, sector: &SectorSpec) -> Result<()> {
    let ok = match sector.sector {
        Sector::Lambda(_) => spec.kind == ModelKind::Tcm,
        Sector::M(_) => !spec.kind.is_two_level() && spec.kind.is_rwa(),
        Sector::Parity(_) => spec.kind == ModelKind::Dicke || (!spec.kind.is_two_level() && !spec.kind.is_rwa()),
        Sector::Full => true,
    };
    if !ok {
        return Err(Error::IncompatibleSector { sector: sector.sector.to_string(), kind: spec.kind.to_string() });
    }
    if !sector.is_finite_block() && sector.fock_cutoff.is_none() {
        return Err(Error::CutoffRequired(sector.sector.to_string()));
    }
    Ok(())
}

/// Excitation weight of a label: Λ eigenvalue (2-level) or M eigenvalue (3-level).
pub fn excitation(spec: &ModelSpec, l: &Label) -> usize {
    match spec.kind.configuration() {
        None => l.nu + l.a,
        Some(c) => {
            let (l2, l3) = c.lambdas();
            let n = l.occupations(spec.n_atoms);
            l.nu + l2 * n[1] + l3 * n[2]
        }
    }
}

pub fn enumerate_basis(spec: &ModelSpec, sector: SectorSpec) -> Result<Basis> {
    check_sector(spec, &sector)?;
    let n = spec.n_atoms;
    let mut labels = Vec::new();
    match (spec.kind.configuration(), sector.sector) {
        (None, Sector::Lambda(lam)) => {
            for nu in lam.saturating_sub(n)..=lam {
                labels.push(Label::two(nu, lam - nu));
            }
        }
        (Some(c), Sector::M(m)) => {
            let (l2, l3) = c.lambdas();
            // ν is fixed by the atomic part, so only atomic labels are enumerated.
            let mut v = Vec::new();
            for q in 0..=n {
                for r in 0..=q {
                    let w = l2 * (q - r) + l3 * (n - q);
                    if w <= m {
                        v.push(Label::three(m - w, q, r));
                    }
                }
            }
            v.sort();
            labels = v;
        }
        (config, s) => {
            let n_max = sector.fock_cutoff.expect("checked above");
            for nu in 0..=n_max {
                match config {
                    None => {
                        for k in 0..=n {
                            labels.push(Label::two(nu, k));
                        }
                    }
                    Some(_) => {
                        for q in 0..=n {
                            for r in 0..=q {
                                labels.push(Label::three(nu, q, r));
                            }
                        }
                    }
                }
            }
            if let Sector::Parity(even) = s {
                labels.retain(|l| (excitation(spec, l) % 2 == 0) == even);
            }
        }
    }
    Ok(Basis::from_labels(spec, sector, labels))
}

impl Basis {
    fn from_labels(spec: &ModelSpec, sector: SectorSpec, labels: Vec<Label>) -> Basis {
        let index = labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        let mut h = DefaultHasher::new();
        spec.n_atoms.hash(&mut h);
        spec.kind.configuration().map(|c| c.lambdas()).hash(&mut h);
        sector.sector.hash(&mut h);
        if !sector.is_finite_block() {
            sector.fock_cutoff.hash(&mut h);
        }
        Basis { labels, sector, spec: *spec, id: h.finish(), index }
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn index_of(&self, l: &Label) -> Option<usize> {
        self.index.get(l).copied()
    }

    pub fn is_two_level(&self) -> bool {
        self.spec.kind.is_two_level()
    }

    /// Largest photon number present.
    pub fn max_photons(&self) -> usize {
        self.labels.iter().map(|l| l.nu).max().unwrap_or(0)
    }

    /// Same basis with its labels permuted; used to check ordering invariance.
    pub fn permuted(&self, order: &[usize]) -> Basis {
        let labels = order.iter().map(|&i| self.labels[i]).collect();
        let mut b = Basis::from_labels(&self.spec, self.sector, labels);
        b.id = self.id ^ 0x9e37_79b9_7f4a_7c15;
        b
    }
}
