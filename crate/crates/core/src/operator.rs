//! Sparse operators on a [`Basis`] and Hamiltonian assembly.

use crate::basis::{excitation, Basis, Label};
use crate::error::{Error, Result};
use crate::model::{Atoms, ModelKind, ModelSpec};
use num_complex::Complex64 as C64;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpId {
    A,
    ADag,
    NPh,
    Jz,
    JPlus,
    JMinus,
    /// A_ij = |i⟩⟨j| summed over atoms (levels 1-based).
    Aij(usize, usize),
    LambdaHat,
    MHat,
    Parity,
    /// Field quadratures q = (a + a†)/√2 and p = i(a† − a)/√2.
    Q,
    P,
    Jx,
    Jy,
}

impl OpId {
    pub fn name(&self) -> String {
        match self {
            OpId::Aij(i, j) => format!("A{i}{j}"),
            other => format!("{other:?}"),
        }
    }
}

/// Compressed sparse row matrix. Rows/columns index basis labels.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub dim: usize,
    pub basis_id: u64,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl OperatorMatrix {
    pub fn from_triplets(dim: usize, basis_id: u64, triplets: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let mut rows: Vec<BTreeMap<usize, C64>> = vec![BTreeMap::new(); dim];
        for (r, c, v) in triplets {
            *rows[r].entry(c).or_insert(C64::new(0.0, 0.0)) += v;
        }
        let mut indptr = Vec::with_capacity(dim + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in rows {
            for (c, v) in row {
                if v.norm() > 0.0 {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        OperatorMatrix { dim, basis_id, indptr, indices, values }
    }

    pub fn identity(dim: usize, basis_id: u64) -> Self {
        Self::from_triplets(dim, basis_id, (0..dim).map(|i| (i, i, C64::new(1.0, 0.0))))
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k]))
        })
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        (self.indptr[r]..self.indptr[r + 1])
            .find(|&k| self.indices[k] == c)
            .map(|k| self.values[k])
            .unwrap_or_default()
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.dim, "operator/vector dimension mismatch");
        (0..self.dim)
            .map(|r| {
                (self.indptr[r]..self.indptr[r + 1])
                    .map(|k| self.values[k] * x[self.indices[k]])
                    .sum()
            })
            .collect()
    }

    /// y = A x for real x; only valid when all entries are real.
    pub fn apply_real(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.dim {
            let mut s = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                s += self.values[k].re * x[self.indices[k]];
            }
            y[r] = s;
        }
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.basis_id, self.triplets().map(|(r, c, v)| (c, r, v.conj())))
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= s);
        m
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self::from_triplets(self.dim, self.basis_id, self.triplets().chain(other.triplets()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut t = Vec::new();
        for (r, k, v) in self.triplets() {
            for kk in other.indptr[k]..other.indptr[k + 1] {
                t.push((r, other.indices[kk], v * other.values[kk]));
            }
        }
        Self::from_triplets(self.dim, self.basis_id, t)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.matmul(other).sub(&other.matmul(self))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// ‖A − A†‖ in max-norm.
    pub fn hermiticity_defect(&self) -> f64 {
        self.sub(&self.adjoint()).max_abs()
    }

    pub fn to_dense_real(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v.re;
        }
        m
    }

    /// Principal submatrix on the given rows/columns, in that order.
    pub fn restrict(&self, rows: &[usize], basis_id: u64) -> Self {
        let pos: std::collections::HashMap<usize, usize> = rows.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        let mut t = Vec::new();
        for (i, &r) in rows.iter().enumerate() {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if let Some(&j) = pos.get(&self.indices[k]) {
                    t.push((i, j, self.values[k]));
                }
            }
        }
        Self::from_triplets(rows.len(), basis_id, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PhotonOp {
    Id,
    Lower,
    Raise,
    Number,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum AtomOp {
    Id,
    Jz,
    JPlus,
    JMinus,
    /// |i⟩⟨j| on 0-based levels.
    A(usize, usize),
}

fn photon_action(op: PhotonOp, nu: usize) -> Option<(usize, f64)> {
    match op {
        PhotonOp::Id => Some((nu, 1.0)),
        PhotonOp::Number => Some((nu, nu as f64)),
        PhotonOp::Lower => (nu > 0).then(|| (nu - 1, (nu as f64).sqrt())),
        PhotonOp::Raise => Some((nu + 1, ((nu + 1) as f64).sqrt())),
    }
}

/// Action of a collective atomic operator on one label; `None` if it annihilates.
fn atom_action(op: AtomOp, n_atoms: usize, l: &Label, two_level: bool) -> Option<(Label, f64)> {
    if two_level {
        let k = l.a;
        let n = n_atoms;
        return match op {
            AtomOp::Id => Some((*l, 1.0)),
            AtomOp::Jz => Some((*l, k as f64 - n as f64 / 2.0)),
            // J₊|j,m⟩ = √((j−m)(j+m+1)) with j−m = N−k and j+m+1 = k+1.
            AtomOp::JPlus => (k < n).then(|| (Label::two(l.nu, k + 1), (((n - k) * (k + 1)) as f64).sqrt())),
            AtomOp::JMinus => (k > 0).then(|| (Label::two(l.nu, k - 1), ((k * (n - k + 1)) as f64).sqrt())),
            AtomOp::A(..) => None,
        };
    }
    match op {
        AtomOp::Id => Some((*l, 1.0)),
        AtomOp::A(i, j) => {
            let mut occ = l.occupations(n_atoms);
            if i == j {
                return Some((*l, occ[i] as f64));
            }
            if occ[j] == 0 {
                return None;
            }
            let amp = (((occ[i] + 1) * occ[j]) as f64).sqrt();
            occ[i] += 1;
            occ[j] -= 1;
            // Basis phase (−1)^{n₃}: elements that move one atom in or out of level 3 flip sign.
            let sign = if (i == 2) != (j == 2) { -1.0 } else { 1.0 };
            Some((Label::from_occupations(l.nu, occ), sign * amp))
        }
        _ => None,
    }
}

type Term = (C64, PhotonOp, AtomOp);

fn assemble_terms(basis: &Basis, terms: &[Term]) -> OperatorMatrix {
    let two = basis.is_two_level();
    let n = basis.spec.n_atoms;
    let mut t = Vec::new();
    for (col, l) in basis.labels.iter().enumerate() {
        for &(coef, pop, aop) in terms {
            let Some((l1, a1)) = atom_action(aop, n, l, two) else { continue };
            let Some((nu2, a2)) = photon_action(pop, l1.nu) else { continue };
            let target = Label { nu: nu2, ..l1 };
            if let Some(row) = basis.index_of(&target) {
                let v = coef * (a1 * a2);
                if v.norm() > 0.0 {
                    t.push((row, col, v));
                }
            }
        }
    }
    OperatorMatrix::from_triplets(basis.dim(), basis.id, t)
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Matrix of a single named operator, restricted to the basis (components mapped
/// outside the basis are dropped).
pub fn operator_matrix(op: OpId, basis: &Basis) -> Result<OperatorMatrix> {
    let spec = &basis.spec;
    let two = spec.kind.is_two_level();
    let undefined = || Error::OperatorUndefined { op: op.name(), kind: spec.kind.to_string() };
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    let terms: Vec<Term> = match op {
        OpId::A => vec![(re(1.0), PhotonOp::Lower, AtomOp::Id)],
        OpId::ADag => vec![(re(1.0), PhotonOp::Raise, AtomOp::Id)],
        OpId::NPh => vec![(re(1.0), PhotonOp::Number, AtomOp::Id)],
        OpId::Q => vec![(re(s2), PhotonOp::Lower, AtomOp::Id), (re(s2), PhotonOp::Raise, AtomOp::Id)],
        OpId::P => vec![
            (C64::new(0.0, -s2), PhotonOp::Lower, AtomOp::Id),
            (C64::new(0.0, s2), PhotonOp::Raise, AtomOp::Id),
        ],
        OpId::Jz if two => vec![(re(1.0), PhotonOp::Id, AtomOp::Jz)],
        OpId::JPlus if two => vec![(re(1.0), PhotonOp::Id, AtomOp::JPlus)],
        OpId::JMinus if two => vec![(re(1.0), PhotonOp::Id, AtomOp::JMinus)],
        OpId::Jx if two => vec![(re(0.5), PhotonOp::Id, AtomOp::JPlus), (re(0.5), PhotonOp::Id, AtomOp::JMinus)],
        OpId::Jy if two => vec![
            (C64::new(0.0, -0.5), PhotonOp::Id, AtomOp::JPlus),
            (C64::new(0.0, 0.5), PhotonOp::Id, AtomOp::JMinus),
        ],
        OpId::Aij(i, j) if !two && (1..=3).contains(&i) && (1..=3).contains(&j) => {
            vec![(re(1.0), PhotonOp::Id, AtomOp::A(i - 1, j - 1))]
        }
        OpId::LambdaHat if two => {
            return Ok(diagonal(basis, |l| (l.nu + l.a) as f64));
        }
        OpId::MHat if !two => {
            return Ok(diagonal(basis, |l| excitation(spec, l) as f64));
        }
        OpId::Parity => {
            return Ok(diagonal(basis, |l| if excitation(spec, l) % 2 == 0 { 1.0 } else { -1.0 }));
        }
        _ => return Err(undefined()),
    };
    Ok(assemble_terms(basis, &terms))
}

fn diagonal(basis: &Basis, f: impl Fn(&Label) -> f64) -> OperatorMatrix {
    OperatorMatrix::from_triplets(
        basis.dim(),
        basis.id,
        basis.labels.iter().enumerate().map(|(i, l)| (i, i, re(f(l)))),
    )
}

fn compatible(spec: &ModelSpec, basis: &Basis) -> bool {
    spec.n_atoms == basis.spec.n_atoms
        && spec.kind.is_two_level() == basis.spec.kind.is_two_level()
        && spec.kind.configuration().map(|c| c.lambdas()) == basis.spec.kind.configuration().map(|c| c.lambdas())
}

/// Hamiltonian of `spec` on `basis`. TCM uses the intrinsic 1/N_A form; Dicke and
/// 3-level models are extensive.
pub fn assemble_hamiltonian(spec: &ModelSpec, basis: &Basis) -> Result<OperatorMatrix> {
    spec.validate()?;
    if !compatible(spec, basis) {
        return Err(Error::BasisMismatch(format!(
            "{} with N_A={} on a basis built for {} with N_A={}",
            spec.kind, spec.n_atoms, basis.spec.kind, basis.spec.n_atoms
        )));
    }
    let n = spec.n_atoms as f64;
    let om = spec.field_freq;
    let terms: Vec<Term> = match (spec.kind, spec.atoms) {
        (ModelKind::Tcm, Atoms::TwoLevel { omega_a, gamma }) => {
            let g = gamma / n.sqrt();
            vec![
                (re(om / n), PhotonOp::Number, AtomOp::Id),
                (re(omega_a / n), PhotonOp::Id, AtomOp::Jz),
                (re(g / n), PhotonOp::Raise, AtomOp::JMinus),
                (re(g / n), PhotonOp::Lower, AtomOp::JPlus),
            ]
        }
        (ModelKind::Dicke, Atoms::TwoLevel { omega_a, gamma }) => {
            let g = re(gamma / n.sqrt());
            let mut t = vec![(re(om), PhotonOp::Number, AtomOp::Id), (re(omega_a), PhotonOp::Id, AtomOp::Jz)];
            for p in [PhotonOp::Lower, PhotonOp::Raise] {
                for a in [AtomOp::JPlus, AtomOp::JMinus] {
                    t.push((g, p, a));
                }
            }
            t
        }
        (kind, Atoms::ThreeLevel { omega, mu }) => {
            let mut t = vec![(re(om), PhotonOp::Number, AtomOp::Id)];
            for (i, w) in omega.iter().enumerate() {
                t.push((re(*w), PhotonOp::Id, AtomOp::A(i, i)));
            }
            let pairs = [(0, 1, mu[0]), (0, 2, mu[1]), (1, 2, mu[2])];
            for (i, j, m) in pairs {
                if m == 0.0 {
                    continue;
                }
                let c = re(-m / n.sqrt());
                if kind.is_rwa() {
                    // a A_ji absorbs a photon while raising i → j.
                    t.push((c, PhotonOp::Lower, AtomOp::A(j, i)));
                    t.push((c, PhotonOp::Raise, AtomOp::A(i, j)));
                } else {
                    for p in [PhotonOp::Lower, PhotonOp::Raise] {
                        t.push((c, p, AtomOp::A(i, j)));
                        t.push((c, p, AtomOp::A(j, i)));
                    }
                }
            }
            t
        }
        _ => unreachable!("validated spec"),
    };
    Ok(assemble_terms(basis, &terms))
}
