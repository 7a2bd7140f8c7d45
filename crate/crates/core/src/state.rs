use crate::error::{Error, Result};
use crate::operator::OperatorMatrix;
use num_complex::Complex64 as C64;

/// Normalised amplitudes on a basis. The global phase is fixed so that the
/// largest-magnitude amplitude is real and positive.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub amplitudes: Vec<C64>,
    pub basis_id: u64,
}

impl StateVector {
    pub fn new(mut amplitudes: Vec<C64>, basis_id: u64) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidParameter("state has zero or non-finite norm".into()));
        }
        let big = amplitudes
            .iter()
            .copied()
            .fold(C64::default(), |m, a| if a.norm() > m.norm() * (1.0 + 1e-12) { a } else { m });
        let phase = big.conj() / big.norm();
        for a in amplitudes.iter_mut() {
            *a = *a * phase / norm;
        }
        Ok(StateVector { amplitudes, basis_id })
    }

    pub fn from_real(v: &[f64], basis_id: u64) -> Result<Self> {
        Self::new(v.iter().map(|&x| C64::new(x, 0.0)).collect(), basis_id)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.basis_id != other.basis_id || self.dim() != other.dim() {
            return Err(Error::BasisMismatch("states live on different bases".into()));
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    /// |⟨self|other⟩|².
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.re).collect()
    }

    /// ⟨ψ|O|ψ⟩ (complex in general).
    pub fn expect(&self, op: &OperatorMatrix) -> Result<C64> {
        if op.basis_id != self.basis_id || op.dim != self.dim() {
            return Err(Error::BasisMismatch("operator and state live on different bases".into()));
        }
        let y = op.apply(&self.amplitudes);
        Ok(self.amplitudes.iter().zip(&y).map(|(a, b)| a.conj() * b).sum())
    }

    /// ‖(O − E)ψ‖.
    pub fn residual(&self, op: &OperatorMatrix, e: f64) -> f64 {
        let y = op.apply(&self.amplitudes);
        y.iter().zip(&self.amplitudes).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt()
    }
}
