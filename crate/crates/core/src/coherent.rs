//! Product coherent states |α⟩ ⊗ |γ⟩^{⊗N} and their Hamiltonian matrix elements.
//!
//! Everything the variational module needs (coherent energies, parity-projected
//! energies, overlaps) reduces to matrix elements between two such states.

use crate::model::{Atoms, ModelKind, ModelSpec};
use num_complex::Complex64 as C64;

/// Field amplitude and single-atom state (normalised to 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ProductCoherent {
    pub alpha: C64,
    pub gamma: Vec<C64>,
}

impl ProductCoherent {
    pub fn new(alpha: C64, gamma: Vec<C64>) -> Self {
        let n = gamma.iter().map(|g| g.norm_sqr()).sum::<f64>().sqrt();
        ProductCoherent { alpha, gamma: gamma.into_iter().map(|g| g / n).collect() }
    }

    /// 2-level state with α = (q + ip)/√2 and ζ = tan(θ/2) e^{−iφ}.
    pub fn two_level(q: f64, p: f64, theta: f64, phi: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        ProductCoherent::new(
            C64::new(q, p) / std::f64::consts::SQRT_2,
            vec![C64::new(c, 0.0), C64::from_polar(s, -phi)],
        )
    }

    /// 3-level state with α = ρe^{iφ}, γ = (1, ρ₂e^{iφ₂}, ρ₃e^{iφ₃}).
    pub fn three_level(rho: f64, phi: f64, rho2: f64, phi2: f64, rho3: f64, phi3: f64) -> Self {
        ProductCoherent::new(
            C64::from_polar(rho, phi),
            vec![C64::new(1.0, 0.0), C64::from_polar(rho2, phi2), C64::from_polar(rho3, phi3)],
        )
    }

    /// Image under the parity exp(iπ·excitation): α → −α, γ_i → (−1)^{w_i} γ_i.
    pub fn parity_image(&self, weights: &[usize]) -> Self {
        ProductCoherent {
            alpha: -self.alpha,
            gamma: self
                .gamma
                .iter()
                .zip(weights)
                .map(|(g, w)| if w % 2 == 0 { *g } else { -*g })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Photon {
    Lower,
    Raise,
}

/// Extensive Hamiltonian Ω a†a + Σ ε_i A_ii + Σ c (a or a†) A_ij.
#[derive(Debug, Clone)]
pub struct CoherentHamiltonian {
    omega_field: f64,
    eps: Vec<f64>,
    terms: Vec<(f64, Photon, usize, usize)>,
    n_atoms: usize,
    /// Parity weights of each level.
    pub weights: Vec<usize>,
}

impl CoherentHamiltonian {
    pub fn from_spec(spec: &ModelSpec) -> Self {
        let n = spec.n_atoms as f64;
        let mut terms = Vec::new();
        let (eps, weights) = match spec.atoms {
            Atoms::TwoLevel { omega_a, gamma } => {
                let g = gamma / n.sqrt();
                // Level 0 = lower, 1 = upper; J₊ = A₁₀, J₋ = A₀₁.
                match spec.kind {
                    ModelKind::Tcm => {
                        terms.push((g, Photon::Raise, 0, 1));
                        terms.push((g, Photon::Lower, 1, 0));
                    }
                    _ => {
                        for p in [Photon::Lower, Photon::Raise] {
                            terms.push((g, p, 1, 0));
                            terms.push((g, p, 0, 1));
                        }
                    }
                }
                (vec![-omega_a / 2.0, omega_a / 2.0], vec![0, 1])
            }
            Atoms::ThreeLevel { omega, mu } => {
                let (l2, l3) = spec.kind.configuration().expect("3-level").lambdas();
                for (i, j, m) in [(0, 1, mu[0]), (0, 2, mu[1]), (1, 2, mu[2])] {
                    if m == 0.0 {
                        continue;
                    }
                    let c = -m / n.sqrt();
                    if spec.kind.is_rwa() {
                        terms.push((c, Photon::Lower, j, i));
                        terms.push((c, Photon::Raise, i, j));
                    } else {
                        for p in [Photon::Lower, Photon::Raise] {
                            terms.push((c, p, i, j));
                            terms.push((c, p, j, i));
                        }
                    }
                }
                (omega.to_vec(), vec![0, l2, l3])
            }
        };
        CoherentHamiltonian { omega_field: spec.field_freq, eps, terms, n_atoms: spec.n_atoms, weights }
    }

    /// (⟨a|b⟩, ⟨a|H|b⟩) for normalised product coherent states.
    pub fn element(&self, a: &ProductCoherent, b: &ProductCoherent) -> (C64, C64) {
        let n = self.n_atoms as i32;
        let field = (-0.5 * a.alpha.norm_sqr() - 0.5 * b.alpha.norm_sqr() + a.alpha.conj() * b.alpha).exp();
        let t: C64 = a.gamma.iter().zip(&b.gamma).map(|(x, y)| x.conj() * y).sum();
        let tn = t.powi(n);
        let tn1 = t.powi(n - 1);
        let overlap = field * tn;
        let nn = self.n_atoms as f64;
        let mut h = self.omega_field * a.alpha.conj() * b.alpha * tn;
        for (i, e) in self.eps.iter().enumerate() {
            h += *e * nn * a.gamma[i].conj() * b.gamma[i] * tn1;
        }
        for &(c, p, i, j) in &self.terms {
            let f = match p {
                Photon::Lower => b.alpha,
                Photon::Raise => a.alpha.conj(),
            };
            h += c * f * nn * a.gamma[i].conj() * b.gamma[j] * tn1;
        }
        (overlap, field * h)
    }

    /// Coherent-state energy per particle.
    pub fn energy(&self, s: &ProductCoherent) -> f64 {
        self.element(s, s).1.re / self.n_atoms as f64
    }

    /// Energy per particle of the normalised parity projection (1 ± P)|s⟩.
    pub fn sas_energy(&self, s: &ProductCoherent, plus: bool) -> f64 {
        let (_, hd) = self.element(s, s);
        let ps = s.parity_image(&self.weights);
        let (o, hx) = self.element(s, &ps);
        let sg = if plus { 1.0 } else { -1.0 };
        let den = 1.0 + sg * o.re;
        (hd.re + sg * hx.re) / den / self.n_atoms as f64
    }

    /// Overlap ⟨s|P s⟩ (real part), i.e. the 𝓕 of the state.
    pub fn parity_overlap(&self, s: &ProductCoherent) -> f64 {
        let ps = s.parity_image(&self.weights);
        self.element(s, &ps).0.re
    }

    /// |⟨a±|b±⟩|² between normalised parity projections (or plain coherent
    /// states when `proj` is `None`).
    pub fn fidelity(&self, a: &ProductCoherent, b: &ProductCoherent, proj: Option<bool>) -> f64 {
        let (ab, _) = self.element(a, b);
        match proj {
            None => ab.norm_sqr(),
            Some(plus) => {
                let sg = if plus { 1.0 } else { -1.0 };
                let pb = b.parity_image(&self.weights);
                let (apb, _) = self.element(a, &pb);
                let na = 1.0 + sg * self.parity_overlap(a);
                let nb = 1.0 + sg * self.parity_overlap(b);
                (ab + sg * apb).norm_sqr() / (na * nb)
            }
        }
    }
}
