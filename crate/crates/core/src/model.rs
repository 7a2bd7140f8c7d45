//! Model specifications: which atoms, which couplings, which approximation.

use crate::error::{Error, Result};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Tcm,
    Dicke,
    XiRwa,
    XiFull,
    LambdaRwa,
    LambdaFull,
    VRwa,
    VFull,
}

/// Three-level atomic configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Configuration {
    Xi,
    Lambda,
    V,
}

impl Configuration {
    /// Weights (λ₂, λ₃) of the excitation number M = a†a + λ₂A₂₂ + λ₃A₃₃.
    pub fn lambdas(self) -> (usize, usize) {
        match self {
            Configuration::Xi => (1, 2),
            Configuration::Lambda => (0, 1),
            Configuration::V => (1, 1),
        }
    }

    /// Index into (μ₁₂, μ₁₃, μ₂₃) of the coupling that must vanish.
    fn forbidden_coupling(self) -> usize {
        match self {
            Configuration::Xi => 1,
            Configuration::Lambda => 0,
            Configuration::V => 2,
        }
    }
}

impl ModelKind {
    pub const ALL: [ModelKind; 8] = [
        ModelKind::Tcm,
        ModelKind::Dicke,
        ModelKind::XiRwa,
        ModelKind::XiFull,
        ModelKind::LambdaRwa,
        ModelKind::LambdaFull,
        ModelKind::VRwa,
        ModelKind::VFull,
    ];

    pub fn is_two_level(self) -> bool {
        matches!(self, ModelKind::Tcm | ModelKind::Dicke)
    }

    /// True when the counter-rotating terms are dropped.
    pub fn is_rwa(self) -> bool {
        matches!(
            self,
            ModelKind::Tcm | ModelKind::XiRwa | ModelKind::LambdaRwa | ModelKind::VRwa
        )
    }

    pub fn configuration(self) -> Option<Configuration> {
        match self {
            ModelKind::XiRwa | ModelKind::XiFull => Some(Configuration::Xi),
            ModelKind::LambdaRwa | ModelKind::LambdaFull => Some(Configuration::Lambda),
            ModelKind::VRwa | ModelKind::VFull => Some(Configuration::V),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Tcm => "TCM",
            ModelKind::Dicke => "DICKE",
            ModelKind::XiRwa => "XI_RWA",
            ModelKind::XiFull => "XI_FULL",
            ModelKind::LambdaRwa => "LAMBDA_RWA",
            ModelKind::LambdaFull => "LAMBDA_FULL",
            ModelKind::VRwa => "V_RWA",
            ModelKind::VFull => "V_FULL",
        }
    }

    pub fn parse(s: &str) -> Option<ModelKind> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Atoms {
    TwoLevel { omega_a: f64, gamma: f64 },
    /// Level frequencies (ω₁, ω₂, ω₃) and couplings (μ₁₂, μ₁₃, μ₂₃).
    ThreeLevel { omega: [f64; 3], mu: [f64; 3] },
}

/// A scalar model parameter that scans and paths can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Param {
    Gamma,
    OmegaA,
    FieldFreq,
    Omega1,
    Omega2,
    Omega3,
    Mu12,
    Mu13,
    Mu23,
}

impl Param {
    pub const ALL: [Param; 9] = [
        Param::Gamma,
        Param::OmegaA,
        Param::FieldFreq,
        Param::Omega1,
        Param::Omega2,
        Param::Omega3,
        Param::Mu12,
        Param::Mu13,
        Param::Mu23,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Param::Gamma => "gamma",
            Param::OmegaA => "omega_a",
            Param::FieldFreq => "field_freq",
            Param::Omega1 => "omega1",
            Param::Omega2 => "omega2",
            Param::Omega3 => "omega3",
            Param::Mu12 => "mu12",
            Param::Mu13 => "mu13",
            Param::Mu23 => "mu23",
        }
    }

    pub fn parse(s: &str) -> Option<Param> {
        Param::ALL.into_iter().find(|p| p.name() == s.trim())
    }
}

/// Full description of one Hamiltonian. Detunings are derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub n_atoms: usize,
    pub field_freq: f64,
    pub atoms: Atoms,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, n_atoms: usize, field_freq: f64, atoms: Atoms) -> Result<Self> {
        let spec = ModelSpec { kind, n_atoms, field_freq, atoms };
        spec.validate()?;
        Ok(spec)
    }

    pub fn tcm(n_atoms: usize, omega_a: f64, gamma: f64) -> Result<Self> {
        Self::new(ModelKind::Tcm, n_atoms, 1.0, Atoms::TwoLevel { omega_a, gamma })
    }

    pub fn dicke(n_atoms: usize, omega_a: f64, gamma: f64) -> Result<Self> {
        Self::new(ModelKind::Dicke, n_atoms, 1.0, Atoms::TwoLevel { omega_a, gamma })
    }

    pub fn three_level(kind: ModelKind, n_atoms: usize, omega: [f64; 3], mu: [f64; 3]) -> Result<Self> {
        Self::new(kind, n_atoms, 1.0, Atoms::ThreeLevel { omega, mu })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.n_atoms == 0 {
            return bad("n_atoms must be positive".into());
        }
        if !self.field_freq.is_finite() {
            return bad("field_freq must be finite".into());
        }
        match (self.kind.is_two_level(), self.atoms) {
            (true, Atoms::TwoLevel { omega_a, gamma }) => {
                if !omega_a.is_finite() || !gamma.is_finite() {
                    return bad("omega_a and gamma must be finite".into());
                }
                if gamma < 0.0 {
                    return bad(format!("gamma must be non-negative, got {gamma}"));
                }
            }
            (false, Atoms::ThreeLevel { omega, mu }) => {
                if omega.iter().chain(mu.iter()).any(|v| !v.is_finite()) {
                    return bad("frequencies and couplings must be finite".into());
                }
                if !(omega[0] <= omega[1] && omega[1] <= omega[2]) {
                    return bad(format!("level frequencies must satisfy ω1 ≤ ω2 ≤ ω3, got {omega:?}"));
                }
                if mu.iter().any(|&m| m < 0.0) {
                    return bad(format!("couplings must be non-negative, got {mu:?}"));
                }
                let config = self.kind.configuration().expect("three-level kind");
                let k = config.forbidden_coupling();
                if mu[k] != 0.0 {
                    let name = ["mu12", "mu13", "mu23"][k];
                    return bad(format!("{} requires {name} = 0", self.kind));
                }
            }
            _ => return bad(format!("atom description does not match {}", self.kind)),
        }
        Ok(())
    }

    /// j = N_A / 2.
    pub fn j(&self) -> f64 {
        self.n_atoms as f64 / 2.0
    }

    pub fn omega_a(&self) -> Option<f64> {
        match self.atoms {
            Atoms::TwoLevel { omega_a, .. } => Some(omega_a),
            _ => None,
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self.atoms {
            Atoms::TwoLevel { gamma, .. } => Some(gamma),
            _ => None,
        }
    }

    pub fn omega(&self) -> Option<[f64; 3]> {
        match self.atoms {
            Atoms::ThreeLevel { omega, .. } => Some(omega),
            _ => None,
        }
    }

    pub fn mu(&self) -> Option<[f64; 3]> {
        match self.atoms {
            Atoms::ThreeLevel { mu, .. } => Some(mu),
            _ => None,
        }
    }

    /// Δ = Ω − ω_A for 2-level models.
    pub fn detuning(&self) -> Option<f64> {
        self.omega_a().map(|w| self.field_freq - w)
    }

    /// Δ_ij = ω_i − ω_j − Ω (levels are 1-based).
    pub fn detuning_ij(&self, i: usize, j: usize) -> Option<f64> {
        self.omega().map(|w| w[i - 1] - w[j - 1] - self.field_freq)
    }

    /// Scale of the coupling used to size Fock cutoffs.
    pub fn coupling_scale(&self) -> f64 {
        match self.atoms {
            Atoms::TwoLevel { gamma, .. } => gamma,
            Atoms::ThreeLevel { mu, .. } => mu.iter().cloned().fold(0.0, f64::max),
        }
    }

    pub fn param(&self, p: Param) -> Result<f64> {
        let missing = || Error::InvalidParameter(format!("{} has no parameter {}", self.kind, p.name()));
        Ok(match (p, self.atoms) {
            (Param::FieldFreq, _) => self.field_freq,
            (Param::Gamma, Atoms::TwoLevel { gamma, .. }) => gamma,
            (Param::OmegaA, Atoms::TwoLevel { omega_a, .. }) => omega_a,
            (Param::Omega1, Atoms::ThreeLevel { omega, .. }) => omega[0],
            (Param::Omega2, Atoms::ThreeLevel { omega, .. }) => omega[1],
            (Param::Omega3, Atoms::ThreeLevel { omega, .. }) => omega[2],
            (Param::Mu12, Atoms::ThreeLevel { mu, .. }) => mu[0],
            (Param::Mu13, Atoms::ThreeLevel { mu, .. }) => mu[1],
            (Param::Mu23, Atoms::ThreeLevel { mu, .. }) => mu[2],
            _ => return Err(missing()),
        })
    }

    /// Copy with one parameter replaced; the result is re-validated.
    pub fn with_param(&self, p: Param, value: f64) -> Result<Self> {
        let mut s = *self;
        match (p, &mut s.atoms) {
            (Param::FieldFreq, _) => s.field_freq = value,
            (Param::Gamma, Atoms::TwoLevel { gamma, .. }) => *gamma = value,
            (Param::OmegaA, Atoms::TwoLevel { omega_a, .. }) => *omega_a = value,
            (Param::Omega1, Atoms::ThreeLevel { omega, .. }) => omega[0] = value,
            (Param::Omega2, Atoms::ThreeLevel { omega, .. }) => omega[1] = value,
            (Param::Omega3, Atoms::ThreeLevel { omega, .. }) => omega[2] = value,
            (Param::Mu12, Atoms::ThreeLevel { mu, .. }) => mu[0] = value,
            (Param::Mu13, Atoms::ThreeLevel { mu, .. }) => mu[1] = value,
            (Param::Mu23, Atoms::ThreeLevel { mu, .. }) => mu[2] = value,
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "{} has no parameter {}",
                    self.kind,
                    p.name()
                )))
            }
        }
        s.validate()?;
        Ok(s)
    }

    pub fn with_n_atoms(&self, n: usize) -> Result<Self> {
        let mut s = *self;
        s.n_atoms = n;
        s.validate()?;
        Ok(s)
    }

    /// Converts a raw eigenvalue of the assembled Hamiltonian to energy per particle.
    /// TCM is assembled in its intrinsic (already per-particle) form.
    pub fn per_particle(&self, energy: f64) -> f64 {
        match self.kind {
            ModelKind::Tcm => energy,
            _ => energy / self.n_atoms as f64,
        }
    }
}
