//! Coherent, projected and parity-adapted (SAS) trial states: energy surfaces,
//! minimisation and embedding into truncated bases.

use crate::basis::{excitation, Basis, Label, Sector};
use crate::coherent::{CoherentHamiltonian, ProductCoherent};
use crate::error::{Error, Result};
use crate::model::{Atoms, Configuration, ModelKind, ModelSpec};
use crate::optim::{halton_points, nelder_mead, NmOptions};
use crate::state::StateVector;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    TcmCoh,
    TcmProj,
    DickeCoh,
    /// Parity-projected Dicke state; `true` for the even (+) projection.
    DickeSas(bool),
    Rwa3Coh,
    Full3Coh,
    Full3Sas(bool),
    VSasPlus,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::TcmCoh => "TCM_COH",
            Family::TcmProj => "TCM_PROJ",
            Family::DickeCoh => "DICKE_COH",
            Family::DickeSas(true) => "DICKE_SAS(+)",
            Family::DickeSas(false) => "DICKE_SAS(-)",
            Family::Rwa3Coh => "RWA3_COH",
            Family::Full3Coh => "FULL3_COH",
            Family::Full3Sas(true) => "FULL3_SAS(+)",
            Family::Full3Sas(false) => "FULL3_SAS(-)",
            Family::VSasPlus => "V_SAS_PLUS",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        let all = [
            Family::TcmCoh,
            Family::TcmProj,
            Family::DickeCoh,
            Family::DickeSas(true),
            Family::DickeSas(false),
            Family::Rwa3Coh,
            Family::Full3Coh,
            Family::Full3Sas(true),
            Family::Full3Sas(false),
            Family::VSasPlus,
        ];
        all.into_iter().find(|f| f.name().eq_ignore_ascii_case(s.trim()))
    }

    /// Parity projection carried by the family, if any.
    pub fn projection(self) -> Option<bool> {
        match self {
            Family::DickeSas(s) | Family::Full3Sas(s) => Some(s),
            Family::VSasPlus => Some(true),
            _ => None,
        }
    }

    fn accepts(self, kind: ModelKind) -> bool {
        match self {
            Family::TcmCoh | Family::TcmProj => kind == ModelKind::Tcm,
            Family::DickeCoh | Family::DickeSas(_) => kind == ModelKind::Dicke,
            Family::Rwa3Coh => !kind.is_two_level() && kind.is_rwa(),
            Family::Full3Coh | Family::Full3Sas(_) => !kind.is_two_level() && !kind.is_rwa(),
            Family::VSasPlus => kind == ModelKind::VFull,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Params {
    /// α = (q + ip)/√2, ζ = tan(θ/2) e^{−iφ}.
    TwoLevel { q: f64, p: f64, theta: f64, phi: f64 },
    TcmProj { lambda: usize, eta: f64 },
    /// α = ρe^{iφ}, γ = (1, ρ₂e^{iφ₂}, ρ₃e^{iφ₃}).
    ThreeLevel { rho: f64, phi: f64, rho2: f64, phi2: f64, rho3: f64, phi3: f64 },
    /// V configuration: ρ = |α|/√N, ρ₂ = ξ cos η, ρ₃ = ξ sin η with η = χ + atan2(μ₁₃, μ₁₂).
    VReduced { rho: f64, xi: f64, chi: f64 },
}

impl Params {
    pub fn three_real(rho: f64, rho2: f64, rho3: f64) -> Self {
        Params::ThreeLevel { rho, phi: 0.0, rho2, phi2: 0.0, rho3, phi3: 0.0 }
    }

    /// Flat list of (name, value) pairs, for reporting.
    pub fn fields(&self) -> Vec<(&'static str, f64)> {
        match *self {
            Params::TwoLevel { q, p, theta, phi } => vec![("q", q), ("p", p), ("theta", theta), ("phi", phi)],
            Params::TcmProj { lambda, eta } => vec![("lambda", lambda as f64), ("eta", eta)],
            Params::ThreeLevel { rho, phi, rho2, phi2, rho3, phi3 } => vec![
                ("rho", rho),
                ("phi", phi),
                ("rho2", rho2),
                ("phi2", phi2),
                ("rho3", rho3),
                ("phi3", phi3),
            ],
            Params::VReduced { rho, xi, chi } => vec![("rho", rho), ("xi", xi), ("chi", chi)],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationalPoint {
    pub family: Family,
    pub params: Params,
    /// Energy per particle.
    pub energy: f64,
}

fn mismatch(family: Family, spec: &ModelSpec) -> Error {
    Error::FamilyMismatch { family: family.name().into(), kind: spec.kind.to_string() }
}

fn check(family: Family, spec: &ModelSpec) -> Result<()> {
    if family.accepts(spec.kind) {
        Ok(())
    } else {
        Err(mismatch(family, spec))
    }
}

fn two_level_parts(spec: &ModelSpec) -> (f64, f64) {
    match spec.atoms {
        Atoms::TwoLevel { omega_a, gamma } => (omega_a, gamma),
        Atoms::ThreeLevel { .. } => unreachable!("checked by family"),
    }
}

fn three_level_parts(spec: &ModelSpec) -> ([f64; 3], [f64; 3]) {
    match spec.atoms {
        Atoms::ThreeLevel { omega, mu } => (omega, mu),
        Atoms::TwoLevel { .. } => unreachable!("checked by family"),
    }
}

/// Energy per particle of a 2-level coherent or SAS trial state.
pub fn energy_surface_2level(spec: &ModelSpec, family: Family, params: &Params) -> Result<f64> {
    check(family, spec)?;
    let &Params::TwoLevel { q, p, theta, phi } = params else {
        return Err(Error::InvalidParameter(format!("{family} expects (q, p, theta, phi)")));
    };
    let n = spec.n_atoms as f64;
    let (omega_a, gamma) = two_level_parts(spec);
    let field = spec.field_freq * (q * q + p * p) / (2.0 * n);
    match family {
        Family::TcmCoh => Ok(field - 0.5 * omega_a * theta.cos()
            + gamma / (2.0 * n).sqrt() * theta.sin() * (q * phi.cos() - p * phi.sin())),
        Family::DickeCoh => Ok(field - 0.5 * omega_a * theta.cos() + SQRT_2 * gamma / n.sqrt() * q * theta.sin() * phi.cos()),
        Family::DickeSas(plus) => {
            let h = CoherentHamiltonian::from_spec(spec);
            Ok(h.sas_energy(&ProductCoherent::two_level(q, p, theta, phi), plus))
        }
        _ => Err(Error::InvalidParameter(format!("{family} is not a 2-level surface family"))),
    }
}

/// 𝓕 = x^{−2N} exp(−2Nγ_c²x²(1 − x^{−4})) evaluated in log space; 1 for x ≤ 1.
pub fn overlap_f(x: f64, gamma_c: f64, n_atoms: usize) -> f64 {
    if x <= 1.0 {
        return 1.0;
    }
    let n = n_atoms as f64;
    (-2.0 * n * x.ln() - 2.0 * n * gamma_c * gamma_c * x * x * (1.0 - x.powi(-4))).exp()
}

/// Closed-form Dicke SAS energy per particle at the coherent critical point,
/// as a function of x = γ/γ_c. For x ≤ 1 the x → 1 limits are returned.
pub fn dicke_sas_critical_energy(x: f64, gamma_c: f64, n_atoms: usize, plus: bool) -> f64 {
    let g2 = gamma_c * gamma_c;
    let n = n_atoms as f64;
    if x <= 1.0 {
        return if plus { -2.0 * g2 } else { -g2 * (2.0 - 4.0 / (n * (1.0 + 4.0 * g2))) };
    }
    let ln_f = -2.0 * n * x.ln() - 2.0 * n * g2 * x * x * (1.0 - x.powi(-4));
    let f = ln_f.exp();
    let u = 1.0 - x.powi(-4);
    // (1 ∓ F)/(1 ± F) with 1 − F computed without cancellation.
    let one_minus_f = -ln_f.exp_m1();
    let ratio = if plus { one_minus_f / (1.0 + f) } else { (1.0 + f) / one_minus_f };
    -g2 * x * x * (2.0 - u * ratio)
}

/// Coherent critical parameters of the Dicke model at resonance-free Ω = 1.
pub fn dicke_coherent_critical(spec: &ModelSpec) -> Result<Params> {
    check(Family::DickeCoh, spec)?;
    let (omega_a, gamma) = two_level_parts(spec);
    let gc = omega_a.max(0.0).sqrt() / 2.0;
    let x = if gc > 0.0 { gamma / gc } else { f64::INFINITY };
    if x <= 1.0 {
        return Ok(Params::TwoLevel { q: 0.0, p: 0.0, theta: 0.0, phi: 0.0 });
    }
    let c = (1.0 / (x * x)).min(1.0);
    let theta = c.acos();
    let q = -(2.0 * spec.n_atoms as f64).sqrt() * gamma * theta.sin();
    Ok(Params::TwoLevel { q, p: 0.0, theta, phi: 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcmRegion {
    NorthPole,
    SouthPole,
    Parallels,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TcmCritical {
    pub region: TcmRegion,
    pub theta_c: f64,
    pub q_c: f64,
    /// Energy per particle.
    pub energy: f64,
    pub lambda_c: f64,
}

fn require_unit_field(spec: &ModelSpec) -> Result<()> {
    if (spec.field_freq - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidSpec("closed forms assume field frequency 1".into()));
    }
    Ok(())
}

/// Critical region, angle, energy and classical λ of the TCM coherent surface.
pub fn tcm_critical_data(spec: &ModelSpec) -> Result<TcmCritical> {
    check(Family::TcmCoh, spec)?;
    require_unit_field(spec)?;
    let (w, g) = two_level_parts(spec);
    let n = spec.n_atoms as f64;
    let g2 = g * g;
    Ok(if w >= g2 {
        TcmCritical { region: TcmRegion::NorthPole, theta_c: 0.0, q_c: 0.0, energy: -w / 2.0, lambda_c: 0.0 }
    } else if w <= -g2 {
        TcmCritical { region: TcmRegion::SouthPole, theta_c: PI, q_c: 0.0, energy: w / 2.0, lambda_c: n }
    } else {
        let theta = (w / g2).acos();
        TcmCritical {
            region: TcmRegion::Parallels,
            theta_c: theta,
            q_c: -(n / 2.0).sqrt() * g * theta.sin(),
            energy: -(w * w + g2 * g2) / (4.0 * g2),
            lambda_c: n * (-w * (w + 2.0) + g2 * g2 + 2.0 * g2) / (4.0 * g2),
        }
    })
}

/// η = −(√N γ/2)(1 + ω_A/γ²).
pub fn tcm_eta(spec: &ModelSpec) -> f64 {
    let (w, g) = two_level_parts(spec);
    -((spec.n_atoms as f64).sqrt() * g / 2.0) * (1.0 + w / (g * g))
}

/// L^α_{n−1}(x) / L^α_n(x) by the forward ratio recurrence; stable for x ≤ 0.
pub fn laguerre_ratio(n: usize, alpha: f64, x: f64) -> f64 {
    let mut r = 0.0;
    for k in 0..n {
        let k = k as f64;
        r = (k + 1.0) / ((2.0 * k + 1.0 + alpha - x) - (k + alpha) * r);
    }
    r
}

/// Energy of the λ-projected TCM coherent state, per particle.
pub fn tcm_projected_energy(spec: &ModelSpec, lambda: usize, eta: f64) -> Result<f64> {
    check(Family::TcmProj, spec)?;
    require_unit_field(spec)?;
    let (w, g) = two_level_parts(spec);
    let delta = 1.0 - w;
    if lambda == 0 {
        return Ok(-(1.0 - delta) / 2.0);
    }
    let n2j = spec.n_atoms;
    let two_j = n2j as f64;
    let j = two_j / 2.0;
    let x = -eta * eta;
    let ratio = if lambda <= n2j {
        laguerre_ratio(lambda, (n2j - lambda) as f64, x)
    } else {
        lambda as f64 / two_j * laguerre_ratio(n2j, (lambda - n2j) as f64, x)
    };
    let l = lambda as f64;
    Ok((l - j + j * delta) / two_j - (delta - 2.0 * g * eta / two_j.sqrt()) * ratio)
}

/// Normalised coefficients of the λ-projected state over labels (ν, k = λ − ν).
pub fn tcm_projected_coefficients(n_atoms: usize, lambda: usize, eta: f64) -> Vec<(Label, f64)> {
    let nu_min = lambda.saturating_sub(n_atoms);
    let logs: Vec<(usize, f64)> = (nu_min..=lambda)
        .map(|nu| {
            let k = lambda - nu;
            let lc = ln_gamma(n_atoms as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n_atoms - k) as f64 + 1.0);
            let le = if nu == 0 { 0.0 } else { nu as f64 * eta.abs().ln() };
            (nu, 0.5 * lc + le - 0.5 * ln_gamma(nu as f64 + 1.0))
        })
        .collect();
    let top = logs.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<(Label, f64)> = logs
        .iter()
        .map(|&(nu, l)| {
            let sign = if eta < 0.0 && nu % 2 == 1 { -1.0 } else { 1.0 };
            (Label::two(nu, lambda - nu), sign * (l - top).exp())
        })
        .collect();
    let norm = out.iter().map(|x| x.1 * x.1).sum::<f64>().sqrt();
    out.iter_mut().for_each(|x| x.1 /= norm);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TcmProjected {
    pub lambda: usize,
    pub point: VariationalPoint,
    pub coefficients: Vec<(Label, f64)>,
}

/// Best λ-projected state among λ in a window around the classical λ_c.
pub fn tcm_projected_ground(spec: &ModelSpec) -> Result<TcmProjected> {
    let crit = tcm_critical_data(spec)?;
    let (w, _) = two_level_parts(spec);
    let n = spec.n_atoms;
    let build = |lambda: usize, eta: f64, energy: f64| TcmProjected {
        lambda,
        point: VariationalPoint { family: Family::TcmProj, params: Params::TcmProj { lambda, eta }, energy },
        coefficients: tcm_projected_coefficients(n, lambda, eta),
    };
    match crit.region {
        TcmRegion::NorthPole => return Ok(build(0, 0.0, tcm_projected_energy(spec, 0, 0.0)?)),
        // η = 0 puts all weight on |0⟩⊗|j, j⟩.
        TcmRegion::SouthPole => return Ok(build(n, 0.0, w / 2.0)),
        TcmRegion::Parallels => {}
    }
    let eta = tcm_eta(spec);
    let lo = (crit.lambda_c.floor() as i64 - 5).max(0) as usize;
    let hi = (crit.lambda_c.ceil() as i64 + 5).max(0) as usize;
    let mut best: Option<(usize, f64)> = None;
    for lambda in lo..=hi {
        let e = tcm_projected_energy(spec, lambda, eta)?;
        if !e.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite projected energy at lambda={lambda}")));
        }
        if best.is_none_or(|(_, b)| e < b) {
            best = Some((lambda, e));
        }
    }
    let (lambda, e) = best.expect("non-empty window");
    Ok(build(lambda, eta, e))
}

fn v_double_resonance(spec: &ModelSpec) -> Result<(f64, f64)> {
    let (omega, mu) = three_level_parts(spec);
    let ok = omega[0].abs() < 1e-12 && (omega[1] - 1.0).abs() < 1e-12 && (omega[2] - 1.0).abs() < 1e-12;
    if !ok || (spec.field_freq - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidSpec("V_SAS_PLUS requires ω = (0, 1, 1) and field frequency 1".into()));
    }
    Ok((mu[0].hypot(mu[1]), mu[1].atan2(mu[0])))
}

/// Energy per particle of a 3-level coherent or SAS trial state.
pub fn energy_surface_3level(spec: &ModelSpec, family: Family, params: &Params) -> Result<f64> {
    check(family, spec)?;
    let n = spec.n_atoms as f64;
    match (family, *params) {
        (Family::Rwa3Coh | Family::Full3Coh, Params::ThreeLevel { rho, phi, rho2, phi2, rho3, phi3 }) => {
            let (w, mu) = three_level_parts(spec);
            let diag = w[0] + w[1] * rho2 * rho2 + w[2] * rho3 * rho3;
            let coupling = if family == Family::Rwa3Coh {
                2.0 * rho
                    * (mu[0] * rho2 * (phi - phi2).cos()
                        + mu[1] * rho3 * (phi - phi3).cos()
                        + mu[2] * rho2 * rho3 * (phi + phi2 - phi3).cos())
            } else {
                4.0 * rho
                    * phi.cos()
                    * (mu[0] * rho2 * phi2.cos() + mu[1] * rho3 * phi3.cos() + mu[2] * rho2 * rho3 * (phi3 - phi2).cos())
            };
            Ok(spec.field_freq * rho * rho / n + (diag - coupling / n.sqrt()) / (1.0 + rho2 * rho2 + rho3 * rho3))
        }
        (Family::Full3Sas(plus), Params::ThreeLevel { .. }) => {
            let h = CoherentHamiltonian::from_spec(spec);
            Ok(h.sas_energy(&product_state(spec, params)?, plus))
        }
        (Family::VSasPlus, Params::VReduced { rho, xi, chi }) => {
            let (mu, _) = v_double_resonance(spec)?;
            if !(0.0..1.0).contains(&xi) || rho < 0.0 {
                return Err(Error::InvalidParameter("V_SAS_PLUS requires 0 ≤ ξ < 1 and ρ ≥ 0".into()));
            }
            Ok(v_sas_plus(spec.n_atoms, mu, rho, xi, chi))
        }
        _ => Err(Error::InvalidParameter(format!("{family} does not take these parameters"))),
    }
}

/// The V-configuration SAS(+) surface with its (1 − ξ²)^N and e^{2Nρ²}
/// factors combined into a single log-space ratio.
fn v_sas_plus(n_atoms: usize, mu: f64, rho: f64, xi: f64, chi: f64) -> f64 {
    let n = n_atoms as f64;
    let x2 = xi * xi;
    let r = (n * ((1.0 - x2) / (1.0 + x2)).ln() - 2.0 * n * rho * rho).exp();
    let num = -r * (1.0 + x2) * (-x2 + rho * rho * (x2 - 1.0))
        + (x2 - 1.0) * (x2 + rho * rho * (1.0 + x2) - 4.0 * rho * xi * mu * chi.cos());
    num / ((x2 * x2 - 1.0) * (1.0 + r))
}

/// Product coherent state described by a coherent or SAS point (before projection).
pub fn product_state(spec: &ModelSpec, params: &Params) -> Result<ProductCoherent> {
    match *params {
        Params::TwoLevel { q, p, theta, phi } => Ok(ProductCoherent::two_level(q, p, theta, phi)),
        Params::ThreeLevel { rho, phi, rho2, phi2, rho3, phi3 } => {
            Ok(ProductCoherent::three_level(rho, phi, rho2, phi2, rho3, phi3))
        }
        Params::VReduced { rho, xi, chi } => {
            let (_, theta) = v_double_resonance(spec)?;
            let eta = chi + theta;
            let alpha = rho * (spec.n_atoms as f64).sqrt();
            Ok(ProductCoherent::three_level(alpha, 0.0, xi * eta.cos(), 0.0, xi * eta.sin(), 0.0))
        }
        Params::TcmProj { .. } => Err(Error::InvalidParameter("projected TCM point is not a product state".into())),
    }
}

/// Surface value for any family.
pub fn energy_surface(spec: &ModelSpec, family: Family, params: &Params) -> Result<f64> {
    match family {
        Family::TcmCoh | Family::DickeCoh | Family::DickeSas(_) => energy_surface_2level(spec, family, params),
        Family::TcmProj => match *params {
            Params::TcmProj { lambda, eta } => tcm_projected_energy(spec, lambda, eta),
            _ => Err(Error::InvalidParameter("TCM_PROJ expects (lambda, eta)".into())),
        },
        _ => energy_surface_3level(spec, family, params),
    }
}

/// Free-parameter layout used by the minimiser for a family.
struct Layout {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

fn layout(spec: &ModelSpec, family: Family) -> Result<Layout> {
    let n = spec.n_atoms as f64;
    Ok(match family {
        Family::TcmCoh | Family::DickeCoh | Family::DickeSas(_) => {
            let (_, g) = two_level_parts(spec);
            let scale = if family == Family::TcmCoh { (n / 2.0).sqrt() } else { (2.0 * n).sqrt() };
            Layout { lo: vec![-(scale * g) - 2.0, -1.0, 0.0], hi: vec![2.0, 1.0, PI] }
        }
        Family::Rwa3Coh | Family::Full3Coh | Family::Full3Sas(_) => {
            let (_, mu) = three_level_parts(spec);
            let m = mu.iter().cloned().fold(0.0, f64::max);
            let f = if family == Family::Rwa3Coh { 1.0 } else { 2.0 };
            Layout { lo: vec![0.0, 0.0, 0.0], hi: vec![f * m * n.sqrt() + 2.0, FRAC_PI_2, FRAC_PI_2] }
        }
        Family::VSasPlus => {
            let (mu, _) = v_double_resonance(spec)?;
            Layout { lo: vec![0.0, 0.0], hi: vec![2.0 * mu + 1.0, 0.5 * PI] }
        }
        Family::TcmProj => return Err(Error::InvalidParameter("TCM_PROJ is minimised by tcm_projected_ground".into())),
    })
}

/// Map a free-parameter vector to surface parameters.
fn decode(family: Family, x: &[f64]) -> Params {
    match family {
        Family::TcmCoh | Family::DickeCoh | Family::DickeSas(_) => {
            // (q, p, θ) and (−q, −p, 2π − θ) are parity images with equal energy;
            // keep θ ∈ [0, π] so that neighbouring minima are comparable.
            let theta = x[2].rem_euclid(2.0 * PI);
            if theta > PI {
                Params::TwoLevel { q: -x[0], p: -x[1], theta: 2.0 * PI - theta, phi: 0.0 }
            } else {
                Params::TwoLevel { q: x[0], p: x[1], theta, phi: 0.0 }
            }
        }
        Family::VSasPlus => Params::VReduced { rho: x[0].abs(), xi: x[1].sin().abs(), chi: 0.0 },
        _ => {
            // Atomic state on the positive octant of the sphere: γ ∝ (cos a, sin a cos b, sin a sin b).
            let (sa, ca) = x[1].sin_cos();
            let (sb, cb) = x[2].sin_cos();
            let (g1, g2, g3) = (ca.abs(), (sa * cb).abs(), (sa * sb).abs());
            let g1 = g1.max(1e-300);
            Params::three_real(x[0].abs(), g2 / g1, g3 / g1)
        }
    }
}

/// Inverse of `decode` (for seeding from known parameters).
fn encode(family: Family, p: &Params) -> Option<Vec<f64>> {
    match (family, *p) {
        (Family::TcmCoh | Family::DickeCoh | Family::DickeSas(_), Params::TwoLevel { q, p, theta, .. }) => {
            Some(vec![q, p, theta])
        }
        (Family::VSasPlus, Params::VReduced { rho, xi, .. }) => Some(vec![rho, xi.min(1.0).asin()]),
        (Family::Rwa3Coh | Family::Full3Coh | Family::Full3Sas(_), Params::ThreeLevel { rho, rho2, rho3, .. }) => {
            let r = (rho2 * rho2 + rho3 * rho3).sqrt();
            Some(vec![rho, r.atan(), rho3.atan2(rho2)])
        }
        _ => None,
    }
}

fn objective(spec: &ModelSpec, family: Family, x: &[f64]) -> f64 {
    let p = decode(family, x);
    if let Params::VReduced { xi, .. } = p {
        if xi >= 1.0 - 1e-15 {
            return f64::INFINITY;
        }
    }
    energy_surface(spec, family, &p).unwrap_or(f64::INFINITY)
}

/// Default deterministic seeds: a rotated Halton set over the family's box plus
/// the origin and, for 2-level families, the coherent critical point.
pub fn default_seeds(spec: &ModelSpec, family: Family, count: usize, seed: u64) -> Result<Vec<Params>> {
    check(family, spec)?;
    let lay = layout(spec, family)?;
    let mut out: Vec<Params> = halton_points(&lay.lo, &lay.hi, count, seed).iter().map(|x| decode(family, x)).collect();
    out.push(decode(family, &vec![0.05; lay.lo.len()]));
    match family {
        Family::DickeCoh | Family::DickeSas(_) => out.push(dicke_coherent_critical(spec)?),
        Family::TcmCoh => {
            let c = tcm_critical_data(spec)?;
            out.push(Params::TwoLevel { q: c.q_c, p: 0.0, theta: c.theta_c, phi: 0.0 });
        }
        _ => {}
    }
    Ok(out)
}

fn nm_opts() -> NmOptions {
    NmOptions { ftol: 1e-13, xtol: 1e-9, max_evals: 20_000, restarts: 3 }
}

/// Local descent from one seed.
pub fn local_minimum(spec: &ModelSpec, family: Family, seed: &Params) -> Result<VariationalPoint> {
    check(family, spec)?;
    let x0 = encode(family, seed).ok_or_else(|| Error::InvalidParameter(format!("seed does not fit {family}")))?;
    let lay = layout(spec, family)?;
    let step: Vec<f64> = lay.lo.iter().zip(&lay.hi).map(|(a, b)| 0.05 * (b - a)).collect();
    let r = nelder_mead(|x| objective(spec, family, x), &x0, &step, &nm_opts());
    if !r.f.is_finite() {
        return Err(Error::Minimisation(format!("{family}: descent diverged")));
    }
    Ok(VariationalPoint { family, params: decode(family, &r.x), energy: r.f })
}

/// All local minima from the seeds whose energy is within 1e-8 of the best,
/// distinct in parameters, best first.
pub fn minimize_energy_all(spec: &ModelSpec, family: Family, seeds: &[Params]) -> Result<Vec<VariationalPoint>> {
    if seeds.is_empty() {
        return Err(Error::Minimisation("at least one seed is required".into()));
    }
    let mut found: Vec<VariationalPoint> =
        seeds.par_iter().filter_map(|s| local_minimum(spec, family, s).ok()).collect();
    if found.is_empty() {
        return Err(Error::Minimisation(format!("{family}: all seeds diverged")));
    }
    found.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    let best = found[0].energy;
    let mut out: Vec<VariationalPoint> = Vec::new();
    for p in found.into_iter().filter(|p| p.energy - best <= 1e-8) {
        let fp = p.params.fields();
        let dup = out.iter().any(|o| {
            o.params.fields().iter().zip(&fp).all(|(a, b)| (a.1 - b.1).abs() <= 1e-4 * (1.0 + a.1.abs()))
        });
        if !dup {
            out.push(p);
        }
    }
    Ok(out)
}

pub fn minimize_energy(spec: &ModelSpec, family: Family, seeds: &[Params]) -> Result<VariationalPoint> {
    Ok(minimize_energy_all(spec, family, seeds)?.swap_remove(0))
}

/// Minimum with the default seed set (20 points derived from `seed`).
pub fn minimize_default(spec: &ModelSpec, family: Family, seed: u64) -> Result<VariationalPoint> {
    if family == Family::TcmProj {
        return Ok(tcm_projected_ground(spec)?.point);
    }
    let seeds = default_seeds(spec, family, 20, seed)?;
    minimize_energy(spec, family, &seeds)
}

/// Log-amplitude and phase of a product coherent state on one basis label
/// (including the (−1)^{n₃} phase of the 3-level basis).
fn coherent_amplitude(spec: &ModelSpec, s: &ProductCoherent, l: &Label) -> C64 {
    let n = spec.n_atoms;
    let occ: Vec<usize> = if spec.kind.is_two_level() { vec![n - l.a, l.a] } else { l.occupations(n).to_vec() };
    let mut log = -0.5 * s.alpha.norm_sqr() - 0.5 * ln_gamma(l.nu as f64 + 1.0) + 0.5 * ln_gamma(n as f64 + 1.0);
    let mut phase = 0.0;
    if l.nu > 0 {
        log += l.nu as f64 * s.alpha.norm().ln();
        phase += l.nu as f64 * s.alpha.arg();
    }
    for (k, &m) in occ.iter().enumerate() {
        log -= 0.5 * ln_gamma(m as f64 + 1.0);
        if m > 0 {
            log += m as f64 * s.gamma[k].norm().ln();
            phase += m as f64 * s.gamma[k].arg();
        }
    }
    if !spec.kind.is_two_level() && occ[2] % 2 == 1 {
        phase += PI;
    }
    if log == f64::NEG_INFINITY {
        C64::new(0.0, 0.0)
    } else {
        C64::from_polar(log.exp(), phase)
    }
}

fn finish(amps: Vec<C64>, expected: f64, basis: &Basis) -> Result<StateVector> {
    let kept = amps.iter().map(|a| a.norm_sqr()).sum::<f64>();
    let frac = kept / expected;
    if !(frac >= 1.0 - 1e-10) {
        return Err(Error::Truncation { kept: frac });
    }
    StateVector::new(amps, basis.id)
}

/// Amplitudes of a variational state in a basis. SAS families are built by
/// parity projection of the embedded coherent state.
pub fn embed_variational_state(point: &VariationalPoint, basis: &Basis) -> Result<StateVector> {
    let spec = &basis.spec;
    check(point.family, spec)?;
    if let Params::TcmProj { lambda, eta } = point.params {
        let coeffs = tcm_projected_coefficients(spec.n_atoms, lambda, eta);
        let mut amps = vec![C64::new(0.0, 0.0); basis.dim()];
        for (l, c) in coeffs {
            match basis.index_of(&l) {
                Some(i) => amps[i] = C64::new(c, 0.0),
                None if c.abs() > 1e-12 => return Err(Error::Truncation { kept: 0.0 }),
                None => {}
            }
        }
        return finish(amps, 1.0, basis);
    }
    let s = product_state(spec, &point.params)?;
    embed_product(&s, point.family.projection(), basis)
}

/// Embed a product coherent state, optionally parity projected (`Some(true)`
/// for even), into a basis of its model.
pub fn embed_product(s: &ProductCoherent, projection: Option<bool>, basis: &Basis) -> Result<StateVector> {
    let spec = &basis.spec;
    let mut amps: Vec<C64> = basis.labels.iter().map(|l| coherent_amplitude(spec, s, l)).collect();
    let expected = match projection {
        None => 1.0,
        Some(plus) => {
            let want = if plus { 0 } else { 1 };
            for (a, l) in amps.iter_mut().zip(&basis.labels) {
                if excitation(spec, l) % 2 != want {
                    *a = C64::new(0.0, 0.0);
                }
            }
            let h = CoherentHamiltonian::from_spec(spec);
            let sg = if plus { 1.0 } else { -1.0 };
            0.5 * (1.0 + sg * h.parity_overlap(s))
        }
    };
    finish(amps, expected, basis)
}

/// Projection of a 3-level RWA coherent state onto one M block: the photon
/// number of each label is fixed to ν = M − λ₂n₂ − λ₃n₃.
pub fn embed_projected_m(spec: &ModelSpec, params: &Params, basis: &Basis) -> Result<StateVector> {
    check(Family::Rwa3Coh, spec)?;
    if !matches!(basis.sector.sector, Sector::M(_)) {
        return Err(Error::BasisMismatch("M projection needs an M-block basis".into()));
    }
    let s = product_state(spec, params)?;
    let amps: Vec<C64> = basis.labels.iter().map(|l| coherent_amplitude(spec, &s, l)).collect();
    StateVector::new(amps, basis.id)
}

/// Lowest energy (per particle) of the M-projected coherent state in block M,
/// minimised over (ρ₂, ρ₃) with α = 1 (α only rescales the atomic amplitudes).
pub fn rwa3_projected_ground(spec: &ModelSpec, m: usize, seed: u64) -> Result<(VariationalPoint, StateVector)> {
    let (basis, h) = crate::spectra::build(spec, crate::basis::SectorSpec::m(m))?;
    let energy_at = |x: &[f64]| -> f64 {
        let p = Params::three_real(1.0, x[0].abs(), x[1].abs());
        match embed_projected_m(spec, &p, &basis) {
            Ok(sv) => spec.per_particle(sv.expect(&h).map(|e| e.re).unwrap_or(f64::INFINITY)),
            Err(_) => f64::INFINITY,
        }
    };
    let lo = [0.0, 0.0];
    let hi = [3.0, 3.0];
    let mut seeds = halton_points(&lo, &hi, 12, seed);
    seeds.push(vec![0.5, 0.5]);
    let best = seeds
        .par_iter()
        .map(|x0| nelder_mead(energy_at, x0, &[0.2, 0.2], &nm_opts()))
        .min_by(|a, b| a.f.total_cmp(&b.f))
        .expect("seeds");
    if !best.f.is_finite() {
        return Err(Error::Minimisation(format!("projected M={m} descent diverged")));
    }
    let params = Params::three_real(1.0, best.x[0].abs(), best.x[1].abs());
    let sv = embed_projected_m(spec, &params, &basis)?;
    Ok((VariationalPoint { family: Family::Rwa3Coh, params, energy: best.f }, sv))
}

/// Configuration-dependent (λ₂, λ₃) of a 3-level spec.
pub fn lambdas(spec: &ModelSpec) -> Option<(usize, usize)> {
    spec.kind.configuration().map(Configuration::lambdas)
}
