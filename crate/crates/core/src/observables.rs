//! Expectation values and fluctuations: numeric on any state, closed form for
//! the coherent and parity-adapted critical states.

use crate::basis::{Basis, Label};
use crate::error::{Error, Result};
use crate::model::{ModelKind, ModelSpec};
use crate::operator::{operator_matrix, OpId, OperatorMatrix};
use crate::state::StateVector;
use crate::variational::{dicke_coherent_critical, embed_product, overlap_f, product_state, tcm_critical_data, Params};
use num_complex::Complex64 as C64;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObservableId {
    Q,
    P,
    Jx,
    Jy,
    Jz,
    NPh,
    Lambda,
    VarQ,
    VarP,
    VarJx,
    VarJy,
    VarJz,
    VarNPh,
    VarLambda,
    JzNPhCorr,
    JxQCorr,
    A11,
    A22,
    A33,
    AtomicExcitation,
}

impl ObservableId {
    pub const ALL: [ObservableId; 20] = [
        ObservableId::Q,
        ObservableId::P,
        ObservableId::Jx,
        ObservableId::Jy,
        ObservableId::Jz,
        ObservableId::NPh,
        ObservableId::Lambda,
        ObservableId::VarQ,
        ObservableId::VarP,
        ObservableId::VarJx,
        ObservableId::VarJy,
        ObservableId::VarJz,
        ObservableId::VarNPh,
        ObservableId::VarLambda,
        ObservableId::JzNPhCorr,
        ObservableId::JxQCorr,
        ObservableId::A11,
        ObservableId::A22,
        ObservableId::A33,
        ObservableId::AtomicExcitation,
    ];

    /// Rows that appear in the closed-form table.
    pub const TABLE: [ObservableId; 16] = [
        ObservableId::Q,
        ObservableId::P,
        ObservableId::Jx,
        ObservableId::Jy,
        ObservableId::Jz,
        ObservableId::NPh,
        ObservableId::Lambda,
        ObservableId::VarQ,
        ObservableId::VarP,
        ObservableId::VarJx,
        ObservableId::VarJy,
        ObservableId::VarJz,
        ObservableId::VarNPh,
        ObservableId::VarLambda,
        ObservableId::JzNPhCorr,
        ObservableId::JxQCorr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ObservableId::Q => "q",
            ObservableId::P => "p",
            ObservableId::Jx => "J_x",
            ObservableId::Jy => "J_y",
            ObservableId::Jz => "J_z",
            ObservableId::NPh => "n_ph",
            ObservableId::Lambda => "Lambda",
            ObservableId::VarQ => "var_q",
            ObservableId::VarP => "var_p",
            ObservableId::VarJx => "var_Jx",
            ObservableId::VarJy => "var_Jy",
            ObservableId::VarJz => "var_Jz",
            ObservableId::VarNPh => "var_nph",
            ObservableId::VarLambda => "var_Lambda",
            ObservableId::JzNPhCorr => "Jz_nph_corr",
            ObservableId::JxQCorr => "Jx_q_corr",
            ObservableId::A11 => "A_11",
            ObservableId::A22 => "A_22",
            ObservableId::A33 => "A_33",
            ObservableId::AtomicExcitation => "atomic_excitation",
        }
    }

    pub fn parse(s: &str) -> Option<ObservableId> {
        Self::ALL.into_iter().find(|o| o.name().eq_ignore_ascii_case(s.trim()))
    }

    /// Mean rows: operator whose expectation is the value. Variance rows: the
    /// operator whose fluctuation is the value.
    fn operator(self) -> Option<(OpId, bool)> {
        Some(match self {
            ObservableId::Q => (OpId::Q, false),
            ObservableId::P => (OpId::P, false),
            ObservableId::Jx => (OpId::Jx, false),
            ObservableId::Jy => (OpId::Jy, false),
            ObservableId::Jz => (OpId::Jz, false),
            ObservableId::NPh => (OpId::NPh, false),
            ObservableId::Lambda => (OpId::LambdaHat, false),
            ObservableId::VarQ => (OpId::Q, true),
            ObservableId::VarP => (OpId::P, true),
            ObservableId::VarJx => (OpId::Jx, true),
            ObservableId::VarJy => (OpId::Jy, true),
            ObservableId::VarJz => (OpId::Jz, true),
            ObservableId::VarNPh => (OpId::NPh, true),
            ObservableId::VarLambda => (OpId::LambdaHat, true),
            ObservableId::A11 => (OpId::Aij(1, 1), false),
            ObservableId::A22 => (OpId::Aij(2, 2), false),
            ObservableId::A33 => (OpId::Aij(3, 3), false),
            _ => return None,
        })
    }
}

impl fmt::Display for ObservableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateFamily {
    Quantum,
    Coherent,
    SasPlus,
    SasMinus,
}

impl StateFamily {
    pub fn name(self) -> &'static str {
        match self {
            StateFamily::Quantum => "QUANTUM",
            StateFamily::Coherent => "COHERENT",
            StateFamily::SasPlus => "SAS_PLUS",
            StateFamily::SasMinus => "SAS_MINUS",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableReport {
    pub observable_id: ObservableId,
    pub value: f64,
    pub family: StateFamily,
}

/// Two-level model selector for the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableModel {
    Dicke,
    Tcm,
}

/// (⟨O⟩, ⟨O²⟩ − ⟨O⟩²) for a Hermitian operator.
pub fn expectation_and_fluctuation(state: &StateVector, op: &OperatorMatrix) -> Result<(f64, f64)> {
    if op.basis_id != state.basis_id || op.dim != state.dim() {
        return Err(Error::BasisMismatch("operator and state live on different bases".into()));
    }
    let y = op.apply(&state.amplitudes);
    let mean: C64 = state.amplitudes.iter().zip(&y).map(|(a, b)| a.conj() * b).sum();
    let sq: f64 = y.iter().map(|v| v.norm_sqr()).sum();
    Ok((mean.re, (sq - mean.re * mean.re).max(0.0)))
}

/// Numeric value of a table row (or population) on an explicit state.
pub fn quantum_observable(state: &StateVector, basis: &Basis, id: ObservableId) -> Result<f64> {
    if state.basis_id != basis.id {
        return Err(Error::BasisMismatch("state does not belong to the basis".into()));
    }
    match id {
        ObservableId::JzNPhCorr | ObservableId::JxQCorr => {
            let (a, b) = if id == ObservableId::JzNPhCorr { (OpId::Jz, OpId::NPh) } else { (OpId::Jx, OpId::Q) };
            let prod = operator_matrix(a, basis)?.matmul(&operator_matrix(b, basis)?);
            Ok(state.expect(&prod)?.re)
        }
        ObservableId::AtomicExcitation => {
            let (l2, l3) = basis
                .spec
                .kind
                .configuration()
                .map(|c| c.lambdas())
                .ok_or_else(|| Error::OperatorUndefined { op: id.name().into(), kind: basis.spec.kind.to_string() })?;
            let a22 = state.expect(&operator_matrix(OpId::Aij(2, 2), basis)?)?.re;
            let a33 = state.expect(&operator_matrix(OpId::Aij(3, 3), basis)?)?.re;
            Ok(l2 as f64 * a22 + l3 as f64 * a33)
        }
        _ => {
            let (op, var) = id.operator().expect("plain operator row");
            let (m, v) = expectation_and_fluctuation(state, &operator_matrix(op, basis)?)?;
            Ok(if var { v } else { m })
        }
    }
}

/// Closed-form value of a table row at the critical point of the coherent or
/// parity-adapted state, as a function of x = γ/γ_c. For the TCM, `gamma_c`
/// is the TCM critical coupling and is halved before evaluation.
pub fn closed_form_observable(
    family: StateFamily,
    id: ObservableId,
    x: f64,
    gamma_c: f64,
    n_atoms: usize,
    model: TableModel,
) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::InvalidParameter("x must be positive".into()));
    }
    if !ObservableId::TABLE.contains(&id) {
        return Err(Error::InvalidParameter(format!("{id} has no closed-form row")));
    }
    let gc = if model == TableModel::Tcm { gamma_c / 2.0 } else { gamma_c };
    let n = n_atoms as f64;
    let g2 = gc * gc;
    match family {
        StateFamily::Quantum => Err(Error::InvalidParameter("no closed form for the quantum state".into())),
        StateFamily::Coherent => Ok(coherent_row(id, x.max(1.0), gc, n)),
        StateFamily::SasPlus | StateFamily::SasMinus => {
            let s = if family == StateFamily::SasPlus { 1.0 } else { -1.0 };
            if x <= 1.0 && s < 0.0 {
                return Ok(odd_limit_row(id, gc, n));
            }
            let x = x.max(1.0);
            let f = overlap_f(x, gc, n_atoms);
            Ok(sas_row(id, x, g2, gc, n, s, f))
        }
    }
}

fn coherent_row(id: ObservableId, x: f64, gc: f64, n: f64) -> f64 {
    let g2 = gc * gc;
    let x2 = x * x;
    let u = 1.0 - x.powi(-4);
    use ObservableId::*;
    match id {
        Q => -(2.0 * n).sqrt() * gc * x * u.sqrt(),
        P | Jy => 0.0,
        Jx => n / 2.0 * u.sqrt(),
        Jz => -n / 2.0 / x2,
        NPh => n * g2 * x2 * u,
        Lambda => n / 2.0 * (1.0 - 1.0 / x2 + 2.0 * g2 * x2 * u),
        VarQ | VarP => 0.5,
        VarJx => n / 4.0 * x.powi(-4),
        VarJy => n / 4.0,
        VarJz => n / 4.0 * u,
        VarNPh => n * g2 * x2 * u,
        JzNPhCorr => -n * n / 2.0 * g2 * u,
        JxQCorr => -(n.powi(3) / 2.0).sqrt() * gc * x * u,
        VarLambda => n * u / 4.0 * (1.0 + 4.0 * g2 * x2),
        _ => unreachable!("filtered by TABLE"),
    }
}

fn sas_row(id: ObservableId, x: f64, g2: f64, gc: f64, n: f64, s: f64, f: f64) -> f64 {
    let x2 = x * x;
    let x4 = x2 * x2;
    let u = 1.0 - 1.0 / x4;
    let d = 1.0 + s * f;
    use ObservableId::*;
    match id {
        Q | P | Jx | Jy => 0.0,
        Jz => -n / 2.0 * x2 * (1.0 - u / d),
        NPh => n * g2 * x2 * u * (1.0 - s * f) / d,
        Lambda => {
            n / 2.0 * ((1.0 - 1.0 / x2) / d) * (1.0 + 2.0 * g2 * (1.0 + x2) - s * (x2 + 2.0 * g2 * (1.0 + x2)) * f)
        }
        VarQ => 0.5 + 2.0 * n * g2 * x2 * u / d,
        VarP => 0.5 - s * 2.0 * n * g2 * x2 * u * f / d,
        VarJx => n / 4.0 * (1.0 + (n - 1.0) * u / d),
        VarJy => n / 4.0 * (1.0 + s * (n - 1.0) * (1.0 - x4) * f / d),
        VarJz => n / 4.0 * u / (d * d) * (1.0 - s * (n - 1.0) * (1.0 - x4) * f - x4 * f * f),
        VarNPh => n * g2 * x2 * u / d * (1.0 - s * f + s * 4.0 * n * g2 * x2 * u * f / d),
        JzNPhCorr => -n * n / 2.0 * g2 * x4 * u * (1.0 / x4 - s * f) / d,
        JxQCorr => -(n.powi(3) / 2.0).sqrt() * gc * x * u / d,
        VarLambda => {
            let k = 1.0 + 4.0 * g2;
            n * u / (4.0 * d * d)
                * (1.0 + 4.0 * x2 * g2 + s * f * (1.0 - x4) * (1.0 - n * k * k) - x2 * f * f * (x2 + 4.0 * g2))
        }
        _ => unreachable!("filtered by TABLE"),
    }
}

/// Odd-parity state reached as x → 1⁺: (−2γ_c|1; −j⟩ + |0; −j+1⟩)/√(1+4γ_c²).
fn odd_limit_row(id: ObservableId, gc: f64, n: f64) -> f64 {
    let g2 = gc * gc;
    let k = 1.0 + 4.0 * g2;
    use ObservableId::*;
    match id {
        Q | P | Jx | Jy => 0.0,
        Jz => -n / 2.0 + 1.0 / k,
        NPh => 4.0 * g2 / k,
        Lambda => 1.0,
        VarQ | VarP => 0.5 + 4.0 * g2 / k,
        VarJx | VarJy => n / 4.0 + (n - 1.0) / (2.0 * k),
        VarJz | VarNPh => 4.0 * g2 / (k * k),
        JzNPhCorr => -2.0 * n * g2 / k,
        JxQCorr => -(2.0 * n).sqrt() * gc / k,
        VarLambda => 0.0,
        _ => unreachable!("filtered by TABLE"),
    }
}

/// (|⟨coh|sas₊⟩|², |⟨coh|sas₋⟩|²) = ((1 + 𝓕)/2, (1 − 𝓕)/2).
pub fn coherent_sas_overlap(x: f64, gamma_c: f64, n_atoms: usize) -> (f64, f64) {
    let f = overlap_f(x, gamma_c, n_atoms);
    ((1.0 + f) / 2.0, (1.0 - f) / 2.0)
}

/// Atomic excitation ratio ⟨λ₂A₂₂ + λ₃A₃₃⟩/⟨A₁₁⟩ and field ratio ⟨N_ph⟩/N_A.
pub fn normal_criterion(state: &StateVector, basis: &Basis) -> Result<(f64, f64)> {
    let spec: &ModelSpec = &basis.spec;
    if spec.kind.is_two_level() {
        return Err(Error::OperatorUndefined { op: "normal criterion".into(), kind: spec.kind.to_string() });
    }
    let a11 = quantum_observable(state, basis, ObservableId::A11)?;
    if a11.abs() < 1e-300 {
        return Err(Error::InvalidParameter("⟨A_11⟩ vanishes; the atomic ratio is undefined".into()));
    }
    let exc = quantum_observable(state, basis, ObservableId::AtomicExcitation)?;
    let nph = quantum_observable(state, basis, ObservableId::NPh)?;
    Ok((exc / a11, nph / spec.n_atoms as f64))
}

/// Whether the two ratios agree within a relative tolerance.
pub fn is_normal(ratios: (f64, f64), rel_tol: f64) -> bool {
    let (a, f) = ratios;
    (a - f).abs() <= rel_tol * a.abs().max(f.abs()).max(1e-300) || (a == 0.0 && f == 0.0)
}

/// Critical coupling γ_c of a resonant-form 2-level spec: √ω_A/2 (Dicke) or √ω_A (TCM).
pub fn two_level_gamma_c(spec: &ModelSpec) -> Result<f64> {
    let w = spec.omega_a().ok_or_else(|| Error::InvalidSpec("2-level model required".into()))?;
    if !(w > 0.0) {
        return Err(Error::InvalidSpec("critical coupling needs ω_A > 0".into()));
    }
    Ok(if spec.kind == ModelKind::Tcm { w.sqrt() } else { w.sqrt() / 2.0 })
}

/// The state a table column describes, at the spec's x = γ/γ_c, embedded in `basis`.
pub fn table_state(family: StateFamily, basis: &Basis) -> Result<StateVector> {
    let spec = &basis.spec;
    let params = match spec.kind {
        ModelKind::Dicke => dicke_coherent_critical(spec)?,
        ModelKind::Tcm => {
            let c = tcm_critical_data(spec)?;
            Params::TwoLevel { q: c.q_c, p: 0.0, theta: c.theta_c, phi: 0.0 }
        }
        _ => return Err(Error::InvalidSpec("table states exist for 2-level models only".into())),
    };
    let x = spec.gamma().unwrap_or(0.0) / two_level_gamma_c(spec)?;
    let s = product_state(spec, &params)?;
    match family {
        StateFamily::Quantum => Err(Error::InvalidParameter("quantum states come from diagonalisation".into())),
        StateFamily::Coherent => embed_product(&s, None, basis),
        StateFamily::SasPlus => embed_product(&s, Some(true), basis),
        StateFamily::SasMinus if x > 1.0 => embed_product(&s, Some(false), basis),
        StateFamily::SasMinus => {
            let gc = two_level_gamma_c(spec)? / if spec.kind == ModelKind::Tcm { 2.0 } else { 1.0 };
            let mut amps = vec![C64::new(0.0, 0.0); basis.dim()];
            for (l, c) in [(Label::two(1, 0), -2.0 * gc), (Label::two(0, 1), 1.0)] {
                let i = basis.index_of(&l).ok_or(Error::Truncation { kept: 0.0 })?;
                amps[i] = C64::new(c, 0.0);
            }
            StateVector::new(amps, basis.id)
        }
    }
}
