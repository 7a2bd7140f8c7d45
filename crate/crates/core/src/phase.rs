//! Separatrices, fidelity susceptibility, transition location and
//! finite-size exponent fits.

use crate::basis::{Basis, Label, Sector, SectorSpec};
use crate::coherent::{CoherentHamiltonian, ProductCoherent};
use crate::error::{Error, Result};
use crate::model::{ModelKind, ModelSpec, Param};
use crate::spectra::{
    block_label, build, converged_ground_with, lowest_eigenpairs_with, GroundOptions, ParamPath, SolverOptions,
};
use crate::state::StateVector;
use crate::variational::{
    dicke_coherent_critical, energy_surface, local_minimum, minimize_default, product_state, rwa3_projected_ground,
    tcm_critical_data, tcm_eta, tcm_projected_energy, tcm_projected_ground, Family, Params, VariationalPoint,
};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};
use std::collections::HashMap;
use std::fmt;

/// Analytic separatrix. For 3-level kinds the abscissa is μ₂₃ (Ξ, Λ) or μ₁₂ (V)
/// and the ordinate μ₁₂ (Ξ) or μ₁₃ (Λ, V); FULL kinds use halved couplings.
/// For 2-level kinds the abscissa is ω_A and the ordinate γ (field frequency 1).
pub fn separatrix_ordinate(kind: ModelKind, omega21: f64, omega31: f64, abscissa: f64) -> Result<Option<f64>> {
    let sqrt_or_none = |v: f64| if v >= 0.0 { Some(v.sqrt()) } else { None };
    match kind {
        ModelKind::Tcm => return Ok(Some(abscissa.abs().sqrt())),
        ModelKind::Dicke => return Ok(sqrt_or_none(abscissa).map(|s| s / 2.0)),
        _ => {}
    }
    if !(omega21 > 0.0 && omega31 > 0.0) || !omega21.is_finite() || !omega31.is_finite() {
        return Err(Error::InvalidParameter(format!("separatrix needs positive frequencies, got ω21={omega21}, ω31={omega31}")));
    }
    let scale = if kind.is_rwa() { 1.0 } else { 0.5 };
    let a = abscissa / scale;
    // Heaviside with Θ(0) = 0.
    let shifted = |s: f64| {
        let d = a.abs() - s;
        if d > 0.0 {
            d * d
        } else {
            0.0
        }
    };
    let y = match kind.configuration().expect("3-level kind") {
        crate::model::Configuration::Xi => sqrt_or_none(omega21 - shifted(omega31.sqrt())),
        crate::model::Configuration::Lambda => sqrt_or_none(omega31 - shifted(omega21.sqrt())),
        crate::model::Configuration::V => sqrt_or_none(omega31 * (1.0 - a * a / omega21)),
    };
    Ok(y.map(|v| v * scale))
}

/// Sampled separatrix, skipping abscissas without a real solution.
pub fn separatrix_polyline(
    kind: ModelKind,
    omega21: f64,
    omega31: f64,
    lo: f64,
    hi: f64,
    samples: usize,
) -> Result<Vec<(f64, f64)>> {
    if samples < 2 {
        return Err(Error::InvalidParameter("a polyline needs at least 2 samples".into()));
    }
    let mut out = Vec::new();
    for i in 0..samples {
        let x = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
        if let Some(y) = separatrix_ordinate(kind, omega21, omega31, x)? {
            out.push((x, y));
        }
    }
    Ok(out)
}

/// (F, χ) between consecutive states: F = |⟨ψᵢ|ψᵢ₊₁⟩|², χ = 2(1 − F)/δτ².
pub fn fidelity_and_susceptibility(states: &[StateVector], delta_tau: f64) -> Result<Vec<(f64, f64)>> {
    if !(delta_tau != 0.0 && delta_tau.is_finite()) {
        return Err(Error::InvalidParameter("δτ must be finite and non-zero".into()));
    }
    states
        .windows(2)
        .map(|w| {
            let f = w[0].fidelity(&w[1])?.clamp(0.0, 1.0);
            Ok((f, susceptibility(f, delta_tau)))
        })
        .collect()
}

fn susceptibility(f: f64, delta_tau: f64) -> f64 {
    2.0 * (1.0 - f.clamp(0.0, 1.0)) / (delta_tau * delta_tau)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Exact ground states.
    Quantum,
    /// Unprojected coherent states.
    Coherent,
    /// Parity-projected states (λ- or M-projected for RWA models).
    Sas,
    /// λ- or M-projected states (parity-projected for non-RWA models).
    Projected,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Quantum => "QUANTUM",
            Method::Coherent => "COHERENT",
            Method::Sas => "SAS",
            Method::Projected => "PROJECTED",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        [Method::Quantum, Method::Coherent, Method::Sas, Method::Projected]
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    First,
    Second,
}

impl Order {
    pub fn name(self) -> &'static str {
        match self {
            Order::First => "FIRST",
            Order::Second => "SECOND",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub tau_c: f64,
    pub order: Order,
    pub chi_peak: f64,
    /// Change of λ or M across the transition, when the ground states carry one.
    pub delta_label: Option<i64>,
    /// Other peak positions of equal height (ambiguous peaks).
    pub alternatives: Vec<f64>,
}

/// One coarse sample of a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub tau: f64,
    /// Ground energy per particle for the method.
    pub energy: f64,
    /// χ between this sample and the next (None for the last sample).
    pub chi: Option<f64>,
    pub label: Option<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionReport {
    pub path: ParamPath,
    pub method: Method,
    pub transitions: Vec<Transition>,
    /// τ of the first transition.
    pub critical_coupling: Option<f64>,
    /// critical coupling / thermodynamic-limit γ_c, for γ paths of 2-level models.
    pub x: Option<f64>,
    pub samples: Vec<PathSample>,
}

#[derive(Debug, Clone)]
pub struct LocateOptions {
    /// Fidelity step of the refinement and final precision of τ_c.
    pub delta_tau: f64,
    pub method: Method,
    /// Largest λ or M block considered; default 3N + 10.
    pub block_cap: Option<usize>,
    /// Fixed Fock cutoff for parity sectors; default from cutoff convergence at the path ends.
    pub fock_cutoff: Option<usize>,
    pub seed: u64,
    /// Peaks must exceed this multiple of the median χ.
    pub prominence: f64,
}

impl LocateOptions {
    pub fn new(delta_tau: f64, method: Method) -> Self {
        LocateOptions { delta_tau, method, block_cap: None, fock_cutoff: None, seed: 0, prominence: 10.0 }
    }
}

/// Step used to compare one-sided energy slopes when classifying the order.
const ORDER_STEP: f64 = 1e-4;
/// |ΔE′| above this (per unit coupling, energies per particle) is a first-order jump.
const ORDER_THRESHOLD: f64 = 1e-3;
/// Neighbouring samples with F below this are treated as a discontinuity.
const JUMP_FIDELITY: f64 = 0.5;

/// What fixes the ground state on one side of a discontinuity.
#[derive(Debug, Clone)]
enum Branch {
    Sector(SectorSpec),
    Var(Family, Params),
    TcmLambda(usize),
    RwaM(usize),
}

#[derive(Debug, Clone)]
enum Repr {
    Vector(StateVector),
    Product(ProductCoherent, Option<bool>),
    TcmProj(usize, Vec<(Label, f64)>),
}

#[derive(Debug, Clone)]
struct Sample {
    energy: f64,
    repr: Repr,
    branch: Branch,
    label: Option<i64>,
}

struct Ctx {
    template: ModelSpec,
    method: Method,
    cap: usize,
    cutoff: usize,
    seed: u64,
    coh: CoherentHamiltonian,
}

fn variational_family(spec: &ModelSpec, method: Method) -> Option<Family> {
    let rwa3 = !spec.kind.is_two_level() && spec.kind.is_rwa();
    match (spec.kind, method) {
        (_, Method::Quantum) => None,
        (ModelKind::Tcm, Method::Coherent) => Some(Family::TcmCoh),
        (ModelKind::Tcm, _) => Some(Family::TcmProj),
        (ModelKind::Dicke, Method::Coherent) => Some(Family::DickeCoh),
        (ModelKind::Dicke, _) => Some(Family::DickeSas(true)),
        (_, Method::Coherent) if rwa3 => Some(Family::Rwa3Coh),
        // Projected RWA states are handled block by block.
        _ if rwa3 => None,
        (_, Method::Coherent) => Some(Family::Full3Coh),
        (ModelKind::VFull, _) if v_reduced_applies(spec) => Some(Family::VSasPlus),
        _ => Some(Family::Full3Sas(true)),
    }
}

fn v_reduced_applies(spec: &ModelSpec) -> bool {
    let w = spec.omega().unwrap_or([f64::NAN; 3]);
    w[0] == 0.0 && w[1] == 1.0 && w[2] == 1.0 && spec.field_freq == 1.0
}

fn label_of(sector: &SectorSpec) -> Option<i64> {
    match sector.sector {
        Sector::Parity(_) | Sector::Full => None,
        _ => block_label(sector).map(|l| l as i64),
    }
}

fn scan_solver() -> SolverOptions {
    SolverOptions { tol: 1e-11, dense_threshold: 300, complete_multiplet: false, ..Default::default() }
}

fn lowest_in(spec: &ModelSpec, sector: SectorSpec) -> Result<crate::spectra::EigenResult> {
    let (_, h) = build(spec, sector)?;
    lowest_eigenpairs_with(&h, 1, &scan_solver())
}

fn quantum_sample(ctx: &Ctx, spec: &ModelSpec) -> Result<Sample> {
    let sectors: Vec<SectorSpec> = if spec.kind == ModelKind::Tcm {
        (0..=ctx.cap).map(SectorSpec::lambda).collect()
    } else if !spec.kind.is_two_level() && spec.kind.is_rwa() {
        (0..=ctx.cap).map(SectorSpec::m).collect()
    } else if spec.kind == ModelKind::Dicke {
        // The Dicke ground state is always parity-even.
        vec![SectorSpec::parity(true, ctx.cutoff)]
    } else {
        vec![SectorSpec::parity(true, ctx.cutoff), SectorSpec::parity(false, ctx.cutoff)]
    };
    let solved = sectors.par_iter().map(|&sec| lowest_in(spec, sec).map(|r| (sec, r))).collect::<Result<Vec<_>>>()?;
    let mut best: Option<(SectorSpec, crate::spectra::EigenResult)> = None;
    for (sec, r) in solved {
        if best.as_ref().is_none_or(|(_, b)| r.ground_energy() < b.ground_energy() - 1e-12) {
            best = Some((sec, r));
        }
    }
    let (sector, r) = best.expect("at least one sector");
    Ok(Sample {
        energy: spec.per_particle(r.ground_energy()),
        repr: Repr::Vector(r.ground_state().clone()),
        branch: Branch::Sector(sector),
        label: label_of(&sector),
    })
}

fn variational_sample(ctx: &Ctx, spec: &ModelSpec, family: Family) -> Result<Sample> {
    if family == Family::TcmProj {
        let p = tcm_projected_ground(spec)?;
        return Ok(Sample {
            energy: p.point.energy,
            repr: Repr::TcmProj(p.lambda, p.coefficients),
            branch: Branch::TcmLambda(p.lambda),
            label: Some(p.lambda as i64),
        });
    }
    let pt = match family {
        // Exact minima, free of the minimiser's tolerance.
        Family::TcmCoh if spec.field_freq == 1.0 => {
            let c = tcm_critical_data(spec)?;
            VariationalPoint {
                family,
                params: Params::TwoLevel { q: c.q_c, p: 0.0, theta: c.theta_c, phi: 0.0 },
                energy: c.energy,
            }
        }
        Family::DickeCoh if spec.field_freq == 1.0 => {
            let params = dicke_coherent_critical(spec)?;
            VariationalPoint { family, params, energy: energy_surface(spec, family, &params)? }
        }
        _ => minimize_default(spec, family, ctx.seed)?,
    };
    Ok(Sample {
        energy: pt.energy,
        repr: Repr::Product(product_state(spec, &pt.params)?, family.projection()),
        branch: Branch::Var(family, pt.params),
        label: None,
    })
}

fn projected_m_sample(ctx: &Ctx, spec: &ModelSpec) -> Result<Sample> {
    let mut best: Option<(usize, f64, StateVector)> = None;
    for m in 0..=ctx.cap {
        let (pt, sv) = rwa3_projected_ground(spec, m, ctx.seed)?;
        if best.as_ref().is_none_or(|b| pt.energy < b.1 - 1e-12) {
            best = Some((m, pt.energy, sv));
        }
    }
    let (m, energy, sv) = best.expect("at least one block");
    Ok(Sample { energy, repr: Repr::Vector(sv), branch: Branch::RwaM(m), label: Some(m as i64) })
}

fn sample_at(ctx: &Ctx, path: &ParamPath, tau: f64) -> Result<Sample> {
    let spec = path.spec_at(&ctx.template, path.fraction_of_tau(tau))?;
    match (ctx.method, variational_family(&spec, ctx.method)) {
        (Method::Quantum, _) => quantum_sample(ctx, &spec),
        (_, Some(f)) => variational_sample(ctx, &spec, f),
        (_, None) => projected_m_sample(ctx, &spec),
    }
}

fn branch_energy(ctx: &Ctx, path: &ParamPath, tau: f64, b: &Branch) -> Result<f64> {
    let spec = path.spec_at(&ctx.template, path.fraction_of_tau(tau))?;
    match b {
        Branch::Sector(sec) => Ok(spec.per_particle(lowest_in(&spec, *sec)?.ground_energy())),
        Branch::Var(f, p) => Ok(local_minimum(&spec, *f, p)?.energy),
        Branch::TcmLambda(l) => tcm_projected_energy(&spec, *l, if *l == 0 { 0.0 } else { tcm_eta(&spec) }),
        Branch::RwaM(m) => Ok(rwa3_projected_ground(&spec, *m, ctx.seed)?.0.energy),
    }
}

fn fidelity(ctx: &Ctx, a: &Repr, b: &Repr) -> f64 {
    match (a, b) {
        (Repr::Vector(x), Repr::Vector(y)) => x.fidelity(y).unwrap_or(0.0).clamp(0.0, 1.0),
        (Repr::Product(x, p), Repr::Product(y, q)) if p == q => ctx.coh.fidelity(x, y, *p).clamp(0.0, 1.0),
        (Repr::TcmProj(la, ca), Repr::TcmProj(lb, cb)) if la == lb => {
            let map: HashMap<&Label, f64> = ca.iter().map(|(l, c)| (l, *c)).collect();
            let dot: f64 = cb.iter().map(|(l, c)| map.get(l).map_or(0.0, |v| v * c)).sum();
            (dot * dot).clamp(0.0, 1.0)
        }
        _ => 0.0,
    }
}

fn default_cutoff(template: &ModelSpec, path: &ParamPath) -> Result<usize> {
    let mut n = 0;
    for s in [0.0, 1.0] {
        let spec = path.spec_at(template, s)?;
        let opts = GroundOptions { tol: 1e-10, solver: scan_solver(), ..Default::default() };
        let (r, n_max) = converged_ground_with(&spec, SectorSpec::parity(true, 1), &opts)?;
        // Doubling overshoots; keep the smallest sixteenth of it that still
        // reproduces the converged energy.
        let e = r.ground_energy();
        let mut best = n_max;
        for k in 1..8 {
            let c = n_max * k / 16;
            if c >= 1 && (lowest_in(&spec, SectorSpec::parity(true, c))?.ground_energy() - e).abs() < opts.tol {
                best = c;
                break;
            }
        }
        n = n.max(best);
    }
    Ok(n)
}

fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// Transitions along a path: χ peaks between coarse samples, refined by
/// bisection on the competing branches (discontinuities) or by golden-section
/// search on χ with fidelity step δτ (smooth peaks).
pub fn locate_transitions(template: &ModelSpec, path: &ParamPath, delta_tau: f64, method: Method) -> Result<TransitionReport> {
    locate_transitions_with(template, path, &LocateOptions::new(delta_tau, method))
}

pub fn locate_transitions_with(template: &ModelSpec, path: &ParamPath, opts: &LocateOptions) -> Result<TransitionReport> {
    path.validate()?;
    template.validate()?;
    if !(opts.delta_tau > 0.0 && opts.delta_tau.is_finite()) {
        return Err(Error::InvalidParameter("δτ must be positive".into()));
    }
    if path.end[0] == path.start[0] {
        return Err(Error::InvalidParameter("the path coordinate does not vary".into()));
    }
    let needs_cutoff = opts.method == Method::Quantum && (template.kind == ModelKind::Dicke || (!template.kind.is_two_level() && !template.kind.is_rwa()));
    let cutoff = match opts.fock_cutoff {
        Some(c) => c,
        None if needs_cutoff => default_cutoff(template, path)?,
        None => 0,
    };
    let ctx = Ctx {
        template: *template,
        method: opts.method,
        cap: opts.block_cap.unwrap_or(3 * template.n_atoms + 10),
        cutoff,
        seed: opts.seed,
        coh: CoherentHamiltonian::from_spec(template),
    };
    let taus = path.taus();
    let samples: Vec<Sample> = taus.par_iter().map(|&t| sample_at(&ctx, path, t)).collect::<Result<_>>()?;
    let step = path.step().abs();
    let fids: Vec<f64> = samples.windows(2).map(|w| fidelity(&ctx, &w[0].repr, &w[1].repr)).collect();
    let chis: Vec<f64> = fids.iter().map(|&f| susceptibility(f, step)).collect();
    let threshold = (opts.prominence * median(&chis)).max(1e-9);

    let mut transitions = Vec::new();
    let n = chis.len();
    let mut i = 0;
    while i < n {
        let jump = fids[i] < JUMP_FIDELITY || samples[i].label != samples[i + 1].label;
        let left_ok = i == 0 || chis[i] > chis[i - 1];
        let right_ok = i + 1 == n || chis[i] >= chis[i + 1];
        let mut found = Vec::new();
        if jump {
            split_jump(&ctx, path, (taus[i], samples[i].clone()), (taus[i + 1], samples[i + 1].clone()), opts.delta_tau, &mut found)?;
        }
        if !found.is_empty() {
            transitions.extend(found);
        } else if chis[i] > threshold && left_ok && right_ok {
            let mut alternatives = Vec::new();
            if i + 1 < n && (chis[i + 1] - chis[i]).abs() <= 1e-9 * chis[i] {
                alternatives.push(0.5 * (taus[i + 1] + taus[i + 2]));
            }
            let mut t = refine_peak(&ctx, path, &taus, i, opts.delta_tau)?;
            t.alternatives = alternatives;
            transitions.push(t);
        }
        i += 1;
    }

    let critical_coupling = transitions.first().map(|t| t.tau_c);
    let x = match (critical_coupling, path.params[0]) {
        (Some(c), Param::Gamma) if template.kind.is_two_level() => {
            crate::observables::two_level_gamma_c(template).ok().map(|g| c / g)
        }
        _ => None,
    };
    let out_samples = samples
        .iter()
        .enumerate()
        .map(|(k, s)| PathSample { tau: taus[k], energy: s.energy, chi: chis.get(k).copied(), label: s.label })
        .collect();
    Ok(TransitionReport { path: path.clone(), method: opts.method, transitions, critical_coupling, x, samples: out_samples })
}

fn discontinuous(ctx: &Ctx, a: &Sample, b: &Sample) -> bool {
    a.label != b.label || fidelity(ctx, &a.repr, &b.repr) < JUMP_FIDELITY
}

/// Interval width below which a discontinuity is assumed to separate only its
/// two end branches, and is finished by bisection on their energies.
const SPLIT_WIDTH: f64 = 1e-3;

/// Halve [a, b] until each discontinuity inside it is isolated, then finish
/// each one by bisection on the energies of the two competing branches.
fn split_jump(ctx: &Ctx, path: &ParamPath, a: (f64, Sample), b: (f64, Sample), tol: f64, out: &mut Vec<Transition>) -> Result<()> {
    let (mut ta, mut sa) = a;
    let (mut tb, mut sb) = b;
    let stop = SPLIT_WIDTH.max(tol);
    while (tb - ta).abs() > stop {
        let tm = 0.5 * (ta + tb);
        let sm = sample_at(ctx, path, tm)?;
        let left = discontinuous(ctx, &sa, &sm);
        let right = discontinuous(ctx, &sm, &sb);
        match (left, right) {
            (true, true) => {
                split_jump(ctx, path, (ta, sa), (tm, sm.clone()), tol, out)?;
                ta = tm;
                sa = sm;
            }
            (true, false) => {
                tb = tm;
                sb = sm;
            }
            (false, true) => {
                ta = tm;
                sa = sm;
            }
            // The change is smooth on a finer scale: not a discontinuity.
            (false, false) => return Ok(()),
        }
    }
    out.push(finish_jump(ctx, path, (ta, &sa), (tb, &sb), tol)?);
    Ok(())
}

fn finish_jump(ctx: &Ctx, path: &ParamPath, a: (f64, &Sample), b: (f64, &Sample), tol: f64) -> Result<Transition> {
    let (mut ta, mut tb) = (a.0, b.0);
    let (bl, br) = (&a.1.branch, &b.1.branch);
    // Predicate: the left branch is still the lower one.
    while (tb - ta).abs() > tol {
        let m = 0.5 * (ta + tb);
        let el = branch_energy(ctx, path, m, bl)?;
        let er = branch_energy(ctx, path, m, br)?;
        if el <= er {
            ta = m;
        } else {
            tb = m;
        }
    }
    let width = (tb - ta).abs().max(f64::MIN_POSITIVE);
    let sa = sample_at(ctx, path, ta)?;
    let sb = sample_at(ctx, path, tb)?;
    let chi = susceptibility(fidelity(ctx, &sa.repr, &sb.repr), width);
    let delta_label = match (a.1.label, b.1.label) {
        (Some(x), Some(y)) if x != y => Some(y - x),
        _ => None,
    };
    Ok(Transition { tau_c: 0.5 * (ta + tb), order: classify(ctx, path, ta, tb)?, chi_peak: chi, delta_label, alternatives: vec![] })
}

fn chi_at(ctx: &Ctx, path: &ParamPath, tau: f64, dt: f64) -> Result<f64> {
    let a = sample_at(ctx, path, tau - 0.5 * dt)?;
    let b = sample_at(ctx, path, tau + 0.5 * dt)?;
    Ok(susceptibility(fidelity(ctx, &a.repr, &b.repr), dt))
}

fn refine_peak(ctx: &Ctx, path: &ParamPath, taus: &[f64], i: usize, dt: f64) -> Result<Transition> {
    let lo_t = path.start[0].min(path.end[0]);
    let hi_t = path.start[0].max(path.end[0]);
    let mut a = taus[i.saturating_sub(1)].max(lo_t + 0.5 * dt);
    let mut b = taus[(i + 2).min(taus.len() - 1)].min(hi_t - 0.5 * dt);
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = chi_at(ctx, path, c, dt)?;
    let mut fd = chi_at(ctx, path, d, dt)?;
    while (b - a) > dt {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = chi_at(ctx, path, c, dt)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = chi_at(ctx, path, d, dt)?;
        }
    }
    let tau = 0.5 * (a + b);
    let chi = chi_at(ctx, path, tau, dt)?;
    Ok(Transition { tau_c: tau, order: classify(ctx, path, tau, tau)?, chi_peak: chi, delta_label: None, alternatives: vec![] })
}

/// Compare one-sided slopes outside [a, b], each extrapolated linearly to the
/// bracket centre so that smooth curvature does not register as a jump.
fn classify(ctx: &Ctx, path: &ParamPath, a: f64, b: f64) -> Result<Order> {
    let h = ORDER_STEP * path.step().signum();
    let (a, b) = if (b - a) * h < 0.0 { (b, a) } else { (a, b) };
    let pts = [a - 2.0 * h, a - h, a, b, b + h, b + 2.0 * h];
    let e: Vec<f64> = pts.iter().map(|&t| sample_at(ctx, path, t).map(|s| s.energy)).collect::<Result<_>>()?;
    let mid = 0.5 * (a + b);
    let sl1 = (e[2] - e[1]) / h;
    let sl2 = (e[1] - e[0]) / h;
    let sr1 = (e[4] - e[3]) / h;
    let sr2 = (e[5] - e[4]) / h;
    let left = sl1 + (sl1 - sl2) / h * (mid - (a - 0.5 * h));
    let right = sr1 - (sr2 - sr1) / h * ((b + 0.5 * h) - mid);
    Ok(if (right - left).abs() > ORDER_THRESHOLD { Order::First } else { Order::Second })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub exponent: f64,
    pub log_prefactor: f64,
    pub r_squared: f64,
    /// 95% confidence interval of the exponent.
    pub confidence_interval: (f64, f64),
}

/// Least-squares line through (ln N, ln(coupling − offset)).
pub fn fit_critical_exponent(samples: &[(f64, f64)], offset: f64) -> Result<FitResult> {
    if samples.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 samples, got {}", samples.len())));
    }
    let mut xs = Vec::with_capacity(samples.len());
    let mut ys = Vec::with_capacity(samples.len());
    for &(n, c) in samples {
        if !(n > 0.0) || !(c > offset) {
            return Err(Error::Fit(format!("sample ({n}, {c}) is not above the offset {offset}")));
        }
        xs.push(n.ln());
        ys.push((c - offset).ln());
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 1e-12 * (1.0 + mx * mx)) {
        return Err(Error::Fit("degenerate abscissas".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 };
    let dof = k - 2.0;
    let se = (ss_res / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::Fit(e.to_string()))?.inverse_cdf(0.975);
    Ok(FitResult {
        exponent: slope,
        log_prefactor: intercept,
        r_squared,
        confidence_interval: (slope - t * se, slope + t * se),
    })
}

/// Ξ RWA at double resonance (ω = (0, 1, 2), field frequency 1) at the triple
/// point (μ₁₂, μ₂₃) = (1, √2).
pub fn triple_point_spec(n_atoms: usize) -> Result<ModelSpec> {
    ModelSpec::three_level(ModelKind::XiRwa, n_atoms, [0.0, 1.0, 2.0], [1.0, 0.0, std::f64::consts::SQRT_2])
}

/// The analytic triple-point ground state of block M ∈ {0, 1, 2}, with the
/// block basis it is expressed in.
pub fn triple_point_ground_state(n_atoms: usize, m: usize) -> Result<(Basis, StateVector)> {
    if n_atoms < 2 {
        return Err(Error::InvalidParameter("the triple-point states need N ≥ 2".into()));
    }
    let n = n_atoms;
    let nf = n as f64;
    let kets: Vec<(Label, f64)> = match m {
        0 => vec![(Label::three(0, n, n), 1.0)],
        1 => vec![(Label::three(0, n, n - 1), 0.5f64.sqrt()), (Label::three(1, n, n), 0.5f64.sqrt())],
        2 => vec![
            (Label::three(0, n - 1, n - 1), -0.5 / nf.sqrt()),
            (Label::three(0, n, n - 2), 0.5 * ((nf - 1.0) / nf).sqrt()),
            (Label::three(1, n, n - 1), 0.5f64.sqrt()),
            (Label::three(2, n, n), 0.5),
        ],
        _ => return Err(Error::InvalidParameter(format!("no tabulated triple-point state for M = {m}"))),
    };
    let spec = triple_point_spec(n)?;
    let (basis, _) = build(&spec, SectorSpec::m(m))?;
    let mut amps = vec![C64::new(0.0, 0.0); basis.dim()];
    for (l, c) in kets {
        let i = basis.index_of(&l).ok_or_else(|| Error::BasisMismatch(format!("ket {l:?} not in the M={m} block")))?;
        amps[i] = C64::new(c, 0.0);
    }
    // Keep the printed signs: no phase normalisation.
    let sv = StateVector { amplitudes: amps, basis_id: basis.id };
    Ok((basis, sv))
}

/// Along a row of one coupling of a 3-level RWA spec, the index i such that the
/// M = 0 block is the ground state at values[i] but not at values[i+1].
///
/// The M = 0 block carries no photons and no coupling, so its energy is constant
/// along the row while every other block's ground energy is concave in the
/// coupling. The set where M = 0 is the ground state is therefore an interval
/// starting at the first value, and bisection over the grid indices finds its end.
pub fn normal_departure_on_row(template: &ModelSpec, param: Param, values: &[f64], cap: usize) -> Result<Option<usize>> {
    if template.kind.is_two_level() || !template.kind.is_rwa() {
        return Err(Error::IncompatibleSector { sector: "M".into(), kind: template.kind.to_string() });
    }
    if values.len() < 2 {
        return Err(Error::InvalidParameter("a row needs at least 2 values".into()));
    }
    let normal_at = |v: f64| -> Result<bool> {
        let spec = template.with_param(param, v)?;
        let e0 = lowest_in(&spec, SectorSpec::m(0))?.ground_energy();
        let below = (1..=cap)
            .into_par_iter()
            .map(|m| -> Result<bool> { Ok(lowest_in(&spec, SectorSpec::m(m))?.ground_energy() < e0 - 1e-12) });
        let any = below.collect::<Result<Vec<bool>>>()?.into_iter().any(|b| b);
        Ok(!any)
    };
    if !normal_at(values[0])? {
        return Ok(None);
    }
    let last = values.len() - 1;
    if normal_at(values[last])? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0, last);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if normal_at(values[mid])? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

/// Same as `normal_departure_on_row` for a variational family whose normal
/// state (α = 0, all atoms in level 1) has coupling-independent energy: the
/// minimum drops below it by more than `tol` only beyond the departure point.
pub fn variational_departure_on_row(
    template: &ModelSpec,
    family: Family,
    param: Param,
    values: &[f64],
    seed: u64,
    tol: f64,
) -> Result<Option<usize>> {
    if values.len() < 2 {
        return Err(Error::InvalidParameter("a row needs at least 2 values".into()));
    }
    let normal_at = |v: f64| -> Result<bool> {
        let spec = template.with_param(param, v)?;
        let normal = energy_surface(&spec, family, &normal_params(family))?;
        Ok(minimize_default(&spec, family, seed)?.energy >= normal - tol)
    };
    if !normal_at(values[0])? {
        return Ok(None);
    }
    let last = values.len() - 1;
    if normal_at(values[last])? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0, last);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if normal_at(values[mid])? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

fn normal_params(family: Family) -> Params {
    match family {
        Family::TcmCoh | Family::DickeCoh | Family::DickeSas(_) => Params::TwoLevel { q: 0.0, p: 0.0, theta: 0.0, phi: 0.0 },
        Family::VSasPlus => Params::VReduced { rho: 0.0, xi: 0.0, chi: 0.0 },
        Family::TcmProj => Params::TcmProj { lambda: 0, eta: 0.0 },
        _ => Params::three_real(0.0, 0.0, 0.0),
    }
}

/// One cell of a phase-diagram grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub x: f64,
    pub y: f64,
    /// Ground energy per particle.
    pub energy: f64,
    /// ⟨M⟩ or λ of the ground block, or the parity (±1) for non-RWA models.
    pub label: f64,
    /// χ along x to the next cell in the row (None in the last column).
    pub chi: Option<f64>,
}

/// Exact ground states on an x × y grid of two couplings. Blocks up to `cap`
/// for RWA models, parity sectors with a fixed cutoff otherwise.
pub fn phase_diagram_grid(
    template: &ModelSpec,
    x_param: Param,
    xs: &[f64],
    y_param: Param,
    ys: &[f64],
    cap: usize,
    fock_cutoff: usize,
) -> Result<Vec<GridCell>> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::InvalidParameter("grid axes must not be empty".into()));
    }
    let ctx = Ctx {
        template: *template,
        method: Method::Quantum,
        cap,
        cutoff: fock_cutoff,
        seed: 0,
        coh: CoherentHamiltonian::from_spec(template),
    };
    let points: Vec<(usize, usize)> = (0..ys.len()).flat_map(|j| (0..xs.len()).map(move |i| (i, j))).collect();
    let solved: Vec<Sample> = points
        .par_iter()
        .map(|&(i, j)| {
            let spec = template.with_param(x_param, xs[i])?.with_param(y_param, ys[j])?;
            quantum_sample(&ctx, &spec)
        })
        .collect::<Result<_>>()?;
    let dx = if xs.len() > 1 { xs[1] - xs[0] } else { 1.0 };
    let mut out = Vec::with_capacity(points.len());
    for (k, &(i, j)) in points.iter().enumerate() {
        let s = &solved[k];
        let label = match (&s.branch, s.label) {
            (_, Some(l)) => l as f64,
            (Branch::Sector(SectorSpec { sector: Sector::Parity(even), .. }), None) => {
                if *even {
                    1.0
                } else {
                    -1.0
                }
            }
            _ => f64::NAN,
        };
        let chi = (i + 1 < xs.len()).then(|| susceptibility(fidelity(&ctx, &s.repr, &solved[k + 1].repr), dx));
        out.push(GridCell { x: xs[i], y: ys[j], energy: s.energy, label, chi });
    }
    Ok(out)
}
