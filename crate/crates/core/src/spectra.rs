//! Exact eigensolutions: dense and Lanczos solvers, cutoff convergence, scans.

use crate::basis::{enumerate_basis, Basis, Sector, SectorSpec};
use crate::error::{Error, Result};
use crate::model::{ModelSpec, Param};
use crate::operator::{assemble_hamiltonian, OperatorMatrix};
use crate::state::StateVector;
use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

pub const DENSE_THRESHOLD: usize = 2000;
const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub energies: Vec<f64>,
    pub states: Vec<StateVector>,
    pub basis_id: u64,
    /// Number of states within 1e-9 of the lowest energy.
    pub multiplicity: usize,
}

impl EigenResult {
    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }
    pub fn ground_state(&self) -> &StateVector {
        &self.states[0]
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub tol: f64,
    pub dense_threshold: usize,
    /// Krylov starting vector (e.g. the ground state of a neighbouring sample).
    pub start: Option<Vec<f64>>,
    pub max_restarts: usize,
    pub krylov_dim: usize,
    /// Extend the result to the whole degenerate ground multiplet. Costs one
    /// extra eigenpair; scans that only follow the ground branch can skip it.
    pub complete_multiplet: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-10, dense_threshold: DENSE_THRESHOLD, start: None, max_restarts: 400, krylov_dim: 80, complete_multiplet: true }
    }
}

/// The k lowest eigenpairs, extended to include the whole degenerate ground multiplet.
pub fn lowest_eigenpairs(h: &OperatorMatrix, k: usize, tol: f64) -> Result<EigenResult> {
    lowest_eigenpairs_with(h, k, &SolverOptions { tol, ..Default::default() })
}

pub fn lowest_eigenpairs_with(h: &OperatorMatrix, k: usize, opts: &SolverOptions) -> Result<EigenResult> {
    if k == 0 || k > h.dim {
        return Err(Error::InvalidParameter(format!("requested {k} eigenpairs of a {}-dimensional matrix", h.dim)));
    }
    if !h.is_real() || h.hermiticity_defect() > 1e-12 {
        return Err(Error::InvalidParameter("eigensolvers need a real symmetric matrix".into()));
    }
    let (vals, vecs) = if h.dim < opts.dense_threshold {
        dense_lowest(h, k)
    } else {
        lanczos_lowest(h, k, opts)?
    };
    let mut energies = vals;
    let mut vectors = vecs;
    // Make sure a degenerate ground multiplet is complete.
    let mut want = k;
    while opts.complete_multiplet && energies.len() == want && want < h.dim && (energies[want - 1] - energies[0]).abs() < DEGENERACY_TOL {
        want = (want * 2).min(h.dim);
        let (v2, w2) = if h.dim < opts.dense_threshold { dense_lowest(h, want) } else { lanczos_lowest(h, want, opts)? };
        energies = v2;
        vectors = w2;
    }
    let multiplicity = energies.iter().take_while(|&&e| (e - energies[0]).abs() < DEGENERACY_TOL).count();
    let keep = k.max(multiplicity);
    energies.truncate(keep);
    vectors.truncate(keep);
    let states = vectors
        .iter()
        .map(|v| StateVector::from_real(v, h.basis_id))
        .collect::<Result<Vec<_>>>()?;
    Ok(EigenResult { energies, states, basis_id: h.basis_id, multiplicity })
}

fn dense_lowest(h: &OperatorMatrix, k: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let eig = SymmetricEigen::new(h.to_dense_real());
    let mut order: Vec<usize> = (0..h.dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().take(k).map(|&i| eig.eigenvalues[i]).collect();
    let vecs = order.iter().take(k).map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect();
    (vals, vecs)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn orthogonalize(v: &mut [f64], against: &[Vec<f64>]) {
    // Two passes of classical Gram-Schmidt are enough for full reorthogonalisation.
    for _ in 0..2 {
        for u in against {
            let c = dot(u, v);
            axpy(v, -c, u);
        }
    }
}

/// Deterministic pseudo-random start vector.
fn start_vector(n: usize, salt: u64) -> Vec<f64> {
    let mut s = 0x853c_49e6_748f_ea9b_u64 ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    (0..n)
        .map(|_| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect()
}

/// Lowest eigenvalue of the symmetric tridiagonal matrix (alpha, beta) by Sturm
/// bisection, with its eigenvector by inverse iteration.
fn tridiagonal_lowest(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let m = alpha.len();
    let off = |i: usize| if i < beta.len() { beta[i].abs() } else { 0.0 };
    let mut lo = f64::INFINITY;
    for i in 0..m {
        let left = if i > 0 { off(i - 1) } else { 0.0 };
        lo = lo.min(alpha[i] - left - off(i));
    }
    let mut hi = alpha.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = lo.abs().max(hi.abs()).max(1.0);
    let below = |x: f64| {
        let mut d = 1.0;
        let mut count = 0;
        for i in 0..m {
            let b2 = if i > 0 { beta[i - 1] * beta[i - 1] } else { 0.0 };
            d = alpha[i] - x - if i > 0 { b2 / d } else { 0.0 };
            if d == 0.0 {
                d = -f64::EPSILON * scale;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    for _ in 0..200 {
        if hi - lo <= 4.0 * f64::EPSILON * scale {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // T - σ is positive definite for σ just below the eigenvalue, so the LDLᵀ
    // solve needs no pivoting.
    let sigma = lo - 8.0 * f64::EPSILON * scale;
    let mut s = vec![1.0; m];
    let mut d = vec![0.0; m];
    let mut l = vec![0.0; m];
    d[0] = alpha[0] - sigma;
    for i in 1..m {
        l[i] = beta[i - 1] / d[i - 1];
        d[i] = alpha[i] - sigma - l[i] * beta[i - 1];
    }
    for _ in 0..3 {
        for i in 1..m {
            s[i] -= l[i] * s[i - 1];
        }
        for i in 0..m {
            s[i] /= d[i];
        }
        for i in (0..m - 1).rev() {
            s[i] -= l[i + 1] * s[i + 1];
        }
        let n = s.iter().map(|x| x * x).sum::<f64>().sqrt();
        s.iter_mut().for_each(|x| *x /= n);
    }
    (0.5 * (lo + hi), s)
}

/// Ground eigenpair by Lanczos without reorthogonalisation: the recurrence keeps
/// only three vectors and a second pass rebuilds the Ritz vector. Loss of
/// orthogonality only adds spurious copies of converged Ritz values, which
/// cannot disturb the lowest one.
fn lanczos_ground(h: &OperatorMatrix, opts: &SolverOptions) -> Result<(f64, Vec<f64>)> {
    let n = h.dim;
    let mut x = match &opts.start {
        Some(s) if s.len() == n && s.iter().any(|&v| v != 0.0) => s.clone(),
        _ => start_vector(n, 1),
    };
    normalize(&mut x);
    let budget = opts.krylov_dim * opts.max_restarts;
    let mut used = 0;
    let mut last_res = f64::INFINITY;
    let mut w = vec![0.0; n];
    while used < budget {
        // First pass: the tridiagonal matrix only.
        let (mut alpha, mut beta) = (Vec::new(), Vec::<f64>::new());
        let (mut q, mut prev) = (x.clone(), vec![0.0; n]);
        let s = loop {
            h.apply_real(&q, &mut w);
            let a = dot(&w, &q);
            axpy(&mut w, -a, &q);
            if let Some(&b) = beta.last() {
                axpy(&mut w, -b, &prev);
            }
            alpha.push(a);
            used += 1;
            let b = dot(&w, &w).sqrt();
            let m = alpha.len();
            let exhausted = b < 1e-13 * a.abs().max(1.0) || used >= budget || m >= 4 * n.max(50);
            if m % 10 == 0 || exhausted || m == n {
                let (theta, s) = tridiagonal_lowest(&alpha, &beta);
                if b * s[m - 1].abs() <= 0.1 * opts.tol * theta.abs().max(1.0) || exhausted {
                    break s;
                }
            }
            beta.push(b);
            std::mem::swap(&mut prev, &mut q);
            q.iter_mut().zip(&w).for_each(|(qi, wi)| *qi = wi / b);
        };
        // Second pass: replay the recurrence to accumulate the Ritz vector.
        let mut ritz = vec![0.0; n];
        let (mut q, mut prev) = (x.clone(), vec![0.0; n]);
        for j in 0..alpha.len() {
            axpy(&mut ritz, s[j], &q);
            if j + 1 == alpha.len() {
                break;
            }
            h.apply_real(&q, &mut w);
            axpy(&mut w, -alpha[j], &q);
            if j > 0 {
                axpy(&mut w, -beta[j - 1], &prev);
            }
            std::mem::swap(&mut prev, &mut q);
            q.iter_mut().zip(&w).for_each(|(qi, wi)| *qi = wi / beta[j]);
        }
        normalize(&mut ritz);
        h.apply_real(&ritz, &mut w);
        let e = dot(&w, &ritz);
        axpy(&mut w, -e, &ritz);
        last_res = dot(&w, &w).sqrt();
        x = ritz;
        if last_res <= opts.tol * e.abs().max(1.0) {
            return Ok((e, x));
        }
    }
    Err(Error::NoConvergence { iterations: used, residual: last_res })
}

/// Restarted Lanczos with full reorthogonalisation; eigenpairs are found one at
/// a time and locked, so degenerate levels are resolved.
fn lanczos_lowest(h: &OperatorMatrix, k: usize, opts: &SolverOptions) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = h.dim;
    let mut locked: Vec<Vec<f64>> = Vec::new();
    let mut vals = Vec::new();
    let mut w = vec![0.0; n];
    for which in 0..k {
        if which == 0 {
            let (e, v) = lanczos_ground(h, opts)?;
            vals.push(e);
            locked.push(v);
            continue;
        }
        let mut x = match (&opts.start, which) {
            (Some(s), 0) if s.len() == n => s.clone(),
            _ => start_vector(n, which as u64 + 1),
        };
        orthogonalize(&mut x, &locked);
        if normalize(&mut x) == 0.0 {
            x = start_vector(n, 1000 + which as u64);
            orthogonalize(&mut x, &locked);
            normalize(&mut x);
        }
        let mut converged = None;
        let mut last_res = f64::INFINITY;
        let m_max = opts.krylov_dim.min(n - locked.len()).max(1);
        for _restart in 0..opts.max_restarts {
            let mut q: Vec<Vec<f64>> = vec![x.clone()];
            let mut alpha = Vec::new();
            let mut beta: Vec<f64> = Vec::new();
            for j in 0..m_max {
                h.apply_real(&q[j], &mut w);
                let a = dot(&w, &q[j]);
                alpha.push(a);
                axpy(&mut w, -a, &q[j]);
                if j > 0 {
                    axpy(&mut w, -beta[j - 1], &q[j - 1]);
                }
                orthogonalize(&mut w, &locked);
                orthogonalize(&mut w, &q);
                let b = dot(&w, &w).sqrt();
                if j + 1 == m_max || b < 1e-13 {
                    beta.push(b);
                    break;
                }
                beta.push(b);
                q.push(w.iter().map(|v| v / b).collect());
            }
            let m = alpha.len();
            let mut t = DMatrix::<f64>::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alpha[i];
                if i + 1 < m {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let (imin, &theta) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .expect("non-empty");
            let s = eig.eigenvectors.column(imin);
            let mut ritz = vec![0.0; n];
            for (i, qi) in q.iter().enumerate().take(m) {
                axpy(&mut ritz, s[i], qi);
            }
            orthogonalize(&mut ritz, &locked);
            normalize(&mut ritz);
            h.apply_real(&ritz, &mut w);
            axpy(&mut w, -theta, &ritz);
            let res = dot(&w, &w).sqrt();
            last_res = res;
            x = ritz;
            if res <= opts.tol * theta.abs().max(1.0) || beta[m - 1] < 1e-13 && res < 1e-8 {
                converged = Some(theta);
                break;
            }
        }
        match converged {
            Some(theta) => {
                vals.push(theta);
                locked.push(x);
            }
            None => {
                return Err(Error::NoConvergence { iterations: opts.max_restarts * m_max, residual: last_res })
            }
        }
    }
    // Locking finds eigenpairs in order except for near-degenerate reorderings.
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    Ok((order.iter().map(|&i| vals[i]).collect(), order.iter().map(|&i| locked[i].clone()).collect()))
}

/// Options for cutoff convergence.
#[derive(Debug, Clone)]
pub struct GroundOptions {
    pub tol: f64,
    /// Initial cutoff; defaults to ceil(4 N_A γ² + 10).
    pub n0: Option<usize>,
    pub cap: usize,
    pub solver: SolverOptions,
}

impl Default for GroundOptions {
    fn default() -> Self {
        GroundOptions { tol: 1e-10, n0: None, cap: 4096, solver: SolverOptions::default() }
    }
}

pub fn default_initial_cutoff(spec: &ModelSpec) -> usize {
    let g = spec.coupling_scale();
    (4.0 * spec.n_atoms as f64 * g * g + 10.0).ceil() as usize
}

/// Ground state in a sector with the Fock cutoff doubled until the ground energy
/// changes by less than `tol`. Returns the result and the cutoff used.
pub fn converged_ground(spec: &ModelSpec, sector: SectorSpec, tol: f64) -> Result<(EigenResult, usize)> {
    converged_ground_with(spec, sector, &GroundOptions { tol, ..Default::default() })
}

pub fn converged_ground_with(spec: &ModelSpec, sector: SectorSpec, opts: &GroundOptions) -> Result<(EigenResult, usize)> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let solve = |sec: SectorSpec| -> Result<EigenResult> {
        let basis = enumerate_basis(spec, sec)?;
        let h = assemble_hamiltonian(spec, &basis)?;
        lowest_eigenpairs_with(&h, 1, &opts.solver)
    };
    if sector.is_finite_block() {
        let r = solve(sector)?;
        return Ok((r, 0));
    }
    let mut n_max = opts.n0.unwrap_or_else(|| default_initial_cutoff(spec)).max(1);
    let mut prev = solve(sector.with_cutoff(n_max))?;
    loop {
        let next_n = n_max * 2;
        if next_n > opts.cap {
            return Err(Error::CutoffCap { n_max: next_n, best_energy: prev.ground_energy() });
        }
        let next = solve(sector.with_cutoff(next_n))?;
        let diff = (next.ground_energy() - prev.ground_energy()).abs();
        n_max = next_n;
        prev = next;
        if diff < opts.tol {
            return Ok((prev, n_max));
        }
    }
}

/// A straight path through parameter space, sampled uniformly. The path
/// coordinate τ is the value of the first parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPath {
    pub params: Vec<Param>,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub samples: usize,
}

impl ParamPath {
    pub fn line(param: Param, start: f64, end: f64, samples: usize) -> Self {
        ParamPath { params: vec![param], start: vec![start], end: vec![end], samples }
    }

    pub fn validate(&self) -> Result<()> {
        if self.params.is_empty() || self.params.len() != self.start.len() || self.params.len() != self.end.len() {
            return Err(Error::InvalidParameter("path parameters and endpoints must have equal, non-zero length".into()));
        }
        if self.samples < 2 {
            return Err(Error::InvalidParameter("a path needs at least 2 samples".into()));
        }
        Ok(())
    }

    /// Fraction along the path of sample i.
    pub fn fraction(&self, i: usize) -> f64 {
        i as f64 / (self.samples - 1) as f64
    }

    pub fn values_at(&self, s: f64) -> Vec<f64> {
        self.start.iter().zip(&self.end).map(|(a, b)| a + (b - a) * s).collect()
    }

    pub fn tau_at(&self, s: f64) -> f64 {
        self.start[0] + (self.end[0] - self.start[0]) * s
    }

    pub fn fraction_of_tau(&self, tau: f64) -> f64 {
        (tau - self.start[0]) / (self.end[0] - self.start[0])
    }

    pub fn taus(&self) -> Vec<f64> {
        (0..self.samples).map(|i| self.tau_at(self.fraction(i))).collect()
    }

    /// Uniform spacing in τ.
    pub fn step(&self) -> f64 {
        (self.end[0] - self.start[0]) / (self.samples - 1) as f64
    }

    pub fn spec_at(&self, template: &ModelSpec, s: f64) -> Result<ModelSpec> {
        let mut spec = *template;
        for (p, v) in self.params.iter().zip(self.values_at(s)) {
            spec = spec.with_param(*p, v)?;
        }
        Ok(spec)
    }

    pub fn describe(&self) -> String {
        self.params
            .iter()
            .zip(self.start.iter().zip(&self.end))
            .map(|(p, (a, b))| format!("{}:{}->{}", p.name(), a, b))
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub sample: usize,
    pub tau: f64,
    pub sector: SectorSpec,
    /// Curve index after overlap tracking.
    pub level: usize,
    /// Energy per particle.
    pub energy: f64,
}

/// Lowest k energies per sample and sector, with curves tracked by maximal
/// eigenvector overlap between adjacent samples (ties broken by energy order).
pub fn spectrum_scan(template: &ModelSpec, path: &ParamPath, sectors: &[SectorSpec], k: usize) -> Result<Vec<ScanRow>> {
    path.validate()?;
    let mut rows = Vec::new();
    for sector in sectors {
        let per_sample: Vec<Result<(f64, EigenResult)>> = (0..path.samples)
            .into_par_iter()
            .map(|i| {
                let s = path.fraction(i);
                let spec = path.spec_at(template, s)?;
                let basis = enumerate_basis(&spec, *sector)?;
                let h = assemble_hamiltonian(&spec, &basis)?;
                let kk = k.min(basis.dim());
                let mut r = lowest_eigenpairs(&h, kk, 1e-10)?;
                r.energies.truncate(kk);
                r.states.truncate(kk);
                r.energies.iter_mut().for_each(|e| *e = spec.per_particle(*e));
                Ok((path.tau_at(s), r))
            })
            .collect();
        let per_sample = per_sample.into_iter().collect::<Result<Vec<_>>>()?;
        let mut prev: Option<Vec<usize>> = None;
        for (i, (tau, r)) in per_sample.iter().enumerate() {
            let assign: Vec<usize> = match &prev {
                None => (0..r.energies.len()).collect(),
                Some(prev_assign) => {
                    let prev_r = &per_sample[i - 1].1;
                    track(prev_r, r, prev_assign)
                }
            };
            for (lvl, e) in assign.iter().zip(&r.energies) {
                rows.push(ScanRow { sample: i, tau: *tau, sector: *sector, level: *lvl, energy: *e });
            }
            prev = Some(assign);
        }
    }
    Ok(rows)
}

/// Greedy maximum-overlap assignment of current states to previous curve labels.
fn track(prev: &EigenResult, cur: &EigenResult, prev_assign: &[usize]) -> Vec<usize> {
    let n = cur.states.len();
    let mut pairs = Vec::new();
    for (ci, c) in cur.states.iter().enumerate() {
        for (pi, p) in prev.states.iter().enumerate() {
            let ov = c.fidelity(p).unwrap_or(0.0);
            pairs.push((ov, ci, pi));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut out = vec![usize::MAX; n];
    let mut used_prev = vec![false; prev.states.len()];
    for (_, ci, pi) in pairs {
        if out[ci] == usize::MAX && !used_prev[pi] {
            out[ci] = prev_assign[pi];
            used_prev[pi] = true;
        }
    }
    let mut next = prev_assign.iter().copied().max().map_or(0, |m| m + 1);
    for o in out.iter_mut() {
        if *o == usize::MAX {
            *o = next;
            next += 1;
        }
    }
    out
}

/// Ground state over sector blocks: for TCM all λ blocks up to `cap`, for 3-level
/// RWA all M blocks up to `cap`. Returns (sector, result) of the lowest block.
pub fn block_ground(spec: &ModelSpec, cap: usize) -> Result<(SectorSpec, EigenResult)> {
    let sectors: Vec<SectorSpec> = if spec.kind == crate::model::ModelKind::Tcm {
        (0..=cap).map(SectorSpec::lambda).collect()
    } else if !spec.kind.is_two_level() && spec.kind.is_rwa() {
        (0..=cap).map(SectorSpec::m).collect()
    } else {
        return Err(Error::IncompatibleSector { sector: "block".into(), kind: spec.kind.to_string() });
    };
    let mut best: Option<(SectorSpec, EigenResult)> = None;
    for sec in sectors {
        let basis = enumerate_basis(spec, sec)?;
        let h = assemble_hamiltonian(spec, &basis)?;
        let r = lowest_eigenpairs(&h, 1, 1e-11)?;
        let better = match &best {
            None => true,
            Some((_, b)) => r.ground_energy() < b.ground_energy() - 1e-12,
        };
        if better {
            best = Some((sec, r));
        }
    }
    Ok(best.expect("at least one block"))
}

/// Label of a finite block (λ or M) if the sector is one.
pub fn block_label(sector: &SectorSpec) -> Option<usize> {
    match sector.sector {
        Sector::Lambda(l) | Sector::M(l) => Some(l),
        _ => None,
    }
}

/// Convenience: basis and Hamiltonian together.
pub fn build(spec: &ModelSpec, sector: SectorSpec) -> Result<(Basis, OperatorMatrix)> {
    let basis = enumerate_basis(spec, sector)?;
    let h = assemble_hamiltonian(spec, &basis)?;
    Ok((basis, h))
}
