//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Checks that fail for reasons recorded as known conflicts with the reference
//! values are listed in `KNOWN_RED`; they still print FAIL. Any other failing
//! check makes the run exit non-zero. Pass criterion numbers as arguments to run
//! a subset.

use cavity_phase::basis::excitation;
use cavity_phase::coherent::CoherentHamiltonian;
use cavity_phase::observables::*;
use cavity_phase::phase::*;
use cavity_phase::spectra::{block_ground, build, lowest_eigenpairs, ParamPath};
use cavity_phase::variational::*;
use cavity_phase::*;
use rand::{Rng, SeedableRng};
use std::f64::consts::{PI, SQRT_2};
use std::time::Instant;

/// (criterion, check) pairs whose failure is expected; see the README.
const KNOWN_RED: &[(u8, &str)] = &[(3, "dicke log-prefactor"), (5, "quantum first transition"), (8, "fidelity")];

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check(name: &'static str, pass: bool, detail: String) -> Check {
    Check { name, pass, detail }
}

type Outcome = Result<Vec<Check>>;

fn dicke_path() -> ParamPath {
    ParamPath::line(Param::Gamma, 0.0, 0.7, 71)
}

fn dicke_quantum_gc(n: usize) -> Result<f64> {
    let r = locate_transitions(&ModelSpec::dicke(n, 1.0, 0.5)?, &dicke_path(), 1e-4, Method::Quantum)?;
    r.critical_coupling.ok_or_else(|| Error::Fit(format!("no quantum transition for N = {n}")))
}

fn dicke_sas_gc(n: usize) -> Result<f64> {
    let path = ParamPath::line(Param::Gamma, 0.45, 0.7, 26);
    let r = locate_transitions(&ModelSpec::dicke(n, 1.0, 0.5)?, &path, 1e-7, Method::Sas)?;
    r.critical_coupling.ok_or_else(|| Error::Fit(format!("no SAS transition for N = {n}")))
}

fn c1_table2() -> Outcome {
    let quantum = [(20, 0.5677), (40, 0.5432), (100, 0.5236)];
    let sas = [(20, 0.5522), (40, 0.5343), (100, 0.5204)];
    let mut out = Vec::new();
    for (label, rows, f) in [("quantum", quantum, dicke_quantum_gc as fn(usize) -> Result<f64>), ("sas", sas, dicke_sas_gc)] {
        let mut worst: f64 = 0.0;
        let mut got = Vec::new();
        for (n, want) in rows {
            let g = f(n)?;
            worst = worst.max((g - want).abs());
            got.push(format!("N={n}: {g:.4}"));
        }
        out.push(check(if label == "quantum" { "quantum" } else { "sas" }, worst <= 0.002, format!("{} (max dev {worst:.1e})", got.join(", "))));
    }
    Ok(out)
}

fn fit_line(samples: &[(f64, f64)], offset: f64) -> Result<FitResult> {
    fit_critical_exponent(samples, offset)
}

fn c2_quantum_exponent() -> Outcome {
    let ns = [10usize, 20, 40, 100, 200, 400];
    let mut samples = Vec::new();
    for n in ns {
        samples.push((n as f64, dicke_quantum_gc(n)?));
    }
    let f = fit_line(&samples, 0.5)?;
    Ok(vec![
        check("slope", (f.exponent + 2.0 / 3.0).abs() <= 0.08, format!("slope {:.4}", f.exponent)),
        check("intercept", (f.log_prefactor - 0.5f64.ln()).abs() <= 0.15, format!("intercept {:.4}", f.log_prefactor)),
    ])
}

fn c3_sas_exponents() -> Outcome {
    let target = -11.0 / 21.0;
    let mut samples = Vec::new();
    for n in [200usize, 300, 400, 600, 800, 1000] {
        samples.push((n as f64, dicke_sas_gc(n)?));
    }
    let d = fit_line(&samples, 0.5)?;

    // V at double resonance along μ₁₂ = μ₁₃; the fitted coupling is √(μ₁₂² + μ₁₃²).
    let v = ModelSpec::three_level(ModelKind::VFull, 2, [0.0, 1.0, 1.0], [0.3, 0.3, 0.0])?;
    let (a, b) = (0.45 / SQRT_2, 0.7 / SQRT_2);
    let path = ParamPath { params: vec![Param::Mu12, Param::Mu13], start: vec![a, a], end: vec![b, b], samples: 26 };
    let mut vs = Vec::new();
    for n in [100usize, 200, 400, 700, 1000, 1500, 2000] {
        let r = locate_transitions(&v.with_n_atoms(n)?, &path, 1e-7, Method::Sas)?;
        let t = r.critical_coupling.ok_or_else(|| Error::Fit(format!("no V transition for N = {n}")))?;
        vs.push((n as f64, t * SQRT_2));
    }
    let vf = fit_line(&vs, 0.5)?;
    let (lo, hi) = vf.confidence_interval;
    Ok(vec![
        check("dicke slope", (d.exponent - target).abs() <= 0.03, format!("dicke slope {:.4}", d.exponent)),
        check("dicke log-prefactor", (d.log_prefactor + 0.5).abs() <= 0.1, format!("dicke log-prefactor {:.4}", d.log_prefactor)),
        check("v slope", (vf.exponent - target).abs() <= 0.03, format!("V slope {:.4}", vf.exponent)),
        check("v interval", lo <= target && target <= hi, format!("V 95% CI [{lo:.4}, {hi:.4}]")),
        check("v log-prefactor", (vf.log_prefactor + 1.5).abs() <= 0.1, format!("V log-prefactor {:.4}", vf.log_prefactor)),
    ])
}

fn c4_triple_point() -> Outcome {
    let (mut residual, mut spread, mut amp): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for n in 2..=6 {
        let mut energies = Vec::new();
        for m in 0..=2 {
            let (basis, s) = triple_point_ground_state(n, m)?;
            let (_, h) = build(&basis.spec, SectorSpec::m(m))?;
            let e = s.expect(&h)?.re;
            residual = residual.max(s.residual(&h, e));
            energies.push(e);
            let g = lowest_eigenpairs(&h, 1, 1e-13)?;
            let ov = g.ground_state().inner(&s)?;
            let phase = ov / ov.norm();
            let d = g.ground_state().amplitudes.iter().zip(&s.amplitudes).map(|(a, b)| (a * phase - b).norm()).fold(0.0, f64::max);
            amp = amp.max(d);
        }
        let hi = energies.iter().cloned().fold(f64::MIN, f64::max);
        let lo = energies.iter().cloned().fold(f64::MAX, f64::min);
        spread = spread.max(hi - lo);
    }
    Ok(vec![
        check("residual", residual <= 1e-10, format!("max residual {residual:.1e}")),
        check("degeneracy", spread <= 1e-10, format!("energy spread {spread:.1e}")),
        check("amplitudes", amp <= 1e-9, format!("amplitude error {amp:.1e}")),
    ])
}

fn c5_xi_benchmark() -> Outcome {
    let spec = ModelSpec::three_level(ModelKind::XiRwa, 2, [0.0, 1.0, 2.0], [0.8, 0.0, 1.0])?;
    let path = ParamPath { params: vec![Param::Mu23, Param::Mu12], start: vec![1.0, 0.8], end: vec![1.6, 1.4], samples: 61 };
    let q = locate_transitions(&spec, &path, 1e-4, Method::Quantum)?;
    let p = locate_transitions(&spec, &path, 1e-4, Method::Projected)?;
    let first = q.transitions.first().map_or(f64::NAN, |t| t.tau_c);
    let second = q.transitions.get(1).map_or(f64::NAN, |t| t.tau_c);
    let proj = p.transitions.first().map_or(f64::NAN, |t| t.tau_c);
    Ok(vec![
        check(
            "quantum first transition",
            (first - 1.28).abs() <= 0.01,
            format!("quantum first {first:.4} (second {second:.4})"),
        ),
        check("projected", (proj - 1.20).abs() <= 0.01, format!("projected {proj:.4}")),
    ])
}

fn c6_separatrix_loci() -> Outcome {
    let n = 40;
    let grid = |hi: f64| -> Vec<f64> { (0..200).map(|i| hi * i as f64 / 199.0).collect() };
    let mut out = Vec::new();
    for (kind, hi, edge) in [(ModelKind::XiRwa, 2.0, 1.0), (ModelKind::XiFull, 1.0, 0.5)] {
        let xs = grid(hi);
        let cell = xs[1] - xs[0];
        let corner = SQRT_2 * hi / 2.0;
        let template = ModelSpec::three_level(kind, n, [0.0, 1.0, 2.0], [0.0, 0.0, 0.0])?;
        let (mut rows, mut worst, mut missing) = (0, 0.0f64, 0);
        for &y in xs.iter().filter(|&&y| y < corner) {
            let t = template.with_param(Param::Mu23, y)?;
            let i = if kind.is_rwa() {
                normal_departure_on_row(&t, Param::Mu12, &xs, 20)?
            } else {
                variational_departure_on_row(&t, Family::Full3Coh, Param::Mu12, &xs, 0, 1e-10)?
            };
            rows += 1;
            match i {
                // Distance from the edge to the nearest point of the bracketing cell.
                Some(i) => worst = worst.max((xs[i] - edge).max(edge - xs[i + 1]).max(0.0)),
                None => missing += 1,
            }
        }
        out.push(check(
            if kind.is_rwa() { "xi rwa" } else { "xi full" },
            missing == 0 && worst <= cell,
            format!("{}: {rows} rows, {missing} without a locus, max offset {worst:.1e} (cell {cell:.2e})", kind.name()),
        ));
    }
    Ok(out)
}

fn c7_table() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for model in [TableModel::Dicke, TableModel::Tcm] {
        for n in [2, 6, 10] {
            for x in [0.5, 1.0, 2.0] {
                let spec = match model {
                    TableModel::Dicke => ModelSpec::dicke(n, 1.0, 0.5 * x)?,
                    TableModel::Tcm => ModelSpec::tcm(n, 1.0, x)?,
                };
                let basis = enumerate_basis(&spec, SectorSpec::full(120))?;
                let gc = two_level_gamma_c(&spec)?;
                for fam in [StateFamily::Coherent, StateFamily::SasPlus, StateFamily::SasMinus] {
                    let sv = table_state(fam, &basis)?;
                    for id in ObservableId::TABLE {
                        let numeric = quantum_observable(&sv, &basis, id)?;
                        let closed = closed_form_observable(fam, id, x, gc, n, model)?;
                        worst = worst.max((numeric - closed).abs());
                        count += 1;
                    }
                }
            }
        }
    }
    Ok(vec![check("rows", worst <= 1e-8, format!("{count} comparisons, max error {worst:.1e}"))])
}

fn c8_tcm_fluctuations() -> Outcome {
    let n = 20;
    let omega_a: f64 = 0.8;
    let gc = omega_a.sqrt();
    let (mut fluct_ok, mut checked, mut min_f, mut zero_f, mut min_same) = (true, 0, 1.0f64, 0, 1.0f64);
    let mut first_bad = String::new();
    for k in 0..=200 {
        let g = k as f64 / 100.0;
        let spec = ModelSpec::tcm(n, omega_a, g)?;
        let (sec, q) = block_ground(&spec, 3 * n + 10)?;
        let (qb, _) = build(&spec, sec)?;
        let var_q = quantum_observable(q.ground_state(), &qb, ObservableId::VarNPh)? / n as f64;

        let pr = tcm_projected_ground(&spec)?;
        let (pb, _) = build(&spec, SectorSpec::lambda(pr.lambda))?;
        let ps = embed_variational_state(&pr.point, &pb)?;
        let var_p = quantum_observable(&ps, &pb, ObservableId::VarNPh)? / n as f64;
        // A coherent state has Poisson photon statistics: (Δn)² = |α|² = q²/2.
        let c = tcm_critical_data(&spec)?;
        let var_c = c.q_c * c.q_c / 2.0 / n as f64;

        if g > gc {
            checked += 1;
            if !((var_p - var_q).abs() < (var_c - var_q).abs()) {
                fluct_ok = false;
                if first_bad.is_empty() {
                    first_bad = format!(" (first violation at gamma {g:.2})");
                }
            }
        }
        let fid = if block_label(&sec) == Some(pr.lambda) { q.ground_state().fidelity(&ps)? } else { 0.0 };
        min_f = min_f.min(fid);
        if fid == 0.0 {
            zero_f += 1;
        } else {
            min_same = min_same.min(fid);
        }
    }
    Ok(vec![
        check("fluctuations", fluct_ok && checked > 0, format!("{checked} points above gamma_c{first_bad}")),
        check(
            "fidelity",
            min_f >= 0.996,
            format!("min fidelity {min_f:.5}; {zero_f} points in a different lambda block, min {min_same:.5} elsewhere"),
        ),
    ])
}

fn block_label(sec: &SectorSpec) -> Option<usize> {
    cavity_phase::spectra::block_label(sec)
}

fn c9_collapse() -> Outcome {
    let n = 10_000;
    let levels = |mu12: f64| -> Result<Vec<f64>> {
        let spec = ModelSpec::three_level(ModelKind::XiRwa, n, [0.0, 1.0, 2.0], [mu12, 0.0, 1.0])?;
        (0..=5)
            .map(|m| {
                let (_, h) = build(&spec, SectorSpec::m(m))?;
                Ok(lowest_eigenpairs(&h, 1, 1e-12)?.ground_energy())
            })
            .collect()
    };
    let at_one = levels(1.0)?;
    let spread = at_one.iter().cloned().fold(f64::MIN, f64::max) - at_one.iter().cloned().fold(f64::MAX, f64::min);
    let at_half = levels(0.5)?;
    let mut gap = f64::INFINITY;
    for i in 0..at_half.len() {
        for j in 0..i {
            gap = gap.min((at_half[i] - at_half[j]).abs());
        }
    }
    Ok(vec![
        check("collapse", spread < 0.05, format!("spread at mu12=1: {spread:.2e}")),
        check("separation", gap >= 0.4, format!("min gap at mu12=0.5: {gap:.3}")),
    ])
}

fn c10_parity_identity() -> Outcome {
    let mut rng = rand::rngs::StdRng::seed_from_u64(10);
    let n = 10;
    let kinds = [ModelKind::Dicke, ModelKind::Tcm, ModelKind::XiRwa, ModelKind::XiFull, ModelKind::LambdaFull, ModelKind::VFull];
    let (mut worst_lib, mut worst_embed): (f64, f64) = (0.0, 0.0);
    for i in 0..100 {
        let kind = kinds[i % kinds.len()];
        let (spec, family, params) = if kind.is_two_level() {
            let spec = if kind == ModelKind::Dicke {
                ModelSpec::dicke(n, rng.random_range(0.2..1.5), rng.random_range(0.0..1.5))?
            } else {
                ModelSpec::tcm(n, rng.random_range(-1.0..1.5), rng.random_range(0.0..1.5))?
            };
            let fam = if kind == ModelKind::Dicke { Family::DickeCoh } else { Family::TcmCoh };
            let p = Params::TwoLevel {
                q: rng.random_range(-2.0..2.0),
                p: rng.random_range(-1.5..1.5),
                theta: rng.random_range(0.0..PI),
                phi: rng.random_range(0.0..2.0 * PI),
            };
            (spec, fam, p)
        } else {
            let w2 = rng.random_range(0.1..1.5);
            let w3 = w2 + rng.random_range(0.1..1.0);
            let mut mu = [rng.random_range(0.0..1.5), rng.random_range(0.0..1.5), rng.random_range(0.0..1.5)];
            match kind.configuration() {
                Some(Configuration::Xi) => mu[1] = 0.0,
                Some(Configuration::Lambda) => mu[0] = 0.0,
                _ => mu[2] = 0.0,
            }
            let spec = ModelSpec::three_level(kind, n, [0.0, w2, w3], mu)?;
            let fam = if kind.is_rwa() { Family::Rwa3Coh } else { Family::Full3Coh };
            let p = Params::ThreeLevel {
                rho: rng.random_range(0.0..1.6),
                phi: rng.random_range(0.0..2.0 * PI),
                rho2: rng.random_range(0.0..1.5),
                phi2: rng.random_range(0.0..2.0 * PI),
                rho3: rng.random_range(0.0..1.5),
                phi3: rng.random_range(0.0..2.0 * PI),
            };
            (spec, fam, p)
        };
        let e_coh = energy_surface(&spec, family, &params)?;
        let s = product_state(&spec, &params)?;
        let h = CoherentHamiltonian::from_spec(&spec);
        let f = h.parity_overlap(&s);
        let mix = |f: f64, ep: f64, em: f64| ((1.0 + f) * ep + (1.0 - f) * em) / 2.0;
        worst_lib = worst_lib.max((e_coh - mix(f, h.sas_energy(&s, true), h.sas_energy(&s, false))).abs());

        // Independent oracle: parity parts of the state embedded in a truncated basis.
        let basis = enumerate_basis(&spec, SectorSpec::full(60))?;
        let ham = assemble_hamiltonian(&spec, &basis)?;
        let full = embed_product(&s, None, &basis)?;
        let f_num: f64 = full
            .amplitudes
            .iter()
            .zip(&basis.labels)
            .map(|(a, l)| if excitation(&spec, l) % 2 == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum();
        let e = |plus| -> Result<f64> { Ok(spec.per_particle(embed_product(&s, Some(plus), &basis)?.expect(&ham)?.re)) };
        worst_embed = worst_embed.max((e_coh - mix(f_num, e(true)?, e(false)?)).abs());
    }
    Ok(vec![
        check("library", worst_lib <= 1e-10, format!("max violation {worst_lib:.1e}")),
        check("embedded", worst_embed <= 1e-10, format!("embedded-state violation {worst_embed:.1e}")),
    ])
}

fn main() {
    let criteria: [(u8, &str, fn() -> Outcome); 10] = [
        (1, "Table 2 critical couplings", c1_table2),
        (2, "quantum critical exponent", c2_quantum_exponent),
        (3, "SAS critical exponents", c3_sas_exponents),
        (4, "triple point", c4_triple_point),
        (5, "Xi transition benchmark", c5_xi_benchmark),
        (6, "separatrix consistency", c6_separatrix_loci),
        (7, "observable table", c7_table),
        (8, "TCM fluctuations and fidelity", c8_tcm_fluctuations),
        (9, "spectrum collapse", c9_collapse),
        (10, "parity decomposition identity", c10_parity_identity),
    ];
    let selected: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = Vec::new();
    for (id, name, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let t0 = Instant::now();
        let (pass, detail) = match run() {
            Ok(checks) => {
                for c in checks.iter().filter(|c| !c.pass) {
                    if !KNOWN_RED.contains(&(id, c.name)) {
                        unexpected.push(format!("{id}: {}", c.name));
                    }
                }
                let pass = checks.iter().all(|c| c.pass);
                let detail = checks.iter().map(|c| format!("{} [{}]", c.detail, if c.pass { "ok" } else { "fail" })).collect::<Vec<_>>();
                (pass, detail.join("; "))
            }
            Err(e) => {
                unexpected.push(format!("{id}: error"));
                (false, format!("error: {e}"))
            }
        };
        println!("{} criterion {id} ({name}): {detail} [{:.1?}]", if pass { "PASS" } else { "FAIL" }, t0.elapsed());
    }
    if !unexpected.is_empty() {
        println!("unexpected failures: {}", unexpected.join(", "));
        std::process::exit(1);
    }
}
