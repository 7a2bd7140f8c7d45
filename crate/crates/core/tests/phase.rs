use cavity_phase::phase::*;
use cavity_phase::spectra::{block_ground, build, ParamPath};
use cavity_phase::{assemble_hamiltonian, Error, ModelKind, ModelSpec, Param, SectorSpec, StateVector};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn xi(n: usize, mu12: f64, mu23: f64) -> ModelSpec {
    ModelSpec::three_level(ModelKind::XiRwa, n, [0.0, 1.0, 2.0], [mu12, 0.0, mu23]).unwrap()
}

#[test]
fn xi_separatrix_values() {
    let y = separatrix_ordinate(ModelKind::XiRwa, 1.0, 2.0, 1.0).unwrap().unwrap();
    assert!((y - 1.0).abs() < 1e-15);
    let y = separatrix_ordinate(ModelKind::XiRwa, 1.0, 2.0, 2.0).unwrap().unwrap();
    let expected = (1.0 - (2.0 - 2f64.sqrt()).powi(2)).sqrt();
    assert!((y - expected).abs() < 1e-14);
    assert!((y - 0.8106).abs() < 1e-3);
    // At the corner the Heaviside factor is zero.
    let y = separatrix_ordinate(ModelKind::XiRwa, 1.0, 2.0, 2f64.sqrt()).unwrap().unwrap();
    assert_eq!(y, 1.0);
    // Beyond the arc there is no solution.
    assert_eq!(separatrix_ordinate(ModelKind::XiRwa, 1.0, 2.0, 2.5).unwrap(), None);
}

#[test]
fn lambda_and_v_separatrices() {
    // Λ with ω21 = 0.2, ω31 = 1: vertical edge μ13 = 1 up to μ23 = √0.2.
    let y = separatrix_ordinate(ModelKind::LambdaRwa, 0.2, 1.0, 0.3).unwrap().unwrap();
    assert!((y - 1.0).abs() < 1e-15);
    let y = separatrix_ordinate(ModelKind::LambdaRwa, 0.2, 1.0, 1.0).unwrap().unwrap();
    assert!((y - (1.0 - (1.0 - 0.2f64.sqrt()).powi(2)).sqrt()).abs() < 1e-14);
    // V: ellipse μ12²/ω21 + μ13²/ω31 = 1.
    for a in [0.0, 0.3, 0.7, 1.0] {
        let y = separatrix_ordinate(ModelKind::VRwa, 1.0, 1.0, a).unwrap().unwrap();
        assert!((a * a + y * y - 1.0).abs() < 1e-14);
    }
    assert_eq!(separatrix_ordinate(ModelKind::VRwa, 1.0, 1.0, 1.2).unwrap(), None);
}

#[test]
fn full_separatrices_are_halved() {
    for (rwa, full, w21, w31) in [
        (ModelKind::XiRwa, ModelKind::XiFull, 1.0, 2.0),
        (ModelKind::LambdaRwa, ModelKind::LambdaFull, 0.2, 1.0),
        (ModelKind::VRwa, ModelKind::VFull, 1.0, 1.0),
    ] {
        for a in [0.1, 0.5, 0.9, 1.3, 1.6] {
            let r = separatrix_ordinate(rwa, w21, w31, a).unwrap();
            let f = separatrix_ordinate(full, w21, w31, a / 2.0).unwrap();
            match (r, f) {
                (Some(r), Some(f)) => assert!((f - r / 2.0).abs() < 1e-15),
                (None, None) => {}
                other => panic!("{rwa} vs {full} at {a}: {other:?}"),
            }
        }
    }
}

#[test]
fn two_level_separatrices() {
    let g = separatrix_ordinate(ModelKind::Dicke, 0.0, 0.0, 1.0).unwrap().unwrap();
    assert!((g - 0.5).abs() < 1e-15);
    let g = separatrix_ordinate(ModelKind::Tcm, 0.0, 0.0, -0.49).unwrap().unwrap();
    assert!((g - 0.7).abs() < 1e-15);
    assert_eq!(separatrix_ordinate(ModelKind::Dicke, 0.0, 0.0, -1.0).unwrap(), None);
}

#[test]
fn separatrix_rejects_bad_frequencies() {
    for (w21, w31) in [(0.0, 1.0), (1.0, -1.0), (f64::NAN, 1.0)] {
        assert!(matches!(separatrix_ordinate(ModelKind::XiRwa, w21, w31, 0.5), Err(Error::InvalidParameter(_))));
    }
}

#[test]
fn v_polyline_is_the_ellipse() {
    let pts = separatrix_polyline(ModelKind::VRwa, 1.0, 1.0, 0.0, 1.5, 31).unwrap();
    assert!(pts.len() < 31 && pts.len() > 15);
    for (x, y) in pts {
        assert!((x * x + y * y - 1.0).abs() < 1e-12);
    }
}

fn basis_state(dim: usize, k: usize, id: u64) -> StateVector {
    let mut v = vec![0.0; dim];
    v[k] = 1.0;
    StateVector::from_real(&v, id).unwrap()
}

#[test]
fn fidelity_limits() {
    let a = basis_state(3, 0, 7);
    let b = basis_state(3, 1, 7);
    let out = fidelity_and_susceptibility(&[a.clone(), a.clone(), b], 0.01).unwrap();
    assert_eq!(out.len(), 2);
    assert_eq!(out[0], (1.0, 0.0));
    assert_eq!(out[1].0, 0.0);
    assert!((out[1].1 - 2.0 / 1e-4).abs() < 1e-6);
}

#[test]
fn fidelity_errors() {
    let a = basis_state(3, 0, 7);
    let c = basis_state(3, 0, 8);
    assert!(matches!(fidelity_and_susceptibility(&[a.clone(), c], 0.01), Err(Error::BasisMismatch(_))));
    assert!(matches!(fidelity_and_susceptibility(&[a.clone(), a], 0.0), Err(Error::InvalidParameter(_))));
}

#[test]
fn tcm_first_crossing_has_zero_fidelity() {
    // λ = 0 → 1 for N = 2 at resonance happens at γ = 1; within one block the
    // states are smooth, across it they are orthogonal.
    let spec = ModelSpec::tcm(2, 1.0, 0.0).unwrap();
    let path = ParamPath::line(Param::Gamma, 0.5, 1.5, 11);
    let r = locate_transitions(&spec, &path, 1e-5, Method::Quantum).unwrap();
    let t = &r.transitions[0];
    assert_eq!(t.delta_label, Some(1));
    assert_eq!(t.order, Order::First);
    let dt = path.step();
    let crossing = r.samples.iter().position(|s| s.chi.unwrap_or(0.0) > 0.99 * 2.0 / (dt * dt)).unwrap();
    assert!(r.samples[crossing].tau <= t.tau_c && t.tau_c <= r.samples[crossing + 1].tau);
    for s in &r.samples[..crossing] {
        assert!(s.chi.unwrap() < 1e-6);
    }
}

#[test]
fn xi_two_atom_transitions() {
    let spec = xi(2, 0.8, 1.0);
    let path = ParamPath { params: vec![Param::Mu23, Param::Mu12], start: vec![1.0, 0.8], end: vec![1.6, 1.4], samples: 61 };
    let q = locate_transitions(&spec, &path, 1e-4, Method::Quantum).unwrap();
    // The M = 1 block is {1 ± μ12}: M = 0 → 1 exactly at μ12 = 1.
    assert!((q.transitions[0].tau_c - 1.2).abs() <= 1e-4);
    assert_eq!(q.transitions[0].delta_label, Some(1));
    assert!((q.transitions[1].tau_c - 1.28).abs() <= 0.01);
    assert!(q.transitions.iter().all(|t| t.order == Order::First && t.chi_peak > 0.0));
    let p = locate_transitions(&spec, &path, 1e-4, Method::Projected).unwrap();
    assert!((p.transitions[0].tau_c - 1.2).abs() <= 1e-4);
}

#[test]
fn tcm_separatrix_path_orders() {
    let coh = |spec: ModelSpec, path: ParamPath| locate_transitions(&spec, &path, 1e-4, Method::Coherent).unwrap();
    // Path V: through the origin, pole to pole.
    let v = coh(ModelSpec::tcm(20, 1.0, 0.0).unwrap(), ParamPath::line(Param::OmegaA, -1.0, 1.0, 40));
    assert_eq!(v.transitions.len(), 1);
    assert_eq!(v.transitions[0].order, Order::First);
    assert!(v.transitions[0].tau_c.abs() < 1e-3);
    // Paths I-IV cross the parabolas ω_A = ±γ².
    let paths = [
        (ModelSpec::tcm(20, 1.0, 0.5).unwrap(), ParamPath::line(Param::Gamma, 0.5, 1.5, 41), 1.0),
        (ModelSpec::tcm(20, -1.0, 0.5).unwrap(), ParamPath::line(Param::Gamma, 0.5, 1.5, 41), 1.0),
        (ModelSpec::tcm(20, 1.0, 1.0).unwrap(), ParamPath::line(Param::OmegaA, 0.5, 1.5, 41), 1.0),
        (ModelSpec::tcm(20, 1.0, 1.0).unwrap(), ParamPath::line(Param::OmegaA, -1.5, -0.5, 41), -1.0),
    ];
    for (spec, path, at) in paths {
        let r = coh(spec, path);
        assert_eq!(r.transitions.len(), 1, "{:?}", r.transitions);
        assert_eq!(r.transitions[0].order, Order::Second);
        assert!((r.transitions[0].tau_c - at).abs() < 1e-3);
    }
}

#[test]
fn chi_peak_stable_under_halved_step() {
    let spec = ModelSpec::dicke(20, 1.0, 0.5).unwrap();
    let path = ParamPath::line(Param::Gamma, 0.0, 0.7, 71);
    let mut o = LocateOptions::new(1e-3, Method::Quantum);
    let a = locate_transitions_with(&spec, &path, &o).unwrap();
    o.delta_tau = 5e-4;
    let b = locate_transitions_with(&spec, &path, &o).unwrap();
    assert_eq!(a.transitions.len(), 1, "{:?}", a.transitions);
    assert_eq!(b.transitions.len(), 1, "{:?}", b.transitions);
    assert!((a.transitions[0].tau_c - b.transitions[0].tau_c).abs() <= 1e-3);
    assert_eq!(a.transitions[0].order, Order::Second);
    assert!(a.x.unwrap() > 1.0);
}

#[test]
fn xi_right_of_edge_loci_approach_one() {
    // μ12 of the M = 1 → 2 transition at fixed μ23 moves down towards 1.
    let mut last = f64::INFINITY;
    for n in [2, 4, 6, 8] {
        let path = ParamPath::line(Param::Mu12, 0.9, 1.6, 36);
        let mut o = LocateOptions::new(1e-5, Method::Quantum);
        o.block_cap = Some(2 * n + 4);
        let r = locate_transitions_with(&xi(n, 0.9, 0.5), &path, &o).unwrap();
        assert!((r.transitions[0].tau_c - 1.0).abs() < 1e-4);
        let t = &r.transitions[1];
        assert_eq!(t.delta_label, Some(1));
        assert!(t.tau_c < last, "N={n}: {} !< {last}", t.tau_c);
        last = t.tau_c;
    }
    assert!(last > 1.0);
}

#[test]
fn normal_departure_is_the_vertical_edge() {
    let xs: Vec<f64> = (0..101).map(|i| 2.0 * i as f64 / 100.0).collect();
    for n in [3, 10] {
        let i = normal_departure_on_row(&xi(n, 0.0, 0.7), Param::Mu12, &xs, 2 * n + 4).unwrap().unwrap();
        assert!(xs[i] <= 1.0 && 1.0 <= xs[i + 1]);
    }
}

#[test]
fn fit_recovers_exact_line() {
    let s: Vec<(f64, f64)> = [10.0, 20.0, 50.0, 100.0, 400.0].iter().map(|&n: &f64| (n, 0.5 + 0.5 * n.powf(-2.0 / 3.0))).collect();
    let f = fit_critical_exponent(&s, 0.5).unwrap();
    assert!((f.exponent + 2.0 / 3.0).abs() < 1e-12);
    assert!((f.log_prefactor - 0.5f64.ln()).abs() < 1e-12);
    assert!((f.r_squared - 1.0).abs() < 1e-12);
    assert!(f.confidence_interval.0 <= f.exponent && f.exponent <= f.confidence_interval.1);
}

#[test]
fn fit_errors() {
    let few = [(10.0, 0.6), (20.0, 0.55), (40.0, 0.53)];
    assert!(matches!(fit_critical_exponent(&few, 0.5), Err(Error::Fit(_))));
    let same = [(10.0, 0.6), (10.0, 0.55), (10.0, 0.53), (10.0, 0.52)];
    assert!(matches!(fit_critical_exponent(&same, 0.5), Err(Error::Fit(_))));
    let below = [(10.0, 0.6), (20.0, 0.55), (40.0, 0.4), (80.0, 0.52)];
    assert!(matches!(fit_critical_exponent(&below, 0.5), Err(Error::Fit(_))));
}

proptest! {
    #[test]
    fn fit_interval_brackets_slope(noise in proptest::collection::vec(-0.05f64..0.05, 6), slope in -1.0f64..-0.2) {
        let ns = [10.0f64, 20.0, 40.0, 80.0, 160.0, 320.0];
        let s: Vec<(f64, f64)> = ns.iter().zip(&noise).map(|(&n, e)| (n, 0.5 + (slope * n.ln() + e).exp())).collect();
        let f = fit_critical_exponent(&s, 0.5).unwrap();
        prop_assert!(f.confidence_interval.0 <= f.exponent && f.exponent <= f.confidence_interval.1);
        prop_assert!((0.0..=1.0).contains(&f.r_squared));
    }

    #[test]
    fn fidelity_symmetric_and_phase_blind(re in proptest::collection::vec(-1.0f64..1.0, 8), im in proptest::collection::vec(-1.0f64..1.0, 8), phase in 0.0f64..6.3) {
        prop_assume!(re.iter().map(|x| x.abs()).sum::<f64>() > 0.1);
        let a = StateVector::new(re.iter().zip(&im).map(|(r, i)| C64::new(*r, *i)).collect(), 1).unwrap();
        let b = StateVector::new(im.iter().zip(re.iter().rev()).map(|(r, i)| C64::new(*r, *i + 0.3)).collect(), 1).unwrap();
        let rot = StateVector { amplitudes: b.amplitudes.iter().map(|z| z * C64::from_polar(1.0, phase)).collect(), basis_id: 1 };
        let ab = fidelity_and_susceptibility(&[a.clone(), b.clone()], 0.1).unwrap()[0];
        let ba = fidelity_and_susceptibility(&[b, a.clone()], 0.1).unwrap()[0];
        let ar = fidelity_and_susceptibility(&[a, rot], 0.1).unwrap()[0];
        prop_assert!((ab.0 - ba.0).abs() < 1e-12);
        prop_assert!((ab.0 - ar.0).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab.0));
    }
}

#[test]
fn triple_point_states() {
    for n in 2..=6 {
        let mut energies = Vec::new();
        for m in 0..=2 {
            let (basis, s) = triple_point_ground_state(n, m).unwrap();
            assert!((s.norm() - 1.0).abs() < 1e-14);
            let h = assemble_hamiltonian(&basis.spec, &basis).unwrap();
            let e = s.expect(&h).unwrap().re;
            assert!(s.residual(&h, e) <= 1e-10);
            energies.push(basis.spec.per_particle(e));
            // The block ground state is the same ray.
            let (_, r) = block_ground(&basis.spec, 2).unwrap();
            let (_, hm) = build(&basis.spec, SectorSpec::m(m)).unwrap();
            let g = cavity_phase::spectra::lowest_eigenpairs(&hm, 1, 1e-13).unwrap();
            assert!((g.ground_energy() - e).abs() < 1e-10);
            assert!((g.ground_state().fidelity(&s).unwrap() - 1.0).abs() < 1e-10);
            assert!((r.ground_energy() - e).abs() < 1e-10);
        }
        let spread = energies.iter().cloned().fold(f64::MIN, f64::max) - energies.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread <= 1e-10);
    }
}

#[test]
fn triple_point_m2_amplitudes_for_four_atoms() {
    let (basis, s) = triple_point_ground_state(4, 2).unwrap();
    let l = |nu, q, r| basis.index_of(&cavity_phase::Label::three(nu, q, r)).unwrap();
    let amp = |i: usize| s.amplitudes[i].re;
    assert!((amp(l(0, 3, 3)) + 0.25).abs() < 1e-15);
    assert!((amp(l(0, 4, 2)) - 0.4330).abs() < 1e-4);
    assert!((amp(l(1, 4, 3)) - 0.7071).abs() < 1e-4);
    assert!((amp(l(2, 4, 4)) - 0.5).abs() < 1e-15);
}

#[test]
fn triple_point_rejects_untabulated() {
    assert!(triple_point_ground_state(4, 3).is_err());
    assert!(triple_point_ground_state(1, 0).is_err());
}

#[test]
fn grid_single_cell_and_labels() {
    let cells = phase_diagram_grid(&xi(3, 0.0, 0.0), Param::Mu12, &[0.5], Param::Mu23, &[1.0], 8, 0).unwrap();
    assert_eq!(cells.len(), 1);
    assert_eq!(cells[0].label, 0.0);
    assert_eq!(cells[0].chi, None);
    let xs = [0.5, 1.5];
    let cells = phase_diagram_grid(&xi(3, 0.0, 0.0), Param::Mu12, &xs, Param::Mu23, &[0.5], 8, 0).unwrap();
    assert_eq!(cells[0].label, 0.0);
    assert!(cells[1].label >= 1.0);
    assert!((cells[0].chi.unwrap() - 2.0).abs() < 1e-12);
}
