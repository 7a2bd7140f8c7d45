use cavity_phase::observables::*;
use cavity_phase::spectra::{build, lowest_eigenpairs};
use cavity_phase::*;

fn table_check(spec: &ModelSpec, model: TableModel, n_max: usize) -> f64 {
    let basis = enumerate_basis(spec, SectorSpec::full(n_max)).unwrap();
    let gc = two_level_gamma_c(spec).unwrap();
    let x = spec.gamma().unwrap() / gc;
    let mut worst: f64 = 0.0;
    for fam in [StateFamily::Coherent, StateFamily::SasPlus, StateFamily::SasMinus] {
        let sv = table_state(fam, &basis).unwrap();
        for id in ObservableId::TABLE {
            let numeric = quantum_observable(&sv, &basis, id).unwrap();
            let closed = closed_form_observable(fam, id, x, gc, spec.n_atoms, model).unwrap();
            let err = (numeric - closed).abs();
            assert!(err <= 1e-8, "{:?} {} {} x={x} N={}: numeric {numeric} closed {closed}", model, fam.name(), id, spec.n_atoms);
            worst = worst.max(err);
        }
    }
    worst
}

#[test]
fn table_rows_match_embedded_states_dicke() {
    for n in [2, 6, 10] {
        for x in [0.5, 1.0, 2.0] {
            let spec = ModelSpec::dicke(n, 1.0, 0.5 * x).unwrap();
            table_check(&spec, TableModel::Dicke, 120);
        }
    }
}

#[test]
fn table_rows_match_embedded_states_tcm() {
    for n in [2, 6, 10] {
        for x in [0.5, 1.0, 2.0] {
            let spec = ModelSpec::tcm(n, 1.0, x).unwrap();
            table_check(&spec, TableModel::Tcm, 120);
        }
    }
}

#[test]
fn simple_expectations() {
    let spec = ModelSpec::tcm(20, 0.8, 0.3).unwrap();
    let (basis, h) = build(&spec, SectorSpec::lambda(0)).unwrap();
    let g = lowest_eigenpairs(&h, 1, 1e-12).unwrap();
    let (m, v) = expectation_and_fluctuation(g.ground_state(), &operator_matrix(OpId::Jz, &basis).unwrap()).unwrap();
    assert!((m + 10.0).abs() < 1e-12 && v.abs() < 1e-12);
    let (m, v) = expectation_and_fluctuation(g.ground_state(), &operator_matrix(OpId::NPh, &basis).unwrap()).unwrap();
    assert!(m.abs() < 1e-15 && v.abs() < 1e-15);
    let other = enumerate_basis(&spec, SectorSpec::lambda(1)).unwrap();
    assert!(expectation_and_fluctuation(g.ground_state(), &operator_matrix(OpId::NPh, &other).unwrap()).is_err());
}

#[test]
fn closed_form_examples() {
    for n in [3, 50] {
        let jz = closed_form_observable(StateFamily::Coherent, ObservableId::Jz, 1.0, 0.5, n, TableModel::Dicke).unwrap();
        assert_eq!(jz, -(n as f64) / 2.0);
        for x in [0.3, 1.0, 1.7, 4.0] {
            for fam in [StateFamily::SasPlus, StateFamily::SasMinus] {
                assert_eq!(closed_form_observable(fam, ObservableId::Q, x, 0.5, n, TableModel::Dicke).unwrap(), 0.0);
            }
            let vq = closed_form_observable(StateFamily::Coherent, ObservableId::VarQ, x, 0.5, n, TableModel::Dicke).unwrap();
            assert_eq!(vq, 0.5);
        }
    }
    assert!(closed_form_observable(StateFamily::Coherent, ObservableId::A11, 2.0, 0.5, 4, TableModel::Dicke).is_err());
    assert!(closed_form_observable(StateFamily::Coherent, ObservableId::Jz, 0.0, 0.5, 4, TableModel::Dicke).is_err());
}

#[test]
fn sas_rows_approach_coherent_rows() {
    // Rows inherited from the coherent column as 𝓕 → 0 (field means and field-matter means).
    let rows = [ObservableId::Jz, ObservableId::NPh, ObservableId::Lambda, ObservableId::VarP, ObservableId::VarNPh, ObservableId::JzNPhCorr];
    for id in rows {
        let c = |n| closed_form_observable(StateFamily::Coherent, id, 1.5, 0.5, n, TableModel::Dicke).unwrap();
        let s = |n| closed_form_observable(StateFamily::SasPlus, id, 1.5, 0.5, n, TableModel::Dicke).unwrap();
        let rel = |n: usize| ((s(n) - c(n)) / c(n).abs().max(1.0)).abs();
        assert!(rel(200) < 1e-12, "{id}");
        assert!(rel(200) <= rel(5));
    }
}

#[test]
fn overlap_limits() {
    let (p, _) = coherent_sas_overlap(0.0, 0.5, 10);
    assert_eq!(p, 1.0);
    let (p, m) = coherent_sas_overlap(1e3, 0.5, 10);
    assert!((p - 0.5).abs() < 1e-12 && (m - 0.5).abs() < 1e-12);
    let (p, m) = coherent_sas_overlap(1.2, 0.5, 100_000);
    assert!((p - 0.5).abs() < 1e-12 && (m - 0.5).abs() < 1e-12);
}

#[test]
fn normal_criterion_ratios() {
    let free = ModelSpec::three_level(ModelKind::VFull, 6, [0.0, 1.0, 1.0], [0.0, 0.0, 0.0]).unwrap();
    let (basis, h) = build(&free, SectorSpec::parity(true, 10)).unwrap();
    let g = lowest_eigenpairs(&h, 1, 1e-12).unwrap();
    let (a, f) = normal_criterion(g.ground_state(), &basis).unwrap();
    assert!(a.abs() < 1e-14 && f.abs() < 1e-14);
    assert!(is_normal((a, f), 0.02));

    let two = ModelSpec::dicke(4, 1.0, 0.2).unwrap();
    let b2 = enumerate_basis(&two, SectorSpec::full(4)).unwrap();
    let sv = StateVector::from_real(&vec![1.0; b2.dim()], b2.id).unwrap();
    assert!(normal_criterion(&sv, &b2).is_err());
}

#[test]
fn quantum_fluctuations_stay_finite_across_transition() {
    for i in 0..=12 {
        let g = 0.3 + 0.05 * i as f64;
        let spec = ModelSpec::dicke(8, 1.0, g).unwrap();
        let (basis, h) = build(&spec, SectorSpec::parity(true, 60)).unwrap();
        let st = lowest_eigenpairs(&h, 1, 1e-11).unwrap();
        let n = quantum_observable(st.ground_state(), &basis, ObservableId::NPh).unwrap();
        let v = quantum_observable(st.ground_state(), &basis, ObservableId::VarNPh).unwrap();
        assert!(n.is_finite() && v.is_finite() && n >= 0.0 && v >= 0.0);
        assert!(v < 60.0);
    }
}
