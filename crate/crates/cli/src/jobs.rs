use crate::config::{FieldError, JobConfig, JobKind};
use crate::output::{self, Manifest, Table};
use cavity_phase::observables::{
    closed_form_observable, quantum_observable, table_state, two_level_gamma_c, ObservableId, StateFamily, TableModel,
};
use cavity_phase::phase::{
    fit_critical_exponent, locate_transitions_with, phase_diagram_grid, separatrix_polyline, triple_point_ground_state,
    LocateOptions, TransitionReport,
};
use cavity_phase::spectra::{build, lowest_eigenpairs, spectrum_scan, ParamPath};
use cavity_phase::{enumerate_basis, ModelKind, ModelSpec, Param, SectorSpec};
use rayon::prelude::*;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JobError {
    #[error("invalid configuration:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Validation(Vec<FieldError>),
    #[error("{context}: {source}")]
    Compute {
        context: String,
        #[source]
        source: cavity_phase::Error,
    },
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl JobError {
    /// Process exit code: 2 for bad input, 3 for failures while computing or writing.
    pub fn exit_code(&self) -> i32 {
        match self {
            JobError::Validation(_) => 2,
            _ => 3,
        }
    }
}

trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, JobError>;
}

impl<T> Context<T> for cavity_phase::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, JobError> {
        self.map_err(|source| JobError::Compute { context: what(), source })
    }
}

/// Runs a validated job and writes its artifacts plus `manifest.json` into `out_dir`.
/// `workers` bounds the thread pool used for samples and sizes.
pub fn run_job(config: &JobConfig, out_dir: &Path, workers: Option<usize>) -> Result<Manifest, JobError> {
    config.validate().map_err(JobError::Validation)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder.build().expect("thread pool");
    let tables = pool.install(|| compute(config))?;
    let io = |source| JobError::Io { path: out_dir.display().to_string(), source };
    let files = output::write_tables(out_dir, &tables, config.format).map_err(io)?;
    let manifest = Manifest {
        job: config.kind.name().to_string(),
        config_sha256: output::sha256_hex(config.serialize().as_bytes()),
        files,
    };
    std::fs::write(out_dir.join("manifest.json"), manifest.to_json()).map_err(io)?;
    Ok(manifest)
}

/// All tables of a job, in memory.
pub fn compute(config: &JobConfig) -> Result<Vec<Table>, JobError> {
    let spec = config.model_spec().map_err(|e| JobError::Validation(vec![e]))?;
    match config.kind {
        JobKind::SpectrumScan => spectrum(config, &spec),
        JobKind::PhaseScan => phase_scan(config, &spec),
        JobKind::PhaseDiagramGrid => grid(config, &spec),
        JobKind::ExponentStudy => exponent_study(config, &spec),
        JobKind::TriplePoint => triple_point(config),
        JobKind::ObservableTable => observable_table(config, &spec),
    }
}

fn param_path(config: &JobConfig) -> ParamPath {
    let p = config.path.as_ref().expect("validated");
    ParamPath { params: p.params.clone(), start: p.start.clone(), end: p.end.clone(), samples: p.samples }
}

fn spectrum(config: &JobConfig, spec: &ModelSpec) -> Result<Vec<Table>, JobError> {
    let path = param_path(config);
    let sectors: Vec<SectorSpec> = config
        .scan
        .sectors
        .iter()
        .map(|s| if s.is_finite_block() { *s } else { s.with_cutoff(config.scan.fock_cutoff.expect("validated")) })
        .collect();
    let rows = spectrum_scan(spec, &path, &sectors, config.scan.levels).context(|| format!("spectrum scan along {}", path.describe()))?;
    let mut t = Table::new("spectrum", &["sample", path.params[0].name(), "sector", "level", "energy"]);
    for r in rows {
        t.push(vec![r.sample.into(), r.tau.into(), r.sector.sector.to_string().into(), r.level.into(), r.energy.into()]);
    }
    Ok(vec![t])
}

fn locate_options(config: &JobConfig) -> LocateOptions {
    let mut o = LocateOptions::new(config.scan.delta_tau, config.scan.method);
    o.block_cap = config.scan.block_cap;
    o.fock_cutoff = config.scan.fock_cutoff;
    o.seed = config.seed;
    o
}

fn transitions_table(r: &TransitionReport) -> Table {
    let tau = r.path.params[0].name();
    let mut t = Table::new("transitions", &["index", tau, "order", "chi_peak", "delta_label", "alternatives", "x"]);
    for (i, tr) in r.transitions.iter().enumerate() {
        let alts: Vec<String> = tr.alternatives.iter().map(|a| output::format_num(*a)).collect();
        let x = if i == 0 { r.x } else { None };
        t.push(vec![
            i.into(),
            tr.tau_c.into(),
            tr.order.name().into(),
            tr.chi_peak.into(),
            tr.delta_label.into(),
            alts.join(";").into(),
            x.into(),
        ]);
    }
    t
}

fn phase_scan(config: &JobConfig, spec: &ModelSpec) -> Result<Vec<Table>, JobError> {
    let path = param_path(config);
    let r = locate_transitions_with(spec, &path, &locate_options(config))
        .context(|| format!("{} transitions along {}", config.scan.method, path.describe()))?;
    let mut samples = Table::new("samples", &[path.params[0].name(), "energy", "chi", "label"]);
    for s in &r.samples {
        samples.push(vec![s.tau.into(), s.energy.into(), s.chi.into(), s.label.into()]);
    }
    Ok(vec![transitions_table(&r), samples])
}

/// (abscissa, ordinate) couplings of the analytic separatrix.
fn separatrix_axes(kind: ModelKind) -> (Param, Param) {
    use cavity_phase::Configuration::*;
    match kind.configuration() {
        Some(Xi) => (Param::Mu23, Param::Mu12),
        Some(Lambda) => (Param::Mu23, Param::Mu13),
        Some(V) => (Param::Mu12, Param::Mu13),
        None => (Param::OmegaA, Param::Gamma),
    }
}

fn grid(config: &JobConfig, spec: &ModelSpec) -> Result<Vec<Table>, JobError> {
    let g = config.grid.as_ref().expect("validated");
    let (xs, ys) = (g.x.values(), g.y.values());
    let cap = g.block_cap.unwrap_or(3 * spec.n_atoms + 10);
    let cells = phase_diagram_grid(spec, g.x.param, &xs, g.y.param, &ys, cap, g.fock_cutoff)
        .context(|| format!("{} × {} grid", g.x.param.name(), g.y.param.name()))?;
    let label = if spec.kind.is_rwa() { if spec.kind == ModelKind::Tcm { "lambda" } else { "M" } } else { "parity" };
    let mut t = Table::new("grid", &[g.x.param.name(), g.y.param.name(), "energy", label, "chi"]);
    for c in cells {
        t.push(vec![c.x.into(), c.y.into(), c.energy.into(), c.label.into(), c.chi.into()]);
    }

    let (abscissa, ordinate) = separatrix_axes(spec.kind);
    let (lo, hi) = [&g.x, &g.y]
        .into_iter()
        .find(|a| a.param == abscissa)
        .map(|a| (a.start.min(a.end), a.start.max(a.end)))
        .unwrap_or(if spec.kind.is_two_level() { (-2.0, 2.0) } else { (0.0, 2.0) });
    let (w21, w31) = match spec.omega() {
        Some(w) => (w[1] - w[0], w[2] - w[0]),
        None => (0.0, 0.0),
    };
    let line = separatrix_polyline(spec.kind, w21, w31, lo, hi, g.separatrix_samples).context(|| "separatrix".to_string())?;
    let mut s = Table::new("separatrix", &[abscissa.name(), ordinate.name()]);
    for (x, y) in line {
        s.push(vec![x.into(), y.into()]);
    }
    Ok(vec![t, s])
}

fn exponent_study(config: &JobConfig, spec: &ModelSpec) -> Result<Vec<Table>, JobError> {
    let st = config.study.as_ref().expect("validated");
    let path = param_path(config);
    let opts = locate_options(config);
    let reports: Vec<Result<(usize, Option<f64>), JobError>> = st
        .n_values
        .par_iter()
        .map(|&n| {
            let s = spec.with_n_atoms(n).context(|| format!("N = {n}"))?;
            let r = locate_transitions_with(&s, &path, &opts).context(|| format!("N = {n}: {} transitions", opts.method))?;
            Ok((n, r.critical_coupling))
        })
        .collect();
    let mut critical = Table::new("critical", &["n_atoms", path.params[0].name(), "coupling"]);
    let mut samples = Vec::new();
    for r in reports {
        let (n, tau) = r?;
        let coupling = tau.map(|t| t * st.scale);
        critical.push(vec![n.into(), tau.into(), coupling.into()]);
        match coupling {
            Some(c) => samples.push((n as f64, c)),
            None => {
                return Err(JobError::Compute {
                    context: format!("N = {n}"),
                    source: cavity_phase::Error::Fit("no transition found on the path".into()),
                })
            }
        }
    }
    let fit = fit_critical_exponent(&samples, st.offset).context(|| "critical exponent fit".to_string())?;
    let mut f = Table::new("fit", &["exponent", "log_prefactor", "r_squared", "ci_low", "ci_high", "offset", "points"]);
    f.push(vec![
        fit.exponent.into(),
        fit.log_prefactor.into(),
        fit.r_squared.into(),
        fit.confidence_interval.0.into(),
        fit.confidence_interval.1.into(),
        st.offset.into(),
        samples.len().into(),
    ]);
    Ok(vec![critical, f])
}

fn triple_point(config: &JobConfig) -> Result<Vec<Table>, JobError> {
    let ns: Vec<usize> = config.study.as_ref().map_or((2..=6).collect(), |s| s.n_values.clone());
    let mut states = Table::new("triple_point", &["n_atoms", "M", "energy", "residual", "numeric_energy", "max_amplitude_error"]);
    let mut amps = Table::new("triple_point_amplitudes", &["n_atoms", "M", "nu", "q", "r", "amplitude"]);
    for &n in &ns {
        for m in 0..=2usize {
            let ctx = || format!("triple point N = {n}, M = {m}");
            let (basis, s) = triple_point_ground_state(n, m).context(ctx)?;
            let (_, h) = build(&basis.spec, SectorSpec::m(m)).context(ctx)?;
            let e = s.expect(&h).context(ctx)?.re;
            let g = lowest_eigenpairs(&h, 1, 1e-13).context(ctx)?;
            // Align the numeric phase with the analytic state before comparing.
            let ov = g.ground_state().inner(&s).context(ctx)?;
            let phase = if ov.norm() > 0.0 { ov / ov.norm() } else { ov };
            let err = g
                .ground_state()
                .amplitudes
                .iter()
                .zip(&s.amplitudes)
                .map(|(a, b)| (a * phase - b).norm())
                .fold(0.0, f64::max);
            states.push(vec![
                n.into(),
                m.into(),
                basis.spec.per_particle(e).into(),
                s.residual(&h, e).into(),
                basis.spec.per_particle(g.ground_energy()).into(),
                err.into(),
            ]);
            for (l, a) in basis.labels.iter().zip(&s.amplitudes) {
                if a.norm() > 0.0 {
                    amps.push(vec![n.into(), m.into(), l.nu.into(), l.a.into(), l.b.into(), a.re.into()]);
                }
            }
        }
    }
    Ok(vec![states, amps])
}

fn observable_table(config: &JobConfig, spec: &ModelSpec) -> Result<Vec<Table>, JobError> {
    let t = config.table.as_ref().expect("validated");
    let model = if spec.kind == ModelKind::Tcm { TableModel::Tcm } else { TableModel::Dicke };
    let gc = two_level_gamma_c(spec).context(|| "critical coupling".to_string())?;
    let mut out = Table::new(
        "observables",
        &["x", "family", "observable", "closed_form", "numeric", "abs_error", "within_tolerance"],
    );
    for &x in &t.x_values {
        let ctx = || format!("table at x = {x}");
        let s = spec.with_param(Param::Gamma, x * gc).context(ctx)?;
        let basis = enumerate_basis(&s, SectorSpec::full(t.fock_cutoff)).context(ctx)?;
        for fam in [StateFamily::Coherent, StateFamily::SasPlus, StateFamily::SasMinus] {
            let sv = table_state(fam, &basis).context(ctx)?;
            for id in ObservableId::TABLE {
                let numeric = quantum_observable(&sv, &basis, id).context(ctx)?;
                let closed = closed_form_observable(fam, id, x, gc, s.n_atoms, model).context(ctx)?;
                let e = (numeric - closed).abs();
                out.push(vec![
                    x.into(),
                    fam.name().into(),
                    id.name().into(),
                    closed.into(),
                    numeric.into(),
                    e.into(),
                    (if e <= t.tolerance { "true" } else { "false" }).into(),
                ]);
            }
        }
    }
    Ok(vec![out])
}
