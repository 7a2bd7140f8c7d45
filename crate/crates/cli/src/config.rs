//! Flat `section.key = value` job files.
//!
//! Lists are comma separated. Blank lines and lines starting with `#` are
//! ignored. Every key is optional at parse time; `validate` checks that the
//! job kind has what it needs.

use cavity_phase::phase::Method;
use cavity_phase::{Atoms, ModelKind, ModelSpec, Param, Sector, SectorSpec};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn err(field: &str, message: impl Into<String>) -> FieldError {
    FieldError { field: field.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobKind {
    SpectrumScan,
    PhaseScan,
    PhaseDiagramGrid,
    ExponentStudy,
    TriplePoint,
    ObservableTable,
}

impl JobKind {
    pub const ALL: [JobKind; 6] = [
        JobKind::SpectrumScan,
        JobKind::PhaseScan,
        JobKind::PhaseDiagramGrid,
        JobKind::ExponentStudy,
        JobKind::TriplePoint,
        JobKind::ObservableTable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            JobKind::SpectrumScan => "spectrum_scan",
            JobKind::PhaseScan => "phase_scan",
            JobKind::PhaseDiagramGrid => "phase_diagram_grid",
            JobKind::ExponentStudy => "exponent_study",
            JobKind::TriplePoint => "triple_point",
            JobKind::ObservableTable => "observable_table",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub n_atoms: usize,
    pub field_freq: f64,
    pub omega_a: Option<f64>,
    pub gamma: Option<f64>,
    pub omega: Option<[f64; 3]>,
    pub mu: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathConfig {
    pub params: Vec<Param>,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub method: Method,
    pub delta_tau: f64,
    /// Levels per sector in spectrum scans.
    pub levels: usize,
    pub block_cap: Option<usize>,
    pub fock_cutoff: Option<usize>,
    pub sectors: Vec<SectorSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub param: Param,
    pub start: f64,
    pub end: f64,
    pub samples: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.samples == 1 {
            return vec![self.start];
        }
        (0..self.samples)
            .map(|i| self.start + (self.end - self.start) * i as f64 / (self.samples - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub x: Axis,
    pub y: Axis,
    pub block_cap: Option<usize>,
    pub fock_cutoff: usize,
    pub separatrix_samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub n_values: Vec<usize>,
    /// Thermodynamic-limit value subtracted before the log-log fit.
    pub offset: f64,
    /// Multiplier turning the path coordinate into the fitted coupling.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableConfig {
    pub x_values: Vec<f64>,
    pub fock_cutoff: usize,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobConfig {
    pub kind: JobKind,
    pub seed: u64,
    pub model: ModelConfig,
    pub path: Option<PathConfig>,
    pub scan: ScanConfig,
    pub grid: Option<GridConfig>,
    pub study: Option<StudyConfig>,
    pub table: Option<TableConfig>,
    pub format: Format,
    pub out_dir: Option<String>,
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T, FieldError> {
    v.trim().parse().map_err(|_| err(key, format!("cannot parse '{}'", v.trim())))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, FieldError> {
    v.split(',').map(|s| parse_num(key, s)).collect()
}

fn parse_triple(key: &str, v: &str) -> Result<[f64; 3], FieldError> {
    let l: Vec<f64> = parse_list(key, v)?;
    l.try_into().map_err(|_| err(key, "expected three comma-separated numbers"))
}

fn parse_param(key: &str, v: &str) -> Result<Param, FieldError> {
    Param::parse(v).ok_or_else(|| err(key, format!("unknown parameter '{}'", v.trim())))
}

fn parse_sector(key: &str, v: &str) -> Result<SectorSpec, FieldError> {
    let v = v.trim();
    let bad = || err(key, format!("unknown sector '{v}'"));
    if v == "full" {
        return Ok(SectorSpec { sector: Sector::Full, fock_cutoff: None });
    }
    let (name, val) = v.split_once('=').ok_or_else(bad)?;
    let sector = match name {
        "lambda" => Sector::Lambda(parse_num(key, val)?),
        "M" => Sector::M(parse_num(key, val)?),
        "parity" => match val {
            "+1" | "1" => Sector::Parity(true),
            "-1" => Sector::Parity(false),
            _ => return Err(bad()),
        },
        _ => return Err(bad()),
    };
    Ok(SectorSpec { sector, fock_cutoff: None })
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn fnum(v: f64) -> String {
    // Shortest representation that parses back to the same value.
    format!("{v:?}")
}

fn fjoin(v: &[f64]) -> String {
    v.iter().map(|x| fnum(*x)).collect::<Vec<_>>().join(",")
}

/// Raw key/value table with duplicate and syntax checks.
fn read_pairs(text: &str) -> Result<BTreeMap<String, String>, Vec<FieldError>> {
    let mut map = BTreeMap::new();
    let mut errors = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) => {
                let k = k.trim().to_string();
                if map.insert(k.clone(), v.trim().to_string()).is_some() {
                    errors.push(err(&k, "given more than once"));
                }
            }
            None => errors.push(err(&format!("line {}", no + 1), "expected key = value")),
        }
    }
    if errors.is_empty() {
        Ok(map)
    } else {
        Err(errors)
    }
}

struct Reader {
    map: BTreeMap<String, String>,
    errors: Vec<FieldError>,
}

impl Reader {
    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn get<T>(&mut self, key: &str, f: impl Fn(&str, &str) -> Result<T, FieldError>) -> Option<T> {
        let v = self.take(key)?;
        match f(key, &v) {
            Ok(x) => Some(x),
            Err(e) => {
                self.errors.push(e);
                None
            }
        }
    }

    fn num<T: FromStr>(&mut self, key: &str) -> Option<T> {
        self.get(key, parse_num)
    }

    fn required<T>(&mut self, key: &str, v: Option<T>) -> Option<T> {
        if v.is_none() && !self.errors.iter().any(|e| e.field == key) {
            self.errors.push(err(key, "missing"));
        }
        v
    }

    fn has_section(&self, prefix: &str) -> bool {
        self.map.keys().any(|k| k.starts_with(prefix))
    }
}

impl JobConfig {
    pub fn parse(text: &str) -> Result<JobConfig, Vec<FieldError>> {
        let mut r = Reader { map: read_pairs(text)?, errors: Vec::new() };

        let kind = r.get("job.kind", |k, v| {
            JobKind::ALL.into_iter().find(|j| j.name() == v.trim()).ok_or_else(|| err(k, format!("unknown job kind '{v}'")))
        });
        let kind = r.required("job.kind", kind);
        let seed = r.num("job.seed").unwrap_or(0);

        let mkind = r.get("model.kind", |k, v| ModelKind::parse(v).ok_or_else(|| err(k, format!("unknown model kind '{v}'"))));
        let mkind = r.required("model.kind", mkind);
        let n_atoms = r.num("model.n_atoms");
        let n_atoms = r.required("model.n_atoms", n_atoms);
        let model = ModelConfig {
            kind: mkind.unwrap_or(ModelKind::Tcm),
            n_atoms: n_atoms.unwrap_or(0),
            field_freq: r.num("model.field_freq").unwrap_or(1.0),
            omega_a: r.num("model.omega_a"),
            gamma: r.num("model.gamma"),
            omega: r.get("model.omega", parse_triple),
            mu: r.get("model.mu", parse_triple),
        };

        let path = if r.has_section("path.") {
            let params = r.get("path.params", |k, v| v.split(',').map(|p| parse_param(k, p)).collect::<Result<Vec<_>, _>>());
            let start = r.get("path.start", parse_list);
            let end = r.get("path.end", parse_list);
            let samples = r.num("path.samples");
            let (params, start, end, samples) = (
                r.required("path.params", params),
                r.required("path.start", start),
                r.required("path.end", end),
                r.required("path.samples", samples),
            );
            match (params, start, end, samples) {
                (Some(params), Some(start), Some(end), Some(samples)) => Some(PathConfig { params, start, end, samples }),
                _ => None,
            }
        } else {
            None
        };

        let method = r.get("scan.method", |k, v| Method::parse(v).ok_or_else(|| err(k, format!("unknown method '{v}'"))));
        let sectors = r.get("scan.sectors", |k, v| v.split(',').map(|s| parse_sector(k, s)).collect::<Result<Vec<_>, _>>());
        let scan = ScanConfig {
            method: method.unwrap_or(Method::Quantum),
            delta_tau: r.num("scan.delta_tau").unwrap_or(1e-4),
            levels: r.num("scan.levels").unwrap_or(4),
            block_cap: r.num("scan.block_cap"),
            fock_cutoff: r.num("scan.fock_cutoff"),
            sectors: sectors.unwrap_or_default(),
        };

        let grid = if r.has_section("grid.") {
            let axis = |r: &mut Reader, a: &str| {
                let param = r.get(&format!("grid.{a}_param"), parse_param);
                let start = r.num(&format!("grid.{a}_start"));
                let end = r.num(&format!("grid.{a}_end"));
                let samples = r.num(&format!("grid.{a}_samples"));
                let param = r.required(&format!("grid.{a}_param"), param);
                let start = r.required(&format!("grid.{a}_start"), start);
                let end = r.required(&format!("grid.{a}_end"), end);
                let samples = r.required(&format!("grid.{a}_samples"), samples);
                Some(Axis { param: param?, start: start?, end: end?, samples: samples? })
            };
            let x = axis(&mut r, "x");
            let y = axis(&mut r, "y");
            let block_cap = r.num("grid.block_cap");
            let fock_cutoff = r.num("grid.fock_cutoff").unwrap_or(40);
            let separatrix_samples = r.num("grid.separatrix_samples").unwrap_or(201);
            match (x, y) {
                (Some(x), Some(y)) => Some(GridConfig { x, y, block_cap, fock_cutoff, separatrix_samples }),
                _ => None,
            }
        } else {
            None
        };

        let study = if r.has_section("study.") {
            let n_values = r.get("study.n_values", parse_list);
            let n_values = r.required("study.n_values", n_values);
            let offset = r.num("study.offset").unwrap_or(0.0);
            let scale = r.num("study.scale").unwrap_or(1.0);
            n_values.map(|n_values| StudyConfig { n_values, offset, scale })
        } else {
            None
        };

        let table = if r.has_section("table.") {
            let x_values = r.get("table.x_values", parse_list);
            let x_values = r.required("table.x_values", x_values);
            let fock_cutoff = r.num("table.fock_cutoff").unwrap_or(120);
            let tolerance = r.num("table.tolerance").unwrap_or(1e-8);
            x_values.map(|x_values| TableConfig { x_values, fock_cutoff, tolerance })
        } else {
            None
        };

        let format = r.get("output.format", |k, v| match v.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(err(k, format!("expected csv or json, got '{v}'"))),
        });
        let out_dir = r.take("output.dir");

        let leftover: Vec<String> = r.map.keys().cloned().collect();
        for k in leftover {
            r.errors.push(err(&k, "unknown key"));
        }
        if !r.errors.is_empty() {
            return Err(r.errors);
        }
        Ok(JobConfig {
            kind: kind.expect("checked"),
            seed,
            model,
            path,
            scan,
            grid,
            study,
            table,
            format: format.unwrap_or(Format::Csv),
            out_dir,
        })
    }

    /// Text form that `parse` reads back to an equal value.
    pub fn serialize(&self) -> String {
        let mut lines = vec![format!("job.kind = {}", self.kind.name()), format!("job.seed = {}", self.seed)];
        let m = &self.model;
        lines.push(format!("model.kind = {}", m.kind.name()));
        lines.push(format!("model.n_atoms = {}", m.n_atoms));
        lines.push(format!("model.field_freq = {}", fnum(m.field_freq)));
        if let Some(v) = m.omega_a {
            lines.push(format!("model.omega_a = {}", fnum(v)));
        }
        if let Some(v) = m.gamma {
            lines.push(format!("model.gamma = {}", fnum(v)));
        }
        if let Some(v) = m.omega {
            lines.push(format!("model.omega = {}", fjoin(&v)));
        }
        if let Some(v) = m.mu {
            lines.push(format!("model.mu = {}", fjoin(&v)));
        }
        if let Some(p) = &self.path {
            let names: Vec<&str> = p.params.iter().map(|p| p.name()).collect();
            lines.push(format!("path.params = {}", names.join(",")));
            lines.push(format!("path.start = {}", fjoin(&p.start)));
            lines.push(format!("path.end = {}", fjoin(&p.end)));
            lines.push(format!("path.samples = {}", p.samples));
        }
        let s = &self.scan;
        lines.push(format!("scan.method = {}", s.method.name()));
        lines.push(format!("scan.delta_tau = {}", fnum(s.delta_tau)));
        lines.push(format!("scan.levels = {}", s.levels));
        if let Some(v) = s.block_cap {
            lines.push(format!("scan.block_cap = {v}"));
        }
        if let Some(v) = s.fock_cutoff {
            lines.push(format!("scan.fock_cutoff = {v}"));
        }
        if !s.sectors.is_empty() {
            let names: Vec<String> = s.sectors.iter().map(|s| s.sector.to_string()).collect();
            lines.push(format!("scan.sectors = {}", names.join(",")));
        }
        if let Some(g) = &self.grid {
            for (a, axis) in [("x", &g.x), ("y", &g.y)] {
                lines.push(format!("grid.{a}_param = {}", axis.param.name()));
                lines.push(format!("grid.{a}_start = {}", fnum(axis.start)));
                lines.push(format!("grid.{a}_end = {}", fnum(axis.end)));
                lines.push(format!("grid.{a}_samples = {}", axis.samples));
            }
            if let Some(v) = g.block_cap {
                lines.push(format!("grid.block_cap = {v}"));
            }
            lines.push(format!("grid.fock_cutoff = {}", g.fock_cutoff));
            lines.push(format!("grid.separatrix_samples = {}", g.separatrix_samples));
        }
        if let Some(st) = &self.study {
            lines.push(format!("study.n_values = {}", join(&st.n_values)));
            lines.push(format!("study.offset = {}", fnum(st.offset)));
            lines.push(format!("study.scale = {}", fnum(st.scale)));
        }
        if let Some(t) = &self.table {
            lines.push(format!("table.x_values = {}", fjoin(&t.x_values)));
            lines.push(format!("table.fock_cutoff = {}", t.fock_cutoff));
            lines.push(format!("table.tolerance = {}", fnum(t.tolerance)));
        }
        lines.push(format!("output.format = {}", self.format.name()));
        if let Some(d) = &self.out_dir {
            lines.push(format!("output.dir = {d}"));
        }
        let mut text = lines.join("\n");
        text.push('\n');
        text
    }

    pub fn model_spec(&self) -> Result<ModelSpec, FieldError> {
        let m = &self.model;
        let atoms = if m.kind.is_two_level() {
            let omega_a = m.omega_a.ok_or_else(|| err("model.omega_a", "required for 2-level models"))?;
            let gamma = m.gamma.ok_or_else(|| err("model.gamma", "required for 2-level models"))?;
            Atoms::TwoLevel { omega_a, gamma }
        } else {
            let omega = m.omega.ok_or_else(|| err("model.omega", "required for 3-level models"))?;
            let mu = m.mu.ok_or_else(|| err("model.mu", "required for 3-level models"))?;
            Atoms::ThreeLevel { omega, mu }
        };
        ModelSpec::new(m.kind, m.n_atoms, m.field_freq, atoms).map_err(|e| err("model", e.to_string()))
    }

    /// Field-level checks of everything the job kind will use.
    pub fn validate(&self) -> Result<(), Vec<FieldError>> {
        let mut errors = Vec::new();
        let m = &self.model;
        if m.kind.is_two_level() && (m.omega.is_some() || m.mu.is_some()) {
            errors.push(err("model", "omega/mu are for 3-level models"));
        }
        if !m.kind.is_two_level() && (m.omega_a.is_some() || m.gamma.is_some()) {
            errors.push(err("model", "omega_a/gamma are for 2-level models"));
        }
        let spec = match self.model_spec() {
            Ok(s) => Some(s),
            Err(e) => {
                errors.push(e);
                None
            }
        };
        let check_param = |errors: &mut Vec<FieldError>, key: &str, p: Param, v: f64| {
            if let Some(spec) = &spec {
                if let Err(e) = spec.with_param(p, v) {
                    errors.push(err(key, e.to_string()));
                }
            }
        };
        if !(self.scan.delta_tau > 0.0 && self.scan.delta_tau.is_finite()) {
            errors.push(err("scan.delta_tau", "must be positive"));
        }
        let need = |errors: &mut Vec<FieldError>, ok: bool, key: &str| {
            if !ok {
                errors.push(err(key, format!("required by {}", self.kind.name())));
            }
        };
        match self.kind {
            JobKind::SpectrumScan | JobKind::PhaseScan | JobKind::ExponentStudy => {
                need(&mut errors, self.path.is_some(), "path");
            }
            JobKind::PhaseDiagramGrid => need(&mut errors, self.grid.is_some(), "grid"),
            JobKind::ObservableTable => need(&mut errors, self.table.is_some(), "table"),
            JobKind::TriplePoint => {}
        }
        if self.kind == JobKind::ExponentStudy {
            need(&mut errors, self.study.is_some(), "study");
        }
        if let Some(p) = &self.path {
            if p.samples < 2 {
                errors.push(err("path.samples", "must be at least 2"));
            }
            if p.params.len() != p.start.len() || p.params.len() != p.end.len() {
                errors.push(err("path", "params, start and end must have the same length"));
            }
            let mut seen = Vec::new();
            for (i, &q) in p.params.iter().enumerate() {
                if seen.contains(&q) {
                    errors.push(err("path.params", format!("{} repeated", q.name())));
                }
                seen.push(q);
                for (key, list) in [("path.start", &p.start), ("path.end", &p.end)] {
                    if let Some(&v) = list.get(i) {
                        check_param(&mut errors, key, q, v);
                    }
                }
            }
        }
        if self.kind == JobKind::SpectrumScan {
            if self.scan.levels == 0 {
                errors.push(err("scan.levels", "must be at least 1"));
            }
            if self.scan.sectors.is_empty() {
                errors.push(err("scan.sectors", "required by spectrum_scan"));
            }
            if let Some(spec) = &spec {
                for s in &self.scan.sectors {
                    let s = if s.is_finite_block() { *s } else { s.with_cutoff(self.scan.fock_cutoff.unwrap_or(1)) };
                    if let Err(e) = cavity_phase::enumerate_basis(spec, s) {
                        errors.push(err("scan.sectors", e.to_string()));
                    }
                }
                if !self.scan.sectors.iter().all(|s| s.is_finite_block()) && self.scan.fock_cutoff.is_none() {
                    errors.push(err("scan.fock_cutoff", "required for parity or full sectors"));
                }
            }
        }
        if let Some(g) = &self.grid {
            for (a, axis) in [("grid.x", &g.x), ("grid.y", &g.y)] {
                if axis.samples < 1 {
                    errors.push(err(&format!("{a}_samples"), "must be at least 1"));
                }
                check_param(&mut errors, &format!("{a}_start"), axis.param, axis.start);
                check_param(&mut errors, &format!("{a}_end"), axis.param, axis.end);
            }
            if g.x.param == g.y.param {
                errors.push(err("grid.y_param", "must differ from grid.x_param"));
            }
            if g.separatrix_samples < 2 {
                errors.push(err("grid.separatrix_samples", "must be at least 2"));
            }
            if g.fock_cutoff == 0 {
                errors.push(err("grid.fock_cutoff", "must be positive"));
            }
        }
        if let Some(st) = &self.study {
            if st.n_values.len() < 4 {
                errors.push(err("study.n_values", "a fit needs at least 4 sizes"));
            }
            if st.n_values.contains(&0) {
                errors.push(err("study.n_values", "sizes must be positive"));
            }
            if !(st.scale > 0.0 && st.scale.is_finite()) {
                errors.push(err("study.scale", "must be positive"));
            }
            if !st.offset.is_finite() {
                errors.push(err("study.offset", "must be finite"));
            }
        }
        if self.kind == JobKind::TriplePoint && m.kind != ModelKind::XiRwa {
            errors.push(err("model.kind", "triple_point uses XI_RWA"));
        }
        if self.kind == JobKind::TriplePoint {
            if let Some(st) = &self.study {
                if st.n_values.iter().any(|&n| n < 2) {
                    errors.push(err("study.n_values", "the triple point needs at least 2 atoms"));
                }
            }
        }
        if let Some(t) = &self.table {
            if !m.kind.is_two_level() {
                errors.push(err("model.kind", "observable tables exist for TCM and DICKE"));
            }
            if t.x_values.is_empty() || t.x_values.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                errors.push(err("table.x_values", "values must be positive"));
            }
            if !(t.tolerance > 0.0) {
                errors.push(err("table.tolerance", "must be positive"));
            }
            if let Some(w) = m.omega_a {
                if !(w > 0.0) {
                    errors.push(err("model.omega_a", "the table needs ω_A > 0"));
                }
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }
}
