//! Scenario files: line-oriented `key = value` pairs grouped under
//! `[section]` headers, `#` comments.
//!
//! ```text
//! [domain]
//! length = 2
//! height = 1
//! modes_m = 8
//! modes_n = 8
//!
//! [model]
//! rho = 0.5
//! horizon = 1
//!
//! [x0]
//! constant = 1
//! mode 1 0 = 0.25
//!
//! [problem]
//! kind = simulate
//! ```
//!
//! Field sections (`x0`, `effectiveness`, `target`, `control`) take a
//! `constant`, repeatable `mode m n` lines, or a single `grid_file`.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dynamics::{Effectiveness, ModelParams};
use crate::error::{ConfigErrors, Error, Result, Violation};
use crate::grid::GridField;
use crate::spectral::{DomainSpec, ModeIndex, SpectralField};

pub const DEFAULT_TIME_STEPS: usize = 200;
pub const DEFAULT_QUAD_POINTS: usize = 64;
pub const DEFAULT_MODES: usize = 8;
const MAX_MODES: usize = 128;

/// Problem selected by `[problem] kind`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    Simulate,
    MpQuadratic,
    MpLinear,
    Budget,
    P1,
    P2,
    P2Sweep,
    Verify,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 8] = [
        ProblemKind::Simulate,
        ProblemKind::MpQuadratic,
        ProblemKind::MpLinear,
        ProblemKind::Budget,
        ProblemKind::P1,
        ProblemKind::P2,
        ProblemKind::P2Sweep,
        ProblemKind::Verify,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            ProblemKind::Simulate => "simulate",
            ProblemKind::MpQuadratic => "mp_quadratic",
            ProblemKind::MpLinear => "mp_linear",
            ProblemKind::Budget => "budget",
            ProblemKind::P1 => "p1",
            ProblemKind::P2 => "p2",
            ProblemKind::P2Sweep => "p2_sweep",
            ProblemKind::Verify => "verify",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| Error::config(format!("unknown problem kind `{s}`")))
    }
}

/// How a spatial field is specified.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldSpec {
    pub constant: Option<f64>,
    pub modes: Vec<(ModeIndex, f64)>,
    pub grid_file: Option<PathBuf>,
}

impl FieldSpec {
    pub fn constant(c: f64) -> Self {
        Self {
            constant: Some(c),
            ..Self::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.constant.is_none() && self.modes.is_empty() && self.grid_file.is_none()
    }

    /// Spectral coefficients on `domain`; grid files resolve against `base`.
    pub fn to_field(&self, domain: &DomainSpec, base: Option<&Path>) -> Result<SpectralField> {
        if let Some(path) = &self.grid_file {
            return load_grid(path, base)?.project(domain);
        }
        let mut f = SpectralField::constant(domain, self.constant.unwrap_or(0.0));
        for &(idx, c) in &self.modes {
            if !domain.contains_mode(idx) {
                return Err(Error::config(format!("mode ({}, {}) is not retained", idx.m, idx.n)));
            }
            f.set(idx, f.get(idx) + c);
        }
        Ok(f)
    }

    /// Effectiveness, keeping constants exact and grid data unprojected.
    pub fn to_effectiveness(&self, domain: &DomainSpec, base: Option<&Path>) -> Result<Effectiveness> {
        if let Some(path) = &self.grid_file {
            return Ok(Effectiveness::Grid(load_grid(path, base)?));
        }
        match (self.constant, self.modes.is_empty()) {
            (Some(c), true) => Ok(Effectiveness::Constant(c)),
            (None, true) => Ok(Effectiveness::Constant(0.0)),
            _ => Ok(Effectiveness::Field(self.to_field(domain, base)?)),
        }
    }

    fn render(&self, out: &mut String) {
        if let Some(c) = self.constant {
            let _ = writeln!(out, "constant = {c}");
        }
        for (idx, c) in &self.modes {
            let _ = writeln!(out, "mode {} {} = {c}", idx.m, idx.n);
        }
        if let Some(p) = &self.grid_file {
            let _ = writeln!(out, "grid_file = {}", p.display());
        }
    }
}

pub fn load_grid(path: &Path, base: Option<&Path>) -> Result<GridField> {
    let full = match base {
        Some(b) if path.is_relative() => b.join(path),
        _ => path.to_path_buf(),
    };
    let text = std::fs::read_to_string(&full).map_err(|e| Error::io(&full, e))?;
    GridField::parse_dump(&text)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSection {
    pub rho: f64,
    pub horizon: f64,
    pub gamma: f64,
    pub cap: Option<f64>,
    pub diffusion: bool,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub domain: DomainSpec,
    pub model: ModelSection,
    pub x0: FieldSpec,
    pub effectiveness: FieldSpec,
    pub target: Option<FieldSpec>,
    pub control: FieldSpec,
    pub problem: ProblemKind,
    pub time_steps: usize,
    pub budget: Option<f64>,
    pub levels: Vec<f64>,
    pub fd_nx: usize,
    pub fd_ny: usize,
    pub fd_steps: usize,
    pub probe_directions: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub snapshots: Vec<f64>,
    pub grid_resolution: usize,
    /// Directory grid files are resolved against; not part of the text form.
    pub base_dir: Option<PathBuf>,
}

impl ScenarioConfig {
    /// Model parameters, loading any grid files referenced by the scenario.
    pub fn model_params(&self) -> Result<ModelParams> {
        let base = self.base_dir.as_deref();
        let x0 = self.x0.to_field(&self.domain, base)?;
        let b = self.effectiveness.to_effectiveness(&self.domain, base)?;
        let mut p = ModelParams::new(x0, self.model.rho, self.model.horizon)
            .with_effectiveness(b)
            .with_gamma(self.model.gamma)
            .with_diffusion(self.model.diffusion);
        if let Some(cap) = self.model.cap {
            p = p.with_cap(cap);
        }
        Ok(p)
    }

    pub fn render(&self) -> String {
        render(self)
    }
}

/// Read and parse a scenario file; grid files resolve next to it.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = parse_config(&text)?;
    cfg.base_dir = path.parent().map(Path::to_path_buf);
    Ok(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Scenario,
    Domain,
    Model,
    X0,
    Effectiveness,
    Target,
    Control,
    Problem,
    Output,
}

impl Section {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "scenario" => Section::Scenario,
            "domain" => Section::Domain,
            "model" => Section::Model,
            "x0" => Section::X0,
            "effectiveness" => Section::Effectiveness,
            "target" => Section::Target,
            "control" => Section::Control,
            "problem" => Section::Problem,
            "output" => Section::Output,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Section::Scenario => "scenario",
            Section::Domain => "domain",
            Section::Model => "model",
            Section::X0 => "x0",
            Section::Effectiveness => "effectiveness",
            Section::Target => "target",
            Section::Control => "control",
            Section::Problem => "problem",
            Section::Output => "output",
        }
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            Section::Scenario => &["name"],
            Section::Domain => &["length", "height", "modes_m", "modes_n", "quad_points"],
            Section::Model => &["rho", "horizon", "gamma", "cap", "diffusion"],
            Section::X0 | Section::Effectiveness | Section::Target | Section::Control => &["constant", "grid_file"],
            Section::Problem => &[
                "kind",
                "time_steps",
                "budget",
                "levels",
                "fd_nx",
                "fd_ny",
                "fd_steps",
                "probe_directions",
                "seed",
            ],
            Section::Output => &["dir", "snapshots", "grid_resolution"],
        }
    }

    fn is_field(self) -> bool {
        matches!(self, Section::X0 | Section::Effectiveness | Section::Target | Section::Control)
    }
}

struct Entry {
    line: usize,
    value: String,
}

/// Key/value pairs of one section in file order.
#[derive(Default)]
struct Table {
    entries: Vec<(String, Entry)>,
    present: bool,
}

impl Table {
    fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, e)| e)
    }
}

struct Builder {
    violations: Vec<Violation>,
}

impl Builder {
    fn push(&mut self, line: usize, key: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            line,
            key: key.into(),
            message: message.into(),
        });
    }

    fn value<T: FromStr>(&mut self, table: &Table, section: Section, key: &str) -> Option<(T, usize)> {
        let e = table.get(key)?;
        match e.value.parse::<T>() {
            Ok(v) => Some((v, e.line)),
            Err(_) => {
                self.push(e.line, format!("{}.{key}", section.name()), format!("cannot parse `{}`", e.value));
                None
            }
        }
    }

    fn required<T: FromStr>(&mut self, table: &Table, section: Section, key: &str) -> Option<(T, usize)> {
        if table.get(key).is_none() {
            self.push(0, format!("{}.{key}", section.name()), "missing required key");
            return None;
        }
        self.value(table, section, key)
    }

    fn positive(&mut self, v: Option<(f64, usize)>, section: Section, key: &str) -> Option<f64> {
        let (x, line) = v?;
        if x > 0.0 && x.is_finite() {
            Some(x)
        } else {
            self.push(line, format!("{}.{key}", section.name()), format!("must be positive and finite, got {x}"));
            None
        }
    }

    fn count(&mut self, v: Option<(usize, usize)>, section: Section, key: &str, min: usize, max: usize) -> Option<usize> {
        let (x, line) = v?;
        if (min..=max).contains(&x) {
            Some(x)
        } else {
            self.push(line, format!("{}.{key}", section.name()), format!("must lie in [{min}, {max}], got {x}"));
            None
        }
    }

    fn list(&mut self, table: &Table, section: Section, key: &str) -> Option<(Vec<f64>, usize)> {
        let e = table.get(key)?;
        let parsed: std::result::Result<Vec<f64>, _> = e
            .value
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse::<f64>)
            .collect();
        match parsed {
            Ok(v) if v.iter().all(|x| x.is_finite()) => Some((v, e.line)),
            _ => {
                self.push(e.line, format!("{}.{key}", section.name()), format!("cannot parse list `{}`", e.value));
                None
            }
        }
    }

    fn field(&mut self, table: &Table, section: Section) -> FieldSpec {
        let mut spec = FieldSpec::default();
        for (key, e) in &table.entries {
            let full = format!("{}.{key}", section.name());
            match key.as_str() {
                "constant" => match e.value.parse::<f64>() {
                    Ok(c) if c.is_finite() => spec.constant = Some(c),
                    _ => self.push(e.line, full, format!("cannot parse `{}`", e.value)),
                },
                "grid_file" => spec.grid_file = Some(PathBuf::from(&e.value)),
                k if k.starts_with("mode ") => {
                    let idx: Vec<Option<usize>> = k.split_whitespace().skip(1).map(|s| s.parse().ok()).collect();
                    match (idx.as_slice(), e.value.parse::<f64>()) {
                        ([Some(m), Some(n)], Ok(c)) if c.is_finite() => spec.modes.push((ModeIndex::new(*m, *n), c)),
                        _ => self.push(e.line, full, "expected `mode <m> <n> = <coefficient>`"),
                    }
                }
                _ => {}
            }
        }
        if spec.grid_file.is_some() && (spec.constant.is_some() || !spec.modes.is_empty()) {
            let line = table.get("grid_file").map_or(0, |e| e.line);
            self.push(line, format!("{}.grid_file", section.name()), "grid_file excludes constant and mode entries");
        }
        spec
    }
}

/// Parse a scenario, reporting every violation found.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut b = Builder { violations: Vec::new() };
    let mut tables: Vec<(Section, Table)> = Vec::new();
    let mut current: Option<Section> = None;
    let mut seen = BTreeSet::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            match Section::parse(name.trim()) {
                Some(s) => {
                    if !seen.insert(s) {
                        b.push(line_no, format!("[{}]", s.name()), "section appears twice");
                    }
                    current = Some(s);
                    if !tables.iter().any(|(t, _)| *t == s) {
                        tables.push((s, Table::default()));
                    }
                    tables.iter_mut().find(|(t, _)| *t == s).expect("inserted").1.present = true;
                }
                None => {
                    b.push(line_no, format!("[{}]", name.trim()), "unknown section");
                    current = None;
                }
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            b.push(line_no, line, "expected `key = value`");
            continue;
        };
        let key = key.split_whitespace().collect::<Vec<_>>().join(" ");
        let value = value.trim().to_string();
        let Some(section) = current else {
            b.push(line_no, key, "key outside of a known section");
            continue;
        };
        let known = section.keys().contains(&key.as_str()) || (section.is_field() && key.starts_with("mode "));
        let full = format!("{}.{key}", section.name());
        if !known {
            b.push(line_no, full, "unknown key");
            continue;
        }
        let table = &mut tables.iter_mut().find(|(t, _)| *t == section).expect("section table").1;
        if table.get(&key).is_some() && !key.starts_with("mode ") {
            b.push(line_no, full, "duplicate key");
            continue;
        }
        table.entries.push((key, Entry { line: line_no, value }));
    }

    let empty = Table::default();
    let table = |s: Section| tables.iter().find(|(t, _)| *t == s).map_or(&empty, |(_, t)| t);

    let name = table(Section::Scenario)
        .get("name")
        .map_or_else(|| "scenario".to_string(), |e| e.value.clone());

    // [domain]
    let dt = table(Section::Domain);
    let length = b.required::<f64>(dt, Section::Domain, "length");
    let length = b.positive(length, Section::Domain, "length");
    let height = b.required::<f64>(dt, Section::Domain, "height");
    let height = b.positive(height, Section::Domain, "height");
    let mm = b.value::<usize>(dt, Section::Domain, "modes_m").or(Some((DEFAULT_MODES, 0)));
    let modes_m = b.count(mm, Section::Domain, "modes_m", 0, MAX_MODES);
    let mn = b.value::<usize>(dt, Section::Domain, "modes_n").or(Some((DEFAULT_MODES, 0)));
    let modes_n = b.count(mn, Section::Domain, "modes_n", 0, MAX_MODES);
    let quad = b.value::<usize>(dt, Section::Domain, "quad_points");
    let quad_line = quad.map_or(0, |q| q.1);
    let domain = match (length, height, modes_m, modes_n) {
        (Some(l), Some(h), Some(m), Some(n)) => {
            let qp = quad.map_or(DEFAULT_QUAD_POINTS.max(DomainSpec::min_quad_points(m, n)), |q| q.0);
            match DomainSpec::new(l, h, m, n, qp) {
                Ok(d) => Some(d),
                Err(e) => {
                    b.push(quad_line, "domain.quad_points", e.to_string());
                    None
                }
            }
        }
        _ => None,
    };

    // [model]
    let mt = table(Section::Model);
    let rho = b.required::<f64>(mt, Section::Model, "rho");
    let rho = b.positive(rho, Section::Model, "rho");
    let horizon = b.required::<f64>(mt, Section::Model, "horizon");
    let horizon = b.positive(horizon, Section::Model, "horizon");
    let gamma = b.value::<f64>(mt, Section::Model, "gamma").or(Some((1.0, 0)));
    let gamma = b.positive(gamma, Section::Model, "gamma");
    let cap = match b.value::<f64>(mt, Section::Model, "cap") {
        Some(v) => b.positive(Some(v), Section::Model, "cap").map(Some),
        None => Some(None),
    };
    let diffusion = b.value::<bool>(mt, Section::Model, "diffusion").map_or(true, |v| v.0);

    // fields
    let x0_table = table(Section::X0);
    let x0 = b.field(x0_table, Section::X0);
    if x0.is_empty() {
        b.push(0, "x0", "missing initial goodwill: give constant, mode or grid_file entries");
    }
    let eff_table = table(Section::Effectiveness);
    let effectiveness = if eff_table.present {
        let spec = b.field(eff_table, Section::Effectiveness);
        if spec.is_empty() {
            b.push(0, "effectiveness", "section is present but specifies nothing");
        }
        spec
    } else {
        FieldSpec::constant(1.0)
    };
    let target_table = table(Section::Target);
    let target = target_table.present.then(|| b.field(target_table, Section::Target));
    let control = b.field(table(Section::Control), Section::Control);
    if let Some(d) = &domain {
        let tables_and_specs: [(&str, &Table, Option<&FieldSpec>); 4] = [
            ("x0", x0_table, Some(&x0)),
            ("effectiveness", eff_table, Some(&effectiveness)),
            ("target", target_table, target.as_ref()),
            ("control", table(Section::Control), Some(&control)),
        ];
        for (sec, t, spec) in tables_and_specs {
            let Some(spec) = spec else { continue };
            for (idx, _) in &spec.modes {
                if !d.contains_mode(*idx) {
                    let line = t
                        .entries
                        .iter()
                        .find(|(k, _)| *k == format!("mode {} {}", idx.m, idx.n))
                        .map_or(0, |(_, e)| e.line);
                    b.push(line, format!("{sec}.mode {} {}", idx.m, idx.n), "mode index beyond the retained modes");
                }
            }
        }
    }

    // [problem]
    let pt = table(Section::Problem);
    let problem = match pt.get("kind") {
        None => {
            b.push(0, "problem.kind", "missing required key");
            None
        }
        Some(e) => match e.value.parse::<ProblemKind>() {
            Ok(k) => Some(k),
            Err(_) => {
                b.push(e.line, "problem.kind", format!("unknown problem kind `{}`", e.value));
                None
            }
        },
    };
    let ts = b.value::<usize>(pt, Section::Problem, "time_steps").or(Some((DEFAULT_TIME_STEPS, 0)));
    let time_steps = b.count(ts, Section::Problem, "time_steps", 1, 10_000_000);
    let budget = b.value::<f64>(pt, Section::Problem, "budget");
    let budget = budget.and_then(|v| b.positive(Some(v), Section::Problem, "budget"));
    let levels = b.list(pt, Section::Problem, "levels");
    let fnx = b.value::<usize>(pt, Section::Problem, "fd_nx").or(Some((48, 0)));
    let fd_nx = b.count(fnx, Section::Problem, "fd_nx", 2, 4096);
    let fny = b.value::<usize>(pt, Section::Problem, "fd_ny").or(Some((48, 0)));
    let fd_ny = b.count(fny, Section::Problem, "fd_ny", 2, 4096);
    let fst = b.value::<usize>(pt, Section::Problem, "fd_steps").or(Some((400, 0)));
    let fd_steps = b.count(fst, Section::Problem, "fd_steps", 1, 10_000_000);
    let pdir = b.value::<usize>(pt, Section::Problem, "probe_directions").or(Some((8, 0)));
    let probe_directions = b.count(pdir, Section::Problem, "probe_directions", 0, 100_000);
    let seed = b.value::<u64>(pt, Section::Problem, "seed").map_or(0, |v| v.0);

    match problem {
        Some(ProblemKind::Budget) if budget.is_none() && pt.get("budget").is_none() => {
            b.push(0, "problem.budget", "required for kind = budget");
        }
        Some(ProblemKind::Budget) if matches!(cap, Some(Some(_))) => {
            let line = mt.get("cap").map_or(0, |e| e.line);
            b.push(line, "model.cap", "the budget problem takes no effort cap");
        }
        Some(ProblemKind::MpLinear) if matches!(cap, Some(None)) => {
            b.push(0, "model.cap", "required for kind = mp_linear");
        }
        Some(ProblemKind::P2) if target.as_ref().is_none_or(FieldSpec::is_empty) => {
            b.push(0, "target", "required for kind = p2");
        }
        Some(ProblemKind::P2Sweep) if levels.as_ref().is_none_or(|l| l.0.is_empty()) && pt.get("levels").is_none() => {
            b.push(0, "problem.levels", "required for kind = p2_sweep");
        }
        _ => {}
    }

    // [output]
    let ot = table(Section::Output);
    let output_dir = ot.get("dir").map_or_else(|| PathBuf::from("out"), |e| PathBuf::from(&e.value));
    let snapshots = b.list(ot, Section::Output, "snapshots").map(|v| v.0);
    if let (Some(s), Some(t)) = (&snapshots, horizon) {
        if let Some(bad) = s.iter().find(|&&x| !(0.0..=t).contains(&x)) {
            let line = ot.get("snapshots").map_or(0, |e| e.line);
            b.push(line, "output.snapshots", format!("time {bad} lies outside [0, {t}]"));
        }
    }
    let gr = b.value::<usize>(ot, Section::Output, "grid_resolution").or(Some((33, 0)));
    let grid_resolution = b.count(gr, Section::Output, "grid_resolution", 2, 4096);

    if !b.violations.is_empty() {
        b.violations.sort_by_key(|v| v.line);
        return Err(Error::Parse(ConfigErrors { violations: b.violations }));
    }
    let h = horizon.expect("validated");
    Ok(ScenarioConfig {
        name,
        domain: domain.expect("validated"),
        model: ModelSection {
            rho: rho.expect("validated"),
            horizon: h,
            gamma: gamma.expect("validated"),
            cap: cap.expect("validated"),
            diffusion,
        },
        x0,
        effectiveness,
        target,
        control,
        problem: problem.expect("validated"),
        time_steps: time_steps.expect("validated"),
        budget,
        levels: levels.map(|v| v.0).unwrap_or_default(),
        fd_nx: fd_nx.expect("validated"),
        fd_ny: fd_ny.expect("validated"),
        fd_steps: fd_steps.expect("validated"),
        probe_directions: probe_directions.expect("validated"),
        seed,
        output_dir,
        snapshots: snapshots.unwrap_or_else(|| vec![h]),
        grid_resolution: grid_resolution.expect("validated"),
        base_dir: None,
    })
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(", ")
}

/// Text form that [`parse_config`] maps back to the same config.
pub fn render(cfg: &ScenarioConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "[scenario]\nname = {}\n", cfg.name);
    let d = &cfg.domain;
    let _ = writeln!(
        s,
        "[domain]\nlength = {}\nheight = {}\nmodes_m = {}\nmodes_n = {}\nquad_points = {}\n",
        d.length, d.height, d.modes_m, d.modes_n, d.quad_points
    );
    let m = &cfg.model;
    let _ = writeln!(s, "[model]\nrho = {}\nhorizon = {}\ngamma = {}", m.rho, m.horizon, m.gamma);
    if let Some(cap) = m.cap {
        let _ = writeln!(s, "cap = {cap}");
    }
    let _ = writeln!(s, "diffusion = {}\n", m.diffusion);
    for (name, spec) in [
        ("x0", Some(&cfg.x0)),
        ("effectiveness", Some(&cfg.effectiveness)),
        ("target", cfg.target.as_ref()),
        ("control", Some(&cfg.control)),
    ] {
        if let Some(spec) = spec {
            let _ = writeln!(s, "[{name}]");
            spec.render(&mut s);
            s.push('\n');
        }
    }
    let _ = writeln!(s, "[problem]\nkind = {}\ntime_steps = {}", cfg.problem, cfg.time_steps);
    if let Some(bud) = cfg.budget {
        let _ = writeln!(s, "budget = {bud}");
    }
    if !cfg.levels.is_empty() {
        let _ = writeln!(s, "levels = {}", join(&cfg.levels));
    }
    let _ = writeln!(
        s,
        "fd_nx = {}\nfd_ny = {}\nfd_steps = {}\nprobe_directions = {}\nseed = {}\n",
        cfg.fd_nx, cfg.fd_ny, cfg.fd_steps, cfg.probe_directions, cfg.seed
    );
    let _ = writeln!(
        s,
        "[output]\ndir = {}\nsnapshots = {}\ngrid_resolution = {}",
        cfg.output_dir.display(),
        join(&cfg.snapshots),
        cfg.grid_resolution
    );
    s
}
