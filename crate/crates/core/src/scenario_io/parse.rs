use std::collections::HashSet;
use std::fmt::Write as _;

use super::{FrontierConfig, ScenarioConfig, ScenarioIssue};
use crate::control::{ControlMode, CostateMode, SolverConfig};
use crate::economy::{
    cobb_douglas, FactorAllocation, IdeationParams, NeedParams, ProductionParams, ShareFunction,
};
use crate::error::{EmtError, Result};
use crate::theorems::DimensionAdd;

const SECTIONS: &[&str] = &[
    "scenario",
    "production",
    "ideation",
    "solver",
    "factors",
    "frontier",
    "need",
    "frontier.add",
];

fn repeatable(section: &str) -> bool {
    section == "need" || section == "frontier.add"
}

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

#[derive(Debug, Clone)]
struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

#[derive(Debug, Default)]
struct Document {
    sections: Vec<Section>,
}

impl Document {
    fn all<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Section> + 'a {
        self.sections.iter().filter(move |s| s.name == name)
    }

    fn first(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }
}

fn tokenize(text: &str, issues: &mut Vec<ScenarioIssue>) -> Document {
    let mut doc = Document::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if content.is_empty() {
            continue;
        }
        if let Some(inner) = content.strip_prefix('[') {
            let Some(name) = inner.strip_suffix(']') else {
                issues.push(ScenarioIssue::at(line, "unterminated section header"));
                continue;
            };
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                issues.push(ScenarioIssue::at(line, format!("unknown section [{name}]")));
            } else if !repeatable(name) && doc.first(name).is_some() {
                issues.push(ScenarioIssue::at(
                    line,
                    format!("section [{name}] repeated"),
                ));
            }
            doc.sections.push(Section {
                name: name.to_string(),
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            issues.push(ScenarioIssue::at(
                line,
                format!("expected key = value, got `{content}`"),
            ));
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(section) = doc.sections.last_mut() else {
            issues.push(ScenarioIssue::at(
                line,
                format!("key `{key}` outside any section"),
            ));
            continue;
        };
        if key.is_empty() {
            issues.push(ScenarioIssue::at(line, "empty key"));
        } else if section.entries.iter().any(|e| e.key == key) {
            issues.push(ScenarioIssue::at(
                line,
                format!("duplicate key `{key}` in [{}]", section.name),
            ));
        } else {
            section.entries.push(Entry {
                key: key.to_string(),
                value: value.to_string(),
                line,
            });
        }
    }
    doc
}

/// Applies `section.key=value`, `need.<i>.key=value` (1-based) and
/// `need.*.key=value` assignments to the raw document.
fn apply_to_document(doc: &mut Document, overrides: &[String], issues: &mut Vec<ScenarioIssue>) {
    for ov in overrides {
        let Some((path, value)) = ov.split_once('=') else {
            issues.push(ScenarioIssue::at(
                0,
                format!("override `{ov}` is not key=value"),
            ));
            continue;
        };
        let (path, value) = (path.trim(), value.trim());
        let Some((prefix, key)) = path.rsplit_once('.') else {
            issues.push(ScenarioIssue::at(
                0,
                format!("override `{ov}` needs a section, as in section.key=value"),
            ));
            continue;
        };
        let (section, selector) = match prefix.rsplit_once('.') {
            Some((s, sel)) if repeatable(s) => (s, Some(sel)),
            _ => (prefix, None),
        };
        if !SECTIONS.contains(&section) {
            issues.push(ScenarioIssue::at(
                0,
                format!("override `{ov}`: unknown section [{section}]"),
            ));
            continue;
        }
        let positions: Vec<usize> = doc
            .sections
            .iter()
            .enumerate()
            .filter(|(_, s)| s.name == section)
            .map(|(i, _)| i)
            .collect();
        let targets: Vec<usize> = match (repeatable(section), selector) {
            (false, _) => {
                if positions.is_empty() {
                    doc.sections.push(Section {
                        name: section.to_string(),
                        line: 0,
                        entries: Vec::new(),
                    });
                    vec![doc.sections.len() - 1]
                } else {
                    positions
                }
            }
            (true, None) | (true, Some("*")) => positions,
            (true, Some(sel)) => match sel.parse::<usize>() {
                Ok(i) if i >= 1 && i <= positions.len() => vec![positions[i - 1]],
                _ => {
                    issues.push(ScenarioIssue::at(
                        0,
                        format!(
                            "override `{ov}`: no [{section}] number {sel} (have {})",
                            positions.len()
                        ),
                    ));
                    continue;
                }
            },
        };
        if targets.is_empty() {
            issues.push(ScenarioIssue::at(
                0,
                format!("override `{ov}`: no [{section}] blocks"),
            ));
        }
        for t in targets {
            let s = &mut doc.sections[t];
            match s.entries.iter_mut().find(|e| e.key == key) {
                Some(e) => {
                    e.value = value.to_string();
                    e.line = 0;
                }
                None => s.entries.push(Entry {
                    key: key.to_string(),
                    value: value.to_string(),
                    line: 0,
                }),
            }
        }
    }
}

/// Typed access to one section that remembers which keys were read.
struct Fields<'a> {
    section: Option<&'a Section>,
    label: String,
    used: HashSet<&'a str>,
}

impl<'a> Fields<'a> {
    fn new(section: Option<&'a Section>, label: String) -> Self {
        Self {
            section,
            label,
            used: HashSet::new(),
        }
    }

    fn line(&self) -> usize {
        self.section.map_or(0, |s| s.line)
    }

    fn raw(&mut self, key: &'a str) -> Option<&'a Entry> {
        self.used.insert(key);
        self.section?.entries.iter().find(|e| e.key == key)
    }

    fn parsed<T>(
        &mut self,
        key: &'a str,
        default: Option<T>,
        issues: &mut Vec<ScenarioIssue>,
        parse: impl Fn(&str) -> Option<T>,
        what: &str,
    ) -> Option<T> {
        match self.raw(key) {
            Some(e) => match parse(&e.value) {
                Some(v) => Some(v),
                None => {
                    issues.push(ScenarioIssue::at(
                        e.line,
                        format!("{}.{key}: expected {what}, got `{}`", self.label, e.value),
                    ));
                    None
                }
            },
            None => {
                if default.is_none() {
                    issues.push(ScenarioIssue::at(
                        self.line(),
                        format!("{}: missing required key `{key}`", self.label),
                    ));
                }
                default
            }
        }
    }

    fn f64(&mut self, key: &'a str, default: Option<f64>, issues: &mut Vec<ScenarioIssue>) -> f64 {
        self.parsed(key, default, issues, |s| s.parse::<f64>().ok(), "a number")
            .unwrap_or(f64::NAN)
    }

    fn opt_f64(&mut self, key: &'a str, issues: &mut Vec<ScenarioIssue>) -> Option<f64> {
        if self
            .section
            .is_some_and(|s| s.entries.iter().any(|e| e.key == key))
        {
            Some(self.f64(key, None, issues))
        } else {
            self.used.insert(key);
            None
        }
    }

    fn u64(&mut self, key: &'a str, default: u64, issues: &mut Vec<ScenarioIssue>) -> u64 {
        self.parsed(
            key,
            Some(default),
            issues,
            parse_u64,
            "a non-negative integer",
        )
        .unwrap_or(default)
    }

    fn bool(&mut self, key: &'a str, default: bool, issues: &mut Vec<ScenarioIssue>) -> bool {
        let p = |s: &str| match s {
            "true" => Some(true),
            "false" => Some(false),
            _ => None,
        };
        self.parsed(key, Some(default), issues, p, "true or false")
            .unwrap_or(default)
    }

    fn text(&mut self, key: &'a str, default: &str) -> String {
        self.raw(key)
            .map_or_else(|| default.to_string(), |e| e.value.clone())
    }

    fn choice<T>(
        &mut self,
        key: &'a str,
        default: T,
        parse: impl Fn(&str) -> Option<T>,
        allowed: &str,
        issues: &mut Vec<ScenarioIssue>,
    ) -> T {
        let Some(e) = self.raw(key) else {
            return default;
        };
        parse(&e.value).unwrap_or_else(|| {
            issues.push(ScenarioIssue::at(
                e.line,
                format!(
                    "{}.{key}: expected one of {allowed}, got `{}`",
                    self.label, e.value
                ),
            ));
            default
        })
    }

    fn finish(self, issues: &mut Vec<ScenarioIssue>) {
        if let Some(s) = self.section {
            for e in &s.entries {
                if !self.used.contains(e.key.as_str()) {
                    issues.push(ScenarioIssue::at(
                        e.line,
                        format!("unknown key `{}` in [{}]", e.key, s.name),
                    ));
                }
            }
        }
    }
}

fn parse_u64(s: &str) -> Option<u64> {
    match s.strip_prefix("0x") {
        Some(hex) => u64::from_str_radix(hex, 16).ok(),
        None => s.parse().ok(),
    }
}

fn parse_share(s: &str) -> Option<bool> {
    match s {
        "saturating" => Some(true),
        "linear" => Some(false),
        _ => None,
    }
}

fn collect<E: std::fmt::Display>(
    issues: &mut Vec<ScenarioIssue>,
    line: usize,
    what: &str,
    r: std::result::Result<(), E>,
) {
    if let Err(e) = r {
        issues.push(ScenarioIssue::at(line, format!("{what}: {e}")));
    }
}

fn build(doc: &Document, issues: &mut Vec<ScenarioIssue>) -> Option<ScenarioConfig> {
    for required in ["production", "ideation"] {
        if doc.first(required).is_none() {
            issues.push(ScenarioIssue::at(
                0,
                format!("missing required section [{required}]"),
            ));
        }
    }
    if doc.first("need").is_none() {
        issues.push(ScenarioIssue::at(
            0,
            "at least one [need] section is required",
        ));
    }

    let mut sc = Fields::new(doc.first("scenario"), "scenario".into());
    let name = sc.text("name", "scenario");
    let seed = sc.u64("seed", 0, issues);
    let sat_max = sc.f64("sat_max", Some(1.0), issues);
    sc.finish(issues);
    if !(sat_max.is_finite() && sat_max > 0.0) {
        issues.push(ScenarioIssue::at(
            0,
            format!("sat_max must be positive, got {sat_max}"),
        ));
    }

    let prod_section = doc.first("production");
    let mut pr = Fields::new(prod_section, "production".into());
    let production = ProductionParams {
        tfp: pr.f64("tfp", None, issues),
        alpha: pr.f64("alpha", None, issues),
        capital: pr.f64("capital", None, issues),
        labor: pr.f64("labor", None, issues),
    };
    pr.finish(issues);
    if prod_section.is_some() {
        collect(
            issues,
            prod_section.map_or(0, |s| s.line),
            "production",
            production.validate(),
        );
    }

    let id_section = doc.first("ideation");
    let mut id = Fields::new(id_section, "ideation".into());
    let ideation = IdeationParams {
        c0: id.f64("c0", None, issues),
        lambda_decay: id.f64("lambda_decay", None, issues),
    };
    id.finish(issues);
    if id_section.is_some() {
        collect(
            issues,
            id_section.map_or(0, |s| s.line),
            "ideation",
            ideation.validate(),
        );
    }

    let solver_section = doc.first("solver");
    let solver_line = solver_section.map_or(0, |s| s.line);
    let mut so = Fields::new(solver_section, "solver".into());
    let rho = so.f64("rho", Some(0.05), issues);
    let horizon = so.f64("horizon", Some(40.0), issues);
    let steps = so.u64("steps", 2000, issues);
    let relaxation = so.f64("relaxation", Some(0.5), issues);
    let tol = so.f64("tol", Some(1e-6), issues);
    let max_iter = so.u64("max_iter", 500, issues);
    let costate_mode = so.choice(
        "costate_mode",
        CostateMode::CurrentValue,
        CostateMode::parse,
        "present_value, current_value, paper_literal",
        issues,
    );
    let control_mode = so.choice(
        "control_mode",
        ControlMode::AllocationSimplex,
        ControlMode::parse,
        "scalar_bounded, allocation_simplex",
        issues,
    );
    let saturating = so.choice("share", true, parse_share, "saturating, linear", issues);
    let eta = so.f64("eta", Some(1.0), issues);
    let y_max_set = so.opt_f64("y_max", issues);
    so.finish(issues);
    let share = if saturating {
        ShareFunction::Saturating { eta }
    } else {
        ShareFunction::Linear { eta }
    };
    if !(eta.is_finite() && eta > 0.0) {
        issues.push(ScenarioIssue::at(
            solver_line,
            format!("solver: eta must be positive, got {eta}"),
        ));
    }
    let y_max = y_max_set.unwrap_or_else(|| cobb_douglas(&production).unwrap_or(f64::NAN));
    let solver = SolverConfig {
        rho,
        horizon,
        steps: steps as usize,
        relaxation,
        tol,
        max_iter: max_iter as usize,
        costate_mode,
        control_mode,
        y_max,
    };
    if let Err(v) = solver.validate() {
        for msg in v {
            issues.push(ScenarioIssue::at(solver_line, format!("solver: {msg}")));
        }
    }

    let fa_section = doc.first("factors");
    let mut fa = Fields::new(fa_section, "factors".into());
    let factors = FactorAllocation {
        labor_employed: production.labor,
        labor_idle: fa.f64("labor_idle", Some(0.0), issues),
        capital_employed: production.capital,
        capital_idle: fa.f64("capital_idle", Some(0.0), issues),
    };
    fa.finish(issues);
    if production.labor.is_finite() && production.capital.is_finite() {
        collect(
            issues,
            fa_section.map_or(0, |s| s.line),
            "factors",
            factors.validate(),
        );
    }

    let mut needs = Vec::new();
    let mut meaning = Vec::new();
    for (i, s) in doc.all("need").enumerate() {
        let mut nf = Fields::new(Some(s), format!("need {}", i + 1));
        let label = nf.text("name", &format!("need{}", i + 1));
        let weight = nf.f64("weight", None, issues);
        let delta = nf.f64("delta", None, issues);
        let desired = nf.f64("desired", Some(sat_max), issues);
        let effectiveness = nf.f64("effectiveness", None, issues);
        let error_bound = nf.opt_f64("error_bound", issues);
        let ethics_mask = nf.bool("ethics_mask", true, issues);
        let initial = nf.f64("initial", Some(0.0), issues);
        if nf.bool("meaning", false, issues) {
            meaning.push((i, s.line));
        }
        nf.finish(issues);
        let need = NeedParams {
            label,
            weight,
            delta,
            desired,
            effectiveness,
            error_bound: error_bound.unwrap_or(ideation.c0 * effectiveness * sat_max),
            ethics_mask,
            initial,
        };
        if let Err(v) = need.validate(sat_max) {
            for msg in v {
                issues.push(ScenarioIssue::at(s.line, format!("need {}: {msg}", i + 1)));
            }
        }
        needs.push(need);
    }
    let meaning_index = match meaning.as_slice() {
        [] => None,
        [(i, line)] => {
            if !(needs[*i].weight > 0.0) {
                issues.push(ScenarioIssue::at(
                    *line,
                    format!("need {}: the meaning need must have positive weight", i + 1),
                ));
            }
            Some(*i)
        }
        [_, (_, line), ..] => {
            issues.push(ScenarioIssue::at(
                *line,
                "more than one need marked meaning",
            ));
            None
        }
    };

    let mut adds = Vec::new();
    for (i, s) in doc.all("frontier.add").enumerate() {
        let mut af = Fields::new(Some(s), format!("frontier.add {}", i + 1));
        let add = DimensionAdd {
            time: af.f64("time", None, issues),
            weight: af.f64("weight", None, issues),
            attainable: af.f64("attainable", None, issues),
        };
        af.finish(issues);
        if !(add.time.is_finite() && add.time >= 0.0) {
            issues.push(ScenarioIssue::at(
                s.line,
                "frontier.add: time must be non-negative",
            ));
        }
        if !(add.weight.is_finite() && add.weight >= 0.0) {
            issues.push(ScenarioIssue::at(
                s.line,
                "frontier.add: weight must be non-negative",
            ));
        }
        if !(add.attainable >= 0.0 && add.attainable <= sat_max) {
            issues.push(ScenarioIssue::at(
                s.line,
                format!("frontier.add: attainable must lie in [0, {sat_max}]"),
            ));
        }
        if let Some(prev) = adds.last().map(|a: &DimensionAdd| a.time) {
            if add.time < prev {
                issues.push(ScenarioIssue::at(
                    s.line,
                    "frontier.add: times must not decrease",
                ));
            }
        }
        adds.push(add);
    }
    let fr_section = doc.first("frontier");
    let frontier = if fr_section.is_some() || !adds.is_empty() {
        let mut ff = Fields::new(fr_section, "frontier".into());
        let cfg = FrontierConfig {
            discovery_slope: ff.f64("discovery_slope", Some(1.0), issues),
            new_weight: ff.f64("new_weight", Some(0.1), issues),
            new_attainable: ff.f64("new_attainable", Some(0.5 * sat_max), issues),
            human_labor: ff.f64("human_labor", Some(production.labor), issues),
            adds,
        };
        ff.finish(issues);
        let line = fr_section.map_or(0, |s| s.line);
        for (n, v) in [
            ("discovery_slope", cfg.discovery_slope),
            ("new_weight", cfg.new_weight),
            ("human_labor", cfg.human_labor),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                issues.push(ScenarioIssue::at(
                    line,
                    format!("frontier: {n} must be non-negative"),
                ));
            }
        }
        if !(cfg.new_attainable >= 0.0 && cfg.new_attainable <= sat_max) {
            issues.push(ScenarioIssue::at(
                line,
                format!("frontier: new_attainable must lie in [0, {sat_max}]"),
            ));
        }
        Some(cfg)
    } else {
        None
    };

    Some(ScenarioConfig {
        name,
        seed,
        sat_max,
        production,
        ideation,
        solver,
        explicit_y_max: y_max_set.is_some(),
        share,
        factors,
        needs,
        meaning_index,
        frontier,
    })
}

/// Parses and validates a scenario, reporting every problem found.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    parse_scenario_with(text, &[])
}

/// Like [`parse_scenario`] with `key=value` overrides applied before
/// validation.
pub fn parse_scenario_with(text: &str, overrides: &[String]) -> Result<ScenarioConfig> {
    let mut issues = Vec::new();
    let mut doc = tokenize(text, &mut issues);
    apply_to_document(&mut doc, overrides, &mut issues);
    let cfg = build(&doc, &mut issues);
    match cfg {
        Some(cfg) if issues.is_empty() => Ok(cfg),
        _ => {
            issues.sort_by_key(|i| i.line);
            Err(EmtError::Scenario(issues))
        }
    }
}

/// Canonical text form: fixed section and key order, every resolved value
/// written out, shortest round-trip float formatting.
pub fn emit_scenario(cfg: &ScenarioConfig) -> String {
    let mut out = String::new();
    let s = &cfg.solver;
    let _ = writeln!(out, "[scenario]");
    let _ = writeln!(out, "name = {}", cfg.name);
    let _ = writeln!(out, "seed = {}", cfg.seed);
    let _ = writeln!(out, "sat_max = {}", cfg.sat_max);
    let _ = writeln!(out, "\n[production]");
    let p = &cfg.production;
    let _ = writeln!(
        out,
        "tfp = {}\nalpha = {}\ncapital = {}\nlabor = {}",
        p.tfp, p.alpha, p.capital, p.labor
    );
    let _ = writeln!(out, "\n[ideation]");
    let _ = writeln!(
        out,
        "c0 = {}\nlambda_decay = {}",
        cfg.ideation.c0, cfg.ideation.lambda_decay
    );
    let _ = writeln!(out, "\n[solver]");
    let _ = writeln!(
        out,
        "rho = {}\nhorizon = {}\nsteps = {}",
        s.rho, s.horizon, s.steps
    );
    let _ = writeln!(
        out,
        "relaxation = {}\ntol = {}\nmax_iter = {}",
        s.relaxation, s.tol, s.max_iter
    );
    let _ = writeln!(out, "costate_mode = {}", s.costate_mode.as_str());
    let _ = writeln!(out, "control_mode = {}", s.control_mode.as_str());
    let share = match cfg.share {
        ShareFunction::Saturating { .. } => "saturating",
        ShareFunction::Linear { .. } => "linear",
    };
    let _ = writeln!(out, "share = {share}\neta = {}", cfg.share.eta());
    if cfg.explicit_y_max {
        let _ = writeln!(out, "y_max = {}", s.y_max);
    }
    let _ = writeln!(out, "\n[factors]");
    let _ = writeln!(
        out,
        "labor_idle = {}\ncapital_idle = {}",
        cfg.factors.labor_idle, cfg.factors.capital_idle
    );
    if let Some(f) = &cfg.frontier {
        let _ = writeln!(out, "\n[frontier]");
        let _ = writeln!(
            out,
            "discovery_slope = {}\nnew_weight = {}",
            f.discovery_slope, f.new_weight
        );
        let _ = writeln!(
            out,
            "new_attainable = {}\nhuman_labor = {}",
            f.new_attainable, f.human_labor
        );
    }
    for (i, n) in cfg.needs.iter().enumerate() {
        let _ = writeln!(out, "\n[need]");
        let _ = writeln!(out, "name = {}", n.label);
        let _ = writeln!(
            out,
            "weight = {}\ndelta = {}\ndesired = {}",
            n.weight, n.delta, n.desired
        );
        let _ = writeln!(
            out,
            "effectiveness = {}\nerror_bound = {}",
            n.effectiveness, n.error_bound
        );
        let _ = writeln!(
            out,
            "ethics_mask = {}\ninitial = {}",
            n.ethics_mask, n.initial
        );
        if cfg.meaning_index == Some(i) {
            let _ = writeln!(out, "meaning = true");
        }
    }
    if let Some(f) = &cfg.frontier {
        for a in &f.adds {
            let _ = writeln!(out, "\n[frontier.add]");
            let _ = writeln!(
                out,
                "time = {}\nweight = {}\nattainable = {}",
                a.time, a.weight, a.attainable
            );
        }
    }
    out
}
