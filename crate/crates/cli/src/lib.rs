//! Command-line front end for the Painleve equivalence tests.

use std::ffi::OsString;
use std::fmt::Write as _;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use painleve_core::classify::{classify, Classification, InvariantReport};
use painleve_core::expr::{RatFn, Symbol};
use painleve_core::invariants::PseudoValue;
use painleve_core::parse::{parse_expression, parse_printed, OdeCubic};
use painleve_core::transform::{
    map_painleve1, map_painleve2, painleve1_ode, painleve2_ode, pullback_ode, verify_map, MapResult, PointMap,
    TransformError, Verification, VerifyOptions,
};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_EQUIVALENT: i32 = 2;
pub const EXIT_INDETERMINATE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "painleve", version, about = "Point-equivalence tests against PI, PII and PIII(0,b,0,0)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the three equivalence tests.
    Classify(Common),
    /// Print every pseudo-object the pipeline computes.
    Invariants(Common),
    /// Classify and emit a verified change of variables.
    Map(Common),
    /// Check a given change of variables against PI or PII.
    Verify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        map: MapArgs,
        /// Equation in the new variables.
        #[arg(long, value_enum, default_value_t = TargetArg::Pi)]
        target: TargetArg,
        /// PII parameter of the target.
        #[arg(long, default_value = "a")]
        target_param: String,
    },
    /// Pull the input equation back through a change of variables.
    Pullback {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        map: MapArgs,
    },
}

#[derive(Args, Debug, Clone)]
pub struct MapArgs {
    /// New independent variable as a function of x and y.
    #[arg(long = "x-new", allow_hyphen_values = true)]
    pub x_new: String,
    /// New dependent variable as a function of x and y.
    #[arg(long = "y-new", allow_hyphen_values = true)]
    pub y_new: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Pi,
    Pii,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputMode {
    Text,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Right-hand side in x, y and p (for y').
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["p_coeff", "q3", "r3", "s_coeff"])]
    pub rhs: Option<String>,
    /// Coefficient of 1.
    #[arg(long = "P", id = "p_coeff", allow_hyphen_values = true)]
    pub p: Option<String>,
    /// Raw coefficient of y' (three times Q).
    #[arg(long = "Q3", id = "q3", allow_hyphen_values = true)]
    pub q3: Option<String>,
    /// Raw coefficient of y'^2 (three times R).
    #[arg(long = "R3", id = "r3", allow_hyphen_values = true)]
    pub r3: Option<String>,
    /// Coefficient of y'^3.
    #[arg(long = "S", id = "s_coeff", allow_hyphen_values = true)]
    pub s: Option<String>,
    /// `name=value`, or `name=symbolic` to keep a parameter generic.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
    #[arg(long, default_value_t = 0x5eed_2024)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    /// Decimal digits used when verifying maps.
    #[arg(long, default_value_t = 40)]
    pub precision: u32,
    #[arg(long, value_enum, default_value_t = OutputMode::Text)]
    pub output: OutputMode,
    /// Use the sixth-root first term in the PII map.
    #[arg(long = "pii-map-as-printed")]
    pub pii_map_as_printed: bool,
}

impl Common {
    fn verify_options(&self) -> VerifyOptions {
        VerifyOptions { samples: self.samples, seed: self.seed, digits: self.precision, ..VerifyOptions::default() }
    }
}

/// What a run printed and how it ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl RunOutput {
    fn usage(msg: impl Into<String>) -> RunOutput {
        RunOutput { code: EXIT_USAGE, stdout: String::new(), stderr: msg.into() }
    }
}

pub fn run_cli<I, T>(argv: I) -> RunOutput
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    RunOutput { code: EXIT_OK, stdout: text, stderr: String::new() }
                }
                _ => RunOutput::usage(text),
            };
        }
    };
    match execute(&cli.command) {
        Ok((code, report)) => {
            let common = match &cli.command {
                Command::Classify(c) | Command::Invariants(c) | Command::Map(c) => c,
                Command::Verify { common, .. } | Command::Pullback { common, .. } => common,
            };
            RunOutput { code, stdout: emit_report(&report, common.output), stderr: String::new() }
        }
        Err(msg) => RunOutput::usage(format!("error: {msg}\n")),
    }
}

fn input_ode(c: &Common) -> Result<OdeCubic, String> {
    let parse = |s: &str| parse_expression(s).map_err(|e| format!("cannot parse `{s}`: {e}"));
    let ode = if let Some(rhs) = &c.rhs {
        painleve_core::parse::extract_cubic_coefficients(&parse(rhs)?).map_err(|e| e.to_string())?
    } else if c.p.is_some() || c.q3.is_some() || c.r3.is_some() || c.s.is_some() {
        let get = |o: &Option<String>| o.as_deref().map(parse).unwrap_or_else(|| Ok(parse_expression("0").unwrap()));
        OdeCubic::from_raw(&get(&c.p)?, &get(&c.q3)?, &get(&c.r3)?, &get(&c.s)?).map_err(|e| e.to_string())?
    } else {
        return Err("give the equation with --rhs or with --P/--Q3/--R3/--S".into());
    };
    bind_params(&ode, &c.params)
}

fn bind_params(ode: &OdeCubic, params: &[String]) -> Result<OdeCubic, String> {
    let mut binds: Vec<(String, RatFn)> = Vec::new();
    for p in params {
        let (name, value) = p.split_once('=').ok_or_else(|| format!("--param expects NAME=VALUE, got `{p}`"))?;
        let name = name.trim();
        if matches!(name, "x" | "y" | "p") || name.is_empty() {
            return Err(format!("`{name}` is not a parameter name"));
        }
        if value.trim() == "symbolic" {
            continue;
        }
        let v = parse_expression(value)
            .map_err(|e| format!("cannot parse parameter value `{value}`: {e}"))?
            .to_ratfn()
            .map_err(|e| e.to_string())?;
        binds.push((name.to_string(), v));
    }
    if binds.is_empty() {
        return Ok(ode.clone());
    }
    let f = |s: &Symbol| match s {
        Symbol::Param(n) => binds.iter().find(|(b, _)| **b == **n).map(|(_, v)| v.clone()),
        _ => None,
    };
    let [p, q, r, s] = ode.coefficients();
    let sub = |c: &RatFn| c.substitute(&f).map_err(|e| format!("parameter values make a coefficient undefined: {e}"));
    OdeCubic::from_ratfns(sub(p)?, sub(q)?, sub(r)?, sub(s)?).map_err(|e| e.to_string())
}

fn parse_map(m: &MapArgs) -> Result<PointMap, String> {
    let x = parse_printed(&m.x_new).map_err(|e| format!("cannot parse --x-new: {e}"))?;
    let y = parse_printed(&m.y_new).map_err(|e| format!("cannot parse --y-new: {e}"))?;
    PointMap::from_exprs(&x, &y).map_err(|e| e.to_string())
}

fn class_code(c: &Classification) -> i32 {
    match c {
        Classification::NotEquivalent { .. } => EXIT_NOT_EQUIVALENT,
        Classification::Indeterminate { .. } => EXIT_INDETERMINATE,
        _ => EXIT_OK,
    }
}

fn execute(cmd: &Command) -> Result<(i32, Report), String> {
    match cmd {
        Command::Classify(c) => {
            let rep = classify(&input_ode(c)?);
            Ok((class_code(&rep.classification), Report::from_classification("classify", &rep)))
        }
        Command::Invariants(c) => {
            let rep = classify(&input_ode(c)?);
            let mut out = Report::from_classification("invariants", &rep);
            out.pseudos = Some(
                rep.pseudos
                    .iter()
                    .map(|p| PseudoEntry {
                        name: p.name.to_string(),
                        weight: p.weight,
                        value: match &p.value {
                            PseudoValue::Scalar(r) => vec![r.to_string()],
                            PseudoValue::Vector(v) => v.iter().map(|r| r.to_string()).collect(),
                        },
                    })
                    .collect(),
            );
            let code = if rep.branch.is_none() && !matches!(rep.classification, Classification::NotEquivalent { .. }) {
                EXIT_INDETERMINATE
            } else {
                EXIT_OK
            };
            Ok((code, out))
        }
        Command::Map(c) => {
            let rep = classify(&input_ode(c)?);
            let mut out = Report::from_classification("map", &rep);
            let opts = c.verify_options();
            let res = match &rep.classification {
                Classification::PainleveI => map_painleve1(&rep, &opts),
                Classification::PainleveII { .. } => map_painleve2(&rep, c.pii_map_as_printed, &opts),
                // The classifier already warns that no explicit map exists.
                Classification::PainleveIIIZero => return Ok((EXIT_OK, out)),
                other => return Ok((class_code(other), out)),
            };
            match res {
                Ok(m) => {
                    out.map = Some(MapEntry::from_map(&m.chosen));
                    out.candidates = Some(candidate_entries(&m));
                    Ok((EXIT_OK, out))
                }
                Err(e) => {
                    out.warnings.push(format!("map: {e}"));
                    Ok((EXIT_NOT_EQUIVALENT, out))
                }
            }
        }
        Command::Verify { common, map, target, target_param } => {
            let source = input_ode(common)?;
            let mut m = parse_map(map)?;
            let tgt = match target {
                TargetArg::Pi => painleve1_ode(),
                TargetArg::Pii => {
                    let a = parse_expression(target_param)
                        .map_err(|e| format!("cannot parse --target-param: {e}"))?
                        .to_ratfn()
                        .map_err(|e| e.to_string())?;
                    bind_params(&painleve2_ode(&a), &common.params)?
                }
            };
            let mut out = Report::empty("verify");
            out.coefficients = Some(Coefficients::of(&source));
            match verify_map(&source, &tgt, &m, &common.verify_options()) {
                Ok(v) => {
                    let code = if v.passed { EXIT_OK } else { EXIT_NOT_EQUIVALENT };
                    out.class = Some(if v.passed { "Verified" } else { "Rejected" }.to_string());
                    m.verification = Some(v);
                    out.map = Some(MapEntry::from_map(&m));
                    Ok((code, out))
                }
                Err(e @ TransformError::AllSamplesSingular(_)) => {
                    out.class = Some("Indeterminate".to_string());
                    out.map = Some(MapEntry::from_map(&m));
                    out.warnings.push(e.to_string());
                    Ok((EXIT_INDETERMINATE, out))
                }
                Err(e) => Err(e.to_string()),
            }
        }
        Command::Pullback { common, map } => {
            let target = input_ode(common)?;
            let m = parse_map(map)?;
            let src = pullback_ode(&target, &m).map_err(|e| e.to_string())?;
            let mut out = Report::empty("pullback");
            out.rhs = Some(src.rhs().to_string());
            out.coefficients = Some(Coefficients::of(&src));
            out.map = Some(MapEntry::from_map(&m));
            Ok((EXIT_OK, out))
        }
    }
}

fn candidate_entries(m: &MapResult) -> Vec<MapEntry> {
    m.candidates.iter().map(MapEntry::from_map).collect()
}

/// The stable report shared by text and JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: &'static str,
    pub class: Option<String>,
    #[serde(rename = "J")]
    pub j: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rhs: Option<String>,
    pub coefficients: Option<Coefficients>,
    pub branch: Option<String>,
    pub conditions: Vec<ConditionEntry>,
    pub invariants: serde_json::Map<String, serde_json::Value>,
    pub map: Option<MapEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<MapEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pseudos: Option<Vec<PseudoEntry>>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Coefficients {
    #[serde(rename = "P")]
    pub p: String,
    #[serde(rename = "Q")]
    pub q: String,
    #[serde(rename = "R")]
    pub r: String,
    #[serde(rename = "S")]
    pub s: String,
}

impl Coefficients {
    fn of(ode: &OdeCubic) -> Coefficients {
        Coefficients { p: ode.p.to_string(), q: ode.q.to_string(), r: ode.r.to_string(), s: ode.s.to_string() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionEntry {
    pub label: String,
    pub paper_ref: String,
    pub verdict: String,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct MapEntry {
    pub x_new: String,
    pub y_new: String,
    pub formula: String,
    pub branch: String,
    pub verified: Option<bool>,
    pub max_residual: Option<f64>,
    pub samples: Option<usize>,
}

impl MapEntry {
    fn from_map(m: &PointMap) -> MapEntry {
        let v: Option<&Verification> = m.verification.as_ref();
        MapEntry {
            x_new: m.x_new.to_string(),
            y_new: m.y_new.to_string(),
            formula: m.formula.to_string(),
            branch: m.branch.to_string(),
            verified: v.map(|v| v.passed),
            max_residual: v.map(|v| v.max_residual),
            samples: v.map(|v| v.samples),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PseudoEntry {
    pub name: String,
    pub weight: i32,
    pub value: Vec<String>,
}

impl Report {
    fn empty(command: &'static str) -> Report {
        Report {
            schema_version: SCHEMA_VERSION,
            command,
            class: None,
            j: None,
            rhs: None,
            coefficients: None,
            branch: None,
            conditions: Vec::new(),
            invariants: serde_json::Map::new(),
            map: None,
            candidates: None,
            pseudos: None,
            warnings: Vec::new(),
        }
    }

    pub fn from_classification(command: &'static str, rep: &InvariantReport) -> Report {
        let mut out = Report::empty(command);
        out.class = Some(rep.classification.name().to_string());
        if let Classification::PainleveII { j } = &rep.classification {
            out.j = Some(j.to_string());
        }
        out.coefficients = Some(Coefficients::of(&rep.ode));
        out.branch = rep.branch.as_ref().map(|b| format!("{:?}", b.kind));
        out.conditions = rep
            .conditions()
            .map(|c| ConditionEntry {
                label: c.label(),
                paper_ref: c.statement.to_string(),
                verdict: c.status.to_string(),
                note: c.note.clone(),
            })
            .collect();
        for (name, v) in rep.invariants() {
            out.invariants.insert(name, serde_json::Value::String(v.to_string()));
        }
        out.warnings = rep.warnings.clone();
        out
    }
}

pub fn emit_report(report: &Report, mode: OutputMode) -> String {
    match mode {
        OutputMode::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        OutputMode::Text => text_report(report),
    }
}

fn text_report(r: &Report) -> String {
    let mut s = String::new();
    if let Some(c) = &r.class {
        let _ = writeln!(s, "class: {c}");
    }
    if let Some(j) = &r.j {
        let _ = writeln!(s, "J = ±({j})");
    }
    if let Some(rhs) = &r.rhs {
        let _ = writeln!(s, "y'' = {rhs}");
    }
    if let Some(c) = &r.coefficients {
        let _ = writeln!(s, "P = {}\nQ = {}\nR = {}\nS = {}", c.p, c.q, c.r, c.s);
    }
    if let Some(b) = &r.branch {
        let _ = writeln!(s, "branch: {b}");
    }
    if !r.conditions.is_empty() {
        s.push_str("conditions:\n");
        for c in &r.conditions {
            let _ = write!(s, "  {}: {} {}", c.label, c.paper_ref, c.verdict);
            if !c.note.is_empty() {
                let _ = write!(s, " ({})", c.note);
            }
            s.push('\n');
        }
    }
    if !r.invariants.is_empty() {
        s.push_str("invariants:\n");
        for (k, v) in &r.invariants {
            let _ = writeln!(s, "  {k} = {}", v.as_str().unwrap_or_default());
        }
    }
    if let Some(ps) = &r.pseudos {
        s.push_str("pseudo-objects:\n");
        for p in ps {
            let _ = writeln!(s, "  {} (weight {}) = {}", p.name, p.weight, p.value.join(", "));
        }
    }
    if let Some(m) = &r.map {
        let _ = writeln!(s, "map ({}, {}):\n  x~ = {}\n  y~ = {}", m.formula, m.branch, m.x_new, m.y_new);
        if let (Some(ok), Some(res), Some(n)) = (m.verified, m.max_residual, m.samples) {
            let _ = writeln!(
                s,
                "  {} with max residual {res:.3e} over {n} samples",
                if ok { "verified" } else { "rejected" }
            );
        }
    }
    if !r.warnings.is_empty() {
        s.push_str("warnings:\n");
        for w in &r.warnings {
            let _ = writeln!(s, "  {w}");
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use painleve_core::parse::parse_ode;

    #[test]
    fn params_substitute_and_symbolic_is_kept() {
        let ode = parse_ode("2*y^3 + x*y + a + b").unwrap();
        let bound = bind_params(&ode, &["a=3".into(), "b=symbolic".into()]).unwrap();
        assert_eq!(bound.rhs().to_string(), "x*y + 2*y^3 + b + 3");
    }

    #[test]
    fn bad_params_are_rejected() {
        let ode = parse_ode("y/a").unwrap();
        assert!(bind_params(&ode, &["a".into()]).is_err());
        assert!(bind_params(&ode, &["x=1".into()]).is_err());
        assert!(bind_params(&ode, &["a=0".into()]).is_err());
    }

    #[test]
    fn raw_coefficients_need_all_four_or_rhs() {
        let c = Cli::try_parse_from(["painleve", "classify", "--P", "x"]).unwrap();
        let Command::Classify(common) = c.command else { unreachable!() };
        let ode = input_ode(&common).unwrap();
        assert_eq!(ode.rhs().to_string(), "x");
        assert!(Cli::try_parse_from(["painleve", "classify", "--rhs", "y", "--S", "1"]).is_err());
    }
}
