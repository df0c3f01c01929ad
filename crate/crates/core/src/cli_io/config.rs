//! The experiment config file.
//!
//! TOML, versioned by a top-level `schema_version = 1`:
//!
//! ```toml
//! schema_version = 1
//! beta = 0.5
//! horizon = 1.0                       # default 1.0
//! truncation = 64                     # default 64
//! n_values = [4, 8, 16, 32, 64, 128, 256]
//! n_paths = 100000                    # 0 skips Monte Carlo
//! seed = 12345
//! theta = 0.45                        # optional, chosen from the payoff otherwise
//! output_path = "results"             # optional
//!
//! [payoff]
//! kind = "indicator"                  # indicator | call | pure_hermite | polynomial | tabulated
//! strike = 0.0
//! ```
//!
//! Only `beta` and `[payoff]` are required. Unknown keys are errors.

use std::fmt;

use toml::{Table, Value};

use crate::hermite_chaos::{PayoffSpec, QuadratureSettings, DEFAULT_TRUNCATION};
use crate::rate_lab::{DEFAULT_N_PATHS, DEFAULT_N_VALUES};

pub const SCHEMA_VERSION: i64 = 1;
pub const DEFAULT_HORIZON: f64 = 1.0;
pub const DEFAULT_SEED: u64 = 12345;
pub const MAX_TRUNCATION: usize = 4096;
/// Smallest nonzero path count accepted.
pub const MIN_PATHS: u64 = 1000;

const TOP_LEVEL_KEYS: [&str; 10] = [
    "schema_version",
    "beta",
    "horizon",
    "payoff",
    "truncation",
    "n_values",
    "n_paths",
    "seed",
    "theta",
    "output_path",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub beta: f64,
    pub horizon: f64,
    pub payoff: PayoffSpec,
    pub truncation: usize,
    pub n_values: Vec<usize>,
    pub n_paths: u64,
    pub seed: u64,
    pub theta: Option<f64>,
    pub output_path: Option<String>,
}

impl ExperimentConfig {
    /// Defaults everywhere except the two required fields.
    pub fn new(beta: f64, payoff: PayoffSpec) -> Self {
        ExperimentConfig {
            beta,
            horizon: DEFAULT_HORIZON,
            payoff,
            truncation: DEFAULT_TRUNCATION,
            n_values: DEFAULT_N_VALUES.to_vec(),
            n_paths: DEFAULT_N_PATHS,
            seed: DEFAULT_SEED,
            theta: None,
            output_path: None,
        }
    }

    /// Re-checks every numeric constraint, collecting all violations.
    pub fn validate(&self) -> Result<(), ConfigErrors> {
        let mut errors = ConfigErrors::default();
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            errors.push("beta", format!("{} is outside (0, 1]", self.beta));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            errors.push("horizon", format!("{} must be positive and finite", self.horizon));
        }
        if self.truncation == 0 || self.truncation > MAX_TRUNCATION {
            errors.push("truncation", format!("{} is outside [1, {MAX_TRUNCATION}]", self.truncation));
        }
        let mut distinct = self.n_values.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if self.n_values.contains(&0) {
            errors.push("n_values", "entries must be positive");
        }
        if distinct.len() < 3 {
            errors.push("n_values", "need at least three distinct values");
        }
        if self.n_paths != 0 && self.n_paths < MIN_PATHS {
            errors.push("n_paths", format!("{} must be 0 or at least {MIN_PATHS}", self.n_paths));
        }
        if self.seed > i64::MAX as u64 {
            errors.push("seed", "must fit in a signed 64-bit integer");
        }
        if let Some(theta) = self.theta {
            if !(theta > 0.0 && theta < 1.0) {
                errors.push("theta", format!("{theta} is outside (0, 1)"));
            }
        }
        if let Err(e) = self.payoff.validate() {
            errors.push("payoff", e.to_string());
        }
        if let PayoffSpec::Tabulated { grid, .. } = &self.payoff {
            let r = QuadratureSettings::default().half_width;
            if grid.first().is_some_and(|lo| *lo > -r) || grid.last().is_some_and(|hi| *hi < r) {
                errors.push("payoff.grid", format!("must cover [-{r}, {r}]"));
            }
        }
        errors.into_result()
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new();
        t.insert("schema_version".into(), Value::Integer(SCHEMA_VERSION));
        t.insert("beta".into(), Value::Float(self.beta));
        t.insert("horizon".into(), Value::Float(self.horizon));
        t.insert("truncation".into(), Value::Integer(self.truncation as i64));
        t.insert("n_values".into(), Value::Array(self.n_values.iter().map(|&n| Value::Integer(n as i64)).collect()));
        t.insert("n_paths".into(), Value::Integer(self.n_paths as i64));
        t.insert("seed".into(), Value::Integer(self.seed as i64));
        if let Some(theta) = self.theta {
            t.insert("theta".into(), Value::Float(theta));
        }
        if let Some(out) = &self.output_path {
            t.insert("output_path".into(), Value::String(out.clone()));
        }
        t.insert("payoff".into(), Value::Table(payoff_table(&self.payoff)));
        t
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_table()).expect("config tables always serialise")
    }
}

fn payoff_table(p: &PayoffSpec) -> Table {
    let floats = |v: &[f64]| Value::Array(v.iter().map(|&x| Value::Float(x)).collect());
    let mut t = Table::new();
    t.insert("kind".into(), Value::String(p.kind_name().into()));
    match p {
        PayoffSpec::Indicator { strike } | PayoffSpec::Call { strike } => {
            t.insert("strike".into(), Value::Float(*strike));
        }
        PayoffSpec::PureHermite { order } => {
            t.insert("order".into(), Value::Integer(*order as i64));
        }
        PayoffSpec::Polynomial { coefficients } => {
            t.insert("coefficients".into(), floats(coefficients));
        }
        PayoffSpec::Tabulated { grid, values } => {
            t.insert("grid".into(), floats(grid));
            t.insert("values".into(), floats(values));
        }
    }
    t
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

/// Every problem found in a config document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<FieldError>);

impl ConfigErrors {
    pub fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.0.push(FieldError { field: field.into(), message: message.into() });
    }

    pub fn fields(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|e| e.field.as_str())
    }

    fn into_result(self) -> Result<(), ConfigErrors> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(self)
        }
    }
}

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{}: {}", e.field, e.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

/// Field accessors that record failures instead of returning early.
struct Reader<'a> {
    table: &'a Table,
    prefix: &'static str,
    errors: &'a mut ConfigErrors,
}

impl Reader<'_> {
    fn name(&self, key: &str) -> String {
        if self.prefix.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.prefix)
        }
    }

    fn reject_unknown(&mut self, allowed: &[&str]) {
        for key in self.table.keys() {
            if !allowed.contains(&key.as_str()) {
                let name = self.name(key);
                self.errors.push(name, "unknown key");
            }
        }
    }

    fn float(&mut self, key: &str) -> Option<f64> {
        match self.table.get(key)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            _ => {
                let name = self.name(key);
                self.errors.push(name, "expected a number");
                None
            }
        }
    }

    fn int(&mut self, key: &str) -> Option<u64> {
        match self.table.get(key)? {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            _ => {
                let name = self.name(key);
                self.errors.push(name, "expected a non-negative integer");
                None
            }
        }
    }

    fn float_list(&mut self, key: &str) -> Option<Vec<f64>> {
        let items = self.list(key)?;
        let parsed: Option<Vec<f64>> = items
            .iter()
            .map(|v| match v {
                Value::Float(x) => Some(*x),
                Value::Integer(i) => Some(*i as f64),
                _ => None,
            })
            .collect();
        if parsed.is_none() {
            let name = self.name(key);
            self.errors.push(name, "expected an array of numbers");
        }
        parsed
    }

    fn int_list(&mut self, key: &str) -> Option<Vec<usize>> {
        let items = self.list(key)?;
        let parsed: Option<Vec<usize>> = items
            .iter()
            .map(|v| match v {
                Value::Integer(i) if *i >= 0 => Some(*i as usize),
                _ => None,
            })
            .collect();
        if parsed.is_none() {
            let name = self.name(key);
            self.errors.push(name, "expected an array of non-negative integers");
        }
        parsed
    }

    fn list(&mut self, key: &str) -> Option<&Vec<Value>> {
        match self.table.get(key)? {
            Value::Array(items) => Some(items),
            _ => {
                let name = self.name(key);
                self.errors.push(name, "expected an array");
                None
            }
        }
    }

    fn string(&mut self, key: &str) -> Option<String> {
        match self.table.get(key)? {
            Value::String(s) => Some(s.clone()),
            _ => {
                let name = self.name(key);
                self.errors.push(name, "expected a string");
                None
            }
        }
    }

    fn required<T>(&mut self, key: &str, value: Option<T>) -> Option<T> {
        if value.is_none() && !self.table.contains_key(key) {
            let name = self.name(key);
            self.errors.push(name, "missing required key");
        }
        value
    }
}

fn parse_payoff(table: &Table, errors: &mut ConfigErrors) -> Option<PayoffSpec> {
    let mut r = Reader { table, prefix: "payoff", errors };
    let kind = r.string("kind");
    let kind = r.required("kind", kind)?;
    let allowed: &[&str] = match kind.as_str() {
        "indicator" | "call" => &["kind", "strike"],
        "pure_hermite" => &["kind", "order"],
        "polynomial" => &["kind", "coefficients"],
        "tabulated" => &["kind", "grid", "values"],
        other => {
            r.errors.push(
                "payoff.kind",
                format!("unknown payoff `{other}`; expected indicator, call, pure_hermite, polynomial or tabulated"),
            );
            return None;
        }
    };
    r.reject_unknown(allowed);
    match kind.as_str() {
        "indicator" | "call" => {
            let strike = r.float("strike");
            let strike = r.required("strike", strike)?;
            Some(if kind == "indicator" { PayoffSpec::Indicator { strike } } else { PayoffSpec::Call { strike } })
        }
        "pure_hermite" => {
            let order = r.int("order");
            Some(PayoffSpec::PureHermite { order: r.required("order", order)? as usize })
        }
        "polynomial" => {
            let coefficients = r.float_list("coefficients");
            Some(PayoffSpec::Polynomial { coefficients: r.required("coefficients", coefficients)? })
        }
        _ => {
            let grid = r.float_list("grid");
            let grid = r.required("grid", grid);
            let values = r.float_list("values");
            let values = r.required("values", values);
            Some(PayoffSpec::Tabulated { grid: grid?, values: values? })
        }
    }
}

/// Parses and validates a config document, reporting every problem found.
pub fn parse_config(source: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let table: Table = source.parse().map_err(|e: toml::de::Error| {
        let mut errors = ConfigErrors::default();
        errors.push("<document>", e.message().to_string());
        errors
    })?;
    let mut errors = ConfigErrors::default();
    let mut r = Reader { table: &table, prefix: "", errors: &mut errors };
    r.reject_unknown(&TOP_LEVEL_KEYS);

    match table.get("schema_version") {
        Some(Value::Integer(SCHEMA_VERSION)) => {}
        Some(other) => {
            r.errors.push("schema_version", format!("unsupported version {other}; expected {SCHEMA_VERSION}"))
        }
        None => r.errors.push("schema_version", "missing required key"),
    }
    let beta = r.float("beta");
    let beta = r.required("beta", beta);
    let horizon = r.float("horizon").unwrap_or(DEFAULT_HORIZON);
    let truncation = r.int("truncation").map_or(DEFAULT_TRUNCATION, |n| n as usize);
    let n_values = r.int_list("n_values").unwrap_or_else(|| DEFAULT_N_VALUES.to_vec());
    let n_paths = r.int("n_paths").unwrap_or(DEFAULT_N_PATHS);
    let seed = r.int("seed").unwrap_or(DEFAULT_SEED);
    let theta = r.float("theta");
    let output_path = r.string("output_path");
    let payoff = match table.get("payoff") {
        Some(Value::Table(t)) => parse_payoff(t, &mut errors),
        Some(_) => {
            errors.push("payoff", "expected a table");
            None
        }
        None => {
            errors.push("payoff", "missing required table");
            None
        }
    };

    let (Some(beta), Some(payoff)) = (beta, payoff) else {
        return Err(errors);
    };
    let config = ExperimentConfig { beta, horizon, payoff, truncation, n_values, n_paths, seed, theta, output_path };
    if let Err(more) = config.validate() {
        errors.0.extend(more.0);
    }
    errors.into_result().map(|_| config)
}
