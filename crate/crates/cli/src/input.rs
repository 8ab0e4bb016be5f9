use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use serde_json::Value;

use gridmass::grid::GridWindow;
use gridmass::instances::FieldInstance;
use gridmass::{NumericMode, WeightedGraph};

/// A malformed file or flag combination. Exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn input_error(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(InputError(msg.into()))
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        input_error(format!(
            "{}: line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FieldName {
    Schwarzschild,
    LogModel,
}

/// Where a grid-like input comes from.
#[derive(Args, Debug, Clone)]
pub struct Source {
    /// JSON file: weighted graph, grid weight table or field instance.
    pub input: Option<std::path::PathBuf>,
    /// Use the standard grid window (w ≡ 1).
    #[arg(long, conflicts_with_all = ["input", "field"])]
    pub grid: bool,
    /// Use a procedural weight field.
    #[arg(long, value_enum, conflicts_with = "input")]
    pub field: Option<FieldName>,
    /// Dimension for --grid and --field.
    #[arg(long)]
    pub n: Option<usize>,
    /// Window radius for --grid and --field.
    #[arg(long)]
    pub rho: Option<i64>,
    /// Mass parameter for --field.
    #[arg(long)]
    pub m: Option<f64>,
}

pub enum Loaded {
    Graph(Value),
    Grid(Value),
    Standard { n: usize, rho: i64 },
    Field(FieldInstance),
}

impl Source {
    pub fn load(&self) -> Result<Loaded> {
        if self.grid {
            let n = self.n.ok_or_else(|| input_error("--grid needs --n"))?;
            let rho = self.rho.ok_or_else(|| input_error("--grid needs --rho"))?;
            return Ok(Loaded::Standard { n, rho });
        }
        if let Some(field) = self.field {
            let (name, n, m, rho) = match field {
                FieldName::Schwarzschild => ("schwarzschild", self.n.unwrap_or(3), self.m.unwrap_or(1.0), self.rho.unwrap_or(52)),
                FieldName::LogModel => ("log-model", self.n.unwrap_or(2), self.m.unwrap_or(0.01), self.rho.unwrap_or(102)),
            };
            return Ok(Loaded::Field(FieldInstance {
                field: name.into(),
                n,
                m,
                rho,
            }));
        }
        let path = self
            .input
            .as_ref()
            .ok_or_else(|| input_error("give an input file, --grid or --field"))?;
        let v = read_json(path)?;
        if v.get("field").is_some() {
            let f: FieldInstance = serde_json::from_value(v).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
            Ok(Loaded::Field(f))
        } else if v.get("rho").is_some() {
            Ok(Loaded::Grid(v))
        } else if v.get("vertices").is_some() {
            Ok(Loaded::Graph(v))
        } else {
            bail!(InputError(format!(
                "{}: not a graph (`vertices`), grid table (`rho`) or field instance (`field`)",
                path.display()
            )))
        }
    }
}

/// The numeric mode for an input: exact unless asked otherwise, floats for
/// procedural fields.
pub fn resolve_mode(requested: Option<NumericMode>, loaded: &Loaded) -> Result<NumericMode> {
    match (requested, loaded) {
        (Some(NumericMode::ExactRational), Loaded::Field(f)) => Err(input_error(format!(
            "the {} field has irrational weights; use --numeric float",
            f.field
        ))),
        (Some(m), _) => Ok(m),
        (None, Loaded::Field(_)) => Ok(NumericMode::float()),
        (None, _) => Ok(NumericMode::ExactRational),
    }
}

pub fn grid_window<S: gridmass::Scalar>(loaded: &Loaded) -> Result<GridWindow<S>> {
    match loaded {
        Loaded::Grid(v) => GridWindow::from_json(v).map_err(|e| input_error(e.to_string())),
        Loaded::Standard { n, rho } => Ok(GridWindow::standard(*n, *rho)?),
        Loaded::Field(_) => Err(input_error("procedural fields are evaluated in float mode")),
        Loaded::Graph(_) => Err(input_error("this command needs a grid window, not a general graph")),
    }
}

pub fn field_window(f: &FieldInstance) -> Result<GridWindow<f64>> {
    f.window().with_context(|| format!("building the {} field", f.field))
}

pub fn graph_from<S: gridmass::Scalar>(v: &Value) -> Result<WeightedGraph<S>> {
    WeightedGraph::from_json(v).map_err(|e| input_error(e.to_string()))
}
