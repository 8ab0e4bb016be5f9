//! Weighted grid graphs on finite windows of ℤⁿ.
//!
//! A [`GridWindow`] is the cube `Q_ρ` (ℓ∞ ball of radius ρ) together with a
//! [`WeightProvider`]. An edge is written `{x, x + e_i}` and addressed by its
//! lower endpoint `x` and axis `i`; directed steps `x → x + σe_i` are handled
//! by [`GridWindow::step_weight`].

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::graph::{GraphBuilder, VertexId, WeightedGraph};
use crate::scalar::Scalar;

pub mod closed;
pub mod decay;
pub mod fields;
pub mod line;
pub mod mass;
pub mod shells;

pub use closed::{abs_term, kappa_grid, linear_terms, scalar_grid};
pub use decay::{flatness_diagnostics, strong_decay_check, DecayConfig, FlatnessReport, StrongDecayReport};
pub use line::{line_concavity_check, LineReport};
pub use mass::{desk_rigidity, mass_estimate, MassConfig, MassEstimate, MassPoint, RigidityReport};
pub use shells::{shell_edges, shell_sums, ShellEdges, ShellSums};

pub type Point = Vec<i64>;

/// Closure type of procedural fields: `(x, axis) ↦ w(x, x + e_axis)`.
pub type FieldFn<S> = dyn Fn(&[i64], usize) -> S + Send + Sync;

#[derive(Clone)]
pub enum WeightProvider<S> {
    /// Explicit weights; edges not listed take `default` (or are an error).
    Table {
        weights: HashMap<(Point, usize), S>,
        default: Option<S>,
    },
    /// Weights from a formula, valid for edges inside `Q_radius`.
    Field {
        name: String,
        radius: Option<i64>,
        f: Arc<FieldFn<S>>,
    },
}

impl<S: fmt::Debug> fmt::Debug for WeightProvider<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightProvider::Table { weights, default } => f
                .debug_struct("Table")
                .field("entries", &weights.len())
                .field("default", default)
                .finish(),
            WeightProvider::Field { name, radius, .. } => {
                f.debug_struct("Field").field("name", name).field("radius", radius).finish()
            }
        }
    }
}

impl<S: Scalar> WeightProvider<S> {
    pub fn uniform(c: S) -> Self {
        WeightProvider::Table {
            weights: HashMap::new(),
            default: Some(c),
        }
    }

    pub fn field(name: impl Into<String>, f: impl Fn(&[i64], usize) -> S + Send + Sync + 'static) -> Self {
        WeightProvider::Field {
            name: name.into(),
            radius: None,
            f: Arc::new(f),
        }
    }

    pub fn with_radius(self, r: i64) -> Self {
        match self {
            WeightProvider::Field { name, f, .. } => WeightProvider::Field {
                name,
                radius: Some(r),
                f,
            },
            table => table,
        }
    }

    fn lookup(&self, x: &[i64], axis: usize) -> Result<S> {
        match self {
            WeightProvider::Table { weights, default } => {
                if let Some(w) = weights.get(&(x.to_vec(), axis)) {
                    return Ok(w.clone());
                }
                default
                    .clone()
                    .ok_or_else(|| Error::OutOfWindow(format!("no weight for edge {} along axis {axis}", fmt_point(x))))
            }
            WeightProvider::Field { name, radius, f } => {
                if let Some(r) = radius {
                    let mut y = x.to_vec();
                    y[axis] += 1;
                    if linf(x) > *r || linf(&y) > *r {
                        return Err(Error::OutOfWindow(format!(
                            "field `{name}` is only valid inside Q_{r}, queried {}",
                            fmt_point(x)
                        )));
                    }
                }
                Ok(f(x, axis))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct GridWindow<S> {
    n: usize,
    rho: i64,
    provider: WeightProvider<S>,
}

pub fn linf(x: &[i64]) -> i64 {
    x.iter().map(|c| c.abs()).max().unwrap_or(0)
}

pub fn unit(n: usize, axis: usize, sign: i64) -> Point {
    let mut e = vec![0; n];
    e[axis] = sign;
    e
}

pub fn add(x: &[i64], y: &[i64]) -> Point {
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

pub fn shifted(x: &[i64], axis: usize, by: i64) -> Point {
    let mut y = x.to_vec();
    y[axis] += by;
    y
}

pub fn fmt_point(x: &[i64]) -> String {
    let parts: Vec<String> = x.iter().map(i64::to_string).collect();
    format!("({})", parts.join(","))
}

/// Vertex label used by [`GridWindow::to_graph`].
pub fn point_label(x: &[i64]) -> String {
    let parts: Vec<String> = x.iter().map(i64::to_string).collect();
    parts.join(",")
}

pub fn parse_point_label(s: &str) -> Option<Point> {
    s.split(',').map(|p| p.trim().parse().ok()).collect()
}

/// All points of `Q_r` in lexicographic order.
pub fn cube_points(n: usize, r: i64) -> Vec<Point> {
    let side = (2 * r + 1) as usize;
    let total = side.pow(n as u32);
    let mut out = Vec::with_capacity(total);
    let mut p = vec![-r; n];
    for _ in 0..total {
        out.push(p.clone());
        for k in (0..n).rev() {
            p[k] += 1;
            if p[k] <= r {
                break;
            }
            p[k] = -r;
        }
    }
    out
}

/// Points of the ℓ∞ sphere `S_r`.
pub fn sphere_points(n: usize, r: i64) -> Vec<Point> {
    if r == 0 {
        return vec![vec![0; n]];
    }
    cube_points(n, r).into_iter().filter(|p| linf(p) == r).collect()
}

impl<S: Scalar> GridWindow<S> {
    pub fn new(n: usize, rho: i64, provider: WeightProvider<S>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if rho < 0 {
            return Err(Error::InvalidParameter(format!("window radius {rho} is negative")));
        }
        Ok(GridWindow { n, rho, provider })
    }

    /// The standard grid, `w ≡ 1`.
    pub fn standard(n: usize, rho: i64) -> Result<Self> {
        Self::new(n, rho, WeightProvider::uniform(S::one()))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rho(&self) -> i64 {
        self.rho
    }

    pub fn provider(&self) -> &WeightProvider<S> {
        &self.provider
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.len() == self.n && linf(x) <= self.rho
    }

    /// `w(x, x + e_axis)`.
    pub fn weight(&self, x: &[i64], axis: usize) -> Result<S> {
        if axis >= self.n || x.len() != self.n {
            return Err(Error::InvalidParameter(format!(
                "edge {} along axis {axis} in dimension {}",
                fmt_point(x),
                self.n
            )));
        }
        let y = shifted(x, axis, 1);
        if !self.contains(x) || !self.contains(&y) {
            return Err(Error::OutOfWindow(format!(
                "edge {}-{} leaves Q_{}",
                fmt_point(x),
                fmt_point(&y),
                self.rho
            )));
        }
        let w = self.provider.lookup(x, axis)?;
        if !w.is_positive() {
            return Err(Error::NonPositiveWeight {
                u: fmt_point(x),
                v: fmt_point(&y),
                weight: w.to_string(),
            });
        }
        Ok(w)
    }

    /// `w(x, x + σ e_axis)` for `σ = ±1`.
    pub fn step_weight(&self, x: &[i64], axis: usize, sign: i64) -> Result<S> {
        if sign > 0 {
            self.weight(x, axis)
        } else {
            self.weight(&shifted(x, axis, -1), axis)
        }
    }

    /// Every edge `{x, x + e_i}` with both endpoints in the window, in
    /// canonical order (by `x`, then axis).
    pub fn edges(&self) -> Vec<(Point, usize)> {
        let mut out = Vec::new();
        for x in cube_points(self.n, self.rho) {
            for axis in 0..self.n {
                if x[axis] < self.rho {
                    out.push((x.clone(), axis));
                }
            }
        }
        out
    }

    /// Materialises the window as a general weighted graph. Vertex ids follow
    /// [`cube_points`] order and labels are [`point_label`]s.
    pub fn to_graph(&self) -> Result<WeightedGraph<S>> {
        let points = cube_points(self.n, self.rho);
        let mut b = GraphBuilder::new();
        for p in &points {
            b.add_vertex(point_label(p))?;
        }
        for (x, axis) in self.edges() {
            let w = self.weight(&x, axis)?;
            let u = self.vertex_id(&x);
            let v = self.vertex_id(&shifted(&x, axis, 1));
            b.add_edge(u, v, w)?;
        }
        b.build()
    }

    /// Id of `x` in [`Self::to_graph`].
    pub fn vertex_id(&self, x: &[i64]) -> VertexId {
        let side = 2 * self.rho + 1;
        let mut id = 0i64;
        for c in x {
            id = id * side + (c + self.rho);
        }
        VertexId(id as usize)
    }

    /// Evaluates the provider on every window edge into a table.
    pub fn materialize(&self) -> Result<GridWindow<S>> {
        let mut weights = HashMap::new();
        for (x, axis) in self.edges() {
            let w = self.weight(&x, axis)?;
            weights.insert((x, axis), w);
        }
        GridWindow::new(self.n, self.rho, WeightProvider::Table { weights, default: None })
    }

    /// Same window with axes permuted: new axis `k` is old axis `perm[k]`.
    pub fn permute_axes(&self, perm: &[usize]) -> Result<GridWindow<S>> {
        let mut seen = vec![false; self.n];
        if perm.len() != self.n || perm.iter().any(|p| *p >= self.n || std::mem::replace(&mut seen[*p], true)) {
            return Err(Error::InvalidParameter(format!("{perm:?} is not a permutation")));
        }
        let mut weights = HashMap::new();
        for (x, axis) in self.edges() {
            let w = self.weight(&x, axis)?;
            let new_x: Point = perm.iter().map(|p| x[*p]).collect();
            let new_axis = perm.iter().position(|p| *p == axis).unwrap();
            weights.insert((new_x, new_axis), w);
        }
        GridWindow::new(self.n, self.rho, WeightProvider::Table { weights, default: None })
    }

    /// Grid weight table JSON. Edges of weight 1 are omitted.
    pub fn to_json(&self) -> Result<Value> {
        let mut edges = Vec::new();
        for (x, axis) in self.edges() {
            let w = self.weight(&x, axis)?;
            if w != S::one() {
                let mut e = Map::new();
                e.insert("x".into(), Value::from(x));
                e.insert("axis".into(), Value::from(axis));
                e.insert("w".into(), w.to_json());
                edges.push(Value::Object(e));
            }
        }
        let mut root = Map::new();
        root.insert("n".into(), Value::from(self.n));
        root.insert("rho".into(), Value::from(self.rho));
        root.insert("edges".into(), Value::Array(edges));
        Ok(Value::Object(root))
    }

    /// Parses the weight table format. Window edges that are not listed have
    /// weight 1.
    pub fn from_json(v: &Value) -> Result<GridWindow<S>> {
        let n = v
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parse("grid table needs a positive integer `n`".into()))? as usize;
        let rho = v
            .get("rho")
            .and_then(Value::as_i64)
            .ok_or_else(|| Error::Parse("grid table needs an integer `rho`".into()))?;
        let mut weights = HashMap::new();
        let edges = match v.get("edges") {
            Some(e) => e
                .as_array()
                .ok_or_else(|| Error::Parse("`edges` must be an array".into()))?
                .as_slice(),
            None => &[],
        };
        for (i, e) in edges.iter().enumerate() {
            let x = parse_point(e.get("x"), n).map_err(|m| Error::Parse(format!("edges[{i}].x: {m}")))?;
            let axis = e
                .get("axis")
                .and_then(Value::as_u64)
                .filter(|a| (*a as usize) < n)
                .ok_or_else(|| Error::Parse(format!("edges[{i}].axis must be in 0..{n}")))? as usize;
            let w = S::from_json(e.get("w").unwrap_or(&Value::Null))
                .map_err(|err| Error::Parse(format!("edges[{i}].w: {err}")))?;
            let y = shifted(&x, axis, 1);
            if linf(&x) > rho || linf(&y) > rho {
                return Err(Error::Parse(format!("edges[{i}] lies outside Q_{rho}")));
            }
            if !w.is_positive() {
                return Err(Error::NonPositiveWeight {
                    u: fmt_point(&x),
                    v: fmt_point(&y),
                    weight: w.to_string(),
                });
            }
            if weights.insert((x, axis), w).is_some() {
                return Err(Error::Parse(format!("edges[{i}] is listed twice")));
            }
        }
        GridWindow::new(
            n,
            rho,
            WeightProvider::Table {
                weights,
                default: Some(S::one()),
            },
        )
    }
}

pub(crate) fn parse_point(v: Option<&Value>, n: usize) -> std::result::Result<Point, String> {
    let arr = v.and_then(Value::as_array).ok_or("expected an integer array")?;
    if arr.len() != n {
        return Err(format!("expected {n} coordinates, found {}", arr.len()));
    }
    arr.iter()
        .map(|c| c.as_i64().ok_or_else(|| format!("non-integer coordinate {c}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ratio, Rational};

    #[test]
    fn cube_and_sphere_sizes() {
        assert_eq!(cube_points(2, 2).len(), 25);
        assert_eq!(cube_points(3, 1).len(), 27);
        assert_eq!(sphere_points(2, 2).len(), 16);
        assert_eq!(sphere_points(3, 0), vec![vec![0, 0, 0]]);
        let pts = cube_points(2, 1);
        assert_eq!(pts[0], vec![-1, -1]);
        assert_eq!(pts[1], vec![-1, 0]);
    }

    #[test]
    fn window_weights_and_bounds() {
        let gw = GridWindow::<Rational>::standard(2, 2).unwrap();
        assert_eq!(gw.weight(&[1, 1], 0).unwrap(), Rational::one());
        assert!(matches!(gw.weight(&[2, 0], 0), Err(Error::OutOfWindow(_))));
        assert_eq!(gw.step_weight(&[-1, 0], 0, -1).unwrap(), Rational::one());
        assert!(gw.step_weight(&[-2, 0], 0, -1).is_err());
        assert_eq!(gw.edges().len(), 2 * 5 * 4);
    }

    #[test]
    fn graph_distances_are_l1() {
        let gw = GridWindow::<Rational>::standard(2, 3).unwrap();
        let g = gw.to_graph().unwrap();
        let d = g.distance(gw.vertex_id(&[0, 0]), gw.vertex_id(&[2, 3])).unwrap();
        assert_eq!(d, 5);
        assert_eq!(g.label(gw.vertex_id(&[-1, 2])), "-1,2");
        let ball = g.ball(gw.vertex_id(&[0, 0]), 1).unwrap();
        assert_eq!(ball.len(), 5);
        assert_eq!(g.degree(gw.vertex_id(&[0, 0])), 4);
    }

    #[test]
    fn json_round_trip_and_defaults() {
        let mut weights = HashMap::new();
        weights.insert((vec![0, 0], 1), ratio(3, 2));
        let gw = GridWindow::new(
            2,
            2,
            WeightProvider::Table {
                weights,
                default: Some(Rational::one()),
            },
        )
        .unwrap();
        let j = gw.to_json().unwrap();
        let back = GridWindow::<Rational>::from_json(&j).unwrap();
        assert_eq!(back.weight(&[0, 0], 1).unwrap(), ratio(3, 2));
        assert_eq!(back.weight(&[0, 0], 0).unwrap(), Rational::one());
        assert_eq!(back.to_json().unwrap(), j);
        let outside = serde_json::json!({"n": 2, "rho": 1, "edges": [{"x": [1, 0], "axis": 0, "w": "2"}]});
        assert!(GridWindow::<Rational>::from_json(&outside).is_err());
    }

    #[test]
    fn permuting_axes_moves_weights() {
        let mut weights = HashMap::new();
        weights.insert((vec![1, 0, 0], 2), ratio(5, 1));
        let gw = GridWindow::new(
            3,
            2,
            WeightProvider::Table {
                weights,
                default: Some(Rational::one()),
            },
        )
        .unwrap();
        // new axis k = old axis perm[k]
        let p = gw.permute_axes(&[2, 0, 1]).unwrap();
        assert_eq!(p.weight(&[0, 1, 0], 0).unwrap(), ratio(5, 1));
        assert!(gw.permute_axes(&[0, 0, 1]).is_err());
    }
}
