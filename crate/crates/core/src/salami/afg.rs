//! Truncated asymptotically flat graphs: a finite core `K` glued to the grid
//! `Q_ρ ∖ Q_r` along `S_{r+1}`.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::graph::{GraphBuilder, VertexId, WeightedGraph};
use crate::grid::{cube_points, fmt_point, linf, parse_point, point_label, shifted, GridWindow, Point};
use crate::scalar::Scalar;

/// Edge between a core vertex and the grid point `grid ∈ S_{r+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceEdge<S> {
    pub core: String,
    pub grid: Point,
    pub w: S,
}

#[derive(Clone, Debug)]
pub struct AsymptoticallyFlatGraph<S> {
    pub n: usize,
    pub r: i64,
    pub rho: i64,
    pub core: WeightedGraph<S>,
    pub interface: Vec<InterfaceEdge<S>>,
    /// Weights of the grid part; only edges outside `Q_r` are read.
    pub outer: GridWindow<S>,
}

/// Smallest window in which every stage of the rigidity pipeline at level
/// `r` fits: the salami `C_R` with `R = 4(r+1)`, and the rotated salami
/// with `R' = 8r + 2` together with its level sets at `±(2r+3)`.
pub fn required_rho(n: usize, r: i64) -> i64 {
    let rotated = if n >= 3 { (8 * r + 2).max(5 * r + 3) } else { 5 * r + 3 };
    (4 * (r + 1)).max(rotated)
}

/// The full truncated graph with grid coordinates on the known part.
#[derive(Clone, Debug)]
pub struct Layered<S> {
    pub n: usize,
    pub rho: i64,
    pub g: WeightedGraph<S>,
    /// `Φ(v)` for grid vertices, `None` on the core.
    pub phi: Vec<Option<Point>>,
}

impl<S: Scalar> Layered<S> {
    pub fn core(&self) -> Vec<VertexId> {
        self.g.vertices().filter(|v| self.phi[v.0].is_none()).collect()
    }
}

impl<S: Scalar> AsymptoticallyFlatGraph<S> {
    pub fn new(
        n: usize,
        r: i64,
        rho: i64,
        core: WeightedGraph<S>,
        interface: Vec<InterfaceEdge<S>>,
        outer: GridWindow<S>,
    ) -> Result<Self> {
        if r < 0 || rho < r + 2 {
            return Err(Error::InvalidParameter(format!("need 0 <= r and r + 2 <= rho, got r={r}, rho={rho}")));
        }
        if outer.n() != n || outer.rho() != rho {
            return Err(Error::InvalidParameter("outer window must match n and rho".into()));
        }
        for e in &interface {
            core.vertex(&e.core)?;
            if e.grid.len() != n || linf(&e.grid) != r + 1 {
                return Err(Error::InvalidParameter(format!(
                    "interface endpoint {} is not in S_{}",
                    fmt_point(&e.grid),
                    r + 1
                )));
            }
            if !e.w.is_positive() {
                return Err(Error::NonPositiveWeight {
                    u: e.core.clone(),
                    v: point_label(&e.grid),
                    weight: e.w.to_string(),
                });
            }
        }
        for v in core.vertices() {
            if let Some(p) = crate::grid::parse_point_label(core.label(v)) {
                if p.len() == n && linf(&p) > r && linf(&p) <= rho {
                    return Err(Error::DuplicateVertex(core.label(v).to_string()));
                }
            }
        }
        Ok(AsymptoticallyFlatGraph {
            n,
            r,
            rho,
            core,
            interface,
            outer,
        })
    }

    /// The standard grid with `K = Q_r`.
    pub fn standard(n: usize, r: i64, rho: i64) -> Result<Self> {
        let mut b = GraphBuilder::new();
        let pts = cube_points(n, r);
        for p in &pts {
            b.add_vertex(point_label(p))?;
        }
        let mut interface = Vec::new();
        for p in &pts {
            for axis in 0..n {
                let q = shifted(p, axis, 1);
                if linf(&q) <= r {
                    let (u, v) = (b.vertex(&point_label(p)).unwrap(), b.vertex(&point_label(&q)).unwrap());
                    b.add_edge(u, v, S::one())?;
                }
                for sign in [1, -1] {
                    let q = shifted(p, axis, sign);
                    if linf(&q) == r + 1 {
                        interface.push(InterfaceEdge {
                            core: point_label(p),
                            grid: q,
                            w: S::one(),
                        });
                    }
                }
            }
        }
        Self::new(n, r, rho, b.build()?, interface, GridWindow::standard(n, rho)?)
    }

    /// Same graph with core vertices renamed `v0, v1, …` in random order.
    pub fn disguised<R: Rng>(&self, rng: &mut R) -> Result<Self> {
        let mut order: Vec<VertexId> = self.core.vertices().collect();
        order.shuffle(rng);
        let rename: HashMap<String, String> = order
            .iter()
            .enumerate()
            .map(|(i, v)| (self.core.label(*v).to_string(), format!("v{i}")))
            .collect();
        let mut b = GraphBuilder::new();
        for v in &order {
            let id = b.add_vertex(rename[self.core.label(*v)].clone())?;
            b.set_vertex_weight(id, self.core.vertex_weight(*v).clone())?;
        }
        let mut edges = self.core.edges();
        edges.shuffle(rng);
        for (u, v) in edges {
            let uu = b.vertex(&rename[self.core.label(u)]).unwrap();
            let vv = b.vertex(&rename[self.core.label(v)]).unwrap();
            b.add_edge(uu, vv, self.core.weight(u, v).unwrap().clone())?;
        }
        let interface = self
            .interface
            .iter()
            .map(|e| InterfaceEdge {
                core: rename[&e.core].clone(),
                grid: e.grid.clone(),
                w: e.w.clone(),
            })
            .collect();
        Self::new(self.n, self.r, self.rho, b.build()?, interface, self.outer.clone())
    }

    /// Copy with the core edge `{u, v}` reweighted.
    pub fn with_core_weight(&self, u: &str, v: &str, w: S) -> Result<Self> {
        let (uu, vv) = (self.core.vertex(u)?, self.core.vertex(v)?);
        if !self.core.adjacent(uu, vv) {
            return Err(Error::NotAdjacent(u.into(), v.into()));
        }
        let mut b = GraphBuilder::new();
        for x in self.core.vertices() {
            let id = b.add_vertex(self.core.label(x))?;
            b.set_vertex_weight(id, self.core.vertex_weight(x).clone())?;
        }
        for (a, c) in self.core.edges() {
            let weight = if (a, c) == (uu.min(vv), uu.max(vv)) {
                w.clone()
            } else {
                self.core.weight(a, c).unwrap().clone()
            };
            b.add_edge(a, c, weight)?;
        }
        Self::new(self.n, self.r, self.rho, b.build()?, self.interface.clone(), self.outer.clone())
    }

    /// Copy with a larger (or smaller) window; outer table weights carry
    /// over, new edges get weight 1.
    pub fn with_rho(&self, rho: i64) -> Result<Self> {
        let outer = GridWindow::from_json(&{
            let mut v = self.outer.to_json()?;
            v["rho"] = Value::from(rho);
            if let Some(edges) = v.get_mut("edges").and_then(Value::as_array_mut) {
                edges.retain(|e| {
                    let x: Vec<i64> = serde_json::from_value(e["x"].clone()).unwrap_or_default();
                    let a = e["axis"].as_u64().unwrap_or(0) as usize;
                    linf(&x).max(linf(&shifted(&x, a, 1))) <= rho
                });
            }
            v
        })?;
        Self::new(self.n, self.r, rho, self.core.clone(), self.interface.clone(), outer)
    }

    /// The whole truncated graph: core vertices first, then the grid points
    /// of `Q_ρ ∖ Q_r` in lexicographic order.
    pub fn layered(&self) -> Result<Layered<S>> {
        let mut b = GraphBuilder::new();
        let mut phi = Vec::new();
        for v in self.core.vertices() {
            let id = b.add_vertex(self.core.label(v))?;
            b.set_vertex_weight(id, self.core.vertex_weight(v).clone())?;
            phi.push(None);
        }
        for (u, v) in self.core.edges() {
            b.add_edge(u, v, self.core.weight(u, v).unwrap().clone())?;
        }
        let outside: Vec<Point> = cube_points(self.n, self.rho).into_iter().filter(|p| linf(p) > self.r).collect();
        let mut ids = HashMap::with_capacity(outside.len());
        for p in &outside {
            ids.insert(p.clone(), b.add_vertex(point_label(p))?);
            phi.push(Some(p.clone()));
        }
        for e in &self.interface {
            b.add_edge(self.core.vertex(&e.core)?, ids[&e.grid], e.w.clone())?;
        }
        for p in &outside {
            for axis in 0..self.n {
                let q = shifted(p, axis, 1);
                if let Some(&qv) = ids.get(&q) {
                    b.add_edge(ids[p], qv, self.outer.weight(p, axis)?)?;
                }
            }
        }
        Ok(Layered {
            n: self.n,
            rho: self.rho,
            g: b.build()?,
            phi,
        })
    }

    pub fn to_json(&self) -> Result<Value> {
        let mut root = Map::new();
        root.insert("n".into(), Value::from(self.n));
        root.insert("r".into(), Value::from(self.r));
        root.insert("rho".into(), Value::from(self.rho));
        root.insert("core".into(), self.core.to_json());
        let iface: Vec<Value> = self
            .interface
            .iter()
            .map(|e| {
                let mut m = Map::new();
                m.insert("core_vertex".into(), Value::String(e.core.clone()));
                m.insert("grid_vertex".into(), Value::from(e.grid.clone()));
                if e.w != S::one() {
                    m.insert("w".into(), e.w.to_json());
                }
                Value::Object(m)
            })
            .collect();
        root.insert("interface".into(), Value::Array(iface));
        let outer = self.outer.to_json()?;
        let listed = outer["edges"].as_array().map_or(0, |a| a.len());
        if listed > 0 {
            root.insert("outer_weights".into(), outer["edges"].clone());
        }
        Ok(Value::Object(root))
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let get_i = |k: &str| {
            v.get(k)
                .and_then(Value::as_i64)
                .ok_or_else(|| Error::Parse(format!("missing integer `{k}`")))
        };
        let n = get_i("n")? as usize;
        let r = get_i("r")?;
        let rho = get_i("rho")?;
        let core = WeightedGraph::from_json(v.get("core").ok_or_else(|| Error::Parse("missing `core`".into()))?)?;
        let mut interface = Vec::new();
        let items = v
            .get("interface")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("missing `interface` array".into()))?;
        for (i, e) in items.iter().enumerate() {
            let core_vertex = match e.get("core_vertex") {
                Some(Value::String(s)) => s.clone(),
                Some(Value::Number(x)) => x.to_string(),
                _ => return Err(Error::Parse(format!("interface[{i}].core_vertex missing"))),
            };
            let grid = parse_point(e.get("grid_vertex"), n).map_err(|m| Error::Parse(format!("interface[{i}].grid_vertex: {m}")))?;
            let w = match e.get("w") {
                Some(w) => S::from_json(w)?,
                None => S::one(),
            };
            interface.push(InterfaceEdge {
                core: core_vertex,
                grid,
                w,
            });
        }
        let mut table = Map::new();
        table.insert("n".into(), Value::from(n));
        table.insert("rho".into(), Value::from(rho));
        table.insert("edges".into(), v.get("outer_weights").cloned().unwrap_or(Value::Array(vec![])));
        let outer = GridWindow::from_json(&Value::Object(table))?;
        Self::new(n, r, rho, core, interface, outer)
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::scalar::{ratio, Rational};

    #[test]
    fn standard_layered_is_the_grid() {
        let afg = AsymptoticallyFlatGraph::<Rational>::standard(2, 1, 4).unwrap();
        let l = afg.layered().unwrap();
        let grid = GridWindow::<Rational>::standard(2, 4).unwrap().to_graph().unwrap();
        assert_eq!(l.g.num_vertices(), grid.num_vertices());
        assert_eq!(l.g.num_edges(), grid.num_edges());
        assert_eq!(l.core().len(), 9);
        assert_eq!(afg.interface.len(), 12);
    }

    #[test]
    fn json_round_trip() {
        let afg = AsymptoticallyFlatGraph::<Rational>::standard(2, 1, 5)
            .unwrap()
            .disguised(&mut ChaCha8Rng::seed_from_u64(1))
            .unwrap()
            .with_core_weight("v0", "v1", ratio(3, 2))
            .or_else(|_| {
                // v0 and v1 need not be adjacent after shuffling
                let a = AsymptoticallyFlatGraph::<Rational>::standard(2, 1, 5).unwrap();
                a.with_core_weight("0,0", "1,0", ratio(3, 2))
            })
            .unwrap();
        let back = AsymptoticallyFlatGraph::<Rational>::from_json(&afg.to_json().unwrap()).unwrap();
        assert_eq!(back.to_json().unwrap(), afg.to_json().unwrap());
    }

    #[test]
    fn rejects_bad_interfaces() {
        let afg = AsymptoticallyFlatGraph::<Rational>::standard(2, 1, 5).unwrap();
        let mut iface = afg.interface.clone();
        iface.push(InterfaceEdge {
            core: "0,0".into(),
            grid: vec![3, 0],
            w: Rational::one(),
        });
        assert!(AsymptoticallyFlatGraph::new(2, 1, 5, afg.core.clone(), iface, afg.outer.clone()).is_err());
        assert_eq!(required_rho(2, 1), 8);
        assert_eq!(required_rho(3, 1), 10);
        assert_eq!(required_rho(2, 2), 13);
    }
}
