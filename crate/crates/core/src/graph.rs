//! Immutable weighted graphs with combinatorial distances, balls,
//! boundaries and the (vertex-weighted) Laplacian.
//!
//! Distances are always hop counts in the whole graph. In particular
//! [`WeightedGraph::is_lipschitz`] measures `d(u, v)` in the full graph even
//! when the function is only given on a subset, so a pair that is far apart
//! inside the subset may still be close through vertices outside it.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexId(pub usize);

impl VertexId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Sentinel for "not reached" in dense distance vectors.
pub const UNREACHED: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct WeightedGraph<S> {
    labels: Vec<String>,
    index: HashMap<String, VertexId>,
    adjacency: Vec<Vec<(VertexId, S)>>,
    vertex_weights: Vec<S>,
    trivial_vertex_weights: bool,
}

#[derive(Clone, Debug)]
pub struct GraphBuilder<S> {
    labels: Vec<String>,
    index: HashMap<String, VertexId>,
    edges: BTreeMap<(usize, usize), S>,
    vertex_weights: BTreeMap<usize, S>,
}

impl<S: Scalar> Default for GraphBuilder<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> GraphBuilder<S> {
    pub fn new() -> Self {
        GraphBuilder {
            labels: Vec::new(),
            index: HashMap::new(),
            edges: BTreeMap::new(),
            vertex_weights: BTreeMap::new(),
        }
    }

    pub fn add_vertex(&mut self, label: impl Into<String>) -> Result<VertexId> {
        let label = label.into();
        if self.index.contains_key(&label) {
            return Err(Error::DuplicateVertex(label));
        }
        let id = VertexId(self.labels.len());
        self.index.insert(label.clone(), id);
        self.labels.push(label);
        Ok(id)
    }

    pub fn vertex(&self, label: &str) -> Option<VertexId> {
        self.index.get(label).copied()
    }

    pub fn vertex_or_insert(&mut self, label: &str) -> VertexId {
        match self.index.get(label) {
            Some(v) => *v,
            None => self.add_vertex(label).expect("label checked absent"),
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.labels.len()
    }

    pub fn add_edge(&mut self, u: VertexId, v: VertexId, w: S) -> Result<()> {
        if u == v {
            return Err(Error::SelfLoop(self.labels[u.0].clone()));
        }
        if !w.is_positive() {
            return Err(Error::NonPositiveWeight {
                u: self.labels[u.0].clone(),
                v: self.labels[v.0].clone(),
                weight: w.to_string(),
            });
        }
        let key = (u.0.min(v.0), u.0.max(v.0));
        if self.edges.contains_key(&key) {
            return Err(Error::DuplicateEdge(self.labels[u.0].clone(), self.labels[v.0].clone()));
        }
        self.edges.insert(key, w);
        Ok(())
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.edges.contains_key(&(u.0.min(v.0), u.0.max(v.0)))
    }

    pub fn set_vertex_weight(&mut self, v: VertexId, m: S) -> Result<()> {
        if !m.is_positive() {
            return Err(Error::NonPositiveVertexWeight {
                vertex: self.labels[v.0].clone(),
                weight: m.to_string(),
            });
        }
        self.vertex_weights.insert(v.0, m);
        Ok(())
    }

    /// Checks connectivity and freezes the graph.
    pub fn build(self) -> Result<WeightedGraph<S>> {
        let n = self.labels.len();
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut adjacency: Vec<Vec<(VertexId, S)>> = vec![Vec::new(); n];
        for ((u, v), w) in self.edges {
            adjacency[u].push((VertexId(v), w.clone()));
            adjacency[v].push((VertexId(u), w));
        }
        for list in &mut adjacency {
            list.sort_by_key(|(v, _)| *v);
        }
        let mut vertex_weights = vec![S::one(); n];
        let mut trivial = true;
        for (v, m) in self.vertex_weights {
            if m != S::one() {
                trivial = false;
            }
            vertex_weights[v] = m;
        }
        let g = WeightedGraph {
            labels: self.labels,
            index: self.index,
            adjacency,
            vertex_weights,
            trivial_vertex_weights: trivial,
        };
        let dist = g.bfs(VertexId(0), None);
        if let Some(far) = dist.iter().position(|d| *d == UNREACHED) {
            return Err(Error::Disconnected(g.labels[far].clone(), g.labels[0].clone()));
        }
        Ok(g)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Boundaries {
    /// `E(S, V \ S)` with the inside endpoint first.
    pub edge_boundary: Vec<(VertexId, VertexId)>,
    pub vertex_boundary: BTreeSet<VertexId>,
    pub closure: BTreeSet<VertexId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LipschitzCheck {
    pub holds: bool,
    pub violation: Option<(VertexId, VertexId)>,
}

/// A vertex function with an explicit domain.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialFunction<S> {
    values: BTreeMap<VertexId, S>,
}

impl<S: Scalar> PotentialFunction<S> {
    pub fn new() -> Self {
        PotentialFunction {
            values: BTreeMap::new(),
        }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (VertexId, S)>) -> Self {
        PotentialFunction {
            values: pairs.into_iter().collect(),
        }
    }

    /// Total function on `0..values.len()`.
    pub fn from_dense(values: Vec<S>) -> Self {
        Self::from_pairs(values.into_iter().enumerate().map(|(i, s)| (VertexId(i), s)))
    }

    pub fn set(&mut self, v: VertexId, value: S) {
        self.values.insert(v, value);
    }

    pub fn get(&self, v: VertexId) -> Option<&S> {
        self.values.get(&v)
    }

    pub fn value<T>(&self, g: &WeightedGraph<T>, v: VertexId) -> Result<&S> {
        self.values
            .get(&v)
            .ok_or_else(|| Error::OutsideDomain(g.label(v).to_string()))
    }

    pub fn domain(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.values.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, &S)> + '_ {
        self.values.iter().map(|(v, s)| (*v, s))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> PotentialFunction<T> {
        PotentialFunction {
            values: self.values.iter().map(|(v, s)| (*v, f(s))).collect(),
        }
    }
}

impl<S: Scalar> Default for PotentialFunction<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S> WeightedGraph<S> {
    pub fn num_vertices(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, v: VertexId) -> &str {
        &self.labels[v.0]
    }

    pub fn vertex(&self, label: &str) -> Result<VertexId> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(label.to_string()))
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.labels.len()).map(VertexId)
    }
}

impl<S: Scalar> WeightedGraph<S> {

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    fn check(&self, v: VertexId) -> Result<()> {
        if v.0 < self.labels.len() {
            Ok(())
        } else {
            Err(Error::UnknownVertex(format!("#{}", v.0)))
        }
    }

    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, S)] {
        &self.adjacency[v.0]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency[v.0].len()
    }

    pub fn weight(&self, u: VertexId, v: VertexId) -> Option<&S> {
        let list = &self.adjacency[u.0];
        list.binary_search_by_key(&v, |(x, _)| *x)
            .ok()
            .map(|i| &list[i].1)
    }

    pub fn adjacent(&self, u: VertexId, v: VertexId) -> bool {
        self.weight(u, v).is_some()
    }

    pub fn vertex_weight(&self, v: VertexId) -> &S {
        &self.vertex_weights[v.0]
    }

    /// True when some vertex weight differs from 1.
    pub fn has_vertex_weights(&self) -> bool {
        !self.trivial_vertex_weights
    }

    /// Canonical edge list: `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut out = Vec::with_capacity(self.num_edges());
        for (u, list) in self.adjacency.iter().enumerate() {
            for (v, _) in list {
                if u < v.0 {
                    out.push((VertexId(u), *v));
                }
            }
        }
        out
    }

    /// BFS hop counts from `source`, optionally stopping at `max_depth`.
    pub fn bfs(&self, source: VertexId, max_depth: Option<u32>) -> Vec<u32> {
        self.multi_source_bfs(std::iter::once(source), None, max_depth)
    }

    /// BFS from a set of sources, optionally restricted to the vertices with
    /// `mask[v] == true` (the induced subgraph on the mask).
    pub fn multi_source_bfs(
        &self,
        sources: impl IntoIterator<Item = VertexId>,
        mask: Option<&[bool]>,
        max_depth: Option<u32>,
    ) -> Vec<u32> {
        let mut dist = vec![UNREACHED; self.labels.len()];
        let mut queue = VecDeque::new();
        for s in sources {
            if mask.is_none_or(|m| m[s.0]) && dist[s.0] == UNREACHED {
                dist[s.0] = 0;
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            let du = dist[u.0];
            if max_depth.is_some_and(|m| du >= m) {
                continue;
            }
            for (v, _) in &self.adjacency[u.0] {
                if dist[v.0] == UNREACHED && mask.is_none_or(|m| m[v.0]) {
                    dist[v.0] = du + 1;
                    queue.push_back(*v);
                }
            }
        }
        dist
    }

    pub fn distance(&self, x: VertexId, y: VertexId) -> Result<u32> {
        self.check(x)?;
        self.check(y)?;
        if x == y {
            return Ok(0);
        }
        Ok(self.bfs(x, None)[y.0])
    }

    pub fn ball(&self, x: VertexId, r: u32) -> Result<BTreeSet<VertexId>> {
        self.check(x)?;
        Ok(self
            .bfs(x, Some(r))
            .iter()
            .enumerate()
            .filter(|(_, d)| **d <= r)
            .map(|(v, _)| VertexId(v))
            .collect())
    }

    pub fn boundaries(&self, set: &BTreeSet<VertexId>) -> Boundaries {
        let mut edge_boundary = Vec::new();
        let mut vertex_boundary = BTreeSet::new();
        for &u in set {
            for (v, _) in &self.adjacency[u.0] {
                if !set.contains(v) {
                    edge_boundary.push((u, *v));
                    vertex_boundary.insert(*v);
                }
            }
        }
        let closure = set.union(&vertex_boundary).copied().collect();
        Boundaries {
            edge_boundary,
            vertex_boundary,
            closure,
        }
    }

    /// `Δf(x) = (1/m(x)) Σ_{y~x} w(x,y) (f(y) - f(x))`.
    pub fn laplacian(&self, f: &PotentialFunction<S>, x: VertexId) -> Result<S> {
        self.check(x)?;
        let fx = f.value(self, x)?.clone();
        let mut acc = S::zero();
        for (y, w) in &self.adjacency[x.0] {
            let fy = f.value(self, *y)?;
            acc = acc + w.clone() * (fy.clone() - fx.clone());
        }
        Ok(self.scale_by_measure(acc, x))
    }

    /// Laplacian of an integer-valued function given on every vertex.
    pub fn laplacian_int(&self, values: &[i64], x: VertexId) -> S {
        let fx = values[x.0];
        let mut acc = S::zero();
        for (y, w) in &self.adjacency[x.0] {
            let diff = values[y.0] - fx;
            if diff != 0 {
                acc = acc + w.clone() * S::from_i64(diff);
            }
        }
        self.scale_by_measure(acc, x)
    }

    fn scale_by_measure(&self, acc: S, x: VertexId) -> S {
        if self.trivial_vertex_weights {
            acc
        } else {
            acc / self.vertex_weights[x.0].clone()
        }
    }

    /// Checks `|f(u) - f(v)| <= k d(u, v)` for all pairs of `set`, with `d`
    /// measured in the whole graph. The first violating pair in vertex order
    /// is reported.
    pub fn is_lipschitz(
        &self,
        f: &PotentialFunction<S>,
        k: &S,
        set: &BTreeSet<VertexId>,
    ) -> Result<LipschitzCheck> {
        for &v in set {
            f.value(self, v)?;
        }
        if set.len() == self.num_vertices() {
            // On the whole vertex set the path metric reduces the check to edges.
            for &u in set {
                for (v, _) in &self.adjacency[u.0] {
                    if u < *v {
                        let diff = (f.get(u).unwrap().clone() - f.get(*v).unwrap().clone()).abs();
                        if diff > k.clone() {
                            return Ok(LipschitzCheck {
                                holds: false,
                                violation: Some((u, *v)),
                            });
                        }
                    }
                }
            }
            return Ok(LipschitzCheck {
                holds: true,
                violation: None,
            });
        }
        self.is_lipschitz_pairwise(f, k, set)
    }

    /// Pairwise version of [`Self::is_lipschitz`] (one BFS per vertex).
    pub fn is_lipschitz_pairwise(
        &self,
        f: &PotentialFunction<S>,
        k: &S,
        set: &BTreeSet<VertexId>,
    ) -> Result<LipschitzCheck> {
        for &u in set {
            let fu = f.value(self, u)?.clone();
            let dist = self.bfs(u, None);
            for &v in set.range(u..).skip(1) {
                let fv = f.value(self, v)?.clone();
                let bound = k.clone() * S::from_i64(dist[v.0] as i64);
                if (fu.clone() - fv).abs() > bound {
                    return Ok(LipschitzCheck {
                        holds: false,
                        violation: Some((u, v)),
                    });
                }
            }
        }
        Ok(LipschitzCheck {
            holds: true,
            violation: None,
        })
    }

    /// Multiplies every edge weight by `c`.
    pub fn scale_edge_weights(&self, c: &S) -> WeightedGraph<S> {
        let mut g = self.clone();
        for list in &mut g.adjacency {
            for (_, w) in list.iter_mut() {
                *w = w.clone() * c.clone();
            }
        }
        g
    }

    /// Same graph with labels permuted into a new vertex order.
    pub fn relabeled(&self, order: &[VertexId]) -> Result<WeightedGraph<S>> {
        let mut b = GraphBuilder::new();
        for v in order {
            b.add_vertex(self.label(*v))?;
        }
        for (u, v) in self.edges() {
            let nu = b.vertex(self.label(u)).unwrap();
            let nv = b.vertex(self.label(v)).unwrap();
            b.add_edge(nu, nv, self.weight(u, v).unwrap().clone())?;
        }
        for v in self.vertices() {
            if *self.vertex_weight(v) != S::one() {
                let nv = b.vertex(self.label(v)).unwrap();
                b.set_vertex_weight(nv, self.vertex_weight(v).clone())?;
            }
        }
        b.build()
    }

    /// Serialises to the graph JSON format. Vertex weights are written only
    /// when some weight differs from 1.
    pub fn to_json(&self) -> Value {
        let vertices: Vec<Value> = self.labels.iter().map(|l| Value::String(l.clone())).collect();
        let edges: Vec<Value> = self
            .edges()
            .into_iter()
            .map(|(u, v)| {
                let mut e = Map::new();
                e.insert("u".into(), Value::String(self.labels[u.0].clone()));
                e.insert("v".into(), Value::String(self.labels[v.0].clone()));
                e.insert("w".into(), self.weight(u, v).unwrap().to_json());
                Value::Object(e)
            })
            .collect();
        let mut root = Map::new();
        root.insert("vertices".into(), Value::Array(vertices));
        root.insert("edges".into(), Value::Array(edges));
        if self.has_vertex_weights() {
            let mut vw = Map::new();
            for v in self.vertices() {
                if *self.vertex_weight(v) != S::one() {
                    vw.insert(self.labels[v.0].clone(), self.vertex_weight(v).to_json());
                }
            }
            root.insert("vertex_weights".into(), Value::Object(vw));
        }
        Value::Object(root)
    }

    pub fn from_json(v: &Value) -> Result<WeightedGraph<S>> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Parse("graph must be a JSON object".into()))?;
        let mut b = GraphBuilder::new();
        let vertices = obj
            .get("vertices")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("missing `vertices` array".into()))?;
        for (i, id) in vertices.iter().enumerate() {
            let label = id_label(id).ok_or_else(|| Error::Parse(format!("vertices[{i}]: invalid id {id}")))?;
            b.add_vertex(label)?;
        }
        let edges = obj
            .get("edges")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("missing `edges` array".into()))?;
        for (i, e) in edges.iter().enumerate() {
            let field = |name: &str| {
                e.get(name)
                    .ok_or_else(|| Error::Parse(format!("edges[{i}]: missing `{name}`")))
            };
            let u = id_label(field("u")?).ok_or_else(|| Error::Parse(format!("edges[{i}]: invalid `u`")))?;
            let v = id_label(field("v")?).ok_or_else(|| Error::Parse(format!("edges[{i}]: invalid `v`")))?;
            let w = match e.get("w") {
                Some(w) => S::from_json(w).map_err(|err| Error::Parse(format!("edges[{i}]: {err}")))?,
                None => S::one(),
            };
            let uu = b.vertex(&u).ok_or(Error::UnknownVertex(u))?;
            let vv = b.vertex(&v).ok_or(Error::UnknownVertex(v))?;
            b.add_edge(uu, vv, w)?;
        }
        if let Some(vw) = obj.get("vertex_weights") {
            let vw = vw
                .as_object()
                .ok_or_else(|| Error::Parse("`vertex_weights` must be an object".into()))?;
            for (label, m) in vw {
                let v = b.vertex(label).ok_or_else(|| Error::UnknownVertex(label.clone()))?;
                b.set_vertex_weight(v, S::from_json(m)?)?;
            }
        }
        b.build()
    }
}

fn id_label(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}
