//! Discrete tori `T_A = Aℤⁿ / qℤⁿ` with `q = k·|det A|`.
//!
//! Classes are stored by their residue vector in `[0, q)ⁿ`. Because `qℤⁿ`
//! is a sublattice of `Aℤⁿ`, a point `x` lies in `Aℤⁿ` iff its residue is
//! one of the class keys. The torus is the Cayley graph of the finite group
//! `Aℤⁿ/qℤⁿ` with generators `±α_i`, so distances are translation invariant.
//! Lattice distances are measured in the coordinates `z` of `x = Az`, where
//! the lattice graph is the standard grid and the distance is `|z|₁`.

use std::collections::{HashMap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::graph::{GraphBuilder, WeightedGraph};
use crate::grid::{cube_points, point_label, Point};
use crate::ollivier;
use crate::par;
use crate::scalar::{ser, ser_vec, Rational, Scalar};

/// Largest quotient we are willing to materialise.
pub const MAX_VERTICES: u128 = 2_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusSpec {
    /// Rows of `A`; the generators `α_i` are its columns.
    #[serde(rename = "A")]
    pub a: Vec<Vec<i64>>,
    pub k: i64,
}

fn det_bareiss(a: &[Vec<i64>]) -> Result<i128> {
    let n = a.len();
    let mut m: Vec<Vec<i128>> = a.iter().map(|r| r.iter().map(|v| *v as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if m[k][k] == 0 {
            match (k + 1..n).find(|r| m[*r][k] != 0) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return Ok(0),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = m[i][j]
                    .checked_mul(m[k][k])
                    .and_then(|a| m[i][k].checked_mul(m[k][j]).and_then(|b| a.checked_sub(b)))
                    .ok_or_else(|| Error::Overflow("determinant".into()))?;
                m[i][j] = v / prev;
            }
        }
        prev = m[k][k];
    }
    Ok(sign * m[n - 1][n - 1])
}

impl TorusSpec {
    pub fn new(a: Vec<Vec<i64>>, k: i64) -> Result<Self> {
        let s = TorusSpec { a, k };
        s.validate()?;
        Ok(s)
    }

    pub fn identity(n: usize, k: i64) -> Result<Self> {
        let a = (0..n).map(|i| (0..n).map(|j| (i == j) as i64).collect()).collect();
        Self::new(a, k)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.a.len();
        if n == 0 || self.a.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter("A must be a non-empty square matrix".into()));
        }
        if self.k < 1 {
            return Err(Error::InvalidParameter(format!("k must be positive, got {}", self.k)));
        }
        if self.det()? == 0 {
            return Err(Error::SingularMatrix);
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn det(&self) -> Result<i128> {
        det_bareiss(&self.a)
    }

    pub fn q(&self) -> Result<i64> {
        let q = self.det()?.abs() * self.k as i128;
        i64::try_from(q).map_err(|_| Error::Overflow(format!("q = {q}")))
    }

    /// Column `α_i`.
    pub fn alpha(&self, i: usize) -> Point {
        self.a.iter().map(|row| row[i]).collect()
    }

    /// `Az`.
    pub fn apply(&self, z: &[i64]) -> Point {
        self.a.iter().map(|row| row.iter().zip(z).map(|(a, b)| a * b).sum()).collect()
    }

    /// The index `[Aℤⁿ : qℤⁿ] = qⁿ/|det A|`.
    pub fn lattice_index(&self) -> Result<u128> {
        let q = self.q()? as u128;
        let d = self.det()?.unsigned_abs();
        q.checked_pow(self.n() as u32)
            .map(|p| p / d)
            .ok_or_else(|| Error::Overflow("lattice index".into()))
    }

    /// `kⁿ·|det A|`, the count quoted for `T_A` in the literature; equal to
    /// [`Self::lattice_index`] only when `n = 2` or `|det A| = 1`.
    pub fn quoted_vertex_count(&self) -> Result<u128> {
        (self.k as u128)
            .checked_pow(self.n() as u32)
            .and_then(|p| p.checked_mul(self.det().ok()?.unsigned_abs()))
            .ok_or_else(|| Error::Overflow("vertex count".into()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DistanceViolation {
    pub u: Point,
    pub v: Point,
    pub lattice: u32,
    pub torus: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DistanceCondition {
    pub holds: bool,
    pub violation: Option<DistanceViolation>,
}

#[derive(Clone, Debug)]
pub struct TorusGraph<S> {
    spec: TorusSpec,
    q: i64,
    classes: Vec<Point>,
    index: HashMap<Point, usize>,
    /// `nbr[c·2n + 2i]` is `c + α_i`, `nbr[c·2n + 2i + 1]` is `c − α_i`.
    nbr: Vec<usize>,
    /// `w[c·n + i] = w([c], [c + α_i])`.
    w: Vec<S>,
    condition: DistanceCondition,
    local: DistanceCondition,
}

fn residue(x: &[i64], q: i64) -> Point {
    x.iter().map(|c| c.rem_euclid(q)).collect()
}

/// All `z ∈ ℤⁿ` with `|z|₁ ≤ r`.
fn l1_ball(n: usize, r: i64) -> Vec<Point> {
    cube_points(n, r)
        .into_iter()
        .filter(|z| z.iter().map(|c| c.abs()).sum::<i64>() <= r)
        .collect()
}

/// Splits `z` into `b − a` with `|a|₁, |b|₁ ≤ ⌈|z|₁/2⌉`.
fn split_pair(z: &[i64]) -> (Point, Point) {
    let mut budget = (z.iter().map(|c| c.abs()).sum::<i64>() + 1) / 2;
    let mut b = vec![0; z.len()];
    for (i, c) in z.iter().enumerate() {
        let take = c.abs().min(budget);
        b[i] = c.signum() * take;
        budget -= take;
    }
    let a = b.iter().zip(z).map(|(bi, zi)| bi - zi).collect();
    (a, b)
}

/// A weight entry `w([x], [x + α_dir]) = w` with `x` any lift.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusWeight<S> {
    pub x: Point,
    pub dir: usize,
    pub w: S,
}

/// Builds the quotient. Unlisted edges have weight 1.
pub fn build_torus<S: Scalar>(spec: TorusSpec, weights: Option<&[TorusWeight<S>]>) -> Result<TorusGraph<S>> {
    spec.validate()?;
    let n = spec.n();
    let q = spec.q()?;
    let count = spec.lattice_index()?;
    if count > MAX_VERTICES {
        return Err(Error::InvalidParameter(format!("torus has {count} vertices, limit is {MAX_VERTICES}")));
    }
    let alphas: Vec<Point> = (0..n).map(|i| spec.alpha(i)).collect();
    let step = |x: &[i64], i: usize, s: i64| -> Point {
        x.iter().zip(&alphas[i]).map(|(a, b)| (a + s * b).rem_euclid(q)).collect()
    };

    // the ±α_i must be 2n distinct non-zero residues, otherwise the quotient
    // has loops or parallel edges at every vertex
    let origin = vec![0; n];
    let mut gens = Vec::with_capacity(2 * n);
    for i in 0..n {
        for s in [1, -1] {
            let g = step(&origin, i, s);
            if g == origin {
                return Err(Error::DegenerateQuotient(format!("α_{} ≡ 0 mod {q} gives self-loops", i + 1)));
            }
            if let Some((j, t)) = gens.iter().find(|(_, p)| *p == g).map(|(jt, _)| *jt) {
                return Err(Error::DegenerateQuotient(format!(
                    "{}α_{} ≡ {}α_{} mod {q} gives parallel edges",
                    if s > 0 { "+" } else { "−" },
                    i + 1,
                    if t > 0 { "+" } else { "−" },
                    j + 1
                )));
            }
            gens.push(((i, s), g));
        }
    }

    let mut seen: HashMap<Point, ()> = HashMap::new();
    let mut queue = VecDeque::from([origin.clone()]);
    seen.insert(origin, ());
    while let Some(x) = queue.pop_front() {
        for i in 0..n {
            for s in [1, -1] {
                let y = step(&x, i, s);
                if seen.insert(y.clone(), ()).is_none() {
                    queue.push_back(y);
                }
            }
        }
    }
    let mut classes: Vec<Point> = seen.into_keys().collect();
    classes.sort();
    if classes.len() as u128 != count {
        return Err(Error::DegenerateQuotient(format!(
            "found {} classes, expected index {count}",
            classes.len()
        )));
    }
    let index: HashMap<Point, usize> = classes.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
    let mut nbr = Vec::with_capacity(classes.len() * 2 * n);
    for x in &classes {
        for i in 0..n {
            for s in [1, -1] {
                nbr.push(index[&step(x, i, s)]);
            }
        }
    }

    let mut w = vec![S::one(); classes.len() * n];
    if let Some(entries) = weights {
        let mut set: HashMap<(usize, usize), S> = HashMap::new();
        for e in entries {
            if e.x.len() != n || e.dir >= n {
                return Err(Error::InvalidParameter(format!("weight entry {:?} dir {} in dimension {n}", e.x, e.dir)));
            }
            let c = *index
                .get(&residue(&e.x, q))
                .ok_or_else(|| Error::InvalidParameter(format!("{:?} is not a point of Aℤⁿ", e.x)))?;
            if !e.w.is_positive() {
                return Err(Error::NonPositiveWeight {
                    u: point_label(&classes[c]),
                    v: point_label(&classes[nbr[c * 2 * n + 2 * e.dir]]),
                    weight: e.w.to_string(),
                });
            }
            if let Some(old) = set.insert((c, e.dir), e.w.clone()) {
                if old != e.w {
                    return Err(Error::InconsistentWeights(format!(
                        "edge ({}, α_{}) given weights {old} and {} through different lifts",
                        point_label(&classes[c]),
                        e.dir + 1,
                        e.w
                    )));
                }
            }
            w[c * n + e.dir] = e.w.clone();
        }
    }

    let mut t = TorusGraph {
        spec,
        q,
        classes,
        index,
        nbr,
        w,
        condition: DistanceCondition {
            holds: false,
            violation: None,
        },
        local: DistanceCondition {
            holds: false,
            violation: None,
        },
    };
    t.condition = t.compute_distance_condition();
    t.local = t.compute_local_condition();
    Ok(t)
}

impl<S: Scalar> TorusGraph<S> {
    pub fn spec(&self) -> &TorusSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n()
    }

    pub fn q(&self) -> i64 {
        self.q
    }

    pub fn num_vertices(&self) -> usize {
        self.classes.len()
    }

    /// Residue vector of class `c`.
    pub fn representative(&self, c: usize) -> &[i64] {
        &self.classes[c]
    }

    pub fn label(&self, c: usize) -> String {
        point_label(&self.classes[c])
    }

    /// Class of a lattice point; an error if `x ∉ Aℤⁿ`.
    pub fn class_of(&self, x: &[i64]) -> Result<usize> {
        if x.len() != self.n() {
            return Err(Error::InvalidParameter(format!("point {x:?} in dimension {}", self.n())));
        }
        self.index
            .get(&residue(x, self.q))
            .copied()
            .ok_or_else(|| Error::InvalidParameter(format!("{x:?} is not a point of Aℤⁿ")))
    }

    /// `[x + sign·α_dir]`.
    pub fn neighbor(&self, c: usize, dir: usize, sign: i64) -> usize {
        self.nbr[c * 2 * self.n() + 2 * dir + (sign < 0) as usize]
    }

    /// `w([c], [c + sign·α_dir])`.
    pub fn weight(&self, c: usize, dir: usize, sign: i64) -> &S {
        let from = if sign > 0 { c } else { self.neighbor(c, dir, -1) };
        &self.w[from * self.n() + dir]
    }

    pub fn set_weight(&mut self, c: usize, dir: usize, w: S) -> Result<()> {
        if !w.is_positive() {
            return Err(Error::NonPositiveWeight {
                u: self.label(c),
                v: self.label(self.neighbor(c, dir, 1)),
                weight: w.to_string(),
            });
        }
        let n = self.n();
        self.w[c * n + dir] = w;
        Ok(())
    }

    /// Every edge as `(class, dir)`, meaning `{[c], [c + α_dir]}`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.num_vertices()).flat_map(|c| (0..self.n()).map(move |i| (c, i))).collect()
    }

    /// Minimal `r > 0` with `r·α_dir ≡ 0`.
    pub fn period(&self, dir: usize) -> i64 {
        let mut c = self.neighbor(0, dir, 1);
        let mut r = 1;
        while c != 0 {
            c = self.neighbor(c, dir, 1);
            r += 1;
        }
        r
    }

    /// The quotient as a simple weighted graph; vertex `c` has id `c`.
    pub fn to_graph(&self) -> Result<WeightedGraph<S>> {
        let mut b = GraphBuilder::new();
        for c in 0..self.num_vertices() {
            b.add_vertex(self.label(c))?;
        }
        for (c, i) in self.edges() {
            b.add_edge(
                crate::graph::VertexId(c),
                crate::graph::VertexId(self.neighbor(c, i, 1)),
                self.w[c * self.n() + i].clone(),
            )?;
        }
        b.build()
    }

    /// BFS distances from class 0.
    pub fn distances_from_origin(&self) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.num_vertices()];
        let zero = self.index[&vec![0; self.n()]];
        dist[zero] = 0;
        let mut queue = VecDeque::from([zero]);
        while let Some(c) = queue.pop_front() {
            for &d in &self.nbr[c * 2 * self.n()..(c + 1) * 2 * self.n()] {
                if dist[d] == u32::MAX {
                    dist[d] = dist[c] + 1;
                    queue.push_back(d);
                }
            }
        }
        dist
    }

    /// First `(u, v)` among the given pairs (generator coordinates) whose
    /// torus distance differs from `|u − v|₁`.
    fn check_pairs(&self, dist: &[u32], pairs: impl Iterator<Item = (Point, Point)>) -> DistanceCondition {
        for (a, b) in pairs {
            let z: Point = b.iter().zip(&a).map(|(x, y)| x - y).collect();
            let lattice = z.iter().map(|c| c.abs()).sum::<i64>() as u32;
            let c = self.index[&residue(&self.spec.apply(&z), self.q)];
            if dist[c] != lattice {
                return DistanceCondition {
                    holds: false,
                    violation: Some(DistanceViolation {
                        u: self.spec.apply(&a),
                        v: self.spec.apply(&b),
                        lattice,
                        torus: dist[c],
                    }),
                };
            }
        }
        DistanceCondition {
            holds: true,
            violation: None,
        }
    }

    fn compute_distance_condition(&self) -> DistanceCondition {
        // by translation invariance d([u],[v]) = d([0],[v−u]), so it suffices
        // to look at every difference of two points of B₂(0), i.e. |z|₁ ≤ 4
        let dist = self.distances_from_origin();
        let mut zs = l1_ball(self.n(), 4);
        zs.sort_by_key(|z| (z.iter().map(|c| c.abs()).sum::<i64>(), z.clone()));
        self.check_pairs(&dist, zs.into_iter().map(|z| split_pair(&z)))
    }

    fn compute_local_condition(&self) -> DistanceCondition {
        let dist = self.distances_from_origin();
        let n = self.n();
        let mut pairs = Vec::new();
        for i in 0..n {
            let y = crate::grid::unit(n, i, 1);
            let mut nb: Vec<Point> = l1_ball(n, 1);
            nb.extend(l1_ball(n, 1).into_iter().map(|p| crate::grid::add(&p, &y)));
            nb.sort();
            nb.dedup();
            for u in &nb {
                for v in &nb {
                    pairs.push((u.clone(), v.clone()));
                }
            }
        }
        self.check_pairs(&dist, pairs.into_iter())
    }

    /// Whether every pair in every radius-2 lattice ball keeps its distance.
    pub fn distance_condition(&self) -> &DistanceCondition {
        &self.condition
    }

    /// Whether distances are preserved on `B₁({x, y})` for every edge, the
    /// hypothesis under which the closed form is exact. Implied by
    /// [`Self::distance_condition`].
    pub fn local_condition(&self) -> &DistanceCondition {
        &self.local
    }

    /// Whether `z ↦ [Az]` embeds `Q_r` (in generator coordinates): injective,
    /// and `[Az] ∼ [Az']` iff `|z − z'|₁ = 1`.
    pub fn cube_embeds(&self, r: i64) -> bool {
        let pts = cube_points(self.n(), r);
        let mut image: HashMap<usize, usize> = HashMap::new();
        for (k, z) in pts.iter().enumerate() {
            let c = self.index[&residue(&self.spec.apply(z), self.q)];
            if image.insert(c, k).is_some() {
                return false;
            }
        }
        for (c, k) in &image {
            for &d in &self.nbr[c * 2 * self.n()..(c + 1) * 2 * self.n()] {
                if let Some(l) = image.get(&d) {
                    let gap: i64 = pts[*k].iter().zip(&pts[*l]).map(|(a, b)| (a - b).abs()).sum();
                    if gap != 1 {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Replaces every weight by an independent random `p/q'` with
    /// `q' ∈ 1..=4`, `p ∈ 1..=2q'`.
    pub fn randomize_weights<R: Rng>(&mut self, rng: &mut R) {
        for w in &mut self.w {
            let d = rng.gen_range(1..=4);
            let p = rng.gen_range(1..=2 * d);
            *w = S::from_ratio(p, d);
        }
    }

    /// Torus spec JSON; weights different from 1 are listed by residue.
    pub fn to_json(&self) -> Value {
        let mut root = Map::new();
        root.insert("A".into(), serde_json::to_value(&self.spec.a).unwrap());
        root.insert("k".into(), Value::from(self.spec.k));
        let listed: Vec<Value> = self
            .edges()
            .into_iter()
            .filter(|(c, i)| self.w[c * self.n() + i] != S::one())
            .map(|(c, i)| {
                let mut e = Map::new();
                e.insert("x".into(), Value::from(self.classes[c].clone()));
                e.insert("dir".into(), Value::from(i));
                e.insert("w".into(), self.w[c * self.n() + i].to_json());
                Value::Object(e)
            })
            .collect();
        if !listed.is_empty() {
            root.insert("weights".into(), Value::Array(listed));
        }
        Value::Object(root)
    }

    pub fn from_json(v: &Value) -> Result<TorusGraph<S>> {
        let spec = TorusSpec {
            a: serde_json::from_value(v.get("A").cloned().unwrap_or(Value::Null))
                .map_err(|e| Error::Parse(format!("`A`: {e}")))?,
            k: v.get("k").and_then(Value::as_i64).unwrap_or(1),
        };
        spec.validate()?;
        let n = spec.n();
        let mut entries = Vec::new();
        if let Some(ws) = v.get("weights") {
            let ws = ws.as_array().ok_or_else(|| Error::Parse("`weights` must be an array".into()))?;
            for (i, e) in ws.iter().enumerate() {
                let x = crate::grid::parse_point(e.get("x"), n).map_err(|m| Error::Parse(format!("weights[{i}].x: {m}")))?;
                let dir = e
                    .get("dir")
                    .and_then(Value::as_u64)
                    .filter(|d| (*d as usize) < n)
                    .ok_or_else(|| Error::Parse(format!("weights[{i}].dir must be in 0..{n}")))? as usize;
                let w = S::from_json(e.get("w").unwrap_or(&Value::Null))
                    .map_err(|err| Error::Parse(format!("weights[{i}].w: {err}")))?;
                entries.push(TorusWeight { x, dir, w });
            }
        }
        build_torus(spec, Some(&entries))
    }
}

/// Absolute-difference part of the closed form for `{[c], [c + α_dir]}`.
fn abs_part<S: Scalar>(t: &TorusGraph<S>, c: usize, dir: usize) -> S {
    let y = t.neighbor(c, dir, 1);
    let mut total = S::zero();
    for j in (0..t.n()).filter(|j| *j != dir) {
        for tau in [1, -1] {
            total = total + (t.weight(c, j, tau).clone() - t.weight(y, j, tau).clone()).abs();
        }
    }
    total
}

/// Grid-style closed form for `κ([c], [c + α_dir])` from lifted weights.
/// Valid when the distance condition holds.
pub fn torus_kappa_closed<S: Scalar>(t: &TorusGraph<S>, c: usize, dir: usize) -> S {
    let y = t.neighbor(c, dir, 1);
    S::from_i64(2) * t.weight(c, dir, 1).clone()
        - t.weight(c, dir, -1).clone()
        - t.weight(y, dir, 1).clone()
        - abs_part(t, c, dir)
}

fn brute_kappa<S: Scalar>(t: &TorusGraph<S>, g: &WeightedGraph<S>, c: usize, dir: usize) -> Result<S> {
    let y = t.neighbor(c, dir, 1);
    Ok(ollivier::edge_curvature(g, crate::graph::VertexId(c), crate::graph::VertexId(y))?.kappa)
}

/// `κ([c], [c + α_dir])`: the closed form when distances are preserved
/// around every edge, brute force on the quotient graph otherwise.
pub fn torus_kappa<S: Scalar>(t: &TorusGraph<S>, c: usize, dir: usize) -> Result<S> {
    if c >= t.num_vertices() || dir >= t.n() {
        return Err(Error::InvalidParameter(format!("edge ({c}, {dir}) is not in the torus")));
    }
    if t.local_condition().holds {
        return Ok(torus_kappa_closed(t, c, dir));
    }
    log::warn!(
        "distances around edges are not preserved on T_A (violation {:?}); using brute force",
        t.local_condition().violation
    );
    brute_kappa(t, &t.to_graph()?, c, dir)
}

/// Curvature of every `(class, dir)` edge, in [`TorusGraph::edges`] order.
pub fn all_torus_kappas<S: Scalar>(t: &TorusGraph<S>) -> Result<Vec<S>> {
    let edges = t.edges();
    if t.local_condition().holds {
        return Ok(par::map(&edges, |(c, i)| torus_kappa_closed(t, *c, *i)));
    }
    log::warn!("distances around edges are not preserved on T_A; using brute force on all {} edges", edges.len());
    let g = t.to_graph()?;
    par::try_map(&edges, |(c, i)| brute_kappa(t, &g, *c, *i))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "S: Scalar"))]
pub struct CycleSum<S> {
    pub class: Point,
    pub dir: usize,
    /// Minimal period `r_i` of `α_i`.
    pub period: i64,
    /// `s_i = q / r_i`, the number of times each cycle edge is counted.
    pub multiplicity: i64,
    #[serde(serialize_with = "ser")]
    pub sum: S,
    /// Sum of the absolute-difference parts over the same `q` edges.
    #[serde(serialize_with = "ser")]
    pub abs_total: S,
}

/// `S_i([c]) = Σ_{j<q} κ([c + jα_i], [c + (j+1)α_i])`.
pub fn cycle_sum<S: Scalar>(t: &TorusGraph<S>, c: usize, dir: usize) -> Result<CycleSum<S>> {
    let mut sum = S::zero();
    let mut abs_total = S::zero();
    let mut x = c;
    for _ in 0..t.q() {
        sum = sum + torus_kappa(t, x, dir)?;
        abs_total = abs_total + abs_part(t, x, dir);
        x = t.neighbor(x, dir, 1);
    }
    let period = t.period(dir);
    Ok(CycleSum {
        class: t.representative(c).to_vec(),
        dir,
        period,
        multiplicity: t.q() / period,
        sum,
        abs_total,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "S: Scalar"))]
pub struct DirectionSum<S> {
    pub dir: usize,
    pub period: i64,
    pub multiplicity: i64,
    /// `Σ_[x] S_i([x])`.
    #[serde(serialize_with = "ser")]
    pub cycle_total: S,
    /// `Σ_[x] S_i([x]) / q`, the total curvature of the direction-`i` edges.
    #[serde(serialize_with = "ser")]
    pub edge_total: S,
    pub max_cycle_sum_nonpositive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "S: Scalar"))]
pub struct TorusCurvature<S> {
    pub vertices: usize,
    pub quoted_vertices: u128,
    pub distance_condition: DistanceCondition,
    pub local_condition: DistanceCondition,
    /// Whether the curvatures came from the closed form.
    pub closed_form: bool,
    #[serde(serialize_with = "ser_vec")]
    pub scalar: Vec<S>,
    #[serde(serialize_with = "ser")]
    pub total: S,
    pub directions: Vec<DirectionSum<S>>,
    /// `2 Σ_i Σ_[x] S_i([x]) / q`.
    #[serde(serialize_with = "ser")]
    pub decomposition: S,
    pub identity_holds: bool,
    /// Sum of the absolute-difference parts over all edges.
    #[serde(serialize_with = "ser")]
    pub abs_sum: S,
    pub nonpositive: bool,
    pub scalar_nonnegative: bool,
    pub scalar_flat: bool,
}

/// Total scalar curvature, per-direction cycle sums and the decomposition
/// identity. `eps` is the comparison tolerance (0 for exact scalars).
pub fn total_scalar_curvature<S: Scalar>(t: &TorusGraph<S>, eps: f64) -> Result<TorusCurvature<S>> {
    let n = t.n();
    let kap = all_torus_kappas(t)?;
    let nv = t.num_vertices();
    let mut scalar = vec![S::zero(); nv];
    for c in 0..nv {
        for i in 0..n {
            scalar[c] = scalar[c].clone() + kap[c * n + i].clone() + kap[t.neighbor(c, i, -1) * n + i].clone();
        }
    }
    let total: S = scalar.iter().cloned().sum();

    let q_s = S::from_i64(t.q());
    let mut directions = Vec::with_capacity(n);
    let mut decomposition = S::zero();
    for i in 0..n {
        let sums: Vec<S> = par::map_range(nv, |c| {
            let mut s = S::zero();
            let mut x = c;
            for _ in 0..t.q() {
                s = s + kap[x * n + i].clone();
                x = t.neighbor(x, i, 1);
            }
            s
        });
        let nonpos = sums.iter().all(|s| !s.is_positive() || s.approx_eq(&S::zero(), eps));
        let cycle_total: S = sums.into_iter().sum();
        let edge_total = cycle_total.clone() / q_s.clone();
        decomposition = decomposition + S::from_i64(2) * edge_total.clone();
        let period = t.period(i);
        directions.push(DirectionSum {
            dir: i,
            period,
            multiplicity: t.q() / period,
            cycle_total,
            edge_total,
            max_cycle_sum_nonpositive: nonpos,
        });
    }
    let abs_sum: S = par::map(&t.edges(), |(c, i)| abs_part(t, *c, *i)).into_iter().sum();
    let zero = S::zero();
    let scalar_nonnegative = scalar.iter().all(|r| !r.is_negative() || r.approx_eq(&zero, eps));
    let scalar_flat = scalar.iter().all(|r| r.approx_eq(&zero, eps));
    Ok(TorusCurvature {
        vertices: nv,
        quoted_vertices: t.spec.quoted_vertex_count()?,
        distance_condition: t.distance_condition().clone(),
        local_condition: t.local_condition().clone(),
        closed_form: t.local_condition().holds,
        identity_holds: total.approx_eq(&decomposition, eps),
        nonpositive: !total.is_positive() || total.approx_eq(&zero, eps),
        scalar,
        total,
        directions,
        decomposition,
        abs_sum,
        scalar_nonnegative,
        scalar_flat,
    })
}

/// The torus of the two-dimensional worked example: `α₁ = (2, −1)`,
/// `α₂ = (1, 3)`.
pub fn example_spec(k: i64) -> TorusSpec {
    TorusSpec::new(vec![vec![2, 1], vec![-1, 3]], k).expect("non-singular")
}

/// Letter names of the seven classes of [`example_spec`]`(1)`.
pub const EXAMPLE_LABELS: [(&str, [i64; 2]); 7] = [
    ("A", [0, 0]),
    ("B", [1, 3]),
    ("C", [2, 6]),
    ("D", [3, 2]),
    ("E", [4, 5]),
    ("F", [5, 1]),
    ("G", [6, 4]),
];

/// Convenience alias used by the CLI and acceptance suite.
pub type RationalTorus = TorusGraph<Rational>;

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::scalar::ratio;

    fn torus(spec: TorusSpec) -> TorusGraph<Rational> {
        build_torus(spec, None).unwrap()
    }

    #[test]
    fn determinant_and_counts() {
        let s = example_spec(1);
        assert_eq!(s.det().unwrap(), 7);
        assert_eq!(s.q().unwrap(), 7);
        assert_eq!(s.lattice_index().unwrap(), 7);
        assert_eq!(s.quoted_vertex_count().unwrap(), 7);
        // in three dimensions the two counts part ways
        let s = TorusSpec::new(vec![vec![2, 0, 0], vec![0, 1, 0], vec![0, 0, 1]], 3).unwrap();
        assert_eq!(s.lattice_index().unwrap(), 108);
        assert_eq!(s.quoted_vertex_count().unwrap(), 54);
        assert_eq!(torus(s).num_vertices(), 108);
        assert!(matches!(TorusSpec::new(vec![vec![1, 2], vec![2, 4]], 1), Err(Error::SingularMatrix)));
        assert!(TorusSpec::new(vec![vec![1, 0]], 1).is_err());
        assert!(TorusSpec::identity(2, 0).is_err());
    }

    #[test]
    fn worked_example_classes() {
        let t = torus(example_spec(1));
        let mut reps: Vec<Point> = EXAMPLE_LABELS.iter().map(|(_, p)| p.to_vec()).collect();
        reps.sort();
        assert_eq!(t.classes, reps);
        let a = t.class_of(&[0, 0]).unwrap();
        let d = t.class_of(&[3, 2]).unwrap();
        let g = t.to_graph().unwrap();
        assert_eq!(g.distance(crate::graph::VertexId(a), crate::graph::VertexId(d)).unwrap(), 2);
        assert_eq!(g.num_edges(), 14);
        assert!(t.class_of(&[1, 0]).is_err());
        // same class through a different lift
        assert_eq!(t.class_of(&[7, -7]).unwrap(), a);
    }

    #[test]
    fn standard_torus_is_regular() {
        let t = torus(TorusSpec::identity(2, 3).unwrap());
        let g = t.to_graph().unwrap();
        assert_eq!(g.num_vertices(), 9);
        assert!(g.vertices().all(|v| g.degree(v) == 4));
        assert_eq!(t.period(0), 3);
    }

    #[test]
    fn small_quotients_are_rejected() {
        assert!(matches!(
            build_torus::<Rational>(TorusSpec::identity(2, 1).unwrap(), None),
            Err(Error::DegenerateQuotient(_))
        ));
        assert!(matches!(
            build_torus::<Rational>(TorusSpec::identity(2, 2).unwrap(), None),
            Err(Error::DegenerateQuotient(_))
        ));
    }

    /// Per-class, per-lift oracle: BFS in the torus graph against |z|₁ for
    /// every pair in B₂ around every class.
    fn distance_oracle(t: &TorusGraph<Rational>) -> bool {
        let g = t.to_graph().unwrap();
        let ball = l1_ball(t.n(), 2);
        for c in 0..t.num_vertices() {
            let x = t.representative(c).to_vec();
            let lift = |z: &[i64]| -> usize {
                let y: Point = x.iter().zip(t.spec.apply(z)).map(|(a, b)| a + b).collect();
                t.class_of(&y).unwrap()
            };
            for u in &ball {
                let du = g.bfs(crate::graph::VertexId(lift(u)), Some(5));
                for v in &ball {
                    let l: i64 = u.iter().zip(v).map(|(a, b)| (a - b).abs()).sum();
                    if du[lift(v)] != l as u32 {
                        return false;
                    }
                }
            }
        }
        true
    }

    #[test]
    fn distance_condition_matches_oracle() {
        // B₂ contains points 4 apart along one axis
        for k in [3, 5, 6, 7, 8, 9] {
            let t = torus(TorusSpec::identity(2, k).unwrap());
            assert_eq!(t.distance_condition().holds, k >= 8, "k = {k}");
            assert_eq!(t.distance_condition().holds, distance_oracle(&t));
            // x − e_i and y + e_i are 3 apart
            assert_eq!(t.local_condition().holds, k >= 6, "k = {k}");
        }
        for k in 1..=4 {
            let t = torus(example_spec(k));
            assert_eq!(t.distance_condition().holds, distance_oracle(&t), "k = {k}");
        }
        let t = torus(example_spec(1));
        let v = t.distance_condition().violation.clone().unwrap();
        assert!(v.torus < v.lattice);
    }

    #[test]
    fn split_pair_stays_in_b2() {
        for z in l1_ball(3, 4) {
            let (a, b) = split_pair(&z);
            assert!(a.iter().map(|c| c.abs()).sum::<i64>() <= 2);
            assert!(b.iter().map(|c| c.abs()).sum::<i64>() <= 2);
            assert_eq!(b.iter().zip(&a).map(|(x, y)| x - y).collect::<Vec<_>>(), z);
        }
    }

    #[test]
    fn closed_form_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for spec in [TorusSpec::identity(2, 6).unwrap(), TorusSpec::identity(3, 6).unwrap(), example_spec(3)] {
            let mut t = torus(spec);
            assert!(t.local_condition().holds);
            t.randomize_weights(&mut rng);
            let g = t.to_graph().unwrap();
            for (c, i) in t.edges() {
                assert_eq!(torus_kappa_closed(&t, c, i), brute_kappa(&t, &g, c, i).unwrap());
            }
        }
    }

    #[test]
    fn single_perturbation() {
        let mut t = torus(TorusSpec::identity(2, 6).unwrap());
        let o = t.class_of(&[0, 0]).unwrap();
        t.set_weight(o, 0, ratio(3, 2)).unwrap();
        assert_eq!(torus_kappa(&t, o, 0).unwrap(), ratio(1, 1));
        let left = t.class_of(&[-1, 0]).unwrap();
        assert_eq!(torus_kappa(&t, left, 0).unwrap(), ratio(-1, 2));
        assert_eq!(torus_kappa(&t, o, 1).unwrap(), ratio(-1, 2));
        let s = cycle_sum(&t, o, 0).unwrap();
        assert_eq!(s.sum, -s.abs_total.clone());
        assert_eq!(s.sum, Rational::zero());
        let s = cycle_sum(&t, o, 1).unwrap();
        assert_eq!(s.sum, ratio(-1, 1));
    }

    #[test]
    fn totals_on_random_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in [6, 7] {
            let mut t = torus(TorusSpec::identity(2, k).unwrap());
            let flat = total_scalar_curvature(&t, 0.0).unwrap();
            assert!(flat.scalar_flat && flat.total == Rational::zero());
            t.randomize_weights(&mut rng);
            let r = total_scalar_curvature(&t, 0.0).unwrap();
            assert!(r.identity_holds && r.nonpositive);
            assert_eq!(r.total, -(ratio(2, 1) * r.abs_sum.clone()));
            assert!(r.directions.iter().all(|d| d.max_cycle_sum_nonpositive));
        }
    }

    #[test]
    fn fallback_on_small_torus() {
        let mut t = torus(TorusSpec::identity(2, 5).unwrap());
        assert!(!t.local_condition().holds);
        // short cycles make the flat 5×5 torus positively curved
        let r = total_scalar_curvature(&t, 0.0).unwrap();
        assert!(!r.closed_form);
        assert!(r.scalar.iter().all(|k| *k > Rational::zero()));
        t.set_weight(0, 0, ratio(1, 2)).unwrap();
        assert!(torus_kappa(&t, 0, 0).is_ok());
    }

    #[test]
    fn embedding_predicate() {
        let t = torus(TorusSpec::identity(2, 7).unwrap());
        assert!(t.cube_embeds(2));
        // Q_3 has side 7 = q and wraps around
        assert!(!t.cube_embeds(3));
        let t = torus(TorusSpec::identity(2, 6).unwrap());
        assert!(t.cube_embeds(2));
    }

    #[test]
    fn json_round_trip_and_lift_consistency() {
        let mut t = torus(example_spec(2));
        t.randomize_weights(&mut ChaCha8Rng::seed_from_u64(5));
        let back = TorusGraph::<Rational>::from_json(&t.to_json()).unwrap();
        assert_eq!(back.to_json(), t.to_json());
        let bad = serde_json::json!({
            "A": [[1, 0], [0, 1]], "k": 5,
            "weights": [{"x": [0, 0], "dir": 0, "w": "1/2"}, {"x": [5, -5], "dir": 0, "w": "1/3"}]
        });
        assert!(matches!(
            TorusGraph::<Rational>::from_json(&bad),
            Err(Error::InconsistentWeights(_))
        ));
        let same = serde_json::json!({
            "A": [[1, 0], [0, 1]], "k": 5,
            "weights": [{"x": [0, 0], "dir": 0, "w": "1/2"}, {"x": [5, -5], "dir": 0, "w": "1/2"}]
        });
        assert!(TorusGraph::<Rational>::from_json(&same).is_ok());
    }
}
