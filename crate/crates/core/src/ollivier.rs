//! Brute-force Ollivier curvature of edges.
//!
//! For adjacent `x ~ y` the curvature is the minimum of `Δf(x) - Δf(y)` over
//! integer-valued `f` on `B₁(x) ∪ B₁(y)` with `f(x) = 0`, `f(y) = 1` that are
//! 1-Lipschitz for the distance of the whole graph. Lipschitz bounds relative
//! to `x` and `y` confine every value to `{-1, 0, 1, 2}`, so the search is a
//! finite constraint problem over at most four values per vertex.
//!
//! The objective is linear in the free values. It is scaled to integer costs
//! (exact mode) and minimised by depth-first branch and bound with forward
//! checking on bitmask domains. The reported curvature is recomputed from the
//! witness with exact arithmetic, not taken from the scaled costs.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{PotentialFunction, VertexId, WeightedGraph};
use crate::par;
use crate::scalar::{Cost, Scalar};

/// Alphabet of admissible values, indexed by bit position.
const VALUES: [i64; 4] = [-1, 0, 1, 2];
const FULL: u8 = 0b1111;

pub const DEFAULT_BUDGET: u64 = 50_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Branch and bound with forward checking.
    Propagate,
    /// Full enumeration, Lipschitz test at the leaves only.
    Naive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CurvatureConfig {
    /// Maximum number of search nodes per edge.
    pub budget: u64,
    pub strategy: Strategy,
}

impl Default for CurvatureConfig {
    fn default() -> Self {
        CurvatureConfig {
            budget: DEFAULT_BUDGET,
            strategy: Strategy::Propagate,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureResult<S> {
    pub kappa: S,
    pub witness: PotentialFunction<S>,
    /// `B₁(x) ∪ B₁(y)` in ascending id order.
    pub domain: Vec<VertexId>,
    pub nodes: u64,
}

/// `∇_{xy}Δf = Δf(x) - Δf(y)`.
pub fn gradient_of_laplacian<S: Scalar>(
    g: &WeightedGraph<S>,
    x: VertexId,
    y: VertexId,
    f: &PotentialFunction<S>,
) -> Result<S> {
    Ok(g.laplacian(f, x)? - g.laplacian(f, y)?)
}

pub fn edge_curvature<S: Scalar>(g: &WeightedGraph<S>, x: VertexId, y: VertexId) -> Result<CurvatureResult<S>> {
    edge_curvature_with(g, x, y, &CurvatureConfig::default())
}

pub fn edge_curvature_with<S: Scalar>(
    g: &WeightedGraph<S>,
    x: VertexId,
    y: VertexId,
    config: &CurvatureConfig,
) -> Result<CurvatureResult<S>> {
    if x.0 >= g.num_vertices() {
        return Err(Error::UnknownVertex(format!("#{}", x.0)));
    }
    if y.0 >= g.num_vertices() {
        return Err(Error::UnknownVertex(format!("#{}", y.0)));
    }
    if !g.adjacent(x, y) {
        return Err(Error::NotAdjacent(g.label(x).into(), g.label(y).into()));
    }

    let mut domain: BTreeSet<VertexId> = BTreeSet::new();
    domain.insert(x);
    domain.insert(y);
    domain.extend(g.neighbors(x).iter().map(|(v, _)| *v));
    domain.extend(g.neighbors(y).iter().map(|(v, _)| *v));
    let domain: Vec<VertexId> = domain.into_iter().collect();
    let free: Vec<VertexId> = domain.iter().copied().filter(|v| *v != x && *v != y).collect();

    // coefficient of f(z) in Δf(x) - Δf(y)
    let mx = g.vertex_weight(x).clone();
    let my = g.vertex_weight(y).clone();
    let coeffs: Vec<S> = free
        .iter()
        .map(|z| {
            let a = g.weight(x, *z).map(|w| w.clone() / mx.clone()).unwrap_or_else(S::zero);
            let b = g.weight(y, *z).map(|w| w.clone() / my.clone()).unwrap_or_else(S::zero);
            a - b
        })
        .collect();
    let costs = S::to_costs(&coeffs)?;

    let dist = bounded_distances(g, &domain, 3);
    let d = |u: VertexId, v: VertexId| -> u8 { dist.get(&(u, v)).copied().unwrap_or(3) };

    let init: Vec<u8> = free
        .iter()
        .map(|z| {
            let (dx, dy) = (d(x, *z) as i64, d(y, *z) as i64);
            let mut mask = 0u8;
            for (bit, v) in VALUES.iter().enumerate() {
                if v.abs() <= dx && (v - 1).abs() <= dy {
                    mask |= 1 << bit;
                }
            }
            mask
        })
        .collect();
    let pair_dist: Vec<Vec<u8>> = free
        .iter()
        .map(|u| free.iter().map(|v| if u == v { 0 } else { d(*u, *v) }).collect())
        .collect();

    let problem = Problem {
        costs,
        init,
        pair_dist,
        budget: config.budget,
    };
    let outcome = match config.strategy {
        Strategy::Propagate => problem.solve_propagate(),
        Strategy::Naive => problem.solve_naive(),
    };
    let (assignment, nodes) = outcome.ok_or_else(|| Error::BudgetExceeded {
        x: g.label(x).into(),
        y: g.label(y).into(),
        budget: config.budget,
    })?;

    let mut witness = PotentialFunction::new();
    witness.set(x, S::zero());
    witness.set(y, S::one());
    for (z, bit) in free.iter().zip(&assignment) {
        witness.set(*z, S::from_i64(VALUES[*bit as usize]));
    }
    let kappa = gradient_of_laplacian(g, x, y, &witness)?;
    Ok(CurvatureResult {
        kappa,
        witness,
        domain,
        nodes,
    })
}

/// `R(x) = Σ_{y~x} κ(x, y)`.
pub fn scalar_curvature<S: Scalar>(g: &WeightedGraph<S>, x: VertexId) -> Result<S> {
    scalar_curvature_with(g, x, &CurvatureConfig::default())
}

pub fn scalar_curvature_with<S: Scalar>(g: &WeightedGraph<S>, x: VertexId, config: &CurvatureConfig) -> Result<S> {
    if x.0 >= g.num_vertices() {
        return Err(Error::UnknownVertex(format!("#{}", x.0)));
    }
    let mut total = S::zero();
    for (y, _) in g.neighbors(x) {
        total = total + edge_curvature_with(g, x, *y, config)?.kappa;
    }
    Ok(total)
}

/// Curvature of every edge in canonical order (`u < v`, sorted).
pub fn all_edge_curvatures<S: Scalar>(
    g: &WeightedGraph<S>,
    config: &CurvatureConfig,
) -> Result<Vec<((VertexId, VertexId), S)>> {
    let edges = g.edges();
    let kappas = par::try_map(&edges, |(u, v)| edge_curvature_with(g, *u, *v, config).map(|r| r.kappa))?;
    Ok(edges.into_iter().zip(kappas).collect())
}

/// Scalar curvature of every vertex, computed from one pass over the edges.
pub fn all_scalar_curvatures<S: Scalar>(g: &WeightedGraph<S>, config: &CurvatureConfig) -> Result<Vec<S>> {
    let mut r = vec![S::zero(); g.num_vertices()];
    for ((u, v), k) in all_edge_curvatures(g, config)? {
        // f ↦ 1 - f swaps the roles of the endpoints, so κ is symmetric
        r[u.0] = r[u.0].clone() + k.clone();
        r[v.0] = r[v.0].clone() + k;
    }
    Ok(r)
}

/// Full-graph hop distances between all pairs of `targets`, capped at `cap`
/// (pairs at distance `>= cap` are absent).
fn bounded_distances<S: Scalar>(
    g: &WeightedGraph<S>,
    targets: &[VertexId],
    cap: u8,
) -> HashMap<(VertexId, VertexId), u8> {
    let wanted: BTreeSet<VertexId> = targets.iter().copied().collect();
    let mut out = HashMap::new();
    for &s in targets {
        let mut seen: HashMap<VertexId, u8> = HashMap::new();
        seen.insert(s, 0);
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            let du = seen[&u];
            if wanted.contains(&u) {
                out.insert((s, u), du);
            }
            if du + 1 >= cap {
                continue;
            }
            for (v, _) in g.neighbors(u) {
                if !seen.contains_key(v) {
                    seen.insert(*v, du + 1);
                    queue.push_back(*v);
                }
            }
        }
    }
    out
}

fn compatible(value_bit: usize, d: u8) -> u8 {
    if d >= 3 {
        return FULL;
    }
    let a = VALUES[value_bit];
    let mut mask = 0;
    for (bit, b) in VALUES.iter().enumerate() {
        if (a - b).abs() <= d as i64 {
            mask |= 1 << bit;
        }
    }
    mask
}

struct Problem<C> {
    costs: Vec<C>,
    init: Vec<u8>,
    pair_dist: Vec<Vec<u8>>,
    budget: u64,
}

struct Search<'a, C> {
    p: &'a Problem<C>,
    compat: Vec<Vec<[u8; 4]>>,
    assignment: Vec<u8>,
    best: Option<(C, Vec<u8>)>,
    nodes: u64,
    exhausted: bool,
}

fn term<C: Cost>(c: C, bit: usize) -> C {
    c * C::from(VALUES[bit] as i8)
}

impl<C: Cost> Problem<C> {
    /// Returns the lex-smallest minimiser (as bit indices) and the node count,
    /// or `None` when the budget runs out.
    fn solve_propagate(&self) -> Option<(Vec<u8>, u64)> {
        let n = self.costs.len();
        let compat = (0..n)
            .map(|u| {
                (0..n)
                    .map(|v| std::array::from_fn(|bit| compatible(bit, self.pair_dist[u][v])))
                    .collect()
            })
            .collect();
        let mut s = Search {
            p: self,
            compat,
            assignment: vec![0; n],
            best: None,
            nodes: 0,
            exhausted: false,
        };
        if self.init.iter().all(|m| *m != 0) {
            s.descend(0, self.init.clone(), C::from(0));
        }
        if s.exhausted {
            return None;
        }
        // the constant-zero extension of any admissible boundary always exists,
        // so an empty result is impossible for a genuine edge
        let (_, best) = s.best.expect("feasible set is nonempty");
        Some((best, s.nodes))
    }

    fn solve_naive(&self) -> Option<(Vec<u8>, u64)> {
        let n = self.costs.len();
        let mut assignment = vec![0u8; n];
        let mut best: Option<(C, Vec<u8>)> = None;
        let mut nodes = 0u64;
        loop {
            nodes += 1;
            if nodes > self.budget {
                return None;
            }
            let feasible = (0..n).all(|i| self.init[i] >> assignment[i] & 1 == 1)
                && (0..n).all(|i| {
                    (i + 1..n).all(|j| {
                        let d = self.pair_dist[i][j] as i64;
                        (VALUES[assignment[i] as usize] - VALUES[assignment[j] as usize]).abs() <= d
                    })
                });
            if feasible {
                let cost = (0..n).fold(C::from(0), |acc, i| acc + term(self.costs[i], assignment[i] as usize));
                if best.as_ref().is_none_or(|(b, _)| cost < *b) {
                    best = Some((cost, assignment.clone()));
                }
            }
            // odometer increment, last position fastest, so vectors come in lex order
            let mut i = n;
            loop {
                if i == 0 {
                    return best.map(|(_, a)| (a, nodes));
                }
                i -= 1;
                assignment[i] += 1;
                if assignment[i] < 4 {
                    break;
                }
                assignment[i] = 0;
            }
        }
    }
}

impl<C: Cost> Search<'_, C> {
    fn lower_bound(&self, level: usize, domains: &[u8]) -> C {
        let mut lb = C::from(0);
        for k in level..domains.len() {
            let mut m: Option<C> = None;
            for bit in 0..4 {
                if domains[k] >> bit & 1 == 1 {
                    let t = term(self.p.costs[k], bit);
                    if m.is_none_or(|m| t < m) {
                        m = Some(t);
                    }
                }
            }
            lb = lb + m.expect("domains are nonempty");
        }
        lb
    }

    fn descend(&mut self, level: usize, domains: Vec<u8>, partial: C) {
        if self.exhausted {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.p.budget {
            self.exhausted = true;
            return;
        }
        let n = domains.len();
        if level == n {
            if self.best.as_ref().is_none_or(|(b, _)| partial < *b) {
                self.best = Some((partial, self.assignment.clone()));
            }
            return;
        }
        if let Some((b, _)) = &self.best {
            if !(partial + self.lower_bound(level, &domains) < *b) {
                return;
            }
        }
        for bit in 0..4 {
            if domains[level] >> bit & 1 == 0 {
                continue;
            }
            let mut next = domains.clone();
            next[level] = 1 << bit;
            let mut dead = false;
            for k in level + 1..n {
                next[k] &= self.compat[level][k][bit];
                if next[k] == 0 {
                    dead = true;
                    break;
                }
            }
            if dead {
                continue;
            }
            self.assignment[level] = bit as u8;
            let cost = partial + term(self.p.costs[level], bit);
            self.descend(level + 1, next, cost);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;
    use crate::scalar::{ratio, Rational};

    fn cycle(len: usize) -> WeightedGraph<Rational> {
        let mut b = GraphBuilder::new();
        let ids: Vec<_> = (0..len).map(|i| b.add_vertex(i.to_string()).unwrap()).collect();
        for i in 0..len {
            b.add_edge(ids[i], ids[(i + 1) % len], Rational::one()).unwrap();
        }
        b.build().unwrap()
    }

    fn complete(n: usize) -> WeightedGraph<Rational> {
        let mut b = GraphBuilder::new();
        let ids: Vec<_> = (0..n).map(|i| b.add_vertex(i.to_string()).unwrap()).collect();
        for i in 0..n {
            for j in i + 1..n {
                b.add_edge(ids[i], ids[j], Rational::one()).unwrap();
            }
        }
        b.build().unwrap()
    }

    #[test]
    fn long_cycles_are_flat() {
        let g = cycle(8);
        let r = edge_curvature(&g, VertexId(0), VertexId(1)).unwrap();
        assert_eq!(r.kappa, ratio(0, 1));
        assert_eq!(r.domain.len(), 4);
    }

    #[test]
    fn short_cycles_and_cliques() {
        // triangle: Δf(x) - Δf(y) = (1 + f(z)) - (f(z) - 2) = 3 for either value of f(z)
        let g = complete(3);
        assert_eq!(edge_curvature(&g, VertexId(0), VertexId(1)).unwrap().kappa, ratio(3, 1));
        // K_n: κ = n with unit weights
        let g = complete(5);
        assert_eq!(edge_curvature(&g, VertexId(0), VertexId(1)).unwrap().kappa, ratio(5, 1));
        // C_4: the two far vertices are forced to 0 and 1, κ = 2
        let g = cycle(4);
        assert_eq!(edge_curvature(&g, VertexId(0), VertexId(1)).unwrap().kappa, ratio(2, 1));
        // C_5: κ = 1
        let g = cycle(5);
        assert_eq!(edge_curvature(&g, VertexId(0), VertexId(1)).unwrap().kappa, ratio(1, 1));
    }

    #[test]
    fn witness_is_valid_and_reproduces_kappa() {
        let g = cycle(6);
        let (x, y) = (VertexId(2), VertexId(3));
        let r = edge_curvature(&g, x, y).unwrap();
        assert_eq!(r.witness.get(x), Some(&ratio(0, 1)));
        assert_eq!(r.witness.get(y), Some(&ratio(1, 1)));
        let dom: BTreeSet<_> = r.domain.iter().copied().collect();
        assert!(g.is_lipschitz(&r.witness, &Rational::one(), &dom).unwrap().holds);
        assert_eq!(gradient_of_laplacian(&g, x, y, &r.witness).unwrap(), r.kappa);
    }

    #[test]
    fn rejects_non_edges_and_exhausted_budgets() {
        let g = cycle(6);
        assert!(matches!(edge_curvature(&g, VertexId(0), VertexId(2)), Err(Error::NotAdjacent(..))));
        let tight = CurvatureConfig {
            budget: 1,
            strategy: Strategy::Propagate,
        };
        assert!(matches!(
            edge_curvature_with(&g, VertexId(0), VertexId(1), &tight),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn naive_and_propagating_search_agree() {
        let g = complete(4);
        let naive = CurvatureConfig {
            strategy: Strategy::Naive,
            ..Default::default()
        };
        for (u, v) in g.edges() {
            let a = edge_curvature(&g, u, v).unwrap();
            let b = edge_curvature_with(&g, u, v, &naive).unwrap();
            assert_eq!(a.kappa, b.kappa);
            assert_eq!(a.witness, b.witness);
        }
    }

    #[test]
    fn symmetric_under_endpoint_swap() {
        let mut b = GraphBuilder::new();
        let ids: Vec<_> = (0..5).map(|i| b.add_vertex(i.to_string()).unwrap()).collect();
        for (u, v, w) in [(0, 1, ratio(1, 2)), (1, 2, ratio(3, 1)), (2, 3, ratio(1, 1)), (3, 0, ratio(2, 3)), (1, 4, ratio(1, 4))] {
            b.add_edge(ids[u], ids[v], w).unwrap();
        }
        b.set_vertex_weight(ids[1], ratio(1, 3)).unwrap();
        let g = b.build().unwrap();
        for (u, v) in g.edges() {
            assert_eq!(edge_curvature(&g, u, v).unwrap().kappa, edge_curvature(&g, v, u).unwrap().kappa);
        }
    }

    #[test]
    fn float_mode_matches_exact_mode() {
        let g = cycle(5);
        let gf: WeightedGraph<f64> = WeightedGraph::from_json(&g.to_json()).unwrap();
        let e = edge_curvature(&g, VertexId(0), VertexId(1)).unwrap().kappa;
        let f = edge_curvature(&gf, VertexId(0), VertexId(1)).unwrap().kappa;
        assert!((e.to_f64() - f).abs() < 1e-12);
    }
}
