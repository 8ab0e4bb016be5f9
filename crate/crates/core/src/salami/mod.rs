//! Salami partitions, extremal Lipschitz extensions and the rigidity
//! pipeline for asymptotically flat graphs.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{PotentialFunction, VertexId, WeightedGraph, UNREACHED};
use crate::scalar::{ser, Scalar};

pub mod afg;
pub mod coords;
pub mod rigidity;

pub use afg::{AsymptoticallyFlatGraph, InterfaceEdge};
pub use coords::{
    build_coordinates, diagonal_edge_report, multiplicity_and_cross_check, CoordinateMap, DiagonalReport,
    MultiplicityReport,
};
pub use rigidity::{rigidity_check, RigidityConfig, RigidityOutcome, StageReport};

/// `(X, Y, K)` with `K` separating `X` from `Y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SalamiPartition {
    pub x: BTreeSet<VertexId>,
    pub y: BTreeSet<VertexId>,
    pub k: BTreeSet<VertexId>,
}

impl SalamiPartition {
    /// Checks that the parts are disjoint, nonempty, cover `V`, and that no
    /// edge joins `X` to `Y`.
    pub fn new<S: Scalar>(
        g: &WeightedGraph<S>,
        x: BTreeSet<VertexId>,
        y: BTreeSet<VertexId>,
        k: BTreeSet<VertexId>,
    ) -> Result<Self> {
        if x.is_empty() || y.is_empty() || k.is_empty() {
            return Err(Error::InvalidParameter("salami partition parts must be nonempty".into()));
        }
        let mut part = vec![0u8; g.num_vertices()];
        for (tag, set) in [(1u8, &x), (2, &y), (3, &k)] {
            for v in set {
                if v.0 >= g.num_vertices() {
                    return Err(Error::UnknownVertex(format!("#{}", v.0)));
                }
                if part[v.0] != 0 {
                    return Err(Error::InvalidParameter(format!("`{}` lies in two parts", g.label(*v))));
                }
                part[v.0] = tag;
            }
        }
        if let Some(v) = part.iter().position(|p| *p == 0) {
            return Err(Error::InvalidParameter(format!("`{}` lies in no part", g.label(VertexId(v)))));
        }
        for u in &x {
            for (v, _) in g.neighbors(*u) {
                if part[v.0] == 2 {
                    return Err(Error::InvalidParameter(format!(
                        "edge {{{}, {}}} joins X to Y",
                        g.label(*u),
                        g.label(*v)
                    )));
                }
            }
        }
        Ok(SalamiPartition { x, y, k })
    }

    /// Whether the induced subgraph on `K` is connected.
    pub fn k_connected<S: Scalar>(&self, g: &WeightedGraph<S>) -> bool {
        let mut mask = vec![false; g.num_vertices()];
        for v in &self.k {
            mask[v.0] = true;
        }
        let first = *self.k.iter().next().unwrap();
        let d = g.multi_source_bfs([first], Some(&mask), None);
        self.k.iter().all(|v| d[v.0] != UNREACHED)
    }
}

/// Distances from each group of equal-valued sources. Returns the distinct
/// values with their distance vectors.
fn grouped_distances<S: Scalar>(
    g: &WeightedGraph<S>,
    sources: &[(VertexId, S)],
    mask: Option<&[bool]>,
) -> Vec<(S, Vec<u32>)> {
    let mut groups: Vec<(S, Vec<VertexId>)> = Vec::new();
    for (v, val) in sources {
        match groups.iter_mut().find(|(c, _)| c == val) {
            Some((_, vs)) => vs.push(*v),
            None => groups.push((val.clone(), vec![*v])),
        }
    }
    groups
        .into_iter()
        .map(|(c, vs)| (c, g.multi_source_bfs(vs, mask, None)))
        .collect()
}

/// `S(P)f`: `f` on `K`, `sup_w f(w) − d(v, w)` on `X` and
/// `inf_w f(w) + d(v, w)` on `Y`, with graph distances in `g`.
///
/// Fails with [`Error::NotLipschitz`] when `f ∉ Lip(1, K)`; the result is
/// then not 1-Lipschitz either, which is how the condition is detected.
pub fn extremal_extension<S: Scalar>(
    g: &WeightedGraph<S>,
    p: &SalamiPartition,
    f: &PotentialFunction<S>,
) -> Result<PotentialFunction<S>> {
    let sources: Vec<(VertexId, S)> = p
        .k
        .iter()
        .map(|v| f.value(g, *v).map(|x| (*v, x.clone())))
        .collect::<Result<_>>()?;
    let groups = grouped_distances(g, &sources, None);
    let mut out = PotentialFunction::new();
    for v in g.vertices() {
        let value = if p.k.contains(&v) {
            f.get(v).unwrap().clone()
        } else {
            let x_side = p.x.contains(&v);
            let mut best: Option<S> = None;
            for (c, d) in &groups {
                if d[v.0] == UNREACHED {
                    continue;
                }
                let dv = S::from_i64(d[v.0] as i64);
                let cand = if x_side { c.clone() - dv } else { c.clone() + dv };
                best = Some(match best {
                    None => cand,
                    Some(b) if x_side => if cand > b { cand } else { b },
                    Some(b) => if cand < b { cand } else { b },
                });
            }
            best.ok_or_else(|| Error::Disconnected(g.label(v).to_string(), "K".into()))?
        };
        out.set(v, value);
    }
    let all: BTreeSet<VertexId> = g.vertices().collect();
    if !g.is_lipschitz(&out, &S::one(), &all)?.holds {
        let check = g.is_lipschitz_pairwise(f, &S::one(), &p.k)?;
        let (u, v) = check.violation.unwrap_or((VertexId(0), VertexId(0)));
        return Err(Error::NotLipschitz {
            u: g.label(u).to_string(),
            v: g.label(v).to_string(),
            k: "1".into(),
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "S: Scalar"))]
pub struct LaplacianViolation<S> {
    pub vertex: String,
    #[serde(serialize_with = "ser")]
    pub laplacian: S,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "S: Scalar"))]
pub struct PropagationReport<S> {
    pub harmonic_on_k: bool,
    /// Vertices of `V ∖ T` where `Δ(Sf)` was evaluated.
    pub checked: usize,
    pub violations: Vec<LaplacianViolation<S>>,
    /// `K` meets the truncation layer `T` or its neighbours, so its
    /// Laplacian sees a cut neighbourhood.
    pub truncation_artifact: bool,
    /// `None` when the hypothesis `Δ(Sf) = 0 on K` fails or the window is
    /// too thin to judge.
    pub holds: Option<bool>,
}

/// Evaluates `Δ(Sf)` on `K` and, when it vanishes there, on every vertex
/// outside the declared truncation layer `truncation` (vertices whose
/// neighbourhoods were cut by the finite window). `eps` is the comparison
/// tolerance.
pub fn harmonicity_propagation_check<S: Scalar>(
    g: &WeightedGraph<S>,
    p: &SalamiPartition,
    f: &PotentialFunction<S>,
    truncation: &BTreeSet<VertexId>,
    eps: f64,
) -> Result<PropagationReport<S>> {
    let sf = extremal_extension(g, p, f)?;
    let zero = S::zero();
    let near_cut = |v: VertexId| truncation.contains(&v) || g.neighbors(v).iter().any(|(u, _)| truncation.contains(u));
    let truncation_artifact = p.k.iter().any(|v| near_cut(*v));
    let mut harmonic_on_k = true;
    for v in &p.k {
        if !g.laplacian(&sf, *v)?.approx_eq(&zero, eps) {
            harmonic_on_k = false;
        }
    }
    let mut violations = Vec::new();
    let mut checked = 0;
    for v in g.vertices().filter(|v| !truncation.contains(v)) {
        checked += 1;
        let lap = g.laplacian(&sf, v)?;
        if !lap.approx_eq(&zero, eps) {
            violations.push(LaplacianViolation {
                vertex: g.label(v).to_string(),
                laplacian: lap,
            });
        }
    }
    let holds = if harmonic_on_k && !truncation_artifact {
        Some(violations.is_empty())
    } else {
        None
    };
    Ok(PropagationReport {
        harmonic_on_k,
        checked,
        violations,
        truncation_artifact,
        holds,
    })
}

/// Integer extension used by the pipeline: `S(P)f` on the induced subgraph
/// given by `mask`, where `side[v]` is `-1` on `X`, `+1` on `Y`, `0` on `K`.
pub(crate) fn extend_int<S: Scalar>(
    g: &WeightedGraph<S>,
    mask: &[bool],
    side: &[i8],
    k_values: &[(VertexId, i64)],
) -> Vec<Option<i64>> {
    let mut groups: BTreeMap<i64, Vec<VertexId>> = BTreeMap::new();
    for (v, c) in k_values {
        groups.entry(*c).or_default().push(*v);
    }
    let dists: Vec<(i64, Vec<u32>)> = groups
        .into_iter()
        .map(|(c, vs)| (c, g.multi_source_bfs(vs, Some(mask), None)))
        .collect();
    let mut out = vec![None; g.num_vertices()];
    for (v, val) in k_values {
        out[v.0] = Some(*val);
    }
    for v in 0..g.num_vertices() {
        if !mask[v] || side[v] == 0 {
            continue;
        }
        let mut best: Option<i64> = None;
        for (c, d) in &dists {
            if d[v] == UNREACHED {
                continue;
            }
            let cand = if side[v] < 0 { c - d[v] as i64 } else { c + d[v] as i64 };
            best = Some(match best {
                None => cand,
                Some(b) if side[v] < 0 => b.max(cand),
                Some(b) => b.min(cand),
            });
        }
        out[v] = best;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{parse_point_label, GridWindow};
    use crate::scalar::{ratio, Rational};

    /// Strip `[−l, l] × [−w, w]` of the standard grid.
    fn strip(l: i64, w: i64) -> WeightedGraph<Rational> {
        let mut b = crate::graph::GraphBuilder::new();
        for x in -l..=l {
            for y in -w..=w {
                b.add_vertex(format!("{x},{y}")).unwrap();
            }
        }
        for x in -l..=l {
            for y in -w..=w {
                let u = b.vertex(&format!("{x},{y}")).unwrap();
                if x < l {
                    let v = b.vertex(&format!("{},{y}", x + 1)).unwrap();
                    b.add_edge(u, v, Rational::one()).unwrap();
                }
                if y < w {
                    let v = b.vertex(&format!("{x},{}", y + 1)).unwrap();
                    b.add_edge(u, v, Rational::one()).unwrap();
                }
            }
        }
        b.build().unwrap()
    }

    fn slab_partition(g: &WeightedGraph<Rational>, t: i64) -> SalamiPartition {
        let mut x = BTreeSet::new();
        let mut y = BTreeSet::new();
        let mut k = BTreeSet::new();
        for v in g.vertices() {
            let p = parse_point_label(g.label(v)).unwrap();
            match p[0].cmp(&t) {
                std::cmp::Ordering::Less => x.insert(v),
                std::cmp::Ordering::Greater => y.insert(v),
                std::cmp::Ordering::Equal => k.insert(v),
            };
        }
        SalamiPartition::new(g, x, y, k).unwrap()
    }

    fn ends(g: &WeightedGraph<Rational>, l: i64) -> BTreeSet<VertexId> {
        g.vertices()
            .filter(|v| parse_point_label(g.label(*v)).unwrap()[0].abs() == l)
            .collect()
    }

    #[test]
    fn partition_validation() {
        let g = strip(3, 1);
        let p = slab_partition(&g, 0);
        assert!(p.k_connected(&g));
        let mut x = p.x.clone();
        let mut k = p.k.clone();
        // moving K into X creates X–Y edges
        x.extend(k.iter().copied());
        k.clear();
        k.insert(*p.y.iter().next().unwrap());
        let y: BTreeSet<_> = p.y.iter().skip(1).copied().collect();
        assert!(SalamiPartition::new(&g, x, y, k).is_err());
    }

    #[test]
    fn constant_data_gives_signed_distance() {
        let g = strip(4, 2);
        let p = slab_partition(&g, 1);
        let f = PotentialFunction::from_pairs(p.k.iter().map(|v| (*v, Rational::zero())));
        let sf = extremal_extension(&g, &p, &f).unwrap();
        for v in g.vertices() {
            let x = parse_point_label(g.label(v)).unwrap()[0];
            assert_eq!(*sf.get(v).unwrap(), Rational::from_i64(x - 1));
        }
    }

    #[test]
    fn non_lipschitz_data_is_rejected() {
        let g = strip(3, 1);
        let p = slab_partition(&g, 0);
        let f = PotentialFunction::from_pairs(
            p.k.iter().enumerate().map(|(i, v)| (*v, Rational::from_i64(3 * i as i64))),
        );
        assert!(matches!(extremal_extension(&g, &p, &f), Err(Error::NotLipschitz { .. })));
    }

    #[test]
    fn propagation_on_a_strip() {
        let g = strip(5, 2);
        let p = slab_partition(&g, 0);
        let f = PotentialFunction::from_pairs(p.k.iter().map(|v| (*v, ratio(1, 2))));
        let rep = harmonicity_propagation_check(&g, &p, &f, &ends(&g, 5), 0.0).unwrap();
        assert!(rep.harmonic_on_k);
        assert_eq!(rep.holds, Some(true));
        // without declaring the cut, the end layers show up
        let rep = harmonicity_propagation_check(&g, &p, &f, &BTreeSet::new(), 0.0).unwrap();
        assert_eq!(rep.violations.len(), 10);
    }

    #[test]
    fn thin_window_is_flagged() {
        let g = strip(1, 2);
        let p = slab_partition(&g, 0);
        let f = PotentialFunction::from_pairs(p.k.iter().map(|v| (*v, Rational::zero())));
        let rep = harmonicity_propagation_check(&g, &p, &f, &ends(&g, 1), 0.0).unwrap();
        assert!(rep.truncation_artifact);
        assert_eq!(rep.holds, None);
    }

    #[test]
    fn integer_extension_matches_generic() {
        let gw = GridWindow::<Rational>::standard(2, 3).unwrap();
        let g = gw.to_graph().unwrap();
        let mask = vec![true; g.num_vertices()];
        let mut side = vec![0i8; g.num_vertices()];
        let mut kv = Vec::new();
        let (mut xs, mut ys, mut ks) = (BTreeSet::new(), BTreeSet::new(), BTreeSet::new());
        for v in g.vertices() {
            let p = parse_point_label(g.label(v)).unwrap();
            if p[1] < -1 {
                side[v.0] = -1;
                xs.insert(v);
            } else if p[1] > -1 {
                side[v.0] = 1;
                ys.insert(v);
            } else {
                kv.push((v, p[0].abs()));
                ks.insert(v);
            }
        }
        let ints = extend_int(&g, &mask, &side, &kv);
        let part = SalamiPartition::new(&g, xs, ys, ks).unwrap();
        let f = PotentialFunction::from_pairs(kv.iter().map(|(v, c)| (*v, Rational::from_i64(*c))));
        let sf = extremal_extension(&g, &part, &f).unwrap();
        for v in g.vertices() {
            assert_eq!(Rational::from_i64(ints[v.0].unwrap()), *sf.get(v).unwrap());
        }
    }

    /// Horizontal strip `|x_1| ≤ 3` of the doubled-vertex graph, with the
    /// partition by `h_0` relative to `t` and the cut ends.
    fn doubled_strip(t: i64) -> (WeightedGraph<Rational>, SalamiPartition, BTreeSet<VertexId>, Vec<i64>) {
        let afg = crate::instances::appendix1_core(1, 8).unwrap();
        let l = afg.layered().unwrap();
        // core points keep their grid labels, `a` and `b` sit over the origin
        let pos: Vec<Vec<i64>> = l
            .g
            .vertices()
            .map(|v| parse_point_label(l.g.label(v)).unwrap_or(vec![0, 0]))
            .collect();
        let mask: Vec<bool> = pos.iter().map(|p| p[1].abs() <= 3).collect();
        let sub = coords::induced(&l.g, &mask).unwrap();
        let x0: Vec<i64> = sub.of.iter().map(|v| pos[v.0][0]).collect();
        let (mut xs, mut ys, mut ks, mut cut) = (BTreeSet::new(), BTreeSet::new(), BTreeSet::new(), BTreeSet::new());
        for v in sub.g.vertices() {
            match x0[v.0].cmp(&t) {
                std::cmp::Ordering::Less => xs.insert(v),
                std::cmp::Ordering::Greater => ys.insert(v),
                std::cmp::Ordering::Equal => ks.insert(v),
            };
            if x0[v.0].abs() == 8 {
                cut.insert(v);
            }
        }
        let p = SalamiPartition::new(&sub.g, xs, ys, ks).unwrap();
        (sub.g, p, cut, x0)
    }

    #[test]
    fn propagation_through_the_doubled_vertex() {
        let (g, p, cut, x0) = doubled_strip(0);
        assert!(p.k.contains(&g.vertex("a").unwrap()));
        let f = PotentialFunction::from_pairs(p.k.iter().map(|v| (*v, Rational::zero())));
        let rep = harmonicity_propagation_check(&g, &p, &f, &cut, 0.0).unwrap();
        assert!(rep.harmonic_on_k && !rep.truncation_artifact);
        assert_eq!(rep.holds, Some(true));
        let sf = extremal_extension(&g, &p, &f).unwrap();
        for v in g.vertices() {
            assert_eq!(*sf.get(v).unwrap(), Rational::from_i64(x0[v.0]));
        }
    }

    #[test]
    fn shifted_separators_agree_up_to_a_constant() {
        let (g, p0, _, _) = doubled_strip(0);
        let (_, p1, _, _) = doubled_strip(2);
        let zero = |p: &SalamiPartition| PotentialFunction::from_pairs(p.k.iter().map(|v| (*v, Rational::zero())));
        let a = extremal_extension(&g, &p0, &zero(&p0)).unwrap();
        let b = extremal_extension(&g, &p1, &zero(&p1)).unwrap();
        for v in g.vertices() {
            assert_eq!(a.get(v).unwrap().clone() - b.get(v).unwrap().clone(), Rational::from_i64(2));
        }
    }
}
