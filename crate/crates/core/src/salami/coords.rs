//! Coordinates on the unknown core from salami extensions, the diagonal
//! argument with rotated salamis, and the fibre multiplicity test.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{GraphBuilder, PotentialFunction, VertexId, WeightedGraph};
use crate::grid::{fmt_point, linf, shifted, sphere_points, Point};
use crate::ollivier;
use crate::par;
use crate::scalar::Scalar;

use super::afg::{AsymptoticallyFlatGraph, Layered};
use super::extend_int;

/// Induced subgraph; `of[v]` is the original id of `v`.
pub(crate) struct Induced<S> {
    pub g: WeightedGraph<S>,
    pub of: Vec<VertexId>,
}

pub(crate) fn induced<S: Scalar>(g: &WeightedGraph<S>, mask: &[bool]) -> Result<Induced<S>> {
    let mut b = GraphBuilder::new();
    let mut of = Vec::new();
    let mut at = vec![None; g.num_vertices()];
    for v in g.vertices().filter(|v| mask[v.0]) {
        let id = b.add_vertex(g.label(v))?;
        b.set_vertex_weight(id, g.vertex_weight(v).clone())?;
        at[v.0] = Some(id);
        of.push(v);
    }
    for &u in &of {
        for (v, w) in g.neighbors(u) {
            if u < *v && mask[v.0] {
                b.add_edge(at[u.0].unwrap(), at[v.0].unwrap(), w.clone())?;
            }
        }
    }
    Ok(Induced { g: b.build()?, of })
}

/// Results for one coordinate `h_i` at one level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxisReport {
    pub axis: usize,
    /// Half-width `R` of the salami `C_R^i`.
    pub window: i64,
    pub salami_vertices: usize,
    /// `h_R = h_{−R}` on the salami.
    pub sides_agree: bool,
    pub disagreement: Option<String>,
    /// `Δh = 0` on every vertex away from the cut ends.
    pub harmonic: bool,
    pub harmonic_violation: Option<String>,
    /// `h_i = Φ_i` on the known grid part.
    pub agrees_outside_core: bool,
    /// `h_i(K) ⊂ [−s, s]`.
    pub range_ok: bool,
    pub core_min: i64,
    pub core_max: i64,
    /// Transverse boundary edges near `x_i = 0` whose curvature was checked.
    pub boundary_edges_checked: usize,
    pub boundary_kappa_min: Option<String>,
    pub boundary_nonnegative: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoordinateMap {
    pub level: i64,
    pub axes: Vec<AxisReport>,
    /// `ĥ` on the unknown core, by label.
    pub coords: BTreeMap<String, Point>,
    pub ok: bool,
    /// `ĥ` on every vertex: coordinates on the core, `Φ` elsewhere.
    #[serde(skip)]
    pub hat: Vec<Option<Point>>,
}

impl CoordinateMap {
    /// `ĥ⁻¹(p)`, indexed by grid point.
    pub fn fibres(&self) -> HashMap<Point, Vec<VertexId>> {
        let mut m: HashMap<Point, Vec<VertexId>> = HashMap::new();
        for (v, p) in self.hat.iter().enumerate() {
            if let Some(p) = p {
                m.entry(p.clone()).or_default().push(VertexId(v));
            }
        }
        m
    }
}

fn axis_coordinate<S: Scalar>(l: &Layered<S>, s: i64, axis: usize) -> Result<(AxisReport, Vec<(VertexId, i64)>)> {
    let big_r = 4 * (s + 1);
    if l.rho < big_r {
        return Err(Error::WindowTooSmall { need: big_r, have: l.rho });
    }
    let mask: Vec<bool> = l
        .phi
        .iter()
        .map(|p| match p {
            None => true,
            Some(p) => p.iter().enumerate().all(|(j, c)| j == axis || c.abs() <= big_r),
        })
        .collect();
    let sub = induced(&l.g, &mask)?;
    let m = sub.g.num_vertices();
    let phi_i = |v: VertexId| l.phi[sub.of[v.0].0].as_ref().map(|p| p[axis]);

    let mut side_lo = vec![0i8; m];
    let mut side_hi = vec![0i8; m];
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for v in sub.g.vertices() {
        match phi_i(v) {
            Some(c) if c < -big_r => (side_lo[v.0], side_hi[v.0]) = (-1, -1),
            Some(c) if c == -big_r => {
                side_hi[v.0] = -1;
                lo.push((v, -big_r));
            }
            Some(c) if c == big_r => {
                side_lo[v.0] = 1;
                hi.push((v, big_r));
            }
            Some(c) if c > big_r => (side_lo[v.0], side_hi[v.0]) = (1, 1),
            _ => (side_lo[v.0], side_hi[v.0]) = (1, -1),
        }
    }
    let all = vec![true; m];
    let h_lo = extend_int(&sub.g, &all, &side_lo, &lo);
    let h_hi = extend_int(&sub.g, &all, &side_hi, &hi);
    let disagreement = sub.g.vertices().find(|v| h_lo[v.0] != h_hi[v.0]);
    let h: Vec<i64> = h_lo.iter().map(|x| x.unwrap_or(i64::MIN / 4)).collect();

    let mut harmonic_violation = None;
    let mut agrees = true;
    let mut core_vals = Vec::new();
    for v in sub.g.vertices() {
        let truncated = phi_i(v).is_some_and(|c| c.abs() >= l.rho);
        if !truncated && harmonic_violation.is_none() && !sub.g.laplacian_int(&h, v).approx_eq(&S::zero(), 1e-9) {
            harmonic_violation = Some(sub.g.label(v).to_string());
        }
        match phi_i(v) {
            Some(c) => agrees &= h[v.0] == c,
            None => core_vals.push((sub.of[v.0], h[v.0])),
        }
    }
    let core_min = core_vals.iter().map(|x| x.1).min().unwrap_or(0);
    let core_max = core_vals.iter().map(|x| x.1).max().unwrap_or(0);

    // curvature of the salami along its transverse boundary near x_i = 0
    let on_transverse = |v: VertexId| {
        l.phi[sub.of[v.0].0].as_ref().is_some_and(|p| {
            p[axis].abs() <= 1 && p.iter().enumerate().any(|(j, c)| j != axis && c.abs() == big_r)
        })
    };
    let boundary: Vec<(VertexId, VertexId)> = sub
        .g
        .vertices()
        .filter(|v| on_transverse(*v))
        .flat_map(|u| {
            sub.g
                .neighbors(u)
                .iter()
                .filter(move |(v, _)| u < *v && phi_i(*v).is_some_and(|c| c.abs() <= 1))
                .map(move |(v, _)| (u, *v))
                .collect::<Vec<_>>()
        })
        .collect();
    let kappas = par::try_map(&boundary, |(u, v)| ollivier::edge_curvature(&sub.g, *u, *v).map(|c| c.kappa))?;
    let kmin = kappas.iter().cloned().reduce(|a, b| if b < a { b } else { a });

    let report = AxisReport {
        axis,
        window: big_r,
        salami_vertices: m,
        sides_agree: disagreement.is_none(),
        disagreement: disagreement.map(|v| sub.g.label(v).to_string()),
        harmonic: harmonic_violation.is_none(),
        harmonic_violation,
        agrees_outside_core: agrees,
        range_ok: core_vals.iter().all(|x| x.1.abs() <= s),
        core_min,
        core_max,
        boundary_edges_checked: boundary.len(),
        boundary_nonnegative: kmin.as_ref().is_none_or(|k| !k.is_negative()),
        boundary_kappa_min: kmin.map(|k| k.to_string()),
    };
    Ok((report, core_vals))
}

pub(crate) fn coordinates<S: Scalar>(l: &Layered<S>, s: i64) -> Result<CoordinateMap> {
    let mut axes = Vec::new();
    let mut hat: Vec<Option<Point>> = l.phi.clone();
    let core = l.core();
    let mut partial: HashMap<VertexId, Point> = core.iter().map(|v| (*v, vec![0; l.n])).collect();
    for axis in 0..l.n {
        let (rep, vals) = axis_coordinate(l, s, axis)?;
        for (v, c) in vals {
            partial.get_mut(&v).unwrap()[axis] = c;
        }
        axes.push(rep);
    }
    let mut coords = BTreeMap::new();
    for v in core {
        let p = partial.remove(&v).unwrap();
        coords.insert(l.g.label(v).to_string(), p.clone());
        hat[v.0] = Some(p);
    }
    let ok = axes.iter().all(|a| {
        a.sides_agree && a.harmonic && a.agrees_outside_core && a.range_ok && a.boundary_nonnegative
    });
    Ok(CoordinateMap {
        level: s,
        axes,
        coords,
        ok,
        hat,
    })
}

/// Coordinates `ĥ` on the core of `afg` at its own level `r`.
pub fn build_coordinates<S: Scalar>(afg: &AsymptoticallyFlatGraph<S>) -> Result<CoordinateMap> {
    coordinates(&afg.layered()?, afg.r)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HatEdge {
    pub u: String,
    pub v: String,
    pub hat_u: String,
    pub hat_v: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RotatedReport {
    pub i: usize,
    pub j: usize,
    pub sigma: i64,
    pub window: i64,
    pub level_set: i64,
    pub salami_vertices: usize,
    pub sides_agree: bool,
    /// `h' = Φ_i + σΦ_j` on the known grid part.
    pub agrees_outside_core: bool,
    /// Core vertices where `h' ≠ h_i + σh_j`.
    pub core_mismatches: usize,
}

/// A diagonal edge across which `h_i + σh_j` jumps by 2, with the jump of
/// the rotated extension `h'` that should equal it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DiagonalWitness {
    pub u: String,
    pub v: String,
    pub i: usize,
    pub j: usize,
    pub sigma: i64,
    pub h_prime_jump: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagonalReport {
    pub level: i64,
    /// Edges of `K̄` with `‖ĥ(x) − ĥ(y)‖₁ > 1`.
    pub diagonal_edges: Vec<HatEdge>,
    /// `ĥ` is 1-Lipschitz for `ℓ∞` on `K̄`.
    pub lipschitz: bool,
    pub rotated: Vec<RotatedReport>,
    pub witnesses: Vec<DiagonalWitness>,
    pub ok: bool,
}

/// Vertices of the core and their neighbours.
fn core_closure<S: Scalar>(l: &Layered<S>) -> Vec<bool> {
    let mut bar = vec![false; l.g.num_vertices()];
    for v in l.core() {
        bar[v.0] = true;
        for (u, _) in l.g.neighbors(v) {
            bar[u.0] = true;
        }
    }
    bar
}

fn hat_edges<S: Scalar>(l: &Layered<S>, cm: &CoordinateMap, bar: &[bool]) -> Vec<(VertexId, VertexId)> {
    let mut out = Vec::new();
    for u in l.g.vertices().filter(|u| bar[u.0]) {
        for (v, _) in l.g.neighbors(u) {
            if u < *v && bar[v.0] && cm.hat[u.0].is_some() && cm.hat[v.0].is_some() {
                out.push((u, *v));
            }
        }
    }
    out
}

fn rotated<S: Scalar>(
    l: &Layered<S>,
    cm: &CoordinateMap,
    s: i64,
    i: usize,
    j: usize,
    sigma: i64,
) -> Result<(RotatedReport, Vec<Option<i64>>)> {
    let big_r = 8 * s + 2;
    let t = 2 * s + 3;
    let psi = |p: &Point| p[i] + sigma * p[j];
    let mask: Vec<bool> = l
        .phi
        .iter()
        .map(|p| match p {
            None => true,
            Some(p) => {
                (p[i] - sigma * p[j]).abs() <= big_r
                    && p.iter().enumerate().all(|(k, c)| k == i || k == j || c.abs() <= big_r)
            }
        })
        .collect();
    let sub = induced(&l.g, &mask)?;
    let m = sub.g.num_vertices();
    let mut side_lo = vec![0i8; m];
    let mut side_hi = vec![0i8; m];
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for v in sub.g.vertices() {
        match l.phi[sub.of[v.0].0].as_ref().map(psi) {
            Some(c) if c < -t - 1 => side_lo[v.0] = -1,
            Some(c) if c <= -t + 1 => lo.push((v, c)),
            _ => side_lo[v.0] = 1,
        }
        match l.phi[sub.of[v.0].0].as_ref().map(psi) {
            Some(c) if c > t + 1 => side_hi[v.0] = 1,
            Some(c) if c >= t - 1 => hi.push((v, c)),
            _ => side_hi[v.0] = -1,
        }
    }
    let all = vec![true; m];
    let h_lo = extend_int(&sub.g, &all, &side_lo, &lo);
    let h_hi = extend_int(&sub.g, &all, &side_hi, &hi);
    let mut agrees = true;
    let mut mismatches = 0;
    let mut full = vec![None; l.g.num_vertices()];
    for v in sub.g.vertices() {
        let orig = sub.of[v.0];
        full[orig.0] = h_lo[v.0];
        match &l.phi[orig.0] {
            Some(p) => agrees &= h_lo[v.0] == Some(psi(p)),
            None => {
                if h_lo[v.0] != cm.hat[orig.0].as_ref().map(psi) {
                    mismatches += 1;
                }
            }
        }
    }
    Ok((
        RotatedReport {
            i,
            j,
            sigma,
            window: big_r,
            level_set: t,
            salami_vertices: m,
            sides_agree: h_lo == h_hi,
            agrees_outside_core: agrees,
            core_mismatches: mismatches,
        },
        full,
    ))
}

pub(crate) fn diagonals<S: Scalar>(l: &Layered<S>, cm: &CoordinateMap) -> Result<DiagonalReport> {
    let s = cm.level;
    let bar = core_closure(l);
    let edges = hat_edges(l, cm, &bar);
    let hat = |v: VertexId| cm.hat[v.0].as_ref().unwrap();
    let mut diagonal_edges = Vec::new();
    let mut lipschitz = true;
    for (u, v) in &edges {
        let (a, b) = (hat(*u), hat(*v));
        let l1: i64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
        let li = a.iter().zip(b).map(|(x, y)| (x - y).abs()).max().unwrap_or(0);
        lipschitz &= li <= 1;
        if l1 > 1 {
            diagonal_edges.push((*u, *v));
        }
    }
    let mut rot = Vec::new();
    let mut witnesses = Vec::new();
    for i in 0..l.n {
        for j in i + 1..l.n {
            for sigma in [1, -1] {
                let (rep, hp) = rotated(l, cm, s, i, j, sigma)?;
                for (u, v) in &diagonal_edges {
                    let (a, b) = (hat(*u), hat(*v));
                    let jump = (b[i] + sigma * b[j]) - (a[i] + sigma * a[j]);
                    if jump.abs() == 2 {
                        witnesses.push(DiagonalWitness {
                            u: l.g.label(*u).into(),
                            v: l.g.label(*v).into(),
                            i,
                            j,
                            sigma,
                            h_prime_jump: match (hp[u.0], hp[v.0]) {
                                (Some(x), Some(y)) => y - x,
                                _ => 0,
                            },
                        });
                    }
                }
                rot.push(rep);
            }
        }
    }
    let ok = diagonal_edges.is_empty()
        && lipschitz
        && rot.iter().all(|r| r.sides_agree && r.agrees_outside_core && r.core_mismatches == 0);
    Ok(DiagonalReport {
        level: s,
        diagonal_edges: diagonal_edges
            .into_iter()
            .map(|(u, v)| HatEdge {
                u: l.g.label(u).into(),
                v: l.g.label(v).into(),
                hat_u: fmt_point(hat(u)),
                hat_v: fmt_point(hat(v)),
            })
            .collect(),
        lipschitz,
        rotated: rot,
        witnesses,
        ok,
    })
}

pub fn diagonal_edge_report<S: Scalar>(afg: &AsymptoticallyFlatGraph<S>, cm: &CoordinateMap) -> Result<DiagonalReport> {
    diagonals(&afg.layered()?, cm)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Fibre {
    pub point: String,
    pub vertices: Vec<String>,
}

/// A vertex with no neighbour at `ĥ(v) + sign·e_axis`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CrossDefect {
    pub vertex: String,
    pub axis: usize,
    pub sign: i64,
}

/// The test function built on a fibre of multiplicity at least 2, with the
/// curvature bound it produces for the edge `u_j ~ v`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MultiplicityTest {
    pub point: String,
    pub vertex: String,
    pub j: usize,
    pub u_j: String,
    pub signs: Vec<i64>,
    pub lipschitz: bool,
    /// `Δf(u_j) − Δf(v)` with the actual measure.
    pub bound: String,
    /// `Σ_{i≠j} 2(w(v, u_i) − 1)`, the value of the bound when `m ≡ 1`.
    pub unit_measure_formula: String,
    pub kappa: String,
    pub bound_negative: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MultiplicityReport {
    pub level: i64,
    pub fibres: Vec<Fibre>,
    pub max_multiplicity: usize,
    pub empty_fibres: Vec<String>,
    pub cross_defects: Vec<CrossDefect>,
    pub tests: Vec<MultiplicityTest>,
    /// Fibres where no sign choice gave unique neighbours.
    pub untestable: Vec<String>,
    pub ok: bool,
}

pub(crate) fn multiplicity<S: Scalar>(l: &Layered<S>, cm: &CoordinateMap) -> Result<MultiplicityReport> {
    let s = cm.level;
    let n = l.n;
    let fib = cm.fibres();
    let get = |p: &Point| fib.get(p).map(Vec::as_slice).unwrap_or(&[]);
    let mut fibres = Vec::new();
    let mut empty = Vec::new();
    let mut max_mult = 0;
    for p in sphere_points(n, s) {
        let f = get(&p);
        max_mult = max_mult.max(f.len());
        if f.is_empty() {
            empty.push(fmt_point(&p));
        }
        fibres.push(Fibre {
            point: fmt_point(&p),
            vertices: f.iter().map(|v| l.g.label(*v).to_string()).collect(),
        });
    }

    let mut cross = Vec::new();
    for v in l.core() {
        let Some(h) = &cm.hat[v.0] else { continue };
        for axis in 0..n {
            for sign in [1, -1] {
                let target = shifted(h, axis, sign);
                let found = l.g.neighbors(v).iter().any(|(u, _)| cm.hat[u.0].as_ref() == Some(&target));
                if !found {
                    cross.push(CrossDefect {
                        vertex: l.g.label(v).into(),
                        axis,
                        sign,
                    });
                }
            }
        }
    }

    let mut tests = Vec::new();
    let mut untestable = Vec::new();
    for p in sphere_points(n, s) {
        let fibre = get(&p);
        if fibre.len() < 2 {
            continue;
        }
        let mut signs = Vec::with_capacity(n);
        for i in 0..n {
            let out = if p[i] > 0 { 1 } else { -1 };
            let pick = [out, -out].into_iter().find(|sg| get(&shifted(&p, i, *sg)).len() == 1);
            match pick {
                Some(sg) => signs.push(sg),
                None => break,
            }
        }
        if signs.len() < n {
            untestable.push(fmt_point(&p));
            continue;
        }
        let u: Vec<VertexId> = (0..n).map(|i| get(&shifted(&p, i, signs[i]))[0]).collect();
        for &vs in fibre {
            for j in 0..n {
                tests.push(step_test(l, &p, fibre, &u, &signs, vs, j, &get)?);
            }
        }
    }
    let ok = max_mult == 1 && empty.is_empty() && cross.is_empty();
    Ok(MultiplicityReport {
        level: s,
        fibres,
        max_multiplicity: max_mult,
        empty_fibres: empty,
        cross_defects: cross,
        tests,
        untestable,
        ok,
    })
}

#[allow(clippy::too_many_arguments)]
fn step_test<'a, S: Scalar>(
    l: &Layered<S>,
    p: &Point,
    fibre: &[VertexId],
    u: &[VertexId],
    signs: &[i64],
    vs: VertexId,
    j: usize,
    get: &impl Fn(&Point) -> &'a [VertexId],
) -> Result<MultiplicityTest> {
    let n = l.n;
    let mut f: HashMap<VertexId, i64> = HashMap::new();
    for v in fibre {
        f.insert(*v, 1);
    }
    for ui in u {
        f.entry(*ui).or_insert(0);
    }
    for i in 0..n {
        let val = if i == j { 2 } else { 0 };
        for z in get(&shifted(p, i, -signs[i])) {
            f.entry(*z).or_insert(val);
        }
    }
    for (z, _) in l.g.neighbors(u[j]) {
        f.entry(*z).or_insert(-1);
    }
    // anything else next to v keeps the value of v
    for (z, _) in l.g.neighbors(vs) {
        f.entry(*z).or_insert(1);
    }
    let pf = PotentialFunction::from_pairs(f.iter().map(|(v, x)| (*v, S::from_i64(*x))));
    let domain: BTreeSet<VertexId> = f.keys().copied().collect();
    let lipschitz = l.g.is_lipschitz_pairwise(&pf, &S::one(), &domain)?.holds;
    let bound = ollivier::gradient_of_laplacian(&l.g, u[j], vs, &pf)?;
    let two = S::from_i64(2);
    let formula: S = (0..n)
        .filter(|i| *i != j)
        .map(|i| two.clone() * (l.g.weight(vs, u[i]).cloned().unwrap_or_else(S::zero) - S::one()))
        .sum();
    let kappa = ollivier::edge_curvature(&l.g, u[j], vs)?.kappa;
    Ok(MultiplicityTest {
        point: fmt_point(p),
        vertex: l.g.label(vs).into(),
        j,
        u_j: l.g.label(u[j]).into(),
        signs: signs.to_vec(),
        lipschitz,
        bound_negative: bound.is_negative(),
        bound: bound.to_string(),
        unit_measure_formula: formula.to_string(),
        kappa: kappa.to_string(),
    })
}

pub fn multiplicity_and_cross_check<S: Scalar>(
    afg: &AsymptoticallyFlatGraph<S>,
    cm: &CoordinateMap,
) -> Result<MultiplicityReport> {
    multiplicity(&afg.layered()?, cm)
}

/// `ĥ` maps into `Q_s` on the core.
pub(crate) fn within_level(cm: &CoordinateMap) -> bool {
    cm.coords.values().all(|p| linf(p) <= cm.level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::parse_point_label;
    use crate::scalar::Rational;

    #[test]
    fn standard_core_gets_its_own_coordinates() {
        for (n, r) in [(2, 1), (2, 2), (3, 1)] {
            let rho = super::super::afg::required_rho(n, r);
            let afg = AsymptoticallyFlatGraph::<Rational>::standard(n, r, rho).unwrap();
            let cm = build_coordinates(&afg).unwrap();
            assert!(cm.ok, "{:?}", cm.axes);
            for (label, p) in &cm.coords {
                assert_eq!(&parse_point_label(label).unwrap(), p);
            }
            let d = diagonal_edge_report(&afg, &cm).unwrap();
            assert!(d.ok && d.witnesses.is_empty());
            assert_eq!(d.rotated.len(), n * (n - 1));
            let m = multiplicity_and_cross_check(&afg, &cm).unwrap();
            assert!(m.ok);
            assert_eq!(m.max_multiplicity, 1);
            assert!(within_level(&cm));
        }
    }
}
