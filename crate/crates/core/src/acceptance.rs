//! The acceptance suite: ten end-to-end checks, each returning a verdict and
//! a one-line summary. Shared by the `acceptance` test target and the CLI
//! `check` subcommand.

use std::collections::{BTreeSet, HashMap};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::graph::{GraphBuilder, PotentialFunction, VertexId, WeightedGraph};
use crate::grid::fields::{concave_profile_window, log_model_field, random_rational_window, schwarzschild_field};
use crate::grid::{
    abs_term, closed, cube_points, desk_rigidity, linf, mass_estimate, shell_sums, shifted, GridWindow, MassConfig,
    WeightProvider,
};
use crate::instances::{appendix1, appendix1_core, appendix2};
use crate::ollivier::{all_edge_curvatures, edge_curvature, scalar_curvature, CurvatureConfig};
use crate::par;
use crate::salami::afg::required_rho;
use crate::salami::{
    extremal_extension, harmonicity_propagation_check, rigidity_check, AsymptoticallyFlatGraph, RigidityConfig,
    SalamiPartition,
};
use crate::scalar::{ratio, Rational, Scalar};
use crate::torus::{build_torus, example_spec, total_scalar_curvature, TorusGraph, TorusSpec};

pub const DEFAULT_SEED: u64 = 20_240_601;

/// Criteria that fail as stated, with the reason.
pub const KNOWN_FAILURES: [(u8, &str); 1] = [(
    3,
    "the cube sum of R telescopes to the axial edges between the faces at ±r and ±(r−1), \
     not to E_r; the two agree only for r = 0 or when those weights coincide",
)];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub limit_seconds: Option<f64>,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2}. {} ({:.2}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.seconds,
            self.detail
        )
    }
}

type Check = fn(u64) -> Result<(bool, String)>;

pub const CRITERIA: [(u8, &str, Option<f64>, Check); 10] = [
    (1, "flat grid has zero curvature", Some(10.0), flat_grid),
    (2, "closed forms match brute force", Some(120.0), oracle_equivalence),
    (3, "cube summation identity", None, cube_identity),
    (4, "doubled-vertex examples", None, doubled_vertex_examples),
    (5, "Schwarzschild mass", Some(60.0), schwarzschild),
    (6, "two-dimensional log model", None, log_model),
    (7, "monotonicity and desk rigidity", None, desk_scale),
    (8, "torus total curvature", Some(120.0), torus_theorem),
    (9, "rigidity pipeline", Some(120.0), rigidity_pipeline),
    (10, "extremal extension properties", None, extension_properties),
];

/// Runs one criterion. Errors count as failures.
pub fn run_one(id: u8, seed: u64) -> Option<CriterionResult> {
    let (id, title, limit, check) = *CRITERIA.iter().find(|c| c.0 == id)?;
    let start = Instant::now();
    let outcome = check(seed.wrapping_add(id as u64));
    let seconds = start.elapsed().as_secs_f64();
    let (ok, detail) = match outcome {
        Ok(x) => x,
        Err(e) => (false, format!("error: {e}")),
    };
    let in_time = limit.is_none_or(|l| seconds < l);
    let detail = if in_time {
        detail
    } else {
        format!("{detail}; exceeded the {:.0}s limit", limit.unwrap())
    };
    Some(CriterionResult {
        id,
        title,
        passed: ok && in_time,
        detail,
        seconds,
        limit_seconds: limit,
    })
}

pub fn run_all(seed: u64) -> Vec<CriterionResult> {
    CRITERIA.iter().filter_map(|c| run_one(c.0, seed)).collect()
}

/// Brute-force `κ` of `x → x + σe_axis` in the materialised window.
fn brute_grid_kappa<S: Scalar>(g: &WeightedGraph<S>, gw: &GridWindow<S>, x: &[i64], axis: usize, sign: i64) -> Result<S> {
    Ok(edge_curvature(g, gw.vertex_id(x), gw.vertex_id(&shifted(x, axis, sign)))?.kappa)
}

fn brute_grid_scalar<S: Scalar>(g: &WeightedGraph<S>, gw: &GridWindow<S>, x: &[i64]) -> Result<S> {
    scalar_curvature(g, gw.vertex_id(x))
}

/// Flat windows: the region `Q_4` inside `Q_6`, so every stencil is whole.
fn flat_grid(_seed: u64) -> Result<(bool, String)> {
    let mut checked = (0, 0);
    let mut bad = 0;
    for n in [2, 3] {
        let gw = GridWindow::<Rational>::standard(n, 6)?;
        let g = gw.to_graph()?;
        let pts = cube_points(n, 4);
        let res = par::try_map(&pts, |x| {
            let mut nonzero = 0;
            for axis in 0..n {
                if x[axis] < 4 {
                    let b = brute_grid_kappa(&g, &gw, x, axis, 1)?;
                    let c = closed::kappa_grid(&gw, x, axis, 1)?;
                    nonzero += usize::from(b != Rational::zero() || c != Rational::zero());
                }
            }
            let r_b = brute_grid_scalar(&g, &gw, x)?;
            let r_c = closed::scalar_grid(&gw, x)?;
            nonzero += usize::from(r_b != Rational::zero() || r_c != Rational::zero());
            Ok::<_, crate::Error>(nonzero)
        })?;
        bad += res.iter().sum::<usize>();
        checked.0 += pts.len();
        checked.1 += pts.len() * n - n * (9usize).pow(n as u32 - 1);
    }
    Ok((
        bad == 0,
        format!("{} vertices and {} edges of Q_4 (n=2,3), {bad} nonzero", checked.0, checked.1),
    ))
}

fn random_windows(seed: u64) -> Result<Vec<GridWindow<Rational>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for i in 0..200 {
        let n = if i % 2 == 0 { 2 } else { 3 };
        out.push(random_rational_window(n, 6, &mut rng)?);
    }
    Ok(out)
}

fn oracle_equivalence(seed: u64) -> Result<(bool, String)> {
    let windows = random_windows(seed)?;
    let mut edges = 0usize;
    let mut vertices = 0usize;
    let mut mismatches = 0usize;
    for gw in &windows {
        let g = gw.to_graph()?;
        let n = gw.n();
        // interior edges in canonical orientation, and the vertices whose
        // stencil is whole
        let pts = cube_points(n, gw.rho());
        let per_point = par::try_map(&pts, |x| {
            let mut count = (0usize, 0usize, 0usize);
            let mut kappas = HashMap::new();
            for axis in 0..n {
                for sign in [1, -1] {
                    if closed::kappa_stencil_inside(gw, x, axis, sign) {
                        let b = brute_grid_kappa(&g, gw, x, axis, sign)?;
                        let c = closed::kappa_grid(gw, x, axis, sign)?;
                        if sign > 0 {
                            count.0 += 1;
                        }
                        count.2 += usize::from(b != c);
                        kappas.insert((axis, sign), b);
                    }
                }
            }
            if closed::scalar_stencil_inside(gw, x) {
                count.1 += 1;
                let brute: Rational = kappas.values().cloned().sum();
                count.2 += usize::from(brute != closed::scalar_grid(gw, x)?);
            }
            Ok::<_, crate::Error>(count)
        })?;
        for (e, v, m) in per_point {
            edges += e;
            vertices += v;
            mismatches += m;
        }
    }
    Ok((
        mismatches == 0,
        format!(
            "{} windows, {edges} interior edges, {vertices} interior vertices, {mismatches} mismatches",
            windows.len()
        ),
    ))
}

fn cube_identity(seed: u64) -> Result<(bool, String)> {
    // same windows as the oracle check
    let windows = random_windows(seed.wrapping_sub(1))?;
    let mut failures = 0;
    let mut explained = 0;
    let mut inner_failures = 0;
    let mut brute_mismatch = 0;
    for gw in &windows {
        let g = gw.to_graph()?;
        let pts = cube_points(gw.n(), 4);
        let brute: Vec<Rational> = par::try_map(&pts, |x| brute_grid_scalar(&g, gw, x))?;
        for r in 0..=4 {
            let s = shell_sums(gw, r)?;
            let defect = s.defect();
            if defect != Rational::zero() {
                failures += 1;
                explained += usize::from(defect == s.sum_inner_e_r.clone() - s.sum_e_r.clone());
            }
            inner_failures += usize::from(s.inner_defect() != Rational::zero());
            let direct: Rational = pts.iter().zip(&brute).filter(|(x, _)| linf(x) <= r).map(|(_, v)| v.clone()).sum();
            brute_mismatch += usize::from(direct != s.sum_r_q_r);
        }
    }
    let total = windows.len() * 5;
    Ok((
        failures == 0 && brute_mismatch == 0,
        format!(
            "{total} (window, r) pairs with r=0..4: identity with E_r fails on {failures} \
             ({explained} of them equal to Σ_inner w − Σ_E_r w); with the inner face edges in place of E_r it fails on \
             {inner_failures}; {brute_mismatch} cube sums differ from brute force"
        ),
    ))
}

fn doubled_vertex_examples(_seed: u64) -> Result<(bool, String)> {
    let g1 = appendix1();
    let ks = all_edge_curvatures(&g1, &CurvatureConfig::default())?;
    let (a, b) = (g1.vertex("a")?, g1.vertex("b")?);
    let mut ab = None;
    let mut others_nonzero = 0;
    for ((u, v), k) in &ks {
        if (*u, *v) == (a.min(b), a.max(b)) {
            ab = Some(k.clone());
        } else if *k != Rational::zero() {
            others_nonzero += 1;
        }
    }
    let weighted = g1.has_vertex_weights();
    let g2 = appendix2();
    let ks2 = all_edge_curvatures(&g2, &CurvatureConfig::default())?;
    let flat2 = ks2.iter().all(|(_, k)| *k == Rational::zero());
    let ok = ab == Some(Rational::from_i64(5)) && others_nonzero == 0 && weighted && flat2;
    Ok((
        ok,
        format!(
            "κ(a,b) = {}, {others_nonzero} of {} other edges nonzero, vertex weights used: {weighted}; cycle: {} edges, all zero: {flat2}",
            ab.map_or("missing".into(), |k| k.to_string()),
            ks.len() - 1,
            ks2.len()
        ),
    ))
}

fn schwarzschild(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_rel: f64 = 0.0;
    let mut abs_nonzero = 0;
    let mut far_nonnegative = 0;
    let mut parts = Vec::new();
    for m in [0.5, 1.0, 2.0] {
        let gw = GridWindow::new(3, 52, schwarzschild_field(3, m)?)?;
        let est = mass_estimate(&gw, 50, &MassConfig::default())?;
        let value = est.value.unwrap_or(f64::NAN);
        let rel = ((value - m) / m).abs();
        worst_rel = if rel.is_nan() { f64::INFINITY } else { worst_rel.max(rel) };
        parts.push(format!("m={m}: M_50={:.4}, extrapolated {value:.4}", est.last_partial));
        for _ in 0..100 {
            let x: Vec<i64> = (0..3).map(|_| rng.gen_range(-48..=48)).collect();
            if abs_term(&gw, &x)?.abs() > 1e-12 {
                abs_nonzero += 1;
            }
        }
        for _ in 0..20 {
            let x: Vec<i64> = (0..3).map(|_| rng.gen_range(10..=48)).collect();
            if closed::scalar_grid(&gw, &x)? >= 0.0 {
                far_nonnegative += 1;
            }
        }
    }
    Ok((
        worst_rel < 0.02 && abs_nonzero == 0 && far_nonnegative == 0,
        format!(
            "{}; worst relative error {:.3}%, Abs≠0 at {abs_nonzero}/300 samples, R≥0 at {far_nonnegative}/60 far samples",
            parts.join("; "),
            100.0 * worst_rel
        ),
    ))
}

fn log_model(_seed: u64) -> Result<(bool, String)> {
    let m = 0.01;
    let gw = GridWindow::new(2, 102, log_model_field(m, 102)?)?;
    let est = mass_estimate(&gw, 100, &MassConfig::default())?;
    let mut worst: f64 = 0.0;
    for p in est.partial.iter().filter(|p| p.r >= 1) {
        let r = p.r as f64;
        let expect = 4.0 * (2.0 * r + 1.0) * m * (1.0 + 1.0 / r).ln();
        worst = worst.max((p.gap - expect).abs());
    }
    let m100 = est.partial[100].m_r;
    let rel = ((m100 - m) / m).abs();
    Ok((
        worst <= 1e-9 && rel < 0.01,
        format!("max gap error {worst:.2e} over r=1..100, M_100 = {m100:.6} ({:.3}% from m)", 100.0 * rel),
    ))
}

/// Adds `delta` to `k` random window edges with an endpoint in `Q_{reach}`.
fn perturbed<R: Rng>(gw: &GridWindow<Rational>, reach: i64, k: usize, delta: &Rational, rng: &mut R) -> Result<GridWindow<Rational>> {
    let edges: Vec<_> = gw
        .edges()
        .into_iter()
        .filter(|(x, a)| linf(x).min(linf(&shifted(x, *a, 1))) <= reach)
        .collect();
    let mut weights: HashMap<_, _> = gw.edges().into_iter().map(|e| {
        let w = gw.weight(&e.0, e.1).unwrap();
        (e, w)
    }).collect();
    for e in edges.choose_multiple(rng, k) {
        let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
        let w = weights[e].clone() + Rational::from_i64(sign) * delta.clone();
        if w.is_positive() {
            weights.insert(e.clone(), w);
        }
    }
    GridWindow::new(gw.n(), gw.rho(), WeightProvider::Table { weights, default: None })
}

fn desk_scale(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, rho, r_max) = (2, 6, 4);
    let mut monotone_fail = 0;
    let mut rigidity_checked = 0;
    let mut rigidity_fail = 0;
    let mut positive_mass = 0;
    let mut rejected = (0, 0);
    let mut standard_fallbacks = 0;
    for i in 0..50 {
        let sample = if i % 2 == 0 {
            // concave profile has R = 4nε > 0, leaving room for perturbation
            let base = concave_profile_window(n, rho, &ratio(1, 50))?;
            let mut accepted = None;
            for _ in 0..50 {
                let cand = perturbed(&base, r_max + 1, 3, &ratio(1, 200), &mut rng)?;
                if desk_rigidity(&cand, r_max)?.scalar_nonnegative {
                    accepted = Some(cand);
                    break;
                }
                rejected.0 += 1;
            }
            accepted.unwrap_or(base)
        } else {
            // any perturbation of the standard grid inside Q_{r_max} should be
            // rejected: R ≥ 0 with trivial outer weights forces w ≡ 1
            let base = GridWindow::<Rational>::standard(n, rho)?;
            let mut accepted = None;
            for _ in 0..20 {
                let k = rng.gen_range(1..=4);
                let cand = perturbed(&base, r_max - 1, k, &ratio(1, 4), &mut rng)?;
                if desk_rigidity(&cand, r_max)?.scalar_nonnegative {
                    accepted = Some(cand);
                    break;
                }
                rejected.1 += 1;
            }
            accepted.unwrap_or_else(|| {
                standard_fallbacks += 1;
                base
            })
        };
        let rep = desk_rigidity(&sample, r_max)?;
        monotone_fail += usize::from(!(rep.scalar_nonnegative && rep.monotone));
        if rep.mass_vanishes && rep.outer_trivial {
            rigidity_checked += 1;
            rigidity_fail += usize::from(rep.rigidity_confirmed != Some(true));
        } else if rep.partial_sums.last().is_some_and(|s| s.is_positive()) {
            positive_mass += 1;
        }
    }
    Ok((
        monotone_fail == 0 && rigidity_fail == 0 && rigidity_checked > 0,
        format!(
            "50 windows with R≥0: {monotone_fail} non-monotone; {rigidity_checked} with vanishing mass and trivial outer weights, {rigidity_fail} not w≡1; {positive_mass} with positive partial sum; rejected perturbations: {} concave, {} standard ({standard_fallbacks} standard samples kept unperturbed)",
            rejected.0, rejected.1
        ),
    ))
}

#[derive(Default)]
struct TorusTally {
    samples: usize,
    positive_total: usize,
    identity_fail: usize,
    abs_identity_fail: usize,
    cycle_positive: usize,
    nonneg_not_flat: usize,
    nonneg: usize,
}

fn torus_samples<R: Rng>(spec: &TorusSpec, count: usize, axial: bool, rng: &mut R) -> Result<Vec<TorusGraph<Rational>>> {
    let mut out = Vec::new();
    for s in 0..count {
        let mut t = build_torus::<Rational>(spec.clone(), None)?;
        match s % 4 {
            0 | 1 => t.randomize_weights(rng),
            2 => {
                // constant in each direction
                let ws: Vec<Rational> = (0..t.n()).map(|_| ratio(rng.gen_range(1..=8), rng.gen_range(1..=4))).collect();
                for (c, i) in t.edges() {
                    t.set_weight(c, i, ws[i].clone())?;
                }
            }
            _ if axial => {
                // weight depends on the coordinate along its own direction
                let k = spec.k;
                let seqs: Vec<Vec<Rational>> = (0..t.n())
                    .map(|_| (0..k).map(|_| ratio(rng.gen_range(1..=8), rng.gen_range(1..=4))).collect())
                    .collect();
                for (c, i) in t.edges() {
                    let xi = t.representative(c)[i].rem_euclid(k) as usize;
                    t.set_weight(c, i, seqs[i][xi].clone())?;
                }
            }
            _ => {
                // one perturbed edge on the unit torus
                let edges = t.edges();
                let (c, i) = edges[rng.gen_range(0..edges.len())];
                t.set_weight(c, i, ratio([1, 3, 5, 6][rng.gen_range(0..4)], 4))?;
            }
        }
        out.push(t);
    }
    Ok(out)
}

fn torus_theorem(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let configs: Vec<(TorusSpec, usize, bool)> = vec![
        (TorusSpec::identity(2, 6)?, 28, true),
        (TorusSpec::identity(2, 7)?, 28, true),
        (TorusSpec::identity(3, 6)?, 12, true),
        (example_spec(3), 20, false),
        (example_spec(4), 20, false),
        (TorusSpec::identity(2, 5)?, 16, true),
    ];
    let mut inside = TorusTally::default();
    let mut outside = TorusTally::default();
    for (spec, count, axial) in configs {
        for t in torus_samples(&spec, count, axial, &mut rng)? {
            let c = total_scalar_curvature(&t, 0.0)?;
            let tally = if c.local_condition.holds { &mut inside } else { &mut outside };
            tally.samples += 1;
            tally.positive_total += usize::from(!c.nonpositive);
            tally.identity_fail += usize::from(!c.identity_holds);
            tally.abs_identity_fail += usize::from(c.total != -Rational::from_i64(2) * c.abs_sum.clone());
            tally.cycle_positive += usize::from(c.directions.iter().any(|d| !d.max_cycle_sum_nonpositive));
            tally.nonneg += usize::from(c.scalar_nonnegative);
            tally.nonneg_not_flat += usize::from(c.scalar_nonnegative && !c.scalar_flat);
        }
    }
    let ok = inside.samples >= 100
        && inside.positive_total == 0
        && inside.identity_fail == 0
        && inside.abs_identity_fail == 0
        && inside.cycle_positive == 0
        && inside.nonneg_not_flat == 0;
    Ok((
        ok,
        format!(
            "{} tori satisfying the distance hypothesis: {} positive totals, {} decomposition failures, {} positive cycle sums, {} with R≥0 of which {} not flat; {} tori outside it (identity k=5, brute force): {} positive totals",
            inside.samples,
            inside.positive_total,
            inside.identity_fail + inside.abs_identity_fail,
            inside.cycle_positive,
            inside.nonneg,
            inside.nonneg_not_flat,
            outside.samples,
            outside.positive_total
        ),
    ))
}

fn rigidity_pipeline(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = RigidityConfig::default();
    let mut parts = Vec::new();
    let mut ok = true;
    for (n, r) in [(2, 1), (2, 2), (3, 1)] {
        let afg = AsymptoticallyFlatGraph::<Rational>::standard(n, r, required_rho(n, r))?.disguised(&mut rng)?;
        let out = rigidity_check(&afg, &cfg)?;
        ok &= out.is_standard_grid;
        parts.push(format!("relabeled n={n} r={r}: {}", out.is_standard_grid));
    }
    let afg = appendix1_core(1, required_rho(2, 1))?.disguised(&mut rng)?;
    let out = rigidity_check(&afg, &cfg)?;
    ok &= !out.is_standard_grid && out.failed_stage.as_deref() == Some("multiplicity");
    parts.push(format!(
        "doubled vertex: {} at {} (level {})",
        out.is_standard_grid,
        out.failed_stage.unwrap_or_default(),
        out.failed_level.unwrap_or(-1)
    ));
    let base = AsymptoticallyFlatGraph::<Rational>::standard(2, 1, required_rho(2, 1))?;
    let afg = base.with_core_weight("0,0", "1,0", ratio(2, 1))?;
    let out = rigidity_check(&afg, &cfg)?;
    ok &= !out.is_standard_grid && out.failed_stage.as_deref() == Some("curvature-certificate");
    parts.push(format!(
        "perturbed edge: {} at {}",
        out.is_standard_grid,
        out.failed_stage.unwrap_or_default()
    ));
    Ok((ok, parts.join("; ")))
}

/// A grid slab `[−l, l] × [−w, w]^{n−1}` as a graph with its coordinates.
fn slab(n: usize, l: i64, w: i64) -> Result<(WeightedGraph<Rational>, Vec<Vec<i64>>)> {
    let mut pts = vec![vec![]];
    for axis in 0..n {
        let bound = if axis == 0 { l } else { w };
        pts = pts
            .into_iter()
            .flat_map(|p: Vec<i64>| {
                (-bound..=bound).map(move |c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    let mut b = GraphBuilder::new();
    let mut ids = HashMap::new();
    for p in &pts {
        ids.insert(p.clone(), b.add_vertex(crate::grid::point_label(p))?);
    }
    for p in &pts {
        for axis in 0..n {
            if let Some(q) = ids.get(&shifted(p, axis, 1)) {
                b.add_edge(ids[p], *q, Rational::one())?;
            }
        }
    }
    Ok((b.build()?, pts))
}

#[derive(Default)]
struct ExtensionTally {
    samples: usize,
    not_lipschitz: usize,
    restriction_fail: usize,
    applicable: usize,
    holds: usize,
    violated: usize,
    artifacts: usize,
    not_harmonic: usize,
}

fn extension_properties(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = ExtensionTally::default();
    for i in 0..100 {
        let n = if rng.gen_bool(0.7) { 2 } else { 3 };
        let l = rng.gen_range(4..=7);
        let w = if n == 2 { rng.gen_range(1..=3) } else { rng.gen_range(1..=2) };
        let (g, pts) = slab(n, l, w)?;
        // every 50th sample puts the separator next to the cut end
        let near_end = i % 50 == 49;
        let t0 = if near_end { l - 1 } else { rng.gen_range(-(l - 3)..=(l - 3)) };
        let jagged = !near_end && rng.gen_bool(0.5);
        let bump: HashMap<Vec<i64>, i64> = pts
            .iter()
            .map(|p| (p[1..].to_vec(), if jagged { rng.gen_range(0..=1) } else { 0 }))
            .collect();
        let sep = |p: &[i64]| t0 + bump[&p[1..]];
        let (mut xs, mut ys, mut ks) = (BTreeSet::new(), BTreeSet::new(), BTreeSet::new());
        let mut cut = BTreeSet::new();
        for (v, p) in pts.iter().enumerate() {
            let v = VertexId(v);
            match p[0].cmp(&sep(p)) {
                std::cmp::Ordering::Less => xs.insert(v),
                std::cmp::Ordering::Greater => ys.insert(v),
                std::cmp::Ordering::Equal => ks.insert(v),
            };
            if p[0].abs() == l {
                cut.insert(v);
            }
        }
        let part = SalamiPartition::new(&g, xs, ys, ks)?;
        // f: constant, affine in a transverse coordinate, or a minimum of cones
        let f: PotentialFunction<Rational> = match rng.gen_range(0..3) {
            0 => {
                let c = ratio(rng.gen_range(-4..=4), rng.gen_range(1..=3));
                PotentialFunction::from_pairs(part.k.iter().map(|v| (*v, c.clone())))
            }
            1 => {
                let axis = rng.gen_range(1..n);
                let slope = ratio(rng.gen_range(-2..=2), 2);
                PotentialFunction::from_pairs(
                    part.k.iter().map(|v| (*v, slope.clone() * Rational::from_i64(pts[v.0][axis]))),
                )
            }
            _ => {
                let ks: Vec<VertexId> = part.k.iter().copied().collect();
                let centres: Vec<(VertexId, i64)> =
                    (0..3).map(|_| (ks[rng.gen_range(0..ks.len())], rng.gen_range(-2..=2))).collect();
                let dists: Vec<Vec<u32>> = centres.iter().map(|(c, _)| g.bfs(*c, None)).collect();
                PotentialFunction::from_pairs(ks.iter().map(|v| {
                    let m = centres.iter().zip(&dists).map(|((_, a), d)| a + d[v.0] as i64).min().unwrap();
                    (*v, Rational::from_i64(m))
                }))
            }
        };
        t.samples += 1;
        let sf = match extremal_extension(&g, &part, &f) {
            Ok(sf) => sf,
            Err(_) => {
                t.not_lipschitz += 1;
                continue;
            }
        };
        let all: BTreeSet<VertexId> = g.vertices().collect();
        if !g.is_lipschitz(&sf, &Rational::one(), &all)?.holds {
            t.not_lipschitz += 1;
        }
        if part.k.iter().any(|v| sf.get(*v) != f.get(*v)) {
            t.restriction_fail += 1;
        }
        let rep = harmonicity_propagation_check(&g, &part, &f, &cut, 0.0)?;
        if rep.truncation_artifact {
            t.artifacts += 1;
        } else if !rep.harmonic_on_k {
            t.not_harmonic += 1;
        } else {
            t.applicable += 1;
            match rep.holds {
                Some(true) => t.holds += 1,
                _ => t.violated += 1,
            }
        }
    }
    let ok = t.not_lipschitz == 0
        && t.restriction_fail == 0
        && t.violated == 0
        && t.applicable > 0
        && (t.artifacts as f64) < 0.05 * t.samples as f64;
    Ok((
        ok,
        format!(
            "{} samples: {} not 1-Lipschitz, {} restriction failures; propagation held in {}/{} cases harmonic on K; {} not harmonic on K; {} truncation artifacts counted separately",
            t.samples, t.not_lipschitz, t.restriction_fail, t.holds, t.applicable, t.not_harmonic, t.artifacts
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slab_shape() {
        let (g, pts) = slab(2, 3, 1).unwrap();
        assert_eq!(g.num_vertices(), 21);
        assert_eq!(pts.len(), 21);
        assert_eq!(g.num_edges(), 6 * 3 + 7 * 2);
    }

    #[test]
    fn unknown_criterion() {
        assert!(run_one(11, 0).is_none());
    }
}
