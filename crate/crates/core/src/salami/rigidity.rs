//! Layer-by-layer rigidity check: starting from the outside, identify the
//! vertices over `S_s` for `s = r, r−1, …, 0` and verify the weights there.

use std::collections::BTreeSet;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::graph::VertexId;
use crate::grid::{closed, fmt_point, linf, Point};
use crate::ollivier::{self, CurvatureConfig};
use crate::par;
use crate::scalar::Scalar;

use super::afg::{required_rho, AsymptoticallyFlatGraph, Layered};
use super::coords::{coordinates, diagonals, multiplicity, within_level};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RigidityConfig {
    /// Verify `κ ≥ 0` on the window before running the pipeline.
    pub curvature_certificate: bool,
    /// Edges within this distance of the core are checked by brute force,
    /// the rest of the grid by the closed form.
    pub brute_force_radius: u32,
    pub curvature: CurvatureConfig,
}

impl Default for RigidityConfig {
    fn default() -> Self {
        RigidityConfig {
            curvature_certificate: true,
            brute_force_radius: 3,
            curvature: CurvatureConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageReport {
    pub stage: String,
    pub level: Option<i64>,
    pub passed: bool,
    pub details: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RigidityOutcome {
    pub is_standard_grid: bool,
    pub failed_stage: Option<String>,
    pub failed_level: Option<i64>,
    pub reason: Option<String>,
    pub notes: Vec<String>,
    pub stages: Vec<StageReport>,
}

struct Run {
    stages: Vec<StageReport>,
    notes: Vec<String>,
}

impl Run {
    fn push(&mut self, stage: &str, level: Option<i64>, passed: bool, details: Value) -> bool {
        self.stages.push(StageReport {
            stage: stage.into(),
            level,
            passed,
            details,
        });
        passed
    }

    fn fail(self, reason: String) -> RigidityOutcome {
        let last = self.stages.last();
        RigidityOutcome {
            is_standard_grid: false,
            failed_stage: last.map(|s| s.stage.clone()),
            failed_level: last.and_then(|s| s.level),
            reason: Some(reason),
            notes: self.notes,
            stages: self.stages,
        }
    }
}

fn certificate<S: Scalar>(
    afg: &AsymptoticallyFlatGraph<S>,
    l: &Layered<S>,
    config: &RigidityConfig,
) -> Result<(bool, Value)> {
    let core = l.core();
    let near = l.g.multi_source_bfs(core.iter().copied(), None, Some(config.brute_force_radius));
    let is_near = |v: VertexId| near[v.0] <= config.brute_force_radius;
    let mut brute = Vec::new();
    let mut closed_form: Vec<(Point, usize, i64)> = Vec::new();
    let mut truncated = 0usize;
    for (u, v) in l.g.edges() {
        if is_near(u) || is_near(v) {
            brute.push((u, v));
            continue;
        }
        let (p, q) = (l.phi[u.0].as_ref().unwrap(), l.phi[v.0].as_ref().unwrap());
        let axis = (0..l.n).find(|i| p[*i] != q[*i]).unwrap();
        let sign = q[axis] - p[axis];
        if closed::kappa_stencil_inside(&afg.outer, p, axis, sign) {
            closed_form.push((p.clone(), axis, sign));
        } else {
            truncated += 1;
        }
    }
    let kb = par::try_map(&brute, |(u, v)| {
        ollivier::edge_curvature_with(&l.g, *u, *v, &config.curvature).map(|c| c.kappa)
    })?;
    let kc = par::try_map(&closed_form, |(p, axis, sign)| closed::kappa_grid(&afg.outer, p, *axis, *sign))?;
    let worst = brute
        .iter()
        .zip(&kb)
        .filter(|(_, k)| k.is_negative())
        .map(|((u, v), k)| json!({"u": l.g.label(*u), "v": l.g.label(*v), "kappa": k.to_json()}))
        .chain(
            closed_form
                .iter()
                .zip(&kc)
                .filter(|(_, k)| k.is_negative())
                .map(|((p, a, s), k)| json!({"x": p, "axis": a, "sign": s, "kappa": k.to_json()})),
        )
        .take(10)
        .collect::<Vec<_>>();
    let min = kb.iter().chain(&kc).cloned().reduce(|a, b| if b < a { b } else { a });
    Ok((
        worst.is_empty(),
        json!({
            "brute_force_edges": brute.len(),
            "closed_form_edges": closed_form.len(),
            "truncated_edges": truncated,
            "min_kappa": min.map(|k| k.to_json()),
            "negative": worst,
        }),
    ))
}

fn outer_weights<S: Scalar>(l: &Layered<S>) -> (bool, Value) {
    let mut bad = Vec::new();
    let mut count = 0;
    for (u, v) in l.g.edges() {
        if l.phi[u.0].is_some() && l.phi[v.0].is_some() {
            count += 1;
            let w = l.g.weight(u, v).unwrap();
            if *w != S::one() && bad.len() < 10 {
                bad.push(json!({"u": l.g.label(u), "v": l.g.label(v), "w": w.to_json()}));
            }
        }
    }
    (bad.is_empty(), json!({"edges": count, "non_unit": bad}))
}

/// Weights stage: the vertices over `S_s` become known grid points.
fn identify<S: Scalar>(l: &mut Layered<S>, hat: &[Option<Point>], s: i64) -> (bool, Value) {
    let new: Vec<VertexId> = l
        .core()
        .into_iter()
        .filter(|v| hat[v.0].as_ref().is_some_and(|p| linf(p) == s))
        .collect();
    let new_set: BTreeSet<VertexId> = new.iter().copied().collect();
    let known = |v: VertexId| l.phi[v.0].is_some() || new_set.contains(&v);
    let mut defects = Vec::new();
    for &v in &new {
        if *l.g.vertex_weight(v) != S::one() {
            defects.push(json!({"vertex": l.g.label(v), "vertex_weight": l.g.vertex_weight(v).to_json()}));
        }
        let p = hat[v.0].as_ref().unwrap();
        for (u, w) in l.g.neighbors(v) {
            if !known(*u) {
                continue;
            }
            let q = hat[u.0].as_ref().unwrap();
            let l1: i64 = p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum();
            if l1 != 1 || *w != S::one() {
                defects.push(json!({
                    "u": l.g.label(v), "v": l.g.label(*u),
                    "hat_u": fmt_point(p), "hat_v": fmt_point(q), "w": w.to_json(),
                }));
            }
        }
    }
    // the rest of the core must not see beyond S_s
    for v in l.core().into_iter().filter(|v| !new_set.contains(v)) {
        for (u, _) in l.g.neighbors(v) {
            if let Some(q) = &l.phi[u.0] {
                if linf(q) > s {
                    defects.push(json!({"inner": l.g.label(v), "touches": l.g.label(*u)}));
                }
            }
        }
    }
    let ok = defects.is_empty();
    if ok {
        for &v in &new {
            l.phi[v.0] = hat[v.0].clone();
        }
    }
    defects.truncate(20);
    (ok, json!({"identified": new.len(), "defects": defects}))
}

fn standard_grid<S: Scalar>(l: &Layered<S>) -> (bool, Value) {
    let core_left = l.core().len();
    let unit_vertices = l.g.vertices().all(|v| *l.g.vertex_weight(v) == S::one());
    let mut non_grid = 0;
    for (u, v) in l.g.edges() {
        match (&l.phi[u.0], &l.phi[v.0]) {
            (Some(p), Some(q)) => {
                let l1: i64 = p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum();
                if l1 != 1 || *l.g.weight(u, v).unwrap() != S::one() {
                    non_grid += 1;
                }
            }
            _ => non_grid += 1,
        }
    }
    let side = (2 * l.rho + 1) as usize;
    let expected_edges = l.n * (side - 1) * side.pow(l.n as u32 - 1);
    let ok = core_left == 0
        && unit_vertices
        && non_grid == 0
        && l.g.num_edges() == expected_edges
        && l.g.num_vertices() == side.pow(l.n as u32);
    (
        ok,
        json!({
            "unidentified": core_left,
            "unit_vertex_weights": unit_vertices,
            "non_grid_edges": non_grid,
            "edges": l.g.num_edges(),
            "expected_edges": expected_edges,
        }),
    )
}

/// Runs the pipeline on `afg`. Returns `is_standard_grid = true` only when
/// every layer was identified with unit weights.
pub fn rigidity_check<S: Scalar>(afg: &AsymptoticallyFlatGraph<S>, config: &RigidityConfig) -> Result<RigidityOutcome> {
    let need = required_rho(afg.n, afg.r);
    if afg.rho < need {
        return Err(Error::WindowTooSmall { need, have: afg.rho });
    }
    let mut l = afg.layered()?;
    let mut run = Run {
        stages: Vec::new(),
        notes: Vec::new(),
    };
    if afg.core.has_vertex_weights() {
        run.notes.push(
            "the core carries non-unit vertex weights; the multiplicity test is evaluated with the actual measure"
                .into(),
        );
    }

    if config.curvature_certificate {
        let (ok, details) = certificate(afg, &l, config)?;
        if !run.push("curvature-certificate", None, ok, details) {
            return Ok(run.fail("negative curvature inside the window".into()));
        }
    }
    let (ok, details) = outer_weights(&l);
    if !run.push("outer-weights", None, ok, details) {
        return Ok(run.fail("grid edges outside the core are not all of weight 1".into()));
    }

    for s in (0..=afg.r).rev() {
        let cm = coordinates(&l, s)?;
        let ok = cm.ok && within_level(&cm);
        if !run.push("coordinates", Some(s), ok, serde_json::to_value(&cm)?) {
            return Ok(run.fail(format!("salami coordinates are inconsistent at level {s}")));
        }
        let d = diagonals(&l, &cm)?;
        if !run.push("diagonals", Some(s), d.ok, serde_json::to_value(&d)?) {
            return Ok(run.fail(format!("{} diagonal edges at level {s}", d.diagonal_edges.len())));
        }
        let m = multiplicity(&l, &cm)?;
        let reason = if m.max_multiplicity > 1 {
            format!("a fibre over S_{s} has {} vertices", m.max_multiplicity)
        } else if !m.empty_fibres.is_empty() {
            format!("{} points of S_{s} have empty fibres", m.empty_fibres.len())
        } else {
            format!("{} cross-structure defects at level {s}", m.cross_defects.len())
        };
        if !run.push("multiplicity", Some(s), m.ok, serde_json::to_value(&m)?) {
            return Ok(run.fail(reason));
        }
        let (ok, details) = identify(&mut l, &cm.hat, s);
        if !run.push("weights", Some(s), ok, details) {
            return Ok(run.fail(format!("non-unit weights or stray edges at level {s}")));
        }
    }
    let (ok, details) = standard_grid(&l);
    if !run.push("standard-grid", None, ok, details) {
        return Ok(run.fail("the identified graph is not the standard grid".into()));
    }
    Ok(RigidityOutcome {
        is_standard_grid: true,
        failed_stage: None,
        failed_level: None,
        reason: None,
        notes: run.notes,
        stages: run.stages,
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::scalar::{ratio, Rational};

    #[test]
    fn standard_and_disguised_grids_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (n, r) in [(2, 0), (2, 1), (2, 2), (3, 1)] {
            let afg = AsymptoticallyFlatGraph::<Rational>::standard(n, r, required_rho(n, r)).unwrap();
            let out = rigidity_check(&afg, &RigidityConfig::default()).unwrap();
            assert!(out.is_standard_grid, "{n} {r}: {:?} {:?}", out.failed_stage, out.reason);
            let out = rigidity_check(&afg.disguised(&mut rng).unwrap(), &RigidityConfig::default()).unwrap();
            assert!(out.is_standard_grid);
        }
    }

    #[test]
    fn perturbed_core_weight_fails_the_certificate() {
        let afg = AsymptoticallyFlatGraph::<Rational>::standard(2, 1, 8)
            .unwrap()
            .with_core_weight("0,0", "1,0", ratio(2, 1))
            .unwrap();
        let out = rigidity_check(&afg, &RigidityConfig::default()).unwrap();
        assert!(!out.is_standard_grid);
        assert_eq!(out.failed_stage.as_deref(), Some("curvature-certificate"));
        // without the certificate the pipeline still rejects it
        let cfg = RigidityConfig {
            curvature_certificate: false,
            ..RigidityConfig::default()
        };
        let out = rigidity_check(&afg, &cfg).unwrap();
        assert!(!out.is_standard_grid);
    }

    #[test]
    fn small_window_is_an_error() {
        let afg = AsymptoticallyFlatGraph::<Rational>::standard(2, 1, 6).unwrap();
        assert!(matches!(
            rigidity_check(&afg, &RigidityConfig::default()),
            Err(Error::WindowTooSmall { need: 8, .. })
        ));
    }
}
