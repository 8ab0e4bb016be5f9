use std::collections::BTreeSet;

use anyhow::{Context, Result};
use serde_json::{json, Map, Value};

use gridmass::grid::{closed, cube_points, desk_rigidity, flatness_diagnostics, mass_estimate, point_label, strong_decay_check};
use gridmass::grid::{DecayConfig, GridWindow, MassConfig};
use gridmass::ollivier::{edge_curvature_with, scalar_curvature_with, CurvatureConfig};
use gridmass::salami::{harmonicity_propagation_check, extremal_extension, rigidity_check, AsymptoticallyFlatGraph, RigidityConfig, SalamiPartition};
use gridmass::torus::{all_torus_kappas, total_scalar_curvature, TorusGraph};
use gridmass::{par, Error, PotentialFunction, Scalar, VertexId, WeightedGraph};

use crate::input::input_error;
use crate::output::Report;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Affirmative,
    Negative,
    BudgetExceeded,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::Affirmative
        } else {
            Verdict::Negative
        }
    }
}

fn lookup<S: Scalar>(g: &WeightedGraph<S>, label: &str) -> Result<VertexId> {
    g.vertex(label).map_err(|e| input_error(e.to_string()))
}

fn witness_json<S: Scalar>(g: &WeightedGraph<S>, f: &PotentialFunction<S>) -> Value {
    Value::Object(f.iter().map(|(v, x)| (g.label(v).to_string(), x.to_json())).collect::<Map<_, _>>())
}

fn witness_text<S: Scalar>(g: &WeightedGraph<S>, f: &PotentialFunction<S>) -> String {
    f.iter().map(|(v, x)| format!("{}={x}", g.label(v))).collect::<Vec<_>>().join(" ")
}

/// Per-edge curvature; edges over the search budget are reported and skipped.
pub fn curvature<S: Scalar>(
    g: &WeightedGraph<S>,
    selected: &[(String, String)],
    witness: bool,
    budget: u64,
) -> Result<(Report, Verdict)> {
    let pairs: Vec<(VertexId, VertexId)> = if selected.is_empty() {
        g.edges()
    } else {
        selected
            .iter()
            .map(|(u, v)| Ok((lookup(g, u)?, lookup(g, v)?)))
            .collect::<Result<_>>()?
    };
    log::info!("computing curvature of {} edges", pairs.len());
    let config = CurvatureConfig {
        budget,
        ..CurvatureConfig::default()
    };
    let results = par::map(&pairs, |(x, y)| edge_curvature_with(g, *x, *y, &config));
    let mut headers = vec!["u", "v", "kappa"];
    if witness {
        headers.push("witness");
    }
    let mut rep = Report::new(headers, Value::Null);
    let mut items = Vec::new();
    let mut over_budget = 0;
    for ((x, y), res) in pairs.iter().zip(results) {
        let (u, v) = (g.label(*x).to_string(), g.label(*y).to_string());
        match res {
            Ok(r) => {
                let mut row = vec![u.clone(), v.clone(), r.kappa.to_string()];
                let mut item = json!({"u": u, "v": v, "kappa": r.kappa.to_json()});
                if witness {
                    row.push(witness_text(g, &r.witness));
                    item["witness"] = witness_json(g, &r.witness);
                }
                rep.row(row);
                items.push(item);
            }
            Err(Error::BudgetExceeded { budget, .. }) => {
                over_budget += 1;
                log::warn!("edge {{{u}, {v}}}: search budget of {budget} nodes exceeded");
                let mut row = vec![u.clone(), v.clone(), "budget exceeded".into()];
                if witness {
                    row.push(String::new());
                }
                rep.row(row);
                items.push(json!({"u": u, "v": v, "kappa": Value::Null, "budget_exceeded": true}));
            }
            Err(Error::NotAdjacent(a, b)) => return Err(input_error(format!("`{a}` and `{b}` are not adjacent"))),
            Err(e) => return Err(e.into()),
        }
    }
    rep.json = json!({ "edges": items });
    let verdict = if over_budget > 0 {
        Verdict::BudgetExceeded
    } else {
        Verdict::Affirmative
    };
    Ok((rep, verdict))
}

/// Scalar curvature by brute force at every vertex of a general graph.
pub fn scalar_graph<S: Scalar>(g: &WeightedGraph<S>, budget: u64) -> Result<(Report, Verdict)> {
    let config = CurvatureConfig {
        budget,
        ..CurvatureConfig::default()
    };
    let vs: Vec<VertexId> = g.vertices().collect();
    log::info!("computing scalar curvature at {} vertices", vs.len());
    let rs = par::try_map(&vs, |v| scalar_curvature_with(g, *v, &config));
    let rs = match rs {
        Err(Error::BudgetExceeded { x, y, budget }) => {
            log::warn!("edge {{{x}, {y}}}: search budget of {budget} nodes exceeded");
            return Ok((Report::new(vec!["vertex", "R"], Value::Null), Verdict::BudgetExceeded));
        }
        other => other?,
    };
    let mut rep = Report::new(vec!["vertex", "R"], Value::Null);
    let mut items = Vec::new();
    for (v, r) in vs.iter().zip(rs) {
        rep.row(vec![g.label(*v).to_string(), r.to_string()]);
        items.push(json!({"vertex": g.label(*v), "R": r.to_json()}));
    }
    rep.json = json!({ "vertices": items });
    Ok((rep, Verdict::Affirmative))
}

/// `R = linear − Abs` by the closed form at every window point whose stencil
/// is whole.
pub fn scalar_grid<S: Scalar>(gw: &GridWindow<S>) -> Result<(Report, Verdict)> {
    let pts: Vec<_> = cube_points(gw.n(), gw.rho())
        .into_iter()
        .filter(|x| closed::scalar_stencil_inside(gw, x))
        .collect();
    let vals = par::try_map(&pts, |x| {
        Ok::<_, Error>((closed::linear_terms(gw, x)?, closed::abs_term(gw, x)?, closed::scalar_grid(gw, x)?))
    })?;
    let mut rep = Report::new(vec!["x", "linear", "abs", "R"], Value::Null);
    let mut items = Vec::new();
    for (x, (lin, abs, r)) in pts.iter().zip(vals) {
        rep.row(vec![point_label(x), lin.to_string(), abs.to_string(), r.to_string()]);
        items.push(json!({"x": x, "linear": lin.to_json(), "abs": abs.to_json(), "R": r.to_json()}));
    }
    rep.json = json!({ "vertices": items });
    Ok((rep, Verdict::Affirmative))
}

/// The `(r, gap, M_r)` series; affirmative when the tail has settled.
pub fn mass<S: Scalar>(gw: &GridWindow<S>, r_max: Option<i64>, config: &MassConfig, rigidity: bool) -> Result<(Report, Verdict)> {
    let r_max = r_max.unwrap_or(gw.rho() - 2);
    let est = mass_estimate(gw, r_max, config)?;
    let mut rep = Report::new(vec!["r", "gap", "M_r"], Value::Null);
    for p in &est.partial {
        rep.row(vec![p.r.to_string(), p.gap.to_string(), p.m_r.to_string()]);
    }
    eprintln!(
        "M_{r_max} = {}, estimate {}, converged: {}",
        est.last_partial,
        est.value.map_or("none".to_string(), |v| v.to_string()),
        est.converged
    );
    let mut json = json!({ "estimate": est });
    if rigidity {
        let rep = desk_rigidity(gw, r_max)?;
        eprintln!(
            "R ≥ 0: {}, partial sums monotone: {}, rigidity confirmed: {:?}",
            rep.scalar_nonnegative, rep.monotone, rep.rigidity_confirmed
        );
        json["rigidity"] = serde_json::to_value(&rep)?;
    }
    rep.json = json;
    Ok((rep, Verdict::from_bool(est.converged)))
}

pub fn flatness<S: Scalar>(gw: &GridWindow<S>, p: f64, config: &DecayConfig, strong: bool) -> Result<(Report, Verdict)> {
    if strong {
        let r = strong_decay_check(gw, p, config)?;
        let mut rep = Report::new(vec!["shell", "max_weight_deviation", "max_collinear_difference"], Value::Null);
        for ((s, dev), (_, diff)) in r.weight_deviation.iter().zip(&r.collinear_difference) {
            rep.row(vec![s.to_string(), dev.to_string(), diff.to_string()]);
        }
        eprintln!(
            "hypotheses hold: {}, gap bound and M_r → 0: {}",
            r.hypotheses_hold,
            r.passed.map_or("not asserted".to_string(), |b| b.to_string())
        );
        let verdict = Verdict::from_bool(r.passed == Some(true));
        rep.json = serde_json::to_value(&r)?;
        return Ok((rep, verdict));
    }
    let r = flatness_diagnostics(gw, p, config)?;
    let mut rep = Report::new(vec!["shell", "max_weight_deviation", "max_abs", "max_abs_scalar"], Value::Null);
    for m in &r.shells {
        rep.row(vec![
            m.s.to_string(),
            m.max_weight_deviation.to_string(),
            m.max_abs.to_string(),
            m.max_abs_scalar.to_string(),
        ]);
    }
    eprintln!(
        "weights: {}, Abs: {}, R: {}, asymptotically flat: {}",
        r.weights.holds, r.abs.holds, r.scalar.holds, r.asymptotically_flat
    );
    let verdict = Verdict::from_bool(r.asymptotically_flat);
    rep.json = serde_json::to_value(&r)?;
    Ok((rep, verdict))
}

/// Cycle sums per direction, or per-edge curvature with `edges`.
pub fn torus<S: Scalar>(t: &TorusGraph<S>, edges: bool, eps: f64) -> Result<(Report, Verdict)> {
    if !t.distance_condition().holds {
        log::warn!("the distance condition fails on this torus; the total need not be non-positive");
    }
    if edges {
        let ks = all_torus_kappas(t)?;
        let mut rep = Report::new(vec!["class", "dir", "kappa"], Value::Null);
        let mut items = Vec::new();
        for ((c, i), k) in t.edges().into_iter().zip(ks) {
            rep.row(vec![t.label(c), i.to_string(), k.to_string()]);
            items.push(json!({"class": t.representative(c), "dir": i, "kappa": k.to_json()}));
        }
        rep.json = json!({ "edges": items, "distance_condition": t.distance_condition() });
        return Ok((rep, Verdict::Affirmative));
    }
    let c = total_scalar_curvature(t, eps)?;
    let mut rep = Report::new(
        vec!["dir", "period", "multiplicity", "cycle_total", "edge_total", "max_cycle_sum_nonpositive"],
        Value::Null,
    );
    for d in &c.directions {
        rep.row(vec![
            d.dir.to_string(),
            d.period.to_string(),
            d.multiplicity.to_string(),
            d.cycle_total.to_string(),
            d.edge_total.to_string(),
            d.max_cycle_sum_nonpositive.to_string(),
        ]);
    }
    eprintln!(
        "{} vertices, distance condition: {}, total R = {} (decomposition {}), non-positive: {}",
        c.vertices, c.distance_condition.holds, c.total, c.decomposition, c.nonpositive
    );
    let verdict = Verdict::from_bool(c.nonpositive);
    rep.json = serde_json::to_value(&c)?;
    Ok((rep, verdict))
}

fn label_set<S: Scalar>(g: &WeightedGraph<S>, v: &Value, key: &str) -> Result<BTreeSet<VertexId>> {
    let arr = v
        .get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| input_error(format!("`{key}` must be an array of vertex labels")))?;
    arr.iter()
        .map(|l| {
            let l = l.as_str().ok_or_else(|| input_error(format!("`{key}` entries must be strings")))?;
            lookup(g, l)
        })
        .collect()
}

/// `{"graph": …, "X": […], "Y": […], "K": […], "f": {label: value}, "truncation": […]}`.
pub fn salami_extend<S: Scalar>(v: &Value, eps: f64) -> Result<(Report, Verdict)> {
    let g: WeightedGraph<S> = crate::input::graph_from(v.get("graph").ok_or_else(|| input_error("missing `graph`"))?)?;
    let part = SalamiPartition::new(&g, label_set(&g, v, "X")?, label_set(&g, v, "Y")?, label_set(&g, v, "K")?)
        .map_err(|e| input_error(e.to_string()))?;
    let fv = v
        .get("f")
        .and_then(Value::as_object)
        .ok_or_else(|| input_error("`f` must map the labels of K to values"))?;
    let mut f = PotentialFunction::new();
    for (label, x) in fv {
        let value = S::from_json(x).map_err(|e| input_error(format!("f[{label}]: {e}")))?;
        f.set(lookup(&g, label)?, value);
    }
    let truncation = if v.get("truncation").is_some() {
        label_set(&g, v, "truncation")?
    } else {
        BTreeSet::new()
    };
    let sf = extremal_extension(&g, &part, &f).map_err(|e| match e {
        Error::NotLipschitz { .. } | Error::OutsideDomain(_) => input_error(e.to_string()),
        other => other.into(),
    })?;
    let check = harmonicity_propagation_check(&g, &part, &f, &truncation, eps)?;
    let mut rep = Report::new(vec!["vertex", "part", "Sf"], Value::Null);
    let mut values = Map::new();
    for v in g.vertices() {
        let part_name = if part.k.contains(&v) {
            "K"
        } else if part.x.contains(&v) {
            "X"
        } else {
            "Y"
        };
        let x = sf.value(&g, v)?;
        rep.row(vec![g.label(v).to_string(), part_name.into(), x.to_string()]);
        values.insert(g.label(v).to_string(), x.to_json());
    }
    eprintln!(
        "Δ(Sf) = 0 on K: {}, propagation: {}, truncation artifact: {}",
        check.harmonic_on_k,
        check.holds.map_or("not applicable".to_string(), |b| b.to_string()),
        check.truncation_artifact
    );
    rep.json = json!({ "Sf": values, "propagation": check });
    Ok((rep, Verdict::from_bool(check.holds != Some(false))))
}

pub fn rigidity<S: Scalar>(v: &Value, config: &RigidityConfig) -> Result<(Report, Verdict)> {
    let afg = AsymptoticallyFlatGraph::<S>::from_json(v).map_err(|e| input_error(e.to_string()))?;
    let out = rigidity_check(&afg, config).context("running the rigidity pipeline")?;
    let mut rep = Report::new(vec!["stage", "level", "passed"], Value::Null);
    for s in &out.stages {
        rep.row(vec![
            s.stage.to_string(),
            s.level.map_or(String::new(), |l| l.to_string()),
            s.passed.to_string(),
        ]);
    }
    match &out.failed_stage {
        Some(stage) => eprintln!("not the standard grid: failed at {stage}: {}", out.reason.clone().unwrap_or_default()),
        None => eprintln!("standard grid"),
    }
    let verdict = Verdict::from_bool(out.is_standard_grid);
    rep.json = serde_json::to_value(&out)?;
    Ok((rep, verdict))
}
