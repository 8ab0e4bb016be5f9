//! Built-in instances: the doubled-vertex counterexamples, the seven-vertex
//! torus, and the two model weight fields.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::graph::{GraphBuilder, WeightedGraph};
use crate::grid::fields::{log_model_field, schwarzschild_field};
use crate::grid::{cube_points, linf, point_label, shifted, GridWindow};
use crate::salami::afg::required_rho;
use crate::salami::{AsymptoticallyFlatGraph, InterfaceEdge};
use crate::scalar::{ratio, Rational, Scalar};
use crate::torus::example_spec;

pub const NAMES: [&str; 7] = [
    "appendix1",
    "appendix2",
    "torus-example-4-1",
    "schwarzschild",
    "log-model",
    "appendix1-core",
    "standard-core",
];

/// Side of the torus carrying the two-dimensional doubled vertex.
pub const APPENDIX1_SIDE: i64 = 7;
/// Length of the cycle carrying the one-dimensional doubled vertex.
pub const APPENDIX2_LENGTH: i64 = 12;

/// Adds the doubled vertex: `a` and `b` replace one grid vertex, each joined
/// to its former neighbours with weight `side`, joined to each other with
/// weight `middle` (if any), and carrying vertex weight `m`.
fn add_doubled(
    b: &mut GraphBuilder<Rational>,
    around: &[String],
    side: Rational,
    middle: Option<Rational>,
    m: Rational,
) -> Result<()> {
    let a = b.add_vertex("a")?;
    let bb = b.add_vertex("b")?;
    for v in [a, bb] {
        b.set_vertex_weight(v, m.clone())?;
        for label in around {
            let u = b.vertex(label).ok_or_else(|| Error::UnknownVertex(label.clone()))?;
            b.add_edge(v, u, side.clone())?;
        }
    }
    if let Some(w) = middle {
        b.add_edge(a, bb, w)?;
    }
    Ok(())
}

/// The 2D standard grid with one vertex doubled, on a `7 × 7` torus so that
/// the graph is finite but every neighbourhood looks like `ℤ²`. The doubled
/// vertex sits at `(3, 3)`.
pub fn appendix1() -> WeightedGraph<Rational> {
    let k = APPENDIX1_SIDE;
    let c = [3, 3];
    let wrap = |p: &[i64]| p.iter().map(|x| x.rem_euclid(k)).collect::<Vec<_>>();
    let mut b = GraphBuilder::new();
    let pts: Vec<Vec<i64>> = (0..k).flat_map(|x| (0..k).map(move |y| vec![x, y])).collect();
    for p in pts.iter().filter(|p| **p != c) {
        b.add_vertex(point_label(p)).unwrap();
    }
    for p in pts.iter().filter(|p| **p != c) {
        for axis in 0..2 {
            let q = wrap(&shifted(p, axis, 1));
            if q != c {
                let (u, v) = (b.vertex(&point_label(p)).unwrap(), b.vertex(&point_label(&q)).unwrap());
                b.add_edge(u, v, Rational::one()).unwrap();
            }
        }
    }
    let around: Vec<String> = [(0, 1), (0, -1), (1, 1), (1, -1)]
        .iter()
        .map(|(a, s)| point_label(&wrap(&shifted(&c, *a, *s))))
        .collect();
    add_doubled(&mut b, &around, ratio(1, 2), Some(ratio(1, 4)), ratio(1, 2)).unwrap();
    b.build().unwrap()
}

/// The cycle `C_12` with vertex 6 doubled into `a` and `b`, joined to 5 and 7
/// with weight ½, no edge between them, `m ≡ 1`.
pub fn appendix2() -> WeightedGraph<Rational> {
    let l = APPENDIX2_LENGTH;
    let mut b = GraphBuilder::new();
    for i in (0..l).filter(|i| *i != 6) {
        b.add_vertex(i.to_string()).unwrap();
    }
    for i in (0..l).filter(|i| *i != 6 && (i + 1) % l != 6) {
        let (u, v) = (b.vertex(&i.to_string()).unwrap(), b.vertex(&((i + 1) % l).to_string()).unwrap());
        b.add_edge(u, v, Rational::one()).unwrap();
    }
    add_doubled(&mut b, &["5".into(), "7".into()], ratio(1, 2), None, Rational::one()).unwrap();
    b.build().unwrap()
}

/// `Q_r` with the origin doubled as in [`appendix1`], as the core of an
/// asymptotically flat graph on `Q_rho`.
pub fn doubled_core(n: usize, r: i64, rho: i64, side: Rational, middle: Option<Rational>, m: Rational) -> Result<AsymptoticallyFlatGraph<Rational>> {
    let origin = vec![0; n];
    let mut b = GraphBuilder::new();
    let pts: Vec<_> = cube_points(n, r).into_iter().filter(|p| *p != origin).collect();
    for p in &pts {
        b.add_vertex(point_label(p))?;
    }
    for p in &pts {
        for axis in 0..n {
            let q = shifted(p, axis, 1);
            if linf(&q) <= r && q != origin {
                let (u, v) = (b.vertex(&point_label(p)).unwrap(), b.vertex(&point_label(&q)).unwrap());
                b.add_edge(u, v, Rational::one())?;
            }
        }
    }
    let around: Vec<_> = (0..n)
        .flat_map(|a| [1, -1].map(|s| shifted(&origin, a, s)))
        .collect();
    let mut interface = Vec::new();
    if r == 0 {
        // the neighbours of the origin are grid vertices
        let a = b.add_vertex("a")?;
        let bb = b.add_vertex("b")?;
        b.set_vertex_weight(a, m.clone())?;
        b.set_vertex_weight(bb, m)?;
        if let Some(w) = middle {
            b.add_edge(a, bb, w)?;
        }
        for label in ["a", "b"] {
            for q in &around {
                interface.push(InterfaceEdge {
                    core: label.into(),
                    grid: q.clone(),
                    w: side.clone(),
                });
            }
        }
    } else {
        let labels: Vec<String> = around.iter().map(|q| point_label(q)).collect();
        add_doubled(&mut b, &labels, side, middle, m)?;
    }
    for p in pts.iter().filter(|p| linf(p) == r) {
        for axis in 0..n {
            for s in [1, -1] {
                let q = shifted(p, axis, s);
                if linf(&q) == r + 1 {
                    interface.push(InterfaceEdge {
                        core: point_label(p),
                        grid: q,
                        w: Rational::one(),
                    });
                }
            }
        }
    }
    AsymptoticallyFlatGraph::new(n, r, rho, b.build()?, interface, GridWindow::standard(n, rho)?)
}

/// [`appendix1`] as the core `Q_r` of a 2D asymptotically flat graph.
pub fn appendix1_core(r: i64, rho: i64) -> Result<AsymptoticallyFlatGraph<Rational>> {
    doubled_core(2, r, rho, ratio(1, 2), Some(ratio(1, 4)), ratio(1, 2))
}

/// A procedural weight field with its window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldInstance {
    pub field: String,
    pub n: usize,
    pub m: f64,
    pub rho: i64,
}

impl FieldInstance {
    pub fn window(&self) -> Result<GridWindow<f64>> {
        let provider = match self.field.as_str() {
            "schwarzschild" => schwarzschild_field(self.n, self.m)?,
            "log-model" => {
                if self.n != 2 {
                    return Err(Error::InvalidParameter("the log model is two-dimensional".into()));
                }
                log_model_field(self.m, self.rho)?
            }
            other => return Err(Error::InvalidParameter(format!("unknown field `{other}`"))),
        };
        GridWindow::new(self.n, self.rho, provider)
    }
}

pub fn schwarzschild_instance() -> FieldInstance {
    FieldInstance {
        field: "schwarzschild".into(),
        n: 3,
        m: 1.0,
        rho: 52,
    }
}

pub fn log_model_instance() -> FieldInstance {
    FieldInstance {
        field: "log-model".into(),
        n: 2,
        m: 0.01,
        rho: 102,
    }
}

/// JSON of a named instance.
pub fn instance_json(name: &str) -> Result<Value> {
    match name {
        "appendix1" => Ok(appendix1().to_json()),
        "appendix2" => Ok(appendix2().to_json()),
        "torus-example-4-1" => Ok(serde_json::to_value(example_spec(1))?),
        "schwarzschild" => Ok(serde_json::to_value(schwarzschild_instance())?),
        "log-model" => Ok(serde_json::to_value(log_model_instance())?),
        "appendix1-core" => appendix1_core(1, required_rho(2, 1))?.to_json(),
        "standard-core" => AsymptoticallyFlatGraph::<Rational>::standard(2, 1, required_rho(2, 1))?.to_json(),
        other => Err(Error::InvalidParameter(format!(
            "unknown instance `{other}`; known: {}",
            NAMES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ollivier::all_edge_curvatures;

    #[test]
    fn appendix1_shape() {
        let g = appendix1();
        assert_eq!(g.num_vertices(), 50);
        let a = g.vertex("a").unwrap();
        let ball = g.ball(a, 1).unwrap();
        let labels: Vec<_> = ball.iter().map(|v| g.label(*v)).collect();
        assert_eq!(ball.len(), 6);
        for l in ["a", "b", "2,3", "4,3", "3,2", "3,4"] {
            assert!(labels.contains(&l));
        }
        assert_eq!(*g.vertex_weight(a), ratio(1, 2));
    }

    #[test]
    fn every_instance_round_trips() {
        for name in NAMES {
            let v = instance_json(name).unwrap();
            let again = match name {
                "appendix1" | "appendix2" => WeightedGraph::<Rational>::from_json(&v).unwrap().to_json(),
                "appendix1-core" | "standard-core" => AsymptoticallyFlatGraph::<Rational>::from_json(&v).unwrap().to_json().unwrap(),
                "torus-example-4-1" => serde_json::to_value(serde_json::from_value::<crate::torus::TorusSpec>(v.clone()).unwrap()).unwrap(),
                _ => serde_json::to_value(serde_json::from_value::<FieldInstance>(v.clone()).unwrap()).unwrap(),
            };
            assert_eq!(again, v, "{name}");
        }
        assert!(instance_json("nope").is_err());
    }

    #[test]
    fn appendix2_is_flat() {
        let g = appendix2();
        let ks = all_edge_curvatures(&g, &Default::default()).unwrap();
        assert_eq!(ks.len(), 14);
        assert!(ks.iter().all(|(_, k)| *k == Rational::zero()));
    }

    #[test]
    fn doubled_cores_are_well_formed() {
        for r in [0, 1] {
            let afg = appendix1_core(r, 8).unwrap();
            let l = afg.layered().unwrap();
            assert_eq!(l.g.num_vertices(), 17 * 17 + 1);
        }
    }
}
