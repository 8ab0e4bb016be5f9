//! Shell edge sets `E_r`, `Ẽ_r` and the cube summation identity
//! `Σ_{Q_r} R = Σ_{E_r} w − Σ_{Ẽ_r} w − Σ_{Q_r} Abs`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::par;
use crate::scalar::{ser, Scalar};

use super::{closed, cube_points, shifted, GridWindow, Point};

/// A directed grid step `from → from + sign·e_axis`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Step {
    pub from: Point,
    pub axis: usize,
    pub sign: i64,
}

impl Step {
    pub fn to(&self) -> Point {
        shifted(&self.from, self.axis, self.sign)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShellEdges {
    /// `∂Q_r`, oriented outward.
    pub e_r: Vec<Step>,
    /// Edges from `δQ_r` into `S_{r+2}`, oriented outward.
    pub tilde_e_r: Vec<Step>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "S: Scalar"))]
pub struct ShellSums<S> {
    pub r: i64,
    #[serde(serialize_with = "ser")]
    pub sum_e_r: S,
    #[serde(serialize_with = "ser")]
    pub sum_tilde_e_r: S,
    #[serde(serialize_with = "ser")]
    pub sum_abs_q_r: S,
    #[serde(serialize_with = "ser")]
    pub sum_r_q_r: S,
    /// Weights of the axial edges between the faces at `±r` and `±(r−1)`,
    /// transverse coordinates in `[−r, r]`. What `Σ_{Q_r} R` telescopes to.
    #[serde(serialize_with = "ser")]
    pub sum_inner_e_r: S,
}

impl<S: Scalar> ShellSums<S> {
    /// `Σ_{E_r} w − Σ_{Ẽ_r} w`.
    pub fn gap(&self) -> S {
        self.sum_e_r.clone() - self.sum_tilde_e_r.clone()
    }

    /// Difference of the two sides of the identity; zero when it holds.
    pub fn defect(&self) -> S {
        self.sum_r_q_r.clone() - (self.gap() - self.sum_abs_q_r.clone())
    }

    /// The same identity with `E_r` replaced by the inner face edges. It
    /// holds for every weight field, and `defect() = Σ_inner w − Σ_{E_r} w`.
    pub fn inner_defect(&self) -> S {
        self.sum_r_q_r.clone()
            - (self.sum_inner_e_r.clone() - self.sum_tilde_e_r.clone() - self.sum_abs_q_r.clone())
    }
}

/// `|E_r| = |Ẽ_r| = 2n(2r+1)^{n−1}`.
pub fn shell_edge_count(n: usize, r: i64) -> usize {
    2 * n * ((2 * r + 1) as usize).pow(n as u32 - 1)
}

/// Faces of the cube of radius `face` in direction `σe_i`: points with
/// `x_i = σ·face` and all other coordinates in `[−r, r]`.
fn face_points(n: usize, r: i64, face: i64, axis: usize, sign: i64) -> Vec<Point> {
    if n == 1 {
        return vec![vec![sign * face]];
    }
    cube_points(n - 1, r)
        .into_iter()
        .map(|mut p| {
            p.insert(axis, sign * face);
            p
        })
        .collect()
}

fn shell_steps(n: usize, r: i64, face: i64) -> Vec<Step> {
    let mut out = Vec::with_capacity(shell_edge_count(n, r));
    for axis in 0..n {
        for sign in [1, -1] {
            for from in face_points(n, r, face, axis, sign) {
                out.push(Step { from, axis, sign });
            }
        }
    }
    out
}

/// `E_r` and `Ẽ_r`. The outward edges of `δQ_r` that reach `S_{r+2}` are
/// exactly the steps that push the single coordinate of magnitude `r+1`
/// further out.
pub fn shell_edges<S: Scalar>(gw: &GridWindow<S>, r: i64) -> Result<ShellEdges> {
    if r < 0 {
        return Err(Error::InvalidParameter(format!("negative shell radius {r}")));
    }
    if r + 2 > gw.rho() {
        return Err(Error::WindowTooSmall {
            need: r + 2,
            have: gw.rho(),
        });
    }
    Ok(ShellEdges {
        e_r: shell_steps(gw.n(), r, r),
        tilde_e_r: shell_steps(gw.n(), r, r + 1),
    })
}

fn sum_steps<S: Scalar>(gw: &GridWindow<S>, steps: &[Step]) -> Result<S> {
    let ws = par::try_map(steps, |s| gw.step_weight(&s.from, s.axis, s.sign))?;
    Ok(ws.into_iter().sum())
}

/// Only the two edge sums, without the cube sums.
pub fn shell_gap<S: Scalar>(gw: &GridWindow<S>, r: i64) -> Result<S> {
    let edges = shell_edges(gw, r)?;
    Ok(sum_steps(gw, &edges.e_r)? - sum_steps(gw, &edges.tilde_e_r)?)
}

/// The four sums of the cube identity, each computed independently.
pub fn shell_sums<S: Scalar>(gw: &GridWindow<S>, r: i64) -> Result<ShellSums<S>> {
    let edges = shell_edges(gw, r)?;
    let points = cube_points(gw.n(), r);
    let per_point = par::try_map(&points, |x| {
        Ok::<_, Error>((closed::abs_term(gw, x)?, closed::scalar_from_kappas(gw, x)?))
    })?;
    let mut sum_abs = S::zero();
    let mut sum_r = S::zero();
    for (a, rr) in per_point {
        sum_abs = sum_abs + a;
        sum_r = sum_r + rr;
    }
    Ok(ShellSums {
        r,
        sum_e_r: sum_steps(gw, &edges.e_r)?,
        sum_tilde_e_r: sum_steps(gw, &edges.tilde_e_r)?,
        sum_abs_q_r: sum_abs,
        sum_r_q_r: sum_r,
        sum_inner_e_r: sum_steps(gw, &shell_steps(gw.n(), r, r - 1))?,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::grid::linf;
    use crate::scalar::Rational;

    #[test]
    fn counts_match_the_formula() {
        for (n, r) in [(2, 0), (2, 1), (2, 3), (3, 0), (3, 2)] {
            let gw = GridWindow::<Rational>::standard(n, r + 2).unwrap();
            let e = shell_edges(&gw, r).unwrap();
            assert_eq!(e.e_r.len(), shell_edge_count(n, r));
            assert_eq!(e.tilde_e_r.len(), shell_edge_count(n, r));
        }
        let gw = GridWindow::<Rational>::standard(2, 3).unwrap();
        assert_eq!(shell_edges(&gw, 1).unwrap().e_r.len(), 12);
        assert!(matches!(shell_edges(&gw, 2), Err(Error::WindowTooSmall { .. })));
    }

    #[test]
    fn e_r_is_the_edge_boundary_of_the_cube() {
        // brute-force ∂Q_r from the window edge list
        for (n, r) in [(2, 1), (3, 1), (2, 2)] {
            let gw = GridWindow::<Rational>::standard(n, r + 2).unwrap();
            let mut boundary = BTreeSet::new();
            for (x, axis) in gw.edges() {
                let y = shifted(&x, axis, 1);
                if (linf(&x) <= r) != (linf(&y) <= r) {
                    boundary.insert((x, axis));
                }
            }
            let ours: BTreeSet<_> = shell_edges(&gw, r)
                .unwrap()
                .e_r
                .into_iter()
                .map(|s| if s.sign > 0 { (s.from, s.axis) } else { (s.to(), s.axis) })
                .collect();
            assert_eq!(ours, boundary);
        }
    }

    #[test]
    fn tilde_edges_go_from_the_vertex_boundary_to_s_r_plus_2() {
        let (n, r) = (3, 1);
        let gw = GridWindow::<Rational>::standard(n, r + 2).unwrap();
        // brute force: edges between δQ_r and S_{r+2}
        let delta: BTreeSet<Point> = cube_points(n, r + 1)
            .into_iter()
            .filter(|p| linf(p) == r + 1 && p.iter().filter(|c| c.abs() == r + 1).count() == 1)
            .collect();
        let mut expected = BTreeSet::new();
        for (x, axis) in gw.edges() {
            let y = shifted(&x, axis, 1);
            if delta.contains(&x) && linf(&y) == r + 2 || delta.contains(&y) && linf(&x) == r + 2 {
                expected.insert((x, axis));
            }
        }
        let tilde = shell_edges(&gw, r).unwrap().tilde_e_r;
        for s in &tilde {
            // corners of S_{r+1} (two maximal coordinates) never appear
            assert_eq!(s.from.iter().filter(|c| c.abs() == r + 1).count(), 1);
        }
        let ours: BTreeSet<_> = tilde
            .into_iter()
            .map(|s| if s.sign > 0 { (s.from, s.axis) } else { (s.to(), s.axis) })
            .collect();
        assert_eq!(ours, expected);
    }

    #[test]
    fn random_weights_telescope_to_the_inner_faces() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut literal_failures = 0;
        for n in [2, 3] {
            let gw = crate::grid::fields::random_rational_window(n, 6, &mut rng).unwrap();
            for r in 0..=4 {
                let s = shell_sums(&gw, r).unwrap();
                assert_eq!(s.inner_defect(), Rational::zero(), "n={n} r={r}");
                assert_eq!(s.defect(), s.sum_inner_e_r.clone() - s.sum_e_r.clone());
                literal_failures += usize::from(s.defect() != Rational::zero());
            }
            // at r = 0 the inner faces are the incident edges
            assert_eq!(shell_sums(&gw, 0).unwrap().defect(), Rational::zero());
        }
        assert!(literal_failures > 0);
    }

    #[test]
    fn one_dimensional_profile_counterexample() {
        // w(x, x+e_0) = a_{x_0}, vertical weights 1, so Abs ≡ 0 and
        // Σ_{Q_1} R = 3(a_{−1} + a_0 − a_2 − a_{−3}) while the edge
        // sums give 3(a_1 + a_{−2} − a_2 − a_{−3})
        let base = GridWindow::<Rational>::standard(2, 4).unwrap();
        let a = |t: i64| Rational::from_i64((t + 5) * (t + 5));
        let weights = base
            .edges()
            .into_iter()
            .map(|(x, axis)| {
                let w = if axis == 0 { a(x[0]) } else { Rational::one() };
                ((x, axis), w)
            })
            .collect();
        let gw = GridWindow::new(2, 4, crate::grid::WeightProvider::Table { weights, default: None }).unwrap();
        let s = shell_sums(&gw, 1).unwrap();
        assert_eq!(s.sum_abs_q_r, Rational::zero());
        let three = Rational::from_i64(3);
        assert_eq!(s.sum_r_q_r, three.clone() * (a(-1) + a(0) - a(2) - a(-3)));
        assert_eq!(s.gap(), three * (a(1) + a(-2) - a(2) - a(-3)));
        assert_ne!(s.defect(), Rational::zero());
    }

    #[test]
    fn standard_grid_identity() {
        let gw = GridWindow::<Rational>::standard(2, 5).unwrap();
        for r in 0..=3 {
            let s = shell_sums(&gw, r).unwrap();
            assert_eq!(s.sum_e_r, Rational::from_i64(shell_edge_count(2, r) as i64));
            assert_eq!(s.gap(), Rational::zero());
            assert_eq!(s.sum_abs_q_r, Rational::zero());
            assert_eq!(s.defect(), Rational::zero());
        }
    }
}
