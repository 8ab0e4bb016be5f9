//! Concavity of weights along a coordinate line.
//!
//! Along the line `b + k e_i` write `w_k = w(b + k e_i, b + (k+1) e_i)`. The
//! curvature of edge `k` is `2w_k − w_{k−1} − w_{k+1}` minus absolute terms,
//! so nonnegative curvature makes `k ↦ w_k` discretely concave. A concave
//! sequence that is positive on all of ℤ is constant; a non-constant one must
//! turn nonpositive somewhere, and the end slopes say where at the latest.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{ser, ser_vec, Scalar};

use super::{fmt_point, GridWindow, Point};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "S: Scalar"))]
pub struct LineReport<S> {
    pub base: Point,
    pub axis: usize,
    /// Offsets `k` of the edges `{b + k e_i, b + (k+1) e_i}` inside the window.
    pub first: i64,
    #[serde(serialize_with = "ser_vec")]
    pub weights: Vec<S>,
    /// `2w_k − w_{k+1} − w_{k−1}` for interior `k`.
    #[serde(serialize_with = "ser_vec")]
    pub second_differences: Vec<S>,
    pub concave: bool,
    pub constant: bool,
    /// For a concave, non-constant line: the offsets beyond each end at
    /// which the weight must have become nonpositive (linear continuation of
    /// the end slope bounds a concave sequence from above).
    pub positivity_fails_below: Option<i64>,
    pub positivity_fails_above: Option<i64>,
    #[serde(serialize_with = "ser")]
    pub min_second_difference: S,
}

fn first_nonpositive(last_k: i64, last_w: f64, slope: f64, dir: i64) -> Option<i64> {
    if slope >= 0.0 {
        return None;
    }
    // w_{last + dir·t} = last_w + slope·t ≤ 0  ⇔  t ≥ last_w / |slope|
    let t = (last_w / -slope).ceil() as i64;
    Some(last_k + dir * t)
}

pub fn line_concavity_check<S: Scalar>(gw: &GridWindow<S>, base: &[i64], axis: usize, eps: f64) -> Result<LineReport<S>> {
    if axis >= gw.n() || base.len() != gw.n() {
        return Err(Error::InvalidParameter(format!("line {} along axis {axis}", fmt_point(base))));
    }
    if !gw.contains(base) {
        return Err(Error::OutOfWindow(format!("base point {} is outside Q_{}", fmt_point(base), gw.rho())));
    }
    let rho = gw.rho();
    let first = -rho - base[axis];
    let last = rho - 1 - base[axis];
    let mut weights = Vec::new();
    for k in first..=last {
        let mut x = base.to_vec();
        x[axis] += k;
        weights.push(gw.weight(&x, axis)?);
    }
    if weights.len() < 3 {
        return Err(Error::WindowTooSmall { need: 2, have: rho });
    }
    let second: Vec<S> = weights
        .windows(3)
        .map(|w| S::from_i64(2) * w[1].clone() - w[0].clone() - w[2].clone())
        .collect();
    let concave = second.iter().all(|d| d.to_f64() >= -eps);
    let constant = weights.iter().all(|w| w.approx_eq(&weights[0], eps));
    let min_second_difference = second
        .iter()
        .cloned()
        .fold(None, |m: Option<S>, d| match m {
            Some(m) if m <= d => Some(m),
            _ => Some(d),
        })
        .unwrap();
    let (positivity_fails_below, positivity_fails_above) = if concave && !constant {
        let len = weights.len();
        let wr = weights[len - 1].to_f64();
        let wl = weights[0].to_f64();
        (
            first_nonpositive(first, wl, wl - weights[1].to_f64(), -1),
            first_nonpositive(last, wr, wr - weights[len - 2].to_f64(), 1),
        )
    } else {
        (None, None)
    };
    Ok(LineReport {
        base: base.to_vec(),
        axis,
        first,
        weights,
        second_differences: second,
        concave,
        constant,
        positivity_fails_below,
        positivity_fails_above,
        min_second_difference,
    })
}
