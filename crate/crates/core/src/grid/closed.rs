//! Closed forms for curvature on weighted grid graphs.
//!
//! For the edge `x → y = x + σe_i`
//!
//! ```text
//! κ(x, y) = 2w(x,y) − w(x, x−σe_i) − w(y, y+σe_i)
//!           − Σ_{j≠i} ( |w(x,x+e_j) − w(y,y+e_j)| + |w(x,x−e_j) − w(y,y−e_j)| )
//! ```
//!
//! and summing over the `2n` incident edges gives
//! `R(x) = Σ_{E_0(x)} w − Σ_{Ẽ_0(x)} w − Abs(x)`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{shifted, GridWindow};

fn check_step(n: usize, axis: usize, sign: i64) -> Result<()> {
    if axis >= n || (sign != 1 && sign != -1) {
        return Err(Error::InvalidParameter(format!("bad step axis={axis} sign={sign} in dimension {n}")));
    }
    Ok(())
}

/// `κ(x, x + σe_axis)` by the closed form.
pub fn kappa_grid<S: Scalar>(gw: &GridWindow<S>, x: &[i64], axis: usize, sign: i64) -> Result<S> {
    check_step(gw.n(), axis, sign)?;
    let y = shifted(x, axis, sign);
    let mut k = S::from_i64(2) * gw.step_weight(x, axis, sign)?
        - gw.step_weight(x, axis, -sign)?
        - gw.step_weight(&y, axis, sign)?;
    for j in (0..gw.n()).filter(|j| *j != axis) {
        for tau in [1, -1] {
            k = k - (gw.step_weight(x, j, tau)? - gw.step_weight(&y, j, tau)?).abs();
        }
    }
    Ok(k)
}

/// The `4n(n−1)` absolute differences between parallel edges around `x`.
pub fn abs_term<S: Scalar>(gw: &GridWindow<S>, x: &[i64]) -> Result<S> {
    let mut total = S::zero();
    for i in 0..gw.n() {
        for sigma in [1, -1] {
            let y = shifted(x, i, sigma);
            for j in (0..gw.n()).filter(|j| *j != i) {
                for tau in [1, -1] {
                    total = total + (gw.step_weight(x, j, tau)? - gw.step_weight(&y, j, tau)?).abs();
                }
            }
        }
    }
    Ok(total)
}

/// `Σ_{E_0(x)} w − Σ_{Ẽ_0(x)} w`: incident edges minus the edges one step
/// further out along the same axes.
pub fn linear_terms<S: Scalar>(gw: &GridWindow<S>, x: &[i64]) -> Result<S> {
    let mut total = S::zero();
    for i in 0..gw.n() {
        for sigma in [1, -1] {
            let y = shifted(x, i, sigma);
            total = total + gw.step_weight(x, i, sigma)? - gw.step_weight(&y, i, sigma)?;
        }
    }
    Ok(total)
}

/// Scalar curvature `R(x)` in the linear-minus-Abs form.
pub fn scalar_grid<S: Scalar>(gw: &GridWindow<S>, x: &[i64]) -> Result<S> {
    Ok(linear_terms(gw, x)? - abs_term(gw, x)?)
}

/// `Σ_{y~x} κ(x, y)` from [`kappa_grid`], for cross-checking [`scalar_grid`].
pub fn scalar_from_kappas<S: Scalar>(gw: &GridWindow<S>, x: &[i64]) -> Result<S> {
    let mut total = S::zero();
    for i in 0..gw.n() {
        for sigma in [1, -1] {
            total = total + kappa_grid(gw, x, i, sigma)?;
        }
    }
    Ok(total)
}

/// Whether the closed-form stencil of `x → x + σe_axis` lies in the window.
pub fn kappa_stencil_inside<S: Scalar>(gw: &GridWindow<S>, x: &[i64], axis: usize, sign: i64) -> bool {
    let y = shifted(x, axis, sign);
    let reach = |p: &[i64]| (0..gw.n()).all(|j| gw.contains(&shifted(p, j, 1)) && gw.contains(&shifted(p, j, -1)));
    gw.contains(x) && gw.contains(&y) && reach(x) && reach(&y)
}

/// Whether the stencil of `R(x)` lies in the window.
pub fn scalar_stencil_inside<S: Scalar>(gw: &GridWindow<S>, x: &[i64]) -> bool {
    (0..gw.n()).all(|i| kappa_stencil_inside(gw, x, i, 1) && kappa_stencil_inside(gw, x, i, -1))
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;
    use crate::grid::WeightProvider;
    use crate::scalar::{ratio, Rational};

    fn perturbed(n: usize, rho: i64, x: Vec<i64>, axis: usize, w: Rational) -> GridWindow<Rational> {
        let mut weights = HashMap::new();
        weights.insert((x, axis), w);
        GridWindow::new(
            n,
            rho,
            WeightProvider::Table {
                weights,
                default: Some(Rational::one()),
            },
        )
        .unwrap()
    }

    #[test]
    fn constant_weights_are_flat() {
        for c in [ratio(1, 1), ratio(7, 3)] {
            let gw = GridWindow::new(3, 3, WeightProvider::uniform(c)).unwrap();
            for i in 0..3 {
                for s in [1, -1] {
                    assert_eq!(kappa_grid(&gw, &[0, 1, -1], i, s).unwrap(), Rational::zero());
                }
            }
            assert_eq!(abs_term(&gw, &[0, 0, 0]).unwrap(), Rational::zero());
            assert_eq!(scalar_grid(&gw, &[1, 0, 0]).unwrap(), Rational::zero());
        }
    }

    #[test]
    fn single_perturbation_pattern() {
        // w(0,e_1) = 1 + δ in ℤ², δ = 1/2
        let d = ratio(1, 2);
        let gw = perturbed(2, 4, vec![0, 0], 0, Rational::one() + d.clone());
        // the perturbed edge itself gains 2δ
        assert_eq!(kappa_grid(&gw, &[0, 0], 0, 1).unwrap(), d.clone() * ratio(2, 1));
        // collinear neighbours lose δ
        assert_eq!(kappa_grid(&gw, &[0, 0], 0, -1).unwrap(), -d.clone());
        assert_eq!(kappa_grid(&gw, &[1, 0], 0, 1).unwrap(), -d.clone());
        // parallel translates lose |δ| through the absolute terms
        assert_eq!(kappa_grid(&gw, &[0, 0], 1, 1).unwrap(), -d.clone());
        assert_eq!(abs_term(&gw, &[0, 0]).unwrap(), d.clone() * ratio(2, 1));
        assert_eq!(abs_term(&gw, &[0, 1]).unwrap(), d.clone());
        assert_eq!(abs_term(&gw, &[2, 2]).unwrap(), Rational::zero());
    }

    #[test]
    fn scalar_forms_agree() {
        let gw = perturbed(3, 3, vec![0, 1, 0], 2, ratio(5, 4));
        for x in [[0, 0, 0], [0, 1, 0], [1, 1, 0], [0, 1, 1]] {
            assert_eq!(scalar_grid(&gw, &x).unwrap(), scalar_from_kappas(&gw, &x).unwrap());
        }
    }

    #[test]
    fn stencil_leaving_window_is_an_error() {
        let gw = GridWindow::<Rational>::standard(2, 2).unwrap();
        assert!(matches!(kappa_grid(&gw, &[1, 0], 0, 1), Err(Error::OutOfWindow(_))));
        assert!(kappa_grid(&gw, &[0, 0], 0, 1).is_ok());
        assert!(!kappa_stencil_inside(&gw, &[1, 0], 0, 1));
        assert!(kappa_stencil_inside(&gw, &[0, 0], 0, 1));
        assert!(matches!(kappa_grid(&gw, &[0, 0], 0, 2), Err(Error::InvalidParameter(_))));
    }
}
