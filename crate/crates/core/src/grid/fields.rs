//! Model weight fields.
//!
//! Most fields here give edge `{x, x + e_i}` a weight that depends only on
//! the `i`-th coordinate of the edge, which makes all parallel translates
//! equal and hence `Abs ≡ 0`.

use std::collections::HashMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

use super::{linf, shifted, GridWindow, WeightProvider};

/// Distance of the edge `{x_i, x_i + 1}` from the origin along its axis:
/// `min(|x_i|, |x_i + 1|)`. Edges in `E_r` have index `r`.
pub fn axial_index(x: &[i64], axis: usize) -> i64 {
    x[axis].abs().min((x[axis] + 1).abs())
}

/// ℓ∞ norm of the farther endpoint of `{x, x + e_i}`.
pub fn edge_norm(x: &[i64], axis: usize) -> i64 {
    linf(x).max(linf(&shifted(x, axis, 1)))
}

/// `(1 + m/(k+1)^{n−2})^{1/(n−2)}`, the weight on edges of axial index `k`.
pub fn schwarzschild_profile(n: usize, m: f64, k: i64) -> f64 {
    let d = (n - 2) as f64;
    (1.0 + m / ((k + 1) as f64).powf(d)).powf(1.0 / d)
}

/// Weight `(1 + m/(k+1)^{n−2})^{1/(n−2)}` on every edge of axial index `k`.
/// On `E_r` this is the weight with `k = r`; elsewhere it is the unique
/// extension that depends on the axial coordinate only, so `Abs ≡ 0`.
pub fn schwarzschild_field(n: usize, m: f64) -> Result<WeightProvider<f64>> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("the Schwarzschild field needs n >= 3, got {n}")));
    }
    if !(m > -1.0) || !m.is_finite() {
        return Err(Error::InvalidParameter(format!("mass {m} must exceed -1")));
    }
    Ok(WeightProvider::field(format!("schwarzschild(n={n},m={m})"), move |x, axis| {
        schwarzschild_profile(n, m, axial_index(x, axis))
    }))
}

/// Two-dimensional model with weight `1 − m·log k` on edges of axial index
/// `k ≥ 1` (and 1 at `k = 0`), valid inside `Q_rho`.
pub fn log_model_field(m: f64, rho: i64) -> Result<WeightProvider<f64>> {
    if !m.is_finite() || rho < 1 {
        return Err(Error::InvalidParameter(format!("log model needs finite m and rho >= 1, got m={m}, rho={rho}")));
    }
    let worst = 1.0 - m * ((rho - 1).max(1) as f64).ln();
    if worst <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "log model weight 1 - {m}·log({}) = {worst} is not positive inside Q_{rho}",
            rho - 1
        )));
    }
    Ok(WeightProvider::field(format!("log-model(m={m})"), move |x, axis| {
        1.0 - m * (axial_index(x, axis).max(1) as f64).ln()
    })
    .with_radius(rho))
}

/// `w = 1 + c·ρ_e^{−q}`; the per-shell maximum of `|w − 1|` is exactly
/// `|c|·s^{−q}`.
pub fn power_decay_field(q: f64, c: f64) -> WeightProvider<f64> {
    WeightProvider::field(format!("power-decay(q={q},c={c})"), move |x, axis| {
        1.0 + c * (edge_norm(x, axis) as f64).powf(-q)
    })
}

/// `w = 1 + ρ_e^{−p}(1 + ½ sin(Σx_j / ρ_e))`: decays like `r^{−p}` with
/// collinear neighbour differences of order `r^{−p−1}`.
pub fn strong_decay_field(p: f64) -> WeightProvider<f64> {
    WeightProvider::field(format!("strong-decay(p={p})"), move |x, axis| {
        let r = edge_norm(x, axis) as f64;
        let s: i64 = x.iter().sum();
        1.0 + r.powf(-p) * (1.0 + 0.5 * (s as f64 / r).sin())
    })
}

/// Table window with independent random weights `p/q`, `q ∈ {1,…,4}`,
/// `p ∈ {1,…,2q}` (so every weight lies in `(0, 2]`).
pub fn random_rational_window<R: Rng>(n: usize, rho: i64, rng: &mut R) -> Result<GridWindow<Rational>> {
    let base = GridWindow::<Rational>::standard(n, rho)?;
    let mut weights = HashMap::new();
    for edge in base.edges() {
        let q = rng.gen_range(1..=4);
        let p = rng.gen_range(1..=2 * q);
        weights.insert(edge, Rational::from_ratio(p, q));
    }
    GridWindow::new(n, rho, WeightProvider::Table { weights, default: None })
}

/// Concave axial profile `w(x, x+e_i) = 1 + ε(L² − (x_i + ½)²)` with
/// `L = rho + 1`. It has `Abs ≡ 0` and `R ≡ 4nε`.
pub fn concave_profile_window(n: usize, rho: i64, eps: &Rational) -> Result<GridWindow<Rational>> {
    let base = GridWindow::<Rational>::standard(n, rho)?;
    let l = rho + 1;
    let mut weights = HashMap::new();
    for (x, axis) in base.edges() {
        let c2 = Rational::from_ratio((2 * x[axis] + 1).pow(2), 4);
        let w = Rational::one() + eps.clone() * (Rational::from_i64(l * l) - c2);
        weights.insert((x, axis), w);
    }
    GridWindow::new(n, rho, WeightProvider::Table { weights, default: None })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::grid::{abs_term, cube_points, scalar_grid};
    use crate::scalar::ratio;

    #[test]
    fn zero_mass_fields_are_trivial() {
        let gw = GridWindow::new(3, 4, schwarzschild_field(3, 0.0).unwrap()).unwrap();
        assert!(gw.edges().iter().all(|(x, a)| gw.weight(x, *a).unwrap() == 1.0));
        let gw = GridWindow::new(2, 6, log_model_field(0.0, 6).unwrap()).unwrap();
        assert!(gw.edges().iter().all(|(x, a)| gw.weight(x, *a).unwrap() == 1.0));
    }

    #[test]
    fn schwarzschild_values_on_e_r() {
        let gw = GridWindow::new(3, 10, schwarzschild_field(3, 1.0).unwrap()).unwrap();
        for r in 0..5i64 {
            // outward step of E_r along +e_1 and along -e_2
            assert!((gw.step_weight(&[r, 0, 0], 0, 1).unwrap() - (1.0 + 1.0 / (r + 1) as f64)).abs() < 1e-15);
            assert!((gw.step_weight(&[1, -r, 0], 1, -1).unwrap() - (1.0 + 1.0 / (r + 1) as f64)).abs() < 1e-15);
        }
        assert!(schwarzschild_field(2, 1.0).is_err());
        assert!(schwarzschild_field(3, -1.0).is_err());
    }

    #[test]
    fn axial_fields_have_no_abs_term() {
        let gw = GridWindow::new(3, 6, schwarzschild_field(3, 2.0).unwrap()).unwrap();
        for x in cube_points(3, 4) {
            assert_eq!(abs_term(&gw, &x).unwrap(), 0.0);
        }
        let gw = concave_profile_window(2, 5, &ratio(1, 100)).unwrap();
        for x in cube_points(2, 3) {
            assert_eq!(abs_term(&gw, &x).unwrap(), Rational::zero());
            assert_eq!(scalar_grid(&gw, &x).unwrap(), ratio(8, 100));
        }
    }

    #[test]
    fn log_model_guards_positivity() {
        assert!(log_model_field(0.5, 100).is_err());
        let f = log_model_field(0.01, 20).unwrap();
        let gw = GridWindow::new(2, 20, f).unwrap();
        let w = gw.step_weight(&[10, 3], 0, 1).unwrap();
        assert!((w - (1.0 - 0.01 * 10f64.ln())).abs() < 1e-15);
        assert!(gw.weight(&[20, 0], 1).is_ok());
        assert!(gw.weight(&[20, 0], 0).is_err());
    }

    #[test]
    fn random_windows_are_reproducible() {
        let a = random_rational_window(2, 3, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = random_rational_window(2, 3, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        for (x, axis) in a.edges() {
            let w = a.weight(&x, axis).unwrap();
            assert!(w > Rational::zero() && w <= ratio(2, 1));
        }
    }
}
