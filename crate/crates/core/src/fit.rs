//! Small least-squares fits used by the decay and mass diagnostics.

use serde::Serialize;

/// `y ≈ C·r^{−exponent}` fitted on `log y` against `log r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub constant: f64,
    /// Number of points with `y > 0` that entered the fit.
    pub points: usize,
}

/// Ordinary least squares slope and intercept of `y` on `x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Log-log fit over the points with positive `r` and `y`. `None` when fewer
/// than two such points exist.
pub fn power_law(points: &[(f64, f64)]) -> Option<PowerFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|(r, y)| *r > 0.0 && *y > 0.0)
        .map(|(r, y)| (r.ln(), y.ln()))
        .unzip();
    let (slope, intercept) = linear_fit(&xs, &ys)?;
    Some(PowerFit {
        exponent: -slope,
        constant: intercept.exp(),
        points: xs.len(),
    })
}

/// `y ≈ c₀ + c₁/r + c₂/r²` by least squares; `c₀` estimates the limit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailFit {
    pub limit: f64,
    pub c1: f64,
    pub c2: f64,
    pub rms_residual: f64,
    pub points: usize,
}

pub fn inverse_power_tail(points: &[(f64, f64)]) -> Option<TailFit> {
    let pts: Vec<(f64, f64)> = points.iter().copied().filter(|(r, _)| *r > 0.0).collect();
    if pts.len() < 3 {
        return None;
    }
    // u = r_max / r keeps the basis {1, u, u²} well scaled
    let r_max = pts.iter().map(|p| p.0).fold(0.0, f64::max);
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for (r, y) in &pts {
        let u = r_max / r;
        let row = [1.0, u, u * u];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * y;
        }
    }
    let c = solve3(ata, atb)?;
    let rms = (pts
        .iter()
        .map(|(r, y)| {
            let u = r_max / r;
            let e = c[0] + c[1] * u + c[2] * u * u - y;
            e * e
        })
        .sum::<f64>()
        / pts.len() as f64)
        .sqrt();
    Some(TailFit {
        limit: c[0],
        c1: c[1] * r_max,
        c2: c[2] * r_max * r_max,
        rms_residual: rms,
        points: pts.len(),
    })
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|i, j| a[*i][col].abs().total_cmp(&a[*j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_power_laws() {
        let pts: Vec<(f64, f64)> = (1..20).map(|r| (r as f64, 3.0 * (r as f64).powf(-2.5))).collect();
        let f = power_law(&pts).unwrap();
        assert!((f.exponent - 2.5).abs() < 1e-12);
        assert!((f.constant - 3.0).abs() < 1e-10);
        assert!(power_law(&[(1.0, 0.0), (2.0, 0.0)]).is_none());
    }

    #[test]
    fn recovers_inverse_power_tails() {
        let pts: Vec<(f64, f64)> = (10..40)
            .map(|r| {
                let r = r as f64;
                (r, 2.0 - 3.0 / r + 0.5 / (r * r))
            })
            .collect();
        let t = inverse_power_tail(&pts).unwrap();
        assert!((t.limit - 2.0).abs() < 1e-9);
        assert!((t.c1 + 3.0).abs() < 1e-7);
        assert!((t.c2 - 0.5).abs() < 1e-6);
    }
}
