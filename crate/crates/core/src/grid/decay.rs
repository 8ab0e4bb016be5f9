//! Empirical decay diagnostics.
//!
//! Asymptotic `O(|x|^{−p})` conditions are read as power-law fits of per-shell
//! maxima: for each ℓ∞ shell `S_s` the largest `|w − 1|`, `Abs` and `|R|` are
//! recorded and `log max` is regressed on `log s` over the outer shells. A
//! condition "decays like `r^{−p}`" passes when the fitted exponent is at
//! least `p − slack`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{self, PowerFit};
use crate::par;
use crate::scalar::Scalar;

use super::{closed, linf, shells, shifted, sphere_points, GridWindow};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayConfig {
    pub slack: f64,
    /// First shell entering the fits; defaults to the outer half.
    pub fit_from: Option<i64>,
}

impl Default for DecayConfig {
    fn default() -> Self {
        DecayConfig {
            slack: 0.25,
            fit_from: None,
        }
    }
}

pub const MIN_SHELLS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShellMaxima {
    pub s: i64,
    /// Over edges whose farther endpoint lies on `S_s`.
    pub max_weight_deviation: f64,
    pub max_abs: f64,
    pub max_abs_scalar: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayVerdict {
    pub fit: Option<PowerFit>,
    /// Every maximum in the fit range is zero.
    pub vanishes: bool,
    pub required_exponent: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlatnessReport {
    pub n: usize,
    pub p_claimed: f64,
    pub slack: f64,
    pub fit_from: i64,
    pub shells: Vec<ShellMaxima>,
    /// `p > n ≥ 2`.
    pub p_admissible: bool,
    /// `w = 1 + o(1)`, read as a positive fitted exponent beyond the slack.
    pub weights: DecayVerdict,
    pub abs: DecayVerdict,
    pub scalar: DecayVerdict,
    pub asymptotically_flat: bool,
}

fn verdict(points: &[(f64, f64)], required: f64) -> DecayVerdict {
    let vanishes = points.iter().all(|(_, y)| *y == 0.0);
    let fit = fit::power_law(points);
    let holds = vanishes || fit.is_some_and(|f| f.exponent >= required);
    DecayVerdict {
        fit,
        vanishes,
        required_exponent: required,
        holds,
    }
}

fn fit_start(config: &DecayConfig, last: i64) -> Result<i64> {
    let start = config.fit_from.unwrap_or((last + 1) / 2).max(1);
    let usable = (last - start + 1).max(0) as usize;
    if usable < MIN_SHELLS {
        return Err(Error::InsufficientShells {
            usable,
            need: MIN_SHELLS,
        });
    }
    Ok(start)
}

fn shell_maxima<S: Scalar>(gw: &GridWindow<S>, s: i64) -> Result<ShellMaxima> {
    let n = gw.n();
    let pts = sphere_points(n, s);
    let per = par::try_map(&pts, |x| {
        let mut dev = 0.0f64;
        for axis in 0..n {
            for sign in [1, -1] {
                let y = shifted(x, axis, sign);
                if linf(&y) <= s {
                    dev = dev.max((gw.step_weight(x, axis, sign)?.to_f64() - 1.0).abs());
                }
            }
        }
        let a = closed::abs_term(gw, x)?.to_f64();
        let r = closed::scalar_grid(gw, x)?.to_f64().abs();
        Ok::<_, Error>((dev, a, r))
    })?;
    let mut m = ShellMaxima {
        s,
        max_weight_deviation: 0.0,
        max_abs: 0.0,
        max_abs_scalar: 0.0,
    };
    for (d, a, r) in per {
        m.max_weight_deviation = m.max_weight_deviation.max(d);
        m.max_abs = m.max_abs.max(a);
        m.max_abs_scalar = m.max_abs_scalar.max(r);
    }
    Ok(m)
}

/// Per-shell maxima of `|w−1|`, `Abs`, `|R|` on shells `1..=ρ−2` and decay
/// verdicts against `p_claimed`.
pub fn flatness_diagnostics<S: Scalar>(
    gw: &GridWindow<S>,
    p_claimed: f64,
    config: &DecayConfig,
) -> Result<FlatnessReport> {
    let last = gw.rho() - 2;
    let start = fit_start(config, last)?;
    let radii: Vec<i64> = (1..=last).collect();
    let shells = radii.iter().map(|s| shell_maxima(gw, *s)).collect::<Result<Vec<_>>>()?;
    let tail: Vec<&ShellMaxima> = shells.iter().filter(|m| m.s >= start).collect();
    let pts = |f: fn(&ShellMaxima) -> f64| -> Vec<(f64, f64)> { tail.iter().map(|m| (m.s as f64, f(m))).collect() };
    let weights = verdict(&pts(|m| m.max_weight_deviation), config.slack);
    let abs = verdict(&pts(|m| m.max_abs), p_claimed - config.slack);
    let scalar = verdict(&pts(|m| m.max_abs_scalar), p_claimed - config.slack);
    let n = gw.n();
    let p_admissible = p_claimed > n as f64 && n >= 2;
    Ok(FlatnessReport {
        n,
        p_claimed,
        slack: config.slack,
        fit_from: start,
        asymptotically_flat: p_admissible && weights.holds && abs.holds && scalar.holds,
        shells,
        p_admissible,
        weights,
        abs,
        scalar,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GapBound {
    pub r: i64,
    pub gap: f64,
    /// `2n(2r+1)^{n−1} C r^{−p−1}`.
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrongDecayReport {
    pub n: usize,
    pub p: f64,
    pub slack: f64,
    pub fit_from: i64,
    /// `max |w − 1|` on each shell.
    pub weight_deviation: Vec<(i64, f64)>,
    /// `max |w(x,y) − w(y,z)|` over collinear `x ~ y ~ z` with `y ∈ S_s`.
    pub collinear_difference: Vec<(i64, f64)>,
    pub weight_decay: DecayVerdict,
    pub collinear_decay: DecayVerdict,
    pub p_exceeds_n_minus_2: bool,
    /// Both decay hypotheses hold and `p > n − 2`.
    pub hypotheses_hold: bool,
    /// `max_s maxdiff_s · s^{p+1}` over the fit range.
    pub constant: Option<f64>,
    pub gap_bounds: Vec<GapBound>,
    pub mass_fit: Option<PowerFit>,
    pub mass_tends_to_zero: Option<bool>,
    /// `None` when the hypotheses fail and nothing is asserted.
    pub passed: Option<bool>,
}

/// Checks the two decay hypotheses of the strong-decay statement and, when
/// they hold with `p > n − 2`, the gap bound and `M_r → 0`.
pub fn strong_decay_check<S: Scalar>(gw: &GridWindow<S>, p: f64, config: &DecayConfig) -> Result<StrongDecayReport> {
    let n = gw.n();
    let last = gw.rho() - 2;
    let start = fit_start(config, last)?;
    let shells_all: Vec<i64> = (1..=gw.rho() - 1).collect();
    let per_shell = shells_all
        .iter()
        .map(|s| {
            let pts = sphere_points(n, *s);
            let per = par::try_map(&pts, |y| {
                let mut dev = 0.0f64;
                let mut diff = 0.0f64;
                for axis in 0..n {
                    let fwd = gw.step_weight(y, axis, 1)?.to_f64();
                    let back = gw.step_weight(y, axis, -1)?.to_f64();
                    diff = diff.max((fwd - back).abs());
                    for (sign, w) in [(1, fwd), (-1, back)] {
                        if linf(&shifted(y, axis, sign)) <= *s {
                            dev = dev.max((w - 1.0).abs());
                        }
                    }
                }
                Ok::<_, Error>((dev, diff))
            })?;
            Ok(per.into_iter().fold((0.0f64, 0.0f64), |(a, b), (d, e)| (a.max(d), b.max(e))))
        })
        .collect::<Result<Vec<_>>>()?;
    let weight_deviation: Vec<(i64, f64)> = shells_all.iter().zip(&per_shell).map(|(s, m)| (*s, m.0)).collect();
    let collinear_difference: Vec<(i64, f64)> = shells_all.iter().zip(&per_shell).map(|(s, m)| (*s, m.1)).collect();
    let in_fit = |v: &[(i64, f64)]| -> Vec<(f64, f64)> {
        v.iter()
            .filter(|(s, _)| *s >= start && *s <= last)
            .map(|(s, y)| (*s as f64, *y))
            .collect()
    };
    let weight_decay = verdict(&in_fit(&weight_deviation), p - config.slack);
    let collinear_decay = verdict(&in_fit(&collinear_difference), p + 1.0 - config.slack);
    let p_exceeds_n_minus_2 = p > n as f64 - 2.0;
    let hypotheses_hold = weight_decay.holds && collinear_decay.holds && p_exceeds_n_minus_2;

    let mut report = StrongDecayReport {
        n,
        p,
        slack: config.slack,
        fit_from: start,
        weight_deviation,
        collinear_difference,
        weight_decay,
        collinear_decay,
        p_exceeds_n_minus_2,
        hypotheses_hold,
        constant: None,
        gap_bounds: Vec::new(),
        mass_fit: None,
        mass_tends_to_zero: None,
        passed: None,
    };
    if !hypotheses_hold {
        return Ok(report);
    }
    let c = report
        .collinear_difference
        .iter()
        .filter(|(s, _)| *s >= start)
        .map(|(s, d)| d * (*s as f64).powf(p + 1.0))
        .fold(0.0f64, f64::max);
    let norm = ((1usize << n) * n) as f64;
    let mut mass_points = Vec::new();
    for r in start..=last {
        let gap = shells::shell_gap(gw, r)?.to_f64();
        let count = shells::shell_edge_count(n, r) as f64;
        let bound = count * c * (r as f64).powf(-p - 1.0);
        // relative slack for float round-off in the gap sum
        let holds = gap.abs() <= bound * (1.0 + 1e-9) + 1e-12 * count;
        report.gap_bounds.push(GapBound { r, gap, bound, holds });
        mass_points.push((r as f64, (gap / norm).abs()));
    }
    report.constant = Some(c);
    let mass = verdict(&mass_points, f64::MIN_POSITIVE);
    let shrinking = mass_points.first().map(|f| f.1) >= mass_points.last().map(|l| l.1);
    let tends = mass.vanishes || (mass.fit.is_some_and(|f| f.exponent > 0.0) && shrinking);
    report.mass_fit = mass.fit;
    report.mass_tends_to_zero = Some(tends);
    report.passed = Some(tends && report.gap_bounds.iter().all(|g| g.holds));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::fields::{power_decay_field, schwarzschild_field, strong_decay_field};
    use crate::scalar::Rational;

    #[test]
    fn standard_grid_passes_everything() {
        let gw = GridWindow::<Rational>::standard(2, 12).unwrap();
        let rep = flatness_diagnostics(&gw, 3.0, &DecayConfig::default()).unwrap();
        assert!(rep.asymptotically_flat);
        assert!(rep.shells.iter().all(|m| m.max_abs == 0.0 && m.max_weight_deviation == 0.0));
        let sd = strong_decay_check(&gw, 1.0, &DecayConfig::default()).unwrap();
        assert_eq!(sd.passed, Some(true));
    }

    #[test]
    fn recovers_the_exponent_of_a_synthetic_field() {
        let q = 3.5;
        let gw = GridWindow::new(2, 30, power_decay_field(q, 1.0)).unwrap();
        let rep = flatness_diagnostics(&gw, 3.0, &DecayConfig::default()).unwrap();
        let e = rep.weights.fit.unwrap().exponent;
        assert!((e - q).abs() < 1e-9, "{e}");
        assert!(rep.abs.holds && rep.scalar.holds && rep.asymptotically_flat);
    }

    #[test]
    fn schwarzschild_is_not_flat_in_this_sense() {
        let gw = GridWindow::new(3, 16, schwarzschild_field(3, 1.0).unwrap()).unwrap();
        let rep = flatness_diagnostics(&gw, 3.5, &DecayConfig::default()).unwrap();
        assert!(!rep.asymptotically_flat);
        // edges through the coordinate planes keep weight 1 + m on every shell
        assert!(rep.shells.iter().all(|m| (m.max_weight_deviation - 1.0).abs() < 1e-12));
        assert!(!rep.weights.holds);
    }

    #[test]
    fn strong_decay_forces_zero_mass() {
        let gw = GridWindow::new(2, 40, strong_decay_field(1.5)).unwrap();
        let rep = strong_decay_check(&gw, 1.5, &DecayConfig::default()).unwrap();
        assert!(rep.hypotheses_hold, "{:?} {:?}", rep.weight_decay, rep.collinear_decay);
        assert_eq!(rep.passed, Some(true));
        assert!(rep.gap_bounds.iter().all(|g| g.holds));
    }

    #[test]
    fn boundary_case_makes_no_assertion() {
        let gw = GridWindow::new(4, 10, schwarzschild_field(4, 1.0).unwrap()).unwrap();
        let rep = strong_decay_check(&gw, 2.0, &DecayConfig::default()).unwrap();
        assert!(!rep.hypotheses_hold);
        assert_eq!(rep.passed, None);
        assert!(rep.gap_bounds.is_empty());
    }

    #[test]
    fn too_few_shells() {
        let gw = GridWindow::<Rational>::standard(2, 6).unwrap();
        assert!(matches!(
            flatness_diagnostics(&gw, 3.0, &DecayConfig::default()),
            Err(Error::InsufficientShells { .. })
        ));
    }
}
