//! Closed-loop stability from the open-loop Nyquist curve.
//!
//! The positive-frequency branch is mirrored into its conjugate to form a
//! closed contour, and the verdict comes from the net number of
//! encirclements of the critical point `−1 + 0i`. Open loops are assumed
//! to have no right-half-plane singularities, so any encirclement means
//! instability.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{FractionalTF, EXPONENT_TOLERANCE};
use crate::response::{sweep, FrequencySweep, ResponseError};

/// Distance to the critical point at or below which the loop is marginal.
pub const MARGINAL_TOLERANCE: f64 = 1e-6;
/// Curve samples closer than this to the winding center count as "on" it.
pub const ON_CURVE_TOLERANCE: f64 = 1e-9;
/// Largest accepted distance of the accumulated turns from an integer.
pub const MAX_FRACTIONAL_TURNS: f64 = 0.1;
/// Open-loop magnitude an edge must decay below to leave the tail unswept.
pub const TAIL_DECAY_MAGNITUDE: f64 = 0.1;

pub const ASSUMPTION_NO_RHP: &str = "open loop has no right-half-plane singularities";

pub fn critical_point() -> Complex64 {
    Complex64::new(-1.0, 0.0)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WindingError {
    #[error("center lies on the curve (distance {0:e})")]
    OnCurve(f64),
    #[error("accumulated angle is {0} turns, not close to an integer (under-sampled curve)")]
    Fractional(f64),
    #[error("curve has no points")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NyquistCurve {
    /// Positive-branch frequencies, ascending.
    pub omegas: Vec<f64>,
    /// Positive-branch values `G(jω)`.
    pub points: Vec<Complex64>,
    /// Whether the conjugate branch closes the contour.
    pub mirrored: bool,
    pub excluded: Vec<f64>,
}

impl NyquistCurve {
    pub fn from_points(omegas: Vec<f64>, points: Vec<Complex64>, mirrored: bool) -> Self {
        assert_eq!(omegas.len(), points.len(), "one frequency per point");
        Self { omegas, points, mirrored, excluded: Vec::new() }
    }

    /// The full contour: positive branch by ascending ω, then (if mirrored)
    /// the conjugate branch by descending ω. Treated as closed.
    pub fn contour(&self) -> Vec<Complex64> {
        let mut out = self.points.clone();
        if self.mirrored {
            out.extend(self.points.iter().rev().map(|p| p.conj()));
        }
        out
    }

    /// Contour frequencies matching [`contour`](Self::contour); the mirrored
    /// branch carries negative ω.
    pub fn contour_omegas(&self) -> Vec<f64> {
        let mut out = self.omegas.clone();
        if self.mirrored {
            out.extend(self.omegas.iter().rev().map(|w| -w));
        }
        out
    }
}

pub fn nyquist_curve(
    g_open: &FractionalTF,
    s: &FrequencySweep,
    mirror: bool,
) -> Result<NyquistCurve, ResponseError> {
    let resp = sweep(g_open, s)?;
    Ok(NyquistCurve {
        omegas: resp.omegas,
        points: resp.values,
        mirrored: mirror,
        excluded: resp.excluded,
    })
}

fn segment_distance(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (c - a).norm();
    }
    let t = (((c - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (a + ab * t - c).norm()
}

fn angle_step(from: Complex64, to: Complex64) -> f64 {
    // arg of the ratio is the principal-value increment
    (to * from.conj()).arg()
}

/// Net counter-clockwise encirclements of `center` by the closed contour.
pub fn winding_number(curve: &NyquistCurve, center: Complex64) -> Result<i64, WindingError> {
    let contour = curve.contour();
    if contour.is_empty() {
        return Err(WindingError::Empty);
    }
    let n = contour.len();
    let mut closest = f64::INFINITY;
    let mut total = 0.0;
    for k in 0..n {
        let a = contour[k];
        let b = contour[(k + 1) % n];
        closest = closest.min(segment_distance(a, b, center));
        total += angle_step(a - center, b - center);
    }
    if closest < ON_CURVE_TOLERANCE {
        return Err(WindingError::OnCurve(closest));
    }
    let turns = total / TAU;
    let rounded = turns.round();
    if (turns - rounded).abs() > MAX_FRACTIONAL_TURNS {
        return Err(WindingError::Fractional(turns));
    }
    Ok(rounded as i64)
}

/// Turns accumulated along the positive branch about a real-axis `center`,
/// extended at both ends to the real-axis projection of the end points.
/// For a mirrored contour twice this equals the full winding number.
pub fn half_turns(curve: &NyquistCurve, center: f64) -> f64 {
    let c = Complex64::new(center, 0.0);
    let (Some(first), Some(last)) = (curve.points.first(), curve.points.last()) else {
        return 0.0;
    };
    let path = std::iter::once(Complex64::new(first.re, 0.0))
        .chain(curve.points.iter().copied())
        .chain(std::iter::once(Complex64::new(last.re, 0.0)));
    let pts: Vec<Complex64> = path.map(|p| p - c).collect();
    pts.windows(2).map(|w| angle_step(w[0], w[1])).sum::<f64>() / TAU
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Unstable,
    Marginal,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub verdict: Verdict,
    pub winding_number: i64,
    #[serde(rename = "min_distance")]
    pub min_distance_to_critical: f64,
    pub critical_omega: f64,
    pub assumptions: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Golden-section search for the minimum of `f` over `[lo, hi]` in log ω.
fn golden_min<F: Fn(f64) -> f64>(lo: f64, hi: f64, rel_tol: f64, f: F) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c.exp()), f(d.exp()));
    // width in ln ω approximates the relative width in ω
    while b - a > rel_tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c.exp());
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d.exp());
        }
    }
    let w = ((a + b) / 2.0).exp();
    (w, f(w))
}

/// Minimum of `|G(jω) + 1|` over the positive branch, refined between the
/// neighbours of the best sample. Returns `(distance, ω)`.
fn closest_approach(g: &FractionalTF, curve: &NyquistCurve) -> (f64, f64) {
    let crit = critical_point();
    let (k, d) = curve
        .points
        .iter()
        .map(|p| (p - crit).norm())
        .enumerate()
        .fold((0, f64::INFINITY), |best, (k, d)| if d < best.1 { (k, d) } else { best });
    let n = curve.omegas.len();
    if n < 2 {
        return (d, curve.omegas[k]);
    }
    let lo = curve.omegas[k.saturating_sub(1)];
    let hi = curve.omegas[(k + 1).min(n - 1)];
    let dist = |w: f64| g.eval(w).map(|v| (v - crit).norm()).unwrap_or(f64::INFINITY);
    let (w, dr) = golden_min(lo, hi, 1e-9, dist);
    if dr < d {
        (dr, w)
    } else {
        (d, curve.omegas[k])
    }
}

/// Reasons the unswept frequency tails might hide part of the contour.
pub fn truncation_warnings(g: &FractionalTF, curve: &NyquistCurve) -> Vec<String> {
    let mut warnings = Vec::new();
    let (Some(&first), Some(&last)) = (curve.points.first(), curve.points.last()) else {
        return vec!["no valid sweep points".into()];
    };
    let crit = critical_point();

    let n0 = g.numerator().lowest();
    let d0 = g.denominator().lowest();
    let low = n0.exponent - d0.exponent;
    if n0.coefficient != 0.0 && low < -EXPONENT_TOLERANCE {
        warnings.push("open loop diverges as omega -> 0; contour cannot be closed at infinity".into());
    } else if low > EXPONENT_TOLERANCE || n0.coefficient == 0.0 {
        if first.norm() >= TAIL_DECAY_MAGNITUDE {
            warnings.push(format!(
                "|G| = {:e} at omega_min has not decayed below {TAIL_DECAY_MAGNITUDE}",
                first.norm()
            ));
        }
    } else {
        let limit = Complex64::new(n0.coefficient / d0.coefficient, 0.0);
        if (first - limit).norm() > TAIL_DECAY_MAGNITUDE * (limit - crit).norm() {
            warnings.push("response at omega_min has not settled to its low-frequency limit".into());
        }
    }

    let high = g.relative_degree();
    let nh = g.numerator().highest();
    let dh = g.denominator().highest();
    if high > EXPONENT_TOLERANCE {
        warnings.push("open loop diverges as omega -> infinity; contour cannot be closed".into());
    } else if high < -EXPONENT_TOLERANCE {
        if last.norm() >= TAIL_DECAY_MAGNITUDE {
            warnings.push(format!(
                "|G| = {:e} at omega_max has not decayed below {TAIL_DECAY_MAGNITUDE}",
                last.norm()
            ));
        }
    } else {
        let limit = Complex64::new(nh.coefficient / dh.coefficient, 0.0);
        if (last - limit).norm() > TAIL_DECAY_MAGNITUDE * (limit - crit).norm() {
            warnings.push("open loop is not strictly proper and has not settled at omega_max".into());
        }
    }
    warnings
}

/// Encirclement test of the critical point for the open loop `g_open`.
pub fn assess_stability(
    g_open: &FractionalTF,
    s: &FrequencySweep,
) -> Result<StabilityVerdict, ResponseError> {
    let curve = nyquist_curve(g_open, s, true)?;
    let (min_distance, critical_omega) = closest_approach(g_open, &curve);
    let mut warnings = truncation_warnings(g_open, &curve);
    let truncated = !warnings.is_empty();
    if !curve.excluded.is_empty() {
        warnings.push(format!("{} singular sweep points excluded", curve.excluded.len()));
    }
    let winding = winding_number(&curve, critical_point());

    let verdict = if min_distance <= MARGINAL_TOLERANCE {
        Verdict::Marginal
    } else if truncated {
        Verdict::Indeterminate
    } else {
        match &winding {
            Ok(0) => Verdict::Stable,
            Ok(_) => Verdict::Unstable,
            Err(WindingError::OnCurve(_)) => Verdict::Marginal,
            Err(_) => Verdict::Indeterminate,
        }
    };
    if let Err(e) = &winding {
        warnings.push(e.to_string());
    }
    Ok(StabilityVerdict {
        verdict,
        winding_number: winding.unwrap_or(0),
        min_distance_to_critical: min_distance,
        critical_omega,
        assumptions: vec![ASSUMPTION_NO_RHP.to_string()],
        warnings,
    })
}
