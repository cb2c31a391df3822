//! Frequency sweeps, Bode data and stability margins.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{FractionalTF, ModelError};

pub const DEFAULT_OMEGA_MIN: f64 = 1e-3;
pub const DEFAULT_OMEGA_MAX: f64 = 1e3;
pub const DEFAULT_POINTS_PER_DECADE: usize = 64;
pub const MIN_POINTS_PER_DECADE: usize = 8;

/// Crossover refinement stops once the bracket is this narrow, relative to ω.
const REFINE_REL_TOL: f64 = 1e-14;
const REFINE_MAX_ITERS: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResponseError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("every sweep point was singular")]
    NoValidSamples,
}

/// Log-spaced frequency grid on `[omega_min, omega_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencySweep {
    omega_min: f64,
    omega_max: f64,
    points_per_decade: usize,
}

impl Default for FrequencySweep {
    fn default() -> Self {
        Self {
            omega_min: DEFAULT_OMEGA_MIN,
            omega_max: DEFAULT_OMEGA_MAX,
            points_per_decade: DEFAULT_POINTS_PER_DECADE,
        }
    }
}

impl FrequencySweep {
    pub fn new(omega_min: f64, omega_max: f64, points_per_decade: usize) -> Result<Self, ResponseError> {
        if !(omega_min > 0.0) || !omega_min.is_finite() {
            return Err(ResponseError::InvalidSweep(format!("omega_min must be positive, got {omega_min}")));
        }
        if !omega_max.is_finite() || !(omega_max > omega_min) {
            return Err(ResponseError::InvalidSweep(format!(
                "omega_max ({omega_max}) must exceed omega_min ({omega_min})"
            )));
        }
        if (omega_max / omega_min).log10() <= 1e-6 {
            return Err(ResponseError::InvalidSweep("range must span more than 1e-6 decades".into()));
        }
        if points_per_decade < MIN_POINTS_PER_DECADE {
            return Err(ResponseError::InvalidSweep(format!(
                "points_per_decade must be at least {MIN_POINTS_PER_DECADE}, got {points_per_decade}"
            )));
        }
        Ok(Self { omega_min, omega_max, points_per_decade })
    }

    pub fn omega_min(&self) -> f64 {
        self.omega_min
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    pub fn points_per_decade(&self) -> usize {
        self.points_per_decade
    }

    pub fn with_points_per_decade(&self, points_per_decade: usize) -> Result<Self, ResponseError> {
        Self::new(self.omega_min, self.omega_max, points_per_decade)
    }

    /// Grid frequencies, ascending, endpoints included exactly.
    pub fn omegas(&self) -> Vec<f64> {
        let lo = self.omega_min.log10();
        let hi = self.omega_max.log10();
        let intervals = ((hi - lo) * self.points_per_decade as f64).ceil().max(1.0) as usize;
        let step = (hi - lo) / intervals as f64;
        let mut out: Vec<f64> = (0..=intervals).map(|k| 10f64.powf(lo + step * k as f64)).collect();
        out[0] = self.omega_min;
        out[intervals] = self.omega_max;
        out
    }
}

/// Sampled response of one system over a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponseSet {
    system: FractionalTF,
    pub omegas: Vec<f64>,
    pub values: Vec<Complex64>,
    pub mag_db: Vec<f64>,
    /// Unwrapped phase in radians.
    pub phase_rad: Vec<f64>,
    /// Grid frequencies where evaluation was singular.
    pub excluded: Vec<f64>,
}

impl FrequencyResponseSet {
    pub fn system(&self) -> &FractionalTF {
        &self.system
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn phase_deg(&self) -> impl Iterator<Item = f64> + '_ {
        self.phase_rad.iter().map(|p| p.to_degrees())
    }

    /// Phase of the exact model at `omega`, on the branch of sample `k`.
    fn phase_near(&self, omega: f64, k: usize) -> Result<f64, ModelError> {
        let arg = self.system.eval(omega)?.arg();
        Ok(nearest_branch(arg, self.phase_rad[k]))
    }
}

fn nearest_branch(angle: f64, reference: f64) -> f64 {
    angle + TAU * ((reference - angle) / TAU).round()
}

fn wrap_step(delta: f64) -> f64 {
    let wrapped = delta - TAU * (delta / TAU).round();
    // keep the +π/−π tie on the positive side
    if wrapped <= -PI {
        wrapped + TAU
    } else {
        wrapped
    }
}

/// Removes 2π jumps: `out[0] = raw[0]`, each later step shifted by a
/// multiple of 2π to the shortest path.
pub fn unwrap_phase(raw: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(raw.len());
    let mut iter = raw.iter();
    let Some(&first) = iter.next() else {
        return out;
    };
    out.push(first);
    let (mut prev_raw, mut prev) = (first, first);
    for &r in iter {
        prev += wrap_step(r - prev_raw);
        prev_raw = r;
        out.push(prev);
    }
    out
}

/// Samples `g` over the sweep. The first phase sample is placed on the
/// 2π branch nearest the low-frequency asymptote of `g`, which is the
/// principal value whenever that asymptote lies in (−π, π].
pub fn sweep(g: &FractionalTF, s: &FrequencySweep) -> Result<FrequencyResponseSet, ResponseError> {
    let mut omegas = Vec::new();
    let mut values = Vec::new();
    let mut excluded = Vec::new();
    for w in s.omegas() {
        match g.eval(w) {
            Ok(v) => {
                omegas.push(w);
                values.push(v);
            }
            Err(ModelError::Singular { .. }) => excluded.push(w),
            Err(e) => return Err(e.into()),
        }
    }
    if omegas.is_empty() {
        return Err(ResponseError::NoValidSamples);
    }
    let raw: Vec<f64> = values.iter().map(|v| v.arg()).collect();
    let mut phase_rad = unwrap_phase(&raw);
    let shift = nearest_branch(phase_rad[0], g.low_frequency_phase()) - phase_rad[0];
    if shift != 0.0 {
        phase_rad.iter_mut().for_each(|p| *p += shift);
    }
    let mag_db = values.iter().map(|v| 20.0 * v.norm().log10()).collect();
    Ok(FrequencyResponseSet {
        system: g.clone(),
        omegas,
        values,
        mag_db,
        phase_rad,
        excluded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Margins {
    pub gain_margin_db: Option<f64>,
    pub phase_crossover_omega: Option<f64>,
    pub phase_margin_deg: Option<f64>,
    pub gain_crossover_omega: Option<f64>,
    /// Number of −π crossings seen in the sweep; the margin uses the first.
    pub phase_crossings: usize,
    /// Number of 0 dB crossings seen in the sweep; the margin uses the first.
    pub gain_crossings: usize,
}

impl Margins {
    pub fn multiple_crossings(&self) -> bool {
        self.phase_crossings > 1 || self.gain_crossings > 1
    }

    /// Gain margin as a linear factor, `10^(GM/20)`.
    pub fn gain_margin_linear(&self) -> Option<f64> {
        self.gain_margin_db.map(|db| 10f64.powf(db / 20.0))
    }
}

/// Indices `k` where `f` changes sign between samples `k` and `k + 1`.
fn sign_changes(f: impl Iterator<Item = f64>) -> Vec<usize> {
    let f: Vec<f64> = f.collect();
    f.windows(2)
        .enumerate()
        .filter(|(_, w)| (w[0] < 0.0) != (w[1] < 0.0))
        .map(|(k, _)| k)
        .collect()
}

/// Bisection in log-frequency for a root of `f` between `lo` and `hi`.
fn bisect_log<F>(mut lo: f64, mut hi: f64, mut f: F) -> f64
where
    F: FnMut(f64) -> Option<f64>,
{
    let Some(mut f_lo) = f(lo) else { return lo };
    for _ in 0..REFINE_MAX_ITERS {
        if (hi - lo) <= REFINE_REL_TOL * lo {
            break;
        }
        let mid = (lo * hi).sqrt();
        if !(mid > lo && mid < hi) {
            break;
        }
        let Some(f_mid) = f(mid) else { break };
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    (lo * hi).sqrt()
}

/// Textbook gain and phase margins, refined on the exact model.
pub fn margins(resp: &FrequencyResponseSet) -> Margins {
    let mut out = Margins::default();
    let phase_cross = sign_changes(resp.phase_rad.iter().map(|p| p + PI));
    out.phase_crossings = phase_cross.len();
    if let Some(&k) = phase_cross.first() {
        let w = bisect_log(resp.omegas[k], resp.omegas[k + 1], |w| {
            resp.phase_near(w, k).ok().map(|p| p + PI)
        });
        if let Ok(v) = resp.system.eval(w) {
            out.phase_crossover_omega = Some(w);
            out.gain_margin_db = Some(-20.0 * v.norm().log10());
        }
    }

    let gain_cross = sign_changes(resp.mag_db.iter().copied());
    out.gain_crossings = gain_cross.len();
    if let Some(&k) = gain_cross.first() {
        let w = bisect_log(resp.omegas[k], resp.omegas[k + 1], |w| {
            resp.system.eval(w).ok().map(|v| v.norm().log10())
        });
        if let Ok(phase) = resp.phase_near(w, k) {
            out.gain_crossover_omega = Some(w);
            out.phase_margin_deg = Some(180.0 + phase.to_degrees());
        }
    }
    out
}

/// Least-squares slope of `mag_db` against `log10(ω)` (dB/decade) and the
/// largest absolute residual of the fit.
pub fn magnitude_slope(resp: &FrequencyResponseSet) -> (f64, f64) {
    let xs: Vec<f64> = resp.omegas.iter().map(|w| w.log10()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = resp.mag_db.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(&resp.mag_db) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let slope = sxy / sxx;
    let residual = xs
        .iter()
        .zip(&resp.mag_db)
        .map(|(x, y)| (y - my - slope * (x - mx)).abs())
        .fold(0.0, f64::max);
    (slope, residual)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(alpha: f64) -> FractionalTF {
        FractionalTF::from_pairs(&[(1.0, alpha)], &[(1.0, 0.0)]).unwrap()
    }

    fn eq6() -> FractionalTF {
        FractionalTF::from_pairs(&[(1.0, 0.0)], &[(0.8, 2.2), (0.5, 0.9), (1.0, 0.0)]).unwrap()
    }

    #[test]
    fn sweep_validation() {
        assert!(FrequencySweep::new(0.0, 1.0, 16).is_err());
        assert!(FrequencySweep::new(1.0, 1.0, 16).is_err());
        assert!(FrequencySweep::new(1.0, 0.5, 16).is_err());
        assert!(FrequencySweep::new(1.0, 1.0 + 1e-9, 16).is_err());
        assert!(FrequencySweep::new(0.1, 10.0, 7).is_err());
        assert!(FrequencySweep::new(0.1, 10.0, 8).is_ok());
    }

    #[test]
    fn grid_shape() {
        let s = FrequencySweep::new(0.1, 10.0, 10).unwrap();
        let w = s.omegas();
        assert_eq!(w.len(), 21);
        assert_eq!((w[0], w[20]), (0.1, 10.0));
        assert!((w[10] - 1.0).abs() < 1e-15);
        assert!(w.windows(2).all(|p| p[1] > p[0]));
        assert_eq!(FrequencySweep::default().omegas().len(), 6 * 64 + 1);
    }

    #[test]
    fn unwrap_examples() {
        assert_eq!(unwrap_phase(&[0.4, 0.4, 0.4]), vec![0.4, 0.4, 0.4]);
        let u = unwrap_phase(&[3.0, -3.0]);
        assert_eq!(u[0], 3.0);
        assert!((u[1] - (TAU - 3.0)).abs() < 1e-15);
        assert!(unwrap_phase(&[]).is_empty());
        let u = unwrap_phase(&[-3.0, 3.0, -3.0]);
        assert!((u[1] - (-TAU + 3.0)).abs() < 1e-15);
        assert!((u[2] + 3.0).abs() < 1e-15);
    }

    #[test]
    fn differentiator_sweep() {
        let r = sweep(&single(1.0), &FrequencySweep::new(0.1, 10.0, 32).unwrap()).unwrap();
        let (slope, res) = magnitude_slope(&r);
        assert!((slope - 20.0).abs() < 1e-9 && res < 1e-9);
        assert!(r.phase_rad.iter().all(|p| (p - PI / 2.0).abs() < 1e-12));
    }

    #[test]
    fn fractional_term_sweep() {
        let r = sweep(&single(0.9), &FrequencySweep::new(0.1, 10.0, 32).unwrap()).unwrap();
        let (slope, res) = magnitude_slope(&r);
        assert!((slope - 18.0).abs() < 1e-9 && res < 1e-9);
        assert!(r.phase_rad.iter().all(|p| (p - 0.45 * PI).abs() < 1e-12));
    }

    #[test]
    fn high_order_term_phase_on_asymptote_branch() {
        let r = sweep(&single(2.2), &FrequencySweep::new(0.1, 10.0, 16).unwrap()).unwrap();
        assert!(r.phase_rad.iter().all(|p| (p - 1.1 * PI).abs() < 1e-12));
        let inv = FractionalTF::from_pairs(&[(1.0, 0.0)], &[(1.0, 2.2)]).unwrap();
        let r = sweep(&inv, &FrequencySweep::new(0.1, 10.0, 16).unwrap()).unwrap();
        assert!(r.phase_rad.iter().all(|p| (p + 1.1 * PI).abs() < 1e-12));
    }

    #[test]
    fn eq6_low_and_high_ends() {
        let r = sweep(&eq6(), &FrequencySweep::new(1e-6, 1e3, 256).unwrap()).unwrap();
        assert!(r.mag_db[0].abs() < 1e-5);
        assert!(r.phase_rad[0].abs() < 1e-5);
        // dominant 0.8 (jω)^2.2 term at the top end
        let last = *r.phase_rad.last().unwrap();
        assert!((last + 1.1 * PI).abs() < 0.05, "{last}");
        assert!(r.phase_rad.windows(2).all(|p| (p[1] - p[0]).abs() < PI));
    }

    #[test]
    fn singular_points_are_recorded() {
        // |D| = 1e-301·ω^2 is below the floor for ω < √10
        let g = FractionalTF::from_pairs(&[(1.0, 0.0)], &[(1e-301, 2.0)]).unwrap();
        let r = sweep(&g, &FrequencySweep::new(0.1, 10.0, 8).unwrap()).unwrap();
        assert!(!r.excluded.is_empty());
        assert_eq!(r.len() + r.excluded.len(), 17);
        assert!(r.excluded.iter().all(|&w| w < r.omegas[0]));
    }

    #[test]
    fn static_gain_has_no_margins() {
        let r = sweep(&FractionalTF::gain(0.5).unwrap(), &FrequencySweep::default()).unwrap();
        let m = margins(&r);
        assert_eq!(m, Margins::default());
    }

    #[test]
    fn integrator_margins() {
        let g = FractionalTF::from_pairs(&[(2.0, 0.0)], &[(1.0, 1.0)]).unwrap();
        let m = margins(&sweep(&g, &FrequencySweep::default()).unwrap());
        assert!((m.gain_crossover_omega.unwrap() - 2.0).abs() < 1e-12);
        assert!((m.phase_margin_deg.unwrap() - 90.0).abs() < 1e-9);
        assert_eq!(m.phase_crossover_omega, None);
        assert_eq!(m.gain_margin_db, None);
    }

    #[test]
    fn refined_phase_crossover() {
        // K / ((s^1.5 + 1)^2 (0.2 s + 1)) loop with a genuine -180° crossing
        let g = FractionalTF::from_pairs(&[(0.4, 0.0)], &[(1.0, 3.0), (2.0, 1.5), (1.0, 0.0)]).unwrap()
            .series(&FractionalTF::from_pairs(&[(1.0, 0.0)], &[(0.2, 1.0), (1.0, 0.0)]).unwrap());
        let coarse = margins(&sweep(&g, &FrequencySweep::new(1e-3, 1e3, 8).unwrap()).unwrap());
        let fine = margins(&sweep(&g, &FrequencySweep::new(1e-3, 1e3, 16).unwrap()).unwrap());
        let w = coarse.phase_crossover_omega.unwrap();
        assert!((g.eval(w).unwrap().arg().abs() - PI).abs() < 1e-6);
        assert!((w - fine.phase_crossover_omega.unwrap()).abs() < 1e-6 * w);
        assert!(coarse.gain_margin_db.unwrap() > 0.0);
        // |G| < 1 everywhere
        assert_eq!(coarse.gain_crossover_omega, None);
    }
}
