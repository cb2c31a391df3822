//! Fitting fractional models to measured frequency responses.
//!
//! The objective is the weighted quadratic criterion
//! `Q = Σ W(ω)²·|F(ω) − G(jω)|²`. With exponents fixed the coefficients
//! come from the equation-error linearization `Σ W²·|F·D − N|²`, optionally
//! refined by Sanathanan–Koerner reweighting with `1/|D|` from the previous
//! pass. Free exponents are searched by a bounded Nelder–Mead simplex whose
//! every vertex is scored by the true `Q` of its linear fit.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{eval_power, FractionalTF, ModelError, EXPONENT_TOLERANCE};

/// Relative pivot size below which the least-squares system is rank deficient.
const RANK_TOLERANCE: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IdentifyError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid measured data: {0}")]
    InvalidData(String),
    #[error("invalid model structure: {0}")]
    InvalidStructure(String),
    #[error("underdetermined fit: {samples} weighted samples for {unknowns} free coefficients")]
    Underdetermined { samples: usize, unknowns: usize },
    #[error("rank-deficient least-squares system; collinear terms: {}", .terms.join(", "))]
    RankDeficient { terms: Vec<String> },
    #[error("expected {expected} initial exponent guesses, got {got}")]
    InitLength { expected: usize, got: usize },
    #[error("initial guess {0} lies outside the exponent bounds")]
    InitOutOfBounds(f64),
    #[error("every initial simplex vertex failed to produce a valid fit")]
    NoFeasibleStart,
}

/// Measured samples `F(ω_m)` with weights `W(ω_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredResponse {
    omegas: Vec<f64>,
    values: Vec<Complex64>,
    weights: Vec<f64>,
}

impl MeasuredResponse {
    pub fn new(omegas: Vec<f64>, values: Vec<Complex64>, weights: Vec<f64>) -> Result<Self, IdentifyError> {
        let n = omegas.len();
        if n == 0 {
            return Err(IdentifyError::InvalidData("no samples".into()));
        }
        if values.len() != n || weights.len() != n {
            return Err(IdentifyError::InvalidData(format!(
                "length mismatch: {n} frequencies, {} values, {} weights",
                values.len(),
                weights.len()
            )));
        }
        if let Some(w) = omegas.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(IdentifyError::InvalidData(format!("frequency {w} is not positive")));
        }
        if let Some(k) = omegas.windows(2).position(|p| p[1] <= p[0]) {
            return Err(IdentifyError::InvalidData(format!(
                "frequencies not strictly ascending at index {}",
                k + 1
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(IdentifyError::InvalidData("non-finite response value".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(IdentifyError::InvalidData(format!("weight {w} is negative or non-finite")));
        }
        if !weights.iter().any(|w| *w > 0.0) {
            return Err(IdentifyError::InvalidData("no positive weight".into()));
        }
        Ok(Self { omegas, values, weights })
    }

    pub fn unit_weights(omegas: Vec<f64>, values: Vec<Complex64>) -> Result<Self, IdentifyError> {
        let n = omegas.len();
        Self::new(omegas, values, vec![1.0; n])
    }

    /// Noise-free samples of `g`, unit weights.
    pub fn from_model(g: &FractionalTF, omegas: Vec<f64>) -> Result<Self, IdentifyError> {
        let values = omegas.iter().map(|&w| g.eval(w)).collect::<Result<Vec<_>, _>>()?;
        Self::unit_weights(omegas, values)
    }

    /// Replaces the weights with `1/|F(ω)|`.
    pub fn with_relative_weights(self) -> Result<Self, IdentifyError> {
        let weights = self.values.iter().map(|v| 1.0 / v.norm()).collect();
        Self::new(self.omegas, self.values, weights)
    }

    pub fn with_weights(self, weights: Vec<f64>) -> Result<Self, IdentifyError> {
        Self::new(self.omegas, self.values, weights)
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// Samples with nonzero weight as `(ω, F, W)`.
    fn active(&self) -> impl Iterator<Item = (f64, Complex64, f64)> + '_ {
        self.omegas
            .iter()
            .zip(&self.values)
            .zip(&self.weights)
            .filter(|(_, w)| **w > 0.0)
            .map(|((o, v), w)| (*o, *v, *w))
    }
}

/// `Q = Σ W²·|F − G|²` over all samples with nonzero weight.
pub fn criterion(g: &FractionalTF, data: &MeasuredResponse) -> Result<f64, IdentifyError> {
    let mut q = 0.0;
    for (omega, f, w) in data.active() {
        q += w * w * (f - g.eval(omega)?).norm_sqr();
    }
    Ok(q)
}

/// Equation-error objective `Σ W²·|F·D − N|²`, the quantity a single
/// unweighted linear pass minimizes for a fixed gauge.
pub fn linearized_criterion(g: &FractionalTF, data: &MeasuredResponse) -> Result<f64, IdentifyError> {
    let mut q = 0.0;
    for (omega, f, w) in data.active() {
        let d = g.denominator().eval(omega)?;
        let n = g.numerator().eval(omega)?;
        q += w * w * (f * d - n).norm_sqr();
    }
    Ok(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Numerator,
    Denominator,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Numerator => "num",
            Side::Denominator => "den",
        })
    }
}

/// Which coefficient is fixed to 1 to remove the common-scaling freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pin {
    pub side: Side,
    pub index: usize,
}

/// Exponent sets of a model, which exponents are searched, and the pinned
/// coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelStructure {
    num_exponents: Vec<f64>,
    den_exponents: Vec<f64>,
    num_free: Vec<bool>,
    den_free: Vec<bool>,
    pin: Pin,
}

fn check_exponents(side: Side, exps: &[f64]) -> Result<(), IdentifyError> {
    if exps.is_empty() {
        return Err(IdentifyError::InvalidStructure(format!("{side} needs at least one exponent")));
    }
    if exps.iter().any(|e| !e.is_finite()) {
        return Err(IdentifyError::InvalidStructure(format!("{side} exponent not finite")));
    }
    if exps.windows(2).any(|p| p[1] - p[0] <= EXPONENT_TOLERANCE) {
        return Err(IdentifyError::InvalidStructure(format!(
            "{side} exponents must be strictly ascending: {exps:?}"
        )));
    }
    Ok(())
}

impl ModelStructure {
    /// All exponents fixed; the lowest-exponent denominator coefficient is
    /// pinned to 1.
    pub fn new(num_exponents: Vec<f64>, den_exponents: Vec<f64>) -> Result<Self, IdentifyError> {
        check_exponents(Side::Numerator, &num_exponents)?;
        check_exponents(Side::Denominator, &den_exponents)?;
        Ok(Self {
            num_free: vec![false; num_exponents.len()],
            den_free: vec![false; den_exponents.len()],
            num_exponents,
            den_exponents,
            pin: Pin { side: Side::Denominator, index: 0 },
        })
    }

    pub fn with_pin(mut self, side: Side, index: usize) -> Result<Self, IdentifyError> {
        if index >= self.exponents(side).len() {
            return Err(IdentifyError::InvalidStructure(format!(
                "pinned coefficient {side}[{index}] is not part of the structure"
            )));
        }
        self.pin = Pin { side, index };
        Ok(self)
    }

    pub fn with_free(mut self, num_free: Vec<bool>, den_free: Vec<bool>) -> Result<Self, IdentifyError> {
        if num_free.len() != self.num_exponents.len() || den_free.len() != self.den_exponents.len() {
            return Err(IdentifyError::InvalidStructure("free mask length mismatch".into()));
        }
        self.num_free = num_free;
        self.den_free = den_free;
        Ok(self)
    }

    /// Frees every exponent except those equal to zero.
    pub fn with_nonzero_exponents_free(self) -> Self {
        let num = self.num_exponents.iter().map(|e| *e != 0.0).collect();
        let den = self.den_exponents.iter().map(|e| *e != 0.0).collect();
        self.with_free(num, den).expect("masks sized from the structure")
    }

    pub fn exponents(&self, side: Side) -> &[f64] {
        match side {
            Side::Numerator => &self.num_exponents,
            Side::Denominator => &self.den_exponents,
        }
    }

    pub fn pin(&self) -> Pin {
        self.pin
    }

    /// Current values of the free exponents, numerator first.
    pub fn free_exponents(&self) -> Vec<f64> {
        let num = self.num_exponents.iter().zip(&self.num_free);
        let den = self.den_exponents.iter().zip(&self.den_free);
        num.chain(den).filter(|(_, f)| **f).map(|(e, _)| *e).collect()
    }

    pub fn free_count(&self) -> usize {
        self.num_free.iter().chain(&self.den_free).filter(|f| **f).count()
    }

    /// Number of coefficients solved for (all but the pinned one).
    pub fn coefficient_count(&self) -> usize {
        self.num_exponents.len() + self.den_exponents.len() - 1
    }

    /// Copy with the free exponents replaced, numerator first. The result
    /// may be out of order; the solver does not rely on ordering.
    fn with_free_values(&self, values: &[f64]) -> Self {
        let mut out = self.clone();
        let mut it = values.iter();
        for (e, f) in out.num_exponents.iter_mut().zip(&self.num_free) {
            if *f {
                *e = *it.next().expect("one value per free exponent");
            }
        }
        for (e, f) in out.den_exponents.iter_mut().zip(&self.den_free) {
            if *f {
                *e = *it.next().expect("one value per free exponent");
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFitOptions {
    /// Total passes including the initial unweighted one; 1 disables
    /// reweighting.
    pub max_passes: usize,
    /// Stop when the largest relative coefficient change drops below this.
    pub tolerance: f64,
}

impl Default for LinearFitOptions {
    fn default() -> Self {
        Self { max_passes: 20, tolerance: 1e-10 }
    }
}

impl LinearFitOptions {
    pub fn levy() -> Self {
        Self { max_passes: 1, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FractionalTF,
    pub q_value: f64,
    /// Reweighting passes (linear fit) or simplex iterations (exponent search).
    pub iterations: usize,
    pub converged: bool,
    /// Criterion evaluations spent; 1 for a linear fit.
    pub evaluations: usize,
}

/// One column of the equation-error system.
struct Column {
    side: Side,
    index: usize,
    exponent: f64,
}

impl Column {
    fn label(&self) -> String {
        format!("{}[{}] (exponent {})", self.side, self.index, self.exponent)
    }
}

/// Weighted samples with the basis powers evaluated once per structure.
struct LinearSystem {
    columns: Vec<Column>,
    /// Per sample: `W·F`, `W`, numerator powers, denominator powers.
    rows: Vec<(Complex64, f64, Vec<Complex64>, Vec<Complex64>)>,
    pin: Pin,
}

impl LinearSystem {
    fn build(data: &MeasuredResponse, s: &ModelStructure) -> Result<Self, IdentifyError> {
        let mut columns = Vec::new();
        for side in [Side::Numerator, Side::Denominator] {
            for (index, &exponent) in s.exponents(side).iter().enumerate() {
                if s.pin != (Pin { side, index }) {
                    columns.push(Column { side, index, exponent });
                }
            }
        }
        let samples = data.active().count();
        if samples < columns.len() {
            return Err(IdentifyError::Underdetermined { samples, unknowns: columns.len() });
        }
        let powers = |w: f64, exps: &[f64]| -> Result<Vec<Complex64>, IdentifyError> {
            exps.iter().map(|&e| eval_power(w, e).map_err(Into::into)).collect()
        };
        let rows = data
            .active()
            .map(|(w, f, wt)| {
                Ok((f * wt, wt, powers(w, &s.num_exponents)?, powers(w, &s.den_exponents)?))
            })
            .collect::<Result<Vec<_>, IdentifyError>>()?;
        Ok(Self { columns, rows, pin: s.pin })
    }

    /// Contribution of unit coefficient `(side, index)` to the residual
    /// `W·(F·D − N)` at sample `m`.
    fn entry(&self, m: usize, side: Side, index: usize) -> Complex64 {
        let (wf, wt, num, den) = &self.rows[m];
        match side {
            Side::Numerator => -num[index] * *wt,
            Side::Denominator => *wf * den[index],
        }
    }

    /// Solves one weighted pass. `sk` holds per-sample `1/|D_prev|` factors.
    /// Returns the coefficients (column order) and the residual vector.
    fn solve(&self, sk: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>, DVector<f64>), IdentifyError> {
        let m = self.rows.len();
        let n = self.columns.len();
        let mut a = DMatrix::<f64>::zeros(2 * m, n);
        let mut b = DVector::<f64>::zeros(2 * m);
        for r in 0..m {
            let pinned = self.entry(r, self.pin.side, self.pin.index) * sk[r];
            b[2 * r] = -pinned.re;
            b[2 * r + 1] = -pinned.im;
            for (c, col) in self.columns.iter().enumerate() {
                let v = self.entry(r, col.side, col.index) * sk[r];
                a[(2 * r, c)] = v.re;
                a[(2 * r + 1, c)] = v.im;
            }
        }
        if n == 0 {
            return Ok((Vec::new(), a, b));
        }

        // power-of-two column scales keep the rescaling exact
        let scales: Vec<f64> = (0..n).map(|c| 2f64.powi(a.column(c).norm().log2().round() as i32)).collect();
        if let Some(c) = (0..n).position(|c| !(a.column(c).norm() > 0.0) || !scales[c].is_finite()) {
            return Err(IdentifyError::RankDeficient { terms: vec![self.columns[c].label()] });
        }
        let mut scaled = a.clone();
        for (c, s) in scales.iter().enumerate() {
            scaled.column_mut(c).unscale_mut(*s);
        }

        let qr = scaled.clone().qr();
        let r = qr.r();
        let pivots: Vec<f64> = (0..n).map(|i| r[(i, i)].abs()).collect();
        let largest = pivots.iter().cloned().fold(0.0, f64::max);
        if pivots.iter().any(|p| !(*p > RANK_TOLERANCE * largest)) {
            return Err(IdentifyError::RankDeficient { terms: self.collinear(&scaled) });
        }
        let qtb = qr.q().transpose() * &b;
        let y = r
            .solve_upper_triangular(&qtb)
            .ok_or_else(|| IdentifyError::RankDeficient { terms: self.collinear(&scaled) })?;
        let x: Vec<f64> = y.iter().zip(&scales).map(|(v, s)| v / s).collect();
        let residual = &a * DVector::from_column_slice(&x) - &b;
        Ok((x, a, residual))
    }

    /// Terms participating in the weakest singular direction.
    fn collinear(&self, scaled: &DMatrix<f64>) -> Vec<String> {
        let svd = scaled.clone().svd(false, true);
        let Some(v_t) = svd.v_t else {
            return self.columns.iter().map(Column::label).collect();
        };
        let weakest = svd
            .singular_values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (k, s)| if *s < best.1 { (k, *s) } else { best })
            .0;
        let direction = v_t.row(weakest);
        let peak = direction.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.columns
            .iter()
            .zip(direction.iter())
            .filter(|(_, v)| v.abs() > 0.1 * peak)
            .map(|(c, _)| c.label())
            .collect()
    }

    fn assemble(&self, s: &ModelStructure, x: &[f64]) -> Result<FractionalTF, IdentifyError> {
        let mut num: Vec<(f64, f64)> = s.num_exponents.iter().map(|e| (0.0, *e)).collect();
        let mut den: Vec<(f64, f64)> = s.den_exponents.iter().map(|e| (0.0, *e)).collect();
        let slot = |side: Side, index: usize, num: &mut Vec<(f64, f64)>, den: &mut Vec<(f64, f64)>, v: f64| {
            match side {
                Side::Numerator => num[index].0 = v,
                Side::Denominator => den[index].0 = v,
            }
        };
        slot(self.pin.side, self.pin.index, &mut num, &mut den, 1.0);
        for (col, v) in self.columns.iter().zip(x) {
            slot(col.side, col.index, &mut num, &mut den, *v);
        }
        Ok(FractionalTF::from_pairs(&num, &den)?)
    }

    /// Per-sample `1/|D(jω)|` for the denominator implied by `x`.
    fn reweight(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows.len())
            .map(|m| {
                let (_, _, _, den) = &self.rows[m];
                let mut d = Complex64::new(0.0, 0.0);
                if self.pin.side == Side::Denominator {
                    d += den[self.pin.index];
                }
                for (col, v) in self.columns.iter().zip(x) {
                    if col.side == Side::Denominator {
                        d += den[col.index] * *v;
                    }
                }
                let mag = d.norm();
                if mag > 0.0 && mag.is_finite() {
                    1.0 / mag
                } else {
                    1.0
                }
            })
            .collect()
    }
}

fn relative_change(old: &[f64], new: &[f64]) -> f64 {
    old.iter()
        .zip(new)
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// Least-squares coefficients for fixed exponents.
pub fn fit_linear(
    data: &MeasuredResponse,
    structure: &ModelStructure,
    opts: &LinearFitOptions,
) -> Result<FitResult, IdentifyError> {
    let system = LinearSystem::build(data, structure)?;
    let mut sk = vec![1.0; system.rows.len()];
    let (mut x, _, _) = system.solve(&sk)?;
    let mut passes = 1;
    let mut converged = opts.max_passes <= 1;
    while passes < opts.max_passes {
        sk = system.reweight(&x);
        let (next, _, _) = system.solve(&sk)?;
        passes += 1;
        let change = relative_change(&x, &next);
        x = next;
        if change < opts.tolerance {
            converged = true;
            break;
        }
    }
    let model = system.assemble(structure, &x)?;
    let q_value = criterion(&model, data)?;
    Ok(FitResult { model, q_value, iterations: passes, converged, evaluations: 1 })
}

/// Largest `|Aᵀr| / (|A|·|r|)` over the columns of the unweighted
/// equation-error system at its solution. Zero up to rounding when the
/// linear fit is optimal in its own norm.
pub fn levy_orthogonality(data: &MeasuredResponse, structure: &ModelStructure) -> Result<f64, IdentifyError> {
    let system = LinearSystem::build(data, structure)?;
    let (_, a, r) = system.solve(&vec![1.0; system.rows.len()])?;
    let rn = r.norm();
    if rn == 0.0 {
        return Ok(0.0);
    }
    Ok((0..a.ncols())
        .map(|c| a.column(c).dot(&r).abs() / (a.column(c).norm() * rn))
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearFitOptions {
    pub lower_bound: f64,
    pub upper_bound: f64,
    /// Offset of the initial simplex vertices from the starting point.
    pub initial_spread: f64,
    pub max_evaluations: usize,
    /// Converged once the simplex diameter in exponent space is below this.
    pub diameter_tolerance: f64,
    pub linear: LinearFitOptions,
}

impl Default for NonlinearFitOptions {
    fn default() -> Self {
        Self {
            lower_bound: 0.0,
            upper_bound: 5.0,
            initial_spread: 0.25,
            max_evaluations: 2000,
            diameter_tolerance: 1e-6,
            linear: LinearFitOptions::default(),
        }
    }
}

struct Simplex<'a> {
    data: &'a MeasuredResponse,
    structure: &'a ModelStructure,
    opts: &'a NonlinearFitOptions,
    evaluations: usize,
}

impl Simplex<'_> {
    fn clamp(&self, x: &mut [f64]) {
        for v in x.iter_mut() {
            *v = v.clamp(self.opts.lower_bound, self.opts.upper_bound);
        }
    }

    fn score(&mut self, x: &[f64]) -> f64 {
        self.evaluations += 1;
        let s = self.structure.with_free_values(x);
        match fit_linear(self.data, &s, &self.opts.linear) {
            Ok(fit) if fit.q_value.is_finite() => fit.q_value,
            _ => f64::INFINITY,
        }
    }

    fn point(&mut self, base: &[f64], dir: &[f64], t: f64) -> (Vec<f64>, f64) {
        let mut x: Vec<f64> = base.iter().zip(dir).map(|(b, d)| b + t * (d - b)).collect();
        self.clamp(&mut x);
        let f = self.score(&x);
        (x, f)
    }
}

fn diameter(vertices: &[(Vec<f64>, f64)]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, (a, _)) in vertices.iter().enumerate() {
        for (b, _) in &vertices[i + 1..] {
            let dist = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
            d = d.max(dist);
        }
    }
    d
}

/// Searches free exponents by Nelder–Mead, fitting coefficients linearly at
/// every vertex. `init` holds one guess per free exponent, numerator first.
pub fn fit_nonlinear(
    data: &MeasuredResponse,
    structure: &ModelStructure,
    init: &[f64],
    opts: &NonlinearFitOptions,
) -> Result<FitResult, IdentifyError> {
    let dims = structure.free_count();
    if init.len() != dims {
        return Err(IdentifyError::InitLength { expected: dims, got: init.len() });
    }
    if let Some(v) = init.iter().find(|v| !(**v >= opts.lower_bound && **v <= opts.upper_bound)) {
        return Err(IdentifyError::InitOutOfBounds(*v));
    }
    if dims == 0 {
        return fit_linear(data, structure, &opts.linear);
    }

    let mut nm = Simplex { data, structure, opts, evaluations: 0 };
    let mut vertices: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dims + 1);
    let f0 = nm.score(init);
    vertices.push((init.to_vec(), f0));
    for i in 0..dims {
        let mut x = init.to_vec();
        let step = opts.initial_spread;
        x[i] = if x[i] + step <= opts.upper_bound { x[i] + step } else { x[i] - step };
        nm.clamp(&mut x);
        let f = nm.score(&x);
        vertices.push((x, f));
    }
    if vertices.iter().all(|(_, f)| !f.is_finite()) {
        return Err(IdentifyError::NoFeasibleStart);
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;
    loop {
        vertices.sort_by(|a, b| a.1.total_cmp(&b.1));
        if diameter(&vertices) < opts.diameter_tolerance {
            converged = true;
            break;
        }
        // an iteration costs at most dims + 2 evaluations (reflect, expand or shrink)
        if nm.evaluations + dims + 2 > opts.max_evaluations {
            break;
        }
        iterations += 1;

        let worst = vertices[dims].clone();
        let centroid: Vec<f64> = (0..dims)
            .map(|j| vertices[..dims].iter().map(|(x, _)| x[j]).sum::<f64>() / dims as f64)
            .collect();
        let (xr, fr) = nm.point(&centroid, &worst.0, -alpha);
        if fr < vertices[0].1 {
            let (xe, fe) = nm.point(&centroid, &xr, gamma);
            vertices[dims] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < vertices[dims - 1].1 {
            vertices[dims] = (xr, fr);
            continue;
        }
        let contracted = if fr < worst.1 {
            let (xc, fc) = nm.point(&centroid, &xr, rho);
            (fc <= fr).then_some((xc, fc))
        } else {
            let (xc, fc) = nm.point(&centroid, &worst.0, rho);
            (fc < worst.1).then_some((xc, fc))
        };
        if let Some(v) = contracted {
            vertices[dims] = v;
            continue;
        }
        let best = vertices[0].0.clone();
        for v in vertices.iter_mut().skip(1) {
            let (x, f) = nm.point(&best, &v.0, sigma);
            *v = (x, f);
        }
    }

    let best = &vertices[0].0;
    let fit = fit_linear(data, &structure.with_free_values(best), &opts.linear)?;
    Ok(FitResult {
        iterations,
        converged,
        evaluations: nm.evaluations,
        ..fit
    })
}
