//! Fractional-order transfer functions and PI^λD^δ controllers.
//!
//! A system is a ratio of two [`FractionalPolynomial`]s, each a sum of
//! `c·(jω)^e` terms with arbitrary real exponents. Evaluation uses the
//! principal branch `j = e^{iπ/2}`, so a single term has the constant phase
//! `e·π/2` at every frequency.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance under which two exponents are treated as equal.
pub const EXPONENT_TOLERANCE: f64 = 1e-12;

/// Denominator magnitudes below this floor flag the evaluation as singular.
pub const SINGULAR_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("frequency must be positive and finite, got {0}")]
    NonPositiveFrequency(f64),
    #[error("non-finite {what}: {value}")]
    NonFinite { what: &'static str, value: f64 },
    #[error("polynomial has no terms")]
    EmptyPolynomial,
    #[error("denominator has no nonzero coefficient")]
    ZeroDenominator,
    #[error("singular evaluation at omega = {omega}: |denominator| = {magnitude:e}")]
    Singular { omega: f64, magnitude: f64 },
    #[error("{name} must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("natural frequency must be positive, got {0}")]
    NonPositiveNaturalFrequency(f64),
    #[error("dc gain is unbounded: lowest numerator exponent {num} is below lowest denominator exponent {den}")]
    UnboundedDcGain { num: f64, den: f64 },
}

fn check_finite(what: &'static str, value: f64) -> Result<f64, ModelError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ModelError::NonFinite { what, value })
    }
}

/// Principal-branch value of `(jω)^alpha`: `ω^α·(cos(απ/2) + i·sin(απ/2))`.
pub fn eval_power(omega: f64, alpha: f64) -> Result<Complex64, ModelError> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(ModelError::NonPositiveFrequency(omega));
    }
    check_finite("exponent", alpha)?;
    Ok(power_unchecked(omega, alpha))
}

#[inline]
fn power_unchecked(omega: f64, alpha: f64) -> Complex64 {
    if alpha == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let (s, c) = (alpha * FRAC_PI_2).sin_cos();
    Complex64::new(c, s) * omega.powf(alpha)
}

/// One `coefficient·(jω)^exponent` term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractionalTerm {
    #[serde(rename = "c")]
    pub coefficient: f64,
    #[serde(rename = "e")]
    pub exponent: f64,
}

impl FractionalTerm {
    pub fn new(coefficient: f64, exponent: f64) -> Result<Self, ModelError> {
        Ok(Self {
            coefficient: check_finite("coefficient", coefficient)?,
            exponent: check_finite("exponent", exponent)?,
        })
    }
}

/// Sum of fractional terms in canonical form: exponents strictly ascending,
/// duplicates merged, zero coefficients dropped unless nothing else remains.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct FractionalPolynomial {
    terms: Vec<FractionalTerm>,
}

impl FractionalPolynomial {
    pub fn new(terms: impl IntoIterator<Item = FractionalTerm>) -> Result<Self, ModelError> {
        let mut terms: Vec<FractionalTerm> = terms.into_iter().collect();
        if terms.is_empty() {
            return Err(ModelError::EmptyPolynomial);
        }
        for t in &terms {
            check_finite("coefficient", t.coefficient)?;
            check_finite("exponent", t.exponent)?;
        }
        terms.sort_by(|a, b| a.exponent.total_cmp(&b.exponent));

        let mut merged: Vec<FractionalTerm> = Vec::with_capacity(terms.len());
        for t in terms {
            match merged.last_mut() {
                Some(last) if (t.exponent - last.exponent).abs() <= EXPONENT_TOLERANCE => {
                    last.coefficient += t.coefficient;
                }
                _ => merged.push(t),
            }
        }
        let lowest = merged[0].exponent;
        merged.retain(|t| t.coefficient != 0.0);
        if merged.is_empty() {
            merged.push(FractionalTerm { coefficient: 0.0, exponent: lowest });
        }
        Ok(Self { terms: merged })
    }

    /// Builds from `(coefficient, exponent)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self, ModelError> {
        Self::new(pairs.iter().map(|&(c, e)| FractionalTerm { coefficient: c, exponent: e }))
    }

    pub fn constant(value: f64) -> Result<Self, ModelError> {
        Self::from_pairs(&[(value, 0.0)])
    }

    pub fn terms(&self) -> &[FractionalTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coefficient == 0.0)
    }

    pub fn lowest(&self) -> &FractionalTerm {
        &self.terms[0]
    }

    pub fn highest(&self) -> &FractionalTerm {
        &self.terms[self.terms.len() - 1]
    }

    pub fn eval(&self, omega: f64) -> Result<Complex64, ModelError> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(ModelError::NonPositiveFrequency(omega));
        }
        Ok(self
            .terms
            .iter()
            .map(|t| power_unchecked(omega, t.exponent) * t.coefficient)
            .sum())
    }

    /// Multiplies every coefficient by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, ModelError> {
        Self::new(self.terms.iter().map(|t| FractionalTerm {
            coefficient: t.coefficient * factor,
            exponent: t.exponent,
        }))
    }

    /// Termwise product; exponents add and coefficients multiply.
    pub fn product(&self, other: &Self) -> Self {
        let terms = self.terms.iter().flat_map(|a| {
            other.terms.iter().map(move |b| FractionalTerm {
                coefficient: a.coefficient * b.coefficient,
                exponent: a.exponent + b.exponent,
            })
        });
        Self::new(terms).expect("product of finite non-empty polynomials")
    }
}

impl<'de> Deserialize<'de> for FractionalPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let terms = Vec::<FractionalTerm>::deserialize(de)?;
        Self::new(terms).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for FractionalPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().rev().enumerate() {
            let c = t.coefficient;
            if i > 0 {
                f.write_str(if c < 0.0 { " - " } else { " + " })?;
            } else if c < 0.0 {
                f.write_str("-")?;
            }
            if t.exponent == 0.0 {
                write!(f, "{}", c.abs())?;
            } else {
                write!(f, "{} s^{}", c.abs(), t.exponent)?;
            }
        }
        Ok(())
    }
}

/// `G(jω) = N(jω) / D(jω)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FractionalTF {
    #[serde(rename = "num")]
    numerator: FractionalPolynomial,
    #[serde(rename = "den")]
    denominator: FractionalPolynomial,
}

#[derive(Deserialize)]
struct RawTf {
    num: FractionalPolynomial,
    den: FractionalPolynomial,
}

impl<'de> Deserialize<'de> for FractionalTF {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let raw = RawTf::deserialize(de)?;
        Self::new(raw.num, raw.den).map_err(serde::de::Error::custom)
    }
}

impl FractionalTF {
    pub fn new(
        numerator: FractionalPolynomial,
        denominator: FractionalPolynomial,
    ) -> Result<Self, ModelError> {
        if denominator.is_zero() {
            return Err(ModelError::ZeroDenominator);
        }
        Ok(Self { numerator, denominator })
    }

    pub fn from_pairs(num: &[(f64, f64)], den: &[(f64, f64)]) -> Result<Self, ModelError> {
        Self::new(
            FractionalPolynomial::from_pairs(num)?,
            FractionalPolynomial::from_pairs(den)?,
        )
    }

    pub fn gain(k: f64) -> Result<Self, ModelError> {
        Self::from_pairs(&[(k, 0.0)], &[(1.0, 0.0)])
    }

    pub fn numerator(&self) -> &FractionalPolynomial {
        &self.numerator
    }

    pub fn denominator(&self) -> &FractionalPolynomial {
        &self.denominator
    }

    pub fn eval(&self, omega: f64) -> Result<Complex64, ModelError> {
        let den = self.denominator.eval(omega)?;
        let magnitude = den.norm();
        if magnitude < SINGULAR_FLOOR {
            return Err(ModelError::Singular { omega, magnitude });
        }
        Ok(self.numerator.eval(omega)? / den)
    }

    /// Same system with the numerator multiplied by `k`.
    pub fn with_gain(&self, k: f64) -> Result<Self, ModelError> {
        Self::new(self.numerator.scaled(k)?, self.denominator.clone())
    }

    /// Series connection `self · other`.
    pub fn series(&self, other: &Self) -> Self {
        Self {
            numerator: self.numerator.product(&other.numerator),
            denominator: self.denominator.product(&other.denominator),
        }
    }

    /// Highest numerator exponent minus highest denominator exponent.
    /// Negative means `|G| → 0` as `ω → ∞`.
    pub fn relative_degree(&self) -> f64 {
        self.numerator.highest().exponent - self.denominator.highest().exponent
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.relative_degree() < -EXPONENT_TOLERANCE
    }

    /// Limit of `G(jω)` as `ω → 0+`, from the lowest-exponent terms.
    pub fn dc_gain(&self) -> Result<f64, ModelError> {
        let n = self.numerator.lowest();
        let d = self.denominator.lowest();
        let diff = n.exponent - d.exponent;
        if n.coefficient == 0.0 || diff > EXPONENT_TOLERANCE {
            Ok(0.0)
        } else if diff < -EXPONENT_TOLERANCE {
            Err(ModelError::UnboundedDcGain { num: n.exponent, den: d.exponent })
        } else {
            Ok(n.coefficient / d.coefficient)
        }
    }

    /// Phase of the low-frequency asymptote `(b0/a0)·(jω)^(α0−β0)`.
    pub fn low_frequency_phase(&self) -> f64 {
        let n = self.numerator.lowest();
        let d = self.denominator.lowest();
        let sign = if (n.coefficient < 0.0) != (d.coefficient < 0.0) {
            std::f64::consts::PI
        } else {
            0.0
        };
        sign + (n.exponent - d.exponent) * FRAC_PI_2
    }
}

impl Mul for &FractionalTF {
    type Output = FractionalTF;

    fn mul(self, rhs: &FractionalTF) -> FractionalTF {
        self.series(rhs)
    }
}

impl fmt::Display for FractionalTF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({})", self.numerator, self.denominator)
    }
}

fn default_order() -> f64 {
    1.0
}

/// `K + Ti/(jω)^λ + Td·(jω)^δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PilDController {
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "Ti", default)]
    pub ti: f64,
    #[serde(rename = "Td", default)]
    pub td: f64,
    #[serde(default = "default_order")]
    pub lambda: f64,
    #[serde(default = "default_order")]
    pub delta: f64,
}

impl PilDController {
    pub fn new(k: f64, ti: f64, td: f64, lambda: f64, delta: f64) -> Result<Self, ModelError> {
        let c = Self { k, ti, td, lambda, delta };
        c.validate()?;
        Ok(c)
    }

    /// Classic PID (`λ = δ = 1`).
    pub fn pid(k: f64, ti: f64, td: f64) -> Result<Self, ModelError> {
        Self::new(k, ti, td, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        check_finite("K", self.k)?;
        for (name, value) in [
            ("Ti", self.ti),
            ("Td", self.td),
            ("lambda", self.lambda),
            ("delta", self.delta),
        ] {
            check_finite(name, value)?;
            if value < 0.0 {
                return Err(ModelError::Negative { name, value });
            }
        }
        Ok(())
    }

    /// Controller as a single fraction. With `Ti > 0` everything is put over
    /// `(jω)^λ`; with `Ti = 0` no integrator denominator is introduced.
    pub fn to_tf(&self) -> FractionalTF {
        let (num, den) = if self.ti == 0.0 {
            (vec![(self.k, 0.0), (self.td, self.delta)], vec![(1.0, 0.0)])
        } else {
            (
                vec![
                    (self.ti, 0.0),
                    (self.k, self.lambda),
                    (self.td, self.delta + self.lambda),
                ],
                vec![(1.0, self.lambda)],
            )
        };
        FractionalTF::from_pairs(&num, &den).expect("validated controller")
    }

    /// Direct evaluation of the summed form.
    pub fn eval(&self, omega: f64) -> Result<Complex64, ModelError> {
        let mut value = Complex64::new(self.k, 0.0) + eval_power(omega, self.delta)? * self.td;
        if self.ti != 0.0 {
            value += eval_power(omega, -self.lambda)? * self.ti;
        }
        Ok(value)
    }
}

/// `C·(((jω)/ωn)^(δ+λ) + 2ξ(jω)^λ/ωn + 1) / (jω)^λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactoredController {
    #[serde(rename = "C")]
    pub gain: f64,
    pub xi: f64,
    pub omega_n: f64,
    #[serde(default = "default_order")]
    pub lambda: f64,
    #[serde(default = "default_order")]
    pub delta: f64,
}

impl FactoredController {
    pub fn new(gain: f64, xi: f64, omega_n: f64, lambda: f64, delta: f64) -> Result<Self, ModelError> {
        let f = Self { gain, xi, omega_n, lambda, delta };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        check_finite("C", self.gain)?;
        check_finite("xi", self.xi)?;
        check_finite("omega_n", self.omega_n)?;
        if !(self.omega_n > 0.0) {
            return Err(ModelError::NonPositiveNaturalFrequency(self.omega_n));
        }
        for (name, value) in [("lambda", self.lambda), ("delta", self.delta)] {
            check_finite(name, value)?;
            if value < 0.0 {
                return Err(ModelError::Negative { name, value });
            }
        }
        Ok(())
    }

    /// Expands into the summed form: `K = 2Cξ/ωn`, `Ti = C`, `Td = C/ωn^(δ+λ)`.
    pub fn to_pild(&self) -> Result<PilDController, ModelError> {
        self.validate()?;
        let c = self.gain;
        PilDController::new(
            2.0 * c * self.xi / self.omega_n,
            c,
            c / self.omega_n.powf(self.delta + self.lambda),
            self.lambda,
            self.delta,
        )
    }
}

pub fn eval_polynomial(p: &FractionalPolynomial, omega: f64) -> Result<Complex64, ModelError> {
    p.eval(omega)
}

pub fn eval_tf(g: &FractionalTF, omega: f64) -> Result<Complex64, ModelError> {
    g.eval(omega)
}

pub fn controller_to_tf(c: &PilDController) -> FractionalTF {
    c.to_tf()
}

pub fn factored_to_pild(f: &FactoredController) -> Result<PilDController, ModelError> {
    f.to_pild()
}

/// Open loop `Gc·Gs`, re-canonicalized.
pub fn compose_open_loop(c: &PilDController, g: &FractionalTF) -> FractionalTF {
    c.to_tf().series(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq6() -> FractionalTF {
        FractionalTF::from_pairs(&[(1.0, 0.0)], &[(0.8, 2.2), (0.5, 0.9), (1.0, 0.0)]).unwrap()
    }

    fn eq7() -> PilDController {
        PilDController::new(50.0, 0.0, 5.326, 0.0, 1.286).unwrap()
    }

    fn close(a: Complex64, b: Complex64, rel: f64) -> bool {
        (a - b).norm() <= rel * b.norm().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn power_examples() {
        let p = eval_power(1.0, 1.0).unwrap();
        assert!(p.re.abs() < 1e-16 && (p.im - 1.0).abs() < 1e-16);
        assert_eq!(eval_power(1.0, 0.0).unwrap(), Complex64::new(1.0, 0.0));
        // 40-digit reference for e^{i·1.1π}
        let p = eval_power(1.0, 2.2).unwrap();
        let want = Complex64::new(-0.951_056_516_295_153_572_1, -0.309_016_994_374_947_424_1);
        assert!(close(p, want, 1e-15), "{p}");
    }

    #[test]
    fn power_rejects_bad_frequency() {
        assert!(matches!(eval_power(0.0, 1.0), Err(ModelError::NonPositiveFrequency(_))));
        assert!(matches!(eval_power(-2.0, 1.0), Err(ModelError::NonPositiveFrequency(_))));
        assert!(eval_power(f64::NAN, 1.0).is_err());
        assert!(eval_power(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn polynomial_examples() {
        let den = eq6().denominator().clone();
        let v = den.eval(1.0).unwrap();
        let want = Complex64::new(0.317_372_019_483_992_576_8, 0.246_630_574_797_610_923_8);
        assert!(close(v, want, 1e-14), "{v}");
        let tiny = den.eval(1e-12).unwrap();
        assert!(close(tiny, Complex64::new(1.0, 0.0), 1e-10));

        let single = FractionalPolynomial::from_pairs(&[(0.5, 0.9)]).unwrap();
        let a = 0.45 * std::f64::consts::PI;
        assert!(close(single.eval(1.0).unwrap(), Complex64::new(0.5 * a.cos(), 0.5 * a.sin()), 1e-15));
    }

    #[test]
    fn tf_examples() {
        let v = eq6().eval(1.0).unwrap();
        let want = Complex64::new(1.964_523_672_443_541_755, -1.526_636_164_479_842_364);
        assert!(close(v, want, 1e-14));
        assert_eq!(eq6().dc_gain().unwrap(), 1.0);
        let identity = FractionalTF::from_pairs(&[(1.0, 0.0)], &[(1.0, 0.0)]).unwrap();
        for w in [1e-3, 0.7, 1e4] {
            assert_eq!(identity.eval(w).unwrap(), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn singular_flag() {
        let g = FractionalTF::from_pairs(&[(1.0, 0.0)], &[(1e-200, 0.0)]).unwrap();
        assert!(g.eval(1.0).is_ok());
        let g = FractionalTF::from_pairs(&[(1.0, 0.0)], &[(1e-200, 2.0)]).unwrap();
        assert!(matches!(g.eval(1e-60), Err(ModelError::Singular { .. })));
    }

    #[test]
    fn zero_denominator_rejected() {
        assert_eq!(
            FractionalTF::from_pairs(&[(1.0, 0.0)], &[(0.0, 1.0)]).unwrap_err(),
            ModelError::ZeroDenominator
        );
        assert_eq!(
            FractionalTF::from_pairs(&[(1.0, 0.0)], &[(1.0, 1.0), (-1.0, 1.0)]).unwrap_err(),
            ModelError::ZeroDenominator
        );
    }

    #[test]
    fn canonical_merge() {
        let p = FractionalPolynomial::from_pairs(&[(1.0, 2.0), (2.0, 0.0), (3.0, 2.0 + 1e-13), (0.0, 1.0)])
            .unwrap();
        assert_eq!(
            p.terms(),
            &[FractionalTerm::new(2.0, 0.0).unwrap(), FractionalTerm::new(4.0, 2.0).unwrap()]
        );
        // a near-duplicate beyond the tolerance stays separate
        let p = FractionalPolynomial::from_pairs(&[(1.0, 1.0), (1.0, 1.0 + 1e-9)]).unwrap();
        assert_eq!(p.terms().len(), 2);
        let z = FractionalPolynomial::from_pairs(&[(1.0, 0.5), (-1.0, 0.5)]).unwrap();
        assert_eq!(z.terms(), &[FractionalTerm::new(0.0, 0.5).unwrap()]);
        assert!(FractionalPolynomial::new(Vec::new()).is_err());
        assert!(FractionalPolynomial::from_pairs(&[(f64::NAN, 0.0)]).is_err());
    }

    #[test]
    fn controller_examples() {
        let tf = eq7().to_tf();
        assert_eq!(tf, FractionalTF::from_pairs(&[(50.0, 0.0), (5.326, 1.286)], &[(1.0, 0.0)]).unwrap());
        assert_eq!(tf.dc_gain().unwrap(), 50.0);

        let pid = PilDController::pid(1.0, 1.0, 1.0).unwrap().to_tf();
        assert_eq!(pid, FractionalTF::from_pairs(&[(1.0, 0.0), (1.0, 1.0), (1.0, 2.0)], &[(1.0, 1.0)]).unwrap());

        for (l, d) in [(0.3, 1.7), (1.0, 1.0), (0.0, 0.0)] {
            let p = PilDController::new(2.0, 0.0, 0.0, l, d).unwrap().to_tf();
            assert_eq!(p, FractionalTF::gain(2.0).unwrap());
        }
    }

    #[test]
    fn controller_tf_matches_summed_form() {
        let c = PilDController::new(1.3, 0.7, 0.2, 0.6, 1.1).unwrap();
        for w in [0.01, 0.7, 3.0, 250.0] {
            assert!(close(c.to_tf().eval(w).unwrap(), c.eval(w).unwrap(), 1e-13));
        }
    }

    #[test]
    fn controller_validation() {
        assert!(matches!(PilDController::new(1.0, -1.0, 0.0, 1.0, 1.0), Err(ModelError::Negative { name: "Ti", .. })));
        assert!(matches!(PilDController::new(1.0, 1.0, 0.0, -0.5, 1.0), Err(ModelError::Negative { name: "lambda", .. })));
        assert!(FactoredController::new(1.0, 0.8, 0.0, 1.0, 1.0).is_err());
        assert!(FactoredController::new(1.0, 0.8, -1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn factored_examples() {
        let c = FactoredController::new(1.0, 0.5, 1.0, 1.0, 1.0).unwrap().to_pild().unwrap();
        assert_eq!((c.k, c.ti, c.td), (1.0, 1.0, 1.0));
        let c = FactoredController::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap().to_pild().unwrap();
        assert_eq!(c.k, 2.0);
    }

    #[test]
    fn factored_round_trip_matches_direct_form() {
        let f = FactoredController::new(2.5, 0.8, 3.0, 0.7, 1.2).unwrap();
        let w = 0.7;
        let s = |e: f64| eval_power(w, e).unwrap();
        let direct = (eval_power(w / f.omega_n, f.delta + f.lambda).unwrap()
            + s(f.lambda) * (2.0 * f.xi / f.omega_n)
            + 1.0)
            * f.gain
            / s(f.lambda);
        let via = f.to_pild().unwrap().to_tf().eval(w).unwrap();
        assert!(close(via, direct, 1e-12), "{via} vs {direct}");
    }

    #[test]
    fn compose_examples() {
        let g = eq6();
        let p = PilDController::new(1.0, 0.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(compose_open_loop(&p, &g), g);

        let open = compose_open_loop(&eq7(), &g);
        assert_eq!(
            open,
            FractionalTF::from_pairs(&[(50.0, 0.0), (5.326, 1.286)], &[(0.8, 2.2), (0.5, 0.9), (1.0, 0.0)]).unwrap()
        );

        let c = PilDController::new(1.3, 0.7, 0.2, 0.6, 1.1).unwrap();
        let open = compose_open_loop(&c, &g);
        let want = c.to_tf().eval(2.0).unwrap() * g.eval(2.0).unwrap();
        assert!(close(open.eval(2.0).unwrap(), want, 1e-12));
    }

    #[test]
    fn dc_gain_limits() {
        let integrator = FractionalTF::from_pairs(&[(1.0, 0.0)], &[(1.0, 0.5)]).unwrap();
        assert!(matches!(integrator.dc_gain(), Err(ModelError::UnboundedDcGain { .. })));
        let diff = FractionalTF::from_pairs(&[(1.0, 1.0)], &[(1.0, 0.0)]).unwrap();
        assert_eq!(diff.dc_gain().unwrap(), 0.0);
    }

    #[test]
    fn json_schema() {
        let json = serde_json::to_string(&eq6()).unwrap();
        assert_eq!(
            json,
            r#"{"num":[{"c":1.0,"e":0.0}],"den":[{"c":1.0,"e":0.0},{"c":0.5,"e":0.9},{"c":0.8,"e":2.2}]}"#
        );
        let back: FractionalTF = serde_json::from_str(&json).unwrap();
        assert_eq!(back, eq6());
        let unsorted: FractionalTF =
            serde_json::from_str(r#"{"num":[{"c":1,"e":0}],"den":[{"c":0.8,"e":2.2},{"c":1,"e":0}]}"#).unwrap();
        assert_eq!(unsorted.denominator().terms()[0].exponent, 0.0);
        assert!(serde_json::from_str::<FractionalTF>(r#"{"num":[{"c":1,"e":0}],"den":[{"c":0,"e":0}]}"#).is_err());

        let c: PilDController = serde_json::from_str(r#"{"K":1,"Ti":0,"Td":0}"#).unwrap();
        assert_eq!(c.to_tf(), FractionalTF::gain(1.0).unwrap());
        let c: PilDController =
            serde_json::from_str(r#"{"K":50.0,"Ti":0,"Td":5.326,"lambda":0,"delta":1.286}"#).unwrap();
        assert_eq!(c, eq7());
    }
}
