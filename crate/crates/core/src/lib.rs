//! Modelling and frequency-domain analysis of fractional-order control
//! systems.
//!
//! * [`model`]: fractional transfer functions and PI^λD^δ controllers.
//! * [`response`]: Bode sweeps, phase unwrapping, gain/phase margins.
//! * [`stability`]: Nyquist contour and critical-point encirclement test.
//! * [`identify`]: weighted least-squares fitting to measured responses.

pub mod identify;
pub mod model;
pub mod response;
pub mod stability;

pub use model::{
    compose_open_loop, controller_to_tf, eval_polynomial, eval_power, eval_tf, factored_to_pild,
    FactoredController, FractionalPolynomial, FractionalTF, FractionalTerm, ModelError,
    PilDController,
};
pub use num_complex::Complex64;
pub use response::{margins, sweep, unwrap_phase, FrequencyResponseSet, FrequencySweep, Margins};
pub use stability::{assess_stability, nyquist_curve, winding_number, NyquistCurve, StabilityVerdict, Verdict};
