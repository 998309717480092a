//! Closed-form analysis of the two-slot zero-forcing linear feedback scheme.
//!
//! Each block carries one symbol `u` for receiver 1 and one symbol `v` for
//! receiver 2 over two channel uses:
//!
//! ```text
//! X_odd  = u + v
//! X_even = √α · (u − v + γ₁·Ẑ₁ + γ₂·Ẑ₂)
//! ```
//!
//! where `Ẑⱼ` is the transmitter's MMSE estimate of receiver `j`'s odd-slot
//! noise from its noisy feedback. Receiver 1 adds its two outputs and
//! receiver 2 subtracts them, which cancels the other user's symbol. The
//! resulting point-to-point channels have the effective noise variances
//! computed here; the block structure halves the rates.
//!
//! Nothing in this module canonicalizes: `γ₁` always refers to receiver 1 of
//! the caller's labelling.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{validate, ChannelParams, RatePair, SchemeParams};
use crate::regions::half_log2_1p;

/// Variance of the MMSE estimate of a noise sample of variance `sigma_sq`
/// observed through additive noise of variance `sigma_fb_sq`.
///
/// Infinite feedback noise gives 0; noiseless feedback gives `sigma_sq`.
pub fn mmse_variance(sigma_sq: f64, sigma_fb_sq: f64) -> f64 {
    if sigma_fb_sq.is_infinite() {
        return 0.0;
    }
    sigma_sq * (sigma_sq / (sigma_sq + sigma_fb_sq))
}

/// Quantities derived from a channel and a choice of scheme knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedScheme {
    /// Even-slot scaling that keeps the even-slot power at `P`.
    pub alpha: f64,
    pub hat_sigma1_sq: f64,
    pub hat_sigma2_sq: f64,
    /// Raw weights on the received feedback signals.
    pub beta1: f64,
    pub beta2: f64,
    pub eff_var1: f64,
    pub eff_var2: f64,
}

impl DerivedScheme {
    /// Power spent on the noise estimates in the even slot, before scaling.
    pub fn feedback_power(&self, scheme: &SchemeParams) -> f64 {
        scheme.gamma1 * scheme.gamma1 * self.hat_sigma1_sq
            + scheme.gamma2 * scheme.gamma2 * self.hat_sigma2_sq
    }
}

/// Evaluates `α`, the estimate variances, the raw feedback weights and the
/// effective noise variances after zero forcing.
pub fn derive(params: &ChannelParams, scheme: &SchemeParams) -> Result<DerivedScheme> {
    let p = validate(*params)?;
    scheme.validate()?;
    Ok(derive_unchecked(&p, scheme))
}

pub(crate) fn derive_unchecked(p: &ChannelParams, scheme: &SchemeParams) -> DerivedScheme {
    let (g1, g2) = (scheme.gamma1, scheme.gamma2);
    let h1 = mmse_variance(p.sigma1_sq, p.sigma_fb1_sq);
    let h2 = mmse_variance(p.sigma2_sq, p.sigma_fb2_sq);
    let zeta = g1 * g1 * h1 + g2 * g2 * h2;
    let inv_alpha = 1.0 + zeta / p.power;

    let eff_var1 = p.sigma1_sq * (1.0 + inv_alpha) + (g1 * g1 + 2.0 * g1) * h1 + g2 * g2 * h2;
    let eff_var2 = p.sigma2_sq * (1.0 + inv_alpha) + (g2 * g2 - 2.0 * g2) * h2 + g1 * g1 * h1;

    DerivedScheme {
        alpha: 1.0 / inv_alpha,
        hat_sigma1_sq: h1,
        hat_sigma2_sq: h2,
        beta1: g1 * h1 / p.sigma1_sq,
        beta2: g2 * h2 / p.sigma2_sq,
        eff_var1,
        eff_var2,
    }
}

fn checked_effective(d: &DerivedScheme) -> Result<()> {
    if !(d.eff_var1 > 0.0) {
        return Err(Error::NegativeEffectiveVariance {
            receiver: 1,
            value: d.eff_var1,
        });
    }
    if !(d.eff_var2 > 0.0) {
        return Err(Error::NegativeEffectiveVariance {
            receiver: 2,
            value: d.eff_var2,
        });
    }
    Ok(())
}

/// Achievable rates of the scheme, in bits per channel use.
pub fn scheme_rates(params: &ChannelParams, scheme: &SchemeParams) -> Result<RatePair> {
    let d = derive(params, scheme)?;
    checked_effective(&d)?;
    Ok(rates_from(params.power, scheme, &d))
}

fn rates_from(power: f64, scheme: &SchemeParams, d: &DerivedScheme) -> RatePair {
    // ¼·log₂(1 + snr): two channel uses per symbol pair.
    let r1 = 0.5 * half_log2_1p(4.0 * scheme.theta_prime * power / d.eff_var1);
    let r2 = 0.5 * half_log2_1p(4.0 * (1.0 - scheme.theta_prime) * power / d.eff_var2);
    RatePair { r1, r2 }
}

/// Rate of the point-to-point layer that carries the rest of receiver 2's
/// message with power `P − ε`, decoded first while treating the feedback
/// layer as noise.
pub fn bulk_layer_rate(params: &ChannelParams, epsilon: f64) -> f64 {
    half_log2_1p((params.power - epsilon) / (epsilon + params.sigma2_sq))
}

/// Message-splitting extension: the feedback scheme runs at power `epsilon`
/// and the remaining `P − epsilon` carries extra rate for receiver 2.
pub fn bootstrap_rates(
    params: &ChannelParams,
    epsilon: f64,
    scheme: &SchemeParams,
) -> Result<RatePair> {
    let p = validate(*params)?;
    if !(epsilon > 0.0 && epsilon <= p.power) {
        return Err(Error::EpsilonOutOfRange {
            epsilon,
            power: p.power,
        });
    }
    let inner = scheme_rates(&p.with_power(epsilon), scheme)?;
    Ok(RatePair {
        r1: inner.r1,
        r2: inner.r2 + bulk_layer_rate(&p, epsilon),
    })
}
