//! Low-power enlargement certificate.
//!
//! Fix a Pareto point of the no-feedback region (split `θ`) and ask whether
//! some zero-forcing scheme dominates it as `P → 0⁺`. Both sides agree at
//! `P = 0`, so it is enough to compare first derivatives in `P`. After the
//! change of variables
//!
//! ```text
//! a₁ = −γ₁·σ̂₁/P,   a₂ = γ₂·σ̂₂/P,   μ = (θ′/θ − 1)/P
//! ```
//!
//! the receiver-1 condition is met with equality by [`mu_choice`], and the
//! receiver-2 condition with the best `a₁, a₂` ([`closed_form_a`]) becomes
//! `g(x) < 0` at `x = θ/(1 − θ)`. [`x_star`] minimizes `g`, and
//! `g(x*) < 0` is exactly the complement of the threshold condition in
//! [`crate::classifier`].
//!
//! Apart from [`transform`], which is a plain change of variables, every
//! function here works in canonical labels (`σ₁² ≤ σ₂²`).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{canonical, validate, ChannelParams, SchemeParams};
use crate::zf_scheme::mmse_variance;

/// Scheme knobs expressed in the low-power coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transformed {
    pub a1: f64,
    pub a2: f64,
    pub mu: f64,
}

fn check_interior(theta: f64) -> Result<()> {
    if theta == 0.0 {
        return Err(Error::ThetaZero);
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::ThetaOutOfRange(theta));
    }
    Ok(())
}

fn hat_sigma(sigma_sq: f64, sigma_fb_sq: f64) -> f64 {
    mmse_variance(sigma_sq, sigma_fb_sq).sqrt()
}

/// Maps `(θ′, γ₁, γ₂)` at power `P` to `(a₁, a₂, μ)` relative to the
/// no-feedback split `theta`.
pub fn transform(scheme: &SchemeParams, params: &ChannelParams, theta: f64) -> Result<Transformed> {
    let p = validate(*params)?;
    scheme.validate()?;
    check_interior(theta)?;
    let h1 = hat_sigma(p.sigma1_sq, p.sigma_fb1_sq);
    let h2 = hat_sigma(p.sigma2_sq, p.sigma_fb2_sq);
    Ok(Transformed {
        a1: -scheme.gamma1 * h1 / p.power,
        a2: scheme.gamma2 * h2 / p.power,
        mu: (scheme.theta_prime / theta - 1.0) / p.power,
    })
}

/// Inverse of [`transform`] at power `params.power`. Returns the raw
/// `(θ′, γ₁, γ₂)`; `θ′` may fall outside `[0, 1]` when `μ·P` is large.
/// A weight whose feedback link is absent is inert and comes back as 0.
pub fn untransform(params: &ChannelParams, theta: f64, t: &Transformed) -> (f64, f64, f64) {
    let h1 = hat_sigma(params.sigma1_sq, params.sigma_fb1_sq);
    let h2 = hat_sigma(params.sigma2_sq, params.sigma_fb2_sq);
    let power = params.power;
    let gamma1 = if h1 > 0.0 { -t.a1 * power / h1 } else { 0.0 };
    let gamma2 = if h2 > 0.0 { t.a2 * power / h2 } else { 0.0 };
    (theta * (1.0 + t.mu * power), gamma1, gamma2)
}

/// Offset `μ` that satisfies the receiver-1 derivative condition with
/// equality.
pub fn mu_choice(params: &ChannelParams, theta: f64, a1: f64, a2: f64) -> Result<f64> {
    check_interior(theta)?;
    let (p, _) = canonical(params)?;
    let h1 = hat_sigma(p.sigma1_sq, p.sigma_fb1_sq);
    Ok(theta / (2.0 * p.sigma1_sq) + (a1 * a1 + a2 * a2) / 2.0 - a1 * h1 / p.sigma1_sq)
}

/// `2μσ₁² − (θ + (a₁² + a₂²)σ₁² − 2a₁σ̂₁)`: nonnegative when the receiver-1
/// derivative condition holds.
pub fn first_order_slack(params: &ChannelParams, theta: f64, t: &Transformed) -> Result<f64> {
    check_interior(theta)?;
    let (p, _) = canonical(params)?;
    let h1 = hat_sigma(p.sigma1_sq, p.sigma_fb1_sq);
    let s = t.a1 * t.a1 + t.a2 * t.a2;
    Ok(2.0 * t.mu * p.sigma1_sq - (theta + s * p.sigma1_sq - 2.0 * t.a1 * h1))
}

/// `(1−θ)(2a₂σ̂₂ − (a₁² + a₂²)σ₂²) − (1−θ)(1−3θ) − 2θμσ₂²`: positive when
/// the receiver-2 derivative condition holds.
pub fn second_order_slack(params: &ChannelParams, theta: f64, t: &Transformed) -> Result<f64> {
    check_interior(theta)?;
    let (p, _) = canonical(params)?;
    let h2 = hat_sigma(p.sigma2_sq, p.sigma_fb2_sq);
    let s = t.a1 * t.a1 + t.a2 * t.a2;
    let one_minus = 1.0 - theta;
    Ok(one_minus * (2.0 * t.a2 * h2 - s * p.sigma2_sq)
        - one_minus * (1.0 - 3.0 * theta)
        - 2.0 * theta * t.mu * p.sigma2_sq)
}

/// Maximizing choice of `(a₁, a₂)` for the receiver-2 condition once `μ`
/// comes from [`mu_choice`]. Absent feedback links give 0.
pub fn closed_form_a(params: &ChannelParams, theta: f64) -> Result<(f64, f64)> {
    check_interior(theta)?;
    let (p, _) = canonical(params)?;
    let a1 = if p.sigma_fb1_sq.is_infinite() {
        0.0
    } else {
        theta / (p.sigma1_sq + p.sigma_fb1_sq).sqrt()
    };
    let a2 = if p.sigma_fb2_sq.is_infinite() {
        0.0
    } else {
        (1.0 - theta) / (p.sigma2_sq + p.sigma_fb2_sq).sqrt()
    };
    Ok((a1, a2))
}

/// `σ²_fb/(σ²(σ² + σ²_fb))`, which tends to `1/σ²` as the feedback noise grows.
fn g_coefficient(sigma_sq: f64, sigma_fb_sq: f64) -> f64 {
    if sigma_fb_sq.is_infinite() {
        1.0 / sigma_sq
    } else {
        sigma_fb_sq / (sigma_sq * (sigma_sq + sigma_fb_sq))
    }
}

/// Coefficients `(c₁, c₂, c₀)` with `g(x) = c₁·x + c₂/x − c₀`.
pub fn g_coefficients(params: &ChannelParams) -> Result<(f64, f64, f64)> {
    let (p, _) = canonical(params)?;
    Ok((
        g_coefficient(p.sigma1_sq, p.sigma_fb1_sq),
        g_coefficient(p.sigma2_sq, p.sigma_fb2_sq),
        2.0 / p.sigma2_sq,
    ))
}

/// The receiver-2 condition as a function of `x = θ/(1 − θ)`; enlargement at
/// low power is possible iff it is negative somewhere on `x > 0`.
pub fn g(params: &ChannelParams, x: f64) -> Result<f64> {
    if !(x > 0.0) || x.is_infinite() {
        return Err(Error::NonPositiveX(x));
    }
    let (c1, c2, c0) = g_coefficients(params)?;
    Ok(x * c1 + c2 / x - c0)
}

/// Minimizer of [`g`] over `x > 0`.
pub fn x_star(params: &ChannelParams) -> Result<f64> {
    let (p, _) = canonical(params)?;
    let gain = |s: f64, f: f64| if f.is_infinite() { 1.0 } else { 1.0 + s / f };
    let ratio = gain(p.sigma1_sq, p.sigma_fb1_sq) / gain(p.sigma2_sq, p.sigma_fb2_sq);
    Ok((ratio * (p.sigma1_sq / p.sigma2_sq)).sqrt())
}

/// Everything needed to reproduce the low-power argument for one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowPowerCertificate {
    /// Pareto index of the no-feedback point being beaten.
    pub theta: f64,
    pub a1: f64,
    pub a2: f64,
    pub mu: f64,
    pub g_at_xstar: f64,
    pub x_star: f64,
    /// `g_at_xstar < 0`.
    pub feasible: bool,
}

pub fn certify(params: &ChannelParams) -> Result<LowPowerCertificate> {
    let (p, _) = canonical(params)?;
    let xs = x_star(&p)?;
    let theta = xs / (1.0 + xs);
    let (a1, a2) = closed_form_a(&p, theta)?;
    let mu = mu_choice(&p, theta, a1, a2)?;
    let g_at_xstar = g(&p, xs)?;
    Ok(LowPowerCertificate {
        theta,
        a1,
        a2,
        mu,
        g_at_xstar,
        x_star: xs,
        feasible: g_at_xstar < 0.0,
    })
}
