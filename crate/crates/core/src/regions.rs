//! Boundaries of the no-feedback capacity region (superposition coding) and
//! of the region obtained when the weak receiver's feedback is also heard by
//! the strong receiver.
//!
//! Every operation canonicalizes its channel first, so `r1` always belongs to
//! the stronger receiver (smaller forward noise variance).

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{canonical, BoundarySample, ChannelParams, RatePair};

/// `½·log₂(1 + x)`, accurate for small `x`.
pub(crate) fn half_log2_1p(x: f64) -> f64 {
    0.5 * x.ln_1p() / LN_2
}

fn check_theta(theta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&theta) {
        Ok(())
    } else {
        Err(Error::ThetaOutOfRange(theta))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    NoFeedback,
    WeakFeedback,
}

/// Rate pair on the no-feedback frontier for power split `theta`.
pub fn nofb_point(params: &ChannelParams, theta: f64) -> Result<BoundarySample> {
    check_theta(theta)?;
    let (p, _) = canonical(params)?;
    Ok(superposition_point(&p, p.sigma1_sq, theta))
}

/// Shared frontier evaluation; `strong_noise` is the effective noise seen by
/// the receiver that decodes both layers.
fn superposition_point(p: &ChannelParams, strong_noise: f64, theta: f64) -> BoundarySample {
    let power = p.power;
    let r1 = half_log2_1p(theta * power / strong_noise);
    let r2 = half_log2_1p((1.0 - theta) * power / (theta * power + p.sigma2_sq));
    BoundarySample {
        theta,
        rates: RatePair { r1, r2 },
    }
}

/// Single-user capacity of the stronger receiver.
pub fn strong_user_capacity(params: &ChannelParams) -> Result<f64> {
    let (p, _) = canonical(params)?;
    Ok(half_log2_1p(p.power / p.sigma1_sq))
}

/// Inverts the first frontier coordinate: the split `theta` whose frontier
/// point has `r1` as its first rate.
pub fn nofb_theta_for_r1(params: &ChannelParams, r1: f64) -> Result<f64> {
    let (p, _) = canonical(params)?;
    theta_for_r1(&p, r1)
}

fn theta_for_r1(p: &ChannelParams, r1: f64) -> Result<f64> {
    let capacity = half_log2_1p(p.power / p.sigma1_sq);
    if !(r1 >= 0.0) || r1 > capacity {
        return Err(Error::R1Infeasible { r1, capacity });
    }
    let theta = p.sigma1_sq * (2.0 * LN_2 * r1).exp_m1() / p.power;
    Ok(theta.min(1.0))
}

/// Largest `r2` on the no-feedback frontier above abscissa `r1`.
pub fn nofb_frontier_r2(params: &ChannelParams, r1: f64) -> Result<f64> {
    let (p, _) = canonical(params)?;
    let theta = theta_for_r1(&p, r1)?;
    Ok(superposition_point(&p, p.sigma1_sq, theta).rates.r2)
}

/// Vertical distance of a rate pair above the no-feedback frontier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Excess {
    /// `r2` minus the frontier value at `r1`; positive means outside.
    Finite(f64),
    /// `r1` exceeds what receiver 1 can get even alone.
    Infeasible,
}

impl Excess {
    /// Numeric view. `Infeasible` maps to `-inf` so that it can never count
    /// as evidence of enlargement: an achievable pair cannot have such an
    /// `r1`, so reaching it means the inputs were not an achievable pair.
    pub fn value(&self) -> f64 {
        match self {
            Excess::Finite(v) => *v,
            Excess::Infeasible => f64::NEG_INFINITY,
        }
    }

    pub fn is_outside(&self) -> bool {
        self.value() > 0.0
    }
}

/// How far `pair` sits above the no-feedback frontier.
///
/// The pair is given in the caller's receiver labels; if canonicalization
/// swaps the receivers the pair is swapped with them.
pub fn excess_rate(params: &ChannelParams, pair: RatePair) -> Result<Excess> {
    let (p, swapped) = canonical(params)?;
    let pair = if swapped { pair.swapped() } else { pair };
    Ok(match theta_for_r1(&p, pair.r1) {
        Ok(theta) => Excess::Finite(pair.r2 - superposition_point(&p, p.sigma1_sq, theta).rates.r2),
        Err(_) => Excess::Infeasible,
    })
}

/// Noise of the strong receiver after maximum-ratio combining its own output
/// with the weak receiver's noisy feedback signal.
///
/// Accepts `sigma_fb2_sq = 0` (harmonic combination) and `+inf` (no help).
pub fn sigma_comb(sigma1_sq: f64, sigma2_sq: f64, sigma_fb2_sq: f64) -> f64 {
    if sigma_fb2_sq.is_infinite() {
        return sigma1_sq;
    }
    sigma1_sq * (sigma2_sq + sigma_fb2_sq) / (sigma1_sq + sigma2_sq + sigma_fb2_sq)
}

pub fn weakfb_sigma_comb(params: &ChannelParams) -> Result<f64> {
    let (p, _) = canonical(params)?;
    Ok(sigma_comb(p.sigma1_sq, p.sigma2_sq, p.sigma_fb2_sq))
}

/// Frontier point of the region where receiver 1 also observes receiver 2's
/// feedback. Uses `½·log₂` like the no-feedback region, so the two coincide
/// when `sigma_fb2_sq` is infinite.
pub fn weakfb_point(params: &ChannelParams, theta: f64) -> Result<BoundarySample> {
    check_theta(theta)?;
    let (p, _) = canonical(params)?;
    let comb = sigma_comb(p.sigma1_sq, p.sigma2_sq, p.sigma_fb2_sq);
    Ok(superposition_point(&p, comb, theta))
}

/// `n` frontier samples at `theta = k/(n-1)`.
pub fn sample_boundary(
    params: &ChannelParams,
    kind: RegionKind,
    n: usize,
) -> Result<Vec<BoundarySample>> {
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    let (p, _) = canonical(params)?;
    let noise = match kind {
        RegionKind::NoFeedback => p.sigma1_sq,
        RegionKind::WeakFeedback => sigma_comb(p.sigma1_sq, p.sigma2_sq, p.sigma_fb2_sq),
    };
    let last = (n - 1) as f64;
    Ok((0..n)
        .map(|k| superposition_point(&p, noise, k as f64 / last))
        .collect())
}
