//! Finite-power search for an explicit rate pair outside the no-feedback
//! region.
//!
//! The feedback scheme runs at a small power `ε` while the remaining `P − ε`
//! carries a plain layer for the weak receiver. Candidates are seeded from
//! the low-power certificate at `ε = P·2⁻ᵏ` and refined with Nelder-Mead over
//! `(a₁, a₂, μ, k)`, the low-power coordinates of `(γ₁, γ₂, θ′, ε)`.
//!
//! Excess values of genuine witnesses can be as small as a few ulps of the
//! rates involved, and on channels where feedback cannot help the plain
//! floating-point excess still comes out positive by rounding. Every candidate
//! is therefore scored with a rearranged formula that carries a rigorous-style
//! rounding bound, and only candidates whose excess beats the bound are
//! reported.
//!
//! Search and witnesses use canonical labels (`σ₁² ≤ σ₂²`).

use std::cmp::Ordering;
use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lowpower::{certify, untransform, Transformed};
use crate::model::{canonical, ChannelParams, RatePair, SchemeParams};
use crate::optim::nelder_mead;
use crate::regions::excess_rate;
use crate::zf_scheme::{bootstrap_rates, derive_unchecked};

const UNIT: f64 = f64::EPSILON;
const MATCH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SearchBudget {
    /// Seeds are tried at `ε = P·2⁻ᵏ` for `k = 0..=max_halvings`.
    pub max_halvings: u32,
    /// Number of best seeds refined locally.
    pub multistarts: usize,
    /// Nelder-Mead iterations per refinement.
    pub max_iters: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_halvings: 40,
            multistarts: 5,
            max_iters: 500,
        }
    }
}

impl SearchBudget {
    pub fn validate(&self) -> Result<()> {
        if self.max_halvings == 0 {
            return Err(Error::InvalidBudget("max_halvings must be positive".into()));
        }
        if self.max_halvings > 1000 {
            return Err(Error::InvalidBudget("max_halvings must be at most 1000".into()));
        }
        if self.multistarts == 0 {
            return Err(Error::InvalidBudget("multistarts must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidBudget("max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// Rate pair strictly outside the no-feedback region, with everything needed
/// to check it independently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnlargementWitness {
    /// Power of the feedback layer, in `(0, P]`.
    pub epsilon: f64,
    pub scheme: SchemeParams,
    /// `bootstrap_rates(params, epsilon, scheme)` in canonical labels.
    pub rates: RatePair,
    /// Distance above the no-feedback frontier, evaluated without
    /// cancellation.
    pub excess: f64,
    /// Bound on the rounding error in `excess`; `excess > excess_bound`.
    pub excess_bound: f64,
    /// The caller's receivers were relabelled to make receiver 1 the
    /// stronger one.
    pub swapped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SearchOutcome {
    Found(EnlargementWitness),
    /// Largest excess seen among evaluated candidates, possibly negative.
    NotFound { best_excess: f64 },
}

impl SearchOutcome {
    pub fn witness(&self) -> Option<&EnlargementWitness> {
        match self {
            SearchOutcome::Found(w) => Some(w),
            SearchOutcome::NotFound { .. } => None,
        }
    }
}

/// Excess of the bootstrap pair together with a bound on its rounding error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifiedExcess {
    pub value: f64,
    pub bound: f64,
}

impl CertifiedExcess {
    pub fn is_certain(&self) -> bool {
        self.value > self.bound
    }
}

/// Excess of `bootstrap_rates(p, epsilon, scheme)` over the no-feedback
/// frontier for canonical `p`.
///
/// Receiver 1's feedback-layer rate pins the frontier point at strong-layer
/// power `s = σ₁²·q₁/(√(1+q₁) + 1)`, where `qⱼ` is the feedback-layer SNR.
/// The bulk layer and the frontier share `P + σ₂²`, which cancels, leaving
///
/// ```text
/// excess = ¼·log₂(1 + q₂) − ½·log₂(1 + (ε − s)/(s + σ₂²))
/// ```
///
/// Returns `None` when the scheme is degenerate at this `epsilon`.
pub fn certified_excess(p: &ChannelParams, epsilon: f64, scheme: &SchemeParams) -> Option<CertifiedExcess> {
    let local = p.with_power(epsilon);
    let d = derive_unchecked(&local, scheme);
    let (e1, e2) = (d.eff_var1, d.eff_var2);
    if !(e1 > 0.0 && e2 > 0.0) {
        return None;
    }
    let (g1, g2) = (scheme.gamma1, scheme.gamma2);
    let zeta_over = (g1 * g1 * d.hat_sigma1_sq + g2 * g2 * d.hat_sigma2_sq) / epsilon;
    let mass1 = 2.0 * p.sigma1_sq
        + p.sigma1_sq * zeta_over
        + (g1 * g1 + 2.0 * g1.abs()) * d.hat_sigma1_sq
        + g2 * g2 * d.hat_sigma2_sq;
    let mass2 = 2.0 * p.sigma2_sq
        + p.sigma2_sq * zeta_over
        + (g2 * g2 + 2.0 * g2.abs()) * d.hat_sigma2_sq
        + g1 * g1 * d.hat_sigma1_sq;
    let kappa1 = mass1 / e1;
    let kappa2 = mass2 / e2;

    let q1 = 4.0 * scheme.theta_prime * epsilon / e1;
    let q2 = 4.0 * (1.0 - scheme.theta_prime) * epsilon / e2;

    let r21 = q2.ln_1p() / (4.0 * LN_2);
    let er21 = UNIT * (6.0 + kappa2) * r21;

    let s = p.sigma1_sq * q1 / ((1.0 + q1).sqrt() + 1.0);
    let es = UNIT * (8.0 + kappa1) * s;

    let denom = s + p.sigma2_sq;
    let dd = (epsilon - s) / denom;
    let ed = 3.0 * UNIT * (epsilon + s) / denom + es / denom * (1.0 + dd.abs());

    let t = dd.ln_1p() / (2.0 * LN_2);
    let et = ed / (1.0 + dd) / (2.0 * LN_2) + 2.0 * UNIT * t.abs();

    let value = r21 - t;
    let bound = 4.0 * (er21 + et);
    (value.is_finite() && bound.is_finite()).then_some(CertifiedExcess { value, bound })
}

/// A fully evaluated candidate.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    epsilon: f64,
    scheme: SchemeParams,
    excess: CertifiedExcess,
}

impl Candidate {
    /// Better candidates compare greater.
    fn rank(&self, other: &Self) -> Ordering {
        self.excess
            .value
            .total_cmp(&other.excess.value)
            .then(other.epsilon.total_cmp(&self.epsilon))
            .then(other.scheme.theta_prime.total_cmp(&self.scheme.theta_prime))
            .then(other.scheme.gamma1.total_cmp(&self.scheme.gamma1))
            .then(other.scheme.gamma2.total_cmp(&self.scheme.gamma2))
    }
}

/// Low-power coordinates shared by all candidates of one search.
struct Chart {
    params: ChannelParams,
    theta: f64,
    max_k: f64,
}

impl Chart {
    fn candidate(&self, t: &Transformed, k: f64) -> Option<Candidate> {
        if !(0.0..=self.max_k).contains(&k) {
            return None;
        }
        let epsilon = self.params.power * (-k).exp2();
        if !(epsilon > 0.0 && epsilon <= self.params.power) {
            return None;
        }
        let local = self.params.with_power(epsilon);
        let (tp, g1, g2) = untransform(&local, self.theta, t);
        let scheme = SchemeParams::new(tp.clamp(0.0, 1.0), g1, g2).ok()?;
        let excess = certified_excess(&self.params, epsilon, &scheme)?;
        Some(Candidate {
            epsilon,
            scheme,
            excess,
        })
    }
}

/// Which of `(a₁, a₂, μ, k)` the refinement moves; a weight with no
/// feedback link behind it is inert.
struct Layout {
    a1: bool,
    a2: bool,
}

impl Layout {
    fn pack(&self, t: &Transformed, k: f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(4);
        if self.a1 {
            v.push(t.a1);
        }
        if self.a2 {
            v.push(t.a2);
        }
        v.push(t.mu);
        v.push(k);
        v
    }

    fn unpack(&self, v: &[f64]) -> (Transformed, f64) {
        let mut it = v.iter().copied();
        let a1 = if self.a1 { it.next().unwrap_or(0.0) } else { 0.0 };
        let a2 = if self.a2 { it.next().unwrap_or(0.0) } else { 0.0 };
        let mu = it.next().unwrap_or(0.0);
        let k = it.next().unwrap_or(0.0);
        (Transformed { a1, a2, mu }, k)
    }
}

/// Looks for an explicit rate pair outside the no-feedback region.
pub fn search_enlargement(params: &ChannelParams, budget: &SearchBudget) -> Result<SearchOutcome> {
    budget.validate()?;
    let (p, swapped) = canonical(params)?;
    let cert = certify(&p)?;
    let chart = Chart {
        params: p,
        theta: cert.theta,
        max_k: budget.max_halvings as f64 + 16.0,
    };
    let seed_point = Transformed {
        a1: cert.a1,
        a2: cert.a2,
        mu: cert.mu,
    };
    let layout = Layout {
        a1: p.sigma_fb1_sq.is_finite(),
        a2: p.sigma_fb2_sq.is_finite(),
    };

    let mut seeds: Vec<(f64, Candidate)> = (0..=budget.max_halvings)
        .filter_map(|k| {
            let k = k as f64;
            chart.candidate(&seed_point, k).map(|c| (k, c))
        })
        .collect();
    seeds.sort_by(|a, b| b.1.rank(&a.1));

    let steps = {
        let mut s = Vec::with_capacity(4);
        let a_step = |a: f64, s_sq: f64, fb: f64| {
            if a != 0.0 {
                0.2 * a.abs()
            } else {
                0.1 / (s_sq + fb).sqrt()
            }
        };
        if layout.a1 {
            s.push(a_step(cert.a1, p.sigma1_sq, p.sigma_fb1_sq));
        }
        if layout.a2 {
            s.push(a_step(cert.a2, p.sigma2_sq, p.sigma_fb2_sq));
        }
        s.push((0.2 * cert.mu.abs()).max(0.05 / p.sigma1_sq));
        s.push(1.0);
        s
    };

    let refined: Vec<Candidate> = seeds
        .par_iter()
        .take(budget.multistarts)
        .filter_map(|&(k, _)| {
            let objective = |v: &[f64]| {
                let (t, k) = layout.unpack(v);
                chart
                    .candidate(&t, k)
                    .map_or(f64::INFINITY, |c| -c.excess.value)
            };
            let m = nelder_mead(objective, &layout.pack(&seed_point, k), &steps, budget.max_iters);
            let (t, k) = layout.unpack(&m.x);
            chart.candidate(&t, k)
        })
        .collect();

    let all = seeds.iter().map(|(_, c)| *c).chain(refined);
    let best_seen = all.clone().max_by(|a, b| a.rank(b));
    let best_certain = all
        .filter(|c| c.excess.value > 0.0 && c.excess.is_certain())
        .filter_map(|c| witness_from(&p, swapped, &c))
        .max_by(|a, b| a.1.rank(&b.1));

    Ok(match best_certain {
        Some((w, _)) => SearchOutcome::Found(w),
        None => SearchOutcome::NotFound {
            best_excess: best_seen.map_or(f64::NEG_INFINITY, |c| c.excess.value),
        },
    })
}

fn witness_from(p: &ChannelParams, swapped: bool, c: &Candidate) -> Option<(EnlargementWitness, Candidate)> {
    let rates = bootstrap_rates(p, c.epsilon, &c.scheme).ok()?;
    let w = EnlargementWitness {
        epsilon: c.epsilon,
        scheme: c.scheme,
        rates,
        excess: c.excess.value,
        excess_bound: c.excess.bound,
        swapped,
    };
    let caller = if swapped { p.swapped() } else { *p };
    verify_witness(&caller, &w).then_some((w, *c))
}

/// Recomputes a witness from scratch: the bootstrap rates, the plain excess
/// over the frontier and the bounded excess must all agree with the stored
/// fields, and the excess must clear its rounding bound.
///
/// `params` may be given in either labelling; it must match the witness's
/// `swapped` flag after canonicalization.
pub fn verify_witness(params: &ChannelParams, witness: &EnlargementWitness) -> bool {
    let Ok((p, swapped)) = canonical(params) else {
        return false;
    };
    if swapped != witness.swapped {
        return false;
    }
    if !(witness.epsilon > 0.0 && witness.epsilon <= p.power) || witness.scheme.validate().is_err() {
        return false;
    }
    let Ok(rates) = bootstrap_rates(&p, witness.epsilon, &witness.scheme) else {
        return false;
    };
    if !close(rates.r1, witness.rates.r1) || !close(rates.r2, witness.rates.r2) {
        return false;
    }
    let Ok(plain) = excess_rate(&p, rates) else {
        return false;
    };
    if !close(plain.value(), witness.excess) {
        return false;
    }
    let Some(local) = certified_excess(&p, witness.epsilon, &witness.scheme) else {
        return false;
    };
    close(local.value, witness.excess)
        && local.is_certain()
        && witness.excess > local.bound
        && witness.excess > 0.0
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= MATCH_TOL
}

/// Geometric `ε` grid `P·2⁻ᵏ`, `k = 0..=max_halvings`.
pub fn epsilon_grid(power: f64, max_halvings: u32) -> Vec<f64> {
    (0..=max_halvings).map(|k| power * (-(k as f64)).exp2()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const INF: f64 = f64::INFINITY;

    fn ch(s1: f64, s2: f64, f1: f64, f2: f64, p: f64) -> ChannelParams {
        ChannelParams::new(s1, s2, f1, f2, p).unwrap()
    }

    #[test]
    fn equal_variance_channel_has_witness() {
        let p = ch(1.0, 1.0, 1.0, INF, 1.0);
        let out = search_enlargement(&p, &SearchBudget::default()).unwrap();
        let w = out.witness().expect("witness");
        assert!(w.excess > 1e-4, "{w:?}");
        assert!(verify_witness(&p, w));
    }

    #[test]
    fn no_feedback_channel_has_none() {
        let p = ch(1.0, 4.0, INF, INF, 1.0);
        let out = search_enlargement(&p, &SearchBudget::default()).unwrap();
        assert!(matches!(out, SearchOutcome::NotFound { .. }), "{out:?}");
    }

    #[test]
    fn feasible_certificate_at_high_power() {
        let p = ch(1.0, 2.0, 1.0, 2.0, 10.0);
        let out = search_enlargement(&p, &SearchBudget::default()).unwrap();
        let w = out.witness().expect("witness");
        assert!(w.excess > 0.0);
        let plain = excess_rate(&p, bootstrap_rates(&p, w.epsilon, &w.scheme).unwrap()).unwrap();
        assert!(plain.value() > 0.0);
        assert!(verify_witness(&p, w));
    }

    #[test]
    fn verify_rejects_tampering() {
        let p = ch(1.0, 1.0, 1.0, INF, 1.0);
        let w = *search_enlargement(&p, &SearchBudget::default())
            .unwrap()
            .witness()
            .unwrap();
        assert!(verify_witness(&p, &w));
        assert!(!verify_witness(&p, &EnlargementWitness { excess: w.excess + 1e-6, ..w }));
        assert!(!verify_witness(&p, &EnlargementWitness { epsilon: 1.5, ..w }));
        assert!(!verify_witness(&p, &EnlargementWitness { swapped: true, ..w }));
    }

    #[test]
    fn swapped_labels_are_reported() {
        let p = ch(2.0, 1.0, INF, 0.5, 1.0);
        let out = search_enlargement(&p, &SearchBudget::default()).unwrap();
        let w = out.witness().expect("witness");
        assert!(w.swapped);
        assert!(verify_witness(&p, w));
    }

    #[test]
    fn search_is_deterministic() {
        let p = ch(0.7, 1.3, 0.9, 2.0, 0.5);
        let b = SearchBudget::default();
        assert_eq!(search_enlargement(&p, &b).unwrap(), search_enlargement(&p, &b).unwrap());
    }

    #[test]
    fn budget_validation() {
        let p = ch(1.0, 1.0, 1.0, INF, 1.0);
        for b in [
            SearchBudget { max_halvings: 0, ..Default::default() },
            SearchBudget { multistarts: 0, ..Default::default() },
            SearchBudget { max_iters: 0, ..Default::default() },
        ] {
            assert!(matches!(search_enlargement(&p, &b), Err(Error::InvalidBudget(_))));
        }
    }

    #[test]
    fn certified_excess_matches_plain_route() {
        let p = ch(1.0, 3.0, 0.5, 2.0, 2.0);
        let s = SchemeParams::new(0.4, -0.1, 0.05).unwrap();
        let eps = 0.3;
        let c = certified_excess(&p, eps, &s).unwrap();
        let plain = excess_rate(&p, bootstrap_rates(&p, eps, &s).unwrap()).unwrap();
        assert!((c.value - plain.value()).abs() < 1e-13);
        assert!(c.bound > 0.0 && c.bound < 1e-13);
    }

    #[test]
    fn zero_weights_without_feedback_are_never_certain() {
        // Both sides equal the frontier exactly; only rounding could look positive.
        let p = ch(1.0, 1.0, INF, INF, 1.0);
        for k in 0..40 {
            let eps = (-(k as f64)).exp2();
            for tp in [0.1, 0.5, 0.9] {
                let s = SchemeParams::new(tp, 0.0, 0.0).unwrap();
                let c = certified_excess(&p, eps, &s).unwrap();
                assert!(!(c.value > 0.0 && c.is_certain()), "{k} {tp} {c:?}");
            }
        }
    }

    #[test]
    fn grid_shape() {
        let g = epsilon_grid(2.0, 3);
        assert_eq!(g, vec![2.0, 1.0, 0.5, 0.25]);
    }
}
