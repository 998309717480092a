//! Domain types shared by every other module.
//!
//! Variances are plain `f64`s. The two feedback variances may be
//! `f64::INFINITY`, which stands for an absent feedback link; every formula in
//! the crate takes the corresponding limit symbolically. In JSON the infinite
//! value is written as the string `"inf"`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Noise variances of the two forward links and the two feedback links,
/// together with the transmitter's average power budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    #[serde(with = "inf_f64")]
    pub sigma_fb1_sq: f64,
    #[serde(with = "inf_f64")]
    pub sigma_fb2_sq: f64,
    pub power: f64,
}

impl ChannelParams {
    /// Builds and validates a parameter set.
    pub fn new(
        sigma1_sq: f64,
        sigma2_sq: f64,
        sigma_fb1_sq: f64,
        sigma_fb2_sq: f64,
        power: f64,
    ) -> Result<Self> {
        validate(ChannelParams {
            sigma1_sq,
            sigma2_sq,
            sigma_fb1_sq,
            sigma_fb2_sq,
            power,
        })
    }

    /// Same channel with the receiver labels exchanged.
    pub fn swapped(&self) -> Self {
        ChannelParams {
            sigma1_sq: self.sigma2_sq,
            sigma2_sq: self.sigma1_sq,
            sigma_fb1_sq: self.sigma_fb2_sq,
            sigma_fb2_sq: self.sigma_fb1_sq,
            power: self.power,
        }
    }

    /// Same noise variances with a different power budget.
    pub fn with_power(&self, power: f64) -> Self {
        ChannelParams { power, ..*self }
    }

    pub fn is_canonical(&self) -> bool {
        self.sigma1_sq <= self.sigma2_sq
    }
}

/// Checks the type invariants and hands the parameters back unchanged.
pub fn validate(params: ChannelParams) -> Result<ChannelParams> {
    for (name, value) in [
        ("sigma1_sq", params.sigma1_sq),
        ("sigma2_sq", params.sigma2_sq),
    ] {
        if value.is_nan() || value <= 0.0 {
            return Err(Error::NonPositiveVariance { name, value });
        }
        if value.is_infinite() {
            return Err(Error::NonFiniteForwardVariance { name, value });
        }
    }
    for (name, value) in [
        ("sigma_fb1_sq", params.sigma_fb1_sq),
        ("sigma_fb2_sq", params.sigma_fb2_sq),
    ] {
        // +inf is allowed here, NaN and anything <= 0 is not.
        if value.is_nan() || value <= 0.0 {
            return Err(Error::NonPositiveVariance { name, value });
        }
    }
    if !(params.power > 0.0) || !params.power.is_finite() {
        return Err(Error::NonPositivePower(params.power));
    }
    Ok(params)
}

/// Relabels the receivers so that receiver 1 is the stronger one
/// (`sigma1_sq <= sigma2_sq`). Reports whether a swap took place.
pub fn canonicalize(params: ChannelParams) -> (ChannelParams, bool) {
    if params.sigma1_sq > params.sigma2_sq {
        (params.swapped(), true)
    } else {
        (params, false)
    }
}

/// Validation followed by canonicalization; the usual front door of the
/// public operations.
pub(crate) fn canonical(params: &ChannelParams) -> Result<(ChannelParams, bool)> {
    validate(*params).map(canonicalize)
}

/// A pair of rates in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub r1: f64,
    pub r2: f64,
}

impl RatePair {
    pub fn new(r1: f64, r2: f64) -> Self {
        RatePair { r1, r2 }
    }

    pub fn is_valid(&self) -> bool {
        self.r1.is_finite() && self.r2.is_finite() && self.r1 >= 0.0 && self.r2 >= 0.0
    }

    pub fn swapped(&self) -> Self {
        RatePair {
            r1: self.r2,
            r2: self.r1,
        }
    }
}

/// Knobs of the two-slot zero-forcing feedback scheme.
///
/// `theta_prime` splits the power between the two codebooks; `gamma1` and
/// `gamma2` weight the transmitter's estimates of the forward noises. The
/// weights are unrestricted in sign: enlargement needs `gamma1 < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub theta_prime: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl SchemeParams {
    pub fn new(theta_prime: f64, gamma1: f64, gamma2: f64) -> Result<Self> {
        let scheme = SchemeParams {
            theta_prime,
            gamma1,
            gamma2,
        };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta_prime) {
            return Err(Error::InvalidScheme {
                name: "theta_prime",
                value: self.theta_prime,
            });
        }
        if !self.gamma1.is_finite() {
            return Err(Error::InvalidScheme {
                name: "gamma1",
                value: self.gamma1,
            });
        }
        if !self.gamma2.is_finite() {
            return Err(Error::InvalidScheme {
                name: "gamma2",
                value: self.gamma2,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// Feedback leaves the capacity region equal to the no-feedback region.
    Unchanged,
    /// Some rate pair outside the no-feedback region is achievable.
    Enlarged,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Unchanged => "unchanged",
            Verdict::Enlarged => "enlarged",
        }
    }
}

/// Outcome of the threshold test.
///
/// `margin` is `(σ₁²/σ²_fb1 + 1)(σ₂²/σ²_fb2 + 1) − σ₂²/σ₁²` in canonical
/// labels; the region is enlarged exactly when it is positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub margin: f64,
}

/// One point on a Pareto frontier, indexed by the superposition split `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundarySample {
    pub theta: f64,
    pub rates: RatePair,
}

/// Serde adapter for variances that may be `+inf`, spelled `"inf"`.
pub mod inf_f64 {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};
    use std::fmt;

    pub fn serialize<S: Serializer>(value: &f64, serializer: S) -> Result<S::Ok, S::Error> {
        if *value == f64::INFINITY {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_f64(*value)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<f64, D::Error> {
        struct InfVisitor;

        impl Visitor<'_> for InfVisitor {
            type Value = f64;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or the string \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
                Ok(v)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
                Ok(v as f64)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
                Ok(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
                if v.eq_ignore_ascii_case("inf") {
                    Ok(f64::INFINITY)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }

        deserializer.deserialize_any(InfVisitor)
    }
}
