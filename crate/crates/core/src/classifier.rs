//! Threshold test deciding whether noisy feedback can enlarge the capacity
//! region, its one-sided special cases, and the regime sweep used for plots.
//!
//! For canonical labels (`σ₁² ≤ σ₂²`) the region is unchanged exactly when
//!
//! ```text
//! σ₂²/σ₁²  ≥  (σ₁²/σ²_fb1 + 1) · (σ₂²/σ²_fb2 + 1)
//! ```
//!
//! An infinite feedback variance contributes a factor of one.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{canonical, ChannelParams, Classification, Verdict};

/// Margins within this many ulps (relative to the larger side of the
/// inequality) are rounding noise and are treated as lying on the boundary.
const BOUNDARY_ULPS: f64 = 8.0;

/// `σ²/σ²_fb + 1`, with the `σ²_fb → ∞` limit taken exactly.
fn feedback_factor(sigma_sq: f64, sigma_fb_sq: f64) -> f64 {
    if sigma_fb_sq.is_infinite() {
        1.0
    } else {
        sigma_sq / sigma_fb_sq + 1.0
    }
}

/// Classification from the two sides of the threshold inequality.
///
/// Boundary points (including those within rounding distance of it) get a
/// margin of exactly zero and the `Unchanged` verdict.
pub(crate) fn classify_sides(feedback_gain: f64, variance_ratio: f64) -> Classification {
    let margin = feedback_gain - variance_ratio;
    let band = BOUNDARY_ULPS * f64::EPSILON * feedback_gain.max(variance_ratio);
    if margin.is_finite() && margin.abs() <= band {
        return Classification {
            verdict: Verdict::Unchanged,
            margin: 0.0,
        };
    }
    let verdict = if margin > 0.0 {
        Verdict::Enlarged
    } else {
        Verdict::Unchanged
    };
    Classification { verdict, margin }
}

/// Decides whether feedback enlarges the capacity region of `params`.
pub fn classify(params: &ChannelParams) -> Result<Classification> {
    let (p, _) = canonical(params)?;
    let gain = feedback_factor(p.sigma1_sq, p.sigma_fb1_sq) * feedback_factor(p.sigma2_sq, p.sigma_fb2_sq);
    Ok(classify_sides(gain, p.sigma2_sq / p.sigma1_sq))
}

fn ordered(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// With feedback only from the weak receiver, the region stays unchanged
/// exactly when `σ²_fb2` is at least this value. Infinite for equal forward
/// variances. Arguments are put in canonical order first.
pub fn onesided_threshold_from_weak(sigma1_sq: f64, sigma2_sq: f64) -> f64 {
    let (s1, s2) = ordered(sigma1_sq, sigma2_sq);
    if s1 == s2 {
        return f64::INFINITY;
    }
    s2 / (s2 / s1 - 1.0)
}

/// Same as [`onesided_threshold_from_weak`] for feedback only from the
/// strong receiver (threshold on `σ²_fb1`).
pub fn onesided_threshold_from_strong(sigma1_sq: f64, sigma2_sq: f64) -> f64 {
    let (s1, s2) = ordered(sigma1_sq, sigma2_sq);
    if s1 == s2 {
        return f64::INFINITY;
    }
    s1 / (s2 / s1 - 1.0)
}

/// Verdicts over a grid of normalized variances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid {
    pub x_values: Vec<f64>,
    pub y_values: Vec<f64>,
    /// `verdicts[j][i]` belongs to `(x_values[i], y_values[j])`.
    pub verdicts: Vec<Vec<Classification>>,
}

impl SweepGrid {
    pub fn cell(&self, i: usize, j: usize) -> (f64, f64, Classification) {
        (self.x_values[i], self.y_values[j], self.verdicts[j][i])
    }

    /// Cells in row-major order (`y` outer, `x` inner).
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, Classification)> + '_ {
        self.y_values.iter().zip(&self.verdicts).flat_map(move |(&y, row)| {
            self.x_values.iter().zip(row).map(move |(&x, &c)| (x, y, c))
        })
    }
}

/// Classifies one cell of the one-sided (receiver 1 only) regime plot, where
/// `x = σ₁²/σ²_fb1` and `y = σ₂²/σ²_fb1`.
///
/// Positive cells go through [`classify`] on the quadruple
/// `(x, y, 1, ∞)`. A zero coordinate is the limit of a vanishing forward
/// variance: the other receiver is then infinitely worse and the region is
/// unchanged; the corner `(0, 0)` sits on the boundary.
pub fn classify_onesided_rx1(x: f64, y: f64) -> Result<Classification> {
    if !(x >= 0.0 && y >= 0.0 && x.is_finite() && y.is_finite()) {
        return Err(Error::InvalidGrid(format!("cell ({x}, {y}) is not a nonnegative point")));
    }
    match (x > 0.0, y > 0.0) {
        (true, true) => classify(&ChannelParams {
            sigma1_sq: x,
            sigma2_sq: y,
            sigma_fb1_sq: 1.0,
            sigma_fb2_sq: f64::INFINITY,
            power: 1.0,
        }),
        (false, false) => Ok(Classification {
            verdict: Verdict::Unchanged,
            margin: 0.0,
        }),
        _ => Ok(Classification {
            verdict: Verdict::Unchanged,
            margin: f64::NEG_INFINITY,
        }),
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let last = (n - 1) as f64;
    (0..n)
        .map(|k| if k == n - 1 { hi } else { lo + (hi - lo) * k as f64 / last })
        .collect()
}

/// Regime sweep for one-sided feedback from receiver 1 over
/// `resolution × resolution` evenly spaced cells.
pub fn sweep_onesided_rx1(
    x_range: (f64, f64),
    y_range: (f64, f64),
    resolution: usize,
) -> Result<SweepGrid> {
    if resolution < 2 {
        return Err(Error::InvalidGrid(format!("resolution must be at least 2, got {resolution}")));
    }
    for (lo, hi) in [x_range, y_range] {
        if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::InvalidGrid(format!("range [{lo}, {hi}] must be finite, nonnegative and ordered")));
        }
    }
    let x_values = linspace(x_range.0, x_range.1, resolution);
    let y_values = linspace(y_range.0, y_range.1, resolution);
    let verdicts = y_values
        .par_iter()
        .map(|&y| {
            x_values
                .iter()
                .map(|&x| classify_onesided_rx1(x, y))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepGrid {
        x_values,
        y_values,
        verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const INF: f64 = f64::INFINITY;

    fn classify_q(s1: f64, s2: f64, f1: f64, f2: f64) -> Classification {
        classify(&ChannelParams::new(s1, s2, f1, f2, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn classify_examples() {
        let c = classify_q(1.0, 4.0, INF, INF);
        assert_eq!(c.verdict, Verdict::Unchanged);
        assert_eq!(c.margin, -3.0);

        let c = classify_q(1.0, 1.0, 10.0, INF);
        assert_eq!(c.verdict, Verdict::Enlarged);
        assert!((c.margin - 0.1).abs() < 1e-15);

        let c = classify_q(1.0, 2.0, 1.0, 2.0);
        assert_eq!(c.verdict, Verdict::Enlarged);
        assert_eq!(c.margin, 2.0);

        let c = classify_q(1.0, 4.0, INF, 4.0 / 3.0);
        assert_eq!(c.verdict, Verdict::Unchanged);
        assert_eq!(c.margin, 0.0);
    }

    #[test]
    fn classify_is_label_symmetric() {
        let a = classify_q(3.0, 0.5, 2.0, 7.0);
        let b = classify_q(0.5, 3.0, 7.0, 2.0);
        assert_eq!(a, b);
    }

    #[test]
    fn thresholds() {
        assert_eq!(onesided_threshold_from_weak(1.0, 2.0), 2.0);
        assert!((onesided_threshold_from_weak(1.0, 4.0) - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(onesided_threshold_from_weak(1.0, 1.0), INF);

        assert_eq!(onesided_threshold_from_strong(1.0, 2.0), 1.0);
        assert!((onesided_threshold_from_strong(1.0, 4.0) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(onesided_threshold_from_strong(1.0, 1.0), INF);
    }

    #[test]
    fn sweep_cells() {
        let c = classify_onesided_rx1(1.0, 2.001).unwrap();
        assert_eq!(c.verdict, Verdict::Unchanged);
        let c = classify_onesided_rx1(1.0, 1.999).unwrap();
        assert_eq!(c.verdict, Verdict::Enlarged);
        let c = classify_onesided_rx1(0.0, 2.0).unwrap();
        assert_eq!(c.verdict, Verdict::Unchanged);
        let c = classify_onesided_rx1(0.0, 0.0).unwrap();
        assert_eq!(c.verdict, Verdict::Unchanged);
        // lower triangle: boundary y = x / (1 + x)
        assert_eq!(classify_onesided_rx1(1.0, 0.501).unwrap().verdict, Verdict::Enlarged);
        assert_eq!(classify_onesided_rx1(1.0, 0.499).unwrap().verdict, Verdict::Unchanged);
    }

    #[test]
    fn sweep_grid_layout() {
        let g = sweep_onesided_rx1((0.0, 2.0), (0.0, 4.0), 5).unwrap();
        assert_eq!(g.x_values, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(g.y_values, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(g.verdicts.len(), 5);
        assert!(g.verdicts.iter().all(|row| row.len() == 5));
        let (x, y, c) = g.cell(2, 1);
        assert_eq!((x, y), (1.0, 1.0));
        assert_eq!(c.verdict, Verdict::Enlarged);
        assert_eq!(g.cells().count(), 25);

        assert!(sweep_onesided_rx1((0.0, 1.0), (0.0, 1.0), 1).is_err());
        assert!(sweep_onesided_rx1((-1.0, 1.0), (0.0, 1.0), 3).is_err());
    }
}
