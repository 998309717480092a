//! Symbol-level simulation of the two-slot zero-forcing scheme.
//!
//! Each block draws its own random numbers from a substream keyed by
//! `(seed, block index)`, so results do not depend on how blocks are split
//! across threads:
//!
//! * generator: ChaCha with 8 rounds (`rand_chacha::ChaCha8Rng`); the key is
//!   `ChaCha8Rng::seed_from_u64(seed)`'s seed and the stream number is the
//!   block index;
//! * uniforms: 53-bit doubles in `[0, 1)` from `rand`'s standard
//!   distribution;
//! * normals: Marsaglia's polar method, both outputs of an accepted pair
//!   used in order.
//!
//! A block consumes eight standard normals, in order: `u`, `v`, the odd and
//! even forward noises of receiver 1, those of receiver 2, and the two
//! feedback noises. They are always drawn, even when a feedback link is
//! absent, so the layout of a stream never depends on the parameters.
//!
//! Blocks are accumulated in fixed-size chunks with a streaming co-moment
//! update, and chunk accumulators are merged along a fixed binary tree.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{validate, ChannelParams, SchemeParams};
use crate::zf_scheme::derive;

const CHUNK_BLOCKS: u64 = 1 << 14;

/// Tracked per block: `e₁ = S₁ − 2u`, `e₂ = S₂ − 2v`, `u`, `v`, `X²_odd`,
/// `X²_even`.
const DIM: usize = 6;
const E1: usize = 0;
const E2: usize = 1;
const U: usize = 2;
const V: usize = 3;
const POW_ODD: usize = 4;
const POW_EVEN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimReport {
    pub n_blocks: u64,
    pub seed: u64,
    /// Sample variance of `S₁ − 2u`.
    pub emp_var_s1: f64,
    /// Sample variance of `S₂ − 2v`.
    pub emp_var_s2: f64,
    pub emp_power_odd: f64,
    pub emp_power_even: f64,
    /// Correlation of `S₁ − 2u` with `u`.
    pub emp_cross1: f64,
    /// Correlation of `S₂ − 2v` with `v`.
    pub emp_cross2: f64,
    /// Correlation of `S₁ − 2u` with `v`; zero forcing makes it vanish.
    pub emp_leak1: f64,
    /// Correlation of `S₂ − 2v` with `u`.
    pub emp_leak2: f64,
}

/// Running means and co-moments, mergeable in any fixed order.
#[derive(Debug, Clone, Copy)]
struct Moments {
    n: f64,
    mean: [f64; DIM],
    comoment: [[f64; DIM]; DIM],
}

impl Moments {
    fn new() -> Self {
        Moments {
            n: 0.0,
            mean: [0.0; DIM],
            comoment: [[0.0; DIM]; DIM],
        }
    }

    fn push(&mut self, x: &[f64; DIM]) {
        self.n += 1.0;
        let mut before = [0.0; DIM];
        for i in 0..DIM {
            before[i] = x[i] - self.mean[i];
            self.mean[i] += before[i] / self.n;
        }
        for i in 0..DIM {
            let after = x[i] - self.mean[i];
            for j in 0..DIM {
                self.comoment[j][i] += before[j] * after;
            }
        }
    }

    fn merge(a: &Self, b: &Self) -> Self {
        if a.n == 0.0 {
            return *b;
        }
        if b.n == 0.0 {
            return *a;
        }
        let n = a.n + b.n;
        let mut out = Moments::new();
        out.n = n;
        let mut delta = [0.0; DIM];
        for i in 0..DIM {
            delta[i] = b.mean[i] - a.mean[i];
            out.mean[i] = a.mean[i] + delta[i] * (b.n / n);
        }
        let w = a.n * b.n / n;
        for i in 0..DIM {
            for j in 0..DIM {
                out.comoment[i][j] = a.comoment[i][j] + b.comoment[i][j] + delta[i] * delta[j] * w;
            }
        }
        out
    }

    fn variance(&self, i: usize) -> f64 {
        if self.n < 2.0 {
            0.0
        } else {
            self.comoment[i][i] / (self.n - 1.0)
        }
    }

    fn correlation(&self, i: usize, j: usize) -> f64 {
        let denom = (self.comoment[i][i] * self.comoment[j][j]).sqrt();
        if denom > 0.0 {
            self.comoment[i][j] / denom
        } else {
            0.0
        }
    }
}

/// Source of standard normals for one block.
struct BlockNormals {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl BlockNormals {
    fn new(key: <ChaCha8Rng as SeedableRng>::Seed, block: u64) -> Self {
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(block);
        BlockNormals { rng, spare: None }
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let a = 2.0 * self.rng.gen::<f64>() - 1.0;
            let b = 2.0 * self.rng.gen::<f64>() - 1.0;
            let s = a * a + b * b;
            if s > 0.0 && s < 1.0 {
                let m = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(b * m);
                return a * m;
            }
        }
    }
}

/// Per-run constants of the block recursion.
struct Block {
    sd_u: f64,
    sd_v: f64,
    sd1: f64,
    sd2: f64,
    sd_fb1: f64,
    sd_fb2: f64,
    /// MMSE gains `σⱼ²/(σⱼ² + σ²_fbj)`; zero without feedback.
    gain1: f64,
    gain2: f64,
    gamma1: f64,
    gamma2: f64,
    sqrt_alpha: f64,
}

impl Block {
    fn new(p: &ChannelParams, s: &SchemeParams, alpha: f64) -> Self {
        let gain = |sig: f64, fb: f64| if fb.is_infinite() { 0.0 } else { sig / (sig + fb) };
        let sd_fb = |fb: f64| if fb.is_infinite() { 0.0 } else { fb.sqrt() };
        Block {
            sd_u: (s.theta_prime * p.power).sqrt(),
            sd_v: ((1.0 - s.theta_prime) * p.power).sqrt(),
            sd1: p.sigma1_sq.sqrt(),
            sd2: p.sigma2_sq.sqrt(),
            sd_fb1: sd_fb(p.sigma_fb1_sq),
            sd_fb2: sd_fb(p.sigma_fb2_sq),
            gain1: gain(p.sigma1_sq, p.sigma_fb1_sq),
            gain2: gain(p.sigma2_sq, p.sigma_fb2_sq),
            gamma1: s.gamma1,
            gamma2: s.gamma2,
            sqrt_alpha: alpha.sqrt(),
        }
    }

    fn run(&self, rng: &mut BlockNormals) -> [f64; DIM] {
        let u = self.sd_u * rng.next();
        let v = self.sd_v * rng.next();
        let z1_odd = self.sd1 * rng.next();
        let z1_even = self.sd1 * rng.next();
        let z2_odd = self.sd2 * rng.next();
        let z2_even = self.sd2 * rng.next();
        let zfb1 = self.sd_fb1 * rng.next();
        let zfb2 = self.sd_fb2 * rng.next();

        // feedback from the odd slot arrives before the even slot
        let est1 = self.gain1 * (z1_odd + zfb1);
        let est2 = self.gain2 * (z2_odd + zfb2);

        let x_odd = u + v;
        let x_even = self.sqrt_alpha * (u - v + self.gamma1 * est1 + self.gamma2 * est2);

        let s1 = (x_odd + z1_odd) + (x_even + z1_even) / self.sqrt_alpha;
        let s2 = (x_odd + z2_odd) - (x_even + z2_even) / self.sqrt_alpha;
        [s1 - 2.0 * u, s2 - 2.0 * v, u, v, x_odd * x_odd, x_even * x_even]
    }
}

/// Runs `n_blocks` blocks of the scheme with the `α` the scheme prescribes.
pub fn simulate(params: &ChannelParams, scheme: &SchemeParams, n_blocks: u64, seed: u64) -> Result<SimReport> {
    let d = derive(params, scheme)?;
    simulate_with_alpha(params, scheme, n_blocks, seed, d.alpha)
}

/// Same as [`simulate`] with an arbitrary even-slot scaling, used to check
/// that inconsistent scalings are caught.
pub fn simulate_with_alpha(
    params: &ChannelParams,
    scheme: &SchemeParams,
    n_blocks: u64,
    seed: u64,
    alpha: f64,
) -> Result<SimReport> {
    let p = validate(*params)?;
    scheme.validate()?;
    if n_blocks == 0 {
        return Err(Error::NoBlocks);
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidScheme { name: "alpha", value: alpha });
    }
    let block = Block::new(&p, scheme, alpha);
    let key = ChaCha8Rng::seed_from_u64(seed).get_seed();

    let n_chunks = n_blocks.div_ceil(CHUNK_BLOCKS);
    let chunks: Vec<Moments> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK_BLOCKS;
            let end = (start + CHUNK_BLOCKS).min(n_blocks);
            let mut m = Moments::new();
            for i in start..end {
                m.push(&block.run(&mut BlockNormals::new(key, i)));
            }
            m
        })
        .collect();
    let m = merge_tree(&chunks);

    Ok(SimReport {
        n_blocks,
        seed,
        emp_var_s1: m.variance(E1),
        emp_var_s2: m.variance(E2),
        emp_power_odd: m.mean[POW_ODD],
        emp_power_even: m.mean[POW_EVEN],
        emp_cross1: m.correlation(E1, U),
        emp_cross2: m.correlation(E2, V),
        emp_leak1: m.correlation(E1, V),
        emp_leak2: m.correlation(E2, U),
    })
}

fn merge_tree(parts: &[Moments]) -> Moments {
    match parts.len() {
        0 => Moments::new(),
        1 => parts[0],
        n => {
            let (l, r) = parts.split_at(n / 2);
            Moments::merge(&merge_tree(l), &merge_tree(r))
        }
    }
}

/// One statistic compared against its closed-form value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimCheck {
    pub name: &'static str,
    pub empirical: f64,
    pub expected: f64,
    pub std_error: f64,
    /// `(empirical − expected)/std_error`.
    pub z: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimDiagnosis {
    pub report: SimReport,
    pub checks: Vec<SimCheck>,
    pub pass: bool,
}

impl SimDiagnosis {
    pub fn check(&self, name: &str) -> Option<&SimCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Compares a report against the closed forms of [`derive`] using
/// normal-approximation standard errors.
pub fn compare(
    params: &ChannelParams,
    scheme: &SchemeParams,
    report: &SimReport,
    tolerance_sigmas: f64,
) -> Result<SimDiagnosis> {
    if !(tolerance_sigmas > 0.0) {
        return Err(Error::InvalidTolerance(tolerance_sigmas));
    }
    let d = derive(params, scheme)?;
    let n = report.n_blocks as f64;
    let var_se = |v: f64| v * (2.0 / (n - 1.0).max(1.0)).sqrt();
    let power = params.power;
    let power_se = power * (2.0 / n).sqrt();
    let corr_se = 1.0 / n.sqrt();

    let rows = [
        ("emp_var_s1", report.emp_var_s1, d.eff_var1, var_se(d.eff_var1)),
        ("emp_var_s2", report.emp_var_s2, d.eff_var2, var_se(d.eff_var2)),
        ("emp_power_odd", report.emp_power_odd, power, power_se),
        ("emp_power_even", report.emp_power_even, power, power_se),
        ("emp_cross1", report.emp_cross1, 0.0, corr_se),
        ("emp_cross2", report.emp_cross2, 0.0, corr_se),
        ("emp_leak1", report.emp_leak1, 0.0, corr_se),
        ("emp_leak2", report.emp_leak2, 0.0, corr_se),
    ];
    let checks: Vec<SimCheck> = rows
        .iter()
        .map(|&(name, empirical, expected, std_error)| {
            let z = (empirical - expected) / std_error;
            SimCheck {
                name,
                empirical,
                expected,
                std_error,
                z,
                pass: z.abs() <= tolerance_sigmas,
            }
        })
        .collect();
    let pass = checks.iter().all(|c| c.pass);
    Ok(SimDiagnosis {
        report: *report,
        checks,
        pass,
    })
}

/// [`simulate`] followed by [`compare`].
pub fn simulate_vs_analytic(
    params: &ChannelParams,
    scheme: &SchemeParams,
    n_blocks: u64,
    seed: u64,
    tolerance_sigmas: f64,
) -> Result<SimDiagnosis> {
    if !(tolerance_sigmas > 0.0) {
        return Err(Error::InvalidTolerance(tolerance_sigmas));
    }
    let report = simulate(params, scheme, n_blocks, seed)?;
    compare(params, scheme, &report, tolerance_sigmas)
}
