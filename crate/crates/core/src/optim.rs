//! Small derivative-free minimizers used by the search and by tests.

/// Result of a [`nelder_mead`] run.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Nelder-Mead simplex minimization with the standard coefficients
/// (reflection 1, expansion 2, contraction ½, shrink ½).
///
/// The initial simplex is `x0` plus `x0 + steps[i]·eᵢ`. Non-finite objective
/// values are treated as `+inf`, which lets callers encode constraints. Fully
/// deterministic: ties are broken by vertex index.
pub fn nelder_mead<F>(f: F, x0: &[f64], steps: &[f64], max_iters: usize) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    assert_eq!(steps.len(), n, "one step per coordinate");
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if n == 0 {
        return Minimum {
            x: Vec::new(),
            value: eval(x0),
            iterations: 0,
        };
    }

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();

    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        if converged(&simplex, &values) {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let toward = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let reflected = toward(-1.0);
        let f_r = eval(&reflected);
        if f_r < values[0] {
            let expanded = toward(-2.0);
            let f_e = eval(&expanded);
            if f_e < f_r {
                simplex[n] = expanded;
                values[n] = f_e;
            } else {
                simplex[n] = reflected;
                values[n] = f_r;
            }
            continue;
        }
        if f_r < values[n - 1] {
            simplex[n] = reflected;
            values[n] = f_r;
            continue;
        }
        let (contracted, f_c) = if f_r < values[n] {
            let c = toward(-0.5);
            let fc = eval(&c);
            (c, fc)
        } else {
            let c = toward(0.5);
            let fc = eval(&c);
            (c, fc)
        };
        if f_c < values[n].min(f_r) {
            simplex[n] = contracted;
            values[n] = f_c;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=n {
            for (x, b) in simplex[i].iter_mut().zip(&best) {
                *x = b + 0.5 * (*x - b);
            }
            values[i] = eval(&simplex[i]);
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)))
        .unwrap_or(0);
    Minimum {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
    }
}

/// Simplex collapsed to rounding level in both position and value.
fn converged(simplex: &[Vec<f64>], values: &[f64]) -> bool {
    let best = &simplex[0];
    let spread = values[values.len() - 1] - values[0];
    let value_flat = spread.is_finite() && spread <= 4.0 * f64::EPSILON * values[0].abs();
    let tiny = simplex[1..].iter().all(|v| {
        v.iter()
            .zip(best)
            .all(|(a, b)| (a - b).abs() <= 4.0 * f64::EPSILON * b.abs().max(1e-300))
    });
    value_flat && tiny
}

/// Golden-section search for the minimizer of a unimodal function on
/// `[lo, hi]`, driven by a comparison `less(a, b)` meaning "f(a) < f(b)".
///
/// Taking a comparator instead of a function lets callers compare values
/// through a cancellation-free difference when the minimum is flat.
pub fn golden_section_by<C>(less: C, mut lo: f64, mut hi: f64, max_iters: usize) -> f64
where
    C: Fn(f64, f64) -> bool,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    for _ in 0..max_iters {
        if !(hi - lo > f64::EPSILON * hi.abs().max(lo.abs())) {
            break;
        }
        if less(c, d) {
            hi = d;
            d = c;
            c = hi - inv_phi * (hi - lo);
        } else {
            lo = c;
            c = d;
            d = lo + inv_phi * (hi - lo);
        }
    }
    0.5 * (lo + hi)
}
