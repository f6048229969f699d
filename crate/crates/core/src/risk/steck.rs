//! Joint c.d.f. of uniform order statistics.
//!
//! `Ψ_j(s₁, …, s_j) = P(U_(1) <= s₁, …, U_(j) <= s_j)` for `j` i.i.d.
//! uniforms. Conditioning on all points lying below `s_j` and splitting on
//! the first violated constraint gives
//!
//! `Ψ_j = s_j^j - Σ_{k<j} C(j,k) Ψ_k (s_j - s_{k+1})^{j-k}`.
//!
//! Dividing by `s_j^j` turns every term into a probability in `[0, 1]`, so
//! the recursion runs on conditional probabilities and stays in log space
//! for the unconditional values.

use crate::error::{domain, Result};

/// Table of `ln k!` for `k = 0..=n`.
pub(crate) fn ln_factorials(n: usize) -> Vec<f64> {
    (0..=n).map(|k| libm::lgamma(k as f64 + 1.0)).collect()
}

/// `[Ψ₀, …, Ψ_n]` for nondecreasing bounds in `[0, 1]`.
pub fn steck_prefix(bounds: &[f64]) -> Result<Vec<f64>> {
    for (i, &s) in bounds.iter().enumerate() {
        if !(0.0..=1.0).contains(&s) {
            return Err(domain(format!("bound #{} = {s} is outside [0, 1]", i + 1)));
        }
        if i > 0 && s < bounds[i - 1] {
            return Err(domain(format!(
                "bounds must be nondecreasing, but bound #{} = {s} < {}",
                i + 1,
                bounds[i - 1]
            )));
        }
    }
    Ok(ln_steck_prefix(bounds).into_iter().map(f64::exp).collect())
}

/// `[ln Ψ₀, …, ln Ψ_n]`; bounds are assumed validated.
pub(crate) fn ln_steck_prefix(bounds: &[f64]) -> Vec<f64> {
    let n = bounds.len();
    let lf = ln_factorials(n);
    let mut ln_psi = Vec::with_capacity(n + 1);
    ln_psi.push(0.0);
    for j in 1..=n {
        let s = bounds[j - 1];
        if s <= 0.0 {
            ln_psi.push(f64::NEG_INFINITY);
            continue;
        }
        let ln_s = s.ln();
        let mut sum = 0.0;
        let mut comp = 0.0;
        for k in 0..j {
            let lk = ln_psi[k];
            if lk == f64::NEG_INFINITY {
                continue;
            }
            let ratio = bounds[k] / s;
            if ratio >= 1.0 {
                continue;
            }
            let ln_term = lf[j] - lf[k] - lf[j - k] + lk - k as f64 * ln_s
                + (j - k) as f64 * (-ratio).ln_1p();
            // Kahan summation of the conditional terms
            let y = ln_term.exp() - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        let rest = (1.0 - sum).min(1.0);
        ln_psi.push(if rest > 0.0 {
            j as f64 * ln_s + rest.ln()
        } else {
            f64::NEG_INFINITY
        });
    }
    ln_psi
}
