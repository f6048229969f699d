//! ζ-Subbotin densities `d(x) = exp(-|x|^ζ / ζ) / L_ζ` with their upper tail
//! `D̄(u) = P(X >= u)` and its inverse.
//!
//! Laplace (ζ = 1) and Gaussian (ζ = 2) use closed forms; other shapes go
//! through the upper regularized incomplete gamma function,
//! `D̄(u) = Q(1/ζ, u^ζ/ζ) / 2` for `u >= 0`.

use std::f64::consts::{LN_2, PI, SQRT_2};

use libm::erfc;
use libm::lgamma as ln_gamma;

use crate::error::{check_finite, domain, Result};
use crate::special::{gamma_q, ln_gamma_q};

/// Below this the linear-scale tail is no longer trusted and the log form
/// takes over.
const LOG_SPACE_CUTOFF: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Form {
    Laplace,
    Gaussian,
    General,
}

/// Tail exponent ζ ≥ 1 together with its cached log-normalizer `ln L_ζ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubbotinShape {
    zeta: f64,
    log_normalizer: f64,
    form: Form,
}

/// `ln L_ζ = ln 2 + ln Γ(1/ζ) + (1/ζ - 1) ln ζ`, evaluated without any
/// closed-form shortcut.
pub fn log_normalizer_general(zeta: f64) -> f64 {
    LN_2 + ln_gamma(1.0 / zeta) + (1.0 / zeta - 1.0) * zeta.ln()
}

impl SubbotinShape {
    pub fn new(zeta: f64) -> Result<Self> {
        if !zeta.is_finite() || zeta < 1.0 {
            return Err(domain(format!("Subbotin exponent must be >= 1, got {zeta}")));
        }
        let (form, log_normalizer) = if zeta == 1.0 {
            (Form::Laplace, LN_2)
        } else if zeta == 2.0 {
            (Form::Gaussian, 0.5 * (2.0 * PI).ln())
        } else {
            (Form::General, log_normalizer_general(zeta))
        };
        Ok(SubbotinShape {
            zeta,
            log_normalizer,
            form,
        })
    }

    pub fn laplace() -> Self {
        Self::new(1.0).expect("zeta = 1 is valid")
    }

    pub fn gaussian() -> Self {
        Self::new(2.0).expect("zeta = 2 is valid")
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub(crate) fn form(&self) -> Form {
        self.form
    }

    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    /// `L_ζ`.
    pub fn normalizer(&self) -> f64 {
        self.log_normalizer.exp()
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        check_finite("x", x)?;
        Ok(self.pdf(x))
    }

    pub fn log_density(&self, x: f64) -> Result<f64> {
        check_finite("x", x)?;
        Ok(self.ln_pdf(x))
    }

    /// `D̄(u) = P(X >= u)`.
    pub fn upper_tail(&self, u: f64) -> Result<f64> {
        check_finite("u", u)?;
        Ok(self.tail(u))
    }

    /// `ln D̄(u)`, accurate where `D̄(u)` itself underflows.
    pub fn log_upper_tail(&self, u: f64) -> Result<f64> {
        check_finite("u", u)?;
        Ok(self.ln_tail(u))
    }

    /// The incomplete-gamma evaluation of `D̄(u)`, bypassing any closed form.
    pub fn upper_tail_general(&self, u: f64) -> Result<f64> {
        check_finite("u", u)?;
        let q = 0.5 * gamma_q(1.0 / self.zeta, u.abs().powf(self.zeta) / self.zeta);
        Ok(if u >= 0.0 { q } else { 1.0 - q })
    }

    /// `D̄⁻¹(p)` for `p ∈ (0, 1)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(domain(format!("quantile level must lie in (0, 1), got {p}")));
        }
        Ok(self.inv_tail(p))
    }

    /// `D̄⁻¹(exp(ln_p))` for `ln_p < 0`; usable below the smallest double.
    pub fn quantile_log(&self, ln_p: f64) -> Result<f64> {
        if !(ln_p < 0.0) || ln_p.is_infinite() {
            return Err(domain(format!("log quantile level must be finite and < 0, got {ln_p}")));
        }
        if ln_p <= -LN_2 {
            Ok(self.inv_ln_tail(ln_p))
        } else {
            // p in (1/2, 1): reflect through 1 - p
            Ok(-self.inv_tail(-ln_p.exp_m1()))
        }
    }

    pub(crate) fn ln_pdf(&self, x: f64) -> f64 {
        -x.abs().powf(self.zeta) / self.zeta - self.log_normalizer
    }

    pub(crate) fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// Tail for `u >= 0`.
    fn tail_pos(&self, u: f64) -> f64 {
        match self.form {
            Form::Laplace => 0.5 * (-u).exp(),
            Form::Gaussian => 0.5 * erfc(u / SQRT_2),
            Form::General => 0.5 * gamma_q(1.0 / self.zeta, u.powf(self.zeta) / self.zeta),
        }
    }

    fn ln_tail_pos(&self, u: f64) -> f64 {
        match self.form {
            Form::Laplace => -u - LN_2,
            Form::Gaussian => {
                let q = 0.5 * erfc(u / SQRT_2);
                if q > LOG_SPACE_CUTOFF {
                    q.ln()
                } else {
                    ln_gamma_q(0.5, 0.5 * u * u) - LN_2
                }
            }
            Form::General => ln_gamma_q(1.0 / self.zeta, u.powf(self.zeta) / self.zeta) - LN_2,
        }
    }

    pub(crate) fn tail(&self, u: f64) -> f64 {
        if u >= 0.0 {
            self.tail_pos(u)
        } else {
            1.0 - self.tail_pos(-u)
        }
    }

    pub(crate) fn ln_tail(&self, u: f64) -> f64 {
        if u >= 0.0 {
            self.ln_tail_pos(u)
        } else {
            (-self.tail_pos(-u)).ln_1p()
        }
    }

    pub(crate) fn inv_tail(&self, p: f64) -> f64 {
        if p == 0.5 {
            0.0
        } else if p > 0.5 {
            -self.inv_ln_tail((1.0 - p).ln())
        } else {
            self.inv_ln_tail(p.ln())
        }
    }

    /// Solves `ln D̄(u) = ln_p` for `ln_p <= ln(1/2)`, i.e. `u >= 0`.
    pub(crate) fn inv_ln_tail(&self, ln_p: f64) -> f64 {
        if ln_p >= -LN_2 {
            return 0.0;
        }
        if self.form == Form::Laplace {
            return -ln_p - LN_2;
        }
        // ln D̄(u) ≈ -u^ζ/ζ - ln L_ζ - (ζ-1) ln u for large u
        let guess = (self.zeta * (-ln_p - self.log_normalizer).max(0.1)).powf(1.0 / self.zeta);
        self.newton_ln_tail(ln_p, guess)
    }

    /// Safeguarded Newton iteration on `g(u) = ln D̄(u) - ln_p`, which is
    /// concave and decreasing on `[0, ∞)`.
    fn newton_ln_tail(&self, ln_p: f64, guess: f64) -> f64 {
        let g = |u: f64| self.ln_tail_pos(u) - ln_p;
        let mut lo = 0.0;
        let mut hi = guess.max(1.0);
        while g(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        let mut u = guess.clamp(lo, hi);
        for _ in 0..100 {
            let gu = g(u);
            if gu == 0.0 {
                return u;
            }
            if gu > 0.0 {
                lo = u;
            } else {
                hi = u;
            }
            // d/du ln D̄(u) = -d(u) / D̄(u)
            let slope = -(self.ln_pdf(u) - self.ln_tail_pos(u)).exp();
            let mut next = u - gu / slope;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - u).abs() <= 4.0 * f64::EPSILON * u.abs().max(1e-300) {
                return next;
            }
            u = next;
        }
        u
    }
}
