use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use statrs::function::beta::{beta_reg, ln_beta};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use super::{EdgeDistribution, RightTail};
use crate::error::{Error, Result};
use crate::gauss;

/// Built-in edge-time families.
///
/// Spec strings: `exp:rate=1`, `gamma:shape=2[,rate=1]`, `beta:a=2,b=3`,
/// `uniform:lo=0,hi=1`, `chi2:k=2,alpha=0.5`, `halfnormal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Exponential {
        rate: f64,
    },
    Gamma {
        shape: f64,
        rate: f64,
    },
    Beta {
        a: f64,
        b: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// `ν(dt) ∝ e^{−αt} t^{k/2−1}`, i.e. a gamma law with shape `k/2` and rate `α`.
    Chi2 {
        k: u32,
        alpha: f64,
    },
    /// Law of `|N|` for a standard Gaussian `N`.
    HalfNormal,
}

impl Family {
    /// `(shape, rate)` for the gamma-type families.
    fn gamma_params(&self) -> Option<(f64, f64)> {
        match *self {
            Family::Gamma { shape, rate } => Some((shape, rate)),
            Family::Chi2 { k, alpha } => Some((0.5 * k as f64, alpha)),
            _ => None,
        }
    }

    pub fn second_moment(&self) -> f64 {
        let m = self.mean();
        self.variance() + m * m
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Exponential { rate } => write!(f, "exp:rate={rate}"),
            Family::Gamma { shape, rate } if *rate == 1.0 => write!(f, "gamma:shape={shape}"),
            Family::Gamma { shape, rate } => write!(f, "gamma:shape={shape},rate={rate}"),
            Family::Beta { a, b } => write!(f, "beta:a={a},b={b}"),
            Family::Uniform { lo, hi } => write!(f, "uniform:lo={lo},hi={hi}"),
            Family::Chi2 { k, alpha } => write!(f, "chi2:k={k},alpha={alpha}"),
            Family::HalfNormal => write!(f, "halfnormal"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let fail = |reason: String| Error::DistSpec {
            spec: spec.to_string(),
            reason,
        };
        let (tag, rest) = match spec.trim().split_once(':') {
            Some((t, r)) => (t.trim(), r.trim()),
            None => (spec.trim(), ""),
        };
        let mut params: Vec<(String, f64)> = Vec::new();
        for pair in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| fail(format!("expected key=value, got {pair:?}")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| fail(format!("value of {k:?} is not a number")))?;
            if !v.is_finite() {
                return Err(fail(format!("value of {k:?} must be finite")));
            }
            params.push((k.trim().to_string(), v));
        }
        let allowed: &[&str] = match tag {
            "exp" => &["rate"],
            "gamma" => &["shape", "rate"],
            "beta" => &["a", "b"],
            "uniform" => &["lo", "hi"],
            "chi2" => &["k", "alpha"],
            "halfnormal" => &[],
            other => return Err(fail(format!("unknown family {other:?}"))),
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            return Err(fail(format!("unknown parameter {k:?} for {tag}")));
        }
        let get = |key: &str, default: Option<f64>| -> Result<f64> {
            params
                .iter()
                .rev()
                .find(|(k, _)| k == key)
                .map(|(_, v)| *v)
                .or(default)
                .ok_or_else(|| fail(format!("missing parameter {key:?}")))
        };
        let positive = |key: &str, v: f64| -> Result<f64> {
            if v > 0.0 {
                Ok(v)
            } else {
                Err(fail(format!("{key} must be positive")))
            }
        };
        let family = match tag {
            "exp" => Family::Exponential {
                rate: positive("rate", get("rate", Some(1.0))?)?,
            },
            "gamma" => Family::Gamma {
                shape: positive("shape", get("shape", None)?)?,
                rate: positive("rate", get("rate", Some(1.0))?)?,
            },
            "beta" => Family::Beta {
                a: positive("a", get("a", None)?)?,
                b: positive("b", get("b", None)?)?,
            },
            "uniform" => {
                let lo = get("lo", None)?;
                let hi = get("hi", None)?;
                if lo < 0.0 {
                    return Err(fail("lo must be nonnegative".into()));
                }
                if hi <= lo {
                    return Err(fail("degenerate or empty interval: need lo < hi".into()));
                }
                Family::Uniform { lo, hi }
            }
            "chi2" => {
                let k = get("k", None)?;
                if k < 2.0 || k.fract() != 0.0 || k > u32::MAX as f64 {
                    return Err(fail("k must be an integer >= 2".into()));
                }
                Family::Chi2 {
                    k: k as u32,
                    alpha: positive("alpha", get("alpha", None)?)?,
                }
            }
            _ => Family::HalfNormal,
        };
        Ok(family)
    }
}

impl EdgeDistribution for Family {
    fn name(&self) -> String {
        self.to_string()
    }

    fn support(&self) -> (f64, f64) {
        match *self {
            Family::Beta { .. } => (0.0, 1.0),
            Family::Uniform { lo, hi } => (lo, hi),
            _ => (0.0, f64::INFINITY),
        }
    }

    fn pdf(&self, y: f64) -> f64 {
        let (lo, hi) = self.support();
        if !(y > lo && y < hi) {
            return 0.0;
        }
        match *self {
            Family::Exponential { rate } => rate * (-rate * y).exp(),
            Family::Uniform { lo, hi } => 1.0 / (hi - lo),
            Family::Beta { a, b } => ((a - 1.0) * y.ln() + (b - 1.0) * (-y).ln_1p() - ln_beta(a, b)).exp(),
            Family::HalfNormal => 2.0 * gauss::pdf(y),
            Family::Gamma { .. } | Family::Chi2 { .. } => {
                let (shape, rate) = self.gamma_params().unwrap();
                let x = rate * y;
                ((shape - 1.0) * x.ln() - x - ln_gamma(shape)).exp() * rate
            }
        }
    }

    fn cdf(&self, y: f64) -> f64 {
        let (lo, hi) = self.support();
        if y <= lo {
            return 0.0;
        }
        if y >= hi {
            return 1.0;
        }
        match *self {
            Family::Exponential { rate } => -(-rate * y).exp_m1(),
            Family::Uniform { lo, hi } => (y - lo) / (hi - lo),
            Family::Beta { a, b } => beta_reg(a, b, y),
            Family::HalfNormal => libm::erf(y * FRAC_1_SQRT_2),
            Family::Gamma { .. } | Family::Chi2 { .. } => {
                let (shape, rate) = self.gamma_params().unwrap();
                gamma_lr(shape, rate * y)
            }
        }
    }

    fn sf(&self, y: f64) -> f64 {
        let (lo, hi) = self.support();
        if y <= lo {
            return 1.0;
        }
        if y >= hi {
            return 0.0;
        }
        match *self {
            Family::Exponential { rate } => (-rate * y).exp(),
            Family::Uniform { lo, hi } => (hi - y) / (hi - lo),
            Family::Beta { a, b } => beta_reg(b, a, 1.0 - y),
            Family::HalfNormal => libm::erfc(y * FRAC_1_SQRT_2),
            Family::Gamma { .. } | Family::Chi2 { .. } => {
                let (shape, rate) = self.gamma_params().unwrap();
                gamma_ur(shape, rate * y)
            }
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        match *self {
            Family::Exponential { rate } => -(-p).ln_1p() / rate,
            Family::Uniform { lo, hi } => lo + p * (hi - lo),
            _ if p > 0.5 => self.isf(1.0 - p),
            _ => super::solve_lower(self, p),
        }
    }

    fn isf(&self, q: f64) -> f64 {
        match *self {
            Family::Exponential { rate } => -q.ln() / rate,
            Family::Uniform { lo, hi } => hi - q * (hi - lo),
            Family::HalfNormal if q <= 0.5 => -gauss::quantile(0.5 * q),
            _ if q > 0.5 => self.quantile(1.0 - q),
            _ => super::solve_upper(self, q),
        }
    }

    fn mean(&self) -> f64 {
        match *self {
            Family::Exponential { rate } => 1.0 / rate,
            Family::Beta { a, b } => a / (a + b),
            Family::Uniform { lo, hi } => 0.5 * (lo + hi),
            Family::HalfNormal => (2.0 / PI).sqrt(),
            Family::Gamma { .. } | Family::Chi2 { .. } => {
                let (shape, rate) = self.gamma_params().unwrap();
                shape / rate
            }
        }
    }

    fn variance(&self) -> f64 {
        match *self {
            Family::Exponential { rate } => 1.0 / (rate * rate),
            Family::Beta { a, b } => a * b / ((a + b) * (a + b) * (a + b + 1.0)),
            Family::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
            Family::HalfNormal => 1.0 - 2.0 / PI,
            Family::Gamma { .. } | Family::Chi2 { .. } => {
                let (shape, rate) = self.gamma_params().unwrap();
                shape / (rate * rate)
            }
        }
    }

    fn left_exponent(&self) -> Option<f64> {
        Some(match *self {
            Family::Exponential { .. } | Family::Uniform { .. } | Family::HalfNormal => 0.0,
            Family::Beta { a, .. } => a - 1.0,
            Family::Gamma { .. } | Family::Chi2 { .. } => self.gamma_params().unwrap().0 - 1.0,
        })
    }

    fn right_tail(&self) -> Option<RightTail> {
        Some(match *self {
            Family::Beta { b, .. } => RightTail::Exponent(b - 1.0),
            Family::Uniform { .. } => RightTail::Exponent(0.0),
            _ => RightTail::Unbounded,
        })
    }

    fn tail_ratio(&self, t: f64) -> f64 {
        match *self {
            Family::Exponential { rate } => 1.0 / rate,
            // Mills ratio of |N|, free of underflow.
            Family::HalfNormal => (0.5 * PI).sqrt() * gauss::erfcx(t * FRAC_1_SQRT_2),
            _ => self.sf(t) / self.pdf(t),
        }
    }
}
