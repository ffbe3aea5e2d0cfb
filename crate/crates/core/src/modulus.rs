//! Parametric concave moduli of continuity and the inf-over-L helper.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Nondecreasing, subadditive, vanishing at zero. `Infinite` is the marker
/// for families with no finite modulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Modulus {
    Zero,
    Linear {
        k: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cap: Option<f64>,
    },
    Power {
        k: f64,
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cap: Option<f64>,
    },
    Infinite,
    /// `l -> inf { L l + hat(2/L) : L > 1 + hat(2/L) }`
    Smoothed { hat: Box<Modulus> },
}

impl Default for Modulus {
    fn default() -> Self {
        Modulus::Zero
    }
}

impl Modulus {
    pub fn linear(k: f64) -> Self {
        if k == 0.0 {
            Modulus::Zero
        } else {
            Modulus::Linear { k, cap: None }
        }
    }

    pub fn check(&self) -> Result<()> {
        let cap_ok = |c: &Option<f64>| c.map_or(true, |c| c > 0.0 && !c.is_nan());
        match self {
            Modulus::Zero | Modulus::Infinite => Ok(()),
            Modulus::Linear { k, cap } => {
                if !(*k >= 0.0 && k.is_finite()) || !cap_ok(cap) {
                    return invalid(format!("bad linear modulus {self:?}"));
                }
                Ok(())
            }
            Modulus::Power { k, alpha, cap } => {
                if !(*k >= 0.0 && k.is_finite()) || !(*alpha > 0.0 && *alpha <= 1.0) || !cap_ok(cap) {
                    return invalid(format!("bad power modulus {self:?}"));
                }
                Ok(())
            }
            Modulus::Smoothed { hat } => hat.check(),
        }
    }

    pub fn eval(&self, l: f64) -> f64 {
        if l.is_nan() {
            return f64::NAN;
        }
        if l <= 0.0 {
            return 0.0;
        }
        let capped = |v: f64, cap: &Option<f64>| cap.map_or(v, |c| v.min(c));
        match self {
            Modulus::Zero => 0.0,
            Modulus::Infinite => f64::INFINITY,
            Modulus::Linear { k, cap } => {
                if l.is_infinite() {
                    return capped(if *k == 0.0 { 0.0 } else { f64::INFINITY }, cap);
                }
                capped(k * l, cap)
            }
            Modulus::Power { k, alpha, cap } => {
                if l.is_infinite() {
                    return capped(if *k == 0.0 { 0.0 } else { f64::INFINITY }, cap);
                }
                capped(k * l.powf(*alpha), cap)
            }
            Modulus::Smoothed { hat } => inf_over_l(l, 0.0, hat).value,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Modulus::Zero => true,
            Modulus::Linear { k, .. } | Modulus::Power { k, .. } => *k == 0.0,
            Modulus::Infinite => false,
            Modulus::Smoothed { .. } => false,
        }
    }

    pub fn is_infinite(&self) -> bool {
        match self {
            Modulus::Infinite => true,
            Modulus::Smoothed { hat } => hat.is_infinite(),
            _ => false,
        }
    }

    /// Pointwise max of two linear-or-zero moduli; anything else keeps the
    /// larger by a probe at 1.
    pub fn max_linear(a: &Modulus, b: &Modulus) -> Modulus {
        match (a, b) {
            (Modulus::Infinite, _) | (_, Modulus::Infinite) => Modulus::Infinite,
            (Modulus::Zero, x) | (x, Modulus::Zero) => x.clone(),
            (Modulus::Linear { k: k1, cap: None }, Modulus::Linear { k: k2, cap: None }) => {
                Modulus::linear(k1.max(*k2))
            }
            _ => {
                if a.eval(1.0) >= b.eval(1.0) {
                    a.clone()
                } else {
                    b.clone()
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LChoice {
    pub value: f64,
    /// minimiser, `inf` when the infimum is the limit L -> infinity
    pub l: f64,
}

pub const L_MAX: f64 = 1e6;
const GOLDEN_ITERS: usize = 200;
const SCAN_POINTS: usize = 240;

/// `inf { a L + b + eta(2/L) : L > 1 + eta(2/L) }`.
///
/// The admissible set is `[L_min, inf)` with `L_min` the root of
/// `L = 1 + eta(2/L)`. For `a = 0` the value is the limit `b`.
pub fn inf_over_l(a: f64, b: f64, eta: &Modulus) -> LChoice {
    if eta.is_infinite() || a.is_infinite() || b.is_infinite() || a.is_nan() || b.is_nan() {
        return LChoice { value: f64::INFINITY, l: f64::NAN };
    }
    if a <= 0.0 {
        return LChoice { value: b, l: f64::INFINITY };
    }
    let phi = |l: f64| a * l + b + eta.eval(2.0 / l);
    let l_min = admissible_min(eta);
    if l_min >= L_MAX {
        return LChoice { value: phi(l_min), l: l_min };
    }

    let (lo_log, hi_log) = (l_min.ln(), L_MAX.ln());
    let step = (hi_log - lo_log) / (SCAN_POINTS - 1) as f64;
    let mut best_i = 0;
    let mut best_v = phi(l_min);
    for i in 1..SCAN_POINTS {
        let v = phi((lo_log + step * i as f64).exp());
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let lo = (lo_log + step * best_i.saturating_sub(1) as f64).exp();
    let hi = (lo_log + step * (best_i + 1).min(SCAN_POINTS - 1) as f64).exp();

    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut x0, mut x1) = (lo, hi);
    let mut c = x1 - g * (x1 - x0);
    let mut d = x0 + g * (x1 - x0);
    let (mut fc, mut fd) = (phi(c), phi(d));
    for _ in 0..GOLDEN_ITERS {
        if fc < fd {
            x1 = d;
            d = c;
            fd = fc;
            c = x1 - g * (x1 - x0);
            fc = phi(c);
        } else {
            x0 = c;
            c = d;
            fc = fd;
            d = x0 + g * (x1 - x0);
            fd = phi(d);
        }
        if (x1 - x0).abs() <= 1e-14 * x1.max(1.0) {
            break;
        }
    }
    let mut out = LChoice { value: best_v, l: (lo_log + step * best_i as f64).exp() };
    for (l, v) in [(c, fc), (d, fd)] {
        if v < out.value {
            out = LChoice { value: v, l };
        }
    }
    out
}

/// Smallest `L >= 1` with `L >= 1 + eta(2/L)`.
pub fn admissible_min(eta: &Modulus) -> f64 {
    let f = |l: f64| l - 1.0 - eta.eval(2.0 / l);
    if f(1.0) >= 0.0 {
        return 1.0;
    }
    let mut hi = 2.0 + eta.eval(2.0);
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
    }
    let mut lo = 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation() {
        assert_eq!(Modulus::Zero.eval(3.0), 0.0);
        assert_eq!(Modulus::linear(2.0).eval(0.25), 0.5);
        let p = Modulus::Power { k: 1.0, alpha: 0.5, cap: Some(1.5) };
        assert!((p.eval(0.25) - 0.5).abs() < 1e-15);
        assert_eq!(p.eval(100.0), 1.5);
        assert_eq!(Modulus::Infinite.eval(0.0), 0.0);
        assert!(Modulus::Infinite.eval(1e-9).is_infinite());
    }

    #[test]
    fn check_rejects_bad_params() {
        assert!(Modulus::Power { k: 1.0, alpha: 1.5, cap: None }.check().is_err());
        assert!(Modulus::Linear { k: -1.0, cap: None }.check().is_err());
        assert!(Modulus::Linear { k: 1.0, cap: Some(0.0) }.check().is_err());
    }

    #[test]
    fn inf_over_l_linear_closed_form() {
        // a L + 2K/L minimised at L = sqrt(2K/a) when admissible
        let eta = Modulus::linear(0.5);
        let a = 0.01;
        let r = inf_over_l(a, 0.0, &eta);
        let l_star = (2.0 * 0.5 / a).sqrt();
        assert!((r.l - l_star).abs() < 1e-6 * l_star);
        assert!((r.value - 2.0 * (a * 1.0f64).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn inf_over_l_boundary() {
        // eta = 0: minimiser is L = 1
        let r = inf_over_l(0.3, 0.1, &Modulus::Zero);
        assert!((r.value - 0.4).abs() < 1e-12);
        let r = inf_over_l(0.0, 0.7, &Modulus::linear(3.0));
        assert_eq!(r.value, 0.7);
    }

    #[test]
    fn admissible_root() {
        let l = admissible_min(&Modulus::linear(1.0));
        // L = 1 + 2/L  ->  L = 2
        assert!((l - 2.0).abs() < 1e-12);
    }

    #[test]
    fn smoothed_is_modulus_like() {
        let m = Modulus::Smoothed { hat: Box::new(Modulus::linear(1.0)) };
        assert_eq!(m.eval(0.0), 0.0);
        let xs = [0.001, 0.01, 0.1, 0.5, 1.0];
        for w in xs.windows(2) {
            assert!(m.eval(w[0]) <= m.eval(w[1]) + 1e-12);
        }
        assert!(m.eval(0.2) <= m.eval(0.1) + m.eval(0.1) + 1e-9);
    }
}
