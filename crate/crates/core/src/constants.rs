//! Certified constants: the polynomial interpolation constant, bounds on the
//! derivatives of the leading eigenfunction, the per-element error factor
//! and the tail constants of truncated infinite alphabets.
//!
//! Every returned value is rounded upward; a slightly larger constant only
//! widens the final interval.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Upward slack applied to closed-form constants.
const UPWARD: f64 = 1.0 + 1e-13;

/// Infimum parameters that are open constraints (`u < s`, `M > 1`) are
/// approached within this relative gap.
const OPEN_GAP: f64 = 1e-9;

/// `sum_{|beta| = 2} (beta!)^-2` over multi-indices in `n` variables.
pub fn second_order_multi_index_sum(n: usize) -> f64 {
    // pure second partials contribute 1/4 each, mixed ones 1
    n as f64 / 4.0 + (n * (n - 1) / 2) as f64
}

/// Constant of the L-infinity polynomial approximation estimate for P1
/// interpolation: `3 sqrt(6)` in the plane, `6 sqrt(15)` in space.
pub fn bramble_hilbert_constant(n: usize) -> Result<f64> {
    match n {
        2 => Ok(6.0 * second_order_multi_index_sum(2).sqrt()),
        3 => Ok(12.0 * second_order_multi_index_sum(3).sqrt()),
        other => Err(Error::UnsupportedDimension(other)),
    }
}

/// Rounds `x > 0` up to `digits` significant digits.
pub fn round_up_significant(x: f64, digits: i32) -> f64 {
    if x <= 0.0 || !x.is_finite() {
        return x;
    }
    let exp = x.log10().floor() as i32 - (digits - 1);
    let unit = 10f64.powi(exp);
    let mut r = (x / unit).ceil() * unit;
    if r < x {
        r += unit;
    }
    r
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub(crate) fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Grid search followed by golden-section refinement around the best cell.
fn grid_golden(f: impl Fn(f64) -> f64, a: f64, b: f64, cells: usize) -> (f64, f64) {
    let step = (b - a) / cells as f64;
    let (mut best_i, mut best) = (1, f64::INFINITY);
    for i in 1..cells {
        let v = f(a + step * i as f64);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let lo = a + step * (best_i as f64 - 1.0);
    let hi = a + step * (best_i as f64 + 1.0);
    let (x, v) = golden_min(&f, lo.max(a + 1e-12 * (b - a)), hi.min(b - 1e-12 * (b - a)), 200);
    if v <= best {
        (x, v)
    } else {
        (a + step * best_i as f64, best)
    }
}

/// Contraction factor of the complexified ball: `1 - s(2 + s)`.
#[inline]
fn ball_factor(s: f64) -> f64 {
    1.0 - s * (2.0 + s)
}

/// `min_{0 < s < sqrt(2) - 1} prefactor * s^-order * (1 - s(2+s))^-t`, the
/// scale-free part of the Mobius derivative bound. Returns the minimum and
/// the minimizing `s`.
pub fn mobius_scale_free_minimum(prefactor: f64, order: u32, t: f64) -> (f64, f64) {
    let smax = 2f64.sqrt() - 1.0;
    let k = order as f64;
    let log_obj = |s: f64| -k * s.ln() - t * ball_factor(s).ln();
    let (s, v) = grid_golden(log_obj, 0.0, smax, 2000);
    // the bound needs u strictly below s
    let u = s * (1.0 - OPEN_GAP);
    let value = prefactor * u.powf(-k) * ball_factor(s).powf(-t);
    debug_assert!((value.ln() - (prefactor.ln() + v)).abs() < 1e-6);
    (value * UPWARD, s)
}

/// Bound `C` with `|D^alpha rho_t| <= C rho_t` for all `|alpha| = order`, for
/// systems of Mobius maps (or sphere inversions), with eigenfunction
/// analytic on an `eta`-neighbourhood.
pub fn derivative_constant_mobius(n: usize, t_upper: f64, eta: f64, order: u32) -> f64 {
    assert!(eta > 0.0 && t_upper > 0.0 && (1..=2).contains(&order));
    let alpha_factorial = if order == 2 { 2.0 } else { 1.0 };
    let pre = alpha_factorial * ((n as f64).sqrt() / eta).powi(order as i32);
    round_up_significant(mobius_scale_free_minimum(pre, order, t_upper).0, 4)
}

/// Optimal parameters of the analytic-map derivative bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticChoice {
    pub r: f64,
    pub s: f64,
    pub m: f64,
    pub l: f64,
    pub value: f64,
}

fn analytic_c_r(r: f64, eta: f64) -> f64 {
    let re = r * eta;
    ((1.0 + re).powi(3) / (1.0 - re).powi(5)).ln()
}

/// Log of `alpha! (M L / (s eta))^order exp(t C_r (L/(L-2))^2)` with `M -> 1`.
fn analytic_log_bound(alpha_factorial: f64, order: u32, t: f64, eta: f64, r: f64, s: f64, l: f64) -> f64 {
    let k = order as f64;
    let lr = l / (l - 2.0);
    alpha_factorial.ln() + k * (l / (s * eta)).ln() + t * analytic_c_r(r, eta) * lr * lr
}

/// Minimizes the analytic-map derivative bound over `r`, `s <= r`, `M > 1`
/// and `L > 2`. With `s_fixed`, `r = s = s_fixed` (within the open gap).
pub fn analytic2d_optimum(t_upper: f64, eta: f64, order: u32, s_fixed: Option<f64>) -> AnalyticChoice {
    assert!(eta > 0.0 && order <= 2);
    let alpha_factorial = if order == 2 { 2.0 } else { 1.0 };
    let rmax = (1.0f64).min(1.0 / eta) * (1.0 - 1e-9);

    // best L for a given r (s -> r)
    let best_l = |r: f64| -> (f64, f64) {
        let s = r * (1.0 - OPEN_GAP);
        if order == 0 {
            // without the derivative prefactor the exponent is minimized as L grows
            let l = 1e8;
            return (l, analytic_log_bound(1.0, 0, t_upper, eta, r, s, l));
        }
        let f = |u: f64| analytic_log_bound(alpha_factorial, order, t_upper, eta, r, s, 2.0 + u.exp());
        let (u, v) = grid_golden(f, -12.0, 12.0, 480);
        (2.0 + u.exp(), v)
    };

    let (r, l, v) = match s_fixed {
        Some(s) => {
            assert!(s > 0.0 && s < rmax, "fixed s must lie in (0, min(1, 1/eta))");
            let (l, v) = best_l(s);
            (s, l, v)
        }
        None if order == 0 => {
            let r = 1e-9 * rmax;
            let (l, v) = best_l(r);
            (r, l, v)
        }
        None => {
            let (r, v) = grid_golden(|r| best_l(r).1, 0.0, rmax, 400);
            (r, best_l(r).0, v)
        }
    };
    let m = 1.0 + OPEN_GAP;
    let s = r * (1.0 - OPEN_GAP);
    let value = (v + order as f64 * m.ln()).exp() * UPWARD;
    AnalyticChoice { r, s, m, l, value }
}

/// Bound `C` with `|D^alpha rho_t| <= C rho_t` for `|alpha| = order` for
/// planar systems of holomorphic (non-Mobius) maps.
pub fn derivative_constant_analytic2d(t_upper: f64, eta: f64, order: u32, s_fixed: Option<f64>) -> f64 {
    round_up_significant(analytic2d_optimum(t_upper, eta, order, s_fixed).value, 4)
}

/// Relative interpolation error factor of an element of diameter `h_tau`.
pub fn interpolation_error_factor(h_tau: f64, c1: f64, c2: f64, c_bh: f64) -> Result<f64> {
    let err = 2.0 * c_bh * (c1 * h_tau + 1.0) * c2 * h_tau * h_tau * UPWARD;
    if err >= 1.0 {
        // aim for err = 1/2, ignoring the first-order correction
        let suggested_h = (0.5 / (2.0 * c_bh * c2 * (1.0 + c1 * h_tau))).sqrt();
        return Err(Error::ErrTooLarge { err, suggested_h });
    }
    Ok(err)
}

/// Surface measure of the unit sphere in `R^n`.
pub fn unit_sphere_measure(n: usize) -> f64 {
    match n {
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => panic!("sphere measure only for n = 2, 3"),
    }
}

/// Tail constant for the lattice continued-fraction alphabet truncated at
/// `|e| < R + 2`: `(omega_{n-1}/2) C1 R^{n-2t} / (2t - n)`.
pub fn tail_constant_cf(n: usize, t: f64, radius: f64, c1: f64) -> Result<f64> {
    if n != 2 && n != 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    if t <= n as f64 / 2.0 {
        return Err(Error::Range(format!("lattice tail diverges for t = {t} <= {}", n as f64 / 2.0)));
    }
    if radius < 1.0 {
        return Err(Error::Range(format!("truncation radius {radius} below 1")));
    }
    let nf = n as f64;
    Ok(unit_sphere_measure(n) / 2.0 * c1 * radius.powf(nf - 2.0 * t) / (2.0 * t - nf) * UPWARD)
}

/// Tail constant of the Apollonian alphabet truncated at `n <= N`:
/// `k_count 4^t N^{1-2t} / (2t - 1)`.
pub fn tail_constant_apollonian(t: f64, n_trunc: usize, k_count: usize) -> Result<f64> {
    if t <= 0.5 {
        return Err(Error::Range(format!("Apollonian tail diverges for t = {t} <= 1/2")));
    }
    if n_trunc < 1 {
        return Err(Error::Range("truncation index must be at least 1".into()));
    }
    let n = n_trunc as f64;
    Ok(k_count as f64 * 4f64.powf(t) * n.powf(1.0 - 2.0 * t) / (2.0 * t - 1.0) * UPWARD)
}

/// How the eigenfunction derivative constants are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstantMethod {
    Mobius,
    Analytic2d,
}

/// One computed constant together with its inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantAudit {
    pub name: String,
    pub value: f64,
    pub t_upper: f64,
    pub eta: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub c_bh: f64,
    pub c1: f64,
    pub c2: f64,
    pub eta: f64,
    pub h_max: f64,
    pub err_max: f64,
    pub t_upper_used: f64,
    pub method: ConstantMethod,
}

impl ErrorBudget {
    /// Constants valid for every exponent up to `t_upper` on elements of
    /// diameter at most `h_max`, with analyticity margin `eta`.
    pub fn compute(method: ConstantMethod, n: usize, t_upper: f64, eta: f64, h_max: f64) -> Result<Self> {
        if eta <= 0.0 {
            return Err(Error::Range(format!("analyticity margin {eta} must be positive")));
        }
        let c_bh = bramble_hilbert_constant(n)?;
        let (c1, c2) = match method {
            ConstantMethod::Mobius => {
                (derivative_constant_mobius(n, t_upper, eta, 1), derivative_constant_mobius(n, t_upper, eta, 2))
            }
            ConstantMethod::Analytic2d => {
                if n != 2 {
                    return Err(Error::UnsupportedDimension(n));
                }
                (
                    derivative_constant_analytic2d(t_upper, eta, 1, None),
                    derivative_constant_analytic2d(t_upper, eta, 2, None),
                )
            }
        };
        let err_max = interpolation_error_factor(h_max, c1, c2, c_bh)?;
        Ok(Self { c_bh, c1, c2, eta, h_max, err_max, t_upper_used: t_upper, method })
    }

    pub fn audit(&self) -> Vec<ConstantAudit> {
        let entry = |name: &str, value: f64, detail: String| ConstantAudit {
            name: name.to_string(),
            value,
            t_upper: self.t_upper_used,
            eta: self.eta,
            detail,
        };
        vec![
            entry("C_BH", self.c_bh, String::new()),
            entry("C1", self.c1, format!("{:?}", self.method)),
            entry("C2", self.c2, format!("{:?}", self.method)),
            entry("err", self.err_max, format!("h_max = {}", self.h_max)),
        ]
    }
}
