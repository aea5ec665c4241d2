//! Independent oracles used by the tests and the `--oracle` output.
//!
//! Nothing here touches the convolution pipeline: prices come from the
//! Black–Scholes formulas, adaptive Gauss–Kronrod quadrature of the pricing
//! integral, or backward induction on a uniform grid where each step is a
//! spectral multiplication by the characteristic function.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::levy::LevyModel;
use crate::payoffs::{PayoffKind, PayoffSpec};
use crate::pricing::{BarrierDirection, BarrierSpec, ExerciseSchedule, MarketParams};
use crate::special::norm_cdf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsKind {
    Call,
    Put,
}

fn bs_d(s: f64, k: f64, r: f64, q: f64, sigma: f64, tau: f64) -> (f64, f64) {
    let v = sigma * tau.sqrt();
    let d1 = ((s / k).ln() + (r - q + 0.5 * sigma * sigma) * tau) / v;
    (d1, d1 - v)
}

/// Black–Scholes price with continuous dividend yield `q`.
pub fn bs_price(s: f64, k: f64, r: f64, q: f64, sigma: f64, tau: f64, kind: BsKind) -> f64 {
    let (d1, d2) = bs_d(s, k, r, q, sigma, tau);
    let fs = s * (-q * tau).exp();
    let fk = k * (-r * tau).exp();
    match kind {
        BsKind::Call => fs * norm_cdf(d1) - fk * norm_cdf(d2),
        BsKind::Put => fk * norm_cdf(-d2) - fs * norm_cdf(-d1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsGreeks {
    pub delta: f64,
    pub gamma: f64,
    pub vega: f64,
}

pub fn bs_greeks(s: f64, k: f64, r: f64, q: f64, sigma: f64, tau: f64, kind: BsKind) -> BsGreeks {
    let (d1, _) = bs_d(s, k, r, q, sigma, tau);
    let dq = (-q * tau).exp();
    let pdf = (-0.5 * d1 * d1).exp() / (2.0 * PI).sqrt();
    let delta = match kind {
        BsKind::Call => dq * norm_cdf(d1),
        BsKind::Put => -dq * norm_cdf(-d1),
    };
    BsGreeks {
        delta,
        gamma: dq * pdf / (s * sigma * tau.sqrt()),
        vega: s * dq * pdf * tau.sqrt(),
    }
}

const GK_NODES: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const GK_WK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const GK_WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = GK_WK[7] * fc;
    let mut g = GK_WG[3] * fc;
    for j in 0..7 {
        let x = h * GK_NODES[j];
        let s = f(c - x) + f(c + x);
        k += GK_WK[j] * s;
        if j % 2 == 1 {
            g += GK_WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7, 15) quadrature to absolute tolerance `tol`.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> Result<f64> {
        let (v, err) = gk15(f, a, b);
        if !v.is_finite() {
            return Err(Error::QuadratureNonConvergence { estimate: v });
        }
        if err <= tol || (b - a).abs() < 1e-14 * (1.0 + a.abs()) {
            return Ok(v);
        }
        if depth >= 60 {
            return Err(Error::QuadratureNonConvergence { estimate: v });
        }
        let m = 0.5 * (a + b);
        Ok(rec(f, a, m, 0.5 * tol, depth + 1)? + rec(f, m, b, 0.5 * tol, depth + 1)?)
    }
    rec(&f, a, b, tol, 0)
}

/// Density of the log-return: the closed form when there is one, otherwise
/// the Fourier-series partial sum on `[c, d]` with enough terms for the
/// coefficients to decay below `1e-16`.
pub fn reference_density(model: &LevyModel, t: f64, l_n: f64) -> Result<Box<dyn Fn(f64) -> f64 + '_>> {
    if model.has_closed_form() {
        return Ok(Box::new(move |x| model.pdf_closed_form(x, t).unwrap_or(f64::NAN)));
    }
    let iv = model.truncation_interval(t, l_n)?;
    let (c, p) = (iv.lo(), iv.width());
    let coeff = |k: usize| model.char_fn(Complex64::new(-2.0 * PI * k as f64 / p, 0.0), t);
    let mut b: Vec<Complex64> = Vec::new();
    let mut k = 0usize;
    let mut quiet = 0;
    while quiet < 16 && k < 1 << 20 {
        let v = coeff(k);
        quiet = if v.norm() < 1e-17 { quiet + 1 } else { 0 };
        b.push(v);
        k += 1;
    }
    Ok(Box::new(move |x: f64| {
        if x < c || x > c + p {
            return 0.0;
        }
        let mut s = 0.0;
        for (k, bk) in b.iter().enumerate().skip(1) {
            s += (bk * Complex64::from_polar(1.0, 2.0 * PI * k as f64 * x / p)).re;
        }
        (b[0].re + 2.0 * s) / p
    }))
}

/// European price at `(market.spot, strike)` by adaptive quadrature of
/// `e^{-rτ} ∫ U(S e^χ, K) g(χ) dχ` over the truncation interval, with panels
/// split at the payoff kink and at the centre of the density.
pub fn quad_price_european(
    model: &LevyModel,
    spec: &PayoffSpec,
    market: &MarketParams,
    strike: f64,
    l_n: f64,
) -> Result<f64> {
    let tau = market.tau();
    let iv = model.truncation_interval(tau, l_n)?;
    let g = reference_density(model, tau, l_n)?;
    let xt = (market.spot / strike).ln();
    let mut pts = vec![iv.lo(), iv.hi(), -xt, model.drift(tau)];
    pts.retain(|&p| p >= iv.lo() && p <= iv.hi());
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let mut total = 0.0;
    for w in pts.windows(2) {
        if w[1] > w[0] {
            total += gauss_kronrod(|x| spec.value(xt + x) * g(x), w[0], w[1], 1e-14)?;
        }
    }
    Ok((-market.r * tau).exp() * strike.powi(spec.strike_power()) * total)
}

/// Grid controls for [`quad_backward_induction`].
#[derive(Debug, Clone, Copy)]
pub struct GridOptions {
    /// Number of grid points (a power of two is fastest).
    pub points: usize,
    /// Half width of the periodic `x̃` domain; `None` picks one from the
    /// cumulants of the full horizon.
    pub half_width: Option<f64>,
    /// Also solve on half the points and extrapolate away the `O(Δx²)` error
    /// from sampling kinked payoffs.
    pub extrapolate: bool,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            points: 1 << 18,
            half_width: None,
            extrapolate: true,
        }
    }
}

/// Normalised values on a uniform `x̃` grid.
#[derive(Debug, Clone)]
pub struct Grid {
    pub x0: f64,
    pub dx: f64,
    pub values: Vec<f64>,
}

impl Grid {
    /// Cubic interpolation at `x̃`.
    pub fn value_at(&self, xt: f64) -> f64 {
        let n = self.values.len();
        let s = (xt - self.x0) / self.dx;
        let j = (s.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let mut v = 0.0;
        for a in 0..4 {
            let mut w = 1.0;
            for b in 0..4 {
                if a != b {
                    w *= (s - (j + b) as f64) / (a as f64 - b as f64);
                }
            }
            v += w * self.values[j + a];
        }
        v
    }
}

/// Grid solution, optionally paired with a half-resolution solve for
/// extrapolation.
#[derive(Debug, Clone)]
pub struct GridSolution {
    pub fine: Grid,
    pub coarse: Option<Grid>,
    strike: f64,
    power: i32,
}

impl GridSolution {
    /// Normalised value at `x̃`.
    pub fn value_at(&self, xt: f64) -> f64 {
        let f = self.fine.value_at(xt);
        match &self.coarse {
            Some(c) => (4.0 * f - c.value_at(xt)) / 3.0,
            None => f,
        }
    }

    /// Price at spot `s` for the strike the grid was built with.
    pub fn price(&self, s: f64) -> f64 {
        self.strike.powi(self.power) * self.value_at((s / self.strike).ln())
    }
}

/// Backward induction on a uniform grid. Each step multiplies the discrete
/// Fourier transform of the value by `φ(u, Δt)`; at every date after `t_0`
/// the early-exercise maximum (for Bermudan calls and puts) or the barrier
/// mask is applied. Pass `early_exercise = false` and no barrier for a
/// European price.
#[allow(clippy::too_many_arguments)]
pub fn quad_backward_induction(
    model: &LevyModel,
    spec: &PayoffSpec,
    market: &MarketParams,
    strike: f64,
    schedule: &ExerciseSchedule,
    early_exercise: bool,
    barrier: Option<&BarrierSpec>,
    opts: &GridOptions,
) -> Result<GridSolution> {
    let m = opts.points;
    let solve = |m| solve_grid(model, spec, market, strike, schedule, early_exercise, barrier, opts.half_width, m);
    Ok(GridSolution {
        fine: solve(m)?,
        coarse: if opts.extrapolate { Some(solve(m / 2)?) } else { None },
        strike,
        power: spec.strike_power(),
    })
}

#[allow(clippy::too_many_arguments)]
fn solve_grid(
    model: &LevyModel,
    spec: &PayoffSpec,
    market: &MarketParams,
    strike: f64,
    schedule: &ExerciseSchedule,
    early_exercise: bool,
    barrier: Option<&BarrierSpec>,
    half_width: Option<f64>,
    m: usize,
) -> Result<Grid> {
    if early_exercise && !matches!(spec.kind, PayoffKind::Call | PayoffKind::Put) {
        return Err(Error::InvalidParameter("early exercise needs a call or a put".into()));
    }
    if m < 16 {
        return Err(Error::InvalidParameter("grid needs at least 16 points".into()));
    }
    let tau = market.tau();
    let half = match half_width {
        Some(w) => w,
        None => 2.0 * model.truncation_interval(tau, 12.0)?.hi() + 4.0,
    };
    let dx = 2.0 * half / m as f64;
    let kp = strike.powi(spec.strike_power());
    let b = barrier.map(|b| (b.level / strike).ln());
    let anchor = b.unwrap_or(0.0);
    let x0 = anchor - ((anchor + half) / dx).round() * dx;
    let xs: Vec<f64> = (0..m).map(|j| x0 + j as f64 * dx).collect();
    let j_anchor = ((anchor - x0) / dx).round() as usize;

    let payoff_at = |j: usize| -> f64 {
        if b.is_none() && j == j_anchor {
            // the payoff may jump at the strike: take the mean of both sides
            0.5 * (spec.value(-1e-300) + spec.value(0.0))
        } else {
            spec.value(xs[j])
        }
    };
    let payoff: Vec<f64> = (0..m).map(payoff_at).collect();
    let dead = |x: f64| match barrier.map(|b| b.direction) {
        Some(BarrierDirection::DownAndOut) => x < b.unwrap(),
        Some(BarrierDirection::UpAndOut) => x > b.unwrap(),
        None => false,
    };
    let apply_mask = |v: &mut [f64], rebate: f64| {
        if barrier.is_none() {
            return;
        }
        for j in 0..m {
            if j == j_anchor {
                v[j] = 0.5 * (v[j] + rebate);
            } else if dead(xs[j]) {
                v[j] = rebate;
            }
        }
    };

    let dates = schedule.dates();
    let mut v = payoff.clone();
    if let Some(bs) = barrier {
        apply_mask(&mut v, bs.rebate / kp);
    }
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let mut phi_cache: Option<(f64, Vec<Complex64>)> = None;
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for l in (0..schedule.len()).rev() {
        let dt = dates[l + 1] - dates[l];
        let fresh = match &phi_cache {
            Some((t, _)) => (t - dt).abs() > 1e-12 * dt,
            None => true,
        };
        if fresh {
            let phi: Vec<Complex64> = (0..m)
                .map(|k| {
                    let kk = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
                    model.char_fn(Complex64::new(2.0 * PI * kk / (m as f64 * dx), 0.0), dt)
                })
                .collect();
            phi_cache = Some((dt, phi));
        }
        let phi = &phi_cache.as_ref().unwrap().1;
        for (z, &x) in buf.iter_mut().zip(&v) {
            *z = Complex64::new(x, 0.0);
        }
        fwd.process(&mut buf);
        for (z, p) in buf.iter_mut().zip(phi) {
            *z *= p;
        }
        inv.process(&mut buf);
        let disc = (-market.r * dt).exp() / m as f64;
        for (x, z) in v.iter_mut().zip(&buf) {
            *x = disc * z.re;
        }
        if l == 0 {
            break;
        }
        if early_exercise {
            for (x, p) in v.iter_mut().zip(&payoff) {
                *x = x.max(*p);
            }
        }
        if let Some(bs) = barrier {
            let rebate = bs.rebate * (-market.r * (market.maturity - dates[l])).exp();
            apply_mask(&mut v, rebate / kp);
        }
    }
    Ok(Grid { x0, dx, values: v })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bs_parity_and_atm_formula() {
        let (s, k, r, q, sig, tau) = (100.0, 95.0, 0.05, 0.02, 0.3, 0.7);
        let c = bs_price(s, k, r, q, sig, tau, BsKind::Call);
        let p = bs_price(s, k, r, q, sig, tau, BsKind::Put);
        let res = c - p - s * (-q * tau).exp() + k * (-r * tau).exp();
        assert!(res.abs() < 1e-13);
        let c = bs_price(100.0, 100.0, 0.0, 0.0, 0.2, 1.0, BsKind::Call);
        assert!((c - 100.0 * (2.0 * norm_cdf(0.1) - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn bs_zero_vol_limit() {
        let mut last = f64::INFINITY;
        for sig in [0.2, 0.1, 0.05, 0.02, 0.01] {
            let p = bs_price(100.0, 95.0, 0.05, 0.0, sig, 1.0, BsKind::Put);
            assert!(p <= last);
            last = p;
        }
        assert!(last < 1e-12);
    }

    #[test]
    fn bs_greeks_match_differences() {
        let (s, k, r, q, sig, tau) = (100.0, 110.0, 0.03, 0.01, 0.25, 0.8);
        for kind in [BsKind::Call, BsKind::Put] {
            let g = bs_greeks(s, k, r, q, sig, tau, kind);
            let p = |s: f64, sig: f64| bs_price(s, k, r, q, sig, tau, kind);
            let h = 1e-3;
            let d = (p(s + h, sig) - p(s - h, sig)) / (2.0 * h);
            let gm = (p(s + h, sig) - 2.0 * p(s, sig) + p(s - h, sig)) / (h * h);
            let v = (p(s, sig + 1e-5) - p(s, sig - 1e-5)) / 2e-5;
            assert!((g.delta - d).abs() < 1e-9);
            assert!((g.gamma - gm).abs() < 1e-6);
            assert!((g.vega - v).abs() < 1e-7);
        }
    }

    #[test]
    fn gauss_kronrod_handles_log_singularity() {
        let v = gauss_kronrod(|x: f64| -x.ln(), 0.0, 1.0, 1e-13).unwrap();
        assert!((v - 1.0).abs() < 1e-11);
    }

    #[test]
    fn quad_matches_black_scholes() {
        let m = LevyModel::gbm(0.15, 0.03, 0.01).unwrap();
        let mk = MarketParams::new(100.0, 0.03, 0.01, 0.0, 1.0).unwrap();
        for k in [80.0, 100.0, 120.0] {
            let q = quad_price_european(&m, &PayoffSpec::put(), &mk, k, 10.0).unwrap();
            let e = bs_price(100.0, k, 0.03, 0.01, 0.15, 1.0, BsKind::Put);
            assert!((q - e).abs() < 1e-9, "K={k}: {q} vs {e}");
        }
        let d = quad_price_european(&m, &PayoffSpec::new(PayoffKind::CashOrNothingCall), &mk, 10.0, 10.0)
            .unwrap();
        assert!((d - (-0.03_f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn vg_density_is_normalised() {
        let m = LevyModel::vg(0.12, -0.14, 0.2, 0.1, 0.0).unwrap();
        let iv = m.truncation_interval(0.1, 10.0).unwrap();
        let g = reference_density(&m, 0.1, 10.0).unwrap();
        let c = m.drift(0.1);
        let total = gauss_kronrod(&g, iv.lo(), c, 1e-12).unwrap() + gauss_kronrod(&g, c, iv.hi(), 1e-12).unwrap();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn grid_single_step_matches_quadrature() {
        let m = LevyModel::nig(15.0, -5.0, 0.5, 0.05, 0.02).unwrap();
        let mk = MarketParams::new(100.0, 0.05, 0.02, 0.0, 1.0).unwrap();
        let s = ExerciseSchedule::uniform(0.0, 1.0, 1).unwrap();
        let g = quad_backward_induction(&m, &PayoffSpec::put(), &mk, 100.0, &s, false, None, &GridOptions::default())
            .unwrap();
        for sp in [85.0, 100.0, 115.0] {
            let mk_s = mk.with_spot(sp);
            let q = quad_price_european(&m, &PayoffSpec::put(), &mk_s, 100.0, 12.0).unwrap();
            assert!((g.price(sp) - q).abs() < 1e-10, "S={sp}: {} vs {q}", g.price(sp));
        }
    }

    #[test]
    fn grid_bermudan_dominates_and_converges() {
        let m = LevyModel::nig(15.0, -5.0, 0.5, 0.05, 0.02).unwrap();
        let mk = MarketParams::new(100.0, 0.05, 0.02, 0.0, 1.0).unwrap();
        let s = ExerciseSchedule::uniform(0.0, 1.0, 10).unwrap();
        let put = PayoffSpec::put();
        let fine = GridOptions {
            points: 1 << 20,
            ..GridOptions::default()
        };
        let a = quad_backward_induction(&m, &put, &mk, 100.0, &s, true, None, &fine).unwrap();
        let b = quad_backward_induction(&m, &put, &mk, 100.0, &s, true, None, &GridOptions::default()).unwrap();
        let e = quad_backward_induction(&m, &put, &mk, 100.0, &s, false, None, &GridOptions::default()).unwrap();
        for sp in [85.0, 100.0, 115.0] {
            assert!((a.price(sp) - b.price(sp)).abs() < 1e-7, "{} {}", a.price(sp), b.price(sp));
            assert!(b.price(sp) >= e.price(sp) - 1e-12);
        }
    }
}
