//! Delta, Gamma and Vega curves.
//!
//! Delta and Gamma differentiate the stored price curve `h(x̃)` in
//! coefficient space and apply the chain rule `∂x̃/∂S = 1/S`. Vega runs the
//! pricing convolution again with `∂g/∂σ` as the kernel.
//!
//! At a breakpoint the right-hand piece is used, which matters only where
//! the curve itself has a kink.

use serde::{Deserialize, Serialize};

use crate::chebcore::PiecewiseFun;
use crate::density::{build_reflected_vega_kernel, DensityOptions};
use crate::error::Result;
use crate::legconv::conv_window;
use crate::levy::LevyModel;
use crate::payoffs::{payoff_logspace, PayoffKind, PayoffSpec};
use crate::pricing::{check_rates, reach, result_breaks, MarketParams, PriceCurve, PricingOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GreekKind {
    Delta,
    Gamma,
    Vega,
}

/// A Greek as a function of `x̃ = log(S/K)`.
#[derive(Debug, Clone)]
pub struct GreekCurve {
    kind: GreekKind,
    curve: PiecewiseFun,
    discount: f64,
    market: MarketParams,
    payoff: PayoffSpec,
    parity: Option<f64>,
}

impl GreekCurve {
    pub fn kind(&self) -> GreekKind {
        self.kind
    }

    pub fn curve(&self) -> &PiecewiseFun {
        &self.curve
    }

    pub fn market(&self) -> &MarketParams {
        &self.market
    }

    pub fn payoff(&self) -> &PayoffSpec {
        &self.payoff
    }

    /// Greek for spot `s` and strike `k`.
    pub fn value(&self, s: f64, k: f64) -> f64 {
        let xt = (s / k).ln();
        let scale = self.discount * k.powi(self.payoff.strike_power());
        let v = self.curve.eval(xt);
        match self.kind {
            GreekKind::Delta => {
                let extra = self.parity.map_or(0.0, |sh| (xt + sh).exp());
                scale * (v + extra) / s
            }
            // the parity term drops out of h'' - h'
            GreekKind::Gamma => scale * v / (s * s),
            GreekKind::Vega => scale * v,
        }
    }

    pub fn at_strike(&self, k: f64) -> f64 {
        self.value(self.market.spot, k)
    }

    pub fn at_spot(&self, s: f64, k: f64) -> f64 {
        self.value(s, k)
    }

    pub fn at_strikes(&self, ks: &[f64]) -> Vec<f64> {
        ks.iter().map(|&k| self.at_strike(k)).collect()
    }
}

fn from_price(pc: &PriceCurve, kind: GreekKind, curve: PiecewiseFun) -> GreekCurve {
    GreekCurve {
        kind,
        curve,
        discount: pc.discount(),
        market: *pc.market(),
        payoff: *pc.payoff(),
        parity: pc.parity_shift(),
    }
}

pub fn delta(pc: &PriceCurve) -> GreekCurve {
    from_price(pc, GreekKind::Delta, pc.curve().differentiate(1))
}

pub fn gamma(pc: &PriceCurve) -> GreekCurve {
    let pieces = pc
        .curve()
        .pieces()
        .iter()
        .map(|p| p.differentiate(2).sub(&p.differentiate(1)))
        .collect();
    let curve = PiecewiseFun::new(pieces).expect("same breakpoints as the price curve");
    from_price(pc, GreekKind::Gamma, curve)
}

/// Vega curve. Models without an analytic `∂φ/∂σ` return
/// [`Error::VegaUnsupported`](crate::Error::VegaUnsupported).
pub fn vega(model: &LevyModel, spec: &PayoffSpec, market: &MarketParams, l_n: f64) -> Result<GreekCurve> {
    vega_with(model, spec, market, l_n, &PricingOptions::default())
}

pub fn vega_with(
    model: &LevyModel,
    spec: &PayoffSpec,
    market: &MarketParams,
    l_n: f64,
    opts: &PricingOptions,
) -> Result<GreekCurve> {
    spec.validate()?;
    check_rates(model, market)?;
    let tau = market.tau();
    let iv = model.truncation_interval(tau, l_n)?;
    let dens_opts: &DensityOptions = &opts.density;
    let kernel = build_reflected_vega_kernel(model, iv, tau, dens_opts)?;
    // the parity term does not depend on σ, so a call takes the put's vega
    let priced = if spec.kind == PayoffKind::Call { PayoffSpec::put() } else { *spec };
    let f = payoff_logspace(&priced, reach(iv, &kernel.fun)?)?;
    let breaks = result_breaks(&[0.0], &kernel.singularities, iv);
    let curve = conv_window(&f, &kernel.fun, iv, &breaks, &opts.fit)?;
    Ok(GreekCurve {
        kind: GreekKind::Vega,
        curve,
        discount: (-market.r * tau).exp(),
        market: *market,
        payoff: *spec,
        parity: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chebcore::Interval;
    use crate::payoffs::put_call_parity;
    use crate::pricing::price_european;
    use crate::reference::{bs_greeks, bs_price, BsKind};

    fn gbm1() -> (LevyModel, MarketParams) {
        (
            LevyModel::gbm(0.15, 0.03, 0.01).unwrap(),
            MarketParams::new(100.0, 0.03, 0.01, 0.0, 1.0).unwrap(),
        )
    }

    fn strikes(n: usize) -> Vec<f64> {
        (0..n).map(|i| 80.0 + 40.0 * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn zero_curve_has_zero_greeks() {
        let (_, mk) = gbm1();
        let pc = PriceCurve::new(PiecewiseFun::zero(Interval::new(-1.0, 1.0).unwrap()), 1.0, mk, PayoffSpec::put());
        assert_eq!(delta(&pc).at_strike(100.0), 0.0);
        assert_eq!(gamma(&pc).at_strike(90.0), 0.0);
    }

    #[test]
    fn gbm_put_greeks_match_closed_form() {
        let (m, mk) = gbm1();
        let pc = price_european(&m, &PayoffSpec::put(), &mk, 10.0).unwrap();
        let (d, g) = (delta(&pc), gamma(&pc));
        for k in strikes(101) {
            let e = bs_greeks(100.0, k, 0.03, 0.01, 0.15, 1.0, BsKind::Put);
            assert!((d.at_strike(k) - e.delta).abs() < 1e-8, "K={k}");
            assert!((g.at_strike(k) - e.gamma).abs() < 1e-7, "K={k}");
            assert!((-1.0..=0.0).contains(&d.at_strike(k)));
            assert!(g.at_strike(k) >= -1e-9);
        }
    }

    #[test]
    fn greeks_match_finite_differences() {
        let m = LevyModel::nig(15.0, -5.0, 0.5, 0.05, 0.02).unwrap();
        let mk = MarketParams::new(100.0, 0.05, 0.02, 0.0, 1.0).unwrap();
        let pc = price_european(&m, &PayoffSpec::put(), &mk, 10.0).unwrap();
        let (d, g) = (delta(&pc), gamma(&pc));
        for k in strikes(50) {
            let h = 1e-4 * 100.0;
            let p = |s: f64| pc.price_at_spot(s, k);
            let fd = (p(100.0 + h) - p(100.0 - h)) / (2.0 * h);
            let fg = (p(100.0 + h) - 2.0 * p(100.0) + p(100.0 - h)) / (h * h);
            assert!((d.at_spot(100.0, k) - fd).abs() < 1e-6, "K={k}");
            assert!((g.at_spot(100.0, k) - fg).abs() < 1e-5, "K={k}");
        }
    }

    #[test]
    fn call_greeks_follow_parity() {
        let (m, mk) = gbm1();
        let put = price_european(&m, &PayoffSpec::put(), &mk, 10.0).unwrap();
        let call = put_call_parity(&put, &mk).unwrap();
        let dq = (-0.01_f64).exp();
        for k in strikes(41) {
            let dc = delta(&call).at_strike(k);
            assert!((dc - delta(&put).at_strike(k) - dq).abs() < 1e-10);
            assert!((gamma(&call).at_strike(k) - gamma(&put).at_strike(k)).abs() < 1e-9);
        }
    }

    #[test]
    fn gbm_vega_matches_bump() {
        let (m, mk) = gbm1();
        let v = vega(&m, &PayoffSpec::put(), &mk, 10.0).unwrap();
        let vc = vega(&m, &PayoffSpec::call(), &mk, 10.0).unwrap();
        for k in strikes(50) {
            let h = 1e-5;
            let bump = (bs_price(100.0, k, 0.03, 0.01, 0.15 + h, 1.0, BsKind::Put)
                - bs_price(100.0, k, 0.03, 0.01, 0.15 - h, 1.0, BsKind::Put))
                / (2.0 * h);
            assert!((v.at_strike(k) - bump).abs() < 1e-5, "K={k}: {} vs {bump}", v.at_strike(k));
            assert!((vc.at_strike(k) - v.at_strike(k)).abs() < 1e-12);
        }
    }

    #[test]
    fn deep_otm_vega_vanishes() {
        let (m, mk) = gbm1();
        let v = vega(&m, &PayoffSpec::put(), &mk, 10.0).unwrap();
        // K well below the lower end of the support in x̃
        let k = 100.0 * (-v.curve().support().hi() * 0.98).exp();
        assert!(v.at_strike(k).abs() < 1e-10);
    }

    #[test]
    fn vg_vega_matches_bump() {
        let (sig, th, nu, r, q, t) = (0.12, -0.14, 0.2, 0.1, 0.0, 0.5);
        let mk = MarketParams::new(100.0, r, q, 0.0, t).unwrap();
        let m = LevyModel::vg(sig, th, nu, r, q).unwrap();
        let v = vega(&m, &PayoffSpec::put(), &mk, 10.0).unwrap();
        let h = 1e-5;
        let up = price_european(&LevyModel::vg(sig + h, th, nu, r, q).unwrap(), &PayoffSpec::put(), &mk, 10.0).unwrap();
        let dn = price_european(&LevyModel::vg(sig - h, th, nu, r, q).unwrap(), &PayoffSpec::put(), &mk, 10.0).unwrap();
        for k in strikes(30) {
            let bump = (up.price_at_strike(k) - dn.price_at_strike(k)) / (2.0 * h);
            assert!((v.at_strike(k) - bump).abs() < 1e-4, "K={k}: {} vs {bump}", v.at_strike(k));
        }
    }

    #[test]
    fn cgmy_vega_is_unsupported() {
        let m = LevyModel::cgmy(1.0, 5.0, 5.0, 0.5, 0.1, 0.0).unwrap();
        let mk = MarketParams::new(1.0, 0.1, 0.0, 0.0, 1.0).unwrap();
        assert!(matches!(
            vega(&m, &PayoffSpec::put(), &mk, 8.0),
            Err(crate::Error::VegaUnsupported(_))
        ));
    }
}
