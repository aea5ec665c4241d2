//! Exponential Lévy models: characteristic functions, compensators,
//! closed-form densities, cumulants and the truncation interval.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::chebcore::Interval;
use crate::error::{Error, Result};
use crate::special::bessel_k_scaled;

/// Model-specific parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelKind {
    Gbm {
        sigma: f64,
    },
    Nig {
        alpha: f64,
        beta: f64,
        delta: f64,
        /// Extra Brownian component; zero for the pure NIG model.
        #[serde(default)]
        sigma: f64,
    },
    Vg {
        sigma: f64,
        theta: f64,
        nu: f64,
    },
    Cgmy {
        #[serde(alias = "C")]
        c: f64,
        #[serde(alias = "G")]
        g: f64,
        #[serde(alias = "M")]
        m: f64,
        #[serde(alias = "Y")]
        y: f64,
    },
}

/// A Lévy model together with the rates that fix its risk-neutral drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevyModel {
    #[serde(flatten)]
    pub kind: ModelKind,
    pub r: f64,
    #[serde(default)]
    pub q: f64,
}

/// First, second and fourth cumulants of `log(S_T/S_t)` over a horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cumulants {
    pub c1: f64,
    pub c2: f64,
    pub c4: f64,
}

fn param(ok: bool, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg.to_string()))
    }
}

impl LevyModel {
    pub fn new(kind: ModelKind, r: f64, q: f64) -> Result<Self> {
        let m = Self { kind, r, q };
        m.validate()?;
        Ok(m)
    }

    pub fn gbm(sigma: f64, r: f64, q: f64) -> Result<Self> {
        Self::new(ModelKind::Gbm { sigma }, r, q)
    }

    pub fn nig(alpha: f64, beta: f64, delta: f64, r: f64, q: f64) -> Result<Self> {
        Self::new(
            ModelKind::Nig {
                alpha,
                beta,
                delta,
                sigma: 0.0,
            },
            r,
            q,
        )
    }

    pub fn vg(sigma: f64, theta: f64, nu: f64, r: f64, q: f64) -> Result<Self> {
        Self::new(ModelKind::Vg { sigma, theta, nu }, r, q)
    }

    pub fn cgmy(c: f64, g: f64, m: f64, y: f64, r: f64, q: f64) -> Result<Self> {
        Self::new(ModelKind::Cgmy { c, g, m, y }, r, q)
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ModelKind::Gbm { .. } => "GBM",
            ModelKind::Nig { .. } => "NIG",
            ModelKind::Vg { .. } => "VG",
            ModelKind::Cgmy { .. } => "CGMY",
        }
    }

    /// Checks the parameter constraints, including finiteness of the
    /// compensator.
    pub fn validate(&self) -> Result<()> {
        param(self.r.is_finite() && self.q.is_finite(), "rates must be finite")?;
        match self.kind {
            ModelKind::Gbm { sigma } => param(sigma > 0.0 && sigma.is_finite(), "GBM needs sigma > 0"),
            ModelKind::Nig {
                alpha,
                beta,
                delta,
                sigma,
            } => {
                param(alpha.is_finite() && beta.is_finite() && delta.is_finite(), "NIG parameters must be finite")?;
                param(alpha > beta.abs(), "NIG needs alpha > |beta|")?;
                param(delta > 0.0, "NIG needs delta > 0")?;
                param(sigma >= 0.0 && sigma.is_finite(), "NIG needs sigma >= 0")?;
                param(alpha > (beta + 1.0).abs(), "NIG needs alpha > |beta + 1| for a finite compensator")
            }
            ModelKind::Vg { sigma, theta, nu } => {
                param(sigma > 0.0 && sigma.is_finite(), "VG needs sigma > 0")?;
                param(nu > 0.0 && nu.is_finite() && theta.is_finite(), "VG needs nu > 0")?;
                param(
                    1.0 - theta * nu - 0.5 * sigma * sigma * nu > 0.0,
                    "VG needs 1 - theta*nu - sigma^2*nu/2 > 0",
                )
            }
            ModelKind::Cgmy { c, g, m, y } => {
                param(c > 0.0 && c.is_finite(), "CGMY needs C > 0")?;
                param(g > 0.0 && g.is_finite(), "CGMY needs G > 0")?;
                param(m > 1.0 && m.is_finite(), "CGMY needs M > 1")?;
                param(y < 2.0 && y.is_finite(), "CGMY needs Y < 2")?;
                param(y != 0.0 && y != 1.0, "CGMY with Y = 0 or Y = 1 is not supported")
            }
        }
    }

    /// Lévy exponent per unit time, without the risk-neutral drift.
    pub fn psi(&self, u: Complex64) -> Complex64 {
        let i = Complex64::i();
        match self.kind {
            ModelKind::Gbm { sigma } => -0.5 * sigma * sigma * u * u,
            ModelKind::Nig {
                alpha,
                beta,
                delta,
                sigma,
            } => {
                let a2 = alpha * alpha;
                let g0 = (a2 - beta * beta).sqrt();
                let bu = beta + i * u;
                -0.5 * sigma * sigma * u * u + delta * (g0 - (a2 - bu * bu).sqrt())
            }
            ModelKind::Vg { sigma, theta, nu } => {
                -(1.0 - i * theta * nu * u + 0.5 * sigma * sigma * nu * u * u).ln() / nu
            }
            ModelKind::Cgmy { c, g, m, y } => {
                let jump = (1.0 + i * u / g).powf(y) * g.powf(y) - g.powf(y)
                    + (1.0 - i * u / m).powf(y) * m.powf(y)
                    - m.powf(y);
                c * gamma(-y) * jump
            }
        }
    }

    /// Mean-correcting compensator `ω` with `φ(-i; t) = e^{(r-q)t}`.
    pub fn omega(&self) -> f64 {
        -self.psi(Complex64::new(0.0, -1.0)).re
    }

    /// Characteristic function of `log(S_T/S_t)` over horizon `t`.
    pub fn char_fn(&self, u: Complex64, t: f64) -> Complex64 {
        let drift = self.r - self.q + self.omega();
        (t * (Complex64::i() * u * drift + self.psi(u))).exp()
    }

    /// Drift of the log-price over `t`: `(r - q + ω) t`.
    pub fn drift(&self, t: f64) -> f64 {
        (self.r - self.q + self.omega()) * t
    }

    pub fn cumulants(&self, t: f64) -> Cumulants {
        let mu = self.drift(t);
        match self.kind {
            ModelKind::Gbm { sigma } => Cumulants {
                c1: mu,
                c2: sigma * sigma * t,
                c4: 0.0,
            },
            ModelKind::Nig {
                alpha,
                beta,
                delta,
                sigma,
            } => {
                let g = (alpha * alpha - beta * beta).sqrt();
                Cumulants {
                    c1: mu + delta * t * beta / g,
                    c2: delta * alpha * alpha * t / g.powi(3) + sigma * sigma * t,
                    c4: 3.0 * delta * alpha * alpha * (alpha * alpha + 4.0 * beta * beta) * t / g.powi(7),
                }
            }
            ModelKind::Vg { sigma, theta, nu } => {
                let s2 = sigma * sigma;
                Cumulants {
                    c1: mu + theta * t,
                    c2: (s2 + nu * theta * theta) * t,
                    c4: 3.0
                        * (s2 * s2 * nu + 2.0 * theta.powi(4) * nu.powi(3) + 4.0 * s2 * theta * theta * nu * nu)
                        * t,
                }
            }
            ModelKind::Cgmy { c, g, m, y } => Cumulants {
                c1: mu + c * t * gamma(1.0 - y) * (m.powf(y - 1.0) - g.powf(y - 1.0)),
                c2: c * t * gamma(2.0 - y) * (m.powf(y - 2.0) + g.powf(y - 2.0)),
                c4: c * t * gamma(4.0 - y) * (m.powf(y - 4.0) + g.powf(y - 4.0)),
            },
        }
    }

    /// Symmetric interval `[-d, d]` holding the mass of the log-return
    /// density: `d = |c1 + L √(c2 + √c4)|`, widened by 0.5 for `t ≤ 0.2`.
    pub fn truncation_interval(&self, t: f64, l_n: f64) -> Result<Interval> {
        param(t > 0.0, "horizon must be positive")?;
        let k = self.cumulants(t);
        let mut d = (k.c1 + l_n * (k.c2 + k.c4.sqrt()).sqrt()).abs();
        if d == 0.0 || !d.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "degenerate truncation interval (d = {d})"
            )));
        }
        if t <= 0.2 {
            d += 0.5;
        }
        Interval::new(-d, d)
    }

    /// `∂φ/∂σ` for the models with a diffusion or VG volatility parameter.
    pub fn char_fn_dsigma(&self, u: Complex64, t: f64) -> Result<Complex64> {
        let i = Complex64::i();
        let (dpsi, domega) = match self.kind {
            ModelKind::Gbm { sigma } | ModelKind::Nig { sigma, .. } => (-sigma * u * u, -sigma),
            ModelKind::Vg { sigma, theta, nu } => {
                let d = 1.0 - i * theta * nu * u + 0.5 * sigma * sigma * nu * u * u;
                let dm = 1.0 - theta * nu - 0.5 * sigma * sigma * nu;
                (-sigma * u * u / d, -sigma / dm)
            }
            ModelKind::Cgmy { .. } => return Err(Error::VegaUnsupported("CGMY")),
        };
        Ok(self.char_fn(u, t) * t * (i * u * domega + dpsi))
    }

    /// `∂g/∂σ` of the GBM density, drift included.
    pub fn pdf_dsigma_closed_form(&self, x: f64, t: f64) -> Result<f64> {
        let ModelKind::Gbm { sigma } = self.kind else {
            return Err(Error::VegaUnsupported("closed-form density derivative is GBM only"));
        };
        let v = sigma * sigma * t;
        let z = x - self.drift(t);
        let g = (-0.5 * z * z / v).exp() / (2.0 * PI * v).sqrt();
        Ok(g * (-z / v * sigma * t + (z * z / v - 1.0) / sigma))
    }

    /// True when [`pdf_closed_form`](Self::pdf_closed_form) is available.
    pub fn has_closed_form(&self) -> bool {
        match self.kind {
            ModelKind::Gbm { .. } | ModelKind::Vg { .. } => true,
            ModelKind::Nig { sigma, .. } => sigma == 0.0,
            ModelKind::Cgmy { .. } => false,
        }
    }

    /// Density of `log(S_T/S_t)` at `x` over horizon `t`. The VG density is
    /// unbounded at its centre when `t/ν ≤ 1/2`; there `+∞` is returned.
    pub fn pdf_closed_form(&self, x: f64, t: f64) -> Result<f64> {
        let z = x - self.drift(t);
        match self.kind {
            ModelKind::Gbm { sigma } => {
                let v = sigma * sigma * t;
                Ok((-0.5 * z * z / v).exp() / (2.0 * PI * v).sqrt())
            }
            ModelKind::Nig {
                alpha,
                beta,
                delta,
                sigma,
            } => {
                if sigma != 0.0 {
                    return Err(Error::NoClosedForm("NIG with a diffusion component"));
                }
                let dt = delta * t;
                let g = (alpha * alpha - beta * beta).sqrt();
                let s = (dt * dt + z * z).sqrt();
                let k1 = bessel_k_scaled(1.0, alpha * s);
                Ok(alpha * dt / (PI * s) * k1 * (dt * g + beta * z - alpha * s).exp())
            }
            ModelKind::Vg { sigma, theta, nu } => {
                let s2 = sigma * sigma;
                let tn = t / nu;
                let w = 2.0 * s2 / nu + theta * theta;
                let order = tn - 0.5;
                if z == 0.0 {
                    if order <= 0.0 {
                        return Ok(f64::INFINITY);
                    }
                    // limit of |z|^{2 order} K_order(c|z|) as z -> 0
                    let ln_v = (2.0_f64).ln() - tn * nu.ln() - 0.5 * (2.0 * PI).ln() - sigma.ln() - ln_gamma(tn)
                        + ln_gamma(order)
                        + (order - 1.0) * 2.0_f64.ln()
                        - order * (w.sqrt() / s2).ln()
                        - 0.5 * order * w.ln();
                    return Ok(ln_v.exp());
                }
                let arg = (z * z * w).sqrt() / s2;
                let ln_pre = (2.0_f64).ln() + theta * z / s2
                    - tn * nu.ln()
                    - 0.5 * (2.0 * PI).ln()
                    - sigma.ln()
                    - ln_gamma(tn)
                    + (0.5 * tn - 0.25) * (z * z / w).ln();
                let k = bessel_k_scaled(order, arg);
                Ok((ln_pre - arg).exp() * k)
            }
            ModelKind::Cgmy { .. } => Err(Error::NoClosedForm("CGMY")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn models() -> Vec<LevyModel> {
        vec![
            LevyModel::gbm(0.15, 0.03, 0.01).unwrap(),
            LevyModel::nig(15.0, -5.0, 0.5, 0.05, 0.02).unwrap(),
            LevyModel::vg(0.12, -0.14, 0.2, 0.1, 0.0).unwrap(),
            LevyModel::cgmy(1.0, 5.0, 5.0, 0.5, 0.1, 0.0).unwrap(),
            LevyModel::cgmy(4.0, 50.0, 60.0, 0.7, 0.05, 0.02).unwrap(),
        ]
    }

    #[test]
    fn gbm_omega() {
        let m = LevyModel::gbm(0.2, 0.0, 0.0).unwrap();
        assert!((m.omega() + 0.02).abs() < 1e-16);
    }

    #[test]
    fn vg_omega_closed_form() {
        let m = LevyModel::vg(0.12, -0.14, 0.2, 0.1, 0.0).unwrap();
        let expect = (1.0 / 0.2) * (1.0 + 0.14 * 0.2 - 0.12 * 0.12 * 0.2 / 2.0_f64).ln();
        assert!((m.omega() - expect).abs() < 1e-15);
    }

    #[test]
    fn martingale_and_normalisation() {
        for m in models() {
            for &t in &[0.1, 1.0, 3.0] {
                let v = m.char_fn(Complex64::new(0.0, -1.0), t);
                let e = ((m.r - m.q) * t).exp();
                assert!((v - e).norm() / e < 1e-12, "{}", m.name());
                assert!((m.char_fn(Complex64::new(0.0, 0.0), t) - 1.0).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn gbm_char_fn_value() {
        let m = LevyModel::gbm(0.15, 0.03, 0.01).unwrap();
        let s2 = 0.15 * 0.15;
        let expect = (Complex64::i() * (0.02 - s2 / 2.0) - s2 / 2.0).exp();
        assert!((m.char_fn(Complex64::new(1.0, 0.0), 1.0) - expect).norm() < 1e-15);
    }

    #[test]
    fn conjugate_symmetry_and_bound() {
        for m in models() {
            for &u in &[0.3, 2.0, 17.0, 150.0] {
                let a = m.char_fn(Complex64::new(u, 0.0), 0.7);
                let b = m.char_fn(Complex64::new(-u, 0.0), 0.7);
                assert!((a - b.conj()).norm() < 1e-14);
                assert!(a.norm() <= 1.0 + 1e-14);
            }
        }
    }

    #[test]
    fn gbm_cumulants() {
        let k = LevyModel::gbm(0.15, 0.03, 0.01).unwrap().cumulants(1.0);
        assert!((k.c1 - 0.00875).abs() < 1e-16);
        assert!((k.c2 - 0.0225).abs() < 1e-16);
        assert_eq!(k.c4, 0.0);
    }

    /// Cumulants from finite differences of log φ at 0.
    fn numeric_cumulants(m: &LevyModel, t: f64) -> (f64, f64, f64) {
        let h = 2e-2;
        let lp = |u: f64| m.char_fn(Complex64::new(u, 0.0), t).ln();
        let f: Vec<Complex64> = (-3..=3).map(|k| lp(k as f64 * h)).collect();
        // derivatives at 0 with 6th-order stencils
        let d1 = (-f[0] + 9.0 * f[1] - 45.0 * f[2] + 45.0 * f[4] - 9.0 * f[5] + f[6]) / (60.0 * h);
        let d2 = (2.0 * f[0] - 27.0 * f[1] + 270.0 * f[2] - 490.0 * f[3] + 270.0 * f[4] - 27.0 * f[5]
            + 2.0 * f[6])
            / (180.0 * h * h);
        // wider step for the fourth derivative to limit cancellation
        let h4 = 0.1;
        let f: Vec<Complex64> = (-3..=3).map(|k| lp(k as f64 * h4)).collect();
        let d4 = (-f[0] + 12.0 * f[1] - 39.0 * f[2] + 56.0 * f[3] - 39.0 * f[4] + 12.0 * f[5] - f[6])
            / (6.0 * h4.powi(4));
        ((d1 / Complex64::i()).re, -d2.re, d4.re)
    }

    #[test]
    fn cumulants_match_log_char_fn_derivatives() {
        for m in models() {
            let k = m.cumulants(1.0);
            let (n1, n2, n4) = numeric_cumulants(&m, 1.0);
            assert!(((k.c1 - n1) / k.c1).abs() < 1e-5, "{} c1 {} vs {}", m.name(), k.c1, n1);
            assert!(((k.c2 - n2) / k.c2).abs() < 1e-5, "{} c2 {} vs {}", m.name(), k.c2, n2);
            if k.c4 > 0.0 {
                assert!(((k.c4 - n4) / k.c4).abs() < 1e-3, "{} c4 {} vs {}", m.name(), k.c4, n4);
            }
        }
    }

    #[test]
    fn cumulants_linear_in_t() {
        for m in models() {
            let (a, b) = (m.cumulants(0.7), m.cumulants(1.4));
            assert!((2.0 * a.c1 - b.c1).abs() < 1e-14);
            assert!((2.0 * a.c2 - b.c2).abs() < 1e-14);
            assert!((2.0 * a.c4 - b.c4).abs() < 1e-14);
        }
    }

    #[test]
    fn truncation_gbm1() {
        let m = LevyModel::gbm(0.15, 0.03, 0.01).unwrap();
        let iv = m.truncation_interval(1.0, 10.0).unwrap();
        assert!((iv.hi() - 1.50875).abs() < 1e-14);
        assert_eq!(iv.lo(), -iv.hi());
        let short = m.truncation_interval(0.1, 10.0).unwrap();
        let base = (0.00875 * 0.1 + 10.0 * 0.15 * 0.1_f64.sqrt()).abs();
        assert!((short.hi() - (base + 0.5)).abs() < 1e-14);
    }

    #[test]
    fn invalid_parameters() {
        assert!(LevyModel::vg(0.5, 3.0, 1.0, 0.0, 0.0).unwrap_err().is_parameter_error());
        assert!(LevyModel::gbm(-0.1, 0.0, 0.0).is_err());
        assert!(LevyModel::nig(1.0, 2.0, 1.0, 0.0, 0.0).is_err());
        assert!(LevyModel::cgmy(1.0, 5.0, 0.5, 0.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn gbm_peak() {
        let m = LevyModel::gbm(0.15, 0.03, 0.01).unwrap();
        let p = m.pdf_closed_form(m.drift(1.0), 1.0).unwrap();
        assert!((p - 1.0 / (0.15 * (2.0 * PI).sqrt())).abs() < 1e-14);
    }

    #[test]
    fn cgmy_has_no_closed_form() {
        let m = LevyModel::cgmy(1.0, 5.0, 5.0, 0.5, 0.1, 0.0).unwrap();
        assert_eq!(m.pdf_closed_form(0.0, 1.0).unwrap_err(), Error::NoClosedForm("CGMY"));
    }

    #[test]
    fn closed_form_pdfs_match_fourier_inversion() {
        // g(x) = (1/π) ∫_0^∞ Re[e^{-iux} φ(u)] du by a long trapezoid
        for (m, t) in [
            (LevyModel::gbm(0.15, 0.03, 0.01).unwrap(), 1.0),
            (LevyModel::nig(15.0, -5.0, 0.5, 0.05, 0.02).unwrap(), 1.0),
            (LevyModel::vg(0.12, -0.14, 0.2, 0.1, 0.0).unwrap(), 1.0),
            (LevyModel::vg(0.3, -0.1, 0.1, 0.05, 0.0).unwrap(), 0.5),
        ] {
            for &x in &[-0.4, -0.1, 0.05, 0.3] {
                let h = 0.01;
                let mut s = 0.5;
                for k in 1..400_000 {
                    let u = k as f64 * h;
                    let v = (Complex64::new(0.0, -u * x).exp() * m.char_fn(Complex64::new(u, 0.0), t)).re;
                    s += v;
                    if u > 50.0 && m.char_fn(Complex64::new(u, 0.0), t).norm() < 1e-17 {
                        break;
                    }
                }
                let inv = s * h / PI;
                let cf = m.pdf_closed_form(x, t).unwrap();
                assert!((inv - cf).abs() < 1e-8 * cf.max(1.0), "{} x={x}: {inv} vs {cf}", m.name());
            }
        }
    }

    #[test]
    fn dsigma_matches_bump() {
        let h = 1e-6;
        let u = Complex64::new(3.7, 0.0);
        let cases = [
            (ModelKind::Gbm { sigma: 0.2 }, ModelKind::Gbm { sigma: 0.2 + h }, ModelKind::Gbm { sigma: 0.2 - h }),
            (
                ModelKind::Vg { sigma: 0.12, theta: -0.14, nu: 0.2 },
                ModelKind::Vg { sigma: 0.12 + h, theta: -0.14, nu: 0.2 },
                ModelKind::Vg { sigma: 0.12 - h, theta: -0.14, nu: 0.2 },
            ),
        ];
        for (k0, kp, km) in cases {
            let m0 = LevyModel::new(k0, 0.05, 0.01).unwrap();
            let mp = LevyModel::new(kp, 0.05, 0.01).unwrap();
            let mm = LevyModel::new(km, 0.05, 0.01).unwrap();
            let fd = (mp.char_fn(u, 0.7) - mm.char_fn(u, 0.7)) / (2.0 * h);
            let an = m0.char_fn_dsigma(u, 0.7).unwrap();
            assert!((an - fd).norm() < 1e-8, "{an} vs {fd}");
        }
        let gp = LevyModel::gbm(0.2 + h, 0.05, 0.01).unwrap();
        let gm = LevyModel::gbm(0.2 - h, 0.05, 0.01).unwrap();
        let g0 = LevyModel::gbm(0.2, 0.05, 0.01).unwrap();
        for x in [-0.3, 0.0, 0.17] {
            let fd = (gp.pdf_closed_form(x, 0.7).unwrap() - gm.pdf_closed_form(x, 0.7).unwrap()) / (2.0 * h);
            assert!((g0.pdf_dsigma_closed_form(x, 0.7).unwrap() - fd).abs() < 1e-7);
        }
        let c = LevyModel::cgmy(1.0, 5.0, 5.0, 0.5, 0.1, 0.0).unwrap();
        assert!(matches!(c.char_fn_dsigma(u, 1.0), Err(Error::VegaUnsupported(_))));
    }
}
