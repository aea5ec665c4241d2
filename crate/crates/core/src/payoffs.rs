//! Strike-normalised payoffs in log-price coordinates.
//!
//! With `y = x + χ - log K` every payoff is stored as `U(e^y K, K) / K^p`,
//! where `p` is the strike power of the claim (0 for cash-or-nothing, `n`
//! for the asymmetric pair, 1 otherwise). All payoffs break at `y = 0`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chebcore::{adaptive_fit, ChebSeries, Interval, PiecewiseFun, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::pricing::{MarketParams, PriceCurve};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffKind {
    Call,
    Put,
    CoveredCall,
    CashOrNothingCall,
    CashOrNothingPut,
    AssetOrNothingCall,
    AssetOrNothingPut,
    AsymmetricCall,
    AsymmetricPut,
}

impl PayoffKind {
    pub const ALL: [PayoffKind; 9] = [
        PayoffKind::Call,
        PayoffKind::Put,
        PayoffKind::CoveredCall,
        PayoffKind::CashOrNothingCall,
        PayoffKind::CashOrNothingPut,
        PayoffKind::AssetOrNothingCall,
        PayoffKind::AssetOrNothingPut,
        PayoffKind::AsymmetricCall,
        PayoffKind::AsymmetricPut,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PayoffKind::Call => "call",
            PayoffKind::Put => "put",
            PayoffKind::CoveredCall => "covered_call",
            PayoffKind::CashOrNothingCall => "cash_or_nothing_call",
            PayoffKind::CashOrNothingPut => "cash_or_nothing_put",
            PayoffKind::AssetOrNothingCall => "asset_or_nothing_call",
            PayoffKind::AssetOrNothingPut => "asset_or_nothing_put",
            PayoffKind::AsymmetricCall => "asymmetric_call",
            PayoffKind::AsymmetricPut => "asymmetric_put",
        }
    }

    fn is_asymmetric(self) -> bool {
        matches!(self, PayoffKind::AsymmetricCall | PayoffKind::AsymmetricPut)
    }
}

impl fmt::Display for PayoffKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PayoffKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PayoffKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown payoff kind `{s}`")))
    }
}

/// Payoff kind plus the power `n` used by the asymmetric claims.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayoffSpec {
    pub kind: PayoffKind,
    #[serde(default = "one")]
    pub n: u32,
}

fn one() -> u32 {
    1
}

impl PayoffSpec {
    pub fn new(kind: PayoffKind) -> Self {
        Self { kind, n: 1 }
    }

    pub fn asymmetric(kind: PayoffKind, n: u32) -> Result<Self> {
        let s = Self { kind, n };
        s.validate()?;
        Ok(s)
    }

    pub fn call() -> Self {
        Self::new(PayoffKind::Call)
    }

    pub fn put() -> Self {
        Self::new(PayoffKind::Put)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind.is_asymmetric() && self.n == 0 {
            return Err(Error::InvalidParameter("asymmetric payoffs need n >= 1".into()));
        }
        Ok(())
    }

    /// Power of `K` restored when a normalised curve is turned into prices.
    pub fn strike_power(&self) -> i32 {
        match self.kind {
            PayoffKind::CashOrNothingCall | PayoffKind::CashOrNothingPut => 0,
            PayoffKind::AsymmetricCall | PayoffKind::AsymmetricPut => self.n as i32,
            _ => 1,
        }
    }

    /// Normalised payoff at `y = log(S_T/K)`.
    pub fn value(&self, y: f64) -> f64 {
        let up = y >= 0.0;
        let e = y.exp();
        match self.kind {
            PayoffKind::Call => if up { e - 1.0 } else { 0.0 },
            PayoffKind::Put => if up { 0.0 } else { 1.0 - e },
            PayoffKind::CoveredCall => if up { 1.0 } else { e },
            PayoffKind::CashOrNothingCall => if up { 1.0 } else { 0.0 },
            PayoffKind::CashOrNothingPut => if up { 0.0 } else { 1.0 },
            PayoffKind::AssetOrNothingCall => if up { e } else { 0.0 },
            PayoffKind::AssetOrNothingPut => if up { 0.0 } else { e },
            PayoffKind::AsymmetricCall => if up { (self.n as f64 * y).exp() - 1.0 } else { 0.0 },
            PayoffKind::AsymmetricPut => if up { 0.0 } else { 1.0 - (self.n as f64 * y).exp() },
        }
    }
}

/// Piecewise Chebyshev form of the normalised payoff on `interval`, with a
/// breakpoint at `y = 0` when the interval straddles it.
pub fn payoff_logspace(spec: &PayoffSpec, interval: Interval) -> Result<PiecewiseFun> {
    spec.validate()?;
    let piece = |iv: Interval, right: bool| -> Result<ChebSeries> {
        let probe = if right { 1.0 } else { -1.0 };
        let n = spec.n as f64;
        match spec.kind {
            PayoffKind::CashOrNothingCall | PayoffKind::CashOrNothingPut => {
                Ok(ChebSeries::constant(spec.value(probe), iv))
            }
            PayoffKind::CoveredCall if right => Ok(ChebSeries::constant(1.0, iv)),
            PayoffKind::Call | PayoffKind::AssetOrNothingCall | PayoffKind::AsymmetricCall if !right => {
                Ok(ChebSeries::zero(iv))
            }
            PayoffKind::Put | PayoffKind::AssetOrNothingPut | PayoffKind::AsymmetricPut if right => {
                Ok(ChebSeries::zero(iv))
            }
            PayoffKind::AsymmetricCall | PayoffKind::AsymmetricPut => {
                let sign = if right { 1.0 } else { -1.0 };
                let e = adaptive_fit(|y| (n * y).exp(), iv, DEFAULT_TOL)?;
                Ok(e.scale(sign).add(&ChebSeries::constant(-sign, iv)))
            }
            _ => {
                let e = adaptive_fit(f64::exp, iv, DEFAULT_TOL)?;
                Ok(match spec.kind {
                    PayoffKind::Call => e.sub(&ChebSeries::constant(1.0, iv)),
                    PayoffKind::Put => ChebSeries::constant(1.0, iv).sub(&e),
                    _ => e,
                })
            }
        }
    };
    let (lo, hi) = (interval.lo(), interval.hi());
    if lo < 0.0 && hi > 0.0 {
        PiecewiseFun::new(vec![
            piece(Interval::new(lo, 0.0)?, false)?,
            piece(Interval::new(0.0, hi)?, true)?,
        ])
    } else {
        Ok(PiecewiseFun::from_series(piece(interval, lo >= 0.0)?))
    }
}

/// Call curve from a European put curve by put–call parity,
/// `C = P + S e^{-qτ} - K e^{-rτ}`. The parity term is kept in closed form so
/// it is exact at every strike.
pub fn put_call_parity(put_curve: &PriceCurve, market: &MarketParams) -> Result<PriceCurve> {
    if put_curve.payoff().kind != PayoffKind::Put {
        return Err(Error::InvalidParameter("put–call parity needs a put curve".into()));
    }
    put_curve.with_parity(market)
}
