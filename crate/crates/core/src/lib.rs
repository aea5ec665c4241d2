//! Spectral option pricing and hedging under exponential Lévy models.
//!
//! Payoffs and risk-neutral densities are held as piecewise Chebyshev series.
//! Prices are obtained by convolving the strike-normalised payoff with the
//! reflected density using the Legendre-series convolution recurrence, which
//! yields a whole price *curve* in the moneyness variable `x̃ = log(S/K)`.
//! One curve therefore serves every strike (or every spot) at once, and Greeks
//! follow by differentiating the curve.
//!
//! Module map:
//!
//! - [`chebcore`]: Chebyshev series, adaptive fitting, calculus, roots, piecewise functions
//! - [`legconv`]: Chebyshev/Legendre transforms and the convolution kernel
//! - [`special`]: Bessel functions used by the densities
//! - [`levy`]: model parameters, characteristic functions, cumulants, truncation
//! - [`density`]: Fourier-series densities, Fourier–Padé singularity location
//! - [`payoffs`]: log-space payoff factories and put–call parity
//! - [`pricing`]: European, Bermudan, American and discrete barrier engines
//! - [`greeks`]: Delta, Gamma and Vega curves
//! - [`reference`]: independent oracles (Black–Scholes, quadrature, grid induction)

#![allow(clippy::excessive_precision, clippy::needless_range_loop)]

pub mod chebcore;
pub mod density;
mod error;
pub mod greeks;
pub mod legconv;
pub mod levy;
pub mod payoffs;
pub mod pricing;
pub mod reference;
pub mod special;

pub use chebcore::{ChebSeries, Interval, PiecewiseFun};
pub use error::{Error, Result};
pub use levy::{Cumulants, LevyModel, ModelKind};
pub use payoffs::{PayoffKind, PayoffSpec};
pub use pricing::{BarrierDirection, BarrierSpec, ExerciseSchedule, MarketParams, PriceCurve};
pub use greeks::{GreekCurve, GreekKind};
