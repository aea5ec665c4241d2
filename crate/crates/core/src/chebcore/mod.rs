//! Chebyshev-series arithmetic on finite intervals.
//!
//! [`ChebSeries`] is the universal function representation of the crate: a
//! truncated expansion `Σ c_n T_n(ψ(x))` where `ψ` maps `[a, b]` onto `[-1, 1]`.
//! [`PiecewiseFun`] glues series together on consecutive subintervals and is
//! how payoffs, densities and price curves are stored.

mod fit;
mod piecewise;
mod roots;
mod series;

pub use fit::{
    adaptive_fit, adaptive_fit_with, chebyshev_points, coeffs_to_values, fit_split, standard_chop,
    values_to_coeffs, values_to_coeffs_direct, FitOptions, DEFAULT_TOL,
};
pub use piecewise::{pw_max, PiecewiseFun};
pub(crate) use piecewise::merge_breaks;
pub use roots::{roots, roots_with_cap};
pub use series::{ChebSeries, Interval};
