use crate::error::{Error, Result};

/// A finite, non-degenerate interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(Error::InvalidInterval { lo, hi })
        }
    }

    /// The reference interval `[-1, 1]`.
    pub const fn unit() -> Self {
        Self { lo: -1.0, hi: 1.0 }
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    #[inline]
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// `ψ(x) = (2x - (lo + hi)) / (hi - lo)`.
    #[inline]
    pub fn to_unit(&self, x: f64) -> f64 {
        (2.0 * x - (self.lo + self.hi)) / (self.hi - self.lo)
    }

    /// Inverse of [`Interval::to_unit`].
    #[inline]
    pub fn from_unit(&self, t: f64) -> f64 {
        0.5 * (self.lo + self.hi) + 0.5 * (self.hi - self.lo) * t
    }

    /// True when both endpoints agree to `tol` times the larger width.
    pub fn approx_eq(&self, other: &Interval, tol: f64) -> bool {
        let scale = self.width().max(other.width());
        (self.lo - other.lo).abs() <= tol * scale && (self.hi - other.hi).abs() <= tol * scale
    }
}

/// Chebyshev expansion `Σ_n c_n T_n(ψ(x))` on an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebSeries {
    coeffs: Vec<f64>,
    interval: Interval,
}

impl ChebSeries {
    /// Builds a series from raw coefficients; an empty vector becomes the zero series.
    pub fn new(mut coeffs: Vec<f64>, interval: Interval) -> Self {
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs, interval }
    }

    pub fn constant(value: f64, interval: Interval) -> Self {
        Self::new(vec![value], interval)
    }

    pub fn zero(interval: Interval) -> Self {
        Self::constant(0.0, interval)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Largest coefficient magnitude.
    pub fn coeff_scale(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// Clenshaw evaluation. Points outside the interval are extrapolated.
    pub fn eval(&self, x: f64) -> f64 {
        clenshaw(&self.coeffs, self.interval.to_unit(x))
    }

    pub fn eval_many(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }

    /// Derivative series of order 1 or 2 on the same interval.
    ///
    /// Uses the descending recurrence `c'_{k-1} = c'_{k+1} + 2k c_k`, which is
    /// regular at the endpoints.
    pub fn differentiate(&self, order: usize) -> ChebSeries {
        assert!(
            order == 1 || order == 2,
            "differentiate supports order 1 or 2, got {order}"
        );
        let mut out = self.derivative_once();
        if order == 2 {
            out = out.derivative_once();
        }
        out
    }

    fn derivative_once(&self) -> ChebSeries {
        let n = self.coeffs.len();
        if n <= 1 {
            return ChebSeries::zero(self.interval);
        }
        let c = &self.coeffs;
        let mut d = vec![0.0; n + 1];
        for k in (1..n).rev() {
            d[k - 1] = d[k + 1] + 2.0 * k as f64 * c[k];
        }
        d[0] *= 0.5;
        d.truncate(n - 1);
        let scale = 2.0 / self.interval.width();
        d.iter_mut().for_each(|v| *v *= scale);
        ChebSeries::new(d, self.interval)
    }

    /// Definite integral over the whole interval.
    pub fn integral(&self) -> f64 {
        let s: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .step_by(2)
            .map(|(k, &c)| c * 2.0 / (1.0 - (k * k) as f64))
            .sum();
        0.5 * self.interval.width() * s
    }

    /// Drops trailing coefficients with `|c_n| <= tol · max|c|`.
    pub fn simplify(&self, tol: f64) -> ChebSeries {
        let scale = self.coeff_scale();
        let keep = self
            .coeffs
            .iter()
            .rposition(|c| c.abs() > tol * scale)
            .map_or(1, |i| i + 1);
        ChebSeries::new(self.coeffs[..keep].to_vec(), self.interval)
    }

    /// Exact re-expansion of the same polynomial on a subinterval.
    pub fn restrict(&self, sub: Interval) -> ChebSeries {
        if sub == self.interval {
            return self.clone();
        }
        let n = self.degree();
        if n == 0 {
            return ChebSeries::new(self.coeffs.clone(), sub);
        }
        let pts = super::fit::chebyshev_points(n + 1);
        let vals: Vec<f64> = pts.iter().map(|&t| self.eval(sub.from_unit(t))).collect();
        ChebSeries::new(super::fit::values_to_coeffs(&vals), sub)
    }

    /// Same polynomial re-expanded on a different interval (exact change of variable).
    pub fn with_interval(&self, interval: Interval) -> ChebSeries {
        self.restrict(interval)
    }

    pub fn scale(&self, factor: f64) -> ChebSeries {
        ChebSeries::new(self.coeffs.iter().map(|c| c * factor).collect(), self.interval)
    }

    /// Coefficient-wise sum; both operands must share the interval.
    pub fn add(&self, other: &ChebSeries) -> ChebSeries {
        debug_assert!(self.interval.approx_eq(&other.interval, 1e-12));
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut c = vec![0.0; n];
        for (i, v) in self.coeffs.iter().enumerate() {
            c[i] += v;
        }
        for (i, v) in other.coeffs.iter().enumerate() {
            c[i] += v;
        }
        ChebSeries::new(c, self.interval)
    }

    pub fn sub(&self, other: &ChebSeries) -> ChebSeries {
        self.add(&other.scale(-1.0))
    }

    /// `g(x) = f(-x)` on the mirrored interval.
    pub fn reflect(&self) -> ChebSeries {
        let iv = Interval {
            lo: -self.interval.hi,
            hi: -self.interval.lo,
        };
        let c = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &v)| if k % 2 == 1 { -v } else { v })
            .collect();
        ChebSeries::new(c, iv)
    }
}

/// Clenshaw's backward recurrence for `Σ c_k T_k(t)`.
pub(crate) fn clenshaw(c: &[f64], t: f64) -> f64 {
    let n = c.len();
    match n {
        0 => 0.0,
        1 => c[0],
        _ => {
            let two_t = 2.0 * t;
            let mut b1 = 0.0;
            let mut b2 = 0.0;
            for &ck in c[1..].iter().rev() {
                let b0 = ck + two_t * b1 - b2;
                b2 = b1;
                b1 = b0;
            }
            c[0] + t * b1 - b2
        }
    }
}
