//! Legendre-series convolution of compactly supported polynomials.
//!
//! For `f, g` on `[-1, 1]` the convolution `h = f * g` lives on `[-2, 2]` and
//! is a polynomial on each half. Its Legendre coefficients on the left half
//! follow from a three-term recurrence in the degree of `g`; the right half
//! is obtained by reflection. General intervals are handled by an affine map
//! and, for unequal widths, by splitting the output into two boundary layers
//! and a middle region where the result is a single polynomial.

use crate::chebcore::{
    chebyshev_points, fit_split, merge_breaks, values_to_coeffs, ChebSeries, FitOptions, Interval,
    PiecewiseFun,
};
use crate::error::{Error, Result};

/// Legendre expansion `Σ c_n P_n(ψ(x))` on an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct LegSeries {
    coeffs: Vec<f64>,
    interval: Interval,
}

impl LegSeries {
    pub fn new(mut coeffs: Vec<f64>, interval: Interval) -> Self {
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs, interval }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Evaluation by the Legendre Clenshaw recurrence.
    pub fn eval(&self, x: f64) -> f64 {
        let t = self.interval.to_unit(x);
        let c = &self.coeffs;
        let (mut b1, mut b2) = (0.0, 0.0);
        for k in (1..c.len()).rev() {
            let kf = k as f64;
            // P_{k+1} = ((2k+1) t P_k - k P_{k-1}) / (k+1)
            let alpha = (2.0 * kf + 1.0) / (kf + 1.0) * t;
            let beta = -(kf + 1.0) / (kf + 2.0);
            let b0 = c[k] + alpha * b1 + beta * b2;
            b2 = b1;
            b1 = b0;
        }
        c[0] + t * b1 - 0.5 * b2
    }
}

/// `Λ(j/2) = Γ(j/2 + 1/2) / Γ(j/2 + 1)` for `j = 0..len`.
fn lambda_half(len: usize) -> Vec<f64> {
    let mut lam = vec![0.0; len.max(2)];
    lam[0] = std::f64::consts::PI.sqrt();
    lam[1] = 2.0 / std::f64::consts::PI.sqrt();
    for j in 2..lam.len() {
        lam[j] = lam[j - 2] * (j - 1) as f64 / j as f64;
    }
    lam
}

/// Change of basis from Chebyshev to Legendre coefficients.
pub fn cheb2leg(c: &ChebSeries) -> LegSeries {
    LegSeries::new(cheb2leg_coeffs(c.coeffs()), c.interval())
}

/// Change of basis from Legendre to Chebyshev coefficients.
pub fn leg2cheb(l: &LegSeries) -> ChebSeries {
    ChebSeries::new(leg2cheb_coeffs(l.coeffs()), l.interval())
}

pub(crate) fn cheb2leg_coeffs(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    let lam = lambda_half(2 * n + 2);
    let lam_at = |twice: usize| lam[twice];
    let mut out = vec![0.0; n];
    out[0] += c[0];
    for (j, &cj) in c.iter().enumerate().skip(1) {
        if cj == 0.0 {
            continue;
        }
        // diagonal: L_{j,j} = √π / (2 Λ(j))
        out[j] += cj * std::f64::consts::PI.sqrt() / (2.0 * lam_at(2 * j));
        let mut k = j % 2;
        while k + 2 <= j {
            let (jf, kf) = (j as f64, k as f64);
            let w = -jf * (kf + 0.5) / ((jf + kf + 1.0) * (jf - kf))
                * lam_at(j - k - 2)
                * lam_at(j + k - 1);
            out[k] += w * cj;
            k += 2;
        }
    }
    out
}

pub(crate) fn leg2cheb_coeffs(l: &[f64]) -> Vec<f64> {
    let n = l.len();
    let lam = lambda_half(2 * n + 2);
    let pi = std::f64::consts::PI;
    let mut out = vec![0.0; n];
    for (j, &lj) in l.iter().enumerate() {
        if lj == 0.0 {
            continue;
        }
        let mut k = j % 2;
        while k <= j {
            let w = if k == 0 {
                lam[j] * lam[j] / pi
            } else {
                2.0 / pi * lam[j - k] * lam[j + k]
            };
            out[k] += w * lj;
            k += 2;
        }
    }
    out
}

/// Output of [`conv_same_interval`]: the two polynomial halves of `f * g`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvResult {
    pub left: ChebSeries,
    pub right: ChebSeries,
}

impl ConvResult {
    pub fn to_piecewise(&self) -> PiecewiseFun {
        PiecewiseFun::new(vec![self.left.clone(), self.right.clone()])
            .expect("halves are contiguous")
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.to_piecewise().eval(x)
    }
}

/// Integration map on Legendre coefficients: `∫_{-1}^u Σ a_k P_k`.
fn integrate_into(a: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    let get = |k: usize| a.get(k).copied().unwrap_or(0.0);
    for j in 0..out.len() {
        out[j] = if j == 0 {
            get(0) - get(1) / 3.0
        } else {
            get(j - 1) / (2 * j - 1) as f64 - get(j + 1) / (2 * j + 3) as f64
        };
    }
}

/// Legendre coefficients (in `P_k(x + 1)`) of `∫_{-1}^{x+1} f(t) g(x - t) dt`
/// on `[-2, 0]`, for `f, g` given by Legendre coefficients on `[-1, 1]`.
///
/// Columns of the recurrence matrix are built one at a time. Only entries on
/// or below the diagonal come from the recurrence (the upward direction is
/// unstable); the rest follow from the transpose symmetry
/// `B[n][k] = (-1)^(n+k) (2n+1)/(2k+1) B[k][n]`.
pub(crate) fn conv_left_unit(alpha: &[f64], beta: &[f64]) -> Vec<f64> {
    let m = alpha.len() - 1;
    let nn = beta.len() - 1;
    let rows = m + nn + 2;
    let mut gamma = vec![0.0; rows];
    // padded so that k + 1 lookups stay in range
    let mut prev = vec![0.0; rows + 2];
    let mut cur = vec![0.0; rows + 2];
    let mut next = vec![0.0; rows + 2];
    integrate_into(alpha, &mut cur[..m + 2]);

    let sym = |n: usize, k: usize| {
        let s = if (n + k).is_multiple_of(2) { 1.0 } else { -1.0 };
        s * (2 * n + 1) as f64 / (2 * k + 1) as f64
    };

    for n in 0..=nn {
        // accumulate column n
        let hi = (m + n + 1).min(rows - 1);
        let bn = beta[n];
        for k in n..=hi {
            gamma[k] += cur[k] * bn;
        }
        for k in n + 1..=hi.min(nn) {
            gamma[n] += sym(n, k) * cur[k] * beta[k];
        }
        if n == nn {
            break;
        }
        // column n + 1, rows >= n + 1
        next.iter_mut().for_each(|v| *v = 0.0);
        let top = (m + n + 2).min(rows - 1);
        let s = (2 * n + 1) as f64;
        for k in (n + 1)..=top {
            let lo_term = if k == 0 {
                cur[0]
            } else {
                cur[k - 1] / (2 * k - 1) as f64
            };
            let int_k = lo_term - cur[k + 1] / (2 * k + 3) as f64;
            next[k] = if n == 0 {
                int_k - cur[k]
            } else {
                s * int_k + prev[k]
            };
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    gamma
}

fn flip_odd(a: &[f64]) -> Vec<f64> {
    a.iter()
        .enumerate()
        .map(|(k, &v)| if k % 2 == 1 { -v } else { v })
        .collect()
}

/// Right half on `[0, 2]` in `P_k(x - 1)`, via `h(x) = h̃(-x)` where `h̃` is
/// the convolution of the reflected inputs.
pub(crate) fn conv_right_unit(alpha: &[f64], beta: &[f64]) -> Vec<f64> {
    flip_odd(&conv_left_unit(&flip_odd(alpha), &flip_odd(beta)))
}

/// Convolution of two Legendre series on intervals of equal width.
///
/// For `f` on `[a, a+w]` and `g` on `[c, c+w]` the result is split at
/// `a+c+w`. Intervals need not coincide, only their widths.
pub fn conv_same_interval(f: &LegSeries, g: &LegSeries) -> Result<ConvResult> {
    let (fi, gi) = (f.interval(), g.interval());
    if !equal_width(fi, gi) {
        return Err(Error::IntervalMismatch {
            a_lo: fi.lo(),
            a_hi: fi.hi(),
            b_lo: gi.lo(),
            b_hi: gi.hi(),
        });
    }
    Ok(ConvResult {
        left: half(f, g, Side::Left)?,
        right: half(f, g, Side::Right)?,
    })
}

fn equal_width(a: Interval, b: Interval) -> bool {
    (a.width() - b.width()).abs() <= 1e-12 * a.width().max(b.width())
}

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
}

fn half(f: &LegSeries, g: &LegSeries, side: Side) -> Result<ChebSeries> {
    let w = f.interval().width();
    let start = f.interval().lo() + g.interval().lo();
    let (gamma, iv) = match side {
        Side::Left => (
            conv_left_unit(f.coeffs(), g.coeffs()),
            Interval::new(start, start + w)?,
        ),
        Side::Right => (
            conv_right_unit(f.coeffs(), g.coeffs()),
            Interval::new(start + w, start + 2.0 * w)?,
        ),
    };
    let scaled: Vec<f64> = gamma.iter().map(|v| v * 0.5 * w).collect();
    Ok(ChebSeries::new(leg2cheb_coeffs(&scaled), iv))
}

/// Convolution of two single polynomial pieces, returned on the full support
/// `[a+c, b+d]`.
pub fn conv_pieces(f: &ChebSeries, g: &ChebSeries) -> Result<PiecewiseFun> {
    let (fi, gi) = (f.interval(), g.interval());
    if equal_width(fi, gi) {
        let g = g.with_interval(Interval::new(gi.lo(), gi.lo() + fi.width())?);
        return Ok(conv_same_interval(&cheb2leg(f), &cheb2leg(&g))?.to_piecewise());
    }
    // let `long` be the wider piece; convolution is symmetric
    let (long, short) = if fi.width() > gi.width() { (f, g) } else { (g, f) };
    let (li, si) = (long.interval(), short.interval());
    let w = si.width();
    let sl = cheb2leg(short);

    let head = cheb2leg(&long.restrict(Interval::new(li.lo(), li.lo() + w)?));
    let left = half(&head, &sl, Side::Left)?;
    let tail = cheb2leg(&long.restrict(Interval::new(li.hi() - w, li.hi())?));
    let right = half(&tail, &sl, Side::Right)?;

    let mid_iv = Interval::new(li.lo() + si.hi(), li.hi() + si.lo())?;
    let middle = middle_region(long, short, mid_iv)?;
    let left = left.with_interval(Interval::new(left.interval().lo(), mid_iv.lo())?);
    let right = right.with_interval(Interval::new(mid_iv.hi(), right.interval().hi())?);
    PiecewiseFun::new(vec![left, middle, right])
}

/// `∫ short(s) long(x - s) ds` on the region where the whole of `short`
/// overlaps `long`: a polynomial of the same degree as `long`, sampled at
/// Chebyshev points with an exact Gauss–Legendre rule.
fn middle_region(long: &ChebSeries, short: &ChebSeries, iv: Interval) -> Result<ChebSeries> {
    let si = short.interval();
    let n_pts = long.degree() + 1;
    let (nodes, weights) = gauss_legendre((long.degree() + short.degree()) / 2 + 1);
    let s: Vec<f64> = nodes.iter().map(|&t| si.from_unit(t)).collect();
    let gw: Vec<f64> = s
        .iter()
        .zip(&weights)
        .map(|(&s, &w)| short.eval(s) * w * 0.5 * si.width())
        .collect();
    let vals: Vec<f64> = chebyshev_points(n_pts.max(1))
        .iter()
        .map(|&t| {
            let x = iv.from_unit(t);
            s.iter().zip(&gw).map(|(&s, &w)| w * long.eval(x - s)).sum()
        })
        .collect();
    Ok(ChebSeries::new(values_to_coeffs(&vals), iv))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// three-term recurrence.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Output range for [`conv_general`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvMode {
    /// Full support of the convolution.
    Full,
    /// Restricted to the support of the second argument.
    Same,
}

/// Convolution of two piecewise functions: every pair of pieces is convolved
/// and the contributions are summed on the common refinement.
pub fn conv_general(f: &PiecewiseFun, g: &PiecewiseFun, mode: ConvMode) -> Result<PiecewiseFun> {
    let mut terms = Vec::new();
    for p in f.pieces() {
        if p.is_zero() {
            continue;
        }
        for q in g.pieces() {
            if q.is_zero() {
                continue;
            }
            terms.push(conv_pieces(p, q)?);
        }
    }
    let full = if terms.is_empty() {
        let lo = f.support().lo() + g.support().lo();
        let hi = f.support().hi() + g.support().hi();
        PiecewiseFun::zero(Interval::new(lo, hi)?)
    } else {
        PiecewiseFun::sum(&terms)?
    };
    match mode {
        ConvMode::Full => Ok(full),
        ConvMode::Same => full.restrict(g.support()),
    }
}

/// Convolution of `f` and `g` on `window`, refitted piecewise between
/// `breaks` (plus the window ends).
///
/// The pair convolutions are evaluated pointwise and refitted rather than
/// summed on their common refinement, so the result only breaks where the
/// caller says it may be non-smooth. Places that still fail to converge are
/// bisected.
pub fn conv_window(
    f: &PiecewiseFun,
    g: &PiecewiseFun,
    window: Interval,
    breaks: &[f64],
    opts: &FitOptions,
) -> Result<PiecewiseFun> {
    let mut terms: Vec<PiecewiseFun> = Vec::new();
    for p in f.pieces() {
        if p.is_zero() {
            continue;
        }
        for q in g.pieces() {
            if q.is_zero() {
                continue;
            }
            let lo = p.interval().lo() + q.interval().lo();
            let hi = p.interval().hi() + q.interval().hi();
            if hi <= window.lo() || lo >= window.hi() {
                continue;
            }
            terms.push(conv_pieces(p, q)?);
        }
    }
    if terms.is_empty() {
        return Ok(PiecewiseFun::zero(window));
    }
    let supports: Vec<Interval> = terms.iter().map(|t| t.support()).collect();
    let sum = |x: f64| -> f64 {
        terms
            .iter()
            .zip(&supports)
            .filter(|(_, s)| x >= s.lo() && x <= s.hi())
            .map(|(t, _)| t.eval(x))
            .sum()
    };
    let mut pts = vec![window.lo(), window.hi()];
    pts.extend(breaks.iter().copied().filter(|&b| b > window.lo() && b < window.hi()));
    let pts = merge_breaks(pts, 1e-10 * window.width());
    let scale = terms
        .iter()
        .flat_map(|t| t.pieces())
        .map(|p| p.coeff_scale())
        .fold(0.0_f64, f64::max);
    let opts = FitOptions {
        abs_scale: opts.abs_scale.max(scale),
        ..*opts
    };
    let mut pieces = Vec::new();
    for w in pts.windows(2) {
        let sub = Interval::new(w[0], w[1])?;
        pieces.extend(fit_split(&sum, sub, &opts)?);
    }
    PiecewiseFun::new(pieces)
}
