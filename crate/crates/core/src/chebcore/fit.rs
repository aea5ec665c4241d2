use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::series::{ChebSeries, Interval};
use crate::error::{Error, Result};

/// Default relative truncation tolerance for adaptive fits.
pub const DEFAULT_TOL: f64 = 1e-14;

/// Controls for [`adaptive_fit_with`] and [`fit_split`].
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Relative tolerance handed to the plateau chopper.
    pub tol: f64,
    /// Largest degree tried before giving up.
    pub max_degree: usize,
    /// Smallest subinterval width (relative to the outer width) that
    /// [`fit_split`] will still bisect.
    pub min_rel_width: f64,
    /// Degree used for the last-resort fit on a subinterval that reached
    /// `min_rel_width` without converging.
    pub fallback_degree: usize,
    /// Magnitude of the whole function being fitted. When positive, a piece
    /// whose values are small next to it is chopped relative to this scale
    /// rather than its own.
    pub abs_scale: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_degree: 1 << 16,
            min_rel_width: 1e-12,
            fallback_degree: 8,
            abs_scale: 0.0,
        }
    }
}

impl FitOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    pub fn max_degree(mut self, max_degree: usize) -> Self {
        self.max_degree = max_degree;
        self
    }

    pub fn abs_scale(mut self, scale: f64) -> Self {
        self.abs_scale = scale;
        self
    }
}

/// `n` Chebyshev points of the second kind on `[-1, 1]`, ascending.
pub fn chebyshev_points(n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => {
            let m = (n - 1) as f64;
            (0..n)
                .map(|j| {
                    // sin form keeps the points exactly antisymmetric
                    let k = 2.0 * j as f64 - m;
                    (PI * k / (2.0 * m)).sin()
                })
                .collect()
        }
    }
}

/// Chebyshev coefficients of the interpolant through values at
/// [`chebyshev_points`] (ascending order), via an FFT-based DCT-I.
pub fn values_to_coeffs(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n < 64 {
        return values_to_coeffs_direct(values);
    }
    let big_n = n - 1;
    // descending-point ordering: f_j = f(cos(jπ/N))
    let mut buf: Vec<Complex<f64>> = Vec::with_capacity(2 * big_n);
    for j in 0..=big_n {
        buf.push(Complex::new(values[big_n - j], 0.0));
    }
    for j in (1..big_n).rev() {
        buf.push(Complex::new(values[big_n - j], 0.0));
    }
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(2 * big_n).process(&mut buf);
    let scale = 1.0 / big_n as f64;
    let mut c: Vec<f64> = buf[..=big_n].iter().map(|z| z.re * scale).collect();
    c[0] *= 0.5;
    c[big_n] *= 0.5;
    c
}

/// O(N²) reference transform; agrees with [`values_to_coeffs`].
pub fn values_to_coeffs_direct(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    match n {
        0 => return vec![0.0],
        1 => return vec![values[0]],
        _ => {}
    }
    let big_n = n - 1;
    let f = |j: usize| values[big_n - j];
    let mut c = vec![0.0; n];
    for (k, ck) in c.iter_mut().enumerate() {
        let mut s = 0.5 * (f(0) + if k % 2 == 0 { f(big_n) } else { -f(big_n) });
        for j in 1..big_n {
            // reduce jk mod 2N to keep the cosine argument small
            let arg = ((j * k) % (2 * big_n)) as f64 * PI / big_n as f64;
            s += f(j) * arg.cos();
        }
        *ck = 2.0 * s / big_n as f64;
    }
    c[0] *= 0.5;
    c[big_n] *= 0.5;
    c
}

/// Values of `Σ c_k T_k` at `coeffs.len()` ascending Chebyshev points.
pub fn coeffs_to_values(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len();
    if n < 64 {
        return chebyshev_points(n)
            .into_iter()
            .map(|t| super::series::clenshaw(coeffs, t))
            .collect();
    }
    let big_n = n - 1;
    let mut buf: Vec<Complex<f64>> = Vec::with_capacity(2 * big_n);
    for &c in coeffs.iter() {
        buf.push(Complex::new(c, 0.0));
    }
    for k in (1..big_n).rev() {
        buf.push(Complex::new(coeffs[k], 0.0));
    }
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(2 * big_n).process(&mut buf);
    let mut desc: Vec<f64> = (0..=big_n)
        .map(|j| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            0.5 * (buf[j].re + coeffs[0] + sign * coeffs[big_n])
        })
        .collect();
    desc.reverse();
    desc
}

/// Plateau-detecting coefficient chopper.
///
/// Returns the number of coefficients to keep when the sequence has
/// resolved the function to relative accuracy `tol`, or `None` when it has
/// not (no plateau reached yet).
pub fn standard_chop(coeffs: &[f64], tol: f64) -> Option<usize> {
    if tol >= 1.0 {
        return Some(1);
    }
    let n = coeffs.len();
    if n < 17 {
        return None;
    }
    let mut env: Vec<f64> = coeffs.iter().map(|c| c.abs()).collect();
    for j in (0..n - 1).rev() {
        env[j] = env[j].max(env[j + 1]);
    }
    if env[0] == 0.0 {
        return Some(1);
    }
    let top = env[0];
    env.iter_mut().for_each(|e| *e /= top);

    // 1-based indices below mirror the published algorithm
    let mut plateau_point = 0usize;
    let mut j2 = 0usize;
    for j in 2..=n {
        j2 = (1.25 * j as f64 + 5.0).round() as usize;
        if j2 > n {
            return None;
        }
        let e1 = env[j - 1];
        let e2 = env[j2 - 1];
        let r = 3.0 * (1.0 - e1.ln() / tol.ln());
        if e1 == 0.0 || e2 / e1 > r {
            plateau_point = j - 1;
            break;
        }
    }
    if plateau_point == 0 {
        return None;
    }
    if env[plateau_point - 1] == 0.0 {
        return Some(plateau_point.max(1));
    }
    let floor = tol.powf(7.0 / 6.0);
    let j3 = env.iter().filter(|&&e| e >= floor).count();
    if j3 < j2 {
        j2 = j3 + 1;
        env[j2 - 1] = floor;
    }
    let slope = -tol.log10() / 3.0;
    let denom = (j2.max(2) - 1) as f64;
    let mut best = f64::INFINITY;
    let mut d = 1usize;
    for i in 0..j2 {
        let cc = env[i].log10() + slope * i as f64 / denom;
        if cc < best {
            best = cc;
            d = i + 1;
        }
    }
    Some(d.saturating_sub(1).max(1))
}

/// Adaptive Chebyshev interpolation with the default options except `tol`.
pub fn adaptive_fit<F: Fn(f64) -> f64>(f: F, interval: Interval, tol: f64) -> Result<ChebSeries> {
    adaptive_fit_with(f, interval, &FitOptions::with_tol(tol))
}

/// Adaptive Chebyshev interpolation: samples on nested `2^k + 1` point grids
/// until the coefficient tail reaches a plateau below `opts.tol`.
pub fn adaptive_fit_with<F: Fn(f64) -> f64>(
    f: F,
    interval: Interval,
    opts: &FitOptions,
) -> Result<ChebSeries> {
    let mut n = 16usize;
    let mut vals: Vec<f64> = Vec::new();
    let mut last_tail;
    loop {
        let pts = chebyshev_points(n + 1);
        let mut next = Vec::with_capacity(n + 1);
        for (j, &t) in pts.iter().enumerate() {
            let v = if !vals.is_empty() && j % 2 == 0 {
                vals[j / 2]
            } else {
                let x = interval.from_unit(t);
                let v = f(x);
                if !v.is_finite() {
                    return Err(Error::NonFiniteSample { x });
                }
                v
            };
            next.push(v);
        }
        vals = next;
        let coeffs = values_to_coeffs(&vals);
        let scale = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        let tol = if opts.abs_scale > scale && scale > 0.0 {
            opts.tol * opts.abs_scale / scale
        } else {
            opts.tol
        };
        if let Some(cut) = standard_chop(&coeffs, tol) {
            return Ok(ChebSeries::new(coeffs[..cut].to_vec(), interval));
        }
        let tail = coeffs[coeffs.len() - 3..]
            .iter()
            .fold(0.0_f64, |m, c| m.max(c.abs()));
        last_tail = if scale > 0.0 { tail / scale } else { 0.0 };
        if n >= opts.max_degree {
            break;
        }
        n *= 2;
    }
    Err(Error::NonConvergence {
        degree: n,
        tail: last_tail,
    })
}

/// Fits `f` on `interval`, bisecting wherever a single series cannot resolve
/// it within `opts.max_degree`. Returns consecutive pieces covering `interval`.
///
/// Subintervals narrower than `opts.min_rel_width` of the outer width are
/// closed with a fixed low-degree interpolant at interior (first-kind)
/// points, which tolerates integrable endpoint singularities.
pub fn fit_split<F: Fn(f64) -> f64>(
    f: &F,
    interval: Interval,
    opts: &FitOptions,
) -> Result<Vec<ChebSeries>> {
    let min_width = interval.width() * opts.min_rel_width;
    let mut out = Vec::new();
    split_rec(f, interval, opts, min_width, &mut out)?;
    Ok(out)
}

fn split_rec<F: Fn(f64) -> f64>(
    f: &F,
    iv: Interval,
    opts: &FitOptions,
    min_width: f64,
    out: &mut Vec<ChebSeries>,
) -> Result<()> {
    match adaptive_fit_with(f, iv, opts) {
        Ok(s) => {
            out.push(s);
            Ok(())
        }
        Err(Error::NonConvergence { .. }) | Err(Error::NonFiniteSample { .. })
            if iv.width() > min_width =>
        {
            let mid = iv.mid();
            split_rec(f, Interval::new(iv.lo(), mid)?, opts, min_width, out)?;
            split_rec(f, Interval::new(mid, iv.hi())?, opts, min_width, out)
        }
        Err(Error::NonConvergence { .. }) | Err(Error::NonFiniteSample { .. }) => {
            out.push(first_kind_fit(f, iv, opts.fallback_degree)?);
            Ok(())
        }
        Err(e) => Err(e),
    }
}

/// Interpolant at Chebyshev points of the first kind (endpoints excluded).
fn first_kind_fit<F: Fn(f64) -> f64>(f: &F, iv: Interval, degree: usize) -> Result<ChebSeries> {
    let n = degree + 1;
    let vals: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let theta = PI * (j as f64 + 0.5) / n as f64;
            let x = iv.from_unit(theta.cos());
            (theta, f(x))
        })
        .collect();
    if let Some(&(theta, _)) = vals.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFiniteSample {
            x: iv.from_unit(theta.cos()),
        });
    }
    let c: Vec<f64> = (0..n)
        .map(|k| {
            let s: f64 = vals
                .iter()
                .map(|&(theta, v)| v * (k as f64 * theta).cos())
                .sum();
            if k == 0 {
                s / n as f64
            } else {
                2.0 * s / n as f64
            }
        })
        .collect();
    Ok(ChebSeries::new(c, iv))
}
