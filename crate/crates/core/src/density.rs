//! Risk-neutral densities as piecewise Chebyshev series.
//!
//! The complex Fourier series (CFS) of a density on `[c, d]` is read off the
//! characteristic function. It is converted to a Chebyshev series with the
//! Jacobi–Anger expansion, and its singularities are located by a
//! Fourier–Padé approximation so that the piecewise fit can break there.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::chebcore::{
    adaptive_fit_with, fit_split, standard_chop, ChebSeries, FitOptions, Interval, PiecewiseFun,
};
use crate::error::{Error, Result};
use crate::levy::LevyModel;
use crate::special::bessel_j_all;

pub use crate::special::bessel_j;

/// Default number of Fourier terms.
pub const DEFAULT_TERMS: usize = 1024;

/// Fourier coefficients `b_k = φ(-2πk/(d-c))`, `k = 0..=N`, of a density on
/// `[c, d]`. Negative indices follow from `b_{-k} = conj(b_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CfsDensity {
    b: Vec<Complex64>,
    interval: Interval,
    t: f64,
}

impl CfsDensity {
    pub fn from_coeffs(b: Vec<Complex64>, interval: Interval, t: f64) -> Self {
        Self { b, interval, t }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.b
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn horizon(&self) -> f64 {
        self.t
    }

    fn period(&self) -> f64 {
        self.interval.width()
    }

    /// Partial sum `(1/P)(b_0 + 2 Re Σ b_k e^{i2πkx/P})`.
    pub fn eval(&self, x: f64) -> f64 {
        let p = self.period();
        let step = Complex64::from_polar(1.0, 2.0 * PI * x / p);
        let mut rot = step;
        let mut s = 0.0;
        for (k, bk) in self.b.iter().enumerate().skip(1) {
            // re-anchor the rotation now and then to stop drift
            if k % 64 == 0 {
                rot = Complex64::from_polar(1.0, 2.0 * PI * k as f64 * x / p);
            }
            s += (bk * rot).re;
            rot *= step;
        }
        (self.b[0].re + 2.0 * s) / p
    }

    fn scale(&self) -> f64 {
        self.b.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    /// Largest `k` whose coefficient exceeds `rel` times the largest one.
    fn effective_terms(&self, rel: f64) -> usize {
        let floor = rel * self.scale();
        self.b.iter().rposition(|z| z.norm() > floor).unwrap_or(0)
    }

    /// Size of the last coefficient relative to the largest one.
    pub fn tail(&self) -> f64 {
        let s = self.scale();
        if s == 0.0 {
            0.0
        } else {
            self.b[self.b.len() - 1].norm() / s
        }
    }
}

/// CFS coefficients of the log-return density over horizon `t`.
pub fn cfs_coeffs(model: &LevyModel, interval: Interval, t: f64, n: usize) -> CfsDensity {
    let p = interval.width();
    let b = (0..=n)
        .map(|k| model.char_fn(Complex64::new(-2.0 * PI * k as f64 / p, 0.0), t))
        .collect();
    CfsDensity { b, interval, t }
}

/// Chebyshev series of the CFS partial sum on its interval; with `reflect`
/// the result represents `x ↦ g(-x)` on `[-d, -c]`.
pub fn cfs_to_cheb(d: &CfsDensity, reflect: bool) -> ChebSeries {
    let iv = d.interval();
    let p = d.period();
    let keff = d.effective_terms(1e-17);
    let zmax = PI * keff as f64;
    let nmax = (zmax + 10.0 * zmax.cbrt()).ceil() as usize + 30;
    // S_n = Σ_{k=-K}^{K} b_k e^{iπk(c+d)/(d-c)} J_n(πk)
    let mut s = vec![Complex64::new(0.0, 0.0); nmax + 1];
    s[0] = d.b[0];
    let shift = PI * (iv.lo() + iv.hi()) / p;
    for k in 1..=keff {
        let w = d.b[k] * Complex64::from_polar(1.0, shift * k as f64);
        let jn = bessel_j_all(nmax, PI * k as f64);
        for (n, sn) in s.iter_mut().enumerate() {
            // k and -k together: J_n(-z) = (-1)^n J_n(z)
            let pair = if n % 2 == 0 { w + w.conj() } else { w - w.conj() };
            *sn += pair * jn[n];
        }
    }
    let mut alpha: Vec<f64> = s
        .iter()
        .enumerate()
        .map(|(n, sn)| {
            let i_n = match n % 4 {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(0.0, 1.0),
                2 => Complex64::new(-1.0, 0.0),
                _ => Complex64::new(0.0, -1.0),
            };
            let eps = if n == 0 { 1.0 } else { 2.0 };
            eps * (i_n * sn).re / p
        })
        .collect();
    if let Some(keep) = standard_chop(&alpha, 1e-15) {
        alpha.truncate(keep);
    }
    let series = ChebSeries::new(alpha, iv);
    if reflect {
        series.reflect()
    } else {
        series
    }
}

/// Rational approximation `P(z)/Q(z)` of `Σ b_k z^k` with `q_0 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PadeApprox {
    pub p: Vec<Complex64>,
    pub q: Vec<Complex64>,
}

impl PadeApprox {
    pub fn eval_p(&self, z: Complex64) -> Complex64 {
        horner(&self.p, z)
    }

    pub fn eval_q(&self, z: Complex64) -> Complex64 {
        horner(&self.q, z)
    }

    /// Roots of the denominator.
    pub fn poles(&self) -> Vec<Complex64> {
        poly_roots(&self.q)
    }
}

fn horner(c: &[Complex64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &v| acc * z + v)
}

/// Linear Padé approximant of type `(n_p, m_p)` from the Toeplitz system
/// `Σ_{m=1}^{M} q_m b_{N+j-m} = -b_{N+j}`, `j = 1..=M`.
///
/// A numerically zero or rank-deficient system means fewer poles are
/// present than requested; the denominator degree is then reduced until the
/// system is well posed (down to `Q = 1`).
pub fn fourier_pade(b: &[Complex64], n_p: usize, m_p: usize) -> Result<PadeApprox> {
    if m_p == 0 || n_p + m_p + 1 > b.len() {
        return Err(Error::InvalidParameter(format!(
            "Padé type ({n_p}, {m_p}) needs at least {} coefficients, got {}",
            n_p + m_p + 1,
            b.len()
        )));
    }
    let at = |k: isize| -> Complex64 {
        if k < 0 {
            Complex64::new(0.0, 0.0)
        } else {
            b[k as usize]
        }
    };
    let scale = b.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    let mut m = m_p;
    let q = loop {
        if m == 0 {
            break vec![Complex64::new(1.0, 0.0)];
        }
        let a = DMatrix::from_fn(m, m, |j, c| at(n_p as isize + 1 + j as isize - (c as isize + 1)));
        let rhs = DVector::from_fn(m, |j, _| -at(n_p as isize + 1 + j as isize));
        let sv = a.clone().singular_values();
        let smax = sv.max();
        let smin = sv.min();
        if smax <= 1e-14 * scale {
            m -= 1;
            continue;
        }
        let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if cond > 1e14 {
            // fewer poles than requested are present
            if m == 1 {
                return Err(Error::SingularToeplitz { cond });
            }
            m -= 1;
            continue;
        }
        let sol = a
            .lu()
            .solve(&rhs)
            .ok_or(Error::SingularToeplitz { cond })?;
        let mut q = vec![Complex64::new(1.0, 0.0)];
        q.extend(sol.iter().copied());
        break q;
    };
    let mut q = q;
    while q.len() > 1 && q[q.len() - 1].norm() == 0.0 {
        q.pop();
    }
    let p = (0..=n_p)
        .map(|n| {
            q.iter()
                .enumerate()
                .filter(|(j, _)| *j <= n)
                .map(|(j, qj)| qj * b[n - j])
                .sum()
        })
        .collect();
    Ok(PadeApprox { p, q })
}

/// Roots of `Σ c_k z^k` by the Aberth–Ehrlich iteration.
fn poly_roots(c: &[Complex64]) -> Vec<Complex64> {
    let mut c = c.to_vec();
    let scale = c.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    while c.len() > 1 && c[c.len() - 1].norm() <= 1e-14 * scale {
        c.pop();
    }
    let n = c.len() - 1;
    if n == 0 {
        return vec![];
    }
    let lead = c[n];
    let mono: Vec<Complex64> = c.iter().map(|v| v / lead).collect();
    let dcoef: Vec<Complex64> = (1..=n).map(|k| mono[k] * k as f64).collect();
    let r0 = mono[0].norm().powf(1.0 / n as f64).max(1e-3);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(r0, 2.0 * PI * k as f64 / n as f64 + 0.4))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0_f64;
        for i in 0..n {
            let pz = horner(&mono, z[i]);
            let dz = horner(&dcoef, z[i]);
            if pz.norm() == 0.0 {
                continue;
            }
            let ratio = pz / dz;
            let s: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| 1.0 / (z[i] - z[j]))
                .sum();
            let w = ratio / (1.0 - ratio * s);
            z[i] -= w;
            moved = moved.max(w.norm() / z[i].norm().max(1e-300));
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// Tuning for [`locate_singularities_with`].
#[derive(Debug, Clone, Copy)]
pub struct SingularityOptions {
    /// Denominator degree of the Padé approximant.
    pub m_p: usize,
    /// Poles with `||z| - 1|` below this are taken as real-line singularities.
    pub unit_tol: f64,
    /// Poles closer than this to a numerator root are discarded as spurious.
    pub froissart_tol: f64,
}

impl Default for SingularityOptions {
    fn default() -> Self {
        Self {
            m_p: 4,
            unit_tol: 0.02,
            froissart_tol: 1e-6,
        }
    }
}

/// Interior singularities of the density on `interval` over horizon `t`.
pub fn locate_singularities(
    model: &LevyModel,
    interval: Interval,
    t: f64,
    n: usize,
) -> Result<Vec<f64>> {
    locate_singularities_with(model, interval, t, n, &SingularityOptions::default())
}

pub fn locate_singularities_with(
    model: &LevyModel,
    interval: Interval,
    t: f64,
    n: usize,
    opts: &SingularityOptions,
) -> Result<Vec<f64>> {
    let cfs = cfs_coeffs(model, interval, t, n);
    singularities_from_cfs(&cfs, opts)
}

fn singularities_from_cfs(cfs: &CfsDensity, opts: &SingularityOptions) -> Result<Vec<f64>> {
    let iv = cfs.interval();
    let p = iv.width();
    let n = cfs.coeffs().len() - 1;
    // term-wise derivative sharpens the singularity into a pole
    let a: Vec<Complex64> = cfs
        .coeffs()
        .iter()
        .enumerate()
        .map(|(k, bk)| Complex64::new(0.0, 2.0 * PI * k as f64 / p) * bk)
        .collect();
    let pade = fourier_pade(&a, n - opts.m_p, opts.m_p)?;
    let dp: Vec<Complex64> = pade
        .p
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, v)| v * k as f64)
        .collect();
    let mut xs: Vec<f64> = Vec::new();
    for z in pade.poles() {
        if (z.norm() - 1.0).abs() >= opts.unit_tol {
            continue;
        }
        let pz = horner(&pade.p, z);
        let dz = horner(&dp, z);
        if dz.norm() > 0.0 && (pz / dz).norm() < opts.froissart_tol {
            continue;
        }
        let mut x = z.arg() * p / (2.0 * PI);
        while x < iv.lo() {
            x += p;
        }
        while x >= iv.hi() {
            x -= p;
        }
        if x > iv.lo() && x < iv.hi() {
            xs.push(x);
        }
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup_by(|a, b| (*a - *b).abs() < 2e-3);
    Ok(xs)
}

/// Options for [`build_reflected_density_with`].
#[derive(Debug, Clone, Copy)]
pub struct DensityOptions {
    pub terms: usize,
    pub fit: FitOptions,
    pub singularities: SingularityOptions,
    /// Largest Fourier term count tried when the series has not decayed.
    pub max_terms: usize,
}

impl Default for DensityOptions {
    fn default() -> Self {
        Self {
            terms: DEFAULT_TERMS,
            fit: FitOptions::default().max_degree(256),
            singularities: SingularityOptions::default(),
            max_terms: 1 << 17,
        }
    }
}

/// Reflected density `x̃ ↦ g(-x̃)` on `[-d, -c]` and the singularities of
/// `g` (in the unreflected variable) used as breakpoints.
#[derive(Debug, Clone)]
pub struct ReflectedDensity {
    pub fun: PiecewiseFun,
    pub singularities: Vec<f64>,
}

impl ReflectedDensity {
    /// Points where the reflected density is not smooth: its support ends
    /// and the reflected singularities.
    pub fn essential_breaks(&self) -> Vec<f64> {
        let s = self.fun.support();
        let mut v = vec![s.lo(), s.hi()];
        v.extend(self.singularities.iter().map(|x| -x));
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }
}

pub fn build_reflected_density(
    model: &LevyModel,
    interval: Interval,
    t: f64,
    n: usize,
) -> Result<ReflectedDensity> {
    let opts = DensityOptions {
        terms: n,
        ..DensityOptions::default()
    };
    build_reflected_density_with(model, interval, t, &opts)
}

pub fn build_reflected_density_with(
    model: &LevyModel,
    interval: Interval,
    t: f64,
    opts: &DensityOptions,
) -> Result<ReflectedDensity> {
    let cfs = cfs_coeffs(model, interval, t, opts.terms);
    let mut sing = singularities_from_cfs(&cfs, &opts.singularities)?;
    let refl = Interval::new(-interval.hi(), -interval.lo())?;

    if model.has_closed_form() {
        let pdf = |x: f64| model.pdf_closed_form(x, t).unwrap_or(f64::NAN);
        for s in sing.iter_mut() {
            *s = refine_peak(&pdf, *s, 5e-3, interval);
        }
        let fun = fit_between(&|y: f64| pdf(-y), refl, &sing, &opts.fit)?;
        return Ok(ReflectedDensity {
            fun,
            singularities: sing,
        });
    }

    let fun = reflected_from_cfs(|n| cfs_coeffs(model, interval, t, n), cfs, &sing, opts, 1e-15)?;
    Ok(ReflectedDensity {
        fun,
        singularities: sing,
    })
}

/// Reflected kernel from Fourier coefficients. A converged series goes
/// through the Bessel projection; a slowly decaying one is extended by
/// doubling the term count until the relative tail is below `tail_tol` and
/// its partial sum is fitted piecewise.
pub(crate) fn reflected_from_cfs<M: Fn(usize) -> CfsDensity>(
    make: M,
    first: CfsDensity,
    sing: &[f64],
    opts: &DensityOptions,
    tail_tol: f64,
) -> Result<PiecewiseFun> {
    let interval = first.interval();
    let refl = Interval::new(-interval.hi(), -interval.lo())?;
    if first.tail() < 10.0 * tail_tol {
        let series = cfs_to_cheb(&first, true);
        let mut breaks = vec![refl.lo()];
        breaks.extend(sing.iter().rev().map(|s| -s));
        breaks.push(refl.hi());
        // sharply peaked densities come out at very high degree; splitting
        // those pieces keeps every later convolution cheap
        let fit = FitOptions {
            abs_scale: opts.fit.abs_scale.max(series.coeff_scale()),
            ..opts.fit
        };
        let mut pieces = Vec::new();
        for w in breaks.windows(2) {
            let sub = Interval::new(w[0], w[1])?;
            let p = series.restrict(sub);
            let p = match standard_chop(p.coeffs(), 1e-15) {
                Some(keep) => ChebSeries::new(p.coeffs()[..keep].to_vec(), sub),
                None => p,
            };
            if p.degree() > opts.fit.max_degree {
                pieces.extend(fit_split(&|x: f64| p.eval(x), sub, &fit)?);
            } else {
                pieces.push(p);
            }
        }
        return PiecewiseFun::new(pieces);
    }
    let mut n = first.coeffs().len() - 1;
    let mut long = first;
    while long.tail() >= tail_tol && n < opts.max_terms {
        n *= 2;
        long = make(n);
    }
    let keff = long.effective_terms(tail_tol * 1e-2);
    let t = long.horizon();
    let trimmed = CfsDensity::from_coeffs(long.b[..=keff.max(1)].to_vec(), interval, t);
    // the partial sum carries noise of the size of the dropped tail everywhere,
    // so far-tail pieces are judged against the global scale
    let sup = trimmed.b.iter().map(|b| b.norm()).sum::<f64>() * 2.0 / interval.width();
    let fit = FitOptions {
        abs_scale: opts.fit.abs_scale.max(sup),
        ..opts.fit
    };
    fit_between(&|y: f64| trimmed.eval(-y), refl, sing, &fit)
}

const VEGA_TOL: f64 = 1e-11;

/// Reflected `∂g/∂σ` kernel on `[-d, -c]`: closed form for GBM, otherwise
/// from the Fourier coefficients of `∂φ/∂σ`.
pub fn build_reflected_vega_kernel(
    model: &LevyModel,
    interval: Interval,
    t: f64,
    opts: &DensityOptions,
) -> Result<ReflectedDensity> {
    let refl = Interval::new(-interval.hi(), -interval.lo())?;
    if let crate::levy::ModelKind::Gbm { .. } = model.kind {
        let fun = fit_between(
            &|y: f64| model.pdf_dsigma_closed_form(-y, t).unwrap_or(f64::NAN),
            refl,
            &[],
            &opts.fit,
        )?;
        return Ok(ReflectedDensity {
            fun,
            singularities: Vec::new(),
        });
    }
    let make = |n: usize| -> Result<CfsDensity> {
        let p = interval.width();
        let b = (0..=n)
            .map(|k| model.char_fn_dsigma(Complex64::new(-2.0 * PI * k as f64 / p, 0.0), t))
            .collect::<Result<Vec<_>>>()?;
        Ok(CfsDensity::from_coeffs(b, interval, t))
    };
    let first = make(opts.terms)?;
    let mut sing = singularities_from_cfs(&cfs_coeffs(model, interval, t, opts.terms), &opts.singularities)?;
    if model.has_closed_form() {
        let pdf = |x: f64| model.pdf_closed_form(x, t).unwrap_or(f64::NAN);
        for s in sing.iter_mut() {
            *s = refine_peak(&pdf, *s, 5e-3, interval);
        }
    }
    // the σ-derivative decays two orders slower than the density, and its
    // consumers need far fewer digits than prices do
    let loose = DensityOptions {
        fit: FitOptions {
            tol: VEGA_TOL,
            ..opts.fit
        },
        ..*opts
    };
    let fun = reflected_from_cfs(|n| make(n).expect("checked above"), first, &sing, &loose, VEGA_TOL)?;
    Ok(ReflectedDensity {
        fun,
        singularities: sing,
    })
}

/// Piecewise fit of `f` on `iv` with breaks at the reflected `sing`.
fn fit_between<F: Fn(f64) -> f64>(
    f: &F,
    iv: Interval,
    sing: &[f64],
    opts: &FitOptions,
) -> Result<PiecewiseFun> {
    let mut breaks = vec![iv.lo()];
    breaks.extend(sing.iter().rev().map(|s| -s).filter(|&b| b > iv.lo() && b < iv.hi()));
    breaks.push(iv.hi());
    let mut pieces = Vec::new();
    for w in breaks.windows(2) {
        let sub = Interval::new(w[0], w[1])?;
        match adaptive_fit_with(f, sub, opts) {
            Ok(p) => pieces.push(p),
            Err(Error::NonConvergence { .. }) | Err(Error::NonFiniteSample { .. }) => {
                let sub_opts = FitOptions {
                    min_rel_width: opts.min_rel_width * iv.width() / sub.width(),
                    ..*opts
                };
                pieces.extend(fit_split(f, sub, &sub_opts)?);
            }
            Err(e) => return Err(e),
        }
    }
    PiecewiseFun::new(pieces)
}

/// Golden-section search for the maximum of `f` within `x0 ± half`.
fn refine_peak<F: Fn(f64) -> f64>(f: &F, x0: f64, half: f64, iv: Interval) -> f64 {
    let g = 0.5 * (5.0_f64.sqrt() - 1.0);
    let (mut a, mut b) = ((x0 - half).max(iv.lo()), (x0 + half).min(iv.hi()));
    let val = |x: f64| {
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (val(c), val(d));
    for _ in 0..200 {
        if b - a < 1e-13 * (1.0 + x0.abs()) {
            break;
        }
        if fc == f64::INFINITY {
            return c;
        }
        if fd == f64::INFINITY {
            return d;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = val(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = val(d);
        }
    }
    0.5 * (a + b)
}
