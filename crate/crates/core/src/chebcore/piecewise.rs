use super::fit::{adaptive_fit_with, FitOptions};
use super::roots::roots;
use super::series::{ChebSeries, Interval};
use crate::error::{Error, Result};

/// Consecutive Chebyshev pieces on `breaks[k]..breaks[k+1]`.
///
/// Evaluation is right-continuous at interior breakpoints, uses the last
/// piece at the final breakpoint, and is exactly zero outside the support.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseFun {
    breaks: Vec<f64>,
    pieces: Vec<ChebSeries>,
}

impl PiecewiseFun {
    /// Glues `pieces`, which must be ordered and contiguous (gaps up to
    /// `1e-13` of the total width are closed by snapping).
    pub fn new(pieces: Vec<ChebSeries>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::EmptyPiecewise);
        }
        let lo = pieces[0].interval().lo();
        let hi = pieces[pieces.len() - 1].interval().hi();
        let tol = 1e-13 * (hi - lo).abs().max(f64::MIN_POSITIVE);
        let mut breaks = vec![lo];
        for w in pieces.windows(2) {
            let (a, b) = (w[0].interval(), w[1].interval());
            if (a.hi() - b.lo()).abs() > tol {
                return Err(Error::IntervalMismatch {
                    a_lo: a.lo(),
                    a_hi: a.hi(),
                    b_lo: b.lo(),
                    b_hi: b.hi(),
                });
            }
            breaks.push(b.lo());
        }
        breaks.push(hi);
        let pieces = pieces
            .into_iter()
            .enumerate()
            .map(|(k, p)| {
                let iv = Interval::new(breaks[k], breaks[k + 1])?;
                Ok(if p.interval() == iv { p } else { p.with_interval(iv) })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { breaks, pieces })
    }

    pub fn from_series(s: ChebSeries) -> Self {
        let iv = s.interval();
        Self {
            breaks: vec![iv.lo(), iv.hi()],
            pieces: vec![s],
        }
    }

    /// Zero function on `iv`.
    pub fn zero(iv: Interval) -> Self {
        Self::from_series(ChebSeries::zero(iv))
    }

    /// Fits `f` on each subinterval between consecutive `breaks`.
    pub fn fit<F: Fn(f64) -> f64>(f: F, breaks: &[f64], opts: &FitOptions) -> Result<Self> {
        let mut pieces = Vec::with_capacity(breaks.len().saturating_sub(1));
        for w in breaks.windows(2) {
            pieces.push(adaptive_fit_with(&f, Interval::new(w[0], w[1])?, opts)?);
        }
        Self::new(pieces)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    pub fn pieces(&self) -> &[ChebSeries] {
        &self.pieces
    }

    pub fn support(&self) -> Interval {
        Interval::new(self.breaks[0], self.breaks[self.breaks.len() - 1])
            .expect("breakpoints are increasing")
    }

    pub fn max_degree(&self) -> usize {
        self.pieces.iter().map(|p| p.degree()).max().unwrap_or(0)
    }

    /// Index of the piece used at `x`, or `None` outside the support.
    pub fn piece_index(&self, x: f64) -> Option<usize> {
        let last = self.breaks.len() - 1;
        if !(x >= self.breaks[0] && x <= self.breaks[last]) {
            return None;
        }
        let k = self.breaks.partition_point(|&b| b <= x);
        Some(k.saturating_sub(1).min(self.pieces.len() - 1))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.piece_index(x) {
            Some(k) => self.pieces[k].eval(x),
            None => 0.0,
        }
    }

    pub fn eval_many(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }

    pub fn differentiate(&self, order: usize) -> PiecewiseFun {
        self.map(|p| p.differentiate(order))
    }

    pub fn integral(&self) -> f64 {
        self.pieces.iter().map(|p| p.integral()).sum()
    }

    pub fn scale(&self, factor: f64) -> PiecewiseFun {
        self.map(|p| p.scale(factor))
    }

    pub fn simplify(&self, tol: f64) -> PiecewiseFun {
        self.map(|p| p.simplify(tol))
    }

    fn map<F: Fn(&ChebSeries) -> ChebSeries>(&self, f: F) -> PiecewiseFun {
        PiecewiseFun {
            breaks: self.breaks.clone(),
            pieces: self.pieces.iter().map(f).collect(),
        }
    }

    /// Restriction to `iv`, which is intersected with the support; zero
    /// pieces fill any part of `iv` outside the support.
    pub fn restrict(&self, iv: Interval) -> Result<PiecewiseFun> {
        let mut bps = vec![iv.lo(), iv.hi()];
        bps.extend(
            self.breaks
                .iter()
                .copied()
                .filter(|&b| b > iv.lo() && b < iv.hi()),
        );
        let bps = merge_breaks(bps, 1e-13 * iv.width());
        let pieces = bps
            .windows(2)
            .map(|w| Ok(self.piece_on(Interval::new(w[0], w[1])?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(pieces)
    }

    /// Series equal to this function on `sub`, which must lie inside one
    /// piece or entirely outside the support (up to rounding).
    fn piece_on(&self, sub: Interval) -> ChebSeries {
        match self.piece_index(sub.mid()) {
            Some(k) => {
                let p = &self.pieces[k];
                if p.interval().approx_eq(&sub, 0.0) {
                    p.clone()
                } else {
                    p.restrict(sub)
                }
            }
            None => ChebSeries::zero(sub),
        }
    }

    /// Refits every piece adaptively and chops to `opts.tol`.
    pub fn refit(&self, opts: &FitOptions) -> Result<PiecewiseFun> {
        let mut pieces = Vec::with_capacity(self.pieces.len());
        for p in &self.pieces {
            let q = if p.degree() <= 16 {
                p.clone()
            } else {
                adaptive_fit_with(|x| p.eval(x), p.interval(), opts)?
            };
            pieces.push(q);
        }
        Ok(PiecewiseFun {
            breaks: self.breaks.clone(),
            pieces,
        })
    }

    /// Joins neighbouring pieces that are identically zero.
    pub fn merge_zero_pieces(&self) -> PiecewiseFun {
        let mut pieces: Vec<ChebSeries> = Vec::new();
        for p in &self.pieces {
            if let Some(last) = pieces.last_mut() {
                if last.is_zero() && p.is_zero() {
                    let iv = Interval::new(last.interval().lo(), p.interval().hi())
                        .expect("contiguous pieces");
                    *last = ChebSeries::zero(iv);
                    continue;
                }
            }
            pieces.push(p.clone());
        }
        Self::new(pieces).expect("pieces stay contiguous")
    }

    /// Pointwise sum over the union of supports (zero where a term is
    /// outside its support).
    pub fn sum(terms: &[PiecewiseFun]) -> Result<PiecewiseFun> {
        let (breaks, aligned) = align(terms)?;
        let pieces = (0..breaks.len() - 1)
            .map(|k| {
                let mut acc = aligned[0][k].clone();
                for a in &aligned[1..] {
                    acc = acc.add(&a[k]);
                }
                acc
            })
            .collect();
        Self::new(pieces)
    }

    pub fn add(&self, other: &PiecewiseFun) -> Result<PiecewiseFun> {
        Self::sum(&[self.clone(), other.clone()])
    }
}

/// Sorts and merges breakpoints closer than `tol`.
pub(crate) fn merge_breaks(mut bps: Vec<f64>, tol: f64) -> Vec<f64> {
    bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let last = *bps.last().expect("non-empty");
    let mut out: Vec<f64> = Vec::with_capacity(bps.len());
    for b in bps {
        match out.last() {
            Some(&p) if b - p <= tol => {}
            _ => out.push(b),
        }
    }
    // keep the true outer endpoint
    if let Some(l) = out.last_mut() {
        *l = last;
    }
    if out.len() >= 2 && out[out.len() - 1] - out[out.len() - 2] <= tol {
        let n = out.len();
        out.remove(n - 2);
    }
    out
}

/// Common refinement of several functions: shared breakpoints over the union
/// of supports and, per function, one series per refined subinterval.
fn align(fs: &[PiecewiseFun]) -> Result<(Vec<f64>, Vec<Vec<ChebSeries>>)> {
    if fs.is_empty() {
        return Err(Error::EmptyPiecewise);
    }
    let lo = fs.iter().map(|f| f.breaks[0]).fold(f64::INFINITY, f64::min);
    let hi = fs
        .iter()
        .map(|f| f.breaks[f.breaks.len() - 1])
        .fold(f64::NEG_INFINITY, f64::max);
    let all: Vec<f64> = fs.iter().flat_map(|f| f.breaks.iter().copied()).collect();
    let breaks = merge_breaks(all, 1e-13 * (hi - lo));
    let subs = breaks
        .windows(2)
        .map(|w| Interval::new(w[0], w[1]))
        .collect::<Result<Vec<_>>>()?;
    let aligned = fs
        .iter()
        .map(|f| subs.iter().map(|&s| f.piece_on(s)).collect())
        .collect();
    Ok((breaks, aligned))
}

/// Pointwise maximum, with crossings of `a - b` inserted as breakpoints.
pub fn pw_max(a: &PiecewiseFun, b: &PiecewiseFun) -> Result<PiecewiseFun> {
    let (breaks, aligned) = align(&[a.clone(), b.clone()])?;
    let mut pieces = Vec::new();
    for k in 0..breaks.len() - 1 {
        let (pa, pb) = (&aligned[0][k], &aligned[1][k]);
        let diff = pa.sub(pb);
        let scale = pa.coeff_scale().max(pb.coeff_scale());
        let iv = diff.interval();
        if diff.coeff_scale() <= 1e-14 * scale || diff.is_zero() {
            pieces.push(if diff.integral() >= 0.0 { pa.clone() } else { pb.clone() });
            continue;
        }
        let mut cuts = vec![iv.lo()];
        let tol = 1e-12 * iv.width();
        for r in roots(&diff)? {
            if r - cuts[cuts.len() - 1] > tol && iv.hi() - r > tol {
                cuts.push(r);
            }
        }
        cuts.push(iv.hi());
        for w in cuts.windows(2) {
            let sub = Interval::new(w[0], w[1])?;
            let m = sub.mid();
            let pick = if diff.eval(m) >= 0.0 { pa } else { pb };
            pieces.push(if cuts.len() == 2 { pick.clone() } else { pick.restrict(sub) });
        }
    }
    PiecewiseFun::new(pieces)
}
