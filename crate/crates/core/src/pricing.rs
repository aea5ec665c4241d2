//! European, Bermudan, American and discretely monitored barrier engines.
//!
//! Every engine returns a [`PriceCurve`]: a piecewise Chebyshev function of
//! the moneyness `x̃ = log(S/K)` on the truncation interval of the full
//! horizon. Prices are `discount · K^p · h(x̃)` with `p` the strike power of
//! the payoff.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::chebcore::{roots, ChebSeries, FitOptions, Interval, PiecewiseFun};
use crate::density::{build_reflected_density_with, DensityOptions, ReflectedDensity};
use crate::error::{Error, Result};
use crate::legconv::conv_window;
use crate::levy::LevyModel;
use crate::payoffs::{payoff_logspace, PayoffKind, PayoffSpec};

/// Spot, rates and the valuation/maturity dates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    pub spot: f64,
    pub r: f64,
    pub q: f64,
    pub t: f64,
    pub maturity: f64,
}

impl MarketParams {
    pub fn new(spot: f64, r: f64, q: f64, t: f64, maturity: f64) -> Result<Self> {
        let m = Self {
            spot,
            r,
            q,
            t,
            maturity,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spot > 0.0 && self.spot.is_finite()) {
            return Err(Error::InvalidParameter("spot must be positive".into()));
        }
        if !(self.t >= 0.0 && self.maturity > self.t && self.maturity.is_finite()) {
            return Err(Error::InvalidParameter("need maturity > t >= 0".into()));
        }
        if !(self.r.is_finite() && self.q.is_finite()) {
            return Err(Error::InvalidParameter("rates must be finite".into()));
        }
        Ok(())
    }

    /// Time to maturity `T - t`.
    pub fn tau(&self) -> f64 {
        self.maturity - self.t
    }

    pub fn with_spot(mut self, spot: f64) -> Self {
        self.spot = spot;
        self
    }
}

/// A whole price curve in `x̃ = log(S/K)`.
#[derive(Debug, Clone)]
pub struct PriceCurve {
    curve: PiecewiseFun,
    discount: f64,
    market: MarketParams,
    payoff: PayoffSpec,
    /// `(r - q)τ` when the curve is a put turned into a call by parity; the
    /// term `e^{x̃ + (r-q)τ} - 1` is then added in closed form.
    parity: Option<f64>,
}

impl PriceCurve {
    pub fn new(curve: PiecewiseFun, discount: f64, market: MarketParams, payoff: PayoffSpec) -> Self {
        Self {
            curve,
            discount,
            market,
            payoff,
            parity: None,
        }
    }

    pub fn curve(&self) -> &PiecewiseFun {
        &self.curve
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn market(&self) -> &MarketParams {
        &self.market
    }

    pub fn payoff(&self) -> &PayoffSpec {
        &self.payoff
    }

    pub fn support(&self) -> Interval {
        self.curve.support()
    }

    pub fn parity_shift(&self) -> Option<f64> {
        self.parity
    }

    /// Normalised value `h(x̃)`, parity term included.
    pub fn normalised(&self, xt: f64) -> f64 {
        let v = self.curve.eval(xt);
        match self.parity {
            Some(s) => v + (xt + s).exp() - 1.0,
            None => v,
        }
    }

    /// Price for spot `s` and strike `k`.
    pub fn price(&self, s: f64, k: f64) -> f64 {
        self.discount * k.powi(self.payoff.strike_power()) * self.normalised((s / k).ln())
    }

    /// Price at strike `k` with the curve's own spot.
    pub fn price_at_strike(&self, k: f64) -> f64 {
        self.price(self.market.spot, k)
    }

    /// Price at spot `s` for a fixed strike `k`.
    pub fn price_at_spot(&self, s: f64, k: f64) -> f64 {
        self.price(s, k)
    }

    pub fn prices_at_strikes(&self, ks: &[f64]) -> Vec<f64> {
        ks.iter().map(|&k| self.price_at_strike(k)).collect()
    }

    pub(crate) fn with_parity(&self, market: &MarketParams) -> Result<PriceCurve> {
        if self.parity.is_some() {
            return Err(Error::InvalidParameter("curve already carries a parity term".into()));
        }
        Ok(PriceCurve {
            curve: self.curve.clone(),
            discount: self.discount,
            market: *market,
            payoff: PayoffSpec::call(),
            parity: Some((market.r - market.q) * market.tau()),
        })
    }
}

/// Exercise or monitoring dates `t_0 < t_1 < … < t_L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExerciseSchedule {
    dates: Vec<f64>,
}

impl ExerciseSchedule {
    pub fn new(dates: Vec<f64>) -> Result<Self> {
        if dates.len() < 2 {
            return Err(Error::InvalidParameter("schedule needs t_0 and at least one date".into()));
        }
        if !dates.windows(2).all(|w| w[1] > w[0]) || !dates.iter().all(|d| d.is_finite()) {
            return Err(Error::InvalidParameter("schedule dates must increase strictly".into()));
        }
        Ok(Self { dates })
    }

    /// `l` equally spaced dates after `t`, the last one at `maturity`.
    pub fn uniform(t: f64, maturity: f64, l: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidParameter("need at least one date".into()));
        }
        let h = (maturity - t) / l as f64;
        let mut dates: Vec<f64> = (0..=l).map(|k| t + h * k as f64).collect();
        dates[l] = maturity;
        Self::new(dates)
    }

    pub fn dates(&self) -> &[f64] {
        &self.dates
    }

    /// Number of dates after `t_0`.
    pub fn len(&self) -> usize {
        self.dates.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check(&self, market: &MarketParams) -> Result<()> {
        let tol = 1e-12 * market.maturity.abs().max(1.0);
        if (self.dates[0] - market.t).abs() > tol || (self.dates[self.len()] - market.maturity).abs() > tol {
            return Err(Error::InvalidParameter(
                "schedule must start at t and end at maturity".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierDirection {
    DownAndOut,
    UpAndOut,
}

/// Discretely monitored knock-out barrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierSpec {
    pub level: f64,
    pub rebate: f64,
    pub direction: BarrierDirection,
    pub schedule: ExerciseSchedule,
}

impl BarrierSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.level > 0.0 && self.level.is_finite()) {
            return Err(Error::InvalidParameter("barrier level must be positive".into()));
        }
        if !(self.rebate >= 0.0 && self.rebate.is_finite()) {
            return Err(Error::InvalidParameter("rebate must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Numerical controls shared by the engines.
#[derive(Debug, Clone, Copy)]
pub struct PricingOptions {
    pub density: DensityOptions,
    pub fit: FitOptions,
}

impl Default for PricingOptions {
    fn default() -> Self {
        Self {
            density: DensityOptions::default(),
            fit: FitOptions::default().max_degree(1024),
        }
    }
}

pub(crate) fn check_rates(model: &LevyModel, market: &MarketParams) -> Result<()> {
    market.validate()?;
    if (model.r - market.r).abs() > 1e-14 || (model.q - market.q).abs() > 1e-14 {
        return Err(Error::InvalidParameter("model and market rates differ".into()));
    }
    Ok(())
}

/// Breakpoints for the convolution result: every kink shifted by every
/// singularity of the reflected density, plus a coarse grid on wide windows.
pub(crate) fn result_breaks(kinks: &[f64], singularities: &[f64], window: Interval) -> Vec<f64> {
    let mut shifts = vec![0.0];
    shifts.extend(singularities.iter().map(|s| -s));
    let mut out: Vec<f64> = kinks
        .iter()
        .flat_map(|k| shifts.iter().map(move |s| k + s))
        .collect();
    let step = 2.0;
    if window.width() > 4.0 * step {
        let mut x = (window.lo() / step).ceil() * step;
        while x < window.hi() {
            out.push(x);
            x += step;
        }
    }
    out
}

/// European price curve.
pub fn price_european(
    model: &LevyModel,
    spec: &PayoffSpec,
    market: &MarketParams,
    l_n: f64,
) -> Result<PriceCurve> {
    price_european_with(model, spec, market, l_n, &PricingOptions::default())
}

pub fn price_european_with(
    model: &LevyModel,
    spec: &PayoffSpec,
    market: &MarketParams,
    l_n: f64,
    opts: &PricingOptions,
) -> Result<PriceCurve> {
    check_rates(model, market)?;
    let tau = market.tau();
    let iv = model.truncation_interval(tau, l_n)?;
    let dens = build_reflected_density_with(model, iv, tau, &opts.density)?;
    // the payoff is needed wherever x̃ - y can land inside the density
    let f = payoff_logspace(spec, reach(iv, &dens.fun)?)?;
    let h = conv_window(&f, &dens.fun, iv, &result_breaks(&[0.0], &dens.singularities, iv), &opts.fit)?;
    Ok(PriceCurve::new(h, (-market.r * tau).exp(), *market, *spec))
}

/// Arguments `y` reached by `h(x̃) = ∫ f(y) g^R(x̃ - y) dy` for `x̃` in `window`.
pub(crate) fn reach(window: Interval, kernel: &PiecewiseFun) -> Result<Interval> {
    let g = kernel.support();
    Interval::new(window.lo() - g.hi(), window.hi() - g.lo())
}

/// `v` continued by `outer` beyond its support, up to `span`.
fn extend(v: &PiecewiseFun, outer: &PiecewiseFun, span: Interval) -> Result<PiecewiseFun> {
    let s = v.support();
    let mut pieces: Vec<ChebSeries> = Vec::new();
    if span.lo() < s.lo() {
        pieces.extend(outer.restrict(Interval::new(span.lo(), s.lo())?)?.pieces().iter().cloned());
    }
    pieces.extend(v.pieces().iter().cloned());
    if span.hi() > s.hi() {
        pieces.extend(outer.restrict(Interval::new(s.hi(), span.hi())?)?.pieces().iter().cloned());
    }
    PiecewiseFun::new(pieces)
}

/// Region of `x̃` where immediate exercise pays.
fn active_region(spec: &PayoffSpec, iv: Interval) -> Result<Interval> {
    match spec.kind {
        PayoffKind::Put if iv.lo() < 0.0 => Interval::new(iv.lo(), iv.hi().min(0.0)),
        PayoffKind::Call if iv.hi() > 0.0 => Interval::new(iv.lo().max(0.0), iv.hi()),
        PayoffKind::Put | PayoffKind::Call => Err(Error::InvalidParameter(
            "exercise region lies outside the truncation interval".into(),
        )),
        _ => Err(Error::InvalidParameter(
            "early exercise is supported for calls and puts only".into(),
        )),
    }
}

/// `max(h, f)` on the active region and `h` elsewhere. Returns the new curve
/// and the exercise boundaries found.
fn exercise(h: &PiecewiseFun, f: &PiecewiseFun, active: Interval) -> Result<(PiecewiseFun, Vec<f64>)> {
    let iv = h.support();
    let ha = h.restrict(active)?;
    let fa = f.restrict(active)?;
    let diff = ha.add(&fa.scale(-1.0))?;
    let mut cuts: Vec<f64> = diff.breakpoints().to_vec();
    let mut boundary = Vec::new();
    for p in diff.pieces() {
        match roots(&p.simplify(1e-15)) {
            Ok(rs) => {
                let w = p.interval();
                for r in rs {
                    if r > w.lo() + 1e-12 * w.width() && r < w.hi() - 1e-12 * w.width() {
                        boundary.push(r);
                        cuts.push(r);
                    }
                }
            }
            Err(Error::ZeroFunction) => {}
            Err(e) => return Err(e),
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut pieces: Vec<ChebSeries> = Vec::new();
    if iv.lo() < active.lo() {
        pieces.extend(h.restrict(Interval::new(iv.lo(), active.lo())?)?.pieces().iter().cloned());
    }
    for w in cuts.windows(2) {
        let sub = Interval::new(w[0], w[1])?;
        let src = if diff.eval(sub.mid()) >= 0.0 { h } else { f };
        pieces.extend(src.restrict(sub)?.pieces().iter().map(|p| p.simplify(1e-15)));
    }
    if iv.hi() > active.hi() {
        pieces.extend(h.restrict(Interval::new(active.hi(), iv.hi())?)?.pieces().iter().cloned());
    }
    Ok((PiecewiseFun::new(pieces)?, boundary))
}

/// Reflected densities keyed by step length.
struct DensityCache<'a> {
    model: &'a LevyModel,
    l_n: f64,
    opts: DensityOptions,
    map: HashMap<u64, ReflectedDensity>,
}

impl<'a> DensityCache<'a> {
    fn new(model: &'a LevyModel, l_n: f64, opts: DensityOptions) -> Self {
        Self {
            model,
            l_n,
            opts,
            map: HashMap::new(),
        }
    }

    fn get(&mut self, dt: f64) -> Result<&ReflectedDensity> {
        // equal spacings differ only in rounding
        let key = (dt * 1e12).round() as u64;
        if !self.map.contains_key(&key) {
            let iv = self.model.truncation_interval(dt, self.l_n)?;
            let d = build_reflected_density_with(self.model, iv, dt, &self.opts)?;
            self.map.insert(key, d);
        }
        Ok(&self.map[&key])
    }
}

/// Bermudan price curve by backward induction over `schedule`. The last
/// step to `t_0` is pure continuation.
pub fn price_bermudan(
    model: &LevyModel,
    spec: &PayoffSpec,
    market: &MarketParams,
    schedule: &ExerciseSchedule,
    l_n: f64,
) -> Result<PriceCurve> {
    price_bermudan_with(model, spec, market, schedule, l_n, &PricingOptions::default())
}

pub fn price_bermudan_with(
    model: &LevyModel,
    spec: &PayoffSpec,
    market: &MarketParams,
    schedule: &ExerciseSchedule,
    l_n: f64,
    opts: &PricingOptions,
) -> Result<PriceCurve> {
    check_rates(model, market)?;
    schedule.check(market)?;
    let iv = model.truncation_interval(market.tau(), l_n)?;
    let active = active_region(spec, iv)?;
    let mut cache = DensityCache::new(model, l_n, opts.density);
    let dates = schedule.dates();
    let widest = Interval::new(2.0 * iv.lo() - 1.0, 2.0 * iv.hi() + 1.0)?;
    let f_wide = payoff_logspace(spec, widest)?;
    let f = f_wide.restrict(iv)?;
    let mut v = f.clone();
    let mut kinks = vec![0.0];
    for l in (0..schedule.len()).rev() {
        let dt = dates[l + 1] - dates[l];
        let dens = cache.get(dt)?;
        // beyond the curve the value is continued by the payoff
        let span = reach(iv, &dens.fun)?;
        let outer = if widest.lo() <= span.lo() && widest.hi() >= span.hi() {
            f_wide.clone()
        } else {
            payoff_logspace(spec, span)?
        };
        let vx = extend(&v, &outer, span)?;
        let h = conv_window(&vx, &dens.fun, iv, &result_breaks(&kinks, &dens.singularities, iv), &opts.fit)?
            .scale((-market.r * dt).exp());
        if l == 0 {
            v = h;
            break;
        }
        let (next, boundary) = exercise(&h, &f, active)?;
        v = next;
        kinks = boundary;
    }
    Ok(PriceCurve::new(v, 1.0, *market, *spec))
}

/// Four-point Richardson combination of Bermudan values with `2^L`,
/// `2^{L+1}`, `2^{L+2}` and `2^{L+3}` dates.
pub fn richardson(v: [f64; 4]) -> f64 {
    (64.0 * v[3] - 56.0 * v[2] + 14.0 * v[1] - v[0]) / 21.0
}

/// American price curve by Richardson extrapolation of Bermudan curves.
pub fn price_american(
    model: &LevyModel,
    spec: &PayoffSpec,
    market: &MarketParams,
    l_base: u32,
    l_n: f64,
) -> Result<PriceCurve> {
    price_american_with(model, spec, market, l_base, l_n, &PricingOptions::default())
}

pub fn price_american_with(
    model: &LevyModel,
    spec: &PayoffSpec,
    market: &MarketParams,
    l_base: u32,
    l_n: f64,
    opts: &PricingOptions,
) -> Result<PriceCurve> {
    let weights = [-1.0 / 21.0, 14.0 / 21.0, -56.0 / 21.0, 64.0 / 21.0];
    let mut terms = Vec::with_capacity(4);
    for (j, w) in weights.iter().enumerate() {
        let m = 1usize << (l_base as usize + j);
        let sched = ExerciseSchedule::uniform(market.t, market.maturity, m)?;
        let c = price_bermudan_with(model, spec, market, &sched, l_n, opts)?;
        terms.push(c.curve().scale(*w));
    }
    Ok(PriceCurve::new(PiecewiseFun::sum(&terms)?, 1.0, *market, *spec))
}

/// Discretely monitored knock-out price curve for strike `strike`. The
/// barrier is checked at every date after `t_0`; knocked-out paths receive
/// the rebate at maturity.
pub fn price_barrier(
    model: &LevyModel,
    spec: &PayoffSpec,
    market: &MarketParams,
    strike: f64,
    barrier: &BarrierSpec,
    l_n: f64,
) -> Result<PriceCurve> {
    price_barrier_with(model, spec, market, strike, barrier, l_n, &PricingOptions::default())
}

pub fn price_barrier_with(
    model: &LevyModel,
    spec: &PayoffSpec,
    market: &MarketParams,
    strike: f64,
    barrier: &BarrierSpec,
    l_n: f64,
    opts: &PricingOptions,
) -> Result<PriceCurve> {
    check_rates(model, market)?;
    barrier.validate()?;
    barrier.schedule.check(market)?;
    if !(strike > 0.0 && strike.is_finite()) {
        return Err(Error::InvalidParameter("strike must be positive".into()));
    }
    let iv = model.truncation_interval(market.tau(), l_n)?;
    let b = (barrier.level / strike).ln();
    let kp = strike.powi(spec.strike_power());
    let dates = barrier.schedule.dates();
    let mask = |v: &PiecewiseFun, rebate: f64| -> Result<PiecewiseFun> {
        mask_barrier(v, b, barrier.direction, rebate / kp)
    };
    let mut v = mask(&payoff_logspace(spec, iv)?, barrier.rebate)?;
    let mut kinks = vec![0.0, b];
    let mut cache = DensityCache::new(model, l_n, opts.density);
    for l in (0..barrier.schedule.len()).rev() {
        let dt = dates[l + 1] - dates[l];
        let dens = cache.get(dt)?;
        // beyond the curve the value is continued by the masked payoff
        let span = reach(iv, &dens.fun)?;
        let rebate_next = barrier.rebate * (-market.r * (market.maturity - dates[l + 1])).exp();
        let outer = mask(&payoff_logspace(spec, span)?, rebate_next)?;
        let vx = extend(&v, &outer, span)?;
        let h = conv_window(&vx, &dens.fun, iv, &result_breaks(&kinks, &dens.singularities, iv), &opts.fit)?
            .scale((-market.r * dt).exp());
        if l == 0 {
            v = h;
            break;
        }
        let rebate = barrier.rebate * (-market.r * (market.maturity - dates[l])).exp();
        v = mask(&h, rebate)?;
        kinks = vec![b];
    }
    Ok(PriceCurve::new(v, 1.0, *market, *spec))
}

/// Keeps `v` on the alive side of `b` and puts the constant `dead` on the
/// knocked-out side.
fn mask_barrier(v: &PiecewiseFun, b: f64, dir: BarrierDirection, dead: f64) -> Result<PiecewiseFun> {
    let iv = v.support();
    let (alive, killed) = match dir {
        BarrierDirection::DownAndOut => (
            (b.max(iv.lo()), iv.hi()),
            (iv.lo(), b.min(iv.hi())),
        ),
        BarrierDirection::UpAndOut => (
            (iv.lo(), b.min(iv.hi())),
            (b.max(iv.lo()), iv.hi()),
        ),
    };
    let mut pieces: Vec<ChebSeries> = Vec::new();
    let push_alive = |pieces: &mut Vec<ChebSeries>| -> Result<()> {
        if alive.1 > alive.0 {
            pieces.extend(v.restrict(Interval::new(alive.0, alive.1)?)?.pieces().iter().cloned());
        }
        Ok(())
    };
    let dead_piece = if killed.1 > killed.0 {
        Some(ChebSeries::constant(dead, Interval::new(killed.0, killed.1)?))
    } else {
        None
    };
    match dir {
        BarrierDirection::DownAndOut => {
            pieces.extend(dead_piece);
            push_alive(&mut pieces)?;
        }
        BarrierDirection::UpAndOut => {
            push_alive(&mut pieces)?;
            pieces.extend(dead_piece);
        }
    }
    PiecewiseFun::new(pieces)
}
