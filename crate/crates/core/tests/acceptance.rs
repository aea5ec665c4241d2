//! End-to-end accuracy and runtime checks. Each test writes one PASS/FAIL
//! line to stdout (bypassing the harness capture) and then asserts.

use std::io::Write;
use std::time::{Duration, Instant};

use conleg::chebcore::{adaptive_fit, ChebSeries, Interval, PiecewiseFun, DEFAULT_TOL};
use conleg::density::{build_reflected_density, locate_singularities};
use conleg::greeks::{delta, gamma};
use conleg::legconv::{cheb2leg, conv_general, conv_same_interval, leg2cheb, ConvMode, LegSeries};
use conleg::payoffs::put_call_parity;
use conleg::pricing::{price_american, price_barrier, price_bermudan, price_european};
use conleg::reference::{
    bs_greeks, bs_price, gauss_kronrod, quad_backward_induction, quad_price_european, BsKind, GridOptions,
};
use conleg::{BarrierDirection, BarrierSpec, ExerciseSchedule, LevyModel, MarketParams, PayoffSpec};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};

fn report(name: &str, ok: bool, detail: String) {
    let mut out = std::io::stdout().lock();
    let tag = if ok { "PASS" } else { "FAIL" };
    writeln!(out, "[{tag}] {name}: {detail}").unwrap();
    out.flush().unwrap();
    assert!(ok, "{name}: {detail}");
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn max_err(a: impl IntoIterator<Item = f64>, b: impl IntoIterator<Item = f64>) -> f64 {
    a.into_iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

#[test]
fn gbm1_put_curve_and_greeks() {
    let (sig, r, q) = (0.15, 0.03, 0.01);
    let start = Instant::now();
    let m = LevyModel::gbm(sig, r, q).unwrap();
    let mk = MarketParams::new(100.0, r, q, 0.0, 1.0).unwrap();
    let pc = price_european(&m, &PayoffSpec::put(), &mk, 10.0).unwrap();
    let (d, g) = (delta(&pc), gamma(&pc));
    let ks = linspace(80.0, 120.0, 1000);
    let prices = pc.prices_at_strikes(&ks);
    let deltas = d.at_strikes(&ks);
    let gammas = g.at_strikes(&ks);
    let took = start.elapsed();
    let exact: Vec<_> = ks.iter().map(|&k| bs_greeks(100.0, k, r, q, sig, 1.0, BsKind::Put)).collect();
    let ep = max_err(prices, ks.iter().map(|&k| bs_price(100.0, k, r, q, sig, 1.0, BsKind::Put)));
    let ed = max_err(deltas, exact.iter().map(|e| e.delta));
    let eg = max_err(gammas, exact.iter().map(|e| e.gamma));
    let ok = ep <= 1e-10 && ed <= 1e-8 && eg <= 1e-7 && took.as_secs_f64() <= 5.0;
    report(
        "GBM1 European put curve, 1000 strikes",
        ok,
        format!("price {ep:.2e}, delta {ed:.2e}, gamma {eg:.2e}, {}", secs(took)),
    );
}

#[test]
fn gbm2_long_maturity_calls() {
    let (sig, r, q) = (0.25, 0.1, 0.0);
    let m = LevyModel::gbm(sig, r, q).unwrap();
    let ks = linspace(80.0, 120.0, 1000);
    let mut ok = true;
    let mut detail = Vec::new();
    for t in [50.0, 100.0] {
        let start = Instant::now();
        let mk = MarketParams::new(100.0, r, q, 0.0, t).unwrap();
        let put = price_european(&m, &PayoffSpec::put(), &mk, 10.0).unwrap();
        let call = put_call_parity(&put, &mk).unwrap();
        let (d, g) = (delta(&call), gamma(&call));
        let prices = call.prices_at_strikes(&ks);
        let deltas = d.at_strikes(&ks);
        let gammas = g.at_strikes(&ks);
        let took = start.elapsed();
        let exact: Vec<_> = ks.iter().map(|&k| bs_greeks(100.0, k, r, q, sig, t, BsKind::Call)).collect();
        let ep = max_err(prices, ks.iter().map(|&k| bs_price(100.0, k, r, q, sig, t, BsKind::Call)));
        let ed = max_err(deltas, exact.iter().map(|e| e.delta));
        let eg = max_err(gammas, exact.iter().map(|e| e.gamma));
        ok &= ep <= 1e-10 && ed <= 1e-12 && eg <= 1e-12 && took.as_secs_f64() <= 5.0;
        detail.push(format!("T={t}: price {ep:.2e}, delta {ed:.2e}, gamma {eg:.2e}, {}", secs(took)));
    }
    report("GBM2 long-maturity calls via parity", ok, detail.join("; "));
}

fn vg1() -> (LevyModel, MarketParams) {
    (
        LevyModel::vg(0.12, -0.14, 0.2, 0.1, 0.0).unwrap(),
        MarketParams::new(100.0, 0.1, 0.0, 0.0, 0.1).unwrap(),
    )
}

#[test]
fn vg1_short_maturity_calls() {
    let (m, mk) = vg1();
    let ks = linspace(80.0, 90.0, 30);
    let start = Instant::now();
    let put = price_european(&m, &PayoffSpec::put(), &mk, 10.0).unwrap();
    let call = put_call_parity(&put, &mk).unwrap();
    let prices = call.prices_at_strikes(&ks);
    let took = start.elapsed();
    let oracle = ks.iter().map(|&k| quad_price_european(&m, &PayoffSpec::call(), &mk, k, 12.0).unwrap());
    let e = max_err(prices, oracle);
    report(
        "VG1 short-maturity calls, 30 strikes",
        e <= 5e-6 && took.as_secs_f64() <= 10.0,
        format!("max error {e:.2e} vs quadrature, {}", secs(took)),
    );
}

#[test]
fn vg1_singularity_location() {
    let (m, mk) = vg1();
    let t = mk.tau();
    let start = Instant::now();
    let iv = m.truncation_interval(t, 10.0).unwrap();
    let s = locate_singularities(&m, iv, t, 1024).unwrap();
    let took = start.elapsed();
    let target = m.drift(t);
    let interior: Vec<_> = s.iter().copied().filter(|x| iv.contains(*x)).collect();
    let ok = interior.len() == 1 && (interior[0] - target).abs() <= 2e-3 && took.as_secs_f64() <= 2.0;
    report(
        "VG1 singularity location",
        ok,
        format!("found {interior:?}, expected {target:.6}, {}", secs(took)),
    );
}

#[test]
fn nig1_bermudan_put() {
    let m = LevyModel::nig(15.0, -5.0, 0.5, 0.05, 0.02).unwrap();
    let mk = MarketParams::new(100.0, 0.05, 0.02, 0.0, 1.0).unwrap();
    let sched = ExerciseSchedule::uniform(0.0, 1.0, 10).unwrap();
    let ks = linspace(80.0, 120.0, 170);
    let start = Instant::now();
    let pc = price_bermudan(&m, &PayoffSpec::put(), &mk, &sched, 10.0).unwrap();
    let prices = pc.prices_at_strikes(&ks);
    let took = start.elapsed();
    let grid = quad_backward_induction(&m, &PayoffSpec::put(), &mk, 100.0, &sched, true, None, &GridOptions::default())
        .unwrap();
    // the put is homogeneous in (S, K): one grid serves every strike
    let oracle = ks.iter().map(|&k| k * grid.value_at((100.0 / k).ln()));
    let e = max_err(prices, oracle);
    report(
        "NIG1 Bermudan put, 10 dates, 170 strikes",
        e <= 1e-6 && took.as_secs_f64() <= 60.0,
        format!("max error {e:.2e} vs grid induction, {}", secs(took)),
    );
}

#[test]
fn cgmy1_american_put() {
    let m = LevyModel::cgmy(1.0, 5.0, 5.0, 0.5, 0.1, 0.0).unwrap();
    let mk = MarketParams::new(1.0, 0.1, 0.0, 0.0, 1.0).unwrap();
    let spots = linspace(0.5, 1.5, 20);
    let start = Instant::now();
    let am = price_american(&m, &PayoffSpec::put(), &mk, 2, 10.0).unwrap();
    let eu = price_european(&m, &PayoffSpec::put(), &mk, 10.0).unwrap();
    let took = start.elapsed();
    let dense = ExerciseSchedule::uniform(0.0, 1.0, 512).unwrap();
    let grid = quad_backward_induction(&m, &PayoffSpec::put(), &mk, 1.0, &dense, true, None, &GridOptions::default())
        .unwrap();
    let mut e = 0.0_f64;
    let mut ordered = true;
    for &s in &spots {
        let (va, ve) = (am.price_at_spot(s, 1.0), eu.price_at_spot(s, 1.0));
        e = e.max((va - grid.price(s)).abs());
        let fwd = ((-0.1_f64).exp() - s).max(0.0);
        ordered &= va >= ve - 1e-12 && ve >= fwd - 1e-12;
    }
    report(
        "CGMY1 American put, Richardson from 4 dates, 20 spots",
        e <= 1e-3 && ordered && took.as_secs_f64() <= 600.0,
        format!("max error {e:.2e} vs 512-date grid, ordering {ordered}, {}", secs(took)),
    );
}

#[test]
fn cgmy2_up_and_out_barriers() {
    let m = LevyModel::cgmy(4.0, 50.0, 60.0, 0.7, 0.05, 0.02).unwrap();
    let mk = MarketParams::new(100.0, 0.05, 0.02, 0.0, 1.0).unwrap();
    let b = BarrierSpec {
        level: 120.0,
        rebate: 0.0,
        direction: BarrierDirection::UpAndOut,
        schedule: ExerciseSchedule::uniform(0.0, 1.0, 12).unwrap(),
    };
    let spots = linspace(90.0, 110.0, 100);
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, spec) in [("call", PayoffSpec::call()), ("put", PayoffSpec::put())] {
        let start = Instant::now();
        let pc = price_barrier(&m, &spec, &mk, 100.0, &b, 10.0).unwrap();
        let prices: Vec<_> = spots.iter().map(|&s| pc.price_at_spot(s, 100.0)).collect();
        let took = start.elapsed();
        let grid = quad_backward_induction(&m, &spec, &mk, 100.0, &b.schedule, false, Some(&b), &GridOptions::default())
            .unwrap();
        let e = max_err(prices, spots.iter().map(|&s| grid.price(s)));
        ok &= e <= 1e-6 && took.as_secs_f64() <= 120.0;
        detail.push(format!("{name} {e:.2e} ({})", secs(took)));
    }
    report("CGMY2 up-and-out barriers, 12 dates, 100 spots", ok, detail.join(", "));
}

fn unit() -> Interval {
    Interval::new(-1.0, 1.0).unwrap()
}

/// Largest deviation of a piecewise convolution from adaptive quadrature.
fn conv_vs_quad(f: &ChebSeries, g: &ChebSeries) -> f64 {
    let h = conv_general(&PiecewiseFun::from_series(f.clone()), &PiecewiseFun::from_series(g.clone()), ConvMode::Full)
        .unwrap();
    let s = h.support();
    let (fi, gi) = (f.interval(), g.interval());
    (0..=40)
        .map(|i| {
            let x = s.lo() + s.width() * i as f64 / 40.0;
            let lo = fi.lo().max(x - gi.hi());
            let hi = fi.hi().min(x - gi.lo());
            let e = if hi > lo { gauss_kronrod(|y| f.eval(y) * g.eval(x - y), lo, hi, 1e-15).unwrap() } else { 0.0 };
            (h.eval(x) - e).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn property_suites() {
    let mut fails = Vec::new();
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);

    // convolution: tent, quadrature oracle, bilinearity, mass
    let one = LegSeries::new(vec![1.0], unit());
    let tent = conv_same_interval(&one, &one).unwrap();
    let e_tent = linspace(-2.0, 2.0, 41).into_iter().map(|x| (tent.eval(x) - (2.0 - x.abs())).abs()).fold(0.0, f64::max);
    if e_tent > 1e-14 {
        fails.push(format!("tent {e_tent:.1e}"));
    }
    let f = adaptive_fit(|x| (3.0 * x).sin() + x, Interval::new(-0.5, 1.5).unwrap(), DEFAULT_TOL).unwrap();
    let g = adaptive_fit(|x| (-4.0 * x * x).exp(), Interval::new(-1.0, 0.3).unwrap(), DEFAULT_TOL).unwrap();
    let k = adaptive_fit(|x| x.cos(), Interval::new(-0.5, 1.5).unwrap(), DEFAULT_TOL).unwrap();
    let e_quad = conv_vs_quad(&f, &g).max(conv_vs_quad(&g, &f));
    if e_quad > 1e-12 {
        fails.push(format!("quadrature oracle {e_quad:.1e}"));
    }
    let pw = |s: &ChebSeries| PiecewiseFun::from_series(s.clone());
    let (a, b) = (1.7, -0.6);
    let lhs = conv_general(&pw(&f.scale(a).add(&k.scale(b))), &pw(&g), ConvMode::Full).unwrap();
    let rf = conv_general(&pw(&f), &pw(&g), ConvMode::Full).unwrap();
    let rk = conv_general(&pw(&k), &pw(&g), ConvMode::Full).unwrap();
    let s = lhs.support();
    let e_bil = linspace(s.lo(), s.hi(), 60)
        .into_iter()
        .map(|x| (lhs.eval(x) - a * rf.eval(x) - b * rk.eval(x)).abs())
        .fold(0.0, f64::max);
    if e_bil > 1e-13 {
        fails.push(format!("bilinearity {e_bil:.1e}"));
    }
    let e_mass = (rf.integral() - f.integral() * g.integral()).abs();
    if e_mass > 1e-13 {
        fails.push(format!("mass {e_mass:.1e}"));
    }

    // basis round trips
    for n in [8usize, 64, 256, 512] {
        let c: Vec<f64> = (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s = ChebSeries::new(c.clone(), unit());
        let back = leg2cheb(&cheb2leg(&s));
        let e = max_err(back.coeffs().iter().copied(), c.iter().copied());
        if e > 1e-13 {
            fails.push(format!("cheb2leg round trip n={n} {e:.1e}"));
        }
    }

    // parity residual
    let m = LevyModel::gbm(0.15, 0.03, 0.01).unwrap();
    let mk = MarketParams::new(100.0, 0.03, 0.01, 0.0, 1.0).unwrap();
    let put = price_european(&m, &PayoffSpec::put(), &mk, 10.0).unwrap();
    let call = price_european(&m, &PayoffSpec::call(), &mk, 10.0).unwrap();
    let e_par = linspace(80.0, 120.0, 101)
        .into_iter()
        .map(|k| {
            let fwd = 100.0 * (-0.01_f64).exp() - k * (-0.03_f64).exp();
            (call.price_at_strike(k) - put.price_at_strike(k) - fwd).abs()
        })
        .fold(0.0, f64::max);
    if e_par > 1e-12 {
        fails.push(format!("parity {e_par:.1e}"));
    }

    // Greeks against finite differences of the price curve
    let nig = LevyModel::nig(15.0, -5.0, 0.5, 0.05, 0.02).unwrap();
    let mk_n = MarketParams::new(100.0, 0.05, 0.02, 0.0, 1.0).unwrap();
    for (model, market) in [(&m, &mk), (&nig, &mk_n)] {
        let pc = price_european(model, &PayoffSpec::put(), market, 10.0).unwrap();
        let (d, g) = (delta(&pc), gamma(&pc));
        let h = 1e-2;
        let (mut ed, mut eg) = (0.0_f64, 0.0_f64);
        for k in linspace(80.0, 120.0, 50) {
            let p = |s: f64| pc.price_at_spot(s, k);
            ed = ed.max((d.at_spot(100.0, k) - (p(100.0 + h) - p(100.0 - h)) / (2.0 * h)).abs());
            eg = eg.max((g.at_spot(100.0, k) - (p(100.0 + h) - 2.0 * p(100.0) + p(100.0 - h)) / (h * h)).abs());
        }
        if ed > 1e-6 || eg > 1e-5 {
            fails.push(format!("{} greeks vs differences {ed:.1e} {eg:.1e}", model.name()));
        }
    }

    // martingale identity
    let cgmy1 = LevyModel::cgmy(1.0, 5.0, 5.0, 0.5, 0.1, 0.0).unwrap();
    let (vg, _) = vg1();
    for model in [&m, &nig, &vg, &cgmy1] {
        for t in [0.1, 1.0, 5.0] {
            let v = model.char_fn(Complex64::new(0.0, -1.0), t);
            let e = ((model.r - model.q) * t).exp();
            let rel = (v - e).norm() / e;
            if rel > 1e-12 {
                fails.push(format!("{} martingale t={t} {rel:.1e}", model.name()));
            }
        }
    }

    // density normalisation over the six parameter sets
    let gbm2 = LevyModel::gbm(0.25, 0.1, 0.0).unwrap();
    let cgmy2 = LevyModel::cgmy(4.0, 50.0, 60.0, 0.7, 0.05, 0.02).unwrap();
    let sets: [(&str, &LevyModel, f64); 7] = [
        ("GBM1", &m, 1.0),
        ("GBM2 T=50", &gbm2, 50.0),
        ("GBM2 T=100", &gbm2, 100.0),
        ("VG1", &vg, 0.1),
        ("NIG1", &nig, 1.0),
        ("CGMY1", &cgmy1, 1.0),
        ("CGMY2", &cgmy2, 1.0),
    ];
    let mut worst_mass = 0.0_f64;
    for (name, model, t) in sets {
        let iv = model.truncation_interval(t, 10.0).unwrap();
        let d = build_reflected_density(model, iv, t, 1024).unwrap();
        let e = (d.fun.integral() - 1.0).abs();
        worst_mass = worst_mass.max(e);
        if e > 1e-6 {
            fails.push(format!("{name} density mass {e:.1e}"));
        }
    }

    let ok = fails.is_empty();
    let detail = if ok {
        format!("all invariants hold (worst density mass error {worst_mass:.1e})")
    } else {
        fails.join("; ")
    };
    report("Property suites", ok, detail);
}
