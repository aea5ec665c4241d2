//! Batch front end: price and Greek curves to CSV or JSON.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use conleg::greeks::{delta, gamma};
use conleg::payoffs::put_call_parity;
use conleg::pricing::{
    price_american_with, price_barrier_with, price_bermudan_with, price_european_with, PricingOptions,
};
use conleg::reference::{bs_price, quad_backward_induction, quad_price_european, BsKind, GridOptions};
use conleg::{
    BarrierDirection, BarrierSpec, Error, ExerciseSchedule, LevyModel, MarketParams, ModelKind, PayoffKind,
    PayoffSpec, PriceCurve,
};

/// Dates of the dense Bermudan problem standing in for the American oracle.
const AMERICAN_ORACLE_DATES: usize = 512;
const PLOT_POINTS: usize = 201;

#[derive(Parser)]
#[command(name = "conleg", version, about = "Option price and Greek curves under Levy models")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Price curve sampled over a strike or spot range.
    Price(Common),
    /// Price, Delta and Gamma (European style only).
    Greeks(Common),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Style {
    European,
    Bermudan,
    American,
    Barrier,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Direction {
    Do,
    Uo,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// JSON model descriptor, e.g. {"model": "vg", "sigma": 0.12, "theta": -0.14, "nu": 0.2, "r": 0.1, "q": 0}
    #[arg(long)]
    model_file: PathBuf,
    #[arg(long, default_value = "put")]
    payoff: String,
    /// Power of the asymmetric payoffs.
    #[arg(long, default_value_t = 1)]
    n: u32,
    #[arg(long, value_enum, default_value = "european")]
    style: Style,
    /// Spot used with a strike range.
    #[arg(long = "S")]
    spot: Option<f64>,
    /// Strike used with a spot range.
    #[arg(long = "K")]
    strike: Option<f64>,
    /// Strikes as lo:hi:n.
    #[arg(long, conflicts_with = "spot_range")]
    strike_range: Option<String>,
    /// Spots as lo:hi:n.
    #[arg(long)]
    spot_range: Option<String>,
    /// Maturity.
    #[arg(long = "T")]
    maturity: f64,
    /// Valuation date.
    #[arg(long = "t", default_value_t = 0.0)]
    t: f64,
    /// Exercise or monitoring dates; the base level for American options.
    #[arg(long)]
    dates: Option<usize>,
    #[arg(long)]
    barrier: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    rebate: f64,
    #[arg(long, value_enum)]
    direction: Option<Direction>,
    /// Truncation width in standard deviations.
    #[arg(long = "Ln", default_value_t = 10.0)]
    l_n: f64,
    #[arg(long, value_enum, default_value = "csv")]
    output: Output,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Add oracle prices and absolute errors.
    #[arg(long)]
    oracle: bool,
    /// Emit sampled (x, y) pairs of every curve instead of the table.
    #[arg(long)]
    plot_data: bool,
}

enum Fail {
    Param(String),
    Numeric(String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        if e.is_parameter_error() {
            Fail::Param(e.to_string())
        } else {
            Fail::Numeric(e.to_string())
        }
    }
}

fn param<T>(msg: impl Into<String>) -> Result<T, Fail> {
    Err(Fail::Param(msg.into()))
}

fn parse_range(s: &str) -> Result<Vec<f64>, Fail> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Fail::Param(format!("range `{s}` must be lo:hi:n"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if n == 0 || !(lo > 0.0 && hi >= lo) || (n == 1 && hi != lo) {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

/// Shortest decimal that round-trips the value rounded to 12 significant digits.
fn fmt12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let r: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    if r != 0.0 && (r.abs() < 1e-4 || r.abs() >= 1e15) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

fn options() -> Result<PricingOptions, Fail> {
    let mut opts = PricingOptions::default();
    if let Ok(v) = std::env::var("CONLEG_TOL") {
        let tol: f64 = v
            .parse()
            .ok()
            .filter(|t: &f64| *t > 0.0 && *t < 1.0)
            .ok_or_else(|| Fail::Param(format!("CONLEG_TOL `{v}` is not a tolerance in (0, 1)")))?;
        opts.fit.tol = tol;
    }
    Ok(opts)
}

/// Rows of (strike, spot) to report.
struct Grid {
    rows: Vec<(f64, f64)>,
}

fn rows(c: &Common) -> Result<Grid, Fail> {
    match (&c.strike_range, &c.spot_range) {
        (Some(r), None) => {
            let s = c.spot.ok_or_else(|| Fail::Param("--strike-range needs --S".into()))?;
            Ok(Grid {
                rows: parse_range(r)?.into_iter().map(|k| (k, s)).collect(),
            })
        }
        (None, Some(r)) => {
            let k = c.strike.ok_or_else(|| Fail::Param("--spot-range needs --K".into()))?;
            Ok(Grid {
                rows: parse_range(r)?.into_iter().map(|s| (k, s)).collect(),
            })
        }
        (None, None) => match (c.spot, c.strike) {
            (Some(s), Some(k)) => Ok(Grid {
                rows: vec![(k, s)],
            }),
            _ => param("give --strike-range, --spot-range, or both --S and --K"),
        },
        (Some(_), Some(_)) => param("--strike-range and --spot-range are exclusive"),
    }
}

struct Problem {
    model: LevyModel,
    spec: PayoffSpec,
    market: MarketParams,
    opts: PricingOptions,
}

fn load_model(path: &PathBuf) -> Result<LevyModel, Fail> {
    let text = fs::read_to_string(path).map_err(|e| Fail::Param(format!("{}: {e}", path.display())))?;
    let raw: LevyModel =
        serde_json::from_str(&text).map_err(|e| Fail::Param(format!("{}: {e}", path.display())))?;
    Ok(LevyModel::new(raw.kind, raw.r, raw.q)?)
}

fn barrier_spec(c: &Common, market: &MarketParams) -> Result<BarrierSpec, Fail> {
    let level = c.barrier.ok_or_else(|| Fail::Param("barrier style needs --barrier".into()))?;
    let direction = match c.direction {
        Some(Direction::Do) => BarrierDirection::DownAndOut,
        Some(Direction::Uo) => BarrierDirection::UpAndOut,
        None => return param("barrier style needs --direction"),
    };
    let l = c.dates.ok_or_else(|| Fail::Param("barrier style needs --dates".into()))?;
    let b = BarrierSpec {
        level,
        rebate: c.rebate,
        direction,
        schedule: ExerciseSchedule::uniform(market.t, market.maturity, l)?,
    };
    b.validate()?;
    Ok(b)
}

/// One price curve per distinct strike for barriers, a single curve otherwise.
fn build_curve(c: &Common, p: &Problem, strike: f64) -> Result<PriceCurve, Fail> {
    let Problem { model, spec, market, opts } = p;
    Ok(match c.style {
        Style::European if spec.kind == PayoffKind::Call => {
            // via the put keeps long maturities well conditioned
            let put = price_european_with(model, &PayoffSpec::put(), market, c.l_n, opts)?;
            put_call_parity(&put, market)?
        }
        Style::European => price_european_with(model, spec, market, c.l_n, opts)?,
        Style::Bermudan => {
            let l = c.dates.ok_or_else(|| Fail::Param("bermudan style needs --dates".into()))?;
            let s = ExerciseSchedule::uniform(market.t, market.maturity, l)?;
            price_bermudan_with(model, spec, market, &s, c.l_n, opts)?
        }
        Style::American => {
            let l = c.dates.unwrap_or(2);
            let l = u32::try_from(l).map_err(|_| Fail::Param("--dates too large".into()))?;
            price_american_with(model, spec, market, l, c.l_n, opts)?
        }
        Style::Barrier => {
            let b = barrier_spec(c, market)?;
            price_barrier_with(model, spec, market, strike, &b, c.l_n, opts)?
        }
    })
}

fn oracle_prices(c: &Common, p: &Problem, rows: &[(f64, f64)]) -> Result<Vec<f64>, Fail> {
    let Problem { model, spec, market, .. } = p;
    if c.style == Style::European {
        return rows
            .iter()
            .map(|&(k, s)| {
                let m = market.with_spot(s);
                match (model.kind, spec.kind) {
                    (ModelKind::Gbm { sigma }, PayoffKind::Put) => {
                        Ok(bs_price(s, k, market.r, market.q, sigma, m.tau(), BsKind::Put))
                    }
                    (ModelKind::Gbm { sigma }, PayoffKind::Call) => {
                        Ok(bs_price(s, k, market.r, market.q, sigma, m.tau(), BsKind::Call))
                    }
                    _ => Ok(quad_price_european(model, spec, &m, k, c.l_n.max(12.0))?),
                }
            })
            .collect();
    }
    let (schedule, early, barrier) = match c.style {
        Style::Bermudan => (
            ExerciseSchedule::uniform(market.t, market.maturity, c.dates.unwrap_or(1))?,
            true,
            None,
        ),
        Style::American => (
            ExerciseSchedule::uniform(market.t, market.maturity, AMERICAN_ORACLE_DATES)?,
            true,
            None,
        ),
        Style::Barrier => {
            let b = barrier_spec(c, market)?;
            (b.schedule.clone(), false, Some(b))
        }
        Style::European => unreachable!(),
    };
    let mut out = Vec::with_capacity(rows.len());
    let mut cache: Option<(f64, conleg::reference::GridSolution)> = None;
    for &(k, s) in rows {
        if cache.as_ref().is_none_or(|(ck, _)| *ck != k) {
            let g = quad_backward_induction(
                model,
                spec,
                market,
                k,
                &schedule,
                early,
                barrier.as_ref(),
                &GridOptions::default(),
            )?;
            cache = Some((k, g));
        }
        out.push(cache.as_ref().unwrap().1.price(s));
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<String, Fail> {
    let (c, greeks) = match &cli.cmd {
        Cmd::Price(c) => (c, false),
        Cmd::Greeks(c) => (c, true),
    };
    if greeks && c.style != Style::European {
        return param("greeks are available for European style only");
    }
    let kind: PayoffKind = c.payoff.parse()?;
    let spec = PayoffSpec::new(kind);
    let spec = if matches!(kind, PayoffKind::AsymmetricCall | PayoffKind::AsymmetricPut) {
        PayoffSpec::asymmetric(kind, c.n)?
    } else {
        spec
    };
    spec.validate()?;
    let model = load_model(&c.model_file)?;
    let grid = rows(c)?;
    let spot0 = grid.rows[0].1;
    let market = MarketParams::new(spot0, model.r, model.q, c.t, c.maturity)?;
    let problem = Problem {
        model,
        spec,
        market,
        opts: options()?,
    };

    let mut curves: Vec<(f64, PriceCurve)> = Vec::new();
    for &(k, _) in &grid.rows {
        let reuse = curves.last().is_some_and(|(ck, _)| c.style != Style::Barrier || *ck == k);
        if !reuse {
            curves.push((k, build_curve(c, &problem, k)?));
        }
    }
    let curve_for = |k: f64| -> &PriceCurve {
        if c.style == Style::Barrier {
            &curves.iter().find(|(ck, _)| *ck == k).expect("built above").1
        } else {
            &curves[0].1
        }
    };

    if c.plot_data {
        return Ok(plot_data(c, &curves, greeks));
    }

    let mut cols: Vec<(&str, Vec<f64>)> = vec![
        ("strike", grid.rows.iter().map(|r| r.0).collect()),
        ("spot", grid.rows.iter().map(|r| r.1).collect()),
    ];
    let prices: Vec<f64> = grid.rows.iter().map(|&(k, s)| curve_for(k).price(s, k)).collect();
    cols.push(("price", prices.clone()));
    if greeks {
        let pc = &curves[0].1;
        let (d, g) = (delta(pc), gamma(pc));
        cols.push(("delta", grid.rows.iter().map(|&(k, s)| d.value(s, k)).collect()));
        cols.push(("gamma", grid.rows.iter().map(|&(k, s)| g.value(s, k)).collect()));
    }
    for (i, v) in cols.iter().flat_map(|c| c.1.iter().enumerate()) {
        if !v.is_finite() {
            return Err(Fail::Numeric(format!("non-finite output in row {i}")));
        }
    }
    if c.oracle {
        let o = oracle_prices(c, &problem, &grid.rows)?;
        let err = o.iter().zip(&prices).map(|(a, b)| (a - b).abs()).collect();
        cols.push(("oracle", o));
        cols.push(("abs_err", err));
    }
    Ok(match c.output {
        Output::Csv => {
            let mut s = cols.iter().map(|c| c.0).collect::<Vec<_>>().join(",");
            s.push('\n');
            for i in 0..grid.rows.len() {
                let line: Vec<String> = cols.iter().map(|c| fmt12(c.1[i])).collect();
                s.push_str(&line.join(","));
                s.push('\n');
            }
            s
        }
        Output::Json => {
            let mut m = Map::new();
            for (name, v) in &cols {
                let arr = v.iter().map(|x| json_num(*x)).collect();
                m.insert((*name).to_string(), Value::Array(arr));
            }
            let mut s = serde_json::to_string_pretty(&Value::Object(m)).expect("serialisable");
            s.push('\n');
            s
        }
    })
}

fn json_num(x: f64) -> Value {
    let r: f64 = fmt12(x).parse().expect("formatted float parses");
    json!(r)
}

/// Curves sampled on their own support in `x̃ = log(S/K)`, normalised by the
/// strike factor.
fn plot_data(c: &Common, curves: &[(f64, PriceCurve)], greeks: bool) -> String {
    let mut series: Vec<(String, Vec<f64>, Vec<f64>)> = Vec::new();
    for (k, pc) in curves {
        let iv = pc.support();
        let xs: Vec<f64> = (0..PLOT_POINTS)
            .map(|i| iv.lo() + iv.width() * i as f64 / (PLOT_POINTS - 1) as f64)
            .collect();
        let tag = if curves.len() > 1 { format!("price_k{}", fmt12(*k)) } else { "price".into() };
        series.push((tag, xs.clone(), xs.iter().map(|&x| pc.normalised(x)).collect()));
        if greeks {
            let (d, g) = (delta(pc), gamma(pc));
            let at = |x: f64| (*k * x.exp(), *k);
            series.push(("delta".into(), xs.clone(), xs.iter().map(|&x| d.value(at(x).0, at(x).1)).collect()));
            series.push(("gamma".into(), xs.clone(), xs.iter().map(|&x| g.value(at(x).0, at(x).1)).collect()));
        }
    }
    match c.output {
        Output::Csv => {
            let mut s = String::from("curve,x,y\n");
            for (name, xs, ys) in &series {
                for (x, y) in xs.iter().zip(ys) {
                    s.push_str(&format!("{name},{},{}\n", fmt12(*x), fmt12(*y)));
                }
            }
            s
        }
        Output::Json => {
            let mut m = Map::new();
            for (name, xs, ys) in &series {
                m.insert(
                    name.clone(),
                    json!({ "x": xs.iter().map(|v| json_num(*v)).collect::<Vec<_>>(),
                            "y": ys.iter().map(|v| json_num(*v)).collect::<Vec<_>>() }),
                );
            }
            let mut s = serde_json::to_string_pretty(&Value::Object(m)).expect("serialisable");
            s.push('\n');
            s
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out_path = match &cli.cmd {
        Cmd::Price(c) | Cmd::Greeks(c) => c.out.clone(),
    };
    match run(cli) {
        Ok(text) => {
            let written = match out_path {
                Some(p) => fs::write(&p, text).map_err(|e| format!("{}: {e}", p.display())),
                None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(3)
                }
            }
        }
        Err(Fail::Param(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Fail::Numeric(m)) => {
            eprintln!("error: numerical failure: {m}");
            ExitCode::from(3)
        }
    }
}
