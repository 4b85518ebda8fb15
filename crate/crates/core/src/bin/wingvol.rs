use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wingvol::arbitrage::{validate_surface, Status};
use wingvol::asymptotics::{iv_wing_call, iv_wing_call_refined};
use wingvol::bs::{bs_price, implied_vol_kind, implied_vol_log};
use wingvol::curve::BsCurve;
use wingvol::harness::experiments::BS_FIXTURE;
use wingvol::harness::report::fmt_num;
use wingvol::harness::{read_surface, run_to_file, ExperimentConfig, Scenario};
use wingvol::models::{log_call_wing_price, log_quadrature_call, HestonTail, HullWhiteTail, SteinSteinTail, TailModel};
use wingvol::symmetry::symmetry_check;
use wingvol::tail_index::{estimate_right_index, log_grid, DistributionSpec, SpecCurve};
use wingvol::{Error, MarketFrame, OptionKind, PriceCurve, Result, Vol};

/// Wing asymptotics of implied volatility: pricing, inversion, tail indices,
/// surface validation and convergence experiments.
#[derive(Parser)]
#[command(name = "wingvol", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Black-Scholes price.
    Price {
        #[command(flatten)]
        frame: FrameArgs,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        strike: f64,
        #[arg(long)]
        put: bool,
    },
    /// Implied volatility of a price.
    Iv {
        #[command(flatten)]
        frame: FrameArgs,
        #[arg(long)]
        strike: f64,
        #[arg(long)]
        price: f64,
        #[arg(long)]
        put: bool,
    },
    /// Wing implied volatility against the exact inversion, as CSV.
    Wing {
        #[command(flatten)]
        frame: FrameArgs,
        #[command(flatten)]
        curve: CurveArgs,
        #[command(flatten)]
        ladder: LadderArgs,
    },
    /// Right-tail index estimates of a curve.
    TailIndex {
        #[command(flatten)]
        frame: FrameArgs,
        #[command(flatten)]
        curve: CurveArgs,
        #[command(flatten)]
        ladder: LadderArgs,
    },
    /// Implied-volatility symmetry between a curve and its dual.
    Symmetry {
        #[command(flatten)]
        frame: FrameArgs,
        #[command(flatten)]
        curve: CurveArgs,
        #[command(flatten)]
        ladder: LadderArgs,
    },
    /// Closed-form wing price of a model tail against quadrature, in logs.
    ModelWing {
        #[command(flatten)]
        frame: FrameArgs,
        #[arg(long, value_enum, default_value_t = ModelKind::SteinStein)]
        model: ModelKind,
        #[command(flatten)]
        ladder: LadderArgs,
    },
    /// Static-arbitrage validation of a surface CSV (bundled fixture by default).
    Validate {
        #[arg(long)]
        surface: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        x0: f64,
        #[arg(long, default_value_t = 0.02)]
        r: f64,
    },
    /// Run a convergence experiment. Precedence: scenario defaults, then the
    /// config file, then --scenario, --set, --output and --seed.
    Experiment {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<String>,
        /// `key=value`, repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args, Clone, Copy)]
struct FrameArgs {
    #[arg(long, default_value_t = 1.0)]
    x0: f64,
    #[arg(long, default_value_t = 0.0)]
    r: f64,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
}

impl FrameArgs {
    fn frame(&self) -> Result<MarketFrame> {
        MarketFrame::new(self.x0, self.r, self.t)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CurveKind {
    Bs,
    Pareto,
}

#[derive(Args, Clone, Copy)]
struct CurveArgs {
    #[arg(long, value_enum, default_value_t = CurveKind::Bs)]
    curve: CurveKind,
    #[arg(long, default_value_t = 0.2)]
    sigma: f64,
    /// Pareto density index; the frame's x0 is replaced by the Pareto mean.
    #[arg(long, default_value_t = 5.0)]
    beta: f64,
}

#[derive(Args, Clone, Copy)]
struct LadderArgs {
    /// First log-strike.
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    from: f64,
    /// Last log-strike.
    #[arg(long, default_value_t = 80.0, allow_hyphen_values = true)]
    to: f64,
    #[arg(long, default_value_t = 8)]
    count: usize,
}

impl LadderArgs {
    fn strikes(&self) -> Result<Vec<f64>> {
        if self.count < 2 || self.from.partial_cmp(&self.to) != Some(std::cmp::Ordering::Less) {
            return Err(Error::Config("ladder needs --from < --to and --count >= 2".into()));
        }
        Ok(log_grid(self.from, self.to, self.count))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    SteinStein,
    Heston,
    HullWhite,
}

struct Curves {
    frame: MarketFrame,
    call: Box<dyn PriceCurve>,
    put: Box<dyn PriceCurve>,
    spec: Option<DistributionSpec>,
}

fn curves(frame: &FrameArgs, c: &CurveArgs) -> Result<Curves> {
    match c.curve {
        CurveKind::Bs => {
            let f = frame.frame()?;
            let v = Vol::new(c.sigma)?;
            Ok(Curves {
                frame: f,
                call: Box::new(BsCurve::call(f, v)),
                put: Box::new(BsCurve::put(f, v)),
                spec: None,
            })
        }
        CurveKind::Pareto => {
            let spec = DistributionSpec::pareto(c.beta)?;
            let f = MarketFrame::new(DistributionSpec::pareto_mean(c.beta), frame.r, frame.t)?;
            Ok(Curves {
                frame: f,
                call: Box::new(SpecCurve::call(f, spec.clone())),
                put: Box::new(SpecCurve::put(f, spec.clone())),
                spec: Some(spec),
            })
        }
    }
}

fn kind(put: bool) -> OptionKind {
    if put {
        OptionKind::Put
    } else {
        OptionKind::Call
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Price { frame, sigma, strike, put } => {
            println!("{}", bs_price(&frame.frame()?, kind(put), strike, Vol::new(sigma)?)?);
            Ok(true)
        }
        Command::Iv { frame, strike, price, put } => {
            println!("{}", implied_vol_kind(&frame.frame()?, kind(put), strike, price)?.sigma());
            Ok(true)
        }
        Command::Wing { frame, curve, ladder } => {
            let cv = curves(&frame, &curve)?;
            println!("logK,exact_iv,wing_iv,refined_iv,error_order");
            for k in ladder.strikes()? {
                let exact = implied_vol_log(&cv.frame, OptionKind::Call, k, cv.call.log_price(k)?)?.sigma();
                let a = iv_wing_call(&cv.frame, cv.call.as_ref(), k)?;
                let b = iv_wing_call_refined(&cv.frame, cv.call.as_ref(), k, None)?;
                println!(
                    "{},{},{},{},{}",
                    fmt_num(k.ln()),
                    fmt_num(exact),
                    fmt_num(a.value),
                    fmt_num(b.value),
                    fmt_num(a.error_order.unwrap_or(f64::NAN))
                );
            }
            Ok(true)
        }
        Command::TailIndex { frame, curve, ladder } => {
            let cv = curves(&frame, &curve)?;
            let rep = estimate_right_index(&cv.frame, cv.call.as_ref(), &ladder.strikes()?, cv.spec.as_ref())?;
            println!("l_hat: {}", rep.l_hat);
            println!("infinite: {}", rep.infinite);
            println!("r_star_hat: {}", rep.r_star_hat);
            if let Some(p) = rep.p_tilde_hat {
                println!("p_tilde_hat: {p}");
            }
            if let Some(s) = rep.s_star_hat {
                println!("s_star_hat: {s}");
            }
            println!("lee_slope: {}", rep.lee_slope);
            for (name, d) in &rep.deltas {
                println!("delta {name}: {d}");
            }
            println!("caveat: {}", rep.caveat);
            Ok(true)
        }
        Command::Symmetry { frame, curve, ladder } => {
            let cv = curves(&frame, &curve)?;
            let rep = symmetry_check(&cv.frame, cv.call.as_ref(), cv.put.as_ref(), &ladder.strikes()?)?;
            println!("logK,iv_c,iv_g_dual");
            for (k, (c, g)) in rep.strikes.iter().zip(rep.iv_c.iter().zip(&rep.iv_g)) {
                println!("{},{},{}", fmt_num(k.ln()), fmt_num(*c), fmt_num(*g));
            }
            eprintln!("max deviation: {:e}", rep.max_deviation);
            Ok(true)
        }
        Command::ModelWing { frame, model, ladder } => {
            let f = frame.frame()?;
            let m = match model {
                ModelKind::SteinStein => TailModel::SteinStein(SteinSteinTail::new(1.0, 1.0, 4.0)?),
                ModelKind::Heston => TailModel::Heston(HestonTail::new(1.0, 1.0, 3.0, 1.0, 1.0, 1.0)?),
                ModelKind::HullWhite => TailModel::HullWhite(HullWhiteTail::new(1.0, 1.0, 0.0, 1.0, 1.0, f.t)?),
            };
            println!("logK,log_quadrature,log_wing,ratio");
            for k in ladder.strikes()? {
                let q = log_quadrature_call(&f, &m, k)?;
                let w = log_call_wing_price(&f, &m, k)?;
                println!("{},{},{},{}", fmt_num(k.ln()), fmt_num(q), fmt_num(w), fmt_num((w - q).exp()));
            }
            Ok(true)
        }
        Command::Validate { surface, x0, r } => {
            let f = MarketFrame::new(x0, r, 1.0)?;
            let (grid, puts) = match surface {
                Some(p) => read_surface(
                    File::open(&p).map_err(|e| Error::Config(format!("cannot open {}: {e}", p.display())))?,
                    f,
                )?,
                None => read_surface(BS_FIXTURE.as_bytes(), f)?,
            };
            let rep = validate_surface(&grid, puts.as_deref());
            for c in &rep.conditions {
                println!("{:?}: {:?}: {}", c.condition, c.status, c.detail);
            }
            let ok = rep.conditions.iter().all(|c| c.status != Status::Fail);
            println!("verdict: {}", if ok { "PASS" } else { "FAIL" });
            Ok(ok)
        }
        Command::Experiment { config, scenario, sets, output, seed } => {
            let mut cfg = match (&config, &scenario) {
                (Some(path), _) => ExperimentConfig::from_file(path)?,
                (None, Some(s)) => ExperimentConfig::new(s.parse::<Scenario>()?),
                (None, None) => return Err(Error::Config("give --config or --scenario".into())),
            };
            if let Some(s) = &scenario {
                cfg.set("scenario", s)?;
            }
            for kv in &sets {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("--set expects key=value, got '{kv}'")))?;
                cfg.set(k.trim(), v.trim())?;
            }
            if let Some(o) = output {
                cfg.output = Some(o);
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let (out, path) = run_to_file(&cfg)?;
            println!("{out}");
            println!("report: {}", path.display());
            Ok(out.pass())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ (Error::Config(_) | Error::Domain(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
