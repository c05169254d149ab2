//! The `robust-sampler` command line: experiment orchestration, parameter
//! advice, attack demonstrations, application queries, and a self-test
//! battery. All output is deterministic given the seed; there are no
//! timestamps.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 experiment-level
//! failure (invalid estimates, I/O problems, failed self-test).

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Deserialize;
use serde_json::json;

use crate::adversaries::AdversarySpec;
use crate::applications;
use crate::core_sampling::SamplerConfig;
use crate::element::Element;
use crate::error::{Error, Result};
use crate::game_engine::{monte_carlo, run_game, GameConfig, GameTranscript, McSummary};
use crate::numeric::{parse_rational, ratio_from_u64};
use crate::param_advisor::{
    attack_regime, bernoulli_p_robust, default_attack_c, default_attack_universe,
    default_continuous_c, reservoir_k_continuous, reservoir_k_robust, RobustnessSpec,
};
use crate::set_systems::{max_density_gap, Range, SetSystem};

const SEED_ENV: &str = "ROBUST_SAMPLER_SEED";

#[derive(Parser)]
#[command(
    name = "robust-sampler",
    about = "Adaptive-stream sampling games with exact approximation verdicts",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print advised sampler parameters for a target guarantee.
    Advise(AdviseArgs),
    /// Play one adaptive game and print its transcript.
    Game(ExperimentArgs),
    /// Estimate the failure probability over many seeded games.
    Mc(ExperimentArgs),
    /// Run the binary-search attack once and check the sorted-prefix
    /// property of the sampled elements.
    AttackDemo(AttackDemoArgs),
    /// Query a stored sample: rank, quantile, heavy hitters, range counts,
    /// center points.
    App(AppArgs),
    /// Run the built-in oracle checks.
    Selftest,
}

#[derive(Args)]
struct AdviseArgs {
    /// Accuracy eps in (0,1), e.g. "0.2" or "1/5".
    #[arg(long, default_value = "1/5")]
    eps: String,
    /// Failure probability delta in (0,1).
    #[arg(long, default_value = "1/10")]
    delta: String,
    /// Set-system cardinality |R|.
    #[arg(long, default_value = "10000")]
    card: String,
    /// Stream length.
    #[arg(long, default_value_t = 1000)]
    n: u64,
    /// Universe size for the attack-regime report; accepts "2^169" forms.
    /// Defaults to the standard attack universe for n.
    #[arg(long = "N")]
    universe: Option<String>,
}

/// Flags shared by `game` and `mc`. Any value may also come from a JSON
/// config file via --config; explicit flags win.
#[derive(Args, Clone, Default)]
struct ExperimentArgs {
    /// JSON config file with the same keys as these flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// "bernoulli" or "reservoir".
    #[arg(long)]
    sampler: Option<String>,
    /// Bernoulli rate, exact rational.
    #[arg(long)]
    p: Option<String>,
    /// Reservoir capacity.
    #[arg(long)]
    k: Option<u64>,
    /// Stream length.
    #[arg(long)]
    n: Option<u64>,
    /// Universe size; accepts "2^169" forms.
    #[arg(long = "N")]
    universe: Option<String>,
    /// Accuracy eps in (0,1).
    #[arg(long)]
    eps: Option<String>,
    /// Target delta, reported alongside results.
    #[arg(long)]
    delta: Option<String>,
    /// "prefix", "intervals", "singletons", or "boxes".
    #[arg(long)]
    system: Option<String>,
    /// Box side length (system = boxes).
    #[arg(long)]
    m: Option<u64>,
    /// Box dimension (system = boxes).
    #[arg(long)]
    d: Option<u32>,
    /// Adversary name: attack, midpoint-attack, static-sorted,
    /// static-random, constant[:value].
    #[arg(long)]
    adversary: Option<String>,
    /// Judge every round instead of only the end.
    #[arg(long, action = ArgAction::SetTrue)]
    continuous: bool,
    /// In continuous mode, judge only geometrically spaced rounds.
    #[arg(long, action = ArgAction::SetTrue)]
    checkpoints: bool,
    /// Number of Monte Carlo trials (mc only).
    #[arg(long)]
    trials: Option<u64>,
    /// Master seed; falls back to ROBUST_SAMPLER_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// "json", "csv", or "jsonl".
    #[arg(long)]
    format: Option<String>,
}

/// The config-file shape: same keys as the flags.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    sampler: Option<String>,
    p: Option<String>,
    k: Option<u64>,
    n: Option<u64>,
    #[serde(rename = "N")]
    universe: Option<String>,
    eps: Option<String>,
    delta: Option<String>,
    system: Option<String>,
    m: Option<u64>,
    d: Option<u32>,
    adversary: Option<String>,
    continuous: Option<bool>,
    checkpoints: Option<bool>,
    trials: Option<u64>,
    seed: Option<u64>,
    format: Option<String>,
}

#[derive(Args)]
struct AttackDemoArgs {
    /// Stream length.
    #[arg(long, default_value_t = 200)]
    n: u64,
    /// Universe size; defaults to the standard attack universe for n.
    #[arg(long = "N")]
    universe: Option<String>,
    /// Bernoulli rate; defaults to ln(n)/(2n).
    #[arg(long)]
    p: Option<String>,
    /// Accuracy eps used for the verdict.
    #[arg(long, default_value = "2/5")]
    eps: String,
    /// Trial seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct AppArgs {
    #[command(subcommand)]
    query: AppQuery,
}

#[derive(Subcommand)]
enum AppQuery {
    /// Estimated rank of a target element.
    Rank {
        #[arg(long)]
        sample_file: PathBuf,
        #[arg(long)]
        target: String,
    },
    /// The q-th quantile of the sample.
    Quantile {
        #[arg(long)]
        sample_file: PathBuf,
        #[arg(long)]
        q: String,
    },
    /// Elements with sample density at least alpha - eps/3.
    HeavyHitters {
        #[arg(long)]
        sample_file: PathBuf,
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        eps: String,
    },
    /// Estimated number of stream elements in [lo, hi].
    RangeCount {
        #[arg(long)]
        sample_file: PathBuf,
        #[arg(long)]
        lo: String,
        #[arg(long)]
        hi: String,
    },
    /// A beta-center of the stream.
    Center {
        #[arg(long)]
        sample_file: PathBuf,
        #[arg(long)]
        beta: String,
    },
}

/// Stored-sample file shape for `app` queries.
#[derive(Deserialize)]
struct SampleFile {
    sample: Vec<String>,
    n: u64,
}

/// Entry point; returns the process exit code.
pub fn cli_main<I>(args: I) -> i32
where
    I: IntoIterator<Item = OsString>,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes, not usage errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Advise(args) => advise(args),
        Command::Game(args) => game(args),
        Command::Mc(args) => mc(args),
        Command::AttackDemo(args) => attack_demo(args),
        Command::App(args) => app(args),
        Command::Selftest => selftest(),
    }
}

fn parse_universe(s: &str) -> Result<BigUint> {
    let r = parse_rational(s)?;
    if !r.is_integer() || r.numer().sign() == num_bigint::Sign::Minus {
        return Err(Error::Config(format!(
            "universe size must be a positive integer, got {s}"
        )));
    }
    r.numer()
        .to_biguint()
        .ok_or_else(|| Error::Config(format!("bad universe size {s}")))
}

fn advise(args: AdviseArgs) -> Result<()> {
    let spec = RobustnessSpec {
        eps: parse_rational(&args.eps)?,
        delta: parse_rational(&args.delta)?,
        n: args.n,
        system_cardinality: parse_universe(&args.card)?,
        vc_dimension: None,
    };
    let universe = match &args.universe {
        Some(s) => parse_universe(s)?,
        None => default_attack_universe(args.n)?,
    };
    let p = bernoulli_p_robust(&spec)?;
    let k = reservoir_k_robust(&spec)?;
    let k_cont = reservoir_k_continuous(&spec, &default_continuous_c())?;
    let regime = attack_regime(&spec, &universe, &default_attack_c())?;
    let out = json!({
        "p": p.to_string(),
        "p_approx": rational_approx(&p),
        "k": k.to_string(),
        "k_continuous": k_cont.to_string(),
        "attack_thresholds": {
            "bernoulli_p": regime.bernoulli_p_threshold,
            "reservoir_k": regime.reservoir_k_threshold,
        },
        "universe_ok": regime.universe_ok,
        "N": universe.to_string(),
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn rational_approx(r: &BigRational) -> f64 {
    crate::numeric::rational_to_f64(r)
}

/// Merged experiment settings with defaults applied.
struct Experiment {
    game: GameConfig,
    delta: BigRational,
    trials: u64,
    seed: u64,
    out: Option<PathBuf>,
    format: String,
    universe_label: String,
}

fn merge_args(mut args: ExperimentArgs) -> Result<ExperimentArgs> {
    let Some(path) = args.config.take() else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path)?;
    let file: FileConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("config file {}: {e}", path.display())))?;
    args.sampler = args.sampler.or(file.sampler);
    args.p = args.p.or(file.p);
    args.k = args.k.or(file.k);
    args.n = args.n.or(file.n);
    args.universe = args.universe.or(file.universe);
    args.eps = args.eps.or(file.eps);
    args.delta = args.delta.or(file.delta);
    args.system = args.system.or(file.system);
    args.m = args.m.or(file.m);
    args.d = args.d.or(file.d);
    args.adversary = args.adversary.or(file.adversary);
    args.continuous = args.continuous || file.continuous.unwrap_or(false);
    args.checkpoints = args.checkpoints || file.checkpoints.unwrap_or(false);
    args.trials = args.trials.or(file.trials);
    args.seed = args.seed.or(file.seed);
    args.format = args.format.or(file.format);
    Ok(args)
}

fn build_experiment(args: ExperimentArgs) -> Result<Experiment> {
    let args = merge_args(args)?;
    let n = args.n.unwrap_or(100);
    let eps = parse_rational(args.eps.as_deref().unwrap_or("1/5"))?;
    let delta = parse_rational(args.delta.as_deref().unwrap_or("1/10"))?;
    let universe = match args.universe.as_deref() {
        Some(s) => parse_universe(s)?,
        None => BigUint::from(10_000u32),
    };
    let universe_label = universe.to_string();
    let system = match args.system.as_deref().unwrap_or("prefix") {
        "prefix" => SetSystem::prefix_intervals(universe),
        "intervals" => SetSystem::all_intervals(universe),
        "singletons" => SetSystem::singletons(universe),
        "boxes" => {
            let m = args
                .m
                .ok_or_else(|| Error::Config("system=boxes needs --m".into()))?;
            let d = args
                .d
                .ok_or_else(|| Error::Config("system=boxes needs --d".into()))?;
            SetSystem::axis_boxes(m, d)?
        }
        other => return Err(Error::Config(format!("unknown system {other:?}"))),
    };
    let sampler = match args.sampler.as_deref().unwrap_or("reservoir") {
        "bernoulli" => {
            let p = args
                .p
                .as_deref()
                .ok_or_else(|| Error::Config("sampler=bernoulli needs --p".into()))?;
            SamplerConfig::Bernoulli {
                p: parse_rational(p)?,
                rng_seed: 0,
            }
        }
        "reservoir" => SamplerConfig::Reservoir {
            k: args.k.unwrap_or(10),
            rng_seed: 0,
        },
        other => return Err(Error::Config(format!("unknown sampler {other:?}"))),
    };
    let adversary: AdversarySpec = args
        .adversary
        .as_deref()
        .unwrap_or("static-sorted")
        .parse()?;
    let seed = match args.seed {
        Some(s) => s,
        None => std::env::var(SEED_ENV)
            .ok()
            .map(|v| {
                v.parse::<u64>()
                    .map_err(|_| Error::Config(format!("bad {SEED_ENV} value {v:?}")))
            })
            .transpose()?
            .unwrap_or(0),
    };
    let format = args.format.unwrap_or_else(|| "json".into());
    if !matches!(format.as_str(), "json" | "csv" | "jsonl") {
        return Err(Error::Config(format!("unknown format {format:?}")));
    }
    let trials = args.trials.unwrap_or(100);
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    Ok(Experiment {
        game: GameConfig {
            n,
            eps,
            system,
            sampler,
            adversary,
            continuous: args.continuous,
            checkpoints: args.checkpoints,
            record_rounds: true,
            trial_seed: seed,
        },
        delta,
        trials,
        seed,
        out: args.out,
        format,
        universe_label,
    })
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            let mut f = fs::File::create(path)?;
            f.write_all(text.as_bytes())?;
            Ok(())
        }
        None => {
            print!("{text}");
            std::io::stdout().flush()?;
            Ok(())
        }
    }
}

fn game(args: ExperimentArgs) -> Result<()> {
    let exp = build_experiment(args)?;
    let transcript = run_game(&exp.game)?;
    let text = match exp.format.as_str() {
        "jsonl" => {
            // One round per line; use json format for the full verdict.
            let lines: Vec<String> = transcript
                .rounds
                .iter()
                .map(|r| serde_json::to_string(r).expect("round serializes"))
                .collect();
            lines.join("\n") + "\n"
        }
        _ => serde_json::to_string_pretty(&transcript.to_json())? + "\n",
    };
    emit(&exp.out, &text)
}

fn summary_fields(exp: &Experiment, s: &McSummary) -> Vec<(&'static str, String)> {
    let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    vec![
        ("sampler", exp.game.sampler.kind_name().to_string()),
        ("param", exp.game.sampler.param_string()),
        ("n", exp.game.n.to_string()),
        ("N", exp.universe_label.clone()),
        ("eps", exp.game.eps.to_string()),
        ("delta", exp.delta.to_string()),
        ("adversary", exp.game.adversary.name()),
        ("trials", s.trials.to_string()),
        ("valid", s.valid_trials.to_string()),
        ("failures", s.failures.to_string()),
        ("delta_hat", fmt_opt(s.delta_hat)),
        ("ci_lo", fmt_opt(s.ci.map(|c| c.0))),
        ("ci_hi", fmt_opt(s.ci.map(|c| c.1))),
        ("aborts", s.aborts.to_string()),
        ("seed", exp.seed.to_string()),
    ]
}

fn mc(args: ExperimentArgs) -> Result<()> {
    let exp = build_experiment(args)?;
    let summary = monte_carlo(&exp.game, exp.trials, exp.seed)?;
    let fields = summary_fields(&exp, &summary);
    let text = match exp.format.as_str() {
        "csv" => {
            let header: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
            let values: Vec<&str> = fields.iter().map(|(_, v)| v.as_str()).collect();
            format!("{}\n{}\n", header.join(","), values.join(","))
        }
        _ => {
            let mut obj = serde_json::Map::new();
            for (k, v) in &fields {
                obj.insert((*k).to_string(), json!(v));
            }
            obj.insert("failures_all".into(), json!(summary.failures_all.to_string()));
            serde_json::to_string_pretty(&serde_json::Value::Object(obj))? + "\n"
        }
    };
    emit(&exp.out, &text)?;
    if summary.valid_trials == 0 {
        return Err(Error::Estimation(
            "all trials aborted; failure probability is undefined".into(),
        ));
    }
    Ok(())
}

/// Whether the sample is exactly the multiset of the |S| smallest stream
/// elements.
fn sorted_prefix_holds(transcript: &GameTranscript) -> bool {
    let mut sample = transcript.final_sample.clone();
    sample.sort();
    let mut stream = transcript.stream.clone();
    stream.sort();
    sample.as_slice() == &stream[..sample.len()]
}

fn attack_demo(args: AttackDemoArgs) -> Result<()> {
    let universe = match &args.universe {
        Some(s) => parse_universe(s)?,
        None => default_attack_universe(args.n)?,
    };
    let p = match &args.p {
        Some(s) => parse_rational(s)?,
        None => {
            crate::numeric::ln_upper(&ratio_from_u64(args.n))?
                / (ratio_from_u64(2) * ratio_from_u64(args.n))
        }
    };
    let config = GameConfig {
        n: args.n,
        eps: parse_rational(&args.eps)?,
        system: SetSystem::prefix_intervals(universe.clone()),
        sampler: SamplerConfig::Bernoulli { p: p.clone(), rng_seed: 0 },
        adversary: AdversarySpec::Attack,
        continuous: false,
        checkpoints: false,
        record_rounds: true,
        trial_seed: args.seed.unwrap_or(0),
    };
    let t = run_game(&config)?;
    let out = json!({
        "n": args.n,
        "N": universe.to_string(),
        "p": p.to_string(),
        "sample_size": t.final_sample.len(),
        "sorted_prefix_ok": sorted_prefix_holds(&t),
        "verdict": u8::from(t.approximation),
        "witness": t.witness.as_ref().map(|(r, g)| json!({"range": r, "gap": g})),
        "attack_exhausted": t.attack_exhausted,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn load_sample(path: &PathBuf) -> Result<(Vec<Element>, u64)> {
    let text = fs::read_to_string(path)?;
    let file: SampleFile = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("sample file {}: {e}", path.display())))?;
    let sample: Vec<Element> = file
        .sample
        .iter()
        .map(|s| s.parse())
        .collect::<Result<_>>()?;
    Ok((sample, file.n))
}

fn app(args: AppArgs) -> Result<()> {
    let out = match args.query {
        AppQuery::Rank {
            sample_file,
            target,
        } => {
            let (sample, n) = load_sample(&sample_file)?;
            let rank = applications::estimate_rank(&target.parse()?, &sample, n)?;
            json!({"rank": rank.to_string(), "rank_approx": rational_approx(&rank)})
        }
        AppQuery::Quantile { sample_file, q } => {
            let (sample, _) = load_sample(&sample_file)?;
            let e = applications::estimate_quantile(&parse_rational(&q)?, &sample)?;
            json!({"quantile": e.to_string()})
        }
        AppQuery::HeavyHitters {
            sample_file,
            alpha,
            eps,
        } => {
            let (sample, _) = load_sample(&sample_file)?;
            let hits =
                applications::heavy_hitters(&sample, &parse_rational(&alpha)?, &parse_rational(&eps)?)?;
            json!({"heavy_hitters": hits.iter().map(|e| e.to_string()).collect::<Vec<_>>()})
        }
        AppQuery::RangeCount {
            sample_file,
            lo,
            hi,
        } => {
            let (sample, n) = load_sample(&sample_file)?;
            let range = Range::Interval {
                lo: lo.parse()?,
                hi: hi.parse()?,
            };
            let count = applications::answer_range_query(&range, &sample, n)?;
            json!({"count": count.to_string(), "count_approx": rational_approx(&count)})
        }
        AppQuery::Center { sample_file, beta } => {
            let (sample, _) = load_sample(&sample_file)?;
            let c = applications::center_point_1d(&sample, &parse_rational(&beta)?)?;
            json!({"center": c.to_string()})
        }
    };
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

// ---- selftest ----------------------------------------------------------

/// Exhaustive maximum density gap, enumerating every range of the system.
/// Only usable at tiny universe sizes; the self-test's independent oracle.
fn brute_max_gap(sample: &[Element], stream: &[Element], system: &SetSystem) -> BigRational {
    let n = system
        .universe_size()
        .to_u64()
        .expect("selftest universes are tiny");
    let ranges: Vec<Range> = match system.kind() {
        crate::set_systems::SetSystemKind::PrefixIntervals => (1..=n)
            .map(|b| Range::Prefix {
                b: Element::from_u64(b),
            })
            .collect(),
        crate::set_systems::SetSystemKind::Singletons => (1..=n)
            .map(|v| Range::Singleton {
                v: Element::from_u64(v),
            })
            .collect(),
        crate::set_systems::SetSystemKind::AllIntervals => {
            let mut out = Vec::new();
            for lo in 1..=n {
                for hi in lo..=n {
                    out.push(Range::Interval {
                        lo: Element::from_u64(lo),
                        hi: Element::from_u64(hi),
                    });
                }
            }
            out
        }
        crate::set_systems::SetSystemKind::AxisBoxes { m, d } => {
            assert_eq!(*d, 2, "selftest boxes are 2-D");
            let mut out = Vec::new();
            for lo0 in 1..=*m {
                for hi0 in lo0..=*m {
                    for lo1 in 1..=*m {
                        for hi1 in lo1..=*m {
                            out.push(Range::AxisBox {
                                m: *m,
                                lo: vec![lo0, lo1],
                                hi: vec![hi0, hi1],
                            });
                        }
                    }
                }
            }
            out
        }
    };
    let mut best = BigRational::from_integer(0.into());
    for range in ranges {
        let ds = crate::set_systems::density(&range, sample).expect("non-empty");
        let dx = crate::set_systems::density(&range, stream).expect("non-empty");
        let gap = if ds > dx { ds - dx } else { dx - ds };
        if gap > best {
            best = gap;
        }
    }
    best
}

fn check(name: &str, ok: bool, failures: &mut u32) {
    if ok {
        println!("ok   {name}");
    } else {
        println!("FAIL {name}");
        *failures += 1;
    }
}

fn selftest() -> Result<()> {
    use rand::Rng;

    let mut failures = 0u32;

    // Advisor closed forms against hand-computed values.
    let spec = RobustnessSpec {
        eps: parse_rational("1/5")?,
        delta: parse_rational("1/10")?,
        n: 5000,
        system_cardinality: BigUint::from(10_000u32),
        vc_dimension: None,
    };
    check(
        "advisor reservoir k = 611 at eps=1/5 delta=1/10 |R|=10^4",
        reservoir_k_robust(&spec)? == BigUint::from(611u32),
        &mut failures,
    );
    let mut cont = spec.clone();
    cont.delta = parse_rational("1/5")?;
    cont.n = 2000;
    check(
        "advisor continuous k = 2892 at eps=1/5 delta=1/5 n=2000",
        reservoir_k_continuous(&cont, &default_continuous_c())? == BigUint::from(2892u32),
        &mut failures,
    );

    // Attack first step at p' = 1/2 over [100].
    let mut attack = crate::adversaries::BinarySearchAttack::new(
        Some(&parse_rational("1/2")?),
        4,
        &BigUint::from(100u32),
    )?;
    let params = crate::adversaries::GameParams {
        n: 4,
        universe_size: BigUint::from(100u32),
        eps: parse_rational("1/2")?,
    };
    let state = crate::core_sampling::Sampler::new(SamplerConfig::Reservoir {
        k: 1,
        rng_seed: 0,
    })?;
    let ctx = crate::adversaries::AdversaryContext {
        prior_elements: &[],
        observed_state: state.state(),
        round: 1,
        params: &params,
    };
    use crate::adversaries::Adversary as _;
    check(
        "attack round 1 emits 50 at p'=1/2 over [100]",
        attack.next_element(&ctx)? == Element::from_u64(50),
        &mut failures,
    );

    // Sweep verifier versus exhaustive range enumeration.
    let mut rng = crate::rng::derive_rng(0xFEED, "selftest", 0);
    let mut sweep_ok = true;
    for case in 0..200u32 {
        let boxes = case % 4 == 3;
        let (universe, system) = if boxes {
            let m = rng.random_range(1..=4u64);
            (m * m, SetSystem::axis_boxes(m, 2)?)
        } else {
            let n = rng.random_range(1..=20u64);
            let sys = match case % 4 {
                0 => SetSystem::prefix_intervals(BigUint::from(n)),
                1 => SetSystem::all_intervals(BigUint::from(n)),
                _ => SetSystem::singletons(BigUint::from(n)),
            };
            (n, sys)
        };
        let len = rng.random_range(1..=25usize);
        let stream: Vec<Element> = (0..len)
            .map(|_| Element::from_u64(rng.random_range(1..=universe)))
            .collect();
        let mut sample: Vec<Element> = stream
            .iter()
            .filter(|_| rng.random_range(0..2u8) == 1)
            .cloned()
            .collect();
        if sample.is_empty() {
            sample.push(stream[0].clone());
        }
        let (gap, _) = max_density_gap(&sample, &stream, &system)?;
        if gap != brute_max_gap(&sample, &stream, &system) {
            sweep_ok = false;
            break;
        }
    }
    check(
        "sweep gap equals exhaustive enumeration on 200 random instances",
        sweep_ok,
        &mut failures,
    );

    // Reservoir replacement frequency at k=1, i=2.
    let mut replaced = 0u32;
    for seed in 0..2000u64 {
        let state = crate::core_sampling::run_static(
            SamplerConfig::Reservoir { k: 1, rng_seed: seed },
            &crate::core_sampling::stream_of([10, 20]),
        )?;
        if state.held()[0] == Element::from_u64(20) {
            replaced += 1;
        }
    }
    let freq = f64::from(replaced) / 2000.0;
    check(
        "reservoir k=1 replacement frequency near 1/2",
        (freq - 0.5).abs() < 0.04,
        &mut failures,
    );

    // Game determinism and the empty-sample rule.
    let config = GameConfig {
        n: 30,
        eps: parse_rational("1/4")?,
        system: SetSystem::prefix_intervals(BigUint::from(100u32)),
        sampler: SamplerConfig::Reservoir { k: 5, rng_seed: 0 },
        adversary: AdversarySpec::Attack,
        continuous: false,
        checkpoints: false,
        record_rounds: true,
        trial_seed: 42,
    };
    check(
        "identical seeds give identical transcripts",
        run_game(&config)? == run_game(&config)?,
        &mut failures,
    );
    let mut empty = config.clone();
    empty.sampler = SamplerConfig::Bernoulli {
        p: parse_rational("0")?,
        rng_seed: 0,
    };
    check(
        "empty final sample is verdict 0",
        !run_game(&empty)?.approximation,
        &mut failures,
    );

    if failures == 0 {
        println!("selftest: PASS");
        Ok(())
    } else {
        println!("selftest: FAIL ({failures} checks)");
        Err(Error::Estimation(format!("{failures} self-test checks failed")))
    }
}
