//! Command-line front end.
//!
//! One subcommand per analysis, plus `oracle-check` for the randomized
//! cross-check batteries. Parameters come from flags, optionally merged
//! over a JSON configuration file (flags win). All data goes to stdout
//! or, with `--out DIR`, to fixed file names in that directory, with
//! floats at 17 significant digits so identical runs produce identical
//! bytes.
//!
//! Exit codes: 0 success, 1 validation or configuration error, 2
//! numerical failure.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::chain::{ChainSpec, ProfileKind};
use crate::check::oracle_battery;
use crate::region::{
    creatable_map, critical_length, find_t0, lambda_min_from_peak, selective_suite, WindowPolicy,
};
use crate::spectral::{decompose, transition_amplitudes, write_amplitude_csv};
use crate::{Error, Result};

/// Entry point behind `main`; returns the process exit code instead of
/// exiting so tests can drive it in-process.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            // clap's own exit codes collide with "2 = numerical
            // failure", so help/version map to 0 and usage errors to 1
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

#[derive(Parser)]
#[command(
    name = "spinline",
    version,
    about = "Receiver-state analysis of spin-chain transfer lines"
)]
struct Cli {
    /// JSON configuration file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Write artifacts into this directory instead of stdout.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads for sweeps; SPINLINE_THREADS is the fallback,
    /// then all available cores.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct ChainArgs {
    /// Coupling profile: homogeneous, alternating, ekert, or custom.
    #[arg(long)]
    profile: Option<String>,

    /// Number of nodes.
    #[arg(long)]
    n: Option<usize>,

    /// Alternation parameter; alternating profile only.
    #[arg(long)]
    d: Option<f64>,

    /// Comma-separated couplings; custom profile only.
    #[arg(long, value_name = "D1,D2,...")]
    couplings: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues and eigenvectors of the one-excitation block.
    Spectrum {
        #[command(flatten)]
        chain: ChainArgs,
    },
    /// Transition amplitudes from an injection node at given times.
    Amplitudes {
        #[command(flatten)]
        chain: ChainArgs,
        /// Injection node (default 1).
        #[arg(long)]
        j: Option<usize>,
        /// Evaluation time; repeatable.
        #[arg(long = "t", value_name = "TIME")]
        times: Vec<f64>,
        /// Also write a plotting script next to the CSV.
        #[arg(long)]
        emit_plot_script: bool,
    },
    /// Receiver-parameter image of the control grid at a fixed time.
    Map {
        #[command(flatten)]
        chain: ChainArgs,
        /// Registration time.
        #[arg(long)]
        t: Option<f64>,
        /// Samples per grid axis (default 201).
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        emit_plot_script: bool,
    },
    /// Transfer peak inside a time window.
    T0 {
        #[command(flatten)]
        chain: ChainArgs,
        /// Search window LO:HI (default 0:1.5N).
        #[arg(long, value_name = "LO:HI")]
        window: Option<String>,
    },
    /// Smallest creatable receiver eigenvalue over a time window.
    LambdaMin {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, value_name = "LO:HI")]
        window: Option<String>,
    },
    /// Critical-length sweep of a profile family.
    CriticalLength {
        /// Family: homogeneous, alternating, or ekert.
        #[arg(long)]
        profile: Option<String>,
        /// Chain lengths LO:HI[:STEP].
        #[arg(long, value_name = "LO:HI[:STEP]")]
        n_range: Option<String>,
        /// Alternation sweep LO:HI:STEP (alternating family only;
        /// default 0.1:2:0.02).
        #[arg(long, value_name = "LO:HI:STEP")]
        d_sweep: Option<String>,
        /// Search-window policy: standard, early, late, or wide.
        #[arg(long)]
        policy: Option<String>,
        #[arg(long)]
        emit_plot_script: bool,
    },
    /// Disjointness audit of transfer-modulus brackets.
    Select {
        /// Chain/time choice PROFILE:N[:D]:T; repeatable, at least two.
        #[arg(long = "entry", value_name = "PROFILE:N[:D]:T")]
        entries: Vec<String>,
        #[arg(long)]
        emit_plot_script: bool,
    },
    /// Randomized cross-checks of the reduced model.
    OracleCheck {
        /// Seed of the reproducible draw sequence (default 7).
        #[arg(long)]
        seed: Option<u64>,
        /// Cases per battery (default 50).
        #[arg(long)]
        cases: Option<usize>,
        /// Integrator step of the time-stepper battery (default 1e-3).
        #[arg(long)]
        step: Option<f64>,
    },
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    chain: Option<ChainSection>,
    analysis: Option<AnalysisSection>,
    output: Option<OutputSection>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ChainSection {
    profile: Option<String>,
    n: Option<usize>,
    d: Option<f64>,
    couplings: Option<Vec<f64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct AnalysisSection {
    t: Option<f64>,
    times: Option<Vec<f64>>,
    j: Option<usize>,
    window: Option<String>,
    grid: Option<usize>,
    step: Option<f64>,
    policy: Option<String>,
    d_sweep: Option<String>,
    n_range: Option<String>,
    seed: Option<u64>,
    cases: Option<usize>,
    entries: Option<Vec<String>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    dir: Option<PathBuf>,
    plot_script: Option<bool>,
    threads: Option<usize>,
}

impl ChainSection {
    fn present_keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        if self.profile.is_some() {
            keys.push("profile");
        }
        if self.n.is_some() {
            keys.push("n");
        }
        if self.d.is_some() {
            keys.push("d");
        }
        if self.couplings.is_some() {
            keys.push("couplings");
        }
        keys
    }
}

impl AnalysisSection {
    fn present_keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        if self.t.is_some() {
            keys.push("t");
        }
        if self.times.is_some() {
            keys.push("times");
        }
        if self.j.is_some() {
            keys.push("j");
        }
        if self.window.is_some() {
            keys.push("window");
        }
        if self.grid.is_some() {
            keys.push("grid");
        }
        if self.step.is_some() {
            keys.push("step");
        }
        if self.policy.is_some() {
            keys.push("policy");
        }
        if self.d_sweep.is_some() {
            keys.push("d_sweep");
        }
        if self.n_range.is_some() {
            keys.push("n_range");
        }
        if self.seed.is_some() {
            keys.push("seed");
        }
        if self.cases.is_some() {
            keys.push("cases");
        }
        if self.entries.is_some() {
            keys.push("entries");
        }
        keys
    }
}

/// Every configuration key must belong to the active subcommand, so a
/// config cannot silently carry settings that nothing consumes.
fn restrict_analysis(config: &RunConfig, allowed: &[&str], command: &str) -> Result<()> {
    if let Some(analysis) = &config.analysis {
        for key in analysis.present_keys() {
            if !allowed.contains(&key) {
                return Err(Error::Config(format!(
                    "configuration key analysis.{key} does not apply to '{command}'"
                )));
            }
        }
    }
    Ok(())
}

fn forbid_chain_section(config: &RunConfig, command: &str) -> Result<()> {
    if let Some(chain) = &config.chain {
        if let Some(key) = chain.present_keys().first() {
            return Err(Error::Config(format!(
                "configuration key chain.{key} does not apply to '{command}'"
            )));
        }
    }
    Ok(())
}

fn restrict_plot_script(config: &RunConfig, command: &str) -> Result<()> {
    if let Some(output) = &config.output {
        if output.plot_script.is_some() {
            return Err(Error::Config(format!(
                "configuration key output.plot_script does not apply to '{command}'"
            )));
        }
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let config: RunConfig = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            serde_json::from_str(&text)
                .map_err(|err| Error::Config(format!("{}: {err}", path.display())))?
        }
        None => RunConfig::default(),
    };
    let out_dir = cli
        .out
        .clone()
        .or_else(|| config.output.as_ref().and_then(|o| o.dir.clone()));
    configure_threads(
        cli.threads,
        config.output.as_ref().and_then(|o| o.threads),
    );

    match &cli.command {
        Command::Spectrum { chain } => {
            restrict_analysis(&config, &[], "spectrum")?;
            restrict_plot_script(&config, "spectrum")?;
            let spec = resolve_chain(chain, config.chain.as_ref())?;
            let sd = decompose(&spec.one_excitation_hamiltonian())?;
            let n = sd.n();
            let report = SpectrumReport {
                n,
                eigenvalues: sd.eigenvalues().to_vec(),
                components: (1..=n)
                    .map(|node| (0..n).map(|mode| sd.component(node, mode)).collect())
                    .collect(),
            };
            deliver(&out_dir, "spectrum.json", &to_json(&report)?)
        }
        Command::Amplitudes {
            chain,
            j,
            times,
            emit_plot_script,
        } => {
            restrict_analysis(&config, &["times", "j"], "amplitudes")?;
            let analysis = config.analysis.as_ref();
            let spec = resolve_chain(chain, config.chain.as_ref())?;
            let j = j.or_else(|| analysis.and_then(|a| a.j)).unwrap_or(1);
            let times = if times.is_empty() {
                analysis.and_then(|a| a.times.clone()).unwrap_or_default()
            } else {
                times.clone()
            };
            if times.is_empty() {
                return Err(Error::Config(
                    "amplitudes needs at least one evaluation time (--t)".into(),
                ));
            }
            let sd = decompose(&spec.one_excitation_hamiltonian())?;
            let blocks = times
                .iter()
                .map(|&t| Ok((t, transition_amplitudes(&sd, j, t)?)))
                .collect::<Result<Vec<_>>>()?;
            let mut csv = Vec::new();
            write_amplitude_csv(&mut csv, &blocks)?;
            deliver(&out_dir, "amplitudes.csv", &into_text(csv))?;
            emit_plot(
                &out_dir,
                *emit_plot_script || config_plot(&config),
                "plot_amplitudes.py",
                PLOT_AMPLITUDES,
            )
        }
        Command::Map {
            chain,
            t,
            grid,
            emit_plot_script,
        } => {
            restrict_analysis(&config, &["t", "grid"], "map")?;
            let analysis = config.analysis.as_ref();
            let spec = resolve_chain(chain, config.chain.as_ref())?;
            let t = t
                .or_else(|| analysis.and_then(|a| a.t))
                .ok_or_else(|| Error::Config("map needs a registration time (--t)".into()))?;
            let grid = grid.or_else(|| analysis.and_then(|a| a.grid)).unwrap_or(201);
            let map = creatable_map(&spec, t, grid)?;
            let mut csv = Vec::new();
            map.write_csv(&mut csv)?;
            deliver(&out_dir, "map.csv", &into_text(csv))?;
            emit_plot(
                &out_dir,
                *emit_plot_script || config_plot(&config),
                "plot_map.py",
                PLOT_MAP,
            )
        }
        Command::T0 { chain, window } => {
            restrict_analysis(&config, &["window"], "t0")?;
            restrict_plot_script(&config, "t0")?;
            let spec = resolve_chain(chain, config.chain.as_ref())?;
            let window = resolve_window(window, &config, spec.n())?;
            let found = find_t0(&spec, window)?;
            deliver(&out_dir, "t0.json", &to_json(&found)?)
        }
        Command::LambdaMin { chain, window } => {
            restrict_analysis(&config, &["window"], "lambda-min")?;
            restrict_plot_script(&config, "lambda-min")?;
            let spec = resolve_chain(chain, config.chain.as_ref())?;
            let window = resolve_window(window, &config, spec.n())?;
            let found = find_t0(&spec, window)?;
            let report = LambdaMinReport {
                t0: found.t0,
                r_max: found.r_max,
                nondegenerate: found.nondegenerate,
                lambda_min_cr: lambda_min_from_peak(found.r_max),
            };
            deliver(&out_dir, "lambda_min.json", &to_json(&report)?)
        }
        Command::CriticalLength {
            profile,
            n_range,
            d_sweep,
            policy,
            emit_plot_script,
        } => {
            restrict_analysis(&config, &["policy", "d_sweep", "n_range"], "critical-length")?;
            if let Some(chain) = &config.chain {
                for key in chain.present_keys() {
                    if key != "profile" {
                        return Err(Error::Config(format!(
                            "configuration key chain.{key} does not apply to 'critical-length'"
                        )));
                    }
                }
            }
            let analysis = config.analysis.as_ref();
            let family: ProfileKind = profile
                .clone()
                .or_else(|| config.chain.as_ref().and_then(|c| c.profile.clone()))
                .ok_or_else(|| Error::Config("critical-length needs a profile family".into()))?
                .parse()?;
            let policy: WindowPolicy = policy
                .clone()
                .or_else(|| analysis.and_then(|a| a.policy.clone()))
                .map_or(Ok(WindowPolicy::Standard), |s| s.parse())?;
            let n_values = parse_length_range(
                &n_range
                    .clone()
                    .or_else(|| analysis.and_then(|a| a.n_range.clone()))
                    .ok_or_else(|| {
                        Error::Config("critical-length needs a length range (--n-range)".into())
                    })?,
            )?;
            let d_values = match family {
                ProfileKind::Alternating => parse_sweep(
                    &d_sweep
                        .clone()
                        .or_else(|| analysis.and_then(|a| a.d_sweep.clone()))
                        .unwrap_or_else(|| "0.1:2:0.02".into()),
                )?,
                _ => {
                    if d_sweep.is_some() || analysis.is_some_and(|a| a.d_sweep.is_some()) {
                        return Err(Error::Config(format!(
                            "a d sweep applies only to the alternating family, not {family}"
                        )));
                    }
                    Vec::new()
                }
            };
            let report = critical_length(family, &d_values, policy, &n_values)?;
            deliver(&out_dir, "critical_length.json", &to_json(&report)?)?;
            emit_plot(
                &out_dir,
                *emit_plot_script || config_plot(&config),
                "plot_critical_length.py",
                PLOT_CRITICAL_LENGTH,
            )
        }
        Command::Select {
            entries,
            emit_plot_script,
        } => {
            restrict_analysis(&config, &["entries"], "select")?;
            forbid_chain_section(&config, "select")?;
            let texts = if entries.is_empty() {
                config
                    .analysis
                    .as_ref()
                    .and_then(|a| a.entries.clone())
                    .unwrap_or_default()
            } else {
                entries.clone()
            };
            let parsed = texts
                .iter()
                .map(|text| parse_entry(text))
                .collect::<Result<Vec<_>>>()?;
            let report = selective_suite(&parsed)?;
            deliver(&out_dir, "select.json", &to_json(&report)?)?;
            emit_plot(
                &out_dir,
                *emit_plot_script || config_plot(&config),
                "plot_select.py",
                PLOT_SELECT,
            )
        }
        Command::OracleCheck { seed, cases, step } => {
            restrict_analysis(&config, &["seed", "cases", "step"], "oracle-check")?;
            restrict_plot_script(&config, "oracle-check")?;
            forbid_chain_section(&config, "oracle-check")?;
            let analysis = config.analysis.as_ref();
            let seed = seed.or_else(|| analysis.and_then(|a| a.seed)).unwrap_or(7);
            let cases = cases
                .or_else(|| analysis.and_then(|a| a.cases))
                .unwrap_or(50);
            let step = step
                .or_else(|| analysis.and_then(|a| a.step))
                .unwrap_or(1e-3);
            let report = oracle_battery(seed, cases, step)?;
            deliver(&out_dir, "oracle_check.json", &to_json(&report)?)?;
            if !report.pass {
                return Err(Error::NumericalFailure(
                    "oracle cross-checks exceeded tolerance; see oracle_check.json".into(),
                ));
            }
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct SpectrumReport {
    n: usize,
    eigenvalues: Vec<f64>,
    /// components[k-1][m] = V_{k,m}, one row per node.
    components: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct LambdaMinReport {
    t0: f64,
    r_max: f64,
    nondegenerate: bool,
    lambda_min_cr: f64,
}

fn config_plot(config: &RunConfig) -> bool {
    config
        .output
        .as_ref()
        .and_then(|o| o.plot_script)
        .unwrap_or(false)
}

fn configure_threads(flag: Option<usize>, config: Option<usize>) {
    let requested = flag.or(config).or_else(|| {
        std::env::var("SPINLINE_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    if let Some(threads) = requested {
        if threads >= 1 {
            // a second initialization in the same process is a no-op
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global();
        }
    }
}

fn resolve_chain(args: &ChainArgs, section: Option<&ChainSection>) -> Result<ChainSpec> {
    let profile = args
        .profile
        .clone()
        .or_else(|| section.and_then(|c| c.profile.clone()))
        .ok_or_else(|| Error::Config("a chain profile is required (--profile)".into()))?;
    let kind: ProfileKind = profile.parse()?;
    let n = args.n.or_else(|| section.and_then(|c| c.n));
    let d = args.d.or_else(|| section.and_then(|c| c.d));
    let couplings = match &args.couplings {
        Some(text) => Some(
            text.split(',')
                .map(|part| {
                    part.trim().parse::<f64>().map_err(|_| {
                        Error::Config(format!("malformed coupling value '{part}'"))
                    })
                })
                .collect::<Result<Vec<f64>>>()?,
        ),
        None => section.and_then(|c| c.couplings.clone()),
    };

    match kind {
        ProfileKind::Custom => {
            let couplings = couplings.ok_or_else(|| {
                Error::Config("the custom profile needs explicit couplings".into())
            })?;
            if let Some(n) = n {
                if n != couplings.len() + 1 {
                    return Err(Error::Config(format!(
                        "{} couplings describe a chain of {} nodes, not {n}",
                        couplings.len(),
                        couplings.len() + 1
                    )));
                }
            }
            if d.is_some() {
                return Err(Error::Config(
                    "the custom profile has no alternation parameter".into(),
                ));
            }
            ChainSpec::custom(couplings)
        }
        _ => {
            if couplings.is_some() {
                return Err(Error::Config(format!(
                    "explicit couplings apply only to the custom profile, not {kind}"
                )));
            }
            if kind != ProfileKind::Alternating && d.is_some() {
                return Err(Error::Config(format!(
                    "the {kind} profile has no alternation parameter"
                )));
            }
            let n = n.ok_or_else(|| Error::Config("the chain length is required (--n)".into()))?;
            ChainSpec::build_profile(kind, n, d)
        }
    }
}

fn resolve_window(flag: &Option<String>, config: &RunConfig, n: usize) -> Result<(f64, f64)> {
    let text = flag
        .clone()
        .or_else(|| config.analysis.as_ref().and_then(|a| a.window.clone()));
    match text {
        Some(text) => parse_window(&text),
        None => Ok(WindowPolicy::Standard.window(n, None)),
    }
}

fn parse_window(text: &str) -> Result<(f64, f64)> {
    let malformed = || Error::Config(format!("malformed window '{text}', expected LO:HI"));
    let (lo, hi) = text.split_once(':').ok_or_else(malformed)?;
    Ok((
        lo.trim().parse().map_err(|_| malformed())?,
        hi.trim().parse().map_err(|_| malformed())?,
    ))
}

fn parse_length_range(text: &str) -> Result<Vec<usize>> {
    let malformed = || {
        Error::Config(format!(
            "malformed length range '{text}', expected LO:HI[:STEP]"
        ))
    };
    let parts: Vec<&str> = text.split(':').collect();
    let (lo, hi, step): (usize, usize, usize) = match parts.as_slice() {
        [lo, hi] => (
            lo.trim().parse().map_err(|_| malformed())?,
            hi.trim().parse().map_err(|_| malformed())?,
            1,
        ),
        [lo, hi, step] => (
            lo.trim().parse().map_err(|_| malformed())?,
            hi.trim().parse().map_err(|_| malformed())?,
            step.trim().parse().map_err(|_| malformed())?,
        ),
        _ => return Err(malformed()),
    };
    if step == 0 || lo > hi {
        return Err(malformed());
    }
    Ok((lo..=hi).step_by(step).collect())
}

fn parse_sweep(text: &str) -> Result<Vec<f64>> {
    let malformed = || {
        Error::Config(format!(
            "malformed sweep '{text}', expected LO:HI:STEP"
        ))
    };
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        return Err(malformed());
    };
    let lo: f64 = lo.trim().parse().map_err(|_| malformed())?;
    let hi: f64 = hi.trim().parse().map_err(|_| malformed())?;
    let step: f64 = step.trim().parse().map_err(|_| malformed())?;
    if !lo.is_finite() || !hi.is_finite() || !step.is_finite() || step <= 0.0 || lo > hi {
        return Err(malformed());
    }
    let mut values = Vec::new();
    let mut index = 0usize;
    loop {
        let value = lo + index as f64 * step;
        if value > hi + step * 1e-6 {
            break;
        }
        // snap accumulated rounding so sweep values like d = 1 come out
        // exact and reports match exact-parameter runs bitwise
        values.push((value * 1e12).round() / 1e12);
        index += 1;
    }
    Ok(values)
}

/// PROFILE:N:T, or PROFILE:N:D:T for the alternating profile.
fn parse_entry(text: &str) -> Result<(ChainSpec, f64)> {
    let malformed = || {
        Error::Config(format!(
            "malformed entry '{text}', expected PROFILE:N[:D]:T"
        ))
    };
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [profile, n, t] => {
            let kind: ProfileKind = profile.trim().parse()?;
            let n: usize = n.trim().parse().map_err(|_| malformed())?;
            let t: f64 = t.trim().parse().map_err(|_| malformed())?;
            Ok((ChainSpec::build_profile(kind, n, None)?, t))
        }
        [profile, n, d, t] => {
            let kind: ProfileKind = profile.trim().parse()?;
            if kind != ProfileKind::Alternating {
                return Err(Error::Config(format!(
                    "the {kind} profile takes no alternation value; use PROFILE:N:T"
                )));
            }
            let n: usize = n.trim().parse().map_err(|_| malformed())?;
            let d: f64 = d.trim().parse().map_err(|_| malformed())?;
            let t: f64 = t.trim().parse().map_err(|_| malformed())?;
            Ok((ChainSpec::build_profile(kind, n, Some(d))?, t))
        }
        _ => Err(malformed()),
    }
}

fn into_text(bytes: Vec<u8>) -> String {
    String::from_utf8(bytes).expect("csv writers emit ascii")
}

/// Serializes with floats at 17 significant digits, newline-terminated.
fn to_json<T: Serialize>(value: &T) -> Result<String> {
    struct Float17;
    impl serde_json::ser::Formatter for Float17 {
        fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
        where
            W: ?Sized + std::io::Write,
        {
            write!(writer, "{value:.16e}")
        }
    }
    let mut buffer = Vec::new();
    let mut serializer = serde_json::Serializer::with_formatter(&mut buffer, Float17);
    value.serialize(&mut serializer)?;
    buffer.push(b'\n');
    Ok(into_text(buffer))
}

fn deliver(out_dir: &Option<PathBuf>, name: &str, content: &str) -> Result<()> {
    match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(name), content)?;
            Ok(())
        }
        None => {
            use std::io::Write;
            // a downstream pipe may close early (`spinline ... | head`);
            // that truncates the stream by request, not by failure
            match std::io::stdout().write_all(content.as_bytes()) {
                Err(err) if err.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                other => Ok(other?),
            }
        }
    }
}

fn emit_plot(out_dir: &Option<PathBuf>, wanted: bool, name: &str, body: &str) -> Result<()> {
    if !wanted {
        return Ok(());
    }
    let dir = out_dir
        .as_ref()
        .ok_or_else(|| Error::Config("--emit-plot-script needs --out DIR".into()))?;
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), body)?;
    Ok(())
}

const PLOT_MAP: &str = r#"#!/usr/bin/env python3
"""Scatter the creatable receiver parameters from map.csv."""
import csv

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

lam, beta = [], []
with open("map.csv", newline="") as fh:
    for row in csv.DictReader(fh):
        if row["beta1_defined"] == "true":
            lam.append(float(row["lambda"]))
            beta.append(float(row["beta1"]))

fig, ax = plt.subplots(figsize=(5.0, 4.0))
ax.scatter(lam, beta, s=3, c=beta, cmap="viridis", linewidths=0)
ax.set_xlabel("lambda")
ax.set_ylabel("beta1")
ax.set_xlim(0.5, 1.0)
ax.set_ylim(0.0, 1.0)
fig.tight_layout()
fig.savefig("map.png", dpi=160)
"#;

const PLOT_AMPLITUDES: &str = r#"#!/usr/bin/env python3
"""Plot transition moduli from amplitudes.csv, one curve per node."""
import collections
import csv

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

series = collections.defaultdict(list)
with open("amplitudes.csv", newline="") as fh:
    for row in csv.DictReader(fh):
        series[int(row["k"])].append((float(row["t"]), float(row["r"])))

fig, ax = plt.subplots(figsize=(6.0, 4.0))
for k in sorted(series):
    points = sorted(series[k])
    ax.plot([p[0] for p in points], [p[1] for p in points], label=f"k={k}")
ax.set_xlabel("t")
ax.set_ylabel("r")
ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig("amplitudes.png", dpi=160)
"#;

const PLOT_CRITICAL_LENGTH: &str = r#"#!/usr/bin/env python3
"""Plot peak transfer modulus against chain length from critical_length.json."""
import collections
import json
import math

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

with open("critical_length.json") as fh:
    report = json.load(fh)

groups = collections.defaultdict(list)
for record in report["records"]:
    groups[record["d"]].append((record["n"], record["r_max"]))

fig, ax = plt.subplots(figsize=(6.0, 4.0))
for d, points in groups.items():
    points.sort()
    label = "d=%s" % d if d is not None else report["family"]
    ax.plot([p[0] for p in points], [p[1] for p in points], lw=0.8, label=label)
ax.axhline(1.0 / math.sqrt(2.0), color="k", ls="--", lw=0.8)
if report["n_c"] is not None:
    ax.axvline(report["n_c"], color="r", ls=":", lw=0.8)
ax.set_xlabel("N")
ax.set_ylabel("r_max")
if len(groups) <= 12:
    ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig("critical_length.png", dpi=160)
"#;

const PLOT_SELECT: &str = r#"#!/usr/bin/env python3
"""Draw the transfer-modulus brackets from select.json."""
import json

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

with open("select.json") as fh:
    report = json.load(fh)

fig, ax = plt.subplots(figsize=(6.0, 0.6 * len(report["entries"]) + 1.5))
for row, entry in enumerate(report["entries"]):
    ax.plot([entry["q_min"], entry["q_max"]], [row, row], lw=6)
    label = "%s N=%d t=%.4g" % (entry["profile"], entry["n"], entry["t"])
    ax.annotate(label, (entry["q_min"], row + 0.18), fontsize=7)
ax.set_yticks([])
ax.set_xlabel("transfer modulus")
ax.set_title("all disjoint: %s" % report["all_disjoint"])
fig.tight_layout()
fig.savefig("select.png", dpi=160)
"#;
