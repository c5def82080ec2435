use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use iemisim_cli::config::{load_config_file, CalibrationSection, ConfigError};
use iemisim_cli::figures::{load_figure, FIGURES};
use iemisim_cli::{format_number, load_experiment, run_series, write_outputs, Experiment, Format, Mode};
use iemisim_core::coupling::InjectionPoint;
use iemisim_core::scenario::{calibrate_scenario, CalibrationTarget, Knob, Metric};
use iemisim_core::{CalibrationError, ScenarioError};

#[derive(Parser)]
#[command(
    name = "iemisim",
    version,
    about = "Simulate injected offsets in power-converter feedback loops"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Directory for result files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Both)]
    format: Format,
    /// Worker threads for sweep points (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Suppress progress messages.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a scenario file and list every problem.
    Validate { config: PathBuf },
    /// Run the frequency, power or distance sweep of a scenario.
    Sweep { config: PathBuf },
    /// Run the timeline of a scenario.
    Charge { config: PathBuf },
    /// Fit one coupling peak so the scenario hits a target, e.g.
    /// `--target delta_i=1.0 --knob current_feedback:0`.
    Calibrate {
        config: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long)]
        knob: Option<String>,
    },
    /// Run a bundled scenario by id.
    Reproduce {
        id: Option<String>,
        /// List the bundled ids.
        #[arg(long)]
        list: bool,
    },
    /// Print the scenario file reference.
    Reference,
}

enum Failure {
    Invalid(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::Runtime(e.to_string()),
            ConfigError::Invalid(_) => Failure::Invalid(e.to_string()),
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Invalid(m) => Failure::Invalid(m),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<CalibrationError> for Failure {
    fn from(e: CalibrationError) -> Self {
        match e {
            CalibrationError::MissingKnob { .. } => Failure::Invalid(e.to_string()),
            CalibrationError::Scenario(s) => s.into(),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn io(e: std::io::Error) -> Failure {
    Failure::Runtime(e.to_string())
}

struct Ctx {
    out: PathBuf,
    format: Format,
    quiet: bool,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn execute(ctx: &Ctx, exp: &Experiment, mode: Mode) -> Result<(), Failure> {
    let s = &exp.scenario;
    match mode {
        Mode::Sweep if s.sweep.is_none() => {
            return Err(Failure::Invalid(format!("{}: scenario has no [sweep]", s.name)))
        }
        Mode::Timeline if s.timeline.is_none() => {
            return Err(Failure::Invalid(format!(
                "{}: scenario has no [timeline]",
                s.name
            )))
        }
        _ => {}
    }
    let series = run_series(s, &exp.output, mode)?;
    let written = write_outputs(&ctx.out, s, &exp.output, &series, mode, ctx.format).map_err(io)?;
    for p in written {
        ctx.note(format!("wrote {}", p.display()));
    }
    Ok(())
}

fn parse_target(spec: &str) -> Result<CalibrationTarget, Failure> {
    let bad = || {
        Failure::Invalid(format!(
            "--target {spec:?}: expected <metric>=<value> with metric delta_i, delta_v, i_real or v_real"
        ))
    };
    let (m, v) = spec.split_once('=').ok_or_else(bad)?;
    Ok(CalibrationTarget {
        metric: Metric::from_name(m.trim()).ok_or_else(bad)?,
        value: v.trim().parse().map_err(|_| bad())?,
    })
}

fn parse_knob(spec: Option<&str>, exp: &Experiment) -> Result<Knob, Failure> {
    let points = [
        InjectionPoint::VoltageFeedback,
        InjectionPoint::CurrentFeedback,
        InjectionPoint::ProtectionMonitor,
    ];
    match spec {
        Some(k) => {
            let (p, i) = k.split_once(':').unwrap_or((k, "0"));
            let point = InjectionPoint::from_name(p.trim())
                .ok_or_else(|| Failure::Invalid(format!("--knob {k:?}: unknown injection point")))?;
            let peak = i
                .trim()
                .parse()
                .map_err(|_| Failure::Invalid(format!("--knob {k:?}: peak index must be an integer")))?;
            Ok(Knob { point, peak })
        }
        None => {
            let all: Vec<Knob> = points
                .iter()
                .flat_map(|&point| {
                    let n = exp.scenario.profile(point).map_or(0, |p| p.peaks.len());
                    (0..n).map(move |peak| Knob { point, peak })
                })
                .collect();
            match all.as_slice() {
                [one] => Ok(*one),
                _ => Err(Failure::Invalid(format!(
                    "scenario has {} coupling peaks; choose one with --knob <point>:<index>",
                    all.len()
                ))),
            }
        }
    }
}

fn calibrate(ctx: &Ctx, path: &Path, target: &str, knob: Option<&str>) -> Result<(), Failure> {
    let exp = load_experiment(path)?;
    let (mut doc, _) = load_config_file(path)?;
    let target = parse_target(target)?;
    let knob = parse_knob(knob, &exp)?;
    let fitted = calibrate_scenario(&exp.scenario, target, knob)?;
    let rec = fitted.calibration.expect("calibration sets its record");
    let Some(peak) = doc.coupling.peaks_mut(knob.point).get_mut(knob.peak) else {
        return Err(Failure::Invalid(format!(
            "coupling.{} has no peak {}",
            knob.point.name(),
            knob.peak
        )));
    };
    peak.peak_kappa = rec.kappa;
    doc.calibration = Some(CalibrationSection::from_record(&rec));
    let text = toml::to_string_pretty(&doc).map_err(|e| Failure::Runtime(e.to_string()))?;
    std::fs::create_dir_all(&ctx.out).map_err(io)?;
    let dest = ctx.out.join(format!("{}.calibrated.toml", exp.scenario.name));
    std::fs::write(&dest, text).map_err(io)?;
    ctx.note(format!("wrote {}", dest.display()));
    println!(
        "{}[{}].peak_kappa = {}  ({} = {})",
        knob.point.name(),
        knob.peak,
        rec.kappa,
        rec.target.metric.name(),
        format_number(rec.achieved)
    );
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let ctx = Ctx {
        out: cli.out.clone(),
        format: cli.format,
        quiet: cli.quiet,
    };
    match &cli.cmd {
        Cmd::Validate { config } => {
            let exp = load_experiment(config)?;
            println!("{}: ok", exp.scenario.name);
            Ok(())
        }
        Cmd::Sweep { config } => execute(&ctx, &load_experiment(config)?, Mode::Sweep),
        Cmd::Charge { config } => execute(&ctx, &load_experiment(config)?, Mode::Timeline),
        Cmd::Calibrate { config, target, knob } => calibrate(&ctx, config, target, knob.as_deref()),
        Cmd::Reproduce { id, list } => match (id, list) {
            (_, true) => {
                for f in FIGURES {
                    println!("{:<12} {}", f.id, f.about);
                }
                Ok(())
            }
            (Some(id), false) => execute(&ctx, &load_figure(id)?, Mode::Auto),
            (None, false) => Err(Failure::Invalid("reproduce needs an id (see --list)".into())),
        },
        Cmd::Reference => {
            print!("{}", iemisim_cli::config::reference_markdown());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let run = || dispatch(&cli);
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(run),
            Err(e) => Err(Failure::Runtime(e.to_string())),
        },
        None => run(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
