//! `fracfreq` command-line front-end.
//!
//! Every command reads a plant (transfer-function text, canonical JSON, or
//! a path to either), optionally a controller, and writes CSV, JSON or SVG.
//! JSON outputs carry a `config` block echoing the effective settings.

pub mod output;
pub mod parse;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fracfreq::identify::{
    fit_linear, fit_nonlinear, FitResult, IdentifyError, ModelStructure, NonlinearFitOptions,
};
use fracfreq::response::ResponseError;
use fracfreq::{
    assess_stability, compose_open_loop, margins, nyquist_curve, sweep, FactoredController, FractionalTF,
    FrequencySweep, ModelError, PilDController, Verdict,
};
use serde_json::{json, Value};
use thiserror::Error;

pub use parse::{parse_tf_text, ParseError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Response(#[from] ResponseError),
    #[error(transparent)]
    Identify(#[from] IdentifyError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Process exit status for a completed run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Indeterminate,
}

impl Outcome {
    pub fn code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::Indeterminate => 2,
        }
    }
}

pub const INPUT_ERROR_CODE: i32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Bode,
    Nyquist,
    Margins,
    Stability,
    Compose,
    Fit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Weighting {
    /// W = 1 for every sample (or the file's weight column).
    #[default]
    Unit,
    /// W = 1/|F(ω)|.
    Relative,
}

impl Weighting {
    fn name(self) -> &'static str {
        match self {
            Weighting::Unit => "unit",
            Weighting::Relative => "relative",
        }
    }
}

/// Fit-specific settings.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub data: PathBuf,
    pub num_exponents: Vec<f64>,
    pub den_exponents: Vec<f64>,
    pub free_exponents: bool,
    pub weighting: Weighting,
    pub model_output: Option<PathBuf>,
    pub options: NonlinearFitOptions,
}

/// One fully resolved invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct JobConfig {
    pub command: Command,
    pub plant: Option<String>,
    pub controller: Option<String>,
    pub sweep: FrequencySweep,
    pub mirror: bool,
    pub output: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    /// Extra SVG alongside the CSV for `bode` and `nyquist`.
    pub svg: Option<PathBuf>,
    pub fit: Option<FitConfig>,
}

fn read_arg(arg: &str) -> Result<String, CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        Ok(fs::read_to_string(path)?)
    } else {
        Ok(arg.to_string())
    }
}

/// Plant from text, canonical JSON, or a path to either.
pub fn load_tf(arg: &str) -> Result<FractionalTF, CliError> {
    let text = read_arg(arg)?;
    let trimmed = text.trim();
    if trimmed.starts_with('{') {
        Ok(serde_json::from_str(trimmed)?)
    } else {
        Ok(parse_tf_text(trimmed)?)
    }
}

/// Controller JSON in summed (`K`, `Ti`, `Td`) or factored (`C`, `xi`,
/// `omega_n`) form, inline or from a file.
pub fn load_controller(arg: &str) -> Result<PilDController, CliError> {
    let text = read_arg(arg)?;
    let value: Value = serde_json::from_str(text.trim())?;
    let controller = if value.get("C").is_some() {
        let f: FactoredController = serde_json::from_value(value)?;
        f.to_pild()?
    } else {
        let c: PilDController = serde_json::from_value(value)?;
        c.validate()?;
        c
    };
    Ok(controller)
}

impl JobConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            plant: None,
            controller: None,
            sweep: FrequencySweep::default(),
            mirror: true,
            output: None,
            format: None,
            svg: None,
            fit: None,
        }
    }

    fn plant(&self) -> Result<FractionalTF, CliError> {
        let arg = self
            .plant
            .as_deref()
            .ok_or_else(|| CliError::Input("--plant is required".into()))?;
        load_tf(arg)
    }

    fn controller(&self) -> Result<Option<PilDController>, CliError> {
        self.controller.as_deref().map(load_controller).transpose()
    }

    /// Plant alone, or controller·plant when a controller is given.
    fn open_loop(&self) -> Result<FractionalTF, CliError> {
        let plant = self.plant()?;
        Ok(match self.controller()? {
            Some(c) => compose_open_loop(&c, &plant),
            None => plant,
        })
    }

    fn config_echo(&self) -> Result<Value, CliError> {
        let command = self.command.to_possible_value().expect("no skipped variants");
        let mut echo = json!({
            "command": command.get_name(),
            "omega_min": self.sweep.omega_min(),
            "omega_max": self.sweep.omega_max(),
            "points_per_decade": self.sweep.points_per_decade(),
        });
        if let Some(p) = &self.plant {
            echo["plant"] = serde_json::to_value(load_tf(p)?)?;
        }
        if let Some(c) = self.controller()? {
            echo["controller"] = serde_json::to_value(c)?;
        }
        if let Some(fit) = &self.fit {
            echo["weighting"] = json!(fit.weighting.name());
            echo["num_exponents"] = json!(fit.num_exponents);
            echo["den_exponents"] = json!(fit.den_exponents);
            echo["free_exponents"] = json!(fit.free_exponents);
            echo["fit_options"] = serde_json::to_value(fit.options)?;
        }
        Ok(echo)
    }

    fn format(&self, allowed: &[OutputFormat]) -> Result<OutputFormat, CliError> {
        let f = self.format.unwrap_or(allowed[0]);
        if allowed.contains(&f) {
            Ok(f)
        } else {
            Err(CliError::Input(format!("format {f:?} is not supported by this command")))
        }
    }
}

fn emit(path: Option<&Path>, stdout: &mut dyn Write, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes)?,
        None => stdout.write_all(bytes)?,
    }
    Ok(())
}

fn json_bytes(mut value: Value, config: Value) -> Result<Vec<u8>, CliError> {
    value["config"] = config;
    let mut out = serde_json::to_vec_pretty(&value)?;
    out.push(b'\n');
    Ok(out)
}

fn run_fit(fit: &FitConfig) -> Result<FitResult, CliError> {
    let mut data = output::read_measured_csv(fs::File::open(&fit.data)?)?;
    if fit.weighting == Weighting::Relative {
        data = data.with_relative_weights()?;
    }
    let mut structure = ModelStructure::new(fit.num_exponents.clone(), fit.den_exponents.clone())?;
    if fit.free_exponents {
        structure = structure.with_nonzero_exponents_free();
        let init = structure.free_exponents();
        Ok(fit_nonlinear(&data, &structure, &init, &fit.options)?)
    } else {
        Ok(fit_linear(&data, &structure, &fit.options.linear)?)
    }
}

/// Executes one job, writing the primary artifact to `job.output` or
/// `stdout`.
pub fn run(job: &JobConfig, stdout: &mut dyn Write) -> Result<Outcome, CliError> {
    let out = job.output.as_deref();
    match job.command {
        Command::Bode => {
            let format = job.format(&[OutputFormat::Csv, OutputFormat::Svg])?;
            let resp = sweep(&job.open_loop()?, &job.sweep)?;
            let svg = || output::bode_svg(&resp, &margins(&resp));
            match format {
                OutputFormat::Svg => emit(out, stdout, svg().as_bytes())?,
                _ => {
                    let mut buf = Vec::new();
                    output::write_response_csv(&resp, &mut buf)?;
                    emit(out, stdout, &buf)?;
                }
            }
            if let Some(p) = &job.svg {
                fs::write(p, svg())?;
            }
        }
        Command::Nyquist => {
            let format = job.format(&[OutputFormat::Csv, OutputFormat::Svg])?;
            let curve = nyquist_curve(&job.open_loop()?, &job.sweep, job.mirror)?;
            match format {
                OutputFormat::Svg => emit(out, stdout, output::nyquist_svg(&curve).as_bytes())?,
                _ => {
                    let mut buf = Vec::new();
                    output::write_curve_csv(&curve, &mut buf)?;
                    emit(out, stdout, &buf)?;
                }
            }
            if let Some(p) = &job.svg {
                fs::write(p, output::nyquist_svg(&curve))?;
            }
        }
        Command::Margins => {
            job.format(&[OutputFormat::Json])?;
            let m = margins(&sweep(&job.open_loop()?, &job.sweep)?);
            let mut value = serde_json::to_value(m)?;
            value["multiple_crossings"] = json!(m.multiple_crossings());
            emit(out, stdout, &json_bytes(value, job.config_echo()?)?)?;
        }
        Command::Stability => {
            job.format(&[OutputFormat::Json])?;
            let verdict = assess_stability(&job.open_loop()?, &job.sweep)?;
            let value = serde_json::to_value(&verdict)?;
            emit(out, stdout, &json_bytes(value, job.config_echo()?)?)?;
            if verdict.verdict == Verdict::Indeterminate {
                return Ok(Outcome::Indeterminate);
            }
        }
        Command::Compose => {
            job.format(&[OutputFormat::Json])?;
            let value = serde_json::to_value(job.open_loop()?)?;
            emit(out, stdout, &json_bytes(value, job.config_echo()?)?)?;
        }
        Command::Fit => {
            job.format(&[OutputFormat::Json])?;
            let fit_cfg = job
                .fit
                .as_ref()
                .ok_or_else(|| CliError::Input("fit requires --data".into()))?;
            let result = run_fit(fit_cfg)?;
            let config = job.config_echo()?;
            if let Some(p) = &fit_cfg.model_output {
                let mut model = serde_json::to_vec_pretty(&result.model)?;
                model.push(b'\n');
                fs::write(p, model)?;
            }
            emit(out, stdout, &json_bytes(serde_json::to_value(&result)?, config)?)?;
        }
    }
    Ok(Outcome::Success)
}

#[derive(Debug, Parser)]
#[command(name = "fracfreq", version, about = "Frequency-domain analysis of fractional-order control systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Args)]
pub struct SystemArgs {
    /// Plant: text such as "1/(0.8 s^2.2 + 0.5 s^0.9 + 1)", TF JSON, or a file path.
    #[arg(long)]
    pub plant: String,
    /// Controller JSON ({"K","Ti","Td","lambda","delta"} or {"C","xi","omega_n",...}) or a file path.
    #[arg(long)]
    pub controller: Option<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = fracfreq::response::DEFAULT_OMEGA_MIN)]
    pub omega_min: f64,
    #[arg(long, default_value_t = fracfreq::response::DEFAULT_OMEGA_MAX)]
    pub omega_max: f64,
    #[arg(long, env = "FRACFREQ_POINTS_PER_DECADE", default_value_t = fracfreq::response::DEFAULT_POINTS_PER_DECADE)]
    pub points_per_decade: usize,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Bode data as CSV (omega,re,im,mag_db,phase_deg) or SVG.
    Bode {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Also write an SVG plot here.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Nyquist curve as CSV (omega,re,im) or SVG.
    Nyquist {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        output: OutputArgs,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Only the positive-frequency branch.
        #[arg(long)]
        no_mirror: bool,
    },
    /// Gain and phase margins as JSON.
    Margins {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Closed-loop stability verdict as JSON; exit 2 when indeterminate.
    Stability {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Open-loop transfer function (controller · plant) as canonical JSON.
    Compose {
        #[command(flatten)]
        system: SystemArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Fit a model to measured data (CSV omega,re,im[,weight]).
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0", allow_hyphen_values = true)]
        num_exponents: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        den_exponents: Vec<f64>,
        /// Search the nonzero exponents, starting from the given values.
        #[arg(long)]
        free_exponents: bool,
        #[arg(long, value_enum, default_value_t = Weighting::Unit)]
        weighting: Weighting,
        /// Write the fitted model as TF JSON here.
        #[arg(long)]
        model_output: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

impl CliCommand {
    fn into_job(self) -> Result<JobConfig, CliError> {
        fn apply_sweep(job: &mut JobConfig, s: SweepArgs) -> Result<(), CliError> {
            job.sweep = FrequencySweep::new(s.omega_min, s.omega_max, s.points_per_decade)?;
            Ok(())
        }
        fn apply_system(job: &mut JobConfig, s: SystemArgs) {
            job.plant = Some(s.plant);
            job.controller = s.controller;
        }
        fn apply_output(job: &mut JobConfig, o: OutputArgs) {
            job.output = o.output;
            job.format = o.format;
        }
        let job = match self {
            CliCommand::Bode { system, sweep, output, svg } => {
                let mut job = JobConfig::new(Command::Bode);
                apply_system(&mut job, system);
                apply_sweep(&mut job, sweep)?;
                apply_output(&mut job, output);
                job.svg = svg;
                job
            }
            CliCommand::Nyquist { system, sweep, output, svg, no_mirror } => {
                let mut job = JobConfig::new(Command::Nyquist);
                apply_system(&mut job, system);
                apply_sweep(&mut job, sweep)?;
                apply_output(&mut job, output);
                job.svg = svg;
                job.mirror = !no_mirror;
                job
            }
            CliCommand::Margins { system, sweep, output } => {
                let mut job = JobConfig::new(Command::Margins);
                apply_system(&mut job, system);
                apply_sweep(&mut job, sweep)?;
                apply_output(&mut job, output);
                job
            }
            CliCommand::Stability { system, sweep, output } => {
                let mut job = JobConfig::new(Command::Stability);
                apply_system(&mut job, system);
                apply_sweep(&mut job, sweep)?;
                apply_output(&mut job, output);
                job
            }
            CliCommand::Compose { system, output } => {
                let mut job = JobConfig::new(Command::Compose);
                apply_system(&mut job, system);
                apply_output(&mut job, output);
                job
            }
            CliCommand::Fit {
                data,
                num_exponents,
                den_exponents,
                free_exponents,
                weighting,
                model_output,
                output,
            } => {
                let mut job = JobConfig::new(Command::Fit);
                apply_output(&mut job, output);
                job.fit = Some(FitConfig {
                    data,
                    num_exponents,
                    den_exponents,
                    free_exponents,
                    weighting,
                    model_output,
                    options: NonlinearFitOptions::default(),
                });
                job
            }
        };
        Ok(job)
    }
}

/// Parses `args`, runs the job and returns the process exit code. Errors
/// go to `stderr` as a single line.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { INPUT_ERROR_CODE } else { 0 };
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
            } else {
                let _ = write!(stdout, "{e}");
            }
            return code;
        }
    };
    match cli.command.into_job().and_then(|job| run(&job, stdout)) {
        Ok(outcome) => outcome.code(),
        Err(e) => {
            let line = e.to_string().replace('\n', " ");
            let _ = writeln!(stderr, "error: {line}");
            INPUT_ERROR_CODE
        }
    }
}
