mod analyze;
mod dataset;
mod model;
mod synth;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};

use crate::args::{Analysis, Command, Format, GlobalArgs};
use crate::manifest::{manifest_file_name, RunManifest};
use crate::table::write_json;
use crate::UsageError;
use vlcnoise::signal::CaptureFormat;

/// Per-run settings shared by every command.
pub struct Context {
    pub out_dir: PathBuf,
    pub seed: u64,
    pub format: Format,
}

impl Context {
    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn capture_format(&self) -> CaptureFormat {
        match self.format {
            Format::Csv => CaptureFormat::Csv,
            Format::Json => CaptureFormat::Json,
        }
    }
}

/// What a command read and wrote.
pub struct Outcome {
    /// Stem of the run manifest file.
    pub stem: String,
    pub outputs: Vec<PathBuf>,
}

pub fn run(command: Command, global: &GlobalArgs) -> Result<()> {
    if let Command::Rerun(args) = command {
        let recorded = RunManifest::load(&args.manifest)?;
        if matches!(recorded.params, Command::Rerun(_)) {
            return Err(UsageError("a run manifest cannot record a rerun".into()).into());
        }
        let global = GlobalArgs {
            seed: recorded.seed,
            format: recorded.format,
            output_dir: global.output_dir.clone(),
        };
        return run(recorded.params, &global);
    }

    let ctx = Context {
        out_dir: global.output_dir.clone().unwrap_or_else(|| PathBuf::from(".")),
        seed: global.seed,
        format: global.format,
    };
    fs::create_dir_all(&ctx.out_dir).with_context(|| format!("creating {}", ctx.out_dir.display()))?;

    let mut command = command;
    let inputs = absolutize_inputs(&mut command)?;
    let outcome = match &command {
        Command::Analyze { analysis } => match analysis {
            Analysis::LjungBox(a) => analyze::ljung_box(&ctx, a)?,
            Analysis::Avar(a) => analyze::avar(&ctx, a)?,
            Analysis::Coeffs(a) => analyze::coeffs(&ctx, a)?,
        },
        Command::Synth(a) => synth::synth(&ctx, a)?,
        Command::Dataset(a) => dataset::dataset(&ctx, a)?,
        Command::Train(a) => model::train(&ctx, a)?,
        Command::Denoise(a) => model::denoise(&ctx, a)?,
        Command::Eval(a) => model::eval(&ctx, a)?,
        Command::Rerun(_) => unreachable!("handled above"),
    };

    let manifest = RunManifest {
        tool: "vlcnoise".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command_name(&command).into(),
        seed: ctx.seed,
        format: ctx.format,
        params: command,
        inputs,
        outputs: outcome.outputs,
    };
    write_json(&ctx.path(&manifest_file_name(&outcome.stem)), &manifest)
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Analyze { analysis } => match analysis {
            Analysis::LjungBox(_) => "analyze ljung-box",
            Analysis::Avar(_) => "analyze avar",
            Analysis::Coeffs(_) => "analyze coeffs",
        },
        Command::Synth(_) => "synth",
        Command::Dataset(_) => "dataset",
        Command::Train(_) => "train",
        Command::Denoise(_) => "denoise",
        Command::Eval(_) => "eval",
        Command::Rerun(_) => "rerun",
    }
}

fn absolute(path: &mut PathBuf) -> Result<PathBuf> {
    let abs = fs::canonicalize(&*path).with_context(|| format!("input {}", path.display()))?;
    *path = abs.clone();
    Ok(abs)
}

/// Rewrites every input path to its canonical absolute form and returns
/// the list.
fn absolutize_inputs(command: &mut Command) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<&mut PathBuf> = Vec::new();
    match command {
        Command::Analyze { analysis } => match analysis {
            Analysis::LjungBox(a) => paths.push(&mut a.input),
            Analysis::Avar(a) => paths.push(&mut a.input),
            Analysis::Coeffs(a) => paths.push(&mut a.input),
        },
        Command::Synth(_) | Command::Dataset(_) | Command::Rerun(_) => {}
        Command::Train(a) => paths.extend(a.datasets.iter_mut()),
        Command::Denoise(a) => {
            paths.push(&mut a.model);
            paths.extend(a.inputs.iter_mut());
        }
        Command::Eval(a) => {
            paths.extend(a.model.iter_mut());
            paths.extend(a.datasets.iter_mut());
            paths.extend(a.denoised.iter_mut());
            paths.extend(a.clean.iter_mut());
        }
    }
    paths.into_iter().map(absolute).collect()
}

/// File stem of an input path, for naming derived outputs.
pub fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "capture".into())
}

/// Rejects output names that would escape the output directory.
pub fn check_name(name: &str) -> Result<()> {
    if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
        return Err(UsageError(format!("invalid output name `{name}`")).into());
    }
    Ok(())
}
