use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use vlcnoise::synth::{ComponentSpec, ConvolutionMethod};

/// Noise characterization, synthesis and pulse denoising for optical OOK links.
#[derive(Debug, Parser)]
#[command(name = "vlcnoise", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Master seed; every random stream of a command is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory for all output files (created if missing).
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// File format for written captures.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Ljung-Box, Allan variance or noise coefficients of a capture.
    Analyze {
        #[command(subcommand)]
        analysis: Analysis,
    },
    /// Synthesize white or colored noise.
    Synth(SynthArgs),
    /// Build a paired noisy/clean OOK dataset.
    Dataset(DatasetArgs),
    /// Train the denoising autoencoder.
    Train(TrainArgs),
    /// Run captures through a trained model.
    Denoise(DenoiseArgs),
    /// RMSE per scenario label.
    Eval(EvalArgs),
    /// Re-execute the command recorded in a run manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    /// Ljung-Box Q statistics against chi-square thresholds.
    LjungBox(LjungBoxArgs),
    /// Overlapping Allan variance on a log-spaced cluster grid.
    Avar(AvarArgs),
    /// White, flicker and random-walk coefficients from the Allan deviation.
    Coeffs(CoeffsArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LjungBoxArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_lag: u64,
    /// Significance level.
    #[arg(long, default_value_t = 0.05, value_parser = parse_probability)]
    pub alpha: f64,
    /// Use raw products instead of subtracting the sample mean.
    #[arg(long)]
    pub no_demean: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AvarArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub points_per_decade: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CoeffsArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub points_per_decade: u64,
    #[arg(long, default_value_t = 0.15)]
    pub slope_tolerance: f64,
    #[arg(long, default_value_t = 1.0)]
    pub window_decades: f64,
    #[arg(long, default_value_t = 0.03)]
    pub max_residual: f64,
    #[arg(long, default_value_t = 0.1)]
    pub max_cluster_fraction: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    /// Spectral exponent of a single component, in [0, 2].
    #[arg(long, value_parser = parse_alpha, conflicts_with = "components")]
    pub alpha: Option<f64>,
    /// Driving-noise standard deviation of the single component.
    #[arg(long, default_value_t = 1.0, requires = "alpha")]
    pub sigma: f64,
    /// Composite component `alpha:sigma[:weight]`; repeatable.
    #[arg(long = "component", value_parser = parse_component)]
    pub components: Vec<ComponentSpec>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub length: u64,
    #[arg(long, default_value_t = 0.0)]
    pub mean: f64,
    #[arg(long, default_value_t = 0)]
    pub discard_prefix: u64,
    #[arg(long, default_value_t = 1.0)]
    pub sample_rate: f64,
    #[arg(long, value_enum, default_value_t = Method::Auto)]
    pub method: Method,
    #[arg(long)]
    pub label: Option<String>,
    /// Output file stem.
    #[arg(long, default_value = "noise")]
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Auto,
    Direct,
    Fft,
}

impl From<Method> for ConvolutionMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Auto => ConvolutionMethod::Auto,
            Method::Direct => ConvolutionMethod::Direct,
            Method::Fft => ConvolutionMethod::Fft,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DatasetArgs {
    /// Number of pairs.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub count: u64,
    /// Samples per window.
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(2..))]
    pub window: u64,
    /// Defaults to one ON+OFF period per window.
    #[arg(long)]
    pub sample_rate: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub on_ms: f64,
    #[arg(long, default_value_t = 4.0)]
    pub off_ms: f64,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude_on: f64,
    #[arg(long, default_value_t = 0.0)]
    pub amplitude_off: f64,
    /// Noise component `alpha:sigma[:weight]`; repeatable. Defaults to
    /// `0:0.2` plus `2:0.01`.
    #[arg(long = "component", value_parser = parse_component)]
    pub components: Vec<ComponentSpec>,
    #[arg(long, default_value_t = 0.0)]
    pub noise_mean: f64,
    #[arg(long, default_value_t = 1.0)]
    pub responsivity: f64,
    /// Channel taps, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub impulse_response: Vec<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub dc_offset: f64,
    /// Scenario label stored with every pair.
    #[arg(long, default_value = "synthetic")]
    pub label: String,
    /// Output directory name.
    #[arg(long, default_value = "dataset")]
    pub name: String,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    /// Dataset directories; all must share the window length.
    #[arg(long = "dataset", required = true)]
    pub datasets: Vec<PathBuf>,
    /// Encoder filter counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "128,32")]
    pub filters: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub kernel: usize,
    #[arg(long, default_value_t = 2)]
    pub stride: usize,
    #[arg(long, default_value_t = 3)]
    pub output_kernel: usize,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 50)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.9)]
    pub beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    pub beta2: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 4.0, conflicts_with = "no_max_norm")]
    pub max_norm: f64,
    #[arg(long)]
    pub no_max_norm: bool,
    #[arg(long, default_value_t = 0.3)]
    pub holdout: f64,
    /// Output file stem.
    #[arg(long, default_value = "model")]
    pub name: String,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DenoiseArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Feed captures as they are instead of rescaling them to [0, 1].
    #[arg(long)]
    pub no_normalize: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    #[arg(long, requires = "datasets", conflicts_with_all = ["denoised", "clean"])]
    pub model: Option<PathBuf>,
    #[arg(long = "dataset")]
    pub datasets: Vec<PathBuf>,
    /// Compare two captures directly.
    #[arg(long, requires = "clean")]
    pub denoised: Option<PathBuf>,
    #[arg(long, requires = "denoised")]
    pub clean: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    pub manifest: PathBuf,
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.trim().parse::<f64>().map_err(|e| format!("`{s}`: {e}"))
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a = parse_f64(s)?;
    if (0.0..=2.0).contains(&a) {
        Ok(a)
    } else {
        Err(format!("alpha must lie in [0, 2], got {a}"))
    }
}

fn parse_probability(s: &str) -> Result<f64, String> {
    let p = parse_f64(s)?;
    if p > 0.0 && p < 1.0 {
        Ok(p)
    } else {
        Err(format!("expected a value in (0, 1), got {p}"))
    }
}

fn parse_component(s: &str) -> Result<ComponentSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if !(2..=3).contains(&parts.len()) {
        return Err(format!("expected alpha:sigma[:weight], got `{s}`"));
    }
    let alpha = parse_alpha(parts[0])?;
    let sigma = parse_f64(parts[1])?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(format!("sigma must be positive, got {sigma}"));
    }
    let weight = match parts.get(2) {
        Some(w) => parse_f64(w)?,
        None => 1.0,
    };
    Ok(ComponentSpec { alpha, sigma, weight })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn component_syntax() {
        let c = parse_component("2:0.01").unwrap();
        assert_eq!((c.alpha, c.sigma, c.weight), (2.0, 0.01, 1.0));
        assert_eq!(parse_component("1:2:0.5").unwrap().weight, 0.5);
        assert!(parse_component("3:1").is_err());
        assert!(parse_component("1").is_err());
        assert!(parse_component("1:-1").is_err());
    }

    #[test]
    fn alpha_out_of_range_is_a_usage_error() {
        let err = Cli::try_parse_from(["vlcnoise", "synth", "--alpha", "3", "--length", "10"]).unwrap_err();
        assert_eq!(err.kind(), clap::error::ErrorKind::ValueValidation);
    }

    #[test]
    fn zero_count_is_rejected() {
        assert!(Cli::try_parse_from(["vlcnoise", "dataset", "--count", "0"]).is_err());
    }

    #[test]
    fn globals_after_subcommand() {
        let cli = Cli::try_parse_from(["vlcnoise", "synth", "--alpha", "1", "--length", "8", "--seed", "7"]).unwrap();
        assert_eq!(cli.global.seed, 7);
    }

    #[test]
    fn verify_cli() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
