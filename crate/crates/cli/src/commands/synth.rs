use anyhow::Result;
use vlcnoise::seed::sub_seed;
use vlcnoise::signal::save_capture;
use vlcnoise::synth::{synthesize, ComponentSpec, NoiseRecipe};

use super::{check_name, Context, Outcome};
use crate::args::SynthArgs;
use crate::UsageError;

/// Seed counter of the noise streams under the master seed.
const NOISE_STREAM: u64 = 0;

pub fn synth(ctx: &Context, args: &SynthArgs) -> Result<Outcome> {
    check_name(&args.name)?;
    let components = match args.alpha {
        Some(alpha) => vec![ComponentSpec {
            alpha,
            sigma: args.sigma,
            weight: 1.0,
        }],
        None if !args.components.is_empty() => args.components.clone(),
        None => return Err(UsageError("give --alpha or at least one --component".into()).into()),
    };
    let recipe = NoiseRecipe {
        components,
        length: args.length as usize,
        seed: sub_seed(ctx.seed, NOISE_STREAM),
        mean: args.mean,
        discard_prefix: args.discard_prefix as usize,
        sample_rate_hz: args.sample_rate,
        method: args.method.into(),
    };
    let mut ts = synthesize(&recipe)?;
    if let Some(label) = &args.label {
        ts = ts.with_label(label.clone());
    }
    let format = ctx.capture_format();
    let file = format!("{}.{}", args.name, format.extension());
    save_capture(&ts, &ctx.path(&file), format)?;
    println!("synth: {} samples at {} Hz -> {file}", ts.len(), ts.sample_rate_hz());
    Ok(Outcome {
        stem: args.name.clone(),
        outputs: vec![file.into()],
    })
}
