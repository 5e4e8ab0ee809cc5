use anyhow::Result;
use vlcnoise::dataset::{build_dataset, save_dataset, DatasetSpec, MANIFEST_FILE, PAIRS_FILE};
use vlcnoise::seed::sub_seed;
use vlcnoise::signal::{ChannelParams, OokPattern};
use vlcnoise::synth::ComponentSpec;

use super::{check_name, Context, Outcome};
use crate::args::DatasetArgs;

const DATASET_STREAM: u64 = 0;

pub fn dataset(ctx: &Context, args: &DatasetArgs) -> Result<Outcome> {
    check_name(&args.name)?;
    let pattern = OokPattern {
        on_duration_s: args.on_ms * 1e-3,
        off_duration_s: args.off_ms * 1e-3,
        amplitude_on: args.amplitude_on,
        amplitude_off: args.amplitude_off,
        n_pulses: 1,
    };
    let window = args.window as usize;
    let sample_rate_hz = args
        .sample_rate
        .unwrap_or(window as f64 / (pattern.on_duration_s + pattern.off_duration_s));
    let noise = if args.components.is_empty() {
        vec![
            ComponentSpec { alpha: 0.0, sigma: 0.2, weight: 1.0 },
            ComponentSpec { alpha: 2.0, sigma: 0.01, weight: 1.0 },
        ]
    } else {
        args.components.clone()
    };
    let spec = DatasetSpec {
        label: args.label.clone(),
        count: args.count as usize,
        window_length: window,
        sample_rate_hz,
        pattern,
        channel: ChannelParams {
            responsivity: args.responsivity,
            impulse_response: args.impulse_response.clone(),
            dc_offset: args.dc_offset,
        },
        noise,
        noise_mean: args.noise_mean,
        discard_prefix: 0,
        seed: sub_seed(ctx.seed, DATASET_STREAM),
    };
    let pairs = build_dataset(&spec)?;
    let dir = ctx.path(&args.name);
    save_dataset(&pairs, Some(&spec), &dir)?;
    println!(
        "dataset: {} pairs of {} samples at {} Hz -> {}",
        pairs.len(),
        window,
        sample_rate_hz,
        dir.display()
    );
    let name = std::path::Path::new(&args.name);
    Ok(Outcome {
        stem: args.name.clone(),
        outputs: vec![name.join(MANIFEST_FILE), name.join(PAIRS_FILE)],
    })
}
