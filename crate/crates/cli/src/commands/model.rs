use std::path::PathBuf;

use anyhow::{Context as _, Result};
use serde_json::json;
use vlcnoise::cae::{
    load_model, pooled_rmse, rmse, save_model, train as fit, AdamConfig, CaeArchitecture, CaeModel,
    LayerSpec, TrainConfig,
};
use vlcnoise::dataset::{load_dataset, DenoisingPair};
use vlcnoise::seed::sub_seed;
use vlcnoise::signal::{load_capture, normalize_unit, save_capture, CaptureFormat};
use vlcnoise::TimeSeries;

use super::{check_name, stem_of, Context, Outcome};
use crate::args::{DenoiseArgs, EvalArgs, TrainArgs};
use crate::table::{write_json, Opt, Table};
use crate::UsageError;

const INIT_STREAM: u64 = 0;
const TRAIN_STREAM: u64 = 1;

fn load_pairs(dirs: &[PathBuf]) -> Result<Vec<DenoisingPair>> {
    let mut pairs = Vec::new();
    for dir in dirs {
        let (_, mut more) = load_dataset(dir).with_context(|| format!("dataset {}", dir.display()))?;
        if let (Some(a), Some(b)) = (pairs.first(), more.first()) {
            let (a, b): (&DenoisingPair, &DenoisingPair) = (a, b);
            if a.clean.len() != b.clean.len() {
                return Err(UsageError(format!(
                    "dataset {} has windows of {} samples, earlier datasets have {}",
                    dir.display(),
                    b.clean.len(),
                    a.clean.len()
                ))
                .into());
            }
        }
        pairs.append(&mut more);
    }
    Ok(pairs)
}

fn denoise_all(model: &CaeModel, pairs: &[&DenoisingPair]) -> Result<Vec<Vec<f64>>> {
    Ok(pairs
        .iter()
        .map(|p| model.forward(p.noisy.samples()))
        .collect::<vlcnoise::Result<_>>()?)
}

/// Pooled `(noisy, denoised)` RMSE against the clean signals.
fn rmse_pair(model: &CaeModel, pairs: &[&DenoisingPair]) -> Result<(f64, f64)> {
    let outs = denoise_all(model, pairs)?;
    let noisy = pooled_rmse(pairs.iter().map(|p| (p.noisy.samples(), p.clean.samples())))?;
    let denoised = pooled_rmse(outs.iter().zip(pairs).map(|(o, p)| (&o[..], p.clean.samples())))?;
    Ok((noisy, denoised))
}

pub fn train(ctx: &Context, args: &TrainArgs) -> Result<Outcome> {
    check_name(&args.name)?;
    let pairs = load_pairs(&args.datasets)?;
    let input_length = pairs.first().map_or(0, |p| p.clean.len());
    let architecture = CaeArchitecture {
        input_length,
        encoder: args
            .filters
            .iter()
            .map(|&filters| LayerSpec {
                filters,
                kernel_size: args.kernel,
                stride: args.stride,
            })
            .collect(),
        output_kernel: args.output_kernel,
    };
    let model = CaeModel::new(architecture, sub_seed(ctx.seed, INIT_STREAM))?;
    let cfg = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch_size,
        adam: AdamConfig {
            lr: args.lr,
            beta1: args.beta1,
            beta2: args.beta2,
            epsilon: args.epsilon,
        },
        seed: sub_seed(ctx.seed, TRAIN_STREAM),
        max_norm: (!args.no_max_norm).then_some(args.max_norm),
        holdout_fraction: args.holdout,
    };
    let report = fit(model, &pairs, &cfg)?;

    let model_file = format!("{}.cae", args.name);
    save_model(&report.model, &ctx.path(&model_file))?;

    let history_file = format!("{}.history.csv", args.name);
    let mut table = Table::new(&["epoch", "train_loss", "holdout_loss"]);
    table.row(&[&0, &report.initial_train_loss, &Opt(report.initial_holdout_loss)]);
    for e in &report.history {
        table.row(&[&e.epoch, &e.train_loss, &Opt(e.holdout_loss)]);
    }
    table.write(&ctx.path(&history_file))?;

    let holdout: Vec<&DenoisingPair> = report.split.holdout.iter().map(|&i| &pairs[i]).collect();
    let holdout_rmse = if holdout.is_empty() {
        None
    } else {
        Some(rmse_pair(&report.model, &holdout)?)
    };
    let summary_file = format!("{}.json", args.name);
    write_json(
        &ctx.path(&summary_file),
        &json!({
            "architecture": report.model.architecture,
            "parameters": report.model.parameter_count(),
            "config": cfg,
            "pairs": pairs.len(),
            "train_pairs": report.split.train.len(),
            "holdout_pairs": report.split.holdout.len(),
            "initial_train_loss": report.initial_train_loss,
            "initial_holdout_loss": report.initial_holdout_loss,
            "final_train_loss": report.history.last().map(|e| e.train_loss),
            "final_holdout_loss": report.history.last().and_then(|e| e.holdout_loss),
            "holdout_rmse_noisy": holdout_rmse.map(|r| r.0),
            "holdout_rmse_denoised": holdout_rmse.map(|r| r.1),
        }),
    )?;
    if let Some((noisy, denoised)) = holdout_rmse {
        println!("train: held-out RMSE {noisy:.6} noisy -> {denoised:.6} denoised");
    }
    Ok(Outcome {
        stem: args.name.clone(),
        outputs: vec![model_file.into(), history_file.into(), summary_file.into()],
    })
}

pub fn denoise(ctx: &Context, args: &DenoiseArgs) -> Result<Outcome> {
    let model = load_model(&args.model)?;
    let format = ctx.capture_format();
    let mut outputs = Vec::new();
    for input in &args.inputs {
        let mut ts = load_capture(input, CaptureFormat::from_path(input))?;
        if ts.len() != model.input_length() {
            return Err(vlcnoise::Error::LengthMismatch {
                expected: model.input_length(),
                actual: ts.len(),
            })
            .with_context(|| format!("{} does not fit the model input", input.display()));
        }
        if !args.no_normalize {
            ts = normalize_unit(&ts)?;
        }
        let out = ts.with_samples(model.forward(ts.samples())?)?;
        let file = format!("{}.denoised.{}", stem_of(input), format.extension());
        save_capture(&out, &ctx.path(&file), format)?;
        outputs.push(PathBuf::from(file));
    }
    println!("denoise: {} captures", outputs.len());
    Ok(Outcome {
        stem: "denoise".into(),
        outputs,
    })
}

fn load(path: &std::path::Path) -> Result<TimeSeries> {
    Ok(load_capture(path, CaptureFormat::from_path(path))?)
}

pub fn eval(ctx: &Context, args: &EvalArgs) -> Result<Outcome> {
    match (&args.model, &args.denoised, &args.clean) {
        (Some(model), None, None) => eval_model(ctx, model, &args.datasets),
        (None, Some(denoised), Some(clean)) => {
            let (d, c) = (load(denoised)?, load(clean)?);
            let value = rmse(&d, &c)?;
            let label = c.label().unwrap_or("capture").to_string();
            let mut table = Table::new(&["label", "samples", "rmse"]);
            table.row(&[&label, &c.len(), &value]);
            table.write(&ctx.path("eval.csv"))?;
            println!("{label}: RMSE {value}");
            Ok(Outcome {
                stem: "eval".into(),
                outputs: vec!["eval.csv".into()],
            })
        }
        _ => Err(UsageError("eval needs --model with --dataset, or --denoised with --clean".into()).into()),
    }
}

fn eval_model(ctx: &Context, model: &std::path::Path, datasets: &[PathBuf]) -> Result<Outcome> {
    let model = load_model(model)?;
    let pairs = load_pairs(datasets)?;
    let mut labels: Vec<&str> = Vec::new();
    for p in &pairs {
        if !labels.contains(&p.label.as_str()) {
            labels.push(&p.label);
        }
    }
    let mut table = Table::new(&["label", "pairs", "noisy_rmse", "denoised_rmse"]);
    for label in labels {
        let group: Vec<&DenoisingPair> = pairs.iter().filter(|p| p.label == label).collect();
        let (noisy, denoised) = rmse_pair(&model, &group)?;
        table.row(&[&label, &group.len(), &noisy, &denoised]);
        println!("{label}: RMSE {noisy:.6} noisy -> {denoised:.6} denoised ({} pairs)", group.len());
    }
    table.write(&ctx.path("eval.csv"))?;
    Ok(Outcome {
        stem: "eval".into(),
        outputs: vec!["eval.csv".into()],
    })
}
