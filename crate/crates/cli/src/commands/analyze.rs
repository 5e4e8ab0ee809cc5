use anyhow::Result;
use serde_json::json;
use vlcnoise::allan::{allan_variance, default_cluster_grid, extract_coefficients_with, SegmentOptions};
use vlcnoise::signal::{load_capture, CaptureFormat};
use vlcnoise::stats::{ljung_box as lb_test, LjungBoxOptions};
use vlcnoise::TimeSeries;

use super::{Context, Outcome};
use crate::args::{AvarArgs, CoeffsArgs, LjungBoxArgs};
use crate::table::{write_json, Table};

fn load(path: &std::path::Path) -> Result<TimeSeries> {
    Ok(load_capture(path, CaptureFormat::from_path(path))?)
}

pub fn ljung_box(ctx: &Context, args: &LjungBoxArgs) -> Result<Outcome> {
    let ts = load(&args.input)?;
    let opts = LjungBoxOptions {
        max_lag: args.max_lag as usize,
        alpha: args.alpha,
        demean: !args.no_demean,
    };
    let r = lb_test(&ts, &opts)?;
    let mut table = Table::new(&["lag", "q_stat", "threshold", "reject"]);
    for (i, lag) in r.lags().enumerate() {
        table.row(&[&lag, &r.q_stats[i], &r.thresholds[i], &r.reject[i]]);
    }
    table.write(&ctx.path("ljung_box.csv"))?;
    let rejected: Vec<usize> = r.lags().filter(|&m| r.reject[m - 1]).collect();
    write_json(
        &ctx.path("ljung_box.json"),
        &json!({
            "n_samples": r.n_samples,
            "max_lag": opts.max_lag,
            "alpha": r.alpha,
            "demeaned": r.demeaned,
            "rejected_everywhere": r.rejected_everywhere(),
            "reject_fraction": r.reject_fraction(),
            "rejected_lags": rejected,
        }),
    )?;
    println!(
        "ljung-box: H0 rejected at {} of {} lags (alpha = {})",
        rejected.len(),
        opts.max_lag,
        r.alpha
    );
    Ok(Outcome {
        stem: "ljung_box".into(),
        outputs: vec!["ljung_box.csv".into(), "ljung_box.json".into()],
    })
}

pub fn avar(ctx: &Context, args: &AvarArgs) -> Result<Outcome> {
    let ts = load(&args.input)?;
    let grid = default_cluster_grid(ts.len(), args.points_per_decade as usize);
    let curve = allan_variance(&ts, &grid)?;
    let mut table = Table::new(&["tau_s", "avar", "adev"]);
    for i in 0..curve.len() {
        table.row(&[&curve.taus[i], &curve.avar[i], &curve.adev[i]]);
    }
    table.write(&ctx.path("avar.csv"))?;
    write_json(
        &ctx.path("avar.json"),
        &json!({
            "n_samples": curve.n_samples,
            "sample_rate_hz": curve.sample_rate_hz,
            "points": curve.len(),
            "cluster_sizes": curve.cluster_sizes,
        }),
    )?;
    println!("avar: {} cluster sizes over {} samples", curve.len(), curve.n_samples);
    Ok(Outcome {
        stem: "avar".into(),
        outputs: vec!["avar.csv".into(), "avar.json".into()],
    })
}

pub fn coeffs(ctx: &Context, args: &CoeffsArgs) -> Result<Outcome> {
    let ts = load(&args.input)?;
    let grid = default_cluster_grid(ts.len(), args.points_per_decade as usize);
    let curve = allan_variance(&ts, &grid)?;
    let opts = SegmentOptions {
        slope_tolerance: args.slope_tolerance,
        window_decades: args.window_decades,
        max_residual: args.max_residual,
        max_cluster_fraction: args.max_cluster_fraction,
    };
    let c = extract_coefficients_with(&curve, &opts)?;
    write_json(&ctx.path("coeffs.json"), &c)?;
    let show = |v: Option<f64>| v.map_or("N/A".to_string(), |v| format!("{v:.6e}"));
    println!(
        "coeffs: N = {}, B = {}, K = {}",
        show(c.white_n),
        show(c.flicker_b),
        show(c.random_walk_k)
    );
    Ok(Outcome {
        stem: "coeffs".into(),
        outputs: vec!["coeffs.json".into()],
    })
}
