use proptest::prelude::*;
use rand::Rng;
use vlcnoise::cae::{Activation, CaeArchitecture, CaeModel, Layer, Tensor1D};
use vlcnoise::seed;

fn random_batch(len: usize, count: usize, seed_value: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = seed::rng(seed_value);
    (0..count)
        .map(|_| {
            let x = (0..len).map(|_| rng.random::<f64>()).collect();
            let t = (0..len).map(|_| rng.random::<f64>()).collect();
            (x, t)
        })
        .collect()
}

fn max_relative_error(model: &CaeModel, batch: &[(Vec<f64>, Vec<f64>)]) -> f64 {
    let refs: Vec<(&[f64], &[f64])> = batch.iter().map(|(x, t)| (&x[..], &t[..])).collect();
    let (_, grads) = model.loss_and_gradients(&refs).unwrap();
    let analytic: Vec<Vec<f64>> = grads.blocks().iter().map(|b| b.to_vec()).collect();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut probe = model.clone();
    for (b, block) in analytic.iter().enumerate() {
        for (i, &a) in block.iter().enumerate() {
            let orig = probe.blocks()[b][i];
            probe.blocks_mut()[b][i] = orig + h;
            let up = probe.loss(&refs).unwrap();
            probe.blocks_mut()[b][i] = orig - h;
            let down = probe.loss(&refs).unwrap();
            probe.blocks_mut()[b][i] = orig;
            let fd = (up - down) / (2.0 * h);
            let err = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
            worst = worst.max(err);
        }
    }
    worst
}

/// Seeded model with random biases, so that no pre-activation sits exactly
/// on the ReLU kink at zero.
fn probe_model(arch: CaeArchitecture, s: u64) -> CaeModel {
    let mut model = CaeModel::new(arch, s).unwrap();
    let mut rng = seed::rng(s ^ 0xb1a5);
    for layer in &mut model.layers {
        for b in &mut layer.bias {
            *b = rng.random_range(-0.1..0.1);
        }
    }
    model
}

#[test]
fn finite_differences_match_every_parameter() {
    for s in 0..3 {
        let model = probe_model(CaeArchitecture::with_filters(16, &[4, 2]), s);
        let err = max_relative_error(&model, &random_batch(16, 3, 100 + s));
        assert!(err < 1e-4, "seed {s}: worst relative error {err}");
    }
}

#[test]
fn finite_differences_with_odd_lengths() {
    let model = probe_model(CaeArchitecture::with_filters(13, &[3, 2, 2]), 9);
    let err = max_relative_error(&model, &random_batch(13, 2, 4));
    assert!(err < 1e-4, "worst relative error {err}");
}

fn filled(mut layer: Layer, weights: &[f64]) -> Layer {
    let n = layer.weight.len();
    layer.weight.copy_from_slice(&weights[..n]);
    layer
}

proptest! {
    #[test]
    fn transpose_is_adjoint(
        len in 1usize..=8,
        cin in 1usize..=3,
        cout in 1usize..=3,
        kernel in prop::sample::select(vec![1usize, 3, 5]),
        stride in 1usize..=2,
        seed_value in any::<u64>(),
    ) {
        let pad = (kernel - 1) / 2;
        let conv = Layer::conv(cin, cout, kernel, stride, pad, Activation::Identity);
        let out_len = conv.output_length(len);
        prop_assume!(out_len.is_some());
        let out_len = out_len.unwrap();
        let mut rng = seed::rng(seed_value);
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };
        let w = draw(cin * cout * kernel);
        let conv = filled(conv, &w);
        let convt = filled(Layer::conv_transpose(cout, cin, kernel, stride, pad, len, Activation::Identity), &w);
        let x = Tensor1D::from_vec(cin, len, draw(cin * len)).unwrap();
        let y = Tensor1D::from_vec(cout, out_len, draw(cout * out_len)).unwrap();
        let lhs = conv.forward_linear(&x, "conv").unwrap().dot(&y);
        let rhs = x.dot(&convt.forward_linear(&y, "convt").unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-12, "{} vs {}", lhs, rhs);
    }
}
