//! Independent f64 reference forward pass and a finite-difference checker for
//! Jacobians and input gradients. Shared by the gradient tests and the
//! acceptance suite.

#![allow(dead_code)]

use advplay_core::nn::{Conv2d, Dense, Layer, Network, NUM_CLASSES, NUM_FEATURES};
use advplay_core::{Classifier, Image};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Direct (loop-nest) forward pass in f64. Returns the logits and the
/// activation pattern: one entry per ReLU unit (1 if active) and per pooled
/// output (offset of the winning input inside its window).
pub fn reference_logits(net: &Network, x: &[f64]) -> (Vec<f64>, Vec<u32>) {
    let (mut c, mut h, mut w) = (1usize, 28usize, 28usize);
    let mut a = x.to_vec();
    let mut pattern = Vec::new();
    for layer in net.layers() {
        match layer {
            Layer::Conv2d(conv) => {
                a = conv_f64(conv, &a, h, w);
                c = conv.out_channels;
            }
            Layer::MaxPool2d(p) => {
                let s = p.size;
                let (oh, ow) = (h / s, w / s);
                let mut out = vec![0.0; c * oh * ow];
                for ch in 0..c {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let mut best = f64::NEG_INFINITY;
                            let mut at = 0u32;
                            for dy in 0..s {
                                for dx in 0..s {
                                    let v = a[ch * h * w + (oy * s + dy) * w + ox * s + dx];
                                    if v > best {
                                        best = v;
                                        at = (dy * s + dx) as u32;
                                    }
                                }
                            }
                            out[ch * oh * ow + oy * ow + ox] = best;
                            pattern.push(at);
                        }
                    }
                }
                a = out;
                h = oh;
                w = ow;
            }
            Layer::Dense(d) => {
                a = dense_f64(d, &a);
                c = d.outputs;
                h = 1;
                w = 1;
            }
            Layer::Relu => {
                for v in &mut a {
                    pattern.push(u32::from(*v > 0.0));
                    *v = v.max(0.0);
                }
            }
            Layer::Softmax => {}
        }
    }
    (a, pattern)
}

fn conv_f64(conv: &Conv2d, input: &[f64], h: usize, w: usize) -> Vec<f64> {
    let (kh, kw) = (conv.kernel_h, conv.kernel_w);
    let (pt, pl) = ((kh - 1) as isize / 2, (kw - 1) as isize / 2);
    let mut out = vec![0.0; conv.out_channels * h * w];
    for o in 0..conv.out_channels {
        for y in 0..h {
            for x in 0..w {
                let mut acc = f64::from(conv.bias[o]);
                for i in 0..conv.in_channels {
                    for ky in 0..kh {
                        for kx in 0..kw {
                            let sy = y as isize + ky as isize - pt;
                            let sx = x as isize + kx as isize - pl;
                            if sy < 0 || sx < 0 || sy >= h as isize || sx >= w as isize {
                                continue;
                            }
                            let wv = conv.weights[((o * conv.in_channels + i) * kh + ky) * kw + kx];
                            acc += f64::from(wv) * input[i * h * w + sy as usize * w + sx as usize];
                        }
                    }
                }
                out[o * h * w + y * w + x] = acc;
            }
        }
    }
    out
}

fn dense_f64(d: &Dense, input: &[f64]) -> Vec<f64> {
    (0..d.outputs)
        .map(|o| {
            let row = &d.weights[o * d.inputs..(o + 1) * d.inputs];
            f64::from(d.bias[o]) + row.iter().zip(input).map(|(&w, &v)| f64::from(w) * v).sum::<f64>()
        })
        .collect()
}

pub fn softmax_f64(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Cross-entropy `-ln softmax(z)[class]`, computed stably.
pub fn cross_entropy_f64(z: &[f64], class: usize) -> f64 {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    lse - z[class]
}

#[derive(Debug, Default, Clone, Copy)]
pub struct FdReport {
    pub max_jacobian_error: f64,
    pub max_gradient_error: f64,
    pub entries_checked: usize,
    /// Features whose step had to shrink because a ReLU or pooling switch sat
    /// within `h` of the input.
    pub refined_steps: usize,
    /// Features sitting exactly on a switch (e.g. a pooling tie), where no
    /// symmetric step keeps the pattern and the function has no derivative.
    pub kinks: usize,
}

/// Compares `net.jacobian(x)` and `net.input_gradient(x, class)` against
/// central differences of the f64 reference. When a step of `h` crosses a
/// ReLU or pooling switch (the function has a kink there), the step is
/// shrunk by 10x until both sides keep the activation pattern of `x`.
pub fn finite_difference_check(net: &Network, x: &Image, class: usize, h: f64) -> FdReport {
    let jac = net.jacobian(x).expect("jacobian");
    let grad = net.input_gradient(x, class).expect("input gradient");
    let base: Vec<f64> = x.pixels().iter().map(|&v| f64::from(v)).collect();
    let (_, pattern) = reference_logits(net, &base);
    let mut report = FdReport::default();
    let mut probe = base.clone();
    for i in 0..NUM_FEATURES {
        let mut step = h;
        let (plus, minus) = loop {
            probe[i] = base[i] + step;
            let plus = reference_logits(net, &probe);
            probe[i] = base[i] - step;
            let minus = reference_logits(net, &probe);
            if plus.1 == pattern && minus.1 == pattern {
                break (plus.0, minus.0);
            }
            if step < 1e-9 {
                report.kinks += 1;
                break (plus.0, minus.0);
            }
            step /= 10.0;
        };
        probe[i] = base[i];
        if step != h {
            report.refined_steps += 1;
        }
        let (pp, pm) = (softmax_f64(&plus), softmax_f64(&minus));
        for j in 0..NUM_CLASSES {
            let fd = (pp[j] - pm[j]) / (2.0 * step);
            let err = (fd - f64::from(jac.get(j, i))).abs();
            report.max_jacobian_error = report.max_jacobian_error.max(err);
        }
        let fd = (cross_entropy_f64(&plus, class) - cross_entropy_f64(&minus, class)) / (2.0 * step);
        report.max_gradient_error = report.max_gradient_error.max((fd - f64::from(grad[i])).abs());
        report.entries_checked += NUM_CLASSES + 1;
    }
    report
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, limit: f32) -> Vec<f32> {
    (0..n).map(|_| rng.gen_range(-limit..limit)).collect()
}

fn random_dense(rng: &mut ChaCha8Rng, inputs: usize, outputs: usize) -> Layer {
    let limit = (6.0 / inputs as f32).sqrt();
    Layer::Dense(Dense {
        inputs,
        outputs,
        weights: uniform(rng, inputs * outputs, limit),
        bias: uniform(rng, outputs, 0.1),
    })
}

fn random_conv(rng: &mut ChaCha8Rng, in_c: usize, out_c: usize, k: usize) -> Layer {
    let limit = (6.0 / (in_c * k * k) as f32).sqrt();
    Layer::Conv2d(Conv2d {
        out_channels: out_c,
        in_channels: in_c,
        kernel_h: k,
        kernel_w: k,
        weights: uniform(rng, out_c * in_c * k * k, limit),
        bias: uniform(rng, out_c, 0.1),
    })
}

/// Small random networks cheap enough for a full 784-feature difference check.
/// Even seeds give an MLP, odd seeds a two-stage CNN.
pub fn random_network(seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = if seed.is_multiple_of(2) {
        let hidden = rng.gen_range(16..48);
        vec![
            random_dense(&mut rng, NUM_FEATURES, hidden),
            Layer::Relu,
            random_dense(&mut rng, hidden, 16),
            Layer::Relu,
            random_dense(&mut rng, 16, NUM_CLASSES),
            Layer::Softmax,
        ]
    } else {
        vec![
            random_conv(&mut rng, 1, 3, 5),
            Layer::Relu,
            Layer::MaxPool2d(advplay_core::nn::MaxPool2d { size: 2 }),
            random_conv(&mut rng, 3, 4, 3),
            Layer::Relu,
            Layer::MaxPool2d(advplay_core::nn::MaxPool2d { size: 2 }),
            random_dense(&mut rng, 7 * 7 * 4, 16),
            Layer::Relu,
            random_dense(&mut rng, 16, NUM_CLASSES),
            Layer::Softmax,
        ]
    };
    Network::new(layers).expect("well-formed random network")
}

/// Digit-like random input: a few bright strokes on a dim canvas. Every
/// pixel carries a little continuous noise so that pooling ties and exact
/// ReLU zeros (points without a derivative) have probability zero.
pub fn random_image(seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1a9e);
    let mut px: Vec<f32> = (0..NUM_FEATURES).map(|_| rng.gen_range(0.0..0.05)).collect();
    for _ in 0..rng.gen_range(2..6) {
        let (mut y, mut x) = (rng.gen_range(4..24i32), rng.gen_range(4..24i32));
        let (dy, dx) = (rng.gen_range(-1..=1), rng.gen_range(-1..=1));
        for _ in 0..rng.gen_range(5..15) {
            if (0..28).contains(&y) && (0..28).contains(&x) {
                px[(y * 28 + x) as usize] = rng.gen_range(0.6..1.0);
            }
            y += dy;
            x += dx;
        }
    }
    for v in px.iter_mut() {
        if rng.gen_bool(0.1) {
            *v = rng.gen_range(0.0..1.0);
        }
    }
    Image::new(px).expect("pixels in range")
}
