use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layers::{Conv2d, Dense, Layer, MaxPool2d, ParamGrads, Shape};
use super::train::Architecture;
use super::{softmax, ClassProbs, Classifier, Image, Jacobian, Logits, IMAGE_SIDE, NUM_CLASSES, NUM_FEATURES};
use crate::error::{Error, Result};

/// A feed-forward classifier: an ordered layer list ending in softmax.
///
/// Construction checks that layer shapes compose, that the network maps a
/// 1x28x28 image to ten outputs, and that softmax appears only as the final
/// layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
    /// `shapes[i]` is the input shape of layer `i`; the last entry is the output shape.
    shapes: Vec<Shape>,
}

pub(crate) const INPUT_SHAPE: Shape = Shape::new(1, IMAGE_SIDE, IMAGE_SIDE);

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let Some(Layer::Softmax) = layers.last() else {
            return Err(Error::Config("the final layer must be softmax".into()));
        };
        let mut shapes = vec![INPUT_SHAPE];
        for (i, layer) in layers.iter().enumerate() {
            if matches!(layer, Layer::Softmax) && i + 1 != layers.len() {
                return Err(Error::Config(format!("softmax at layer {i} is not the final layer")));
            }
            let next = layer
                .output_shape(*shapes.last().unwrap())
                .map_err(|e| Error::Config(format!("layer {i} ({}): {e}", layer.kind_name())))?;
            shapes.push(next);
        }
        let out = shapes.last().unwrap().len();
        if out != NUM_CLASSES {
            return Err(Error::Config(format!(
                "network produces {out} outputs, expected {NUM_CLASSES}"
            )));
        }
        Ok(Network { layers, shapes })
    }

    /// Fresh network for `arch` with seeded He-uniform weights and zero biases.
    pub fn init(arch: Architecture, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut uniform = |n: usize, fan_in: usize| -> Vec<f32> {
            let limit = (6.0 / fan_in as f64).sqrt() as f32;
            (0..n).map(|_| rng.gen_range(-limit..limit)).collect()
        };
        let mut conv = |out_c: usize, in_c: usize, k: usize| {
            Layer::Conv2d(Conv2d {
                out_channels: out_c,
                in_channels: in_c,
                kernel_h: k,
                kernel_w: k,
                weights: uniform(out_c * in_c * k * k, in_c * k * k),
                bias: vec![0.0; out_c],
            })
        };
        let layers = match arch {
            Architecture::Cnn => {
                let c1 = conv(32, 1, 5);
                let c2 = conv(64, 32, 5);
                vec![
                    c1,
                    Layer::Relu,
                    Layer::MaxPool2d(MaxPool2d { size: 2 }),
                    c2,
                    Layer::Relu,
                    Layer::MaxPool2d(MaxPool2d { size: 2 }),
                    dense(7 * 7 * 64, 1024, &mut uniform),
                    Layer::Relu,
                    dense(1024, NUM_CLASSES, &mut uniform),
                    Layer::Softmax,
                ]
            }
            Architecture::Mlp => vec![
                dense(NUM_FEATURES, 256, &mut uniform),
                Layer::Relu,
                dense(256, 256, &mut uniform),
                Layer::Relu,
                dense(256, NUM_CLASSES, &mut uniform),
                Layer::Softmax,
            ],
        };
        Network::new(layers).expect("built-in architectures are well-formed")
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_shape(&self) -> Shape {
        self.shapes[0]
    }

    /// Layers up to (not including) the final softmax.
    fn body(&self) -> &[Layer] {
        &self.layers[..self.layers.len() - 1]
    }

    /// Runs the body on `n` samples and keeps every intermediate activation.
    /// `acts[0]` is the input, `acts[i + 1]` the output of layer `i`, and the
    /// last entry holds the logits.
    pub(crate) fn trace(&self, x: &[f32], n: usize, check_finite: bool) -> Result<Vec<Vec<f32>>> {
        let mut acts = Vec::with_capacity(self.layers.len());
        acts.push(x.to_vec());
        for (i, layer) in self.body().iter().enumerate() {
            let out = layer.forward(acts.last().unwrap(), n, self.shapes[i], self.shapes[i + 1]);
            if check_finite && out.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical {
                    layer: i,
                    detail: format!("non-finite activation in {} output", layer.kind_name()),
                });
            }
            acts.push(out);
        }
        Ok(acts)
    }

    /// Back-propagates `n_grad` rows of logit gradients through the body.
    pub(crate) fn backward(
        &self,
        acts: &[Vec<f32>],
        n_acts: usize,
        grad_logits: Vec<f32>,
        n_grad: usize,
        mut grads: Option<&mut [Option<ParamGrads>]>,
        need_input: bool,
    ) -> Result<Option<Vec<f32>>> {
        let mut grad = grad_logits;
        for (i, layer) in self.body().iter().enumerate().rev() {
            let layer_grads = grads.as_deref_mut().and_then(|g| g[i].as_mut());
            let want_input = i > 0 || need_input;
            match layer.backward(
                &acts[i],
                n_acts,
                self.shapes[i],
                self.shapes[i + 1],
                &grad,
                n_grad,
                layer_grads,
                want_input,
            ) {
                Some(g) => {
                    if g.iter().any(|v| !v.is_finite()) {
                        return Err(Error::Numerical {
                            layer: i,
                            detail: format!("non-finite gradient flowing into {}", layer.kind_name()),
                        });
                    }
                    grad = g;
                }
                None => return Ok(None),
            }
        }
        Ok(Some(grad))
    }

    /// Logits for `n` samples laid out back to back.
    pub fn logits_batch(&self, x: &[f32], n: usize) -> Result<Vec<f32>> {
        if x.len() != n * NUM_FEATURES {
            return Err(Error::Config(format!(
                "batch of {n} needs {} values, got {}",
                n * NUM_FEATURES,
                x.len()
            )));
        }
        Ok(self.trace(x, n, false)?.pop().unwrap())
    }

    pub fn predict_batch(&self, x: &[f32], n: usize) -> Result<Vec<usize>> {
        let logits = self.logits_batch(x, n)?;
        Ok(logits.chunks(NUM_CLASSES).map(|z| super::argmax(&softmax(z))).collect())
    }

    /// Reverse sweeps seeded with the rows of `seeds` (`rows x C`), one per row.
    fn sweep(&self, x: &Image, seeds_for: impl FnOnce(&[f32]) -> Vec<f32>) -> Result<Vec<f32>> {
        let acts = self.trace(x.pixels(), 1, true)?;
        let seeds = seeds_for(acts.last().unwrap());
        let rows = seeds.len() / NUM_CLASSES;
        Ok(self
            .backward(&acts, 1, seeds, rows, None, true)?
            .expect("input gradient requested"))
    }
}

fn dense(inputs: usize, outputs: usize, uniform: &mut impl FnMut(usize, usize) -> Vec<f32>) -> Layer {
    Layer::Dense(Dense {
        inputs,
        outputs,
        weights: uniform(inputs * outputs, inputs),
        bias: vec![0.0; outputs],
    })
}

impl Classifier for Network {
    fn logits(&self, x: &Image) -> Result<Logits> {
        let mut acts = self.trace(x.pixels(), 1, true)?;
        Ok(Logits(acts.pop().unwrap()))
    }

    fn forward(&self, x: &Image) -> Result<ClassProbs> {
        let probs = self.logits(x)?.softmax();
        if probs.0.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numerical {
                layer: self.layers.len() - 1,
                detail: "non-finite softmax output".into(),
            });
        }
        Ok(probs)
    }

    fn jacobian(&self, x: &Image) -> Result<Jacobian> {
        // Seed row j with dF_j/dz = F_j (e_j - F): one reverse sweep per class.
        let data = self.sweep(x, |z| {
            let f = softmax(z);
            let mut seeds = vec![0.0f32; NUM_CLASSES * NUM_CLASSES];
            for j in 0..NUM_CLASSES {
                for k in 0..NUM_CLASSES {
                    let delta = if j == k { 1.0 } else { 0.0 };
                    seeds[j * NUM_CLASSES + k] = f[j] * (delta - f[k]);
                }
            }
            seeds
        })?;
        Jacobian::from_rows(NUM_CLASSES, NUM_FEATURES, data)
    }

    fn logit_jacobian(&self, x: &Image) -> Result<Jacobian> {
        let data = self.sweep(x, |_| {
            let mut seeds = vec![0.0f32; NUM_CLASSES * NUM_CLASSES];
            for j in 0..NUM_CLASSES {
                seeds[j * NUM_CLASSES + j] = 1.0;
            }
            seeds
        })?;
        Jacobian::from_rows(NUM_CLASSES, NUM_FEATURES, data)
    }

    fn input_gradient(&self, x: &Image, class: usize) -> Result<Vec<f32>> {
        if class >= NUM_CLASSES {
            return Err(Error::Argument(format!("class {class} is outside 0..{NUM_CLASSES}")));
        }
        // d(-log F_y)/dz = F - onehot(y)
        self.sweep(x, |z| {
            let mut seed = softmax(z);
            seed[class] -= 1.0;
            seed
        })
    }
}
