use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Activation tensor shape, channel-major (`c`, then rows, then columns).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl Shape {
    pub const fn new(channels: usize, height: usize, width: usize) -> Self {
        Shape {
            channels,
            height,
            width,
        }
    }

    pub const fn flat(len: usize) -> Self {
        Shape::new(len, 1, 1)
    }

    pub const fn len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// 2-D convolution, stride 1, "same" zero padding.
///
/// Weights are `[out_channels][in_channels][kernel_h][kernel_w]` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    pub out_channels: usize,
    pub in_channels: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

/// Non-overlapping `size x size` max-pooling; trailing rows/columns are dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaxPool2d {
    pub size: usize,
}

/// Fully-connected layer, weights `[outputs][inputs]` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv2d(Conv2d),
    MaxPool2d(MaxPool2d),
    Dense(Dense),
    Relu,
    Softmax,
}

/// Accumulated parameter gradients for one layer.
#[derive(Debug, Clone)]
pub(crate) struct ParamGrads {
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

/// `c = a * b + beta * c` for row/column-strided `f32` matrices.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f32],
    (rsa, csa): (usize, usize),
    b: &[f32],
    (rsb, csb): (usize, usize),
    beta: f32,
    c: &mut [f32],
    rsc: usize,
) {
    if m == 0 || n == 0 {
        return;
    }
    assert!(k == 0 || a.len() > (m - 1) * rsa + (k - 1) * csa);
    assert!(k == 0 || b.len() > (k - 1) * rsb + (n - 1) * csb);
    assert!(c.len() > (m - 1) * rsc + (n - 1));
    // SAFETY: the asserts above bound every element the kernel touches.
    unsafe {
        matrixmultiply::sgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            rsc as isize,
            1,
        );
    }
}

impl Conv2d {
    fn patch_len(&self) -> usize {
        self.in_channels * self.kernel_h * self.kernel_w
    }

    fn pads(&self) -> (usize, usize) {
        ((self.kernel_h - 1) / 2, (self.kernel_w - 1) / 2)
    }

    /// Unfolds one sample into a `[patch_len][h * w]` matrix.
    fn im2col(&self, input: &[f32], shape: Shape, cols: &mut [f32]) {
        let (h, w) = (shape.height, shape.width);
        let hw = h * w;
        let (pt, pl) = self.pads();
        for c in 0..self.in_channels {
            let plane = &input[c * hw..(c + 1) * hw];
            for ky in 0..self.kernel_h {
                for kx in 0..self.kernel_w {
                    let row = (c * self.kernel_h + ky) * self.kernel_w + kx;
                    let dst = &mut cols[row * hw..(row + 1) * hw];
                    for y in 0..h {
                        let sy = y + ky;
                        let out_row = &mut dst[y * w..(y + 1) * w];
                        if sy < pt || sy - pt >= h {
                            out_row.fill(0.0);
                            continue;
                        }
                        let src = &plane[(sy - pt) * w..(sy - pt + 1) * w];
                        for (x, o) in out_row.iter_mut().enumerate() {
                            let sx = x + kx;
                            *o = if sx < pl || sx - pl >= w { 0.0 } else { src[sx - pl] };
                        }
                    }
                }
            }
        }
    }

    fn col2im(&self, cols: &[f32], shape: Shape, out: &mut [f32]) {
        let (h, w) = (shape.height, shape.width);
        let hw = h * w;
        let (pt, pl) = self.pads();
        for c in 0..self.in_channels {
            let plane = &mut out[c * hw..(c + 1) * hw];
            for ky in 0..self.kernel_h {
                for kx in 0..self.kernel_w {
                    let row = (c * self.kernel_h + ky) * self.kernel_w + kx;
                    let src = &cols[row * hw..(row + 1) * hw];
                    for y in 0..h {
                        let sy = y + ky;
                        if sy < pt || sy - pt >= h {
                            continue;
                        }
                        let dst = &mut plane[(sy - pt) * w..(sy - pt + 1) * w];
                        for x in 0..w {
                            let sx = x + kx;
                            if sx >= pl && sx - pl < w {
                                dst[sx - pl] += src[y * w + x];
                            }
                        }
                    }
                }
            }
        }
    }
}

impl MaxPool2d {
    /// Flat input offset of the (first) maximum inside output cell `(c, oy, ox)`.
    fn argmax(&self, input: &[f32], shape: Shape, c: usize, oy: usize, ox: usize) -> usize {
        let s = self.size;
        let base = c * shape.height * shape.width;
        let mut best = base + oy * s * shape.width + ox * s;
        for dy in 0..s {
            for dx in 0..s {
                let idx = base + (oy * s + dy) * shape.width + ox * s + dx;
                if input[idx] > input[best] {
                    best = idx;
                }
            }
        }
        best
    }
}

impl Layer {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Layer::Conv2d(_) => "conv2d",
            Layer::MaxPool2d(_) => "maxpool2d",
            Layer::Dense(_) => "dense",
            Layer::Relu => "relu",
            Layer::Softmax => "softmax",
        }
    }

    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        match self {
            Layer::Conv2d(conv) => {
                if conv.in_channels != input.channels {
                    return Err(Error::Config(format!(
                        "conv2d expects {} input channels, got {}",
                        conv.in_channels, input.channels
                    )));
                }
                if conv.kernel_h == 0 || conv.kernel_w == 0 || conv.out_channels == 0 {
                    return Err(Error::Config("conv2d with a zero dimension".into()));
                }
                if conv.weights.len() != conv.out_channels * conv.patch_len() || conv.bias.len() != conv.out_channels {
                    return Err(Error::Config(
                        "conv2d weight/bias length does not match its shape".into(),
                    ));
                }
                Ok(Shape::new(conv.out_channels, input.height, input.width))
            }
            Layer::MaxPool2d(pool) => {
                if pool.size == 0 || input.height < pool.size || input.width < pool.size {
                    return Err(Error::Config(format!(
                        "maxpool {} does not fit a {}x{} input",
                        pool.size, input.height, input.width
                    )));
                }
                Ok(Shape::new(
                    input.channels,
                    input.height / pool.size,
                    input.width / pool.size,
                ))
            }
            Layer::Dense(dense) => {
                if dense.inputs != input.len() {
                    return Err(Error::Config(format!(
                        "dense layer expects {} inputs, previous layer produces {}",
                        dense.inputs,
                        input.len()
                    )));
                }
                if dense.weights.len() != dense.inputs * dense.outputs || dense.bias.len() != dense.outputs {
                    return Err(Error::Config(
                        "dense weight/bias length does not match its shape".into(),
                    ));
                }
                Ok(Shape::flat(dense.outputs))
            }
            Layer::Relu | Layer::Softmax => Ok(input),
        }
    }

    /// Trainable parameter count (weights, bias).
    pub(crate) fn param_lens(&self) -> Option<(usize, usize)> {
        match self {
            Layer::Conv2d(c) => Some((c.weights.len(), c.bias.len())),
            Layer::Dense(d) => Some((d.weights.len(), d.bias.len())),
            _ => None,
        }
    }

    pub(crate) fn params_mut(&mut self) -> Option<(&mut [f32], &mut [f32])> {
        match self {
            Layer::Conv2d(c) => Some((&mut c.weights, &mut c.bias)),
            Layer::Dense(d) => Some((&mut d.weights, &mut d.bias)),
            _ => None,
        }
    }

    /// Runs `n` samples stored back to back in `input`.
    pub(crate) fn forward(&self, input: &[f32], n: usize, in_shape: Shape, out_shape: Shape) -> Vec<f32> {
        let in_len = in_shape.len();
        let out_len = out_shape.len();
        let mut out = vec![0.0f32; n * out_len];
        match self {
            Layer::Conv2d(conv) => {
                let hw = in_shape.height * in_shape.width;
                let k = conv.patch_len();
                let mut cols = vec![0.0f32; k * hw];
                for r in 0..n {
                    conv.im2col(&input[r * in_len..(r + 1) * in_len], in_shape, &mut cols);
                    let dst = &mut out[r * out_len..(r + 1) * out_len];
                    for (oc, chunk) in dst.chunks_mut(hw).enumerate() {
                        chunk.fill(conv.bias[oc]);
                    }
                    gemm(
                        conv.out_channels,
                        k,
                        hw,
                        &conv.weights,
                        (k, 1),
                        &cols,
                        (hw, 1),
                        1.0,
                        dst,
                        hw,
                    );
                }
            }
            Layer::MaxPool2d(pool) => {
                for r in 0..n {
                    let src = &input[r * in_len..(r + 1) * in_len];
                    let dst = &mut out[r * out_len..(r + 1) * out_len];
                    let mut o = 0;
                    for c in 0..out_shape.channels {
                        for oy in 0..out_shape.height {
                            for ox in 0..out_shape.width {
                                dst[o] = src[pool.argmax(src, in_shape, c, oy, ox)];
                                o += 1;
                            }
                        }
                    }
                }
            }
            Layer::Dense(dense) => {
                for row in out.chunks_mut(out_len) {
                    row.copy_from_slice(&dense.bias);
                }
                gemm(
                    n,
                    dense.inputs,
                    dense.outputs,
                    input,
                    (dense.inputs, 1),
                    &dense.weights,
                    (1, dense.inputs),
                    1.0,
                    &mut out,
                    dense.outputs,
                );
            }
            Layer::Relu => {
                for (o, &v) in out.iter_mut().zip(input) {
                    *o = v.max(0.0);
                }
            }
            Layer::Softmax => {
                for (o, i) in out.chunks_mut(out_len).zip(input.chunks(in_len)) {
                    o.copy_from_slice(&super::softmax(i));
                }
            }
        }
        out
    }

    /// Back-propagates `n_grad` upstream gradients through this layer.
    ///
    /// `input` holds the cached layer input for either `n_grad` samples or a
    /// single sample shared by every gradient row (the Jacobian case). Parameter
    /// gradients are accumulated only when `grads` is given, which requires one
    /// cached input per gradient row. Returns the gradient with respect to the
    /// layer input when `need_input` is set.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn backward(
        &self,
        input: &[f32],
        n_in: usize,
        in_shape: Shape,
        out_shape: Shape,
        grad_out: &[f32],
        n_grad: usize,
        grads: Option<&mut ParamGrads>,
        need_input: bool,
    ) -> Option<Vec<f32>> {
        debug_assert!(n_in == n_grad || n_in == 1);
        debug_assert!(grads.is_none() || n_in == n_grad);
        let in_len = in_shape.len();
        let out_len = out_shape.len();
        let in_row = |r: usize| if n_in == 1 { 0 } else { r };
        match self {
            Layer::Conv2d(conv) => {
                let hw = in_shape.height * in_shape.width;
                let k = conv.patch_len();
                let oc = conv.out_channels;
                if let Some(g) = grads {
                    let mut cols = vec![0.0f32; k * hw];
                    for r in 0..n_grad {
                        let go = &grad_out[r * out_len..(r + 1) * out_len];
                        conv.im2col(
                            &input[in_row(r) * in_len..(in_row(r) + 1) * in_len],
                            in_shape,
                            &mut cols,
                        );
                        gemm(oc, hw, k, go, (hw, 1), &cols, (1, hw), 1.0, &mut g.weights, k);
                        for (b, chunk) in g.bias.iter_mut().zip(go.chunks(hw)) {
                            *b += chunk.iter().sum::<f32>();
                        }
                    }
                }
                if !need_input {
                    return None;
                }
                let mut gin = vec![0.0f32; n_grad * in_len];
                let mut dcols = vec![0.0f32; k * hw];
                for r in 0..n_grad {
                    let go = &grad_out[r * out_len..(r + 1) * out_len];
                    gemm(k, oc, hw, &conv.weights, (1, k), go, (hw, 1), 0.0, &mut dcols, hw);
                    conv.col2im(&dcols, in_shape, &mut gin[r * in_len..(r + 1) * in_len]);
                }
                Some(gin)
            }
            Layer::MaxPool2d(pool) => {
                if !need_input {
                    return None;
                }
                let mut gin = vec![0.0f32; n_grad * in_len];
                for r in 0..n_grad {
                    let src = &input[in_row(r) * in_len..(in_row(r) + 1) * in_len];
                    let go = &grad_out[r * out_len..(r + 1) * out_len];
                    let dst = &mut gin[r * in_len..(r + 1) * in_len];
                    let mut o = 0;
                    for c in 0..out_shape.channels {
                        for oy in 0..out_shape.height {
                            for ox in 0..out_shape.width {
                                dst[pool.argmax(src, in_shape, c, oy, ox)] += go[o];
                                o += 1;
                            }
                        }
                    }
                }
                Some(gin)
            }
            Layer::Dense(dense) => {
                if let Some(g) = grads {
                    gemm(
                        dense.outputs,
                        n_grad,
                        dense.inputs,
                        grad_out,
                        (1, dense.outputs),
                        input,
                        (dense.inputs, 1),
                        1.0,
                        &mut g.weights,
                        dense.inputs,
                    );
                    for row in grad_out.chunks(out_len) {
                        for (b, &v) in g.bias.iter_mut().zip(row) {
                            *b += v;
                        }
                    }
                }
                if !need_input {
                    return None;
                }
                let mut gin = vec![0.0f32; n_grad * in_len];
                gemm(
                    n_grad,
                    dense.outputs,
                    dense.inputs,
                    grad_out,
                    (dense.outputs, 1),
                    &dense.weights,
                    (dense.inputs, 1),
                    0.0,
                    &mut gin,
                    dense.inputs,
                );
                Some(gin)
            }
            Layer::Relu => {
                if !need_input {
                    return None;
                }
                let mut gin = grad_out.to_vec();
                for r in 0..n_grad {
                    let src = &input[in_row(r) * in_len..(in_row(r) + 1) * in_len];
                    for (g, &v) in gin[r * in_len..(r + 1) * in_len].iter_mut().zip(src) {
                        if v <= 0.0 {
                            *g = 0.0;
                        }
                    }
                }
                Some(gin)
            }
            // The trailing softmax is folded into the loss / Jacobian seeds.
            Layer::Softmax => unreachable!("softmax is never back-propagated through directly"),
        }
    }
}
