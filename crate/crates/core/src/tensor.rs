//! Minimal dense-tensor kernel: the forward operations needed by the
//! context and fusion modules.
//!
//! Tensors are channel-major (CHW) with row-major spatial layout and `f32`
//! storage. Convolution and pooling accumulate in `f64` to bound rounding
//! drift. Every operation is a pure function of its inputs, so concurrent
//! calls are safe.

use crate::error::{Error, Result};
use crate::par;

/// Dense CHW tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl Tensor {
    /// Build a tensor from raw channel-major data.
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::shape(
                "tensor",
                format!("{} values for {channels}x{height}x{width}", channels * height * width),
                format!("{}", data.len()),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("tensor: data contains NaN or Inf"));
        }
        Ok(Tensor {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Tensor {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let mut data = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, y, x));
                }
            }
        }
        Tensor {
            channels,
            height,
            width,
            data,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// (channels, height, width)
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.height + y) * self.width + x]
    }

    /// Spatial plane of one channel.
    pub fn channel(&self, c: usize) -> &[f32] {
        let plane = self.height * self.width;
        &self.data[c * plane..(c + 1) * plane]
    }

    /// Copy of the channels in `range`, preserving order.
    pub fn slice_channels(&self, range: std::ops::Range<usize>) -> Result<Tensor> {
        if range.end > self.channels || range.start > range.end {
            return Err(Error::invalid(format!(
                "slice_channels: range {}..{} out of bounds for {} channels",
                range.start, range.end, self.channels
            )));
        }
        let plane = self.height * self.width;
        Ok(Tensor {
            channels: range.len(),
            height: self.height,
            width: self.width,
            data: self.data[range.start * plane..range.end * plane].to_vec(),
        })
    }

    fn shape_string(&self) -> String {
        format!("{}x{}x{}", self.channels, self.height, self.width)
    }
}

/// Parameters of a "same"-padded stride-1 convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    pub out_channels: usize,
    pub in_channels: usize,
    /// Kernel size, 1 or 3.
    pub kernel: usize,
    pub dilation: usize,
    /// Implied by kernel and dilation: `dilation * (kernel - 1) / 2`.
    pub padding: usize,
    /// `out * in * kernel * kernel` weights, out-major.
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

impl ConvParams {
    pub fn new(
        out_channels: usize,
        in_channels: usize,
        kernel: usize,
        dilation: usize,
        weights: Vec<f32>,
        bias: Vec<f32>,
    ) -> Result<Self> {
        if kernel != 1 && kernel != 3 {
            return Err(Error::invalid(format!("conv: kernel size {kernel} not supported (1 or 3)")));
        }
        if dilation == 0 {
            return Err(Error::invalid("conv: dilation must be positive"));
        }
        let expected = out_channels * in_channels * kernel * kernel;
        if weights.len() != expected {
            return Err(Error::shape(
                "conv weights",
                format!("{expected}"),
                format!("{}", weights.len()),
            ));
        }
        if bias.len() != out_channels {
            return Err(Error::shape(
                "conv bias",
                format!("{out_channels}"),
                format!("{}", bias.len()),
            ));
        }
        if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("conv: weights contain NaN or Inf"));
        }
        Ok(ConvParams {
            out_channels,
            in_channels,
            kernel,
            dilation,
            padding: dilation * (kernel - 1) / 2,
            weights,
            bias,
        })
    }

    fn weight(&self, o: usize, i: usize, dy: usize, dx: usize) -> f32 {
        self.weights[((o * self.in_channels + i) * self.kernel + dy) * self.kernel + dx]
    }
}

/// Inference-mode batch-normalization parameters (per channel).
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormParams {
    pub gamma: Vec<f32>,
    pub beta: Vec<f32>,
    pub running_mean: Vec<f32>,
    pub running_var: Vec<f32>,
    pub epsilon: f32,
}

impl BatchNormParams {
    pub fn new(
        gamma: Vec<f32>,
        beta: Vec<f32>,
        running_mean: Vec<f32>,
        running_var: Vec<f32>,
        epsilon: f32,
    ) -> Result<Self> {
        let n = gamma.len();
        if beta.len() != n || running_mean.len() != n || running_var.len() != n {
            return Err(Error::invalid(
                "batchnorm: per-channel parameter lengths differ",
            ));
        }
        if running_var.iter().any(|&v| v < 0.0) {
            return Err(Error::invalid("batchnorm: running variance must be >= 0"));
        }
        if epsilon <= 0.0 {
            return Err(Error::invalid("batchnorm: epsilon must be > 0"));
        }
        Ok(BatchNormParams {
            gamma,
            beta,
            running_mean,
            running_var,
            epsilon,
        })
    }

    /// Identity normalization for `channels` channels.
    pub fn identity(channels: usize) -> Self {
        BatchNormParams {
            gamma: vec![1.0; channels],
            beta: vec![0.0; channels],
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            epsilon: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActivationKind {
    Relu,
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementwiseOp {
    Add,
    Mul,
}

/// Interpolation used by [`upsample2x`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpsampleKind {
    #[default]
    Bilinear,
    Nearest,
}

/// Stride-1 "same" convolution with zero padding.
///
/// `out(o,y,x) = bias[o] + sum_{i,dy,dx} w[o,i,dy,dx] * in[i, y+d*(dy-c), x+d*(dx-c)]`
/// with `c = (kernel-1)/2`; taps outside the input read zero.
pub fn conv2d(input: &Tensor, p: &ConvParams) -> Result<Tensor> {
    if input.channels != p.in_channels {
        return Err(Error::shape(
            "conv2d input channels",
            format!("{}", p.in_channels),
            format!("{}", input.channels),
        ));
    }
    let (h, w) = (input.height, input.width);
    let k = p.kernel;
    let half = (k as isize - 1) / 2;
    let d = p.dilation as isize;
    let mut out = vec![0.0f32; p.out_channels * h * w];
    par::for_each_chunk(&mut out, h * w, |o, plane| {
        for y in 0..h {
            for x in 0..w {
                let mut acc = p.bias[o] as f64;
                for i in 0..p.in_channels {
                    let in_plane = input.channel(i);
                    for dy in 0..k {
                        let sy = y as isize + d * (dy as isize - half);
                        if sy < 0 || sy >= h as isize {
                            continue;
                        }
                        let row = &in_plane[sy as usize * w..(sy as usize + 1) * w];
                        for dx in 0..k {
                            let sx = x as isize + d * (dx as isize - half);
                            if sx < 0 || sx >= w as isize {
                                continue;
                            }
                            acc += p.weight(o, i, dy, dx) as f64 * row[sx as usize] as f64;
                        }
                    }
                }
                plane[y * w + x] = acc as f32;
            }
        }
    });
    Ok(Tensor {
        channels: p.out_channels,
        height: h,
        width: w,
        data: out,
    })
}

/// Per-channel affine normalization with fixed running statistics.
pub fn batchnorm_infer(input: &Tensor, p: &BatchNormParams) -> Result<Tensor> {
    if p.gamma.len() != input.channels {
        return Err(Error::shape(
            "batchnorm channels",
            format!("{}", input.channels),
            format!("{}", p.gamma.len()),
        ));
    }
    let plane = input.height * input.width;
    let mut out = input.data.clone();
    par::for_each_chunk(&mut out, plane, |c, chunk| {
        let inv_std = 1.0 / ((p.running_var[c] as f64 + p.epsilon as f64).sqrt());
        let gamma = p.gamma[c] as f64;
        let beta = p.beta[c] as f64;
        let mean = p.running_mean[c] as f64;
        for v in chunk.iter_mut() {
            *v = (gamma * (*v as f64 - mean) * inv_std + beta) as f32;
        }
    });
    Ok(Tensor {
        channels: input.channels,
        height: input.height,
        width: input.width,
        data: out,
    })
}

fn sigmoid64(v: f64) -> f64 {
    // Branch on sign so exp never overflows.
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Elementwise ReLU or logistic sigmoid.
pub fn activation(input: &Tensor, kind: ActivationKind) -> Tensor {
    let mut out = input.data.clone();
    let plane = input.height * input.width;
    par::for_each_chunk(&mut out, plane.max(1), |_, chunk| {
        for v in chunk.iter_mut() {
            *v = match kind {
                ActivationKind::Relu => v.max(0.0),
                ActivationKind::Sigmoid => sigmoid64(*v as f64) as f32,
            };
        }
    });
    Tensor {
        channels: input.channels,
        height: input.height,
        width: input.width,
        data: out,
    }
}

/// Spatial mean per channel; output shape `(channels, 1, 1)`.
pub fn global_avg_pool(input: &Tensor) -> Tensor {
    let plane = (input.height * input.width) as f64;
    let means = par::map_indexed(input.channels, |c| {
        let sum: f64 = input.channel(c).iter().map(|&v| v as f64).sum();
        (sum / plane) as f32
    });
    Tensor {
        channels: input.channels,
        height: 1,
        width: 1,
        data: means,
    }
}

/// Double the spatial resolution.
///
/// Bilinear interpolation samples with half-pixel centers and edge clamping,
/// so a 1x1 input broadcasts its value. Nearest duplicates each pixel 2x2.
pub fn upsample2x(input: &Tensor, kind: UpsampleKind) -> Tensor {
    let (h, w) = (input.height, input.width);
    let (oh, ow) = (2 * h, 2 * w);
    let mut out = vec![0.0f32; input.channels * oh * ow];
    par::for_each_chunk(&mut out, oh * ow, |c, plane| {
        let src = input.channel(c);
        match kind {
            UpsampleKind::Nearest => {
                for oy in 0..oh {
                    for ox in 0..ow {
                        plane[oy * ow + ox] = src[(oy / 2) * w + ox / 2];
                    }
                }
            }
            UpsampleKind::Bilinear => {
                for oy in 0..oh {
                    let sy = ((oy as f64 + 0.5) * 0.5 - 0.5).clamp(0.0, (h - 1) as f64);
                    let y0 = sy.floor() as usize;
                    let y1 = (y0 + 1).min(h - 1);
                    let ty = sy - y0 as f64;
                    for ox in 0..ow {
                        let sx = ((ox as f64 + 0.5) * 0.5 - 0.5).clamp(0.0, (w - 1) as f64);
                        let x0 = sx.floor() as usize;
                        let x1 = (x0 + 1).min(w - 1);
                        let tx = sx - x0 as f64;
                        let top = src[y0 * w + x0] as f64 * (1.0 - tx) + src[y0 * w + x1] as f64 * tx;
                        let bot = src[y1 * w + x0] as f64 * (1.0 - tx) + src[y1 * w + x1] as f64 * tx;
                        plane[oy * ow + ox] = (top * (1.0 - ty) + bot * ty) as f32;
                    }
                }
            }
        }
    });
    Tensor {
        channels: input.channels,
        height: oh,
        width: ow,
        data: out,
    }
}

/// Stack `a`'s channels before `b`'s. Spatial sizes must match.
pub fn concat_channels(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.height != b.height || a.width != b.width {
        return Err(Error::shape(
            "concat_channels",
            format!("{}x{}", a.height, a.width),
            format!("{}x{}", b.height, b.width),
        ));
    }
    let mut data = Vec::with_capacity(a.data.len() + b.data.len());
    data.extend_from_slice(&a.data);
    data.extend_from_slice(&b.data);
    Ok(Tensor {
        channels: a.channels + b.channels,
        height: a.height,
        width: a.width,
        data,
    })
}

/// Elementwise add or multiply. `b` may be `(channels, 1, 1)`, in which case
/// its per-channel scalar broadcasts over space.
pub fn elementwise(a: &Tensor, b: &Tensor, op: ElementwiseOp) -> Result<Tensor> {
    let broadcast = b.channels == a.channels && b.height == 1 && b.width == 1;
    if !broadcast && a.shape() != b.shape() {
        return Err(Error::shape(
            "elementwise",
            a.shape_string(),
            b.shape_string(),
        ));
    }
    let plane = a.height * a.width;
    let mut out = a.data.clone();
    par::for_each_chunk(&mut out, plane, |c, chunk| {
        if broadcast {
            let s = b.data[c];
            for v in chunk.iter_mut() {
                *v = match op {
                    ElementwiseOp::Add => *v + s,
                    ElementwiseOp::Mul => *v * s,
                };
            }
        } else {
            let other = b.channel(c);
            for (v, &o) in chunk.iter_mut().zip(other) {
                *v = match op {
                    ElementwiseOp::Add => *v + o,
                    ElementwiseOp::Mul => *v * o,
                };
            }
        }
    });
    Ok(Tensor {
        channels: a.channels,
        height: a.height,
        width: a.width,
        data: out,
    })
}
