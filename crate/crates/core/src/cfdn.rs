//! Forward-only context-fusion decoder at toy scale.
//!
//! The graph mirrors the usual encoder/decoder layout: five stride-2 encoder
//! stages, a context module that squeezes the deepest feature into a
//! globally pooled, attention-gated context, and four decoder stages. Each
//! decoder stage fuses its skip-connected encoder feature and the upsampled
//! previous decoder feature, projects the context in, runs three parallel
//! convolution branches (1x1, and 3x3 with dilations 3 and 7), sums them and
//! gates the result with a pooled channel attention. A 1x1 head plus sigmoid
//! and a final upsample produce a full-resolution saliency map.
//!
//! Weights are generated from a seed; networks are immutable after
//! construction and forward passes are safe to run concurrently.

use crate::error::{Error, Result};
use crate::loss::PredictionMap;
use crate::tensor::{
    activation, batchnorm_infer, concat_channels, conv2d, elementwise, global_avg_pool,
    upsample2x, ActivationKind, BatchNormParams, ConvParams, ElementwiseOp, Tensor, UpsampleKind,
};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Convolution + batch normalization + ReLU, the standard block.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvBnRelu {
    pub conv: ConvParams,
    pub bn: BatchNormParams,
}

impl ConvBnRelu {
    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        let x = conv2d(input, &self.conv)?;
        let x = batchnorm_infer(&x, &self.bn)?;
        Ok(activation(&x, ActivationKind::Relu))
    }
}

/// Context-module parameters: a 1x1 ConvBNReLU followed by a pooled
/// attention gate.
#[derive(Debug, Clone, PartialEq)]
pub struct CmParams {
    pub conv_bn_relu: ConvBnRelu,
    pub attention_conv: ConvParams,
}

/// Squeeze the deepest encoder feature into a globally guided context:
/// `X_b = ConvBNReLU(x)`, `f_a = sigmoid(conv1x1(GAP(X_b)))`, output
/// `X_b * f_a` with the attention vector broadcast over space.
pub fn context_module(x: &Tensor, p: &CmParams) -> Result<Tensor> {
    let xb = p
        .conv_bn_relu
        .forward(x)
        .map_err(|e| e.at_stage("context module"))?;
    let pooled = global_avg_pool(&xb);
    let gate = conv2d(&pooled, &p.attention_conv).map_err(|e| e.at_stage("context attention"))?;
    let fa = activation(&gate, ActivationKind::Sigmoid);
    elementwise(&xb, &fa, ElementwiseOp::Mul).map_err(|e| e.at_stage("context gating"))
}

/// Feature-fusion-module parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FfmParams {
    /// 1x1 ConvBNReLU balancing the fused encoder/decoder feature.
    pub fuse_bn_relu: ConvBnRelu,
    /// 1x1 projection of the upsampled context feature.
    pub context_proj: ConvParams,
    /// 1x1 merge after concatenating the fused and context paths.
    pub merge_conv: ConvParams,
    pub branch_1x1: ConvParams,
    /// 3x3, dilation 3.
    pub branch_d3: ConvParams,
    /// 3x3, dilation 7.
    pub branch_d7: ConvParams,
    pub gap_attention_conv: ConvParams,
}

/// `X_m`: the skip feature plus the 2x-upsampled previous decoder feature,
/// or the skip feature alone for the first fusion stage.
pub fn fuse_skip(
    x_enc: &Tensor,
    x_dec_prev: Option<&Tensor>,
    kind: UpsampleKind,
) -> Result<Tensor> {
    match x_dec_prev {
        None => Ok(x_enc.clone()),
        Some(prev) => {
            let up = upsample2x(prev, kind);
            elementwise(x_enc, &up, ElementwiseOp::Add)
        }
    }
}

/// Repeatedly double the spatial size until it matches `(height, width)`.
fn upsample_to(input: &Tensor, height: usize, width: usize, kind: UpsampleKind) -> Result<Tensor> {
    let mut t = input.clone();
    while t.height() < height && t.width() < width {
        t = upsample2x(&t, kind);
    }
    if t.height() != height || t.width() != width {
        return Err(Error::shape(
            "upsample_to",
            format!("{height}x{width}"),
            format!("{}x{}", t.height(), t.width()),
        ));
    }
    Ok(t)
}

/// One feature-fusion stage.
///
/// `X_m' = ConvBNReLU(X_m)`; the context is upsampled to the same size and
/// projected by a 1x1 conv; both are concatenated and merged, fed through the
/// three parallel branches, summed, and gated with a pooled channel
/// attention.
pub fn ffm_forward(
    x_enc: &Tensor,
    x_dec_prev: Option<&Tensor>,
    context: &Tensor,
    p: &FfmParams,
    kind: UpsampleKind,
) -> Result<Tensor> {
    let x_m = fuse_skip(x_enc, x_dec_prev, kind).map_err(|e| e.at_stage("ffm skip fusion"))?;
    let x_m = p
        .fuse_bn_relu
        .forward(&x_m)
        .map_err(|e| e.at_stage("ffm fuse conv"))?;
    let ctx = upsample_to(context, x_m.height(), x_m.width(), kind)
        .map_err(|e| e.at_stage("ffm context upsample"))?;
    let ctx = conv2d(&ctx, &p.context_proj).map_err(|e| e.at_stage("ffm context projection"))?;
    let merged = concat_channels(&x_m, &ctx).map_err(|e| e.at_stage("ffm concat"))?;
    let x_f = conv2d(&merged, &p.merge_conv).map_err(|e| e.at_stage("ffm merge"))?;
    let b1 = conv2d(&x_f, &p.branch_1x1).map_err(|e| e.at_stage("ffm branch 1x1"))?;
    let b3 = conv2d(&x_f, &p.branch_d3).map_err(|e| e.at_stage("ffm branch d3"))?;
    let b7 = conv2d(&x_f, &p.branch_d7).map_err(|e| e.at_stage("ffm branch d7"))?;
    let fused = elementwise(&elementwise(&b1, &b3, ElementwiseOp::Add)?, &b7, ElementwiseOp::Add)?;
    let gate = conv2d(&global_avg_pool(&fused), &p.gap_attention_conv)
        .map_err(|e| e.at_stage("ffm attention"))?;
    let gate = activation(&gate, ActivationKind::Sigmoid);
    elementwise(&fused, &gate, ElementwiseOp::Mul).map_err(|e| e.at_stage("ffm gating"))
}

/// Configuration of the seeded toy network.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyNetworkConfig {
    /// Channel counts of the five stride-2 encoder stages, ascending.
    pub encoder_channels: [usize; 5],
    /// Channel counts of the four decoder blocks. Stages 0..=2 must equal
    /// the skip channels consumed by the following stage (`encoder_channels`
    /// 2, 1, 0) so the fusion add is well-formed.
    pub decoder_channels: [usize; 4],
    pub seed: u64,
    pub upsample: UpsampleKind,
}

impl Default for ToyNetworkConfig {
    fn default() -> Self {
        ToyNetworkConfig {
            encoder_channels: [8, 16, 32, 64, 128],
            decoder_channels: [32, 16, 8, 8],
            seed: 0,
            upsample: UpsampleKind::Bilinear,
        }
    }
}

impl ToyNetworkConfig {
    pub fn with_seed(seed: u64) -> Self {
        ToyNetworkConfig {
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.encoder_channels.contains(&0)
            || self.decoder_channels.contains(&0)
        {
            return Err(Error::invalid("network config: channel counts must be positive"));
        }
        if self.encoder_channels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(
                "network config: encoder channels must be ascending",
            ));
        }
        for s in 0..3 {
            let expected = self.encoder_channels[2 - s];
            if self.decoder_channels[s] != expected {
                return Err(Error::invalid(format!(
                    "network config: decoder stage {s} must emit {expected} channels to match \
                     the next skip connection, got {}",
                    self.decoder_channels[s]
                )));
            }
        }
        Ok(())
    }
}

/// Deterministic weight source. The construction order of the network
/// defines the stream layout, so a seed fully determines every parameter.
struct WeightGen {
    rng: ChaCha8Rng,
}

impl WeightGen {
    fn new(seed: u64) -> Self {
        WeightGen {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform in [0, 1).
    fn unit(&mut self) -> f64 {
        self.rng.next_u32() as f64 / 4294967296.0
    }

    /// Uniform in [lo, hi).
    fn range(&mut self, lo: f64, hi: f64) -> f32 {
        (lo + (hi - lo) * self.unit()) as f32
    }

    fn conv(&mut self, out_c: usize, in_c: usize, kernel: usize, dilation: usize) -> ConvParams {
        let scale = 1.0 / ((in_c * kernel * kernel) as f64).sqrt();
        let weights = (0..out_c * in_c * kernel * kernel)
            .map(|_| self.range(-scale, scale))
            .collect();
        let bias = (0..out_c).map(|_| self.range(-scale, scale)).collect();
        ConvParams::new(out_c, in_c, kernel, dilation, weights, bias)
            .expect("generated parameters satisfy the invariants")
    }

    fn bn(&mut self, channels: usize) -> BatchNormParams {
        BatchNormParams {
            gamma: (0..channels).map(|_| self.range(0.75, 1.25)).collect(),
            beta: (0..channels).map(|_| self.range(-0.1, 0.1)).collect(),
            running_mean: (0..channels).map(|_| self.range(-0.1, 0.1)).collect(),
            running_var: (0..channels).map(|_| self.range(0.5, 1.5)).collect(),
            epsilon: 1e-5,
        }
    }

    fn conv_bn_relu(&mut self, out_c: usize, in_c: usize, kernel: usize) -> ConvBnRelu {
        ConvBnRelu {
            conv: self.conv(out_c, in_c, kernel, 1),
            bn: self.bn(out_c),
        }
    }

    fn ffm(&mut self, skip_c: usize, context_c: usize) -> FfmParams {
        FfmParams {
            fuse_bn_relu: self.conv_bn_relu(skip_c, skip_c, 1),
            context_proj: self.conv(skip_c, context_c, 1, 1),
            merge_conv: self.conv(skip_c, 2 * skip_c, 1, 1),
            branch_1x1: self.conv(skip_c, skip_c, 1, 1),
            branch_d3: self.conv(skip_c, skip_c, 3, 3),
            branch_d7: self.conv(skip_c, skip_c, 3, 7),
            gap_attention_conv: self.conv(skip_c, skip_c, 1, 1),
        }
    }
}

/// The full seeded network: immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyNetwork {
    encoder: Vec<ConvBnRelu>,
    cm: CmParams,
    ffms: Vec<FfmParams>,
    decoder_blocks: Vec<ConvBnRelu>,
    head: ConvParams,
    upsample: UpsampleKind,
}

fn build_encoder(gen: &mut WeightGen, cfg: &ToyNetworkConfig) -> Vec<ConvBnRelu> {
    let mut stages = Vec::with_capacity(5);
    let mut in_c = 3;
    for &out_c in &cfg.encoder_channels {
        stages.push(ConvBnRelu {
            conv: gen.conv(out_c, in_c, 3, 1),
            bn: gen.bn(out_c),
        });
        in_c = out_c;
    }
    stages
}

impl SaliencyNetwork {
    pub fn new(cfg: &ToyNetworkConfig) -> Result<Self> {
        cfg.validate()?;
        let mut gen = WeightGen::new(cfg.seed);
        let encoder = build_encoder(&mut gen, cfg);
        let context_c = cfg.encoder_channels[4];
        let cm = CmParams {
            conv_bn_relu: gen.conv_bn_relu(context_c, context_c, 1),
            attention_conv: gen.conv(context_c, context_c, 1, 1),
        };
        let mut ffms = Vec::with_capacity(4);
        let mut decoder_blocks = Vec::with_capacity(4);
        for s in 0..4 {
            let skip_c = cfg.encoder_channels[3 - s];
            ffms.push(gen.ffm(skip_c, context_c));
            decoder_blocks.push(ConvBnRelu {
                conv: gen.conv(cfg.decoder_channels[s], skip_c, 3, 1),
                bn: gen.bn(cfg.decoder_channels[s]),
            });
        }
        let head = gen.conv(1, cfg.decoder_channels[3], 1, 1);
        Ok(SaliencyNetwork {
            encoder,
            cm,
            ffms,
            decoder_blocks,
            head,
            upsample: cfg.upsample,
        })
    }
}

/// 3x3 stride-2 convolution with padding 1; the encoder's downsampling step.
fn conv2d_stride2(input: &Tensor, p: &ConvParams) -> Result<Tensor> {
    if input.channels() != p.in_channels {
        return Err(Error::shape(
            "strided conv input channels",
            format!("{}", p.in_channels),
            format!("{}", input.channels()),
        ));
    }
    let (h, w) = (input.height(), input.width());
    let (oh, ow) = (h / 2, w / 2);
    let mut out = vec![0.0f32; p.out_channels * oh * ow];
    crate::par::for_each_chunk(&mut out, oh * ow, |o, plane| {
        for y in 0..oh {
            for x in 0..ow {
                let mut acc = p.bias[o] as f64;
                for i in 0..p.in_channels {
                    let in_plane = input.channel(i);
                    for dy in 0..3usize {
                        let sy = 2 * y as isize + dy as isize - 1;
                        if sy < 0 || sy >= h as isize {
                            continue;
                        }
                        for dx in 0..3usize {
                            let sx = 2 * x as isize + dx as isize - 1;
                            if sx < 0 || sx >= w as isize {
                                continue;
                            }
                            let wv = p.weights[((o * p.in_channels + i) * 3 + dy) * 3 + dx];
                            acc += wv as f64 * in_plane[sy as usize * w + sx as usize] as f64;
                        }
                    }
                }
                plane[y * ow + x] = acc as f32;
            }
        }
    });
    Tensor::new(p.out_channels, oh, ow, out)
}

fn check_image(image: &Tensor) -> Result<()> {
    if image.channels() != 3 {
        return Err(Error::shape(
            "network input",
            "3 channels".to_string(),
            format!("{} channels", image.channels()),
        ));
    }
    if !image.height().is_multiple_of(32) || !image.width().is_multiple_of(32) || image.height() == 0 || image.width() == 0 {
        return Err(Error::invalid(format!(
            "network input: spatial dimensions must be positive multiples of 32, got {}x{}",
            image.height(),
            image.width()
        )));
    }
    Ok(())
}

fn encoder_features(encoder: &[ConvBnRelu], image: &Tensor) -> Result<Vec<Tensor>> {
    let mut features = Vec::with_capacity(5);
    let mut x = image.clone();
    for (i, stage) in encoder.iter().enumerate() {
        let conv = conv2d_stride2(&x, &stage.conv)
            .map_err(|e| e.at_stage(&format!("encoder stage {}", i + 1)))?;
        let bn = batchnorm_infer(&conv, &stage.bn)
            .map_err(|e| e.at_stage(&format!("encoder stage {}", i + 1)))?;
        x = activation(&bn, ActivationKind::Relu);
        features.push(x.clone());
    }
    Ok(features)
}

/// Run the five encoder stages built from `cfg.seed`; stage `i` halves the
/// spatial size `i` times.
pub fn toy_encoder_forward(image: &Tensor, cfg: &ToyNetworkConfig) -> Result<Vec<Tensor>> {
    cfg.validate()?;
    check_image(image)?;
    let mut gen = WeightGen::new(cfg.seed);
    let encoder = build_encoder(&mut gen, cfg);
    encoder_features(&encoder, image)
}

/// Full forward pass: encoder, context module on the deepest feature, four
/// fusion + decoder stages consuming the skip connections in reverse order,
/// 1x1 head, sigmoid, and a final upsample back to the input size.
pub fn network_forward(image: &Tensor, net: &SaliencyNetwork) -> Result<PredictionMap> {
    check_image(image)?;
    let features = encoder_features(&net.encoder, image)?;
    let context = context_module(&features[4], &net.cm)?;
    let mut decoded: Option<Tensor> = None;
    for s in 0..4 {
        let skip = &features[3 - s];
        let fused = ffm_forward(skip, decoded.as_ref(), &context, &net.ffms[s], net.upsample)
            .map_err(|e| e.at_stage(&format!("decoder stage {}", s + 1)))?;
        decoded = Some(
            net.decoder_blocks[s]
                .forward(&fused)
                .map_err(|e| e.at_stage(&format!("decoder stage {}", s + 1)))?,
        );
    }
    let logits = conv2d(decoded.as_ref().expect("four decoder stages ran"), &net.head)
        .map_err(|e| e.at_stage("output head"))?;
    let probs = activation(&logits, ActivationKind::Sigmoid);
    let full = upsample2x(&probs, net.upsample);
    let values = full.channel(0).iter().map(|&v| v as f64).collect();
    PredictionMap::new(full.height(), full.width(), values)
}
