//! EfficientNet-style 1D encoder: stem -> inverted-bottleneck blocks
//! with depthwise convolutions and squeeze-excitation -> conv head ->
//! global average pool -> linear embedding.

use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::layers::{BatchNorm1d, Conv1d, Dropout, GlobalAvgPool, Linear, Silu, SqueezeExcite};
use super::tensor::{Param, Tensor2, Tensor3};
use super::EncoderError;

/// Architecture hyperparameters.
///
/// The reference model follows the published final configuration (stem
/// 64, 16 blocks of 64 channels, head 248, 64-dim embeddings, kernel 9,
/// 50% head dropout); kernel size 3 is a supported option. Temporal
/// downsampling is stride 2 at the stem and at `stride_blocks`
/// (1-based), giving 240 -> 15 before pooling for the reference
/// schedule.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EncoderConfig {
    pub in_channels: usize,
    pub input_len: usize,
    pub stem_channels: usize,
    pub mbconv_channels: usize,
    pub num_blocks: usize,
    pub head_channels: usize,
    pub embedding_dim: usize,
    pub kernel_size: usize,
    pub expansion: usize,
    pub se_ratio: f64,
    pub dropout: f64,
    pub stride_blocks: Vec<usize>,
}

impl EncoderConfig {
    /// The published final configuration (~1.1M parameters).
    pub fn reference() -> Self {
        Self {
            in_channels: 3,
            input_len: 240,
            stem_channels: 64,
            mbconv_channels: 64,
            num_blocks: 16,
            head_channels: 248,
            embedding_dim: 64,
            kernel_size: 9,
            expansion: 4,
            se_ratio: 0.25,
            dropout: 0.5,
            stride_blocks: vec![5, 9, 13],
        }
    }

    /// Two-block configuration for gradient checks and smoke training.
    pub fn tiny() -> Self {
        Self {
            in_channels: 3,
            input_len: 240,
            stem_channels: 8,
            mbconv_channels: 8,
            num_blocks: 2,
            head_channels: 16,
            embedding_dim: 16,
            kernel_size: 9,
            expansion: 4,
            se_ratio: 0.25,
            dropout: 0.0,
            stride_blocks: vec![2],
        }
    }

    pub fn validate(&self) -> Result<(), EncoderError> {
        let positive = [
            self.in_channels,
            self.input_len,
            self.stem_channels,
            self.mbconv_channels,
            self.num_blocks,
            self.head_channels,
            self.embedding_dim,
            self.kernel_size,
            self.expansion,
        ];
        if positive.contains(&0) {
            return Err(EncoderError::BadConfig("all dimensions must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.se_ratio) || !(0.0..1.0).contains(&self.dropout) {
            return Err(EncoderError::BadConfig(
                "se_ratio must be in [0,1], dropout in [0,1)".into(),
            ));
        }
        if self.stride_blocks.iter().any(|b| *b == 0 || *b > self.num_blocks) {
            return Err(EncoderError::BadConfig(format!(
                "stride blocks {:?} out of 1..={}",
                self.stride_blocks, self.num_blocks
            )));
        }
        Ok(())
    }

    pub fn expanded_channels(&self) -> usize {
        self.mbconv_channels * self.expansion
    }

    /// Squeeze width, taken relative to the expanded channels.
    pub fn se_channels(&self) -> usize {
        ((self.expanded_channels() as f64 * self.se_ratio).round() as usize).max(1)
    }

    fn block_stride(&self, idx_1based: usize) -> usize {
        if self.stride_blocks.contains(&idx_1based) {
            2
        } else {
            1
        }
    }

    /// Sequence lengths entering each block, then the head.
    pub fn length_schedule(&self) -> Vec<usize> {
        let conv_out = |l: usize, k: usize, s: usize| (l + 2 * (k / 2) - k) / s + 1;
        let mut lens = Vec::with_capacity(self.num_blocks + 2);
        let mut l = conv_out(self.input_len, self.kernel_size, 2); // stem
        lens.push(l);
        for b in 1..=self.num_blocks {
            l = conv_out(l, self.kernel_size, self.block_stride(b));
            lens.push(l);
        }
        lens
    }
}

/// One op of the analytic per-layer plan used for FLOP accounting.
#[derive(Debug, Clone, PartialEq)]
pub enum PlanOp {
    /// Grouped convolution: `2 * out_len * out_ch * in_ch_per_group * k`.
    Conv { out_len: usize, out_ch: usize, in_ch_per_group: usize, kernel: usize },
    /// Fully connected: `2 * inf * outf` per sample.
    Linear { inf: usize, outf: usize },
    /// One FLOP per element (normalization, activation, gating, adds).
    Elementwise { n: usize },
    /// One FLOP per pooled input element.
    Pool { n: usize },
}

/// Complete per-layer plan of one forward pass on a single sample.
pub fn layer_plan(cfg: &EncoderConfig) -> Vec<(String, PlanOp)> {
    let mut plan = Vec::new();
    let lens = cfg.length_schedule();
    let k = cfg.kernel_size;
    let mid = cfg.expanded_channels();
    let se_ch = cfg.se_channels();

    let stem_len = lens[0];
    plan.push((
        "stem.conv".into(),
        PlanOp::Conv { out_len: stem_len, out_ch: cfg.stem_channels, in_ch_per_group: cfg.in_channels, kernel: k },
    ));
    plan.push(("stem.bn".into(), PlanOp::Elementwise { n: cfg.stem_channels * stem_len }));
    plan.push(("stem.silu".into(), PlanOp::Elementwise { n: cfg.stem_channels * stem_len }));

    let ch = cfg.mbconv_channels;
    for b in 1..=cfg.num_blocks {
        let l_in = lens[b - 1];
        let l_out = lens[b];
        let in_ch = if b == 1 { cfg.stem_channels } else { ch };
        let p = |s: &str| format!("block{:02}.{s}", b - 1);
        plan.push((p("expand.conv"), PlanOp::Conv { out_len: l_in, out_ch: mid, in_ch_per_group: in_ch, kernel: 1 }));
        plan.push((p("expand.bn"), PlanOp::Elementwise { n: mid * l_in }));
        plan.push((p("expand.silu"), PlanOp::Elementwise { n: mid * l_in }));
        plan.push((p("dw.conv"), PlanOp::Conv { out_len: l_out, out_ch: mid, in_ch_per_group: 1, kernel: k }));
        plan.push((p("dw.bn"), PlanOp::Elementwise { n: mid * l_out }));
        plan.push((p("dw.silu"), PlanOp::Elementwise { n: mid * l_out }));
        plan.push((p("se.pool"), PlanOp::Pool { n: mid * l_out }));
        plan.push((p("se.squeeze"), PlanOp::Linear { inf: mid, outf: se_ch }));
        plan.push((p("se.squeeze_act"), PlanOp::Elementwise { n: se_ch }));
        plan.push((p("se.excite"), PlanOp::Linear { inf: se_ch, outf: mid }));
        plan.push((p("se.gate"), PlanOp::Elementwise { n: mid }));
        plan.push((p("se.scale"), PlanOp::Elementwise { n: mid * l_out }));
        plan.push((p("project.conv"), PlanOp::Conv { out_len: l_out, out_ch: ch, in_ch_per_group: mid, kernel: 1 }));
        plan.push((p("project.bn"), PlanOp::Elementwise { n: ch * l_out }));
        let residual = cfg.block_stride(b) == 1 && in_ch == ch;
        if residual {
            plan.push((p("residual"), PlanOp::Elementwise { n: ch * l_out }));
        }
    }

    let l_head = lens[cfg.num_blocks];
    plan.push((
        "head.conv".into(),
        PlanOp::Conv { out_len: l_head, out_ch: cfg.head_channels, in_ch_per_group: ch, kernel: 1 },
    ));
    plan.push(("head.bn".into(), PlanOp::Elementwise { n: cfg.head_channels * l_head }));
    plan.push(("head.silu".into(), PlanOp::Elementwise { n: cfg.head_channels * l_head }));
    plan.push(("head.pool".into(), PlanOp::Pool { n: cfg.head_channels * l_head }));
    plan.push((
        "head.fc".into(),
        PlanOp::Linear { inf: cfg.head_channels, outf: cfg.embedding_dim },
    ));
    plan
}

#[derive(Debug, Clone)]
struct ConvBnAct<T> {
    conv: Conv1d<T>,
    bn: BatchNorm1d<T>,
    act: Option<Silu<T>>,
}

impl<T: Float> ConvBnAct<T> {
    fn forward(&mut self, x: &Tensor3<T>, train: bool, record: bool) -> Tensor3<T> {
        let y = self.conv.forward(x, record);
        let y = self.bn.forward(&y, train, record);
        match &mut self.act {
            Some(a) => a.forward(&y, record),
            None => y,
        }
    }

    fn backward(&mut self, gy: &Tensor3<T>) -> Tensor3<T> {
        let g = match &mut self.act {
            Some(a) => a.backward(gy),
            None => gy.clone(),
        };
        let g = self.bn.backward(&g);
        self.conv.backward(&g)
    }
}

/// Inverted-bottleneck block with depthwise conv and SE gate.
#[derive(Debug, Clone)]
struct MbConv<T> {
    expand: ConvBnAct<T>,
    dw: ConvBnAct<T>,
    se: SqueezeExcite<T>,
    project: ConvBnAct<T>,
    residual: bool,
    cache_x: Option<Tensor3<T>>,
}

impl<T: Float> MbConv<T> {
    fn new(
        in_ch: usize,
        cfg: &EncoderConfig,
        stride: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mid = cfg.expanded_channels();
        let out_ch = cfg.mbconv_channels;
        let k = cfg.kernel_size;
        let expand = ConvBnAct {
            conv: Conv1d::new(in_ch, mid, 1, 1, 0, 1, false, rng),
            bn: BatchNorm1d::new(mid),
            act: Some(Silu::new()),
        };
        let dw = ConvBnAct {
            conv: Conv1d::new(mid, mid, k, stride, k / 2, mid, false, rng),
            bn: BatchNorm1d::new(mid),
            act: Some(Silu::new()),
        };
        let se = SqueezeExcite::new(mid, cfg.se_channels(), rng);
        let project = ConvBnAct {
            conv: Conv1d::new(mid, out_ch, 1, 1, 0, 1, false, rng),
            bn: BatchNorm1d::new(out_ch),
            act: None,
        };
        let residual = stride == 1 && in_ch == out_ch;
        Self { expand, dw, se, project, residual, cache_x: None }
    }

    fn forward(&mut self, x: &Tensor3<T>, train: bool, record: bool) -> Tensor3<T> {
        let h = self.expand.forward(x, train, record);
        let h = self.dw.forward(&h, train, record);
        let h = self.se.forward(&h, record);
        let mut y = self.project.forward(&h, train, record);
        if self.residual {
            for (v, xv) in y.data.iter_mut().zip(&x.data) {
                *v = *v + *xv;
            }
            if record {
                self.cache_x = Some(x.clone());
            }
        }
        y
    }

    fn backward(&mut self, gy: &Tensor3<T>) -> Tensor3<T> {
        let g = self.project.backward(gy);
        let g = self.se.backward(&g);
        let g = self.dw.backward(&g);
        let mut gx = self.expand.backward(&g);
        if self.residual {
            self.cache_x.take();
            for (v, gv) in gx.data.iter_mut().zip(&gy.data) {
                *v = *v + *gv;
            }
        }
        gx
    }
}

/// The encoder network.
#[derive(Debug, Clone)]
pub struct Encoder<T> {
    pub config: EncoderConfig,
    stem: ConvBnAct<T>,
    blocks: Vec<MbConv<T>>,
    head: ConvBnAct<T>,
    pool: GlobalAvgPool,
    dropout: Dropout<T>,
    fc: Linear<T>,
    has_tape: bool,
}

impl<T: Float> Encoder<T> {
    /// Build with deterministic seeded initialization: Kaiming-uniform
    /// convolutions and linears, zero biases, BN gamma 1 / beta 0.
    pub fn new(config: EncoderConfig, seed: u64) -> Result<Self, EncoderError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = config.kernel_size;
        let stem = ConvBnAct {
            conv: Conv1d::new(config.in_channels, config.stem_channels, k, 2, k / 2, 1, false, &mut rng),
            bn: BatchNorm1d::new(config.stem_channels),
            act: Some(Silu::new()),
        };
        let mut blocks = Vec::with_capacity(config.num_blocks);
        for b in 1..=config.num_blocks {
            let in_ch = if b == 1 { config.stem_channels } else { config.mbconv_channels };
            let stride = config.block_stride(b);
            blocks.push(MbConv::new(in_ch, &config, stride, &mut rng));
        }
        let head = ConvBnAct {
            conv: Conv1d::new(config.mbconv_channels, config.head_channels, 1, 1, 0, 1, false, &mut rng),
            bn: BatchNorm1d::new(config.head_channels),
            act: Some(Silu::new()),
        };
        let fc = Linear::new(config.head_channels, config.embedding_dim, &mut rng);
        Ok(Self {
            dropout: Dropout::new(config.dropout),
            config,
            stem,
            blocks,
            head,
            pool: GlobalAvgPool::new(),
            fc,
            has_tape: false,
        })
    }

    fn check_shape(&self, x: &Tensor3<T>) -> Result<(), EncoderError> {
        if x.c != self.config.in_channels || x.l != self.config.input_len || x.b == 0 {
            return Err(EncoderError::ShapeMismatch {
                expected: format!("Bx{}x{}", self.config.in_channels, self.config.input_len),
                got: format!("{}x{}x{}", x.b, x.c, x.l),
            });
        }
        Ok(())
    }

    /// Training-mode forward: batch statistics, active dropout (from
    /// `rng`), and a recorded tape for `backward`.
    pub fn forward_train(
        &mut self,
        x: &Tensor3<T>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Tensor2<T>, EncoderError> {
        self.check_shape(x)?;
        let mut h = self.stem.forward(x, true, true);
        for blk in &mut self.blocks {
            h = blk.forward(&h, true, true);
        }
        let h = self.head.forward(&h, true, true);
        let pooled = self.pool.forward(&h, true);
        let dropped = self.dropout.forward(&pooled, true, true, rng);
        let emb = self.fc.forward(&dropped, true);
        self.has_tape = true;
        Ok(emb)
    }

    /// Inference-mode forward: running statistics, no dropout, no tape.
    /// Deterministic and side-effect free.
    pub fn forward_eval(&mut self, x: &Tensor3<T>) -> Result<Tensor2<T>, EncoderError> {
        self.check_shape(x)?;
        let mut h = self.stem.forward(x, false, false);
        for blk in &mut self.blocks {
            h = blk.forward(&h, false, false);
        }
        let h = self.head.forward(&h, false, false);
        let pooled = self.pool.forward(&h, false);
        let mut rng = ChaCha8Rng::seed_from_u64(0); // unused in eval
        let dropped = self.dropout.forward(&pooled, false, false, &mut rng);
        Ok(self.fc.forward(&dropped, false))
    }

    /// Propagate embedding gradients back to every parameter.
    pub fn backward(&mut self, g_emb: &Tensor2<T>) -> Result<(), EncoderError> {
        if !self.has_tape {
            return Err(EncoderError::NoTape);
        }
        self.has_tape = false;
        let g = self.fc.backward(g_emb);
        let g = self.dropout.backward(&g);
        let g = self.pool.backward(&g);
        let g = self.head.backward(&g);
        let mut g3 = g;
        for blk in self.blocks.iter_mut().rev() {
            g3 = blk.backward(&g3);
        }
        self.stem.backward(&g3);
        Ok(())
    }

    /// Trainable parameters in a stable order.
    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        fn cba<'a, T: Float>(c: &'a mut ConvBnAct<T>, out: &mut Vec<&'a mut Param<T>>) {
            out.push(&mut c.conv.w);
            if let Some(b) = c.conv.bias.as_mut() {
                out.push(b);
            }
            out.push(&mut c.bn.gamma);
            out.push(&mut c.bn.beta);
        }
        let mut out: Vec<&mut Param<T>> = Vec::new();
        cba(&mut self.stem, &mut out);
        for blk in &mut self.blocks {
            cba(&mut blk.expand, &mut out);
            cba(&mut blk.dw, &mut out);
            out.push(&mut blk.se.w1);
            out.push(&mut blk.se.b1);
            out.push(&mut blk.se.w2);
            out.push(&mut blk.se.b2);
            cba(&mut blk.project, &mut out);
        }
        cba(&mut self.head, &mut out);
        out.push(&mut self.fc.w);
        out.push(&mut self.fc.b);
        out
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    pub fn param_count(&mut self) -> usize {
        self.params_mut().iter().map(|p| p.len()).sum()
    }

    /// Named tensors for checkpointing: every parameter plus the BN
    /// running statistics, in a stable order.
    pub fn named_tensors_mut(&mut self) -> Vec<(String, NamedTensor<'_, T>)> {
        let mut out = Vec::new();
        fn cba<'a, T: Float>(
            prefix: &str,
            c: &'a mut ConvBnAct<T>,
            out: &mut Vec<(String, NamedTensor<'a, T>)>,
        ) {
            out.push((format!("{prefix}.conv.w"), NamedTensor::Param(&mut c.conv.w)));
            if let Some(b) = c.conv.bias.as_mut() {
                out.push((format!("{prefix}.conv.b"), NamedTensor::Param(b)));
            }
            out.push((format!("{prefix}.bn.gamma"), NamedTensor::Param(&mut c.bn.gamma)));
            out.push((format!("{prefix}.bn.beta"), NamedTensor::Param(&mut c.bn.beta)));
            out.push((format!("{prefix}.bn.running_mean"), NamedTensor::State(&mut c.bn.running_mean)));
            out.push((format!("{prefix}.bn.running_var"), NamedTensor::State(&mut c.bn.running_var)));
        }
        cba("stem", &mut self.stem, &mut out);
        for (i, blk) in self.blocks.iter_mut().enumerate() {
            let p = format!("block{i:02}");
            cba(&format!("{p}.expand"), &mut blk.expand, &mut out);
            cba(&format!("{p}.dw"), &mut blk.dw, &mut out);
            out.push((format!("{p}.se.w1"), NamedTensor::Param(&mut blk.se.w1)));
            out.push((format!("{p}.se.b1"), NamedTensor::Param(&mut blk.se.b1)));
            out.push((format!("{p}.se.w2"), NamedTensor::Param(&mut blk.se.w2)));
            out.push((format!("{p}.se.b2"), NamedTensor::Param(&mut blk.se.b2)));
            cba(&format!("{p}.project"), &mut blk.project, &mut out);
        }
        cba("head", &mut self.head, &mut out);
        out.push(("head.fc.w".into(), NamedTensor::Param(&mut self.fc.w)));
        out.push(("head.fc.b".into(), NamedTensor::Param(&mut self.fc.b)));
        out
    }
}

/// A named view into a checkpointable tensor.
pub enum NamedTensor<'a, T> {
    Param(&'a mut Param<T>),
    State(&'a mut Vec<T>),
}

impl<T: Float> NamedTensor<'_, T> {
    pub fn data(&self) -> &[T] {
        match self {
            NamedTensor::Param(p) => &p.data,
            NamedTensor::State(s) => s,
        }
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        match self {
            NamedTensor::Param(p) => &mut p.data,
            NamedTensor::State(s) => s,
        }
    }

    pub fn shape(&self) -> Vec<usize> {
        match self {
            NamedTensor::Param(p) => p.shape.clone(),
            NamedTensor::State(s) => vec![s.len()],
        }
    }
}
