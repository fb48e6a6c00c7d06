//! Minimal masked-autoencoder network (transformer encoder/decoder
//! over time patches), forward only.
//!
//! Windows are partitioned into non-overlapping time patches spanning
//! all three channels. Masked patches are replaced by a learned mask
//! token after embedding; a small transformer reconstructs every patch.
//! The reconstruction objective lives in the training module.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tensor::{Tensor2, Tensor3};
use super::EncoderError;
use crate::segment::{CHANNELS, WINDOW_SAMPLES};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MaeNetConfig {
    pub patch_size: usize,
    pub width: usize,
    pub enc_layers: usize,
    pub dec_layers: usize,
    pub heads: usize,
}

impl Default for MaeNetConfig {
    fn default() -> Self {
        Self { patch_size: 8, width: 64, enc_layers: 4, dec_layers: 2, heads: 4 }
    }
}

impl MaeNetConfig {
    pub fn num_patches(&self) -> Result<usize, EncoderError> {
        if self.patch_size == 0 || !WINDOW_SAMPLES.is_multiple_of(self.patch_size) {
            return Err(EncoderError::BadPatchSize(format!(
                "patch size {} does not divide {}",
                self.patch_size, WINDOW_SAMPLES
            )));
        }
        Ok(WINDOW_SAMPLES / self.patch_size)
    }

    pub fn patch_dim(&self) -> usize {
        CHANNELS * self.patch_size
    }
}

/// Number of masked patches for a mask ratio (round to nearest).
pub fn masked_count(mask_ratio: f64, num_patches: usize) -> usize {
    (mask_ratio * num_patches as f64).round() as usize
}

/// Seeded random patch mask with exactly `masked_count` ones.
pub fn make_mask(mask_ratio: f64, num_patches: usize, seed: u64) -> Vec<bool> {
    let m = masked_count(mask_ratio, num_patches);
    let mut idx: Vec<usize> = (0..num_patches).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Partial Fisher-Yates: the first m entries become the masked set.
    for i in 0..m.min(num_patches) {
        let j = rng.random_range(i..num_patches);
        idx.swap(i, j);
    }
    let mut mask = vec![false; num_patches];
    for &i in idx.iter().take(m) {
        mask[i] = true;
    }
    mask
}

struct TransformerBlock {
    ln1_g: Vec<f32>,
    ln1_b: Vec<f32>,
    wq: Vec<f32>,
    wk: Vec<f32>,
    wv: Vec<f32>,
    wo: Vec<f32>,
    ln2_g: Vec<f32>,
    ln2_b: Vec<f32>,
    w1: Vec<f32>,
    b1: Vec<f32>,
    w2: Vec<f32>,
    b2: Vec<f32>,
}

/// Forward-only MAE network.
pub struct MaeNetwork {
    pub config: MaeNetConfig,
    embed_w: Vec<f32>, // [width, patch_dim]
    embed_b: Vec<f32>,
    pos: Vec<f32>, // [num_patches, width]
    mask_token: Vec<f32>,
    blocks: Vec<TransformerBlock>,
    final_ln_g: Vec<f32>,
    final_ln_b: Vec<f32>,
    head_w: Vec<f32>, // [patch_dim, width]
    head_b: Vec<f32>,
}

impl MaeNetwork {
    pub fn new(config: MaeNetConfig, seed: u64) -> Result<Self, EncoderError> {
        let n_patches = config.num_patches()?;
        if !config.width.is_multiple_of(config.heads) {
            return Err(EncoderError::BadConfig(format!(
                "width {} not divisible by heads {}",
                config.width, config.heads
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = config.width;
        let pd = config.patch_dim();
        let mut init = |n: usize, fan_in: usize| -> Vec<f32> {
            let bound = (6.0 / fan_in as f64).sqrt();
            (0..n).map(|_| rng.random_range(-bound..bound) as f32).collect()
        };
        let embed_w = init(d * pd, pd);
        let pos = init(n_patches * d, d);
        let mask_token = init(d, d);
        let blocks = (0..config.enc_layers + config.dec_layers)
            .map(|_| TransformerBlock {
                ln1_g: vec![1.0; d],
                ln1_b: vec![0.0; d],
                wq: init(d * d, d),
                wk: init(d * d, d),
                wv: init(d * d, d),
                wo: init(d * d, d),
                ln2_g: vec![1.0; d],
                ln2_b: vec![0.0; d],
                w1: init(2 * d * d, d),
                b1: vec![0.0; 2 * d],
                w2: init(d * 2 * d, 2 * d),
                b2: vec![0.0; d],
            })
            .collect();
        let head_w = init(pd * d, d);
        Ok(Self {
            embed_b: vec![0.0; d],
            final_ln_g: vec![1.0; d],
            final_ln_b: vec![0.0; d],
            head_b: vec![0.0; pd],
            config,
            embed_w,
            pos,
            mask_token,
            blocks,
            head_w,
        })
    }

    /// Reconstruct a batch from its masked patches.
    ///
    /// `mask[i] == true` marks patch `i` as masked (its content is
    /// hidden from the network). Output has the input shape.
    pub fn forward(
        &self,
        x: &Tensor3<f32>,
        mask: &[bool],
    ) -> Result<Tensor3<f32>, EncoderError> {
        let n_patches = self.config.num_patches()?;
        if mask.len() != n_patches {
            return Err(EncoderError::BadPatchSize(format!(
                "mask length {} != {} patches",
                mask.len(),
                n_patches
            )));
        }
        if x.c != CHANNELS || x.l != WINDOW_SAMPLES {
            return Err(EncoderError::ShapeMismatch {
                expected: format!("Bx{CHANNELS}x{WINDOW_SAMPLES}"),
                got: format!("{}x{}x{}", x.b, x.c, x.l),
            });
        }
        let d = self.config.width;
        let pd = self.config.patch_dim();
        let ps = self.config.patch_size;

        let mut recon = Tensor3::zeros(x.b, x.c, x.l);
        for bi in 0..x.b {
            // Tokens: embedded patch or mask token, plus positions.
            let mut tokens = Tensor2::<f32>::zeros(n_patches, d);
            for p in 0..n_patches {
                let trow = tokens.row_mut(p);
                if mask[p] {
                    trow.copy_from_slice(&self.mask_token);
                } else {
                    let mut patch = Vec::with_capacity(pd);
                    for ci in 0..x.c {
                        patch.extend_from_slice(&x.row(bi, ci)[p * ps..(p + 1) * ps]);
                    }
                    for o in 0..d {
                        let mut acc = self.embed_b[o];
                        for (i, v) in patch.iter().enumerate() {
                            acc += self.embed_w[o * pd + i] * v;
                        }
                        trow[o] = acc;
                    }
                }
                for o in 0..d {
                    trow[o] += self.pos[p * d + o];
                }
            }

            for blk in &self.blocks {
                block_forward(blk, &mut tokens, self.config.heads);
            }

            // Final norm + linear head back to patch values.
            for p in 0..n_patches {
                let normed = layer_norm(tokens.row(p), &self.final_ln_g, &self.final_ln_b);
                for o in 0..pd {
                    let mut acc = self.head_b[o];
                    for (i, v) in normed.iter().enumerate() {
                        acc += self.head_w[o * d + i] * v;
                    }
                    let ci = o / ps;
                    let li = p * ps + o % ps;
                    recon.row_mut(bi, ci)[li] = acc;
                }
            }
        }
        Ok(recon)
    }
}

fn layer_norm(x: &[f32], g: &[f32], b: &[f32]) -> Vec<f32> {
    let n = x.len() as f32;
    let mean = x.iter().sum::<f32>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f32>() / n;
    let inv = 1.0 / (var + 1e-5).sqrt();
    x.iter()
        .zip(g.iter().zip(b))
        .map(|(v, (g, b))| (v - mean) * inv * g + b)
        .collect()
}

fn block_forward(blk: &TransformerBlock, tokens: &mut Tensor2<f32>, heads: usize) {
    let n = tokens.r;
    let d = tokens.c;
    let hd = d / heads;
    let scale = 1.0 / (hd as f32).sqrt();

    // Attention on the pre-normed tokens.
    let normed: Vec<Vec<f32>> = (0..n)
        .map(|p| layer_norm(tokens.row(p), &blk.ln1_g, &blk.ln1_b))
        .collect();
    let proj = |w: &[f32], x: &[f32]| -> Vec<f32> {
        (0..d)
            .map(|o| (0..d).map(|i| w[o * d + i] * x[i]).sum())
            .collect()
    };
    let q: Vec<Vec<f32>> = normed.iter().map(|x| proj(&blk.wq, x)).collect();
    let k: Vec<Vec<f32>> = normed.iter().map(|x| proj(&blk.wk, x)).collect();
    let v: Vec<Vec<f32>> = normed.iter().map(|x| proj(&blk.wv, x)).collect();

    let mut attended = vec![vec![0.0f32; d]; n];
    for h in 0..heads {
        let at = h * hd;
        for i in 0..n {
            // Softmax over keys.
            let mut logits = Vec::with_capacity(n);
            let mut max = f32::MIN;
            for j in 0..n {
                let mut s = 0.0;
                for t in 0..hd {
                    s += q[i][at + t] * k[j][at + t];
                }
                let s = s * scale;
                max = max.max(s);
                logits.push(s);
            }
            let mut z = 0.0;
            for l in &mut logits {
                *l = (*l - max).exp();
                z += *l;
            }
            for (j, l) in logits.iter().enumerate() {
                let w = l / z;
                for t in 0..hd {
                    attended[i][at + t] += w * v[j][at + t];
                }
            }
        }
    }
    for i in 0..n {
        let o = proj(&blk.wo, &attended[i]);
        let row = tokens.row_mut(i);
        for t in 0..d {
            row[t] += o[t];
        }
    }

    // MLP with SiLU.
    for i in 0..n {
        let normed = layer_norm(tokens.row(i), &blk.ln2_g, &blk.ln2_b);
        let mut h1 = vec![0.0f32; 2 * d];
        for o in 0..2 * d {
            let mut acc = blk.b1[o];
            for t in 0..d {
                acc += blk.w1[o * d + t] * normed[t];
            }
            h1[o] = acc / (1.0 + (-acc).exp());
        }
        let row = tokens.row_mut(i);
        for o in 0..d {
            let mut acc = blk.b2[o];
            for (t, h) in h1.iter().enumerate() {
                acc += blk.w2[o * 2 * d + t] * h;
            }
            row[o] += acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn batch(b: usize) -> Tensor3<f32> {
        let mut rng = crate::rng::stream_rng(31, 0);
        let mut t = Tensor3::zeros(b, CHANNELS, WINDOW_SAMPLES);
        for v in &mut t.data {
            *v = rng.random_range(0.0..1.0);
        }
        t
    }

    #[test]
    fn shape_contract_in_equals_out() {
        let net = MaeNetwork::new(MaeNetConfig::default(), 1).unwrap();
        let x = batch(2);
        let mask = vec![false; 30];
        let y = net.forward(&x, &mask).unwrap();
        assert_eq!((y.b, y.c, y.l), (2, 3, 240));
        assert!(y.is_finite());
    }

    #[test]
    fn mask_ratio_counts_are_exact() {
        assert_eq!(masked_count(0.4, 30), 12);
        assert_eq!(masked_count(0.0, 30), 0);
        assert_eq!(masked_count(0.1, 30), 3);
        let mask = make_mask(0.4, 30, 7);
        assert_eq!(mask.iter().filter(|m| **m).count(), 12);
        let none = make_mask(0.0, 30, 7);
        assert_eq!(none.iter().filter(|m| **m).count(), 0);
    }

    #[test]
    fn all_visible_mask_is_accepted() {
        // The m = 0 configuration: nothing masked, reconstruction is
        // defined on every patch.
        let net = MaeNetwork::new(MaeNetConfig::default(), 2).unwrap();
        let x = batch(1);
        let y = net.forward(&x, &vec![false; 30]).unwrap();
        assert!(y.is_finite());
    }

    #[test]
    fn masked_patches_change_the_reconstruction() {
        let net = MaeNetwork::new(MaeNetConfig::default(), 3).unwrap();
        let x = batch(1);
        let y_open = net.forward(&x, &vec![false; 30]).unwrap();
        let mut mask = vec![false; 30];
        mask[5] = true;
        mask[17] = true;
        let y_masked = net.forward(&x, &mask).unwrap();
        assert_ne!(y_open.data, y_masked.data);
    }

    #[test]
    fn bad_patch_geometry_rejected() {
        let cfg = MaeNetConfig { patch_size: 7, ..MaeNetConfig::default() };
        assert!(matches!(
            MaeNetwork::new(cfg, 0),
            Err(EncoderError::BadPatchSize(_))
        ));
        let net = MaeNetwork::new(MaeNetConfig::default(), 0).unwrap();
        let x = batch(1);
        assert!(matches!(
            net.forward(&x, &vec![false; 29]),
            Err(EncoderError::BadPatchSize(_))
        ));
    }

    #[test]
    fn forward_is_deterministic() {
        let net = MaeNetwork::new(MaeNetConfig::default(), 4).unwrap();
        let x = batch(2);
        let mask = make_mask(0.4, 30, 9);
        let a = net.forward(&x, &mask).unwrap();
        let b = net.forward(&x, &mask).unwrap();
        assert_eq!(a.data, b.data);
    }
}
