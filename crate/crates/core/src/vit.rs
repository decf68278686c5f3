//! Vision-Transformer stream: patch and position embedding followed by a
//! stack of pre-norm transformer encoder blocks. Maps an `S × S × 3` image
//! to a `1 × feature_dim` feature read from the class token.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::autodiff::{AutodiffError, BoundParams, Graph, ParamId, ParamStore, Scalar, Tensor, Var};
use crate::tfr::Image;

pub const LAYER_NORM_EPS: f64 = 1e-6;
pub const INIT_STD: f64 = 0.02;
/// Pixels in `[0, 1]` are mapped to `[-1, 1]` before the patch projection,
/// the usual ViT-B/16 input convention.
pub const INPUT_MEAN: f64 = 0.5;
pub const INPUT_STD: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ViTConfig {
    pub image_size: usize,
    pub patch_size: usize,
    pub hidden_dim: usize,
    pub depth: usize,
    pub heads: usize,
    pub mlp_dim: usize,
    pub feature_dim: usize,
}

impl Default for ViTConfig {
    /// ViT-Base/16 at 224 × 224.
    fn default() -> Self {
        Self { image_size: 224, patch_size: 16, hidden_dim: 768, depth: 12, heads: 12, mlp_dim: 3072, feature_dim: 768 }
    }
}

impl ViTConfig {
    /// Small stream used for desk-scale experiments.
    pub fn desk() -> Self {
        Self { image_size: 96, patch_size: 16, hidden_dim: 64, depth: 2, heads: 4, mlp_dim: 128, feature_dim: 64 }
    }

    /// Tiny stream for finite-difference checks.
    pub fn toy() -> Self {
        Self { image_size: 32, patch_size: 16, hidden_dim: 16, depth: 2, heads: 2, mlp_dim: 32, feature_dim: 16 }
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            self.image_size,
            self.patch_size,
            self.hidden_dim,
            self.heads,
            self.mlp_dim,
            self.feature_dim,
        ];
        if positive.contains(&0) {
            return Err(format!("all ViT dimensions except depth must be positive: {self:?}"));
        }
        if self.image_size % self.patch_size != 0 {
            return Err(format!(
                "image size {} is not divisible by patch size {}",
                self.image_size, self.patch_size
            ));
        }
        if self.hidden_dim % self.heads != 0 {
            return Err(format!("hidden dim {} is not divisible by {} heads", self.hidden_dim, self.heads));
        }
        Ok(())
    }

    pub fn grid(&self) -> usize {
        self.image_size / self.patch_size
    }

    pub fn patches(&self) -> usize {
        self.grid() * self.grid()
    }

    /// Patches plus the class token.
    pub fn seq_len(&self) -> usize {
        self.patches() + 1
    }

    /// Flattened length of one `patch × patch × 3` tile.
    pub fn patch_dim(&self) -> usize {
        self.patch_size * self.patch_size * Image::CHANNELS
    }

    pub fn head_dim(&self) -> usize {
        self.hidden_dim / self.heads
    }

    /// Scalar parameter count of one stream, from the configuration alone.
    pub fn param_count(&self) -> usize {
        let h = self.hidden_dim;
        let embed = h * self.patch_dim() + h + h + self.seq_len() * h;
        let block = 2 * (2 * h) + 4 * (h * h + h) + (self.mlp_dim * h + self.mlp_dim) + (h * self.mlp_dim + h);
        let head = 2 * h + self.feature_dim * h + self.feature_dim;
        embed + self.depth * block + head
    }
}

#[derive(Clone, Debug)]
pub struct BlockParams {
    pub norm1_gain: ParamId,
    pub norm1_bias: ParamId,
    pub query_weight: ParamId,
    pub query_bias: ParamId,
    pub key_weight: ParamId,
    pub key_bias: ParamId,
    pub value_weight: ParamId,
    pub value_bias: ParamId,
    pub out_weight: ParamId,
    pub out_bias: ParamId,
    pub norm2_gain: ParamId,
    pub norm2_bias: ParamId,
    pub fc1_weight: ParamId,
    pub fc1_bias: ParamId,
    pub fc2_weight: ParamId,
    pub fc2_bias: ParamId,
}

/// Parameter handles of one stream inside a [`ParamStore`].
#[derive(Clone, Debug)]
pub struct ViTParams {
    pub config: ViTConfig,
    pub patch_weight: ParamId,
    pub patch_bias: ParamId,
    /// Learnable class token, `1 × hidden`.
    pub class_token: ParamId,
    /// Learnable position matrix, `seq_len × hidden`.
    pub position: ParamId,
    pub blocks: Vec<BlockParams>,
    pub norm_gain: ParamId,
    pub norm_bias: ParamId,
    pub head_weight: ParamId,
    pub head_bias: ParamId,
}

/// Normal(0, std) truncated to ±2 std by resampling.
pub(crate) fn trunc_normal<T: Scalar, R: Rng>(rng: &mut R, shape: &[usize], std: f64) -> Tensor<T> {
    let normal = Normal::new(0.0, std).expect("positive std");
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| loop {
            let v: f64 = normal.sample(rng);
            if v.abs() <= 2.0 * std {
                break T::from_f64_lossy(v);
            }
        })
        .collect();
    Tensor::new(shape, data).expect("shape matches")
}

impl ViTParams {
    /// Registers a stream under `prefix` (e.g. `vit_s`): truncated-normal
    /// projections, zero biases, zero class token and position matrix, unit
    /// layer-norm gains.
    pub fn init<T: Scalar, R: Rng>(store: &mut ParamStore<T>, prefix: &str, config: &ViTConfig, rng: &mut R) -> Self {
        let h = config.hidden_dim;
        let mut w = |store: &mut ParamStore<T>, name: String, rows: usize, cols: usize| {
            store.add(name, trunc_normal(rng, &[rows, cols], INIT_STD))
        };
        let zeros = |store: &mut ParamStore<T>, name: String, shape: &[usize]| store.add(name, Tensor::zeros(shape));
        let ones = |store: &mut ParamStore<T>, name: String, n: usize| store.add(name, Tensor::full(&[n], T::one()));

        let patch_weight = w(store, format!("{prefix}.patch_embed.weight"), h, config.patch_dim());
        let patch_bias = zeros(store, format!("{prefix}.patch_embed.bias"), &[h]);
        let class_token = zeros(store, format!("{prefix}.cls_token"), &[1, h]);
        let position = zeros(store, format!("{prefix}.pos_embed"), &[config.seq_len(), h]);
        let mut blocks = Vec::with_capacity(config.depth);
        for i in 0..config.depth {
            let p = format!("{prefix}.blocks.{i}");
            blocks.push(BlockParams {
                norm1_gain: ones(store, format!("{p}.norm1.gain"), h),
                norm1_bias: zeros(store, format!("{p}.norm1.bias"), &[h]),
                query_weight: w(store, format!("{p}.attn.query.weight"), h, h),
                query_bias: zeros(store, format!("{p}.attn.query.bias"), &[h]),
                key_weight: w(store, format!("{p}.attn.key.weight"), h, h),
                key_bias: zeros(store, format!("{p}.attn.key.bias"), &[h]),
                value_weight: w(store, format!("{p}.attn.value.weight"), h, h),
                value_bias: zeros(store, format!("{p}.attn.value.bias"), &[h]),
                out_weight: w(store, format!("{p}.attn.out.weight"), h, h),
                out_bias: zeros(store, format!("{p}.attn.out.bias"), &[h]),
                norm2_gain: ones(store, format!("{p}.norm2.gain"), h),
                norm2_bias: zeros(store, format!("{p}.norm2.bias"), &[h]),
                fc1_weight: w(store, format!("{p}.mlp.fc1.weight"), config.mlp_dim, h),
                fc1_bias: zeros(store, format!("{p}.mlp.fc1.bias"), &[config.mlp_dim]),
                fc2_weight: w(store, format!("{p}.mlp.fc2.weight"), h, config.mlp_dim),
                fc2_bias: zeros(store, format!("{p}.mlp.fc2.bias"), &[h]),
            });
        }
        let norm_gain = ones(store, format!("{prefix}.norm.gain"), h);
        let norm_bias = zeros(store, format!("{prefix}.norm.bias"), &[h]);
        let head_weight = w(store, format!("{prefix}.head.weight"), config.feature_dim, h);
        let head_bias = zeros(store, format!("{prefix}.head.bias"), &[config.feature_dim]);
        Self {
            config: config.clone(),
            patch_weight,
            patch_bias,
            class_token,
            position,
            blocks,
            norm_gain,
            norm_bias,
            head_weight,
            head_bias,
        }
    }
}

/// Flattens non-overlapping `p × p × 3` tiles into rows, tiles in row-major
/// grid order, each tile row-major with channels innermost.
pub fn patchify<T: Scalar>(image: &Image, patch: usize) -> Result<Tensor<T>, AutodiffError> {
    let s = image.size;
    if patch == 0 || s % patch != 0 || image.data.len() != s * s * Image::CHANNELS {
        return Err(AutodiffError::Shape { op: "patchify", lhs: vec![s, s, Image::CHANNELS], rhs: vec![patch, patch] });
    }
    let grid = s / patch;
    let dim = patch * patch * Image::CHANNELS;
    let mut out = Vec::with_capacity(grid * grid * dim);
    for gy in 0..grid {
        for gx in 0..grid {
            for py in 0..patch {
                let y = gy * patch + py;
                let start = (y * s + gx * patch) * Image::CHANNELS;
                out.extend(image.data[start..start + patch * Image::CHANNELS].iter().map(|&v| T::from_f64_lossy(f64::from(v))));
            }
        }
    }
    Tensor::new(&[grid * grid, dim], out)
}

/// `(x − INPUT_MEAN) / INPUT_STD` per pixel.
pub fn standardize(image: &Image) -> Image {
    let (mean, inv_std) = (INPUT_MEAN as f32, (1.0 / INPUT_STD) as f32);
    Image { size: image.size, data: image.data.iter().map(|&x| (x - mean) * inv_std).collect() }
}

/// Linear projection of the image's patches: `[patches × hidden]`.
pub fn patch_embed<T: Scalar>(
    g: &mut Graph<'_, T>,
    p: &BoundParams,
    vit: &ViTParams,
    image: &Image,
) -> Result<Var, AutodiffError> {
    if image.size != vit.config.image_size {
        return Err(AutodiffError::Shape {
            op: "patch_embed",
            lhs: vec![image.size, image.size, Image::CHANNELS],
            rhs: vec![vit.config.image_size, vit.config.image_size, Image::CHANNELS],
        });
    }
    let patches = g.constant(patchify(image, vit.config.patch_size)?);
    g.linear(patches, p[vit.patch_weight], Some(p[vit.patch_bias]))
}

/// `[t; f_I]`: the class token becomes row 0.
pub fn prepend_token<T: Scalar>(g: &mut Graph<'_, T>, features: Var, token: Var) -> Result<Var, AutodiffError> {
    if g.shape(token).len() != 2 || g.shape(token)[0] != 1 {
        return Err(AutodiffError::Shape {
            op: "prepend_token",
            lhs: g.shape(features).to_vec(),
            rhs: g.shape(token).to_vec(),
        });
    }
    g.concat(&[token, features], 0)
}

pub fn add_position<T: Scalar>(g: &mut Graph<'_, T>, tokens: Var, position: Var) -> Result<Var, AutodiffError> {
    if g.shape(tokens) != g.shape(position) {
        return Err(AutodiffError::Shape {
            op: "add_position",
            lhs: g.shape(tokens).to_vec(),
            rhs: g.shape(position).to_vec(),
        });
    }
    g.add(tokens, position)
}

/// Multi-head self-attention. Returns the projected output and each head's
/// `seq × seq` attention matrix.
pub fn self_attention<T: Scalar>(
    g: &mut Graph<'_, T>,
    p: &BoundParams,
    block: &BlockParams,
    x: Var,
    heads: usize,
) -> Result<(Var, Vec<Var>), AutodiffError> {
    let hidden = g.shape(x)[1];
    let dh = hidden / heads;
    let q = g.linear(x, p[block.query_weight], Some(p[block.query_bias]))?;
    let k = g.linear(x, p[block.key_weight], Some(p[block.key_bias]))?;
    let v = g.linear(x, p[block.value_weight], Some(p[block.value_bias]))?;
    let scale = T::from_f64_lossy(1.0 / (dh as f64).sqrt());
    let mut outs = Vec::with_capacity(heads);
    let mut attn = Vec::with_capacity(heads);
    for h in 0..heads {
        let qh = g.slice(q, 1, h * dh, dh)?;
        let kh = g.slice(k, 1, h * dh, dh)?;
        let vh = g.slice(v, 1, h * dh, dh)?;
        let kt = g.transpose(kh)?;
        let scores = g.matmul(qh, kt)?;
        let scores = g.scale(scores, scale)?;
        let w = g.softmax(scores, 1)?;
        attn.push(w);
        outs.push(g.matmul(w, vh)?);
    }
    let merged = if heads == 1 { outs[0] } else { g.concat(&outs, 1)? };
    let out = g.linear(merged, p[block.out_weight], Some(p[block.out_bias]))?;
    Ok((out, attn))
}

/// `x + MHSA(LN(x))`, then `x + MLP(LN(x))` with a GELU hidden layer.
pub fn encoder_block<T: Scalar>(
    g: &mut Graph<'_, T>,
    p: &BoundParams,
    block: &BlockParams,
    x: Var,
    heads: usize,
    attention: Option<&mut Vec<Var>>,
) -> Result<Var, AutodiffError> {
    let n1 = g.layer_norm(x, p[block.norm1_gain], p[block.norm1_bias], LAYER_NORM_EPS)?;
    let (a, weights) = self_attention(g, p, block, n1, heads)?;
    if let Some(sink) = attention {
        sink.extend(weights);
    }
    let x = g.add(x, a)?;
    let n2 = g.layer_norm(x, p[block.norm2_gain], p[block.norm2_bias], LAYER_NORM_EPS)?;
    let h = g.linear(n2, p[block.fc1_weight], Some(p[block.fc1_bias]))?;
    let h = g.gelu(h)?;
    let m = g.linear(h, p[block.fc2_weight], Some(p[block.fc2_bias]))?;
    g.add(x, m)
}

/// Runs every encoder block; attention matrices are appended to
/// `attention` when provided (block-major, head-minor).
pub fn encoder_forward<T: Scalar>(
    g: &mut Graph<'_, T>,
    p: &BoundParams,
    vit: &ViTParams,
    mut x: Var,
    mut attention: Option<&mut Vec<Var>>,
) -> Result<Var, AutodiffError> {
    let expected = [vit.config.seq_len(), vit.config.hidden_dim];
    if g.shape(x) != expected {
        return Err(AutodiffError::Shape { op: "encoder_forward", lhs: g.shape(x).to_vec(), rhs: expected.to_vec() });
    }
    for block in &vit.blocks {
        x = encoder_block(g, p, block, x, vit.config.heads, attention.as_deref_mut())?;
    }
    Ok(x)
}

/// Intermediate nodes of one stream's forward pass.
#[derive(Clone, Copy, Debug)]
pub struct StreamTrace {
    pub patches: Var,
    pub tokens: Var,
    pub embedded: Var,
    pub encoded: Var,
    pub feature: Var,
}

/// standardize → patch_embed → prepend class token → add positions →
/// encoder → final layer norm → class-token row → feature head.
/// Output `1 × feature_dim`.
pub fn vit_forward_traced<T: Scalar>(
    g: &mut Graph<'_, T>,
    p: &BoundParams,
    vit: &ViTParams,
    image: &Image,
) -> Result<StreamTrace, AutodiffError> {
    let patches = patch_embed(g, p, vit, &standardize(image))?;
    let tokens = prepend_token(g, patches, p[vit.class_token])?;
    let embedded = add_position(g, tokens, p[vit.position])?;
    let encoded = encoder_forward(g, p, vit, embedded, None)?;
    let normed = g.layer_norm(encoded, p[vit.norm_gain], p[vit.norm_bias], LAYER_NORM_EPS)?;
    let cls = g.slice(normed, 0, 0, 1)?;
    let feature = g.linear(cls, p[vit.head_weight], Some(p[vit.head_bias]))?;
    Ok(StreamTrace { patches, tokens, embedded, encoded, feature })
}

pub fn vit_forward<T: Scalar>(
    g: &mut Graph<'_, T>,
    p: &BoundParams,
    vit: &ViTParams,
    image: &Image,
) -> Result<Var, AutodiffError> {
    Ok(vit_forward_traced(g, p, vit, image)?.feature)
}
