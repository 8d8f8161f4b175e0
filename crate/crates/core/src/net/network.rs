use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::{lit, Scalar};

use super::activation::{leaky_relu, leaky_relu_grad, DEFAULT_LEAKY_ALPHA};
use super::conv::{ConvGrad, ConvLayer};
use super::dense::DenseLayer;
use super::loss::validate_mask;
use super::{NetError, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub filters: usize,
    pub size: usize,
}

/// Shape of a conv stack followed by a dense head reshaped back to
/// `width x height x out_channels`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub width: usize,
    pub height: usize,
    pub in_channels: usize,
    pub conv: Vec<ConvSpec>,
    pub out_channels: usize,
}

impl Architecture {
    /// The level-design agent: 8 4x4, 16 3x3 and 32 3x3 filters over a
    /// 40x15x32 one-hot window, dense head to a 40x15x32 action matrix.
    pub fn agent() -> Self {
        Self {
            width: 40,
            height: 15,
            in_channels: 32,
            conv: vec![
                ConvSpec { filters: 8, size: 4 },
                ConvSpec { filters: 16, size: 3 },
                ConvSpec { filters: 32, size: 3 },
            ],
            out_channels: 32,
        }
    }

    /// Same layer pattern at a size where finite differences are cheap.
    pub fn scaled_down() -> Self {
        Self {
            width: 8,
            height: 6,
            in_channels: 4,
            conv: vec![
                ConvSpec { filters: 2, size: 4 },
                ConvSpec { filters: 3, size: 3 },
                ConvSpec { filters: 4, size: 3 },
            ],
            out_channels: 4,
        }
    }

    pub fn input_shape(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.in_channels)
    }

    pub fn output_shape(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.out_channels)
    }

    pub fn dense_in(&self) -> usize {
        self.width * self.height * self.conv.last().map_or(self.in_channels, |c| c.filters)
    }

    pub fn dense_out(&self) -> usize {
        self.width * self.height * self.out_channels
    }

    pub fn param_count(&self) -> usize {
        let mut cin = self.in_channels;
        let mut n = 0;
        for c in &self.conv {
            n += c.filters * c.size * c.size * cin + c.filters;
            cin = c.filters;
        }
        n + self.dense_in() * self.dense_out() + self.dense_out()
    }
}

/// Intermediate values of the conv stack for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTrace<T> {
    /// Pre-activation output of each conv layer.
    pub pre: Vec<Volume<T>>,
    /// Activated output of each conv layer.
    pub post: Vec<Volume<T>>,
}

impl<T: Scalar> FeatureTrace<T> {
    /// Flattened input of the dense head.
    pub fn features(&self) -> &[T] {
        self.post.last().expect("at least one conv layer").data()
    }
}

/// Identifies one scalar parameter of a [`Network`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamId {
    ConvWeight { layer: usize, index: usize },
    ConvBias { layer: usize, index: usize },
    DenseWeight { row: usize, col: usize },
    DenseBias { row: usize },
}

/// Parameter gradients. Dense rows absent from the maps have zero gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub conv: Vec<ConvGrad<T>>,
    pub dense_rows: BTreeMap<usize, Vec<T>>,
    pub dense_bias: BTreeMap<usize, T>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros_for(net: &Network<T>) -> Self {
        Self {
            conv: net.conv.iter().map(ConvGrad::zeros_like).collect(),
            dense_rows: BTreeMap::new(),
            dense_bias: BTreeMap::new(),
        }
    }

    pub fn get(&self, p: ParamId) -> T {
        match p {
            ParamId::ConvWeight { layer, index } => self.conv[layer].weights[index],
            ParamId::ConvBias { layer, index } => self.conv[layer].biases[index],
            ParamId::DenseWeight { row, col } => self.dense_rows.get(&row).map_or(T::zero(), |r| r[col]),
            ParamId::DenseBias { row } => self.dense_bias.get(&row).copied().unwrap_or(T::zero()),
        }
    }

    pub fn is_zero(&self) -> bool {
        let z = T::zero();
        self.conv.iter().all(|g| g.weights.iter().chain(&g.biases).all(|&v| v == z))
            && self.dense_rows.values().flatten().all(|&v| v == z)
            && self.dense_bias.values().all(|&v| v == z)
    }
}

/// Conv stack plus dense head, leaky-relu after every layer.
#[derive(Debug, Clone)]
pub struct Network<T> {
    arch: Architecture,
    alpha: T,
    conv: Vec<ConvLayer<T>>,
    dense: DenseLayer<T>,
}

impl<T: Scalar> PartialEq for Network<T> {
    fn eq(&self, other: &Self) -> bool {
        self.arch == other.arch && self.alpha == other.alpha && self.conv == other.conv && self.dense == other.dense
    }
}

impl<T: Scalar> Network<T> {
    /// Glorot-uniform initialisation from `seed`, zero biases.
    pub fn new(arch: Architecture, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cin = arch.in_channels;
        let mut conv = Vec::with_capacity(arch.conv.len());
        for spec in &arch.conv {
            conv.push(ConvLayer::glorot(spec.filters, spec.size, cin, &mut rng));
            cin = spec.filters;
        }
        let dense = DenseLayer::glorot(arch.dense_out(), arch.dense_in(), &mut rng);
        Self { alpha: lit(DEFAULT_LEAKY_ALPHA), arch, conv, dense }
    }

    pub fn zeros(arch: Architecture) -> Self {
        let mut cin = arch.in_channels;
        let mut conv = Vec::with_capacity(arch.conv.len());
        for spec in &arch.conv {
            conv.push(ConvLayer::zeros(spec.filters, spec.size, cin));
            cin = spec.filters;
        }
        let dense = DenseLayer::zeros(arch.dense_out(), arch.dense_in());
        Self { alpha: lit(DEFAULT_LEAKY_ALPHA), arch, conv, dense }
    }

    /// Assembles a network from explicit layers, validating every shape.
    pub fn from_parts(
        arch: Architecture,
        alpha: T,
        conv: Vec<ConvLayer<T>>,
        dense: DenseLayer<T>,
    ) -> Result<Self, NetError> {
        let mismatch = |what: &str| NetError::ShapeMismatch { expected: format!("{arch:?}"), got: what.to_string() };
        if conv.len() != arch.conv.len() {
            return Err(mismatch("conv layer count"));
        }
        let mut cin = arch.in_channels;
        for (layer, spec) in conv.iter().zip(&arch.conv) {
            if layer.filters() != spec.filters || layer.size() != spec.size || layer.in_channels() != cin {
                return Err(mismatch("conv layer shape"));
            }
            cin = spec.filters;
        }
        if dense.in_dim() != arch.dense_in() || dense.out_dim() != arch.dense_out() {
            return Err(mismatch("dense layer shape"));
        }
        if alpha < T::zero() {
            return Err(NetError::InvalidArgument("leaky-relu alpha must be >= 0".into()));
        }
        Ok(Self { arch, alpha, conv, dense })
    }

    /// Copy that keeps the dense weights (shared, copy-on-write) but draws
    /// a fresh Glorot conv stack and uniform dense biases in
    /// `[-bias_range, bias_range]` from `seed`. Much cheaper than
    /// [`Network::new`] for the full agent, whose dense matrix dominates.
    pub fn with_conv_seed(&self, seed: u64, bias_range: f64) -> Self {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = self.clone();
        let mut cin = self.arch.in_channels;
        for (layer, spec) in out.conv.iter_mut().zip(&self.arch.conv) {
            *layer = ConvLayer::glorot(spec.filters, spec.size, cin, &mut rng);
            cin = spec.filters;
        }
        if bias_range > 0.0 {
            for b in out.dense.biases_mut() {
                *b = lit(rng.gen_range(-bias_range..=bias_range));
            }
        }
        out
    }

    pub fn with_alpha(mut self, alpha: T) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn conv_layers(&self) -> &[ConvLayer<T>] {
        &self.conv
    }

    pub fn conv_layers_mut(&mut self) -> &mut [ConvLayer<T>] {
        &mut self.conv
    }

    pub fn dense(&self) -> &DenseLayer<T> {
        &self.dense
    }

    pub fn dense_mut(&mut self) -> &mut DenseLayer<T> {
        &mut self.dense
    }

    pub fn param_count(&self) -> usize {
        self.conv.iter().map(ConvLayer::param_count).sum::<usize>() + self.dense.param_count()
    }

    /// Every parameter, in checkpoint order.
    pub fn param_ids(&self) -> impl Iterator<Item = ParamId> + '_ {
        let conv = self.conv.iter().enumerate().flat_map(|(layer, c)| {
            (0..c.weights().len())
                .map(move |index| ParamId::ConvWeight { layer, index })
                .chain((0..c.filters()).map(move |index| ParamId::ConvBias { layer, index }))
        });
        let (rows, cols) = (self.dense.out_dim(), self.dense.in_dim());
        let dense = (0..rows).flat_map(move |row| (0..cols).map(move |col| ParamId::DenseWeight { row, col }));
        let bias = (0..rows).map(|row| ParamId::DenseBias { row });
        conv.chain(dense).chain(bias)
    }

    pub fn param(&self, p: ParamId) -> T {
        match p {
            ParamId::ConvWeight { layer, index } => self.conv[layer].weights()[index],
            ParamId::ConvBias { layer, index } => self.conv[layer].biases()[index],
            ParamId::DenseWeight { row, col } => self.dense.row(row)[col],
            ParamId::DenseBias { row } => self.dense.biases()[row],
        }
    }

    pub fn set_param(&mut self, p: ParamId, v: T) {
        match p {
            ParamId::ConvWeight { layer, index } => self.conv[layer].weights_mut()[index] = v,
            ParamId::ConvBias { layer, index } => self.conv[layer].biases_mut()[index] = v,
            ParamId::DenseWeight { row, col } => self.dense.row_mut(row)[col] = v,
            ParamId::DenseBias { row } => self.dense.biases_mut()[row] = v,
        }
    }

    pub fn all_finite(&self) -> bool {
        self.conv.iter().all(|c| c.weights().iter().chain(c.biases()).all(|v| v.is_finite()))
            && (0..self.dense.out_dim()).all(|r| self.dense.row(r).iter().all(|v| v.is_finite()))
            && self.dense.biases().iter().all(|v| v.is_finite())
    }

    fn check_input(&self, input: &Volume<T>) -> Result<(), NetError> {
        if input.shape() != self.arch.input_shape() {
            return Err(NetError::ShapeMismatch {
                expected: format!("{:?}", self.arch.input_shape()),
                got: format!("{:?}", input.shape()),
            });
        }
        Ok(())
    }

    /// Runs the conv stack.
    pub fn features(&self, input: &Volume<T>) -> Result<FeatureTrace<T>, NetError> {
        self.check_input(input)?;
        let mut pre = Vec::with_capacity(self.conv.len());
        let mut post: Vec<Volume<T>> = Vec::with_capacity(self.conv.len());
        for layer in &self.conv {
            let z = layer.forward(post.last().unwrap_or(input))?;
            let alpha = self.alpha;
            post.push(z.map(|v| leaky_relu(v, alpha)));
            pre.push(z);
        }
        Ok(FeatureTrace { pre, post })
    }

    /// Activated output `r` of the dense head.
    #[inline]
    pub fn output_from_features(&self, trace: &FeatureTrace<T>, r: usize) -> T {
        leaky_relu(self.dense.output(r, trace.features()), self.alpha)
    }

    /// Full forward pass producing the `width x height x out_channels` volume.
    pub fn forward(&self, input: &Volume<T>) -> Result<Volume<T>, NetError> {
        let trace = self.features(input)?;
        let (w, h, c) = self.arch.output_shape();
        let data = (0..self.dense.out_dim()).map(|r| self.output_from_features(&trace, r)).collect();
        Ok(Volume::from_vec(w, h, c, data).expect("dense_out matches output shape"))
    }

    /// Forward pass restricted to the listed flat output indices.
    pub fn forward_at(&self, input: &Volume<T>, indices: &[usize]) -> Result<Vec<T>, NetError> {
        let trace = self.features(input)?;
        indices
            .iter()
            .map(|&r| {
                self.check_output_index(r)?;
                Ok(self.output_from_features(&trace, r))
            })
            .collect()
    }

    fn check_output_index(&self, r: usize) -> Result<(), NetError> {
        if r >= self.dense.out_dim() {
            return Err(NetError::ShapeMismatch {
                expected: format!("output index < {}", self.dense.out_dim()),
                got: r.to_string(),
            });
        }
        Ok(())
    }

    /// Masked-MSE loss and gradients where `targets` lists the masked output
    /// indices with their target values. Indices must be distinct.
    pub fn backward_sparse(&self, input: &Volume<T>, targets: &[(usize, T)]) -> Result<(T, Gradients<T>), NetError> {
        let trace = self.features(input)?;
        let mut seen = std::collections::HashSet::with_capacity(targets.len());
        for &(r, _) in targets {
            self.check_output_index(r)?;
            if !seen.insert(r) {
                return Err(NetError::InvalidArgument(format!("output index {r} listed twice")));
            }
        }

        let count = lit::<T>(targets.len().max(1) as f64);
        let features = trace.features();
        let mut grads = Gradients::zeros_for(self);
        let mut loss = T::zero();
        let mut d_features = vec![T::zero(); features.len()];
        let mut any = false;

        for &(r, target) in targets {
            let z = self.dense.output(r, features);
            let a = leaky_relu(z, self.alpha);
            let residual = a - target;
            loss = loss + residual * residual;
            let dz = lit::<T>(2.0) * residual / count * leaky_relu_grad(z, self.alpha);
            if dz == T::zero() {
                continue;
            }
            any = true;
            grads.dense_rows.insert(r, features.iter().map(|&h| dz * h).collect());
            grads.dense_bias.insert(r, dz);
            for (d, &w) in d_features.iter_mut().zip(self.dense.row(r)) {
                *d = *d + dz * w;
            }
        }
        let loss = loss / count;
        if !any {
            return Ok((loss, grads));
        }

        let (w, h, c) = trace.post.last().expect("conv layer").shape();
        let mut d_post = Volume::from_vec(w, h, c, d_features).expect("feature shape");
        for l in (0..self.conv.len()).rev() {
            let alpha = self.alpha;
            let mut d_pre = d_post;
            for (d, &z) in d_pre.data_mut().iter_mut().zip(trace.pre[l].data()) {
                *d = *d * leaky_relu_grad(z, alpha);
            }
            let layer_input = if l == 0 { input } else { &trace.post[l - 1] };
            match self.conv[l].backward(layer_input, &d_pre, &mut grads.conv[l], l > 0) {
                Some(d_in) => d_post = d_in,
                None => break,
            }
        }
        Ok((loss, grads))
    }

    /// Masked-MSE loss and gradients for dense target and mask volumes.
    pub fn backward(
        &self,
        input: &Volume<T>,
        target: &Volume<T>,
        mask: &Volume<T>,
    ) -> Result<(T, Gradients<T>), NetError> {
        let shape = self.arch.output_shape();
        if target.shape() != shape || mask.shape() != shape {
            return Err(NetError::ShapeMismatch {
                expected: format!("{shape:?}"),
                got: format!("target {:?}, mask {:?}", target.shape(), mask.shape()),
            });
        }
        validate_mask(mask.data())?;
        let targets: Vec<(usize, T)> = mask
            .data()
            .iter()
            .enumerate()
            .filter(|(_, &m)| m != T::zero())
            .map(|(i, _)| (i, target.data()[i]))
            .collect();
        self.backward_sparse(input, &targets)
    }
}
