//! The MLP encoder: input projection, a stack of hidden layers, and a linear
//! head into the latent space. ReLU follows every layer except the last.

pub(crate) mod checkpoint;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ClanError, Result};
use crate::numerics::{matmul, matmul_nt, matmul_tn, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlpConfig {
    pub input_width: usize,
    pub hidden_width: usize,
    /// Number of `hidden_width -> hidden_width` layers after the input projection.
    pub hidden_layers: usize,
    pub latent_width: usize,
    pub seed: u64,
}

impl MlpConfig {
    /// Default architecture for `input_width` features: 256 wide, two hidden
    /// layers, 32-dimensional latents.
    pub fn with_defaults(input_width: usize) -> Self {
        MlpConfig { input_width, hidden_width: 256, hidden_layers: 2, latent_width: 32, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_width == 0 || self.hidden_width == 0 || self.latent_width == 0 {
            return Err(ClanError::Config(format!("all widths must be >= 1: {self:?}")));
        }
        if self.hidden_layers == 0 {
            return Err(ClanError::Config("hidden_layers must be >= 1".into()));
        }
        if self.latent_width >= self.hidden_width {
            return Err(ClanError::Config(format!(
                "latent width {} must be smaller than hidden width {}",
                self.latent_width, self.hidden_width
            )));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of every layer, in forward order.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = vec![(self.input_width, self.hidden_width)];
        shapes.extend(std::iter::repeat((self.hidden_width, self.hidden_width)).take(self.hidden_layers));
        shapes.push((self.hidden_width, self.latent_width));
        shapes
    }
}

/// Affine layer computing `x · weight + bias` for row-vector inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    /// `fan_in x fan_out`
    pub weight: Matrix,
    /// `1 x fan_out`
    pub bias: Matrix,
}

impl Linear {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Linear { weight: Matrix::zeros(fan_in, fan_out), bias: Matrix::zeros(1, fan_out) }
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        let mut out = matmul(x, &self.weight)?;
        out.add_row_vector(self.bias.as_slice())?;
        Ok(out)
    }
}

/// Encoder parameters. Also used as the container for their gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Linear>,
}

impl MlpParams {
    pub fn zeros(config: &MlpConfig) -> Self {
        MlpParams {
            layers: config.layer_shapes().into_iter().map(|(i, o)| Linear::zeros(i, o)).collect(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        MlpParams {
            layers: self
                .layers
                .iter()
                .map(|l| Linear::zeros(l.weight.rows(), l.weight.cols()))
                .collect(),
        }
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].weight.rows()
    }

    pub fn latent_width(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weight.cols())
    }

    /// Weight and bias tensors in a fixed order (weight, bias per layer).
    pub fn tensors(&self) -> Vec<&Matrix> {
        self.layers.iter().flat_map(|l| [&l.weight, &l.bias]).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        self.layers.iter_mut().flat_map(|l| [&mut l.weight, &mut l.bias]).collect()
    }

    pub fn add_assign(&mut self, other: &MlpParams) -> Result<()> {
        if self.layers.len() != other.layers.len() {
            return Err(ClanError::dim("MlpParams::add_assign", "layer count differs"));
        }
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.add_assign(b)?;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }

    pub fn matches(&self, config: &MlpConfig) -> bool {
        let shapes = config.layer_shapes();
        shapes.len() == self.layers.len()
            && shapes.iter().zip(&self.layers).all(|(&(i, o), l)| {
                l.weight.shape() == (i, o) && l.bias.shape() == (1, o)
            })
    }

    /// FNV-1a over every parameter's bit pattern; ties a cache to the exact
    /// parameter values it was produced with.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for t in self.tensors() {
            for v in t.as_slice() {
                h ^= v.to_bits() as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

/// Activations recorded by [`forward`] for the matching [`backward`] call.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input to each layer; `inputs[0]` is the batch itself.
    inputs: Vec<Matrix>,
    /// Pre-activation output of each layer.
    pre_activations: Vec<Matrix>,
    fingerprint: u64,
}

impl ForwardCache {
    pub fn batch_size(&self) -> usize {
        self.inputs[0].rows()
    }

    /// Post-ReLU activations of the hidden layers.
    pub fn hidden_activations(&self) -> &[Matrix] {
        &self.inputs[1..]
    }

    pub fn pre_activations(&self) -> &[Matrix] {
        &self.pre_activations
    }
}

/// He-uniform weights (bound `sqrt(6 / fan_in)`) and zero biases, drawn from a
/// ChaCha stream seeded by `config.seed`.
pub fn init(config: &MlpConfig) -> Result<MlpParams> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let layers = config
        .layer_shapes()
        .into_iter()
        .map(|(fan_in, fan_out)| {
            let bound = (6.0 / fan_in as f64).sqrt() as f32;
            let data = (0..fan_in * fan_out).map(|_| rng.random_range(-bound..=bound)).collect();
            Linear { weight: Matrix::from_vec(fan_in, fan_out, data).unwrap(), bias: Matrix::zeros(1, fan_out) }
        })
        .collect();
    Ok(MlpParams { layers })
}

fn check_input(params: &MlpParams, batch: &Matrix) -> Result<()> {
    if params.layers.is_empty() {
        return Err(ClanError::Contract("encoder has no layers".into()));
    }
    if batch.cols() != params.input_width() {
        return Err(ClanError::dim(
            "forward",
            format!("batch has {} features, encoder expects {}", batch.cols(), params.input_width()),
        ));
    }
    Ok(())
}

/// Runs the encoder on a batch (rows are samples), returning latents and the
/// activations needed by [`backward`].
pub fn forward(params: &MlpParams, batch: &Matrix) -> Result<(Matrix, ForwardCache)> {
    check_input(params, batch)?;
    let n_layers = params.layers.len();
    let mut inputs = Vec::with_capacity(n_layers);
    let mut pre_activations = Vec::with_capacity(n_layers);
    let mut x = batch.clone();
    for (i, layer) in params.layers.iter().enumerate() {
        let pre = layer.apply(&x)?;
        inputs.push(x);
        x = if i + 1 < n_layers { pre.map(|v| v.max(0.0)) } else { pre.clone() };
        pre_activations.push(pre);
    }
    let cache = ForwardCache { inputs, pre_activations, fingerprint: params.fingerprint() };
    Ok((x, cache))
}

/// Forward pass without recording a cache.
pub fn encode(params: &MlpParams, batch: &Matrix) -> Result<Matrix> {
    check_input(params, batch)?;
    let n_layers = params.layers.len();
    let mut x = batch.clone();
    for (i, layer) in params.layers.iter().enumerate() {
        let pre = layer.apply(&x)?;
        x = if i + 1 < n_layers { pre.map(|v| v.max(0.0)) } else { pre };
    }
    Ok(x)
}

/// Gradient of `⟨grad_latents, forward(params, batch)⟩` with respect to
/// every parameter, summed over the batch.
pub fn backward(params: &MlpParams, cache: &ForwardCache, grad_latents: &Matrix) -> Result<MlpParams> {
    let (grads, _) = backward_impl(params, cache, grad_latents, false)?;
    Ok(grads)
}

/// Like [`backward`] but also returns the gradient with respect to the batch.
pub fn backward_with_input(
    params: &MlpParams,
    cache: &ForwardCache,
    grad_latents: &Matrix,
) -> Result<(MlpParams, Matrix)> {
    let (grads, gin) = backward_impl(params, cache, grad_latents, true)?;
    Ok((grads, gin.expect("input gradient requested")))
}

fn backward_impl(
    params: &MlpParams,
    cache: &ForwardCache,
    grad_latents: &Matrix,
    want_input: bool,
) -> Result<(MlpParams, Option<Matrix>)> {
    let n_layers = params.layers.len();
    if cache.inputs.len() != n_layers || cache.pre_activations.len() != n_layers {
        return Err(ClanError::Contract(format!(
            "cache has {} layers, encoder has {n_layers}",
            cache.inputs.len()
        )));
    }
    if cache.fingerprint != params.fingerprint() {
        return Err(ClanError::Contract(
            "forward cache was produced with different parameters".into(),
        ));
    }
    let expected = cache.pre_activations[n_layers - 1].shape();
    if grad_latents.shape() != expected {
        return Err(ClanError::Contract(format!(
            "latent gradient {:?} does not match cached latents {:?}",
            grad_latents.shape(),
            expected
        )));
    }

    let mut layers: Vec<Linear> = Vec::with_capacity(n_layers);
    let mut grad = grad_latents.clone();
    for i in (0..n_layers).rev() {
        let layer = &params.layers[i];
        let weight = matmul_tn(&cache.inputs[i], &grad)?;
        let bias = grad.column_sums();
        if i > 0 || want_input {
            let mut upstream = matmul_nt(&grad, &layer.weight)?;
            if i > 0 {
                let pre = &cache.pre_activations[i - 1];
                upstream
                    .as_mut_slice()
                    .iter_mut()
                    .zip(pre.as_slice())
                    .for_each(|(g, &p)| {
                        if p <= 0.0 {
                            *g = 0.0;
                        }
                    });
            }
            grad = upstream;
        }
        layers.push(Linear { weight, bias });
    }
    layers.reverse();
    let input_grad = want_input.then_some(grad);
    Ok((MlpParams { layers }, input_grad))
}
