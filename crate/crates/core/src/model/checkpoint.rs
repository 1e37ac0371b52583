//! Encoder checkpoint file.
//!
//! After the common 16-byte header (kind = 1):
//!
//! - six `u64` LE: input width, hidden width, hidden layers, latent width,
//!   seed, training metric tag (0 = squared Euclidean, 1 = cosine)
//! - `u32` tensor count, then each tensor (weight, bias per layer)
//! - `u32` scaler flag; when 1, two `1 x f` tensors: feature minima, maxima

use std::path::Path;

use crate::error::{ClanError, Result};
use crate::format::{FileKind, Reader, Writer};
use crate::model::{Linear, MlpConfig, MlpParams};
use crate::numerics::Metric;
use crate::pipeline::Scaler;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: MlpConfig,
    pub metric: Metric,
    pub params: MlpParams,
    /// Feature scaler fitted on the pretraining data, if one was used.
    pub scaler: Option<Scaler>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::new(Vec::new(), FileKind::Encoder)?;
        write_encoder(&mut w, &self.config, self.metric, &self.params)?;
        match &self.scaler {
            Some(s) => {
                w.u32(1)?;
                s.write_to(&mut w)?;
            }
            None => w.u32(0)?,
        }
        w.finish()
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader::new(buf, FileKind::Encoder)?;
        let (config, metric, params) = read_encoder(&mut r)?;
        let scaler = match r.u32()? {
            0 => None,
            1 => Some(Scaler::read_from(&mut r, config.input_width)?),
            other => return Err(ClanError::CorruptCheckpoint(format!("scaler flag {other}"))),
        };
        r.finish()?;
        Ok(Checkpoint { config, metric, params, scaler })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&Reader::read_file(path.as_ref())?)
    }
}

/// Writes encoder parameters with the default (cosine) metric tag and no scaler.
pub fn save_checkpoint(params: &MlpParams, config: &MlpConfig, path: impl AsRef<Path>) -> Result<()> {
    Checkpoint { config: *config, metric: Metric::default(), params: params.clone(), scaler: None }
        .save(path)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(MlpParams, MlpConfig)> {
    let ck = Checkpoint::load(path)?;
    Ok((ck.params, ck.config))
}

pub(crate) fn write_encoder<W: std::io::Write>(
    w: &mut Writer<W>,
    config: &MlpConfig,
    metric: Metric,
    params: &MlpParams,
) -> Result<()> {
    if !params.matches(config) {
        return Err(ClanError::ShapeMismatch("parameters do not match the config".into()));
    }
    for v in [
        config.input_width as u64,
        config.hidden_width as u64,
        config.hidden_layers as u64,
        config.latent_width as u64,
        config.seed,
        metric.tag() as u64,
    ] {
        w.u64(v)?;
    }
    let tensors = params.tensors();
    w.u32(tensors.len() as u32)?;
    for t in tensors {
        w.tensor(t)?;
    }
    Ok(())
}

pub(crate) fn read_encoder(r: &mut Reader<'_>) -> Result<(MlpConfig, Metric, MlpParams)> {
    let mut ints = [0u64; 6];
    for v in ints.iter_mut() {
        *v = r.u64()?;
    }
    let config = MlpConfig {
        input_width: ints[0] as usize,
        hidden_width: ints[1] as usize,
        hidden_layers: ints[2] as usize,
        latent_width: ints[3] as usize,
        seed: ints[4],
    };
    config
        .validate()
        .map_err(|e| ClanError::CorruptCheckpoint(format!("stored config invalid: {e}")))?;
    let metric = u32::try_from(ints[5])
        .ok()
        .and_then(Metric::from_tag)
        .ok_or_else(|| ClanError::CorruptCheckpoint(format!("unknown metric tag {}", ints[5])))?;

    let shapes = config.layer_shapes();
    let count = r.u32()? as usize;
    if count != 2 * shapes.len() {
        return Err(ClanError::ShapeMismatch(format!(
            "{count} tensors stored, config implies {}",
            2 * shapes.len()
        )));
    }
    let mut layers = Vec::with_capacity(shapes.len());
    for (i, &(fan_in, fan_out)) in shapes.iter().enumerate() {
        let weight = r.tensor()?;
        let bias = r.tensor()?;
        if weight.shape() != (fan_in, fan_out) || bias.shape() != (1, fan_out) {
            return Err(ClanError::ShapeMismatch(format!(
                "layer {i}: weight {:?}, bias {:?}, expected ({fan_in}, {fan_out})",
                weight.shape(),
                bias.shape()
            )));
        }
        layers.push(Linear { weight, bias });
    }
    Ok((config, metric, MlpParams { layers }))
}
