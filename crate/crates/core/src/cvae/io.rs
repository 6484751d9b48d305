use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use super::{layer_sizes, CvaeConfig, CvaeModel};
use crate::error::{Error, Result};

const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    config: ConfigSnapshot,
    phi: Vec<Vec<f64>>,
    theta: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ConfigSnapshot {
    input_dim: usize,
    #[serde(flatten)]
    config: CvaeConfig,
}

impl CvaeModel {
    /// Versioned JSON: each entry of `phi` (encoder) and `theta` (decoder) is
    /// one layer's row-major weight matrix followed by its bias vector.
    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            version: MODEL_VERSION,
            config: ConfigSnapshot {
                input_dim: self.input_dim,
                config: self.config.clone(),
            },
            phi: self.encoder.layer_slices().into_iter().map(<[f64]>::to_vec).collect(),
            theta: self.decoder.layer_slices().into_iter().map(<[f64]>::to_vec).collect(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.version != MODEL_VERSION {
            return Err(Error::UnsupportedVersion(file.version));
        }
        let ConfigSnapshot { input_dim, config } = file.config;
        config.validate()?;
        let (enc, dec) = layer_sizes(input_dim, &config);
        let shape_err = || Error::InvalidConfig("model weights do not match the configured shape".into());
        let encoder = Mlp::from_layer_slices(enc, &file.phi).ok_or_else(shape_err)?;
        let decoder = Mlp::from_layer_slices(dec, &file.theta).ok_or_else(shape_err)?;
        if encoder.params().iter().chain(decoder.params()).any(|w| !w.is_finite()) {
            return Err(Error::InvalidConfig("model weights must be finite".into()));
        }
        Ok(CvaeModel {
            input_dim,
            config,
            encoder,
            decoder,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        CvaeModel::from_json(&fs::read_to_string(path)?)
    }
}
