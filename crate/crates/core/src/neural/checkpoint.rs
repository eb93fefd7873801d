//! Training state and its on-disk form: a directory holding `manifest.json`
//! and `weights.bin` (little-endian f64; Bloch net, energy net, then the
//! first and second Adam moments in the same layout).

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{write_atomic, write_json};

use super::{AdamState, LossBreakdown, MlpParams, TrainConfig};

pub const CHECKPOINT_VERSION: &str = "honeycomb-bloch-checkpoint/1";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const WEIGHTS_FILE: &str = "weights.bin";

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub bloch: MlpParams,
    pub energy: MlpParams,
    pub bloch_adam: AdamState,
    pub energy_adam: AdamState,
    /// Number of Adam updates applied so far.
    pub adam_step: u64,
    /// Next epoch to run.
    pub epoch: usize,
    pub rng: ChaCha8Rng,
    pub history: Vec<LossBreakdown>,
}

impl Checkpoint {
    /// Freshly initialized networks; the generator is seeded from the config
    /// and then continues into training.
    pub fn fresh(cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let bloch = MlpParams::init(&cfg.bloch_dims(), &mut rng);
        let energy = MlpParams::init(&cfg.energy_dims(), &mut rng);
        Ok(Checkpoint {
            config: cfg.clone(),
            bloch_adam: AdamState::new(&bloch),
            energy_adam: AdamState::new(&energy),
            bloch,
            energy,
            adam_step: 0,
            epoch: 0,
            rng,
            history: Vec::new(),
        })
    }

    pub fn matches_architecture(&self, cfg: &TrainConfig) -> bool {
        self.bloch.dims() == cfg.bloch_dims() && self.energy.dims() == cfg.energy_dims()
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut bytes = Vec::new();
        for p in [&self.bloch, &self.energy, &self.bloch_adam.m, &self.energy_adam.m, &self.bloch_adam.v, &self.energy_adam.v]
        {
            for v in p.to_flat() {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        write_atomic(&dir.join(WEIGHTS_FILE), &bytes)?;
        let manifest = Manifest {
            version: CHECKPOINT_VERSION.to_string(),
            config: self.config.clone(),
            epoch: self.epoch,
            adam_step: self.adam_step,
            bloch_dims: self.bloch.dims(),
            energy_dims: self.energy.dims(),
            rng: RngState {
                seed: hex::encode(self.rng.get_seed()),
                stream: self.rng.get_stream(),
                word_pos: self.rng.get_word_pos().to_string(),
            },
            history: self.history.clone(),
        };
        write_json(&dir.join(MANIFEST_FILE), &manifest)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        let m: Manifest = serde_json::from_str(&text)?;
        if m.version != CHECKPOINT_VERSION {
            return Err(Error::invalid(format!("unsupported checkpoint version {}", m.version)));
        }
        m.config.validate()?;
        let mut nets = [
            MlpParams::zeros(&m.bloch_dims),
            MlpParams::zeros(&m.energy_dims),
            MlpParams::zeros(&m.bloch_dims),
            MlpParams::zeros(&m.energy_dims),
            MlpParams::zeros(&m.bloch_dims),
            MlpParams::zeros(&m.energy_dims),
        ];
        let expected: usize = nets.iter().map(MlpParams::param_count).sum();
        let raw = fs::read(dir.join(WEIGHTS_FILE))?;
        if raw.len() != 8 * expected {
            return Err(Error::invalid(format!("{WEIGHTS_FILE} holds {} bytes, expected {}", raw.len(), 8 * expected)));
        }
        let flat: Vec<f64> =
            raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
        let mut offset = 0;
        for n in &mut nets {
            offset += n.load_flat(&flat[offset..])?;
        }
        let seed: [u8; 32] = hex::decode(&m.rng.seed)
            .ok()
            .and_then(|v| v.try_into().ok())
            .ok_or_else(|| Error::invalid("checkpoint RNG seed must be 64 hex digits"))?;
        let word_pos: u128 =
            m.rng.word_pos.parse().map_err(|_| Error::invalid("checkpoint RNG word position is not an integer"))?;
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(m.rng.stream);
        rng.set_word_pos(word_pos);
        let [bloch, energy, bm, em, bv, ev] = nets;
        Ok(Checkpoint {
            config: m.config,
            bloch,
            energy,
            bloch_adam: AdamState { m: bm, v: bv },
            energy_adam: AdamState { m: em, v: ev },
            adam_step: m.adam_step,
            epoch: m.epoch,
            rng,
            history: m.history,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RngState {
    seed: String,
    stream: u64,
    word_pos: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    version: String,
    config: TrainConfig,
    epoch: usize,
    adam_step: u64,
    bloch_dims: Vec<usize>,
    energy_dims: Vec<usize>,
    rng: RngState,
    history: Vec<LossBreakdown>,
}
