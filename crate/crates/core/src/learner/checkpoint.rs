//! Binary checkpoints of a [`Td3Agent`].
//!
//! Layout (little endian):
//!
//! ```text
//! magic  b"PSCK"
//! u32    format version
//! [u8;32] SHA-256 of the learner config
//! u64    update counter
//! 6 x network   actor, actor target, critic 1, critic 2, critic 1 target, critic 2 target
//! 3 x optimizer actor, critic 1, critic 2
//! ```
//!
//! A network is `u32` layer count, then per layer `u32 inputs, u32 outputs,
//! u8 activation, f64 weights[inputs * outputs], f64 bias[outputs]`. An
//! optimizer is `f64 lr, u64 step`, then its first and second moments laid out
//! like the network's parameters.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array1, Array2};
use thiserror::Error;

use super::adam::Adam;
use super::mlp::{Activation, Dense, Gradients, Mlp};
use super::td3::{Td3Agent, Td3Config};

pub const MAGIC: &[u8; 4] = b"PSCK";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0} (expected {VERSION})")]
    Version(u32),
    #[error("checkpoint was written for learner config {found}, current config is {expected}")]
    ConfigMismatch { expected: String, found: String },
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_net<W: Write>(w: &mut W, net: &Mlp) -> std::io::Result<()> {
    w.write_u32::<LittleEndian>(net.layers().len() as u32)?;
    for l in net.layers() {
        w.write_u32::<LittleEndian>(l.inputs() as u32)?;
        w.write_u32::<LittleEndian>(l.outputs() as u32)?;
        w.write_u8(l.activation.code())?;
        for v in l.weights.iter().chain(l.bias.iter()) {
            w.write_f64::<LittleEndian>(*v)?;
        }
    }
    Ok(())
}

fn read_net<R: Read>(r: &mut R, expect: &Mlp) -> Result<Mlp, CheckpointError> {
    let n = r.read_u32::<LittleEndian>()? as usize;
    if n != expect.layers().len() {
        return Err(CheckpointError::Malformed(format!(
            "network has {n} layers, expected {}",
            expect.layers().len()
        )));
    }
    let mut layers = Vec::with_capacity(n);
    for template in expect.layers() {
        let inputs = r.read_u32::<LittleEndian>()? as usize;
        let outputs = r.read_u32::<LittleEndian>()? as usize;
        if (inputs, outputs) != (template.inputs(), template.outputs()) {
            return Err(CheckpointError::Malformed(format!(
                "layer shape {inputs}x{outputs}, expected {}x{}",
                template.inputs(),
                template.outputs()
            )));
        }
        let code = r.read_u8()?;
        let activation = Activation::from_code(code)
            .ok_or_else(|| CheckpointError::Malformed(format!("unknown activation code {code}")))?;
        let weights = read_matrix(r, inputs, outputs)?;
        let bias = read_vector(r, outputs)?;
        layers.push(Dense {
            weights,
            bias,
            activation,
        });
    }
    Ok(Mlp::from_layers(layers))
}

fn read_matrix<R: Read>(r: &mut R, rows: usize, cols: usize) -> Result<Array2<f64>, CheckpointError> {
    let mut data = vec![0.0; rows * cols];
    r.read_f64_into::<LittleEndian>(&mut data)?;
    Array2::from_shape_vec((rows, cols), data).map_err(|e| CheckpointError::Malformed(e.to_string()))
}

fn read_vector<R: Read>(r: &mut R, len: usize) -> Result<Array1<f64>, CheckpointError> {
    let mut data = vec![0.0; len];
    r.read_f64_into::<LittleEndian>(&mut data)?;
    Ok(Array1::from(data))
}

fn write_moments<W: Write>(w: &mut W, g: &Gradients) -> std::io::Result<()> {
    for (wm, bm) in g.weights.iter().zip(&g.biases) {
        for v in wm.iter().chain(bm.iter()) {
            w.write_f64::<LittleEndian>(*v)?;
        }
    }
    Ok(())
}

fn read_moments<R: Read>(r: &mut R, like: &Mlp) -> Result<Gradients, CheckpointError> {
    let mut g = Gradients::zeros_like(like);
    for (wm, bm) in g.weights.iter_mut().zip(g.biases.iter_mut()) {
        *wm = read_matrix(r, wm.nrows(), wm.ncols())?;
        *bm = read_vector(r, bm.len())?;
    }
    Ok(g)
}

fn write_opt<W: Write>(w: &mut W, opt: &Adam) -> std::io::Result<()> {
    w.write_f64::<LittleEndian>(opt.lr)?;
    w.write_u64::<LittleEndian>(opt.step)?;
    write_moments(w, &opt.m)?;
    write_moments(w, &opt.v)
}

fn read_opt<R: Read>(r: &mut R, like: &Mlp) -> Result<Adam, CheckpointError> {
    let lr = r.read_f64::<LittleEndian>()?;
    let step = r.read_u64::<LittleEndian>()?;
    let m = read_moments(r, like)?;
    let v = read_moments(r, like)?;
    Ok(Adam { lr, step, m, v })
}

impl Td3Agent {
    pub fn save<W: Write>(&self, mut w: W) -> Result<(), CheckpointError> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(VERSION)?;
        w.write_all(&self.cfg.hash())?;
        w.write_u64::<LittleEndian>(self.updates)?;
        for net in [
            &self.actor,
            &self.actor_target,
            &self.critic1,
            &self.critic2,
            &self.critic1_target,
            &self.critic2_target,
        ] {
            write_net(&mut w, net)?;
        }
        write_opt(&mut w, &self.actor_opt)?;
        write_opt(&mut w, &self.critic1_opt)?;
        write_opt(&mut w, &self.critic2_opt)?;
        w.flush()?;
        Ok(())
    }

    /// Restores an agent; fails if the file was written under a different
    /// learner config.
    pub fn load<R: Read>(mut r: R, cfg: Td3Config, seed: u64) -> Result<Self, CheckpointError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != VERSION {
            return Err(CheckpointError::Version(version));
        }
        let mut hash = [0u8; 32];
        r.read_exact(&mut hash)?;
        let expected = cfg.hash();
        if hash != expected {
            return Err(CheckpointError::ConfigMismatch {
                expected: hex(&expected),
                found: hex(&hash),
            });
        }
        let mut agent = Td3Agent::new(cfg, seed);
        agent.updates = r.read_u64::<LittleEndian>()?;
        agent.actor = read_net(&mut r, &agent.actor)?;
        agent.actor_target = read_net(&mut r, &agent.actor_target)?;
        agent.critic1 = read_net(&mut r, &agent.critic1)?;
        agent.critic2 = read_net(&mut r, &agent.critic2)?;
        agent.critic1_target = read_net(&mut r, &agent.critic1_target)?;
        agent.critic2_target = read_net(&mut r, &agent.critic2_target)?;
        agent.actor_opt = read_opt(&mut r, &agent.actor)?;
        agent.critic1_opt = read_opt(&mut r, &agent.critic1)?;
        agent.critic2_opt = read_opt(&mut r, &agent.critic2)?;
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(CheckpointError::Malformed("trailing bytes".into()));
        }
        Ok(agent)
    }
}
