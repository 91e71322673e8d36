//! Little-endian binary checkpoints: an 8-byte magic, a format version, then
//! length-prefixed sections. `f64` values are stored as raw bits so a
//! round trip is exact.

use std::io::{Read, Write};

use super::adam::Adam;
use super::network::{NetSpec, Network};
use super::params::ParamSet;
use crate::error::CheckpointError;

pub const MAGIC: &[u8; 8] = b"EDGECKPT";
pub const VERSION: u32 = 1;

pub struct CheckpointWriter<W: Write> {
    inner: W,
}

impl<W: Write> CheckpointWriter<W> {
    pub fn new(mut inner: W) -> Result<Self, CheckpointError> {
        inner.write_all(MAGIC)?;
        inner.write_all(&VERSION.to_le_bytes())?;
        Ok(Self { inner })
    }

    pub fn u64(&mut self, v: u64) -> Result<(), CheckpointError> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }

    pub fn f64(&mut self, v: f64) -> Result<(), CheckpointError> {
        self.u64(v.to_bits())
    }

    pub fn bytes(&mut self, b: &[u8]) -> Result<(), CheckpointError> {
        self.u64(b.len() as u64)?;
        self.inner.write_all(b)?;
        Ok(())
    }

    pub fn f64s(&mut self, v: &[f64]) -> Result<(), CheckpointError> {
        self.u64(v.len() as u64)?;
        for x in v {
            self.inner.write_all(&x.to_bits().to_le_bytes())?;
        }
        Ok(())
    }

    pub fn network(&mut self, net: &Network) -> Result<(), CheckpointError> {
        let spec = serde_json::to_vec(net.spec()).map_err(|e| CheckpointError::Format(e.to_string()))?;
        self.bytes(&spec)?;
        self.f64s(net.params.as_slice())
    }

    pub fn adam(&mut self, opt: &Adam) -> Result<(), CheckpointError> {
        for v in [opt.lr, opt.beta1, opt.beta2, opt.eps] {
            self.f64(v)?;
        }
        self.u64(opt.step)?;
        self.f64s(&opt.m)?;
        self.f64s(&opt.v)
    }

    pub fn finish(mut self) -> Result<W, CheckpointError> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

pub struct CheckpointReader<R: Read> {
    inner: R,
}

/// Largest section accepted, guarding against corrupt length prefixes.
const MAX_SECTION: u64 = 1 << 32;

impl<R: Read> CheckpointReader<R> {
    pub fn new(mut inner: R) -> Result<Self, CheckpointError> {
        let mut magic = [0u8; 8];
        inner.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(CheckpointError::Format("bad magic".into()));
        }
        let mut ver = [0u8; 4];
        inner.read_exact(&mut ver)?;
        let ver = u32::from_le_bytes(ver);
        if ver != VERSION {
            return Err(CheckpointError::Format(format!("unsupported version {ver}")));
        }
        Ok(Self { inner })
    }

    pub fn u64(&mut self) -> Result<u64, CheckpointError> {
        let mut b = [0u8; 8];
        self.inner.read_exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }

    pub fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn len(&mut self) -> Result<usize, CheckpointError> {
        let n = self.u64()?;
        if n > MAX_SECTION {
            return Err(CheckpointError::Format(format!("section length {n} too large")));
        }
        Ok(n as usize)
    }

    pub fn bytes(&mut self) -> Result<Vec<u8>, CheckpointError> {
        let n = self.len()?;
        let mut b = vec![0u8; n];
        self.inner.read_exact(&mut b)?;
        Ok(b)
    }

    pub fn f64s(&mut self) -> Result<Vec<f64>, CheckpointError> {
        let n = self.len()?;
        (0..n).map(|_| self.f64()).collect()
    }

    /// Reads a network and checks it has the expected shape.
    pub fn network(&mut self, expected: &NetSpec) -> Result<Network, CheckpointError> {
        let spec: NetSpec =
            serde_json::from_slice(&self.bytes()?).map_err(|e| CheckpointError::Format(e.to_string()))?;
        if &spec != expected {
            return Err(CheckpointError::Mismatch(format!("stored {spec:?}, expected {expected:?}")));
        }
        let params = ParamSet::from_vec(self.f64s()?);
        Network::from_params(spec, params).map_err(|e| CheckpointError::Mismatch(e.to_string()))
    }

    pub fn adam(&mut self, len: usize) -> Result<Adam, CheckpointError> {
        let (lr, beta1, beta2, eps) = (self.f64()?, self.f64()?, self.f64()?, self.f64()?);
        let step = self.u64()?;
        let m = self.f64s()?;
        let v = self.f64s()?;
        if m.len() != len || v.len() != len {
            return Err(CheckpointError::Mismatch(format!("optimizer state for {} params, expected {len}", m.len())));
        }
        Ok(Adam {
            lr,
            beta1,
            beta2,
            eps,
            step,
            m,
            v,
        })
    }
}
