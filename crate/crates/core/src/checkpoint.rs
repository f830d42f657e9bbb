//! Binary checkpoint encoding.
//!
//! Layout (all integers 32-bit little-endian unsigned, reals 64-bit LE):
//!
//! ```text
//! "SGLR" | version | input_dim | n_hidden | hidden[n_hidden] | classes
//! then for each of the 2·(n_hidden+1) tensors, in parameter order:
//!   name_len | name (UTF-8) | rank | dims[rank] | values[Π dims]
//! ```

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::mlp::{Mlp, MlpSpec};
use crate::params::ParamSet;
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"SGLR";
pub const VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| crate::Error::Format(alloc::format!("{} overflows u32", v)))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

pub fn encode(params: &ParamSet, spec: &MlpSpec) -> Result<Vec<u8>> {
    spec.check_params(params)?;
    let mut out = Vec::with_capacity(64 + params.numel() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    put_u32(&mut out, spec.input_dim)?;
    put_u32(&mut out, spec.hidden.len())?;
    for &w in &spec.hidden {
        put_u32(&mut out, w)?;
    }
    put_u32(&mut out, spec.classes)?;
    for p in params.iter() {
        put_u32(&mut out, p.name.len())?;
        out.extend_from_slice(p.name.as_bytes());
        put_u32(&mut out, p.value.rank())?;
        for &d in p.value.shape() {
            put_u32(&mut out, d)?;
        }
        for v in p.value.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            bail!(Format, "truncated checkpoint at byte {}", self.pos);
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        let b = self.take(8)?;
        let mut a = [0u8; 8];
        a.copy_from_slice(b);
        Ok(f64::from_le_bytes(a))
    }
}

pub fn decode(bytes: &[u8]) -> Result<(ParamSet, MlpSpec)> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        bail!(Format, "bad magic, not a checkpoint");
    }
    let version = r.u32()?;
    if version != VERSION as usize {
        bail!(Format, "unsupported checkpoint version {}", version);
    }
    let input_dim = r.u32()?;
    let n_hidden = r.u32()?;
    if n_hidden > 1 << 16 {
        bail!(Format, "implausible hidden layer count {}", n_hidden);
    }
    let hidden = (0..n_hidden).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
    let classes = r.u32()?;
    let spec = MlpSpec { input_dim, hidden, classes };
    spec.validate().map_err(|e| crate::Error::Format(alloc::format!("{}", e)))?;

    let mut params = ParamSet::new();
    for _ in 0..2 * (n_hidden + 1) {
        let len = r.u32()?;
        let name = String::from_utf8(r.take(len)?.to_vec()).map_err(|_| crate::Error::Format("tensor name is not UTF-8".into()))?;
        let rank = r.u32()?;
        if rank > 8 {
            bail!(Format, "implausible tensor rank {}", rank);
        }
        let dims = (0..rank).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let n = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
        let n = match n {
            Some(n) if n * 8 <= bytes.len() - r.pos => n,
            _ => bail!(Format, "truncated checkpoint in tensor {:?}", name),
        };
        let values = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let t = Tensor::new(dims, values).map_err(|e| crate::Error::Format(alloc::format!("{}", e)))?;
        params.push(name, t).map_err(|e| crate::Error::Format(alloc::format!("{}", e)))?;
    }
    if r.pos != bytes.len() {
        bail!(Format, "{} trailing bytes after checkpoint", bytes.len() - r.pos);
    }
    spec.check_params(&params).map_err(|e| crate::Error::Format(alloc::format!("{}", e)))?;
    Ok((params, spec))
}

impl Mlp {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        encode(&self.params, &self.spec)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (params, spec) = decode(bytes)?;
        Ok(Self { spec, params })
    }
}
