//! Flat binary parameter container.
//!
//! ```text
//! magic "CVNNPARM" | u32 version | u32 count
//! count × { u32 name_len | name (UTF-8) | u8 kind (0 complex, 1 real) | u32 ndim | ndim × u64 dim }
//! count × { real plane f64[] | imaginary plane f64[] (complex only) }
//! ```
//!
//! All integers and floats are little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::autograd::params::{ParamKind, ParamStore};
use crate::ctensor::{CTensor, RTensor, Shape};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"CVNNPARM";
pub const VERSION: u32 = 1;

struct Entry {
    name: String,
    kind: ParamKind,
    shape: Shape,
}

pub fn write_params<W: Write>(store: &ParamStore, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(store.len() as u32).to_le_bytes())?;
    for (_, p) in store.iter() {
        let name = p.name().as_bytes();
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name)?;
        w.write_all(&[match p.kind() {
            ParamKind::Complex => 0u8,
            ParamKind::Real => 1u8,
        }])?;
        let dims = p.value().shape().dims();
        w.write_all(&(dims.len() as u32).to_le_bytes())?;
        for &d in dims {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
    }
    for (_, p) in store.iter() {
        for v in p.value().re() {
            w.write_all(&v.to_le_bytes())?;
        }
        if p.kind() == ParamKind::Complex {
            for v in p.value().im() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_plane<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)?;
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

fn read_manifest<R: Read>(r: &mut R) -> Result<Vec<Entry>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a parameter file (bad magic)".into()));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let count = read_u32(r)? as usize;
    let mut entries = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let len = read_u32(r)? as usize;
        if len > 1 << 20 {
            return Err(Error::Format(format!("name length {len} is implausible")));
        }
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| Error::Format("parameter name is not UTF-8".into()))?;
        let mut kind = [0u8; 1];
        r.read_exact(&mut kind)?;
        let kind = match kind[0] {
            0 => ParamKind::Complex,
            1 => ParamKind::Real,
            k => return Err(Error::Format(format!("unknown kind tag {k} for '{name}'"))),
        };
        let ndim = read_u32(r)? as usize;
        if ndim > 16 {
            return Err(Error::Format(format!("'{name}' has {ndim} dimensions")));
        }
        let dims = (0..ndim).map(|_| read_u64(r).map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        entries.push(Entry {
            name,
            kind,
            shape: Shape::new(dims),
        });
    }
    Ok(entries)
}

fn read_value<R: Read>(r: &mut R, e: &Entry) -> Result<CTensor> {
    let n = e.shape.numel();
    let re = read_plane(r, n)?;
    Ok(match e.kind {
        ParamKind::Complex => CTensor::new(re, read_plane(r, n)?, e.shape.clone())?,
        ParamKind::Real => CTensor::from_real(&RTensor::new(re, e.shape.clone())?),
    })
}

/// Rebuilds a store with the names, kinds and values in the container.
pub fn read_params<R: Read>(r: R) -> Result<ParamStore> {
    let mut r = BufReader::new(r);
    let entries = read_manifest(&mut r)?;
    let mut store = ParamStore::new();
    for e in &entries {
        let v = read_value(&mut r, e)?;
        match e.kind {
            ParamKind::Complex => store.add_complex(e.name.clone(), v),
            ParamKind::Real => store.add_real(e.name.clone(), v.real_part()),
        };
    }
    Ok(store)
}

/// Overwrites the values of `store`, which must have the same manifest.
pub fn load_into<R: Read>(store: &mut ParamStore, r: R) -> Result<()> {
    let mut r = BufReader::new(r);
    let entries = read_manifest(&mut r)?;
    if entries.len() != store.len() {
        return Err(Error::Format(format!(
            "container holds {} parameters, model has {}",
            entries.len(),
            store.len()
        )));
    }
    for (e, id) in entries.iter().zip(store.ids()) {
        let p = store.get(id);
        if p.name() != e.name || p.kind() != e.kind || p.value().shape() != &e.shape {
            return Err(Error::Format(format!(
                "manifest entry '{}' {} does not match model parameter '{}' {}",
                e.name,
                e.shape,
                p.name(),
                p.value().shape()
            )));
        }
    }
    for (e, id) in entries.iter().zip(store.ids()) {
        let v = read_value(&mut r, e)?;
        store.set_value(id, v)?;
    }
    Ok(())
}

pub fn save(store: &ParamStore, path: impl AsRef<Path>) -> Result<()> {
    write_params(store, File::create(path)?)
}

pub fn load(path: impl AsRef<Path>) -> Result<ParamStore> {
    read_params(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::{Backend, ComplexConv1d, ComplexLinear, RealLinear};
    use crate::kernels::ConvGeometry;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> ParamStore {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut store = ParamStore::new();
        ComplexLinear::new(&mut store, "lin", 3, 4, true, Backend::Block, &mut rng);
        ComplexConv1d::new(&mut store, "conv", 2, 2, 3, ConvGeometry::default(), true, Backend::Block, &mut rng).unwrap();
        RealLinear::new(&mut store, "real", 2, 2, true, &mut rng);
        store
    }

    fn bits(store: &ParamStore) -> Vec<(String, Vec<u64>)> {
        store
            .iter()
            .map(|(_, p)| {
                let v = p.value();
                (p.name().to_string(), v.re().iter().chain(v.im()).map(|x| x.to_bits()).collect())
            })
            .collect()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut store = model();
        // awkward values survive unchanged
        let id = store.find("lin.bias").unwrap();
        store.set_value(id, CTensor::new(vec![-0.0, f64::MIN_POSITIVE, 1e308, 1.0 / 3.0], vec![f64::EPSILON, -5e-324, 0.1, -0.0], [4]).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_params(&store, &mut buf).unwrap();
        let back = read_params(buf.as_slice()).unwrap();
        assert_eq!(bits(&back), bits(&store));
        assert_eq!(back.get(back.find("real.weight").unwrap()).kind(), ParamKind::Real);

        let mut fresh = model();
        load_into(&mut fresh, buf.as_slice()).unwrap();
        assert_eq!(bits(&fresh), bits(&store));
    }

    #[test]
    fn corrupt_or_mismatched_input_is_rejected() {
        let store = model();
        let mut buf = Vec::new();
        write_params(&store, &mut buf).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_params(bad.as_slice()), Err(Error::Format(_))));
        assert!(read_params(&buf[..buf.len() - 3]).is_err());

        let mut other = ParamStore::new();
        other.add_complex("lin.weight", CTensor::zeros([4, 3]));
        assert!(load_into(&mut other, buf.as_slice()).is_err());
    }

    #[test]
    fn files_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.bin");
        let store = model();
        save(&store, &path).unwrap();
        assert_eq!(bits(&load(&path).unwrap()), bits(&store));
    }
}
