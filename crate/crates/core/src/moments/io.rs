//! On-disk formats for [`MomentSet`].
//!
//! Binary layout, all integers and floats little-endian:
//!
//! ```text
//! magic    8 bytes  "MGMMOMS\0"
//! version  u32      1
//! n        u32
//! orders   u32      bit 0: M3, bit 1: M4, bit 2: M6 (distinct indices only)
//! pairs    u32      pair-order tag, 1 = colex (i <= j at i + j(j+1)/2)
//! prov     u32      0 = exact, 1 = empirical
//! samples  u64      sample count (0 when exact)
//! then the M3, M4, M6 arrays present, each in canonical colex order as f64
//! ```

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{DistinctM6, MomentSet, Provenance, SymTensor};
use crate::error::{Error, Result};
use crate::index::{binom, multiset_count};

pub const MAGIC: &[u8; 8] = b"MGMMOMS\0";
pub const VERSION: u32 = 1;
pub const PAIR_ORDER_COLEX: u32 = 1;

fn put_u32(w: &mut impl Write, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn get_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn put_floats(w: &mut impl Write, xs: &[f64]) -> Result<()> {
    for x in xs {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn get_floats(r: &mut impl Read, len: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; len * 8];
    r.read_exact(&mut buf)?;
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
}

pub fn write_binary(set: &MomentSet, w: &mut impl Write) -> Result<()> {
    w.write_all(MAGIC)?;
    put_u32(w, VERSION)?;
    put_u32(w, set.dim as u32)?;
    let flags = set.m3.is_some() as u32 | (set.m4.is_some() as u32) << 1 | (set.m6.is_some() as u32) << 2;
    put_u32(w, flags)?;
    put_u32(w, PAIR_ORDER_COLEX)?;
    let (kind, samples) = match set.provenance {
        Provenance::Exact => (0, 0u64),
        Provenance::Empirical { samples } => (1, samples as u64),
    };
    put_u32(w, kind)?;
    w.write_all(&samples.to_le_bytes())?;
    if let Some(t) = &set.m3 {
        put_floats(w, t.data())?;
    }
    if let Some(t) = &set.m4 {
        put_floats(w, t.data())?;
    }
    if let Some(t) = &set.m6 {
        put_floats(w, t.data())?;
    }
    Ok(())
}

pub fn read_binary(r: &mut impl Read) -> Result<MomentSet> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a moment file (bad magic)".into()));
    }
    let version = get_u32(r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported moment file version {version}")));
    }
    let n = get_u32(r)? as usize;
    let flags = get_u32(r)?;
    let pairs = get_u32(r)?;
    if pairs != PAIR_ORDER_COLEX {
        return Err(Error::Format(format!("unknown pair-order tag {pairs}")));
    }
    let provenance = match get_u32(r)? {
        0 => {
            get_u64(r)?;
            Provenance::Exact
        }
        1 => Provenance::Empirical { samples: get_u64(r)? as usize },
        other => return Err(Error::Format(format!("unknown provenance tag {other}"))),
    };
    let mut set = MomentSet { dim: n, m3: None, m4: None, m6: None, provenance };
    if flags & 1 != 0 {
        set.m3 = Some(SymTensor::from_data(3, n, get_floats(r, multiset_count(n, 3))?)?);
    }
    if flags & 2 != 0 {
        set.m4 = Some(SymTensor::from_data(4, n, get_floats(r, multiset_count(n, 4))?)?);
    }
    if flags & 4 != 0 {
        set.m6 = Some(DistinctM6::from_data(n, get_floats(r, binom(n, 6))?)?);
    }
    Ok(set)
}

pub fn save(set: &MomentSet, path: &std::path::Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_binary(set, &mut f)?;
    f.flush()?;
    Ok(())
}

pub fn load(path: &std::path::Path) -> Result<MomentSet> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_binary(&mut f)
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    index: Vec<usize>,
    value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Dump {
    n: usize,
    provenance: Provenance,
    pair_order: String,
    m3: Option<Vec<Entry>>,
    m4: Option<Vec<Entry>>,
    m6: Option<Vec<Entry>>,
}

/// Human-readable dump listing every stored entry with its index tuple.
pub fn to_json_dump(set: &MomentSet) -> Result<String> {
    let sym = |t: &SymTensor| t.tuples().map(|index| Entry { value: t.get(&index), index }).collect::<Vec<_>>();
    let dump = Dump {
        n: set.dim,
        provenance: set.provenance,
        pair_order: "colex".into(),
        m3: set.m3.as_ref().map(sym),
        m4: set.m4.as_ref().map(sym),
        m6: set.m6.as_ref().map(|t| {
            crate::index::strict_tuples(set.dim, 6)
                .zip(t.data())
                .map(|(index, &value)| Entry { index, value })
                .collect()
        }),
    };
    Ok(serde_json::to_string_pretty(&dump)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmm::GmmParams;
    use crate::moments::exact_moments;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn binary_round_trip() {
        let c = DMatrix::from_fn(6, 6, |i, j| if i == j { 1.0 } else { 0.1 });
        let p = GmmParams::new(vec![1.0], vec![DVector::from_element(6, 0.2)], vec![c]).unwrap();
        let mut set = exact_moments(&p, &[3, 4, 6]).unwrap();
        set.provenance = Provenance::Empirical { samples: 42 };
        let mut buf = Vec::new();
        write_binary(&set, &mut buf).unwrap();
        let back = read_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(back, set);
        let dump = to_json_dump(&set).unwrap();
        assert!(dump.contains("\"samples\": 42"));
    }

    #[test]
    fn rejects_bad_magic() {
        let buf = vec![0u8; 64];
        assert!(matches!(read_binary(&mut buf.as_slice()), Err(Error::Format(_))));
    }
}
