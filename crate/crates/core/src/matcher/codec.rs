//! `APDS` descriptor files.
//!
//! Layout, all little-endian: magic `APDS`, version `u32 = 1`, dim `u32`,
//! count `u64`, then `count * dim` `f32` values row-major. Ids live in a
//! sidecar text file `<path>.ids`, one per line, in row order.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use super::descriptor::DescriptorSet;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"APDS";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8;

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s: OsString = path.as_os_str().to_owned();
    s.push(".ids");
    PathBuf::from(s)
}

pub fn encode(set: &DescriptorSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + set.data().len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(set.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(set.len() as u64).to_le_bytes());
    for v in set.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn encode_ids(set: &DescriptorSet) -> String {
    let mut s = String::new();
    for id in set.ids() {
        s.push_str(id);
        s.push('\n');
    }
    s
}

fn take<'a>(bytes: &'a [u8], at: usize, n: usize, field: &'static str) -> Result<&'a [u8]> {
    bytes
        .get(at..at + n)
        .ok_or_else(|| Error::codec(field, format!("truncated: need {} bytes, have {}", at + n, bytes.len())))
}

pub fn decode(bytes: &[u8], ids_text: &str) -> Result<DescriptorSet> {
    if take(bytes, 0, 4, "magic")? != MAGIC {
        return Err(Error::codec("magic", format!("expected {MAGIC:?}, found {:?}", &bytes[..4])));
    }
    let version = u32::from_le_bytes(take(bytes, 4, 4, "version")?.try_into().unwrap());
    if version != VERSION {
        return Err(Error::codec("version", format!("unsupported version {version}, expected {VERSION}")));
    }
    let dim = u32::from_le_bytes(take(bytes, 8, 4, "dim")?.try_into().unwrap()) as usize;
    if dim == 0 {
        return Err(Error::codec("dim", "dimension must be positive"));
    }
    let count = u64::from_le_bytes(take(bytes, 12, 8, "count")?.try_into().unwrap());
    let n_values = usize::try_from(count)
        .ok()
        .and_then(|c| c.checked_mul(dim))
        .ok_or_else(|| Error::codec("count", format!("count {count} overflows")))?;
    let payload_len = n_values
        .checked_mul(4)
        .ok_or_else(|| Error::codec("count", format!("count {count} overflows")))?;
    let payload = take(bytes, HEADER_LEN, payload_len, "vectors")?;
    if bytes.len() != HEADER_LEN + payload_len {
        return Err(Error::codec("vectors", format!("{} trailing bytes", bytes.len() - HEADER_LEN - payload_len)));
    }
    let data: Vec<f32> = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    let ids: Vec<String> = ids_text.lines().map(str::to_owned).collect();
    if ids.len() as u64 != count {
        return Err(Error::codec("ids", format!("{} ids for {count} vectors", ids.len())));
    }
    DescriptorSet::new(ids, dim, data).map_err(|e| match e {
        Error::Shape(reason) => Error::codec("vectors", reason),
        other => other,
    })
}

pub fn write_descriptors(set: &DescriptorSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, encode(set)).map_err(|e| Error::io(path, e))?;
    let ids = sidecar_path(path);
    std::fs::write(&ids, encode_ids(set)).map_err(|e| Error::io(&ids, e))
}

pub fn read_descriptors(path: impl AsRef<Path>) -> Result<DescriptorSet> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let ids_path = sidecar_path(path);
    let ids = std::fs::read_to_string(&ids_path).map_err(|e| Error::io(&ids_path, e))?;
    decode(&bytes, &ids)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DescriptorSet {
        DescriptorSet::from_rows(vec!["x".into(), "y".into()], vec![vec![0.6, 0.8], vec![-1.0, 0.0]]).unwrap()
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&sample());
        assert_eq!(&bytes[..4], b"APDS");
        assert_eq!(&bytes[4..8], &[1, 0, 0, 0]);
        assert_eq!(&bytes[8..12], &[2, 0, 0, 0]);
        assert_eq!(&bytes[12..20], &[2, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(bytes.len(), 20 + 16);
        assert_eq!(&bytes[20..24], &0.6f32.to_le_bytes());
    }

    #[test]
    fn empty_set_roundtrips() {
        let set = DescriptorSet::empty(7).unwrap();
        let back = decode(&encode(&set), "").unwrap();
        assert_eq!(back, set);
        assert_eq!(encode(&back), encode(&set));
    }

    #[test]
    fn error_fields() {
        let good = encode(&sample());
        let ids = encode_ids(&sample());
        let field = |bytes: &[u8], ids: &str| match decode(bytes, ids) {
            Err(Error::Codec { field, .. }) => field,
            other => panic!("expected codec error, got {other:?}"),
        };
        let mut bad = good.clone();
        bad[0] = b'X';
        assert_eq!(field(&bad, &ids), "magic");
        let mut bad = good.clone();
        bad[4] = 2;
        assert_eq!(field(&bad, &ids), "version");
        assert_eq!(field(&good[..10], &ids), "dim");
        assert_eq!(field(&good[..15], &ids), "count");
        assert_eq!(field(&good[..30], &ids), "vectors");
        assert_eq!(field(&good, "x\n"), "ids");
        assert_eq!(field(&good[..2], &ids), "magic");
        let mut bad = good.clone();
        bad.push(0);
        assert_eq!(field(&bad, &ids), "vectors");
    }
}
