//! On-disk cache of built channels.
//!
//! Layout under the cache directory, one subdirectory per sector:
//!
//! ```text
//! m{m}-n{n}/manifest.json
//! m{m}-n{n}/proj_{k}.bin
//! ```
//!
//! `manifest.json` holds `{"version": 1, "m", "n", "d", "eigenvalues": [...],
//! "projectors": [{"k", "nnz", "dim", "sha256"}]}`. Each `proj_k.bin` is the
//! magic `FKPJ`, then little-endian `u32` version, m, n, k, `u64` order and
//! nnz, `order + 1` `u64` column pointers, `nnz` `u64` row indices and `nnz`
//! `f64` values of the upper triangle (diagonal included).
//!
//! Files are written to a temporary name and renamed into place, and the
//! manifest goes last, so a reader sees either a complete cache or none.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::projectors::IrrepProjector;
use super::sparse::SymmetricSparseMatrix;
use super::{irrep_dimension, MeasurementChannel};
use crate::error::{CacheError, Error, Result};
use crate::fock::SectorBasis;

pub const CACHE_VERSION: u32 = 1;
pub const CACHE_ENV: &str = "FSHADOW_CACHE";
const MAGIC: &[u8; 4] = b"FKPJ";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheManifest {
    pub version: u32,
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub eigenvalues: Vec<f64>,
    pub projectors: Vec<ProjectorEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectorEntry {
    pub k: usize,
    pub nnz: usize,
    pub dim: usize,
    pub sha256: String,
}

/// The flag value if given, else `$FSHADOW_CACHE`.
pub fn resolve_cache_dir(flag: Option<&Path>) -> Option<PathBuf> {
    flag.map(Path::to_path_buf).or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
}

pub fn sector_dir(cache_dir: &Path, m: usize, n: usize) -> PathBuf {
    cache_dir.join(format!("m{m}-n{n}"))
}

pub fn save_channel(cache_dir: &Path, channel: &MeasurementChannel) -> Result<CacheManifest> {
    let (m, n) = (channel.modes(), channel.photons());
    let dir = sector_dir(cache_dir, m, n);
    fs::create_dir_all(&dir)?;
    let mut entries = Vec::with_capacity(channel.projectors().len());
    for p in channel.projectors() {
        let blob = encode_projector(m, n, p);
        write_atomic(&dir.join(format!("proj_{}.bin", p.k)), &blob)?;
        entries.push(ProjectorEntry {
            k: p.k,
            nnz: p.matrix.nnz(),
            dim: p.dim,
            sha256: hex::encode(Sha256::digest(&blob)),
        });
    }
    let manifest = CacheManifest {
        version: CACHE_VERSION,
        m,
        n,
        d: channel.dim(),
        eigenvalues: channel.eigenvalues().to_vec(),
        projectors: entries,
    };
    let json = serde_json::to_vec_pretty(&manifest)?;
    write_atomic(&dir.join("manifest.json"), &json)?;
    Ok(manifest)
}

/// Reads a channel back, validating version, checksums, structure and a
/// cheap idempotency spot-check of every projector.
pub fn load_channel(cache_dir: &Path, m: usize, n: usize) -> Result<MeasurementChannel> {
    let dir = sector_dir(cache_dir, m, n);
    let manifest_path = dir.join("manifest.json");
    let raw = read_required(&manifest_path)?;
    let manifest: CacheManifest = serde_json::from_slice(&raw).map_err(|e| CacheError::Corrupt {
        path: manifest_path.clone(),
        reason: e.to_string(),
    })?;
    if manifest.version != CACHE_VERSION {
        return Err(CacheError::Version { expected: CACHE_VERSION, found: manifest.version }.into());
    }
    let corrupt = |path: &Path, reason: String| -> Error {
        CacheError::Corrupt { path: path.to_path_buf(), reason }.into()
    };
    if manifest.m != m || manifest.n != n {
        return Err(corrupt(&manifest_path, format!("manifest is for m={}, n={}", manifest.m, manifest.n)));
    }
    let basis = Arc::new(SectorBasis::new(m, n)?);
    if manifest.d != basis.dim() {
        return Err(corrupt(&manifest_path, format!("d={} does not match the sector", manifest.d)));
    }

    let mut projectors = Vec::with_capacity(manifest.projectors.len());
    for (pos, entry) in manifest.projectors.iter().enumerate() {
        let path = dir.join(format!("proj_{}.bin", entry.k));
        let blob = read_required(&path)?;
        if hex::encode(Sha256::digest(&blob)) != entry.sha256 {
            return Err(CacheError::Checksum(path).into());
        }
        let matrix = decode_projector(&blob, m, n, entry.k).map_err(|r| corrupt(&path, r))?;
        if entry.k != pos || matrix.nnz() != entry.nnz || matrix.order() != basis.dim().pow(2) {
            return Err(corrupt(&path, "header disagrees with manifest".into()));
        }
        if entry.dim != irrep_dimension(m, entry.k) || (matrix.trace() - entry.dim as f64).abs() > 1e-8 {
            return Err(corrupt(&path, format!("trace {} but dim {}", matrix.trace(), entry.dim)));
        }
        spot_check(&matrix).map_err(|r| corrupt(&path, r))?;
        projectors.push(IrrepProjector { k: entry.k, matrix, dim: entry.dim });
    }
    let channel = MeasurementChannel::from_parts(basis, projectors)?;
    if channel.eigenvalues() != manifest.eigenvalues.as_slice() {
        return Err(corrupt(&manifest_path, "eigenvalues disagree with the closed form".into()));
    }
    Ok(channel)
}

fn read_required(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CacheError::Missing(path.to_path_buf()).into(),
        _ => Error::Io(e),
    })
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn encode_projector(m: usize, n: usize, p: &IrrepProjector) -> Vec<u8> {
    let a = &p.matrix;
    let mut out = Vec::with_capacity(36 + 8 * (a.order() + 1 + 2 * a.nnz()));
    out.extend_from_slice(MAGIC);
    for v in [CACHE_VERSION, m as u32, n as u32, p.k as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(a.order() as u64).to_le_bytes());
    out.extend_from_slice(&(a.nnz() as u64).to_le_bytes());
    for &c in a.col_ptr() {
        out.extend_from_slice(&(c as u64).to_le_bytes());
    }
    for &r in a.row_idx() {
        out.extend_from_slice(&(r as u64).to_le_bytes());
    }
    for &v in a.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], String> {
        let end = self.pos + N;
        let bytes = self.buf.get(self.pos..end).ok_or("truncated blob")?;
        self.pos = end;
        Ok(bytes.try_into().unwrap())
    }

    fn u32(&mut self) -> Result<u32, String> {
        self.take::<4>().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Result<u64, String> {
        self.take::<8>().map(u64::from_le_bytes)
    }

    fn f64(&mut self) -> Result<f64, String> {
        self.take::<8>().map(f64::from_le_bytes)
    }
}

fn decode_projector(blob: &[u8], m: usize, n: usize, k: usize) -> Result<SymmetricSparseMatrix, String> {
    let mut r = Reader { buf: blob, pos: 0 };
    if &r.take::<4>()? != MAGIC {
        return Err("bad magic".into());
    }
    let version = r.u32()?;
    if version != CACHE_VERSION {
        return Err(format!("blob version {version}"));
    }
    let (bm, bn, bk) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
    if (bm, bn, bk) != (m, n, k) {
        return Err(format!("blob is for m={bm}, n={bn}, k={bk}"));
    }
    let order = r.u64()? as usize;
    let nnz = r.u64()? as usize;
    let expected_len = 36 + 8 * (order + 1 + 2 * nnz);
    if blob.len() != expected_len {
        return Err(format!("blob has {} bytes, expected {expected_len}", blob.len()));
    }
    let col_ptr = (0..=order).map(|_| r.u64().map(|v| v as usize)).collect::<Result<Vec<_>, _>>()?;
    let row_idx = (0..nnz).map(|_| r.u64().map(|v| v as usize)).collect::<Result<Vec<_>, _>>()?;
    let values = (0..nnz).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
    SymmetricSparseMatrix::from_csc(order, col_ptr, row_idx, values).map_err(|e| e.to_string())
}

/// `Pi (Pi x) = Pi x` on two fixed pseudo-random vectors.
fn spot_check(p: &SymmetricSparseMatrix) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..2 {
        let x: Vec<f64> = (0..p.order()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = p.matvec(&x).map_err(|e| e.to_string())?;
        let z = p.matvec(&y).map_err(|e| e.to_string())?;
        let err = y.iter().zip(&z).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        if err > 1e-8 {
            return Err(format!("projector is not idempotent (defect {err:e})"));
        }
    }
    Ok(())
}
