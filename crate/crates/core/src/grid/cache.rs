//! On-disk kernel matrices.
//!
//! Layout: 8-byte magic, u32 version, 64-byte hex meta hash, u64 rows,
//! u64 cols, u64 meta length, meta JSON, row-major little-endian f64 data,
//! then a SHA-256 of everything before it. Writes go through a temporary
//! file and a rename so readers never observe a partial entry.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{KernelMatrix, KernelMeta};

const MAGIC: &[u8; 8] = b"DKBKMAT\0";
const VERSION: u32 = 1;
const EXTENSION: &str = "kmat";
const HASH_LEN: usize = 64;
const FOOTER_LEN: usize = 32;

/// One file in a cache directory.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheEntry {
    pub path: PathBuf,
    pub hash: String,
    pub rows: usize,
    pub cols: usize,
    pub bytes: u64,
}

/// Result of re-hashing an entry.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOutcome {
    pub path: PathBuf,
    pub ok: bool,
    pub detail: String,
}

pub fn entry_path(dir: &Path, hash: &str) -> PathBuf {
    dir.join(format!("{hash}.{EXTENSION}"))
}

fn encode(k: &KernelMatrix) -> Result<Vec<u8>> {
    let meta = serde_json::to_vec(k.meta()).map_err(|e| Error::Serialization(e.to_string()))?;
    let (rows, cols) = (k.rows(), k.cols());
    let mut buf = Vec::with_capacity(8 + 4 + HASH_LEN + 24 + meta.len() + 8 * rows * cols + FOOTER_LEN);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(k.hash().as_bytes());
    buf.extend_from_slice(&(rows as u64).to_le_bytes());
    buf.extend_from_slice(&(cols as u64).to_le_bytes());
    buf.extend_from_slice(&(meta.len() as u64).to_le_bytes());
    buf.extend_from_slice(&meta);
    let data = k.data();
    for r in 0..rows {
        for c in 0..cols {
            buf.extend_from_slice(&data[(r, c)].to_le_bytes());
        }
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    Ok(buf)
}

struct Header {
    hash: String,
    rows: usize,
    cols: usize,
    meta: KernelMeta,
    data_start: usize,
}

fn corrupt(path: &Path, reason: impl Into<String>) -> Error {
    Error::CorruptCache {
        path: path.to_owned(),
        reason: reason.into(),
    }
}

fn read_u64(bytes: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"))
}

fn decode_header(path: &Path, bytes: &[u8]) -> Result<Header> {
    let fixed = 8 + 4 + HASH_LEN + 24;
    if bytes.len() < fixed + FOOTER_LEN {
        return Err(corrupt(path, "file shorter than header"));
    }
    let (body, footer) = bytes.split_at(bytes.len() - FOOTER_LEN);
    if Sha256::digest(body).as_slice() != footer {
        return Err(corrupt(path, "checksum mismatch"));
    }
    if &body[..8] != MAGIC {
        return Err(corrupt(path, "bad magic"));
    }
    let version = u32::from_le_bytes(body[8..12].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(corrupt(path, format!("unsupported version {version}")));
    }
    let hash = std::str::from_utf8(&body[12..12 + HASH_LEN])
        .map_err(|_| corrupt(path, "hash is not ASCII"))?
        .to_owned();
    let at = 12 + HASH_LEN;
    let rows = read_u64(body, at) as usize;
    let cols = read_u64(body, at + 8) as usize;
    let meta_len = read_u64(body, at + 16) as usize;
    let data_start = fixed + meta_len;
    if body.len() != data_start + 8 * rows * cols {
        return Err(corrupt(path, "length does not match dimensions"));
    }
    let meta: KernelMeta =
        serde_json::from_slice(&body[fixed..data_start]).map_err(|e| corrupt(path, e.to_string()))?;
    if meta.hash() != hash {
        return Err(corrupt(path, "metadata does not match stored hash"));
    }
    Ok(Header {
        hash,
        rows,
        cols,
        meta,
        data_start,
    })
}

/// Writes `k` to an explicit path.
pub fn store_at(k: &KernelMatrix, path: &Path) -> Result<()> {
    let bytes = encode(k)?;
    let tmp = path.with_extension(format!("{EXTENSION}.tmp"));
    fs::write(&tmp, &bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Writes `k` under its meta hash inside `dir`.
pub fn store(k: &KernelMatrix, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = entry_path(dir, &k.hash());
    store_at(k, &path)?;
    Ok(path)
}

/// Loads and checks integrity and that the stored hash is `expected_hash`.
pub fn load(path: &Path, expected_hash: &str) -> Result<KernelMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let h = decode_header(path, &bytes)?;
    if h.hash != expected_hash {
        return Err(Error::StaleCache {
            path: path.to_owned(),
            expected: expected_hash.to_owned(),
            found: h.hash,
        });
    }
    let data = DMatrix::from_row_iterator(
        h.rows,
        h.cols,
        bytes[h.data_start..bytes.len() - FOOTER_LEN]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))),
    );
    Ok(KernelMatrix::new(data, h.meta))
}

/// Returns the cached matrix for `meta`, building and storing it on a miss.
pub fn load_or_build(
    dir: &Path,
    meta: &KernelMeta,
    build: impl FnOnce() -> Result<KernelMatrix>,
) -> Result<KernelMatrix> {
    let hash = meta.hash();
    let path = entry_path(dir, &hash);
    if path.exists() {
        match load(&path, &hash) {
            Ok(k) => return Ok(k),
            Err(Error::CorruptCache { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let k = build()?;
    store(&k, dir)?;
    Ok(k)
}

fn cache_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == EXTENSION))
        .collect();
    out.sort();
    Ok(out)
}

/// Entries whose headers parse; corrupted files are skipped (see `verify`).
pub fn list(dir: &Path) -> Result<Vec<CacheEntry>> {
    let mut out = Vec::new();
    for path in cache_files(dir)? {
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if let Ok(h) = decode_header(&path, &bytes) {
            out.push(CacheEntry {
                path,
                hash: h.hash,
                rows: h.rows,
                cols: h.cols,
                bytes: bytes.len() as u64,
            });
        }
    }
    Ok(out)
}

/// Removes every cache file; returns how many were deleted.
pub fn purge(dir: &Path) -> Result<usize> {
    let files = cache_files(dir)?;
    for p in &files {
        fs::remove_file(p).map_err(|e| Error::io(p, e))?;
    }
    Ok(files.len())
}

/// Re-hashes every entry and checks the file name against the meta hash.
pub fn verify(dir: &Path) -> Result<Vec<VerifyOutcome>> {
    let mut out = Vec::new();
    for path in cache_files(dir)? {
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let outcome = match decode_header(&path, &bytes) {
            Ok(h) => {
                let named = path.file_stem().and_then(|s| s.to_str()) == Some(h.hash.as_str());
                VerifyOutcome {
                    ok: named,
                    detail: if named { "ok".into() } else { "file name does not match hash".into() },
                    path,
                }
            }
            Err(e) => VerifyOutcome {
                path,
                ok: false,
                detail: e.to_string(),
            },
        };
        out.push(outcome);
    }
    Ok(out)
}
