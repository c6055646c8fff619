//! Disk cache for junction coefficient blocks and first-order coefficients.
//!
//! Quadrature over `n_max^2` mode pairs dominates the cost of everything
//! built on top of the junction oracle, and the coefficients depend only on
//! `(L, h, n_max, quadrature tolerances)` — not on trajectory timing — so
//! memoizing them pays for itself immediately.
//!
//! Each cached computation is one self-describing JSON file holding the
//! format version, the full parameter key, and the row-major complex
//! matrices. Numbers are serialized with shortest-round-trip formatting, so
//! a load returns bit-for-bit the matrices that were stored. Files are
//! written to a temporary file in the cache directory and atomically renamed
//! into place: concurrent readers see either the old or the new complete
//! file, never a partial one, and the last writer wins.
//!
//! A file whose format version differs from [`CACHE_FORMAT_VERSION`] is
//! refused with a hard error (never silently recomputed), so stale caches
//! surface instead of masking format drift. A file whose embedded key does
//! not match the request (which can only happen on a filename-hash
//! collision) is treated as a miss.
//!
//! The cache is `f64`-specific: persisted artifacts pin the precision they
//! were computed at.

use crate::bogoliubov::{BogoliubovBlock, FirstOrderCoeffs, Provenance};
use crate::geometry::CavityGeometry;
use crate::quadrature::QuadSpec;
use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Format version embedded in every cache file.
pub const CACHE_FORMAT_VERSION: u32 = 1;

/// Environment variable that overrides the cache directory.
pub const CACHE_DIR_ENV: &str = "RELCAV_CACHE_DIR";

/// Resolves the cache directory with precedence: explicit choice, then the
/// [`CACHE_DIR_ENV`] environment variable, then the provided default.
/// `None` everywhere means caching stays disabled.
pub fn resolve_cache_dir(
    explicit: Option<PathBuf>,
    default: Option<PathBuf>,
) -> Option<PathBuf> {
    explicit
        .or_else(|| std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from))
        .or(default)
}

/// Failure modes of cache access.
#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache I/O failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("cache file is not valid JSON of the expected shape: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("cache file {path} has format version {found}, this build reads {expected}; refusing to load (delete or move the file to recompute)")]
    VersionMismatch {
        path: PathBuf,
        found: u32,
        expected: u32,
    },
    #[error("cache file {path} holds a '{found}' entry where '{expected}' was requested")]
    KindMismatch {
        path: PathBuf,
        found: String,
        expected: String,
    },
    #[error("cache file contents are inconsistent: {0}")]
    InvalidContents(String),
}

/// Identifies one junction-oracle computation (standard wedge; the mirrored
/// wedge is the parity flip and is never cached separately).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JunctionKey {
    pub length: f64,
    pub h: f64,
    pub n_max: usize,
    pub degree: usize,
    pub abs_tol: f64,
    pub max_panels: usize,
    pub min_panels: usize,
}

impl JunctionKey {
    pub fn new(geometry: &CavityGeometry<f64>, n_max: usize, spec: &QuadSpec<f64>) -> Self {
        Self {
            length: geometry.length(),
            h: geometry.acceleration_parameter(),
            n_max,
            degree: spec.degree,
            abs_tol: spec.abs_tol,
            max_panels: spec.max_panels,
            min_panels: spec.min_panels,
        }
    }

    fn matches(&self, other: &Self) -> bool {
        self.length.to_bits() == other.length.to_bits()
            && self.h.to_bits() == other.h.to_bits()
            && self.n_max == other.n_max
            && self.degree == other.degree
            && self.abs_tol.to_bits() == other.abs_tol.to_bits()
            && self.max_panels == other.max_panels
            && self.min_panels == other.min_panels
    }
}

/// Identifies one first-order extraction (the `h` ladder is fixed by the
/// extraction scheme, so only the cavity and quadrature parameters matter).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FirstOrderKey {
    pub length: f64,
    pub n_max: usize,
    pub degree: usize,
    pub abs_tol: f64,
    pub max_panels: usize,
    pub min_panels: usize,
}

impl FirstOrderKey {
    pub fn new(geometry: &CavityGeometry<f64>, n_max: usize, spec: &QuadSpec<f64>) -> Self {
        Self {
            length: geometry.length(),
            n_max,
            degree: spec.degree,
            abs_tol: spec.abs_tol,
            max_panels: spec.max_panels,
            min_panels: spec.min_panels,
        }
    }

    fn matches(&self, other: &Self) -> bool {
        self.length.to_bits() == other.length.to_bits()
            && self.n_max == other.n_max
            && self.degree == other.degree
            && self.abs_tol.to_bits() == other.abs_tol.to_bits()
            && self.max_panels == other.max_panels
            && self.min_panels == other.min_panels
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct StoredMatrix {
    rows: usize,
    cols: usize,
    /// Row-major real parts.
    re: Vec<f64>,
    /// Row-major imaginary parts.
    im: Vec<f64>,
}

impl StoredMatrix {
    fn from_matrix(m: &DMatrix<Complex<f64>>) -> Self {
        let (rows, cols) = m.shape();
        let mut re = Vec::with_capacity(rows * cols);
        let mut im = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                re.push(m[(r, c)].re);
                im.push(m[(r, c)].im);
            }
        }
        Self { rows, cols, re, im }
    }

    fn to_matrix(&self) -> Result<DMatrix<Complex<f64>>, CacheError> {
        if self.re.len() != self.rows * self.cols || self.im.len() != self.rows * self.cols {
            return Err(CacheError::InvalidContents(format!(
                "matrix payload length {}/{} does not match shape {}x{}",
                self.re.len(),
                self.im.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(DMatrix::from_fn(self.rows, self.cols, |r, c| {
            let i = r * self.cols + c;
            Complex::new(self.re[i], self.im[i])
        }))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct VersionProbe {
    format_version: u32,
    kind: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct JunctionFile {
    format_version: u32,
    kind: String,
    key: JunctionKey,
    alpha: StoredMatrix,
    beta: StoredMatrix,
}

#[derive(Debug, Serialize, Deserialize)]
struct FirstOrderFile {
    format_version: u32,
    kind: String,
    key: FirstOrderKey,
    alpha1: StoredMatrix,
    beta1: StoredMatrix,
}

const JUNCTION_KIND: &str = "junction";
const FIRST_ORDER_KIND: &str = "first_order";

/// Directory-backed store, one file per cached computation.
#[derive(Debug, Clone)]
pub struct CoefficientCache {
    dir: PathBuf,
}

impl CoefficientCache {
    /// Opens (creating if necessary) a cache rooted at `dir`.
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, CacheError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, kind: &str, key_bytes: &[u8]) -> PathBuf {
        self.dir.join(format!("{kind}-{:016x}.json", fnv1a(key_bytes)))
    }

    /// Loads a junction block if an entry for exactly this key exists.
    pub fn load_junction(
        &self,
        key: &JunctionKey,
    ) -> Result<Option<BogoliubovBlock<f64>>, CacheError> {
        let path = self.path_for(JUNCTION_KIND, &serde_json::to_vec(key)?);
        let Some(bytes) = read_if_exists(&path)? else {
            return Ok(None);
        };
        check_header(&bytes, &path, JUNCTION_KIND)?;
        let file: JunctionFile = serde_json::from_slice(&bytes)?;
        if !file.key.matches(key) {
            return Ok(None);
        }
        let block = BogoliubovBlock::from_parts(
            file.alpha.to_matrix()?,
            file.beta.to_matrix()?,
            Provenance::Oracle,
        )
        .map_err(|e| CacheError::InvalidContents(e.to_string()))?;
        Ok(Some(block))
    }

    /// Stores a junction block under this key, atomically replacing any
    /// previous entry.
    pub fn store_junction(
        &self,
        key: &JunctionKey,
        block: &BogoliubovBlock<f64>,
    ) -> Result<(), CacheError> {
        let file = JunctionFile {
            format_version: CACHE_FORMAT_VERSION,
            kind: JUNCTION_KIND.to_string(),
            key: key.clone(),
            alpha: StoredMatrix::from_matrix(block.alpha()),
            beta: StoredMatrix::from_matrix(block.beta()),
        };
        let path = self.path_for(JUNCTION_KIND, &serde_json::to_vec(key)?);
        self.write_atomically(&path, &serde_json::to_vec(&file)?)
    }

    /// Loads first-order coefficients if an entry for exactly this key
    /// exists.
    pub fn load_first_order(
        &self,
        key: &FirstOrderKey,
    ) -> Result<Option<FirstOrderCoeffs<f64>>, CacheError> {
        let path = self.path_for(FIRST_ORDER_KIND, &serde_json::to_vec(key)?);
        let Some(bytes) = read_if_exists(&path)? else {
            return Ok(None);
        };
        check_header(&bytes, &path, FIRST_ORDER_KIND)?;
        let file: FirstOrderFile = serde_json::from_slice(&bytes)?;
        if !file.key.matches(key) {
            return Ok(None);
        }
        let coeffs = FirstOrderCoeffs::from_parts(file.alpha1.to_matrix()?, file.beta1.to_matrix()?)
            .map_err(|e| CacheError::InvalidContents(e.to_string()))?;
        Ok(Some(coeffs))
    }

    /// Stores first-order coefficients under this key, atomically replacing
    /// any previous entry.
    pub fn store_first_order(
        &self,
        key: &FirstOrderKey,
        coeffs: &FirstOrderCoeffs<f64>,
    ) -> Result<(), CacheError> {
        let file = FirstOrderFile {
            format_version: CACHE_FORMAT_VERSION,
            kind: FIRST_ORDER_KIND.to_string(),
            key: key.clone(),
            alpha1: StoredMatrix::from_matrix(coeffs.alpha1()),
            beta1: StoredMatrix::from_matrix(coeffs.beta1()),
        };
        let path = self.path_for(FIRST_ORDER_KIND, &serde_json::to_vec(key)?);
        self.write_atomically(&path, &serde_json::to_vec(&file)?)
    }

    fn write_atomically(&self, path: &Path, bytes: &[u8]) -> Result<(), CacheError> {
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(path).map_err(|e| CacheError::Io(e.error))?;
        Ok(())
    }
}

fn read_if_exists(path: &Path) -> Result<Option<Vec<u8>>, CacheError> {
    match std::fs::read(path) {
        Ok(bytes) => Ok(Some(bytes)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(CacheError::Io(e)),
    }
}

fn check_header(bytes: &[u8], path: &Path, expected_kind: &str) -> Result<(), CacheError> {
    let probe: VersionProbe = serde_json::from_slice(bytes)?;
    if probe.format_version != CACHE_FORMAT_VERSION {
        return Err(CacheError::VersionMismatch {
            path: path.to_path_buf(),
            found: probe.format_version,
            expected: CACHE_FORMAT_VERSION,
        });
    }
    if probe.kind != expected_kind {
        return Err(CacheError::KindMismatch {
            path: path.to_path_buf(),
            found: probe.kind,
            expected: expected_kind.to_string(),
        });
    }
    Ok(())
}

/// FNV-1a 64-bit hash; only locates the file, never decides a hit (the
/// embedded key does).
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
