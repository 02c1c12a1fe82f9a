//! Binary checkpoint format.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "GKAW"
//! 4       4     version, u32 LE (= 1)
//! 8       8     n_points, u64 LE
//! 16      8     period L, f64 LE
//! 24      8     time tag, f64 LE
//! 32      8     alpha, f64 LE
//! 40      8     beta, f64 LE
//! 48      16n   n_points (re, im) f64 LE pairs
//! ```
//!
//! Coefficients are the Fourier-series coefficients in FFT storage order
//! (slot m holds mode m for m < n/2, mode m - n otherwise).

use kawahara::spectral::{EquationParams, SpectralField};
use kawahara::{Field, Grid, Params};
use num_complex::Complex;
use std::io::{self, Read, Write};
use std::path::Path;

pub const MAGIC: [u8; 4] = *b"GKAW";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 48;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("bad magic {0:?}, expected \"GKAW\"")]
    BadMagic([u8; 4]),
    #[error("unsupported version {found}, expected {VERSION}")]
    VersionMismatch { found: u32 },
    #[error("truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("{extra} unexpected bytes after the payload")]
    TrailingData { extra: usize },
    #[error("invalid header: {0}")]
    InvalidHeader(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub field: Field,
    pub params: Params,
}

pub fn encode(field: &Field, params: &Params) -> Vec<u8> {
    let grid = field.grid();
    let mut buf = Vec::with_capacity(HEADER_LEN + 16 * grid.n_points());
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(grid.n_points() as u64).to_le_bytes());
    for v in [grid.period(), field.time(), params.alpha(), params.beta()] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for c in field.coeffs() {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    buf
}

fn f64_at(bytes: &[u8], offset: usize) -> f64 {
    f64::from_le_bytes(bytes[offset..offset + 8].try_into().expect("8-byte slice"))
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
    if bytes.len() < 4 {
        return Err(CheckpointError::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("4-byte slice");
    if magic != MAGIC {
        return Err(CheckpointError::BadMagic(magic));
    }
    if bytes.len() < HEADER_LEN {
        return Err(CheckpointError::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4-byte slice"));
    if version != VERSION {
        return Err(CheckpointError::VersionMismatch { found: version });
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().expect("8-byte slice"));
    let n = usize::try_from(n)
        .map_err(|_| CheckpointError::InvalidHeader(format!("n_points {n} too large")))?;
    let expected = n
        .checked_mul(16)
        .and_then(|p| p.checked_add(HEADER_LEN))
        .ok_or_else(|| CheckpointError::InvalidHeader(format!("n_points {n} too large")))?;
    if bytes.len() < expected {
        return Err(CheckpointError::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(CheckpointError::TrailingData {
            extra: bytes.len() - expected,
        });
    }
    let (period, time, alpha, beta) = (
        f64_at(bytes, 16),
        f64_at(bytes, 24),
        f64_at(bytes, 32),
        f64_at(bytes, 40),
    );
    let grid = Grid::new(n, period).map_err(|e| CheckpointError::InvalidHeader(e.to_string()))?;
    let params = EquationParams::new(alpha, beta)
        .map_err(|e| CheckpointError::InvalidHeader(e.to_string()))?;
    let coeffs = (0..n)
        .map(|m| {
            let at = HEADER_LEN + 16 * m;
            Complex::new(f64_at(bytes, at), f64_at(bytes, at + 8))
        })
        .collect();
    let field = SpectralField::new(grid, coeffs, time)
        .map_err(|e| CheckpointError::InvalidHeader(e.to_string()))?;
    Ok(Checkpoint { field, params })
}

pub fn save(path: &Path, field: &Field, params: &Params) -> Result<(), CheckpointError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode(field, params))?;
    f.sync_all()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}
