//! Latent factor matrices and their on-disk format.
//!
//! File layout (all little endian): magic `LTRC`, version `u32`, then
//! `u64` playlist rows, `u64` track rows, `u64` factor count, then the
//! playlist factors and the track factors as row-major `f64` payloads.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"LTRC";
pub const FORMAT_VERSION: u32 = 1;

/// Row-major dense matrix of latent factors, one row per playlist or track.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FactorMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        FactorMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidConfig(format!(
                "factor payload has {} values, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(FactorMatrix { rows, cols, data })
    }

    pub fn gaussian<R: Rng>(rows: usize, cols: usize, std_dev: f64, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, std_dev).expect("finite positive std dev");
        let data = (0..rows * cols).map(|_| normal.sample(rng)).collect();
        FactorMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn squared_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

/// Playlist and track factors sharing one latent space.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    pub playlist_factors: FactorMatrix,
    pub track_factors: FactorMatrix,
}

impl FactorModel {
    pub fn factors(&self) -> usize {
        self.track_factors.cols()
    }

    /// Predicted preference of a playlist factor for track `t`.
    pub fn predict(&self, playlist_factor: &[f64], t: usize) -> f64 {
        crate::linalg::dot(playlist_factor, self.track_factors.row(t))
    }

    pub fn is_finite(&self) -> bool {
        self.playlist_factors.is_finite() && self.track_factors.is_finite()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        for dim in [
            self.playlist_factors.rows(),
            self.track_factors.rows(),
            self.factors(),
        ] {
            w.write_all(&(dim as u64).to_le_bytes())?;
        }
        for v in self
            .playlist_factors
            .as_slice()
            .iter()
            .chain(self.track_factors.as_slice())
        {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::ModelFormat("bad magic bytes".into()));
        }
        let mut word = [0u8; 4];
        r.read_exact(&mut word)?;
        let version = u32::from_le_bytes(word);
        if version != FORMAT_VERSION {
            return Err(Error::ModelFormat(format!("unsupported version {version}")));
        }
        let mut dims = [0usize; 3];
        for d in dims.iter_mut() {
            let mut buf = [0u8; 8];
            r.read_exact(&mut buf)?;
            *d = usize::try_from(u64::from_le_bytes(buf))
                .map_err(|_| Error::ModelFormat("dimension overflow".into()))?;
        }
        let [m, n, f] = dims;
        let mut read_block = |len: usize| -> Result<Vec<f64>> {
            let mut out = Vec::with_capacity(len);
            let mut buf = [0u8; 8];
            for _ in 0..len {
                r.read_exact(&mut buf)?;
                out.push(f64::from_le_bytes(buf));
            }
            Ok(out)
        };
        let playlist = read_block(m * f)?;
        let track = read_block(n * f)?;
        Ok(FactorModel {
            playlist_factors: FactorMatrix::from_vec(m, f, playlist)?,
            track_factors: FactorMatrix::from_vec(n, f, track)?,
        })
    }
}
