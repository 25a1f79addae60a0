//! File formats. Complex numbers are `[re, im]` pairs.
//!
//! MPS file: `{"d": 4, "bond": 2, "matrices": [A⁰, A¹, …]}` where each `Aⁱ` is a
//! list of rows and each row a list of `[re, im]`.
//!
//! Channel file: `{"dim": D, "matrix": M}` with `M` the `D²×D²` superoperator
//! in the row-major vectorization `vec(AXB) = (A⊗Bᵀ) vec X`.

use crate::channel::{QuantumChannel, SpectralData};
use crate::error::{Error, Result};
use crate::linalg::*;
use crate::mps::MpsTensor;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub type Pair = [f64; 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpsFile {
    pub d: usize,
    pub bond: usize,
    pub matrices: Vec<Vec<Vec<Pair>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub dim: usize,
    pub matrix: Vec<Vec<Pair>>,
}

fn to_rows(m: &CMat) -> Vec<Vec<Pair>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

fn from_rows(rows: &[Vec<Pair>], r: usize, cols: usize, what: &str) -> Result<CMat> {
    if rows.len() != r || rows.iter().any(|row| row.len() != cols) {
        return Err(Error::Shape(format!("{what} must be {r}x{cols}")));
    }
    let m = CMat::from_fn(r, cols, |i, j| c(rows[i][j][0], rows[i][j][1]));
    if !is_finite(&m) {
        return Err(Error::NonFinite(what.into()));
    }
    Ok(m)
}

impl MpsFile {
    pub fn from_tensor(t: &MpsTensor) -> Self {
        MpsFile { d: t.d, bond: t.bond, matrices: t.mats.iter().map(to_rows).collect() }
    }

    pub fn to_tensor(&self) -> Result<MpsTensor> {
        if self.matrices.len() != self.d {
            return Err(Error::Shape(format!("{} matrices for d = {}", self.matrices.len(), self.d)));
        }
        let mats = self
            .matrices
            .iter()
            .enumerate()
            .map(|(i, m)| from_rows(m, self.bond, self.bond, &format!("matrix {i}")))
            .collect::<Result<Vec<_>>>()?;
        MpsTensor::new(mats)
    }
}

impl ChannelFile {
    pub fn from_channel(ch: &QuantumChannel) -> Self {
        ChannelFile { dim: ch.dim, matrix: to_rows(&ch.matrix) }
    }

    pub fn to_channel(&self) -> Result<QuantumChannel> {
        let n = self.dim * self.dim;
        QuantumChannel::from_matrix(self.dim, from_rows(&self.matrix, n, n, "channel matrix")?)
    }
}

pub fn parse_mps(text: &str) -> Result<MpsTensor> {
    serde_json::from_str::<MpsFile>(text)?.to_tensor()
}

pub fn read_mps(path: &Path) -> Result<MpsTensor> {
    parse_mps(&std::fs::read_to_string(path)?)
}

pub fn write_mps(path: &Path, t: &MpsTensor) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(&MpsFile::from_tensor(t))?)?;
    Ok(())
}

pub fn parse_channel(text: &str) -> Result<QuantumChannel> {
    serde_json::from_str::<ChannelFile>(text)?.to_channel()
}

pub fn read_channel(path: &Path) -> Result<QuantumChannel> {
    parse_channel(&std::fs::read_to_string(path)?)
}

pub fn write_channel(path: &Path, ch: &QuantumChannel) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(&ChannelFile::from_channel(ch))?)?;
    Ok(())
}

/// Column-headed table written as comma-separated text.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table { headers: headers.iter().map(|h| h.to_string()).collect(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.headers.len() {
            return Err(Error::Shape(format!("row has {} fields, table has {}", row.len(), self.headers.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(&self.headers).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        String::from_utf8(bytes).map_err(|e| Error::Invalid(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let headers = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|x| x.iter().map(String::from).collect()).map_err(csv_err))
            .collect::<Result<_>>()?;
        Ok(Table { headers, rows })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?)?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Shortest round-trip representation.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

/// One record per eigenvalue: modulus, phase and the channel's flags.
pub fn spectral_report(sd: &SpectralData) -> Table {
    let mut t = Table::new(&[
        "index",
        "modulus",
        "phase_rad",
        "re",
        "im",
        "leading_degenerate",
        "defective",
        "normal_unital",
    ]);
    for (i, z) in sd.eigenvalues.iter().enumerate() {
        t.rows.push(vec![
            i.to_string(),
            num(z.norm()),
            num(z.arg()),
            num(z.re),
            num(z.im),
            sd.leading_degenerate.to_string(),
            sd.defective.to_string(),
            sd.is_normal_unital().to_string(),
        ]);
    }
    t
}
