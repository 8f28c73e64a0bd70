//! On-disk layout of a fit: the `draws/` directory and `model.json`.
//!
//! ```text
//! draws/diagnostics.csv   one row per retained draw
//! draws/cate.csv          keep × n, or cate.bin in the compact format
//! draws/atoms.csv         draw, component, sigma_sq, beta_0 .. beta_{p-1}
//! draws/weights.csv       draw, stick, b_0 .. b_{q-1}
//! draws/model.json        dimensions, feature transform, default profile
//! ```
//!
//! `cate.bin` is the 16-byte magic `CLSBPDRAWSv1\0\0\0\0` followed by the
//! matrix as little-endian `f64`, row-major; its shape lives in `model.json`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::SamplerConfig;
use crate::error::{Error, Result};
use crate::features::FeatureSpec;
use crate::linalg::Matrix;
use crate::lsbp::{AtomParams, DrawDiagnostics, PosteriorDraws, WeightParams};

pub const CATE_MAGIC: &[u8; 16] = b"CLSBPDRAWSv1\0\0\0\0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CateFormat {
    Csv,
    Binary,
}

/// Everything needed to reinterpret persisted draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub n: usize,
    pub keep: usize,
    pub sticks: usize,
    pub p: usize,
    pub p_beta: usize,
    pub q: usize,
    pub spec: FeatureSpec,
    pub x_names: Vec<String>,
    /// Covariate means of the training data, the default estimand profile.
    pub x_means: Vec<f64>,
    pub pi_hat_mean: Option<f64>,
    pub cate_format: CateFormat,
    pub config: SamplerConfig,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    if !path.exists() {
        return Err(Error::DrawsNotFound(path.to_path_buf()));
    }
    Ok(BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?))
}

fn parse_f64(field: &str, what: &str) -> Result<f64> {
    field
        .parse()
        .map_err(|_| Error::Parse(format!("{what}: cannot parse {field:?} as a number")))
}

pub fn write_cate_binary<W: Write>(m: &Matrix, mut w: W) -> std::io::Result<()> {
    w.write_all(CATE_MAGIC)?;
    for v in m.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()
}

pub fn read_cate_binary<R: Read>(mut r: R, rows: usize, cols: usize) -> Result<Matrix> {
    let mut magic = [0u8; 16];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Parse("cate.bin is shorter than its header".into()))?;
    if &magic != CATE_MAGIC {
        return Err(Error::Parse("cate.bin has an unrecognized header".into()));
    }
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| Error::io("cate.bin", e))?;
    if bytes.len() != rows * cols * 8 {
        return Err(Error::Parse(format!(
            "cate.bin holds {} bytes of data, expected {}",
            bytes.len(),
            rows * cols * 8
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Matrix::from_row_major(rows, cols, data)
}

fn write_matrix_csv<W: Write>(m: &Matrix, prefix: &str, w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record((1..=m.ncols()).map(|j| format!("{prefix}{j}")))?;
    for row in m.rows_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

fn read_matrix_csv<R: Read>(r: R, cols: usize) -> Result<Matrix> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut data = Vec::new();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != cols {
            return Err(Error::Parse(format!("cate.csv row has {} fields, expected {cols}", rec.len())));
        }
        for f in rec.iter() {
            data.push(parse_f64(f, "cate.csv")?);
        }
        rows += 1;
    }
    Matrix::from_row_major(rows, cols, data)
}

/// Writes `draws/` under `dir` and returns its path.
pub fn save_draws(dir: &Path, draws: &PosteriorDraws, info: &ModelInfo) -> Result<PathBuf> {
    let out = dir.join("draws");
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;

    let mut w = csv::Writer::from_writer(create(&out.join("diagnostics.csv"))?);
    w.write_record(["iteration", "log_likelihood", "mate", "xi_sq", "zeta_sq", "occupied"])?;
    for d in &draws.diagnostics {
        w.write_record([
            d.iteration.to_string(),
            d.log_likelihood.to_string(),
            d.mate.to_string(),
            d.xi_sq.to_string(),
            d.zeta_sq.to_string(),
            d.occupied.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(out.join("diagnostics.csv"), e))?;

    match info.cate_format {
        CateFormat::Csv => write_matrix_csv(&draws.cate, "tau_", create(&out.join("cate.csv"))?)?,
        CateFormat::Binary => {
            let path = out.join("cate.bin");
            write_cate_binary(&draws.cate, create(&path)?).map_err(|e| Error::io(&path, e))?
        }
    }

    let p = info.p;
    let mut w = csv::Writer::from_writer(create(&out.join("atoms.csv"))?);
    let mut header = vec!["draw".to_string(), "component".into(), "sigma_sq".into()];
    header.extend((0..p).map(|j| format!("beta_{j}")));
    w.write_record(&header)?;
    for (s, snap) in draws.states.iter().enumerate() {
        for h in 0..snap.atoms.components() {
            let mut rec = vec![s.to_string(), h.to_string(), snap.atoms.sigma_sq[h].to_string()];
            rec.extend(snap.atoms.beta.row(h).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io(out.join("atoms.csv"), e))?;

    let mut w = csv::Writer::from_writer(create(&out.join("weights.csv"))?);
    let mut header = vec!["draw".to_string(), "stick".into()];
    header.extend((0..info.q).map(|j| format!("b_{j}")));
    w.write_record(&header)?;
    for (s, snap) in draws.states.iter().enumerate() {
        for h in 0..snap.weights.sticks() {
            let mut rec = vec![s.to_string(), h.to_string()];
            rec.extend(snap.weights.b.row(h).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io(out.join("weights.csv"), e))?;

    let path = out.join("model.json");
    serde_json::to_writer_pretty(create(&path)?, info)?;
    Ok(out)
}

/// Draws read back from disk.
#[derive(Debug, Clone)]
pub struct StoredDraws {
    pub info: ModelInfo,
    pub params: Vec<(AtomParams, WeightParams)>,
    pub cate: Matrix,
    pub diagnostics: Vec<DrawDiagnostics>,
}

/// Loads a `draws/` directory written by [`save_draws`].
pub fn load_draws(draws_dir: &Path) -> Result<StoredDraws> {
    if !draws_dir.is_dir() {
        return Err(Error::DrawsNotFound(draws_dir.to_path_buf()));
    }
    let info: ModelInfo = serde_json::from_reader(open(&draws_dir.join("model.json"))?)?;
    let comps = info.sticks + 1;

    let mut betas = vec![Matrix::zeros(comps, info.p); info.keep];
    let mut sigmas = vec![vec![0.0; comps]; info.keep];
    let mut rdr = csv::Reader::from_reader(open(&draws_dir.join("atoms.csv"))?);
    for rec in rdr.records() {
        let rec = rec?;
        let s: usize = parse_f64(&rec[0], "atoms.csv")? as usize;
        let h: usize = parse_f64(&rec[1], "atoms.csv")? as usize;
        if s >= info.keep || h >= comps || rec.len() != 3 + info.p {
            return Err(Error::Parse("atoms.csv does not match model.json".into()));
        }
        sigmas[s][h] = parse_f64(&rec[2], "atoms.csv")?;
        for j in 0..info.p {
            betas[s][(h, j)] = parse_f64(&rec[3 + j], "atoms.csv")?;
        }
    }

    let mut bs = vec![Matrix::zeros(info.sticks, info.q); info.keep];
    let mut rdr = csv::Reader::from_reader(open(&draws_dir.join("weights.csv"))?);
    for rec in rdr.records() {
        let rec = rec?;
        let s: usize = parse_f64(&rec[0], "weights.csv")? as usize;
        let h: usize = parse_f64(&rec[1], "weights.csv")? as usize;
        if s >= info.keep || h >= info.sticks || rec.len() != 2 + info.q {
            return Err(Error::Parse("weights.csv does not match model.json".into()));
        }
        for j in 0..info.q {
            bs[s][(h, j)] = parse_f64(&rec[2 + j], "weights.csv")?;
        }
    }
    let params = betas
        .into_iter()
        .zip(sigmas)
        .zip(bs)
        .map(|((beta, sigma_sq), b)| (AtomParams { beta, sigma_sq }, WeightParams { b }))
        .collect();

    let cate = match info.cate_format {
        CateFormat::Csv => read_matrix_csv(open(&draws_dir.join("cate.csv"))?, info.n)?,
        CateFormat::Binary => read_cate_binary(open(&draws_dir.join("cate.bin"))?, info.keep, info.n)?,
    };

    let mut diagnostics = Vec::new();
    let mut rdr = csv::Reader::from_reader(open(&draws_dir.join("diagnostics.csv"))?);
    for rec in rdr.records() {
        let rec = rec?;
        let f = |k: usize| parse_f64(&rec[k], "diagnostics.csv");
        diagnostics.push(DrawDiagnostics {
            iteration: f(0)? as usize,
            log_likelihood: f(1)?,
            mate: f(2)?,
            xi_sq: f(3)?,
            zeta_sq: f(4)?,
            occupied: f(5)? as usize,
        });
    }
    Ok(StoredDraws {
        info,
        params,
        cate,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        let m = Matrix::from_rows(&[[1.5, -2.0, 0.1], [3.0, 1e-300, f64::MAX]]).unwrap();
        let mut buf = Vec::new();
        write_cate_binary(&m, &mut buf).unwrap();
        assert_eq!(&buf[..16], b"CLSBPDRAWSv1\0\0\0\0");
        assert_eq!(buf.len(), 16 + 6 * 8);
        assert_eq!(read_cate_binary(&buf[..], 2, 3).unwrap(), m);
        assert!(read_cate_binary(&buf[..], 3, 3).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_cate_binary(&bad[..], 2, 3).is_err());
    }
}
