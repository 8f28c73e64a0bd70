//! Observed data `(y, z, x, π̂)` and its CSV representation.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Outcomes, binary treatments, covariates and optional propensity scores
/// for `n` subjects.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    pub y: Vec<f64>,
    /// Treatment indicator; must be exactly 0.0 or 1.0.
    pub z: Vec<f64>,
    /// `n × d` covariates.
    pub x: Matrix,
    pub pi_hat: Option<Vec<f64>>,
    /// Covariate column names, `x1..xd` unless loaded from a file that says otherwise.
    pub x_names: Vec<String>,
}

impl ObservationSet {
    /// Builds and validates an observation set with default column names.
    pub fn new(y: Vec<f64>, z: Vec<f64>, x: Matrix, pi_hat: Option<Vec<f64>>) -> Result<Self> {
        let x_names = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
        let obs = Self {
            y,
            z,
            x,
            pi_hat,
            x_names,
        };
        validate(&obs)?;
        Ok(obs)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn is_treated(&self, i: usize) -> bool {
        self.z[i] == 1.0
    }

    /// Copy with the subjects reordered so that row `k` is old row `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let rows: Vec<&[f64]> = order.iter().map(|&i| self.x.row(i)).collect();
        Self {
            y: order.iter().map(|&i| self.y[i]).collect(),
            z: order.iter().map(|&i| self.z[i]).collect(),
            x: Matrix::from_rows(&rows).expect("rows share a width"),
            pi_hat: self
                .pi_hat
                .as_ref()
                .map(|p| order.iter().map(|&i| p[i]).collect()),
            x_names: self.x_names.clone(),
        }
    }

    /// Reads `y`, `z`, covariate columns (`x*`) and optional `pihat` from CSV.
    /// Other columns are ignored.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let find = |name: &str| headers.iter().position(|h| h == name);
        let y_col = find("y").ok_or_else(|| Error::Parse("missing `y` column".into()))?;
        let z_col = find("z").ok_or_else(|| Error::Parse("missing `z` column".into()))?;
        let pi_col = find("pihat");
        let x_cols: Vec<(usize, String)> = headers
            .iter()
            .enumerate()
            .filter(|(_, h)| h.starts_with('x'))
            .map(|(j, h)| (j, h.to_string()))
            .collect();

        let mut y = Vec::new();
        let mut z = Vec::new();
        let mut pi = Vec::new();
        let mut xs = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            let field = |col: usize| -> Result<f64> {
                let raw = record.get(col).unwrap_or("");
                raw.parse::<f64>().map_err(|_| {
                    Error::Parse(format!(
                        "row {row}, column `{}`: cannot parse {raw:?} as a number",
                        &headers[col]
                    ))
                })
            };
            y.push(field(y_col)?);
            z.push(field(z_col)?);
            if let Some(c) = pi_col {
                pi.push(field(c)?);
            }
            for (c, _) in &x_cols {
                xs.push(field(*c)?);
            }
        }
        let n = y.len();
        let x = Matrix::from_row_major(n, x_cols.len(), xs)?;
        let obs = Self {
            y,
            z,
            x,
            pi_hat: pi_col.map(|_| pi),
            x_names: x_cols.into_iter().map(|(_, h)| h).collect(),
        };
        validate(&obs)?;
        Ok(obs)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }

    /// Writes the set in the same layout `from_csv_reader` accepts.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["y".to_string(), "z".to_string()];
        header.extend(self.x_names.iter().cloned());
        if self.pi_hat.is_some() {
            header.push("pihat".into());
        }
        w.write_record(&header)?;
        for i in 0..self.n() {
            let mut rec = vec![self.y[i].to_string(), self.z[i].to_string()];
            rec.extend(self.x.row(i).iter().map(|v| v.to_string()));
            if let Some(p) = &self.pi_hat {
                rec.push(p[i].to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Raw string values of one named column of a CSV file.
pub fn read_column(path: &Path, name: &str) -> Result<Vec<String>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(std::io::BufReader::new(file));
    let col = rdr
        .headers()?
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Parse(format!("missing `{name}` column")))?;
    rdr.records()
        .map(|r| Ok(r?.get(col).unwrap_or("").to_string()))
        .collect()
}

/// Checks every structural and value invariant of an observation set.
pub fn validate(obs: &ObservationSet) -> Result<()> {
    let n = obs.y.len();
    if n == 0 {
        return Err(Error::EmptyData { what: "no subjects".into() });
    }
    if obs.x.ncols() == 0 {
        return Err(Error::EmptyData { what: "no covariate columns".into() });
    }
    if obs.z.len() != n || obs.x.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "y has {n} rows, z has {}, x has {}",
            obs.z.len(),
            obs.x.nrows()
        )));
    }
    if obs.x_names.len() != obs.x.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{} covariate names for {} columns",
            obs.x_names.len(),
            obs.x.ncols()
        )));
    }
    for i in 0..n {
        if !obs.y[i].is_finite() {
            return Err(Error::NonFiniteValue { row: i, column: "y".into(), value: obs.y[i] });
        }
        let z = obs.z[i];
        if !z.is_finite() {
            return Err(Error::NonFiniteValue { row: i, column: "z".into(), value: z });
        }
        if z != 0.0 && z != 1.0 {
            return Err(Error::NonBinaryTreatment { row: i, value: z });
        }
        for (j, &v) in obs.x.row(i).iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    row: i,
                    column: obs.x_names[j].clone(),
                    value: v,
                });
            }
        }
    }
    if let Some(p) = &obs.pi_hat {
        if p.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "pihat has {} rows, expected {n}",
                p.len()
            )));
        }
        for (i, &v) in p.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { row: i, column: "pihat".into(), value: v });
            }
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::PropensityOutOfRange { row: i, value: v });
            }
        }
    }
    Ok(())
}
