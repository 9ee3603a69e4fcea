use std::path::Path;

use super::logistic;
use crate::config::SimilarityConfig;
use crate::error::{Error, Result};

/// `ξ = ξ_max · logistic(a · (sinr_dB - (g0 - g1·u)))`: every extra semantic
/// unit per word lowers the SINR needed for a given similarity by `g1` dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParametricSimilarity {
    pub xi_max: f64,
    pub slope: f64,
    pub g0_db: f64,
    pub g1_db: f64,
}

impl Default for ParametricSimilarity {
    fn default() -> Self {
        ParametricSimilarity {
            xi_max: 0.995,
            slope: 0.3,
            g0_db: 15.0,
            g1_db: 2.5,
        }
    }
}

impl ParametricSimilarity {
    pub fn eval(&self, u: f64, sinr_db: f64) -> f64 {
        let midpoint = self.g0_db - self.g1_db * u;
        (self.xi_max * logistic(self.slope * (sinr_db - midpoint))).clamp(0.0, 1.0)
    }
}

/// Rectilinear grid over `(u, sinr_db)` with bilinear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityTable {
    u: Vec<f64>,
    sinr_db: Vec<f64>,
    /// Row-major: `xi[i * sinr_db.len() + j]` is at `(u[i], sinr_db[j])`.
    xi: Vec<f64>,
}

impl SimilarityTable {
    pub fn new(u: Vec<f64>, sinr_db: Vec<f64>, xi: Vec<f64>) -> Result<Self> {
        if u.is_empty() || sinr_db.is_empty() {
            return Err(Error::invalid("similarity.table", "grid axes must be non-empty"));
        }
        if xi.len() != u.len() * sinr_db.len() {
            return Err(Error::invalid(
                "similarity.table",
                format!(
                    "expected {} grid values, got {}",
                    u.len() * sinr_db.len(),
                    xi.len()
                ),
            ));
        }
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        if !increasing(&u) || !increasing(&sinr_db) {
            return Err(Error::invalid(
                "similarity.table",
                "u and sinr_db axes must be strictly increasing",
            ));
        }
        if xi.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::invalid("similarity.table", "xi values must lie in [0, 1]"));
        }
        let ns = sinr_db.len();
        for i in 0..u.len() {
            for j in 0..ns {
                let here = xi[i * ns + j];
                if j + 1 < ns && xi[i * ns + j + 1] < here {
                    return Err(Error::invalid(
                        "similarity.table",
                        format!("xi decreases in sinr at u={}, sinr={}", u[i], sinr_db[j]),
                    ));
                }
                if i + 1 < u.len() && xi[(i + 1) * ns + j] < here {
                    return Err(Error::invalid(
                        "similarity.table",
                        format!("xi decreases in u at u={}, sinr={}", u[i], sinr_db[j]),
                    ));
                }
            }
        }
        Ok(SimilarityTable { u, sinr_db, xi })
    }

    /// Reads a CSV with header `u,sinr_db,xi`, rows ordered by `u` then
    /// `sinr_db`.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["u", "sinr_db", "xi"] {
            return Err(Error::invalid(
                "similarity.table",
                "header must be `u,sinr_db,xi`",
            ));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec[i].parse::<f64>().map_err(|e| {
                    Error::invalid("similarity.table", format!("bad number `{}`: {e}", &rec[i]))
                })
            };
            rows.push((parse(0)?, parse(1)?, parse(2)?));
        }
        let mut u = Vec::new();
        let mut sinr = Vec::new();
        for &(ui, si, _) in &rows {
            if u.last() != Some(&ui) {
                u.push(ui);
            }
            if u.len() == 1 {
                sinr.push(si);
            }
        }
        let ns = sinr.len();
        for (k, &(ui, si, _)) in rows.iter().enumerate() {
            if ns == 0 || u.get(k / ns) != Some(&ui) || sinr[k % ns] != si {
                return Err(Error::invalid(
                    "similarity.table",
                    format!("row {} breaks the row-major grid layout", k + 2),
                ));
            }
        }
        let xi = rows.into_iter().map(|r| r.2).collect();
        Self::new(u, sinr, xi)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file)
    }

    /// Samples a parametric model on a grid; handy for exporting fits.
    pub fn sample(model: &ParametricSimilarity, u: Vec<f64>, sinr_db: Vec<f64>) -> Result<Self> {
        let xi = u
            .iter()
            .flat_map(|&ui| sinr_db.iter().map(move |&s| model.eval(ui, s)))
            .collect();
        Self::new(u, sinr_db, xi)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["u", "sinr_db", "xi"])?;
        let ns = self.sinr_db.len();
        for (i, u) in self.u.iter().enumerate() {
            for (j, s) in self.sinr_db.iter().enumerate() {
                w.write_record([u.to_string(), s.to_string(), self.xi[i * ns + j].to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io("<similarity table>", e))?;
        Ok(())
    }

    pub fn eval(&self, u: f64, sinr_db: f64) -> SimilarityValue {
        let (iu, tu, cu) = locate(&self.u, u);
        let (is, ts, cs) = locate(&self.sinr_db, sinr_db);
        let ns = self.sinr_db.len();
        let at = |i: usize, j: usize| self.xi[i * ns + j];
        let iu1 = (iu + 1).min(self.u.len() - 1);
        let is1 = (is + 1).min(ns - 1);
        let low = at(iu, is) * (1.0 - ts) + at(iu, is1) * ts;
        let high = at(iu1, is) * (1.0 - ts) + at(iu1, is1) * ts;
        SimilarityValue {
            xi: (low * (1.0 - tu) + high * tu).clamp(0.0, 1.0),
            clamped: cu || cs,
        }
    }
}

/// Cell index, fractional position inside it, and whether `x` was clamped.
fn locate(axis: &[f64], x: f64) -> (usize, f64, bool) {
    let last = axis.len() - 1;
    if x.is_nan() || x <= axis[0] {
        return (0, 0.0, x.is_nan() || x < axis[0]);
    }
    if x >= axis[last] {
        return (last, 0.0, x > axis[last]);
    }
    let i = axis.partition_point(|&a| a <= x) - 1;
    (i, (x - axis[i]) / (axis[i + 1] - axis[i]), false)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityValue {
    pub xi: f64,
    /// The query fell outside the table grid and was clamped onto it.
    pub clamped: bool,
}

/// Maps `(semantic units per word, SINR in dB)` to a similarity in `[0, 1]`,
/// non-decreasing in both arguments.
#[derive(Debug, Clone, PartialEq)]
pub enum SimilarityModel {
    Parametric(ParametricSimilarity),
    Table(SimilarityTable),
}

impl Default for SimilarityModel {
    fn default() -> Self {
        SimilarityModel::Parametric(ParametricSimilarity::default())
    }
}

impl SimilarityModel {
    pub fn from_config(cfg: &SimilarityConfig) -> Result<Self> {
        Ok(match cfg {
            SimilarityConfig::Parametric {
                xi_max,
                slope,
                g0_db,
                g1_db,
            } => SimilarityModel::Parametric(ParametricSimilarity {
                xi_max: *xi_max,
                slope: *slope,
                g0_db: *g0_db,
                g1_db: *g1_db,
            }),
            SimilarityConfig::Table { path } => {
                SimilarityModel::Table(SimilarityTable::from_csv_path(path)?)
            }
        })
    }

    pub fn evaluate(&self, u: f64, sinr_db: f64) -> SimilarityValue {
        match self {
            SimilarityModel::Parametric(p) => SimilarityValue {
                xi: p.eval(u, sinr_db),
                clamped: false,
            },
            SimilarityModel::Table(t) => t.eval(u, sinr_db),
        }
    }

    pub fn similarity(&self, u: f64, sinr_db: f64) -> f64 {
        self.evaluate(u, sinr_db).xi
    }
}
