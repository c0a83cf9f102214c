//! External baseline curves: `d_km,value` CSV, linearly interpolated.

use std::io::Read;
use std::path::Path;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    distance_km: Vec<f64>,
    value: Vec<f64>,
}

impl Baseline {
    pub fn new(distance_km: Vec<f64>, value: Vec<f64>) -> CliResult<Self> {
        if distance_km.is_empty() {
            return Err(CliError::usage("baseline has no rows"));
        }
        if distance_km.len() != value.len() {
            return Err(CliError::usage("baseline columns differ in length"));
        }
        if distance_km.iter().chain(&value).any(|x| !x.is_finite()) {
            return Err(CliError::usage("baseline contains non-finite values"));
        }
        if let Some(w) = distance_km.windows(2).find(|w| w[1] <= w[0]) {
            return Err(CliError::usage(format!(
                "baseline d_km not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        Ok(Self { distance_km, value })
    }

    pub fn from_reader(r: impl Read) -> CliResult<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let headers = rdr
            .headers()
            .map_err(|e| CliError::usage(format!("baseline header: {e}")))?
            .clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| CliError::usage(format!("baseline lacks column '{name}'")))
        };
        let (di, vi) = (col("d_km")?, col("value")?);
        let (mut d, mut v) = (Vec::new(), Vec::new());
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| CliError::usage(format!("baseline row {}: {e}", line + 1)))?;
            let num = |i: usize| -> CliResult<f64> {
                let field = rec.get(i).unwrap_or("");
                field
                    .parse()
                    .map_err(|_| CliError::usage(format!("baseline row {}: bad number '{field}'", line + 1)))
            };
            d.push(num(di)?);
            v.push(num(vi)?);
        }
        Self::new(d, v)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let f = std::fs::File::open(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        Self::from_reader(f).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    /// Linear interpolation; `None` outside the covered distance range.
    pub fn at(&self, d: f64) -> Option<f64> {
        let xs = &self.distance_km;
        if d < xs[0] || d > xs[xs.len() - 1] {
            return None;
        }
        let hi = xs.partition_point(|x| *x < d);
        if xs[hi] == d {
            return Some(self.value[hi]);
        }
        let lo = hi - 1;
        let t = (d - xs[lo]) / (xs[hi] - xs[lo]);
        Some(self.value[lo] + t * (self.value[hi] - self.value[lo]))
    }
}
