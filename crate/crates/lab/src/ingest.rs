//! `timestamp,price` CSV series and their minute-bucket join.
//!
//! Timestamps are integer Unix seconds and must be strictly increasing;
//! each row falls in minute bucket `timestamp div 60` and a bucket may hold
//! one row only. Joining two series keeps the buckets present in both.

use std::fmt;
use std::io::Read;
use std::path::Path;

use rangelp_core::{PairedSeries, Price, MINUTES_PER_YEAR};
use serde::Deserialize;
use thiserror::Error;

/// Spacing of consecutive minute buckets, in years.
pub const MINUTE: f64 = 1.0 / MINUTES_PER_YEAR;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{source_name}: {error}")]
    Io {
        source_name: String,
        #[source]
        error: std::io::Error,
    },
    #[error("{source_name}: expected header `timestamp,price`, found `{found}`")]
    Header { source_name: String, found: String },
    #[error("{source_name}: line {line}: {message}")]
    Malformed {
        source_name: String,
        line: u64,
        message: String,
    },
    #[error("{source_name}: line {line}: timestamp {timestamp} does not increase on {previous}")]
    NonMonotone {
        source_name: String,
        line: u64,
        timestamp: i64,
        previous: i64,
    },
    #[error("{source_name}: line {line}: minute {minute} already has a price")]
    DuplicateMinute {
        source_name: String,
        line: u64,
        minute: i64,
    },
    #[error("{source_name}: fewer than 3 rows")]
    TooShort { source_name: String },
    #[error("{p} and {z} have no minute in common")]
    EmptyJoin { p: String, z: String },
    #[error("{what}: minutes {from} and {to} are not consecutive; the series must be gap-free")]
    Gap { what: String, from: i64, to: i64 },
    #[error(transparent)]
    Core(#[from] rangelp_core::Error),
}

/// One price per minute bucket, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub name: String,
    pub minutes: Vec<i64>,
    pub prices: Vec<Price>,
}

#[derive(Deserialize)]
struct Row {
    timestamp: i64,
    price: f64,
}

impl PriceSeries {
    pub fn read(path: &Path) -> Result<Self, IngestError> {
        let name = path.display().to_string();
        let file = std::fs::File::open(path).map_err(|error| IngestError::Io {
            source_name: name.clone(),
            error,
        })?;
        Self::parse(file, name)
    }

    pub fn parse<R: Read>(reader: R, name: impl Into<String>) -> Result<Self, IngestError> {
        let name = name.into();
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers().map_err(|e| malformed(&name, 1, &e))?.clone();
        if header.iter().collect::<Vec<_>>() != ["timestamp", "price"] {
            return Err(IngestError::Header {
                source_name: name,
                found: header.iter().collect::<Vec<_>>().join(","),
            });
        }

        let mut minutes = Vec::new();
        let mut prices = Vec::new();
        let mut previous: Option<i64> = None;
        for record in rdr.records() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                malformed(&name, line, &e)
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let row: Row = record
                .deserialize(Some(&header))
                .map_err(|e| malformed(&name, line, &e))?;
            let price = Price::new(row.price).map_err(|_| IngestError::Malformed {
                source_name: name.clone(),
                line,
                message: format!("price {} must be finite and > 0", row.price),
            })?;
            if let Some(prev) = previous {
                if row.timestamp <= prev {
                    return Err(IngestError::NonMonotone {
                        source_name: name,
                        line,
                        timestamp: row.timestamp,
                        previous: prev,
                    });
                }
            }
            previous = Some(row.timestamp);
            let minute = row.timestamp.div_euclid(60);
            if minutes.last() == Some(&minute) {
                return Err(IngestError::DuplicateMinute {
                    source_name: name,
                    line,
                    minute,
                });
            }
            minutes.push(minute);
            prices.push(price);
        }
        Ok(PriceSeries { name, minutes, prices })
    }

    pub fn len(&self) -> usize {
        self.minutes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.minutes.is_empty()
    }

    /// Fails on the first missing minute.
    pub fn check_consecutive(&self) -> Result<(), IngestError> {
        check_consecutive(&self.minutes, &self.name)
    }
}

fn malformed(name: &str, line: u64, e: &dyn fmt::Display) -> IngestError {
    IngestError::Malformed {
        source_name: name.to_owned(),
        line,
        message: e.to_string(),
    }
}

fn check_consecutive(minutes: &[i64], what: &str) -> Result<(), IngestError> {
    match minutes.windows(2).find(|w| w[1] != w[0] + 1) {
        Some(w) => Err(IngestError::Gap {
            what: what.to_owned(),
            from: w[0],
            to: w[1],
        }),
        None => Ok(()),
    }
}

/// Inner join of two series on minute buckets.
#[derive(Debug, Clone, PartialEq)]
pub struct Joined {
    pub minutes: Vec<i64>,
    pub p: Vec<Price>,
    pub z: Vec<Price>,
    /// Rows of the P series without a Z counterpart.
    pub dropped_p: usize,
    pub dropped_z: usize,
}

impl Joined {
    pub fn len(&self) -> usize {
        self.minutes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.minutes.is_empty()
    }

    pub fn dropped(&self) -> usize {
        self.dropped_p + self.dropped_z
    }

    /// The joined rows as a one-minute paired series. Fails if the overlap has gaps.
    pub fn paired(&self) -> Result<PairedSeries, IngestError> {
        check_consecutive(&self.minutes, "joined series")?;
        Ok(PairedSeries::new(self.p.clone(), self.z.clone(), MINUTE)?)
    }
}

pub fn join(p: &PriceSeries, z: &PriceSeries) -> Result<Joined, IngestError> {
    let mut out = Joined {
        minutes: Vec::new(),
        p: Vec::new(),
        z: Vec::new(),
        dropped_p: 0,
        dropped_z: 0,
    };
    let (mut i, mut j) = (0, 0);
    while i < p.len() && j < z.len() {
        match p.minutes[i].cmp(&z.minutes[j]) {
            std::cmp::Ordering::Less => {
                out.dropped_p += 1;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.dropped_z += 1;
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.minutes.push(p.minutes[i]);
                out.p.push(p.prices[i]);
                out.z.push(z.prices[j]);
                i += 1;
                j += 1;
            }
        }
    }
    out.dropped_p += p.len() - i;
    out.dropped_z += z.len() - j;
    if out.is_empty() {
        return Err(IngestError::EmptyJoin {
            p: p.name.clone(),
            z: z.name.clone(),
        });
    }
    Ok(out)
}

/// Read both files (concurrently) and join them.
pub fn load_paired_csv(path_p: &Path, path_z: &Path) -> Result<Joined, IngestError> {
    let (p, z) = read_pair(path_p, path_z);
    join(&p?, &z?)
}

pub(crate) fn read_pair(
    path_p: &Path,
    path_z: &Path,
) -> (Result<PriceSeries, IngestError>, Result<PriceSeries, IngestError>) {
    rayon::join(|| PriceSeries::read(path_p), || PriceSeries::read(path_z))
}

/// How (θ, γ) and (μ, σ) share the input windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMode {
    /// All four parameters from the joined overlap.
    Joined,
    /// (μ, σ) from the whole P file, (θ, γ) from the joined overlap.
    Independent,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Calibration {
    pub mu_hat: f64,
    pub sigma_hat: f64,
    pub theta_hat: Option<f64>,
    pub gamma_hat: Option<f64>,
    pub rows_p: usize,
    pub rows_z: Option<usize>,
    pub rows_joined: Option<usize>,
    pub dropped_p: usize,
    pub dropped_z: usize,
}

/// Estimate the GBM parameters from `p` and, when `z` is given, the
/// mean-reversion parameters from the join of the two.
pub fn calibrate(p: &PriceSeries, z: Option<&PriceSeries>, mode: EstimateMode) -> Result<Calibration, IngestError> {
    use rangelp_core::estimate::{estimate_gbm, estimate_mr};

    let gbm_from_p = || -> Result<(f64, f64), IngestError> {
        if p.len() < 3 {
            return Err(IngestError::TooShort {
                source_name: p.name.clone(),
            });
        }
        p.check_consecutive()?;
        Ok(estimate_gbm(&p.prices, MINUTE)?)
    };
    let Some(z) = z else {
        let (mu_hat, sigma_hat) = gbm_from_p()?;
        return Ok(Calibration {
            mu_hat,
            sigma_hat,
            theta_hat: None,
            gamma_hat: None,
            rows_p: p.len(),
            rows_z: None,
            rows_joined: None,
            dropped_p: 0,
            dropped_z: 0,
        });
    };

    let joined = join(p, z)?;
    let series = joined.paired()?;
    let (mu_hat, sigma_hat) = match mode {
        EstimateMode::Joined => estimate_gbm(series.p(), MINUTE)?,
        EstimateMode::Independent => gbm_from_p()?,
    };
    let (theta, gamma) = estimate_mr(&series)?;
    Ok(Calibration {
        mu_hat,
        sigma_hat,
        theta_hat: Some(theta),
        gamma_hat: Some(gamma),
        rows_p: p.len(),
        rows_z: Some(z.len()),
        rows_joined: Some(joined.len()),
        dropped_p: joined.dropped_p,
        dropped_z: joined.dropped_z,
    })
}

/// Write a `timestamp,price` file, one row per minute from `start_minute`.
pub fn write_series(path: &Path, start_minute: i64, prices: &[Price]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["timestamp", "price"])?;
    for (i, p) in prices.iter().enumerate() {
        let ts = (start_minute + i as i64) * 60;
        w.write_record([ts.to_string(), p.get().to_string()])?;
    }
    w.flush()
}

