//! Price ingestion, gap repair, returns, evaluation splits and lookback windows.
//!
//! Dates are calendar labels only. No trading-calendar arithmetic is done;
//! ordering is the only property the engine relies on.

use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Fraction of missing prices above which ingestion warns.
pub const MISSING_WARN_FRACTION: f64 = 0.03;

/// ISO-8601 calendar date (`YYYY-MM-DD`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Date {
    year: i32,
    month: u8,
    day: u8,
}

impl Date {
    pub fn new(year: i32, month: u8, day: u8) -> Result<Self> {
        if !(1..=12).contains(&month) || !(1..=31).contains(&day) {
            return Err(Error::Domain(format!(
                "invalid calendar date {year:04}-{month:02}-{day:02}"
            )));
        }
        Ok(Date { year, month, day })
    }

    /// Synthetic date label for day `index` counted from 2000-01-01,
    /// assuming 28-day months so every label is a valid calendar date.
    /// Used for generated series that have no real calendar.
    pub fn synthetic(index: usize) -> Date {
        let day = (index % 28) as u8 + 1;
        let month = ((index / 28) % 12) as u8 + 1;
        let year = 2000 + (index / (28 * 12)) as i32;
        Date { year, month, day }
    }
}

impl fmt::Display for Date {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}-{:02}", self.year, self.month, self.day)
    }
}

impl FromStr for Date {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("invalid ISO-8601 date '{s}'"));
        let mut parts = s.trim().splitn(3, '-');
        let (y, m, d) = match (parts.next(), parts.next(), parts.next()) {
            (Some(y), Some(m), Some(d)) if y.len() == 4 && m.len() == 2 && d.len() == 2 => {
                (y, m, d)
            }
            _ => return Err(bad()),
        };
        let year = y.parse().map_err(|_| bad())?;
        let month = m.parse().map_err(|_| bad())?;
        let day = d.parse().map_err(|_| bad())?;
        Date::new(year, month, day).map_err(|_| bad())
    }
}

impl Serialize for Date {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Date {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Dated closing prices; `None` marks a missing observation.
#[derive(Clone, Debug, PartialEq)]
pub struct PriceSeries {
    dates: Vec<Date>,
    prices: Vec<Option<f64>>,
}

impl PriceSeries {
    pub fn new(dates: Vec<Date>, prices: Vec<Option<f64>>) -> Result<Self> {
        if dates.len() != prices.len() {
            return Err(Error::Shape(format!(
                "{} dates but {} prices",
                dates.len(),
                prices.len()
            )));
        }
        if dates.is_empty() {
            return Err(Error::EmptyInput);
        }
        for (i, w) in dates.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::Ordering {
                    line: i + 2,
                    previous: w[0].to_string(),
                    date: w[1].to_string(),
                });
            }
        }
        for p in prices.iter().flatten() {
            if !(p.is_finite() && *p > 0.0) {
                return Err(Error::Domain(format!("price must be positive, got {p}")));
            }
        }
        Ok(PriceSeries { dates, prices })
    }

    /// Gap-free series from plain values.
    pub fn from_values(dates: Vec<Date>, prices: &[f64]) -> Result<Self> {
        PriceSeries::new(dates, prices.iter().map(|&p| Some(p)).collect())
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn dates(&self) -> &[Date] {
        &self.dates
    }

    pub fn prices(&self) -> &[Option<f64>] {
        &self.prices
    }

    pub fn missing_count(&self) -> usize {
        self.prices.iter().filter(|p| p.is_none()).count()
    }

    pub fn missing_fraction(&self) -> f64 {
        self.missing_count() as f64 / self.len() as f64
    }

    pub fn is_gap_free(&self) -> bool {
        self.prices.iter().all(Option::is_some)
    }

    /// Parses the `date,close` CSV schema. `close` may be empty or `NA`.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text
            .split('\n')
            .map(|l| l.strip_suffix('\r').unwrap_or(l))
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());

        let (_, header) = lines.next().ok_or(Error::EmptyInput)?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["date", "close"] {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header 'date,close', got '{header}'"),
            });
        }

        let mut dates = Vec::new();
        let mut prices = Vec::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            let mut fields = line.split(',');
            let (date, close) = match (fields.next(), fields.next(), fields.next()) {
                (Some(d), Some(c), None) => (d, c.trim()),
                _ => {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("expected 2 fields, got '{line}'"),
                    })
                }
            };
            let date: Date = date.parse().map_err(|e: Error| Error::Parse {
                line: lineno,
                message: e.to_string(),
            })?;
            let price = if close.is_empty() || close.eq_ignore_ascii_case("NA") {
                None
            } else {
                let v: f64 = close.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    message: format!("invalid close '{close}'"),
                })?;
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("close must be positive, got {v}"),
                    });
                }
                Some(v)
            };
            if let Some(prev) = dates.last() {
                if date <= *prev {
                    return Err(Error::Ordering {
                        line: lineno,
                        previous: prev.to_string(),
                        date: date.to_string(),
                    });
                }
            }
            dates.push(date);
            prices.push(price);
        }
        if dates.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(PriceSeries { dates, prices })
    }

    pub fn from_csv_bytes(bytes: &[u8]) -> Result<Self> {
        let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
            line: 0,
            message: format!("input is not UTF-8: {e}"),
        })?;
        PriceSeries::from_csv_str(text)
    }

    /// Fills each run of missing prices linearly between its nearest present
    /// neighbours. Present values are untouched.
    pub fn interpolate_missing(&self) -> Result<PriceSeries> {
        let n = self.prices.len();
        if self.prices[0].is_none() {
            return Err(Error::Boundary { index: 0 });
        }
        if self.prices[n - 1].is_none() {
            return Err(Error::Boundary { index: n - 1 });
        }
        let mut filled = self.prices.clone();
        let mut i = 0;
        while i < n {
            if filled[i].is_some() {
                i += 1;
                continue;
            }
            let left = i - 1;
            let mut right = i;
            while filled[right].is_none() {
                right += 1;
            }
            let (a, b) = (filled[left].unwrap(), filled[right].unwrap());
            let span = (right - left) as f64;
            for (j, slot) in filled.iter_mut().enumerate().take(right).skip(i) {
                let w = (j - left) as f64 / span;
                *slot = Some(a + (b - a) * w);
            }
            i = right;
        }
        Ok(PriceSeries {
            dates: self.dates.clone(),
            prices: filled,
        })
    }

    /// Discrete returns `(P[i+1] - P[i]) / P[i]` and losses `-return`.
    pub fn to_returns(&self) -> Result<ReturnSeries> {
        if self.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: self.len(),
            });
        }
        let prices: Vec<f64> = self
            .prices
            .iter()
            .enumerate()
            .map(|(i, p)| p.ok_or(Error::Boundary { index: i }))
            .collect::<Result<_>>()?;
        let returns: Vec<f64> = prices.windows(2).map(|w| (w[1] - w[0]) / w[0]).collect();
        Ok(ReturnSeries::new(self.dates[1..].to_vec(), returns))
    }
}

/// Dated discrete returns and their losses (`loss = -return`).
#[derive(Clone, Debug, PartialEq)]
pub struct ReturnSeries {
    dates: Vec<Date>,
    returns: Vec<f64>,
    losses: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(dates: Vec<Date>, returns: Vec<f64>) -> Self {
        assert_eq!(dates.len(), returns.len(), "dates and returns differ in length");
        let losses = returns.iter().map(|r| -r).collect();
        ReturnSeries {
            dates,
            returns,
            losses,
        }
    }

    /// Series labelled with [`Date::synthetic`] dates.
    pub fn synthetic(returns: Vec<f64>) -> Self {
        let dates = (0..returns.len()).map(Date::synthetic).collect();
        ReturnSeries::new(dates, returns)
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    pub fn dates(&self) -> &[Date] {
        &self.dates
    }

    pub fn returns(&self) -> &[f64] {
        &self.returns
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> ReturnSeries {
        ReturnSeries {
            dates: self.dates[range.clone()].to_vec(),
            returns: self.returns[range.clone()].to_vec(),
            losses: self.losses[range].to_vec(),
        }
    }

    /// Keeps observations dated on or before `last`.
    pub fn truncate_after(&self, last: Date) -> ReturnSeries {
        let end = self.dates.partition_point(|d| *d <= last);
        self.slice(0..end)
    }

    /// Splits into train / validation / test segments.
    ///
    /// Test holds observations inside `[eval_start, eval_end]`; everything
    /// before `eval_start` is divided by `train_fraction` into train and
    /// validation. Observations after `eval_end` are dropped and counted.
    pub fn split(&self, spec: &SplitSpec) -> Result<Split> {
        spec.validate()?;
        let test_start = self.dates.partition_point(|d| *d < spec.eval_start);
        let test_end = self.dates.partition_point(|d| *d <= spec.eval_end);
        if test_start >= test_end {
            return Err(Error::Range(format!(
                "evaluation window {}..{} contains no observations",
                spec.eval_start, spec.eval_end
            )));
        }
        let pre = test_start;
        let n_train = (pre as f64 * spec.train_fraction + 1e-9).floor() as usize;
        let n_val = pre - n_train;
        if n_train == 0 || n_val == 0 {
            return Err(Error::Range(format!(
                "{pre} pre-evaluation observations leave an empty train or validation set"
            )));
        }
        Ok(Split {
            train: 0..n_train,
            validation: n_train..pre,
            test: test_start..test_end,
            dropped_after: self.len() - test_end,
        })
    }

    /// One `(window, target)` pair per feasible target index.
    pub fn rolling_windows(&self, lookback: usize) -> Result<WindowedDataset> {
        WindowedDataset::new(&self.returns, lookback)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("date,return,loss\n");
        for ((d, r), l) in self.dates.iter().zip(&self.returns).zip(&self.losses) {
            out.push_str(&format!("{d},{r:?},{l:?}\n"));
        }
        out
    }

    /// Reads the `date,return,loss` file written by [`Self::to_csv_string`].
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::EmptyInput)?;
        if header.trim() != "date,return,loss" {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header 'date,return,loss', got '{header}'"),
            });
        }
        let mut dates = Vec::new();
        let mut returns = Vec::new();
        for (idx, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parse_err = |m: String| Error::Parse {
                line: idx + 1,
                message: m,
            };
            if fields.len() != 3 {
                return Err(parse_err(format!("expected 3 fields, got '{line}'")));
            }
            let date: Date = fields[0].parse().map_err(|e: Error| parse_err(e.to_string()))?;
            let r: f64 = fields[1]
                .parse()
                .map_err(|_| parse_err(format!("invalid return '{}'", fields[1])))?;
            if let Some(prev) = dates.last() {
                if date <= *prev {
                    return Err(Error::Ordering {
                        line: idx + 1,
                        previous: prev.to_string(),
                        date: date.to_string(),
                    });
                }
            }
            dates.push(date);
            returns.push(r);
        }
        Ok(ReturnSeries::new(dates, returns))
    }
}

/// Evaluation window and the train share of the pre-evaluation data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub eval_start: Date,
    pub eval_end: Date,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
}

fn default_train_fraction() -> f64 {
    0.9
}

impl SplitSpec {
    pub fn new(eval_start: Date, eval_end: Date) -> Self {
        SplitSpec {
            eval_start,
            eval_end,
            train_fraction: default_train_fraction(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eval_start >= self.eval_end {
            return Err(Error::Range(format!(
                "eval_start {} must precede eval_end {}",
                self.eval_start, self.eval_end
            )));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Range(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

/// Index ranges of a split; `dropped_after` counts observations past `eval_end`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: std::ops::Range<usize>,
    pub validation: std::ops::Range<usize>,
    pub test: std::ops::Range<usize>,
    pub dropped_after: usize,
}

/// Lookback windows paired with the return that immediately follows them.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowedDataset {
    lookback: usize,
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    /// Index of each target in the source series.
    target_index: Vec<usize>,
}

impl WindowedDataset {
    pub fn new(returns: &[f64], lookback: usize) -> Result<Self> {
        if lookback == 0 {
            return Err(Error::Domain("lookback must be positive".into()));
        }
        if returns.len() <= lookback {
            return Err(Error::InsufficientData {
                needed: lookback + 1,
                got: returns.len(),
            });
        }
        let mut ds = WindowedDataset {
            lookback,
            inputs: Vec::with_capacity(returns.len() - lookback),
            targets: Vec::with_capacity(returns.len() - lookback),
            target_index: Vec::with_capacity(returns.len() - lookback),
        };
        for t in lookback..returns.len() {
            ds.inputs.push(returns[t - lookback..t].to_vec());
            ds.targets.push(returns[t]);
            ds.target_index.push(t);
        }
        Ok(ds)
    }

    pub fn lookback(&self) -> usize {
        self.lookback
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn target_index(&self) -> &[usize] {
        &self.target_index
    }

    /// Pairs whose target index falls in `range`.
    pub fn select_targets(&self, range: std::ops::Range<usize>) -> WindowedDataset {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| range.contains(&self.target_index[i]))
            .collect();
        WindowedDataset {
            lookback: self.lookback,
            inputs: keep.iter().map(|&i| self.inputs[i].clone()).collect(),
            targets: keep.iter().map(|&i| self.targets[i]).collect(),
            target_index: keep.iter().map(|&i| self.target_index[i]).collect(),
        }
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.inputs
            .iter()
            .map(Vec::as_slice)
            .zip(self.targets.iter().copied())
    }
}

/// Sample mean and population (1/T) standard deviation.
pub fn sample_stats(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

/// Reads a local path or fetches an `http(s)://` URL with a plain GET.
pub fn read_source(source: &str) -> Result<Vec<u8>> {
    if source.starts_with("http://") || source.starts_with("https://") {
        let mut response = ureq::get(source)
            .call()
            .map_err(|e| Error::Http(format!("GET {source}: {e}")))?;
        let mut buf = Vec::new();
        response
            .body_mut()
            .as_reader()
            .read_to_end(&mut buf)
            .map_err(|e| Error::Http(format!("reading body of {source}: {e}")))?;
        Ok(buf)
    } else {
        let path = std::path::Path::new(source);
        if !path.exists() {
            return Err(Error::SourceNotFound(path.to_path_buf()));
        }
        Ok(std::fs::read(path)?)
    }
}

/// Reads and parses a price source; gaps are left for [`PriceSeries::interpolate_missing`].
pub fn ingest(source: &str) -> Result<PriceSeries> {
    PriceSeries::from_csv_bytes(&read_source(source)?)
}
