//! CSV stream ingestion and windowed feature extraction.
//!
//! Rows are `v1,...,vF,label` with an integer label in the last column. A
//! single header row is skipped when the first row does not parse as numbers.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::forest::LabeledPoint;

/// Single-pass CSV reader yielding labeled points in file order.
pub struct CsvStream<R: Read> {
    records: csv::StringRecordsIntoIter<R>,
    columns: Option<usize>,
    first: bool,
}

pub fn parse_csv_stream<R: Read>(source: R) -> CsvStream<R> {
    let reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    CsvStream {
        records: reader.into_records(),
        columns: None,
        first: true,
    }
}

fn parse_row(record: &csv::StringRecord, row: usize) -> Result<LabeledPoint> {
    let n = record.len();
    if n < 2 {
        return Err(Error::Parse {
            row,
            message: "need at least one feature and a label".into(),
        });
    }
    let mut features = Vec::with_capacity(n - 1);
    for (i, field) in record.iter().take(n - 1).enumerate() {
        let v: f64 = field.parse().map_err(|_| Error::Parse {
            row,
            message: format!("column {}: `{field}` is not a number", i + 1),
        })?;
        features.push(v);
    }
    let raw = &record[n - 1];
    let label: usize = raw.parse().map_err(|_| Error::Parse {
        row,
        message: format!("label `{raw}` is not a non-negative integer"),
    })?;
    Ok(LabeledPoint::new(features, label))
}

impl<R: Read> Iterator for CsvStream<R> {
    type Item = Result<LabeledPoint>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let record = match self.records.next()? {
                Ok(r) => r,
                Err(e) => {
                    let row = e.position().map_or(0, |p| p.line() as usize);
                    return Some(Err(Error::Parse {
                        row,
                        message: e.to_string(),
                    }));
                }
            };
            let row = record.position().map_or(0, |p| p.line() as usize);
            if record.iter().all(str::is_empty) {
                continue;
            }
            let first = std::mem::replace(&mut self.first, false);
            if first && record.iter().any(|f| f.parse::<f64>().is_err()) {
                // Header row.
                self.columns = Some(record.len());
                continue;
            }
            let expected = *self.columns.get_or_insert(record.len());
            if record.len() != expected {
                return Some(Err(Error::ColumnCount {
                    row,
                    expected,
                    actual: record.len(),
                }));
            }
            return Some(parse_row(&record, row));
        }
    }
}

/// Writes points as `f0,...,f{F-1},label` with a header row.
pub fn write_csv<W: Write, I: IntoIterator<Item = LabeledPoint>>(
    mut out: W,
    points: I,
) -> Result<()> {
    let mut header_written = false;
    for p in points {
        if !header_written {
            let names: Vec<String> = (0..p.features.len()).map(|d| format!("f{d}")).collect();
            writeln!(out, "{},label", names.join(","))?;
            header_written = true;
        }
        for v in &p.features {
            write!(out, "{v},")?;
        }
        writeln!(out, "{}", p.label)?;
    }
    Ok(())
}

/// Turns fixed-rate raw samples into one point per non-overlapping window:
/// mean and population standard deviation of each selected axis, labeled
/// with the window's most frequent label (lowest on ties). A trailing
/// partial window is dropped.
pub struct WindowStream<I> {
    raw: I,
    window_len: usize,
    axes: Option<Vec<usize>>,
    buffer: Vec<LabeledPoint>,
}

pub fn window_features<I>(
    raw: I,
    window_len: usize,
    axes: Option<Vec<usize>>,
) -> Result<WindowStream<I>>
where
    I: Iterator<Item = Result<LabeledPoint>>,
{
    if window_len < 2 {
        return Err(Error::InvalidConfig(format!(
            "window length must be at least 2, got {window_len}"
        )));
    }
    Ok(WindowStream {
        raw,
        window_len,
        axes,
        buffer: Vec::with_capacity(window_len),
    })
}

/// Features of one full window.
pub fn summarize_window(window: &[LabeledPoint], axes: &[usize]) -> LabeledPoint {
    let n = window.len() as f64;
    let mut features = Vec::with_capacity(2 * axes.len());
    for &a in axes {
        let mean = window.iter().map(|s| s.features[a]).sum::<f64>() / n;
        let var = window
            .iter()
            .map(|s| (s.features[a] - mean).powi(2))
            .sum::<f64>()
            / n;
        features.push(mean);
        features.push(var.sqrt());
    }
    let max_label = window.iter().map(|s| s.label).max().unwrap_or(0);
    let mut votes = vec![0usize; max_label + 1];
    for s in window {
        votes[s.label] += 1;
    }
    let mut label = 0;
    for (l, &v) in votes.iter().enumerate() {
        if v > votes[label] {
            label = l;
        }
    }
    LabeledPoint::new(features, label)
}

impl<I> Iterator for WindowStream<I>
where
    I: Iterator<Item = Result<LabeledPoint>>,
{
    type Item = Result<LabeledPoint>;

    fn next(&mut self) -> Option<Self::Item> {
        self.buffer.clear();
        while self.buffer.len() < self.window_len {
            match self.raw.next()? {
                Ok(sample) => self.buffer.push(sample),
                Err(e) => return Some(Err(e)),
            }
        }
        let width = self.buffer[0].features.len();
        let axes = match &self.axes {
            Some(axes) => {
                if let Some(&bad) = axes.iter().find(|&&a| a >= width) {
                    return Some(Err(Error::InvalidConfig(format!(
                        "axis {bad} out of range for {width} raw columns"
                    ))));
                }
                axes.clone()
            }
            None => (0..width).collect(),
        };
        Some(Ok(summarize_window(&self.buffer, &axes)))
    }
}
