//! Line formats for search results and plot data.

use std::io::{self, Write};

use lamot_core::nas::{DiscreteArch, NasError, ParetoPoint, SearchSpace};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("point with latency {0} ms has no finite reciprocal")]
    ZeroLatency(f64),
    #[error("non-finite point ({latency_ms}, {loss})")]
    NonFinite { latency_ms: f64, loss: f64 },
    #[error("line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error(transparent)]
    Arch(#[from] NasError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// `lambda=<v> latency_ms=<v> loss=<v> arch=<edge:op,...>`
pub fn format_point(p: &ParetoPoint, space: &SearchSpace) -> String {
    format!(
        "lambda={} latency_ms={} loss={} arch={}\n",
        p.lambda_used,
        p.latency_ms,
        p.track_loss,
        p.arch.describe(space)
    )
}

pub fn parse_point(text: &str, line: usize, space: &SearchSpace) -> Result<ParetoPoint, RecordError> {
    let err = |reason: String| RecordError::Line { line, reason };
    let mut fields = [None; 4];
    const KEYS: [&str; 4] = ["lambda", "latency_ms", "loss", "arch"];
    for token in text.split_whitespace() {
        let (k, v) = token
            .split_once('=')
            .ok_or_else(|| err(format!("token `{token}` is not key=value")))?;
        let i = KEYS
            .iter()
            .position(|key| *key == k)
            .ok_or_else(|| err(format!("unknown key `{k}`")))?;
        fields[i] = Some(v);
    }
    let get = |i: usize| fields[i].ok_or_else(|| err(format!("missing `{}`", KEYS[i])));
    let real = |i: usize| -> Result<f64, RecordError> {
        let v = get(i)?;
        v.parse()
            .map_err(|_| err(format!("`{}` has invalid value `{v}`", KEYS[i])))
    };
    Ok(ParetoPoint {
        lambda_used: real(0)?,
        latency_ms: real(1)?,
        track_loss: real(2)?,
        arch: DiscreteArch::parse(get(3)?, space)?,
    })
}

pub fn write_points(points: &[ParetoPoint], space: &SearchSpace, mut sink: impl Write) -> io::Result<()> {
    for p in points {
        sink.write_all(format_point(p, space).as_bytes())?;
    }
    sink.flush()
}

pub fn read_points(text: &str, space: &SearchSpace) -> Result<Vec<ParetoPoint>, RecordError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_point(l, i + 1, space))
        .collect()
}

pub const PLOT_HEADER: &str = "# 1/latency_ms metric";

/// Two columns, reciprocal latency and loss, ascending in the first.
pub fn emit_plot_data(points: &[ParetoPoint], mut sink: impl Write) -> Result<(), RecordError> {
    let mut rows = Vec::with_capacity(points.len());
    for p in points {
        if !p.latency_ms.is_finite() || !p.track_loss.is_finite() {
            return Err(RecordError::NonFinite {
                latency_ms: p.latency_ms,
                loss: p.track_loss,
            });
        }
        if p.latency_ms == 0.0 {
            return Err(RecordError::ZeroLatency(p.latency_ms));
        }
        rows.push((1.0 / p.latency_ms, p.track_loss));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    writeln!(sink, "{PLOT_HEADER}")?;
    for (x, y) in rows {
        writeln!(sink, "{x} {y}")?;
    }
    sink.flush()?;
    Ok(())
}
