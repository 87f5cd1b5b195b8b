//! Text persistence for [`LatencyTable`].

use std::io::{self, BufRead, Write};

use lamot_core::latency::{LatencyEntry, LatencyTable, OpConfig, OpKind, OpShape};
use thiserror::Error;

pub const HEADER: &str = "latency-table v1";

const KEYS: [&str; 8] = [
    "op", "cin", "cout", "res", "stride", "mean_ms", "std_ms", "reps",
];

#[derive(Debug, Error)]
pub enum TableFileError {
    #[error("missing or wrong header, expected `{HEADER}`")]
    Header,
    #[error("line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn line_err(line: usize, reason: impl Into<String>) -> TableFileError {
    TableFileError::Line {
        line,
        reason: reason.into(),
    }
}

pub fn format_entry(cfg: &OpConfig, e: &LatencyEntry) -> String {
    format!(
        "{cfg} mean_ms={} std_ms={} reps={}\n",
        e.mean_ms, e.std_ms, e.reps
    )
}

pub fn write_table(table: &LatencyTable, mut sink: impl Write) -> io::Result<()> {
    writeln!(sink, "{HEADER}")?;
    for (cfg, e) in table.iter() {
        sink.write_all(format_entry(cfg, e).as_bytes())?;
    }
    sink.flush()
}

pub fn table_to_string(table: &LatencyTable) -> String {
    let mut buf = Vec::new();
    write_table(table, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

fn parse_entry(text: &str, line: usize) -> Result<(OpConfig, LatencyEntry), TableFileError> {
    let mut values: [Option<&str>; 8] = [None; 8];
    for token in text.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| line_err(line, format!("token `{token}` is not key=value")))?;
        let slot = KEYS
            .iter()
            .position(|k| *k == key)
            .ok_or_else(|| line_err(line, format!("unknown key `{key}`")))?;
        if values[slot].replace(value).is_some() {
            return Err(line_err(line, format!("duplicate key `{key}`")));
        }
    }
    let get = |i: usize| values[i].ok_or_else(|| line_err(line, format!("missing key `{}`", KEYS[i])));
    let int = |i: usize| -> Result<u32, TableFileError> {
        let v = get(i)?;
        v.parse()
            .map_err(|_| line_err(line, format!("`{}` has invalid value `{v}`", KEYS[i])))
    };
    let real = |i: usize| -> Result<f64, TableFileError> {
        let v = get(i)?;
        match v.parse::<f64>() {
            Ok(x) if x.is_finite() && x >= 0.0 => Ok(x),
            _ => Err(line_err(line, format!("`{}` has invalid value `{v}`", KEYS[i]))),
        }
    };
    let op_name = get(0)?;
    let op: OpKind = op_name
        .parse()
        .map_err(|_| line_err(line, format!("unknown op `{op_name}`")))?;
    let shape = OpShape {
        in_channels: int(1)?,
        out_channels: int(2)?,
        resolution: int(3)?,
        stride: int(4)?,
    };
    let reps = int(7)?;
    if reps == 0 {
        return Err(line_err(line, "reps must be at least 1"));
    }
    let entry = LatencyEntry {
        mean_ms: real(5)?,
        std_ms: real(6)?,
        reps,
    };
    Ok((OpConfig::new(op, shape), entry))
}

pub fn read_table(source: impl BufRead) -> Result<LatencyTable, TableFileError> {
    let mut table = LatencyTable::new();
    let mut lines = source.lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h.trim() == HEADER => {}
        Some((_, Err(e))) => return Err(e.into()),
        _ => return Err(TableFileError::Header),
    }
    for (idx, text) in lines {
        let text = text?;
        if text.trim().is_empty() {
            continue;
        }
        let (cfg, entry) = parse_entry(&text, idx + 1)?;
        if table.insert(cfg, entry).is_some() {
            return Err(line_err(idx + 1, format!("duplicate entry for {cfg}")));
        }
    }
    Ok(table)
}
