//! Line-oriented text for association problems and their solutions.
//!
//! ```text
//! scoreset v1
//! n_prev 2
//! n_curr 1
//! s_in 0.5
//! s_out -0.2 0.1
//! s_det_prev 1 1
//! s_det_curr 0.7
//! s_link 0.9 -3
//! ```
//!
//! `s_link` is row-major, `n_prev` rows of `n_curr` values.

use std::fmt::Write as _;

use lamot_core::assoc::{check_feasible, AssociationProblem, AssociationSolution};
use lamot_core::ScoreSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub const HEADER: &str = "scoreset v1";

#[derive(Debug, Error, PartialEq)]
pub enum ScoresFileError {
    #[error("missing or wrong header, expected `{HEADER}`")]
    Header,
    #[error("line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error("missing `{0}`")]
    Missing(&'static str),
    #[error("{0}")]
    Shape(String),
}

const ROWS: [&str; 7] = [
    "n_prev",
    "n_curr",
    "s_in",
    "s_out",
    "s_det_prev",
    "s_det_curr",
    "s_link",
];

fn join(values: &[f64]) -> String {
    let mut s = String::new();
    for v in values {
        let _ = write!(s, " {v}");
    }
    s
}

pub fn format_scores(s: &ScoreSet) -> String {
    format!(
        "{HEADER}\nn_prev {}\nn_curr {}\ns_in{}\ns_out{}\ns_det_prev{}\ns_det_curr{}\ns_link{}\n",
        s.n_prev(),
        s.n_curr(),
        join(s.s_in()),
        join(s.s_out()),
        join(s.s_det_prev()),
        join(s.s_det_curr()),
        join(s.s_link_row_major())
    )
}

pub fn parse_scores(text: &str) -> Result<ScoreSet, ScoresFileError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    match lines.next() {
        Some((_, h)) if h.trim() == HEADER => {}
        _ => return Err(ScoresFileError::Header),
    }
    let mut rows: [Option<Vec<f64>>; 7] = Default::default();
    for (idx, l) in lines {
        let line = idx + 1;
        let mut tokens = l.split_whitespace();
        let key = tokens.next().unwrap_or_default();
        let slot = ROWS.iter().position(|k| *k == key).ok_or_else(|| ScoresFileError::Line {
            line,
            reason: format!("unknown row `{key}`"),
        })?;
        let values = tokens
            .map(|t| {
                t.parse::<f64>().map_err(|_| ScoresFileError::Line {
                    line,
                    reason: format!("`{t}` is not a number"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if rows[slot].replace(values).is_some() {
            return Err(ScoresFileError::Line {
                line,
                reason: format!("row `{key}` given twice"),
            });
        }
    }
    let mut take = |i: usize| rows[i].take().ok_or(ScoresFileError::Missing(ROWS[i]));
    let count = |v: Vec<f64>, name: &'static str| -> Result<usize, ScoresFileError> {
        match v.as_slice() {
            [n] if *n >= 0.0 && n.fract() == 0.0 => Ok(*n as usize),
            _ => Err(ScoresFileError::Shape(format!("`{name}` must be one non-negative integer"))),
        }
    };
    let n_prev = count(take(0)?, "n_prev")?;
    let n_curr = count(take(1)?, "n_curr")?;
    let (s_in, s_out, s_det_prev, s_det_curr, s_link) = (take(2)?, take(3)?, take(4)?, take(5)?, take(6)?);
    if s_out.len() != n_prev || s_in.len() != n_curr {
        return Err(ScoresFileError::Shape(format!(
            "declared {n_prev}x{n_curr}, found {} s_out and {} s_in values",
            s_out.len(),
            s_in.len()
        )));
    }
    ScoreSet::new(s_in, s_out, s_det_prev, s_det_curr, s_link)
        .map_err(|e| ScoresFileError::Shape(e.to_string()))
}

/// Scores drawn uniformly from `[-2, 2)`.
pub fn random_scores(n_prev: usize, n_curr: usize, seed: u64) -> ScoreSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect() };
    let s_in = draw(n_curr);
    let s_out = draw(n_prev);
    let s_det_prev = draw(n_prev);
    let s_det_curr = draw(n_curr);
    let s_link = draw(n_prev * n_curr);
    ScoreSet::new(s_in, s_out, s_det_prev, s_det_curr, s_link).expect("consistent shapes")
}

fn flags(values: &[bool]) -> String {
    values.iter().map(|&b| if b { " 1" } else { " 0" }).collect()
}

/// Problem followed by its solution, for inspection.
pub fn format_solution(problem: &AssociationProblem, sol: &AssociationSolution) -> String {
    let mut s = format_scores(&problem.scores);
    let _ = writeln!(s, "objective {}", sol.objective);
    let _ = writeln!(s, "feasible {}", check_feasible(problem, sol));
    let _ = writeln!(s, "f_in{}", flags(&sol.f_in));
    let _ = writeln!(s, "f_out{}", flags(&sol.f_out));
    let _ = writeln!(s, "f_det_prev{}", flags(&sol.f_det_prev));
    let _ = writeln!(s, "f_det_curr{}", flags(&sol.f_det_curr));
    for i in 0..sol.n_prev {
        let row: Vec<bool> = (0..sol.n_curr).map(|j| sol.link(i, j)).collect();
        let _ = writeln!(s, "f_link[{i}]{}", flags(&row));
    }
    let links: Vec<String> = sol.links().map(|(i, j)| format!("{i}->{j}")).collect();
    let _ = writeln!(s, "links {}", if links.is_empty() { "-".into() } else { links.join(" ") });
    s
}
