//! Flow-flag association between consecutive frames.
//!
//! Binary flags `f_in`, `f_out`, `f_det` and `f_link` maximize
//!
//! ```text
//! Σ S_in f_in + Σ S_link f_link + Σ S_det f_det (both frames) + Σ S_out f_out
//! ```
//!
//! subject to `f_det_curr(j) = Σ_i f_link(i,j) + f_in(j)` and
//! `f_det_prev(i) = Σ_j f_link(i,j) + f_out(i)`.
//!
//! The constraint matrix is that of a bipartite flow, so the exact solver
//! reduces the program to a maximum-weight matching with node prizes: an
//! unlinked previous node is worth `max(0, S_det_prev + S_out)`, an unlinked
//! current node `max(0, S_det_curr + S_in)`, and a link
//! `S_det_prev + S_det_curr + S_link`. Only links beating both prizes enter
//! the matching.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::matching::max_weight_matching;
use crate::scoring::ScoreSet;

/// Largest `N*M + N + M` accepted by [`solve_bruteforce`].
pub const BRUTEFORCE_FLAG_LIMIT: usize = 25;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssocError {
    #[error("solution shape ({sol_prev}, {sol_curr}) does not match problem ({n_prev}, {n_curr})")]
    ShapeMismatch {
        n_prev: usize,
        n_curr: usize,
        sol_prev: usize,
        sol_curr: usize,
    },
    #[error("{flags} free flags exceed the brute-force limit of {BRUTEFORCE_FLAG_LIMIT}")]
    TooLarge { flags: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssociationProblem {
    pub scores: ScoreSet,
}

impl AssociationProblem {
    pub fn new(scores: ScoreSet) -> Self {
        Self { scores }
    }

    pub fn n_prev(&self) -> usize {
        self.scores.n_prev()
    }

    pub fn n_curr(&self) -> usize {
        self.scores.n_curr()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssociationSolution {
    pub n_prev: usize,
    pub n_curr: usize,
    pub f_in: Vec<bool>,
    pub f_out: Vec<bool>,
    pub f_det_prev: Vec<bool>,
    pub f_det_curr: Vec<bool>,
    /// Row-major `n_prev x n_curr`.
    pub f_link: Vec<bool>,
    pub objective: f64,
}

impl AssociationSolution {
    pub fn zeros(n_prev: usize, n_curr: usize) -> Self {
        Self {
            n_prev,
            n_curr,
            f_in: vec![false; n_curr],
            f_out: vec![false; n_prev],
            f_det_prev: vec![false; n_prev],
            f_det_curr: vec![false; n_curr],
            f_link: vec![false; n_prev * n_curr],
            objective: 0.0,
        }
    }

    pub fn link(&self, i: usize, j: usize) -> bool {
        self.f_link[i * self.n_curr + j]
    }

    pub fn set_link(&mut self, i: usize, j: usize, on: bool) {
        self.f_link[i * self.n_curr + j] = on;
    }

    /// Current detection linked to previous node `i`, if any.
    pub fn linked_curr(&self, i: usize) -> Option<usize> {
        (0..self.n_curr).find(|&j| self.link(i, j))
    }

    /// Previous node linked to current detection `j`, if any.
    pub fn linked_prev(&self, j: usize) -> Option<usize> {
        (0..self.n_prev).find(|&i| self.link(i, j))
    }

    pub fn links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let m = self.n_curr;
        self.f_link
            .iter()
            .enumerate()
            .filter(|(_, on)| **on)
            .map(move |(k, _)| (k / m, k % m))
    }

    fn shape_ok(&self) -> bool {
        self.f_in.len() == self.n_curr
            && self.f_det_curr.len() == self.n_curr
            && self.f_out.len() == self.n_prev
            && self.f_det_prev.len() == self.n_prev
            && self.f_link.len() == self.n_prev * self.n_curr
    }
}

fn check_shape(problem: &AssociationProblem, sol: &AssociationSolution) -> Result<(), AssocError> {
    if sol.n_prev == problem.n_prev() && sol.n_curr == problem.n_curr() && sol.shape_ok() {
        Ok(())
    } else {
        Err(AssocError::ShapeMismatch {
            n_prev: problem.n_prev(),
            n_curr: problem.n_curr(),
            sol_prev: sol.n_prev,
            sol_curr: sol.n_curr,
        })
    }
}

/// Objective of `sol` under `problem`'s scores. `sol.objective` is ignored.
pub fn objective_value(
    problem: &AssociationProblem,
    sol: &AssociationSolution,
) -> Result<f64, AssocError> {
    check_shape(problem, sol)?;
    let s = &problem.scores;
    let pick = |scores: &[f64], flags: &[bool]| -> f64 {
        scores
            .iter()
            .zip(flags)
            .filter(|(_, f)| **f)
            .map(|(v, _)| *v)
            .sum()
    };
    Ok(pick(s.s_in(), &sol.f_in)
        + pick(s.s_link_row_major(), &sol.f_link)
        + pick(s.s_det_prev(), &sol.f_det_prev)
        + pick(s.s_det_curr(), &sol.f_det_curr)
        + pick(s.s_out(), &sol.f_out))
}

/// Whether both equality families hold. Shape mismatches are infeasible.
pub fn check_feasible(problem: &AssociationProblem, sol: &AssociationSolution) -> bool {
    if check_shape(problem, sol).is_err() {
        return false;
    }
    let (n, m) = (sol.n_prev, sol.n_curr);
    let curr_ok = (0..m).all(|j| {
        let inflow = (0..n).filter(|&i| sol.link(i, j)).count() + sol.f_in[j] as usize;
        inflow == sol.f_det_curr[j] as usize
    });
    let prev_ok = (0..n).all(|i| {
        let outflow = (0..m).filter(|&j| sol.link(i, j)).count() + sol.f_out[i] as usize;
        outflow == sol.f_det_prev[i] as usize
    });
    curr_ok && prev_ok
}

/// Exact optimum via the matching reduction.
///
/// Node prizes and links are activated only on strictly positive gain, so
/// zero-gain alternatives resolve to inactive flags.
#[allow(clippy::needless_range_loop)]
pub fn solve_exact(problem: &AssociationProblem) -> AssociationSolution {
    let s = &problem.scores;
    let (n, m) = (s.n_prev(), s.n_curr());
    let prize_prev: Vec<f64> = (0..n)
        .map(|i| (s.s_det_prev()[i] + s.s_out()[i]).max(0.0))
        .collect();
    let prize_curr: Vec<f64> = (0..m)
        .map(|j| (s.s_det_curr()[j] + s.s_in()[j]).max(0.0))
        .collect();
    let mut adjusted = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            let link_gain = s.s_det_prev()[i] + s.s_det_curr()[j] + s.s_link(i, j);
            adjusted.push(link_gain - prize_prev[i] - prize_curr[j]);
        }
    }

    let mut sol = AssociationSolution::zeros(n, m);
    for (i, j) in max_weight_matching(&adjusted, n, m, |_, _| true) {
        sol.set_link(i, j, true);
        sol.f_det_prev[i] = true;
        sol.f_det_curr[j] = true;
    }
    for i in 0..n {
        if !sol.f_det_prev[i] && prize_prev[i] > 0.0 {
            sol.f_det_prev[i] = true;
            sol.f_out[i] = true;
        }
    }
    for j in 0..m {
        if !sol.f_det_curr[j] && prize_curr[j] > 0.0 {
            sol.f_det_curr[j] = true;
            sol.f_in[j] = true;
        }
    }
    sol.objective = objective_value(problem, &sol).expect("shape built from problem");
    sol
}

/// Exhaustive search over every feasible flag assignment.
///
/// Candidates are visited in lexicographic order of the flag vector
/// (`f_link` row-major, then `f_in`, then `f_out`, false before true) and
/// `f_det` follows from the equalities, so the first maximum found is the
/// lexicographically smallest optimum. Links that would push a node's flow
/// above one are skipped since no binary `f_det` can balance them.
pub fn solve_bruteforce(problem: &AssociationProblem) -> Result<AssociationSolution, AssocError> {
    let (n, m) = (problem.n_prev(), problem.n_curr());
    let flags = n * m + n + m;
    if flags > BRUTEFORCE_FLAG_LIMIT {
        return Err(AssocError::TooLarge { flags });
    }
    let mut search = BruteSearch {
        problem,
        current: AssociationSolution::zeros(n, m),
        best: None,
    };
    search.links(0);
    Ok(search.best.expect("all-zero assignment is always feasible"))
}

struct BruteSearch<'a> {
    problem: &'a AssociationProblem,
    current: AssociationSolution,
    best: Option<AssociationSolution>,
}

impl BruteSearch<'_> {
    fn links(&mut self, k: usize) {
        let (n, m) = (self.current.n_prev, self.current.n_curr);
        if k == n * m {
            self.starts(0);
            return;
        }
        let (i, j) = (k / m, k % m);
        self.links(k + 1);
        if !self.current.f_det_prev[i] && !self.current.f_det_curr[j] {
            self.current.set_link(i, j, true);
            self.current.f_det_prev[i] = true;
            self.current.f_det_curr[j] = true;
            self.links(k + 1);
            self.current.set_link(i, j, false);
            self.current.f_det_prev[i] = false;
            self.current.f_det_curr[j] = false;
        }
    }

    fn starts(&mut self, j: usize) {
        if j == self.current.n_curr {
            self.ends(0);
            return;
        }
        self.starts(j + 1);
        if !self.current.f_det_curr[j] {
            self.current.f_in[j] = true;
            self.current.f_det_curr[j] = true;
            self.starts(j + 1);
            self.current.f_in[j] = false;
            self.current.f_det_curr[j] = false;
        }
    }

    fn ends(&mut self, i: usize) {
        if i == self.current.n_prev {
            self.evaluate();
            return;
        }
        self.ends(i + 1);
        if !self.current.f_det_prev[i] {
            self.current.f_out[i] = true;
            self.current.f_det_prev[i] = true;
            self.ends(i + 1);
            self.current.f_out[i] = false;
            self.current.f_det_prev[i] = false;
        }
    }

    fn evaluate(&mut self) {
        if !check_feasible(self.problem, &self.current) {
            return;
        }
        let value = objective_value(self.problem, &self.current).expect("same shape");
        if self.best.as_ref().is_none_or(|b| value > b.objective) {
            let mut sol = self.current.clone();
            sol.objective = value;
            self.best = Some(sol);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(
        s_in: &[f64],
        s_out: &[f64],
        dp: &[f64],
        dc: &[f64],
        link: &[f64],
    ) -> AssociationProblem {
        AssociationProblem::new(
            ScoreSet::new(s_in.into(), s_out.into(), dp.into(), dc.into(), link.into()).unwrap(),
        )
    }

    fn single_pair() -> AssociationProblem {
        problem(&[-1.0], &[-1.0], &[1.0], &[1.0], &[2.0])
    }

    #[test]
    fn objective_examples() {
        let p = single_pair();
        let zero = AssociationSolution::zeros(1, 1);
        assert_eq!(objective_value(&p, &zero).unwrap(), 0.0);
        let mut matched = zero.clone();
        matched.set_link(0, 0, true);
        matched.f_det_prev[0] = true;
        matched.f_det_curr[0] = true;
        assert_eq!(objective_value(&p, &matched).unwrap(), 4.0);
        assert!(objective_value(&p, &AssociationSolution::zeros(2, 1)).is_err());
    }

    #[test]
    fn feasibility_examples() {
        let p = single_pair();
        let zero = AssociationSolution::zeros(1, 1);
        assert!(check_feasible(&p, &zero));

        let mut dangling = zero.clone();
        dangling.set_link(0, 0, true);
        dangling.f_det_prev[0] = true;
        assert!(!check_feasible(&p, &dangling));

        let mut double = zero.clone();
        double.set_link(0, 0, true);
        double.f_in[0] = true;
        double.f_det_curr[0] = true;
        double.f_det_prev[0] = true;
        assert!(!check_feasible(&p, &double));
    }

    #[test]
    fn solve_examples() {
        let p = single_pair();
        let sol = solve_exact(&p);
        assert!(sol.link(0, 0) && sol.f_det_prev[0] && sol.f_det_curr[0]);
        assert!(!sol.f_in[0] && !sol.f_out[0]);
        assert_eq!(sol.objective, 4.0);
        assert_eq!(sol, solve_bruteforce(&p).unwrap());

        let p = problem(&[-1.0], &[-1.0], &[-1.0], &[-1.0], &[-1.0]);
        let sol = solve_exact(&p);
        assert_eq!(sol, AssociationSolution::zeros(1, 1));
        assert_eq!(sol, solve_bruteforce(&p).unwrap());

        let p = problem(&[1.0], &[], &[], &[1.0], &[]);
        let sol = solve_exact(&p);
        assert!(sol.f_in[0] && sol.f_det_curr[0]);
        assert_eq!(sol.objective, 2.0);
        assert_eq!(sol, solve_bruteforce(&p).unwrap());
    }

    #[test]
    fn empty_problem() {
        let p = AssociationProblem::new(ScoreSet::empty());
        let sol = solve_bruteforce(&p).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert!(sol.f_link.is_empty());
        assert_eq!(solve_exact(&p), sol);
    }

    #[test]
    fn bruteforce_guard() {
        let p = problem(
            &[0.0; 5],
            &[0.0; 5],
            &[0.0; 5],
            &[0.0; 5],
            &[0.0; 25],
        );
        assert_eq!(solve_bruteforce(&p), Err(AssocError::TooLarge { flags: 35 }));
    }

    #[test]
    fn bruteforce_prefers_lexicographically_smallest_optimum() {
        // Linking or starting the detection are worth the same; the start
        // flag comes later in the flag vector so it wins the tie.
        let p = problem(&[1.0], &[-5.0], &[0.0], &[0.0], &[1.0]);
        let sol = solve_bruteforce(&p).unwrap();
        assert!(!sol.link(0, 0));
        assert!(sol.f_in[0]);
        assert_eq!(sol.objective, 1.0);
    }
}
