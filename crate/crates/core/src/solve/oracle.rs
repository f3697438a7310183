//! Exact reference solver for tiny instances.
//!
//! Every integer assignment is enumerated implicitly: a depth-first search
//! fixes integer columns one at a time, with interval propagation on the
//! rows discarding infeasible partial assignments, and each completed
//! assignment's continuous remainder is solved with the dense simplex. Two
//! devices keep the search small without giving up exactness: once the
//! columns linking independent blocks are fixed, the blocks are searched
//! separately and their optima added; and a subtree is skipped when its LP
//! relaxation cannot beat the incumbent. Nothing here is shared with the
//! branch-and-bound backend.

use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::simplex::{solve_lp, DenseLp, LpStatus};
use super::{MilpBackend, SolveError, SolveOptions, SolveOutcome, SolveStatus};
use crate::model::{Integrality, MilpProblem, Relation};

const INT_TOL: f64 = 1e-6;
const FEAS_TOL: f64 = 1e-7;

/// Enumeration limits: at most `2^max_binaries` binary patterns and
/// `max_integer_domain` values per general integer column. Binaries in an
/// exactly-one row count as one choice among the row's members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCaps {
    pub max_binaries: u32,
    pub max_integer_domain: u64,
}

impl Default for OracleCaps {
    fn default() -> Self {
        OracleCaps { max_binaries: 22, max_integer_domain: 4 }
    }
}

impl OracleCaps {
    /// Largest admissible combination count for a problem with
    /// `general_integers` non-binary integer columns.
    pub fn cap(&self, general_integers: usize) -> u128 {
        let mut cap = 1u128 << self.max_binaries.min(120);
        for _ in 0..general_integers {
            cap = cap.saturating_mul(self.max_integer_domain as u128);
        }
        cap
    }
}

impl FromStr for OracleCaps {
    type Err = String;

    /// `"<binaries>,<domain>"`, e.g. `22,4`.
    fn from_str(s: &str) -> Result<Self, String> {
        let (b, d) = s.split_once(',').ok_or_else(|| format!("expected '<binaries>,<domain>', got '{s}'"))?;
        let max_binaries = b.trim().parse().map_err(|e| format!("binaries: {e}"))?;
        let max_integer_domain = d.trim().parse().map_err(|e| format!("domain: {e}"))?;
        Ok(OracleCaps { max_binaries, max_integer_domain })
    }
}

/// Number of integer assignments the oracle may have to visit, and the
/// number of general (non-binary) integer columns.
pub fn combination_count(problem: &MilpProblem) -> (u128, usize) {
    let n = problem.columns.len();
    let is_binary: Vec<bool> = problem
        .columns
        .iter()
        .map(|c| c.integrality != Integrality::Continuous && c.lower >= 0.0 && c.upper <= 1.0 && c.lower < c.upper)
        .collect();
    let mut grouped = vec![false; n];
    let mut count: u128 = 1;
    for r in &problem.rows {
        let exactly_one = r.relation == Relation::Eq
            && r.rhs == 1.0
            && !r.terms.is_empty()
            && r.terms.iter().all(|&(j, a)| a == 1.0 && is_binary[j] && !grouped[j]);
        if exactly_one {
            for &(j, _) in &r.terms {
                grouped[j] = true;
            }
            count = count.saturating_mul(r.terms.len() as u128);
        }
    }
    let mut general = 0;
    for (j, c) in problem.columns.iter().enumerate() {
        if c.integrality == Integrality::Continuous || grouped[j] {
            continue;
        }
        if is_binary[j] {
            count = count.saturating_mul(2);
        } else if c.integrality == Integrality::Integer || c.integrality == Integrality::Binary {
            let domain = (c.upper.floor() - c.lower.ceil() + 1.0).max(1.0);
            if domain > 1.0 {
                general += 1;
            }
            count = count.saturating_mul(if domain.is_finite() && domain < 1e30 { domain as u128 } else { u128::MAX });
        }
    }
    (count, general)
}

pub struct OracleBackend;

impl MilpBackend for OracleBackend {
    fn id(&self) -> &'static str {
        "oracle"
    }

    fn solve(&self, problem: &MilpProblem, options: &SolveOptions) -> Result<SolveOutcome, SolveError> {
        oracle_solve(problem, &options.oracle_caps, Some(Duration::from_secs_f64(options.time_limit_s)))
    }
}

/// Exact solve by implicit enumeration; fails with `EnumerationTooLarge` when
/// the combination count exceeds `caps`.
pub fn oracle_solve(
    problem: &MilpProblem,
    caps: &OracleCaps,
    time_limit: Option<Duration>,
) -> Result<SolveOutcome, SolveError> {
    let started = Instant::now();
    problem.check_structure()?;
    let (combinations, general) = combination_count(problem);
    let cap = caps.cap(general);
    if combinations > cap {
        return Err(SolveError::EnumerationTooLarge { combinations, cap });
    }

    let n = problem.columns.len();
    let mut col_rows = vec![Vec::new(); n];
    for (i, r) in problem.rows.iter().enumerate() {
        for &(j, _) in &r.terms {
            if col_rows[j].last() != Some(&i) {
                col_rows[j].push(i);
            }
        }
    }
    let is_int: Vec<bool> = problem.columns.iter().map(|c| c.integrality != Integrality::Continuous).collect();
    let dom: Vec<(f64, f64)> = problem
        .columns
        .iter()
        .map(|c| match c.integrality {
            Integrality::Continuous => (c.lower, c.upper),
            _ => ((c.lower - INT_TOL).ceil(), (c.upper + INT_TOL).floor()),
        })
        .collect();
    let mut search = Search {
        problem,
        costs: problem.dense_costs(),
        col_rows,
        is_int,
        deadline: time_limit.map(|t| started + t),
        nodes: 0,
        lps: 0,
        row_mark: vec![0; problem.rows.len()],
        mark_epoch: 0,
    };
    let all: Vec<usize> = (0..n).collect();
    let result = search.search(dom, &all, f64::INFINITY);
    let diagnostics = vec![
        ("combinations".to_string(), combinations.to_string()),
        ("nodes".to_string(), search.nodes.to_string()),
        ("lp_solves".to_string(), search.lps.to_string()),
    ];
    let status = match result {
        Ok(Some(found)) => {
            let mut values = vec![0.0; n];
            for (j, v) in found.assignment {
                values[j] = v;
            }
            let objective = problem.objective_value(&values);
            return Ok(SolveOutcome {
                status: SolveStatus::Optimal,
                values: Some(values),
                objective: Some(objective),
                bound: Some(objective),
                wall_time_s: started.elapsed().as_secs_f64(),
                backend: "oracle".into(),
                diagnostics,
            });
        }
        Ok(None) => SolveStatus::Infeasible,
        Err(Abort::Unbounded) => SolveStatus::Unbounded,
        Err(Abort::Time) => SolveStatus::TimeLimit,
        Err(Abort::Lp) => {
            return Err(SolveError::NumericalFailure {
                backend: "oracle".into(),
                message: "simplex iteration limit".into(),
            })
        }
    };
    let mut out = SolveOutcome::without_solution(status, "oracle", started);
    out.diagnostics = diagnostics;
    Ok(out)
}

enum Abort {
    Unbounded,
    Time,
    Lp,
}

struct Found {
    value: f64,
    assignment: Vec<(usize, f64)>,
}

type Domains = Vec<(f64, f64)>;

struct Search<'a> {
    problem: &'a MilpProblem,
    costs: Vec<f64>,
    col_rows: Vec<Vec<usize>>,
    is_int: Vec<bool>,
    deadline: Option<Instant>,
    nodes: u64,
    lps: u64,
    row_mark: Vec<u64>,
    mark_epoch: u64,
}

impl Search<'_> {
    fn rows_touching(&mut self, cols: &[usize]) -> Vec<usize> {
        self.mark_epoch += 1;
        let mut rows = Vec::new();
        for &j in cols {
            for &i in &self.col_rows[j] {
                if self.row_mark[i] != self.mark_epoch {
                    self.row_mark[i] = self.mark_epoch;
                    rows.push(i);
                }
            }
        }
        rows.sort_unstable();
        rows
    }

    /// Optimum of the costs of `comp` over the rows touching it, all other
    /// columns held at their (fixed) domain values. `None` when infeasible
    /// or when nothing beats `cutoff`.
    fn search(&mut self, mut dom: Domains, comp: &[usize], cutoff: f64) -> Result<Option<Found>, Abort> {
        self.nodes += 1;
        if self.deadline.is_some_and(|d| Instant::now() > d) {
            return Err(Abort::Time);
        }
        let rows = self.rows_touching(comp);
        if !self.propagate(&mut dom, &rows) {
            return Ok(None);
        }

        let (fixed, free): (Vec<usize>, Vec<usize>) = comp.iter().partition(|&&j| dom[j].0 == dom[j].1);
        let constant: f64 = fixed.iter().map(|&j| self.costs[j] * dom[j].0).sum();
        let mut assignment: Vec<(usize, f64)> = fixed.iter().map(|&j| (j, dom[j].0)).collect();
        if free.is_empty() {
            return Ok((constant < cutoff).then_some(Found { value: constant, assignment }));
        }

        let parts = self.components(&free, &rows);
        if parts.len() > 1 {
            let mut total = constant;
            // an infeasible block outranks an unbounded one
            let mut unbounded = false;
            for part in parts {
                match self.search(dom.clone(), &part, f64::INFINITY) {
                    Ok(Some(f)) => {
                        total += f.value;
                        assignment.extend(f.assignment);
                    }
                    Ok(None) => return Ok(None),
                    Err(Abort::Unbounded) => unbounded = true,
                    Err(e) => return Err(e),
                }
            }
            if unbounded {
                return Err(Abort::Unbounded);
            }
            return Ok((total < cutoff).then_some(Found { value: total, assignment }));
        }

        // single block: bound with the LP relaxation, then branch
        let lp_rows = self.rows_touching(&free);
        self.lps += 1;
        let (status, x, lp_obj) = self.relaxation(&dom, &free, &lp_rows);
        let free_ints: Vec<usize> = (0..free.len()).filter(|&k| self.is_int[free[k]]).collect();
        let lp_value = match status {
            LpStatus::Infeasible => return Ok(None),
            LpStatus::IterationLimit => return Err(Abort::Lp),
            LpStatus::Unbounded if free_ints.is_empty() => return Err(Abort::Unbounded),
            LpStatus::Unbounded => f64::NEG_INFINITY,
            LpStatus::Optimal => constant + lp_obj,
        };
        if lp_value >= cutoff - 1e-9 * cutoff.abs().max(1.0) {
            return Ok(None);
        }
        let fractional = free_ints.iter().copied().find(|&k| (x[k] - x[k].round()).abs() > INT_TOL);
        if status == LpStatus::Optimal && fractional.is_none() {
            for (k, &j) in free.iter().enumerate() {
                let v = if self.is_int[j] { x[k].round() } else { x[k] };
                assignment.push((j, v));
            }
            let value = constant + free.iter().zip(&assignment[fixed.len()..]).map(|(&j, &(_, v))| self.costs[j] * v).sum::<f64>();
            return Ok(Some(Found { value, assignment }));
        }

        let k = fractional.unwrap_or(free_ints[0]);
        let j = free[k];
        let target = if status == LpStatus::Optimal { x[k] } else { dom[j].0 };
        let mut values: Vec<f64> = (dom[j].0 as i64..=dom[j].1 as i64).map(|v| v as f64).collect();
        values.sort_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()).then(a.total_cmp(b)));
        let mut best: Option<Found> = None;
        let mut bound = cutoff;
        for v in values {
            let mut child = dom.clone();
            child[j] = (v, v);
            if let Some(f) = self.search(child, &free, bound - constant)? {
                bound = constant + f.value;
                best = Some(f);
            }
        }
        Ok(best.map(|f| {
            assignment.extend(f.assignment);
            Found { value: constant + f.value, assignment }
        }))
    }

    /// Interval propagation over `rows`, tightening integer domains only.
    /// Returns false when some row cannot be satisfied.
    fn propagate(&self, dom: &mut Domains, rows: &[usize]) -> bool {
        for _ in 0..20 {
            let mut changed = false;
            for &i in rows {
                let r = &self.problem.rows[i];
                let (mut min_fin, mut min_inf, mut max_fin, mut max_inf) = (0.0, 0, 0.0, 0);
                for &(j, a) in &r.terms {
                    let (lo, hi) = contribution(a, dom[j]);
                    if lo.is_finite() { min_fin += lo } else { min_inf += 1 }
                    if hi.is_finite() { max_fin += hi } else { max_inf += 1 }
                }
                let tol = FEAS_TOL * r.rhs.abs().max(1.0);
                let upper_side = matches!(r.relation, Relation::Le | Relation::Eq);
                let lower_side = matches!(r.relation, Relation::Ge | Relation::Eq);
                if upper_side && min_inf == 0 && min_fin > r.rhs + tol {
                    return false;
                }
                if lower_side && max_inf == 0 && max_fin < r.rhs - tol {
                    return false;
                }
                for &(j, a) in &r.terms {
                    if !self.is_int[j] || dom[j].0 == dom[j].1 || a == 0.0 {
                        continue;
                    }
                    let (lo_j, hi_j) = contribution(a, dom[j]);
                    let (mut l, mut u) = dom[j];
                    if upper_side {
                        let rest = rest_sum(min_fin, min_inf, lo_j);
                        if let Some(rest) = rest {
                            let limit = (r.rhs - rest) / a;
                            if a > 0.0 {
                                u = u.min((limit + INT_TOL).floor());
                            } else {
                                l = l.max((limit - INT_TOL).ceil());
                            }
                        }
                    }
                    if lower_side {
                        let rest = rest_sum(max_fin, max_inf, hi_j);
                        if let Some(rest) = rest {
                            let limit = (r.rhs - rest) / a;
                            if a > 0.0 {
                                l = l.max((limit - INT_TOL).ceil());
                            } else {
                                u = u.min((limit + INT_TOL).floor());
                            }
                        }
                    }
                    if l > u {
                        return false;
                    }
                    if (l, u) != dom[j] {
                        dom[j] = (l, u);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        true
    }

    fn components(&self, free: &[usize], rows: &[usize]) -> Vec<Vec<usize>> {
        let n = self.problem.columns.len();
        let mut local = vec![usize::MAX; n];
        for (k, &j) in free.iter().enumerate() {
            local[j] = k;
        }
        let mut parent: Vec<usize> = (0..free.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &i in rows {
            let mut first = None;
            for &(j, _) in &self.problem.rows[i].terms {
                let k = local[j];
                if k == usize::MAX {
                    continue;
                }
                match first {
                    None => first = Some(k),
                    Some(f) => {
                        let (a, b) = (find(&mut parent, f), find(&mut parent, k));
                        if a != b {
                            parent[a.max(b)] = a.min(b);
                        }
                    }
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; free.len()];
        for (k, &j) in free.iter().enumerate() {
            let root = find(&mut parent, k);
            if slot[root] == usize::MAX {
                slot[root] = groups.len();
                groups.push(Vec::new());
            }
            groups[slot[root]].push(j);
        }
        groups
    }

    /// LP over the free columns, every other column at its fixed value.
    fn relaxation(&self, dom: &Domains, free: &[usize], rows: &[usize]) -> (LpStatus, Vec<f64>, f64) {
        let n = self.problem.columns.len();
        let mut local = vec![usize::MAX; n];
        for (k, &j) in free.iter().enumerate() {
            local[j] = k;
        }
        let lp_rows = rows
            .iter()
            .map(|&i| {
                let r = &self.problem.rows[i];
                let mut rhs = r.rhs;
                let mut terms = Vec::with_capacity(r.terms.len());
                for &(j, a) in &r.terms {
                    match local[j] {
                        usize::MAX => rhs -= a * dom[j].0,
                        k => terms.push((k, a)),
                    }
                }
                (terms, r.relation, rhs)
            })
            .collect();
        let lp = DenseLp {
            costs: free.iter().map(|&j| self.costs[j]).collect(),
            lower: free.iter().map(|&j| dom[j].0).collect(),
            upper: free.iter().map(|&j| dom[j].1).collect(),
            rows: lp_rows,
        };
        let s = solve_lp(&lp);
        (s.status, s.x, s.objective)
    }
}

fn contribution(a: f64, (l, u): (f64, f64)) -> (f64, f64) {
    let (x, y) = (a * l, a * u);
    let (lo, hi) = if a >= 0.0 { (x, y) } else { (y, x) };
    // 0 * inf is NaN; a zero coefficient contributes nothing
    if a == 0.0 {
        (0.0, 0.0)
    } else {
        (lo, hi)
    }
}

/// Sum of the other terms' extreme contributions, if finite.
fn rest_sum(finite: f64, infinite: usize, own: f64) -> Option<f64> {
    match (infinite, own.is_finite()) {
        (0, _) => Some(finite - own),
        (1, false) => Some(finite),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Column, ConstraintFamily, Row, Var};

    fn col(i: usize, integrality: Integrality, lower: f64, upper: f64) -> Column {
        Column { var: Var::PvUnits { tech: i }, lower, upper, integrality }
    }

    fn row(terms: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> Row {
        Row { terms, relation, rhs, family: ConstraintFamily::PowerBalance, label: String::new() }
    }

    /// Plain enumeration of every integer point, for problems without
    /// continuous columns.
    fn brute_force(p: &MilpProblem) -> Option<f64> {
        let n = p.columns.len();
        let mut best: Option<f64> = None;
        let mut x: Vec<f64> = p.columns.iter().map(|c| c.lower).collect();
        loop {
            if p.max_violation(&x) <= 1e-9 {
                let v = p.objective_value(&x);
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
            let mut k = 0;
            loop {
                if k == n {
                    return best;
                }
                if x[k] < p.columns[k].upper {
                    x[k] += 1.0;
                    break;
                }
                x[k] = p.columns[k].lower;
                k += 1;
            }
        }
    }

    #[test]
    fn knapsack_matches_brute_force() {
        // max 5a + 4b + 3c, 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8
        let p = MilpProblem {
            columns: (0..3).map(|i| col(i, Integrality::Integer, 0.0, 3.0)).collect(),
            rows: vec![
                row(vec![(0, 2.0), (1, 3.0), (2, 1.0)], Relation::Le, 5.0),
                row(vec![(0, 4.0), (1, 1.0), (2, 2.0)], Relation::Le, 11.0),
                row(vec![(0, 3.0), (1, 4.0), (2, 2.0)], Relation::Le, 8.0),
            ],
            objective: vec![(0, -5.0), (1, -4.0), (2, -3.0)],
            objective_offset: 0.0,
        };
        let out = oracle_solve(&p, &OracleCaps::default(), None).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert_eq!(out.objective, brute_force(&p));
    }

    #[test]
    fn mixed_problem_and_infeasible() {
        // min y - x, y >= 1.5 x, y continuous, x in {0..3}, y <= 4
        let p = MilpProblem {
            columns: vec![col(0, Integrality::Integer, 0.0, 3.0), col(1, Integrality::Continuous, 0.0, 4.0)],
            rows: vec![row(vec![(1, 1.0), (0, -1.5)], Relation::Ge, 0.0)],
            objective: vec![(0, -1.0), (1, 1.0)],
            objective_offset: 0.0,
        };
        let out = oracle_solve(&p, &OracleCaps::default(), None).unwrap();
        // y = 1.5x at the optimum, so the cost is 0.5x and x = 0 wins
        assert!((out.objective.unwrap() - 0.0).abs() < 1e-9);
        let mut q = p.clone();
        q.rows.push(row(vec![(0, 1.0)], Relation::Ge, 3.0));
        // x = 3 needs y >= 4.5 > 4
        let out = oracle_solve(&q, &OracleCaps::default(), None).unwrap();
        assert_eq!(out.status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_continuous_part() {
        let p = MilpProblem {
            columns: vec![col(0, Integrality::Binary, 0.0, 1.0), col(1, Integrality::Continuous, 0.0, f64::INFINITY)],
            rows: vec![row(vec![(1, 1.0), (0, -1.0)], Relation::Ge, 0.0)],
            objective: vec![(1, -1.0)],
            objective_offset: 0.0,
        };
        let out = oracle_solve(&p, &OracleCaps::default(), None).unwrap();
        assert_eq!(out.status, SolveStatus::Unbounded);
    }

    #[test]
    fn infeasible_block_outranks_unbounded_block() {
        let p = MilpProblem {
            columns: vec![
                col(0, Integrality::Continuous, f64::NEG_INFINITY, f64::INFINITY),
                col(1, Integrality::Continuous, -2.0, 7.0),
            ],
            rows: vec![row(vec![(1, 3.0)], Relation::Eq, 3.0), row(vec![(1, -2.0)], Relation::Ge, 3.0)],
            objective: vec![(0, 1.0), (1, 1.0)],
            objective_offset: 0.0,
        };
        let out = oracle_solve(&p, &OracleCaps::default(), None).unwrap();
        assert_eq!(out.status, SolveStatus::Infeasible);
    }

    #[test]
    fn cap_counts_exactly_one_groups() {
        let mut p = MilpProblem {
            columns: (0..30).map(|i| col(i, Integrality::Binary, 0.0, 1.0)).collect(),
            ..Default::default()
        };
        assert_eq!(combination_count(&p), (1 << 30, 0));
        assert!(matches!(
            oracle_solve(&p, &OracleCaps::default(), None),
            Err(SolveError::EnumerationTooLarge { combinations, .. }) if combinations == 1 << 30
        ));
        p.rows.push(row((0..10).map(|j| (j, 1.0)).collect(), Relation::Eq, 1.0));
        assert_eq!(combination_count(&p).0, 10 << 20);
        p.columns.push(col(0, Integrality::Integer, 0.0, 3.0));
        assert_eq!(combination_count(&p), (40 << 20, 1));
        assert!(oracle_solve(&p, &OracleCaps::default(), None).is_err());
        let wider = OracleCaps { max_binaries: 24, max_integer_domain: 4 };
        assert_eq!(oracle_solve(&p, &wider, None).unwrap().status, SolveStatus::Optimal);
        let caps: OracleCaps = "10,2".parse().unwrap();
        assert_eq!(caps, OracleCaps { max_binaries: 10, max_integer_domain: 2 });
        assert!("10".parse::<OracleCaps>().is_err());
    }

    #[test]
    fn independent_blocks_are_summed() {
        // two copies of: min -x - y, x + y <= 1.5, x,y in {0,1}; linked by nothing
        let mut columns = Vec::new();
        let mut rows = Vec::new();
        for b in 0..2 {
            columns.push(col(2 * b, Integrality::Binary, 0.0, 1.0));
            columns.push(col(2 * b + 1, Integrality::Binary, 0.0, 1.0));
            rows.push(row(vec![(2 * b, 1.0), (2 * b + 1, 1.0)], Relation::Le, 1.5));
        }
        let p = MilpProblem { columns, rows, objective: (0..4).map(|j| (j, -1.0)).collect(), objective_offset: 0.0 };
        let out = oracle_solve(&p, &OracleCaps::default(), None).unwrap();
        assert_eq!(out.objective, Some(-2.0));
        assert_eq!(brute_force(&p), Some(-2.0));
    }
}
