//! Dense two-phase tableau simplex for the small linear programs the
//! reference solver produces. No presolve, no scaling; Dantzig pricing with a
//! fall-back to Bland's rule when progress stalls.

use crate::model::Relation;

const PIVOT_TOL: f64 = 1e-9;
const ZERO_TOL: f64 = 1e-12;
const STALL_LIMIT: usize = 50;
const MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
}

/// `(terms, relation, rhs)`
pub type SparseRow = (Vec<(usize, f64)>, Relation, f64);

/// `min costs·x` subject to `rows` and `lower <= x <= upper`; bounds may be
/// infinite.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DenseLp {
    pub costs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<SparseRow>,
}

/// How an original variable is expressed in non-negative tableau columns.
#[derive(Clone, Copy)]
enum Map {
    /// x = l + y
    Shift(f64, usize),
    /// x = u - y
    Mirror(f64, usize),
    /// x = y+ - y-
    Split(usize, usize),
}

struct Tableau {
    rows: usize,
    width: usize,
    a: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, i: usize, k: usize) -> f64 {
        self.a[i * self.width + k]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.a[i * self.width + self.width - 1]
    }

    fn pivot(&mut self, r: usize, k: usize) {
        let w = self.width;
        let p = self.a[r * w + k];
        for v in &mut self.a[r * w..(r + 1) * w] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.a[r * w..(r + 1) * w].to_vec();
        // includes the objective row at index `rows`
        for i in 0..=self.rows {
            if i == r {
                continue;
            }
            let f = self.a[i * w + k];
            if f == 0.0 {
                continue;
            }
            for (v, &pv) in self.a[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                *v -= f * pv;
                if v.abs() < ZERO_TOL {
                    *v = 0.0;
                }
            }
        }
        self.basis[r] = k;
    }

    /// Loads `cost` into the objective row and prices out the basis.
    fn set_objective(&mut self, cost: &[f64]) {
        let w = self.width;
        let m = self.rows;
        for k in 0..w {
            self.a[m * w + k] = if k < cost.len() { cost[k] } else { 0.0 };
        }
        for i in 0..m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for k in 0..w {
                    self.a[m * w + k] -= cb * self.a[i * w + k];
                }
            }
        }
    }

    /// Minimizes the loaded objective over columns `< allowed`.
    fn optimize(&mut self, allowed: usize) -> LpStatus {
        let m = self.rows;
        let mut stalled = 0;
        let mut last = f64::INFINITY;
        for _ in 0..MAX_ITERATIONS {
            let bland = stalled > STALL_LIMIT;
            let mut enter = None;
            let mut best = -PIVOT_TOL;
            for k in 0..allowed {
                let d = self.at(m, k);
                if d < best {
                    enter = Some(k);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(k) = enter else { return LpStatus::Optimal };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let aik = self.at(i, k);
                if aik > PIVOT_TOL {
                    let ratio = self.rhs(i) / aik;
                    let better = match leave {
                        None => true,
                        Some((r, best)) => {
                            ratio < best - ZERO_TOL || (ratio <= best + ZERO_TOL && self.basis[i] < self.basis[r])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else { return LpStatus::Unbounded };
            self.pivot(r, k);
            let obj = -self.rhs(m);
            if obj < last - 1e-12 {
                stalled = 0;
                last = obj;
            } else {
                stalled += 1;
            }
        }
        LpStatus::IterationLimit
    }
}

pub fn solve_lp(lp: &DenseLp) -> LpSolution {
    let n = lp.costs.len();
    let fail = |status| LpSolution { status, x: vec![0.0; n], objective: f64::NAN };

    let mut maps = Vec::with_capacity(n);
    let mut ny = 0;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        if l > u {
            return fail(LpStatus::Infeasible);
        }
        let m = if l.is_finite() {
            if u.is_finite() {
                bound_rows.push((ny, u - l));
            }
            Map::Shift(l, ny)
        } else if u.is_finite() {
            Map::Mirror(u, ny)
        } else {
            ny += 1;
            Map::Split(ny - 1, ny)
        };
        ny += 1;
        maps.push(m);
    }

    // rows over y: (terms, relation, rhs)
    let mut std_rows: Vec<SparseRow> = Vec::new();
    for (terms, rel, rhs) in &lp.rows {
        let mut b = *rhs;
        let mut t = Vec::with_capacity(terms.len());
        for &(j, a) in terms {
            match maps[j] {
                Map::Shift(l, y) => {
                    b -= a * l;
                    t.push((y, a));
                }
                Map::Mirror(u, y) => {
                    b -= a * u;
                    t.push((y, -a));
                }
                Map::Split(p, q) => {
                    t.push((p, a));
                    t.push((q, -a));
                }
            }
        }
        if t.iter().all(|&(_, a)| a == 0.0) {
            let tol = 1e-9 * b.abs().max(1.0);
            let ok = match rel {
                Relation::Le => 0.0 <= b + tol,
                Relation::Ge => 0.0 >= b - tol,
                Relation::Eq => b.abs() <= tol,
            };
            if !ok {
                return fail(LpStatus::Infeasible);
            }
            continue;
        }
        std_rows.push((t, *rel, b));
    }
    for &(y, span) in &bound_rows {
        std_rows.push((vec![(y, 1.0)], Relation::Le, span));
    }

    let m = std_rows.len();
    let slacks = std_rows.iter().filter(|r| r.1 != Relation::Eq).count();
    // an artificial is needed unless the row has a +1 slack after sign normalization
    let needs_art: Vec<bool> = std_rows
        .iter()
        .map(|(_, rel, b)| match rel {
            Relation::Le => *b < 0.0,
            Relation::Ge => *b > 0.0,
            Relation::Eq => true,
        })
        .collect();
    let arts = needs_art.iter().filter(|&&x| x).count();
    let width = ny + slacks + arts + 1;
    let mut tab = Tableau { rows: m, width, a: vec![0.0; (m + 1) * width], basis: vec![0; m] };
    let (mut s_next, mut a_next) = (ny, ny + slacks);
    for (i, (terms, rel, b)) in std_rows.iter().enumerate() {
        // a `>= 0` row is negated so its slack enters with +1
        let sign = if *b < 0.0 || (*rel == Relation::Ge && *b == 0.0) { -1.0 } else { 1.0 };
        for &(y, a) in terms {
            tab.a[i * width + y] += sign * a;
        }
        tab.a[i * width + width - 1] = sign * b;
        let slack_coef = match rel {
            Relation::Le => Some(1.0),
            Relation::Ge => Some(-1.0),
            Relation::Eq => None,
        };
        if let Some(c) = slack_coef {
            tab.a[i * width + s_next] = sign * c;
            if !needs_art[i] {
                tab.basis[i] = s_next;
            }
            s_next += 1;
        }
        if needs_art[i] {
            tab.a[i * width + a_next] = 1.0;
            tab.basis[i] = a_next;
            a_next += 1;
        }
    }

    let structural = ny + slacks;
    if arts > 0 {
        let mut cost = vec![0.0; width - 1];
        for c in &mut cost[structural..] {
            *c = 1.0;
        }
        tab.set_objective(&cost);
        match tab.optimize(width - 1) {
            LpStatus::Optimal => {}
            s => return fail(s),
        }
        let scale = std_rows.iter().map(|r| r.2.abs()).fold(1.0, f64::max);
        if -tab.rhs(m) > 1e-9 * scale {
            return fail(LpStatus::Infeasible);
        }
        // drive remaining artificials out; rows where that is impossible are redundant
        let mut redundant = Vec::new();
        for i in 0..m {
            if tab.basis[i] >= structural {
                match (0..structural).find(|&k| tab.at(i, k).abs() > PIVOT_TOL) {
                    Some(k) => tab.pivot(i, k),
                    None => redundant.push(i),
                }
            }
        }
        for i in redundant {
            for k in 0..width {
                tab.a[i * width + k] = 0.0;
            }
            // keep the artificial basic at zero; it can never re-enter
            tab.a[i * width + tab.basis[i]] = 1.0;
        }
    }

    let mut cost = vec![0.0; width - 1];
    for (j, &c) in lp.costs.iter().enumerate() {
        match maps[j] {
            Map::Shift(_, y) => cost[y] += c,
            Map::Mirror(_, y) => cost[y] -= c,
            Map::Split(p, q) => {
                cost[p] += c;
                cost[q] -= c;
            }
        }
    }
    tab.set_objective(&cost);
    let status = tab.optimize(structural);
    if status != LpStatus::Optimal {
        return fail(status);
    }
    let mut y = vec![0.0; width - 1];
    for i in 0..m {
        y[tab.basis[i]] = tab.rhs(i);
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            Map::Shift(l, k) => l + y[k],
            Map::Mirror(u, k) => u - y[k],
            Map::Split(p, q) => y[p] - y[q],
        })
        .collect();
    let objective = lp.costs.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>();
    LpSolution { status: LpStatus::Optimal, x, objective }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lp(costs: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>, rows: Vec<SparseRow>) -> DenseLp {
        DenseLp { costs, lower, upper, rows }
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let p = lp(
            vec![-3.0, -5.0],
            vec![0.0, 0.0],
            vec![4.0, f64::INFINITY],
            vec![(vec![(1, 2.0)], Relation::Le, 12.0), (vec![(0, 3.0), (1, 2.0)], Relation::Le, 18.0)],
        );
        let s = solve_lp(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn free_and_mirrored_variables() {
        // min x - y with x free, y <= 3, x + y = 1, x >= -10 via row
        let p = lp(
            vec![1.0, -1.0],
            vec![f64::NEG_INFINITY, f64::NEG_INFINITY],
            vec![f64::INFINITY, 3.0],
            vec![(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 1.0), (vec![(0, 1.0)], Relation::Ge, -10.0)],
        );
        let s = solve_lp(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] + 2.0).abs() < 1e-9, "{:?}", s.x);
        assert!((s.objective + 5.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let p = lp(vec![1.0], vec![0.0], vec![1.0], vec![(vec![(0, 1.0)], Relation::Ge, 2.0)]);
        assert_eq!(solve_lp(&p).status, LpStatus::Infeasible);
        let p = lp(vec![-1.0], vec![0.0], vec![f64::INFINITY], vec![]);
        assert_eq!(solve_lp(&p).status, LpStatus::Unbounded);
        let p = lp(vec![0.0], vec![0.0], vec![0.0], vec![(vec![(0, 0.0)], Relation::Ge, 1.0)]);
        assert_eq!(solve_lp(&p).status, LpStatus::Infeasible);
    }

    #[test]
    fn redundant_equalities() {
        let p = lp(
            vec![1.0, 1.0],
            vec![0.0, 0.0],
            vec![f64::INFINITY, f64::INFINITY],
            vec![
                (vec![(0, 1.0), (1, 1.0)], Relation::Eq, 2.0),
                (vec![(0, 2.0), (1, 2.0)], Relation::Eq, 4.0),
            ],
        );
        let s = solve_lp(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 2.0).abs() < 1e-9);
    }

    proptest! {
        /// Box-constrained problems have a closed-form optimum.
        #[test]
        fn box_optimum(c in prop::collection::vec(-5.0f64..5.0, 1..6), w in prop::collection::vec(0.0f64..3.0, 6)) {
            let n = c.len();
            let lower: Vec<f64> = (0..n).map(|j| -w[j]).collect();
            let upper: Vec<f64> = (0..n).map(|j| w[j] * 2.0).collect();
            let expected: f64 = (0..n).map(|j| if c[j] < 0.0 { c[j] * upper[j] } else { c[j] * lower[j] }).sum();
            let s = solve_lp(&lp(c.clone(), lower, upper, vec![]));
            prop_assert_eq!(s.status, LpStatus::Optimal);
            prop_assert!((s.objective - expected).abs() < 1e-8);
        }

        /// Primal feasibility and agreement with a vertex enumeration over two variables.
        #[test]
        fn two_variable_vertex_enumeration(
            c in prop::collection::vec(-3.0f64..3.0, 2),
            rows in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0, 0.5f64..4.0), 1..4),
        ) {
            let p = lp(
                c.clone(),
                vec![0.0, 0.0],
                vec![5.0, 5.0],
                rows.iter().map(|&(a, b, r)| (vec![(0, a), (1, b)], Relation::Le, r)).collect(),
            );
            // candidate lines: rows, plus box edges
            let mut lines: Vec<(f64, f64, f64)> = rows.clone();
            lines.extend([(1.0, 0.0, 0.0), (1.0, 0.0, 5.0), (0.0, 1.0, 0.0), (0.0, 1.0, 5.0)]);
            let feasible = |x: f64, y: f64| {
                (-1e-9..=5.0 + 1e-9).contains(&x)
                    && (-1e-9..=5.0 + 1e-9).contains(&y)
                    && rows.iter().all(|&(a, b, r)| a * x + b * y <= r + 1e-9)
            };
            let mut best = f64::INFINITY;
            for i in 0..lines.len() {
                for k in i + 1..lines.len() {
                    let (a1, b1, r1) = lines[i];
                    let (a2, b2, r2) = lines[k];
                    let det = a1 * b2 - a2 * b1;
                    if det.abs() < 1e-9 { continue; }
                    let x = (r1 * b2 - r2 * b1) / det;
                    let y = (a1 * r2 - a2 * r1) / det;
                    if feasible(x, y) {
                        best = best.min(c[0] * x + c[1] * y);
                    }
                }
            }
            let s = solve_lp(&p);
            // origin is always feasible since every rhs is positive
            prop_assert_eq!(s.status, LpStatus::Optimal);
            prop_assert!((s.objective - best).abs() < 1e-7, "{} vs {}", s.objective, best);
            prop_assert!(feasible(s.x[0], s.x[1]));
        }
    }
}
