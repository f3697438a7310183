//! The exhaustive solver's LP core against HiGHS on random continuous
//! problems (no integer columns, so the oracle is a single simplex solve).

use ceh_sizing::model::{Column, ConstraintFamily, Integrality, MilpProblem, Relation, Row, Var};
use ceh_sizing::solve::{relative_gap, solve, OracleCaps, SolveOptions, SolveStatus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_lp(seed: u64) -> MilpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..8);
    let m = rng.gen_range(1..8);
    let columns = (0..n)
        .map(|j| {
            let lower = if rng.gen_bool(0.2) { f64::NEG_INFINITY } else { rng.gen_range(-5.0..0.0) };
            let upper = if rng.gen_bool(0.2) { f64::INFINITY } else { rng.gen_range(1.0..10.0) };
            Column { var: Var::Grid { scenario: 0, slot: j }, lower, upper, integrality: Integrality::Continuous }
        })
        .collect();
    let rows = (0..m)
        .map(|i| {
            let mut terms = Vec::new();
            for j in 0..n {
                let a = rng.gen_range(-3.0..3.0_f64).round();
                if rng.gen_bool(0.7) && a != 0.0 {
                    terms.push((j, a));
                }
            }
            if terms.is_empty() {
                terms.push((i % n, 1.0));
            }
            let relation = [Relation::Le, Relation::Ge, Relation::Eq][rng.gen_range(0..3)];
            Row { terms, relation, rhs: rng.gen_range(-5.0..5.0_f64).round(), family: ConstraintFamily::PowerBalance, label: format!("r{i}") }
        })
        .collect();
    let objective = (0..n).map(|j| (j, rng.gen_range(-2.0..2.0))).collect();
    MilpProblem { columns, rows, objective, objective_offset: rng.gen_range(-1.0..1.0) }
}

#[test]
fn simplex_agrees_with_highs_on_random_lps() {
    let opts = SolveOptions {
        relative_gap: 1e-9,
        time_limit_s: 30.0,
        threads: Some(1),
        seed: 0,
        backend_id: "highs".into(),
        oracle_caps: OracleCaps::default(),
    };
    let oracle = SolveOptions { backend_id: "oracle".into(), ..opts.clone() };
    let mut optimal = 0;
    for seed in 0..300 {
        let p = random_lp(seed);
        let h = solve(&p, &opts).unwrap();
        let o = solve(&p, &oracle).unwrap();
        assert_eq!(h.status, o.status, "seed {seed}");
        if h.status == SolveStatus::Optimal {
            optimal += 1;
            let (a, b) = (h.objective.unwrap(), o.objective.unwrap());
            assert!(relative_gap(a, b) <= 1e-7, "seed {seed}: {a} vs {b}");
            assert!(p.max_violation(o.values.as_ref().unwrap()) <= 1e-7);
        }
    }
    assert!(optimal >= 50, "{optimal} optimal");
}

