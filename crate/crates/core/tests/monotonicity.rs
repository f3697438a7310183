mod common;

use ceh_sizing::solve::SolveStatus;
use ceh_sizing::synthetic::medium_instance;
use common::*;

/// Withdrawal-limit multipliers, loosest first.
pub const STEPS: [f64; 5] = [1.0, 0.55, 0.4, 0.3, 0.2];

#[test]
fn tighter_withdrawal_limits_never_lower_the_cost() {
    let opts = highs_opts();
    let mut previous: Option<f64> = None;
    let mut rose = false;
    for scale in STEPS {
        let inputs = medium_instance(5, 6, scale);
        let out = run(&inputs, &opts).outcome;
        let objective = match out.status {
            SolveStatus::Optimal => out.objective.unwrap(),
            SolveStatus::Infeasible => f64::INFINITY,
            other => panic!("scale {scale}: {other:?}"),
        };
        if let Some(p) = previous {
            assert!(objective >= p - REL_TOL * p.abs().max(1.0), "scale {scale}: {objective} < {p}");
            rose |= objective > p + REL_TOL * p.abs().max(1.0);
        }
        previous = Some(objective);
    }
    // otherwise the limit never binds and the check says nothing
    assert!(rose, "withdrawal limit never binds");
}
