use std::num::NonZeroU32;
use std::time::Instant;

use highs::{HighsModelStatus, HighsSolutionStatus, RowProblem, Sense};

use super::{MilpBackend, SolveError, SolveOptions, SolveOutcome, SolveStatus};
use crate::model::{Integrality, MilpProblem, Relation};

pub struct HighsBackend;

impl HighsBackend {
    fn run(problem: &MilpProblem, options: &SolveOptions, presolve: bool) -> Result<highs::SolvedModel, SolveError> {
        let mut pb = RowProblem::default();
        let costs = problem.dense_costs();
        let cols: Vec<_> = problem
            .columns
            .iter()
            .zip(&costs)
            .map(|(c, &cost)| {
                pb.add_column_with_integrality(cost, c.lower..=c.upper, c.integrality != Integrality::Continuous)
            })
            .collect();
        for r in &problem.rows {
            let terms = r.terms.iter().map(|&(j, a)| (cols[j], a));
            match r.relation {
                Relation::Le => pb.add_row(..=r.rhs, terms),
                Relation::Ge => pb.add_row(r.rhs.., terms),
                Relation::Eq => pb.add_row(r.rhs..=r.rhs, terms),
            }
        }
        let mut model = pb.try_optimise(Sense::Minimise).map_err(|e| failure(format!("{e:?}")))?;
        model.set_option("mip_rel_gap", options.relative_gap);
        model.set_option("time_limit", options.time_limit_s);
        model.set_option("random_seed", (options.seed % i32::MAX as u64) as i32);
        if !presolve {
            model.set_option("presolve", "off");
        }
        if let Some(t) = options.threads.and_then(NonZeroU32::new) {
            model.set_threads(t);
        }
        model.try_solve().map_err(|e| failure(format!("{e:?}")))
    }
}

fn failure(message: String) -> SolveError {
    SolveError::NumericalFailure { backend: "highs".into(), message }
}

impl MilpBackend for HighsBackend {
    fn id(&self) -> &'static str {
        "highs"
    }

    fn solve(&self, problem: &MilpProblem, options: &SolveOptions) -> Result<SolveOutcome, SolveError> {
        let started = Instant::now();
        let mut solved = Self::run(problem, options, true)?;
        if solved.status() == HighsModelStatus::UnboundedOrInfeasible {
            // presolve cannot tell the two apart; the plain solve can
            solved = Self::run(problem, options, false)?;
        }
        let mut ambiguous_feasible = false;
        if solved.status() == HighsModelStatus::UnboundedOrInfeasible {
            // settle it with a pure feasibility problem
            let feasibility = MilpProblem { objective: Vec::new(), ..problem.clone() };
            let probe = Self::run(&feasibility, options, true)?;
            ambiguous_feasible = matches!(probe.status(), HighsModelStatus::Optimal | HighsModelStatus::ModelEmpty);
        }
        let has_integers = problem.columns.iter().any(|c| c.integrality != Integrality::Continuous);
        let status = match solved.status() {
            HighsModelStatus::Optimal => SolveStatus::Optimal,
            HighsModelStatus::ModelEmpty => SolveStatus::Optimal,
            HighsModelStatus::Infeasible => SolveStatus::Infeasible,
            HighsModelStatus::Unbounded => SolveStatus::Unbounded,
            HighsModelStatus::UnboundedOrInfeasible if ambiguous_feasible => SolveStatus::Unbounded,
            HighsModelStatus::UnboundedOrInfeasible => SolveStatus::Infeasible,
            HighsModelStatus::ReachedTimeLimit
            | HighsModelStatus::ReachedIterationLimit
            | HighsModelStatus::ReachedSolutionLimit
            | HighsModelStatus::ObjectiveBound
            | HighsModelStatus::ObjectiveTarget => {
                if solved.primal_solution_status() == HighsSolutionStatus::Feasible {
                    SolveStatus::Feasible { gap: if has_integers { solved.mip_gap() } else { f64::INFINITY } }
                } else {
                    SolveStatus::TimeLimit
                }
            }
            other => return Err(failure(format!("model status {other:?}"))),
        };
        if !status.has_solution() {
            return Ok(SolveOutcome::without_solution(status, "highs", started));
        }
        let offset = problem.objective_offset;
        let values = if problem.columns.is_empty() { Vec::new() } else { solved.get_solution().columns().to_vec() };
        let objective = problem.objective_value(&values);
        let bound = if has_integers {
            solved.double_info_value(c"mip_dual_bound").ok().map(|b| b + offset)
        } else {
            Some(objective)
        };
        let status = match (status, bound) {
            (SolveStatus::Optimal, Some(b)) if has_integers => {
                let gap = (objective - b).abs() / objective.abs().max(1.0);
                if gap <= options.relative_gap.max(1e-9) {
                    SolveStatus::Optimal
                } else {
                    SolveStatus::Feasible { gap }
                }
            }
            (s, _) => s,
        };
        let mut diagnostics = vec![
            ("highs_objective".to_string(), format!("{}", solved.objective_value() + offset)),
            ("mip_gap".to_string(), format!("{}", if has_integers { solved.mip_gap() } else { 0.0 })),
        ];
        if let Ok(nodes) = solved.int_info_value(c"mip_node_count") {
            diagnostics.push(("mip_node_count".into(), nodes.to_string()));
        }
        Ok(SolveOutcome {
            status,
            values: Some(values),
            objective: Some(objective),
            bound,
            wall_time_s: started.elapsed().as_secs_f64(),
            backend: "highs".into(),
            diagnostics,
        })
    }
}
