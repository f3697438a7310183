//! Free-format MPS export and a human-readable constraint dump.

use std::collections::BTreeMap;
use std::io::{self, Write};

use super::{Integrality, MilpProblem, Relation};

/// Writes the problem in free MPS. Integer columns are wrapped in markers and
/// always get explicit bounds; the objective constant goes on the RHS of the
/// cost row with its sign flipped, as MPS readers expect.
pub fn write_mps<W: Write>(problem: &MilpProblem, out: &mut W) -> io::Result<()> {
    let col_name = |j: usize| problem.columns[j].var.to_string();
    writeln!(out, "NAME ceh_sizing")?;
    writeln!(out, "ROWS")?;
    writeln!(out, " N cost")?;
    for r in &problem.rows {
        let kind = match r.relation {
            Relation::Le => 'L',
            Relation::Ge => 'G',
            Relation::Eq => 'E',
        };
        writeln!(out, " {kind} {}", r.label)?;
    }

    let mut by_column: Vec<Vec<(usize, f64)>> = vec![Vec::new(); problem.columns.len()];
    for (i, r) in problem.rows.iter().enumerate() {
        for &(j, a) in &r.terms {
            by_column[j].push((i, a));
        }
    }
    let costs = problem.dense_costs();
    writeln!(out, "COLUMNS")?;
    let mut markers = 0;
    for (j, col) in problem.columns.iter().enumerate() {
        let integer = col.integrality != Integrality::Continuous;
        if integer {
            writeln!(out, "    m{markers} 'MARKER' 'INTORG'")?;
        }
        let name = col_name(j);
        if costs[j] != 0.0 {
            writeln!(out, "    {name} cost {:e}", costs[j])?;
        }
        for &(i, a) in &by_column[j] {
            writeln!(out, "    {name} {} {:e}", problem.rows[i].label, a)?;
        }
        if by_column[j].is_empty() && costs[j] == 0.0 {
            writeln!(out, "    {name} cost 0")?;
        }
        if integer {
            writeln!(out, "    m{markers} 'MARKER' 'INTEND'")?;
            markers += 1;
        }
    }

    writeln!(out, "RHS")?;
    if problem.objective_offset != 0.0 {
        writeln!(out, "    rhs cost {:e}", -problem.objective_offset)?;
    }
    for r in problem.rows.iter().filter(|r| r.rhs != 0.0) {
        writeln!(out, "    rhs {} {:e}", r.label, r.rhs)?;
    }

    writeln!(out, "BOUNDS")?;
    for (j, col) in problem.columns.iter().enumerate() {
        let name = col_name(j);
        match (col.lower.is_finite(), col.upper.is_finite()) {
            (false, false) => writeln!(out, " FR bnd {name}")?,
            (false, true) => {
                writeln!(out, " MI bnd {name}")?;
                writeln!(out, " UP bnd {name} {:e}", col.upper)?;
            }
            (true, up) => {
                writeln!(out, " LO bnd {name} {:e}", col.lower)?;
                if up {
                    writeln!(out, " UP bnd {name} {:e}", col.upper)?;
                } else if col.integrality != Integrality::Continuous {
                    writeln!(out, " PL bnd {name}")?;
                }
            }
        }
    }
    writeln!(out, "ENDATA")
}

/// Lists every row grouped by constraint family, with a count per family.
pub fn write_constraint_dump<W: Write>(problem: &MilpProblem, out: &mut W) -> io::Result<()> {
    let mut groups: BTreeMap<_, Vec<_>> = BTreeMap::new();
    for r in &problem.rows {
        groups.entry(r.family).or_default().push(r);
    }
    for (family, rows) in groups {
        writeln!(out, "# {family} ({} rows)", rows.len())?;
        for r in rows {
            let mut line = String::new();
            for (k, &(j, a)) in r.terms.iter().enumerate() {
                let sign = if a < 0.0 { "-" } else if k > 0 { "+" } else { "" };
                line.push_str(&format!("{sign} {} {} ", a.abs(), problem.columns[j].var));
            }
            let rel = match r.relation {
                Relation::Le => "<=",
                Relation::Ge => ">=",
                Relation::Eq => "=",
            };
            writeln!(out, "{}: {}{rel} {}", r.label, line, r.rhs)?;
        }
    }
    Ok(())
}
