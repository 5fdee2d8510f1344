//! CPLEX-style `.lp` text dump for cross-checking with external solvers.

use std::io::{self, Write};

use crate::problem::{LpProblem, Sense};

fn sanitize(name: &str, index: usize) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    match cleaned.chars().next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => format!("{cleaned}#{index}").replace('#', "_"),
        _ => format!("v_{cleaned}_{index}"),
    }
}

fn term(out: &mut impl Write, first: bool, coeff: f64, name: &str) -> io::Result<()> {
    match (coeff < 0.0, first) {
        (false, true) => write!(out, " {coeff} {name}"),
        (neg, _) => write!(out, " {} {} {name}", if neg { '-' } else { '+' }, coeff.abs()),
    }
}

/// Writes `problem` in CPLEX LP format. Names are made unique by suffixing
/// the variable or row index.
pub fn write_lp(problem: &LpProblem, out: &mut impl Write) -> io::Result<()> {
    let names: Vec<String> = problem
        .vars()
        .iter()
        .enumerate()
        .map(|(i, v)| sanitize(&v.name, i))
        .collect();

    writeln!(out, "\\ {}", problem.name)?;
    if problem.objective_offset() != 0.0 {
        writeln!(out, "\\ objective offset {}", problem.objective_offset())?;
    }
    writeln!(out, "Minimize")?;
    write!(out, " obj:")?;
    let mut first = true;
    for (c, name) in problem.objective().iter().zip(&names) {
        if *c != 0.0 {
            term(out, first, *c, name)?;
            first = false;
        }
    }
    if first {
        write!(out, " 0 {}", names.first().map(String::as_str).unwrap_or("x"))?;
    }
    writeln!(out)?;

    writeln!(out, "Subject To")?;
    for (i, con) in problem.constraints().iter().enumerate() {
        write!(out, " {}:", sanitize(&con.name, i))?;
        let mut first = true;
        for &(v, a) in &con.terms {
            term(out, first, a, &names[v.index()])?;
            first = false;
        }
        if first {
            write!(out, " 0 {}", names.first().map(String::as_str).unwrap_or("x"))?;
        }
        let op = match con.sense {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        };
        writeln!(out, " {op} {}", con.rhs)?;
    }

    writeln!(out, "Bounds")?;
    for (v, name) in problem.vars().iter().zip(&names) {
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (false, false) => writeln!(out, " {name} free")?,
            (true, true) if v.lower == v.upper => writeln!(out, " {name} = {}", v.lower)?,
            (true, true) => writeln!(out, " {} <= {name} <= {}", v.lower, v.upper)?,
            (true, false) => writeln!(out, " {name} >= {}", v.lower)?,
            (false, true) => writeln!(out, " -inf <= {name} <= {}", v.upper)?,
        }
    }
    let binaries: Vec<&String> = problem
        .vars()
        .iter()
        .zip(&names)
        .filter(|(v, _)| v.integer)
        .map(|(_, n)| n)
        .collect();
    if !binaries.is_empty() {
        writeln!(out, "Binaries")?;
        for name in binaries {
            writeln!(out, " {name}")?;
        }
    }
    writeln!(out, "End")
}
