use core::fmt::{self, Write};

use super::{ColumnKind, LinearProgram};

struct ColumnName(ColumnKind);

impl fmt::Display for ColumnName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            ColumnKind::Assign { nonhub, hub } => write!(f, "x_{nonhub}_{hub}"),
            ColumnKind::Gap { p, q, hub } => write!(f, "z_{p}_{q}_{hub}"),
            ColumnKind::Flow { row, col } => write!(f, "y_{row}_{col}"),
            ColumnKind::Slack { row } => write!(f, "s_{row}"),
            ColumnKind::Surplus { row } => write!(f, "t_{row}"),
        }
    }
}

fn write_terms<W: Write>(out: &mut W, lp: &LinearProgram, terms: impl Iterator<Item = (usize, f64)>) -> fmt::Result {
    let mut first = true;
    let mut count = 0;
    for (j, a) in terms {
        if a == 0.0 {
            continue;
        }
        let sign = if a < 0.0 { "-" } else if first { "" } else { "+" };
        let mag = a.abs();
        write!(out, " ")?;
        if !sign.is_empty() {
            write!(out, "{sign} ")?;
        }
        if mag != 1.0 {
            write!(out, "{mag:e} ")?;
        }
        write!(out, "{}", ColumnName(lp.columns()[j]))?;
        first = false;
        count += 1;
        if count % 8 == 0 {
            writeln!(out)?;
        }
    }
    if first {
        write!(out, " 0 {}", ColumnName(lp.columns()[0]))?;
    }
    Ok(())
}

/// Writes `lp` in CPLEX LP text format (equality form, all columns `>= 0`).
pub fn write_lp_format<W: Write>(lp: &LinearProgram, out: &mut W) -> fmt::Result {
    writeln!(out, "\\ {} rows, {} columns", lp.row_count(), lp.column_count())?;
    writeln!(out, "Minimize")?;
    write!(out, " obj:")?;
    write_terms(out, lp, lp.objective().iter().copied().enumerate())?;
    writeln!(out)?;
    writeln!(out, "Subject To")?;
    for (r, row) in lp.rows().iter().enumerate() {
        write!(out, " r{r}:")?;
        write_terms(out, lp, row.iter().copied())?;
        writeln!(out, " = {:e}", lp.rhs()[r])?;
    }
    writeln!(out, "End")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Instance;
    use crate::lp::build_lrp;
    use alloc::string::String;
    use alloc::vec;

    #[test]
    fn dump_mentions_every_section() {
        let inst = Instance::new(
            vec![1, 2],
            vec![vec![1.0, 0.0], vec![0.0, 2.0]],
            vec![vec![0.0, 1.0], vec![0.0, 0.0]],
        )
        .unwrap();
        let mut s = String::new();
        write_lp_format(&build_lrp(&inst), &mut s).unwrap();
        assert!(s.starts_with("\\ 6 rows, 10 columns"));
        assert!(s.contains("Minimize"));
        assert!(s.contains(" r0: x_0_0 + x_0_1 = 1e0"));
        assert!(s.contains("z_0_1_1"));
        assert!(s.trim_end().ends_with("End"));
    }
}
