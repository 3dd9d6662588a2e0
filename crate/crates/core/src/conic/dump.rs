use std::fmt::Write;

use super::problem::{CLinExpr, Constraint, LinExpr, Relation, SdpProblem};

/// Plain-text dump for diffing against external tools.
///
/// ```text
/// sdp-dump 1
/// vars <n>
/// herm <offset> <dim>          one line per Hermitian variable
/// scalar <index>               one line per scalar variable
/// maximize <c0> [i:c ...]      linear part of the objective
/// square <w> <c0> [i:c ...]    subtract w·(affine)²
/// ge|le|eq <label> <c0> [i:c ...]
/// psd <label> <dim>
///   <i> <j> re <c0> [i:c ...] im <c0> [i:c ...]   upper triangle, i ≤ j
/// end
/// ```
///
/// Hermitian variables of dimension n occupy n² consecutive parameters:
/// the diagonal, then (Re, Im) of each upper entry in row-major order.
pub fn dump_text(p: &SdpProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "sdp-dump 1");
    let _ = writeln!(out, "vars {}", p.n_vars);
    for h in &p.hermitian {
        let _ = writeln!(out, "herm {} {}", h.offset, h.n);
    }
    for s in &p.scalars {
        let _ = writeln!(out, "scalar {s}");
    }
    let _ = writeln!(out, "maximize {}", expr(&p.objective.linear));
    for (w, a) in &p.objective.squares {
        let _ = writeln!(out, "square {w:e} {}", expr(a));
    }
    for c in &p.constraints {
        match c {
            Constraint::Linear { label, expr: e, relation } => {
                let kw = match relation {
                    Relation::Ge => "ge",
                    Relation::Le => "le",
                    Relation::Eq => "eq",
                };
                let _ = writeln!(out, "{kw} {} {}", sanitize(label), expr(e));
            }
            Constraint::Psd { label, n, entries } => {
                let _ = writeln!(out, "psd {} {n}", sanitize(label));
                for i in 0..*n {
                    for j in i..*n {
                        let _ = writeln!(out, "  {i} {j} {}", centry(&entries[i * n + j]));
                    }
                }
            }
        }
    }
    out.push_str("end\n");
    out
}

fn sanitize(label: &str) -> String {
    label.chars().map(|c| if c.is_whitespace() { '_' } else { c }).collect()
}

fn expr(e: &LinExpr) -> String {
    let mut s = format!("{:e}", e.constant);
    for (i, c) in &e.compressed().terms {
        let _ = write!(s, " {i}:{c:e}");
    }
    s
}

fn centry(e: &CLinExpr) -> String {
    format!("re {} im {}", expr(&e.re), expr(&e.im))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_lists_every_part() {
        let mut p = SdpProblem::new();
        let t = p.add_scalar();
        let x = p.add_psd(2, "X block");
        p.ge("t nonneg", t.clone());
        p.equal("trace", x.trace() - 1.0);
        p.maximize(t.clone(), vec![(0.5, t)]);
        let text = dump_text(&p);
        assert!(text.starts_with("sdp-dump 1\nvars 5\n"));
        assert!(text.contains("herm 1 2"));
        assert!(text.contains("scalar 0"));
        assert!(text.contains("psd X_block 2"));
        assert!(text.contains("ge t_nonneg 0e0 0:1e0"));
        assert!(text.contains("square 5e-1"));
        assert_eq!(text.lines().filter(|l| l.starts_with("  ")).count(), 3);
        assert!(text.ends_with("end\n"));
    }
}
