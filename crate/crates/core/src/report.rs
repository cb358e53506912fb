//! Text and CSV rendering of estimation results, and the combined run
//! report.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{significance_stars, two_sided_p, EstimationResult};
use crate::mpe::MpeTable;
use crate::spec::ParameterVector;

/// Printed decimals for coefficients, standard errors, and t statistics.
pub const COEFFICIENT_DECIMALS: usize = 3;

/// `decimals` fixed-point, or scientific when that would exceed `width`.
fn fixed(v: f64, decimals: usize, width: usize) -> String {
    let s = format!("{v:.decimals$}");
    if s.len() > width {
        format!("{v:.2e}")
    } else {
        s
    }
}

/// Side-by-side coefficient block, one column group per result. Rows
/// follow the first result's parameter order; parameters missing from a
/// result print blank.
pub fn render_estimates(title: &str, results: &[&EstimationResult]) -> String {
    let d = COEFFICIENT_DECIMALS;
    let mut names: Vec<&str> = Vec::new();
    for r in results {
        for n in r.parameters.names() {
            if !names.contains(&n.as_str()) {
                names.push(n);
            }
        }
    }
    let name_w = names.iter().map(|n| n.len()).max().unwrap_or(0).max(28);
    let col_w = 15 + 11 + 10;
    let mut s = String::new();
    let _ = writeln!(s, "{title}");
    let mut head = format!("{:<name_w$}", "");
    let mut sub = format!("{:<name_w$}", "Parameter");
    for r in results {
        let _ = write!(head, " | {:<col_w$}", r.model);
        let _ = write!(sub, " | {:>12}   {:>11}{:>10}", "Value", "Rob.SE", "Rob.t");
    }
    let rule = "-".repeat(sub.len());
    let _ = writeln!(s, "{head}\n{sub}\n{rule}");
    for name in &names {
        let mut line = format!("{name:<name_w$}");
        for r in results {
            match r.parameters.names().iter().position(|n| n == name) {
                Some(i) => {
                    let t = r.robust_t[i];
                    let value = format!(
                        "{}{:<3}",
                        fixed(r.parameters.values()[i], d, 12),
                        significance_stars(t)
                    );
                    let _ = write!(
                        line,
                        " | {:>15}{:>11}{:>10}",
                        value,
                        fixed(r.robust_se[i], d, 10),
                        fixed(t, 2, 9)
                    );
                }
                None => {
                    let _ = write!(line, " | {:col_w$}", "");
                }
            }
        }
        let _ = writeln!(s, "{line}");
    }
    let _ = writeln!(s, "{rule}");
    type Cell = Box<dyn Fn(&EstimationResult) -> String>;
    let footer: [(&str, Cell); 8] = [
        (
            "Number of parameters",
            Box::new(|r| r.n_parameters.to_string()),
        ),
        ("Sample size", Box::new(|r| r.sample_size.to_string())),
        (
            "Number of draws",
            Box::new(|r| r.draws.map_or_else(|| "-".to_string(), |n| n.to_string())),
        ),
        (
            "Null log-likelihood",
            Box::new(|r| format!("{:.3}", r.ll_null)),
        ),
        (
            "Final log-likelihood",
            Box::new(|r| format!("{:.3}", r.ll_final)),
        ),
        (
            "Adjusted rho-square",
            Box::new(|r| format!("{:.3}", r.adjusted_rho_sq)),
        ),
        (
            "Converged",
            Box::new(|r| {
                if r.converged {
                    "yes".into()
                } else {
                    "no".into()
                }
            }),
        ),
        (
            "Information matrix rank",
            Box::new(|r| format!("{} of {}", r.hessian_rank, r.n_parameters)),
        ),
    ];
    for (label, f) in &footer {
        let mut line = format!("{label:<name_w$}");
        for r in results {
            let _ = write!(line, " | {:>col_w$}", f(r));
        }
        let _ = writeln!(s, "{line}");
    }
    let _ = writeln!(s, "Robust p-values: *** p < 0.005, ** p < 0.01, * p < 0.05");
    for r in results {
        for w in &r.warnings {
            let _ = writeln!(s, "warning ({}): {w}", r.model);
        }
    }
    s
}

/// Long CSV of one result: `section,name,value,robust_se,robust_t,p_value,stars`.
/// Coefficient rows first, then fit statistics. Values keep full precision.
pub fn result_to_csv(r: &EstimationResult) -> String {
    let mut s = String::from("section,name,value,robust_se,robust_t,p_value,stars\n");
    for (i, (name, value)) in r.parameters.iter().enumerate() {
        let t = r.robust_t[i];
        let _ = writeln!(
            s,
            "coefficient,{name},{value},{},{t},{},{}",
            r.robust_se[i],
            two_sided_p(t),
            significance_stars(t)
        );
    }
    let stats: [(&str, String); 11] = [
        ("model", r.model.clone()),
        ("n_parameters", r.n_parameters.to_string()),
        ("sample_size", r.sample_size.to_string()),
        ("draws", r.draws.map(|d| d.to_string()).unwrap_or_default()),
        ("ll_null", r.ll_null.to_string()),
        ("ll_final", r.ll_final.to_string()),
        ("adjusted_rho_sq", r.adjusted_rho_sq.to_string()),
        ("converged", r.converged.to_string()),
        ("iterations", r.iterations.to_string()),
        ("gradient_norm", r.gradient_norm_at_solution.to_string()),
        ("hessian_rank", r.hessian_rank.to_string()),
    ];
    for (name, value) in stats {
        let _ = writeln!(s, "statistic,{name},{value},,,,");
    }
    s
}

/// Reads a result written by [`result_to_csv`]. Only the diagonal of the
/// covariance survives the round trip; warnings and the unidentified list
/// are not stored.
pub fn result_from_csv(reader: impl std::io::Read) -> Result<EstimationResult> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut names = Vec::new();
    let mut values = Vec::new();
    let mut se = Vec::new();
    let mut t = Vec::new();
    let mut stats = std::collections::BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let field = |k: usize| rec.get(k).unwrap_or_default().to_string();
        let num = |k: usize| -> Result<f64> {
            let raw = rec.get(k).unwrap_or_default();
            raw.parse::<f64>().map_err(|_| Error::Parse {
                row,
                message: format!("`{raw}` is not a number"),
            })
        };
        match rec.get(0).unwrap_or_default() {
            "coefficient" => {
                names.push(field(1));
                values.push(num(2)?);
                se.push(num(3)?);
                t.push(num(4)?);
            }
            "statistic" => {
                stats.insert(field(1), field(2));
            }
            other => {
                return Err(Error::Parse {
                    row,
                    message: format!("unknown section `{other}`"),
                })
            }
        }
    }
    let stat = |k: &str| -> Result<&String> {
        stats.get(k).ok_or_else(|| Error::Parse {
            row: 0,
            message: format!("missing statistic `{k}`"),
        })
    };
    let parse = |k: &str| -> Result<f64> {
        stat(k)?.parse::<f64>().map_err(|_| Error::Parse {
            row: 0,
            message: format!("statistic {k} is not a number"),
        })
    };
    let n = names.len();
    let mut covariance = vec![0.0; n * n];
    for i in 0..n {
        covariance[i * n + i] = se[i] * se[i];
    }
    let draws = match stat("draws")?.as_str() {
        "" => None,
        d => Some(d.parse::<usize>().map_err(|_| Error::Parse {
            row: 0,
            message: format!("draw count `{d}` is not an integer"),
        })?),
    };
    Ok(EstimationResult {
        model: stat("model")?.clone(),
        parameters: ParameterVector::new(names, values)?,
        robust_covariance: covariance,
        robust_se: se,
        robust_t: t,
        ll_null: parse("ll_null")?,
        ll_final: parse("ll_final")?,
        n_parameters: n,
        sample_size: parse("sample_size")? as usize,
        adjusted_rho_sq: parse("adjusted_rho_sq")?,
        converged: stat("converged")? == "true",
        iterations: parse("iterations")? as usize,
        gradient_norm_at_solution: parse("gradient_norm")?,
        hessian_rank: parse("hessian_rank")? as usize,
        unidentified: Vec::new(),
        draws,
        warnings: Vec::new(),
    })
}

/// Full text report: coefficient blocks grouped by base model, then the
/// MPE tables, then an adjusted rho-square comparison.
pub fn render_report(
    groups: &[(String, Vec<&EstimationResult>)],
    mpe: &[MpeTable],
) -> Result<String> {
    if groups.iter().all(|(_, g)| g.is_empty()) {
        return Err(Error::Argument(
            "report needs at least one estimation result".into(),
        ));
    }
    let mut s = String::new();
    for (title, results) in groups {
        if results.is_empty() {
            continue;
        }
        s.push_str(&render_estimates(title, results));
        s.push('\n');
    }
    for t in mpe {
        s.push_str(&t.render_text());
        s.push('\n');
    }
    let _ = writeln!(s, "Adjusted rho-square comparison");
    for (_, results) in groups {
        for r in results {
            let _ = writeln!(
                s,
                "  {:<28} {:.3}  (K = {})",
                r.model, r.adjusted_rho_sq, r.n_parameters
            );
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result() -> EstimationResult {
        EstimationResult {
            model: "toy".into(),
            parameters: ParameterVector::from_pairs([("A", 1.23456789), ("B", -0.5), ("C", 0.1)])
                .unwrap(),
            robust_covariance: vec![
                0.1234 * 0.1234,
                0.0,
                0.0,
                0.0,
                0.0625,
                0.0,
                0.0,
                0.0,
                0.1 * 0.1,
            ],
            robust_se: vec![0.1234, 0.25, 0.1],
            robust_t: vec![1.23456789 / 0.1234, -2.0, 1.0],
            ll_null: -431.02,
            ll_final: -182.19,
            n_parameters: 3,
            sample_size: 249,
            adjusted_rho_sq: 0.5703,
            converged: true,
            iterations: 12,
            gradient_norm_at_solution: 1e-8,
            hessian_rank: 3,
            unidentified: vec![],
            draws: None,
            warnings: vec![],
        }
    }

    #[test]
    fn stars_and_precision_in_text() {
        let text = render_estimates("Toy", &[&result()]);
        assert!(text.contains("1.235***"), "{text}");
        assert!(text.contains("-0.500*"), "{text}");
        assert!(text.contains("0.100 "), "{text}");
        assert!(text.contains("Adjusted rho-square"));
        assert!(text.contains("0.570"));
    }

    #[test]
    fn csv_round_trip() {
        let r = result();
        let csv = result_to_csv(&r);
        assert!(csv.starts_with("section,name,value,robust_se,robust_t,p_value,stars\n"));
        assert!(csv.contains("coefficient,A,1.23456789,0.1234,"));
        let back = result_from_csv(csv.as_bytes()).unwrap();
        assert_eq!(back, r);
        let mut mixed = r.clone();
        mixed.draws = Some(100);
        assert_eq!(
            result_from_csv(result_to_csv(&mixed).as_bytes())
                .unwrap()
                .draws,
            Some(100)
        );
    }

    #[test]
    fn text_matches_csv_at_printed_precision() {
        let r = result();
        let text = render_estimates("Toy", &[&r]);
        let back = result_from_csv(result_to_csv(&r).as_bytes()).unwrap();
        for (name, v) in back.parameters.iter() {
            assert!(text.contains(&format!("{v:.3}")), "{name}");
        }
    }

    #[test]
    fn empty_report_is_an_error() {
        assert!(render_report(&[], &[]).is_err());
    }
}
