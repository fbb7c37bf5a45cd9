//! The report subcommand: reads JSON artifacts written by earlier runs and
//! renders per-experiment text blocks plus two-column .dat files for
//! plotting. It never reruns an experiment; the only computation is fitting
//! trend lines through numbers already on disk.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::Value;

use schurlab::normsearch::fit_power_law;

use crate::artifacts::{ensure_dir, fnum, write_dat, CliError, Outcome, Rendered};
use crate::ReportParams;

fn stem_of(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn num(v: &Value, key: &str) -> Option<f64> {
    v.get(key).and_then(Value::as_f64)
}

/// Scalar entries of the results object, rendered one per line in key order.
fn scalar_lines(results: &Value, block: &mut String) {
    let Some(map) = results.as_object() else {
        return;
    };
    for (key, val) in map {
        match val {
            Value::Number(x) => {
                let _ = writeln!(block, "  {key}: {}", fnum(x.as_f64().unwrap_or(f64::NAN)));
            }
            Value::Bool(b) => {
                let _ = writeln!(block, "  {key}: {b}");
            }
            Value::Object(inner) if inner.values().all(|v| v.is_number()) && !inner.is_empty() => {
                let parts: Vec<String> = inner
                    .iter()
                    .map(|(k, v)| format!("{k} {}", fnum(v.as_f64().unwrap_or(f64::NAN))))
                    .collect();
                let _ = writeln!(block, "  {key}: {}", parts.join(", "));
            }
            _ => {}
        }
    }
}

fn pairs_dat(
    out_dir: &Path,
    name: String,
    pairs: &[(f64, f64)],
    dats: &mut Vec<String>,
) -> Result<(), CliError> {
    write_dat(&out_dir.join(&name), pairs)?;
    dats.push(name);
    Ok(())
}

pub(crate) fn run_report(p: &ReportParams) -> Result<Outcome, CliError> {
    if !p.input.is_dir() {
        return Err(CliError::MissingInput(format!(
            "{} is not a directory of experiment artifacts",
            p.input.display()
        )));
    }
    let out_dir = p.out.clone().unwrap_or_else(|| p.input.clone());
    ensure_dir(&out_dir)?;

    let mut json_paths: Vec<PathBuf> = std::fs::read_dir(&p.input)
        .map_err(|e| CliError::io(&p.input, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|path| path.extension().is_some_and(|x| x == "json"))
        .collect();
    json_paths.sort();

    let mut text = String::new();
    let mut dats: Vec<String> = Vec::new();
    let mut recognized = 0usize;

    for path in &json_paths {
        let raw = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let Ok(doc) = serde_json::from_str::<Value>(&raw) else {
            continue;
        };
        let Some(command) = doc.get("command").and_then(Value::as_str) else {
            continue;
        };
        recognized += 1;
        let stem = stem_of(path);
        let results = doc.get("results").cloned().unwrap_or(Value::Null);
        let _ = writeln!(text, "== {command} ({})", path.file_name().unwrap_or_default().to_string_lossy());
        if let Some(pass) = doc.get("pass").and_then(Value::as_bool) {
            let _ = writeln!(text, "  pass: {pass}");
        }
        scalar_lines(&results, &mut text);

        match command {
            "estimate" => {
                if let Some(trace) = results
                    .pointer("/detail/trace")
                    .and_then(Value::as_array)
                {
                    let pairs: Vec<(f64, f64)> = trace
                        .iter()
                        .enumerate()
                        .filter_map(|(i, v)| v.as_f64().map(|y| (i as f64, y)))
                        .collect();
                    if !pairs.is_empty() {
                        pairs_dat(&out_dir, format!("{stem}_trace.dat"), &pairs, &mut dats)?;
                    }
                }
            }
            "sweep-exponent" => {
                let grid = results.get("p_grid").and_then(Value::as_array);
                let stars = results.get("p_stars").and_then(Value::as_array);
                let ests = results.get("estimates").and_then(Value::as_array);
                if let (Some(grid), Some(stars), Some(ests)) = (grid, stars, ests) {
                    let xs: Vec<f64> = grid.iter().filter_map(Value::as_f64).collect();
                    let ss: Vec<f64> = stars.iter().filter_map(Value::as_f64).collect();
                    let ys: Vec<f64> = ests.iter().filter_map(Value::as_f64).collect();
                    if xs.len() == ys.len() && !xs.is_empty() {
                        let vs_p: Vec<(f64, f64)> = xs.iter().cloned().zip(ys.iter().cloned()).collect();
                        pairs_dat(&out_dir, format!("{stem}_vs_p.dat"), &vs_p, &mut dats)?;
                    }
                    if ss.len() == ys.len() && !ss.is_empty() {
                        let vs_s: Vec<(f64, f64)> = ss.iter().cloned().zip(ys.iter().cloned()).collect();
                        pairs_dat(&out_dir, format!("{stem}_vs_pstar.dat"), &vs_s, &mut dats)?;
                    }
                }
                if let (Some(e), Some(r)) =
                    (num(&results, "exponent_vs_p_star"), num(&results, "residual_vs_p_star"))
                {
                    let _ = writeln!(
                        text,
                        "  fit: estimate ~ p*^{} (max log residual {})",
                        fnum(e),
                        fnum(r)
                    );
                }
            }
            "sweep-lowerbound" => {
                if let Some(rows) = results.get("rows").and_then(Value::as_array) {
                    let mut ks: Vec<i64> = rows
                        .iter()
                        .filter_map(|r| r.get("k").and_then(Value::as_i64))
                        .collect();
                    ks.sort_unstable();
                    ks.dedup();
                    for k in ks {
                        let pairs: Vec<(f64, f64)> = rows
                            .iter()
                            .filter(|r| r.get("k").and_then(Value::as_i64) == Some(k))
                            .filter_map(|r| {
                                Some((num(r, "l")?, num(r, "residual")?))
                            })
                            .collect();
                        if pairs.len() >= 2 && pairs.iter().all(|&(_, y)| y > 0.0) {
                            let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
                            let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
                            let (slope, _, res) = fit_power_law(&xs, &ys);
                            let _ = writeln!(
                                text,
                                "  k={k}: residual ~ l^{} (max log residual {})",
                                fnum(slope),
                                fnum(res)
                            );
                        }
                        if !pairs.is_empty() {
                            pairs_dat(&out_dir, format!("{stem}_k{k}.dat"), &pairs, &mut dats)?;
                        }
                    }
                }
            }
            "sweep-bound-curve" => {
                if let Some(rows) = results.get("rows").and_then(Value::as_array) {
                    let pairs: Vec<(f64, f64)> = rows
                        .iter()
                        .filter_map(|r| Some((num(r, "p")?, num(r, "normalized")?)))
                        .collect();
                    if !pairs.is_empty() {
                        pairs_dat(&out_dir, format!("{stem}_normalized.dat"), &pairs, &mut dats)?;
                    }
                }
            }
            _ => {}
        }
        text.push('\n');
    }

    if recognized == 0 {
        return Err(CliError::MissingInput(format!(
            "no experiment artifacts found in {}",
            p.input.display()
        )));
    }
    let _ = writeln!(
        text,
        "{recognized} artifact(s), {} plot file(s) in {}",
        dats.len(),
        out_dir.display()
    );
    Ok(Outcome { rendered: Rendered::Text(text), breached: false })
}
