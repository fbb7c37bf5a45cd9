//! Estimation and sweep subcommands: single norm estimates with their
//! ascent traces, exponent sweeps with power-law fits, truncation-identity
//! residual grids, and the interpolation bound curve.

use serde_json::json;

use schurlab::combinatorics::{theoretical_bound, SchattenParams};
use schurlab::normsearch::{
    convergence_check, estimate_norm_seeded, export_estimate_json, fit_power_law, SweepSpec,
    sweep_and_fit,
};

use crate::artifacts::{ensure_dir, envelope, fnum, write_csv, write_json, CliError, Outcome};
use crate::{
    EstimateParams, SweepBoundCurveParams, SweepExponentParams, SweepLowerboundParams,
};

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("evaluation failed: {e}"))
}

/// Comma-separated positive floats; "inf" is accepted where the caller
/// allows it.
fn parse_grid(raw: &str, name: &str) -> Result<Vec<f64>, CliError> {
    let vals: Result<Vec<f64>, _> = raw.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let vals = vals.map_err(|e| CliError::validation(format!("--{name}: {e}")))?;
    if vals.is_empty() {
        return Err(CliError::validation(format!("--{name} must not be empty")));
    }
    Ok(vals)
}

fn parse_grid_u32(raw: &str, name: &str) -> Result<Vec<u32>, CliError> {
    let vals: Result<Vec<u32>, _> = raw.split(',').map(|s| s.trim().parse::<u32>()).collect();
    let vals = vals.map_err(|e| CliError::validation(format!("--{name}: {e}")))?;
    if vals.is_empty() || vals.contains(&0) {
        return Err(CliError::validation(format!("--{name} must list positive integers")));
    }
    Ok(vals)
}

fn check_common(n: usize, dim: usize, restarts: usize, iters: usize) -> Result<(), CliError> {
    if !(1..=4).contains(&n) {
        return Err(CliError::validation("need 1 <= --n <= 4"));
    }
    if !(2..=256).contains(&dim) {
        return Err(CliError::validation("need 2 <= --dim <= 256"));
    }
    if restarts == 0 || restarts > 512 {
        return Err(CliError::validation("need 1 <= --restarts <= 512"));
    }
    if iters == 0 || iters > 10_000 {
        return Err(CliError::validation("need 1 <= --iters <= 10000"));
    }
    Ok(())
}

pub(crate) fn run_estimate(p: &EstimateParams) -> Result<Outcome, CliError> {
    check_common(p.n, p.dim, p.restarts, p.iters)?;
    let slots: Vec<f64> = match &p.p_slots {
        Some(raw) => {
            let vals = parse_grid(raw, "p-slots")?;
            if vals.len() != p.n {
                return Err(CliError::validation(format!(
                    "--p-slots lists {} exponents but --n is {}",
                    vals.len(),
                    p.n
                )));
            }
            vals
        }
        None => {
            if !(p.p >= 1.0) || !p.p.is_finite() {
                return Err(CliError::validation(
                    "--p must be a finite exponent >= 1; use --p-slots for infinite slots",
                ));
            }
            vec![p.n as f64 * p.p; p.n]
        }
    };
    if slots.iter().any(|&s| !(s >= 1.0)) {
        return Err(CliError::validation("slot exponents must be >= 1"));
    }
    let spec = p.symbol.resolve(p.n)?;
    let phi = spec.build(p.n, p.dim).map_err(internal)?;
    let est = estimate_norm_seeded(&phi, &slots, p.restarts, p.iters, p.seed, None);

    let results = json!({
        "value": est.value,
        "crude_bound": est.crude_bound,
        "spread": est.spread,
        "p_target": est.p_target,
        "p_slots": est.p_slots,
        "boundary_exponents": est.boundary_exponents,
        "cycles": est.trace.len(),
        "symbol": serde_json::to_value(&spec).expect("symbol spec serializes"),
    });
    let summary = envelope("estimate", p, results, None);
    if let Some(out) = &p.out {
        ensure_dir(out)?;
        let mut doc = summary.clone();
        doc["results"]["detail"] = export_estimate_json(&est);
        write_json(&out.join("estimate.json"), &doc)?;
        let rows: Vec<Vec<String>> = est
            .trace
            .iter()
            .enumerate()
            .map(|(cycle, v)| {
                vec![
                    cycle.to_string(),
                    fnum(*v),
                    p.n.to_string(),
                    p.dim.to_string(),
                    fnum(est.p_target),
                    p.seed.to_string(),
                ]
            })
            .collect();
        write_csv(
            &out.join("estimate_trace.csv"),
            &["cycle", "value", "n", "dim", "p_target", "seed"],
            &rows,
        )?;
    }
    Ok(Outcome::json(summary, false))
}

pub(crate) fn run_sweep_exponent(p: &SweepExponentParams) -> Result<Outcome, CliError> {
    check_common(p.n, p.dim, p.restarts, p.iters)?;
    let grid = parse_grid(&p.p_grid, "p-grid")?;
    if grid.len() < 2 {
        return Err(CliError::validation("--p-grid needs at least two exponents for a fit"));
    }
    if grid.iter().any(|&v| !(v >= 1.0) || !v.is_finite()) {
        return Err(CliError::validation("--p-grid entries must be finite and >= 1"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::validation("--p-grid must be strictly increasing"));
    }
    let spec = p.symbol.resolve(p.n)?;
    let sweep = SweepSpec {
        symbol: spec.clone(),
        n: p.n,
        n_dim: p.dim,
        p_grid: grid.clone(),
        restarts: p.restarts,
        iters: p.iters,
        seed: p.seed,
    };
    let result = sweep_and_fit(&sweep).map_err(internal)?;

    let p_stars: Vec<f64> = grid.iter().map(|&v| v / (v - 1.0)).collect();
    let rows: Vec<Vec<String>> = grid
        .iter()
        .zip(&p_stars)
        .zip(&result.estimates)
        .map(|((&pv, &ps), &e)| {
            vec![
                fnum(pv),
                fnum(ps),
                fnum(e),
                p.n.to_string(),
                p.dim.to_string(),
                p.restarts.to_string(),
                p.iters.to_string(),
                p.seed.to_string(),
            ]
        })
        .collect();
    let results = json!({
        "p_grid": result.p_grid,
        "p_stars": p_stars,
        "estimates": result.estimates,
        "exponent_vs_p": result.exponent_vs_p,
        "residual_vs_p": result.residual_vs_p,
        "claims_large_p": result.claims_large_p(),
        "exponent_vs_p_star": result.exponent_vs_p_star,
        "residual_vs_p_star": result.residual_vs_p_star,
        "claims_small_p": result.claims_small_p(),
        "symbol": serde_json::to_value(&spec).expect("symbol spec serializes"),
    });
    let summary = envelope("sweep-exponent", p, results, None);
    if let Some(out) = &p.out {
        ensure_dir(out)?;
        write_json(&out.join("sweep_exponent.json"), &summary)?;
        write_csv(
            &out.join("sweep_exponent.csv"),
            &["p", "p_star", "estimate", "n", "dim", "restarts", "iters", "seed"],
            &rows,
        )?;
    }
    Ok(Outcome::json(summary, false))
}

pub(crate) fn run_sweep_lowerbound(p: &SweepLowerboundParams) -> Result<Outcome, CliError> {
    if !(1..=3).contains(&p.n) {
        return Err(CliError::validation("need 1 <= --n <= 3"));
    }
    if p.variant == crate::ConstructionArg::Second && p.n < 2 {
        return Err(CliError::validation("the second construction needs --n >= 2"));
    }
    if !(p.q > 0.0 && p.q < 1.0) {
        return Err(CliError::validation("need 0 < --q < 1"));
    }
    if !(2..=32).contains(&p.dim) {
        return Err(CliError::validation("need 2 <= --dim <= 32"));
    }
    let k_grid = parse_grid_u32(&p.k_grid, "k-grid")?;
    let l_grid = parse_grid_u32(&p.l_grid, "l-grid")?;
    let labels: Vec<i64> = (0..p.dim as i64).collect();
    let construction = p.variant.into();

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut records: Vec<serde_json::Value> = Vec::new();
    let mut min_residual = f64::INFINITY;
    let mut monotone_in_l = true;
    for &k in &k_grid {
        let mut prev: Option<f64> = None;
        for &l in &l_grid {
            let residual = convergence_check(construction, p.n, p.q, k, l, &labels, p.seed)
                .map_err(internal)?;
            min_residual = min_residual.min(residual);
            if let Some(prior) = prev {
                if residual > prior {
                    monotone_in_l = false;
                }
            }
            prev = Some(residual);
            rows.push(vec![
                format!("{:?}", construction).to_lowercase(),
                p.n.to_string(),
                fnum(p.q),
                p.dim.to_string(),
                k.to_string(),
                l.to_string(),
                p.seed.to_string(),
                fnum(residual),
            ]);
            records.push(json!({ "k": k, "l": l, "residual": residual }));
        }
    }

    let results = json!({
        "rows": records,
        "min_residual": min_residual,
        "monotone_in_l": monotone_in_l,
    });
    let summary = envelope("sweep-lowerbound", p, results, None);
    if let Some(out) = &p.out {
        ensure_dir(out)?;
        write_json(&out.join("sweep_lowerbound.json"), &summary)?;
        write_csv(
            &out.join("sweep_lowerbound.csv"),
            &["construction", "n", "q", "dim", "k", "l", "seed", "residual"],
            &rows,
        )?;
    }
    Ok(Outcome::json(summary, false))
}

pub(crate) fn run_sweep_bound_curve(p: &SweepBoundCurveParams) -> Result<Outcome, CliError> {
    if !(1..=5).contains(&p.n) {
        return Err(CliError::validation("need 1 <= --n <= 5"));
    }
    let grid = parse_grid(&p.p_grid, "p-grid")?;
    if grid.iter().any(|&v| !(v > 1.0) || !v.is_finite()) {
        return Err(CliError::validation("--p-grid entries must be finite and > 1"));
    }

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut records: Vec<serde_json::Value> = Vec::new();
    let mut normalized: Vec<f64> = Vec::new();
    for &pv in &grid {
        let slots = vec![p.n as f64 * pv; p.n];
        let params = SchattenParams::new(&slots).map_err(internal)?;
        let bound = theoretical_bound(&params).map_err(internal)?;
        let p_star = pv / (pv - 1.0);
        let norm = bound / (p_star * pv.powi(p.n as i32));
        normalized.push(norm);
        rows.push(vec![fnum(pv), fnum(p_star), fnum(bound), fnum(norm), p.n.to_string()]);
        records.push(json!({ "p": pv, "p_star": p_star, "bound": bound, "normalized": norm }));
    }
    let lo = normalized.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = normalized.iter().cloned().fold(0.0f64, f64::max);
    let variation = hi / lo;
    // the envelope should track p* p^n up to a dimension-free factor
    let (slope, _, fit_residual) = if grid.len() >= 2 {
        let bounds: Vec<f64> = records.iter().map(|r| r["bound"].as_f64().unwrap()).collect();
        fit_power_law(&grid, &bounds)
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };

    let results = json!({
        "rows": records,
        "normalized_variation": variation,
        "bounded_variation": variation < 10.0,
        "variation_threshold": 10.0,
        "slope_vs_p": slope,
        "slope_fit_residual": fit_residual,
    });
    let summary = envelope("sweep-bound-curve", p, results, None);
    if let Some(out) = &p.out {
        ensure_dir(out)?;
        write_json(&out.join("sweep_bound_curve.json"), &summary)?;
        write_csv(
            &out.join("sweep_bound_curve.csv"),
            &["p", "p_star", "bound", "normalized", "n"],
            &rows,
        )?;
    }
    Ok(Outcome::json(summary, false))
}
