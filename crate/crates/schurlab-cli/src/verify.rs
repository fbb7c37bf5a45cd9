//! The verify subcommands: each replays a family of identities on random
//! configurations and reports the worst residual against a pinned ceiling.
//! Randomness is ChaCha-seeded, so a given config is a fixed experiment.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use schurlab::decomp::{evaluate_core_expansion, FinalDecomposition};
use schurlab::divdiff::{
    divdiff_eval, make_abs_power, simplex_oracle, Exp, Monomial, NodeVector, Sin, SmoothFunction,
};
use schurlab::fourier::{
    default_points_per_axis, fourier_weights, reconstruction_error, HomogeneousSymbol, RatioBump,
    SignedSymbol, SymbolSum, Window, DEFAULT_HALF_WIDTH,
};
use schurlab::normsearch::remark_identity;
use schurlab::partition::{sphere_partition, theta_all, theta_eval, CoverChart};
use schurlab::reduction::{reduce_algebraic, reduce_general, reduce_zero_insert, ExpansionSource};

use crate::artifacts::{
    ensure_dir, envelope, fnum, write_csv, write_json, CliError, Outcome,
};
use crate::{
    DecompParams, DivdiffParams, FourierParams, PartitionParams, ReductionsParams, RemarkParams,
};

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("evaluation failed: {e}"))
}

#[derive(Clone, Copy)]
enum Family {
    Mono(u32),
    Exp,
    Sin,
    Power(u32),
}

impl Family {
    fn label(self) -> String {
        match self {
            Family::Mono(d) => format!("x^{d}"),
            Family::Exp => "exp".into(),
            Family::Sin => "sin".into(),
            Family::Power(n) => format!("a_{n}"),
        }
    }

    fn boxed(self) -> Box<dyn SmoothFunction> {
        match self {
            Family::Mono(d) => Box::new(Monomial(d)),
            Family::Exp => Box::new(Exp),
            Family::Sin => Box::new(Sin),
            Family::Power(n) => Box::new(make_abs_power(n)),
        }
    }
}

fn smooth_pool(max_deg: u32) -> Vec<Family> {
    let mut fams: Vec<Family> = (1..=max_deg).map(Family::Mono).collect();
    fams.push(Family::Exp);
    fams.push(Family::Sin);
    fams
}

/// Random node blocks: total multiplicity `total` spread over 2..=total
/// distinct values in [-3, 3], pairwise gaps at least 0.08 so every
/// denominator in the expansions stays tame.
fn random_blocks(rng: &mut ChaCha8Rng, total: u32) -> Vec<(f64, u32)> {
    let b = rng.gen_range(2..=total as usize);
    loop {
        let mut vals: Vec<f64> = (0..b).map(|_| rng.gen_range(-3.0..3.0)).collect();
        vals.sort_by(f64::total_cmp);
        if vals.windows(2).all(|w| w[1] - w[0] >= 0.08) {
            let mut mult = vec![1u32; b];
            for _ in 0..(total as usize - b) {
                mult[rng.gen_range(0..b)] += 1;
            }
            return vals.into_iter().zip(mult).collect();
        }
    }
}

/// Raw tuple with entries bounded away from zero and from each other, the
/// precondition of the zero-insertion identity.
fn random_nonzero_tuple(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    loop {
        let t: Vec<f64> = (0..len)
            .map(|_| {
                let mag = rng.gen_range(0.15..3.0);
                if rng.gen_bool(0.5) {
                    mag
                } else {
                    -mag
                }
            })
            .collect();
        let mut sorted = t.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).all(|w| w[1] - w[0] >= 0.08) {
            return t;
        }
    }
}

fn distinct_pair(rng: &mut ChaCha8Rng, len: usize) -> (usize, usize) {
    let i = rng.gen_range(0..len);
    let mut j = rng.gen_range(0..len);
    while j == i {
        j = rng.gen_range(0..len);
    }
    (i, j)
}

fn source_label(s: ExpansionSource) -> &'static str {
    match s {
        ExpansionSource::InsertXi => "insert-xi",
        ExpansionSource::General => "general-insert",
        ExpansionSource::Algebraic => "node-merge",
        ExpansionSource::ZeroInsert => "zero-insert",
    }
}

pub(crate) fn run_reductions(p: &ReductionsParams) -> Result<Outcome, CliError> {
    if !(2..=6).contains(&p.n) {
        return Err(CliError::validation("need 2 <= --n <= 6"));
    }
    if p.trials == 0 || !(p.tol > 0.0) {
        return Err(CliError::validation("need --trials >= 1 and --tol > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let fams = smooth_pool(8);
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut worst: BTreeMap<&'static str, f64> = BTreeMap::new();
    let push = |rows: &mut Vec<Vec<String>>,
                worst: &mut BTreeMap<&'static str, f64>,
                trial: u64,
                identity: &'static str,
                family: String,
                residual: f64| {
        let w = worst.entry(identity).or_insert(0.0);
        *w = w.max(residual);
        rows.push(vec![
            trial.to_string(),
            identity.into(),
            family,
            p.n.to_string(),
            fnum(residual),
            fnum(p.tol),
            p.seed.to_string(),
        ]);
    };

    for trial in 0..p.trials {
        // insertion of a fresh point, possibly against repeated nodes
        let fam = fams[rng.gen_range(0..fams.len())];
        let f = fam.boxed();
        let blocks = random_blocks(&mut rng, p.n as u32 + 1);
        let nodes = NodeVector::from_blocks(&blocks).map_err(internal)?;
        let lhs = divdiff_eval(f.as_ref(), &nodes).map_err(internal)?;
        let (i, j) = distinct_pair(&mut rng, blocks.len());
        let xi = rng.gen_range(-3.5..3.5);
        let expn = reduce_general(&nodes, i, j, xi).map_err(internal)?;
        let rhs = expn.eval(f.as_ref()).map_err(internal)?;
        let rel = (lhs - rhs).abs() / lhs.abs().max(1.0);
        push(&mut rows, &mut worst, trial, source_label(expn.source), fam.label(), rel);

        // merge onto an existing third node
        if blocks.len() >= 3 {
            let (i, j) = distinct_pair(&mut rng, blocks.len());
            let mut k = rng.gen_range(0..blocks.len());
            while k == i || k == j {
                k = rng.gen_range(0..blocks.len());
            }
            let expn = reduce_algebraic(&nodes, i, j, k).map_err(internal)?;
            let rhs = expn.eval(f.as_ref()).map_err(internal)?;
            let rel = (lhs - rhs).abs() / lhs.abs().max(1.0);
            push(&mut rows, &mut worst, trial, source_label(expn.source), fam.label(), rel);
        }

        // zero insertion on a raw tuple; the singular family joins here
        // since its tuples stay simple
        let famz = if rng.gen_bool(0.25) {
            Family::Power(p.n as u32)
        } else {
            fams[rng.gen_range(0..fams.len())]
        };
        let fz = famz.boxed();
        let t = random_nonzero_tuple(&mut rng, p.n + 1);
        let lhs =
            divdiff_eval(fz.as_ref(), &NodeVector::from_points(&t).map_err(internal)?).map_err(internal)?;
        let (i, j) = distinct_pair(&mut rng, t.len());
        let expn = reduce_zero_insert(&t, i, j).map_err(internal)?;
        let rhs = expn.eval(fz.as_ref()).map_err(internal)?;
        let rel = (lhs - rhs).abs() / lhs.abs().max(1.0);
        push(&mut rows, &mut worst, trial, source_label(expn.source), famz.label(), rel);
    }

    let overall = worst.values().cloned().fold(0.0f64, f64::max);
    let pass = overall <= p.tol;
    let worst_json: serde_json::Map<String, serde_json::Value> =
        worst.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    let summary = envelope(
        "verify-reductions",
        p,
        json!({ "worst_residuals": worst_json, "overall": overall, "rows": rows.len() }),
        Some(pass),
    );
    if let Some(out) = &p.out {
        write_verify_artifacts(out, "verify_reductions", &summary, REDUCTION_HEADER, &rows)?;
    }
    Ok(Outcome::json(summary, !pass))
}

const REDUCTION_HEADER: &[&str] = &["trial", "identity", "family", "n", "residual", "tol", "seed"];

fn write_verify_artifacts(
    out: &Path,
    stem: &str,
    summary: &serde_json::Value,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(), CliError> {
    ensure_dir(out)?;
    write_json(&out.join(format!("{stem}.json")), summary)?;
    write_csv(&out.join(format!("{stem}.csv")), header, rows)
}

pub(crate) fn run_divdiff(p: &DivdiffParams) -> Result<Outcome, CliError> {
    if p.trials == 0 || p.samples < 1000 || !(p.tol > 0.0) {
        return Err(CliError::validation(
            "need --trials >= 1, --samples >= 1000 and --tol > 0",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let fams = smooth_pool(6);
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut worst_perm = 0.0f64;
    let mut worst_confluence = 0.0f64;
    let mut worst_oracle_z = 0.0f64;

    for trial in 0..p.trials {
        // invariance under node reordering, repeats included
        let n = rng.gen_range(2..=5);
        let fam = fams[rng.gen_range(0..fams.len())];
        let f = fam.boxed();
        let mut pts: Vec<f64> = (0..=n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        if rng.gen_bool(0.3) {
            let (i, j) = distinct_pair(&mut rng, pts.len());
            pts[j] = pts[i];
        }
        let v1 = divdiff_eval(f.as_ref(), &NodeVector::from_points(&pts).map_err(internal)?)
            .map_err(internal)?;
        pts.shuffle(&mut rng);
        let v2 = divdiff_eval(f.as_ref(), &NodeVector::from_points(&pts).map_err(internal)?)
            .map_err(internal)?;
        let rel = (v1 - v2).abs() / v1.abs().max(1.0);
        worst_perm = worst_perm.max(rel);
        rows.push(vec![
            "permutation".into(),
            trial.to_string(),
            n.to_string(),
            fam.label(),
            fnum(rel),
            fnum(p.tol),
            p.seed.to_string(),
        ]);
    }

    for trial in 0..p.trials {
        // a repeated node is the limit of a splitting one
        let n = rng.gen_range(2..=4);
        let fam = match rng.gen_range(0..3) {
            0 => Family::Exp,
            1 => Family::Sin,
            _ => Family::Mono(n as u32 + 2),
        };
        let f = fam.boxed();
        let mut vals: Vec<f64>;
        loop {
            vals = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            vals.sort_by(f64::total_cmp);
            if vals.windows(2).all(|w| w[1] - w[0] >= 0.3) {
                break;
            }
        }
        let r = rng.gen_range(0..n);
        let mut blocks: Vec<(f64, u32)> = vals.iter().map(|&v| (v, 1)).collect();
        blocks[r].1 = 2;
        let v0 = divdiff_eval(f.as_ref(), &NodeVector::from_blocks(&blocks).map_err(internal)?)
            .map_err(internal)?;
        for (h, ceil) in [(1e-5, 1e-3), (1e-7, 1e-5)] {
            let mut pts = vals.clone();
            pts.push(vals[r] + h);
            let vh = divdiff_eval(f.as_ref(), &NodeVector::from_points(&pts).map_err(internal)?)
                .map_err(internal)?;
            let ratio = ((vh - v0).abs() / (1.0 + v0.abs())) / ceil;
            worst_confluence = worst_confluence.max(ratio);
            rows.push(vec![
                "confluence".into(),
                trial.to_string(),
                n.to_string(),
                fam.label(),
                fnum(ratio),
                "1".into(),
                p.seed.to_string(),
            ]);
        }
    }

    // fixed Monte Carlo cross-checks, one per node pattern of interest
    let oracle_configs: Vec<(Family, Vec<f64>)> = vec![
        (Family::Exp, vec![0.0, 0.0, 1.0]),
        (Family::Sin, vec![-1.0, 0.5, 0.5, 1.0]),
        (Family::Mono(6), vec![0.2, 0.4, 0.6, 0.8]),
        (Family::Exp, vec![-2.0, -1.0, 0.0, 1.0, 2.0]),
        (Family::Mono(5), vec![0.5, 1.0, 1.5, 2.0]),
    ];
    for (idx, (fam, pts)) in oracle_configs.iter().enumerate() {
        let f = fam.boxed();
        let dd = divdiff_eval(f.as_ref(), &NodeVector::from_points(pts).map_err(internal)?)
            .map_err(internal)?;
        let est = simplex_oracle(f.as_ref(), pts, p.samples, p.seed.wrapping_add(idx as u64))
            .map_err(internal)?;
        let gap = (dd - est.mean).abs();
        let z = if gap <= 1e-12 { 0.0 } else { gap / est.std_err.max(1e-300) };
        worst_oracle_z = worst_oracle_z.max(z);
        rows.push(vec![
            "oracle".into(),
            idx.to_string(),
            (pts.len() - 1).to_string(),
            fam.label(),
            fnum(z),
            "3".into(),
            p.seed.to_string(),
        ]);
    }

    let pass = worst_perm <= p.tol && worst_confluence <= 1.0 && worst_oracle_z <= 3.0;
    let summary = envelope(
        "verify-divdiff",
        p,
        json!({
            "worst_permutation": worst_perm,
            "worst_confluence_ratio": worst_confluence,
            "worst_oracle_z": worst_oracle_z,
            "rows": rows.len(),
        }),
        Some(pass),
    );
    if let Some(out) = &p.out {
        write_verify_artifacts(
            out,
            "verify_divdiff",
            &summary,
            &["check", "index", "n", "family", "discrepancy", "threshold", "seed"],
            &rows,
        )?;
    }
    Ok(Outcome::json(summary, !pass))
}

pub(crate) fn run_decomposition(p: &DecompParams) -> Result<Outcome, CliError> {
    if !(2..=4).contains(&p.n) {
        return Err(CliError::validation("need 2 <= --n <= 4"));
    }
    if p.trials == 0 || !(p.tol > 0.0) {
        return Err(CliError::validation("need --trials >= 1 and --tol > 0"));
    }
    let decomp = FinalDecomposition::new(p.n).map_err(internal)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let fams = [Family::Exp, Family::Sin, Family::Mono(p.n as u32 + 2)];
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut worst_core = 0.0f64;
    let mut worst_final = 0.0f64;

    for trial in 0..p.trials {
        let fam = fams[rng.gen_range(0..fams.len())];
        let f = fam.boxed();
        let mut lambda: Vec<f64>;
        loop {
            lambda = (0..=p.n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            lambda.sort_by(f64::total_cmp);
            let spread = lambda[p.n] - lambda[0];
            if spread >= 0.5
                && lambda.windows(2).all(|w| w[1] - w[0] >= 1e-3 * spread)
            {
                break;
            }
        }
        lambda.shuffle(&mut rng);
        let direct =
            divdiff_eval(f.as_ref(), &NodeVector::from_points(&lambda).map_err(internal)?)
                .map_err(internal)?;
        let scale = direct.abs().max(1.0);
        let core = evaluate_core_expansion(f.as_ref(), &lambda, decomp.table()).map_err(internal)?;
        let rel_core = (direct - core).abs() / scale;
        let rel_final = decomp.residual(f.as_ref(), &lambda).map_err(internal)? / scale;
        worst_core = worst_core.max(rel_core);
        worst_final = worst_final.max(rel_final);
        rows.push(vec![
            trial.to_string(),
            fam.label(),
            p.n.to_string(),
            fnum(rel_core),
            fnum(rel_final),
            fnum(p.tol),
            p.seed.to_string(),
        ]);
    }

    let pass = worst_core <= p.tol && worst_final <= p.tol;
    let summary = envelope(
        "verify-decomposition",
        p,
        json!({
            "worst_core_residual": worst_core,
            "worst_final_residual": worst_final,
            "rows": rows.len(),
        }),
        Some(pass),
    );
    if let Some(out) = &p.out {
        write_verify_artifacts(
            out,
            "verify_decomposition",
            &summary,
            &["trial", "family", "n", "core_residual", "final_residual", "tol", "seed"],
            &rows,
        )?;
    }
    Ok(Outcome::json(summary, !pass))
}

pub(crate) fn run_partition(p: &PartitionParams) -> Result<Outcome, CliError> {
    if !(1..=20).contains(&p.k) {
        return Err(CliError::validation("need 1 <= --k <= 20"));
    }
    if p.trials == 0 || !(p.tol > 0.0) {
        return Err(CliError::validation("need --trials >= 1 and --tol > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let part = sphere_partition(p.k);
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut worst: BTreeMap<&'static str, f64> = BTreeMap::new();
    let record = |rows: &mut Vec<Vec<String>>,
                  worst: &mut BTreeMap<&'static str, f64>,
                  trial: u64,
                  check: &'static str,
                  disc: f64| {
        let w = worst.entry(check).or_insert(0.0);
        *w = w.max(disc);
        rows.push(vec![
            check.into(),
            trial.to_string(),
            p.k.to_string(),
            fnum(disc),
            fnum(p.tol),
            p.seed.to_string(),
        ]);
    };
    let mut support_violation = false;

    for trial in 0..p.trials {
        let mut xi: Vec<f64>;
        loop {
            xi = (0..p.k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if xi.iter().map(|x| x * x).sum::<f64>().sqrt() >= 0.1 {
                break;
            }
        }
        let w = part.weights(&xi);
        let sum_gap = (w.iter().sum::<f64>() - 1.0).abs();
        record(&mut rows, &mut worst, trial, "weights-sum", sum_gap);
        let range_gap = w
            .iter()
            .map(|&x| (-x).max(x - 1.0).max(0.0))
            .fold(0.0f64, f64::max);
        record(&mut rows, &mut worst, trial, "weights-range", range_gap);
        for (l0, &wl) in w.iter().enumerate() {
            if wl > p.tol && !part.in_chart(l0 + 1, &xi) {
                support_violation = true;
            }
        }
        // 0-homogeneity, sign of the scale included
        for c in [3.0, -0.5] {
            let scaled: Vec<f64> = xi.iter().map(|x| c * x).collect();
            let ws = part.weights(&scaled);
            let gap = w
                .iter()
                .zip(&ws)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            record(&mut rows, &mut worst, trial, "homogeneity", gap);
        }
    }

    // pullback along consecutive differences of a spectrum
    let ambient = p.k + 2;
    for trial in 0..p.trials {
        let size = rng.gen_range(2..=p.k + 1);
        let mut index_set: Vec<usize> = (0..ambient).collect();
        index_set.shuffle(&mut rng);
        index_set.truncate(size);
        index_set.sort_unstable();
        let mut lambda: Vec<f64>;
        loop {
            lambda = (0..ambient).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mut sorted = lambda.clone();
            sorted.sort_by(f64::total_cmp);
            if sorted.windows(2).all(|w| w[1] - w[0] >= 0.05) {
                break;
            }
        }
        let th = theta_all(&index_set, &lambda).map_err(internal)?;
        let sum_gap = (th.iter().sum::<f64>() - 1.0).abs();
        record(&mut rows, &mut worst, trial, "pullback-sum", sum_gap);
        for (pos, &member) in index_set[1..].iter().enumerate() {
            let single = theta_eval(&index_set, member, &lambda).map_err(internal)?;
            record(
                &mut rows,
                &mut worst,
                trial,
                "pullback-member",
                (single - th[pos]).abs(),
            );
            if th[pos] > p.tol {
                let chart = CoverChart::new(&index_set, member).map_err(internal)?;
                if !chart.membership(&lambda) {
                    support_violation = true;
                }
            }
        }
    }

    let overall = worst.values().cloned().fold(0.0f64, f64::max);
    let pass = overall <= p.tol && !support_violation;
    let worst_json: serde_json::Map<String, serde_json::Value> =
        worst.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    let summary = envelope(
        "verify-partition",
        p,
        json!({
            "worst_discrepancies": worst_json,
            "overall": overall,
            "support_violation": support_violation,
            "rows": rows.len(),
        }),
        Some(pass),
    );
    if let Some(out) = &p.out {
        write_verify_artifacts(
            out,
            "verify_partition",
            &summary,
            &["check", "trial", "k", "discrepancy", "tol", "seed"],
            &rows,
        )?;
    }
    Ok(Outcome::json(summary, !pass))
}

fn plateau_bump(arity: usize) -> RatioBump {
    // consecutive-ratio windows with plateau [0.5, 2]; the outermost one
    // touches ratio 0 so the support reaches the last axis
    let outer = Window { rise_start: 0.0, rise_end: 0.5, fall_start: 2.0, fall_end: 4.0 };
    let inner = Window { rise_start: 0.25, rise_end: 0.5, fall_start: 2.0, fall_end: 4.0 };
    let mut windows = vec![inner; arity - 2];
    windows.push(outer);
    RatioBump::new(windows)
}

pub(crate) fn run_fourier(p: &FourierParams) -> Result<Outcome, CliError> {
    if !(p.n == 2 || p.n == 3) {
        return Err(CliError::validation("need --n 2 or --n 3"));
    }
    if p.trials == 0 || !(p.tol > 0.0) {
        return Err(CliError::validation("need --trials >= 1 and --tol > 0"));
    }
    let points = p.points.unwrap_or_else(|| default_points_per_axis(p.n));
    if !points.is_power_of_two() || points < 64 {
        return Err(CliError::validation("--points must be a power of two, at least 64"));
    }
    let half_width = p.half_width.unwrap_or(if p.n == 2 { DEFAULT_HALF_WIDTH } else { 12.0 });
    if !(half_width > 1.0) {
        return Err(CliError::validation("--half-width must exceed 1"));
    }

    let symbols: Vec<(&'static str, Box<dyn HomogeneousSymbol>)> = if p.n == 2 {
        vec![
            ("even-bump", Box::new(plateau_bump(2))),
            (
                "mixed-parity-sum",
                Box::new(SymbolSum(
                    plateau_bump(2),
                    SignedSymbol { base: plateau_bump(2), parity: vec![1, 1] },
                )),
            ),
        ]
    } else {
        vec![("even-bump-3", Box::new(plateau_bump(3)))]
    };

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let (r_lo, r_hi) = if p.n == 2 { (0.3, 1.5) } else { (0.7, 1.3) };
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut worst: BTreeMap<String, f64> = BTreeMap::new();
    let mut resolved_h = 0.0;
    for (name, sym) in &symbols {
        let eps_min = sym.margins().into_iter().fold(f64::INFINITY, f64::min);
        let span = half_width + (1.0 / eps_min).ln() + 2.0;
        let h = span / points as f64;
        resolved_h = h;
        let w = fourier_weights(sym.as_ref(), h, half_width).map_err(internal)?;
        let mut sym_worst = 0.0f64;
        for trial in 0..p.trials {
            let xi: Vec<f64> = (0..p.n)
                .map(|_| {
                    let r = rng.gen_range(r_lo..r_hi);
                    if rng.gen_bool(0.5) {
                        r
                    } else {
                        -r
                    }
                })
                .collect();
            let err = reconstruction_error(sym.as_ref(), &w, &xi).map_err(internal)?;
            sym_worst = sym_worst.max(err);
            rows.push(vec![
                (*name).into(),
                trial.to_string(),
                p.n.to_string(),
                fnum(err),
                fnum(p.tol),
                p.seed.to_string(),
            ]);
        }
        worst.insert((*name).to_string(), sym_worst);
    }

    let overall = worst.values().cloned().fold(0.0f64, f64::max);
    let pass = overall <= p.tol;
    let worst_json: serde_json::Map<String, serde_json::Value> =
        worst.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    let summary = envelope(
        "verify-fourier",
        p,
        json!({
            "worst_errors": worst_json,
            "overall": overall,
            "resolved": { "points": points, "half_width": half_width, "h": resolved_h },
            "rows": rows.len(),
        }),
        Some(pass),
    );
    if let Some(out) = &p.out {
        write_verify_artifacts(
            out,
            "verify_fourier",
            &summary,
            &["symbol", "trial", "n", "error", "tol", "seed"],
            &rows,
        )?;
    }
    Ok(Outcome::json(summary, !pass))
}

pub(crate) fn run_remark(p: &RemarkParams) -> Result<Outcome, CliError> {
    if p.trials == 0 || !(p.tol > 0.0) {
        return Err(CliError::validation("need --trials >= 1 and --tol > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut worst = 0.0f64;
    for trial in 0..p.trials {
        let t = [
            rng.gen_range(0.1..10.0),
            rng.gen_range(0.1..10.0),
            rng.gen_range(0.1..10.0),
            rng.gen_range(0.1..10.0),
        ];
        let r = remark_identity(t).map_err(internal)?;
        worst = worst.max(r.residual);
        rows.push(vec![
            trial.to_string(),
            fnum(t[0]),
            fnum(t[1]),
            fnum(t[2]),
            fnum(t[3]),
            fnum(r.lhs),
            fnum(r.residual),
            fnum(p.tol),
            p.seed.to_string(),
        ]);
    }
    let pass = worst <= p.tol;
    let summary = envelope(
        "verify-remark",
        p,
        json!({ "worst_residual": worst, "rows": rows.len() }),
        Some(pass),
    );
    if let Some(out) = &p.out {
        write_verify_artifacts(
            out,
            "verify_remark",
            &summary,
            &["trial", "t0", "t1", "t2", "t3", "lhs", "residual", "tol", "seed"],
            &rows,
        )?;
    }
    Ok(Outcome::json(summary, !pass))
}
