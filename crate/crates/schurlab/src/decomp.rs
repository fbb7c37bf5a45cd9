//! Exact polynomial tables behind the multi-stage decomposition of a
//! divided difference, and the evaluators that verify it numerically.
//!
//! The construction runs by induction on the number of picks k. At k = 0
//! the table holds the single trivial entry: the divided difference over
//! the full node set with all multiplicities 1 and coefficient polynomial
//! 1. One step extends every sequence F by a pick (i, sigma), applies one
//! node-merging reduction to each term, and collects the results by the
//! new multiplicity vector beta. The coefficient attached to (F', beta) is
//! a polynomial in the fraction coordinates zeta_1..zeta_{k+1}, exact over
//! the rationals, and every monomial has positive degree in every
//! variable, so the polynomial vanishes whenever some argument is zero.
//!
//! Away from coinciding coordinates the table reproduces the divided
//! difference: summing weight * polynomial * reduced divided difference
//! over all sequences and multiplicity keys gives back f^[n](lambda)
//! ([`evaluate_core_expansion`]). For full-length sequences the reduced
//! terms are two-node divided differences, and the weight-polynomial
//! product collapses into a single 0-homogeneous function H of the
//! difference coordinates xi_1..xi_n ([`evaluate_h`],
//! [`FinalDecomposition`]).

use std::collections::BTreeMap;

use thiserror::Error;

use crate::combinatorics::{
    difference_basis, enumerate_choice_sequences, ChoiceSequence, ComboError, Sign,
};
use crate::divdiff::{divdiff_eval, DivDiffError, NodeVector, SmoothFunction, NODE_CLASH_TOL};
use crate::partition::{sphere_partition, theta_eval, PartitionError, SpherePartition};
use crate::poly::{rational_to_f64, MultiPoly};
use crate::reduction::p_poly;

/// Largest n the table builder accepts; the sequence count grows like
/// 2^k (n+1)!/(n+1-k)! and the polynomials fatten alongside.
pub const MAX_TABLE_N: usize = 6;

#[derive(Debug, Error)]
pub enum DecompError {
    #[error("table construction capped at n <= {MAX_TABLE_N}, got n = {0}")]
    SizeGuard(usize),
    #[error("evaluation point has coinciding coordinates")]
    OffDomain,
    #[error("xi coordinate {0} vanishes")]
    DegenerateDenominator(usize),
    #[error("no table entry for the requested sequence and multiplicity key")]
    MissingEntry,
    #[error(transparent)]
    Nodes(#[from] DivDiffError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Combinatorics(#[from] ComboError),
}

pub type PickList = Vec<(usize, Sign)>;

/// The exact coefficient polynomials of a k-pick decomposition stage.
///
/// Entries are keyed by the pick list of the sequence, then by the
/// multiplicity vector aligned with the sorted surviving index set; the
/// value is the k-variable polynomial in zeta_1..zeta_k.
#[derive(Debug, Clone)]
pub struct DecompositionTable {
    n: usize,
    k: usize,
    entries: BTreeMap<PickList, BTreeMap<Vec<u32>, MultiPoly>>,
}

impl DecompositionTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sequences(&self) -> impl Iterator<Item = (&PickList, &BTreeMap<Vec<u32>, MultiPoly>)> {
        self.entries.iter()
    }

    pub fn entry(&self, picks: &[(usize, Sign)], alpha: &[u32]) -> Option<&MultiPoly> {
        self.entries.get(picks).and_then(|m| m.get(alpha))
    }

    pub fn num_entries(&self) -> usize {
        self.entries.values().map(|m| m.len()).sum()
    }
}

/// Runs the induction up to k picks, 1 <= k <= n-1.
pub fn build_q_table(n: usize, k: usize) -> Result<DecompositionTable, DecompError> {
    if n > MAX_TABLE_N {
        return Err(DecompError::SizeGuard(n));
    }
    assert!(n >= 2 && k >= 1 && k <= n - 1, "need 2 <= n and 1 <= k <= n-1");

    // base stage: empty pick list, all multiplicities 1, polynomial 1
    let mut table: BTreeMap<PickList, BTreeMap<Vec<u32>, MultiPoly>> = BTreeMap::new();
    table.insert(Vec::new(), BTreeMap::from([(vec![1u32; n + 1], MultiPoly::one(0))]));

    for stage in 0..k {
        table = induction_step(n, stage, &table);
    }
    Ok(DecompositionTable { n, k, entries: table })
}

/// One pick: every (F, alpha) entry splits over the non-minimal elements i
/// of the surviving set and both branch signs, each contribution carrying
/// one more zeta variable.
fn induction_step(
    n: usize,
    stage: usize,
    prev: &BTreeMap<PickList, BTreeMap<Vec<u32>, MultiPoly>>,
) -> BTreeMap<PickList, BTreeMap<Vec<u32>, MultiPoly>> {
    let mut next: BTreeMap<PickList, BTreeMap<Vec<u32>, MultiPoly>> = BTreeMap::new();
    for (picks, alphas) in prev {
        let f_seq = ChoiceSequence::new(n, picks).expect("table keys are admissible");
        let active = f_seq.survivors().to_vec();
        for pos in 1..active.len() {
            let i = active[pos];
            let i_minus = active[pos - 1];
            let i_plus = if pos + 1 < active.len() { active[pos + 1] } else { active[0] };
            for sigma in [Sign::Plus, Sign::Minus] {
                let mut new_picks = picks.clone();
                new_picks.push((i, sigma));
                let bucket = next.entry(new_picks).or_default();
                for (alpha, q) in alphas {
                    let mult =
                        |idx: usize| alpha[active.iter().position(|&x| x == idx).unwrap()];
                    // + branch absorbs the pick into its upper neighbor and
                    // keeps the lower one; - branch absorbs the lower
                    // neighbor and keeps the pick
                    let (l_max, poly_mult, removed) = match sigma {
                        Sign::Plus => (mult(i_minus) - 1, mult(i), i),
                        Sign::Minus => (mult(i) - 1, mult(i_minus), i_minus),
                    };
                    let q_lift = q.extend_vars(stage + 1);
                    for l in 0..=l_max {
                        let p =
                            MultiPoly::embed_univariate(&p_poly(poly_mult, l), stage + 1, stage);
                        let term = q_lift.mul(&p);
                        let mut beta: Vec<(usize, u32)> = Vec::with_capacity(active.len() - 1);
                        for &idx in &active {
                            if idx == removed {
                                continue;
                            }
                            let m = if idx == i_plus {
                                let absorbed = match sigma {
                                    Sign::Plus => mult(i),
                                    Sign::Minus => mult(i_minus),
                                };
                                absorbed + mult(i_plus) + l
                            } else if sigma == Sign::Plus && idx == i_minus {
                                mult(i_minus) - l
                            } else if sigma == Sign::Minus && idx == i {
                                mult(i) - l
                            } else {
                                mult(idx)
                            };
                            beta.push((idx, m));
                        }
                        beta.sort_by_key(|&(idx, _)| idx);
                        let key: Vec<u32> = beta.into_iter().map(|(_, m)| m).collect();
                        debug_assert_eq!(key.iter().sum::<u32>(), (n + 1) as u32);
                        bucket
                            .entry(key)
                            .and_modify(|acc| *acc = acc.add(&term))
                            .or_insert(term);
                    }
                }
            }
        }
    }
    next
}

fn d_n_guard(lambda: &[f64]) -> Result<(), DecompError> {
    let scale = lambda.iter().map(|x| x.abs()).fold(0.0f64, f64::max);
    let tol = NODE_CLASH_TOL * (1.0 + scale);
    for i in 0..lambda.len() {
        for j in (i + 1)..lambda.len() {
            if (lambda[i] - lambda[j]).abs() <= tol {
                return Err(DecompError::OffDomain);
            }
        }
    }
    Ok(())
}

/// Sums weight * polynomial * reduced divided difference over the whole
/// table; on points with pairwise distinct coordinates this equals the
/// divided difference of order n at lambda.
pub fn evaluate_core_expansion(
    f: &dyn SmoothFunction,
    lambda: &[f64],
    table: &DecompositionTable,
) -> Result<f64, DecompError> {
    let n = table.n();
    let k = table.k();
    assert_eq!(lambda.len(), n + 1);
    d_n_guard(lambda)?;

    let mut total = 0.0;
    for (picks, alphas) in table.sequences() {
        let f_seq = ChoiceSequence::new(n, picks)?;
        let mut weight = 1.0;
        for l in 1..=k {
            let data = f_seq.index_data(l)?;
            weight *= theta_eval(&data.set, data.f.expect("pick level"), lambda)?;
            if weight == 0.0 {
                break;
            }
        }
        if weight == 0.0 {
            continue;
        }
        let zetas: Vec<f64> = (1..=k)
            .map(|l| f_seq.zeta_xi_eval(l, lambda).map(|(_, z)| z))
            .collect::<Result<_, _>>()?;
        let active = f_seq.survivors();
        for (alpha, q) in alphas {
            let coeff = q.eval(&zetas);
            if coeff == 0.0 {
                continue;
            }
            let blocks: Vec<(f64, u32)> =
                active.iter().zip(alpha).map(|(&idx, &m)| (lambda[idx], m)).collect();
            let dd = divdiff_eval(f, &NodeVector::from_blocks(&blocks)?)?;
            total += weight * coeff * dd;
        }
    }
    Ok(total)
}

/// Cached per-sequence data for evaluating H in xi coordinates.
struct HEngine {
    f_seq: ChoiceSequence,
    /// T matrices as floats, one per level 1..=n-1.
    t_mats: Vec<Vec<Vec<f64>>>,
    /// chart label positions l(k') within the sorted level sets
    chart_pos: Vec<usize>,
    /// R rows as floats: zeta numerator coefficients over xi_{l+1}..xi_n.
    r_rows: Vec<Vec<f64>>,
    partitions: Vec<SpherePartition>,
}

impl HEngine {
    fn new(f_seq: &ChoiceSequence) -> Result<Self, DecompError> {
        let n = f_seq.n();
        let mut t_mats = Vec::with_capacity(n - 1);
        let mut chart_pos = Vec::with_capacity(n - 1);
        let mut partitions = Vec::with_capacity(n - 1);
        let mut r_rows = Vec::new();
        for level in 1..n {
            let basis = difference_basis(f_seq, level)?;
            t_mats.push(
                basis
                    .t
                    .iter()
                    .map(|row| row.iter().map(rational_to_f64).collect())
                    .collect(),
            );
            if level == 1 {
                r_rows = basis
                    .r
                    .iter()
                    .map(|row| row.iter().map(rational_to_f64).collect())
                    .collect();
            }
            let data = f_seq.index_data(level)?;
            let fk = data.f.expect("pick level");
            chart_pos.push(data.set.iter().position(|&x| x == fk).expect("pick in set"));
            partitions.push(sphere_partition(n + 1 - level));
        }
        Ok(Self { f_seq: f_seq.clone(), t_mats, chart_pos, r_rows, partitions })
    }

    /// The partition factor of H at xi; 0 exactly outside the supports.
    fn theta_product(&self, xi: &[f64]) -> f64 {
        let n = self.f_seq.n();
        let mut prod = 1.0;
        for level in 1..n {
            let t = &self.t_mats[level - 1];
            let v: Vec<f64> = t
                .iter()
                .map(|row| row.iter().zip(&xi[level - 1..]).map(|(a, b)| a * b).sum())
                .collect();
            if v.iter().all(|x: &f64| *x == 0.0) {
                return 0.0;
            }
            let w = self.partitions[level - 1].eval(self.chart_pos[level - 1], &v);
            if w == 0.0 {
                return 0.0;
            }
            prod *= w;
        }
        prod
    }

    fn eval(&self, q: &MultiPoly, xi: &[f64]) -> Result<f64, DecompError> {
        let n = self.f_seq.n();
        assert_eq!(xi.len(), n);
        let theta = self.theta_product(xi);
        if theta == 0.0 {
            return Ok(0.0);
        }
        // inside the supports every xi_l with l <= n-1 is nonzero
        let mut zetas = Vec::with_capacity(n - 1);
        for l in 1..n {
            if xi[l - 1] == 0.0 {
                return Err(DecompError::DegenerateDenominator(l));
            }
            let num: f64 =
                self.r_rows[l - 1].iter().zip(xi).map(|(c, x)| c * x).sum();
            zetas.push(num / xi[l - 1]);
        }
        Ok(theta * q.eval(&zetas))
    }
}

/// H_{F,alpha}(xi): the weight-polynomial product of a full-length
/// sequence, written in the difference coordinates xi_1..xi_n. Degree-0
/// homogeneous, and vanishes when xi_n = 0.
pub fn evaluate_h(
    f_seq: &ChoiceSequence,
    alpha: &[u32],
    table: &DecompositionTable,
    xi: &[f64],
) -> Result<f64, DecompError> {
    assert_eq!(table.k(), table.n() - 1, "H needs a full-length table");
    let q = table.entry(f_seq.picks(), alpha).ok_or(DecompError::MissingEntry)?;
    HEngine::new(f_seq)?.eval(q, xi)
}

/// The assembled final decomposition for one n: every coefficient is a
/// single H function of the xi coordinates and every divided difference
/// has only two nodes.
pub struct FinalDecomposition {
    n: usize,
    table: DecompositionTable,
    engines: Vec<HEngine>,
}

impl FinalDecomposition {
    /// Builds the full table and the per-sequence engines. The assembly
    /// cost grows steeply with n; identity verification targets n <= 3.
    pub fn new(n: usize) -> Result<Self, DecompError> {
        let table = build_q_table(n, n - 1)?;
        let mut engines = Vec::new();
        for f_seq in enumerate_choice_sequences(n, n - 1) {
            engines.push(HEngine::new(&f_seq)?);
        }
        Ok(Self { n, table, engines })
    }

    pub fn table(&self) -> &DecompositionTable {
        &self.table
    }

    /// |f^[n](lambda) - sum over (F, alpha) of H * two-node divided
    /// difference|.
    pub fn residual(&self, f: &dyn SmoothFunction, lambda: &[f64]) -> Result<f64, DecompError> {
        let n = self.n;
        assert_eq!(lambda.len(), n + 1);
        d_n_guard(lambda)?;
        let direct = divdiff_eval(f, &NodeVector::from_points(lambda)?)?;

        let mut total = 0.0;
        for engine in &self.engines {
            let f_seq = &engine.f_seq;
            let xi: Vec<f64> = (1..=n).map(|l| f_seq.xi(l, lambda).unwrap()).collect();
            let theta = engine.theta_product(&xi);
            if theta == 0.0 {
                continue;
            }
            let survivors = f_seq.survivors();
            debug_assert_eq!(survivors.len(), 2);
            let alphas = self
                .table
                .entries
                .get(f_seq.picks())
                .expect("every full-length sequence has entries");
            for (alpha, q) in alphas {
                let h = engine.eval(q, &xi)?;
                if h == 0.0 {
                    continue;
                }
                let blocks =
                    [(lambda[survivors[0]], alpha[0]), (lambda[survivors[1]], alpha[1])];
                let dd = divdiff_eval(f, &NodeVector::from_blocks(&blocks)?)?;
                total += h * dd;
            }
        }
        Ok((direct - total).abs())
    }
}

/// Convenience wrapper; builds the decomposition afresh on every call.
pub fn verify_final_decomposition(
    f: &dyn SmoothFunction,
    lambda: &[f64],
    n: usize,
) -> Result<f64, DecompError> {
    FinalDecomposition::new(n)?.residual(f, lambda)
}

/// Serializes a table for regression snapshots: picks, multiplicity keys,
/// and polynomial terms with exact rational coefficients.
pub fn export_table_json(table: &DecompositionTable) -> serde_json::Value {
    let entries: Vec<serde_json::Value> = table
        .sequences()
        .flat_map(|(picks, alphas)| {
            let picks_json: Vec<serde_json::Value> = picks
                .iter()
                .map(|&(i, s)| {
                    serde_json::json!([i, if s == Sign::Plus { "+" } else { "-" }])
                })
                .collect();
            alphas.iter().map(move |(alpha, poly)| {
                let terms: Vec<serde_json::Value> = poly
                    .terms()
                    .map(|(exps, coeff)| serde_json::json!([exps, coeff.to_string()]))
                    .collect();
                serde_json::json!({
                    "picks": picks_json,
                    "alpha": alpha,
                    "poly": terms,
                })
            })
        })
        .collect();
    serde_json::json!({ "n": table.n(), "k": table.k(), "entries": entries })
}
