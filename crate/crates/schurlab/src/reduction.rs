//! Node-insertion and merge identities for divided differences.
//!
//! A divided difference on nodes with multiplicities can be rewritten as a
//! short linear combination of divided differences of the same order in
//! which mass has moved between nodes:
//!
//! * inserting a fresh point xi against a pair of distinct nodes
//!   ([`reduce_general`]); the simple-node case is the classical two-term
//!   insertion identity, the confluent case produces `alpha_i + alpha_j`
//!   terms with coefficients `p_{alpha,l}` evaluated at a difference ratio;
//! * choosing xi to be one of the existing nodes, which merges a node away
//!   and is the engine of the decomposition tables ([`reduce_algebraic`]);
//! * inserting the point 0 against a pair of nonzero nodes, valid for
//!   functions that are only C^{n-1} across 0 such as the singular family
//!   `|s| s^(n-1)` ([`reduce_zero_insert`]).
//!
//! Every operation returns a [`ReductionExpansion`]; the defining property,
//! exercised throughout the test batteries, is that evaluating the expansion
//! reproduces the left-hand side.

use crate::divdiff::{divdiff_eval, DivDiffError, NodeVector, SmoothFunction, NODE_CLASH_TOL};
use crate::poly::{binomial, MultiPoly};
use num::rational::BigRational;
use num::FromPrimitive;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReductionError {
    /// The chosen node pair coincides; the identity's denominator vanishes.
    #[error("nodes at positions {i} and {j} coincide")]
    DegenerateDenominator { i: usize, j: usize },
    /// Zero-insertion requires the chosen pair to be nonzero.
    #[error("node at position {0} is zero")]
    ZeroNode(usize),
    #[error("index {0} out of range")]
    BadIndex(usize),
    #[error(transparent)]
    Nodes(#[from] DivDiffError),
}

/// Which identity produced an expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpansionSource {
    /// Simple-node xi insertion (both multiplicities 1).
    InsertXi,
    /// General confluent xi insertion.
    General,
    /// Merge of one node into another (xi equal to an existing node).
    Algebraic,
    /// Insertion of the point 0.
    ZeroInsert,
}

/// A linear combination of divided differences, all of the same order as the
/// left-hand side it expands.
#[derive(Debug, Clone)]
pub struct ReductionExpansion {
    pub source: ExpansionSource,
    pub terms: Vec<(f64, NodeVector)>,
}

impl ReductionExpansion {
    /// Sum of coefficient times divided difference over the terms.
    pub fn eval(&self, f: &dyn SmoothFunction) -> Result<f64, DivDiffError> {
        let mut acc = 0.0;
        for (c, nodes) in &self.terms {
            acc += c * divdiff_eval(f, nodes)?;
        }
        Ok(acc)
    }

    /// Total multiplicity of each term (order + 1); equal across terms.
    pub fn tuple_len(&self) -> u32 {
        self.terms.first().map_or(0, |(_, nv)| nv.order() + 1)
    }
}

/// The coefficient polynomial `p_{a,l}(x) = C(a+l-1, l) x^a (1-x)^l`,
/// exact in one variable. Vanishes at 0 whenever a >= 1, which is what
/// keeps the decomposition tables free of constant terms.
pub fn p_poly(a: u32, l: u32) -> MultiPoly {
    assert!(a >= 1, "p_poly needs a >= 1");
    let x = MultiPoly::var(1, 0);
    let mut one_minus_x = MultiPoly::one(1);
    one_minus_x = one_minus_x.add(&x.scale(&BigRational::from_i64(-1).unwrap()));
    let mut p = MultiPoly::one(1);
    for _ in 0..a {
        p = p.mul(&x);
    }
    for _ in 0..l {
        p = p.mul(&one_minus_x);
    }
    let c = binomial((a + l - 1) as u64, l as u64);
    p.scale(&BigRational::from_integer(c))
}

fn node_scale(blocks: &[(f64, u32)]) -> f64 {
    1.0 + blocks.iter().fold(0.0f64, |m, (v, _)| m.max(v.abs()))
}

/// Merges `(value, mult)` pairs that coincide at the clash tolerance and
/// drops zero multiplicities, producing a valid block list.
fn merge_blocks(raw: &[(f64, u32)]) -> Result<NodeVector, DivDiffError> {
    let tol = NODE_CLASH_TOL * node_scale(raw);
    let mut blocks: Vec<(f64, u32)> = Vec::new();
    for &(v, m) in raw {
        if m == 0 {
            continue;
        }
        match blocks.iter_mut().find(|(w, _)| (*w - v).abs() <= tol) {
            Some((_, mm)) => *mm += m,
            None => blocks.push((v, m)),
        }
    }
    NodeVector::from_blocks(&blocks)
}

/// Expands `f[nodes]` by inserting the point `xi` against the node pair
/// `(i, j)` (block indices): the first sum moves mass from node i to xi with
/// coefficients `p_{alpha_j, l}((lambda_i - xi)/(lambda_i - lambda_j))`, the
/// second from node j with `p_{alpha_i, l}((xi - lambda_j)/(lambda_i -
/// lambda_j))`, l running to the multiplicity left of the retained node.
pub fn reduce_general(
    nodes: &NodeVector,
    i: usize,
    j: usize,
    xi: f64,
) -> Result<ReductionExpansion, ReductionError> {
    let blocks = nodes.blocks();
    if i >= blocks.len() || i == j {
        return Err(ReductionError::BadIndex(i));
    }
    if j >= blocks.len() {
        return Err(ReductionError::BadIndex(j));
    }
    let (li, ai) = blocks[i];
    let (lj, aj) = blocks[j];
    let tol = NODE_CLASH_TOL * node_scale(blocks);
    if (li - lj).abs() <= tol {
        return Err(ReductionError::DegenerateDenominator { i, j });
    }

    let rest: Vec<(f64, u32)> = blocks
        .iter()
        .enumerate()
        .filter(|(m, _)| *m != i && *m != j)
        .map(|(_, &b)| b)
        .collect();

    let u = (li - xi) / (li - lj);
    let v = (xi - lj) / (li - lj);
    let mut terms = Vec::with_capacity((ai + aj) as usize);
    for l in 0..ai {
        let coeff = p_poly(aj, l).eval(&[u]);
        let mut raw = rest.clone();
        raw.push((li, ai - l));
        raw.push((xi, aj + l));
        terms.push((coeff, merge_blocks(&raw)?));
    }
    for l in 0..aj {
        let coeff = p_poly(ai, l).eval(&[v]);
        let mut raw = rest.clone();
        raw.push((xi, ai + l));
        raw.push((lj, aj - l));
        terms.push((coeff, merge_blocks(&raw)?));
    }
    let source = if ai == 1 && aj == 1 {
        ExpansionSource::InsertXi
    } else {
        ExpansionSource::General
    };
    Ok(ReductionExpansion { source, terms })
}

/// The merge identity: xi is the existing node `k`, so node j's mass (first
/// sum) or node i's mass (second sum) is absorbed into node k and every term
/// has one fewer distinct node.
pub fn reduce_algebraic(
    nodes: &NodeVector,
    i: usize,
    j: usize,
    k: usize,
) -> Result<ReductionExpansion, ReductionError> {
    let blocks = nodes.blocks();
    if k >= blocks.len() {
        return Err(ReductionError::BadIndex(k));
    }
    if k == i || k == j {
        return Err(ReductionError::BadIndex(k));
    }
    let mut exp = reduce_general(nodes, i, j, blocks[k].0)?;
    exp.source = ExpansionSource::Algebraic;
    for (_, nv) in &exp.terms {
        debug_assert_eq!(nv.blocks().len() + 1, blocks.len());
    }
    Ok(exp)
}

/// Zero insertion against positions `i` and `j` of a raw tuple:
/// `f[t] = t_i/(t_i - t_j) f[t with t_j := 0] - t_j/(t_i - t_j) f[t with t_i := 0]`.
/// Valid for f in C^{n-1} with n-th derivatives away from 0 only, provided
/// t_i, t_j are nonzero and distinct.
pub fn reduce_zero_insert(
    t: &[f64],
    i: usize,
    j: usize,
) -> Result<ReductionExpansion, ReductionError> {
    if i >= t.len() || i == j {
        return Err(ReductionError::BadIndex(i));
    }
    if j >= t.len() {
        return Err(ReductionError::BadIndex(j));
    }
    let scale = 1.0 + t.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tol = NODE_CLASH_TOL * scale;
    if (t[i] - t[j]).abs() <= tol {
        return Err(ReductionError::DegenerateDenominator { i, j });
    }
    if t[i].abs() <= tol {
        return Err(ReductionError::ZeroNode(i));
    }
    if t[j].abs() <= tol {
        return Err(ReductionError::ZeroNode(j));
    }
    let mut t_zero_j = t.to_vec();
    t_zero_j[j] = 0.0;
    let mut t_zero_i = t.to_vec();
    t_zero_i[i] = 0.0;
    let d = t[i] - t[j];
    Ok(ReductionExpansion {
        source: ExpansionSource::ZeroInsert,
        terms: vec![
            (t[i] / d, NodeVector::from_points(&t_zero_j)?),
            (-t[j] / d, NodeVector::from_points(&t_zero_i)?),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divdiff::{make_abs_power, Exp, Monomial};

    #[test]
    fn p_poly_small_cases() {
        // p_{1,0} = x
        let p = p_poly(1, 0);
        assert_eq!(p.num_terms(), 1);
        assert_eq!(p.eval(&[0.3]), 0.3);
        // p_{1,2} = x - 2x^2 + x^3
        let p = p_poly(1, 2);
        assert_eq!(p.num_terms(), 3);
        for x in [-0.7, 0.2, 1.9] {
            assert!((p.eval(&[x]) - x * (1.0 - x) * (1.0 - x)).abs() < 1e-14);
        }
        // p_{2,1} = 2x^2(1-x)
        let p = p_poly(2, 1);
        for x in [0.5, 2.0] {
            assert!((p.eval(&[x]) - 2.0 * x * x * (1.0 - x)).abs() < 1e-13);
        }
        // vanishing at 0 for all a >= 1
        for a in 1..5 {
            for l in 0..5 {
                assert_eq!(p_poly(a, l).eval(&[0.0]), 0.0);
            }
        }
    }

    #[test]
    fn two_point_insert_reproduces_slope() {
        let nodes = NodeVector::from_points(&[3.0, 1.0]).unwrap();
        let exp = reduce_general(&nodes, 0, 1, 0.0).unwrap();
        assert_eq!(exp.source, ExpansionSource::InsertXi);
        assert_eq!(exp.terms.len(), 2);
        assert!((exp.terms[0].0 - 1.5).abs() < 1e-15);
        assert!((exp.terms[1].0 + 0.5).abs() < 1e-15);
        let f = Monomial(2);
        assert!((exp.eval(&f).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn general_insert_identity_with_multiplicities() {
        let f = Exp;
        let nodes = NodeVector::from_blocks(&[(2.0, 2), (-1.0, 1), (0.5, 1)]).unwrap();
        let lhs = divdiff_eval(&f, &nodes).unwrap();
        let exp = reduce_general(&nodes, 0, 1, 0.3).unwrap();
        assert_eq!(exp.terms.len(), 3); // alpha_i + alpha_j = 2 + 1
        let rhs = exp.eval(&f).unwrap();
        assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn algebraic_merge_drops_a_node() {
        let f = Monomial(3);
        let nodes = NodeVector::from_points(&[1.0, 0.0, 2.0]).unwrap();
        let lhs = divdiff_eval(&f, &nodes).unwrap();
        let exp = reduce_algebraic(&nodes, 0, 2, 1).unwrap();
        assert_eq!(exp.terms.len(), 2);
        for (_, nv) in &exp.terms {
            assert_eq!(nv.blocks().len(), 2);
            assert_eq!(nv.order(), 2);
        }
        let rhs = exp.eval(&f).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn leading_order_is_preserved() {
        // f = x^n has constant n-th divided difference 1; any expansion's
        // coefficients must therefore sum appropriately.
        let f = Monomial(3);
        let nodes = NodeVector::from_points(&[1.0, 0.25, 2.0, -0.5]).unwrap();
        let exp = reduce_algebraic(&nodes, 1, 3, 0).unwrap();
        assert!((exp.eval(&f).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_insert_two_point_ratio() {
        // a_1 = |s|: first-order difference over (t0, -t1) expands to
        // (t0 - t1)/(t0 + t1).
        let a1 = make_abs_power(1);
        let t = [2.0, -0.75];
        let exp = reduce_zero_insert(&t, 0, 1).unwrap();
        let v = exp.eval(&a1).unwrap();
        assert!((v - (2.0 - 0.75) / (2.0 + 0.75)).abs() < 1e-15);
        let direct = divdiff_eval(&a1, &NodeVector::from_points(&t).unwrap()).unwrap();
        assert!((v - direct).abs() < 1e-15);
    }

    #[test]
    fn zero_insert_singular_family() {
        let a3 = make_abs_power(3);
        let t = [1.0, -2.0, 3.0, -4.0];
        let lhs = divdiff_eval(&a3, &NodeVector::from_points(&t).unwrap()).unwrap();
        let exp = reduce_zero_insert(&t, 0, 1).unwrap();
        let rhs = exp.eval(&a3).unwrap();
        assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn zero_insert_guards() {
        assert!(matches!(
            reduce_zero_insert(&[1.0, 0.0, 2.0], 0, 1),
            Err(ReductionError::ZeroNode(1))
        ));
        assert!(matches!(
            reduce_zero_insert(&[1.0, 1.0, 2.0], 0, 1),
            Err(ReductionError::DegenerateDenominator { .. })
        ));
    }
}
