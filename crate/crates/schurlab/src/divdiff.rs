//! Divided differences with confluent (repeated-node) support.
//!
//! The divided difference of order m of a function f at nodes
//! `z_0, ..., z_m` is defined by `f[z] = f(z)` and the recursion
//!
//! ```text
//! f[z_0, ..., z_m] = (f[z_0, z_2, ..., z_m] - f[z_1, z_2, ..., z_m]) / (z_0 - z_1)
//! ```
//!
//! for z_0 != z_1; it is a symmetric function of the nodes. Repeated nodes
//! are handled by continuity: a node of multiplicity m consumes derivatives
//! of f up to order m - 1, and the fully coincident value is
//! `f^(m)(z) / m!`. Evaluation uses the confluent Newton tableau with equal
//! nodes grouped into contiguous blocks, which reproduces the recursion
//! exactly in the distinct case and its limit in the confluent case.
//!
//! The singular family [`AbsPower`] (`a_n(s) = |s| s^(n-1)`) is only
//! (n-1)-times continuously differentiable, so its n-th order divided
//! difference at a fully coincident tuple is taken to be 0 by convention;
//! the symbol calculus built on a_n never evaluates on the diagonal, so the
//! convention is an almost-everywhere normalization, not a claim about a
//! limit.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Nodes closer than `NODE_CLASH_TOL * (1 + max |node|)` count as one
/// confluent node. Well below any node spacing the test batteries generate,
/// and far above the rounding noise of the arithmetic that produces nodes.
pub const NODE_CLASH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DivDiffError {
    /// A confluent evaluation demanded a derivative order the function does
    /// not supply (its smoothness class is too small for the multiplicities).
    #[error("derivative order {required} exceeds available smoothness {available}")]
    OrderTooLow { required: u32, available: u32 },
    /// Node multiplicities must be at least 1 and the node list nonempty.
    #[error("invalid node configuration: {0}")]
    BadNodes(String),
}

/// A scalar function together with the derivatives it can honestly supply.
///
/// `derivative(d, x)` returns the d-th derivative at x (d = 0 is the value),
/// or `None` when the function's smoothness class does not contain order d.
/// Availability is declared per class, not per point: [`AbsPower`] of order n
/// refuses d >= n everywhere even though the pointwise derivative exists away
/// from the kink.
pub trait SmoothFunction: Sync {
    fn derivative(&self, d: u32, x: f64) -> Option<f64>;

    /// Value of the order-th divided difference at the fully coincident
    /// tuple `(x, ..., x)`. Defaults to `f^(order)(x) / order!`; singular
    /// families with a diagonal normalization convention override this.
    fn diagonal(&self, order: u32, x: f64) -> Option<f64> {
        self.derivative(order, x).map(|v| v / factorial(order))
    }
}

/// x^d with analytic derivatives.
#[derive(Debug, Clone, Copy)]
pub struct Monomial(pub u32);

impl SmoothFunction for Monomial {
    fn derivative(&self, d: u32, x: f64) -> Option<f64> {
        let n = self.0;
        if d > n {
            return Some(0.0);
        }
        // n (n-1) ... (n-d+1) x^(n-d)
        let mut c = 1.0;
        for j in 0..d {
            c *= (n - j) as f64;
        }
        Some(c * x.powi((n - d) as i32))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Exp;

impl SmoothFunction for Exp {
    fn derivative(&self, _d: u32, x: f64) -> Option<f64> {
        Some(x.exp())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Sin;

impl SmoothFunction for Sin {
    fn derivative(&self, d: u32, x: f64) -> Option<f64> {
        Some(match d % 4 {
            0 => x.sin(),
            1 => x.cos(),
            2 => -x.sin(),
            _ => -x.cos(),
        })
    }
}

/// The singular symbol family `a_n(s) = |s| s^(n-1) = sign(s) s^n`.
///
/// a_n is (n-1)-times continuously differentiable on the line with
/// `a_n^(d)(s) = sign(s) * n!/(n-d)! * s^(n-d)` for d < n (value 0 at s = 0),
/// and its class stops there: order n derivatives are refused everywhere.
/// The n-th divided difference at a fully coincident tuple is 0 by
/// convention (see module docs).
#[derive(Debug, Clone, Copy)]
pub struct AbsPower {
    n: u32,
}

impl AbsPower {
    pub fn order(&self) -> u32 {
        self.n
    }

    /// Plain value a_n(s).
    pub fn value(&self, s: f64) -> f64 {
        s.abs() * s.powi(self.n as i32 - 1)
    }
}

/// a_n with the stated degree; degree 0 would be the sign function, which is
/// outside the calculus.
pub fn make_abs_power(n: u32) -> AbsPower {
    assert!(n >= 1, "absolute power degree must be at least 1");
    AbsPower { n }
}

impl SmoothFunction for AbsPower {
    fn derivative(&self, d: u32, x: f64) -> Option<f64> {
        if d >= self.n {
            return None;
        }
        if x == 0.0 {
            return Some(0.0);
        }
        // On each half-line a_n(x) = sign(x) x^n, so
        // a_n^(d)(x) = sign(x) * n!/(n-d)! * x^(n-d).
        let mut c = 1.0;
        for j in 0..d {
            c *= (self.n - j) as f64;
        }
        Some(x.signum() * c * x.powi((self.n - d) as i32))
    }

    fn diagonal(&self, order: u32, x: f64) -> Option<f64> {
        if order == self.n {
            // Diagonal convention for the order the family is built for.
            Some(0.0)
        } else {
            self.derivative(order, x).map(|v| v / factorial(order))
        }
    }
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// A node tuple for a divided difference: distinct values with
/// multiplicities. The divided-difference order is (total multiplicity) - 1.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeVector {
    blocks: Vec<(f64, u32)>,
}

impl NodeVector {
    /// Groups raw points into confluent blocks. Points within
    /// `NODE_CLASH_TOL * (1 + max|point|)` of an earlier point join its
    /// block (keeping the earlier representative value); block order is
    /// first appearance.
    pub fn from_points(points: &[f64]) -> Result<Self, DivDiffError> {
        if points.is_empty() {
            return Err(DivDiffError::BadNodes("empty node list".into()));
        }
        let scale = 1.0 + points.iter().fold(0.0f64, |m, p| m.max(p.abs()));
        let tol = NODE_CLASH_TOL * scale;
        let mut blocks: Vec<(f64, u32)> = Vec::new();
        for &p in points {
            if !p.is_finite() {
                return Err(DivDiffError::BadNodes(format!("non-finite node {p}")));
            }
            match blocks.iter_mut().find(|(v, _)| (*v - p).abs() <= tol) {
                Some((_, m)) => *m += 1,
                None => blocks.push((p, 1)),
            }
        }
        Ok(Self { blocks })
    }

    /// Explicit blocks; values must be pairwise separated by more than the
    /// clash tolerance and every multiplicity positive.
    pub fn from_blocks(blocks: &[(f64, u32)]) -> Result<Self, DivDiffError> {
        if blocks.is_empty() {
            return Err(DivDiffError::BadNodes("empty block list".into()));
        }
        let scale = 1.0 + blocks.iter().fold(0.0f64, |m, (v, _)| m.max(v.abs()));
        let tol = NODE_CLASH_TOL * scale;
        for (i, &(v, m)) in blocks.iter().enumerate() {
            if !v.is_finite() {
                return Err(DivDiffError::BadNodes(format!("non-finite node {v}")));
            }
            if m == 0 {
                return Err(DivDiffError::BadNodes(format!("zero multiplicity at node {v}")));
            }
            for &(w, _) in &blocks[..i] {
                if (v - w).abs() <= tol {
                    return Err(DivDiffError::BadNodes(format!(
                        "nodes {w} and {v} are not distinct at the clash tolerance"
                    )));
                }
            }
        }
        Ok(Self { blocks: blocks.to_vec() })
    }

    pub fn blocks(&self) -> &[(f64, u32)] {
        &self.blocks
    }

    /// Divided-difference order: total multiplicity minus one.
    pub fn order(&self) -> u32 {
        self.blocks.iter().map(|(_, m)| m).sum::<u32>() - 1
    }

    /// Expanded node list, confluent copies adjacent.
    pub fn points(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for &(v, m) in &self.blocks {
            for _ in 0..m {
                out.push(v);
            }
        }
        out
    }
}

/// Evaluates `f[nodes]` by the confluent Newton tableau.
pub fn divdiff_eval(f: &dyn SmoothFunction, nodes: &NodeVector) -> Result<f64, DivDiffError> {
    let blocks = nodes.blocks();
    if blocks.len() == 1 {
        let (x, m) = blocks[0];
        let order = m - 1;
        return f
            .diagonal(order, x)
            .ok_or_else(|| order_too_low(f, order, x));
    }

    // Expanded nodes with their block ids; same-block entries are adjacent.
    let mut z: Vec<f64> = Vec::new();
    let mut bid: Vec<usize> = Vec::new();
    for (b, &(v, m)) in blocks.iter().enumerate() {
        for _ in 0..m {
            z.push(v);
            bid.push(b);
        }
    }
    let n = z.len();

    // col[i] holds f[z_i, ..., z_{i+j}] for the current tableau column j.
    let mut col: Vec<f64> = Vec::with_capacity(n);
    for &x in &z {
        col.push(f.derivative(0, x).ok_or_else(|| order_too_low(f, 0, x))?);
    }
    for j in 1..n {
        for i in 0..(n - j) {
            col[i] = if bid[i] == bid[i + j] {
                // Whole span inside one block: confluent entry f^(j)(z)/j!.
                let x = z[i];
                f.derivative(j as u32, x)
                    .ok_or_else(|| order_too_low(f, j as u32, x))?
                    / factorial(j as u32)
            } else {
                (col[i + 1] - col[i]) / (z[i + j] - z[i])
            };
        }
        col.truncate(n - j);
    }
    Ok(col[0])
}

fn order_too_low(f: &dyn SmoothFunction, required: u32, x: f64) -> DivDiffError {
    // Largest order the function still supplies at x, for the error report.
    let mut available = 0;
    while available < required && f.derivative(available + 1, x).is_some() {
        available += 1;
    }
    DivDiffError::OrderTooLow { required, available }
}

/// Residue-form evaluation result. The rounding error of `value` is about
/// machine epsilon times `term_mass`, whatever the node scales; callers
/// reject the evaluation when the mass is large (clustered nodes) and use
/// the tableau instead.
#[derive(Debug, Clone, Copy)]
pub struct ResidueEval {
    pub value: f64,
    /// sum of the absolute per-block contributions
    pub term_mass: f64,
}

/// Evaluates `f[points]` by the residue expansion
///
/// ```text
/// f[z] = sum_b  (1/(m_b - 1)!) d^(m_b - 1)/dx [ f(x) prod_{c != b} (x - mu_c)^(-m_c) ]  at x = mu_b
/// ```
///
/// with blocks formed from exactly equal points (no clash tolerance).
/// Unlike the tableau, no intermediate quantity mixes scales additively,
/// so geometric node families spanning hundreds of orders of magnitude
/// evaluate to near machine precision: the tableau loses information the
/// moment a near-one entry absorbs a term below its ulp and later
/// divisions by tiny gaps amplify that loss past the value itself.
/// The product derivatives use the logarithmic-derivative recurrence over
/// the power sums of inverse gaps. Blocks whose function derivatives all
/// vanish contribute zero without touching their gap products, which keeps
/// underflowed nodes harmless.
pub fn divdiff_residue(
    f: &dyn SmoothFunction,
    points: &[f64],
) -> Result<ResidueEval, DivDiffError> {
    if points.is_empty() {
        return Err(DivDiffError::BadNodes("empty node list".into()));
    }
    let mut blocks: Vec<(f64, u32)> = Vec::new();
    for &p in points {
        if !p.is_finite() {
            return Err(DivDiffError::BadNodes(format!("non-finite node {p}")));
        }
        match blocks.iter_mut().find(|(v, _)| *v == p) {
            Some((_, m)) => *m += 1,
            None => blocks.push((p, 1)),
        }
    }
    if blocks.len() == 1 {
        let (x, m) = blocks[0];
        let order = m - 1;
        let value = f.diagonal(order, x).ok_or_else(|| order_too_low(f, order, x))?;
        return Ok(ResidueEval { value, term_mass: value.abs() });
    }

    let mut value = 0.0f64;
    let mut mass = 0.0f64;
    for (b, &(mu, m)) in blocks.iter().enumerate() {
        let m = m as usize;
        let mut fd = Vec::with_capacity(m);
        for j in 0..m {
            fd.push(
                f.derivative(j as u32, mu)
                    .ok_or_else(|| order_too_low(f, j as u32, mu))?,
            );
        }
        if fd.iter().all(|&v| v == 0.0) {
            continue;
        }

        // power sums of inverse gaps weighted by multiplicity
        let mut s = vec![0.0f64; m];
        let mut g0 = 1.0f64;
        for (c, &(nu, mc)) in blocks.iter().enumerate() {
            if c == b {
                continue;
            }
            let gap = mu - nu;
            g0 /= gap.powi(mc as i32);
            let mut inv = 1.0 / gap;
            for sr in s.iter_mut().take(m - 1) {
                *sr += mc as f64 * inv;
                inv /= gap;
            }
        }

        // derivatives of the gap product G via (ln G)' = -S_1:
        // lp[r] = (d/dx)^r (ln G)'(mu) = (-1)^(r+1) r! S_(r+1)
        let mut g = vec![0.0f64; m];
        g[0] = g0;
        if m > 1 {
            let mut lp = vec![0.0f64; m - 1];
            let mut fact_r = 1.0;
            for r in 0..m - 1 {
                if r > 0 {
                    fact_r *= r as f64;
                }
                let sign = if r % 2 == 0 { -1.0 } else { 1.0 };
                lp[r] = sign * fact_r * s[r];
            }
            for next in 1..m {
                let r = next - 1;
                let mut acc = 0.0;
                let mut binom = 1.0f64;
                for j in 0..=r {
                    acc += binom * g[j] * lp[r - j];
                    binom *= (r - j) as f64 / (j + 1) as f64;
                }
                g[next] = acc;
            }
        }

        let top = m - 1;
        let mut h = 0.0f64;
        let mut binom = 1.0f64;
        for j in 0..=top {
            if fd[j] != 0.0 {
                h += binom * fd[j] * g[top - j];
            }
            binom *= (top - j) as f64 / (j + 1) as f64;
        }
        let term = h / factorial(top as u32);
        value += term;
        mass += term.abs();
    }
    Ok(ResidueEval { value, term_mass: mass })
}

/// Monte Carlo estimate of a divided difference from the simplex-integral
/// representation: for f with m continuous derivatives,
/// `f[z_0..z_m] = E[ f^(m)(w . z) ] / m!` with w uniform on the standard
/// m-simplex. Entirely independent of the tableau; used as an oracle.
#[derive(Debug, Clone, Copy)]
pub struct SimplexEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: u64,
}

/// Draws `samples` uniform barycentric weights (normalized Exp(1) vectors)
/// and averages `f^(m)` at the convex combinations. Nodes may repeat; the
/// order m is `points.len() - 1`.
pub fn simplex_oracle(
    f: &dyn SmoothFunction,
    points: &[f64],
    samples: u64,
    seed: u64,
) -> Result<SimplexEstimate, DivDiffError> {
    if points.is_empty() {
        return Err(DivDiffError::BadNodes("empty node list".into()));
    }
    let m = (points.len() - 1) as u32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut w = vec![0.0f64; points.len()];
    for _ in 0..samples {
        let mut tot = 0.0;
        for wi in w.iter_mut() {
            // Exp(1) via inverse CDF of 1 - U, U uniform in [0, 1).
            let u: f64 = rng.gen::<f64>();
            *wi = -(1.0 - u).ln();
            tot += *wi;
        }
        let x: f64 = w.iter().zip(points).map(|(wi, p)| wi / tot * p).sum();
        let v = f.derivative(m, x).ok_or_else(|| order_too_low(f, m, x))?;
        sum += v;
        sum_sq += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    let fact = factorial(m);
    Ok(SimplexEstimate {
        mean: mean / fact,
        std_err: (var / n).sqrt() / fact,
        samples,
    })
}
