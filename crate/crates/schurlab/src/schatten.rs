//! Finite-dimensional Schatten machinery: dense complex matrices indexed by
//! a finite ordered label set, Schatten p-norms through singular values,
//! discrete multilinear Schur multipliers, triangular truncations, and the
//! two lattice symbol families obtained by composing `a_n` divided
//! differences with geometric node maps.
//!
//! Matrices are plain `DMatrix<Complex64>`; rows and columns are positions
//! in the sorted label set, so truncations defined through the label order
//! coincide with the positional ones.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::divdiff::{
    divdiff_eval, divdiff_residue, make_abs_power, DivDiffError, NodeVector,
    SmoothFunction,
};

pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchattenError {
    #[error("matrix is {got}x{got} but the symbol's label set has {expected} members")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("symbol arity {arity} needs that many matrices, got {got}")]
    ArityMismatch { arity: usize, got: usize },
    #[error(transparent)]
    Nodes(#[from] DivDiffError),
}

/// Schatten exponent with its conjugate; p = infinity is allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchattenExponent {
    p: f64,
}

impl SchattenExponent {
    pub fn new(p: f64) -> Self {
        assert!(p >= 1.0, "Schatten exponent below 1");
        Self { p }
    }

    pub fn infinity() -> Self {
        Self { p: f64::INFINITY }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dual(&self) -> f64 {
        if self.p == 1.0 {
            f64::INFINITY
        } else if self.p.is_infinite() {
            1.0
        } else {
            self.p / (self.p - 1.0)
        }
    }

    /// Target exponent of a product of factors in the given classes:
    /// 1/p = sum of 1/p_i.
    pub fn holder(parts: &[f64]) -> Self {
        assert!(!parts.is_empty());
        let inv: f64 = parts
            .iter()
            .map(|&p| {
                assert!(p >= 1.0);
                1.0 / p
            })
            .sum();
        Self::new(1.0 / inv)
    }
}

/// Singular values in descending order.
pub fn singular_values(x: &CMatrix) -> Vec<f64> {
    let svd = x.clone().svd(false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().cloned().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// ell^p norm of the singular values, max for p = infinity. Scaling by the
/// top singular value keeps small values from vanishing under the p-th
/// power before they are summed.
pub fn schatten_norm(x: &CMatrix, p: f64) -> f64 {
    assert!(p >= 1.0, "Schatten exponent below 1");
    let s = singular_values(x);
    let top = s[0];
    if top == 0.0 || p.is_infinite() {
        return top;
    }
    let sum: f64 = s.iter().map(|v| (v / top).powf(p)).sum();
    top * sum.powf(1.0 / p)
}

/// Frobenius norm, the p = 2 case without a decomposition.
pub fn hs_norm(x: &CMatrix) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// A bounded function on (n+1)-tuples from a finite ordered label set,
/// stored as a full table (last index fastest).
#[derive(Debug, Clone)]
pub struct DiscreteSymbol {
    arity: usize,
    labels: Vec<i64>,
    table: Vec<Complex64>,
}

impl DiscreteSymbol {
    /// Tabulates value(s_0, ..., s_n) over the label set; labels must be
    /// strictly increasing. Tabulation runs parallel over the leading
    /// index.
    pub fn tabulate(
        arity: usize,
        labels: Vec<i64>,
        value: impl Fn(&[i64]) -> Complex64 + Sync,
    ) -> Self {
        Self::try_tabulate(arity, labels, |s| Ok::<_, SchattenError>(value(s)))
            .unwrap()
    }

    pub fn try_tabulate<E: Send>(
        arity: usize,
        labels: Vec<i64>,
        value: impl Fn(&[i64]) -> Result<Complex64, E> + Sync,
    ) -> Result<Self, E> {
        assert!(arity >= 1);
        assert!(!labels.is_empty());
        assert!(labels.windows(2).all(|w| w[0] < w[1]), "labels must be sorted");
        let m = labels.len();
        let block = m.pow(arity as u32);
        let chunks: Vec<Result<Vec<Complex64>, E>> = (0..m)
            .into_par_iter()
            .map(|lead| {
                let mut out = Vec::with_capacity(block);
                let mut tuple = vec![0i64; arity + 1];
                tuple[0] = labels[lead];
                let mut idx = vec![0usize; arity];
                for _ in 0..block {
                    for (t, &i) in tuple[1..].iter_mut().zip(&idx) {
                        *t = labels[i];
                    }
                    out.push(value(&tuple)?);
                    for d in (0..arity).rev() {
                        idx[d] += 1;
                        if idx[d] < m {
                            break;
                        }
                        idx[d] = 0;
                    }
                }
                Ok(out)
            })
            .collect();
        let mut table = Vec::with_capacity(block * m);
        for c in chunks {
            table.extend(c?);
        }
        Ok(Self { arity, labels, table })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    /// Value at a tuple of positions into the label set.
    pub fn value_at(&self, pos: &[usize]) -> Complex64 {
        debug_assert_eq!(pos.len(), self.arity + 1);
        let m = self.labels.len();
        let mut flat = 0usize;
        for &p in pos {
            debug_assert!(p < m);
            flat = flat * m + p;
        }
        self.table[flat]
    }

    pub fn sup_norm(&self) -> f64 {
        self.table.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// The n-linear Schur action: entry (s_0, s_n) of the result is
/// sum over s_1..s_{n-1} of phi(s_0,...,s_n) x_1[s_0,s_1] ... x_n[s_{n-1},s_n].
/// Partial products are threaded through the recursion and zero partials
/// prune whole branches, so triangular factors cost far less than the
/// worst-case m^(n+1).
pub fn schur_multiply(
    phi: &DiscreteSymbol,
    xs: &[CMatrix],
) -> Result<CMatrix, SchattenError> {
    let n = phi.arity();
    if xs.len() != n {
        return Err(SchattenError::ArityMismatch { arity: n, got: xs.len() });
    }
    let m = phi.dim();
    for x in xs {
        if x.nrows() != m || x.ncols() != m {
            return Err(SchattenError::DimensionMismatch {
                expected: m,
                got: x.nrows().max(x.ncols()),
            });
        }
    }
    let mut out = CMatrix::zeros(m, m);
    let mut pos = vec![0usize; n + 1];
    for s0 in 0..m {
        pos[0] = s0;
        descend(phi, xs, m, 1, &mut pos, Complex64::new(1.0, 0.0), &mut out);
    }
    Ok(out)
}

fn descend(
    phi: &DiscreteSymbol,
    xs: &[CMatrix],
    m: usize,
    depth: usize,
    pos: &mut [usize],
    partial: Complex64,
    out: &mut CMatrix,
) {
    let n = xs.len();
    if depth == n {
        for sn in 0..m {
            let v = partial * xs[n - 1][(pos[n - 1], sn)];
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            pos[n] = sn;
            out[(pos[0], sn)] += phi.value_at(pos) * v;
        }
        return;
    }
    for s in 0..m {
        let v = partial * xs[depth - 1][(pos[depth - 1], s)];
        if v == Complex64::new(0.0, 0.0) {
            continue;
        }
        pos[depth] = s;
        descend(phi, xs, m, depth + 1, pos, v, out);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// keep entries with row < column
    Upper,
    /// keep entries with row > column
    Lower,
    /// keep the diagonal
    Diagonal,
}

/// Positional triangular truncation or diagonal projection; the three
/// pieces sum back to the identity map.
pub fn truncate(x: &CMatrix, kind: Truncation) -> CMatrix {
    let mut out = CMatrix::zeros(x.nrows(), x.ncols());
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            let keep = match kind {
                Truncation::Upper => i < j,
                Truncation::Lower => i > j,
                Truncation::Diagonal => i == j,
            };
            if keep {
                out[(i, j)] = x[(i, j)];
            }
        }
    }
    out
}

/// x minus its diagonal.
pub fn strip_diagonal(x: &CMatrix) -> CMatrix {
    x - truncate(x, Truncation::Diagonal)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeVariant {
    /// nodes (q^{k i_0}, q^{l i_1}, ..., q^{l i_{n-1}}, -q^{k i_n})
    First,
    /// nodes (q^{k i_0}, -q^{k i_1}, q^{k i_2}, q^{l i_3}, ..., q^{l i_n})
    Second,
}

/// Tabulates a_n^[n] composed with the geometric node map over the label
/// set. Labels must be nonnegative; for the limiting sign pattern to
/// emerge the labels entering l-exponents must stay >= 1 and l must
/// dominate k times the largest label (callers pick the scales).
pub fn lattice_symbol(
    variant: LatticeVariant,
    q: f64,
    k: u32,
    l: u32,
    n: usize,
    labels: &[i64],
) -> Result<DiscreteSymbol, SchattenError> {
    assert!(q > 0.0 && q < 1.0, "base must be in (0,1)");
    assert!(n >= 1);
    if variant == LatticeVariant::Second {
        assert!(n >= 2, "the second family needs at least two factors");
    }
    assert!(labels.iter().all(|&i| i >= 0), "labels must be nonnegative");
    let f = make_abs_power(n as u32);
    let pow = |exp: u32, i: i64| q.powf(exp as f64 * i as f64);
    DiscreteSymbol::try_tabulate(n, labels.to_vec(), |tuple| {
        let mut nodes = Vec::with_capacity(n + 1);
        match variant {
            LatticeVariant::First => {
                nodes.push(pow(k, tuple[0]));
                for &i in &tuple[1..n] {
                    nodes.push(pow(l, i));
                }
                nodes.push(-pow(k, tuple[n]));
            }
            LatticeVariant::Second => {
                nodes.push(pow(k, tuple[0]));
                nodes.push(-pow(k, tuple[1]));
                nodes.push(pow(k, tuple[2]));
                for &i in &tuple[3..] {
                    nodes.push(pow(l, i));
                }
            }
        }
        // a_n^[n] is 0-homogeneous under positive scaling, so normalizing
        // by the largest magnitude costs nothing and keeps the evaluation
        // scale-free deep in the geometric range
        let top = nodes.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        if top > 0.0 {
            for v in nodes.iter_mut() {
                *v /= top;
            }
        }
        Ok(Complex64::new(stable_divdiff(&f, &nodes)?, 0.0))
    })
}

/// Divided difference with the evaluation route picked by conditioning:
/// the residue form is near machine precision whenever its term mass is
/// moderate (always the case for geometric lattice nodes, however deep),
/// while clustered-but-distinct nodes overwhelm it and drop to the
/// clash-grouped Newton tableau instead.
fn stable_divdiff(f: &dyn SmoothFunction, points: &[f64]) -> Result<f64, DivDiffError> {
    let r = divdiff_residue(f, points)?;
    if r.value.is_finite() && r.term_mass <= 1e6 {
        return Ok(r.value);
    }
    divdiff_eval(f, &NodeVector::from_points(points)?)
}

/// Restriction of the n-th divided difference of f to a point grid;
/// repeated grid values evaluate confluently.
pub fn sampled_symbol(
    f: &dyn SmoothFunction,
    grid: &[f64],
    n: usize,
) -> Result<DiscreteSymbol, SchattenError> {
    assert!(n >= 1);
    let labels: Vec<i64> = (0..grid.len() as i64).collect();
    DiscreteSymbol::try_tabulate(n, labels, |tuple| {
        let points: Vec<f64> = tuple.iter().map(|&s| grid[s as usize]).collect();
        Ok(Complex64::new(stable_divdiff(f, &points)?, 0.0))
    })
}

/// Row-major real/imag arrays.
pub fn export_matrix_json(x: &CMatrix) -> serde_json::Value {
    let mut re = Vec::with_capacity(x.nrows() * x.ncols());
    let mut im = Vec::with_capacity(x.nrows() * x.ncols());
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            re.push(x[(i, j)].re);
            im.push(x[(i, j)].im);
        }
    }
    serde_json::json!({ "dim": x.nrows(), "re": re, "im": im })
}

pub fn import_matrix_json(v: &serde_json::Value) -> Option<CMatrix> {
    let dim = v.get("dim")?.as_u64()? as usize;
    let re = v.get("re")?.as_array()?;
    let im = v.get("im")?.as_array()?;
    if re.len() != dim * dim || im.len() != dim * dim {
        return None;
    }
    let mut out = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let flat = i * dim + j;
            out[(i, j)] = Complex64::new(re[flat].as_f64()?, im[flat].as_f64()?);
        }
    }
    Some(out)
}

pub fn export_symbol_json(phi: &DiscreteSymbol) -> serde_json::Value {
    let re: Vec<f64> = phi.table.iter().map(|v| v.re).collect();
    let im: Vec<f64> = phi.table.iter().map(|v| v.im).collect();
    serde_json::json!({
        "arity": phi.arity,
        "labels": phi.labels,
        "re": re,
        "im": im,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divdiff::Monomial;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, m: usize) -> CMatrix {
        CMatrix::from_fn(m, m, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn const_symbol(n: usize, m: usize, c: Complex64) -> DiscreteSymbol {
        DiscreteSymbol::tabulate(n, (0..m as i64).collect(), |_| c)
    }

    #[test]
    fn schatten_norm_examples() {
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(3.0, 0.0),
            Complex64::new(4.0, 0.0),
        ]));
        assert!((schatten_norm(&d, 1.0) - 7.0).abs() < 1e-12);
        assert!((schatten_norm(&d, f64::INFINITY) - 4.0).abs() < 1e-12);

        let r = std::f64::consts::FRAC_1_SQRT_2;
        let u = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(r, 0.0),
                Complex64::new(0.0, r),
                Complex64::new(0.0, r),
                Complex64::new(r, 0.0),
            ],
        );
        let id = CMatrix::identity(2, 2);
        assert!(hs_norm(&(&u * u.adjoint() - id)) < 1e-12);
        assert!((schatten_norm(&u, f64::INFINITY) - 1.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let un = nalgebra::DVector::from_fn(5, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let vn = nalgebra::DVector::from_fn(5, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let rank_one = &un * vn.adjoint();
        let expect = un.norm() * vn.norm();
        for p in [1.0, 1.7, 2.0, 3.0, f64::INFINITY] {
            assert!((schatten_norm(&rank_one, p) - expect).abs() < 1e-10 * expect);
        }
    }

    #[test]
    fn schatten_norm_survives_tiny_singular_values() {
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(1e-80, 0.0),
            Complex64::new(1e-150, 0.0),
        ]));
        for p in [1.0, 1.2, 4.0] {
            let v = schatten_norm(&d, p);
            assert!(v.is_finite() && v >= 1.0 && v < 1.0 + 1e-12);
        }
        // homogeneity far below the underflow knee of naive p-th powers
        let scaled = d.map(|v| v * 1e-100);
        let v = schatten_norm(&scaled, 4.0);
        assert!((v - 1e-100).abs() < 1e-112);
    }

    #[test]
    fn hadamard_and_product_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = 6;
        let x = random_matrix(&mut rng, m);
        // arity 1 with a delta symbol is the diagonal projection
        let delta = DiscreteSymbol::tabulate(1, (0..m as i64).collect(), |s| {
            if s[0] == s[1] {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let proj = schur_multiply(&delta, std::slice::from_ref(&x)).unwrap();
        assert!(hs_norm(&(&proj - truncate(&x, Truncation::Diagonal))) < 1e-13);

        // arity 2 with the constant symbol is the plain product
        let ones = const_symbol(2, m, Complex64::new(1.0, 0.0));
        let y = random_matrix(&mut rng, m);
        let prod = schur_multiply(&ones, &[x.clone(), y.clone()]).unwrap();
        assert!(hs_norm(&(&prod - &x * &y)) < 1e-12);

        let bad = schur_multiply(&ones, std::slice::from_ref(&x));
        assert!(matches!(bad, Err(SchattenError::ArityMismatch { .. })));
        let small = random_matrix(&mut rng, m - 1);
        let bad = schur_multiply(&ones, &[x, small]);
        assert!(matches!(bad, Err(SchattenError::DimensionMismatch { .. })));
    }

    #[test]
    fn schur_action_is_multilinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = 5;
        let phi = DiscreteSymbol::tabulate(2, (0..m as i64).collect(), |s| {
            Complex64::new(
                (s[0] - s[2]) as f64 * 0.25,
                ((s[1] * s[1]) % 3) as f64 * 0.5,
            )
        });
        let a = random_matrix(&mut rng, m);
        let a2 = random_matrix(&mut rng, m);
        let b = random_matrix(&mut rng, m);
        let alpha = Complex64::new(0.3, -1.1);
        let beta = Complex64::new(-0.7, 0.2);
        let lhs =
            schur_multiply(&phi, &[a.map(|v| v * alpha) + a2.map(|v| v * beta), b.clone()])
                .unwrap();
        let t1 = schur_multiply(&phi, &[a, b.clone()]).unwrap();
        let t2 = schur_multiply(&phi, &[a2, b]).unwrap();
        let rhs = t1.map(|v| v * alpha) + t2.map(|v| v * beta);
        assert!(hs_norm(&(lhs - rhs)) < 1e-12);
    }

    #[test]
    fn hilbert_schmidt_bound_and_linear_exactness() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = 6;
        for n in [1usize, 2, 3] {
            let phi = DiscreteSymbol::tabulate(n, (0..m as i64).collect(), |s| {
                let t: i64 = s.iter().sum();
                Complex64::new((t as f64 * 0.37).sin(), (t as f64 * 0.21).cos())
            });
            for _ in 0..10 {
                let xs: Vec<CMatrix> =
                    (0..n).map(|_| random_matrix(&mut rng, m)).collect();
                let out = schur_multiply(&phi, &xs).unwrap();
                let bound = phi.sup_norm()
                    * xs.iter().map(hs_norm).product::<f64>();
                assert!(hs_norm(&out) <= bound * (1.0 + 1e-12));
            }
        }
        // arity 1 on Hilbert-Schmidt: the norm is attained at the largest
        // symbol entry, witnessed by the matching matrix unit
        let phi = DiscreteSymbol::tabulate(1, (0..m as i64).collect(), |s| {
            Complex64::new(
                (s[0] as f64 - 1.3).cos(),
                (s[1] as f64 * 0.7).sin(),
            )
        });
        let mut best = (0usize, 0usize, 0.0f64);
        for i in 0..m {
            for j in 0..m {
                let v = phi.value_at(&[i, j]).norm();
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        let mut unit = CMatrix::zeros(m, m);
        unit[(best.0, best.1)] = Complex64::new(1.0, 0.0);
        let out = schur_multiply(&phi, &[unit]).unwrap();
        assert!((hs_norm(&out) - best.2).abs() < 1e-12);
    }

    #[test]
    fn holder_contractivity_of_the_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = 8;
        for _ in 0..200 {
            let n = if rng.gen_bool(0.5) { 2 } else { 3 };
            // keep the product exponent at least 1
            let ps: Vec<f64> =
                (0..n).map(|_| rng.gen_range(1.1 * n as f64..8.0 * n as f64)).collect();
            let target = SchattenExponent::holder(&ps);
            let xs: Vec<CMatrix> = (0..n).map(|_| random_matrix(&mut rng, m)).collect();
            let mut prod = xs[0].clone();
            for x in &xs[1..] {
                prod = &prod * x;
            }
            let lhs = schatten_norm(&prod, target.p());
            let rhs: f64 = xs
                .iter()
                .zip(&ps)
                .map(|(x, &p)| schatten_norm(x, p))
                .product();
            assert!(lhs <= rhs * (1.0 + 1e-10), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn truncations_partition_the_matrix() {
        let a = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.5),
                Complex64::new(2.0, 0.0),
                Complex64::new(3.0, -1.0),
                Complex64::new(4.0, 0.25),
            ],
        );
        let up = truncate(&a, Truncation::Upper);
        assert_eq!(up[(0, 1)], a[(0, 1)]);
        assert_eq!(up[(0, 0)], Complex64::new(0.0, 0.0));
        assert_eq!(up[(1, 0)], Complex64::new(0.0, 0.0));
        assert_eq!(up[(1, 1)], Complex64::new(0.0, 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for m in [4usize, 7] {
            let x = random_matrix(&mut rng, m);
            let sum = truncate(&x, Truncation::Upper)
                + truncate(&x, Truncation::Lower)
                + truncate(&x, Truncation::Diagonal);
            assert_eq!(sum, x);
            assert!(hs_norm(&(strip_diagonal(&x) + truncate(&x, Truncation::Diagonal) - &x)) == 0.0);
        }
    }

    #[test]
    fn diagonal_projection_is_a_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let x = random_matrix(&mut rng, 6);
            let px = truncate(&x, Truncation::Diagonal);
            for p in [1.0, 1.5, 2.0, 4.0, f64::INFINITY] {
                assert!(
                    schatten_norm(&px, p) <= schatten_norm(&x, p) * (1.0 + 1e-10)
                );
            }
        }
    }

    #[test]
    fn first_lattice_family_reaches_the_sign_pattern() {
        // frozen closed form: with q = 1/2, k = 2, l = 3 the tuple (1,1,2)
        // composes to nodes (1/4, 1/8, -1/16) and the order-2 divided
        // difference of |s|s there equals 13/15
        let phi = lattice_symbol(LatticeVariant::First, 0.5, 2, 3, 2, &[1, 2]).unwrap();
        let got = phi.value_at(&[0, 0, 1]).re;
        assert!((got - 13.0 / 15.0).abs() < 1e-13, "got {got}");

        // deep in the geometric range the symbol is the sign of the outer
        // label gap
        let labels = [1i64, 2, 3];
        let phi = lattice_symbol(LatticeVariant::First, 0.5, 50, 400, 2, &labels).unwrap();
        for i0 in 0..3 {
            for i1 in 0..3 {
                for i2 in 0..3 {
                    let v = phi.value_at(&[i0, i1, i2]).re;
                    let target = match labels[i2].cmp(&labels[i0]) {
                        std::cmp::Ordering::Greater => 1.0,
                        std::cmp::Ordering::Less => -1.0,
                        std::cmp::Ordering::Equal => 0.0,
                    };
                    assert!((v - target).abs() < 1e-9, "({i0},{i1},{i2}): {v}");
                }
            }
        }

        // trilinear case with a comfortable scale split
        let phi = lattice_symbol(LatticeVariant::First, 0.5, 30, 120, 3, &[1, 2]).unwrap();
        let v = phi.value_at(&[0, 0, 0, 1]).re;
        assert!((v - 1.0).abs() < 1e-6, "got {v}");
        let v = phi.value_at(&[1, 0, 0, 0]).re;
        assert!((v + 1.0).abs() < 1e-6, "got {v}");
    }

    #[test]
    fn second_lattice_family_reaches_the_sign_pattern() {
        let labels = [1i64, 2, 3];
        let phi = lattice_symbol(LatticeVariant::Second, 0.5, 50, 0, 2, &labels).unwrap();
        // dip pattern (middle label strictly below both neighbours) gives
        // -1, every other off-diagonal pattern +1
        for (tuple, want) in [
            ([1usize, 0, 2], -1.0),
            ([2, 0, 1], -1.0),
            ([0, 1, 2], 1.0),
            ([2, 1, 0], 1.0),
            ([0, 2, 1], 1.0),
            ([1, 2, 0], 1.0),
        ] {
            let v = phi.value_at(&tuple).re;
            assert!((v - want).abs() < 1e-9, "{tuple:?}: {v}");
        }

        let phi =
            lattice_symbol(LatticeVariant::Second, 0.5, 40, 200, 3, &[1, 2, 3]).unwrap();
        let v = phi.value_at(&[1, 0, 2, 0]).re;
        assert!((v + 1.0).abs() < 1e-6, "got {v}");
        let v = phi.value_at(&[0, 1, 2, 0]).re;
        assert!((v - 1.0).abs() < 1e-6, "got {v}");
    }

    #[test]
    fn sampled_symbols_match_known_families() {
        let grid = [0.3, 0.9, 1.4, 2.2];
        // n-th divided difference of x^n is identically 1
        let phi = sampled_symbol(&Monomial(2), &grid, 2).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    assert!((phi.value_at(&[i, j, k]).re - 1.0).abs() < 1e-12);
                }
            }
        }
        // a_n agrees with x^n on a positive grid
        let phi = sampled_symbol(&make_abs_power(3), &grid, 3).unwrap();
        assert!((phi.value_at(&[0, 1, 2, 3]).re - 1.0).abs() < 1e-12);
        assert!((phi.value_at(&[2, 2, 1, 0]).re - 1.0).abs() < 1e-12);

        // permutation invariance on a mixed-sign grid
        let grid = [-1.2, -0.4, 0.7, 1.9];
        let phi = sampled_symbol(&make_abs_power(2), &grid, 2).unwrap();
        let a = phi.value_at(&[0, 2, 3]).re;
        for perm in [[2usize, 0, 3], [3, 2, 0], [0, 3, 2]] {
            assert!((phi.value_at(&perm).re - a).abs() < 1e-12);
        }
        // full-diagonal tuples take the normalized diagonal convention
        assert_eq!(phi.value_at(&[1, 1, 1]).re, 0.0);
    }

    #[test]
    fn json_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x = random_matrix(&mut rng, 4);
        let v = export_matrix_json(&x);
        let y = import_matrix_json(&v).unwrap();
        assert_eq!(x, y);

        let phi = const_symbol(2, 3, Complex64::new(0.25, -1.0));
        let v = export_symbol_json(&phi);
        assert_eq!(v["arity"], 2);
        assert_eq!(v["re"].as_array().unwrap().len(), 27);
    }
}
