//! Choice sequences and their difference-coordinate bookkeeping.
//!
//! A choice sequence records, step by step, which node of a shrinking index
//! set the decomposition acts on and which of the two branches it keeps. At
//! each level l the active set `I_l` loses one element: the pick `i_l` must
//! not be the minimum of `I_l`, and the `+` branch deletes `i_l` itself
//! while the `-` branch deletes its lower neighbor. The pick's neighbors
//! inside `I_l` (with the upper neighbor wrapping cyclically to the minimum
//! when the pick is the maximum) drive the difference coordinates
//!
//! ```text
//! xi_l   = lambda[F_l] - lambda[F_l^-]
//! zeta_l = (lambda[F_l^+] - lambda[F_l^-]) / xi_l   (+ branch)
//!        = (lambda[F_l]   - lambda[F_l^+]) / xi_l   (- branch)
//! ```
//!
//! For a full-length sequence (k = n-1) the two survivors inherit the labels
//! of the last pick: `(F_n, F_n^-) = (F_{n-1}^+, F_{n-1}^-)` on the `+`
//! branch and `(F_{n-1}, F_{n-1}^+)` on the `-` branch. This is the unique
//! labeling under which `zeta_{n-1} = xi_n / xi_{n-1}` holds identically,
//! and it makes the final difference coordinate run between exactly the two
//! surviving nodes.
//!
//! The same module computes, exactly over the rationals, the change of basis
//! between consecutive differences of an active set and the `xi` coordinates
//! ([`difference_basis`]), and the combinatorial factor of the norm bound
//! ([`theoretical_bound`]).

use num::bigint::BigInt;
use num::rational::BigRational;
use num::Zero;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComboError {
    #[error("pick {pick} at level {level} is not an admissible element of the active set")]
    BadPick { level: usize, pick: usize },
    #[error("sequence length {k} out of range for n = {n}")]
    BadLength { n: usize, k: usize },
    #[error("level {0} out of range")]
    IndexOutOfRange(usize),
    #[error("denominator vanishes at level {0}")]
    DegenerateDenominator(usize),
    #[error("Schatten exponents invalid: {0}")]
    InvalidExponents(String),
}

/// Branch marker; `Plus` sorts before `Minus` so that derived ordering of
/// picks is the enumeration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Level {
    set: Vec<usize>, // sorted active set I_l
    f: usize,
    f_minus: usize,
    f_plus: usize,
    sign: Sign,
}

/// An admissible choice sequence for dimension n with k picks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceSequence {
    n: usize,
    picks: Vec<(usize, Sign)>,
    levels: Vec<Level>,
    survivors: Vec<usize>,
    /// Terminal labels (F_{k+1}, F_{k+1}^-); only set for k = n-1.
    terminal: Option<(usize, usize)>,
}

/// Index-set and neighbor data at one level, as returned by [`ChoiceSequence::index_data`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexData {
    pub set: Vec<usize>,
    pub f: Option<usize>,
    pub f_minus: Option<usize>,
    pub f_plus: Option<usize>,
}

impl ChoiceSequence {
    pub fn new(n: usize, picks: &[(usize, Sign)]) -> Result<Self, ComboError> {
        let k = picks.len();
        if n < 1 || k > n - 1 {
            return Err(ComboError::BadLength { n, k });
        }
        let mut set: Vec<usize> = (0..=n).collect();
        let mut levels = Vec::with_capacity(k);
        for (level0, &(i, sign)) in picks.iter().enumerate() {
            let level = level0 + 1;
            let pos = set.iter().position(|&x| x == i);
            let pos = match pos {
                // The pick must exist and must not be the minimum.
                Some(0) | None => return Err(ComboError::BadPick { level, pick: i }),
                Some(p) => p,
            };
            let f_minus = set[pos - 1];
            let f_plus = if pos + 1 < set.len() { set[pos + 1] } else { set[0] };
            levels.push(Level { set: set.clone(), f: i, f_minus, f_plus, sign });
            match sign {
                Sign::Plus => {
                    set.remove(pos);
                }
                Sign::Minus => {
                    set.remove(pos - 1);
                }
            }
        }
        let terminal = if k == n - 1 {
            let last = levels.last().expect("k = n-1 >= 1 here");
            Some(match last.sign {
                Sign::Plus => (last.f_plus, last.f_minus),
                Sign::Minus => (last.f, last.f_plus),
            })
        } else {
            None
        };
        if let Some((a, b)) = terminal {
            debug_assert_eq!({ let mut s = vec![a, b]; s.sort(); s }, set);
        }
        Ok(Self { n, picks: picks.to_vec(), levels, survivors: set, terminal })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.picks.len()
    }

    pub fn picks(&self) -> &[(usize, Sign)] {
        &self.picks
    }

    /// The active set after all picks, I_{F,k+1}, sorted.
    pub fn survivors(&self) -> &[usize] {
        &self.survivors
    }

    /// Terminal node pair (F_n, F_n^-); full-length sequences only.
    pub fn terminal_pair(&self) -> Option<(usize, usize)> {
        self.terminal
    }

    pub fn sign(&self, l: usize) -> Result<Sign, ComboError> {
        self.levels
            .get(l.wrapping_sub(1))
            .map(|lv| lv.sign)
            .ok_or(ComboError::IndexOutOfRange(l))
    }

    /// Active set and neighbor labels at level l, 1 <= l <= k+1. At the
    /// terminal level the upper neighbor is absent, and the pick labels are
    /// only defined for full-length sequences.
    pub fn index_data(&self, l: usize) -> Result<IndexData, ComboError> {
        let k = self.k();
        if l == 0 || l > k + 1 {
            return Err(ComboError::IndexOutOfRange(l));
        }
        if l <= k {
            let lv = &self.levels[l - 1];
            Ok(IndexData {
                set: lv.set.clone(),
                f: Some(lv.f),
                f_minus: Some(lv.f_minus),
                f_plus: Some(lv.f_plus),
            })
        } else {
            match self.terminal {
                Some((f, f_minus)) => Ok(IndexData {
                    set: self.survivors.clone(),
                    f: Some(f),
                    f_minus: Some(f_minus),
                    f_plus: None,
                }),
                None => Ok(IndexData {
                    set: self.survivors.clone(),
                    f: None,
                    f_minus: None,
                    f_plus: None,
                }),
            }
        }
    }

    /// The (f, f_minus) pair that defines xi at level l; levels up to k + 1
    /// for full-length sequences, up to k otherwise.
    pub fn xi_pair(&self, l: usize) -> Result<(usize, usize), ComboError> {
        if l >= 1 && l <= self.k() {
            let lv = &self.levels[l - 1];
            Ok((lv.f, lv.f_minus))
        } else if l == self.k() + 1 {
            self.terminal.ok_or(ComboError::IndexOutOfRange(l))
        } else {
            Err(ComboError::IndexOutOfRange(l))
        }
    }

    /// xi_{F,l}(lambda) = lambda[F_l] - lambda[F_l^-].
    pub fn xi(&self, l: usize, lambda: &[f64]) -> Result<f64, ComboError> {
        let (a, b) = self.xi_pair(l)?;
        Ok(lambda[a] - lambda[b])
    }

    /// zeta_{F,l}(lambda); requires xi_{F,l}(lambda) != 0.
    pub fn zeta(&self, l: usize, lambda: &[f64]) -> Result<f64, ComboError> {
        let (_, zeta) = self.zeta_xi_eval(l, lambda)?;
        Ok(zeta)
    }

    /// Both coordinates at level l <= k.
    pub fn zeta_xi_eval(&self, l: usize, lambda: &[f64]) -> Result<(f64, f64), ComboError> {
        if l == 0 || l > self.k() {
            return Err(ComboError::IndexOutOfRange(l));
        }
        let lv = &self.levels[l - 1];
        let xi = lambda[lv.f] - lambda[lv.f_minus];
        if xi == 0.0 {
            return Err(ComboError::DegenerateDenominator(l));
        }
        let num = match lv.sign {
            Sign::Plus => lambda[lv.f_plus] - lambda[lv.f_minus],
            Sign::Minus => lambda[lv.f] - lambda[lv.f_plus],
        };
        Ok((xi, num / xi))
    }
}

/// All admissible sequences for (n, k), in lexicographic order of picks
/// with `+` before `-`.
pub fn enumerate_choice_sequences(n: usize, k: usize) -> Vec<ChoiceSequence> {
    assert!(n >= 1 && k <= n - 1, "need 0 <= k <= n-1");
    let mut out = Vec::new();
    let mut picks: Vec<(usize, Sign)> = Vec::with_capacity(k);
    let mut set: Vec<usize> = (0..=n).collect();
    fn rec(
        n: usize,
        k: usize,
        set: &mut Vec<usize>,
        picks: &mut Vec<(usize, Sign)>,
        out: &mut Vec<ChoiceSequence>,
    ) {
        if picks.len() == k {
            out.push(ChoiceSequence::new(n, picks).expect("recursion only builds admissible picks"));
            return;
        }
        for pos in 1..set.len() {
            let i = set[pos];
            for sign in [Sign::Plus, Sign::Minus] {
                picks.push((i, sign));
                let removed_pos = if sign == Sign::Plus { pos } else { pos - 1 };
                let removed = set.remove(removed_pos);
                rec(n, k, set, picks, out);
                set.insert(removed_pos, removed);
                picks.pop();
            }
        }
    }
    rec(n, k, &mut set, &mut picks, &mut out);
    out
}

/// Independent count of admissible sequences by direct recursion on the
/// deletion rule, sharing no state with the enumerator. Used to cross-check
/// completeness.
pub fn count_choice_sequences(n: usize, k: usize) -> u64 {
    fn rec(set_size: usize, remaining: usize) -> u64 {
        if remaining == 0 {
            return 1;
        }
        // any non-minimal element (set_size - 1 choices) times two branches,
        // each shrinking the set by one
        ((set_size - 1) as u64) * 2 * rec(set_size - 1, remaining - 1)
    }
    rec(n + 1, k)
}

/// True when all coordinates are pairwise distinct.
pub fn is_in_d_n(lambda: &[f64]) -> bool {
    for i in 0..lambda.len() {
        for j in (i + 1)..lambda.len() {
            if lambda[i] == lambda[j] {
                return false;
            }
        }
    }
    true
}

/// True when the coordinates indexed by `index_set` are all equal.
pub fn is_in_delta_i(lambda: &[f64], index_set: &[usize]) -> bool {
    index_set.windows(2).all(|w| lambda[w[0]] == lambda[w[1]])
}

// ---------------------------------------------------------------------------
// Exact change of basis between difference coordinates.

/// Exact rational matrices tying the xi coordinates of a full-length
/// sequence to consecutive differences.
///
/// * `t`: square of size n+1-k; row l (1-based), column j (j = k..n)
///   expresses the l-th consecutive difference of the sorted active set
///   I_{F,k} as `sum_j t[l][j-k] * xi_{F,j}`.
/// * `r`: rows l = 1..n-1; `zeta_{F,l} = (sum_{j>l} r[l][j] * xi_{F,j}) / xi_{F,l}`
///   with columns stored at j = l+1..n (index j-1 in the row vector of
///   length n); strictly upper triangular.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DifferenceBasis {
    pub t: Vec<Vec<BigRational>>,
    pub r: Vec<Vec<BigRational>>,
}

/// Solves for both matrices; `k` selects the level of the T matrix
/// (1 <= k <= n). The linear systems are integer and always consistent for
/// admissible sequences; inconsistency is a bug and panics.
pub fn difference_basis(f_seq: &ChoiceSequence, k: usize) -> Result<DifferenceBasis, ComboError> {
    let n = f_seq.n();
    if f_seq.k() != n - 1 {
        return Err(ComboError::BadLength { n, k: f_seq.k() });
    }
    if k == 0 || k > n {
        return Err(ComboError::IndexOutOfRange(k));
    }

    // Difference vectors live in R^{n+1}: xi_{a,b} corresponds to e_a - e_b.
    let dim = n + 1;
    let basis_vec = |l: usize| -> Vec<i64> {
        let (a, b) = f_seq.xi_pair(l).expect("levels 1..=n exist for full sequences");
        let mut v = vec![0i64; dim];
        v[a] += 1;
        v[b] -= 1;
        v
    };

    // T: express consecutive differences of I_{F,k} in the basis xi_k..xi_n.
    let set = f_seq.index_data(k)?.set;
    let m = set.len() - 1; // = n + 1 - k
    let basis: Vec<Vec<i64>> = (k..=n).map(basis_vec).collect();
    let mut t = Vec::with_capacity(m);
    for w in set.windows(2) {
        let mut target = vec![0i64; dim];
        target[w[1]] += 1;
        target[w[0]] -= 1;
        let coeffs = solve_exact(&basis, &target)
            .expect("consecutive differences lie in the span of the xi basis");
        t.push(coeffs);
    }

    // R: express each zeta numerator in the basis xi_{l+1}..xi_n.
    let mut r = Vec::with_capacity(n - 1);
    for l in 1..n {
        let data = f_seq.index_data(l)?;
        let (f, f_minus, f_plus) = (
            data.f.expect("pick levels have labels"),
            data.f_minus.expect("pick levels have labels"),
            data.f_plus.expect("pick levels have labels"),
        );
        let (a, b) = match f_seq.sign(l)? {
            Sign::Plus => (f_plus, f_minus),
            Sign::Minus => (f, f_plus),
        };
        let mut target = vec![0i64; dim];
        target[a] += 1;
        target[b] -= 1;
        let sub_basis: Vec<Vec<i64>> = ((l + 1)..=n).map(basis_vec).collect();
        let coeffs = solve_exact(&sub_basis, &target)
            .expect("zeta numerators lie in the span of the later xi coordinates");
        let mut row = vec![BigRational::zero(); n];
        for (idx, c) in coeffs.into_iter().enumerate() {
            row[l + idx] = c; // column j = l+1+idx, stored at j-1
        }
        r.push(row);
    }

    Ok(DifferenceBasis { t, r })
}

/// Exact least-structure solve: finds c with sum_j c_j basis_j = target, or
/// None if the system is inconsistent. Columns are the basis vectors.
fn solve_exact(basis: &[Vec<i64>], target: &[i64]) -> Option<Vec<BigRational>> {
    let rows = target.len();
    let cols = basis.len();
    let mut a: Vec<Vec<BigRational>> = (0..rows)
        .map(|r| {
            let mut row: Vec<BigRational> = basis
                .iter()
                .map(|b| BigRational::from_integer(BigInt::from(b[r])))
                .collect();
            row.push(BigRational::from_integer(BigInt::from(target[r])));
            row
        })
        .collect();

    let mut pivot_cols = Vec::new();
    let mut rank = 0;
    for col in 0..cols {
        let pivot = (rank..rows).find(|&r| !a[r][col].is_zero());
        let Some(p) = pivot else { continue };
        a.swap(rank, p);
        let inv = a[rank][col].clone();
        for v in a[rank].iter_mut() {
            *v /= inv.clone();
        }
        for r in 0..rows {
            if r != rank && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for c in 0..=cols {
                    let sub = &a[rank][c] * &factor;
                    a[r][c] -= sub;
                }
            }
        }
        pivot_cols.push(col);
        rank += 1;
        if rank == rows {
            break;
        }
    }
    // Inconsistent if a zero row has nonzero rhs.
    for r in rank..rows {
        if !a[r][cols].is_zero() {
            return None;
        }
    }
    let mut c = vec![BigRational::zero(); cols];
    for (row, &col) in pivot_cols.iter().enumerate() {
        c[col] = a[row][cols].clone();
    }
    Some(c)
}

// ---------------------------------------------------------------------------
// Schatten exponent bookkeeping and the combinatorial norm bound.

/// A tuple of Schatten exponents with the partial (harmonic) exponents the
/// norm bound is built from.
#[derive(Debug, Clone, PartialEq)]
pub struct SchattenParams {
    n: usize,
    p_list: Vec<f64>,
}

impl SchattenParams {
    pub fn new(p_list: &[f64]) -> Result<Self, ComboError> {
        if p_list.is_empty() {
            return Err(ComboError::InvalidExponents("empty exponent list".into()));
        }
        for &p in p_list {
            if !(p > 1.0) || !p.is_finite() {
                return Err(ComboError::InvalidExponents(format!("p_i = {p} not in (1, inf)")));
            }
        }
        let params = Self { n: p_list.len(), p_list: p_list.to_vec() };
        let p = params.p();
        if !(p > 1.0) {
            return Err(ComboError::InvalidExponents(format!(
                "target exponent p = {p} not in (1, inf)"
            )));
        }
        Ok(params)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p_list(&self) -> &[f64] {
        &self.p_list
    }

    /// Target exponent p = (sum 1/p_i)^{-1}.
    pub fn p(&self) -> f64 {
        1.0 / self.p_list.iter().map(|p| 1.0 / p).sum::<f64>()
    }

    /// Partial exponent over the index span (i; j]: harmonic combination of
    /// p_{i+1}..p_j. Arguments are unordered slot labels in 0..=n.
    pub fn partial(&self, i: usize, j: usize) -> f64 {
        assert!(i != j && i <= self.n && j <= self.n);
        let (lo, hi) = (i.min(j), i.max(j));
        1.0 / self.p_list[lo..hi].iter().map(|p| 1.0 / p).sum::<f64>()
    }

    pub fn conjugate(p: f64) -> f64 {
        if p.is_infinite() {
            1.0
        } else {
            p / (p - 1.0)
        }
    }

    /// p-sharp: max of the exponent and its conjugate.
    pub fn sharp(p: f64) -> f64 {
        p.max(Self::conjugate(p))
    }
}

/// The combinatorial factor of the norm bound: sum over all full-length
/// sequences of the product over levels of the sharp partial exponent
/// attached to the level's (F_l^-, F_l) pair.
pub fn theoretical_bound(params: &SchattenParams) -> Result<f64, ComboError> {
    let n = params.n();
    if n < 2 {
        return Err(ComboError::InvalidExponents("bound needs n >= 2".into()));
    }
    let mut total = 0.0;
    for f_seq in enumerate_choice_sequences(n, n - 1) {
        let mut prod = 1.0;
        for l in 1..=n {
            let (a, b) = f_seq.xi_pair(l).expect("full-length sequence");
            prod *= SchattenParams::sharp(params.partial(b, a));
        }
        total += prod;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(n: usize, picks: &[(usize, Sign)]) -> ChoiceSequence {
        ChoiceSequence::new(n, picks).unwrap()
    }

    #[test]
    fn enumeration_order_and_counts() {
        let seqs = enumerate_choice_sequences(2, 1);
        let picks: Vec<_> = seqs.iter().map(|s| s.picks()[0]).collect();
        assert_eq!(
            picks,
            vec![(1, Sign::Plus), (1, Sign::Minus), (2, Sign::Plus), (2, Sign::Minus)]
        );
        for (n, k) in [(2, 1), (3, 2), (4, 3), (5, 2), (6, 5)] {
            let listed = enumerate_choice_sequences(n, k).len() as u64;
            assert_eq!(listed, count_choice_sequences(n, k), "n={n} k={k}");
        }
        assert_eq!(count_choice_sequences(3, 2), 24);
        assert_eq!(count_choice_sequences(4, 3), 192);
    }

    #[test]
    fn no_duplicates_in_enumeration() {
        let mut seqs = enumerate_choice_sequences(4, 3);
        let before = seqs.len();
        seqs.dedup_by(|a, b| a.picks() == b.picks());
        assert_eq!(seqs.len(), before);
    }

    #[test]
    fn worked_example_index_table() {
        // n = 4, picks (1,+), (2,-), (4,-): frozen level-by-level data.
        let f = seq(4, &[(1, Sign::Plus), (2, Sign::Minus), (4, Sign::Minus)]);
        let d1 = f.index_data(1).unwrap();
        assert_eq!(d1.set, vec![0, 1, 2, 3, 4]);
        assert_eq!((d1.f, d1.f_minus, d1.f_plus), (Some(1), Some(0), Some(2)));
        let d2 = f.index_data(2).unwrap();
        assert_eq!(d2.set, vec![0, 2, 3, 4]);
        assert_eq!((d2.f, d2.f_minus, d2.f_plus), (Some(2), Some(0), Some(3)));
        let d3 = f.index_data(3).unwrap();
        assert_eq!(d3.set, vec![2, 3, 4]);
        // pick 4 is the maximum: upper neighbor wraps to the minimum 2
        assert_eq!((d3.f, d3.f_minus, d3.f_plus), (Some(4), Some(3), Some(2)));
        let d4 = f.index_data(4).unwrap();
        assert_eq!(d4.set, vec![2, 4]);
        assert_eq!((d4.f, d4.f_minus, d4.f_plus), (Some(4), Some(2), None));
    }

    #[test]
    fn deletion_rule_shrinks_sets() {
        for f in enumerate_choice_sequences(4, 3) {
            for l in 1..=3 {
                let a = f.index_data(l).unwrap().set;
                let b = f.index_data(l + 1).unwrap().set;
                assert_eq!(a.len(), b.len() + 1);
                assert!(b.iter().all(|x| a.contains(x)));
            }
        }
    }

    #[test]
    fn admissibility_is_enforced() {
        // 0 is the minimum of the initial set
        assert!(ChoiceSequence::new(3, &[(0, Sign::Plus)]).is_err());
        // after (1,-) removes 0, the minimum is 1
        assert!(ChoiceSequence::new(3, &[(1, Sign::Minus), (1, Sign::Plus)]).is_err());
        // can't pick an element that was deleted
        assert!(ChoiceSequence::new(3, &[(1, Sign::Plus), (1, Sign::Plus)]).is_err());
    }

    #[test]
    fn xi_zeta_worked_example() {
        let f = seq(4, &[(1, Sign::Plus), (2, Sign::Minus), (4, Sign::Minus)]);
        let lambda = [0.0, 1.0, 3.0, 6.0, 10.0];
        let (xi, zeta) = f.zeta_xi_eval(1, &lambda).unwrap();
        assert_eq!(xi, 1.0);
        assert_eq!(zeta, 3.0); // (lambda_2 - lambda_0)/(lambda_1 - lambda_0)
        // terminal xi runs between the survivors
        assert_eq!(f.xi(4, &lambda).unwrap(), 10.0 - 3.0);
    }

    #[test]
    fn terminal_ratio_identity() {
        // zeta at the last pick level equals xi_{k+1}/xi_k for every
        // full-length sequence; this pins the terminal labeling.
        let lambda = [0.3, -1.1, 2.0, 0.7];
        let n = 3;
        for f in enumerate_choice_sequences(n, n - 1) {
            let (xi, zeta) = f.zeta_xi_eval(n - 1, &lambda).unwrap();
            let xi_last = f.xi(n, &lambda).unwrap();
            assert!(
                (zeta - xi_last / xi).abs() <= 1e-14 * (1.0 + (xi_last / xi).abs()),
                "picks {:?}",
                f.picks()
            );
        }
    }

    #[test]
    fn difference_basis_two_variable_case() {
        let f = seq(2, &[(1, Sign::Plus)]);
        let b = difference_basis(&f, 1).unwrap();
        let one = BigRational::from_integer(1.into());
        let zero = BigRational::zero();
        assert_eq!(b.t[0], vec![one.clone(), zero.clone()]);
        assert_eq!(b.t[1], vec![-one.clone(), one.clone()]);
        assert_eq!(b.r[0][1], one);
    }

    #[test]
    fn pinned_row_and_corner() {
        // At every pick level the row of T indexed by the pick's position is
        // the leading standard basis row, and R has corner 1. At the
        // terminal level T is 1x1 with entry +1 or -1 depending on whether
        // the surviving labels sit in increasing order; the sign is forced
        // by the ratio identity checked in terminal_ratio_identity.
        let one = BigRational::from_integer(1.into());
        for n in [3usize, 4] {
            for f in enumerate_choice_sequences(n, n - 1) {
                for k in 1..n {
                    let b = difference_basis(&f, k).unwrap();
                    let set = f.index_data(k).unwrap().set;
                    let fk = f.xi_pair(k).unwrap().0;
                    let lk = set.iter().position(|&x| x == fk).unwrap(); // row l(k), rows are 1-based
                    for (j, c) in b.t[lk - 1].iter().enumerate() {
                        if j == 0 {
                            assert_eq!(c, &one);
                        } else {
                            assert!(c.is_zero());
                        }
                    }
                    assert_eq!(b.r[n - 2][n - 1], one);
                }
                let b = difference_basis(&f, n).unwrap();
                let (fn_, fn_minus) = f.terminal_pair().unwrap();
                let expect = if fn_ > fn_minus { one.clone() } else { -one.clone() };
                assert_eq!(b.t, vec![vec![expect]]);
            }
        }
    }

    #[test]
    fn basis_reconstructs_consecutive_differences() {
        let lambda = [0.25, -0.9, 1.7, 0.4, 2.2];
        let n = 4;
        for f in enumerate_choice_sequences(n, n - 1) {
            let xis: Vec<f64> = (1..=n).map(|l| f.xi(l, &lambda).unwrap()).collect();
            for k in 1..=n {
                let b = difference_basis(&f, k).unwrap();
                let set = f.index_data(k).unwrap().set;
                for (row, w) in b.t.iter().zip(set.windows(2)) {
                    let direct = lambda[w[1]] - lambda[w[0]];
                    let recon: f64 = row
                        .iter()
                        .zip(&xis[k - 1..])
                        .map(|(c, x)| crate::poly::rational_to_f64(c) * x)
                        .sum();
                    assert!((direct - recon).abs() < 1e-12);
                }
            }
            // R reproduces zeta
            let b = difference_basis(&f, 1).unwrap();
            for l in 1..n {
                let (xi, zeta) = f.zeta_xi_eval(l, &lambda).unwrap();
                let num: f64 = b.r[l - 1]
                    .iter()
                    .enumerate()
                    .map(|(j0, c)| crate::poly::rational_to_f64(c) * f.xi(j0 + 1, &lambda).unwrap())
                    .sum();
                assert!((zeta - num / xi).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn schatten_partials() {
        let params = SchattenParams::new(&[8.0, 8.0, 8.0, 8.0]).unwrap();
        assert!((params.p() - 2.0).abs() < 1e-15);
        // equal exponents np: partial over a span of length d is np/d
        for i in 0..4 {
            for j in (i + 1)..=4 {
                let d = (j - i) as f64;
                assert!((params.partial(i, j) - 8.0 / d).abs() < 1e-12);
            }
        }
        assert_eq!(SchattenParams::conjugate(2.0), 2.0);
        assert!((SchattenParams::conjugate(4.0) - 4.0 / 3.0).abs() < 1e-15);
        assert!(SchattenParams::new(&[1.0, 4.0]).is_err());
        assert!(SchattenParams::new(&[2.0, 2.0, 2.0]).is_err()); // p = 2/3 < 1
    }

    #[test]
    fn bound_matches_hand_enumeration() {
        // n = 2, p_1 = p_2 = 4: the four sequences contribute
        // (1,+): sharp(p_{(0;1)}) * sharp(p_{(0;2)}) = 4 * 2 = 8
        // (1,-): 4 * 4 (terminal pair (1,2))          = 16
        // (2,+): 4 * 4 (terminal pair (0,1))          = 16
        // (2,-): 4 * 2 (terminal pair (2,0))          = 8
        let params = SchattenParams::new(&[4.0, 4.0]).unwrap();
        let b = theoretical_bound(&params).unwrap();
        assert!((b - 48.0).abs() < 1e-12);
    }

    #[test]
    fn domain_predicates() {
        assert!(is_in_d_n(&[0.0, 1.0, -1.0]));
        assert!(!is_in_d_n(&[0.0, 1.0, 0.0]));
        assert!(is_in_delta_i(&[3.0, 3.0, 1.0], &[0, 1]));
        assert!(!is_in_delta_i(&[3.0, 2.0, 1.0], &[0, 1]));
    }
}
