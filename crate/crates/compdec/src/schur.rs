//! Sign and binary matrices and their Schur-independence certificates.
//!
//! A sign matrix S ∈ {±1}ⁿˣʳ is *Schur independent* when the family
//!
//! > {e} ∪ {sᵢ ⊙ sⱼ : 1 ≤ i < j ≤ r}
//!
//! of entrywise products of its columns (together with the all-ones vector
//! e) is linearly independent.  A binary matrix Z ∈ {0,1}ⁿˣʳ is Schur
//! independent when
//!
//! > {e} ∪ {zᵢ : 1 ≤ i ≤ r} ∪ {zᵢ ⊙ zⱼ : 1 ≤ i < j ≤ r}
//!
//! is linearly independent.  These combinatorial certificates are exactly
//! what makes sign/binary component decompositions unique, so the checkers
//! here are deliberately *exact*: the families have integer entries, and
//! their rank is computed with fraction-free integer elimination rather
//! than floating-point thresholds.

use num_bigint::BigInt;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Matrix with entries in {−1, +1}, stored row-major as `i8`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i8>,
}

/// Matrix with entries in {0, 1}, stored row-major as `i8`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i8>,
}

fn validate_shape(rows: usize, cols: usize, len: usize, what: &str) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::validation(format!(
            "{what} must be non-empty, got {rows}×{cols}"
        )));
    }
    if len != rows * cols {
        return Err(Error::validation(format!(
            "{what} data length {len} does not match {rows}×{cols}"
        )));
    }
    Ok(())
}

impl SignMatrix {
    /// Builds from row-major entries, validating that each is ±1.
    pub fn from_entries(rows: usize, cols: usize, data: Vec<i8>) -> Result<Self> {
        validate_shape(rows, cols, data.len(), "sign matrix")?;
        if let Some(bad) = data.iter().find(|&&v| v != 1 && v != -1) {
            return Err(Error::validation(format!(
                "sign matrix entries must be ±1, found {bad}"
            )));
        }
        Ok(SignMatrix { rows, cols, data })
    }

    /// Rounds a dense matrix whose entries are within `entry_round` of ±1.
    pub fn from_dense(m: &DenseMatrix, entry_round: f64) -> Result<Self> {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if (v - 1.0).abs() <= entry_round {
                    data.push(1);
                } else if (v + 1.0).abs() <= entry_round {
                    data.push(-1);
                } else {
                    return Err(Error::validation(format!(
                        "entry ({i}, {j}) = {v} is not within {entry_round} of ±1"
                    )));
                }
            }
        }
        Self::from_entries(m.nrows(), m.ncols(), data)
    }

    /// Number of rows (the ambient dimension n).
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns (the number of components r).
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry (i, j) as ±1.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.data[i * self.cols + j]
    }

    /// Column `j` as an owned vector of ±1.
    pub fn column(&self, j: usize) -> Vec<i8> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Expands to a dense float matrix.
    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j) as f64)
    }

    /// Reorders and flips columns: result column i is ξᵢ · column π(i).
    pub(crate) fn permute_signed(&self, perm: &[usize], signs: &[i8]) -> SignMatrix {
        let mut data = vec![0i8; self.rows * self.cols];
        for (dst, (&src, &xi)) in perm.iter().zip(signs.iter()).enumerate() {
            for i in 0..self.rows {
                data[i * self.cols + dst] = xi * self.get(i, src);
            }
        }
        SignMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }
}

impl BinaryMatrix {
    /// Builds from row-major entries, validating that each is 0 or 1.
    pub fn from_entries(rows: usize, cols: usize, data: Vec<i8>) -> Result<Self> {
        validate_shape(rows, cols, data.len(), "binary matrix")?;
        if let Some(bad) = data.iter().find(|&&v| v != 0 && v != 1) {
            return Err(Error::validation(format!(
                "binary matrix entries must be 0 or 1, found {bad}"
            )));
        }
        Ok(BinaryMatrix { rows, cols, data })
    }

    /// Rounds a dense matrix whose entries are within `entry_round` of 0/1.
    pub fn from_dense(m: &DenseMatrix, entry_round: f64) -> Result<Self> {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if (v - 1.0).abs() <= entry_round {
                    data.push(1);
                } else if v.abs() <= entry_round {
                    data.push(0);
                } else {
                    return Err(Error::validation(format!(
                        "entry ({i}, {j}) = {v} is not within {entry_round} of 0 or 1"
                    )));
                }
            }
        }
        Self::from_entries(m.nrows(), m.ncols(), data)
    }

    /// Number of rows (the ambient dimension n).
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns (the number of components r).
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry (i, j) as 0/1.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.data[i * self.cols + j]
    }

    /// Column `j` as an owned 0/1 vector.
    pub fn column(&self, j: usize) -> Vec<i8> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Expands to a dense float matrix.
    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j) as f64)
    }

    /// Reorders columns: result column i is column π(i).
    pub(crate) fn permute(&self, perm: &[usize]) -> BinaryMatrix {
        let mut data = vec![0i8; self.rows * self.cols];
        for (dst, &src) in perm.iter().enumerate() {
            for i in 0..self.rows {
                data[i * self.cols + dst] = self.get(i, src);
            }
        }
        BinaryMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }
}

/// Exact rank of an integer matrix given as a list of columns, via
/// fraction-free (Bareiss) elimination over arbitrary-precision integers.
///
/// The division in the update rule is exact by the Bareiss identity — the
/// intermediate entries are minors of the input — so the result is the true
/// rank over ℚ with no floating-point thresholds involved.
fn exact_rank(columns: &[Vec<i64>]) -> usize {
    if columns.is_empty() {
        return 0;
    }
    let nrows = columns[0].len();
    let ncols = columns.len();
    // Row-major working copy in BigInt.
    let mut m: Vec<Vec<BigInt>> = (0..nrows)
        .map(|i| columns.iter().map(|c| BigInt::from(c[i])).collect())
        .collect();
    let zero = BigInt::from(0);
    let mut prev = BigInt::from(1);
    let mut rank = 0usize;
    for col in 0..ncols {
        if rank == nrows {
            break;
        }
        // Partial pivot: any nonzero entry in this column at or below `rank`.
        let pivot = (rank..nrows).find(|&i| m[i][col] != zero);
        let Some(p) = pivot else { continue };
        m.swap(rank, p);
        for i in (rank + 1)..nrows {
            for j in (col + 1)..ncols {
                let num = &m[rank][col] * &m[i][j] - &m[i][col] * &m[rank][j];
                debug_assert!((&num % &prev) == zero, "Bareiss division must be exact");
                m[i][j] = num / &prev;
            }
            m[i][col] = zero.clone();
        }
        prev = m[rank][col].clone();
        rank += 1;
    }
    rank
}

/// The Schur family of a sign matrix: {e} ∪ {sᵢ ⊙ sⱼ : i < j}, as columns.
fn sign_family(s: &SignMatrix) -> Vec<Vec<i64>> {
    let n = s.rows();
    let r = s.cols();
    let mut fam = Vec::with_capacity(1 + r * (r - 1) / 2);
    fam.push(vec![1i64; n]);
    for i in 0..r {
        for j in (i + 1)..r {
            fam.push(
                (0..n)
                    .map(|k| (s.get(k, i) as i64) * (s.get(k, j) as i64))
                    .collect(),
            );
        }
    }
    fam
}

/// The Schur family of a binary matrix: {e} ∪ {zᵢ} ∪ {zᵢ ⊙ zⱼ : i < j}.
fn binary_family(z: &BinaryMatrix) -> Vec<Vec<i64>> {
    let n = z.rows();
    let r = z.cols();
    let mut fam = Vec::with_capacity(1 + r + r * (r - 1) / 2);
    fam.push(vec![1i64; n]);
    for i in 0..r {
        fam.push((0..n).map(|k| z.get(k, i) as i64).collect());
    }
    for i in 0..r {
        for j in (i + 1)..r {
            fam.push(
                (0..n)
                    .map(|k| (z.get(k, i) as i64) * (z.get(k, j) as i64))
                    .collect(),
            );
        }
    }
    fam
}

/// True when the sign matrix is Schur independent.
pub fn is_schur_sign(s: &SignMatrix) -> bool {
    let fam = sign_family(s);
    exact_rank(&fam) == fam.len()
}

/// True when the binary matrix is Schur independent.
pub fn is_schur_binary(z: &BinaryMatrix) -> bool {
    let fam = binary_family(z);
    exact_rank(&fam) == fam.len()
}

/// Largest r for which a Schur-independent sign matrix in {±1}ⁿˣʳ can
/// exist: the family size 1 + r(r−1)/2 cannot exceed n, so the answer is
/// the largest r with r(r−1) ≤ 2n − 2.
///
/// Requires n ≥ 1.
pub fn max_sign_cardinality(n: usize) -> usize {
    assert!(n >= 1, "ambient dimension must be at least 1");
    let mut r: usize = 1;
    // Integer-exact predicate; no floating-point square roots involved.
    while (r + 1) * r <= 2 * n - 2 {
        r += 1;
    }
    r
}

/// Checks the sign/binary transformation equivalence on a concrete Z:
/// Z is binary-Schur-independent if and only if the augmented sign matrix
/// [2Z − E | e] is sign-Schur-independent.  Returns true when the two
/// predicates agree.
pub fn correspondence_holds(z: &BinaryMatrix) -> bool {
    let lhs = is_schur_binary(z);
    let n = z.rows();
    let r = z.cols();
    let mut data = Vec::with_capacity(n * (r + 1));
    for i in 0..n {
        for j in 0..r {
            data.push(2 * z.get(i, j) - 1);
        }
        data.push(1);
    }
    let augmented =
        SignMatrix::from_entries(n, r + 1, data).expect("entries are ±1 by construction");
    lhs == is_schur_sign(&augmented)
}

/// Attempt cap for the rejection samplers.
const MAX_SAMPLE_ATTEMPTS: usize = 1000;

/// Samples a Schur-independent sign matrix in {±1}ⁿˣʳ by rejection from
/// the uniform distribution on sign matrices.
///
/// Requires 1 ≤ r ≤ [`max_sign_cardinality`]`(n)`; fails with a solver
/// error if no independent draw appears within 1000 attempts.
pub fn random_schur_sign(n: usize, r: usize, seed: u64) -> Result<SignMatrix> {
    if n == 0 || r == 0 {
        return Err(Error::validation("dimensions must be positive".to_string()));
    }
    let cap = max_sign_cardinality(n);
    if r > cap {
        return Err(Error::validation(format!(
            "no Schur-independent sign matrix with r = {r} columns exists for n = {n} \
             (maximum is {cap})"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for _ in 0..MAX_SAMPLE_ATTEMPTS {
        let data: Vec<i8> = (0..n * r)
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        let s = SignMatrix::from_entries(n, r, data)?;
        if is_schur_sign(&s) {
            return Ok(s);
        }
    }
    Err(Error::solver(format!(
        "rejection sampling found no Schur-independent sign matrix in \
         {MAX_SAMPLE_ATTEMPTS} attempts (n = {n}, r = {r})"
    )))
}

/// Samples a Schur-independent binary matrix in {0,1}ⁿˣʳ by rejection from
/// the uniform distribution on binary matrices.
///
/// Requires r + 1 ≤ [`max_sign_cardinality`]`(n)` (the augmented family
/// [2Z − E | e] must fit in ℝⁿ); fails with a solver error if no
/// independent draw appears within 1000 attempts.
pub fn random_schur_binary(n: usize, r: usize, seed: u64) -> Result<BinaryMatrix> {
    if n == 0 || r == 0 {
        return Err(Error::validation("dimensions must be positive".to_string()));
    }
    let cap = max_sign_cardinality(n);
    if r + 1 > cap {
        return Err(Error::validation(format!(
            "no Schur-independent binary matrix with r = {r} columns exists for n = {n} \
             (need r + 1 ≤ {cap})"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for _ in 0..MAX_SAMPLE_ATTEMPTS {
        let data: Vec<i8> = (0..n * r)
            .map(|_| if rng.random::<bool>() { 1 } else { 0 })
            .collect();
        let z = BinaryMatrix::from_entries(n, r, data)?;
        if is_schur_binary(&z) {
            return Ok(z);
        }
    }
    Err(Error::solver(format!(
        "rejection sampling found no Schur-independent binary matrix in \
         {MAX_SAMPLE_ATTEMPTS} attempts (n = {n}, r = {r})"
    )))
}
