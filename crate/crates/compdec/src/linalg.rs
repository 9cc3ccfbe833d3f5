//! Dense linear-algebra primitives shared by every other module.
//!
//! Matrices are carried as [`nalgebra::DMatrix<f64>`] (re-exported as
//! [`DenseMatrix`]).  Symmetric matrices get their own storage type,
//! [`SymmetricMatrix`], which keeps only the upper triangle so that symmetry
//! is structural rather than a numerical accident.
//!
//! All rank decisions in the crate go through [`numerical_rank`] with the
//! thresholds collected in [`Tolerances`], so that "rank" means the same
//! thing everywhere.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Dense column-major matrix of `f64` entries.
pub type DenseMatrix = DMatrix<f64>;

/// Tolerance bundle used across the crate.
///
/// Every comparison against "zero" in the library is relative to one of
/// these knobs; none of them is hard-coded at call sites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative singular-value cutoff for rank decisions: σᵢ counts toward
    /// the rank when σᵢ > `rank_rel` · max(rows, cols) · σ₁.
    pub rank_rel: f64,
    /// Absolute slack when snapping a float to a nearby integer value
    /// (±1 entries of sign vectors, 0/1 entries of binary vectors).
    pub entry_round: f64,
    /// Relative residual bound for reconstruction checks, ‖·‖_F scale.
    pub residual_rel: f64,
    /// Magnitude of negative eigenvalue tolerated when certifying positive
    /// semidefiniteness, relative to 1 + ‖·‖_F.
    pub psd_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank_rel: 1e-9,
            entry_round: 1e-3,
            residual_rel: 1e-6,
            psd_slack: 1e-8,
        }
    }
}

impl Tolerances {
    /// Checks that every tolerance is finite and strictly positive.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rank_rel", self.rank_rel),
            ("entry_round", self.entry_round),
            ("residual_rel", self.residual_rel),
            ("psd_slack", self.psd_slack),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::validation(format!(
                    "tolerance {name} must be finite and positive, got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// Symmetric matrix stored as the upper triangle in row-major order.
///
/// Entry (i, j) with i ≤ j lives at offset `i·dim − i(i−1)/2 + (j−i)`;
/// reads of (j, i) are transparently folded onto (i, j), so the matrix can
/// never become asymmetric through its own API.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    upper: Vec<f64>,
}

impl SymmetricMatrix {
    /// The zero matrix of side `dim`.
    pub fn zeros(dim: usize) -> Self {
        SymmetricMatrix {
            dim,
            upper: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    /// The identity matrix of side `dim`.
    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds the matrix from a callback on positions (i, j) with i ≤ j.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Symmetrizes a square dense matrix: entry (i, j) becomes
    /// ½(m[i,j] + m[j,i]).  Fails if `m` is not square.
    pub fn from_dense(m: &DenseMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::validation(format!(
                "symmetric matrix requires a square input, got {}×{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self::from_fn(m.nrows(), |i, j| {
            0.5 * (m[(i, j)] + m[(j, i)])
        }))
    }

    /// Side length.
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.dim - i * (i.wrapping_sub(1)) / 2 + (j - i)
    }

    /// Entry (i, j); the two index orders address the same storage.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[self.index(i, j)]
    }

    /// Sets entry (i, j) (and thereby (j, i)).
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let idx = self.index(i, j);
        self.upper[idx] = value;
    }

    /// Expands into a dense matrix.
    pub fn to_dense(&self) -> DenseMatrix {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    /// Sum of the diagonal.
    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// The diagonal as a vector.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.to_dense().norm()
    }

    /// True when every stored entry is finite.
    pub fn is_finite(&self) -> bool {
        self.upper.iter().all(|v| v.is_finite())
    }
}

/// True when every entry of `m` is finite.
pub fn matrix_is_finite(m: &DenseMatrix) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Validates that `m` is non-empty with finite entries.
pub fn validate_matrix(m: &DenseMatrix, name: &str) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::validation(format!(
            "{name} must be non-empty, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !matrix_is_finite(m) {
        return Err(Error::validation(format!(
            "{name} contains a non-finite entry"
        )));
    }
    Ok(())
}

/// Numerical rank of `m`: the number of singular values σᵢ with
/// σᵢ > rank_rel · max(rows, cols) · σ₁.  The zero matrix has rank 0.
pub fn numerical_rank(m: &DenseMatrix, tol: &Tolerances) -> usize {
    let sv = m.singular_values();
    let sigma1 = sv.max();
    if sigma1 == 0.0 {
        return 0;
    }
    let cutoff = tol.rank_rel * m.nrows().max(m.ncols()) as f64 * sigma1;
    sv.iter().filter(|&&s| s > cutoff).count()
}

/// Orthonormal basis of the column space of `m`, as the columns of the
/// returned matrix (one column per numerical-rank dimension).
///
/// Fails on the zero matrix, which has an empty column space.
pub fn orth_basis(m: &DenseMatrix, tol: &Tolerances) -> Result<DenseMatrix> {
    validate_matrix(m, "matrix")?;
    let rank = numerical_rank(m, tol);
    if rank == 0 {
        return Err(Error::validation(
            "zero matrix has no orthonormal column basis".to_string(),
        ));
    }
    Ok(left_singular_basis(m, rank))
}

/// The top-`rank` left singular vectors of `m`, as columns.
///
/// Internal variant of [`orth_basis`] for callers that know the rank by
/// construction and must not re-derive it from noisy data.
pub(crate) fn left_singular_basis(m: &DenseMatrix, rank: usize) -> DenseMatrix {
    thin_svd_left(m, rank).0
}

/// Top-`rank` left singular pairs of `m`: an orthonormal basis of the
/// dominant column space, with the matching singular values.
///
/// Computed from the symmetric eigendecomposition of the smaller Gram
/// matrix, not from a bidiagonalization: the bidiagonal solver's vector
/// accumulation can return a basis that misses the column space by
/// whole percents on some inputs while staying perfectly orthonormal,
/// which poisons everything built on top of it.  The eigensolver is the
/// primitive the rest of the crate already leans on, and the squared
/// dynamic range costs nothing at the well-separated ranks this is
/// called with.
pub(crate) fn thin_svd_left(m: &DenseMatrix, rank: usize) -> (DenseMatrix, Vec<f64>) {
    let (n, c) = (m.nrows(), m.ncols());
    assert!(rank <= n.min(c), "rank exceeds the matrix dimensions");
    if n <= c {
        let gram = m * m.transpose();
        let (values, vectors) = sym_eig_dense(&gram);
        let sigma = values[..rank].iter().map(|v| v.max(0.0).sqrt()).collect();
        (vectors.columns(0, rank).into_owned(), sigma)
    } else {
        let gram = m.transpose() * m;
        let (values, vectors) = sym_eig_dense(&gram);
        let sigma: Vec<f64> = values[..rank].iter().map(|v| v.max(0.0).sqrt()).collect();
        let mut u = m * vectors.columns(0, rank);
        // u's columns are the right singular vectors mapped through m,
        // with norms σ; normalize and re-orthogonalize the tail of
        // rounding error away.
        for k in 0..rank {
            for j in 0..k {
                let overlap = u.column(j).dot(&u.column(k));
                let col_j = u.column(j).into_owned();
                u.column_mut(k).axpy(-overlap, &col_j, 1.0);
            }
            let norm = u.column(k).norm();
            if norm > 0.0 {
                u.column_mut(k).scale_mut(1.0 / norm);
            }
        }
        (u, sigma)
    }
}

/// Eigendecomposition of a symmetric matrix, eigenvalues sorted in
/// descending order with matching eigenvector columns.
pub fn sym_eig(a: &SymmetricMatrix) -> (Vec<f64>, DenseMatrix) {
    sym_eig_dense(&a.to_dense())
}

/// [`sym_eig`] on an already-dense symmetric matrix.
pub(crate) fn sym_eig_dense(a: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let n = a.nrows();
    let eig = nalgebra::SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .expect("finite eigenvalues")
    });
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &SymmetricMatrix) -> f64 {
    let eig = nalgebra::SymmetricEigen::new(a.to_dense());
    eig.eigenvalues.min()
}

/// Result of a least-squares solve.
#[derive(Debug, Clone)]
pub struct LeastSquaresSolution {
    /// Minimizer of ‖A·X − B‖_F; the minimum-norm one when A is
    /// rank-deficient.
    pub x: DenseMatrix,
    /// Frobenius norm of the residual A·X − B at the solution.
    pub residual: f64,
}

/// Solves min_X ‖A·X − B‖_F through the eigendecomposition of AᵗA.
///
/// Singular values at or below the [`Tolerances::rank_rel`] cutoff are
/// dropped, which makes the solution the minimum-norm minimizer for
/// rank-deficient A.  Every caller passes a design matrix with few,
/// well-conditioned columns, where the Gram route is exact to working
/// precision (see [`thin_svd_left`] for why the bidiagonal SVD is
/// avoided).
pub fn least_squares(
    a: &DenseMatrix,
    b: &DenseMatrix,
    tol: &Tolerances,
) -> Result<LeastSquaresSolution> {
    validate_matrix(a, "design matrix")?;
    validate_matrix(b, "right-hand side")?;
    if a.nrows() != b.nrows() {
        return Err(Error::validation(format!(
            "design matrix has {} rows but right-hand side has {}",
            a.nrows(),
            b.nrows()
        )));
    }
    let gram = a.transpose() * a;
    let (values, vectors) = sym_eig_dense(&gram);
    let sigma1 = values.first().copied().unwrap_or(0.0).max(0.0).sqrt();
    let cutoff = tol.rank_rel * a.nrows().max(a.ncols()) as f64 * sigma1;
    // X = (AᵗA)⁺·Aᵗ·B = V·Λ⁺·Vᵗ·Aᵗ·B with the small spectrum zeroed,
    // which equals V·Σ⁺·Uᵗ·B on the retained subspace.
    let mut scaled = vectors.transpose() * (a.transpose() * b);
    for (i, &lam) in values.iter().enumerate() {
        let inv = if lam.max(0.0).sqrt() > cutoff { 1.0 / lam } else { 0.0 };
        scaled.row_mut(i).scale_mut(inv);
    }
    let x = &vectors * scaled;
    let residual = (a * &x - b).norm();
    Ok(LeastSquaresSolution { x, residual })
}

/// Orthogonal projector U·Uᵗ onto the column span of an orthonormal `u`,
/// as produced by [`orth_basis`].  Companion to the robust-subspace
/// routines: a caller that knows the clean span can project onto it or
/// hand the projector to the inlier selector directly.
pub fn projector_from_basis(u: &DenseMatrix) -> SymmetricMatrix {
    let p = u * u.transpose();
    SymmetricMatrix::from_dense(&p).expect("square by construction")
}

/// Column `j` of `m` as an owned vector.
pub(crate) fn column_vec(m: &DenseMatrix, j: usize) -> DVector<f64> {
    m.column(j).into_owned()
}
