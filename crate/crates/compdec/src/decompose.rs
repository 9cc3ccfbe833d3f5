//! The component decompositions themselves.
//!
//! Three closely related problems share one engine here:
//!
//! * **Symmetric** ([`sym_scd`]): a correlation matrix A of rank r is
//!   written as A = S·diag(τ)·Sᵗ with S ∈ {±1}ⁿˣʳ and τ strictly
//!   positive convex weights.
//! * **Asymmetric** ([`asym_scd`]): a rank-r matrix B is written as
//!   B = S·Wᵗ with a sign matrix S and full-column-rank weights W.
//! * **Binary** ([`bcd`]): a rank-r matrix C is written as C = Z·W₊ᵗ with
//!   Z ∈ {0, 1}ⁿˣʳ, by reduction to the sign case through the entrywise
//!   affine map z ↦ 2z − e.
//!
//! When the discrete factor is Schur independent the decomposition is
//! unique up to a signed permutation of the components (a plain
//! permutation in the binary case), and the methods here recover it with
//! probability one over their internal random choices.
//! [`match_signed_permutation`] and [`match_permutation`] decide that
//! equivalence exactly, in integer arithmetic.
//!
//! The engine peels one component per round: with P the projector onto
//! the span of the current matrix and g a standard Gaussian direction,
//! the maximizer of gᵗXg over correlation matrices X with
//! trace(P·X) = n is almost surely the rank-one correlation s·sᵗ of a
//! single component, and a matrix-pencil line search then deflates that
//! component away.  All randomness is derived from the caller's seed via
//! per-(round, redraw) substreams, so runs are reproducible and
//! different seeds agree up to the symmetry.
//!
//! Every returned decomposition is verified — reconstruction residual,
//! Schur independence, weight rank — before it is handed back; inputs
//! outside the guaranteed model class surface as errors, never as
//! silently wrong output.

use crate::error::{Error, Result};
use crate::linalg::{
    column_vec, least_squares, left_singular_basis, min_eigenvalue, numerical_rank, sym_eig,
    thin_svd_left, validate_matrix, DenseMatrix, SymmetricMatrix, Tolerances,
};
use crate::schur::{is_schur_binary, is_schur_sign, max_sign_cardinality, BinaryMatrix, SignMatrix};
use crate::sdp::{
    reduced_direction_problem, reduced_factorization_problem, solve_linear_sdp, solve_pencil_max,
};
use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

/// Default number of fresh Gaussian directions tried per round before a
/// failed rank-one extraction is reported as an error.
pub const DEFAULT_MAX_REDRAWS: usize = 5;

/// Accuracy requested from the interior-point solver for the inner SDPs.
const SDP_TOL: f64 = 1e-9;

/// A direction maximizer counts as rank-one when its top eigenvalue is at
/// least (1 − this)·n; a rank-one correlation matrix has λ₁ = n exactly.
const RANK_ONE_EIG_REL: f64 = 1e-4;

/// Slack allowed on Στ = 1 when re-fitting the component weights.
const WEIGHT_SLACK: f64 = 1e-6;

/// A symmetric sign component decomposition A = S·diag(τ)·Sᵗ.
#[derive(Debug, Clone)]
pub struct SymScdResult {
    /// Sign components, one per column; Schur independent on the
    /// guaranteed model class.
    pub s: SignMatrix,
    /// Convex component weights: strictly positive, summing to one.
    pub tau: Vec<f64>,
}

/// A sign component decomposition B = S·Wᵗ.
#[derive(Debug, Clone)]
pub struct SignDecomposition {
    /// Sign components, one per column; Schur independent.
    pub s: SignMatrix,
    /// Weight matrix with one full-column-rank column per component.
    pub w: DenseMatrix,
}

/// A binary component decomposition C = Z·W₊ᵗ.
#[derive(Debug, Clone)]
pub struct BinaryDecomposition {
    /// Binary components, one per column; Schur independent.
    pub z: BinaryMatrix,
    /// Weight matrix with one column per component.
    pub w_plus: DenseMatrix,
}

/// A signed permutation (π, ξ) on r letters, acting on matrices from the
/// right: column i of M·Π equals ξᵢ times column π(i) of M, so the
/// matrix form has Π[π(i), i] = ξᵢ and zeros elsewhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedPermutation {
    /// π as 0-based source indices: output column i is drawn from input
    /// column `perm[i]`.
    pub perm: Vec<usize>,
    /// ξ: the per-column sign flips, each exactly ±1.
    pub signs: Vec<i8>,
}

impl SignedPermutation {
    /// Validates a (π, ξ) pair: π must be a bijection on {0, …, r−1} and
    /// ξ ∈ {±1}ʳ, with r ≥ 1.
    pub fn new(perm: Vec<usize>, signs: Vec<i8>) -> Result<Self> {
        let r = perm.len();
        if r == 0 {
            return Err(Error::validation("signed permutation must be non-empty"));
        }
        if signs.len() != r {
            return Err(Error::validation(format!(
                "permutation has {r} letters but {} signs",
                signs.len()
            )));
        }
        let mut seen = vec![false; r];
        for &p in &perm {
            if p >= r {
                return Err(Error::validation(format!(
                    "permutation image {p} is out of range for {r} letters"
                )));
            }
            if seen[p] {
                return Err(Error::validation(format!(
                    "permutation image {p} appears twice"
                )));
            }
            seen[p] = true;
        }
        if let Some(bad) = signs.iter().find(|&&v| v != 1 && v != -1) {
            return Err(Error::validation(format!(
                "signed permutation signs must be ±1, found {bad}"
            )));
        }
        Ok(SignedPermutation { perm, signs })
    }

    /// Number of letters r.
    pub fn len(&self) -> usize {
        self.perm.len()
    }

    /// True for the (invalid as a value, but constructible) empty pair.
    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// The r×r matrix Π with Π[π(i), i] = ξᵢ.  Orthogonal because π is a
    /// bijection: Π·Πᵗ = I.
    pub fn to_matrix(&self) -> DenseMatrix {
        let r = self.perm.len();
        let mut m = DenseMatrix::zeros(r, r);
        for (i, (&p, &xi)) in self.perm.iter().zip(self.signs.iter()).enumerate() {
            m[(p, i)] = f64::from(xi);
        }
        m
    }
}

/// Entrywise affine map z ↦ 2z − e carrying binary components to sign
/// components; inverse of [`sign_to_binary`].
pub fn binary_to_sign(z: &BinaryMatrix) -> SignMatrix {
    let (n, r) = (z.rows(), z.cols());
    let mut data = Vec::with_capacity(n * r);
    for i in 0..n {
        for j in 0..r {
            data.push(2 * z.get(i, j) - 1);
        }
    }
    SignMatrix::from_entries(n, r, data).expect("entries are ±1 by construction")
}

/// Entrywise affine map s ↦ ½(s + e) carrying sign components to binary
/// components; inverse of [`binary_to_sign`].
pub fn sign_to_binary(s: &SignMatrix) -> BinaryMatrix {
    let (n, r) = (s.rows(), s.cols());
    let mut data = Vec::with_capacity(n * r);
    for i in 0..n {
        for j in 0..r {
            data.push((s.get(i, j) + 1) / 2);
        }
    }
    BinaryMatrix::from_entries(n, r, data).expect("entries are 0/1 by construction")
}

/// Finds the signed permutation carrying the columns of `s1` onto `s2`:
/// a pair (π, ξ) with s2ᵢ = ξᵢ·s1π(i) for every i — equivalently
/// S2 = S1·Π — or `None` when no such pair exists (including a shape
/// mismatch).  Comparison is exact integer equality.  Duplicate columns
/// are resolved by backtracking; when `s1` is Schur independent its
/// columns are distinct up to sign and the match, if any, is unique.
pub fn match_signed_permutation(s1: &SignMatrix, s2: &SignMatrix) -> Option<SignedPermutation> {
    if s1.rows() != s2.rows() || s1.cols() != s2.cols() {
        return None;
    }
    let r = s1.cols();
    let sources: Vec<Vec<i8>> = (0..r).map(|j| s1.column(j)).collect();
    let mut candidates: Vec<Vec<(usize, i8)>> = Vec::with_capacity(r);
    for i in 0..r {
        let target = s2.column(i);
        let mut here = Vec::new();
        for (j, source) in sources.iter().enumerate() {
            if *source == target {
                here.push((j, 1));
            } else if source.iter().zip(target.iter()).all(|(&a, &b)| a + b == 0) {
                here.push((j, -1));
            }
        }
        if here.is_empty() {
            return None;
        }
        candidates.push(here);
    }
    let mut perm = vec![0usize; r];
    let mut signs = vec![0i8; r];
    let mut used = vec![false; r];
    if assign_columns(&candidates, 0, &mut perm, &mut signs, &mut used) {
        debug_assert!(
            s1.permute_signed(&perm, &signs) == *s2,
            "matcher post-condition: S1·Π must equal S2"
        );
        Some(SignedPermutation { perm, signs })
    } else {
        None
    }
}

/// Finds the plain permutation π with z2ᵢ = z1π(i) for every i, or
/// `None` when the column multisets differ.  Exact integer comparison
/// with backtracking, as in [`match_signed_permutation`].
pub fn match_permutation(z1: &BinaryMatrix, z2: &BinaryMatrix) -> Option<Vec<usize>> {
    if z1.rows() != z2.rows() || z1.cols() != z2.cols() {
        return None;
    }
    let r = z1.cols();
    let sources: Vec<Vec<i8>> = (0..r).map(|j| z1.column(j)).collect();
    let mut candidates: Vec<Vec<(usize, i8)>> = Vec::with_capacity(r);
    for i in 0..r {
        let target = z2.column(i);
        let here: Vec<(usize, i8)> = sources
            .iter()
            .enumerate()
            .filter(|(_, source)| **source == target)
            .map(|(j, _)| (j, 1))
            .collect();
        if here.is_empty() {
            return None;
        }
        candidates.push(here);
    }
    let mut perm = vec![0usize; r];
    let mut signs = vec![0i8; r];
    let mut used = vec![false; r];
    if assign_columns(&candidates, 0, &mut perm, &mut signs, &mut used) {
        debug_assert!(
            z1.permute(&perm) == *z2,
            "matcher post-condition: Z1 permuted must equal Z2"
        );
        Some(perm)
    } else {
        None
    }
}

/// Depth-first search for an injective choice of one candidate source per
/// target column.
fn assign_columns(
    candidates: &[Vec<(usize, i8)>],
    i: usize,
    perm: &mut [usize],
    signs: &mut [i8],
    used: &mut [bool],
) -> bool {
    if i == candidates.len() {
        return true;
    }
    for &(j, xi) in &candidates[i] {
        if !used[j] {
            used[j] = true;
            perm[i] = j;
            signs[i] = xi;
            if assign_columns(candidates, i + 1, perm, signs, used) {
                return true;
            }
            used[j] = false;
        }
    }
    false
}

/// First reason `a` fails to be a correlation matrix, if any: non-finite
/// entries, a diagonal entry off 1 by more than `entry_round`, or a
/// negative eigenvalue below the relative `psd_slack`.
fn correlation_defect(a: &SymmetricMatrix, tol: &Tolerances) -> Option<String> {
    if a.dim() == 0 {
        return Some("matrix is empty".to_string());
    }
    if !a.is_finite() {
        return Some("matrix has a non-finite entry".to_string());
    }
    for i in 0..a.dim() {
        let d = a.get(i, i);
        if (d - 1.0).abs() > tol.entry_round {
            return Some(format!(
                "diagonal entry ({i}, {i}) = {d} is not within {} of 1",
                tol.entry_round
            ));
        }
    }
    let scale = 1.0 + a.to_dense().norm();
    let lam = min_eigenvalue(a);
    if lam < -tol.psd_slack * scale {
        return Some(format!(
            "smallest eigenvalue {lam:.3e} is below the positive-semidefinite slack"
        ));
    }
    None
}

/// Standard Gaussian direction for one (round, redraw) pair, drawn from a
/// substream of the caller's seed so redraws are fresh and reruns are
/// reproducible.
fn gaussian_direction(seed: u64, round: usize, redraw: usize, n: usize) -> Vec<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(((round as u64) << 32) | redraw as u64);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Reads a sign vector off a numerically rank-one correlation matrix: the
/// top eigenvalue must be at least (1 − 1e-4)·n and every entry of the
/// rescaled top eigenvector within `entry_round` of ±1.  Returns the
/// reason for refusal otherwise, for the caller's diagnostics.
fn extract_sign_vector(x: &SymmetricMatrix, entry_round: f64) -> std::result::Result<Vec<i8>, String> {
    let n = x.dim();
    let (values, vectors) = sym_eig(x);
    let lam1 = values[0];
    let floor = (1.0 - RANK_ONE_EIG_REL) * n as f64;
    if lam1 < floor {
        return Err(format!(
            "top eigenvalue {lam1:.6} is below the rank-one threshold {floor:.6}"
        ));
    }
    let scale = lam1.sqrt();
    let mut s = Vec::with_capacity(n);
    for i in 0..n {
        let v = scale * vectors[(i, 0)];
        if (v - 1.0).abs() <= entry_round {
            s.push(1);
        } else if (v + 1.0).abs() <= entry_round {
            s.push(-1);
        } else {
            return Err(format!(
                "entry {i} of the rescaled top eigenvector is {v:.6}, not within {entry_round} of ±1"
            ));
        }
    }
    Ok(s)
}

/// The rank-one sign correlation s·sᵗ.
fn sign_outer(s: &[i8]) -> SymmetricMatrix {
    SymmetricMatrix::from_fn(s.len(), |i, j| f64::from(s[i] * s[j]))
}

/// One deflation step: ζ·A + (1 − ζ)·s·sᵗ.  At the maximal feasible ζ
/// this removes the component s from the mixture and renormalizes the
/// remaining weights, keeping the matrix a correlation matrix of rank one
/// less.
fn deflate(a: &SymmetricMatrix, s: &[i8], zeta: f64) -> SymmetricMatrix {
    SymmetricMatrix::from_fn(a.dim(), |i, j| {
        zeta * a.get(i, j) + (1.0 - zeta) * f64::from(s[i] * s[j])
    })
}

/// Projection onto the positive-semidefinite cone: negative eigenvalues
/// are clamped to zero.  The pencil boundary is located to finite
/// accuracy, so each deflation can leave a signed ghost of the removed
/// component; left in place such ghosts compound across rounds and
/// truncate later pencil steps, so every iterate is re-projected.
fn psd_clamp(a: &SymmetricMatrix) -> SymmetricMatrix {
    let (values, vectors) = sym_eig(a);
    if values.last().is_some_and(|&lam| lam >= 0.0) {
        return a.clone();
    }
    let mut scaled = vectors.clone();
    for (k, &lam) in values.iter().enumerate() {
        scaled.column_mut(k).scale_mut(lam.max(0.0));
    }
    let dense = &scaled * vectors.transpose();
    SymmetricMatrix::from_fn(a.dim(), |i, j| 0.5 * (dense[(i, j)] + dense[(j, i)]))
}

/// Expands a face-reduced solution block X̃ back to the ambient space:
/// Q·X̃·Qᵗ for the orthonormal basis Q of the face.
fn expand_from_basis(basis: &DenseMatrix, x: &SymmetricMatrix) -> SymmetricMatrix {
    let dense = basis * x.to_dense() * basis.transpose();
    SymmetricMatrix::from_fn(basis.nrows(), |i, j| 0.5 * (dense[(i, j)] + dense[(j, i)]))
}

/// Re-fits the component weights against the original input: solves
/// A ≈ Σ τc·sc·scᵗ over the upper triangle by least squares, requires
/// every weight strictly positive and the sum within 1e-6 of one, then
/// renormalizes exactly.
fn solve_weights(a: &SymmetricMatrix, s: &SignMatrix, tol: &Tolerances) -> Result<Vec<f64>> {
    let n = s.rows();
    let r = s.cols();
    let rows = n * (n + 1) / 2;
    let mut design = DenseMatrix::zeros(rows, r);
    let mut rhs = DenseMatrix::zeros(rows, 1);
    let mut row = 0;
    for i in 0..n {
        for j in i..n {
            for c in 0..r {
                design[(row, c)] = f64::from(s.get(i, c) * s.get(j, c));
            }
            rhs[(row, 0)] = a.get(i, j);
            row += 1;
        }
    }
    let ls = least_squares(&design, &rhs, tol)?;
    let weights: Vec<f64> = (0..r).map(|c| ls.x[(c, 0)]).collect();
    for (c, &t) in weights.iter().enumerate() {
        if t <= 0.0 {
            return Err(Error::hypothesis(format!(
                "component weight τ[{c}] = {t:.3e} is not strictly positive; the recovered \
                 sign components do not combine convexly to the input"
            )));
        }
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_SLACK {
        return Err(Error::hypothesis(format!(
            "component weights sum to {total:.8}, off 1 by more than {WEIGHT_SLACK:.0e}"
        )));
    }
    Ok(weights.into_iter().map(|t| t / total).collect())
}

/// Decomposes a correlation matrix into sign components:
/// A = S·diag(τ)·Sᵗ with S ∈ {±1}ⁿˣʳ, τ strictly positive summing to
/// one, and r the numerical rank of A.
///
/// One component is peeled per round.  With P the projector onto the
/// range of the current (deflated) matrix and g a standard Gaussian
/// direction, the SDP
///
/// > maximize gᵗXg  subject to  trace(P·X) = n, diag(X) = e, X ⪰ 0
///
/// is solved; for almost every g its maximizer is the rank-one
/// correlation s·sᵗ of a single component, which is read off the top
/// eigenpair and snapped to signs.  The matrix is then deflated along s
/// by the longest feasible pencil step ζ⋆ = max{ζ : ζ·A + (1−ζ)·s·sᵗ ⪰ 0},
/// which removes exactly that component and renormalizes the rest.
/// After r − 1 rounds the remaining matrix is itself a rank-one sign
/// correlation and yields the last component directly.  The weights are
/// finally re-fit against the original input by least squares and
/// validated.
///
/// `seed` drives the Gaussian directions through per-(round, redraw)
/// substreams: a fixed seed reproduces the run exactly, and different
/// seeds give the same decomposition up to a signed permutation.  When
/// the maximizer fails the rank-one test the direction is redrawn, up to
/// `max_redraws` times per round ([`DEFAULT_MAX_REDRAWS`] when in
/// doubt), before the round fails.
///
/// Errors: a non-correlation input, or a rank too large for any Schur-
/// independent sign family in dimension n, is rejected up front
/// ([`Error::Validation`]); persistent extraction failure surfaces as
/// [`Error::Solver`] with diagnostics; a weight fit that is not strictly
/// positive and normalized, or a reconstruction residual above
/// `tol.residual_rel`, surfaces as [`Error::Hypothesis`].
pub fn sym_scd(
    a: &SymmetricMatrix,
    tol: &Tolerances,
    seed: u64,
    max_redraws: usize,
) -> Result<SymScdResult> {
    tol.validate()?;
    if let Some(defect) = correlation_defect(a, tol) {
        return Err(Error::validation(format!(
            "input is not a correlation matrix: {defect}"
        )));
    }
    let r = numerical_rank(&a.to_dense(), tol);
    if r == 0 {
        return Err(Error::validation("input has numerical rank zero"));
    }
    if r > max_sign_cardinality(a.dim()) {
        return Err(Error::validation(format!(
            "rank {r} exceeds the largest Schur-independent sign family in dimension {}; \
             no such decomposition exists",
            a.dim()
        )));
    }
    sym_scd_with_rank(a, r, tol, seed, max_redraws)
}

/// [`sym_scd`] with the rank pinned by the caller, for pipelines that
/// know r by construction and must not re-derive it from noisy data.
fn sym_scd_with_rank(
    a: &SymmetricMatrix,
    r: usize,
    tol: &Tolerances,
    seed: u64,
    max_redraws: usize,
) -> Result<SymScdResult> {
    let n = a.dim();
    let a_dense = a.to_dense();
    let mut a_def = a.clone();
    let mut columns: Vec<Vec<i8>> = Vec::with_capacity(r);
    for round in 0..r.saturating_sub(1) {
        // The deflated matrix has rank r − round by construction; pin the
        // reduction basis to that span instead of re-detecting the rank.
        // The direction program is solved on the face X = Q·X̃·Qᵗ, where
        // it has interior points and the dual stays bounded.
        let basis = left_singular_basis(&a_def.to_dense(), r - round);
        let mut last_failure = String::new();
        let mut extracted = None;
        for redraw in 0..=max_redraws {
            let g = gaussian_direction(seed, round, redraw, n);
            let problem = reduced_direction_problem(&basis, &g)?;
            let sol = solve_linear_sdp(&problem, SDP_TOL)?;
            match extract_sign_vector(&expand_from_basis(&basis, &sol.x), tol.entry_round) {
                Ok(s) => {
                    extracted = Some(s);
                    break;
                }
                Err(why) => last_failure = why,
            }
        }
        let Some(s) = extracted else {
            return Err(Error::solver(format!(
                "round {round}: the direction maximizer was not rank-one after {} fresh \
                 Gaussian directions ({last_failure}); the input most likely has no \
                 Schur-independent sign decomposition",
                max_redraws + 1
            )));
        };
        let zeta = solve_pencil_max(&a_def, &sign_outer(&s), tol.psd_slack)?;
        a_def = psd_clamp(&deflate(&a_def, &s, zeta));
        columns.push(s);
    }
    let last = extract_sign_vector(&a_def, tol.entry_round).map_err(|why| {
        Error::solver(format!(
            "the remaining matrix is not a rank-one sign correlation ({why})"
        ))
    })?;
    columns.push(last);

    let mut data = vec![0i8; n * r];
    for (c, col) in columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            data[i * r + c] = v;
        }
    }
    let s = SignMatrix::from_entries(n, r, data).expect("entries are ±1 by construction");
    let tau = solve_weights(a, &s, tol)?;
    let s_dense = s.to_dense();
    let recon = &s_dense * DenseMatrix::from_diagonal(&DVector::from_vec(tau.clone()))
        * s_dense.transpose();
    let residual = (&recon - &a_dense).norm();
    let bound = tol.residual_rel * (1.0 + a_dense.norm());
    if residual > bound {
        return Err(Error::hypothesis(format!(
            "reconstruction residual {residual:.3e} exceeds {bound:.3e}; the input most \
             likely has no Schur-independent sign decomposition of rank {r}"
        )));
    }
    Ok(SymScdResult { s, tau })
}

/// Decomposes a rank-r matrix into sign components: B = S·Wᵗ with
/// S ∈ {±1}ⁿˣʳ Schur independent and W of full column rank.
///
/// The target is first compressed along its top right-singular subspace,
/// B ↦ B·V_r = U_r·Σ_r: the sign factor and every weight norm are
/// unchanged, so the relaxation below keeps the same correlation block
/// while its semidefinite variable shrinks from side n + m to n + r.
/// The factorization SDP
///
/// > minimize trace(Y)  subject to  trace(P·X) = n, diag(X) = e,
/// > \[\[X, B̂\], \[B̂ᵗ, Y\]\] ⪰ 0,
///
/// with P the projector onto the range of B, then has as its X block the
/// correlation matrix of the sign component, weighted by the column
/// norms of W.  The solve itself runs on the face X = U_r·X̃·U_rᵗ the
/// trace constraint pins down (side 2r, strictly feasible; see
/// `reduced_factorization_problem`), and the X block is expanded from
/// X̃⋆ afterwards.  That block is decomposed symmetrically ([`sym_scd`]'s
/// engine with the rank pinned to r), and the weights are recovered by a
/// least-squares solve of S̃·W̃ᵗ ≈ B.
///
/// On the guaranteed model class the result equals the planted factors
/// up to a signed permutation, with probability one over the seeded
/// internal randomness.  Violations of the model surface as errors:
/// reconstruction residual above `tol.residual_rel`, a rank-deficient
/// weight matrix, or a recovered sign factor that is not Schur
/// independent all report [`Error::Hypothesis`].
pub fn asym_scd(b: &DenseMatrix, tol: &Tolerances, seed: u64) -> Result<SignDecomposition> {
    tol.validate()?;
    validate_matrix(b, "decomposition target")?;
    let n = b.nrows();
    let r = numerical_rank(b, tol);
    if r == 0 {
        return Err(Error::validation(
            "the zero matrix has no sign component decomposition",
        ));
    }
    if r > max_sign_cardinality(n) {
        return Err(Error::validation(format!(
            "rank {r} exceeds the largest Schur-independent sign family in dimension {n}; \
             no such decomposition exists"
        )));
    }
    let (u_r, sigma) = thin_svd_left(b, r);
    let problem = reduced_factorization_problem(&u_r, &sigma)?;
    let sol = solve_linear_sdp(&problem, SDP_TOL)?;
    let x_tilde = SymmetricMatrix::from_fn(r, |i, j| sol.x.get(i, j));
    let x_block = expand_from_basis(&u_r, &x_tilde);
    if let Some(defect) = correlation_defect(&x_block, tol) {
        return Err(Error::solver(format!(
            "the factorization relaxation did not return a correlation matrix: {defect}"
        )));
    }
    let sym = sym_scd_with_rank(&x_block, r, tol, seed, DEFAULT_MAX_REDRAWS)?;
    let s_dense = sym.s.to_dense();
    let ls = least_squares(&s_dense, b, tol)?;
    let w = ls.x.transpose();
    let bound = tol.residual_rel * (1.0 + b.norm());
    if ls.residual > bound {
        return Err(Error::hypothesis(format!(
            "reconstruction residual {:.3e} exceeds {bound:.3e}; the target most likely \
             violates the decomposition hypotheses (Schur-independent sign factor, \
             full-column-rank weights)",
            ls.residual
        )));
    }
    let w_rank = numerical_rank(&w, tol);
    if w_rank != r {
        return Err(Error::hypothesis(format!(
            "recovered weight matrix has column rank {w_rank} instead of {r}"
        )));
    }
    if !is_schur_sign(&sym.s) {
        return Err(Error::hypothesis(
            "recovered sign matrix is not Schur independent",
        ));
    }
    Ok(SignDecomposition { s: sym.s, w })
}

/// Decomposes a rank-r matrix into binary components: C = Z·W₊ᵗ with
/// Z ∈ {0, 1}ⁿˣʳ Schur independent and W₊ of full column rank.
///
/// The shifted matrix B = 2C − E always gains exactly the all-ones
/// direction: it decomposes into r + 1 sign components — the images
/// 2zc − e of the binary components plus ±e itself — so its numerical
/// rank must be r + 1, which is checked first.  [`asym_scd`] recovers
/// that sign decomposition; the component that is a multiple of the
/// all-ones vector is located (largest absolute column mean, then
/// verified exact), moved last, and normalized so the pair becomes
/// (e, w̃ᵣ₊₁).  The residual sign ambiguity ξ ∈ {±1}ʳ of the other
/// components is the unique solution of
///
/// > \[w̃₁ … w̃ᵣ\]·ξ = w̃ᵣ₊₁ + e,
///
/// solved by least squares and required to round cleanly to ±1.  The
/// binary components are then z̃c = ½(ξc·s̃c + e), computed exactly in
/// integer arithmetic, with weights ξc·w̃c.
///
/// Up to a plain permutation of the components the result is unique, and
/// on the guaranteed model class it equals the planted factors with
/// probability one over the seeded internal randomness.  A missing
/// all-ones component, a sign system that does not resolve to ±1, a
/// recovered Z that is not Schur independent, or a reconstruction
/// residual above `tol.residual_rel` all report [`Error::Hypothesis`].
pub fn bcd(c: &DenseMatrix, tol: &Tolerances, seed: u64) -> Result<BinaryDecomposition> {
    tol.validate()?;
    validate_matrix(c, "decomposition target")?;
    let (n, m) = (c.nrows(), c.ncols());
    let r = numerical_rank(c, tol);
    if r == 0 {
        return Err(Error::validation(
            "the zero matrix has no binary component decomposition",
        ));
    }
    let b = DenseMatrix::from_fn(n, m, |i, j| 2.0 * c[(i, j)] - 1.0);
    let shifted_rank = numerical_rank(&b, tol);
    if shifted_rank != r + 1 {
        return Err(Error::hypothesis(format!(
            "the shifted matrix 2C − E has rank {shifted_rank}, expected rank(C) + 1 = {}; \
             a Schur-independent binary factor always adds the all-ones direction to the span",
            r + 1
        )));
    }
    let sd = asym_scd(&b, tol, seed)?;

    // Locate the ±e component contributed by the shift: the column with
    // the largest absolute mean, which must then be exactly constant.
    let mut cand = 0usize;
    let mut best = -1i64;
    for j in 0..=r {
        let sum: i64 = (0..n).map(|i| i64::from(sd.s.get(i, j))).sum();
        if sum.abs() > best {
            best = sum.abs();
            cand = j;
        }
    }
    let phi = sd.s.get(0, cand);
    if (0..n).any(|i| sd.s.get(i, cand) != phi) {
        return Err(Error::hypothesis(
            "no recovered sign component is a multiple of the all-ones vector",
        ));
    }

    // φ-normalize so the located pair is exactly (e, w̃ᵣ₊₁); flipping a
    // component and its weight together leaves the product unchanged.
    let mut sign_cols: Vec<Vec<i8>> = Vec::with_capacity(r);
    let mut weight_cols: Vec<DVector<f64>> = Vec::with_capacity(r);
    for j in 0..=r {
        if j != cand {
            sign_cols.push(sd.s.column(j));
            weight_cols.push(column_vec(&sd.w, j));
        }
    }
    let w_last = column_vec(&sd.w, cand) * f64::from(phi);

    let rhs_vec = &w_last + DVector::from_element(m, 1.0);
    let design = DenseMatrix::from_columns(&weight_cols);
    let rhs = DenseMatrix::from_column_slice(m, 1, rhs_vec.as_slice());
    let ls = least_squares(&design, &rhs, tol)?;
    let bound = tol.residual_rel * (1.0 + rhs_vec.norm());
    if ls.residual > bound {
        return Err(Error::hypothesis(format!(
            "the sign-resolution system has residual {:.3e}, above {bound:.3e}; the binary \
             decomposition hypotheses are most likely violated",
            ls.residual
        )));
    }
    let mut xi = Vec::with_capacity(r);
    for cmp in 0..r {
        let v = ls.x[(cmp, 0)];
        if (v.abs() - 1.0).abs() > tol.entry_round {
            return Err(Error::hypothesis(format!(
                "sign-resolution entry {cmp} is {v:.6}, not within {} of ±1",
                tol.entry_round
            )));
        }
        xi.push(if v > 0.0 { 1i8 } else { -1i8 });
    }

    // z̃c = ½(ξc·s̃c + e), exact on the integer representation.
    let mut data = vec![0i8; n * r];
    for (cmp, col) in sign_cols.iter().enumerate() {
        for (i, &s) in col.iter().enumerate() {
            data[i * r + cmp] = (xi[cmp] * s + 1) / 2;
        }
    }
    let z = BinaryMatrix::from_entries(n, r, data).expect("entries are 0/1 by construction");
    let w_plus = DenseMatrix::from_fn(m, r, |i, cmp| f64::from(xi[cmp]) * weight_cols[cmp][i]);
    if !is_schur_binary(&z) {
        return Err(Error::hypothesis(
            "recovered binary matrix is not Schur independent",
        ));
    }
    let residual = (z.to_dense() * w_plus.transpose() - c).norm();
    let recon_bound = tol.residual_rel * (1.0 + c.norm());
    if residual > recon_bound {
        return Err(Error::hypothesis(format!(
            "reconstruction residual {residual:.3e} exceeds {recon_bound:.3e}"
        )));
    }
    Ok(BinaryDecomposition { z, w_plus })
}

/// Recovers the sign vectors spanning the range of `b`, for a matrix
/// whose range is spanned by a Schur-independent sign family.  The basis
/// is determined up to signs and order.  Implemented as the sign factor
/// of [`asym_scd`]; a range that admits no sign basis surfaces as an
/// error from the decomposition gates.
pub fn planted_sign_basis(b: &DenseMatrix, tol: &Tolerances, seed: u64) -> Result<SignMatrix> {
    Ok(asym_scd(b, tol, seed)?.s)
}

/// Recovers the binary vectors spanning the range of `b`, for a matrix
/// whose range is spanned by a Schur-independent binary family.  The
/// basis is determined up to order.  Implemented as the binary factor of
/// [`bcd`]; note the reduction adjoins the all-ones direction, so `b`
/// must carry at least rank + 1 columns for its shifted companion
/// 2B − E to reach the required rank.
pub fn planted_binary_basis(b: &DenseMatrix, tol: &Tolerances, seed: u64) -> Result<BinaryMatrix> {
    Ok(bcd(b, tol, seed)?.z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{orth_basis, projector_from_basis};
    use crate::schur::{random_schur_binary, random_schur_sign};
    use crate::sdp::factorization_problem;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;

    fn sign_matrix(cols: &[&[i8]]) -> SignMatrix {
        let n = cols[0].len();
        let r = cols.len();
        let mut data = vec![0i8; n * r];
        for (c, col) in cols.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                data[i * r + c] = v;
            }
        }
        SignMatrix::from_entries(n, r, data).unwrap()
    }

    fn binary_matrix(cols: &[&[i8]]) -> BinaryMatrix {
        let n = cols[0].len();
        let r = cols.len();
        let mut data = vec![0i8; n * r];
        for (c, col) in cols.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                data[i * r + c] = v;
            }
        }
        BinaryMatrix::from_entries(n, r, data).unwrap()
    }

    fn mixture(s: &SignMatrix, tau: &[f64]) -> SymmetricMatrix {
        SymmetricMatrix::from_fn(s.rows(), |i, j| {
            tau.iter()
                .enumerate()
                .map(|(c, t)| t * f64::from(s.get(i, c) * s.get(j, c)))
                .sum()
        })
    }

    fn gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    // Regression: on this instance the library's former bidiagonal-SVD
    // range basis missed range(B) by ~2e-2 while staying orthonormal,
    // which made the factorization relaxation near-infeasible and sent
    // the solver's dual iterates to infinity.  The Gram-eigendecomposition
    // basis keeps the relaxation exactly feasible.
    #[test]
    fn asym_scd_survives_an_ill_conditioned_singular_basis_instance() {
        let (n, r, m) = (9usize, 3usize, 7usize);
        let gen_seed = 6957853930734093859u64;
        let s = random_schur_sign(n, r, gen_seed).unwrap();
        let w = gaussian(m, r, gen_seed ^ 0x9e37_79b9_7f4a_7c15);
        let b = s.to_dense() * w.transpose();
        let out = asym_scd(&b, &Tolerances::default(), 424242).unwrap();
        match_signed_permutation(&s, &out.s).expect("planted factor recovered");
        let recon = out.s.to_dense() * out.w.transpose();
        assert!((recon - &b).norm() <= 1e-6 * (1.0 + b.norm()));
    }

    #[test]
    fn rank_one_correlation_is_returned_directly() {
        let s = sign_matrix(&[&[1, -1, 1]]);
        let a = mixture(&s, &[1.0]);
        let out = sym_scd(&a, &Tolerances::default(), 7, DEFAULT_MAX_REDRAWS).unwrap();
        assert_eq!(out.s.cols(), 1);
        assert!(match_signed_permutation(&s, &out.s).is_some());
        assert!((out.tau[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn equal_mixture_of_two_components_is_recovered() {
        let s = sign_matrix(&[&[1, 1, 1, 1], &[1, -1, 1, -1]]);
        let a = mixture(&s, &[0.5, 0.5]);
        let out = sym_scd(&a, &Tolerances::default(), 3, DEFAULT_MAX_REDRAWS).unwrap();
        match_signed_permutation(&s, &out.s)
            .expect("recovered components agree with the construction up to signed permutation");
        for i in 0..2 {
            assert!((out.tau[i] - 0.5).abs() < 1e-6, "tau = {:?}", out.tau);
        }
    }

    #[test]
    fn three_component_weights_match_the_construction() {
        let s = random_schur_sign(12, 3, 41).unwrap();
        let tau = [0.2, 0.3, 0.5];
        let a = mixture(&s, &tau);
        let out = sym_scd(&a, &Tolerances::default(), 11, DEFAULT_MAX_REDRAWS).unwrap();
        let m = match_signed_permutation(&s, &out.s)
            .expect("recovered components agree with the construction up to signed permutation");
        for i in 0..3 {
            assert!(
                (out.tau[i] - tau[m.perm[i]]).abs() < 1e-6,
                "component {i} weight {} vs planted {}",
                out.tau[i],
                tau[m.perm[i]]
            );
        }
    }

    #[test]
    fn different_seeds_give_equivalent_symmetric_results() {
        let s = random_schur_sign(10, 3, 5).unwrap();
        let a = mixture(&s, &[0.25, 0.35, 0.4]);
        let tol = Tolerances::default();
        let one = sym_scd(&a, &tol, 1, DEFAULT_MAX_REDRAWS).unwrap();
        let two = sym_scd(&a, &tol, 2, DEFAULT_MAX_REDRAWS).unwrap();
        let m = match_signed_permutation(&one.s, &two.s)
            .expect("different seeds agree up to a signed permutation");
        for i in 0..3 {
            assert!((two.tau[i] - one.tau[m.perm[i]]).abs() < 1e-8);
        }
    }

    #[test]
    fn non_correlation_inputs_are_rejected() {
        let tol = Tolerances::default();
        let scaled = SymmetricMatrix::from_fn(3, |i, j| if i == j { 2.0 } else { 0.0 });
        assert!(matches!(
            sym_scd(&scaled, &tol, 0, 1),
            Err(Error::Validation(_))
        ));
        let indefinite = SymmetricMatrix::from_fn(2, |i, j| if i == j { 1.0 } else { 2.0 });
        assert!(matches!(
            sym_scd(&indefinite, &tol, 0, 1),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn rank_one_target_recovers_both_factors() {
        let s = [1i8, 1, -1];
        let w = [1.0, 2.0];
        let b = DenseMatrix::from_fn(3, 2, |i, j| f64::from(s[i]) * w[j]);
        let out = asym_scd(&b, &Tolerances::default(), 9).unwrap();
        assert_eq!((out.s.rows(), out.s.cols()), (3, 1));
        let flip = out.s.get(0, 0) * s[0];
        for i in 0..3 {
            assert_eq!(out.s.get(i, 0), flip * s[i]);
        }
        for j in 0..2 {
            assert!((out.w[(j, 0)] - f64::from(flip) * w[j]).abs() < 1e-8);
        }
    }

    #[test]
    fn random_instance_matches_the_planted_factors() {
        let s = random_schur_sign(10, 3, 23).unwrap();
        let w = gaussian(8, 3, 24);
        let b = s.to_dense() * w.transpose();
        let out = asym_scd(&b, &Tolerances::default(), 25).unwrap();
        let m = match_signed_permutation(&s, &out.s)
            .expect("recovered factors agree with the construction up to signed permutation");
        let expected_w = &w * m.to_matrix();
        assert!(
            (&out.w - &expected_w).norm() < 1e-6,
            "weight deviation {:.3e}",
            (&out.w - &expected_w).norm()
        );
    }

    #[test]
    fn factorization_block_matches_the_weight_profile() {
        // The correlation block of the factorization relaxation carries
        // the planted signs weighted by the column norms of W; check it
        // against that closed form on the compressed target.
        let s = random_schur_sign(10, 3, 23).unwrap();
        let w = gaussian(8, 3, 24);
        let b = s.to_dense() * w.transpose();
        let tol = Tolerances::default();
        let r = numerical_rank(&b, &tol);
        assert_eq!(r, 3);
        let svd = b.clone().svd(true, false);
        let u_r = svd.u.as_ref().unwrap().columns(0, r).into_owned();
        let mut b_hat = u_r.clone();
        for j in 0..r {
            b_hat.column_mut(j).scale_mut(svd.singular_values[j]);
        }
        let p = projector_from_basis(&u_r);
        let problem = factorization_problem(&b_hat, &p).unwrap();
        let sol = solve_linear_sdp(&problem, 1e-9).unwrap();
        let d: Vec<f64> = (0..3).map(|c| w.column(c).norm()).collect();
        let trace_d: f64 = d.iter().sum();
        let mut dev = 0.0f64;
        for i in 0..10 {
            for j in 0..10 {
                let want: f64 = (0..3)
                    .map(|c| d[c] / trace_d * f64::from(s.get(i, c) * s.get(j, c)))
                    .sum();
                dev += (sol.x.get(i, j) - want).powi(2);
            }
        }
        assert!(dev.sqrt() < 1e-5, "X block deviates by {:.3e}", dev.sqrt());
    }

    #[test]
    fn any_nonsingular_sign_square_gives_an_exact_fit() {
        // With a nonsingular square sign matrix the least-squares weights
        // reproduce any target exactly; inner dimension n always works.
        let s = sign_matrix(&[
            &[1, 1, 1, 1],
            &[1, -1, 1, -1],
            &[1, 1, -1, -1],
            &[1, -1, -1, 1],
        ]);
        let b = gaussian(4, 6, 31);
        let ls = least_squares(&s.to_dense(), &b, &Tolerances::default()).unwrap();
        let w = ls.x.transpose();
        let residual = (s.to_dense() * w.transpose() - &b).norm();
        assert!(residual < 1e-10 * (1.0 + b.norm()));
    }

    #[test]
    fn zero_targets_are_rejected() {
        let zero = DenseMatrix::zeros(3, 2);
        let tol = Tolerances::default();
        assert!(matches!(
            asym_scd(&zero, &tol, 0),
            Err(Error::Validation(_))
        ));
        assert!(matches!(bcd(&zero, &tol, 0), Err(Error::Validation(_))));
    }

    #[test]
    fn rank_one_binary_target_is_exact() {
        let z = [1i8, 0, 1];
        let w = [2.0, -1.0];
        let c = DenseMatrix::from_fn(3, 2, |i, j| f64::from(z[i]) * w[j]);
        let out = bcd(&c, &Tolerances::default(), 13).unwrap();
        assert_eq!((out.z.rows(), out.z.cols()), (3, 1));
        // No sign ambiguity survives the binary reduction: the recovery
        // is exact, not merely exact up to flips.
        for i in 0..3 {
            assert_eq!(out.z.get(i, 0), z[i]);
        }
        for j in 0..2 {
            assert!((out.w_plus[(j, 0)] - w[j]).abs() < 1e-8);
        }
    }

    #[test]
    fn all_ones_left_factor_is_rejected() {
        let w = [2.0, -1.0];
        let c = DenseMatrix::from_fn(3, 2, |_, j| w[j]);
        assert!(matches!(
            bcd(&c, &Tolerances::default(), 3),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn random_binary_instance_matches_the_planted_factors() {
        let z = random_schur_binary(12, 3, 55).unwrap();
        let w = gaussian(9, 3, 56);
        let c = z.to_dense() * w.transpose();
        let tol = Tolerances::default();
        // The shift adds exactly the all-ones direction to the span.
        let b = DenseMatrix::from_fn(12, 9, |i, j| 2.0 * c[(i, j)] - 1.0);
        assert_eq!(numerical_rank(&b, &tol), 4);
        let out = bcd(&c, &tol, 57).unwrap();
        let perm = match_permutation(&z, &out.z)
            .expect("recovered components agree with the construction up to permutation");
        let reordered = z.permute(&perm);
        for i in 0..12 {
            for j in 0..3 {
                assert_eq!(reordered.get(i, j), out.z.get(i, j));
            }
        }
        for i in 0..3 {
            let dev = (out.w_plus.column(i) - w.column(perm[i])).norm();
            assert!(dev < 1e-6, "weight column {i} deviates by {dev:.3e}");
        }
    }

    #[test]
    fn affine_maps_are_mutually_inverse() {
        let z = binary_matrix(&[&[1, 0]]);
        assert_eq!(binary_to_sign(&z).column(0), vec![1, -1]);
        let e = sign_matrix(&[&[1, 1, 1]]);
        assert_eq!(sign_to_binary(&e).column(0), vec![1, 1, 1]);
        let random = random_schur_binary(9, 3, 77).unwrap();
        let round = sign_to_binary(&binary_to_sign(&random));
        for i in 0..9 {
            for j in 0..3 {
                assert_eq!(round.get(i, j), random.get(i, j));
            }
        }
    }

    #[test]
    fn identical_sign_matrices_match_with_the_identity() {
        let s = random_schur_sign(8, 3, 2).unwrap();
        let m = match_signed_permutation(&s, &s).unwrap();
        assert_eq!(m.perm, vec![0, 1, 2]);
        assert_eq!(m.signs, vec![1, 1, 1]);
    }

    #[test]
    fn swapped_and_negated_columns_are_tracked() {
        let a: &[i8] = &[1, 1, -1];
        let b: &[i8] = &[1, -1, 1];
        let s1 = sign_matrix(&[a, b]);
        let s2 = sign_matrix(&[b, &[-1, -1, 1]]);
        let m = match_signed_permutation(&s1, &s2).unwrap();
        assert_eq!(m.perm, vec![1, 0]);
        assert_eq!(m.signs, vec![1, -1]);
        assert_eq!(s1.to_dense() * m.to_matrix(), s2.to_dense());
        let pi = m.to_matrix();
        assert!((pi.transpose() * &pi - DenseMatrix::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn unrelated_matrices_do_not_match() {
        let s1 = sign_matrix(&[&[1, 1, 1], &[1, -1, 1]]);
        let s2 = sign_matrix(&[&[1, 1, -1], &[1, -1, 1]]);
        assert!(match_signed_permutation(&s1, &s2).is_none());
        // A shape mismatch is a non-match, not an error.
        let s3 = sign_matrix(&[&[1, 1]]);
        assert!(match_signed_permutation(&s1, &s3).is_none());
    }

    #[test]
    fn plain_permutation_matcher_handles_the_binary_side() {
        let z1 = binary_matrix(&[&[1, 0, 1, 0], &[1, 1, 0, 0]]);
        assert_eq!(match_permutation(&z1, &z1).unwrap(), vec![0, 1]);
        let z2 = binary_matrix(&[&[1, 1, 0, 0], &[1, 0, 1, 0]]);
        assert_eq!(match_permutation(&z1, &z2).unwrap(), vec![1, 0]);
        let z3 = binary_matrix(&[&[1, 0, 1, 0], &[0, 1, 1, 0]]);
        assert!(match_permutation(&z1, &z3).is_none());
    }

    #[test]
    fn signed_permutation_validation_rejects_malformed_pairs() {
        assert!(SignedPermutation::new(vec![0, 1], vec![1, -1]).is_ok());
        assert!(SignedPermutation::new(vec![0, 0], vec![1, 1]).is_err());
        assert!(SignedPermutation::new(vec![0, 2], vec![1, 1]).is_err());
        assert!(SignedPermutation::new(vec![0, 1], vec![1, 0]).is_err());
        assert!(SignedPermutation::new(vec![0], vec![1, 1]).is_err());
        assert!(SignedPermutation::new(vec![], vec![]).is_err());
    }

    #[test]
    fn sign_basis_of_a_planted_plane() {
        let s = sign_matrix(&[&[1, 1, 1, 1], &[1, -1, 1, -1]]);
        let tol = Tolerances::default();
        let basis = orth_basis(&s.to_dense(), &tol).unwrap();
        let found = planted_sign_basis(&basis, &tol, 17).unwrap();
        assert!(match_signed_permutation(&s, &found).is_some());
    }

    #[test]
    fn sign_basis_of_a_line() {
        let s = [1i8, -1, 1];
        let w = [0.7, -2.0];
        let b = DenseMatrix::from_fn(3, 2, |i, j| f64::from(s[i]) * w[j]);
        let found = planted_sign_basis(&b, &Tolerances::default(), 19).unwrap();
        assert_eq!(found.cols(), 1);
        let expected = sign_matrix(&[&s]);
        assert!(match_signed_permutation(&expected, &found).is_some());
    }

    #[test]
    fn line_without_a_sign_basis_is_an_error() {
        let x = [1.0, 2.0, 0.0];
        let w = [1.0, 1.5];
        let b = DenseMatrix::from_fn(3, 2, |i, j| x[i] * w[j]);
        assert!(planted_sign_basis(&b, &Tolerances::default(), 21).is_err());
    }

    #[test]
    fn binary_basis_of_a_planted_plane() {
        let z = binary_matrix(&[&[1, 0, 1, 0], &[1, 1, 0, 0]]);
        let w = gaussian(4, 2, 61);
        let b = z.to_dense() * w.transpose();
        let found = planted_binary_basis(&b, &Tolerances::default(), 63).unwrap();
        assert!(match_permutation(&z, &found).is_some());
    }

    #[test]
    fn binary_basis_of_a_line() {
        let z = [1i8, 0, 1];
        let w = [1.0, -0.4, 2.2];
        let b = DenseMatrix::from_fn(3, 3, |i, j| f64::from(z[i]) * w[j]);
        let found = planted_binary_basis(&b, &Tolerances::default(), 65).unwrap();
        assert_eq!(found.cols(), 1);
        assert_eq!(found.column(0), vec![1, 0, 1]);
    }

    #[test]
    fn line_without_a_binary_basis_is_an_error() {
        let x = [1.0, -1.0];
        let w = [1.0, 2.0, -0.5];
        let b = DenseMatrix::from_fn(2, 3, |i, j| x[i] * w[j]);
        assert!(planted_binary_basis(&b, &Tolerances::default(), 67).is_err());
    }

    /// Exact integer determinant by cofactor expansion; the test matrices
    /// are at most 3×3.
    fn int_det(q: &[Vec<i64>]) -> i64 {
        let r = q.len();
        if r == 1 {
            return q[0][0];
        }
        let mut det = 0;
        for j in 0..r {
            if q[0][j] == 0 {
                continue;
            }
            let minor: Vec<Vec<i64>> = q[1..]
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|&(k, _)| k != j)
                        .map(|(_, &v)| v)
                        .collect()
                })
                .collect();
            let sign = if j % 2 == 0 { 1 } else { -1 };
            det += sign * q[0][j] * int_det(&minor);
        }
        det
    }

    fn is_signed_permutation_matrix(q: &[Vec<i64>]) -> bool {
        let r = q.len();
        (0..r).all(|j| {
            let nonzero: Vec<i64> = (0..r).map(|i| q[i][j]).filter(|&v| v != 0).collect();
            nonzero.len() == 1 && nonzero[0].abs() == 1
        })
    }

    fn is_permutation_matrix(q: &[Vec<i64>]) -> bool {
        let r = q.len();
        (0..r).all(|j| {
            let nonzero: Vec<i64> = (0..r).map(|i| q[i][j]).filter(|&v| v != 0).collect();
            nonzero == vec![1]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn prop_signed_permutations_preserve_the_sign_alphabet(
            seed in any::<u64>(),
            pseed in any::<u64>(),
        ) {
            let s = random_schur_sign(8, 3, seed).unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(pseed);
            let mut perm: Vec<usize> = (0..3).collect();
            perm.shuffle(&mut rng);
            let signs: Vec<i8> = (0..3).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
            let pi = SignedPermutation::new(perm, signs).unwrap();
            let product = s.to_dense() * pi.to_matrix();
            for v in product.iter() {
                prop_assert!((v.abs() - 1.0).abs() < 1e-12);
            }
            // The matcher recovers exactly this transformation: the
            // columns of a Schur-independent matrix are distinct up to
            // sign, so the match is unique.
            let s2 = SignMatrix::from_dense(&product, 1e-9).unwrap();
            prop_assert_eq!(match_signed_permutation(&s, &s2).unwrap(), pi);
        }

        #[test]
        fn prop_permutations_preserve_the_binary_alphabet(
            seed in any::<u64>(),
            pseed in any::<u64>(),
        ) {
            let z = random_schur_binary(8, 3, seed).unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(pseed);
            let mut perm: Vec<usize> = (0..3).collect();
            perm.shuffle(&mut rng);
            let pi = SignedPermutation::new(perm.clone(), vec![1; 3]).unwrap();
            let product = z.to_dense() * pi.to_matrix();
            for v in product.iter() {
                prop_assert!(v.abs() < 1e-12 || (v - 1.0).abs() < 1e-12);
            }
            let z2 = BinaryMatrix::from_dense(&product, 1e-9).unwrap();
            prop_assert_eq!(match_permutation(&z, &z2).unwrap(), perm);
        }

        #[test]
        fn prop_general_mixing_leaves_the_sign_alphabet(
            seed in any::<u64>(),
            entries in proptest::collection::vec(-2i64..=2, 9),
        ) {
            let q: Vec<Vec<i64>> = (0..3).map(|i| entries[3 * i..3 * i + 3].to_vec()).collect();
            prop_assume!(int_det(&q) != 0);
            prop_assume!(!is_signed_permutation_matrix(&q));
            let s = random_schur_sign(8, 3, seed).unwrap();
            // S·Q in exact integer arithmetic: an invertible mix that is
            // not a signed permutation always leaves the ±1 alphabet.
            let mut off_alphabet = false;
            for i in 0..8 {
                for j in 0..3 {
                    let v: i64 = (0..3).map(|k| i64::from(s.get(i, k)) * q[k][j]).sum();
                    if v != 1 && v != -1 {
                        off_alphabet = true;
                    }
                }
            }
            prop_assert!(off_alphabet);
        }

        #[test]
        fn prop_general_mixing_leaves_the_binary_alphabet(
            seed in any::<u64>(),
            entries in proptest::collection::vec(-2i64..=2, 9),
        ) {
            let q: Vec<Vec<i64>> = (0..3).map(|i| entries[3 * i..3 * i + 3].to_vec()).collect();
            prop_assume!(int_det(&q) != 0);
            prop_assume!(!is_permutation_matrix(&q));
            let z = random_schur_binary(8, 3, seed).unwrap();
            let mut off_alphabet = false;
            for i in 0..8 {
                for j in 0..3 {
                    let v: i64 = (0..3).map(|k| i64::from(z.get(i, k)) * q[k][j]).sum();
                    if v != 0 && v != 1 {
                        off_alphabet = true;
                    }
                }
            }
            prop_assert!(off_alphabet);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]

        #[test]
        fn prop_sign_decompositions_reconstruct_and_match(
            n in 8usize..=12,
            r in 2usize..=3,
            m in 5usize..=8,
            gen_seed in any::<u64>(),
            run_seed in any::<u64>(),
        ) {
            let s = random_schur_sign(n, r, gen_seed).unwrap();
            let w = gaussian(m, r, gen_seed ^ 0x9e37_79b9_7f4a_7c15);
            let b = s.to_dense() * w.transpose();
            let tol = Tolerances::default();
            let out = asym_scd(&b, &tol, run_seed).unwrap();
            let residual = (out.s.to_dense() * out.w.transpose() - &b).norm();
            prop_assert!(residual <= tol.residual_rel * (1.0 + b.norm()));
            prop_assert!(match_signed_permutation(&s, &out.s).is_some());
        }
    }
}
