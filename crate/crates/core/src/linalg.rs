//! Dense complex linear algebra: SVD, thin QR, rank-r projection and its
//! Moore–Penrose inverse, numerical rank, and subspace distance.
//!
//! The SVD and QR kernels are backed by `nalgebra`; everything layered on
//! top of them (projections, pseudoinverse application, rank decisions)
//! lives here.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense matrix of complex scalars, row-major in its public surface.
///
/// Construction from data validates that every entry is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries. Rejects empty shapes,
    /// length mismatches and non-finite entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "matrix entries",
                expected: rows * cols,
                got: entries.len(),
            });
        }
        for (idx, z) in entries.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFiniteEntry {
                    row: idx / cols,
                    col: idx % cols,
                });
            }
        }
        Ok(Self {
            inner: DMatrix::from_row_slice(rows, cols, &entries),
        })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::EmptyMatrix);
        }
        let cols = rows[0].len();
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::MatrixParse {
                    line: i + 1,
                    msg: format!("expected {} entries, got {}", cols, r.len()),
                });
            }
            entries.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, entries)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            inner: DMatrix::zeros(rows, cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: DMatrix::identity(n, n),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self {
            inner: DMatrix::from_fn(rows, cols, &mut f),
        }
    }

    /// Diagonal matrix from real values.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                Complex64::ZERO
            }
        })
    }

    pub(crate) fn from_dmatrix(inner: DMatrix<Complex64>) -> Self {
        Self { inner }
    }

    pub(crate) fn as_dmatrix(&self) -> &DMatrix<Complex64> {
        &self.inner
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.inner[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.inner[(i, j)] = v;
    }

    pub fn row_major(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.inner[(i, j)]);
            }
        }
        out
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        self.inner.column(j).iter().copied().collect()
    }

    /// Columns `lo..hi` as a new matrix.
    pub fn columns(&self, lo: usize, hi: usize) -> Self {
        Self::from_dmatrix(self.inner.columns(lo, hi - lo).into_owned())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_dmatrix(self.inner.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self::from_dmatrix(self.inner.transpose())
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        Self::from_dmatrix(&self.inner * &rhs.inner)
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols(), "mul_vec dimension");
        let x = nalgebra::DVector::from_column_slice(v);
        (&self.inner * x).iter().copied().collect()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self::from_dmatrix(&self.inner + &rhs.inner)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Self::from_dmatrix(&self.inner - &rhs.inner)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_dmatrix(self.inner.map(|z| z * s))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.norm()
    }

    /// Spectral norm, i.e. the largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        if self.rows() == 0 || self.cols() == 0 {
            return 0.0;
        }
        self.inner
            .clone()
            .singular_values()
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.inner
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

// ── 2-norm vector helpers used across the crate ─────────────────────

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_sub(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn vec_add(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn vec_scale(a: &[Complex64], s: Complex64) -> Vec<Complex64> {
    a.iter().map(|x| x * s).collect()
}

pub fn vec_is_finite(v: &[Complex64]) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

// ── SVD and the rank-r projection ────────────────────────────────────

/// Thin singular value decomposition `A = U Σ V^H`.
///
/// `u` is m×p and `v` is n×p with p = min(m, n); `sigma` is sorted
/// non-increasing.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: ComplexMatrix,
    pub sigma: Vec<f64>,
    pub v: ComplexMatrix,
}

/// Computes the thin SVD. Fails explicitly if the kernel does not
/// converge; never returns silent garbage.
pub fn svd(a: &ComplexMatrix) -> Result<SvdFactors> {
    let m = a.rows();
    let n = a.cols();
    let p = m.min(n);
    // Matches the tolerance nalgebra's own `svd()` uses; a tighter eps
    // derails convergence on rank-deficient inputs. The iteration budget
    // turns non-convergence into an explicit failure.
    let svd = nalgebra::linalg::SVD::try_new(
        a.inner.clone(),
        true,
        true,
        5.0 * f64::EPSILON,
        100_000,
    )
    .ok_or(Error::SvdFailed)?;
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    let u = svd.u.ok_or(Error::SvdFailed)?;
    let v_t = svd.v_t.ok_or(Error::SvdFailed)?;
    // nalgebra sorts descending already; sort defensively to pin the invariant.
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap());
    let sigma_sorted: Vec<f64> = order.iter().map(|&i| sigma[i]).collect();
    if sigma_sorted.iter().any(|s| !s.is_finite()) {
        return Err(Error::SvdFailed);
    }
    let u_sorted = DMatrix::from_fn(m, p, |i, j| u[(i, order[j])]);
    let v = v_t.adjoint();
    let v_sorted = DMatrix::from_fn(n, p, |i, j| v[(i, order[j])]);
    Ok(SvdFactors {
        u: ComplexMatrix::from_dmatrix(u_sorted),
        sigma: sigma_sorted,
        v: ComplexMatrix::from_dmatrix(v_sorted),
    })
}

/// The rank-r projection of a matrix: the nearest rank-r matrix in
/// Frobenius norm, kept in factored form `U_r Σ_r V_r^H` together with
/// the spectral gap σ_r / σ_{r+1}.
#[derive(Debug, Clone)]
pub struct RankRProjection {
    u_r: ComplexMatrix,
    sigma_r: Vec<f64>,
    v_r: ComplexMatrix,
    gap: f64,
    full_v: ComplexMatrix,
    codomain_dim: usize,
    domain_dim: usize,
}

/// Threshold under which the spectral gap σ_r/σ_{r+1} is flagged as a
/// near-tie at the projection rank.
pub const GAP_WARN_THRESHOLD: f64 = 10.0;

pub fn rank_r_project(a: &ComplexMatrix, r: usize) -> Result<RankRProjection> {
    let f = svd(a)?;
    rank_r_from_svd(&f, r, a.rows(), a.cols())
}

pub fn rank_r_from_svd(
    f: &SvdFactors,
    r: usize,
    rows: usize,
    cols: usize,
) -> Result<RankRProjection> {
    let p = rows.min(cols);
    if r == 0 || r > p {
        return Err(Error::InvalidRank { rank: r, rows, cols });
    }
    if f.sigma[r - 1] <= 0.0 {
        return Err(Error::RankDeficient { requested: r });
    }
    let gap = if r == p || f.sigma[r] == 0.0 {
        f64::INFINITY
    } else {
        f.sigma[r - 1] / f.sigma[r]
    };
    Ok(RankRProjection {
        u_r: f.u.columns(0, r),
        sigma_r: f.sigma[..r].to_vec(),
        v_r: f.v.columns(0, r),
        gap,
        full_v: f.v.clone(),
        codomain_dim: rows,
        domain_dim: cols,
    })
}

impl RankRProjection {
    pub fn rank(&self) -> usize {
        self.sigma_r.len()
    }

    /// σ_r / σ_{r+1}; infinite when r equals min(m, n) or σ_{r+1} = 0.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma_r
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_r[0]
    }

    pub fn sigma_min(&self) -> f64 {
        *self.sigma_r.last().unwrap()
    }

    pub fn left_factor(&self) -> &ComplexMatrix {
        &self.u_r
    }

    pub fn right_factor(&self) -> &ComplexMatrix {
        &self.v_r
    }

    pub fn domain_dim(&self) -> usize {
        self.domain_dim
    }

    pub fn codomain_dim(&self) -> usize {
        self.codomain_dim
    }

    /// Applies the projected matrix: `A_r x = U_r Σ_r V_r^H x`.
    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.domain_dim {
            return Err(Error::DimensionMismatch {
                context: "rank-r apply",
                expected: self.domain_dim,
                got: x.len(),
            });
        }
        let mut t = self.v_r.adjoint().mul_vec(x);
        for (i, s) in self.sigma_r.iter().enumerate() {
            t[i] *= Complex64::new(*s, 0.0);
        }
        Ok(self.u_r.mul_vec(&t))
    }

    /// Applies the Moore–Penrose inverse of the projection:
    /// `A_r^† w = V_r Σ_r^{-1} U_r^H w`, without forming the
    /// pseudoinverse matrix.
    pub fn pinv_apply(&self, w: &[Complex64]) -> Result<Vec<Complex64>> {
        if w.len() != self.codomain_dim {
            return Err(Error::DimensionMismatch {
                context: "pinv apply",
                expected: self.codomain_dim,
                got: w.len(),
            });
        }
        let mut t = self.u_r.adjoint().mul_vec(w);
        for (i, s) in self.sigma_r.iter().enumerate() {
            t[i] /= Complex64::new(*s, 0.0);
        }
        Ok(self.v_r.mul_vec(&t))
    }

    /// Materializes `A_r` as an explicit matrix.
    pub fn materialize(&self) -> ComplexMatrix {
        let r = self.rank();
        let mut scaled = self.u_r.clone();
        for j in 0..r {
            for i in 0..scaled.rows() {
                let v = scaled.get(i, j) * Complex64::new(self.sigma_r[j], 0.0);
                scaled.set(i, j, v);
            }
        }
        scaled.matmul(&self.v_r.adjoint())
    }

    /// Materializes `A_r^†` explicitly (only on request).
    pub fn pinv_materialize(&self) -> ComplexMatrix {
        let r = self.rank();
        let mut scaled = self.v_r.clone();
        for j in 0..r {
            for i in 0..scaled.rows() {
                let v = scaled.get(i, j) / Complex64::new(self.sigma_r[j], 0.0);
                scaled.set(i, j, v);
            }
        }
        scaled.matmul(&self.u_r.adjoint())
    }

    /// Orthonormal basis of `Kernel(A_r)`: the trailing right singular
    /// vectors, completed to the full orthogonal complement when the
    /// matrix is wider than tall. May have zero columns.
    pub fn kernel_basis(&self) -> ComplexMatrix {
        let n = self.domain_dim;
        let p = self.full_v.cols();
        let r = self.rank();
        let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(n - r);
        for j in r..p {
            cols.push(self.full_v.column(j));
        }
        if p < n {
            let completion = orthonormal_complement(&self.full_v);
            for j in 0..completion.cols() {
                cols.push(completion.column(j));
            }
        }
        let mut m = ComplexMatrix::zeros(n, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for (i, z) in c.iter().enumerate() {
                m.set(i, j, *z);
            }
        }
        m
    }
}

/// Largest r with σ_r > θ (θ is an absolute spectral tolerance). By the
/// Eckart–Young bound this is the smallest rank among matrices within θ
/// of `a` in spectral norm.
pub fn numerical_rank(a: &ComplexMatrix, theta: f64) -> Result<usize> {
    let f = svd(a)?;
    Ok(f.sigma.iter().filter(|&&s| s > theta).count())
}

/// Distance between equal-dimension subspaces spanned by orthonormal
/// bases: `|| B1 B1^H - B2 B2^H ||_2`, the sine of the largest principal
/// angle.
pub fn subspace_distance(b1: &ComplexMatrix, b2: &ComplexMatrix) -> Result<f64> {
    if b1.cols() != b2.cols() {
        return Err(Error::SubspaceDimMismatch {
            left: b1.cols(),
            right: b2.cols(),
        });
    }
    if b1.rows() != b2.rows() {
        return Err(Error::DimensionMismatch {
            context: "subspace ambient dimension",
            expected: b1.rows(),
            got: b2.rows(),
        });
    }
    let p1 = b1.matmul(&b1.adjoint());
    let p2 = b2.matmul(&b2.adjoint());
    Ok(p1.sub(&p2).spectral_norm())
}

/// Thin QR factorization `A = Q R` with Q m×k orthonormal and R k×k
/// upper-triangular, for full column rank inputs. A numerically
/// dependent column is reported by index.
pub fn thin_qr(a: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let k = a.cols();
    if a.rows() < k {
        return Err(Error::DimensionMismatch {
            context: "thin QR (needs rows >= cols)",
            expected: k,
            got: a.rows(),
        });
    }
    let qr = a.inner.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let tol = 1e-12 * a.frobenius_norm().max(f64::MIN_POSITIVE);
    for j in 0..k {
        if r[(j, j)].norm() <= tol {
            return Err(Error::QrRankDeficient { col: j });
        }
    }
    Ok((
        ComplexMatrix::from_dmatrix(q),
        ComplexMatrix::from_dmatrix(r),
    ))
}

/// Orthonormal basis of the orthogonal complement of the column span of
/// `basis` (whose columns must be orthonormal). Modified Gram–Schmidt
/// with one reorthogonalization pass over the standard basis.
pub fn orthonormal_complement(basis: &ComplexMatrix) -> ComplexMatrix {
    let n = basis.rows();
    let r = basis.cols();
    let ortho: Vec<Vec<Complex64>> = (0..r).map(|j| basis.column(j)).collect();
    let mut complement: Vec<Vec<Complex64>> = Vec::with_capacity(n - r);
    for i in 0..n {
        if complement.len() == n - r {
            break;
        }
        let mut v = vec![Complex64::ZERO; n];
        v[i] = Complex64::ONE;
        for _ in 0..2 {
            for q in ortho.iter().chain(complement.iter()) {
                let proj: Complex64 = q.iter().zip(&v).map(|(qi, vi)| qi.conj() * vi).sum();
                for (vk, qk) in v.iter_mut().zip(q) {
                    *vk -= proj * qk;
                }
            }
        }
        let norm = vec_norm(&v);
        if norm > 1e-8 {
            complement.push(vec_scale(&v, Complex64::new(1.0 / norm, 0.0)));
        }
    }
    assert_eq!(
        complement.len(),
        n - r,
        "orthonormal complement dimension defect"
    );
    let mut m = ComplexMatrix::zeros(n, n - r);
    for (j, c) in complement.iter().enumerate() {
        for (i, z) in c.iter().enumerate() {
            m.set(i, j, *z);
        }
    }
    m
}

// ── Text format: one row per line, entries a, a+bi, a-bi, bi ─────────

/// Parses a single complex entry: `a`, `a+bi`, `a-bi`, or `bi` with
/// decimal literals (a bare `i` is read as `1i`).
pub fn parse_complex(token: &str) -> Result<Complex64> {
    let t = token.trim();
    let err = || Error::ComplexParse {
        text: token.to_string(),
    };
    if t.is_empty() {
        return Err(err());
    }
    if let Some(body) = t.strip_suffix(['i', 'I']) {
        // Split a trailing imaginary part from an optional real part:
        // scan for a sign that is not the leading sign and not part of
        // an exponent.
        let bytes = body.as_bytes();
        let mut split = None;
        for idx in (1..bytes.len()).rev() {
            let c = bytes[idx] as char;
            if (c == '+' || c == '-')
                && !matches!(bytes[idx - 1] as char, 'e' | 'E')
            {
                split = Some(idx);
                break;
            }
        }
        match split {
            Some(idx) => {
                let re: f64 = body[..idx].trim().parse().map_err(|_| err())?;
                let im_str = body[idx..].trim();
                let im = parse_signed_or_unit(im_str).ok_or_else(err)?;
                Ok(Complex64::new(re, im))
            }
            None => {
                let im = parse_signed_or_unit(body.trim()).ok_or_else(err)?;
                Ok(Complex64::new(0.0, im))
            }
        }
    } else {
        let re: f64 = t.parse().map_err(|_| err())?;
        Ok(Complex64::new(re, 0.0))
    }
}

fn parse_signed_or_unit(s: &str) -> Option<f64> {
    match s {
        "" | "+" => Some(1.0),
        "-" => Some(-1.0),
        _ => s.parse().ok(),
    }
}

/// Parses a comma-separated list of complex entries.
pub fn parse_complex_vector(text: &str) -> Result<Vec<Complex64>> {
    text.split(',').map(parse_complex).collect()
}

impl ComplexMatrix {
    /// Parses the shared text format: one row per line, whitespace
    /// separated entries.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<Complex64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut row = Vec::new();
            for tok in line.split_whitespace() {
                row.push(parse_complex(tok).map_err(|_| Error::MatrixParse {
                    line: lineno + 1,
                    msg: format!("bad entry `{}`", tok),
                })?);
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        Self::from_rows(&rows)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.rows() {
            let row: Vec<String> = (0..self.cols())
                .map(|j| crate::cfmt::format_complex(self.get(i, j)))
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}
