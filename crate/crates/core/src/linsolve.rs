//! Singular and rank-deficient linear systems.
//!
//! The general solution of a consistent system `A x = b` is an affine
//! subspace `A^† b + Kernel(A)`. From empirical data the one-step
//! rank-r Newton iteration produces
//! `x = A_r^† b + (I - A_r^† A_r) x0`, the approximation of the exact
//! solution nearest to `x0`, together with an orthonormal kernel basis
//! and diagnostic error bounds.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    numerical_rank, rank_r_project, vec_add, vec_norm, vec_sub, ComplexMatrix,
};
use crate::mapping::{MappingHandle, Point};

/// How the projection rank of the data matrix is chosen.
#[derive(Debug, Clone, Copy)]
pub enum RankSpec {
    /// Explicit rank. Wins over a tolerance when a caller knows r
    /// analytically.
    Explicit(usize),
    /// Numerical rank at an absolute spectral tolerance θ: the smallest
    /// rank among matrices within θ of the data.
    Tolerance(f64),
}

/// The computed general solution of a (possibly singular) linear
/// system.
#[derive(Debug, Clone)]
pub struct AffineSolution {
    /// The particular solution `A_r^† b + (I - A_r^† A_r) x0`.
    pub particular: Vec<Complex64>,
    /// Orthonormal basis of `Kernel(A_r)`; zero columns when the rank is
    /// full.
    pub kernel_basis: ComplexMatrix,
    pub rank_used: usize,
    /// `1/σ_r`, the norm of the pseudoinverse actually applied.
    pub condition: f64,
    /// `|A x - b|` against the full data matrix.
    pub residual: f64,
}

impl AffineSolution {
    pub fn kernel_dim(&self) -> usize {
        self.kernel_basis.cols()
    }
}

/// Solves `A x = b` at a prescribed rank or tolerance, returning the
/// solution of the underlying rank-r system nearest to `x0`.
///
/// A right-hand side outside the range of `A_r` is projected onto it
/// (the residual reports the defect). Rank 0 is an error: for
/// homogeneous systems the solution set is trivially everything, and
/// otherwise nothing of the data survives the tolerance.
pub fn general_solve(
    a: &ComplexMatrix,
    b: &[Complex64],
    rank: RankSpec,
    x0: &[Complex64],
) -> Result<AffineSolution> {
    let m = a.rows();
    let n = a.cols();
    if b.len() != m {
        return Err(Error::DimensionMismatch {
            context: "right-hand side",
            expected: m,
            got: b.len(),
        });
    }
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            context: "initial point",
            expected: n,
            got: x0.len(),
        });
    }
    let r = match rank {
        RankSpec::Explicit(r) => r,
        RankSpec::Tolerance(theta) => {
            if theta < 0.0 {
                return Err(Error::InvalidOption("tolerance must be >= 0".into()));
            }
            numerical_rank(a, theta)?
        }
    };
    if r == 0 {
        return Err(Error::ZeroRank {
            homogeneous: vec_norm(b) == 0.0,
        });
    }
    let proj = rank_r_project(a, r)?;
    let pinv_b = proj.pinv_apply(b)?;
    let projected_x0 = proj.pinv_apply(&proj.apply(x0)?)?;
    let particular = vec_add(&pinv_b, &vec_sub(x0, &projected_x0));
    let residual = vec_norm(&vec_sub(&a.mul_vec(&particular), b));
    Ok(AffineSolution {
        particular,
        kernel_basis: proj.kernel_basis(),
        rank_used: r,
        condition: 1.0 / proj.sigma_min(),
        residual,
    })
}

/// General solution of a linear operator equation, expressed back in
/// structured coordinates.
#[derive(Debug, Clone)]
pub struct OperatorSolution {
    pub flat: AffineSolution,
    pub particular: Point,
    pub kernel: Vec<Point>,
    /// The matrix of the operator in the layout bases.
    pub matrix: ComplexMatrix,
}

/// Solves `L(x) = b` for a linear mapping given as a handle: verifies
/// linearity on random probes, builds the matrix of `L` through the
/// layouts, and delegates to [`general_solve`].
pub fn operator_solve(
    l: &MappingHandle,
    b: &Point,
    theta: f64,
    x0: &Point,
) -> Result<OperatorSolution> {
    let n = l.domain_dim();
    let b_flat = l.codomain().embed(b)?;
    let x0_flat = l.domain().embed(x0)?;

    // Linearity spot check on fixed-seed random probes.
    let mut rng = ChaCha8Rng::seed_from_u64(0x11EA51);
    for _ in 0..2 {
        let u: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let v: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let lu = l.eval_flat(&u)?;
        let lv = l.eval_flat(&v)?;
        let luv = l.eval_flat(&vec_add(&u, &v))?;
        let defect = vec_norm(&vec_sub(&luv, &vec_add(&lu, &lv)));
        let scale = vec_norm(&lu).max(vec_norm(&lv)).max(1.0);
        if defect > 1e-10 * scale {
            return Err(Error::NotLinear {
                defect: defect / scale,
            });
        }
    }

    let matrix = operator_matrix(l)?;
    let flat = general_solve(&matrix, &b_flat, RankSpec::Tolerance(theta), &x0_flat)?;
    let particular = l.domain().extract(&flat.particular)?;
    let kernel = (0..flat.kernel_basis.cols())
        .map(|j| l.domain().extract(&flat.kernel_basis.column(j)))
        .collect::<Result<Vec<_>>>()?;
    Ok(OperatorSolution {
        flat,
        particular,
        kernel,
        matrix,
    })
}

/// Matrix of a linear mapping in the layout bases, built column by
/// column.
pub fn operator_matrix(l: &MappingHandle) -> Result<ComplexMatrix> {
    let n = l.domain_dim();
    let m = l.codomain_dim();
    let mut mat = ComplexMatrix::zeros(m, n);
    for j in 0..n {
        let mut e = vec![Complex64::ZERO; n];
        e[j] = Complex64::ONE;
        let col = l.eval_flat(&e)?;
        for i in 0..m {
            mat.set(i, j, col[i]);
        }
    }
    Ok(mat)
}

/// Diagnostic evaluation of the solution error bounds, with computed
/// norms substituting exact ones.
#[derive(Debug, Clone)]
pub struct ErrorBoundReport {
    /// The data perturbation breaks the hypothesis
    /// `|ΔA| < 0.46 / |A^†|`; no bound is defined.
    pub perturbation_too_large: bool,
    /// Relative bound on any backward accurate solution of the data
    /// system against the underlying exact system. `None` for
    /// homogeneous right-hand sides or when the hypothesis fails.
    pub backward_solution_bound: Option<f64>,
    /// Bound on both the particular-solution error and the kernel
    /// distance of the general-solution representation.
    pub general_solution_bound: Option<f64>,
    /// σ_1 of the data matrix.
    pub operator_norm: f64,
    /// 1/σ_r: the computed pseudoinverse norm.
    pub pinv_norm: f64,
}

/// Evaluates the error-bound right-hand sides for a computed solution,
/// given caller-supplied estimates of the data errors `|ΔA|` and `|Δb|`.
/// These are diagnostics, not guarantees: exact norms are replaced by
/// computed ones.
pub fn error_bound_report(
    a: &ComplexMatrix,
    b: &[Complex64],
    solution: &AffineSolution,
    delta_a: f64,
    delta_b: f64,
) -> Result<ErrorBoundReport> {
    if delta_a < 0.0 || delta_b < 0.0 {
        return Err(Error::InvalidOption(
            "data error magnitudes must be >= 0".into(),
        ));
    }
    let proj = rank_r_project(a, solution.rank_used)?;
    let op_norm = proj.sigma_max();
    let pinv_norm = 1.0 / proj.sigma_min();

    // Hypothesis of the bounds; 1 - |A^†||ΔA| stays positive under it.
    if delta_a * pinv_norm >= 0.46 {
        return Ok(ErrorBoundReport {
            perturbation_too_large: true,
            backward_solution_bound: None,
            general_solution_bound: None,
            operator_norm: op_norm,
            pinv_norm,
        });
    }

    let b_norm = vec_norm(b);
    let backward_solution_bound = if b_norm > 0.0 {
        let kappa = op_norm * pinv_norm;
        let denom = 1.0 - pinv_norm * delta_a;
        // |Δb + e| <= |Δb| + |e| with e the computed residual.
        let rhs = 2.0 * 2.0f64.sqrt() * delta_a / op_norm
            + (delta_b + solution.residual) / b_norm;
        Some(kappa / denom * rhs)
    } else {
        None
    };

    let pinv_b_norm = vec_norm(&proj.pinv_apply(b)?);
    let data_err = (delta_a * delta_a + delta_b * delta_b).sqrt();
    let denom = op_norm - op_norm * pinv_norm * delta_a;
    let general_solution_bound = Some(
        op_norm * pinv_norm * (4.0 * pinv_b_norm * pinv_b_norm + 1.0).sqrt() / denom * data_err,
    );

    Ok(ErrorBoundReport {
        perturbation_too_large: false,
        backward_solution_bound,
        general_solution_bound,
        operator_norm: op_norm,
        pinv_norm,
    })
}
