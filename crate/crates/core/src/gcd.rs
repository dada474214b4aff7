//! Numerical greatest common divisor of a polynomial pair.
//!
//! The GCD of `(p, q)` with `deg(gcd) = k` solves
//! `(u v - p, u w - q) = (0, 0)` over `P_k x P_{m-k} x P_{n-k}`. The
//! solution set is the one-dimensional scaling family
//! `(t u, v/t, w/t)`, so the Jacobian rank at a solution is
//! `m + n - k + 2` and the rank-r Newton iteration converges to a
//! stationary triple even when the data pair has no nontrivial GCD at
//! all.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, svd, ComplexMatrix};
use crate::mapping::{LayoutComponent, MappingHandle, Point, Value, VectorSpaceLayout};
use crate::newton::{rank_r_newton, IterationTrace, NewtonOptions};
use crate::poly::{MonomialSupport, SparsePoly};

/// A GCD candidate with its cofactors: `u` approximates a constant
/// multiple of the GCD, `v` and `w` the cofactors `p/u` and `q/u`.
#[derive(Debug, Clone)]
pub struct GcdTriple {
    pub u: SparsePoly,
    pub v: SparsePoly,
    pub w: SparsePoly,
    /// `1/σ_r` of the GCD-equation Jacobian at this triple.
    pub condition: f64,
    /// `|(u v - p, u w - q)|`.
    pub residual: f64,
}

impl GcdTriple {
    /// Canonical representative on the scaling family: `|u| = 1` with a
    /// positive real leading coefficient; `v` and `w` absorb the scale.
    pub fn gauge_normalized(&self) -> Result<GcdTriple> {
        let norm = self.u.norm();
        if norm == 0.0 {
            return Err(Error::ZeroFactor);
        }
        let lead = self
            .u
            .leading()
            .map(|(_, c)| *c)
            .unwrap_or(Complex64::ONE);
        let phase = lead / lead.norm();
        let t = phase * Complex64::new(norm, 0.0);
        Ok(GcdTriple {
            u: self.u.scale(Complex64::ONE / t),
            v: self.v.scale(t),
            w: self.w.scale(t),
            condition: self.condition,
            residual: self.residual,
        })
    }
}

fn univariate_coeffs(p: &SparsePoly, deg: u32) -> Vec<Complex64> {
    let mut out = vec![Complex64::ZERO; deg as usize + 1];
    for (m, c) in p.terms() {
        out[m.0[0] as usize] = *c;
    }
    out
}

fn check_univariate(p: &SparsePoly, name: &'static str) -> Result<()> {
    if p.num_vars() != 1 {
        return Err(Error::InvalidOption(format!(
            "{name} must be univariate (got {} variables)",
            p.num_vars()
        )));
    }
    if p.is_zero() {
        return Err(Error::InvalidOption(format!("{name} must be nonzero")));
    }
    Ok(())
}

/// Convolution matrix of `p`: the matrix of `a -> p*a` from
/// coefficients of `P_{cols-1}` into `P_{deg p + cols - 1}`.
fn convolution_matrix(p: &[Complex64], cols: usize) -> ComplexMatrix {
    let rows = p.len() + cols - 1;
    ComplexMatrix::from_fn(rows, cols, |i, j| {
        if i >= j && i - j < p.len() {
            p[i - j]
        } else {
            Complex64::ZERO
        }
    })
}

/// Sylvester matrix of the pair: `[C_{n-1}(p) | C_{m-1}(q)]`, whose
/// rank defect equals the GCD degree.
pub fn sylvester_matrix(p: &SparsePoly, q: &SparsePoly) -> Result<ComplexMatrix> {
    check_univariate(p, "p")?;
    check_univariate(q, "q")?;
    let m = p.degree() as usize;
    let n = q.degree() as usize;
    if m == 0 || n == 0 {
        return Err(Error::InvalidOption(
            "Sylvester matrix needs degrees >= 1".into(),
        ));
    }
    let pc = univariate_coeffs(p, m as u32);
    let qc = univariate_coeffs(q, n as u32);
    let cp = convolution_matrix(&pc, n);
    let cq = convolution_matrix(&qc, m);
    Ok(ComplexMatrix::from_fn(m + n, m + n, |i, j| {
        if j < n {
            cp.get(i, j)
        } else {
            cq.get(i, j - n)
        }
    }))
}

/// Estimates the GCD degree as `m + n - rank(S(p, q))` with the
/// numerical rank taken at tolerance θ (`None` selects `1e-8 σ_1`).
pub fn gcd_degree_estimate(p: &SparsePoly, q: &SparsePoly, theta: Option<f64>) -> Result<usize> {
    check_univariate(p, "p")?;
    check_univariate(q, "q")?;
    let m = p.degree() as usize;
    let n = q.degree() as usize;
    if m == 0 || n == 0 {
        return Ok(0);
    }
    let s = sylvester_matrix(p, q)?;
    let theta = match theta {
        Some(t) => t,
        None => 1e-8 * s.spectral_norm(),
    };
    let rank = numerical_rank(&s, theta)?;
    Ok(m + n - rank)
}

/// Builds a rough triple for the given GCD degree: the cofactors come
/// from the trailing right singular vector of the order-k
/// subresultant-style matrix `[C_{n-k}(p) | C_{m-k}(q)]`, and `u` from
/// linear least squares on `u*v ≈ p`, `u*w ≈ q`.
pub fn gcd_initialize(p: &SparsePoly, q: &SparsePoly, k: usize) -> Result<GcdTriple> {
    check_univariate(p, "p")?;
    check_univariate(q, "q")?;
    let var = p.vars()[0].clone();
    let m = p.degree() as usize;
    let n = q.degree() as usize;
    if k > m.min(n) {
        return Err(Error::InvalidOption(format!(
            "GCD degree {k} exceeds min degree {}",
            m.min(n)
        )));
    }

    let (v0, w0) = if k == 0 {
        // Coprime pair: u is the constant 1, cofactors are the data.
        (p.clone(), q.clone())
    } else {
        let pc = univariate_coeffs(p, m as u32);
        let qc = univariate_coeffs(q, n as u32);
        // [C_{n-k}(p) | C_{m-k}(q)] (a; b) = p*alpha + q*beta; at the
        // exact GCD degree the null vector is (w, -v).
        let cp = convolution_matrix(&pc, n - k + 1);
        let cq = convolution_matrix(&qc, m - k + 1);
        let rows = m + n - k + 1;
        let cols = (n - k + 1) + (m - k + 1);
        let s = ComplexMatrix::from_fn(rows, cols, |i, j| {
            if j < n - k + 1 {
                cp.get(i, j)
            } else {
                cq.get(i, j - (n - k + 1))
            }
        });
        let f = svd(&s)?;
        let null = f.v.column(cols - 1);
        let w_coeffs = &null[..n - k + 1];
        let v_coeffs: Vec<Complex64> = null[n - k + 1..].iter().map(|z| -z).collect();
        let sup_v = MonomialSupport::dense_univariate(&var, (m - k) as u32);
        let sup_w = MonomialSupport::dense_univariate(&var, (n - k) as u32);
        let v0 = sup_v.extract(&v_coeffs)?;
        let w0 = sup_w.extract(w_coeffs)?;
        // Deficient-degree null vectors signal a wrong k.
        if v_coeffs[m - k].norm() <= 1e-8 * crate::linalg::vec_norm(&v_coeffs) {
            return Err(Error::DegenerateNullVector { which: "v" });
        }
        if w_coeffs[n - k].norm() <= 1e-8 * crate::linalg::vec_norm(w_coeffs) {
            return Err(Error::DegenerateNullVector { which: "w" });
        }
        (v0, w0)
    };

    // u from least squares: stack multiplication-by-v0 and -by-w0.
    let u0 = if k == 0 {
        SparsePoly::constant(&[var.clone()], Complex64::ONE)
    } else {
        let vc = univariate_coeffs(&v0, (m - k) as u32);
        let wc = univariate_coeffs(&w0, (n - k) as u32);
        let mv = convolution_matrix(&vc, k + 1); // (m+1) x (k+1)
        let mw = convolution_matrix(&wc, k + 1); // (n+1) x (k+1)
        let stacked = ComplexMatrix::from_fn(m + n + 2, k + 1, |i, j| {
            if i <= m {
                mv.get(i, j)
            } else {
                mw.get(i - m - 1, j)
            }
        });
        let mut rhs = univariate_coeffs(p, m as u32);
        rhs.extend(univariate_coeffs(q, n as u32));
        let proj = crate::linalg::rank_r_project(&stacked, k + 1)?;
        let uc = proj.pinv_apply(&rhs)?;
        MonomialSupport::dense_univariate(&var, k as u32).extract(&uc)?
    };

    let residual = gcd_residual(&u0, &v0, &w0, p, q);
    let mapping = gcd_mapping(p, q, k)?;
    let point = triple_point(&u0, &v0, &w0);
    let r = m + n - k + 2;
    let condition = crate::newton::condition_estimate(&mapping, &point, r)?;
    Ok(GcdTriple {
        u: u0,
        v: v0,
        w: w0,
        condition,
        residual,
    })
}

fn gcd_residual(u: &SparsePoly, v: &SparsePoly, w: &SparsePoly, p: &SparsePoly, q: &SparsePoly) -> f64 {
    let r1 = u.mul(v).sub(p).norm();
    let r2 = u.mul(w).sub(q).norm();
    (r1 * r1 + r2 * r2).sqrt()
}

fn triple_point(u: &SparsePoly, v: &SparsePoly, w: &SparsePoly) -> Point {
    Point(vec![
        Value::Poly(u.clone()),
        Value::Poly(v.clone()),
        Value::Poly(w.clone()),
    ])
}

/// The GCD-equation mapping `(u, v, w) -> (u v - p, u w - q)` over
/// dense univariate coefficient spaces.
fn gcd_mapping(p: &SparsePoly, q: &SparsePoly, k: usize) -> Result<MappingHandle> {
    let var = p.vars()[0].clone();
    let m = p.degree() as usize;
    let n = q.degree() as usize;
    let sup_u = MonomialSupport::dense_univariate(&var, k as u32);
    let sup_v = MonomialSupport::dense_univariate(&var, (m - k) as u32);
    let sup_w = MonomialSupport::dense_univariate(&var, (n - k) as u32);
    let sup_p = MonomialSupport::dense_univariate(&var, m as u32);
    let sup_q = MonomialSupport::dense_univariate(&var, n as u32);
    gcd_mapping_in_spaces(p, q, &sup_u, &sup_v, &sup_w, &sup_p, &sup_q)
}

/// The same mapping over caller-supplied coefficient spaces (the
/// multivariate case reuses this with fewnomial supports).
fn gcd_mapping_in_spaces(
    p: &SparsePoly,
    q: &SparsePoly,
    sup_u: &MonomialSupport,
    sup_v: &MonomialSupport,
    sup_w: &MonomialSupport,
    sup_p: &MonomialSupport,
    sup_q: &MonomialSupport,
) -> Result<MappingHandle> {
    let domain = VectorSpaceLayout::new(vec![
        LayoutComponent::PolySpace(sup_u.clone()),
        LayoutComponent::PolySpace(sup_v.clone()),
        LayoutComponent::PolySpace(sup_w.clone()),
    ]);
    let codomain = VectorSpaceLayout::new(vec![
        LayoutComponent::PolySpace(sup_p.clone()),
        LayoutComponent::PolySpace(sup_q.clone()),
    ]);
    let (pe, qe) = (p.clone(), q.clone());
    let eval = move |x: &Point| -> Result<Point> {
        let u = x.expect_poly(0)?;
        let v = x.expect_poly(1)?;
        let w = x.expect_poly(2)?;
        Ok(Point(vec![
            Value::Poly(u.mul(v).sub(&pe)),
            Value::Poly(u.mul(w).sub(&qe)),
        ]))
    };
    let (ju, jv, jw) = (sup_u.clone(), sup_v.clone(), sup_w.clone());
    let (jp, jq) = (sup_p.clone(), sup_q.clone());
    let jac = move |x: &Point| -> Result<ComplexMatrix> {
        let u = x.expect_poly(0)?;
        let v = x.expect_poly(1)?;
        let w = x.expect_poly(2)?;
        let rows = jp.dim() + jq.dim();
        let cols = ju.dim() + jv.dim() + jw.dim();
        let mut mat = ComplexMatrix::zeros(rows, cols);
        // d(uv - p) = du*v + u*dv ; d(uw - q) = du*w + u*dw.
        for (j, mu) in ju.monomials().iter().enumerate() {
            let basis = SparsePoly::from_terms(ju.vars(), vec![(mu.clone(), Complex64::ONE)]);
            let top = jp.embed(&basis.mul(v))?;
            let bot = jq.embed(&basis.mul(w))?;
            for (i, z) in top.iter().chain(bot.iter()).enumerate() {
                mat.set(i, j, *z);
            }
        }
        for (j, mv) in jv.monomials().iter().enumerate() {
            let basis = SparsePoly::from_terms(jv.vars(), vec![(mv.clone(), Complex64::ONE)]);
            let top = jp.embed(&basis.mul(u))?;
            for (i, z) in top.iter().enumerate() {
                mat.set(i, ju.dim() + j, *z);
            }
        }
        for (j, mw) in jw.monomials().iter().enumerate() {
            let basis = SparsePoly::from_terms(jw.vars(), vec![(mw.clone(), Complex64::ONE)]);
            let bot = jq.embed(&basis.mul(u))?;
            for (i, z) in bot.iter().enumerate() {
                mat.set(jp.dim() + i, ju.dim() + jv.dim() + j, *z);
            }
        }
        Ok(mat)
    };
    Ok(MappingHandle::new(domain, codomain, eval).with_jacobian(jac))
}

/// Refines a rough triple with the rank-r Newton iteration at
/// `r = m + n - k + 2`. Returns the gauge-normalized stationary triple
/// and the full iteration trace; a rank-gap warning in the trace
/// signals a k inconsistent with the Jacobian.
pub fn gcd_refine(
    p: &SparsePoly,
    q: &SparsePoly,
    triple0: &GcdTriple,
    opts: Option<NewtonOptions>,
) -> Result<(GcdTriple, IterationTrace)> {
    check_univariate(p, "p")?;
    check_univariate(q, "q")?;
    let m = p.degree() as usize;
    let n = q.degree() as usize;
    let k = triple0.u.degree() as usize;
    let r = m + n - k + 2;
    let mapping = gcd_mapping(p, q, k)?;
    let opts = match opts {
        Some(mut o) => {
            o.rank = r;
            o
        }
        None => NewtonOptions::new(r),
    };
    let trace = rank_r_newton(
        &mapping,
        &triple_point(&triple0.u, &triple0.v, &triple0.w),
        &opts,
    )?;
    let u = trace.final_point.expect_poly(0)?.clone();
    let v = trace.final_point.expect_poly(1)?.clone();
    let w = trace.final_point.expect_poly(2)?.clone();
    let triple = GcdTriple {
        residual: gcd_residual(&u, &v, &w, p, q),
        condition: trace.condition,
        u,
        v,
        w,
    }
    .gauge_normalized()?;
    Ok((triple, trace))
}

/// One-call numerical GCD: estimate the degree (unless given), build the
/// rough triple, refine.
pub fn gcd(
    p: &SparsePoly,
    q: &SparsePoly,
    theta: Option<f64>,
    degree: Option<usize>,
    opts: Option<NewtonOptions>,
) -> Result<(GcdTriple, IterationTrace)> {
    let k = match degree {
        Some(k) => k,
        None => gcd_degree_estimate(p, q, theta)?,
    };
    let rough = gcd_initialize(p, q, k)?;
    gcd_refine(p, q, &rough, opts)
}

/// Multivariate refinement in caller-supplied coefficient spaces, with
/// the projection rank one less than the domain dimension. Validated
/// only lightly: the caller owns the choice of supports.
pub fn gcd_refine_in_spaces(
    p: &SparsePoly,
    q: &SparsePoly,
    u0: &SparsePoly,
    v0: &SparsePoly,
    w0: &SparsePoly,
    sup_u: &MonomialSupport,
    sup_v: &MonomialSupport,
    sup_w: &MonomialSupport,
    opts: Option<NewtonOptions>,
) -> Result<(GcdTriple, IterationTrace)> {
    let sup_p = MonomialSupport::product_support(&[(sup_u, 1), (sup_v, 1)])?;
    let sup_q = MonomialSupport::product_support(&[(sup_u, 1), (sup_w, 1)])?;
    sup_p.embed(p)?;
    sup_q.embed(q)?;
    let mapping = gcd_mapping_in_spaces(p, q, sup_u, sup_v, sup_w, &sup_p, &sup_q)?;
    let r = sup_u.dim() + sup_v.dim() + sup_w.dim() - 1;
    let opts = match opts {
        Some(mut o) => {
            o.rank = r;
            o
        }
        None => NewtonOptions::new(r),
    };
    let trace = rank_r_newton(&mapping, &triple_point(u0, v0, w0), &opts)?;
    let u = trace.final_point.expect_poly(0)?.clone();
    let v = trace.final_point.expect_poly(1)?.clone();
    let w = trace.final_point.expect_poly(2)?.clone();
    let triple = GcdTriple {
        residual: gcd_residual(&u, &v, &w, p, q),
        condition: trace.condition,
        u,
        v,
        w,
    }
    .gauge_normalized()?;
    Ok((triple, trace))
}
