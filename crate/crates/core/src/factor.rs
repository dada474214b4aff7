//! Refinement of a structured polynomial factorization
//! `u_0 u_1^{l_1} ... u_k^{l_k} = p` from empirical data.
//!
//! Each nontrivial factor lives in a declared hosting space (a
//! fewnomial support); the solution set carries the k-dimensional
//! scaling gauge `t_0 = t_1^{-l_1} ... t_k^{-l_k}`, so the projection
//! rank is `dim(U_0 x ... x U_k) - k` and the refined array is reported
//! in a normalized gauge.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::mapping::{LayoutComponent, MappingHandle, Point, Value, VectorSpaceLayout};
use crate::newton::{rank_r_newton, IterationTrace, NewtonOptions};
use crate::poly::{Monomial, MonomialSupport, SparsePoly};

/// The declared shape of a factorization: exponents and hosting spaces
/// of the nontrivial factors (the scalar factor u_0 is implicit).
#[derive(Debug, Clone)]
pub struct FactorStructure {
    pub exponents: Vec<u32>,
    pub hostings: Vec<MonomialSupport>,
}

impl FactorStructure {
    pub fn new(exponents: Vec<u32>, hostings: Vec<MonomialSupport>) -> Result<Self> {
        if exponents.len() != hostings.len() || exponents.is_empty() {
            return Err(Error::InvalidOption(
                "factor structure needs one exponent per hosting space".into(),
            ));
        }
        if exponents.iter().any(|&e| e == 0) {
            return Err(Error::InvalidOption("factor exponents must be >= 1".into()));
        }
        Ok(Self {
            exponents,
            hostings,
        })
    }

    pub fn factor_count(&self) -> usize {
        self.exponents.len()
    }

    /// The product space: the support of all products
    /// `u_1^{l_1} ... u_k^{l_k}` over the hosting spaces.
    pub fn product_space(&self) -> Result<MonomialSupport> {
        let factors: Vec<(&MonomialSupport, u32)> = self
            .hostings
            .iter()
            .zip(self.exponents.iter().copied())
            .collect();
        MonomialSupport::product_support(&factors)
    }
}

/// A factor array `(u_0, u_1, ..., u_k)`.
#[derive(Debug, Clone)]
pub struct FactorArray {
    pub u0: Complex64,
    pub factors: Vec<SparsePoly>,
    /// `1/σ_r` of the factorization Jacobian at the array.
    pub condition: f64,
    /// `|u_0 prod u_j^{l_j} - p|`.
    pub residual: f64,
}

impl FactorArray {
    pub fn new(u0: Complex64, factors: Vec<SparsePoly>) -> Self {
        Self {
            u0,
            factors,
            condition: f64::NAN,
            residual: f64::NAN,
        }
    }

    /// The assembled product `u_0 prod u_j^{l_j}`.
    pub fn product(&self, exponents: &[u32]) -> SparsePoly {
        let mut prod = match self.factors.first() {
            Some(f) => SparsePoly::constant(f.vars(), self.u0),
            None => return SparsePoly::zero(&[]),
        };
        for (u, &e) in self.factors.iter().zip(exponents) {
            prod = prod.mul(&u.pow(e));
        }
        prod
    }
}

/// Rescales every nontrivial factor to unit norm with a positive-real
/// first coefficient (first in its hosting-support order), absorbing the
/// compensation into `u_0` so the overall product is unchanged.
pub fn gauge_normalize(arr: &FactorArray, structure: &FactorStructure) -> Result<FactorArray> {
    let mut u0 = arr.u0;
    let mut factors = Vec::with_capacity(arr.factors.len());
    for ((u, &ell), hosting) in arr
        .factors
        .iter()
        .zip(&structure.exponents)
        .zip(&structure.hostings)
    {
        let norm = u.norm();
        if norm == 0.0 {
            return Err(Error::ZeroFactor);
        }
        // First coefficient in support order with nonnegligible size.
        let mut anchor = Complex64::ZERO;
        for m in hosting.monomials() {
            let c = u.coefficient(m);
            if c.norm() > 1e-14 * norm {
                anchor = c;
                break;
            }
        }
        if anchor == Complex64::ZERO {
            return Err(Error::ZeroFactor);
        }
        let phase = anchor / anchor.norm();
        let t = phase * Complex64::new(norm, 0.0);
        factors.push(u.scale(Complex64::ONE / t));
        u0 *= t.powu(ell);
    }
    Ok(FactorArray {
        u0,
        factors,
        condition: arr.condition,
        residual: arr.residual,
    })
}

/// Checks that a hosting space is proper for the factor: the only
/// polynomial multipliers `s` with `s * u` inside the space are
/// constants. Decided by a support-divisibility linear test: candidate
/// multiplier monomials are those mapping some support monomial into the
/// support; the kernel of the outside-support restriction of
/// `s -> s * u` must be one-dimensional.
pub fn is_proper_hosting(u: &SparsePoly, hosting: &MonomialSupport) -> Result<bool> {
    let nvars = hosting.vars().len();
    let mut candidates: Vec<Monomial> = vec![Monomial::constant(nvars)];
    for target in hosting.monomials() {
        for source in hosting.monomials() {
            if target
                .0
                .iter()
                .zip(&source.0)
                .all(|(t, s)| t >= s)
            {
                let m = Monomial(
                    target
                        .0
                        .iter()
                        .zip(&source.0)
                        .map(|(t, s)| t - s)
                        .collect(),
                );
                if m.degree() > 0 && !candidates.contains(&m) {
                    candidates.push(m);
                }
            }
        }
    }
    if candidates.len() == 1 {
        return Ok(true);
    }
    // Products s*u for s over the candidate monomials; kill the
    // components inside the hosting support and measure the kernel.
    let products: Vec<SparsePoly> = candidates
        .iter()
        .map(|m| {
            u.mul(&SparsePoly::from_terms(
                hosting.vars(),
                vec![(m.clone(), Complex64::ONE)],
            ))
        })
        .collect();
    let mut outside: Vec<Monomial> = Vec::new();
    for p in &products {
        for (m, _) in p.terms() {
            if !hosting.contains(m) && !outside.contains(m) {
                outside.push(m.clone());
            }
        }
    }
    if outside.is_empty() {
        // Every product stays inside: improper unless there is only the
        // constant candidate.
        return Ok(false);
    }
    let mat = ComplexMatrix::from_fn(outside.len(), candidates.len(), |i, j| {
        products[j].coefficient(&outside[i])
    });
    let rank = crate::linalg::numerical_rank(&mat, 1e-10 * mat.frobenius_norm().max(1.0))?;
    Ok(candidates.len() - rank <= 1)
}

/// Refines an initial factor array against the data polynomial with the
/// rank-r Newton iteration at `r = dim(U_0 x ... x U_k) - k`. Returns
/// the gauge-normalized array and the trace.
pub fn factor_refine(
    p: &SparsePoly,
    structure: &FactorStructure,
    initial: &FactorArray,
    opts: Option<NewtonOptions>,
) -> Result<(FactorArray, IterationTrace)> {
    let k = structure.factor_count();
    if initial.factors.len() != k {
        return Err(Error::InvalidOption(format!(
            "initial array has {} factors, structure declares {}",
            initial.factors.len(),
            k
        )));
    }
    for (j, (u, hosting)) in initial.factors.iter().zip(&structure.hostings).enumerate() {
        hosting.embed(u).map_err(|_| {
            Error::HostingViolation(format!("initial factor {} lies outside its hosting space", j + 1))
        })?;
        if !is_proper_hosting(u, hosting)? {
            return Err(Error::HostingViolation(format!(
                "hosting space {} admits non-constant multiples of its factor",
                j + 1
            )));
        }
    }
    let product_space = structure.product_space()?;
    product_space.embed(p).map_err(|_| {
        Error::HostingViolation("data polynomial lies outside the product space".into())
    })?;

    let mapping = factor_mapping(p, structure, &product_space)?;
    let dim_domain = 1 + structure.hostings.iter().map(|h| h.dim()).sum::<usize>();
    let r = dim_domain - k;
    let opts = match opts {
        Some(mut o) => {
            o.rank = r;
            o
        }
        None => NewtonOptions::new(r),
    };
    let x0 = array_point(initial);
    let trace = rank_r_newton(&mapping, &x0, &opts)?;
    let mut factors = Vec::with_capacity(k);
    for j in 0..k {
        factors.push(trace.final_point.expect_poly(1 + j)?.clone());
    }
    let arr = FactorArray {
        u0: trace.final_point.expect_scalar(0)?,
        factors,
        condition: trace.condition,
        residual: trace.final_residual(),
    };
    let arr = gauge_normalize(&arr, structure)?;
    Ok((arr, trace))
}

fn array_point(arr: &FactorArray) -> Point {
    let mut values = vec![Value::Scalar(arr.u0)];
    values.extend(arr.factors.iter().cloned().map(Value::Poly));
    Point(values)
}

fn factor_mapping(
    p: &SparsePoly,
    structure: &FactorStructure,
    product_space: &MonomialSupport,
) -> Result<MappingHandle> {
    let mut components = vec![LayoutComponent::Scalar];
    components.extend(
        structure
            .hostings
            .iter()
            .cloned()
            .map(LayoutComponent::PolySpace),
    );
    let domain = VectorSpaceLayout::new(components);
    let codomain = VectorSpaceLayout::new(vec![LayoutComponent::PolySpace(product_space.clone())]);

    let k = structure.factor_count();
    let exps = structure.exponents.clone();
    let data = p.clone();
    let eval = move |x: &Point| -> Result<Point> {
        let u0 = x.expect_scalar(0)?;
        let mut prod = SparsePoly::constant(data.vars(), u0);
        for (j, &e) in exps.iter().enumerate() {
            prod = prod.mul(&x.expect_poly(1 + j)?.pow(e));
        }
        Ok(Point(vec![Value::Poly(prod.sub(&data))]))
    };

    let exps_j = structure.exponents.clone();
    let hostings = structure.hostings.clone();
    let cod = product_space.clone();
    let jac = move |x: &Point| -> Result<ComplexMatrix> {
        let u0 = x.expect_scalar(0)?;
        let us: Vec<&SparsePoly> = (0..k)
            .map(|j| x.expect_poly(1 + j))
            .collect::<Result<_>>()?;
        let powers: Vec<SparsePoly> = us
            .iter()
            .zip(&exps_j)
            .map(|(u, &e)| u.pow(e))
            .collect();
        let full: SparsePoly = powers
            .iter()
            .fold(SparsePoly::constant(us[0].vars(), Complex64::ONE), |acc, f| {
                acc.mul(f)
            });
        let cols = 1 + hostings.iter().map(|h| h.dim()).sum::<usize>();
        let mut mat = ComplexMatrix::zeros(cod.dim(), cols);
        // Column for u0: prod u_j^{l_j}.
        for (i, z) in cod.embed(&full)?.iter().enumerate() {
            mat.set(i, 0, *z);
        }
        // Columns for each hosting basis monomial mu of factor j:
        // u0 * l_j * u_j^{l_j - 1} * prod_{i != j} u_i^{l_i} * mu.
        let mut col = 1;
        for (j, hosting) in hostings.iter().enumerate() {
            let mut partial = SparsePoly::constant(
                us[0].vars(),
                u0 * Complex64::new(exps_j[j] as f64, 0.0),
            );
            partial = partial.mul(&us[j].pow(exps_j[j] - 1));
            for (i, pw) in powers.iter().enumerate() {
                if i != j {
                    partial = partial.mul(pw);
                }
            }
            for mu in hosting.monomials() {
                let basis =
                    SparsePoly::from_terms(hosting.vars(), vec![(mu.clone(), Complex64::ONE)]);
                for (i, z) in cod.embed(&partial.mul(&basis))?.iter().enumerate() {
                    mat.set(i, col, *z);
                }
                col += 1;
            }
        }
        Ok(mat)
    };
    Ok(MappingHandle::new(domain, codomain, eval).with_jacobian(jac))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newton::NewtonStatus;
    use crate::poly::parse_poly;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn xy() -> Vec<String> {
        vec!["x".to_string(), "y".to_string()]
    }

    #[test]
    fn gauge_normalize_identity_on_normalized() {
        let v = xy();
        let structure = FactorStructure::new(
            vec![1],
            vec![MonomialSupport::parse("x, y", &v).unwrap()],
        )
        .unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        let u = parse_poly("x + y", &v).unwrap().scale(c(s, 0.0));
        let arr = FactorArray::new(c(3.0, 0.0), vec![u.clone()]);
        let out = gauge_normalize(&arr, &structure).unwrap();
        assert!(out.factors[0].sub(&u).norm() < 1e-15);
        assert!((out.u0 - c(3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn gauge_scaling_absorbed_into_u0() {
        let v = xy();
        let structure = FactorStructure::new(
            vec![3],
            vec![MonomialSupport::parse("x, y", &v).unwrap()],
        )
        .unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        let u = parse_poly("x + y", &v).unwrap().scale(c(s, 0.0));
        let base = FactorArray::new(c(1.0, 0.0), vec![u.clone()]);
        let scaled = FactorArray::new(c(1.0, 0.0), vec![u.scale(c(2.0, 0.0))]);
        let out = gauge_normalize(&scaled, &structure).unwrap();
        // u scaled by 2 with exponent 3: u0 must absorb 8.
        assert!((out.u0 - c(8.0, 0.0)).norm() < 1e-12);
        assert!(out.factors[0].sub(&base.factors[0]).norm() < 1e-12);
    }

    #[test]
    fn gauge_normalize_preserves_product() {
        let v = xy();
        let structure = FactorStructure::new(
            vec![2, 1],
            vec![
                MonomialSupport::parse("x, y", &v).unwrap(),
                MonomialSupport::parse("1, x y", &v).unwrap(),
            ],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let u1 = parse_poly("x", &v).unwrap().scale(c(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ))
            .add(&parse_poly("y", &v).unwrap().scale(c(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )));
            let u2 = SparsePoly::constant(&v, c(rng.random_range(-1.0..1.0), 0.4)).add(
                &parse_poly("x y", &v).unwrap().scale(c(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )),
            );
            let arr = FactorArray::new(
                c(rng.random_range(0.5..1.5), rng.random_range(-0.2..0.2)),
                vec![u1, u2],
            );
            let before = arr.product(&structure.exponents);
            let after = gauge_normalize(&arr, &structure)
                .unwrap()
                .product(&structure.exponents);
            assert!(
                after.sub(&before).norm() <= 1e-14 * before.norm().max(1.0),
                "product changed by {:e}",
                after.sub(&before).norm()
            );
        }
    }

    #[test]
    fn gauge_normalize_rejects_zero_factor() {
        let v = xy();
        let structure = FactorStructure::new(
            vec![1],
            vec![MonomialSupport::parse("x, y", &v).unwrap()],
        )
        .unwrap();
        let arr = FactorArray::new(c(1.0, 0.0), vec![SparsePoly::zero(&v)]);
        assert!(matches!(
            gauge_normalize(&arr, &structure),
            Err(Error::ZeroFactor)
        ));
    }

    #[test]
    fn propriety_of_fewnomial_spaces() {
        let v3: Vec<String> = vec!["x".into(), "y".into(), "z".into()];
        let u1 = parse_poly("0.67 y^3 + 0.86 x^2 z^4", &v3).unwrap();
        let h1 = MonomialSupport::parse("y^3, x^2 z^4", &v3).unwrap();
        assert!(is_proper_hosting(&u1, &h1).unwrap());
        let u2 = parse_poly("-1 + 0.45 y z + 1.73 x^5", &v3).unwrap();
        let h2 = MonomialSupport::parse("1, y z, x^5", &v3).unwrap();
        assert!(is_proper_hosting(&u2, &h2).unwrap());
        // A dense space is improper for a lower-degree factor: s = x
        // keeps s*(1 + x) inside span{1, x, x^2}.
        let vx: Vec<String> = vec!["x".into()];
        let u = parse_poly("1 + x", &vx).unwrap();
        let h = MonomialSupport::dense_univariate("x", 2);
        assert!(!is_proper_hosting(&u, &h).unwrap());
    }

    #[test]
    fn exact_data_exact_factors_is_immediate() {
        let v = xy();
        let u1 = parse_poly("x + y", &v).unwrap();
        let u2 = parse_poly("x - y", &v).unwrap();
        let p = u1.pow(2).mul(&u2);
        let structure = FactorStructure::new(
            vec![2, 1],
            vec![
                MonomialSupport::parse("x, y", &v).unwrap(),
                MonomialSupport::parse("x, y", &v).unwrap(),
            ],
        )
        .unwrap();
        let initial = FactorArray::new(c(1.0, 0.0), vec![u1, u2]);
        let (arr, trace) = factor_refine(&p, &structure, &initial, None).unwrap();
        assert_eq!(trace.status, NewtonStatus::ConvergedZero);
        assert!(arr.residual < 1e-12);
        assert!(trace.final_shift().unwrap_or(0.0) < 1e-12);
    }

    #[test]
    fn noisy_quadratic_cubic_factors() {
        // (x + y)^2 (x - y) with 1e-8 coefficient noise over linear
        // hosting spaces.
        let v = xy();
        let u1 = parse_poly("x + y", &v).unwrap();
        let u2 = parse_poly("x - y", &v).unwrap();
        let p = u1.pow(2).mul(&u2);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let eps = 1e-8;
        let noise: Vec<(Monomial, Complex64)> = p
            .terms()
            .map(|(m, _)| {
                (
                    m.clone(),
                    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                )
            })
            .collect();
        let noise = SparsePoly::from_terms(&v, noise);
        let pt = p.add(&noise.scale(c(eps / noise.norm(), 0.0)));

        let structure = FactorStructure::new(
            vec![2, 1],
            vec![
                MonomialSupport::parse("x, y", &v).unwrap(),
                MonomialSupport::parse("x, y", &v).unwrap(),
            ],
        )
        .unwrap();
        let initial = FactorArray::new(
            c(1.0, 0.0),
            vec![
                parse_poly("1.01 x + 0.98 y", &v).unwrap(),
                parse_poly("0.99 x - 1.02 y", &v).unwrap(),
            ],
        );
        let (arr, trace) = factor_refine(&pt, &structure, &initial, None).unwrap();
        assert!(trace.status.converged(), "status {:?}", trace.status);
        // Compare against the gauge-normalized exact factors.
        let exact = gauge_normalize(
            &FactorArray::new(
                c(1.0, 0.0),
                vec![
                    parse_poly("x + y", &v).unwrap(),
                    parse_poly("x - y", &v).unwrap(),
                ],
            ),
            &structure,
        )
        .unwrap();
        let err = arr.factors[0].sub(&exact.factors[0]).norm()
            + arr.factors[1].sub(&exact.factors[1]).norm()
            + (arr.u0 - exact.u0).norm();
        assert!(err <= 1e-6, "factor error {err:e}");
        // Residual sits at the data error, shifts at machine scale.
        assert!(arr.residual <= 10.0 * eps, "residual {:e}", arr.residual);
    }

    #[test]
    fn gauge_invariant_refinement() {
        let v = xy();
        let u1 = parse_poly("x + y", &v).unwrap();
        let u2 = parse_poly("x - y", &v).unwrap();
        let p = u1.pow(2).mul(&u2);
        let structure = FactorStructure::new(
            vec![2, 1],
            vec![
                MonomialSupport::parse("x, y", &v).unwrap(),
                MonomialSupport::parse("x, y", &v).unwrap(),
            ],
        )
        .unwrap();
        let base_initial = FactorArray::new(
            c(1.0, 0.0),
            vec![
                parse_poly("1.02 x + 0.97 y", &v).unwrap(),
                parse_poly("0.98 x - 1.03 y", &v).unwrap(),
            ],
        );
        let (base, _) = factor_refine(&p, &structure, &base_initial, None).unwrap();
        // Gauge-shift the initial array: scale factor 1 by t, factor 2
        // by s, compensate u0.
        let t = c(1.3, -0.4);
        let s = c(0.8, 0.3);
        let shifted = FactorArray::new(
            c(1.0, 0.0) / (t * t * s),
            vec![
                base_initial.factors[0].scale(t),
                base_initial.factors[1].scale(s),
            ],
        );
        let (out, _) = factor_refine(&p, &structure, &shifted, None).unwrap();
        let err = out.factors[0].sub(&base.factors[0]).norm()
            + out.factors[1].sub(&base.factors[1]).norm()
            + (out.u0 - base.u0).norm();
        assert!(err <= 1e-8, "gauge-shifted refinement drifted by {err:e}");
    }

    #[test]
    fn jacobian_nullity_equals_factor_count() {
        let v = xy();
        let u1 = parse_poly("x + y", &v).unwrap();
        let u2 = parse_poly("x - y", &v).unwrap();
        let p = u1.pow(2).mul(&u2);
        let structure = FactorStructure::new(
            vec![2, 1],
            vec![
                MonomialSupport::parse("x, y", &v).unwrap(),
                MonomialSupport::parse("x, y", &v).unwrap(),
            ],
        )
        .unwrap();
        let initial = FactorArray::new(c(1.0, 0.0), vec![u1, u2]);
        let (_, trace) = factor_refine(&p, &structure, &initial, None).unwrap();
        let product_space = structure.product_space().unwrap();
        let mapping = factor_mapping(&p, &structure, &product_space).unwrap();
        let jac = mapping.jacobian(&trace.final_point).unwrap();
        let f = crate::linalg::svd(&jac).unwrap();
        let rank = f.sigma.iter().filter(|&&s| s >= 1e-8 * f.sigma[0]).count();
        let nullity = jac.cols() - rank;
        assert_eq!(nullity, structure.factor_count());
    }

    #[test]
    fn hosting_violation_is_reported() {
        let v = xy();
        let structure = FactorStructure::new(
            vec![1, 1],
            vec![
                MonomialSupport::parse("x, y", &v).unwrap(),
                MonomialSupport::parse("x, y", &v).unwrap(),
            ],
        )
        .unwrap();
        let initial = FactorArray::new(
            c(1.0, 0.0),
            vec![
                parse_poly("x + y + 1", &v).unwrap(), // constant term outside
                parse_poly("x - y", &v).unwrap(),
            ],
        );
        let p = parse_poly("x^2 - y^2", &v).unwrap();
        assert!(matches!(
            factor_refine(&p, &structure, &initial, None),
            Err(Error::HostingViolation(_))
        ));
    }
}
