//! Holomorphic mappings between structured finite-dimensional spaces.
//!
//! A `VectorSpaceLayout` fixes an isometric isomorphism between a
//! product of coefficient spaces (scalars, coordinate blocks, matrix
//! blocks, polynomial supports) and a flat complex coordinate vector.
//! A `MappingHandle` carries evaluation and Jacobian callbacks expressed
//! through such layouts; the Newton engine consumes mappings only in
//! this form.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{vec_norm, ComplexMatrix};
use crate::poly::{MonomialSupport, SparsePoly};

/// One component of a structured space.
#[derive(Debug, Clone, PartialEq)]
pub enum LayoutComponent {
    Scalar,
    Coords(usize),
    MatrixBlock { rows: usize, cols: usize },
    PolySpace(MonomialSupport),
}

impl LayoutComponent {
    pub fn dim(&self) -> usize {
        match self {
            LayoutComponent::Scalar => 1,
            LayoutComponent::Coords(n) => *n,
            LayoutComponent::MatrixBlock { rows, cols } => rows * cols,
            LayoutComponent::PolySpace(s) => s.dim(),
        }
    }
}

/// Ordered component list; the component order fixed at construction is
/// the one and only ordering used for Jacobian rows and columns.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSpaceLayout {
    components: Vec<LayoutComponent>,
    total: usize,
}

impl VectorSpaceLayout {
    pub fn new(components: Vec<LayoutComponent>) -> Self {
        let total = components.iter().map(|c| c.dim()).sum();
        Self { components, total }
    }

    pub fn scalar() -> Self {
        Self::new(vec![LayoutComponent::Scalar])
    }

    pub fn coords(n: usize) -> Self {
        Self::new(vec![LayoutComponent::Coords(n)])
    }

    pub fn components(&self) -> &[LayoutComponent] {
        &self.components
    }

    pub fn total_dim(&self) -> usize {
        self.total
    }

    /// Flattens a structured point into coordinates. The embedding is
    /// isometric: the 2-norm of the output equals the product-space norm
    /// of the input.
    pub fn embed(&self, point: &Point) -> Result<Vec<Complex64>> {
        if point.0.len() != self.components.len() {
            return Err(Error::ShapeMismatch {
                component: 0,
                msg: format!(
                    "point has {} components, layout has {}",
                    point.0.len(),
                    self.components.len()
                ),
            });
        }
        let mut out = Vec::with_capacity(self.total);
        for (idx, (comp, val)) in self.components.iter().zip(&point.0).enumerate() {
            match (comp, val) {
                (LayoutComponent::Scalar, Value::Scalar(z)) => out.push(*z),
                (LayoutComponent::Coords(n), Value::Coords(v)) => {
                    if v.len() != *n {
                        return Err(Error::ShapeMismatch {
                            component: idx,
                            msg: format!("coordinate block of {} (expected {})", v.len(), n),
                        });
                    }
                    out.extend_from_slice(v);
                }
                (LayoutComponent::MatrixBlock { rows, cols }, Value::Matrix(m)) => {
                    if m.rows() != *rows || m.cols() != *cols {
                        return Err(Error::ShapeMismatch {
                            component: idx,
                            msg: format!(
                                "{}x{} matrix (expected {}x{})",
                                m.rows(),
                                m.cols(),
                                rows,
                                cols
                            ),
                        });
                    }
                    out.extend(m.row_major());
                }
                (LayoutComponent::PolySpace(s), Value::Poly(p)) => {
                    out.extend(s.embed(p)?);
                }
                _ => {
                    return Err(Error::ShapeMismatch {
                        component: idx,
                        msg: "value kind does not match layout component".into(),
                    })
                }
            }
        }
        Ok(out)
    }

    /// Rebuilds a structured point from flat coordinates.
    pub fn extract(&self, coords: &[Complex64]) -> Result<Point> {
        if coords.len() != self.total {
            return Err(Error::DimensionMismatch {
                context: "layout extraction",
                expected: self.total,
                got: coords.len(),
            });
        }
        let mut values = Vec::with_capacity(self.components.len());
        let mut off = 0;
        for comp in &self.components {
            let d = comp.dim();
            let slice = &coords[off..off + d];
            off += d;
            values.push(match comp {
                LayoutComponent::Scalar => Value::Scalar(slice[0]),
                LayoutComponent::Coords(_) => Value::Coords(slice.to_vec()),
                LayoutComponent::MatrixBlock { rows, cols } => {
                    Value::Matrix(ComplexMatrix::new(*rows, *cols, slice.to_vec())?)
                }
                LayoutComponent::PolySpace(s) => Value::Poly(s.extract(slice)?),
            });
        }
        Ok(Point(values))
    }
}

/// A value in one layout component.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Scalar(Complex64),
    Coords(Vec<Complex64>),
    Matrix(ComplexMatrix),
    Poly(SparsePoly),
}

impl Value {
    pub fn norm(&self) -> f64 {
        match self {
            Value::Scalar(z) => z.norm(),
            Value::Coords(v) => vec_norm(v),
            Value::Matrix(m) => m.frobenius_norm(),
            Value::Poly(p) => p.norm(),
        }
    }
}

/// A structured point: one value per layout component.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(pub Vec<Value>);

impl Point {
    /// Root-sum-of-squares product-space norm.
    pub fn norm(&self) -> f64 {
        self.0
            .iter()
            .map(|v| v.norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn scalar(z: Complex64) -> Self {
        Point(vec![Value::Scalar(z)])
    }

    pub fn coords(v: Vec<Complex64>) -> Self {
        Point(vec![Value::Coords(v)])
    }

    pub fn expect_scalar(&self, idx: usize) -> Result<Complex64> {
        match self.0.get(idx) {
            Some(Value::Scalar(z)) => Ok(*z),
            _ => Err(Error::ShapeMismatch {
                component: idx,
                msg: "expected a scalar component".into(),
            }),
        }
    }

    pub fn expect_coords(&self, idx: usize) -> Result<&[Complex64]> {
        match self.0.get(idx) {
            Some(Value::Coords(v)) => Ok(v),
            _ => Err(Error::ShapeMismatch {
                component: idx,
                msg: "expected a coordinate block".into(),
            }),
        }
    }

    pub fn expect_matrix(&self, idx: usize) -> Result<&ComplexMatrix> {
        match self.0.get(idx) {
            Some(Value::Matrix(m)) => Ok(m),
            _ => Err(Error::ShapeMismatch {
                component: idx,
                msg: "expected a matrix block".into(),
            }),
        }
    }

    pub fn expect_poly(&self, idx: usize) -> Result<&SparsePoly> {
        match self.0.get(idx) {
            Some(Value::Poly(p)) => Ok(p),
            _ => Err(Error::ShapeMismatch {
                component: idx,
                msg: "expected a polynomial component".into(),
            }),
        }
    }
}

type EvalFn = dyn Fn(&Point) -> Result<Point> + Send + Sync;
type JacFn = dyn Fn(&Point) -> Result<ComplexMatrix> + Send + Sync;

/// A holomorphic mapping: evaluation plus Jacobian matrices, both
/// expressed through layouts. Evaluation must be reentrant and free of
/// side effects; handles are shareable across threads.
#[derive(Clone)]
pub struct MappingHandle {
    domain: VectorSpaceLayout,
    codomain: VectorSpaceLayout,
    eval: Arc<EvalFn>,
    jac: Option<Arc<JacFn>>,
}

impl std::fmt::Debug for MappingHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MappingHandle")
            .field("domain_dim", &self.domain.total_dim())
            .field("codomain_dim", &self.codomain.total_dim())
            .field("analytic_jacobian", &self.jac.is_some())
            .finish()
    }
}

impl MappingHandle {
    pub fn new(
        domain: VectorSpaceLayout,
        codomain: VectorSpaceLayout,
        eval: impl Fn(&Point) -> Result<Point> + Send + Sync + 'static,
    ) -> Self {
        Self {
            domain,
            codomain,
            eval: Arc::new(eval),
            jac: None,
        }
    }

    pub fn with_jacobian(
        mut self,
        jac: impl Fn(&Point) -> Result<ComplexMatrix> + Send + Sync + 'static,
    ) -> Self {
        self.jac = Some(Arc::new(jac));
        self
    }

    pub fn domain(&self) -> &VectorSpaceLayout {
        &self.domain
    }

    pub fn codomain(&self) -> &VectorSpaceLayout {
        &self.codomain
    }

    pub fn domain_dim(&self) -> usize {
        self.domain.total_dim()
    }

    pub fn codomain_dim(&self) -> usize {
        self.codomain.total_dim()
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jac.is_some()
    }

    pub fn eval(&self, x: &Point) -> Result<Point> {
        (self.eval)(x)
    }

    /// Evaluates through flat coordinates.
    pub fn eval_flat(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let p = self.domain.extract(x)?;
        let v = (self.eval)(&p)?;
        self.codomain.embed(&v)
    }

    /// Jacobian matrix at a structured point (codomain-dim rows by
    /// domain-dim columns). Falls back to central differences with
    /// `h = 1e-6 * max(1, |x0|)` when no analytic Jacobian is supplied.
    pub fn jacobian(&self, x: &Point) -> Result<ComplexMatrix> {
        match &self.jac {
            Some(j) => {
                let m = j(x)?;
                if m.rows() != self.codomain_dim() || m.cols() != self.domain_dim() {
                    return Err(Error::DimensionMismatch {
                        context: "jacobian shape",
                        expected: self.codomain_dim() * self.domain_dim(),
                        got: m.rows() * m.cols(),
                    });
                }
                Ok(m)
            }
            None => {
                let flat = self.domain.embed(x)?;
                let h = 1e-6 * vec_norm(&flat).max(1.0);
                self.fd_jacobian(&flat, h)
            }
        }
    }

    pub fn jac_flat(&self, x: &[Complex64]) -> Result<ComplexMatrix> {
        let p = self.domain.extract(x)?;
        self.jacobian(&p)
    }

    /// Central-difference Jacobian in flat coordinates. Valid for
    /// holomorphic mappings, where a real step determines the complex
    /// derivative.
    pub fn fd_jacobian(&self, x: &[Complex64], h: f64) -> Result<ComplexMatrix> {
        let n = self.domain_dim();
        let m = self.codomain_dim();
        let mut j = ComplexMatrix::zeros(m, n);
        let scale = Complex64::new(1.0 / (2.0 * h), 0.0);
        for k in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += Complex64::new(h, 0.0);
            xm[k] -= Complex64::new(h, 0.0);
            let fp = self.eval_flat(&xp)?;
            let fm = self.eval_flat(&xm)?;
            for i in 0..m {
                j.set(i, k, (fp[i] - fm[i]) * scale);
            }
        }
        Ok(j)
    }

    /// Compares the supplied Jacobian against central differences of the
    /// evaluation, column by column. Returns the worst relative column
    /// deviation.
    pub fn fd_jacobian_check(&self, x0: &Point, h: f64) -> Result<f64> {
        if h <= 0.0 {
            return Err(Error::InvalidOption("step h must be positive".into()));
        }
        let flat = self.domain.embed(x0)?;
        let analytic = self.jacobian(x0)?;
        let numeric = self.fd_jacobian(&flat, h)?;
        let mut worst = 0.0f64;
        for k in 0..analytic.cols() {
            let ja = analytic.column(k);
            let jn = numeric.column(k);
            let diff = vec_norm(&crate::linalg::vec_sub(&ja, &jn));
            let denom = vec_norm(&ja).max(vec_norm(&jn));
            if denom > 0.0 {
                worst = worst.max(diff / denom);
            }
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_poly;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn embed_scalar() {
        let layout = VectorSpaceLayout::scalar();
        let coords = layout.embed(&Point::scalar(c(3.0, 0.0))).unwrap();
        assert_eq!(coords, vec![c(3.0, 0.0)]);
    }

    #[test]
    fn embed_matrix_block_preserves_frobenius() {
        let layout = VectorSpaceLayout::new(vec![LayoutComponent::MatrixBlock { rows: 2, cols: 2 }]);
        let m = ComplexMatrix::new(
            2,
            2,
            vec![c(1.0, 1.0), c(2.0, 0.0), c(0.0, -3.0), c(4.0, 0.0)],
        )
        .unwrap();
        let p = Point(vec![Value::Matrix(m.clone())]);
        let coords = layout.embed(&p).unwrap();
        assert_eq!(coords.len(), 4);
        assert_eq!(coords[1], c(2.0, 0.0)); // row-major order
        assert!((vec_norm(&coords) - m.frobenius_norm()).abs() < 1e-14);
    }

    #[test]
    fn embed_polynomial_is_coefficient_vector() {
        let vars = vec!["x".to_string()];
        let s = MonomialSupport::dense_univariate("x", 2);
        let layout = VectorSpaceLayout::new(vec![LayoutComponent::PolySpace(s)]);
        let p = parse_poly("x^2-1", &vars).unwrap();
        let coords = layout.embed(&Point(vec![Value::Poly(p)])).unwrap();
        assert_eq!(coords, vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    }

    #[test]
    fn embed_shape_mismatch() {
        let layout = VectorSpaceLayout::coords(3);
        let err = layout.embed(&Point::coords(vec![c(1.0, 0.0)])).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { .. }));
    }

    #[test]
    fn round_trip_mixed_layout() {
        let vars = vec!["x".to_string(), "y".to_string()];
        let support = MonomialSupport::parse("1, x y, x^2", &vars).unwrap();
        let layout = VectorSpaceLayout::new(vec![
            LayoutComponent::Scalar,
            LayoutComponent::Coords(2),
            LayoutComponent::MatrixBlock { rows: 2, cols: 3 },
            LayoutComponent::PolySpace(support),
        ]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let coords: Vec<Complex64> = (0..layout.total_dim())
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let point = layout.extract(&coords).unwrap();
        let back = layout.embed(&point).unwrap();
        assert_eq!(coords, back);
        // Isometry of the product norm.
        assert!((point.norm() - vec_norm(&coords)).abs() <= 1e-14 * point.norm());
    }

    #[test]
    fn fd_check_exact_for_linear_maps() {
        let a = ComplexMatrix::new(
            2,
            2,
            vec![c(1.0, 0.0), c(2.0, -1.0), c(0.5, 0.0), c(-1.0, 2.0)],
        )
        .unwrap();
        let aj = a.clone();
        let h = MappingHandle::new(
            VectorSpaceLayout::coords(2),
            VectorSpaceLayout::coords(2),
            move |x| Ok(Point::coords(a.mul_vec(x.expect_coords(0)?))),
        )
        .with_jacobian(move |_| Ok(aj.clone()));
        let dev = h
            .fd_jacobian_check(&Point::coords(vec![c(0.3, 0.2), c(-1.0, 0.4)]), 1e-6)
            .unwrap();
        assert!(dev <= 1e-9, "deviation {dev:e}");
    }

    #[test]
    fn fd_check_square_map() {
        let h = MappingHandle::new(
            VectorSpaceLayout::coords(1),
            VectorSpaceLayout::coords(1),
            |x| {
                let v = x.expect_coords(0)?[0];
                Ok(Point::coords(vec![v * v]))
            },
        )
        .with_jacobian(|x| {
            let v = x.expect_coords(0)?[0];
            ComplexMatrix::new(1, 1, vec![v * 2.0])
        });
        let dev = h
            .fd_jacobian_check(&Point::coords(vec![c(2.0, 0.0)]), 1e-5)
            .unwrap();
        assert!(dev <= 1e-8, "deviation {dev:e} against jac = 4");
    }

    #[test]
    fn fd_check_flags_wrong_jacobian() {
        let h = MappingHandle::new(
            VectorSpaceLayout::coords(1),
            VectorSpaceLayout::coords(1),
            |x| {
                let v = x.expect_coords(0)?[0];
                Ok(Point::coords(vec![v * v]))
            },
        )
        .with_jacobian(|x| {
            // Deliberately off by a factor of two.
            let v = x.expect_coords(0)?[0];
            ComplexMatrix::new(1, 1, vec![v * 4.0])
        });
        let dev = h
            .fd_jacobian_check(&Point::coords(vec![c(2.0, 0.0)]), 1e-5)
            .unwrap();
        assert!((dev - 0.5).abs() < 1e-4, "deviation {dev} should be ~0.5");
    }

    #[test]
    fn fallback_jacobian_used_when_none_supplied() {
        let h = MappingHandle::new(
            VectorSpaceLayout::coords(1),
            VectorSpaceLayout::coords(1),
            |x| {
                let v = x.expect_coords(0)?[0];
                Ok(Point::coords(vec![v * v * v]))
            },
        );
        let j = h.jacobian(&Point::coords(vec![c(2.0, 0.0)])).unwrap();
        assert!((j.get(0, 0) - c(12.0, 0.0)).norm() < 1e-6);
    }
}
