//! Sparse multivariate polynomials with complex coefficients: parsing,
//! formatting, arithmetic, evaluation, and Jacobians of polynomial
//! systems.
//!
//! The norm of a polynomial is the 2-norm of its coefficient vector, so
//! embedding into a monomial-support coordinate space is an isometry.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::mapping::{LayoutComponent, MappingHandle, Point, Value, VectorSpaceLayout};

/// Exponent tuple ordered by graded lexicographic comparison (total
/// degree first, then lexicographic by the declared variable order).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn constant(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

/// Sparse polynomial over an ordered variable list. Zero-coefficient
/// terms are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsePoly {
    vars: Arc<Vec<String>>,
    terms: BTreeMap<Monomial, Complex64>,
}

impl SparsePoly {
    pub fn zero(vars: &[String]) -> Self {
        Self {
            vars: Arc::new(vars.to_vec()),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: &[String], value: Complex64) -> Self {
        let mut p = Self::zero(vars);
        p.add_term(Monomial::constant(vars.len()), value);
        p
    }

    /// Single variable raised to a power.
    pub fn var_pow(vars: &[String], index: usize, pow: u32) -> Self {
        let mut e = vec![0u32; vars.len()];
        e[index] = pow;
        let mut p = Self::zero(vars);
        p.add_term(Monomial(e), Complex64::ONE);
        p
    }

    pub fn from_terms(vars: &[String], terms: Vec<(Monomial, Complex64)>) -> Self {
        let mut p = Self::zero(vars);
        for (m, c) in terms {
            assert_eq!(m.0.len(), vars.len(), "monomial arity");
            p.add_term(m, c);
        }
        p
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Complex64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> Complex64 {
        self.terms.get(m).copied().unwrap_or(Complex64::ZERO)
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|m| m.0[var]).max().unwrap_or(0)
    }

    /// Leading term in graded lexicographic order.
    pub fn leading(&self) -> Option<(&Monomial, &Complex64)> {
        self.terms.iter().next_back()
    }

    /// 2-norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn add_term(&mut self, m: Monomial, c: Complex64) {
        if c == Complex64::ZERO {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let s = *e.get() + c;
                if s == Complex64::ZERO {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    /// Remaps to a superset variable list.
    fn remap(&self, vars: &Arc<Vec<String>>) -> Self {
        if Arc::ptr_eq(&self.vars, vars) || *self.vars == **vars {
            let mut p = self.clone();
            p.vars = vars.clone();
            return p;
        }
        let index: Vec<usize> = self
            .vars
            .iter()
            .map(|v| {
                vars.iter()
                    .position(|w| w == v)
                    .expect("remap target must contain every variable")
            })
            .collect();
        let mut out = SparsePoly {
            vars: vars.clone(),
            terms: BTreeMap::new(),
        };
        for (m, c) in &self.terms {
            let mut e = vec![0u32; vars.len()];
            for (k, &exp) in m.0.iter().enumerate() {
                e[index[k]] = exp;
            }
            out.add_term(Monomial(e), *c);
        }
        out
    }

    fn unify(a: &Self, b: &Self) -> (Self, Self) {
        if *a.vars == *b.vars {
            return (a.clone(), b.remap(&a.vars));
        }
        let mut union: Vec<String> = a.vars.to_vec();
        for v in b.vars.iter() {
            if !union.contains(v) {
                union.push(v.clone());
            }
        }
        let union = Arc::new(union);
        (a.remap(&union), b.remap(&union))
    }

    pub fn add(&self, other: &Self) -> Self {
        let (mut a, b) = Self::unify(self, other);
        for (m, c) in b.terms {
            a.add_term(m, c);
        }
        a
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let mut p = self.clone();
        for c in p.terms.values_mut() {
            *c = -*c;
        }
        p
    }

    pub fn scale(&self, s: Complex64) -> Self {
        if s == Complex64::ZERO {
            return Self::zero(&self.vars);
        }
        let mut p = Self::zero(&self.vars);
        for (m, c) in &self.terms {
            p.add_term(m.clone(), c * s);
        }
        p
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = Self::unify(self, other);
        let mut out = SparsePoly {
            vars: a.vars.clone(),
            terms: BTreeMap::new(),
        };
        for (ma, ca) in &a.terms {
            for (mb, cb) in &b.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::constant(&self.vars, Complex64::ONE);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Partial derivative with respect to the variable at `index`.
    pub fn derivative(&self, index: usize) -> Self {
        let mut out = SparsePoly {
            vars: self.vars.clone(),
            terms: BTreeMap::new(),
        };
        for (m, c) in &self.terms {
            let e = m.0[index];
            if e == 0 {
                continue;
            }
            let mut d = m.0.clone();
            d[index] = e - 1;
            out.add_term(Monomial(d), c * Complex64::new(e as f64, 0.0));
        }
        out
    }

    /// Evaluates with summation ordered by ascending term magnitude
    /// (largest magnitude last).
    pub fn eval(&self, point: &[Complex64]) -> Complex64 {
        assert_eq!(point.len(), self.vars.len(), "evaluation point arity");
        let mut values: Vec<Complex64> = Vec::with_capacity(self.terms.len());
        for (m, c) in &self.terms {
            let mut t = *c;
            for (k, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    t *= point[k].powu(e);
                }
            }
            values.push(t);
        }
        values.sort_by(|a, b| a.norm_sqr().partial_cmp(&b.norm_sqr()).unwrap());
        values.into_iter().sum()
    }

    /// The polynomial's own support in canonical order.
    pub fn support(&self) -> MonomialSupport {
        MonomialSupport {
            vars: self.vars.to_vec(),
            monomials: self.terms.keys().cloned().collect(),
        }
    }
}

impl fmt::Display for SparsePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            let (sign, body) = format_term(m, c, &self.vars);
            if first {
                if sign < 0 {
                    write!(f, "-")?;
                }
                write!(f, "{}", body)?;
                first = false;
            } else {
                write!(f, "{}{}", if sign < 0 { " - " } else { " + " }, body)?;
            }
        }
        Ok(())
    }
}

fn format_term(m: &Monomial, c: &Complex64, vars: &[String]) -> (i8, String) {
    use crate::cfmt::format_g;
    let mut parts: Vec<String> = Vec::new();
    for (k, &e) in m.0.iter().enumerate() {
        match e {
            0 => {}
            1 => parts.push(vars[k].clone()),
            _ => parts.push(format!("{}^{}", vars[k], e)),
        }
    }
    // Real coefficients print signed and bare; anything with an
    // imaginary part prints as a parenthesized complex literal.
    if c.im == 0.0 {
        let sign = if c.re < 0.0 { -1 } else { 1 };
        let mag = c.re.abs();
        if parts.is_empty() {
            (sign, format_g(mag, 15))
        } else if mag == 1.0 {
            (sign, parts.join("*"))
        } else {
            (sign, format!("{}*{}", format_g(mag, 15), parts.join("*")))
        }
    } else {
        let lit = format!("({})", crate::cfmt::format_complex(*c));
        if parts.is_empty() {
            (1, lit)
        } else {
            (1, format!("{}*{}", lit, parts.join("*")))
        }
    }
}

// ── Parsing ───────────────────────────────────────────────────────────

/// Parses a polynomial over the declared variables. The grammar accepts
/// signed terms, decimal coefficients, `*` or juxtaposition-with-space
/// multiplication, and `^` integer powers.
pub fn parse_poly(text: &str, vars: &[String]) -> Result<SparsePoly> {
    Parser::new(text, vars).parse()
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    vars: &'a [String],
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, vars: &'a [String]) -> Self {
        Self {
            bytes: text.as_bytes(),
            pos: 0,
            vars,
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::PolyParse {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && (self.bytes[self.pos] as char).is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.bytes.get(self.pos).map(|&b| b as char)
    }

    fn parse(mut self) -> Result<SparsePoly> {
        let mut poly = SparsePoly::zero(self.vars);
        self.skip_ws();
        if self.pos == self.bytes.len() {
            return Err(self.err("empty polynomial"));
        }
        let mut sign = 1.0;
        match self.peek() {
            Some('+') => {
                self.pos += 1;
            }
            Some('-') => {
                sign = -1.0;
                self.pos += 1;
            }
            _ => {}
        }
        loop {
            let (m, c) = self.parse_term()?;
            poly.add_term(m, c * Complex64::new(sign, 0.0));
            self.skip_ws();
            match self.peek() {
                None => break,
                Some('+') => {
                    sign = 1.0;
                    self.pos += 1;
                }
                Some('-') => {
                    sign = -1.0;
                    self.pos += 1;
                }
                Some(other) => return Err(self.err(format!("unexpected `{}`", other))),
            }
        }
        Ok(poly)
    }

    fn parse_term(&mut self) -> Result<(Monomial, Complex64)> {
        self.skip_ws();
        let mut coeff: Option<f64> = None;
        let mut exps = vec![0u32; self.vars.len()];
        let mut any = false;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(c) if c.is_ascii_digit() || c == '.' => {
                    let v = self.parse_number()?;
                    if coeff.is_some() || any {
                        // A second numeric factor: fold it in.
                        coeff = Some(coeff.unwrap_or(1.0) * v);
                    } else {
                        coeff = Some(v);
                    }
                    any = true;
                }
                Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                    let (idx, pow) = self.parse_var_pow()?;
                    exps[idx] = exps[idx]
                        .checked_add(pow)
                        .ok_or_else(|| self.err("exponent overflow"))?;
                    any = true;
                }
                Some('*') => {
                    self.pos += 1;
                    continue;
                }
                _ => break,
            }
            // Optional explicit `*` between factors.
            self.skip_ws();
            if self.peek() == Some('*') {
                self.pos += 1;
            }
        }
        if !any {
            return Err(self.err("expected a term"));
        }
        Ok((
            Monomial(exps),
            Complex64::new(coeff.unwrap_or(1.0), 0.0),
        ))
    }

    fn parse_number(&mut self) -> Result<f64> {
        let start = self.pos;
        let mut seen_digit = false;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || c == '.' {
                seen_digit |= c.is_ascii_digit();
                self.pos += 1;
            } else if (c == 'e' || c == 'E') && seen_digit {
                // Exponent only if followed by digits (else it is a variable).
                let save = self.pos;
                self.pos += 1;
                if self.peek() == Some('+') || self.peek() == Some('-') {
                    self.pos += 1;
                }
                if matches!(self.peek(), Some(d) if d.is_ascii_digit()) {
                    while matches!(self.peek(), Some(d) if d.is_ascii_digit()) {
                        self.pos += 1;
                    }
                } else {
                    self.pos = save;
                    break;
                }
            } else {
                break;
            }
        }
        let s = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        s.parse()
            .map_err(|_| self.err(format!("bad number `{}`", s)))
    }

    fn parse_var_pow(&mut self) -> Result<(usize, u32)> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        let name = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        let idx = self
            .vars
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::UnknownVariable {
                name: name.to_string(),
                pos: start,
            })?;
        self.skip_ws();
        let mut pow = 1u32;
        if self.peek() == Some('^') {
            self.pos += 1;
            self.skip_ws();
            let dstart = self.pos;
            while matches!(self.peek(), Some(d) if d.is_ascii_digit()) {
                self.pos += 1;
            }
            if dstart == self.pos {
                return Err(self.err("expected an integer exponent after `^`"));
            }
            let s = std::str::from_utf8(&self.bytes[dstart..self.pos]).unwrap();
            pow = s
                .parse()
                .map_err(|_| self.err(format!("bad exponent `{}`", s)))?;
        }
        Ok((idx, pow))
    }
}

// ── Monomial supports (fewnomial coefficient spaces) ─────────────────

/// Ordered list of distinct exponent tuples, defining a coefficient
/// space of polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialSupport {
    vars: Vec<String>,
    monomials: Vec<Monomial>,
}

impl MonomialSupport {
    pub fn new(vars: &[String], monomials: Vec<Monomial>) -> Result<Self> {
        for m in &monomials {
            if m.0.len() != vars.len() {
                return Err(Error::BadSupport(format!(
                    "monomial arity {} does not match {} variables",
                    m.0.len(),
                    vars.len()
                )));
            }
        }
        for i in 0..monomials.len() {
            for j in (i + 1)..monomials.len() {
                if monomials[i] == monomials[j] {
                    return Err(Error::BadSupport("duplicate monomial".into()));
                }
            }
        }
        Ok(Self {
            vars: vars.to_vec(),
            monomials,
        })
    }

    /// Dense univariate support 1, x, ..., x^deg.
    pub fn dense_univariate(var: &str, deg: u32) -> Self {
        Self {
            vars: vec![var.to_string()],
            monomials: (0..=deg).map(|e| Monomial(vec![e])).collect(),
        }
    }

    /// Parses comma-separated monomials, e.g. `1, y z, x^5`.
    pub fn parse(text: &str, vars: &[String]) -> Result<Self> {
        let mut monomials = Vec::new();
        for part in text.split(',') {
            let p = parse_poly(part, vars)?;
            if p.num_terms() != 1 {
                return Err(Error::BadSupport(format!(
                    "`{}` is not a single monomial",
                    part.trim()
                )));
            }
            let (m, c) = p.terms().next().unwrap();
            if *c != Complex64::ONE {
                return Err(Error::BadSupport(format!(
                    "`{}` carries a coefficient; supports list bare monomials",
                    part.trim()
                )));
            }
            monomials.push(m.clone());
        }
        Self::new(vars, monomials)
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn dim(&self) -> usize {
        self.monomials.len()
    }

    pub fn contains(&self, m: &Monomial) -> bool {
        self.monomials.contains(m)
    }

    /// Isometric embedding of a member polynomial as its coefficient
    /// vector in support order.
    pub fn embed(&self, p: &SparsePoly) -> Result<Vec<Complex64>> {
        let p = if *p.vars == self.vars {
            p.clone()
        } else {
            p.remap(&Arc::new(self.vars.clone()))
        };
        let mut out = vec![Complex64::ZERO; self.dim()];
        for (m, c) in p.terms() {
            match self.monomials.iter().position(|s| s == m) {
                Some(i) => out[i] = *c,
                None => {
                    return Err(Error::BadSupport(format!(
                        "term outside the declared support: {}",
                        SparsePoly::from_terms(&self.vars, vec![(m.clone(), *c)])
                    )))
                }
            }
        }
        Ok(out)
    }

    pub fn extract(&self, coords: &[Complex64]) -> Result<SparsePoly> {
        if coords.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "support extraction",
                expected: self.dim(),
                got: coords.len(),
            });
        }
        Ok(SparsePoly::from_terms(
            &self.vars,
            self.monomials
                .iter()
                .cloned()
                .zip(coords.iter().copied())
                .collect(),
        ))
    }

    /// Support of all products of members of the given supports (with
    /// each support possibly repeated by an exponent).
    pub fn product_support(factors: &[(&MonomialSupport, u32)]) -> Result<Self> {
        let vars = factors
            .first()
            .map(|(s, _)| s.vars.clone())
            .ok_or_else(|| Error::BadSupport("empty product".into()))?;
        let mut indicator = SparsePoly::constant(&vars, Complex64::ONE);
        for (s, e) in factors {
            if s.vars != vars {
                return Err(Error::BadSupport(
                    "product supports must share a variable list".into(),
                ));
            }
            let ones = SparsePoly::from_terms(
                &vars,
                s.monomials
                    .iter()
                    .map(|m| (m.clone(), Complex64::ONE))
                    .collect(),
            );
            indicator = indicator.mul(&ones.pow(*e));
        }
        Ok(indicator.support())
    }
}

// ── Polynomial systems as mappings ───────────────────────────────────

/// Builds a mapping handle for a polynomial system: evaluation plus the
/// Jacobian assembled from symbolic partial derivatives.
pub fn system_mapping(system: &[SparsePoly], vars: &[String]) -> MappingHandle {
    assert!(!system.is_empty(), "empty polynomial system");
    let n = vars.len();
    let m = system.len();
    let vars_arc = Arc::new(vars.to_vec());
    let polys: Arc<Vec<SparsePoly>> = Arc::new(
        system
            .iter()
            .map(|p| p.remap(&vars_arc))
            .collect(),
    );
    let partials: Arc<Vec<Vec<SparsePoly>>> = Arc::new(jacobian_polys(&polys, n));
    let domain = VectorSpaceLayout::new(vec![LayoutComponent::Coords(n)]);
    let codomain = VectorSpaceLayout::new(vec![LayoutComponent::Coords(m)]);
    let eval_polys = polys.clone();
    let eval = move |x: &Point| -> Result<Point> {
        let coords = x.expect_coords(0)?;
        let values: Vec<Complex64> = eval_polys.iter().map(|p| p.eval(coords)).collect();
        Ok(Point(vec![Value::Coords(values)]))
    };
    let jac = move |x: &Point| -> Result<ComplexMatrix> {
        let coords = x.expect_coords(0)?;
        let mut j = ComplexMatrix::zeros(m, n);
        for (i, row) in partials.iter().enumerate() {
            for (k, dp) in row.iter().enumerate() {
                j.set(i, k, dp.eval(coords));
            }
        }
        Ok(j)
    };
    MappingHandle::new(domain, codomain, eval).with_jacobian(jac)
}

/// Symbolic partial derivatives of each polynomial in the system.
pub fn jacobian_polys(system: &[SparsePoly], nvars: usize) -> Vec<Vec<SparsePoly>> {
    system
        .iter()
        .map(|p| (0..nvars).map(|k| p.derivative(k)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vars(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn parse_simple() {
        let v = vars(&["x"]);
        let p = parse_poly("x^2-1", &v).unwrap();
        assert_eq!(p.num_terms(), 2);
        assert_eq!(p.coefficient(&Monomial(vec![2])), c(1.0, 0.0));
        assert_eq!(p.coefficient(&Monomial(vec![0])), c(-1.0, 0.0));
    }

    #[test]
    fn parse_star_and_space_multiplication() {
        let v = vars(&["x", "y", "z"]);
        let p = parse_poly("4.899*x^3*y", &v).unwrap();
        assert_eq!(p.num_terms(), 1);
        assert_eq!(p.coefficient(&Monomial(vec![3, 1, 0])), c(4.899, 0.0));
        let q = parse_poly("4.899 x^3 y", &v).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn parse_leading_dot_coefficient() {
        let v = vars(&["y"]);
        let p = parse_poly(".296296*y^9", &v).unwrap();
        assert_eq!(p.coefficient(&Monomial(vec![9])), c(0.296296, 0.0));
    }

    #[test]
    fn parse_errors_carry_position() {
        let v = vars(&["x"]);
        match parse_poly("x^2 + w", &v) {
            Err(Error::UnknownVariable { name, pos }) => {
                assert_eq!(name, "w");
                assert_eq!(pos, 6);
            }
            other => panic!("expected unknown variable, got {other:?}"),
        }
        assert!(matches!(
            parse_poly("x^", &v),
            Err(Error::PolyParse { .. })
        ));
        assert!(matches!(parse_poly("", &v), Err(Error::PolyParse { .. })));
    }

    #[test]
    fn format_parse_round_trip() {
        let v = vars(&["x", "y"]);
        let p = parse_poly("2*x^2*y - 0.5*y + 3", &v).unwrap();
        let q = parse_poly(&p.to_string(), &v).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn arithmetic_basics() {
        let v = vars(&["x"]);
        let a = parse_poly("x+1", &v).unwrap();
        let b = parse_poly("x-1", &v).unwrap();
        assert_eq!(a.mul(&b), parse_poly("x^2-1", &v).unwrap());
        assert!(a.add(&a.neg()).is_zero());
    }

    #[test]
    fn variable_union_is_automatic() {
        let a = parse_poly("x+1", &vars(&["x"])).unwrap();
        let b = parse_poly("y", &vars(&["y"])).unwrap();
        let s = a.mul(&b);
        assert_eq!(s.num_vars(), 2);
        assert_eq!(s.eval(&[c(2.0, 0.0), c(3.0, 0.0)]), c(9.0, 0.0));
    }

    #[test]
    fn coefficients_survive_add_sub_bitwise() {
        let v = vars(&["x"]);
        let a = parse_poly("0.1*x + 0.3", &v).unwrap();
        let zero_added = a.add(&SparsePoly::zero(&v));
        assert_eq!(
            zero_added.coefficient(&Monomial(vec![1])).re.to_bits(),
            (0.1f64).to_bits()
        );
        assert_eq!(
            zero_added.coefficient(&Monomial(vec![0])).re.to_bits(),
            (0.3f64).to_bits()
        );
    }

    #[test]
    fn eval_cases() {
        let v = vars(&["x"]);
        let p = parse_poly("x^2-1", &v).unwrap();
        assert_eq!(p.eval(&[c(2.0, 0.0)]), c(3.0, 0.0));
        let q = parse_poly("5*x^3 - 2*x + 7", &v).unwrap();
        assert_eq!(q.eval(&[c(0.0, 0.0)]), c(7.0, 0.0));
    }

    #[test]
    fn derivative_and_degree() {
        let v = vars(&["x", "y"]);
        let p = parse_poly("x^2*y + 3*y", &v).unwrap();
        assert_eq!(p.derivative(0), parse_poly("2*x*y", &v).unwrap());
        assert_eq!(p.derivative(1), parse_poly("x^2 + 3", &v).unwrap());
        assert_eq!(p.degree(), 3);
        assert_eq!(p.degree_in(1), 1);
    }

    fn random_poly(rng: &mut ChaCha8Rng, v: &[String], nterms: usize, maxdeg: u32) -> SparsePoly {
        let mut p = SparsePoly::zero(v);
        for _ in 0..nterms {
            let m = Monomial(
                (0..v.len())
                    .map(|_| rng.random_range(0..=maxdeg))
                    .collect(),
            );
            p = p.add(&SparsePoly::from_terms(
                v,
                vec![(m, c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))],
            ));
        }
        p
    }

    #[test]
    fn ring_axioms_randomized() {
        let v = vars(&["x", "y"]);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..20 {
            let a = random_poly(&mut rng, &v, 4, 3);
            let b = random_poly(&mut rng, &v, 4, 3);
            let d = random_poly(&mut rng, &v, 4, 3);
            let comm = a.mul(&b).sub(&b.mul(&a));
            assert!(comm.norm() <= 1e-12 * (a.norm() * b.norm()).max(1.0));
            let assoc = a.mul(&b).mul(&d).sub(&a.mul(&b.mul(&d)));
            assert!(assoc.norm() <= 1e-12 * (a.norm() * b.norm() * d.norm()).max(1.0));
            let dist = a.mul(&b.add(&d)).sub(&a.mul(&b).add(&a.mul(&d)));
            assert!(dist.norm() <= 1e-12 * (a.norm() * (b.norm() + d.norm())).max(1.0));
        }
    }

    #[test]
    fn product_degree_adds() {
        let v = vars(&["x", "y"]);
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..10 {
            let a = random_poly(&mut rng, &v, 3, 3);
            let b = random_poly(&mut rng, &v, 3, 3);
            if a.is_zero() || b.is_zero() {
                continue;
            }
            assert_eq!(a.mul(&b).degree(), a.degree() + b.degree());
        }
    }

    #[test]
    fn support_embedding_is_isometric() {
        let v = vars(&["x"]);
        let s = MonomialSupport::dense_univariate("x", 2);
        let p = parse_poly("x^2 - 1", &v).unwrap();
        let coords = s.embed(&p).unwrap();
        assert_eq!(coords, vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let norm_coords = coords.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((norm_coords - p.norm()).abs() <= 1e-14 * p.norm());
        assert_eq!(s.extract(&coords).unwrap(), p);
    }

    #[test]
    fn support_rejects_outside_terms() {
        let v = vars(&["x"]);
        let s = MonomialSupport::dense_univariate("x", 1);
        let p = parse_poly("x^2", &v).unwrap();
        assert!(matches!(s.embed(&p), Err(Error::BadSupport(_))));
    }

    #[test]
    fn support_parse_fewnomials() {
        let v = vars(&["x", "y", "z"]);
        let s = MonomialSupport::parse("y^3, x^2 z^4", &v).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.monomials()[0], Monomial(vec![0, 3, 0]));
        assert_eq!(s.monomials()[1], Monomial(vec![2, 0, 4]));
        assert!(MonomialSupport::parse("2*x", &v).is_err());
        assert!(MonomialSupport::parse("x+y", &v).is_err());
    }

    #[test]
    fn product_support_dimension() {
        let v = vars(&["x", "y", "z"]);
        let u1 = MonomialSupport::parse("y^3, x^2 z^4", &v).unwrap();
        let u2 = MonomialSupport::parse("1, y z, x^5", &v).unwrap();
        let p = MonomialSupport::product_support(&[(&u1, 3), (&u2, 2)]).unwrap();
        assert_eq!(p.dim(), 24);
    }

    #[test]
    fn system_jacobian_circle() {
        let v = vars(&["x", "y"]);
        let f = parse_poly("x^2 + y^2 - 1", &v).unwrap();
        let h = system_mapping(&[f], &v);
        let j = h
            .jac_flat(&[c(0.3, 0.0), c(-0.7, 0.0)])
            .unwrap();
        assert_eq!(j.rows(), 1);
        assert_eq!(j.cols(), 2);
        assert!((j.get(0, 0) - c(0.6, 0.0)).norm() < 1e-14);
        assert!((j.get(0, 1) - c(-1.4, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn random_cubic_system_matches_finite_differences() {
        let v = vars(&["x", "y", "z"]);
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let system: Vec<SparsePoly> = (0..3).map(|_| random_poly(&mut rng, &v, 5, 3)).collect();
        let h = system_mapping(&system, &v);
        let x0 = Point(vec![Value::Coords(vec![
            c(0.3, 0.1),
            c(-0.2, 0.4),
            c(0.5, -0.3),
        ])]);
        let dev = h.fd_jacobian_check(&x0, 1e-6).unwrap();
        assert!(dev <= 1e-7, "finite-difference deviation {dev:e}");
    }
}
