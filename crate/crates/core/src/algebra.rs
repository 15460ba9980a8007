//! Finite-dimensional commutative associative real algebras given by
//! structure constants `e_l e_k = sum_p gamma[l][k][p] e_p`, with `e_0` the
//! identity.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;

/// Largest supported algebra dimension (dense `m^3` storage).
pub const MAX_DIM: usize = 64;

const EXACT_TOL: f64 = 1e-12;
const ASSOC_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("algebra dimension must be at least 1")]
    EmptyDimension,
    #[error("algebra dimension {0} exceeds the supported maximum of {MAX_DIM}")]
    DimensionTooLarge(usize),
    #[error("structure constant index ({l},{k},{p}) out of range for m = {m}")]
    IndexOutOfRange { l: usize, k: usize, p: usize, m: usize },
    #[error("structure constant ({l},{k},{p}) is not finite")]
    NonFinite { l: usize, k: usize, p: usize },
    #[error("commutativity violated: gamma[{l}][{k}][{p}] != gamma[{k}][{l}][{p}]")]
    CommutativityViolated { l: usize, k: usize, p: usize },
    #[error("associativity violated at (l,k,q,p) = ({l},{k},{q},{p})")]
    AssociativityViolated { l: usize, k: usize, q: usize, p: usize },
    #[error("e_0 does not act as the identity")]
    IdentityMissing,
    #[error("basis condition 1 violated: e_{0} is not invertible")]
    Condition1Violated(usize),
    #[error("basis condition 2 violated: every matrix Gamma^p is singular")]
    Condition2Violated,
    #[error("requested ptilde = {0} is out of range")]
    PtildeOutOfRange(usize),
    #[error("requested ptilde = {0} selects a singular Gamma^p")]
    PtildeDegenerate(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("element is not invertible")]
    NotInvertible,
    #[error("unknown algebra `{0}`")]
    UnknownAlgebra(String),
    #[error("malformed algebra description: {0}")]
    Malformed(String),
}

/// An element `sum_q x_q e_q` stored by its real coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AlgebraElement(Vec<f64>);

impl AlgebraElement {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self(coeffs)
    }

    pub fn zero(m: usize) -> Self {
        Self(vec![0.0; m])
    }

    /// The basis element `e_k`.
    pub fn basis(m: usize, k: usize) -> Self {
        let mut c = vec![0.0; m];
        c[k] = 1.0;
        Self(c)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|x| x * s).collect())
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, other: &Self, s: f64) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += s * b;
        }
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.0)
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.0)
    }

    /// Largest magnitude among the non-identity coefficients.
    pub fn max_abs_imaginary(&self) -> f64 {
        linalg::max_abs(self.0.get(1..).unwrap_or(&[]))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }
}

/// The raw `m x m x m` table of structure constants.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureTensor {
    m: usize,
    gamma: Vec<f64>,
}

impl StructureTensor {
    pub fn zeros(m: usize) -> Result<Self, AlgebraError> {
        if m == 0 {
            return Err(AlgebraError::EmptyDimension);
        }
        if m > MAX_DIM {
            return Err(AlgebraError::DimensionTooLarge(m));
        }
        Ok(Self { m, gamma: vec![0.0; m * m * m] })
    }

    /// Build from sparse `(l, k, p, value)` triples. Omitted entries are zero.
    /// When no triple touches index 0 in the first two slots, the identity
    /// rows `gamma[0][k][p] = gamma[k][0][p] = delta(k, p)` are filled in.
    pub fn from_triples(m: usize, triples: &[(usize, usize, usize, f64)]) -> Result<Self, AlgebraError> {
        let mut t = Self::zeros(m)?;
        let mut touches_identity = false;
        for &(l, k, p, v) in triples {
            if l >= m || k >= m || p >= m {
                return Err(AlgebraError::IndexOutOfRange { l, k, p, m });
            }
            touches_identity |= l == 0 || k == 0;
            t.set(l, k, p, v);
        }
        if !touches_identity {
            for k in 0..m {
                t.set(0, k, k, 1.0);
                t.set(k, 0, k, 1.0);
            }
        }
        Ok(t)
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, l: usize, k: usize, p: usize) -> f64 {
        self.gamma[(l * self.m + k) * self.m + p]
    }

    #[inline]
    pub fn set(&mut self, l: usize, k: usize, p: usize, v: f64) {
        self.gamma[(l * self.m + k) * self.m + p] = v;
    }

    /// Non-zero entries as `(l, k, p, value)`.
    pub fn triples(&self) -> Vec<(usize, usize, usize, f64)> {
        let m = self.m;
        let mut out = Vec::new();
        for l in 0..m {
            for k in 0..m {
                for p in 0..m {
                    let v = self.get(l, k, p);
                    if v != 0.0 {
                        out.push((l, k, p, v));
                    }
                }
            }
        }
        out
    }

    /// The matrix `Gamma^p = (gamma[l][k][p])` over `(l, k)`.
    pub fn gamma_p(&self, p: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.m, self.m, |l, k| self.get(l, k, p))
    }

    /// Product of two coefficient vectors without any validation.
    /// Coefficients of `e_k^{-1}`, or `None` when `e_k` has no inverse.
    pub fn basis_inverse(&self, k: usize) -> Option<Vec<f64>> {
        let unit = AlgebraElement::basis(self.m, 0);
        let ek = AlgebraElement::basis(self.m, k);
        let inv = linalg::solve(&self.regular_raw(ek.coeffs()), unit.coeffs())?;
        let err = self
            .mul_raw(ek.coeffs(), &inv)
            .iter()
            .zip(unit.coeffs())
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
        (err <= EXACT_TOL * self.scale()).then_some(inv)
    }

    pub(crate) fn mul_raw(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m];
        for (l, &al) in a.iter().enumerate() {
            if al == 0.0 {
                continue;
            }
            for (k, &bk) in b.iter().enumerate() {
                let w = al * bk;
                if w == 0.0 {
                    continue;
                }
                let base = (l * m + k) * m;
                for (p, o) in out.iter_mut().enumerate() {
                    *o += w * self.gamma[base + p];
                }
            }
        }
        out
    }

    /// Matrix of `x -> a x`: column `k` holds the coefficients of `a e_k`.
    pub(crate) fn regular_raw(&self, a: &[f64]) -> DMatrix<f64> {
        let m = self.m;
        DMatrix::from_fn(m, m, |p, k| (0..m).map(|l| a[l] * self.get(l, k, p)).sum())
    }

    fn scale(&self) -> f64 {
        linalg::max_abs(&self.gamma).max(1.0)
    }
}

/// Knobs for [`validate_algebra_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ValidationOptions {
    /// Force a particular `ptilde` instead of the best-conditioned choice.
    pub ptilde: Option<usize>,
}

/// A validated algebra together with the data derived from its basis.
#[derive(Debug, Clone)]
pub struct Algebra {
    tensor: StructureTensor,
    basis_inverses: Vec<AlgebraElement>,
    ptilde: usize,
    eta_ptilde: DMatrix<f64>,
    gamma_p_dets: Vec<f64>,
    gamma_p_nondegenerate: Vec<bool>,
}

/// Validate with the default `ptilde` selection.
pub fn validate_algebra(tensor: StructureTensor) -> Result<Algebra, AlgebraError> {
    validate_algebra_with(tensor, ValidationOptions::default())
}

pub fn validate_algebra_with(tensor: StructureTensor, opts: ValidationOptions) -> Result<Algebra, AlgebraError> {
    let m = tensor.m;
    for l in 0..m {
        for k in 0..m {
            for p in 0..m {
                if !tensor.get(l, k, p).is_finite() {
                    return Err(AlgebraError::NonFinite { l, k, p });
                }
            }
        }
    }
    let scale = tensor.scale();

    for l in 0..m {
        for k in (l + 1)..m {
            for p in 0..m {
                if (tensor.get(l, k, p) - tensor.get(k, l, p)).abs() > EXACT_TOL * scale {
                    return Err(AlgebraError::CommutativityViolated { l, k, p });
                }
            }
        }
    }

    for k in 0..m {
        for p in 0..m {
            let delta = if k == p { 1.0 } else { 0.0 };
            if (tensor.get(0, k, p) - delta).abs() > EXACT_TOL * scale {
                return Err(AlgebraError::IdentityMissing);
            }
        }
    }

    // (e_l e_k) e_q == e_l (e_k e_q)
    let assoc_tol = ASSOC_TOL * scale * scale;
    for l in 0..m {
        for k in 0..m {
            for q in 0..m {
                for p in 0..m {
                    let lhs: f64 = (0..m).map(|r| tensor.get(l, k, r) * tensor.get(r, q, p)).sum();
                    let rhs: f64 = (0..m).map(|r| tensor.get(k, q, r) * tensor.get(l, r, p)).sum();
                    if (lhs - rhs).abs() > assoc_tol {
                        return Err(AlgebraError::AssociativityViolated { l, k, q, p });
                    }
                }
            }
        }
    }

    let mut basis_inverses = Vec::with_capacity(m);
    for k in 0..m {
        let inv = tensor.basis_inverse(k).ok_or(AlgebraError::Condition1Violated(k))?;
        basis_inverses.push(AlgebraElement::new(inv));
    }

    let mut dets = Vec::with_capacity(m);
    let mut nondegenerate = Vec::with_capacity(m);
    let mut best: Option<(usize, f64)> = None;
    for p in 0..m {
        let g = tensor.gamma_p(p);
        let det = g.determinant();
        let ok = !linalg::is_degenerate(&g);
        dets.push(det);
        nondegenerate.push(ok);
        if ok {
            let score = det.abs() / linalg::operator_norm(&g).powi(m as i32);
            match best {
                Some((_, s)) if score <= s * (1.0 + 1e-12) => {}
                _ => best = Some((p, score)),
            }
        }
    }

    let ptilde = match opts.ptilde {
        Some(p) if p >= m => return Err(AlgebraError::PtildeOutOfRange(p)),
        Some(p) if !nondegenerate[p] => return Err(AlgebraError::PtildeDegenerate(p)),
        Some(p) => p,
        None => best.ok_or(AlgebraError::Condition2Violated)?.0,
    };
    let eta_ptilde = linalg::inverse(&tensor.gamma_p(ptilde)).ok_or(AlgebraError::Condition2Violated)?;

    Ok(Algebra {
        tensor,
        basis_inverses,
        ptilde,
        eta_ptilde,
        gamma_p_dets: dets,
        gamma_p_nondegenerate: nondegenerate,
    })
}

impl Algebra {
    pub fn dim(&self) -> usize {
        self.tensor.m
    }

    pub fn tensor(&self) -> &StructureTensor {
        &self.tensor
    }

    /// `e_k^{-1}` for every basis element.
    pub fn basis_inverses(&self) -> &[AlgebraElement] {
        &self.basis_inverses
    }

    pub fn ptilde(&self) -> usize {
        self.ptilde
    }

    /// `(Gamma^{ptilde})^{-1}`.
    pub fn eta_ptilde(&self) -> &DMatrix<f64> {
        &self.eta_ptilde
    }

    /// `det Gamma^p` for each `p`.
    pub fn gamma_p_dets(&self) -> &[f64] {
        &self.gamma_p_dets
    }

    /// Indices `p` whose `Gamma^p` passes the singularity threshold.
    pub fn nondegenerate_indices(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&p| self.gamma_p_nondegenerate[p]).collect()
    }

    /// `(Gamma^p)^{-1}` for an arbitrary nondegenerate `p`.
    pub fn eta_for(&self, p: usize) -> Result<DMatrix<f64>, AlgebraError> {
        if p >= self.dim() {
            return Err(AlgebraError::PtildeOutOfRange(p));
        }
        if p == self.ptilde {
            return Ok(self.eta_ptilde.clone());
        }
        if !self.gamma_p_nondegenerate[p] {
            return Err(AlgebraError::PtildeDegenerate(p));
        }
        linalg::inverse(&self.tensor.gamma_p(p)).ok_or(AlgebraError::PtildeDegenerate(p))
    }

    pub fn one(&self) -> AlgebraElement {
        AlgebraElement::basis(self.dim(), 0)
    }

    pub fn zero(&self) -> AlgebraElement {
        AlgebraElement::zero(self.dim())
    }

    fn check_dim(&self, a: &AlgebraElement) -> Result<(), AlgebraError> {
        if a.dim() != self.dim() {
            return Err(AlgebraError::DimensionMismatch { expected: self.dim(), got: a.dim() });
        }
        Ok(())
    }

    pub fn mul(&self, a: &AlgebraElement, b: &AlgebraElement) -> Result<AlgebraElement, AlgebraError> {
        self.check_dim(a)?;
        self.check_dim(b)?;
        Ok(self.mul_unchecked(a, b))
    }

    /// Product for elements already known to have dimension `m`.
    pub(crate) fn mul_unchecked(&self, a: &AlgebraElement, b: &AlgebraElement) -> AlgebraElement {
        AlgebraElement(self.tensor.mul_raw(&a.0, &b.0))
    }

    pub fn regular_representation(&self, a: &AlgebraElement) -> Result<DMatrix<f64>, AlgebraError> {
        self.check_dim(a)?;
        Ok(self.tensor.regular_raw(&a.0))
    }

    /// Solves `M(a) x = e_0`.
    pub fn invert(&self, a: &AlgebraElement) -> Result<AlgebraElement, AlgebraError> {
        let rep = self.regular_representation(a)?;
        linalg::solve(&rep, self.one().coeffs())
            .map(AlgebraElement)
            .ok_or(AlgebraError::NotInvertible)
    }
}

/// Standard multiplication tables: `real`, `complex`, `hyperbolic`, `dual`,
/// `bicomplex`, and `direct-product(a,b)` (the tensor product of two tables,
/// basis `e_i (x) f_j` at index `i + m_a * j`).
pub fn builtin_algebra(name: &str) -> Result<StructureTensor, AlgebraError> {
    let name = name.trim();
    match name {
        "real" => StructureTensor::from_triples(1, &[]),
        "complex" => StructureTensor::from_triples(2, &[(1, 1, 0, -1.0)]),
        "hyperbolic" => StructureTensor::from_triples(2, &[(1, 1, 0, 1.0)]),
        "dual" => StructureTensor::from_triples(2, &[]),
        "bicomplex" => builtin_algebra("direct-product(complex,complex)"),
        _ => {
            let inner = name
                .strip_prefix("direct-product(")
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| AlgebraError::UnknownAlgebra(name.to_string()))?;
            let (a, b) = split_top_level(inner).ok_or_else(|| AlgebraError::UnknownAlgebra(name.to_string()))?;
            tensor_product(&builtin_algebra(a)?, &builtin_algebra(b)?)
        }
    }
}

fn split_top_level(s: &str) -> Option<(&str, &str)> {
    let mut depth = 0i32;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => return Some((&s[..i], &s[i + 1..])),
            _ => {}
        }
    }
    None
}

fn tensor_product(a: &StructureTensor, b: &StructureTensor) -> Result<StructureTensor, AlgebraError> {
    let (ma, mb) = (a.dim(), b.dim());
    let mut t = StructureTensor::zeros(ma * mb)?;
    let idx = |i: usize, j: usize| i + ma * j;
    for l1 in 0..ma {
        for l2 in 0..mb {
            for k1 in 0..ma {
                for k2 in 0..mb {
                    for p1 in 0..ma {
                        let x = a.get(l1, k1, p1);
                        if x == 0.0 {
                            continue;
                        }
                        for p2 in 0..mb {
                            let y = b.get(l2, k2, p2);
                            if y != 0.0 {
                                t.set(idx(l1, l2), idx(k1, k2), idx(p1, p2), x * y);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(t)
}

/// JSON description of an algebra: `{"builtin": "complex"}` or
/// `{"m": 2, "gamma": [[l, k, p, value], ...]}`, with optional `"ptilde"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<(usize, usize, usize, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ptilde: Option<usize>,
}

impl AlgebraSpec {
    pub fn builtin(name: &str) -> Self {
        Self { builtin: Some(name.to_string()), m: None, gamma: None, ptilde: None }
    }

    pub fn tensor(&self) -> Result<StructureTensor, AlgebraError> {
        match (&self.builtin, self.m, &self.gamma) {
            (Some(name), None, None) => builtin_algebra(name),
            (None, Some(m), Some(triples)) => StructureTensor::from_triples(m, triples),
            _ => Err(AlgebraError::Malformed(
                "expected either \"builtin\" or both \"m\" and \"gamma\"".into(),
            )),
        }
    }

    /// Build and validate, honoring the `ptilde` override.
    pub fn build(&self) -> Result<Algebra, AlgebraError> {
        validate_algebra_with(self.tensor()?, ValidationOptions { ptilde: self.ptilde })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alg(name: &str) -> Algebra {
        validate_algebra(builtin_algebra(name).unwrap()).unwrap()
    }

    fn el(c: &[f64]) -> AlgebraElement {
        AlgebraElement::new(c.to_vec())
    }

    #[test]
    fn complex_gamma_matrices_and_ptilde() {
        let a = alg("complex");
        let g0 = a.tensor().gamma_p(0);
        let g1 = a.tensor().gamma_p(1);
        assert_eq!(g0, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]));
        assert_eq!(g1, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert_eq!(a.gamma_p_dets(), &[-1.0, -1.0]);
        assert_eq!(a.ptilde(), 0);
        assert_eq!(a.nondegenerate_indices(), vec![0, 1]);
    }

    #[test]
    fn builtin_tables() {
        let c = builtin_algebra("complex").unwrap();
        assert_eq!(c.dim(), 2);
        assert_eq!(c.get(1, 1, 0), -1.0);
        assert_eq!(c.get(1, 0, 1), 1.0);
        assert_eq!(c.get(0, 1, 1), 1.0);
        assert_eq!(c.get(1, 1, 1), 0.0);
        let h = builtin_algebra("hyperbolic").unwrap();
        assert_eq!(h.get(1, 1, 0), 1.0);
        let d = builtin_algebra("dual").unwrap();
        assert_eq!(d.get(1, 1, 0), 0.0);
        assert_eq!(d.get(1, 1, 1), 0.0);
        assert!(matches!(builtin_algebra("octonion"), Err(AlgebraError::UnknownAlgebra(_))));
        assert_eq!(builtin_algebra("direct-product(complex,direct-product(hyperbolic,real))").unwrap().dim(), 4);
    }

    #[test]
    fn dual_numbers_fail_condition_one() {
        let err = validate_algebra(builtin_algebra("dual").unwrap()).unwrap_err();
        assert_eq!(err, AlgebraError::Condition1Violated(1));
    }

    #[test]
    fn one_sided_perturbation_breaks_commutativity() {
        let mut t = builtin_algebra("complex").unwrap();
        t.set(1, 0, 1, 1.5);
        assert!(matches!(validate_algebra(t), Err(AlgebraError::CommutativityViolated { .. })));
    }

    #[test]
    fn missing_identity_detected() {
        let t = StructureTensor::from_triples(2, &[(0, 0, 0, 1.0), (1, 1, 1, 1.0)]).unwrap();
        assert_eq!(validate_algebra(t).unwrap_err(), AlgebraError::IdentityMissing);
    }

    #[test]
    fn identity_autofill_only_when_omitted() {
        let t = StructureTensor::from_triples(2, &[(1, 1, 0, -1.0)]).unwrap();
        assert_eq!(t, builtin_algebra("complex").unwrap());
    }

    #[test]
    fn rejects_large_dimension() {
        assert_eq!(StructureTensor::zeros(65).unwrap_err(), AlgebraError::DimensionTooLarge(65));
        assert_eq!(StructureTensor::zeros(0).unwrap_err(), AlgebraError::EmptyDimension);
    }

    #[test]
    fn multiplication_examples() {
        let c = alg("complex");
        assert_eq!(c.mul(&el(&[0.0, 1.0]), &el(&[0.0, 1.0])).unwrap(), el(&[-1.0, 0.0]));
        let h = alg("hyperbolic");
        assert_eq!(h.mul(&el(&[1.0, 1.0]), &el(&[1.0, -1.0])).unwrap(), el(&[0.0, 0.0]));
        let b = alg("bicomplex");
        let a = el(&[0.3, -1.2, 2.0, 0.7]);
        assert_eq!(b.mul(&a, &b.one()).unwrap(), a);
        assert!(matches!(c.mul(&el(&[1.0]), &el(&[1.0, 0.0])), Err(AlgebraError::DimensionMismatch { .. })));
    }

    #[test]
    fn regular_representation_examples() {
        let c = alg("complex");
        let m = c.regular_representation(&el(&[2.0, 3.0])).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[2.0, -3.0, 3.0, 2.0]));
        assert_eq!(c.regular_representation(&c.one()).unwrap(), DMatrix::identity(2, 2));
        let h = alg("hyperbolic");
        let m = h.regular_representation(&el(&[1.0, 1.0])).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]));
        assert!(linalg::is_degenerate(&m));
    }

    #[test]
    fn inversion_examples() {
        let c = alg("complex");
        let inv = c.invert(&el(&[0.0, 1.0])).unwrap();
        assert!((inv.coeffs()[0]).abs() < 1e-15 && (inv.coeffs()[1] + 1.0).abs() < 1e-15);
        let b = alg("bicomplex");
        let inv = b.invert(&AlgebraElement::basis(4, 3)).unwrap();
        for (x, y) in inv.coeffs().iter().zip([0.0, 0.0, 0.0, 1.0]) {
            assert!((x - y).abs() < 1e-15);
        }
        let h = alg("hyperbolic");
        assert_eq!(h.invert(&el(&[1.0, 1.0])).unwrap_err(), AlgebraError::NotInvertible);
        assert_eq!(c.invert(&c.zero()).unwrap_err(), AlgebraError::NotInvertible);
    }

    #[test]
    fn bicomplex_basis_all_invertible() {
        let b = alg("bicomplex");
        for (k, inv) in b.basis_inverses().iter().enumerate() {
            let prod = b.mul(&AlgebraElement::basis(4, k), inv).unwrap();
            assert!((prod.coeffs()[0] - 1.0).abs() < 1e-12);
            assert!(prod.max_abs_imaginary() < 1e-12);
        }
    }

    #[test]
    fn all_singular_gamma_p_fails_condition_two() {
        // R^3 in the basis 1, (-1,-1,1), (-1,1,-1): e1^2 = e2^2 = 1, e1 e2 = -1 - e1 - e2.
        let t = StructureTensor::from_triples(
            3,
            &[
                (1, 1, 0, 1.0),
                (2, 2, 0, 1.0),
                (1, 2, 0, -1.0),
                (1, 2, 1, -1.0),
                (1, 2, 2, -1.0),
                (2, 1, 0, -1.0),
                (2, 1, 1, -1.0),
                (2, 1, 2, -1.0),
            ],
        )
        .unwrap();
        assert_eq!(validate_algebra(t).unwrap_err(), AlgebraError::Condition2Violated);
    }

    #[test]
    fn ptilde_override() {
        let t = builtin_algebra("complex").unwrap();
        let a = validate_algebra_with(t.clone(), ValidationOptions { ptilde: Some(1) }).unwrap();
        assert_eq!(a.ptilde(), 1);
        assert_eq!(*a.eta_ptilde(), DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert_eq!(
            validate_algebra_with(t, ValidationOptions { ptilde: Some(2) }).unwrap_err(),
            AlgebraError::PtildeOutOfRange(2)
        );
    }

    #[test]
    fn ptilde_selection_skips_singular_gamma_p() {
        // R^3 in the basis 1, (-1,-1,1), (-1,2,1): only Gamma^1 is nondegenerate.
        let t = StructureTensor::from_triples(
            3,
            &[
                (1, 1, 0, 1.0),
                (1, 2, 0, 1.0),
                (1, 2, 1, 1.0),
                (1, 2, 2, -1.0),
                (2, 1, 0, 1.0),
                (2, 1, 1, 1.0),
                (2, 1, 2, -1.0),
                (2, 2, 0, 1.0),
                (2, 2, 1, -1.0),
                (2, 2, 2, 1.0),
            ],
        )
        .unwrap();
        let a = validate_algebra(t.clone()).unwrap();
        assert_eq!(a.ptilde(), 1);
        assert_eq!(a.nondegenerate_indices(), vec![1]);
        assert_eq!(
            validate_algebra_with(t, ValidationOptions { ptilde: Some(0) }).unwrap_err(),
            AlgebraError::PtildeDegenerate(0)
        );
        assert_eq!(a.eta_for(2).unwrap_err(), AlgebraError::PtildeDegenerate(2));
    }

    #[test]
    fn spec_json_forms() {
        let s: AlgebraSpec = serde_json::from_str(r#"{"builtin": "complex", "ptilde": 1}"#).unwrap();
        assert_eq!(s.build().unwrap().ptilde(), 1);
        let s: AlgebraSpec = serde_json::from_str(r#"{"m": 2, "gamma": [[1, 1, 0, 1.0]]}"#).unwrap();
        assert_eq!(s.tensor().unwrap(), builtin_algebra("hyperbolic").unwrap());
        assert!(serde_json::from_str::<AlgebraSpec>(r#"{"builtin": "complex", "extra": 1}"#).is_err());
        let s: AlgebraSpec = serde_json::from_str(r#"{"m": 2}"#).unwrap();
        assert!(matches!(s.tensor(), Err(AlgebraError::Malformed(_))));
    }
}
