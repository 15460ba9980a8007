//! Algebra hyperplanes `sum_j c_j s_j = 0` in `A^n`, their embedding inside a
//! real hyperplane, and the tangent frame at a boundary point.

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{Algebra, AlgebraElement, AlgebraError};
use crate::domain::{self, DefiningFunction, DomainError};
use crate::linalg;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HyperplaneError {
    #[error("hyperplane coefficients are all zero")]
    ZeroCoefficients,
    #[error("gradient of the defining function vanishes at the anchor (norm {0:e})")]
    DegenerateGradient(f64),
    #[error("coefficient array has length {got}, not a multiple of m = {m}")]
    DimensionMismatch { m: usize, got: usize },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// `{ s : sum_j c_j s_j = 0 }` anchored at `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct AHyperplane {
    anchor: Vec<f64>,
    coeffs: Vec<AlgebraElement>,
}

impl AHyperplane {
    pub fn new(anchor: Vec<f64>, coeffs: Vec<AlgebraElement>) -> Result<Self, HyperplaneError> {
        if coeffs.iter().all(AlgebraElement::is_zero) {
            return Err(HyperplaneError::ZeroCoefficients);
        }
        Ok(Self { anchor, coeffs })
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn coeffs(&self) -> &[AlgebraElement] {
        &self.coeffs
    }
}

/// Coefficients `c_j` with components `c_k^j = sum_l eta[k][l] a_l^j`, where
/// `eta = (Gamma^{ptilde})^{-1}`. The resulting hyperplane lies inside the
/// real hyperplane `sum a_l^j s_l^j = 0`.
pub fn embed_real_hyperplane(
    algebra: &Algebra,
    a: &[f64],
    ptilde: Option<usize>,
) -> Result<Vec<AlgebraElement>, HyperplaneError> {
    let m = algebra.dim();
    if a.is_empty() || a.len() % m != 0 {
        return Err(HyperplaneError::DimensionMismatch { m, got: a.len() });
    }
    if a.iter().all(|&x| x == 0.0) {
        return Err(HyperplaneError::ZeroCoefficients);
    }
    let owned;
    let eta = match ptilde {
        Some(p) => {
            owned = algebra.eta_for(p)?;
            &owned
        }
        None => algebra.eta_ptilde(),
    };
    Ok(a.chunks(m)
        .map(|aj| AlgebraElement::new((0..m).map(|k| (0..m).map(|l| eta[(k, l)] * aj[l]).sum()).collect()))
        .collect())
}

/// `[M(c_1) | ... | M(c_n)]`, so that `C s` is the coefficient vector of
/// `sum_j c_j s_j`.
pub fn constraint_matrix(algebra: &Algebra, coeffs: &[AlgebraElement]) -> Result<DMatrix<f64>, HyperplaneError> {
    let m = algebra.dim();
    let mut out = DMatrix::zeros(m, m * coeffs.len());
    for (j, c) in coeffs.iter().enumerate() {
        let rep = algebra.regular_representation(c)?;
        out.view_mut((0, j * m), (m, m)).copy_from(&rep);
    }
    Ok(out)
}

/// The tangent algebra hyperplane at a boundary point and its real kernel.
#[derive(Debug, Clone, Serialize)]
pub struct TangentFrame {
    pub anchor: Vec<f64>,
    #[serde(skip)]
    pub coeffs: Vec<AlgebraElement>,
    #[serde(skip)]
    pub constraint: DMatrix<f64>,
    /// Orthonormal columns spanning `{ s : C s = 0 }`.
    #[serde(skip)]
    pub kernel_basis: DMatrix<f64>,
    pub kernel_dim: usize,
    pub rank: usize,
    /// Index of the `Gamma^p` used to build the coefficients.
    pub ptilde: usize,
}

impl TangentFrame {
    /// Ambient vector `B v` for kernel coordinates `v`.
    pub fn to_ambient(&self, v: &[f64]) -> Vec<f64> {
        (0..self.kernel_basis.nrows())
            .map(|r| (0..self.kernel_dim).map(|c| self.kernel_basis[(r, c)] * v[c]).sum())
            .collect()
    }

    pub fn hyperplane(&self) -> AHyperplane {
        AHyperplane { anchor: self.anchor.clone(), coeffs: self.coeffs.clone() }
    }
}

/// Tangent frame at `w` from the real gradient of `rho`.
pub fn tangent_frame(
    algebra: &Algebra,
    domain: &dyn DefiningFunction,
    w: &[f64],
    ptilde: Option<usize>,
) -> Result<TangentFrame, HyperplaneError> {
    let grad = domain::gradient(domain, w)?;
    let value = domain::evaluate(domain, w)?;
    let gnorm = linalg::norm(&grad);
    if gnorm <= 1e-8 * (1.0 + value.abs()) {
        return Err(HyperplaneError::DegenerateGradient(gnorm));
    }
    let coeffs = embed_real_hyperplane(algebra, &grad, ptilde)?;
    let constraint = constraint_matrix(algebra, &coeffs)?;
    let (kernel_basis, rank) = linalg::null_space(&constraint);
    Ok(TangentFrame {
        anchor: w.to_vec(),
        coeffs,
        constraint,
        kernel_dim: kernel_basis.ncols(),
        kernel_basis,
        rank,
        ptilde: ptilde.unwrap_or(algebra.ptilde()),
    })
}

/// Whether the displacement `s` satisfies `sum_j c_j s_j = 0`.
pub fn contains(algebra: &Algebra, hyperplane: &AHyperplane, s: &[f64]) -> Result<bool, HyperplaneError> {
    let m = algebra.dim();
    if s.len() != m * hyperplane.coeffs.len() {
        return Err(HyperplaneError::DimensionMismatch { m, got: s.len() });
    }
    let mut acc = algebra.zero();
    for (c, sj) in hyperplane.coeffs.iter().zip(s.chunks(m)) {
        acc.add_scaled(&algebra.mul(c, &AlgebraElement::new(sj.to_vec()))?, 1.0);
    }
    let cnorm = hyperplane.coeffs.iter().map(|c| c.norm() * c.norm()).sum::<f64>().sqrt();
    Ok(acc.norm() <= 1e-9 * cnorm * linalg::norm(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{builtin_algebra, validate_algebra};
    use crate::domain::BuiltinDomain;

    fn alg(name: &str) -> Algebra {
        validate_algebra(builtin_algebra(name).unwrap()).unwrap()
    }

    #[test]
    fn complex_embedding_is_conjugate_coefficient() {
        let c = alg("complex");
        let (a0, a1) = (0.7, -1.9);
        let coeffs = embed_real_hyperplane(&c, &[a0, a1], None).unwrap();
        assert_eq!(coeffs[0].coeffs(), &[a0, -a1]);
        let s = AlgebraElement::new(vec![0.3, 2.5]);
        let prod = c.mul(&coeffs[0], &s).unwrap();
        assert!((prod.coeffs()[0] - (a0 * 0.3 + a1 * 2.5)).abs() < 1e-15);
    }

    #[test]
    fn single_entry_embedding_is_row_of_eta() {
        let b = alg("bicomplex");
        let mut a = vec![0.0; 8];
        a[0] = 1.0;
        let coeffs = embed_real_hyperplane(&b, &a, None).unwrap();
        let eta = b.eta_ptilde();
        let col0: Vec<f64> = (0..4).map(|k| eta[(k, 0)]).collect();
        assert_eq!(coeffs[0].coeffs(), col0.as_slice());
        assert!(coeffs[1].is_zero());
        assert_eq!(embed_real_hyperplane(&b, &[0.0; 8], None).unwrap_err(), HyperplaneError::ZeroCoefficients);
    }

    #[test]
    fn constraint_matrix_examples() {
        let c = alg("complex");
        let i = AlgebraElement::new(vec![0.0, 1.0]);
        let cm = constraint_matrix(&c, &[i]).unwrap();
        assert_eq!(cm, DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
        let ones = constraint_matrix(&c, &[c.one(), c.one(), c.one()]).unwrap();
        let mut expected = DMatrix::zeros(2, 6);
        for j in 0..3 {
            expected[(0, 2 * j)] = 1.0;
            expected[(1, 2 * j + 1)] = 1.0;
        }
        assert_eq!(ones, expected);
        assert_eq!(linalg::rank(&constraint_matrix(&c, &[c.zero()]).unwrap()), 0);
    }

    #[test]
    fn tangent_frame_of_complex_ball() {
        let c = alg("complex");
        let ball = BuiltinDomain::Ball { n: 2, m: 2, r: 1.0 };
        let frame = tangent_frame(&c, &ball, &[1.0, 0.0, 0.0, 0.0], None).unwrap();
        assert_eq!(frame.kernel_dim, 2);
        let proj = frame.kernel_basis.rows(0, 2).amax();
        assert!(proj < 1e-12, "kernel must lie in the second slot");
        let ball1 = BuiltinDomain::Ball { n: 1, m: 2, r: 1.0 };
        assert_eq!(tangent_frame(&c, &ball1, &[1.0, 0.0], None).unwrap().kernel_dim, 0);
    }

    #[test]
    fn hyperbolic_zero_divisor_gradient_has_larger_kernel() {
        let h = alg("hyperbolic");
        let plane = BuiltinDomain::Halfspace { m: 2, normal: vec![1.0, 1.0], offset: 0.0 };
        let frame = tangent_frame(&h, &plane, &[0.5, -0.5], None).unwrap();
        assert_eq!(frame.kernel_dim, 1);
        assert_eq!(frame.rank, 1);
    }

    #[test]
    fn degenerate_gradient_rejected() {
        let c = alg("complex");
        let ball = BuiltinDomain::Ball { n: 1, m: 2, r: 1.0 };
        assert!(matches!(
            tangent_frame(&c, &ball, &[0.0, 0.0], None),
            Err(HyperplaneError::DegenerateGradient(_))
        ));
    }

    #[test]
    fn containment_examples() {
        let c = alg("complex");
        let ball = BuiltinDomain::Ball { n: 2, m: 2, r: 1.0 };
        let w = [0.6, 0.0, 0.0, 0.8];
        let frame = tangent_frame(&c, &ball, &w, None).unwrap();
        let hp = frame.hyperplane();
        for col in 0..frame.kernel_dim {
            let s: Vec<f64> = frame.kernel_basis.column(col).iter().copied().collect();
            assert!(contains(&c, &hp, &s).unwrap());
        }
        assert!(contains(&c, &hp, &[0.0; 4]).unwrap());
        let hp = AHyperplane::new(vec![0.0; 2], vec![AlgebraElement::new(vec![0.0, 1.0])]).unwrap();
        assert!(!contains(&c, &hp, &[1.0, 0.0]).unwrap());
        assert_eq!(
            AHyperplane::new(vec![0.0; 2], vec![c.zero()]).unwrap_err(),
            HyperplaneError::ZeroCoefficients
        );
    }

    #[test]
    fn ptilde_override_threads_through() {
        let c = alg("complex");
        let ball = BuiltinDomain::Ball { n: 2, m: 2, r: 1.0 };
        let frame = tangent_frame(&c, &ball, &[0.6, 0.0, 0.0, 0.8], Some(1)).unwrap();
        assert_eq!(frame.ptilde, 1);
        assert_eq!(frame.kernel_dim, 2);
    }
}
