//! Coordinate frames `Gamma`, bold components `z^l`, and the formal partial
//! derivatives they induce.
//!
//! A frame is an invertible `m x m` real matrix whose first row is all ones.
//! For an element `z = sum_q x_q e_q` the bold component `z^l` scales each
//! summand by row `l` of the frame: `z^l = sum_q gamma[l][q] x_q e_q`, so
//! `z^0 = z`. Inverting with `eta = Gamma^{-1}` gives
//! `x_l = e_l^{-1} sum_p eta[l][p] z^p`, which is what turns real
//! linear and quadratic forms into algebra-valued ones.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{Algebra, AlgebraElement, MAX_DIM};
use crate::linalg;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GammaError {
    #[error("frame dimension {0} exceeds the supported maximum of {MAX_DIM}")]
    DimensionTooLarge(usize),
    #[error("frame must be a non-empty square matrix")]
    NotSquare,
    #[error("first row of the frame must be all ones")]
    FirstRowNotOnes,
    #[error("frame matrix is singular")]
    Singular,
    #[error("hadamard frame requires a power-of-two dimension, got {0}")]
    NotPowerOfTwo(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("bold components are not consistent with a real vector (slot coefficient {l}, residual {residual:e})")]
    InconsistentBold { l: usize, residual: f64 },
    #[error("real Hessian is not symmetric (deviation {0:e})")]
    AsymmetricInput(f64),
}

/// Round-off in the formal forms grows like `cond(Gamma)^2`.
pub const RANDOM_MAX_COND: f64 = 100.0;

/// An invertible frame `Gamma` with first row `(1, ..., 1)` and its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaFrame {
    gamma: DMatrix<f64>,
    eta: DMatrix<f64>,
}

impl GammaFrame {
    pub fn new(gamma: DMatrix<f64>) -> Result<Self, GammaError> {
        let m = gamma.nrows();
        if m == 0 || gamma.ncols() != m {
            return Err(GammaError::NotSquare);
        }
        if m > MAX_DIM {
            return Err(GammaError::DimensionTooLarge(m));
        }
        if gamma.row(0).iter().any(|&v| v != 1.0) {
            return Err(GammaError::FirstRowNotOnes);
        }
        let eta = linalg::inverse(&gamma).ok_or(GammaError::Singular)?;
        Ok(Self { gamma, eta })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, GammaError> {
        let m = rows.len();
        if m == 0 || rows.iter().any(|r| r.len() != m) {
            return Err(GammaError::NotSquare);
        }
        Self::new(DMatrix::from_fn(m, m, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn gamma_matrix(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn eta(&self) -> &DMatrix<f64> {
        &self.eta
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.gamma.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    /// A frame with first row ones and remaining entries uniform in `[-1, 1]`,
    /// redrawn until its condition number is at most [`RANDOM_MAX_COND`].
    pub fn random<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<Self, GammaError> {
        if m > MAX_DIM {
            return Err(GammaError::DimensionTooLarge(m));
        }
        loop {
            let g = DMatrix::from_fn(m, m, |i, _| if i == 0 { 1.0 } else { rng.random_range(-1.0..=1.0) });
            let sv = linalg::singular_values(&g);
            let (hi, lo) = (sv.iter().cloned().fold(0.0, f64::max), sv.iter().cloned().fold(f64::INFINITY, f64::min));
            if lo > 0.0 && hi / lo <= RANDOM_MAX_COND {
                if let Ok(frame) = Self::new(g) {
                    return Ok(frame);
                }
            }
        }
    }
}

/// Sign pattern of the Sylvester-Hadamard matrix of order `2^k`, built by
/// `G_k = [[G_{k-1}, G_{k-1}], [G_{k-1}, -G_{k-1}]]` from `G_0 = [1]`.
pub fn hadamard_signs(k: u32) -> Result<Vec<Vec<i8>>, GammaError> {
    let size = 1usize.checked_shl(k).filter(|&s| s <= MAX_DIM).ok_or(GammaError::DimensionTooLarge(usize::MAX))?;
    let mut h = vec![vec![1i8]];
    while h.len() < size {
        let half = h.len();
        let mut next = vec![vec![0i8; 2 * half]; 2 * half];
        for i in 0..half {
            for j in 0..half {
                let v = h[i][j];
                next[i][j] = v;
                next[i][j + half] = v;
                next[i + half][j] = v;
                next[i + half][j + half] = -v;
            }
        }
        h = next;
    }
    Ok(h)
}

/// The Hadamard frame `Gamma_k` with `eta = 2^{-k} Gamma_k`.
pub fn hadamard_gamma(k: u32) -> Result<GammaFrame, GammaError> {
    let signs = hadamard_signs(k)?;
    let m = signs.len();
    let gamma = DMatrix::from_fn(m, m, |i, j| f64::from(signs[i][j]));
    let eta = gamma.scale(1.0 / m as f64);
    Ok(GammaFrame { gamma, eta })
}

/// Vandermonde frame on the nodes `1..=m`: `gamma[l][q] = (q + 1)^l`.
pub fn vandermonde_gamma(m: usize) -> Result<GammaFrame, GammaError> {
    if m > MAX_DIM {
        return Err(GammaError::DimensionTooLarge(m));
    }
    GammaFrame::new(DMatrix::from_fn(m, m, |l, q| ((q + 1) as f64).powi(l as i32)))
}

/// Hadamard for `m = 2^k`, Vandermonde otherwise.
pub fn default_gamma(m: usize) -> Result<GammaFrame, GammaError> {
    if m > MAX_DIM {
        return Err(GammaError::DimensionTooLarge(m));
    }
    if m.is_power_of_two() {
        hadamard_gamma(m.trailing_zeros())
    } else {
        vandermonde_gamma(m)
    }
}

/// JSON form of a frame choice: `"hadamard"`, `"vandermonde"`, or explicit rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSpec {
    Named(GammaKind),
    Explicit(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaKind {
    Hadamard,
    Vandermonde,
}

impl GammaSpec {
    pub fn build(&self, m: usize) -> Result<GammaFrame, GammaError> {
        match self {
            GammaSpec::Named(GammaKind::Hadamard) => {
                if !m.is_power_of_two() {
                    return Err(GammaError::NotPowerOfTwo(m));
                }
                hadamard_gamma(m.trailing_zeros())
            }
            GammaSpec::Named(GammaKind::Vandermonde) => vandermonde_gamma(m),
            GammaSpec::Explicit(rows) => {
                let frame = GammaFrame::from_rows(rows)?;
                check(m, frame.dim())?;
                Ok(frame)
            }
        }
    }
}

/// Resolve an optional spec, falling back to [`default_gamma`].
pub fn resolve_gamma(spec: Option<&GammaSpec>, m: usize) -> Result<GammaFrame, GammaError> {
    match spec {
        Some(s) => s.build(m),
        None => default_gamma(m),
    }
}

fn check(expected: usize, got: usize) -> Result<(), GammaError> {
    if expected == got {
        Ok(())
    } else {
        Err(GammaError::DimensionMismatch { expected, got })
    }
}

/// Bold components of every slot of a point in `A^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoldVector {
    slots: Vec<Vec<AlgebraElement>>,
}

impl BoldVector {
    /// Bold components of the real vector `x = (x^1_0, ..., x^n_{m-1})`.
    pub fn from_real(algebra: &Algebra, frame: &GammaFrame, x: &[f64]) -> Result<Self, GammaError> {
        let m = algebra.dim();
        check(m, frame.dim())?;
        if x.len() % m != 0 {
            return Err(GammaError::DimensionMismatch { expected: m * x.len().div_ceil(m), got: x.len() });
        }
        let slots = x
            .chunks(m)
            .map(|chunk| bold_components(algebra, frame, &AlgebraElement::new(chunk.to_vec())))
            .collect::<Result<_, _>>()?;
        Ok(Self { slots })
    }

    pub fn from_slots(slots: Vec<Vec<AlgebraElement>>) -> Self {
        Self { slots }
    }

    pub fn n(&self) -> usize {
        self.slots.len()
    }

    /// `z_j^p` for 0-based slot `j`.
    pub fn get(&self, j: usize, p: usize) -> &AlgebraElement {
        &self.slots[j][p]
    }

    pub fn slots(&self) -> &[Vec<AlgebraElement>] {
        &self.slots
    }
}

/// `z^l = sum_q gamma[l][q] x_q e_q` for `l = 0..m`.
pub fn bold_components(algebra: &Algebra, frame: &GammaFrame, z: &AlgebraElement) -> Result<Vec<AlgebraElement>, GammaError> {
    let m = algebra.dim();
    check(m, frame.dim())?;
    check(m, z.dim())?;
    let g = frame.gamma_matrix();
    Ok((0..m)
        .map(|l| AlgebraElement::new(z.coeffs().iter().enumerate().map(|(q, &x)| g[(l, q)] * x).collect()))
        .collect())
}

/// Recover `x_l` as the `e_0` coefficient of `e_l^{-1} sum_p eta[l][p] z^p`.
pub fn reconstruct_real(algebra: &Algebra, frame: &GammaFrame, bold: &[AlgebraElement]) -> Result<Vec<f64>, GammaError> {
    let m = algebra.dim();
    check(m, frame.dim())?;
    check(m, bold.len())?;
    for z in bold {
        check(m, z.dim())?;
    }
    let eta = frame.eta();
    let scale = bold.iter().map(AlgebraElement::max_abs).fold(1.0, f64::max);
    let mut x = Vec::with_capacity(m);
    for l in 0..m {
        let mut acc = AlgebraElement::zero(m);
        for (p, zp) in bold.iter().enumerate() {
            acc.add_scaled(zp, eta[(l, p)]);
        }
        let real = algebra.mul_unchecked(&algebra.basis_inverses()[l], &acc);
        let residual = real.max_abs_imaginary();
        if residual > 1e-8 * scale {
            return Err(GammaError::InconsistentBold { l, residual });
        }
        x.push(real.coeffs()[0]);
    }
    Ok(x)
}

/// Algebra-valued first derivatives `d rho / d z_j^p`, slot-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FormalGradient {
    n: usize,
    m: usize,
    entries: Vec<AlgebraElement>,
}

impl FormalGradient {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `a_j^p` for 0-based slot `j`.
    pub fn get(&self, j: usize, p: usize) -> &AlgebraElement {
        &self.entries[j * self.m + p]
    }

    pub fn entries(&self) -> &[AlgebraElement] {
        &self.entries
    }
}

/// Algebra-valued second derivatives `d^2 rho / d z_j^p d z_i^q`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormalHessian {
    n: usize,
    m: usize,
    entries: Vec<AlgebraElement>,
}

impl FormalHessian {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `a_{ji}^{pq}` for 0-based slots `j`, `i`.
    pub fn get(&self, j: usize, p: usize, i: usize, q: usize) -> &AlgebraElement {
        let nm = self.n * self.m;
        &self.entries[(j * self.m + p) * nm + i * self.m + q]
    }
}

/// `a_j^p = sum_l eta[l][p] * g[j][l] * e_l^{-1}`, where `real_grad` is the
/// flat gradient in `(x^1_0, ..., x^n_{m-1})` order.
pub fn formal_gradient(algebra: &Algebra, frame: &GammaFrame, real_grad: &[f64]) -> Result<FormalGradient, GammaError> {
    let m = algebra.dim();
    check(m, frame.dim())?;
    if real_grad.len() % m != 0 || real_grad.is_empty() {
        return Err(GammaError::DimensionMismatch { expected: m, got: real_grad.len() });
    }
    let n = real_grad.len() / m;
    let eta = frame.eta();
    let inv = algebra.basis_inverses();
    let mut entries = Vec::with_capacity(n * m);
    for j in 0..n {
        for p in 0..m {
            let mut a = AlgebraElement::zero(m);
            for l in 0..m {
                let w = eta[(l, p)] * real_grad[j * m + l];
                if w != 0.0 {
                    a.add_scaled(&inv[l], w);
                }
            }
            entries.push(a);
        }
    }
    Ok(FormalGradient { n, m, entries })
}

/// `a_{ji}^{pq} = sum_{l,k} eta[l][p] eta[k][q] H[(j,l),(i,k)] e_l^{-1} e_k^{-1}`.
pub fn formal_hessian(algebra: &Algebra, frame: &GammaFrame, real_hess: &DMatrix<f64>) -> Result<FormalHessian, GammaError> {
    let m = algebra.dim();
    check(m, frame.dim())?;
    let nm = real_hess.nrows();
    if nm == 0 || real_hess.ncols() != nm || nm % m != 0 {
        return Err(GammaError::DimensionMismatch { expected: m, got: nm });
    }
    let scale = real_hess.amax().max(1.0);
    let asym = (real_hess - real_hess.transpose()).amax();
    if asym > 1e-9 * scale {
        return Err(GammaError::AsymmetricInput(asym));
    }
    let n = nm / m;
    let eta = frame.eta();
    let inv = algebra.basis_inverses();
    let inv_products: Vec<AlgebraElement> = (0..m * m)
        .map(|idx| algebra.mul_unchecked(&inv[idx / m], &inv[idx % m]))
        .collect();

    let mut entries = vec![AlgebraElement::zero(m); nm * nm];
    for j in 0..n {
        for i in 0..n {
            for p in 0..m {
                for q in 0..m {
                    let mut a = AlgebraElement::zero(m);
                    for l in 0..m {
                        let el = eta[(l, p)];
                        if el == 0.0 {
                            continue;
                        }
                        for k in 0..m {
                            let w = el * eta[(k, q)] * real_hess[(j * m + l, i * m + k)];
                            if w != 0.0 {
                                a.add_scaled(&inv_products[l * m + k], w);
                            }
                        }
                    }
                    entries[(j * m + p) * nm + i * m + q] = a;
                }
            }
        }
    }
    Ok(FormalHessian { n, m, entries })
}

/// `sum_j sum_p a_j^p z_j^p`; with displacement differentials in `bold` this
/// is the first differential `d rho`.
pub fn linear_form_value(algebra: &Algebra, fg: &FormalGradient, bold: &BoldVector) -> Result<AlgebraElement, GammaError> {
    let m = algebra.dim();
    check(m, fg.m)?;
    check(fg.n, bold.n())?;
    let mut acc = AlgebraElement::zero(m);
    for j in 0..fg.n {
        for p in 0..m {
            acc.add_scaled(&algebra.mul_unchecked(fg.get(j, p), bold.get(j, p)), 1.0);
        }
    }
    Ok(acc)
}

/// `sum_{j,i} sum_{p,q} a_{ji}^{pq} z_i^q z_j^p`.
pub fn quadratic_form_value(algebra: &Algebra, fh: &FormalHessian, bold: &BoldVector) -> Result<AlgebraElement, GammaError> {
    let m = algebra.dim();
    check(m, fh.m)?;
    check(fh.n, bold.n())?;
    let n = fh.n;
    let mut acc = AlgebraElement::zero(m);
    for j in 0..n {
        for p in 0..m {
            let zjp = bold.get(j, p);
            if zjp.is_zero() {
                continue;
            }
            for i in 0..n {
                for q in 0..m {
                    let a = fh.get(j, p, i, q);
                    if a.is_zero() {
                        continue;
                    }
                    let zz = algebra.mul_unchecked(bold.get(i, q), zjp);
                    acc.add_scaled(&algebra.mul_unchecked(a, &zz), 1.0);
                }
            }
        }
    }
    Ok(acc)
}
