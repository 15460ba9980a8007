//! Domains `{rho < 0}` in `R^{mn}` given by a defining function, with
//! derivative access, Newton projection onto `{rho = 0}` and seeded boundary
//! sampling.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::linalg;

const MAX_NEWTON_ITERS: usize = 100;
const BOUNDARY_TOL: f64 = 1e-10;
const DEDUP_DIST: f64 = 1e-6;
const NUDGE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("defining function returned a non-finite value")]
    NonFiniteValue,
    #[error("point has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("boundary projection failed: {0}")]
    ProjectionFailed(String),
    #[error("only {found} of {requested} distinct boundary points found")]
    InsufficientSamples { found: usize, requested: usize },
    #[error("unknown domain `{0}`")]
    UnknownDomain(String),
    #[error("malformed monomials: {0}")]
    MalformedMonomials(String),
    #[error("malformed domain description: {0}")]
    Malformed(String),
}

/// A real-valued `C^2` function on `R^{mn}` whose negative set is the domain.
///
/// Coordinates are ordered `(x^1_0, x^1_1, ..., x^n_{m-1})`. Analytic
/// derivatives are optional; [`gradient`] and [`hessian`] fall back to central
/// differences.
pub trait DefiningFunction: Send + Sync {
    /// Number of algebra slots.
    fn n(&self) -> usize;
    /// Algebra dimension.
    fn m(&self) -> usize;
    fn value(&self, z: &[f64]) -> f64;

    fn analytic_gradient(&self, _z: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn analytic_hessian(&self, _z: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    fn ambient_dim(&self) -> usize {
        self.n() * self.m()
    }
}

fn check_point(f: &dyn DefiningFunction, z: &[f64]) -> Result<(), DomainError> {
    if z.len() != f.ambient_dim() {
        return Err(DomainError::DimensionMismatch { expected: f.ambient_dim(), got: z.len() });
    }
    if z.iter().any(|x| !x.is_finite()) {
        return Err(DomainError::NonFiniteValue);
    }
    Ok(())
}

pub fn evaluate(f: &dyn DefiningFunction, z: &[f64]) -> Result<f64, DomainError> {
    check_point(f, z)?;
    let v = f.value(z);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(DomainError::NonFiniteValue)
    }
}

pub fn gradient(f: &dyn DefiningFunction, z: &[f64]) -> Result<Vec<f64>, DomainError> {
    check_point(f, z)?;
    let g = f.analytic_gradient(z).unwrap_or_else(|| fd_gradient(f, z));
    if g.iter().all(|x| x.is_finite()) {
        Ok(g)
    } else {
        Err(DomainError::NonFiniteValue)
    }
}

/// Symmetrized Hessian `(H + H^T) / 2`.
pub fn hessian(f: &dyn DefiningFunction, z: &[f64]) -> Result<DMatrix<f64>, DomainError> {
    check_point(f, z)?;
    let h = f.analytic_hessian(z).unwrap_or_else(|| fd_hessian(f, z));
    if h.iter().any(|x| !x.is_finite()) {
        return Err(DomainError::NonFiniteValue);
    }
    Ok((&h + h.transpose()) * 0.5)
}

/// Central-difference gradient with step `eps^{1/3} (1 + |x_i|)`.
pub fn fd_gradient(f: &dyn DefiningFunction, z: &[f64]) -> Vec<f64> {
    let step = f64::EPSILON.cbrt();
    let mut x = z.to_vec();
    (0..z.len())
        .map(|i| {
            let h = step * (1.0 + z[i].abs());
            x[i] = z[i] + h;
            let fp = f.value(&x);
            x[i] = z[i] - h;
            let fm = f.value(&x);
            x[i] = z[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Central-difference Hessian with step `eps^{1/4} (1 + |x_i|)`.
pub fn fd_hessian(f: &dyn DefiningFunction, z: &[f64]) -> DMatrix<f64> {
    let step = f64::EPSILON.sqrt().sqrt();
    let dim = z.len();
    let hs: Vec<f64> = z.iter().map(|x| step * (1.0 + x.abs())).collect();
    let mut x = z.to_vec();
    let f0 = f.value(z);
    let mut out = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        x[i] = z[i] + hs[i];
        let fp = f.value(&x);
        x[i] = z[i] - hs[i];
        let fm = f.value(&x);
        x[i] = z[i];
        out[(i, i)] = (fp - 2.0 * f0 + fm) / (hs[i] * hs[i]);
        for j in (i + 1)..dim {
            let mut eval = |si: f64, sj: f64| {
                x[i] = z[i] + si * hs[i];
                x[j] = z[j] + sj * hs[j];
                let v = f.value(&x);
                x[i] = z[i];
                x[j] = z[j];
                v
            };
            let v = (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0)) / (4.0 * hs[i] * hs[j]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

fn degenerate_gradient(grad_norm: f64, value: f64) -> bool {
    grad_norm <= 1e-8 * (1.0 + value.abs())
}

/// A point with `|rho(w)|` below the boundary tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub w: Vec<f64>,
    pub residual: f64,
}

/// Damped Newton iteration `z <- z - rho(z) grad / |grad|^2` onto `{rho = 0}`.
pub fn project_to_boundary(f: &dyn DefiningFunction, z0: &[f64]) -> Result<BoundaryPoint, DomainError> {
    let rho0 = evaluate(f, z0)?;
    let scale = 1.0 + rho0.abs() + z0.iter().map(|x| x * x).sum::<f64>();
    let tol = BOUNDARY_TOL * scale;

    let mut z = z0.to_vec();
    let mut rho = rho0;
    let mut grad = gradient(f, &z)?;
    if degenerate_gradient(linalg::norm(&grad), rho) {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let size = NUDGE * (1.0 + linalg::norm(z0));
        for x in z.iter_mut() {
            *x += size * rng.random_range(-1.0..=1.0);
        }
        rho = evaluate(f, &z)?;
        grad = gradient(f, &z)?;
        if degenerate_gradient(linalg::norm(&grad), rho) {
            return Err(DomainError::ProjectionFailed("vanishing gradient at start".into()));
        }
    }

    let mut iters = 0;
    while rho.abs() > tol {
        if iters == MAX_NEWTON_ITERS {
            return Err(DomainError::ProjectionFailed(format!("no convergence in {MAX_NEWTON_ITERS} iterations")));
        }
        iters += 1;
        if degenerate_gradient(linalg::norm(&grad), rho) {
            return Err(DomainError::ProjectionFailed("vanishing gradient".into()));
        }
        let (next, v) = newton_step(f, &z, rho, &grad, 30)
            .ok_or_else(|| DomainError::ProjectionFailed("no step reduces |rho|".into()))?;
        z = next;
        rho = v;
        grad = gradient(f, &z)?;
    }
    // One undamped polishing step, kept only if it helps.
    if !degenerate_gradient(linalg::norm(&grad), rho) {
        if let Some((next, v)) = newton_step(f, &z, rho, &grad, 1) {
            z = next;
            rho = v;
            grad = gradient(f, &z)?;
        }
    }
    if degenerate_gradient(linalg::norm(&grad), rho) {
        return Err(DomainError::ProjectionFailed("boundary point has vanishing gradient".into()));
    }
    Ok(BoundaryPoint { w: z, residual: rho.abs() })
}

/// Newton step with step halving; `None` when no trial reduces `|rho|`.
fn newton_step(f: &dyn DefiningFunction, z: &[f64], rho: f64, grad: &[f64], tries: usize) -> Option<(Vec<f64>, f64)> {
    let g2: f64 = grad.iter().map(|g| g * g).sum();
    let mut t = 1.0;
    for _ in 0..tries {
        let cand: Vec<f64> = z.iter().zip(grad).map(|(x, g)| x - t * rho * g / g2).collect();
        if let Ok(v) = evaluate(f, &cand) {
            if v.abs() < rho.abs() {
                return Some((cand, v));
            }
        }
        t *= 0.5;
    }
    None
}

/// Axis-aligned sampling box `[lo, hi]^{mn}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleBox {
    pub lo: f64,
    pub hi: f64,
}

impl Default for SampleBox {
    fn default() -> Self {
        Self { lo: -2.0, hi: 2.0 }
    }
}

/// Draw uniform points in the box, project each, and keep the first `count`
/// distinct projections. Draws happen in batches from a single seeded stream
/// so the result does not depend on how projections are scheduled.
pub fn sample_boundary(
    f: &dyn DefiningFunction,
    count: usize,
    seed: u64,
    bbox: SampleBox,
) -> Result<Vec<BoundaryPoint>, DomainError> {
    if count == 0 {
        return Err(DomainError::InsufficientSamples { found: 0, requested: 0 });
    }
    let dim = f.ambient_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<BoundaryPoint> = Vec::with_capacity(count);
    let max_draws = 100 * count;
    let mut draws = 0;
    while out.len() < count && draws < max_draws {
        let batch = (count - out.len()).max(4).min(max_draws - draws);
        let starts: Vec<Vec<f64>> = (0..batch)
            .map(|_| (0..dim).map(|_| rng.random_range(bbox.lo..=bbox.hi)).collect())
            .collect();
        draws += batch;
        for bp in project_all(f, &starts).into_iter().flatten() {
            if out.len() == count {
                break;
            }
            let dup = out.iter().any(|q| {
                q.w.iter().zip(&bp.w).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() < DEDUP_DIST
            });
            if !dup {
                out.push(bp);
            }
        }
    }
    if out.len() < count {
        return Err(DomainError::InsufficientSamples { found: out.len(), requested: count });
    }
    Ok(out)
}

#[cfg(feature = "parallel")]
fn project_all(f: &dyn DefiningFunction, starts: &[Vec<f64>]) -> Vec<Option<BoundaryPoint>> {
    use rayon::prelude::*;
    starts.par_iter().map(|z| project_to_boundary(f, z).ok()).collect()
}

#[cfg(not(feature = "parallel"))]
fn project_all(f: &dyn DefiningFunction, starts: &[Vec<f64>]) -> Vec<Option<BoundaryPoint>> {
    starts.iter().map(|z| project_to_boundary(f, z).ok()).collect()
}

/// One monomial `coef * prod x[index]^power`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coef: f64,
    /// `(flat coordinate index, power)` with distinct indices.
    pub factors: Vec<(usize, u32)>,
}

impl Monomial {
    fn value(&self, z: &[f64]) -> f64 {
        self.factors.iter().fold(self.coef, |acc, &(i, e)| acc * z[i].powi(e as i32))
    }

    /// Derivative with respect to coordinate `i`, by exponent shift.
    fn derivative(&self, i: usize) -> Option<Monomial> {
        let pos = self.factors.iter().position(|&(idx, _)| idx == i)?;
        let mut d = self.clone();
        let e = d.factors[pos].1;
        d.coef *= f64::from(e);
        if e == 1 {
            d.factors.remove(pos);
        } else {
            d.factors[pos].1 = e - 1;
        }
        Some(d)
    }
}

/// Sparse polynomial defining function.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    n: usize,
    m: usize,
    terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn new(n: usize, m: usize, terms: Vec<Monomial>) -> Result<Self, DomainError> {
        if n == 0 || m == 0 {
            return Err(DomainError::MalformedMonomials("n and m must be positive".into()));
        }
        for t in &terms {
            if !t.coef.is_finite() {
                return Err(DomainError::MalformedMonomials("non-finite coefficient".into()));
            }
            for (a, &(i, _)) in t.factors.iter().enumerate() {
                if i >= n * m {
                    return Err(DomainError::MalformedMonomials(format!("coordinate {i} out of range")));
                }
                if t.factors[..a].iter().any(|&(j, _)| j == i) {
                    return Err(DomainError::MalformedMonomials(format!("coordinate {i} repeated in a monomial")));
                }
            }
        }
        Ok(Self { n, m, terms })
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }
}

/// Built-in defining functions with closed-form derivatives.
#[derive(Debug, Clone, PartialEq)]
pub enum BuiltinDomain {
    /// `sum x^2 - r^2`.
    Ball { n: usize, m: usize, r: f64 },
    /// `sum_j sign_j |z_j|^2 - r^2`.
    SignedQuadric { m: usize, signs: Vec<f64>, r: f64 },
    /// `<normal, z> - offset`.
    Halfspace { m: usize, normal: Vec<f64>, offset: f64 },
    Polynomial(Polynomial),
}

impl BuiltinDomain {
    fn diagonal_weights(&self) -> Option<Vec<f64>> {
        match self {
            BuiltinDomain::Ball { n, m, .. } => Some(vec![1.0; n * m]),
            BuiltinDomain::SignedQuadric { m, signs, .. } => {
                Some(signs.iter().flat_map(|&s| std::iter::repeat_n(s, *m)).collect())
            }
            _ => None,
        }
    }
}

impl DefiningFunction for BuiltinDomain {
    fn n(&self) -> usize {
        match self {
            BuiltinDomain::Ball { n, .. } => *n,
            BuiltinDomain::SignedQuadric { signs, .. } => signs.len(),
            BuiltinDomain::Halfspace { m, normal, .. } => normal.len() / m,
            BuiltinDomain::Polynomial(p) => p.n,
        }
    }

    fn m(&self) -> usize {
        match self {
            BuiltinDomain::Ball { m, .. }
            | BuiltinDomain::SignedQuadric { m, .. }
            | BuiltinDomain::Halfspace { m, .. } => *m,
            BuiltinDomain::Polynomial(p) => p.m,
        }
    }

    fn value(&self, z: &[f64]) -> f64 {
        match self {
            BuiltinDomain::Ball { r, .. } | BuiltinDomain::SignedQuadric { r, .. } => {
                let w = self.diagonal_weights().expect("quadric");
                w.iter().zip(z).map(|(s, x)| s * x * x).sum::<f64>() - r * r
            }
            BuiltinDomain::Halfspace { normal, offset, .. } => {
                normal.iter().zip(z).map(|(a, x)| a * x).sum::<f64>() - offset
            }
            BuiltinDomain::Polynomial(p) => p.terms.iter().map(|t| t.value(z)).sum(),
        }
    }

    fn analytic_gradient(&self, z: &[f64]) -> Option<Vec<f64>> {
        Some(match self {
            BuiltinDomain::Ball { .. } | BuiltinDomain::SignedQuadric { .. } => {
                let w = self.diagonal_weights()?;
                w.iter().zip(z).map(|(s, x)| 2.0 * s * x).collect()
            }
            BuiltinDomain::Halfspace { normal, .. } => normal.clone(),
            BuiltinDomain::Polynomial(p) => (0..z.len())
                .map(|i| p.terms.iter().filter_map(|t| t.derivative(i)).map(|d| d.value(z)).sum())
                .collect(),
        })
    }

    fn analytic_hessian(&self, z: &[f64]) -> Option<DMatrix<f64>> {
        let dim = z.len();
        Some(match self {
            BuiltinDomain::Ball { .. } | BuiltinDomain::SignedQuadric { .. } => {
                let w = self.diagonal_weights()?;
                DMatrix::from_fn(dim, dim, |i, j| if i == j { 2.0 * w[i] } else { 0.0 })
            }
            BuiltinDomain::Halfspace { .. } => DMatrix::zeros(dim, dim),
            BuiltinDomain::Polynomial(p) => {
                let mut h = DMatrix::zeros(dim, dim);
                for t in &p.terms {
                    for i in 0..dim {
                        let Some(di) = t.derivative(i) else { continue };
                        for j in 0..dim {
                            if let Some(dij) = di.derivative(j) {
                                h[(i, j)] += dij.value(z);
                            }
                        }
                    }
                }
                h
            }
        })
    }
}

/// A defining function from a closure; derivatives come from finite differences.
pub struct FnDomain<F> {
    n: usize,
    m: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> FnDomain<F> {
    pub fn new(n: usize, m: usize, f: F) -> Self {
        Self { n, m, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> DefiningFunction for FnDomain<F> {
    fn n(&self) -> usize {
        self.n
    }

    fn m(&self) -> usize {
        self.m
    }

    fn value(&self, z: &[f64]) -> f64 {
        (self.f)(z)
    }
}

/// JSON description of a domain.
///
/// Built-ins: `{"builtin": "ball", "n": 2, "params": {"r": 1}}`,
/// `{"builtin": "signed-quadric", "params": {"signs": [1, -1], "r": 1}}`,
/// `{"builtin": "halfspace", "params": {"normal": [...], "offset": 0}}`.
/// Polynomials: `{"polynomial": [[{"slot": 1, "component": 0, "power": 2}, ..., coef], ...], "n": 2}`
/// with 1-based slots and 0-based components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polynomial: Option<Vec<Vec<Value>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Factor {
    slot: usize,
    component: usize,
    power: u32,
}

impl DomainSpec {
    pub fn ball(n: usize, r: f64) -> Self {
        Self {
            builtin: Some("ball".into()),
            params: Some(serde_json::json!({ "r": r })),
            polynomial: None,
            n: Some(n),
        }
    }

    pub fn signed_quadric(signs: &[f64], r: f64) -> Self {
        Self {
            builtin: Some("signed-quadric".into()),
            params: Some(serde_json::json!({ "signs": signs, "r": r })),
            polynomial: None,
            n: None,
        }
    }

    pub fn halfspace(normal: &[f64], offset: f64) -> Self {
        Self {
            builtin: Some("halfspace".into()),
            params: Some(serde_json::json!({ "normal": normal, "offset": offset })),
            polynomial: None,
            n: None,
        }
    }

    /// Build the defining function for algebra dimension `m`.
    pub fn build(&self, m: usize) -> Result<BuiltinDomain, DomainError> {
        match (&self.builtin, &self.polynomial) {
            (Some(name), None) => builtin_domain(name, self.params.as_ref(), self.n, m),
            (None, Some(monos)) => {
                let n = self.n.ok_or_else(|| DomainError::Malformed("polynomial domain requires \"n\"".into()))?;
                parse_polynomial(monos, n, m).map(BuiltinDomain::Polynomial)
            }
            _ => Err(DomainError::Malformed("expected exactly one of \"builtin\" or \"polynomial\"".into())),
        }
    }
}

fn param_f64(params: Option<&Value>, key: &str, default: Option<f64>) -> Result<f64, DomainError> {
    match params.and_then(|p| p.get(key)) {
        Some(v) => v.as_f64().ok_or_else(|| DomainError::Malformed(format!("parameter \"{key}\" must be a number"))),
        None => default.ok_or_else(|| DomainError::Malformed(format!("missing parameter \"{key}\""))),
    }
}

fn param_vec(params: Option<&Value>, key: &str) -> Result<Vec<f64>, DomainError> {
    let arr = params
        .and_then(|p| p.get(key))
        .and_then(Value::as_array)
        .ok_or_else(|| DomainError::Malformed(format!("missing array parameter \"{key}\"")))?;
    arr.iter()
        .map(|v| v.as_f64().ok_or_else(|| DomainError::Malformed(format!("\"{key}\" must hold numbers"))))
        .collect()
}

fn check_params(params: Option<&Value>, allowed: &[&str]) -> Result<(), DomainError> {
    match params {
        None => Ok(()),
        Some(Value::Object(map)) => match map.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(DomainError::Malformed(format!("unknown parameter \"{k}\""))),
            None => Ok(()),
        },
        Some(_) => Err(DomainError::Malformed("\"params\" must be an object".into())),
    }
}

/// Built-in defining functions by name.
pub fn builtin_domain(name: &str, params: Option<&Value>, n: Option<usize>, m: usize) -> Result<BuiltinDomain, DomainError> {
    if m == 0 {
        return Err(DomainError::Malformed("algebra dimension must be positive".into()));
    }
    let positive = |r: f64| {
        if r > 0.0 && r.is_finite() {
            Ok(r)
        } else {
            Err(DomainError::Malformed("radius must be positive".into()))
        }
    };
    match name {
        "ball" => {
            check_params(params, &["r", "n"])?;
            let n = match params.and_then(|p| p.get("n")).and_then(Value::as_u64) {
                Some(v) => v as usize,
                None => n.ok_or_else(|| DomainError::Malformed("ball requires \"n\"".into()))?,
            };
            if n == 0 {
                return Err(DomainError::Malformed("n must be positive".into()));
            }
            Ok(BuiltinDomain::Ball { n, m, r: positive(param_f64(params, "r", Some(1.0))?)? })
        }
        "signed-quadric" => {
            check_params(params, &["signs", "r"])?;
            let signs = param_vec(params, "signs")?;
            if signs.is_empty() || signs.iter().any(|s| !s.is_finite()) || n.is_some_and(|n| n != signs.len()) {
                return Err(DomainError::Malformed("signs must be finite with one entry per slot".into()));
            }
            Ok(BuiltinDomain::SignedQuadric { m, signs, r: positive(param_f64(params, "r", Some(1.0))?)? })
        }
        "halfspace" => {
            check_params(params, &["normal", "offset"])?;
            let normal = param_vec(params, "normal")?;
            if normal.is_empty() || normal.len() % m != 0 || n.is_some_and(|n| n * m != normal.len()) {
                return Err(DomainError::Malformed("normal length must be n*m".into()));
            }
            if normal.iter().all(|&a| a == 0.0) {
                return Err(DomainError::Malformed("normal must be nonzero".into()));
            }
            Ok(BuiltinDomain::Halfspace { m, normal, offset: param_f64(params, "offset", Some(0.0))? })
        }
        other => Err(DomainError::UnknownDomain(other.to_string())),
    }
}

fn parse_polynomial(monos: &[Vec<Value>], n: usize, m: usize) -> Result<Polynomial, DomainError> {
    let mut terms = Vec::with_capacity(monos.len());
    for mono in monos {
        let (coef, factors) = mono
            .split_last()
            .ok_or_else(|| DomainError::MalformedMonomials("empty monomial".into()))?;
        let coef = coef
            .as_f64()
            .ok_or_else(|| DomainError::MalformedMonomials("last entry of a monomial must be its coefficient".into()))?;
        let mut parsed = Vec::with_capacity(factors.len());
        for fac in factors {
            let f: Factor = serde_json::from_value(fac.clone())
                .map_err(|e| DomainError::MalformedMonomials(e.to_string()))?;
            if f.slot == 0 || f.slot > n || f.component >= m {
                return Err(DomainError::MalformedMonomials(format!(
                    "factor (slot {}, component {}) out of range",
                    f.slot, f.component
                )));
            }
            if f.power > 0 {
                parsed.push(((f.slot - 1) * m + f.component, f.power));
            }
        }
        terms.push(Monomial { coef, factors: parsed });
    }
    Polynomial::new(n, m, terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn ball22() -> BuiltinDomain {
        BuiltinDomain::Ball { n: 2, m: 2, r: 1.0 }
    }

    #[test]
    fn ball_derivatives() {
        let b = ball22();
        let w = [0.5, -0.25, 0.1, 2.0];
        assert_eq!(gradient(&b, &w).unwrap(), vec![1.0, -0.5, 0.2, 4.0]);
        assert_eq!(hessian(&b, &w).unwrap(), DMatrix::identity(4, 4) * 2.0);
    }

    #[test]
    fn indefinite_quadric_hessian() {
        let q = builtin_domain("signed-quadric", Some(&json!({"signs": [1, -1], "r": 1})), None, 2).unwrap();
        let h = hessian(&q, &[0.3, 0.1, 0.2, 0.0]).unwrap();
        assert_eq!(h, DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 2.0, -2.0, -2.0])));
        assert_eq!(q.value(&[1.0, 0.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn fd_matches_analytic_for_ball() {
        let b = ball22();
        let w = [0.7, -1.3, 0.2, 0.9];
        let fd = fd_gradient(&b, &w);
        let an = b.analytic_gradient(&w).unwrap();
        for (a, f) in an.iter().zip(&fd) {
            assert!((a - f).abs() <= 1e-6 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn fn_domain_uses_finite_differences() {
        let f = FnDomain::new(1, 2, |z: &[f64]| z[0].powi(3) + z[0] * z[1]);
        let g = gradient(&f, &[1.0, 2.0]).unwrap();
        assert!((g[0] - 5.0).abs() < 1e-8 && (g[1] - 1.0).abs() < 1e-8);
        let h = hessian(&f, &[1.0, 2.0]).unwrap();
        assert!((h[(0, 0)] - 6.0).abs() < 1e-5);
        assert!((h[(0, 1)] - 1.0).abs() < 1e-5);
        assert_eq!(h[(0, 1)], h[(1, 0)]);
    }

    #[test]
    fn non_finite_values_reported() {
        let f = FnDomain::new(1, 1, |z: &[f64]| z[0].ln());
        assert_eq!(evaluate(&f, &[-1.0]).unwrap_err(), DomainError::NonFiniteValue);
        assert_eq!(evaluate(&f, &[f64::NAN]).unwrap_err(), DomainError::NonFiniteValue);
        assert!(matches!(evaluate(&f, &[1.0, 2.0]), Err(DomainError::DimensionMismatch { .. })));
    }

    #[test]
    fn projection_examples() {
        let b = ball22();
        let bp = project_to_boundary(&b, &[2.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((bp.w[0] - 1.0).abs() < 1e-10 && bp.w[1..].iter().all(|&x| x == 0.0));
        assert!(bp.residual <= 1e-10);
        assert!(matches!(project_to_boundary(&b, &[0.0; 4]), Err(DomainError::ProjectionFailed(_))));
        let q = BuiltinDomain::SignedQuadric { m: 2, signs: vec![1.0, -1.0], r: 1.0 };
        let bp = project_to_boundary(&q, &[2.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((bp.w[0] - 1.0).abs() < 1e-10 && bp.w[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn sampling_on_sphere_is_deterministic() {
        let b = ball22();
        let pts = sample_boundary(&b, 8, 11, SampleBox::default()).unwrap();
        assert_eq!(pts.len(), 8);
        for p in &pts {
            let r2: f64 = p.w.iter().map(|x| x * x).sum();
            assert!((r2 - 1.0).abs() <= 1e-9);
        }
        assert_eq!(pts, sample_boundary(&b, 8, 11, SampleBox::default()).unwrap());
        assert_ne!(pts, sample_boundary(&b, 8, 12, SampleBox::default()).unwrap());
    }

    #[test]
    fn constant_function_has_no_boundary_samples() {
        let f = FnDomain::new(1, 2, |_: &[f64]| 1.0);
        let err = sample_boundary(&f, 3, 0, SampleBox::default()).unwrap_err();
        assert_eq!(err, DomainError::InsufficientSamples { found: 0, requested: 3 });
    }

    #[test]
    fn builtin_specs() {
        let b = DomainSpec::ball(2, 1.0).build(2).unwrap();
        assert_eq!(b, ball22());
        assert_eq!(b.value(&[0.0, 1.0, 0.0, 1.0]), 1.0);

        let spec: DomainSpec = serde_json::from_value(json!({
            "polynomial": [[{"slot": 1, "component": 0, "power": 1}, 1.0]],
            "n": 2
        }))
        .unwrap();
        let p = spec.build(2).unwrap();
        assert_eq!(p.value(&[3.0, 1.0, 5.0, 7.0]), 3.0);
        assert_eq!(p.analytic_gradient(&[0.0; 4]).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);

        assert!(matches!(
            builtin_domain("torus", None, Some(1), 2),
            Err(DomainError::UnknownDomain(_))
        ));
        let bad: DomainSpec = serde_json::from_value(json!({
            "polynomial": [[{"slot": 3, "component": 0, "power": 1}, 1.0]],
            "n": 2
        }))
        .unwrap();
        assert!(matches!(bad.build(2), Err(DomainError::MalformedMonomials(_))));
        let bad: DomainSpec = serde_json::from_value(json!({"polynomial": [[{"slot": 1}]], "n": 1})).unwrap();
        assert!(matches!(bad.build(2), Err(DomainError::MalformedMonomials(_))));
        assert!(builtin_domain("ball", Some(&json!({"radius": 1})), Some(1), 2).is_err());
    }

    #[test]
    fn polynomial_derivatives_by_exponent_shift() {
        // rho = x0 * x1^2 + 3 x1^3 - 2
        let p = Polynomial::new(
            1,
            2,
            vec![
                Monomial { coef: 1.0, factors: vec![(0, 1), (1, 2)] },
                Monomial { coef: 3.0, factors: vec![(1, 3)] },
                Monomial { coef: -2.0, factors: vec![] },
            ],
        )
        .unwrap();
        let d = BuiltinDomain::Polynomial(p);
        let z = [2.0, -1.0];
        assert_eq!(d.value(&z), 2.0 - 3.0 - 2.0);
        assert_eq!(d.analytic_gradient(&z).unwrap(), vec![1.0, -4.0 + 9.0]);
        let h = d.analytic_hessian(&z).unwrap();
        assert_eq!(h, DMatrix::from_row_slice(2, 2, &[0.0, -2.0, -2.0, 4.0 - 18.0]));
    }
}
