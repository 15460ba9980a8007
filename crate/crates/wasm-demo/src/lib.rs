//! Browser bindings for the checker: formal derivatives at a point, boundary
//! classification, and the profile of `rho` along a tangent direction.
//!
//! Each export takes the demo config as a JSON string and returns JSON.

use linconv::algebra::{Algebra, AlgebraSpec};
use linconv::checker::{self, CheckerConfig, ClassifyOptions, PointKind, Verdict};
use linconv::domain::{self, BoundaryPoint, BuiltinDomain, DomainSpec};
use linconv::gamma::{self, GammaFrame, GammaSpec};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoConfig {
    pub algebra: AlgebraSpec,
    #[serde(default)]
    pub gamma: Option<GammaSpec>,
    pub domain: DomainSpec,
    #[serde(default)]
    pub checker: CheckerConfig,
}

struct Loaded {
    algebra: Algebra,
    frame: GammaFrame,
    domain: BuiltinDomain,
    checker: CheckerConfig,
}

fn load(config: &str) -> Result<Loaded, String> {
    let cfg: DemoConfig = serde_json::from_str(config).map_err(|e| format!("config: {e}"))?;
    let algebra = cfg.algebra.build().map_err(|e| e.to_string())?;
    let m = algebra.dim();
    let spec = cfg.checker.gamma.clone().or(cfg.gamma);
    let frame = gamma::resolve_gamma(spec.as_ref(), m).map_err(|e| e.to_string())?;
    let domain = cfg.domain.build(m).map_err(|e| e.to_string())?;
    let checker = CheckerConfig { gamma: spec, ..cfg.checker };
    Ok(Loaded { algebra, frame, domain, checker })
}

fn to_json(v: &impl Serialize) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Derivatives {
    value: f64,
    /// `[j][p]` coefficients of `a_j^p`.
    gradient: Vec<Vec<Vec<f64>>>,
    /// `[j][p][i][q]` coefficients of `a_{ji}^{pq}`.
    hessian: Vec<Vec<Vec<Vec<Vec<f64>>>>>,
}

pub fn derivatives_json(config: &str, point: &[f64]) -> Result<String, String> {
    let l = load(config)?;
    let m = l.algebra.dim();
    let n = linconv::DefiningFunction::n(&l.domain);
    if point.len() != n * m {
        return Err(format!("point needs {} coordinates, got {}", n * m, point.len()));
    }
    let value = domain::evaluate(&l.domain, point).map_err(|e| e.to_string())?;
    let grad = domain::gradient(&l.domain, point).map_err(|e| e.to_string())?;
    let hess = domain::hessian(&l.domain, point).map_err(|e| e.to_string())?;
    let fg = gamma::formal_gradient(&l.algebra, &l.frame, &grad).map_err(|e| e.to_string())?;
    let fh = gamma::formal_hessian(&l.algebra, &l.frame, &hess).map_err(|e| e.to_string())?;
    to_json(&Derivatives {
        value,
        gradient: (0..n).map(|j| (0..m).map(|p| fg.get(j, p).coeffs().to_vec()).collect()).collect(),
        hessian: (0..n)
            .map(|j| {
                (0..m)
                    .map(|p| (0..n).map(|i| (0..m).map(|q| fh.get(j, p, i, q).coeffs().to_vec()).collect()).collect())
                    .collect()
            })
            .collect(),
    })
}

#[derive(Serialize)]
struct Point {
    w: Vec<f64>,
    kind: Option<PointKind>,
    min_eigenvalue: Option<f64>,
    kernel_dim: Option<usize>,
    error: Option<String>,
}

#[derive(Serialize)]
struct Classification {
    verdict: Verdict,
    gamma: Vec<Vec<f64>>,
    points: Vec<Point>,
}

pub fn classify_json(config: &str) -> Result<String, String> {
    let l = load(config)?;
    let report = checker::check_domain(&l.algebra, &l.domain, &l.checker).map_err(|e| e.to_string())?;
    let points = report
        .points
        .iter()
        .map(|r| match (r.classification(), &r.outcome) {
            (Some(c), _) => Point {
                w: r.point.w.clone(),
                kind: Some(c.kind),
                min_eigenvalue: c.min_eigenvalue,
                kernel_dim: Some(c.kernel_dim),
                error: None,
            },
            (None, checker::PointOutcome::Failed { error }) => Point {
                w: r.point.w.clone(),
                kind: None,
                min_eigenvalue: None,
                kernel_dim: None,
                error: Some(error.clone()),
            },
            (None, _) => unreachable!("unclassified records carry an error"),
        })
        .collect();
    to_json(&Classification { verdict: report.verdict, gamma: report.gamma, points })
}

#[derive(Serialize)]
struct Profile {
    kind: PointKind,
    min_eigenvalue: Option<f64>,
    direction: Vec<f64>,
    r: Vec<f64>,
    rho: Vec<f64>,
    /// `r^2/2 * lambda_min`, the second-order model.
    model: Vec<f64>,
}

/// `rho(w + r s)` for `r` in `[-radius, radius]`, with `s` the unit tangent
/// direction of the smallest restricted eigenvalue.
pub fn profile_json(config: &str, point: &[f64], radius: f64, steps: usize) -> Result<String, String> {
    let l = load(config)?;
    let bp = BoundaryPoint { w: point.to_vec(), residual: 0.0 };
    let opts = ClassifyOptions { tol: l.checker.tol, ptilde: l.checker.ptilde };
    let c = checker::classify_point(&l.algebra, &l.frame, &l.domain, &bp, opts).map_err(|e| e.to_string())?;
    let Some(s) = c.probe_direction.clone() else {
        return Err("the tangent kernel is trivial at this point".into());
    };
    let steps = steps.max(2);
    let lambda = c.min_eigenvalue.unwrap_or(0.0);
    let mut r = Vec::with_capacity(steps);
    let mut rho = Vec::with_capacity(steps);
    let mut model = Vec::with_capacity(steps);
    for i in 0..steps {
        let t = -radius + 2.0 * radius * i as f64 / (steps - 1) as f64;
        let z: Vec<f64> = point.iter().zip(&s).map(|(a, b)| a + t * b).collect();
        r.push(t);
        rho.push(domain::evaluate(&l.domain, &z).map_err(|e| e.to_string())?);
        model.push(0.5 * t * t * lambda);
    }
    to_json(&Profile { kind: c.kind, min_eigenvalue: c.min_eigenvalue, direction: s, r, rho, model })
}

#[wasm_bindgen]
pub fn derivatives(config: &str, point: &[f64]) -> Result<String, JsError> {
    derivatives_json(config, point).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn classify(config: &str) -> Result<String, JsError> {
    classify_json(config).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn profile(config: &str, point: &[f64], radius: f64, steps: usize) -> Result<String, JsError> {
    profile_json(config, point, radius, steps).map_err(|e| JsError::new(&e))
}
