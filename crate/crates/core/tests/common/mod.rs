#![allow(dead_code)]

use linconv::algebra::{builtin_algebra, validate_algebra, Algebra};
use linconv::PointKind;
use num_complex::Complex64;

pub fn algebra(name: &str) -> Algebra {
    validate_algebra(builtin_algebra(name).unwrap()).unwrap()
}

/// Second-order data of `phi` on C^2 in real coordinates `(x1, y1, x2, y2)`.
pub struct RealJet {
    pub grad: [f64; 4],
    pub hess: [[f64; 4]; 4],
}

/// `|z1|^2 + s |z2|^2 - 1`, differentiated by hand.
pub fn quadric_jet(w: &[f64], s: f64) -> RealJet {
    let d = [1.0, 1.0, s, s];
    let mut hess = [[0.0; 4]; 4];
    for i in 0..4 {
        hess[i][i] = 2.0 * d[i];
    }
    RealJet { grad: [2.0 * w[0], 2.0 * w[1], 2.0 * s * w[2], 2.0 * s * w[3]], hess }
}

/// Result of the complex tangent test on a point of `C^2`.
pub struct ComplexTangentForm {
    /// Minimum of the real second differential over unit vectors of the
    /// complex tangent line.
    pub min: f64,
    /// The same form at the minimizing real unit vector, evaluated directly
    /// from the real Hessian.
    pub min_direct: f64,
    pub direction: [f64; 4],
}

/// Wirtinger-calculus evaluation of the second differential on the complex
/// tangent line `{ v : sum phi_{z_j} v_j = 0 }`: for `v` a unit spanning
/// vector and `A = sum phi_{z_j z_k} v_j v_k`, `B = sum phi_{z_j zbar_k} v_j conj(v_k)`,
/// the form on `e^{i theta} v` is `2 Re(e^{2 i theta} A) + 2 B`, minimized at
/// `2 (B - |A|)`.
pub fn complex_tangent_form(jet: &RealJet) -> ComplexTangentForm {
    let i = Complex64::i();
    let h = &jet.hess;
    // real indices of x_j and y_j
    let x = |j: usize| 2 * j;
    let y = |j: usize| 2 * j + 1;
    let g: Vec<Complex64> = (0..2).map(|j| 0.5 * (jet.grad[x(j)] - i * jet.grad[y(j)])).collect();
    let mut zz = [[Complex64::new(0.0, 0.0); 2]; 2];
    let mut zzbar = [[Complex64::new(0.0, 0.0); 2]; 2];
    for j in 0..2 {
        for k in 0..2 {
            zz[j][k] = 0.25 * (h[x(j)][x(k)] - h[y(j)][y(k)] - i * (h[x(j)][y(k)] + h[y(j)][x(k)]));
            zzbar[j][k] = 0.25 * (h[x(j)][x(k)] + h[y(j)][y(k)] + i * (h[x(j)][y(k)] - h[y(j)][x(k)]));
        }
    }
    let gn = (g[0].norm_sqr() + g[1].norm_sqr()).sqrt();
    let v = [-g[1] / gn, g[0] / gn];
    let mut a = Complex64::new(0.0, 0.0);
    let mut b = Complex64::new(0.0, 0.0);
    for j in 0..2 {
        for k in 0..2 {
            a += zz[j][k] * v[j] * v[k];
            b += zzbar[j][k] * v[j] * v[k].conj();
        }
    }
    let min = 2.0 * (b.re - a.norm());
    // e^{2 i theta} A = -|A|
    let theta = 0.5 * (std::f64::consts::PI - a.arg());
    let u = [v[0] * Complex64::from_polar(1.0, theta), v[1] * Complex64::from_polar(1.0, theta)];
    let direction = [u[0].re, u[0].im, u[1].re, u[1].im];
    let mut min_direct = 0.0;
    for p in 0..4 {
        for q in 0..4 {
            min_direct += direction[p] * h[p][q] * direction[q];
        }
    }
    ComplexTangentForm { min, min_direct, direction }
}

pub fn kind_from_min(min: f64, tol: f64) -> PointKind {
    if min > tol {
        PointKind::StrictlyPositive
    } else if min < -tol {
        PointKind::NegativeDirection
    } else {
        PointKind::Degenerate
    }
}
