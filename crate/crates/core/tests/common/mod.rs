//! Oracles shared by the integration tests. None of them call into the
//! quadrature module.
#![allow(dead_code)]

use cutquad::{BoxCell, Partition, Point, SimplexKind};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Polynomial Σ c_ab x^a y^b with total degree ≤ `degree`.
#[derive(Clone, Debug)]
pub struct Poly2 {
    pub terms: Vec<(i32, i32, f64)>,
}

impl Poly2 {
    pub fn random(degree: i32, mut coeff: impl FnMut() -> f64) -> Self {
        let mut terms = Vec::new();
        for a in 0..=degree {
            for b in 0..=degree - a {
                terms.push((a, b, coeff()));
            }
        }
        Poly2 { terms }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms.iter().map(|&(a, b, c)| c * x.powi(a) * y.powi(b)).sum()
    }

    /// Same monomials with |c|, the scale used for relative errors.
    pub fn abs(&self) -> Self {
        Poly2 { terms: self.terms.iter().map(|&(a, b, c)| (a, b, c.abs())).collect() }
    }
}

const LEVELS: usize = 5;

/// Romberg table over even powers h², h⁴, …; exact for degree ≤ 2·(LEVELS−1).
fn richardson(mut r: Vec<f64>) -> f64 {
    let mut p = 4.0;
    while r.len() > 1 {
        r = r.windows(2).map(|w| (p * w[1] - w[0]) / (p - 1.0)).collect();
        p *= 4.0;
    }
    r[0]
}

fn triangle_midpoint(v: &[Point], n: usize, f: &dyn Fn(f64, f64) -> f64) -> f64 {
    let area = 0.5 * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1])).abs();
    let p = |i: usize, j: usize| {
        let (s, t) = (i as f64 / n as f64, j as f64 / n as f64);
        [
            v[0][0] + s * (v[1][0] - v[0][0]) + t * (v[2][0] - v[0][0]),
            v[0][1] + s * (v[1][1] - v[0][1]) + t * (v[2][1] - v[0][1]),
        ]
    };
    let centroid = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| f((a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0);
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n - i {
            s += centroid(p(i, j), p(i + 1, j), p(i, j + 1));
            if i + j + 2 <= n {
                s += centroid(p(i + 1, j), p(i, j + 1), p(i + 1, j + 1));
            }
        }
    }
    s * area / (n * n) as f64
}

fn square_midpoint(b: &BoxCell, n: usize, f: &dyn Fn(f64, f64) -> f64) -> f64 {
    let h = b.size / n as f64;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += f(b.origin[0] + (i as f64 + 0.5) * h, b.origin[1] + (j as f64 + 0.5) * h);
        }
    }
    s * h * h
}

/// Integral over a 2D partition by recursive halving of every sub-cell with the
/// centroid rule, extrapolated in h.
pub fn subdivision_integral(p: &Partition, f: &dyn Fn(f64, f64) -> f64) -> f64 {
    assert_eq!(p.dim, 2);
    let mut total = 0.0;
    for b in p.levels.iter().flatten() {
        total += richardson((0..LEVELS).map(|m| square_midpoint(b, 1 << m, f)).collect());
    }
    for c in &p.tessellated {
        assert_eq!(c.kind, SimplexKind::Triangle);
        total += richardson((0..LEVELS).map(|m| triangle_midpoint(&c.vertices, 1 << m, f)).collect());
    }
    total
}

/// Largest eigenpair of d dᵀ v = λ G v via a dense symmetric eigensolver,
/// with v scaled to vᵀ G v = 1.
pub fn generalized_max_eigen(g: &DMatrix<f64>, d: &DVector<f64>) -> (f64, DVector<f64>) {
    let l = g.clone().cholesky().expect("SPD").l();
    let l_inv = l.clone().try_inverse().unwrap();
    let a = &l_inv * d * d.transpose() * l_inv.transpose();
    let eig = SymmetricEigen::new(a);
    let (i, lambda) = eig.eigenvalues.iter().enumerate().fold((0, f64::MIN), |b, (i, &x)| if x > b.1 { (i, x) } else { b });
    let w = eig.eigenvectors.column(i).into_owned();
    let v = l_inv.transpose() * w;
    let norm = (v.transpose() * g * &v)[(0, 0)].sqrt();
    (lambda, v / norm)
}
