use std::sync::OnceLock;

use crate::error::{Error, Result};

/// A one-dimensional rule on [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct Rule1d {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

const CACHED: usize = 64;

fn cache() -> &'static [Rule1d] {
    static TABLE: OnceLock<Vec<Rule1d>> = OnceLock::new();
    TABLE.get_or_init(|| (1..=CACHED).map(compute_gauss).collect())
}

/// `n`-point Gauss–Legendre rule mapped to [0, 1].
pub fn gauss_1d(n: usize) -> Result<Rule1d> {
    match n {
        0 => Err(Error::InvalidArgument("a Gauss rule needs at least one point".into())),
        n if n <= CACHED => Ok(cache()[n - 1].clone()),
        n => Ok(compute_gauss(n)),
    }
}

/// Borrowing variant for hot loops; panics for `n == 0`.
pub(crate) fn gauss_ref(n: usize) -> std::borrow::Cow<'static, Rule1d> {
    assert!(n > 0);
    if n <= CACHED {
        std::borrow::Cow::Borrowed(&cache()[n - 1])
    } else {
        std::borrow::Cow::Owned(compute_gauss(n))
    }
}

/// `n` equispaced cell-centered points with equal weights.
pub fn uniform_1d(n: usize) -> Result<Rule1d> {
    if n == 0 {
        return Err(Error::InvalidArgument("a uniform rule needs at least one point".into()));
    }
    let h = 1.0 / n as f64;
    Ok(Rule1d { points: (0..n).map(|i| (i as f64 + 0.5) * h).collect(), weights: vec![h; n] })
}

/// Legendre P_n and its derivative at x ∈ [−1, 1].
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn compute_gauss(n: usize) -> Rule1d {
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton
        let theta = std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5);
        let mut x = theta.cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // x is the i-th largest root; map to [0, 1] and halve the weight
        points[i] = 0.5 * (1.0 - x);
        points[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    if n % 2 == 1 {
        points[n / 2] = 0.5;
    }
    Rule1d { points, weights }
}
