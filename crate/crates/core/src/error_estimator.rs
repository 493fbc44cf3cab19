//! Worst-case integration error over a tensor-product polynomial space.
//!
//! The space holds all polynomials of degree ≤ k per direction on the
//! element. Internally it is spanned by normalized shifted Legendre
//! polynomials, which keeps the Gramian usable at k = 8. Per-cell moments of
//! the Legendre products up to degree 2k per direction are integrated once
//! with the reference scheme; the Gramian and the exact integrals are
//! contractions of those moments with one-dimensional product tables.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::octree::{Partition, SubCell};
use crate::quadrature::{gauss_1d, reference_cell_rule, rule_size, QuadratureScheme, RuleFamily, RuleIndexList};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    L2,
    #[default]
    H1,
}

impl Norm {
    pub fn name(self) -> &'static str {
        match self {
            Norm::L2 => "L2",
            Norm::H1 => "H1",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// Normalized shifted Legendre polynomials (orthonormal on the element).
    #[default]
    Legendre,
    /// Raw monomials in coordinates normalized to the bounding cube of the cut domain.
    Monomial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolynomialSpace {
    pub k: usize,
    pub dim: usize,
    pub norm: Norm,
    pub basis: Basis,
}

impl PolynomialSpace {
    pub fn new(k: usize, dim: usize, norm: Norm) -> Self {
        PolynomialSpace { k, dim, norm, basis: Basis::Legendre }
    }

    /// Degree 8 in two dimensions and 5 in three, H1 norm.
    pub fn default_for(dim: usize) -> Self {
        Self::new(if dim == 2 { 8 } else { 5 }, dim, Norm::H1)
    }

    pub fn n_p(&self) -> usize {
        (self.k + 1).pow(self.dim as u32)
    }

    /// Default oracle degree: 2·d·k, enough for every Gramian entry.
    pub fn reference_degree(&self) -> usize {
        2 * self.dim * self.k
    }

    /// Per-direction degrees of basis function `i` (last direction fastest).
    pub fn multi_index(&self, i: usize) -> [usize; 3] {
        let mut a = [0; 3];
        let mut rem = i;
        for r in (0..self.dim).rev() {
            a[r] = rem % (self.k + 1);
            rem /= self.k + 1;
        }
        a
    }
}

/// Values of √(2a+1)·P_a(2x−1) for a = 0..out.len().
fn legendre_values(x: f64, out: &mut [f64]) {
    legendre_raw(x, out);
    for (a, o) in out.iter_mut().enumerate() {
        *o *= (2.0 * a as f64 + 1.0).sqrt();
    }
}

/// Unnormalized P_a(2x−1).
#[inline]
fn legendre_raw(x: f64, out: &mut [f64]) {
    let t = 2.0 * x - 1.0;
    let n = out.len();
    out[0] = 1.0;
    if n > 1 {
        out[1] = t;
    }
    for a in 2..n {
        let af = a as f64;
        out[a] = ((2.0 * af - 1.0) * t * out[a - 1] - (af - 1.0) * out[a - 2]) / af;
    }
}

/// Values and x-derivatives of the normalized shifted Legendre polynomials.
fn legendre_values_and_derivatives(x: f64, v: &mut [f64], d: &mut [f64]) {
    let t = 2.0 * x - 1.0;
    let n = v.len();
    let mut p = vec![0.0; n.max(2)];
    let mut dp = vec![0.0; n.max(2)];
    p[0] = 1.0;
    p[1] = t;
    dp[1] = 1.0;
    for a in 1..n.saturating_sub(1) {
        let af = a as f64;
        p[a + 1] = ((2.0 * af + 1.0) * t * p[a] - af * p[a - 1]) / (af + 1.0);
        dp[a + 1] = dp[a - 1] + (2.0 * af + 1.0) * p[a];
    }
    for a in 0..n {
        let s = (2.0 * a as f64 + 1.0).sqrt();
        v[a] = s * p[a];
        d[a] = 2.0 * s * dp[a];
    }
}

/// Maps a cube holding the cut domain to [0,1]^d.
#[derive(Clone, Copy, Debug)]
struct Frame {
    origin: Point,
    size: f64,
}

impl Frame {
    /// Smallest cube holding every cell. The polynomial span does not depend on
    /// the frame, but a basis fitted to the cut domain keeps the Gramian well
    /// conditioned when the domain is a small part of the element.
    fn around(cells: &[SubCell], dim: usize) -> Self {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        let mut add = |x: &Point| {
            for r in 0..dim {
                lo[r] = lo[r].min(x[r]);
                hi[r] = hi[r].max(x[r]);
            }
        };
        for c in cells {
            match c {
                SubCell::Box(b) => {
                    add(&b.origin);
                    add(&b.origin.map(|x| x + b.size));
                }
                SubCell::Simplex(t) => t.vertices.iter().for_each(&mut add),
            }
        }
        let size = (0..dim).map(|r| hi[r] - lo[r]).fold(0.0, f64::max);
        let mut origin = [0.0; 3];
        origin[..dim].copy_from_slice(&lo[..dim]);
        Frame { origin, size }
    }

    fn local(&self, x: &Point, r: usize) -> f64 {
        (x[r] - self.origin[r]) / self.size
    }
}

/// Tensor moments ∫ Π P̃_{m_r} over the points of a rule, m_r ≤ `deg`.
fn accumulate_moments(frame: Frame, dim: usize, deg: usize, points: &[Point], weights: &[f64], mu: &mut [f64]) {
    // Unnormalized polynomials, rescaled once at the end. Points are processed
    // in blocks and the tensor contraction is a matrix product:
    // mu[(a,b), c] = Σ_p (w·L0·L1)[p, (a,b)] · L2[p, c].
    const BLOCK: usize = 2048;
    let n = deg + 1;
    let lead = n.pow(dim as u32 - 1);
    let mut head = vec![0.0; BLOCK * lead];
    let mut last = vec![0.0; BLOCK * n];
    let mut l0 = vec![0.0; n];
    let mut l1 = vec![0.0; n];
    for (pts, ws) in points.chunks(BLOCK).zip(weights.chunks(BLOCK)) {
        let b = pts.len();
        for (p, (x, &w)) in pts.iter().zip(ws).enumerate() {
            legendre_raw(frame.local(x, dim - 1), &mut last[p * n..(p + 1) * n]);
            legendre_raw(frame.local(x, 0), &mut l0);
            let row = &mut head[p * lead..(p + 1) * lead];
            if dim == 2 {
                for (o, v) in row.iter_mut().zip(&l0) {
                    *o = w * v;
                }
            } else {
                legendre_raw(frame.local(x, 1), &mut l1);
                for a in 0..n {
                    let wa = w * l0[a];
                    for (o, v) in row[a * n..(a + 1) * n].iter_mut().zip(&l1) {
                        *o = wa * v;
                    }
                }
            }
        }
        // SAFETY: slices are sized for the given dimensions and strides.
        unsafe {
            matrixmultiply::dgemm(
                lead,
                b,
                n,
                1.0,
                head.as_ptr(),
                1,
                lead as isize,
                last.as_ptr(),
                n as isize,
                1,
                1.0,
                mu.as_mut_ptr(),
                n as isize,
                1,
            );
        }
    }
    let s: Vec<f64> = (0..n).map(|a| (2.0 * a as f64 + 1.0).sqrt()).collect();
    for (flat, m) in mu.iter_mut().enumerate() {
        let mut rem = flat;
        for _ in 0..dim {
            *m *= s[rem % n];
            rem /= n;
        }
    }
}

/// Exact tensor moments of a sub-cell.
fn cell_moments(frame: Frame, dim: usize, deg: usize, cell: &SubCell, target_degree: usize) -> Vec<f64> {
    let n = deg + 1;
    let mut mu = vec![0.0; n.pow(dim as u32)];
    match cell {
        SubCell::Box(b) => {
            // separable: products of one-dimensional integrals
            let g = gauss_1d(deg / 2 + 1).expect("positive point count");
            let mut lv = vec![0.0; n];
            let one_d: Vec<Vec<f64>> = (0..dim)
                .map(|r| {
                    let mut acc = vec![0.0; n];
                    for (&t, &w) in g.points.iter().zip(&g.weights) {
                        let mut x = [0.0; 3];
                        x[r] = b.origin[r] + b.size * t;
                        legendre_values(frame.local(&x, r), &mut lv);
                        for (a, v) in acc.iter_mut().zip(&lv) {
                            *a += w * b.size * v;
                        }
                    }
                    acc
                })
                .collect();
            for (flat, m) in mu.iter_mut().enumerate() {
                let mut rem = flat;
                let mut v = 1.0;
                for r in (0..dim).rev() {
                    v *= one_d[r][rem % n];
                    rem /= n;
                }
                *m = v;
            }
        }
        SubCell::Simplex(_) => {
            let rule = reference_cell_rule(cell, target_degree);
            accumulate_moments(frame, dim, deg, &rule.points, &rule.weights, &mut mu);
        }
    }
    mu
}

/// One-dimensional product tables: for a, b ≤ k the nonzero
/// (m, ∫P̃_aP̃_bP̃_m, ∫P̃_a'P̃_b'P̃_m) with m ≤ a + b.
fn product_tables(k: usize) -> Vec<Vec<Vec<(usize, f64, f64)>>> {
    let deg = 2 * k;
    let g = gauss_1d(2 * k + 2).expect("positive point count");
    let n = deg + 1;
    let (mut v, mut d) = (vec![0.0; n], vec![0.0; n]);
    let vals: Vec<(Vec<f64>, Vec<f64>)> = g
        .points
        .iter()
        .map(|&x| {
            legendre_values_and_derivatives(x, &mut v, &mut d);
            (v.clone(), d.clone())
        })
        .collect();
    let mut out = vec![vec![Vec::new(); k + 1]; k + 1];
    for a in 0..=k {
        for b in 0..=k {
            for m in ((a + b) % 2..=a + b).step_by(2) {
                let (mut c, mut dd) = (0.0, 0.0);
                for ((vx, dx), w) in vals.iter().zip(&g.weights) {
                    c += w * vx[a] * vx[b] * vx[m];
                    dd += w * dx[a] * dx[b] * vx[m];
                }
                out[a][b].push((m, c, dd));
            }
        }
    }
    out
}

/// Dense symmetric matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![0.0; n * n] }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.data[i * self.n..(i + 1) * self.n].iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn scaled(&self, c: f64) -> Matrix {
        Matrix { n: self.n, data: self.data.iter().map(|x| x * c).collect() }
    }
}

/// Lower-triangular Cholesky factor.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    pub fn factor(a: &Matrix) -> Result<Self> {
        let n = a.n;
        let mut l = Matrix::zeros(n);
        for j in 0..n {
            let mut s = a.get(j, j);
            for k in 0..j {
                s -= l.get(j, k).powi(2);
            }
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::Conditioning { pivot: j, value: s });
            }
            let d = s.sqrt();
            l.set(j, j, d);
            for i in j + 1..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, s / d);
            }
        }
        Ok(Cholesky { l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.n;
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l.get(i, k) * y[k];
            }
            y[i] /= self.l.get(i, i);
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] -= self.l.get(k, i) * y[k];
            }
            y[i] /= self.l.get(i, i);
        }
        y
    }
}

/// e = ‖ξ − ξ̄‖_{G⁻¹} and the coefficients of the polynomial attaining it.
/// The coefficients are `None` when the error vanishes to round-off.
pub fn worst_case_error(xi: &[f64], xi_bar: &[f64], g: &Cholesky) -> (f64, Option<Vec<f64>>) {
    let d: Vec<f64> = xi.iter().zip(xi_bar).map(|(a, b)| a - b).collect();
    let y = g.solve(&d);
    let e2: f64 = d.iter().zip(&y).map(|(a, b)| a * b).sum();
    let e = e2.max(0.0).sqrt();
    let scale = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if e <= 1e-14 * scale || e == 0.0 {
        return (e, None);
    }
    (e, Some(y.into_iter().map(|v| v / e).collect()))
}

/// Precomputed exact data of one element: per-cell exact integrals ξ_℘,
/// their sum ξ, and the factored Gramian.
#[derive(Clone, Debug)]
pub struct ErrorModel {
    pub space: PolynomialSpace,
    frame_origin: Point,
    frame_size: f64,
    /// Exact per-cell basis integrals.
    pub cell_xi: Vec<Vec<f64>>,
    pub xi: Vec<f64>,
    pub gramian: Matrix,
    chol: Cholesky,
    /// Monomial-from-Legendre coefficients per direction, for the monomial basis.
    to_monomial: Option<Vec<Vec<f64>>>,
}

impl ErrorModel {
    pub fn new(p: &Partition, space: PolynomialSpace) -> Result<Self> {
        Self::with_reference_degree(p, space, space.reference_degree())
    }

    pub fn with_reference_degree(p: &Partition, space: PolynomialSpace, target_degree: usize) -> Result<Self> {
        if space.dim != p.dim {
            return Err(Error::InvalidArgument(format!(
                "space dimension {} does not match partition dimension {}",
                space.dim, p.dim
            )));
        }
        let cells = p.cells();
        if cells.is_empty() {
            return Err(Error::InvalidArgument("partition has no integrable sub-cells".into()));
        }
        let dim = space.dim;
        let k = space.k;
        let deg = 2 * k;
        let frame = Frame::around(&cells, dim);
        let cell_mu: Vec<Vec<f64>> =
            cells.par_iter().map(|c| cell_moments(frame, dim, deg, c, target_degree)).collect();
        let n = deg + 1;
        let mut mu = vec![0.0; n.pow(dim as u32)];
        for cm in &cell_mu {
            for (a, b) in mu.iter_mut().zip(cm) {
                *a += b;
            }
        }

        let to_monomial = (space.basis == Basis::Monomial).then(|| monomial_change(k));
        let mut model = ErrorModel {
            space,
            frame_origin: frame.origin,
            frame_size: frame.size,
            cell_xi: Vec::new(),
            xi: Vec::new(),
            gramian: Matrix::zeros(0),
            chol: Cholesky { l: Matrix::zeros(0) },
            to_monomial,
        };
        model.cell_xi = cell_mu.iter().map(|m| model.restrict(m, n)).collect();
        model.xi = model.restrict(&mu, n);
        let g_leg = legendre_gramian(&space, &mu, frame.size);
        let chol = Cholesky::factor(&g_leg)?;
        (model.gramian, model.chol) = match &model.to_monomial {
            None => (g_leg, chol),
            // T G Tᵀ with T lower triangular has the Cholesky factor T L. Forming
            // it directly avoids refactoring the badly conditioned monomial Gramian.
            Some(t) => (transform_matrix(&space, t, &g_leg), Cholesky { l: lower_product(&space, t, &chol.l) }),
        };
        Ok(model)
    }

    /// Basis integrals from tensor moments of per-direction degree < n.
    fn restrict(&self, mu: &[f64], n: usize) -> Vec<f64> {
        let s = &self.space;
        let leg: Vec<f64> = (0..s.n_p())
            .map(|i| {
                let a = s.multi_index(i);
                let flat = (0..s.dim).fold(0, |acc, r| acc * n + a[r]);
                mu[flat]
            })
            .collect();
        self.from_legendre(leg)
    }

    fn from_legendre(&self, leg: Vec<f64>) -> Vec<f64> {
        match &self.to_monomial {
            None => leg,
            Some(t) => transform_vector(&self.space, t, &leg),
        }
    }

    pub fn n_cells(&self) -> usize {
        self.cell_xi.len()
    }

    /// Basis values at `x` in the model's basis.
    pub fn eval_basis(&self, x: &Point) -> Vec<f64> {
        let (v, _) = self.eval_basis_with_gradient(x, false);
        v
    }

    /// Basis values and, if requested, gradients (one row of d entries per basis function).
    pub fn eval_basis_with_gradient(&self, x: &Point, with_gradient: bool) -> (Vec<f64>, Vec<[f64; 3]>) {
        let s = &self.space;
        let k = s.k;
        let mut v = vec![vec![0.0; k + 1]; s.dim];
        let mut d = vec![vec![0.0; k + 1]; s.dim];
        for r in 0..s.dim {
            let t = (x[r] - self.frame_origin[r]) / self.frame_size;
            match &self.to_monomial {
                None => legendre_values_and_derivatives(t, &mut v[r], &mut d[r]),
                Some(_) => {
                    for j in 0..=k {
                        v[r][j] = t.powi(j as i32);
                        d[r][j] = if j == 0 { 0.0 } else { j as f64 * t.powi(j as i32 - 1) };
                    }
                }
            }
        }
        let n_p = s.n_p();
        let mut vals = Vec::with_capacity(n_p);
        let mut grads = Vec::new();
        for i in 0..n_p {
            let a = s.multi_index(i);
            vals.push((0..s.dim).map(|r| v[r][a[r]]).product());
            if with_gradient {
                let mut gr = [0.0; 3];
                for (q, g) in gr.iter_mut().enumerate().take(s.dim) {
                    *g = (0..s.dim).map(|r| if r == q { d[r][a[r]] } else { v[r][a[r]] }).product::<f64>()
                        / self.frame_size;
                }
                grads.push(gr);
            }
        }
        (vals, grads)
    }

    /// Quadrature integrals of the basis over one cell of a scheme.
    pub fn approx_cell_xi(&self, scheme: &QuadratureScheme, id: usize) -> Vec<f64> {
        let range = scheme.cell_range(id);
        self.approx_xi(&scheme.points[range.clone()], &scheme.weights[range])
    }

    /// Σ w φ(x) over the given points.
    pub fn approx_xi(&self, points: &[Point], weights: &[f64]) -> Vec<f64> {
        let s = &self.space;
        let k = s.k;
        let mut out = vec![0.0; s.n_p()];
        let mut l = vec![vec![0.0; k + 1]; s.dim];
        let index: Vec<[usize; 3]> = (0..s.n_p()).map(|i| s.multi_index(i)).collect();
        for (x, &w) in points.iter().zip(weights) {
            for (r, lr) in l.iter_mut().enumerate() {
                let t = (x[r] - self.frame_origin[r]) / self.frame_size;
                legendre_values(t, lr);
            }
            for (o, a) in out.iter_mut().zip(&index) {
                let v = if s.dim == 2 { l[0][a[0]] * l[1][a[1]] } else { l[0][a[0]] * l[1][a[1]] * l[2][a[2]] };
                *o += w * v;
            }
        }
        self.from_legendre(out)
    }

    pub fn approx_all_cell_xi(&self, scheme: &QuadratureScheme) -> Vec<Vec<f64>> {
        (0..scheme.n_cells()).into_par_iter().map(|id| self.approx_cell_xi(scheme, id)).collect()
    }

    /// Full error report for the given per-cell quadrature integrals.
    pub fn report(&self, cell_xi_bar: &[Vec<f64>]) -> ErrorReport {
        let n_p = self.space.n_p();
        let mut xi_bar = vec![0.0; n_p];
        for c in cell_xi_bar {
            for (a, b) in xi_bar.iter_mut().zip(c) {
                *a += b;
            }
        }
        let (e_total, worst) = worst_case_error(&self.xi, &xi_bar, &self.chol);
        let per_cell_error = match &worst {
            Some(v) => localized_from(v, &self.cell_xi, cell_xi_bar),
            None => vec![0.0; self.n_cells()],
        };
        ErrorReport {
            xi: self.xi.clone(),
            xi_bar,
            e_total,
            worst_coeffs: worst,
            per_cell_error,
            norm: self.space.norm,
            k: self.space.k,
        }
    }

    pub fn evaluate(&self, scheme: &QuadratureScheme) -> ErrorReport {
        self.report(&self.approx_all_cell_xi(scheme))
    }

    pub fn cholesky(&self) -> &Cholesky {
        &self.chol
    }
}

fn localized_from(v: &[f64], exact: &[Vec<f64>], approx: &[Vec<f64>]) -> Vec<f64> {
    exact
        .iter()
        .zip(approx)
        .map(|(a, b)| a.iter().zip(b).zip(v).map(|((x, y), c)| c * (x - y)).sum::<f64>().abs())
        .collect()
}

fn legendre_gramian(space: &PolynomialSpace, mu: &[f64], size: f64) -> Matrix {
    let k = space.k;
    let dim = space.dim;
    let n = 2 * k + 1;
    let tables = product_tables(k);
    let unit = vec![(0usize, 1.0, 0.0)];
    let mut stride = [0usize; 3];
    for r in 0..dim {
        stride[r] = n.pow((dim - 1 - r) as u32);
    }
    let n_p = space.n_p();
    let h1 = space.norm == Norm::H1;
    let inv_s2 = 1.0 / (size * size);
    let rows: Vec<Vec<f64>> = (0..n_p)
        .into_par_iter()
        .map(|i| {
            let a = space.multi_index(i);
            (0..n_p)
                .map(|j| {
                    if j < i {
                        return 0.0;
                    }
                    let b = space.multi_index(j);
                    let list = |r: usize| if r < dim { &tables[a[r]][b[r]] } else { &unit };
                    let (l0, l1, l2) = (list(0), list(1), list(2));
                    let (mut mass, mut stiff) = (0.0, 0.0);
                    for &(m0, c0, d0) in l0 {
                        for &(m1, c1, d1) in l1 {
                            let base = m0 * stride[0] + m1 * stride[1];
                            for &(m2, c2, d2) in l2 {
                                let m = mu[base + m2 * stride[2]];
                                mass += c0 * c1 * c2 * m;
                                if h1 {
                                    let mut s = d0 * c1 * c2 + c0 * d1 * c2;
                                    if dim == 3 {
                                        s += c0 * c1 * d2;
                                    }
                                    stiff += s * m;
                                }
                            }
                        }
                    }
                    mass + stiff * inv_s2
                })
                .collect()
        })
        .collect();
    let mut g = Matrix::zeros(n_p);
    for i in 0..n_p {
        for j in i..n_p {
            g.set(i, j, rows[i][j]);
            g.set(j, i, rows[i][j]);
        }
    }
    g
}

/// `t[j][a]`: coefficient of P̃_a in x^j on [0,1].
fn monomial_change(k: usize) -> Vec<Vec<f64>> {
    let g = gauss_1d(k + 1).expect("positive point count");
    let mut lv = vec![0.0; k + 1];
    let mut t = vec![vec![0.0; k + 1]; k + 1];
    for (&x, &w) in g.points.iter().zip(&g.weights) {
        legendre_values(x, &mut lv);
        for (j, row) in t.iter_mut().enumerate() {
            for (a, c) in row.iter_mut().enumerate() {
                *c += w * x.powi(j as i32) * lv[a];
            }
        }
    }
    t
}

fn kron_entry(space: &PolynomialSpace, t: &[Vec<f64>], i: usize, j: usize) -> f64 {
    let a = space.multi_index(i);
    let b = space.multi_index(j);
    (0..space.dim).map(|r| t[a[r]][b[r]]).product()
}

/// (T ⊗ … ⊗ T) L for lower-triangular L.
fn lower_product(space: &PolynomialSpace, t: &[Vec<f64>], l: &Matrix) -> Matrix {
    let n_p = space.n_p();
    let mut out = Matrix::zeros(n_p);
    for i in 0..n_p {
        for j in 0..=i {
            out.set(i, j, (j..=i).map(|m| kron_entry(space, t, i, m) * l.get(m, j)).sum());
        }
    }
    out
}

fn transform_vector(space: &PolynomialSpace, t: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let n_p = space.n_p();
    (0..n_p).map(|i| (0..n_p).map(|j| kron_entry(space, t, i, j) * v[j]).sum()).collect()
}

fn transform_matrix(space: &PolynomialSpace, t: &[Vec<f64>], g: &Matrix) -> Matrix {
    let n_p = space.n_p();
    let tm: Vec<f64> = (0..n_p * n_p).map(|x| kron_entry(space, t, x / n_p, x % n_p)).collect();
    let mut tg = vec![0.0; n_p * n_p];
    for i in 0..n_p {
        for l in 0..n_p {
            let c = tm[i * n_p + l];
            if c != 0.0 {
                for j in 0..n_p {
                    tg[i * n_p + j] += c * g.get(l, j);
                }
            }
        }
    }
    let mut out = Matrix::zeros(n_p);
    for i in 0..n_p {
        for j in 0..n_p {
            out.set(i, j, (0..n_p).map(|l| tg[i * n_p + l] * tm[j * n_p + l]).sum());
        }
    }
    out
}

/// Exact basis integrals ξ over the partition.
pub fn exact_moments(p: &Partition, space: PolynomialSpace) -> Result<Vec<f64>> {
    Ok(ErrorModel::new(p, space)?.xi)
}

/// Gramian of the basis in the chosen norm.
pub fn gramian(p: &Partition, space: PolynomialSpace) -> Result<Matrix> {
    Ok(ErrorModel::new(p, space)?.gramian)
}

/// e_℘ = |∫_℘ p_max − Σ_{Q_℘} ω p_max| for every cell.
pub fn localized_errors(model: &ErrorModel, scheme: &QuadratureScheme, worst_coeffs: &[f64]) -> Vec<f64> {
    localized_from(worst_coeffs, &model.cell_xi, &model.approx_all_cell_xi(scheme))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Indicators {
    pub values: Vec<f64>,
    pub depleted: Vec<bool>,
}

/// R_℘ = e_℘ / (#Q^{ι+1}_℘ − #Q^ι_℘); depleted cells get zero and a flag.
pub fn indicators(per_cell_error: &[f64], idx: &RuleIndexList, cells: &[SubCell]) -> Indicators {
    let mut values = Vec::with_capacity(cells.len());
    let mut depleted = Vec::with_capacity(cells.len());
    for ((e, &i), c) in per_cell_error.iter().zip(&idx.indices).zip(cells) {
        match (rule_size(c, i), rule_size(c, i + 1)) {
            (Ok(now), Ok(next)) => {
                values.push(e / (next - now) as f64);
                depleted.push(false);
            }
            _ => {
                values.push(0.0);
                depleted.push(true);
            }
        }
    }
    Indicators { values, depleted }
}

/// Increment in point count when moving `cell` from `index` to `index + 1`.
pub fn increment(cell: &SubCell, index: usize) -> Option<usize> {
    let fam = RuleFamily::of(cell);
    if index >= fam.max_index() {
        return None;
    }
    Some(rule_size(cell, index + 1).ok()? - rule_size(cell, index).ok()?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub xi: Vec<f64>,
    pub xi_bar: Vec<f64>,
    pub e_total: f64,
    pub worst_coeffs: Option<Vec<f64>>,
    pub per_cell_error: Vec<f64>,
    pub norm: Norm,
    pub k: usize,
}

impl ErrorReport {
    pub fn to_json(&self, levels: &[u32]) -> serde_json::Value {
        let per_cell: Vec<_> = self
            .per_cell_error
            .iter()
            .enumerate()
            .map(|(id, e)| serde_json::json!({"id": id, "level": levels[id], "e": e}))
            .collect();
        serde_json::json!({
            "e_total": self.e_total,
            "per_cell": per_cell,
            "norm": self.norm.name(),
            "k": self.k,
        })
    }
}
