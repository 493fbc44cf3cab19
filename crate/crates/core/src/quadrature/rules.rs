//! Per-cell rules: catalogs mapped onto physical cells, the nested index
//! sequences used by the optimizer, and the high-order reference rules.

use serde::{Deserialize, Serialize};

use super::catalog::{tetrahedron_catalog, triangle_catalog};
use super::gauss::{gauss_ref, uniform_1d, Rule1d};
use crate::error::{Error, Result};
use crate::geometry::{cross, dot, signed_area_2d, signed_volume_tet, sub, triangle_area_3d, BoxCell, Point};
use crate::octree::SubCell;
use crate::tessellation::{SimplexCell, SimplexKind};

/// Points and weights in element coordinates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Rule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn push(&mut self, x: Point, w: f64) {
        self.points.push(x);
        self.weights.push(w);
    }

    fn extend(&mut self, other: Rule) {
        self.points.extend(other.points);
        self.weights.extend(other.weights);
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxRuleKind {
    #[default]
    Gauss,
    Uniform,
}

/// Tensor-product rule with `n_per_dir` points per direction.
pub fn box_rule(kind: BoxRuleKind, n_per_dir: usize, cell: &BoxCell) -> Result<Rule> {
    let r = match kind {
        BoxRuleKind::Gauss => {
            if n_per_dir == 0 {
                return Err(Error::InvalidArgument("a Gauss rule needs at least one point".into()));
            }
            gauss_ref(n_per_dir).into_owned()
        }
        BoxRuleKind::Uniform => uniform_1d(n_per_dir)?,
    };
    Ok(tensor_box(&r, cell))
}

fn tensor_box(r: &Rule1d, cell: &BoxCell) -> Rule {
    let n = r.len();
    let d = cell.dim;
    let total = n.pow(d as u32);
    let mut out = Rule { points: Vec::with_capacity(total), weights: Vec::with_capacity(total) };
    let scale = cell.volume();
    for flat in 0..total {
        let mut x = cell.origin;
        let mut w = scale;
        let mut rem = flat;
        for i in (0..d).rev() {
            let j = rem % n;
            rem /= n;
            x[i] += cell.size * r.points[j];
            w *= r.weights[j];
        }
        out.push(x, w);
    }
    out
}

fn bary_map(bary: &[f64], verts: &[Point]) -> Point {
    let mut x = [0.0; 3];
    for (l, v) in bary.iter().zip(verts) {
        for i in 0..3 {
            x[i] += l * v[i];
        }
    }
    x
}

fn triangle_measure(v: &[Point; 3]) -> f64 {
    if v.iter().all(|p| p[2] == 0.0) {
        signed_area_2d(&v[0], &v[1], &v[2]).abs()
    } else {
        triangle_area_3d(&v[0], &v[1], &v[2])
    }
}

/// Catalog entry `index` on a triangle (planar or embedded in 3D).
pub fn triangle_catalog_rule(index: usize, v: &[Point; 3]) -> Result<Rule> {
    let entry = triangle_catalog().get(index).ok_or(Error::Depleted { kind: "triangle", index })?;
    let area = triangle_measure(v);
    let mut r = Rule::default();
    for (b, w) in entry.bary.iter().zip(&entry.weights) {
        r.push(bary_map(b, v), w * area);
    }
    Ok(r)
}

/// Catalog entry `index` on a tetrahedron.
pub fn tetrahedron_catalog_rule(index: usize, v: &[Point; 4]) -> Result<Rule> {
    let entry = tetrahedron_catalog().get(index).ok_or(Error::Depleted { kind: "tetrahedron", index })?;
    let vol = signed_volume_tet(&v[0], &v[1], &v[2], &v[3]).abs();
    let mut r = Rule::default();
    for (b, w) in entry.bary.iter().zip(&entry.weights) {
        r.push(bary_map(b, v), w * vol);
    }
    Ok(r)
}

/// Conical product: every base point is joined to the apex and integrated
/// radially with an `n_radial`-point Gauss rule carrying the `r²` Jacobian.
fn cone_rule(apex: &Point, base: &Rule, height: f64, n_radial: usize) -> Rule {
    let radial = gauss_ref(n_radial);
    let mut r = Rule { points: Vec::with_capacity(base.len() * n_radial), weights: Vec::with_capacity(base.len() * n_radial) };
    for (y, wy) in base.points.iter().zip(&base.weights) {
        for (&t, &wt) in radial.points.iter().zip(&radial.weights) {
            let x = [
                apex[0] + t * (y[0] - apex[0]),
                apex[1] + t * (y[1] - apex[1]),
                apex[2] + t * (y[2] - apex[2]),
            ];
            r.push(x, wt * t * t * height * wy);
        }
    }
    r
}

fn cone_height(apex: &Point, tri: &[Point; 3]) -> f64 {
    3.0 * signed_volume_tet(apex, &tri[0], &tri[1], &tri[2]) / triangle_area_3d(&tri[0], &tri[1], &tri[2])
}

/// Radial point count that keeps a base rule of degree `q` exact under the cone map.
fn radial_points(q: usize) -> usize {
    (q + 3).div_ceil(2)
}

/// Tensor Gauss rule on a parallelogram face given by its cyclic corners.
fn quad_face_rule(b: &[Point; 4], n: usize) -> Rule {
    let g = gauss_ref(n);
    let e1 = sub(&b[1], &b[0]);
    let e2 = sub(&b[3], &b[0]);
    let c = cross(&e1, &e2);
    let area = dot(&c, &c).sqrt();
    let mut r = Rule::default();
    for (&s, &ws) in g.points.iter().zip(&g.weights) {
        for (&t, &wt) in g.points.iter().zip(&g.weights) {
            let x = [
                b[0][0] + s * e1[0] + t * e2[0],
                b[0][1] + s * e1[1] + t * e2[1],
                b[0][2] + s * e1[2] + t * e2[2],
            ];
            r.push(x, ws * wt * area);
        }
    }
    r
}

fn pyramid_height(cell: &SimplexCell) -> f64 {
    let b = cell.pyramid_base();
    let c = cross(&sub(&b[1], &b[0]), &sub(&b[3], &b[0]));
    3.0 * cell.volume() / dot(&c, &c).sqrt()
}

/// Index sequence a sub-cell belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleFamily {
    Box,
    Triangle,
    /// Tetrahedral fan: triangle catalog on each base times a radial rule.
    Fan,
    Pyramid,
}

impl RuleFamily {
    pub fn of(cell: &SubCell) -> Self {
        match cell {
            SubCell::Box(_) => RuleFamily::Box,
            SubCell::Simplex(s) => match s.kind {
                SimplexKind::Triangle => RuleFamily::Triangle,
                SimplexKind::Tetrahedron => RuleFamily::Fan,
                SimplexKind::Pyramid => RuleFamily::Pyramid,
            },
        }
    }

    pub fn max_index(self) -> usize {
        match self {
            RuleFamily::Box => 15,
            RuleFamily::Triangle | RuleFamily::Fan => triangle_catalog().len() - 1,
            RuleFamily::Pyramid => 6,
        }
    }

    /// Total polynomial degree integrated exactly by entry `index`.
    pub fn degree(self, index: usize) -> usize {
        match self {
            RuleFamily::Box | RuleFamily::Pyramid => 2 * index + 1,
            RuleFamily::Triangle | RuleFamily::Fan => triangle_catalog()[index.min(self.max_index())].degree,
        }
    }

    /// Smallest index whose rule is exact for total degree `q`, clamped to the top entry.
    pub fn index_for_degree(self, q: usize) -> usize {
        (0..=self.max_index()).find(|&i| self.degree(i) >= q).unwrap_or(self.max_index())
    }

    pub fn name(self) -> &'static str {
        match self {
            RuleFamily::Box => "box",
            RuleFamily::Triangle => "triangle",
            RuleFamily::Fan => "tetrahedron",
            RuleFamily::Pyramid => "pyramid",
        }
    }
}

/// Number of points of entry `index` on `cell`, without building the rule.
pub fn rule_size(cell: &SubCell, index: usize) -> Result<usize> {
    let fam = RuleFamily::of(cell);
    if index > fam.max_index() {
        return Err(Error::Depleted { kind: fam.name(), index });
    }
    Ok(match cell {
        SubCell::Box(b) => (index + 1).pow(b.dim as u32),
        SubCell::Simplex(s) => match s.kind {
            SimplexKind::Triangle => triangle_catalog()[index].len(),
            SimplexKind::Tetrahedron => {
                let e = &triangle_catalog()[index];
                s.n_fan_triangles() * e.len() * radial_points(e.degree)
            }
            SimplexKind::Pyramid => (index + 1) * (index + 1) * (index + 2),
        },
    })
}

/// Catalog rule on a tessellated cell. Triangles and pyramids follow their
/// sequences; a tetrahedron with four vertices uses the tetrahedron catalog,
/// while a multi-triangle fan uses the conical product on each base triangle.
pub fn simplex_rule(kind: SimplexKind, index: usize, cell: &SimplexCell) -> Result<Rule> {
    if kind != cell.kind {
        return Err(Error::InvalidArgument(format!(
            "requested a {} rule on a {} cell",
            kind.name(),
            cell.kind.name()
        )));
    }
    match kind {
        SimplexKind::Tetrahedron if cell.vertices.len() == 4 => {
            let v = &cell.vertices;
            tetrahedron_catalog_rule(index, &[v[0], v[1], v[2], v[3]])
        }
        _ => cell_rule(&SubCell::Simplex(cell.clone()), index, BoxRuleKind::Gauss),
    }
}

/// Entry `index` of the nested sequence of `cell`'s family.
pub fn cell_rule(cell: &SubCell, index: usize, box_kind: BoxRuleKind) -> Result<Rule> {
    let fam = RuleFamily::of(cell);
    if index > fam.max_index() {
        return Err(Error::Depleted { kind: fam.name(), index });
    }
    match cell {
        SubCell::Box(b) => box_rule(box_kind, index + 1, b),
        SubCell::Simplex(s) => Ok(match s.kind {
            SimplexKind::Triangle => {
                let v = &s.vertices;
                triangle_catalog_rule(index, &[v[0], v[1], v[2]])?
            }
            SimplexKind::Tetrahedron => {
                let q = triangle_catalog()[index].degree;
                let mut r = Rule::default();
                for tri in s.fan_triangles() {
                    let base = triangle_catalog_rule(index, &tri)?;
                    r.extend(cone_rule(s.apex(), &base, cone_height(s.apex(), &tri), radial_points(q)));
                }
                r
            }
            SimplexKind::Pyramid => {
                let base = quad_face_rule(&s.pyramid_base(), index + 1);
                cone_rule(s.apex(), &base, pyramid_height(s), index + 2)
            }
        }),
    }
}

/// Collapsed-coordinate rule on a triangle with `n` points per direction.
fn duffy_triangle(v: &[Point; 3], n: usize) -> Rule {
    let g = gauss_ref(n);
    let area2 = 2.0 * triangle_measure(v);
    let e1 = sub(&v[1], &v[0]);
    let e2 = sub(&v[2], &v[1]);
    let mut r = Rule::default();
    for (&u, &wu) in g.points.iter().zip(&g.weights) {
        for (&t, &wt) in g.points.iter().zip(&g.weights) {
            let x = [
                v[0][0] + u * e1[0] + u * t * e2[0],
                v[0][1] + u * e1[1] + u * t * e2[1],
                v[0][2] + u * e1[2] + u * t * e2[2],
            ];
            r.push(x, wu * wt * u * area2);
        }
    }
    r
}

/// Rule exact for every polynomial of total degree `t` on `cell`.
pub fn reference_cell_rule(cell: &SubCell, t: usize) -> Rule {
    match cell {
        SubCell::Box(b) => tensor_box(&gauss_ref((t + 1).div_ceil(2).max(1)), b),
        SubCell::Simplex(s) => {
            let n = (t + 3).div_ceil(2) + 1;
            match s.kind {
                SimplexKind::Triangle => {
                    let v = &s.vertices;
                    duffy_triangle(&[v[0], v[1], v[2]], (t + 2).div_ceil(2) + 1)
                }
                SimplexKind::Tetrahedron => {
                    let mut r = Rule::default();
                    for tri in s.fan_triangles() {
                        let base = duffy_triangle(&tri, n);
                        r.extend(cone_rule(s.apex(), &base, cone_height(s.apex(), &tri), n));
                    }
                    r
                }
                SimplexKind::Pyramid => cone_rule(s.apex(), &quad_face_rule(&s.pyramid_base(), n), pyramid_height(s), n),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tri(v: [[f64; 2]; 3]) -> SimplexCell {
        SimplexCell {
            kind: SimplexKind::Triangle,
            vertices: v.iter().map(|p| [p[0], p[1], 0.0]).collect(),
            level: 4,
        }
    }

    fn unit_box(dim: usize) -> SubCell {
        SubCell::Box(BoxCell::unit(dim))
    }

    /// Pyramid over the bottom face of the unit cube with apex at its center.
    fn pyramid() -> SimplexCell {
        SimplexCell {
            kind: SimplexKind::Pyramid,
            vertices: vec![[0.5, 0.5, 0.5], [0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0], [1.0, 0.0, 0.0]],
            level: 4,
        }
    }

    /// Fan of two tetrahedra over the bottom face, split along a diagonal.
    fn fan() -> SimplexCell {
        SimplexCell {
            kind: SimplexKind::Tetrahedron,
            vertices: vec![
                [0.5, 0.5, 0.5],
                [0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [1.0, 1.0, 0.0],
                [0.0, 0.0, 0.0],
                [1.0, 1.0, 0.0],
                [1.0, 0.0, 0.0],
            ],
            level: 4,
        }
    }

    #[test]
    fn box_rules() {
        let r = box_rule(BoxRuleKind::Gauss, 2, &BoxCell::unit(2)).unwrap();
        assert_eq!(r.len(), 4);
        assert!(r.weights.iter().all(|&w| (w - 0.25).abs() < 1e-15));
        let r = box_rule(BoxRuleKind::Uniform, 2, &BoxCell::unit(2)).unwrap();
        assert_eq!(r.points[0][..2], [0.25, 0.25]);
        let c = BoxCell { level: 3, origin: [0.5, 0.25, 0.0], size: 0.125, dim: 3 };
        let r = box_rule(BoxRuleKind::Gauss, 3, &c).unwrap();
        assert!((r.total_weight() / 0.125f64.powi(3) - 1.0).abs() < 1e-14);
        assert!(box_rule(BoxRuleKind::Gauss, 0, &c).is_err());
    }

    #[test]
    fn centroid_rule_on_triangle() {
        let t = tri([[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]]);
        let r = simplex_rule(SimplexKind::Triangle, 0, &t).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r.weights[0] - 1.0).abs() < 1e-15);
        assert!((r.points[0][0] - 2.0 / 3.0).abs() < 1e-15 && (r.points[0][1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn catalog_top_entries() {
        let t = tri([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let top = RuleFamily::Triangle.max_index();
        assert_eq!(simplex_rule(SimplexKind::Triangle, top, &t).unwrap().len(), 12);
        assert_eq!(RuleFamily::Triangle.degree(top), 6);
        assert!(matches!(
            simplex_rule(SimplexKind::Triangle, top + 1, &t),
            Err(Error::Depleted { kind: "triangle", .. })
        ));
    }

    #[test]
    fn sequence_sizes() {
        let f = SubCell::Simplex(fan());
        let sizes: Vec<_> = (0..=4).map(|i| rule_size(&f, i).unwrap()).collect();
        assert_eq!(sizes, vec![4, 18, 48, 56, 120]);
        let p = SubCell::Simplex(pyramid());
        assert_eq!(rule_size(&p, 0).unwrap(), 2);
        assert_eq!(rule_size(&p, 1).unwrap(), 12);
        assert_eq!(rule_size(&unit_box(3), 1).unwrap(), 8);
        for (c, n) in [(f, 5), (p, 7), (unit_box(2), 16)] {
            for i in 0..n {
                assert_eq!(rule_size(&c, i).unwrap(), cell_rule(&c, i, BoxRuleKind::Gauss).unwrap().len());
            }
            assert!(rule_size(&c, n).is_err());
        }
    }

    fn monomial(e: [usize; 3]) -> impl Fn(&Point) -> f64 {
        move |x| (0..3).map(|i| x[i].powi(e[i] as i32)).product()
    }

    fn exponents(dim: usize, q: usize) -> Vec<[usize; 3]> {
        let mut out = Vec::new();
        for a in 0..=q {
            for b in 0..=q - a {
                if dim == 2 {
                    out.push([a, b, 0]);
                } else {
                    for c in 0..=q - a - b {
                        out.push([a, b, c]);
                    }
                }
            }
        }
        out
    }

    fn check_family_exactness(cell: &SubCell, dim: usize) {
        let fam = RuleFamily::of(cell);
        let reference = reference_cell_rule(cell, 2 * fam.max_index() + 2);
        for i in 0..=fam.max_index().min(6) {
            let r = cell_rule(cell, i, BoxRuleKind::Gauss).unwrap();
            assert!(r.weights.iter().all(|&w| w > 0.0));
            assert!(((r.total_weight() - cell.volume()) / cell.volume()).abs() < 1e-12);
            for e in exponents(dim, fam.degree(i)) {
                let f = monomial(e);
                let (a, b) = (r.integrate(&f), reference.integrate(&f));
                assert!((a - b).abs() < 1e-13, "{:?} index {i} exps {e:?}: {a} vs {b}", fam);
            }
        }
    }

    #[test]
    fn nested_exactness_of_every_family() {
        check_family_exactness(&SubCell::Simplex(tri([[0.1, 0.2], [0.9, 0.3], [0.4, 0.8]])), 2);
        check_family_exactness(&SubCell::Simplex(fan()), 3);
        check_family_exactness(&SubCell::Simplex(pyramid()), 3);
        check_family_exactness(&SubCell::Box(BoxCell { level: 2, origin: [0.25, 0.5, 0.0], size: 0.25, dim: 2 }), 2);
    }

    #[test]
    fn standalone_tetrahedron_catalog() {
        let v = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let cell = SimplexCell { kind: SimplexKind::Tetrahedron, vertices: v.to_vec(), level: 4 };
        let sizes: Vec<_> = (0..tetrahedron_catalog().len())
            .map(|i| simplex_rule(SimplexKind::Tetrahedron, i, &cell).unwrap().len())
            .collect();
        assert_eq!(sizes[0], 1);
        let r = simplex_rule(SimplexKind::Tetrahedron, 0, &cell).unwrap();
        assert!((r.weights[0] - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn reference_rules_are_exact_for_pyramids_and_fans() {
        // x^a y^b z^c over the pyramid, against an independent slice integral
        let p = SubCell::Simplex(pyramid());
        let r = reference_cell_rule(&p, 8);
        // z-slices of the pyramid are squares [z, 1−z]² for z ∈ [0, ½]
        let g = crate::quadrature::gauss_1d(20).unwrap();
        for e in exponents(3, 8) {
            let slice = |z: f64| {
                let lo = z;
                let hi = 1.0 - z;
                let m = |k: usize| (hi.powi(k as i32 + 1) - lo.powi(k as i32 + 1)) / (k as f64 + 1.0);
                m(e[0]) * m(e[1]) * z.powi(e[2] as i32)
            };
            let exact = 0.5 * g.integrate(|t| slice(0.5 * t));
            let got = r.integrate(monomial(e));
            assert!((got - exact).abs() < 1e-14, "{e:?}: {got} vs {exact}");
        }
        let f = SubCell::Simplex(fan());
        let rf = reference_cell_rule(&f, 8);
        for e in exponents(3, 8) {
            let (a, b) = (rf.integrate(monomial(e)), r.integrate(monomial(e)));
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn reference_triangle_vs_subdivision() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let t = tri([[0.0, 0.0], [1.0, 0.2], [0.3, 0.9]]);
        let coef: Vec<f64> = (0..45).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let es = exponents(2, 8);
        let poly = |x: &Point| es.iter().zip(&coef).map(|(e, c)| c * monomial(*e)(x)).sum::<f64>();
        let r = reference_cell_rule(&SubCell::Simplex(t.clone()), 8);
        let got = r.integrate(poly);
        // uniform refinement into 4^6 similar triangles with a degree-6 rule on each
        let mut tris = vec![[t.vertices[0], t.vertices[1], t.vertices[2]]];
        for _ in 0..4 {
            tris = tris
                .into_iter()
                .flat_map(|[a, b, c]| {
                    let m = |p: &Point, q: &Point| [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0, 0.0];
                    let (ab, bc, ca) = (m(&a, &b), m(&b, &c), m(&c, &a));
                    [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
                })
                .collect();
        }
        let oracle: f64 = tris.iter().map(|v| triangle_catalog_rule(4, v).unwrap().integrate(poly)).sum();
        assert!((got - oracle).abs() < 1e-8 * oracle.abs().max(1.0), "{got} vs {oracle}");
    }
}
