//! Midpoint tessellation of cut leaf cells.
//!
//! Every edge with a sign change is split at the linear zero crossing. Zero
//! points on the center-to-corner diagonals (center value from multilinear
//! interpolation) are averaged into an approximate midpoint of the trimmed
//! boundary, and every edge piece is extruded toward that midpoint. In three
//! dimensions the planar procedure runs on each face first; untrimmed faces
//! become pyramids and trimmed faces become tetrahedral fans with the cell
//! midpoint as apex.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    cross, dot, lerp, mean, signed_area_2d, signed_volume_tet, sub, triangle_area_3d, BoxCell, Point,
    SignRule,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SimplexKind {
    Triangle,
    /// One or more tetrahedra sharing an apex, with coplanar base triangles.
    Tetrahedron,
    Pyramid,
}

impl SimplexKind {
    pub fn name(self) -> &'static str {
        match self {
            SimplexKind::Triangle => "triangle",
            SimplexKind::Tetrahedron => "tetrahedron",
            SimplexKind::Pyramid => "pyramid",
        }
    }
}

/// A tessellated sub-cell.
///
/// Vertex layout by kind:
/// * `Triangle`: three vertices, counter-clockwise.
/// * `Tetrahedron`: the apex, then three vertices per base triangle. A plain
///   tetrahedron has exactly four vertices.
/// * `Pyramid`: the apex, then the four base corners in cyclic order.
///
/// Base facets are oriented so that their normal points away from the apex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexCell {
    pub kind: SimplexKind,
    pub vertices: Vec<Point>,
    pub level: u32,
}

impl SimplexCell {
    pub fn apex(&self) -> &Point {
        &self.vertices[0]
    }

    /// Base triangles of a tetrahedral fan.
    pub fn fan_triangles(&self) -> impl Iterator<Item = [Point; 3]> + '_ {
        debug_assert_eq!(self.kind, SimplexKind::Tetrahedron);
        self.vertices[1..].chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }

    pub fn n_fan_triangles(&self) -> usize {
        (self.vertices.len() - 1) / 3
    }

    pub fn pyramid_base(&self) -> [Point; 4] {
        debug_assert_eq!(self.kind, SimplexKind::Pyramid);
        [self.vertices[1], self.vertices[2], self.vertices[3], self.vertices[4]]
    }

    /// Signed volume (area in two dimensions); positive for valid cells.
    pub fn volume(&self) -> f64 {
        let v = &self.vertices;
        match self.kind {
            SimplexKind::Triangle => signed_area_2d(&v[0], &v[1], &v[2]),
            SimplexKind::Tetrahedron => {
                self.fan_triangles().map(|[a, b, c]| signed_volume_tet(&v[0], &a, &b, &c)).sum()
            }
            SimplexKind::Pyramid => {
                signed_volume_tet(&v[0], &v[1], &v[2], &v[3]) + signed_volume_tet(&v[0], &v[1], &v[3], &v[4])
            }
        }
    }

    pub fn centroid(&self) -> Point {
        match self.kind {
            SimplexKind::Triangle => mean(&self.vertices),
            _ => {
                // volume-weighted centroid of the constituent tetrahedra
                let apex = self.vertices[0];
                let tets: Vec<[Point; 3]> = match self.kind {
                    SimplexKind::Tetrahedron => self.fan_triangles().collect(),
                    _ => {
                        let b = self.pyramid_base();
                        vec![[b[0], b[1], b[2]], [b[0], b[2], b[3]]]
                    }
                };
                let mut c = [0.0; 3];
                let mut vol = 0.0;
                for [a, b, d] in tets {
                    let w = signed_volume_tet(&apex, &a, &b, &d);
                    let m = mean(&[apex, a, b, d]);
                    for i in 0..3 {
                        c[i] += w * m[i];
                    }
                    vol += w;
                }
                c.map(|x| x / vol)
            }
        }
    }
}

/// Piecewise-linear boundary element: a segment in 2D, a triangle in 3D.
pub type Facet = Vec<Point>;

pub fn facet_measure(f: &Facet) -> f64 {
    match f.len() {
        2 => {
            let d = sub(&f[1], &f[0]);
            dot(&d, &d).sqrt()
        }
        3 => triangle_area_3d(&f[0], &f[1], &f[2]),
        n => panic!("facet with {n} vertices"),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TessellationResult {
    pub interior_cells: Vec<SimplexCell>,
    pub exterior_cells: Vec<SimplexCell>,
    pub boundary_facets: Vec<Facet>,
    pub midpoint: Point,
}

impl TessellationResult {
    pub fn interior_volume(&self) -> f64 {
        self.interior_cells.iter().map(SimplexCell::volume).sum()
    }

    pub fn exterior_volume(&self) -> f64 {
        self.exterior_cells.iter().map(SimplexCell::volume).sum()
    }
}

/// Result of trimming one planar quadrilateral.
struct PlanarCut {
    /// Edge pieces `(from, to, positive)` in the cyclic order of the input.
    pieces: Vec<(Point, Point, bool)>,
    edge_zeros: Vec<Point>,
    midpoint: Point,
}

fn zero_crossing(a: &Point, va: f64, b: &Point, vb: f64) -> Point {
    let t = (va / (va - vb)).clamp(0.0, 1.0);
    lerp(a, b, t)
}

/// Trims a quadrilateral with corners in cyclic order. Returns `None` when all
/// corners share a sign.
fn cut_quad(verts: &[Point; 4], vals: &[f64; 4], rule: SignRule) -> Result<Option<PlanarCut>> {
    let signs = vals.map(|v| rule.is_positive(v));
    if signs.iter().all(|&s| s == signs[0]) {
        return Ok(None);
    }
    let center = mean(verts);
    let vc = vals.iter().sum::<f64>() / 4.0;
    let sc = rule.is_positive(vc);
    let diag_zeros: Vec<Point> = (0..4)
        .filter(|&i| signs[i] != sc)
        .map(|i| zero_crossing(&center, vc, &verts[i], vals[i]))
        .collect();

    let mut pieces = Vec::with_capacity(6);
    let mut edge_zeros = Vec::with_capacity(2);
    for i in 0..4 {
        let j = (i + 1) % 4;
        let (a, b) = (verts[i], verts[j]);
        if signs[i] == signs[j] {
            pieces.push((a, b, signs[i]));
        } else {
            let z = zero_crossing(&a, vals[i], &b, vals[j]);
            pieces.push((a, z, signs[i]));
            pieces.push((z, b, signs[j]));
            edge_zeros.push(z);
        }
    }
    let midpoint = if diag_zeros.is_empty() { mean(&edge_zeros) } else { mean(&diag_zeros) };
    if midpoint.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateCut);
    }
    Ok(Some(PlanarCut { pieces, edge_zeros, midpoint }))
}

fn same_point(a: &Point, b: &Point) -> bool {
    a == b
}

/// Tessellates a cut square cell. `values` holds the corner values in
/// lexicographic order: (0,0), (0,1), (1,0), (1,1).
pub fn tessellate_2d(values: &[f64; 4], cell: &BoxCell, rule: SignRule) -> Result<TessellationResult> {
    debug_assert_eq!(cell.dim, 2);
    // counter-clockwise traversal of the lexicographic corners
    const CCW: [usize; 4] = [0, 2, 3, 1];
    let verts = CCW.map(|c| cell.corner(c));
    let vals = CCW.map(|c| values[c]);
    let cut = cut_quad(&verts, &vals, rule)?.ok_or(Error::NotCut)?;
    let level = cell.level + 1;
    let tiny = 1e-15 * cell.volume();

    let mut interior_cells = Vec::new();
    let mut exterior_cells = Vec::new();
    for (p, q, positive) in &cut.pieces {
        if same_point(p, q) {
            continue;
        }
        let tri = SimplexCell { kind: SimplexKind::Triangle, vertices: vec![*p, *q, cut.midpoint], level };
        let area = tri.volume();
        debug_assert!(area > -tiny, "negatively oriented triangle ({area:e})");
        if area <= tiny {
            continue;
        }
        if *positive {
            interior_cells.push(tri);
        } else {
            exterior_cells.push(tri);
        }
    }
    let boundary_facets = cut.edge_zeros.iter().map(|z| vec![*z, cut.midpoint]).collect();
    Ok(TessellationResult { interior_cells, exterior_cells, boundary_facets, midpoint: cut.midpoint })
}

/// Faces of the unit cube as lexicographic corner indices, in cyclic order.
const CUBE_FACES: [[usize; 4]; 6] = [
    [0, 1, 3, 2], // x = 0
    [4, 6, 7, 5], // x = 1
    [0, 4, 5, 1], // y = 0
    [2, 3, 7, 6], // y = 1
    [0, 2, 6, 4], // z = 0
    [1, 5, 7, 3], // z = 1
];

const CUBE_EDGES: [(usize, usize); 12] = [
    (0, 1),
    (2, 3),
    (4, 5),
    (6, 7),
    (0, 2),
    (1, 3),
    (4, 6),
    (5, 7),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

/// Tessellates a cut cube cell. `values` holds the corner values in
/// lexicographic order (x₁ slowest).
pub fn tessellate_3d(values: &[f64; 8], cell: &BoxCell, rule: SignRule) -> Result<TessellationResult> {
    debug_assert_eq!(cell.dim, 3);
    let signs = values.map(|v| rule.is_positive(v));
    if signs.iter().all(|&s| s == signs[0]) {
        return Err(Error::NotCut);
    }
    let corners: Vec<Point> = (0..8).map(|c| cell.corner(c)).collect();
    let center = cell.center();
    let vc = values.iter().sum::<f64>() / 8.0;
    let sc = rule.is_positive(vc);
    let diag_zeros: Vec<Point> = (0..8)
        .filter(|&i| signs[i] != sc)
        .map(|i| zero_crossing(&center, vc, &corners[i], values[i]))
        .collect();
    let midpoint = if diag_zeros.is_empty() {
        let edge_zeros: Vec<Point> = CUBE_EDGES
            .iter()
            .filter(|(a, b)| signs[*a] != signs[*b])
            .map(|&(a, b)| zero_crossing(&corners[a], values[a], &corners[b], values[b]))
            .collect();
        mean(&edge_zeros)
    } else {
        mean(&diag_zeros)
    };
    if midpoint.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateCut);
    }

    let level = cell.level + 1;
    let tiny = 1e-15 * cell.volume();
    let mut interior_cells = Vec::new();
    let mut exterior_cells = Vec::new();
    let mut boundary_facets = Vec::new();

    for face in CUBE_FACES {
        let mut verts = face.map(|c| corners[c]);
        let mut vals = face.map(|c| values[c]);
        // orient the face so that its normal points out of the cube
        let fc = mean(&verts);
        let n = cross(&sub(&verts[1], &verts[0]), &sub(&verts[2], &verts[0]));
        if dot(&n, &sub(&fc, &center)) < 0.0 {
            verts.reverse();
            vals.reverse();
        }
        match cut_quad(&verts, &vals, rule)? {
            None => {
                let mut v = Vec::with_capacity(5);
                v.push(midpoint);
                v.extend_from_slice(&verts);
                let pyr = SimplexCell { kind: SimplexKind::Pyramid, vertices: v, level };
                if pyr.volume() <= tiny {
                    continue;
                }
                if rule.is_positive(vals[0]) {
                    interior_cells.push(pyr);
                } else {
                    exterior_cells.push(pyr);
                }
            }
            Some(cut) => {
                let mut pos = vec![midpoint];
                let mut neg = vec![midpoint];
                for (p, q, positive) in &cut.pieces {
                    if same_point(p, q) {
                        continue;
                    }
                    let vol = signed_volume_tet(&midpoint, p, q, &cut.midpoint);
                    debug_assert!(vol > -tiny, "negatively oriented tetrahedron ({vol:e})");
                    if vol <= tiny {
                        continue;
                    }
                    let target = if *positive { &mut pos } else { &mut neg };
                    target.extend_from_slice(&[*p, *q, cut.midpoint]);
                }
                if pos.len() > 1 {
                    interior_cells.push(SimplexCell { kind: SimplexKind::Tetrahedron, vertices: pos, level });
                }
                if neg.len() > 1 {
                    exterior_cells.push(SimplexCell { kind: SimplexKind::Tetrahedron, vertices: neg, level });
                }
                for z in &cut.edge_zeros {
                    boundary_facets.push(vec![*z, cut.midpoint, midpoint]);
                }
            }
        }
    }
    Ok(TessellationResult { interior_cells, exterior_cells, boundary_facets, midpoint })
}

/// Dispatches on the cell dimension.
pub fn tessellate(values: &[f64], cell: &BoxCell, rule: SignRule) -> Result<TessellationResult> {
    match cell.dim {
        2 => tessellate_2d(values.try_into().map_err(|_| bad_len(values, 4))?, cell, rule),
        3 => tessellate_3d(values.try_into().map_err(|_| bad_len(values, 8))?, cell, rule),
        d => Err(Error::InvalidArgument(format!("cannot tessellate a {d}-dimensional cell"))),
    }
}

fn bad_len(values: &[f64], n: usize) -> Error {
    Error::InvalidArgument(format!("expected {n} corner values, got {}", values.len()))
}
