//! Plain SVG drawings of 2D partitions and their integration points.

use std::fmt::Write as _;

use cutquad::{Partition, Point, QuadratureScheme, SubCell};

const SIDE: f64 = 360.0;
const MARGIN: f64 = 20.0;
const TITLE: f64 = 24.0;

struct Frame {
    x0: f64,
    y0: f64,
}

impl Frame {
    fn map(&self, x: &Point) -> (f64, f64) {
        (self.x0 + x[0] * SIDE, self.y0 + (1.0 - x[1]) * SIDE)
    }
}

fn polygon(s: &mut String, f: &Frame, pts: &[Point], style: &str) {
    let coords: Vec<String> = pts
        .iter()
        .map(|p| {
            let (x, y) = f.map(p);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ = writeln!(s, r#"<polygon points="{}" {style}/>"#, coords.join(" "));
}

/// One panel per scheme, side by side: cell outlines, the trimmed boundary,
/// points with area proportional to weight and point counts on larger boxes.
pub fn render(p: &Partition, panels: &[(&str, &QuadratureScheme, f64)]) -> String {
    let width = MARGIN + panels.len() as f64 * (SIDE + MARGIN);
    let height = TITLE + SIDE + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let cells = p.cells();
    let origin = p.element.origin;
    let h = p.element.size;
    // element coordinates are drawn normalized to the unit square
    let unit = |x: &Point| [(x[0] - origin[0]) / h, (x[1] - origin[1]) / h, 0.0];
    for (i, (label, scheme, error)) in panels.iter().enumerate() {
        let f = Frame { x0: MARGIN + i as f64 * (SIDE + MARGIN), y0: MARGIN + TITLE };
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="14">{label}: {} points, error {error:.2e}</text>"#,
            f.x0,
            MARGIN + 14.0,
            scheme.total()
        );
        for (id, c) in cells.iter().enumerate() {
            match c {
                SubCell::Box(b) => {
                    let lo = unit(&b.origin);
                    let (x, y) = f.map(&[lo[0], lo[1] + b.size / h, 0.0]);
                    let side = b.size / h * SIDE;
                    let _ = writeln!(
                        s,
                        r##"<rect x="{x:.2}" y="{y:.2}" width="{side:.2}" height="{side:.2}" fill="none" stroke="#888" stroke-width="0.8"/>"##
                    );
                    if side >= 28.0 {
                        let (cx, cy) = f.map(&unit(&b.center()));
                        let _ = writeln!(
                            s,
                            r##"<text x="{cx:.2}" y="{:.2}" font-size="{:.1}" fill="#555" text-anchor="middle">{}</text>"##,
                            cy + side * 0.12,
                            (side * 0.3).min(28.0),
                            scheme.cell_size(id)
                        );
                    }
                }
                SubCell::Simplex(t) => {
                    let pts: Vec<Point> = t.vertices.iter().map(unit).collect();
                    polygon(&mut s, &f, &pts, r##"fill="none" stroke="#9bc" stroke-width="0.5""##);
                }
            }
        }
        for facet in &p.boundary_facets {
            let (a, b) = (f.map(&unit(&facet[0])), f.map(&unit(&facet[facet.len() - 1])));
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#c33" stroke-width="1.5"/>"##,
                a.0, a.1, b.0, b.1
            );
        }
        let wmax = scheme.weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        for (x, w) in scheme.points.iter().zip(&scheme.weights) {
            let (cx, cy) = f.map(&unit(x));
            let r = 0.8 + 4.0 * (w.abs() / wmax).sqrt();
            let _ = writeln!(s, r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{r:.2}" fill="#1f4e9a" fill-opacity="0.7"/>"##);
        }
    }
    s.push_str("</svg>\n");
    s
}
