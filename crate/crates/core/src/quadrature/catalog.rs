//! Fully symmetric positive-weight rules on the reference triangle and tetrahedron.
//!
//! Points are stored as barycentric orbits with weights normalized to sum to
//! one. The triangle sequence skips a separate degree-3 entry: the smallest
//! positive symmetric degree-3 rule has six points, the same as the degree-4
//! rule. Likewise the tetrahedron sequence skips degree 4, whose smallest
//! positive symmetric rule has as many points as the 14-point degree-5 rule.

use std::sync::OnceLock;

#[derive(Clone, Copy, Debug)]
enum Orbit {
    /// Centroid.
    C,
    /// (a, …, a, 1 − (n−1)a).
    A(f64),
    /// Tetrahedron (a, a, ½ − a, ½ − a).
    S22(f64),
    /// Tetrahedron (a, a, b, 1 − 2a − b).
    S211(f64, f64),
    /// Triangle (a, b, 1 − a − b).
    S111(f64, f64),
}

struct SymRule {
    degree: usize,
    orbits: &'static [(Orbit, f64)],
}

const TRIANGLE: [SymRule; 5] = [
    SymRule { degree: 1, orbits: &[(Orbit::C, 1.0)] },
    SymRule { degree: 2, orbits: &[(Orbit::A(1.0 / 6.0), 1.0 / 3.0)] },
    SymRule {
        degree: 4,
        orbits: &[
            (Orbit::A(0.445948490915965), 0.223381589678011),
            (Orbit::A(0.091576213509771), 0.109951743655322),
        ],
    },
    SymRule {
        degree: 5,
        orbits: &[
            (Orbit::C, 0.225),
            (Orbit::A(0.470142064105115), 0.132394152788506),
            (Orbit::A(0.101286507323456), 0.125939180544827),
        ],
    },
    SymRule {
        degree: 6,
        orbits: &[
            (Orbit::A(0.249286745170910), 0.116786275726379),
            (Orbit::A(0.063089014491502), 0.050844906370207),
            (Orbit::S111(0.053145049844817, 0.310352451033784), 0.082851075618374),
        ],
    },
];

const TETRAHEDRON: [SymRule; 5] = [
    SymRule { degree: 1, orbits: &[(Orbit::C, 1.0)] },
    SymRule { degree: 2, orbits: &[(Orbit::A(0.1381966011250105), 0.25)] },
    SymRule {
        degree: 3,
        orbits: &[
            (Orbit::A(0.121607370476552), 0.14886475520679723),
            (Orbit::A(0.33145439777671576), 0.1011352447932028),
        ],
    },
    SymRule {
        degree: 5,
        orbits: &[
            (Orbit::A(0.3108859192633001), 0.11268792571801282),
            (Orbit::A(0.09273525031089075), 0.073493043116361),
            (Orbit::S22(0.045503704125652494), 0.042546020777084116),
        ],
    },
    SymRule {
        degree: 6,
        orbits: &[
            (Orbit::A(0.04067395853461176), 0.010077211055320832),
            (Orbit::A(0.2146028712591504), 0.03992275025817092),
            (Orbit::A(0.32233789014227704), 0.055357181543651296),
            (Orbit::S211(0.06366100187501764, 0.26967233145831626), 27.0 / 560.0),
        ],
    },
];

/// An expanded catalog entry: barycentric points and normalized weights.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub degree: usize,
    pub bary: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl CatalogEntry {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn permutations(base: &[f64]) -> Vec<Vec<f64>> {
    fn rec(rest: &mut Vec<f64>, cur: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if rest.is_empty() {
            if !out.contains(cur) {
                out.push(cur.clone());
            }
            return;
        }
        for i in 0..rest.len() {
            let x = rest.remove(i);
            cur.push(x);
            rec(rest, cur, out);
            cur.pop();
            rest.insert(i, x);
        }
    }
    let mut out = Vec::new();
    rec(&mut base.to_vec(), &mut Vec::new(), &mut out);
    out
}

fn expand(rule: &SymRule, nb: usize) -> CatalogEntry {
    let mut bary = Vec::new();
    let mut weights = Vec::new();
    for &(orbit, w) in rule.orbits {
        let base = match orbit {
            Orbit::C => vec![1.0 / nb as f64; nb],
            Orbit::A(a) => {
                let mut v = vec![a; nb - 1];
                v.push(1.0 - (nb - 1) as f64 * a);
                v
            }
            Orbit::S22(a) => vec![a, a, 0.5 - a, 0.5 - a],
            Orbit::S211(a, b) => vec![a, a, b, 1.0 - 2.0 * a - b],
            Orbit::S111(a, b) => vec![a, b, 1.0 - a - b],
        };
        debug_assert_eq!(base.len(), nb);
        for p in permutations(&base) {
            bary.push(p);
            weights.push(w);
        }
    }
    CatalogEntry { degree: rule.degree, bary, weights }
}

pub fn triangle_catalog() -> &'static [CatalogEntry] {
    static T: OnceLock<Vec<CatalogEntry>> = OnceLock::new();
    T.get_or_init(|| TRIANGLE.iter().map(|r| expand(r, 3)).collect())
}

pub fn tetrahedron_catalog() -> &'static [CatalogEntry] {
    static T: OnceLock<Vec<CatalogEntry>> = OnceLock::new();
    T.get_or_init(|| TETRAHEDRON.iter().map(|r| expand(r, 4)).collect())
}
