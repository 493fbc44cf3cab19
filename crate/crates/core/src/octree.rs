//! Recursive bisection of a cut element into preserved boxes and tessellated leaves.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{classify_cell, BoxCell, Classification, LevelSet, Point, SignRule};
use crate::tessellation::{facet_measure, tessellate, Facet, SimplexCell, SimplexKind};

/// An integrable sub-cell of a partition.
#[derive(Clone, Debug, PartialEq)]
pub enum SubCell {
    Box(BoxCell),
    Simplex(SimplexCell),
}

impl SubCell {
    pub fn level(&self) -> u32 {
        match self {
            SubCell::Box(b) => b.level,
            SubCell::Simplex(s) => s.level,
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            SubCell::Box(b) => b.volume(),
            SubCell::Simplex(s) => s.volume(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            SubCell::Box(_) => "box",
            SubCell::Simplex(s) => s.kind.name(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    pub dim: usize,
    pub element: BoxCell,
    pub max_depth: u32,
    /// `levels[ℓ]` holds the preserved boxes of level ℓ. Level 0 is non-empty
    /// only for an untrimmed element.
    pub levels: Vec<Vec<BoxCell>>,
    pub cut_leaves: Vec<BoxCell>,
    pub tessellated: Vec<SimplexCell>,
    pub boundary_facets: Vec<Facet>,
    /// Set when the element lies entirely outside the domain.
    pub outside: bool,
}

/// Per-level sub-cell counts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Census {
    /// `preserved[ℓ]` is m⁺_ℓ; index 0 counts an untrimmed element.
    pub preserved: Vec<usize>,
    pub cut_leaves: usize,
    pub tessellated: usize,
    pub triangles: usize,
    pub tetrahedra: usize,
    pub pyramids: usize,
}

impl Census {
    pub fn total_cells(&self) -> usize {
        self.preserved.iter().sum::<usize>() + self.tessellated
    }
}

impl Partition {
    /// All integrable sub-cells in id order: boxes by level, then tessellated cells.
    pub fn cells(&self) -> Vec<SubCell> {
        self.levels
            .iter()
            .flatten()
            .cloned()
            .map(SubCell::Box)
            .chain(self.tessellated.iter().cloned().map(SubCell::Simplex))
            .collect()
    }

    pub fn n_cells(&self) -> usize {
        self.levels.iter().map(Vec::len).sum::<usize>() + self.tessellated.len()
    }

    /// Number of cell levels that can hold sub-cells: 1..=ρ̄+1 (or just 0 if untrimmed).
    pub fn n_levels(&self) -> usize {
        self.max_depth as usize + 2
    }

    pub fn is_untrimmed(&self) -> bool {
        !self.levels[0].is_empty()
    }

    pub fn surface_measure(&self) -> f64 {
        self.boundary_facets.iter().map(facet_measure).sum()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let d = self.dim;
        let levels: Vec<_> = self
            .levels
            .iter()
            .enumerate()
            .filter(|(_, b)| !b.is_empty())
            .map(|(l, boxes)| {
                let boxes: Vec<_> = boxes
                    .iter()
                    .map(|b| serde_json::json!({"origin": &b.origin[..d], "size": b.size}))
                    .collect();
                serde_json::json!({"level": l, "boxes": boxes})
            })
            .collect();
        let coords = |v: &[Point]| v.iter().map(|p| p[..d].to_vec()).collect::<Vec<_>>();
        let tess: Vec<_> = self
            .tessellated
            .iter()
            .map(|c| serde_json::json!({"kind": c.kind.name(), "vertices": coords(&c.vertices)}))
            .collect();
        let facets: Vec<_> = self.boundary_facets.iter().map(|f| coords(f)).collect();
        serde_json::json!({
            "max_depth": self.max_depth,
            "levels": levels,
            "tessellated": tess,
            "boundary_facets": facets,
        })
    }
}

/// Bisects `element` recursively down to `max_depth`, keeping inside boxes,
/// discarding outside ones and tessellating the cut leaves.
pub fn partition_element(field: &dyn LevelSet, element: &BoxCell, max_depth: u32) -> Result<Partition> {
    if max_depth < 1 {
        return Err(Error::InvalidArgument("max_depth must be at least 1".into()));
    }
    if field.dim() != element.dim {
        return Err(Error::InvalidArgument(format!(
            "field dimension {} does not match element dimension {}",
            field.dim(),
            element.dim
        )));
    }
    let rule = SignRule::for_element(element.size);
    let mut p = Partition {
        dim: element.dim,
        element: element.clone(),
        max_depth,
        levels: vec![Vec::new(); max_depth as usize + 1],
        cut_leaves: Vec::new(),
        tessellated: Vec::new(),
        boundary_facets: Vec::new(),
        outside: false,
    };
    let mut root = element.clone();
    root.level = 0;
    match classify_cell(field, &root, rule)?.classification {
        Classification::Inside => {
            p.levels[0].push(root);
            return Ok(p);
        }
        Classification::Outside => {
            p.outside = true;
            return Ok(p);
        }
        Classification::Cut => {}
    }

    let mut frontier = vec![root];
    for level in 1..=max_depth {
        let mut next = Vec::new();
        for parent in &frontier {
            for child in parent.children() {
                let pat = classify_cell(field, &child, rule)?;
                match pat.classification {
                    Classification::Inside => p.levels[level as usize].push(child),
                    Classification::Outside => {}
                    Classification::Cut if level < max_depth => next.push(child),
                    Classification::Cut => {
                        if pat.corners_mixed(rule) {
                            let t = tessellate(&pat.values, &child, rule)?;
                            p.tessellated.extend(t.interior_cells);
                            p.boundary_facets.extend(t.boundary_facets);
                            p.cut_leaves.push(child);
                        } else if rule.is_positive(pat.values[0]) {
                            // only the center sample disagrees: keep the whole box
                            p.levels[level as usize].push(child);
                        }
                    }
                }
            }
        }
        frontier = next;
    }
    Ok(p)
}

/// Interior volume of the partition.
pub fn partition_volume(p: &Partition) -> f64 {
    let boxes: f64 = p.levels.iter().flatten().map(BoxCell::volume).sum();
    let simplices: f64 = p.tessellated.iter().map(SimplexCell::volume).sum();
    boxes + simplices
}

pub fn subcell_census(p: &Partition) -> Census {
    let count = |k| p.tessellated.iter().filter(|c| c.kind == k).count();
    Census {
        preserved: p.levels.iter().map(Vec::len).collect(),
        cut_leaves: p.cut_leaves.len(),
        tessellated: p.tessellated.len(),
        triangles: count(SimplexKind::Triangle),
        tetrahedra: count(SimplexKind::Tetrahedron),
        pyramids: count(SimplexKind::Pyramid),
    }
}
