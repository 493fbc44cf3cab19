use std::fmt::Write as _;
use std::ops::Range;

use rayon::prelude::*;

use super::rules::{cell_rule, reference_cell_rule, BoxRuleKind, Rule};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::octree::{Partition, SubCell};

pub const CSV_HEADER: &str = "# cutcell-quad v1";

/// Rule index ι for every integrable sub-cell, by cell id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleIndexList {
    pub indices: Vec<usize>,
}

impl RuleIndexList {
    pub fn uniform(n_cells: usize, index: usize) -> Self {
        RuleIndexList { indices: vec![index; n_cells] }
    }

    pub fn zeros(p: &Partition) -> Self {
        Self::uniform(p.n_cells(), 0)
    }
}

/// Concatenated per-cell rules of a partition.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureScheme {
    pub dim: usize,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// `offsets[i]..offsets[i+1]` are the points of cell `i`.
    pub offsets: Vec<usize>,
    pub levels: Vec<u32>,
    pub kinds: Vec<&'static str>,
}

impl QuadratureScheme {
    fn from_rules(p: &Partition, cells: &[SubCell], rules: Vec<Rule>) -> Self {
        let total = rules.iter().map(Rule::len).sum();
        let mut s = QuadratureScheme {
            dim: p.dim,
            points: Vec::with_capacity(total),
            weights: Vec::with_capacity(total),
            offsets: vec![0],
            levels: cells.iter().map(SubCell::level).collect(),
            kinds: cells.iter().map(SubCell::kind_name).collect(),
        };
        for r in rules {
            s.points.extend(r.points);
            s.weights.extend(r.weights);
            s.offsets.push(s.points.len());
        }
        s
    }

    pub fn total(&self) -> usize {
        self.weights.len()
    }

    pub fn n_cells(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn cell_range(&self, id: usize) -> Range<usize> {
        self.offsets[id]..self.offsets[id + 1]
    }

    pub fn cell_size(&self, id: usize) -> usize {
        self.offsets[id + 1] - self.offsets[id]
    }

    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        s.push_str("cell_id,level,kind");
        for i in 1..=self.dim {
            let _ = write!(s, ",x{i}");
        }
        s.push_str(",weight\n");
        for id in 0..self.n_cells() {
            for j in self.cell_range(id) {
                let _ = write!(s, "{id},{},{}", self.levels[id], self.kinds[id]);
                for x in &self.points[j][..self.dim] {
                    let _ = write!(s, ",{x:e}");
                }
                let _ = writeln!(s, ",{:e}", self.weights[j]);
            }
        }
        s
    }
}

/// Scheme with rule `idx[i]` on cell `i`.
pub fn assemble_scheme(p: &Partition, idx: &RuleIndexList, box_kind: BoxRuleKind) -> Result<QuadratureScheme> {
    let cells = p.cells();
    if idx.indices.len() != cells.len() {
        return Err(Error::InvalidArgument(format!(
            "index list has {} entries for {} sub-cells",
            idx.indices.len(),
            cells.len()
        )));
    }
    let rules = cells
        .par_iter()
        .zip(&idx.indices)
        .map(|(c, &i)| cell_rule(c, i, box_kind))
        .collect::<Result<Vec<_>>>()?;
    Ok(QuadratureScheme::from_rules(p, &cells, rules))
}

/// Scheme exact for total degree `target_degree` on every sub-cell.
pub fn reference_scheme(p: &Partition, target_degree: usize) -> QuadratureScheme {
    let cells = p.cells();
    let rules = cells.par_iter().map(|c| reference_cell_rule(c, target_degree)).collect();
    QuadratureScheme::from_rules(p, &cells, rules)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_ellipsoid_exclusion, BoxCell, FnField};
    use crate::octree::{partition_element, partition_volume};

    fn circle(dim: usize, depth: u32) -> Partition {
        let f = make_ellipsoid_exclusion(0.6, 0.6, 0.0, dim).unwrap();
        partition_element(&f, &BoxCell::unit(dim), depth).unwrap()
    }

    fn count(p: &Partition, i: usize) -> usize {
        assemble_scheme(p, &RuleIndexList::uniform(p.n_cells(), i), BoxRuleKind::Gauss).unwrap().total()
    }

    #[test]
    fn point_counts_of_the_circle() {
        let p = circle(2, 3);
        assert_eq!(count(&p, 0), 43);
        assert_eq!(count(&p, 1), 144);
        assert_eq!(count(&p, 2), 303);
    }

    #[test]
    fn point_counts_of_the_sphere() {
        let p = circle(3, 3);
        assert_eq!(count(&p, 0), 1496);
        assert_eq!(count(&p, 1), 7168);
    }

    #[test]
    fn weights_sum_to_cell_volumes() {
        let p = circle(3, 2);
        let cells = p.cells();
        for i in 0..4 {
            let s = assemble_scheme(&p, &RuleIndexList::uniform(cells.len(), i), BoxRuleKind::Gauss).unwrap();
            for (id, c) in cells.iter().enumerate() {
                let w: f64 = s.weights[s.cell_range(id)].iter().sum();
                assert!(((w - c.volume()) / c.volume()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reference_integrates_constants_and_monomials() {
        let p = circle(2, 4);
        let r = reference_scheme(&p, 8);
        assert!((r.integrate(|_| 1.0) - partition_volume(&p)).abs() < 1e-13);
        let full = partition_element(&FnField::new(2, |_| 1.0), &BoxCell::unit(2), 3).unwrap();
        let r = reference_scheme(&full, 8);
        assert!((r.integrate(|x| x[0].powi(4) * x[1].powi(4)) - 1.0 / 25.0).abs() < 1e-15);
    }

    #[test]
    fn missing_indices_are_rejected() {
        let p = circle(2, 2);
        let idx = RuleIndexList::uniform(p.n_cells() - 1, 0);
        assert!(matches!(assemble_scheme(&p, &idx, BoxRuleKind::Gauss), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn csv_has_header() {
        let p = circle(2, 1);
        let s = assemble_scheme(&p, &RuleIndexList::zeros(&p), BoxRuleKind::Gauss).unwrap();
        let csv = s.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("cell_id,level,kind,x1,x2,weight"));
        assert_eq!(lines.count(), s.total());
    }
}
