//! Quadrature catalogs, nested per-cell rule sequences and scheme assembly.

mod catalog;
mod gauss;
mod rules;
mod scheme;

pub use catalog::{tetrahedron_catalog, triangle_catalog, CatalogEntry};
pub use gauss::{gauss_1d, uniform_1d, Rule1d};
pub use rules::{
    box_rule, cell_rule, reference_cell_rule, rule_size, simplex_rule, tetrahedron_catalog_rule, triangle_catalog_rule,
    BoxRuleKind, Rule, RuleFamily,
};
pub use scheme::{assemble_scheme, reference_scheme, QuadratureScheme, RuleIndexList, CSV_HEADER};
