//! Fixtures shared by the benchmarks in `benches/`.

use cutquad::{make_ellipsoid_exclusion, partition_element, BoxCell, Ellipsoid, Partition};

/// Quarter-disc (or octant-sphere) exclusion of radius 0.6 in the unit element.
pub fn circle_field(dim: usize) -> Ellipsoid {
    make_ellipsoid_exclusion(0.6, 0.6, 0.0, dim).expect("valid radii")
}

pub fn circle_partition(dim: usize, depth: u32) -> Partition {
    partition_element(&circle_field(dim), &BoxCell::unit(dim), depth).expect("cut element")
}
