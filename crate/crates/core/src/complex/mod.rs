//! Combinatorics of weighted triangulations: the surface complex, vertex
//! subsets and the obstruction functional, the collapse hierarchy, the
//! quotient cell-division and the per-element disk.

mod decompose;
mod disk;
mod subset;
mod triangulation;

pub use decompose::{build_quotient, decompose, DecompElement, Decomposition};
pub use disk::{build_disk, phi_z, DiagonalRule, DiskEdge, DiskFace, DiskTriangulation};
pub use subset::{
    classify, components, full_mask, is_connected, link, phi, subcomplex_chi,
    subcomplex_chi_by_classes, ClassifyOptions, SubsetEntry, SubsetReport, Verdict, VertexSubset,
    ZElement, MASK_LIMIT,
};
pub use triangulation::{
    parse_triangulation, parse_with_metric, Corner, DirectedEdge, Edge, Face,
    WeightedTriangulation, MAX_WEIGHT,
};
