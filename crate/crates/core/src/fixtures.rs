//! Bundled example triangulations.
//!
//! These are small hand-checked surfaces used by the test suite, the
//! benchmarks and the documentation. They are ordinary input documents; the
//! CLI accepts the same JSON from a file.

use crate::complex::{Edge, Face, WeightedTriangulation};
use crate::error::Result;

/// Torus with one vertex, three loop edges of weight pi/3 and two faces.
/// Subcritical (vacuously); the uniform metric is already a circle pattern.
pub const MINIMAL_TORUS: &str = include_str!("../fixtures/minimal_torus.json");

/// Torus with two vertices where three weight-pi/3 loop edges at `v2` bound
/// the region around `v1`. Critical: phi({v1}) = 0, so no circle pattern
/// metric exists and the flow collapses `v1`.
pub const REMARK_TORUS: &str = include_str!("../fixtures/remark_torus.json");

/// Same combinatorics with the loop weights raised to pi/2: supercritical.
pub const REMARK_SUPERCRITICAL: &str = include_str!("../fixtures/remark_supercritical.json");

/// Three-vertex torus, every weight pi/4: strictly subcritical.
pub const TORUS_SUBCRITICAL: &str = include_str!("../fixtures/torus_subcritical.json");

/// Three-vertex torus tuned so that exactly {z1, z2} is critical: the flow
/// collapses a two-vertex block with a nontrivial limit metric.
pub const TORUS_PAIR_COLLAPSE: &str = include_str!("../fixtures/torus_pair_collapse.json");

/// Torus with nested critical subsets {v} inside {v, w}: a two-level
/// collapse hierarchy.
pub const TORUS_TWO_LEVEL: &str = include_str!("../fixtures/torus_two_level.json");

/// Torus with a quadrilateral critical element {p} nested inside the
/// critical set {p, x1..x4}: exercises diagonal subdivision.
pub const TORUS_QUAD_NESTED: &str = include_str!("../fixtures/torus_quad_nested.json");

/// Genus-2 surface: fan-triangulated octagon with one vertex, uniform
/// weight pi/6. Subcritical (vacuously).
pub const GENUS2_OCTAGON: &str = include_str!("../fixtures/genus2_octagon.json");

/// Genus-2 surface with two vertices, strictly subcritical.
pub const GENUS2_SUBCRITICAL: &str = include_str!("../fixtures/genus2_subcritical.json");

/// Genus-2 surface with two vertices where phi({w}) = 0: hyperbolic
/// critical fixture.
pub const GENUS2_CRITICAL: &str = include_str!("../fixtures/genus2_critical.json");

/// All bundled fixtures with their names.
pub const ALL: &[(&str, &str)] = &[
    ("minimal_torus", MINIMAL_TORUS),
    ("remark_torus", REMARK_TORUS),
    ("remark_supercritical", REMARK_SUPERCRITICAL),
    ("torus_subcritical", TORUS_SUBCRITICAL),
    ("torus_pair_collapse", TORUS_PAIR_COLLAPSE),
    ("torus_two_level", TORUS_TWO_LEVEL),
    ("torus_quad_nested", TORUS_QUAD_NESTED),
    ("genus2_octagon", GENUS2_OCTAGON),
    ("genus2_subcritical", GENUS2_SUBCRITICAL),
    ("genus2_critical", GENUS2_CRITICAL),
];

/// The Euclidean fixtures (closed torus surfaces).
pub const EUCLIDEAN: &[(&str, &str)] = &[
    ("minimal_torus", MINIMAL_TORUS),
    ("remark_torus", REMARK_TORUS),
    ("torus_subcritical", TORUS_SUBCRITICAL),
    ("torus_pair_collapse", TORUS_PAIR_COLLAPSE),
    ("torus_two_level", TORUS_TWO_LEVEL),
    ("torus_quad_nested", TORUS_QUAD_NESTED),
];

/// Fixtures whose subset report is CRITICAL.
pub const CRITICAL: &[(&str, &str)] = &[
    ("remark_torus", REMARK_TORUS),
    ("torus_pair_collapse", TORUS_PAIR_COLLAPSE),
    ("torus_two_level", TORUS_TWO_LEVEL),
    ("torus_quad_nested", TORUS_QUAD_NESTED),
    ("genus2_critical", GENUS2_CRITICAL),
];

pub fn load(doc: &str) -> WeightedTriangulation {
    crate::complex::parse_triangulation(doc).expect("bundled fixture must parse")
}

/// An n-by-n grid torus with each square split along a diagonal and a
/// uniform weight on every edge. Used for scaling benchmarks and property
/// tests; subcritical for small uniform weights.
pub fn grid_torus(n: usize, weight: f64) -> Result<WeightedTriangulation> {
    assert!(n >= 2, "grid torus needs n >= 2");
    let idx = |i: usize, j: usize| (i % n) * n + (j % n);
    let vertex_ids: Vec<String> = (0..n * n).map(|k| format!("v{k}")).collect();

    let mut edges = Vec::new();
    // Horizontal h(i,j): (i,j) -> (i,j+1); vertical t(i,j): (i,j) -> (i+1,j);
    // diagonal g(i,j): (i,j) -> (i+1,j+1).
    let h0 = 0;
    let t0 = n * n;
    let g0 = 2 * n * n;
    for i in 0..n {
        for j in 0..n {
            edges.push(Edge {
                id: format!("h{i}_{j}"),
                ends: (idx(i, j), idx(i, j + 1)),
                weight,
            });
        }
    }
    for i in 0..n {
        for j in 0..n {
            edges.push(Edge {
                id: format!("t{i}_{j}"),
                ends: (idx(i, j), idx(i + 1, j)),
                weight,
            });
        }
    }
    for i in 0..n {
        for j in 0..n {
            edges.push(Edge {
                id: format!("g{i}_{j}"),
                ends: (idx(i, j), idx(i + 1, j + 1)),
                weight,
            });
        }
    }

    let de = |edge: usize, forward: bool| crate::complex::DirectedEdge { edge, forward };
    let mut faces = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let cell = i * n + j;
            let right = i * n + ((j + 1) % n);
            let below = ((i + 1) % n) * n + j;
            // Lower triangle: (i,j) -> (i,j+1) -> (i+1,j+1) -> (i,j).
            faces.push(Face {
                sides: [de(h0 + cell, true), de(t0 + right, true), de(g0 + cell, false)],
            });
            // Upper triangle: (i,j) -> (i+1,j+1) -> (i+1,j) -> (i,j).
            faces.push(Face {
                sides: [de(g0 + cell, true), de(h0 + below, false), de(t0 + cell, false)],
            });
        }
    }

    WeightedTriangulation::new(vertex_ids, edges, faces)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_torus_is_a_torus() {
        for n in [2, 3, 4] {
            let t = grid_torus(n, 0.5).unwrap();
            assert_eq!(t.vertex_count(), n * n);
            assert_eq!(t.edge_count(), 3 * n * n);
            assert_eq!(t.face_count(), 2 * n * n);
            assert_eq!(t.euler_characteristic(), 0);
        }
    }
}
