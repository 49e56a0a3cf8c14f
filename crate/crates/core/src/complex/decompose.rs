//! The collapse hierarchy of a critical triangulation: levels V_0..V_N,
//! per-element data (Z', V_Z, V^Z, the boundary cycle of f_Z, diagonal
//! choices for quadrilateral elements) and the quotient cell-division.



use crate::complex::subset::{
    classify, components, ClassifyOptions, SubsetReport, Verdict, VertexSubset,
};
use crate::complex::triangulation::{Corner, DirectedEdge, Edge, Face, WeightedTriangulation};
use crate::error::{Error, Result};

/// One element Z of the Z family (or the top element V), with everything
/// the limit construction needs.
#[derive(Debug, Clone)]
pub struct DecompElement {
    /// The vertex set Z (the full vertex set for the top element).
    pub z_mask: u64,
    /// Union of the proper Z-subsets of Z.
    pub z_prime: u64,
    /// V_Z = Z minus Z'.
    pub v_z: u64,
    /// Vertices of the bounding cell f_Z (empty for the top element).
    pub v_upper: u64,
    /// Level n with V_Z a connected component of V_n.
    pub level: usize,
    /// Link edges of Z walked into a cycle, directed as seen from inside
    /// the region. Empty for the top element.
    pub boundary: Vec<DirectedEdge>,
    /// Vertex at the tail of each boundary side.
    pub boundary_corners: Vec<usize>,
    /// For quadrilateral elements, both diagonal choices as unordered pairs
    /// of boundary corner positions: {0,2} and {1,3}.
    pub diagonals: Option<[(usize, usize); 2]>,
}

impl DecompElement {
    pub fn is_top(&self) -> bool {
        self.boundary.is_empty()
    }

    pub fn link_size(&self) -> usize {
        self.boundary.len()
    }
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    /// Level masks V_0..V_N; disjoint and covering V.
    pub levels: Vec<u64>,
    /// n(v) for every vertex.
    pub level_of: Vec<usize>,
    /// All elements of the Z family sorted by (size, mask), followed by the
    /// top element V.
    pub elements: Vec<DecompElement>,
}

impl Decomposition {
    pub fn top(&self) -> &DecompElement {
        self.elements.last().expect("top element always present")
    }

    /// Elements other than the top, i.e. the Z family.
    pub fn z_elements(&self) -> &[DecompElement] {
        &self.elements[..self.elements.len() - 1]
    }

    pub fn element_for(&self, z_mask: u64) -> Option<&DecompElement> {
        self.elements.iter().find(|e| e.z_mask == z_mask)
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }
}

/// Walk the boundary of the region made of `region` faces. Returns the
/// boundary sides in cyclic order, starting from the side with the smallest
/// (edge, direction) key. Fails unless the boundary is a single cycle.
pub(crate) fn walk_region_boundary(
    tri: &WeightedTriangulation,
    in_region: &dyn Fn(usize) -> bool,
) -> Result<Vec<Corner>> {
    let mut boundary = Vec::new();
    for c in tri.corners() {
        if in_region(c.face) && !in_region(tri.opposite_slot(c).face) {
            boundary.push(c);
        }
    }
    if boundary.is_empty() {
        return Err(Error::Internal("region has no boundary".into()));
    }
    let key = |c: &Corner| {
        let d = tri.directed_side(*c);
        (d.edge, !d.forward)
    };
    let start = *boundary.iter().min_by_key(|c| key(c)).unwrap();
    let is_boundary = |c: Corner| boundary.contains(&c);

    let mut cycle = vec![start];
    let mut current = start;
    loop {
        // Rotate around the head of `current` until the next boundary side.
        let mut t = Corner {
            face: current.face,
            position: (current.position + 1) % 3,
        };
        let mut guard = 0;
        while !is_boundary(t) {
            let o = tri.opposite_slot(t);
            if !in_region(o.face) {
                return Err(Error::Internal(
                    "boundary walk left the region; the link cycle is not simple".into(),
                ));
            }
            t = Corner {
                face: o.face,
                position: (o.position + 1) % 3,
            };
            guard += 1;
            if guard > 3 * tri.face_count() {
                return Err(Error::Internal("boundary walk did not terminate".into()));
            }
        }
        if t == start {
            break;
        }
        cycle.push(t);
        current = t;
        if cycle.len() > boundary.len() {
            return Err(Error::Internal(
                "boundary walk revisited a side before closing".into(),
            ));
        }
    }
    if cycle.len() != boundary.len() {
        return Err(Error::Internal(format!(
            "region boundary is not a single cycle ({} of {} sides reached)",
            cycle.len(),
            boundary.len()
        )));
    }
    Ok(cycle)
}

fn element_for_mask(
    tri: &WeightedTriangulation,
    report: &SubsetReport,
    z_mask: u64,
    z_masks: &[u64],
) -> Result<DecompElement> {
    let z_prime = z_masks
        .iter()
        .filter(|&&m| m != z_mask && m & z_mask == m)
        .fold(0u64, |acc, &m| acc | m);
    let v_z = z_mask & !z_prime;

    let subset = VertexSubset::new(tri, z_mask);
    let region = move |f: usize| subset.corner_count(f) >= 1;
    let cycle = walk_region_boundary(tri, &region)?;
    let boundary: Vec<DirectedEdge> = cycle.iter().map(|&c| tri.directed_side(c)).collect();

    let link_size = report
        .z_family
        .iter()
        .find(|z| z.mask == z_mask)
        .map(|z| z.link_size)
        .ok_or_else(|| Error::Internal("element not in the Z family".into()))?;
    if boundary.len() != link_size {
        return Err(Error::Internal(format!(
            "boundary cycle length {} does not match |Lk(Z)| = {link_size}",
            boundary.len()
        )));
    }

    let mut v_upper = 0u64;
    let mut boundary_corners = Vec::with_capacity(boundary.len());
    for d in &boundary {
        let e = tri.edge(d.edge);
        let tail = if d.forward { e.ends.0 } else { e.ends.1 };
        boundary_corners.push(tail);
        v_upper |= (1 << e.ends.0) | (1 << e.ends.1);
    }
    if v_upper & z_mask != 0 {
        return Err(Error::Internal(
            "a boundary vertex of f_Z lies inside Z".into(),
        ));
    }

    let diagonals = (boundary.len() == 4).then_some([(0usize, 2usize), (1usize, 3usize)]);

    Ok(DecompElement {
        z_mask,
        z_prime,
        v_z,
        v_upper,
        level: usize::MAX, // assigned below
        boundary,
        boundary_corners,
        diagonals,
    })
}

/// Build the full hierarchy. Requires a CRITICAL report.
pub fn decompose(tri: &WeightedTriangulation, report: &SubsetReport) -> Result<Decomposition> {
    if report.verdict != Verdict::Critical {
        return Err(Error::Precondition(format!(
            "decompose requires a CRITICAL triangulation, got {:?}",
            report.verdict
        )));
    }
    let full = crate::complex::subset::full_mask(tri);
    let z_masks = report.z_masks();

    // Every connected component of Z_T must itself be critical.
    for comp in components(tri, report.z_t) {
        if !z_masks.contains(&comp) {
            return Err(Error::Internal(format!(
                "component {comp:#b} of Z_T is not in the Z family"
            )));
        }
    }

    // Levels: V_0 = V \ Z_T, then peel unions of strictly-contained elements.
    let mut levels = vec![full & !report.z_t];
    let mut current = report.z_t;
    while current != 0 {
        let next = z_masks
            .iter()
            .filter(|&&m| m & current == m && m != current && {
                // strictly contained in ANY single component is not required;
                // strict containment in the residual set is.
                true
            })
            .fold(0u64, |acc, &m| acc | m);
        if next == current {
            return Err(Error::Internal(
                "hierarchy level failed to shrink; Z family covers its own residual".into(),
            ));
        }
        levels.push(current & !next);
        current = next;
    }

    let mut level_of = vec![usize::MAX; tri.vertex_count()];
    for (n, &mask) in levels.iter().enumerate() {
        for v in 0..tri.vertex_count() {
            if mask >> v & 1 == 1 {
                if level_of[v] != usize::MAX {
                    return Err(Error::Internal("levels are not disjoint".into()));
                }
                level_of[v] = n;
            }
        }
    }
    if level_of.iter().any(|&n| n == usize::MAX) {
        return Err(Error::Internal("levels do not cover the vertex set".into()));
    }

    let mut elements = Vec::with_capacity(z_masks.len() + 1);
    for &m in &z_masks {
        elements.push(element_for_mask(tri, report, m, &z_masks)?);
    }
    // Top element V.
    let v_prime = report.z_t;
    elements.push(DecompElement {
        z_mask: full,
        z_prime: v_prime,
        v_z: full & !v_prime,
        v_upper: 0,
        level: 0,
        boundary: Vec::new(),
        boundary_corners: Vec::new(),
        diagonals: None,
    });

    // Assign levels and check the bijection between {V_Z} and the connected
    // components of the levels.
    let mut all_components: Vec<(usize, u64)> = Vec::new();
    for (n, &mask) in levels.iter().enumerate() {
        for comp in components(tri, mask) {
            all_components.push((n, comp));
        }
    }
    for element in &mut elements {
        let found = all_components
            .iter()
            .position(|&(_, comp)| comp == element.v_z)
            .ok_or_else(|| {
                Error::Internal(format!(
                    "V_Z {:#b} is not a connected component of any level",
                    element.v_z
                ))
            })?;
        element.level = all_components[found].0;
        all_components.swap_remove(found);
    }
    if !all_components.is_empty() {
        return Err(Error::Internal(format!(
            "{} level components have no matching element",
            all_components.len()
        )));
    }

    Ok(Decomposition {
        levels,
        level_of,
        elements,
    })
}

/// Build the weighted cell-division (T_0, Theta_0) on V_0, with every
/// quadrilateral f_Z subdivided by one weight-0 diagonal. The result is a
/// valid triangulation and must re-classify SUBCRITICAL.
pub fn build_quotient(
    tri: &WeightedTriangulation,
    dec: &Decomposition,
    report: &SubsetReport,
) -> Result<WeightedTriangulation> {
    if report.verdict != Verdict::Critical {
        return Err(Error::Precondition(
            "build_quotient requires a CRITICAL triangulation".into(),
        ));
    }
    let z_t = report.z_t;

    let mut vertex_map = vec![usize::MAX; tri.vertex_count()];
    let mut vertex_ids = Vec::new();
    for v in 0..tri.vertex_count() {
        if z_t >> v & 1 == 0 {
            vertex_map[v] = vertex_ids.len();
            vertex_ids.push(tri.vertex_id(v).to_string());
        }
    }

    let mut edge_map = vec![usize::MAX; tri.edge_count()];
    let mut edges = Vec::new();
    for (ei, e) in tri.edges().iter().enumerate() {
        if z_t >> e.ends.0 & 1 == 0 && z_t >> e.ends.1 & 1 == 0 {
            edge_map[ei] = edges.len();
            edges.push(Edge {
                id: e.id.clone(),
                ends: (vertex_map[e.ends.0], vertex_map[e.ends.1]),
                weight: e.weight,
            });
        }
    }

    let mut faces = Vec::new();
    for f in 0..tri.face_count() {
        let cv = tri.face_corner_vertices(f);
        if cv.iter().any(|&v| z_t >> v & 1 == 1) {
            continue;
        }
        let sides = tri.faces()[f].sides;
        let remap = |d: DirectedEdge| -> Result<DirectedEdge> {
            let edge = edge_map[d.edge];
            if edge == usize::MAX {
                return Err(Error::Internal(
                    "surviving face references a removed edge".into(),
                ));
            }
            Ok(DirectedEdge {
                edge,
                forward: d.forward,
            })
        };
        faces.push(Face {
            sides: [remap(sides[0])?, remap(sides[1])?, remap(sides[2])?],
        });
    }

    // One cell per component of Z_T; quadrilaterals get a weight-0 diagonal
    // through the lexicographically smallest corner pair.
    for (k, comp) in components(tri, z_t).into_iter().enumerate() {
        let element = dec
            .element_for(comp)
            .ok_or_else(|| Error::Internal("Z_T component without element".into()))?;
        let sides: Vec<DirectedEdge> = element
            .boundary
            .iter()
            .map(|d| {
                let edge = edge_map[d.edge];
                if edge == usize::MAX {
                    Err(Error::Internal(
                        "f_Z boundary edge touches Z_T; cell division is inconsistent".into(),
                    ))
                } else {
                    Ok(DirectedEdge {
                        edge,
                        forward: d.forward,
                    })
                }
            })
            .collect::<Result<_>>()?;
        match sides.len() {
            3 => faces.push(Face {
                sides: [sides[0], sides[1], sides[2]],
            }),
            4 => {
                let corners: Vec<usize> = element
                    .boundary_corners
                    .iter()
                    .map(|&v| vertex_map[v])
                    .collect();
                let diag = edges.len();
                edges.push(Edge {
                    id: format!("diag:{k}"),
                    ends: (corners[0], corners[2]),
                    weight: 0.0,
                });
                let d = |forward| DirectedEdge { edge: diag, forward };
                faces.push(Face {
                    sides: [sides[0], sides[1], d(false)],
                });
                faces.push(Face {
                    sides: [d(true), sides[2], sides[3]],
                });
            }
            n => {
                return Err(Error::Internal(format!(
                    "f_Z boundary has {n} sides, expected 3 or 4"
                )))
            }
        }
    }

    let quotient = WeightedTriangulation::new(vertex_ids, edges, faces)
        .map_err(|e| Error::Internal(format!("quotient is not a valid triangulation: {e}")))?;

    let opts = ClassifyOptions::default();
    let quotient_report = classify(&quotient, &opts)
        .map_err(|e| Error::Internal(format!("quotient failed to classify: {e}")))?;
    if quotient_report.verdict != Verdict::Subcritical {
        return Err(Error::Internal(format!(
            "quotient classifies {:?}, expected SUBCRITICAL",
            quotient_report.verdict
        )));
    }
    Ok(quotient)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::parse_triangulation;
    use crate::fixtures;

    fn critical_setup(doc: &str) -> (WeightedTriangulation, SubsetReport, Decomposition) {
        let t = parse_triangulation(doc).unwrap();
        let report = classify(&t, &ClassifyOptions::default()).unwrap();
        let dec = decompose(&t, &report).unwrap();
        (t, report, dec)
    }

    #[test]
    fn remark_decomposition() {
        let (t, report, dec) = critical_setup(fixtures::REMARK_TORUS);
        let v1 = t.vertex_id_index("v1").unwrap();
        let v2 = t.vertex_id_index("v2").unwrap();
        assert_eq!(dec.depth(), 1);
        assert_eq!(dec.levels, vec![1 << v2, 1 << v1]);
        assert_eq!(dec.level_of[v1], 1);
        assert_eq!(dec.level_of[v2], 0);
        assert_eq!(report.z_t, 1 << v1);

        let z = &dec.z_elements()[0];
        assert_eq!(z.z_mask, 1 << v1);
        assert_eq!(z.z_prime, 0);
        assert_eq!(z.v_z, 1 << v1);
        assert_eq!(z.v_upper, 1 << v2);
        assert_eq!(z.boundary.len(), 3);
        assert!(z.diagonals.is_none());
        for d in &z.boundary {
            assert!(t.edge(d.edge).is_loop());
        }

        let top = dec.top();
        assert_eq!(top.v_z, 1 << v2);
        assert_eq!(top.z_prime, 1 << v1);
    }

    #[test]
    fn subcritical_input_is_refused() {
        let t = parse_triangulation(fixtures::TORUS_SUBCRITICAL).unwrap();
        let report = classify(&t, &ClassifyOptions::default()).unwrap();
        assert!(matches!(
            decompose(&t, &report),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn two_level_decomposition_orders_by_inclusion() {
        let (t, _, dec) = critical_setup(fixtures::TORUS_TWO_LEVEL);
        let u = t.vertex_id_index("u").unwrap();
        let w = t.vertex_id_index("w").unwrap();
        let v = t.vertex_id_index("v").unwrap();
        assert_eq!(dec.depth(), 2);
        assert_eq!(dec.levels, vec![1 << u, 1 << w, 1 << v]);

        // V_{Z~} = Z~ \ Z = {w}.
        let big = dec.element_for((1 << v) | (1 << w)).unwrap();
        assert_eq!(big.z_prime, 1 << v);
        assert_eq!(big.v_z, 1 << w);
        assert_eq!(big.level, 1);
        let small = dec.element_for(1 << v).unwrap();
        assert_eq!(small.v_z, 1 << v);
        assert_eq!(small.level, 2);
    }

    #[test]
    fn quad_nested_element_has_both_diagonals() {
        let (t, _, dec) = critical_setup(fixtures::TORUS_QUAD_NESTED);
        let p = t.vertex_id_index("p").unwrap();
        let quad = dec.element_for(1 << p).unwrap();
        assert_eq!(quad.boundary.len(), 4);
        assert_eq!(quad.diagonals, Some([(0, 2), (1, 3)]));
        // Boundary corners are the four quad vertices.
        let mut corner_ids: Vec<&str> = quad
            .boundary_corners
            .iter()
            .map(|&v| t.vertex_id(v))
            .collect();
        corner_ids.sort_unstable();
        assert_eq!(corner_ids, vec!["x1", "x2", "x3", "x4"]);
    }

    #[test]
    fn levels_partition_the_vertex_set() {
        for (_, doc) in fixtures::CRITICAL {
            let (t, _, dec) = critical_setup(doc);
            let mut union = 0u64;
            for &mask in &dec.levels {
                assert_eq!(union & mask, 0);
                union |= mask;
            }
            assert_eq!(union, crate::complex::subset::full_mask(&t));
        }
    }

    #[test]
    fn remark_quotient_is_the_minimal_torus() {
        let (t, report, dec) = critical_setup(fixtures::REMARK_TORUS);
        let q = build_quotient(&t, &dec, &report).unwrap();
        assert_eq!(q.vertex_count(), 1);
        assert_eq!(q.edge_count(), 3);
        assert_eq!(q.face_count(), 2);
        assert_eq!(q.euler_characteristic(), 0);
        for e in q.edges() {
            assert!((e.weight - std::f64::consts::FRAC_PI_3).abs() < 1e-15);
        }
    }

    #[test]
    fn quotients_have_no_diagonals_without_quad_components() {
        for (_, doc) in fixtures::CRITICAL {
            let (t, report, dec) = critical_setup(doc);
            let q = build_quotient(&t, &dec, &report).unwrap();
            // Top-level components are triangles in every bundled fixture.
            assert!(q.edges().iter().all(|e| !e.id.starts_with("diag:")));
            let _ = q;
        }
    }

    #[test]
    fn quotient_reclassifies_subcritical() {
        for (name, doc) in fixtures::CRITICAL {
            let (t, report, dec) = critical_setup(doc);
            let q = build_quotient(&t, &dec, &report).unwrap();
            let qr = classify(&q, &ClassifyOptions::default()).unwrap();
            assert_eq!(qr.verdict, Verdict::Subcritical, "fixture {name}");
        }
    }

    #[test]
    fn genus2_quotient_restores_the_octagon() {
        let (t, report, dec) = critical_setup(fixtures::GENUS2_CRITICAL);
        let q = build_quotient(&t, &dec, &report).unwrap();
        assert_eq!(q.vertex_count(), 1);
        assert_eq!(q.edge_count(), 9);
        assert_eq!(q.face_count(), 6);
        assert_eq!(q.euler_characteristic(), -2);
    }
}
