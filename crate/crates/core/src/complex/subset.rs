//! Vertex subsets, links, the obstruction functional phi and the
//! subset-classification report.
//!
//! Subsets are bitmasks over vertex indices; the enumeration cap keeps the
//! connected-subset scan at desk scale.

use std::collections::HashSet;
use std::f64::consts::PI;

use crate::complex::triangulation::{Corner, WeightedTriangulation};
use crate::error::{Error, Result};
use crate::exec;

/// Hard ceiling imposed by the bitmask representation.
pub const MASK_LIMIT: usize = 63;

/// A subset of vertices with cached per-face corner counts (`|f cap U|`
/// counted over corners, so repeated vertices count with multiplicity).
#[derive(Debug, Clone)]
pub struct VertexSubset {
    mask: u64,
    corner_counts: Vec<u8>,
}

impl VertexSubset {
    pub fn new(tri: &WeightedTriangulation, mask: u64) -> Self {
        let corner_counts = (0..tri.face_count())
            .map(|f| {
                tri.face_corner_vertices(f)
                    .iter()
                    .filter(|&&v| mask >> v & 1 == 1)
                    .count() as u8
            })
            .collect();
        VertexSubset {
            mask,
            corner_counts,
        }
    }

    pub fn from_vertices(tri: &WeightedTriangulation, vertices: &[usize]) -> Self {
        let mut mask = 0u64;
        for &v in vertices {
            mask |= 1 << v;
        }
        Self::new(tri, mask)
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn contains(&self, v: usize) -> bool {
        self.mask >> v & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    /// Corner count of a face, i.e. which F_U^j class it belongs to.
    pub fn corner_count(&self, face: usize) -> usize {
        self.corner_counts[face] as usize
    }
}

pub fn full_mask(tri: &WeightedTriangulation) -> u64 {
    if tri.vertex_count() == 64 {
        u64::MAX
    } else {
        (1u64 << tri.vertex_count()) - 1
    }
}

/// The link of `U`: every face with exactly one corner in `U`, together
/// with that corner's vertex and the opposite edge.
pub fn link(tri: &WeightedTriangulation, subset: &VertexSubset) -> Vec<(Corner, usize, usize)> {
    let mut out = Vec::new();
    for f in 0..tri.face_count() {
        if subset.corner_count(f) != 1 {
            continue;
        }
        let cv = tri.face_corner_vertices(f);
        let position = (0..3)
            .find(|&k| subset.contains(cv[k]))
            .expect("corner count 1 implies a corner in U");
        let corner = Corner { face: f, position };
        out.push((corner, cv[position], tri.opposite_edge(corner)));
    }
    out
}

/// Euler characteristic of the subcomplex `tau_U` by direct cell counting:
/// vertices in U, edges with both endpoints in U, faces with all corners
/// in U.
pub fn subcomplex_chi(tri: &WeightedTriangulation, subset: &VertexSubset) -> i64 {
    let v = subset.len() as i64;
    let e = tri
        .edges()
        .iter()
        .filter(|e| subset.contains(e.ends.0) && subset.contains(e.ends.1))
        .count() as i64;
    let f = (0..tri.face_count())
        .filter(|&f| subset.corner_count(f) == 3)
        .count() as i64;
    v - e + f
}

/// chi(tau_U) through the face-class formula |U| - (|F_U^2| + |F_U^3|)/2,
/// valid on closed surfaces. Kept separate from the direct count so the two
/// routes can be compared.
pub fn subcomplex_chi_by_classes(tri: &WeightedTriangulation, subset: &VertexSubset) -> i64 {
    let f2 = (0..tri.face_count())
        .filter(|&f| subset.corner_count(f) == 2)
        .count() as i64;
    let f3 = (0..tri.face_count())
        .filter(|&f| subset.corner_count(f) == 3)
        .count() as i64;
    debug_assert_eq!((f2 + f3) % 2, 0, "F_U^2 + F_U^3 must be even on a closed surface");
    subset.len() as i64 - (f2 + f3) / 2
}

/// The obstruction functional
/// `phi(U) = -sum_{f in Lk(U)} (pi - Theta(e^f)) + 2 pi chi(tau_U)`.
///
/// Nonempty `U` required; `U = V` is permitted and returns `2 pi chi(S)`.
pub fn phi(tri: &WeightedTriangulation, subset: &VertexSubset) -> f64 {
    assert!(!subset.is_empty(), "phi is undefined for the empty subset");
    let link_sum: f64 = link(tri, subset)
        .iter()
        .map(|&(_, _, e)| PI - tri.weight(e))
        .sum();
    -link_sum + 2.0 * PI * subcomplex_chi_by_classes(tri, subset) as f64
}

/// Whether `tau_U` is connected (graph connectivity of U through edges with
/// both endpoints in U).
pub fn is_connected(tri: &WeightedTriangulation, mask: u64) -> bool {
    if mask == 0 {
        return false;
    }
    let start = mask.trailing_zeros() as usize;
    let mut seen = 1u64 << start;
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for e in tri.edges() {
            let (a, b) = e.ends;
            for (p, q) in [(a, b), (b, a)] {
                if p == v && mask >> q & 1 == 1 && seen >> q & 1 == 0 {
                    seen |= 1 << q;
                    stack.push(q);
                }
            }
        }
    }
    seen == mask
}

/// Connected components of `tau_U` restricted to the vertex set `mask`.
pub fn components(tri: &WeightedTriangulation, mask: u64) -> Vec<u64> {
    let mut rest = mask;
    let mut out = Vec::new();
    while rest != 0 {
        let start = rest.trailing_zeros() as usize;
        let mut seen = 1u64 << start;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for e in tri.edges() {
                let (a, b) = e.ends;
                for (p, q) in [(a, b), (b, a)] {
                    if p == v && rest >> q & 1 == 1 && seen >> q & 1 == 0 {
                        seen |= 1 << q;
                        stack.push(q);
                    }
                }
            }
        }
        out.push(seen);
        rest &= !seen;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Verdict {
    /// phi(U) < 0 for every nonempty proper subset.
    Subcritical,
    /// max phi(U) = 0.
    Critical,
    /// Some phi(U) > 0.
    Supercritical,
}

#[derive(Debug, Clone)]
pub struct ClassifyOptions {
    /// Maximum vertex count admitted for enumeration.
    pub vertex_cap: usize,
    /// |phi| below this counts as zero when splitting the verdict.
    pub zero_tolerance: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            vertex_cap: 24,
            zero_tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SubsetEntry {
    pub mask: u64,
    pub phi: f64,
    pub link_size: usize,
}

#[derive(Debug, Clone)]
pub struct ZElement {
    pub mask: u64,
    /// 3 or 4.
    pub link_size: usize,
}

#[derive(Debug, Clone)]
pub struct SubsetReport {
    /// All connected nonempty proper subsets, sorted by (size, mask).
    pub entries: Vec<SubsetEntry>,
    pub verdict: Verdict,
    /// Connected subsets with phi = 0, sorted by (size, mask).
    pub z_family: Vec<ZElement>,
    /// Union of the Z family.
    pub z_t: u64,
    /// True when some face repeats a vertex, in which case corner-counted
    /// and distinct-vertex conventions could disagree.
    pub corner_multiplicity_matters: bool,
    pub zero_tolerance: f64,
}

impl SubsetReport {
    pub fn z_masks(&self) -> Vec<u64> {
        self.z_family.iter().map(|z| z.mask).collect()
    }
}

/// Enumerate all connected nonempty proper subsets by growth-by-adjacency,
/// evaluate phi on each, and classify the triangulation.
pub fn classify(tri: &WeightedTriangulation, opts: &ClassifyOptions) -> Result<SubsetReport> {
    let n = tri.vertex_count();
    let cap = opts.vertex_cap.min(MASK_LIMIT);
    if n > cap {
        return Err(Error::Size(format!(
            "triangulation has {n} vertices; enumeration cap is {cap}"
        )));
    }

    // Adjacency masks.
    let mut adj = vec![0u64; n];
    for e in tri.edges() {
        let (a, b) = e.ends;
        if a != b {
            adj[a] |= 1 << b;
            adj[b] |= 1 << a;
        }
    }

    let full = full_mask(tri);
    let mut masks: Vec<u64> = Vec::new();
    let mut level: Vec<u64> = (0..n).map(|v| 1u64 << v).collect();
    let mut seen: HashSet<u64> = level.iter().copied().collect();
    while !level.is_empty() {
        for &m in &level {
            if m != full {
                masks.push(m);
            }
        }
        let mut next = Vec::new();
        for &m in &level {
            let mut frontier = 0u64;
            for v in 0..n {
                if m >> v & 1 == 1 {
                    frontier |= adj[v];
                }
            }
            frontier &= !m;
            let mut rest = frontier;
            while rest != 0 {
                let v = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let grown = m | 1 << v;
                if seen.insert(grown) {
                    next.push(grown);
                }
            }
        }
        level = next;
    }
    masks.sort_unstable_by_key(|&m| (m.count_ones(), m));

    let entries: Vec<SubsetEntry> = exec::map_slice(&masks, |&mask| {
        let subset = VertexSubset::new(tri, mask);
        SubsetEntry {
            mask,
            phi: phi(tri, &subset),
            link_size: link(tri, &subset).len(),
        }
    });

    let tol = opts.zero_tolerance;
    let mut verdict = Verdict::Subcritical;
    let mut z_family = Vec::new();
    for entry in &entries {
        if entry.phi > tol {
            verdict = Verdict::Supercritical;
        } else if entry.phi.abs() <= tol {
            if verdict == Verdict::Subcritical {
                verdict = Verdict::Critical;
            }
            z_family.push(ZElement {
                mask: entry.mask,
                link_size: entry.link_size,
            });
        }
    }
    if verdict == Verdict::Supercritical {
        z_family.clear();
    }

    // Consequences of phi(Z) = 0 for connected proper Z: tau_Z contractible,
    // |Lk(Z)| in {3, 4}, and the link weights sum to (|Lk| - 2) pi.
    let mut z_t = 0u64;
    for z in &z_family {
        z_t |= z.mask;
        let subset = VertexSubset::new(tri, z.mask);
        if subcomplex_chi(tri, &subset) != 1 {
            return Err(Error::Internal(format!(
                "critical subset {:#b} has chi(tau_Z) != 1",
                z.mask
            )));
        }
        if z.link_size != 3 && z.link_size != 4 {
            return Err(Error::Internal(format!(
                "critical subset {:#b} has |Lk| = {}, expected 3 or 4",
                z.mask, z.link_size
            )));
        }
        let weight_sum: f64 = link(tri, &subset)
            .iter()
            .map(|&(_, _, e)| tri.weight(e))
            .sum();
        let expected = (z.link_size as f64 - 2.0) * PI;
        if (weight_sum - expected).abs() > 1e-12 {
            return Err(Error::Internal(format!(
                "critical subset {:#b}: link weights sum to {weight_sum}, expected {expected}",
                z.mask
            )));
        }
    }

    Ok(SubsetReport {
        entries,
        verdict,
        z_family,
        z_t,
        corner_multiplicity_matters: tri.has_repeated_vertex_face(),
        zero_tolerance: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::parse_triangulation;
    use crate::fixtures;

    fn remark() -> WeightedTriangulation {
        parse_triangulation(fixtures::REMARK_TORUS).unwrap()
    }

    #[test]
    fn link_of_inner_vertex_on_remark_fixture() {
        let t = remark();
        let v1 = t.vertex_id_index("v1").unwrap();
        let u = VertexSubset::from_vertices(&t, &[v1]);
        let lk = link(&t, &u);
        assert_eq!(lk.len(), 3);
        for &(_, v, e) in &lk {
            assert_eq!(v, v1);
            // Opposite edges are the three weight-pi/3 loops at v2.
            assert!(t.edge(e).is_loop());
            assert!((t.weight(e) - std::f64::consts::FRAC_PI_3).abs() < 1e-15);
        }
    }

    #[test]
    fn link_of_everything_is_empty() {
        let t = fixtures::load(fixtures::MINIMAL_TORUS);
        let u = VertexSubset::new(&t, full_mask(&t));
        assert!(link(&t, &u).is_empty());
    }

    #[test]
    fn link_matches_brute_force_corner_scan() {
        let t = fixtures::load(fixtures::TORUS_QUAD_NESTED);
        for v in 0..t.vertex_count() {
            let u = VertexSubset::from_vertices(&t, &[v]);
            let lk = link(&t, &u);
            // Brute force: scan corners directly.
            let mut expected = Vec::new();
            for c in t.corners() {
                let cv = t.face_corner_vertices(c.face);
                let in_u = cv.iter().filter(|&&x| x == v).count();
                if in_u == 1 && cv[c.position] == v {
                    expected.push((c.face, t.opposite_edge(c)));
                }
            }
            let got: Vec<(usize, usize)> = lk.iter().map(|&(c, _, e)| (c.face, e)).collect();
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn chi_of_full_torus_is_zero() {
        let t = fixtures::load(fixtures::MINIMAL_TORUS);
        let u = VertexSubset::new(&t, full_mask(&t));
        assert_eq!(subcomplex_chi(&t, &u), 0);
        assert_eq!(subcomplex_chi_by_classes(&t, &u), 0);
    }

    #[test]
    fn chi_of_inner_vertex_is_one() {
        let t = remark();
        let v1 = t.vertex_id_index("v1").unwrap();
        let u = VertexSubset::from_vertices(&t, &[v1]);
        assert_eq!(subcomplex_chi(&t, &u), 1);
        assert_eq!(subcomplex_chi_by_classes(&t, &u), 1);
    }

    #[test]
    fn chi_direct_count_equals_class_formula_on_all_subsets() {
        for (_, doc) in fixtures::ALL {
            let t = fixtures::load(doc);
            let full = full_mask(&t);
            for mask in 1..=full {
                let u = VertexSubset::new(&t, mask);
                assert_eq!(
                    subcomplex_chi(&t, &u),
                    subcomplex_chi_by_classes(&t, &u),
                    "mask {mask:#b}"
                );
            }
        }
    }

    #[test]
    fn phi_of_inner_vertex_is_zero() {
        let t = remark();
        let v1 = t.vertex_id_index("v1").unwrap();
        let u = VertexSubset::from_vertices(&t, &[v1]);
        // -3 (pi - pi/3) + 2 pi = 0.
        assert!(phi(&t, &u).abs() < 1e-12);
    }

    #[test]
    fn phi_of_full_vertex_set_is_two_pi_chi() {
        let t = fixtures::load(fixtures::MINIMAL_TORUS);
        let u = VertexSubset::new(&t, full_mask(&t));
        assert!(phi(&t, &u).abs() < 1e-12);
        let h = fixtures::load(fixtures::GENUS2_OCTAGON);
        let u = VertexSubset::new(&h, full_mask(&h));
        assert!((phi(&h, &u) - 2.0 * PI * -2.0).abs() < 1e-12);
    }

    #[test]
    fn phi_is_additive_over_components() {
        let t = fixtures::load(fixtures::TORUS_QUAD_NESTED);
        let x1 = t.vertex_id_index("x1").unwrap();
        let x3 = t.vertex_id_index("x3").unwrap();
        let both = VertexSubset::from_vertices(&t, &[x1, x3]);
        assert_eq!(components(&t, both.mask()).len(), 2);
        let split = phi(&t, &VertexSubset::from_vertices(&t, &[x1]))
            + phi(&t, &VertexSubset::from_vertices(&t, &[x3]));
        assert!((phi(&t, &both) - split).abs() < 1e-12);
    }

    #[test]
    fn classify_minimal_torus_is_vacuously_subcritical() {
        let t = fixtures::load(fixtures::MINIMAL_TORUS);
        let report = classify(&t, &ClassifyOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Subcritical);
        assert!(report.entries.is_empty());
    }

    #[test]
    fn classify_remark_fixture_is_critical() {
        let t = remark();
        let report = classify(&t, &ClassifyOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Critical);
        let v1 = t.vertex_id_index("v1").unwrap();
        assert_eq!(report.z_family.len(), 1);
        assert_eq!(report.z_family[0].mask, 1 << v1);
        assert_eq!(report.z_family[0].link_size, 3);
        assert_eq!(report.z_t, 1 << v1);
        assert!(report.corner_multiplicity_matters);
    }

    #[test]
    fn classify_supercritical_fixture() {
        let t = fixtures::load(fixtures::REMARK_SUPERCRITICAL);
        let report = classify(&t, &ClassifyOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Supercritical);
    }

    #[test]
    fn classify_two_level_fixture() {
        let t = fixtures::load(fixtures::TORUS_TWO_LEVEL);
        let report = classify(&t, &ClassifyOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Critical);
        let v = t.vertex_id_index("v").unwrap();
        let w = t.vertex_id_index("w").unwrap();
        let masks = report.z_masks();
        assert_eq!(masks, vec![1 << v, (1 << v) | (1 << w)]);
    }

    #[test]
    fn classify_quad_nested_fixture() {
        let t = fixtures::load(fixtures::TORUS_QUAD_NESTED);
        let report = classify(&t, &ClassifyOptions::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Critical);
        assert_eq!(report.z_family.len(), 2);
        assert_eq!(report.z_family[0].link_size, 4); // {p}
        assert_eq!(report.z_family[1].link_size, 3); // {p, x1..x4}
    }

    #[test]
    fn classify_respects_vertex_cap() {
        let t = remark();
        let opts = ClassifyOptions {
            vertex_cap: 1,
            ..Default::default()
        };
        assert!(matches!(classify(&t, &opts), Err(Error::Size(_))));
    }

    #[test]
    fn enumeration_covers_exactly_the_connected_subsets() {
        let t = fixtures::load(fixtures::TORUS_SUBCRITICAL);
        let report = classify(&t, &ClassifyOptions::default()).unwrap();
        let full = full_mask(&t);
        let expected: Vec<u64> = (1..full)
            .filter(|&m| is_connected(&t, m))
            .collect();
        let got: Vec<u64> = report.entries.iter().map(|e| e.mask).collect();
        let mut expected_sorted = expected;
        expected_sorted.sort_unstable_by_key(|&m| (m.count_ones(), m));
        assert_eq!(got, expected_sorted);
    }
}
