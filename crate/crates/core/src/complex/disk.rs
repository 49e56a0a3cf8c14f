//! The disk triangulation (T_D, Theta_D) of a critical element.
//!
//! The closure of f_Z is cut open along its boundary: interior vertices are
//! the V_Z vertices of the surface, while each occurrence of a boundary
//! vertex along the link cycle becomes its own disk vertex. Sub-elements
//! (components of Z') are replaced by their bounding cells, quadrilaterals
//! split by a weight-0 diagonal.

use std::collections::HashMap;

use crate::complex::decompose::{DecompElement, Decomposition};
use crate::complex::subset::components;
use crate::complex::triangulation::WeightedTriangulation;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct DiskEdge {
    pub id: String,
    /// Disk vertex indices.
    pub ends: (usize, usize),
    pub weight: f64,
    /// Index into the surface edge list, `None` for inserted diagonals.
    pub original: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct DiskFace {
    /// Directed sides: (disk edge, forward).
    pub sides: [(usize, bool); 3],
    /// Disk vertex at the tail of each side.
    pub corners: [usize; 3],
}

#[derive(Debug, Clone)]
pub struct DiskTriangulation {
    vertex_ids: Vec<String>,
    /// Surface vertex each disk vertex came from.
    original_vertex: Vec<usize>,
    interior: Vec<bool>,
    edges: Vec<DiskEdge>,
    faces: Vec<DiskFace>,
    /// Boundary edges in cyclic order.
    boundary_edges: Vec<usize>,
    /// Disk vertex at each boundary cycle corner.
    boundary_vertices: Vec<usize>,
    /// Interior corners per face (the j in F_Z^j).
    interior_corner_count: Vec<u8>,
}

/// How to pick the diagonal in quadrilateral sub-elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiagonalRule {
    /// Prefer the split keeping boundary-vertex corners per face lowest,
    /// ties broken toward `First`.
    #[default]
    Auto,
    /// Corner positions {0, 2} of the walked cycle.
    First,
    /// Corner positions {1, 3}.
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum EdgeKey {
    Original(usize),
    Diagonal(usize),
}

#[derive(Debug, Clone)]
struct Piece {
    sides: [(EdgeKey, bool); 3],
    /// Original surface vertex at the tail of each side.
    corners: [usize; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Slot {
    piece: usize,
    position: usize,
}

/// Build the disk for a critical element.
pub fn build_disk(
    tri: &WeightedTriangulation,
    dec: &Decomposition,
    z_mask: u64,
    rule: DiagonalRule,
) -> Result<DiskTriangulation> {
    let element = dec
        .element_for(z_mask)
        .ok_or_else(|| Error::Precondition(format!("{z_mask:#b} is not a decomposition element")))?;
    if element.is_top() {
        return Err(Error::Precondition(
            "build_disk expects a Z element, not the top element".into(),
        ));
    }

    let mut pieces = Vec::new();

    // Original faces that survive: no corner in Z', at least one in V_Z.
    for f in 0..tri.face_count() {
        let cv = tri.face_corner_vertices(f);
        let in_zprime = cv.iter().any(|&v| element.z_prime >> v & 1 == 1);
        let in_vz = cv.iter().any(|&v| element.v_z >> v & 1 == 1);
        if in_zprime || !in_vz {
            continue;
        }
        let sides = tri.faces()[f].sides;
        pieces.push(Piece {
            sides: [
                (EdgeKey::Original(sides[0].edge), sides[0].forward),
                (EdgeKey::Original(sides[1].edge), sides[1].forward),
                (EdgeKey::Original(sides[2].edge), sides[2].forward),
            ],
            corners: cv,
        });
    }

    // Sub-element cells, quadrilaterals split by a diagonal.
    for (k, comp) in components(tri, element.z_prime).into_iter().enumerate() {
        let sub = dec.element_for(comp).ok_or_else(|| {
            Error::Internal(format!(
                "component {comp:#b} of Z' is not a decomposition element"
            ))
        })?;
        pieces.extend(sub_element_pieces(element, sub, k, rule)?);
    }

    assemble(tri, element, pieces)
}

fn sub_element_pieces(
    outer: &DecompElement,
    sub: &DecompElement,
    diagonal_index: usize,
    rule: DiagonalRule,
) -> Result<Vec<Piece>> {
    let sides: Vec<(EdgeKey, bool)> = sub
        .boundary
        .iter()
        .map(|d| (EdgeKey::Original(d.edge), d.forward))
        .collect();
    let corners = &sub.boundary_corners;
    match sides.len() {
        3 => Ok(vec![Piece {
            sides: [sides[0], sides[1], sides[2]],
            corners: [corners[0], corners[1], corners[2]],
        }]),
        4 => {
            let outside = |v: usize| (outer.v_z >> v & 1 == 0) as usize;
            // Max boundary-corner count over the two triangles of a split.
            let badness = |i: usize, j: usize, k: usize, l: usize| {
                let t1 = outside(corners[i]) + outside(corners[j]) + outside(corners[k]);
                let t2 = outside(corners[i]) + outside(corners[k]) + outside(corners[l]);
                t1.max(t2)
            };
            let first = match rule {
                DiagonalRule::First => true,
                DiagonalRule::Second => false,
                DiagonalRule::Auto => badness(0, 1, 2, 3) <= badness(1, 2, 3, 0),
            };
            let d = EdgeKey::Diagonal(diagonal_index);
            let (c, s) = (corners, &sides);
            let pieces = if first {
                // Diagonal c0 -> c2.
                vec![
                    Piece {
                        sides: [s[0], s[1], (d, false)],
                        corners: [c[0], c[1], c[2]],
                    },
                    Piece {
                        sides: [(d, true), s[2], s[3]],
                        corners: [c[0], c[2], c[3]],
                    },
                ]
            } else {
                // Diagonal c1 -> c3.
                vec![
                    Piece {
                        sides: [s[1], s[2], (d, false)],
                        corners: [c[1], c[2], c[3]],
                    },
                    Piece {
                        sides: [(d, true), s[3], s[0]],
                        corners: [c[1], c[3], c[0]],
                    },
                ]
            };
            Ok(pieces)
        }
        n => Err(Error::Internal(format!(
            "sub-element boundary has {n} sides, expected 3 or 4"
        ))),
    }
}

fn assemble(
    tri: &WeightedTriangulation,
    element: &DecompElement,
    pieces: Vec<Piece>,
) -> Result<DiskTriangulation> {
    // Glue slots by edge key.
    let mut slots_by_key: HashMap<EdgeKey, Vec<(Slot, bool)>> = HashMap::new();
    for (pi, piece) in pieces.iter().enumerate() {
        for (pos, &(key, forward)) in piece.sides.iter().enumerate() {
            slots_by_key
                .entry(key)
                .or_default()
                .push((Slot { piece: pi, position: pos }, forward));
        }
    }
    let mut opposite: HashMap<Slot, Slot> = HashMap::new();
    for (key, slots) in &slots_by_key {
        match slots.as_slice() {
            [(a, fa), (b, fb)] => {
                if fa == fb {
                    return Err(Error::Internal(
                        "disk gluing: an edge is traversed twice in the same direction".into(),
                    ));
                }
                opposite.insert(*a, *b);
                opposite.insert(*b, *a);
            }
            [_] => {
                let EdgeKey::Original(e) = key else {
                    return Err(Error::Internal("a diagonal reached the disk boundary".into()));
                };
                if !element.boundary.iter().any(|d| d.edge == *e) {
                    return Err(Error::Internal(format!(
                        "edge {:?} is used once but is not a link edge of Z",
                        tri.edge(*e).id
                    )));
                }
            }
            other => {
                return Err(Error::Internal(format!(
                    "disk gluing: an edge is used {} times",
                    other.len()
                )))
            }
        }
    }

    // Corner orbits. rotate(corner) crosses the side arriving at the corner;
    // absent when that side is on the boundary.
    let corner_index = |s: Slot| s.piece * 3 + s.position;
    let total = pieces.len() * 3;
    let rotate: Vec<Option<usize>> = (0..total)
        .map(|ci| {
            let arriving = Slot {
                piece: ci / 3,
                position: (ci % 3 + 2) % 3,
            };
            opposite.get(&arriving).map(|&s| corner_index(s))
        })
        .collect();
    let mut has_prev = vec![false; total];
    for next in rotate.iter().flatten() {
        if has_prev[*next] {
            return Err(Error::Internal("disk corner rotation is not injective".into()));
        }
        has_prev[*next] = true;
    }

    // Orbits: cycles (interior vertices) and chains (boundary vertices).
    let mut orbit_of = vec![usize::MAX; total];
    let mut orbit_interior = Vec::new();
    let mut orbit_original = Vec::new();
    let original_of = |ci: usize| pieces[ci / 3].corners[ci % 3];
    for start in 0..total {
        if orbit_of[start] != usize::MAX || has_prev[start] {
            continue;
        }
        // Chain start (no predecessor): walk to the end.
        let orbit = orbit_original.len();
        let mut c = start;
        loop {
            orbit_of[c] = orbit;
            match rotate[c] {
                Some(n) => c = n,
                None => break,
            }
        }
        orbit_interior.push(false);
        orbit_original.push(original_of(start));
    }
    for start in 0..total {
        if orbit_of[start] != usize::MAX {
            continue;
        }
        // Remaining corners lie on cycles: interior vertices.
        let orbit = orbit_original.len();
        let mut c = start;
        loop {
            orbit_of[c] = orbit;
            c = rotate[c].ok_or_else(|| {
                Error::Internal("interior corner orbit hit the boundary".into())
            })?;
            if c == start {
                break;
            }
        }
        orbit_interior.push(true);
        orbit_original.push(original_of(start));
    }
    for ci in 0..total {
        if original_of(ci) != orbit_original[orbit_of[ci]] {
            return Err(Error::Internal(
                "corner orbit mixes distinct surface vertices".into(),
            ));
        }
    }

    // Interior orbits must biject with V_Z; chains must map into V^Z.
    let mut interior_seen = 0u64;
    for (orbit, &interior) in orbit_interior.iter().enumerate() {
        let v = orbit_original[orbit];
        if interior {
            if element.v_z >> v & 1 == 0 {
                return Err(Error::Internal(format!(
                    "interior disk vertex maps to {:?} outside V_Z",
                    tri.vertex_id(v)
                )));
            }
            if interior_seen >> v & 1 == 1 {
                return Err(Error::Internal(format!(
                    "surface vertex {:?} produced two interior disk vertices",
                    tri.vertex_id(v)
                )));
            }
            interior_seen |= 1 << v;
        } else if element.v_upper >> v & 1 == 0 {
            return Err(Error::Internal(format!(
                "boundary disk vertex maps to {:?} outside V^Z",
                tri.vertex_id(v)
            )));
        }
    }
    if interior_seen != element.v_z {
        return Err(Error::Internal(
            "interior disk vertices do not cover V_Z".into(),
        ));
    }

    // Disk vertices: V_Z order first, then chains by orbit discovery order.
    let mut vertex_of_orbit = vec![usize::MAX; orbit_original.len()];
    let mut vertex_ids = Vec::new();
    let mut original_vertex = Vec::new();
    let mut interior = Vec::new();
    for v in 0..tri.vertex_count() {
        if element.v_z >> v & 1 == 1 {
            let orbit = (0..orbit_original.len())
                .find(|&o| orbit_interior[o] && orbit_original[o] == v)
                .expect("validated above");
            vertex_of_orbit[orbit] = vertex_ids.len();
            vertex_ids.push(tri.vertex_id(v).to_string());
            original_vertex.push(v);
            interior.push(true);
        }
    }
    let mut copy_counter: HashMap<usize, usize> = HashMap::new();
    for orbit in 0..orbit_original.len() {
        if orbit_interior[orbit] {
            continue;
        }
        let v = orbit_original[orbit];
        let k = copy_counter.entry(v).or_insert(0);
        vertex_of_orbit[orbit] = vertex_ids.len();
        vertex_ids.push(format!("{}@{}", tri.vertex_id(v), k));
        *k += 1;
        original_vertex.push(v);
        interior.push(false);
    }

    let disk_vertex = |s: Slot| vertex_of_orbit[orbit_of[corner_index(s)]];

    // Edges: one per key, oriented along its first slot.
    let mut keys: Vec<EdgeKey> = slots_by_key.keys().copied().collect();
    keys.sort_unstable_by_key(|k| match *k {
        EdgeKey::Original(e) => (0, e),
        EdgeKey::Diagonal(d) => (1, d),
    });
    let mut edge_index: HashMap<EdgeKey, usize> = HashMap::new();
    let mut edges = Vec::new();
    for key in keys {
        let slots = &slots_by_key[&key];
        let (slot, forward) = slots[0];
        let slot_tail = disk_vertex(slot);
        let slot_head = disk_vertex(Slot {
            piece: slot.piece,
            position: (slot.position + 1) % 3,
        });
        // The slot traverses tail -> head; a backward slot runs against the
        // edge's own orientation.
        let (tail, head) = if forward {
            (slot_tail, slot_head)
        } else {
            (slot_head, slot_tail)
        };
        let (id, weight, original) = match key {
            EdgeKey::Original(e) => (tri.edge(e).id.clone(), tri.weight(e), Some(e)),
            EdgeKey::Diagonal(d) => (format!("diag:{d}"), 0.0, None),
        };
        edge_index.insert(key, edges.len());
        edges.push(DiskEdge {
            id,
            ends: (tail, head),
            weight,
            original,
        });
    }

    let mut faces = Vec::new();
    let mut interior_corner_count = Vec::new();
    for (pi, piece) in pieces.iter().enumerate() {
        let mut sides = [(0usize, false); 3];
        let mut corners = [0usize; 3];
        for k in 0..3 {
            let (key, forward) = piece.sides[k];
            sides[k] = (edge_index[&key], forward);
            corners[k] = disk_vertex(Slot { piece: pi, position: k });
        }
        let j = corners.iter().filter(|&&v| interior[v]).count() as u8;
        faces.push(DiskFace { sides, corners });
        interior_corner_count.push(j);
        let _ = pi;
    }
    // Side direction sanity: a forward side must run tail -> head.
    for face in &faces {
        for k in 0..3 {
            let (e, fwd) = face.sides[k];
            let (tail, head) = if fwd {
                edges[e].ends
            } else {
                (edges[e].ends.1, edges[e].ends.0)
            };
            if tail != face.corners[k] || head != face.corners[(k + 1) % 3] {
                return Err(Error::Internal("disk face sides do not chain".into()));
            }
        }
    }

    // Boundary cycle walk inside the disk.
    let boundary_slots: Vec<Slot> = pieces
        .iter()
        .enumerate()
        .flat_map(|(pi, piece)| {
            piece.sides.iter().enumerate().filter_map(move |(pos, _)| {
                let s = Slot { piece: pi, position: pos };
                Some(s)
            })
        })
        .filter(|s| !opposite.contains_key(s))
        .collect();
    let mut boundary_edges = Vec::new();
    let mut boundary_vertices = Vec::new();
    if !boundary_slots.is_empty() {
        let start = boundary_slots
            .iter()
            .copied()
            .min_by_key(|s| {
                let (key, fwd) = pieces[s.piece].sides[s.position];
                let e = edge_index[&key];
                (e, !fwd)
            })
            .unwrap();
        let mut current = start;
        loop {
            let (key, _) = pieces[current.piece].sides[current.position];
            boundary_edges.push(edge_index[&key]);
            boundary_vertices.push(disk_vertex(current));
            let mut t = Slot {
                piece: current.piece,
                position: (current.position + 1) % 3,
            };
            let mut guard = 0;
            while let Some(&o) = opposite.get(&t) {
                t = Slot {
                    piece: o.piece,
                    position: (o.position + 1) % 3,
                };
                guard += 1;
                if guard > 3 * pieces.len() {
                    return Err(Error::Internal("disk boundary walk did not terminate".into()));
                }
            }
            if t == start {
                break;
            }
            current = t;
            if boundary_edges.len() > boundary_slots.len() {
                return Err(Error::Internal("disk boundary is not a single cycle".into()));
            }
        }
    }
    if boundary_edges.len() != element.link_size() {
        return Err(Error::Internal(format!(
            "disk boundary has {} edges, expected {}",
            boundary_edges.len(),
            element.link_size()
        )));
    }

    let disk = DiskTriangulation {
        vertex_ids,
        original_vertex,
        interior,
        edges,
        faces,
        boundary_edges,
        boundary_vertices,
        interior_corner_count,
    };
    disk.validate()?;
    Ok(disk)
}

impl DiskTriangulation {
    /// Validate the disk invariants: boundary edges in exactly one face,
    /// interior edges in two, chi = 1.
    pub fn validate(&self) -> Result<()> {
        let mut uses = vec![0usize; self.edges.len()];
        for face in &self.faces {
            for &(e, _) in &face.sides {
                uses[e] += 1;
            }
        }
        for (e, edge) in self.edges.iter().enumerate() {
            let on_boundary = self.boundary_edges.contains(&e);
            let expected = if on_boundary { 1 } else { 2 };
            if uses[e] != expected {
                return Err(Error::Internal(format!(
                    "disk edge {:?} used {} times, expected {expected}",
                    edge.id, uses[e]
                )));
            }
        }
        let chi = self.vertex_ids.len() as i64 - self.edges.len() as i64 + self.faces.len() as i64;
        if chi != 1 {
            return Err(Error::Internal(format!("disk has chi = {chi}, expected 1")));
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_ids.len()
    }

    pub fn interior_count(&self) -> usize {
        self.interior.iter().filter(|&&i| i).count()
    }

    pub fn is_interior(&self, v: usize) -> bool {
        self.interior[v]
    }

    pub fn vertex_id(&self, v: usize) -> &str {
        &self.vertex_ids[v]
    }

    /// Surface vertex this disk vertex came from.
    pub fn original_vertex(&self, v: usize) -> usize {
        self.original_vertex[v]
    }

    /// Disk index of an interior vertex given its surface index.
    pub fn interior_disk_index(&self, original: usize) -> Option<usize> {
        (0..self.vertex_count())
            .find(|&v| self.interior[v] && self.original_vertex[v] == original)
    }

    pub fn edges(&self) -> &[DiskEdge] {
        &self.edges
    }

    pub fn faces(&self) -> &[DiskFace] {
        &self.faces
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn weight(&self, e: usize) -> f64 {
        self.edges[e].weight
    }

    pub fn boundary_edges(&self) -> &[usize] {
        &self.boundary_edges
    }

    pub fn boundary_vertices(&self) -> &[usize] {
        &self.boundary_vertices
    }

    /// Interior-corner count of a face: its j class.
    pub fn face_class(&self, f: usize) -> usize {
        self.interior_corner_count[f] as usize
    }

    /// Edge opposite corner `position` in face `f`.
    pub fn opposite_edge(&self, f: usize, position: usize) -> usize {
        self.faces[f].sides[(position + 1) % 3].0
    }

    /// Build a disk directly from components (used by tests and tools).
    pub fn from_components(
        vertex_ids: Vec<String>,
        original_vertex: Vec<usize>,
        edges: Vec<DiskEdge>,
        faces: Vec<DiskFace>,
    ) -> Result<Self> {
        // Boundary edges are those used once.
        let mut uses = vec![0usize; edges.len()];
        for face in &faces {
            for &(e, _) in &face.sides {
                uses[e] += 1;
            }
        }
        let mut interior = vec![true; vertex_ids.len()];
        for (e, edge) in edges.iter().enumerate() {
            if uses[e] == 1 {
                interior[edge.ends.0] = false;
                interior[edge.ends.1] = false;
            }
        }
        let interior_corner_count = faces
            .iter()
            .map(|f| f.corners.iter().filter(|&&v| interior[v]).count() as u8)
            .collect();
        // Walk the boundary cycle by following endpoints.
        let boundary: Vec<usize> = (0..edges.len()).filter(|&e| uses[e] == 1).collect();
        let mut boundary_edges = Vec::new();
        let mut boundary_vertices = Vec::new();
        if let Some(&first) = boundary.first() {
            let mut e = first;
            let mut tail = edges[e].ends.0;
            loop {
                boundary_edges.push(e);
                boundary_vertices.push(tail);
                let head = edges[e].other_end(tail);
                let next = boundary
                    .iter()
                    .copied()
                    .find(|&n| n != e && (edges[n].ends.0 == head || edges[n].ends.1 == head));
                match next {
                    Some(n) => {
                        e = n;
                        tail = head;
                    }
                    None => break,
                }
                if e == first {
                    break;
                }
                if boundary_edges.len() > boundary.len() {
                    return Err(Error::Internal("boundary is not a single cycle".into()));
                }
            }
        }
        let disk = DiskTriangulation {
            vertex_ids,
            original_vertex,
            interior,
            edges,
            faces,
            boundary_edges,
            boundary_vertices,
            interior_corner_count,
        };
        disk.validate()?;
        Ok(disk)
    }
}

impl DiskEdge {
    pub fn other_end(&self, v: usize) -> usize {
        if self.ends.0 == v {
            self.ends.1
        } else {
            self.ends.0
        }
    }
}

/// The obstruction functional on the disk:
/// `phi_Z(U) = -sum_{f in Lk_Z(U)} (pi - Theta_Z(e^f)) + 2 pi chi(tau_U^Z)`
/// with chi by direct cell counting. `U` is a mask over disk vertices and
/// must contain interior vertices only.
pub fn phi_z(disk: &DiskTriangulation, u_mask: u64) -> f64 {
    use std::f64::consts::PI;
    assert!(u_mask != 0, "phi_Z is undefined for the empty subset");
    for v in 0..disk.vertex_count() {
        if u_mask >> v & 1 == 1 {
            assert!(disk.is_interior(v), "phi_Z takes subsets of V_Z");
        }
    }
    let mut link_sum = 0.0;
    for (fi, face) in disk.faces.iter().enumerate() {
        let inside: Vec<usize> = (0..3)
            .filter(|&k| u_mask >> face.corners[k] & 1 == 1)
            .collect();
        if inside.len() == 1 {
            let e = disk.opposite_edge(fi, inside[0]);
            link_sum += PI - disk.weight(e);
        }
    }
    let v = u_mask.count_ones() as i64;
    let e = disk
        .edges
        .iter()
        .filter(|e| u_mask >> e.ends.0 & 1 == 1 && u_mask >> e.ends.1 & 1 == 1)
        .count() as i64;
    let f = disk
        .faces
        .iter()
        .filter(|f| f.corners.iter().all(|&c| u_mask >> c & 1 == 1))
        .count() as i64;
    -link_sum + 2.0 * PI * (v - e + f) as f64
}
