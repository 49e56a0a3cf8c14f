//! Weighted triangulations of closed oriented surfaces.
//!
//! A triangulation is stored as an oriented combinatorial map: faces are
//! cyclic triples of directed edge references, and each edge appears in face
//! boundaries exactly twice, once per direction. Vertices carry no geometry;
//! all metric data live in a separate radius vector.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::Deserialize;

use crate::error::{Error, Result};

pub const MAX_WEIGHT: f64 = PI / 2.0;

/// A directed reference to an edge inside a face boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DirectedEdge {
    pub edge: usize,
    /// `true` traverses the edge from `ends.0` to `ends.1`.
    pub forward: bool,
}

impl DirectedEdge {
    pub fn reversed(self) -> Self {
        DirectedEdge {
            edge: self.edge,
            forward: !self.forward,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub id: String,
    pub ends: (usize, usize),
    pub weight: f64,
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.ends.0 == self.ends.1
    }

    pub fn other_end(&self, v: usize) -> usize {
        if self.ends.0 == v {
            self.ends.1
        } else {
            self.ends.0
        }
    }
}

/// An oriented triangular face: three directed edges chained head-to-tail.
#[derive(Debug, Clone)]
pub struct Face {
    pub sides: [DirectedEdge; 3],
}

/// A face corner, addressed by face index and position `0..3`.
///
/// The corner at position `i` sits at the tail of `sides[i]`; its adjacent
/// edges are `sides[i]` and `sides[(i + 2) % 3]`, and its opposite edge is
/// `sides[(i + 1) % 3]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Corner {
    pub face: usize,
    pub position: usize,
}

#[derive(Debug, Clone)]
pub struct WeightedTriangulation {
    vertex_ids: Vec<String>,
    edges: Vec<Edge>,
    faces: Vec<Face>,
    /// Corner vertex per (face, position), derived once at construction.
    corner_vertices: Vec<[usize; 3]>,
    /// For each edge, the (face, position) slot traversing it forward and
    /// the slot traversing it backward.
    edge_slots: Vec<(Corner, Corner)>,
}

#[derive(Deserialize)]
struct EdgeDoc {
    id: String,
    ends: [String; 2],
    weight: f64,
}

#[derive(Deserialize)]
struct TriangulationDoc {
    lifts_to_cover: bool,
    vertices: Vec<String>,
    edges: Vec<EdgeDoc>,
    faces: Vec<Vec<String>>,
    #[serde(default)]
    metric: Option<HashMap<String, f64>>,
}

/// Parse and fully validate a triangulation document.
pub fn parse_triangulation(document: &str) -> Result<WeightedTriangulation> {
    Ok(parse_with_metric(document)?.0)
}

/// Like [`parse_triangulation`] but also returns the optional initial
/// metric carried by the document (vertex order of the triangulation).
pub fn parse_with_metric(document: &str) -> Result<(WeightedTriangulation, Option<Vec<f64>>)> {
    let doc: TriangulationDoc =
        serde_json::from_str(document).map_err(|e| Error::Schema(e.to_string()))?;
    if !doc.lifts_to_cover {
        return Err(Error::Schema(
            "input must assert `lifts_to_cover: true`; lifting is not decided algorithmically"
                .into(),
        ));
    }

    let mut vertex_index = HashMap::new();
    for (i, id) in doc.vertices.iter().enumerate() {
        if vertex_index.insert(id.clone(), i).is_some() {
            return Err(Error::Schema(format!("duplicate vertex id {id:?}")));
        }
    }

    let mut edge_index = HashMap::new();
    let mut edges = Vec::with_capacity(doc.edges.len());
    for (i, e) in doc.edges.iter().enumerate() {
        if edge_index.insert(e.id.clone(), i).is_some() {
            return Err(Error::Schema(format!("duplicate edge id {:?}", e.id)));
        }
        let a = *vertex_index
            .get(&e.ends[0])
            .ok_or_else(|| Error::Schema(format!("edge {:?}: unknown vertex {:?}", e.id, e.ends[0])))?;
        let b = *vertex_index
            .get(&e.ends[1])
            .ok_or_else(|| Error::Schema(format!("edge {:?}: unknown vertex {:?}", e.id, e.ends[1])))?;
        edges.push(Edge {
            id: e.id.clone(),
            ends: (a, b),
            weight: e.weight,
        });
    }

    let mut faces = Vec::with_capacity(doc.faces.len());
    for (fi, refs) in doc.faces.iter().enumerate() {
        if refs.len() != 3 {
            return Err(Error::Schema(format!(
                "face {fi} has {} sides; faces must have exactly 3",
                refs.len()
            )));
        }
        let mut sides = [DirectedEdge {
            edge: 0,
            forward: true,
        }; 3];
        for (k, r) in refs.iter().enumerate() {
            let (sign, name) = r
                .split_at_checked(1)
                .ok_or_else(|| Error::Schema(format!("face {fi}: empty edge reference")))?;
            let forward = match sign {
                "+" => true,
                "-" => false,
                _ => {
                    return Err(Error::Schema(format!(
                        "face {fi}: edge reference {r:?} must start with '+' or '-'"
                    )))
                }
            };
            let edge = *edge_index
                .get(name)
                .ok_or_else(|| Error::Schema(format!("face {fi}: unknown edge {name:?}")))?;
            sides[k] = DirectedEdge { edge, forward };
        }
        faces.push(Face { sides });
    }

    let tri = WeightedTriangulation::new(doc.vertices, edges, faces)?;
    let metric = match doc.metric {
        None => None,
        Some(m) => {
            let mut r = vec![0.0; tri.vertex_count()];
            for (id, value) in &m {
                let v = tri
                    .vertex_id_index(id)
                    .ok_or_else(|| Error::Schema(format!("metric: unknown vertex {id:?}")))?;
                r[v] = *value;
            }
            if r.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return Err(Error::Schema(
                    "metric must give a positive finite radius to every vertex".into(),
                ));
            }
            Some(r)
        }
    };
    Ok((tri, metric))
}

impl WeightedTriangulation {
    /// Build from already-resolved components and check every invariant.
    pub fn new(vertex_ids: Vec<String>, edges: Vec<Edge>, faces: Vec<Face>) -> Result<Self> {
        for e in &edges {
            if !e.weight.is_finite() || e.weight < 0.0 || e.weight > MAX_WEIGHT {
                return Err(Error::Weight(format!(
                    "edge {:?} has weight {}; weights must lie in [0, pi/2]",
                    e.id, e.weight
                )));
            }
        }

        // Each edge must be traversed exactly once forward and once backward.
        let mut fwd: Vec<Option<Corner>> = vec![None; edges.len()];
        let mut bwd: Vec<Option<Corner>> = vec![None; edges.len()];
        for (fi, face) in faces.iter().enumerate() {
            let ids: Vec<usize> = face.sides.iter().map(|d| d.edge).collect();
            if ids[0] == ids[1] || ids[1] == ids[2] || ids[0] == ids[2] {
                return Err(Error::Topology(format!(
                    "face {fi} repeats an edge; the three edges of a face must differ"
                )));
            }
            for (k, d) in face.sides.iter().enumerate() {
                let slot = if d.forward { &mut fwd } else { &mut bwd };
                let corner = Corner {
                    face: fi,
                    position: k,
                };
                if slot[d.edge].replace(corner).is_some() {
                    return Err(Error::Topology(format!(
                        "edge {:?} traversed twice in the same direction (orientation mismatch)",
                        edges[d.edge].id
                    )));
                }
            }
        }
        let mut edge_slots = Vec::with_capacity(edges.len());
        for (ei, e) in edges.iter().enumerate() {
            match (fwd[ei], bwd[ei]) {
                (Some(f), Some(b)) => edge_slots.push((f, b)),
                _ => {
                    return Err(Error::Topology(format!(
                        "edge {:?} is not used exactly once in each direction",
                        e.id
                    )))
                }
            }
        }

        // Face boundaries must chain head-to-tail.
        let mut corner_vertices = Vec::with_capacity(faces.len());
        for (fi, face) in faces.iter().enumerate() {
            let mut cv = [0usize; 3];
            for k in 0..3 {
                let d = face.sides[k];
                let e = &edges[d.edge];
                let (tail, head) = if d.forward {
                    (e.ends.0, e.ends.1)
                } else {
                    (e.ends.1, e.ends.0)
                };
                let next = face.sides[(k + 1) % 3];
                let ne = &edges[next.edge];
                let next_tail = if next.forward { ne.ends.0 } else { ne.ends.1 };
                if head != next_tail {
                    return Err(Error::Topology(format!(
                        "face {fi}: boundary does not chain (head of side {k} is not the tail of side {})",
                        (k + 1) % 3
                    )));
                }
                cv[k] = tail;
            }
            corner_vertices.push(cv);
        }

        let tri = WeightedTriangulation {
            vertex_ids,
            edges,
            faces,
            corner_vertices,
            edge_slots,
        };

        let chi = tri.euler_characteristic();
        if chi % 2 != 0 || chi > 0 {
            return Err(Error::Topology(format!(
                "Euler characteristic {chi} is not an even nonpositive integer"
            )));
        }

        tri.check_small_null_loops()?;
        Ok(tri)
    }

    /// Necessary local conditions for "no null-homotopic loop of at most two
    /// edges": no loop edge bounding within 2 faces, and no parallel-edge
    /// pair bounding a disk made of exactly 2 faces. Full homotopy checking
    /// is out of scope; inputs assert liftability themselves.
    fn check_small_null_loops(&self) -> Result<()> {
        let n = self.faces.len();
        for f1 in 0..n {
            for f2 in f1..n {
                let region: Vec<usize> = if f1 == f2 { vec![f1] } else { vec![f1, f2] };
                let mut count: HashMap<usize, usize> = HashMap::new();
                for &f in &region {
                    for d in &self.faces[f].sides {
                        *count.entry(d.edge).or_insert(0) += 1;
                    }
                }
                let boundary: Vec<usize> = count
                    .iter()
                    .filter(|&(_, &c)| c == 1)
                    .map(|(&e, _)| e)
                    .collect();
                let offending = match boundary.len() {
                    1 => self.edges[boundary[0]].is_loop(),
                    2 => {
                        let a = &self.edges[boundary[0]];
                        let b = &self.edges[boundary[1]];
                        let (p, q) = (a.ends, b.ends);
                        p == q || (p.0, p.1) == (q.1, q.0)
                    }
                    _ => false,
                };
                if offending && self.region_is_disk(&region, &count) {
                    let ids: Vec<&str> = boundary
                        .iter()
                        .map(|&e| self.edges[e].id.as_str())
                        .collect();
                    return Err(Error::Topology(format!(
                        "edges {ids:?} form a null-homotopic loop bounding {} face(s)",
                        region.len()
                    )));
                }
            }
        }
        Ok(())
    }

    fn region_is_disk(&self, region: &[usize], edge_count: &HashMap<usize, usize>) -> bool {
        let mut vertices: Vec<usize> = region
            .iter()
            .flat_map(|&f| self.corner_vertices[f].iter().copied())
            .collect();
        // Boundary edge endpoints also belong to the region closure.
        for (&e, _) in edge_count.iter() {
            vertices.push(self.edges[e].ends.0);
            vertices.push(self.edges[e].ends.1);
        }
        vertices.sort_unstable();
        vertices.dedup();
        let v = vertices.len() as i64;
        let e = edge_count.len() as i64;
        let f = region.len() as i64;
        v - e + f == 1
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_ids.len() as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    pub fn vertex_ids(&self) -> &[String] {
        &self.vertex_ids
    }

    pub fn vertex_id(&self, v: usize) -> &str {
        &self.vertex_ids[v]
    }

    pub fn vertex_id_index(&self, id: &str) -> Option<usize> {
        self.vertex_ids.iter().position(|x| x == id)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn weight(&self, e: usize) -> f64 {
        self.edges[e].weight
    }

    /// The vertex at each corner of a face, position by position.
    pub fn face_corner_vertices(&self, f: usize) -> [usize; 3] {
        self.corner_vertices[f]
    }

    pub fn corner_vertex(&self, c: Corner) -> usize {
        self.corner_vertices[c.face][c.position]
    }

    /// The edge opposite a corner (the side not incident to it).
    pub fn opposite_edge(&self, c: Corner) -> usize {
        self.faces[c.face].sides[(c.position + 1) % 3].edge
    }

    /// The two edges adjacent to a corner.
    pub fn adjacent_edges(&self, c: Corner) -> (usize, usize) {
        let sides = &self.faces[c.face].sides;
        (sides[c.position].edge, sides[(c.position + 2) % 3].edge)
    }

    /// The directed edge leaving a corner along the face orientation.
    pub fn directed_side(&self, c: Corner) -> DirectedEdge {
        self.faces[c.face].sides[c.position]
    }

    /// The slot on the other side of the directed edge at `c` (same edge,
    /// opposite direction).
    pub fn opposite_slot(&self, c: Corner) -> Corner {
        let d = self.directed_side(c);
        let (f, b) = self.edge_slots[d.edge];
        if d.forward {
            b
        } else {
            f
        }
    }

    /// Whether any face has two corners at the same vertex. When true, the
    /// corner-multiplicity counting convention is load-bearing for phi.
    pub fn has_repeated_vertex_face(&self) -> bool {
        self.corner_vertices
            .iter()
            .any(|cv| cv[0] == cv[1] || cv[1] == cv[2] || cv[0] == cv[2])
    }

    pub fn corners(&self) -> impl Iterator<Item = Corner> + '_ {
        (0..self.faces.len())
            .flat_map(|face| (0..3).map(move |position| Corner { face, position }))
    }
}
