//! Open clusters and their boundaries: the cluster grown from a seed box,
//! exterior boundary extraction, zero-cutset detection, and the
//! boundary-size tail of the origin cluster.

use serde::{Deserialize, Serialize};

use crate::capacity::{CapacityField, DistributionSpec};
use crate::cutset::{is_cutset, l_connected, least_squares_slope, reach_avoiding_vertices};
use crate::lattice::{AmbientWindow, BoxSpec, EdgeId, GraphView, Region, VertexId};
use crate::{Error, Result};

/// All vertices joined to the seed box by open paths, within the field's
/// window.
#[derive(Clone, Debug)]
pub struct OpenCluster {
    seed: Region,
    member: Vec<bool>,
    vertices: Vec<VertexId>,
    touches_window_boundary: bool,
}

impl OpenCluster {
    pub fn seed(&self) -> &Region {
        &self.seed
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.member[v.index()]
    }

    pub fn membership(&self) -> &[bool] {
        &self.member
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn touches_window_boundary(&self) -> bool {
        self.touches_window_boundary
    }
}

/// Breadth-first closure of the seed box over open edges. With
/// `inside_open`, edges with both endpoints in the seed box count as open
/// regardless of their sampled capacity (the convention used by the
/// renormalization construction; it does not change the vertex set, only
/// the notion of which edges the cluster owns).
pub fn open_cluster(field: &CapacityField, seed: &Region, inside_open: bool) -> OpenCluster {
    let space = field.region();
    debug_assert!(space.contains_region(seed));
    let mut member = vec![false; space.vertex_count() as usize];
    let mut queue = std::collections::VecDeque::new();
    let mut coords = vec![0; space.dim()];
    crate::lattice::for_each_point(seed.lo(), seed.hi(), |p| {
        if let Some(v) = space.vertex_id(p) {
            if !member[v.index()] {
                member[v.index()] = true;
                queue.push_back(v);
            }
        }
    });
    let view = GraphView::whole(space);
    let mut nbrs = Vec::new();
    let mut coords_u = vec![0; space.dim()];
    while let Some(v) = queue.pop_front() {
        view.neighbors_into(v, &mut nbrs);
        space.coords_into(v, &mut coords);
        for &(e, u) in &nbrs {
            if member[u.index()] {
                continue;
            }
            let open = if field.is_open(e) {
                true
            } else if inside_open {
                space.coords_into(u, &mut coords_u);
                seed.contains_point(&coords) && seed.contains_point(&coords_u)
            } else {
                false
            };
            if open {
                member[u.index()] = true;
                queue.push_back(u);
            }
        }
    }
    let mut vertices = Vec::new();
    let mut touches = false;
    for v in space.vertices() {
        if member[v.index()] {
            vertices.push(v);
            space.coords_into(v, &mut coords);
            if space.is_rim(&coords) {
                touches = true;
            }
        }
    }
    OpenCluster {
        seed: seed.clone(),
        member,
        vertices,
        touches_window_boundary: touches,
    }
}

/// Boundary decomposition of a finite cluster: all boundary edges and
/// vertices, and the exterior parts reachable from the window rim without
/// entering the cluster.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundarySets {
    /// All boundary edges (exactly one endpoint in the cluster).
    pub delta: Vec<EdgeId>,
    /// Exterior boundary edges.
    pub delta_e: Vec<EdgeId>,
    /// Boundary vertices: outside the cluster, `L^d`-adjacent to it.
    pub partial: Vec<VertexId>,
    /// Exterior boundary vertices.
    pub partial_e: Vec<VertexId>,
    /// Interior boundary: cluster vertices `L^d`-adjacent to the boundary.
    pub partial_i: Vec<VertexId>,
}

pub fn exterior_boundary(cluster: &OpenCluster, field: &CapacityField) -> Result<BoundarySets> {
    if cluster.touches_window_boundary() {
        return Err(Error::InfiniteCluster(
            "cluster touches the window rim; grow the margin".into(),
        ));
    }
    let space = field.region();
    let view = GraphView::whole(space);

    // boundary and interior-boundary vertices via L^d adjacency
    let mut in_partial = vec![false; space.vertex_count() as usize];
    let mut partial = Vec::new();
    for &v in cluster.vertices() {
        for u in space.l_neighbors(v) {
            if !cluster.contains(u) && !in_partial[u.index()] {
                in_partial[u.index()] = true;
                partial.push(u);
            }
        }
    }
    let mut in_partial_i = vec![false; space.vertex_count() as usize];
    let mut partial_i = Vec::new();
    for &v in &partial {
        for u in space.l_neighbors(v) {
            if cluster.contains(u) && !in_partial_i[u.index()] {
                in_partial_i[u.index()] = true;
                partial_i.push(u);
            }
        }
    }

    // exterior boundary vertices: joined to the rim without entering the cluster
    let rim = space.rim_vertices();
    let outside = reach_avoiding_vertices(&view, &rim, cluster.membership());
    let mut partial_e: Vec<VertexId> = partial
        .iter()
        .copied()
        .filter(|v| outside[v.index()])
        .collect();
    partial_e.sort_unstable();
    partial.sort_unstable();
    partial_i.sort_unstable();

    // boundary edges: exactly one endpoint inside
    let mut delta = Vec::new();
    let mut delta_e = Vec::new();
    let mut in_partial_e = vec![false; space.vertex_count() as usize];
    for &v in &partial_e {
        in_partial_e[v.index()] = true;
    }
    for e in space.edges() {
        let (u, v) = space.edge_endpoints(e);
        let (inside, outside_v) = match (cluster.contains(u), cluster.contains(v)) {
            (true, false) => (u, v),
            (false, true) => (v, u),
            _ => continue,
        };
        let _ = inside;
        delta.push(e);
        if in_partial_e[outside_v.index()] {
            delta_e.push(e);
        }
    }

    Ok(BoundarySets {
        delta,
        delta_e,
        partial,
        partial_e,
        partial_i,
    })
}

impl BoundarySets {
    /// Every exterior boundary edge is closed, by open-maximality.
    pub fn all_exterior_closed(&self, field: &CapacityField) -> bool {
        self.delta_e.iter().all(|&e| !field.is_open(e))
    }

    /// The exterior boundary vertex set is `L^d`-connected (corner steps
    /// bridged, which is what the corner cases require).
    pub fn exterior_connected(&self, space: &Region) -> bool {
        l_connected(space, &self.partial_e)
    }
}

/// Does a closed cutset separate the box from the window rim? True iff
/// the open cluster of the box stays strictly inside the window.
pub fn zero_cutset_exists(field: &CapacityField, box_spec: &BoxSpec) -> bool {
    let cluster = open_cluster(field, &box_spec.region(), false);
    !cluster.touches_window_boundary()
}

/// Cutset check for a boundary edge set against the window rim.
pub fn separates_from_rim(field: &CapacityField, seed: &Region, edges: &[EdgeId]) -> bool {
    let space = field.region();
    let view = GraphView::whole(space);
    let mut seeds = Vec::new();
    crate::lattice::for_each_point(seed.lo(), seed.hi(), |p| {
        if let Some(v) = space.vertex_id(p) {
            seeds.push(v);
        }
    });
    let rim = space.rim_vertices();
    is_cutset(&view, edges, &seeds, &rim)
}

/// Empirical distribution of the exterior boundary size of the origin
/// cluster.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryTail {
    /// `(size, count)` sorted by size.
    pub histogram: Vec<(u64, u64)>,
    pub finite_count: u64,
    pub discarded: u64,
    /// Least-squares slope of `ln P[|boundary| = n]` over the observed
    /// range; strictly negative slopes indicate an exponential tail.
    pub log_slope: Option<f64>,
}

impl BoundaryTail {
    pub fn to_csv(&self) -> String {
        let total: u64 = self.histogram.iter().map(|&(_, c)| c).sum();
        let mut out = String::from("n,count,cumulative\n");
        let mut cum = 0u64;
        for &(n, c) in &self.histogram {
            cum += c;
            out.push_str(&format!("{n},{c},{cum}\n"));
        }
        let _ = total;
        out
    }
}

/// Sample the origin cluster `n_samples` times and record `|Delta_e C(0)|`
/// whenever the cluster is finite. Windows grow geometrically (x2 margin)
/// while the cluster touches the rim, up to `max_margin`; still-touching
/// samples are discarded so small-cluster statistics stay unbiased.
pub fn boundary_tail(
    dist: &DistributionSpec,
    dim: usize,
    n_samples: u64,
    base_margin: u64,
    max_margin: u64,
    master_seed: u64,
) -> Result<BoundaryTail> {
    dist.validate()?;
    let origin = BoxSpec::new(dim, vec![0; dim - 1], 0)?;
    let mut sizes: Vec<u64> = Vec::new();
    let mut discarded = 0u64;
    for rep in 0..n_samples {
        let mut margin = base_margin.max(1);
        let size = loop {
            let window = AmbientWindow::new(origin.clone(), margin);
            let field = CapacityField::sample(window, dist.clone(), master_seed, rep)?;
            let cluster = open_cluster(&field, &origin.region(), false);
            if !cluster.touches_window_boundary() {
                let b = exterior_boundary(&cluster, &field)?;
                break Some(b.delta_e.len() as u64);
            }
            if margin >= max_margin {
                break None;
            }
            margin = (margin * 2).min(max_margin);
        };
        match size {
            Some(s) => sizes.push(s),
            None => discarded += 1,
        }
    }
    if sizes.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no finite origin clusters in {n_samples} samples"
        )));
    }
    sizes.sort_unstable();
    let mut histogram: Vec<(u64, u64)> = Vec::new();
    for &s in &sizes {
        match histogram.last_mut() {
            Some((n, c)) if *n == s => *c += 1,
            _ => histogram.push((s, 1)),
        }
    }
    let total = sizes.len() as f64;
    let pts: Vec<(f64, f64)> = histogram
        .iter()
        .map(|&(n, c)| (n as f64, (c as f64 / total).ln()))
        .collect();
    let log_slope = least_squares_slope(&pts);
    Ok(BoundaryTail {
        histogram,
        finite_count: sizes.len() as u64,
        discarded,
        log_slope,
    })
}
