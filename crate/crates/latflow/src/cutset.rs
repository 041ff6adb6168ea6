//! Cutset algebra, independent of how a cutset was produced: path-check
//! verification, self-avoiding reduction, connectedness structure of the
//! separated side, ε-size statistics, regularity, and the balanced
//! hyperplane search.

use serde::{Deserialize, Serialize};

use crate::capacity::CapacityField;
use crate::lattice::{BoxSpec, EdgeId, GraphView, Region, VertexId};
use crate::{Cap, Error, Result};

/// An edge set separating `sources` from `sinks` in a (possibly
/// restricted) region, with its exact passage time.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Cutset {
    edges: Vec<EdgeId>,
    space: Region,
    bounds: Option<Region>,
    sources: Vec<VertexId>,
    sinks: Vec<VertexId>,
    self_avoiding: bool,
    passage_quanta: Cap,
}

impl Cutset {
    pub fn new(
        edges: Vec<EdgeId>,
        space: Region,
        bounds: Option<Region>,
        sources: Vec<VertexId>,
        sinks: Vec<VertexId>,
        passage_quanta: Cap,
    ) -> Self {
        let mut edges = edges;
        edges.sort_unstable();
        edges.dedup();
        Cutset {
            edges,
            space,
            bounds,
            sources,
            sinks,
            self_avoiding: false,
            passage_quanta,
        }
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn space(&self) -> &Region {
        &self.space
    }

    pub fn bounds(&self) -> Option<&Region> {
        self.bounds.as_ref()
    }

    pub fn sources(&self) -> &[VertexId] {
        &self.sources
    }

    pub fn sinks(&self) -> &[VertexId] {
        &self.sinks
    }

    pub fn is_self_avoiding(&self) -> bool {
        self.self_avoiding
    }

    pub fn passage_time(&self) -> Cap {
        self.passage_quanta
    }

    pub fn edge_count(&self) -> u64 {
        self.edges.len() as u64
    }

    /// The cutset as a vertex set: all endpoints of its edges.
    pub fn vertex_ids(&self) -> Vec<VertexId> {
        let mut out: Vec<VertexId> = self
            .edges
            .iter()
            .flat_map(|&e| {
                let (u, v) = self.space.edge_endpoints(e);
                [u, v]
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn vertex_count(&self) -> u64 {
        self.vertex_ids().len() as u64
    }

    pub fn view(&self) -> GraphView<'_> {
        match &self.bounds {
            Some(b) => GraphView::restricted(&self.space, b),
            None => GraphView::whole(&self.space),
        }
    }

    pub fn contains_edge(&self, e: EdgeId) -> bool {
        self.edges.binary_search(&e).is_ok()
    }

    /// Persistence record: edge list by canonical id plus the passage
    /// time as a scaled integer.
    pub fn to_json_record(&self, quantum_bits: u32) -> serde_json::Value {
        serde_json::json!({
            "edges": self.edges.iter().map(|e| e.0).collect::<Vec<_>>(),
            "edge_count": self.edges.len(),
            "vertex_count": self.vertex_count(),
            "passage_time_quanta": self.passage_quanta,
            "quantum_bits": quantum_bits,
            "self_avoiding": self.self_avoiding,
            "space_lo": self.space.lo(),
            "space_hi": self.space.hi(),
        })
    }

    pub(crate) fn with_edges(&self, edges: Vec<EdgeId>, passage: Cap, self_avoiding: bool) -> Self {
        let mut c = self.clone();
        c.edges = edges;
        c.edges.sort_unstable();
        c.passage_quanta = passage;
        c.self_avoiding = self_avoiding;
        c
    }
}

// ---------------------------------------------------------------------
// Shared search helpers.

pub(crate) fn edge_mask(space: &Region, edges: &[EdgeId]) -> Vec<bool> {
    let mut mask = vec![false; space.edge_count() as usize];
    for &e in edges {
        mask[e.index()] = true;
    }
    mask
}

/// Vertices reachable from `starts` without crossing masked edges.
pub(crate) fn reach_avoiding_edges(
    view: &GraphView<'_>,
    starts: &[VertexId],
    blocked: &[bool],
) -> Vec<bool> {
    let mut seen = vec![false; view.space.vertex_count() as usize];
    let mut queue = std::collections::VecDeque::new();
    let mut coords = vec![0; view.space.dim()];
    for &s in starts {
        view.space.coords_into(s, &mut coords);
        if view.vertex_in_bounds(&coords) && !seen[s.index()] {
            seen[s.index()] = true;
            queue.push_back(s);
        }
    }
    let mut nbrs = Vec::new();
    while let Some(v) = queue.pop_front() {
        view.neighbors_into(v, &mut nbrs);
        for &(e, u) in &nbrs {
            if !blocked[e.index()] && !seen[u.index()] {
                seen[u.index()] = true;
                queue.push_back(u);
            }
        }
    }
    seen
}

/// Vertices reachable from `starts` without entering forbidden vertices.
pub(crate) fn reach_avoiding_vertices(
    view: &GraphView<'_>,
    starts: &[VertexId],
    forbidden: &[bool],
) -> Vec<bool> {
    let mut seen = vec![false; view.space.vertex_count() as usize];
    let mut queue = std::collections::VecDeque::new();
    let mut coords = vec![0; view.space.dim()];
    for &s in starts {
        view.space.coords_into(s, &mut coords);
        if view.vertex_in_bounds(&coords) && !forbidden[s.index()] && !seen[s.index()] {
            seen[s.index()] = true;
            queue.push_back(s);
        }
    }
    let mut nbrs = Vec::new();
    while let Some(v) = queue.pop_front() {
        view.neighbors_into(v, &mut nbrs);
        for &(_, u) in &nbrs {
            if !forbidden[u.index()] && !seen[u.index()] {
                seen[u.index()] = true;
                queue.push_back(u);
            }
        }
    }
    seen
}

/// Does removing `edges` disconnect every `sources`-to-`sinks` path?
pub fn is_cutset(
    view: &GraphView<'_>,
    edges: &[EdgeId],
    sources: &[VertexId],
    sinks: &[VertexId],
) -> bool {
    let blocked = edge_mask(view.space, edges);
    let seen = reach_avoiding_edges(view, sources, &blocked);
    sinks.iter().all(|t| !seen[t.index()])
}

fn is_cutset_masked(
    view: &GraphView<'_>,
    blocked: &[bool],
    sources: &[VertexId],
    sinks: &[VertexId],
) -> bool {
    let seen = reach_avoiding_edges(view, sources, blocked);
    sinks.iter().all(|t| !seen[t.index()])
}

/// Greedy reduction to a self-avoiding cutset: edges are considered for
/// removal in descending capacity, then descending edge id, and an edge
/// is dropped whenever the remainder still separates. The output is
/// minimal: dropping any retained edge reconnects the terminals.
pub fn make_self_avoiding(cutset: &Cutset, field: &CapacityField) -> Result<Cutset> {
    let view = cutset.view();
    let mut blocked = edge_mask(&cutset.space, &cutset.edges);
    if !is_cutset_masked(&view, &blocked, &cutset.sources, &cutset.sinks) {
        return Err(Error::Contract(
            "make_self_avoiding called on a non-cutset".into(),
        ));
    }
    let mut order = cutset.edges.to_vec();
    order.sort_unstable_by(|a, b| {
        field
            .cap(*b)
            .cmp(&field.cap(*a))
            .then_with(|| b.0.cmp(&a.0))
    });
    let mut kept = edge_mask(&cutset.space, &cutset.edges);
    for e in order {
        blocked[e.index()] = false;
        if is_cutset_masked(&view, &blocked, &cutset.sources, &cutset.sinks) {
            kept[e.index()] = false;
        } else {
            blocked[e.index()] = true;
        }
    }
    let edges: Vec<EdgeId> = cutset
        .edges
        .iter()
        .copied()
        .filter(|e| kept[e.index()])
        .collect();
    let passage = edges.iter().map(|&e| field.cap(e)).sum();
    Ok(cutset.with_edges(edges, passage, true))
}

/// Structure of the source-reachable side of a self-avoiding cutset:
/// the exterior-boundary identity, its `L^d`-connectedness, and the
/// edge-count lower bound.
#[derive(Clone, Debug)]
pub struct ConnectivityReport {
    pub source_side_size: u64,
    pub exterior_boundary: Vec<VertexId>,
    /// Exterior boundary edges of the source side equal the cutset, exactly.
    pub identity_holds: bool,
    /// The exterior boundary vertex set is connected under `L^d` steps.
    pub boundary_connected: bool,
    /// `edge count >= |exterior boundary| / 3^(d+1)`.
    pub count_bound_holds: bool,
}

impl ConnectivityReport {
    pub fn all_hold(&self) -> bool {
        self.identity_holds && self.boundary_connected && self.count_bound_holds
    }
}

pub fn connectivity_structure(cutset: &Cutset) -> Result<ConnectivityReport> {
    if !cutset.self_avoiding {
        return Err(Error::Contract(
            "connectivity structure needs a self-avoiding cutset".into(),
        ));
    }
    let view = cutset.view();
    let space = &cutset.space;
    let blocked = edge_mask(space, &cutset.edges);
    let source_side = reach_avoiding_edges(&view, &cutset.sources, &blocked);

    // exterior boundary edges: from the source side to a vertex that still
    // reaches the sinks once the cutset is removed from play
    let sink_side = reach_avoiding_edges(&view, &cutset.sinks, &blocked);
    let mut delta_e: Vec<EdgeId> = Vec::new();
    for e in view.edges() {
        let (u, v) = space.edge_endpoints(e);
        let (inner, outer) = if source_side[u.index()] {
            (u, v)
        } else if source_side[v.index()] {
            (v, u)
        } else {
            continue;
        };
        let _ = inner;
        if !source_side[outer.index()] && sink_side[outer.index()] {
            delta_e.push(e);
        }
    }
    delta_e.sort_unstable();
    let identity_holds = delta_e == cutset.edges;

    // exterior boundary vertices: outside the source side, L^d-adjacent to
    // it, and joined to the sinks by a path avoiding source-side vertices
    let vreach = reach_avoiding_vertices(&view, &cutset.sinks, &source_side);
    let mut ext: Vec<VertexId> = Vec::new();
    let mut coords = vec![0; space.dim()];
    for v in space.vertices() {
        if source_side[v.index()] || !vreach[v.index()] {
            continue;
        }
        space.coords_into(v, &mut coords);
        if !view.vertex_in_bounds(&coords) {
            continue;
        }
        if space
            .l_neighbors(v)
            .iter()
            .any(|u| source_side[u.index()])
        {
            ext.push(v);
        }
    }

    let boundary_connected = l_connected(space, &ext);
    let bound = ext.len() as f64 / 3f64.powi(space.dim() as i32 + 1);
    let count_bound_holds = cutset.edges.len() as f64 >= bound - 1e-9;

    Ok(ConnectivityReport {
        source_side_size: source_side.iter().filter(|&&b| b).count() as u64,
        exterior_boundary: ext,
        identity_holds,
        boundary_connected,
        count_bound_holds,
    })
}

/// Is the vertex set a single component under `L^d` adjacency?
pub(crate) fn l_connected(space: &Region, verts: &[VertexId]) -> bool {
    if verts.len() <= 1 {
        return true;
    }
    let mut member = vec![false; space.vertex_count() as usize];
    for &v in verts {
        member[v.index()] = true;
    }
    let mut seen = vec![false; space.vertex_count() as usize];
    let mut stack = vec![verts[0]];
    seen[verts[0].index()] = true;
    let mut count = 1usize;
    while let Some(v) = stack.pop() {
        for u in space.l_neighbors(v) {
            if member[u.index()] && !seen[u.index()] {
                seen[u.index()] = true;
                count += 1;
                stack.push(u);
            }
        }
    }
    count == verts.len()
}

/// Edge counts of a cutset against a threshold ε.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeStats {
    /// Number of edges in the cutset.
    pub nbar: u64,
    pub vertex_count: u64,
    /// Edges with `tau > eps`.
    pub n_plus: u64,
    /// Edges with `0 < tau <= eps`.
    pub n_minus: u64,
    /// All positive-capacity edges; `n_plus + n_minus`.
    pub j: u64,
}

pub fn size_stats(cutset: &Cutset, field: &CapacityField, epsilon_quanta: Cap) -> SizeStats {
    let mut n_plus = 0;
    let mut n_minus = 0;
    for &e in &cutset.edges {
        let c = field.cap(e);
        if c > epsilon_quanta {
            n_plus += 1;
        } else if c > 0 {
            n_minus += 1;
        }
    }
    SizeStats {
        nbar: cutset.edges.len() as u64,
        vertex_count: cutset.vertex_count(),
        n_plus,
        n_minus,
        j: n_plus + n_minus,
    }
}

/// Result of the regularity test and balanced hyperplane search along the
/// first base axis.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegularityReport {
    pub is_regular: bool,
    /// `beta_bar * ||k||_v`, the vertex-count budget.
    pub bound: f64,
    pub vertex_count: u64,
    pub chosen_plane: Option<u64>,
    pub plane_trace_size: u64,
}

/// Find the first offset `l` such that the cutset's traces on the planes
/// `x_1 = l` and `x_1 = k_1 - l` jointly stay under
/// `beta_bar * k_1^(delta/2) * k_2 ... k_{d-1}`. For a regular cutset the
/// search must succeed within `k_1^(1 - delta/2)` steps.
pub fn balanced_plane_search(
    cutset: &Cutset,
    box_spec: &BoxSpec,
    delta: f64,
    beta_bar: f64,
) -> Result<RegularityReport> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidSpec(format!("delta {delta} outside (0, 1]")));
    }
    let k1 = box_spec.sides()[0];
    if k1 == 0 {
        return Err(Error::DegenerateBox("k_1 = 0 has no interior planes".into()));
    }
    let volume = box_spec.base_volume() as f64;
    let bound = beta_bar * volume;
    let vertex_count = cutset.vertex_count();
    if (vertex_count as f64) > bound {
        return Ok(RegularityReport {
            is_regular: false,
            bound,
            vertex_count,
            chosen_plane: None,
            plane_trace_size: 0,
        });
    }

    let rest: f64 = box_spec.sides()[1..].iter().map(|&k| k as f64).product();
    let trace_budget = beta_bar * (k1 as f64).powf(delta / 2.0) * rest;
    let verts = cutset.vertex_ids();
    let space = &cutset.space;
    let mut coords = vec![0; space.dim()];
    let mut on_plane = |l: i64, r: i64| -> u64 {
        let mut n = 0u64;
        for &v in &verts {
            space.coords_into(v, &mut coords);
            if coords[0] == l || coords[0] == r {
                n += 1;
            }
        }
        n
    };

    let max_l = k1 / 2;
    for l in 0..=max_l {
        let trace = on_plane(l as i64, (k1 - l) as i64);
        if (trace as f64) <= trace_budget {
            let l_limit = (k1 as f64).powf(1.0 - delta / 2.0);
            if l as f64 > l_limit {
                return Err(Error::Contract(format!(
                    "balanced plane found at l = {l}, beyond the budget {l_limit:.3}"
                )));
            }
            return Ok(RegularityReport {
                is_regular: true,
                bound,
                vertex_count,
                chosen_plane: Some(l),
                plane_trace_size: trace,
            });
        }
    }
    Err(Error::Contract(
        "no balanced hyperplane within range; contradicts the pigeonhole bound".into(),
    ))
}

/// Empirical tail of cutset sizes with a log-linear fit over the upper
/// range.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TailHistogram {
    /// `(n, fraction of samples >= n)` at multiples of the bin width.
    pub points: Vec<(u64, f64)>,
    /// Empirical multiplier: median sample over the base volume.
    pub beta_hat: f64,
    /// Fit starts at `beta_hat * volume`.
    pub fit_from: u64,
    /// Least-squares slope of `ln P[N >= n]` over the fit range.
    pub log_slope: Option<f64>,
}

pub fn tail_histogram(samples: &[u64], bin_width: u64, base_volume: f64) -> Result<TailHistogram> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("no samples for tail".into()));
    }
    let bin = bin_width.max(1);
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let lo = sorted[0];
    let hi = sorted[sorted.len() - 1];
    let total = sorted.len() as f64;
    let mut points = Vec::new();
    let mut n = lo;
    loop {
        let at_least = sorted.len() - sorted.partition_point(|&x| x < n);
        points.push((n, at_least as f64 / total));
        if n > hi {
            break;
        }
        n += bin;
    }
    let median = sorted[sorted.len() / 2] as f64;
    let beta_hat = if base_volume > 0.0 {
        median / base_volume
    } else {
        1.0
    };
    let fit_from = (beta_hat * base_volume).floor() as u64;
    let fit: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(n, p)| n >= fit_from && p > 0.0)
        .map(|&(n, p)| (n as f64, p.ln()))
        .collect();
    let log_slope = least_squares_slope(&fit);
    Ok(TailHistogram {
        points,
        beta_hat,
        fit_from,
        log_slope,
    })
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::DistributionSpec;
    use crate::flow::{max_flow_box, min_cut_from_flow};
    use crate::lattice::AmbientWindow;

    fn field_2d(k: u64, m: u64, dist: DistributionSpec, rep: u64) -> (BoxSpec, CapacityField) {
        let b = BoxSpec::new(2, vec![k], m).unwrap();
        let f = CapacityField::sample(AmbientWindow::new(b.clone(), 0), dist, 31, rep).unwrap();
        (b, f)
    }

    #[test]
    fn empty_set_is_not_a_cutset() {
        let (b, f) = field_2d(2, 2, DistributionSpec::Dirac { value: 1.0 }, 0);
        let space = f.region();
        let bounds = b.region();
        let view = GraphView::restricted(space, &bounds);
        let s = b.bottom_face(space).unwrap();
        let t = b.top_face(space).unwrap();
        assert!(!is_cutset(&view, &[], &s, &t));
        let all: Vec<EdgeId> = view.edges();
        assert!(is_cutset(&view, &all, &s, &t));
    }

    #[test]
    fn residual_cut_is_a_cutset_and_minimal_after_reduction() {
        for rep in 0..50 {
            let (b, f) = field_2d(
                4,
                4,
                DistributionSpec::Bernoulli {
                    p_open: 0.7,
                    value: 1.0,
                },
                rep,
            );
            let r = max_flow_box(&b, &f).unwrap();
            let cut = min_cut_from_flow(&r, &f).unwrap();
            let view = cut.view();
            assert!(is_cutset(&view, cut.edges(), cut.sources(), cut.sinks()));
            let slim = make_self_avoiding(&cut, &f).unwrap();
            assert!(slim.passage_time() <= cut.passage_time());
            assert_eq!(slim.passage_time(), r.value, "reduction must not drop weight");
            // drop-one minimality
            for &e in slim.edges() {
                let without: Vec<EdgeId> =
                    slim.edges().iter().copied().filter(|&x| x != e).collect();
                assert!(
                    !is_cutset(&view, &without, slim.sources(), slim.sinks()),
                    "rep {rep}: edge {} is redundant",
                    e.0
                );
            }
        }
    }

    #[test]
    fn reduction_drops_redundant_edge() {
        let (b, f) = field_2d(2, 2, DistributionSpec::Dirac { value: 1.0 }, 0);
        let r = max_flow_box(&b, &f).unwrap();
        let cut = min_cut_from_flow(&r, &f).unwrap();
        let mut edges = cut.edges().to_vec();
        let extra = f
            .region()
            .edge_id(0, &[0, 0])
            .expect("horizontal edge exists");
        edges.push(extra);
        let padded = Cutset::new(
            edges,
            cut.space().clone(),
            cut.bounds().cloned(),
            cut.sources().to_vec(),
            cut.sinks().to_vec(),
            cut.passage_time() + f.cap(extra),
        );
        let slim = make_self_avoiding(&padded, &f).unwrap();
        assert!(!slim.contains_edge(extra));
        assert_eq!(slim.edge_count(), 3);
    }

    #[test]
    fn connectivity_structure_flat_and_random() {
        for rep in 0..30 {
            let (b, f) = field_2d(
                5,
                5,
                DistributionSpec::Bernoulli {
                    p_open: 0.75,
                    value: 1.0,
                },
                rep,
            );
            let r = max_flow_box(&b, &f).unwrap();
            let cut = min_cut_from_flow(&r, &f).unwrap();
            let slim = make_self_avoiding(&cut, &f).unwrap();
            let rep_struct = connectivity_structure(&slim).unwrap();
            assert!(rep_struct.identity_holds, "rep {rep}");
            assert!(rep_struct.boundary_connected, "rep {rep}");
            assert!(rep_struct.count_bound_holds, "rep {rep}");
        }
    }

    #[test]
    fn size_stats_identities() {
        let (b, f) = field_2d(2, 2, DistributionSpec::Dirac { value: 1.0 }, 0);
        let r = max_flow_box(&b, &f).unwrap();
        let cut = make_self_avoiding(&min_cut_from_flow(&r, &f).unwrap(), &f).unwrap();
        let eps = f.quantize(0.0625);
        let st = size_stats(&cut, &f, eps);
        assert_eq!(st.nbar, 3);
        assert_eq!(st.n_plus, 3);
        assert_eq!(st.n_minus, 0);
        assert_eq!(st.j, 3);
        // eps * N+ <= passage time
        assert!(eps * st.n_plus as Cap <= cut.passage_time());

        let all_closed = Cutset::new(
            cut.edges().to_vec(),
            cut.space().clone(),
            cut.bounds().cloned(),
            cut.sources().to_vec(),
            cut.sinks().to_vec(),
            0,
        );
        let zero_field = CapacityField::from_values(
            AmbientWindow::new(b, 0),
            f.quantum_bits(),
            vec![0; f.values().len()],
        )
        .unwrap();
        let st0 = size_stats(&all_closed, &zero_field, eps);
        assert_eq!((st0.n_plus, st0.n_minus, st0.j), (0, 0, 0));
    }

    #[test]
    fn flat_cut_balanced_at_zero() {
        let (b, f) = field_2d(4, 4, DistributionSpec::Dirac { value: 1.0 }, 0);
        let r = max_flow_box(&b, &f).unwrap();
        let cut = make_self_avoiding(&min_cut_from_flow(&r, &f).unwrap(), &f).unwrap();
        let rep = balanced_plane_search(&cut, &b, 1.0, 4.0).unwrap();
        assert!(rep.is_regular);
        assert_eq!(rep.chosen_plane, Some(0));
    }

    #[test]
    fn congested_plane_pushes_search_inward() {
        // hand-built cutset hugging x = 0: a staircase using many vertices
        // on the x = 0 and x = k lines, versus a trace budget that rejects l = 0
        let (b, f) = field_2d(4, 4, DistributionSpec::Dirac { value: 1.0 }, 0);
        let space = f.region().clone();
        let bounds = b.region();
        // vertical-edge wall at height 2 plus vertical edges at heights 0..4
        // on the two outer columns: still a cutset, but heavy on the rims
        let mut edges = vec![];
        for x in 0..=4i64 {
            edges.push(space.edge_id(1, &[x, 2]).unwrap());
        }
        for y in [0i64, 1, 3] {
            edges.push(space.edge_id(1, &[0, y]).unwrap());
            edges.push(space.edge_id(1, &[4, y]).unwrap());
        }
        let passage: Cap = edges.iter().map(|&e| f.cap(e)).sum();
        let cut = Cutset::new(
            edges,
            space,
            Some(bounds),
            b.bottom_face(f.region()).unwrap(),
            b.top_face(f.region()).unwrap(),
            passage,
        );
        // trace budget beta_bar * k1^(delta/2) = 9: the rim planes hold 10
        // cutset vertices, the interior planes only the wall's 4
        let rep = balanced_plane_search(&cut, &b, 1.0, 4.5).unwrap();
        assert!(rep.is_regular);
        assert!(rep.chosen_plane.unwrap() > 0, "plane {:?}", rep.chosen_plane);
    }

    #[test]
    fn tail_histogram_basics() {
        let t = tail_histogram(&[5, 5, 5], 1, 4.0).unwrap();
        let p4 = t.points.iter().find(|&&(n, _)| n == 5).unwrap().1;
        assert_eq!(p4, 1.0);
        let after = t.points.iter().find(|&&(n, _)| n > 5).unwrap().1;
        assert_eq!(after, 0.0);

        let t = tail_histogram(&[3, 5], 1, 1.0).unwrap();
        let p = t.points.iter().find(|&&(n, _)| n == 4).unwrap().1;
        assert!((p - 0.5).abs() < 1e-12);
        // monotone non-increasing
        for w in t.points.windows(2) {
            assert!(w[1].1 <= w[0].1);
        }
        assert!(tail_histogram(&[], 1, 1.0).is_err());
    }
}
