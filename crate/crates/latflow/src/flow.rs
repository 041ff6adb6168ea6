//! Exact maximum flow on lattice regions and canonical minimal cuts.
//!
//! The solver is a BFS-layered blocking-flow scheme over an undirected
//! residual network, generic over the arithmetic scalar. Neighbor arcs
//! are scanned in canonical edge order, so runs are replayable; the
//! residual source side (and with it the canonical minimum cut) is the
//! same for every maximum flow, independent of tie-breaking.

use crate::capacity::CapacityField;
use crate::cutset::Cutset;
use crate::lattice::{BoxSpec, EdgeId, GraphView, Region, VertexId};
use crate::scalar::FlowScalar;
use crate::{Cap, Error, Result};

/// Generic blocking-flow max-flow over an adjacency-list arena.
pub mod dinic {
    use super::FlowScalar;
    use std::collections::VecDeque;

    #[derive(Copy, Clone, Debug)]
    pub struct Arc<S> {
        pub to: u32,
        pub rev: u32,
        pub cap: S,
    }

    pub struct Dinic<S: FlowScalar> {
        pub graph: Vec<Vec<Arc<S>>>,
        level: Vec<i32>,
        iter: Vec<usize>,
    }

    impl<S: FlowScalar> Dinic<S> {
        pub fn new(n: usize) -> Self {
            Dinic {
                graph: vec![Vec::new(); n],
                level: vec![-1; n],
                iter: vec![0; n],
            }
        }

        pub fn node_count(&self) -> usize {
            self.graph.len()
        }

        /// Directed arc with zero-capacity reverse.
        pub fn add_directed(&mut self, from: usize, to: usize, cap: S) -> (usize, usize) {
            let fi = self.graph[from].len();
            let ti = self.graph[to].len();
            self.graph[from].push(Arc {
                to: to as u32,
                rev: ti as u32,
                cap,
            });
            self.graph[to].push(Arc {
                to: from as u32,
                rev: fi as u32,
                cap: S::zero(),
            });
            (fi, ti)
        }

        /// Undirected edge: both arcs start at `cap` and serve as each
        /// other's reverse. The signed net flow from `u` to `v` is
        /// `(cap(v->u) - cap(u->v)) / 2`.
        pub fn add_undirected(&mut self, u: usize, v: usize, cap: S) -> (usize, usize) {
            let ui = self.graph[u].len();
            let vi = self.graph[v].len();
            self.graph[u].push(Arc {
                to: v as u32,
                rev: vi as u32,
                cap,
            });
            self.graph[v].push(Arc {
                to: u as u32,
                rev: ui as u32,
                cap,
            });
            (ui, vi)
        }

        fn bfs(&mut self, s: usize, t: usize) -> bool {
            self.level.fill(-1);
            let mut queue = VecDeque::new();
            self.level[s] = 0;
            queue.push_back(s);
            while let Some(v) = queue.pop_front() {
                for arc in &self.graph[v] {
                    if arc.cap > S::zero() && self.level[arc.to as usize] < 0 {
                        self.level[arc.to as usize] = self.level[v] + 1;
                        queue.push_back(arc.to as usize);
                    }
                }
            }
            self.level[t] >= 0
        }

        /// One augmenting path along the level graph, iteratively.
        fn augment(&mut self, s: usize, t: usize) -> S {
            let mut path: Vec<(usize, usize)> = Vec::new();
            let mut v = s;
            loop {
                if v == t {
                    let mut f = S::infinity();
                    for &(node, ai) in &path {
                        f = f.min_val(self.graph[node][ai].cap);
                    }
                    for &(node, ai) in &path {
                        let arc = self.graph[node][ai];
                        self.graph[node][ai].cap -= f;
                        self.graph[arc.to as usize][arc.rev as usize].cap += f;
                    }
                    return f;
                }
                let mut advanced = false;
                while self.iter[v] < self.graph[v].len() {
                    let ai = self.iter[v];
                    let arc = self.graph[v][ai];
                    if arc.cap > S::zero() && self.level[arc.to as usize] == self.level[v] + 1 {
                        path.push((v, ai));
                        v = arc.to as usize;
                        advanced = true;
                        break;
                    }
                    self.iter[v] += 1;
                }
                if !advanced {
                    if v == s {
                        return S::zero();
                    }
                    self.level[v] = -1;
                    let (pn, pai) = path.pop().expect("non-empty path");
                    debug_assert_eq!(self.graph[pn][pai].to as usize, v);
                    self.iter[pn] += 1;
                    v = pn;
                }
            }
        }

        pub fn max_flow(&mut self, s: usize, t: usize) -> S {
            let mut total = S::zero();
            loop {
                if !self.bfs(s, t) {
                    return total;
                }
                self.iter.fill(0);
                loop {
                    let f = self.augment(s, t);
                    if !(f > S::zero()) {
                        break;
                    }
                    total += f;
                }
            }
        }

        /// Vertices reachable from `s` in the residual network. For any
        /// maximum flow this set is the same, so the induced cut is
        /// canonical.
        pub fn residual_reachable(&self, s: usize) -> Vec<bool> {
            let mut seen = vec![false; self.graph.len()];
            let mut queue = VecDeque::new();
            seen[s] = true;
            queue.push_back(s);
            while let Some(v) = queue.pop_front() {
                for arc in &self.graph[v] {
                    if arc.cap > S::zero() && !seen[arc.to as usize] {
                        seen[arc.to as usize] = true;
                        queue.push_back(arc.to as usize);
                    }
                }
            }
            seen
        }
    }
}

/// Outcome of a max-flow solve: the exact value, the per-edge net flows,
/// and the residual source side that determines the canonical cut.
#[derive(Clone, Debug)]
pub struct FlowResult {
    pub value: Cap,
    /// Id space of all vertex/edge indices below.
    pub space: Region,
    /// Traversal restriction (the box), if any.
    pub bounds: Option<Region>,
    pub sources: Vec<VertexId>,
    pub sinks: Vec<VertexId>,
    /// Signed net flow per edge, positive along the low-to-high axis
    /// orientation. Edges with zero net flow are omitted.
    pub net_flow: Vec<(EdgeId, Cap)>,
    /// Residual reachability from the source set, per space vertex.
    pub source_side: Vec<bool>,
    pub maximal: bool,
}

struct ProblemNodes {
    node_of: Vec<u32>,
    count: usize,
}

const UNMAPPED: u32 = u32::MAX;

fn map_nodes(space: &Region, bounds: Option<&Region>) -> ProblemNodes {
    let mut node_of = vec![UNMAPPED; space.vertex_count() as usize];
    let mut count = 0usize;
    match bounds {
        None => {
            for v in space.vertices() {
                node_of[v.index()] = count as u32;
                count += 1;
            }
        }
        Some(b) => {
            let mut coords = vec![0; space.dim()];
            for v in space.vertices() {
                space.coords_into(v, &mut coords);
                if b.contains_point(&coords) {
                    node_of[v.index()] = count as u32;
                    count += 1;
                }
            }
        }
    }
    ProblemNodes { node_of, count }
}

/// Multi-source multi-sink max flow over a (possibly restricted) view of
/// the field's window, via a virtual source and sink.
pub fn solve(
    field: &CapacityField,
    bounds: Option<&Region>,
    sources: &[VertexId],
    sinks: &[VertexId],
) -> Result<FlowResult> {
    let space = field.region();
    if sources.is_empty() || sinks.is_empty() {
        return Err(Error::InvalidSpec("empty source or sink set".into()));
    }
    let nodes = map_nodes(space, bounds);
    let s_node = nodes.count;
    let t_node = nodes.count + 1;
    let mut solver = dinic::Dinic::<Cap>::new(nodes.count + 2);

    let view = match bounds {
        Some(b) => GraphView::restricted(space, b),
        None => GraphView::whole(space),
    };
    // lattice edges in canonical order; zero-capacity edges can never
    // carry flow and are left out of the arena
    let problem_edges = view.edges();
    let mut arc_of_edge: Vec<(EdgeId, usize, usize)> = Vec::new();
    for &e in &problem_edges {
        let c = field.cap(e);
        if c <= 0 {
            continue;
        }
        let (u, v) = space.edge_endpoints(e);
        let un = nodes.node_of[u.index()];
        let vn = nodes.node_of[v.index()];
        debug_assert!(un != UNMAPPED && vn != UNMAPPED);
        let (ui, _) = solver.add_undirected(un as usize, vn as usize, c);
        arc_of_edge.push((e, un as usize, ui));
    }
    for &sv in sources {
        let n = nodes.node_of[sv.index()];
        if n == UNMAPPED {
            return Err(Error::OutOfRange("source vertex outside bounds".into()));
        }
        solver.add_directed(s_node, n as usize, Cap::infinity());
    }
    for &tv in sinks {
        let n = nodes.node_of[tv.index()];
        if n == UNMAPPED {
            return Err(Error::OutOfRange("sink vertex outside bounds".into()));
        }
        solver.add_directed(n as usize, t_node, Cap::infinity());
    }

    let value = solver.max_flow(s_node, t_node);

    let mut net_flow = Vec::new();
    for &(e, un, ui) in &arc_of_edge {
        let arc = solver.graph[un][ui];
        let back = solver.graph[arc.to as usize][arc.rev as usize];
        let net = (back.cap - arc.cap).half();
        if net != 0 {
            net_flow.push((e, net));
        }
    }

    let reach = solver.residual_reachable(s_node);
    let mut source_side = vec![false; space.vertex_count() as usize];
    for (vi, &node) in nodes.node_of.iter().enumerate() {
        if node != UNMAPPED && reach[node as usize] {
            source_side[vi] = true;
        }
    }

    Ok(FlowResult {
        value,
        space: space.clone(),
        bounds: bounds.cloned(),
        sources: sources.to_vec(),
        sinks: sinks.to_vec(),
        net_flow,
        source_side,
        maximal: true,
    })
}

/// Maximum flow from the bottom face `F_0` to the top face `F_m` inside
/// `B(k, m)`.
pub fn max_flow_box(box_spec: &BoxSpec, field: &CapacityField) -> Result<FlowResult> {
    if box_spec.height() == 0 {
        return Err(Error::DegenerateBox(
            "m = 0: source and sink faces coincide".into(),
        ));
    }
    let space = field.region();
    let bounds = box_spec.region();
    if !space.contains_region(&bounds) {
        return Err(Error::OutOfRange("box does not fit in the window".into()));
    }
    let sources = box_spec.bottom_face(space)?;
    let sinks = box_spec.top_face(space)?;
    solve(field, Some(&bounds), &sources, &sinks)
}

/// Memory guard for whole-window solves.
const MAX_WINDOW_EDGES: u64 = 20_000_000;

/// Maximum flow from the whole box to the window rim: the finite-window
/// surrogate for cutting `B(k, m)` from infinity. Values are
/// non-increasing in the margin.
pub fn max_flow_to_boundary(box_spec: &BoxSpec, field: &CapacityField) -> Result<FlowResult> {
    if field.window().margin() < 1 {
        return Err(Error::Precondition(
            "boundary flow needs margin >= 1".into(),
        ));
    }
    let space = field.region();
    if space.edge_count() > MAX_WINDOW_EDGES {
        return Err(Error::Resource(format!(
            "window has {} edges, guard is {MAX_WINDOW_EDGES}",
            space.edge_count()
        )));
    }
    let box_region = box_spec.region();
    let mut sources = Vec::new();
    let mut coords = vec![0; space.dim()];
    for v in space.vertices() {
        space.coords_into(v, &mut coords);
        if box_region.contains_point(&coords) {
            sources.push(v);
        }
    }
    let sinks = space.rim_vertices();
    solve(field, None, &sources, &sinks)
}

/// Validation report for a flow: admissibility, conservation at interior
/// vertices, and value accounting, all in exact arithmetic.
#[derive(Clone, Debug)]
pub struct FlowCheck {
    pub ok: bool,
    pub violations: Vec<String>,
}

pub fn verify_flow(result: &FlowResult, field: &CapacityField) -> FlowCheck {
    let mut violations = Vec::new();
    let space = &result.space;
    let mut divergence = vec![0 as Cap; space.vertex_count() as usize];

    for &(e, net) in &result.net_flow {
        let cap = field.cap(e);
        if net.abs() > cap {
            violations.push(format!(
                "edge {}: |flow| {} exceeds capacity {cap}",
                e.0,
                net.abs()
            ));
        }
        let (u, v) = space.edge_endpoints(e);
        divergence[u.index()] += net;
        divergence[v.index()] -= net;
    }

    let mut is_terminal = vec![false; space.vertex_count() as usize];
    for &v in result.sources.iter().chain(&result.sinks) {
        is_terminal[v.index()] = true;
    }
    for v in space.vertices() {
        if !is_terminal[v.index()] && divergence[v.index()] != 0 {
            violations.push(format!(
                "vertex {}: net divergence {} off the terminals",
                v.0,
                divergence[v.index()]
            ));
        }
    }

    let out_of_sources: Cap = result.sources.iter().map(|v| divergence[v.index()]).sum();
    let into_sinks: Cap = result.sinks.iter().map(|v| -divergence[v.index()]).sum();
    if out_of_sources != result.value {
        violations.push(format!(
            "net outflow of sources {} != value {}",
            out_of_sources, result.value
        ));
    }
    if into_sinks != result.value {
        violations.push(format!(
            "net inflow of sinks {} != value {}",
            into_sinks, result.value
        ));
    }

    FlowCheck {
        ok: violations.is_empty(),
        violations,
    }
}

/// The canonical minimum cut: all edges leaving the residual source side.
/// Exact strong duality (`tau(cut) = value`) is asserted here.
pub fn min_cut_from_flow(result: &FlowResult, field: &CapacityField) -> Result<Cutset> {
    if !result.maximal {
        return Err(Error::Inconsistent(
            "min cut requested from a non-maximal flow".into(),
        ));
    }
    let space = &result.space;
    let view = match &result.bounds {
        Some(b) => GraphView::restricted(space, b),
        None => GraphView::whole(space),
    };
    let mut edges = Vec::new();
    let mut passage: Cap = 0;
    for e in view.edges() {
        let (u, v) = space.edge_endpoints(e);
        if result.source_side[u.index()] != result.source_side[v.index()] {
            edges.push(e);
            passage += field.cap(e);
        }
    }
    if passage != result.value {
        return Err(Error::Inconsistent(format!(
            "cut passage time {passage} != flow value {} (flow not maximal?)",
            result.value
        )));
    }
    edges.sort_unstable();
    Ok(Cutset::new(
        edges,
        space.clone(),
        result.bounds.clone(),
        result.sources.clone(),
        result.sinks.clone(),
        passage,
    ))
}

/// Shortest path between two nodes of a small weighted graph; exact
/// scalar arithmetic, non-negative weights.
pub fn shortest_path<S>(adj: &[Vec<(u32, S)>], s: usize, t: usize) -> Option<S>
where
    S: FlowScalar + Ord,
{
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let mut dist: Vec<Option<S>> = vec![None; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[s] = Some(S::zero());
    heap.push(Reverse((S::zero(), s as u32)));
    while let Some(Reverse((d, v))) = heap.pop() {
        let v = v as usize;
        if dist[v] != Some(d) {
            continue;
        }
        if v == t {
            return Some(d);
        }
        for &(u, w) in &adj[v] {
            let nd = d + w;
            if dist[u as usize].map_or(true, |old| nd < old) {
                dist[u as usize] = Some(nd);
                heap.push(Reverse((nd, u)));
            }
        }
    }
    dist[t]
}

/// Independent d = 2 oracle: the minimum bottom-top cut of `B(k, m)`
/// equals the weight of the lightest left-right path in the dual lattice
/// (each dual step crosses one primal edge and costs its capacity).
pub fn d2_dual_min_cut_value(box_spec: &BoxSpec, field: &CapacityField) -> Result<Cap> {
    if box_spec.dim() != 2 {
        return Err(Error::InvalidSpec("dual oracle is d = 2 only".into()));
    }
    if box_spec.height() == 0 {
        return Err(Error::DegenerateBox("m = 0".into()));
    }
    let k = box_spec.sides()[0] as i64;
    let m = box_spec.height() as i64;
    let space = field.region();

    // dual nodes: cells (cx, cy) with cx in 0..k, cy in 0..m, plus
    // LEFT (index n) and RIGHT (index n+1)
    let cells = (k * m) as usize;
    let left = cells;
    let right = cells + 1;
    let cell = |cx: i64, cy: i64| -> usize {
        if cx < 0 {
            left
        } else if cx >= k {
            right
        } else {
            (cx * m + cy) as usize
        }
    };
    let mut adj: Vec<Vec<(u32, Cap)>> = vec![Vec::new(); cells + 2];
    let mut link = |a: usize, b: usize, w: Cap| {
        adj[a].push((b as u32, w));
        adj[b].push((a as u32, w));
    };
    // vertical primal edges (axis 1) at (x, y), y in 0..m: crossing moves
    // between cells (x-1, y) and (x, y)
    for x in 0..=k {
        for y in 0..m {
            let e = space
                .edge_id(1, &[x, y])
                .ok_or_else(|| Error::OutOfRange("box edge outside window".into()))?;
            link(cell(x - 1, y), cell(x, y), field.cap(e));
        }
    }
    // horizontal primal edges (axis 0) at (x, y), interior heights only:
    // crossing moves between cells (x, y-1) and (x, y)
    for x in 0..k {
        for y in 1..m {
            let e = space
                .edge_id(0, &[x, y])
                .ok_or_else(|| Error::OutOfRange("box edge outside window".into()))?;
            link(cell(x, y - 1), cell(x, y), field.cap(e));
        }
    }
    shortest_path(&adj, left, right)
        .ok_or_else(|| Error::Inconsistent("dual lattice disconnected".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::DistributionSpec;
    use crate::lattice::AmbientWindow;

    fn dirac_field(k: u64, m: u64, margin: u64, value: f64) -> CapacityField {
        CapacityField::sample(
            AmbientWindow::new(BoxSpec::new(2, vec![k], m).unwrap(), margin),
            DistributionSpec::Dirac { value },
            1,
            0,
        )
        .unwrap()
    }

    #[test]
    fn all_ones_column_count() {
        let field = dirac_field(2, 2, 0, 1.0);
        let b = BoxSpec::new(2, vec![2], 2).unwrap();
        let r = max_flow_box(&b, &field).unwrap();
        assert_eq!(r.value, 3 << 20);
        assert!(verify_flow(&r, &field).ok);
    }

    #[test]
    fn closed_layer_zero_flow() {
        let mut field = dirac_field(4, 4, 0, 1.0);
        let b = BoxSpec::new(2, vec![4], 4).unwrap();
        let space = field.region().clone();
        // close all vertical edges between heights 2 and 3
        for x in 0..=4i64 {
            let e = space.edge_id(1, &[x, 2]).unwrap();
            field.set_cap(e, 0);
        }
        let r = max_flow_box(&b, &field).unwrap();
        assert_eq!(r.value, 0);
    }

    #[test]
    fn degenerate_box_rejected() {
        let field = dirac_field(2, 0, 1, 1.0);
        let b = BoxSpec::new(2, vec![2], 0).unwrap();
        assert!(matches!(
            max_flow_box(&b, &field),
            Err(Error::DegenerateBox(_))
        ));
    }

    #[test]
    fn origin_boundary_flow_is_four_edges() {
        let field = dirac_field(0, 0, 1, 1.0);
        let b = BoxSpec::new(2, vec![0], 0).unwrap();
        let r = max_flow_to_boundary(&b, &field).unwrap();
        assert_eq!(r.value, 4 << 20);
    }

    #[test]
    fn all_closed_boundary_flow_zero() {
        let field = dirac_field(2, 2, 3, 0.0);
        let b = BoxSpec::new(2, vec![2], 2).unwrap();
        let r = max_flow_to_boundary(&b, &field).unwrap();
        assert_eq!(r.value, 0);
    }

    #[test]
    fn tampered_flow_fails_verification() {
        let field = dirac_field(2, 2, 0, 1.0);
        let b = BoxSpec::new(2, vec![2], 2).unwrap();
        let mut r = max_flow_box(&b, &field).unwrap();
        assert!(verify_flow(&r, &field).ok);
        // nudge one recorded flow by a quantum
        r.net_flow[0].1 += 1;
        let check = verify_flow(&r, &field);
        assert!(!check.ok);
        assert!(!check.violations.is_empty());
    }

    #[test]
    fn zero_flow_verifies() {
        let field = dirac_field(2, 2, 0, 1.0);
        let b = BoxSpec::new(2, vec![2], 2).unwrap();
        let mut r = max_flow_box(&b, &field).unwrap();
        r.net_flow.clear();
        r.value = 0;
        assert!(verify_flow(&r, &field).ok);
    }

    #[test]
    fn min_cut_flat_on_ones() {
        let field = dirac_field(2, 2, 0, 1.0);
        let b = BoxSpec::new(2, vec![2], 2).unwrap();
        let r = max_flow_box(&b, &field).unwrap();
        let cut = min_cut_from_flow(&r, &field).unwrap();
        assert_eq!(cut.edges().len(), 3);
        assert_eq!(cut.passage_time(), 3 << 20);
    }

    #[test]
    fn duality_on_random_fields() {
        for rep in 0..50 {
            let w = AmbientWindow::new(BoxSpec::new(2, vec![6], 6).unwrap(), 0);
            let field = CapacityField::sample(
                w,
                DistributionSpec::Bernoulli {
                    p_open: 0.6,
                    value: 1.0,
                },
                2024,
                rep,
            )
            .unwrap();
            let b = BoxSpec::new(2, vec![6], 6).unwrap();
            let r = max_flow_box(&b, &field).unwrap();
            assert!(verify_flow(&r, &field).ok, "rep {rep}");
            let cut = min_cut_from_flow(&r, &field).unwrap();
            assert_eq!(cut.passage_time(), r.value, "rep {rep}");
            let dual = d2_dual_min_cut_value(&b, &field).unwrap();
            assert_eq!(dual, r.value, "rep {rep}");
        }
    }

    #[test]
    fn monotone_in_single_capacity() {
        let w = AmbientWindow::new(BoxSpec::new(2, vec![4], 4).unwrap(), 0);
        let field = CapacityField::sample(
            w,
            DistributionSpec::Uniform { lo: 0.0, hi: 1.0 },
            5,
            0,
        )
        .unwrap();
        let b = BoxSpec::new(2, vec![4], 4).unwrap();
        let base = max_flow_box(&b, &field).unwrap().value;
        let space = field.region().clone();
        for x in 0..3i64 {
            let mut bumped = field.clone();
            let e = space.edge_id(1, &[x, 1]).unwrap();
            bumped.set_cap(e, bumped.cap(e) + (1 << 20));
            let v = max_flow_box(&b, &bumped).unwrap().value;
            assert!(v >= base);
        }
    }

    #[test]
    fn boundary_flow_monotone_in_margin() {
        for rep in 0..100 {
            let b = BoxSpec::new(2, vec![2], 2).unwrap();
            let dist = DistributionSpec::Bernoulli {
                p_open: 0.5,
                value: 1.0,
            };
            let f2 = CapacityField::sample(
                AmbientWindow::new(b.clone(), 2),
                dist.clone(),
                77,
                rep,
            )
            .unwrap();
            let f4 = CapacityField::sample(AmbientWindow::new(b.clone(), 4), dist, 77, rep).unwrap();
            let v2 = max_flow_to_boundary(&b, &f2).unwrap().value;
            let v4 = max_flow_to_boundary(&b, &f4).unwrap().value;
            assert!(v2 >= v4, "rep {rep}: {v2} < {v4}");
        }
    }

    #[test]
    fn generic_solver_accepts_floats() {
        let mut g = dinic::Dinic::<f64>::new(4);
        g.add_directed(0, 1, 1.5);
        g.add_directed(0, 2, 2.0);
        g.add_directed(1, 3, 2.0);
        g.add_directed(2, 3, 1.0);
        let v = g.max_flow(0, 3);
        assert!((v - 2.5).abs() < 1e-12);
    }
}
