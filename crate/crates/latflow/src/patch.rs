//! Hyperplane traces of cutsets, tunnel exits, mirror reflection of
//! fields, matched-exit patching of two cutsets, and the nested-box
//! inequalities.

use serde::{Deserialize, Serialize};

use crate::capacity::CapacityField;
use crate::cutset::{edge_mask, is_cutset, make_self_avoiding, reach_avoiding_edges, Cutset};
use crate::flow::{max_flow_box, min_cut_from_flow};
use crate::lattice::{for_each_point, BoxSpec, Coord, EdgeId, Region, VertexId};
use crate::{Cap, Error, Result};

/// Clusters of a hyperplane after removing the cutset's trace edges,
/// labeled by which face they still reach without crossing the cutset.
#[derive(Clone, Debug)]
pub struct TunnelExits {
    pub plane_axis: usize,
    pub plane_coord: Coord,
    /// Cutset vertices on the plane.
    pub trace_vertices: Vec<VertexId>,
    /// Cutset edges lying inside the plane.
    pub trace_edges: Vec<EdgeId>,
    /// All plane edges inside the bounds (kept for boundary checks).
    pub plane_edges: Vec<EdgeId>,
    /// Exits of upper tunnels: clusters reaching the sink face.
    pub upper: Vec<Vec<VertexId>>,
    /// Exits of lower tunnels: clusters reaching the source face.
    pub lower: Vec<Vec<VertexId>>,
    /// Clusters reaching neither face.
    pub neither: Vec<Vec<VertexId>>,
}

/// Compute the exits of the upper and lower tunnels of `cutset` on the
/// hyperplane `x_axis = coord`.
pub fn tunnel_exits(cutset: &Cutset, axis: usize, coord: Coord) -> Result<TunnelExits> {
    let space = cutset.space().clone();
    let bounds = cutset
        .bounds()
        .cloned()
        .unwrap_or_else(|| space.clone());
    if axis >= space.dim() {
        return Err(Error::OutOfRange(format!("axis {axis} out of range")));
    }
    if coord < bounds.lo()[axis] || coord > bounds.hi()[axis] {
        return Err(Error::OutOfRange(format!(
            "plane {coord} outside the box range [{}, {}]",
            bounds.lo()[axis],
            bounds.hi()[axis]
        )));
    }

    // plane vertices and induced edges, restricted to the bounds
    let mut plane_lo = bounds.lo().to_vec();
    let mut plane_hi = bounds.hi().to_vec();
    plane_lo[axis] = coord;
    plane_hi[axis] = coord;
    let mut plane_verts: Vec<VertexId> = Vec::new();
    let mut plane_edges: Vec<EdgeId> = Vec::new();
    for_each_point(&plane_lo, &plane_hi, |p| {
        plane_verts.push(space.vertex_id(p).expect("plane fits the space"));
        for a in 0..space.dim() {
            if a != axis && p[a] < plane_hi[a] {
                plane_edges.push(space.edge_id(a, p).unwrap());
            }
        }
    });

    let nv = space.vertex_count() as usize;
    let mut in_cut_vert = vec![false; nv];
    for v in cutset.vertex_ids() {
        in_cut_vert[v.index()] = true;
    }
    let trace_vertices: Vec<VertexId> = plane_verts
        .iter()
        .copied()
        .filter(|v| in_cut_vert[v.index()])
        .collect();
    let trace_edges: Vec<EdgeId> = plane_edges
        .iter()
        .copied()
        .filter(|&e| cutset.contains_edge(e))
        .collect();

    // clusters of the plane with the trace edges removed
    let mut adj: std::collections::HashMap<VertexId, Vec<VertexId>> = Default::default();
    for &e in &plane_edges {
        if cutset.contains_edge(e) {
            continue;
        }
        let (u, v) = space.edge_endpoints(e);
        adj.entry(u).or_default().push(v);
        adj.entry(v).or_default().push(u);
    }
    let mut cluster_of: std::collections::HashMap<VertexId, u32> = Default::default();
    let mut clusters: Vec<Vec<VertexId>> = Vec::new();
    for &v in &plane_verts {
        if cluster_of.contains_key(&v) {
            continue;
        }
        let id = clusters.len() as u32;
        let mut stack = vec![v];
        cluster_of.insert(v, id);
        let mut members = vec![v];
        while let Some(x) = stack.pop() {
            if let Some(ns) = adj.get(&x) {
                for &w in ns {
                    if !cluster_of.contains_key(&w) {
                        cluster_of.insert(w, id);
                        members.push(w);
                        stack.push(w);
                    }
                }
            }
        }
        members.sort_unstable();
        clusters.push(members);
    }

    // reachability of the two faces avoiding all cutset edges
    let view = cutset.view();
    let blocked = edge_mask(&space, cutset.edges());
    let up = reach_avoiding_edges(&view, cutset.sinks(), &blocked);
    let low = reach_avoiding_edges(&view, cutset.sources(), &blocked);

    let mut upper = Vec::new();
    let mut lower = Vec::new();
    let mut neither = Vec::new();
    for members in clusters {
        let any_up = members.iter().any(|v| up[v.index()]);
        let any_low = members.iter().any(|v| low[v.index()]);
        // reachability is constant on a cluster: its edges avoid the cutset
        debug_assert!(members.iter().all(|v| up[v.index()] == any_up));
        debug_assert!(members.iter().all(|v| low[v.index()] == any_low));
        if any_up {
            upper.push(members.clone());
        }
        if any_low {
            lower.push(members.clone());
        }
        if !any_up && !any_low {
            neither.push(members);
        }
    }

    Ok(TunnelExits {
        plane_axis: axis,
        plane_coord: coord,
        trace_vertices,
        trace_edges,
        plane_edges,
        upper,
        lower,
        neither,
    })
}

/// No vertex may belong to both an upper and a lower exit; a violation
/// would exhibit a source-to-sink path avoiding the cutset.
pub fn verify_exit_disjoint(exits: &TunnelExits) -> bool {
    let mut in_upper: std::collections::HashSet<VertexId> = Default::default();
    for cluster in &exits.upper {
        in_upper.extend(cluster.iter().copied());
    }
    exits
        .lower
        .iter()
        .all(|cluster| cluster.iter().all(|v| !in_upper.contains(v)))
}

/// Each exit's boundary edges inside the plane belong to the cutset.
pub fn verify_exit_boundary(exits: &TunnelExits, cutset: &Cutset) -> bool {
    let space = cutset.space();
    let mut member: std::collections::HashMap<VertexId, u32> = Default::default();
    for (i, cluster) in exits.upper.iter().chain(exits.lower.iter()).enumerate() {
        for &v in cluster {
            member.insert(v, i as u32);
        }
    }
    for &e in &exits.plane_edges {
        let (u, v) = space.edge_endpoints(e);
        let cu = member.get(&u);
        let cv = member.get(&v);
        let crosses = match (cu, cv) {
            (Some(a), Some(b)) => a != b,
            (Some(_), None) | (None, Some(_)) => true,
            (None, None) => false,
        };
        if crosses && !cutset.contains_edge(e) {
            return false;
        }
    }
    true
}

/// Exits are maximal: any plane vertex reachable from an exit without
/// crossing the cutset already belongs to an exit of the same kind.
pub fn verify_exit_maximal(exits: &TunnelExits, cutset: &Cutset) -> bool {
    let space = cutset.space();
    let view = cutset.view();
    let blocked = edge_mask(space, cutset.edges());
    let mut plane_membership: std::collections::HashSet<VertexId> = Default::default();
    let mut coords = vec![0; space.dim()];
    for kind in [&exits.upper, &exits.lower] {
        plane_membership.clear();
        let mut starts = Vec::new();
        for cluster in kind {
            for &v in cluster {
                plane_membership.insert(v);
                starts.push(v);
            }
        }
        if starts.is_empty() {
            continue;
        }
        let seen = reach_avoiding_edges(&view, &starts, &blocked);
        for v in space.vertices() {
            if !seen[v.index()] {
                continue;
            }
            space.coords_into(v, &mut coords);
            if coords[exits.plane_axis] == exits.plane_coord
                && view.vertex_in_bounds(&coords)
                && !plane_membership.contains(&v)
            {
                return false;
            }
        }
    }
    true
}

/// Reflect-then-shift map along one axis: `x -> flip_sum - x + shift`.
/// An involution for any parameters; `flip_sum = 2c + 1` reflects about
/// the half-integer plane `c + 1/2`.
#[derive(Copy, Clone, Debug, Serialize, Deserialize)]
pub struct ReflectionMap {
    pub axis: usize,
    pub flip_sum: i64,
    pub shift: i64,
}

impl ReflectionMap {
    /// Reflection about the seam between coordinates `c` and `c + 1`.
    pub fn about_seam(axis: usize, c: i64) -> Self {
        ReflectionMap {
            axis,
            flip_sum: 2 * c + 1,
            shift: 0,
        }
    }

    /// Reflect about `k1 - l + 1/2`, then translate `k1 - 2l + 1` back:
    /// maps the companion box onto itself.
    pub fn reflect_and_shift(axis: usize, k1: i64, l: i64) -> Self {
        ReflectionMap {
            axis,
            flip_sum: 2 * k1 - 2 * l + 1,
            shift: k1 - 2 * l + 1,
        }
    }

    pub fn map_coord(&self, x: i64) -> i64 {
        self.flip_sum - x + self.shift
    }

    pub fn map_point(&self, p: &[Coord]) -> Vec<Coord> {
        let mut out = p.to_vec();
        out[self.axis] = self.map_coord(p[self.axis]);
        out
    }

    /// Image of an edge, as (axis, lower endpoint).
    pub fn map_edge(&self, axis: usize, low: &[Coord]) -> (usize, Vec<Coord>) {
        let mut out = low.to_vec();
        if axis == self.axis {
            // the high endpoint maps to the new low endpoint
            out[self.axis] = self.map_coord(low[self.axis] + 1);
        } else {
            out[self.axis] = self.map_coord(low[self.axis]);
        }
        (axis, out)
    }
}

/// A field whose capacities on `target` are pulled back through the
/// reflection; everything else keeps the source values. Errors if a
/// needed preimage edge falls outside the window.
pub fn mirror_field(
    field: &CapacityField,
    map: &ReflectionMap,
    target: &Region,
) -> Result<CapacityField> {
    let space = field.region();
    let mut values = field.values().to_vec();
    for e in space.edges() {
        let (u, v) = space.edge_endpoints(e);
        let pu = space.coords_of(u);
        let pv = space.coords_of(v);
        if !(target.contains_point(&pu) && target.contains_point(&pv)) {
            continue;
        }
        let (axis, low) = space.edge_info(e);
        let (maxis, mlow) = map.map_edge(axis, &low);
        let src = space.edge_id(maxis, &mlow).ok_or_else(|| {
            Error::OutOfRange(format!(
                "reflected edge {mlow:?} axis {maxis} outside the window"
            ))
        })?;
        values[e.index()] = field.cap(src);
    }
    field.with_values(values)
}

/// Patch two cutsets across the seam when their exits match under a
/// one-unit shift; the union separates the joined box.
pub fn patch_cutsets(
    w: &Cutset,
    w_prime: &Cutset,
    exits: &TunnelExits,
    exits_prime: &TunnelExits,
    joined_box: &BoxSpec,
    field: &CapacityField,
) -> Result<Cutset> {
    if exits.plane_axis != exits_prime.plane_axis {
        return Err(Error::Mismatch("exit planes on different axes".into()));
    }
    if exits_prime.plane_coord != exits.plane_coord + 1 {
        return Err(Error::Mismatch(format!(
            "planes {} and {} are not seam-adjacent",
            exits.plane_coord, exits_prime.plane_coord
        )));
    }
    let space = field.region().clone();
    if w.space() != &space || w_prime.space() != &space {
        return Err(Error::InvalidSpec(
            "both cutsets must live in the field's window".into(),
        ));
    }
    match_exit_lists(
        &space,
        &exits.upper,
        &exits_prime.upper,
        exits.plane_axis,
        "upper",
    )?;
    match_exit_lists(
        &space,
        &exits.lower,
        &exits_prime.lower,
        exits.plane_axis,
        "lower",
    )?;

    let mut edges = w.edges().to_vec();
    for &e in w_prime.edges() {
        if w.contains_edge(e) {
            return Err(Error::InvalidSpec(
                "cutsets overlap; they must live in disjoint boxes".into(),
            ));
        }
        edges.push(e);
    }
    let passage: Cap = w.passage_time() + w_prime.passage_time();

    let joined_region = joined_box.region();
    if !space.contains_region(&joined_region) {
        return Err(Error::OutOfRange("joined box exceeds the window".into()));
    }
    let sources = joined_box.bottom_face(&space)?;
    let sinks = joined_box.top_face(&space)?;
    let joined = Cutset::new(
        edges,
        space.clone(),
        Some(joined_region),
        sources,
        sinks,
        passage,
    );
    let view = joined.view();
    if !is_cutset(&view, joined.edges(), joined.sources(), joined.sinks()) {
        return Err(Error::Contract(
            "matched exits but the union fails the path check".into(),
        ));
    }
    Ok(joined)
}

fn match_exit_lists(
    space: &Region,
    left: &[Vec<VertexId>],
    right: &[Vec<VertexId>],
    axis: usize,
    kind: &str,
) -> Result<()> {
    if left.len() != right.len() {
        return Err(Error::Mismatch(format!(
            "{kind}: {} exits vs {}",
            left.len(),
            right.len()
        )));
    }
    let shift = |cluster: &[VertexId]| -> Vec<Vec<Coord>> {
        let mut pts: Vec<Vec<Coord>> = cluster
            .iter()
            .map(|&v| {
                let mut p = space.coords_of(v);
                p[axis] += 1;
                p
            })
            .collect();
        pts.sort();
        pts
    };
    let plain = |cluster: &[VertexId]| -> Vec<Vec<Coord>> {
        let mut pts: Vec<Vec<Coord>> = cluster.iter().map(|&v| space.coords_of(v)).collect();
        pts.sort();
        pts
    };
    let mut used = vec![false; right.len()];
    for (i, l) in left.iter().enumerate() {
        let target = shift(l);
        let found = right
            .iter()
            .enumerate()
            .find(|(j, r)| !used[*j] && plain(r) == target);
        match found {
            Some((j, _)) => used[j] = true,
            None => {
                return Err(Error::Mismatch(format!(
                    "{kind} exit {i} has no shift-matched partner"
                )))
            }
        }
    }
    Ok(())
}

/// Canonical minimal cutset of a box: solve, take the residual cut,
/// reduce deterministically.
pub fn canonical_min_cut(box_spec: &BoxSpec, field: &CapacityField) -> Result<Cutset> {
    let flow = max_flow_box(box_spec, field)?;
    let cut = min_cut_from_flow(&flow, field)?;
    make_self_avoiding(&cut, field)
}

/// Per-realization nested-box report: the outer cut restricted to the
/// inner box still separates; passage times are monotone; and the outer
/// time is bounded by the inner plus the shell mass.
#[derive(Clone, Debug)]
pub struct NestedBoxReport {
    pub restriction_is_cutset: bool,
    pub monotone: bool,
    pub shell_bound: bool,
    pub tau_inner: Cap,
    pub tau_outer: Cap,
    pub shell_mass: Cap,
}

impl NestedBoxReport {
    pub fn all_hold(&self) -> bool {
        self.restriction_is_cutset && self.monotone && self.shell_bound
    }
}

pub fn check_nested_boxes(
    field: &CapacityField,
    outer: &BoxSpec,
    inner: &BoxSpec,
) -> Result<NestedBoxReport> {
    if inner.dim() != outer.dim() || inner.height() != outer.height() {
        return Err(Error::InvalidSpec(
            "nested boxes need equal dimension and height".into(),
        ));
    }
    if inner
        .sides()
        .iter()
        .zip(outer.sides())
        .any(|(a, b)| a > b)
    {
        return Err(Error::InvalidSpec("inner box exceeds outer box".into()));
    }
    let space = field.region().clone();
    let w_outer = canonical_min_cut(outer, field)?;
    let w_inner = canonical_min_cut(inner, field)?;

    let inner_region = inner.region();
    let restricted: Vec<EdgeId> = w_outer
        .edges()
        .iter()
        .copied()
        .filter(|&e| {
            let (u, v) = space.edge_endpoints(e);
            inner_region.contains_point(&space.coords_of(u))
                && inner_region.contains_point(&space.coords_of(v))
        })
        .collect();
    let view = crate::lattice::GraphView::restricted(&space, &inner_region);
    let restriction_is_cutset = is_cutset(
        &view,
        &restricted,
        &inner.bottom_face(&space)?,
        &inner.top_face(&space)?,
    );

    let tau_inner = w_inner.passage_time();
    let tau_outer = w_outer.passage_time();
    let monotone = tau_inner <= tau_outer;

    let outer_region = outer.region();
    let mut shell_mass: Cap = 0;
    let outer_view = crate::lattice::GraphView::restricted(&space, &outer_region);
    for e in outer_view.edges() {
        let (u, v) = space.edge_endpoints(e);
        let inside_inner = inner_region.contains_point(&space.coords_of(u))
            && inner_region.contains_point(&space.coords_of(v));
        if !inside_inner {
            shell_mass += field.cap(e);
        }
    }
    let shell_bound = tau_outer <= tau_inner + shell_mass;

    Ok(NestedBoxReport {
        restriction_is_cutset,
        monotone,
        shell_bound,
        tau_inner,
        tau_outer,
        shell_mass,
    })
}
