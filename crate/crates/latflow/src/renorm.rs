//! Cube renormalization at scale `t`: cube-level cluster boundaries,
//! ponds and their live/dead classification, the connected boundary cube
//! set Γ that contains a zero-cutset, and the per-cube blocked/disjoint
//! property detectors.
//!
//! All cube sets are indexed in a cube grid, itself a [`Region`] whose
//! coordinates are cube indices: cube `u` occupies `[t*u_i, t*u_i + t]`
//! in the window.

use crate::capacity::CapacityField;
use crate::cluster::{open_cluster, OpenCluster};
use crate::cutset::{reach_avoiding_edges, reach_avoiding_vertices};
use crate::flow::dinic::Dinic;
use crate::lattice::{for_each_point, BoxSpec, Coord, GraphView, Region, VertexId};
use crate::scalar::FlowScalar;
use crate::{Cap, Error, Result};

/// Classification of a window cube.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum CubeClass {
    /// Meets the cluster but none of its boundary vertices.
    ClusterInterior,
    /// Meets the cluster boundary (the common-cube convention counts
    /// these as boundary even when they also meet the cluster).
    Boundary,
    /// Boundary cube with a cube path to the window rim outside the
    /// boundary set.
    ExteriorBoundary,
    /// Inside cube meeting neither the cluster nor its boundary.
    Pond,
    Other,
}

/// Local property of a cube within its 3t-neighborhood.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum CubeProperty {
    Blocked,
    Disjoint,
    Neither,
}

#[derive(Clone, Debug)]
pub struct Pond {
    /// Cube ids in the cube grid.
    pub cubes: Vec<VertexId>,
    pub live: bool,
    /// Exterior boundary cubes of the pond.
    pub ext_boundary: Vec<VertexId>,
}

/// The full scale-`t` decomposition for one configuration.
#[derive(Clone, Debug)]
pub struct RenormDecomposition {
    pub t: u32,
    pub box_region: Region,
    /// Cube-index space covering the window.
    pub cube_grid: Region,
    /// Per cube id.
    pub class: Vec<CubeClass>,
    /// Exterior boundary cubes of the cluster.
    pub ext_boundary_cubes: Vec<VertexId>,
    pub ponds: Vec<Pond>,
    /// Connector cubes: cubes of the surviving open clusters linking
    /// ponds to the surface.
    pub s_cubes: Vec<VertexId>,
    /// Γ: exterior boundary, connector cubes, and live ponds' exterior
    /// boundaries.
    pub gamma: Vec<VertexId>,
    /// Surface vertices of the exterior boundary (window vertex ids).
    pub surface_vertices: Vec<VertexId>,
    /// The surviving connector clusters and live ponds avoid the cluster,
    /// exactly.
    pub separation_ok: bool,
    /// Γ lies inside the boundary cube set.
    pub gamma_subset_boundary: bool,
    /// Γ is cube-connected.
    pub gamma_connected: bool,
}

impl RenormDecomposition {
    pub fn cube_coords(&self, id: VertexId) -> Vec<Coord> {
        self.cube_grid.coords_of(id)
    }

    /// The window region occupied by cube `id`.
    pub fn cube_region(&self, id: VertexId) -> Region {
        let u = self.cube_grid.coords_of(id);
        cube_window_region(&u, self.t)
    }

    pub fn class_counts(&self) -> [u64; 5] {
        let mut counts = [0u64; 5];
        for c in &self.class {
            let i = match c {
                CubeClass::ClusterInterior => 0,
                CubeClass::Boundary => 1,
                CubeClass::ExteriorBoundary => 2,
                CubeClass::Pond => 3,
                CubeClass::Other => 4,
            };
            counts[i] += 1;
        }
        counts
    }

    pub fn live_pond_count(&self) -> usize {
        self.ponds.iter().filter(|p| p.live).count()
    }

    pub fn to_json_summary(&self) -> serde_json::Value {
        let counts = self.class_counts();
        serde_json::json!({
            "t": self.t,
            "cube_count": self.cube_grid.vertex_count(),
            "cluster_interior": counts[0],
            "boundary": counts[1],
            "exterior_boundary": counts[2],
            "pond_cubes": counts[3],
            "other": counts[4],
            "ponds": self.ponds.len(),
            "live_ponds": self.live_pond_count(),
            "gamma_cubes": self.gamma.len(),
            "separation_ok": self.separation_ok,
            "gamma_subset_boundary": self.gamma_subset_boundary,
            "gamma_connected": self.gamma_connected,
        })
    }
}

fn cube_window_region(u: &[Coord], t: u32) -> Region {
    let t = t as i64;
    let lo: Vec<Coord> = u.iter().map(|&c| c * t).collect();
    let hi: Vec<Coord> = u.iter().map(|&c| c * t + t).collect();
    Region::new(lo, hi).expect("cube region is valid")
}

/// Cube indices whose closed cube contains the point (up to `2^d` when
/// the point sits on cube faces).
fn cubes_containing(p: &[Coord], t: i64, grid: &Region, out: &mut Vec<VertexId>) {
    out.clear();
    let d = p.len();
    let mut choices: Vec<[Coord; 2]> = Vec::with_capacity(d);
    let mut counts: Vec<usize> = Vec::with_capacity(d);
    for &c in p {
        let q = c.div_euclid(t);
        if c.rem_euclid(t) == 0 {
            choices.push([q - 1, q]);
            counts.push(2);
        } else {
            choices.push([q, q]);
            counts.push(1);
        }
    }
    let mut pick = vec![0usize; d];
    let mut cube = vec![0i64; d];
    loop {
        for a in 0..d {
            cube[a] = choices[a][pick[a]];
        }
        if let Some(id) = grid.vertex_id(&cube) {
            out.push(id);
        }
        let mut a = d;
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            if pick[a] + 1 < counts[a] {
                pick[a] += 1;
                break;
            }
            pick[a] = 0;
        }
    }
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, x: u32) -> u32 {
        let mut r = x;
        while self.parent[r as usize] != r {
            r = self.parent[r as usize];
        }
        let mut c = x;
        while self.parent[c as usize] != r {
            let next = self.parent[c as usize];
            self.parent[c as usize] = r;
            c = next;
        }
        r
    }

    fn union(&mut self, a: u32, b: u32) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.parent[ra as usize] = rb;
        }
    }
}

fn mark_cube_vertices(grid: &Region, cube: VertexId, t: u32, space: &Region, mask: &mut [bool]) {
    let u = grid.coords_of(cube);
    let r = cube_window_region(&u, t);
    for_each_point(r.lo(), r.hi(), |p| {
        if let Some(v) = space.vertex_id(p) {
            mask[v.index()] = true;
        }
    });
}

fn check_alignment(field: &CapacityField, box_spec: &BoxSpec, t: u32) -> Result<()> {
    if t == 0 {
        return Err(Error::InvalidScale("t must be >= 1".into()));
    }
    let t = t as u64;
    for &k in box_spec.sides() {
        if k % t != 0 {
            return Err(Error::InvalidScale(format!("side {k} not divisible by t={t}")));
        }
    }
    if box_spec.height() % t != 0 {
        return Err(Error::InvalidScale(format!(
            "height {} not divisible by t={t}",
            box_spec.height()
        )));
    }
    let space = field.region();
    for a in 0..space.dim() {
        if space.lo()[a].rem_euclid(t as i64) != 0 || space.hi()[a].rem_euclid(t as i64) != 0 {
            return Err(Error::InvalidScale(format!(
                "window axis {a} [{}, {}] not aligned to t={t}; pick a margin divisible by t",
                space.lo()[a],
                space.hi()[a]
            )));
        }
    }
    Ok(())
}

/// Run the full construction. Preconditions: the box and window are
/// aligned to `t`, and the box's open cluster stays inside the window
/// (there is a zero-cutset at this scale).
pub fn decompose(field: &CapacityField, box_spec: &BoxSpec, t: u32) -> Result<RenormDecomposition> {
    check_alignment(field, box_spec, t)?;
    let space = field.region();
    let box_region = box_spec.region();
    let ti = t as i64;

    // all edges inside the box count as open for the construction
    let cluster: OpenCluster = open_cluster(field, &box_region, true);
    if cluster.touches_window_boundary() {
        return Err(Error::Precondition(
            "no zero-cutset at this window: the cluster reaches the rim".into(),
        ));
    }

    // vertex boundary of the cluster
    let nv = space.vertex_count() as usize;
    let mut d_c = vec![false; nv];
    for &v in cluster.vertices() {
        for u in space.l_neighbors(v) {
            if !cluster.contains(u) {
                d_c[u.index()] = true;
            }
        }
    }
    let mut d_i_c = vec![false; nv];
    for v in space.vertices() {
        if d_c[v.index()] {
            for u in space.l_neighbors(v) {
                if cluster.contains(u) {
                    d_i_c[u.index()] = true;
                }
            }
        }
    }

    // cube grid covering the window exactly
    let grid_lo: Vec<Coord> = space.lo().iter().map(|&c| c / ti).collect();
    let grid_hi: Vec<Coord> = space.hi().iter().map(|&c| c / ti - 1).collect();
    let cube_grid = Region::new(grid_lo, grid_hi)?;
    let nc = cube_grid.vertex_count() as usize;

    // per-cube contact flags
    let mut meets_c = vec![false; nc];
    let mut meets_dc = vec![false; nc];
    let mut meets_dic = vec![false; nc];
    {
        let mut coords = vec![0; space.dim()];
        let mut cubes = Vec::new();
        for v in space.vertices() {
            let vc = cluster.contains(v);
            let vdc = d_c[v.index()];
            let vdic = d_i_c[v.index()];
            if !(vc || vdc || vdic) {
                continue;
            }
            space.coords_into(v, &mut coords);
            cubes_containing(&coords, ti, &cube_grid, &mut cubes);
            for &cu in &cubes {
                if vc {
                    meets_c[cu.index()] = true;
                }
                if vdc {
                    meets_dc[cu.index()] = true;
                }
                if vdic {
                    meets_dic[cu.index()] = true;
                }
            }
        }
    }
    let in_boundary: Vec<bool> = (0..nc).map(|i| meets_dc[i] || meets_dic[i]).collect();

    // exterior boundary cubes: boundary cubes with a cube path to the rim
    // outside the boundary set
    let grid_view = GraphView::whole(&cube_grid);
    let grid_rim = cube_grid.rim_vertices();
    let outside_boundary = reach_avoiding_vertices(&grid_view, &grid_rim, &in_boundary);
    let mut in_ext = vec![false; nc];
    {
        let mut nbrs = Vec::new();
        let mut coords = vec![0; cube_grid.dim()];
        for cu in cube_grid.vertices() {
            if !in_boundary[cu.index()] {
                continue;
            }
            cube_grid.coords_into(cu, &mut coords);
            if cube_grid.is_rim(&coords) {
                in_ext[cu.index()] = true;
                continue;
            }
            grid_view.neighbors_into(cu, &mut nbrs);
            if nbrs
                .iter()
                .any(|&(_, w)| !in_boundary[w.index()] && outside_boundary[w.index()])
            {
                in_ext[cu.index()] = true;
            }
        }
    }
    let ext_boundary_cubes: Vec<VertexId> = cube_grid
        .vertices()
        .filter(|cu| in_ext[cu.index()])
        .collect();

    // inside part: cubes fenced off from the rim by the exterior boundary
    let outside_ext = reach_avoiding_vertices(&grid_view, &grid_rim, &in_ext);
    let in_inside: Vec<bool> = (0..nc)
        .map(|i| !outside_ext[i] && !in_ext[i])
        .collect();

    // ponds: inside cubes meeting neither the cluster nor its boundary,
    // grouped into L^d cube clusters
    let mut pond_candidate = vec![false; nc];
    for i in 0..nc {
        pond_candidate[i] = in_inside[i] && !meets_c[i] && !meets_dc[i];
    }
    let mut pond_of = vec![u32::MAX; nc];
    let mut pond_cube_lists: Vec<Vec<VertexId>> = Vec::new();
    for cu in cube_grid.vertices() {
        if !pond_candidate[cu.index()] || pond_of[cu.index()] != u32::MAX {
            continue;
        }
        let id = pond_cube_lists.len() as u32;
        let mut stack = vec![cu];
        pond_of[cu.index()] = id;
        let mut cubes = vec![cu];
        while let Some(v) = stack.pop() {
            for w in cube_grid.l_neighbors(v) {
                if pond_candidate[w.index()] && pond_of[w.index()] == u32::MAX {
                    pond_of[w.index()] = id;
                    cubes.push(w);
                    stack.push(w);
                }
            }
        }
        cubes.sort_unstable();
        pond_cube_lists.push(cubes);
    }
    let n_ponds = pond_cube_lists.len();

    // per-pond exterior boundary cubes
    let mut pond_ext: Vec<Vec<VertexId>> = Vec::with_capacity(n_ponds);
    let mut in_pond_ext_any = vec![false; nc];
    for cubes in &pond_cube_lists {
        let mut in_pond = vec![false; nc];
        for &cu in cubes {
            in_pond[cu.index()] = true;
        }
        let outside_pond = reach_avoiding_vertices(&grid_view, &grid_rim, &in_pond);
        let mut ext = Vec::new();
        let mut seen = vec![false; nc];
        for &cu in cubes {
            for w in cube_grid.l_neighbors(cu) {
                if !in_pond[w.index()] && !seen[w.index()] && outside_pond[w.index()] {
                    seen[w.index()] = true;
                    ext.push(w);
                }
            }
        }
        ext.sort_unstable();
        for &cu in &ext {
            in_pond_ext_any[cu.index()] = true;
        }
        pond_ext.push(ext);
    }

    // surface of the exterior boundary: its vertices joined to the rim
    // without passing other exterior-boundary vertices
    let mut vert_ext = vec![false; nv];
    for &cu in &ext_boundary_cubes {
        mark_cube_vertices(&cube_grid, cu, t, space, &mut vert_ext);
    }
    let view = GraphView::whole(space);
    let rim = space.rim_vertices();
    let outside_v = reach_avoiding_vertices(&view, &rim, &vert_ext);
    let mut surface = vec![false; nv];
    {
        let mut nbrs = Vec::new();
        let mut coords = vec![0; space.dim()];
        for v in space.vertices() {
            if !vert_ext[v.index()] {
                continue;
            }
            space.coords_into(v, &mut coords);
            if space.is_rim(&coords) {
                surface[v.index()] = true;
                continue;
            }
            view.neighbors_into(v, &mut nbrs);
            if nbrs.iter().any(|&(_, w)| outside_v[w.index()]) {
                surface[v.index()] = true;
            }
        }
    }
    let surface_vertices: Vec<VertexId> = space.vertices().filter(|v| surface[v.index()]).collect();

    // pond vertex sets, inside boundaries, interiors
    let mut pond_verts: Vec<Vec<bool>> = Vec::with_capacity(n_ponds);
    let mut pond_inner_bd: Vec<Vec<bool>> = Vec::with_capacity(n_ponds);
    for cubes in &pond_cube_lists {
        let mut verts = vec![false; nv];
        for &cu in cubes {
            mark_cube_vertices(&cube_grid, cu, t, space, &mut verts);
        }
        let mut outer = vec![false; nv];
        for v in space.vertices() {
            if verts[v.index()] {
                continue;
            }
            if space.l_neighbors(v).iter().any(|u| verts[u.index()]) {
                outer[v.index()] = true;
            }
        }
        let mut inner = vec![false; nv];
        for v in space.vertices() {
            if verts[v.index()]
                && space.l_neighbors(v).iter().any(|u| outer[u.index()])
            {
                inner[v.index()] = true;
            }
        }
        pond_verts.push(verts);
        pond_inner_bd.push(inner);
    }

    // candidate vertex set for the connector clusters: vertices of the
    // inside part and the exterior boundary, minus pond interiors
    let mut in_lbar_vert = vec![false; nv];
    for cu in cube_grid.vertices() {
        if in_inside[cu.index()] || in_ext[cu.index()] {
            mark_cube_vertices(&cube_grid, cu, t, space, &mut in_lbar_vert);
        }
    }
    let mut allowed = in_lbar_vert.clone();
    for i in 0..n_ponds {
        for v in space.vertices() {
            if pond_verts[i][v.index()] && !pond_inner_bd[i][v.index()] {
                allowed[v.index()] = false;
            }
        }
    }

    // open components within the allowed set (singletons included)
    let mut comp_of = vec![u32::MAX; nv];
    let mut n_comps = 0u32;
    {
        let mut nbrs = Vec::new();
        for v in space.vertices() {
            if !allowed[v.index()] || comp_of[v.index()] != u32::MAX {
                continue;
            }
            let id = n_comps;
            n_comps += 1;
            comp_of[v.index()] = id;
            let mut stack = vec![v];
            while let Some(x) = stack.pop() {
                view.neighbors_into(x, &mut nbrs);
                for &(e, w) in &nbrs {
                    if allowed[w.index()] && comp_of[w.index()] == u32::MAX && field.is_open(e) {
                        comp_of[w.index()] = id;
                        stack.push(w);
                    }
                }
            }
        }
    }

    // which components touch the surface or a pond's inside boundary
    let mut comp_touches_surface = vec![false; n_comps as usize];
    let mut comp_ponds: Vec<Vec<(u32, u32)>> = vec![Vec::new(); 0];
    let mut comp_pond_links: Vec<(u32, u32)> = Vec::new();
    let _ = &mut comp_ponds;
    for v in space.vertices() {
        let c = comp_of[v.index()];
        if c == u32::MAX {
            continue;
        }
        if surface[v.index()] {
            comp_touches_surface[c as usize] = true;
        }
        for i in 0..n_ponds {
            if pond_inner_bd[i][v.index()] {
                comp_pond_links.push((c, i as u32));
            }
        }
    }
    comp_pond_links.sort_unstable();
    comp_pond_links.dedup();

    // good components: union-find over {components} + {ponds} + surface node
    let surface_node = n_comps + n_ponds as u32;
    let mut uf = UnionFind::new((surface_node + 1) as usize);
    let mut comp_in_s_prime = vec![false; n_comps as usize];
    for &(c, p) in &comp_pond_links {
        uf.union(c, n_comps + p);
        comp_in_s_prime[c as usize] = true;
    }
    for c in 0..n_comps {
        if comp_touches_surface[c as usize] {
            uf.union(c, surface_node);
            comp_in_s_prime[c as usize] = true;
        }
    }
    for (i, verts) in pond_verts.iter().enumerate() {
        if space
            .vertices()
            .any(|v| verts[v.index()] && surface[v.index()])
        {
            uf.union(n_comps + i as u32, surface_node);
        }
    }
    let surface_root = uf.find(surface_node);
    let pond_live: Vec<bool> = (0..n_ponds)
        .map(|i| uf.find(n_comps + i as u32) == surface_root)
        .collect();
    let comp_kept: Vec<bool> = (0..n_comps)
        .map(|c| comp_in_s_prime[c as usize] && uf.find(c) == surface_root)
        .collect();

    // connector cubes: inside cubes holding a surviving cluster vertex,
    // excluding ponds and all pond exterior boundaries
    let mut s_prime_vert = vec![false; nv];
    let mut s_vert = vec![false; nv];
    for v in space.vertices() {
        let c = comp_of[v.index()];
        if c == u32::MAX {
            continue;
        }
        if comp_in_s_prime[c as usize] {
            s_prime_vert[v.index()] = true;
        }
        if comp_kept[c as usize] {
            s_vert[v.index()] = true;
        }
    }
    let mut s_cubes_mask = vec![false; nc];
    {
        let mut coords = vec![0; space.dim()];
        let mut cubes = Vec::new();
        for v in space.vertices() {
            if !s_vert[v.index()] {
                continue;
            }
            space.coords_into(v, &mut coords);
            cubes_containing(&coords, ti, &cube_grid, &mut cubes);
            for &cu in &cubes {
                let i = cu.index();
                if in_inside[i]
                    && !pond_candidate[i]
                    && !in_pond_ext_any[i]
                    && s_prime_vert[v.index()]
                {
                    s_cubes_mask[i] = true;
                }
            }
        }
    }
    let s_cubes: Vec<VertexId> = cube_grid
        .vertices()
        .filter(|cu| s_cubes_mask[cu.index()])
        .collect();

    // Γ: exterior boundary + connector cubes + live ponds' exterior boundaries
    let mut gamma_mask = in_ext.clone();
    for &cu in &s_cubes {
        gamma_mask[cu.index()] = true;
    }
    for (i, ext) in pond_ext.iter().enumerate() {
        if pond_live[i] {
            for &cu in ext {
                gamma_mask[cu.index()] = true;
            }
        }
    }
    let gamma: Vec<VertexId> = cube_grid
        .vertices()
        .filter(|cu| gamma_mask[cu.index()])
        .collect();

    // classification map
    let mut class = vec![CubeClass::Other; nc];
    for cu in cube_grid.vertices() {
        let i = cu.index();
        class[i] = if in_ext[i] {
            CubeClass::ExteriorBoundary
        } else if in_boundary[i] {
            CubeClass::Boundary
        } else if pond_candidate[i] {
            CubeClass::Pond
        } else if meets_c[i] {
            CubeClass::ClusterInterior
        } else {
            CubeClass::Other
        };
    }

    // exact separation checks: surviving clusters and live ponds never
    // meet the cluster
    let mut separation_ok = true;
    for v in space.vertices() {
        if s_vert[v.index()] && cluster.contains(v) {
            separation_ok = false;
        }
    }
    for (i, verts) in pond_verts.iter().enumerate() {
        if !pond_live[i] {
            continue;
        }
        for v in space.vertices() {
            if verts[v.index()] && cluster.contains(v) {
                separation_ok = false;
            }
        }
    }

    let gamma_subset_boundary = gamma.iter().all(|cu| in_boundary[cu.index()]);
    let gamma_connected = cube_set_connected(&cube_grid, &gamma);

    let ponds: Vec<Pond> = pond_cube_lists
        .into_iter()
        .enumerate()
        .map(|(i, cubes)| Pond {
            cubes,
            live: pond_live[i],
            ext_boundary: pond_ext[i].clone(),
        })
        .collect();

    Ok(RenormDecomposition {
        t,
        box_region,
        cube_grid,
        class,
        ext_boundary_cubes,
        ponds,
        s_cubes,
        gamma,
        surface_vertices,
        separation_ok,
        gamma_subset_boundary,
        gamma_connected,
    })
}

// Connectivity of cube sets is tested with corner steps bridged (L^d
// adjacency): the exterior hull meets itself only diagonally at convex
// corners, the same corner cases the vertex-level boundary has.
fn cube_set_connected(grid: &Region, cubes: &[VertexId]) -> bool {
    crate::cutset::l_connected(grid, cubes)
}

/// The closed edges inside Γ's cubes must cut the box from the window rim.
pub fn verify_gamma_zero_cutset(
    decomp: &RenormDecomposition,
    field: &CapacityField,
    box_spec: &BoxSpec,
) -> bool {
    let space = field.region();
    let mut blocked = vec![false; space.edge_count() as usize];
    for &cu in &decomp.gamma {
        let r = decomp.cube_region(cu);
        for_each_point(r.lo(), r.hi(), |p| {
            for a in 0..space.dim() {
                if p[a] < r.hi()[a] {
                    if let Some(e) = space.edge_id(a, p) {
                        if !field.is_open(e) {
                            blocked[e.index()] = true;
                        }
                    }
                }
            }
        });
    }
    let view = GraphView::whole(space);
    let mut seeds = Vec::new();
    let br = box_spec.region();
    for_each_point(br.lo(), br.hi(), |p| {
        if let Some(v) = space.vertex_id(p) {
            seeds.push(v);
        }
    });
    let seen = reach_avoiding_edges(&view, &seeds, &blocked);
    space.rim_vertices().iter().all(|v| !seen[v.index()])
}

/// Decide the blocked/disjoint property of the cube at `u` using only the
/// edges interior to its 3t-neighborhood. Blocked wins when both hold.
pub fn cube_property(field: &CapacityField, u: &[Coord], t: u32) -> Result<CubeProperty> {
    if t < 2 {
        return Err(Error::InvalidScale(
            "cube properties need t >= 2 (the 3t-cube interior is degenerate)".into(),
        ));
    }
    let space = field.region();
    let ti = t as i64;
    let big_lo: Vec<Coord> = u.iter().map(|&c| (c - 1) * ti).collect();
    let big_hi: Vec<Coord> = u.iter().map(|&c| (c + 2) * ti).collect();
    if !space.contains_point(&big_lo) || !space.contains_point(&big_hi) {
        return Err(Error::OutOfRange(format!(
            "3t-cube of {u:?} clips the window"
        )));
    }
    let interior_lo: Vec<Coord> = big_lo.iter().map(|&c| c + 1).collect();
    let interior_hi: Vec<Coord> = big_hi.iter().map(|&c| c - 1).collect();
    let interior = Region::new(interior_lo, interior_hi)?;
    let view = GraphView::restricted(space, &interior);

    // open components over interior edges, singletons included
    let nv = space.vertex_count() as usize;
    let mut comp_of = vec![u32::MAX; nv];
    let mut n_comps = 0u32;
    let mut interior_verts = Vec::new();
    for_each_point(interior.lo(), interior.hi(), |p| {
        interior_verts.push(space.vertex_id(p).expect("interior fits the window"));
    });
    {
        let mut nbrs = Vec::new();
        for &v in &interior_verts {
            if comp_of[v.index()] != u32::MAX {
                continue;
            }
            let id = n_comps;
            n_comps += 1;
            comp_of[v.index()] = id;
            let mut stack = vec![v];
            while let Some(x) = stack.pop() {
                view.neighbors_into(x, &mut nbrs);
                for &(e, w) in &nbrs {
                    if comp_of[w.index()] == u32::MAX && field.is_open(e) {
                        comp_of[w.index()] = id;
                        stack.push(w);
                    }
                }
            }
        }
    }

    // surfaces of the t-subcubes, clipped to the interior and deduplicated
    let d = space.dim();
    let mut surfaces: Vec<Vec<VertexId>> = Vec::new();
    let mut center_surface_ids: Vec<usize> = Vec::new();
    let mut offset = vec![-1i64; d];
    loop {
        let sub: Vec<Coord> = u.iter().zip(&offset).map(|(c, o)| c + o).collect();
        let is_center = offset.iter().all(|&o| o == 0);
        for a in 0..d {
            for side in 0..2 {
                let plane = (sub[a] + side) * ti;
                let mut lo: Vec<Coord> = sub.iter().map(|&c| c * ti).collect();
                let mut hi: Vec<Coord> = sub.iter().map(|&c| c * ti + ti).collect();
                lo[a] = plane;
                hi[a] = plane;
                for x in 0..d {
                    lo[x] = lo[x].max(interior.lo()[x]);
                    hi[x] = hi[x].min(interior.hi()[x]);
                }
                if lo.iter().zip(&hi).any(|(l, h)| l > h) {
                    continue;
                }
                let mut verts = Vec::new();
                for_each_point(&lo, &hi, |p| {
                    verts.push(space.vertex_id(p).unwrap());
                });
                verts.sort_unstable();
                match surfaces.iter().position(|s| *s == verts) {
                    Some(i) => {
                        if is_center && !center_surface_ids.contains(&i) {
                            center_surface_ids.push(i);
                        }
                    }
                    None => {
                        if is_center {
                            center_surface_ids.push(surfaces.len());
                        }
                        surfaces.push(verts);
                    }
                }
            }
        }
        let mut a = d;
        let mut done = false;
        loop {
            if a == 0 {
                done = true;
                break;
            }
            a -= 1;
            if offset[a] < 1 {
                offset[a] += 1;
                break;
            }
            offset[a] = -1;
        }
        if done {
            break;
        }
    }

    let comp_sets: Vec<std::collections::BTreeSet<u32>> = surfaces
        .iter()
        .map(|s| s.iter().map(|v| comp_of[v.index()]).collect())
        .collect();

    // blocked (1): some pair of subcube surfaces is not joined by any
    // open component
    let mut blocked = false;
    'outer: for i in 0..surfaces.len() {
        for j in (i + 1)..surfaces.len() {
            if comp_sets[i].intersection(&comp_sets[j]).next().is_none() {
                blocked = true;
                break 'outer;
            }
        }
    }

    // blocked (2): a component runs from a center-cube surface to the rim
    // of the interior yet misses some subcube surface
    if !blocked {
        let mut rim_comp = vec![false; n_comps as usize];
        let mut coords = vec![0; d];
        for &v in &interior_verts {
            space.coords_into(v, &mut coords);
            if interior.is_rim(&coords) {
                rim_comp[comp_of[v.index()] as usize] = true;
            }
        }
        let mut escaping: std::collections::BTreeSet<u32> = Default::default();
        for &si in &center_surface_ids {
            for &c in &comp_sets[si] {
                if rim_comp[c as usize] {
                    escaping.insert(c);
                }
            }
        }
        'esc: for &c in &escaping {
            for set in &comp_sets {
                if !set.contains(&c) {
                    blocked = true;
                    break 'esc;
                }
            }
        }
    }
    if blocked {
        return Ok(CubeProperty::Blocked);
    }

    // disjoint: two edge-disjoint open escapes from the center cube,
    // decided by a unit-capacity max flow
    let mut node_of = vec![u32::MAX; nv];
    for (i, &v) in interior_verts.iter().enumerate() {
        node_of[v.index()] = i as u32;
    }
    let n = interior_verts.len();
    let mut solver = Dinic::<Cap>::new(n + 2);
    let s_node = n;
    let t_node = n + 1;
    {
        let mut nbrs = Vec::new();
        for &v in &interior_verts {
            view.neighbors_into(v, &mut nbrs);
            for &(e, w) in &nbrs {
                if w.0 > v.0 && field.is_open(e) {
                    solver.add_undirected(
                        node_of[v.index()] as usize,
                        node_of[w.index()] as usize,
                        1,
                    );
                }
            }
        }
    }
    let center_lo: Vec<Coord> = u.iter().map(|&c| c * ti).collect();
    let center_hi: Vec<Coord> = u.iter().map(|&c| c * ti + ti).collect();
    for_each_point(&center_lo, &center_hi, |p| {
        let v = space.vertex_id(p).unwrap();
        solver.add_directed(s_node, node_of[v.index()] as usize, Cap::infinity());
    });
    {
        let mut coords = vec![0; d];
        for &v in &interior_verts {
            space.coords_into(v, &mut coords);
            if interior.is_rim(&coords) {
                solver.add_directed(node_of[v.index()] as usize, t_node, Cap::infinity());
            }
        }
    }
    let escapes = solver.max_flow(s_node, t_node);
    if escapes >= 2 {
        Ok(CubeProperty::Disjoint)
    } else {
        Ok(CubeProperty::Neither)
    }
}

/// Lemma-style verdict for a decomposition: every Γ cube must be blocked
/// or disjoint.
#[derive(Clone, Debug)]
pub struct GammaPropertyReport {
    pub all_ok: bool,
    pub properties: Vec<(Vec<Coord>, CubeProperty)>,
}

pub fn verify_gamma_properties(
    decomp: &RenormDecomposition,
    field: &CapacityField,
) -> Result<GammaPropertyReport> {
    let mut properties = Vec::with_capacity(decomp.gamma.len());
    let mut all_ok = true;
    for &cu in &decomp.gamma {
        let coords = decomp.cube_coords(cu);
        let prop = cube_property(field, &coords, decomp.t)?;
        if prop == CubeProperty::Neither {
            all_ok = false;
        }
        properties.push((coords, prop));
    }
    Ok(GammaPropertyReport { all_ok, properties })
}

/// Pick a subset of cubes whose 3t-neighborhoods have pairwise disjoint
/// interiors (cube indices at pairwise L-infinity distance >= 3). The
/// result is never smaller than `cubes.len() / 2^(2d)`: the best residue
/// class mod 3 alone achieves `len / 3^d`.
pub fn disjoint_3t_packing(grid: &Region, cubes: &[VertexId]) -> Vec<VertexId> {
    if cubes.is_empty() {
        return Vec::new();
    }
    let d = grid.dim();
    // greedy in canonical order
    let mut sorted = cubes.to_vec();
    sorted.sort_unstable();
    let mut greedy: Vec<VertexId> = Vec::new();
    let mut greedy_coords: Vec<Vec<Coord>> = Vec::new();
    for &cu in &sorted {
        let c = grid.coords_of(cu);
        let ok = greedy_coords
            .iter()
            .all(|g| g.iter().zip(&c).map(|(a, b)| (a - b).abs()).max().unwrap() >= 3);
        if ok {
            greedy.push(cu);
            greedy_coords.push(c);
        }
    }
    // best residue class mod 3 as the guaranteed fallback
    let mut buckets: std::collections::HashMap<Vec<i64>, Vec<VertexId>> = Default::default();
    for &cu in &sorted {
        let c = grid.coords_of(cu);
        let key: Vec<i64> = c.iter().map(|x| x.rem_euclid(3)).collect();
        buckets.entry(key).or_default().push(cu);
    }
    let best = buckets
        .into_values()
        .max_by_key(|v| (v.len(), std::cmp::Reverse(v.first().map(|x| x.0).unwrap_or(0))))
        .unwrap_or_default();
    let _ = d;
    if greedy.len() >= best.len() {
        greedy
    } else {
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::DistributionSpec;
    use crate::lattice::AmbientWindow;

    /// All edges open inside the box, all closed outside.
    fn shell_setup() -> (BoxSpec, CapacityField) {
        let b = BoxSpec::new(2, vec![4], 4).unwrap();
        let w = AmbientWindow::new(b.clone(), 8);
        let space = w.region();
        let mut values = vec![0 as Cap; space.edge_count() as usize];
        let br = b.region();
        for e in space.edges() {
            let (u, v) = space.edge_endpoints(e);
            let pu = space.coords_of(u);
            let pv = space.coords_of(v);
            if br.contains_point(&pu) && br.contains_point(&pv) {
                values[e.index()] = 1 << 20;
            }
        }
        let f = CapacityField::from_values(w, 20, values).unwrap();
        (b, f)
    }

    #[test]
    fn all_closed_outside_gives_pure_shell() {
        let (b, f) = shell_setup();
        let d = decompose(&f, &b, 2).unwrap();
        assert!(d.ponds.is_empty());
        assert_eq!(d.s_cubes.len(), 0);
        assert_eq!(d.gamma, d.ext_boundary_cubes);
        assert!(d.gamma_subset_boundary);
        assert!(d.gamma_connected);
        assert!(d.separation_ok);
        assert!(verify_gamma_zero_cutset(&d, &f, &b));
        let props = verify_gamma_properties(&d, &f).unwrap();
        assert!(props.all_ok);
    }

    #[test]
    fn misaligned_scale_rejected() {
        let (b, f) = shell_setup();
        assert!(matches!(decompose(&f, &b, 3), Err(Error::InvalidScale(_))));
    }

    #[test]
    fn open_window_fails_precondition() {
        let b = BoxSpec::new(2, vec![4], 4).unwrap();
        let w = AmbientWindow::new(b.clone(), 8);
        let f = CapacityField::sample(w, DistributionSpec::Dirac { value: 1.0 }, 3, 0).unwrap();
        assert!(matches!(
            decompose(&f, &b, 2),
            Err(Error::Precondition(_))
        ));
    }

    /// C-shaped ring of open edges around a cavity, with an optional open
    /// channel from outside the hull through the ring gap into the cavity.
    fn ring_setup(with_channel: bool) -> (BoxSpec, CapacityField) {
        let b = BoxSpec::new(2, vec![2], 2).unwrap();
        let w = AmbientWindow::new(b.clone(), 16);
        let space = w.region();
        let one = 1 << 20;
        let mut values = vec![0 as Cap; space.edge_count() as usize];
        // box interior
        let br = b.region();
        for e in space.edges() {
            let (u, v) = space.edge_endpoints(e);
            if br.contains_point(&space.coords_of(u)) && br.contains_point(&space.coords_of(v)) {
                values[e.index()] = one;
            }
        }
        let mut open = |axis: usize, low: [i64; 2]| {
            let e = space.edge_id(axis, &low).unwrap();
            values[e.index()] = one;
        };
        // bridge from the box to the ring
        open(0, [2, 2]);
        open(0, [3, 2]);
        open(0, [4, 2]);
        // rectangle ring on [5, 13] x [-1, 7]
        for x in 5..13 {
            open(0, [x, -1]);
            open(0, [x, 7]);
        }
        for y in -1..7 {
            open(1, [5, y]);
        }
        for y in -1..7 {
            // gap: the right wall omits the edges (13,2)-(13,3)-(13,4)
            if y == 2 || y == 3 {
                continue;
            }
            open(1, [13, y]);
        }
        if with_channel {
            for x in 10..16 {
                open(0, [x, 3]);
            }
        }
        let f = CapacityField::from_values(w, 20, values).unwrap();
        (b, f)
    }

    #[test]
    fn cavity_without_channel_is_a_dead_pond() {
        let (b, f) = ring_setup(false);
        let d = decompose(&f, &b, 2).unwrap();
        assert_eq!(d.ponds.len(), 1, "exactly one pond expected");
        assert!(!d.ponds[0].live);
        assert_eq!(d.live_pond_count(), 0);
        // dead ponds contribute nothing to gamma
        for &cu in &d.ponds[0].ext_boundary {
            assert!(
                !d.gamma.contains(&cu) || d.ext_boundary_cubes.contains(&cu) || d.s_cubes.contains(&cu),
                "dead pond boundary must not enter gamma on its own"
            );
        }
        assert!(d.gamma_subset_boundary);
        assert!(d.gamma_connected);
        assert!(verify_gamma_zero_cutset(&d, &f, &b));
        let props = verify_gamma_properties(&d, &f).unwrap();
        assert!(props.all_ok);
    }

    #[test]
    fn channel_makes_the_pond_live() {
        let (b, f) = ring_setup(true);
        let d = decompose(&f, &b, 2).unwrap();
        assert_eq!(d.ponds.len(), 1);
        assert!(d.ponds[0].live, "channel must make the pond live");
        // the live pond's exterior boundary joins gamma
        for &cu in &d.ponds[0].ext_boundary {
            assert!(d.gamma.contains(&cu));
        }
        assert!(d.gamma_subset_boundary);
        assert!(d.gamma_connected);
        assert!(d.separation_ok);
        assert!(verify_gamma_zero_cutset(&d, &f, &b));
        let props = verify_gamma_properties(&d, &f).unwrap();
        assert!(props.all_ok);
    }

    #[test]
    fn cube_property_extremes() {
        let b = BoxSpec::new(2, vec![2], 2).unwrap();
        let w = AmbientWindow::new(b.clone(), 16);
        let space = w.region();
        let closed =
            CapacityField::from_values(w.clone(), 20, vec![0; space.edge_count() as usize])
                .unwrap();
        assert_eq!(
            cube_property(&closed, &[0, 0], 2).unwrap(),
            CubeProperty::Blocked
        );
        let open = CapacityField::from_values(
            w,
            20,
            vec![1 << 20; space.edge_count() as usize],
        )
        .unwrap();
        assert_eq!(
            cube_property(&open, &[0, 0], 2).unwrap(),
            CubeProperty::Disjoint
        );
    }

    #[test]
    fn single_corridor_is_blocked_not_disjoint() {
        let b = BoxSpec::new(2, vec![2], 2).unwrap();
        let w = AmbientWindow::new(b.clone(), 16);
        let space = w.region();
        let mut values = vec![0 as Cap; space.edge_count() as usize];
        let e = space.edge_id(0, &[2, 1]).unwrap();
        values[e.index()] = 1 << 20;
        let f = CapacityField::from_values(w, 20, values).unwrap();
        let p = cube_property(&f, &[0, 0], 2).unwrap();
        assert_eq!(p, CubeProperty::Blocked);
    }

    #[test]
    fn property_is_local_to_the_3t_cube() {
        let b = BoxSpec::new(2, vec![2], 2).unwrap();
        let w = AmbientWindow::new(b.clone(), 16);
        let space = w.region();
        let base = CapacityField::sample(
            AmbientWindow::new(b.clone(), 16),
            DistributionSpec::Bernoulli {
                p_open: 0.5,
                value: 1.0,
            },
            91,
            0,
        )
        .unwrap();
        let before = cube_property(&base, &[0, 0], 2).unwrap();
        // mutate edges far outside the interior of the 3t-cube [-2,6]^2
        let mut mutated = base.clone();
        for low in [[-8i64, -8i64], [10, 10], [-8, 10]] {
            for axis in 0..2 {
                if let Some(e) = space.edge_id(axis, &low) {
                    mutated.set_cap(e, (1 << 20) - mutated.cap(e));
                }
            }
        }
        let after = cube_property(&mutated, &[0, 0], 2).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn packing_examples() {
        let grid = Region::new(vec![0, 0], vec![20, 20]).unwrap();
        // single cube
        let single = vec![grid.vertex_id(&[5, 5]).unwrap()];
        assert_eq!(disjoint_3t_packing(&grid, &single), single);
        // straight line of 9 cubes: spacing 3 keeps at least 3
        let line: Vec<VertexId> = (0..9).map(|x| grid.vertex_id(&[x, 0]).unwrap()).collect();
        let packed = disjoint_3t_packing(&grid, &line);
        assert!(packed.len() >= 3, "packed {}", packed.len());
        // generic bound: a full block still packs >= n / 2^(2d)
        let mut block = Vec::new();
        for x in 0..5 {
            for y in 0..5 {
                block.push(grid.vertex_id(&[x, y]).unwrap());
            }
        }
        let packed = disjoint_3t_packing(&grid, &block);
        assert!(packed.len() as f64 >= block.len() as f64 / 16.0);
        for (i, &a) in packed.iter().enumerate() {
            for &bb in packed.iter().skip(i + 1) {
                let ca = grid.coords_of(a);
                let cb = grid.coords_of(bb);
                let dist = ca.iter().zip(&cb).map(|(x, y)| (x - y).abs()).max().unwrap();
                assert!(dist >= 3);
            }
        }
    }
}
