//! Finite windows of the `Z^d` lattice: boxes `B(k, m)`, ambient windows,
//! canonical vertex/edge indexing, faces, hyperplanes, and adjacency.
//!
//! Indexing is row-major over coordinates with axis-major edge blocks, so
//! encode/decode is O(d) and sweeps are cache-linear. Indices depend only
//! on the geometry of the region, never on traversal order.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Coord = i64;

/// Dense vertex index within a [`Region`].
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct VertexId(pub u32);

/// Dense edge index within a [`Region`]; axis-major blocks.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct EdgeId(pub u32);

impl VertexId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl EdgeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// `Z^d` adjacency (`sum |u_i - v_i| = 1`) or `L^d` adjacency
/// (`max |u_i - v_i| = 1`).
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum AdjacencyMode {
    ZLattice,
    LLattice,
}

pub fn are_adjacent(u: &[Coord], v: &[Coord], mode: AdjacencyMode) -> bool {
    debug_assert_eq!(u.len(), v.len());
    match mode {
        AdjacencyMode::ZLattice => {
            let mut sum = 0i64;
            for (a, b) in u.iter().zip(v) {
                sum += (a - b).abs();
                if sum > 1 {
                    return false;
                }
            }
            sum == 1
        }
        AdjacencyMode::LLattice => {
            let mut max = 0i64;
            for (a, b) in u.iter().zip(v) {
                let diff = (a - b).abs();
                if diff > 1 {
                    return false;
                }
                max = max.max(diff);
            }
            max == 1
        }
    }
}

/// An axis-aligned box of lattice vertices, `lo[i] ..= hi[i]` on each axis.
/// Doubles as a graph: its edges are the `Z^d` edges with both endpoints
/// inside.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(try_from = "RegionRepr", into = "RegionRepr")]
pub struct Region {
    lo: Vec<Coord>,
    hi: Vec<Coord>,
    extents: Vec<u64>,
    vstrides: Vec<u64>,
    vcount: u64,
    edge_offsets: Vec<u64>,
    ecount: u64,
}

#[derive(Serialize, Deserialize)]
struct RegionRepr {
    lo: Vec<Coord>,
    hi: Vec<Coord>,
}

impl From<Region> for RegionRepr {
    fn from(r: Region) -> Self {
        RegionRepr { lo: r.lo, hi: r.hi }
    }
}

impl TryFrom<RegionRepr> for Region {
    type Error = String;

    fn try_from(repr: RegionRepr) -> std::result::Result<Self, String> {
        Region::new(repr.lo, repr.hi).map_err(|e| e.to_string())
    }
}

impl Region {
    pub fn new(lo: Vec<Coord>, hi: Vec<Coord>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidSpec(format!(
                "region bounds must be non-empty and of equal length ({} vs {})",
                lo.len(),
                hi.len()
            )));
        }
        for (a, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if l > h {
                return Err(Error::InvalidSpec(format!(
                    "region axis {a}: lo {l} > hi {h}"
                )));
            }
        }
        let d = lo.len();
        let extents: Vec<u64> = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| (h - l + 1) as u64)
            .collect();
        let mut vcount: u64 = 1;
        for &e in &extents {
            vcount = vcount
                .checked_mul(e)
                .ok_or_else(|| Error::Resource("vertex count overflows u64".into()))?;
        }
        let mut vstrides = vec![1u64; d];
        for a in (0..d.saturating_sub(1)).rev() {
            vstrides[a] = vstrides[a + 1] * extents[a + 1];
        }
        let mut edge_offsets = vec![0u64; d + 1];
        for a in 0..d {
            let along = if extents[a] >= 2 {
                let mut n = extents[a] - 1;
                for (b, &e) in extents.iter().enumerate() {
                    if b != a {
                        n = n
                            .checked_mul(e)
                            .ok_or_else(|| Error::Resource("edge count overflows u64".into()))?;
                    }
                }
                n
            } else {
                0
            };
            edge_offsets[a + 1] = edge_offsets[a] + along;
        }
        let ecount = edge_offsets[d];
        if vcount > u32::MAX as u64 || ecount > u32::MAX as u64 {
            return Err(Error::Resource(format!(
                "region too large for dense indexing: {vcount} vertices, {ecount} edges"
            )));
        }
        Ok(Region {
            lo,
            hi,
            extents,
            vstrides,
            vcount,
            edge_offsets,
            ecount,
        })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[Coord] {
        &self.lo
    }

    pub fn hi(&self) -> &[Coord] {
        &self.hi
    }

    pub fn vertex_count(&self) -> u64 {
        self.vcount
    }

    pub fn edge_count(&self) -> u64 {
        self.ecount
    }

    /// Edges along `axis`: (extent-1 on that axis) x product of the other extents.
    pub fn edge_count_along(&self, axis: usize) -> u64 {
        self.edge_offsets[axis + 1] - self.edge_offsets[axis]
    }

    pub fn contains_point(&self, p: &[Coord]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(c, (l, h))| c >= l && c <= h)
    }

    /// True iff `other` fits inside `self` on every axis.
    pub fn contains_region(&self, other: &Region) -> bool {
        self.dim() == other.dim()
            && self
                .lo
                .iter()
                .zip(&other.lo)
                .all(|(outer, inner)| outer <= inner)
            && self
                .hi
                .iter()
                .zip(&other.hi)
                .all(|(outer, inner)| outer >= inner)
    }

    pub fn vertex_id(&self, p: &[Coord]) -> Option<VertexId> {
        if !self.contains_point(p) {
            return None;
        }
        let mut idx = 0u64;
        for (a, c) in p.iter().enumerate() {
            idx += (c - self.lo[a]) as u64 * self.vstrides[a];
        }
        Some(VertexId(idx as u32))
    }

    pub fn coords_of(&self, v: VertexId) -> Vec<Coord> {
        let mut out = vec![0; self.dim()];
        self.coords_into(v, &mut out);
        out
    }

    pub fn coords_into(&self, v: VertexId, out: &mut [Coord]) {
        let mut rem = v.0 as u64;
        for a in 0..self.dim() {
            let q = rem / self.vstrides[a];
            rem %= self.vstrides[a];
            out[a] = self.lo[a] + q as i64;
        }
    }

    /// Edge along `axis` whose lower endpoint is `low`.
    pub fn edge_id(&self, axis: usize, low: &[Coord]) -> Option<EdgeId> {
        if axis >= self.dim() || !self.contains_point(low) || low[axis] >= self.hi[axis] {
            return None;
        }
        let mut idx = self.edge_offsets[axis];
        let mut stride = 1u64;
        for a in (0..self.dim()).rev() {
            let extent = if a == axis {
                self.extents[a] - 1
            } else {
                self.extents[a]
            };
            idx += (low[a] - self.lo[a]) as u64 * stride;
            stride *= extent;
        }
        Some(EdgeId(idx as u32))
    }

    /// Axis and lower-endpoint coordinates of an edge.
    pub fn edge_info(&self, e: EdgeId) -> (usize, Vec<Coord>) {
        let idx = e.0 as u64;
        let axis = (0..self.dim())
            .find(|&a| idx < self.edge_offsets[a + 1])
            .expect("edge id out of range");
        let mut rem = idx - self.edge_offsets[axis];
        let mut low = vec![0; self.dim()];
        let mut strides = vec![1u64; self.dim()];
        for a in (0..self.dim().saturating_sub(1)).rev() {
            let extent = if a + 1 == axis {
                self.extents[a + 1] - 1
            } else {
                self.extents[a + 1]
            };
            strides[a] = strides[a + 1] * extent;
        }
        for a in 0..self.dim() {
            let q = rem / strides[a];
            rem %= strides[a];
            low[a] = self.lo[a] + q as i64;
        }
        (axis, low)
    }

    pub fn edge_endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        let (axis, low) = self.edge_info(e);
        let u = self.vertex_id(&low).expect("edge endpoint in region");
        let v = VertexId(u.0 + self.vstrides[axis] as u32);
        (u, v)
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.vcount as u32).map(VertexId)
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.ecount as u32).map(EdgeId)
    }

    /// Incident edges and opposite endpoints of `v`, in axis order
    /// (minus side before plus side).
    pub fn neighbors_into(&self, v: VertexId, out: &mut Vec<(EdgeId, VertexId)>) {
        out.clear();
        let mut coords = vec![0; self.dim()];
        self.coords_into(v, &mut coords);
        for a in 0..self.dim() {
            if coords[a] > self.lo[a] {
                coords[a] -= 1;
                let e = self.edge_id(a, &coords).unwrap();
                coords[a] += 1;
                out.push((e, VertexId(v.0 - self.vstrides[a] as u32)));
            }
            if coords[a] < self.hi[a] {
                let e = self.edge_id(a, &coords).unwrap();
                out.push((e, VertexId(v.0 + self.vstrides[a] as u32)));
            }
        }
    }

    pub fn is_rim(&self, p: &[Coord]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .any(|(c, (l, h))| c == l || c == h)
    }

    /// Vertices on the outermost layer of the region (the finite stand-in
    /// for "infinity" when the region is an ambient window).
    pub fn rim_vertices(&self) -> Vec<VertexId> {
        let mut out = Vec::new();
        let mut coords = vec![0; self.dim()];
        for v in self.vertices() {
            self.coords_into(v, &mut coords);
            if self.is_rim(&coords) {
                out.push(v);
            }
        }
        out
    }

    /// All vertices with `coords[axis] == coord`, plus the edges induced
    /// inside that hyperplane.
    pub fn hyperplane(&self, axis: usize, coord: Coord) -> Result<(Vec<VertexId>, Vec<EdgeId>)> {
        if axis >= self.dim() {
            return Err(Error::OutOfRange(format!(
                "axis {axis} out of range for dimension {}",
                self.dim()
            )));
        }
        if coord < self.lo[axis] || coord > self.hi[axis] {
            return Err(Error::OutOfRange(format!(
                "hyperplane coordinate {coord} outside [{}, {}]",
                self.lo[axis], self.hi[axis]
            )));
        }
        let mut verts = Vec::new();
        let mut edges = Vec::new();
        let mut lo = self.lo.clone();
        let mut hi = self.hi.clone();
        lo[axis] = coord;
        hi[axis] = coord;
        for_each_point(&lo, &hi, |p| {
            verts.push(self.vertex_id(p).unwrap());
            for a in 0..self.dim() {
                if a != axis && p[a] < self.hi[a] {
                    edges.push(self.edge_id(a, p).unwrap());
                }
            }
        });
        Ok((verts, edges))
    }

    /// `L^d` neighbors of `v` inside the region (all `3^d - 1` offsets).
    pub fn l_neighbors(&self, v: VertexId) -> Vec<VertexId> {
        let center = self.coords_of(v);
        let mut out = Vec::new();
        let mut offset = vec![-1i64; self.dim()];
        loop {
            if offset.iter().any(|&o| o != 0) {
                let p: Vec<Coord> = center.iter().zip(&offset).map(|(c, o)| c + o).collect();
                if let Some(u) = self.vertex_id(&p) {
                    out.push(u);
                }
            }
            let mut a = self.dim();
            loop {
                if a == 0 {
                    return out;
                }
                a -= 1;
                if offset[a] < 1 {
                    offset[a] += 1;
                    break;
                }
                offset[a] = -1;
            }
        }
    }
}

/// Visit every lattice point of `lo..=hi` in row-major order.
pub fn for_each_point(lo: &[Coord], hi: &[Coord], mut f: impl FnMut(&[Coord])) {
    let d = lo.len();
    let mut p: Vec<Coord> = lo.to_vec();
    loop {
        f(&p);
        let mut a = d;
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            if p[a] < hi[a] {
                p[a] += 1;
                break;
            }
            p[a] = lo[a];
        }
    }
}

/// The box `B(k, m) = [0, k_1] x ... x [0, k_{d-1}] x [0, m]`.
///
/// `sides` are the `d-1` base side lengths and `height` the extent along
/// the last axis; all side lengths may be zero (the degenerate box is a
/// single vertex).
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct BoxSpec {
    sides: Vec<u64>,
    height: u64,
}

impl BoxSpec {
    pub fn new(d: usize, sides: Vec<u64>, height: u64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidSpec(format!("dimension {d} < 2")));
        }
        if sides.len() != d - 1 {
            return Err(Error::InvalidSpec(format!(
                "expected {} side lengths for dimension {d}, got {}",
                d - 1,
                sides.len()
            )));
        }
        Ok(BoxSpec { sides, height })
    }

    pub fn dim(&self) -> usize {
        self.sides.len() + 1
    }

    pub fn sides(&self) -> &[u64] {
        &self.sides
    }

    pub fn height(&self) -> u64 {
        self.height
    }

    /// Side lengths sorted ascending (the conventional presentation);
    /// inputs are accepted unsorted.
    pub fn canonical_sides(&self) -> Vec<u64> {
        let mut k = self.sides.clone();
        k.sort_unstable();
        k
    }

    /// Base volume `k_1 * ... * k_{d-1}`, exact.
    pub fn base_volume(&self) -> u128 {
        self.sides.iter().map(|&k| k as u128).product()
    }

    pub fn region(&self) -> Region {
        let lo = vec![0i64; self.dim()];
        let mut hi: Vec<Coord> = self.sides.iter().map(|&k| k as i64).collect();
        hi.push(self.height as i64);
        Region::new(lo, hi).expect("box region is valid")
    }

    /// Bottom face `F_0` (`x_d = 0`), encoded in `space`.
    pub fn bottom_face(&self, space: &Region) -> Result<Vec<VertexId>> {
        self.face_at(space, 0)
    }

    /// Top face `F_m` (`x_d = m`), encoded in `space`.
    pub fn top_face(&self, space: &Region) -> Result<Vec<VertexId>> {
        self.face_at(space, self.height as i64)
    }

    fn face_at(&self, space: &Region, coord: Coord) -> Result<Vec<VertexId>> {
        if space.dim() != self.dim() {
            return Err(Error::InvalidSpec(
                "face space dimension mismatch".to_string(),
            ));
        }
        let mut lo = vec![0i64; self.dim()];
        let mut hi: Vec<Coord> = self.sides.iter().map(|&k| k as i64).collect();
        hi.push(coord);
        lo[self.dim() - 1] = coord;
        let mut out = Vec::new();
        let mut ok = true;
        for_each_point(&lo, &hi, |p| match space.vertex_id(p) {
            Some(v) => out.push(v),
            None => ok = false,
        });
        if !ok {
            return Err(Error::OutOfRange(
                "box face does not fit in the given space".to_string(),
            ));
        }
        Ok(out)
    }
}

/// A box together with a margin of ambient lattice on every side. The
/// window rim plays the role of "infinity" for cut-to-infinity events.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct AmbientWindow {
    box_spec: BoxSpec,
    margin: u64,
}

impl AmbientWindow {
    pub fn new(box_spec: BoxSpec, margin: u64) -> Self {
        AmbientWindow { box_spec, margin }
    }

    /// Margin defaulting to `max(k_i, m)`.
    pub fn with_default_margin(box_spec: BoxSpec) -> Self {
        let margin = box_spec
            .sides()
            .iter()
            .copied()
            .chain(std::iter::once(box_spec.height()))
            .max()
            .unwrap_or(1)
            .max(1);
        AmbientWindow { box_spec, margin }
    }

    pub fn box_spec(&self) -> &BoxSpec {
        &self.box_spec
    }

    pub fn margin(&self) -> u64 {
        self.margin
    }

    pub fn region(&self) -> Region {
        let d = self.box_spec.dim();
        let m = self.margin as i64;
        let lo = vec![-m; d];
        let mut hi: Vec<Coord> = self
            .box_spec
            .sides()
            .iter()
            .map(|&k| k as i64 + m)
            .collect();
        hi.push(self.box_spec.height() as i64 + m);
        Region::new(lo, hi).expect("window region is valid")
    }
}

/// A region serving as id space, optionally restricted to a sub-box for
/// traversal. All graph searches in the crate go through this view.
#[derive(Copy, Clone)]
pub struct GraphView<'a> {
    pub space: &'a Region,
    pub bounds: Option<&'a Region>,
}

impl<'a> GraphView<'a> {
    pub fn whole(space: &'a Region) -> Self {
        GraphView {
            space,
            bounds: None,
        }
    }

    pub fn restricted(space: &'a Region, bounds: &'a Region) -> Self {
        debug_assert!(space.contains_region(bounds));
        GraphView {
            space,
            bounds: Some(bounds),
        }
    }

    pub fn vertex_in_bounds(&self, coords: &[Coord]) -> bool {
        match self.bounds {
            Some(b) => b.contains_point(coords),
            None => true,
        }
    }

    /// Neighbors of `v` that stay inside the bounds, in canonical order.
    pub fn neighbors_into(&self, v: VertexId, out: &mut Vec<(EdgeId, VertexId)>) {
        out.clear();
        let mut coords = vec![0; self.space.dim()];
        self.space.coords_into(v, &mut coords);
        for a in 0..self.space.dim() {
            let (lo_ok, hi_ok) = match self.bounds {
                Some(b) => (coords[a] > b.lo()[a], coords[a] < b.hi()[a]),
                None => (
                    coords[a] > self.space.lo()[a],
                    coords[a] < self.space.hi()[a],
                ),
            };
            if lo_ok {
                coords[a] -= 1;
                let e = self.space.edge_id(a, &coords).unwrap();
                let u = self.space.vertex_id(&coords).unwrap();
                coords[a] += 1;
                out.push((e, u));
            }
            if hi_ok {
                let e = self.space.edge_id(a, &coords).unwrap();
                coords[a] += 1;
                let u = self.space.vertex_id(&coords).unwrap();
                coords[a] -= 1;
                out.push((e, u));
            }
        }
    }

    /// Every edge with both endpoints inside the bounds.
    pub fn edges(&self) -> Vec<EdgeId> {
        match self.bounds {
            None => self.space.edges().collect(),
            Some(b) => {
                let mut out = Vec::new();
                let mut nbrs = Vec::new();
                for v in self.space.vertices() {
                    let coords = self.space.coords_of(v);
                    if !b.contains_point(&coords) {
                        continue;
                    }
                    self.neighbors_into(v, &mut nbrs);
                    for &(e, u) in &nbrs {
                        if u.0 > v.0 {
                            out.push(e);
                        }
                    }
                }
                out.sort_unstable();
                out
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_examples() {
        let b = BoxSpec::new(2, vec![2], 2).unwrap();
        let r = b.region();
        assert_eq!(r.vertex_count(), 9);
        assert_eq!(r.edge_count(), 12);

        let b = BoxSpec::new(3, vec![1, 1], 1).unwrap();
        let r = b.region();
        assert_eq!(r.vertex_count(), 8);
        assert_eq!(r.edge_count(), 12);

        // the degenerate box is the origin
        let b = BoxSpec::new(2, vec![0], 0).unwrap();
        let r = b.region();
        assert_eq!(r.vertex_count(), 1);
        assert_eq!(r.edge_count(), 0);
    }

    #[test]
    fn box_spec_rejects_bad_inputs() {
        assert!(BoxSpec::new(1, vec![], 0).is_err());
        assert!(BoxSpec::new(3, vec![2], 1).is_err());
    }

    #[test]
    fn faces_examples() {
        let b = BoxSpec::new(2, vec![2], 2).unwrap();
        let r = b.region();
        assert_eq!(b.bottom_face(&r).unwrap().len(), 3);
        assert_eq!(b.top_face(&r).unwrap().len(), 3);

        // m = 0: both faces coincide with the whole box
        let b = BoxSpec::new(2, vec![2], 0).unwrap();
        let r = b.region();
        assert_eq!(b.bottom_face(&r).unwrap(), b.top_face(&r).unwrap());

        let b = BoxSpec::new(3, vec![2, 2], 5).unwrap();
        let r = b.region();
        assert_eq!(b.bottom_face(&r).unwrap().len(), 9);
    }

    #[test]
    fn adjacency_modes() {
        assert!(are_adjacent(&[0, 0], &[1, 0], AdjacencyMode::ZLattice));
        assert!(!are_adjacent(&[0, 0], &[1, 1], AdjacencyMode::ZLattice));
        assert!(are_adjacent(&[0, 0], &[1, 1], AdjacencyMode::LLattice));
        assert!(!are_adjacent(&[0, 0], &[2, 0], AdjacencyMode::LLattice));
        assert!(!are_adjacent(&[0, 0], &[0, 0], AdjacencyMode::LLattice));
        // Z^d-adjacent implies L^d-adjacent
        assert!(are_adjacent(&[3, 4], &[3, 5], AdjacencyMode::LLattice));
    }

    #[test]
    fn hyperplane_examples() {
        let b = BoxSpec::new(2, vec![2], 2).unwrap();
        let r = b.region();
        let (verts, edges) = r.hyperplane(0, 2).unwrap();
        assert_eq!(verts.len(), 3);
        assert_eq!(edges.len(), 2);

        // axis d, coord 0 equals the bottom face
        let (verts, _) = r.hyperplane(1, 0).unwrap();
        let mut f0 = b.bottom_face(&r).unwrap();
        f0.sort_unstable();
        let mut verts = verts;
        verts.sort_unstable();
        assert_eq!(verts, f0);

        assert!(r.hyperplane(0, 7).is_err());

        // d = 3: a plane is a 2-D grid with both other axes' edges
        let b = BoxSpec::new(3, vec![2, 2], 2).unwrap();
        let r = b.region();
        let (verts, edges) = r.hyperplane(0, 1).unwrap();
        assert_eq!(verts.len(), 9);
        assert_eq!(edges.len(), 12);
    }

    #[test]
    fn edge_count_formula_small_boxes() {
        // per-axis formula vs. enumerated total, all boxes up to 10^4 vertices
        for d in 2..=3 {
            let side_max = if d == 2 { 9 } else { 5 };
            let mut specs = Vec::new();
            if d == 2 {
                for k in 0..=side_max {
                    for m in 0..=side_max {
                        specs.push(BoxSpec::new(2, vec![k], m).unwrap());
                    }
                }
            } else {
                for k1 in 0..=side_max {
                    for k2 in 0..=side_max {
                        for m in 0..=side_max {
                            specs.push(BoxSpec::new(3, vec![k1, k2], m).unwrap());
                        }
                    }
                }
            }
            for b in specs {
                let r = b.region();
                if r.vertex_count() > 10_000 {
                    continue;
                }
                let mut expected = 0u64;
                let mut ext: Vec<u64> = b.sides().iter().map(|&k| k + 1).collect();
                ext.push(b.height() + 1);
                for a in 0..d {
                    let mut n = ext[a] - 1;
                    for (bx, &e) in ext.iter().enumerate() {
                        if bx != a {
                            n *= e;
                        }
                    }
                    expected += n;
                    assert_eq!(r.edge_count_along(a), n);
                }
                assert_eq!(r.edge_count(), expected);
                assert_eq!(r.edges().count() as u64, expected);
            }
        }
    }

    #[test]
    fn index_round_trip() {
        let w = AmbientWindow::new(BoxSpec::new(3, vec![4, 6], 5).unwrap(), 3);
        let r = w.region();
        for v in r.vertices() {
            let p = r.coords_of(v);
            assert_eq!(r.vertex_id(&p), Some(v));
        }
        for e in r.edges() {
            let (axis, low) = r.edge_info(e);
            assert_eq!(r.edge_id(axis, &low), Some(e));
            let (u, v) = r.edge_endpoints(e);
            let pu = r.coords_of(u);
            let pv = r.coords_of(v);
            assert!(are_adjacent(&pu, &pv, AdjacencyMode::ZLattice));
        }
    }

    #[test]
    fn index_round_trip_large_window() {
        // ~750k elements, every id decoded and re-encoded
        let w = AmbientWindow::new(BoxSpec::new(2, vec![300], 300).unwrap(), 100);
        let r = w.region();
        assert!(r.vertex_count() + r.edge_count() <= 1_000_000);
        for v in r.vertices() {
            assert_eq!(r.vertex_id(&r.coords_of(v)), Some(v));
        }
        for e in r.edges() {
            let (axis, low) = r.edge_info(e);
            assert_eq!(r.edge_id(axis, &low), Some(e));
        }
    }

    #[test]
    fn canonical_sides_sorted_permutation() {
        let b = BoxSpec::new(4, vec![5, 2, 9], 1).unwrap();
        let canon = b.canonical_sides();
        assert_eq!(canon, vec![2, 5, 9]);
        let mut orig = b.sides().to_vec();
        orig.sort_unstable();
        assert_eq!(orig, canon);
        assert_eq!(b.base_volume(), 90);
    }

    #[test]
    fn graph_view_bounds() {
        let w = AmbientWindow::new(BoxSpec::new(2, vec![2], 2).unwrap(), 2);
        let space = w.region();
        let inner = w.box_spec().region();
        let view = GraphView::restricted(&space, &inner);
        assert_eq!(view.edges().len(), 12);
        let corner = space.vertex_id(&[0, 0]).unwrap();
        let mut nbrs = Vec::new();
        view.neighbors_into(corner, &mut nbrs);
        // inside the box only up/right remain
        assert_eq!(nbrs.len(), 2);
    }

    #[test]
    fn l_neighbors_count() {
        let r = Region::new(vec![0, 0], vec![4, 4]).unwrap();
        let center = r.vertex_id(&[2, 2]).unwrap();
        assert_eq!(r.l_neighbors(center).len(), 8);
        let corner = r.vertex_id(&[0, 0]).unwrap();
        assert_eq!(r.l_neighbors(corner).len(), 3);
    }
}
