//! Causal structure on the lattice: the light-cone graph, regions as site
//! sets, and the region operators `J±`, `D±`, `O⊥`, `◁`, double cones and
//! truncated diamonds.
//!
//! Interior and closure are one-cell erosion and dilation with the cross
//! neighbourhood (one step in `t` or in `x`, wrapping in `x`; neighbours
//! beyond the first or last slice are ignored).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Lattice, MetricModel};

/// Directed graph from each slice to the next. Site `(i, j)` connects to
/// `(i + 1, k)` when `|k − j| ≤ ⌈s · Δt / Δx⌉` (at least one cell), where
/// `s` is the larger light speed of the two endpoints.
#[derive(Clone, Debug)]
pub struct CausalGraph {
    pub lattice: Lattice,
    succ_off: Vec<u32>,
    succ: Vec<u32>,
    pred_off: Vec<u32>,
    pred: Vec<u32>,
}

fn edge_reach(speed: f64, lattice: &Lattice) -> i64 {
    ((speed * lattice.dt / lattice.dx - 1e-12).ceil() as i64).max(1)
}

impl CausalGraph {
    pub fn new(model: &MetricModel, lattice: &Lattice) -> Self {
        let (nt, nx) = (lattice.nt, lattice.nx);
        let speed: Vec<f64> = (0..lattice.len())
            .map(|s| {
                let (i, j) = lattice.coords(s);
                model.light_speed(lattice.t(i), lattice.x(j))
            })
            .collect();
        let max_reach = speed.iter().map(|&s| edge_reach(s, lattice)).max().unwrap_or(1);
        let r = max_reach.min(nx as i64 / 2);
        let mut lists: Vec<Vec<u32>> = vec![Vec::new(); lattice.len()];
        for i in 0..nt.saturating_sub(1) {
            for j in 0..nx {
                let s0 = lattice.site(i, j);
                let out = &mut lists[s0];
                for d in -r..=r {
                    let k = lattice.wrap(j, d);
                    let s1 = lattice.site(i + 1, k);
                    if d.abs() <= edge_reach(speed[s0].max(speed[s1]), lattice) && !out.contains(&(s1 as u32)) {
                        out.push(s1 as u32);
                    }
                }
                out.sort_unstable();
            }
        }
        let (succ_off, succ) = csr(&lists);
        let mut rev: Vec<Vec<u32>> = vec![Vec::new(); lattice.len()];
        for (s, outs) in lists.iter().enumerate() {
            for &t in outs {
                rev[t as usize].push(s as u32);
            }
        }
        let (pred_off, pred) = csr(&rev);
        Self { lattice: lattice.clone(), succ_off, succ, pred_off, pred }
    }

    pub fn successors(&self, site: usize) -> &[u32] {
        &self.succ[self.succ_off[site] as usize..self.succ_off[site + 1] as usize]
    }

    pub fn predecessors(&self, site: usize) -> &[u32] {
        &self.pred[self.pred_off[site] as usize..self.pred_off[site + 1] as usize]
    }

    pub fn empty_region(&self) -> Region {
        Region::empty(&self.lattice)
    }
}

fn csr(lists: &[Vec<u32>]) -> (Vec<u32>, Vec<u32>) {
    let mut off = Vec::with_capacity(lists.len() + 1);
    let mut flat = Vec::new();
    off.push(0);
    for l in lists {
        flat.extend_from_slice(l);
        off.push(flat.len() as u32);
    }
    (off, flat)
}

/// Symbolic origin of a region, kept for reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RegionDescriptor {
    DoubleCone { future_tip: usize, past_tip: usize },
    TruncatedDiamond { slice_lo: usize, slice_hi: usize },
    Slab { slice_lo: usize, slice_hi: usize, center: usize, half_width: usize },
}

/// Set of lattice sites, stored as a mask. Serialised as a sorted site list.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(into = "RegionRecord", try_from = "RegionRecord")]
pub struct Region {
    pub nt: usize,
    pub nx: usize,
    mask: Vec<bool>,
    pub descriptor: Option<RegionDescriptor>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegionRecord {
    pub nt: usize,
    pub nx: usize,
    pub sites: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub descriptor: Option<RegionDescriptor>,
}

impl From<Region> for RegionRecord {
    fn from(r: Region) -> Self {
        RegionRecord { nt: r.nt, nx: r.nx, sites: r.sites(), descriptor: r.descriptor }
    }
}

impl TryFrom<RegionRecord> for Region {
    type Error = String;
    fn try_from(r: RegionRecord) -> std::result::Result<Self, String> {
        let mut mask = vec![false; r.nt * r.nx];
        for s in r.sites {
            *mask.get_mut(s).ok_or_else(|| format!("site {s} outside {}×{} lattice", r.nt, r.nx))? = true;
        }
        Ok(Region { nt: r.nt, nx: r.nx, mask, descriptor: r.descriptor })
    }
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.nt == other.nt && self.nx == other.nx && self.mask == other.mask
    }
}

impl Eq for Region {}

impl Region {
    pub fn empty(lattice: &Lattice) -> Self {
        Self { nt: lattice.nt, nx: lattice.nx, mask: vec![false; lattice.len()], descriptor: None }
    }

    pub fn full(lattice: &Lattice) -> Self {
        Self { nt: lattice.nt, nx: lattice.nx, mask: vec![true; lattice.len()], descriptor: None }
    }

    pub fn from_parts(nt: usize, nx: usize, mask: Vec<bool>) -> Self {
        assert_eq!(mask.len(), nt * nx, "mask size does not match lattice");
        Self { nt, nx, mask, descriptor: None }
    }

    pub fn from_mask(lattice: &Lattice, mask: Vec<bool>) -> Self {
        assert_eq!(mask.len(), lattice.len(), "mask size does not match lattice");
        Self { nt: lattice.nt, nx: lattice.nx, mask, descriptor: None }
    }

    pub fn from_sites(lattice: &Lattice, sites: impl IntoIterator<Item = usize>) -> Self {
        let mut r = Self::empty(lattice);
        for s in sites {
            r.mask[s] = true;
        }
        r
    }

    pub fn single(lattice: &Lattice, site: usize) -> Self {
        Self::from_sites(lattice, [site])
    }

    /// All sites on slices `i_lo..=i_hi`.
    pub fn slab(lattice: &Lattice, i_lo: usize, i_hi: usize) -> Self {
        let mut r = Self::empty(lattice);
        for i in i_lo..=i_hi.min(lattice.nt - 1) {
            for j in 0..lattice.nx {
                r.mask[lattice.site(i, j)] = true;
            }
        }
        r
    }

    /// Sites on slices `i_lo..=i_hi` within `half_width` columns of `center`.
    pub fn arc_slab(lattice: &Lattice, i_lo: usize, i_hi: usize, center: usize, half_width: usize) -> Self {
        let mut r = Self::empty(lattice);
        let hw = half_width.min(lattice.nx / 2) as i64;
        for i in i_lo..=i_hi.min(lattice.nt - 1) {
            for d in -hw..=hw {
                r.mask[lattice.site(i, lattice.wrap(center, d))] = true;
            }
        }
        r.descriptor = Some(RegionDescriptor::Slab { slice_lo: i_lo, slice_hi: i_hi, center, half_width });
        r
    }

    pub fn with_descriptor(mut self, d: RegionDescriptor) -> Self {
        self.descriptor = Some(d);
        self
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, site: usize) -> bool {
        self.mask[site]
    }

    pub fn insert(&mut self, site: usize) {
        self.mask[site] = true;
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    /// Sorted site indices.
    pub fn sites(&self) -> Vec<usize> {
        self.mask.iter().enumerate().filter(|(_, &b)| b).map(|(s, _)| s).collect()
    }

    pub fn union(&self, other: &Region) -> Region {
        self.zip(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Region) -> Region {
        self.zip(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &Region) -> Region {
        self.zip(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> Region {
        Region { nt: self.nt, nx: self.nx, mask: self.mask.iter().map(|b| !b).collect(), descriptor: None }
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }

    pub fn is_disjoint(&self, other: &Region) -> bool {
        self.mask.iter().zip(&other.mask).all(|(&a, &b)| !(a && b))
    }

    fn zip(&self, other: &Region, f: impl Fn(bool, bool) -> bool) -> Region {
        assert!(self.nt == other.nt && self.nx == other.nx, "regions live on different lattices");
        let mask = self.mask.iter().zip(&other.mask).map(|(&a, &b)| f(a, b)).collect();
        Region { nt: self.nt, nx: self.nx, mask, descriptor: None }
    }

    /// Smallest and largest occupied slice.
    pub fn slice_range(&self) -> Option<(usize, usize)> {
        let rows: Vec<usize> = (0..self.nt).filter(|&i| self.mask[i * self.nx..(i + 1) * self.nx].iter().any(|&b| b)).collect();
        Some((*rows.first()?, *rows.last()?))
    }

    /// Occupied columns on slice `i`.
    pub fn columns_on(&self, i: usize) -> Vec<usize> {
        (0..self.nx).filter(|&j| self.mask[i * self.nx + j]).collect()
    }

    /// Image under `i ↦ nt − 1 − i`.
    pub fn time_reflected(&self) -> Region {
        let mut mask = vec![false; self.mask.len()];
        for i in 0..self.nt {
            let src = &self.mask[i * self.nx..(i + 1) * self.nx];
            let k = self.nt - 1 - i;
            mask[k * self.nx..(k + 1) * self.nx].copy_from_slice(src);
        }
        Region { nt: self.nt, nx: self.nx, mask, descriptor: None }
    }

    /// One-cell erosion.
    pub fn interior(&self) -> Region {
        let mut out = vec![false; self.mask.len()];
        for i in 0..self.nt {
            for j in 0..self.nx {
                let s = i * self.nx + j;
                out[s] = self.mask[s] && self.neighbours(i, j).all(|n| self.mask[n]);
            }
        }
        Region { nt: self.nt, nx: self.nx, mask: out, descriptor: None }
    }

    /// One-cell dilation.
    pub fn closure(&self) -> Region {
        let mut out = self.mask.clone();
        for i in 0..self.nt {
            for j in 0..self.nx {
                let s = i * self.nx + j;
                if !out[s] && self.neighbours(i, j).any(|n| self.mask[n]) {
                    out[s] = true;
                }
            }
        }
        Region { nt: self.nt, nx: self.nx, mask: out, descriptor: None }
    }

    fn neighbours(&self, i: usize, j: usize) -> impl Iterator<Item = usize> + '_ {
        let nx = self.nx;
        let left = i * nx + (j + nx - 1) % nx;
        let right = i * nx + (j + 1) % nx;
        let down = (i > 0).then(|| (i - 1) * nx + j);
        let up = (i + 1 < self.nt).then(|| (i + 1) * nx + j);
        [Some(left), Some(right), down, up].into_iter().flatten()
    }
}

/// Causal future `J⁺(O)`, including `O`.
pub fn future(graph: &CausalGraph, o: &Region) -> Region {
    let mut r = o.clone();
    r.descriptor = None;
    let n = graph.lattice.len();
    for s in 0..n {
        if r.mask[s] {
            for &t in graph.successors(s) {
                r.mask[t as usize] = true;
            }
        }
    }
    r
}

/// Causal past `J⁻(O)`, including `O`.
pub fn past(graph: &CausalGraph, o: &Region) -> Region {
    let mut r = o.clone();
    r.descriptor = None;
    for s in (0..graph.lattice.len()).rev() {
        if r.mask[s] {
            for &t in graph.predecessors(s) {
                r.mask[t as usize] = true;
            }
        }
    }
    r
}

/// `J(O) = J⁺(O) ∪ J⁻(O)`.
pub fn causal_shadow(graph: &CausalGraph, o: &Region) -> Region {
    future(graph, o).union(&past(graph, o))
}

/// `D⁺(O)`: sites every maximal backward path of which meets `O`.
pub fn future_domain(graph: &CausalGraph, o: &Region) -> Region {
    let n = graph.lattice.len();
    let mut d = vec![false; n];
    for s in 0..n {
        d[s] = o.mask[s] || {
            let preds = graph.predecessors(s);
            !preds.is_empty() && preds.iter().all(|&p| d[p as usize])
        };
    }
    Region { nt: o.nt, nx: o.nx, mask: d, descriptor: None }
}

/// `D⁻(O)`: sites every maximal forward path of which meets `O`.
pub fn past_domain(graph: &CausalGraph, o: &Region) -> Region {
    let n = graph.lattice.len();
    let mut d = vec![false; n];
    for s in (0..n).rev() {
        d[s] = o.mask[s] || {
            let succ = graph.successors(s);
            !succ.is_empty() && succ.iter().all(|&p| d[p as usize])
        };
    }
    Region { nt: o.nt, nx: o.nx, mask: d, descriptor: None }
}

/// `D(O) = D⁺(O) ∪ D⁻(O)`.
pub fn domain_of_dependence(graph: &CausalGraph, o: &Region) -> Region {
    future_domain(graph, o).union(&past_domain(graph, o))
}

/// `O⊥`: sites outside the one-cell closure of `J(O)`.
pub fn causal_complement(graph: &CausalGraph, o: &Region) -> Region {
    causal_shadow(graph, o).closure().complement()
}

/// The relation `O1 ◁ O`: `O1 ⊆ int D(O)`.
pub fn causally_determined(graph: &CausalGraph, o1: &Region, o: &Region) -> bool {
    o1.is_subset(&domain_of_dependence(graph, o).interior())
}

/// `int(J⁻(p) ∩ J⁺(q))` for a future tip `p` and past tip `q`.
pub fn double_cone(graph: &CausalGraph, p: usize, q: usize) -> Result<Region> {
    let lat = &graph.lattice;
    let jq = future(graph, &Region::single(lat, q));
    if !jq.interior().contains(p) {
        let (pi, pj) = lat.coords(p);
        let (qi, qj) = lat.coords(q);
        return Err(Error::Domain(format!(
            "double cone tip ({pi}, {pj}) is not in the interior of the causal future of ({qi}, {qj})"
        )));
    }
    let jp = past(graph, &Region::single(lat, p));
    Ok(jp
        .intersection(&jq)
        .interior()
        .with_descriptor(RegionDescriptor::DoubleCone { future_tip: p, past_tip: q }))
}

/// `int(D(base) ∩ {i_lo ≤ i ≤ i_hi})`.
pub fn truncated_diamond(graph: &CausalGraph, base: &Region, slice_lo: usize, slice_hi: usize) -> Result<Region> {
    let lat = &graph.lattice;
    if slice_lo > slice_hi || slice_hi >= lat.nt {
        return Err(Error::Domain(format!("bad slice range {slice_lo}..={slice_hi} for {} slices", lat.nt)));
    }
    let slab = Region::slab(lat, slice_lo, slice_hi);
    Ok(domain_of_dependence(graph, base)
        .intersection(&slab)
        .interior()
        .with_descriptor(RegionDescriptor::TruncatedDiamond { slice_lo, slice_hi }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_lattice, build_lattice_with_cfl, SandwichParams};
    use std::collections::VecDeque;

    /// Minkowski on t ∈ [−2, 2], x ∈ [0, 6.4), Δ = 0.05.
    fn mink() -> (MetricModel, Lattice, CausalGraph) {
        let m = MetricModel::minkowski(-2.0, 2.0, 6.4);
        let l = build_lattice(&m, 81, 128).unwrap();
        let g = CausalGraph::new(&m, &l);
        (m, l, g)
    }

    fn at(l: &Lattice, t: f64, x: f64) -> usize {
        l.nearest_site(t, x + 3.2)
    }

    fn bfs_future(g: &CausalGraph, start: usize) -> Vec<bool> {
        let mut seen = vec![false; g.lattice.len()];
        let mut q = VecDeque::from([start]);
        seen[start] = true;
        while let Some(s) = q.pop_front() {
            for &t in g.successors(s) {
                if !seen[t as usize] {
                    seen[t as usize] = true;
                    q.push_back(t as usize);
                }
            }
        }
        seen
    }

    #[test]
    fn minkowski_successors_are_three_cells() {
        let m = MetricModel::minkowski(0.0, 15.0 / 16.0, 1.0);
        let l = build_lattice(&m, 16, 16).unwrap();
        let g = CausalGraph::new(&m, &l);
        assert_eq!(g.successors(l.site(3, 0)), &[l.site(4, 0) as u32, l.site(4, 1) as u32, l.site(4, 15) as u32]);
        assert!(g.successors(l.site(15, 4)).is_empty());
    }

    #[test]
    fn future_of_origin() {
        let (_, l, g) = mink();
        let j = future(&g, &Region::single(&l, at(&l, 0.0, 0.0)));
        assert!(j.contains(at(&l, 0.5, 0.3)));
        assert!(!j.contains(at(&l, 0.5, 0.7)));
        assert_eq!(future(&g, &j), j);
    }

    #[test]
    fn future_matches_bfs_on_sandwich() {
        let m = MetricModel::sandwich(SandwichParams::default(), 0.0, 4.0, 4.0).unwrap();
        let l = build_lattice_with_cfl(&m, 101, 80, 0.95).unwrap();
        let g = CausalGraph::new(&m, &l);
        let s = l.nearest_site(2.0, 1.3);
        let bfs = bfs_future(&g, s);
        assert_eq!(future(&g, &Region::single(&l, s)).mask(), &bfs[..]);
    }

    #[test]
    fn dependence_domain_of_slab() {
        let (_, l, g) = mink();
        let i0 = l.slice_of(0.0);
        let mut o = Region::empty(&l);
        for j in 0..l.nx {
            if (l.x(j) - 3.2).abs() <= 1.0 + 1e-9 {
                o.insert(l.site(i0, j));
            }
        }
        let dp = future_domain(&g, &o);
        assert!(dp.contains(at(&l, 0.5, 0.0)));
        assert!(!dp.contains(at(&l, 0.5, 0.9)));
        let full = Region::slab(&l, i0, i0);
        assert_eq!(domain_of_dependence(&g, &full), Region::full(&l));
    }

    #[test]
    fn complement_of_point_and_slice() {
        let (_, l, g) = mink();
        let perp = causal_complement(&g, &Region::single(&l, at(&l, 0.0, 0.0)));
        assert!(perp.contains(at(&l, 0.0, 1.0)));
        assert!(!perp.contains(at(&l, 1.0, 0.0)));
        let i0 = l.slice_of(0.0);
        assert!(causal_complement(&g, &Region::slab(&l, i0, i0)).is_empty());
    }

    #[test]
    fn determination_examples() {
        let (_, l, g) = mink();
        let i0 = l.slice_of(0.0);
        let mut o = Region::empty(&l);
        for j in 0..l.nx {
            if (l.x(j) - 3.2).abs() <= 2.0 + 1e-9 {
                o.insert(l.site(i0, j));
            }
        }
        assert!(causally_determined(&g, &Region::single(&l, at(&l, 0.5, 0.0)), &o));
        assert!(!causally_determined(&g, &Region::single(&l, at(&l, 0.5, 1.9)), &o));
    }

    #[test]
    fn double_cone_is_a_diamond() {
        let (_, l, g) = mink();
        let dc = double_cone(&g, at(&l, 1.0, 0.0), at(&l, -1.0, 0.0)).unwrap();
        for s in 0..l.len() {
            let (i, j) = l.coords(s);
            let r = l.t(i).abs() + (l.x(j) - 3.2).abs();
            if r < 1.0 - 2.5 * l.dx {
                assert!(dc.contains(s), "({i},{j}) missing");
            }
            if r > 1.0 {
                assert!(!dc.contains(s), "({i},{j}) spurious");
            }
        }
        let p = at(&l, 0.0, 0.0);
        assert!(matches!(double_cone(&g, p, p), Err(Error::Domain(_))));
    }

    #[test]
    fn truncated_diamond_with_full_base_is_open_slab() {
        let (_, l, g) = mink();
        let i0 = l.slice_of(0.0);
        let (lo, hi) = (l.slice_of(-0.5), l.slice_of(0.5));
        let td = truncated_diamond(&g, &Region::slab(&l, i0, i0), lo, hi).unwrap();
        assert_eq!(td, Region::slab(&l, lo + 1, hi - 1));
    }

    #[test]
    fn point_complement_is_symmetric() {
        let (_, l, g) = mink();
        let mut state = 12345_u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as usize % l.len()
        };
        for _ in 0..100 {
            let (p, q) = (next(), next());
            let a = causal_complement(&g, &Region::single(&l, q)).contains(p);
            let b = causal_complement(&g, &Region::single(&l, p)).contains(q);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn reflection_duality() {
        let m = MetricModel::sandwich(SandwichParams::default(), 0.0, 4.0, 4.0).unwrap();
        let l = build_lattice_with_cfl(&m, 101, 80, 0.95).unwrap();
        let g = CausalGraph::new(&m, &l);
        let gr = CausalGraph::new(&m.time_reflected(), &l);
        let o = Region::from_sites(&l, [l.nearest_site(1.5, 0.4), l.nearest_site(2.5, 3.0)]);
        assert_eq!(future(&g, &o).time_reflected(), past(&gr, &o.time_reflected()));
        assert_eq!(future_domain(&g, &o).time_reflected(), past_domain(&gr, &o.time_reflected()));
    }

    #[test]
    fn region_round_trips_through_json() {
        let (_, l, _) = mink();
        let r = Region::arc_slab(&l, 3, 5, 10, 2);
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("\"sites\":["));
        let back: Region = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.descriptor, r.descriptor);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn small() -> (Lattice, CausalGraph) {
            let m = MetricModel::minkowski(0.0, 15.0 / 16.0, 1.0);
            let l = build_lattice(&m, 16, 16).unwrap();
            let g = CausalGraph::new(&m, &l);
            (l, g)
        }

        proptest! {
            #[test]
            fn operators_are_monotone(a in proptest::collection::vec(0usize..256, 1..6),
                                      b in proptest::collection::vec(0usize..256, 0..6)) {
                let (l, g) = small();
                let o1 = Region::from_sites(&l, a.iter().copied());
                let o2 = o1.union(&Region::from_sites(&l, b.iter().copied()));
                prop_assert!(o1.is_subset(&future(&g, &o1)));
                prop_assert!(future(&g, &o1).is_subset(&future(&g, &o2)));
                prop_assert!(past(&g, &o1).is_subset(&past(&g, &o2)));
                prop_assert!(domain_of_dependence(&g, &o1).is_subset(&domain_of_dependence(&g, &o2)));
                prop_assert!(causal_complement(&g, &o2).is_subset(&causal_complement(&g, &o1)));
                prop_assert_eq!(past(&g, &past(&g, &o1)), past(&g, &o1));
            }
        }
    }
}
