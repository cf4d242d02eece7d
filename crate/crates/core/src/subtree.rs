//! Recovery of the embedded subtree spanned by a vertex sample.
//!
//! Given the distances `d(x, v)` for every sampled `x` and every vertex `v`,
//! [`recover`] reconstructs the minimal subtree `T_X` of the hidden tree that
//! contains the sample, keeping every intermediate vertex, together with its
//! edge lengths and the point where each outside vertex attaches to it.
//!
//! Everything is decided with exact path-membership tests
//! `d(a, w) + d(w, b) == d(a, b)` on already-queried distances:
//!
//! * Root the subtree at the first sample `x0`. A vertex `w` is in `T_X`
//!   iff it lies on the path from `x0` to some sampled `x`; `T_X` is the
//!   union of those paths.
//! * Ordering the vertices of one such path by `d(x0, ·)` gives its edges
//!   directly: two vertices of `T_X` are adjacent iff no vertex of `T_X`
//!   lies strictly between them, and on a single path that means
//!   consecutive. Edge lengths are differences of `d(x0, ·)`.
//! * For an outside vertex `v`, the path from `x0` towards `v` leaves `T_X`
//!   at the attach point `a(v)`. Against every sampled `x`, the branch point
//!   of `v` off the `x0`–`x` path sits at distance
//!   `(d(x0, v) + d(x0, x) - d(x, v)) / 2` from `x0`; the largest of these is
//!   `d(x0, a(v))`, and `a(v)` is the vertex at that depth on the maximising
//!   path.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::oracle::DistanceOracle;
use crate::scalar::Weight;
use crate::tree::{Edge, VertexId};

const NONE: u32 = u32::MAX;

/// The recovered subtree `T_X` with its attach map.
#[derive(Clone, Debug)]
pub struct SpannedSubtree<W> {
    n: usize,
    sample: Vec<VertexId>,
    // rows[i][v] = d(sample[i], v)
    rows: Vec<Vec<W>>,
    vertices: Vec<VertexId>,
    // global index -> local index in `vertices`, NONE when outside
    local: Vec<u32>,
    in_sample: Vec<bool>,
    // local index based, rooted at sample[0]
    up: Vec<Vec<u32>>,
    hops: Vec<u32>,
    adj: Vec<Vec<u32>>,
    edges: Vec<Edge<W>>,
    // global index -> (anchor, d(anchor, v)) for outside vertices
    attach: Vec<Option<(VertexId, W)>>,
    anchored: Vec<u32>,
}

/// Distinct pairs queried by [`recover`] on a fresh oracle:
/// `k(n - k) + C(k, 2)` for a sample of `k` distinct vertices.
pub fn recovery_query_count(n: usize, k: usize) -> usize {
    k * (n - k) + k * k.saturating_sub(1) / 2
}

/// Query `d(x, v)` for all `x` in `sample`, `v` in `V`, and rebuild `T_X`.
pub fn recover<W: Weight>(
    oracle: &DistanceOracle<'_, W>,
    sample: &[VertexId],
) -> Result<SpannedSubtree<W>> {
    let n = oracle.n();
    if sample.is_empty() {
        return Err(Error::Precondition("sample must be non-empty".into()));
    }
    let mut in_sample = vec![false; n];
    for &x in sample {
        if x.0 == 0 || x.0 as usize > n {
            return Err(Error::InvalidVertex { id: x.0 as u64, n });
        }
        if std::mem::replace(&mut in_sample[x.index()], true) {
            return Err(Error::Precondition(format!("vertex {x} sampled twice")));
        }
    }

    let rows: Vec<Vec<W>> = sample
        .iter()
        .map(|&x| {
            (0..n)
                .map(|v| oracle.distance(x, VertexId::from_index(v)))
                .collect::<Result<Vec<W>>>()
        })
        .collect::<Result<_>>()?;
    let root = sample[0].index();
    let r0 = &rows[0];

    // Vertex set and parent links from the x0 -> x paths.
    let mut parent = vec![NONE; n];
    let mut member = vec![false; n];
    member[root] = true;
    parent[root] = root as u32;
    let mut chain: Vec<usize> = Vec::new();
    for (i, &x) in sample.iter().enumerate().skip(1) {
        let target = r0[x.index()];
        if parent[x.index()] != NONE {
            // already inside a recovered path; its own path adds nothing new
            continue;
        }
        let row = &rows[i];
        chain.clear();
        chain.extend((0..n).filter(|&w| r0[w] + row[w] == target));
        chain.sort_unstable_by_key(|&w| r0[w]);
        debug_assert_eq!(chain.first(), Some(&root));
        for pair in chain.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            member[b] = true;
            if parent[b] == NONE {
                parent[b] = a as u32;
            }
        }
    }

    let vertices: Vec<VertexId> = (0..n)
        .filter(|&w| member[w])
        .map(VertexId::from_index)
        .collect();
    let mut local = vec![NONE; n];
    for (i, v) in vertices.iter().enumerate() {
        local[v.index()] = i as u32;
    }
    let m = vertices.len();

    let mut edges = Vec::with_capacity(m.saturating_sub(1));
    let mut adj = vec![Vec::new(); m];
    let mut lparent = vec![0u32; m];
    for (i, v) in vertices.iter().enumerate() {
        let w = v.index();
        let p = parent[w] as usize;
        lparent[i] = local[p];
        if w != root {
            let (a, b) = (p.min(w), p.max(w));
            edges.push((
                VertexId::from_index(a),
                VertexId::from_index(b),
                r0[w] - r0[p],
            ));
            adj[i].push(local[p]);
            adj[local[p] as usize].push(i as u32);
        }
    }
    edges.sort_unstable_by_key(|&(a, b, _)| (a, b));

    // hop depth, filled in order of increasing distance from the root
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_unstable_by_key(|&i| r0[vertices[i].index()]);
    let mut hops = vec![0u32; m];
    for &i in &order {
        let p = lparent[i] as usize;
        if p != i {
            hops[i] = hops[p] + 1;
        }
    }
    let levels = (usize::BITS - m.leading_zeros()).max(1) as usize;
    let mut up = vec![lparent];
    for k in 1..levels {
        let prev = &up[k - 1];
        let next = (0..m).map(|v| prev[prev[v] as usize]).collect();
        up.push(next);
    }

    let mut out = SpannedSubtree {
        n,
        sample: sample.to_vec(),
        rows,
        vertices,
        local,
        in_sample,
        up,
        hops,
        adj,
        edges,
        attach: vec![None; n],
        anchored: vec![0; m],
    };

    for v in 0..n {
        if out.local[v] != NONE {
            continue;
        }
        let r0 = &out.rows[0];
        let (mut best, mut best_i) = (W::zero(), 0usize);
        for (i, x) in out.sample.iter().enumerate().skip(1) {
            let t = (r0[v] + r0[x.index()] - out.rows[i][v]).half();
            if t > best {
                best = t;
                best_i = i;
            }
        }
        let from = out.local[out.sample[best_i].index()];
        let a = out.ancestor_at(from, best);
        let anchor = out.vertices[a as usize];
        out.attach[v] = Some((anchor, r0[v] - best));
        out.anchored[a as usize] += 1;
    }
    Ok(out)
}

impl<W: Weight> SpannedSubtree<W> {
    fn root_dist(&self, local: u32) -> W {
        self.rows[0][self.vertices[local as usize].index()]
    }

    /// The ancestor of `from` (towards the root) at distance `t` from the root.
    fn ancestor_at(&self, mut from: u32, t: W) -> u32 {
        for k in (0..self.up.len()).rev() {
            let p = self.up[k][from as usize];
            if self.root_dist(p) >= t {
                from = p;
            }
        }
        debug_assert!(self.root_dist(from) == t);
        from
    }

    fn lca(&self, a: u32, b: u32) -> u32 {
        let (mut a, mut b) = if self.hops[a as usize] >= self.hops[b as usize] {
            (a, b)
        } else {
            (b, a)
        };
        let mut diff = self.hops[a as usize] - self.hops[b as usize];
        let mut k = 0;
        while diff > 0 {
            if diff & 1 == 1 {
                a = self.up[k][a as usize];
            }
            diff >>= 1;
            k += 1;
        }
        if a == b {
            return a;
        }
        for k in (0..self.up.len()).rev() {
            let (pa, pb) = (self.up[k][a as usize], self.up[k][b as usize]);
            if pa != pb {
                a = pa;
                b = pb;
            }
        }
        self.up[0][a as usize]
    }

    fn require_member(&self, v: VertexId) -> Result<u32> {
        if v.0 == 0 || v.0 as usize > self.n {
            return Err(Error::InvalidVertex {
                id: v.0 as u64,
                n: self.n,
            });
        }
        match self.local[v.index()] {
            NONE => Err(Error::Precondition(format!("{v} is not in the subtree"))),
            l => Ok(l),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sample(&self) -> &[VertexId] {
        &self.sample
    }

    /// `V(T_X)`, sorted by id.
    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    /// `E(T_X)` as `(u, v, length)` with `u < v`, sorted.
    pub fn edges(&self) -> &[Edge<W>] {
        &self.edges
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v.0 != 0 && v.0 as usize <= self.n && self.local[v.index()] != NONE
    }

    pub fn is_sampled(&self, v: VertexId) -> bool {
        v.0 != 0 && v.0 as usize <= self.n && self.in_sample[v.index()]
    }

    /// `(a(v), d(a(v), v))` for `v` outside the subtree, `None` inside it.
    pub fn attach(&self, v: VertexId) -> Option<(VertexId, W)> {
        self.attach.get(v.index()).copied().flatten()
    }

    pub fn subtree_degree(&self, v: VertexId) -> Result<usize> {
        let l = self.require_member(v)?;
        Ok(self.adj[l as usize].len())
    }

    /// Leaves of `T_X` (degree one inside the subtree).
    pub fn leaves(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices
            .iter()
            .zip(&self.adj)
            .filter(|(_, a)| a.len() == 1)
            .map(|(&v, _)| v)
    }

    /// Recovered `d(u, v)` for `u` in `T_X` and any `v`, with no new queries.
    pub fn distance(&self, u: VertexId, v: VertexId) -> Result<W> {
        let lu = self.require_member(u)?;
        if v.0 == 0 || v.0 as usize > self.n {
            return Err(Error::InvalidVertex {
                id: v.0 as u64,
                n: self.n,
            });
        }
        let (target, extra) = match self.attach[v.index()] {
            Some((a, d)) => (self.local[a.index()], d),
            None => (self.local[v.index()], W::zero()),
        };
        let c = self.lca(lu, target);
        let inside = self.root_dist(lu) + self.root_dist(target)
            - self.root_dist(c)
            - self.root_dist(c);
        Ok(inside + extra)
    }

    /// Number of vertices on the `u`–`v` path, for `u, v` in `T_X`.
    pub fn ell(&self, u: VertexId, v: VertexId) -> Result<usize> {
        let (a, b) = (self.require_member(u)?, self.require_member(v)?);
        let c = self.lca(a, b);
        let h = |x: u32| self.hops[x as usize] as usize;
        Ok(h(a) + h(b) - 2 * h(c) + 1)
    }

    /// For a leaf `v` of `T_X`: whether `v` is also a leaf of the full tree.
    ///
    /// A leaf of `T_X` has further neighbours in the tree exactly when some
    /// outside vertex attaches to it.
    pub fn is_leaf_of_t(&self, v: VertexId) -> Result<bool> {
        let l = self.require_member(v)?;
        if self.adj[l as usize].len() != 1 {
            return Err(Error::Precondition(format!("{v} is not a leaf of the subtree")));
        }
        Ok(self.anchored[l as usize] == 0)
    }

    /// `|X ∩ N_T(v)|` for `v` in `T_X`.
    ///
    /// A sampled `x` is a tree neighbour of `v` iff nothing lies strictly
    /// between them, and the whole `x`–`v` path is inside `T_X`, so this is
    /// the number of sampled subtree neighbours.
    pub fn sampled_neighbor_count(&self, v: VertexId) -> Result<usize> {
        let l = self.require_member(v)?;
        Ok(self.adj[l as usize]
            .iter()
            .filter(|&&y| self.in_sample[self.vertices[y as usize].index()])
            .count())
    }

    /// Number of outside vertices whose attach point is `v`.
    pub fn anchored_count(&self, v: VertexId) -> Result<usize> {
        let l = self.require_member(v)?;
        Ok(self.anchored[l as usize] as usize)
    }

    /// Tree text format (`m`, then `u v length` lines) followed by an
    /// `attach` section of `v anchor dist_quanta` lines.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.vertices.len());
        for (u, v, w) in &self.edges {
            let _ = writeln!(s, "{u} {v} {w}");
        }
        s.push_str("attach\n");
        for v in 0..self.n {
            if let Some((a, d)) = self.attach[v] {
                let _ = writeln!(s, "{} {a} {d}", VertexId::from_index(v));
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_tree, Family, WeightScheme};
    use crate::tree::WeightedTree;
    use std::collections::BTreeSet;

    fn ids(xs: &[u32]) -> Vec<VertexId> {
        xs.iter().map(|&x| VertexId(x)).collect()
    }

    fn unit_tree(n: usize, edges: &[(u32, u32)]) -> WeightedTree<u64> {
        WeightedTree::new(
            n,
            edges.iter().map(|&(a, b)| (VertexId(a), VertexId(b), 1)).collect(),
        )
        .unwrap()
    }

    fn path(n: u32) -> WeightedTree<u64> {
        let e: Vec<(u32, u32)> = (1..n).map(|i| (i, i + 1)).collect();
        unit_tree(n as usize, &e)
    }

    fn star(n: u32) -> WeightedTree<u64> {
        let e: Vec<(u32, u32)> = (2..=n).map(|i| (1, i)).collect();
        unit_tree(n as usize, &e)
    }

    #[test]
    fn path_endpoints_span_everything() {
        let t = path(5);
        let o = DistanceOracle::new(&t);
        let s = recover(&o, &ids(&[1, 5])).unwrap();
        assert_eq!(s.vertices(), ids(&[1, 2, 3, 4, 5]).as_slice());
        let e: Vec<(u32, u32, u64)> = s.edges().iter().map(|&(a, b, w)| (a.0, b.0, w)).collect();
        assert_eq!(e, vec![(1, 2, 1), (2, 3, 1), (3, 4, 1), (4, 5, 1)]);
        assert!((1..=5).all(|v| s.attach(VertexId(v)).is_none()));
        assert_eq!(o.query_count(), recovery_query_count(5, 2));
    }

    #[test]
    fn path_prefix_attach_points() {
        let t = path(5);
        let o = DistanceOracle::new(&t);
        let s = recover(&o, &ids(&[1, 3])).unwrap();
        assert_eq!(s.vertices(), ids(&[1, 2, 3]).as_slice());
        assert_eq!(s.attach(VertexId(4)), Some((VertexId(3), 1)));
        assert_eq!(s.attach(VertexId(5)), Some((VertexId(3), 2)));
        assert_eq!(s.distance(VertexId(2), VertexId(5)).unwrap(), 3);
    }

    #[test]
    fn single_sample_is_degenerate() {
        let t = star(5);
        let o = DistanceOracle::new(&t);
        let s = recover(&o, &ids(&[3])).unwrap();
        assert_eq!(s.vertices(), ids(&[3]).as_slice());
        assert!(s.edges().is_empty());
        assert_eq!(s.attach(VertexId(1)), Some((VertexId(3), 1)));
        assert_eq!(s.attach(VertexId(5)), Some((VertexId(3), 2)));
        assert_eq!(s.leaves().count(), 0);
    }

    #[test]
    fn sample_errors() {
        let t = path(4);
        let o = DistanceOracle::new(&t);
        assert!(matches!(recover(&o, &[]), Err(Error::Precondition(_))));
        assert!(matches!(
            recover(&o, &ids(&[1, 7])),
            Err(Error::InvalidVertex { id: 7, .. })
        ));
        assert!(matches!(recover(&o, &ids(&[2, 2])), Err(Error::Precondition(_))));
    }

    #[test]
    fn leaf_check_examples() {
        let t = star(5);
        let o = DistanceOracle::new(&t);
        let s = recover(&o, &ids(&[2, 3])).unwrap();
        assert!(s.is_leaf_of_t(VertexId(2)).unwrap());
        assert!(s.is_leaf_of_t(VertexId(3)).unwrap());
        assert!(matches!(s.is_leaf_of_t(VertexId(1)), Err(Error::Precondition(_))));
        assert!(matches!(s.is_leaf_of_t(VertexId(4)), Err(Error::Precondition(_))));

        let t = path(3);
        let o = DistanceOracle::new(&t);
        let s = recover(&o, &ids(&[1, 2])).unwrap();
        assert!(!s.is_leaf_of_t(VertexId(2)).unwrap());
        assert!(s.is_leaf_of_t(VertexId(1)).unwrap());
    }

    #[test]
    fn neighbor_count_examples() {
        let t = star(5);
        let o = DistanceOracle::new(&t);
        let s = recover(&o, &ids(&[2, 3, 4])).unwrap();
        let before = o.query_count();
        assert_eq!(s.sampled_neighbor_count(VertexId(1)).unwrap(), 3);
        assert_eq!(o.query_count(), before);

        let t = path(5);
        let o = DistanceOracle::new(&t);
        let s = recover(&o, &ids(&[1, 5])).unwrap();
        assert_eq!(s.sampled_neighbor_count(VertexId(3)).unwrap(), 0);
        assert_eq!(s.sampled_neighbor_count(VertexId(2)).unwrap(), 1);
        let s = recover(&DistanceOracle::new(&t), &ids(&[1, 2])).unwrap();
        assert!(s.sampled_neighbor_count(VertexId(4)).is_err());
    }

    #[test]
    fn text_export() {
        let t = path(5);
        let o = DistanceOracle::new(&t);
        let s = recover(&o, &ids(&[1, 3])).unwrap();
        assert_eq!(s.to_text(), "3\n1 2 1\n2 3 1\nattach\n4 3 1\n5 3 2\n");
    }

    /// The literal procedure: distances inside `T_X` from
    /// `max_x |d(x, u) - d(x, v)|`, then `uv` is an edge iff no subtree vertex
    /// lies strictly between `u` and `v`.
    fn literal_edges(t: &WeightedTree<u64>, sample: &[VertexId]) -> BTreeSet<(u32, u32, u64)> {
        let d = |a: VertexId, b: VertexId| t.path_weight(a, b).unwrap();
        let verts: Vec<VertexId> = t
            .vertices()
            .filter(|&w| {
                sample
                    .iter()
                    .any(|&x| sample.iter().any(|&y| d(x, y) == d(x, w) + d(w, y)))
            })
            .collect();
        let inner = |u: VertexId, v: VertexId| {
            sample.iter().map(|&x| d(x, u).abs_diff(d(x, v))).max().unwrap()
        };
        let mut out = BTreeSet::new();
        for (i, &u) in verts.iter().enumerate() {
            for &v in &verts[i + 1..] {
                let uv = inner(u, v);
                let blocked = verts
                    .iter()
                    .any(|&z| z != u && z != v && inner(u, z) + inner(z, v) == uv);
                if !blocked {
                    out.insert((u.0, v.0, uv));
                }
            }
        }
        out
    }

    #[test]
    fn matches_literal_procedure_on_random_trees() {
        let w = WeightScheme::UniformQuanta { lo: 1, hi: 50 };
        for seed in 0..40u64 {
            let n = 5 + (seed as usize * 7) % 40;
            let t: WeightedTree<u64> = generate_tree(Family::UniformRandom, n, seed, w).unwrap();
            let k = 1 + seed as usize % 6;
            let sample: Vec<VertexId> = (0..k)
                .map(|i| VertexId(1 + ((i * 13 + seed as usize * 3) % n) as u32))
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let o = DistanceOracle::new(&t);
            let s = recover(&o, &sample).unwrap();
            let got: BTreeSet<(u32, u32, u64)> =
                s.edges().iter().map(|&(a, b, w)| (a.0, b.0, w)).collect();
            assert_eq!(got, literal_edges(&t, &sample), "seed {seed}");
        }
    }
}
