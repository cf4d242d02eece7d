//! Ground-truth weighted trees and brute-force structural properties.
//!
//! Nothing in the testing procedures reads a [`WeightedTree`] directly; they
//! go through [`crate::DistanceOracle`]. The functions here are the
//! reference side of every check: hop-count path lengths, diameter, degrees,
//! leaves and the exact typical distance.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::io::{BufRead, Write};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Weight;

/// A vertex label in `1..=n`.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    #[inline]
    pub fn from_index(i: usize) -> Self {
        VertexId(i as u32 + 1)
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An edge `(u, v, weight_in_quanta)`.
pub type Edge<W> = (VertexId, VertexId, W);

/// Immutable tree on vertices `1..=n` with positive integer edge weights.
///
/// Construction validates the tree shape and precomputes a rooted
/// binary-lifting table so that exact path weights are `O(log n)`.
#[derive(Clone, Debug)]
pub struct WeightedTree<W> {
    edges: Vec<Edge<W>>,
    adj: Vec<Vec<(u32, W)>>,
    // rooted at vertex 1
    up: Vec<Vec<u32>>,
    hops: Vec<u32>,
    root_dist: Vec<W>,
}

impl<W: Weight> WeightedTree<W> {
    /// Build a tree from exactly `n - 1` edges.
    pub fn new(n: usize, edges: Vec<Edge<W>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize("a tree needs at least one vertex".into()));
        }
        if n > u32::MAX as usize {
            return Err(Error::InvalidSize(format!("{n} vertices is too many")));
        }
        if edges.len() != n - 1 {
            return Err(Error::InvalidTree(format!(
                "expected {} edges for {} vertices, got {}",
                n - 1,
                n,
                edges.len()
            )));
        }
        let mut adj: Vec<Vec<(u32, W)>> = vec![Vec::new(); n];
        let mut total = W::zero();
        for &(u, v, w) in &edges {
            for id in [u, v] {
                if id.0 == 0 || id.0 as usize > n {
                    return Err(Error::InvalidVertex { id: id.0 as u64, n });
                }
            }
            if u == v {
                return Err(Error::InvalidTree(format!("self-loop at {u}")));
            }
            if w.is_zero() {
                return Err(Error::ZeroWeight);
            }
            total = total.checked_add(&w).ok_or(Error::Overflow(W::NAME))?;
            adj[u.index()].push((v.index() as u32, w));
            adj[v.index()].push((u.index() as u32, w));
        }

        // BFS from the root; n - 1 edges plus full reachability means acyclic.
        let mut parent = vec![u32::MAX; n];
        let mut hops = vec![0u32; n];
        let mut root_dist = vec![W::zero(); n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        parent[0] = 0;
        let mut reached = 1;
        while let Some(x) = queue.pop_front() {
            for &(y, w) in &adj[x] {
                let y = y as usize;
                if !seen[y] {
                    seen[y] = true;
                    reached += 1;
                    parent[y] = x as u32;
                    hops[y] = hops[x] + 1;
                    root_dist[y] = root_dist[x] + w;
                    queue.push_back(y);
                }
            }
        }
        if reached != n {
            return Err(Error::InvalidTree("graph is not connected".into()));
        }

        let levels = (usize::BITS - n.leading_zeros()).max(1) as usize;
        let mut up = Vec::with_capacity(levels);
        up.push(parent);
        for k in 1..levels {
            let prev = &up[k - 1];
            let next: Vec<u32> = (0..n).map(|v| prev[prev[v] as usize]).collect();
            up.push(next);
        }

        Ok(WeightedTree {
            edges,
            adj,
            up,
            hops,
            root_dist,
        })
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn edges(&self) -> &[Edge<W>] {
        &self.edges
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.n()).map(VertexId::from_index)
    }

    pub fn check(&self, v: VertexId) -> Result<()> {
        if v.0 == 0 || v.0 as usize > self.n() {
            Err(Error::InvalidVertex {
                id: v.0 as u64,
                n: self.n(),
            })
        } else {
            Ok(())
        }
    }

    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = (VertexId, W)> + '_ {
        self.adj[v.index()]
            .iter()
            .map(|&(y, w)| (VertexId::from_index(y as usize), w))
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v.index()].len()
    }

    pub fn is_adjacent(&self, u: VertexId, v: VertexId) -> bool {
        self.adj[u.index()].iter().any(|&(y, _)| y as usize == v.index())
    }

    fn lca(&self, u: usize, v: usize) -> usize {
        let (mut a, mut b) = if self.hops[u] >= self.hops[v] {
            (u, v)
        } else {
            (v, u)
        };
        let mut diff = self.hops[a] - self.hops[b];
        let mut k = 0;
        while diff > 0 {
            if diff & 1 == 1 {
                a = self.up[k][a] as usize;
            }
            diff >>= 1;
            k += 1;
        }
        if a == b {
            return a;
        }
        for k in (0..self.up.len()).rev() {
            let (pa, pb) = (self.up[k][a], self.up[k][b]);
            if pa != pb {
                a = pa as usize;
                b = pb as usize;
            }
        }
        self.up[0][a] as usize
    }

    /// Exact weighted distance `d(u, v)` in quanta.
    ///
    /// This is the backing computation of the distance oracle.
    pub fn path_weight(&self, u: VertexId, v: VertexId) -> Result<W> {
        self.check(u)?;
        self.check(v)?;
        let (a, b) = (u.index(), v.index());
        let c = self.lca(a, b);
        Ok(self.root_dist[a] + self.root_dist[b] - self.root_dist[c] - self.root_dist[c])
    }

    /// The unique `u`–`v` path, both endpoints included.
    pub fn path_vertices(&self, u: VertexId, v: VertexId) -> Result<Vec<VertexId>> {
        self.check(u)?;
        self.check(v)?;
        let (mut a, mut b) = (u.index(), v.index());
        let c = self.lca(a, b);
        let mut head = Vec::new();
        while a != c {
            head.push(VertexId::from_index(a));
            a = self.up[0][a] as usize;
        }
        head.push(VertexId::from_index(c));
        let mut tail = Vec::new();
        while b != c {
            tail.push(VertexId::from_index(b));
            b = self.up[0][b] as usize;
        }
        head.extend(tail.into_iter().rev());
        Ok(head)
    }

    /// Number of vertices on the `u`–`v` path; `ell(u, u) = 1`.
    pub fn ell(&self, u: VertexId, v: VertexId) -> Result<usize> {
        self.check(u)?;
        self.check(v)?;
        let (a, b) = (u.index(), v.index());
        let c = self.lca(a, b);
        Ok((self.hops[a] + self.hops[b] - 2 * self.hops[c]) as usize + 1)
    }

    /// Hop counts from `src` to every vertex (edges, not vertices).
    pub fn bfs_hops(&self, src: VertexId) -> Vec<u32> {
        let n = self.n();
        let mut dist = vec![u32::MAX; n];
        let mut queue = VecDeque::from([src.index()]);
        dist[src.index()] = 0;
        while let Some(x) = queue.pop_front() {
            for &(y, _) in &self.adj[x] {
                let y = y as usize;
                if dist[y] == u32::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    /// Longest path measured in vertices, by double breadth-first search.
    pub fn diameter(&self) -> usize {
        let first = self.bfs_hops(VertexId(1));
        let far = argmax(&first);
        let second = self.bfs_hops(VertexId::from_index(far));
        second.iter().copied().max().unwrap_or(0) as usize + 1
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn leaves(&self) -> Vec<VertexId> {
        self.vertices().filter(|&v| self.degree(v) == 1).collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.adj.iter().filter(|a| a.len() == 1).count()
    }

    /// `(1/n^2) * sum over ordered pairs (diagonal included) of ell(u, v)`.
    pub fn typical_distance(&self) -> Ratio<u64> {
        let n = self.n() as u64;
        let total: u64 = self
            .vertices()
            .map(|s| {
                self.bfs_hops(s)
                    .iter()
                    .map(|&h| h as u64 + 1)
                    .sum::<u64>()
            })
            .sum();
        Ratio::new(total, n * n)
    }

    /// Vertex set of the minimal subtree spanning `sample`, as the union of
    /// all pairwise sample paths.
    pub fn steiner_vertices(&self, sample: &[VertexId]) -> Result<BTreeSet<VertexId>> {
        let mut out = BTreeSet::new();
        for (i, &a) in sample.iter().enumerate() {
            self.check(a)?;
            out.insert(a);
            for &b in &sample[i + 1..] {
                out.extend(self.path_vertices(a, b)?);
            }
        }
        Ok(out)
    }

    /// Line-oriented text: `n`, then one `u v w_quanta` line per edge.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.n());
        for (u, v, w) in &self.edges {
            s.push_str(&format!("{u} {v} {w}\n"));
        }
        s
    }

    pub fn write_text<O: Write>(&self, mut out: O) -> Result<()> {
        out.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing vertex count".into(),
        })?;
        let n: usize = header.parse().map_err(|_| Error::Parse {
            line: hline,
            msg: format!("bad vertex count {header:?}"),
        })?;
        let mut edges = Vec::with_capacity(n.saturating_sub(1));
        for (line, l) in lines {
            edges.push(parse_edge::<W>(line, l)?);
        }
        WeightedTree::new(n, edges)
    }

    pub fn read_text<I: BufRead>(mut input: I) -> Result<Self> {
        let mut s = String::new();
        input.read_to_string(&mut s)?;
        Self::from_text(&s)
    }
}

pub(crate) fn parse_edge<W: Weight>(line: usize, l: &str) -> Result<Edge<W>> {
    let fields: Vec<&str> = l.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(Error::Parse {
            line,
            msg: format!("expected `u v w`, got {l:?}"),
        });
    }
    let bad = |what: &str| Error::Parse {
        line,
        msg: format!("bad {what} in {l:?}"),
    };
    let u: u32 = fields[0].parse().map_err(|_| bad("vertex"))?;
    let v: u32 = fields[1].parse().map_err(|_| bad("vertex"))?;
    let w: W = fields[2].parse().map_err(|_| bad("weight"))?;
    Ok((VertexId(u), VertexId(v), w))
}

fn argmax(xs: &[u32]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}
