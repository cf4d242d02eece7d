//! Path counts between sampled vertices, from within-sample distances only.
//!
//! For sampled `u, v` the count `ℓ̃(u, v)` is the number of sample indices
//! `i` with `d(u, v) = d(u, X_i) + d(X_i, v)`. Rooting the tree at one
//! sampled vertex `r`, a sampled `w` lies on the `r`–`v` path iff
//! `d(r, w) + d(w, v) = d(r, v)`; the deepest such `w ≠ v` is the sampled
//! parent of `v`. This gives a rooted tree on the distinct sampled vertices
//! whose ancestor relation is the tree's, and
//!
//! ```text
//! ℓ̃(a, b) = P(a) + P(b) - 2 P(c) + [c on the a–b path] · count(c)
//! ```
//!
//! where `P` sums multiplicities along sampled ancestors and `c` is the
//! deepest common sampled ancestor. Every sampled vertex on the `a`–`b`
//! path other than `c` sits strictly below `c` on one side.

use crate::error::Result;
use crate::oracle::DistanceOracle;
use crate::scalar::Weight;
use crate::tree::VertexId;

#[derive(Clone, Debug)]
pub struct SamplePaths<W> {
    pts: Vec<VertexId>,
    counts: Vec<u64>,
    dist: Vec<W>,
    depth: Vec<u32>,
    prefix: Vec<u64>,
    up: Vec<Vec<u32>>,
}

impl<W: Weight> SamplePaths<W> {
    /// Query every pair of distinct sampled vertices (`C(k, 2)` pairs).
    pub fn new(oracle: &DistanceOracle<'_, W>, pts: &[VertexId], counts: &[u64]) -> Result<Self> {
        assert_eq!(pts.len(), counts.len());
        let k = pts.len();
        let mut dist = vec![W::zero(); k * k];
        for i in 0..k {
            for j in i + 1..k {
                let d = oracle.distance(pts[i], pts[j])?;
                dist[i * k + j] = d;
                dist[j * k + i] = d;
            }
        }
        let d0 = |i: usize| dist[i];
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_unstable_by_key(|&i| d0(i));

        let mut parent = vec![0u32; k];
        let mut depth = vec![0u32; k];
        let mut prefix = vec![0u64; k];
        if k > 0 {
            prefix[0] = counts[0];
        }
        for pos in 1..k {
            let v = order[pos];
            let p = order[..pos]
                .iter()
                .rev()
                .copied()
                .find(|&w| d0(w) + dist[w * k + v] == d0(v))
                .expect("the root lies on every root path");
            parent[v] = p as u32;
            depth[v] = depth[p] + 1;
            prefix[v] = prefix[p] + counts[v];
        }
        let levels = (usize::BITS - k.leading_zeros()).max(1) as usize;
        let mut up = vec![parent];
        for lvl in 1..levels {
            let prev = &up[lvl - 1];
            let next = (0..k).map(|v| prev[prev[v] as usize]).collect();
            up.push(next);
        }
        Ok(SamplePaths {
            pts: pts.to_vec(),
            counts: counts.to_vec(),
            dist,
            depth,
            prefix,
            up,
        })
    }

    pub fn len(&self) -> usize {
        self.pts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }

    pub fn points(&self) -> &[VertexId] {
        &self.pts
    }

    fn d(&self, a: usize, b: usize) -> W {
        self.dist[a * self.pts.len() + b]
    }

    fn lca(&self, mut a: usize, mut b: usize) -> usize {
        if self.depth[a] < self.depth[b] {
            std::mem::swap(&mut a, &mut b);
        }
        let mut diff = self.depth[a] - self.depth[b];
        let mut lvl = 0;
        while diff > 0 {
            if diff & 1 == 1 {
                a = self.up[lvl][a] as usize;
            }
            diff >>= 1;
            lvl += 1;
        }
        if a == b {
            return a;
        }
        for lvl in (0..self.up.len()).rev() {
            let (pa, pb) = (self.up[lvl][a], self.up[lvl][b]);
            if pa != pb {
                a = pa as usize;
                b = pb as usize;
            }
        }
        self.up[0][a] as usize
    }

    /// `ℓ̃` between the distinct sampled vertices with local indices `a, b`.
    pub fn path_count(&self, a: usize, b: usize) -> u64 {
        if a == b {
            return self.counts[a];
        }
        let c = self.lca(a, b);
        let mut total = self.prefix[a] + self.prefix[b] - 2 * self.prefix[c];
        if self.d(a, c) + self.d(c, b) == self.d(a, b) {
            total += self.counts[c];
        }
        total
    }

    /// Largest `ℓ̃` over pairs of sample indices.
    pub fn max_path_count(&self) -> u64 {
        let k = self.len();
        let mut best = self.counts.iter().copied().max().unwrap_or(0);
        for a in 0..k {
            for b in a + 1..k {
                best = best.max(self.path_count(a, b));
            }
        }
        best
    }

    /// `Σ_{i<j} (ℓ̃(X_i, X_j) - offset)` over pairs of sample indices.
    /// Requires every term to be non-negative (`offset ≤ 2`).
    pub fn index_pair_sum(&self, offset: u64) -> u128 {
        debug_assert!(offset <= 2);
        let k = self.len();
        let mut total: u128 = 0;
        for a in 0..k {
            let ca = self.counts[a] as u128;
            if ca >= 2 {
                total += ca * (ca - 1) / 2 * (ca - offset as u128);
            }
            for b in a + 1..k {
                let cb = self.counts[b] as u128;
                total += ca * cb * (self.path_count(a, b) - offset) as u128;
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_tree, Family, WeightScheme};
    use crate::rng;
    use crate::testing::SampleSet;
    use crate::tree::WeightedTree;

    /// Count sample indices on the path literally.
    fn literal(t: &WeightedTree<u64>, xs: &[VertexId], u: VertexId, v: VertexId) -> u64 {
        let d = |a, b| t.path_weight(a, b).unwrap();
        xs.iter().filter(|&&x| d(u, x) + d(x, v) == d(u, v)).count() as u64
    }

    #[test]
    fn matches_literal_counts() {
        let w = WeightScheme::UniformQuanta { lo: 1, hi: 9 };
        for seed in 0..60u64 {
            let fam = Family::ALL[seed as usize % Family::ALL.len()];
            let n = 2 + (seed as usize * 11) % 60;
            let t: WeightedTree<u64> = generate_tree(fam, n, seed, w).unwrap();
            let mut r = rng::seeded(seed);
            let size = 1 + (seed as usize * 5) % 40;
            let s = SampleSet::with_replacement(n, size, &mut r);
            let (pts, counts) = s.distinct();
            let o = DistanceOracle::new(&t);
            let sp = SamplePaths::new(&o, &pts, &counts).unwrap();
            assert_eq!(o.query_count(), pts.len() * (pts.len() - 1) / 2);

            let mut max = 0;
            let mut sum2 = 0u128;
            for i in 0..size {
                for j in 0..size {
                    let c = literal(&t, &s.members, s.members[i], s.members[j]);
                    if i < j {
                        sum2 += (c - 2) as u128;
                    }
                    max = max.max(c);
                }
            }
            for a in 0..pts.len() {
                for b in 0..pts.len() {
                    assert_eq!(
                        sp.path_count(a, b),
                        literal(&t, &s.members, pts[a], pts[b]),
                        "seed {seed}"
                    );
                }
            }
            assert_eq!(sp.max_path_count(), max);
            assert_eq!(sp.index_pair_sum(2), sum2);
        }
    }
}
