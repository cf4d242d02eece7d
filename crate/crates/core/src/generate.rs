//! Deterministic tree families used as test instances.
//!
//! Layouts (vertex labels are part of the contract):
//!
//! * `path`: `1 - 2 - ... - n`.
//! * `star`: centre `1`, leaves `2..=n`.
//! * `caterpillar`: a backbone path `1..=b` with `b = min(n, ceil((n + 4) / 3))`;
//!   the remaining `n - b` vertices are legs, attached round-robin to the
//!   interior backbone vertices `2..b`. With `n = s + 2 + s*k` this is the
//!   caterpillar with `s` spine vertices carrying `k` legs each plus two bare
//!   backbone ends, see [`caterpillar`].
//! * `broom`: a handle path `1..=h` with `h = ceil(n / 2)`, and bristles
//!   `h+1..=n` all attached to `h`.
//! * `uniform_random`: decoded from a uniformly random Prüfer sequence, so
//!   every labelled tree on `n` vertices is equally likely.
//! * `random_binary`: grown from a root by repeatedly giving a uniformly
//!   chosen current leaf two children (one child for the last vertex when
//!   `n` is even), then relabelled by a random permutation. For odd `n` it
//!   has exactly `(n + 1) / 2` leaves.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Weight;
use crate::tree::{Edge, VertexId, WeightedTree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Path,
    Star,
    Caterpillar,
    Broom,
    UniformRandom,
    RandomBinary,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Path,
        Family::Star,
        Family::Caterpillar,
        Family::Broom,
        Family::UniformRandom,
        Family::RandomBinary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Path => "path",
            Family::Star => "star",
            Family::Caterpillar => "caterpillar",
            Family::Broom => "broom",
            Family::UniformRandom => "uniform_random",
            Family::RandomBinary => "random_binary",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown tree family {s:?}")))
    }
}

/// How edge weights are assigned.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum WeightScheme {
    /// Every edge has length `1.0` (`2^32` quanta).
    #[default]
    Unit,
    /// Independent uniform integers in `lo..=hi` quanta.
    UniformQuanta { lo: u64, hi: u64 },
}

impl FromStr for WeightScheme {
    type Err = Error;

    /// Accepts `unit` or `uniform:LO:HI`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "unit" {
            return Ok(WeightScheme::Unit);
        }
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() == 3 && parts[0] == "uniform" {
            let lo = parts[1].parse().ok();
            let hi = parts[2].parse().ok();
            if let (Some(lo), Some(hi)) = (lo, hi) {
                return Ok(WeightScheme::UniformQuanta { lo, hi });
            }
        }
        Err(Error::InvalidParameter(format!(
            "unknown weight scheme {s:?} (expected `unit` or `uniform:LO:HI`)"
        )))
    }
}

/// Build a tree of the given family. Deterministic in all arguments.
pub fn generate_tree<W: Weight>(
    family: Family,
    n: usize,
    seed: u64,
    weights: WeightScheme,
) -> Result<WeightedTree<W>> {
    if n == 0 {
        return Err(Error::InvalidSize("n must be at least 1".into()));
    }
    let mut rng = rng::seeded(seed);
    let shape: Vec<(u32, u32)> = match family {
        Family::Path => (1..n as u32).map(|i| (i, i + 1)).collect(),
        Family::Star => (2..=n as u32).map(|i| (1, i)).collect(),
        Family::Caterpillar => caterpillar_shape(n),
        Family::Broom => broom_shape(n),
        Family::UniformRandom => {
            let seq: Vec<u32> = (0..n.saturating_sub(2))
                .map(|_| rng.gen_range(1..=n as u32))
                .collect();
            prufer_decode(n, &seq)?
        }
        Family::RandomBinary => random_binary_shape(n, &mut rng),
    };
    let edges = assign_weights::<W, _>(shape, weights, &mut rng)?;
    WeightedTree::new(n, edges)
}

/// Caterpillar with `spine` leg-carrying vertices, `legs` legs on each,
/// and one bare backbone vertex at each end.
pub fn caterpillar<W: Weight>(spine: usize, legs: usize) -> Result<WeightedTree<W>> {
    let n = spine + 2 + spine * legs;
    let backbone = spine + 2;
    let mut shape: Vec<(u32, u32)> = (1..backbone as u32).map(|i| (i, i + 1)).collect();
    let mut next = backbone as u32 + 1;
    for _ in 0..legs {
        for i in 0..spine as u32 {
            shape.push((i + 2, next));
            next += 1;
        }
    }
    let edges = assign_weights::<W, _>(shape, WeightScheme::Unit, &mut rng::seeded(0))?;
    WeightedTree::new(n, edges)
}

fn caterpillar_shape(n: usize) -> Vec<(u32, u32)> {
    let b = n.min((n + 4).div_ceil(3));
    let mut shape: Vec<(u32, u32)> = (1..b as u32).map(|i| (i, i + 1)).collect();
    if b >= 3 {
        let interior = b as u32 - 2;
        for (j, leg) in (b as u32 + 1..=n as u32).enumerate() {
            shape.push((2 + j as u32 % interior, leg));
        }
    }
    shape
}

fn broom_shape(n: usize) -> Vec<(u32, u32)> {
    let h = n.div_ceil(2) as u32;
    let mut shape: Vec<(u32, u32)> = (1..h).map(|i| (i, i + 1)).collect();
    shape.extend((h + 1..=n as u32).map(|b| (h, b)));
    shape
}

fn random_binary_shape<R: Rng>(n: usize, rng: &mut R) -> Vec<(u32, u32)> {
    let mut shape = Vec::with_capacity(n.saturating_sub(1));
    let mut leaves = vec![0u32];
    let mut count = 1u32;
    while (count as usize) < n {
        let pick = rng.gen_range(0..leaves.len());
        let parent = leaves.swap_remove(pick);
        let children = if n - count as usize >= 2 { 2 } else { 1 };
        for _ in 0..children {
            shape.push((parent, count));
            leaves.push(count);
            count += 1;
        }
    }
    let mut labels: Vec<u32> = (1..=n as u32).collect();
    labels.shuffle(rng);
    shape
        .into_iter()
        .map(|(a, b)| (labels[a as usize], labels[b as usize]))
        .collect()
}

/// Decode a Prüfer sequence of length `n - 2` over `1..=n`.
pub fn prufer_decode(n: usize, seq: &[u32]) -> Result<Vec<(u32, u32)>> {
    if n == 0 {
        return Err(Error::InvalidSize("n must be at least 1".into()));
    }
    if n <= 2 {
        return Ok(if n == 2 { vec![(1, 2)] } else { vec![] });
    }
    if seq.len() != n - 2 {
        return Err(Error::InvalidParameter(format!(
            "Prüfer sequence for n = {n} must have length {}",
            n - 2
        )));
    }
    let mut degree = vec![1u32; n + 1];
    for &s in seq {
        if s == 0 || s as usize > n {
            return Err(Error::InvalidVertex { id: s as u64, n });
        }
        degree[s as usize] += 1;
    }
    let mut leaves: BinaryHeap<Reverse<u32>> =
        (1..=n as u32).filter(|&v| degree[v as usize] == 1).map(Reverse).collect();
    let mut shape = Vec::with_capacity(n - 1);
    for &s in seq {
        let Reverse(leaf) = leaves.pop().expect("a leaf always exists");
        shape.push((leaf, s));
        degree[s as usize] -= 1;
        if degree[s as usize] == 1 {
            leaves.push(Reverse(s));
        }
    }
    let Reverse(a) = leaves.pop().expect("two vertices remain");
    let Reverse(b) = leaves.pop().expect("two vertices remain");
    shape.push((a, b));
    Ok(shape)
}

type WeightDraw<'a, R, W> = Box<dyn FnMut(&mut R) -> Result<W> + 'a>;

fn assign_weights<W: Weight, R: Rng>(
    shape: Vec<(u32, u32)>,
    scheme: WeightScheme,
    rng: &mut R,
) -> Result<Vec<Edge<W>>> {
    let draw: WeightDraw<'_, R, W> = match scheme {
        WeightScheme::Unit => {
            let unit = W::unit().ok_or(Error::Overflow(W::NAME))?;
            Box::new(move |_| Ok(unit))
        }
        WeightScheme::UniformQuanta { lo, hi } => {
            if lo == 0 {
                return Err(Error::ZeroWeight);
            }
            if lo > hi {
                return Err(Error::InvalidParameter(format!(
                    "weight range {lo}..={hi} is empty"
                )));
            }
            Box::new(move |r: &mut R| {
                let q = r.gen_range(lo..=hi);
                W::from(q).ok_or(Error::Overflow(W::NAME))
            })
        }
    };
    let mut draw = draw;
    shape
        .into_iter()
        .map(|(a, b)| Ok((VertexId(a), VertexId(b), draw(rng)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    type T = WeightedTree<u128>;

    fn edge_list(t: &T) -> Vec<(u32, u32)> {
        t.edges().iter().map(|&(u, v, _)| (u.0, v.0)).collect()
    }

    #[test]
    fn path_and_star_layouts() {
        let p: T = generate_tree(Family::Path, 5, 99, WeightScheme::Unit).unwrap();
        assert_eq!(edge_list(&p), vec![(1, 2), (2, 3), (3, 4), (4, 5)]);
        assert!(p.edges().iter().all(|e| e.2 == 1u128 << 32));
        let s: T = generate_tree(Family::Star, 5, 3, WeightScheme::Unit).unwrap();
        assert_eq!(edge_list(&s), vec![(1, 2), (1, 3), (1, 4), (1, 5)]);
    }

    #[test]
    fn zero_size_is_rejected() {
        for f in Family::ALL {
            assert!(matches!(
                generate_tree::<u64>(f, 0, 1, WeightScheme::Unit),
                Err(Error::InvalidSize(_))
            ));
        }
    }

    #[test]
    fn every_family_builds_small_and_medium_trees() {
        for f in Family::ALL {
            for n in [1, 2, 3, 4, 5, 17, 64, 101] {
                let t: T = generate_tree(f, n, 11, WeightScheme::Unit).unwrap();
                assert_eq!(t.n(), n, "{f} n={n}");
            }
        }
    }

    #[test]
    fn caterpillar_spine_five_two_legs() {
        let c: T = caterpillar(5, 2).unwrap();
        assert_eq!(c.n(), 17);
        // 10 legs plus the two bare backbone ends
        assert_eq!(c.leaf_count(), 12);
        let g: T = generate_tree(Family::Caterpillar, 17, 0, WeightScheme::Unit).unwrap();
        assert_eq!(g.to_text(), c.to_text());
    }

    #[test]
    fn broom_layout() {
        let b: T = generate_tree(Family::Broom, 10, 0, WeightScheme::Unit).unwrap();
        assert_eq!(b.diameter(), 6);
        assert_eq!(b.max_degree(), 6);
        assert_eq!(b.leaf_count(), 6);
    }

    #[test]
    fn random_binary_has_half_leaves() {
        for seed in 0..5 {
            let t: T = generate_tree(Family::RandomBinary, 501, seed, WeightScheme::Unit).unwrap();
            assert_eq!(t.leaf_count(), 251);
            assert!(t.max_degree() <= 3);
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let w = WeightScheme::UniformQuanta { lo: 1, hi: 1000 };
        let a: T = generate_tree(Family::UniformRandom, 40, 5, w).unwrap();
        let b: T = generate_tree(Family::UniformRandom, 40, 5, w).unwrap();
        let c: T = generate_tree(Family::UniformRandom, 40, 6, w).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        assert_ne!(a.to_text(), c.to_text());
        assert!(a.edges().iter().all(|e| (1..=1000).contains(&e.2)));
    }

    #[test]
    fn weight_scheme_errors() {
        let zero = WeightScheme::UniformQuanta { lo: 0, hi: 3 };
        assert_eq!(
            generate_tree::<u64>(Family::Path, 3, 0, zero).unwrap_err(),
            Error::ZeroWeight
        );
        assert!(generate_tree::<u32>(Family::Path, 3, 0, WeightScheme::Unit).is_err());
        assert_eq!(
            "uniform:2:9".parse::<WeightScheme>().unwrap(),
            WeightScheme::UniformQuanta { lo: 2, hi: 9 }
        );
    }

    #[test]
    fn prufer_decode_known_sequences() {
        // [4, 4] on 4 vertices is the star centred at 4
        let mut s = prufer_decode(4, &[4, 4]).unwrap();
        s.sort();
        assert_eq!(s, vec![(1, 4), (2, 4), (3, 4)]);
        // [2, 3] decodes to the path 1-2-3-4
        assert_eq!(prufer_decode(4, &[2, 3]).unwrap(), vec![(1, 2), (2, 3), (3, 4)]);
    }

    #[test]
    fn uniform_random_n4_seed7_regression() {
        // The generator draws the Prüfer sequence [2, 1] for this seed; decoding
        // by hand: leaf 3 -> 2, then 2 becomes a leaf -> 1, remaining {1, 4}.
        // The result is the path 3-2-1-4.
        let t: T = generate_tree(Family::UniformRandom, 4, 7, WeightScheme::Unit).unwrap();
        let mut rng = rng::seeded(7);
        let seq: Vec<u32> = (0..2).map(|_| rng.gen_range(1..=4)).collect();
        assert_eq!(seq, vec![2, 1]);
        assert_eq!(edge_list(&t), vec![(3, 2), (2, 1), (1, 4)]);
    }

    #[test]
    fn uniform_random_is_uniform_over_labelled_trees() {
        let draws = 10_000;
        let mut counts: HashMap<Vec<(u32, u32)>, usize> = HashMap::new();
        for seed in 0..draws {
            let t: T = generate_tree(Family::UniformRandom, 4, seed, WeightScheme::Unit).unwrap();
            let mut key: Vec<(u32, u32)> = edge_list(&t)
                .into_iter()
                .map(|(a, b)| (a.min(b), a.max(b)))
                .collect();
            key.sort();
            *counts.entry(key).or_default() += 1;
        }
        assert_eq!(counts.len(), 16);
        for (tree, c) in counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 1.0 / 16.0).abs() <= 0.02, "{tree:?} at {freq}");
        }
    }
}
