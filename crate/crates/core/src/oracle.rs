//! Query-counted exact distance access.
//!
//! [`DistanceOracle`] is the only channel the testing procedures use to look
//! at a tree. It answers `d(u, v)` exactly and keeps a ledger of the distinct
//! unordered pairs it has been asked about; the ledger size is the query
//! complexity reported by every procedure.

use std::collections::HashSet;
use std::io::Write;
use std::sync::Mutex;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::scalar::{quantize, Weight};
use crate::tree::{VertexId, WeightedTree};

/// Trees up to this size keep the ledger as a triangular bitset.
const DENSE_LEDGER_MAX_N: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QueryReceipt<W> {
    pub distance: W,
    pub was_cached: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceEntry<W> {
    pub u: VertexId,
    pub v: VertexId,
    pub distance: W,
    pub cached: bool,
}

#[derive(Debug)]
enum PairSet {
    Dense(Vec<u64>),
    Sparse(HashSet<u64>),
}

impl PairSet {
    fn new(n: usize) -> Self {
        if n <= DENSE_LEDGER_MAX_N {
            let bits = n * n.saturating_sub(1) / 2;
            PairSet::Dense(vec![0; bits.div_ceil(64)])
        } else {
            PairSet::Sparse(HashSet::new())
        }
    }

    /// Insert the pair `a < b` (0-based); true if it was new.
    fn insert(&mut self, a: usize, b: usize) -> bool {
        debug_assert!(a < b);
        match self {
            PairSet::Dense(bits) => {
                let idx = b * (b - 1) / 2 + a;
                let (word, mask) = (idx / 64, 1u64 << (idx % 64));
                let fresh = bits[word] & mask == 0;
                bits[word] |= mask;
                fresh
            }
            PairSet::Sparse(set) => set.insert(((b as u64) << 32) | a as u64),
        }
    }
}

#[derive(Debug)]
struct Ledger<W> {
    pairs: PairSet,
    count: usize,
    trace: Option<Vec<TraceEntry<W>>>,
}

/// Exact distance oracle over a hidden tree.
///
/// Repeated queries of the same unordered pair are served from the ledger
/// and do not increase [`query_count`](Self::query_count); self-pairs are
/// answered `0` without touching it. Ledger updates are serialised, so one
/// oracle may be shared across threads.
#[derive(Debug)]
pub struct DistanceOracle<'t, W> {
    tree: &'t WeightedTree<W>,
    ledger: Mutex<Ledger<W>>,
}

impl<'t, W: Weight> DistanceOracle<'t, W> {
    pub fn new(tree: &'t WeightedTree<W>) -> Self {
        Self::build(tree, false)
    }

    /// An oracle that also records every non-self query in order.
    pub fn with_trace(tree: &'t WeightedTree<W>) -> Self {
        Self::build(tree, true)
    }

    fn build(tree: &'t WeightedTree<W>, trace: bool) -> Self {
        DistanceOracle {
            tree,
            ledger: Mutex::new(Ledger {
                pairs: PairSet::new(tree.n()),
                count: 0,
                trace: trace.then(Vec::new),
            }),
        }
    }

    /// Number of vertices. Public knowledge for every procedure.
    pub fn n(&self) -> usize {
        self.tree.n()
    }

    pub fn query(&self, u: VertexId, v: VertexId) -> Result<QueryReceipt<W>> {
        self.tree.check(u)?;
        self.tree.check(v)?;
        if u == v {
            return Ok(QueryReceipt {
                distance: W::zero(),
                was_cached: true,
            });
        }
        let distance = self.tree.path_weight(u, v)?;
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        let mut ledger = self.ledger.lock().expect("ledger poisoned");
        let fresh = ledger.pairs.insert(a.index(), b.index());
        if fresh {
            ledger.count += 1;
        }
        if let Some(trace) = ledger.trace.as_mut() {
            trace.push(TraceEntry {
                u,
                v,
                distance,
                cached: !fresh,
            });
        }
        Ok(QueryReceipt {
            distance,
            was_cached: !fresh,
        })
    }

    /// Shorthand for `query(u, v)?.distance`.
    pub fn distance(&self, u: VertexId, v: VertexId) -> Result<W> {
        Ok(self.query(u, v)?.distance)
    }

    /// Distinct unordered non-self pairs queried so far.
    pub fn query_count(&self) -> usize {
        self.ledger.lock().expect("ledger poisoned").count
    }

    /// `d(u, w) + d(w, v) == d(u, v)`, i.e. `w` lies on the `u`–`v` path.
    pub fn is_on_path(&self, u: VertexId, v: VertexId, w: VertexId) -> Result<bool> {
        let uv = self.distance(u, v)?;
        let uw = self.distance(u, w)?;
        let wv = self.distance(w, v)?;
        Ok(uw + wv == uv)
    }

    /// Recorded queries; empty unless built with [`with_trace`](Self::with_trace).
    pub fn trace(&self) -> Vec<TraceEntry<W>> {
        self.ledger
            .lock()
            .expect("ledger poisoned")
            .trace
            .clone()
            .unwrap_or_default()
    }

    /// CSV lines `u,v,distance_quanta,cached` in query order.
    pub fn write_trace_csv<O: Write>(&self, out: O) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for e in self.trace() {
            w.write_record([
                e.u.to_string(),
                e.v.to_string(),
                e.distance.to_string(),
                e.cached.to_string(),
            ])
            .map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Edge length `-log(rho^2)` for an edge correlation `rho`, in quanta.
///
/// Rounded to the nearest quantum with a floor of one quantum.
pub fn correlation_to_distance<F: Float, W: Weight>(rho: F) -> Result<W> {
    let mag = rho.abs();
    if mag.is_nan() || mag > F::one() {
        return Err(Error::Domain(rho.to_f64().unwrap_or(f64::NAN)));
    }
    if mag.is_zero() {
        return Err(Error::InfiniteDistance);
    }
    if mag == F::one() {
        return Err(Error::ZeroWeight);
    }
    let units = -(rho * rho).ln();
    let q: W = quantize(units).ok_or(Error::Overflow(W::NAME))?;
    Ok(q.max(W::one()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_path(n: u32) -> WeightedTree<u128> {
        let unit = 1u128 << 32;
        let edges = (1..n).map(|i| (VertexId(i), VertexId(i + 1), unit)).collect();
        WeightedTree::new(n as usize, edges).unwrap()
    }

    #[test]
    fn query_and_cache_semantics() {
        let t = unit_path(5);
        let o = DistanceOracle::new(&t);
        assert_eq!(o.query_count(), 0);
        let r = o.query(VertexId(1), VertexId(4)).unwrap();
        assert_eq!(r.distance, 3u128 << 32);
        assert!(!r.was_cached);
        assert_eq!(o.query_count(), 1);
        let again = o.query(VertexId(4), VertexId(1)).unwrap();
        assert_eq!(again.distance, r.distance);
        assert!(again.was_cached);
        assert_eq!(o.query_count(), 1);
        let selfq = o.query(VertexId(2), VertexId(2)).unwrap();
        assert_eq!(selfq.distance, 0);
        assert_eq!(o.query_count(), 1);
    }

    #[test]
    fn count_examples() {
        let t = unit_path(5);
        let o = DistanceOracle::new(&t);
        for (u, v) in [(1, 2), (2, 1), (1, 2)] {
            o.query(VertexId(u), VertexId(v)).unwrap();
        }
        assert_eq!(o.query_count(), 1);
        let o = DistanceOracle::new(&t);
        for (u, v) in [(3, 4), (3, 5), (4, 5)] {
            o.query(VertexId(u), VertexId(v)).unwrap();
        }
        assert_eq!(o.query_count(), 3);
    }

    #[test]
    fn sparse_ledger_dedupes_too() {
        let t = unit_path(DENSE_LEDGER_MAX_N as u32 + 10);
        let o = DistanceOracle::new(&t);
        o.query(VertexId(1), VertexId(4000)).unwrap();
        o.query(VertexId(4000), VertexId(1)).unwrap();
        o.query(VertexId(4100), VertexId(4101)).unwrap();
        assert_eq!(o.query_count(), 2);
    }

    #[test]
    fn invalid_ids() {
        let t = unit_path(3);
        let o = DistanceOracle::new(&t);
        assert!(matches!(
            o.query(VertexId(0), VertexId(1)),
            Err(Error::InvalidVertex { .. })
        ));
        assert!(o.query(VertexId(1), VertexId(4)).is_err());
        assert_eq!(o.query_count(), 0);
    }

    #[test]
    fn on_path_examples() {
        let t = unit_path(5);
        let o = DistanceOracle::new(&t);
        assert!(o.is_on_path(VertexId(1), VertexId(5), VertexId(3)).unwrap());
        assert!(!o.is_on_path(VertexId(1), VertexId(3), VertexId(5)).unwrap());
        assert!(o.is_on_path(VertexId(2), VertexId(4), VertexId(2)).unwrap());
        assert!(o.query_count() <= 4);
    }

    #[test]
    fn trace_records_query_order() {
        let t = unit_path(3);
        let o = DistanceOracle::with_trace(&t);
        o.query(VertexId(1), VertexId(3)).unwrap();
        o.query(VertexId(3), VertexId(1)).unwrap();
        o.query(VertexId(2), VertexId(2)).unwrap();
        let mut buf = Vec::new();
        o.write_trace_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "1,3,8589934592,false\n3,1,8589934592,true\n");
    }

    #[test]
    fn correlation_adapter() {
        assert_eq!(
            correlation_to_distance::<f64, u64>(1.0).unwrap_err(),
            Error::ZeroWeight
        );
        assert_eq!(
            correlation_to_distance::<f64, u64>(-1.0).unwrap_err(),
            Error::ZeroWeight
        );
        assert_eq!(
            correlation_to_distance::<f64, u64>(0.0).unwrap_err(),
            Error::InfiniteDistance
        );
        assert!(matches!(
            correlation_to_distance::<f64, u64>(1.5),
            Err(Error::Domain(_))
        ));
        // -ln(0.25) = 1.38629436111989061883... ; times 2^32 = 5954088943.639...
        assert_eq!(correlation_to_distance::<f64, u64>(0.5).unwrap(), 5_954_088_944);
        assert_eq!(correlation_to_distance::<f64, u64>(-0.5).unwrap(), 5_954_088_944);
        // tiny distances floor at one quantum
        assert_eq!(correlation_to_distance::<f64, u64>(1.0 - 1e-15).unwrap(), 1);
    }

    #[test]
    fn correlation_adapter_is_monotone() {
        let mut prev = u64::MAX;
        for i in 1..100 {
            let rho = i as f64 / 100.0;
            let w: u64 = correlation_to_distance(rho).unwrap();
            assert!(w <= prev);
            prev = w;
        }
    }
}
