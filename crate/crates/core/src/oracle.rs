//! Exact distance-to-solved oracle by breadth-first search from the solved
//! state, bounded by a depth cap.
//!
//! Each BFS layer is kept as a sorted vector of packed state keys; lookups
//! binary-search the layers. At the maximum cap of 7 the table holds about
//! 9.2 million keys (~150 MB).

use std::io::Write;

use rayon::prelude::*;

use crate::cube::{CubeState, StateKey, NUM_MOVES};
use crate::error::{Error, Result};

pub const MAX_ORACLE_DEPTH: u8 = 7;

#[derive(Clone, Debug)]
pub struct DistanceTable {
    layers: Vec<Vec<u128>>,
}

/// How edges leaving tabulated states change the distance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EdgeTransitions {
    pub closer: u64,
    pub same: u64,
    pub farther: u64,
}

pub fn bfs_distances(depth_cap: u8) -> Result<DistanceTable> {
    if depth_cap > MAX_ORACLE_DEPTH {
        return Err(Error::DepthLimit {
            requested: depth_cap,
            max: MAX_ORACLE_DEPTH,
        });
    }
    let mut layers: Vec<Vec<u128>> = vec![vec![CubeState::solved().key().0]];
    for depth in 1..=depth_cap as usize {
        let current = &layers[depth - 1];
        let mut next: Vec<u128> = current
            .par_iter()
            .flat_map_iter(|&k| {
                let state = StateKey(k).state();
                state.neighbors().into_iter().map(|(_, n)| n.key().0)
            })
            .collect();
        next.par_sort_unstable();
        next.dedup();
        let previous = if depth >= 2 {
            Some(&layers[depth - 2])
        } else {
            None
        };
        next.retain(|k| {
            current.binary_search(k).is_err()
                && previous.is_none_or(|p| p.binary_search(k).is_err())
        });
        next.shrink_to_fit();
        layers.push(next);
    }
    Ok(DistanceTable { layers })
}

impl DistanceTable {
    pub fn depth_cap(&self) -> u8 {
        (self.layers.len() - 1) as u8
    }

    /// Number of states at each exact distance `0..=depth_cap`.
    pub fn counts(&self) -> Vec<usize> {
        self.layers.iter().map(Vec::len).collect()
    }

    pub fn len(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// States at exactly `depth`, in key order.
    pub fn layer(&self, depth: u8) -> impl Iterator<Item = CubeState> + '_ {
        self.layers
            .get(depth as usize)
            .into_iter()
            .flatten()
            .map(|&k| StateKey(k).state())
    }

    pub fn lookup_key(&self, key: StateKey) -> Option<u8> {
        self.layers
            .iter()
            .position(|layer| layer.binary_search(&key.0).is_ok())
            .map(|d| d as u8)
    }

    pub fn lookup(&self, g: &CubeState) -> Option<u8> {
        self.lookup_key(g.key())
    }

    /// Number of the 12 neighbours of `g` that are one move closer to solved.
    pub fn count_decreasing_edges(&self, g: &CubeState) -> Result<u8> {
        let insufficient = Error::InsufficientDepth {
            cap: self.depth_cap(),
        };
        let d = self.lookup(g).ok_or(insufficient)?;
        let mut k = 0;
        for (_, n) in g.neighbors() {
            let dn = self.lookup(&n).ok_or(Error::InsufficientDepth {
                cap: self.depth_cap(),
            })?;
            if dn + 1 == d {
                k += 1;
            }
        }
        Ok(k)
    }

    /// Tallies distance changes along every edge leaving a state strictly
    /// inside the cap (whose neighbours are therefore all tabulated).
    pub fn edge_transitions(&self) -> EdgeTransitions {
        let mut t = EdgeTransitions::default();
        for depth in 0..self.depth_cap() {
            for g in self.layer(depth) {
                for (_, n) in g.neighbors() {
                    match self.lookup(&n) {
                        Some(dn) if dn < depth => t.closer += 1,
                        Some(dn) if dn == depth => t.same += 1,
                        _ => t.farther += 1,
                    }
                }
            }
        }
        debug_assert_eq!(
            t.closer + t.same + t.farther,
            NUM_MOVES as u64
                * self.layers[..self.depth_cap() as usize]
                    .iter()
                    .map(|l| l.len() as u64)
                    .sum::<u64>()
        );
        t
    }

    /// Writes `depth count` lines.
    pub fn write_counts<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (depth, count) in self.counts().iter().enumerate() {
            writeln!(out, "{depth} {count}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::Move;

    #[test]
    fn rejects_deep_caps() {
        assert!(matches!(
            bfs_distances(8),
            Err(Error::DepthLimit { requested: 8, .. })
        ));
    }

    #[test]
    fn cap_zero_is_just_solved() {
        let t = bfs_distances(0).unwrap();
        assert_eq!(t.counts(), vec![1]);
        assert_eq!(t.lookup(&CubeState::solved()), Some(0));
        assert_eq!(
            t.lookup(&CubeState::solved().apply_move(Move::ALL[0])),
            None
        );
    }

    #[test]
    fn lookup_respects_cap() {
        let t = bfs_distances(2).unwrap();
        let g = CubeState::solved();
        assert_eq!(t.lookup(&g), Some(0));
        let u = Move::ALL[0];
        assert_eq!(t.lookup(&g.apply_move(u)), Some(1));
        // U R F is a depth-3 state
        let deep = g.apply_moves(&crate::cube::parse_scramble("U R F").unwrap());
        assert_eq!(t.lookup(&deep), None);
    }

    #[test]
    fn decreasing_edges() {
        let t = bfs_distances(3).unwrap();
        assert_eq!(t.count_decreasing_edges(&CubeState::solved()).unwrap(), 0);
        for g in t.layer(1) {
            assert!(t.count_decreasing_edges(&g).unwrap() >= 1);
        }
        let edge = t.layer(3).next().unwrap();
        assert!(matches!(
            t.count_decreasing_edges(&edge),
            Err(Error::InsufficientDepth { cap: 3 })
        ));
    }

    #[test]
    fn writes_counts() {
        let t = bfs_distances(1).unwrap();
        let mut buf = Vec::new();
        t.write_counts(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0 1\n1 12\n");
    }
}
