//! Query-time counters.
//!
//! Traversal code is generic over [`Probe`] so benchmark loops can pass the
//! zero-sized [`NoStats`] and pay nothing for instrumentation.

use serde::{Deserialize, Serialize};

pub trait Probe {
    /// An internal node was visited.
    fn node(&mut self) {}
    /// A leaf was visited.
    fn leaf(&mut self) {}
    /// A record key was compared while locating a position inside a leaf.
    fn probe(&mut self) {}
    /// A record was tested against the query during the leaf scan.
    fn scan(&mut self) {}
}

#[derive(Clone, Copy, Debug, Default)]
pub struct NoStats;

impl Probe for NoStats {}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryStats {
    pub nodes_visited: u64,
    pub leaves_visited: u64,
    pub records_probed: u64,
    pub records_scanned: u64,
}

impl QueryStats {
    /// Total records whose coordinates were read.
    pub fn records_compared(&self) -> u64 {
        self.records_probed + self.records_scanned
    }

    pub fn merge(&mut self, other: &QueryStats) {
        self.nodes_visited += other.nodes_visited;
        self.leaves_visited += other.leaves_visited;
        self.records_probed += other.records_probed;
        self.records_scanned += other.records_scanned;
    }
}

impl Probe for QueryStats {
    #[inline(always)]
    fn node(&mut self) {
        self.nodes_visited += 1;
    }
    #[inline(always)]
    fn leaf(&mut self) {
        self.leaves_visited += 1;
    }
    #[inline(always)]
    fn probe(&mut self) {
        self.records_probed += 1;
    }
    #[inline(always)]
    fn scan(&mut self) {
        self.records_scanned += 1;
    }
}
