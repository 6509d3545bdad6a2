//! Simple undirected graphs on `{0, .., n-1}` with the source/sink
//! convention `source = 0`, `sink = 1`. Vertices are 0-indexed
//! internally; all text formats are 1-based.

use std::io::{BufRead, Write};

use crate::error::{invalid, Error, Result};

pub const SOURCE: u32 = 0;
pub const SINK: u32 = 1;

/// Number of unordered vertex pairs, i.e. potential edge slots.
#[inline]
pub fn slot_count(n: usize) -> u64 {
    let n = n as u64;
    n * (n - 1) / 2
}

/// Row-major upper-triangle index of the unordered pair `{u,v}`, `u < v`.
/// Slots enumerate pairs as (0,1), (0,2), .., (0,n-1), (1,2), ..
#[inline]
pub fn slot_index(u: u32, v: u32, n: usize) -> u64 {
    debug_assert!(u < v && (v as usize) < n);
    let (u, v, n) = (u as u64, v as u64, n as u64);
    u * n - u * (u + 1) / 2 + (v - u - 1)
}

/// Inverse of [`slot_index`].
pub fn slot_to_pair(slot: u64, n: usize) -> (u32, u32) {
    debug_assert!(slot < slot_count(n));
    let n = n as u64;
    // row u is the largest u with u*n - u(u+1)/2 <= slot; solve the
    // quadratic then repair off-by-one from float rounding
    let fu = ((2.0 * n as f64 - 1.0
        - ((2.0 * n as f64 - 1.0).powi(2) - 8.0 * slot as f64).sqrt())
        / 2.0)
        .floor();
    let mut u = fu.max(0.0) as u64;
    let row_start = |u: u64| u * n - u * (u + 1) / 2;
    while u + 1 < n && row_start(u + 1) <= slot {
        u += 1;
    }
    while row_start(u) > slot {
        u -= 1;
    }
    let v = u + 1 + (slot - row_start(u));
    (u as u32, v as u32)
}

/// An undirected graph stored as a sorted edge list plus adjacency
/// lists with ascending neighbors. The ascending neighbor order is what
/// makes every traversal in this crate deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(u32, u32)>,
    adj: Vec<Vec<u32>>,
}

impl Graph {
    /// Build from an edge list. Pairs may come in any order or
    /// orientation; loops are rejected, duplicates collapse.
    pub fn from_edges(n: usize, raw: impl IntoIterator<Item = (u32, u32)>) -> Result<Graph> {
        if n < 2 {
            return Err(invalid(format!("graph needs n >= 2, got {n}")));
        }
        let mut edges: Vec<(u32, u32)> = Vec::new();
        for (a, b) in raw {
            if a == b {
                return Err(invalid(format!("loop at vertex {a}")));
            }
            if a as usize >= n || b as usize >= n {
                return Err(invalid(format!("edge ({a},{b}) out of range for n={n}")));
            }
            edges.push((a.min(b), a.max(b)));
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Self::from_sorted_edges(n, edges))
    }

    /// Internal fast path: `edges` must already be sorted, deduplicated,
    /// in-range and oriented `u < v`.
    pub(crate) fn from_sorted_edges(n: usize, edges: Vec<(u32, u32)>) -> Graph {
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(edges.iter().all(|&(u, v)| u < v && (v as usize) < n));
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        // edges sorted lexicographically => each adjacency list receives
        // higher endpoints ascending, but lower endpoints also ascending;
        // interleaving breaks order, so sort (lists are short).
        for list in &mut adj {
            list.sort_unstable();
        }
        Graph { n, edges, adj }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Neighbors of `v`, ascending.
    pub fn adj(&self, v: u32) -> &[u32] {
        &self.adj[v as usize]
    }

    pub fn degree(&self, v: u32) -> usize {
        self.adj[v as usize].len()
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        if a == b {
            return false;
        }
        self.adj[a as usize].binary_search(&b).is_ok()
    }

    /// Serialize as an edge list: header `n <n>`, then one `u v` line per
    /// edge, 1-based, endpoints ascending, lines sorted.
    pub fn write_edge_list(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "n {}", self.n)?;
        for &(u, v) in &self.edges {
            writeln!(w, "{} {}", u + 1, v + 1)?;
        }
        Ok(())
    }

    pub fn read_edge_list(r: impl BufRead) -> Result<Graph> {
        let mut lines = r.lines().enumerate();
        let (_, first) = lines
            .next()
            .ok_or_else(|| Error::Parse { line: 1, what: "empty input".into() })?;
        let first = first?;
        let n: usize = first
            .strip_prefix("n ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Parse { line: 1, what: format!("expected 'n <count>', got '{first}'") })?;
        let mut edges = Vec::new();
        for (idx, line) in lines {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let mut it = t.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<u32> {
                tok.and_then(|s| s.parse::<u32>().ok())
                    .filter(|&x| x >= 1)
                    .ok_or_else(|| Error::Parse { line: idx + 1, what: format!("bad edge line '{t}'") })
            };
            let u = parse(it.next())?;
            let v = parse(it.next())?;
            if it.next().is_some() {
                return Err(Error::Parse { line: idx + 1, what: format!("trailing tokens in '{t}'") });
            }
            edges.push((u - 1, v - 1));
        }
        Graph::from_edges(n, edges)
    }
}
