//! Shortest paths and exhaustive enumeration of near-optimal simple
//! s-t paths, in the unweighted (hopcount) and weighted (FPP) models.
//!
//! All searches break ties toward the smallest vertex id, so every
//! output is a deterministic function of the instance; enumeration
//! visits neighbors in ascending order, which makes ensembles come out
//! lexicographically sorted by vertex sequence.

use std::io::{BufRead, Write};

use crate::error::{invalid, Error, Result};
use crate::fpp::{sparsify, weight_threshold, WeightVector};
use crate::graph::{Graph, SINK, SOURCE};

/// Default node-expansion cap for enumerations. The polynomial-size
/// guarantee for near-optimal path sets is only with-high-probability;
/// atypical instances must fail loudly instead of hanging.
pub const DEFAULT_WORK_BUDGET: u64 = 100_000_000;

/// A simple source-sink path. The derived edge key list is sorted, so
/// intersections are linear merges; keys pack endpoints as
/// (min << 32) | max and are independent of n.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Path {
    vertices: Vec<u32>,
    edge_keys: Vec<u64>,
}

#[inline]
pub fn edge_key(u: u32, v: u32) -> u64 {
    let (a, b) = (u.min(v), u.max(v));
    ((a as u64) << 32) | b as u64
}

impl Path {
    pub fn new(vertices: Vec<u32>) -> Result<Path> {
        if vertices.len() < 2 {
            return Err(invalid("path needs at least one edge"));
        }
        if vertices[0] != SOURCE || *vertices.last().unwrap() != SINK {
            return Err(invalid(format!(
                "path must run source -> sink, got {:?}",
                vertices
            )));
        }
        let mut seen = vertices.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("path repeats a vertex"));
        }
        let mut edge_keys: Vec<u64> = vertices.windows(2).map(|w| edge_key(w[0], w[1])).collect();
        edge_keys.sort_unstable();
        Ok(Path { vertices, edge_keys })
    }

    pub fn vertices(&self) -> &[u32] {
        &self.vertices
    }

    /// Number of edges; equals the squared Euclidean norm of the 0/1
    /// edge-indicator vector.
    pub fn hopcount(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn edge_keys(&self) -> &[u64] {
        &self.edge_keys
    }

    pub fn contains_edge(&self, u: u32, v: u32) -> bool {
        self.edge_keys.binary_search(&edge_key(u, v)).is_ok()
    }

    /// |self ∩ other| as edge sets: sorted-merge count.
    pub fn shared_edges(&self, other: &Path) -> usize {
        let (a, b) = (&self.edge_keys, &other.edge_keys);
        let (mut i, mut j, mut k) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    k += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        k
    }
}

pub fn hopcount(p: &Path) -> usize {
    p.hopcount()
}

/// Total weight of a path under a weight vector.
pub fn path_length_weighted(p: &Path, w: &WeightVector) -> f64 {
    p.vertices
        .windows(2)
        .map(|e| w.get(e[0], e[1]))
        .sum()
}

/// Hop-budget selection for the unweighted ensemble.
#[derive(Debug, Clone, Copy)]
pub enum BudgetMode {
    /// L = ceil((1+eps) * OPT), instance-adaptive (the default reading).
    OptRelative { eps: f64 },
    /// Explicit hop budget L.
    FixedBudget { l: usize },
}

/// The budget actually applied, recorded in the ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnsembleBudget {
    Hops { l: usize },
    Weight {
        budget: f64,
        hop_cap: usize,
        hop_band: Option<(usize, usize)>,
    },
}

/// The instance optimum the budget was measured against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptValue {
    Hops(usize),
    Weight(f64),
}

/// A deduplicated, lexicographically ordered set of near-optimal
/// simple s-t paths together with the budget that defines it.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    paths: Vec<Path>,
    pub budget: EnsembleBudget,
    pub opt_value: OptValue,
}

impl PathEnsemble {
    /// Assemble an ensemble from explicit members, deduplicated and
    /// lexicographically ordered like the search-built ones.
    pub fn from_paths(mut paths: Vec<Path>, budget: EnsembleBudget, opt_value: OptValue) -> Self {
        paths.sort();
        paths.dedup();
        PathEnsemble { paths, budget, opt_value }
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Dump format: a `k = v` header line with n, model, budget and
    /// optimum, then one path per line as comma-separated 1-based ids.
    pub fn write_dump(&self, n: usize, mut out: impl Write) -> Result<()> {
        match (self.budget, self.opt_value) {
            (EnsembleBudget::Hops { l }, OptValue::Hops(opt)) => {
                writeln!(out, "n {n} model unweighted budget {l} opt {opt}")?;
            }
            (
                EnsembleBudget::Weight { budget, hop_cap, hop_band },
                OptValue::Weight(opt),
            ) => {
                write!(out, "n {n} model weighted budget {budget} hop_cap {hop_cap}")?;
                if let Some((lo, hi)) = hop_band {
                    write!(out, " hop_band {lo}:{hi}")?;
                }
                writeln!(out, " opt {opt}")?;
            }
            _ => return Err(invalid("ensemble budget/opt model mismatch")),
        }
        for p in &self.paths {
            let ids: Vec<String> = p.vertices.iter().map(|v| (v + 1).to_string()).collect();
            writeln!(out, "{}", ids.join(","))?;
        }
        Ok(())
    }

    pub fn read_dump(r: impl BufRead) -> Result<PathEnsemble> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Parse { line: 1, what: "empty dump".into() })?;
        let header = header?;
        let toks: Vec<&str> = header.split_whitespace().collect();
        let mut kv = std::collections::HashMap::new();
        for pair in toks.chunks(2) {
            if pair.len() == 2 {
                kv.insert(pair[0], pair[1]);
            }
        }
        let bad_header = || Error::Parse { line: 1, what: format!("bad dump header '{header}'") };
        let model = *kv.get("model").ok_or_else(bad_header)?;
        let (budget, opt_value) = match model {
            "unweighted" => {
                let l = kv.get("budget").and_then(|s| s.parse().ok()).ok_or_else(bad_header)?;
                let opt = kv.get("opt").and_then(|s| s.parse().ok()).ok_or_else(bad_header)?;
                (EnsembleBudget::Hops { l }, OptValue::Hops(opt))
            }
            "weighted" => {
                let budget = kv.get("budget").and_then(|s| s.parse().ok()).ok_or_else(bad_header)?;
                let hop_cap = kv.get("hop_cap").and_then(|s| s.parse().ok()).ok_or_else(bad_header)?;
                let hop_band = match kv.get("hop_band") {
                    None => None,
                    Some(s) => {
                        let (lo, hi) = s.split_once(':').ok_or_else(bad_header)?;
                        Some((
                            lo.parse().map_err(|_| bad_header())?,
                            hi.parse().map_err(|_| bad_header())?,
                        ))
                    }
                };
                let opt = kv.get("opt").and_then(|s| s.parse().ok()).ok_or_else(bad_header)?;
                (
                    EnsembleBudget::Weight { budget, hop_cap, hop_band },
                    OptValue::Weight(opt),
                )
            }
            other => {
                return Err(Error::Parse { line: 1, what: format!("unknown model '{other}'") })
            }
        };
        let mut paths = Vec::new();
        for (idx, line) in lines {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let ids: Option<Vec<u32>> = t
                .split(',')
                .map(|s| s.trim().parse::<u32>().ok().filter(|&x| x >= 1).map(|x| x - 1))
                .collect();
            let ids = ids.ok_or_else(|| Error::Parse { line: idx + 1, what: format!("bad path line '{t}'") })?;
            paths.push(Path::new(ids).map_err(|e| Error::Parse { line: idx + 1, what: e.to_string() })?);
        }
        Ok(PathEnsemble { paths, budget, opt_value })
    }
}

/// BFS hop distances from `from` to every vertex; u32::MAX when
/// unreachable.
pub fn bfs_distances(g: &Graph, from: u32) -> Vec<u32> {
    let mut dist = vec![u32::MAX; g.n()];
    dist[from as usize] = 0;
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(from);
    while let Some(v) = queue.pop_front() {
        let dv = dist[v as usize];
        for &w in g.adj(v) {
            if dist[w as usize] == u32::MAX {
                dist[w as usize] = dv + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Breadth-first shortest s-t path, smallest-id predecessor on ties.
/// None when the terminals are disconnected.
pub fn shortest_path_unweighted(g: &Graph) -> Option<Path> {
    let dist = bfs_distances(g, SOURCE);
    if dist[SINK as usize] == u32::MAX {
        return None;
    }
    let mut rev = vec![SINK];
    let mut cur = SINK;
    while cur != SOURCE {
        let d = dist[cur as usize];
        // adjacency is ascending, so the first qualifying neighbor is
        // the smallest-id predecessor
        let pred = *g
            .adj(cur)
            .iter()
            .find(|&&v| dist[v as usize] == d - 1)
            .expect("BFS tree is connected back to the source");
        rev.push(pred);
        cur = pred;
    }
    rev.reverse();
    Some(Path::new(rev).expect("BFS backtrack yields a valid path"))
}

/// Minimum-weight s-t path on the complete graph by dense Dijkstra,
/// smallest-id tie-breaking in the extraction scan.
pub fn shortest_path_weighted(w: &WeightVector) -> Path {
    let n = w.n();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![u32::MAX; n];
    let mut done = vec![false; n];
    dist[SOURCE as usize] = 0.0;
    for _ in 0..n {
        let mut best = usize::MAX;
        for v in 0..n {
            if !done[v] && (best == usize::MAX || dist[v] < dist[best]) {
                best = v;
            }
        }
        if best == usize::MAX || dist[best].is_infinite() {
            break;
        }
        done[best] = true;
        if best == SINK as usize {
            break;
        }
        for u in 0..n {
            if !done[u] && u != best {
                let nd = dist[best] + w.get(best as u32, u as u32);
                if nd < dist[u] {
                    dist[u] = nd;
                    pred[u] = best as u32;
                }
            }
        }
    }
    let mut rev = vec![SINK];
    let mut cur = SINK as usize;
    while cur != SOURCE as usize {
        cur = pred[cur] as usize;
        rev.push(cur as u32);
    }
    rev.reverse();
    Path::new(rev).expect("complete graph always connects the terminals")
}

/// Integer ceiling of a float target with a tolerance guard against
/// cases like 1.1 * 10 evaluating to 11.000000000000002.
fn ceil_budget(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

struct HopSearch<'a> {
    g: &'a Graph,
    dist_to_sink: Vec<u32>,
    max_hops: usize,
    work_budget: u64,
    expansions: u64,
}

impl<'a> HopSearch<'a> {
    fn new(g: &'a Graph, max_hops: usize, work_budget: u64) -> Self {
        HopSearch {
            g,
            dist_to_sink: bfs_distances(g, SINK),
            max_hops,
            work_budget,
            expansions: 0,
        }
    }

    /// Every simple s-t path with at most max_hops edges, ascending
    /// neighbor order (therefore vertex-lexicographic output order).
    fn run(&mut self, mut found: impl FnMut(&[u32])) -> Result<()> {
        let mut on_path = vec![false; self.g.n()];
        on_path[SOURCE as usize] = true;
        let mut prefix = vec![SOURCE];
        self.step(&mut prefix, &mut on_path, &mut found)?;
        Ok(())
    }

    fn step(
        &mut self,
        prefix: &mut Vec<u32>,
        on_path: &mut [bool],
        found: &mut impl FnMut(&[u32]),
    ) -> Result<()> {
        self.expansions += 1;
        if self.expansions > self.work_budget {
            return Err(Error::BudgetExceeded {
                spent: self.expansions,
                context: "path enumeration",
            });
        }
        let v = *prefix.last().unwrap();
        let depth = prefix.len() - 1;
        for &u in self.g.adj(v) {
            if u == SINK {
                found(prefix);
                continue;
            }
            if !on_path[u as usize] {
                let d = self.dist_to_sink[u as usize];
                if d != u32::MAX && depth + 1 + d as usize <= self.max_hops {
                    on_path[u as usize] = true;
                    prefix.push(u);
                    self.step(prefix, on_path, found)?;
                    prefix.pop();
                    on_path[u as usize] = false;
                }
            }
        }
        Ok(())
    }
}

fn assert_sound_unweighted(paths: &[Path], l: usize) {
    for p in paths {
        assert!(p.hopcount() <= l, "ensemble member exceeds hop budget");
        assert!(p.vertices()[0] == SOURCE && *p.vertices().last().unwrap() == SINK);
    }
    assert!(
        paths.windows(2).all(|w| w[0].vertices() < w[1].vertices()),
        "ensemble must be strictly lexicographically sorted"
    );
}

/// Enumerate every simple s-t path with hopcount <= L, where L is
/// ceil((1+eps) * OPT) in opt-relative mode or explicit in
/// fixed-budget mode.
pub fn build_ensemble_unweighted(g: &Graph, mode: BudgetMode, work_budget: u64) -> Result<PathEnsemble> {
    let opt = shortest_path_unweighted(g).map(|p| p.hopcount());
    let l = match mode {
        BudgetMode::OptRelative { eps } => {
            if !(eps >= 0.0) {
                return Err(invalid(format!("eps = {eps} must be >= 0")));
            }
            let opt = opt.ok_or_else(|| {
                invalid("opt-relative budget needs connected terminals")
            })?;
            ceil_budget((1.0 + eps) * opt as f64)
        }
        BudgetMode::FixedBudget { l } => l,
    };
    let mut paths = Vec::new();
    let mut search = HopSearch::new(g, l, work_budget);
    search.run(|prefix| {
        if prefix.len() <= l {
            // prefix has prefix.len()-1 edges; appending the sink adds one
            let mut vs = prefix.to_vec();
            vs.push(SINK);
            paths.push(Path::new(vs).expect("search emits valid paths"));
        }
    })?;
    assert_sound_unweighted(&paths, l);
    // direct (s,t) edge appears at depth 0; OPT is then 1 even if BFS
    // was skipped in fixed mode
    let opt_value = OptValue::Hops(match opt {
        Some(o) => o,
        None => {
            if paths.is_empty() {
                0
            } else {
                paths.iter().map(|p| p.hopcount()).min().unwrap()
            }
        }
    });
    Ok(PathEnsemble { paths, budget: EnsembleBudget::Hops { l }, opt_value })
}

/// Exact count N_m of simple s-t paths with exactly m edges.
pub fn count_paths_of_length(g: &Graph, m: usize) -> Result<u64> {
    if m < 1 {
        return Err(invalid("path length m must be >= 1"));
    }
    let mut count = 0u64;
    let mut search = HopSearch::new(g, m, DEFAULT_WORK_BUDGET);
    search.run(|prefix| {
        if prefix.len() == m {
            count += 1;
        }
    })?;
    Ok(count)
}

/// Dijkstra weight-distance from every vertex to the sink, restricted
/// to a sparsified graph. Used as an admissible pruning heuristic.
fn weighted_dist_to_sink(g: &Graph, w: &WeightVector) -> Vec<f64> {
    let n = g.n();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[SINK as usize] = 0.0;
    let mut heap = std::collections::BinaryHeap::new();
    heap.push(std::cmp::Reverse((ordered_float(0.0), SINK)));
    while let Some(std::cmp::Reverse((d, v))) = heap.pop() {
        if done[v as usize] {
            continue;
        }
        done[v as usize] = true;
        let dv = f64::from_bits(d.0);
        for &u in g.adj(v) {
            if !done[u as usize] {
                let nd = dv + w.get(v, u);
                if nd < dist[u as usize] {
                    dist[u as usize] = nd;
                    heap.push(std::cmp::Reverse((ordered_float(nd), u)));
                }
            }
        }
    }
    dist
}

/// Total order on non-negative finite floats via the IEEE bit pattern.
fn ordered_float(x: f64) -> OrderedBits {
    debug_assert!(x >= 0.0);
    OrderedBits(x.to_bits())
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct OrderedBits(u64);

/// All simple s-t paths with total weight <= (1+eps) ln(n)/n: sparsify
/// at the budget, enumerate under the hop cap (hop_band's upper end
/// when given, else ceil((1+2*sqrt(eps)) ln n)), then filter by exact
/// weight and the optional hop band.
pub fn build_ensemble_weighted(
    w: &WeightVector,
    eps: f64,
    hop_band: Option<(usize, usize)>,
    work_budget: u64,
) -> Result<PathEnsemble> {
    build_ensemble_weighted_thresholded(w, eps, None, hop_band, work_budget)
}

/// Same search with an explicit sparsification threshold. `None` cuts
/// at the weight budget itself, which loses no feasible path; a
/// smaller threshold additionally restricts members to light edges.
pub fn build_ensemble_weighted_thresholded(
    w: &WeightVector,
    eps: f64,
    threshold: Option<f64>,
    hop_band: Option<(usize, usize)>,
    work_budget: u64,
) -> Result<PathEnsemble> {
    if !(eps >= 0.0) {
        return Err(invalid(format!("eps = {eps} must be >= 0")));
    }
    if let Some(t) = threshold {
        if !(t >= 0.0) {
            return Err(invalid(format!("threshold = {t} must be >= 0")));
        }
    }
    if let Some((lo, hi)) = hop_band {
        if lo > hi || lo < 1 {
            return Err(invalid(format!("bad hop band [{lo},{hi}]")));
        }
    }
    let n = w.n();
    let budget = weight_threshold(n, eps);
    let hop_cap = match hop_band {
        Some((_, hi)) => hi,
        None => ceil_budget((1.0 + 2.0 * eps.sqrt()) * (n as f64).ln()),
    };
    let sparse = sparsify(w, threshold.unwrap_or(budget));
    let wdist = weighted_dist_to_sink(&sparse, w);
    let hdist = bfs_distances(&sparse, SINK);

    let mut paths = Vec::new();
    let mut expansions = 0u64;
    let mut on_path = vec![false; n];
    on_path[SOURCE as usize] = true;
    let mut prefix = vec![SOURCE];
    // recursive closure workaround: explicit stack-frame recursion
    fn descend(
        sparse: &Graph,
        w: &WeightVector,
        wdist: &[f64],
        hdist: &[u32],
        budget: f64,
        hop_cap: usize,
        hop_band: Option<(usize, usize)>,
        work_budget: u64,
        expansions: &mut u64,
        prefix: &mut Vec<u32>,
        on_path: &mut [bool],
        acc: f64,
        paths: &mut Vec<Path>,
    ) -> Result<()> {
        *expansions += 1;
        if *expansions > work_budget {
            return Err(Error::BudgetExceeded { spent: *expansions, context: "weighted enumeration" });
        }
        let v = *prefix.last().unwrap();
        let depth = prefix.len() - 1;
        for &u in sparse.adj(v) {
            let nw = acc + w.get(v, u);
            if u == SINK {
                let hops = depth + 1;
                let band_ok = hop_band.map_or(true, |(lo, hi)| hops >= lo && hops <= hi);
                if nw <= budget && hops <= hop_cap && band_ok {
                    let mut vs = prefix.clone();
                    vs.push(SINK);
                    paths.push(Path::new(vs).expect("search emits valid paths"));
                }
                continue;
            }
            if !on_path[u as usize]
                && hdist[u as usize] != u32::MAX
                && depth + 1 + hdist[u as usize] as usize <= hop_cap
                && nw + wdist[u as usize] <= budget + 1e-12
            {
                on_path[u as usize] = true;
                prefix.push(u);
                descend(
                    sparse, w, wdist, hdist, budget, hop_cap, hop_band, work_budget,
                    expansions, prefix, on_path, nw, paths,
                )?;
                prefix.pop();
                on_path[u as usize] = false;
            }
        }
        Ok(())
    }
    descend(
        &sparse, w, &wdist, &hdist, budget, hop_cap, hop_band, work_budget,
        &mut expansions, &mut prefix, &mut on_path, 0.0, &mut paths,
    )?;

    for p in &paths {
        assert!(path_length_weighted(p, w) <= budget, "member exceeds weight budget");
        assert!(p.hopcount() <= hop_cap);
    }
    assert!(paths.windows(2).all(|x| x[0].vertices() < x[1].vertices()));
    let opt = path_length_weighted(&shortest_path_weighted(w), w);
    Ok(PathEnsemble {
        paths,
        budget: EnsembleBudget::Weight { budget, hop_cap, hop_band },
        opt_value: OptValue::Weight(opt),
    })
}
