//! Subhorseshoe/transient decomposition of window graphs, connections and chains.

use std::collections::VecDeque;

use serde::Serialize;

pub use crate::fts::FiniteTypeSet;

use crate::error::{Error, Result};
use crate::geometry::{moran_bracket, ContractionModel, MoranTarget, Side};
use crate::spectra::{markov_value, Potential, PruneMode, WindowBounds};
use crate::symbolic::{Letter, SymbolicPoint, TransitionSystem, Word};

/// Strongly connected components in reverse topological order, nodes sorted within each.
pub fn tarjan(adj: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let n = adj.len();
    const NONE: u32 = u32::MAX;
    let mut index = vec![NONE; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut next = 0u32;
    let mut call: Vec<(u32, usize)> = Vec::new();
    for root in 0..n as u32 {
        if index[root as usize] != NONE {
            continue;
        }
        call.push((root, 0));
        index[root as usize] = next;
        low[root as usize] = next;
        next += 1;
        stack.push(root);
        on_stack[root as usize] = true;
        while let Some(&mut (v, ref mut ei)) = call.last_mut() {
            let vu = v as usize;
            if *ei < adj[vu].len() {
                let w = adj[vu][*ei];
                *ei += 1;
                let wu = w as usize;
                if index[wu] == NONE {
                    index[wu] = next;
                    low[wu] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[wu] = true;
                    call.push((w, 0));
                } else if on_stack[wu] {
                    low[vu] = low[vu].min(index[wu]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent as usize] = low[parent as usize].min(low[vu]);
                }
                if low[vu] == index[vu] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w as usize] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    out.push(comp);
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PieceKind {
    SubhorseshoePeriodic,
    SubhorseshoeNontrivial,
}

#[derive(Clone, Debug, Serialize)]
pub struct Piece {
    pub id: usize,
    pub nodes: Vec<u32>,
    pub kind: PieceKind,
}

#[derive(Clone, Debug, Serialize)]
pub struct Transient {
    pub from: usize,
    pub to: usize,
    /// Non-piece nodes on paths from `from` to `to`; may be empty when the pieces are adjacent.
    pub nodes: Vec<u32>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Decomposition {
    pub pieces: Vec<Piece>,
    pub transients: Vec<Transient>,
    pub piece_of: Vec<Option<usize>>,
}

pub fn decompose(x: &FiniteTypeSet) -> Decomposition {
    decompose_graph(x.adjacency())
}

/// Pieces are SCCs carrying a cycle, ordered by smallest node; transients are grouped by
/// (source piece, target piece) over reachable ordered pairs.
pub fn decompose_graph(adj: &[Vec<u32>]) -> Decomposition {
    let n = adj.len();
    let comps = tarjan(adj);
    let mut comp_of = vec![0usize; n];
    for (ci, c) in comps.iter().enumerate() {
        for &v in c {
            comp_of[v as usize] = ci;
        }
    }
    let mut pieces: Vec<Piece> = Vec::new();
    let mut cyclic: Vec<&Vec<u32>> = comps
        .iter()
        .filter(|c| c.iter().any(|&v| adj[v as usize].iter().any(|&w| comp_of[w as usize] == comp_of[v as usize])))
        .collect();
    cyclic.sort_by_key(|c| c[0]);
    let mut piece_of = vec![None; n];
    for (id, c) in cyclic.into_iter().enumerate() {
        let periodic = c.iter().all(|&v| {
            adj[v as usize].iter().filter(|&&w| comp_of[w as usize] == comp_of[v as usize]).count() == 1
        });
        for &v in c {
            piece_of[v as usize] = Some(id);
        }
        let kind = if periodic { PieceKind::SubhorseshoePeriodic } else { PieceKind::SubhorseshoeNontrivial };
        pieces.push(Piece { id, nodes: c.clone(), kind });
    }
    let np = pieces.len();
    let words = np.div_ceil(64).max(1);
    // from[v]: pieces reaching v; to[v]: pieces reachable from v (both inclusive of v's own piece)
    let reach = |forward: bool| -> Vec<Vec<u64>> {
        let mut radj = vec![Vec::new(); n];
        for (v, outs) in adj.iter().enumerate() {
            for &w in outs {
                if forward {
                    radj[w as usize].push(v as u32);
                } else {
                    radj[v].push(w);
                }
            }
        }
        // comps come out in reverse topological order; process so sources are final first
        let mut bits = vec![vec![0u64; words]; n];
        let order: Vec<&Vec<u32>> = if forward { comps.iter().rev().collect() } else { comps.iter().collect() };
        for c in order {
            let mut acc = vec![0u64; words];
            for &v in c {
                if let Some(p) = piece_of[v as usize] {
                    acc[p / 64] |= 1 << (p % 64);
                }
                for &u in &radj[v as usize] {
                    if comp_of[u as usize] != comp_of[v as usize] {
                        for (a, b) in acc.iter_mut().zip(&bits[u as usize]) {
                            *a |= *b;
                        }
                    }
                }
            }
            for &v in c {
                bits[v as usize] = acc.clone();
            }
        }
        bits
    };
    let from = reach(true);
    let to = reach(false);
    let has = |b: &[u64], p: usize| b[p / 64] >> (p % 64) & 1 == 1;
    let mut transients = Vec::new();
    for a in 0..np {
        let rep = pieces[a].nodes[0] as usize;
        for b in 0..np {
            if a == b || !has(&to[rep], b) {
                continue;
            }
            let nodes: Vec<u32> = (0..n)
                .filter(|&v| piece_of[v].is_none() && has(&from[v], a) && has(&to[v], b))
                .map(|v| v as u32)
                .collect();
            transients.push(Transient { from: a, to: b, nodes });
        }
    }
    Decomposition { pieces, transients, piece_of }
}

/// Shortest cycle inside a piece through its smallest node, as node indices.
pub fn piece_cycle(adj: &[Vec<u32>], piece: &Piece) -> Vec<u32> {
    let start = piece.nodes[0];
    let inside = |v: u32| piece.nodes.binary_search(&v).is_ok();
    cycle_through(adj, start, inside).unwrap_or_else(|| vec![start])
}

fn cycle_through(adj: &[Vec<u32>], start: u32, allowed: impl Fn(u32) -> bool) -> Option<Vec<u32>> {
    let path = bfs_path(adj, &adj[start as usize], start, &allowed)?;
    let mut cyc = vec![start];
    cyc.extend(path.into_iter().filter(|&v| v != start));
    Some(cyc)
}

/// Shortest path from any of `sources` to `target` (inclusive of both ends).
fn bfs_path(adj: &[Vec<u32>], sources: &[u32], target: u32, allowed: &impl Fn(u32) -> bool) -> Option<Vec<u32>> {
    let n = adj.len();
    let mut prev = vec![u32::MAX; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    for &s in sources {
        if allowed(s) && !seen[s as usize] {
            seen[s as usize] = true;
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        if u == target {
            let mut path = vec![u];
            let mut cur = u;
            while prev[cur as usize] != u32::MAX {
                cur = prev[cur as usize];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for &w in &adj[u as usize] {
            if allowed(w) && !seen[w as usize] {
                seen[w as usize] = true;
                prev[w as usize] = u;
                queue.push_back(w);
            }
        }
    }
    None
}

/// Sub-window-graph on one piece.
pub fn piece_system(x: &FiniteTypeSet, piece: &Piece) -> Result<FiniteTypeSet> {
    let ws = piece.nodes.iter().map(|&v| x.windows()[v as usize].clone()).collect();
    FiniteTypeSet::from_windows(x.ts(), x.memory(), ws)
}

/// HD(τ) = D_s(source piece) + D_u(target piece).
pub fn transient_dimension(tr: &Transient, dec: &Decomposition, x: &FiniteTypeSet, model: &ContractionModel, depth: usize) -> Result<f64> {
    let known = dec.transients.iter().any(|t| t.from == tr.from && t.to == tr.to);
    if tr.from == tr.to || !known {
        return Err(Error::NotTransient);
    }
    let src = piece_system(x, &dec.pieces[tr.from])?;
    let dst = piece_system(x, &dec.pieces[tr.to])?;
    let ds = moran_bracket(MoranTarget::Graph(&src), model, depth, Side::Stable)?;
    let du = moran_bracket(MoranTarget::Graph(&dst), model, depth, Side::Unstable)?;
    Ok(0.5 * (ds.alpha + ds.beta) + 0.5 * (du.alpha + du.beta))
}

/// A periodic orbit given by its period, or a set of windows at the search memory.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PieceDescriptor {
    Periodic(Word),
    Nodes(Vec<Word>),
}

impl PieceDescriptor {
    fn windows(&self, ts: &TransitionSystem, memory: usize) -> Result<Vec<Word>> {
        match self {
            PieceDescriptor::Periodic(w) => {
                let p = SymbolicPoint::periodic(ts, w).map_err(|e| Error::PieceNotRealizable(e.to_string()))?;
                Ok((0..w.len() as i64).map(|k| p.window(k, memory)).collect())
            }
            PieceDescriptor::Nodes(ws) => Ok(ws.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConnectParams {
    pub memory: usize,
    /// Bisection steps between the pieces' own values and t.
    pub steps: usize,
}

impl Default for ConnectParams {
    fn default() -> Self {
        ConnectParams { memory: 6, steps: 32 }
    }
}

#[derive(Clone, Debug)]
pub struct ConnectionReport {
    pub connected: bool,
    pub t: f64,
    pub q_witness: Option<f64>,
    /// x ∈ W^u(p1) ∩ W^s(p2)
    pub heteroclinic_x: Option<SymbolicPoint>,
    /// y ∈ W^u(p2) ∩ W^s(p1)
    pub heteroclinic_y: Option<SymbolicPoint>,
    pub piece_ids: (Option<usize>, Option<usize>),
    pub memory: usize,
}

/// Reusable window bounds for repeated connection queries at one memory.
pub struct ConnectionSearch<'a> {
    ts: &'a TransitionSystem,
    pot: &'a Potential,
    bounds: WindowBounds,
}

struct Probe {
    graph: FiniteTypeSet,
    n1: Vec<usize>,
    n2: Vec<usize>,
    same_scc: bool,
    scc_ids: (usize, usize),
}

impl<'a> ConnectionSearch<'a> {
    pub fn new(ts: &'a TransitionSystem, pot: &'a Potential, memory: usize) -> Result<Self> {
        Ok(ConnectionSearch { ts, pot, bounds: WindowBounds::compute(ts, pot, memory)? })
    }

    pub fn memory(&self) -> usize {
        self.bounds.memory
    }

    fn probe(&self, w1: &[Word], w2: &[Word], q: f64, mode: PruneMode) -> Option<Probe> {
        let s = self.bounds.prune(self.ts, q, mode);
        let graph = s.graph?;
        let find = |ws: &[Word]| -> Option<Vec<usize>> { ws.iter().map(|w| graph.index_of(w)).collect() };
        let n1 = find(w1)?;
        let n2 = find(w2)?;
        let comps = tarjan(graph.adjacency());
        let mut comp_of = vec![0usize; graph.len()];
        for (i, c) in comps.iter().enumerate() {
            for &v in c {
                comp_of[v as usize] = i;
            }
        }
        let (c1, c2) = (comp_of[n1[0]], comp_of[n2[0]]);
        let same_scc = n1.iter().chain(&n2).all(|&v| comp_of[v] == c1);
        Some(Probe { graph, n1, n2, same_scc, scc_ids: (c1, c2) })
    }

    fn start_value(&self, d: &PieceDescriptor) -> Result<f64> {
        match d {
            PieceDescriptor::Periodic(w) => {
                let p = SymbolicPoint::periodic(self.ts, w).map_err(|e| Error::PieceNotRealizable(e.to_string()))?;
                markov_value(self.pot, self.ts, &p)
            }
            PieceDescriptor::Nodes(_) => Ok(self.bounds.global.0),
        }
    }

    /// Smallest q (to bisection resolution) in [lo, hi] at which both pieces share one SCC.
    pub fn threshold(&self, p1: &PieceDescriptor, p2: &PieceDescriptor, lo: f64, hi: f64, steps: usize, mode: PruneMode) -> Result<Option<f64>> {
        let w1 = p1.windows(self.ts, self.memory())?;
        let w2 = p2.windows(self.ts, self.memory())?;
        let ok = |q: f64| self.probe(&w1, &w2, q, mode).is_some_and(|p| p.same_scc);
        if !ok(hi) {
            return Ok(None);
        }
        if ok(lo) {
            return Ok(Some(lo));
        }
        let (mut a, mut b) = (lo, hi);
        for _ in 0..steps {
            let mid = 0.5 * (a + b);
            if ok(mid) {
                b = mid;
            } else {
                a = mid;
            }
        }
        Ok(Some(b))
    }

    pub fn connected_before(&self, p1: &PieceDescriptor, p2: &PieceDescriptor, t: f64, steps: usize) -> Result<ConnectionReport> {
        let memory = self.memory();
        let w1 = p1.windows(self.ts, memory)?;
        let w2 = p2.windows(self.ts, memory)?;
        let q_hi = t - 1e-12 * t.abs().max(1.0);
        let not_connected = |ids| ConnectionReport {
            connected: false,
            t,
            q_witness: None,
            heteroclinic_x: None,
            heteroclinic_y: None,
            piece_ids: ids,
            memory,
        };
        let Some(top) = self.probe(&w1, &w2, q_hi, PruneMode::Inner) else {
            return Err(Error::PieceNotRealizable(format!("pieces absent from the inner sublevel below t = {t}")));
        };
        if !top.same_scc {
            return Ok(not_connected((Some(top.scc_ids.0), Some(top.scc_ids.1))));
        }
        let lo = self.start_value(p1)?.max(self.start_value(p2)?).min(q_hi);
        let q = self.threshold(p1, p2, lo, q_hi, steps, PruneMode::Inner)?.unwrap_or(q_hi);
        let probe = self.probe(&w1, &w2, q, PruneMode::Inner).expect("threshold probe is connected");
        let (x, y) = self.witnesses(&probe)?;
        for p in [&x, &y] {
            let m = markov_value(self.pot, self.ts, p)?;
            if m > q + 1e-9 {
                return Err(Error::NumericFailure(format!("witness value {m} exceeds q = {q}")));
            }
        }
        Ok(ConnectionReport {
            connected: true,
            t,
            q_witness: Some(q),
            heteroclinic_x: Some(x),
            heteroclinic_y: Some(y),
            piece_ids: (Some(probe.scc_ids.0), Some(probe.scc_ids.1)),
            memory,
        })
    }

    fn witnesses(&self, p: &Probe) -> Result<(SymbolicPoint, SymbolicPoint)> {
        let g = &p.graph;
        let adj = g.adjacency();
        let centre = |v: u32| g.windows()[v as usize][g.memory()];
        let set1: Vec<u32> = p.n1.iter().map(|&v| v as u32).collect();
        let set2: Vec<u32> = p.n2.iter().map(|&v| v as u32).collect();
        let cyc = |set: &Vec<u32>| -> Vec<u32> {
            cycle_through(adj, set[0], |v| set.contains(&v)).unwrap_or_else(|| vec![set[0]])
        };
        let c1 = cyc(&set1);
        let c2 = cyc(&set2);
        let build = |ca: &[u32], cb: &[u32]| -> Result<SymbolicPoint> {
            let path = bfs_path(adj, &[ca[0]], cb[0], &|_| true)
                .ok_or_else(|| Error::NumericFailure("no connecting path in SCC".into()))?;
            let left: Vec<Letter> = ca.iter().map(|&v| centre(v)).collect();
            let core: Vec<Letter> = path[..path.len() - 1].iter().map(|&v| centre(v)).collect();
            let right: Vec<Letter> = cb.iter().map(|&v| centre(v)).collect();
            SymbolicPoint::new(self.ts, Word(left), Word(core), Word(right), 0)
        };
        Ok((build(&c1, &c2)?, build(&c2, &c1)?))
    }
}

/// Whether p1 and p2 lie in one subhorseshoe of the inner sublevel at some q < t.
pub fn connected_before(
    p1: &PieceDescriptor,
    p2: &PieceDescriptor,
    t: f64,
    ts: &TransitionSystem,
    pot: &Potential,
    params: ConnectParams,
) -> Result<ConnectionReport> {
    ConnectionSearch::new(ts, pot, params.memory)?.connected_before(p1, p2, t, params.steps)
}

/// (1,2) ∧ (2,3) ⟹ (1,3).
pub fn verify_transitivity(r12: &ConnectionReport, r23: &ConnectionReport, r13: &ConnectionReport) -> bool {
    !(r12.connected && r23.connected) || r13.connected
}

/// Greedy maximal chains: from the least unused index, repeatedly append the next unused
/// index that the current end connects with.
pub fn chains_by(n: usize, mut connects: impl FnMut(usize, usize) -> Result<bool>) -> Result<Vec<Vec<usize>>> {
    let mut used = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if used[start] {
            continue;
        }
        used[start] = true;
        let mut chain = vec![start];
        let mut cur = start;
        for j in start + 1..n {
            if !used[j] && connects(cur, j)? {
                used[j] = true;
                chain.push(j);
                cur = j;
            }
        }
        out.push(chain);
    }
    Ok(out)
}

/// Chains of pieces with ascending thresholds: i → j when piece i connects with piece j before t_j.
pub fn chains(pieces: &[(PieceDescriptor, f64)], ts: &TransitionSystem, pot: &Potential, params: ConnectParams) -> Result<Vec<Vec<usize>>> {
    if pieces.windows(2).any(|w| w[0].1 > w[1].1) {
        return Err(Error::InvalidParams("thresholds must be ascending".into()));
    }
    let search = ConnectionSearch::new(ts, pot, params.memory)?;
    chains_by(pieces.len(), |i, j| match search.connected_before(&pieces[i].0, &pieces[j].0, pieces[j].1, params.steps) {
        Ok(r) => Ok(r.connected),
        Err(Error::PieceNotRealizable(_)) => Ok(false),
        Err(e) => Err(e),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RatioTable;
    use crate::symbolic::digit_labels;

    #[test]
    fn complete_graph_one_piece() {
        let adj = vec![vec![0, 1, 2], vec![0, 1, 2], vec![0, 1, 2]];
        let d = decompose_graph(&adj);
        assert_eq!(d.pieces.len(), 1);
        assert_eq!(d.pieces[0].kind, PieceKind::SubhorseshoeNontrivial);
        assert!(d.transients.is_empty());
    }

    #[test]
    fn two_loops_and_a_bridge() {
        let x = FiniteTypeSet::from_graph(3, &[(0, 0), (0, 1), (1, 2), (2, 2)]).unwrap();
        let d = decompose(&x);
        assert_eq!(d.pieces.len(), 2);
        assert!(d.pieces.iter().all(|p| p.kind == PieceKind::SubhorseshoePeriodic));
        assert_eq!(d.transients.len(), 1);
        assert_eq!((d.transients[0].from, d.transients[0].to), (0, 1));
        assert_eq!(d.transients[0].nodes, vec![1]);
    }

    #[test]
    fn transient_dimension_example() {
        let ts = TransitionSystem::new(
            vec!["p".into(), "a".into(), "b".into()],
            &[(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 1), (2, 2)],
        )
        .unwrap();
        let r = RatioTable::uniform(3, 1.0 / 3.0);
        let m = ContractionModel::product(r.clone(), r).unwrap();
        let x = FiniteTypeSet::full(&ts, 0).unwrap();
        let d = decompose(&x);
        assert_eq!(d.pieces.len(), 2);
        let tr = &d.transients[0];
        let v = transient_dimension(tr, &d, &x, &m, 2).unwrap();
        assert!((v - 2f64.ln() / 3f64.ln()).abs() < 1e-9);
        let bogus = Transient { from: 0, to: 0, nodes: vec![] };
        assert_eq!(transient_dimension(&bogus, &d, &x, &m, 2), Err(Error::NotTransient));
    }

    #[test]
    fn chain_greedy() {
        let conn = |i: usize, j: usize| Ok((i, j) == (0, 1) || (i, j) == (2, 3));
        assert_eq!(chains_by(5, conn).unwrap(), vec![vec![0, 1], vec![2, 3], vec![4]]);
        assert_eq!(chains_by(3, |_, _| Ok(true)).unwrap(), vec![vec![0, 1, 2]]);
        assert_eq!(chains_by(3, |_, _| Ok(false)).unwrap().len(), 3);
    }

    #[test]
    fn connection_cf12_small_memory() {
        let ts = TransitionSystem::full(digit_labels(&[1, 2])).unwrap();
        let pot = Potential::CfSum { digits: vec![1, 2] };
        let p1 = PieceDescriptor::Periodic(Word::new([0]));
        let p2 = PieceDescriptor::Periodic(Word::new([1]));
        let params = ConnectParams { memory: 4, steps: 32 };
        let r = connected_before(&p1, &p2, 3.1, &ts, &pot, params).unwrap();
        assert!(r.connected);
        let q = r.q_witness.unwrap();
        assert!(q > 3.0 && q < 3.04, "{q}");
        assert!(!connected_before(&p1, &p2, 2.95, &ts, &pot, params).unwrap().connected);
        let same = connected_before(&p1, &p1, 2.5, &ts, &pot, params).unwrap();
        assert!(same.connected);
        let err = connected_before(&p1, &p2, 2.5, &ts, &pot, params);
        assert!(matches!(err, Err(Error::PieceNotRealizable(_))));
    }
}
