//! Window graphs: hyperbolic sets of finite type on the symbolic side.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::symbolic::{Letter, TransitionSystem, Word};

/// Nodes are admissible (2n+1)-words; u→v iff u[1..] = v[..2n] and the joined word is admissible.
/// Always trimmed: every node lies on a bi-infinite path.
#[derive(Clone, Debug)]
pub struct FiniteTypeSet {
    ts: TransitionSystem,
    memory: usize,
    windows: Vec<Word>,
    succ: Vec<Vec<u32>>,
    pred: Vec<Vec<u32>>,
}

impl FiniteTypeSet {
    /// Overlap graph on the given windows, trimmed of nodes without bi-infinite extension.
    pub fn from_windows(ts: &TransitionSystem, memory: usize, windows: Vec<Word>) -> Result<Self> {
        let len = 2 * memory + 1;
        let mut windows: Vec<Word> = windows
            .into_iter()
            .filter(|w| w.len() == len && ts.admits(w))
            .collect();
        windows.sort();
        windows.dedup();
        let mut alive = vec![true; windows.len()];
        let (succ, pred) = overlap_edges(ts, &windows);
        let mut indeg: Vec<usize> = pred.iter().map(Vec::len).collect();
        let mut outdeg: Vec<usize> = succ.iter().map(Vec::len).collect();
        let mut stack: Vec<usize> = (0..windows.len()).filter(|&i| indeg[i] == 0 || outdeg[i] == 0).collect();
        while let Some(i) = stack.pop() {
            if !alive[i] {
                continue;
            }
            alive[i] = false;
            for &j in &succ[i] {
                let j = j as usize;
                indeg[j] -= 1;
                if alive[j] && indeg[j] == 0 {
                    stack.push(j);
                }
            }
            for &j in &pred[i] {
                let j = j as usize;
                outdeg[j] -= 1;
                if alive[j] && outdeg[j] == 0 {
                    stack.push(j);
                }
            }
        }
        let kept: Vec<Word> = windows
            .into_iter()
            .zip(&alive)
            .filter_map(|(w, &a)| a.then_some(w))
            .collect();
        if kept.is_empty() {
            return Err(Error::EmptyAfterTrim);
        }
        let (succ, pred) = overlap_edges(ts, &kept);
        Ok(FiniteTypeSet { ts: ts.clone(), memory, windows: kept, succ, pred })
    }

    /// Every admissible window of the ambient system.
    pub fn full(ts: &TransitionSystem, memory: usize) -> Result<Self> {
        Self::from_windows(ts, memory, ts.enumerate_words(2 * memory + 1))
    }

    /// Graph with arbitrary adjacency, given as letters of a memory-0 system.
    pub fn from_graph(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let labels = (0..n).map(|i| format!("v{i}")).collect();
        let mut allowed = vec![false; n * n];
        for &(a, b) in edges {
            allowed[a * n + b] = true;
        }
        // stranded letters are legal here; trimming removes them
        let ts = TransitionSystem::from_matrix_unchecked(labels, allowed);
        Self::from_windows(&ts, 0, (0..n).map(|i| Word::new([i as Letter])).collect())
    }

    pub fn ts(&self) -> &TransitionSystem {
        &self.ts
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn window_len(&self) -> usize {
        2 * self.memory + 1
    }

    pub fn windows(&self) -> &[Word] {
        &self.windows
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn succ(&self, v: usize) -> &[u32] {
        &self.succ[v]
    }

    pub fn pred(&self, v: usize) -> &[u32] {
        &self.pred[v]
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn index_of(&self, w: &[Letter]) -> Option<usize> {
        self.windows.binary_search_by(|x| x.letters().cmp(w)).ok()
    }

    /// The same set read backwards in time.
    pub fn reversed(&self) -> FiniteTypeSet {
        let ts = self.ts.reversed();
        let windows = self.windows.iter().map(Word::reversed).collect();
        FiniteTypeSet::from_windows(&ts, self.memory, windows).expect("reversal keeps bi-infinite paths")
    }

    /// Letters that occur in some node.
    pub fn letters(&self) -> Vec<Letter> {
        let mut seen = vec![false; self.ts.len()];
        for w in &self.windows {
            for &a in w.letters() {
                seen[a as usize] = true;
            }
        }
        (0..self.ts.len()).filter(|&a| seen[a]).map(|a| a as Letter).collect()
    }

    pub fn start(&self) -> LangState {
        LangState { consumed: 0, nodes: (0..self.windows.len() as u32).collect() }
    }

    /// Reads one more letter of a word of the language, returning None if it leaves the language.
    pub fn step(&self, s: &LangState, a: Letter) -> Option<LangState> {
        let len = self.window_len();
        let nodes: Vec<u32> = if s.consumed < len {
            s.nodes
                .iter()
                .copied()
                .filter(|&v| self.windows[v as usize][s.consumed] == a)
                .collect()
        } else {
            let mut out: Vec<u32> = s
                .nodes
                .iter()
                .flat_map(|&v| self.succ[v as usize].iter().copied())
                .filter(|&w| self.windows[w as usize][len - 1] == a)
                .collect();
            out.sort_unstable();
            out.dedup();
            out
        };
        if nodes.is_empty() {
            None
        } else {
            Some(LangState { consumed: (s.consumed + 1).min(len), nodes })
        }
    }

    /// Whether the word occurs along some bi-infinite path.
    pub fn in_language(&self, w: &[Letter]) -> bool {
        let mut s = self.start();
        for &a in w {
            match self.step(&s, a) {
                Some(n) => s = n,
                None => return false,
            }
        }
        true
    }

    /// All words of length k in the language, sorted.
    pub fn language_words(&self, k: usize) -> Vec<Word> {
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(k);
        self.walk(&self.start(), &mut cur, k, &mut out);
        out
    }

    fn walk(&self, s: &LangState, cur: &mut Vec<Letter>, k: usize, out: &mut Vec<Word>) {
        if cur.len() == k {
            out.push(Word(cur.clone()));
            return;
        }
        for a in 0..self.ts.len() as Letter {
            if let Some(n) = self.step(s, a) {
                cur.push(a);
                self.walk(&n, cur, k, out);
                cur.pop();
            }
        }
    }

    /// Whether the node graph has no cycle besides isolated simple cycles.
    pub fn is_cycle_union(&self) -> bool {
        crate::decomposition::tarjan(&self.succ)
            .iter()
            .all(|c| c.iter().all(|&v| {
                self.succ[v as usize].iter().filter(|w| c.contains(w)).count() <= 1
            }))
    }

    pub fn adjacency(&self) -> &[Vec<u32>] {
        &self.succ
    }
}

/// Position in the language automaton: letters consumed (capped at the window length) and
/// the nodes consistent with what was read.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LangState {
    consumed: usize,
    nodes: Vec<u32>,
}

impl LangState {
    pub fn nodes(&self) -> &[u32] {
        &self.nodes
    }
}

fn overlap_edges(ts: &TransitionSystem, windows: &[Word]) -> (Vec<Vec<u32>>, Vec<Vec<u32>>) {
    let n = windows.len();
    let mut by_prefix: HashMap<&[Letter], Vec<u32>> = HashMap::new();
    for (i, w) in windows.iter().enumerate() {
        let l = w.len();
        by_prefix.entry(&w[..l - 1]).or_default().push(i as u32);
    }
    let mut succ = vec![Vec::new(); n];
    let mut pred = vec![Vec::new(); n];
    for (i, w) in windows.iter().enumerate() {
        if let Some(cands) = by_prefix.get(&w[1..]) {
            for &j in cands {
                let v = &windows[j as usize];
                if ts.allows(w[w.len() - 1], v[v.len() - 1]) {
                    succ[i].push(j);
                    pred[j as usize].push(i as u32);
                }
            }
        }
    }
    for p in &mut pred {
        p.sort_unstable();
    }
    (succ, pred)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::digit_labels;

    fn full2() -> TransitionSystem {
        TransitionSystem::full(digit_labels(&[1, 2])).unwrap()
    }

    #[test]
    fn de_bruijn() {
        let x = FiniteTypeSet::full(&full2(), 1).unwrap();
        assert_eq!(x.len(), 8);
        assert_eq!(x.edge_count(), 16);
    }

    #[test]
    fn acyclic_windows_trim_away() {
        let ts = TransitionSystem::full(vec!["a".into(), "b".into()]).unwrap();
        let r = FiniteTypeSet::from_windows(&ts, 1, vec![Word::new([0, 0, 1]), Word::new([0, 1, 1])]);
        assert_eq!(r.unwrap_err(), Error::EmptyAfterTrim);
    }

    #[test]
    fn language_of_full_shift() {
        let ts = full2();
        let x = FiniteTypeSet::full(&ts, 2).unwrap();
        assert_eq!(x.language_words(7), ts.enumerate_words(7));
        let g = FiniteTypeSet::full(&TransitionSystem::with_forbidden(digit_labels(&[1, 2]), &[(1, 1)]).unwrap(), 0).unwrap();
        assert_eq!(g.language_words(3).len(), 5);
    }

    #[test]
    fn two_fixed_points() {
        let ts = full2();
        let x = FiniteTypeSet::from_windows(&ts, 1, vec![Word::new([0; 3]), Word::new([1; 3])]).unwrap();
        assert_eq!(x.len(), 2);
        assert!(x.in_language(&[0; 9]));
        assert!(!x.in_language(&[0, 0, 1]));
        assert!(x.is_cycle_union());
        assert_eq!(x.reversed().len(), 2);
    }
}
