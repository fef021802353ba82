#![allow(dead_code)]

use rand::Rng;
use spectra_core::decomposition::{Decomposition, PieceKind};

/// Brute-force classification from the transitive closure.
#[derive(Debug, PartialEq, Eq)]
pub struct OracleDecomposition {
    /// (sorted nodes, periodic?) ordered by smallest node.
    pub pieces: Vec<(Vec<u32>, bool)>,
    /// (from, to, sorted non-piece nodes on some from → to path).
    pub transients: Vec<(usize, usize, Vec<u32>)>,
}

pub fn closure(adj: &[Vec<u32>]) -> Vec<Vec<bool>> {
    let n = adj.len();
    let mut r = vec![vec![false; n]; n];
    for (v, outs) in adj.iter().enumerate() {
        for &w in outs {
            r[v][w as usize] = true;
        }
    }
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                for j in 0..n {
                    if r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
    }
    r
}

pub fn oracle(adj: &[Vec<u32>]) -> OracleDecomposition {
    let n = adj.len();
    let r = closure(adj);
    let mut seen = vec![false; n];
    let mut pieces = Vec::new();
    let mut piece_of = vec![None; n];
    for v in 0..n {
        if seen[v] || !r[v][v] {
            continue;
        }
        let class: Vec<u32> = (0..n).filter(|&u| r[v][u] && r[u][v]).map(|u| u as u32).collect();
        for &u in &class {
            seen[u as usize] = true;
            piece_of[u as usize] = Some(pieces.len());
        }
        let edges: usize = class
            .iter()
            .map(|&u| adj[u as usize].iter().filter(|&&w| class.contains(&w)).count())
            .sum();
        pieces.push((class.clone(), edges == class.len()));
    }
    let mut transients = Vec::new();
    for (a, (pa, _)) in pieces.iter().enumerate() {
        for (b, (pb, _)) in pieces.iter().enumerate() {
            let (x, y) = (pa[0] as usize, pb[0] as usize);
            if a == b || !r[x][y] {
                continue;
            }
            let nodes: Vec<u32> = (0..n)
                .filter(|&v| piece_of[v].is_none() && r[x][v] && r[v][y])
                .map(|v| v as u32)
                .collect();
            transients.push((a, b, nodes));
        }
    }
    OracleDecomposition { pieces, transients }
}

pub fn as_oracle(d: &Decomposition) -> OracleDecomposition {
    OracleDecomposition {
        pieces: d
            .pieces
            .iter()
            .map(|p| (p.nodes.clone(), p.kind == PieceKind::SubhorseshoePeriodic))
            .collect(),
        transients: d.transients.iter().map(|t| (t.from, t.to, t.nodes.clone())).collect(),
    }
}

/// Removes nodes without a predecessor or successor until none remain, then reindexes.
pub fn trim(adj: Vec<Vec<u32>>) -> Vec<Vec<u32>> {
    let n = adj.len();
    let mut alive = vec![true; n];
    loop {
        let mut indeg = vec![0usize; n];
        let mut outdeg = vec![0usize; n];
        for v in (0..n).filter(|&v| alive[v]) {
            for &w in adj[v].iter().filter(|&&w| alive[w as usize]) {
                outdeg[v] += 1;
                indeg[w as usize] += 1;
            }
        }
        let dead: Vec<usize> = (0..n).filter(|&v| alive[v] && (indeg[v] == 0 || outdeg[v] == 0)).collect();
        if dead.is_empty() {
            break;
        }
        for v in dead {
            alive[v] = false;
        }
    }
    let mut index = vec![u32::MAX; n];
    let mut k = 0;
    for v in 0..n {
        if alive[v] {
            index[v] = k;
            k += 1;
        }
    }
    (0..n)
        .filter(|&v| alive[v])
        .map(|v| {
            let mut outs: Vec<u32> = adj[v].iter().filter(|&&w| alive[w as usize]).map(|&w| index[w as usize]).collect();
            outs.sort_unstable();
            outs.dedup();
            outs
        })
        .collect()
}

/// A trimmed random graph with at most `max_n` nodes: dense forward edges and sparse back edges,
/// so that there are several pieces joined by transient paths.
pub fn random_trimmed_graph(rng: &mut impl Rng, max_n: usize) -> Vec<Vec<u32>> {
    loop {
        let n = rng.gen_range(1..=max_n);
        let fwd = rng.gen_range(0.02..0.2);
        let back = rng.gen_range(0.0..0.08);
        let selfloop = rng.gen_range(0.0..0.2);
        let adj: Vec<Vec<u32>> = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| {
                        let p = match j.cmp(&i) {
                            std::cmp::Ordering::Greater => fwd,
                            std::cmp::Ordering::Equal => selfloop,
                            std::cmp::Ordering::Less => back,
                        };
                        rng.gen_bool(p)
                    })
                    .map(|j| j as u32)
                    .collect()
            })
            .collect();
        let t = trim(adj);
        if !t.is_empty() {
            return t;
        }
    }
}

/// Markov numbers up to `max` from a direct search of x² + y² + z² = 3xyz.
pub fn markov_numbers(max: u64) -> Vec<u64> {
    let mut found = std::collections::BTreeSet::new();
    for z in 1..=max {
        for y in 1..=z {
            // x² − 3yz·x + (y² + z²) = 0
            let b = 3 * y * z;
            let c = y * y + z * z;
            let disc = b * b - 4 * c;
            let s = (disc as f64).sqrt().round() as u64;
            for s in s.saturating_sub(1)..=s + 1 {
                if s * s == disc && (b + s) % 2 == 0 {
                    for x in [(b - s) / 2, (b + s) / 2] {
                        if x >= 1 && x <= y && x * x + y * y + z * z == 3 * x * y * z {
                            found.insert(z);
                        }
                    }
                }
            }
        }
    }
    found.into_iter().collect()
}
