//! Good positions and the constructive extraction of complete subshifts inside sublevels.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cf;
use crate::decomposition::ConnectionReport;
use crate::error::{Error, Result};
use crate::fts::FiniteTypeSet;
use crate::geometry::{ifs_hull, moran_bracket, scale_cover, ContractionModel, MoranTarget, Side};
use crate::spectra::{markov_value, monotonicity_constants, BoundsContext, Potential};
use crate::symbolic::{Letter, SymbolicPoint, TransitionSystem, Word};

#[derive(Clone, Debug, Serialize)]
pub struct ExtractionParams {
    /// Base scale; `None` searches 1..=max_r0.
    pub r0: Option<u32>,
    pub max_r0: u32,
    /// Concatenation length; `None` uses min(8·J·N0², k_cap).
    pub k: Option<usize>,
    pub k_cap: usize,
    /// Reported against, never promised.
    pub eta_target: f64,
    pub memory: usize,
    /// Family words examined when exhaustive enumeration is too large.
    pub samples: usize,
    pub exhaustive_limit: usize,
    /// Cap on candidate cut words per cut.
    pub max_alphabet: usize,
    /// Drop cut words whose sup bound over the subshift reaches max f|X.
    pub containment_filter: bool,
    pub seed: u64,
}

impl Default for ExtractionParams {
    fn default() -> Self {
        ExtractionParams {
            r0: None,
            max_r0: 4,
            k: None,
            k_cap: 24,
            eta_target: 0.5,
            memory: 6,
            samples: 256,
            exhaustive_limit: 1_000_000,
            max_alphabet: 4096,
            containment_filter: true,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GoodPositionStats {
    pub word: Vec<Word>,
    pub good: Vec<usize>,
    pub right_bad: usize,
    pub left_bad: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaFormula {
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    pub d3: Option<f64>,
    pub d4: Option<f64>,
    pub min: f64,
    pub c3: f64,
    pub degenerate: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtractionRecord {
    pub r0: u32,
    pub k: usize,
    #[serde(rename = "J")]
    pub j: usize,
    pub n0: usize,
    /// The concatenation β the cut was taken from, as B0 blocks.
    pub beta: Vec<Word>,
    pub good_positions: Vec<usize>,
    /// Block positions (j, j′) with (β_j, β_{j+1}) = (β_{j′}, β_{j′+1}).
    pub cut_pair: (usize, usize),
    /// β_{j+1}…β_{j′}.
    pub o_value: Word,
    pub gamma1: Word,
    pub gamma2: Word,
    pub exhaustive: bool,
    pub family_examined: usize,
    pub good_fraction: f64,
    pub candidates: usize,
    pub filtered_out: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtractionResult {
    pub alphabet: Vec<Word>,
    pub delta_measured: f64,
    pub delta_formula: DeltaFormula,
    pub dim_lower: f64,
    pub dim_ref: f64,
    pub eta_achieved: f64,
    /// Lower bound for max f|X.
    pub max_f_lower: f64,
    /// Upper bound for sup f over Σ(ℬ_u).
    pub sup_bound: f64,
    pub record: ExtractionRecord,
}

/// Language of a trimmed window graph: a word of length ≥ L is in it iff every L-factor is a node.
struct Lang {
    l: usize,
    nodes: HashSet<Vec<Letter>>,
    short: HashSet<Vec<Letter>>,
}

impl Lang {
    fn new(x: &FiniteTypeSet) -> Lang {
        let l = x.window_len();
        let nodes: HashSet<Vec<Letter>> = x.windows().iter().map(|w| w.0.clone()).collect();
        let mut short = HashSet::new();
        for w in x.windows() {
            for a in 0..l {
                for b in a..l {
                    short.insert(w[a..b].to_vec());
                }
            }
        }
        Lang { l, nodes, short }
    }

    fn accepts(&self, w: &[Letter]) -> bool {
        if w.len() < self.l {
            return self.short.contains(w);
        }
        w.windows(self.l).all(|f| self.nodes.contains(f))
    }

    /// Whether ctx·add is in the language, given ctx is (its relevant suffix is `ctx`).
    fn extends(&self, ctx: &[Letter], add: &[Letter]) -> bool {
        let mut w = Vec::with_capacity(ctx.len() + add.len());
        w.extend_from_slice(ctx);
        w.extend_from_slice(add);
        if w.len() < self.l {
            return self.short.contains(&w[..]);
        }
        let from = self.l.max(ctx.len() + 1);
        (from..=w.len()).all(|end| self.nodes.contains(&w[end - self.l..end]))
    }

    fn state(&self, w: &[Letter]) -> Vec<Letter> {
        let keep = self.l - 1;
        w[w.len().saturating_sub(keep)..].to_vec()
    }
}

/// States reachable after j free blocks, and the (L−1)-words readable right after them.
struct BlockLang<'a> {
    lang: &'a Lang,
    blocks: &'a [Word],
    states: Vec<Vec<Vec<Letter>>>,
    reach: Vec<HashSet<Vec<Letter>>>,
}

impl<'a> BlockLang<'a> {
    fn new(lang: &'a Lang, blocks: &'a [Word], m: usize) -> Self {
        let mut states = vec![vec![Vec::new()]];
        for _ in 0..m {
            let prev = states.last().unwrap();
            let mut next = BTreeSet::new();
            for s in prev {
                for b in blocks {
                    if lang.extends(s, b) {
                        let mut w = s.clone();
                        w.extend_from_slice(b);
                        next.insert(lang.state(&w));
                    }
                }
            }
            states.push(next.into_iter().collect());
        }
        let reach = states.iter().map(|ss| Self::reach_of(lang, ss)).collect();
        BlockLang { lang, blocks, states, reach }
    }

    fn reach_of(lang: &Lang, ss: &[Vec<Letter>]) -> HashSet<Vec<Letter>> {
        let k = lang.l - 1;
        let mut cur: HashSet<Vec<Letter>> = ss.iter().filter(|s| s.len() == k).cloned().collect();
        let letters: BTreeSet<Letter> = lang.nodes.iter().flat_map(|w| w.iter().copied()).collect();
        for _ in 0..k {
            let mut next = HashSet::new();
            for s in &cur {
                for &a in &letters {
                    let mut w = s.clone();
                    w.push(a);
                    if lang.nodes.contains(&w) {
                        next.insert(w[1..].to_vec());
                    }
                }
            }
            cur = next;
        }
        cur
    }

    /// Whether some j-block word followed by x lies in the language.
    fn after_blocks(&self, j: usize, x: &[Letter]) -> bool {
        let k = self.lang.l - 1;
        if !self.lang.accepts(x) {
            return false;
        }
        let full_ok = x.len() >= k && self.reach[j].contains(&x[..k]);
        full_ok
            || self.states[j]
                .iter()
                .filter(|s| s.len() < k || x.len() < k)
                .any(|s| self.lang.extends(s, x))
    }
}

fn concat(blocks: &[Word], idx: &[usize]) -> Vec<Letter> {
    idx.iter().flat_map(|&i| blocks[i].iter().copied()).collect()
}

fn stable_cmp(model: &ContractionModel, a: &[Letter], b: &[Letter]) -> Option<Ordering> {
    let ra: Vec<Letter> = a.iter().rev().copied().collect();
    let rb: Vec<Letter> = b.iter().rev().copied().collect();
    model.cylinder_cmp(&ra, &rb)
}

/// (right-good, left-good) at block position j of β.
fn good_at(bl: &BlockLang, model: &ContractionModel, beta: &[usize], j: usize) -> (bool, bool) {
    let lang = bl.lang;
    let blocks = bl.blocks;
    let k = lang.l - 1;
    let cur = &blocks[beta[j]];
    let prefix = concat(blocks, &beta[..j]);
    let ctx = lang.state(&prefix);
    let (mut lo, mut hi) = (false, false);
    for (bi, b) in blocks.iter().enumerate() {
        if bi == beta[j] || (lo && hi) {
            continue;
        }
        match model.cylinder_cmp(b, cur) {
            Some(Ordering::Less) if !lo => lo = lang.extends(&ctx, b),
            Some(Ordering::Greater) if !hi => hi = lang.extends(&ctx, b),
            _ => {}
        }
    }
    let right = lo && hi;
    let tail = concat(blocks, &beta[j + 1..]);
    let tail = &tail[..tail.len().min(k)];
    let (mut lo, mut hi) = (false, false);
    for (bi, b) in blocks.iter().enumerate() {
        if bi == beta[j] || (lo && hi) {
            continue;
        }
        let ord = stable_cmp(model, b, cur);
        let want = match ord {
            Some(Ordering::Less) => !lo,
            Some(Ordering::Greater) => !hi,
            _ => false,
        };
        if !want {
            continue;
        }
        let mut x = b.0.clone();
        x.extend_from_slice(tail);
        if bl.after_blocks(j, &x) {
            match ord {
                Some(Ordering::Less) => lo = true,
                _ => hi = true,
            }
        }
    }
    (right, lo && hi)
}

fn stats_of(bl: &BlockLang, model: &ContractionModel, beta: &[usize]) -> GoodPositionStats {
    let mut good = Vec::new();
    let (mut right_bad, mut left_bad) = (0, 0);
    for j in 0..beta.len() {
        let (r, l) = good_at(bl, model, beta, j);
        right_bad += usize::from(!r);
        left_bad += usize::from(!l);
        if r && l {
            good.push(j);
        }
    }
    GoodPositionStats { word: beta.iter().map(|&i| bl.blocks[i].clone()).collect(), good, right_bad, left_bad }
}

/// Exact good/bad classification of every block position of β within the family ℬ_M(X).
pub fn good_positions(beta: &[Word], x: &FiniteTypeSet, b0: &[Word], model: &ContractionModel) -> Result<GoodPositionStats> {
    let idx: Vec<usize> = beta
        .iter()
        .map(|w| b0.iter().position(|b| b == w).ok_or(Error::NotInFamily))
        .collect::<Result<_>>()?;
    let lang = Lang::new(x);
    if !lang.accepts(&concat(b0, &idx)) {
        return Err(Error::NotInFamily);
    }
    let bl = BlockLang::new(&lang, b0, idx.len());
    Ok(stats_of(&bl, model, &idx))
}

/// Smallest J with |I^u(β_1…β_J)| ≤ |I^s((β_{J+1}β_{J+2})^T)| and the stable twin, over admissible choices.
pub fn compute_j(b0: &[Word], model: &ContractionModel, ts: &TransitionSystem) -> usize {
    assert!(!b0.is_empty(), "empty cover");
    let joins = |a: &Word, b: &Word| ts.allows(a[a.len() - 1], b[0]);
    let mut pair_min_s = f64::INFINITY;
    let mut pair_min_u = f64::INFINITY;
    for a in b0 {
        for b in b0.iter().filter(|b| joins(a, b)) {
            let w = a.concat(b);
            pair_min_s = pair_min_s.min(model.log_length(&w, Side::Stable));
            pair_min_u = pair_min_u.min(model.log_length(&w, Side::Unstable));
        }
    }
    let single_max_u = b0.iter().map(|w| model.log_length(w, Side::Unstable)).fold(f64::NEG_INFINITY, f64::max);
    let single_max_s = b0.iter().map(|w| model.log_length(w, Side::Stable)).fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12;
    for j in 1..=64usize {
        let exact = (b0.len() as f64).powi(j as i32) <= 2e5;
        let (max_u, max_s) = if exact {
            let (mut mu, mut ms) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            let mut stack: Vec<(Vec<Letter>, usize)> = b0.iter().map(|w| (w.0.clone(), 1)).collect();
            while let Some((w, n)) = stack.pop() {
                if n == j {
                    mu = mu.max(model.log_length(&w, Side::Unstable));
                    ms = ms.max(model.log_length(&w, Side::Stable));
                    continue;
                }
                for b in b0.iter().filter(|b| ts.allows(w[w.len() - 1], b[0])) {
                    let mut v = w.clone();
                    v.extend_from_slice(b);
                    stack.push((v, n + 1));
                }
            }
            (mu, ms)
        } else {
            // bounded distortion: |I(ab)| ≤ e^{c1}|I(a)||I(b)|
            let extra = (j - 1) as f64 * model.c1;
            (j as f64 * single_max_u + extra, j as f64 * single_max_s + extra)
        };
        if max_u <= pair_min_s + tol && max_s <= pair_min_u + tol {
            return j;
        }
    }
    64
}

/// Prop.-control check: every letter of blocks i..=j of η has cylinder max below t, for any continuation.
pub fn verify_control(eta: &[Word], i: usize, j: usize, t: f64, pot: &Potential, ts: &TransitionSystem) -> Result<bool> {
    if i == 0 || j + 1 >= eta.len() || i > j {
        return Err(Error::InvalidParams("need 1 ≤ i ≤ j < len−1".into()));
    }
    let word: Vec<Letter> = eta.iter().flat_map(|w| w.iter().copied()).collect();
    if !ts.admits(&word) {
        return Ok(false);
    }
    let start: usize = eta[..i].iter().map(|w| w.len()).sum();
    let end: usize = eta[..=j].iter().map(|w| w.len()).sum();
    let ctx = BoundsContext::new(pot, ts);
    for c in start..end {
        if ctx.bounds(&word, c)?.1 >= t {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Upper bounds of f at each letter of each alphabet word, over all points of Σ(ℬ).
pub fn subshift_position_bounds(alphabet: &[Word], pot: &Potential, ts: &TransitionSystem) -> Result<Vec<Vec<f64>>> {
    match pot {
        Potential::CfSum { digits } => {
            let d: Vec<f64> = digits.iter().map(|&x| x as f64).collect();
            let fwd = ifs_hull(alphabet, &d);
            let rev: Vec<Word> = alphabet.iter().map(Word::reversed).collect();
            let bwd = ifs_hull(&rev, &d);
            Ok(alphabet
                .iter()
                .map(|w| {
                    (0..w.len())
                        .map(|i| {
                            let ahead: Vec<f64> = w[i + 1..].iter().map(|&a| d[a as usize]).collect();
                            let behind: Vec<f64> = w[..i].iter().rev().map(|&a| d[a as usize]).collect();
                            d[w[i] as usize] + cf::range(&ahead, fwd).1 + cf::range(&behind, bwd).1
                        })
                        .collect()
                })
                .collect())
        }
        Potential::WindowTable { radius, values, modulus } => {
            let r = *radius;
            let lefts = contexts(alphabet, r, true);
            let rights = contexts(alphabet, r, false);
            let mut out = Vec::new();
            for w in alphabet {
                let mut row = Vec::new();
                for i in 0..w.len() {
                    let mut m = f64::NEG_INFINITY;
                    for l in &lefts {
                        for rt in &rights {
                            // l ++ w ++ rt, window centred at |l| + i
                            let mut s = l.clone();
                            s.extend_from_slice(w);
                            s.extend_from_slice(rt);
                            let c = l.len() + i;
                            let win = &s[c - r..=c + r];
                            let v = values
                                .get(&Word(win.to_vec()))
                                .copied()
                                .ok_or_else(|| Error::MissingTableEntry(ts.format_word(win)))?;
                            m = m.max(v + modulus);
                        }
                    }
                    row.push(m);
                }
                out.push(row);
            }
            Ok(out)
        }
    }
}

/// Length-r suffixes (left) or prefixes (right) of concatenations of alphabet words.
fn contexts(alphabet: &[Word], r: usize, left: bool) -> Vec<Vec<Letter>> {
    let mut out = BTreeSet::new();
    let mut stack: Vec<Vec<Letter>> = vec![Vec::new()];
    while let Some(s) = stack.pop() {
        if s.len() >= r {
            let v = if left { s[s.len() - r..].to_vec() } else { s[..r].to_vec() };
            out.insert(v);
            continue;
        }
        for w in alphabet {
            let v = if left {
                let mut v = w.0.clone();
                v.extend_from_slice(&s);
                v
            } else {
                let mut v = s.clone();
                v.extend_from_slice(w);
                v
            };
            stack.push(v);
        }
    }
    out.into_iter().collect()
}

/// Σ(ℬ_u) words all below t, judged with the subshift's own continuations.
pub fn verify_alphabet_control(alphabet: &[Word], t: f64, pot: &Potential, ts: &TransitionSystem) -> Result<bool> {
    Ok(subshift_position_bounds(alphabet, pot, ts)?.iter().flatten().all(|&v| v < t))
}

/// δ¹…δ⁴ over the decompositions γ1 b_1…b_m γ2 of the alphabet words.
pub fn delta_formula(alphabet: &[Word], gamma1: &Word, gamma2: &Word, model: &ContractionModel, c3: f64) -> Result<DeltaFormula> {
    let (n1, n2) = (gamma1.len(), gamma2.len());
    let mut d = [None::<f64>; 4];
    let mut upd = |k: usize, v: f64| d[k] = Some(d[k].map_or(v, |x: f64| x.min(v)));
    for w in alphabet {
        if w.len() < n1 + n2 || w[..n1] != gamma1[..] || w[w.len() - n2..] != gamma2[..] {
            return Err(Error::InvalidParams("alphabet word lacks the recorded γ1…γ2 decomposition".into()));
        }
        let b = &w[n1..w.len() - n2];
        let m = b.len();
        for j in 1..m {
            // b_j…b_m γ2 (1-based j)
            let mut u = b[j - 1..].to_vec();
            u.extend_from_slice(gamma2);
            upd(0, model.interval_length(&u, Side::Unstable));
            let mut s = gamma1.0.clone();
            s.extend_from_slice(&b[..j - 1]);
            upd(1, model.interval_length(&s, Side::Stable));
        }
        for l in 1..n1 {
            let mut s = gamma2.0.clone();
            s.extend_from_slice(&gamma1[..l]);
            upd(2, model.interval_length(&s, Side::Stable));
        }
        for l in 1..=n2 {
            let mut u = gamma2[l - 1..].to_vec();
            u.extend_from_slice(gamma1);
            upd(3, model.interval_length(&u, Side::Unstable));
        }
    }
    let scaled: Vec<Option<f64>> = d.iter().map(|v| v.map(|x| c3 * x)).collect();
    let defined: Vec<f64> = scaled.iter().flatten().copied().collect();
    let degenerate = c3 <= 0.0 || defined.len() < 4;
    let min = defined.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(DeltaFormula {
        d1: scaled[0],
        d2: scaled[1],
        d3: scaled[2],
        d4: scaled[3],
        min: if min.is_finite() { min.max(0.0) } else { 0.0 },
        c3,
        degenerate,
    })
}

struct Cut {
    beta: Vec<usize>,
    stats: GoodPositionStats,
    j: usize,
    jp: usize,
}

/// Cut positions (j, j′) of β, shortest spacing first.
fn cuts_of(beta: &[usize], good: &[usize], spacing: usize) -> Vec<(usize, usize)> {
    let is_good = |p: usize| good.binary_search(&p).is_ok();
    let m = beta.len();
    let mut out = Vec::new();
    for j in 0..m.saturating_sub(1) {
        if !(is_good(j) && is_good(j + 1)) {
            continue;
        }
        for jp in j + spacing.max(2)..m - 1 {
            if is_good(jp) && is_good(jp + 1) && beta[j] == beta[jp] && beta[j + 1] == beta[jp + 1] {
                out.push((j, jp));
            }
        }
    }
    out.sort_by_key(|&(a, b)| (b - a, a));
    out
}

#[allow(clippy::too_many_arguments)]
fn cut_alphabet(
    bl: &BlockLang,
    model: &ContractionModel,
    cut: &Cut,
    cap: usize,
) -> Vec<Word> {
    let lang = bl.lang;
    let blocks = bl.blocks;
    let (j, jp) = (cut.j, cut.jp);
    let beta = &cut.beta;
    let mut prefix_idx = beta[..=j + 1].to_vec();
    let suffix = concat(blocks, &beta[jp + 1..]);
    let suffix_head = &suffix[..suffix.len().min(lang.l - 1)];
    let mut out = BTreeSet::new();
    let free = jp - j - 2;
    fn dfs(
        bl: &BlockLang,
        model: &ContractionModel,
        cur: &mut Vec<usize>,
        free: usize,
        target: (usize, usize, usize),
        suffix_head: &[Letter],
        beta: &[usize],
        out: &mut BTreeSet<Word>,
        cap: usize,
    ) {
        if out.len() >= cap {
            return;
        }
        let lang = bl.lang;
        let letters = concat(bl.blocks, cur);
        let ctx = lang.state(&letters);
        if free == 0 {
            let (j, jp, g2) = target;
            let mut tail = bl.blocks[g2].0.clone();
            tail.extend_from_slice(suffix_head);
            if !lang.extends(&ctx, &tail) {
                return;
            }
            let mut full = cur.clone();
            full.push(g2);
            full.extend_from_slice(&beta[jp + 1..]);
            let ok = [j, j + 1, jp, jp + 1].iter().all(|&p| {
                let (r, l) = good_at(bl, model, &full, p);
                r && l
            });
            if ok {
                out.insert(Word(concat(bl.blocks, &full[j + 1..=jp])));
            }
            return;
        }
        for bi in 0..bl.blocks.len() {
            if lang.extends(&ctx, &bl.blocks[bi]) {
                cur.push(bi);
                dfs(bl, model, cur, free - 1, target, suffix_head, beta, out, cap);
                cur.pop();
            }
        }
    }
    dfs(bl, model, &mut prefix_idx, free, (j, jp, beta[jp]), suffix_head, beta, &mut out, cap);
    out.into_iter().collect()
}

fn family(bl: &BlockLang, m: usize, params: &ExtractionParams) -> (Vec<Vec<usize>>, bool) {
    let lang = bl.lang;
    let n0 = bl.blocks.len();
    let total = (n0 as f64).powi(m as i32);
    if total <= params.exhaustive_limit as f64 && total <= (params.samples.max(1) * 64) as f64 {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn rec(bl: &BlockLang, cur: &mut Vec<usize>, m: usize, out: &mut Vec<Vec<usize>>) {
            if cur.len() == m {
                out.push(cur.clone());
                return;
            }
            let ctx = bl.lang.state(&concat(bl.blocks, cur));
            for bi in 0..bl.blocks.len() {
                if bl.lang.extends(&ctx, &bl.blocks[bi]) {
                    cur.push(bi);
                    rec(bl, cur, m, out);
                    cur.pop();
                }
            }
        }
        rec(bl, &mut cur, m, &mut out);
        return (out, true);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut out = Vec::with_capacity(params.samples);
    for _ in 0..params.samples {
        let mut cur: Vec<usize> = Vec::with_capacity(m);
        let mut letters: Vec<Letter> = Vec::new();
        while cur.len() < m {
            let ctx = lang.state(&letters);
            let opts: Vec<usize> = (0..n0).filter(|&b| lang.extends(&ctx, &bl.blocks[b])).collect();
            if opts.is_empty() {
                break;
            }
            let b = opts[rng.gen_range(0..opts.len())];
            cur.push(b);
            letters.extend_from_slice(&bl.blocks[b]);
        }
        if cur.len() == m {
            out.push(cur);
        }
    }
    (out, false)
}

/// Lower bound for max f|X: the largest cylinder minimum over X's windows.
fn max_f_lower(x: &FiniteTypeSet, pot: &Potential) -> Result<f64> {
    let ctx = BoundsContext::new(pot, x.ts());
    let mut m = f64::NEG_INFINITY;
    for w in x.windows() {
        m = m.max(ctx.bounds(w, x.memory())?.0);
    }
    Ok(m)
}

pub fn extract_complete_subshift(
    x: &FiniteTypeSet,
    pot: &Potential,
    model: &ContractionModel,
    params: &ExtractionParams,
) -> Result<ExtractionResult> {
    let ts = x.ts();
    let reference = moran_bracket(MoranTarget::Graph(x), model, 2, Side::Unstable)?;
    let dim_ref = 0.5 * (reference.alpha + reference.beta);
    if reference.beta <= 0.0 {
        return Err(Error::NoExtraction);
    }
    let lang = Lang::new(x);
    let l_x = max_f_lower(x, pot)?;
    let c3 = monotonicity_constants(pot, ts, model, 6, 400, params.seed)?.c4 / 2.0;
    let r0s: Vec<u32> = match params.r0 {
        Some(r) => vec![r],
        None => (1..=params.max_r0).collect(),
    };
    let mut best_run = 0usize;
    let mut last_err = String::new();
    for r0 in r0s {
        let b0 = scale_cover(x, model, r0, Side::Unstable).words;
        let n0 = b0.len();
        if n0 < 2 {
            continue;
        }
        let jsep = compute_j(&b0, model, ts);
        let k = params.k.unwrap_or_else(|| (8 * jsep * n0 * n0).min(params.k_cap)).max(2);
        let bl = BlockLang::new(&lang, &b0, k);
        let (fam, exhaustive) = family(&bl, k, params);
        let mut scored: Vec<(Vec<usize>, GoodPositionStats)> = fam
            .par_iter()
            .map(|beta| (beta.clone(), stats_of(&bl, model, beta)))
            .collect();
        scored.sort_by(|a, b| b.1.good.len().cmp(&a.1.good.len()).then_with(|| a.0.cmp(&b.0)));
        for (_, s) in &scored {
            best_run = best_run.max(longest_run(&s.good));
        }
        for (beta, stats) in scored.iter().take(32) {
            for (j, jp) in cuts_of(beta, &stats.good, 2 * jsep).into_iter().take(8) {
                let cut = Cut { beta: beta.clone(), stats: stats.clone(), j, jp };
                let cands = cut_alphabet(&bl, model, &cut, params.max_alphabet);
                if cands.len() < 2 {
                    continue;
                }
                let mut alphabet = cands.clone();
                if params.containment_filter {
                    let b = subshift_position_bounds(&alphabet, pot, ts)?;
                    alphabet = alphabet
                        .into_iter()
                        .zip(b)
                        .filter(|(_, row)| row.iter().all(|&v| v < l_x))
                        .map(|(w, _)| w)
                        .collect();
                }
                if alphabet.len() < 2 {
                    last_err = format!("r0 = {r0}: cut ({j}, {jp}) keeps {} of {} words", alphabet.len(), cands.len());
                    continue;
                }
                if !complete(&alphabet, ts) {
                    continue;
                }
                let sup = subshift_position_bounds(&alphabet, pot, ts)?
                    .iter()
                    .flatten()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max);
                let delta_measured = l_x - sup;
                let gamma1 = b0[beta[j + 1]].clone();
                let gamma2 = b0[beta[jp]].clone();
                let lower = moran_bracket(
                    MoranTarget::Complete { ts, alphabet: &alphabet },
                    model,
                    1,
                    Side::Unstable,
                )?;
                let delta_formula = delta_formula(&alphabet, &gamma1, &gamma2, model, c3)?;
                let o_value = Word(concat(&b0, &beta[j + 1..=jp]));
                let good_fraction = cut.stats.good.len() as f64 / k as f64;
                let record = ExtractionRecord {
                    r0,
                    k,
                    j: jsep,
                    n0,
                    beta: beta.iter().map(|&i| b0[i].clone()).collect(),
                    good_positions: cut.stats.good.clone(),
                    cut_pair: (j, jp),
                    o_value,
                    gamma1,
                    gamma2,
                    exhaustive,
                    family_examined: fam.len(),
                    good_fraction,
                    candidates: cands.len(),
                    filtered_out: cands.len() - alphabet.len(),
                };
                return Ok(ExtractionResult {
                    alphabet,
                    delta_measured,
                    delta_formula,
                    dim_lower: lower.alpha,
                    dim_ref,
                    eta_achieved: 1.0 - lower.alpha / dim_ref,
                    max_f_lower: l_x,
                    sup_bound: sup,
                    record,
                });
            }
        }
    }
    Err(Error::ExtractionInfeasible(format!(
        "no usable repeated good pair; longest good-position run {best_run}{}",
        if last_err.is_empty() { String::new() } else { format!("; last: {last_err}") }
    )))
}

fn longest_run(good: &[usize]) -> usize {
    let mut best = 0;
    let mut run = 0;
    let mut prev: Option<usize> = None;
    for &g in good {
        run = if prev == Some(g.wrapping_sub(1)) { run + 1 } else { 1 };
        best = best.max(run);
        prev = Some(g);
    }
    best
}

/// Every ordered pair of alphabet words concatenates admissibly.
pub fn complete(alphabet: &[Word], ts: &TransitionSystem) -> bool {
    alphabet.iter().all(|w| ts.admits(w))
        && alphabet
            .iter()
            .all(|a| alphabet.iter().all(|b| ts.allows(a[a.len() - 1], b[0])))
}

/// Heteroclinic connection through the shared O-value: (w1)~ O^R (w2)~ and its reverse.
pub fn o_map_connect(
    res1: &ExtractionResult,
    res2: &ExtractionResult,
    t1: f64,
    t2: f64,
    pot: &Potential,
    ts: &TransitionSystem,
) -> Result<ConnectionReport> {
    let o = &res1.record.o_value;
    if *o != res2.record.o_value {
        return Err(Error::NotComparable);
    }
    let t = t1.max(t2);
    let w1 = res1.alphabet.first().ok_or(Error::NotComparable)?;
    let w2 = res2.alphabet.first().ok_or(Error::NotComparable)?;
    let core = Word(o.repeat(3));
    let x = SymbolicPoint::new(ts, w1.clone(), core.clone(), w2.clone(), 0)?;
    let y = SymbolicPoint::new(ts, w2.clone(), core, w1.clone(), 0)?;
    let q = markov_value(pot, ts, &x)?.max(markov_value(pot, ts, &y)?);
    let connected = q < t;
    Ok(ConnectionReport {
        connected,
        t,
        q_witness: connected.then_some(q),
        heteroclinic_x: connected.then_some(x),
        heteroclinic_y: connected.then_some(y),
        piece_ids: (None, None),
        memory: 0,
    })
}
