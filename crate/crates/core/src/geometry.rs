//! Cylinder lengths, scales, scale covers and Hausdorff-dimension brackets.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::cf::{self, Mobius};
use crate::decomposition::tarjan;
use crate::error::{Error, Result};
use crate::fts::FiniteTypeSet;
use crate::symbolic::{Letter, TransitionSystem, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Side {
    Unstable,
    Stable,
}

/// Per-letter ratios with optional overrides for a letter entered from a given predecessor.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioTable {
    pub letter: Vec<f64>,
    pub transition: BTreeMap<(Letter, Letter), f64>,
}

impl RatioTable {
    pub fn uniform(n: usize, r: f64) -> Self {
        RatioTable { letter: vec![r; n], transition: BTreeMap::new() }
    }

    pub fn letters(ratios: Vec<f64>) -> Self {
        RatioTable { letter: ratios, transition: BTreeMap::new() }
    }

    #[inline]
    fn factor(&self, prev: Option<Letter>, a: Letter) -> f64 {
        match prev {
            None => self.letter[a as usize],
            Some(p) => *self.transition.get(&(p, a)).unwrap_or(&self.letter[a as usize]),
        }
    }

    fn all_factors(&self) -> impl Iterator<Item = f64> + '_ {
        self.letter.iter().copied().chain(self.transition.values().copied())
    }

    fn factors_into(&self, a: Letter) -> Vec<f64> {
        let mut v = vec![self.letter[a as usize]];
        v.extend(self.transition.iter().filter(|((_, b), _)| *b == a).map(|(_, &r)| r));
        v
    }

    fn log_length(&self, reading: &[Letter]) -> f64 {
        let mut prev = None;
        let mut acc = 0.0;
        for &a in reading {
            acc += self.factor(prev, a).ln();
            prev = Some(a);
        }
        acc
    }

    fn distortion(&self) -> f64 {
        self.transition
            .iter()
            .map(|(&(_, b), &r)| (r / self.letter[b as usize]).ln().abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind {
    Gauss { digits: Vec<u32> },
    Product { unstable: RatioTable, stable: RatioTable },
}

/// Cylinder geometry with its distortion constants.
#[derive(Clone, Debug, PartialEq)]
pub struct ContractionModel {
    pub kind: ModelKind,
    pub c1: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub c_tilde: f64,
    pub c_big: f64,
}

impl ContractionModel {
    /// Gauss-map cylinders on a finite digit set.
    pub fn gauss(digits: Vec<u32>) -> Self {
        let dmin = *digits.iter().min().expect("nonempty digits") as f64;
        let dmax = *digits.iter().max().expect("nonempty digits") as f64;
        let g = (dmin + (dmin * dmin + 4.0).sqrt()) / 2.0;
        // q(αβ) ∈ [q(α)q(β), 2q(α)q(β)] and q ≤ q+q' ≤ 2q
        let c1 = 8f64.ln().max(2.0 * g.ln());
        ContractionModel {
            kind: ModelKind::Gauss { digits },
            c1,
            lambda1: (dmax + 1.0).powi(-2),
            lambda2: g.powi(-2),
            c_tilde: 1.0,
            c_big: 2.0,
        }
    }

    pub fn product(unstable: RatioTable, stable: RatioTable) -> Result<Self> {
        let n = unstable.letter.len();
        if stable.letter.len() != n {
            return Err(Error::InvalidParams("ratio tables differ in size".into()));
        }
        for r in unstable.all_factors().chain(stable.all_factors()) {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::InvalidParams(format!("ratio {r} outside (0,1)")));
            }
        }
        let c1 = unstable.distortion().max(stable.distortion());
        let all: Vec<f64> = unstable.all_factors().chain(stable.all_factors()).collect();
        let lambda1 = all.iter().copied().fold(1.0, f64::min);
        let lambda2 = all.iter().copied().fold(0.0, f64::max);
        let mut c_tilde: f64 = 1.0;
        for a in 0..n as Letter {
            for u in unstable.factors_into(a) {
                for s in stable.factors_into(a) {
                    let q = s.ln() / u.ln();
                    c_tilde = c_tilde.max(q).max(1.0 / q);
                }
            }
        }
        Ok(ContractionModel {
            kind: ModelKind::Product { unstable, stable },
            c1,
            lambda1,
            lambda2,
            c_tilde,
            c_big: 1.0,
        })
    }

    pub fn digits(&self) -> Option<&[u32]> {
        match &self.kind {
            ModelKind::Gauss { digits } => Some(digits),
            ModelKind::Product { .. } => None,
        }
    }

    pub fn is_gauss(&self) -> bool {
        matches!(self.kind, ModelKind::Gauss { .. })
    }

    pub(crate) fn digit_values(&self) -> Vec<f64> {
        self.digits().map(|d| d.iter().map(|&x| x as f64).collect()).unwrap_or_default()
    }

    /// ln of the cylinder length for a word given in the order it is read from the centre.
    pub fn reading_log_length(&self, reading: &[Letter], side: Side) -> f64 {
        match &self.kind {
            ModelKind::Gauss { digits } => {
                Mobius::of(reading.iter().map(|&a| digits[a as usize] as f64)).log_length()
            }
            ModelKind::Product { unstable, stable } => match side {
                Side::Unstable => unstable.log_length(reading),
                Side::Stable => stable.log_length(reading),
            },
        }
    }

    /// ln |I^u(α)| for the unstable side, ln |I^s(α^T)| for the stable side.
    pub fn log_length(&self, word: &[Letter], side: Side) -> f64 {
        match side {
            Side::Unstable => self.reading_log_length(word, side),
            Side::Stable => {
                let rev: Vec<Letter> = word.iter().rev().copied().collect();
                self.reading_log_length(&rev, side)
            }
        }
    }

    /// |I^u(α)| or |I^s(α^T)|; the empty word has length 1.
    pub fn interval_length(&self, word: &[Letter], side: Side) -> f64 {
        self.log_length(word, side).exp()
    }

    /// ⌊log(1/|I(α)|)⌋ with the natural logarithm.
    pub fn scale(&self, word: &[Letter], side: Side) -> u32 {
        scale_of(self.log_length(word, side))
    }

    /// Symbolic position of two unstable cylinders on the line, given in reading order.
    /// `None` when one word extends the other.
    pub fn cylinder_cmp(&self, a: &[Letter], b: &[Letter]) -> Option<Ordering> {
        let i = a.iter().zip(b).position(|(x, y)| x != y)?;
        let by_letter = match &self.kind {
            ModelKind::Gauss { digits } => {
                let o = digits[a[i] as usize].cmp(&digits[b[i] as usize]);
                // larger digit sits left at even depth
                if i % 2 == 0 {
                    o.reverse()
                } else {
                    o
                }
            }
            ModelKind::Product { .. } => a[i].cmp(&b[i]),
        };
        Some(by_letter)
    }

    /// c2 of the submultiplicativity lemma, ⌈3c1/log λ2⁻¹⌉.
    pub fn c2(&self) -> u32 {
        (3.0 * self.c1 / (1.0 / self.lambda2).ln()).ceil() as u32
    }

    /// (α1, α2) of the cardinality bound N ≤ e^{α1 r + α2}.
    pub fn alpha_constants(&self, alphabet_size: usize) -> (f64, f64) {
        let l = (1.0 / self.lambda2).ln();
        let la = (alphabet_size as f64).ln();
        (la / l, (self.c1 + l) * la / l)
    }

    /// The word-length bound |α| < r/log λ2⁻¹ + log(e^{c1}λ2⁻¹)/log λ2⁻¹ that precedes the count bound.
    pub fn derived_length_bound(&self, r: u32) -> f64 {
        let l = (1.0 / self.lambda2).ln();
        r as f64 / l + (self.c1 + l) / l
    }
}

pub(crate) fn scale_of(log_len: f64) -> u32 {
    (-log_len + 1e-12).floor().max(0.0) as u32
}

/// 𝒞_u(X, r) or 𝒞_s(X, r).
#[derive(Clone, Debug, Serialize)]
pub struct ScaleCover {
    pub r: u32,
    pub side: Side,
    pub words: Vec<Word>,
    pub count: usize,
    pub c2: u32,
}

/// Words of X's language at scale r: r(α) ≥ r > r(α*), the empty prefix always passing.
/// Stable-side words are returned in sequence order.
pub fn scale_cover(x: &FiniteTypeSet, model: &ContractionModel, r: u32, side: Side) -> ScaleCover {
    let reversed;
    let graph = match side {
        Side::Unstable => x,
        Side::Stable => {
            reversed = x.reversed();
            &reversed
        }
    };
    let mut words = Vec::new();
    let mut cur = Vec::new();
    cover_walk(graph, model, r, side, &graph.start(), &mut cur, &mut words);
    if side == Side::Stable {
        for w in &mut words {
            *w = w.reversed();
        }
    }
    let count = words.len();
    ScaleCover { r, side, words, count, c2: model.c2() }
}

fn cover_walk(
    x: &FiniteTypeSet,
    model: &ContractionModel,
    r: u32,
    side: Side,
    state: &crate::fts::LangState,
    cur: &mut Vec<Letter>,
    out: &mut Vec<Word>,
) {
    for a in 0..x.ts().len() as Letter {
        let Some(next) = x.step(state, a) else { continue };
        cur.push(a);
        if scale_of(model.reading_log_length(cur, side)) >= r {
            out.push(Word(cur.clone()));
        } else {
            cover_walk(x, model, r, side, &next, cur, out);
        }
        cur.pop();
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SubmultiplicativityReport {
    pub m: u32,
    pub n: u32,
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// N_u(X, m+n) ≤ |𝒜|^{c2} N_u(X, m) N_u(X, n).
pub fn check_submultiplicativity(x: &FiniteTypeSet, model: &ContractionModel, m: u32, n: u32) -> SubmultiplicativityReport {
    let count = |r| scale_cover(x, model, r, Side::Unstable).count as f64;
    let lhs = count(m + n);
    let rhs = (x.ts().len() as f64).powi(model.c2() as i32) * count(m) * count(n);
    SubmultiplicativityReport { m, n, lhs, rhs, ok: lhs <= rhs }
}

/// Moran bracket at one depth.
#[derive(Clone, Debug, Serialize)]
pub struct MoranBracket {
    pub depth: usize,
    pub side: Side,
    pub alpha: f64,
    pub beta: f64,
    /// Roots of the plain Moran equations over depth cylinders, when the system is complete.
    pub classical: Option<(f64, f64)>,
    pub lambda: f64,
    pub a: f64,
    pub palis_bound: Option<f64>,
}

impl MoranBracket {
    pub fn gap(&self) -> f64 {
        self.beta - self.alpha
    }

    fn zero(depth: usize, side: Side) -> Self {
        MoranBracket { depth, side, alpha: 0.0, beta: 0.0, classical: None, lambda: 1.0, a: 1.0, palis_bound: None }
    }
}

/// What to measure: a window graph, or the full shift over a word alphabet whose concatenations
/// are all admissible.
#[derive(Clone, Copy, Debug)]
pub enum MoranTarget<'a> {
    Graph(&'a FiniteTypeSet),
    Complete { ts: &'a TransitionSystem, alphabet: &'a [Word] },
}

const MAX_TUPLES: usize = 1 << 18;

pub fn moran_bracket(target: MoranTarget<'_>, model: &ContractionModel, depth: usize, side: Side) -> Result<MoranBracket> {
    if depth == 0 {
        return Err(Error::InvalidParams("depth must be at least 1".into()));
    }
    match target {
        MoranTarget::Graph(x) => moran_graph(x, model, depth, side),
        MoranTarget::Complete { ts, alphabet } => moran_complete(ts, alphabet, model, depth, side),
    }
}

/// Per-edge log-contraction bounds of prepending `head` to sequences in `tail_hull`
/// (Gauss) or starting with `next` (product).
fn edge_log_bounds(
    model: &ContractionModel,
    side: Side,
    head: &[Letter],
    next: &[Letter],
    tail_hull: (f64, f64),
) -> (f64, f64) {
    match &model.kind {
        ModelKind::Gauss { digits } => {
            let m = Mobius::of(head.iter().map(|&a| digits[a as usize] as f64));
            (m.log_derivative(tail_hull.1), m.log_derivative(tail_hull.0))
        }
        ModelKind::Product { .. } => {
            let mut joined = head.to_vec();
            joined.push(next[0]);
            let v = model.reading_log_length(&joined, side) - model.reading_log_length(&next[..1], side);
            (v, v)
        }
    }
}

fn moran_graph(x: &FiniteTypeSet, model: &ContractionModel, depth: usize, side: Side) -> Result<MoranBracket> {
    let reversed;
    let g = match side {
        Side::Unstable => x,
        Side::Stable => {
            reversed = x.reversed();
            &reversed
        }
    };
    if g.is_cycle_union() {
        return Ok(MoranBracket::zero(depth, side));
    }
    let k = g.window_len().max(depth);
    let (states, succ) = block_graph(g, k);
    let digits = model.digit_values();
    let cont = if model.is_gauss() { cf::continuation_hulls(g.ts(), &digits) } else { Vec::new() };
    let state_hull = |w: &Word| -> (f64, f64) {
        if model.is_gauss() {
            let d: Vec<f64> = w.iter().map(|&a| digits[a as usize]).collect();
            cf::range(&d, cont[w[w.len() - 1] as usize])
        } else {
            (0.0, 1.0)
        }
    };
    let hulls: Vec<(f64, f64)> = states.iter().map(state_hull).collect();
    let mut edges = Vec::new();
    for (v, outs) in succ.iter().enumerate() {
        for &w in outs {
            let (lo, hi) = edge_log_bounds(model, side, &states[v][..1], &states[w as usize], hulls[w as usize]);
            edges.push((v as u32, w, lo, hi));
        }
    }
    let sys = SpectralSystem::new(states.len(), &edges);
    let (alpha, beta) = sys.bracket()?;
    let (lambda, a) = depth_cylinder_constants(g, model, depth, side, &cont);
    Ok(with_palis(MoranBracket { depth, side, alpha, beta, classical: None, lambda, a, palis_bound: None }))
}

/// λ and a measured over the depth-n cylinders of the language.
fn depth_cylinder_constants(g: &FiniteTypeSet, model: &ContractionModel, depth: usize, side: Side, cont: &[(f64, f64)]) -> (f64, f64) {
    let words = g.language_words(depth);
    if words.len() > MAX_TUPLES {
        return (1.0, 1.0);
    }
    let (mut lmin, mut a) = (f64::INFINITY, 1.0f64);
    for w in &words {
        let (lo, hi) = match &model.kind {
            ModelKind::Gauss { .. } => edge_log_bounds(model, side, w, &[], cont[w[w.len() - 1] as usize]),
            ModelKind::Product { .. } => {
                let l = model.reading_log_length(w, side);
                (l, l)
            }
        };
        lmin = lmin.min(-hi);
        a = a.max((hi - lo).exp());
    }
    ((lmin / depth as f64).exp(), a)
}

fn with_palis(mut b: MoranBracket) -> MoranBracket {
    let n = b.depth as f64;
    let den = n * b.lambda.ln() - b.a.ln();
    b.palis_bound = (den > 0.0).then(|| b.a.ln() * b.beta / den);
    b
}

/// States are the language words of length k; v → w when they overlap in k−1 letters.
fn block_graph(g: &FiniteTypeSet, k: usize) -> (Vec<Word>, Vec<Vec<u32>>) {
    if k == g.window_len() {
        let succ = (0..g.len()).map(|v| g.succ(v).to_vec()).collect();
        return (g.windows().to_vec(), succ);
    }
    let states = g.language_words(k);
    let index: HashMap<&[Letter], u32> = states.iter().enumerate().map(|(i, w)| (w.letters(), i as u32)).collect();
    let mut succ = vec![Vec::new(); states.len()];
    for (i, v) in states.iter().enumerate() {
        for a in 0..g.ts().len() as Letter {
            let mut w = v[1..].to_vec();
            w.push(a);
            if let Some(&j) = index.get(w.as_slice()) {
                if g.ts().allows(v[k - 1], a) {
                    succ[i].push(j);
                }
            }
        }
    }
    (states, succ)
}

fn moran_complete(
    ts: &TransitionSystem,
    alphabet: &[Word],
    model: &ContractionModel,
    depth: usize,
    side: Side,
) -> Result<MoranBracket> {
    if alphabet.is_empty() {
        return Ok(MoranBracket::zero(depth, side));
    }
    let (ts_r, words): (TransitionSystem, Vec<Word>) = match side {
        Side::Unstable => (ts.clone(), alphabet.to_vec()),
        Side::Stable => (ts.reversed(), alphabet.iter().map(Word::reversed).collect()),
    };
    for a in &words {
        for b in &words {
            if !ts_r.admits(&a.concat(b)) {
                return Err(Error::InvalidParams("alphabet is not complete".into()));
            }
        }
    }
    if words.len() == 1 {
        return Ok(MoranBracket::zero(depth, side));
    }
    let digits = model.digit_values();
    let hull = if model.is_gauss() { ifs_hull(&words, &digits) } else { (0.0, 1.0) };
    let firsts: Vec<Letter> = {
        let mut f: Vec<Letter> = words.iter().map(|w| w[0]).collect();
        f.sort_unstable();
        f.dedup();
        f
    };
    let bounds_of = |head: &[Letter], tail: (f64, f64)| -> (f64, f64) {
        match &model.kind {
            ModelKind::Gauss { .. } => edge_log_bounds(model, side, head, &[], tail),
            ModelKind::Product { .. } => firsts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, &b| {
                let (l, _) = edge_log_bounds(model, side, head, &[b], tail);
                (acc.0.min(l), acc.1.max(l))
            }),
        }
    };

    // plain Moran equations over depth-n cylinders
    let nw = words.len();
    let depth_c = (1..=depth).take_while(|&d| nw.pow(d as u32) <= MAX_TUPLES).last().unwrap_or(1);
    let mut lows = Vec::new();
    let mut highs = Vec::new();
    let mut a = 1.0f64;
    for_each_tuple(nw, depth_c, |t| {
        let head: Vec<Letter> = t.iter().flat_map(|&i| words[i].iter().copied()).collect();
        let (lo, hi) = bounds_of(&head, hull);
        lows.push(lo);
        highs.push(hi);
        a = a.max((hi - lo).exp());
    });
    let alpha_c = moran_root(&lows)?;
    let beta_c = moran_root(&highs)?;
    let lambda = (-highs.iter().copied().fold(f64::NEG_INFINITY, f64::max) / depth_c as f64).exp();

    // block spectral bracket with (n−1)-tuple states
    let ctx = depth.saturating_sub(1).max(1);
    let ctx = (1..=ctx).take_while(|&d| nw.pow(d as u32) <= MAX_TUPLES / nw).last().unwrap_or(1);
    let mut states: Vec<Vec<usize>> = Vec::new();
    for_each_tuple(nw, ctx, |t| states.push(t.to_vec()));
    let index: HashMap<Vec<usize>, u32> = states.iter().enumerate().map(|(i, s)| (s.clone(), i as u32)).collect();
    let state_hull: Vec<(f64, f64)> = states
        .iter()
        .map(|s| {
            if model.is_gauss() {
                let d: Vec<f64> = s.iter().flat_map(|&i| words[i].iter().map(|&x| digits[x as usize])).collect();
                cf::range(&d, hull)
            } else {
                (0.0, 1.0)
            }
        })
        .collect();
    let mut edges = Vec::new();
    for (v, s) in states.iter().enumerate() {
        for b in 0..nw {
            let mut t = s[1..].to_vec();
            t.push(b);
            let w = index[&t];
            let next_first = [words[s.get(1).copied().unwrap_or(b)][0]];
            let (lo, hi) = match &model.kind {
                ModelKind::Gauss { .. } => edge_log_bounds(model, side, &words[s[0]], &[], state_hull[w as usize]),
                ModelKind::Product { .. } => edge_log_bounds(model, side, &words[s[0]], &next_first, (0.0, 1.0)),
            };
            edges.push((v as u32, w, lo, hi));
        }
    }
    let sys = SpectralSystem::new(states.len(), &edges);
    let (alpha_s, beta_s) = sys.bracket()?;
    let alpha = alpha_c.max(alpha_s);
    let beta = beta_c.min(beta_s).max(alpha);
    Ok(with_palis(MoranBracket {
        depth,
        side,
        alpha,
        beta,
        classical: Some((alpha_c, beta_c)),
        lambda,
        a,
        palis_bound: None,
    }))
}

fn for_each_tuple(base: usize, len: usize, mut f: impl FnMut(&[usize])) {
    let mut t = vec![0usize; len];
    loop {
        f(&t);
        let mut i = len;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            t[i] += 1;
            if t[i] < base {
                break;
            }
            t[i] = 0;
        }
    }
}

/// Hull of the limit set of the word IFS `y ↦ [0; β + y]`.
pub(crate) fn ifs_hull(words: &[Word], digits: &[f64]) -> (f64, f64) {
    let ds: Vec<Vec<f64>> = words.iter().map(|w| w.iter().map(|&a| digits[a as usize]).collect()).collect();
    let mut h = (0.0, 1.0);
    for _ in 0..400 {
        let next = ds.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, d| {
            let r = cf::range(d, h);
            (acc.0.min(r.0), acc.1.max(r.1))
        });
        let moved = (next.0 - h.0).abs().max((next.1 - h.1).abs());
        h = next;
        if moved < 1e-16 {
            break;
        }
    }
    h
}

/// Root of Σ c_i^s = 1 for log-contractions `logs`: bisection, then one Newton polish.
pub fn moran_root(logs: &[f64]) -> Result<f64> {
    let mut sorted = logs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    if sorted.len() <= 1 {
        return Ok(0.0);
    }
    let f = |s: f64| sorted.iter().map(|l| (s * l).exp()).sum::<f64>() - 1.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut widen = 0;
    while f(hi) > 0.0 {
        hi *= 2.0;
        widen += 1;
        if widen > 60 {
            return Err(Error::NumericFailure("Moran root not bracketed".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let s = 0.5 * (lo + hi);
    let df: f64 = sorted.iter().map(|l| l * (s * l).exp()).sum();
    let polished = if df != 0.0 { s - f(s) / df } else { s };
    Ok(if polished >= lo && polished <= hi { polished } else { s })
}

/// Weighted digraph restricted to its cyclic strongly connected components.
struct SpectralSystem {
    comps: Vec<Comp>,
}

struct Comp {
    n: usize,
    row: Vec<usize>,
    col: Vec<u32>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    single_cycle: bool,
}

#[derive(Clone, Copy)]
enum Weights {
    Low,
    High,
}

impl SpectralSystem {
    fn new(n: usize, edges: &[(u32, u32, f64, f64)]) -> Self {
        let mut adj = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            adj[e.0 as usize].push((e.1, i));
        }
        let plain: Vec<Vec<u32>> = adj.iter().map(|v| v.iter().map(|x| x.0).collect()).collect();
        let mut comps = Vec::new();
        for c in tarjan(&plain) {
            let local: HashMap<u32, usize> = c.iter().enumerate().map(|(i, &v)| (v, i)).collect();
            let mut row = vec![0];
            let (mut col, mut lo, mut hi) = (Vec::new(), Vec::new(), Vec::new());
            for &v in &c {
                for &(w, ei) in &adj[v as usize] {
                    if let Some(&j) = local.get(&w) {
                        col.push(j as u32);
                        lo.push(edges[ei].2);
                        hi.push(edges[ei].3);
                    }
                }
                row.push(col.len());
            }
            if col.is_empty() {
                continue;
            }
            let single_cycle = col.len() == c.len();
            comps.push(Comp { n: c.len(), row, col, lo, hi, single_cycle });
        }
        SpectralSystem { comps }
    }

    /// (α, β): largest s certified ρ_low(s) ≥ 1 and smallest s certified ρ_high(s) ≤ 1.
    fn bracket(&self) -> Result<(f64, f64)> {
        if self.comps.iter().all(|c| c.single_cycle) {
            return Ok((0.0, 0.0));
        }
        let alpha = self.root(Weights::Low, true)?;
        let beta = self.root(Weights::High, false)?;
        Ok((alpha, beta.max(alpha)))
    }

    fn root(&self, which: Weights, lower: bool) -> Result<f64> {
        let mut vecs: Vec<Vec<f64>> = self.comps.iter().map(|c| vec![1.0; c.n]).collect();
        let mut hi = 1.0;
        let mut widen = 0;
        while self.decide(which, hi, &mut vecs) != Some(false) {
            hi *= 2.0;
            widen += 1;
            if widen > 8 {
                return Err(Error::NumericFailure("spectral root not bracketed".into()));
            }
        }
        let mut lo = 0.0;
        while hi - lo > 1e-11 {
            let mid = 0.5 * (lo + hi);
            match self.decide(which, mid, &mut vecs) {
                Some(true) => lo = mid,
                Some(false) => hi = mid,
                None => break,
            }
        }
        Ok(if lower { lo } else { hi })
    }

    /// Some(true) if ρ(s) ≥ 1 is certified, Some(false) if ρ(s) ≤ 1, None if undecided.
    fn decide(&self, which: Weights, s: f64, vecs: &mut [Vec<f64>]) -> Option<bool> {
        let mut all_below = true;
        for (c, x) in self.comps.iter().zip(vecs.iter_mut()) {
            let (lo, hi) = c.rho_bounds(which, s, x);
            if lo >= 1.0 {
                return Some(true);
            }
            if hi > 1.0 {
                all_below = false;
            }
        }
        all_below.then_some(false)
    }
}

impl Comp {
    /// Collatz–Wielandt bounds on ρ from power iteration of A + I.
    fn rho_bounds(&self, which: Weights, s: f64, x: &mut [f64]) -> (f64, f64) {
        let logs = match which {
            Weights::Low => &self.lo,
            Weights::High => &self.hi,
        };
        let w: Vec<f64> = logs.iter().map(|l| (s * l).exp()).collect();
        let mut y = vec![0.0; self.n];
        let (mut lo, mut hi) = (0.0, f64::INFINITY);
        for _ in 0..20000 {
            let (mut rmin, mut rmax, mut ymax) = (f64::INFINITY, 0.0f64, 0.0f64);
            for i in 0..self.n {
                let mut acc = x[i];
                for e in self.row[i]..self.row[i + 1] {
                    acc += w[e] * x[self.col[e] as usize];
                }
                y[i] = acc;
                let r = acc / x[i];
                rmin = rmin.min(r);
                rmax = rmax.max(r);
                ymax = ymax.max(acc);
            }
            lo = rmin - 1.0;
            hi = rmax - 1.0;
            for i in 0..self.n {
                x[i] = (y[i] / ymax).max(1e-300);
            }
            if hi - lo <= 1e-13 * hi.abs().max(1e-300) || lo >= 1.0 || hi <= 1.0 - 1e-15 {
                break;
            }
        }
        (lo, hi)
    }
}

/// Options for `dimension`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DimensionParams {
    pub max_depth: usize,
    pub tol: f64,
    /// Largest scale for the count-based cross-check (0 disables it).
    pub count_scales: u32,
}

impl Default for DimensionParams {
    fn default() -> Self {
        DimensionParams { max_depth: 8, tol: 1e-3, count_scales: 0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CountEstimate {
    pub r: u32,
    pub n_u: usize,
    pub ratio: f64,
    pub inf_bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DimensionEstimate {
    pub unstable: Vec<MoranBracket>,
    pub stable: Vec<MoranBracket>,
    pub du: f64,
    pub du_radius: f64,
    pub ds: f64,
    pub ds_radius: f64,
    pub hd_sum: f64,
    pub lambda_min: f64,
    pub distortion_a: f64,
    pub counts: Vec<CountEstimate>,
}

impl DimensionEstimate {
    pub fn du_bracket(&self) -> (f64, f64) {
        self.unstable.last().map(|b| (b.alpha, b.beta)).unwrap_or((0.0, 0.0))
    }

    pub fn ds_bracket(&self) -> (f64, f64) {
        self.stable.last().map(|b| (b.alpha, b.beta)).unwrap_or((0.0, 0.0))
    }
}

/// Deepens the Moran brackets for both sides until the gap is below `tol`.
pub fn dimension(x: &FiniteTypeSet, model: &ContractionModel, params: DimensionParams) -> Result<DimensionEstimate> {
    let deepen = |side| -> Result<Vec<MoranBracket>> {
        let mut out: Vec<MoranBracket> = Vec::new();
        for depth in 1..=params.max_depth.max(1) {
            if depth > 1 && depth <= x.window_len() {
                continue;
            }
            let b = moran_bracket(MoranTarget::Graph(x), model, depth, side)?;
            let done = b.gap() < params.tol;
            out.push(b);
            if done {
                break;
            }
        }
        Ok(out)
    };
    let unstable = deepen(Side::Unstable)?;
    let stable = deepen(Side::Stable)?;
    let last = |v: &[MoranBracket]| v.last().map(|b| (b.alpha, b.beta)).unwrap_or((0.0, 0.0));
    let (ua, ub) = last(&unstable);
    let (sa, sb) = last(&stable);
    let lu = unstable.last().map(|b| (b.lambda, b.a)).unwrap_or((1.0, 1.0));
    let c2 = model.c2() as i32;
    let counts = (1..=params.count_scales)
        .map(|r| {
            let n_u = scale_cover(x, model, r, Side::Unstable).count;
            let nf = n_u as f64;
            CountEstimate {
                r,
                n_u,
                ratio: nf.ln() / r as f64,
                inf_bound: ((x.ts().len() as f64).powi(c2) * nf).ln() / r as f64,
            }
        })
        .collect();
    Ok(DimensionEstimate {
        du: 0.5 * (ua + ub),
        du_radius: 0.5 * (ub - ua),
        ds: 0.5 * (sa + sb),
        ds_radius: 0.5 * (sb - sa),
        hd_sum: 0.5 * (ua + ub) + 0.5 * (sa + sb),
        lambda_min: lu.0,
        distortion_a: lu.1,
        unstable,
        stable,
        counts,
    })
}
