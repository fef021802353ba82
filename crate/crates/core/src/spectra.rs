//! The potential f, Markov and Lagrange values, sublevel pruning and spectra.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cf;
use crate::error::{Error, Result};
use crate::fts::FiniteTypeSet;
use crate::geometry::{dimension, ContractionModel, DimensionParams, Side};
use crate::symbolic::{Letter, SymbolicPoint, TransitionSystem, Word};

#[derive(Clone, Debug, PartialEq)]
pub enum Potential {
    /// f = [a_0; a_1, …] + [0; a_{−1}, a_{−2}, …] with the letter → digit map.
    CfSum { digits: Vec<u32> },
    /// f read off the (2·radius+1)-window around position 0, accurate to ±modulus.
    WindowTable { radius: usize, values: HashMap<Word, f64>, modulus: f64 },
}

/// Precomputed data for repeated cylinder bounds over one transition system.
#[derive(Clone, Debug)]
pub struct BoundsContext<'a> {
    pot: &'a Potential,
    ts: &'a TransitionSystem,
    digits: Vec<f64>,
    fwd: Vec<(f64, f64)>,
    bwd: Vec<(f64, f64)>,
}

impl<'a> BoundsContext<'a> {
    pub fn new(pot: &'a Potential, ts: &'a TransitionSystem) -> Self {
        match pot {
            Potential::CfSum { digits } => {
                let d: Vec<f64> = digits.iter().map(|&x| x as f64).collect();
                let fwd = cf::continuation_hulls(ts, &d);
                let bwd = cf::continuation_hulls(&ts.reversed(), &d);
                BoundsContext { pot, ts, digits: d, fwd, bwd }
            }
            Potential::WindowTable { .. } => BoundsContext { pot, ts, digits: Vec::new(), fwd: Vec::new(), bwd: Vec::new() },
        }
    }

    /// Enclosure of f at `center` over all admissible bi-infinite extensions of `word`.
    pub fn bounds(&self, word: &[Letter], center: usize) -> Result<(f64, f64)> {
        assert!(center < word.len(), "center outside word");
        match self.pot {
            Potential::CfSum { .. } => {
                let d = &self.digits;
                let last = word[word.len() - 1] as usize;
                let ahead: Vec<f64> = word[center + 1..].iter().map(|&a| d[a as usize]).collect();
                let f = cf::range(&ahead, self.fwd[last]);
                let behind: Vec<f64> = word[..center].iter().rev().map(|&a| d[a as usize]).collect();
                let b = cf::range(&behind, self.bwd[word[0] as usize]);
                let a0 = d[word[center] as usize];
                Ok((a0 + f.0 + b.0, a0 + f.1 + b.1))
            }
            Potential::WindowTable { radius, values, modulus } => {
                let w = *radius as i64;
                let c = center as i64;
                let n = word.len() as i64;
                let left_unknown = (w - c).max(0) as usize;
                let right_unknown = (c + w - (n - 1)).max(0) as usize;
                let known: Vec<Letter> = (c - w..=c + w).filter(|&i| i >= 0 && i < n).map(|i| word[i as usize]).collect();
                let lefts = extensions(&self.ts.reversed(), word[0], left_unknown);
                let rights = extensions(self.ts, word[word.len() - 1], right_unknown);
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for l in &lefts {
                    for r in &rights {
                        let mut win: Vec<Letter> = l.iter().rev().copied().collect();
                        win.extend_from_slice(&known);
                        win.extend_from_slice(r);
                        let v = lookup(values, self.ts, &win)?;
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                }
                Ok((lo - modulus, hi + modulus))
            }
        }
    }
}

fn lookup(values: &HashMap<Word, f64>, ts: &TransitionSystem, win: &[Letter]) -> Result<f64> {
    values
        .get(&Word(win.to_vec()))
        .copied()
        .ok_or_else(|| Error::MissingTableEntry(ts.format_word(win)))
}

/// Admissible continuations of length k after `from`.
fn extensions(ts: &TransitionSystem, from: Letter, k: usize) -> Vec<Vec<Letter>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::new();
        for e in &out {
            let last = *e.last().unwrap_or(&from);
            for b in ts.successors(last) {
                let mut v = e.clone();
                v.push(b);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

pub fn cylinder_bounds(pot: &Potential, word: &[Letter], center: usize, ts: &TransitionSystem) -> Result<(f64, f64)> {
    BoundsContext::new(pot, ts).bounds(word, center)
}

/// Bounds of f over the whole system.
pub fn global_bounds(pot: &Potential, ts: &TransitionSystem) -> Result<(f64, f64)> {
    let ctx = BoundsContext::new(pot, ts);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for a in 0..ts.len() as Letter {
        let (l, h) = ctx.bounds(&[a], 0)?;
        lo = lo.min(l);
        hi = hi.max(h);
    }
    Ok((lo, hi))
}

/// f at an absolute index of the point's sequence.
fn f_at(pot: &Potential, p: &SymbolicPoint, i: i64) -> Result<f64> {
    match pot {
        Potential::CfSum { digits } => {
            let d = |v: &[Letter]| -> Vec<f64> { v.iter().map(|&a| digits[a as usize] as f64).collect() };
            let (pre, per) = p.forward_from(i);
            let (a0, rest_pre, rest_per) = if pre.is_empty() {
                let rot = Word(per.clone()).rotated(1);
                (per[0], Vec::new(), rot.0)
            } else {
                (pre[0], pre[1..].to_vec(), per)
            };
            let fwd = cf::eventually_periodic(&d(&rest_pre), &d(&rest_per));
            let (bpre, bper) = p.backward_from(i);
            let bwd = cf::eventually_periodic(&d(&bpre), &d(&bper));
            Ok(digits[a0 as usize] as f64 + fwd + bwd)
        }
        Potential::WindowTable { radius, values, .. } => {
            let r = *radius as i64;
            let win: Vec<Letter> = (i - r..=i + r).map(|j| p.letter_at(j)).collect();
            values
                .get(&Word(win.clone()))
                .copied()
                .ok_or_else(|| Error::MissingTableEntry(format!("{win:?}")))
        }
    }
}

/// f at position 0 of the point.
pub fn eval_f(pot: &Potential, p: &SymbolicPoint) -> Result<f64> {
    f_at(pot, p, p.anchor())
}

fn periodic_max(pot: &Potential, ts: &TransitionSystem, period: &Word) -> Result<f64> {
    let q = SymbolicPoint::periodic(ts, period)?;
    let mut m = f64::NEG_INFINITY;
    for k in 0..period.len() as i64 {
        m = m.max(f_at(pot, &q, k)?);
    }
    Ok(m)
}

/// sup_n f(σ^n p), exact for eventually periodic points.
pub fn markov_value(pot: &Potential, ts: &TransitionSystem, p: &SymbolicPoint) -> Result<f64> {
    if p.is_periodic() {
        return periodic_max(pot, ts, p.right_period());
    }
    let l = p.left_period().len() as i64;
    let r = p.right_period().len() as i64;
    let c = p.core().len() as i64;
    let per_max = periodic_max(pot, ts, p.left_period())?.max(periodic_max(pot, ts, p.right_period())?);
    if let Potential::WindowTable { radius, .. } = pot {
        let w = *radius as i64;
        let mut m = per_max;
        for i in -l - w - 1..=c + r + w + 1 {
            m = m.max(f_at(pot, p, i)?);
        }
        return Ok(m);
    }
    let ctx = BoundsContext::new(pot, ts);
    let mut margin = 2 * (l + r) + 8;
    loop {
        let mut finite = f64::NEG_INFINITY;
        for i in -margin..c + margin {
            finite = finite.max(f_at(pot, p, i)?);
        }
        let candidate = finite.max(per_max);
        // windows of radius margin−1 beyond the scanned range lie inside one periodic tail
        let rad = (margin - 1) as usize;
        let mut tail = f64::NEG_INFINITY;
        for (per, len) in [(p.left_period(), l), (p.right_period(), r)] {
            let q = SymbolicPoint::periodic(ts, per)?;
            for k in 0..len {
                let win = q.window(k, rad);
                tail = tail.max(ctx.bounds(&win, rad)?.1);
            }
        }
        if tail <= candidate + 1e-12 || margin > 4096 {
            return Ok(candidate);
        }
        margin *= 2;
    }
}

/// limsup_{n→∞} f(σ^n p): the Markov value of the right tail's orbit.
pub fn lagrange_value(pot: &Potential, ts: &TransitionSystem, p: &SymbolicPoint) -> Result<f64> {
    periodic_max(pot, ts, p.right_period())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumKind {
    Markov,
    Lagrange,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumEntry {
    pub value: f64,
    /// Periods attaining the value, shortest first; each is the maximal rotation of its necklace.
    pub witnesses: Vec<Word>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumSample {
    pub kind: SpectrumKind,
    pub max_period: usize,
    pub entries: Vec<SpectrumEntry>,
}

impl SpectrumSample {
    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.value).collect()
    }
}

/// Primitive necklaces of period ≤ P whose cyclic wrap is admissible, as maximal rotations.
pub fn necklaces(ts: &TransitionSystem, max_period: usize) -> Vec<Word> {
    let mut out = Vec::new();
    for p in 1..=max_period {
        for w in ts.enumerate_words(p) {
            if ts.allows(w[p - 1], w[0]) && w.is_primitive() && w.max_rotation() == w {
                out.push(w);
            }
        }
    }
    out
}

pub const DEDUP_TOL: f64 = 1e-10;

pub fn enumerate_spectrum(ts: &TransitionSystem, pot: &Potential, max_period: usize, kind: SpectrumKind) -> Result<SpectrumSample> {
    if max_period == 0 {
        return Err(Error::InvalidParams("max period must be at least 1".into()));
    }
    let words = necklaces(ts, max_period);
    let mut vals: Vec<(f64, Word)> = words
        .par_iter()
        .map(|w| periodic_max(pot, ts, w).map(|v| (v, w.clone())))
        .collect::<Result<_>>()?;
    vals.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.len().cmp(&b.1.len())).then_with(|| a.1.cmp(&b.1)));
    let mut entries: Vec<SpectrumEntry> = Vec::new();
    for (v, w) in vals {
        match entries.last_mut() {
            Some(e) if (v - e.value).abs() <= DEDUP_TOL => e.witnesses.push(w),
            _ => entries.push(SpectrumEntry { value: v, witnesses: vec![w] }),
        }
    }
    for e in &mut entries {
        e.witnesses.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    }
    Ok(SpectrumSample { kind, max_period, entries })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PruneMode {
    /// Keep windows whose cylinder maximum is ≤ t.
    Inner,
    /// Keep windows whose cylinder minimum is ≤ t.
    Outer,
}

/// Cylinder bounds at the centre of every admissible (2n+1)-window.
#[derive(Clone, Debug)]
pub struct WindowBounds {
    pub memory: usize,
    pub windows: Vec<Word>,
    pub bounds: Vec<(f64, f64)>,
    pub global: (f64, f64),
}

impl WindowBounds {
    pub fn compute(ts: &TransitionSystem, pot: &Potential, memory: usize) -> Result<Self> {
        let ctx = BoundsContext::new(pot, ts);
        let windows = ts.enumerate_words(2 * memory + 1);
        let bounds = windows.par_iter().map(|w| ctx.bounds(w, memory)).collect::<Result<Vec<_>>>()?;
        Ok(WindowBounds { memory, windows, bounds, global: global_bounds(pot, ts)? })
    }

    pub fn prune(&self, ts: &TransitionSystem, t: f64, mode: PruneMode) -> SublevelSystem {
        let mut kept = Vec::new();
        let mut max_width: f64 = 0.0;
        for (w, &(lo, hi)) in self.windows.iter().zip(&self.bounds) {
            let keep = match mode {
                PruneMode::Inner => hi <= t,
                PruneMode::Outer => lo <= t,
            };
            if keep {
                kept.push(w.clone());
                max_width = max_width.max(hi - lo);
            }
        }
        let mut flags = Vec::new();
        if t < self.global.0 {
            flags.push("below_global_min".to_string());
        }
        let graph = match FiniteTypeSet::from_windows(ts, self.memory, kept.clone()) {
            Ok(g) => Some(g),
            Err(_) => {
                flags.push("empty".to_string());
                None
            }
        };
        SublevelSystem { t, memory: self.memory, mode, kept, graph, max_width, flags }
    }
}

/// Finite-memory approximation of Λ_t.
#[derive(Clone, Debug)]
pub struct SublevelSystem {
    pub t: f64,
    pub memory: usize,
    pub mode: PruneMode,
    /// Windows passing the threshold test, before trimming.
    pub kept: Vec<Word>,
    /// Overlap graph on the kept windows, trimmed; None when trimming empties it.
    pub graph: Option<FiniteTypeSet>,
    /// Largest cylinder-bound width among kept windows (the achieved resolution).
    pub max_width: f64,
    pub flags: Vec<String>,
}

impl SublevelSystem {
    pub fn is_empty(&self) -> bool {
        self.graph.is_none()
    }
}

pub fn prune_sublevel(ts: &TransitionSystem, pot: &Potential, t: f64, memory: usize, mode: PruneMode) -> Result<SublevelSystem> {
    if memory == 0 {
        return Err(Error::InvalidParams("memory must be at least 1".into()));
    }
    Ok(WindowBounds::compute(ts, pot, memory)?.prune(ts, t, mode))
}

#[derive(Clone, Debug, Serialize)]
pub struct StaircaseRow {
    pub t: f64,
    pub du_in: f64,
    pub du_out: f64,
    pub ds_in: f64,
    pub ds_out: f64,
    pub hd_sum: f64,
    pub flags: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct JumpCandidate {
    pub t_lo: f64,
    pub t_hi: f64,
    pub size: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Staircase {
    pub memory: usize,
    pub rows: Vec<StaircaseRow>,
    pub jump_candidates: Vec<JumpCandidate>,
    pub c_estimate: Option<f64>,
    pub c_tilde_estimate: Option<f64>,
}

pub const JUMP_THRESHOLD: f64 = 0.02;

fn dims_of(s: &SublevelSystem, model: &ContractionModel, depth: usize, inner: bool) -> Result<(f64, f64)> {
    let Some(g) = &s.graph else { return Ok((0.0, 0.0)) };
    let d = dimension(g, model, DimensionParams { max_depth: depth, tol: 1e-3, count_scales: 0 })?;
    let pick = |b: (f64, f64)| if inner { b.0 } else { b.1 };
    Ok((pick(d.du_bracket()), pick(d.ds_bracket())))
}

fn staircase_rows(
    ts: &TransitionSystem,
    pot: &Potential,
    model: &ContractionModel,
    grid: &[f64],
    memory: usize,
    depth: usize,
) -> Result<Vec<StaircaseRow>> {
    let wb = WindowBounds::compute(ts, pot, memory)?;
    Ok(grid
        .par_iter()
        .map(|&t| {
            let inner = wb.prune(ts, t, PruneMode::Inner);
            let outer = wb.prune(ts, t, PruneMode::Outer);
            let mut flags: Vec<String> = inner.flags.iter().map(|f| format!("inner_{f}")).collect();
            flags.extend(outer.flags.iter().map(|f| format!("outer_{f}")));
            let (du_in, ds_in) = dims_of(&inner, model, depth, true).unwrap_or_else(|_| {
                flags.push("numeric_failure".into());
                (f64::NAN, f64::NAN)
            });
            let (du_out, ds_out) = dims_of(&outer, model, depth, false).unwrap_or_else(|_| {
                flags.push("numeric_failure".into());
                (f64::NAN, f64::NAN)
            });
            StaircaseRow { t, du_in, du_out, ds_in, ds_out, hd_sum: du_out + ds_out, flags }
        })
        .collect())
}

/// Dimension of the inner and outer sublevel approximations across a grid of thresholds.
pub fn staircase(
    ts: &TransitionSystem,
    pot: &Potential,
    model: &ContractionModel,
    grid: &[f64],
    memory: usize,
    depth: usize,
) -> Result<Staircase> {
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParams("grid must be ascending".into()));
    }
    if memory == 0 {
        return Err(Error::InvalidParams("memory must be at least 1".into()));
    }
    let rows = staircase_rows(ts, pot, model, grid, memory, depth)?;
    let raw: Vec<(usize, f64)> = rows
        .windows(2)
        .enumerate()
        .filter_map(|(i, w)| {
            let size = w[1].du_out - w[0].du_out;
            (size > JUMP_THRESHOLD).then_some((i, size))
        })
        .collect();
    let mut jump_candidates = Vec::new();
    if !raw.is_empty() {
        let finer = staircase_rows(ts, pot, model, grid, memory + 1, depth)?;
        for (i, size) in raw {
            if finer[i + 1].du_out - finer[i].du_out > JUMP_THRESHOLD {
                jump_candidates.push(JumpCandidate { t_lo: grid[i], t_hi: grid[i + 1], size });
            }
        }
    }
    let c_estimate = rows.iter().position(|r| r.du_in > 0.0).map(|i| grid[i.saturating_sub(1)]);
    let plateau = rows.last().map(|r| r.du_out).unwrap_or(0.0);
    let c_tilde_estimate = rows.iter().find(|r| (plateau - r.du_out).abs() < 1e-3).map(|r| r.t);
    Ok(Staircase { memory, rows, jump_candidates, c_estimate, c_tilde_estimate })
}

#[derive(Clone, Debug, Serialize)]
pub struct AccumulationParams {
    pub max_period: usize,
    pub memory: usize,
    pub depth: usize,
    pub grid: Vec<f64>,
}

impl Default for AccumulationParams {
    fn default() -> Self {
        let grid = (0..=40).map(|i| 2.8 + 0.01 * i as f64).collect();
        AccumulationParams { max_period: 12, memory: 6, depth: 3, grid }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Accumulation {
    pub c_estimate: f64,
    pub spectrum_estimate: f64,
    /// Values first appearing at the last two periods, smallest first.
    pub new_values: Vec<f64>,
    pub staircase_estimate: Option<f64>,
    pub agreement_gap: Option<f64>,
    pub flags: Vec<String>,
}

/// Smallest limit point of the spectrum, estimated from values that keep appearing as the
/// period grows, cross-checked against the staircase.
pub fn first_accumulation(
    ts: &TransitionSystem,
    pot: &Potential,
    model: &ContractionModel,
    params: &AccumulationParams,
) -> Result<Accumulation> {
    let p = params.max_period.max(3);
    let full = enumerate_spectrum(ts, pot, p, SpectrumKind::Lagrange)?;
    let older = enumerate_spectrum(ts, pot, p - 2, SpectrumKind::Lagrange)?.values();
    let is_old = |v: f64| {
        let i = older.partition_point(|&x| x < v - DEDUP_TOL);
        i < older.len() && (older[i] - v).abs() <= DEDUP_TOL
    };
    let new_values: Vec<f64> = full.values().into_iter().filter(|&v| !is_old(v)).collect();
    if new_values.is_empty() {
        return Err(Error::NoAccumulation);
    }
    let spectrum_estimate = new_values[0];
    let mut flags = Vec::new();
    let staircase_estimate = if params.grid.is_empty() {
        None
    } else {
        let st = staircase(ts, pot, model, &params.grid, params.memory, params.depth)?;
        if st.c_estimate.is_none() {
            flags.push("staircase_never_positive".into());
        }
        st.c_estimate
    };
    let agreement_gap = staircase_estimate.map(|s| (s - spectrum_estimate).abs());
    if agreement_gap.is_some_and(|g| g > 0.05) {
        flags.push("estimates_disagree".into());
    }
    Ok(Accumulation {
        c_estimate: spectrum_estimate,
        spectrum_estimate,
        new_values: new_values.into_iter().take(16).collect(),
        staircase_estimate,
        agreement_gap,
        flags,
    })
}

/// Sampled constants c4 ≤ c5 with c4|I^u(a_1…a_n)| < |f(x) − f(y)| < c5|I^u(a_1…a_n)| when x, y
/// agree up to a_n and differ at a_{n+1}.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MonotonicityConstants {
    pub c4: f64,
    pub c5: f64,
    pub samples: usize,
}

pub fn monotonicity_constants(
    pot: &Potential,
    ts: &TransitionSystem,
    model: &ContractionModel,
    depth: usize,
    samples: usize,
    seed: u64,
) -> Result<MonotonicityConstants> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = ts.len() as Letter;
    let random_walk = |rng: &mut ChaCha8Rng, from: Option<Letter>, len: usize| -> Vec<Letter> {
        let mut v: Vec<Letter> = Vec::with_capacity(len);
        for _ in 0..len {
            let prev = v.last().copied().or(from);
            let opts: Vec<Letter> = match prev {
                Some(a) => ts.successors(a).collect(),
                None => (0..n).collect(),
            };
            v.push(opts[rng.gen_range(0..opts.len())]);
        }
        v
    };
    let (mut c4, mut c5) = (f64::INFINITY, 0.0f64);
    let mut used = 0;
    for _ in 0..samples {
        let core = random_walk(&mut rng, None, depth + 1);
        let last = core[depth];
        let branches: Vec<Letter> = ts.successors(last).collect();
        if branches.len() < 2 {
            continue;
        }
        let i = rng.gen_range(0..branches.len());
        let j = (i + 1 + rng.gen_range(0..branches.len() - 1)) % branches.len();
        let mut pts = Vec::new();
        for b in [branches[i], branches[j]] {
            let mut c = core.clone();
            c.push(b);
            let tail = random_walk(&mut rng, Some(b), 3);
            c.extend(&tail);
            let right = closing_period(ts, *c.last().unwrap());
            let left = closing_period(&ts.reversed(), c[0]).into_iter().rev().collect::<Vec<_>>();
            let p = SymbolicPoint::new(ts, Word(left), Word(c), Word(right), 0)?;
            pts.push(p);
        }
        let fx = eval_f(pot, &pts[0])?;
        let fy = eval_f(pot, &pts[1])?;
        let len = model.interval_length(&core[1..], Side::Unstable);
        let ratio = (fx - fy).abs() / len;
        if ratio > 0.0 {
            c4 = c4.min(ratio);
            c5 = c5.max(ratio);
            used += 1;
        }
    }
    if used == 0 {
        return Ok(MonotonicityConstants { c4: 0.0, c5: 0.0, samples: 0 });
    }
    Ok(MonotonicityConstants { c4, c5, samples: used })
}

/// A cycle through a successor of `a` (a period that may follow a).
fn closing_period(ts: &TransitionSystem, a: Letter) -> Vec<Letter> {
    // shortest cycle reachable after a, by BFS on letters
    let n = ts.len();
    for start in ts.successors(a) {
        let mut prev = vec![None; n];
        let mut queue = std::collections::VecDeque::from([start]);
        let mut seen = vec![false; n];
        seen[start as usize] = true;
        while let Some(u) = queue.pop_front() {
            for v in ts.successors(u) {
                if v == start {
                    let mut cyc = vec![u];
                    let mut cur = u;
                    while let Some(p) = prev[cur as usize] {
                        cyc.push(p);
                        cur = p;
                    }
                    cyc.reverse();
                    return cyc;
                }
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    prev[v as usize] = Some(u);
                    queue.push_back(v);
                }
            }
        }
    }
    vec![a]
}

/// Random eventually periodic points, for property tests and sampling.
pub fn random_point(ts: &TransitionSystem, rng: &mut impl Rng, max_len: usize) -> SymbolicPoint {
    let n = ts.len() as Letter;
    loop {
        let mut gen = |len: usize| -> Vec<Letter> { (0..len).map(|_| rng.gen_range(0..n)).collect() };
        let l = gen(1 + max_len / 2);
        let c = gen(max_len / 2);
        let r = gen(1 + max_len / 2);
        if let Ok(p) = SymbolicPoint::new(ts, Word(l), Word(c), Word(r), 0) {
            return p;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::digit_labels;

    fn cf12() -> (TransitionSystem, Potential) {
        (TransitionSystem::full(digit_labels(&[1, 2])).unwrap(), Potential::CfSum { digits: vec![1, 2] })
    }

    #[test]
    fn exact_values() {
        let (ts, pot) = cf12();
        let ones = ts.periodic_point(&Word::new([0])).unwrap();
        assert!((eval_f(&pot, &ones).unwrap() - 5f64.sqrt()).abs() < 1e-12);
        let twos = ts.periodic_point(&Word::new([1])).unwrap();
        assert!((eval_f(&pot, &twos).unwrap() - 8f64.sqrt()).abs() < 1e-12);
        let spike = SymbolicPoint::new(&ts, Word::new([0]), Word::new([1]), Word::new([0]), 0).unwrap();
        assert!((eval_f(&pot, &spike).unwrap() - (1.0 + 5f64.sqrt())).abs() < 1e-12);
        let z5 = ts.periodic_point(&Word::new([1, 1, 0, 0])).unwrap();
        assert!((markov_value(&pot, &ts, &z5).unwrap() - 221f64.sqrt() / 5.0).abs() < 1e-12);
    }

    #[test]
    fn junction_value() {
        let (ts, pot) = cf12();
        let het = SymbolicPoint::new(&ts, Word::new([1]), Word::empty(), Word::new([0]), 0).unwrap();
        let expect = 1.0 + 2f64.sqrt() + (5f64.sqrt() - 1.0) / 2.0;
        assert!((markov_value(&pot, &ts, &het).unwrap() - expect).abs() < 1e-12);
        assert!((lagrange_value(&pot, &ts, &het).unwrap() - 5f64.sqrt()).abs() < 1e-12);
        let other = SymbolicPoint::new(&ts, Word::new([0]), Word::new([1]), Word::new([1]), 0).unwrap();
        assert!((lagrange_value(&pot, &ts, &other).unwrap() - 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bounds_examples() {
        let (ts, pot) = cf12();
        let (lo, hi) = cylinder_bounds(&pot, &[0, 0, 0], 1, &ts).unwrap();
        assert!(lo >= 2.0 && hi <= 2.5);
        let (lo, hi) = cylinder_bounds(&pot, &[0], 0, &ts).unwrap();
        assert!(hi - lo > 0.5);
        let (lo, _) = cylinder_bounds(&pot, &[0, 1, 0], 1, &ts).unwrap();
        assert!(lo > 2.9);
    }

    #[test]
    fn small_spectra() {
        let (ts, pot) = cf12();
        let s1 = enumerate_spectrum(&ts, &pot, 1, SpectrumKind::Markov).unwrap();
        assert_eq!(s1.entries.len(), 2);
        assert!((s1.entries[0].value - 5f64.sqrt()).abs() < 1e-12);
        let s2 = enumerate_spectrum(&ts, &pot, 2, SpectrumKind::Markov).unwrap();
        let v12 = 2.0 * 3f64.sqrt();
        assert!(s2.values().iter().any(|v| (v - v12).abs() < 1e-10));
        let s4 = enumerate_spectrum(&ts, &pot, 4, SpectrumKind::Markov).unwrap();
        let e = s4.entries.iter().find(|e| (e.value - 221f64.sqrt() / 5.0).abs() < 1e-10).unwrap();
        assert_eq!(ts.format_word(&e.witnesses[0]), "2211");
        assert!(enumerate_spectrum(&ts, &pot, 0, SpectrumKind::Markov).is_err());
    }

    #[test]
    fn prune_extremes() {
        let (ts, pot) = cf12();
        let all = prune_sublevel(&ts, &pot, 10.0, 2, PruneMode::Inner).unwrap();
        assert_eq!(all.kept.len(), 32);
        let none = prune_sublevel(&ts, &pot, 2.0, 2, PruneMode::Outer).unwrap();
        assert!(none.is_empty());
        let none = prune_sublevel(&ts, &pot, 1.5, 2, PruneMode::Outer).unwrap();
        assert!(none.flags.contains(&"below_global_min".to_string()));
    }

    #[test]
    fn window_table_bounds() {
        let ts = TransitionSystem::full(vec!["a".into(), "b".into()]).unwrap();
        let mut values = HashMap::new();
        for w in ts.enumerate_words(3) {
            values.insert(w.clone(), w.iter().map(|&a| a as f64).sum());
        }
        let pot = Potential::WindowTable { radius: 1, values, modulus: 0.0 };
        assert_eq!(cylinder_bounds(&pot, &[1], 0, &ts).unwrap(), (1.0, 3.0));
        assert_eq!(cylinder_bounds(&pot, &[0, 1, 1], 1, &ts).unwrap(), (2.0, 2.0));
        let p = ts.periodic_point(&Word::new([0, 1])).unwrap();
        assert_eq!(markov_value(&pot, &ts, &p).unwrap(), 2.0);
    }

    #[test]
    fn monotonicity_positive() {
        let (ts, pot) = cf12();
        let m = ContractionModel::gauss(vec![1, 2]);
        let c = monotonicity_constants(&pot, &ts, &m, 4, 200, 7).unwrap();
        assert!(c.samples > 0 && c.c4 > 0.0 && c.c4 <= c.c5);
    }
}
