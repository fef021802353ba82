//! Alphabets, transition matrices, admissible words and eventually periodic points.

use std::collections::HashSet;
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Letter = u8;

/// A finite sequence of letter indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn new(letters: impl Into<Vec<Letter>>) -> Self {
        Word(letters.into())
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    /// α^T
    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    /// α*, the word without its last letter.
    pub fn star(&self) -> Word {
        let n = self.0.len().saturating_sub(1);
        Word(self.0[..n].to_vec())
    }

    pub fn concat(&self, other: &[Letter]) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(other);
        Word(v)
    }

    pub fn rotated(&self, k: usize) -> Word {
        if self.0.is_empty() {
            return self.clone();
        }
        let k = k % self.0.len();
        let mut v = self.0[k..].to_vec();
        v.extend_from_slice(&self.0[..k]);
        Word(v)
    }

    /// Shortest u with self = u^m.
    pub fn primitive_root(&self) -> Word {
        let n = self.0.len();
        for d in 1..=n {
            if n.is_multiple_of(d) && (d..n).all(|i| self.0[i] == self.0[i - d]) {
                return Word(self.0[..d].to_vec());
            }
        }
        self.clone()
    }

    pub fn is_primitive(&self) -> bool {
        self.primitive_root().len() == self.len()
    }

    pub fn min_rotation(&self) -> Word {
        (0..self.len().max(1))
            .map(|k| self.rotated(k))
            .min()
            .unwrap_or_default()
    }

    pub fn max_rotation(&self) -> Word {
        (0..self.len().max(1))
            .map(|k| self.rotated(k))
            .max()
            .unwrap_or_default()
    }
}

impl Deref for Word {
    type Target = [Letter];
    fn deref(&self) -> &[Letter] {
        &self.0
    }
}

impl From<&[Letter]> for Word {
    fn from(s: &[Letter]) -> Self {
        Word(s.to_vec())
    }
}

/// The subshift Σ_B: labelled letters and the allowed-transition matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionSystem {
    labels: Vec<String>,
    allowed: Vec<bool>,
}

impl TransitionSystem {
    pub fn from_matrix(labels: Vec<String>, allowed: Vec<bool>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::EmptyAlphabet);
        }
        if n > Letter::MAX as usize + 1 {
            return Err(Error::InvalidParams("alphabet too large".into()));
        }
        assert_eq!(allowed.len(), n * n, "matrix size");
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l) {
                return Err(Error::DuplicateLetter(l.clone()));
            }
        }
        for a in 0..n {
            let out = (0..n).any(|b| allowed[a * n + b]);
            let inc = (0..n).any(|b| allowed[b * n + a]);
            if !out || !inc {
                return Err(Error::StrandedLetter(labels[a].clone()));
            }
        }
        Ok(TransitionSystem { labels, allowed })
    }

    /// Skips the stranded-letter check; for raw graphs that are trimmed afterwards.
    pub(crate) fn from_matrix_unchecked(labels: Vec<String>, allowed: Vec<bool>) -> Self {
        TransitionSystem { labels, allowed }
    }

    pub fn new(labels: Vec<String>, pairs: &[(Letter, Letter)]) -> Result<Self> {
        let n = labels.len();
        let mut allowed = vec![false; n * n];
        for &(a, b) in pairs {
            let (a, b) = (a as usize, b as usize);
            if a >= n || b >= n {
                return Err(Error::UnknownLetter(format!("{}", a.max(b))));
            }
            allowed[a * n + b] = true;
        }
        Self::from_matrix(labels, allowed)
    }

    pub fn full(labels: Vec<String>) -> Result<Self> {
        let n = labels.len();
        Self::from_matrix(labels, vec![true; n * n])
    }

    /// Labels "1".."n" with all transitions allowed except the forbidden pairs.
    pub fn with_forbidden(labels: Vec<String>, forbidden: &[(Letter, Letter)]) -> Result<Self> {
        let n = labels.len();
        let mut allowed = vec![true; n * n];
        for &(a, b) in forbidden {
            allowed[a as usize * n + b as usize] = false;
        }
        Self::from_matrix(labels, allowed)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, a: Letter) -> &str {
        &self.labels[a as usize]
    }

    pub fn letter(&self, label: &str) -> Option<Letter> {
        self.labels.iter().position(|l| l == label).map(|i| i as Letter)
    }

    #[inline]
    pub fn allows(&self, a: Letter, b: Letter) -> bool {
        self.allowed[a as usize * self.labels.len() + b as usize]
    }

    pub fn successors(&self, a: Letter) -> impl Iterator<Item = Letter> + '_ {
        (0..self.len() as Letter).filter(move |&b| self.allows(a, b))
    }

    pub fn predecessors(&self, b: Letter) -> impl Iterator<Item = Letter> + '_ {
        (0..self.len() as Letter).filter(move |&a| self.allows(a, b))
    }

    pub fn is_full(&self) -> bool {
        self.allowed.iter().all(|&x| x)
    }

    pub fn is_admissible(&self, word: &[Letter]) -> Result<bool> {
        if let Some(&bad) = word.iter().find(|&&a| a as usize >= self.len()) {
            return Err(Error::UnknownLetter(bad.to_string()));
        }
        Ok(self.admits(word))
    }

    /// Admissibility for words already known to use valid letters.
    #[inline]
    pub fn admits(&self, word: &[Letter]) -> bool {
        word.windows(2).all(|p| self.allows(p[0], p[1]))
    }

    /// The system with every transition reversed (reads sequences backwards).
    pub fn reversed(&self) -> TransitionSystem {
        let n = self.len();
        let mut allowed = vec![false; n * n];
        for a in 0..n {
            for b in 0..n {
                allowed[b * n + a] = self.allowed[a * n + b];
            }
        }
        TransitionSystem { labels: self.labels.clone(), allowed }
    }

    /// All admissible words of length n in lexicographic order of letter indices.
    pub fn enumerate_words(&self, n: usize) -> Vec<Word> {
        if n == 0 {
            return vec![Word::empty()];
        }
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(n);
        self.extend_words(&mut cur, n, &mut out);
        out
    }

    fn extend_words(&self, cur: &mut Vec<Letter>, n: usize, out: &mut Vec<Word>) {
        if cur.len() == n {
            out.push(Word(cur.clone()));
            return;
        }
        for b in 0..self.len() as Letter {
            if cur.last().is_none_or(|&a| self.allows(a, b)) {
                cur.push(b);
                self.extend_words(cur, n, out);
                cur.pop();
            }
        }
    }

    pub fn periodic_point(&self, period: &Word) -> Result<SymbolicPoint> {
        SymbolicPoint::periodic(self, period)
    }

    fn single_char_labels(&self) -> bool {
        self.labels.iter().all(|l| l.chars().count() == 1)
    }

    /// Comma-free when all labels are single characters, else a bracketed list.
    pub fn format_word(&self, w: &[Letter]) -> String {
        if self.single_char_labels() {
            w.iter().map(|&a| self.label(a)).collect()
        } else {
            let parts: Vec<&str> = w.iter().map(|&a| self.label(a)).collect();
            format!("[{}]", parts.join(","))
        }
    }

    /// Inverse of `format_word`; also accepts comma lists without brackets.
    pub fn parse_word(&self, s: &str) -> Result<Word> {
        let s = s.trim();
        let inner = s.strip_prefix('[').and_then(|x| x.strip_suffix(']'));
        let tokens: Vec<String> = match inner {
            Some(body) => body
                .split(',')
                .map(|t| t.trim().to_string())
                .filter(|t| !t.is_empty())
                .collect(),
            None if s.contains(',') => s.split(',').map(|t| t.trim().to_string()).collect(),
            None if self.single_char_labels() => s.chars().map(|c| c.to_string()).collect(),
            None => vec![s.to_string()],
        };
        let letters = tokens
            .iter()
            .map(|t| self.letter(t).ok_or_else(|| Error::UnknownLetter(t.clone())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Word(letters))
    }
}

/// An eventually periodic bi-infinite sequence `…LL core RR…` read from `anchor`.
///
/// The core occupies absolute indices `[0, core.len())`. Values are always
/// kept in canonical form so equality is equality of sequences.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymbolicPoint {
    left: Word,
    core: Word,
    right: Word,
    anchor: i64,
}

impl SymbolicPoint {
    pub fn new(ts: &TransitionSystem, left: Word, core: Word, right: Word, anchor: i64) -> Result<Self> {
        if left.is_empty() || right.is_empty() {
            return Err(Error::EmptyPeriod);
        }
        for w in [&left, &core, &right] {
            ts.is_admissible(w)?;
        }
        let p = SymbolicPoint { left, core, right, anchor };
        // both wraps, both junctions
        let span = -(p.left.len() as i64) - 1..p.core.len() as i64 + p.right.len() as i64 + 1;
        let mut prev = p.letter_at(span.start);
        for i in span.start + 1..span.end {
            let a = p.letter_at(i);
            if !ts.allows(prev, a) {
                return Err(if p.core.is_empty() && p.left == p.right {
                    Error::WrapNotAdmissible
                } else {
                    Error::NotAdmissible
                });
            }
            prev = a;
        }
        Ok(p.canonical())
    }

    pub fn periodic(ts: &TransitionSystem, period: &Word) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::EmptyPeriod);
        }
        if !ts.is_admissible(period)? || !ts.allows(period[period.len() - 1], period[0]) {
            return Err(Error::WrapNotAdmissible);
        }
        Ok(SymbolicPoint {
            left: period.clone(),
            core: Word::empty(),
            right: period.clone(),
            anchor: 0,
        }
        .canonical())
    }

    pub fn left_period(&self) -> &Word {
        &self.left
    }

    pub fn core(&self) -> &Word {
        &self.core
    }

    pub fn right_period(&self) -> &Word {
        &self.right
    }

    pub fn anchor(&self) -> i64 {
        self.anchor
    }

    pub fn is_periodic(&self) -> bool {
        self.core.is_empty() && self.left == self.right
    }

    /// Letter at an absolute index of the underlying sequence.
    #[inline]
    pub fn letter_at(&self, i: i64) -> Letter {
        let c = self.core.len() as i64;
        if i >= c {
            let r = self.right.len() as i64;
            self.right[((i - c) % r) as usize]
        } else if i >= 0 {
            self.core[i as usize]
        } else {
            let l = self.left.len() as i64;
            self.left[i.rem_euclid(l) as usize]
        }
    }

    /// Letter at position k relative to position 0 of the point.
    pub fn at(&self, k: i64) -> Letter {
        self.letter_at(self.anchor + k)
    }

    pub fn shift(&self, k: i64) -> SymbolicPoint {
        let mut p = self.clone();
        p.anchor += k;
        if p.is_periodic() {
            p.anchor = p.anchor.rem_euclid(p.right.len() as i64);
        }
        p
    }

    /// The (2·radius+1)-word centred at position `center` (relative to position 0).
    pub fn window(&self, center: i64, radius: usize) -> Word {
        let c = self.anchor + center;
        let r = radius as i64;
        Word((c - r..=c + r).map(|i| self.letter_at(i)).collect())
    }

    /// Letters `a_i, a_{i+1}, …` from absolute index i as (prefix, period).
    pub fn forward_from(&self, i: i64) -> (Vec<Letter>, Vec<Letter>) {
        let c = self.core.len() as i64;
        let rl = self.right.len();
        if i >= c {
            let k = ((i - c) % rl as i64) as usize;
            return (Vec::new(), self.right.rotated(k).0);
        }
        let prefix = (i..c).map(|j| self.letter_at(j)).collect();
        (prefix, self.right.0.clone())
    }

    /// Letters `a_{i-1}, a_{i-2}, …` from absolute index i as (prefix, period).
    pub fn backward_from(&self, i: i64) -> (Vec<Letter>, Vec<Letter>) {
        let l = self.left.len() as i64;
        let rev_left = |start: i64| -> Vec<Letter> { (0..l).map(|k| self.letter_at(start - k)).collect() };
        if i <= 0 {
            return (Vec::new(), rev_left(i - 1));
        }
        let prefix = (0..i).rev().map(|j| self.letter_at(j)).collect();
        (prefix, rev_left(-1))
    }

    /// Purely periodic point of the right tail.
    pub fn right_orbit(&self) -> SymbolicPoint {
        SymbolicPoint {
            left: self.right.clone(),
            core: Word::empty(),
            right: self.right.clone(),
            anchor: 0,
        }
        .canonical()
    }

    pub fn left_orbit(&self) -> SymbolicPoint {
        SymbolicPoint {
            left: self.left.clone(),
            core: Word::empty(),
            right: self.left.clone(),
            anchor: 0,
        }
        .canonical()
    }

    pub fn describe(&self, ts: &TransitionSystem) -> String {
        format!(
            "({})~ {} ({})~ @{}",
            ts.format_word(&self.left),
            ts.format_word(&self.core),
            ts.format_word(&self.right),
            self.anchor
        )
    }

    fn canonical(self) -> SymbolicPoint {
        let left = self.left.primitive_root();
        let right = self.right.primitive_root();
        let (l, r) = (left.len() as i64, right.len() as i64);
        let c = self.core.len() as i64;
        let seq = |i: i64| self.letter_at(i);

        let floor = -(2 * (l + r) + 2);
        let mut s = c;
        while s > floor && seq(s - 1) == seq(s - 1 + r) {
            s -= 1;
        }
        if s <= floor {
            // left tail is also right-periodic
            let base = Word((0..r).map(|k| seq(c + k)).collect());
            let rot = base.min_rotation();
            let shift = (0..r).find(|&k| base.rotated(k as usize) == rot).unwrap_or(0);
            let origin = c + shift;
            return SymbolicPoint {
                left: rot.clone(),
                core: Word::empty(),
                right: rot,
                anchor: (self.anchor - origin).rem_euclid(r),
            };
        }
        let ceil = c + 2 * (l + r) + 2;
        let mut e = 0;
        while e < ceil && seq(e) == seq(e - l) {
            e += 1;
        }
        let (origin, end) = if e <= s { (e, s) } else { (s, s) };
        let core = Word((origin..end).map(seq).collect());
        let new_left = Word((origin - l..origin).map(seq).collect());
        let new_right = Word((end..end + r).map(seq).collect());
        SymbolicPoint {
            left: new_left,
            core,
            right: new_right,
            anchor: self.anchor - origin,
        }
    }
}

impl fmt::Display for SymbolicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?})~ {:?} ({:?})~ @{}", self.left.0, self.core.0, self.right.0, self.anchor)
    }
}

/// Labels "1", "2", … for digit-like alphabets.
pub fn digit_labels(digits: &[u32]) -> Vec<String> {
    digits.iter().map(|d| d.to_string()).collect()
}
