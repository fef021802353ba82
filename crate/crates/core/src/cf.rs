//! Continued-fraction arithmetic on f64 with rescaled continuants.

use crate::symbolic::{Letter, TransitionSystem};

const RESCALE: f64 = 1e150;

/// Matrix (p_n, p_{n-1}, q_n, q_{n-1}) of `[0; d_1, …, d_n + y]`, rescaled by a common factor.
#[derive(Clone, Copy, Debug)]
pub struct Mobius {
    pub p: f64,
    pub pp: f64,
    pub q: f64,
    pub qp: f64,
    pub log_scale: f64,
}

impl Mobius {
    pub fn of<I: IntoIterator<Item = f64>>(digits: I) -> Self {
        let (mut p, mut pp, mut q, mut qp) = (0.0, 1.0, 1.0, 0.0);
        let mut log_scale = 0.0;
        for d in digits {
            (p, pp) = (d * p + pp, p);
            (q, qp) = (d * q + qp, q);
            if q > RESCALE {
                p /= RESCALE;
                pp /= RESCALE;
                q /= RESCALE;
                qp /= RESCALE;
                log_scale += RESCALE.ln();
            }
        }
        Mobius { p, pp, q, qp, log_scale }
    }

    pub fn apply(&self, y: f64) -> f64 {
        (self.p + self.pp * y) / (self.q + self.qp * y)
    }

    /// ln |ψ'(y)| = −2 ln(q_n + q_{n−1} y).
    pub fn log_derivative(&self, y: f64) -> f64 {
        -2.0 * ((self.q + self.qp * y).ln() + self.log_scale)
    }

    /// ln of 1/(q_n(q_n+q_{n−1})), the length of the image of [0,1].
    pub fn log_length(&self) -> f64 {
        -(self.q.ln() + (self.q + self.qp).ln() + 2.0 * self.log_scale)
    }
}

/// `[0; d_1, …, d_n + y]` by backward recursion.
pub fn apply(digits: &[f64], y: f64) -> f64 {
    digits.iter().rev().fold(y, |v, &d| 1.0 / (d + v))
}

/// `[0; (period)‾]` as the positive root of the fixed-point quadratic.
pub fn periodic(period: &[f64]) -> f64 {
    let m = Mobius::of(period.iter().copied());
    let b = m.q - m.pp;
    let mut z = 2.0 * m.p / (b + (b * b + 4.0 * m.qp * m.p).sqrt());
    for _ in 0..3 {
        z = apply(period, z);
    }
    z
}

/// `[0; prefix, (period)‾]`.
pub fn eventually_periodic(prefix: &[f64], period: &[f64]) -> f64 {
    apply(prefix, periodic(period))
}

/// Image of a tail interval under `y ↦ [0; digits + y]`, sorted.
pub fn range(digits: &[f64], tail: (f64, f64)) -> (f64, f64) {
    let a = apply(digits, tail.0);
    let b = apply(digits, tail.1);
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Enclosures of `K_a = {[0; a, b, …]}` for each letter a, following the transitions of `ts`.
pub fn letter_hulls(ts: &TransitionSystem, digits: &[f64]) -> Vec<(f64, f64)> {
    let n = ts.len();
    let mut hull = vec![(0.0, 1.0); n];
    for _ in 0..400 {
        let mut next = hull.clone();
        for a in 0..n as Letter {
            let (mut lo_t, mut hi_t) = (f64::INFINITY, f64::NEG_INFINITY);
            for b in ts.successors(a) {
                lo_t = lo_t.min(hull[b as usize].0);
                hi_t = hi_t.max(hull[b as usize].1);
            }
            let d = digits[a as usize];
            next[a as usize] = (1.0 / (d + hi_t), 1.0 / (d + lo_t));
        }
        let moved = next
            .iter()
            .zip(&hull)
            .map(|(x, y)| (x.0 - y.0).abs().max((x.1 - y.1).abs()))
            .fold(0.0, f64::max);
        hull = next;
        if moved < 1e-16 {
            break;
        }
    }
    hull
}

/// Hull of the tails `[0; b_1, b_2, …]` that may follow letter a.
pub fn continuation_hulls(ts: &TransitionSystem, digits: &[f64]) -> Vec<(f64, f64)> {
    let hulls = letter_hulls(ts, digits);
    (0..ts.len() as Letter)
        .map(|a| {
            ts.successors(a).fold((f64::INFINITY, f64::NEG_INFINITY), |acc, b| {
                (acc.0.min(hulls[b as usize].0), acc.1.max(hulls[b as usize].1))
            })
        })
        .collect()
}
