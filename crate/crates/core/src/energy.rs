//! Scalar quantities of the relaxed balanced-cut problem.
//!
//! Conventions used throughout the crate:
//!
//! * total variation sums over ordered vertex pairs, so each undirected edge
//!   contributes twice: `||f||_TV = 2 * sum_e w_e |f_j - f_i|`;
//! * the median is the order statistic at 0-based index `(n - 1) / 2`, which is
//!   the `n/2`-th smallest entry for even `n` and the middle entry for odd `n`;
//! * `E(f) = ||f||_TV / ||f - med(f) 1||_1`, undefined (an error) for constant `f`.
//!
//! Zero tests in [`zero_mean_subgradient`] are exact comparisons with `0.0`.
//! The outer loop produces exact zeros by subtracting the median, and a
//! tolerance would misclassify entries.

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Graph total variation over ordered pairs.
pub fn tv_norm(g: &Graph, f: &[f64]) -> Result<f64> {
    g.check_len(f)?;
    Ok(tv_unchecked(g, f))
}

pub(crate) fn tv_unchecked(g: &Graph, f: &[f64]) -> f64 {
    // four partial sums break the serial add dependency
    let term = |e: &crate::graph::Edge| e.w * (f[e.j] - f[e.i]).abs();
    let chunks = g.edges().chunks_exact(4);
    let tail: f64 = chunks.remainder().iter().map(term).sum();
    let mut acc = [0.0; 4];
    for c in chunks {
        for (a, e) in acc.iter_mut().zip(c) {
            *a += term(e);
        }
    }
    2.0 * ((acc[0] + acc[1]) + (acc[2] + acc[3]) + tail)
}

pub fn median(f: &[f64]) -> Result<f64> {
    if f.is_empty() {
        return Err(Error::Empty);
    }
    let mut buf = f.to_vec();
    Ok(median_in_place(&mut buf))
}

/// Median of `buf`; reorders the buffer.
pub(crate) fn median_in_place(buf: &mut [f64]) -> f64 {
    let mid = (buf.len() - 1) / 2;
    *buf.select_nth_unstable_by(mid, f64::total_cmp).1
}

/// `sum_i |f_i - c|`.
pub(crate) fn l1_deviation(f: &[f64], c: f64) -> f64 {
    f.iter().map(|x| (x - c).abs()).sum()
}

/// The balance energy `E(f)`.
pub fn balance_energy(g: &Graph, f: &[f64]) -> Result<f64> {
    g.check_len(f)?;
    let med = median(f)?;
    let denom = l1_deviation(f, med);
    if denom == 0.0 {
        return Err(Error::Degenerate("balance energy of a constant function"));
    }
    Ok(tv_unchecked(g, f) / denom)
}

/// A zero-sum element of the l1 subdifferential.
#[derive(Debug, Clone, PartialEq)]
pub struct Subgradient(Vec<f64>);

impl Subgradient {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// `v_i = sign(f_i)` where `f_i != 0`, and `(n- - n+) / n0` on the zeros.
///
/// Valid whenever `f` has median zero. Fails if no element of this form has
/// zero sum and entries bounded by one.
pub fn zero_mean_subgradient(f: &[f64]) -> Result<Subgradient> {
    if f.is_empty() {
        return Err(Error::Empty);
    }
    let positive = f.iter().filter(|&&x| x > 0.0).count();
    let negative = f.iter().filter(|&&x| x < 0.0).count();
    let zeros = f.len() - positive - negative;
    let fill = if zeros == 0 {
        if positive != negative {
            return Err(Error::NoZeroSumSubgradient { positive, negative, zeros });
        }
        0.0
    } else {
        let r = (negative as f64 - positive as f64) / zeros as f64;
        if r.abs() > 1.0 {
            return Err(Error::NoZeroSumSubgradient { positive, negative, zeros });
        }
        r
    };
    Ok(Subgradient(
        f.iter()
            .map(|&x| {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    fill
                }
            })
            .collect(),
    ))
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta <= 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("theta = {theta} must lie in (0, 1]")))
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `E(f_k) - [E(h) + theta E(f_k) ||h - f_k||^2 / ||h - med(h) 1||_1]`.
///
/// Positive exactly when `h` passes the median-based descent test.
/// `theta = 1` gives the energy inequality satisfied by the exact proximal step.
pub fn energy_inequality_gap(g: &Graph, f_k: &[f64], h: &[f64], theta: f64) -> Result<f64> {
    check_theta(theta)?;
    g.check_len(h)?;
    let e_f = balance_energy(g, f_k)?;
    let med_h = median(h)?;
    let dev = l1_deviation(h, med_h);
    if dev == 0.0 {
        return Err(Error::Degenerate("constant candidate in energy inequality"));
    }
    let e_h = tv_unchecked(g, h) / dev;
    Ok(gap_from_parts(e_f, e_h, theta, sq_dist(h, f_k), dev))
}

pub(crate) fn gap_from_parts(e_f: f64, e_h: f64, theta: f64, sq: f64, dev: f64) -> f64 {
    e_f - (e_h + theta * e_f * sq / dev)
}

/// `||f_k||_TV - [||h||_TV + theta E(f_k) ||h - f_k||^2 - E(f_k) <v, h - f_k>]`.
///
/// Needs no median of `h`. Positive values imply a positive
/// [`energy_inequality_gap`] for the same arguments.
pub fn median_free_gap(
    g: &Graph,
    f_k: &[f64],
    v: &Subgradient,
    h: &[f64],
    theta: f64,
) -> Result<f64> {
    check_theta(theta)?;
    g.check_len(h)?;
    g.check_len(v.values())?;
    let e_f = balance_energy(g, f_k)?;
    let tv_f = tv_unchecked(g, f_k);
    Ok(median_free_gap_with(g, f_k, v.values(), h, theta, e_f, tv_f))
}

pub(crate) fn median_free_gap_with(
    g: &Graph,
    f_k: &[f64],
    v: &[f64],
    h: &[f64],
    theta: f64,
    e_f: f64,
    tv_f: f64,
) -> f64 {
    let (sq, inner) = dist_and_inner(h, f_k, v);
    tv_f - (tv_unchecked(g, h) + theta * e_f * sq - e_f * inner)
}

/// `(||h - f||^2, <v, h - f>)`.
pub(crate) fn dist_and_inner(h: &[f64], f: &[f64], v: &[f64]) -> (f64, f64) {
    let mut sq = 0.0;
    let mut inner = 0.0;
    for ((&hi, &fi), &vi) in h.iter().zip(f).zip(v) {
        let d = hi - fi;
        sq += d * d;
        inner += vi * d;
    }
    (sq, inner)
}
