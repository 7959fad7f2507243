//! Rank agreement metrics and the efficiency-gain ratio.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Position of every id of `b`, checking both sides list the same ids.
fn positions(a: &[String], b: &[String]) -> Result<Vec<usize>> {
    if a.len() != b.len() {
        return Err(Error::MismatchedRankings);
    }
    let pos: HashMap<&str, usize> = b.iter().enumerate().map(|(k, id)| (id.as_str(), k)).collect();
    if pos.len() != b.len() {
        return Err(Error::MismatchedRankings);
    }
    let mut seen = vec![false; b.len()];
    a.iter()
        .map(|id| {
            let &p = pos.get(id.as_str()).ok_or(Error::MismatchedRankings)?;
            if std::mem::replace(&mut seen[p], true) {
                return Err(Error::MismatchedRankings);
            }
            Ok(p)
        })
        .collect()
}

/// Inversions of `v` by merge sort.
fn count_inversions(v: &mut [usize], buf: &mut Vec<usize>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = count_inversions(&mut v[..mid], buf) + count_inversions(&mut v[mid..], buf);
    buf.clear();
    let (mut a, mut b) = (0, mid);
    while a < mid && b < n {
        if v[a] <= v[b] {
            buf.push(v[a]);
            a += 1;
        } else {
            buf.push(v[b]);
            inv += (mid - a) as u64;
            b += 1;
        }
    }
    buf.extend_from_slice(&v[a..mid]);
    buf.extend_from_slice(&v[b..]);
    v.copy_from_slice(buf);
    inv
}

/// Kendall's τ between two rankings of the same ids, in O(n log n).
pub fn kendall_tau(a: &[String], b: &[String]) -> Result<f64> {
    let mut p = positions(a, b)?;
    let n = p.len();
    if n < 2 {
        return Err(Error::UndefinedMetric("kendall tau needs at least two items".into()));
    }
    let discordant = count_inversions(&mut p, &mut Vec::with_capacity(n));
    let pairs = (n * (n - 1) / 2) as f64;
    Ok(1.0 - 2.0 * discordant as f64 / pairs)
}

/// Spearman's ρ between two rankings of the same ids.
pub fn spearman_rho(a: &[String], b: &[String]) -> Result<f64> {
    let p = positions(a, b)?;
    let n = p.len();
    if n < 2 {
        return Err(Error::UndefinedMetric("spearman rho needs at least two items".into()));
    }
    let d2: f64 = p.iter().enumerate().map(|(k, &q)| (k as f64 - q as f64).powi(2)).sum();
    let nf = n as f64;
    Ok(1.0 - 6.0 * d2 / (nf * (nf * nf - 1.0)))
}

/// `(τ_ours − τ_base) / (2·ΔHC / C(n, 2))`.
pub fn effgain(tau_ours: f64, tau_base: f64, delta_hc: f64, n: usize) -> Result<f64> {
    if !(delta_hc > 0.0) {
        return Err(Error::UndefinedMetric(format!("ΔHC must be positive, got {delta_hc}")));
    }
    if n < 2 {
        return Err(Error::UndefinedMetric("n must be at least 2".into()));
    }
    let pairs = (n * (n - 1) / 2) as f64;
    Ok((tau_ours - tau_base) / (2.0 * delta_hc / pairs))
}
