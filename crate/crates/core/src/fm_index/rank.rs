// SPDX-License-Identifier: Apache-2.0

use crate::text::TokenId;

/// A symbol sequence with per-symbol occurrence checkpoints every
/// `interval` positions.
///
/// `checkpoints[j * sigma + t]` holds the number of `t` in `symbols[..j * interval]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct RankedSeq {
    pub(crate) symbols: Vec<TokenId>,
    pub(crate) sigma: usize,
    pub(crate) interval: usize,
    pub(crate) checkpoints: Vec<u32>,
}

impl RankedSeq {
    pub(crate) fn new(symbols: Vec<TokenId>, sigma: usize, interval: usize) -> Self {
        assert!(interval > 0);
        let rows = symbols.len() / interval + 1;
        let mut checkpoints = vec![0u32; rows * sigma];
        let mut running = vec![0u32; sigma];
        for (i, &s) in symbols.iter().enumerate() {
            if i % interval == 0 {
                let j = i / interval;
                checkpoints[j * sigma..(j + 1) * sigma].copy_from_slice(&running);
            }
            running[s as usize] += 1;
        }
        if symbols.len().is_multiple_of(interval) {
            let j = symbols.len() / interval;
            checkpoints[j * sigma..(j + 1) * sigma].copy_from_slice(&running);
        }
        Self {
            symbols,
            sigma,
            interval,
            checkpoints,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.symbols.len()
    }

    #[inline]
    pub(crate) fn get(&self, i: usize) -> TokenId {
        self.symbols[i]
    }

    /// Occurrences of `sym` in `symbols[..i]`.
    pub(crate) fn rank(&self, sym: TokenId, i: usize) -> usize {
        let j = i / self.interval;
        let base = self.checkpoints[j * self.sigma + sym as usize] as usize;
        base + self.symbols[j * self.interval..i].iter().filter(|&&s| s == sym).count()
    }

    /// Distinct symbols of `symbols[lo..hi]` with their counts, ascending by symbol.
    pub(crate) fn counts_in(&self, lo: usize, hi: usize) -> Vec<(TokenId, usize)> {
        if lo >= hi {
            return Vec::new();
        }
        if hi - lo <= self.interval.max(self.sigma / 8) {
            let mut syms = self.symbols[lo..hi].to_vec();
            syms.sort_unstable();
            let mut out: Vec<(TokenId, usize)> = Vec::new();
            for s in syms {
                match out.last_mut() {
                    Some((t, c)) if *t == s => *c += 1,
                    _ => out.push((s, 1)),
                }
            }
            return out;
        }
        let (a, b) = (lo / self.interval, hi / self.interval);
        let row = |j: usize| &self.checkpoints[j * self.sigma..(j + 1) * self.sigma];
        let mut counts: Vec<i64> = row(b)
            .iter()
            .zip(row(a))
            .map(|(&x, &y)| i64::from(x) - i64::from(y))
            .collect();
        for &s in &self.symbols[a * self.interval..lo] {
            counts[s as usize] -= 1;
        }
        for &s in &self.symbols[b * self.interval..hi] {
            counts[s as usize] += 1;
        }
        counts
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .map(|(t, c)| (t as TokenId, c as usize))
            .collect()
    }
}
