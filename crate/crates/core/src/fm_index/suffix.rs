// SPDX-License-Identifier: Apache-2.0

//! Suffix sorting by prefix doubling, O(n log² n).

use crate::text::{TokenId, EOD};

/// Suffix array of `text`, where every sentinel occurrence is treated as a
/// distinct symbol ordered by position and smaller than any other token.
/// `text` must end with the sentinel.
pub(crate) fn suffix_array(text: &[TokenId]) -> Vec<u32> {
    let n = text.len();
    debug_assert!(text.last() == Some(&EOD));
    let sentinels = text.iter().filter(|&&t| t == EOD).count() as u64;
    let mut seen = 0u64;
    let mut rank: Vec<u64> = text
        .iter()
        .map(|&t| {
            if t == EOD {
                seen += 1;
                seen - 1
            } else {
                sentinels + u64::from(t)
            }
        })
        .collect();
    let mut sa: Vec<u32> = (0..n as u32).collect();
    let mut next = vec![0u64; n];
    let mut k = 1;
    loop {
        let key = |i: u32| {
            let i = i as usize;
            let second = if i + k < n { rank[i + k] + 1 } else { 0 };
            (rank[i], second)
        };
        sa.sort_unstable_by_key(|&i| key(i));
        next[sa[0] as usize] = 0;
        for w in 1..n {
            let bump = u64::from(key(sa[w]) != key(sa[w - 1]));
            next[sa[w] as usize] = next[sa[w - 1] as usize] + bump;
        }
        std::mem::swap(&mut rank, &mut next);
        if rank[sa[n - 1] as usize] as usize == n - 1 || k >= n {
            break;
        }
        k *= 2;
    }
    sa
}
