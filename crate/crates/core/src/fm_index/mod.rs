// SPDX-License-Identifier: Apache-2.0

//! FM-index over the concatenated flat streams of a corpus.
//!
//! Two Burrows–Wheeler transforms are kept. The forward one indexes the
//! streams as written and answers backward search, counting and location.
//! The reverse one indexes each stream reversed, so that backward search
//! there extends a pattern to the *right*; the BWT symbols inside a reverse
//! interval are exactly the tokens that follow the pattern, which is what
//! constrained decoding needs.
//!
//! All documents share one sentinel id, but suffix sorting orders sentinel
//! occurrences by document, so no pattern can match across a boundary.

mod io;
mod rank;
mod suffix;

use std::path::Path;

use crate::corpus::FlatStream;
use crate::error::{Error, Result};
use crate::text::{self, TokenId, Vocabulary, EOD};

use rank::RankedSeq;

/// Interval of forward suffix-array rows whose suffixes start with a pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MatchRange {
    pub lo: usize,
    pub hi: usize,
    pub pattern_len: usize,
}

/// Interval of reverse-index rows for a pattern being grown left to right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExtensionRange {
    pub lo: usize,
    pub hi: usize,
    pub pattern_len: usize,
}

macro_rules! range_common {
    ($t:ty) => {
        impl $t {
            pub fn len(&self) -> usize {
                self.hi - self.lo
            }

            pub fn is_empty(&self) -> bool {
                self.hi <= self.lo
            }

            fn empty(pattern_len: usize) -> Self {
                Self {
                    lo: 0,
                    hi: 0,
                    pattern_len,
                }
            }
        }
    };
}
range_common!(MatchRange);
range_common!(ExtensionRange);

/// One occurrence: document index (corpus order) and token offset within
/// that document's stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Location {
    pub doc: usize,
    pub offset: usize,
}

/// Which identifier region a stream position belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Title,
    Body,
    Query,
    /// Delimiters, the sentinel, and anything outside a delimited region.
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexParams {
    /// Distance between rank checkpoints.
    pub checkpoint_interval: usize,
    /// Every `sample_rate`-th text position keeps its suffix-array entry.
    pub sample_rate: usize,
}

impl Default for IndexParams {
    fn default() -> Self {
        Self {
            checkpoint_interval: 128,
            sample_rate: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct DocEntry {
    pub(crate) id: String,
    pub(crate) start: usize,
    pub(crate) len: usize,
    /// Half-open body regions as stream offsets.
    pub(crate) body: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Bwt {
    pub(crate) seq: RankedSeq,
    /// `c_table[t]` = number of text symbols smaller than `t`.
    pub(crate) c_table: Vec<u64>,
}

impl Bwt {
    fn from_text(text: &[TokenId], sa: &[u32], sigma: usize, interval: usize) -> Self {
        let n = text.len();
        let symbols: Vec<TokenId> = sa
            .iter()
            .map(|&p| text[if p == 0 { n - 1 } else { p as usize - 1 }])
            .collect();
        let mut c_table = vec![0u64; sigma + 1];
        for &t in text {
            c_table[t as usize + 1] += 1;
        }
        for t in 1..=sigma {
            c_table[t] += c_table[t - 1];
        }
        Self {
            seq: RankedSeq::new(symbols, sigma, interval),
            c_table,
        }
    }

    #[inline]
    fn step(&self, token: TokenId, lo: usize, hi: usize) -> (usize, usize) {
        let c = self.c_table[token as usize] as usize;
        (c + self.seq.rank(token, lo), c + self.seq.rank(token, hi))
    }

    #[inline]
    fn lf(&self, row: usize) -> usize {
        let t = self.seq.get(row);
        self.c_table[t as usize] as usize + self.seq.rank(t, row)
    }
}

/// Rows whose suffix-array entry is kept, with a rank directory over the marks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Samples {
    pub(crate) marks: Vec<u64>,
    pub(crate) block_ranks: Vec<u32>,
    pub(crate) positions: Vec<u32>,
}

impl Samples {
    fn new(marks: Vec<u64>, positions: Vec<u32>) -> Self {
        let mut block_ranks = Vec::with_capacity(marks.len());
        let mut acc = 0u32;
        for w in &marks {
            block_ranks.push(acc);
            acc += w.count_ones();
        }
        Self {
            marks,
            block_ranks,
            positions,
        }
    }

    #[inline]
    fn get(&self, row: usize) -> Option<usize> {
        let (w, b) = (row / 64, row % 64);
        let word = self.marks[w];
        if word >> b & 1 == 0 {
            return None;
        }
        let idx = self.block_ranks[w] + (word & ((1u64 << b) - 1)).count_ones();
        Some(self.positions[idx as usize] as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FmIndex {
    pub(crate) vocab: Vocabulary,
    pub(crate) params: IndexParams,
    pub(crate) docs: Vec<DocEntry>,
    pub(crate) forward: Bwt,
    pub(crate) samples: Samples,
    pub(crate) reverse: Bwt,
    /// Reverse BWT symbol where the row's suffix starts inside a body
    /// region, the sentinel elsewhere.
    pub(crate) reverse_body: RankedSeq,
    /// Content tokens of all body regions with their counts.
    pub(crate) body_roots: Vec<(TokenId, usize)>,
}

/// Region label of every position of one stream.
pub(crate) fn stream_regions(tokens: &[TokenId]) -> Vec<Region> {
    let mut state = Region::Other;
    tokens
        .iter()
        .map(|&t| match t {
            text::TITLE_START => {
                state = Region::Title;
                Region::Other
            }
            text::BODY_START => {
                state = Region::Body;
                Region::Other
            }
            text::QUERY_START => {
                state = Region::Query;
                Region::Other
            }
            t if text::is_structural(t) => {
                state = Region::Other;
                Region::Other
            }
            _ => state,
        })
        .collect()
}

impl FmIndex {
    pub fn build(streams: &[FlatStream], vocab: Vocabulary) -> Result<Self> {
        Self::build_with(streams, vocab, IndexParams::default())
    }

    pub fn build_with(streams: &[FlatStream], vocab: Vocabulary, params: IndexParams) -> Result<Self> {
        if streams.is_empty() {
            return Err(Error::Build("no streams to index".into()));
        }
        if params.checkpoint_interval == 0 || params.sample_rate == 0 {
            return Err(Error::Build("checkpoint interval and sample rate must be positive".into()));
        }
        let sigma = vocab.len();
        let mut docs = Vec::with_capacity(streams.len());
        let mut text = Vec::new();
        let mut reversed = Vec::new();
        let mut labels = Vec::new();
        let mut body_counts = vec![0usize; sigma];
        for s in streams {
            let toks = &s.tokens;
            if toks.last() != Some(&EOD) {
                return Err(Error::Build(format!("stream {:?} is not terminated by the sentinel", s.doc_id)));
            }
            if let Some(&bad) = toks.iter().find(|&&t| t as usize >= sigma) {
                return Err(Error::Build(format!(
                    "stream {:?} holds token id {bad} outside the vocabulary of {sigma}",
                    s.doc_id
                )));
            }
            if toks[..toks.len() - 1].contains(&EOD) {
                return Err(Error::Build(format!("stream {:?} holds an inner sentinel", s.doc_id)));
            }
            let regions = stream_regions(toks);
            let mut body = Vec::new();
            let mut open: Option<usize> = None;
            for (i, r) in regions.iter().enumerate() {
                match (r, open) {
                    (Region::Body, None) => open = Some(i),
                    (Region::Body, Some(_)) => {}
                    (_, Some(b)) => {
                        body.push((b, i));
                        open = None;
                    }
                    _ => {}
                }
                if *r == Region::Body {
                    body_counts[toks[i] as usize] += 1;
                }
            }
            docs.push(DocEntry {
                id: s.doc_id.clone(),
                start: text.len(),
                len: toks.len(),
                body,
            });
            text.extend_from_slice(toks);
            let inner = toks.len() - 1;
            reversed.extend(toks[..inner].iter().rev());
            reversed.push(EOD);
            labels.extend(regions[..inner].iter().rev());
            labels.push(Region::Other);
        }
        if text.len() >= u32::MAX as usize {
            return Err(Error::Build("corpus exceeds 2^32 tokens".into()));
        }
        let n = text.len();
        let interval = params.checkpoint_interval;

        let sa = suffix::suffix_array(&text);
        let forward = Bwt::from_text(&text, &sa, sigma, interval);
        let mut keep = vec![false; n];
        for p in (0..n).step_by(params.sample_rate) {
            keep[p] = true;
        }
        for d in &docs {
            keep[d.start] = true;
        }
        let mut marks = vec![0u64; n.div_ceil(64)];
        let mut positions = Vec::new();
        for (row, &p) in sa.iter().enumerate() {
            if keep[p as usize] {
                marks[row / 64] |= 1 << (row % 64);
                positions.push(p);
            }
        }
        drop(sa);

        let rsa = suffix::suffix_array(&reversed);
        let reverse = Bwt::from_text(&reversed, &rsa, sigma, interval);
        let body_syms: Vec<TokenId> = rsa
            .iter()
            .enumerate()
            .map(|(row, &p)| {
                let sym = reverse.seq.get(row);
                if labels[p as usize] == Region::Body && text::is_content(sym) {
                    sym
                } else {
                    EOD
                }
            })
            .collect();
        let reverse_body = RankedSeq::new(body_syms, sigma, interval);
        let body_roots = body_counts
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .map(|(t, c)| (t as TokenId, c))
            .collect();

        Ok(Self {
            vocab,
            params,
            docs,
            forward,
            samples: Samples::new(marks, positions),
            reverse,
            reverse_body,
            body_roots,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn params(&self) -> IndexParams {
        self.params
    }

    /// Total indexed tokens, sentinels included.
    pub fn len(&self) -> usize {
        self.forward.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn doc_count(&self) -> usize {
        self.docs.len()
    }

    pub fn doc_id(&self, doc: usize) -> &str {
        &self.docs[doc].id
    }

    pub fn doc_index(&self, id: &str) -> Option<usize> {
        self.docs.iter().position(|d| d.id == id)
    }

    pub fn doc_len(&self, doc: usize) -> usize {
        self.docs[doc].len
    }

    /// Half-open body regions of a document, as stream offsets.
    pub fn body_spans(&self, doc: usize) -> &[(usize, usize)] {
        &self.docs[doc].body
    }

    /// True when `[offset, offset + len)` lies inside one body region of `doc`.
    pub fn in_body(&self, doc: usize, offset: usize, len: usize) -> bool {
        self.docs[doc]
            .body
            .iter()
            .any(|&(lo, hi)| lo <= offset && offset + len <= hi)
    }

    /// BWT of the forward text, for inspection and tests.
    pub fn bwt(&self) -> &[TokenId] {
        &self.forward.seq.symbols
    }

    fn matchable(&self, token: TokenId) -> bool {
        token != EOD && (token as usize) < self.vocab.len()
    }

    pub fn full_range(&self) -> MatchRange {
        MatchRange {
            lo: 0,
            hi: self.len(),
            pattern_len: 0,
        }
    }

    /// Narrows `range` (matching `p`) to the rows matching `token · p`.
    pub fn extend_backward(&self, range: MatchRange, token: TokenId) -> MatchRange {
        if range.is_empty() || !self.matchable(token) {
            return MatchRange::empty(range.pattern_len + 1);
        }
        let (lo, hi) = self.forward.step(token, range.lo, range.hi);
        MatchRange {
            lo,
            hi,
            pattern_len: range.pattern_len + 1,
        }
    }

    /// Backward search for the whole pattern.
    pub fn range(&self, pattern: &[TokenId]) -> MatchRange {
        let mut r = self.full_range();
        for &t in pattern.iter().rev() {
            r = self.extend_backward(r, t);
            if r.is_empty() {
                return MatchRange::empty(pattern.len());
            }
        }
        r
    }

    pub fn count(&self, pattern: &[TokenId]) -> usize {
        self.range(pattern).len()
    }

    pub fn root_extension(&self) -> ExtensionRange {
        ExtensionRange {
            lo: 0,
            hi: self.len(),
            pattern_len: 0,
        }
    }

    /// Narrows `range` (matching `p`) to the rows matching `p · token`.
    pub fn extend_forward(&self, range: ExtensionRange, token: TokenId) -> ExtensionRange {
        if range.is_empty() || !self.matchable(token) {
            return ExtensionRange::empty(range.pattern_len + 1);
        }
        let (lo, hi) = self.reverse.step(token, range.lo, range.hi);
        ExtensionRange {
            lo,
            hi,
            pattern_len: range.pattern_len + 1,
        }
    }

    pub fn extension_range(&self, pattern: &[TokenId]) -> ExtensionRange {
        let mut r = self.root_extension();
        for &t in pattern {
            r = self.extend_forward(r, t);
            if r.is_empty() {
                return ExtensionRange::empty(pattern.len());
            }
        }
        r
    }

    /// Tokens that follow the pattern of `range`, with occurrence counts.
    pub fn continuations(&self, range: ExtensionRange) -> Vec<(TokenId, usize)> {
        let mut out = self.reverse.seq.counts_in(range.lo, range.hi);
        out.retain(|&(t, _)| t != EOD);
        out
    }

    /// Like [`continuations`](Self::continuations) but only counting
    /// occurrences that lie inside a body region. For the empty pattern this
    /// is every content token that occurs in some body.
    pub fn body_continuations(&self, range: ExtensionRange) -> Vec<(TokenId, usize)> {
        if range.pattern_len == 0 {
            return if range.is_empty() { Vec::new() } else { self.body_roots.clone() };
        }
        let mut out = self.reverse_body.counts_in(range.lo, range.hi);
        out.retain(|&(t, _)| t != EOD);
        out
    }

    /// Distinct tokens `t` such that `pattern · t` occurs, with counts.
    pub fn successors(&self, pattern: &[TokenId]) -> Vec<(TokenId, usize)> {
        let r = self.extension_range(pattern);
        self.continuations(r)
    }

    /// Rebuilds the token stream of `doc` (sentinel included) by walking
    /// the forward BWT back from the document's sentinel row.
    pub fn document(&self, doc: usize) -> Vec<TokenId> {
        // Sentinels sort first and in document order, so row `doc` is the
        // suffix starting at this document's sentinel.
        let len = self.docs[doc].len;
        let mut out = Vec::with_capacity(len);
        out.push(EOD);
        let mut row = doc;
        for _ in 1..len {
            out.push(self.forward.seq.get(row));
            row = self.forward.lf(row);
        }
        out.reverse();
        out
    }

    /// Text position of the suffix at a forward row.
    fn suffix_position(&self, row: usize) -> usize {
        let mut row = row;
        let mut steps = 0;
        loop {
            if let Some(p) = self.samples.get(row) {
                return p + steps;
            }
            row = self.forward.lf(row);
            steps += 1;
        }
    }

    fn position_to_location(&self, pos: usize) -> Location {
        let doc = self.docs.partition_point(|d| d.start <= pos) - 1;
        Location {
            doc,
            offset: pos - self.docs[doc].start,
        }
    }

    /// Locations of every row in `range`, at most `limit`, in row order.
    pub fn locate_range(&self, range: MatchRange, limit: usize) -> Vec<Location> {
        (range.lo..range.hi)
            .take(limit)
            .map(|row| self.position_to_location(self.suffix_position(row)))
            .collect()
    }

    pub fn locate(&self, pattern: &[TokenId], limit: usize) -> Vec<Location> {
        if pattern.is_empty() {
            return Vec::new();
        }
        self.locate_range(self.range(pattern), limit)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = io::encode(self);
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        io::decode(&bytes)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        io::encode(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        io::decode(bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abra() -> (FmIndex, Vec<TokenId>) {
        let vocab = Vocabulary::from_words(["a", "b", "r", "c", "d"]);
        let ids: Vec<TokenId> = "a b r a c a d a b r a"
            .split(' ')
            .map(|w| vocab.id(w).unwrap())
            .collect();
        let mut tokens = ids.clone();
        tokens.push(EOD);
        let idx = FmIndex::build(&[FlatStream { doc_id: "d".into(), tokens }], vocab).unwrap();
        (idx, ids)
    }

    #[test]
    fn abracadabra_counts() {
        let (idx, ids) = abra();
        let (a, b, r) = (ids[0], ids[1], ids[2]);
        assert_eq!(idx.len(), 12);
        assert_eq!(idx.count(&[a, b]), 2);
        assert_eq!(idx.count(&[a]), 5);
        assert_eq!(idx.count(&[b, r, a]), 2);
        let bra = idx.range(&[b, r, a]);
        assert_eq!(idx.extend_backward(bra, a).len(), idx.count(&[a, b, r, a]));
        assert_eq!(idx.count(&[a, b, r, a]), 2);
        assert_eq!(idx.count(&[EOD]), 0);
        assert_eq!(idx.count(&[999]), 0);
    }

    #[test]
    fn empty_range_absorbs() {
        let (idx, ids) = abra();
        let empty = idx.range(&[ids[1], ids[1]]);
        assert!(empty.is_empty());
        for &t in &ids {
            assert!(idx.extend_backward(empty, t).is_empty());
        }
        let full = idx.full_range();
        assert_eq!(idx.extend_backward(full, ids[0]).len(), idx.count(&[ids[0]]));
    }

    #[test]
    fn successors_and_locate() {
        let (idx, ids) = abra();
        let (a, b, r, c, d) = (ids[0], ids[1], ids[2], ids[4], ids[6]);
        let mut expect = vec![(b, 2), (c, 1), (d, 1)];
        expect.sort();
        assert_eq!(idx.successors(&[a]), expect);
        assert_eq!(idx.successors(&[r, a, r]), vec![]);
        let mut locs: Vec<usize> = idx.locate(&[a, b], 10).into_iter().map(|l| l.offset).collect();
        locs.sort();
        assert_eq!(locs, [0, 7]);
        assert_eq!(idx.locate(&[a], 1).len(), 1);
    }

    #[test]
    fn build_errors() {
        let vocab = Vocabulary::from_words(["a"]);
        assert!(FmIndex::build(&[], vocab.clone()).is_err());
        let unterminated = FlatStream {
            doc_id: "x".into(),
            tokens: vec![text::FIRST_CONTENT_ID],
        };
        assert!(FmIndex::build(&[unterminated], vocab.clone()).is_err());
        let outside = FlatStream {
            doc_id: "x".into(),
            tokens: vec![text::FIRST_CONTENT_ID + 5, EOD],
        };
        assert!(matches!(FmIndex::build(&[outside], vocab), Err(Error::Build(_))));
    }
}
