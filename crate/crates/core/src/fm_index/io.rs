// SPDX-License-Identifier: Apache-2.0

//! Binary index file.
//!
//! ```text
//! "MNDR" | version u32 | checkpoint_interval u32 | sample_rate u32
//! vocabulary: count u32, then (len u32, utf-8 bytes)*
//! documents:  count u32, then (id, start u64, len u64, spans u32, (lo u64, hi u64)*)*
//! forward:    bwt, c_table, checkpoints
//! samples:    marks (count u64, u64*), positions (count u64, u32*)
//! reverse:    bwt, c_table, checkpoints
//! reverse body symbols, checkpoints
//! body roots: count u32, (token u32, count u64)*
//! crc32 of everything above, u32
//! ```
//!
//! All integers little-endian. Sequences are prefixed by a u64 length.

use std::io::{Cursor, Read};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use super::{Bwt, DocEntry, FmIndex, IndexParams, RankedSeq, Samples};
use crate::error::{Error, Result};
use crate::text::{TokenId, Vocabulary};

pub(crate) const MAGIC: &[u8; 4] = b"MNDR";
pub(crate) const VERSION: u32 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: u32) {
        self.0.write_u32::<LE>(v).unwrap();
    }
    fn u64(&mut self, v: u64) {
        self.0.write_u64::<LE>(v).unwrap();
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.0.extend_from_slice(s.as_bytes());
    }
    fn u32s(&mut self, vs: &[u32]) {
        self.u64(vs.len() as u64);
        self.0.reserve(vs.len() * 4);
        for &v in vs {
            self.u32(v);
        }
    }
    fn u64s(&mut self, vs: &[u64]) {
        self.u64(vs.len() as u64);
        for &v in vs {
            self.u64(v);
        }
    }
    fn bwt(&mut self, b: &Bwt) {
        self.u32s(&b.seq.symbols);
        self.u64s(&b.c_table);
        self.u32s(&b.seq.checkpoints);
    }
}

pub(crate) fn encode(index: &FmIndex) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u32(VERSION);
    w.u32(index.params.checkpoint_interval as u32);
    w.u32(index.params.sample_rate as u32);

    w.u32(index.vocab.len() as u32);
    for t in index.vocab.tokens() {
        w.str(t);
    }

    w.u32(index.docs.len() as u32);
    for d in &index.docs {
        w.str(&d.id);
        w.u64(d.start as u64);
        w.u64(d.len as u64);
        w.u32(d.body.len() as u32);
        for &(lo, hi) in &d.body {
            w.u64(lo as u64);
            w.u64(hi as u64);
        }
    }

    w.bwt(&index.forward);
    w.u64s(&index.samples.marks);
    w.u32s(&index.samples.positions);
    w.bwt(&index.reverse);
    w.u32s(&index.reverse_body.symbols);
    w.u32s(&index.reverse_body.checkpoints);

    w.u32(index.body_roots.len() as u32);
    for &(t, c) in &index.body_roots {
        w.u32(t);
        w.u64(c as u64);
    }

    let crc = crc32fast::hash(&w.0);
    w.u32(crc);
    w.0
}

struct Reader<'a> {
    cur: Cursor<&'a [u8]>,
}

fn truncated(_: std::io::Error) -> Error {
    Error::Format("truncated index file".into())
}

impl Reader<'_> {
    fn remaining(&self) -> usize {
        self.cur.get_ref().len() - self.cur.position() as usize
    }
    fn u32(&mut self) -> Result<u32> {
        self.cur.read_u32::<LE>().map_err(truncated)
    }
    fn u64(&mut self) -> Result<u64> {
        self.cur.read_u64::<LE>().map_err(truncated)
    }
    fn len(&mut self, elem: usize) -> Result<usize> {
        let n = self.u64()? as usize;
        if n.checked_mul(elem).is_none_or(|b| b > self.remaining()) {
            return Err(Error::Format("sequence length exceeds file size".into()));
        }
        Ok(n)
    }
    fn str(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        if n > self.remaining() {
            return Err(Error::Format("string length exceeds file size".into()));
        }
        let mut buf = vec![0; n];
        self.cur.read_exact(&mut buf).map_err(truncated)?;
        String::from_utf8(buf).map_err(|_| Error::Format("invalid utf-8 string".into()))
    }
    fn u32s(&mut self) -> Result<Vec<u32>> {
        let n = self.len(4)?;
        (0..n).map(|_| self.u32()).collect()
    }
    fn u64s(&mut self) -> Result<Vec<u64>> {
        let n = self.len(8)?;
        (0..n).map(|_| self.u64()).collect()
    }
    fn seq(&mut self, symbols: Vec<TokenId>, sigma: usize, interval: usize) -> Result<RankedSeq> {
        let checkpoints = self.u32s()?;
        let rows = symbols.len() / interval + 1;
        if checkpoints.len() != rows * sigma || symbols.iter().any(|&s| s as usize >= sigma) {
            return Err(Error::Format("rank table does not match its sequence".into()));
        }
        Ok(RankedSeq {
            symbols,
            sigma,
            interval,
            checkpoints,
        })
    }
    fn bwt(&mut self, sigma: usize, interval: usize) -> Result<Bwt> {
        let symbols = self.u32s()?;
        let c_table = self.u64s()?;
        if c_table.len() != sigma + 1 {
            return Err(Error::Format("c-table size does not match vocabulary".into()));
        }
        Ok(Bwt {
            seq: self.seq(symbols, sigma, interval)?,
            c_table,
        })
    }
}

pub(crate) fn decode(bytes: &[u8]) -> Result<FmIndex> {
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing MNDR magic bytes".into()));
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(trailer.try_into().unwrap());
    if crc32fast::hash(body) != stored {
        return Err(Error::Format("checksum mismatch".into()));
    }
    let mut r = Reader {
        cur: Cursor::new(body),
    };
    r.cur.set_position(4);
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported index version {version}")));
    }
    let params = IndexParams {
        checkpoint_interval: r.u32()? as usize,
        sample_rate: r.u32()? as usize,
    };
    if params.checkpoint_interval == 0 || params.sample_rate == 0 {
        return Err(Error::Format("zero checkpoint interval or sample rate".into()));
    }

    let vocab_len = r.u32()? as usize;
    let tokens = (0..vocab_len).map(|_| r.str()).collect::<Result<Vec<_>>>()?;
    let vocab = Vocabulary::from_tokens(tokens).ok_or_else(|| Error::Format("invalid vocabulary table".into()))?;
    let sigma = vocab.len();

    let doc_count = r.u32()? as usize;
    let mut docs = Vec::with_capacity(doc_count.min(r.remaining()));
    for _ in 0..doc_count {
        let id = r.str()?;
        let start = r.u64()? as usize;
        let len = r.u64()? as usize;
        let spans = r.u32()? as usize;
        let body = (0..spans)
            .map(|_| Ok((r.u64()? as usize, r.u64()? as usize)))
            .collect::<Result<Vec<_>>>()?;
        docs.push(DocEntry { id, start, len, body });
    }

    let interval = params.checkpoint_interval;
    let forward = r.bwt(sigma, interval)?;
    let marks = r.u64s()?;
    let positions = r.u32s()?;
    let reverse = r.bwt(sigma, interval)?;
    let body_syms = r.u32s()?;
    let reverse_body = r.seq(body_syms, sigma, interval)?;
    let roots = r.u32()? as usize;
    let body_roots = (0..roots)
        .map(|_| Ok((r.u32()?, r.u64()? as usize)))
        .collect::<Result<Vec<_>>>()?;
    if r.remaining() != 0 {
        return Err(Error::Format("trailing bytes after index payload".into()));
    }

    let n = forward.seq.len();
    let consistent = reverse.seq.len() == n
        && reverse_body.len() == n
        && marks.len() == n.div_ceil(64)
        && marks.iter().map(|w| w.count_ones() as usize).sum::<usize>() == positions.len()
        && docs.windows(2).all(|w| w[0].start + w[0].len == w[1].start)
        && docs.first().is_some_and(|d| d.start == 0)
        && docs.last().is_some_and(|d| d.start + d.len == n);
    if !consistent {
        return Err(Error::Format("inconsistent index sections".into()));
    }

    Ok(FmIndex {
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
