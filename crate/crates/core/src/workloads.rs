//! Synthetic write traces and the on-disk trace formats.
//!
//! Binary layout (all integers little-endian):
//!
//! ```text
//! header  magic "PCMTRACE" | version u32 | flags u32 | record count u64
//! record  address u64 | new value 64 bytes | old value 64 bytes (flag bit 0)
//! ```
//!
//! Line values are stored in the same byte order as their hex form.
//!
//! The text format has one record per line: a hex address, the 128-digit hex
//! new value and optionally the old value, separated by whitespace. Blank
//! lines and lines starting with `#` are ignored.

use std::collections::{HashMap, VecDeque};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{MemoryLine, LINE_BYTES, WORDS_PER_LINE};
use crate::memsim::WriteRecord;

pub const TRACE_MAGIC: [u8; 8] = *b"PCMTRACE";
pub const TRACE_VERSION: u32 = 1;
pub const FLAG_HAS_OLD: u32 = 1;
pub const HEADER_BYTES: usize = 24;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a trace file (bad magic)")]
    BadMagic,
    #[error("unsupported trace version {0} (expected {TRACE_VERSION})")]
    Version(u32),
    #[error("unknown header flags {0:#x}")]
    Flags(u32),
    #[error("truncated trace: record {index} is incomplete")]
    Truncated { index: u64 },
    #[error("trace has data after its {count} declared records")]
    TrailingData { count: u64 },
    #[error("line {line}: {msg}")]
    Text { line: usize, msg: String },
    #[error("record {index} has no old value but the trace declares one")]
    MissingOld { index: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceHeader {
    pub version: u32,
    pub has_old: bool,
    pub count: u64,
}

/// Streams records from a binary trace.
pub struct TraceReader<R> {
    inner: R,
    header: TraceHeader,
    next: u64,
    done: bool,
}

impl TraceReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, TraceError> {
        TraceReader::new(BufReader::new(File::open(path)?))
    }
}

/// Like `read_exact`, but reports how many bytes were read before EOF.
fn read_full(r: &mut impl Read, buf: &mut [u8]) -> io::Result<usize> {
    let mut n = 0;
    while n < buf.len() {
        match r.read(&mut buf[n..]) {
            Ok(0) => break,
            Ok(k) => n += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(n)
}

impl<R: Read> TraceReader<R> {
    pub fn new(mut inner: R) -> Result<Self, TraceError> {
        let mut h = [0u8; HEADER_BYTES];
        let n = read_full(&mut inner, &mut h)?;
        if n < 8 || h[..8] != TRACE_MAGIC {
            return Err(TraceError::BadMagic);
        }
        if n < HEADER_BYTES {
            return Err(TraceError::Truncated { index: 0 });
        }
        let version = u32::from_le_bytes(h[8..12].try_into().unwrap());
        if version != TRACE_VERSION {
            return Err(TraceError::Version(version));
        }
        let flags = u32::from_le_bytes(h[12..16].try_into().unwrap());
        if flags & !FLAG_HAS_OLD != 0 {
            return Err(TraceError::Flags(flags));
        }
        let count = u64::from_le_bytes(h[16..24].try_into().unwrap());
        Ok(TraceReader {
            inner,
            header: TraceHeader { version, has_old: flags & FLAG_HAS_OLD != 0, count },
            next: 0,
            done: false,
        })
    }

    pub fn header(&self) -> TraceHeader {
        self.header
    }

    fn read_record(&mut self) -> Result<Option<WriteRecord>, TraceError> {
        let index = self.next;
        if index == self.header.count {
            let mut probe = [0u8; 1];
            return match read_full(&mut self.inner, &mut probe)? {
                0 => Ok(None),
                _ => Err(TraceError::TrailingData { count: self.header.count }),
            };
        }
        let len = 8 + LINE_BYTES * if self.header.has_old { 2 } else { 1 };
        let mut buf = [0u8; 8 + 2 * LINE_BYTES];
        if read_full(&mut self.inner, &mut buf[..len])? < len {
            return Err(TraceError::Truncated { index });
        }
        let address = u64::from_le_bytes(buf[..8].try_into().unwrap());
        let new = MemoryLine::from_bytes(buf[8..8 + LINE_BYTES].try_into().unwrap());
        let old = self
            .header
            .has_old
            .then(|| MemoryLine::from_bytes(buf[8 + LINE_BYTES..].try_into().unwrap()));
        self.next += 1;
        Ok(Some(WriteRecord { address, new, old }))
    }
}

impl<R: Read> Iterator for TraceReader<R> {
    type Item = Result<WriteRecord, TraceError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let r = self.read_record().transpose();
        if !matches!(r, Some(Ok(_))) {
            self.done = true;
        }
        r
    }
}

/// Writes a binary trace; the record count is patched into the header by
/// [`TraceWriter::finish`].
pub struct TraceWriter<W: Write + Seek> {
    inner: W,
    has_old: bool,
    count: u64,
}

impl TraceWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>, has_old: bool) -> Result<Self, TraceError> {
        TraceWriter::new(BufWriter::new(File::create(path)?), has_old)
    }
}

impl<W: Write + Seek> TraceWriter<W> {
    pub fn new(mut inner: W, has_old: bool) -> Result<Self, TraceError> {
        inner.write_all(&header_bytes(has_old, 0))?;
        Ok(TraceWriter { inner, has_old, count: 0 })
    }

    pub fn push(&mut self, rec: &WriteRecord) -> Result<(), TraceError> {
        self.inner.write_all(&rec.address.to_le_bytes())?;
        self.inner.write_all(&rec.new.to_bytes())?;
        if self.has_old {
            let old = rec.old.ok_or(TraceError::MissingOld { index: self.count })?;
            self.inner.write_all(&old.to_bytes())?;
        }
        self.count += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W, TraceError> {
        self.inner.seek(SeekFrom::Start(16))?;
        self.inner.write_all(&self.count.to_le_bytes())?;
        self.inner.seek(SeekFrom::End(0))?;
        self.inner.flush()?;
        Ok(self.inner)
    }
}

fn header_bytes(has_old: bool, count: u64) -> [u8; HEADER_BYTES] {
    let mut h = [0u8; HEADER_BYTES];
    h[..8].copy_from_slice(&TRACE_MAGIC);
    h[8..12].copy_from_slice(&TRACE_VERSION.to_le_bytes());
    h[12..16].copy_from_slice(&(if has_old { FLAG_HAS_OLD } else { 0 }).to_le_bytes());
    h[16..24].copy_from_slice(&count.to_le_bytes());
    h
}

/// Writes `records` as a binary trace and returns the record count.
pub fn write_trace<'a>(
    path: impl AsRef<Path>,
    has_old: bool,
    records: impl IntoIterator<Item = &'a WriteRecord>,
) -> Result<u64, TraceError> {
    let mut w = TraceWriter::create(path, has_old)?;
    for r in records {
        w.push(r)?;
    }
    let count = w.count;
    w.finish()?;
    Ok(count)
}

/// Streams records from the text format.
pub struct TextTraceReader<R> {
    lines: io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> TextTraceReader<R> {
    pub fn new(inner: R) -> Self {
        TextTraceReader { lines: inner.lines(), line_no: 0 }
    }
}

fn parse_text_record(s: &str) -> Result<WriteRecord, String> {
    let fields: Vec<&str> = s.split_whitespace().collect();
    if !(2..=3).contains(&fields.len()) {
        return Err(format!("expected 2 or 3 fields, got {}", fields.len()));
    }
    let a = fields[0];
    let a = a.strip_prefix("0x").or_else(|| a.strip_prefix("0X")).unwrap_or(a);
    let address = u64::from_str_radix(a, 16).map_err(|e| format!("address {:?}: {e}", fields[0]))?;
    let new = MemoryLine::from_hex(fields[1]).map_err(|e| format!("new value: {e}"))?;
    let old = fields
        .get(2)
        .map(|f| MemoryLine::from_hex(f).map_err(|e| format!("old value: {e}")))
        .transpose()?;
    Ok(WriteRecord { address, new, old })
}

impl<R: BufRead> Iterator for TextTraceReader<R> {
    type Item = Result<WriteRecord, TraceError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            return Some(parse_text_record(t).map_err(|msg| TraceError::Text { line: self.line_no, msg }));
        }
    }
}

pub fn format_text_record(rec: &WriteRecord) -> String {
    match &rec.old {
        Some(old) => format!("{:#x} {} {}", rec.address, rec.new.to_hex(), old.to_hex()),
        None => format!("{:#x} {}", rec.address, rec.new.to_hex()),
    }
}

pub fn write_text_trace<'a>(
    mut out: impl Write,
    records: impl IntoIterator<Item = &'a WriteRecord>,
) -> Result<u64, TraceError> {
    let mut n = 0;
    for r in records {
        writeln!(out, "{}", format_text_record(r))?;
        n += 1;
    }
    out.flush()?;
    Ok(n)
}

pub type RecordStream = Box<dyn Iterator<Item = Result<WriteRecord, TraceError>>>;

/// Opens a trace in either format, telling them apart by the magic bytes.
pub fn open_trace(path: impl AsRef<Path>) -> Result<(Option<TraceHeader>, RecordStream), TraceError> {
    let mut f = BufReader::new(File::open(path)?);
    let is_binary = f.fill_buf()?.starts_with(&TRACE_MAGIC);
    if is_binary {
        let r = TraceReader::new(f)?;
        Ok((Some(r.header()), Box::new(r)))
    } else {
        Ok((None, Box::new(TextTraceReader::new(f))))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    #[serde(alias = "uniform")]
    UniformRandom,
    Biased,
}

#[derive(Debug, Error, PartialEq)]
pub enum SpecError {
    #[error("{name} must lie in [0, 1], got {value}")]
    Probability { name: &'static str, value: f64 },
    #[error("magnitude_bits must be at most 58 so that values stay 6-MSB uniform, got {0}")]
    Magnitude(u32),
    #[error("address_space must be positive")]
    AddressSpace,
}

/// Parameters of a synthetic trace.
///
/// Biased words are sign-extended small integers: with probability
/// `word_bias` a word is zero (`zero_fraction`) or a value of uniformly
/// chosen bit length up to `magnitude_bits`, negated with probability
/// `negative_fraction`. Other words are uniform among values whose top six
/// bits are not all equal, so a line is compressible at k = 6 with
/// probability exactly `word_bias^8`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub lines: u64,
    pub seed: u64,
    pub word_bias: f64,
    pub zero_fraction: f64,
    pub negative_fraction: f64,
    pub magnitude_bits: u32,
    /// Probability that a write goes to a recently written address.
    pub rewrite_locality: f64,
    pub recent_window: usize,
    /// On a rewrite, probability that each word takes a fresh value rather
    /// than keeping the previous one.
    pub word_update_prob: f64,
    pub address_space: u64,
    /// Attach the overwritten value to each record.
    pub with_old: bool,
}

/// Word bias for which eight independent words all compress with
/// probability close to 0.91.
pub const CALIBRATED_WORD_BIAS: f64 = 0.9883;

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            kind: GeneratorKind::UniformRandom,
            lines: 1000,
            seed: 0,
            word_bias: CALIBRATED_WORD_BIAS,
            zero_fraction: 0.3,
            negative_fraction: 0.25,
            magnitude_bits: 58,
            rewrite_locality: 0.0,
            recent_window: 64,
            word_update_prob: 1.0,
            address_space: 1 << 26,
            with_old: false,
        }
    }
}

impl GeneratorSpec {
    pub fn uniform(lines: u64, seed: u64) -> GeneratorSpec {
        GeneratorSpec { lines, seed, ..GeneratorSpec::default() }
    }

    pub fn biased(word_bias: f64, lines: u64, seed: u64) -> GeneratorSpec {
        GeneratorSpec { kind: GeneratorKind::Biased, word_bias, lines, seed, ..GeneratorSpec::default() }
    }

    /// The biased stand-in for benchmark traces: about 91% of lines compress
    /// at k = 6, and half the writes revisit a recent line, changing some of
    /// its words.
    pub fn calibrated(lines: u64, seed: u64) -> GeneratorSpec {
        GeneratorSpec { rewrite_locality: 0.5, word_update_prob: 0.5, ..GeneratorSpec::biased(CALIBRATED_WORD_BIAS, lines, seed) }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        for (name, value) in [
            ("word_bias", self.word_bias),
            ("zero_fraction", self.zero_fraction),
            ("negative_fraction", self.negative_fraction),
            ("rewrite_locality", self.rewrite_locality),
            ("word_update_prob", self.word_update_prob),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(SpecError::Probability { name, value });
            }
        }
        if self.magnitude_bits > 58 {
            return Err(SpecError::Magnitude(self.magnitude_bits));
        }
        if self.address_space == 0 {
            return Err(SpecError::AddressSpace);
        }
        Ok(())
    }
}

fn top6_uniform(w: u64) -> bool {
    let top = w >> 58;
    top == 0 || top == 0x3f
}

/// Deterministic stream of write records for a [`GeneratorSpec`].
pub struct Generator {
    spec: GeneratorSpec,
    rng: ChaCha8Rng,
    emitted: u64,
    recent: VecDeque<u64>,
    values: HashMap<u64, MemoryLine>,
}

pub fn generate(spec: &GeneratorSpec) -> Result<Generator, SpecError> {
    spec.validate()?;
    Ok(Generator {
        spec: spec.clone(),
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        emitted: 0,
        recent: VecDeque::new(),
        values: HashMap::new(),
    })
}

impl Generator {
    fn word(&mut self) -> u64 {
        let s = &self.spec;
        match s.kind {
            GeneratorKind::UniformRandom => self.rng.next_u64(),
            GeneratorKind::Biased => {
                if self.rng.gen_bool(s.word_bias) {
                    if self.rng.gen_bool(s.zero_fraction) {
                        return 0;
                    }
                    let len = self.rng.gen_range(0..=s.magnitude_bits);
                    let v = if len == 0 { 0 } else { self.rng.next_u64() >> (64 - len) };
                    if self.rng.gen_bool(s.negative_fraction) {
                        !v
                    } else {
                        v
                    }
                } else {
                    loop {
                        let w = self.rng.next_u64();
                        if !top6_uniform(w) {
                            return w;
                        }
                    }
                }
            }
        }
    }

    fn address(&mut self) -> (u64, bool) {
        if !self.recent.is_empty() && self.rng.gen_bool(self.spec.rewrite_locality) {
            let i = self.rng.gen_range(0..self.recent.len());
            return (self.recent[i], true);
        }
        let a = self.rng.gen_range(0..self.spec.address_space);
        (a, self.values.contains_key(&a))
    }
}

impl Iterator for Generator {
    type Item = WriteRecord;

    fn next(&mut self) -> Option<WriteRecord> {
        if self.emitted == self.spec.lines {
            return None;
        }
        self.emitted += 1;
        let (address, revisit) = self.address();
        let prev = self.values.get(&address).copied();
        let mut words = [0u64; WORDS_PER_LINE];
        for (i, w) in words.iter_mut().enumerate() {
            *w = match prev {
                Some(p) if revisit && !self.rng.gen_bool(self.spec.word_update_prob) => p.word(i),
                _ => self.word(),
            };
        }
        let new = MemoryLine::from_words(words);
        self.values.insert(address, new);
        if self.spec.recent_window > 0 {
            if self.recent.len() == self.spec.recent_window {
                self.recent.pop_front();
            }
            self.recent.push_back(address);
        }
        let old = self.spec.with_old.then(|| prev.unwrap_or(MemoryLine::ZERO));
        Some(WriteRecord { address, new, old })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.spec.lines - self.emitted) as usize;
        (n, Some(n))
    }
}
