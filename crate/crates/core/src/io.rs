//! Artifact file formats.
//!
//! Text formats start with a `<magic> <version>` line; `#` starts a comment
//! and blank lines are ignored. The URP file is binary and little-endian.
//!
//! Pre-transformations, one section per PT:
//!
//! ```text
//! polar-pt 1
//! pt B
//! 4 1 3
//! pt A
//! 7 0 5 6
//! ```
//!
//! Each rule line is `<target> <offset> <origin>...`.

use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::channel::FerPoint;
use crate::decode::LlrWord;
use crate::design::{Reference, UrpRecord};
use crate::error::{Error, Result};
use crate::polar::{Bit, CodeSpec, Codeword};
use crate::pretransform::{PreTransform, Role, TargetRule};
use crate::sced::Ensemble;

const PT_MAGIC: &str = "polar-pt";
const ENSEMBLE_MAGIC: &str = "polar-ensemble";
const FER_MAGIC: &str = "# polar-fer-csv v1";
const FER_HEADER: &str = "ebno_db,frames,frame_errors,bit_errors,fer,ber,censored";
const URP_MAGIC: &[u8; 8] = b"POLARURP";
const VERSION: u32 = 1;

/// Content lines with 1-based line numbers, comments stripped.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn expect_header<'a>(it: &mut impl Iterator<Item = (usize, &'a str)>, magic: &str) -> Result<()> {
    let (no, line) = it
        .next()
        .ok_or_else(|| Error::parse_line(1, format!("missing '{magic}' header")))?;
    let mut words = line.split_whitespace();
    if words.next() != Some(magic) {
        return Err(Error::parse_line(no, format!("expected '{magic}' header")));
    }
    let version: u32 = words
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::parse_line(no, "missing format version"))?;
    if version != VERSION {
        return Err(Error::parse_line(no, format!("unsupported version {version}")));
    }
    Ok(())
}

fn parse_num<T: std::str::FromStr>(no: usize, word: &str, what: &str) -> Result<T> {
    word.parse()
        .map_err(|_| Error::parse_line(no, format!("bad {what} '{word}'")))
}

fn write_pt_sections(out: &mut String, pts: &[&PreTransform]) {
    for pt in pts {
        let _ = writeln!(out, "pt {}", pt.role);
        for r in &pt.rules {
            let _ = write!(out, "{} {}", r.target, r.offset);
            for o in &r.origins {
                let _ = write!(out, " {o}");
            }
            out.push('\n');
        }
    }
}

/// Parsed sections and the first line that belongs to neither.
type Sections<'a> = (Vec<PreTransform>, Option<(usize, &'a str)>);

/// Parses `pt` sections until a line that is neither a section header nor
/// a rule line.
fn read_pt_sections<'a>(it: &mut impl Iterator<Item = (usize, &'a str)>) -> Result<Sections<'a>> {
    let mut pts: Vec<(Role, Vec<TargetRule>)> = Vec::new();
    for (no, line) in it.by_ref() {
        let mut words = line.split_whitespace();
        let first = words.next().expect("non-empty line");
        if first == "pt" {
            let role: Role = words
                .next()
                .ok_or_else(|| Error::parse_line(no, "missing role"))?
                .parse()
                .map_err(|_| Error::parse_line(no, "role must be A, B or C"))?;
            if words.next().is_some() {
                return Err(Error::parse_line(no, "trailing text after role"));
            }
            pts.push((role, Vec::new()));
        } else if first.as_bytes()[0].is_ascii_digit() {
            let (_, rules) = pts
                .last_mut()
                .ok_or_else(|| Error::parse_line(no, "rule before the first 'pt' line"))?;
            let target = parse_num(no, first, "target")?;
            let offset: Bit = parse_num(no, words.next().unwrap_or(""), "offset")?;
            if offset > 1 {
                return Err(Error::parse_line(no, "offset must be 0 or 1"));
            }
            let origins: Vec<usize> = words.map(|w| parse_num(no, w, "origin")).collect::<Result<_>>()?;
            if origins.is_empty() {
                return Err(Error::parse_line(no, "a rule needs at least one origin"));
            }
            rules.push(TargetRule::new(target, origins, offset));
        } else {
            let pts = pts.into_iter().map(|(r, rules)| PreTransform::new(r, rules)).collect();
            return Ok((pts, Some((no, line))));
        }
    }
    Ok((
        pts.into_iter().map(|(r, rules)| PreTransform::new(r, rules)).collect(),
        None,
    ))
}

/// Serializes pre-transformations in the `polar-pt` text format.
pub fn write_pts(pts: &[&PreTransform]) -> String {
    let mut out = format!("{PT_MAGIC} {VERSION}\n");
    write_pt_sections(&mut out, pts);
    out
}

/// Parses the `polar-pt` text format.
pub fn read_pts(text: &str) -> Result<Vec<PreTransform>> {
    let mut it = lines(text);
    expect_header(&mut it, PT_MAGIC)?;
    match read_pt_sections(&mut it)? {
        (pts, None) => Ok(pts),
        (_, Some((no, line))) => Err(Error::parse_line(no, format!("unexpected line '{line}'"))),
    }
}

/// Serializes an ensemble together with the list size of its paths:
///
/// ```text
/// polar-ensemble 1
/// code <fingerprint> <N> <kappa>
/// paths <M>
/// list-size <L>
/// pt ...
/// ```
///
/// Role-B sections are the shared rules, an optional role-A section the
/// genie, and the role-C sections the members in order.
pub fn write_ensemble(ens: &Ensemble, list_size: usize) -> String {
    let code = ens.code();
    let mut out = format!("{ENSEMBLE_MAGIC} {VERSION}\n");
    let _ = writeln!(
        out,
        "code {:016x} {} {}",
        code.fingerprint(),
        code.block_len(),
        code.kappa()
    );
    let _ = writeln!(out, "paths {}", ens.paths());
    let _ = writeln!(out, "list-size {list_size}");
    let all: Vec<&PreTransform> = ens
        .pt_b()
        .iter()
        .chain(ens.pt_a())
        .chain(ens.members().iter())
        .collect();
    write_pt_sections(&mut out, &all);
    out
}

/// Parses an ensemble file for `code`; returns the ensemble and list size.
pub fn read_ensemble(text: &str, code: &CodeSpec) -> Result<(Ensemble, usize)> {
    let mut it = lines(text);
    expect_header(&mut it, ENSEMBLE_MAGIC)?;
    let mut field = |key: &str| -> Result<(usize, Vec<String>)> {
        let (no, line) = it
            .next()
            .ok_or_else(|| Error::parse_line(0, format!("missing '{key}' line")))?;
        let mut words = line.split_whitespace();
        if words.next() != Some(key) {
            return Err(Error::parse_line(no, format!("expected '{key}'")));
        }
        Ok((no, words.map(str::to_owned).collect()))
    };
    let (no, c) = field("code")?;
    let expected = vec![
        format!("{:016x}", code.fingerprint()),
        code.block_len().to_string(),
        code.kappa().to_string(),
    ];
    if c != expected {
        return Err(Error::parse_line(no, "ensemble was built for a different code"));
    }
    let (no, p) = field("paths")?;
    let paths: usize = parse_num(no, p.first().map_or("", |s| s.as_str()), "path count")?;
    if paths == 0 {
        return Err(Error::parse_line(no, "an ensemble needs at least one path"));
    }
    let (no, l) = field("list-size")?;
    let list_size: usize = parse_num(no, l.first().map_or("", |s| s.as_str()), "list size")?;
    if list_size == 0 {
        return Err(Error::parse_line(no, "list size must be at least 1"));
    }
    let (pts, rest) = read_pt_sections(&mut it)?;
    if let Some((no, line)) = rest {
        return Err(Error::parse_line(no, format!("unexpected line '{line}'")));
    }
    let mut pt_b = Vec::new();
    let mut pt_a = None;
    let mut members = Vec::new();
    for pt in pts {
        match pt.role {
            Role::B => pt_b.push(pt),
            Role::A if pt_a.is_none() => pt_a = Some(pt),
            Role::A => return Err(Error::parse_line(0, "more than one role-A section")),
            Role::C => members.push(pt),
        }
    }
    if members.len() != paths {
        return Err(Error::parse_line(
            0,
            format!("header declares {paths} paths but {} members follow", members.len()),
        ));
    }
    let ens = Ensemble::new(code.clone(), pt_b, pt_a, members)?;
    Ok((ens, list_size))
}

/// Writes the FER table as CSV with a format comment line.
pub fn write_fer_csv(points: &[FerPoint]) -> String {
    let mut out = format!("{FER_MAGIC}\n{FER_HEADER}\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{:e},{:e},{}",
            p.ebno_db, p.frames, p.frame_errors, p.bit_errors, p.fer, p.ber, p.censored
        );
    }
    out
}

/// Parses [`write_fer_csv`] output.
pub fn read_fer_csv(text: &str) -> Result<Vec<FerPoint>> {
    let mut it = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match it.next() {
        Some((_, l)) if l == FER_MAGIC => {}
        Some((_, l)) if l.starts_with("# polar-fer-csv") => {
            return Err(Error::parse_line(1, format!("unsupported version in '{l}'")))
        }
        _ => return Err(Error::parse_line(1, format!("expected '{FER_MAGIC}'"))),
    }
    match it.next() {
        Some((_, l)) if l == FER_HEADER => {}
        _ => return Err(Error::parse_line(2, "missing column header")),
    }
    it.filter(|(_, l)| !l.is_empty())
        .map(|(no, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 7 {
                return Err(Error::parse_line(no, format!("expected 7 fields, found {}", f.len())));
            }
            Ok(FerPoint {
                ebno_db: parse_num(no, f[0], "ebno_db")?,
                frames: parse_num(no, f[1], "frames")?,
                frame_errors: parse_num(no, f[2], "frame_errors")?,
                bit_errors: parse_num(no, f[3], "bit_errors")?,
                fer: parse_num(no, f[4], "fer")?,
                ber: parse_num(no, f[5], "ber")?,
                censored: parse_num(no, f[6], "censored")?,
            })
        })
        .collect()
}

/// Header of a URP file.
#[derive(Clone, Debug, PartialEq)]
pub struct UrpHeader {
    pub block_len: usize,
    pub code_fingerprint: u64,
    pub ebno_db: f64,
    pub reference: Reference,
    pub seed: u64,
    pub count: u64,
}

/// Writes URPs in the binary format:
/// magic `POLARURP`, version u32, N u32, code fingerprint u64, Eb/N0 f64,
/// reference tag (u16 length + UTF-8), seed u64, count u64, then per
/// record: frame u64, N f32 LLRs, ceil(N/8) codeword bytes (bit j of the
/// word at bit j % 8 of byte j / 8).
pub fn write_urps(mut w: impl Write, code: &CodeSpec, reference: Reference, urps: &[UrpRecord]) -> Result<()> {
    let n = code.block_len();
    let (ebno_db, seed) = urps.first().map_or((0.0, 0), |r| (r.ebno_db, r.seed));
    if urps
        .iter()
        .any(|r| r.llr.len() != n || r.tx.len() != n || r.ebno_db != ebno_db || r.seed != seed)
    {
        return Err(Error::invalid(
            "URPs must match the code length and share one Eb/N0 and seed",
        ));
    }
    let tag = reference.tag();
    w.write_all(URP_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(n as u32).to_le_bytes())?;
    w.write_all(&code.fingerprint().to_le_bytes())?;
    w.write_all(&ebno_db.to_le_bytes())?;
    w.write_all(&(tag.len() as u16).to_le_bytes())?;
    w.write_all(tag.as_bytes())?;
    w.write_all(&seed.to_le_bytes())?;
    w.write_all(&(urps.len() as u64).to_le_bytes())?;
    let mut packed = vec![0u8; n.div_ceil(8)];
    for r in urps {
        w.write_all(&r.frame.to_le_bytes())?;
        for v in r.llr.values() {
            w.write_all(&v.to_le_bytes())?;
        }
        packed.iter_mut().for_each(|b| *b = 0);
        for (j, &b) in r.tx.bits().iter().enumerate() {
            packed[j / 8] |= b << (j % 8);
        }
        w.write_all(&packed)?;
    }
    Ok(())
}

/// Byte reader that reports the offset of a short read.
struct Cursor<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Cursor<R> {
    fn bytes<const K: usize>(&mut self, what: &str) -> Result<[u8; K]> {
        let mut buf = [0u8; K];
        self.fill(&mut buf, what)?;
        Ok(buf)
    }

    fn fill(&mut self, buf: &mut [u8], what: &str) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::parse_offset(self.offset, format!("truncated {what}")),
            _ => Error::Io(e),
        })?;
        self.offset += buf.len() as u64;
        Ok(())
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        self.bytes(what).map(u16::from_le_bytes)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        self.bytes(what).map(u32::from_le_bytes)
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        self.bytes(what).map(u64::from_le_bytes)
    }
}

/// Reads a URP file, checking it against `code`.
pub fn read_urps(r: impl Read, code: &CodeSpec) -> Result<(UrpHeader, Vec<UrpRecord>)> {
    let mut c = Cursor { inner: r, offset: 0 };
    if &c.bytes::<8>("magic")? != URP_MAGIC {
        return Err(Error::parse_offset(0, "not a URP file"));
    }
    let at = c.offset;
    let version = c.u32("version")?;
    if version != VERSION {
        return Err(Error::parse_offset(at, format!("unsupported version {version}")));
    }
    let at = c.offset;
    let n = c.u32("block length")? as usize;
    if n != code.block_len() {
        return Err(Error::parse_offset(
            at,
            format!("block length {n} does not match the code"),
        ));
    }
    let at = c.offset;
    let fingerprint = c.u64("code fingerprint")?;
    if fingerprint != code.fingerprint() {
        return Err(Error::parse_offset(at, "URPs were collected for a different code"));
    }
    let ebno_db = f64::from_le_bytes(c.bytes("Eb/N0")?);
    let at = c.offset;
    let len = c.u16("reference tag")? as usize;
    let mut tag = vec![0u8; len];
    c.fill(&mut tag, "reference tag")?;
    let reference = std::str::from_utf8(&tag)
        .ok()
        .and_then(|t| Reference::from_tag(t).ok())
        .ok_or_else(|| Error::parse_offset(at, "bad reference decoder tag"))?;
    let seed = c.u64("seed")?;
    let count = c.u64("record count")?;
    let mut urps = Vec::with_capacity(count.min(1 << 20) as usize);
    let mut raw = vec![0u8; 4 * n];
    let mut packed = vec![0u8; n.div_ceil(8)];
    for _ in 0..count {
        let frame = c.u64("record")?;
        c.fill(&mut raw, "LLRs")?;
        let llr: Vec<f32> = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        let at = c.offset;
        c.fill(&mut packed, "codeword")?;
        if !n.is_multiple_of(8) && packed[n / 8] >> (n % 8) != 0 {
            return Err(Error::parse_offset(at, "padding bits set in codeword"));
        }
        let tx = Codeword((0..n).map(|j| (packed[j / 8] >> (j % 8)) & 1).collect());
        urps.push(UrpRecord {
            llr: LlrWord::from_f32(llr),
            tx,
            ebno_db,
            seed,
            frame,
        });
    }
    let mut probe = [0u8; 1];
    if c.inner.read(&mut probe)? != 0 {
        return Err(Error::parse_offset(c.offset, "trailing bytes after the last record"));
    }
    let header = UrpHeader {
        block_len: n,
        code_fingerprint: fingerprint,
        ebno_db,
        reference,
        seed,
        count,
    };
    Ok((header, urps))
}
