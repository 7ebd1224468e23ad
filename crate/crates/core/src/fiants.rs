//! Segmentation and parsing of calendared fiant volumes.
//!
//! A volume is plain text in which each record starts on a line beginning
//! with its number and a full stop. Records are parsed leniently: whatever
//! cannot be recognised is kept in the raw text and the quality is lowered.

use std::collections::BTreeSet;
use std::fmt;
use std::io::BufRead;

use regex::Regex;
use std::sync::LazyLock;
use thiserror::Error;

use crate::gazetteer::Gazetteer;
use crate::names::NameRules;
use crate::regnal::{parse_roman, Monarch, RegnalDate, RegnalError, ReignTable};
use crate::xml::{attr, escape_text};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FiantsError {
    #[error("no numbered records found")]
    NoRecords,
    #[error("correction table line {line}: {reason}")]
    BadCorrection { line: usize, reason: String },
    #[error("corrections {left:?} and {right:?} can interact")]
    OverlappingCorrections { left: String, right: String },
}

static RECORD_START: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*(\d{1,6})\.(?:\s|$)").unwrap());

/// One numbered record as it appears in the volume text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawBlock {
    pub number: u32,
    /// 1-based line of the record number.
    pub line: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Segmentation {
    /// Text before the first record.
    pub preamble: String,
    pub blocks: Vec<RawBlock>,
    pub warnings: Vec<String>,
}

impl Segmentation {
    /// Reassembles the original text.
    pub fn concat(&self) -> String {
        let mut s = self.preamble.clone();
        for b in &self.blocks {
            s.push_str(&b.text);
        }
        s
    }
}

/// Splits a volume into numbered record blocks. Every byte of the input
/// ends up either in the preamble or in exactly one block.
pub fn segment_fiants_text(text: &str) -> Result<Segmentation, FiantsError> {
    let mut seg = Segmentation::default();
    let mut current: Option<RawBlock> = None;
    let mut last_number: Option<u32> = None;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        let start = RECORD_START.captures(line).and_then(|c| c[1].parse::<u32>().ok());
        match start {
            Some(number) => {
                if let Some(b) = current.take() {
                    seg.blocks.push(b);
                }
                if let Some(prev) = last_number {
                    if number <= prev {
                        seg.warnings.push(format!(
                            "line {}: record {number} does not follow {prev}",
                            i + 1
                        ));
                    }
                }
                last_number = Some(number);
                current = Some(RawBlock { number, line: i + 1, text: line.to_string() });
            }
            None => match current.as_mut() {
                Some(b) => b.text.push_str(line),
                None => seg.preamble.push_str(line),
            },
        }
    }
    if let Some(b) = current {
        seg.blocks.push(b);
    }
    if seg.blocks.is_empty() {
        return Err(FiantsError::NoRecords);
    }
    Ok(seg)
}

/// Literal OCR fixes applied before parsing.
///
/// Rules are tried longest first at each position, scanning left to right.
/// No left side may overlap any right side in any alignment, so a single
/// pass is a fixed point and the order of rules does not matter.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OcrCorrections {
    rules: Vec<(String, String)>,
}

fn strings_overlap(a: &str, b: &str) -> bool {
    if a.contains(b) || b.contains(a) {
        return true;
    }
    let ends_meet = |x: &str, y: &str| {
        x.char_indices()
            .skip(1)
            .any(|(i, _)| y.starts_with(&x[i..]))
    };
    ends_meet(a, b) || ends_meet(b, a)
}

impl OcrCorrections {
    pub fn new(pairs: Vec<(String, String)>) -> Result<Self, FiantsError> {
        let mut seen = BTreeSet::new();
        for (i, (wrong, right)) in pairs.iter().enumerate() {
            let bad = |reason: &str| FiantsError::BadCorrection { line: i + 1, reason: reason.to_string() };
            if wrong.is_empty() {
                return Err(bad("empty pattern"));
            }
            if right.is_empty() {
                // Deletions can join their neighbours into a new match.
                return Err(bad("empty replacement"));
            }
            if !seen.insert(wrong.clone()) {
                return Err(bad("duplicate pattern"));
            }
        }
        for (wrong, _) in &pairs {
            for (_, right) in &pairs {
                if strings_overlap(wrong, right) {
                    return Err(FiantsError::OverlappingCorrections {
                        left: wrong.clone(),
                        right: right.clone(),
                    });
                }
            }
        }
        let mut rules = pairs;
        rules.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        Ok(OcrCorrections { rules })
    }

    /// Reads `wrong<TAB>right` lines. Blank lines and `#` comments are skipped.
    pub fn from_tsv<R: BufRead>(reader: R) -> Result<Self, FiantsError> {
        let mut pairs = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| FiantsError::BadCorrection { line: i + 1, reason: e.to_string() })?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((wrong, right)) = line.split_once('\t') else {
                return Err(FiantsError::BadCorrection { line: i + 1, reason: "expected two fields".into() });
            };
            pairs.push((wrong.to_string(), right.to_string()));
        }
        Self::new(pairs)
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn apply(&self, text: &str) -> String {
        if self.rules.is_empty() {
            return text.to_string();
        }
        let mut out = String::with_capacity(text.len());
        let mut i = 0;
        'outer: while i < text.len() {
            let rest = &text[i..];
            for (wrong, right) in &self.rules {
                if rest.starts_with(wrong.as_str()) {
                    out.push_str(right);
                    i += wrong.len();
                    continue 'outer;
                }
            }
            let c = rest.chars().next().unwrap();
            out.push(c);
            i += c.len_utf8();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParseQuality {
    Full,
    Partial,
    RawOnly,
}

impl ParseQuality {
    pub fn as_str(self) -> &'static str {
        match self {
            ParseQuality::Full => "full",
            ParseQuality::Partial => "partial",
            ParseQuality::RawOnly => "raw-only",
        }
    }
}

impl fmt::Display for ParseQuality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Person {
    pub first_name: String,
    pub surname: String,
    pub occupation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiantRecord {
    pub number: u32,
    pub grant_type: Option<String>,
    pub persons: Vec<Person>,
    pub place: Option<String>,
    /// Canonical county name when it could be resolved.
    pub county: Option<String>,
    pub regnal: Option<RegnalDate>,
    pub gregorian_year: Option<i32>,
    /// Record text exactly as segmented, before OCR correction.
    pub raw_text: String,
    pub quality: ParseQuality,
    pub flags: Vec<String>,
}

pub struct FiantsContext<'a> {
    /// Monarch whose regnal years the volume uses.
    pub monarch: Monarch,
    pub reigns: &'a ReignTable,
    pub gazetteer: &'a Gazetteer,
    pub rules: &'a NameRules,
    pub ocr: &'a OcrCorrections,
}

static NUMBER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)^\s*(\d{1,6})\.\s*(.*)$").unwrap());
static GRANT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^([A-Z][A-Za-z]*(?: [a-z]+)*?(?: [A-Z][a-z]+)*?)\s+(?:to|unto)\s+(.+)$").unwrap());
static REGNAL_TAIL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)^\s*(?:(\d{1,2})\s+([a-z]+)\.?,?\s+)?([ivxlcj]+)(?:\s*(?:&|and)\s*([ivxlcj]+))?\s*\.?\s*$",
    )
    .unwrap()
});

const SEPARATORS: [&str; 4] = ["\u{2014}", "\u{2013}", "--", "-"];

fn month_number(name: &str) -> Option<u8> {
    const MONTHS: [&str; 12] = [
        "january", "february", "march", "april", "may", "june", "july", "august", "september", "october",
        "november", "december",
    ];
    let lower = name.to_lowercase();
    if lower.len() < 3 {
        return None;
    }
    MONTHS
        .iter()
        .position(|m| m.starts_with(&lower) || (lower == "sept" && *m == "september"))
        .map(|i| i as u8 + 1)
}

struct DateTail {
    day_month: Option<(u8, u8)>,
    years: Vec<u32>,
}

fn parse_date_tail(tail: &str) -> Option<DateTail> {
    let c = REGNAL_TAIL.captures(tail)?;
    let day_month = match (c.get(1), c.get(2)) {
        (Some(d), Some(m)) => Some((d.as_str().parse().ok()?, month_number(m.as_str())?)),
        _ => None,
    };
    let mut years = vec![parse_roman(&c[3].to_lowercase()).ok()?];
    if let Some(second) = c.get(4) {
        years.push(parse_roman(&second.as_str().to_lowercase()).ok()?);
    }
    Some(DateTail { day_month, years })
}

/// Splits body from date at the rightmost dash separator whose tail parses.
fn split_date(text: &str) -> Option<(&str, DateTail)> {
    let mut best: Option<(usize, usize)> = None;
    for sep in SEPARATORS {
        for (pos, _) in text.match_indices(sep) {
            if parse_date_tail(&text[pos + sep.len()..]).is_some() && best.is_none_or(|(p, _)| pos > p) {
                best = Some((pos, sep.len()));
            }
        }
    }
    let (pos, len) = best?;
    let tail = parse_date_tail(&text[pos + len..])?;
    Some((&text[..pos], tail))
}

fn strip_county_prefix(s: &str) -> Option<&str> {
    let lower = s.to_lowercase();
    for p in ["county of ", "county ", "co. ", "co "] {
        if lower.starts_with(p) {
            return Some(s[p.len()..].trim());
        }
    }
    None
}

fn starts_upper(s: &str) -> bool {
    s.chars().next().is_some_and(char::is_uppercase)
}

/// Parses one block. Never fails: unrecognised parts lower the quality.
pub fn parse_fiant_record(block: &RawBlock, ctx: &FiantsContext<'_>) -> FiantRecord {
    let mut rec = FiantRecord {
        number: block.number,
        grant_type: None,
        persons: Vec::new(),
        place: None,
        county: None,
        regnal: None,
        gregorian_year: None,
        raw_text: block.text.clone(),
        quality: ParseQuality::RawOnly,
        flags: Vec::new(),
    };
    let flat = block.text.split_whitespace().collect::<Vec<_>>().join(" ");
    let text = ctx.ocr.apply(&flat);
    let Some(caps) = NUMBER.captures(&text) else {
        rec.flags.push("no-number".into());
        return rec;
    };
    let content = caps[2].trim().to_string();

    let (body, tail) = match split_date(&content) {
        Some((b, t)) => (b.trim_end().to_string(), Some(t)),
        None => {
            rec.flags.push("no-date".into());
            (content.clone(), None)
        }
    };
    if let Some(t) = tail {
        let (monarch, year) = if t.years.len() == 2 {
            rec.flags.push("dual-regnal-year".into());
            (Monarch::PhilipAndMary, t.years[0])
        } else {
            (ctx.monarch, t.years[0])
        };
        let rd = RegnalDate { monarch, regnal_year: year, day_month: t.day_month };
        rec.regnal = Some(rd);
        match ctx.reigns.to_calendar(&rd) {
            Ok(c) => rec.gregorian_year = Some(c.year),
            Err(RegnalError::UnsupportedJointStyle(_)) => rec.flags.push("joint-regnal-unsupported".into()),
            Err(e) => rec.flags.push(format!("bad-date: {e}")),
        }
    }

    let body = body.trim_end_matches(['.', ',', ';', ' ', '-', '\u{2013}', '\u{2014}']);
    let Some(g) = GRANT.captures(body) else {
        rec.flags.push("no-grant".into());
        rec.quality = if rec.gregorian_year.is_some() { ParseQuality::Partial } else { ParseQuality::RawOnly };
        return rec;
    };
    rec.grant_type = Some(g[1].to_string());
    parse_parties(&g[2], ctx, &mut rec);

    let complete = rec.grant_type.is_some()
        && !rec.persons.is_empty()
        && rec.gregorian_year.is_some()
        && !rec.flags.iter().any(|f| f.starts_with("bad-name") || f.starts_with("unresolved-county"));
    rec.quality = if complete { ParseQuality::Full } else { ParseQuality::Partial };
    rec
}

fn parse_parties(text: &str, ctx: &FiantsContext<'_>, rec: &mut FiantRecord) {
    let mut county_text: Option<String> = None;
    let mut current: Option<Person> = None;
    for raw in text.split(',') {
        let mut seg = raw.trim();
        if seg.is_empty() {
            continue;
        }
        if let Some(s) = seg.strip_prefix("and ") {
            seg = s.trim();
        }
        if let Some(c) = strip_county_prefix(seg) {
            if county_text.is_none() {
                county_text = Some(c.to_string());
            }
        } else if let Some(p) = seg.strip_prefix("of ") {
            let p = p.trim();
            if rec.place.is_none() && !p.eq_ignore_ascii_case("same") {
                rec.place = Some(p.to_string());
            }
        } else if starts_upper(seg) {
            if let Some(p) = current.take() {
                rec.persons.push(p);
            }
            match person_from_name(seg, ctx.rules) {
                Some(p) => current = Some(p),
                None => rec.flags.push(format!("bad-name: {seg}")),
            }
        } else if let Some(p) = current.as_mut() {
            if p.occupation.is_none() {
                p.occupation = Some(seg.to_string());
            }
        }
    }
    if let Some(p) = current {
        rec.persons.push(p);
    }
    match county_text {
        Some(c) => match ctx.gazetteer.standardize_county(&c) {
            Ok(canon) => rec.county = Some(canon),
            Err(_) => rec.flags.push(format!("unresolved-county: {c}")),
        },
        None => {
            if let Some(place) = &rec.place {
                let hits = ctx.gazetteer.counties_with_place(place);
                if hits.len() == 1 {
                    rec.county = Some(hits[0].to_string());
                }
            }
        }
    }
}

fn person_from_name(seg: &str, rules: &NameRules) -> Option<Person> {
    let words: Vec<&str> = seg.split_whitespace().collect();
    if words.len() < 2 {
        return None;
    }
    let surname_raw = words[words.len() - 1];
    let surname = rules.normalize(&surname_raw.to_uppercase()).ok()?.canonical;
    let first_name = words[..words.len() - 1].join(" ");
    if !first_name.chars().all(|c| c.is_alphabetic() || c == ' ' || c == '\'' || c == '-') {
        return None;
    }
    Some(Person { first_name, surname, occupation: None })
}

/// Segments and parses a whole volume. Records come back sorted by number.
pub fn parse_fiants_volume(text: &str, ctx: &FiantsContext<'_>) -> Result<(Vec<FiantRecord>, Vec<String>), FiantsError> {
    let seg = segment_fiants_text(text)?;
    let mut recs: Vec<FiantRecord> = seg.blocks.iter().map(|b| parse_fiant_record(b, ctx)).collect();
    recs.sort_by_key(|r| r.number);
    Ok((recs, seg.warnings))
}

pub fn fiant_to_xml(r: &FiantRecord) -> String {
    let mut s = String::from("<fiant");
    attr(&mut s, "number", &r.number.to_string());
    if let Some(t) = &r.grant_type {
        attr(&mut s, "type", t);
    }
    if let Some(y) = r.gregorian_year {
        attr(&mut s, "year", &y.to_string());
    }
    attr(&mut s, "quality", r.quality.as_str());
    s.push('>');
    for p in &r.persons {
        s.push_str("<person><fn>");
        s.push_str(&escape_text(&p.first_name));
        s.push_str("</fn><sn>");
        s.push_str(&escape_text(&p.surname));
        s.push_str("</sn>");
        if let Some(o) = &p.occupation {
            s.push_str("<occ>");
            s.push_str(&escape_text(o));
            s.push_str("</occ>");
        }
        s.push_str("</person>");
    }
    if r.place.is_some() || r.county.is_some() {
        s.push_str("<place");
        if let Some(c) = &r.county {
            attr(&mut s, "county", c);
        }
        match &r.place {
            Some(p) => {
                s.push('>');
                s.push_str(&escape_text(p));
                s.push_str("</place>");
            }
            None => s.push_str("/>"),
        }
    }
    if let Some(rd) = &r.regnal {
        s.push_str("<regnal");
        attr(&mut s, "monarch", rd.monarch.name());
        attr(&mut s, "year", &rd.regnal_year.to_string());
        if let Some((d, m)) = rd.day_month {
            attr(&mut s, "day", &d.to_string());
            attr(&mut s, "month", &m.to_string());
        }
        s.push_str("/>");
    }
    for f in &r.flags {
        s.push_str("<flag>");
        s.push_str(&escape_text(f));
        s.push_str("</flag>");
    }
    s.push_str("<raw>");
    s.push_str(&escape_text(r.raw_text.trim()));
    s.push_str("</raw></fiant>");
    s
}

/// Writes a volume document with one `<fiant>` per line, sorted by number.
pub fn volume_to_xml(volume: &str, records: &[FiantRecord]) -> String {
    let mut sorted: Vec<&FiantRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.number);
    let mut s = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<fiants");
    attr(&mut s, "volume", volume);
    s.push_str(">\n");
    for r in sorted {
        s.push_str(&fiant_to_xml(r));
        s.push('\n');
    }
    s.push_str("</fiants>\n");
    s
}

/// Reads back the structured fields of a volume document.
pub fn parse_volume_xml(xml: &str) -> Result<Vec<FiantRecord>, String> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| e.to_string())?;
    let root = doc.root_element();
    if root.tag_name().name() != "fiants" {
        return Err(format!("unexpected root <{}>", root.tag_name().name()));
    }
    let mut out = Vec::new();
    for f in root.children().filter(|n| n.has_tag_name("fiant")) {
        let number = f
            .attribute("number")
            .and_then(|n| n.parse().ok())
            .ok_or("fiant without number")?;
        let quality = match f.attribute("quality") {
            Some("full") => ParseQuality::Full,
            Some("partial") => ParseQuality::Partial,
            _ => ParseQuality::RawOnly,
        };
        let mut rec = FiantRecord {
            number,
            grant_type: f.attribute("type").map(str::to_string),
            persons: Vec::new(),
            place: None,
            county: None,
            regnal: None,
            gregorian_year: f.attribute("year").and_then(|y| y.parse().ok()),
            raw_text: String::new(),
            quality,
            flags: Vec::new(),
        };
        let text_of = |n: roxmltree::Node| n.text().unwrap_or("").to_string();
        for c in f.children().filter(|n| n.is_element()) {
            match c.tag_name().name() {
                "person" => {
                    let child = |name: &str| c.children().find(|n| n.has_tag_name(name)).map(text_of);
                    rec.persons.push(Person {
                        first_name: child("fn").unwrap_or_default(),
                        surname: child("sn").unwrap_or_default(),
                        occupation: child("occ"),
                    });
                }
                "place" => {
                    rec.county = c.attribute("county").map(str::to_string);
                    rec.place = c.text().map(str::to_string);
                }
                "regnal" => {
                    let monarch = c
                        .attribute("monarch")
                        .and_then(|m| m.parse().ok())
                        .ok_or("regnal without monarch")?;
                    let num = |k: &str| c.attribute(k).and_then(|v| v.parse::<u32>().ok());
                    rec.regnal = Some(RegnalDate {
                        monarch,
                        regnal_year: num("year").ok_or("regnal without year")?,
                        day_month: match (num("day"), num("month")) {
                            (Some(d), Some(m)) => Some((d as u8, m as u8)),
                            _ => None,
                        },
                    });
                }
                "flag" => rec.flags.push(text_of(c)),
                "raw" => rec.raw_text = text_of(c),
                _ => {}
            }
        }
        out.push(rec);
    }
    Ok(out)
}
