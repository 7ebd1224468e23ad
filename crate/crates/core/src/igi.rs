//! Genealogical event records: parsing, cleaning, near-duplicate removal and
//! a sealed, surname-indexed store.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::gazetteer::{Gazetteer, PlaceRejection, VerdictKind};
use crate::names::{NameError, NameRules};

pub const FIELD_COUNT: usize = 9;
const INDEX_FILE: &str = "index.tsv";
const MONTHS: [&str; 12] = ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"];

#[derive(Debug, Error)]
pub enum IgiError {
    #[error("expected {FIELD_COUNT} '|'-separated fields, found {0}")]
    WrongFieldCount(usize),
    #[error("unknown event type {0:?}")]
    UnknownEventType(String),
    #[error("unparseable year {0:?}")]
    BadYear(String),
    #[error("year {0} outside [1300, 2100]")]
    YearOutOfRange(i32),
    #[error("unparseable event date {0:?}")]
    BadDate(String),
    #[error("event place {0:?} does not split into place, county, country")]
    BadPlace(String),
    #[error("surname: {0}")]
    Surname(#[from] NameError),
    #[error("store not built at {0:?}")]
    StoreNotBuilt(PathBuf),
    #[error("corrupt store: {0}")]
    CorruptStore(String),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
}

impl IgiError {
    pub fn code(&self) -> &'static str {
        match self {
            IgiError::WrongFieldCount(_) => "wrong-field-count",
            IgiError::UnknownEventType(_) => "unknown-event-type",
            IgiError::BadYear(_) => "unparseable-year",
            IgiError::YearOutOfRange(_) => "year-out-of-range",
            IgiError::BadDate(_) => "bad-date",
            IgiError::BadPlace(_) => "bad-place",
            IgiError::Surname(_) => "bad-surname",
            IgiError::StoreNotBuilt(_) => "store-not-built",
            IgiError::CorruptStore(_) => "corrupt-store",
            IgiError::Io(_) => "io",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventType {
    Birth,
    Christening,
    Marriage,
    Death,
}

impl EventType {
    pub const ALL: [EventType; 4] = [EventType::Birth, EventType::Christening, EventType::Marriage, EventType::Death];

    pub fn as_str(self) -> &'static str {
        match self {
            EventType::Birth => "Birth",
            EventType::Christening => "Christening",
            EventType::Marriage => "Marriage",
            EventType::Death => "Death",
        }
    }
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventType {
    type Err = IgiError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "birth" => Ok(EventType::Birth),
            "christening" => Ok(EventType::Christening),
            "marriage" => Ok(EventType::Marriage),
            "death" => Ok(EventType::Death),
            _ => Err(IgiError::UnknownEventType(s.trim().to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gender {
    Male,
    Female,
    Unknown,
}

impl Gender {
    fn parse(s: &str) -> Self {
        match s.trim().to_ascii_lowercase().as_str() {
            "male" | "m" => Gender::Male,
            "female" | "f" => Gender::Female,
            _ => Gender::Unknown,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "Male",
            Gender::Female => "Female",
            Gender::Unknown => "Unknown",
        }
    }
}

/// A day-month-year event date; day and month may be missing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventDate {
    pub year: i32,
    pub month: Option<u8>,
    pub day: Option<u8>,
}

impl EventDate {
    /// Parses `05 Sep 1629`, `Sep 1629` or `1629`.
    pub fn parse(text: &str) -> Result<Self, IgiError> {
        let bad = || IgiError::BadDate(text.to_string());
        let parts: Vec<&str> = text.split_whitespace().collect();
        let month_of = |m: &str| {
            let m = m.get(..3)?;
            MONTHS
                .iter()
                .position(|name| name.eq_ignore_ascii_case(m))
                .map(|p| p as u8 + 1)
        };
        let year = |y: &str| y.parse::<i32>().map_err(|_| bad());
        match parts.as_slice() {
            [y] => Ok(Self {
                year: year(y)?,
                month: None,
                day: None,
            }),
            [m, y] => Ok(Self {
                year: year(y)?,
                month: Some(month_of(m).ok_or_else(bad)?),
                day: None,
            }),
            [d, m, y] => {
                let day: u8 = d.parse().map_err(|_| bad())?;
                if !(1..=31).contains(&day) {
                    return Err(bad());
                }
                Ok(Self {
                    year: year(y)?,
                    month: Some(month_of(m).ok_or_else(bad)?),
                    day: Some(day),
                })
            }
            _ => Err(bad()),
        }
    }

    /// ISO-like text used for comparison: `1629-09-05`, `1629-09` or `1629`.
    pub fn normalized(&self) -> String {
        match (self.month, self.day) {
            (Some(m), Some(d)) => format!("{:04}-{:02}-{:02}", self.year, m, d),
            (Some(m), None) => format!("{:04}-{:02}", self.year, m),
            _ => format!("{:04}", self.year),
        }
    }
}

impl fmt::Display for EventDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.month, self.day) {
            (Some(m), Some(d)) => write!(f, "{:02} {} {}", d, MONTHS[m as usize - 1], self.year),
            (Some(m), None) => write!(f, "{} {}", MONTHS[m as usize - 1], self.year),
            _ => write!(f, "{}", self.year),
        }
    }
}

/// One genealogical event.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IgiRecord {
    pub batch: String,
    pub event_date: Option<EventDate>,
    /// Town or parish, without county and country.
    pub event_place: String,
    pub event_type: EventType,
    pub year: i32,
    pub first_name: String,
    pub surname: String,
    pub role: String,
    pub gender: Gender,
    pub county: String,
    pub country: String,
}

impl IgiRecord {
    /// Century by `floor(year / 100) + 1`; 1629 is in the 17th.
    pub fn century(&self) -> i32 {
        century_of(self.year)
    }

    pub fn dedup_key(&self) -> DedupKey {
        DedupKey {
            surname: self.surname.clone(),
            date: self.date_key(),
        }
    }

    /// The full normalized date when present, otherwise the year.
    pub fn date_key(&self) -> String {
        match &self.event_date {
            Some(d) => d.normalized(),
            None => format!("{:04}", self.year),
        }
    }

    /// Serializes in the nine-field `|` layout.
    pub fn to_line(&self) -> String {
        let date = self.event_date.map(|d| d.to_string()).unwrap_or_default();
        format!(
            "{}|{}|{}, {}, {}|{}|{}|{}|{}|{}|{}",
            self.batch,
            date,
            self.event_place,
            self.county,
            self.country,
            self.event_type,
            self.year,
            self.first_name,
            self.surname,
            self.role,
            self.gender.as_str()
        )
    }
}

pub fn century_of(year: i32) -> i32 {
    year.div_euclid(100) + 1
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DedupKey {
    pub surname: String,
    pub date: String,
}

fn parse_fields<F>(line: &str, surname: F) -> Result<IgiRecord, IgiError>
where
    F: FnOnce(&str) -> Result<String, IgiError>,
{
    let line = line.trim_end_matches(['\r', '\n']);
    let fields: Vec<&str> = line.split('|').collect();
    if fields.len() != FIELD_COUNT {
        return Err(IgiError::WrongFieldCount(fields.len()));
    }
    let event_date = match fields[1].trim() {
        "" => None,
        d => Some(EventDate::parse(d)?),
    };
    let place_parts: Vec<&str> = fields[2].split(',').map(str::trim).collect();
    if place_parts.len() < 3 || place_parts.iter().any(|p| p.is_empty()) {
        return Err(IgiError::BadPlace(fields[2].to_string()));
    }
    let n = place_parts.len();
    let event_type: EventType = fields[3].parse()?;
    let year_text = fields[4].trim();
    let year: i32 = year_text.parse().map_err(|_| IgiError::BadYear(year_text.to_string()))?;
    if !(1300..=2100).contains(&year) {
        return Err(IgiError::YearOutOfRange(year));
    }
    Ok(IgiRecord {
        batch: fields[0].trim().to_string(),
        event_date,
        event_place: place_parts[..n - 2].join(", "),
        event_type,
        year,
        first_name: fields[5].trim().to_string(),
        surname: surname(fields[6])?,
        role: fields[7].trim().to_string(),
        gender: Gender::parse(fields[8]),
        county: place_parts[n - 2].to_string(),
        country: place_parts[n - 1].to_string(),
    })
}

/// Parses one `|`-delimited line (batch, event date, event place, event type,
/// year, first name, surname, role, gender). The place splits on commas
/// into place, county and country; the surname is cased by the name rules.
pub fn parse_igi_record(line: &str, rules: &NameRules) -> Result<IgiRecord, IgiError> {
    parse_fields(line, |s| Ok(rules.normalize(s)?.canonical))
}

/// Why a parsed record was dropped during cleaning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rejection {
    pub reason: PlaceRejection,
}

/// Standardizes the county and validates the place, applying volunteer
/// corrections.
pub fn clean_igi_record(record: &IgiRecord, g: &Gazetteer) -> Result<IgiRecord, Rejection> {
    let county = g.standardize_county(&record.county).map_err(|_| Rejection {
        reason: PlaceRejection::UnknownCounty,
    })?;
    let verdict = g.validate_place(&record.event_place, &county, &record.country);
    let place = match verdict.kind {
        VerdictKind::Valid => record.event_place.clone(),
        VerdictKind::Corrected => verdict.corrected_place.unwrap_or_else(|| record.event_place.clone()),
        VerdictKind::Rejected => {
            return Err(Rejection {
                reason: verdict.reason.unwrap_or(PlaceRejection::UnknownPlace),
            })
        }
    };
    let mut cleaned = record.clone();
    cleaned.county = county;
    cleaned.event_place = place;
    Ok(cleaned)
}

/// Adds every place seen in `records` under its standardized county.
pub fn observe_places<'a>(g: &Gazetteer, records: impl IntoIterator<Item = &'a IgiRecord>) -> Gazetteer {
    let mut next = g.clone();
    for r in records {
        if let Ok(county) = g.standardize_county(&r.county) {
            let _ = next.add_place(&county, &r.event_place);
        }
    }
    next
}

/// The four fields allowed to differ between near-duplicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DupField {
    FirstName,
    EventPlace,
    County,
    EventType,
}

impl DupField {
    pub fn code(self) -> &'static str {
        match self {
            DupField::FirstName => "first_name",
            DupField::EventPlace => "event_place",
            DupField::County => "county",
            DupField::EventType => "event_type",
        }
    }
}

fn compared_fields(r: &IgiRecord) -> [&str; 4] {
    [&r.first_name, &r.event_place, &r.county, r.event_type.as_str()]
}

const DUP_FIELDS: [DupField; 4] = [DupField::FirstName, DupField::EventPlace, DupField::County, DupField::EventType];

/// Fields among the four exempt ones that differ, if surname and date agree.
pub fn differing_fields(a: &IgiRecord, b: &IgiRecord) -> Option<Vec<DupField>> {
    if a.surname != b.surname || a.date_key() != b.date_key() {
        return None;
    }
    let (fa, fb) = (compared_fields(a), compared_fields(b));
    Some(
        DUP_FIELDS
            .iter()
            .zip(fa.iter().zip(fb.iter()))
            .filter(|(_, (x, y))| x != y)
            .map(|(f, _)| *f)
            .collect(),
    )
}

/// Surname and date equal, and at most one of first name, place, county and
/// event type different.
pub fn is_near_duplicate(a: &IgiRecord, b: &IgiRecord) -> bool {
    differing_fields(a, b).is_some_and(|d| d.len() <= 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Deletion {
    /// Position (or line number) of the deleted record.
    pub deleted: u64,
    /// The earliest retained record it duplicates.
    pub witness: u64,
    /// `None` for exact duplicates.
    pub differing_field: Option<DupField>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DedupOutcome {
    Retained,
    Deleted(Deletion),
}

#[derive(Default)]
struct Partition {
    retained: Vec<(u64, [String; 4])>,
    // hash of (left-out field, other three fields) -> retained positions
    index: HashMap<u64, Vec<u32>>,
}

fn leave_one_out(fields: &[&str; 4], skip: usize) -> u64 {
    let mut h = DefaultHasher::new();
    skip.hash(&mut h);
    for (i, f) in fields.iter().enumerate() {
        if i != skip {
            f.hash(&mut h);
        }
    }
    h.finish()
}

/// Streaming greedy first-wins deduplicator. A record is deleted iff it is a
/// near duplicate of an earlier retained record with the same surname and
/// date; the witness is the earliest such record.
#[derive(Default)]
pub struct Deduplicator {
    partitions: HashMap<DedupKey, Partition>,
}

impl Deduplicator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, id: u64, record: &IgiRecord) -> DedupOutcome {
        let part = self.partitions.entry(record.dedup_key()).or_default();
        let fields = compared_fields(record);
        let mut best: Option<u32> = None;
        for skip in 0..4 {
            let Some(candidates) = part.index.get(&leave_one_out(&fields, skip)) else {
                continue;
            };
            for &c in candidates {
                if best.is_some_and(|b| c >= b) {
                    break;
                }
                let other = &part.retained[c as usize].1;
                let agree = (0..4).filter(|&i| i != skip && other[i] == fields[i]).count();
                if agree == 3 {
                    best = Some(c);
                    break;
                }
            }
        }
        if let Some(w) = best {
            let (witness, other) = &part.retained[w as usize];
            let differing_field = (0..4).find(|&i| other[i] != fields[i]).map(|i| DUP_FIELDS[i]);
            return DedupOutcome::Deleted(Deletion {
                deleted: id,
                witness: *witness,
                differing_field,
            });
        }
        let pos = part.retained.len() as u32;
        for skip in 0..4 {
            part.index.entry(leave_one_out(&fields, skip)).or_default().push(pos);
        }
        part.retained.push((id, fields.map(str::to_string)));
        DedupOutcome::Retained
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DedupReport {
    /// Positions of retained records in input order.
    pub retained: Vec<u64>,
    /// Deletions ordered by deleted position.
    pub deletions: Vec<Deletion>,
}

impl DedupReport {
    /// Deletion log rows `deleted_line_no<TAB>witness_line_no<TAB>differing_field`,
    /// mapping positions through `line_of`.
    pub fn write_deletion_log<W: Write>(&self, mut out: W, line_of: impl Fn(u64) -> u64) -> io::Result<()> {
        for d in &self.deletions {
            let field = d.differing_field.map(DupField::code).unwrap_or("none");
            writeln!(out, "{}\t{}\t{}", line_of(d.deleted), line_of(d.witness), field)?;
        }
        Ok(())
    }
}

/// Single-pass deduplication; ids are the record positions in `records`.
pub fn deduplicate_stream<'a>(records: impl IntoIterator<Item = &'a IgiRecord>) -> DedupReport {
    let mut dedup = Deduplicator::new();
    let mut report = DedupReport::default();
    for (i, r) in records.into_iter().enumerate() {
        match dedup.push(i as u64, r) {
            DedupOutcome::Retained => report.retained.push(i as u64),
            DedupOutcome::Deleted(d) => report.deletions.push(d),
        }
    }
    report
}

pub fn shard_of(key: &DedupKey, shards: usize) -> usize {
    let mut h = DefaultHasher::new();
    key.hash(&mut h);
    (h.finish() % shards.max(1) as u64) as usize
}

/// Deduplicates with records sharded by [`DedupKey`] and shards processed in
/// parallel. The result equals [`deduplicate_stream`] for any shard count.
pub fn deduplicate_sharded(records: &[IgiRecord], shards: usize) -> DedupReport {
    let shards = shards.max(1);
    let mut buckets: Vec<Vec<u64>> = vec![Vec::new(); shards];
    for (i, r) in records.iter().enumerate() {
        buckets[shard_of(&r.dedup_key(), shards)].push(i as u64);
    }
    let partial: Vec<DedupReport> = buckets
        .into_par_iter()
        .map(|ids| {
            let mut dedup = Deduplicator::new();
            let mut report = DedupReport::default();
            for id in ids {
                match dedup.push(id, &records[id as usize]) {
                    DedupOutcome::Retained => report.retained.push(id),
                    DedupOutcome::Deleted(d) => report.deletions.push(d),
                }
            }
            report
        })
        .collect();
    let mut report = DedupReport::default();
    for p in partial {
        report.retained.extend(p.retained);
        report.deletions.extend(p.deletions);
    }
    report.retained.sort_unstable();
    report.deletions.sort_unstable_by_key(|d| d.deleted);
    report
}

/// Optional filters for [`IgiStore::query`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryFilter {
    pub county: Option<String>,
    pub century: Option<i32>,
    pub event_type: Option<EventType>,
}

impl QueryFilter {
    fn matches(&self, r: &IgiRecord) -> bool {
        self.county.as_ref().is_none_or(|c| *c == r.county)
            && self.century.is_none_or(|c| c == r.century())
            && self.event_type.is_none_or(|e| e == r.event_type)
    }
}

/// Append-only builder for an [`IgiStore`]. Records are spread over
/// partition files by surname; sealing sorts each partition by
/// (surname, date) and writes the surname index.
pub struct IgiStoreBuilder {
    dir: PathBuf,
    partitions: Vec<Vec<(String, String, u64, String)>>,
    appended: u64,
}

fn surname_partition(surname: &str, partitions: usize) -> usize {
    let mut h = DefaultHasher::new();
    surname.hash(&mut h);
    (h.finish() % partitions as u64) as usize
}

impl IgiStoreBuilder {
    pub fn new(dir: impl Into<PathBuf>, partitions: usize) -> Self {
        Self {
            dir: dir.into(),
            partitions: vec![Vec::new(); partitions.max(1)],
            appended: 0,
        }
    }

    pub fn append(&mut self, record: &IgiRecord) {
        let p = surname_partition(&record.surname, self.partitions.len());
        self.partitions[p].push((record.surname.clone(), record.date_key(), self.appended, record.to_line()));
        self.appended += 1;
    }

    pub fn seal(self) -> Result<IgiStore, IgiError> {
        fs::create_dir_all(&self.dir)?;
        let index_path = self.dir.join(INDEX_FILE);
        if index_path.exists() {
            fs::remove_file(&index_path)?;
        }
        let written: Vec<Vec<Span>> = self
            .partitions
            .into_par_iter()
            .enumerate()
            .map(|(p, mut rows)| -> Result<Vec<Span>, IgiError> {
                rows.sort_unstable_by(|a, b| (&a.0, &a.1, a.2).cmp(&(&b.0, &b.1, b.2)));
                let path = self.dir.join(part_name(p));
                let mut out = BufWriter::new(fs::File::create(&path)?);
                let mut spans: Vec<Span> = Vec::new();
                let mut offset = 0u64;
                for (surname, _, _, line) in &rows {
                    let len = line.len() as u64 + 1;
                    match spans.last_mut() {
                        Some(s) if s.surname == *surname => {
                            s.len += len;
                            s.count += 1;
                        }
                        _ => spans.push(Span {
                            surname: surname.clone(),
                            part: p,
                            offset,
                            len,
                            count: 1,
                        }),
                    }
                    out.write_all(line.as_bytes())?;
                    out.write_all(b"\n")?;
                    offset += len;
                }
                out.flush()?;
                Ok(spans)
            })
            .collect::<Result<_, _>>()?;
        let mut index: BTreeMap<String, Span> = BTreeMap::new();
        for span in written.into_iter().flatten() {
            index.insert(span.surname.clone(), span);
        }
        // The index is written last; its presence marks the store as sealed.
        let tmp = self.dir.join("index.tsv.tmp");
        {
            let mut out = BufWriter::new(fs::File::create(&tmp)?);
            for s in index.values() {
                writeln!(out, "{}\t{}\t{}\t{}\t{}", s.surname, s.part, s.offset, s.len, s.count)?;
            }
            out.flush()?;
        }
        fs::rename(&tmp, &index_path)?;
        Ok(IgiStore { dir: self.dir, index })
    }
}

fn part_name(p: usize) -> String {
    format!("part-{p:04}.psv")
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Span {
    surname: String,
    part: usize,
    offset: u64,
    len: u64,
    count: u64,
}

/// Sealed, read-only record store.
#[derive(Debug, Clone)]
pub struct IgiStore {
    dir: PathBuf,
    index: BTreeMap<String, Span>,
}

impl IgiStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, IgiError> {
        let dir = dir.into();
        let index_path = dir.join(INDEX_FILE);
        let file = match fs::File::open(&index_path) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(IgiError::StoreNotBuilt(dir)),
            Err(e) => return Err(e.into()),
        };
        let mut index = BTreeMap::new();
        for line in BufReader::new(file).lines() {
            let line = line?;
            let cols: Vec<&str> = line.split('\t').collect();
            let num = |i: usize| -> Result<u64, IgiError> {
                cols.get(i)
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| IgiError::CorruptStore(format!("bad index line {line:?}")))
            };
            if cols.len() != 5 {
                return Err(IgiError::CorruptStore(format!("bad index line {line:?}")));
            }
            let span = Span {
                surname: cols[0].to_string(),
                part: num(1)? as usize,
                offset: num(2)?,
                len: num(3)?,
                count: num(4)?,
            };
            index.insert(span.surname.clone(), span);
        }
        Ok(Self { dir, index })
    }

    pub fn surnames(&self) -> impl Iterator<Item = &str> {
        self.index.keys().map(String::as_str)
    }

    pub fn record_count(&self) -> u64 {
        self.index.values().map(|s| s.count).sum()
    }

    /// Records with exactly this surname passing `filter`, ordered by year,
    /// county and first name.
    pub fn query(&self, surname: &str, filter: &QueryFilter) -> Result<Vec<IgiRecord>, IgiError> {
        let Some(span) = self.index.get(surname) else {
            return Ok(Vec::new());
        };
        let mut file = fs::File::open(self.dir.join(part_name(span.part)))?;
        file.seek(SeekFrom::Start(span.offset))?;
        let mut buf = vec![0u8; span.len as usize];
        file.read_exact(&mut buf)?;
        let text = String::from_utf8(buf).map_err(|e| IgiError::CorruptStore(e.to_string()))?;
        let mut out = Vec::with_capacity(span.count as usize);
        for line in text.lines() {
            let r = parse_fields(line, |s| Ok(s.trim().to_string()))?;
            if filter.matches(&r) {
                out.push(r);
            }
        }
        out.sort_by(|a, b| (a.year, &a.county, &a.first_name).cmp(&(b.year, &b.county, &b.first_name)));
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const TABLE1: &str = "Bletsoe, Bedford, England|05 Sep 1629|Bletsoe, Bedford, England|Christening|1629|John|Darter|Principal's Father|Male";

    fn rules() -> NameRules {
        NameRules::default()
    }

    fn gaz() -> Gazetteer {
        let mut g = Gazetteer::builtin();
        g.add_place("Bedfordshire", "Bletsoe").unwrap();
        g.add_place("Middlesex", "London").unwrap();
        g
    }

    fn rec(first: &str, place: &str, county: &str, ev: EventType) -> IgiRecord {
        IgiRecord {
            batch: "C1".into(),
            event_date: Some(EventDate::parse("05 Sep 1629").unwrap()),
            event_place: place.into(),
            event_type: ev,
            year: 1629,
            first_name: first.into(),
            surname: "Darter".into(),
            role: "Principal".into(),
            gender: Gender::Male,
            county: county.into(),
            country: "England".into(),
        }
    }

    #[test]
    fn parses_reference_line() {
        let r = parse_igi_record(TABLE1, &rules()).unwrap();
        assert_eq!(r.event_place, "Bletsoe");
        assert_eq!(r.county, "Bedford");
        assert_eq!(r.country, "England");
        assert_eq!(r.event_type, EventType::Christening);
        assert_eq!(r.year, 1629);
        assert_eq!(r.first_name, "John");
        assert_eq!(r.surname, "Darter");
        assert_eq!(r.role, "Principal's Father");
        assert_eq!(r.gender, Gender::Male);
        assert_eq!(r.date_key(), "1629-09-05");
        let cleaned = clean_igi_record(&r, &gaz()).unwrap();
        assert_eq!(cleaned.county, "Bedfordshire");
        let again = parse_igi_record(&cleaned.to_line(), &rules()).unwrap();
        assert_eq!(again, cleaned);
    }

    #[test]
    fn parse_errors() {
        let eight = "a|05 Sep 1629|Bletsoe, Bedford, England|Christening|1629|John|Darter|Male";
        assert!(matches!(parse_igi_record(eight, &rules()), Err(IgiError::WrongFieldCount(8))));
        let burial = TABLE1.replace("Christening", "Burial");
        assert!(matches!(parse_igi_record(&burial, &rules()), Err(IgiError::UnknownEventType(_))));
        let year = TABLE1.replace("|1629|", "|16x9|");
        assert!(matches!(parse_igi_record(&year, &rules()), Err(IgiError::BadYear(_))));
        let early = TABLE1.replace("|1629|", "|1200|");
        assert!(matches!(parse_igi_record(&early, &rules()), Err(IgiError::YearOutOfRange(1200))));
        let place = TABLE1.replace("|Bletsoe, Bedford, England|Chr", "|Bletsoe|Chr");
        assert!(matches!(parse_igi_record(&place, &rules()), Err(IgiError::BadPlace(_))));
    }

    #[test]
    fn cleaning_rejections() {
        let g = gaz();
        let mut r = rec("John", "London", "Middlesex", EventType::Birth);
        r.country = "France".into();
        assert_eq!(clean_igi_record(&r, &g).unwrap_err().reason, PlaceRejection::GeographyMismatch);
        let r = rec("John", "Bletsoe", "Bedfordia", EventType::Birth);
        assert_eq!(clean_igi_record(&r, &g).unwrap_err().reason, PlaceRejection::UnknownCounty);
        let mut updates = crate::gazetteer::ReviewUpdates::default();
        updates.deletions.push(("Bedfordshire".into(), "Bletsoe".into()));
        let g2 = g.apply_review(&updates);
        let r = rec("John", "Bletsoe", "Beds", EventType::Birth);
        assert_eq!(clean_igi_record(&r, &g2).unwrap_err().reason, PlaceRejection::InvalidPlace);
    }

    #[test]
    fn near_duplicate_rule() {
        let a = rec("John", "Bletsoe", "Bedfordshire", EventType::Christening);
        assert!(is_near_duplicate(&a, &a));
        let mut b = a.clone();
        b.event_place = "Riseley".into();
        assert!(is_near_duplicate(&a, &b));
        assert!(is_near_duplicate(&b, &a));
        b.event_type = EventType::Birth;
        assert!(!is_near_duplicate(&a, &b));
        let mut c = a.clone();
        c.surname = "Dartor".into();
        assert!(!is_near_duplicate(&a, &c));
        let mut d = a.clone();
        d.role = "Groom".into();
        d.gender = Gender::Female;
        d.batch = "X".into();
        assert!(is_near_duplicate(&a, &d));
    }

    #[test]
    fn dedup_examples() {
        let a = rec("John", "Bletsoe", "Bedfordshire", EventType::Christening);
        let report = deduplicate_stream([&a, &a, &a]);
        assert_eq!(report.retained, vec![0]);
        assert_eq!(report.deletions.len(), 2);
        assert!(report.deletions.iter().all(|d| d.witness == 0 && d.differing_field.is_none()));

        // r2 duplicates r1; r3 duplicates r2 only.
        let r1 = rec("John", "Bletsoe", "Bedfordshire", EventType::Christening);
        let r2 = rec("John", "Riseley", "Bedfordshire", EventType::Christening);
        let r3 = rec("John", "Riseley", "Bedfordshire", EventType::Birth);
        let report = deduplicate_stream([&r1, &r2, &r3]);
        assert_eq!(report.retained, vec![0, 2]);
        assert_eq!(report.deletions[0].differing_field, Some(DupField::EventPlace));

        let mut other = a.clone();
        other.surname = "Smith".into();
        assert_eq!(deduplicate_stream([&a, &other]).retained, vec![0, 1]);
    }

    #[test]
    fn witness_is_earliest_retained() {
        let r0 = rec("John", "A", "Kent", EventType::Birth);
        let r1 = rec("Jon", "B", "Kent", EventType::Birth);
        let r2 = rec("Jon", "A", "Kent", EventType::Birth);
        let report = deduplicate_stream([&r0, &r1, &r2]);
        assert_eq!(report.retained, vec![0, 1]);
        assert_eq!(report.deletions[0].witness, 0);
    }

    #[test]
    fn store_build_and_query() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(IgiStore::open(dir.path()), Err(IgiError::StoreNotBuilt(_))));
        let mut b = IgiStoreBuilder::new(dir.path(), 3);
        let darter = clean_igi_record(&parse_igi_record(TABLE1, &rules()).unwrap(), &gaz()).unwrap();
        let mut later = darter.clone();
        later.year = 1705;
        later.event_date = None;
        later.first_name = "Anne".into();
        let mut smith = darter.clone();
        smith.surname = "Smith".into();
        b.append(&later);
        b.append(&darter);
        b.append(&smith);
        b.seal().unwrap();
        let store = IgiStore::open(dir.path()).unwrap();
        assert_eq!(store.record_count(), 3);
        let all = store.query("Darter", &QueryFilter::default()).unwrap();
        assert_eq!(all.iter().map(|r| r.year).collect::<Vec<_>>(), vec![1629, 1705]);
        let filter = QueryFilter {
            county: Some("Bedfordshire".into()),
            century: Some(17),
            event_type: None,
        };
        let hits = store.query("Darter", &filter).unwrap();
        assert_eq!(hits, vec![darter]);
        assert!(store.query("Nobody", &QueryFilter::default()).unwrap().is_empty());
    }
}
