//! Seeded generators and brute-force oracles shared by the integration
//! tests and the acceptance runner.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::io::{self, Write};

use chrono::{Datelike, NaiveDate};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use surnames::dictionary::{DictionaryStore, Edit, EntryStatus, Sense};
use surnames::igi::{parse_igi_record, IgiRecord};
use surnames::names::NameRules;
use surnames::regnal::{Monarch, RegnalDate, ReignTable};

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixed_edit() -> Edit {
    let at = NaiveDate::from_ymd_opt(2013, 5, 6).unwrap().and_hms_opt(9, 30, 0).unwrap();
    Edit::new("tester", at)
}

// ---------------------------------------------------------------- records

const SURNAMES: &[&str] = &["DARTER", "SMITH", "MCDONALD", "O'BRIEN", "DOWDALL", "BARNEWALL", "KAY", "HANKS"];
const FIRST: &[&str] = &["John", "Jno", "Ann", "Mary", "Thomas", "Wm"];
const PLACES: &[(&str, &str)] = &[
    ("Bletsoe", "Bedford"),
    ("Sharnbrook", "Bedford"),
    ("Dover", "Kent"),
    ("Canterbury", "Kent"),
    ("Colchester", "Essex"),
    ("Exeter", "Devon"),
];
const EVENTS: &[&str] = &["Birth", "Christening", "Marriage", "Death"];
const MONTHS: &[&str] = &["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"];

/// Nine raw `|` fields of one record.
#[derive(Debug, Clone)]
pub struct RawRecord {
    pub batch: String,
    pub date: String,
    pub place: String,
    pub county: String,
    pub event: String,
    pub year: i32,
    pub first: String,
    pub surname: String,
    pub role: String,
    pub gender: String,
}

impl RawRecord {
    pub fn line(&self) -> String {
        format!(
            "{}|{}|{}, {}, England|{}|{}|{}|{}|{}|{}",
            self.batch, self.date, self.place, self.county, self.event, self.year, self.first, self.surname, self.role,
            self.gender
        )
    }
}

fn fresh_record(r: &mut ChaCha8Rng, year_span: i32, surnames: &[String]) -> RawRecord {
    let year = 1540 + r.gen_range(0..year_span);
    let date = match r.gen_range(0..3) {
        0 => String::new(),
        1 => format!("{year}"),
        _ => format!("{:02} {} {year}", r.gen_range(1..=28), MONTHS[r.gen_range(0..12)]),
    };
    let (place, county) = *PLACES.choose(r).unwrap();
    RawRecord {
        batch: format!("C{:05}", r.gen_range(0..500)),
        date,
        place: place.to_string(),
        county: county.to_string(),
        event: EVENTS.choose(r).unwrap().to_string(),
        year,
        first: FIRST.choose(r).unwrap().to_string(),
        surname: surnames.choose(r).unwrap().clone(),
        role: "Principal".to_string(),
        gender: if r.gen_bool(0.5) { "Male" } else { "Female" }.to_string(),
    }
}

/// Changes exactly one of the four fields that may differ between near
/// duplicates.
fn mutate_one(r: &mut ChaCha8Rng, rec: &mut RawRecord) {
    match r.gen_range(0..4) {
        0 => rec.first = FIRST.choose(r).unwrap().to_string(),
        1 => rec.place = PLACES.choose(r).unwrap().0.to_string(),
        2 => rec.county = PLACES.choose(r).unwrap().1.to_string(),
        _ => rec.event = EVENTS.choose(r).unwrap().to_string(),
    }
}

/// Raw corpus with injected exact and one-field-off copies of earlier
/// records, so chains of near duplicates are common.
pub fn raw_corpus(seed: u64, n: usize) -> Vec<RawRecord> {
    let mut r = rng(seed);
    let surnames: Vec<String> = SURNAMES.iter().map(|s| s.to_string()).collect();
    let span = r.gen_range(3..40);
    let mut out: Vec<RawRecord> = Vec::with_capacity(n);
    while out.len() < n {
        let roll: f64 = r.gen();
        let rec = if out.is_empty() || roll < 0.45 {
            fresh_record(&mut r, span, &surnames)
        } else if roll < 0.65 {
            out[r.gen_range(0..out.len())].clone()
        } else {
            let mut c = out[r.gen_range(0..out.len())].clone();
            mutate_one(&mut r, &mut c);
            if r.gen_bool(0.2) {
                mutate_one(&mut r, &mut c);
            }
            c
        };
        out.push(rec);
    }
    out
}

pub fn corpus(seed: u64, n: usize) -> Vec<IgiRecord> {
    let rules = NameRules::default();
    raw_corpus(seed, n)
        .iter()
        .map(|raw| parse_igi_record(&raw.line(), &rules).expect("generated record parses"))
        .collect()
}

/// Streams `n` raw lines to `out` with a wide surname pool, for throughput
/// runs. About one line in twenty is a duplicate of a recent one.
pub fn write_large_corpus<W: Write>(out: &mut W, seed: u64, n: usize) -> io::Result<()> {
    let mut r = rng(seed);
    let stems = ["ART", "BELL", "COT", "DON", "ELL", "FORD", "GILL", "HAM", "ING", "KER", "LOW", "MER"];
    let surnames: Vec<String> = (0..5000)
        .map(|i| {
            let a = stems[i % stems.len()];
            let b = stems[(i / stems.len()) % stems.len()];
            let c = (b'A' + (i / (stems.len() * stems.len())) as u8 % 26) as char;
            format!("{a}{c}{b}")
        })
        .collect();
    let mut recent: Vec<RawRecord> = Vec::new();
    for i in 0..n {
        let rec = if !recent.is_empty() && r.gen_bool(0.05) {
            let mut c = recent[r.gen_range(0..recent.len())].clone();
            if r.gen_bool(0.5) {
                mutate_one(&mut r, &mut c);
            }
            c
        } else {
            fresh_record(&mut r, 300, &surnames)
        };
        writeln!(out, "{}", rec.line())?;
        if recent.len() < 64 {
            recent.push(rec);
        } else {
            recent[i % 64] = rec;
        }
    }
    Ok(())
}

// ------------------------------------------------------------- dedup oracle

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleDeletion {
    pub deleted: u64,
    pub witness: u64,
    pub field: Option<&'static str>,
}

fn oracle_date(r: &IgiRecord) -> (i32, Option<u8>, Option<u8>) {
    match &r.event_date {
        Some(d) => (d.year, d.month, d.day),
        None => (r.year, None, None),
    }
}

fn oracle_differences(a: &IgiRecord, b: &IgiRecord) -> Vec<&'static str> {
    let mut d = Vec::new();
    if a.first_name != b.first_name {
        d.push("first_name");
    }
    if a.event_place != b.event_place {
        d.push("event_place");
    }
    if a.county != b.county {
        d.push("county");
    }
    if a.event_type != b.event_type {
        d.push("event_type");
    }
    d
}

/// Quadratic greedy first-wins: each record is compared with every earlier
/// retained record; the earliest near duplicate is its witness.
pub fn oracle_dedup(records: &[IgiRecord]) -> (Vec<u64>, Vec<OracleDeletion>) {
    let mut retained: Vec<usize> = Vec::new();
    let mut deletions = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let witness = retained.iter().copied().find(|&j| {
            let o = &records[j];
            o.surname == r.surname && oracle_date(o) == oracle_date(r) && oracle_differences(o, r).len() <= 1
        });
        match witness {
            Some(j) => deletions.push(OracleDeletion {
                deleted: i as u64,
                witness: j as u64,
                field: oracle_differences(&records[j], r).first().copied(),
            }),
            None => retained.push(i),
        }
    }
    (retained.into_iter().map(|i| i as u64).collect(), deletions)
}

// ------------------------------------------------------------ regnal oracle

fn naive(d: surnames::regnal::HistoricDate) -> NaiveDate {
    NaiveDate::from_ymd_opt(d.year, d.month as u32, d.day as u32).unwrap()
}

/// Walks the reign one day at a time, counting anniversaries of the
/// accession. The proleptic Gregorian calendar of chrono agrees with the
/// Julian leap rule for every year from 1501 to 1699.
pub fn oracle_regnal_year(table: &ReignTable, d: &RegnalDate) -> Option<i32> {
    let reign = table.reigns().iter().find(|r| r.monarch == d.monarch)?;
    if !reign.supported || d.regnal_year == 0 {
        return None;
    }
    let acc = naive(reign.accession);
    let end = naive(reign.end);
    assert!(!(acc.month() == 2 && acc.day() == 29), "oracle assumes no leap-day accession");
    let mut n = 1u32;
    let mut day = acc;
    let mut per_year: BTreeMap<i32, u32> = BTreeMap::new();
    loop {
        if day != acc && day.month() == acc.month() && day.day() == acc.day() {
            n += 1;
            if n > d.regnal_year {
                break;
            }
            if day >= end {
                return None;
            }
        }
        if n == d.regnal_year {
            if let Some((dd, mm)) = d.day_month {
                if day.day() == dd as u32 && day.month() == mm as u32 {
                    return Some(day.year());
                }
            }
            *per_year.entry(day.year()).or_default() += 1;
        }
        day = day.succ_opt().unwrap();
    }
    if d.day_month.is_some() {
        return None;
    }
    // Most days wins; on a tie the later calendar year.
    per_year.iter().max_by_key(|(y, c)| (**c, **y)).map(|(y, _)| *y)
}

pub fn random_regnal_date(r: &mut ChaCha8Rng) -> RegnalDate {
    let monarch = *[Monarch::HenryVIII, Monarch::EdwardVI, Monarch::MaryI, Monarch::ElizabethI].choose(r).unwrap();
    let lengths = [(Monarch::HenryVIII, 38), (Monarch::EdwardVI, 7), (Monarch::MaryI, 6), (Monarch::ElizabethI, 45)];
    let max = lengths.iter().find(|(m, _)| *m == monarch).unwrap().1;
    let regnal_year = r.gen_range(1..=max + 1);
    let day_month = if r.gen_bool(0.75) { Some((r.gen_range(1..=31), r.gen_range(1..=12))) } else { None };
    RegnalDate { monarch, regnal_year, day_month }
}

// ------------------------------------------------------ frequency entries

const STEMS: &[&str] = &["DONALD", "BRIEN", "NEIL", "LEAN", "KAY", "GRATH"];
const PREFIXES: &[&str] = &["MC", "MAC", "M'", "O'", "O`", "O\u{2019}", ""];
const PLAIN: &[&str] = &["SMITH", "JONES", "DARTER", "DOWDALL", "MACH", "MACKAREL"];
const FEMININE: &[&str] = &["KOWALSKI", "KOWALSKA", "NOVAK", "NOVAKOVA", "NOWAK", "NOWAKOWA"];

/// A raw `NAME<TAB>count` list that mixes prefix variants, feminine forms,
/// lexicon exceptions, repeated names and a few bad rows.
pub fn raw_frequency_list(r: &mut ChaCha8Rng) -> String {
    let n = r.gen_range(1..40);
    let mut s = String::new();
    for _ in 0..n {
        let name = match r.gen_range(0..10) {
            0..=4 => format!("{}{}", PREFIXES.choose(r).unwrap(), STEMS.choose(r).unwrap()),
            5..=6 => PLAIN.choose(r).unwrap().to_string(),
            7..=8 => FEMININE.choose(r).unwrap().to_string(),
            _ => ["BAD 1", "", "X<Y"].choose(r).unwrap().to_string(),
        };
        let count = if r.gen_bool(0.05) { "lots".to_string() } else { r.gen_range(1..60u64).to_string() };
        s.push_str(&format!("{name}\t{count}\n"));
    }
    s
}

// ------------------------------------------------------ dictionary clusters

fn headword(i: usize) -> String {
    let mut s = String::from("Ab");
    let mut k = i;
    loop {
        s.push((b'a' + (k % 26) as u8) as char);
        k /= 26;
        if k == 0 {
            break;
        }
    }
    s
}

/// A store of `clusters` clusters, each a main entry with up to four
/// variants, senses scattered over members and some mains finished.
pub fn synthetic_store(r: &mut ChaCha8Rng, clusters: usize) -> (DictionaryStore, Vec<Vec<String>>) {
    let ed = fixed_edit();
    let mut store = DictionaryStore::new();
    let mut groups = Vec::new();
    let mut next = 0;
    for _ in 0..clusters {
        let size = r.gen_range(1..=5);
        let members: Vec<String> = (0..size).map(|k| headword(next + k)).collect();
        next += size;
        store.add_main(&members[0], &ed).unwrap();
        for v in &members[1..] {
            store.add_variant(v, &members[0], &ed).unwrap();
        }
        for m in &members {
            for s in 0..r.gen_range(0..3) {
                let lang = ["English", "Irish", "Welsh", "Scottish"].choose(r).unwrap();
                store.add_sense(m, Sense::new(lang).with_explanation(&format!("sense {s} of {m}")), &ed).unwrap();
            }
        }
        if store.entry(&members[0]).is_some_and(|e| !e.senses.is_empty()) && r.gen_bool(0.5) {
            store.set_status(&members[0], EntryStatus::Finished, &ed).unwrap();
        }
        groups.push(members);
    }
    (store, groups)
}

/// Applies `ops` random set_main_name / move_sense calls within clusters.
pub fn random_edits(r: &mut ChaCha8Rng, store: &mut DictionaryStore, groups: &[Vec<String>], ops: usize) {
    let ed = fixed_edit();
    for _ in 0..ops {
        let g = groups.choose(r).unwrap();
        let a = g.choose(r).unwrap();
        let b = g.choose(r).unwrap();
        if r.gen_bool(0.4) {
            store.set_main_name(a, b, &ed).unwrap();
        } else {
            let n = store.entry(a).unwrap().senses.len();
            if n > 0 {
                store.move_sense(a, b, r.gen_range(0..n), &ed).unwrap();
            }
        }
    }
}
