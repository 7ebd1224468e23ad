//! Early-bearer selection and citation rendering.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

use crate::fiants::FiantRecord;
use crate::gazetteer::Gazetteer;
use crate::igi::{century_of, IgiRecord};
use crate::regnal::Monarch;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvidenceError {
    #[error("records mix surnames {0:?} and {1:?}")]
    MixedSurnames(String, String),
    #[error("markup character in {field}: {value:?}")]
    MalformedName { field: &'static str, value: String },
    #[error("no abbreviation for county {0:?}")]
    UnknownCounty(String),
    #[error("fiant {0} has no calendar year")]
    NoYear(u32),
    #[error("fiant {number} has no person {index}")]
    NoPerson { number: u32, index: usize },
    #[error("fiant {0} has no regnal date")]
    NoMonarch(u32),
    #[error("no source label for {0}")]
    NoLabel(Monarch),
    #[error("not a citation: {0:?}")]
    BadCitation(String),
    #[error("invalid policy: {0}")]
    BadPolicy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    EarliestDate,
    InputOrder,
}

impl FromStr for TieBreak {
    type Err = EvidenceError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "earliest-date" => Ok(TieBreak::EarliestDate),
            "input-order" => Ok(TieBreak::InputOrder),
            _ => Err(EvidenceError::BadPolicy(format!("unknown tie-break {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectionPolicy {
    pub per_century: usize,
    pub county_rank_depth: usize,
    pub tie_break: TieBreak,
    /// A county must hold this many of the surname's records in a century
    /// before it is considered there.
    pub min_county_records: usize,
}

impl Default for SelectionPolicy {
    fn default() -> Self {
        SelectionPolicy { per_century: 1, county_rank_depth: 1, tie_break: TieBreak::EarliestDate, min_county_records: 1 }
    }
}

impl SelectionPolicy {
    pub fn validate(&self) -> Result<(), EvidenceError> {
        if self.per_century == 0 || self.county_rank_depth == 0 || self.min_county_records == 0 {
            return Err(EvidenceError::BadPolicy("all counts must be at least 1".into()));
        }
        Ok(())
    }
}

fn check_one_surname<'a>(records: impl IntoIterator<Item = &'a IgiRecord>) -> Result<(), EvidenceError> {
    let mut first: Option<&str> = None;
    for r in records {
        match first {
            None => first = Some(&r.surname),
            Some(s) if s != r.surname => return Err(EvidenceError::MixedSurnames(s.into(), r.surname.clone())),
            _ => {}
        }
    }
    Ok(())
}

fn rank<'a>(records: impl IntoIterator<Item = &'a IgiRecord>) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records {
        *counts.entry(&r.county).or_default() += 1;
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().map(|(c, n)| (c.to_string(), n)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
}

/// Counties by descending record count, ties alphabetical.
pub fn rank_prominent_counties(records: &[IgiRecord]) -> Result<Vec<(String, usize)>, EvidenceError> {
    check_one_surname(records)?;
    Ok(rank(records))
}

/// Picks up to `per_century` records from each of the top counties of each
/// century. Counties are ranked within the century, so every century with
/// a qualifying county contributes. Output is in year order.
pub fn select_early_bearers(records: &[IgiRecord], policy: &SelectionPolicy) -> Vec<IgiRecord> {
    let mut by_century: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        by_century.entry(century_of(r.year)).or_default().push(i);
    }
    let mut chosen: Vec<usize> = Vec::new();
    for idx in by_century.values() {
        let ranked = rank(idx.iter().map(|&i| &records[i]));
        for (county, n) in ranked.into_iter().take(policy.county_rank_depth) {
            if n < policy.min_county_records {
                break;
            }
            let mut cands: Vec<usize> = idx.iter().copied().filter(|&i| records[i].county == county).collect();
            if policy.tie_break == TieBreak::EarliestDate {
                cands.sort_by(|&a, &b| records[a].date_key().cmp(&records[b].date_key()).then(a.cmp(&b)));
            }
            chosen.extend(cands.into_iter().take(policy.per_century));
        }
    }
    chosen.sort_by(|&a, &b| {
        let (ra, rb) = (&records[a], &records[b]);
        ra.year.cmp(&rb.year).then_with(|| ra.date_key().cmp(&rb.date_key())).then(a.cmp(&b))
    });
    chosen.into_iter().map(|i| records[i].clone()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SourceKind {
    Igi,
    Fiants,
}

impl SourceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::Igi => "IGI",
            SourceKind::Fiants => "Fiants",
        }
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EvidenceCitation {
    /// Text with exactly one `<sn>` and one `<src>` span.
    pub rendered: String,
    pub source_kind: SourceKind,
    pub year: i32,
    /// Record locator: the batch for IGI, the fiant number for Fiants.
    pub back_ref: String,
    pub surname: String,
}

/// Fields recovered from a rendered citation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CitationParts {
    pub first_name: String,
    pub surname: String,
    pub year: i32,
    pub source_label: String,
    pub number: Option<u32>,
    pub place: Option<String>,
    pub county: Option<String>,
}

static CITATION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^(?:([^<>&$()]*?) )?<sn>([^<>&$()]+)</sn>, (-?\d+) in <src>([^<>&$()]+)</src>(?: \$(\d+))?(?: \(([^<>&$()]*)\))?$",
    )
    .unwrap()
});

impl CitationParts {
    pub fn parse(rendered: &str) -> Result<Self, EvidenceError> {
        let bad = || EvidenceError::BadCitation(rendered.to_string());
        let c = CITATION.captures(rendered).ok_or_else(bad)?;
        let (place, county) = match c.get(6) {
            None => (None, None),
            Some(loc) => match loc.as_str().rsplit_once(", ") {
                Some((p, k)) => (Some(p.to_string()), Some(k.to_string())),
                None => (None, Some(loc.as_str().to_string())),
            },
        };
        Ok(CitationParts {
            first_name: c.get(1).map(|m| m.as_str().to_string()).unwrap_or_default(),
            surname: c[2].to_string(),
            year: c[3].parse().map_err(|_| bad())?,
            source_label: c[4].to_string(),
            number: c.get(5).map(|m| m.as_str().parse()).transpose().map_err(|_| bad())?,
            place,
            county,
        })
    }
}

impl EvidenceCitation {
    /// Rebuilds a citation from its rendered text. IGI batches are not part
    /// of the text, so `back_ref` is empty for IGI citations.
    pub fn parse(rendered: &str) -> Result<Self, EvidenceError> {
        let p = CitationParts::parse(rendered)?;
        let source_kind = if p.source_label == "IGI" { SourceKind::Igi } else { SourceKind::Fiants };
        Ok(EvidenceCitation {
            rendered: rendered.to_string(),
            source_kind,
            year: p.year,
            back_ref: p.number.map(|n| n.to_string()).unwrap_or_default(),
            surname: p.surname,
        })
    }
}

fn clean_field(field: &'static str, value: &str) -> Result<(), EvidenceError> {
    if value.contains(['<', '>', '&', '$', '(', ')']) {
        return Err(EvidenceError::MalformedName { field, value: value.to_string() });
    }
    Ok(())
}

fn render(first: &str, surname: &str, year: i32, label: &str, number: Option<u32>, loc: &[&str]) -> String {
    let mut s = String::new();
    if !first.is_empty() {
        s.push_str(first);
        s.push(' ');
    }
    s.push_str(&format!("<sn>{surname}</sn>, {year} in <src>{label}</src>"));
    if let Some(n) = number {
        s.push_str(&format!(" ${n}"));
    }
    let loc: Vec<&str> = loc.iter().copied().filter(|p| !p.is_empty()).collect();
    if !loc.is_empty() {
        s.push_str(&format!(" ({})", loc.join(", ")));
    }
    s
}

/// `{first} <sn>{surname}</sn>, {year} in <src>IGI</src> ({place}, {abbrev})`
pub fn format_igi_citation(r: &IgiRecord, g: &Gazetteer) -> Result<EvidenceCitation, EvidenceError> {
    clean_field("first name", &r.first_name)?;
    clean_field("surname", &r.surname)?;
    clean_field("place", &r.event_place)?;
    let abbrev = g.abbreviation(&r.county).ok_or_else(|| EvidenceError::UnknownCounty(r.county.clone()))?;
    Ok(EvidenceCitation {
        rendered: render(&r.first_name, &r.surname, r.year, "IGI", None, &[&r.event_place, abbrev]),
        source_kind: SourceKind::Igi,
        year: r.year,
        back_ref: r.batch.clone(),
        surname: r.surname.clone(),
    })
}

/// Source labels per monarch for fiant citations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiantLabels(pub BTreeMap<Monarch, String>);

impl Default for FiantLabels {
    fn default() -> Self {
        FiantLabels(
            [
                (Monarch::HenryVIII, "Fiants Hen VIII"),
                (Monarch::EdwardVI, "Fiants Edw VI"),
                (Monarch::MaryI, "Fiants Mary"),
                (Monarch::PhilipAndMary, "Fiants P and M"),
                (Monarch::ElizabethI, "Fiants Eliz"),
            ]
            .into_iter()
            .map(|(m, l)| (m, l.to_string()))
            .collect(),
        )
    }
}

/// `{first} <sn>{surname}</sn>, {year} in <src>{label}</src> ${number} ({place}, co. {county})`
pub fn format_fiant_citation(
    r: &FiantRecord,
    person: usize,
    labels: &FiantLabels,
) -> Result<EvidenceCitation, EvidenceError> {
    let p = r.persons.get(person).ok_or(EvidenceError::NoPerson { number: r.number, index: person })?;
    let year = r.gregorian_year.ok_or(EvidenceError::NoYear(r.number))?;
    let monarch = r.regnal.ok_or(EvidenceError::NoMonarch(r.number))?.monarch;
    let label = labels.0.get(&monarch).ok_or(EvidenceError::NoLabel(monarch))?;
    clean_field("first name", &p.first_name)?;
    clean_field("surname", &p.surname)?;
    clean_field("source label", label)?;
    let place = r.place.clone().unwrap_or_default();
    clean_field("place", &place)?;
    let county = r.county.as_ref().map(|c| format!("co. {c}")).unwrap_or_default();
    clean_field("county", &county)?;
    Ok(EvidenceCitation {
        rendered: render(&p.first_name, &p.surname, year, label, Some(r.number), &[&place, &county]),
        source_kind: SourceKind::Fiants,
        year,
        back_ref: r.number.to_string(),
        surname: p.surname.clone(),
    })
}

pub fn write_citations_tsv<W: Write>(mut out: W, cites: &[EvidenceCitation]) -> io::Result<()> {
    for c in cites {
        writeln!(out, "{}\t{}", c.surname, c.rendered)?;
    }
    Ok(())
}

pub fn read_citations_tsv<R: BufRead>(reader: R) -> Result<Vec<EvidenceCitation>, EvidenceError> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(|e| EvidenceError::BadCitation(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let (surname, rendered) = line.split_once('\t').ok_or_else(|| EvidenceError::BadCitation(line.clone()))?;
        let c = EvidenceCitation::parse(rendered)?;
        if c.surname != surname {
            return Err(EvidenceError::BadCitation(line.clone()));
        }
        out.push(c);
    }
    Ok(out)
}
