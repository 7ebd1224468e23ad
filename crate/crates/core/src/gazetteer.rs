//! County standardization, place validation and the volunteer review cycle.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

const BUILTIN_COUNTIES: &str = include_str!("../data/counties.tsv");

#[derive(Debug, Error)]
pub enum GazetteerError {
    #[error("unresolved county {0:?}")]
    UnresolvedCounty(String),
    #[error("alias {alias:?} maps to both {first:?} and {second:?}")]
    ConflictingAlias { alias: String, first: String, second: String },
    #[error("{0:?} is not a canonical county")]
    NotCanonical(String),
    #[error("review file {0:?} does not name a known county")]
    UnknownCountyFile(PathBuf),
    #[error("{file}:{line}: {reason}")]
    Malformed { file: String, line: usize, reason: String },
    #[error("io error on {path:?}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> GazetteerError + '_ {
    move |source| GazetteerError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VerdictKind {
    Valid,
    Corrected,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlaceRejection {
    UnknownCounty,
    GeographyMismatch,
    /// The place was deleted during volunteer review.
    InvalidPlace,
    UnknownPlace,
}

impl PlaceRejection {
    pub fn code(self) -> &'static str {
        match self {
            PlaceRejection::UnknownCounty => "unresolved-county",
            PlaceRejection::GeographyMismatch => "geography-mismatch",
            PlaceRejection::InvalidPlace => "invalid-place",
            PlaceRejection::UnknownPlace => "unknown-place",
        }
    }
}

impl fmt::Display for PlaceRejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaceVerdict {
    pub kind: VerdictKind,
    pub corrected_place: Option<String>,
    pub reason: Option<PlaceRejection>,
}

impl PlaceVerdict {
    fn valid() -> Self {
        Self {
            kind: VerdictKind::Valid,
            corrected_place: None,
            reason: None,
        }
    }

    fn corrected(place: &str) -> Self {
        Self {
            kind: VerdictKind::Corrected,
            corrected_place: Some(place.to_string()),
            reason: None,
        }
    }

    fn rejected(reason: PlaceRejection) -> Self {
        Self {
            kind: VerdictKind::Rejected,
            corrected_place: None,
            reason: Some(reason),
        }
    }
}

/// Authority list of counties, their citation abbreviations, countries and
/// the place names belonging to each.
///
/// Updates never mutate in place; [`Gazetteer::apply_review`] returns a new
/// version.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Gazetteer {
    aliases: BTreeMap<String, String>,
    abbreviations: BTreeMap<String, String>,
    countries: BTreeMap<String, String>,
    places: BTreeMap<String, BTreeSet<String>>,
    corrections: BTreeMap<String, BTreeMap<String, String>>,
    deleted: BTreeMap<String, BTreeSet<String>>,
    reviewed: BTreeSet<String>,
}

fn alias_key(raw: &str) -> String {
    raw.trim()
        .trim_end_matches('.')
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

impl Gazetteer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Historic counties of England, Wales, Scotland and Ireland with short
    /// citation forms. No places are listed.
    pub fn builtin() -> Self {
        let mut g = Self::new();
        for line in BUILTIN_COUNTIES.lines() {
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            g.add_county(cols[0], cols[1], cols[2]).expect("builtin county");
            for alias in cols[3].split(',').filter(|a| !a.trim().is_empty()) {
                g.add_alias(alias, cols[0]).expect("builtin alias");
            }
        }
        g
    }

    pub fn add_county(&mut self, canonical: &str, abbreviation: &str, country: &str) -> Result<(), GazetteerError> {
        self.add_alias_unchecked(canonical, canonical)?;
        self.abbreviations.insert(canonical.to_string(), abbreviation.to_string());
        self.countries.insert(canonical.to_string(), country.to_string());
        self.places.entry(canonical.to_string()).or_default();
        Ok(())
    }

    pub fn add_alias(&mut self, alias: &str, canonical: &str) -> Result<(), GazetteerError> {
        if !self.countries.contains_key(canonical) {
            return Err(GazetteerError::NotCanonical(canonical.to_string()));
        }
        self.add_alias_unchecked(alias, canonical)
    }

    fn add_alias_unchecked(&mut self, alias: &str, canonical: &str) -> Result<(), GazetteerError> {
        let key = alias_key(alias);
        match self.aliases.get(&key) {
            Some(existing) if existing != canonical => Err(GazetteerError::ConflictingAlias {
                alias: alias.to_string(),
                first: existing.clone(),
                second: canonical.to_string(),
            }),
            _ => {
                self.aliases.insert(key, canonical.to_string());
                Ok(())
            }
        }
    }

    pub fn add_place(&mut self, county: &str, place: &str) -> Result<(), GazetteerError> {
        let set = self
            .places
            .get_mut(county)
            .ok_or_else(|| GazetteerError::NotCanonical(county.to_string()))?;
        set.insert(place.trim().to_string());
        Ok(())
    }

    pub fn add_correction(&mut self, county: &str, wrong: &str, right: &str) -> Result<(), GazetteerError> {
        if !self.countries.contains_key(county) {
            return Err(GazetteerError::NotCanonical(county.to_string()));
        }
        self.corrections
            .entry(county.to_string())
            .or_default()
            .insert(wrong.to_string(), right.to_string());
        Ok(())
    }

    pub fn mark_reviewed(&mut self, county: &str) {
        self.reviewed.insert(county.to_string());
    }

    pub fn counties(&self) -> impl Iterator<Item = &str> {
        self.countries.keys().map(String::as_str)
    }

    pub fn abbreviation(&self, county: &str) -> Option<&str> {
        self.abbreviations.get(county).map(String::as_str)
    }

    pub fn country(&self, county: &str) -> Option<&str> {
        self.countries.get(county).map(String::as_str)
    }

    pub fn places(&self, county: &str) -> Option<&BTreeSet<String>> {
        self.places.get(county)
    }

    /// Counties listing `place`, in name order.
    pub fn counties_with_place(&self, place: &str) -> Vec<&str> {
        self.places
            .iter()
            .filter(|(_, set)| set.contains(place))
            .map(|(c, _)| c.as_str())
            .collect()
    }

    /// Case-insensitive alias lookup ignoring trailing periods and a leading
    /// `county`/`co.`.
    pub fn standardize_county(&self, raw: &str) -> Result<String, GazetteerError> {
        let key = alias_key(raw);
        if let Some(c) = self.aliases.get(&key) {
            return Ok(c.clone());
        }
        for prefix in ["county ", "co. ", "co "] {
            if let Some(rest) = key.strip_prefix(prefix) {
                if let Some(c) = self.aliases.get(rest.trim()) {
                    return Ok(c.clone());
                }
            }
        }
        Err(GazetteerError::UnresolvedCounty(raw.to_string()))
    }

    /// Checks that `place` belongs to `county` and that the county lies in `country`.
    pub fn validate_place(&self, place: &str, county: &str, country: &str) -> PlaceVerdict {
        let Some(expected) = self.countries.get(county) else {
            return PlaceVerdict::rejected(PlaceRejection::UnknownCounty);
        };
        if !expected.eq_ignore_ascii_case(country.trim()) {
            return PlaceVerdict::rejected(PlaceRejection::GeographyMismatch);
        }
        let place = place.trim();
        if self.deleted.get(county).is_some_and(|d| d.contains(place)) {
            return PlaceVerdict::rejected(PlaceRejection::InvalidPlace);
        }
        if let Some(right) = self.corrections.get(county).and_then(|c| c.get(place)) {
            return PlaceVerdict::corrected(right);
        }
        if self.places.get(county).is_some_and(|p| p.contains(place)) {
            PlaceVerdict::valid()
        } else {
            PlaceVerdict::rejected(PlaceRejection::UnknownPlace)
        }
    }

    /// Checks the structural invariants; returns a description of each violation.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut problems = Vec::new();
        for county in self.abbreviations.keys() {
            if !self.countries.contains_key(county) {
                problems.push(format!("abbreviation for non-canonical county {county:?}"));
            }
        }
        for county in self.countries.keys() {
            if self.aliases.get(&alias_key(county)) != Some(county) {
                problems.push(format!("missing identity alias for {county:?}"));
            }
        }
        for county in &self.reviewed {
            if self.places.get(county).is_none_or(|p| p.is_empty()) {
                problems.push(format!("reviewed county {county:?} has no places"));
            }
        }
        problems
    }

    fn review_file_name(county: &str) -> String {
        format!("{}.tsv", county.replace(' ', "_"))
    }

    fn county_for_file(&self, path: &Path) -> Option<String> {
        let name = path.file_name()?.to_str()?;
        self.countries
            .keys()
            .find(|c| Self::review_file_name(c) == name)
            .cloned()
    }

    /// Writes one sorted place list per county into `out_dir`. Counties with
    /// no places get an empty file.
    pub fn emit_review_lists(&self, out_dir: &Path) -> Result<Vec<PathBuf>, GazetteerError> {
        fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
        let mut written = Vec::new();
        for county in self.countries.keys() {
            let path = out_dir.join(Self::review_file_name(county));
            let mut body = String::new();
            for place in self.places.get(county).into_iter().flatten() {
                body.push_str(place);
                body.push('\n');
            }
            fs::write(&path, body).map_err(io_err(&path))?;
            written.push(path);
        }
        Ok(written)
    }

    /// Parses returned review files (`place<TAB>OK|FIX|NO<TAB>replacement?`).
    /// Malformed lines are collected rather than failing the batch.
    pub fn ingest_review_results(&self, files: &[PathBuf]) -> Result<ReviewIngest, GazetteerError> {
        let mut ingest = ReviewIngest::default();
        for path in files {
            let county = self
                .county_for_file(path)
                .ok_or_else(|| GazetteerError::UnknownCountyFile(path.clone()))?;
            let file = fs::File::open(path).map_err(io_err(path))?;
            for (idx, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(io_err(path))?;
                if line.trim().is_empty() {
                    continue;
                }
                let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
                let malformed = |reason: &str| MalformedLine {
                    file: path.clone(),
                    line: idx + 1,
                    text: line.clone(),
                    reason: reason.to_string(),
                };
                match cols.as_slice() {
                    [place, "OK"] if !place.is_empty() => {
                        ingest.updates.confirmations.push((county.clone(), place.to_string()));
                    }
                    [place, "NO"] if !place.is_empty() => {
                        ingest.updates.deletions.push((county.clone(), place.to_string()));
                    }
                    [place, "FIX", right] if !place.is_empty() && !right.is_empty() => {
                        ingest
                            .updates
                            .corrections
                            .push((county.clone(), place.to_string(), right.to_string()));
                    }
                    [_, "FIX"] | [_, "FIX", ""] => ingest.malformed.push(malformed("FIX without replacement")),
                    [_] => ingest.malformed.push(malformed("missing verdict")),
                    _ => ingest.malformed.push(malformed("unrecognized verdict")),
                }
            }
        }
        Ok(ingest)
    }

    /// Builds a new gazetteer version with the review updates applied.
    pub fn apply_review(&self, updates: &ReviewUpdates) -> Gazetteer {
        let mut next = self.clone();
        for (county, place) in &updates.confirmations {
            next.places.entry(county.clone()).or_default().insert(place.clone());
            if let Some(d) = next.deleted.get_mut(county) {
                d.remove(place);
            }
        }
        for (county, wrong, right) in &updates.corrections {
            let places = next.places.entry(county.clone()).or_default();
            places.remove(wrong);
            places.insert(right.clone());
            next.corrections
                .entry(county.clone())
                .or_default()
                .insert(wrong.clone(), right.clone());
            if let Some(d) = next.deleted.get_mut(county) {
                d.remove(right);
            }
        }
        for (county, place) in &updates.deletions {
            if let Some(p) = next.places.get_mut(county) {
                p.remove(place);
            }
            next.deleted.entry(county.clone()).or_default().insert(place.clone());
        }
        next.deleted.retain(|_, d| !d.is_empty());
        next
    }

    /// Persists the gazetteer as a directory of TSV files.
    pub fn save(&self, dir: &Path) -> Result<(), GazetteerError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let write = |name: &str, body: String| -> Result<(), GazetteerError> {
            let path = dir.join(name);
            fs::write(&path, body).map_err(io_err(&path))
        };
        let mut aliases = String::new();
        for (a, c) in &self.aliases {
            aliases.push_str(&format!("{a}\t{c}\n"));
        }
        write("aliases.tsv", aliases)?;
        let mut counties = String::new();
        for (c, country) in &self.countries {
            let abbrev = self.abbreviations.get(c).map(String::as_str).unwrap_or("");
            counties.push_str(&format!("{c}\t{abbrev}\t{country}\n"));
        }
        write("counties.tsv", counties)?;
        let mut places = String::new();
        for (c, set) in &self.places {
            for p in set {
                places.push_str(&format!("{c}\t{p}\n"));
            }
        }
        write("places.tsv", places)?;
        let mut corrections = String::new();
        for (c, map) in &self.corrections {
            for (w, r) in map {
                corrections.push_str(&format!("{c}\t{w}\t{r}\n"));
            }
        }
        write("corrections.tsv", corrections)?;
        let mut deleted = String::new();
        for (c, set) in &self.deleted {
            for p in set {
                deleted.push_str(&format!("{c}\t{p}\n"));
            }
        }
        write("deletions.tsv", deleted)?;
        let reviewed: String = self.reviewed.iter().map(|c| format!("{c}\n")).collect();
        write("reviewed.tsv", reviewed)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, GazetteerError> {
        let read_rows = |name: &str, cols: usize, required: bool| -> Result<Vec<Vec<String>>, GazetteerError> {
            let path = dir.join(name);
            let text = match fs::read_to_string(&path) {
                Ok(t) => t,
                Err(e) if e.kind() == io::ErrorKind::NotFound && !required => return Ok(Vec::new()),
                Err(e) => return Err(io_err(&path)(e)),
            };
            let mut rows = Vec::new();
            for (idx, line) in text.lines().enumerate() {
                if line.trim().is_empty() || line.starts_with('#') {
                    continue;
                }
                let row: Vec<String> = line.split('\t').map(|s| s.to_string()).collect();
                if row.len() != cols {
                    return Err(GazetteerError::Malformed {
                        file: name.to_string(),
                        line: idx + 1,
                        reason: format!("expected {cols} columns"),
                    });
                }
                rows.push(row);
            }
            Ok(rows)
        };
        let mut g = Self::new();
        for row in read_rows("counties.tsv", 3, true)? {
            g.add_county(&row[0], &row[1], &row[2])?;
        }
        for row in read_rows("aliases.tsv", 2, false)? {
            g.add_alias(&row[0], &row[1])?;
        }
        for row in read_rows("places.tsv", 2, false)? {
            g.add_place(&row[0], &row[1])?;
        }
        for row in read_rows("corrections.tsv", 3, false)? {
            g.add_correction(&row[0], &row[1], &row[2])?;
        }
        for row in read_rows("deletions.tsv", 2, false)? {
            g.deleted.entry(row[0].clone()).or_default().insert(row[1].clone());
        }
        for row in read_rows("reviewed.tsv", 1, false)? {
            g.reviewed.insert(row[0].clone());
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReviewUpdates {
    pub confirmations: Vec<(String, String)>,
    /// `(county, wrong, right)`
    pub corrections: Vec<(String, String, String)>,
    pub deletions: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MalformedLine {
    pub file: PathBuf,
    pub line: usize,
    pub text: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct ReviewIngest {
    pub updates: ReviewUpdates,
    pub malformed: Vec<MalformedLine>,
}

impl ReviewIngest {
    pub fn write_malformed<W: Write>(&self, mut out: W) -> io::Result<()> {
        for m in &self.malformed {
            writeln!(out, "{}\t{}\t{}\t{}", m.file.display(), m.line, m.reason, m.text)?;
        }
        Ok(())
    }
}
