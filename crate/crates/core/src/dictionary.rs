//! Cluster-structured dictionary entries, editing operations, reports and
//! the publisher export.
//!
//! A cluster is a main entry plus the variant entries pointing at it, so
//! clusters are derived from `variant_of` links and cannot drift out of
//! sync with the entries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io;
use std::path::Path;
use std::str::FromStr;

use chrono::{NaiveDate, NaiveDateTime};
use thiserror::Error;

use crate::evidence::{CitationParts, EvidenceCitation};
use crate::freqlist::{FrequencyTable, Region, SourceDescriptor, SourceRole};
use crate::manifest::sha256_hex;
use crate::xml::{attr, escape_text};

pub const TIME_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";
pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum DictError {
    #[error("unknown headword {0:?}")]
    UnknownHeadword(String),
    #[error("headword {0:?} already exists")]
    DuplicateHeadword(String),
    #[error("invalid headword {0:?}")]
    InvalidHeadword(String),
    #[error("{0:?} is not a main entry")]
    NotMain(String),
    #[error("{member:?} is not in the cluster of {main:?}")]
    NotInCluster { main: String, member: String },
    #[error("{from:?} and {to:?} are in different clusters")]
    CrossCluster { from: String, to: String },
    #[error("{headword:?} has no sense {index}")]
    BadSenseIndex { headword: String, index: usize },
    #[error("sense origin language must not be empty")]
    EmptyLanguage,
    #[error("a finished main entry needs at least one sense ({0:?})")]
    IncompleteEntry(String),
    #[error("{headword:?} already has statistics from {source_id:?}")]
    DuplicateSource { headword: String, source_id: String },
    #[error("citation for {surname:?} does not belong to the cluster of {headword:?}")]
    SurnameMismatch { headword: String, surname: String },
    #[error("malformed range {0:?}")]
    BadRange(String),
    #[error("window starts {0} after it ends {1}")]
    InvertedWindow(NaiveDate, NaiveDate),
    #[error("unknown status {0:?}")]
    UnknownStatus(String),
    #[error("unreadable document: {0}")]
    Unreadable(String),
    #[error("corrupt store: {0}")]
    Corrupt(String),
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntryKind {
    Main,
    Variant,
}

impl EntryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntryKind::Main => "main",
            EntryKind::Variant => "variant",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntryStatus {
    Unedited,
    InProgress,
    Finished,
    Blocked,
}

impl EntryStatus {
    pub const ALL: [EntryStatus; 4] =
        [EntryStatus::Unedited, EntryStatus::InProgress, EntryStatus::Finished, EntryStatus::Blocked];

    pub fn as_str(self) -> &'static str {
        match self {
            EntryStatus::Unedited => "unedited",
            EntryStatus::InProgress => "in-progress",
            EntryStatus::Finished => "finished",
            EntryStatus::Blocked => "blocked",
        }
    }
}

impl fmt::Display for EntryStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntryStatus {
    type Err = DictError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntryStatus::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| DictError::UnknownStatus(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comment {
    pub author: String,
    pub at: NaiveDateTime,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditEvent {
    pub editor: String,
    pub at: NaiveDateTime,
    pub action: String,
}

/// Who is making a change and when.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edit {
    pub editor: String,
    pub at: NaiveDateTime,
}

impl Edit {
    pub fn new(editor: &str, at: NaiveDateTime) -> Self {
        Edit { editor: editor.to_string(), at }
    }

    fn event(&self, action: &str) -> EditEvent {
        EditEvent { editor: self.editor.clone(), at: self.at, action: action.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sense {
    pub origin_language: String,
    pub explanations: Vec<String>,
    pub early_bearers: Vec<EvidenceCitation>,
    pub references: Vec<String>,
}

impl Sense {
    pub fn new(origin_language: &str) -> Self {
        Sense {
            origin_language: origin_language.to_string(),
            explanations: Vec::new(),
            early_bearers: Vec::new(),
            references: Vec::new(),
        }
    }

    pub fn with_explanation(mut self, text: &str) -> Self {
        self.explanations.push(text.to_string());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencySnapshot {
    pub source: SourceDescriptor,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DictionaryEntry {
    pub headword: String,
    pub kind: EntryKind,
    pub variant_of: Option<String>,
    pub senses: Vec<Sense>,
    pub statistics: Vec<FrequencySnapshot>,
    pub main_location: Option<String>,
    pub status: EntryStatus,
    pub comments: Vec<Comment>,
    pub edit_log: Vec<EditEvent>,
}

impl DictionaryEntry {
    fn new(headword: &str, variant_of: Option<&str>) -> Self {
        DictionaryEntry {
            headword: headword.to_string(),
            kind: if variant_of.is_some() { EntryKind::Variant } else { EntryKind::Main },
            variant_of: variant_of.map(str::to_string),
            senses: Vec::new(),
            statistics: Vec::new(),
            main_location: None,
            status: EntryStatus::Unedited,
            comments: Vec::new(),
            edit_log: Vec::new(),
        }
    }

    /// A finished main entry that lost its last sense goes back to editing.
    fn reopen_if_incomplete(&mut self) {
        if self.kind == EntryKind::Main && self.status == EntryStatus::Finished && self.senses.is_empty() {
            self.status = EntryStatus::InProgress;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub main: String,
    pub members: BTreeSet<String>,
}

/// Sort key: case-insensitive with apostrophes ignored, so O'Brian sits
/// next to Obrian. The headword itself breaks ties.
pub fn collation_key(headword: &str) -> (String, String) {
    let key = headword
        .chars()
        .filter(|c| !matches!(c, '\'' | '`' | '\u{2018}' | '\u{2019}' | '\u{b4}'))
        .flat_map(char::to_lowercase)
        .collect();
    (key, headword.to_string())
}

fn valid_headword(h: &str) -> bool {
    !h.trim().is_empty() && h.trim() == h && !h.contains(['<', '>', '&', '"', '\t', '\n'])
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DictionaryStore {
    entries: BTreeMap<String, DictionaryEntry>,
    variants: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgressReport {
    pub total: usize,
    pub by_status: BTreeMap<EntryStatus, usize>,
    pub by_kind: BTreeMap<EntryKind, usize>,
    /// Blocked headwords with their comments.
    pub blocked: Vec<(String, Vec<String>)>,
}

impl ProgressReport {
    pub fn to_text(&self) -> String {
        let mut s = format!("entries\t{}\n", self.total);
        for st in EntryStatus::ALL {
            s.push_str(&format!("{}\t{}\n", st, self.by_status.get(&st).copied().unwrap_or(0)));
        }
        for k in [EntryKind::Main, EntryKind::Variant] {
            s.push_str(&format!("{}\t{}\n", k.as_str(), self.by_kind.get(&k).copied().unwrap_or(0)));
        }
        for (h, comments) in &self.blocked {
            s.push_str(&format!("blocked\t{h}\t{}\n", comments.join(" | ")));
        }
        s
    }
}

/// Headword range `LO..HI` on collation keys. Either side may be empty.
/// The upper bound acts as a prefix: `A..B` includes `Brown`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadwordRange {
    lo: Option<String>,
    hi: Option<String>,
}

impl HeadwordRange {
    pub fn parse(text: &str) -> Result<Self, DictError> {
        let (lo, hi) = text.split_once("..").ok_or_else(|| DictError::BadRange(text.to_string()))?;
        let side = |s: &str| {
            let k = collation_key(s.trim()).0;
            (!k.is_empty()).then_some(k)
        };
        let r = HeadwordRange { lo: side(lo), hi: side(hi) };
        if let (Some(l), Some(h)) = (&r.lo, &r.hi) {
            if l > h {
                return Err(DictError::BadRange(text.to_string()));
            }
        }
        Ok(r)
    }

    pub fn contains(&self, headword: &str) -> bool {
        let k = collation_key(headword).0;
        self.lo.as_ref().is_none_or(|l| &k >= l) && self.hi.as_ref().is_none_or(|h| &k <= h || k.starts_with(h.as_str()))
    }
}

impl DictionaryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, headword: &str) -> Option<&DictionaryEntry> {
        self.entries.get(headword)
    }

    pub fn entries(&self) -> impl Iterator<Item = &DictionaryEntry> {
        self.entries.values()
    }

    fn get_mut(&mut self, headword: &str) -> Result<&mut DictionaryEntry, DictError> {
        self.entries.get_mut(headword).ok_or_else(|| DictError::UnknownHeadword(headword.to_string()))
    }

    fn get(&self, headword: &str) -> Result<&DictionaryEntry, DictError> {
        self.entries.get(headword).ok_or_else(|| DictError::UnknownHeadword(headword.to_string()))
    }

    /// Main headword of the cluster containing `headword`.
    pub fn main_of(&self, headword: &str) -> Result<&str, DictError> {
        let e = self.get(headword)?;
        Ok(e.variant_of.as_deref().unwrap_or(&e.headword))
    }

    pub fn cluster_of(&self, headword: &str) -> Result<Cluster, DictError> {
        let main = self.main_of(headword)?.to_string();
        let mut members = self.variants.get(&main).cloned().unwrap_or_default();
        members.insert(main.clone());
        Ok(Cluster { main, members })
    }

    pub fn clusters(&self) -> Vec<Cluster> {
        self.entries
            .values()
            .filter(|e| e.kind == EntryKind::Main)
            .map(|e| self.cluster_of(&e.headword).expect("main exists"))
            .collect()
    }

    pub fn add_main(&mut self, headword: &str, edit: &Edit) -> Result<(), DictError> {
        if !valid_headword(headword) {
            return Err(DictError::InvalidHeadword(headword.to_string()));
        }
        if self.entries.contains_key(headword) {
            return Err(DictError::DuplicateHeadword(headword.to_string()));
        }
        let mut e = DictionaryEntry::new(headword, None);
        e.edit_log.push(edit.event("create"));
        self.entries.insert(headword.to_string(), e);
        Ok(())
    }

    pub fn add_variant(&mut self, headword: &str, main: &str, edit: &Edit) -> Result<(), DictError> {
        if !valid_headword(headword) {
            return Err(DictError::InvalidHeadword(headword.to_string()));
        }
        if self.entries.contains_key(headword) {
            return Err(DictError::DuplicateHeadword(headword.to_string()));
        }
        if self.get(main)?.kind != EntryKind::Main {
            return Err(DictError::NotMain(main.to_string()));
        }
        let mut e = DictionaryEntry::new(headword, Some(main));
        e.edit_log.push(edit.event("create"));
        self.entries.insert(headword.to_string(), e);
        self.variants.entry(main.to_string()).or_default().insert(headword.to_string());
        Ok(())
    }

    pub fn add_sense(&mut self, headword: &str, sense: Sense, edit: &Edit) -> Result<(), DictError> {
        if sense.origin_language.trim().is_empty() {
            return Err(DictError::EmptyLanguage);
        }
        let e = self.get_mut(headword)?;
        e.senses.push(sense);
        e.edit_log.push(edit.event("add-sense"));
        Ok(())
    }

    pub fn set_status(&mut self, headword: &str, status: EntryStatus, edit: &Edit) -> Result<(), DictError> {
        let e = self.get_mut(headword)?;
        if status == EntryStatus::Finished && e.kind == EntryKind::Main && e.senses.is_empty() {
            return Err(DictError::IncompleteEntry(headword.to_string()));
        }
        e.status = status;
        e.edit_log.push(edit.event(&format!("status {status}")));
        Ok(())
    }

    pub fn add_comment(&mut self, headword: &str, text: &str, edit: &Edit) -> Result<(), DictError> {
        let e = self.get_mut(headword)?;
        e.comments.push(Comment { author: edit.editor.clone(), at: edit.at, text: text.to_string() });
        Ok(())
    }

    /// Makes `new_main` the main entry of the cluster containing `member`.
    /// Senses stay where they are.
    pub fn set_main_name(&mut self, member: &str, new_main: &str, edit: &Edit) -> Result<(), DictError> {
        let cluster = self.cluster_of(member)?;
        if new_main == cluster.main {
            return Ok(());
        }
        if !cluster.members.contains(new_main) {
            return Err(DictError::NotInCluster { main: cluster.main, member: new_main.to_string() });
        }
        let action = format!("set-main {new_main}");
        for h in &cluster.members {
            let e = self.entries.get_mut(h).expect("cluster member exists");
            if h == new_main {
                e.kind = EntryKind::Main;
                e.variant_of = None;
                e.reopen_if_incomplete();
            } else {
                e.kind = EntryKind::Variant;
                e.variant_of = Some(new_main.to_string());
            }
            e.edit_log.push(edit.event(&action));
        }
        self.variants.remove(&cluster.main);
        let mut vs = cluster.members.clone();
        vs.remove(new_main);
        self.variants.insert(new_main.to_string(), vs);
        Ok(())
    }

    /// Moves sense `index` of `from` to the end of `to`'s senses.
    pub fn move_sense(&mut self, from: &str, to: &str, index: usize, edit: &Edit) -> Result<(), DictError> {
        if self.main_of(from)? != self.main_of(to)? {
            return Err(DictError::CrossCluster { from: from.to_string(), to: to.to_string() });
        }
        let src = self.get_mut(from)?;
        if index >= src.senses.len() {
            return Err(DictError::BadSenseIndex { headword: from.to_string(), index });
        }
        let sense = src.senses.remove(index);
        src.reopen_if_incomplete();
        src.edit_log.push(edit.event(&format!("move-sense {index} to {to}")));
        let dst = self.get_mut(to)?;
        dst.senses.push(sense);
        if from != to {
            dst.edit_log.push(edit.event(&format!("receive-sense from {from}")));
        }
        Ok(())
    }

    /// Records the entry's count in `table` (following redirects; absent
    /// names count 0). Returns the recorded count.
    pub fn record_entry_statistics(
        &mut self,
        headword: &str,
        table: &FrequencyTable,
        overwrite: bool,
        location: Option<&str>,
        edit: &Edit,
    ) -> Result<u64, DictError> {
        let count = table.count_for(headword);
        let e = self.get_mut(headword)?;
        let snap = FrequencySnapshot { source: table.source.clone(), count };
        match e.statistics.iter_mut().find(|s| s.source.id == table.source.id) {
            Some(existing) if overwrite => *existing = snap,
            Some(_) => {
                return Err(DictError::DuplicateSource {
                    headword: headword.to_string(),
                    source_id: table.source.id.clone(),
                })
            }
            None => e.statistics.push(snap),
        }
        if let Some(loc) = location {
            e.main_location = Some(loc.to_string());
        }
        e.edit_log.push(edit.event(&format!("stats {}", table.source.id)));
        Ok(count)
    }

    /// Adds citations to sense `sense` of `headword` (the first when `None`),
    /// keeping the bearer list in year order without duplicate renderings.
    /// An entry without senses gets one with origin `undetermined`.
    /// Returns how many citations were new.
    pub fn attach_evidence(
        &mut self,
        headword: &str,
        sense: Option<usize>,
        citations: &[EvidenceCitation],
        edit: &Edit,
    ) -> Result<usize, DictError> {
        let cluster = self.cluster_of(headword)?;
        for c in citations {
            if !cluster.members.contains(&c.surname) {
                return Err(DictError::SurnameMismatch { headword: headword.to_string(), surname: c.surname.clone() });
            }
        }
        let e = self.get_mut(headword)?;
        let index = sense.unwrap_or(0);
        let placeholder = e.senses.is_empty() && sense.is_none();
        if placeholder {
            e.senses.push(Sense::new("undetermined"));
        }
        let target = e
            .senses
            .get_mut(index)
            .ok_or(DictError::BadSenseIndex { headword: headword.to_string(), index })?;
        let mut seen: BTreeSet<String> = target.early_bearers.iter().map(|c| c.rendered.clone()).collect();
        let mut added = 0;
        for c in citations {
            if seen.insert(c.rendered.clone()) {
                target.early_bearers.push(c.clone());
                added += 1;
            }
        }
        target.early_bearers.sort_by_key(|c| c.year);
        if added > 0 {
            e.edit_log.push(edit.event(&format!("attach-evidence {added}")));
        } else if placeholder {
            e.senses.clear();
        }
        Ok(added)
    }

    pub fn progress_report(&self, range: Option<&HeadwordRange>) -> ProgressReport {
        let mut r = ProgressReport {
            total: 0,
            by_status: EntryStatus::ALL.into_iter().map(|s| (s, 0)).collect(),
            by_kind: [(EntryKind::Main, 0), (EntryKind::Variant, 0)].into_iter().collect(),
            blocked: Vec::new(),
        };
        let mut selected: Vec<&DictionaryEntry> =
            self.entries.values().filter(|e| range.is_none_or(|rg| rg.contains(&e.headword))).collect();
        selected.sort_by_key(|e| collation_key(&e.headword));
        for e in selected {
            r.total += 1;
            *r.by_status.get_mut(&e.status).unwrap() += 1;
            *r.by_kind.get_mut(&e.kind).unwrap() += 1;
            if e.status == EntryStatus::Blocked {
                r.blocked.push((e.headword.clone(), e.comments.iter().map(|c| c.text.clone()).collect()));
            }
        }
        r
    }

    /// Edit events per editor with dates in `[from, to]`.
    pub fn editor_activity_report(&self, from: NaiveDate, to: NaiveDate) -> Result<BTreeMap<String, usize>, DictError> {
        if from > to {
            return Err(DictError::InvertedWindow(from, to));
        }
        let mut out = BTreeMap::new();
        for e in self.entries.values() {
            for ev in &e.edit_log {
                let d = ev.at.date();
                if d >= from && d <= to {
                    *out.entry(ev.editor.clone()).or_insert(0) += 1;
                }
            }
        }
        Ok(out)
    }

    /// Violations of the store invariants; empty when consistent.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut out = Vec::new();
        for e in self.entries.values() {
            match (&e.kind, &e.variant_of) {
                (EntryKind::Main, None) => {
                    if e.status == EntryStatus::Finished && e.senses.is_empty() {
                        out.push(format!("{}: finished without senses", e.headword));
                    }
                }
                (EntryKind::Variant, Some(m)) => match self.entries.get(m) {
                    Some(t) if t.kind == EntryKind::Main => {
                        if !self.variants.get(m).is_some_and(|vs| vs.contains(&e.headword)) {
                            out.push(format!("{}: missing from index of {m}", e.headword));
                        }
                    }
                    _ => out.push(format!("{}: variant of non-main {m}", e.headword)),
                },
                _ => out.push(format!("{}: kind and variant_of disagree", e.headword)),
            }
            for s in &e.senses {
                if s.origin_language.trim().is_empty() {
                    out.push(format!("{}: sense without language", e.headword));
                }
            }
            let ids: BTreeSet<&str> = e.statistics.iter().map(|s| s.source.id.as_str()).collect();
            if ids.len() != e.statistics.len() {
                out.push(format!("{}: duplicate statistics source", e.headword));
            }
        }
        for (m, vs) in &self.variants {
            for v in vs {
                if self.entries.get(v).and_then(|e| e.variant_of.as_deref()) != Some(m.as_str()) {
                    out.push(format!("{v}: indexed under {m} but points elsewhere"));
                }
            }
        }
        out
    }

    fn sorted_entries(&self) -> Vec<&DictionaryEntry> {
        let mut v: Vec<&DictionaryEntry> = self.entries.values().collect();
        v.sort_by_key(|e| collation_key(&e.headword));
        v
    }

    /// The publisher document. Byte-deterministic for a given store.
    pub fn export_publisher_xml(&self) -> String {
        let mut s = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<dictionary");
        attr(&mut s, "schema", SCHEMA_VERSION);
        s.push_str(">\n");
        for e in self.sorted_entries() {
            write_entry(&mut s, e, false);
            s.push('\n');
        }
        s.push_str("</dictionary>\n");
        s
    }

    /// Writes one content-addressed XML file per cluster under
    /// `dir/clusters` and a headword index `dir/index.tsv`.
    pub fn save(&self, dir: &Path) -> Result<(), DictError> {
        let cdir = dir.join("clusters");
        fs::create_dir_all(&cdir)?;
        let mut index: Vec<(String, String)> = Vec::new();
        let mut keep = BTreeSet::new();
        for c in self.clusters() {
            let doc = self.cluster_xml(&c);
            let name = format!("{}.xml", &sha256_hex(doc.as_bytes())[..16]);
            let path = cdir.join(&name);
            if !path.exists() {
                let tmp = cdir.join(format!("{name}.tmp"));
                fs::write(&tmp, &doc)?;
                fs::rename(&tmp, &path)?;
            }
            for m in &c.members {
                index.push((m.clone(), name.clone()));
            }
            keep.insert(name);
        }
        index.sort_by_key(|a| collation_key(&a.0));
        let mut idx = String::new();
        for (h, f) in &index {
            idx.push_str(&format!("{h}\t{f}\n"));
        }
        let tmp = dir.join("index.tsv.tmp");
        fs::write(&tmp, idx)?;
        fs::rename(&tmp, dir.join("index.tsv"))?;
        for f in fs::read_dir(&cdir)? {
            let p = f?.path();
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            if !keep.contains(&name) {
                fs::remove_file(&p)?;
            }
        }
        Ok(())
    }

    fn cluster_xml(&self, c: &Cluster) -> String {
        let mut s = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<cluster");
        attr(&mut s, "main", &c.main);
        s.push_str(">\n");
        let mut members: Vec<&String> = c.members.iter().collect();
        members.sort_by_key(|h| collation_key(h));
        for h in members {
            write_entry(&mut s, &self.entries[h.as_str()], true);
            s.push('\n');
        }
        s.push_str("</cluster>\n");
        s
    }

    pub fn load(dir: &Path) -> Result<Self, DictError> {
        let index = fs::read_to_string(dir.join("index.tsv"))?;
        let mut files = BTreeSet::new();
        let mut expected = BTreeSet::new();
        for line in index.lines().filter(|l| !l.is_empty()) {
            let (h, f) = line.split_once('\t').ok_or_else(|| DictError::Corrupt(format!("index line {line:?}")))?;
            files.insert(f.to_string());
            expected.insert(h.to_string());
        }
        let mut store = DictionaryStore::new();
        for f in &files {
            let text = fs::read_to_string(dir.join("clusters").join(f))?;
            if format!("{}.xml", &sha256_hex(text.as_bytes())[..16]) != *f {
                return Err(DictError::Corrupt(format!("{f} does not match its digest")));
            }
            let doc = roxmltree::Document::parse(&text).map_err(|e| DictError::Corrupt(format!("{f}: {e}")))?;
            for n in doc.root_element().children().filter(|n| n.has_tag_name("entry")) {
                let e = read_entry(n).map_err(|m| DictError::Corrupt(format!("{f}: {m}")))?;
                if store.entries.insert(e.headword.clone(), e).is_some() {
                    return Err(DictError::Corrupt(format!("{f}: duplicate headword")));
                }
            }
        }
        for e in store.entries.values() {
            if let Some(m) = &e.variant_of {
                store.variants.entry(m.clone()).or_default().insert(e.headword.clone());
            }
        }
        let actual: BTreeSet<String> = store.entries.keys().cloned().collect();
        if actual != expected {
            return Err(DictError::Corrupt("index does not match cluster files".into()));
        }
        let problems = store.check_invariants();
        if !problems.is_empty() {
            return Err(DictError::Corrupt(problems.join("; ")));
        }
        Ok(store)
    }

    /// Builds a store from finished entries, e.g. ones read back from disk.
    pub fn from_entries(entries: Vec<DictionaryEntry>) -> Result<Self, DictError> {
        let mut store = DictionaryStore::new();
        for e in entries {
            if store.entries.contains_key(&e.headword) {
                return Err(DictError::DuplicateHeadword(e.headword));
            }
            if let Some(m) = &e.variant_of {
                store.variants.entry(m.clone()).or_default().insert(e.headword.clone());
            }
            store.entries.insert(e.headword.clone(), e);
        }
        let problems = store.check_invariants();
        if !problems.is_empty() {
            return Err(DictError::Corrupt(problems.join("; ")));
        }
        Ok(store)
    }
}

fn write_entry(s: &mut String, e: &DictionaryEntry, full: bool) {
    s.push_str("<entry");
    attr(s, "headword", &e.headword);
    attr(s, "kind", e.kind.as_str());
    if let Some(m) = &e.variant_of {
        attr(s, "variant-of", m);
    }
    attr(s, "status", e.status.as_str());
    if let Some(l) = &e.main_location {
        attr(s, "location", l);
    }
    let empty = e.statistics.is_empty() && e.senses.is_empty() && (!full || (e.comments.is_empty() && e.edit_log.is_empty()));
    if empty {
        s.push_str("/>");
        return;
    }
    s.push('>');
    if !e.statistics.is_empty() {
        s.push_str("<stats>");
        for st in &e.statistics {
            s.push_str("<freq");
            attr(s, "source", &st.source.id);
            attr(s, "year", &st.source.year.to_string());
            attr(s, "region", &st.source.region.to_string());
            if full {
                attr(s, "role", if st.source.role == SourceRole::Reference { "reference" } else { "subject" });
            }
            attr(s, "count", &st.count.to_string());
            s.push_str("/>");
        }
        s.push_str("</stats>");
    }
    for sense in &e.senses {
        s.push_str("<sense");
        attr(s, "lang", &sense.origin_language);
        s.push('>');
        for x in &sense.explanations {
            s.push_str("<expl>");
            s.push_str(&escape_text(x));
            s.push_str("</expl>");
        }
        if !sense.early_bearers.is_empty() {
            s.push_str("<bearers>");
            for b in &sense.early_bearers {
                s.push_str("<b");
                if full && !b.back_ref.is_empty() {
                    attr(s, "ref", &b.back_ref);
                }
                s.push('>');
                // Citation text is markup-free apart from its own spans.
                s.push_str(&b.rendered);
                s.push_str("</b>");
            }
            s.push_str("</bearers>");
        }
        for r in &sense.references {
            s.push_str("<ref>");
            s.push_str(&escape_text(r));
            s.push_str("</ref>");
        }
        s.push_str("</sense>");
    }
    if full {
        for c in &e.comments {
            s.push_str("<comment");
            attr(s, "author", &c.author);
            attr(s, "at", &c.at.format(TIME_FORMAT).to_string());
            s.push('>');
            s.push_str(&escape_text(&c.text));
            s.push_str("</comment>");
        }
        for ev in &e.edit_log {
            s.push_str("<edit");
            attr(s, "editor", &ev.editor);
            attr(s, "at", &ev.at.format(TIME_FORMAT).to_string());
            attr(s, "action", &ev.action);
            s.push_str("/>");
        }
    }
    s.push_str("</entry>");
}

/// Reassembles the inline markup of a `<b>` element.
fn bearer_text(b: roxmltree::Node) -> Result<String, String> {
    let mut out = String::new();
    for c in b.children() {
        if c.is_text() {
            out.push_str(&escape_text(c.text().unwrap_or("")));
        } else if c.is_element() {
            let name = c.tag_name().name();
            if name != "sn" && name != "src" {
                return Err(format!("unexpected <{name}> in bearer"));
            }
            if c.children().any(|g| g.is_element()) || c.attributes().len() > 0 {
                return Err(format!("nested markup in <{name}>"));
            }
            out.push_str(&format!("<{name}>{}</{name}>", escape_text(c.text().unwrap_or(""))));
        }
    }
    Ok(out)
}

fn parse_time(s: Option<&str>) -> Result<NaiveDateTime, String> {
    let s = s.ok_or("missing timestamp")?;
    NaiveDateTime::parse_from_str(s, TIME_FORMAT).map_err(|e| format!("bad timestamp {s:?}: {e}"))
}

fn read_entry(n: roxmltree::Node) -> Result<DictionaryEntry, String> {
    let headword = n.attribute("headword").ok_or("entry without headword")?.to_string();
    let kind = match n.attribute("kind") {
        Some("main") => EntryKind::Main,
        Some("variant") => EntryKind::Variant,
        k => return Err(format!("{headword}: bad kind {k:?}")),
    };
    let status = n.attribute("status").unwrap_or("unedited").parse::<EntryStatus>().map_err(|e| e.to_string())?;
    let mut e = DictionaryEntry {
        headword: headword.clone(),
        kind,
        variant_of: n.attribute("variant-of").map(str::to_string),
        senses: Vec::new(),
        statistics: Vec::new(),
        main_location: n.attribute("location").map(str::to_string),
        status,
        comments: Vec::new(),
        edit_log: Vec::new(),
    };
    for c in n.children().filter(|c| c.is_element()) {
        match c.tag_name().name() {
            "stats" => {
                for f in c.children().filter(|f| f.has_tag_name("freq")) {
                    let get = |k: &str| f.attribute(k).ok_or(format!("{headword}: freq without {k}"));
                    let region: Region = get("region")?.parse().map_err(|e: crate::freqlist::FreqError| e.to_string())?;
                    let role = match f.attribute("role") {
                        Some("reference") => SourceRole::Reference,
                        _ => SourceRole::Subject,
                    };
                    let year: i32 = get("year")?.parse().map_err(|_| format!("{headword}: bad year"))?;
                    let source = SourceDescriptor::new(get("source")?, year, region, role).map_err(|e| e.to_string())?;
                    let count = get("count")?.parse().map_err(|_| format!("{headword}: bad count"))?;
                    e.statistics.push(FrequencySnapshot { source, count });
                }
            }
            "sense" => {
                let mut sense = Sense::new(c.attribute("lang").unwrap_or(""));
                for part in c.children().filter(|p| p.is_element()) {
                    match part.tag_name().name() {
                        "expl" => sense.explanations.push(part.text().unwrap_or("").to_string()),
                        "ref" => sense.references.push(part.text().unwrap_or("").to_string()),
                        "bearers" => {
                            for b in part.children().filter(|b| b.has_tag_name("b")) {
                                let text = bearer_text(b)?;
                                let mut cite = EvidenceCitation::parse(&text).map_err(|e| e.to_string())?;
                                if let Some(r) = b.attribute("ref") {
                                    cite.back_ref = r.to_string();
                                }
                                sense.early_bearers.push(cite);
                            }
                        }
                        other => return Err(format!("{headword}: unexpected <{other}> in sense")),
                    }
                }
                e.senses.push(sense);
            }
            "comment" => e.comments.push(Comment {
                author: c.attribute("author").unwrap_or("").to_string(),
                at: parse_time(c.attribute("at"))?,
                text: c.text().unwrap_or("").to_string(),
            }),
            "edit" => e.edit_log.push(EditEvent {
                editor: c.attribute("editor").unwrap_or("").to_string(),
                at: parse_time(c.attribute("at"))?,
                action: c.attribute("action").unwrap_or("").to_string(),
            }),
            other => return Err(format!("{headword}: unexpected <{other}>")),
        }
    }
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FindingKind {
    Schema,
    DanglingCrossReference,
    IncompleteEntry,
    CitationMarkup,
}

impl FindingKind {
    pub fn code(self) -> &'static str {
        match self {
            FindingKind::Schema => "schema",
            FindingKind::DanglingCrossReference => "dangling-cross-reference",
            FindingKind::IncompleteEntry => "incomplete-entry",
            FindingKind::CitationMarkup => "citation-markup",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub kind: FindingKind,
    /// Headword, or `entry[n]` when the headword is missing.
    pub locator: String,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}", self.kind.code(), self.locator, self.message)
    }
}

/// Checks an exported document. An empty result means it is publishable.
pub fn validate_publication(xml: &str) -> Result<Vec<Finding>, DictError> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| DictError::Unreadable(e.to_string()))?;
    let root = doc.root_element();
    let mut out = Vec::new();
    let mut push = |kind, locator: &str, message: String| {
        out.push(Finding { kind, locator: locator.to_string(), message });
    };
    if root.tag_name().name() != "dictionary" {
        push(FindingKind::Schema, "document", format!("root element is <{}>", root.tag_name().name()));
        return Ok(out);
    }
    let mut kinds: BTreeMap<String, String> = BTreeMap::new();
    let mut links: Vec<(String, String)> = Vec::new();
    let entries: Vec<_> = root.children().filter(|n| n.is_element()).collect();
    for (i, n) in entries.iter().enumerate() {
        let fallback = format!("entry[{i}]");
        if !n.has_tag_name("entry") {
            push(FindingKind::Schema, &fallback, format!("unexpected <{}>", n.tag_name().name()));
            continue;
        }
        let Some(h) = n.attribute("headword").filter(|h| !h.is_empty()) else {
            push(FindingKind::Schema, &fallback, "missing headword".into());
            continue;
        };
        let kind = n.attribute("kind").unwrap_or("");
        if kind != "main" && kind != "variant" {
            push(FindingKind::Schema, h, format!("bad kind {kind:?}"));
        }
        if kinds.insert(h.to_string(), kind.to_string()).is_some() {
            push(FindingKind::Schema, h, "duplicate headword".into());
        }
        let status = n.attribute("status").unwrap_or("");
        if status.parse::<EntryStatus>().is_err() {
            push(FindingKind::Schema, h, format!("bad status {status:?}"));
        }
        match (kind, n.attribute("variant-of")) {
            ("variant", Some(t)) => links.push((h.to_string(), t.to_string())),
            ("variant", None) => push(FindingKind::Schema, h, "variant without variant-of".into()),
            ("main", Some(_)) => push(FindingKind::Schema, h, "main entry with variant-of".into()),
            _ => {}
        }
        let mut senses = 0;
        let mut seen_sense = false;
        for c in n.children().filter(|c| c.is_element()) {
            match c.tag_name().name() {
                "stats" => {
                    if seen_sense {
                        push(FindingKind::Schema, h, "stats after sense".into());
                    }
                    let mut ids = BTreeSet::new();
                    for f in c.children().filter(|f| f.is_element()) {
                        if !f.has_tag_name("freq") {
                            push(FindingKind::Schema, h, format!("unexpected <{}> in stats", f.tag_name().name()));
                            continue;
                        }
                        let ok = ["source", "year", "region", "count"].iter().all(|k| f.attribute(*k).is_some())
                            && f.attribute("year").is_some_and(|y| y.parse::<i32>().is_ok())
                            && f.attribute("count").is_some_and(|c| c.parse::<u64>().is_ok());
                        if !ok {
                            push(FindingKind::Schema, h, "malformed freq".into());
                        } else if !ids.insert(f.attribute("source").unwrap()) {
                            push(FindingKind::Schema, h, "duplicate statistics source".into());
                        }
                    }
                }
                "sense" => {
                    seen_sense = true;
                    senses += 1;
                    if c.attribute("lang").is_none_or(|l| l.trim().is_empty()) {
                        push(FindingKind::Schema, h, "sense without lang".into());
                    }
                    for part in c.children().filter(|p| p.is_element()) {
                        match part.tag_name().name() {
                            "expl" | "ref" => {
                                if part.children().any(|g| g.is_element()) {
                                    push(FindingKind::Schema, h, "markup inside text element".into());
                                }
                            }
                            "bearers" => {
                                for b in part.children().filter(|b| b.is_element()) {
                                    if !b.has_tag_name("b") {
                                        push(FindingKind::Schema, h, "unexpected element in bearers".into());
                                        continue;
                                    }
                                    check_bearer(b, h, &mut push);
                                }
                            }
                            other => push(FindingKind::Schema, h, format!("unexpected <{other}> in sense")),
                        }
                    }
                }
                other => push(FindingKind::Schema, h, format!("unexpected <{other}>")),
            }
        }
        if kind == "main" && status == "finished" && senses == 0 {
            push(FindingKind::IncompleteEntry, h, "finished main entry has no sense".into());
        }
    }
    for (h, target) in links {
        match kinds.get(&target).map(String::as_str) {
            Some("main") => {}
            Some(_) => push(FindingKind::DanglingCrossReference, &h, format!("{target} is not a main entry")),
            None => push(FindingKind::DanglingCrossReference, &h, format!("{target} is missing")),
        }
    }
    Ok(out)
}

fn check_bearer(b: roxmltree::Node, h: &str, push: &mut impl FnMut(FindingKind, &str, String)) {
    let count = |name: &str| b.children().filter(|c| c.has_tag_name(name)).count();
    if count("sn") != 1 || count("src") != 1 {
        push(FindingKind::CitationMarkup, h, "bearer needs exactly one sn and one src".into());
        return;
    }
    match bearer_text(b) {
        Ok(text) => match CitationParts::parse(&text) {
            Ok(p) if text.contains(&p.year.to_string()) => {}
            _ => push(FindingKind::CitationMarkup, h, format!("citation does not follow the template: {text:?}")),
        },
        Err(m) => push(FindingKind::CitationMarkup, h, m),
    }
}
