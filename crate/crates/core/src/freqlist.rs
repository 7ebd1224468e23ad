//! Census frequency lists: loading, variant-merge proposals, lexicographer
//! decisions, merging and thresholding.
//!
//! The workflow has two steps. [`propose_variant_merges`] groups spellings
//! that the name rules consider the same surname and marks each group
//! certain or uncertain; [`apply_decisions_and_merge`] then sums the counts of
//! every approved group under its canonical spelling and records a redirect
//! for every other spelling. Uncertain proposals need an explicit verdict.
//! When an already-approved reference table is supplied, groups that it
//! confirms are approved automatically.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use thiserror::Error;

use crate::manifest::sha256_hex;
use crate::names::{validate_canonical, Family, FeminineSuffixTable, NameError, NameRules};

#[derive(Debug, Error)]
pub enum FreqError {
    #[error("unreadable stream: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Name(#[from] NameError),
    #[error("year {0} outside [1500, 2100]")]
    YearOutOfRange(i32),
    #[error("unknown region {0:?}")]
    UnknownRegion(String),
    #[error("unknown source role {0:?}")]
    UnknownRole(String),
    #[error("missing verdict for uncertain proposal {0}")]
    MissingVerdict(String),
    #[error("verdict references unknown proposal {0}")]
    UnknownProposal(String),
    #[error("duplicate verdict for proposal {0}")]
    DuplicateVerdict(String),
    #[error("amend verdict for {0} lacks an amended canonical")]
    AmendWithoutCanonical(String),
    #[error("unknown verdict {0:?}")]
    UnknownVerdict(String),
    #[error("approved proposals disagree on canonical: {0:?} vs {1:?}")]
    ConflictingCanonicals(String, String),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("table invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    GB,
    Ireland,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::GB => "GB",
            Region::Ireland => "Ireland",
        })
    }
}

impl FromStr for Region {
    type Err = FreqError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gb" => Ok(Region::GB),
            "ireland" | "ie" => Ok(Region::Ireland),
            _ => Err(FreqError::UnknownRegion(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SourceRole {
    Reference,
    Subject,
}

impl FromStr for SourceRole {
    type Err = FreqError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "reference" => Ok(SourceRole::Reference),
            "subject" => Ok(SourceRole::Subject),
            _ => Err(FreqError::UnknownRole(s.to_string())),
        }
    }
}

/// Identifies one frequency snapshot (year and region).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SourceDescriptor {
    pub id: String,
    pub year: i32,
    pub region: Region,
    pub role: SourceRole,
}

impl SourceDescriptor {
    pub fn new(id: impl Into<String>, year: i32, region: Region, role: SourceRole) -> Result<Self, FreqError> {
        if !(1500..=2100).contains(&year) {
            return Err(FreqError::YearOutOfRange(year));
        }
        Ok(Self {
            id: id.into(),
            year,
            region,
            role,
        })
    }
}

/// Canonical names with bearer counts, plus redirects from variant spellings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    pub source: SourceDescriptor,
    pub rows: BTreeMap<String, u64>,
    pub redirects: BTreeMap<String, String>,
}

impl FrequencyTable {
    pub fn new(source: SourceDescriptor) -> Self {
        Self {
            source,
            rows: BTreeMap::new(),
            redirects: BTreeMap::new(),
        }
    }

    pub fn total(&self) -> u64 {
        self.rows.values().sum()
    }

    /// The row key a spelling resolves to, following at most one redirect.
    pub fn resolve(&self, name: &str) -> Option<&str> {
        if let Some((k, _)) = self.rows.get_key_value(name) {
            return Some(k);
        }
        self.redirects.get(name).map(String::as_str)
    }

    /// Bearer count for a spelling; absent names count zero.
    pub fn count_for(&self, name: &str) -> u64 {
        self.resolve(name).and_then(|k| self.rows.get(k)).copied().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), FreqError> {
        for (variant, target) in &self.redirects {
            if self.rows.contains_key(variant) {
                return Err(FreqError::Invariant(format!("{variant:?} is both a row and a redirect")));
            }
            if !self.rows.contains_key(target) {
                return Err(FreqError::Invariant(format!("redirect {variant:?} -> missing row {target:?}")));
            }
        }
        Ok(())
    }

    /// `canonical<TAB>count` rows in key order.
    pub fn write_rows<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (name, count) in &self.rows {
            writeln!(out, "{name}\t{count}")?;
        }
        Ok(())
    }

    /// `variant<TAB>canonical` rows in key order.
    pub fn write_redirects<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (variant, canonical) in &self.redirects {
            writeln!(out, "{variant}\t{canonical}")?;
        }
        Ok(())
    }

    pub fn read<R1: BufRead, R2: BufRead>(
        source: SourceDescriptor,
        rows: R1,
        redirects: Option<R2>,
    ) -> Result<Self, FreqError> {
        let mut table = Self::new(source);
        for (idx, line) in rows.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (name, count) = line.split_once('\t').ok_or_else(|| FreqError::Malformed {
                line: idx + 1,
                reason: "expected canonical<TAB>count".into(),
            })?;
            let count: u64 = count.trim().parse().map_err(|_| FreqError::Malformed {
                line: idx + 1,
                reason: format!("bad count {count:?}"),
            })?;
            *table.rows.entry(name.to_string()).or_insert(0) += count;
        }
        if let Some(redirects) = redirects {
            for (idx, line) in redirects.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let (variant, canonical) = line.split_once('\t').ok_or_else(|| FreqError::Malformed {
                    line: idx + 1,
                    reason: "expected variant<TAB>canonical".into(),
                })?;
                table.redirects.insert(variant.to_string(), canonical.trim().to_string());
            }
        }
        table.validate()?;
        Ok(table)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RejectReason {
    EmptyName,
    IllegalCharacter,
    MissingCount,
    NonNumericCount,
    MalformedRow,
}

impl RejectReason {
    pub fn code(self) -> &'static str {
        match self {
            RejectReason::EmptyName => "empty-name",
            RejectReason::IllegalCharacter => "illegal-character",
            RejectReason::MissingCount => "missing-count",
            RejectReason::NonNumericCount => "non-numeric-count",
            RejectReason::MalformedRow => "malformed-row",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reject {
    pub line: usize,
    pub text: String,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Default)]
pub struct LoadedList {
    /// Accepted `(name, count)` rows in input order, duplicates summed into
    /// the first occurrence.
    pub entries: Vec<(String, u64)>,
    pub rejects: Vec<Reject>,
    pub warnings: Vec<String>,
}

impl LoadedList {
    pub fn accepted_total(&self) -> u64 {
        self.entries.iter().map(|(_, c)| c).sum()
    }

    /// Reject log as `line<TAB>reason<TAB>text`.
    pub fn write_rejects<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for r in &self.rejects {
            writeln!(out, "{}\t{}\t{}", r.line, r.reason.code(), r.text)?;
        }
        Ok(())
    }
}

/// Reads `NAME<TAB>count` lines. Bad rows go to the reject log; duplicate
/// names (compared in uppercase) are summed with a warning.
pub fn load_frequency_list<R: BufRead>(
    stream: R,
    source: &SourceDescriptor,
    rules: &NameRules,
) -> Result<LoadedList, FreqError> {
    let mut list = LoadedList::default();
    let mut position: BTreeMap<String, usize> = BTreeMap::new();
    for (idx, line) in stream.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let reject = |reason| Reject {
            line: line_no,
            text: line.clone(),
            reason,
        };
        let Some((name, count)) = line.split_once('\t') else {
            list.rejects.push(reject(RejectReason::MissingCount));
            continue;
        };
        if count.contains('\t') {
            list.rejects.push(reject(RejectReason::MalformedRow));
            continue;
        }
        let name = match rules.clean_raw(name) {
            Ok(n) => n,
            Err(NameError::Empty) => {
                list.rejects.push(reject(RejectReason::EmptyName));
                continue;
            }
            Err(_) => {
                list.rejects.push(reject(RejectReason::IllegalCharacter));
                continue;
            }
        };
        let count = count.trim();
        if count.is_empty() {
            list.rejects.push(reject(RejectReason::MissingCount));
            continue;
        }
        let Ok(count) = count.parse::<u64>() else {
            list.rejects.push(reject(RejectReason::NonNumericCount));
            continue;
        };
        let key = name.to_uppercase();
        match position.get(&key) {
            Some(&at) => {
                list.entries[at].1 += count;
                list.warnings.push(format!(
                    "{}: line {line_no}: duplicate name {name:?}, counts summed",
                    source.id
                ));
            }
            None => {
                position.insert(key, list.entries.len());
                list.entries.push((name, count));
            }
        }
    }
    Ok(list)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Confidence {
    Certain,
    Uncertain,
}

impl fmt::Display for Confidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Confidence::Certain => "certain",
            Confidence::Uncertain => "uncertain",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MergeReason {
    PrefixFamily,
    Apostrophe,
    Feminine,
    ReferenceMatch,
    /// A single lexicon exception reported for confirmation; never a merge.
    Exception,
}

impl fmt::Display for MergeReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MergeReason::PrefixFamily => "prefix-family",
            MergeReason::Apostrophe => "apostrophe",
            MergeReason::Feminine => "feminine",
            MergeReason::ReferenceMatch => "reference-match",
            MergeReason::Exception => "exception",
        })
    }
}

/// A proposed grouping of spellings. Members are the cleaned uppercase
/// source spellings; the id is a hash of the sorted member set, so a
/// decision file stays valid across re-runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeProposal {
    pub id: String,
    pub members: BTreeSet<String>,
    pub proposed_canonical: String,
    pub confidence: Confidence,
    pub reason: MergeReason,
}

impl MergeProposal {
    fn new(members: BTreeSet<String>, proposed_canonical: String, confidence: Confidence, reason: MergeReason) -> Self {
        Self {
            id: proposal_id(&members),
            members,
            proposed_canonical,
            confidence,
            reason,
        }
    }

    pub fn is_merge(&self) -> bool {
        self.members.len() >= 2
    }
}

pub fn proposal_id<'a>(members: impl IntoIterator<Item = &'a String>) -> String {
    let mut sorted: Vec<&String> = members.into_iter().collect();
    sorted.sort();
    sorted.dedup();
    let joined = sorted.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("\n");
    sha256_hex(joined.as_bytes())[..16].to_string()
}

/// `id<TAB>confidence<TAB>reason<TAB>canonical<TAB>member;member...`
pub fn write_proposals<W: Write>(proposals: &[MergeProposal], mut out: W) -> std::io::Result<()> {
    for p in proposals {
        let members: Vec<&str> = p.members.iter().map(String::as_str).collect();
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            p.id,
            p.confidence,
            p.reason,
            p.proposed_canonical,
            members.join(";")
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Approve,
    Reject,
    Amend(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DecisionFile {
    pub verdicts: Vec<(String, Verdict)>,
}

impl DecisionFile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, id: impl Into<String>, verdict: Verdict) {
        self.verdicts.push((id.into(), verdict));
    }

    /// Reads `proposal_id<TAB>verdict<TAB>amended_canonical?`.
    pub fn from_tsv<R: BufRead>(reader: R) -> Result<Self, FreqError> {
        let mut file = Self::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() < 2 {
                return Err(FreqError::Malformed {
                    line: idx + 1,
                    reason: "expected proposal_id<TAB>verdict".into(),
                });
            }
            let id = cols[0].to_string();
            let verdict = match cols[1] {
                "approve" => Verdict::Approve,
                "reject" => Verdict::Reject,
                "amend" => match cols.get(2).filter(|s| !s.is_empty()) {
                    Some(c) => Verdict::Amend(c.to_string()),
                    None => return Err(FreqError::AmendWithoutCanonical(id)),
                },
                other => return Err(FreqError::UnknownVerdict(other.to_string())),
            };
            file.verdicts.push((id, verdict));
        }
        Ok(file)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (id, v) in &self.verdicts {
            match v {
                Verdict::Approve => out.push_str(&format!("{id}\tapprove\n")),
                Verdict::Reject => out.push_str(&format!("{id}\treject\n")),
                Verdict::Amend(c) => out.push_str(&format!("{id}\tamend\t{c}\n")),
            }
        }
        out
    }
}

/// One spelling from an entry list after applying the name rules.
#[derive(Debug, Clone)]
struct Unit {
    key: String,
    restored: String,
    canonical: String,
    family: Family,
    count: u64,
}

fn build_units(entries: &[(String, u64)], rules: &NameRules) -> Result<Vec<Unit>, FreqError> {
    let mut seen = BTreeMap::new();
    let mut units: Vec<Unit> = Vec::with_capacity(entries.len());
    for (raw, count) in entries {
        let restored = rules.restore_case(raw)?;
        let form = rules.canonicalize(&restored);
        let key = rules.clean_raw(raw)?.to_uppercase();
        if let Some(&at) = seen.get(&key) {
            let unit: &mut Unit = &mut units[at];
            unit.count += count;
            continue;
        }
        seen.insert(key.clone(), units.len());
        units.push(Unit {
            key,
            restored: restored.canonical,
            canonical: form.canonical,
            family: form.family,
            count: *count,
        });
    }
    Ok(units)
}

fn apostrophized(restored: &str) -> Option<String> {
    let mut chars = restored.chars();
    if chars.next() != Some('O') {
        return None;
    }
    let next = chars.next()?;
    if !next.is_alphabetic() {
        return None;
    }
    let rest: String = chars.collect();
    Some(format!("O'{}{}", next.to_uppercase(), rest))
}

fn upper_index(map: &BTreeMap<String, String>) -> BTreeMap<String, &str> {
    map.iter().map(|(k, v)| (k.to_uppercase(), v.as_str())).collect()
}

/// Detects variant groups in a loaded list.
///
/// Groups come from the name rules (prefix family, apostrophe folding),
/// from bare `O`-names with an apostrophized counterpart in the same list,
/// from the reference table's redirects, and from feminine endings whose
/// masculine form is present. Lexicon exceptions without reference support
/// are reported as single-member uncertain proposals.
pub fn propose_variant_merges(
    entries: &[(String, u64)],
    rules: &NameRules,
    suffixes: &FeminineSuffixTable,
    reference: Option<&FrequencyTable>,
) -> Result<Vec<MergeProposal>, FreqError> {
    let units = build_units(entries, rules)?;
    let ref_redirects = reference.map(|r| upper_index(&r.redirects));
    let ref_rows: Option<BTreeSet<String>> = reference.map(|r| r.rows.keys().map(|k| k.to_uppercase()).collect());

    // Group key for every unit, plus whether the reference backs it.
    let mut group_of: Vec<String> = Vec::with_capacity(units.len());
    let mut supported: Vec<bool> = Vec::with_capacity(units.len());
    let mut bare_o: Vec<bool> = vec![false; units.len()];
    for unit in &units {
        let upper = unit.restored.to_uppercase();
        let via_redirect = ref_redirects.as_ref().and_then(|m| m.get(&upper).copied());
        match via_redirect {
            Some(target) => {
                group_of.push(target.to_string());
                supported.push(true);
            }
            None => {
                let in_rows = ref_rows.as_ref().is_some_and(|rows| rows.contains(&unit.canonical.to_uppercase()));
                group_of.push(unit.canonical.clone());
                supported.push(in_rows && unit.restored == unit.canonical);
            }
        }
    }
    let keys: BTreeSet<String> = group_of.iter().cloned().collect();
    for (i, unit) in units.iter().enumerate() {
        if unit.family != Family::Plain || group_of[i] != unit.canonical {
            continue;
        }
        if let Some(target) = apostrophized(&unit.restored) {
            if keys.contains(&target) {
                group_of[i] = target;
                bare_o[i] = true;
            }
        }
    }

    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, key) in group_of.iter().enumerate() {
        groups.entry(key.clone()).or_default().push(i);
    }

    let mut proposals = Vec::new();
    for (canonical, members) in &groups {
        if members.len() < 2 {
            continue;
        }
        let names: BTreeSet<String> = members.iter().map(|&i| units[i].key.clone()).collect();
        let with_exception = members.iter().any(|&i| units[i].family == Family::Exception);
        let any_bare_o = members.iter().any(|&i| bare_o[i]);
        let (confidence, reason) = if reference.is_some() {
            if members.iter().all(|&i| supported[i]) && !any_bare_o {
                (Confidence::Certain, MergeReason::ReferenceMatch)
            } else {
                (Confidence::Uncertain, rule_reason(&units, members, any_bare_o))
            }
        } else if with_exception || any_bare_o {
            (Confidence::Uncertain, rule_reason(&units, members, any_bare_o))
        } else {
            (Confidence::Certain, rule_reason(&units, members, any_bare_o))
        };
        proposals.push(MergeProposal::new(names, canonical.clone(), confidence, reason));
    }

    // Lexicon exceptions: a possible Mc- counterpart makes an uncertain
    // merge; otherwise the name is reported alone unless the reference has it.
    let plain_rules = NameRules::new(Default::default()).with_apostrophes(rules.apostrophes.clone());
    for (i, unit) in units.iter().enumerate() {
        if unit.family != Family::Exception {
            continue;
        }
        let counterpart = plain_rules
            .normalize(&unit.key)
            .ok()
            .filter(|f| f.family == Family::McFamily || f.family == Family::OFamily)
            .map(|f| f.canonical)
            .filter(|c| *c != group_of[i] && groups.contains_key(c));
        if let Some(target) = counterpart {
            let mut names: BTreeSet<String> = groups[&target].iter().map(|&j| units[j].key.clone()).collect();
            names.insert(unit.key.clone());
            proposals.push(MergeProposal::new(
                names,
                target,
                Confidence::Uncertain,
                MergeReason::PrefixFamily,
            ));
        } else if !supported[i] && groups[&group_of[i]].len() == 1 {
            proposals.push(MergeProposal::new(
                [unit.key.clone()].into(),
                group_of[i].clone(),
                Confidence::Uncertain,
                MergeReason::Exception,
            ));
        }
    }

    let masculine_index: BTreeSet<String> = groups.keys().cloned().collect();
    for (canonical, members) in &groups {
        let Some(base) = suffixes.detect_feminine(canonical, &masculine_index) else {
            continue;
        };
        if base == *canonical {
            continue;
        }
        let mut names: BTreeSet<String> = members.iter().map(|&i| units[i].key.clone()).collect();
        names.extend(groups[&base].iter().map(|&i| units[i].key.clone()));
        proposals.push(MergeProposal::new(names, base, Confidence::Certain, MergeReason::Feminine));
    }

    proposals.sort_by(|a, b| (&a.proposed_canonical, &a.id).cmp(&(&b.proposed_canonical, &b.id)));
    proposals.dedup_by(|a, b| a.id == b.id);
    Ok(proposals)
}

fn rule_reason(units: &[Unit], members: &[usize], bare_o: bool) -> MergeReason {
    if bare_o || members.iter().any(|&i| units[i].family == Family::OFamily) {
        MergeReason::Apostrophe
    } else {
        MergeReason::PrefixFamily
    }
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Lower index stays root so roots are deterministic.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Applies verdicts and sums approved groups into a canonical table.
///
/// Certain proposals without a verdict are approved implicitly. Members of a
/// rejected proposal that no approved proposal covers keep their restored
/// spelling as an independent row without a redirect.
pub fn apply_decisions_and_merge(
    source: SourceDescriptor,
    entries: &[(String, u64)],
    proposals: &[MergeProposal],
    decisions: &DecisionFile,
    rules: &NameRules,
) -> Result<FrequencyTable, FreqError> {
    let by_id: BTreeMap<&str, &MergeProposal> = proposals.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut verdicts: BTreeMap<&str, &Verdict> = BTreeMap::new();
    for (id, verdict) in &decisions.verdicts {
        if !by_id.contains_key(id.as_str()) {
            return Err(FreqError::UnknownProposal(id.clone()));
        }
        if verdicts.insert(id.as_str(), verdict).is_some() {
            return Err(FreqError::DuplicateVerdict(id.clone()));
        }
    }

    let units = build_units(entries, rules)?;
    let index: BTreeMap<&str, usize> = units.iter().enumerate().map(|(i, u)| (u.key.as_str(), i)).collect();
    let mut dsu = Dsu::new(units.len());
    let mut rejected = vec![false; units.len()];
    let mut renamed: BTreeMap<usize, String> = BTreeMap::new();
    let mut component_canonical: Vec<(usize, String, bool)> = Vec::new();

    for p in proposals {
        let verdict = match verdicts.get(p.id.as_str()) {
            Some(v) => (*v).clone(),
            None if p.confidence == Confidence::Certain => Verdict::Approve,
            None => return Err(FreqError::MissingVerdict(p.id.clone())),
        };
        let members: Vec<usize> = p.members.iter().filter_map(|m| index.get(m.as_str()).copied()).collect();
        if members.is_empty() {
            continue;
        }
        let (canonical, amended) = match verdict {
            Verdict::Reject => {
                if p.is_merge() {
                    for &m in &members {
                        rejected[m] = true;
                    }
                }
                continue;
            }
            Verdict::Approve => (p.proposed_canonical.clone(), false),
            Verdict::Amend(c) => {
                validate_canonical(&c, Family::Plain)?;
                (c, true)
            }
        };
        if !p.is_merge() {
            if amended {
                renamed.insert(members[0], canonical);
            }
            continue;
        }
        for w in members.windows(2) {
            dsu.union(w[0], w[1]);
        }
        component_canonical.push((members[0], canonical, amended));
    }

    // Resolve one canonical per merged component; amendments win over
    // proposed spellings, and two different choices are a conflict.
    let mut chosen: BTreeMap<usize, (String, bool)> = BTreeMap::new();
    for (member, canonical, amended) in component_canonical {
        let root = dsu.find(member);
        match chosen.get(&root) {
            None => {
                chosen.insert(root, (canonical, amended));
            }
            Some((existing, existing_amended)) => {
                if *existing == canonical {
                    continue;
                }
                match (existing_amended, amended) {
                    (false, true) => {
                        chosen.insert(root, (canonical, true));
                    }
                    (true, false) => {}
                    _ => return Err(FreqError::ConflictingCanonicals(existing.clone(), canonical)),
                }
            }
        }
    }

    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..units.len() {
        *sizes.entry(dsu.find(i)).or_default() += 1;
    }

    let mut table = FrequencyTable::new(source);
    let mut redirects: Vec<(String, String)> = Vec::new();
    for (i, unit) in units.iter().enumerate() {
        let root = dsu.find(i);
        let merged = sizes[&root] > 1;
        let key = if merged {
            let canonical = chosen
                .get(&root)
                .map(|(c, _)| c.clone())
                .unwrap_or_else(|| unit.canonical.clone());
            for spelling in [&unit.restored, &unit.canonical] {
                if *spelling != canonical {
                    redirects.push((spelling.clone(), canonical.clone()));
                }
            }
            canonical
        } else if let Some(new_name) = renamed.get(&i) {
            redirects.push((unit.restored.clone(), new_name.clone()));
            new_name.clone()
        } else if rejected[i] {
            unit.restored.clone()
        } else {
            if unit.restored != unit.canonical {
                redirects.push((unit.restored.clone(), unit.canonical.clone()));
            }
            unit.canonical.clone()
        };
        *table.rows.entry(key).or_insert(0) += unit.count;
    }
    for (variant, canonical) in redirects {
        if variant != canonical && !table.rows.contains_key(&variant) {
            table.redirects.insert(variant, canonical);
        }
    }
    table.validate()?;
    Ok(table)
}

/// Keeps rows with `count >= minimum` and the redirects that still resolve.
pub fn threshold_filter(table: &FrequencyTable, minimum: u64) -> FrequencyTable {
    let rows: BTreeMap<String, u64> = table
        .rows
        .iter()
        .filter(|(_, &c)| c >= minimum)
        .map(|(k, &c)| (k.clone(), c))
        .collect();
    let redirects = table
        .redirects
        .iter()
        .filter(|(_, target)| rows.contains_key(*target))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    FrequencyTable {
        source: table.source.clone(),
        rows,
        redirects,
    }
}
