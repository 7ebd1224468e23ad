//! Surname casing and variant-family canonicalization.
//!
//! Source lists write every name in uppercase. [`NameRules::restore_case`]
//! turns `MCGAFFIN` into `McGaffin`, and [`NameRules::canonicalize`] folds the
//! Mac-/M'- spellings into Mc- and every apostrophe-like character in O-names
//! into U+0027. Names recorded in the [`ExceptionLexicon`] (Mach, Mackarel)
//! are never rewritten.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use thiserror::Error;

/// Apostrophe-like characters folded to U+0027 in O'- names.
pub const DEFAULT_APOSTROPHES: [char; 5] = ['\'', '`', '\u{00B4}', '\u{2018}', '\u{2019}'];

/// Minimum number of letters after `Mac` for the Mac- to Mc- rewrite.
/// `Mace` and `Mack` stay plain; `MacKay` becomes `McKay`.
pub const MAC_MIN_REST: usize = 2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NameError {
    #[error("empty name")]
    Empty,
    #[error("illegal character {ch:?} in name {name:?}")]
    IllegalCharacter { name: String, ch: char },
    #[error("canonical form {canonical:?} violates {family} invariants")]
    InvalidCanonical { canonical: String, family: Family },
    #[error("duplicate lexicon key {0:?}")]
    DuplicateLexiconKey(String),
    #[error("unknown name family {0:?}")]
    UnknownFamily(String),
    #[error("empty feminine suffix")]
    EmptySuffix,
    #[error("duplicate feminine suffix {0:?}")]
    DuplicateSuffix(String),
    #[error("line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("read error: {0}")]
    Io(String),
}

/// Which canonicalization rule produced a spelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Plain,
    McFamily,
    OFamily,
    Feminine,
    Exception,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Plain => "plain",
            Family::McFamily => "mc-family",
            Family::OFamily => "o-family",
            Family::Feminine => "feminine",
            Family::Exception => "exception",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "plain" => Ok(Family::Plain),
            "mc-family" => Ok(Family::McFamily),
            "o-family" => Ok(Family::OFamily),
            "feminine" => Ok(Family::Feminine),
            "exception" => Ok(Family::Exception),
            other => Err(NameError::UnknownFamily(other.to_string())),
        }
    }
}

/// A surname spelling as found in a source together with its display form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SurnameForm {
    pub raw: String,
    pub canonical: String,
    pub family: Family,
    /// The spelling this form redirects from, when canonicalization changed it.
    pub source_variant: Option<String>,
}

/// True when `c` may appear in a canonical surname.
pub fn is_canonical_char(c: char) -> bool {
    c.is_alphabetic() || c == '\'' || c == '-' || c == ' '
}

/// Checks the invariants a canonical surname of the given family must hold.
pub fn validate_canonical(canonical: &str, family: Family) -> Result<(), NameError> {
    let bad = || NameError::InvalidCanonical {
        canonical: canonical.to_string(),
        family,
    };
    if canonical.is_empty() || !canonical.chars().all(is_canonical_char) {
        return Err(bad());
    }
    let mut chars = canonical.chars();
    match family {
        Family::McFamily => {
            if !canonical.starts_with("Mc") {
                return Err(bad());
            }
            match chars.nth(2) {
                Some(c) if c.is_uppercase() => Ok(()),
                _ => Err(bad()),
            }
        }
        Family::OFamily => {
            if !canonical.starts_with("O'") {
                return Err(bad());
            }
            match chars.nth(2) {
                Some(c) if c.is_uppercase() => Ok(()),
                _ => Err(bad()),
            }
        }
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub canonical: String,
    /// The family the name would belong to on its own merits (informational).
    pub family: Family,
}

/// Names that look like prefix variants but are separate surnames.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExceptionLexicon {
    entries: BTreeMap<String, LexiconEntry>,
}

impl ExceptionLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Seeded with the two attested Mac- exceptions.
    pub fn builtin() -> Self {
        let mut lex = Self::new();
        lex.insert("Mach", Family::Plain).expect("builtin lexicon");
        lex.insert("Mackarel", Family::Plain).expect("builtin lexicon");
        lex
    }

    pub fn insert(&mut self, canonical: &str, family: Family) -> Result<(), NameError> {
        validate_canonical(canonical, family)?;
        let key = canonical.to_uppercase();
        if self.entries.contains_key(&key) {
            return Err(NameError::DuplicateLexiconKey(key));
        }
        self.entries.insert(
            key,
            LexiconEntry {
                canonical: canonical.to_string(),
                family,
            },
        );
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&LexiconEntry> {
        self.entries.get(&normalize_key(name))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &LexiconEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Reads `UPPERCASE_KEY<TAB>Canonical<TAB>family` rows. Blank lines and
    /// `#` comments are skipped.
    pub fn from_tsv<R: BufRead>(reader: R) -> Result<Self, NameError> {
        let mut lex = Self::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| NameError::Io(e.to_string()))?;
            let line_no = idx + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(NameError::MalformedRow {
                    line: line_no,
                    reason: format!("expected 3 columns, found {}", cols.len()),
                });
            }
            let key = cols[0].trim();
            let canonical = cols[1].trim();
            if key.to_uppercase() != canonical.to_uppercase() {
                return Err(NameError::MalformedRow {
                    line: line_no,
                    reason: format!("key {key:?} does not match canonical {canonical:?}"),
                });
            }
            let family: Family = cols[2].parse()?;
            lex.insert(canonical, family)?;
        }
        Ok(lex)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (key, entry) in &self.entries {
            out.push_str(&format!("{key}\t{}\t{}\n", entry.canonical, entry.family));
        }
        out
    }
}

fn normalize_key(name: &str) -> String {
    name.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_uppercase()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuffixRule {
    pub suffix: String,
    pub replacement: String,
    pub language: String,
}

/// Feminine surname endings and the masculine ending each maps to.
/// Rules are kept longest-suffix-first; equal lengths keep insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeminineSuffixTable {
    rules: Vec<SuffixRule>,
}

impl FeminineSuffixTable {
    pub fn new(rules: Vec<SuffixRule>) -> Result<Self, NameError> {
        let mut seen = BTreeSet::new();
        for rule in &rules {
            if rule.suffix.is_empty() {
                return Err(NameError::EmptySuffix);
            }
            if !seen.insert(rule.suffix.to_lowercase()) {
                return Err(NameError::DuplicateSuffix(rule.suffix.clone()));
            }
        }
        let mut rules = rules;
        rules.sort_by_key(|r| std::cmp::Reverse(r.suffix.chars().count()));
        Ok(Self { rules })
    }

    /// Czech and Polish endings, with the Czech `-ová` also in its ASCII-folded form.
    pub fn builtin() -> Self {
        let rule = |s: &str, r: &str, l: &str| SuffixRule {
            suffix: s.to_string(),
            replacement: r.to_string(),
            language: l.to_string(),
        };
        Self::new(vec![
            rule("ová", "", "cs"),
            rule("ova", "", "cs"),
            rule("ská", "ský", "cs"),
            rule("cká", "cký", "cs"),
            rule("ska", "ski", "pl"),
            rule("cka", "cki", "pl"),
            rule("dzka", "dzki", "pl"),
        ])
        .expect("builtin suffix table")
    }

    pub fn rules(&self) -> &[SuffixRule] {
        &self.rules
    }

    /// Reads `suffix<TAB>replacement<TAB>lang` rows; the replacement may be empty.
    pub fn from_tsv<R: BufRead>(reader: R) -> Result<Self, NameError> {
        let mut rules = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| NameError::Io(e.to_string()))?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(NameError::MalformedRow {
                    line: idx + 1,
                    reason: format!("expected 3 columns, found {}", cols.len()),
                });
            }
            rules.push(SuffixRule {
                suffix: cols[0].trim().to_string(),
                replacement: cols[1].trim().to_string(),
                language: cols[2].trim().to_string(),
            });
        }
        Self::new(rules)
    }

    /// The masculine base for `name` under the first (longest) matching rule,
    /// returned only when that base is present in `masculine_index`.
    pub fn detect_feminine(&self, name: &str, masculine_index: &BTreeSet<String>) -> Option<String> {
        let lower = name.to_lowercase();
        let rule = self
            .rules
            .iter()
            .find(|r| lower.ends_with(&r.suffix.to_lowercase()) && lower.len() > r.suffix.len())?;
        let cut = name.len() - rule.suffix.to_lowercase().len();
        if !name.is_char_boundary(cut) {
            return None;
        }
        let base = format!("{}{}", &name[..cut], rule.replacement);
        masculine_index.contains(&base).then_some(base)
    }
}

/// Free-function form of [`FeminineSuffixTable::detect_feminine`].
pub fn detect_feminine(
    name: &str,
    table: &FeminineSuffixTable,
    masculine_index: &BTreeSet<String>,
) -> Option<String> {
    table.detect_feminine(name, masculine_index)
}

/// Rule tables used to case and canonicalize names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NameRules {
    pub lexicon: ExceptionLexicon,
    pub apostrophes: Vec<char>,
}

impl Default for NameRules {
    fn default() -> Self {
        Self {
            lexicon: ExceptionLexicon::builtin(),
            apostrophes: DEFAULT_APOSTROPHES.to_vec(),
        }
    }
}

impl NameRules {
    pub fn new(lexicon: ExceptionLexicon) -> Self {
        Self {
            lexicon,
            apostrophes: DEFAULT_APOSTROPHES.to_vec(),
        }
    }

    pub fn with_apostrophes(mut self, apostrophes: Vec<char>) -> Self {
        if !apostrophes.contains(&'\'') {
            let mut a = vec!['\''];
            a.extend(apostrophes);
            self.apostrophes = a;
        } else {
            self.apostrophes = apostrophes;
        }
        self
    }

    pub fn is_apostrophe(&self, c: char) -> bool {
        self.apostrophes.contains(&c)
    }

    /// Characters accepted in raw source names.
    pub fn is_name_char(&self, c: char) -> bool {
        c.is_alphabetic() || c == '-' || c == ' ' || self.is_apostrophe(c)
    }

    /// Checks a raw name for emptiness and illegal characters, returning it
    /// trimmed with internal whitespace collapsed.
    pub fn clean_raw(&self, raw: &str) -> Result<String, NameError> {
        let cleaned = raw.split_whitespace().collect::<Vec<_>>().join(" ");
        if cleaned.is_empty() {
            return Err(NameError::Empty);
        }
        if let Some(ch) = cleaned.chars().find(|&c| !self.is_name_char(c)) {
            return Err(NameError::IllegalCharacter {
                name: raw.to_string(),
                ch,
            });
        }
        Ok(cleaned)
    }

    /// Restores display casing to an uppercase source name.
    pub fn restore_case(&self, raw: &str) -> Result<SurnameForm, NameError> {
        let cleaned = self.clean_raw(raw)?;
        if let Some(entry) = self.lexicon.get(&cleaned) {
            return Ok(SurnameForm {
                raw: raw.to_string(),
                canonical: entry.canonical.clone(),
                family: Family::Exception,
                source_variant: None,
            });
        }
        let canonical = cleaned
            .split(' ')
            .map(|word| {
                word.split('-')
                    .map(|part| self.case_part(part))
                    .collect::<Vec<_>>()
                    .join("-")
            })
            .collect::<Vec<_>>()
            .join(" ");
        let family = classify(&canonical);
        Ok(SurnameForm {
            raw: raw.to_string(),
            canonical,
            family,
            source_variant: None,
        })
    }

    fn case_part(&self, part: &str) -> String {
        let upper: Vec<char> = part.to_uppercase().chars().collect();
        let lower: Vec<char> = part.to_lowercase().chars().collect();
        if upper.len() != lower.len() || upper.is_empty() {
            // Case mapping changed the length (e.g. ß); use the plain rule.
            return capitalize(&part.to_lowercase());
        }
        let mut out = String::with_capacity(part.len());
        let letters_after = |from: usize| upper[from..].iter().filter(|c| c.is_alphabetic()).count();
        let cap_at = if upper.len() > 2 && upper[0] == 'M' && upper[1] == 'C' && upper[2].is_alphabetic() {
            Some(2)
        } else if upper.len() > 3
            && upper[0] == 'M'
            && upper[1] == 'A'
            && upper[2] == 'C'
            && upper[3].is_alphabetic()
            && letters_after(3) >= MAC_MIN_REST
        {
            Some(3)
        } else if upper.len() > 2
            && upper[0].is_alphabetic()
            && self.is_apostrophe(upper[1])
            && upper[2].is_alphabetic()
        {
            Some(2)
        } else {
            None
        };
        for (i, (&u, &l)) in upper.iter().zip(lower.iter()).enumerate() {
            if i == 0 || Some(i) == cap_at {
                out.push(u);
            } else {
                out.push(l);
            }
        }
        out
    }

    /// Folds prefix and apostrophe variants onto their canonical spelling.
    /// Idempotent; lexicon names pass through unchanged.
    pub fn canonicalize(&self, form: &SurnameForm) -> SurnameForm {
        if form.family == Family::Exception {
            return form.clone();
        }
        if let Some(entry) = self.lexicon.get(&form.canonical) {
            return SurnameForm {
                raw: form.raw.clone(),
                canonical: entry.canonical.clone(),
                family: Family::Exception,
                source_variant: form.source_variant.clone(),
            };
        }
        let chars: Vec<char> = form.canonical.chars().collect();
        let rewritten = if chars.len() > 2 && chars[0] == 'M' && chars[1] == 'c' && chars[2].is_alphabetic() {
            Some((Family::McFamily, 2))
        } else if chars.len() > 3
            && chars[0] == 'M'
            && chars[1] == 'a'
            && chars[2] == 'c'
            && chars[3].is_alphabetic()
            && chars[3..].iter().take_while(|c| c.is_alphabetic()).count() >= MAC_MIN_REST
        {
            Some((Family::McFamily, 3))
        } else if chars.len() > 2 && chars[0] == 'M' && self.is_apostrophe(chars[1]) && chars[2].is_alphabetic() {
            Some((Family::McFamily, 2))
        } else if chars.len() > 2 && chars[0] == 'O' && self.is_apostrophe(chars[1]) && chars[2].is_alphabetic() {
            Some((Family::OFamily, 2))
        } else {
            None
        };
        let Some((family, rest_at)) = rewritten else {
            let canonical = self.fold_apostrophes(&form.canonical);
            let source_variant = if canonical != form.canonical {
                form.source_variant.clone().or_else(|| Some(form.canonical.clone()))
            } else {
                form.source_variant.clone()
            };
            return SurnameForm {
                raw: form.raw.clone(),
                canonical,
                family: form.family,
                source_variant,
            };
        };
        let prefix = if family == Family::McFamily { "Mc" } else { "O'" };
        let mut canonical = String::from(prefix);
        let first: String = chars[rest_at].to_uppercase().collect();
        if first.chars().count() == 1 {
            canonical.push_str(&first);
        } else {
            canonical.push(chars[rest_at]);
        }
        canonical.extend(&chars[rest_at + 1..]);
        let canonical = self.fold_apostrophes(&canonical);
        let source_variant = if canonical != form.canonical {
            form.source_variant.clone().or_else(|| Some(form.canonical.clone()))
        } else {
            form.source_variant.clone()
        };
        SurnameForm {
            raw: form.raw.clone(),
            canonical,
            family,
            source_variant,
        }
    }

    fn fold_apostrophes(&self, s: &str) -> String {
        s.chars().map(|c| if self.is_apostrophe(c) { '\'' } else { c }).collect()
    }

    /// `restore_case` followed by `canonicalize`.
    pub fn normalize(&self, raw: &str) -> Result<SurnameForm, NameError> {
        Ok(self.canonicalize(&self.restore_case(raw)?))
    }
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn classify(canonical: &str) -> Family {
    let chars: Vec<char> = canonical.chars().take(3).collect();
    match chars.as_slice() {
        ['M', 'c', c] if c.is_uppercase() => Family::McFamily,
        ['O', '\'', c] if c.is_uppercase() => Family::OFamily,
        _ => Family::Plain,
    }
}

/// Restores casing using the default apostrophe set.
pub fn restore_case(raw: &str, lexicon: &ExceptionLexicon) -> Result<SurnameForm, NameError> {
    NameRules::new(lexicon.clone()).restore_case(raw)
}

/// Canonicalizes using the default apostrophe set.
pub fn canonicalize_name(form: &SurnameForm, lexicon: &ExceptionLexicon) -> SurnameForm {
    NameRules::new(lexicon.clone()).canonicalize(form)
}
