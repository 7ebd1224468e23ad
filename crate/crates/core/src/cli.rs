//! The `names` command line: one subcommand per pipeline stage, each
//! writing a run manifest next to its primary output.
//!
//! Exit codes: 0 success, 1 validation findings or data errors, 2 usage or
//! configuration errors, 3 I/O errors.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{NaiveDate, NaiveDateTime};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::dictionary::{validate_publication, DictionaryStore, Edit, HeadwordRange, TIME_FORMAT};
use crate::evidence::{
    format_fiant_citation, format_igi_citation, read_citations_tsv, select_early_bearers, write_citations_tsv,
    EvidenceCitation, FiantLabels, SelectionPolicy, TieBreak,
};
use crate::fiants::{parse_fiants_volume, parse_volume_xml, volume_to_xml, FiantsContext, OcrCorrections, ParseQuality};
use crate::freqlist::{
    apply_decisions_and_merge, load_frequency_list, propose_variant_merges, threshold_filter, write_proposals,
    Confidence, DecisionFile, FrequencyTable, LoadedList, Region, SourceDescriptor, SourceRole,
};
use crate::gazetteer::Gazetteer;
use crate::igi::{
    clean_igi_record, deduplicate_sharded, observe_places, parse_igi_record, EventType, IgiRecord, IgiStore,
    IgiStoreBuilder, QueryFilter,
};
use crate::manifest::{manifest_path_for, RunManifest};
use crate::names::{ExceptionLexicon, FeminineSuffixTable, NameRules};
use crate::regnal::{Monarch, ReignTable};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Io(m) => write!(f, "i/o: {m}"),
            CliError::Failed(m) => f.write_str(m),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

macro_rules! classify {
    ($($ty:ty => |$e:ident| $is_io:expr),* $(,)?) => {
        $(impl From<$ty> for CliError {
            fn from($e: $ty) -> Self {
                if $is_io { CliError::Io($e.to_string()) } else { CliError::Failed($e.to_string()) }
            }
        })*
    };
}

classify! {
    crate::freqlist::FreqError => |e| matches!(e, crate::freqlist::FreqError::Io(_)),
    crate::gazetteer::GazetteerError => |e| matches!(e, crate::gazetteer::GazetteerError::Io { .. }),
    crate::igi::IgiError => |e| matches!(e, crate::igi::IgiError::Io(_)),
    crate::dictionary::DictError => |e| matches!(e, crate::dictionary::DictError::Io(_)),
    crate::manifest::ManifestError => |e| matches!(e, crate::manifest::ManifestError::Io(_)),
    crate::fiants::FiantsError => |e| { let _ = &e; false },
    crate::evidence::EvidenceError => |e| { let _ = &e; false },
    crate::regnal::RegnalError => |e| { let _ = &e; false },
    crate::names::NameError => |e| { let _ = &e; false },
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "names", version, about = "Surname dictionary data pipeline")]
pub struct Cli {
    /// TOML file naming the rule tables.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Frequency lists
    #[command(subcommand)]
    Freq(FreqCmd),
    /// County gazetteer
    #[command(subcommand)]
    Gaz(GazCmd),
    /// Genealogical event records
    #[command(subcommand)]
    Igi(IgiCmd),
    /// Calendared fiant volumes
    #[command(subcommand)]
    Fiants(FiantsCmd),
    /// Early-bearer evidence
    #[command(subcommand)]
    Evidence(EvidenceCmd),
    /// Dictionary store
    #[command(subcommand)]
    Dict(DictCmd),
}

#[derive(Debug, Args, Clone)]
pub struct SourceArgs {
    /// Source identifier, e.g. `1881`.
    #[arg(long = "source-id")]
    pub id: Option<String>,
    #[arg(long)]
    pub year: i32,
    #[arg(long, default_value = "GB")]
    pub region: String,
    #[arg(long, default_value = "subject")]
    pub role: String,
}

#[derive(Debug, Args, Clone)]
pub struct ReferenceArgs {
    /// Reference table rows (`canonical<TAB>count`).
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Reference table redirects (`variant<TAB>canonical`).
    #[arg(long)]
    pub reference_redirects: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum FreqCmd {
    /// Validate a raw `name<TAB>count` list.
    Load {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Propose variant merges for review.
    Propose {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        reference: ReferenceArgs,
        #[command(flatten)]
        desc: SourceArgs,
    },
    /// Apply reviewed decisions and write the merged table.
    Merge {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        decisions: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        reference: ReferenceArgs,
        #[command(flatten)]
        desc: SourceArgs,
    },
    /// Keep rows with at least `--min` bearers.
    Threshold {
        #[arg(long)]
        rows: PathBuf,
        #[arg(long)]
        redirects: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        min: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        desc: SourceArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum GazCmd {
    /// Map raw county names (one per line) to canonical names.
    Standardize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        gazetteer: Option<PathBuf>,
    },
    /// Write one review list per county.
    EmitReview {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        gazetteer: Option<PathBuf>,
    },
    /// Fold returned review lists into a new gazetteer.
    IngestReview {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        gazetteer: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum IgiCmd {
    /// Parse `|`-separated records.
    Parse {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Standardize counties and validate places.
    Clean {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        gazetteer: Option<PathBuf>,
        /// Accept every place seen under a resolvable county.
        #[arg(long)]
        learn_places: bool,
    },
    /// Drop near-duplicates.
    Dedup {
        #[arg(long = "in", alias = "input")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        shards: usize,
    },
    /// Build a queryable store from cleaned records.
    Index {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value_t = 16)]
        partitions: usize,
    },
    /// Records for one surname.
    Query {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        surname: String,
        #[arg(long)]
        county: Option<String>,
        #[arg(long)]
        century: Option<i32>,
        #[arg(long)]
        event_type: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum FiantsCmd {
    /// Segment and parse a volume into XML.
    Parse {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        volume: Option<String>,
        #[arg(long, default_value = "Elizabeth I")]
        monarch: String,
        #[arg(long)]
        gazetteer: Option<PathBuf>,
    },
}

#[derive(Debug, Args, Clone)]
pub struct PolicyArgs {
    #[arg(long, default_value_t = 1)]
    pub per_century: usize,
    #[arg(long, default_value_t = 1)]
    pub county_rank_depth: usize,
    #[arg(long, default_value = "earliest-date")]
    pub tie_break: String,
    #[arg(long, default_value_t = 1)]
    pub min_county_records: usize,
}

#[derive(Debug, Subcommand)]
pub enum EvidenceCmd {
    /// Choose early bearers for surnames from a record store.
    Select {
        #[arg(long)]
        store: PathBuf,
        /// Surnames to select for; all in the store when omitted.
        #[arg(long)]
        surname: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// Render citations from records or a fiant volume.
    Format {
        #[arg(long, conflicts_with = "fiants", required_unless_present = "fiants")]
        igi: Option<PathBuf>,
        #[arg(long)]
        fiants: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        gazetteer: Option<PathBuf>,
    },
    /// Add citations to dictionary entries.
    Attach {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        citations: PathBuf,
        #[command(flatten)]
        edit: EditArgs,
    },
}

#[derive(Debug, Args, Clone)]
pub struct EditArgs {
    #[arg(long, default_value = "pipeline")]
    pub editor: String,
    /// Timestamp `YYYY-MM-DDTHH:MM:SS`; now when omitted.
    #[arg(long)]
    pub at: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum DictCmd {
    /// Create a store from `main<TAB>variant;variant` lines.
    Init {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        clusters: PathBuf,
        #[command(flatten)]
        edit: EditArgs,
    },
    SetMain {
        #[arg(long)]
        dict: PathBuf,
        /// Any member of the cluster.
        #[arg(long)]
        member: String,
        #[arg(long)]
        new_main: String,
        #[command(flatten)]
        edit: EditArgs,
    },
    MoveSense {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long)]
        index: usize,
        #[command(flatten)]
        edit: EditArgs,
    },
    /// Record frequency snapshots on every entry (or `--headword`).
    Stats {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        rows: PathBuf,
        #[arg(long)]
        redirects: Option<PathBuf>,
        #[arg(long)]
        headword: Option<String>,
        #[arg(long)]
        overwrite: bool,
        #[arg(long)]
        location: Option<String>,
        #[command(flatten)]
        desc: SourceArgs,
        #[command(flatten)]
        edit: EditArgs,
    },
    /// Progress counts, or editor activity with `--activity FROM..TO`.
    Report {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        range: Option<String>,
        #[arg(long)]
        activity: Option<String>,
    },
    Export {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    Validate {
        input: PathBuf,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Require every table path to be given.
    #[serde(default)]
    pub production: bool,
    #[serde(default)]
    pub tables: Tables,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tables {
    pub lexicon: Option<PathBuf>,
    pub feminine_suffixes: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
    pub reign_table: Option<PathBuf>,
    pub ocr_corrections: Option<PathBuf>,
}

/// Rule tables in effect for a run.
pub struct Env {
    pub rules: NameRules,
    pub suffixes: FeminineSuffixTable,
    pub gazetteer: Gazetteer,
    pub reigns: ReignTable,
    pub ocr: OcrCorrections,
    pub config_bytes: Option<Vec<u8>>,
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    s.into()
}

impl Env {
    pub fn load(config: Option<&Path>) -> CliResult<Self> {
        let (cfg, bytes, base) = match config {
            Some(p) => {
                let bytes = fs::read(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                let text = String::from_utf8(bytes.clone()).map_err(|e| CliError::Usage(e.to_string()))?;
                let cfg: Config = toml::from_str(&text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
                (cfg, Some(bytes), p.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (Config::default(), None, PathBuf::new()),
        };
        let t = &cfg.tables;
        if cfg.production {
            let missing: Vec<&str> = [
                ("lexicon", &t.lexicon),
                ("feminine_suffixes", &t.feminine_suffixes),
                ("gazetteer", &t.gazetteer),
                ("reign_table", &t.reign_table),
                ("ocr_corrections", &t.ocr_corrections),
            ]
            .into_iter()
            .filter(|(_, p)| p.is_none())
            .map(|(n, _)| n)
            .collect();
            if !missing.is_empty() {
                return Err(CliError::Usage(format!("production config lacks tables: {}", missing.join(", "))));
            }
        }
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| base.join(p));
        let lexicon = match path(&t.lexicon) {
            Some(p) => ExceptionLexicon::from_tsv(open(&p)?)?,
            None => ExceptionLexicon::builtin(),
        };
        let suffixes = match path(&t.feminine_suffixes) {
            Some(p) => FeminineSuffixTable::from_tsv(open(&p)?)?,
            None => FeminineSuffixTable::builtin(),
        };
        let gazetteer = match path(&t.gazetteer) {
            Some(p) => Gazetteer::load(&p)?,
            None => Gazetteer::builtin(),
        };
        let reigns = match path(&t.reign_table) {
            Some(p) => ReignTable::from_tsv(open(&p)?)?,
            None => ReignTable::builtin(),
        };
        let ocr = match path(&t.ocr_corrections) {
            Some(p) => OcrCorrections::from_tsv(open(&p)?)?,
            None => OcrCorrections::default(),
        };
        Ok(Env { rules: NameRules::new(lexicon), suffixes, gazetteer, reigns, ocr, config_bytes: bytes })
    }

    fn manifest(&self, command: &str) -> RunManifest {
        let mut m = RunManifest::new(command);
        if let Some(b) = &self.config_bytes {
            m.set_config(b);
        }
        m
    }

    fn gazetteer(&self, over: &Option<PathBuf>) -> CliResult<Gazetteer> {
        match over {
            Some(p) => Ok(Gazetteer::load(p)?),
            None => Ok(self.gazetteer.clone()),
        }
    }
}

fn descriptor(a: &SourceArgs, fallback_id: &Path) -> CliResult<SourceDescriptor> {
    let id = a.id.clone().unwrap_or_else(|| {
        fallback_id.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "source".into())
    });
    let region: Region = a.region.parse().map_err(|e: crate::freqlist::FreqError| CliError::Usage(e.to_string()))?;
    let role: SourceRole = a.role.parse().map_err(|e: crate::freqlist::FreqError| CliError::Usage(e.to_string()))?;
    SourceDescriptor::new(id, a.year, region, role).map_err(|e| CliError::Usage(e.to_string()))
}

fn reference_table(r: &ReferenceArgs) -> CliResult<Option<FrequencyTable>> {
    let Some(rows) = &r.reference else {
        return Ok(None);
    };
    let src = SourceDescriptor::new(
        rows.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        2000,
        Region::GB,
        SourceRole::Reference,
    )?;
    let redirects = r.reference_redirects.as_deref().map(open).transpose()?;
    Ok(Some(FrequencyTable::read(src, open(rows)?, redirects)?))
}

fn read_table(rows: &Path, redirects: Option<&Path>, src: SourceDescriptor) -> CliResult<FrequencyTable> {
    let red = redirects.map(open).transpose()?;
    Ok(FrequencyTable::read(src, open(rows)?, red)?)
}

fn nonblank_lines(path: &Path) -> CliResult<u64> {
    let mut n = 0;
    for line in open(path)?.lines() {
        if !line?.trim().is_empty() {
            n += 1;
        }
    }
    Ok(n)
}

fn write_table(dir: &Path, t: &FrequencyTable) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    let mut rows = create(&dir.join("rows.tsv"))?;
    t.write_rows(&mut rows)?;
    rows.flush()?;
    let mut red = create(&dir.join("redirects.tsv"))?;
    t.write_redirects(&mut red)?;
    red.flush()?;
    Ok(())
}

fn load_entries(path: &Path, src: &SourceDescriptor, rules: &NameRules) -> CliResult<LoadedList> {
    Ok(load_frequency_list(open(path)?, src, rules)?)
}

fn edit_of(a: &EditArgs) -> CliResult<Edit> {
    let at = match &a.at {
        Some(s) => NaiveDateTime::parse_from_str(s, TIME_FORMAT).map_err(|e| CliError::Usage(format!("--at: {e}")))?,
        None => chrono::Utc::now().naive_utc().with_nanosecond_zero(),
    };
    Ok(Edit::new(&a.editor, at))
}

trait NoNanos {
    fn with_nanosecond_zero(self) -> Self;
}

impl NoNanos for NaiveDateTime {
    fn with_nanosecond_zero(self) -> Self {
        use chrono::Timelike;
        self.with_nanosecond(0).unwrap_or(self)
    }
}

type NumberedRecords = Vec<(u64, IgiRecord)>;
type LineRejects = Vec<(u64, String, String)>;

/// Reads a record file, returning `(line_no, record)` pairs and the lines
/// that failed to parse.
fn read_records(path: &Path, rules: &NameRules) -> CliResult<(NumberedRecords, LineRejects)> {
    let mut ok = Vec::new();
    let mut bad = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        match parse_igi_record(&line, rules) {
            Ok(r) => ok.push((i as u64 + 1, r)),
            Err(e) => bad.push((i as u64 + 1, e.code().to_string(), line)),
        }
    }
    Ok((ok, bad))
}

fn write_records<'a>(path: &Path, recs: impl IntoIterator<Item = &'a IgiRecord>) -> CliResult<u64> {
    let mut out = create(path)?;
    let mut n = 0;
    for r in recs {
        writeln!(out, "{}", r.to_line())?;
        n += 1;
    }
    out.flush()?;
    Ok(n)
}

fn write_rejects(path: &Path, rejects: &[(u64, String, String)]) -> CliResult<()> {
    let mut out = create(path)?;
    for (line, reason, text) in rejects {
        writeln!(out, "{line}\t{reason}\t{text}")?;
    }
    out.flush()?;
    Ok(())
}

fn finish(m: &mut RunManifest, primary: &Path) -> CliResult<()> {
    m.write(&manifest_path_for(primary))?;
    Ok(())
}

/// What a successful command reports back.
#[derive(Debug, Default)]
pub struct Outcome {
    pub findings: usize,
}

pub fn execute(cli: Cli) -> CliResult<Outcome> {
    let env = Env::load(cli.config.as_deref())?;
    match cli.command {
        Command::Freq(c) => freq(&env, c),
        Command::Gaz(c) => gaz(&env, c),
        Command::Igi(c) => igi(&env, c),
        Command::Fiants(c) => fiants(&env, c),
        Command::Evidence(c) => evidence(&env, c),
        Command::Dict(c) => dict(&env, c),
    }
}

fn freq(env: &Env, cmd: FreqCmd) -> CliResult<Outcome> {
    match cmd {
        FreqCmd::Load { input, out, source } => {
            let src = descriptor(&source, &input)?;
            let lines = nonblank_lines(&input)?;
            let list = load_entries(&input, &src, &env.rules)?;
            for w in &list.warnings {
                eprintln!("warning: {w}");
            }
            let mut o = create(&out)?;
            for (name, count) in &list.entries {
                writeln!(o, "{name}\t{count}")?;
            }
            o.flush()?;
            let rej_path = sibling(&out, ".rejects.tsv");
            let mut r = create(&rej_path)?;
            list.write_rejects(&mut r)?;
            r.flush()?;
            let mut m = env.manifest("freq load");
            m.add_input(&input)?;
            m.add_output(&out)?;
            m.add_output(&rej_path)?;
            let rejected = list.rejects.len() as u64;
            m.stage("load", lines, lines - rejected, rejected)?;
            finish(&mut m, &out)?;
        }
        FreqCmd::Propose { source, out, reference, desc } => {
            let src = descriptor(&desc, &source)?;
            let list = load_entries(&source, &src, &env.rules)?;
            let reference_t = reference_table(&reference)?;
            let proposals = propose_variant_merges(&list.entries, &env.rules, &env.suffixes, reference_t.as_ref())?;
            let mut o = create(&out)?;
            write_proposals(&proposals, &mut o)?;
            o.flush()?;
            let uncertain = proposals.iter().filter(|p| p.confidence == Confidence::Uncertain).count();
            eprintln!("{} proposals, {uncertain} need review", proposals.len());
            let mut m = env.manifest("freq propose");
            m.add_input(&source)?;
            for p in [&reference.reference, &reference.reference_redirects].into_iter().flatten() {
                m.add_input(p)?;
            }
            m.add_output(&out)?;
            finish(&mut m, &out)?;
        }
        FreqCmd::Merge { source, decisions, out, reference, desc } => {
            let src = descriptor(&desc, &source)?;
            let list = load_entries(&source, &src, &env.rules)?;
            let reference_t = reference_table(&reference)?;
            let proposals = propose_variant_merges(&list.entries, &env.rules, &env.suffixes, reference_t.as_ref())?;
            let verdicts = DecisionFile::from_tsv(open(&decisions)?)?;
            let table = apply_decisions_and_merge(src, &list.entries, &proposals, &verdicts, &env.rules)?;
            write_table(&out, &table)?;
            let mut m = env.manifest("freq merge");
            m.add_input(&source)?;
            m.add_input(&decisions)?;
            m.add_output(&out.join("rows.tsv"))?;
            m.add_output(&out.join("redirects.tsv"))?;
            m.stage("merge-bearers", list.accepted_total(), table.total(), 0)?;
            finish(&mut m, &out)?;
        }
        FreqCmd::Threshold { rows, redirects, min, out, desc } => {
            let table = read_table(&rows, redirects.as_deref(), descriptor(&desc, &rows)?)?;
            let kept = threshold_filter(&table, min);
            write_table(&out, &kept)?;
            let mut m = env.manifest("freq threshold");
            m.add_input(&rows)?;
            if let Some(r) = &redirects {
                m.add_input(r)?;
            }
            m.add_output(&out.join("rows.tsv"))?;
            m.add_output(&out.join("redirects.tsv"))?;
            let (n, k) = (table.rows.len() as u64, kept.rows.len() as u64);
            m.stage("threshold", n, k, n - k)?;
            finish(&mut m, &out)?;
        }
    }
    Ok(Outcome::default())
}

fn gaz(env: &Env, cmd: GazCmd) -> CliResult<Outcome> {
    match cmd {
        GazCmd::Standardize { input, out, gazetteer } => {
            let g = env.gazetteer(&gazetteer)?;
            let mut o = create(&out)?;
            let mut rejects = Vec::new();
            let mut n = 0;
            for (i, line) in open(&input)?.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                n += 1;
                match g.standardize_county(&line) {
                    Ok(c) => writeln!(o, "{line}\t{c}")?,
                    Err(_) => rejects.push((i as u64 + 1, "unresolved-county".to_string(), line)),
                }
            }
            o.flush()?;
            let rej = sibling(&out, ".rejects.tsv");
            write_rejects(&rej, &rejects)?;
            let mut m = env.manifest("gaz standardize");
            m.add_input(&input)?;
            m.add_output(&out)?;
            m.add_output(&rej)?;
            let r = rejects.len() as u64;
            m.stage("standardize", n, n - r, r)?;
            finish(&mut m, &out)?;
        }
        GazCmd::EmitReview { out, gazetteer } => {
            let g = env.gazetteer(&gazetteer)?;
            let files = g.emit_review_lists(&out)?;
            eprintln!("{} review lists written", files.len());
            let mut m = env.manifest("gaz emit-review");
            m.add_output(&out)?;
            finish(&mut m, &out)?;
        }
        GazCmd::IngestReview { files, out, gazetteer } => {
            let g = env.gazetteer(&gazetteer)?;
            let ingest = g.ingest_review_results(&files)?;
            let next = g.apply_review(&ingest.updates);
            next.save(&out)?;
            let mal = out.join("malformed.tsv");
            let mut w = create(&mal)?;
            ingest.write_malformed(&mut w)?;
            w.flush()?;
            let mut m = env.manifest("gaz ingest-review");
            for f in &files {
                m.add_input(f)?;
            }
            m.add_output(&out)?;
            let u = &ingest.updates;
            let good = (u.confirmations.len() + u.corrections.len() + u.deletions.len()) as u64;
            let bad = ingest.malformed.len() as u64;
            m.stage("ingest", good + bad, good, bad)?;
            finish(&mut m, &out)?;
        }
    }
    Ok(Outcome::default())
}

fn igi(env: &Env, cmd: IgiCmd) -> CliResult<Outcome> {
    match cmd {
        IgiCmd::Parse { input, out } => {
            let (ok, bad) = read_records(&input, &env.rules)?;
            write_records(&out, ok.iter().map(|(_, r)| r))?;
            let rej = sibling(&out, ".rejects.tsv");
            write_rejects(&rej, &bad)?;
            let mut m = env.manifest("igi parse");
            m.add_input(&input)?;
            m.add_output(&out)?;
            m.add_output(&rej)?;
            m.stage("parse", (ok.len() + bad.len()) as u64, ok.len() as u64, bad.len() as u64)?;
            finish(&mut m, &out)?;
        }
        IgiCmd::Clean { input, out, gazetteer, learn_places } => {
            let (ok, bad) = read_records(&input, &env.rules)?;
            if !bad.is_empty() {
                return Err(CliError::Failed(format!("{} unparseable lines; run igi parse first", bad.len())));
            }
            let mut g = env.gazetteer(&gazetteer)?;
            if learn_places {
                g = observe_places(&g, ok.iter().map(|(_, r)| r));
            }
            let mut kept = Vec::new();
            let mut rejects = Vec::new();
            for (line, r) in &ok {
                match clean_igi_record(r, &g) {
                    Ok(c) => kept.push(c),
                    Err(rej) => rejects.push((*line, rej.reason.to_string(), r.to_line())),
                }
            }
            write_records(&out, &kept)?;
            let rej = sibling(&out, ".rejects.tsv");
            write_rejects(&rej, &rejects)?;
            let mut m = env.manifest("igi clean");
            m.add_input(&input)?;
            m.add_output(&out)?;
            m.add_output(&rej)?;
            m.stage("clean", ok.len() as u64, kept.len() as u64, rejects.len() as u64)?;
            finish(&mut m, &out)?;
        }
        IgiCmd::Dedup { input, out, shards } => {
            if shards == 0 {
                return Err(CliError::Usage("--shards must be at least 1".into()));
            }
            let (ok, bad) = read_records(&input, &env.rules)?;
            if !bad.is_empty() {
                return Err(CliError::Failed(format!("{} unparseable lines; run igi parse first", bad.len())));
            }
            let lines: Vec<u64> = ok.iter().map(|(l, _)| *l).collect();
            let recs: Vec<IgiRecord> = ok.into_iter().map(|(_, r)| r).collect();
            let report = deduplicate_sharded(&recs, shards);
            write_records(&out, report.retained.iter().map(|&i| &recs[i as usize]))?;
            let log = sibling(&out, ".deletions.tsv");
            let mut w = create(&log)?;
            report.write_deletion_log(&mut w, |i| lines[i as usize])?;
            w.flush()?;
            let mut m = env.manifest("igi dedup");
            m.add_input(&input)?;
            m.add_output(&out)?;
            m.add_output(&log)?;
            m.stage("dedup", recs.len() as u64, report.retained.len() as u64, report.deletions.len() as u64)?;
            finish(&mut m, &out)?;
        }
        IgiCmd::Index { input, store, partitions } => {
            let (ok, bad) = read_records(&input, &env.rules)?;
            if !bad.is_empty() {
                return Err(CliError::Failed(format!("{} unparseable lines", bad.len())));
            }
            let mut b = IgiStoreBuilder::new(&store, partitions.max(1));
            for (_, r) in &ok {
                b.append(r);
            }
            let s = b.seal()?;
            let mut m = env.manifest("igi index");
            m.add_input(&input)?;
            m.add_output(&store)?;
            m.stage("index", ok.len() as u64, s.record_count(), 0)?;
            finish(&mut m, &store)?;
        }
        IgiCmd::Query { store, surname, county, century, event_type, out } => {
            let s = IgiStore::open(&store)?;
            let event_type = event_type
                .map(|t| t.parse::<EventType>())
                .transpose()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let filter = QueryFilter { county, century, event_type };
            let recs = s.query(&surname, &filter)?;
            match out {
                Some(p) => {
                    write_records(&p, &recs)?;
                }
                None => {
                    let stdout = io::stdout();
                    let mut lock = stdout.lock();
                    for r in &recs {
                        writeln!(lock, "{}", r.to_line())?;
                    }
                }
            }
        }
    }
    Ok(Outcome::default())
}

fn fiants(env: &Env, cmd: FiantsCmd) -> CliResult<Outcome> {
    let FiantsCmd::Parse { input, out, volume, monarch, gazetteer } = cmd;
    let monarch: Monarch = monarch.parse().map_err(|e: crate::regnal::RegnalError| CliError::Usage(e.to_string()))?;
    let g = env.gazetteer(&gazetteer)?;
    let text = fs::read_to_string(&input).map_err(|e| CliError::Io(format!("{}: {e}", input.display())))?;
    let ctx = FiantsContext { monarch, reigns: &env.reigns, gazetteer: &g, rules: &env.rules, ocr: &env.ocr };
    let (recs, warnings) = parse_fiants_volume(&text, &ctx)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let mut by_quality: BTreeMap<ParseQuality, usize> = BTreeMap::new();
    for r in &recs {
        *by_quality.entry(r.quality).or_default() += 1;
    }
    for (q, n) in &by_quality {
        eprintln!("{q}\t{n}");
    }
    let volume = volume.unwrap_or_else(|| input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
    let out = out.unwrap_or_else(|| input.with_extension("xml"));
    fs::write(&out, volume_to_xml(&volume, &recs)).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let mut m = env.manifest("fiants parse");
    m.add_input(&input)?;
    m.add_output(&out)?;
    m.stage("parse", recs.len() as u64, recs.len() as u64, 0)?;
    finish(&mut m, &out)?;
    Ok(Outcome::default())
}

fn evidence(env: &Env, cmd: EvidenceCmd) -> CliResult<Outcome> {
    match cmd {
        EvidenceCmd::Select { store, surname, out, policy } => {
            let tie_break: TieBreak = policy.tie_break.parse().map_err(|e: crate::evidence::EvidenceError| CliError::Usage(e.to_string()))?;
            let p = SelectionPolicy {
                per_century: policy.per_century,
                county_rank_depth: policy.county_rank_depth,
                tie_break,
                min_county_records: policy.min_county_records,
            };
            p.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            let s = IgiStore::open(&store)?;
            let surnames: Vec<String> =
                if surname.is_empty() { s.surnames().map(str::to_string).collect() } else { surname };
            let mut chosen = Vec::new();
            let mut seen = 0u64;
            for sn in &surnames {
                let recs = s.query(sn, &QueryFilter::default())?;
                seen += recs.len() as u64;
                chosen.extend(select_early_bearers(&recs, &p));
            }
            let n = write_records(&out, &chosen)?;
            let mut m = env.manifest("evidence select");
            m.add_output(&out)?;
            m.stage("select", seen, n, seen - n)?;
            finish(&mut m, &out)?;
        }
        EvidenceCmd::Format { igi, fiants, out, gazetteer } => {
            let g = env.gazetteer(&gazetteer)?;
            let mut cites: Vec<EvidenceCitation> = Vec::new();
            let mut failed: Vec<(u64, String, String)> = Vec::new();
            let input = match (igi, fiants) {
                (Some(path), _) => {
                    let (ok, bad) = read_records(&path, &env.rules)?;
                    failed.extend(bad);
                    for (line, r) in ok {
                        match format_igi_citation(&r, &g) {
                            Ok(c) => cites.push(c),
                            Err(e) => failed.push((line, e.to_string(), r.to_line())),
                        }
                    }
                    path
                }
                (None, Some(path)) => {
                    let xml = fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                    let recs = parse_volume_xml(&xml).map_err(CliError::Failed)?;
                    let labels = FiantLabels::default();
                    for r in &recs {
                        for i in 0..r.persons.len().max(1) {
                            match format_fiant_citation(r, i, &labels) {
                                Ok(c) => cites.push(c),
                                Err(e) => failed.push((r.number as u64, e.to_string(), r.raw_text.clone())),
                            }
                        }
                    }
                    path
                }
                (None, None) => return Err(CliError::Usage("one of --igi or --fiants is required".into())),
            };
            let mut w = create(&out)?;
            write_citations_tsv(&mut w, &cites)?;
            w.flush()?;
            let rej = sibling(&out, ".rejects.tsv");
            write_rejects(&rej, &failed)?;
            let mut m = env.manifest("evidence format");
            m.add_input(&input)?;
            m.add_output(&out)?;
            m.add_output(&rej)?;
            let (c, f) = (cites.len() as u64, failed.len() as u64);
            m.stage("format", c + f, c, f)?;
            finish(&mut m, &out)?;
        }
        EvidenceCmd::Attach { dict, citations, edit } => {
            let edit = edit_of(&edit)?;
            let mut store = DictionaryStore::load(&dict)?;
            let cites = read_citations_tsv(open(&citations)?)?;
            let mut by_surname: BTreeMap<String, Vec<EvidenceCitation>> = BTreeMap::new();
            for c in cites.iter() {
                by_surname.entry(c.surname.clone()).or_default().push(c.clone());
            }
            let mut attached = 0u64;
            let mut unmatched = 0u64;
            let mut enhanced = 0u64;
            for (surname, cs) in &by_surname {
                if store.entry(surname).is_none() {
                    eprintln!("no entry for {surname}: {} citations skipped", cs.len());
                    unmatched += cs.len() as u64;
                    continue;
                }
                let added = store.attach_evidence(surname, None, cs, &edit)? as u64;
                if added > 0 {
                    enhanced += 1;
                }
                attached += cs.len() as u64;
            }
            store.save(&dict)?;
            eprintln!("{enhanced} entries enhanced");
            let mut m = env.manifest("evidence attach");
            m.add_input(&citations)?;
            m.add_output(&dict.join("index.tsv"))?;
            m.stage("attach", cites.len() as u64, attached, unmatched)?;
            finish(&mut m, &dict)?;
        }
    }
    Ok(Outcome::default())
}

fn parse_day(s: &str) -> CliResult<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|e| CliError::Usage(format!("{s:?}: {e}")))
}

fn dict(env: &Env, cmd: DictCmd) -> CliResult<Outcome> {
    let mutate = |dict: &Path, name: &str, f: &mut dyn FnMut(&mut DictionaryStore) -> CliResult<()>| -> CliResult<()> {
        let mut store = DictionaryStore::load(dict)?;
        f(&mut store)?;
        store.save(dict)?;
        let mut m = env.manifest(name);
        m.add_output(&dict.join("index.tsv"))?;
        finish(&mut m, dict)
    };
    match cmd {
        DictCmd::Init { dict, clusters, edit } => {
            let edit = edit_of(&edit)?;
            let mut store = DictionaryStore::new();
            for line in open(&clusters)?.lines() {
                let line = line?;
                if line.trim().is_empty() || line.starts_with('#') {
                    continue;
                }
                let (main, variants) = line.split_once('\t').unwrap_or((line.as_str(), ""));
                store.add_main(main.trim(), &edit)?;
                for v in variants.split(';').map(str::trim).filter(|v| !v.is_empty()) {
                    store.add_variant(v, main.trim(), &edit)?;
                }
            }
            store.save(&dict)?;
            let mut m = env.manifest("dict init");
            m.add_input(&clusters)?;
            m.add_output(&dict.join("index.tsv"))?;
            finish(&mut m, &dict)?;
        }
        DictCmd::SetMain { dict, member, new_main, edit } => {
            let edit = edit_of(&edit)?;
            mutate(&dict, "dict set-main", &mut |s| Ok(s.set_main_name(&member, &new_main, &edit)?))?;
        }
        DictCmd::MoveSense { dict, from, to, index, edit } => {
            let edit = edit_of(&edit)?;
            mutate(&dict, "dict move-sense", &mut |s| Ok(s.move_sense(&from, &to, index, &edit)?))?;
        }
        DictCmd::Stats { dict, rows, redirects, headword, overwrite, location, desc, edit } => {
            let edit = edit_of(&edit)?;
            let table = read_table(&rows, redirects.as_deref(), descriptor(&desc, &rows)?)?;
            mutate(&dict, "dict stats", &mut |s| {
                let heads: Vec<String> = match &headword {
                    Some(h) => vec![h.clone()],
                    None => s.entries().map(|e| e.headword.clone()).collect(),
                };
                for h in heads {
                    s.record_entry_statistics(&h, &table, overwrite, location.as_deref(), &edit)?;
                }
                Ok(())
            })?;
        }
        DictCmd::Report { dict, range, activity } => {
            let store = DictionaryStore::load(&dict)?;
            let stdout = io::stdout();
            let mut out = stdout.lock();
            match activity {
                Some(w) => {
                    let (a, b) = w.split_once("..").ok_or_else(|| CliError::Usage(format!("window {w:?}")))?;
                    let rep = store.editor_activity_report(parse_day(a)?, parse_day(b)?).map_err(|e| CliError::Usage(e.to_string()))?;
                    for (editor, n) in rep {
                        writeln!(out, "{editor}\t{n}")?;
                    }
                }
                None => {
                    let r = range
                        .as_deref()
                        .map(HeadwordRange::parse)
                        .transpose()
                        .map_err(|e| CliError::Usage(e.to_string()))?;
                    write!(out, "{}", store.progress_report(r.as_ref()).to_text())?;
                }
            }
        }
        DictCmd::Export { dict, out } => {
            let store = DictionaryStore::load(&dict)?;
            fs::write(&out, store.export_publisher_xml())?;
            let mut m = env.manifest("dict export");
            m.add_input(&dict.join("index.tsv"))?;
            m.add_output(&out)?;
            m.stage("export", store.len() as u64, store.len() as u64, 0)?;
            finish(&mut m, &out)?;
        }
        DictCmd::Validate { input } => {
            let xml = fs::read_to_string(&input).map_err(|e| CliError::Io(format!("{}: {e}", input.display())))?;
            let findings = validate_publication(&xml)?;
            let stdout = io::stdout();
            let mut out = stdout.lock();
            for f in &findings {
                writeln!(out, "{f}")?;
            }
            return Ok(Outcome { findings: findings.len() });
        }
    }
    Ok(Outcome::default())
}

/// Parses arguments, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(o) if o.findings > 0 => 1,
        Ok(_) => 0,
        Err(e) => {
            eprintln!("names: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_in(dir: &Path, args: &[&str]) -> i32 {
        let mut v = vec!["names".to_string()];
        v.extend(args.iter().map(|a| a.replace("@", &dir.display().to_string())));
        run(v)
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["names", "nope"]), 2);
        assert_eq!(run(["names", "freq", "load"]), 2);
    }

    #[test]
    fn missing_input_exits_3() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(run_in(dir.path(), &["igi", "parse", "--input", "@/none.psv", "--out", "@/o.psv"]), 3);
    }

    #[test]
    fn production_config_requires_tables() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("c.toml"), "production = true\n").unwrap();
        fs::write(dir.path().join("x.psv"), "").unwrap();
        assert_eq!(
            run_in(dir.path(), &["--config", "@/c.toml", "igi", "parse", "--input", "@/x.psv", "--out", "@/o.psv"]),
            2
        );
        fs::write(dir.path().join("bad.toml"), "unknown = 1\n").unwrap();
        assert_eq!(
            run_in(dir.path(), &["--config", "@/bad.toml", "igi", "parse", "--input", "@/x.psv", "--out", "@/o.psv"]),
            2
        );
    }

    #[test]
    fn freq_load_writes_manifest_with_balanced_counts() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("raw.tsv"), "MCDONALD\t100\nMACDONALD\t50\nBAD1\t3\n\nX\tabc\n").unwrap();
        let code = run_in(dir.path(), &["freq", "load", "--input", "@/raw.tsv", "--out", "@/l.tsv", "--year", "1881"]);
        assert_eq!(code, 0);
        let m = RunManifest::read(&dir.path().join("l.tsv.manifest.json")).unwrap();
        let s = m.stages["load"];
        assert_eq!((s.input, s.output, s.rejected), (4, 2, 2));
        assert_eq!(fs::read_to_string(dir.path().join("l.tsv")).unwrap(), "MCDONALD\t100\nMACDONALD\t50\n");
    }

    #[test]
    fn validate_exit_code_reflects_findings() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("ok.xml"), "<dictionary schema=\"1\"></dictionary>").unwrap();
        fs::write(
            dir.path().join("bad.xml"),
            "<dictionary><entry headword=\"A\" kind=\"variant\" variant-of=\"B\" status=\"unedited\"/></dictionary>",
        )
        .unwrap();
        assert_eq!(run_in(dir.path(), &["dict", "validate", "@/ok.xml"]), 0);
        assert_eq!(run_in(dir.path(), &["dict", "validate", "@/bad.xml"]), 1);
    }
}
