//! Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

mod common;

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::BufWriter;
use std::time::{Duration, Instant};

use common::*;
use rand::seq::SliceRandom;
use rand::Rng;
use surnames::dictionary::{validate_publication, DictionaryStore};
use surnames::evidence::{format_fiant_citation, format_igi_citation, FiantLabels};
use surnames::fiants::{parse_fiants_volume, FiantsContext, OcrCorrections};
use surnames::freqlist::{
    apply_decisions_and_merge, load_frequency_list, propose_variant_merges, threshold_filter, DecisionFile,
    FrequencyTable, Region, SourceDescriptor, SourceRole, Verdict,
};
use surnames::gazetteer::Gazetteer;
use surnames::igi::{clean_igi_record, deduplicate_sharded, parse_igi_record, DedupReport, IgiRecord};
use surnames::names::{ExceptionLexicon, Family, FeminineSuffixTable, NameRules};
use surnames::regnal::{Monarch, RegnalDate, ReignTable};

type Check = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<String, String> {
    let took = start.elapsed();
    ensure(took <= limit, || format!("took {took:.2?}, limit {limit:?}"))?;
    Ok(format!("{took:.2?}"))
}

fn ac1_darter() -> Check {
    let start = Instant::now();
    let line = "Bletsoe, Bedford, England|05 Sep 1629|Bletsoe, Bedford, England|Christening|1629|John|Darter|Principal's Father|Male";
    let g = Gazetteer::builtin();
    let parsed = parse_igi_record(line, &NameRules::default()).map_err(|e| e.to_string())?;
    let mut g = g;
    g.add_place("Bedfordshire", "Bletsoe").map_err(|e| e.to_string())?;
    let clean = clean_igi_record(&parsed, &g).map_err(|r| r.reason.to_string())?;
    let got = format_igi_citation(&clean, &g).map_err(|e| e.to_string())?.rendered;
    let want = "John <sn>Darter</sn>, 1629 in <src>IGI</src> (Bletsoe, Beds)";
    ensure(got == want, || format!("got {got:?}"))?;
    within(start, Duration::from_secs(1))
}

fn ac2_dowdall() -> Check {
    let start = Instant::now();
    let text = "1431. Pardon to Thomas Dowdall, of Dermondston, county Dublin, husbandman.\u{2014} 2 November, xi.";
    let (reigns, g, rules, ocr) = (ReignTable::builtin(), Gazetteer::builtin(), NameRules::default(), OcrCorrections::default());
    let ctx = FiantsContext { monarch: Monarch::ElizabethI, reigns: &reigns, gazetteer: &g, rules: &rules, ocr: &ocr };
    let (recs, _) = parse_fiants_volume(text, &ctx).map_err(|e| e.to_string())?;
    ensure(recs.len() == 1, || format!("{} records", recs.len()))?;
    let r = &recs[0];
    ensure(r.persons.len() == 1 && r.persons[0].occupation.as_deref() == Some("husbandman"), || {
        format!("persons {:?}", r.persons)
    })?;
    let got = format_fiant_citation(r, 0, &FiantLabels::default()).map_err(|e| e.to_string())?.rendered;
    let want = "Thomas <sn>Dowdall</sn>, 1569 in <src>Fiants Eliz</src> $1431 (Dermondston, co. Dublin)";
    ensure(got == want, || format!("got {got:?}"))?;
    within(start, Duration::from_secs(1))
}

fn ac3_regnal() -> Check {
    let table = ReignTable::builtin();
    let fixed = RegnalDate { monarch: Monarch::ElizabethI, regnal_year: 11, day_month: Some((2, 11)) };
    let y = table.to_calendar(&fixed).map_err(|e| e.to_string())?.year;
    ensure(y == 1569, || format!("Elizabeth xi 2 Nov gave {y}"))?;
    let mut r = rng(3);
    let mut converted = 0;
    for _ in 0..200 {
        let d = random_regnal_date(&mut r);
        let got = table.to_calendar(&d).ok().map(|c| c.year);
        let want = oracle_regnal_year(&table, &d);
        ensure(got == want, || format!("{d:?}: library {got:?}, oracle {want:?}"))?;
        converted += got.is_some() as usize;
    }
    Ok(format!("200 random dates agree ({converted} convertible)"))
}

fn dedup_matches_oracle(records: &[IgiRecord], report: &DedupReport) -> Result<(), String> {
    let (retained, deletions) = oracle_dedup(records);
    ensure(report.retained == retained, || "retained sets differ".into())?;
    let got: Vec<OracleDeletion> = report
        .deletions
        .iter()
        .map(|d| OracleDeletion { deleted: d.deleted, witness: d.witness, field: d.differing_field.map(|f| f.code()) })
        .collect();
    ensure(got == deletions, || "deletion logs differ".into())
}

fn chain_case() -> Result<(), String> {
    let rules = NameRules::default();
    let lines = [
        "b|1629|Bletsoe, Bedford, England|Christening|1629|John|Darter|P|Male",
        "b|1629|Bletsoe, Bedford, England|Christening|1629|Jno|Darter|P|Male",
        "b|1629|Sharnbrook, Bedford, England|Christening|1629|Jno|Darter|P|Male",
    ];
    let recs: Vec<IgiRecord> = lines.iter().map(|l| parse_igi_record(l, &rules).unwrap()).collect();
    let report = deduplicate_sharded(&recs, 4);
    ensure(report.retained == vec![0, 2], || format!("chain retained {:?}", report.retained))?;
    dedup_matches_oracle(&recs, &report)
}

fn ac4_dedup_oracle() -> Check {
    let start = Instant::now();
    chain_case()?;
    let mut deleted = 0;
    for seed in 0..100 {
        let n = rng(seed + 1000).gen_range(1..=2000);
        let recs = corpus(seed, n);
        let report = deduplicate_sharded(&recs, 8);
        dedup_matches_oracle(&recs, &report).map_err(|e| format!("corpus {seed}: {e}"))?;
        deleted += report.deletions.len();
    }
    let t = within(start, Duration::from_secs(30))?;
    Ok(format!("100 corpora and chain case, {deleted} deletions, {t}"))
}

fn ac5_shards() -> Check {
    for seed in 0..100 {
        let recs = corpus(seed, 1500);
        let one = deduplicate_sharded(&recs, 1);
        for shards in [4, 16] {
            let other = deduplicate_sharded(&recs, shards);
            ensure(one == other, || format!("corpus {seed}: 1 vs {shards} shards differ"))?;
            let (mut a, mut b) = (Vec::new(), Vec::new());
            one.write_deletion_log(&mut a, |i| i + 1).unwrap();
            other.write_deletion_log(&mut b, |i| i + 1).unwrap();
            ensure(a == b, || format!("corpus {seed}: deletion logs differ"))?;
        }
    }
    Ok("100 corpora, shards 1/4/16 identical".into())
}

fn ac6_conservation() -> Check {
    let rules = NameRules::default();
    let suffixes = FeminineSuffixTable::builtin();
    let mut r = rng(6);
    for case in 0..1000 {
        let src = SourceDescriptor::new("t", 1881, Region::GB, SourceRole::Subject).unwrap();
        let raw = raw_frequency_list(&mut r);
        let list = load_frequency_list(raw.as_bytes(), &src, &rules).map_err(|e| e.to_string())?;
        let proposals = propose_variant_merges(&list.entries, &rules, &suffixes, None).map_err(|e| e.to_string())?;
        let mut decisions = DecisionFile::new();
        for p in &proposals {
            let v = if r.gen_bool(0.5) { Verdict::Approve } else { Verdict::Reject };
            decisions.push(p.id.clone(), v);
        }
        let merged = apply_decisions_and_merge(src, &list.entries, &proposals, &decisions, &rules)
            .map_err(|e| format!("case {case}: {e}"))?;
        ensure(merged.total() == list.accepted_total(), || {
            format!("case {case}: merged {} != accepted {}", merged.total(), list.accepted_total())
        })?;
        check_redirect_closure(&merged, &list.entries, &rules).map_err(|e| format!("case {case}: {e}"))?;
        let kept = threshold_filter(&merged, 20);
        let want: BTreeSet<&String> = merged.rows.iter().filter(|(_, &c)| c >= 20).map(|(k, _)| k).collect();
        let got: BTreeSet<&String> = kept.rows.keys().collect();
        ensure(want == got, || format!("case {case}: threshold kept {got:?}"))?;
        ensure(kept.rows.iter().all(|(k, c)| merged.rows[k] == *c), || format!("case {case}: counts changed"))?;
        kept.validate().map_err(|e| format!("case {case}: {e}"))?;
    }
    Ok("1000 entry sets conserve totals; redirects closed; threshold 20 exact".into())
}

fn check_redirect_closure(t: &FrequencyTable, entries: &[(String, u64)], rules: &NameRules) -> Result<(), String> {
    t.validate().map_err(|e| e.to_string())?;
    for (name, _) in entries {
        let restored = rules.restore_case(name).map_err(|e| e.to_string())?.canonical;
        let key = t.resolve(&restored).ok_or_else(|| format!("{restored:?} does not resolve"))?;
        ensure(t.rows.contains_key(key), || format!("{restored:?} resolves to non-row {key:?}"))?;
    }
    Ok(())
}

fn ac7_canonical() -> Check {
    let rules = NameRules::default();
    for x in ["MACH", "MACKAREL", "Mach", "Mackarel"] {
        let f = rules.normalize(x).map_err(|e| e.to_string())?;
        ensure(f.canonical == x[..1].to_string() + &x[1..].to_lowercase(), || format!("{x} became {}", f.canonical))?;
    }
    let lexicon = ExceptionLexicon::builtin();
    let mut r = rng(7);
    let letters: Vec<char> = "abcdefghijklmnoprstuwy".chars().collect();
    for i in 0..10_000 {
        let stem_len = r.gen_range(2..9);
        let stem: String = (0..stem_len).map(|_| *letters.choose(&mut r).unwrap()).collect();
        let upper = r.gen_bool(0.5);
        let case = |s: &str| if upper { s.to_uppercase() } else { s.to_string() };
        let (raw, want) = match i % 4 {
            0 => (case(&format!("{}{stem}", ["mac", "mc", "m'", "m\u{2019}", "m`"].choose(&mut r).unwrap())), Some(Family::McFamily)),
            1 => (case(&format!("{}{stem}", ["o'", "o\u{2019}", "o`", "o\u{2018}"].choose(&mut r).unwrap())), Some(Family::OFamily)),
            _ => (case(&stem), None),
        };
        let f = rules.normalize(&raw).map_err(|e| format!("{raw:?}: {e}"))?;
        if let Some(fam) = want {
            if !lexicon.contains(&stem_title(&raw)) {
                let prefix = if fam == Family::McFamily { "Mc" } else { "O'" };
                ensure(f.family == fam && f.canonical.starts_with(prefix), || {
                    format!("{raw:?} became {:?} ({:?})", f.canonical, f.family)
                })?;
            }
        }
        let again = rules.normalize(&f.canonical).map_err(|e| e.to_string())?;
        ensure(again.canonical == f.canonical, || format!("{raw:?}: {} then {}", f.canonical, again.canonical))?;
        let shouted = rules.normalize(&f.canonical.to_uppercase()).map_err(|e| e.to_string())?;
        ensure(shouted.canonical == f.canonical, || format!("{raw:?}: upper {} gives {}", f.canonical, shouted.canonical))?;
    }
    Ok("10000 names; exceptions intact".into())
}

fn stem_title(raw: &str) -> String {
    let lower = raw.to_lowercase();
    let mut c = lower.chars();
    c.next().map(|f| f.to_uppercase().collect::<String>() + c.as_str()).unwrap_or_default()
}

fn ac8_dictionary() -> Check {
    for seq in 0..1000u64 {
        let export = |seed: u64| -> Result<String, String> {
            let mut r = rng(seed);
            let (mut store, groups) = synthetic_store(&mut r, 8);
            random_edits(&mut r, &mut store, &groups, 30);
            let bad = store.check_invariants();
            ensure(bad.is_empty(), || format!("invariants: {bad:?}"))?;
            Ok(store.export_publisher_xml())
        };
        let a = export(seq).map_err(|e| format!("sequence {seq}: {e}"))?;
        let b = export(seq).map_err(|e| format!("sequence {seq}: {e}"))?;
        ensure(a == b, || format!("sequence {seq}: export differs between runs"))?;
        let findings = validate_publication(&a).map_err(|e| e.to_string())?;
        ensure(findings.is_empty(), || format!("sequence {seq}: {findings:?}"))?;
    }
    Ok("1000 edit sequences valid and deterministic".into())
}

fn names(args: &[&str]) -> Result<(), String> {
    let argv: Vec<String> = std::iter::once("names").chain(args.iter().copied()).map(String::from).collect();
    match surnames::cli::run(argv) {
        0 => Ok(()),
        code => Err(format!("names {} exited {code}", args.join(" "))),
    }
}

fn ac9_throughput() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |f: &str| dir.path().join(f).display().to_string();
    {
        let mut w = BufWriter::new(File::create(p("igi.psv")).map_err(|e| e.to_string())?);
        write_large_corpus(&mut w, 9, 1_000_000).map_err(|e| e.to_string())?;
    }
    let start = Instant::now();
    names(&["igi", "parse", "--input", &p("igi.psv"), "--out", &p("parsed.psv")])?;
    names(&["igi", "clean", "--input", &p("parsed.psv"), "--out", &p("clean.psv"), "--learn-places"])?;
    names(&["igi", "dedup", "--in", &p("clean.psv"), "--out", &p("dedup.psv"), "--shards", "16"])?;
    names(&["igi", "index", "--input", &p("dedup.psv"), "--store", &p("store")])?;
    names(&["evidence", "select", "--store", &p("store"), "--out", &p("early.psv")])?;
    names(&["evidence", "format", "--igi", &p("early.psv"), "--out", &p("cites.tsv")])?;
    let t = within(start, Duration::from_secs(300))?;
    let kept = fs::read_to_string(p("dedup.psv")).map_err(|e| e.to_string())?.lines().count();
    let cites = fs::read_to_string(p("cites.tsv")).map_err(|e| e.to_string())?.lines().count();
    ensure(kept > 0 && kept < 1_000_000 && cites > 0, || format!("kept {kept}, cites {cites}"))?;
    Ok(format!("1000000 records -> {kept} retained -> {cites} citations in {t}"))
}

fn ac10_smith() -> Check {
    let ed = fixed_edit();
    let mut store = DictionaryStore::new();
    store.add_main("Smith", &ed).map_err(|e| e.to_string())?;
    let fixtures = [("1881", 1881, "Smith\t416438\nSmyth\t1200\n"), ("gb-current", 2011, "Smith\t540777\nSmyth\t1800\n")];
    for (id, year, rows) in fixtures {
        let src = SourceDescriptor::new(id, year, Region::GB, SourceRole::Subject).map_err(|e| e.to_string())?;
        let t = FrequencyTable::read(src, rows.as_bytes(), None::<&[u8]>).map_err(|e| e.to_string())?;
        store.record_entry_statistics("Smith", &t, false, None, &ed).map_err(|e| e.to_string())?;
    }
    let e = store.entry("Smith").ok_or("no entry")?;
    let got: Vec<(&str, i32, u64)> = e.statistics.iter().map(|s| (s.source.id.as_str(), s.source.year, s.count)).collect();
    ensure(got == vec![("1881", 1881, 416438), ("gb-current", 2011, 540777)], || format!("snapshots {got:?}"))?;
    let xml = store.export_publisher_xml();
    ensure(xml.contains("count=\"416438\"") && xml.contains("count=\"540777\""), || "export lacks snapshots".into())?;
    Ok("Smith 416438 (1881), 540777 (2011)".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("AC1", "record citation golden (exact)", ac1_darter),
        ("AC2", "fiant citation golden (exact)", ac2_dowdall),
        ("AC3", "regnal conversion vs day-counting oracle (exact)", ac3_regnal),
        ("AC4", "sharded dedup vs quadratic oracle (exact, <30 s)", ac4_dedup_oracle),
        ("AC5", "shard invariance 1/4/16 (exact)", ac5_shards),
        ("AC6", "frequency conservation, closure, threshold (exact)", ac6_conservation),
        ("AC7", "prefix canonicalization and idempotence", ac7_canonical),
        ("AC8", "dictionary integrity and deterministic export", ac8_dictionary),
        ("AC9", "1M-record synthetic corpus end to end (<300 s)", ac9_throughput),
        ("AC10", "Smith frequency snapshots (exact)", ac10_smith),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {id} {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {id} {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
