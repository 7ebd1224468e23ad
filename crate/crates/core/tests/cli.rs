use std::fs;
use std::path::Path;

use surnames::cli::run;
use surnames::manifest::RunManifest;

struct Sandbox {
    dir: tempfile::TempDir,
}

impl Sandbox {
    fn new() -> Self {
        Sandbox { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).display().to_string()
    }

    fn write(&self, name: &str, text: &str) -> String {
        let p = self.path(name);
        if let Some(parent) = Path::new(&p).parent() {
            fs::create_dir_all(parent).unwrap();
        }
        fs::write(&p, text).unwrap();
        p
    }

    fn read(&self, name: &str) -> String {
        fs::read_to_string(self.path(name)).unwrap()
    }

    fn names(&self, args: &[&str]) -> i32 {
        run(std::iter::once("names").chain(args.iter().copied()))
    }
}

const AT: [&str; 4] = ["--editor", "tester", "--at", "2013-05-06T09:30:00"];

#[test]
fn darter_through_the_command_line() {
    let s = Sandbox::new();
    let input = s.write(
        "igi.psv",
        "Bletsoe, Bedford, England|05 Sep 1629|Bletsoe, Bedford, England|Christening|1629|John|Darter|Principal's Father|Male\n",
    );
    assert_eq!(s.names(&["igi", "parse", "--input", &input, "--out", &s.path("p.psv")]), 0);
    assert_eq!(s.names(&["igi", "clean", "--input", &s.path("p.psv"), "--out", &s.path("c.psv"), "--learn-places"]), 0);
    assert_eq!(s.names(&["evidence", "format", "--igi", &s.path("c.psv"), "--out", &s.path("cites.tsv")]), 0);
    assert_eq!(s.read("cites.tsv"), "Darter\tJohn <sn>Darter</sn>, 1629 in <src>IGI</src> (Bletsoe, Beds)\n");
}

#[test]
fn dowdall_through_the_command_line() {
    let s = Sandbox::new();
    let vol = s.write(
        "eliz.txt",
        "1430. Grant to John Eustace, of Castlemartin, county Kildare, gent.\u{2014} 1 November, xi.\n\
         1431. Pardon to Thomas Dowdall, of Dermondston, county Dublin, husbandman.\u{2014} 2 November, xi.\n",
    );
    assert_eq!(s.names(&["fiants", "parse", &vol, "--out", &s.path("eliz.xml"), "--volume", "Eliz"]), 0);
    assert_eq!(s.names(&["evidence", "format", "--fiants", &s.path("eliz.xml"), "--out", &s.path("cites.tsv")]), 0);
    let cites = s.read("cites.tsv");
    assert!(
        cites.contains("Dowdall\tThomas <sn>Dowdall</sn>, 1569 in <src>Fiants Eliz</src> $1431 (Dermondston, co. Dublin)\n"),
        "{cites}"
    );
}

#[test]
fn smith_snapshots_through_dict_stats() {
    let s = Sandbox::new();
    let clusters = s.write("clusters.tsv", "Smith\tSmyth\n");
    let dict = s.path("dict");
    let mut init = vec!["dict", "init", "--dict", &dict, "--clusters", &clusters];
    init.extend(AT);
    assert_eq!(s.names(&init), 0);
    for (file, rows, id, year) in [("c1881.tsv", "Smith\t416438\n", "1881", "1881"), ("gb.tsv", "Smith\t540777\n", "gb-current", "2011")] {
        let rows = s.write(file, rows);
        let mut args = vec!["dict", "stats", "--dict", &dict, "--rows", &rows, "--source-id", id, "--year", year];
        args.extend(AT);
        assert_eq!(s.names(&args), 0);
    }
    assert_eq!(s.names(&["dict", "export", "--dict", &dict, "--out", &s.path("pub.xml")]), 0);
    let xml = s.read("pub.xml");
    let smith = xml.lines().find(|l| l.contains("headword=\"Smith\"")).unwrap();
    assert!(smith.contains("source=\"1881\" year=\"1881\" region=\"GB\" count=\"416438\""), "{smith}");
    assert!(smith.contains("source=\"gb-current\" year=\"2011\" region=\"GB\" count=\"540777\""), "{smith}");
    assert_eq!(s.names(&["dict", "validate", &s.path("pub.xml")]), 0);
}

#[test]
fn frequency_pipeline_writes_balanced_manifests() {
    let s = Sandbox::new();
    let raw = s.write("raw.tsv", "SMITH\t416\nMCDONALD\t100\nMACDONALD\t50\nO'BRIEN\t30\nOBRIEN\t4\nBAD 1\t3\nKAY\t7\n");
    assert_eq!(s.names(&["freq", "load", "--input", &raw, "--out", &s.path("clean.tsv"), "--year", "1881"]), 0);
    assert_eq!(s.read("clean.tsv.rejects.tsv").lines().count(), 1);
    let load = RunManifest::read(Path::new(&s.path("clean.tsv.manifest.json"))).unwrap();
    assert_eq!(load.stages["load"].input, 7);
    assert_eq!(load.stages["load"].rejected, 1);

    let src = s.path("clean.tsv");
    assert_eq!(s.names(&["freq", "propose", "--source", &src, "--out", &s.path("proposals.tsv"), "--year", "1881"]), 0);
    let decisions: String = s
        .read("proposals.tsv")
        .lines()
        .filter_map(|l| l.split('\t').next())
        .filter(|id| id.len() == 16)
        .map(|id| format!("{id}\tapprove\n"))
        .collect();
    let decisions = s.write("decisions.tsv", &decisions);
    let merged = s.path("merged");
    assert_eq!(s.names(&["freq", "merge", "--source", &src, "--decisions", &decisions, "--out", &merged, "--year", "1881"]), 0);
    let m = RunManifest::read(&Path::new(&merged).join("manifest.json")).unwrap();
    assert_eq!(m.stages["merge-bearers"].input, 416 + 150 + 34 + 7);
    assert_eq!(m.stages["merge-bearers"].output, 416 + 150 + 34 + 7);
    let rows = s.read("merged/rows.tsv");
    assert!(rows.contains("McDonald\t150\n") && rows.contains("O'Brien\t34\n"), "{rows}");

    let out = s.path("kept");
    let rows_path = s.path("merged/rows.tsv");
    let red_path = s.path("merged/redirects.tsv");
    assert_eq!(
        s.names(&["freq", "threshold", "--rows", &rows_path, "--redirects", &red_path, "--out", &out, "--year", "1881"]),
        0
    );
    assert_eq!(s.read("kept/rows.tsv"), "McDonald\t150\nO'Brien\t34\nSmith\t416\n");
}

#[test]
fn dedup_log_uses_input_line_numbers() {
    let s = Sandbox::new();
    let line = "b|1629|Bletsoe, Bedford, England|Christening|1629|John|Darter|P|Male";
    let input = s.write("c.psv", &format!("{line}\n{line}\n{}\n", line.replace("John", "Jno")));
    assert_eq!(s.names(&["igi", "dedup", "--in", &input, "--out", &s.path("d.psv"), "--shards", "4"]), 0);
    assert_eq!(s.read("d.psv").lines().count(), 1);
    assert_eq!(s.read("d.psv.deletions.tsv"), "2\t1\tnone\n3\t1\tfirst_name\n");
}

#[test]
fn exit_codes() {
    let s = Sandbox::new();
    assert_eq!(s.names(&["igi", "frobnicate"]), 2);
    assert_eq!(s.names(&["igi", "parse", "--input", &s.path("missing.psv"), "--out", &s.path("o.psv")]), 3);
    let bad = s.write("bad.xml", "<dictionary schema=\"1\"><entry headword=\"Smyth\" kind=\"variant\" variant-of=\"Smith\" status=\"unedited\"/></dictionary>\n");
    assert_eq!(s.names(&["dict", "validate", &bad]), 1);
    let t = s.write("t.tsv", "Smith\t1\n");
    assert_eq!(s.names(&["freq", "threshold", "--rows", &t, "--out", &s.path("k"), "--year", "1400"]), 2);
    let d = s.write("d.tsv", "0000000000000000\tapprove\n");
    assert_eq!(s.names(&["freq", "merge", "--source", &t, "--decisions", &d, "--out", &s.path("m"), "--year", "1881"]), 1);
}

#[test]
fn production_config_requires_every_table() {
    let s = Sandbox::new();
    let cfg = s.write("names.toml", "production = true\n[tables]\nlexicon = \"lexicon.tsv\"\n");
    let t = s.write("t.tsv", "Smith\t30\n");
    assert_eq!(s.names(&["--config", &cfg, "freq", "threshold", "--rows", &t, "--out", &s.path("k"), "--year", "1881"]), 2);
    let typo = s.write("typo.toml", "[tables]\nlexikon = \"x\"\n");
    assert_eq!(s.names(&["--config", &typo, "freq", "threshold", "--rows", &t, "--out", &s.path("k"), "--year", "1881"]), 2);
}

#[test]
fn config_tables_override_builtins_and_are_digested() {
    let s0 = Sandbox::new();
    s0.write("lexicon.tsv", "only one column\n");
    let cfg0 = s0.write("names.toml", "[tables]\nlexicon = \"lexicon.tsv\"\n");
    let raw0 = s0.write("raw.tsv", "SMITH\t5\n");
    assert_eq!(s0.names(&["--config", &cfg0, "freq", "load", "--input", &raw0, "--out", &s0.path("c.tsv"), "--year", "1881"]), 1);

    let s = Sandbox::new();
    s.write("lexicon.tsv", "MACHO\tMacho\texception\n");
    let cfg = s.write("names.toml", "[tables]\nlexicon = \"lexicon.tsv\"\n");
    let raw = s.write("raw.tsv", "MACHO\t5\nMACDONALD\t3\n");
    assert_eq!(s.names(&["--config", &cfg, "freq", "load", "--input", &raw, "--out", &s.path("c.tsv"), "--year", "1881"]), 0);
    let m = RunManifest::read(Path::new(&s.path("c.tsv.manifest.json"))).unwrap();
    assert!(m.config_digest.is_some());
    assert_eq!(s.names(&["--config", &cfg, "freq", "propose", "--source", &s.path("c.tsv"), "--out", &s.path("p.tsv"), "--year", "1881"]), 0);
    assert!(!s.read("p.tsv").contains("McHo"));
}

#[test]
fn gazetteer_review_round() {
    let s = Sandbox::new();
    let lists = s.path("review");
    assert_eq!(s.names(&["gaz", "emit-review", "--out", &lists]), 0);
    let returned = s.write("back/Bedfordshire.tsv", "Bletsoe\tOK\nBletso\tFIX\tBletsoe\n");
    let gaz = s.path("gaz");
    assert_eq!(s.names(&["gaz", "ingest-review", &returned, "--out", &gaz]), 0);
    let igi = s.write("igi.psv", "b|1629|Bletso, Bedford, England|Christening|1629|John|Darter|P|Male\n");
    assert_eq!(s.names(&["igi", "clean", "--input", &igi, "--out", &s.path("c.psv"), "--gazetteer", &gaz]), 0);
    assert!(s.read("c.psv").contains("Bletsoe, Bedfordshire, England"));
}
