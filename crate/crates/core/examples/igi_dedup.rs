// Parse event records, drop near-duplicates and query the record store.

use surnames::gazetteer::Gazetteer;
use surnames::igi::{
    clean_igi_record, deduplicate_sharded, observe_places, parse_igi_record, IgiStoreBuilder, QueryFilter,
};
use surnames::names::NameRules;

const LINES: &[&str] = &[
    "Bletsoe, Bedford, England|05 Sep 1629|Bletsoe, Bedford, England|Christening|1629|John|Darter|Principal's Father|Male",
    // Same event, the first name spelt differently: a near-duplicate.
    "Bletsoe, Bedford, England|05 Sep 1629|Bletsoe, Bedford, England|Christening|1629|Jno|Darter|Principal's Father|Male",
    // Identical to the first.
    "Bletsoe, Bedford, England|05 Sep 1629|Bletsoe, Bedford, England|Christening|1629|John|Darter|Principal's Father|Male",
    "Sharnbrook, Bedford, England|12 Mar 1705|Sharnbrook, Bedford, England|Marriage|1705|Ann|DARTER|Bride|Female",
    "Paris, Bedford, England|1650|Paris, Seine, France|Death|1650|Jean|Darter|Deceased|Male",
];

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let rules = NameRules::default();
    let parsed: Vec<_> = LINES.iter().map(|l| parse_igi_record(l, &rules)).collect::<Result<_, _>>()?;
    let g = observe_places(&Gazetteer::builtin(), &parsed);
    let mut clean = Vec::new();
    for r in &parsed {
        match clean_igi_record(r, &g) {
            Ok(c) => clean.push(c),
            Err(rej) => println!("rejected {} {}: {}", r.first_name, r.year, rej.reason),
        }
    }

    let report = deduplicate_sharded(&clean, 4);
    for d in &report.deletions {
        let field = d.differing_field.map(|f| f.code()).unwrap_or("none");
        println!("record {} duplicates {} (differs in {field})", d.deleted, d.witness);
    }

    let dir = tempfile::tempdir()?;
    let mut builder = IgiStoreBuilder::new(dir.path(), 8);
    for &i in &report.retained {
        builder.append(&clean[i as usize]);
    }
    let store = builder.seal()?;
    let filter = QueryFilter { century: Some(17), ..Default::default() };
    for r in store.query("Darter", &filter)? {
        println!("{}", r.to_line());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
