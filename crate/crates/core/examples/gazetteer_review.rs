// Standardize county names, then run one volunteer review round over the
// places seen in each county.

use std::fs;

use surnames::gazetteer::{Gazetteer, VerdictKind};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut g = Gazetteer::builtin();
    for raw in ["Bedford", "BEDS.", "co. Dublin", "county Kildare", "Atlantis"] {
        match g.standardize_county(raw) {
            Ok(c) => println!("{raw:<16} -> {c} ({})", g.abbreviation(&c).unwrap_or("?")),
            Err(e) => println!("{raw:<16} -> {e}"),
        }
    }

    for place in ["Bletsoe", "Bletso", "Paris"] {
        g.add_place("Bedfordshire", place)?;
    }
    let dir = tempfile::tempdir()?;
    let lists = g.emit_review_lists(dir.path())?;
    let beds = lists.iter().find(|p| p.ends_with("Bedfordshire.tsv")).ok_or("no list for Bedfordshire")?;
    println!("review list:\n{}", fs::read_to_string(beds)?);

    fs::write(beds, "Bletsoe\tOK\nBletso\tFIX\tBletsoe\nParis\tNO\n")?;
    let ingest = g.ingest_review_results(std::slice::from_ref(beds))?;
    let next = g.apply_review(&ingest.updates);
    for place in ["Bletsoe", "Bletso", "Paris"] {
        let v = next.validate_place(place, "Bedfordshire", "England");
        match v.kind {
            VerdictKind::Corrected => println!("{place}: corrected to {}", v.corrected_place.unwrap_or_default()),
            VerdictKind::Rejected => println!("{place}: rejected ({})", v.reason.map(|r| r.to_string()).unwrap_or_default()),
            VerdictKind::Valid => println!("{place}: valid"),
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
