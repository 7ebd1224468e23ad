// Edit a small cluster, record frequency snapshots and produce the
// validated publisher document.

use chrono::NaiveDate;
use surnames::dictionary::{validate_publication, DictionaryStore, Edit, EntryStatus, Sense};
use surnames::evidence::EvidenceCitation;
use surnames::freqlist::{FrequencyTable, Region, SourceDescriptor, SourceRole};

fn table(id: &str, year: i32, rows: &[(&str, u64)]) -> Result<FrequencyTable, Box<dyn std::error::Error>> {
    let mut t = FrequencyTable::new(SourceDescriptor::new(id, year, Region::GB, SourceRole::Subject)?);
    t.rows.extend(rows.iter().map(|(n, c)| (n.to_string(), *c)));
    Ok(t)
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let at = NaiveDate::from_ymd_opt(2013, 5, 6).and_then(|d| d.and_hms_opt(10, 0, 0)).ok_or("bad date")?;
    let ed = Edit::new("editor1", at);
    let mut store = DictionaryStore::new();
    store.add_main("Smither", &ed)?;
    store.add_variant("Smithard", "Smither", &ed)?;
    store.add_main("Smith", &ed)?;
    store.add_sense("Smith", Sense::new("English").with_explanation("occupational name for a metalworker"), &ed)?;

    let c1881 = table("1881", 1881, &[("Smith", 416438), ("Smither", 289)])?;
    let current = table("gb-current", 2011, &[("Smith", 540777), ("Smither", 333)])?;
    for h in ["Smith", "Smither", "Smithard"] {
        store.record_entry_statistics(h, &c1881, false, None, &ed)?;
        store.record_entry_statistics(h, &current, false, None, &ed)?;
    }
    let cite = EvidenceCitation::parse("John <sn>Smith</sn>, 1629 in <src>IGI</src> (Bletsoe, Beds)")?;
    store.attach_evidence("Smith", None, &[cite], &ed)?;
    store.set_status("Smith", EntryStatus::Finished, &ed)?;
    store.set_main_name("Smither", "Smithard", &ed)?;

    print!("{}", store.progress_report(None).to_text());
    let xml = store.export_publisher_xml();
    print!("{xml}");
    let findings = validate_publication(&xml)?;
    println!("{} findings", findings.len());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
