// Load a raw frequency list, review the proposed variant merges and
// produce the merged, thresholded table.

use surnames::freqlist::{
    apply_decisions_and_merge, load_frequency_list, propose_variant_merges, threshold_filter, Confidence,
    DecisionFile, Region, SourceDescriptor, SourceRole, Verdict,
};
use surnames::names::{FeminineSuffixTable, NameRules};

const RAW: &str = "SMITH\t416\nMCDONALD\t100\nMACDONALD\t50\nM'DONALD\t5\nO'BRIEN\t30\nOBRIEN\t4\n\
KOWALSKI\t12\nKOWALSKA\t11\nMACH\t9\nBAD NAME 1\t3\nDARTER\tmany\n";

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let rules = NameRules::default();
    let source = SourceDescriptor::new("gb1881", 1881, Region::GB, SourceRole::Subject)?;
    let list = load_frequency_list(RAW.as_bytes(), &source, &rules)?;
    println!("{} names accepted, {} rows rejected", list.entries.len(), list.rejects.len());
    for r in &list.rejects {
        println!("  line {}: {}", r.line, r.reason.code());
    }

    let proposals = propose_variant_merges(&list.entries, &rules, &FeminineSuffixTable::builtin(), None)?;
    let mut decisions = DecisionFile::new();
    for p in &proposals {
        let members: Vec<&str> = p.members.iter().map(String::as_str).collect();
        println!("{} {:?} {} -> {}", p.id, p.confidence, members.join(" + "), p.proposed_canonical);
        // A reviewer signs off on everything the rules were unsure about.
        if p.confidence == Confidence::Uncertain {
            decisions.push(p.id.clone(), Verdict::Approve);
        }
    }

    let merged = apply_decisions_and_merge(source, &list.entries, &proposals, &decisions, &rules)?;
    assert_eq!(merged.total(), list.accepted_total());
    println!("McDonald: {}", merged.count_for("MacDonald"));
    let kept = threshold_filter(&merged, 20);
    let names: Vec<&str> = kept.rows.keys().map(String::as_str).collect();
    println!("at least 20 bearers: {}", names.join(", "));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
