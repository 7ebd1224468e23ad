mod common;

use common::*;
use proptest::prelude::*;
use surnames::dictionary::{validate_publication, DictionaryStore, EntryKind};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn edits_preserve_integrity(seed in any::<u64>(), clusters in 1usize..12, ops in 0usize..60) {
        let mut r = rng(seed);
        let (mut store, groups) = synthetic_store(&mut r, clusters);
        let senses_before: usize = store.entries().map(|e| e.senses.len()).sum();
        random_edits(&mut r, &mut store, &groups, ops);
        prop_assert!(store.check_invariants().is_empty(), "{:?}", store.check_invariants());
        prop_assert_eq!(store.entries().map(|e| e.senses.len()).sum::<usize>(), senses_before);
        for g in &groups {
            let mains = g.iter().filter(|h| store.entry(h).unwrap().kind == EntryKind::Main).count();
            prop_assert_eq!(mains, 1);
        }
        let xml = store.export_publisher_xml();
        prop_assert!(validate_publication(&xml).unwrap().is_empty());
    }

    #[test]
    fn store_round_trips_through_disk(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (mut store, groups) = synthetic_store(&mut r, 6);
        random_edits(&mut r, &mut store, &groups, 20);
        let dir = tempfile::tempdir().unwrap();
        store.save(dir.path()).unwrap();
        let back = DictionaryStore::load(dir.path()).unwrap();
        prop_assert_eq!(back.export_publisher_xml(), store.export_publisher_xml());
        prop_assert_eq!(back.clusters(), store.clusters());
    }
}

#[test]
fn validator_flags_dangling_references() {
    let xml = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<dictionary schema=\"1\">\n\
<entry headword=\"Smyth\" kind=\"variant\" variant-of=\"Smith\" status=\"unedited\"></entry>\n</dictionary>\n";
    let findings = validate_publication(xml).unwrap();
    assert!(findings.iter().any(|f| f.kind.code() == "dangling-cross-reference"), "{findings:?}");
}
