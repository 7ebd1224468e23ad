// Restore display casing to uppercase source spellings and fold Mac-/M'-
// and apostrophe variants onto their canonical forms.

use std::collections::BTreeSet;

use surnames::names::{FeminineSuffixTable, NameRules};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let rules = NameRules::default();
    for raw in ["SMITH", "MCDONALD", "MACDONALD", "M'DONALD", "O BRIEN", "O`BRIEN", "MACH", "MACKAREL", "SMITH-JONES"] {
        let form = rules.normalize(raw)?;
        let from = form.source_variant.as_deref().unwrap_or("-");
        println!("{raw:<12} {:<12} {:<10} {from}", form.canonical, form.family.as_str());
    }

    let masculine: BTreeSet<String> = ["Kowalski", "Novak"].map(String::from).into();
    let suffixes = FeminineSuffixTable::builtin();
    for name in ["Kowalska", "Novakova", "Moska"] {
        match suffixes.detect_feminine(name, &masculine) {
            Some(base) => println!("{name} is the feminine form of {base}"),
            None => println!("{name}: no masculine form in the list"),
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
