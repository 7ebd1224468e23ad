// Pick early bearers per century and prominent county, then render their
// citations.

use surnames::evidence::{format_igi_citation, rank_prominent_counties, select_early_bearers, SelectionPolicy};
use surnames::gazetteer::Gazetteer;
use surnames::igi::{clean_igi_record, observe_places, parse_igi_record};
use surnames::names::NameRules;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let rows = [
        ("Bletsoe", "Bedford", "05 Sep 1629", "John"),
        ("Bletsoe", "Bedford", "1650", "Ann"),
        ("Dover", "Kent", "1641", "Thomas"),
        ("Sharnbrook", "Bedford", "12 Mar 1705", "Mary"),
    ];
    let rules = NameRules::default();
    let parsed = rows
        .iter()
        .map(|(place, county, date, first)| {
            let year = &date[date.len() - 4..];
            let loc = format!("{place}, {county}, England");
            parse_igi_record(&format!("b1|{date}|{loc}|Christening|{year}|{first}|Darter|Principal|Male"), &rules)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let g = observe_places(&Gazetteer::builtin(), &parsed);
    let clean = parsed.iter().map(|r| clean_igi_record(r, &g)).collect::<Result<Vec<_>, _>>().map_err(|r| r.reason.to_string())?;

    for (county, n) in rank_prominent_counties(&clean)? {
        println!("{county}: {n}");
    }
    for r in select_early_bearers(&clean, &SelectionPolicy::default()) {
        println!("{}", format_igi_citation(&r, &g)?.rendered);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
