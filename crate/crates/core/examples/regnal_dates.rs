// Convert regnal-year dates to calendar years.

use surnames::regnal::{parse_roman, HistoricDate, Monarch, RegnalDate, ReignTable};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let table = ReignTable::builtin();
    let cases = [
        (Monarch::ElizabethI, "xi", Some((2, 11))),
        (Monarch::ElizabethI, "xi", Some((1, 12))),
        (Monarch::ElizabethI, "i", Some((17, 11))),
        (Monarch::HenryVIII, "i", None),
        (Monarch::PhilipAndMary, "iv", None),
    ];
    for (monarch, year, day_month) in cases {
        let d = RegnalDate { monarch, regnal_year: parse_roman(year)?, day_month };
        match table.to_calendar(&d) {
            Ok(c) => println!("{monarch} {year} {day_month:?} -> {}", c.year),
            Err(e) => println!("{monarch} {year} {day_month:?} -> {e}"),
        }
    }
    let date: HistoricDate = "1569-11-02".parse()?;
    println!("{date} is in regnal year {} of Elizabeth I", table.regnal_year_of(Monarch::ElizabethI, date)?);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
