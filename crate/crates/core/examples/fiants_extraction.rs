// Turn an OCR'd calendar of fiants into structured XML.

use surnames::fiants::{parse_fiants_volume, volume_to_xml, FiantsContext, OcrCorrections};
use surnames::gazetteer::Gazetteer;
use surnames::names::NameRules;
use surnames::regnal::{Monarch, ReignTable};

const VOLUME: &str = "\
FIANTS OF ELIZABETH
1431. Pardon to Thomas Dowdall, of Dermondston, cornty Dublin, husbandman.\u{2014} 2 November, xi.
1432. Lease to Nicholas Barnewall, of Turvey, county Dublin, gent., of the
  tithes of the rectory.--6 Nov., xi.
1433. [Much damaged.]
";

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let reigns = ReignTable::builtin();
    let gazetteer = Gazetteer::builtin();
    let rules = NameRules::default();
    let ocr = OcrCorrections::from_tsv("cornty\tcounty\n".as_bytes())?;
    let ctx = FiantsContext { monarch: Monarch::ElizabethI, reigns: &reigns, gazetteer: &gazetteer, rules: &rules, ocr: &ocr };
    let (records, warnings) = parse_fiants_volume(VOLUME, &ctx)?;
    for w in warnings {
        println!("warning: {w}");
    }
    for r in &records {
        println!("{} {:?} {}", r.number, r.gregorian_year, r.quality);
    }
    print!("{}", volume_to_xml("Eliz", &records));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
