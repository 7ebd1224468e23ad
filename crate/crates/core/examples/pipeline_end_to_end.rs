// Drive the `names` command line through a small pipeline: records to
// citations to a validated dictionary export.

use std::fs;
use std::path::Path;

use surnames::cli::run;

fn names(dir: &Path, args: &str) -> Result<(), String> {
    let mut argv = vec!["names".to_string()];
    argv.extend(args.split_whitespace().map(|a| a.replace('@', &dir.display().to_string())));
    match run(argv) {
        0 => Ok(()),
        code => Err(format!("`names {args}` exited with {code}")),
    }
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let d = dir.path();
    fs::write(
        d.join("igi.psv"),
        "Bletsoe, Bedford, England|05 Sep 1629|Bletsoe, Bedford, England|Christening|1629|John|Darter|Principal's Father|Male\n\
         Bletsoe, Bedford, England|05 Sep 1629|Bletsoe, Bedford, England|Christening|1629|Jno|Darter|Principal's Father|Male\n\
         Dover, Kent, England|1705|Dover, Kent, England|Death|1705|Ann|Darter|Deceased|Female\n\
         broken line\n",
    )?;
    fs::write(d.join("clusters.tsv"), "Darter\tDarte\n")?;
    let at = "--editor pipeline --at 2013-05-06T10:00:00";

    names(d, "igi parse --input @/igi.psv --out @/parsed.psv")?;
    names(d, "igi clean --input @/parsed.psv --out @/clean.psv --learn-places")?;
    names(d, "igi dedup --in @/clean.psv --out @/dedup.psv --shards 4")?;
    names(d, "igi index --input @/dedup.psv --store @/store")?;
    names(d, "evidence select --store @/store --out @/early.psv")?;
    names(d, "evidence format --igi @/early.psv --out @/cites.tsv")?;
    names(d, &format!("dict init --dict @/dict --clusters @/clusters.tsv {at}"))?;
    names(d, &format!("evidence attach --dict @/dict --citations @/cites.tsv {at}"))?;
    names(d, "dict export --dict @/dict --out @/pub.xml")?;
    names(d, "dict validate @/pub.xml")?;

    print!("{}", fs::read_to_string(d.join("cites.tsv"))?);
    print!("{}", fs::read_to_string(d.join("dedup.psv.manifest.json"))?);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
