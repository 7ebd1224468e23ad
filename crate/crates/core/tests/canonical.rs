use proptest::prelude::*;
use surnames::names::{ExceptionLexicon, Family, NameRules};

fn title(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_uppercase().collect::<String>() + &c.as_str().to_lowercase()).unwrap_or_default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn mac_and_m_apostrophe_fold_to_mc(prefix in prop::sample::select(vec!["MAC", "Mac", "MC", "Mc", "M'", "M\u{2019}", "M`", "mac"]),
                                       stem in "[a-z]{2,10}") {
        let raw = format!("{prefix}{stem}");
        prop_assume!(!ExceptionLexicon::builtin().contains(&title(&raw)));
        let f = NameRules::default().normalize(&raw).unwrap();
        prop_assert_eq!(f.family, Family::McFamily);
        prop_assert_eq!(f.canonical, format!("Mc{}", title(&stem)));
    }

    #[test]
    fn o_names_use_plain_apostrophe(mark in prop::sample::select(vec!['\'', '`', '\u{00B4}', '\u{2018}', '\u{2019}']),
                                    stem in "[A-Z]{2,10}") {
        let f = NameRules::default().normalize(&format!("O{mark}{stem}")).unwrap();
        prop_assert_eq!(f.family, Family::OFamily);
        prop_assert_eq!(f.canonical, format!("O'{}", title(&stem)));
    }

    #[test]
    fn normalization_is_idempotent(raw in "[A-Za-z'`\u{2019} -]{1,20}") {
        let rules = NameRules::default();
        if let Ok(f) = rules.normalize(&raw) {
            let again = rules.normalize(&f.canonical).unwrap();
            prop_assert_eq!(&again.canonical, &f.canonical);
            let upper = rules.normalize(&f.canonical.to_uppercase()).unwrap();
            prop_assert_eq!(&upper.canonical, &f.canonical);
        }
    }
}

#[test]
fn lexicon_exceptions_survive() {
    let rules = NameRules::default();
    for (raw, want) in [("MACH", "Mach"), ("MACKAREL", "Mackarel"), ("Mach", "Mach")] {
        let f = rules.normalize(raw).unwrap();
        assert_eq!(f.canonical, want);
        assert_eq!(f.family, Family::Exception);
    }
}

#[test]
fn short_mac_tails_are_left_alone() {
    let f = NameRules::default().normalize("MACE").unwrap();
    assert!(!f.canonical.starts_with("Mc"), "{}", f.canonical);
}
