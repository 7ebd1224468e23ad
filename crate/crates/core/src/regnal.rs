//! Regnal-year dates and their conversion to calendar years.
//!
//! Regnal year N of a monarch runs from the N-1th anniversary of the
//! accession day up to the day before the Nth. Dates are civil Old Style
//! dates with the year counted from 1 January, which is how modern
//! calendars of Tudor records print them.

use std::cmp::Ordering;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegnalError {
    #[error("monarch {0} not in reign table")]
    UnknownMonarch(Monarch),
    #[error("unknown monarch name {0:?}")]
    UnknownMonarchName(String),
    #[error("regnal year {year} outside the reign of {monarch} (1..={max})")]
    YearOutsideReign { monarch: Monarch, year: u32, max: u32 },
    #[error("{day} {month} does not occur in regnal year {year} of {monarch}")]
    ImpossibleDate { monarch: Monarch, year: u32, day: u8, month: u8 },
    #[error("joint regnal style of {0} is not supported")]
    UnsupportedJointStyle(Monarch),
    #[error("date {0} precedes the accession")]
    BeforeAccession(HistoricDate),
    #[error("invalid roman numeral {0:?}")]
    BadRoman(String),
    #[error("invalid date {0:?}")]
    BadDate(String),
    #[error("reign table accessions must strictly increase ({0} out of order)")]
    Unordered(Monarch),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Monarch {
    HenryVIII,
    EdwardVI,
    MaryI,
    PhilipAndMary,
    ElizabethI,
}

impl Monarch {
    pub const ALL: [Monarch; 5] = [
        Monarch::HenryVIII,
        Monarch::EdwardVI,
        Monarch::MaryI,
        Monarch::PhilipAndMary,
        Monarch::ElizabethI,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Monarch::HenryVIII => "Henry VIII",
            Monarch::EdwardVI => "Edward VI",
            Monarch::MaryI => "Mary I",
            Monarch::PhilipAndMary => "Philip & Mary",
            Monarch::ElizabethI => "Elizabeth I",
        }
    }
}

impl fmt::Display for Monarch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Monarch {
    type Err = RegnalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| c.is_alphanumeric()).collect::<String>().to_lowercase();
        match key.as_str() {
            "henryviii" | "henry8" | "hen8" | "henviii" => Ok(Monarch::HenryVIII),
            "edwardvi" | "edward6" | "edvi" | "ed6" => Ok(Monarch::EdwardVI),
            "maryi" | "mary" | "mary1" => Ok(Monarch::MaryI),
            "philipmary" | "philipandmary" | "pm" => Ok(Monarch::PhilipAndMary),
            "elizabethi" | "elizabeth" | "eliz" | "elizabeth1" => Ok(Monarch::ElizabethI),
            _ => Err(RegnalError::UnknownMonarchName(s.to_string())),
        }
    }
}

/// A civil date with Julian leap years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HistoricDate {
    pub year: i32,
    pub month: u8,
    pub day: u8,
}

pub const MONTH_NAMES: [&str; 12] = [
    "January", "February", "March", "April", "May", "June", "July", "August", "September", "October", "November",
    "December",
];

pub fn is_leap(year: i32) -> bool {
    year.rem_euclid(4) == 0
}

pub fn month_length(year: i32, month: u8) -> u8 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if is_leap(year) => 29,
        2 => 28,
        _ => 0,
    }
}

fn year_length(year: i32) -> u32 {
    if is_leap(year) {
        366
    } else {
        365
    }
}

impl HistoricDate {
    pub fn new(year: i32, month: u8, day: u8) -> Result<Self, RegnalError> {
        if !(1..=12).contains(&month) || day == 0 || day > month_length(year, month) {
            return Err(RegnalError::BadDate(format!("{year:04}-{month:02}-{day:02}")));
        }
        Ok(Self { year, month, day })
    }

    /// 1-based position in the year.
    pub fn ordinal(&self) -> u32 {
        (1..self.month).map(|m| month_length(self.year, m) as u32).sum::<u32>() + self.day as u32
    }

    fn month_day(&self) -> (u8, u8) {
        (self.month, self.day)
    }

    /// Same month and day `years` later; 29 February falls on 1 March in
    /// common years.
    pub fn add_years(&self, years: i32) -> Self {
        let year = self.year + years;
        if self.month == 2 && self.day == 29 && !is_leap(year) {
            Self { year, month: 3, day: 1 }
        } else {
            Self { year, ..*self }
        }
    }
}

impl fmt::Display for HistoricDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}-{:02}", self.year, self.month, self.day)
    }
}

impl FromStr for HistoricDate {
    type Err = RegnalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || RegnalError::BadDate(s.to_string());
        let parts: Vec<&str> = s.trim().split('-').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let y = parts[0].parse().map_err(|_| bad())?;
        let m = parts[1].parse().map_err(|_| bad())?;
        let d = parts[2].parse().map_err(|_| bad())?;
        Self::new(y, m, d)
    }
}

/// Parses a lowercase or uppercase roman numeral, accepting a final `j`
/// for `i` (`iij` = 3).
pub fn parse_roman(text: &str) -> Result<u32, RegnalError> {
    let bad = || RegnalError::BadRoman(text.to_string());
    let t = text.trim().to_ascii_lowercase();
    if t.is_empty() {
        return Err(bad());
    }
    let value = |c: char| match c {
        'i' | 'j' => Some(1),
        'v' => Some(5),
        'x' => Some(10),
        'l' => Some(50),
        'c' => Some(100),
        _ => None,
    };
    let digits: Vec<u32> = t.chars().map(value).collect::<Option<_>>().ok_or_else(bad)?;
    if t[..t.len() - 1].contains('j') {
        return Err(bad());
    }
    let mut total: i64 = 0;
    for (i, &d) in digits.iter().enumerate() {
        match digits.get(i + 1) {
            Some(&next) if next > d => {
                if !matches!((d, next), (1, 5) | (1, 10) | (10, 50) | (10, 100)) {
                    return Err(bad());
                }
                total -= d as i64;
            }
            _ => total += d as i64,
        }
    }
    if total <= 0 {
        return Err(bad());
    }
    Ok(total as u32)
}

pub fn to_roman(mut n: u32) -> String {
    const TABLE: [(u32, &str); 9] = [
        (100, "c"),
        (90, "xc"),
        (50, "l"),
        (40, "xl"),
        (10, "x"),
        (9, "ix"),
        (5, "v"),
        (4, "iv"),
        (1, "i"),
    ];
    let mut out = String::new();
    for (v, s) in TABLE {
        while n >= v {
            out.push_str(s);
            n -= v;
        }
    }
    out
}

/// A date expressed as a regnal year with optional day and month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RegnalDate {
    pub monarch: Monarch,
    pub regnal_year: u32,
    /// `(day, month)`
    pub day_month: Option<(u8, u8)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reign {
    pub monarch: Monarch,
    pub accession: HistoricDate,
    /// First day no longer in the reign.
    pub end: HistoricDate,
    /// Joint styles such as Philip & Mary are not converted unless enabled.
    pub supported: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReignTable {
    reigns: Vec<Reign>,
}

/// The calendar result of a regnal conversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvertedDate {
    pub year: i32,
    pub date: Option<HistoricDate>,
}

impl ReignTable {
    pub fn new(reigns: Vec<Reign>) -> Result<Self, RegnalError> {
        for w in reigns.windows(2) {
            if w[1].accession <= w[0].accession {
                return Err(RegnalError::Unordered(w[1].monarch));
            }
        }
        Ok(Self { reigns })
    }

    /// Tudor accessions from Henry VIII to Elizabeth I.
    pub fn builtin() -> Self {
        let d = |y, m, dd| HistoricDate::new(y, m, dd).expect("builtin date");
        Self::new(vec![
            Reign {
                monarch: Monarch::HenryVIII,
                accession: d(1509, 4, 22),
                end: d(1547, 1, 28),
                supported: true,
            },
            Reign {
                monarch: Monarch::EdwardVI,
                accession: d(1547, 1, 28),
                end: d(1553, 7, 6),
                supported: true,
            },
            Reign {
                monarch: Monarch::MaryI,
                accession: d(1553, 7, 6),
                end: d(1558, 11, 17),
                supported: true,
            },
            Reign {
                monarch: Monarch::PhilipAndMary,
                accession: d(1554, 7, 25),
                end: d(1558, 11, 17),
                supported: false,
            },
            Reign {
                monarch: Monarch::ElizabethI,
                accession: d(1558, 11, 17),
                end: d(1603, 3, 24),
                supported: true,
            },
        ])
        .expect("builtin reign table")
    }

    /// Reads `monarch<TAB>accession<TAB>end<TAB>supported` rows with ISO dates.
    pub fn from_tsv<R: BufRead>(reader: R) -> Result<Self, RegnalError> {
        let mut reigns = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| RegnalError::Malformed {
                line: idx + 1,
                reason: e.to_string(),
            })?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() != 4 {
                return Err(RegnalError::Malformed {
                    line: idx + 1,
                    reason: "expected monarch, accession, end, supported".into(),
                });
            }
            reigns.push(Reign {
                monarch: cols[0].parse()?,
                accession: cols[1].parse()?,
                end: cols[2].parse()?,
                supported: matches!(cols[3], "yes" | "true" | "1"),
            });
        }
        Self::new(reigns)
    }

    pub fn reigns(&self) -> &[Reign] {
        &self.reigns
    }

    pub fn reign(&self, monarch: Monarch) -> Result<&Reign, RegnalError> {
        self.reigns
            .iter()
            .find(|r| r.monarch == monarch)
            .ok_or(RegnalError::UnknownMonarch(monarch))
    }

    /// Number of regnal years begun before the reign ended.
    pub fn reign_length(&self, monarch: Monarch) -> Result<u32, RegnalError> {
        let r = self.reign(monarch)?;
        let mut n = 0;
        while r.accession.add_years(n as i32) < r.end {
            n += 1;
        }
        Ok(n)
    }

    /// First day of regnal year `n`.
    pub fn year_start(&self, monarch: Monarch, n: u32) -> Result<HistoricDate, RegnalError> {
        Ok(self.reign(monarch)?.accession.add_years(n as i32 - 1))
    }

    pub fn to_calendar(&self, d: &RegnalDate) -> Result<ConvertedDate, RegnalError> {
        let reign = self.reign(d.monarch)?;
        if !reign.supported {
            return Err(RegnalError::UnsupportedJointStyle(d.monarch));
        }
        let max = self.reign_length(d.monarch)?;
        if d.regnal_year == 0 || d.regnal_year > max {
            return Err(RegnalError::YearOutsideReign {
                monarch: d.monarch,
                year: d.regnal_year,
                max,
            });
        }
        let start = reign.accession.add_years(d.regnal_year as i32 - 1);
        match d.day_month {
            Some((day, month)) => {
                let year = match (month, day).cmp(&start.month_day()) {
                    Ordering::Less => start.year + 1,
                    _ => start.year,
                };
                let date = HistoricDate::new(year, month, day).map_err(|_| RegnalError::ImpossibleDate {
                    monarch: d.monarch,
                    year: d.regnal_year,
                    day,
                    month,
                })?;
                Ok(ConvertedDate { year, date: Some(date) })
            }
            None => {
                // Calendar year holding most of the regnal year; ties go later.
                let in_first = year_length(start.year) - start.ordinal() + 1;
                let next_start = reign.accession.add_years(d.regnal_year as i32);
                let in_second = next_start.ordinal() - 1;
                let year = if in_first > in_second { start.year } else { start.year + 1 };
                Ok(ConvertedDate { year, date: None })
            }
        }
    }

    /// The regnal year of `monarch` containing `date`.
    pub fn regnal_year_of(&self, monarch: Monarch, date: HistoricDate) -> Result<u32, RegnalError> {
        let reign = self.reign(monarch)?;
        if date < reign.accession {
            return Err(RegnalError::BeforeAccession(date));
        }
        let mut years = date.year - reign.accession.year;
        if reign.accession.add_years(years) > date {
            years -= 1;
        }
        Ok(years as u32 + 1)
    }
}

/// Converts with the given reign table; see [`ReignTable::to_calendar`].
pub fn regnal_to_gregorian(d: &RegnalDate, table: &ReignTable) -> Result<ConvertedDate, RegnalError> {
    table.to_calendar(d)
}
