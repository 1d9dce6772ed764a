//! Dashboard statistics over clean records.
//!
//! [`Cube`] holds additive per-cell statistics; the view functions slice it
//! into the shapes the API serves. All arithmetic stays exact until a value
//! is turned into a [`Decimal2`] at the presentation boundary.

mod cube;
mod decimal;

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cube::{AggregateCell, CellKey, CellStats, CsvCell, Cube, Dim, ALL, CUBE_CSV_HEADER};
pub use decimal::Decimal2;

#[derive(Debug, Error)]
pub enum AggregateError {
    #[error("year_from {from} is after year_to {to}")]
    InvalidRange { from: i32, to: i32 },
    #[error("unknown subclass {0:?}")]
    UnknownSubclass(String),
    #[error("the selection contains no articles")]
    EmptySelection,
    #[error("malformed cube: {0}")]
    Malformed(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Subclass and publication-year slice of the cube.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeFilter {
    pub subclass: Option<String>,
    pub year_from: Option<i32>,
    pub year_to: Option<i32>,
}

impl CubeFilter {
    pub fn subclass(name: impl Into<String>) -> Self {
        CubeFilter {
            subclass: Some(name.into()),
            ..Default::default()
        }
    }

    fn resolve(&self, cube: &Cube) -> Result<(Dim, RangeInclusive<i32>), AggregateError> {
        if let (Some(from), Some(to)) = (self.year_from, self.year_to) {
            if from > to {
                return Err(AggregateError::InvalidRange { from, to });
            }
        }
        let dim = match &self.subclass {
            None => Dim::All,
            Some(s) if cube.subclasses().contains(s.as_str()) => Dim::value(s),
            Some(s) => return Err(AggregateError::UnknownSubclass(s.clone())),
        };
        Ok((
            dim,
            self.year_from.unwrap_or(i32::MIN)..=self.year_to.unwrap_or(i32::MAX),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenderShare {
    pub gender: String,
    pub count: u64,
    pub percent: Decimal2,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub article_count: u64,
    pub avg_age: Option<Decimal2>,
    pub age_sample_size: u64,
    pub gender_distribution: Vec<GenderShare>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub year: i32,
    pub count: u64,
    pub percent_of_year: Decimal2,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenderCount {
    pub gender: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearCount {
    pub year: i32,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubclassAges {
    pub subclass: String,
    pub count: u64,
    pub avg_age: Option<Decimal2>,
    pub age_sample_size: u64,
}

/// Aggregations restricted to genders other than male and female.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OtherGendersView {
    pub per_gender: Vec<GenderCount>,
    pub per_year: Vec<YearCount>,
    pub per_subclass: Vec<SubclassAges>,
}

impl OtherGendersView {
    pub fn is_empty(&self) -> bool {
        self.per_gender.is_empty()
    }
}

/// `male` and `female`, compared case-insensitively. Every other label is an
/// "other gender".
pub fn is_binary_gender(label: &str) -> bool {
    label.eq_ignore_ascii_case("male") || label.eq_ignore_ascii_case("female")
}

fn shares(per_gender: BTreeMap<&str, u64>, total: u64) -> Vec<GenderShare> {
    let mut out: Vec<_> = per_gender
        .into_iter()
        .map(|(g, count)| GenderShare {
            gender: g.to_owned(),
            count,
            percent: Decimal2::percent(count, total),
        })
        .collect();
    out.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.gender.cmp(&b.gender)));
    out
}

/// Article count, mean age and gender shares of a slice. `genders`, when
/// given, restricts every figure to those labels.
pub fn summary(
    cube: &Cube,
    filter: &CubeFilter,
    genders: Option<&[String]>,
) -> Result<Summary, AggregateError> {
    let (sub, years) = filter.resolve(cube)?;
    let mut total = CellStats::default();
    let mut per_gender: BTreeMap<&str, u64> = BTreeMap::new();
    for ((year, s, g), stats) in cube.iter() {
        let Some(label) = g.as_value() else { continue };
        if *s != sub || !years.contains(year) {
            continue;
        }
        if genders.is_some_and(|gs| !gs.iter().any(|w| w == label)) {
            continue;
        }
        total.merge(stats);
        *per_gender.entry(label).or_default() += stats.article_count;
    }
    if total.article_count == 0 {
        return Err(AggregateError::EmptySelection);
    }
    Ok(Summary {
        article_count: total.article_count,
        avg_age: total.avg_age(),
        age_sample_size: total.age_sample_size,
        gender_distribution: shares(per_gender, total.article_count),
    })
}

/// Gender shares of a slice, largest first.
pub fn gender_distribution(
    cube: &Cube,
    filter: &CubeFilter,
) -> Result<Vec<GenderShare>, AggregateError> {
    summary(cube, filter, None).map(|s| s.gender_distribution)
}

/// Per-year count of `gender` and its share of that year's articles.
/// Years without any article in the slice are omitted.
pub fn yearly_series(
    cube: &Cube,
    gender: &str,
    filter: &CubeFilter,
) -> Result<Vec<SeriesPoint>, AggregateError> {
    let (sub, years) = filter.resolve(cube)?;
    let target = Dim::value(gender);
    Ok(cube
        .years()
        .into_iter()
        .filter(|y| years.contains(y))
        .filter_map(|year| {
            let total = cube.get(year, &sub, &Dim::All)?.article_count;
            let count = cube.get(year, &sub, &target).map_or(0, |c| c.article_count);
            (total > 0).then(|| SeriesPoint {
                year,
                count,
                percent_of_year: Decimal2::percent(count, total),
            })
        })
        .collect())
}

pub fn other_genders_view(cube: &Cube) -> OtherGendersView {
    let mut per_gender: BTreeMap<&str, u64> = BTreeMap::new();
    let mut per_year: BTreeMap<i32, u64> = BTreeMap::new();
    let mut per_subclass: BTreeMap<&str, CellStats> = BTreeMap::new();
    for ((year, sub, gen), stats) in cube.iter() {
        let Some(label) = gen.as_value() else {
            continue;
        };
        if is_binary_gender(label) {
            continue;
        }
        match sub.as_value() {
            None => {
                *per_gender.entry(label).or_default() += stats.article_count;
                *per_year.entry(*year).or_default() += stats.article_count;
            }
            Some(s) => per_subclass.entry(s).or_default().merge(stats),
        }
    }

    let mut genders: Vec<_> = per_gender
        .into_iter()
        .map(|(g, count)| GenderCount {
            gender: g.to_owned(),
            count,
        })
        .collect();
    genders.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.gender.cmp(&b.gender)));
    let mut subclasses: Vec<_> = per_subclass
        .into_iter()
        .map(|(s, stats)| SubclassAges {
            subclass: s.to_owned(),
            count: stats.article_count,
            avg_age: stats.avg_age(),
            age_sample_size: stats.age_sample_size,
        })
        .collect();
    subclasses.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then_with(|| a.subclass.cmp(&b.subclass))
    });

    OtherGendersView {
        per_gender: genders,
        per_year: per_year
            .into_iter()
            .map(|(year, count)| YearCount { year, count })
            .collect(),
        per_subclass: subclasses,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::CleanPersonRecord;

    fn rows(cells: &[(i32, &str, &str, Option<i32>, usize)]) -> Vec<CleanPersonRecord> {
        cells
            .iter()
            .flat_map(|&(year, sub, gender, age, n)| {
                std::iter::repeat_with(move || CleanPersonRecord {
                    subclass: sub.into(),
                    instance: "p".into(),
                    wikidata_id: None,
                    gender: gender.into(),
                    age,
                    birth_year: None,
                    publication_year: year,
                })
                .take(n)
            })
            .collect()
    }

    #[test]
    fn seventeen_percent_female() {
        let cube = Cube::build(&rows(&[
            (2010, "Judge", "female", None, 17),
            (2010, "Judge", "male", None, 83),
        ]));
        let dist = gender_distribution(&cube, &CubeFilter::default()).unwrap();
        assert_eq!(dist[1].gender, "female");
        assert_eq!(dist[1].percent.to_string(), "17.00");
    }

    #[test]
    fn single_gender_and_empty_selection() {
        let cube = Cube::build(&rows(&[(2010, "Judge", "female", None, 3)]));
        let dist = gender_distribution(&cube, &CubeFilter::default()).unwrap();
        assert_eq!(dist.len(), 1);
        assert_eq!(dist[0].percent.to_string(), "100.00");
        let filter = CubeFilter {
            year_from: Some(1990),
            year_to: Some(1995),
            ..Default::default()
        };
        assert!(matches!(
            gender_distribution(&cube, &filter),
            Err(AggregateError::EmptySelection)
        ));
        assert!(matches!(
            gender_distribution(&cube, &CubeFilter::subclass("Nonexistent")),
            Err(AggregateError::UnknownSubclass(_))
        ));
        let backwards = CubeFilter {
            year_from: Some(2012),
            year_to: Some(2010),
            ..Default::default()
        };
        assert!(matches!(
            summary(&cube, &backwards, None),
            Err(AggregateError::InvalidRange { .. })
        ));
    }

    #[test]
    fn series_reports_zero_years() {
        let cube = Cube::build(&rows(&[
            (2001, "Judge", "female", None, 1),
            (2001, "Judge", "male", None, 3),
            (2002, "Judge", "male", None, 2),
        ]));
        let s = yearly_series(&cube, "female", &CubeFilter::default()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(
            (s[0].count, s[0].percent_of_year.to_string()),
            (1, "25.00".into())
        );
        assert_eq!(
            (s[1].count, s[1].percent_of_year.to_string()),
            (0, "0.00".into())
        );
        assert!(
            yearly_series(&Cube::default(), "female", &CubeFilter::default())
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn other_genders() {
        let cube = Cube::build(&rows(&[
            (2018, "Artist", "trans woman", Some(40), 3),
            (2018, "Artist", "non-binary", Some(50), 1),
            (2019, "Judge", "non-binary", None, 1),
            (2019, "Judge", "Male", None, 5),
        ]));
        let v = other_genders_view(&cube);
        assert_eq!(v.per_gender[0].gender, "trans woman");
        assert_eq!(v.per_gender[1].count, 2);
        assert_eq!(
            v.per_year,
            vec![
                YearCount {
                    year: 2018,
                    count: 4
                },
                YearCount {
                    year: 2019,
                    count: 1
                }
            ]
        );
        assert_eq!(v.per_subclass[0].subclass, "Artist");
        assert_eq!(v.per_subclass[0].avg_age.unwrap().to_string(), "42.50");

        let binary = Cube::build(&rows(&[
            (2019, "Judge", "male", None, 5),
            (2019, "Judge", "FEMALE", None, 1),
        ]));
        assert!(other_genders_view(&binary).is_empty());
    }

    #[test]
    fn gender_restricted_summary() {
        let cube = Cube::build(&rows(&[
            (2001, "Judge", "female", Some(30), 1),
            (2001, "Judge", "male", Some(50), 1),
        ]));
        let s = summary(&cube, &CubeFilter::default(), Some(&["female".to_owned()])).unwrap();
        assert_eq!(s.article_count, 1);
        assert_eq!(s.avg_age.unwrap().to_string(), "30.00");
    }
}
