use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::decimal::Decimal2;
use super::AggregateError;
use crate::record::CleanPersonRecord;

/// Literal used for rollup members in CSV and JSON.
pub const ALL: &str = "__ALL__";

pub const CUBE_CSV_HEADER: [&str; 6] = [
    "year",
    "subclass",
    "gender",
    "article_count",
    "avg_age",
    "age_sample_size",
];

/// A subclass or gender coordinate; `All` is the rollup over every value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dim {
    All,
    Value(String),
}

impl Dim {
    pub fn value(v: impl Into<String>) -> Self {
        Dim::Value(v.into())
    }

    pub fn as_value(&self) -> Option<&str> {
        match self {
            Dim::All => None,
            Dim::Value(v) => Some(v),
        }
    }

    pub fn parse(s: &str) -> Self {
        if s == ALL {
            Dim::All
        } else {
            Dim::Value(s.to_owned())
        }
    }
}

impl From<Option<&str>> for Dim {
    fn from(v: Option<&str>) -> Self {
        v.map_or(Dim::All, Dim::value)
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_value().unwrap_or(ALL))
    }
}

impl Serialize for Dim {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Dim {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Dim::parse(&String::deserialize(d)?))
    }
}

/// Additive statistics of one cell. Ages are integers, so `age_sum` keeps
/// every rollup and mean exact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CellStats {
    pub article_count: u64,
    pub age_sum: i64,
    pub age_sample_size: u64,
}

impl CellStats {
    pub fn add_row(&mut self, age: Option<i32>) {
        self.article_count += 1;
        if let Some(a) = age {
            self.age_sum += i64::from(a);
            self.age_sample_size += 1;
        }
    }

    pub fn merge(&mut self, other: &CellStats) {
        self.article_count += other.article_count;
        self.age_sum += other.age_sum;
        self.age_sample_size += other.age_sample_size;
    }

    /// Unrounded mean over non-null ages.
    pub fn mean_age(&self) -> Option<f64> {
        (self.age_sample_size > 0).then(|| self.age_sum as f64 / self.age_sample_size as f64)
    }

    pub fn avg_age(&self) -> Option<Decimal2> {
        (self.age_sample_size > 0).then(|| {
            Decimal2::from_ratio(i128::from(self.age_sum), i128::from(self.age_sample_size))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregateCell {
    pub year: i32,
    pub subclass: Dim,
    pub gender: Dim,
    pub article_count: u64,
    pub avg_age: Option<Decimal2>,
    pub age_sample_size: u64,
    pub age_sum: i64,
}

impl AggregateCell {
    pub fn stats(&self) -> CellStats {
        CellStats {
            article_count: self.article_count,
            age_sum: self.age_sum,
            age_sample_size: self.age_sample_size,
        }
    }
}

pub type CellKey = (i32, Dim, Dim);

#[derive(Debug, Serialize, Deserialize)]
struct CubeDocument {
    cells: Vec<AggregateCell>,
}

/// The (publication year, subclass, gender) cube with ALL rollups on subclass,
/// gender, and both. Immutable once built.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cube {
    cells: BTreeMap<CellKey, CellStats>,
}

impl Cube {
    pub fn build<'a>(records: impl IntoIterator<Item = &'a CleanPersonRecord>) -> Self {
        let mut cells: BTreeMap<CellKey, CellStats> = BTreeMap::new();
        for r in records {
            for sub in [Dim::value(&r.subclass), Dim::All] {
                for gen in [Dim::value(&r.gender), Dim::All] {
                    cells
                        .entry((r.publication_year, sub.clone(), gen))
                        .or_default()
                        .add_row(r.age);
                }
            }
        }
        Cube { cells }
    }

    pub fn from_cells(
        cells: impl IntoIterator<Item = AggregateCell>,
    ) -> Result<Self, AggregateError> {
        let mut map = BTreeMap::new();
        for c in cells {
            let key = (c.year, c.subclass.clone(), c.gender.clone());
            if map.insert(key, c.stats()).is_some() {
                return Err(AggregateError::Malformed(format!(
                    "duplicate cell ({}, {}, {})",
                    c.year, c.subclass, c.gender
                )));
            }
        }
        let cube = Cube { cells: map };
        if !cube.rollups_consistent() {
            return Err(AggregateError::Malformed(
                "rollup cells disagree with their children".into(),
            ));
        }
        Ok(cube)
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn get(&self, year: i32, subclass: &Dim, gender: &Dim) -> Option<&CellStats> {
        self.cells.get(&(year, subclass.clone(), gender.clone()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CellKey, &CellStats)> {
        self.cells.iter()
    }

    pub fn cells(&self) -> impl Iterator<Item = AggregateCell> + '_ {
        self.cells
            .iter()
            .map(|((year, subclass, gender), s)| AggregateCell {
                year: *year,
                subclass: subclass.clone(),
                gender: gender.clone(),
                article_count: s.article_count,
                avg_age: s.avg_age(),
                age_sample_size: s.age_sample_size,
                age_sum: s.age_sum,
            })
    }

    pub fn years(&self) -> BTreeSet<i32> {
        self.cells.keys().map(|(y, _, _)| *y).collect()
    }

    pub fn subclasses(&self) -> BTreeSet<&str> {
        self.cells
            .keys()
            .filter_map(|(_, s, _)| s.as_value())
            .collect()
    }

    pub fn genders(&self) -> BTreeSet<&str> {
        self.cells
            .keys()
            .filter_map(|(_, _, g)| g.as_value())
            .collect()
    }

    /// Every ALL cell equals the sum of its concrete children.
    pub fn rollups_consistent(&self) -> bool {
        let mut by_gender: BTreeMap<(i32, &Dim), CellStats> = BTreeMap::new();
        let mut by_subclass: BTreeMap<(i32, &Dim), CellStats> = BTreeMap::new();
        for ((year, sub, gen), stats) in &self.cells {
            if let Dim::Value(_) = gen {
                by_gender.entry((*year, sub)).or_default().merge(stats);
            }
            if let Dim::Value(_) = sub {
                by_subclass.entry((*year, gen)).or_default().merge(stats);
            }
        }
        let gender_ok = by_gender
            .iter()
            .all(|((year, sub), sum)| self.get(*year, sub, &Dim::All) == Some(sum));
        let subclass_ok = by_subclass
            .iter()
            .all(|((year, gen), sum)| self.get(*year, &Dim::All, gen) == Some(sum));
        let no_orphans = self.cells.keys().all(|(year, sub, gen)| match (sub, gen) {
            (_, Dim::All) => by_gender.contains_key(&(*year, sub)),
            (Dim::All, _) => by_subclass.contains_key(&(*year, gen)),
            _ => true,
        });
        gender_ok && subclass_ok && no_orphans
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<W, AggregateError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(CUBE_CSV_HEADER)?;
        for c in self.cells() {
            w.write_record([
                c.year.to_string(),
                c.subclass.to_string(),
                c.gender.to_string(),
                c.article_count.to_string(),
                c.avg_age.map(|a| a.to_string()).unwrap_or_default(),
                c.age_sample_size.to_string(),
            ])?;
        }
        w.into_inner()
            .map_err(|e| AggregateError::Io(e.into_error()))
    }

    /// Reads the presentation CSV. Means there are rounded, so the returned
    /// cells carry rounded averages and no age sums.
    pub fn read_csv_cells<R: Read>(reader: R) -> Result<Vec<CsvCell>, AggregateError> {
        let mut r = csv::Reader::from_reader(reader);
        if r.headers()?.iter().ne(CUBE_CSV_HEADER.iter().copied()) {
            return Err(AggregateError::Malformed(
                "unexpected cube CSV header".into(),
            ));
        }
        let mut out = Vec::new();
        for row in r.records() {
            let row = row?;
            let bad = || AggregateError::Malformed(format!("bad cube row {:?}", row));
            out.push(CsvCell {
                year: row[0].parse().map_err(|_| bad())?,
                subclass: Dim::parse(&row[1]),
                gender: Dim::parse(&row[2]),
                article_count: row[3].parse().map_err(|_| bad())?,
                avg_age: match &row[4] {
                    "" => None,
                    s => Some(s.to_owned()),
                },
                age_sample_size: row[5].parse().map_err(|_| bad())?,
            });
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        let doc = CubeDocument {
            cells: self.cells().collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("cube serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, AggregateError> {
        let doc: CubeDocument =
            serde_json::from_str(text).map_err(|e| AggregateError::Malformed(e.to_string()))?;
        for c in &doc.cells {
            let expected = c.stats().avg_age();
            if c.avg_age != expected {
                return Err(AggregateError::Malformed(format!(
                    "avg_age of ({}, {}, {}) does not match its age sum",
                    c.year, c.subclass, c.gender
                )));
            }
        }
        Cube::from_cells(doc.cells)
    }
}

/// One row of the cube CSV with the average kept as its printed text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvCell {
    pub year: i32,
    pub subclass: Dim,
    pub gender: Dim,
    pub article_count: u64,
    pub avg_age: Option<String>,
    pub age_sample_size: u64,
}
