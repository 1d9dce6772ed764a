//! Person records and the seven-column CSV schema shared by every pipeline stage.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact header of every raw and clean person CSV.
pub const CSV_HEADER: [&str; 7] = [
    "subclass",
    "instance",
    "wikiDataID",
    "gender",
    "age",
    "birthYear",
    "publicationYear",
];

/// Earliest birth year accepted from the knowledge graph.
pub const MIN_BIRTH_YEAR: i32 = -4000;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("invalid Wikidata id {0:?}: expected Q followed by digits")]
    InvalidQId(String),
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("unexpected CSV header {found:?}")]
    Header { found: Vec<String> },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// A Wikidata entity identifier such as `Q42`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct QId(String);

impl QId {
    pub fn parse(raw: &str) -> Result<Self, RecordError> {
        let digits = raw.strip_prefix('Q').unwrap_or("");
        if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
            Ok(QId(raw.to_owned()))
        } else {
            Err(RecordError::InvalidQId(raw.to_owned()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Extracts the id from an entity IRI like `http://www.wikidata.org/entity/Q42`.
    pub fn from_entity_iri(iri: &str) -> Option<Self> {
        let tail = iri.rsplit('/').next()?;
        QId::parse(tail).ok()
    }
}

impl fmt::Display for QId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for QId {
    type Err = RecordError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        QId::parse(s)
    }
}

impl TryFrom<String> for QId {
    type Error = RecordError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        QId::parse(&value)
    }
}

impl From<QId> for String {
    fn from(id: QId) -> Self {
        id.0
    }
}

/// One harvested row. Every attribute besides subclass and instance may be null.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RawPersonRecord {
    pub subclass: String,
    pub instance: String,
    pub wikidata_id: Option<QId>,
    pub gender: Option<String>,
    pub age: Option<i32>,
    pub birth_year: Option<i32>,
    pub publication_year: Option<i32>,
}

impl RawPersonRecord {
    pub fn new(subclass: impl Into<String>, instance: impl Into<String>) -> Self {
        RawPersonRecord {
            subclass: subclass.into(),
            instance: instance.into(),
            wikidata_id: None,
            gender: None,
            age: None,
            birth_year: None,
            publication_year: None,
        }
    }
}

/// A record that survived cleaning: gender and publication year are always known.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CleanPersonRecord {
    pub subclass: String,
    pub instance: String,
    pub wikidata_id: Option<QId>,
    pub gender: String,
    pub age: Option<i32>,
    pub birth_year: Option<i32>,
    pub publication_year: i32,
}

impl TryFrom<RawPersonRecord> for CleanPersonRecord {
    type Error = RawPersonRecord;

    fn try_from(raw: RawPersonRecord) -> Result<Self, Self::Error> {
        match (&raw.gender, raw.publication_year) {
            (Some(_), Some(year)) => Ok(CleanPersonRecord {
                gender: raw.gender.expect("checked above"),
                publication_year: year,
                subclass: raw.subclass,
                instance: raw.instance,
                wikidata_id: raw.wikidata_id,
                age: raw.age,
                birth_year: raw.birth_year,
            }),
            _ => Err(raw),
        }
    }
}

impl From<CleanPersonRecord> for RawPersonRecord {
    fn from(clean: CleanPersonRecord) -> Self {
        RawPersonRecord {
            subclass: clean.subclass,
            instance: clean.instance,
            wikidata_id: clean.wikidata_id,
            gender: Some(clean.gender),
            age: clean.age,
            birth_year: clean.birth_year,
            publication_year: Some(clean.publication_year),
        }
    }
}

fn opt_int(field: &str, name: &str, line: u64) -> Result<Option<i32>, RecordError> {
    if field.is_empty() {
        return Ok(None);
    }
    field.parse().map(Some).map_err(|_| RecordError::Malformed {
        line,
        message: format!("{name}: {field:?} is not an integer"),
    })
}

fn opt_text(field: &str) -> Option<String> {
    (!field.is_empty()).then(|| field.to_owned())
}

/// Reads a seven-column person CSV. Line numbers in errors are 1-based and
/// count the header.
pub fn read_records<R: Read>(reader: R) -> Result<Vec<RawPersonRecord>, RecordError> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header = csv.headers()?;
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(RecordError::Header {
            found: header.iter().map(str::to_owned).collect(),
        });
    }

    let mut out = Vec::new();
    let mut row = csv::StringRecord::new();
    loop {
        let more = csv.read_record(&mut row).map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            RecordError::Malformed {
                line,
                message: e.to_string(),
            }
        })?;
        if !more {
            break;
        }
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let subclass = &row[0];
        let instance = &row[1];
        if subclass.is_empty() || instance.is_empty() {
            return Err(RecordError::Malformed {
                line,
                message: "subclass and instance must be non-empty".into(),
            });
        }
        let wikidata_id = match &row[2] {
            "" => None,
            id => Some(QId::parse(id).map_err(|e| RecordError::Malformed {
                line,
                message: e.to_string(),
            })?),
        };
        out.push(RawPersonRecord {
            subclass: subclass.to_owned(),
            instance: instance.to_owned(),
            wikidata_id,
            gender: opt_text(&row[3]),
            age: opt_int(&row[4], "age", line)?,
            birth_year: opt_int(&row[5], "birthYear", line)?,
            publication_year: opt_int(&row[6], "publicationYear", line)?,
        });
    }
    Ok(out)
}

/// Reads a cleaned CSV, rejecting rows whose gender or publication year is empty.
pub fn read_clean_records<R: Read>(reader: R) -> Result<Vec<CleanPersonRecord>, RecordError> {
    read_records(reader)?
        .into_iter()
        .enumerate()
        .map(|(i, raw)| {
            CleanPersonRecord::try_from(raw).map_err(|_| RecordError::Malformed {
                line: i as u64 + 2,
                message: "clean rows need gender and publicationYear".into(),
            })
        })
        .collect()
}

fn fmt_opt(v: Option<i32>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Streaming writer for the person CSV schema (RFC 4180 quoting, `\n` line ends).
pub struct RecordWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> RecordWriter<W> {
    pub fn new(writer: W) -> Result<Self, RecordError> {
        let mut inner = Self::without_header(writer);
        inner.inner.write_record(CSV_HEADER)?;
        Ok(inner)
    }

    /// For appending to a file that already carries the header.
    pub fn without_header(writer: W) -> Self {
        RecordWriter {
            inner: csv::WriterBuilder::new()
                .has_headers(false)
                .terminator(csv::Terminator::Any(b'\n'))
                .quote_style(csv::QuoteStyle::Necessary)
                .from_writer(writer),
        }
    }

    pub fn write(&mut self, r: &RawPersonRecord) -> Result<(), RecordError> {
        self.inner.write_record([
            r.subclass.as_str(),
            r.instance.as_str(),
            r.wikidata_id.as_ref().map(QId::as_str).unwrap_or(""),
            r.gender.as_deref().unwrap_or(""),
            &fmt_opt(r.age),
            &fmt_opt(r.birth_year),
            &fmt_opt(r.publication_year),
        ])?;
        Ok(())
    }

    pub fn into_inner(self) -> Result<W, RecordError> {
        self.inner
            .into_inner()
            .map_err(|e| RecordError::Io(e.into_error()))
    }
}

pub fn write_records<'a, W, I>(writer: W, records: I) -> Result<W, RecordError>
where
    W: Write,
    I: IntoIterator<Item = &'a RawPersonRecord>,
{
    let mut w = RecordWriter::new(writer)?;
    for r in records {
        w.write(r)?;
    }
    w.into_inner()
}

pub fn write_clean_records<'a, W, I>(writer: W, records: I) -> Result<W, RecordError>
where
    W: Write,
    I: IntoIterator<Item = &'a CleanPersonRecord>,
{
    let mut w = RecordWriter::new(writer)?;
    for r in records {
        w.write(&RawPersonRecord::from(r.clone()))?;
    }
    w.into_inner()
}
