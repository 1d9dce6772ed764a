//! Cleaning and aggregation of harvested `Person` biography metadata.
//!
//! [`cleaner`] turns raw harvested rows into [`CleanPersonRecord`]s with an
//! auditable per-stage report, and [`aggregator`] rolls clean rows up into
//! the (year, subclass, gender) cube the dashboard API serves.

pub mod aggregator;
pub mod cleaner;
pub mod record;

pub use record::{CleanPersonRecord, QId, RawPersonRecord, RecordError};
