//! Harvesting of Person biography metadata from SPARQL endpoints and the
//! Wikipedia API, with checkpointed resume.

pub mod harvester;
mod resolver;
pub mod sparql;

pub use resolver::LiveResolver;
