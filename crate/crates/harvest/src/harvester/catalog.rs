use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::queries::subclass_catalog_query;
use crate::sparql::{ClientError, Endpoint, Pager};

/// Subclasses never harvested. `OrganizationMember` overlaps the other
/// Person subclasses and would only contribute duplicates.
pub const DEFAULT_EXCLUDED: &[&str] = &["OrganizationMember"];

const DBO: &str = "http://dbpedia.org/ontology/";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubclassCatalog {
    /// Sorted, distinct, disjoint from `excluded`.
    pub subclasses: Vec<String>,
    pub excluded: BTreeSet<String>,
}

impl SubclassCatalog {
    /// Builds a catalog from discovered names. The default exclusions are
    /// always added to `extra_excluded`.
    pub fn new<I, S>(found: I, extra_excluded: &[&str]) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let excluded: BTreeSet<String> = DEFAULT_EXCLUDED
            .iter()
            .chain(extra_excluded)
            .map(|s| (*s).to_owned())
            .collect();
        let subclasses: BTreeSet<String> = found
            .into_iter()
            .map(Into::into)
            .filter(|s| !excluded.contains(s))
            .collect();
        SubclassCatalog {
            subclasses: subclasses.into_iter().collect(),
            excluded,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.subclasses.is_empty()
    }
}

fn is_class_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// All ontology subclasses of Person, minus the exclusions.
pub async fn enumerate_subclasses(
    endpoint: &Endpoint,
    extra_excluded: &[&str],
) -> Result<SubclassCatalog, ClientError> {
    let page_size = endpoint.config().row_limit;
    let mut pager = Pager::new(endpoint.clone(), subclass_catalog_query(), page_size)?;
    let mut found = Vec::new();
    while let Some(page) = pager.next_page().await {
        for row in page?.rows {
            let Some(iri) = row.get("subclass") else {
                continue;
            };
            match iri.strip_prefix(DBO) {
                Some(name) if is_class_name(name) => found.push(name.to_owned()),
                _ => tracing::warn!(%iri, "skipping subclass outside the ontology namespace"),
            }
        }
    }
    Ok(SubclassCatalog::new(found, extra_excluded))
}
