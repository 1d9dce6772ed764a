use wgd_core::cleaner::compute_age;
use wgd_core::record::MIN_BIRTH_YEAR;
use wgd_core::{QId, RawPersonRecord};

use crate::sparql::{Bindings, PagedQuery};

const DBR: &str = "http://dbpedia.org/resource/";

pub fn subclass_catalog_query() -> PagedQuery {
    PagedQuery::new(
        "PREFIX rdfs: <http://www.w3.org/2000/01/rdf-schema#>\nPREFIX dbo: <http://dbpedia.org/ontology/>\n",
        r#"SELECT DISTINCT ?subclass WHERE {
  ?subclass rdfs:subClassOf+ dbo:Person .
  FILTER(STRSTARTS(STR(?subclass), "http://dbpedia.org/ontology/"))
  {{KEY_FILTER}}
}"#,
        Some("subclass"),
    )
}

/// Every attribute except gender and publication year, one row per
/// (person, Wikidata id). `?rowkey` makes the order total so pages
/// partition the result, including past the sort cap.
pub fn subclass_query(subclass: &str) -> PagedQuery {
    PagedQuery::new(
        "PREFIX dbo: <http://dbpedia.org/ontology/>\nPREFIX owl: <http://www.w3.org/2002/07/owl#>\n",
        format!(
            r#"SELECT ?person ?wikidata (SAMPLE(?ageValue) AS ?age) (MIN(?birthValue) AS ?birthYear) (MIN(?deathValue) AS ?deathYear) ?rowkey WHERE {{
  ?person a dbo:{subclass} .
  OPTIONAL {{ ?person owl:sameAs ?wikidata . FILTER(STRSTARTS(STR(?wikidata), "http://www.wikidata.org/entity/Q")) }}
  OPTIONAL {{ ?person dbo:age ?ageValue }}
  OPTIONAL {{ ?person dbo:birthYear ?birthValue }}
  OPTIONAL {{ ?person dbo:deathYear ?deathValue }}
  BIND(CONCAT(STR(?person), "|", COALESCE(STR(?wikidata), "")) AS ?rowkey)
  {{{{KEY_FILTER}}}}
}}
GROUP BY ?person ?wikidata ?rowkey"#
        ),
        Some("rowkey"),
    )
}

/// Leading signed integer of an `xsd:gYear` / `xsd:dateTime` lexical form:
/// `"1815"`, `"-0044"`, `"1815+02:00"`, `"1815-12-10T00:00:00Z"`.
pub fn parse_year(lexical: &str) -> Option<i32> {
    let s = lexical.trim();
    let (sign, digits) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s.strip_prefix('+').unwrap_or(s)),
    };
    let end = digits
        .find(|c: char| !c.is_ascii_digit())
        .unwrap_or(digits.len());
    if end == 0 {
        return None;
    }
    digits[..end].parse::<i32>().ok().map(|y| sign * y)
}

fn instance_name(person_iri: &str) -> String {
    let local = person_iri.strip_prefix(DBR).unwrap_or(person_iri);
    let name = local.replace('_', " ").trim().to_owned();
    if name.is_empty() {
        person_iri.to_owned()
    } else {
        name
    }
}

/// Converts one subclass-query row. Returns `None` only if `?person` is unbound.
pub fn record_from_bindings(
    subclass: &str,
    row: &Bindings,
    current_year: i32,
) -> Option<RawPersonRecord> {
    let person = row.get("person")?;
    let mut rec = RawPersonRecord::new(subclass, instance_name(person));
    rec.wikidata_id = row
        .get("wikidata")
        .and_then(|iri| QId::from_entity_iri(iri));
    let birth = row.get("birthYear").and_then(|v| parse_year(v));
    let death = row.get("deathYear").and_then(|v| parse_year(v));
    rec.age = match row.get("age").and_then(|v| v.trim().parse::<i32>().ok()) {
        Some(age) => Some(age),
        None => compute_age(birth, death, current_year),
    };
    rec.birth_year = birth.filter(|b| (MIN_BIRTH_YEAR..=current_year).contains(b));
    Some(rec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn years() {
        assert_eq!(parse_year("1815"), Some(1815));
        assert_eq!(parse_year("-0044"), Some(-44));
        assert_eq!(parse_year("1815+02:00"), Some(1815));
        assert_eq!(parse_year("1815-12-10T00:00:00Z"), Some(1815));
        assert_eq!(parse_year("-0100-01-01T00:00:00Z"), Some(-100));
        assert_eq!(parse_year("abc"), None);
        assert_eq!(parse_year(""), None);
    }

    fn row(pairs: &[(&str, &str)]) -> Bindings {
        pairs
            .iter()
            .map(|(k, v)| ((*k).to_owned(), (*v).to_owned()))
            .collect()
    }

    #[test]
    fn row_conversion() {
        let r = record_from_bindings(
            "Judge",
            &row(&[
                ("person", "http://dbpedia.org/resource/Julius_Caesar"),
                ("wikidata", "http://www.wikidata.org/entity/Q1048"),
                ("birthYear", "-0100"),
                ("deathYear", "-0044"),
            ]),
            2024,
        )
        .unwrap();
        assert_eq!(r.instance, "Julius Caesar");
        assert_eq!(r.wikidata_id.unwrap().as_str(), "Q1048");
        assert_eq!((r.age, r.birth_year), (Some(56), Some(-100)));
        assert_eq!((r.gender, r.publication_year), (None, None));
    }

    #[test]
    fn out_of_range_birth_keeps_computed_age() {
        let r = record_from_bindings(
            "Judge",
            &row(&[
                ("person", "http://dbpedia.org/resource/X"),
                ("birthYear", "5419"),
            ]),
            2024,
        )
        .unwrap();
        assert_eq!((r.age, r.birth_year), (Some(-3395), None));
    }

    #[test]
    fn dbpedia_age_wins() {
        let r = record_from_bindings(
            "Artist",
            &row(&[
                ("person", "http://dbpedia.org/resource/Y"),
                ("age", "4431"),
                ("birthYear", "1990"),
            ]),
            2024,
        )
        .unwrap();
        assert_eq!(r.age, Some(4431));
        assert!(record_from_bindings("Artist", &row(&[]), 2024).is_none());
    }

    #[test]
    fn subclass_query_shape() {
        let q = subclass_query("Judge");
        assert!(q.body.contains("?person a dbo:Judge ."));
        assert!(q.body.contains("{{KEY_FILTER}}"));
        assert_eq!(q.sort_key.as_deref(), Some("rowkey"));
    }
}
