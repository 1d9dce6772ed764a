//! A small knowledge graph served by the mock endpoints: an ontology of
//! Person subclasses, DBpedia-style person resources, Wikidata entities and
//! Wikipedia article histories.

use std::collections::BTreeMap;
use std::sync::Arc;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::mock::{Responder, Row};

pub const DBR: &str = "http://dbpedia.org/resource/";
pub const DBO: &str = "http://dbpedia.org/ontology/";
pub const WD: &str = "http://www.wikidata.org/entity/";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldPerson {
    /// Resource local name, e.g. `Ada_Lovelace`.
    pub resource: String,
    pub subclasses: Vec<String>,
    #[serde(default)]
    pub wikidata: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age: Option<i32>,
    /// Lexical `xsd:gYear` values, e.g. `1815` or `-0044`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub birth_year: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub death_year: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldEntity {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub birth: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub death: Option<i32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureWorld {
    /// `rdfs:subClassOf+ dbo:Person` results, duplicates included.
    pub subclass_declarations: Vec<String>,
    pub persons: Vec<WorldPerson>,
    pub entities: BTreeMap<String, WorldEntity>,
    /// Article title (with spaces) to first-revision timestamp.
    pub articles: BTreeMap<String, String>,
}

const BUNDLED: &str = include_str!("../fixtures/world/world.json");

impl FixtureWorld {
    /// The reviewed world whose harvest output is pinned by golden CSVs.
    pub fn bundled() -> FixtureWorld {
        serde_json::from_str(BUNDLED).expect("bundled world parses")
    }

    /// One subclass holding `n` persons with unique names and ids.
    pub fn synthetic(subclass: &str, n: usize) -> FixtureWorld {
        let mut w = FixtureWorld {
            subclass_declarations: vec![subclass.to_owned()],
            ..FixtureWorld::default()
        };
        for i in 0..n {
            let q = format!("Q{}", 5_000_000 + i);
            w.persons.push(WorldPerson {
                resource: format!("Person_{i:06}"),
                subclasses: vec![subclass.to_owned()],
                wikidata: vec![q],
                birth_year: Some(format!("{}", 1900 + (i % 100))),
                ..WorldPerson::default()
            });
        }
        w
    }

    /// Bindings exactly as the harvester's subclass query would return them.
    pub fn subclass_rows(&self, subclass: &str) -> Vec<Row> {
        let mut rows = Vec::new();
        for p in self
            .persons
            .iter()
            .filter(|p| p.subclasses.iter().any(|s| s == subclass))
        {
            let person = format!("{DBR}{}", p.resource);
            let ids: Vec<Option<&String>> = if p.wikidata.is_empty() {
                vec![None]
            } else {
                p.wikidata.iter().map(Some).collect()
            };
            for id in ids {
                let mut r = Row::new();
                r.insert("person".into(), person.clone());
                let wd = id.map(|q| format!("{WD}{q}"));
                r.insert(
                    "rowkey".into(),
                    format!("{person}|{}", wd.clone().unwrap_or_default()),
                );
                if let Some(wd) = wd {
                    r.insert("wikidata".into(), wd);
                }
                if let Some(a) = p.age {
                    r.insert("age".into(), a.to_string());
                }
                if let Some(b) = &p.birth_year {
                    r.insert("birthYear".into(), b.clone());
                }
                if let Some(d) = &p.death_year {
                    r.insert("deathYear".into(), d.clone());
                }
                rows.push(r);
            }
        }
        rows
    }

    /// Responder for the DBpedia-like endpoint.
    pub fn dbpedia_responder(self: &Arc<Self>) -> Responder {
        let world = Arc::clone(self);
        let subclass_re = Regex::new(r"\?person a dbo:(\w+)").unwrap();
        let same_as_re =
            Regex::new(r"owl:sameAs <http://www\.wikidata\.org/entity/(Q\d+)>").unwrap();
        Arc::new(move |q: &str| {
            if q.contains("rdfs:subClassOf") {
                return Ok(world
                    .subclass_declarations
                    .iter()
                    .map(|s| Row::from([("subclass".to_owned(), format!("{DBO}{s}"))]))
                    .collect());
            }
            if let Some(c) = subclass_re.captures(q) {
                return Ok(world.subclass_rows(&c[1]));
            }
            if let Some(c) = same_as_re.captures(q) {
                let id = &c[1];
                let mut rows: Vec<Row> = world
                    .persons
                    .iter()
                    .filter(|p| p.wikidata.iter().any(|w| w == id))
                    .map(|p| Row::from([("person".to_owned(), format!("{DBR}{}", p.resource))]))
                    .collect();
                rows.sort();
                rows.dedup();
                return Ok(rows);
            }
            Err((
                400,
                format!("fixture endpoint does not understand query:\n{q}"),
            ))
        })
    }

    /// Responder for the Wikidata-like endpoint.
    pub fn wikidata_responder(self: &Arc<Self>) -> Responder {
        let world = Arc::clone(self);
        let item_re = Regex::new(r"BIND\(wd:(Q\d+) AS \?item\)").unwrap();
        Arc::new(move |q: &str| {
            let Some(c) = item_re.captures(q) else {
                return Err((
                    400,
                    format!("fixture endpoint does not understand query:\n{q}"),
                ));
            };
            let Some(e) = world.entities.get(&c[1]) else {
                return Ok(vec![]);
            };
            let mut row = Row::new();
            if q.contains("wdt:P21") {
                if let Some(g) = &e.gender {
                    row.insert(
                        "gender".into(),
                        format!("{WD}gender/{}", g.replace(' ', "_")),
                    );
                    row.insert("genderLabel".into(), g.clone());
                }
            } else if q.contains("wdt:P569") {
                if let Some(b) = e.birth {
                    row.insert("birth".into(), format!("{b:04}-01-01T00:00:00Z"));
                }
                if let Some(d) = e.death {
                    row.insert("death".into(), format!("{d:04}-01-01T00:00:00Z"));
                }
            } else {
                return Err((
                    400,
                    format!("fixture endpoint does not understand query:\n{q}"),
                ));
            }
            Ok(vec![row])
        })
    }
}
