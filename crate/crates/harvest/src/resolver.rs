use std::collections::HashMap;
use std::sync::Mutex;

use wgd_core::cleaner::{EntityResolver, LifeYears, ResolveError};
use wgd_core::QId;

use crate::harvester::parse_year;
use crate::sparql::{ClientError, Endpoint};

const DBR: &str = "http://dbpedia.org/resource/";

/// Entity resolver backed by the live endpoints: names come from the DBpedia
/// resource linked to the Wikidata id, birth and death years from Wikidata
/// (P569 / P570).
///
/// Answers are memoized, so repeated lookups within a run agree. The
/// resolver owns a small runtime and must not be used from async code.
pub struct LiveResolver {
    dbpedia: Endpoint,
    wikidata: Endpoint,
    runtime: tokio::runtime::Runtime,
    names: Mutex<HashMap<QId, Result<Option<String>, String>>>,
    years: Mutex<HashMap<QId, Result<Option<LifeYears>, String>>>,
}

impl LiveResolver {
    pub fn new(dbpedia: Endpoint, wikidata: Endpoint) -> std::io::Result<Self> {
        let runtime = tokio::runtime::Builder::new_current_thread()
            .enable_all()
            .build()?;
        Ok(LiveResolver {
            dbpedia,
            wikidata,
            runtime,
            names: Mutex::new(HashMap::new()),
            years: Mutex::new(HashMap::new()),
        })
    }

    fn name_query(id: &QId) -> String {
        format!(
            r#"PREFIX owl: <http://www.w3.org/2002/07/owl#>
SELECT ?person WHERE {{
  ?person owl:sameAs <http://www.wikidata.org/entity/{id}> .
  FILTER(STRSTARTS(STR(?person), "{DBR}"))
}}
ORDER BY ?person
LIMIT 10
"#
        )
    }

    fn years_query(id: &QId) -> String {
        format!(
            r#"PREFIX wd: <http://www.wikidata.org/entity/>
PREFIX wdt: <http://www.wikidata.org/prop/direct/>
SELECT ?birth ?death WHERE {{
  BIND(wd:{id} AS ?item)
  OPTIONAL {{ ?item wdt:P569 ?birth }}
  OPTIONAL {{ ?item wdt:P570 ?death }}
}}
LIMIT 1
"#
        )
    }

    fn run(
        &self,
        endpoint: &Endpoint,
        query: String,
    ) -> Result<Vec<crate::sparql::Bindings>, ClientError> {
        self.runtime.block_on(async {
            let page = endpoint.execute_select(&query).await?;
            Ok(page.rows)
        })
    }
}

fn unavailable(id: &QId, message: String) -> ResolveError {
    ResolveError::Unavailable {
        id: id.as_str().to_owned(),
        message,
    }
}

impl EntityResolver for LiveResolver {
    fn lookup_name(&self, id: &QId) -> Result<Option<String>, ResolveError> {
        if let Some(hit) = self.names.lock().unwrap().get(id) {
            return hit.clone().map_err(|m| unavailable(id, m));
        }
        let answer = self
            .run(&self.dbpedia, Self::name_query(id))
            .map(|rows| {
                rows.first()
                    .and_then(|r| r.get("person"))
                    .map(|iri| iri.strip_prefix(DBR).unwrap_or(iri).replace('_', " "))
            })
            .map_err(|e| e.to_string());
        self.names
            .lock()
            .unwrap()
            .insert(id.clone(), answer.clone());
        answer.map_err(|m| unavailable(id, m))
    }

    fn lookup_years(&self, id: &QId) -> Result<Option<LifeYears>, ResolveError> {
        if let Some(hit) = self.years.lock().unwrap().get(id) {
            return hit.clone().map_err(|m| unavailable(id, m));
        }
        let answer = self
            .run(&self.wikidata, Self::years_query(id))
            .map(|rows| {
                rows.first().map(|r| LifeYears {
                    birth: r.get("birth").and_then(|v| parse_year(v)),
                    death: r.get("death").and_then(|v| parse_year(v)),
                })
            })
            .map_err(|e| e.to_string());
        self.years
            .lock()
            .unwrap()
            .insert(id.clone(), answer.clone());
        answer.map_err(|m| unavailable(id, m))
    }
}
