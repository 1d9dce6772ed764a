//! Seeded random datasets shaped to hit every cleaning rule.

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use wgd_core::cleaner::FixtureEntity;
use wgd_core::{CleanPersonRecord, QId, RawPersonRecord};

const SUBCLASSES: [&str; 4] = ["Judge", "Athlete", "Artist", "Monarch"];
const NAMES: [&str; 10] = [
    "Ada Lovelace",
    "Ada_Lovelace",
    "Zoe\u{301} Roy",
    "Zo\u{e9} Roy",
    "A. Smith",
    "B. Smith",
    "Grace Hopper",
    "Imhotep",
    "Mary, Queen of Scots",
    "J \"Jack\" Doe",
];
const GENDERS: [&str; 10] = [
    "male",
    "female",
    "female",
    "male",
    "trans woman",
    "non-binary",
    " male ",
    "http://example.org/gender/x",
    "https://www.wikidata.org/.well-known/genid/4f2a",
    "   ",
];

/// A raw dataset plus the resolver entities its ids refer to.
#[derive(Debug, Clone)]
pub struct RawFixture {
    pub records: Vec<RawPersonRecord>,
    pub entities: BTreeMap<QId, FixtureEntity>,
}

fn qid(n: u32) -> QId {
    QId::parse(&format!("Q{n}")).expect("valid id")
}

pub fn raw_fixture(seed: u64, max_rows: usize) -> RawFixture {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.random_range(0..=max_rows);
    let id_pool = rng.random_range(1..=(n as u32 / 3).max(2));
    let mut records: Vec<RawPersonRecord> = Vec::with_capacity(n);
    while records.len() < n {
        if !records.is_empty() && rng.random_bool(0.15) {
            let copy = records.choose(&mut rng).expect("non-empty").clone();
            records.push(copy);
            continue;
        }
        let mut r = RawPersonRecord::new(
            *SUBCLASSES.choose(&mut rng).expect("non-empty"),
            *NAMES.choose(&mut rng).expect("non-empty"),
        );
        if rng.random_bool(0.75) {
            r.wikidata_id = Some(qid(rng.random_range(1..=id_pool)));
        }
        if rng.random_bool(0.9) {
            r.gender = Some(GENDERS.choose(&mut rng).expect("non-empty").to_string());
        }
        r.age = match rng.random_range(0..10) {
            0 => None,
            1 => Some(rng.random_range(-4000..=0)),
            2 => Some(rng.random_range(101..=5000)),
            3 => Some(rng.random_range(101..=130)),
            _ => Some(rng.random_range(1..=100)),
        };
        if rng.random_bool(0.7) {
            r.birth_year = Some(rng.random_range(1800..=2010));
        }
        if rng.random_bool(0.9) {
            r.publication_year = Some(rng.random_range(2001..=2024));
        }
        records.push(r);
    }

    let mut entities = BTreeMap::new();
    for i in 1..=id_pool {
        let roll = rng.random_range(0..10);
        if roll == 0 {
            continue;
        }
        let birth = rng.random_bool(0.8).then(|| rng.random_range(1850..=2030));
        let death = rng.random_bool(0.5).then(|| rng.random_range(1800..=2024));
        entities.insert(
            qid(i),
            FixtureEntity {
                name: rng
                    .random_bool(0.9)
                    .then(|| NAMES.choose(&mut rng).expect("non-empty").to_string()),
                birth,
                death,
                fail: roll == 1,
            },
        );
    }
    RawFixture { records, entities }
}

/// A random clean dataset with at most ten gender labels.
pub fn clean_dataset(seed: u64, max_rows: usize) -> Vec<CleanPersonRecord> {
    const LABELS: [&str; 10] = [
        "male",
        "female",
        "trans woman",
        "trans man",
        "non-binary",
        "genderfluid",
        "intersex",
        "two-spirit",
        "agender",
        "Female",
    ];
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.random_range(0..=max_rows);
    let genders = rng.random_range(1..=LABELS.len());
    (0..n)
        .map(|i| CleanPersonRecord {
            subclass: SUBCLASSES.choose(&mut rng).expect("non-empty").to_string(),
            instance: format!("Person {i}"),
            wikidata_id: rng.random_bool(0.8).then(|| qid(i as u32 + 1)),
            gender: LABELS[rng.random_range(0..genders)].to_string(),
            age: rng.random_bool(0.7).then(|| rng.random_range(0..=117)),
            birth_year: None,
            publication_year: rng.random_range(2001..=2012),
        })
        .collect()
}
