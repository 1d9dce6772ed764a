"""Builds world.json: the fixture knowledge graph behind the harvest golden files.

Hand-written persons cover the awkward cases (several subclasses, several or no
Wikidata ids, unknown entities, missing articles, odd years, CSV-hostile
names); the rest are seeded filler.
"""
import json
import random

rng = random.Random(20240901)

DECLARED = ["Athlete", "Judge", "Artist", "OrganizationMember", "BeautyQueen", "Judge", "Athlete"]

persons = []
entities = {}
articles = {}


def add(resource, subclasses, ids=(), age=None, birth=None, death=None, gender=None,
        created=None, entity=True, ebirth=None, edeath=None):
    p = {"resource": resource, "subclasses": list(subclasses), "wikidata": list(ids)}
    if age is not None:
        p["age"] = age
    if birth is not None:
        p["birth_year"] = birth
    if death is not None:
        p["death_year"] = death
    persons.append(p)
    if entity:
        for q in ids:
            e = {}
            if gender is not None:
                e["gender"] = gender
            if ebirth is not None:
                e["birth"] = ebirth
            if edeath is not None:
                e["death"] = edeath
            entities[q] = e
    if created is not None:
        articles[resource.replace("_", " ")] = created


add("Ada_Lovelace", ["Artist"], ["Q7259"], birth="1815", death="1852", gender="female",
    created="2001-11-05T15:02:12Z")
add("Serena_Williams", ["Athlete"], ["Q11459"], birth="1981", gender="female",
    created="2002-05-28T00:52:33Z")
# same person in two subclasses
add("Sandra_Day_O'Connor", ["Judge", "Athlete"], ["Q157037"], birth="1930", death="2023",
    gender="female", created="2002-02-25T15:51:15Z")
# two ids for one resource; the second is unknown to Wikidata
add("John_Smith_(judge)", ["Judge"], ["Q4200001", "Q4200002"], birth="1950", gender="male",
    created="2006-03-14T10:00:00Z", entity=False)
entities["Q4200001"] = {"gender": "male", "birth": 1950}
# no Wikidata id at all
add("Unlinked_Person", ["Artist"], [], birth="1977", created="2010-08-01T12:00:00Z")
# DBpedia age present and absurd; cleaning repairs it from the entity years
add("Ancient_Sculptor", ["Artist"], ["Q4300001"], age=-3395, birth="1901", death="1961",
    gender="male", created="2004-07-13T08:11:02Z", ebirth=1900, edeath=1960)
add("Overflow_Runner", ["Athlete"], ["Q4300002"], age=4431, gender="male",
    created="2024-01-01T09:30:00Z")
# birth year in the future: age goes negative, birthYear dropped
add("Future_Born", ["Judge"], ["Q4300003"], birth="5419", gender="male",
    created="2015-06-06T06:06:06Z")
# before the earliest accepted year
add("Too_Early", ["Artist"], ["Q4300004"], birth="-5000", gender="female",
    created="2012-12-12T12:12:12Z")
add("Julius_Caesar", ["Judge"], ["Q1048"], birth="-0100", death="-0044", gender="male",
    created="2001-09-23T00:00:00Z")
# entity without a gender statement, article missing
add("Nobody_Knows", ["BeautyQueen"], ["Q4300005"], birth="1999")
add("Sam_Rivers_(artist)", ["Artist"], ["Q4300006"], birth="1980", gender="non-binary",
    created="2018-02-02T02:02:02Z")
add("Alex_Morgan_(painter)", ["Artist"], ["Q4300007"], birth="1975", gender="trans woman",
    created="2019-03-03T03:03:03Z")
add("Link_Gender", ["Athlete"], ["Q4300008"], birth="1960",
    gender="http://www.wikidata.org/.well-known/genid/5e3c", created="2008-08-08T08:08:08Z")
# CSV-hostile names
add("Smith,_Jane", ["BeautyQueen"], ["Q4300009"], birth="1995", gender="female",
    created="2016-01-01T00:00:00Z")
add('Dwayne_"The_Rock"_Johnson', ["Athlete"], ["Q10738"], birth="1972", gender="male",
    created="2003-04-04T04:04:04Z")
add("Zoë_Ball", ["Artist"], ["Q4300010"], birth="1970", gender="female",
    created="2004-10-10T10:10:10Z")
add("Émile_Zola", ["Artist"], ["Q504"], birth="1840", death="1902", gender="male",
    created="2002-01-01T01:01:01Z")
# only in the excluded subclass
add("Club_Member", ["OrganizationMember"], ["Q4300011"], birth="1960", gender="male",
    created="2011-11-11T11:11:11Z")
# in an excluded and an included subclass
add("Union_Judge", ["OrganizationMember", "Judge"], ["Q4300012"], birth="1944", gender="female",
    created="2009-09-09T09:09:09Z")

FIRST = ["Avery", "Blake", "Casey", "Devon", "Emery", "Finley", "Harper", "Jordan", "Kendall", "Logan",
         "Morgan", "Parker", "Quinn", "Reese", "Rowan", "Sawyer", "Taylor", "Skyler"]
LAST = ["Abbott", "Barnes", "Cortez", "Dalton", "Ellis", "Fischer", "Garcia", "Hughes", "Ibarra", "Jensen"]
GENDERS = ["male"] * 6 + ["female"] * 3 + ["genderfluid"]
SUBS = ["Athlete", "Judge", "Artist", "BeautyQueen"]

names = [f"{f}_{l}" for f in FIRST for l in LAST]
rng.shuffle(names)
for i, name in enumerate(names[:44]):
    q = f"Q{4400000 + i}"
    b = rng.randint(1930, 2004)
    dead = rng.random() < 0.2 and b < 1990
    d = str(rng.randint(b + 20, 2023)) if dead else None
    created = None
    if rng.random() < 0.93:
        created = f"{rng.randint(2001, 2023)}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}T12:00:00Z"
    add(name, [rng.choice(SUBS)], [q], birth=str(b), death=d, gender=rng.choice(GENDERS), created=created)

world = {
    "subclass_declarations": DECLARED,
    "persons": persons,
    "entities": dict(sorted(entities.items())),
    "articles": dict(sorted(articles.items())),
}
with open("world.json", "w", encoding="utf-8") as f:
    json.dump(world, f, ensure_ascii=False, indent=1)
    f.write("\n")
