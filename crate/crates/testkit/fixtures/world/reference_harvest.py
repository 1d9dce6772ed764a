"""Writes golden/<Subclass>.csv: what a complete harvest of world.json must produce.

Straight-line restatement of the harvest rules, independent of the Rust code:
  * catalog = distinct declared subclasses minus OrganizationMember, sorted;
  * one row per (person, Wikidata id) in the subclass, or one id-less row,
    ordered by the row key "<person IRI>|<Wikidata IRI or empty>";
  * instance = resource local name with underscores as spaces;
  * age = DBpedia age if given, else death - birth, else 2024 - birth
    (computed from the raw years even when birthYear is rejected);
  * birthYear kept only inside [-4000, 2024];
  * gender = English label of the entity's gender, empty if unknown;
  * publicationYear = year of the article's first revision, empty if no article.
"""
import csv
import json
import os

CURRENT_YEAR = 2024
DBR = "http://dbpedia.org/resource/"
WD = "http://www.wikidata.org/entity/"
HEADER = ["subclass", "instance", "wikiDataID", "gender", "age", "birthYear", "publicationYear"]

with open("world.json", encoding="utf-8") as f:
    world = json.load(f)


def year(lexical):
    if lexical is None:
        return None
    sign = -1 if lexical.startswith("-") else 1
    digits = lexical.lstrip("-")
    n = 0
    for ch in digits:
        if not ch.isdigit():
            break
        n = n * 10 + int(ch)
    return sign * n


catalog = sorted(set(world["subclass_declarations"]) - {"OrganizationMember"})
os.makedirs("golden", exist_ok=True)
for name in os.listdir("golden"):
    os.remove(os.path.join("golden", name))

for sub in catalog:
    rows = []
    for p in world["persons"]:
        if sub not in p["subclasses"]:
            continue
        person_iri = DBR + p["resource"]
        for q in (p["wikidata"] or [None]):
            key = person_iri + "|" + (WD + q if q else "")
            birth = year(p.get("birth_year"))
            death = year(p.get("death_year"))
            if "age" in p:
                age = p["age"]
            elif birth is not None and death is not None:
                age = death - birth
            elif birth is not None:
                age = CURRENT_YEAR - birth
            else:
                age = None
            if birth is not None and not (-4000 <= birth <= CURRENT_YEAR):
                birth = None
            gender = None
            if q is not None and q in world["entities"]:
                gender = world["entities"][q].get("gender")
            title = p["resource"].replace("_", " ")
            created = world["articles"].get(title)
            pub = int(created[:4]) if created else None
            rows.append((key, [sub, title, q, gender, age, birth, pub]))
    rows.sort(key=lambda r: r[0])
    with open(os.path.join("golden", f"{sub}.csv"), "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(HEADER)
        for _, r in rows:
            w.writerow(["" if v is None else v for v in r])
    print(sub, len(rows))
