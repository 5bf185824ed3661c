#!/usr/bin/env python3
"""Regenerates the checked-in test fixtures.

1. A literature-search source directory (proposals.json + ads/<hash>.json)
   with topic-coherent synthetic text.
2. The synthetic corpus built from it by `expertmatch synth`.
3. Two hashed-projection embedding files for that corpus, written in the
   interchange format.

Usage: python3 scripts/gen_fixture.py [--binary target/debug/expertmatch]
"""

import argparse
import hashlib
import json
import math
import random
import re
import subprocess
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "crates" / "core" / "tests" / "fixtures"
SOURCE = FIXTURES / "ads-source"
CORPUS = FIXTURES / "corpus"

N_PROPOSALS = 60
SEED = 20240501
REFERENCE_YEAR = 2024
QUERY_YEARS = 10
QUERY_ROWS = 50
FIELDS = "title,abstract,year,author"

TOPICS = {
    "exoplanets": "exoplanet transit radial velocity hot jupiter atmosphere transmission spectrum super earth habitable zone host star planetary system orbital period occultation",
    "star formation": "molecular cloud protostar outflow dense core accretion disk young stellar object infrared dust extinction filament collapse protostellar envelope",
    "galaxies": "galaxy morphology stellar mass star formation rate metallicity gradient spiral arm bulge disk kinematics integral field spectroscopy quenching",
    "cosmology": "dark matter halo weak lensing galaxy cluster redshift survey baryon acoustic oscillation dark energy cosmic microwave background power spectrum",
    "agn": "active galactic nucleus supermassive black hole accretion quasar jet broad line region outflow feedback reverberation mapping xray corona",
    "stellar": "stellar population red giant asteroseismology binary star eclipsing binary chemical abundance spectroscopic survey main sequence white dwarf",
    "transients": "supernova light curve gamma ray burst kilonova tidal disruption event explosion progenitor afterglow nickel ejecta transient survey",
    "solar system": "asteroid comet trans neptunian object kuiper belt rotation period surface composition occultation meteorite dynamical family",
    "ism": "interstellar medium hydrogen absorption line emission nebula ionized gas shock magnetic field turbulence photodissociation region",
    "milky way": "galactic bulge halo stars proper motion parallax stellar stream globular cluster chemical evolution thick disk kinematic survey",
}
GENERIC = "observations data analysis model sample measurements evidence properties distribution constraints results new method high resolution".split()
SURNAMES = """Abbott Adeyemi Almeida Andersen Arai Baptiste Barros Becker Bianchi Bose Castillo Chen Costa Dahl Dubois Eriksen Farouk Ferreira Fischer Garcia
Gupta Hansen Haddad Ishikawa Ivanova Jensen Kaur Keller Kim Kowalski Laurent Lindqvist Lopez Madsen Mehta Moreau Nakamura Nguyen Novak Okafor
Olsen Park Petrov Quinn Rahman Rossi Sato Schmidt Silva Sorensen Tanaka Torres Ueda Varga Wagner Wang Yamada Yilmaz Zhang Zhou""".split()
INITIALS = "ABCDEFGHIJKLMNOPRSTVW"


def sentence(rng, topic_words, n):
    words = rng.sample(topic_words, min(n, len(topic_words))) + rng.sample(GENERIC, 2)
    rng.shuffle(words)
    return " ".join(words).capitalize() + "."


def text(rng, main, other=None, sentences=4):
    main_words = TOPICS[main].split()
    out = []
    for _ in range(sentences):
        if other and rng.random() < 0.3:
            out.append(sentence(rng, TOPICS[other].split(), 4))
        else:
            out.append(sentence(rng, main_words, 6))
    return " ".join(out)


def query_hash(author):
    q = f'author:"{author}" year:{REFERENCE_YEAR - QUERY_YEARS + 1}-{REFERENCE_YEAR}'
    params = [("q", q), ("fl", FIELDS), ("rows", str(QUERY_ROWS)), ("sort", "date desc")]
    return hashlib.sha256("".join(f"{k}={v}\n" for k, v in params).encode()).hexdigest()


def write_source(rng):
    names = [f"{s}, {INITIALS[i % len(INITIALS)]}." for i, s in enumerate(SURNAMES[:N_PROPOSALS])]
    topics = list(TOPICS)
    proposals, pis = [], []
    for i in range(N_PROPOSALS):
        main = topics[i % len(topics)]
        co = rng.sample([n for n in names if n != names[i]], rng.randint(1, 3))
        proposals.append({
            "id": f"SP{i + 1:03d}",
            "title": f"A study of {main} ({i + 1})",
            "abstract": text(rng, main, rng.choice(topics), 5),
            "authors": [names[i]] + co,
        })
        pis.append((names[i], main))

    ads = SOURCE / "ads"
    ads.mkdir(parents=True, exist_ok=True)
    for old in ads.glob("*.json"):
        old.unlink()
    for name, main in pis:
        docs = []
        for j in range(rng.randint(6, 14)):
            year = rng.randint(REFERENCE_YEAR - QUERY_YEARS + 1, REFERENCE_YEAR)
            others = rng.sample([n for n in names if n != name], rng.randint(1, 4))
            pos = 0 if rng.random() < 0.5 else rng.randint(1, len(others))
            authors = others[:pos] + [name] + others[pos:]
            doc = {"title": [f"{main.title()} paper {j + 1} by {name.split(',')[0]}"], "year": str(year), "author": authors}
            if rng.random() > 0.05:
                doc["abstract"] = text(rng, main if rng.random() < 0.75 else rng.choice(topics), rng.choice(topics))
            docs.append(doc)
        docs.sort(key=lambda d: d["year"], reverse=True)
        body = {"responseHeader": {"status": 0}, "response": {"numFound": len(docs), "start": 0, "docs": docs}}
        (ads / f"{query_hash(name)}.json").write_text(json.dumps(body, indent=1) + "\n")
    (SOURCE / "proposals.json").write_text(json.dumps(proposals, indent=1) + "\n")


TOKEN = re.compile(r"[a-z0-9]+")


def hashed_vector(text, dim, salt):
    v = [0.0] * dim
    for tok in TOKEN.findall(text.lower()):
        if len(tok) < 2:
            continue
        h = hashlib.sha256(f"{salt}:{tok}".encode()).digest()
        idx = int.from_bytes(h[:4], "little") % dim
        v[idx] += 1.0 if h[4] & 1 else -1.0
    norm = math.sqrt(sum(x * x for x in v))
    return [round(x / norm, 6) if norm else 0.0 for x in v]


def write_embeddings(path, model, dim):
    records = []
    for line in (CORPUS / "proposals.jsonl").read_text().splitlines():
        p = json.loads(line)
        records.append((p["id"], hashed_vector(p["abstract"], dim, model)))
    for line in (CORPUS / "reviewers.jsonl").read_text().splitlines():
        r = json.loads(line)
        for i, pub in enumerate(r["publications"]):
            records.append((f"{r['id']}#{i}", hashed_vector(pub["abstract"], dim, model)))
    with open(path, "w", newline="\n") as f:
        f.write(json.dumps({"model": model, "dim": dim, "count": len(records)}, separators=(",", ":")) + "\n")
        for rid, v in records:
            f.write(json.dumps({"id": rid, "v": v}, separators=(",", ":")) + "\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--binary", default=str(ROOT / "target" / "debug" / "expertmatch"))
    args = ap.parse_args()
    write_source(random.Random(SEED))
    subprocess.run(
        [args.binary, "--seed", "7", "synth", "--fixture", str(SOURCE.relative_to(ROOT)), "--size", str(N_PROPOSALS),
         "-o", str(CORPUS.relative_to(ROOT))],
        check=True,
        cwd=ROOT,
    )
    write_embeddings(FIXTURES / "hashproj-32.jsonl", "hashproj-32", 32)
    write_embeddings(FIXTURES / "hashproj-16.jsonl", "hashproj-16", 16)


if __name__ == "__main__":
    main()
