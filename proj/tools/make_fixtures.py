#!/usr/bin/env python3
"""Writes the bundled mini-GEO and mini-ATIS knowledge graphs and lexicons.

The files under data/ are checked in; rerun this only when the fixture
content changes.
"""
import itertools
import pathlib
import random

ROOT = pathlib.Path(__file__).resolve().parent.parent / "data"

# state: (area km2 thousands, population, capital, [(city, population, major)])
STATES = {
    "alaska": (1723.3, 731545, "juneau", [("anchorage", 291826, 1), ("fairbanks", 31535, 0)]),
    "california": (423.9, 39512223, "sacramento",
                   [("los angeles", 3979576, 1), ("san francisco", 881549, 1), ("san diego", 1423851, 1),
                    ("fresno", 531576, 1), ("eureka", 26512, 0)]),
    "oregon": (254.8, 4217737, "salem", [("portland", 654741, 1), ("eugene", 172622, 0), ("bend", 100421, 0)]),
    "washington": (184.6, 7614893, "olympia",
                   [("seattle", 753675, 1), ("spokane", 222081, 0), ("tacoma", 217827, 0)]),
    "nevada": (286.4, 3080156, "carson city", [("las vegas", 651319, 1), ("reno", 255601, 0)]),
    "arizona": (295.2, 7278717, "phoenix", [("tucson", 548073, 1), ("mesa", 518012, 1), ("yuma", 98285, 0)]),
    "new mexico": (314.9, 2096829, "santa fe", [("albuquerque", 560513, 1), ("las cruces", 103432, 0)]),
    "texas": (695.7, 28995881, "austin",
              [("houston", 2320268, 1), ("dallas", 1343573, 1), ("san antonio", 1547253, 1),
               ("el paso", 681728, 1), ("waco", 139236, 0), ("laredo", 262491, 0)]),
    "oklahoma": (181.0, 3956971, "oklahoma city", [("tulsa", 401190, 1), ("norman", 124880, 0)]),
    "louisiana": (135.7, 4648794, "baton rouge",
                  [("new orleans", 390144, 1), ("shreveport", 187593, 0), ("lafayette", 126185, 0)]),
    "arkansas": (137.7, 3017804, "little rock", [("fort smith", 87891, 0), ("fayetteville", 87590, 0)]),
    "new york": (141.3, 19453561, "albany",
                 [("new york city", 8336817, 1), ("buffalo", 255284, 0), ("rochester", 205695, 0)]),
    "pennsylvania": (119.3, 12801989, "harrisburg",
                     [("philadelphia", 1584064, 1), ("pittsburgh", 300286, 1), ("erie", 94831, 0),
                      ("scranton", 76328, 0)]),
    "new jersey": (22.6, 8882190, "trenton", [("newark", 282011, 1), ("jersey city", 262075, 1)]),
    "rhode island": (4.0, 1059361, "providence", [("warwick", 80847, 0), ("cranston", 81456, 0)]),
    "massachusetts": (27.3, 6892503, "boston", [("worcester", 185428, 0), ("springfield", 153606, 0)]),
    "connecticut": (14.4, 3565287, "hartford", [("bridgeport", 144399, 0), ("new haven", 130250, 0)]),
    "florida": (170.3, 21477737, "tallahassee",
                [("jacksonville", 911507, 1), ("miami", 467963, 1), ("tampa", 399700, 1), ("orlando", 287442, 0)]),
    "georgia": (153.9, 10617423, "atlanta", [("savannah", 144464, 0), ("augusta", 197888, 0)]),
    "alabama": (135.8, 4903185, "montgomery", [("birmingham", 209403, 0), ("mobile", 188720, 0)]),
}

BORDERS = [
    ("california", "oregon"), ("california", "nevada"), ("california", "arizona"), ("oregon", "washington"),
    ("oregon", "nevada"), ("nevada", "arizona"), ("arizona", "new mexico"), ("new mexico", "texas"),
    ("new mexico", "oklahoma"), ("texas", "oklahoma"), ("texas", "louisiana"), ("texas", "arkansas"),
    ("oklahoma", "arkansas"), ("louisiana", "arkansas"), ("new york", "pennsylvania"), ("new york", "new jersey"),
    ("new york", "massachusetts"), ("new york", "connecticut"), ("pennsylvania", "new jersey"),
    ("rhode island", "massachusetts"), ("rhode island", "connecticut"), ("massachusetts", "connecticut"),
    ("florida", "georgia"), ("florida", "alabama"), ("georgia", "alabama"),
]

# river: (length km or None, [states])
RIVERS = {
    "mississippi": (3734.0, ["louisiana", "arkansas"]),
    "rio grande": (3051.0, ["new mexico", "texas"]),
    "red": (2189.0, ["new mexico", "texas", "oklahoma", "arkansas", "louisiana"]),
    "yukon": (3185.0, ["alaska"]),
    "columbia": (2000.0, ["washington", "oregon"]),
    "snake": (1735.0, ["oregon", "washington"]),
    "hudson": (507.0, ["new york", "new jersey"]),
    "pecos": (1490.0, ["new mexico", "texas"]),
    "canadian": (1458.0, ["new mexico", "texas", "oklahoma"]),
    "sabine": (893.0, ["texas", "louisiana"]),
    "gila": (1044.0, ["new mexico", "arizona"]),
    "sacramento river": (719.0, ["california"]),
    "chattahoochee": (690.0, ["georgia", "alabama", "florida"]),
    "susquehanna": (715.0, ["new york", "pennsylvania"]),
    "connecticut river": (655.0, ["connecticut", "massachusetts"]),
    "blackstone": (None, ["massachusetts", "rhode island"]),
    "humboldt": (530.0, ["nevada"]),
    "tanana": (940.0, ["alaska"]),
}


def q(s):
    return "'" + s + "'"


def write_geo():
    out = ["# mini-GEO: a small US geography graph", ""]
    for t in ["capital", "city", "country", "river", "state"]:
        out.append(f"type\t{t}")
    out += [
        "rel\tloc\tcity\t->\tstate",
        "rel\tloc\tcapital\t->\tstate",
        "rel\tloc\tstate\t->\tcountry",
        "rel\tloc\triver\t->\tstate",
        "rel\tnext_to\tstate\t->\tstate",
        "rel\ttraverse\triver\t->\tstate",
        "attr\tpopulation\tstate\t->\tinteger",
        "attr\tpopulation\tcity\t->\tinteger",
        "attr\tpopulation\tcapital\t->\tinteger",
        "attr\tarea\tstate\t->\tdecimal",
        "attr\tlen\triver\t->\tdecimal",
        "attr\tmajor\tcity\t->\tboolean",
        "",
        "ent\tusa\tcountry",
    ]
    rng = random.Random(880)
    facts = []
    for s, (area, pop, cap, cities) in STATES.items():
        out.append(f"ent\t{s}\tstate\tarea={area}\tpopulation={pop}")
        facts.append(("loc", s, "usa"))
    for s, (area, pop, cap, cities) in STATES.items():
        out.append(f"ent\t{cap}\tcapital\tpopulation={rng.randint(20000, 900000)}")
        facts.append(("loc", cap, s))
        for c, cpop, major in cities:
            out.append(f"ent\t{c}\tcity\tmajor={major}\tpopulation={cpop}")
            facts.append(("loc", c, s))
    for r, (length, states) in RIVERS.items():
        out.append(f"ent\t{r}\triver" + (f"\tlen={length}" if length is not None else ""))
        for s in states:
            facts.append(("loc", r, s))
            facts.append(("traverse", r, s))
    for a, b in BORDERS:
        facts.append(("next_to", a, b))
        facts.append(("next_to", b, a))
    out.append("")
    out += [f"fact\t{r}\t{s}\t{o}" for r, s, o in facts]
    (ROOT / "geo" / "kg.tsv").write_text("\n".join(out) + "\n")

    lex = ["# surface form -> entity id (entity ids are implicit aliases)", "alias\tus\tusa",
           "alias\tamerica\tusa", "alias\tthe united states\tusa", "alias\tnew york state\tnew york",
           "alias\tnyc\tnew york city", "alias\tthe mississippi\tmississippi"]
    (ROOT / "geo" / "lexicon.tsv").write_text("\n".join(lex) + "\n")

    ords = ["ordinal\tsmallest\tstate\tarea\tmin", "ordinal\tlargest\tstate\tarea\tmax",
            "ordinal\tsmallest\tcity\tpopulation\tmin", "ordinal\tbiggest\tcity\tpopulation\tmax",
            "ordinal\tlongest\triver\tlen\tmax", "ordinal\tshortest\triver\tlen\tmin",
            "ordinal\tlargest\tcity\tpopulation\tmax", "ordinal\tmost_populous\tstate\tpopulation\tmax",
            "ordinal\tleast_populous\tstate\tpopulation\tmin"]
    (ROOT / "geo" / "ordinals.tsv").write_text("\n".join(ords) + "\n")

    preds = [
        "# functor\tkind\tmapping",
        "geo-pred\tstate\ttype\tstate", "geo-pred\tcity\ttype\tcity", "geo-pred\triver\ttype\triver",
        "geo-pred\tcapital\ttype\tcapital", "geo-pred\tcountry\ttype\tcountry",
        "geo-pred\tmajor\tadj\tmajor",
        "geo-pred\tloc\trel\tloc", "geo-pred\tnext_to\trel\tnext_to", "geo-pred\ttraverse\trel\ttraverse",
        "geo-pred\tpopulation\tattr\tpopulation", "geo-pred\tarea\tattr\tarea", "geo-pred\tlen\tattr\tlen",
        "geo-pred\tsmallest\tsup\tsmallest", "geo-pred\tlargest\tsup\tlargest", "geo-pred\tbiggest\tsup\tbiggest",
        "geo-pred\tlongest\tsup\tlongest", "geo-pred\tshortest\tsup\tshortest",
        "geo-pred\tcount\taggr\tcount", "geo-pred\taverage\taggr\taverage",
        "geo-pred\tstateid\tconst\tstate", "geo-pred\tcityid\tconst\tcity", "geo-pred\triverid\tconst\triver",
        "geo-pred\tcountryid\tconst\tcountry", "geo-pred\tcapitalid\tconst\tcapital",
    ]
    (ROOT / "geo" / "predicates.tsv").write_text("\n".join(preds) + "\n")


CITIES_ATIS = ["dallas", "pittsburgh", "boston", "denver", "atlanta", "baltimore", "philadelphia",
               "san francisco", "oakland", "washington", "houston", "seattle"]
AIRLINES = ["delta", "united", "american", "continental"]
MONTHS = ["january", "march", "june", "july", "august", "october"]


def write_atis():
    out = ["# mini-ATIS: flights between a dozen cities", ""]
    for t in ["airline", "city", "flight"]:
        out.append(f"type\t{t}")
    out += [
        "rel\tfrom\tflight\t->\tcity", "rel\tto\tflight\t->\tcity", "rel\tairline\tflight\t->\tairline",
        "attr\tday_number\tflight\t->\ttext", "attr\tmonth\tflight\t->\ttext",
        "attr\tdeparture_time\tflight\t->\tinteger", "attr\tfare\tflight\t->\tdecimal",
        "attr\tnonstop\tflight\t->\tboolean", "",
    ]
    for c in CITIES_ATIS:
        out.append(f"ent\t{c}\tcity")
    for a in AIRLINES:
        out.append(f"ent\t{a}\tairline")
    rng = random.Random(4473)
    facts = []
    n = 0
    for a, b in itertools.permutations(CITIES_ATIS, 2):
        for _ in range(rng.choice([1, 2, 3])):
            n += 1
            fid = f"fl{n:04d}"
            day = rng.choice([1, 3, 8, 8, 12, 15, 21, 28])
            month = rng.choice(MONTHS)
            dep = rng.choice([600, 730, 815, 900, 1130, 1300, 1545, 1720, 1900, 2130])
            fare = rng.choice([99.0, 129.5, 189.0, 240.0, 315.25, 420.0])
            nonstop = rng.choice([0, 1])
            out.append(f"ent\t{fid}\tflight\tday_number='{day:02d}'\tdeparture_time={dep}"
                       f"\tfare={fare}\tmonth='{month}'\tnonstop={nonstop}")
            facts += [("from", fid, a), ("to", fid, b), ("airline", fid, rng.choice(AIRLINES))]
    out.append("")
    out += [f"fact\t{r}\t{s}\t{o}" for r, s, o in facts]
    (ROOT / "atis" / "kg.tsv").write_text("\n".join(out) + "\n")
    lex = ["alias\tphilly\tphiladelphia", "alias\tdc\twashington", "alias\tsf\tsan francisco"]
    (ROOT / "atis" / "lexicon.tsv").write_text("\n".join(lex) + "\n")
    (ROOT / "atis" / "ordinals.tsv").write_text(
        "ordinal\tearliest\tflight\tdeparture_time\tmin\nordinal\tlatest\tflight\tdeparture_time\tmax\n"
        "ordinal\tcheapest\tflight\tfare\tmin\n")
    preds = [
        "atis-type\t_flight\tflight", "atis-type\t_city\tcity", "atis-type\t_airline\tairline",
        "atis-sort\t_ci\tentity\tcity", "atis-sort\t_al\tentity\tairline",
        "atis-sort\t_dn\tliteral\tpad2", "atis-sort\t_mn\tliteral\tplain",
    ]
    (ROOT / "atis" / "predicates.tsv").write_text("\n".join(preds) + "\n")


if __name__ == "__main__":
    (ROOT / "geo").mkdir(parents=True, exist_ok=True)
    (ROOT / "atis").mkdir(parents=True, exist_ok=True)
    write_geo()
    write_atis()
