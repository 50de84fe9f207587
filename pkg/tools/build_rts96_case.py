"""Regenerate the bundled two-area IEEE RTS-96 case file.

Bus, branch, and unit parameters are the published IEEE RTS-96 values
(loads and ratings in MW, reactances in per unit on 100 MVA).  The two
areas are identical copies on bus ranges 1xx and 2xx, interconnected by
the three standard inter-area ties.  Combustion-turbine units (20 MW)
and synchronous condensers are treated as decommitted: the 20 MW units
cannot stay above their 16 MW economic minimum once the dispatch is
scaled to off-peak levels, and condensers carry no active power.

The shipped operating point dispatches every committed unit at 6/7 of
its capacity, which balances the 2850 MW peak load of each area
exactly.  Reserve fields are left at zero; analysis code derives
reserve bands from explicit configurations.

Run from the repository root:

    python3 tools/build_rts96_case.py
"""

import json
import os
from fractions import Fraction

# (from, to, x_pu, rating_MW) for one area, bus numbers 1..24.
BRANCHES = [
    (1, 2, 0.0139, 175),
    (1, 3, 0.2112, 175),
    (1, 5, 0.0845, 175),
    (2, 4, 0.1267, 175),
    (2, 6, 0.1920, 175),
    (3, 9, 0.1190, 175),
    (3, 24, 0.0839, 400),
    (4, 9, 0.1037, 175),
    (5, 10, 0.0883, 175),
    (6, 10, 0.0605, 175),
    (7, 8, 0.0614, 175),
    (8, 9, 0.1651, 175),
    (8, 10, 0.1651, 175),
    (9, 11, 0.0839, 400),
    (9, 12, 0.0839, 400),
    (10, 11, 0.0839, 400),
    (10, 12, 0.0839, 400),
    (11, 13, 0.0476, 500),
    (11, 14, 0.0418, 500),
    (12, 13, 0.0476, 500),
    (12, 23, 0.0966, 500),
    (13, 23, 0.0865, 500),
    (14, 16, 0.0389, 500),
    (15, 16, 0.0173, 500),
    (15, 21, 0.0490, 500),
    (15, 21, 0.0490, 500),
    (15, 24, 0.0519, 500),
    (16, 17, 0.0259, 500),
    (16, 19, 0.0231, 500),
    (17, 18, 0.0144, 500),
    (17, 22, 0.1053, 500),
    (18, 21, 0.0259, 500),
    (18, 21, 0.0259, 500),
    (19, 20, 0.0396, 500),
    (19, 20, 0.0396, 500),
    (20, 23, 0.0216, 500),
    (20, 23, 0.0216, 500),
    (21, 22, 0.0678, 500),
]

# Inter-area ties: (area-A bus, area-B bus, x_pu, rating_MW).
TIES = [
    (107, 203, 0.161, 175),
    (113, 215, 0.075, 500),
    (123, 217, 0.074, 500),
]

# Peak bus loads in MW, one area (buses without an entry have no load).
LOADS = {
    1: 108, 2: 97, 3: 180, 4: 74, 5: 71, 6: 136, 7: 125, 8: 171,
    9: 175, 10: 195, 13: 265, 14: 194, 15: 317, 16: 100, 18: 333,
    19: 181, 20: 128,
}

# Committed units per bus: (bus, type, Pmax_MW, Pmin_MW, count).
UNITS = [
    (1, "U76", 76.0, 15.2, 2),
    (2, "U76", 76.0, 15.2, 2),
    (7, "U100", 100.0, 25.0, 3),
    (13, "U197", 197.0, 69.0, 3),
    (15, "U12", 12.0, 2.4, 5),
    (15, "U155", 155.0, 54.3, 1),
    (16, "U155", 155.0, 54.3, 1),
    (18, "U400", 400.0, 100.0, 1),
    (21, "U400", 400.0, 100.0, 1),
    (22, "U50", 50.0, 10.0, 6),
    (23, "U155", 155.0, 54.3, 2),
    (23, "U350", 350.0, 140.0, 1),
]

# Committed capacity is 3325 MW per area; 6/7 of it covers the 2850 MW
# peak load of the area exactly.
DISPATCH_FACTOR = Fraction(6, 7)


def build_case():
    buses = []
    lines = []
    generators = []
    for offset, area in ((100, "A"), (200, "B")):
        for n in range(1, 25):
            buses.append({
                "id": offset + n,
                "area_id": area,
                "load_pu": LOADS.get(n, 0) / 100.0,
            })
        seen = {}
        for f, t, x, rating in BRANCHES:
            fb, tb = offset + f, offset + t
            seen[(fb, tb)] = seen.get((fb, tb), 0) + 1
            suffix = "_%d" % seen[(fb, tb)] if (f, t) in _parallel() else ""
            lines.append({
                "id": "%d-%d%s" % (fb, tb, suffix),
                "from_bus": fb,
                "to_bus": tb,
                "reactance_pu": x,
                "flow_limit_pu": rating / 100.0,
            })
        for bus_n, kind, pmax, pmin, count in UNITS:
            for u in range(1, count + 1):
                generators.append({
                    "id": "%d_%s_%d" % (offset + bus_n, kind, u),
                    "bus": offset + bus_n,
                    "p_sched_pu": float(DISPATCH_FACTOR * Fraction(str(pmax))) / 100.0,
                    "p_min_pu": pmin / 100.0,
                    "p_max_pu": pmax / 100.0,
                    "res_up_pu": 0.0,
                    "res_dn_pu": 0.0,
                })
    for f, t, x, rating in TIES:
        lines.append({
            "id": "%d-%d" % (f, t),
            "from_bus": f,
            "to_bus": t,
            "reactance_pu": x,
            "flow_limit_pu": rating / 100.0,
        })
    return {
        "name": "ieee-rts96-two-area",
        "mva_base": 100.0,
        "areas": ["A", "B"],
        "reference_bus": 101,
        "atc": {"a_to_b_pu": 1.2, "b_to_a_pu": 1.2},
        "buses": buses,
        "lines": lines,
        "generators": generators,
    }


def _parallel():
    pairs = {}
    for f, t, _, _ in BRANCHES:
        pairs[(f, t)] = pairs.get((f, t), 0) + 1
    return {k for k, v in pairs.items() if v > 1}


def main():
    case = build_case()
    out = os.path.join(
        os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
        "src", "gridflex", "data", "rts96_2area.json")
    with open(out, "w") as fh:
        json.dump(case, fh, indent=1, sort_keys=True)
        fh.write("\n")
    n_gen = len(case["generators"])
    total = sum(g["p_sched_pu"] for g in case["generators"])
    load = sum(b["load_pu"] for b in case["buses"])
    print("wrote %s: %d buses, %d lines, %d generators" % (
        out, len(case["buses"]), len(case["lines"]), n_gen))
    print("total generation %.9f pu, total load %.9f pu" % (total, load))


if __name__ == "__main__":
    main()
