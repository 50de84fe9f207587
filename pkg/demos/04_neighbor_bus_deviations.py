"""Largest bus-level disturbances the neighbor area can ride through.

For every neighbor bus, two LPs find the extreme injection deviations
that local reserves plus tie support can absorb without overloading a
neighbor line.  Three rulebooks for the tie support are compared:

  passive   tie deviations from the exporter's no-redispatch set
  active    tie deviations from the exporter's redispatch set
  atc       net exchange capped at the transfer capacity, exporter
            modeled as aggregate unit bands with no network

Writes one CSV per reserve level next to this script.
"""

import importlib.resources as resources
import os

from gridflex import load_case, nodal_deviation_report

case = load_case(str(resources.files("gridflex") / "data" / "rts96_2area.json"))
out_dir = os.path.dirname(os.path.abspath(__file__))

for fraction in (0.05, 0.25):
    report = nodal_deviation_report(case, reserve_fraction=fraction)
    path = os.path.join(out_dir, f"neighbor_deviations_{int(fraction * 100)}pct.csv")
    report.to_csv(path)
    print(f"\n=== neighbor reserves at {fraction:.0%} of dispatch ===")
    print(f"{'bus':>6} {'passive':>18} {'active':>18} {'atc':>18}")
    buses = sorted({row[0] for row in report.rows})
    for bus in buses:
        cells = []
        for mode in ("passive", "active", "atc"):
            up, dn = report.bounds(bus, mode)
            cells.append(f"{up:+7.2f}/{dn:+7.2f}")
        print(f"{bus:>6} " + " ".join(f"{c:>18}" for c in cells))
    print(f"wrote {path}")
