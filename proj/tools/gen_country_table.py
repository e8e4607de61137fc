#!/usr/bin/env python3
"""Regenerates data/countries.csv from pycountry plus a hand-kept alias list."""
import csv
import sys

import pycountry

# Short display names for entries whose ISO name is formal or unwieldy.
DISPLAY = {
    "BOL": "Bolivia", "BRN": "Brunei", "COD": "Democratic Republic of the Congo",
    "COG": "Republic of the Congo", "CZE": "Czech Republic", "FSM": "Micronesia",
    "GBR": "United Kingdom", "IRN": "Iran", "KOR": "South Korea", "PRK": "North Korea",
    "LAO": "Laos", "MDA": "Moldova", "PSE": "Palestine", "RUS": "Russia", "SYR": "Syria",
    "TWN": "Taiwan", "TZA": "Tanzania", "USA": "United States", "VEN": "Venezuela",
    "VNM": "Vietnam", "CIV": "Ivory Coast", "TUR": "Turkey", "VAT": "Vatican City",
}

EXTRA_ALIASES = {
    "USA": ["United States of America", "US", "U.S.", "America"],
    "GBR": ["UK", "U.K.", "Great Britain", "Britain"],
    "RUS": ["Russian Federation"],
    "KOR": ["Republic of Korea", "Korea, Republic of"],
    "PRK": ["Democratic People's Republic of Korea"],
    "IRN": ["Iran (Islamic Republic of)"],
    "COD": ["DR Congo", "Congo (the Democratic Republic of the)", "Congo, DR"],
    "COG": ["Congo"],
    "CIV": ["Cote d'Ivoire", "Côte d'Ivoire"],
    "TUR": ["Türkiye", "Turkiye"],
    "MMR": ["Burma"],
    "SWZ": ["Swaziland"],
    "CPV": ["Cape Verde"],
    "MKD": ["Macedonia"],
    "CZE": ["Czechia"],
    "TLS": ["East Timor"],
    "VNM": ["Viet Nam"],
    "LAO": ["Lao People's Democratic Republic"],
    "SYR": ["Syrian Arab Republic"],
    "TZA": ["United Republic of Tanzania"],
    "BOL": ["Bolivia (Plurinational State of)"],
    "VEN": ["Venezuela (Bolivarian Republic of)"],
    "PSE": ["West Bank and Gaza Strip", "Palestinian Territories"],
}


def main(out_path):
    rows = []
    for c in pycountry.countries:
        display = DISPLAY.get(c.alpha_3, getattr(c, "common_name", None) or c.name)
        aliases = {c.name, getattr(c, "official_name", c.name), getattr(c, "common_name", c.name)}
        aliases.update(EXTRA_ALIASES.get(c.alpha_3, []))
        aliases.discard(display)
        rows.append([c.alpha_3, c.alpha_2, display, ";".join(sorted(aliases))])
    rows.sort()
    with open(out_path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["alpha3", "alpha2", "name", "aliases"])
        w.writerows(rows)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/countries.csv")
