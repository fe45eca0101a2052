#!/usr/bin/env python3
"""Regenerates the bundled sample datasets (data/carsales.csv, data/movies.csv).

The values are synthetic; only the shapes (columns, row counts, value kinds)
follow the public CarSales and Movies datasets.
"""
import csv
import pathlib
import random

ROOT = pathlib.Path(__file__).resolve().parent.parent / "data"


def carsales():
    rng = random.Random(275)
    brands = ["BMW", "Ford", "Toyota", "Honda", "Nissan", "Chevrolet",
              "Volkswagen", "Hyundai", "Kia", "Mercedes-Benz", "Audi"]
    types = ["Sedan", "SUV", "Compact", "Pickup", "Minivan"]
    years = range(2007, 2012)
    base_brand = {b: rng.randint(40, 160) for b in brands}
    base_type = {"Sedan": 1.4, "SUV": 1.2, "Compact": 1.0, "Pickup": 0.8, "Minivan": 0.5}
    growth = {"Sedan": -0.03, "SUV": 0.12, "Compact": 0.05, "Pickup": -0.06, "Minivan": -0.08}
    rows = []
    for brand in brands:
        for typ in types:
            for i, year in enumerate(years):
                dip = 0.78 if year == 2009 else 1.0
                value = base_brand[brand] * base_type[typ] * (1 + growth[typ]) ** i * dip
                value *= rng.uniform(0.85, 1.15)
                rows.append([brand, typ, int(round(value * 100)), year])
    rng.shuffle(rows)
    with open(ROOT / "carsales.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["Brand", "Type", "Sale", "Year"])
        w.writerows(rows)


def movies():
    rng = random.Random(198)
    adjectives = ["Silent", "Crimson", "Hidden", "Last", "Broken", "Golden", "Distant",
                  "Electric", "Frozen", "Secret", "Wild", "Midnight", "Lost", "Iron",
                  "Burning", "Quiet", "Savage", "Hollow", "Paper", "Glass"]
    nouns = ["Harbor", "Kingdom", "Promise", "Horizon", "Garden", "Empire", "River",
             "Station", "Mirror", "Legacy", "Frontier", "Summer", "Orchard", "Signal",
             "Voyage", "Lantern", "Canyon", "Cathedral"]
    studios = ["Fox", "Warner Bros.", "Disney", "Universal", "Paramount", "Sony",
               "Lionsgate", "DreamWorks"]
    types = ["Drama", "Comedy", "Action", "Adventure", "Animation", "Thriller",
             "Horror", "Romance", "Musical"]
    type_scale = {"Drama": 0.8, "Comedy": 0.9, "Action": 1.6, "Adventure": 1.8,
                  "Animation": 1.7, "Thriller": 0.9, "Horror": 0.6, "Romance": 0.6,
                  "Musical": 0.7}
    titles = set()
    while len(titles) < 198:
        t = f"The {rng.choice(adjectives)} {rng.choice(nouns)}"
        if rng.random() < 0.15:
            t += f" {rng.randint(2, 4)}"
        titles.add(t)
    rows = []
    for title in sorted(titles):
        studio = rng.choice(studios)
        typ = rng.choice(types)
        year = rng.randint(1995, 2013)
        domestic = round(rng.uniform(20, 260) * type_scale[typ], 1)
        overseas = round(domestic * rng.uniform(0.6, 2.2), 1)
        worldwide = round(domestic + overseas, 1)
        rows.append([title, studio, typ, worldwide, domestic, overseas, year])
    rng.shuffle(rows)
    for i in (17, 88, 141):
        rows[i][4] = ""
        rows[i][5] = ""
    with open(ROOT / "movies.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["Movie", "Studio", "Type", "Worldwide $m", "Domestic $m",
                    "Overseas $m", "Year"])
        w.writerows(rows)


if __name__ == "__main__":
    carsales()
    movies()
