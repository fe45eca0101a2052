#!/usr/bin/env python3
"""Precompute expected result tables for the SQL golden suite with SQLite.

Usage: make_sql_goldens.py data/movies.csv tests/golden/movies_queries.json
"""
import csv
import json
import sqlite3
import sys

SCHEMA = [
    ("Movie", "TEXT"),
    ("Studio", "TEXT"),
    ("Type", "TEXT"),
    ("Worldwide $m", "REAL"),
    ("Domestic $m", "REAL"),
    ("Overseas $m", "REAL"),
    ("Year", "INTEGER"),
]

QUERIES = [
    # projections
    ("project_columns", 'SELECT Movie, Studio, Year FROM movies'),
    ("project_star_limit", 'SELECT * FROM movies LIMIT 7'),
    ("project_alias_arith", 'SELECT Movie AS title, "Worldwide $m" - "Domestic $m" AS overseas_calc FROM movies LIMIT 12'),
    ("project_qualified", 'SELECT m.Movie, m."Year" FROM movies AS m WHERE m.Year = 2001'),
    ("project_distinct_studio", 'SELECT DISTINCT Studio FROM movies'),
    ("project_distinct_pair", 'SELECT DISTINCT Studio, Type FROM movies ORDER BY Studio, Type'),
    ("project_arith_int", 'SELECT Movie, Year - 1990, Year / 4, Year * 2 FROM movies WHERE Studio = \'Disney\''),
    ("project_literals", 'SELECT 1, 2.5, \'x\', NULL FROM movies LIMIT 2'),
    # aggregates
    ("agg_count_star", 'SELECT COUNT(*) FROM movies'),
    ("agg_count_column_nulls", 'SELECT COUNT("Domestic $m"), COUNT(Movie) FROM movies'),
    ("agg_count_distinct", 'SELECT COUNT(DISTINCT Studio), COUNT(DISTINCT Year) FROM movies'),
    ("agg_sum_real", 'SELECT SUM("Worldwide $m") FROM movies'),
    ("agg_sum_int", 'SELECT SUM(Year) FROM movies WHERE Type = \'Drama\''),
    ("agg_avg", 'SELECT AVG("Domestic $m") FROM movies'),
    ("agg_min_max", 'SELECT MIN(Year), MAX(Year), MIN(Movie), MAX("Overseas $m") FROM movies'),
    ("agg_round_avg", 'SELECT ROUND(AVG("Worldwide $m"), 2) FROM movies WHERE Studio = \'Fox\''),
    ("agg_empty_input", 'SELECT COUNT(*), SUM(Year), AVG(Year), MIN(Movie) FROM movies WHERE Year > 3000'),
    ("agg_sum_distinct", 'SELECT SUM(DISTINCT Year), AVG(DISTINCT Year) FROM movies'),
    # WHERE operators
    ("where_eq_text", 'SELECT Movie, Year FROM movies WHERE Type = \'Drama\''),
    ("where_ne", 'SELECT COUNT(*) FROM movies WHERE Studio <> \'Fox\''),
    ("where_ne_bang", 'SELECT COUNT(*) FROM movies WHERE Studio != \'Sony\''),
    ("where_lt_gt", 'SELECT Movie FROM movies WHERE "Worldwide $m" > 800 AND Year < 2005'),
    ("where_le_ge", 'SELECT Movie, Year FROM movies WHERE Year >= 2012 OR Year <= 1995'),
    ("where_in", 'SELECT Movie, Studio FROM movies WHERE Studio IN (\'Fox\', \'Disney\') AND Year = 2010'),
    ("where_not_in", 'SELECT COUNT(*) FROM movies WHERE Type NOT IN (\'Drama\', \'Comedy\', \'Horror\')'),
    ("where_between", 'SELECT Movie, Year FROM movies WHERE Year BETWEEN 2003 AND 2004'),
    ("where_not_between", 'SELECT COUNT(*) FROM movies WHERE "Worldwide $m" NOT BETWEEN 100 AND 900'),
    ("where_like_prefix", 'SELECT Movie FROM movies WHERE Movie LIKE \'The S%\''),
    ("where_like_case", 'SELECT COUNT(*) FROM movies WHERE Movie LIKE \'the%\''),
    ("where_like_underscore", 'SELECT Movie FROM movies WHERE Studio LIKE \'F_x\' AND Year > 2008'),
    ("where_not_like", 'SELECT COUNT(*) FROM movies WHERE Movie NOT LIKE \'%an%\''),
    ("where_is_null", 'SELECT Movie FROM movies WHERE "Domestic $m" IS NULL'),
    ("where_is_not_null", 'SELECT COUNT(*) FROM movies WHERE "Overseas $m" IS NOT NULL'),
    ("where_not_paren", 'SELECT COUNT(*) FROM movies WHERE NOT (Year > 2000 OR Type = \'Drama\')'),
    ("where_arith", 'SELECT Movie FROM movies WHERE "Domestic $m" * 2 > "Worldwide $m" AND Studio = \'Universal\''),
    # GROUP BY / HAVING
    ("group_count", 'SELECT Studio, COUNT(*) FROM movies GROUP BY Studio'),
    ("group_sum_order", 'SELECT Studio, SUM("Worldwide $m") AS total FROM movies GROUP BY Studio ORDER BY total DESC'),
    ("group_avg_round", 'SELECT Type, ROUND(AVG("Worldwide $m"), 1) FROM movies GROUP BY Type ORDER BY 2 DESC'),
    ("group_two_keys", 'SELECT Studio, Type, COUNT(*) FROM movies WHERE Year >= 2010 GROUP BY Studio, Type'),
    ("group_having", 'SELECT Studio, COUNT(*) AS n FROM movies GROUP BY Studio HAVING COUNT(*) >= 25'),
    ("group_having_avg", 'SELECT Type, AVG("Domestic $m") FROM movies GROUP BY Type HAVING AVG("Domestic $m") > 150 ORDER BY Type'),
    ("group_year_minmax", 'SELECT Year, MIN("Worldwide $m"), MAX("Worldwide $m") FROM movies GROUP BY Year ORDER BY Year DESC LIMIT 5'),
    ("group_expr_key", 'SELECT Year / 10 * 10 AS decade, COUNT(*) FROM movies GROUP BY Year / 10 * 10'),
    # ORDER BY / LIMIT
    ("order_desc_limit", 'SELECT Movie, "Worldwide $m" FROM movies ORDER BY "Worldwide $m" DESC LIMIT 5'),
    ("order_multi", 'SELECT Movie, Studio, Year FROM movies WHERE Year < 1998 ORDER BY Studio ASC, Year DESC, Movie'),
    ("order_offset", 'SELECT Movie FROM movies ORDER BY Movie LIMIT 4 OFFSET 10'),
    ("order_nulls_first", 'SELECT Movie, "Domestic $m" FROM movies ORDER BY "Domestic $m", Movie LIMIT 6'),
    ("order_expression", 'SELECT Movie, "Overseas $m" / "Worldwide $m" FROM movies WHERE Type = \'Musical\' ORDER BY "Overseas $m" / "Worldwide $m" DESC, Movie'),
    ("order_top_dramas", 'SELECT Movie, "Worldwide $m" FROM movies WHERE Type = \'Drama\' AND Year >= 2000 ORDER BY "Worldwide $m" DESC LIMIT 5'),
    ("order_abs", 'SELECT Movie, ABS("Domestic $m" - "Overseas $m") AS gap FROM movies WHERE Studio = \'Lionsgate\' ORDER BY gap, Movie LIMIT 8'),
]


def load(path):
    db = sqlite3.connect(":memory:")
    db.execute("PRAGMA case_sensitive_like = ON")
    cols = ", ".join(f'"{n}" {t}' for n, t in SCHEMA)
    db.execute(f"CREATE TABLE movies ({cols})")
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader)
        assert header == [n for n, _ in SCHEMA], header
        for row in reader:
            vals = []
            for (name, typ), cell in zip(SCHEMA, row):
                if cell == "":
                    vals.append(None)
                elif typ == "INTEGER":
                    vals.append(int(cell))
                elif typ == "REAL":
                    vals.append(float(cell))
                else:
                    vals.append(cell)
            db.execute(f"INSERT INTO movies VALUES ({', '.join('?' * len(vals))})", vals)
    return db


def main():
    db = load(sys.argv[1])
    out = []
    for name, sql in QUERIES:
        cur = db.execute(sql)
        rows = [list(r) for r in cur.fetchall()]
        out.append({"name": name, "sql": sql, "columns": [d[0] for d in cur.description], "rows": rows})
    assert len(out) == 50, len(out)
    with open(sys.argv[2], "w", encoding="utf-8") as f:
        json.dump(out, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main()
