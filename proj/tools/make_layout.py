"""Writes data/igridson_layout.json: a 24x24 four-room home with 21 furniture slots."""
import json
import pathlib

W = H = 24
DOORS = [(12, 5), (12, 17), (5, 12), (17, 12)]
ROOMS = [
    ("kitchen", 1, 1, 11, 11),
    ("living room", 13, 1, 22, 11),
    ("bedroom", 1, 13, 11, 22),
    ("bathroom", 13, 13, 22, 22),
]
FURNITURE = [
    ("kitchen", "counter", [(1, 1), (2, 1), (3, 1)]),
    ("kitchen", "fridge", [(5, 1)]),
    ("kitchen", "top cabinet", [(7, 1), (8, 1)]),
    ("kitchen", "cooktop", [(10, 1)]),
    ("kitchen", "counter top", [(1, 4), (1, 5), (1, 6)]),
    ("kitchen", "dining table", [(5, 6), (6, 6), (5, 7), (6, 7)]),
    ("living room", "coffee table", [(17, 5), (18, 5)]),
    ("living room", "tv stand", [(17, 1), (18, 1), (19, 1)]),
    ("living room", "sofa", [(17, 8), (18, 8), (19, 8)]),
    ("living room", "shelf", [(22, 3), (22, 4)]),
    ("living room", "side table", [(21, 8)]),
    ("bedroom", "bed", [(2, 19), (3, 19), (2, 20), (3, 20), (2, 21), (3, 21)]),
    ("bedroom", "dresser", [(8, 22), (9, 22)]),
    ("bedroom", "desk", [(9, 14), (10, 14)]),
    ("bedroom", "side table", [(1, 17)]),
    ("bedroom", "shelf", [(6, 22)]),
    ("bathroom", "toilet", [(21, 21)]),
    ("bathroom", "sink", [(19, 22)]),
    ("bathroom", "shelf", [(22, 15)]),
    ("bathroom", "top cabinet", [(22, 18), (22, 19)]),
    ("bathroom", "counter", [(15, 22), (16, 22)]),
]


def main():
    grid = [["#"] * W for _ in range(H)]
    for _, x0, y0, x1, y1 in ROOMS:
        for y in range(y0, y1 + 1):
            for x in range(x0, x1 + 1):
                grid[y][x] = "."
    for x, y in DOORS:
        grid[y][x] = "+"
    layout = {
        "layout_format": 1,
        "width": W,
        "height": H,
        "grid": ["".join(row) for row in grid],
        "rooms": [{"name": n, "x0": a, "y0": b, "x1": c, "y1": d} for n, a, b, c, d in ROOMS],
        "furniture": [
            {"room": r, "class": c, "glyph": chr(ord("a") + i), "cells": [list(p) for p in cells]}
            for i, (r, c, cells) in enumerate(FURNITURE)
        ],
        "start": [6, 9],
    }
    out = pathlib.Path(__file__).resolve().parent.parent / "data" / "igridson_layout.json"
    out.write_text(json.dumps(layout, indent=1) + "\n")


if __name__ == "__main__":
    main()
