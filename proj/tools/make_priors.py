#!/usr/bin/env python3
"""Generate the bundled synthetic priors file (data/priors.json).

Label metadata (adjective counts, sample probabilities, max counts, move
frequencies, add/remove probabilities) is the household furniture/object
table used by the simulator. Placement probabilities are synthetic: each
object class gets a category, each category lists the (room, furniture)
pairs it plausibly lives on, and weights are drawn from a fixed-seed
log-normal so that every environment prior has a few dominant locations.

Usage: python3 tools/make_priors.py > data/priors.json
"""
import argparse
import json
import random

RNG = random.Random(20230614)

ADJECTIVES = [
    ("size", ["small", "large", "tiny", "huge", "medium"]),
    ("color", ["red", "blue", "green", "white", "black", "yellow"]),
    ("material", ["wooden", "metal", "plastic", "glass", "ceramic"]),
    ("condition", ["new", "old", "worn", "clean", "dirty"]),
    ("pattern", ["striped", "dotted", "plain", "checkered"]),
    ("age", ["vintage", "modern", "antique", "retro"]),
    ("style", ["rustic", "minimalist", "classic", "ornate"]),
    ("brand", ["acme", "generic", "premium", "budget"]),
    ("texture", ["smooth", "rough", "soft", "glossy"]),
    ("finish", ["matte", "polished", "painted", "lacquered"]),
    ("weight", ["light", "heavy", "hefty", "featherweight"]),
    ("shape", ["round", "square", "oval", "rectangular"]),
    ("origin", ["local", "imported", "handmade", "homemade"]),
]

# label, # adjectives, sample prob, max count
FURNITURE = [
    ("counter", 3, 0.80, 3),
    ("table", 1, 0.80, 3),
    ("shelf", 7, 0.80, 10),
    ("fridge", 3, 0.90, 2),
    ("top cabinet", 3, 0.50, 10),
    ("coffee table", 4, 0.60, 3),
    ("cooktop", 3, 0.90, 1),
    ("counter top", 5, 0.80, 3),
    ("dining table", 7, 1.00, 1),
    ("chair", 7, 0.75, 12),
    ("tv stand", 2, 1.00, 1),
    ("sofa", 1, 0.75, 2),
    ("bed", 3, 0.90, 2),
    ("dresser", 7, 0.75, 3),
    ("toilet", 1, 1.00, 1),
    ("sink", 2, 1.00, 2),
    ("shelving unit", 4, 0.50, 4),
    ("desk", 7, 0.70, 4),
    # second "chair" row of the source table; renamed to keep labels unique
    ("desk chair", 4, 0.60, 2),
    ("side table", 7, 0.70, 3),
    ("chairs", 7, 0.75, 12),
    ("couch", 1, 0.75, 2),
]

# label, # adjectives, sample prob, max count, move frequency, add/remove prob, category
OBJECTS = [
    ("apple", 2, 0.80, 15, 0.40, 0.20, "fruit"),
    ("box", 6, 0.70, 4, 0.40, 0.01, "office"),
    ("cereal", 9, 0.50, 4, 0.20, 0.10, "pantry"),
    ("dishtowel", 11, 0.75, 8, 0.20, 0.00, "cleaning"),
    ("flour", 8, 0.80, 4, 0.20, 0.10, "pantry"),
    ("jar", 10, 0.75, 6, 0.15, 0.05, "pantry"),
    ("kettle", 6, 0.75, 4, 0.40, 0.00, "cookware"),
    ("lettuce", 1, 0.80, 5, 0.10, 0.01, "fresh"),
    ("milk", 6, 0.80, 2, 0.10, 0.10, "fresh"),
    ("mug", 10, 0.80, 12, 0.60, 0.01, "tableware"),
    ("oil", 9, 0.80, 4, 0.10, 0.05, "pantry"),
    ("pasta", 6, 0.75, 8, 0.10, 0.00, "pantry"),
    ("rice", 11, 0.20, 6, 0.15, 0.00, "pantry"),
    ("soda", 12, 0.50, 8, 0.10, 0.10, "pantry"),
    ("ladle", 9, 0.80, 6, 0.40, 0.00, "cookware"),
    ("toy", 3, 0.80, 12, 0.50, 0.01, "toys"),
    ("egg", 2, 0.80, 12, 0.05, 0.10, "fresh"),
    ("spray bottle", 6, 0.50, 4, 0.33, 0.00, "cleaning"),
    ("salt shaker", 4, 0.50, 2, 0.25, 0.00, "pantry"),
    ("wine bottle", 7, 0.40, 6, 0.10, 0.10, "pantry"),
    ("potato", 1, 0.75, 8, 0.10, 0.00, "fresh"),
    ("pencil", 4, 0.50, 12, 0.50, 0.01, "office"),
    ("soap bottle", 7, 0.50, 4, 0.10, 0.01, "bath"),
    ("plate", 7, 0.80, 12, 0.40, 0.00, "tableware"),
    ("fork", 6, 0.80, 8, 0.20, 0.20, "tableware"),
    ("book", 7, 0.80, 20, 0.20, 0.01, "office"),
    ("pan", 9, 0.75, 6, 0.20, 0.05, "cookware"),
    ("towel roll", 2, 0.75, 4, 0.25, 0.00, "cleaning"),
    ("butter knife", 2, 0.75, 4, 0.20, 0.01, "tableware"),
    ("spoon", 9, 0.75, 16, 0.20, 0.00, "tableware"),
    ("watch", 4, 0.50, 2, 0.40, 0.00, "personal"),
    ("phone", 7, 0.75, 2, 0.90, 0.00, "personal"),
    ("pen", 6, 0.75, 8, 0.50, 0.00, "office"),
    ("credit card", 4, 0.50, 4, 0.20, 0.10, "personal"),
    ("candle", 8, 0.60, 12, 0.40, 0.20, "decor"),
    ("tissue box", 6, 0.20, 4, 0.10, 0.10, "bath"),
    ("newspaper", 8, 0.60, 5, 0.60, 0.20, "office"),
    ("remote control", 4, 0.75, 4, 0.75, 0.00, "personal"),
    ("house plant", 8, 0.75, 12, 0.01, 0.01, "decor"),
    ("laptop", 13, 0.60, 4, 0.75, 0.10, "office"),
    ("desk lamp", 4, 0.50, 4, 0.01, 0.01, "decor"),
    ("alarm clock", 4, 0.20, 1, 0.01, 0.00, "decor"),
    ("soap bar", 7, 0.50, 4, 0.15, 0.01, "bath"),
    ("toilet paper", 1, 0.50, 4, 0.10, 0.00, "bath"),
    ("baseball bat", 2, 0.20, 1, 0.20, 0.00, "toys"),
    ("dish sponge", 7, 0.80, 4, 0.10, 0.01, "cleaning"),
    ("tennis racket", 1, 0.25, 4, 0.20, 0.00, "toys"),
    ("basket ball", 1, 0.20, 1, 0.20, 0.00, "toys"),
    ("coffee machine", 3, 0.60, 2, 0.01, 0.00, "appliance"),
    ("knife", 1, 0.60, 12, 0.20, 0.01, "tableware"),
    ("bread", 4, 0.50, 4, 0.14, 0.10, "pantry"),
    ("cup", 11, 0.80, 16, 0.40, 0.10, "tableware"),
    ("pot", 9, 0.50, 4, 0.10, 0.00, "cookware"),
    ("bottle", 11, 0.90, 15, 0.25, 0.10, "pantry"),
    ("toaster", 2, 0.80, 1, 0.01, 0.00, "appliance"),
    ("cloth", 8, 0.90, 6, 0.20, 0.01, "cleaning"),
    ("microwave", 2, 0.80, 1, 0.00, 0.00, "appliance"),
    ("apples", 2, 0.80, 15, 0.40, 0.20, "fruit"),
    ("oranges", 2, 0.80, 15, 0.40, 0.20, "fruit"),
    ("bananas", 2, 0.80, 15, 0.40, 0.20, "fruit"),
    ("orange", 2, 0.80, 15, 0.40, 0.20, "fruit"),
    ("banana", 2, 0.80, 15, 0.40, 0.20, "fruit"),
    ("lemon", 2, 0.80, 15, 0.40, 0.20, "fruit"),
    ("garlic", 2, 0.80, 15, 0.40, 0.20, "fruit"),
    ("peach", 2, 0.80, 15, 0.40, 0.20, "fruit"),
    ("grapes", 2, 0.80, 15, 0.40, 0.20, "fruit"),
    ("avocado", 2, 0.80, 15, 0.40, 0.20, "fruit"),
    ("towels", 11, 0.75, 8, 0.20, 0.00, "bath"),
    ("beet", 1, 0.80, 5, 0.10, 0.01, "fresh"),
    ("radish", 1, 0.80, 5, 0.10, 0.01, "fresh"),
    ("eggplant", 1, 0.80, 5, 0.10, 0.01, "fresh"),
    ("basil", 1, 0.80, 5, 0.10, 0.01, "fresh"),
    ("tomato", 1, 0.80, 5, 0.10, 0.01, "fresh"),
    ("kale", 1, 0.80, 5, 0.10, 0.01, "fresh"),
    ("squash", 1, 0.80, 5, 0.10, 0.01, "fresh"),
    ("yogurt", 6, 0.80, 2, 0.10, 0.10, "fresh"),
    ("whole fat milk", 6, 0.80, 2, 0.10, 0.10, "fresh"),
    ("zero fat milk", 6, 0.80, 2, 0.10, 0.10, "fresh"),
    ("pop", 12, 0.50, 8, 0.10, 0.10, "pantry"),
    ("teddy bear", 3, 0.80, 12, 0.50, 0.01, "toys"),
    ("legos", 3, 0.80, 12, 0.50, 0.01, "toys"),
    ("action figure", 3, 0.80, 12, 0.50, 0.01, "toys"),
    ("dinosaur", 3, 0.80, 12, 0.50, 0.01, "toys"),
    ("jigsaw", 3, 0.80, 12, 0.50, 0.01, "toys"),
    ("animal", 3, 0.80, 12, 0.50, 0.01, "toys"),
    ("butter", 2, 0.80, 12, 0.05, 0.10, "fresh"),
    ("pepper shaker", 4, 0.50, 2, 0.25, 0.00, "pantry"),
    ("paprika shaker", 4, 0.50, 2, 0.25, 0.00, "pantry"),
    ("bottle of soap", 7, 0.50, 4, 0.10, 0.01, "bath"),
    ("plates", 7, 0.80, 12, 0.40, 0.00, "tableware"),
    ("binder", 7, 0.80, 20, 0.20, 0.01, "office"),
    ("document", 7, 0.80, 20, 0.20, 0.01, "office"),
    ("books", 7, 0.80, 20, 0.20, 0.01, "office"),
    ("binders", 7, 0.80, 20, 0.20, 0.01, "office"),
    ("documents", 7, 0.80, 20, 0.20, 0.01, "office"),
    ("spoons", 9, 0.75, 16, 0.20, 0.00, "tableware"),
    ("smartphone", 7, 0.75, 2, 0.90, 0.00, "personal"),
    ("wallet", 4, 0.50, 4, 0.20, 0.10, "personal"),
    ("debit card", 4, 0.50, 4, 0.20, 0.10, "personal"),
    ("candles", 8, 0.60, 12, 0.40, 0.20, "decor"),
    ("box of tissues", 6, 0.20, 4, 0.10, 0.10, "bath"),
    ("pc", 13, 0.60, 4, 0.75, 0.10, "office"),
    ("bar of soap", 7, 0.50, 4, 0.15, 0.01, "bath"),
    ("soap", 7, 0.50, 4, 0.15, 0.01, "bath"),
    ("dish soap", 7, 0.80, 4, 0.10, 0.01, "cleaning"),
    ("sponge", 7, 0.80, 4, 0.10, 0.01, "cleaning"),
    ("baguette", 4, 0.50, 4, 0.14, 0.10, "pantry"),
    ("bottles", 11, 0.90, 15, 0.25, 0.10, "pantry"),
]


ROOMS = ["kitchen", "living room", "bedroom", "bathroom"]

# room -> furniture -> relative weight of appearing in that room
ROOM_FURNITURE = {
    "kitchen": {"counter": 3, "table": 1, "shelf": 2, "fridge": 2, "top cabinet": 3,
                "cooktop": 1, "counter top": 3, "dining table": 1, "chair": 2,
                "sink": 1, "chairs": 1},
    "living room": {"coffee table": 2, "tv stand": 1, "sofa": 2, "couch": 1, "shelf": 3,
                    "shelving unit": 2, "side table": 3, "chair": 2, "chairs": 1,
                    "desk": 1, "table": 1},
    "bedroom": {"bed": 2, "dresser": 2, "desk": 2, "desk chair": 1, "side table": 3,
                "shelf": 3, "shelving unit": 1, "chair": 1},
    "bathroom": {"toilet": 1, "sink": 2, "shelf": 3, "top cabinet": 3, "counter": 2,
                 "shelving unit": 1},
}

RELATIONS = {
    "counter": ["onTop"], "table": ["onTop", "under"], "shelf": ["onTop", "in"],
    "fridge": ["in"], "top cabinet": ["in"], "coffee table": ["onTop", "under"],
    "cooktop": ["onTop"], "counter top": ["onTop"], "dining table": ["onTop"],
    "chair": ["onTop"], "tv stand": ["onTop", "in"], "sofa": ["onTop"],
    "bed": ["onTop", "under"], "dresser": ["in", "onTop"], "toilet": ["onTop"],
    "sink": ["in"], "shelving unit": ["onTop", "in"], "desk": ["onTop", "in", "under"],
    "desk chair": ["onTop"], "side table": ["onTop", "in"], "chairs": ["onTop"],
    "couch": ["onTop"],
}

K = ["counter", "counter top", "dining table", "table", "shelf", "top cabinet"]
CATEGORY_PLACES = {
    "fruit": {"kitchen": K + ["fridge"], "living room": ["coffee table", "table"]},
    "fresh": {"kitchen": ["fridge", "counter", "counter top", "dining table", "table"]},
    "pantry": {"kitchen": K + ["fridge"], "living room": ["shelf", "side table"]},
    "tableware": {"kitchen": K + ["sink", "chair", "chairs"],
                  "living room": ["coffee table", "side table", "table"],
                  "bedroom": ["side table", "desk"],
                  "bathroom": ["counter", "shelf", "top cabinet", "sink"]},
    "cookware": {"kitchen": K + ["cooktop", "sink"]},
    "cleaning": {"kitchen": ["sink", "counter", "counter top", "top cabinet", "shelf"],
                 "bathroom": ["sink", "counter", "shelf", "top cabinet", "toilet",
                              "shelving unit"]},
    "appliance": {"kitchen": ["counter", "counter top", "table", "shelf"]},
    "bath": {"bathroom": ["sink", "counter", "shelf", "top cabinet", "toilet",
                          "shelving unit"],
             "bedroom": ["dresser", "side table"]},
    "office": {"living room": ["coffee table", "tv stand", "side table", "shelf",
                               "shelving unit", "desk", "sofa", "couch", "table",
                               "chair", "chairs"],
               "bedroom": ["desk", "side table", "dresser", "bed", "shelf",
                           "shelving unit", "desk chair", "chair"],
               "kitchen": ["dining table", "table", "chair", "chairs"]},
    "personal": {"living room": ["coffee table", "tv stand", "side table", "sofa",
                                 "couch", "desk", "chair", "chairs"],
                 "bedroom": ["side table", "dresser", "bed", "desk", "desk chair",
                             "chair"],
                 "kitchen": ["counter", "dining table", "table", "chair"],
                 "bathroom": ["counter", "shelf", "sink", "top cabinet", "shelving unit"]},
    "decor": {"living room": ["coffee table", "tv stand", "side table", "shelf",
                              "shelving unit", "table"],
              "bedroom": ["side table", "dresser", "desk", "shelf"],
              "kitchen": ["dining table", "counter", "shelf"],
              "bathroom": ["counter", "shelf", "shelving unit", "toilet", "top cabinet"]},
    "toys": {"living room": ["sofa", "couch", "chair", "chairs", "coffee table",
                             "shelf", "shelving unit"],
             "bedroom": ["bed", "shelf", "dresser", "chair", "desk chair",
                         "shelving unit"]},
}


def main():
    ap = argparse.ArgumentParser(description="Generate the bundled priors file.")
    ap.add_argument("--sigma", type=float, default=1.2, help="log-normal spread of placement weights")
    ap.add_argument("--keep", type=float, default=0.8, help="chance of keeping each candidate placement")
    ap.add_argument("--min-objects", type=int, default=16, help="object classes each furniture class must hold")
    args = ap.parse_args()
    lexicon = [{"category": c, "adjectives": a} for c, a in ADJECTIVES]
    cats = [c for c, _ in ADJECTIVES]
    rooms = [{"label": r, "adjective_categories": [], "sample_prob": 1.0, "max_count": 1}
             for r in ROOMS]
    furniture = [{"label": l, "adjective_categories": cats[:n], "sample_prob": p,
                  "max_count": m} for l, n, p, m in FURNITURE]
    objects = [{"label": l, "adjective_categories": cats[:n], "sample_prob": p,
                "max_count": m, "move_frequency": mf, "add_prob": ar, "remove_prob": ar}
               for l, n, p, m, mf, ar, _ in OBJECTS]

    rf_edges = []
    for room in ROOMS:
        w = ROOM_FURNITURE[room]
        total = sum(w.values())
        for f in sorted(w):
            rf_edges.append({"room": room, "furniture": f, "prob": round(w[f] / total, 12)})

    # (room, object) -> furniture list
    placement = {}
    for label, *_rest, category in OBJECTS:
        for room in ROOMS:
            places = CATEGORY_PLACES[category].get(room)
            if places:
                placement[(room, label)] = [f for f in places if RNG.random() < args.keep] or [places[0]]
    # every furniture class in a room must be able to hold at least --min-objects classes
    for room in ROOMS:
        in_room = sorted(o for (r, o) in placement if r == room)
        for f in sorted(ROOM_FURNITURE[room]):
            holders = [o for o in in_room if f in placement[(room, o)]]
            spare = [o for o in in_room if o not in holders]
            RNG.shuffle(spare)
            for o in spare[:max(0, args.min_objects - len(holders))]:
                placement[(room, o)].append(f)

    fo_edges = []
    for label, *_rest, category in OBJECTS:
        for room in ROOMS:
            if (room, label) not in placement:
                continue
            keep = placement[(room, label)]
            cand = [(f, rel) for f in keep for rel in RELATIONS[f]]
            weights = [RNG.lognormvariate(0.0, args.sigma) for _ in cand]
            total = sum(weights)
            probs = [round(x / total, 12) for x in weights]
            for (f, rel), p in sorted(zip(cand, probs)):
                fo_edges.append({"room": room, "furniture": f, "object": label,
                                 "relation": rel, "prob": p})

    doc = {
        "priors_format": 1,
        "adjective_lexicon": lexicon,
        "rooms": rooms,
        "furniture": furniture,
        "objects": objects,
        "room_furniture_edges": rf_edges,
        "furniture_object_edges": fo_edges,
    }
    print(json.dumps(doc, indent=1))


if __name__ == "__main__":
    main()
