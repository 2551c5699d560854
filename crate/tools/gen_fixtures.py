#!/usr/bin/env python3
"""Generate the fixture corpora.

Writes, relative to the repository root:

  fixtures/foon/<recipe>.json              curated knowledge-network recipes
  fixtures/experiment/<task>/tree_k.json   five generated trees per task
  fixtures/<demand key>/                   recorded gateway replies
      demand.txt, steps_k.txt, tree_k.json
  data/costs.json                          reference robot motion costs

Everything is deterministic; rerunning reproduces the same bytes. After
regenerating, refresh the transition table with

  cargo run -p treeplan -- extract-transitions fixtures/foon --out data/transitions.txt

The script checks that every unit meant to be valid passes the transition
table extracted from the FOON recipes and that every deliberately broken
unit fails it, using the same rules as the engine.
"""

import hashlib
import json
import random
import shutil
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent

COSTS = {
    "add": 0.3, "blend": 0.2, "chop": 0.5, "close": 0.2, "cut": 0.5, "dice": 0.6,
    "drizzle": 0.2, "flip": 0.3, "mince": 0.6, "mix": 0.2, "open": 0.2, "place": 0.3,
    "pour": 0.1, "put": 0.3, "rotate": 0.3, "scoop": 0.4, "slice": 0.5, "sprinkle": 0.3,
    "stir": 0.2, "toss": 0.3, "whisk": 0.3,
}

# (slug, product, final state, final motion, vessels, items)
# item kinds: produce (starts whole on the cutting board), liquid, powder, spice.
DISHES = [
    ("chocolate-milk", "chocolate milk", "mixed", "mix", ("glass", "mug"),
     [("cocoa powder", "powder", "jar"), ("milk", "liquid", "bottle")]),
    ("strawberry-smoothie", "smoothie", "blended", "blend", ("blender", "food processor"),
     [("strawberry", "produce", None), ("banana", "produce", None), ("milk", "liquid", "bottle"),
      ("honey", "liquid", "jar")]),
    ("vegetable-soup", "soup", "stirred", "stir", ("pot", "saucepan"),
     [("carrot", "produce", None), ("cabbage", "produce", None), ("bean", "liquid", "can"),
      ("water", "liquid", "kettle"), ("chili powder", "spice", "shaker")]),
    ("pancake-batter", "batter", "whisked", "whisk", ("bowl", "mixing bowl"),
     [("flour", "powder", "bag"), ("sugar", "powder", "jar"), ("milk", "liquid", "bottle"),
      ("melted butter", "liquid", "cup")]),
    ("lemonade", "lemonade", "stirred", "stir", ("pitcher", "carafe"),
     [("lemon juice", "liquid", "bottle"), ("sugar", "powder", "jar"), ("water", "liquid", "kettle")]),
    ("fruit-salad", "fruit salad", "tossed", "toss", ("bowl", "serving bowl"),
     [("apple", "produce", None), ("banana", "produce", None), ("grape", "produce", None),
      ("honey", "liquid", "jar")]),
    ("guacamole", "guacamole", "mixed", "mix", ("bowl", "mortar"),
     [("avocado", "produce", None), ("onion", "produce", None), ("tomato", "produce", None),
      ("lime juice", "liquid", "bottle"), ("salt", "spice", "shaker")]),
    ("oatmeal", "oatmeal", "stirred", "stir", ("pot", "saucepan"),
     [("oats", "powder", "canister"), ("milk", "liquid", "bottle"), ("cinnamon", "spice", "shaker"),
      ("honey", "liquid", "jar")]),
    ("coleslaw", "coleslaw", "mixed", "mix", ("bowl", "salad bowl"),
     [("cabbage", "produce", None), ("carrot", "produce", None), ("mayonnaise", "powder", "jar"),
      ("vinegar", "liquid", "bottle")]),
    ("tomato-sauce", "tomato sauce", "stirred", "stir", ("pan", "saucepan"),
     [("tomato", "produce", None), ("garlic", "produce", None), ("olive oil", "liquid", "bottle"),
      ("salt", "spice", "shaker")]),
    ("iced-coffee", "iced coffee", "stirred", "stir", ("glass", "mug"),
     [("coffee", "liquid", "coffee pot"), ("ice", "powder", "ice bucket"), ("sugar", "powder", "jar"),
      ("milk", "liquid", "bottle")]),
    ("hummus", "hummus", "blended", "blend", ("blender", "food processor"),
     [("chickpeas", "liquid", "can"), ("tahini", "powder", "jar"), ("lemon juice", "liquid", "bottle"),
      ("garlic", "produce", None), ("salt", "spice", "shaker")]),
]

# Transfer routes per kind; the first entry is the cheapest.
ROUTES = {
    "liquid": ["pour", "add"],
    "powder": ["two-pour", "scoop"],
    "spice": ["sprinkle", "scoop"],
    "produce": ["whole", "slice", "chop", "dice"],
}
PREP_STATE = {"slice": "sliced", "chop": "chopped", "dice": "diced"}


def obj(label, states, container=None):
    states = list(states)
    if container:
        states.append(f"in [{container}]")
    return {"label": label, "states": states}


def unit(motion, inputs, outputs):
    return {"inputs": inputs, "motion": motion, "outputs": outputs}


def vessel_states(contents):
    return [f"contains {c}" for c in sorted(contents)] or ["empty"]


def dish_tree(dish, vessel, routes, plural=False):
    """One task tree for `dish` in `vessel` taking the given route per item.

    Returns (tree, steps)."""
    _, product, done, final, _, items = dish
    name = (lambda label: PLURALS.get(label, label)) if plural else (lambda label: label)
    units, steps, contents = [], [], []
    for (label, kind, source), route in zip(items, routes):
        before = vessel_states(contents)
        after = vessel_states(contents + [label])
        if kind == "produce":
            state = "whole"
            if route != "whole":
                state = PREP_STATE[route]
                units.append(unit(route,
                                  [obj(name(label), ["whole"], "cutting board"), obj("knife", ["clean"])],
                                  [obj(name(label), [state], "cutting board")]))
                steps.append(f"{route.capitalize()} the {name(label)} on the cutting board.")
            units.append(unit("add",
                              [obj(name(label), [state], "cutting board"), obj(vessel, before)],
                              [obj(name(label), [state], vessel), obj(vessel, after)]))
            steps.append(f"Add the {name(label)} to the {vessel}.")
        elif route == "two-pour":
            units.append(unit("pour",
                              [obj(name(label), [], source), obj("measuring cup", ["empty"])],
                              [obj(name(label), [], "measuring cup"),
                               obj("measuring cup", [f"contains {label}"])]))
            units.append(unit("pour",
                              [obj(name(label), [], "measuring cup"), obj(vessel, before)],
                              [obj(name(label), [], vessel), obj(vessel, after)]))
            steps.append(f"Pour the {name(label)} from the {source} into the measuring cup.")
            steps.append(f"Pour the {name(label)} from the measuring cup into the {vessel}.")
        else:
            units.append(unit(route,
                              [obj(name(label), [], source), obj(vessel, before)],
                              [obj(name(label), [], vessel), obj(vessel, after)]))
            steps.append(f"{route.capitalize()} the {name(label)} from the {source} into the {vessel}.")
        contents.append(label)
    goal = obj(product, [done], vessel)
    units.append(unit(final, [obj(vessel, vessel_states(contents))], [goal]))
    steps.append(f"{final.capitalize()} everything in the {vessel} to make the {product}.")
    return {"goal": goal, "units": units}, steps


PLURALS = {"strawberry": "strawberries", "carrot": "carrots", "bean": "beans", "tomato": "tomatoes",
           "grape": "grapes", "banana": "bananas", "cucumber": "cucumbers", "onion": "onions",
           "apple": "apples"}


def canonical_routes(dish):
    """FOON recipes measure powders, sprinkle spices, pour liquids and cut
    produce, rotating through the cutting motions."""
    routes, cuts = [], ["slice", "chop", "dice"]
    for i, (_, kind, _) in enumerate(dish[5]):
        routes.append({"liquid": "pour", "powder": "two-pour", "spice": "sprinkle",
                       "produce": cuts[i % 3]}[kind])
    return routes


def random_routes(dish, rng, cheap_bias):
    routes = []
    for _, kind, _ in dish[5]:
        options = ROUTES[kind]
        routes.append(options[0] if rng.random() < cheap_bias else rng.choice(options[1:]))
    return routes


# Hand-built trees.

POUR_MILK = {
    "goal": obj("glass", ["contains milk"]),
    "units": [unit("pour", [obj("milk", ["in [bottle]"]), obj("glass", ["empty"])],
                   [obj("glass", ["contains milk"])])],
}


def greek_salad(oil_motion="drizzle", tomato_cut="slice", plural=False):
    cucumber = "cucumbers" if plural else "cucumber"
    tomato = "tomatoes" if plural else "tomato"
    tomato_state = PREP_STATE[tomato_cut]
    bowl = "salad bowl"
    units = [
        unit("slice", [obj(cucumber, ["whole"], "cutting board"), obj("knife", ["clean"])],
             [obj(cucumber, ["sliced"], "cutting board")]),
        unit("add", [obj(cucumber, ["sliced"], "cutting board"), obj(bowl, ["empty"])],
             [obj(cucumber, ["sliced"], bowl), obj(bowl, ["contains cucumber"])]),
        unit(tomato_cut, [obj(tomato, ["whole"], "cutting board"), obj("knife", ["clean"])],
             [obj(tomato, [tomato_state], "cutting board")]),
        unit("add", [obj(tomato, [tomato_state], "cutting board"), obj(bowl, ["contains cucumber"])],
             [obj(tomato, [tomato_state], bowl), obj(bowl, ["contains cucumber", "contains tomato"])]),
        unit("add", [obj("feta cheese", ["crumbled"], "plate"),
                     obj(bowl, ["contains cucumber", "contains tomato"])],
             [obj("feta cheese", ["crumbled"], bowl),
              obj(bowl, ["contains cucumber", "contains feta cheese", "contains tomato"])]),
        unit("pour", [obj("olive oil", [], "bottle"), obj("small bowl", ["empty"])],
             [obj("olive oil", [], "small bowl"), obj("small bowl", ["contains olive oil"])]),
        unit("pour", [obj("lemon juice", [], "jar"), obj("small bowl", ["contains olive oil"])],
             [obj("lemon juice", [], "small bowl"),
              obj("small bowl", ["contains lemon juice", "contains olive oil"])]),
        unit("whisk", [obj("small bowl", ["contains lemon juice", "contains olive oil"])],
             [obj("dressing", ["whisked"], "small bowl")]),
        unit("pour", [obj("dressing", ["whisked"], "small bowl"),
                      obj(bowl, ["contains cucumber", "contains feta cheese", "contains tomato"])],
             [obj("dressing", ["whisked"], bowl),
              obj(bowl, ["contains cucumber", "contains dressing", "contains feta cheese", "contains tomato"])]),
        unit(oil_motion, [obj("olive oil", [], "bottle"),
                          obj(bowl, ["contains cucumber", "contains dressing", "contains feta cheese",
                                     "contains tomato"])],
             [obj("olive oil", [], bowl),
              obj(bowl, ["contains cucumber", "contains dressing", "contains feta cheese",
                         "contains olive oil", "contains tomato"])]),
        unit("toss", [obj(bowl, ["contains cucumber", "contains dressing", "contains feta cheese",
                                 "contains olive oil", "contains tomato"])],
             [obj("greek salad", ["tossed"], bowl)]),
    ]
    steps = [
        f"Slice the {cucumber} on the cutting board.",
        f"Add the sliced {cucumber} to the salad bowl.",
        f"{tomato_cut.capitalize()} the {tomato} on the cutting board.",
        f"Add the {tomato} to the salad bowl.",
        "Add the crumbled feta cheese from the plate.",
        "Pour olive oil from the bottle into a small bowl.",
        "Pour lemon juice from the jar into the small bowl.",
        "Whisk the olive oil and lemon juice into a dressing.",
        "Pour the dressing over the salad.",
        f"{oil_motion.capitalize()} a little more olive oil from the bottle over the salad.",
        "Toss the salad.",
    ]
    return {"goal": obj("greek salad", ["tossed"], bowl), "units": units}, steps


# Validation mirror (same rules as the engine).

def split_states(o):
    states, container = set(), None
    for s in o["states"]:
        s = " ".join(s.lower().split())
        if s.startswith("in [") and s.endswith("]"):
            container = s[4:-1].strip()
        else:
            states.add(s)
    return states, container


def by_label(objects):
    out = {}
    for o in objects:
        out.setdefault(" ".join(o["label"].lower().split()), set()).update(split_states(o)[0])
    return out


def extract_pairs(units):
    pairs = set()
    for u in units:
        before = by_label(u["inputs"])
        for label, after in by_label(u["outputs"]).items():
            if label not in before:
                continue
            for to in after - before[label]:
                for frm in before[label]:
                    pairs.add((frm, to))
    return pairs


def is_valid(u, pairs):
    if not u["inputs"] or not u["outputs"]:
        return False
    for o in u["inputs"] + u["outputs"]:
        states, container = split_states(o)
        if not states and container is None:
            return False
    before = by_label(u["inputs"])
    for label, after in by_label(u["outputs"]).items():
        prior = before.get(label)
        if not prior:
            continue
        for to in after:
            if not any(frm == to or (frm, to) in pairs for frm in prior):
                return False
    return True


def corrupt(tree, rng):
    """Break one unit: reverse a cut, or strip an object's states.
    Returns the index of the broken unit."""
    units = tree["units"]
    cuts = [i for i, u in enumerate(units) if u["motion"] in PREP_STATE]
    if cuts and rng.random() < 0.5:
        i = rng.choice(cuts)
        u = units[i]
        board_in = u["inputs"][0]
        board_out = u["outputs"][0]
        board_in["states"], board_out["states"] = board_out["states"], board_in["states"]
        return i
    i = rng.randrange(len(units))
    side = units[i]["outputs"]
    side[rng.randrange(len(side))]["states"] = []
    return i


def demand_key(demand):
    normalized = " ".join(demand.lower().split())
    return hashlib.sha256(normalized.encode()).hexdigest()[:16]


def dump(path, value):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(value, indent=2) + "\n")


def fenced(tree):
    return "Here is the task tree:\n```json\n" + json.dumps(tree, indent=2) + "\n```\n"


def numbered(steps):
    return "".join(f"{i}. {s}\n" for i, s in enumerate(steps, 1))


def main():
    fixtures = ROOT / "fixtures"
    for sub in ["foon", "experiment"]:
        shutil.rmtree(fixtures / sub, ignore_errors=True)
    for old in fixtures.glob("*/demand.txt"):
        shutil.rmtree(old.parent)

    # Knowledge network.
    foon = {}
    for dish in DISHES:
        foon[dish[0]] = dish_tree(dish, dish[4][0], canonical_routes(dish))[0]
    foon["greek-salad"] = greek_salad()[0]
    foon["glass-of-milk"] = POUR_MILK
    for slug, tree in foon.items():
        dump(fixtures / "foon" / f"{slug}.json", tree)
    pairs = extract_pairs([u for t in foon.values() for u in t["units"]])

    expected_valid, expected_broken = [], []

    # Experiment corpus: two vessels per dish, five trees per task.
    for dish in DISHES:
        for vessel in dish[4]:
            slug = f"{dish[0]}-in-{vessel.replace(' ', '-')}"
            rng = random.Random(slug)
            task = fixtures / "experiment" / slug
            task.mkdir(parents=True)
            (task / "demand.txt").write_text(f"Make {dish[1]} in a {vessel}.\n")
            for k in range(1, 6):
                tree, _ = dish_tree(dish, vessel, random_routes(dish, rng, 0.6), plural=rng.random() < 0.3)
                broken = None
                if k > 1 and rng.random() < 0.2:
                    broken = corrupt(tree, rng)
                for i, u in enumerate(tree["units"]):
                    (expected_broken if i == broken else expected_valid).append((f"{slug}/tree_{k}", i, u))
                dump(task / f"tree_{k}.json", tree)

    # Recorded gateway replies.
    cocoa = DISHES[0]
    fig5_a, steps_a = dish_tree(cocoa, "glass", ["scoop", "pour"])
    fig5_b, steps_b = dish_tree(cocoa, "glass", ["two-pour", "pour"])
    fig5_add, steps_add = dish_tree(cocoa, "glass", ["add", "pour"])
    fig5_broken, steps_broken = dish_tree(cocoa, "glass", ["two-pour", "pour"])
    fig5_broken["units"][-1]["outputs"][0]["states"] = []
    smoothie = DISHES[1]
    soup = DISHES[2]
    milk_variant = json.loads(json.dumps(POUR_MILK).replace('"milk"', '"Milk"'))
    salad = [greek_salad(), greek_salad(oil_motion="pour"), greek_salad(plural=True),
             greek_salad(tomato_cut="chop"), greek_salad()]
    salad[4][0]["units"][2]["outputs"][0]["states"] = ["whole", "in [cutting board]"]
    salad[4][0]["units"][2]["inputs"][0]["states"] = ["sliced", "in [cutting board]"]

    demands = {
        "Make a glass of chocolate milk.": [
            (fig5_a, steps_a), (fig5_b, steps_b), (fig5_a, steps_a), (fig5_broken, steps_broken),
            (fig5_add, steps_add)],
        "Pour milk into a glass.": [
            (POUR_MILK, ["Pour the milk from the bottle into the glass."]),
            (milk_variant, ["Pour milk into the empty glass."]),
            (POUR_MILK, ["Pour the milk into the glass."]),
            (POUR_MILK, ["Take the bottle of milk and pour it into the glass."]),
            (milk_variant, ["Pour the Milk into a glass."])],
        "Make a strawberry smoothie.": [
            dish_tree(smoothie, "blender", ["slice", "slice", "pour", "pour"]),
            dish_tree(smoothie, "blender", ["whole", "slice", "pour", "pour"], plural=True),
            dish_tree(smoothie, "blender", ["chop", "whole", "pour", "add"]),
            dish_tree(smoothie, "blender", ["slice", "dice", "add", "pour"]),
            dish_tree(smoothie, "blender", ["dice", "slice", "pour", "pour"], plural=True)],
        "Make a Greek salad.": salad,
        "Prepare a soup with carrots, cabbage, and beans, mildly spiced.": [
            dish_tree(soup, "pot", ["chop", "chop", "pour", "pour", "sprinkle"], plural=True),
            dish_tree(soup, "pot", ["dice", "slice", "pour", "pour", "scoop"], plural=True),
            dish_tree(soup, "pot", ["chop", "whole", "add", "pour", "sprinkle"]),
            dish_tree(soup, "pot", ["slice", "chop", "pour", "add", "sprinkle"], plural=True),
            dish_tree(soup, "pot", ["chop", "chop", "pour", "pour", "sprinkle"])],
    }
    broken_trees = {("Make a glass of chocolate milk.", 4): len(fig5_broken["units"]) - 1,
                    ("Make a Greek salad.", 5): 2}
    for demand, trees in demands.items():
        target = fixtures / demand_key(demand)
        target.mkdir(parents=True)
        (target / "demand.txt").write_text(demand + "\n")
        for k, (tree, steps) in enumerate(trees, 1):
            (target / f"steps_{k}.txt").write_text(numbered(steps))
            text = fenced(tree) if k % 2 == 0 else json.dumps(tree, indent=2) + "\n"
            (target / f"tree_{k}.json").write_text(text)
            broken = broken_trees.get((demand, k))
            for i, u in enumerate(tree["units"]):
                (expected_broken if i == broken else expected_valid).append((f"{demand} #{k}", i, u))

    bad = [(where, i) for where, i, u in expected_valid if not is_valid(u, pairs)]
    slipped = [(where, i) for where, i, u in expected_broken if is_valid(u, pairs)]
    assert not bad, f"units expected valid fail the extracted table: {bad[:5]}"
    assert not slipped, f"broken units pass the extracted table: {slipped[:5]}"

    dump(ROOT / "data" / "costs.json", {"default": 0.5, "costs": COSTS})
    print(f"{len(foon)} recipes, {len(pairs)} transitions, "
          f"{len(expected_valid)} valid units, {len(expected_broken)} broken units")


if __name__ == "__main__":
    main()
