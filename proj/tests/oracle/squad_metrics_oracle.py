#!/usr/bin/env python3
"""Reference EM/F1 oracle and frozen-pair generator.

Implements the official SQuAD v1.1 evaluation formulas (lowercase, strip
punctuation, strip the articles a/an/the, collapse whitespace; bag-of-tokens
F1 maximized over gold answers) and freezes a 100-pair sample with expected
values into tests/data/metrics_pairs.json. The C++ metrics must reproduce
every expected value to 4 decimals.

Pairs where both sides normalize to the empty string are excluded: there the
official script returns F1 = 0 for identical texts while the library defines
empty-vs-empty as 1 (the sensible fixed point); that edge is covered by a
dedicated unit test instead.

Usage: python3 squad_metrics_oracle.py [out.json]
"""

import collections
import json
import random
import re
import string
import sys

PUNCT = set(string.punctuation)


def normalize_answer(s):
    s = s.lower()
    s = "".join(ch for ch in s if ch not in PUNCT)
    s = re.sub(r"\b(a|an|the)\b", " ", s)
    return " ".join(s.split())


def f1_single(prediction, gold):
    pred_tokens = normalize_answer(prediction).split()
    gold_tokens = normalize_answer(gold).split()
    common = collections.Counter(pred_tokens) & collections.Counter(gold_tokens)
    num_same = sum(common.values())
    if num_same == 0:
        return 0.0
    precision = num_same / len(pred_tokens)
    recall = num_same / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


def exact_match(prediction, golds):
    p = normalize_answer(prediction)
    return int(any(p == normalize_answer(g) for g in golds))


def f1_score(prediction, golds):
    return max(f1_single(prediction, g) for g in golds)


HAND_PAIRS = [
    ("The Cat!", ["cat"]),
    ("a  dog", ["dog"]),
    ("cat sat", ["the cat"]),
    ("state-of-the-art", ["state of the art"]),
    ("1,000 soldiers", ["1000 soldiers"]),
    ("Shakespeare's plays", ["shakespeares plays"]),
    ("foo_bar", ["foobar"]),
    ("another theater", ["another theater"]),
    ("very very good", ["very good"]),
    ("the queen of the hill", ["queen of hill", "king of hill"]),
    ("An Apple", ["apple", "orange"]),
    ("orange", ["apple", "orange pie"]),
    ("July 4, 1776", ["July 4 1776"]),
    ("second", ["2nd"]),
    ("U.S. President", ["US president"]),
    ("(parentheses)", ["parentheses"]),
    ("price of $5.00", ["$5"]),
    ("ten percent", ["10%"]),
    ("Mount Everest, the tallest mountain", ["Mount Everest"]),
    ("an an an", ["aardvark"]),
    ("don't stop", ["dont stop"]),
    ("co-operate", ["cooperate"]),
    ("three cats and two dogs", ["two dogs and three cats"]),
    ("a b c", ["b", "c d", "a b"]),
    ("twenty-one pilots", ["twentyone pilots"]),
]

WORDS = [
    "river", "empire", "treaty", "glacier", "parliament", "oxygen", "novel",
    "harbor", "comet", "dynasty", "enzyme", "meridian", "sonata", "turbine",
    "village", "warden", "quartz", "lantern", "orchard", "pylon", "basilica",
    "catalyst", "delta", "ember", "fjord",
]
NUMBERS = ["12", "1848", "3.14", "7,000", "42", "1,234,567", "19th"]
ARTICLES = ["a", "an", "the"]


def random_phrase(rng, lo=1, hi=5):
    k = rng.randint(lo, hi)
    toks = [rng.choice(WORDS + NUMBERS) for _ in range(k)]
    if rng.random() < 0.3:
        toks.insert(0, rng.choice(ARTICLES))
    return " ".join(toks)


def perturb(rng, phrase):
    toks = phrase.split()
    op = rng.randrange(9)
    if op == 0:
        return phrase.upper()
    if op == 1:
        return phrase + rng.choice([".", "!", "?", ","])
    if op == 2 and len(toks) > 1:
        drop = rng.randrange(len(toks))
        return " ".join(t for i, t in enumerate(toks) if i != drop)
    if op == 3:
        i = rng.randrange(len(toks))
        return " ".join(toks[: i + 1] + [toks[i]] + toks[i + 1 :])
    if op == 4:
        return rng.choice(ARTICLES) + " " + phrase
    if op == 5:
        i = rng.randrange(len(toks))
        toks[i] = rng.choice(WORDS)
        return " ".join(toks)
    if op == 6 and len(toks) > 1:
        rng.shuffle(toks)
        return " ".join(toks)
    if op == 7:
        return random_phrase(rng)
    return "-".join(toks)


def build_pairs():
    rng = random.Random(20260818)
    pairs = list(HAND_PAIRS)
    while len(pairs) < 100:
        gold = random_phrase(rng)
        golds = [gold]
        for _ in range(rng.randrange(3)):
            golds.append(perturb(rng, gold))
        pred = perturb(rng, rng.choice(golds)) if rng.random() < 0.8 else random_phrase(rng)
        if not normalize_answer(pred) and all(not normalize_answer(g) for g in golds):
            continue
        pairs.append((pred, golds))

    out = []
    for idx, (pred, golds) in enumerate(pairs):
        out.append(
            {
                "id": f"pair{idx:03d}",
                "prediction": pred,
                "golds": golds,
                "em": exact_match(pred, golds),
                "f1": f1_score(pred, golds),
            }
        )
    return out


def main():
    out_path = sys.argv[1] if len(sys.argv) > 1 else "tests/data/metrics_pairs.json"
    pairs = build_pairs()
    with open(out_path, "w") as f:
        json.dump(pairs, f, indent=1)
        f.write("\n")
    ems = sum(p["em"] for p in pairs)
    print(f"{len(pairs)} pairs -> {out_path} (EM sum {ems}, mean F1 "
          f"{sum(p['f1'] for p in pairs) / len(pairs):.4f})")


if __name__ == "__main__":
    main()
