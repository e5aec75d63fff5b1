#!/usr/bin/env python3
"""Builds a schema-faithful SQuAD 1.1 fixture for loader tests.

Same JSON nesting as the public dev file (data -> paragraphs -> qas ->
answers with character answer_start). 100 question entries total:
 - 98 with answers cut exactly at token boundaries (multi-answer entries
   included, as in the real dev set),
 - 1 whose first answer text extends into a longer word so the covered-span
   round trip fails while a second answer aligns (exercises the partial path),
 - 1 whose only answer has a character offset past the context end, which the
   loader must drop (raw count 100, dropped 1, aligned 99).

Usage: python3 make_squad_fixture.py [out.json]
"""

import json
import random
import sys

TOPICS = [
    ("Rivers", ["the river basin drains", "into", "a wide delta", "near the harbor"]),
    ("Treaties", ["the treaty of", "was signed in", "by both empires", "after the war"]),
    ("Computing", ["the machine executes", "instructions per cycle", "using a cache", "of size"]),
    ("Astronomy", ["the comet returns every", "years and was observed", "from the observatory", "in"]),
    ("Music", ["the sonata was composed", "for piano and violin", "during the summer of", "in the city"]),
]

NOUNS = [
    "Verden", "Aldoria", "Merrick", "Calstead", "Norwich", "Pelham", "Quarren",
    "Sylvane", "Torvald", "Umbria", "Vectis", "Winslow", "Yarrow", "Zephyria",
]
NUMBERS = ["12", "76", "1848", "1,024", "3.5", "240", "19", "7,600"]


def make_context(rng, topic_words):
    parts = []
    for _ in range(rng.randint(4, 7)):
        frag = rng.choice(topic_words)
        noun = rng.choice(NOUNS)
        num = rng.choice(NUMBERS)
        form = rng.randrange(4)
        if form == 0:
            parts.append(f"{frag} {noun}")
        elif form == 1:
            parts.append(f"{frag} {num}")
        elif form == 2:
            parts.append(f"{noun}'s {frag} {num}")
        else:
            parts.append(f"{frag} {noun} ({num})")
    return (". ".join(p.strip().capitalize() for p in parts) + ".").replace("..", ".")


def token_boundary_answer(rng, context):
    # Cut a 1-3 word run that starts and ends at word boundaries.
    words = []
    i = 0
    while i < len(context):
        if context[i].isalnum():
            j = i
            while j < len(context) and (context[j].isalnum() or context[j] in ",.'"):
                j += 1
            while j > i and not context[j - 1].isalnum():
                j -= 1
            words.append((i, j))
            i = j
        else:
            i += 1
    k = rng.randint(1, min(3, len(words)))
    start_idx = rng.randrange(len(words) - k + 1)
    a = words[start_idx][0]
    b = words[start_idx + k - 1][1]
    return {"text": context[a:b], "answer_start": a}


def main():
    out_path = sys.argv[1] if len(sys.argv) > 1 else "tests/data/squad_fixture.json"
    rng = random.Random(11)

    articles = []
    qa_count = 0
    qid = 0
    for title, topic_words in TOPICS:
        paragraphs = []
        for _ in range(3):
            context = make_context(rng, topic_words)
            qas = []
            for _ in range(7):
                if qa_count >= 98:
                    break
                answers = [token_boundary_answer(rng, context)
                           for _ in range(rng.randint(1, 3))]
                qas.append(
                    {
                        "id": f"fx{qid:04d}",
                        "question": f"What does entry {qid} refer to?",
                        "answers": answers,
                    }
                )
                qid += 1
                qa_count += 1
            if qas:
                paragraphs.append({"context": context, "qas": qas})
        articles.append({"title": title, "paragraphs": paragraphs})

    # Round-trip failure: the answer text continues past the covered token, so
    # normalize(covered) != normalize(text); a second answer aligns cleanly.
    context = "The Sevenfold path crosses Winslow ridge after 1848 floods."
    articles.append(
        {
            "title": "Edges",
            "paragraphs": [
                {
                    "context": context,
                    "qas": [
                        {
                            "id": "fx-partial",
                            "question": "Which path crosses the ridge?",
                            "answers": [
                                {"text": "Seven", "answer_start": context.index("Sevenfold")},
                                {"text": "Sevenfold path", "answer_start": context.index("Sevenfold")},
                            ],
                        },
                        {
                            "id": "fx-unalignable",
                            "question": "What is never locatable?",
                            "answers": [
                                {"text": "zebra motif", "answer_start": len(context) - 3},
                            ],
                        },
                    ],
                }
            ],
        }
    )
    qa_count += 2

    fixture = {"version": "1.1", "data": articles}
    with open(out_path, "w") as f:
        json.dump(fixture, f, indent=1)
        f.write("\n")
    print(f"{qa_count} question entries -> {out_path}")


if __name__ == "__main__":
    main()
