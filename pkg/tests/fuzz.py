"""Seeded syntax mutations of the bundled machines.

Every edit made here is guaranteed to break the grammar (unbalanced
brackets, characters outside the alphabet, truncation before the final
``end``), so a correct parser must reject each one with a positioned error.
"""

import random

from dynrbac import corpus

CORPUS_MACHINES = ["rms_abs.pol", "rms_ref1.pol", "rms_ref2.pol"]


def _code_positions(text):
    """Offsets outside comments."""
    out, in_comment = [], False
    for i, c in enumerate(text):
        if c == "\n":
            in_comment = False
        elif text.startswith("--", i):
            in_comment = True
        if not in_comment:
            out.append(i)
    return out


def syntax_mutations(count=200, seed=0):
    """Edits of corpus files that are guaranteed to be syntax errors."""
    rng = random.Random(seed)
    texts = [corpus.read_text(n) for n in CORPUS_MACHINES]
    out = []
    while len(out) < count:
        text = rng.choice(texts)
        pos = _code_positions(text)
        kind = rng.randrange(4)
        if kind == 0:  # unbalanced closing bracket
            i = rng.choice(pos)
            out.append(text[:i] + " " + rng.choice(")}]") + " " + text[i:])
        elif kind == 1:  # drop an opening bracket
            opens = [i for i in pos if text[i] in "({["]
            i = rng.choice(opens)
            out.append(text[:i] + text[i + 1:])
        elif kind == 2:  # character outside the alphabet
            i = rng.choice(pos)
            out.append(text[:i] + rng.choice("@#$%?;&^~`'\"") + text[i:])
        else:  # truncation before the final "end"
            last = text.rstrip().rfind("end")
            out.append(text[:rng.randrange(0, last)])
    return out
