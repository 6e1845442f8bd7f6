"""Tour of the weighted finite-state core: build, compose, search, serialize.

Run from the repository root after `pip install -e .`:

    python demos/03_fsm_playground.py
"""

import tempfile

from kataback.fsm import (
    SymbolTable,
    Wfst,
    best_path,
    compose,
    cost_of,
    invert,
    k_best,
    linear_acceptor,
    load_fsm,
    save_fsm,
    trim,
)

# Weights are negative log probabilities: multiplying probabilities along a
# path is adding costs, and the most probable path is the cheapest one.
table = SymbolTable.from_labels(["a", "b", "x", "z"])

# A transducer that rewrites a->x with probability 0.5.
rewrite = Wfst(isyms=table, osyms=table)
end = rewrite.add_state()
rewrite.add_arc(0, table.id("a"), table.id("x"), cost_of(0.5), end)
rewrite.set_final(end)

# Another that rewrites x->z with probability 0.4.
shift = Wfst(isyms=table, osyms=table)
end = shift.add_state()
shift.add_arc(0, table.id("x"), table.id("z"), cost_of(0.4), end)
shift.set_final(end)

# Composition chains them into a->z with probability 0.5 * 0.4 = 0.2.
chained = compose(rewrite, shift)
path = best_path(chained)
print(f"compose: {path.input_labels} -> {path.output_labels}, p={path.prob}")

# Inversion runs a transducer backwards; composing an input string with an
# inverted model is how decoding works.
backwards = invert(chained)
print("inverted best path:", best_path(backwards).input_labels, "->",
      best_path(backwards).output_labels)

# A diamond with two competing paths: 0.6*0.5 = 0.30 against 0.4*0.9 = 0.36.
diamond = Wfst(isyms=table, osyms=table)
hi, lo, end = diamond.add_state(), diamond.add_state(), diamond.add_state()
diamond.add_arc(0, table.id("a"), table.id("a"), cost_of(0.6), hi)
diamond.add_arc(hi, table.id("b"), table.id("b"), cost_of(0.5), end)
diamond.add_arc(0, table.id("a"), table.id("a"), cost_of(0.4), lo)
diamond.add_arc(lo, table.id("b"), table.id("b"), cost_of(0.9), end)
diamond.set_final(end)
for rank, path in enumerate(k_best(diamond, 2), 1):
    print(f"diamond path {rank}: p={path.prob:.2f}")

# The unigram word model is a single state with one weighted self-loop per
# word; scoring a sequence is composing it with a chain acceptor.
words = SymbolTable.from_labels(["ice", "cream"])
unigram = Wfst(isyms=words, osyms=words)
unigram.set_final(0)
unigram.add_arc(0, words.id("ice"), words.id("ice"), cost_of(0.75), 0)
unigram.add_arc(0, words.id("cream"), words.id("cream"), cost_of(0.25), 0)
sequence = linear_acceptor(["ice", "cream"], words)
print("unigram score of 'ice cream':", best_path(compose(sequence, unigram)).prob)

# trim drops states that cannot reach a final state; machines serialize to a
# plain text arc list and load back unchanged.
with tempfile.NamedTemporaryFile(suffix=".fsm", mode="w", delete=False) as tmp:
    save_fsm(trim(diamond), tmp.name)
    print("serialized arc list:")
    print(open(tmp.name).read().rstrip())
    reloaded = load_fsm(tmp.name, table, table)
    print("reloaded best path p =", best_path(reloaded).prob)
