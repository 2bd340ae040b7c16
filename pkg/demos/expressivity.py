"""
What link path expressions can and cannot say
=============================================

Some specifications translate into a fixed link path expression run over an
encoded web: constant source lists, and closures over one fixed predicate.
Closure over whichever predicate a document names does not. This demo checks
the first two on random webs and searches small expressions for the third.
"""
import random

from subweb_ltqp.ldql import (
    P, Q, U1, U2, U3, ConstEncoding, LossyAllEncoding, PStarEncoding, check_capture,
    counterexample_wold, link_pattern_atoms, random_cawold, refute_capture,
)

rng = random.Random(0)
for shape, enc in (("const", ConstEncoding()), ("pstar", PStarEncoding(P))):
    points = failures = 0
    for _ in range(50):
        cw = random_cawold(rng, shape)
        for u in cw.wold.adoc_map:
            points += 1
            failures += not check_capture(enc, enc.meta, cw, u).ok
    print(f"{shape}: meta {enc.meta} fails at {failures} of {points} points")

# the fixed closure over P goes wrong on a web whose document asks for Q
res = check_capture(LossyAllEncoding(), PStarEncoding(P).meta, counterexample_wold(Q), U1)
print(res.witness())

# no expression with up to 5 nodes works on both webs at once
webs = [counterexample_wold(P), counterexample_wold(Q)]
enc = LossyAllEncoding()
rep = refute_capture(enc, webs, [U1, U2, U3], link_pattern_atoms(enc.alphabet), max_nodes=5)
print(f"{rep.expressions} expressions searched, {len(rep.capturing)} capture the selector")
