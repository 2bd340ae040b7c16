"""
Writing subweb specifications
=============================

A specification names which documents to look at (FOLLOW), whether their
own specifications apply too (WITH SUBWEBS), and which of their triples to
keep (INCLUDE ... WHERE).
"""
from subweb_ltqp import IRI, load_usecase, parse_swsl
from subweb_ltqp.swsl import eval_filter, eval_source_selector
from subweb_ltqp.wold import Document

spec = parse_swsl("""
FOLLOW ?friend WITH SUBWEBS {
  <https://uma.ex/#me> foaf:knows ?friend .
} INCLUDE { ?friend ?p ?o . }
""")
print(spec.normalized())

# the source selector runs the FOLLOW pattern over the seed documents
web = load_usecase().to_wold()
seeds = [IRI("https://uma.ex/")]
print(sorted(u.value for u in eval_source_selector(spec, seeds, web)))

# the filter keeps triples whose subject is the IRI that led to the document
keep = eval_filter(spec, seeds, web)
bob = web.data(Document("https://bob.ex/"))
for t in sorted(keep(bob, IRI("https://bob.ex/#me"))):
    print(t.n3())

# RECURSE repeats the FOLLOW pattern from each newly selected IRI
chain = parse_swsl("FOLLOW ?x { ?s foaf:knows ?x } RECURSE 2")
print(chain.recurse, chain.normalized())

# syntax errors say where and in which part of the grammar
try:
    parse_swsl("FOLLOW ?x { ?s ?p ?o }")
except SyntaxError as exc:
    print(exc)
