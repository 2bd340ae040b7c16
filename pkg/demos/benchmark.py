"""
A small social network benchmark
================================

Generate a social web where people, messages and places publish
specifications, then compare traversal strategies on four queries. The web
is smaller than the default so the demo finishes in a few seconds.
"""
from subweb_ltqp import WebGenConfig, generate_web, run_benchmark

web = generate_web(WebGenConfig(persons=20, posts=12, comments=16, forums=3,
                                cities=4, countries=2, companies=3, universities=2, tags=5))
print(f"{web.doc_count()} documents, {web.triple_count()} triples")

report = run_benchmark(web, n_seeds=3)
print(report.to_text())

# ssl is the strict profile. ssl1 and ssl2 widen one person specification
# each, which is what Q1 and Q2 need to get any answers at all.
for q in ("Q1", "Q2"):
    for profile in ("ssl", "ssl1", "ssl2"):
        n = sum(r.results for r in report.records(q, profile))
        print(q, profile, n)
