"""
Uma's address book
==================

Uma wants the names, mail addresses and pictures of her friends. Her own
document only lists who she knows; everything else lives elsewhere. This
demo runs the same query with four ways of finding documents and shows
which answers each one produces.
"""
from subweb_ltqp import CachingFetcher, StoreFetcher, load_usecase, parse_select, run_strategy
from subweb_ltqp.webhost import fixture_path

store = load_usecase()
query = parse_select(fixture_path("friends.rq").read_text())
print(fixture_path("friends.rq").read_text())

# reachability: follow nothing, everything, or only triples matching the query
for strategy in ("none", "all", "match", "swsl"):
    table, stats = run_strategy(strategy, query, ["https://uma.ex/"],
                                CachingFetcher(StoreFetcher(store)))
    print(f"== {strategy}: {len(table)} rows, {stats.fetch_attempts} fetches")
    print(table.to_text())

# following everything also picks up Bob's nickname for Ann and a cartoon
# mouse Bob claims to know. Following only matching triples misses Ann's mail
# and picture, which sit on her employer's page. The guided run reads the
# specifications Uma and Ann published and fetches just four documents.
