"""
Space-Saving: bounded memory, bounded error
===========================================

A summary with ``capacity`` counters tracks heavy items in a stream of
any length. Each monitored item carries ``count`` and ``error`` with
``count - error <= true <= count``.
"""

from collections import Counter

import numpy as np

from kilograms import SpaceSaving, merge

rng = np.random.default_rng(0)
stream = (rng.zipf(1.6, 200_000) % 5000).tolist()
truth = Counter(stream)

s = SpaceSaving(capacity=200)
for x in stream:
    s.offer(x)

print(f"{len(truth)} distinct items, {s.inserted_total} offers, {s.evictions} evictions")
print(" item   count  error   true")
for e in s.entries()[:8]:
    print(f"{e.ngram:5d} {e.count:7d} {e.error:6d} {truth[e.ngram]:6d}")

ok = all(e.count - e.error <= truth[e.ngram] <= e.count for e in s.entries())
print("every entry brackets its true count:", ok)

# two halves summarised separately, then merged
a, b = SpaceSaving(200), SpaceSaving(200)
for x in stream[:100_000]:
    a.offer(x)
for x in stream[100_000:]:
    b.offer(x)
m = merge(a, b)
print("merged top-5:", [(e.ngram, e.count) for e in m.entries()[:5]])
print("single-pass top-5:", [(e.ngram, e.count) for e in s.entries()[:5]])
