"""
How many infrequent n-grams sneak through the whitelist
=======================================================

Pass 2 admits every window whose bucket is in the top-k. Infrequent
n-grams that share such a bucket add work but never change the answer.
Under a Zipf model their expected number is ``k L (1 - F(k)) / B``,
which for exponent ``p >= 1`` stays below ``6 L / (B pi^2)`` for any ``k``.
"""

import numpy as np

from kilograms import ExtractionConfig, ZipfModel, bound_limit, expected_collisions, run_kilograms
from kilograms.zipf import sample_zipf_stream

B = 2**31 - 19
print(f"a petabyte-scale stream, L = 1e15: limit {bound_limit(1e15, B):,.1f} windows")

print("\n     k   p=1, |A|=1e6   p=1, infinite   p=2, infinite")
for k in (1, 10, 100, 1000, 10_000):
    row = [expected_collisions(k, 1e15, B, ZipfModel(p, a))
           for p, a in ((1.0, 10**6), (1.0, None), (2.0, None))]
    print(f"{k:6d}" + "".join(f"{v:16,.1f}" for v in row))

# a small table makes collisions observable on a laptop
L, small_B, k = 10**6, 10**5, 100
limit = bound_limit(L, small_B)
surplus = []
for seed in range(10):
    corpus = sample_zipf_stream(ZipfModel(1.0), L, seed)
    surplus.append(run_kilograms(corpus, ExtractionConfig(8, k, table_size=small_B)).collision_surplus)
print(f"\nL={L:,}, B={small_B:,}: observed surplus {surplus}")
print(f"mean {np.mean(surplus):.1f}, expected {expected_collisions(k, L, small_B, ZipfModel(1.0)):.1f}, "
      f"limit {limit:.1f}")
# collisions happen per distinct n-gram, not per window, so most runs see
# far fewer than the expected volume and the occasional run sees more
