"""
Why stride by hash, not by offset
=================================

A long sequence that recurs everywhere contributes ``len - n + 1`` equally
frequent n-grams, which crowd every other sequence out of the top-k.
Keeping only n-grams whose bucket is divisible by ``s`` thins each such
sequence out, so more distinct sequences reach the top-k. Sampling by
offset instead would miss copies that sit at a different alignment.
"""

from sympy import prevprime

from kilograms import ExtractionConfig, run_kilograms
from kilograms.oracle import exact_counts, spatial_stride_counts
from kilograms.synth import ubiquitous_corpus

n, k = 64, 50
B = prevprime(2**28)
uc = ubiquitous_corpus(seed=0, n=n)
print(f"{len(uc.families)} shared {4 * n}-byte sequences, copies {uc.copies[:5]}...")


def families(entries):
    return sorted({i for e in entries for i, s in enumerate(uc.families) if e.ngram in s})


for s in (1, n // 4):
    res = run_kilograms(uc.corpus, ExtractionConfig(n, k, table_size=B, stride=s))
    print(f"s={s:2d}: top-{k} draws on families {families(res.entries)}")

# offset sampling: only windows starting at multiples of z
cfg = ExtractionConfig(n, k, table_size=B)
strided = run_kilograms(uc.corpus, cfg).entries
spatial = spatial_stride_counts(uc.corpus, n, z=n // 4)
exact = exact_counts(uc.corpus, cfg).counts
e = strided[0]
print(f"top gram: hash stride counts {e.count} (exact {exact[e.ngram]}), "
      f"offset stride sees {spatial.get(e.ngram, 0)}")
