"""
From n-grams to Yara rules
==========================

Labelled documents from 20 synthetic families: each family document
carries two of four family markers, and every document, benign ones
included, may carry shared noise. We pick n-grams, build a document by
n-gram matrix, and turn it into one "any of them" rule per family.
"""

import tempfile
from pathlib import Path

import numpy as np
import yara

from kilograms import ExtractionConfig, build_rule, run_kilograms, select_best_n, vectorize
from kilograms.signatures import evaluate_rule
from kilograms.synth import family_corpus

fc = family_corpus(seed=5)
benign = family_corpus(seed=6, families=0, benign=300, noise_seqs=fc.noise)
rng = np.random.default_rng(0)
order = rng.permutation(len(fc.docs))
train, test = sorted(order[:800].tolist()), sorted(order[800:].tolist())

docs = [fc.docs[i] for i in train]
labels = [fc.labels[i] for i in train]
matrices = {}
for n in (32, 64):
    top = run_kilograms(docs, ExtractionConfig(n, 3000, table_size=4_194_301)).entries
    matrices[n] = vectorize(docs, [e.ngram for e in top], mode="binary", labels=labels)
    print(f"n={n}: {matrices[n].shape[1]} features, {matrices[n].values.nnz} nonzeros")

out = Path(tempfile.mkdtemp())
held = [fc.docs[i] for i in test]
held_labels = [fc.labels[i] for i in test]
for fam in sorted(set(labels))[:5]:
    pos = np.array([lab == fam for lab in labels])
    cands = [(n, *built) for n, m in matrices.items()
             if (built := build_rule(m, pos, fam, meta={"n": str(n)})) is not None]
    n, rule, train_metrics = select_best_n(cands)
    rule.write(out / f"{fam}.yar")
    held_m = evaluate_rule(rule, held, [lab == fam for lab in held_labels])
    compiled = yara.compile(filepath=str(out / f"{fam}.yar"))
    fp = sum(bool(compiled.match(data=d)) for d in benign.docs)
    print(f"{fam}: n={n}, {len(rule.patterns)} patterns, train F1 {train_metrics.f1:.3f}, "
          f"held-out F1 {held_m.f1:.3f}, benign hits {fp}/{len(benign.docs)}")

print()
print((out / "family00.yar").read_text()[:400])
