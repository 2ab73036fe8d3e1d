#!/usr/bin/env python3
"""Walkthrough: chunking a corpus, building the vector index, searching it.

Uses the offline mock embedder (deterministic bag-of-words hashing) so the
demo runs without any provider. The toy corpus lives under
tests/data/corpus/.
"""

from pathlib import Path

from iodiag import MockGateway, build_index, chunk_document

CORPUS = Path(__file__).parent.parent / "tests" / "data" / "corpus"

# Chunking: a 1004-token document becomes two windows, 0..511 and 492..1003.
tokens = " ".join(f"tok{i}" for i in range(1004))
chunks = chunk_document("example", tokens)
print("== chunking a 1004-token document ==")
for chunk in chunks:
    first, last = chunk.text.split()[0], chunk.text.split()[-1]
    print(f"chunk {chunk.chunk_index}: {chunk.token_count} tokens ({first} .. {last})")

gateway = MockGateway()
index = build_index(CORPUS, gateway.embed, index_path="demo_output/kb.index.jsonl")
print(f"\nindexed {len(index)} chunks from {CORPUS.name}/ -> demo_output/kb.index.jsonl")

query = "default stripe count of one serializes writes onto a single storage target"
vector = gateway.embed([query])[0]
print(f"\n== top 5 matches for: {query!r} ==")
for hit in index.search(vector, k=5):
    print(f"{hit.score:6.3f}  {hit.embedded.key:24s} {hit.embedded.citation}")
