"""Domain-knowledge vector index: chunking, embedding, persistence, exact search.

The corpus is a directory of ``.txt``/``.md`` documents (optionally with
``<name>.meta.json`` sidecars carrying title/citation). Documents are split
into chunks of at most 512 tokens with a 20-token overlap, embedded, and
searched by exact cosine similarity — a linear scan is cheap at the tens-of-
documents scale this targets and keeps retrieval exactly testable.

Tokens are whitespace-delimited words, which keeps the chunker independent of
any particular embedding model's tokenizer.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_CHUNK_SIZE = 512
DEFAULT_OVERLAP = 20
DEFAULT_TOP_K = 15


class EmptyDocument(Exception):
    """Raised when a document tokenizes to zero tokens."""


class DimensionMismatch(Exception):
    """Raised when a vector's dimension differs from the index's."""


class EmbeddingFailure(Exception):
    def __init__(self, doc_id: str, chunk_index: int, cause: Exception):
        super().__init__(f"embedding failed for {doc_id}#{chunk_index}: {cause}")
        self.doc_id = doc_id
        self.chunk_index = chunk_index
        self.cause = cause


@dataclass(frozen=True)
class KnowledgeDocument:
    doc_id: str
    title: str
    source_path: str
    citation: str


@dataclass(frozen=True)
class KnowledgeChunk:
    doc_id: str
    chunk_index: int
    text: str
    token_count: int


@dataclass(frozen=True)
class EmbeddedChunk:
    chunk: KnowledgeChunk
    vector: tuple[float, ...]
    norm: float
    citation: str = ""

    @property
    def key(self) -> str:
        return f"{self.chunk.doc_id}#{self.chunk.chunk_index}"


@dataclass(frozen=True)
class RetrievedSource:
    embedded: EmbeddedChunk
    score: float


def chunk_document(
    doc_id: str,
    text: str,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    overlap: int = DEFAULT_OVERLAP,
) -> list[KnowledgeChunk]:
    """Split a document into overlapping token windows.

    Window k starts at token k*(chunk_size - overlap); the final window ends
    at the last token, so concatenating chunks with the overlap removed
    reconstructs the token stream.
    """
    if not (chunk_size > overlap >= 0):
        raise ValueError(f"need chunk_size > overlap >= 0, got {chunk_size}/{overlap}")
    tokens = text.split()
    if not tokens:
        raise EmptyDocument(doc_id)
    stride = chunk_size - overlap
    chunks = []
    start = 0
    while True:
        end = min(start + chunk_size, len(tokens))
        chunks.append(
            KnowledgeChunk(
                doc_id=doc_id,
                chunk_index=len(chunks),
                text=" ".join(tokens[start:end]),
                token_count=end - start,
            )
        )
        if end == len(tokens):
            return chunks
        start += stride


class VectorIndex:
    """Immutable-after-build store of embedded chunks with exact top-k search."""

    def __init__(self):
        self.chunks: list[EmbeddedChunk] = []
        self._matrix: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.chunks)

    @property
    def dimension(self) -> int | None:
        return len(self.chunks[0].vector) if self.chunks else None

    def add(self, embedded: EmbeddedChunk) -> None:
        if self.dimension is not None and len(embedded.vector) != self.dimension:
            raise DimensionMismatch(
                f"vector dim {len(embedded.vector)} != index dim {self.dimension}"
            )
        if embedded.norm <= 0:
            raise ValueError(f"zero-norm vector for {embedded.key}")
        self.chunks.append(embedded)
        self._matrix = None

    def _unit_matrix(self) -> np.ndarray:
        # Norms are recomputed from the vectors so that search results depend
        # only on the bit-exactly persisted vector values.
        if self._matrix is None:
            m = np.array([c.vector for c in self.chunks], dtype=np.float64)
            norms = np.linalg.norm(m, axis=1)
            self._matrix = m / norms[:, np.newaxis]
        return self._matrix

    def search(
        self, query_vector: Sequence[float], k: int = DEFAULT_TOP_K
    ) -> list[RetrievedSource]:
        """Exact top-k by cosine similarity.

        Ties broken by (doc_id, chunk_index). Returns min(k, len(index))
        results sorted by descending score.
        """
        if not self.chunks:
            return []
        q = np.asarray(query_vector, dtype=np.float64)
        if q.shape != (self.dimension,):
            raise DimensionMismatch(
                f"query dim {q.shape} != index dim {self.dimension}"
            )
        qnorm = np.linalg.norm(q)
        if qnorm == 0:
            raise ValueError("query vector has zero norm")
        scores = self._unit_matrix() @ (q / qnorm)
        order = sorted(
            range(len(self.chunks)),
            key=lambda i: (
                -scores[i],
                self.chunks[i].chunk.doc_id,
                self.chunks[i].chunk.chunk_index,
            ),
        )
        return [
            RetrievedSource(embedded=self.chunks[i], score=float(scores[i]))
            for i in order[:k]
        ]

    def save(self, path: Path | str) -> None:
        """Persist as JSON Lines; float values reload bit-exactly."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w") as fh:
            for c in self.chunks:
                fh.write(
                    json.dumps(
                        {
                            "doc_id": c.chunk.doc_id,
                            "chunk_index": c.chunk.chunk_index,
                            "text": c.chunk.text,
                            "token_count": c.chunk.token_count,
                            "citation": c.citation,
                            "vector": list(c.vector),
                        }
                    )
                    + "\n"
                )

    @classmethod
    def load(cls, path: Path | str) -> "VectorIndex":
        index = cls()
        with Path(path).open() as fh:
            for line in fh:
                if not line.strip():
                    continue
                row = json.loads(line)
                vector = tuple(float(v) for v in row["vector"])
                index.add(
                    EmbeddedChunk(
                        chunk=KnowledgeChunk(
                            doc_id=row["doc_id"],
                            chunk_index=row["chunk_index"],
                            text=row["text"],
                            token_count=row["token_count"],
                        ),
                        vector=vector,
                        norm=float(np.linalg.norm(vector)),
                        citation=row.get("citation", ""),
                    )
                )
        return index


def discover_documents(corpus_dir: Path | str) -> list[KnowledgeDocument]:
    """All .txt/.md files in the corpus directory, sorted by name.

    A ``<name>.meta.json`` sidecar may supply ``title`` and ``citation``;
    both default to the file stem.
    """
    corpus_dir = Path(corpus_dir)
    docs = []
    for path in sorted(corpus_dir.iterdir()):
        if path.suffix not in (".txt", ".md") or not path.is_file():
            continue
        title = path.stem
        citation = path.stem
        meta_path = path.with_name(path.name + ".meta.json")
        alt_meta = path.with_suffix(".meta.json")
        for candidate in (meta_path, alt_meta):
            if candidate.exists():
                meta = json.loads(candidate.read_text())
                title = meta.get("title", title)
                citation = meta.get("citation", citation)
                break
        docs.append(
            KnowledgeDocument(
                doc_id=path.stem,
                title=title,
                source_path=str(path),
                citation=citation,
            )
        )
    return docs


def build_index(
    corpus_dir: Path | str,
    embed_fn: Callable[[list[str]], list[list[float]]],
    index_path: Path | str | None = None,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    overlap: int = DEFAULT_OVERLAP,
    batch_size: int = 32,
    concurrency: int = 8,
) -> VectorIndex:
    """Chunk and embed a corpus directory into a VectorIndex.

    Embedding requests fan out over up to ``concurrency`` concurrent batches.
    When ``index_path`` is given the index is persisted there and acts as a
    checkpoint: chunks already present with identical text are not re-embedded,
    and progress is flushed after every document so an embedding failure
    (raised as EmbeddingFailure) keeps completed work.
    """
    existing: dict[tuple[str, int], EmbeddedChunk] = {}
    if index_path is not None and Path(index_path).exists():
        for c in VectorIndex.load(index_path).chunks:
            existing[(c.chunk.doc_id, c.chunk.chunk_index)] = c

    index = VectorIndex()
    for doc in discover_documents(corpus_dir):
        text = Path(doc.source_path).read_text()
        try:
            chunks = chunk_document(doc.doc_id, text, chunk_size, overlap)
        except EmptyDocument:
            logger.warning("skipping empty document %s", doc.doc_id)
            continue

        pending: list[KnowledgeChunk | EmbeddedChunk] = []
        for chunk in chunks:
            cached = existing.get((chunk.doc_id, chunk.chunk_index))
            if cached is not None and cached.chunk.text == chunk.text:
                pending.append(cached)
            else:
                pending.append(chunk)

        batches = [
            [
                (i, item)
                for i, item in enumerate(pending[start : start + batch_size], start)
                if isinstance(item, KnowledgeChunk)
            ]
            for start in range(0, len(pending), batch_size)
        ]
        batches = [b for b in batches if b]
        workers = max(1, min(concurrency, len(batches)))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(
                    lambda batch: _embed_batch(embed_fn, batch), batches
                )
            )
        for batch, outcome in zip(batches, results):
            if isinstance(outcome, Exception):
                first_index, first_chunk = batch[0]
                if index_path is not None:
                    index.save(index_path)
                raise EmbeddingFailure(
                    first_chunk.doc_id, first_chunk.chunk_index, outcome
                ) from outcome
            for (i, chunk), vector in zip(batch, outcome):
                vector = tuple(float(v) for v in vector)
                pending[i] = EmbeddedChunk(
                    chunk=chunk,
                    vector=vector,
                    norm=float(np.linalg.norm(vector)),
                    citation=doc.citation,
                )

        for embedded in pending:
            assert isinstance(embedded, EmbeddedChunk)
            index.add(embedded)
        if index_path is not None:
            index.save(index_path)
    if index_path is not None:
        index.save(index_path)
    return index


def _embed_batch(embed_fn, batch):
    try:
        return embed_fn([chunk.text for _, chunk in batch])
    except Exception as exc:  # surfaced as EmbeddingFailure by the caller
        return exc
