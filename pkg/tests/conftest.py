"""Shared test machinery: builders, independent oracles, and the socket guard."""

from __future__ import annotations

import json
import math
import random
import socket

import pytest

from themecanvas.errors import EngineError
from themecanvas.graph import Workspace
from themecanvas.provider import ProviderClient, ProviderConfig


def fixed_clock():
    return 0.0


@pytest.fixture
def workspace() -> Workspace:
    return Workspace("w1", clock=fixed_clock)


@pytest.fixture
def provider() -> ProviderClient:
    return ProviderClient(ProviderConfig(mode="mock"))


def make_provider() -> ProviderClient:
    return ProviderClient(ProviderConfig(mode="mock"))


@pytest.fixture
def no_network(monkeypatch):
    """Fail the test on any attempt to open a network connection."""

    def forbidden(*args, **kwargs):
        raise AssertionError("network activity detected during offline test")

    monkeypatch.setattr(socket, "create_connection", forbidden)
    monkeypatch.setattr(socket.socket, "connect", forbidden)
    monkeypatch.setattr(socket.socket, "connect_ex", forbidden)


# ---------------------------------------------------------------------------
# Random content generators
# ---------------------------------------------------------------------------

WORD_POOL = [
    "query", "latency", "index", "build", "memory", "recall", "storage",
    "replica", "shard", "cache", "merge", "segment", "vector", "batch",
    "tail", "spike", "budget", "scan", "compact", "append",
]


def random_text(rng: random.Random, max_words: int = 12) -> str:
    count = rng.randint(1, max_words)
    return " ".join(rng.choice(WORD_POOL) for _ in range(count))


def distinct_char_page(rng: random.Random, length: int) -> str:
    """Page text whose characters are pairwise distinct, so any shifted window
    differs from the original."""
    base = rng.randrange(0x4E00, 0x9000 - length)
    offsets = list(range(length))
    rng.shuffle(offsets)
    return "".join(chr(base + off) for off in offsets)


def random_document_payload(rng: random.Random, pages: int | None = None) -> dict:
    page_count = pages or rng.randint(1, 3)
    return {
        "schema": "corpus/1",
        "title": f"doc-{rng.randrange(10**6)}",
        "pages": [
            {"page_no": i + 1, "text": distinct_char_page(rng, rng.randint(20, 120))}
            for i in range(page_count)
        ],
    }


# ---------------------------------------------------------------------------
# Random op driver (graph + corpus + suggestions under a scripted mock)
# ---------------------------------------------------------------------------


def scripted_provider(rng: random.Random, calls: int = 400) -> ProviderClient:
    """Mock with generous template-keyed scripts of always-valid shapes."""
    client = make_provider()
    client.register_mock_script(
        "placement/1",
        [
            json.dumps(
                {
                    "kind": "new_theme",
                    "name": f"Theme {rng.randrange(10**6)}",
                    "rationale": "groups similar wording",
                }
            )
            for _ in range(calls)
        ],
    )
    client.register_mock_script(
        "name/1",
        [
            json.dumps({"name": f"Name {rng.randrange(10**6)}", "rationale": "wording"})
            for _ in range(calls)
        ],
    )
    client.register_mock_script(
        "summarize/1",
        [
            json.dumps(
                {
                    "medium": random_text(rng, 8) or "m",
                    "short": random_text(rng, 4) or "s",
                    "tiny": rng.choice(WORD_POOL),
                }
            )
            for _ in range(calls)
        ],
    )
    return client


def apply_random_ops(
    workspace: Workspace,
    rng: random.Random,
    steps: int,
    provider: ProviderClient | None = None,
) -> int:
    """Drive a workspace through random operations; returns ops that applied.

    Precondition violations are expected and swallowed; they must leave the
    workspace untouched (covered by the atomicity tests).
    """
    from themecanvas import suggest, summarize

    applied = 0
    for _ in range(steps):
        revision_before = workspace.revision
        themes = [n.node_id for n in workspace.themes()]
        evidence = [n.node_id for n in workspace.evidence_nodes()]
        node_ids = sorted(workspace.nodes)
        pending = [
            s.suggestion_id
            for s in workspace.suggestions.values()
            if s.status == "pending"
        ]
        choices = ["create_theme", "create_evidence", "ingest"]
        if themes and evidence:
            choices += ["connect_membership"] * 2
        if len(themes) >= 2:
            choices += ["connect_hierarchy", "merge"]
        if node_ids:
            choices += ["move", "edit_text", "delete"]
        if evidence and provider is not None:
            choices.append("suggest_placement")
            choices.append("summarize")
        if themes and evidence and provider is not None:
            choices.append("suggest_name")
        if pending:
            choices += ["resolve", "preview"]
        op = rng.choice(choices)
        try:
            if op == "create_theme":
                workspace.create_node(
                    {
                        "kind": "theme",
                        "name": random_text(rng, 3),
                        "position": (rng.uniform(-500, 500), rng.uniform(-500, 500)),
                    }
                )
            elif op == "create_evidence":
                workspace.create_node(
                    {
                        "kind": "evidence",
                        "text": random_text(rng),
                        "position": (rng.uniform(-500, 500), rng.uniform(-500, 500)),
                    }
                )
            elif op == "ingest":
                workspace.ingest_document(random_document_payload(rng))
            elif op == "connect_membership":
                workspace.connect(rng.choice(themes), rng.choice(evidence), "membership")
            elif op == "connect_hierarchy":
                workspace.connect(rng.choice(themes), rng.choice(themes), "hierarchy")
            elif op == "merge":
                workspace.merge_themes(rng.choice(themes), rng.choice(themes))
            elif op == "move":
                workspace.update_node(
                    rng.choice(node_ids),
                    {"position": (rng.uniform(-500, 500), rng.uniform(-500, 500))},
                )
            elif op == "edit_text":
                node_id = rng.choice(node_ids)
                patch = (
                    {"text": random_text(rng)}
                    if workspace.nodes[node_id].kind == "evidence"
                    else {"name": random_text(rng, 3)}
                )
                workspace.update_node(node_id, patch)
            elif op == "delete":
                workspace.delete_node(rng.choice(node_ids))
            elif op == "suggest_placement":
                suggest.suggest_placement(workspace, rng.choice(evidence), provider)
            elif op == "suggest_name":
                suggest.suggest_theme_name(workspace, rng.choice(themes), provider)
            elif op == "summarize":
                summarize.summarize_node(workspace, rng.choice(evidence), provider)
            elif op == "preview":
                suggest.preview_suggestion(workspace, rng.choice(pending))
            elif op == "resolve":
                suggest.resolve_suggestion(
                    workspace,
                    rng.choice(pending),
                    rng.choice(["accept", "reject", "reject"]),
                )
        except EngineError:
            pass
        applied += workspace.revision - revision_before
    return applied


def assert_forest(workspace: Workspace) -> None:
    """Hierarchy must stay a forest: single parents, DFS terminates."""
    parents: dict[str, str] = {}
    for edge in workspace.edges.values():
        if edge.kind == "hierarchy":
            assert edge.to_id not in parents, f"{edge.to_id} has two parents"
            parents[edge.to_id] = edge.from_id
    for start in parents:
        seen = set()
        current: str | None = start
        while current is not None:
            assert current not in seen, f"cycle through {start}"
            seen.add(current)
            current = parents.get(current)


# ---------------------------------------------------------------------------
# Independent TF-IDF oracle (dense vectors, explicit loops)
# ---------------------------------------------------------------------------


def oracle_tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    current: list[str] = []
    for ch in text:
        if ch.isalnum() and ch != "_":
            current.append(ch.lower())
        elif current:
            tokens.append("".join(current))
            current = []
    if current:
        tokens.append("".join(current))
    return tokens


def oracle_rank(workspace: Workspace, query_text: str) -> list[tuple[str, float]]:
    """Brute-force TF-IDF cosine ranking over ASCII corpora."""
    themes = sorted(
        (n for n in workspace.nodes.values() if n.kind == "theme"),
        key=lambda t: (t.created_at, t.node_id),
    )
    docs = []
    for theme in themes:
        member_edges = sorted(
            (
                e
                for e in workspace.edges.values()
                if e.kind == "membership" and e.from_id == theme.node_id
            ),
            key=lambda e: (e.created_at, e.to_id),
        )
        text = "\n".join([theme.name] + [workspace.nodes[e.to_id].text for e in member_edges])
        docs.append(oracle_tokenize(text))

    vocabulary = sorted({t for doc in docs for t in doc})
    n_docs = len(docs)
    idf = []
    for term in vocabulary:
        df = sum(1 for doc in docs if term in doc)
        idf.append(math.log((n_docs + 1) / (df + 1)) + 1.0)

    def vectorize(tokens: list[str]) -> list[float]:
        vector = []
        for term, weight in zip(vocabulary, idf):
            tf = sum(1 for t in tokens if t == term)
            vector.append(tf * weight)
        norm = math.sqrt(sum(v * v for v in vector))
        if norm == 0:
            return [0.0] * len(vector)
        return [v / norm for v in vector]

    query_vector = vectorize(oracle_tokenize(query_text))
    scores = []
    for theme, doc in zip(themes, docs):
        doc_vector = vectorize(doc)
        score = sum(q * d for q, d in zip(query_vector, doc_vector))
        scores.append((theme.node_id, min(1.0, max(0.0, score))))
    scores.sort(key=lambda pair: (-pair[1], pair[0]))
    return scores
