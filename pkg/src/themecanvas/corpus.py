"""Document ingestion and verbatim text anchoring.

Documents enter the engine as pre-extracted page texts (the ``corpus/1`` JSON
payload), are NFC-normalized once, and are immutable afterwards. An
:class:`Anchor` pins a quote to ``(doc_id, page_no, char range)`` and can be
re-verified against the store at any time, so every excerpt on the canvas
stays traceable to its source. Offsets count Unicode code points of the
normalized page text.

Document identity is content-addressed: the checksum hashes the page texts
joined by a form-feed separator (so identical characters with different page
breaks stay distinct), and re-ingesting an identical payload returns the
existing ``doc_id``. Titles and geometry do not participate in identity.
"""

from __future__ import annotations

import hashlib
import unicodedata
from dataclasses import dataclass
from typing import Any, Iterable

from .errors import EngineError

PAYLOAD_SCHEMA = "corpus/1"

VALID = "valid"
MISMATCH = "mismatch"
UNKNOWN_DOCUMENT = "unknown_document"

_PAGE_SEPARATOR = "\x0c"


@dataclass(frozen=True)
class GeometryBlock:
    """A highlightable page region: character range plus fractional bbox."""

    char_start: int
    char_end: int
    bbox: tuple[float, float, float, float]

    def to_json(self) -> list[Any]:
        return [self.char_start, self.char_end, list(self.bbox)]

    @classmethod
    def from_json(cls, data: Iterable[Any]) -> "GeometryBlock":
        start, end, bbox = data
        return cls(int(start), int(end), tuple(float(v) for v in bbox))


@dataclass(frozen=True)
class PageBlock:
    page_no: int
    text: str
    blocks: tuple[GeometryBlock, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {"page_no": self.page_no, "text": self.text}
        if self.blocks:
            data["blocks"] = [b.to_json() for b in self.blocks]
        return data


@dataclass(frozen=True)
class SourceDocument:
    doc_id: str
    title: str
    pages: tuple[PageBlock, ...]
    checksum: str

    def page(self, page_no: int) -> PageBlock | None:
        if 1 <= page_no <= len(self.pages):
            return self.pages[page_no - 1]
        return None

    def to_dict(self) -> dict[str, Any]:
        return {
            "doc_id": self.doc_id,
            "title": self.title,
            "checksum": self.checksum,
            "pages": [p.to_dict() for p in self.pages],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SourceDocument":
        pages = tuple(
            PageBlock(
                page_no=int(p["page_no"]),
                text=p["text"],
                blocks=tuple(GeometryBlock.from_json(b) for b in p.get("blocks", [])),
            )
            for p in data["pages"]
        )
        return cls(
            doc_id=data["doc_id"],
            title=data["title"],
            pages=pages,
            checksum=data["checksum"],
        )


@dataclass(frozen=True)
class Anchor:
    """Verifiable pointer from canvas evidence back to its source text."""

    doc_id: str
    page_no: int
    char_start: int
    char_end: int
    quote: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "doc_id": self.doc_id,
            "page_no": self.page_no,
            "char_start": self.char_start,
            "char_end": self.char_end,
            "quote": self.quote,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Anchor":
        return cls(
            doc_id=data["doc_id"],
            page_no=int(data["page_no"]),
            char_start=int(data["char_start"]),
            char_end=int(data["char_end"]),
            quote=data["quote"],
        )


def checksum_pages(page_texts: Iterable[str]) -> str:
    joined = _PAGE_SEPARATOR.join(page_texts)
    return hashlib.sha256(joined.encode("utf-8")).hexdigest()


def doc_id_for_checksum(checksum: str) -> str:
    return "d" + checksum[:12]


def build_document(payload: dict[str, Any]) -> SourceDocument:
    """Validate and normalize a ``corpus/1`` payload into a SourceDocument.

    Pure: does not touch any store. Pages may be given as plain strings or as
    ``{page_no, text, blocks?}`` objects; page numbers must run 1..P.
    """
    if not isinstance(payload, dict):
        raise EngineError("validation_error", "ingestion payload must be an object")
    schema = payload.get("schema")
    if schema is not None and schema != PAYLOAD_SCHEMA:
        raise EngineError(
            "unknown_schema_version", f"expected {PAYLOAD_SCHEMA!r}, got {schema!r}"
        )
    title = payload.get("title", "")
    if not isinstance(title, str):
        raise EngineError("validation_error", "title must be a string")
    raw_pages = payload.get("pages")
    if not isinstance(raw_pages, list) or not raw_pages:
        raise EngineError("empty_document", "payload must contain at least one page")

    pages: list[PageBlock] = []
    for index, entry in enumerate(raw_pages, start=1):
        if isinstance(entry, str):
            page_no, text, raw_blocks = index, entry, []
        elif isinstance(entry, dict):
            page_no = int(entry.get("page_no", index))
            text = entry.get("text")
            raw_blocks = entry.get("blocks") or []
        else:
            raise EngineError("validation_error", f"page {index} must be text or object")
        if page_no != index:
            raise EngineError(
                "validation_error",
                f"pages must be numbered 1..P contiguously (page {index} says {page_no})",
            )
        if not isinstance(text, str):
            raise EngineError("validation_error", f"page {index} has no text")
        text = unicodedata.normalize("NFC", text)
        blocks = []
        for raw in raw_blocks:
            try:
                block = GeometryBlock.from_json(raw)
            except (TypeError, ValueError, IndexError):
                raise EngineError("malformed_geometry", f"bad geometry block on page {index}")
            if not (0 <= block.char_start < block.char_end <= len(text)):
                raise EngineError(
                    "malformed_geometry",
                    f"block offsets out of range on page {index}",
                )
            if any(not (0.0 <= v <= 1.0) for v in block.bbox):
                raise EngineError(
                    "malformed_geometry", f"bbox fractions outside [0,1] on page {index}"
                )
            blocks.append(block)
        pages.append(PageBlock(page_no=page_no, text=text, blocks=tuple(blocks)))

    if not any(p.text.strip() for p in pages):
        raise EngineError("empty_document", "document has no non-whitespace text")

    checksum = checksum_pages(p.text for p in pages)
    return SourceDocument(
        doc_id=doc_id_for_checksum(checksum),
        title=title,
        pages=tuple(pages),
        checksum=checksum,
    )


class CorpusStore:
    """Immutable store of ingested documents, keyed by content checksum."""

    def __init__(self) -> None:
        self._docs: dict[str, SourceDocument] = {}
        self._by_checksum: dict[str, str] = {}

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._docs

    def __len__(self) -> int:
        return len(self._docs)

    def doc_ids(self) -> list[str]:
        return sorted(self._docs)

    def get(self, doc_id: str) -> SourceDocument:
        doc = self._docs.get(doc_id)
        if doc is None:
            raise EngineError("unknown_document", f"no document {doc_id!r}")
        return doc

    def find_by_checksum(self, checksum: str) -> str | None:
        return self._by_checksum.get(checksum)

    def add(self, doc: SourceDocument) -> None:
        self._docs[doc.doc_id] = doc
        self._by_checksum[doc.checksum] = doc.doc_id

    def remove(self, doc_id: str) -> None:
        doc = self._docs.pop(doc_id)
        self._by_checksum.pop(doc.checksum, None)

    def ingest_document(self, payload: dict[str, Any]) -> str:
        """Store a document; idempotent on identical page text."""
        doc = build_document(payload)
        existing = self._by_checksum.get(doc.checksum)
        if existing is not None:
            return existing
        self.add(doc)
        return doc.doc_id

    def extract_snippet(
        self, doc_id: str, page_no: int, char_start: int, char_end: int
    ) -> Anchor:
        """Mint an anchor for a character range; read-only."""
        doc = self.get(doc_id)
        page = doc.page(page_no)
        if page is None:
            raise EngineError("range_out_of_bounds", f"document has no page {page_no}")
        if not (0 <= char_start < char_end <= len(page.text)):
            raise EngineError(
                "range_out_of_bounds",
                f"range [{char_start},{char_end}) invalid for page of length {len(page.text)}",
            )
        return Anchor(
            doc_id=doc_id,
            page_no=page_no,
            char_start=char_start,
            char_end=char_end,
            quote=page.text[char_start:char_end],
        )

    def verify_anchor(self, anchor: Anchor) -> str:
        """Check the quote invariant; returns a verdict, never raises."""
        doc = self._docs.get(anchor.doc_id)
        if doc is None:
            return UNKNOWN_DOCUMENT
        page = doc.page(anchor.page_no)
        if page is None:
            return MISMATCH
        if not (0 <= anchor.char_start < anchor.char_end <= len(page.text)):
            return MISMATCH
        if page.text[anchor.char_start : anchor.char_end] != anchor.quote:
            return MISMATCH
        return VALID
