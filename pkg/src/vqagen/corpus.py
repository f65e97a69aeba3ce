"""Image+text corpus: ingestion, text attachment, label canonicalization.

The store keeps only URIs, never pixel data; judges that need the image
receive the URI.
"""
from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyCorpusError

CAPTION = "caption"
CONVERSATION = "conversation"


@dataclass
class ImageRecord:
    image_id: str
    uri: str
    captions: list[str] = field(default_factory=list)
    conversations: list[tuple[str, str]] = field(default_factory=list)
    scene_type: str | None = None
    primary_objects: list[str] = field(default_factory=list)
    has_ocr_text: bool = False


@dataclass
class CorpusStore:
    records: dict[str, ImageRecord] = field(default_factory=dict)
    provenance: dict[str, list[str]] = field(default_factory=dict)
    duplicate_count: int = 0
    rejected_count: int = 0
    orphan_count: int = 0

    def __len__(self) -> int:
        return len(self.records)

    def tag(self, image_id: str, source: str) -> None:
        self.provenance.setdefault(image_id, []).append(source)


def ingest_images(manifest: list[tuple[str, str]], source: str = "images") -> CorpusStore:
    """Build a store from (image_id, uri) pairs.

    Duplicate ids collapse to the first occurrence and are counted;
    entries with an empty id or uri are rejected per-entry, not fatally.
    """
    if not manifest:
        raise EmptyCorpusError("manifest is empty")
    store = CorpusStore()
    for entry in manifest:
        try:
            image_id, uri = entry
        except (TypeError, ValueError):
            store.rejected_count += 1
            continue
        if not image_id or not uri:
            store.rejected_count += 1
            continue
        if image_id in store.records:
            store.duplicate_count += 1
            continue
        store.records[image_id] = ImageRecord(image_id=image_id, uri=uri)
        store.tag(image_id, source)
    if not store.records:
        raise EmptyCorpusError("manifest contained no valid entries")
    return store


def attach_text(store: CorpusStore, texts: list[tuple], source: str = "texts") -> CorpusStore:
    """Append captions/conversations to matching records.

    Payloads for unknown image_ids are dropped and counted as orphans.
    This is the cross-source overlap step: a text attaches only when its
    image_id exists in the image store.
    """
    for image_id, kind, payload in texts:
        record = store.records.get(image_id)
        if record is None:
            store.orphan_count += 1
            continue
        if kind == CAPTION:
            record.captions.append(str(payload))
        elif kind == CONVERSATION:
            q, a = payload["question"], payload["answer"]
            record.conversations.append((q, a))
        else:
            store.orphan_count += 1
            continue
        store.tag(image_id, source)
    return store


def normalize_label(label: str) -> str:
    """Case-fold and collapse whitespace; Vietnamese diacritics are kept."""
    folded = unicodedata.normalize("NFC", label).casefold()
    return " ".join(folded.split())


class Canonicalizer:
    """Maps label aliases to canonical forms, recording unseen candidates."""

    def __init__(self, dictionary: dict[str, list[str]]):
        self._alias_to_canonical: dict[str, str] = {}
        for canonical, aliases in dictionary.items():
            self._alias_to_canonical[normalize_label(canonical)] = canonical
            for alias in aliases:
                self._alias_to_canonical[normalize_label(alias)] = canonical
        self.candidates: list[str] = []

    def canonicalize(self, label: str) -> str:
        normalized = normalize_label(label)
        canonical = self._alias_to_canonical.get(normalized)
        if canonical is not None:
            return canonical
        if normalized not in self.candidates:
            self.candidates.append(normalized)
        return normalized


def canonicalize(label: str, dictionary: dict[str, list[str]]) -> str:
    """One-shot alias lookup; unseen labels pass through normalized."""
    return Canonicalizer(dictionary).canonicalize(label)


def canonicalize_store(store: CorpusStore, canon: Canonicalizer) -> CorpusStore:
    """Canonicalize scene types and primary object labels in place."""
    for record in store.records.values():
        if record.scene_type is not None:
            record.scene_type = canon.canonicalize(record.scene_type)
        record.primary_objects = [canon.canonicalize(x) for x in record.primary_objects]
    return store


# JSONL file interfaces

def load_manifest(path: str | Path) -> list[tuple[str, str]]:
    """Manifest file: one JSON object per line with image_id and uri."""
    entries = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            entries.append((obj.get("image_id", ""), obj.get("uri", "")))
    return entries


def load_texts(path: str | Path) -> list[tuple]:
    """Text file: JSON lines with image_id, kind, payload."""
    texts = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            texts.append((obj["image_id"], obj["kind"], obj["payload"]))
    return texts


def load_canon_dict(path: str | Path) -> dict[str, list[str]]:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def save_store(store: CorpusStore, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for image_id in sorted(store.records):
            r = store.records[image_id]
            obj = {
                "image_id": r.image_id,
                "uri": r.uri,
                "captions": r.captions,
                "conversations": [{"question": q, "answer": a} for q, a in r.conversations],
                "scene_type": r.scene_type,
                "primary_objects": r.primary_objects,
                "has_ocr_text": r.has_ocr_text,
                "provenance": store.provenance.get(image_id, []),
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def load_store(path: str | Path) -> CorpusStore:
    store = CorpusStore()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            record = ImageRecord(
                image_id=obj["image_id"],
                uri=obj["uri"],
                captions=list(obj.get("captions", [])),
                conversations=[(c["question"], c["answer"]) for c in obj.get("conversations", [])],
                scene_type=obj.get("scene_type"),
                primary_objects=list(obj.get("primary_objects", [])),
                has_ocr_text=bool(obj.get("has_ocr_text", False)),
            )
            store.records[record.image_id] = record
            store.provenance[record.image_id] = list(obj.get("provenance", []))
    return store
