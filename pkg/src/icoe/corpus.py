"""Corpus and annotation interchange formats: JSONL loading, validation, export."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

from . import textproc

ENTITY_KINDS = ("I", "C", "O", "EDesc")


class CorpusError(ValueError):
    """Raised for malformed corpus or annotation files."""


@dataclass
class AbstractRecord:
    """One trial report: opaque id (e.g. a PMID), title, abstract body."""

    id: str
    title: str
    body: str


@dataclass
class AnnotatedSpan:
    """Raw-text character span of one entity kind inside a record body."""

    kind: str
    start: int
    end: int


@dataclass
class AnnotatedDocument:
    record: AbstractRecord
    spans: list[AnnotatedSpan] = field(default_factory=list)
    design_sentence_index: int | None = None


def load_corpus(path: str) -> list[AbstractRecord]:
    """Load a JSONL corpus; one object per line with exactly id/title/body."""
    records: list[AbstractRecord] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict) or set(obj) != {"id", "title", "body"}:
                raise CorpusError(
                    f"{path}: line {lineno}: expected exactly the fields id, title, body"
                )
            rec_id, title, body = obj["id"], obj["title"], obj["body"]
            if not isinstance(rec_id, str) or not rec_id:
                raise CorpusError(f"{path}: line {lineno}: id must be a non-empty string")
            if not isinstance(title, str) or not isinstance(body, str) or not body:
                raise CorpusError(f"{path}: line {lineno}: title/body must be strings, body non-empty")
            if rec_id in seen:
                raise CorpusError(f"{path}: line {lineno}: duplicate id {rec_id!r}")
            seen.add(rec_id)
            records.append(AbstractRecord(id=rec_id, title=title, body=body))
    return records


def write_corpus(records: Iterable[AbstractRecord], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps({"id": rec.id, "title": rec.title, "body": rec.body}, ensure_ascii=False))
            fh.write("\n")


def validate_annotations(doc: AnnotatedDocument) -> list[str]:
    """Check all annotation invariants; returns one finding per violation."""
    findings: list[str] = []
    body = doc.record.body
    for sp in doc.spans:
        where = f"{sp.kind} span [{sp.start}, {sp.end})"
        if sp.kind not in ENTITY_KINDS:
            findings.append(f"unknown entity kind: {where}")
            continue
        if not (0 <= sp.start < sp.end <= len(body)):
            findings.append(f"span out of bounds: {where} in body of length {len(body)}")
            continue
        if not body[sp.start : sp.end].strip():
            findings.append(f"whitespace-only span: {where}")
    by_kind: dict[str, list[AnnotatedSpan]] = {}
    for sp in doc.spans:
        if sp.kind in ENTITY_KINDS and 0 <= sp.start < sp.end <= len(body):
            by_kind.setdefault(sp.kind, []).append(sp)
    for kind, spans in sorted(by_kind.items()):
        spans = sorted(spans, key=lambda s: (s.start, s.end))
        for a, b in zip(spans, spans[1:]):
            if b.start < a.end:
                findings.append(
                    f"overlapping {kind} spans: [{a.start}, {a.end}) and [{b.start}, {b.end})"
                )
    if doc.design_sentence_index is not None:
        sentences = textproc.split_sentences(textproc.normalize(body))
        if not 0 <= doc.design_sentence_index < len(sentences):
            findings.append(
                f"design sentence index out of range: {doc.design_sentence_index} "
                f"(document has {len(sentences)} sentences)"
            )
    return findings


def load_annotations(path: str, records: Iterable[AbstractRecord]) -> list[AnnotatedDocument]:
    """Load JSONL annotations and validate every span against its record body."""
    by_id = {rec.id: rec for rec in records}
    docs: list[AnnotatedDocument] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from exc
            rec_id = obj.get("id")
            if rec_id not in by_id:
                raise CorpusError(f"{path}: line {lineno}: unknown record id {rec_id!r}")
            spans = [
                AnnotatedSpan(kind=s["kind"], start=int(s["start"]), end=int(s["end"]))
                for s in obj.get("spans", [])
            ]
            doc = AnnotatedDocument(
                record=by_id[rec_id],
                spans=spans,
                design_sentence_index=obj.get("design_sentence_index"),
            )
            findings = validate_annotations(doc)
            if findings:
                raise CorpusError(f"{path}: line {lineno}: id {rec_id!r}: " + "; ".join(findings))
            docs.append(doc)
    return docs


def write_annotations(docs: Iterable[AnnotatedDocument], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            obj = {
                "id": doc.record.id,
                "spans": [{"kind": s.kind, "start": s.start, "end": s.end} for s in doc.spans],
                "design_sentence_index": doc.design_sentence_index,
            }
            fh.write(json.dumps(obj, ensure_ascii=False))
            fh.write("\n")
