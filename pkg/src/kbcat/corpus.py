"""Benchmark corpus loading: Reuters-21578 SGML files, 20-Newsgroups
directory trees, category subset selection, and stratified fold assignment.
"""

from __future__ import annotations

import json
import logging
import random
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

logger = logging.getLogger(__name__)


class SplitHint(Enum):
    TRAIN = "TRAIN"
    TEST = "TEST"
    UNSPLIT = "UNSPLIT"


@dataclass
class RawDocument:
    id: str
    title: str
    body: str
    labels: set[str]
    split_hint: SplitHint = SplitHint.UNSPLIT


class SubsetMode(Enum):
    TOP_TEN = "top_ten"
    AT_LEAST_ONE_TRAIN_ONE_TEST = "at_least_one_train_one_test"


@dataclass(frozen=True)
class CategorySubset:
    mode: SubsetMode
    categories: tuple[str, ...]


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    assignment: dict[str, int]

    def fold_ids(self, fold: int) -> list[str]:
        return [doc_id for doc_id, f in self.assignment.items() if f == fold]


class ReutersParseError(ValueError):
    """Malformed SGML; the message names the byte offset of the problem."""


_TAG_RE = re.compile(
    r"<(?P<close>/?)(?P<name>[A-Za-z][-A-Za-z0-9]*)"
    r"(?P<attrs>(?:\s+[A-Za-z]+\s*=\s*\"[^\"]*\")*)\s*>"
)
_DECL_RE = re.compile(r"<![^>]*>")
_ATTR_RE = re.compile(r"([A-Za-z]+)\s*=\s*\"([^\"]*)\"")
_ENTITY_RE = re.compile(r"&(#\d+|[A-Za-z][A-Za-z0-9]*);")
_CONTROL_RE = re.compile(r"[\x00-\x08\x0b\x0c\x0e-\x1f]")

_KNOWN_ENTITIES = {"lt": "<", "gt": ">", "amp": "&", "quot": '"', "apos": "'"}


def _decode_entities(text: str) -> str:
    def repl(m: re.Match) -> str:
        name = m.group(1)
        if name.startswith("#"):
            return chr(int(name[1:]))
        if name.lower() in _KNOWN_ENTITIES:
            return _KNOWN_ENTITIES[name.lower()]
        logger.warning("unknown SGML entity &%s; kept verbatim", name)
        return m.group(0)

    return _ENTITY_RE.sub(repl, text)


def _clean_text(text: str) -> str:
    return _CONTROL_RE.sub(" ", _decode_entities(text)).strip()


def load_reuters_sgml(data: bytes | str) -> list[RawDocument]:
    """Parse one Reuters-21578 Distribution 1.0 SGML file.

    Yields one document per REUTERS element. Labels come from the D
    children of TOPICS; the split hint follows the ModApte rule
    (LEWISSPLIT plus TOPICS attribute). Character entities are decoded;
    unknown ones are kept verbatim with a warning.
    """
    if isinstance(data, bytes):
        # latin-1 keeps byte offsets equal to character offsets
        text = data.decode("latin-1")
    else:
        text = data

    docs: list[RawDocument] = []
    stack: list[str] = []
    buffers: dict[str, list[str]] = {}
    doc_attrs: dict[str, str] = {}
    topics: list[str] = []

    pos = 0
    n = len(text)
    literal: list[str] = []

    def flush_literal() -> None:
        if literal and stack:
            name = stack[-1]
            if name in ("TITLE", "BODY") or (
                name == "D" and len(stack) >= 2 and stack[-2] == "TOPICS"
            ):
                buffers.setdefault(name, []).append("".join(literal))
        literal.clear()

    while pos < n:
        lt = text.find("<", pos)
        if lt < 0:
            literal.append(text[pos:])
            break
        if lt > pos:
            literal.append(text[pos:lt])

        decl = _DECL_RE.match(text, lt)
        if decl:
            pos = decl.end()
            continue
        tag = _TAG_RE.match(text, lt)
        if tag is None:
            literal.append("<")
            pos = lt + 1
            continue

        flush_literal()
        name = tag.group("name").upper()
        if tag.group("close"):
            if not stack or stack[-1] != name:
                raise ReutersParseError(
                    f"unexpected closing tag </{name}> at byte {lt}"
                    + (f" (open element: {stack[-1]})" if stack else "")
                )
            stack.pop()
            if name == "D" and stack and stack[-1] == "TOPICS":
                label = _clean_text("".join(buffers.pop("D", [])))
                if label:
                    topics.append(label)
            elif name == "REUTERS":
                docs.append(_finish_reuters_doc(doc_attrs, buffers, topics))
                buffers = {}
                doc_attrs = {}
                topics = []
        else:
            stack.append(name)
            if name == "REUTERS":
                doc_attrs = dict(
                    (k.upper(), v) for k, v in _ATTR_RE.findall(tag.group("attrs"))
                )
        pos = tag.end()

    if stack:
        raise ReutersParseError(
            f"unclosed element <{stack[-1]}> at byte {n} (end of input)"
        )
    return docs


def _finish_reuters_doc(
    attrs: dict[str, str], buffers: dict[str, list[str]], topics: list[str]
) -> RawDocument:
    lewis = attrs.get("LEWISSPLIT", "").upper()
    has_topics = attrs.get("TOPICS", "").upper() == "YES"
    if lewis == "TRAIN" and has_topics:
        hint = SplitHint.TRAIN
    elif lewis == "TEST" and has_topics:
        hint = SplitHint.TEST
    else:
        hint = SplitHint.UNSPLIT
    return RawDocument(
        id=attrs.get("NEWID") or attrs.get("OLDID") or "",
        title=_clean_text("".join(buffers.get("TITLE", []))),
        body=_clean_text("".join(buffers.get("BODY", []))),
        labels=set(topics),
        split_hint=hint,
    )


def load_reuters_dir(path: str | Path) -> list[RawDocument]:
    """Load every reut2-*.sgm file under ``path`` in name order."""
    docs: list[RawDocument] = []
    files = sorted(Path(path).glob("reut2-*.sgm"))
    if not files:
        raise FileNotFoundError(f"no reut2-*.sgm files under {path}")
    for f in files:
        docs.extend(load_reuters_sgml(f.read_bytes()))
    logger.info("loaded %d documents from %d SGML files", len(docs), len(files))
    return docs


def load_20newsgroups(root: str | Path) -> list[RawDocument]:
    """Load a two-level category/file tree.

    The label is the directory name, the id is ``category/filename``, and
    header lines up to the first blank line are stripped from the body.
    Unreadable files are skipped with a warning.
    """
    root = Path(root)
    docs: list[RawDocument] = []
    skipped = 0
    for category_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        category = category_dir.name
        count = 0
        for doc_path in sorted(p for p in category_dir.iterdir() if p.is_file()):
            try:
                raw = doc_path.read_bytes().decode("latin-1")
            except OSError as exc:
                logger.warning("skipping unreadable file %s: %s", doc_path, exc)
                skipped += 1
                continue
            head, sep, tail = raw.partition("\n\n")
            body = tail.strip() if sep else raw.strip()
            docs.append(
                RawDocument(
                    id=f"{category}/{doc_path.name}",
                    title="",
                    body=body,
                    labels={category},
                )
            )
            count += 1
        logger.info("category %s: %d documents", category, count)
    if skipped:
        logger.warning("skipped %d unreadable files", skipped)
    return docs


def select_category_subset(
    docs: list[RawDocument], mode: SubsetMode
) -> CategorySubset:
    """Pick the evaluated category set from split-hinted documents."""
    train_counts: dict[str, int] = {}
    test_counts: dict[str, int] = {}
    all_categories: set[str] = set()
    for doc in docs:
        for label in doc.labels:
            all_categories.add(label)
            if doc.split_hint is SplitHint.TRAIN:
                train_counts[label] = train_counts.get(label, 0) + 1
            elif doc.split_hint is SplitHint.TEST:
                test_counts[label] = test_counts.get(label, 0) + 1

    if mode is SubsetMode.TOP_TEN:
        if len(all_categories) < 10:
            raise ValueError(
                f"top-ten subset needs >= 10 categories, corpus has {len(all_categories)}"
            )
        ranked = sorted(all_categories, key=lambda c: (-train_counts.get(c, 0), c))
        return CategorySubset(mode, tuple(ranked[:10]))

    kept = sorted(
        c for c in all_categories if train_counts.get(c, 0) >= 1 and test_counts.get(c, 0) >= 1
    )
    return CategorySubset(mode, tuple(kept))


def make_folds(docs: list[RawDocument], k: int, seed: int) -> FoldAssignment:
    """Stratified k-fold assignment, deterministic for a fixed seed.

    Documents are stratified by their lexicographically smallest label and
    dealt round-robin within each stratum after a seeded shuffle, so fold
    sizes within a stratum differ by at most one.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    strata: dict[str, list[str]] = {}
    for doc in docs:
        if not doc.labels:
            raise ValueError(f"document {doc.id} has no labels")
        strata.setdefault(min(doc.labels), []).append(doc.id)

    rng = random.Random(seed)
    assignment: dict[str, int] = {}
    for label in sorted(strata):
        ids = strata[label]
        if k > len(ids):
            logger.warning(
                "stratum %r has %d documents for %d folds; spreading as evenly as possible",
                label, len(ids), k,
            )
        rng.shuffle(ids)
        for i, doc_id in enumerate(ids):
            assignment[doc_id] = i % k
    return FoldAssignment(k=k, assignment=assignment)


def dump_documents_jsonl(docs: list[RawDocument], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps({
                "id": doc.id,
                "title": doc.title,
                "body": doc.body,
                "labels": sorted(doc.labels),
                "split_hint": doc.split_hint.value,
            }, ensure_ascii=False) + "\n")


def load_documents_jsonl(path: str | Path) -> list[RawDocument]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            docs.append(RawDocument(
                id=rec["id"],
                title=rec["title"],
                body=rec["body"],
                labels=set(rec["labels"]),
                split_hint=SplitHint(rec["split_hint"]),
            ))
    return docs
