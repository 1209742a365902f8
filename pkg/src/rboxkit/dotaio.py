"""Readers/writers for DOTA-convention annotation and detection text files.

Annotation files (one per image): optional "key:value" metadata lines,
then one object per line:

    x1 y1 x2 y2 x3 y3 x4 y4 category difficult

Detection files (one per class): one detection per line,

    image_id score x1 y1 x2 y2 x3 y3 x4 y4      (OBB task)
    image_id score xmin ymin xmax ymax          (HBB task)

Coordinates serialize with 6 significant digits and scores with 6
decimals, which round-trips losslessly through parse -> serialize ->
parse. Malformed lines raise ParseError with their line numbers.
"""

import math
import os
import tempfile
from dataclasses import dataclass

from .errors import ParseError, ValidationError
from .geom import AABB, Quad


@dataclass(frozen=True)
class GtRecord:
    """One ground-truth object: quad, category name, difficult flag."""

    quad: Quad
    category: str
    difficult: bool = False

    def __post_init__(self):
        if not self.category:
            raise ValidationError("category must be non-empty")


@dataclass(frozen=True)
class DetRecord:
    """One detection: image id, confidence, and OBB quad or HBB box."""

    image_id: str
    score: float
    quad: Quad | None = None
    box: AABB | None = None

    def __post_init__(self):
        s = float(self.score)
        if not (math.isfinite(s) and 0.0 <= s <= 1.0):
            raise ValidationError(f"score {self.score} outside [0, 1]")
        object.__setattr__(self, "score", s)
        if (self.quad is None) == (self.box is None):
            raise ValidationError("exactly one of quad/box must be set")


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _is_metadata(tokens) -> bool:
    return bool(tokens) and ":" in tokens[0]


def parse_annotations(text: str, source: str = "<annotations>") -> list:
    """Parse one image's annotation text into GtRecords.

    Metadata lines ("imagesource:...", "gsd:...") are skipped. All
    malformed lines are collected and reported together, with 1-based
    line numbers.
    """
    records = []
    problems = []
    bad_lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if _is_metadata(tokens):
            continue
        if len(tokens) != 10:
            problems.append(f"line {lineno}: expected 10 fields, got {len(tokens)}")
            bad_lines.append(lineno)
            continue
        try:
            coords = [float(t) for t in tokens[:8]]
        except ValueError:
            problems.append(f"line {lineno}: non-numeric coordinate")
            bad_lines.append(lineno)
            continue
        category = tokens[8]
        if tokens[9] not in ("0", "1"):
            problems.append(
                f"line {lineno}: difficult flag must be 0 or 1, got {tokens[9]!r}"
            )
            bad_lines.append(lineno)
            continue
        try:
            quad = Quad.from_flat(coords)
        except ValidationError as exc:
            problems.append(f"line {lineno}: {exc}")
            bad_lines.append(lineno)
            continue
        records.append(GtRecord(quad, category, tokens[9] == "1"))
    if problems:
        raise ParseError(
            f"{source}: {len(problems)} malformed line(s):\n  "
            + "\n  ".join(problems),
            lines=bad_lines,
        )
    return records


def serialize_annotations(records, metadata: dict | None = None) -> str:
    """Render GtRecords back to annotation text."""
    lines = []
    if metadata:
        lines.extend(f"{k}:{v}" for k, v in metadata.items())
    for r in records:
        coords = " ".join(_fmt(v) for v in r.quad.flat())
        lines.append(f"{coords} {r.category} {1 if r.difficult else 0}")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_detections(text: str, task: str, source: str = "<detections>") -> list:
    """Parse one class's detection file for the given task ("obb"/"hbb")."""
    if task not in ("obb", "hbb"):
        raise ValidationError(f"unknown task {task!r}")
    want = 10 if task == "obb" else 6
    records = []
    problems = []
    bad_lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != want:
            problems.append(
                f"line {lineno}: expected {want} fields for {task}, got {len(tokens)}"
            )
            bad_lines.append(lineno)
            continue
        try:
            nums = [float(t) for t in tokens[1:]]
        except ValueError:
            problems.append(f"line {lineno}: non-numeric field")
            bad_lines.append(lineno)
            continue
        try:
            if task == "obb":
                rec = DetRecord(tokens[0], nums[0],
                                quad=Quad.from_flat(nums[1:]))
            else:
                xmin, ymin, xmax, ymax = nums[1:]
                rec = DetRecord(tokens[0], nums[0],
                                box=AABB(xmin, ymin, xmax - xmin, ymax - ymin))
        except ValidationError as exc:
            problems.append(f"line {lineno}: {exc}")
            bad_lines.append(lineno)
            continue
        records.append(rec)
    if problems:
        raise ParseError(
            f"{source}: {len(problems)} malformed line(s):\n  "
            + "\n  ".join(problems),
            lines=bad_lines,
        )
    return records


def serialize_detections(records) -> str:
    """Render DetRecords to detection text (task inferred per record)."""
    lines = []
    for r in records:
        if r.quad is not None:
            tail = " ".join(_fmt(v) for v in r.quad.flat())
        else:
            tail = " ".join(
                _fmt(v) for v in (r.box.xmin, r.box.ymin, r.box.xmax, r.box.ymax)
            )
        lines.append(f"{r.image_id} {r.score:.6f} {tail}")
    return "\n".join(lines) + ("\n" if lines else "")


def write_text_atomic(path, text: str) -> None:
    """Write via temp file + rename so readers never see partial output."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_annotation_dir(path) -> dict:
    """Load every *.txt in a directory: {image_id: [GtRecord, ...]}."""
    out = {}
    for name in sorted(os.listdir(path)):
        if not name.endswith(".txt"):
            continue
        image_id = name[:-4]
        with open(os.path.join(path, name), "r", encoding="utf-8") as fh:
            out[image_id] = parse_annotations(fh.read(), source=name)
    return out


def read_detection_dir(path, task: str) -> dict:
    """Load every *.txt in a directory: {class_name: [DetRecord, ...]}."""
    out = {}
    for name in sorted(os.listdir(path)):
        if not name.endswith(".txt"):
            continue
        with open(os.path.join(path, name), "r", encoding="utf-8") as fh:
            out[name[:-4]] = parse_detections(fh.read(), task, source=name)
    return out
