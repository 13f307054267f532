"""Rating-form schema, binarization and the validated dataset container.

Every engine in the package consumes a :class:`Dataset`. A dataset is built
once through :func:`validate_dataset` (or :func:`read_csv`) and is immutable
afterwards; the cue matrix and label vector are exposed as read-only numpy
arrays so the search and fitting code can stay vectorized.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np


class ScaleKind(enum.Enum):
    ORDINAL5 = (1, 5)
    ORDINAL6 = (1, 6)
    BINARY = (0, 1)

    @property
    def low(self) -> int:
        return self.value[0]

    @property
    def high(self) -> int:
        return self.value[1]

    def points(self) -> range:
        return range(self.low, self.high + 1)

    def contains(self, score: int) -> bool:
        return self.low <= score <= self.high


class CueGroup(enum.Enum):
    APPLICANT = "Applicant"
    PROJECT = "Project"
    ENVIRONMENT = "Environment"


class JudgmentClass(enum.IntEnum):
    """Binarized overall judgment. Ordered so that NOT_OUTSTANDING < OUTSTANDING."""

    NOT_OUTSTANDING = 0
    OUTSTANDING = 1

    @property
    def label(self) -> str:
        return "outstanding" if self is JudgmentClass.OUTSTANDING else "not outstanding"

    def other(self) -> "JudgmentClass":
        return JudgmentClass(1 - int(self))


class RefereeRole(enum.IntEnum):
    FIRST = 1
    SECOND = 2


@dataclass(frozen=True)
class CueSpec:
    id: str
    name: str
    group: CueGroup
    scale: ScaleKind = ScaleKind.ORDINAL5


CANONICAL_CUES: tuple[CueSpec, ...] = (
    CueSpec("education", "education", CueGroup.APPLICANT),
    CueSpec("track_record", "track record", CueGroup.APPLICANT),
    CueSpec("career_plan", "career plan", CueGroup.APPLICANT),
    CueSpec("career_potential", "career potential", CueGroup.APPLICANT, ScaleKind.ORDINAL6),
    CueSpec("top5", "top 5% in the field", CueGroup.APPLICANT, ScaleKind.BINARY),
    CueSpec("clarity_goal", "clarity of project goal", CueGroup.PROJECT),
    CueSpec("clarity_plan", "clarity of research plan", CueGroup.PROJECT),
    CueSpec("own_question", "own research question", CueGroup.PROJECT),
    CueSpec("method", "methodological approach", CueGroup.PROJECT),
    CueSpec("feasibility", "feasibility", CueGroup.PROJECT),
    CueSpec("innovative", "highly innovative proposal", CueGroup.PROJECT, ScaleKind.BINARY),
    CueSpec("cooperation", "cooperation/network", CueGroup.ENVIRONMENT),
    CueSpec("recommendation", "letter of recommendation", CueGroup.ENVIRONMENT),
)

OVERALL_SCALE = ScaleKind.ORDINAL6
ID_COLUMNS = ("proposal_id", "referee_id", "referee_role")


def csv_columns(schema: Sequence[CueSpec] = CANONICAL_CUES) -> tuple[str, ...]:
    return ID_COLUMNS + tuple(c.id for c in schema) + ("overall",)


@dataclass(frozen=True)
class RatingForm:
    proposal_id: str
    referee_id: str
    referee_role: RefereeRole
    scores: Mapping[str, int]
    overall: int


@dataclass(frozen=True)
class Issue:
    row: int  # 1-based data row (the header is not counted)
    column: str | None
    message: str

    def __str__(self) -> str:
        where = f"row {self.row}"
        if self.column:
            where += f", column {self.column!r}"
        return f"{where}: {self.message}"


class ValidationError(ValueError):
    """Raised when input records violate the rating-form schema."""

    def __init__(self, issues: Sequence[Issue]):
        self.issues = list(issues)
        lines = [str(i) for i in self.issues[:50]]
        if len(self.issues) > 50:
            lines.append(f"... {len(self.issues) - 50} more")
        super().__init__("invalid rating data:\n  " + "\n  ".join(lines))


def binarize_overall(overall: int, *, row: int | None = None) -> JudgmentClass:
    """Map a 1..6 overall assessment to the two-class judgment (5 and 6 are outstanding)."""
    if isinstance(overall, bool) or not isinstance(overall, (int, np.integer)):
        raise ValidationError([Issue(row or 0, "overall", f"not an integer: {overall!r}")])
    if not OVERALL_SCALE.contains(int(overall)):
        raise ValidationError([Issue(row or 0, "overall", f"score {overall} outside 1..6")])
    return JudgmentClass.OUTSTANDING if overall >= 5 else JudgmentClass.NOT_OUTSTANDING


@dataclass(frozen=True)
class Dataset:
    schema: tuple[CueSpec, ...]
    records: tuple[RatingForm, ...]
    labels: tuple[JudgmentClass, ...]
    metadata: Mapping[str, object] = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def cue_ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.schema)

    def cue(self, cue_id: str) -> CueSpec:
        for c in self.schema:
            if c.id == cue_id:
                return c
        raise KeyError(cue_id)

    def cue_index(self, cue_id: str) -> int:
        return self.cue_ids.index(cue_id)

    @cached_property
    def X(self) -> np.ndarray:
        """Cue scores as an (n_records, n_cues) integer matrix in schema order."""
        ids = self.cue_ids
        m = np.array([[r.scores[c] for c in ids] for r in self.records], dtype=np.int64)
        m = m.reshape(len(self.records), len(ids))
        m.flags.writeable = False
        return m

    @cached_property
    def y(self) -> np.ndarray:
        """Labels as a 0/1 integer vector (1 = outstanding)."""
        v = np.array([int(c) for c in self.labels], dtype=np.int64)
        v.flags.writeable = False
        return v

    @cached_property
    def roles(self) -> np.ndarray:
        v = np.array([int(r.referee_role) for r in self.records], dtype=np.int64)
        v.flags.writeable = False
        return v

    def subset(self, indices: Iterable[int]) -> "Dataset":
        idx = list(indices)
        return Dataset(
            self.schema,
            tuple(self.records[i] for i in idx),
            tuple(self.labels[i] for i in idx),
            self.metadata,
        )


def _coerce_int(value: object) -> int:
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, str):
        text = value.strip()
        if text and (text.isdigit() or (text[0] in "+-" and text[1:].isdigit())):
            return int(text)
    raise ValueError(f"not an integer: {value!r}")


def validate_dataset(
    rows: Iterable[Mapping[str, object]],
    schema: Sequence[CueSpec] = CANONICAL_CUES,
    metadata: Mapping[str, object] | None = None,
) -> Dataset:
    """Validate raw records and build a :class:`Dataset`.

    ``rows`` are mappings keyed by the CSV column names; values may be ints or
    numeric strings. All problems are collected and raised together as a
    :class:`ValidationError` so a caller sees every offending row at once.
    Missing scores are rejected rather than imputed.
    """
    schema = tuple(schema)
    issues: list[Issue] = []
    records: list[RatingForm] = []
    seen: dict[tuple[str, int], int] = {}

    for n, raw in enumerate(rows, start=1):
        row_issues: list[Issue] = []
        pid = raw.get("proposal_id")
        rid = raw.get("referee_id")
        for col, val in (("proposal_id", pid), ("referee_id", rid)):
            if val is None or str(val).strip() == "":
                row_issues.append(Issue(n, col, "missing identifier"))

        role = None
        try:
            role = RefereeRole(_coerce_int(raw.get("referee_role")))
        except (ValueError, TypeError):
            row_issues.append(
                Issue(n, "referee_role", f"expected 1 or 2, got {raw.get('referee_role')!r}")
            )

        scores: dict[str, int] = {}
        for cue in schema:
            val = raw.get(cue.id)
            if val is None or (isinstance(val, str) and val.strip() == ""):
                row_issues.append(Issue(n, cue.id, "missing cue score"))
                continue
            try:
                score = _coerce_int(val)
            except ValueError as exc:
                row_issues.append(Issue(n, cue.id, str(exc)))
                continue
            if not cue.scale.contains(score):
                row_issues.append(
                    Issue(n, cue.id, f"score {score} outside {cue.scale.low}..{cue.scale.high}")
                )
                continue
            scores[cue.id] = score

        overall = None
        val = raw.get("overall")
        if val is None or (isinstance(val, str) and val.strip() == ""):
            row_issues.append(Issue(n, "overall", "missing overall assessment"))
        else:
            try:
                overall = _coerce_int(val)
                if not OVERALL_SCALE.contains(overall):
                    row_issues.append(Issue(n, "overall", f"score {overall} outside 1..6"))
                    overall = None
            except ValueError as exc:
                row_issues.append(Issue(n, "overall", str(exc)))

        if role is not None and not row_issues:
            key = (str(pid), int(role))
            if key in seen:
                row_issues.append(
                    Issue(n, "referee_role", f"duplicate role {int(role)} for proposal {pid!r} "
                          f"(first seen in row {seen[key]})")
                )
            else:
                seen[key] = n

        if row_issues:
            issues.extend(row_issues)
            continue
        records.append(RatingForm(str(pid), str(rid), role, scores, overall))

    if issues:
        raise ValidationError(issues)
    labels = tuple(binarize_overall(r.overall) for r in records)
    return Dataset(schema, tuple(records), labels, dict(metadata or {}))


def prevalence(dataset: Dataset) -> Fraction:
    """Share of outstanding judgments, as an exact fraction."""
    if len(dataset) == 0:
        raise ValueError("prevalence of an empty dataset is undefined")
    return Fraction(sum(int(c) for c in dataset.labels), len(dataset))


def to_rows(dataset: Dataset) -> list[dict[str, object]]:
    rows = []
    for r in dataset.records:
        row: dict[str, object] = {
            "proposal_id": r.proposal_id,
            "referee_id": r.referee_id,
            "referee_role": int(r.referee_role),
        }
        for c in dataset.schema:
            row[c.id] = r.scores[c.id]
        row["overall"] = r.overall
        rows.append(row)
    return rows


def dumps_csv(dataset: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=csv_columns(dataset.schema), lineterminator="\n")
    writer.writeheader()
    writer.writerows(to_rows(dataset))
    return buf.getvalue()


def loads_csv(text: str, schema: Sequence[CueSpec] = CANONICAL_CUES) -> Dataset:
    reader = csv.DictReader(io.StringIO(text))
    expected = csv_columns(schema)
    header = tuple(reader.fieldnames or ())
    if header != expected:
        missing = [c for c in expected if c not in header]
        extra = [c for c in header if c not in expected]
        detail = []
        if missing:
            detail.append(f"missing columns {missing}")
        if extra:
            detail.append(f"unexpected columns {extra}")
        if not detail:
            detail.append("columns out of order")
        raise ValidationError([Issue(0, None, "bad header: " + "; ".join(detail))])
    return validate_dataset(reader, schema)


def read_csv(path: str | Path, schema: Sequence[CueSpec] = CANONICAL_CUES) -> Dataset:
    return loads_csv(Path(path).read_text(encoding="utf-8"), schema)
