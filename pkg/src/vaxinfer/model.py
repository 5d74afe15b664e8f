"""Trial-count records, the bundled dataset and JSON/CSV interchange.

In the causal model the number of assaulted placebo participants equals the
number of infected placebo participants, so ``TrialCounts`` carries no
separate field for it.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import asdict, dataclass
from typing import Optional

from .errors import FormatError, ValidationError

CSV_HEADER = ("label", "nV", "nP", "nVI", "nPI", "nVIs", "nPIs")

# interchange key -> attribute name
_FIELD_MAP = {
    "label": "label",
    "nV": "n_v",
    "nP": "n_p",
    "nVI": "n_vi",
    "nPI": "n_pi",
    "nVIs": "n_vis",
    "nPIs": "n_pis",
}
_REQUIRED = ("label", "nV", "nP", "nVI", "nPI")


@dataclass(frozen=True)
class TrialCounts:
    """Observed counts for one vaccine/placebo arm pair."""

    label: str
    n_v: int
    n_p: int
    n_vi: int
    n_pi: int
    n_vis: Optional[int] = None
    n_pis: Optional[int] = None

    def __post_init__(self):
        who = self.label or "<unlabelled>"
        for name in ("n_v", "n_p", "n_vi", "n_pi", "n_vis", "n_pis"):
            value = getattr(self, name)
            if value is None:
                continue
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValidationError(f"{who}: {name} must be an integer, got {value!r}")
            if value < 0:
                raise ValidationError(f"{who}: {name} must be >= 0, got {value}")
        if self.n_vi > self.n_v:
            raise ValidationError(f"{who}: constraint n_vi <= n_v violated ({self.n_vi} > {self.n_v})")
        if self.n_pi > self.n_p:
            raise ValidationError(f"{who}: constraint n_pi <= n_p violated ({self.n_pi} > {self.n_p})")
        if (self.n_vis is None) != (self.n_pis is None):
            raise ValidationError(f"{who}: severity counts must be both present or both absent")
        if self.n_vis is not None:
            if self.n_vis > self.n_vi:
                raise ValidationError(f"{who}: constraint n_vis <= n_vi violated ({self.n_vis} > {self.n_vi})")
            if self.n_pis > self.n_pi:
                raise ValidationError(f"{who}: constraint n_pis <= n_pi violated ({self.n_pis} > {self.n_pi})")

    @property
    def has_severity(self) -> bool:
        return self.n_vis is not None

    @property
    def n_pa(self) -> int:
        """Assaulted placebo participants; identical to ``n_pi`` by construction."""
        return self.n_pi

    def without_severity(self) -> "TrialCounts":
        return TrialCounts(self.label, self.n_v, self.n_p, self.n_vi, self.n_pi)

    def scaled(self, factor: int) -> "TrialCounts":
        """Same infected counts, arm sizes multiplied by ``factor``."""
        return TrialCounts(
            f"{self.label} x{factor}", self.n_v * factor, self.n_p * factor,
            self.n_vi, self.n_pi, self.n_vis, self.n_pis,
        )

    def to_record(self) -> dict:
        rec = {"label": self.label, "nV": self.n_v, "nP": self.n_p, "nVI": self.n_vi, "nPI": self.n_pi}
        if self.has_severity:
            rec["nVIs"] = self.n_vis
            rec["nPIs"] = self.n_pis
        return rec


@dataclass(frozen=True)
class MomentSummary:
    """Posterior summary of a probability-valued parameter."""

    mean: float
    sd: float
    mode: float
    ci_low: float
    ci_high: float
    tail_prob: float
    tail_threshold: float = 0.9

    def __post_init__(self):
        if not self.sd >= 0:
            raise ValidationError(f"sd must be non-negative, got {self.sd}")
        if self.ci_low > self.ci_high:
            raise ValidationError(f"ci_low {self.ci_low} exceeds ci_high {self.ci_high}")
        if not 0.0 <= self.tail_prob <= 1.0:
            raise ValidationError(f"tail_prob must be a probability, got {self.tail_prob}")

    def to_dict(self) -> dict:
        return asdict(self)


_BUILTIN = (
    TrialCounts("Moderna-1", 14134, 14073, 5, 90),
    TrialCounts("Moderna-2", 14134, 14073, 11, 185, 0, 30),
    TrialCounts("Pfizer", 18198, 18325, 8, 162, 1, 9),
    TrialCounts("AstraZeneca LD-SD", 1367, 1374, 3, 30),
    TrialCounts("AstraZeneca SD-SD", 4440, 4455, 27, 71),
)

_ALIASES = {
    "azldsd": "AstraZeneca LD-SD",
    "azsdsd": "AstraZeneca SD-SD",
    "moderna": "Moderna-2",
}


def _slug(text: str) -> str:
    return re.sub(r"[^a-z0-9]", "", text.lower())


def builtin_dataset() -> list[TrialCounts]:
    """The five published trial results, in release order."""
    return list(_BUILTIN)


def find_builtin(name: str) -> TrialCounts:
    """Look up a built-in trial by label, ignoring case and punctuation.

    ``moderna-2``, ``Moderna 2``, ``astrazeneca-ldsd`` and ``az-sdsd`` all resolve.
    """
    key = _slug(name)
    key = _slug(_ALIASES.get(key, key))
    for trial in _BUILTIN:
        if _slug(trial.label) == key:
            return trial
    raise KeyError(name)


def _build(record: dict, where: str) -> TrialCounts:
    if not isinstance(record, dict):
        raise FormatError(f"{where}: expected an object, got {type(record).__name__}")
    unknown = sorted(set(record) - set(_FIELD_MAP))
    if unknown:
        raise FormatError(f"{where}: unknown field(s) {', '.join(unknown)}")
    missing = [k for k in _REQUIRED if k not in record]
    if missing:
        raise FormatError(f"{where}: missing field(s) {', '.join(missing)}")
    kwargs = {}
    for key, attr in _FIELD_MAP.items():
        value = record.get(key)
        if key == "label":
            if not isinstance(value, str):
                raise FormatError(f"{where}: field label must be a string")
        elif value is not None and (isinstance(value, bool) or not isinstance(value, int)):
            if isinstance(value, float) and value.is_integer():
                value = int(value)
            else:
                raise FormatError(f"{where}: field {key} must be an integer, got {value!r}")
        kwargs[attr] = value
    try:
        return TrialCounts(**kwargs)
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from None


def _load_json(text: str) -> list[TrialCounts]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if isinstance(doc, dict):
        extra = sorted(set(doc) - {"trials"})
        if extra:
            raise FormatError(f"unknown top-level field(s) {', '.join(extra)}")
        if "trials" not in doc:
            raise FormatError("missing top-level field trials")
        doc = doc["trials"]
    if not isinstance(doc, list):
        raise FormatError("trials must be a list")
    return [_build(rec, f"record {i} ({rec.get('label', '?') if isinstance(rec, dict) else '?'})")
            for i, rec in enumerate(doc)]


def _parse_count(cell: str, key: str, where: str) -> Optional[int]:
    cell = cell.strip()
    if cell == "":
        return None
    try:
        return int(cell)
    except ValueError:
        raise FormatError(f"{where}: field {key} is not an integer: {cell!r}") from None


def _load_csv(text: str) -> list[TrialCounts]:
    if not text.strip():
        return []
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(h.strip() for h in header) != CSV_HEADER:
        raise FormatError(f"line 1: expected header {','.join(CSV_HEADER)}, got {','.join(header)}")
    out = []
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(CSV_HEADER):
            raise FormatError(f"line {line}: expected {len(CSV_HEADER)} fields, got {len(row)}")
        where = f"line {line}"
        rec = {"label": row[0]}
        for key, cell in zip(CSV_HEADER[1:], row[1:]):
            value = _parse_count(cell, key, where)
            if value is None and key in _REQUIRED:
                raise FormatError(f"{where}: field {key} is empty")
            if value is not None:
                rec[key] = value
        out.append(_build(rec, f"{where} ({row[0]})"))
    return out


def load_dataset(source: str, format: str = "json") -> list[TrialCounts]:
    """Parse and validate trial records from JSON or CSV text."""
    if format == "json":
        return _load_json(source)
    if format == "csv":
        return _load_csv(source)
    raise FormatError(f"unsupported dataset format {format!r}")


def dump_dataset(trials: list[TrialCounts], format: str = "json") -> str:
    """Canonical serialization; ``load_dataset`` inverts it exactly."""
    if format == "json":
        return json.dumps({"trials": [t.to_record() for t in trials]}, indent=2) + "\n"
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for t in trials:
            rec = t.to_record()
            writer.writerow([rec.get(k, "") for k in CSV_HEADER])
        return buf.getvalue()
    raise FormatError(f"unsupported dataset format {format!r}")
