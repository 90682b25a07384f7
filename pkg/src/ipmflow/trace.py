"""Per-iteration trace records and the active-trace hook.

A run's trace is a list of flat dict records, persisted as JSON lines.
Inspection functions call :func:`note` to attach (label, value) pairs to
whatever trace is active in the current context; outside a run it is a no-op.
"""

from __future__ import annotations

import contextlib
import contextvars
import json
import math
from pathlib import Path
from typing import Any, Iterator

TRACE_FIELDS = ("iter", "phase", "t", "F_t_cert", "delta", "w_l1", "coupling",
                "rho2", "rho4", "rhoinf", "energy", "eta")

_active: contextvars.ContextVar["Trace | None"] = contextvars.ContextVar("trace", default=None)


_PLAIN = (int, str, bool, type(None))


def _clean(v: Any) -> Any:
    if type(v) in _PLAIN:
        return v
    if type(v) is float and v - v == 0.0:
        return v
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if hasattr(v, "item"):
        return _clean(v.item())
    return v


class Trace:
    def __init__(self) -> None:
        self.records: list[dict[str, Any]] = []
        self.notes: list[tuple[str, Any]] = []

    def append(self, **fields: Any) -> dict[str, Any]:
        rec = {k: None for k in TRACE_FIELDS}
        rec.update({k: _clean(v) for k, v in fields.items()})
        self.records.append(rec)
        return rec

    def note(self, label: str, value: Any) -> None:
        self.notes.append((label, _clean(value)))

    def phase(self, name: str) -> list[dict[str, Any]]:
        return [r for r in self.records if r["phase"] == name]

    def __len__(self) -> int:
        return len(self.records)

    @contextlib.contextmanager
    def activate(self) -> Iterator["Trace"]:
        token = _active.set(self)
        try:
            yield self
        finally:
            _active.reset(token)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=False) + "\n" for r in self.records)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl())

    @classmethod
    def from_jsonl(cls, text: str) -> "Trace":
        tr = cls()
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"line {lineno}: {exc.msg}") from None
            if not isinstance(rec, dict):
                raise ValueError(f"line {lineno}: record is not an object")
            tr.records.append(rec)
        return tr


def note(label: str, value: Any) -> None:
    tr = _active.get()
    if tr is not None:
        tr.note(label, value)


def active() -> Trace | None:
    return _active.get()
