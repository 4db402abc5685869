"""Age-indexed renewal fee schedules, including the built-in country tables."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import DomainError, ValidationError

_ENTRY_RE = re.compile(
    r"^\{\s*from\s*=\s*([+-]?\d+)\s*,\s*to\s*=\s*([+-]?\d+)\s*,"
    r"\s*cost\s*=\s*([^\s,}]+)\s*\}$"
)


@dataclass(frozen=True)
class FeeEntry:
    """One contiguous band of ages sharing an annual renewal cost."""

    age_from: int
    age_to: int
    annual_cost: float


@dataclass(frozen=True)
class FeeSchedule:
    """Annual renewal costs by patent age.

    Ages not covered by any entry cost nothing; several offices only start
    charging a few years into the patent term.
    """

    name: str
    currency: str
    entries: tuple[FeeEntry, ...]
    max_term: int = 20

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        problems = _entry_problems(self.entries, self.max_term)
        if self.max_term < 1:
            problems.insert(0, f"max_term must be >= 1, got {self.max_term}")
        if problems:
            raise ValidationError(problems)

    def cost_at(self, age: int) -> float:
        """Annual cost due at `age`; 0 where no entry applies.

        Total over [1, max_term]: raises only outside that range.
        """
        if not 1 <= age <= self.max_term:
            raise DomainError(
                f"age {age} outside the statutory term [1, {self.max_term}]"
            )
        for entry in self.entries:
            if entry.age_from <= age <= entry.age_to:
                return entry.annual_cost
        return 0.0

    def fee_ages(self) -> tuple[int, ...]:
        """Ages in [1, max_term] with a strictly positive cost."""
        return tuple(
            age for age in range(1, self.max_term + 1) if self.cost_at(age) > 0
        )


def _entry_problems(entries, max_term) -> list[str]:
    problems = []
    prev_to = 0
    for i, e in enumerate(entries):
        tag = f"entry {i + 1} ({e.age_from}-{e.age_to})"
        if e.age_from > e.age_to:
            problems.append(f"{tag}: descending age range")
        if e.age_from < 1 or e.age_to > max_term:
            problems.append(f"{tag}: outside [1, {max_term}]")
        if e.age_from <= prev_to:
            problems.append(f"{tag}: overlaps or is out of order with the previous entry")
        if e.annual_cost < 0:
            problems.append(f"{tag}: negative cost {e.annual_cost}")
        if e.annual_cost != e.annual_cost:  # NaN
            problems.append(f"{tag}: cost is not a number")
        prev_to = max(prev_to, e.age_to)
    return problems


_BUILTIN_TABLES = {
    "india": ("USD", ((3, 6, 54.81), (7, 10, 164.43), (11, 15, 328.86), (16, 20, 548.10))),
    "china": (
        "USD",
        ((1, 3, 135.0), (4, 6, 180.0), (7, 9, 300.0), (10, 12, 600.0), (13, 15, 900.0), (16, 20, 1200.0)),
    ),
    "us": ("USD", ((4, 7, 1600.0), (8, 11, 3600.0), (12, 14, 7400.0))),
}


def builtin_schedule(country: str) -> FeeSchedule:
    """Return one of the built-in renewal fee tables: india, china or us."""
    key = country.strip().lower()
    if key not in _BUILTIN_TABLES:
        raise DomainError(
            f"unknown builtin schedule {country!r}; expected one of {sorted(_BUILTIN_TABLES)}"
        )
    currency, rows = _BUILTIN_TABLES[key]
    entries = tuple(FeeEntry(a, b, c) for a, b, c in rows)
    return FeeSchedule(name=key, currency=currency, entries=entries, max_term=20)


def load_schedule(config_text: str) -> FeeSchedule:
    """Parse a fee schedule from its key-value text form.

    The document declares ``name``, ``currency``, ``max_term`` and one
    ``entry = { from = A, to = B, cost = C }`` line per age band.  Every
    violation found is reported, not just the first.
    """
    scalars: dict[str, str] = {}
    raw_entries: list[FeeEntry] = []
    problems: list[str] = []

    for lineno, raw in enumerate(config_text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not sep or not key:
            problems.append(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        if key == "entry":
            m = _ENTRY_RE.match(value)
            if not m:
                problems.append(
                    f"line {lineno}: malformed entry; expected "
                    "'{ from = A, to = B, cost = C }'"
                )
                continue
            try:
                cost = float(m.group(3))
            except ValueError:
                problems.append(f"line {lineno}: cost {m.group(3)!r} is not a number")
                continue
            raw_entries.append(FeeEntry(int(m.group(1)), int(m.group(2)), cost))
        elif key in ("name", "currency", "max_term"):
            if key in scalars:
                problems.append(f"line {lineno}: duplicate key {key!r}")
            scalars[key] = value
        else:
            problems.append(f"line {lineno}: unknown key {key!r}")

    for required in ("name", "currency", "max_term"):
        if required not in scalars:
            problems.append(f"missing required key {required!r}")
    if not raw_entries:
        problems.append("schedule declares no entries")

    max_term = 0
    if "max_term" in scalars:
        try:
            max_term = int(scalars["max_term"])
        except ValueError:
            problems.append(f"max_term {scalars['max_term']!r} is not an integer")

    if problems:
        raise ValidationError(problems)
    return FeeSchedule(
        name=scalars["name"],
        currency=scalars["currency"],
        entries=tuple(raw_entries),
        max_term=max_term,
    )


def serialize_schedule(schedule: FeeSchedule) -> str:
    """Render a schedule back to the key-value text form accepted by load_schedule."""
    lines = [
        f"name = {schedule.name}",
        f"currency = {schedule.currency}",
        f"max_term = {schedule.max_term}",
    ]
    for e in schedule.entries:
        lines.append(
            "entry = { from = %d, to = %d, cost = %s }" % (e.age_from, e.age_to, repr(e.annual_cost))
        )
    return "\n".join(lines) + "\n"
