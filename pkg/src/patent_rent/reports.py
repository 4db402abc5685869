"""Result tables: expiry shares, value by group, quantile grids, and the
age-value trend emitted for external plotting."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, ReportingError
from .data import PatentRecord
from .simulate import ValueEstimate

#: Expiry-age buckets used in the share table, with display labels.
EXPIRY_BUCKETS = (
    (2, 2, "Never Renewed"),
    (3, 6, "3rd to 6th year"),
    (7, 10, "7th to 10th year"),
    (11, 15, "11th to 15th year"),
    (16, 20, "16th to 20th year"),
)

_TECH_DISPLAY = (
    ("chemical", "Chemical"),
    ("mechanical", "Mechanical"),
    ("instruments", "Instruments"),
    ("electrical", "Electrical"),
    ("others", "Others"),
)

_OWNERSHIP_DISPLAY = (
    ("foreign_subsidiary", "Foreign Subsidiary"),
    ("domestic", "Domestic Firms"),
)

DEFAULT_QUANTILES = (25, 50, 75, 90, 95, 99)


@dataclass(frozen=True)
class ExpiryShareTable:
    bucket_labels: tuple[str, ...]
    rows: list[tuple[str, tuple[float, ...], int]]  # (group, shares %, patents)


@dataclass(frozen=True)
class GroupedValueTable:
    key: str  # "technology" | "ownership"
    money_field: str  # "r0" | "npv"
    deflator: float
    rows: list[tuple[str, float, float, float, float]]  # label, patent %, value %, mean, median


@dataclass(frozen=True)
class QuantileTable:
    quantiles: tuple[int, ...]
    group_labels: tuple[str, ...]
    grid: np.ndarray  # quantile rows x group columns
    means: tuple[float, ...]
    sds: tuple[float, ...]
    counts: tuple[int, ...]
    deflator: float


def _group_iter(key: str):
    if key == "technology":
        return _TECH_DISPLAY
    if key == "ownership":
        return _OWNERSHIP_DISPLAY
    raise DomainError(f"unknown grouping key {key!r}; expected 'technology' or 'ownership'")


def _group_of(record: PatentRecord, key: str) -> str:
    return record.covariates.tech_field if key == "technology" else record.covariates.ownership


def expiry_share_table(records: Sequence[PatentRecord]) -> ExpiryShareTable:
    """Percentage of each technology's patents expiring in each age bucket,
    plus a pooled Average row.  Every row sums to 100."""
    if not records:
        raise DomainError("record list is empty")

    def shares(subset: Sequence[PatentRecord]) -> tuple[float, ...]:
        total = len(subset)
        out = []
        for lo, hi, _ in EXPIRY_BUCKETS:
            hits = sum(1 for r in subset if lo <= r.expiry_age <= hi)
            out.append(100.0 * hits / total)
        return tuple(out)

    rows = []
    for field, label in _TECH_DISPLAY:
        subset = [r for r in records if r.covariates.tech_field == field]
        if subset:
            rows.append((label, shares(subset), len(subset)))
    rows.append(("Average", shares(records), len(records)))
    return ExpiryShareTable(
        bucket_labels=tuple(label for _, _, label in EXPIRY_BUCKETS), rows=rows
    )


def _estimate_lookup(
    records: Sequence[PatentRecord], estimates: Sequence[ValueEstimate]
) -> dict[str, ValueEstimate]:
    lookup = {e.patent_id: e for e in estimates}
    for record in records:
        if record.patent_id not in lookup:
            raise ReportingError(f"no value estimate for patent {record.patent_id!r}")
    return lookup


def _money_of(estimate: ValueEstimate, money_field: str) -> float:
    if money_field == "r0":
        return estimate.r0_mean
    if money_field == "npv":
        return estimate.npv_mean
    raise DomainError(f"unknown money field {money_field!r}; expected 'r0' or 'npv'")


def value_by_group(
    records: Sequence[PatentRecord],
    estimates: Sequence[ValueEstimate],
    key: str = "technology",
    money_field: str = "r0",
    deflator: float = 1.0,
) -> GroupedValueTable:
    """Patent and value shares with mean/median point estimates per group."""
    if not records:
        raise DomainError("record list is empty")
    lookup = _estimate_lookup(records, estimates)
    values = {rec.patent_id: _money_of(lookup[rec.patent_id], money_field) for rec in records}
    grand_total = sum(values.values())

    rows = []
    for field, label in _group_iter(key):
        members = [values[r.patent_id] for r in records if _group_of(r, key) == field]
        if not members:
            continue
        arr = np.array(members)
        value_share = 100.0 * arr.sum() / grand_total if grand_total != 0 else 0.0
        rows.append(
            (
                label,
                100.0 * len(members) / len(records),
                value_share,
                float(arr.mean()) * deflator,
                float(np.median(arr)) * deflator,
            )
        )
    return GroupedValueTable(key=key, money_field=money_field, deflator=deflator, rows=rows)


def quantile_table(
    estimates: Sequence[ValueEstimate],
    quantiles: Sequence[int] = DEFAULT_QUANTILES,
    deflator: float = 1.0,
) -> QuantileTable:
    """Per-technology quantile grid of patent NPV point estimates.

    Quantiles use inclusive linear interpolation between order statistics.
    """
    if not estimates:
        raise DomainError("estimate list is empty")
    quantiles = tuple(int(q) for q in quantiles)
    if any(not 0 <= q <= 100 for q in quantiles):
        raise DomainError("quantiles must lie in [0, 100]")

    labels, columns, means, sds, counts = [], [], [], [], []
    for field, label in _TECH_DISPLAY:
        members = np.array([e.npv_mean for e in estimates if e.tech_field == field])
        if members.size == 0:
            continue
        labels.append(label)
        columns.append(np.quantile(members, [q / 100.0 for q in quantiles]) * deflator)
        means.append(float(members.mean()) * deflator)
        sds.append(float(members.std(ddof=1)) * deflator if members.size > 1 else 0.0)
        counts.append(int(members.size))

    return QuantileTable(
        quantiles=quantiles,
        group_labels=tuple(labels),
        grid=np.column_stack(columns),
        means=tuple(means),
        sds=tuple(sds),
        counts=tuple(counts),
        deflator=deflator,
    )


def age_value_trend(estimates: Sequence[ValueEstimate]) -> list[tuple[int, float]]:
    """Mean simulated log initial return per expiry age (plot-data pairs)."""
    if not estimates:
        raise DomainError("estimate list is empty")
    by_age: dict[int, list[float]] = {}
    for e in estimates:
        by_age.setdefault(e.expiry_age, []).append(e.mean_log_r0)
    return [(age, float(np.mean(vals))) for age, vals in sorted(by_age.items())]


# ---------------------------------------------------------------------------
# renderers: full-precision CSV plus aligned text with display rounding
# ---------------------------------------------------------------------------


def _csv_text(rows: Sequence[Sequence]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerows(rows)
    return out.getvalue()


def _aligned_text(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = []
    for row in [list(headers)] + [list(r) for r in rows]:
        cells = [row[0].ljust(widths[0])]
        cells += [cell.rjust(widths[i]) for i, cell in enumerate(row) if i > 0]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


def _share(v: float) -> str:
    return f"{v:.3f}"


def _money(v: float) -> str:
    return f"{v:.6g}"


def render_expiry_share_csv(table: ExpiryShareTable) -> str:
    header = ["technology"] + [label.lower().replace(" ", "_") for label in table.bucket_labels]
    header.append("total_patents")
    rows = [header]
    for label, shares, total in table.rows:
        rows.append([label] + [repr(s) for s in shares] + [total])
    return _csv_text(rows)


def render_expiry_share_text(table: ExpiryShareTable) -> str:
    headers = ["Technology Category"] + list(table.bucket_labels) + ["Total Patents"]
    rows = [
        [label] + [_share(s) for s in shares] + [str(total)]
        for label, shares, total in table.rows
    ]
    return _aligned_text(headers, rows)


def render_grouped_value_csv(table: GroupedValueTable) -> str:
    rows = [[table.key, "patent_share", "value_share", "mean", "median"]]
    for label, pshare, vshare, mean, median in table.rows:
        rows.append([label, repr(pshare), repr(vshare), repr(mean), repr(median)])
    return _csv_text(rows)


def render_grouped_value_text(table: GroupedValueTable) -> str:
    headers = [
        "Technology" if table.key == "technology" else "Ownership",
        "Patent Share",
        "Value Share",
        "Mean",
        "Median",
    ]
    rows = [
        [label, f"{pshare:.2f}", f"{vshare:.2f}", _money(mean), _money(median)]
        for label, pshare, vshare, mean, median in table.rows
    ]
    return _aligned_text(headers, rows)


def render_quantile_csv(table: QuantileTable) -> str:
    rows = [["quantile_pct"] + list(table.group_labels)]
    for i, q in enumerate(table.quantiles):
        rows.append([q] + [repr(v) for v in table.grid[i]])
    rows.append(["mean"] + [repr(v) for v in table.means])
    rows.append(["sd"] + [repr(v) for v in table.sds])
    rows.append(["obs"] + [str(c) for c in table.counts])
    return _csv_text(rows)


def render_quantile_text(table: QuantileTable) -> str:
    headers = ["Quantile (%)"] + list(table.group_labels)
    rows = [
        [f"{q}%"] + [_money(v) for v in table.grid[i]]
        for i, q in enumerate(table.quantiles)
    ]
    rows.append(["Mean"] + [_money(v) for v in table.means])
    rows.append(["Std. Dev."] + [_money(v) for v in table.sds])
    rows.append(["Obs."] + [str(c) for c in table.counts])
    return _aligned_text(headers, rows)


def render_trend_csv(trend: Sequence[tuple[int, float]]) -> str:
    rows = [["expiry_age", "mean_log_initial_return"]]
    for age, value in trend:
        rows.append([age, repr(value)])
    return _csv_text(rows)


_VALUE_COLUMNS = (
    "patent_id",
    "tech_field",
    "ownership",
    "expiry_age",
    "draws_used",
    "degenerate",
    "r0_mean",
    "r0_mean_se",
    "mc_se_reliable",
    "r0_median",
    "mean_log_r0",
    "npv_mean",
    "npv_median",
    "ensemble_log_r0",
    "ensemble_log_r0_median",
    "ensemble_band_lo",
    "ensemble_band_hi",
    "ensemble_used",
    "ensemble_skipped",
)


def render_values_csv(estimates: Sequence[ValueEstimate]) -> str:
    """Per-patent value table; quantile columns follow the fixed grid."""
    quantile_cols = []
    if estimates:
        quantile_cols = [f"r0_q{int(q * 100):02d}" for q in estimates[0].r0_quantiles]
    rows = [list(_VALUE_COLUMNS[:13]) + quantile_cols + list(_VALUE_COLUMNS[13:])]
    for e in estimates:
        se = "" if e.r0_mean_se is None else repr(e.r0_mean_se)
        reliable = "true" if (e.r0_mean_se is not None and not e.degenerate) else "false"
        band = e.ensemble_band or ("", "")
        row = [
            e.patent_id,
            e.tech_field,
            e.ownership,
            e.expiry_age,
            e.draws_used,
            "true" if e.degenerate else "false",
            repr(e.r0_mean),
            se,
            reliable,
            repr(e.r0_median),
            repr(e.mean_log_r0),
            repr(e.npv_mean),
            repr(e.npv_median),
        ]
        row += [repr(v) for v in e.r0_quantiles.values()]
        row += [
            "" if e.ensemble_log_r0 is None else repr(e.ensemble_log_r0),
            "" if e.ensemble_log_r0_median is None else repr(e.ensemble_log_r0_median),
            "" if e.ensemble_band is None else repr(band[0]),
            "" if e.ensemble_band is None else repr(band[1]),
            "" if e.ensemble_used is None else e.ensemble_used,
            "" if e.ensemble_skipped is None else e.ensemble_skipped,
        ]
        rows.append(row)
    return _csv_text(rows)
