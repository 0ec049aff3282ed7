"""Panel dataset loading, validation, and JSON report persistence.

Two on-disk layouts are supported for panel data:

* long CSV -- one file, header exactly ``year,entity,feature,value``;
  missing (year, entity, feature) cells default to 0.
* wide CSV -- one file per year named ``panel_<year>.csv`` inside a
  directory; first column ``entity``, remaining columns are feature names.

Reports are plain JSON (UTF-8, sorted keys) so external tools can parse
them without this package.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import PanelFormatError

LONG_HEADER = ["year", "entity", "feature", "value"]
_WIDE_NAME = re.compile(r"^panel_(\d+)\.csv$")


@dataclass(frozen=True)
class EnergyPanel:
    """Dense 3-d panel: values[year, entity, feature] in Mt CO2."""

    years: tuple[int, ...]
    entities: tuple[str, ...]
    features: tuple[str, ...]
    values: np.ndarray  # shape (n_years, n_entities, n_features)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "years", tuple(int(y) for y in self.years))
        object.__setattr__(self, "entities", tuple(self.entities))
        object.__setattr__(self, "features", tuple(self.features))
        if values.shape != (len(self.years), len(self.entities), len(self.features)):
            raise PanelFormatError(
                f"value array shape {values.shape} does not match axes "
                f"({len(self.years)}, {len(self.entities)}, {len(self.features)})"
            )
        if any(b <= a for a, b in zip(self.years, self.years[1:])):
            raise PanelFormatError("years must be strictly increasing")
        for kind, names in (("entity", self.entities), ("feature", self.features)):
            if any(not n for n in names):
                raise PanelFormatError(f"empty {kind} name")
            if len(set(names)) != len(names):
                raise PanelFormatError(f"duplicate {kind} names")
        values.setflags(write=False)

    @property
    def n_years(self) -> int:
        return len(self.years)

    @property
    def n_entities(self) -> int:
        return len(self.entities)

    @property
    def n_features(self) -> int:
        return len(self.features)

    def year_index(self, year: int) -> int:
        try:
            return self.years.index(year)
        except ValueError:
            raise KeyError(f"year {year} not in panel") from None


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of validate_panel: ok iff no issue has severity 'error'."""

    ok: bool
    issues: tuple[tuple[str, str, str], ...]  # (severity, location, message)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "issues": [
                {"severity": s, "location": loc, "message": msg}
                for s, loc, msg in self.issues
            ],
        }


def _parse_value(text: str, where: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise PanelFormatError(f"non-numeric value {text!r} at {where}") from None
    if not math.isfinite(v):
        raise PanelFormatError(f"non-finite value {text!r} at {where}")
    return v


def _parse_year(text: str, where: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise PanelFormatError(f"non-integer year {text!r} at {where}") from None


def _load_long(path: Path) -> EnergyPanel:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PanelFormatError(f"{path}: empty file") from None
        if [h.strip() for h in header] != LONG_HEADER:
            raise PanelFormatError(
                f"{path}: malformed header {header!r}, expected {','.join(LONG_HEADER)}"
            )
        cells: dict[tuple[int, str, str], float] = {}
        first_row: dict[tuple[int, str, str], int] = {}
        years: list[int] = []
        entities: list[str] = []
        features: list[str] = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise PanelFormatError(f"{path}:{lineno}: expected 4 columns, got {len(row)}")
            where = f"{path}:{lineno}"
            year = _parse_year(row[0].strip(), where)
            entity = row[1].strip()
            feat = row[2].strip()
            if not entity or not feat:
                raise PanelFormatError(f"{where}: empty entity or feature name")
            value = _parse_value(row[3].strip(), where)
            key = (year, entity, feat)
            if key in cells:
                raise PanelFormatError(
                    f"{where}: duplicate key {key}, first seen at row {first_row[key]}"
                )
            cells[key] = value
            first_row[key] = lineno
            if year not in years:
                years.append(year)
            if entity not in entities:
                entities.append(entity)
            if feat not in features:
                features.append(feat)
    if not cells:
        raise PanelFormatError(f"{path}: no data rows")
    years.sort()
    values = np.zeros((len(years), len(entities), len(features)))
    y_idx = {y: i for i, y in enumerate(years)}
    e_idx = {e: i for i, e in enumerate(entities)}
    f_idx = {f: i for i, f in enumerate(features)}
    for (year, entity, feat), v in cells.items():
        values[y_idx[year], e_idx[entity], f_idx[feat]] = v
    return EnergyPanel(tuple(years), tuple(entities), tuple(features), values)


def _load_wide(path: Path) -> EnergyPanel:
    year_files: list[tuple[int, Path]] = []
    for child in sorted(path.iterdir()):
        m = _WIDE_NAME.match(child.name)
        if m:
            year_files.append((int(m.group(1)), child))
    if not year_files:
        raise PanelFormatError(f"{path}: no panel_<year>.csv files found")
    year_files.sort()

    features: list[str] | None = None
    entities: list[str] = []
    per_year: dict[int, dict[str, list[float]]] = {}
    for year, file in year_files:
        with open(file, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise PanelFormatError(f"{file}: empty file") from None
            header = [h.strip() for h in header]
            if not header or header[0] != "entity":
                raise PanelFormatError(f"{file}: first header column must be 'entity'")
            file_feats = header[1:]
            if not file_feats:
                raise PanelFormatError(f"{file}: no feature columns")
            if features is None:
                features = file_feats
            elif file_feats != features:
                raise PanelFormatError(
                    f"{file}: feature columns {file_feats!r} differ from {features!r}"
                )
            rows: dict[str, list[float]] = {}
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != len(features) + 1:
                    raise PanelFormatError(
                        f"{file}:{lineno}: expected {len(features) + 1} columns, got {len(row)}"
                    )
                entity = row[0].strip()
                if not entity:
                    raise PanelFormatError(f"{file}:{lineno}: empty entity name")
                if entity in rows:
                    raise PanelFormatError(f"{file}:{lineno}: duplicate entity {entity!r}")
                rows[entity] = [
                    _parse_value(c.strip(), f"{file}:{lineno}") for c in row[1:]
                ]
                if entity not in entities:
                    entities.append(entity)
            if not rows:
                raise PanelFormatError(f"{file}: no data rows")
            per_year[year] = rows

    assert features is not None
    years = [y for y, _ in year_files]
    values = np.zeros((len(years), len(entities), len(features)))
    for yi, year in enumerate(years):
        rows = per_year[year]
        for ei, entity in enumerate(entities):
            if entity in rows:
                values[yi, ei, :] = rows[entity]
    return EnergyPanel(tuple(years), tuple(entities), tuple(features), values)


def load_panel(path: str | Path, layout: str = "long") -> EnergyPanel:
    """Load a panel from disk. layout is 'long' (one CSV) or 'wide' (a
    directory of panel_<year>.csv files). Deterministic: identical bytes
    load to identical panels."""
    path = Path(path)
    if layout == "long":
        return _load_long(path)
    if layout == "wide":
        return _load_wide(path)
    raise ValueError(f"unknown layout {layout!r}")


def validate_panel(panel: EnergyPanel) -> ValidationReport:
    """Check a panel for sign/finiteness errors and all-zero series.

    Negative or non-finite cells are errors; all-zero feature columns and
    all-zero entity rows are warnings (preprocessing drops them)."""
    issues: list[tuple[str, str, str]] = []
    values = panel.values
    bad = ~np.isfinite(values)
    for yi, ei, fi in zip(*np.nonzero(bad)):
        loc = f"value[{panel.years[yi]},{panel.entities[ei]},{panel.features[fi]}]"
        issues.append(("error", loc, "non-finite value"))
    neg = np.isfinite(values) & (values < 0)
    for yi, ei, fi in zip(*np.nonzero(neg)):
        loc = f"value[{panel.years[yi]},{panel.entities[ei]},{panel.features[fi]}]"
        issues.append(("error", loc, f"negative value {values[yi, ei, fi]}"))
    finite = np.where(np.isfinite(values), values, 0.0)
    for fi, feat in enumerate(panel.features):
        if not finite[:, :, fi].any():
            issues.append(("warning", f"feature[{feat}]", "zero for all years and entities"))
    for ei, entity in enumerate(panel.entities):
        if not finite[:, ei, :].any():
            issues.append(("warning", f"entity[{entity}]", "zero for all years and features"))
    ok = not any(sev == "error" for sev, _, _ in issues)
    return ValidationReport(ok=ok, issues=tuple(issues))


def _jsonable(record) -> dict | list:
    if hasattr(record, "to_dict"):
        return record.to_dict()
    if isinstance(record, (dict, list)):
        return record
    raise TypeError(f"cannot serialize {type(record).__name__}: expected to_dict(), dict, or list")


def save_report(record, path: str | Path) -> None:
    """Write any report record as round-trippable JSON (UTF-8, sorted keys)."""
    payload = json.dumps(_jsonable(record), sort_keys=True, indent=2, allow_nan=True)
    Path(path).write_text(payload + "\n", encoding="utf-8")


def load_report(path: str | Path):
    """Read back a JSON report written by save_report."""
    return json.loads(Path(path).read_text(encoding="utf-8"))


def save_panel_long(panel: EnergyPanel, path: str | Path) -> None:
    """Write a panel in the long CSV layout (all cells, including zeros)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(LONG_HEADER)
        for yi, year in enumerate(panel.years):
            for ei, entity in enumerate(panel.entities):
                for fi, feat in enumerate(panel.features):
                    writer.writerow([year, entity, feat, repr(float(panel.values[yi, ei, fi]))])
