"""Scenario files and campaign artifacts.

Scenarios are YAML with strict keys: anything unknown or missing raises
ConfigError so a typo cannot silently fall back to a default. Campaign
output is deterministic — JSON lines and CSVs are written with sorted keys
and fixed column orders so identical runs produce identical bytes. The one
exception is ``timing.csv``: wall-clock measurements live there and nowhere
else.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import yaml

from .airspace import ConfigError, GridConfig, VertiportSpec
from .sim import CampaignResult, ScenarioConfig, day_rows

__all__ = [
    "SCHEMA_VERSION",
    "load_scenario",
    "read_campaign_records",
    "read_records",
    "save_scenario",
    "scenario_from_dict",
    "scenario_to_dict",
    "write_campaign",
    "write_days_csv",
    "write_records",
    "write_summary",
    "write_timing_csv",
]

SCHEMA_VERSION = 1

_SCENARIO_KEYS = {
    "schema_version", "name", "grid", "demand_per_hub_per_hour", "days",
    "periods_per_day", "cadence_steps", "flexibility", "alpha", "gamma",
    "seed",
}
_SCENARIO_REQUIRED = {"schema_version", "name", "grid",
                      "demand_per_hub_per_hour"}
_GRID_KEYS = {
    "rows", "cols", "vertiports", "connectivity", "cell_size_km",
    "horizon_steps", "step_minutes", "sector_capacity", "ring_capacity",
    "capacity_overrides",
}
_GRID_REQUIRED = {"rows", "cols", "vertiports"}
_VERTIPORT_KEYS = {"row", "col", "kind", "ops_capacity"}

DAY_COLUMNS = ("mode", "day", "served", "unserved_end", "total_tdc",
               "mean_tdc", "deconfliction_periods", "day_fairness",
               "conflict_cells", "dropped")


def _check_keys(data: Mapping, allowed: set[str], required: set[str],
                what: str) -> None:
    if not isinstance(data, Mapping):
        raise ConfigError(f"{what} must be a mapping, got {type(data).__name__}")
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"unknown {what} keys: {', '.join(unknown)}")
    missing = sorted(required - set(data))
    if missing:
        raise ConfigError(f"missing {what} keys: {', '.join(missing)}")


def scenario_to_dict(config: ScenarioConfig) -> dict:
    grid = asdict(config.grid)
    grid["vertiports"] = [asdict(vp) for vp in config.grid.vertiports]
    grid["capacity_overrides"] = [list(row)
                                  for row in config.grid.capacity_overrides]
    return {
        "schema_version": SCHEMA_VERSION,
        "name": config.name,
        "grid": grid,
        "demand_per_hub_per_hour": config.demand_per_hub_per_hour,
        "days": config.days,
        "periods_per_day": config.periods_per_day,
        "cadence_steps": config.cadence_steps,
        "flexibility": config.flexibility,
        "alpha": config.alpha,
        "gamma": config.gamma,
        "seed": config.seed,
    }


def scenario_from_dict(data: Mapping) -> ScenarioConfig:
    _check_keys(data, _SCENARIO_KEYS, _SCENARIO_REQUIRED, "scenario")
    if data["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported schema_version {data['schema_version']!r}; "
            f"this build reads version {SCHEMA_VERSION}")
    raw_grid = data["grid"]
    _check_keys(raw_grid, _GRID_KEYS, _GRID_REQUIRED, "grid")
    vertiports = []
    for raw_vp in raw_grid["vertiports"]:
        _check_keys(raw_vp, _VERTIPORT_KEYS, _VERTIPORT_KEYS, "vertiport")
        vertiports.append(VertiportSpec(**raw_vp))
    grid_kwargs = {k: v for k, v in raw_grid.items() if k != "vertiports"}
    overrides = grid_kwargs.pop("capacity_overrides", [])
    grid = GridConfig(
        vertiports=tuple(vertiports),
        capacity_overrides=tuple(
            (str(rid), int(t), int(cap)) for rid, t, cap in overrides),
        **grid_kwargs,
    )
    scenario_kwargs = {k: v for k, v in data.items()
                       if k not in ("schema_version", "grid")}
    return ScenarioConfig(grid=grid, **scenario_kwargs)


def load_scenario(path: str | Path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as handle:
        data = yaml.safe_load(handle)
    if data is None:
        raise ConfigError(f"{path} is empty")
    return scenario_from_dict(data)


def save_scenario(path: str | Path, config: ScenarioConfig) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        yaml.safe_dump(scenario_to_dict(config), handle, sort_keys=True)


def write_records(path: str | Path, records: Iterable[Mapping]) -> None:
    """One JSON object per line, keys sorted for reproducible bytes."""
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, sort_keys=True))
            handle.write("\n")


def read_records(path: str | Path) -> list[dict]:
    records = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def _write_csv(path: str | Path, columns: Sequence[str],
               rows: Iterable[Mapping]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow(["" if row.get(col) is None else row.get(col)
                             for col in columns])


def write_days_csv(path: str | Path, rows: Sequence[Mapping]) -> None:
    _write_csv(path, DAY_COLUMNS, rows)


def write_timing_csv(path: str | Path, rows: Sequence[Mapping]) -> None:
    """Wall-clock per period. Keep this file out of any byte comparison."""
    head = ["mode", "day", "period"]
    stages = sorted({key for row in rows for key in row} - set(head))
    _write_csv(path, head + stages, rows)


def write_summary(path: str | Path, summary: Mapping) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(summary, handle, sort_keys=True, indent=2)
        handle.write("\n")


def write_campaign(out_dir: str | Path, campaign: CampaignResult) -> Path:
    """Full artifact tree::

        out/
          scenario.yaml     the exact configuration that ran
          summary.json      campaign metrics (derived from records)
          days.csv          per-day aggregates
          timing.csv        wall-clock only; excluded from reproducibility
          <mode>/periods.jsonl
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = campaign.records()
    for mode, rows in records.items():
        mode_dir = out / mode
        mode_dir.mkdir(exist_ok=True)
        write_records(mode_dir / "periods.jsonl", rows)
    all_days = []
    for mode in sorted(records):
        all_days.extend(day_rows(records[mode]))
    write_days_csv(out / "days.csv", all_days)
    write_summary(out / "summary.json", campaign.summary())
    write_timing_csv(out / "timing.csv", campaign.timing_rows())
    save_scenario(out / "scenario.yaml", campaign.config)
    return out


def read_campaign_records(out_dir: str | Path) -> dict[str, list[dict]]:
    """Reload per-mode period records from a campaign directory."""
    out = Path(out_dir)
    records: dict[str, list[dict]] = {}
    for child in sorted(out.iterdir()):
        periods = child / "periods.jsonl"
        if child.is_dir() and periods.exists():
            records[child.name] = read_records(periods)
    if not records:
        raise ConfigError(f"no <mode>/periods.jsonl files under {out}")
    return records
