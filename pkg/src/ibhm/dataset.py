"""Batch traverse generation and the on-disk record format.

Layout: ``<root>/<bridge_id>/<Rs-label>/<loc-label>/<trial>.csv`` with a
sibling ``.json`` manifest per record and a single ``index.json`` at the
root. CSVs carry full double precision so regeneration is byte-identical.
"""
from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DataError, ValidationError
from .fem import SimConfig, simulate_vbi, snap_damage
from .model import (BridgeSpec, DamageSpec, ScenarioSpec, SignalRecord,
                    VehicleSpec, paper_bridges, paper_vehicle)

DEFAULT_NOISE_STD = math.sqrt(0.1)   # noise variance 0.1 N^2 per node per step
DEFAULT_REDUCTIONS = (0.7, 0.6, 0.5, 0.4, 0.3)
DEFAULT_LOCATIONS = tuple(k / 8 for k in range(1, 8))


@dataclass(frozen=True)
class DatasetConfig:
    """Grid of scenarios: bridges x reductions x (locations + undamaged) x trials."""

    bridges: tuple[BridgeSpec, ...] = field(default_factory=paper_bridges)
    vehicle: VehicleSpec = field(default_factory=paper_vehicle)
    reductions: tuple[float, ...] = DEFAULT_REDUCTIONS
    locations: tuple[float, ...] = DEFAULT_LOCATIONS   # damage centres as x_s/L
    trials: int = 10
    noise_std: float = DEFAULT_NOISE_STD
    dt: float = 1e-3
    target_elem_len: float = 0.6     # damage realises as one element of this size
    base_seed: int = 0

    @property
    def n_records(self) -> int:
        return len(self.bridges) * len(self.reductions) * (len(self.locations) + 1) * self.trials


def record_seed(base_seed: int, bridge_id: str, reduction: float,
                loc_label: str, trial: int) -> int:
    """Stable 63-bit seed from the scenario coordinates."""
    key = f"{base_seed}|{bridge_id}|{reduction:.6f}|{loc_label}|{trial}"
    digest = hashlib.sha256(key.encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def _loc_label(loc_frac: Optional[float]) -> str:
    return "undamaged" if loc_frac is None else f"x{round(loc_frac * 1000):04d}"


def _rs_label(reduction: float) -> str:
    return f"Rs{round(reduction * 100):02d}"


def scenario_grid(config: DatasetConfig) -> list[tuple[str, ScenarioSpec]]:
    """All (relative path stem, scenario) pairs in canonical order."""
    out = []
    for bridge in config.bridges:
        elem_len = bridge.L / round(bridge.L / config.target_elem_len)
        for reduction in config.reductions:
            for loc in list(config.locations) + [None]:
                loc_label = _loc_label(loc)
                if loc is None:
                    damage = DamageSpec.undamaged(elem_len)
                else:
                    damage = snap_damage(bridge, loc, reduction,
                                         config.target_elem_len)
                for trial in range(config.trials):
                    seed = record_seed(config.base_seed, bridge.id, reduction,
                                       loc_label, trial)
                    scenario = ScenarioSpec(bridge=bridge, vehicle=config.vehicle,
                                            damage=damage, noise_std=config.noise_std,
                                            dt=config.dt, seed=seed, trial=trial)
                    stem = f"{bridge.id}/{_rs_label(reduction)}/{loc_label}/{trial:02d}"
                    out.append((stem, scenario))
    return out


def write_record(record: SignalRecord, csv_path: Path) -> None:
    csv_path = Path(csv_path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    rows = np.column_stack([record.t, record.a])
    np.savetxt(csv_path, rows, delimiter=",", header="t,a", comments="", fmt="%.17g")
    manifest = record.scenario.to_manifest()
    csv_path.with_suffix(".json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def load_record(csv_path: Path) -> SignalRecord:
    csv_path = Path(csv_path)
    if not csv_path.exists():
        raise DataError(f"missing record {csv_path}")
    manifest_path = csv_path.with_suffix(".json")
    if not manifest_path.exists():
        raise DataError(f"missing manifest {manifest_path}")
    scenario = ScenarioSpec.from_manifest(json.loads(manifest_path.read_text()))
    rows = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    return SignalRecord(scenario=scenario, t=rows[:, 0], a=rows[:, 1])


def _simulate_one(args) -> str:
    stem, scenario, root, sim_config = args
    record = simulate_vbi(scenario, sim_config)
    write_record(record, Path(root) / f"{stem}.csv")
    return stem


def generate_dataset(config: DatasetConfig, out_dir: Optional[Path] = None,
                     overwrite: bool = False, jobs: int = 1,
                     sim_config: Optional[SimConfig] = None,
                     subset: Optional[Iterable[str]] = None):
    """Simulate the scenario grid.

    With ``out_dir`` set, writes one CSV+JSON pair per record plus an
    ``index.json``, refusing to clobber an existing index unless
    ``overwrite``; returns the list of record stems. Without ``out_dir``
    returns the records in memory (small grids only).
    """
    if sim_config is None:
        sim_config = SimConfig(target_elem_len=config.target_elem_len)
    grid = scenario_grid(config)
    if subset is not None:
        wanted = set(subset)
        grid = [(stem, sc) for stem, sc in grid if stem in wanted]
    if out_dir is None:
        return [simulate_vbi(sc, sim_config) for _, sc in grid]

    root = Path(out_dir)
    index_path = root / "index.json"
    if index_path.exists() and not overwrite:
        raise DataError(f"{index_path} exists; pass overwrite to regenerate")
    root.mkdir(parents=True, exist_ok=True)

    tasks = [(stem, sc, str(root), sim_config) for stem, sc in grid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(_simulate_one, tasks, chunksize=8))
    else:
        for task in tasks:
            _simulate_one(task)

    entries = [{"stem": stem,
                "bridge": sc.bridge.id,
                "R_s": sc.damage.R_s,
                "x_s": None if sc.damage.R_s == 0 else sc.damage.x_s,
                "loc_frac": None if sc.damage.R_s == 0 else sc.damage.x_s / sc.bridge.L,
                "level": _level_of(stem),
                "trial": sc.trial,
                "seed": sc.seed}
               for stem, sc in grid]
    index_path.write_text(json.dumps(
        {"n_records": len(entries), "records": entries}, indent=2, sort_keys=True) + "\n")
    return [stem for stem, _ in grid]


def _level_of(stem: str) -> float:
    """Configured reduction level encoded in the path (undamaged rows keep it)."""
    part = stem.split("/")[1]
    return int(part[2:]) / 100.0


def load_index(root: Path) -> list[dict]:
    index_path = Path(root) / "index.json"
    if not index_path.exists():
        raise DataError(f"no index.json under {root}")
    return json.loads(index_path.read_text())["records"]


def iter_records(root: Path, stems: Optional[Sequence[str]] = None):
    """Yield (stem, SignalRecord) from a dataset directory."""
    root = Path(root)
    if stems is None:
        stems = [e["stem"] for e in load_index(root)]
    for stem in stems:
        yield stem, load_record(root / f"{stem}.csv")
