import json
import math

import numpy as np
import pytest

import ibhm
from ibhm.dataset import DatasetConfig, record_seed, scenario_grid
from ibhm.errors import DataError

from conftest import simulate_cached


def small_config(**kw):
    bridges = tuple(b for b in ibhm.paper_bridges() if b.id == "B1")
    defaults = dict(bridges=bridges, reductions=(0.5,), locations=(0.375, 0.625),
                    trials=1, noise_std=0.0, dt=1e-3, base_seed=3)
    defaults.update(kw)
    return DatasetConfig(**defaults)


class TestGrid:
    def test_default_is_two_thousand(self):
        assert DatasetConfig().n_records == 2000
        assert len(scenario_grid(DatasetConfig())) == 2000

    def test_single_cell_counting(self):
        config = small_config(locations=tuple(k / 8 for k in range(1, 8)))
        assert config.n_records == 8
        assert len(scenario_grid(config)) == 8

    def test_undamaged_rows(self):
        grid = scenario_grid(small_config())
        undamaged = [sc for stem, sc in grid if "undamaged" in stem]
        assert len(undamaged) == 1
        manifest = undamaged[0].to_manifest()
        assert manifest["R_s"] == 0.0
        assert manifest["x_s"] is None

    def test_seeds_distinct(self):
        grid = scenario_grid(DatasetConfig(trials=2))
        seeds = [sc.seed for _, sc in grid]
        assert len(set(seeds)) == len(seeds)

    def test_seed_stability(self):
        # frozen: derivation must never change silently across versions
        assert record_seed(0, "B1", 0.5, "x0500", 0) == record_seed(0, "B1", 0.5, "x0500", 0)
        assert record_seed(0, "B1", 0.5, "x0500", 0) != record_seed(0, "B1", 0.5, "x0500", 1)
        assert record_seed(0, "B1", 0.5, "x0500", 0) != record_seed(1, "B1", 0.5, "x0500", 0)


class TestRecordIO:
    def test_roundtrip_bit_exact(self, tmp_path):
        record = simulate_cached("B1", 0.375, 0.5, noise_std=math.sqrt(0.1), seed=9)
        path = tmp_path / "r.csv"
        ibhm.write_record(record, path)
        back = ibhm.load_record(path)
        assert np.array_equal(back.a, record.a)
        assert np.array_equal(back.t, record.t)
        assert back.scenario.to_manifest() == record.scenario.to_manifest()

    def test_rewrite_identical_bytes(self, tmp_path):
        record = simulate_cached("B1", 0.375, 0.5, noise_std=math.sqrt(0.1), seed=9)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        ibhm.write_record(record, a)
        ibhm.write_record(record, b)
        assert a.read_bytes() == b.read_bytes()
        assert a.with_suffix(".json").read_bytes() == b.with_suffix(".json").read_bytes()

    def test_missing_record(self, tmp_path):
        with pytest.raises(DataError):
            ibhm.load_record(tmp_path / "nope.csv")


class TestGenerate:
    def test_in_memory(self):
        records = ibhm.generate_dataset(small_config(locations=(0.5,)))
        assert len(records) == 2
        assert all(isinstance(r, ibhm.SignalRecord) for r in records)

    def test_to_disk_and_index(self, tmp_path):
        config = small_config()
        stems = ibhm.generate_dataset(config, out_dir=tmp_path / "d")
        assert len(stems) == 3
        index = ibhm.load_index(tmp_path / "d")
        assert len(index) == 3
        loaded = dict(ibhm.iter_records(tmp_path / "d"))
        assert set(loaded) == set(stems)
        undamaged = [e for e in index if e["R_s"] == 0.0]
        assert len(undamaged) == 1 and undamaged[0]["loc_frac"] is None

    def test_refuses_overwrite(self, tmp_path):
        config = small_config(locations=(0.5,))
        ibhm.generate_dataset(config, out_dir=tmp_path / "d")
        with pytest.raises(DataError):
            ibhm.generate_dataset(config, out_dir=tmp_path / "d")
        ibhm.generate_dataset(config, out_dir=tmp_path / "d", overwrite=True)

    def test_parallel_matches_serial(self, tmp_path):
        config = small_config(locations=(0.5,))
        ibhm.generate_dataset(config, out_dir=tmp_path / "serial")
        ibhm.generate_dataset(config, out_dir=tmp_path / "par", jobs=2)
        for stem in [e["stem"] for e in ibhm.load_index(tmp_path / "serial")]:
            a = (tmp_path / "serial" / f"{stem}.csv").read_bytes()
            b = (tmp_path / "par" / f"{stem}.csv").read_bytes()
            assert a == b

    def test_subset_generation(self, tmp_path):
        config = small_config()
        all_stems = [s for s, _ in scenario_grid(config)]
        chosen = all_stems[:1]
        records = ibhm.generate_dataset(config, subset=chosen)
        assert len(records) == 1
