"""Grid planning, method settings, seed derivation, sweep execution, outputs."""

import csv
import json

import numpy as np
import pytest

from labelvar.errors import ConfigurationError
from labelvar.recipes import Boundary2DConfig, DefC1Config
from labelvar.sweep import (
    DEFAULT_SEEDS,
    RAW_COLUMNS,
    SweepConfig,
    _derive_seeds,
    aggregate_and_write,
    method_settings,
    plan_grid,
    run_sweep,
)
from labelvar.training import TrainConfig


def tiny_sweep_cfg(method="weight_decay", grid=(0.0, 0.1), seeds=(0, 1)):
    return SweepConfig(
        method=method, grid=grid, experiment="defC1",
        train=TrainConfig(epochs=1, batch_size=500, learning_rate=5e-3),
        data=DefC1Config(n=500, test_n=500),
        seeds=seeds, master_seed=7,
    )


class TestPlanGrid:
    def test_endpoints_and_count(self):
        grid = plan_grid("weight_decay", 0.0, 0.1, 20)
        assert len(grid) == 20
        assert grid[0] == 0.0 and grid[-1] == pytest.approx(0.1)
        assert np.allclose(np.diff(grid), grid[1] - grid[0])

    def test_single_point(self):
        assert plan_grid("mixup", 2.0, 8.0, 1) == [2.0]

    def test_validation(self):
        with pytest.raises(ConfigurationError):
            plan_grid("dropout", 0, 1, 5)
        with pytest.raises(ConfigurationError):
            plan_grid("mixup", 1.0, 0.0, 5)
        with pytest.raises(ConfigurationError):
            plan_grid("mixup", 0.0, 1.0, 0)


class TestMethodSettings:
    def test_weight_decay_uses_plain_ce(self):
        spec, wd = method_settings("weight_decay", 0.05)
        assert spec.kind == "ce" and wd == 0.05

    def test_label_smoothing(self):
        spec, wd = method_settings("label_smoothing", 0.3)
        assert spec.kind == "ls" and spec.alpha == 0.3 and wd == 0.0

    def test_mixup_beta_parameters(self):
        spec, wd = method_settings("mixup", 4.0)
        assert spec.kind == "mixup" and wd == 0.0
        assert spec.mixing.a == 4.0 and spec.mixing.b == 4.0

    @pytest.mark.parametrize("method", ["label_smoothing", "mixup"])
    def test_zero_value_is_erm(self, method):
        spec, wd = method_settings(method, 0.0)
        assert spec.kind == "ce" and wd == 0.0


class TestSeedDerivation:
    def test_deterministic(self):
        assert _derive_seeds(1, 2, 3, 44) == _derive_seeds(1, 2, 3, 44)

    def test_injective_over_cells(self):
        seen = set()
        for vi in range(4):
            for si in range(4):
                triple = _derive_seeds(0, vi, si, DEFAULT_SEEDS[si % 5])
                assert triple not in seen
                seen.add(triple)

    def test_master_seed_changes_streams(self):
        assert _derive_seeds(0, 0, 0, 11) != _derive_seeds(1, 0, 0, 11)


class TestSweepConfig:
    def test_validation(self):
        with pytest.raises(ConfigurationError):
            tiny_sweep_cfg(method="dropout")
        with pytest.raises(ConfigurationError):
            tiny_sweep_cfg(grid=())
        with pytest.raises(ConfigurationError):
            tiny_sweep_cfg(seeds=())

    def test_hash_is_stable_and_sensitive(self):
        a = tiny_sweep_cfg()
        b = tiny_sweep_cfg()
        c = tiny_sweep_cfg(grid=(0.0, 0.2))
        assert a.config_hash() == b.config_hash()
        assert a.config_hash() != c.config_hash()

    def test_to_dict_names_data_type(self):
        assert tiny_sweep_cfg().to_dict()["data_type"] == "DefC1Config"


class TestRunSweep:
    def test_cells_cover_grid_x_seeds(self):
        result = run_sweep(tiny_sweep_cfg(), parallelism=1)
        assert len(result.cells) == 4
        assert all(c.status == "ok" for c in result.cells)
        pairs = {(c.value_index, c.seed_index) for c in result.cells}
        assert pairs == {(0, 0), (0, 1), (1, 0), (1, 1)}

    def test_deterministic_across_runs(self):
        import dataclasses
        a = run_sweep(tiny_sweep_cfg(), parallelism=1)
        b = run_sweep(tiny_sweep_cfg(), parallelism=1)
        # NaN-aware comparison (unused metrics are NaN by convention).
        np.testing.assert_equal([dataclasses.asdict(c) for c in a.cells],
                                [dataclasses.asdict(c) for c in b.cells])

    def test_aggregate_means(self):
        result = run_sweep(tiny_sweep_cfg(), parallelism=1)
        agg = result.aggregate("test_error")
        for vi, (value, mean, std) in enumerate(agg):
            vals = [c.test_error for c in result.cells if c.value_index == vi]
            assert mean == pytest.approx(np.mean(vals))
            assert std == pytest.approx(np.std(vals))

    def test_failed_cell_recorded_not_raised(self):
        # 2^3 = 8 background colors cannot cover 10 classes.
        from labelvar.recipes import ColoredMulticlassConfig
        cfg = SweepConfig(
            method="weight_decay", grid=(0.0,), experiment="colored_multiclass",
            train=TrainConfig(epochs=1, batch_size=16, learning_rate=1e-2),
            data=ColoredMulticlassConfig(max_intensity=2, hidden=4,
                                         standin_n=50, standin_test_n=50),
            seeds=(0,),
        )
        result = run_sweep(cfg, parallelism=1)
        [cell] = result.cells
        assert cell.status == "failed"
        assert cell.error
        assert np.isnan(cell.test_error)
        value, mean, std = result.aggregate("test_error")[0]
        assert np.isnan(mean)

    def test_parallelism_validated(self):
        with pytest.raises(ConfigurationError):
            run_sweep(tiny_sweep_cfg(), parallelism=0)


class TestAggregateAndWrite:
    def test_outputs(self, tmp_path):
        result = run_sweep(tiny_sweep_cfg(), parallelism=1)
        manifest = aggregate_and_write(result, tmp_path / "out")
        assert manifest["cells"] == 4 and manifest["failed_cells"] == 0
        assert manifest["config_hash"] == result.config.config_hash()
        # JSON round trip (tuples become lists) must preserve the manifest.
        assert json.load(open(tmp_path / "out" / "manifest.json")) == \
            json.loads(json.dumps(manifest))

        with open(tmp_path / "out" / "raw.csv") as f:
            rows = list(csv.reader(f))
        assert rows[0] == RAW_COLUMNS
        assert len(rows) == 1 + 4
        # 17-significant-digit round trip of the raw metric values.
        by_cell = {(int(r[0]), int(r[2])): r for r in rows[1:]}
        for c in result.cells:
            assert float(by_cell[(c.value_index, c.seed_index)][5]) == c.test_error

        with open(tmp_path / "out" / "aggregate.csv") as f:
            arows = list(csv.reader(f))
        assert arows[0][0] == "value"
        assert len(arows) == 1 + len(result.config.grid)
        agg = result.aggregate("test_error")
        assert float(arows[1][1]) == agg[0][1]
