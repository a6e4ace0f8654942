import numpy as np
import pytest

from sclab.errors import ConfigError
from sclab.experiments import aggregate, split_timing, stats_csv, trial_seeds, validate_config


class TestConfig:
    def test_defaults(self):
        cfg = validate_config({})
        assert cfg.attack == "dsa-timing"
        assert cfg.get("samples", "count") == 16384
        assert cfg.get("lattice", "block_size") == 20

    def test_attack_defaults(self):
        cfg = validate_config({"experiment": {"attack": "ecdsa-signed"}})
        assert cfg.get("experiment", "group") == "toy_curve127"
        assert cfg.get("samples", "mode") == "RAW"
        assert validate_config({"experiment": {"attack": "rsa"}}).noise_model().miss_leading_max == 4

    def test_coercion(self):
        cfg = validate_config({"lattice": {"length_filter": "off", "d": "0x10"}, "noise": {"flip_rate": "0.01"}})
        assert cfg.get("lattice", "length_filter") is False
        assert cfg.get("lattice", "d") == 16
        assert cfg.noise_model().flip_rate == 0.01

    @pytest.mark.parametrize("raw,field", [
        ({"lattice": {"colour": "1"}}, "lattice.colour"),
        ({"bogus": {}}, "bogus"),
        ({"experiment": {"attack": "nope"}}, "experiment.attack"),
        ({"experiment": {"trials": "0"}}, "experiment.trials"),
        ({"experiment": {"seed": str(1 << 64)}}, "experiment.seed"),
        ({"noise": {"preset": "loud"}}, "noise.preset"),
        ({"noise": {"flip_rate": "2"}}, "noise"),
        ({"samples": {"mode": "SIDEWAYS"}}, "samples.mode"),
        ({"experiment": {"group": "no_such_group"}}, "experiment.group"),
    ])
    def test_rejects(self, raw, field):
        with pytest.raises(ConfigError) as err:
            validate_config(raw)
        assert err.value.field == field

    def test_digest_and_overrides(self):
        a = validate_config({})
        b = a.with_overrides(seed=5)
        assert a.digest() != b.digest() and b.get("experiment", "seed") == 5
        assert validate_config({}).digest() == a.digest()


def test_trial_seeds():
    s = trial_seeds(1, 5)
    assert s == trial_seeds(1, 5) and len(set(s)) == 5
    assert s[:3] == trial_seeds(1, 3)
    assert s != trial_seeds(2, 5)


class TestAggregate:
    def test_successful_runs_only(self):
        recs = [{"attack": "x", "N": 10, "dim": 4, "trial": i, "success": i % 4 != 0, "lattices": v}
                for i, v in enumerate([100, 1, 2, 3, 100, 5, 8, 13])]
        timings = [{"attack": "x", "trial": i, "seconds": 60.0 * (i + 1)} for i in range(8)]
        (row,) = aggregate(recs, timings)
        ok = np.array([1, 2, 3, 5, 8, 13])
        assert (row.runs, row.successes, row.ratio) == (8, 6, 0.75)
        assert (row.min, row.max, row.median) == (1, 13, np.median(ok))
        assert row.mean == pytest.approx(ok.mean())
        assert row.stdev == pytest.approx(ok.std(ddof=1))
        assert row.minutes == np.median([2, 3, 4, 6, 7, 8])

    def test_csv(self):
        recs = [{"attack": "x", "N": 10, "dim": 4, "trial": 0, "success": False, "lattices": 3}]
        (row,) = aggregate(recs)
        assert row.min is None
        assert stats_csv([row]).splitlines()[1] == "x,10,4,1,,,,,,,0.00"

    def test_split_timing(self):
        clean, t = split_timing([{"attack": "x", "trial": 0, "success": True, "_seconds": 1.23456}])
        assert clean == [{"attack": "x", "trial": 0, "success": True}]
        assert t == [{"trial": 0, "attack": "x", "seconds": 1.235}]
