"""Smoke test for the pycpl extension module.

Uses an installed pycpl (``maturin develop -m crates/python/Cargo.toml``)
when there is one; otherwise loads the library cargo left in target/.
"""

import importlib.machinery
import importlib.util
import json
import math
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    try:
        import pycpl

        return pycpl
    except ImportError:
        pass
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libpycpl.so"
        if lib.exists():
            loader = importlib.machinery.ExtensionFileLoader("pycpl", str(lib))
            spec = importlib.util.spec_from_loader("pycpl", loader)
            module = importlib.util.module_from_spec(spec)
            loader.exec_module(module)
            return module
    sys.exit("pycpl not found: run `cargo build -p cpl-python --release` first")


def main():
    cpl = load()

    assert cpl.auc([0.9, 0.8, 0.3], [True, True, False]) == 1.0
    assert cpl.average_precision([0.2, 0.9], [True, False]) == 0.5
    value, vacuous = cpl.error_bound(0.2237, 0.0669)
    assert abs(value - 0.5812) < 1e-4 and not vacuous
    assert cpl.select_top_k([0.9, 0.2, 0.8], 2) == ([0, 2], 0.8)

    edges, labels = cpl.generate_sbm([3, 3], 1.0, 0.0, 0)
    assert sorted(edges) == [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)]
    assert labels == [0, 0, 0, 1, 1, 1]

    try:
        cpl.Config.from_json("{}")
    except ValueError:
        pass
    else:
        raise AssertionError("an empty config must be rejected")

    cfg = cpl.Config.load(str(ROOT / "configs" / "node_sbm.json"))
    cfg.seeds = [0]
    cfg.cap = cfg.k * 3
    report = cpl.run(cfg, "cautious")
    assert report.schema_version == cpl.SCHEMA_VERSION
    assert report.seeds == [0]
    mean, std = report.metric("test_accuracy")
    assert 0.0 <= mean <= 1.0 and std is None
    (seed, err, bound, holds), = report.bounds()
    assert holds == (err <= bound)

    again = cpl.Report.from_json(report.to_json())
    assert again.to_json() == report.to_json()
    assert json.loads(report.to_json())["schema_version"] == cpl.SCHEMA_VERSION
    rows = report.series_csv().strip().splitlines()
    assert rows[0].startswith("seed,t,") and len(rows) > 1
    assert all(not math.isnan(float(r.split(",")[7])) for r in rows[1:])

    print(f"pycpl smoke test ok: {cfg!r}, test accuracy {mean:.3f}, bound {bound:.3f}")


if __name__ == "__main__":
    main()
