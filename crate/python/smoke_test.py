"""Smoke test for the numvar Python extension.

Build and install first, e.g. ``maturin build --release -m crates/py/Cargo.toml``
followed by ``pip install`` of the wheel, then run ``python python/smoke_test.py``.
"""

import json
import math

import numvar


def main():
    pts = numvar.PointSet([0.1, 0.2, 0.9])
    assert len(pts) == 3
    assert pts.count("3/8", 0.0) == 2

    half = numvar.PointSet.dilation("linear", 100, "rat:1/2")
    assert half.variance("1/4") == 625.0
    assert half.variance("1/4", route="sweep") == 625.0

    sq = numvar.PointSet.dilation("poly:0,0,1", 2000, "golden")
    assert sq.variance("2^-6") == sq.variance("2^-6", "sweep")

    d = numvar.decompose("15/64")
    assert d["levels"] == [(3, 0), (4, 2), (5, 6), (6, 14)]
    assert d["scalar_identity"]

    n = 60
    assert numvar.additive_energy("linear", n) == n * (2 * n * n + 1) // 3
    table = numvar.rep_table("poly:0,0,1", 1, 30)
    assert sum(r for _, r in table) == 30 * 29 // 2
    assert numvar.gcd_sum("poly:0,0,1", 50) > 0
    assert numvar.congruence_solution_count([1, 0, 1], 13) == 2
    count, rad, bound, ok = numvar.divisibility_check([0, 1, 0, 1], 100, 12)
    assert ok and rad == 6

    try:
        numvar.additive_energy("linear", 5000, budget_pairs=10)
    except numvar.BudgetError as e:
        assert "budget" in str(e)
    else:
        raise AssertionError("expected BudgetError")

    vs = numvar.random_variances(500, "1/8", 40, seed=3)
    mean = sum(vs) / len(vs)
    assert abs(mean - 500 * 0.125 * 0.875) < 20

    path = numvar.bridge_path(16, 1, 0)
    assert len(path) == 17 and path[0] == 0.0 and path[-1] == 0.0
    fs = numvar.bridge_functionals(256, "1/8", 1, 200, seed=5)
    assert abs(sum(fs) / len(fs) - 0.109375) < 0.02

    maxima = numvar.kronecker_max("golden", "1/4,1/2,3/4", 1000)
    assert all(v <= 9 for _, v in maxima)
    assert (3, 5) in numvar.convergents("golden", 5)

    cfg = numvar.ExperimentConfig(
        "sequence = poly:0,0,1\nalphas = random:2\nn_grid = 10, 40\ns_grid = 1/4\nseed = 7\n"
    )
    csv = cfg.run()
    lines = csv.strip().splitlines()
    assert lines[0] == "N,S_num,S_den,alpha_hex,V,ratio" and len(lines) == 5
    doc = json.loads(cfg.run("json"))
    assert doc["metadata"]["config_hash"] == cfg.hash()
    assert all(math.isfinite(r["v"]) for r in doc["rows"])

    print("numvar smoke test: ok")


if __name__ == "__main__":
    main()
