"""Fingerprint localizers: weighting rules, database handling, error CDF."""

import numpy as np
import pytest

from rfmap.completion import TubeSampleSet
from rfmap.localize import (
    FingerprintDB,
    LocalizerConfig,
    build_db,
    empirical_cdf,
    kernel_locate,
    knn_locate,
    localization_error,
    read_errors_csv,
    write_errors_csv,
)
from rfmap.simulate import AccessPoint, FloorPlan, gen_rss


def two_point_db():
    # fingerprint distances to query [1.0] come out 1 and 3
    return FingerprintDB(
        coords=np.array([[0.0, 0.0], [10.0, 0.0]]),
        prints=np.array([[0.0], [4.0]]),
    )


# --------------------------------------------------------------- estimators


def test_knn_hand_value():
    est = knn_locate(two_point_db(), [1.0], LocalizerConfig(k=2, d0=0.0))
    # weights 1 and 1/3: x_hat = (10/3) / (4/3)
    assert abs(est[0] - 2.5) <= 1e-12
    assert abs(est[1]) <= 1e-12


def test_kernel_hand_value():
    est = kernel_locate(two_point_db(), [1.0], LocalizerConfig(h=2, d0=0.0))
    # weights 1 and 1/9: x_hat = (10/9) / (10/9)
    assert abs(est[0] - 1.0) <= 1e-12


def test_exact_match_is_authoritative_at_zero_offset():
    db = two_point_db()
    cfg = LocalizerConfig(k=2, h=2, d0=0.0)
    assert knn_locate(db, [4.0], cfg) == (10.0, 0.0)
    assert kernel_locate(db, [4.0], cfg) == (10.0, 0.0)


def test_identical_fingerprints_average_positions():
    db = FingerprintDB(
        coords=np.array([[0.0, 0.0], [4.0, 2.0]]),
        prints=np.array([[7.0], [7.0]]),
    )
    est = knn_locate(db, [7.0], LocalizerConfig(k=2, d0=0.0))
    assert est == (2.0, 1.0)


def test_k_one_snaps_to_nearest():
    est = knn_locate(two_point_db(), [1.0], LocalizerConfig(k=1))
    assert est == (0.0, 0.0)


def test_estimate_stays_in_reference_bounding_box():
    rng = np.random.default_rng(0)
    db = FingerprintDB(coords=rng.uniform(0, 30, (40, 2)),
                       prints=rng.standard_normal((40, 6)))
    cfg = LocalizerConfig(k=7, h=11)
    for _ in range(20):
        q = rng.standard_normal(6) * 2
        for est in (knn_locate(db, q, cfg), kernel_locate(db, q, cfg)):
            assert db.coords[:, 0].min() - 1e-9 <= est[0] <= db.coords[:, 0].max() + 1e-9
            assert db.coords[:, 1].min() - 1e-9 <= est[1] <= db.coords[:, 1].max() + 1e-9


def test_record_order_does_not_matter():
    rng = np.random.default_rng(1)
    coords = rng.uniform(0, 10, (25, 2))
    prints = rng.standard_normal((25, 4))
    perm = rng.permutation(25)
    a = FingerprintDB(coords, prints)
    b = FingerprintDB(coords[perm], prints[perm])
    q = rng.standard_normal(4)
    cfg = LocalizerConfig(k=5, h=20)
    assert knn_locate(a, q, cfg) == knn_locate(b, q, cfg)
    assert kernel_locate(a, q, cfg) == kernel_locate(b, q, cfg)


def test_neighbor_count_exceeding_db_errors():
    db = two_point_db()
    with pytest.raises(ValueError, match="exceeds database size"):
        knn_locate(db, [1.0], LocalizerConfig(k=3))
    with pytest.raises(ValueError, match="exceeds database size"):
        kernel_locate(db, [1.0], LocalizerConfig(h=3))


def test_query_validation():
    db = two_point_db()
    with pytest.raises(ValueError, match="readings"):
        knn_locate(db, [1.0, 2.0])
    with pytest.raises(ValueError, match="NaN"):
        knn_locate(db, [np.nan])


def test_config_validation():
    with pytest.raises(ValueError):
        LocalizerConfig(k=0)
    with pytest.raises(ValueError):
        LocalizerConfig(h=0)
    with pytest.raises(ValueError):
        LocalizerConfig(d0=-1.0)


# ------------------------------------------------------------------ metrics


def test_localization_error_values():
    assert localization_error((1.0, 2.0), (1.0, 2.0)) == 0.0
    assert localization_error((0.0, 0.0), (3.0, 4.0)) == 5.0
    assert localization_error((3.0, 4.0), (0.0, 0.0)) == 5.0


def test_empirical_cdf_values():
    cdf = empirical_cdf(np.array([1.0, 2.0, 3.0, 4.0]))
    assert cdf == [(1.0, 0.25), (2.0, 0.5), (3.0, 0.75), (4.0, 1.0)]
    assert empirical_cdf(np.zeros(3)) == [(0.0, 1.0)]
    fracs = [f for _, f in empirical_cdf(np.random.default_rng(2).uniform(size=50))]
    assert all(b > a for a, b in zip(fracs, fracs[1:]))
    assert fracs[-1] == 1.0


def test_empirical_cdf_errors():
    with pytest.raises(ValueError, match="no errors"):
        empirical_cdf(np.array([]))
    with pytest.raises(ValueError, match="finite and non-negative"):
        empirical_cdf(np.array([-1.0]))
    with pytest.raises(ValueError, match="finite and non-negative"):
        empirical_cdf(np.array([np.inf]))


# ----------------------------------------------------------------- database


def grid_plan():
    return FloorPlan(width_m=8.0, height_m=6.0, n1=3, n2=4, walls=(),
                     aps=(AccessPoint(1.0, 1.0, 20.0),
                          AccessPoint(7.0, 5.0, 20.0)))


def test_build_db_from_full_map():
    plan = grid_plan()
    t = gen_rss(plan, exponent=2.0)
    db = build_db(t, plan)
    assert len(db) == 12
    # every record sits at a cell center and carries that cell's tube
    for rec in range(12):
        x, y = db.coords[rec]
        j = int(x / 2.0 - 0.5)
        i = int(y / 2.0 - 0.5)
        assert plan.point(i, j) == (x, y)
        assert np.array_equal(db.prints[rec], t[i, j, :])


def test_build_db_from_subset():
    plan = grid_plan()
    t = gen_rss(plan, exponent=2.0)
    sub = TubeSampleSet(n1=3, n2=4, n3=2, rows=[0, 2], cols=[1, 3],
                        tubes=np.array([t[0, 1, :], t[2, 3, :]]))
    db = build_db(None, plan, subset=sub)
    assert len(db) == 2
    assert {tuple(c) for c in db.coords} == {plan.point(0, 1), plan.point(2, 3)}


def test_build_db_errors():
    plan = grid_plan()
    with pytest.raises(ValueError, match="does not match plan"):
        build_db(np.zeros((4, 4, 2)), plan)
    empty = TubeSampleSet(n1=3, n2=4, n3=2, rows=np.empty(0, int),
                          cols=np.empty(0, int), tubes=np.empty((0, 2)))
    with pytest.raises(ValueError, match="zero samples"):
        build_db(None, plan, subset=empty)
    bad = TubeSampleSet(n1=4, n2=4, n3=2, rows=[0], cols=[0],
                        tubes=np.zeros((1, 2)))
    with pytest.raises(ValueError, match="grid does not match"):
        build_db(None, plan, subset=bad)
    with pytest.raises(ValueError, match="empty"):
        FingerprintDB(np.zeros((0, 2)), np.zeros((0, 3)))


def test_self_queries_locate_exactly_with_zero_offset():
    plan = grid_plan()
    t = gen_rss(plan, exponent=2.0)
    db = build_db(t, plan)
    cfg = LocalizerConfig(k=3, d0=0.0)
    for i in range(3):
        for j in range(4):
            est = knn_locate(db, t[i, j, :], cfg)
            assert localization_error(plan.point(i, j), est) <= 1e-9


def test_self_queries_land_in_the_right_cell_with_defaults():
    plan = grid_plan()
    t = gen_rss(plan, exponent=2.0)
    db = build_db(t, plan)
    half_diag = float(np.hypot(*plan.cell_size())) / 2.0
    for i in range(3):
        for j in range(4):
            est = knn_locate(db, t[i, j, :], LocalizerConfig(k=3))
            assert localization_error(plan.point(i, j), est) <= half_diag


# ---------------------------------------------------------------- CSV files


def test_error_csv_round_trip(tmp_path):
    rows = [
        {"method": "adaptive", "noise": 3.0, "seed": 0,
         "x": 1.5, "y": 2.5, "x_hat": 1.25, "y_hat": 2.75, "error_m": 0.25},
        {"method": "adaptive", "noise": 3.0, "seed": 0,
         "x": 4.5, "y": 0.5, "x_hat": 4.5, "y_hat": 0.5, "error_m": 0.0},
    ]
    p = tmp_path / "errors.csv"
    write_errors_csv(p, rows, config_comment='{"note": "unit"}')
    text = p.read_text()
    assert text.startswith('# config: {"note": "unit"}\n')
    assert text.splitlines()[1] == "method,noise,seed,x,y,x_hat,y_hat,error_m"
    back = read_errors_csv(p)
    assert len(back) == 2
    assert back[0]["method"] == "adaptive"
    assert float(back[0]["error_m"]) == 0.25
    with pytest.raises(ValueError, match="no rows"):
        write_errors_csv(tmp_path / "empty.csv", [], "{}")
