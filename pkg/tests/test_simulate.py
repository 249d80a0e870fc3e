"""RSS map generation: propagation model, wall crossings, scenarios, NSE."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rfmap.completion import TubeSampleSet
from rfmap.simulate import (
    AccessPoint,
    FloorPlan,
    NoiseConfig,
    Wall,
    add_noise,
    budget_plan,
    default_plan,
    gen_rss,
    nse,
    segments_intersect,
    wall_crossings,
)
from rfmap.tensor_core import best_rank_r

from helpers import crossings_oracle, rss_oracle


def hand_plan(walls=()):
    """2x16 grid of 1 m cells with one corner access point."""
    return FloorPlan(
        width_m=16.0, height_m=2.0, n1=2, n2=16,
        walls=tuple(walls),
        aps=(AccessPoint(x=0.5, y=0.5, tx_power_dbm=20.0),),
    )


# ----------------------------------------------------------- path-loss model


def test_gen_rss_hand_values():
    t = gen_rss(hand_plan(), exponent=2.0, ref_loss_db=40.0)
    assert t.shape == (2, 16, 1)
    # one metre from the access point: tx - PL0 = -20 dBm
    assert abs(t[0, 1, 0] - (-20.0)) <= 1e-12
    # ten metres: another 20 log10(10) = 20 dB
    assert abs(t[0, 10, 0] - (-40.0)) <= 1e-12
    # distances under one metre clamp to the reference distance
    assert abs(t[0, 0, 0] - (-20.0)) <= 1e-12


def test_gen_rss_wall_attenuation():
    wall = Wall(x1=5.0, y1=0.0, x2=5.0, y2=2.0, attenuation_db=15.0)
    t = gen_rss(hand_plan([wall]), exponent=2.0, ref_loss_db=40.0)
    assert abs(t[0, 10, 0] - (-55.0)) <= 1e-12  # -40 minus one wall
    assert abs(t[0, 1, 0] - (-20.0)) <= 1e-12  # near side unaffected


def test_gen_rss_defaults_come_from_plan():
    plan = FloorPlan(
        width_m=16.0, height_m=2.0, n1=2, n2=16, walls=(),
        aps=(AccessPoint(0.5, 0.5, 20.0),),
        path_loss_exponent=2.0, ref_loss_db=40.0,
    )
    assert np.array_equal(gen_rss(plan), gen_rss(plan, 2.0, 40.0))
    assert not np.array_equal(gen_rss(plan), gen_rss(plan, exponent=3.0))


def test_gen_rss_matches_scalar_oracle():
    rng = np.random.default_rng(0)
    walls = tuple(
        Wall(*rng.uniform(1, 19, size=4), attenuation_db=rng.uniform(1, 20))
        for _ in range(4)
    )
    aps = tuple(
        AccessPoint(rng.uniform(0, 20), rng.uniform(0, 20), 10.0)
        for _ in range(3)
    )
    plan = FloorPlan(width_m=20.0, height_m=20.0, n1=10, n2=10,
                     walls=walls, aps=aps)
    t = gen_rss(plan, exponent=3.0, ref_loss_db=40.0)
    want = rss_oracle(plan, exponent=3.0, ref_loss_db=40.0)
    assert np.max(np.abs(t - want)) <= 1e-9


def test_gen_rss_floor_clamp():
    plan = FloorPlan(
        width_m=1000.0, height_m=1000.0, n1=4, n2=4, walls=(),
        aps=(AccessPoint(0.0, 0.0, 0.0),),
    )
    t = gen_rss(plan, exponent=4.0)
    assert t.min() == -110.0


def test_smoothness_between_equal_crossing_neighbors():
    plan = default_plan()
    t = gen_rss(plan)
    n = plan.path_loss_exponent
    for k in (0, 5):
        ap = plan.aps[k]
        for i, j in [(10, 10), (30, 40), (50, 70), (5, 55)]:
            a, b = plan.point(i, j), plan.point(i, j + 1)
            if wall_crossings(a, ap_xy := (ap.x, ap.y), plan.walls) != \
               wall_crossings(b, ap_xy, plan.walls):
                continue
            da = max(np.hypot(a[0] - ap.x, a[1] - ap.y), 1.0)
            db = max(np.hypot(b[0] - ap.x, b[1] - ap.y), 1.0)
            want = 10.0 * n * abs(np.log10(da / db))
            have = abs(t[i, j, k] - t[i, j + 1, k])
            if t[i, j, k] > -110.0 and t[i, j + 1, k] > -110.0:
                assert abs(have - want) <= 1e-9


# ------------------------------------------------------------ wall crossings


def test_wall_crossings_counts():
    w1 = Wall(5.0, 0.0, 5.0, 10.0, 10.0)
    w2 = Wall(7.0, 0.0, 7.0, 10.0, 10.0)
    assert wall_crossings((0, 5), (4, 5), (w1, w2)) == 0
    assert wall_crossings((0, 5), (6, 5), (w1, w2)) == 1
    assert wall_crossings((0, 5), (9, 5), (w1, w2)) == 2


def test_segments_intersect_edges():
    assert segments_intersect((0, 0), (2, 2), (0, 2), (2, 0))
    assert segments_intersect((0, 0), (2, 0), (1, 0), (1, 1))  # touch
    assert segments_intersect((0, 0), (2, 0), (1, 0), (3, 0))  # collinear
    assert not segments_intersect((0, 0), (1, 0), (0, 1), (1, 1))
    assert not segments_intersect((0, 0), (1, 0), (2, 0), (3, 0))


@given(st.lists(st.floats(0.0, 10.0), min_size=8, max_size=8))
def test_crossings_match_shapely(vals):
    a, b = (vals[0], vals[1]), (vals[2], vals[3])
    w = Wall(vals[4], vals[5], vals[6], vals[7], 1.0)
    if (w.x1, w.y1) == (w.x2, w.y2) or a == b:
        return
    assert wall_crossings(a, b, (w,)) == crossings_oracle(a, b, [w])


# -------------------------------------------------------------------- noise


def test_add_noise_sigma_zero_copies():
    t = np.ones((2, 3, 2))
    out = add_noise(t, NoiseConfig(sigma_dbm=0.0))
    assert np.array_equal(out, t) and out is not t


def test_add_noise_reproducible_and_calibrated():
    t = np.zeros((100, 100, 100))
    a = add_noise(t, NoiseConfig(sigma_dbm=3.0, seed=4))
    b = add_noise(t, NoiseConfig(sigma_dbm=3.0, seed=4))
    assert np.array_equal(a, b)
    assert abs(a.std() - 3.0) <= 0.06  # 2% of sigma over 1e6 draws
    assert not np.array_equal(a, add_noise(t, NoiseConfig(3.0, seed=5)))


def test_noise_config_validation():
    with pytest.raises(ValueError):
        NoiseConfig(sigma_dbm=-0.1)


# ---------------------------------------------------------------------- NSE


def test_nse_identities():
    rng = np.random.default_rng(1)
    truth = rng.standard_normal((4, 5, 3))
    omega = TubeSampleSet(n1=4, n2=5, n3=3, rows=[0], cols=[0],
                          tubes=truth[0, 0, :][None, :])
    assert nse(truth, truth.copy(), omega) == 0.0
    assert abs(nse(truth, 1.1 * truth, omega) - 0.01) <= 1e-12
    assert abs(nse(truth, 1.1 * truth, None) - 0.01) <= 1e-12


def test_nse_errors():
    truth = np.ones((2, 2, 2))
    rows, cols = np.divmod(np.arange(4), 2)
    full = TubeSampleSet(n1=2, n2=2, n3=2, rows=rows, cols=cols,
                         tubes=np.ones((4, 2)))
    with pytest.raises(ValueError, match="no unsampled"):
        nse(truth, truth, full)
    with pytest.raises(ValueError, match="shape"):
        nse(truth, np.ones((2, 2, 3)), None)
    with pytest.raises(ValueError, match="zero"):
        nse(np.zeros((2, 2, 2)), np.ones((2, 2, 2)), None)


# ---------------------------------------------------------------- plan files


def test_plan_round_trip(tmp_path):
    plan = FloorPlan(
        width_m=12.0, height_m=8.0, n1=4, n2=6,
        walls=(Wall(1.0, 1.0, 1.0, 7.0, 12.5),),
        aps=(AccessPoint(2.0, 3.0, 17.0), AccessPoint(10.0, 5.0, 11.0)),
        path_loss_exponent=3.3, ref_loss_db=38.0,
    )
    p = tmp_path / "plan.json"
    plan.save(p)
    assert FloorPlan.load(p) == plan


def test_plan_dict_defaults_for_missing_propagation():
    d = default_plan().to_dict()
    del d["path_loss_exponent"]
    del d["ref_loss_db"]
    back = FloorPlan.from_dict(d)
    assert back.path_loss_exponent == 2.7
    assert back.ref_loss_db == 40.0


def test_plan_format_guard():
    d = default_plan().to_dict()
    d["format"] = "rfplan/9"
    with pytest.raises(ValueError, match="unsupported plan format"):
        FloorPlan.from_dict(d)


def test_plan_validation():
    ap = (AccessPoint(1.0, 1.0, 10.0),)
    with pytest.raises(ValueError, match="positive extent"):
        FloorPlan(0.0, 5.0, 2, 2, (), ap)
    with pytest.raises(ValueError, match="at least 2x2"):
        FloorPlan(5.0, 5.0, 1, 2, (), ap)
    with pytest.raises(ValueError, match="at least one access point"):
        FloorPlan(5.0, 5.0, 2, 2, (), ())
    with pytest.raises(ValueError, match="outside the region"):
        FloorPlan(5.0, 5.0, 2, 2, (), (AccessPoint(6.0, 1.0, 10.0),))
    with pytest.raises(ValueError, match="outside the region"):
        FloorPlan(5.0, 5.0, 2, 2, (Wall(0, 0, 9, 9, 1.0),), ap)
    with pytest.raises(ValueError, match="zero-length"):
        FloorPlan(5.0, 5.0, 2, 2, (Wall(1, 1, 1, 1, 1.0),), ap)
    with pytest.raises(ValueError, match="attenuation"):
        FloorPlan(5.0, 5.0, 2, 2, (Wall(0, 0, 1, 1, -1.0),), ap)
    with pytest.raises(ValueError, match="exponent"):
        FloorPlan(5.0, 5.0, 2, 2, (), ap, path_loss_exponent=0.0)


def test_plan_geometry_helpers():
    plan = FloorPlan(10.0, 6.0, 3, 5, (), (AccessPoint(1.0, 1.0, 10.0),))
    assert plan.cell_size() == (2.0, 2.0)
    assert plan.point(0, 0) == (1.0, 1.0)
    assert plan.point(2, 4) == (9.0, 5.0)
    coords = plan.grid_coords()
    assert coords.shape == (15, 2)
    assert tuple(coords[0]) == plan.point(0, 0)
    assert tuple(coords[14]) == plan.point(2, 4)
    assert plan.n3 == 1


# ------------------------------------------------------- built-in scenarios


def test_default_scenario_invariants():
    plan = default_plan()
    assert (plan.n1, plan.n2, plan.n3) == (60, 80, 10)
    t = gen_rss(plan)
    max_tx = max(ap.tx_power_dbm for ap in plan.aps)
    assert t.min() >= -110.0 and t.max() <= max_tx
    energy = np.linalg.norm(best_rank_r(t, 8)) ** 2 / np.linalg.norm(t) ** 2
    assert energy >= 0.95


def test_budget_scenario_invariants():
    plan = budget_plan()
    assert (plan.n1, plan.n2, plan.n3) == (36, 12, 30)
    assert plan.cell_size() == (5.0, 5.0)
    t = gen_rss(plan)
    assert t.min() >= -110.0
    # the aisle layout keeps row-space structure near dimension 12
    m1 = t.transpose(0, 2, 1).reshape(plan.n1, -1)
    sv = np.linalg.svd(m1, compute_uv=False)
    assert np.sum(sv[:12] ** 2) / np.sum(sv**2) >= 0.999
