import numpy as np
import pytest

from entkit.hypotest import (build_candidate_pool, fsep, fsep_bounded,
                             fsep_relaxed, sfne_eval, stein_curve,
                             stein_functional)
from entkit.sep import is_ppt
from entkit.states import (isotropic, max_entangled, max_entangled_op,
                           random_separable, random_state)
from entkit.tensor import MultiState, fidelity_with


def iso_fsep_oracle(F, K, c):
    """Two parameter family search; twirling makes this exact for isotropic
    inputs (the positive part only shrinks under the twirl, which also fixes
    the acceptance cost)."""
    best = np.inf
    for f in np.linspace(0.0, 1.0 / K, 401):
        # optimal scale for fixed f solves a piecewise-linear problem; scan it
        for t in np.linspace(0.0, 2.5, 1001):
            pos = max(0.0, F - t * f) + max(0.0, (1.0 - F) - t * (1.0 - f))
            best = min(best, pos + c * t)
    return best


def test_fsep_bell_projector_is_one():
    for K in (2, 3):
        b = fsep(max_entangled(K), K, tol=1e-9)
        assert abs(b.lower - 1.0) < 1e-6
        assert abs(b.upper - 1.0) < 1e-6


def test_fsep_separable_floor():
    st, _ = random_separable((2, 2), m=5, seed=1)
    for K in (2, 4):
        b = fsep(st, K, tol=1e-9)
        assert abs(b.upper - 1.0 / K) < 1e-6
        assert b.lower >= 1.0 / K - 1e-6


def test_fsep_isotropic_against_family_scan():
    for F, K in ((0.8, 2), (0.6, 2), (0.9, 3)):
        b = fsep(isotropic(K, F), K, tol=1e-9)
        want = iso_fsep_oracle(F, K, 1.0 / K)
        assert b.lower - 2e-3 <= want <= b.upper + 2e-3
        assert b.width < 1e-5


def test_fsep_two_sided_agreement_seeded():
    for seed in range(8):
        st = random_state((2, 2), rank=2, seed=seed)
        for K in (2, 4):
            b = fsep(st, K, tol=1e-8)
            assert b.width < 1e-5
            assert 1.0 / K - 1e-8 <= b.upper <= 1.0 + 1e-8


def test_fsep_square_state_lower_bound_invariant():
    # with the Bell projector feasible, acceptance beats both floors
    for seed in range(6):
        st = random_state((2, 2), seed=seed)
        b = fsep(st, 2, tol=1e-9)
        floor = max(0.5, fidelity_with(st.op, max_entangled_op(2)))
        assert b.upper >= floor - 1e-6


def test_fsep_monotone_in_threshold():
    st = random_state((2, 2), rank=1, seed=3)
    bs = [fsep(st, K, tol=1e-9) for K in (2, 3, 4)]
    for a, b in zip(bs, bs[1:]):
        assert b.upper <= a.upper + 1e-7
        assert b.lower <= a.lower + 1e-6


def test_fsep_parameter_validation():
    st = max_entangled(2)
    with pytest.raises(ValueError):
        fsep(st, 1.5)
    with pytest.raises(ValueError):
        fsep_relaxed(st, 2, -0.1)
    with pytest.raises(ValueError):
        fsep_bounded(st, 1, 0.1)


def test_fsep_relaxed_reduces_to_plain():
    st = random_state((2, 2), rank=2, seed=7)
    a = fsep(st, 2, tol=1e-9)
    b = fsep_relaxed(st, 2, 0.0, tol=1e-9)
    assert abs(a.upper - b.upper) < 1e-7
    assert abs(a.lower - b.lower) < 1e-7


def test_fsep_relaxed_saturates_at_unit_cost():
    # acceptance cost 1/K + eps >= 1 makes the zero test optimal
    b = fsep_relaxed(max_entangled(2), 2, 0.5, tol=1e-9)
    assert abs(b.upper - 1.0) < 1e-6
    assert abs(b.lower - 1.0) < 1e-6


def test_fsep_bounded_equals_relaxed_at_scaled_eps():
    st = random_state((2, 2), rank=2, seed=11)
    a = fsep_bounded(st, 2, 0.5, tol=1e-9)
    b = fsep_relaxed(st, 2, 0.25, tol=1e-9)
    assert abs(a.upper - b.upper) < 1e-7
    assert abs(a.lower - b.lower) < 1e-7


def test_candidate_pool_entries_are_separable():
    pool = build_candidate_pool(isotropic(2, 0.8), 2, anchors=(0.5,), tol=1e-8)
    assert len(pool) >= 3
    for entry in pool:
        s = entry["sigma"]
        assert abs(np.trace(s) - 1.0) < 1e-9
        assert np.linalg.eigvalsh(s)[0] > -1e-9
        assert is_ppt(MultiState((4, 4), s), tol=1e-8)
        assert "kind" in entry["cert"]


def test_stein_bell_closed_form():
    # one copy: the family boundary gives 1 - 2^(y-1) until it hits zero
    for y, want in ((0.0, 0.5), (0.5, 1.0 - 2.0 ** (-0.5)), (1.0, 0.0)):
        b = stein_functional(max_entangled(2), 1, y, tol=1e-8)
        assert abs(b.upper - want) < 1e-6
        assert b.lower <= want + 1e-8
        assert b.width < 1e-5
    b2 = stein_functional(max_entangled(2), 2, 0.5, tol=1e-8)
    assert abs(b2.upper - 0.5) < 1e-5
    assert b2.width < 1e-4


def test_stein_copy_budget_guard():
    with pytest.raises(ValueError):
        stein_functional(max_entangled(2), 4, 0.5)
    with pytest.raises(ValueError):
        stein_functional(random_state((3, 3), seed=0), 3, 0.5)


def test_stein_curve_monotone_shared_pool():
    ys = [0.0, 0.4, 0.8, 1.2, 1.6]
    curve = stein_curve(isotropic(2, 0.8), 1, ys, tol=1e-8)
    assert len(curve) == len(ys)
    for a, b in zip(curve, curve[1:]):
        assert b.upper <= a.upper + 1e-9
        assert b.lower <= a.lower + 1e-7
    assert curve[0].upper <= 1.0 and curve[-1].lower >= 0.0


def test_sfne_matches_threshold_test_at_moderate_rate():
    # the envelope collapses onto the threshold acceptance value here
    br, b_star = sfne_eval(max_entangled(2), 1, 1.5, tol=1e-8)
    ref = fsep(max_entangled(2), 2.0 ** 1.5, tol=1e-9)
    assert abs(br.upper - ref.upper) < 1e-3
    assert br.lower <= ref.upper + 1e-6
    assert np.isfinite(b_star)
    assert br.lower <= br.upper + 1e-9


def test_sfne_large_rate_decays():
    br, b_star = sfne_eval(max_entangled(2), 1, 6.0, tol=1e-8)
    assert br.upper < 0.05
    assert b_star < 6.0
