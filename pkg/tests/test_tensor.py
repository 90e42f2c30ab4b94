import numpy as np
import pytest

from entkit.tensor import (MultiState, as_state, bits, copies_state,
                           eigh_clipped, group_copies, kron_all,
                           matrix_log2_on_support, partial_trace,
                           partial_transpose, permute_systems,
                           positive_part_trace, relative_entropy,
                           relative_entropy_gradient, require_density,
                           require_hermitian, trace_norm, von_neumann_entropy)


def random_density(d, seed, rank=None):
    rng = np.random.default_rng(seed)
    r = rank or d
    g = rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))
    m = g @ g.conj().T
    return m / np.trace(m).real


def test_require_hermitian_symmetrizes():
    m = np.array([[1.0, 1e-12], [0.0, 2.0]], dtype=complex)
    h = require_hermitian(m)
    assert np.allclose(h, h.conj().T)
    with pytest.raises(ValueError):
        require_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_require_density_checks():
    with pytest.raises(ValueError):
        require_density(np.eye(4) / 2, dims=(2, 2))
    with pytest.raises(ValueError):
        require_density(np.diag([1.5, -0.5]).astype(complex), dims=(2,))
    ok = require_density(np.eye(4) / 4, dims=(2, 2))
    assert ok.shape == (4, 4)


def test_multistate_dims_and_dim():
    st = MultiState((2, 3), np.eye(6) / 6)
    assert st.dim == 6 and st.dims == (2, 3)
    with pytest.raises(ValueError):
        MultiState((2, 2), np.eye(6) / 6)


def test_as_state_passthrough_and_raw():
    st = MultiState((2, 2), np.eye(4) / 4)
    assert as_state(st) is st
    st2 = as_state(np.eye(4) / 4, (2, 2))
    assert st2.dims == (2, 2)
    with pytest.raises(ValueError):
        as_state(np.eye(4) / 4)


def test_partial_trace_reductions():
    for seed in range(6):
        rng = np.random.default_rng(seed)
        a = random_density(2, seed)
        b = random_density(3, seed + 50)
        ab = np.kron(a, b)
        ra = partial_trace(ab, (2, 3), keep=(0,))
        rb = partial_trace(ab, (2, 3), keep=(1,))
        assert np.allclose(ra, a, atol=1e-12)
        assert np.allclose(rb, b, atol=1e-12)


def test_partial_trace_keeps_order():
    a, b, c = (random_density(2, s) for s in (1, 2, 3))
    abc = kron_all(a, b, c)
    kc = partial_trace(abc, (2, 2, 2), keep=(0, 2))
    assert np.allclose(kc, np.kron(a, c), atol=1e-12)


def test_partial_transpose_involution_and_spectrum():
    for seed in range(5):
        rho = random_density(6, seed)
        pt = partial_transpose(rho, (2, 3), sys=(1,))
        assert np.allclose(partial_transpose(pt, (2, 3), sys=(1,)), rho)
        # transpose on the full system preserves the spectrum
        full = partial_transpose(rho, (2, 3), sys=(0, 1))
        assert np.allclose(np.sort(np.linalg.eigvalsh(full)),
                           np.sort(np.linalg.eigvalsh(rho)), atol=1e-10)


def test_partial_transpose_of_product_is_product():
    a = random_density(2, 9)
    b = random_density(2, 10)
    pt = partial_transpose(np.kron(a, b), (2, 2), sys=(1,))
    assert np.allclose(pt, np.kron(a, b.T), atol=1e-12)


def test_permute_systems_swap():
    a = random_density(2, 4)
    b = random_density(3, 5)
    sw = permute_systems(np.kron(a, b), (2, 3), (1, 0))
    assert np.allclose(sw, np.kron(b, a), atol=1e-12)


def test_group_copies_pairs_parties():
    a = random_density(2, 11)
    b = random_density(3, 12)
    one = np.kron(a, b)
    two = np.kron(one, one)
    grouped, dims = group_copies(two, (2, 3), 2)
    assert dims == (4, 9)
    assert np.allclose(grouped, np.kron(kron_all(a, a), kron_all(b, b)),
                       atol=1e-12)


def test_copies_state_roundtrip_trace():
    st = MultiState((2, 2), random_density(4, 3))
    st2 = copies_state(st, 2)
    assert st2.dims == (4, 4)
    assert abs(np.trace(st2.op) - 1.0) < 1e-12
    assert np.allclose(partial_trace(st2.op, (4, 4), keep=(0,)).trace(), 1.0)


def test_eigh_clipped_floors():
    vals, vecs = eigh_clipped(np.diag([1.0, -0.25]).astype(complex))
    assert vals.min() >= 0.0
    assert vals.max() == 1.0


def test_trace_norm_and_positive_part():
    m = np.diag([0.7, -0.2, 0.0]).astype(complex)
    assert abs(trace_norm(m) - 0.9) < 1e-14
    assert abs(positive_part_trace(m) - 0.7) < 1e-14


def test_entropy_values():
    assert abs(von_neumann_entropy(np.eye(2) / 2) - 1.0) < 1e-12
    pure = np.zeros((2, 2), dtype=complex)
    pure[0, 0] = 1.0
    assert abs(von_neumann_entropy(pure)) < 1e-12


def test_relative_entropy_oracles():
    # D(rho || I/d) = log2 d - S(rho)
    for seed in range(4):
        rho = random_density(4, seed)
        d = relative_entropy(rho, np.eye(4) / 4)
        assert abs(d - (2.0 - von_neumann_entropy(rho))) < 1e-9
    # zero on identical states, positive otherwise
    rho = random_density(3, 8)
    assert abs(relative_entropy(rho, rho)) < 1e-10
    sig = random_density(3, 9)
    assert relative_entropy(rho, sig) > 0.0


def test_relative_entropy_support_mismatch_is_infinite():
    p0 = np.diag([1.0, 0.0]).astype(complex)
    p1 = np.diag([0.0, 1.0]).astype(complex)
    assert relative_entropy(p0, p1) == np.inf


def test_relative_entropy_gradient_is_first_order():
    rho = random_density(3, 21)
    sigma = random_density(3, 22)
    tau = random_density(3, 23)
    g = relative_entropy_gradient(rho, sigma)
    f0 = relative_entropy(rho, sigma)
    for t in (1e-5, 1e-6):
        f1 = relative_entropy(rho, (1 - t) * sigma + t * tau)
        lin = np.real(np.trace(g @ (tau - sigma))) * t
        assert abs((f1 - f0) - lin) < 5e-4 * t ** 0.5 + 20 * t


def test_matrix_log2_on_support_projects():
    rho = random_density(4, 31, rank=2)
    lg, proj = matrix_log2_on_support(rho)
    # exp2 of the log reproduces rho on its own support
    vals, vecs = np.linalg.eigh(rho)
    back = vecs @ np.diag(np.where(vals > 1e-12, vals, 0.0)) @ vecs.conj().T
    assert np.allclose(proj @ rho @ proj, back, atol=1e-10)


def test_bits_matches_log2():
    assert abs(bits(8.0) - 3.0) < 1e-14
