import itertools
import math

import numpy as np
import pytest
from scipy.stats import unitary_group

from pgsim.psystem import fock_engine as fe
from pgsim.psystem.fock_engine import FockState, ModeUnitary, InternalState
from pgsim.psystem.log_system import LogSystem, RuntimeErrorWithLog


def basis_state(occ, internal_dim = 1, cutoff = 4):
    return FockState(len(occ) // internal_dim, internal_dim, cutoff, {tuple(occ) : 1.})


def random_state(rng, mode_count, n_photons, cutoff = 4):
    amps = {}
    for occ in itertools.product(range(n_photons + 1), repeat = mode_count):
        if sum(occ) <= n_photons and rng.random() < 0.5:
            amps[occ] = rng.normal() + 1j * rng.normal()
    if not amps:
        amps[(0,) * mode_count] = 1.
    return FockState(mode_count, 1, cutoff, amps).normalized()


def assert_states_close(a, b, tol = 1e-9):
    keys = set(a.amplitudes) | set(b.amplitudes)
    for k in keys:
        assert abs(a[k] - b[k]) < tol, k


def test_vacuum():
    assert dict(fe.vacuum(2, 1, 2).amplitudes) == {(0, 0) : 1.}
    assert fe.vacuum(8, 1, 4).norm2() == pytest.approx(1.)
    assert dict(fe.vacuum(1, 1, 0).amplitudes) == {(0,) : 1.}


def test_two_mode_squeezed_series():
    s = fe.two_mode_squeezed(0.2, 0, 1, 2)
    assert s[(0, 0)] == pytest.approx(1.)
    assert s[(1, 1)] == pytest.approx(0.2)
    assert s[(2, 2)] == pytest.approx(0.04)
    assert len(s) == 3


def test_two_mode_squeezed_zero_is_vacuum():
    s = fe.two_mode_squeezed(0., 2, 5, 2, mode_count = 6)
    assert dict(s.amplitudes) == {(0,) * 6 : 1.}


def test_pair_probability_at_operating_point():
    s = fe.two_mode_squeezed(math.sqrt(0.03), 0, 1, 2).normalized()
    assert abs(s[(1, 1)])**2 == pytest.approx(0.03, abs = 1e-3)


@pytest.mark.parametrize("p, pairs", [(0.03, 1), (0.036, 3), (0.1, 2)])
def test_xi_from_p_inverts_pair_probability(p, pairs):
    xi = fe.xi_from_p(p, pairs)
    assert fe.pair_probability(xi, pairs) == pytest.approx(p, abs = 1e-12)


def test_squeezer_cutoff_violation():
    with pytest.raises(RuntimeErrorWithLog):
        fe.two_mode_squeezed(0.1, 0, 1, 3, cutoff = 4)


def test_beamsplitter_single_photon():
    out = fe.apply_unitary(basis_state((1, 0)), ModeUnitary.coupler(), [0, 1])
    assert out[(1, 0)] == pytest.approx(1 / math.sqrt(2))
    assert out[(0, 1)] == pytest.approx(1j / math.sqrt(2))


def test_hom_dip():
    out = fe.apply_unitary(basis_state((1, 1)), ModeUnitary.coupler(), [0, 1])
    assert abs(out[(1, 1)]) < 1e-15
    _, prob = fe.postselect(out, {0 : 1, 1 : 1})
    assert prob == pytest.approx(0., abs = 1e-15)


def test_two_photons_one_port():
    out = fe.apply_unitary(basis_state((2, 0)), ModeUnitary.coupler(), [0, 1])
    probs = {k : abs(a)**2 for k, a in out.items()}
    assert probs[(2, 0)] == pytest.approx(0.25)
    assert probs[(1, 1)] == pytest.approx(0.5)
    assert probs[(0, 2)] == pytest.approx(0.25)


def test_single_photon_sector_reproduces_matrix():
    u = unitary_group.rvs(5, random_state = 7)
    for j in range(5):
        occ = [0] * 5
        occ[j] = 1
        out = fe.apply_unitary(basis_state(occ, cutoff = 1), u, range(5))
        for k in range(5):
            e = [0] * 5
            e[k] = 1
            assert abs(out[tuple(e)] - u[k, j]) < 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_haar_unitarity_preserves_norm(seed):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(2, 6))
    s = random_state(rng, dim, int(rng.integers(1, 5)))
    u = unitary_group.rvs(dim, random_state = seed)
    out = fe.apply_unitary(s, u, range(dim))
    assert abs(math.sqrt(out.norm2()) - math.sqrt(s.norm2())) < 1e-9


@pytest.mark.parametrize("seed", range(3))
def test_homomorphism(seed):
    rng = np.random.default_rng(100 + seed)
    s = random_state(rng, 4, 3)
    u = unitary_group.rvs(4, random_state = seed)
    v = unitary_group.rvs(4, random_state = seed + 10)
    direct = fe.apply_unitary(s, u @ v, range(4))
    staged = fe.apply_unitary(fe.apply_unitary(s, v, range(4)), u, range(4))
    assert_states_close(direct, staged)


def test_unitary_on_subset_with_internal_labels():
    # photon in mode 0 with label 1, coupler on modes (0, 2) of three
    s = FockState(3, 2, 2, {(0, 1, 0, 0, 0, 0) : 1.})
    out = fe.apply_unitary(s, ModeUnitary.coupler(), [0, 2])
    assert out[(0, 1, 0, 0, 0, 0)] == pytest.approx(1 / math.sqrt(2))
    assert out[(0, 0, 0, 0, 0, 1)] == pytest.approx(1j / math.sqrt(2))


def test_non_unitary_rejected():
    with pytest.raises(RuntimeErrorWithLog):
        fe.apply_unitary(basis_state((1, 0)), np.array([[1., 1.], [0., 1.]]), [0, 1])


def test_mode_out_of_range():
    with pytest.raises(RuntimeErrorWithLog):
        fe.apply_unitary(basis_state((1, 0)), ModeUnitary.coupler(), [0, 2])


def test_mzi_closed_form():
    c = ModeUnitary.coupler().matrix
    for x in [0., 0.3, np.pi / 2, np.pi, 4.]:
        direct = c @ np.diag([np.exp(1j * x), 1.]) @ c
        assert np.allclose(fe.mzi_matrix(x), direct, atol = 1e-14)
    assert np.allclose(fe.mzi_matrix(np.pi), np.diag([-1., 1.]))


def test_permute_modes_matches_unitary():
    rng = np.random.default_rng(3)
    s = random_state(rng, 4, 2)
    perm = [2, 0, 3, 1]
    assert_states_close(fe.permute_modes(s, perm),
        fe.apply_unitary(s, ModeUnitary.permutation(perm), range(4)))


def test_tensor():
    v = fe.tensor(fe.vacuum(1, 1, 1), fe.vacuum(1, 1, 1))
    assert dict(v.amplitudes) == {(0, 0) : 1.}
    one = basis_state((1,), cutoff = 1)
    assert dict(fe.tensor(one, one).amplitudes) == {(1, 1) : 1.}

    rng = np.random.default_rng(11)
    a = random_state(rng, 2, 2).scaled(0.7)
    b = random_state(rng, 2, 2).scaled(1.3)
    assert fe.tensor(a, b).norm2() == pytest.approx(a.norm2() * b.norm2())


def test_tensor_truncation_is_flagged():
    LogSystem.open_default()
    LogSystem("warning").summary()
    two = basis_state((2,), cutoff = 2)
    t = fe.tensor(two, two, cutoff = 3)
    assert len(t) == 0
    assert len(LogSystem("warning")) == 1
    LogSystem("warning").summary()


def test_postselect_whole_support():
    rng = np.random.default_rng(5)
    s = random_state(rng, 2, 1).scaled(0.8)
    _, prob = fe.postselect(s, {})
    assert prob == pytest.approx(s.norm2())


def test_postselect_partition():
    rng = np.random.default_rng(8)
    s = random_state(rng, 3, 3)
    for n in range(4):
        total = 0.
        for pattern in itertools.product(range(n + 1), repeat = 3):
            if sum(pattern) == n:
                _, prob = fe.postselect(s, dict(enumerate(pattern)))
                total += prob
        assert total == pytest.approx(s.sector(n).norm2(), abs = 1e-9)


def test_postselect_threshold_and_empty():
    s = FockState(2, 1, 4, {(2, 1) : 0.6, (1, 0) : 0.8})
    cond, prob = fe.postselect(s, {0 : 1, 1 : 1}, threshold = True)
    assert prob == pytest.approx(0.36)
    assert cond.norm2() == pytest.approx(1.)
    empty, prob = fe.postselect(s, {0 : 0, 1 : 3})
    assert prob == 0. and len(empty) == 0


def test_heralded_pair_probability():
    p = 0.01
    s = fe.two_mode_squeezed(math.sqrt(p), 0, 1, 2).normalized()
    _, prob = fe.postselect(s, {0 : 1, 1 : 1})
    assert prob == pytest.approx(p, rel = 3 * p)


def test_overlap():
    rng = np.random.default_rng(2)
    x = random_state(rng, 3, 2).scaled(0.5)
    assert fe.overlap(x, x) == pytest.approx(x.norm2())
    assert fe.overlap(basis_state((1, 0)), basis_state((0, 1))) == 0.
    with pytest.raises(RuntimeErrorWithLog):
        fe.overlap(basis_state((1, 0)), basis_state((1, 0, 0)))


def test_dephase_internal_limits():
    sources = [InternalState.basis(0, 1)] * 4
    ideal = fe.dephase_internal(sources, 1.)
    assert all(np.allclose(s.vector, np.eye(5)[0]) for s in ideal)
    apart = fe.dephase_internal(sources, 0.)
    for a, b in itertools.combinations(apart, 2):
        assert abs(a.overlap(b)) == pytest.approx(0.)
    with pytest.raises(RuntimeErrorWithLog):
        fe.dephase_internal(sources, 1.2)


def test_dephase_internal_gives_fringe_visibility():
    states = fe.dephase_internal([InternalState.basis(0, 1)] * 4, 0.82)
    s = abs(states[1].overlap(states[2]))**2
    assert fe.visibility_from_overlap(s) == pytest.approx(0.82, abs = 1e-9)


@pytest.mark.parametrize("sigma", [0., 0.2, 1. / 3.])
def test_distinguishable_fringe_floor(sigma):
    assert fe.overlap_from_visibility(sigma) == pytest.approx(0., abs = 1e-12)
    assert fe.visibility_from_overlap(0.) == pytest.approx(1. / 3.)


def test_partially_distinguishable_hom():
    # two photons with overlap s on a coupler: coincidence probability (1 - s) / 2
    psi = InternalState((1., 0.))
    phi = InternalState((math.sqrt(0.3), math.sqrt(0.7)))
    a = fe.two_mode_squeezed(1., 0, 1, 1, internal_dim = 2, signal_internal = psi).sector(2)
    b = fe.two_mode_squeezed(1., 0, 1, 1, internal_dim = 2, signal_internal = phi).sector(2)
    s = fe.tensor(a, b)
    out = fe.apply_unitary(s, ModeUnitary.coupler(), [0, 2])
    _, prob = fe.postselect(out, {0 : 1, 2 : 1, 1 : 1, 3 : 1})
    assert prob == pytest.approx((1 - 0.3) / 2)
