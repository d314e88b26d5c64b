import math

import numpy as np
import pytest

from pgsim.psystem import photonic_device as pd
from pgsim.psystem import fock_engine as fe
from pgsim.psystem import graph_stabilizers as gs
from pgsim.psystem import opt_kernel
from pgsim.psystem.content.device_config import (DeviceConfig, AnalysisSetting, ErrorParams,
    RpegMode, PHASESHIFTERS, phaseshifter_index)
from pgsim.psystem.log_system import RuntimeErrorWithLog


def ideal(mode, **error):
    return DeviceConfig.default(mode, error = ErrorParams(**error))


def stabilizer_value(config, pauli):
    dist = pd.simulate(config.with_analysis(AnalysisSetting.from_pauli(pauli.setting)))
    cond = dist.conditional
    return float(sum(pauli.eigenvalue(k) * v for k, v in cond.items()))


def test_rpeg_matrices_are_unitary():
    rng = np.random.default_rng(0)
    for mode in RpegMode:
        batch = pd.rpeg_matrices(mode, rng.normal(0., 0.3, (5, 4)))
        assert batch.shape == (5, 6, 6)
        for m in batch:
            assert opt_kernel.check_unity(m)
        assert opt_kernel.check_unity(pd.rpeg_unitary(mode).matrix)


def test_cz_split():
    m = fe.mzi_matrix(pd.CZ_SPLIT)
    assert abs(m[0, 0])**2 == pytest.approx(1. / 3.)


@pytest.mark.parametrize("mode, success", [(RpegMode.FUSION, 0.5), (RpegMode.CZ, 1. / 9.)])
def test_gate_success_probability(mode, success):
    dist = pd.simulate(ideal(mode))
    assert dist.postselection == pytest.approx(success)
    assert not dist.truncated


@pytest.mark.parametrize("mode", list(RpegMode))
def test_ideal_logical_state(mode):
    target = gs.ideal_state_vector(pd.GRAPH_OF_MODE[mode]())
    rho = pd.logical_density_matrix(ideal(mode))
    assert np.real(target.conj() @ rho @ target) == pytest.approx(1.)


@pytest.mark.parametrize("mode", list(RpegMode))
def test_ideal_stabilizers(mode):
    group = gs.generators_from_graph(pd.GRAPH_OF_MODE[mode]())
    config = ideal(mode)
    for g in group.generators:
        assert stabilizer_value(config, g) == pytest.approx(1., abs = 1e-9)
    assert stabilizer_value(config, group[(1, 2)]) == pytest.approx(1., abs = 1e-9)


def test_phase_offset_flips_stabilizer():
    offsets = np.zeros(len(PHASESHIFTERS))
    offsets[phaseshifter_index("q4_phi")] = np.pi
    config = ideal(RpegMode.FUSION).with_offsets(offsets)
    assert stabilizer_value(config, gs.PauliString("ZZZX")) == pytest.approx(-1., abs = 1e-9)
    assert stabilizer_value(config, gs.PauliString("XIIZ")) == pytest.approx(1., abs = 1e-9)


def test_encoded_star_overlap():
    config = ideal(RpegMode.FUSION)
    state = pd.build_bell_pairs(config).sector(4)
    out = fe.apply_unitary(state, pd.rpeg_unitary(config.rpeg), pd.RPEG_MODES)
    fused, prob = pd.one_photon_per_qubit(out)
    assert prob > 0.
    encoded = pd.encode_logical(gs.ideal_state_vector(gs.star_state()), pd.frame_correction(RpegMode.FUSION))
    assert abs(fe.overlap(encoded, fused)) == pytest.approx(1.)


def test_bell_pairs_input():
    config = ideal(RpegMode.FUSION)
    state = pd.build_bell_pairs(config).sector(4)
    rho = pd.rail_density(state, pd.QUBITS)
    rho = rho / np.trace(rho)
    phi = np.array([1., 0., 0., 1.]) / math.sqrt(2.)
    # qubit order 1, 2, 3, 4 with pairs (1, 3) and (2, 4)
    v = np.einsum('ac,bd->abcd', phi.reshape(2, 2), phi.reshape(2, 2)).reshape(16)
    assert np.real(v @ rho @ v) == pytest.approx(1.)


def test_batch_kernel_matches_engine():
    rng = np.random.default_rng(7)
    for mode in RpegMode:
        offsets = rng.normal(0., 0.2, len(PHASESHIFTERS))
        config = ideal(mode).with_offsets(offsets).with_analysis(AnalysisSetting.from_pauli("XZYX"))
        amps = pd.rail_amplitudes_batch(config, offsets[None, 0:4], offsets[None, 4:8])
        fast = pd.pattern_probabilities_batch(amps, pd.setting_blocks(config)[None])[0]
        assert np.allclose(fast, pd.simulate(config).vector(), atol = 1e-10)


def test_frame_correction_shape():
    had = opt_kernel.optlib["H"]
    frame = pd.frame_correction(RpegMode.CZ)
    for f, h in zip(frame, pd.HADAMARDS[RpegMode.CZ]):
        assert opt_kernel.check_unity(f)
        diag = had @ f if h else f
        assert abs(diag[0, 1]) < 1e-12 and abs(diag[1, 0]) < 1e-12


def test_analysis_projects_on_bloch_state():
    theta, phi = 1.1, 2.3
    block = pd.analysis_blocks(theta, phi)
    psi = opt_kernel.bloch_state(theta, phi)
    assert abs(block[0] @ psi) == pytest.approx(1.)
    assert abs(block[1] @ psi) == pytest.approx(0., abs = 1e-12)


def test_analysis_unitary_is_block_diagonal():
    u = pd.analysis_unitary(AnalysisSetting.from_pauli("XYZI"), pd.frame_correction(RpegMode.FUSION))
    assert u.dim == 8
    assert np.allclose(u.matrix[0:2, 2:8], 0.)


def test_distinguishable_fusion_fidelity():
    sigma = 0.82
    s = fe.overlap_from_visibility(sigma)
    config = ideal(RpegMode.FUSION, sigma = sigma)
    target = gs.ideal_state_vector(gs.star_state())
    rho = pd.logical_density_matrix(config)
    assert np.real(target.conj() @ rho @ target) == pytest.approx((1. + s**2) / 2., abs = 1e-9)


def test_multiphoton_limit_matches_first_order():
    setting = AnalysisSetting.from_pauli("XXXZ")
    first = pd.simulate(ideal(RpegMode.FUSION).with_analysis(setting)).conditional
    multi = pd.simulate(ideal(RpegMode.FUSION, p = 5e-5).with_analysis(setting))
    assert not multi.truncated
    for k, v in multi.conditional.items():
        assert v == pytest.approx(first[k], abs = 2e-3)


def test_truncation_flag_follows_discarded_weight():
    setting = AnalysisSetting.from_pauli("ZZZZ")
    low = pd.simulate(ideal(RpegMode.FUSION, p = 5e-5).with_analysis(setting))
    high = pd.simulate(ideal(RpegMode.FUSION, p = 0.036).with_analysis(setting))
    assert low.discarded < 1e-12
    assert high.truncated
    assert high.discarded == pytest.approx(pd.discarded_weight(0.036))
    assert 0. < high.discarded < 0.05


def test_pair_number_weights():
    x = pd.source_weight(0.02)
    w = pd.pair_number_weights(0.02)
    k = pd.multiphoton_max_pairs()
    assert len(w) == 4 * k + 1
    assert w.sum() == pytest.approx(sum(x**j for j in range(k + 1))**4)
    assert w[1] == pytest.approx(4. * x)
    assert fe.pair_probability(math.sqrt(x), k) == pytest.approx(pd.SOURCE_RATE_FACTOR * 0.02)


def test_multiphoton_lowers_stabilizer():
    g = gs.PauliString("ZZZX")
    low = stabilizer_value(ideal(RpegMode.FUSION, p = 0.005), g)
    high = stabilizer_value(ideal(RpegMode.FUSION, p = 0.05), g)
    assert 1. > low > high > 0.


def test_hom_fringe_ideal():
    config = ideal(RpegMode.FUSION)
    samples = pd.hom_fringe(config, [0., np.pi / 2., np.pi])
    assert samples[0][1] == pytest.approx(1.)
    assert samples[1][1] == pytest.approx(0., abs = 1e-12)
    assert samples[2][1] == pytest.approx(1.)


def test_hom_fringe_visibility():
    sigma = 0.82
    config = ideal(RpegMode.FUSION, sigma = sigma)
    samples = pd.hom_fringe(config, np.linspace(0., 2. * np.pi, 41))
    v, v_hom = pd.fringe_visibility(samples)
    assert v == pytest.approx(sigma, abs = 1e-4)
    assert v_hom == pytest.approx(fe.overlap_from_visibility(sigma), abs = 1e-4)


def test_visibility_conversion():
    assert pd.visibility_conversion(1., 0.) == pytest.approx((1., 1.))
    v, v_hom = pd.visibility_conversion(1., 0.1)
    assert v == pytest.approx(0.9 / 1.1)
    assert v_hom == pytest.approx(0.8)
    with pytest.raises(RuntimeErrorWithLog):
        pd.visibility_conversion(0., 0.)
    with pytest.raises(RuntimeErrorWithLog):
        pd.visibility_conversion(1., 2.)


@pytest.mark.parametrize("qubits", [(1, 3), (2, 4)])
def test_bell_pair(qubits):
    assert pd.bell_fidelity(ideal(RpegMode.FUSION), qubits) == pytest.approx(1.)
    s = fe.overlap_from_visibility(0.82)
    assert pd.bell_fidelity(ideal(RpegMode.FUSION, sigma = 0.82), qubits) == pytest.approx((1. + s) / 2.)


def test_chsh_from_pair_simulation():
    config = ideal(RpegMode.FUSION)
    correlators = {}
    zz = gs.PauliString("ZZ")
    for key, angles in gs.CHSH_ANGLES.items():
        cond = pd.simulate_pair(config, (1, 3), angles).conditional
        correlators[key] = sum(zz.eigenvalue(k) * v for k, v in cond.items())
    assert gs.chsh(correlators).value == pytest.approx(2. * math.sqrt(2.))


def test_pair_sources():
    config = ideal(RpegMode.FUSION)
    assert pd.pair_sources(config, (1, 3)) == [1, 2]
    assert pd.pair_sources(config, (2, 4)) == [3, 4]
    with pytest.raises(RuntimeErrorWithLog):
        pd.pair_sources(config, (1, 2))
