'''
 Copyright 2026 The PGSIM Authors
 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

 http://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
'''

# ------------------------------------------------------------
# photonic_device.py
#
# the chip: four pair sources routed by the demultiplexer into
# two Bell pairs, the reconfigurable postselected entangling gate
# (fusion or controlled-Z) on qubits 1 and 2, and one analysis
# stage per qubit.
#
# Physical modes: qubit q rail r is mode 2(q-1)+r, modes 8 and 9
# are the vacuum ports of the gate attenuators.
# ------------------------------------------------------------

from __future__ import annotations
from typing import Dict, List, Mapping, Sequence, Tuple

import functools
import math
from dataclasses import dataclass

import numpy as np
import numpy.polynomial.polynomial as npp

from .settings import Settings
from .log_system import RuntimeErrorWithLog, NumericErrorWithLog
from . import opt_kernel
from . import fock_engine as fe
from .fock_engine import FockState, ModeUnitary, InternalState, mzi_matrix
from .content.device_config import (DeviceConfig, AnalysisSetting, RpegMode, ErrorParams,
    QUBIT_COUNT, QUBIT_MODES, PHYSICAL_MODES, VACUUM_PORTS, rail_mode, phaseshifter_index)
from .content.counts_table import all_patterns
from . import graph_stabilizers as gs
from .calibration import fit_fringe


QUBITS : Tuple[int, ...] = tuple(range(1, QUBIT_COUNT + 1))
PATTERNS : List[str] = all_patterns(QUBIT_COUNT)

# modes of the entangling gate, in the order of rpeg_unitary
RPEG_MODES : Tuple[int, ...] = (rail_mode(1, 0), rail_mode(1, 1), rail_mode(2, 0), rail_mode(2, 1)) + VACUUM_PORTS

# internal phase giving stay amplitude 1/sqrt(3)
CZ_SPLIT = 2. * math.asin(1. / math.sqrt(3.))

# every source of the multiphoton model is driven at pair probability SOURCE_RATE_FACTOR * p,
# the pair rate of a coherently pumped Bell pair at brightness p
SOURCE_RATE_FACTOR = 2.

PUMP_OFFSETS = slice(phaseshifter_index("pump1"), phaseshifter_index("pump4") + 1)
GATE_OFFSETS = slice(phaseshifter_index("rpeg_mzi"), phaseshifter_index("rpeg_att2") + 1)
ANALYSIS_OFFSETS = slice(phaseshifter_index("q1_phi"), phaseshifter_index("q4_theta") + 1)


@dataclass(frozen = True)
class OutcomeDistribution:
    '''
    probability of each detection pattern (one click per qubit, the bit naming the rail);
    probabilities are unconditioned, `conditional` divides by the postselection probability;
    discarded is the source probability left out by the photon cutoff
    '''
    probabilities : Dict[str, float]
    truncated : bool = False
    discarded : float = 0.

    @property
    def postselection(self) -> float:
        return float(sum(self.probabilities.values()))

    @property
    def conditional(self) -> Dict[str, float]:
        total = self.postselection
        if total <= 0.:
            raise NumericErrorWithLog("the postselection probability is zero.")
        return {k : v / total for k, v in self.probabilities.items()}

    def vector(self) -> np.ndarray:
        return np.array([self.probabilities[k] for k in all_patterns(len(next(iter(self.probabilities))))])


############################################################
# sources
############################################################

def source_internal_states(config : DeviceConfig) -> Tuple[List[InternalState], int]:
    '''
    internal states of the photons of each source and the internal dimension in use
    '''
    explicit = [s.internal for s in config.sources]
    if all(s is not None for s in explicit):
        dim = max(s.dim for s in explicit)
        return [s.padded(dim) for s in explicit], dim
    if config.error.sigma >= 1.:
        return [InternalState.basis(0, 1)] * len(config.sources), 1
    states = fe.dephase_internal([InternalState.basis(0, 1)] * len(config.sources), config.error.sigma)
    dim = max(Settings.cur().INTERNAL_DIM, states[0].dim)
    return [s.padded(dim) for s in states], dim


def build_bell_pairs(config : DeviceConfig, max_pairs : int = 1, cutoff : int | None = None,
    pumped : Sequence[int] | None = None, unit_amplitude : bool = False) -> FockState:
    '''
    product of the four pair sources, routed by the demultiplexer to the qubit rails.
    The four photon, one photon per qubit sector is |Phi+>_13 |Phi+>_24 up to normalization.

    pumped: sources (from 1) that receive pump light, all by default
    unit_amplitude: keep only the pump phase of every source, |xi| = 1
    '''
    if cutoff is None:
        cutoff = 8 * max_pairs
    states, dim = source_internal_states(config)
    offsets = config.offsets

    state = None
    perm : List[int] = []
    for i, s in enumerate(config.sources):
        xi = complex(s.xi)
        if unit_amplitude:
            xi = xi / abs(xi) if abs(xi) > 0 else 1.
        xi *= np.exp(2j * offsets[PUMP_OFFSETS][i])
        if pumped is not None and (i + 1) not in pumped:
            xi = 0.
        pair = fe.two_mode_squeezed(xi, 0, 1, max_pairs, internal_dim = dim,
            signal_internal = states[i], idler_internal = states[i])
        state = pair if state is None else fe.tensor(state, pair, cutoff)
        perm += [s.signal_mode, s.idler_mode]
    state = fe.tensor(state, fe.vacuum(PHYSICAL_MODES - QUBIT_MODES, dim, 0), cutoff)
    perm += list(VACUUM_PORTS)
    return fe.permute_modes(state, perm)


############################################################
# passive elements
############################################################

def rpeg_matrices(mode : RpegMode, offsets : np.ndarray | Sequence[float] | None = None) -> np.ndarray:
    '''
    transfer matrices of the entangling gate on RPEG_MODES, broadcast over leading axes of offsets.
    offsets: (..., 4) errors on the rail-1 MZI, the external phase of qubit 1 rail 1
    and the two attenuator MZIs

    fusion: rail-1 MZI fully crossed, attenuators transparent (postselected success 1/2)
    cz: rail-1 MZI and both attenuators with stay amplitude 1/sqrt(3) (postselected success 1/9)
    '''
    if offsets is None:
        offsets = np.zeros(4)
    offsets = np.asarray(offsets, dtype = float)
    if mode == RpegMode.FUSION:
        x, y = 0., np.pi
    else:
        x, y = CZ_SPLIT, CZ_SPLIT

    m = mzi_matrix(x + offsets[..., 0])
    ext = np.exp(1j * offsets[..., 1])
    a1 = mzi_matrix(y + offsets[..., 2])
    a2 = mzi_matrix(y + offsets[..., 3])

    u = np.zeros(offsets.shape[:-1] + (6, 6), dtype = complex)
    # rail 1 interferometer between (q1 r1, q2 r1)
    u[..., 1, 1] = m[..., 0, 0] * ext
    u[..., 3, 1] = m[..., 1, 0] * ext
    u[..., 1, 3] = m[..., 0, 1]
    u[..., 3, 3] = m[..., 1, 1]
    # attenuators (q1 r0, port 8) and (q2 r0, port 9)
    for a, r, v in ((a1, 0, 4), (a2, 2, 5)):
        u[..., r, r] = a[..., 0, 0]
        u[..., v, r] = a[..., 1, 0]
        u[..., r, v] = a[..., 0, 1]
        u[..., v, v] = a[..., 1, 1]
    return u


def rpeg_unitary(mode : RpegMode, offsets : Sequence[float] | None = None) -> ModeUnitary:
    return ModeUnitary(rpeg_matrices(mode, offsets))


def analysis_blocks(theta : np.ndarray | float, phi : np.ndarray | float) -> np.ndarray:
    '''
    two-rail analysis unitary MZI(pi - theta) . diag(e^{i phi}, 1); detection in rail 0
    projects on cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>
    '''
    theta = np.asarray(theta, dtype = float)
    phi = np.asarray(phi, dtype = float)
    m = mzi_matrix(np.pi - theta)
    col = np.stack([np.exp(1j * phi), np.ones_like(phi, dtype = complex)], -1)
    return m * col[..., None, :]


def physical_angles(setting : AnalysisSetting, frame : Sequence[np.ndarray] | None = None
    ) -> Tuple[np.ndarray, np.ndarray]:
    '''
    convert logical (theta_y, phi_z) to the phases of the device rails
    '''
    n = len(setting.theta_y)
    theta = np.array(setting.theta_y, dtype = float)
    phi = np.array(setting.phi_z, dtype = float)
    if frame is None:
        return theta, phi
    for q in range(n):
        psi = opt_kernel.dagger(frame[q]) @ opt_kernel.bloch_state(theta[q], phi[q])
        theta[q], phi[q] = opt_kernel.bloch_angles(psi)
    return theta, phi


def analysis_unitary(setting : AnalysisSetting, frame : Sequence[np.ndarray] | None = None,
    offsets : Sequence[float] | None = None) -> ModeUnitary:
    '''
    block diagonal unitary of the analysis stages on the qubit modes 0..7.
    offsets: per qubit (phi, theta) errors, in the order of the phaseshifter inventory
    '''
    theta, phi = physical_angles(setting, frame)
    n = len(theta)
    if offsets is not None:
        off = np.asarray(offsets, dtype = float).reshape(n, 2)
        phi = phi + off[:, 0]
        theta = theta + off[:, 1]
    blocks = analysis_blocks(theta, phi)
    u = np.zeros((2*n, 2*n), dtype = complex)
    for q in range(n):
        u[2*q:2*q+2, 2*q:2*q+2] = blocks[q]
    return ModeUnitary(u)


############################################################
# dual rail bookkeeping
############################################################

def rail_density(state : FockState, qubits : Sequence[int]) -> np.ndarray:
    '''
    unnormalized density matrix of the dual rail qubits over the component holding exactly
    one photon per listed qubit and none elsewhere; internal labels are traced out
    '''
    d = state.internal_dim
    n = len(qubits)
    rails = [(rail_mode(q, 0), rail_mode(q, 1)) for q in qubits]
    groups : Dict[Tuple[int, ...], np.ndarray] = {}
    for occ, a in state.items():
        counts = state.physical_counts(occ)
        if sum(counts) != n:
            continue
        idx = 0
        labels : List[int] = []
        for m0, m1 in rails:
            if counts[m0] + counts[m1] != 1:
                break
            m = m0 if counts[m0] == 1 else m1
            idx = 2 * idx + (m - m0)
            labels.append(next(l for l in range(d) if occ[m*d + l] == 1))
        else:
            key = tuple(labels)
            if key not in groups:
                groups[key] = np.zeros(2**n, dtype = complex)
            groups[key][idx] += a
    rho = np.zeros((2**n, 2**n), dtype = complex)
    for v in groups.values():
        rho += np.outer(v, np.conj(v))
    return rho


def one_photon_per_qubit(state : FockState, qubits : Sequence[int] = QUBITS) -> Tuple[FockState, float]:
    '''
    condition on the dual rail subspace of the listed qubits
    '''
    rails = [(rail_mode(q, 0), rail_mode(q, 1)) for q in qubits]
    kept = {}
    for occ, a in state.items():
        counts = state.physical_counts(occ)
        if sum(counts) == len(qubits) and all(counts[m0] + counts[m1] == 1 for m0, m1 in rails):
            kept[occ] = a
    prob = float(sum(abs(a)**2 for a in kept.values()))
    if prob == 0.:
        return FockState(state.mode_count, state.internal_dim, state.cutoff, {}), 0.
    return FockState(state.mode_count, state.internal_dim, state.cutoff,
        {k : a / math.sqrt(prob) for k, a in kept.items()}), prob


def encode_logical(vector : np.ndarray, frame : Sequence[np.ndarray], cutoff : int = 4) -> FockState:
    '''
    the dual rail Fock state whose logical content (after frame correction) is `vector`
    '''
    rails = opt_kernel.kron_all([opt_kernel.dagger(f) for f in frame]) @ vector
    n = len(frame)
    amps = {}
    for idx, a in enumerate(rails):
        occ = [0] * PHYSICAL_MODES
        for q in range(n):
            occ[2*q + ((idx >> (n - 1 - q)) & 1)] = 1
        amps[tuple(occ)] = a
    return FockState(PHYSICAL_MODES, 1, cutoff, amps)


############################################################
# first order kernel (indistinguishable photons), vectorized over samples
############################################################

def _pair_terms(config : DeviceConfig) -> List[Tuple[int, int, int, int]]:
    '''
    (source i, source j, rail of qubit 3, rail of qubit 4) for every pair of sources
    whose idlers herald qubits 3 and 4
    '''
    terms = []
    for i, a in enumerate(config.sources):
        for j, b in enumerate(config.sources):
            if a.idler_mode in (rail_mode(3, 0), rail_mode(3, 1)) and b.idler_mode in (rail_mode(4, 0), rail_mode(4, 1)):
                terms.append((i, j, a.idler_mode - rail_mode(3, 0), b.idler_mode - rail_mode(4, 0)))
    return terms


def rail_amplitudes_batch(config : DeviceConfig, pump_offsets : np.ndarray, gate_offsets : np.ndarray) -> np.ndarray:
    '''
    amplitudes (n, 16) of the four rail-encoded qubits after the entangling gate, for n offset
    samples; normalized to the one photon per qubit input, so the squared norm is the gate success

    Two signal photons entering modes s, t leave in modes o1, o2 with amplitude
    R[o1, s] R[o2, t] + R[o1, t] R[o2, s].
    '''
    pump_offsets = np.atleast_2d(pump_offsets)
    gate_offsets = np.atleast_2d(gate_offsets)
    n = pump_offsets.shape[0]
    r = rpeg_matrices(config.rpeg, gate_offsets)
    xi = np.array([s.xi for s in config.sources], dtype = complex)[None, :] * np.exp(2j * pump_offsets)

    amps = np.zeros((n, 2, 2, 2, 2), dtype = complex)
    norm2 = 0.
    for i, j, x3, x4 in _pair_terms(config):
        si = RPEG_MODES.index(config.sources[i].signal_mode)
        sj = RPEG_MODES.index(config.sources[j].signal_mode)
        w = xi[:, i] * xi[:, j]
        norm2 += abs(config.sources[i].xi * config.sources[j].xi)**2
        for x1 in (0, 1):
            for x2 in (0, 1):
                o1, o2 = x1, 2 + x2
                amps[:, x1, x2, x3, x4] += w * (r[:, o1, si] * r[:, o2, sj] + r[:, o1, sj] * r[:, o2, si])
    if norm2 == 0.:
        raise NumericErrorWithLog("no pumped source pair heralds qubits 3 and 4.")
    return amps.reshape(n, 16) / math.sqrt(norm2)


def pattern_probabilities_batch(amps : np.ndarray, blocks : np.ndarray) -> np.ndarray:
    '''
    amps: (n, 16) rail amplitudes; blocks: (n, 4, 2, 2) analysis unitaries; returns (n, 16)
    '''
    n = amps.shape[0]
    t = amps.reshape(n, 2, 2, 2, 2)
    t = np.einsum('nia,najkl->nijkl', blocks[:, 0], t)
    t = np.einsum('njb,nibkl->nijkl', blocks[:, 1], t)
    t = np.einsum('nkc,nijcl->nijkl', blocks[:, 2], t)
    t = np.einsum('nld,nijkd->nijkl', blocks[:, 3], t)
    return (np.abs(t)**2).reshape(n, 16)


############################################################
# frame correction
############################################################

GRAPH_OF_MODE = {
    RpegMode.FUSION : gs.star_state,
    RpegMode.CZ : gs.line_state,
}

# qubits carrying a Hadamard in the frame of each gate mode
HADAMARDS = {
    RpegMode.FUSION : (1, 1, 1, 0),
    RpegMode.CZ : (0, 0, 1, 1),
}


@functools.lru_cache(maxsize = None)
def frame_correction(mode : RpegMode) -> Tuple[np.ndarray, ...]:
    '''
    per qubit 2x2 unitaries F_q with (tensor F_q) . rails = logical state, so that the ideal
    output is the star state (fusion) or the line state (cz) with its generators verbatim.
    F_q = H^{h_q} diag(1, e^{i alpha_q}), the alphas found from the ideal output amplitudes.
    '''
    config = DeviceConfig.default(mode)
    v = rail_amplitudes_batch(config, np.zeros((1, 4)), np.zeros((1, 4)))[0]
    target = gs.ideal_state_vector(GRAPH_OF_MODE[mode]())
    had = HADAMARDS[mode]
    hk = opt_kernel.kron_all([opt_kernel.optlib["H"] if h else opt_kernel.optlib["I"] for h in had])
    w = hk @ target

    tol = 1e-9
    support = [x for x in range(16) if abs(v[x]) > tol]
    support.sort(key = lambda x : (bin(x).count("1"), x))
    n = QUBIT_COUNT
    alpha : Dict[int, float] = {}
    gamma = None
    for x in support:
        if abs(w[x]) < tol:
            raise NumericErrorWithLog("the ideal gate output does not match the target graph state.")
        bits = [(x >> (n - 1 - q)) & 1 for q in range(n)]
        target_phase = float(np.angle(w[x] / v[x]))
        if gamma is None:
            for q in range(n):
                if bits[q]:
                    alpha[q] = 0.
            gamma = target_phase - sum(alpha[q] for q in range(n) if bits[q])
            continue
        free = [q for q in range(n) if bits[q] and q not in alpha]
        known = sum(alpha[q] for q in range(n) if bits[q] and q in alpha)
        if free:
            for q in free[1:]:
                alpha[q] = 0.
            alpha[free[0]] = target_phase - gamma - known
    frame = tuple(
        (opt_kernel.optlib["H"] if had[q] else opt_kernel.optlib["I"]) @ np.diag([1., np.exp(1j * alpha.get(q, 0.))])
        for q in range(n))

    logical = opt_kernel.kron_all(list(frame)) @ v
    if gs.state_fidelity(logical, target) < 1. - 1e-9:
        raise NumericErrorWithLog("no local frame maps the ideal gate output to the target graph state.")
    return frame


############################################################
# simulation
############################################################

def _analysis_offsets(config : DeviceConfig) -> np.ndarray:
    return config.offsets[ANALYSIS_OFFSETS]


def setting_blocks(config : DeviceConfig) -> np.ndarray:
    '''
    the (4, 2, 2) physical analysis unitaries of the configuration, offsets included
    '''
    theta, phi = physical_angles(config.analysis, frame_correction(config.rpeg))
    off = _analysis_offsets(config).reshape(QUBIT_COUNT, 2)
    return analysis_blocks(theta + off[:, 1], phi + off[:, 0])


@functools.lru_cache(maxsize = 512)
def prepared_rail_density(config : DeviceConfig) -> np.ndarray:
    '''
    rail density matrix after the entangling gate, first order pair sector, normalized to
    the one photon per qubit input (trace = gate success probability). Call with
    config.without_analysis() to share the result between settings.
    '''
    state = build_bell_pairs(config).sector(4)
    norm = float(np.trace(rail_density(state, QUBITS)).real)
    if norm == 0.:
        raise NumericErrorWithLog("the sources produce no one photon per qubit component.")
    out = fe.apply_unitary(state, rpeg_unitary(config.rpeg, config.offsets[GATE_OFFSETS]), RPEG_MODES)
    return rail_density(out, QUBITS) / norm


def logical_density_matrix(config : DeviceConfig) -> np.ndarray:
    '''
    normalized logical state of the fourfold postselected output, in the frame of the gate mode
    '''
    rho = prepared_rail_density(config.without_analysis())
    f = opt_kernel.kron_all(list(frame_correction(config.rpeg)))
    rho = f @ rho @ opt_kernel.dagger(f)
    tr = np.trace(rho).real
    if tr == 0.:
        raise NumericErrorWithLog("the postselection probability is zero.")
    return rho / tr


def multiphoton_max_pairs() -> int:
    return Settings.cur().MULTIPHOTON_CUTOFF // 2


@functools.lru_cache(maxsize = 64)
def multiphoton_sectors(config : DeviceConfig) -> Dict[int, FockState]:
    '''
    gate output of the n-pair sectors (n >= 2) at unit squeezing amplitude; the state at
    amplitude xi is sum_n xi^n (sector n). Call with config.without_analysis().
    '''
    cutoff = Settings.cur().MULTIPHOTON_CUTOFF
    k = multiphoton_max_pairs()
    state = build_bell_pairs(config, max_pairs = k, cutoff = cutoff, unit_amplitude = True)
    out = fe.apply_unitary(state, rpeg_unitary(config.rpeg, config.offsets[GATE_OFFSETS]), RPEG_MODES)
    return {n : out.sector(2*n) for n in range(2, k + 1)}


@functools.lru_cache(maxsize = 256)
def sector_click_probabilities(config : DeviceConfig) -> Dict[int, np.ndarray]:
    '''
    B_n(pattern): probability that the threshold detectors on the four monitored rails all
    click, from the n-pair sector at unit amplitude, for the 16 choices of monitored rails
    '''
    blocks = setting_blocks(config)
    result : Dict[int, np.ndarray] = {}
    for n, sector in multiphoton_sectors(config.without_analysis()).items():
        s = sector
        for q in QUBITS:
            s = fe.apply_unitary(s, blocks[q - 1], [rail_mode(q, 0), rail_mode(q, 1)])
        result[n] = np.array([
            fe.click_probability(s, [rail_mode(q, int(b)) for q, b in zip(QUBITS, pattern)])
            for pattern in PATTERNS])
    return result


def source_weight(p : float) -> float:
    '''
    |xi|^2 of every source at brightness p
    '''
    return fe.xi_from_p(SOURCE_RATE_FACTOR * p, multiphoton_max_pairs())**2


def pair_number_weights(p : float) -> np.ndarray:
    '''
    unnormalized probability of n pairs in total over the four truncated sources, n = 0 .. 4k
    '''
    k = multiphoton_max_pairs()
    x = source_weight(p)
    counts = npp.polypow(np.ones(k + 1), QUBIT_COUNT)
    return counts * x**np.arange(len(counts))


def discarded_weight(p : float) -> float:
    '''
    probability of the source terms above MULTIPHOTON_CUTOFF photons, which the sectors leave out
    '''
    w = pair_number_weights(p)
    return float(w[multiphoton_max_pairs() + 1:].sum() / w.sum())


def combine_sectors(sectors : Mapping[int, np.ndarray], p : float) -> np.ndarray:
    '''
    click probabilities of the normalized sources at brightness p
    '''
    x = source_weight(p)
    z = pair_number_weights(p).sum()
    return sum(x**n * b for n, b in sectors.items()) / z


def simulate(config : DeviceConfig) -> OutcomeDistribution:
    '''
    probability of the 16 fourfold coincidence patterns.

    error.p = 0: first order pair sector with number resolved detection, probabilities
    relative to the one photon per qubit input (summing to the gate success probability).
    error.p > 0: sources up to the multiphoton cutoff at pair probability p, threshold
    detectors on the monitored rails only, probabilities per pulse.
    '''
    if config.error.p == 0.:
        rho = prepared_rail_density(config.without_analysis())
        a = opt_kernel.kron_all(list(setting_blocks(config)))
        probs = np.real(np.einsum('ij,jk,ik->i', a, rho, np.conj(a)))
        return OutcomeDistribution({k : float(max(v, 0.)) for k, v in zip(PATTERNS, probs)})

    if len(set(round(abs(s.xi), 12) for s in config.sources)) != 1:
        raise RuntimeErrorWithLog("the multiphoton model needs equal pump amplitudes on all sources.")
    # the sectors do not depend on p
    key = config.with_error(ErrorParams(config.error.sigma))
    probs = combine_sectors(sector_click_probabilities(key), config.error.p)
    discarded = discarded_weight(config.error.p)
    return OutcomeDistribution({k : float(v) for k, v in zip(PATTERNS, probs)},
        discarded > Settings.cur().PROB_FLOOR, discarded)


def simulate_setting(config : DeviceConfig, letters : str) -> OutcomeDistribution:
    return simulate(config.with_analysis(AnalysisSetting.from_pauli(letters)))


############################################################
# Bell pairs
############################################################

def pair_sources(config : DeviceConfig, qubits : Tuple[int, int]) -> List[int]:
    '''
    sources (from 1) whose signal and idler feed the two qubits
    '''
    a, b = qubits
    r = []
    for i, s in enumerate(config.sources):
        if {s.signal_mode // 2 + 1, s.idler_mode // 2 + 1} == {a, b}:
            r.append(i + 1)
    if not r:
        raise RuntimeErrorWithLog("no source feeds qubits " + str(qubits) + ".")
    return r


@functools.lru_cache(maxsize = 64)
def bell_pair_density(config : DeviceConfig, qubits : Tuple[int, int] = (1, 3)) -> np.ndarray:
    '''
    normalized two qubit rail state of a Bell pair with the entangling gate bypassed
    '''
    state = build_bell_pairs(config, pumped = pair_sources(config, qubits)).sector(2)
    rho = rail_density(state, qubits)
    tr = np.trace(rho).real
    if tr == 0.:
        raise NumericErrorWithLog("the pair sources produce no two photon component.")
    return rho / tr


def bell_fidelity(config : DeviceConfig, qubits : Tuple[int, int] = (1, 3)) -> float:
    phi = np.array([1., 0., 0., 1.], dtype = complex) / math.sqrt(2.)
    return float(np.real(np.conj(phi) @ bell_pair_density(config.without_analysis(), qubits) @ phi))


def simulate_pair(config : DeviceConfig, qubits : Tuple[int, int],
    angles : Tuple[Tuple[float, float], Tuple[float, float]]) -> OutcomeDistribution:
    '''
    pattern probabilities of a Bell pair measured along logical (theta, phi) axes
    '''
    rho = bell_pair_density(config.without_analysis(), qubits)
    off = _analysis_offsets(config).reshape(QUBIT_COUNT, 2)
    blocks = [analysis_blocks(t + off[q - 1, 1], p + off[q - 1, 0]) for (t, p), q in zip(angles, qubits)]
    a = np.kron(blocks[0], blocks[1])
    probs = np.real(np.einsum('ij,jk,ik->i', a, rho, np.conj(a)))
    return OutcomeDistribution({k : float(max(v, 0.)) for k, v in zip(all_patterns(2), probs)})


############################################################
# HOM fringe
############################################################

def hom_fringe(config : DeviceConfig, phase_sweep : Sequence[float], sources : Tuple[int, int] = (2, 3)
    ) -> List[Tuple[float, float]]:
    '''
    heralded two photon interference of the signals of two sources on the rail-1 MZI of the
    entangling gate: for every internal phase, the probability that both outputs click given
    both idlers clicked
    '''
    states, dim = source_internal_states(config)
    a, b = sources
    pair_a = fe.two_mode_squeezed(1., 0, 1, 1, internal_dim = dim,
        signal_internal = states[a - 1], idler_internal = states[a - 1]).sector(2)
    pair_b = fe.two_mode_squeezed(1., 0, 1, 1, internal_dim = dim,
        signal_internal = states[b - 1], idler_internal = states[b - 1]).sector(2)
    heralded = fe.tensor(pair_a, pair_b)
    offset = config.offset("rpeg_mzi")

    result : List[Tuple[float, float]] = []
    for x in phase_sweep:
        out = fe.apply_unitary(heralded, fe.ModeUnitary.mzi(float(x) + offset), [0, 2])
        _, prob = fe.postselect(out, {0 : 1, 1 : 1, 2 : 1, 3 : 1}, threshold = True)
        result.append((float(x), prob))
    return result


def visibility_conversion(n_max : float, n_min : float) -> Tuple[float, float]:
    '''
    fringe visibility (N_max - N_min) / (N_max + N_min) and dip equivalent (N_max - 2 N_min) / N_max
    '''
    if n_max <= 0.:
        raise RuntimeErrorWithLog("N_max must be positive.")
    if n_min < 0. or n_min > n_max:
        raise RuntimeErrorWithLog("need N_max >= N_min >= 0.")
    return (n_max - n_min) / (n_max + n_min), (n_max - 2. * n_min) / n_max


def fringe_visibility(samples : Sequence[Tuple[float, float]]) -> Tuple[float, float]:
    '''
    (V, V_hom) from the extremes of the sinusoid fitted to fringe samples
    '''
    fit = fit_fringe(samples)
    n_max, n_min = fit.c + fit.A, max(fit.c - fit.A, 0.)
    return visibility_conversion(n_max, n_min)


def clear_caches() -> None:
    '''
    drop the prepared states, needed after changing the cutoffs in Settings
    '''
    prepared_rail_density.cache_clear()
    multiphoton_sectors.cache_clear()
    bell_pair_density.cache_clear()
    sector_click_probabilities.cache_clear()
    frame_correction.cache_clear()
