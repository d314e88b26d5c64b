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
# fock_engine.py
#
# truncated multimode Fock space with linear optical evolution.
# An effective mode is a physical mode together with an internal
# (spectral) label, effective index = mode * internal_dim + label.
# ------------------------------------------------------------

from __future__ import annotations
from typing import Dict, Iterable, Iterator, List, Mapping, Sequence, Tuple

import math
from collections import defaultdict
from dataclasses import dataclass
from types import MappingProxyType

import numpy as np
from scipy.optimize import brentq

from .settings import Settings
from .log_system import LogSystem, RuntimeErrorWithLog, NumericErrorWithLog
from . import opt_kernel


OccupationVector = Tuple[int, ...]


def check_occupation(occ : OccupationVector, effective_modes : int, cutoff : int) -> None:
    if len(occ) != effective_modes:
        raise RuntimeErrorWithLog("occupation vector of length " + str(len(occ))
            + " on " + str(effective_modes) + " effective modes.")
    if any(n < 0 for n in occ):
        raise RuntimeErrorWithLog("negative photon number in " + str(occ) + ".")
    if sum(occ) > cutoff:
        raise RuntimeErrorWithLog("occupation " + str(occ) + " exceeds the photon cutoff " + str(cutoff) + ".")


@dataclass(frozen = True)
class InternalState:
    '''
    spectral state of a photon over the internal label basis
    '''
    amplitudes : Tuple[complex, ...]

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", tuple(complex(a) for a in self.amplitudes))
        norm = np.linalg.norm(np.array(self.amplitudes))
        if abs(norm - 1.) > Settings.cur().UNITARY_TOL:
            raise RuntimeErrorWithLog("internal state must have unit norm, got " + str(norm) + ".")

    @staticmethod
    def basis(label : int, dim : int) -> InternalState:
        v = [0j] * dim
        v[label] = 1.
        return InternalState(tuple(v))

    @property
    def dim(self) -> int:
        return len(self.amplitudes)

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.amplitudes, dtype = complex)

    def padded(self, dim : int) -> InternalState:
        if dim < self.dim:
            raise ValueError()
        return InternalState(self.amplitudes + (0j,) * (dim - self.dim))

    def overlap(self, other : InternalState) -> complex:
        dim = max(self.dim, other.dim)
        return complex(np.vdot(self.padded(dim).vector, other.padded(dim).vector))


class ModeUnitary:
    '''
    a passive linear optical element, given by its unitary transfer matrix
    '''
    def __init__(self, matrix : np.ndarray):
        matrix = np.array(matrix, dtype = complex)
        if not opt_kernel.check_unity(matrix):
            raise RuntimeErrorWithLog("The matrix is not unitary:\n" + str(matrix))
        matrix.setflags(write = False)
        self._m : np.ndarray = matrix

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    @property
    def dim(self) -> int:
        return self._m.shape[0]

    def __matmul__(self, other : ModeUnitary) -> ModeUnitary:
        return ModeUnitary(self._m @ other.matrix)

    @staticmethod
    def identity(dim : int) -> ModeUnitary:
        return ModeUnitary(np.eye(dim))

    @staticmethod
    def coupler() -> ModeUnitary:
        '''
        the symmetric 50:50 coupler [[1, i], [i, 1]] / sqrt(2)
        '''
        return ModeUnitary(np.array([[1., 1.j], [1.j, 1.]]) / np.sqrt(2))

    @staticmethod
    def phase(phis : Sequence[float]) -> ModeUnitary:
        return ModeUnitary(np.diag(np.exp(1j * np.asarray(phis, dtype = float))))

    @staticmethod
    def mzi(x : float) -> ModeUnitary:
        '''
        coupler, internal phase x on the upper arm, coupler:
        i e^{ix/2} [[sin(x/2), cos(x/2)], [cos(x/2), -sin(x/2)]]
        '''
        return ModeUnitary(mzi_matrix(x))

    @staticmethod
    def permutation(perm : Sequence[int]) -> ModeUnitary:
        '''
        the element routing mode j to mode perm[j]
        '''
        m = np.zeros((len(perm), len(perm)), dtype = complex)
        for j, k in enumerate(perm):
            m[k, j] = 1.
        return ModeUnitary(m)

    def embed(self, dim : int, modes : Sequence[int]) -> ModeUnitary:
        '''
        act on the listed modes of a larger register, identity elsewhere
        '''
        m = np.eye(dim, dtype = complex)
        idx = np.array(modes)
        m[np.ix_(idx, idx)] = self._m
        return ModeUnitary(m)


def mzi_matrix(x : float | np.ndarray) -> np.ndarray:
    '''
    closed form of the Mach-Zehnder matrix, broadcast over an array of phases
    (the matrix indices come last)
    '''
    x = np.asarray(x, dtype = float)
    s, c = np.sin(x/2), np.cos(x/2)
    pre = 1j * np.exp(0.5j * x)
    return pre[..., None, None] * np.stack([np.stack([s, c], -1), np.stack([c, -s], -1)], -2)


class FockState:
    '''
    sparse amplitudes over occupation vectors; values are never modified after construction
    '''
    def __init__(self, mode_count : int, internal_dim : int, cutoff : int,
        amplitudes : Mapping[OccupationVector, complex] | None = None, check : bool = False):
        if mode_count < 1 or internal_dim < 1 or cutoff < 0:
            raise ValueError()

        self._mode_count : int = mode_count
        self._internal_dim : int = internal_dim
        self._cutoff : int = cutoff

        tol = Settings.cur().PRUNE_TOL
        data : Dict[OccupationVector, complex] = {}
        if amplitudes is not None:
            for occ, a in amplitudes.items():
                if abs(a) >= tol:
                    data[occ] = complex(a)
        if check:
            for occ in data:
                check_occupation(occ, self.effective_modes, cutoff)
        self._amps : Mapping[OccupationVector, complex] = MappingProxyType(data)

    @property
    def mode_count(self) -> int:
        return self._mode_count

    @property
    def internal_dim(self) -> int:
        return self._internal_dim

    @property
    def cutoff(self) -> int:
        return self._cutoff

    @property
    def effective_modes(self) -> int:
        return self._mode_count * self._internal_dim

    @property
    def amplitudes(self) -> Mapping[OccupationVector, complex]:
        return self._amps

    def items(self) -> Iterator[Tuple[OccupationVector, complex]]:
        return iter(self._amps.items())

    def __len__(self) -> int:
        return len(self._amps)

    def __getitem__(self, occ : OccupationVector) -> complex:
        return self._amps.get(tuple(occ), 0j)

    def norm2(self) -> float:
        return float(sum(abs(a)**2 for a in self._amps.values()))

    def same_structure(self, other : FockState) -> bool:
        return self._mode_count == other.mode_count and self._internal_dim == other.internal_dim

    def physical_counts(self, occ : OccupationVector) -> Tuple[int, ...]:
        '''
        photon numbers per physical mode, summed over internal labels
        '''
        d = self._internal_dim
        if d == 1:
            return occ
        return tuple(sum(occ[m*d:(m+1)*d]) for m in range(self._mode_count))

    def photon_numbers(self) -> List[int]:
        return sorted(set(sum(occ) for occ in self._amps))

    def sector(self, n : int) -> FockState:
        '''
        the (unnormalized) component with exactly n photons
        '''
        return self._derive({occ : a for occ, a in self._amps.items() if sum(occ) == n})

    def scaled(self, c : complex) -> FockState:
        return self._derive({occ : c * a for occ, a in self._amps.items()})

    def normalized(self) -> FockState:
        n2 = self.norm2()
        if n2 == 0.:
            raise NumericErrorWithLog("cannot normalize a state of zero norm.")
        return self.scaled(1. / np.sqrt(n2))

    def _derive(self, amplitudes : Mapping[OccupationVector, complex]) -> FockState:
        return FockState(self._mode_count, self._internal_dim, self._cutoff, amplitudes)

    def __str__(self) -> str:
        terms = sorted(self._amps.items(), key = lambda t : -abs(t[1]))
        return " + ".join("(" + "{:.6g}".format(a) + ")|" + ",".join(str(n) for n in occ) + ">"
            for occ, a in terms) if terms else "0"


############################################################
# state preparation
############################################################

def vacuum(mode_count : int, internal_dim : int = 1, cutoff : int | None = None) -> FockState:
    if cutoff is None:
        cutoff = Settings.cur().CUTOFF
    if mode_count < 1 or internal_dim < 1 or cutoff < 0:
        raise RuntimeErrorWithLog("vacuum needs at least one mode and a non-negative cutoff.")
    return FockState(mode_count, internal_dim, cutoff, {(0,) * (mode_count * internal_dim) : 1.})


def pair_probability(xi : complex, max_pairs : int) -> float:
    '''
    probability of exactly one pair in the truncated, normalized squeezer
    '''
    x = abs(xi)**2
    return float(x / sum(x**k for k in range(max_pairs + 1)))


def xi_from_p(p : float, max_pairs : int = 1) -> float:
    '''
    squeezing amplitude whose normalized one-pair probability is p
    '''
    if p == 0.:
        return 0.
    if not 0. < p < 1. or max_pairs < 1:
        raise RuntimeErrorWithLog("pair probability " + str(p) + " out of range.")
    upper = 0.5
    if pair_probability(np.sqrt(upper), max_pairs) < p:
        raise NumericErrorWithLog("pair probability " + str(p) + " is not reachable with "
            + str(max_pairs) + " pairs.")
    x = brentq(lambda x : pair_probability(np.sqrt(x), max_pairs) - p, 0., upper, xtol = 1e-15)
    return float(np.sqrt(x))


def _create(mode_count : int, internal_dim : int, cutoff : int,
    poly : Mapping[Tuple[int, ...], complex]) -> FockState:
    '''
    apply a polynomial in the creation operators to the vacuum; keys are occupation exponents
    '''
    amps : Dict[OccupationVector, complex] = {}
    for occ, c in poly.items():
        if sum(occ) > cutoff:
            continue
        amps[occ] = c * math.sqrt(math.prod(math.factorial(n) for n in occ))
    return FockState(mode_count, internal_dim, cutoff, amps)


def _photon_poly(n_eff : int, modes : Sequence[Tuple[int, np.ndarray]], power : int,
    coeff : complex) -> Dict[Tuple[int, ...], complex]:
    '''
    coeff * (prod over the given photons of sum_l v_l a^dagger_{mode, l}) ** power / power!
    '''
    poly : Dict[Tuple[int, ...], complex] = {(0,) * n_eff : coeff / math.factorial(power)}
    for _ in range(power):
        for base, v in modes:
            new : Dict[Tuple[int, ...], complex] = defaultdict(complex)
            for mono, c in poly.items():
                for l in np.nonzero(v)[0]:
                    t = list(mono)
                    t[base + l] += 1
                    new[tuple(t)] += c * v[l]
            poly = new
    return poly


def two_mode_squeezed(xi : complex, signal_mode : int, idler_mode : int, max_pairs : int,
    mode_count : int | None = None, internal_dim : int = 1, cutoff : int | None = None,
    signal_internal : InternalState | None = None, idler_internal : InternalState | None = None) -> FockState:
    '''
    the unnormalized pair state sum_k xi^k |k>_s |k>_i, truncated at max_pairs

    With internal states, the k pairs are created by (a^dagger_{s,psi} a^dagger_{i,phi})^k / k!,
    which reduces to |k, k> when both photons carry label 0.
    '''
    if mode_count is None:
        mode_count = max(signal_mode, idler_mode) + 1
    if cutoff is None:
        cutoff = 2 * max_pairs
    if max_pairs < 0 or 2 * max_pairs > cutoff:
        raise RuntimeErrorWithLog("max_pairs = " + str(max_pairs) + " violates the photon cutoff " + str(cutoff) + ".")
    if signal_mode == idler_mode or not (0 <= signal_mode < mode_count and 0 <= idler_mode < mode_count):
        raise RuntimeErrorWithLog("invalid signal/idler modes (" + str(signal_mode) + ", " + str(idler_mode) + ").")

    sig = (signal_internal if signal_internal is not None else InternalState.basis(0, 1)).padded(internal_dim)
    idl = (idler_internal if idler_internal is not None else InternalState.basis(0, 1)).padded(internal_dim)

    n_eff = mode_count * internal_dim
    photons = [(signal_mode * internal_dim, sig.vector), (idler_mode * internal_dim, idl.vector)]
    poly : Dict[Tuple[int, ...], complex] = defaultdict(complex)
    for k in range(max_pairs + 1):
        for mono, c in _photon_poly(n_eff, photons, k, complex(xi)**k).items():
            poly[mono] += c
    return _create(mode_count, internal_dim, cutoff, poly)


############################################################
# evolution
############################################################

def _transform_sub(sub : Tuple[int, ...], u : np.ndarray) -> List[Tuple[Tuple[int, ...], complex]]:
    '''
    image of the occupation `sub` under a^dagger_j -> sum_k u[k, j] a^dagger_k
    '''
    poly : Dict[Tuple[int, ...], complex] = {(0,) * len(sub) : 1.}
    for j, n in enumerate(sub):
        col = u[:, j]
        nz = np.nonzero(np.abs(col) > 0.)[0]
        for _ in range(n):
            new : Dict[Tuple[int, ...], complex] = defaultdict(complex)
            for mono, c in poly.items():
                for k in nz:
                    t = list(mono)
                    t[k] += 1
                    new[tuple(t)] += c * col[k]
            poly = new
    norm_in = math.sqrt(math.prod(math.factorial(n) for n in sub))
    return [(mono, c * math.sqrt(math.prod(math.factorial(n) for n in mono)) / norm_in)
        for mono, c in poly.items()]


def apply_unitary(state : FockState, U : ModeUnitary | np.ndarray, mode_subset : Sequence[int],
    effective : bool = False) -> FockState:
    '''
    evolve the state through U acting on the listed physical modes (as U tensor identity on the
    internal labels), or on the listed effective modes when effective = True
    '''
    if not isinstance(U, ModeUnitary):
        U = ModeUnitary(U)
    subset = list(mode_subset)
    if len(set(subset)) != len(subset):
        raise RuntimeErrorWithLog("repeated mode in " + str(subset) + ".")
    if U.dim != len(subset):
        raise RuntimeErrorWithLog("unitary of dimension " + str(U.dim) + " on " + str(len(subset)) + " modes.")

    d = state.internal_dim
    if effective:
        if any(not 0 <= m < state.effective_modes for m in subset):
            raise RuntimeErrorWithLog("effective mode index out of range in " + str(subset) + ".")
        eff = subset
        u = U.matrix
    else:
        if any(not 0 <= m < state.mode_count for m in subset):
            raise RuntimeErrorWithLog("mode index out of range in " + str(subset) + ".")
        eff = [m * d + l for m in subset for l in range(d)]
        u = np.kron(U.matrix, np.eye(d))

    cache : Dict[Tuple[int, ...], List[Tuple[Tuple[int, ...], complex]]] = {}
    result : Dict[OccupationVector, complex] = defaultdict(complex)
    for occ, amp in state.items():
        sub = tuple(occ[e] for e in eff)
        if sub not in cache:
            cache[sub] = _transform_sub(sub, u)
        base = list(occ)
        for out_sub, c in cache[sub]:
            for e, n in zip(eff, out_sub):
                base[e] = n
            result[tuple(base)] += amp * c
    return FockState(state.mode_count, d, state.cutoff, result)


def permute_modes(state : FockState, perm : Sequence[int]) -> FockState:
    '''
    route physical mode j to mode perm[j]; equal to apply_unitary with ModeUnitary.permutation(perm)
    '''
    if sorted(perm) != list(range(state.mode_count)):
        raise RuntimeErrorWithLog("not a permutation of the modes: " + str(list(perm)) + ".")
    d = state.internal_dim
    result : Dict[OccupationVector, complex] = {}
    for occ, amp in state.items():
        new = [0] * len(occ)
        for j, k in enumerate(perm):
            new[k*d:(k+1)*d] = occ[j*d:(j+1)*d]
        result[tuple(new)] = amp
    return FockState(state.mode_count, d, state.cutoff, result)


def tensor(a : FockState, b : FockState, cutoff : int | None = None) -> FockState:
    '''
    the modes of b are appended after the modes of a; terms above the cutoff are dropped with a warning
    '''
    if a.internal_dim != b.internal_dim:
        raise RuntimeErrorWithLog("tensor of states with different internal dimensions.")
    budget = a.cutoff + b.cutoff
    if cutoff is not None:
        budget = min(budget, cutoff)

    result : Dict[OccupationVector, complex] = {}
    dropped = 0.
    for occ_a, amp_a in a.items():
        na = sum(occ_a)
        for occ_b, amp_b in b.items():
            if na + sum(occ_b) > budget:
                dropped += abs(amp_a * amp_b)**2
                continue
            result[occ_a + occ_b] = amp_a * amp_b
    if dropped > 0.:
        LogSystem.push("warning", "tensor product truncated at " + str(budget)
            + " photons, discarded squared norm " + "{:.3e}".format(dropped) + ".")
    return FockState(a.mode_count + b.mode_count, a.internal_dim, budget, result)


############################################################
# measurement
############################################################

def _matches(counts : Sequence[int], pattern : Mapping[int, int], threshold : bool) -> bool:
    for mode, n in pattern.items():
        if threshold:
            if (counts[mode] > 0) != (n > 0):
                return False
        elif counts[mode] != n:
            return False
    return True


def postselect(state : FockState, pattern : Mapping[int, int], threshold : bool = False) -> Tuple[FockState, float]:
    '''
    condition on the photon numbers of the listed physical modes (summed over internal labels)

    threshold = True models non-number-resolving detectors: a mode with a nonzero entry must
    hold at least one photon, a mode with entry 0 must be empty.
    Returns the renormalized conditional state and the probability of the pattern.
    '''
    if any(not 0 <= m < state.mode_count for m in pattern):
        raise RuntimeErrorWithLog("pattern mode out of range in " + str(dict(pattern)) + ".")
    kept = {occ : a for occ, a in state.items() if _matches(state.physical_counts(occ), pattern, threshold)}
    prob = float(sum(abs(a)**2 for a in kept.values()))
    if prob == 0.:
        return FockState(state.mode_count, state.internal_dim, state.cutoff, {}), 0.
    scale = 1. / math.sqrt(prob)
    return FockState(state.mode_count, state.internal_dim, state.cutoff,
        {occ : a * scale for occ, a in kept.items()}), prob


def click_probability(state : FockState, modes : Iterable[int]) -> float:
    '''
    probability that threshold detectors on all the listed modes click, other modes unobserved
    '''
    modes = list(modes)
    total = 0.
    for occ, a in state.items():
        counts = state.physical_counts(occ)
        if all(counts[m] > 0 for m in modes):
            total += abs(a)**2
    return float(total)


def overlap(a : FockState, b : FockState) -> complex:
    '''
    <a|b>
    '''
    if not a.same_structure(b):
        raise RuntimeErrorWithLog("overlap of states with different mode structure.")
    if len(a) > len(b):
        return complex(sum(np.conj(a[occ]) * amp for occ, amp in b.items()))
    return complex(sum(np.conj(amp) * b[occ] for occ, amp in a.items()))


############################################################
# partial distinguishability
############################################################

def overlap_from_visibility(sigma : float) -> float:
    '''
    probability level overlap of two heralded photons whose HOM fringe has visibility sigma;
    the fringe of photons with overlap s has visibility (1 + s) / (3 - s).

    Fully distinguishable photons (s = 0) still give a fringe of visibility 1/3, the
    (n_max, n_min) = (100, 50) baseline of visibility_conversion with V_hom = 0. Every
    sigma <= 1/3 maps to s = 0: sigma = 0 means V_hom = 0, not a flat fringe.
    '''
    return float(np.clip((3.*sigma - 1.) / (1. + sigma), 0., 1.))


def visibility_from_overlap(s : float) -> float:
    return float((1. + s) / (3. - s))


def dephase_internal(states : Sequence[InternalState], sigma : float) -> List[InternalState]:
    '''
    internal state sqrt(t)|0> + sqrt(1-t)|i> of the photons of source i (counted from 1),
    with t^2 the overlap that gives heralded HOM visibility sigma
    '''
    if not 0. <= sigma <= 1.:
        raise RuntimeErrorWithLog("sigma must lie in [0, 1], got " + str(sigma) + ".")
    n = len(states)
    dim = max([n + 1] + [s.dim for s in states])
    t = math.sqrt(overlap_from_visibility(sigma))
    result : List[InternalState] = []
    for i in range(1, n + 1):
        v = [0j] * dim
        v[0] = math.sqrt(t)
        v[i] += math.sqrt(1. - t)
        result.append(InternalState(tuple(v)))
    return result
