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
# device_config.py
#
# parametric description of the four-photon chip: pair sources,
# entangling gate mode, analysis stages and phaseshifter offsets
# ------------------------------------------------------------

from __future__ import annotations
from typing import Any, Dict, List, Sequence, Tuple

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from ..log_system import ConfigErrorWithLog
from ..settings import Settings
from ..fock_engine import InternalState, xi_from_p
from ..syntax import ast
from ..syntax.cparser import parse


QUBIT_COUNT = 4

# rails of the four qubits, plus the two vacuum ports of the entangling gate
QUBIT_MODES = 2 * QUBIT_COUNT
PHYSICAL_MODES = QUBIT_MODES + 2
VACUUM_PORTS = (QUBIT_MODES, QUBIT_MODES + 1)


def rail_mode(qubit : int, rail : int) -> int:
    '''
    physical mode of a rail, qubits counted from 1
    '''
    if not 1 <= qubit <= QUBIT_COUNT or rail not in (0, 1):
        raise ValueError("no rail " + str(rail) + " on qubit " + str(qubit))
    return 2 * (qubit - 1) + rail


# every thermo-optic phaseshifter of the chip, in offset order
PHASESHIFTERS : Tuple[str, ...] = (
    "pump1", "pump2", "pump3", "pump4",
    "rpeg_mzi", "rpeg_ext", "rpeg_att1", "rpeg_att2",
) + tuple(
    name for q in range(1, QUBIT_COUNT + 1) for name in ("q" + str(q) + "_phi", "q" + str(q) + "_theta")
)


def phaseshifter_index(name : str) -> int:
    try:
        return PHASESHIFTERS.index(name)
    except ValueError:
        raise ValueError("unknown phaseshifter '" + name + "'")


class RpegMode(Enum):
    FUSION = "fusion"
    CZ = "cz"


@dataclass(frozen = True)
class ErrorParams:
    '''
    sigma: heralded HOM fringe visibility of two photons from different sources
    p: photon-pair probability per pulse, 0 means the first order pair sector
    delta: standard deviation of the phaseshifter offsets (rad)
    '''
    sigma : float = 1.0
    p : float = 0.0
    delta : float = 0.0

    def __post_init__(self):
        if not 0. <= self.sigma <= 1.:
            raise ConfigErrorWithLog("sigma must lie in [0, 1], got " + str(self.sigma) + ".")
        if not 0. <= self.p < 1.:
            raise ConfigErrorWithLog("p must lie in [0, 1), got " + str(self.p) + ".")
        if not self.delta >= 0.:
            raise ConfigErrorWithLog("delta must be non-negative, got " + str(self.delta) + ".")

    @property
    def ideal(self) -> bool:
        return self.sigma == 1. and self.p == 0. and self.delta == 0.


@dataclass(frozen = True)
class SourceSpec:
    xi : complex
    signal_mode : int
    idler_mode : int
    internal : InternalState | None = None

    def __post_init__(self):
        if self.signal_mode == self.idler_mode:
            raise ConfigErrorWithLog("signal and idler of a source must use distinct modes.")
        if abs(self.xi) >= 1.:
            raise ConfigErrorWithLog("squeezing amplitude must satisfy |xi| < 1, got " + str(self.xi) + ".")


# logical (theta, phi) of the Pauli measurement bases; identity letters are measured in Z
PAULI_ANGLES : Dict[str, Tuple[float, float]] = {
    "X" : (np.pi/2, 0.),
    "Y" : (np.pi/2, np.pi/2),
    "Z" : (0., 0.),
    "I" : (0., 0.),
}


@dataclass(frozen = True)
class AnalysisSetting:
    '''
    per qubit Z rotation phi_z, then Y rotation theta_y, and the monitored rail
    '''
    phi_z : Tuple[float, ...] = (0.,) * QUBIT_COUNT
    theta_y : Tuple[float, ...] = (0.,) * QUBIT_COUNT
    monitor : Tuple[int, ...] = (0,) * QUBIT_COUNT

    def __post_init__(self):
        if not len(self.phi_z) == len(self.theta_y) == len(self.monitor):
            raise ConfigErrorWithLog("analysis setting needs one entry per qubit.")
        if any(m not in (0, 1) for m in self.monitor):
            raise ConfigErrorWithLog("monitored output must be rail 0 or 1.")
        # phases live in [0, 2 pi)
        object.__setattr__(self, "phi_z", tuple(float(np.mod(v, 2*np.pi)) for v in self.phi_z))
        object.__setattr__(self, "theta_y", tuple(float(np.mod(v, 2*np.pi)) for v in self.theta_y))
        object.__setattr__(self, "monitor", tuple(int(m) for m in self.monitor))

    @staticmethod
    def from_pauli(letters : str, monitor : Sequence[int] | None = None) -> AnalysisSetting:
        try:
            angles = [PAULI_ANGLES[c] for c in letters]
        except KeyError:
            raise ConfigErrorWithLog("unknown Pauli setting '" + letters + "'.")
        if monitor is None:
            monitor = (0,) * len(letters)
        return AnalysisSetting(
            tuple(a[1] for a in angles), tuple(a[0] for a in angles), tuple(monitor))

    def with_monitor(self, monitor : Sequence[int]) -> AnalysisSetting:
        return replace(self, monitor = tuple(monitor))


DEFAULT_P = 0.03

# source i feeds rail (signal, idler); sources 1, 2 make the pair (1, 3), sources 3, 4 the pair (2, 4)
DEFAULT_RAILS : Tuple[Tuple[int, int], ...] = (
    (rail_mode(1, 0), rail_mode(3, 0)),
    (rail_mode(1, 1), rail_mode(3, 1)),
    (rail_mode(2, 1), rail_mode(4, 1)),
    (rail_mode(2, 0), rail_mode(4, 0)),
)


@dataclass(frozen = True)
class DeviceConfig:
    sources : Tuple[SourceSpec, ...]
    rpeg : RpegMode = RpegMode.FUSION
    analysis : AnalysisSetting = field(default_factory = AnalysisSetting)
    phase_offsets : Tuple[float, ...] = ()
    error : ErrorParams = field(default_factory = ErrorParams)

    def __post_init__(self):
        if len(self.sources) != QUBIT_COUNT:
            raise ConfigErrorWithLog("the device has exactly " + str(QUBIT_COUNT) + " sources.")
        if len(self.analysis.monitor) != QUBIT_COUNT:
            raise ConfigErrorWithLog("the device has exactly " + str(QUBIT_COUNT) + " analysis stages.")
        rails = sorted(m for s in self.sources for m in (s.signal_mode, s.idler_mode))
        if rails != list(range(QUBIT_MODES)):
            raise ConfigErrorWithLog("source rails must be a permutation of the " + str(QUBIT_MODES) + " qubit modes.")
        for s in self.sources:
            if s.signal_mode >= rail_mode(3, 0):
                raise ConfigErrorWithLog("signal photons must enter the entangling gate (qubits 1 and 2).")
        if len(self.phase_offsets) not in (0, len(PHASESHIFTERS)):
            raise ConfigErrorWithLog("phase_offsets needs " + str(len(PHASESHIFTERS)) + " entries or none.")
        object.__setattr__(self, "phase_offsets", tuple(float(v) for v in self.phase_offsets))

    @staticmethod
    def default(rpeg : RpegMode = RpegMode.FUSION, p : float = DEFAULT_P,
        error : ErrorParams | None = None) -> DeviceConfig:
        '''
        the standard rail layout, all sources pumped in phase at pair probability p
        '''
        xi = complex(xi_from_p(p, Settings.cur().MULTIPHOTON_CUTOFF // 2))
        sources = tuple(SourceSpec(xi, s, i) for s, i in DEFAULT_RAILS)
        return DeviceConfig(sources, rpeg, AnalysisSetting(), (), error if error is not None else ErrorParams())

    def offset(self, name : str) -> float:
        if len(self.phase_offsets) == 0:
            return 0.
        return self.phase_offsets[phaseshifter_index(name)]

    @property
    def offsets(self) -> np.ndarray:
        if len(self.phase_offsets) == 0:
            return np.zeros(len(PHASESHIFTERS))
        return np.array(self.phase_offsets)

    def with_analysis(self, analysis : AnalysisSetting) -> DeviceConfig:
        return replace(self, analysis = analysis)

    def with_offsets(self, offsets : Sequence[float]) -> DeviceConfig:
        return replace(self, phase_offsets = tuple(offsets))

    def with_error(self, error : ErrorParams) -> DeviceConfig:
        return replace(self, error = error)

    def with_rpeg(self, rpeg : RpegMode) -> DeviceConfig:
        return replace(self, rpeg = rpeg)

    def without_analysis(self) -> DeviceConfig:
        '''
        the configuration with analysis settings and analysis offsets cleared, a key for caching
        '''
        offsets = self.phase_offsets
        if len(offsets) > 0:
            offsets = offsets[:8] + (0.,) * (len(PHASESHIFTERS) - 8)
        return replace(self, analysis = AnalysisSetting(), phase_offsets = offsets)

    def serialize(self) -> str:
        '''
        write the configuration in the device language, parse(serialize(c)) == c
        '''
        r = "device\n"
        for i, s in enumerate(self.sources):
            r += "    source " + str(i+1) + " : xi = " + repr(float(s.xi.real)) + " " + repr(float(s.xi.imag)) \
                + " , signal = " + str(s.signal_mode) + " , idler = " + str(s.idler_mode) + " ;\n"
        r += "    rpeg = " + self.rpeg.value + " ;\n"
        for q in range(QUBIT_COUNT):
            r += "    analysis " + str(q+1) + " : phi_z = " + repr(self.analysis.phi_z[q]) \
                + " , theta_y = " + repr(self.analysis.theta_y[q]) \
                + " , monitor = " + str(self.analysis.monitor[q]) + " ;\n"
        r += "    phase_offsets = [ " + " ".join([repr(v) for v in self.phase_offsets] + ["]"]) + " ;\n"
        r += "    error : sigma = " + repr(float(self.error.sigma)) + " , p = " + repr(float(self.error.p)) \
            + " , delta = " + repr(float(self.error.delta)) + " ;\n"
        r += "end\n"
        return r

    @staticmethod
    def parse(text : str, file : str = "<config>") -> DeviceConfig:
        return load_document(text, file)[0]


def _device_from_ast(tree : ast.AstDevice) -> DeviceConfig:
    sources : Dict[int, ast.AstSource] = {}
    analysis : Dict[int, ast.AstAnalysis] = {}
    rpeg = RpegMode.FUSION
    offsets : List[float] = []
    error = ErrorParams()

    for item in tree.items:
        if isinstance(item, ast.AstSource):
            if item.index in sources or not 1 <= item.index <= QUBIT_COUNT:
                raise ConfigErrorWithLog("duplicate or invalid source index " + str(item.index) + ".", item.pos)
            sources[item.index] = item
        elif isinstance(item, ast.AstAnalysis):
            if item.qubit in analysis or not 1 <= item.qubit <= QUBIT_COUNT:
                raise ConfigErrorWithLog("duplicate or invalid analysis qubit " + str(item.qubit) + ".", item.pos)
            analysis[item.qubit] = item
        elif isinstance(item, ast.AstRpeg):
            rpeg = RpegMode(item.mode)
        elif isinstance(item, ast.AstPhaseOffsets):
            offsets = item.values
        elif isinstance(item, ast.AstErrorParams):
            error = ErrorParams(item.sigma, item.p, item.delta)
        else:
            raise Exception()

    if len(sources) != QUBIT_COUNT:
        raise ConfigErrorWithLog("the device block must declare sources 1 to " + str(QUBIT_COUNT) + ".", tree.pos)

    specs = tuple(SourceSpec(sources[i].xi, sources[i].signal, sources[i].idler) for i in range(1, QUBIT_COUNT + 1))
    phi = tuple(analysis[q].phi_z if q in analysis else 0. for q in range(1, QUBIT_COUNT + 1))
    theta = tuple(analysis[q].theta_y if q in analysis else 0. for q in range(1, QUBIT_COUNT + 1))
    monitor = tuple(analysis[q].monitor if q in analysis else 0 for q in range(1, QUBIT_COUNT + 1))

    return DeviceConfig(specs, rpeg, AnalysisSetting(phi, theta, monitor), tuple(offsets), error)


def load_document(text : str, file : str = "<config>") -> Tuple[DeviceConfig, Dict[str, Any]]:
    '''
    parse a configuration document, returning the device and the experiment entries
    '''
    tree = parse(text, file)
    device = _device_from_ast(tree.device)
    experiment : Dict[str, Any] = {}
    if tree.experiment is not None:
        for key, value in tree.experiment.entries:
            if key in experiment:
                raise ConfigErrorWithLog("duplicate experiment entry '" + key + "'.", tree.experiment.pos)
            experiment[key] = value
    return device, experiment
