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
# error_models.py
#
# the three independent error models of the device: partial
# distinguishability (sigma), multiphoton emission (p) and random
# phaseshifter offsets (delta). Each predictor keeps the other two
# parameters ideal.
# ------------------------------------------------------------

from __future__ import annotations
from typing import Callable, Dict, List, Sequence, Tuple

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .settings import Settings
from .log_system import RuntimeErrorWithLog
from .content.device_config import DeviceConfig, AnalysisSetting, ErrorParams, RpegMode, PHASESHIFTERS
from . import photonic_device as pd
from . import graph_stabilizers as gs
from .graph_stabilizers import Label, StabilizerGroup


STATE_KINDS : Dict[str, RpegMode] = {
    "S4" : RpegMode.FUSION,
    "L4" : RpegMode.CZ,
}


def state_mode(state_kind : str) -> RpegMode:
    if state_kind not in STATE_KINDS:
        raise RuntimeErrorWithLog("unknown state '" + state_kind + "', expected one of "
            + ", ".join(STATE_KINDS) + ".")
    return STATE_KINDS[state_kind]


def state_group(state_kind : str) -> StabilizerGroup:
    return gs.generators_from_graph(pd.GRAPH_OF_MODE[state_mode(state_kind)]())


def stabilizer_settings(group : StabilizerGroup) -> List[str]:
    '''
    the distinct local measurement settings of the group elements, identity excluded
    '''
    return sorted({e.setting for label, e in group if label != ()})


def label_name(label : Label) -> str:
    return "I" if label == () else "".join("g" + str(i) for i in label)


@dataclass
class ModelPrediction:
    '''
    expected stabilizer values, fidelity and the conditional outcome distribution
    of every measurement setting at one value of one error parameter
    '''
    state_kind : str
    parameter : str
    value : float
    expectations : Dict[Label, float]
    fidelity : float
    distributions : Dict[str, np.ndarray] = field(default_factory = dict)


def _prediction(state_kind : str, parameter : str, value : float, group : StabilizerGroup,
    distributions : Dict[str, np.ndarray]) -> ModelPrediction:
    expectations : Dict[Label, float] = {}
    for label, e in group:
        if label == ():
            expectations[label] = 1.
        else:
            expectations[label] = float(np.clip(e.eigenvalues() @ distributions[e.setting], -1., 1.))
    f = gs.fidelity(expectations.values())
    return ModelPrediction(state_kind, parameter, value, expectations, float(np.clip(f, 0., 1.)), distributions)


def _conditional(vector : np.ndarray) -> np.ndarray:
    return vector / vector.sum()


############################################################
# predictors
############################################################

def predict_distinguishability(state_kind : str, sigma : float) -> ModelPrediction:
    '''
    first order pair sector, every photon dephased to give HOM fringe visibility sigma
    '''
    config = DeviceConfig.default(state_mode(state_kind), error = ErrorParams(sigma = sigma))
    group = state_group(state_kind)
    dists = {s : _conditional(pd.simulate(config.with_analysis(AnalysisSetting.from_pauli(s))).vector())
        for s in stabilizer_settings(group)}
    return _prediction(state_kind, "sigma", sigma, group, dists)


def predict_multiphoton(state_kind : str, p : float) -> ModelPrediction:
    '''
    sources expanded to MULTIPHOTON_CUTOFF photons at brightness p (each source at pair
    probability 2p), threshold detectors on the four monitored rails; p = 0 is the first
    order prediction
    '''
    if Settings.cur().MULTIPHOTON_CUTOFF < 6:
        raise RuntimeErrorWithLog("the multiphoton model needs a cutoff of at least 6 photons, got "
            + str(Settings.cur().MULTIPHOTON_CUTOFF) + ".")
    config = DeviceConfig.default(state_mode(state_kind), error = ErrorParams(p = p))
    group = state_group(state_kind)
    dists = {s : _conditional(pd.simulate(config.with_analysis(AnalysisSetting.from_pauli(s))).vector())
        for s in stabilizer_settings(group)}
    return _prediction(state_kind, "p", p, group, dists)


def phase_error_distribution(config : DeviceConfig, setting : str, delta : float, n_samples : int,
    rng : np.random.Generator) -> np.ndarray:
    '''
    conditional outcome distribution of one setting averaged over n_samples draws of
    Normal(0, delta) offsets on every phaseshifter
    '''
    offsets = rng.normal(0., delta, (n_samples, len(PHASESHIFTERS)))
    amps = pd.rail_amplitudes_batch(config, offsets[:, pd.PUMP_OFFSETS], offsets[:, pd.GATE_OFFSETS])
    theta, phi = pd.physical_angles(AnalysisSetting.from_pauli(setting), pd.frame_correction(config.rpeg))
    analysis = offsets[:, pd.ANALYSIS_OFFSETS].reshape(n_samples, -1, 2)
    blocks = pd.analysis_blocks(theta[None, :] + analysis[..., 1], phi[None, :] + analysis[..., 0])
    probs = pd.pattern_probabilities_batch(amps, blocks)
    return np.mean(probs / probs.sum(axis = 1, keepdims = True), axis = 0)


def predict_phase_error(state_kind : str, delta : float, n_samples : int | None = None,
    seed : int | None = 0) -> ModelPrediction:
    '''
    Monte Carlo over phaseshifter offsets, a fresh draw for every sample of every measurement
    setting; the stream of each setting is spawned from one SeedSequence, so a fixed seed
    gives identical predictions
    '''
    if n_samples is None:
        n_samples = Settings.cur().MC_SAMPLES
    if n_samples < 1:
        raise RuntimeErrorWithLog("the Monte Carlo needs at least one sample.")
    config = DeviceConfig.default(state_mode(state_kind), error = ErrorParams(delta = delta))
    group = state_group(state_kind)
    settings = stabilizer_settings(group)
    streams = np.random.SeedSequence(seed).spawn(len(settings))
    dists = {s : phase_error_distribution(config, s, delta, n_samples, np.random.default_rng(ss))
        for s, ss in zip(settings, streams)}
    return _prediction(state_kind, "delta", delta, group, dists)


MODELS : Dict[str, Callable[..., ModelPrediction]] = {
    "sigma" : predict_distinguishability,
    "p" : predict_multiphoton,
    "delta" : predict_phase_error,
}


def predict(parameter : str, state_kind : str, value : float, **kwargs) -> ModelPrediction:
    if parameter not in MODELS:
        raise RuntimeErrorWithLog("unknown error model '" + parameter + "', expected one of "
            + ", ".join(MODELS) + ".")
    return MODELS[parameter](state_kind, value, **kwargs)


def prediction_grid(parameter : str, state_kind : str, values : Sequence[float], **kwargs) -> List[ModelPrediction]:
    return [predict(parameter, state_kind, float(v), **kwargs) for v in values]


############################################################
# source purity
############################################################

@dataclass(frozen = True)
class G2Result:
    g2_zero : float

    @property
    def purity(self) -> float:
        return purity_from_g2(self.g2_zero)


def purity_from_g2(g2_zero : float) -> float:
    '''
    heralded purity of a source from its unheralded g2(0) = 1 + 1/K, purity 1/K
    '''
    if not 1. <= g2_zero <= 2.:
        raise RuntimeErrorWithLog("g2(0) must lie in [1, 2], got " + str(g2_zero) + ".")
    return float(g2_zero - 1.)


############################################################
# export
############################################################

def export_grid(predictions : Sequence[ModelPrediction], expectation_path : str | Path,
    fidelity_path : str | Path) -> None:
    '''
    write (parameter, stabilizer_label, expectation) and (parameter, fidelity) tables
    '''
    with open(expectation_path, "w", newline = "") as f:
        writer = csv.writer(f)
        writer.writerow(("parameter", "stabilizer_label", "expectation"))
        for pred in predictions:
            for label, v in pred.expectations.items():
                writer.writerow((repr(pred.value), label_name(label), repr(v)))
    with open(fidelity_path, "w", newline = "") as f:
        writer = csv.writer(f)
        writer.writerow(("parameter", "fidelity"))
        for pred in predictions:
            writer.writerow((repr(pred.value), repr(pred.fidelity)))
