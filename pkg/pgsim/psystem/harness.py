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
# harness.py
#
# experiment orchestration: run a measurement on the simulated
# device, sample finite counts at a count rate, derive the reported
# quantities from the counts, and export / re-import the run.
#
# Randomness: the seed of a run feeds one SeedSequence. Fourfold
# experiments spawn one child per measurement setting (in the order
# the settings are listed) and every child spawns two streams, the
# phase Monte Carlo and the count sampling. Other experiments draw
# from a single generator.
# ------------------------------------------------------------

from __future__ import annotations
from typing import Any, Callable, Dict, List, Mapping, Sequence, Tuple

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from .settings import Settings
from .log_system import LogSystem, RuntimeErrorWithLog, ConfigErrorWithLog, NumericErrorWithLog
from .content.device_config import (QUBIT_COUNT, PAULI_ANGLES, DEFAULT_P, DeviceConfig,
    ErrorParams, RpegMode, load_document)
from .content.counts_table import CountsTable, all_patterns
from . import photonic_device as pd
from . import graph_stabilizers as gs
from . import error_models as em
from . import bayes_inference as bi
from . import calibration as cal


KINDS = ("sim", "hom", "stabilizers", "mermin", "project", "bell", "bayes", "calibrate", "loss")

# fourfold coincidence rate of the star state and the counts collected for it
TABLE_RATE_HZ = 5.7e-3
TABLE_COUNTS = 2640
TABLE_SETTINGS = 16

# count rate of the two photon experiments at unit probability
PAIR_RATE_HZ = 1.

# infinite-count mode: counts are the probabilities in units of 1e-12
EXACT_SCALE = 1e12

DEFAULT_INTEGRATION_TIME = TABLE_COUNTS / TABLE_RATE_HZ / TABLE_SETTINGS

Table = Tuple[Tuple[str, ...], List[Tuple[Any, ...]]]


def integration_time(counts : float, rate_hz : float) -> float:
    '''
    seconds needed to collect `counts` events at `rate_hz`
    '''
    if rate_hz <= 0.:
        raise RuntimeErrorWithLog("the count rate must be positive.")
    return counts / rate_hz


def _plain(value : Any) -> Any:
    '''
    the JSON image of an option value, so that stored and re-imported options compare equal
    '''
    return json.loads(json.dumps(value))


@dataclass(frozen = True)
class ExperimentSpec:
    '''
    integration_time: seconds per measurement setting (per phase point for hom)
    rate_scale: event rate in Hz at unit probability; None calibrates fourfold experiments to
    the star state rate and uses PAIR_RATE_HZ for the two photon ones
    exact: infinite-count mode, counts are the probabilities times EXACT_SCALE
    '''
    kind : str
    device : DeviceConfig
    integration_time : float = DEFAULT_INTEGRATION_TIME
    rate_scale : float | None = None
    seed : int = 0
    exact : bool = False
    options : Dict[str, Any] = field(default_factory = dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigErrorWithLog("unknown experiment '" + str(self.kind) + "', expected one of "
                + ", ".join(KINDS) + ".")
        if not self.integration_time > 0.:
            raise ConfigErrorWithLog("the integration time must be positive.")
        if self.rate_scale is not None and not self.rate_scale > 0.:
            raise ConfigErrorWithLog("the rate scale must be positive.")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigErrorWithLog("the seed must be a non-negative integer.")
        try:
            object.__setattr__(self, "options", _plain(dict(self.options)))
        except TypeError:
            raise ConfigErrorWithLog("experiment options must be numbers, strings or lists.")

    @staticmethod
    def from_document(text : str, file : str = "<config>", kind : str | None = None,
        **overrides) -> ExperimentSpec:
        '''
        the device and experiment blocks of a configuration document; the keys kind,
        integration_time, rate_scale, seed and exact set the run, every other key is an
        option of the experiment. Keyword overrides replace document entries.
        '''
        device, entries = load_document(text, file)
        entries.update({k : v for k, v in overrides.items() if v is not None})
        if kind is not None:
            entries["kind"] = kind
        if "kind" not in entries:
            raise ConfigErrorWithLog("the experiment kind is not given.")
        run = {k : entries.pop(k) for k in ("kind", "integration_time", "rate_scale", "seed", "exact")
            if k in entries}
        if "exact" in run:
            run["exact"] = _flag(run["exact"])
        return ExperimentSpec(device = device, options = entries, **run)


def _flag(value : Any) -> bool:
    if isinstance(value, str):
        if value.lower() not in ("true", "false"):
            raise ConfigErrorWithLog("expected true or false, got '" + value + "'.")
        return value.lower() == "true"
    if value not in (0, 1):
        raise ConfigErrorWithLog("expected true or false, got '" + str(value) + "'.")
    return bool(value)


@dataclass
class RunReport:
    kind : str
    device : DeviceConfig
    options : Dict[str, Any]
    counts : CountsTable | None
    derived : Dict[str, Any]
    tables : Dict[str, Table]
    provenance : Dict[str, Any]
    raw_tables : List[str] = field(default_factory = list)

    def summary(self) -> str:
        r = self.kind + "\n"
        for k, v in self.derived.items():
            r += "    {:<20s} {}\n".format(k, round(v, 6) if isinstance(v, float) else v)
        return r


############################################################
# count rates and sampling
############################################################

def calibrated_rate_scale(device : DeviceConfig) -> float:
    '''
    the event rate at unit probability that makes the star state give TABLE_RATE_HZ fourfold
    coincidences, in the same pair model (first order or multiphoton at DEFAULT_P) as the device
    '''
    p = DEFAULT_P if device.error.p > 0. else 0.
    ref = DeviceConfig.default(RpegMode.FUSION, p = DEFAULT_P, error = ErrorParams(p = p))
    post = pd.simulate_setting(ref, "Z" * QUBIT_COUNT).postselection
    return TABLE_RATE_HZ / post


def rate_scale(spec : ExperimentSpec) -> float:
    if spec.rate_scale is not None:
        return spec.rate_scale
    if spec.kind in ("bell", "hom"):
        return PAIR_RATE_HZ
    return calibrated_rate_scale(spec.device)


def sample_counts(probabilities : np.ndarray, mean_scale : float, exact : bool,
    rng : np.random.Generator) -> np.ndarray:
    '''
    Poisson counts with mean probability * mean_scale, or the rounded exact-mode counts
    '''
    probabilities = np.maximum(np.asarray(probabilities, dtype = float), 0.)
    if exact:
        return np.round(probabilities * EXACT_SCALE).astype(np.int64)
    return rng.poisson(probabilities * mean_scale).astype(np.int64)


def setting_probabilities(device : DeviceConfig, setting : str, rng : np.random.Generator,
    n_samples : int | None = None) -> np.ndarray:
    '''
    unconditioned pattern probabilities of a Pauli setting; a device with delta > 0 has its
    conditional distribution averaged over phaseshifter offsets, at the nominal postselection
    '''
    dist = pd.simulate_setting(device, setting)
    post = dist.postselection
    if post <= 0.:
        raise NumericErrorWithLog("the setting " + setting + " never gives a fourfold coincidence.")
    if device.error.delta == 0.:
        return dist.vector()
    if device.error.sigma != 1. or device.error.p != 0.:
        raise RuntimeErrorWithLog("phaseshifter offsets are only simulated with sigma = 1 and p = 0.")
    if n_samples is None:
        n_samples = Settings.cur().MC_SAMPLES
    return post * em.phase_error_distribution(device, setting, device.error.delta, n_samples, rng)


def _fourfold_counts(spec : ExperimentSpec, settings : Sequence[str]) -> CountsTable:
    scale = rate_scale(spec) * spec.integration_time
    n_samples = spec.options.get("mc_samples")
    table = CountsTable(QUBIT_COUNT)
    for s, child in zip(settings, np.random.SeedSequence(spec.seed).spawn(len(settings))):
        mc, sampling = child.spawn(2)
        probs = setting_probabilities(spec.device, s, np.random.default_rng(mc), n_samples)
        table.set_counts(s, sample_counts(probs, scale, spec.exact, np.random.default_rng(sampling)))
    return table


############################################################
# experiments
############################################################

def device_group(device : DeviceConfig) -> gs.StabilizerGroup:
    return gs.generators_from_graph(pd.GRAPH_OF_MODE[device.rpeg]())


def state_kind(device : DeviceConfig) -> str:
    return next(k for k, m in em.STATE_KINDS.items() if m == device.rpeg)


def _removed(options : Mapping[str, Any]) -> List[int]:
    remove = options.get("remove", [3])
    return sorted(int(q) for q in (remove if isinstance(remove, list) else [remove]))


def projected_group(device : DeviceConfig, remove : Sequence[int]) -> Tuple[gs.StabilizerGroup, List[gs.PauliString]]:
    '''
    the stabilizers of the graph left by projecting `remove` onto |0>, embedded in four qubits
    '''
    sub = gs.generators_from_graph(gs.project_zero(pd.GRAPH_OF_MODE[device.rpeg](), remove))
    return sub, [e.embed(sub.vertices, QUBIT_COUNT) for _, e in sub]


BELL_SETTINGS : Dict[str, Tuple[Tuple[float, float], Tuple[float, float]]] = {
    **gs.CHSH_ANGLES,
    **{c + c : (PAULI_ANGLES[c], PAULI_ANGLES[c]) for c in "XYZ"},
}


def _pair(options : Mapping[str, Any]) -> Tuple[int, int]:
    pair = options.get("pair", [1, 3])
    if not isinstance(pair, list) or len(pair) != 2:
        raise ConfigErrorWithLog("a Bell pair is given as two qubits.")
    return int(pair[0]), int(pair[1])


def _hom_sweep(options : Mapping[str, Any]) -> np.ndarray:
    points = int(options.get("points", 33))
    if points < 8:
        raise ConfigErrorWithLog("a HOM fringe needs at least 8 phase points.")
    return np.linspace(0., 2. * np.pi, points)


def _bayes_model(device : DeviceConfig, options : Mapping[str, Any]) -> Tuple[bi.GridModel, bi.ParameterGrid]:
    parameter = str(options.get("model", "sigma"))
    kwargs = {}
    if parameter == "delta":
        kwargs = {"n_samples" : int(options.get("mc_samples", Settings.cur().MC_SAMPLES)),
            "seed" : int(options.get("mc_seed", 0))}
    model = bi.GridModel(parameter, state_kind(device), **kwargs)
    if "grid" in options:
        lo, hi, step = (float(v) for v in options["grid"])
        grid = bi.ParameterGrid.linear(parameter, lo, hi, step)
    else:
        grid = bi.ParameterGrid.default(parameter)
    return model, grid


Acquired = Tuple[CountsTable | None, Dict[str, Table]]


def _acquire_nothing(spec : ExperimentSpec) -> Acquired:
    return None, {}


def _acquire_stabilizers(spec : ExperimentSpec) -> Acquired:
    return _fourfold_counts(spec, em.stabilizer_settings(device_group(spec.device))), {}


def _acquire_project(spec : ExperimentSpec) -> Acquired:
    _, embedded = projected_group(spec.device, _removed(spec.options))
    return _fourfold_counts(spec, sorted({e.setting for e in embedded})), {}


def _acquire_bell(spec : ExperimentSpec) -> Acquired:
    pair = _pair(spec.options)
    scale = rate_scale(spec) * spec.integration_time
    rng = np.random.default_rng(spec.seed)
    table = CountsTable(2)
    for name, angles in BELL_SETTINGS.items():
        dist = pd.simulate_pair(spec.device, pair, angles)
        if dist.postselection <= 0.:
            raise NumericErrorWithLog("the Bell pair " + str(pair) + " is never detected.")
        table.set_counts(name, sample_counts(dist.vector(), scale, spec.exact, rng))
    return table, {}


def _acquire_hom(spec : ExperimentSpec) -> Acquired:
    sources = spec.options.get("sources", [2, 3])
    fringe = pd.hom_fringe(spec.device, _hom_sweep(spec.options), (int(sources[0]), int(sources[1])))
    probs = np.array([p for _, p in fringe])
    if not np.any(probs > 0.):
        raise NumericErrorWithLog("the HOM fringe has no coincidences.")
    counts = sample_counts(probs, rate_scale(spec) * spec.integration_time, spec.exact,
        np.random.default_rng(spec.seed))
    rows = [(float(x), int(c)) for (x, _), c in zip(fringe, counts)]
    return None, {"fringe" : (("phase_rad", "counts"), rows)}


def _acquire_bayes(spec : ExperimentSpec) -> Acquired:
    model, _ = _bayes_model(spec.device, spec.options)
    truth = float(spec.options.get("truth", getattr(spec.device.error, model.parameter)))
    shots = int(spec.options.get("shots", TABLE_COUNTS // TABLE_SETTINGS))
    rng = None if spec.exact else np.random.default_rng(spec.seed)
    return bi.synthetic_counts(model(truth), shots, rng), {}


_ACQUIRE : Dict[str, Callable[[ExperimentSpec], Acquired]] = {
    "sim" : _acquire_nothing,
    "hom" : _acquire_hom,
    "stabilizers" : _acquire_stabilizers,
    "mermin" : _acquire_stabilizers,
    "project" : _acquire_project,
    "bell" : _acquire_bell,
    "bayes" : _acquire_bayes,
    "calibrate" : _acquire_nothing,
    "loss" : _acquire_nothing,
}


############################################################
# derived quantities
############################################################

Derived = Tuple[Dict[str, Any], Dict[str, Table]]


def _require_counts(kind : str, counts : CountsTable | None) -> CountsTable:
    if counts is None:
        raise RuntimeErrorWithLog("the '" + kind + "' experiment needs counts.")
    return counts


def _expectation_table(group : gs.StabilizerGroup, values : Mapping[gs.Label, float],
    errors : Mapping[gs.Label, float]) -> Table:
    rows = [(em.label_name(l), str(e), float(values[l]), float(errors[l])) for l, e in group]
    return ("label", "stabilizer", "expectation", "error"), rows


def _fidelity_block(values : Mapping[gs.Label, float], errors : Mapping[gs.Label, float]) -> Dict[str, Any]:
    f = gs.fidelity(values.values())
    return {"F" : f, "F_err" : gs.fidelity_error(errors.values()), "witness" : gs.witnesses_entanglement(f)}


def _derive_stabilizers(device, options, counts, tables, seed) -> Derived:
    group = device_group(device)
    values, errors = gs.group_expectations(_require_counts("stabilizers", counts), group)
    derived = {"state" : state_kind(device), "counts" : counts.total(), **_fidelity_block(values, errors)}
    return derived, {"expectations" : _expectation_table(group, values, errors)}


def _derive_mermin(device, options, counts, tables, seed) -> Derived:
    derived, out = _derive_stabilizers(device, options, counts, tables, seed)
    group = device_group(device)
    values, errors = gs.group_expectations(counts, group)
    m2 = gs.mermin_two_setting(group, values, options.get("variant"), errors)
    m3 = gs.mermin_three_setting(group, values, errors)
    derived.update({
        "M_II" : m2.value, "M_II_err" : m2.error, "M_II_variant" : m2.variant,
        "M_II_classical" : m2.classical_bound, "M_II_quantum" : m2.quantum_bound, "M_II_violates" : m2.violates,
        "M_III" : m3.value, "M_III_err" : m3.error,
        "M_III_classical" : m3.classical_bound, "M_III_quantum" : m3.quantum_bound, "M_III_violates" : m3.violates,
    })
    out["mermin_variants"] = (("variant", "value"), [(k, float(v)) for k, v in m2.variants.items()])
    return derived, out


def _derive_project(device, options, counts, tables, seed) -> Derived:
    counts = _require_counts("project", counts)
    remove = _removed(options)
    sub, embedded = projected_group(device, remove)
    condition = {q : 0 for q in remove}
    values : Dict[gs.Label, float] = {}
    errors : Dict[gs.Label, float] = {}
    for (label, _), e in zip(sub, embedded):
        if label == ():
            values[label], errors[label] = 1., 0.
            continue
        values[label] = gs.expectation_from_counts(counts, e, condition)
        kept = counts.counts(e.setting)
        idx = np.arange(len(kept))
        for q in remove:
            kept = np.where(((idx >> (QUBIT_COUNT - q)) & 1) == 0, kept, 0)
        errors[label] = gs.expectation_error(values[label], kept.sum())
    m3 = gs.mermin_three_setting(sub, values, errors)
    derived = {"vertices" : ",".join(str(v) for v in sub.vertices), "removed" : ",".join(str(q) for q in remove),
        **_fidelity_block(values, errors),
        "M_III" : m3.value, "M_III_err" : m3.error,
        "M_III_classical" : m3.classical_bound, "M_III_quantum" : m3.quantum_bound, "M_III_violates" : m3.violates}
    return derived, {"expectations" : _expectation_table(sub, values, errors)}


def _derive_bell(device, options, counts, tables, seed) -> Derived:
    counts = _require_counts("bell", counts)
    e = {k : gs.correlator_from_counts(counts, k) for k in BELL_SETTINGS}
    err = {k : gs.expectation_error(e[k], counts.total(k)) for k in BELL_SETTINGS}
    s = gs.chsh(e, err)
    derived : Dict[str, Any] = {"pair" : ",".join(str(q) for q in _pair(options))}
    for k in BELL_SETTINGS:
        derived["E_" + k] = e[k]
    derived.update({"S" : s.value, "S_err" : s.error, "S_violates" : s.violates,
        "F_bell" : (1. + e["XX"] - e["YY"] + e["ZZ"]) / 4.,
        "F_bell_err" : math.sqrt(err["XX"]**2 + err["YY"]**2 + err["ZZ"]**2) / 4.})
    return derived, {}


def _derive_hom(device, options, counts, tables, seed) -> Derived:
    if "fringe" not in tables:
        raise RuntimeErrorWithLog("the 'hom' experiment needs the fringe table.")
    samples = [(float(x), float(c)) for x, c in tables["fringe"][1]]
    fit = cal.fit_fringe(samples)
    v, v_hom = pd.fringe_visibility(samples)
    return {"V" : float(v), "V_hom" : float(v_hom), "fit_A" : fit.A, "fit_f" : fit.f,
        "fit_phi0" : fit.phi0, "fit_c" : fit.c, "fit_rms" : fit.rms}, {}


def _derive_bayes(device, options, counts, tables, seed) -> Derived:
    counts = _require_counts("bayes", counts)
    model, grid = _bayes_model(device, options)
    log_l = bi.likelihood(model, grid, counts, str(options.get("binning", "outcomes")),
        frequency = bool(options.get("frequency", False)), n_sim = int(options.get("n_sim", 10**5)), seed = seed)
    post = bi.posterior(log_l, grid)
    derived : Dict[str, Any] = {"model" : model.parameter, "state" : model.state_kind,
        "raw_mean" : post.raw_mean, "raw_std" : post.raw_std, "map_estimate" : post.map_estimate}
    if len(grid) >= 3:
        g = post.gaussian_fit()
        derived.update({"mean" : g.mean, "std" : g.std, "degenerate" : g.degenerate,
            "interval_low" : g.mean - 2. * g.std, "interval_high" : g.mean + 2. * g.std})
    rows = [(float(v), float(p)) for v, p in zip(grid.values, post.probabilities)]
    return derived, {"posterior" : (("parameter", "probability"), rows)}


def _derive_sim(device, options, counts, tables, seed) -> Derived:
    dist = pd.simulate(device)
    rows = [(k, float(dist.probabilities[k]),
        float(dist.probabilities[k] / dist.postselection) if dist.postselection > 0. else 0.)
        for k in all_patterns(QUBIT_COUNT)]
    return {"postselection" : dist.postselection, "truncated" : dist.truncated,
        "discarded" : dist.discarded}, \
        {"probabilities" : (("outcome_bits", "probability", "conditional"), rows)}


def _derive_calibrate(device, options, counts, tables, seed) -> Derived:
    if "fringe_csv" not in options and "power_csv" not in options:
        raise ConfigErrorWithLog("calibration needs a fringe_csv or a power_csv file.")
    coefficient = float(options.get("coefficient", 0.003))
    derived : Dict[str, Any] = {}
    out : Dict[str, Table] = {}
    if "fringe_csv" in options:
        fringe_samples, iv_samples = cal.load_fringe_csv(options["fringe_csv"])
        fringe = cal.fit_fringe(fringe_samples)
        iv = cal.fit_iv(iv_samples)
        derived.update({"fit_A" : fringe.A, "fit_f" : fringe.f, "fit_phi0" : fringe.phi0, "fit_c" : fringe.c,
            "fit_rms" : fringe.rms, "rho1" : iv.rho1, "rho2" : iv.rho2, "rho3" : iv.rho3, "v_max" : iv.v_max})
        targets = options.get("targets", [math.pi / 2.])
        rows = []
        for t in (targets if isinstance(targets, list) else [targets]):
            v = cal.dial_phase(float(t), fringe, iv)
            rows.append((float(t), float(v), float(cal.heater_phase(v, fringe, iv))))
        out["dial"] = (("target_rad", "voltage", "phase_rad"), rows)
    if "power_csv" in options:
        stats = cal.power_statistics(cal.load_power_csv(options["power_csv"]).values())
        derived.update({"power_mean" : stats.mean, "power_mad" : stats.mad, "power_std" : stats.std,
            "power_count" : stats.count, "phase_error_mad" : stats.phase_error(coefficient),
            "phase_error_std" : stats.phase_error(coefficient, use_std = True)})
    return derived, out


def _derive_loss(device, options, counts, tables, seed) -> Derived:
    if "entries" in options:
        entries = options["entries"]
        budget = cal.loss_total([float(v) for v in (entries if isinstance(entries, list) else [entries])])
    else:
        budget = cal.signal_path_budget(float(options.get("spiral_cm", 1.2)),
            float(options.get("straight_cm", 2. / 3.)), int(options.get("mmi_count", 2)))
    return {"total_dB" : budget.total, "transmission" : budget.transmission()}, \
        {"budget" : (("component", "loss_dB"), [(k, float(v)) for k, v in budget.entries])}


_DERIVE : Dict[str, Callable[..., Derived]] = {
    "sim" : _derive_sim,
    "hom" : _derive_hom,
    "stabilizers" : _derive_stabilizers,
    "mermin" : _derive_mermin,
    "project" : _derive_project,
    "bell" : _derive_bell,
    "bayes" : _derive_bayes,
    "calibrate" : _derive_calibrate,
    "loss" : _derive_loss,
}


def derive(kind : str, device : DeviceConfig, options : Mapping[str, Any], counts : CountsTable | None,
    tables : Mapping[str, Table], seed : int = 0) -> Derived:
    '''
    the reported quantities of a run, computed only from what the run stores: the device,
    the options, the counts and the raw data tables
    '''
    if kind not in _DERIVE:
        raise ConfigErrorWithLog("unknown experiment '" + kind + "'.")
    return _DERIVE[kind](device, options, counts, tables, seed)


############################################################
# run
############################################################

PROVENANCE_PACKAGES = ("pgsim", "numpy", "scipy", "cvxpy", "networkx", "ply")


def _version(package : str) -> str:
    try:
        return metadata.version(package)
    except metadata.PackageNotFoundError:
        return "unknown"


def config_hash(device : DeviceConfig, options : Mapping[str, Any]) -> str:
    payload = device.serialize() + json.dumps(options, sort_keys = True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def provenance(spec : ExperimentSpec) -> Dict[str, Any]:
    r : Dict[str, Any] = {
        "seed" : spec.seed,
        "config_sha256" : config_hash(spec.device, spec.options),
        "integration_time" : spec.integration_time,
        "rate_scale" : spec.rate_scale,
        "exact" : spec.exact,
    }
    for p in PROVENANCE_PACKAGES:
        r["version_" + p] = _version(p)
    return r


def run(spec : ExperimentSpec) -> RunReport:
    '''
    simulate the experiment, sample its counts and derive the reported quantities;
    identical specs give identical reports
    '''
    LogSystem.push("info", "running '" + spec.kind + "' with seed " + str(spec.seed) + ".")
    counts, raw = _ACQUIRE[spec.kind](spec)
    derived, tables = derive(spec.kind, spec.device, spec.options, counts, raw, spec.seed)
    return RunReport(spec.kind, spec.device, dict(spec.options), counts, derived, {**raw, **tables},
        provenance(spec), sorted(raw))


############################################################
# export and import
############################################################

FORMATS = ("csv", "text")


def _cell(v : Any) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _parse_cell(s : str) -> Any:
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    return s


def write_table(table : Table, path : str | Path) -> None:
    columns, rows = table
    with open(path, "w", newline = "") as f:
        writer = csv.writer(f)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def read_table(path : str | Path) -> Table:
    with open(path, newline = "") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise ConfigErrorWithLog("table file '" + str(path) + "' is empty.")
    return tuple(rows[0]), [tuple(_parse_cell(c) for c in row) for row in rows[1:]]


def summary_text(report : RunReport) -> str:
    '''
    one `key : json value ;` line per entry, grouped by the prefixes derived, option,
    provenance and table
    '''
    r = "kind : " + json.dumps(report.kind) + " ;\n"
    for prefix, entries in (("derived.", report.derived), ("option.", report.options),
        ("provenance.", report.provenance)):
        for k, v in entries.items():
            r += prefix + k + " : " + json.dumps(v) + " ;\n"
    for name in report.tables:
        r += "table." + name + " : " + json.dumps("raw" if name in report.raw_tables else "derived") + " ;\n"
    return r


def parse_summary(text : str, file : str = "<summary>") -> Dict[str, Any]:
    entries : Dict[str, Any] = {}
    for n, line in enumerate(text.splitlines()):
        if not line.strip():
            continue
        if " : " not in line or not line.rstrip().endswith(";"):
            raise ConfigErrorWithLog("malformed summary line " + str(n + 1) + " in '" + file + "'.")
        key, value = line.split(" : ", 1)
        try:
            entries[key.strip()] = json.loads(value.rstrip()[:-1])
        except json.JSONDecodeError:
            raise ConfigErrorWithLog("malformed value on line " + str(n + 1) + " in '" + file + "'.")
    return entries


def export(report : RunReport, directory : str | Path, formats : Sequence[str] = FORMATS) -> List[Path]:
    '''
    csv: <kind>_counts.csv and one <kind>_<table>.csv per data table
    text: <kind>_summary.txt and the device as <kind>_device.cfg

    re-importing the files reproduces the derived quantities exactly
    '''
    for fmt in formats:
        if fmt not in FORMATS:
            raise ConfigErrorWithLog("unknown export format '" + fmt + "'.")
    directory = Path(directory)
    written : List[Path] = []
    try:
        directory.mkdir(parents = True, exist_ok = True)
        if "csv" in formats:
            if report.counts is not None:
                written.append(directory / (report.kind + "_counts.csv"))
                report.counts.save_csv(written[-1])
            for name, table in report.tables.items():
                written.append(directory / (report.kind + "_" + name + ".csv"))
                write_table(table, written[-1])
        if "text" in formats:
            written.append(directory / (report.kind + "_summary.txt"))
            written[-1].write_text(summary_text(report))
            written.append(directory / (report.kind + "_device.cfg"))
            written[-1].write_text(report.device.serialize())
    except OSError as e:
        raise RuntimeErrorWithLog("cannot write the report to '" + str(directory) + "': " + str(e))
    return written


def import_report(directory : str | Path, kind : str) -> RunReport:
    '''
    read an exported run back and derive its quantities again from the stored counts
    and raw tables
    '''
    directory = Path(directory)
    try:
        summary_path = directory / (kind + "_summary.txt")
        entries = parse_summary(summary_path.read_text(), str(summary_path))
        device_path = directory / (kind + "_device.cfg")
        device = DeviceConfig.parse(device_path.read_text(), str(device_path))
        counts_path = directory / (kind + "_counts.csv")
        counts = CountsTable.load_csv(counts_path) if counts_path.exists() else None
        raw = [k[6:] for k, v in entries.items() if k.startswith("table.") and v == "raw"]
        tables = {name : read_table(directory / (kind + "_" + name + ".csv")) for name in raw}
    except OSError as e:
        raise RuntimeErrorWithLog("cannot read the report from '" + str(directory) + "': " + str(e))

    if entries.get("kind") != kind:
        raise ConfigErrorWithLog("the summary in '" + str(directory) + "' is not a '" + kind + "' run.")
    options = {k[7:] : v for k, v in entries.items() if k.startswith("option.")}
    prov = {k[11:] : v for k, v in entries.items() if k.startswith("provenance.")}
    derived, derived_tables = derive(kind, device, options, counts, tables, int(prov.get("seed", 0)))

    stored = {k[8:] : v for k, v in entries.items() if k.startswith("derived.")}
    if _plain(derived) != stored:
        LogSystem.push("warning", "the quantities derived from '" + str(directory)
            + "' differ from its stored summary.")
    return RunReport(kind, device, options, counts, derived, {**tables, **derived_tables}, prov, sorted(raw))
