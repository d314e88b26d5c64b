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
# calibration.py
#
# thermo-optic phaseshifter calibration: transmission fringes,
# nonlinear IV curves, phase dial-in, crosstalk phase errors,
# power statistics and loss budgets
# ------------------------------------------------------------

from __future__ import annotations
from typing import Dict, Iterable, List, Sequence, Tuple

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import cvxpy as cp
from scipy.optimize import brentq, least_squares

from .settings import Settings
from .log_system import LogSystem, RuntimeErrorWithLog, NumericErrorWithLog, ConfigErrorWithLog


############################################################
# fringes
############################################################

@dataclass(frozen = True)
class FringeFit:
    '''
    transmission A sin(f P + phi0) + c against dissipated power P
    '''
    A : float
    f : float
    phi0 : float
    c : float
    rms : float = 0.

    def __call__(self, power : np.ndarray | float) -> np.ndarray | float:
        return self.A * np.sin(self.f * np.asarray(power) + self.phi0) + self.c


def _linear_fringe(x : np.ndarray, y : np.ndarray, fs : np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    '''
    for every trial frequency, the least squares (a, b, c) of a sin(fx) + b cos(fx) + c
    and the residual sum of squares
    '''
    s = np.sin(fs[:, None] * x[None, :])
    co = np.cos(fs[:, None] * x[None, :])
    design = np.stack([s, co, np.ones_like(s)], -1)
    gram = np.einsum('fni,fnj->fij', design, design)
    rhs = np.einsum('fni,n->fi', design, y)
    coef = np.linalg.solve(gram, rhs[..., None])[..., 0]
    res = np.einsum('fni,fi->fn', design, coef) - y[None, :]
    return coef, np.sum(res**2, axis = 1)


def _to_fringe(a : float, b : float, c : float, f : float) -> Tuple[float, float, float, float]:
    return math.hypot(a, b), f, float(np.mod(math.atan2(b, a), 2 * np.pi)), c


def fit_fringe(samples : Sequence[Tuple[float, float]], f_range : Tuple[float, float] | None = None,
    n_trials : int = 4000) -> FringeFit:
    '''
    fit A sin(f P + phi0) + c to (power, transmission) samples.

    The frequency is located by a linear least squares scan over f_range (by default from
    half a period over the sampled span to the sample spacing limit), then all four
    parameters are refined by scipy least_squares, restarted from several phases.
    '''
    if len(samples) < 8:
        raise RuntimeErrorWithLog("a fringe fit needs at least 8 samples, got " + str(len(samples)) + ".")
    data = np.array(samples, dtype = float)
    order = np.argsort(data[:, 0])
    x, y = data[order, 0], data[order, 1]
    span = x[-1] - x[0]
    if span <= 0.:
        raise RuntimeErrorWithLog("the fringe samples cover no power range.")
    if np.ptp(y) <= Settings.cur().EPS * max(1., float(np.max(np.abs(y)))):
        raise NumericErrorWithLog("the samples show no fringe.")

    if f_range is None:
        step = float(np.min(np.diff(x)[np.diff(x) > 0]))
        f_range = (np.pi / span, np.pi / step)
    fs = np.linspace(f_range[0], f_range[1], n_trials)
    coef, rss = _linear_fringe(x, y, fs)
    k = int(np.argmin(rss))
    a, b, c = coef[k]
    start = _to_fringe(a, b, c, fs[k])

    def residual(p : np.ndarray) -> np.ndarray:
        return p[0] * np.sin(p[1] * x + p[2]) + p[3] - y

    best = None
    for shift in (0., np.pi / 2, np.pi, 3 * np.pi / 2):
        p0 = np.array([start[0], start[1], start[2] + shift, start[3]])
        sol = least_squares(residual, p0, xtol = 1e-15, ftol = 1e-15, gtol = 1e-15, max_nfev = 10000)
        if best is None or sol.cost < best.cost:
            best = sol
    if best is None or not best.success:
        raise NumericErrorWithLog("the fringe fit did not converge.")

    amp, f, phi0, c = best.x
    if f < 0.:
        f, phi0, amp = -f, -phi0, -amp
    if amp < 0.:
        amp, phi0 = -amp, phi0 + np.pi
    if f * span < 2 * np.pi:
        LogSystem.push("warning", "the fringe samples span less than one period.")
    rms = float(np.sqrt(np.mean(residual(np.array([amp, f, phi0, c]))**2)))
    return FringeFit(float(amp), float(f), float(np.mod(phi0, 2 * np.pi)), float(c), rms)


############################################################
# IV curves
############################################################

@dataclass(frozen = True)
class IvFit:
    '''
    current I(V) = rho1 V + rho2 V^2 + rho3 V^3 of a heater on [0, v_max]
    '''
    rho1 : float
    rho2 : float
    rho3 : float
    v_max : float = 10.

    def current(self, v : np.ndarray | float) -> np.ndarray | float:
        v = np.asarray(v, dtype = float)
        return self.rho1 * v + self.rho2 * v**2 + self.rho3 * v**3

    def power(self, v : np.ndarray | float) -> np.ndarray | float:
        return self.current(v) * np.asarray(v, dtype = float)


def _iv_design(v : np.ndarray) -> np.ndarray:
    return np.stack([v, v**2, v**3], -1)


def fit_iv(samples : Sequence[Tuple[float, float]], v_max : float | None = None, grid : int = 200) -> IvFit:
    '''
    least squares cubic through the origin; when the unconstrained fit turns negative
    inside (0, v_max] the fit is redone with I(V) >= EPS on a voltage grid
    '''
    data = np.array(samples, dtype = float)
    if data.ndim != 2 or data.shape[0] < 3:
        raise RuntimeErrorWithLog("an IV fit needs at least 3 (voltage, current) samples.")
    v, i = data[:, 0], data[:, 1]
    if v_max is None:
        v_max = float(np.max(v))
    if v_max <= 0.:
        raise RuntimeErrorWithLog("the IV samples need positive voltages.")

    design = _iv_design(v)
    rho = np.linalg.lstsq(design, i, rcond = None)[0]
    v_grid = np.linspace(v_max / grid, v_max, grid)
    eps = Settings.cur().EPS
    if np.all(_iv_design(v_grid) @ rho >= eps):
        return IvFit(float(rho[0]), float(rho[1]), float(rho[2]), v_max)

    # solve in units of v_max and of the largest current
    i_scale = float(np.max(np.abs(i)))
    r = cp.Variable(3)
    constraints = [_iv_design(v_grid / v_max) @ r >= eps]
    prob = cp.Problem(cp.Minimize(cp.sum_squares(_iv_design(v / v_max) @ r - i / i_scale)), constraints)
    prob.solve()
    if r.value is None or prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        raise NumericErrorWithLog("the constrained IV fit failed (" + str(prob.status) + ").")
    if prob.status == cp.OPTIMAL_INACCURATE:
        LogSystem.push("warning", "the constrained IV fit is inaccurate.")
    rho = r.value * i_scale / v_max**np.arange(1, 4)
    return IvFit(float(rho[0]), float(rho[1]), float(rho[2]), v_max)


############################################################
# phase dial-in
############################################################

def heater_phase(v : np.ndarray | float, fringe : FringeFit, iv : IvFit) -> np.ndarray | float:
    '''
    phase f I(V) V + phi_c set by voltage V, phi_c the zero power phase of the fringe
    '''
    return fringe.f * iv.power(v) + fringe.phi0


def dial_phase(target : float, fringe : FringeFit, iv : IvFit,
    v_range : Tuple[float, float] | None = None, grid : int = 2000) -> float:
    '''
    the smallest voltage in v_range whose phase equals target modulo 2 pi, a root of the
    quartic f (rho1 V^2 + rho2 V^3 + rho3 V^4) + phi_c - target - 2 pi m
    '''
    if v_range is None:
        v_range = (0., iv.v_max)
    lo, hi = v_range
    if not 0. <= lo < hi:
        raise RuntimeErrorWithLog("invalid voltage range " + str(v_range) + ".")

    vs = np.linspace(lo, hi, grid + 1)
    phases = heater_phase(vs, fringe, iv)
    m_lo = math.ceil((np.min(phases) - target) / (2 * np.pi))
    m_hi = math.floor((np.max(phases) - target) / (2 * np.pi))

    best = None
    for m in range(m_lo, m_hi + 1):
        goal = target + 2 * np.pi * m
        g = phases - goal
        hits = np.nonzero((g[:-1] == 0.) | (g[:-1] * g[1:] < 0.))[0]
        if g[-1] == 0.:
            hits = np.append(hits, grid)
        if len(hits) == 0:
            continue
        k = int(hits[0])
        if g[k] == 0.:
            root = float(vs[k])
        else:
            root = brentq(lambda u : heater_phase(u, fringe, iv) - goal, vs[k], vs[k + 1], xtol = 1e-14, rtol = 1e-15)
        if best is None or root < best:
            best = root
    if best is None:
        raise NumericErrorWithLog("no voltage in " + str(v_range) + " reaches the phase " + str(target) + ".")
    return float(best)


def crosstalk_phase_error(power_deviation_mW : float, coefficient_rad_per_mW : float = 0.003) -> float:
    if power_deviation_mW < 0. or coefficient_rad_per_mW < 0.:
        raise RuntimeErrorWithLog("crosstalk inputs must be non-negative.")
    return float(power_deviation_mW * coefficient_rad_per_mW)


############################################################
# power statistics
############################################################

@dataclass(frozen = True)
class PowerStatistics:
    '''
    dissipated power over chip configurations, in mW; the deviation from the mean is given
    both as mean absolute deviation and as standard deviation
    '''
    mean : float
    mad : float
    std : float
    count : int

    def phase_error(self, coefficient_rad_per_mW : float = 0.003, use_std : bool = False) -> float:
        return crosstalk_phase_error(self.std if use_std else self.mad, coefficient_rad_per_mW)


def power_statistics(powers_mW : Iterable[float]) -> PowerStatistics:
    p = np.array(list(powers_mW), dtype = float)
    if len(p) == 0:
        raise RuntimeErrorWithLog("no power samples.")
    if np.any(p < 0.):
        raise RuntimeErrorWithLog("dissipated powers must be non-negative.")
    mean = float(p.mean())
    return PowerStatistics(mean, float(np.mean(np.abs(p - mean))), float(p.std()), len(p))


POWER_COLUMNS = ("configuration_id", "power_mW")


def load_power_csv(path : str | Path) -> Dict[str, float]:
    with open(path, newline = "") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or tuple(reader.fieldnames) != POWER_COLUMNS:
            raise ConfigErrorWithLog("power file '" + str(path) + "' must have the columns "
                + ", ".join(POWER_COLUMNS) + ".")
        try:
            return {row["configuration_id"] : float(row["power_mW"]) for row in reader}
        except ValueError as e:
            raise ConfigErrorWithLog("invalid power value in '" + str(path) + "': " + str(e))


FRINGE_COLUMNS = ("voltage", "current", "transmission")


def load_fringe_csv(path : str | Path) -> Tuple[List[Tuple[float, float]], List[Tuple[float, float]]]:
    '''
    read (voltage, current, transmission) rows; returns the (power, transmission) fringe
    samples and the (voltage, current) IV samples
    '''
    with open(path, newline = "") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or tuple(reader.fieldnames) != FRINGE_COLUMNS:
            raise ConfigErrorWithLog("fringe file '" + str(path) + "' must have the columns "
                + ", ".join(FRINGE_COLUMNS) + ".")
        try:
            rows = [(float(r["voltage"]), float(r["current"]), float(r["transmission"])) for r in reader]
        except ValueError as e:
            raise ConfigErrorWithLog("invalid number in '" + str(path) + "': " + str(e))
    return [(v * i, t) for v, i, t in rows], [(v, i) for v, i, _ in rows]


############################################################
# loss budget
############################################################

GRATING_DB = 4.
MMI_DB = 0.65
STRAIGHT_DB_PER_CM = 3.
SPIRAL_DB_PER_CM = 7.5
OFF_CHIP_DB = 3.


@dataclass(frozen = True)
class LossBudget:
    entries : Tuple[Tuple[str, float], ...] = field(default_factory = tuple)

    @property
    def total(self) -> float:
        return float(math.fsum(db for _, db in self.entries))

    def transmission(self) -> float:
        return 10. ** (-self.total / 10.)

    def __str__(self) -> str:
        r = "".join("{:<24s}{:8.3f} dB\n".format(label, db) for label, db in self.entries)
        return r + "{:<24s}{:8.3f} dB".format("total", self.total)


def loss_total(entries : Iterable[float | Tuple[str, float]]) -> LossBudget:
    '''
    additive budget of dB entries, given bare or as (label, dB)
    '''
    items : List[Tuple[str, float]] = []
    for k, e in enumerate(entries):
        if isinstance(e, tuple):
            items.append((str(e[0]), float(e[1])))
        else:
            items.append(("entry " + str(k + 1), float(e)))
    return LossBudget(tuple(items))


def signal_path_budget(spiral_cm : float = 1.2, straight_cm : float = 2. / 3., mmi_count : int = 2) -> LossBudget:
    '''
    the loss of a signal photon from the chip to its detector, with the reference component losses;
    the default lengths reproduce 19.3 dB
    '''
    return loss_total([
        ("off-chip", OFF_CHIP_DB),
        ("grating coupler", GRATING_DB),
        ("MMI x " + str(mmi_count), mmi_count * MMI_DB),
        ("spiral " + str(round(spiral_cm, 3)) + " cm", spiral_cm * SPIRAL_DB_PER_CM),
        ("straight " + str(round(straight_cm, 3)) + " cm", straight_cm * STRAIGHT_DB_PER_CM),
    ])
