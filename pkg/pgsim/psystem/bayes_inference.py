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
# bayes_inference.py
#
# grid Bayesian estimation of one error parameter from
# stabilizer count data, with the likelihood of every grid value
# computed from the device model
# ------------------------------------------------------------

from __future__ import annotations
from typing import Callable, Dict, List, Sequence, Tuple

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import curve_fit
from scipy.special import logsumexp
from scipy.stats import binom, multinomial

from .settings import Settings
from .log_system import LogSystem, RuntimeErrorWithLog, NumericErrorWithLog
from .content.counts_table import CountsTable
from . import error_models as em
from .error_models import ModelPrediction


############################################################
# grids
############################################################

DEFAULT_GRIDS : Dict[str, Tuple[float, float, float]] = {
    "sigma" : (0.5, 1.0, 0.005),
    "p" : (0.0, 0.10, 0.001),
    "delta" : (0.0, 0.5, 0.005),
}


@dataclass(frozen = True)
class ParameterGrid:
    values : Tuple[float, ...]
    model : str

    def __post_init__(self):
        if len(self.values) < 1:
            raise RuntimeErrorWithLog("a parameter grid needs at least one value.")
        if np.any(np.diff(self.values) <= 0.):
            raise RuntimeErrorWithLog("grid values must be strictly increasing.")

    @staticmethod
    def default(model : str) -> ParameterGrid:
        if model not in DEFAULT_GRIDS:
            raise RuntimeErrorWithLog("no default grid for the model '" + model + "'.")
        lo, hi, step = DEFAULT_GRIDS[model]
        return ParameterGrid.linear(model, lo, hi, step)

    @staticmethod
    def linear(model : str, lo : float, hi : float, step : float) -> ParameterGrid:
        k = int(round((hi - lo) / step)) + 1
        return ParameterGrid(tuple(float(v) for v in np.round(np.linspace(lo, hi, k), 12)), model)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.values)

    def __len__(self) -> int:
        return len(self.values)


class GridModel:
    '''
    the predictions of one error model for one state, memoized per parameter value
    '''
    def __init__(self, parameter : str, state_kind : str, **kwargs):
        if parameter not in em.MODELS:
            raise RuntimeErrorWithLog("unknown error model '" + parameter + "'.")
        self.parameter : str = parameter
        self.state_kind : str = state_kind
        self.kwargs = kwargs
        self._cache : Dict[float, ModelPrediction] = {}

    def __call__(self, value : float) -> ModelPrediction:
        value = float(value)
        if value not in self._cache:
            self._cache[value] = em.predict(self.parameter, self.state_kind, value, **self.kwargs)
        return self._cache[value]


Model = Callable[[float], ModelPrediction]


############################################################
# likelihood
############################################################

def _floored(p : np.ndarray, counts : np.ndarray) -> Tuple[np.ndarray, bool]:
    floor = Settings.cur().PROB_FLOOR
    hit = bool(np.any((p < floor) & (counts > 0)))
    p = np.maximum(p, floor)
    return p / p.sum(), hit


def _outcome_loglik(pred : ModelPrediction, data : CountsTable, settings : List[str],
    rng : np.random.Generator | None, n_sim : int) -> Tuple[float, bool]:
    total = 0.
    flagged = False
    for s in settings:
        counts = data.counts(s)
        p = pred.distributions[s]
        if rng is not None:
            p = rng.multinomial(n_sim, p / p.sum()) / n_sim
        p, hit = _floored(p, counts)
        flagged |= hit
        total += float(multinomial.logpmf(counts, int(counts.sum()), p))
    return total, flagged


def _expectation_loglik(pred : ModelPrediction, data : CountsTable) -> Tuple[float, bool]:
    '''
    each stabilizer contributes a binomial: the number of +1 outcomes among its N counts
    with success probability (1 + <g>) / 2
    '''
    group = em.state_group(pred.state_kind)
    floor = Settings.cur().PROB_FLOOR
    total = 0.
    flagged = False
    for label, g in group:
        if label == () or g.setting not in data:
            continue
        counts = data.counts(g.setting)
        n = int(counts.sum())
        plus = int(counts[g.eigenvalues() > 0].sum())
        q = (1. + pred.expectations[label]) / 2.
        if (q < floor and plus > 0) or (q > 1. - floor and plus < n):
            flagged = True
        q = float(np.clip(q, floor, 1. - floor))
        total += float(binom.logpmf(plus, n, q))
    return total, flagged


BINNINGS = ("outcomes", "expectations")


def likelihood(model : Model, grid : ParameterGrid, data : CountsTable, binning : str = "outcomes",
    frequency : bool = False, n_sim : int = 10**5, seed : int | None = 0) -> np.ndarray:
    '''
    log L(x_k) = sum over settings of log P(counts | x_k), the outcomes of a setting
    multinomial under the predicted conditional distribution.

    binning: "outcomes" uses the full outcome counts of every setting, "expectations" only
    the number of +1 outcomes of every stabilizer
    frequency: estimate the outcome probabilities from n_sim simulated events instead of
    using them exactly
    '''
    if binning not in BINNINGS:
        raise RuntimeErrorWithLog("unknown binning '" + binning + "', expected one of " + ", ".join(BINNINGS) + ".")
    rng = np.random.default_rng(seed) if frequency else None

    result = np.zeros(len(grid))
    flagged = False
    for k, value in enumerate(grid.values):
        pred = model(value)
        if binning == "outcomes":
            settings = [s for s in data.settings if s in pred.distributions]
            if not settings:
                raise RuntimeErrorWithLog("the data contain none of the predicted settings.")
            result[k], hit = _outcome_loglik(pred, data, settings, rng, n_sim)
        else:
            result[k], hit = _expectation_loglik(pred, data)
        flagged |= hit
    if flagged:
        LogSystem.push("warning", "model probabilities below " + str(Settings.cur().PROB_FLOOR)
            + " met observed counts and were floored.")
    return result


############################################################
# posterior
############################################################

@dataclass(frozen = True)
class GaussianSummary:
    mean : float
    std : float
    raw_mean : float
    raw_std : float
    degenerate : bool = False


@dataclass(frozen = True)
class Posterior:
    grid : ParameterGrid
    probabilities : np.ndarray

    @property
    def raw_mean(self) -> float:
        return float(np.dot(self.grid.array, self.probabilities))

    @property
    def raw_std(self) -> float:
        m = self.raw_mean
        return float(np.sqrt(max(0., np.dot((self.grid.array - m)**2, self.probabilities))))

    @property
    def map_estimate(self) -> float:
        return float(self.grid.values[int(np.argmax(self.probabilities))])

    def gaussian_fit(self) -> GaussianSummary:
        return gaussian_summary(self)


def posterior(log_likelihoods : Sequence[float], grid : ParameterGrid,
    prior : Sequence[float] | None = None) -> Posterior:
    '''
    P(x_k | data) = L(x_k) P(x_k) / sum_l L(x_l) P(x_l), uniform prior by default
    '''
    log_l = np.array(log_likelihoods, dtype = float)
    if log_l.shape != (len(grid),):
        raise RuntimeErrorWithLog("expected " + str(len(grid)) + " log-likelihoods, got " + str(log_l.shape) + ".")
    if prior is not None:
        prior_a = np.array(prior, dtype = float)
        if prior_a.shape != log_l.shape or np.any(prior_a < 0.):
            raise RuntimeErrorWithLog("the prior needs one non-negative weight per grid value.")
        with np.errstate(divide = "ignore"):
            log_l = log_l + np.log(prior_a)
    if not np.any(np.isfinite(log_l)):
        raise NumericErrorWithLog("every likelihood on the grid is zero.")
    log_l = np.where(np.isnan(log_l), -np.inf, log_l)
    probs = np.exp(log_l - logsumexp(log_l))
    return Posterior(grid, probs / probs.sum())


def _normal(x : np.ndarray, a : float, mu : float, s : float) -> np.ndarray:
    return a * np.exp(-0.5 * ((x - mu) / s)**2)


def gaussian_summary(post : Posterior) -> GaussianSummary:
    '''
    least squares normal fit of the posterior over the grid, next to the raw moments;
    a posterior concentrated on fewer than three grid values is returned as raw moments
    with the degenerate flag
    '''
    if len(post.grid) < 3:
        raise RuntimeErrorWithLog("a Gaussian fit needs at least 3 grid values.")
    x = post.grid.array
    p = post.probabilities
    raw_mean, raw_std = post.raw_mean, post.raw_std

    if np.count_nonzero(p > 1e-9 * p.max()) < 3 or raw_std == 0.:
        LogSystem.push("warning", "degenerate posterior, the Gaussian fit falls back to raw moments.")
        return GaussianSummary(raw_mean, raw_std, raw_mean, raw_std, True)
    try:
        popt, _ = curve_fit(_normal, x, p, p0 = (p.max(), raw_mean, raw_std), maxfev = 10000)
    except RuntimeError:
        LogSystem.push("warning", "the Gaussian fit of the posterior did not converge.")
        return GaussianSummary(raw_mean, raw_std, raw_mean, raw_std, True)
    return GaussianSummary(float(popt[1]), float(abs(popt[2])), raw_mean, raw_std, False)


def credible_interval(post : Posterior, width : float = 2.) -> Tuple[float, float]:
    '''
    mean +- width std of the Gaussian summary
    '''
    g = gaussian_summary(post)
    return g.mean - width * g.std, g.mean + width * g.std


############################################################
# synthetic data
############################################################

def synthetic_counts(pred : ModelPrediction, shots : int, rng : np.random.Generator | None = None,
    settings : Sequence[str] | None = None) -> CountsTable:
    '''
    counts of every setting drawn from the predicted distribution; without a generator
    the counts are the rounded expected values
    '''
    if settings is None:
        settings = sorted(pred.distributions)
    n = int(round(np.log2(len(next(iter(pred.distributions.values()))))))
    table = CountsTable(n)
    for s in settings:
        p = pred.distributions[s] / pred.distributions[s].sum()
        if rng is None:
            table.set_counts(s, np.round(p * shots).astype(np.int64))
        else:
            table.set_counts(s, rng.multinomial(shots, p))
    return table


############################################################
# export
############################################################

def export_posterior(post : Posterior, csv_path : str | Path, summary_path : str | Path) -> None:
    with open(csv_path, "w", newline = "") as f:
        writer = csv.writer(f)
        writer.writerow(("parameter", "probability"))
        for v, p in zip(post.grid.values, post.probabilities):
            writer.writerow((repr(v), repr(float(p))))
    r = "model : " + post.grid.model + " ;\n"
    if len(post.grid) >= 3:
        g = gaussian_summary(post)
        r += "mean : " + repr(g.mean) + " ;\n" + "std : " + repr(g.std) + " ;\n" + \
            "degenerate : " + str(g.degenerate).lower() + " ;\n"
    r += "raw_mean : " + repr(post.raw_mean) + " ;\n" + \
        "raw_std : " + repr(post.raw_std) + " ;\n" + \
        "map_estimate : " + repr(post.map_estimate) + " ;\n"
    Path(summary_path).write_text(r)
