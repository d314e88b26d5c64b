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

# the entrance of the simulator: the pgsim command

from __future__ import annotations
from typing import Any, Dict, List, Sequence

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .psystem.log_system import LogSystem, RuntimeErrorWithLog, ConfigErrorWithLog
from .psystem.content.device_config import DeviceConfig
from .psystem import harness

# subcommand -> experiment kind
COMMANDS : Dict[str, str] = {
    "sim" : "sim",
    "hom" : "hom",
    "stab" : "stabilizers",
    "mermin" : "mermin",
    "project" : "project",
    "bell" : "bell",
    "bayes" : "bayes",
    "cal" : "calibrate",
    "loss" : "loss",
}

OUT_ENV = "PGSIM_OUT"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help = False)
    common.add_argument("--config", metavar = "PATH", help = "device and experiment configuration file")
    common.add_argument("--seed", type = int, help = "seed of the count sampling")
    common.add_argument("--out", metavar = "DIR",
        help = "output directory (default: $" + OUT_ENV + " or the working directory)")
    common.add_argument("--exact", action = "store_true", help = "infinite-count mode")

    parser = argparse.ArgumentParser(prog = "pgsim",
        description = "four-photon silicon-photonic graph-state simulator")
    sub = parser.add_subparsers(dest = "command", required = True)
    sub.add_parser("sim", parents = [common], help = "outcome probabilities of the configured setting")
    p = sub.add_parser("hom", parents = [common], help = "heralded HOM fringe and visibilities")
    p.add_argument("--points", type = int)
    sub.add_parser("stab", parents = [common], help = "stabilizer expectations and fidelity")
    p = sub.add_parser("mermin", parents = [common], help = "two- and three-setting Mermin tests")
    p.add_argument("--variant")
    p = sub.add_parser("project", parents = [common], help = "states left by projecting qubits onto |0>")
    p.add_argument("--remove", type = int, nargs = "+")
    p = sub.add_parser("bell", parents = [common], help = "Bell-CHSH test of a photon pair")
    p.add_argument("--pair", type = int, nargs = 2)
    p = sub.add_parser("bayes", parents = [common], help = "grid posterior of one error parameter")
    p.add_argument("--model", choices = ("sigma", "p", "delta"))
    p.add_argument("--truth", type = float)
    p.add_argument("--shots", type = int)
    p.add_argument("--binning", choices = ("outcomes", "expectations"))
    p = sub.add_parser("cal", parents = [common], help = "phaseshifter calibration from measured data")
    p.add_argument("--fringe", dest = "fringe_csv", metavar = "CSV")
    p.add_argument("--powers", dest = "power_csv", metavar = "CSV")
    p.add_argument("--targets", type = float, nargs = "+")
    p = sub.add_parser("loss", parents = [common], help = "loss budget in dB")
    p.add_argument("--entries", type = float, nargs = "+")
    return parser


_COMMON = ("command", "config", "seed", "out", "exact")


def make_spec(args : argparse.Namespace) -> harness.ExperimentSpec:
    '''
    the experiment of the parsed command line; flags override the configuration file
    '''
    kind = COMMANDS[args.command]
    overrides : Dict[str, Any] = {k : v for k, v in vars(args).items() if k not in _COMMON and v is not None}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.exact:
        overrides["exact"] = True

    if args.config is None:
        run = {k : overrides.pop(k) for k in ("seed", "exact") if k in overrides}
        return harness.ExperimentSpec(kind, DeviceConfig.default(), options = overrides, **run)
    try:
        text = Path(args.config).read_text()
    except OSError as e:
        raise ConfigErrorWithLog("cannot read the configuration '" + args.config + "': " + str(e))
    return harness.ExperimentSpec.from_document(text, args.config, kind, **overrides)


def main(argv : Sequence[str] | None = None) -> int:
    LogSystem("error", "Error: ")
    LogSystem("warning", "Warning: ")
    LogSystem("info")

    args = build_parser().parse_args(argv)
    out = Path(args.out if args.out is not None else os.environ.get(OUT_ENV, "."))
    code = 0
    try:
        spec = make_spec(args)
        report = harness.run(spec)
        written = harness.export(report, out)
        LogSystem("info").append(report.summary().rstrip("\n"))
        LogSystem("info").append("wrote " + ", ".join(str(p) for p in written))
    except RuntimeErrorWithLog as e:
        code = e.exit_code
    except (ValueError, KeyError, TypeError, ArithmeticError, OSError, np.linalg.LinAlgError) as e:
        LogSystem.push("error", type(e).__name__ + ": " + str(e))
        code = RuntimeErrorWithLog.exit_code

    LogSystem("error").summary(None, True)
    LogSystem("warning").summary(None, True)
    LogSystem("info").summary(None, True)
    return code


if __name__ == "__main__":
    sys.exit(main())
