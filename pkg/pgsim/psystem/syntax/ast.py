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
# ast.py
#
# the abstract syntax tree of configuration documents
# ------------------------------------------------------------

from __future__ import annotations
from typing import Any, List, Tuple

from .pos_info import PosInfo

class Ast:
    def __init__(self, pos : PosInfo, ast_label : str):
        self.pos : PosInfo = pos
        self.label : str = ast_label

class AstConfig(Ast):
    def __init__(self, pos : PosInfo, device : AstDevice, experiment : AstExperiment | None):
        super().__init__(pos, "config")
        self.device : AstDevice = device
        self.experiment : AstExperiment | None = experiment

class AstDevice(Ast):
    def __init__(self, pos : PosInfo, items : List[Ast]):
        super().__init__(pos, "device")
        self.items : List[Ast] = items

class AstSource(Ast):
    def __init__(self, pos : PosInfo, index : int, xi : complex, signal : int, idler : int):
        super().__init__(pos, "source")
        self.index : int = index
        self.xi : complex = xi
        self.signal : int = signal
        self.idler : int = idler

class AstRpeg(Ast):
    def __init__(self, pos : PosInfo, mode : str):
        super().__init__(pos, "rpeg")
        self.mode : str = mode

class AstAnalysis(Ast):
    def __init__(self, pos : PosInfo, qubit : int, phi_z : float, theta_y : float, monitor : int):
        super().__init__(pos, "analysis")
        self.qubit : int = qubit
        self.phi_z : float = phi_z
        self.theta_y : float = theta_y
        self.monitor : int = monitor

class AstPhaseOffsets(Ast):
    def __init__(self, pos : PosInfo, values : List[float]):
        super().__init__(pos, "phase offsets")
        self.values : List[float] = values

class AstErrorParams(Ast):
    def __init__(self, pos : PosInfo, sigma : float, p : float, delta : float):
        super().__init__(pos, "error")
        self.sigma : float = sigma
        self.p : float = p
        self.delta : float = delta

class AstExperiment(Ast):
    def __init__(self, pos : PosInfo, entries : List[Tuple[str, Any]]):
        super().__init__(pos, "experiment")
        self.entries : List[Tuple[str, Any]] = entries
