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
# settings.py
#
# numeric tolerances and simulation defaults
# ------------------------------------------------------------

from __future__ import annotations
from typing import Any, Dict, Iterator

from contextlib import contextmanager

class Settings:

    _cur : Settings | None = None

    def __init__(self):
        super().__init__()
        # use the default settings
        self.EPS : float = 1e-9
        self.PRUNE_TOL : float = 1e-12
        self.UNITARY_TOL : float = 1e-10
        self.PROB_FLOOR : float = 1e-12
        self.CUTOFF : int = 4
        self.MULTIPHOTON_CUTOFF : int = 6
        self.INTERNAL_DIM : int = 5
        self.MC_SAMPLES : int = 10**4
        self.MAX_GRAPH_VERTICES : int = 16

    @staticmethod
    def cur() -> Settings:
        if Settings._cur is None:
            Settings._cur = Settings()
        return Settings._cur

    @staticmethod
    @contextmanager
    def override(**kwargs : Any) -> Iterator[Settings]:
        '''
        temporarily replace some settings, e.g. `with Settings.override(EPS = 1e-6): ...`
        '''
        settings = Settings.cur()
        saved : Dict[str, Any] = {}
        for key, value in kwargs.items():
            if not hasattr(settings, key):
                raise ValueError("unknown setting '" + key + "'")
            saved[key] = getattr(settings, key)
            setattr(settings, key, value)
        try:
            yield settings
        finally:
            for key, value in saved.items():
                setattr(settings, key, value)
