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
# counts_table.py
#
# measurement setting -> outcome pattern -> integer counts.
# Outcome patterns are bit strings, the first bit belongs to qubit 1.
# ------------------------------------------------------------

from __future__ import annotations
from typing import Dict, Iterator, List, Mapping, Tuple

import csv
from pathlib import Path

import numpy as np

from ..log_system import ConfigErrorWithLog, RuntimeErrorWithLog


CSV_COLUMNS = ("setting_string", "outcome_bits", "counts")


def all_patterns(n : int) -> List[str]:
    '''
    the 2^n outcome patterns in index order
    '''
    return [format(i, "0" + str(n) + "b") for i in range(2**n)]


class CountsTable:

    def __init__(self, n_qubits : int, data : Mapping[Tuple[str, str], int] | None = None):
        if n_qubits < 1:
            raise ValueError()
        self._n : int = n_qubits
        self._data : Dict[str, np.ndarray] = {}
        if data is not None:
            for (setting, outcome), c in data.items():
                self.add(setting, outcome, c)

    @property
    def n_qubits(self) -> int:
        return self._n

    def add(self, setting : str, outcome : str, count : int) -> None:
        if len(outcome) != self._n or any(b not in "01" for b in outcome):
            raise RuntimeErrorWithLog("invalid outcome pattern '" + outcome + "' for " + str(self._n) + " qubits.")
        if count < 0 or int(count) != count:
            raise RuntimeErrorWithLog("counts must be non-negative integers, got " + str(count) + ".")
        if setting not in self._data:
            self._data[setting] = np.zeros(2**self._n, dtype = np.int64)
        self._data[setting][int(outcome, 2)] += int(count)

    def set_counts(self, setting : str, counts : np.ndarray) -> None:
        counts = np.asarray(counts)
        if counts.shape != (2**self._n,) or np.any(counts < 0):
            raise RuntimeErrorWithLog("a setting needs " + str(2**self._n) + " non-negative counts.")
        self._data[setting] = counts.astype(np.int64)

    def counts(self, setting : str) -> np.ndarray:
        '''
        counts of the setting, indexed by the integer value of the outcome pattern
        '''
        if setting not in self._data:
            raise RuntimeErrorWithLog("no counts recorded for setting '" + setting + "'.")
        return self._data[setting].copy()

    def total(self, setting : str | None = None) -> int:
        if setting is None:
            return int(sum(v.sum() for v in self._data.values()))
        return int(self.counts(setting).sum())

    @property
    def settings(self) -> List[str]:
        return list(self._data.keys())

    def __contains__(self, setting : str) -> bool:
        return setting in self._data

    def __iter__(self) -> Iterator[Tuple[str, str, int]]:
        patterns = all_patterns(self._n)
        for setting, v in self._data.items():
            for i, c in enumerate(v):
                yield setting, patterns[i], int(c)

    def __eq__(self, other : object) -> bool:
        if not isinstance(other, CountsTable) or other.n_qubits != self._n:
            return False
        if set(self.settings) != set(other.settings):
            return False
        return all(np.array_equal(self._data[s], other.counts(s)) for s in self.settings)

    def save_csv(self, path : str | Path) -> None:
        with open(path, "w", newline = "") as f:
            writer = csv.writer(f)
            writer.writerow(CSV_COLUMNS)
            for row in self:
                writer.writerow(row)

    @staticmethod
    def load_csv(path : str | Path) -> CountsTable:
        with open(path, newline = "") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_COLUMNS:
                raise ConfigErrorWithLog("counts file '" + str(path) + "' must have the columns "
                    + ", ".join(CSV_COLUMNS) + ".")
            rows = list(reader)
        if not rows:
            raise ConfigErrorWithLog("counts file '" + str(path) + "' is empty.")
        table = CountsTable(len(rows[0]["outcome_bits"]))
        for row in rows:
            try:
                count = int(row["counts"])
            except ValueError:
                raise ConfigErrorWithLog("invalid count '" + row["counts"] + "' in '" + str(path) + "'.")
            table.add(row["setting_string"], row["outcome_bits"], count)
        return table
