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
# graph_stabilizers.py
#
# graph states: stabilizer groups, fidelity and Mermin estimators
# from counts, and vertex projections onto |0>
# ------------------------------------------------------------

from __future__ import annotations
from typing import Dict, Iterable, Iterator, List, Mapping, Sequence, Tuple

import itertools
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .settings import Settings
from .log_system import RuntimeErrorWithLog, NumericErrorWithLog
from .content.counts_table import CountsTable
from . import opt_kernel


Graph = nx.Graph

# label of a group element: the sorted generator indices whose product it is
Label = Tuple[int, ...]


############################################################
# graphs
############################################################

def make_graph(vertices : Iterable[int], edges : Iterable[Tuple[int, int]]) -> Graph:
    g = nx.Graph()
    g.add_nodes_from(vertices)
    for u, v in edges:
        if u == v:
            raise RuntimeErrorWithLog("self-loop on vertex " + str(u) + ".")
        if g.has_edge(u, v):
            raise RuntimeErrorWithLog("duplicate edge (" + str(u) + ", " + str(v) + ").")
        if u not in g or v not in g:
            raise RuntimeErrorWithLog("edge (" + str(u) + ", " + str(v) + ") leaves the vertex set.")
        g.add_edge(u, v)
    return g


def star(n : int, center : int | None = None) -> Graph:
    '''
    star on vertices 1..n, centered on vertex n by default
    '''
    if center is None:
        center = n
    return make_graph(range(1, n + 1), [(center, v) for v in range(1, n + 1) if v != center])


def line(order : Sequence[int]) -> Graph:
    '''
    path visiting the vertices in the given order, e.g. line((3, 1, 2, 4))
    '''
    return make_graph(order, list(zip(order[:-1], order[1:])))


def star_state() -> Graph:
    return star(4)


def line_state() -> Graph:
    return line((3, 1, 2, 4))


def same_graph(a : Graph, b : Graph) -> bool:
    '''
    equality of labelled graphs
    '''
    return set(a.nodes) == set(b.nodes) and \
        set(frozenset(e) for e in a.edges) == set(frozenset(e) for e in b.edges)


############################################################
# Pauli strings
############################################################

# single letter products: (a, b) -> (phase power of i, letter)
_PRODUCT : Dict[Tuple[str, str], Tuple[int, str]] = {}
for _a in "IXYZ":
    _PRODUCT[("I", _a)] = (0, _a)
    _PRODUCT[(_a, "I")] = (0, _a)
    _PRODUCT[(_a, _a)] = (0, "I")
for _a, _b, _c in (("X", "Y", "Z"), ("Y", "Z", "X"), ("Z", "X", "Y")):
    _PRODUCT[(_a, _b)] = (1, _c)
    _PRODUCT[(_b, _a)] = (3, _c)


@dataclass(frozen = True)
class PauliString:
    letters : str
    sign : int = 1

    def __post_init__(self):
        if any(c not in "IXYZ" for c in self.letters):
            raise RuntimeErrorWithLog("invalid Pauli string '" + self.letters + "'.")
        if self.sign not in (1, -1):
            raise RuntimeErrorWithLog("Pauli sign must be +1 or -1.")

    @property
    def n(self) -> int:
        return len(self.letters)

    @property
    def setting(self) -> str:
        '''
        the local measurement bases; identity letters are measured in Z
        '''
        return self.letters.replace("I", "Z")

    def __mul__(self, other : PauliString) -> PauliString:
        if self.n != other.n:
            raise RuntimeErrorWithLog("product of Pauli strings of different lengths.")
        power = 0
        letters = ""
        for a, b in zip(self.letters, other.letters):
            k, c = _PRODUCT[(a, b)]
            power += k
            letters += c
        power %= 4
        if power % 2 == 1:
            raise RuntimeErrorWithLog("the product of anticommuting " + str(self) + " and " + str(other)
                + " is not Hermitian.")
        return PauliString(letters, self.sign * other.sign * (1 if power == 0 else -1))

    def commutes(self, other : PauliString) -> bool:
        anti = sum(1 for a, b in zip(self.letters, other.letters) if a != "I" and b != "I" and a != b)
        return anti % 2 == 0

    def matrix(self) -> np.ndarray:
        return self.sign * opt_kernel.pauli_matrix(self.letters)

    def eigenvalue(self, outcome : str) -> int:
        '''
        product of the local eigenvalues (-1)^bit over the non-identity letters, times the sign
        '''
        lam = self.sign
        for c, b in zip(self.letters, outcome):
            if c != "I" and b == "1":
                lam = -lam
        return lam

    def eigenvalues(self) -> np.ndarray:
        '''
        eigenvalue of every outcome pattern, in index order
        '''
        n = self.n
        lam = np.full(2**n, self.sign, dtype = int)
        idx = np.arange(2**n)
        for k, c in enumerate(self.letters):
            if c != "I":
                bit = (idx >> (n - 1 - k)) & 1
                lam = lam * (1 - 2 * bit)
        return lam

    def embed(self, positions : Sequence[int], n : int) -> PauliString:
        '''
        place the letters on the given qubit positions (counted from 1) of an n-qubit string
        '''
        letters = ["I"] * n
        for c, q in zip(self.letters, positions):
            letters[q - 1] = c
        return PauliString("".join(letters), self.sign)

    def __str__(self) -> str:
        return ("+" if self.sign == 1 else "-") + self.letters


############################################################
# stabilizer groups
############################################################

class StabilizerGroup:
    '''
    the generators g_i = X_i prod_{j in N(i)} Z_j of a graph state and their 2^n products
    '''
    def __init__(self, graph : Graph, generators : List[PauliString]):
        self.graph : Graph = graph
        self.vertices : List[int] = sorted(graph.nodes)
        self.generators : List[PauliString] = generators

        for a, b in itertools.combinations(generators, 2):
            if not a.commutes(b):
                raise RuntimeErrorWithLog("stabilizer generators " + str(a) + " and " + str(b) + " anticommute.")

        n = len(generators)
        self.elements : Dict[Label, PauliString] = {}
        for mask in range(2**n):
            label = tuple(i + 1 for i in range(n) if (mask >> i) & 1)
            e = PauliString("I" * n)
            for i in label:
                e = e * generators[i - 1]
            self.elements[label] = e
        self._index : Dict[PauliString, Label] = {e : l for l, e in self.elements.items()}

    @property
    def n(self) -> int:
        return len(self.generators)

    @property
    def labels(self) -> List[Label]:
        return list(self.elements.keys())

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[Tuple[Label, PauliString]]:
        return iter(self.elements.items())

    def __getitem__(self, label : Iterable[int]) -> PauliString:
        return self.elements[product_label(label)]

    def __contains__(self, pauli : PauliString) -> bool:
        return pauli in self._index

    def label_of(self, pauli : PauliString) -> Label:
        return self._index[pauli]


def product_label(factors : Iterable[int]) -> Label:
    '''
    label of a product of generators; repeated generators cancel
    '''
    s : set = set()
    for i in factors:
        s ^= {i}
    return tuple(sorted(s))


def generators_from_graph(g : Graph) -> StabilizerGroup:
    n = g.number_of_nodes()
    if n == 0:
        raise RuntimeErrorWithLog("the graph has no vertices.")
    if n > Settings.cur().MAX_GRAPH_VERTICES:
        raise RuntimeErrorWithLog("graph with " + str(n) + " vertices exceeds the stabilizer expansion limit of "
            + str(Settings.cur().MAX_GRAPH_VERTICES) + ".")
    vertices = sorted(g.nodes)
    pos = {v : k for k, v in enumerate(vertices)}
    generators : List[PauliString] = []
    for v in vertices:
        letters = ["I"] * n
        letters[pos[v]] = "X"
        for w in g.neighbors(v):
            letters[pos[w]] = "Z"
        generators.append(PauliString("".join(letters)))
    return StabilizerGroup(g, generators)


############################################################
# estimators
############################################################

def expectation_from_counts(table : CountsTable, stabilizer : PauliString,
    condition : Mapping[int, int] | None = None) -> float:
    '''
    <g> = sum_j lambda_j C_j / sum_j C_j over the counts of the setting of g

    condition: optional {qubit : bit} restricting the outcomes, used for projected states
    '''
    counts = table.counts(stabilizer.setting).astype(float)
    if condition:
        idx = np.arange(len(counts))
        n = stabilizer.n
        for q, b in condition.items():
            counts = np.where(((idx >> (n - q)) & 1) == b, counts, 0.)
    total = counts.sum()
    if total == 0:
        raise NumericErrorWithLog("no counts for the setting '" + stabilizer.setting + "'.")
    return float(np.dot(stabilizer.eigenvalues(), counts) / total)


def expectation_error(value : float, total : float) -> float:
    '''
    binomial standard error of a +-1 valued mean from `total` counts: sqrt((1 - g^2) / N)
    '''
    if total <= 0:
        return float("inf")
    return float(np.sqrt(max(0., 1. - value**2) / total))


def group_expectations(table : CountsTable, group : StabilizerGroup,
    condition : Mapping[int, int] | None = None) -> Tuple[Dict[Label, float], Dict[Label, float]]:
    '''
    expectation and error of every group element; the identity is +1 with no error
    '''
    values : Dict[Label, float] = {}
    errors : Dict[Label, float] = {}
    for label, g in group:
        if label == ():
            values[label], errors[label] = 1., 0.
            continue
        values[label] = expectation_from_counts(table, g, condition)
        counts = table.counts(g.setting)
        if condition:
            idx = np.arange(len(counts))
            for q, b in condition.items():
                counts = np.where(((idx >> (g.n - q)) & 1) == b, counts, 0)
        errors[label] = expectation_error(values[label], counts.sum())
    return values, errors


def fidelity(expectations : Iterable[float]) -> float:
    '''
    F = mean of the 2^n stabilizer expectations, the identity included as +1
    '''
    v = np.array(list(expectations), dtype = float)
    if len(v) == 0 or len(v) & (len(v) - 1):
        raise RuntimeErrorWithLog("fidelity needs 2^n expectations, got " + str(len(v)) + ".")
    return float(v.mean())


def fidelity_error(errors : Iterable[float]) -> float:
    e = np.array(list(errors), dtype = float)
    return float(np.sqrt(np.sum(e**2)) / len(e))


def witnesses_entanglement(f : float) -> bool:
    '''
    F > 1/2 certifies genuine multipartite entanglement of a graph state
    '''
    return f > 0.5


@dataclass
class MerminResult:
    value : float
    classical_bound : float
    quantum_bound : float
    terms : List[Label]
    error : float = 0.
    variant : str = ""
    variants : Dict[str, float] = field(default_factory = dict)

    @property
    def violates(self) -> bool:
        return abs(self.value) > self.classical_bound


# two-setting constructions: name -> (terms, substitutions g_a -> g_a g_b)
MerminVariant = Tuple[List[Label], List[Tuple[int, int]]]

def _star_variants() -> Dict[str, MerminVariant]:
    r : Dict[str, MerminVariant] = {
        "II" : ([(4,), (2, 3, 4), (1, 2, 4), (1, 3, 4)], [(4, k) for k in (1, 2, 3)]),
    }
    for i, j in ((1, 2), (1, 3), (2, 3)):
        k = ({1, 2, 3} - {i, j}).pop()
        r["II'(" + str(i) + str(j) + ")"] = ([(4,), (i, 4), (j, 4), (i, j, 4)], [(4, k)])
    return r

def _line_variants() -> Dict[str, MerminVariant]:
    return {
        "II" : ([(1,), (1, 2), (1, 3), (1, 2, 3)], [(2, 4)]),
        "II'" : ([(1, 2), (1, 4), (1, 2, 3), (1, 3, 4)], [(2, 4), (1, 2), (2, 3), (3, 4)]),
    }


def mermin_variants(group : StabilizerGroup) -> Dict[str, List[Label]]:
    '''
    every two-setting Mermin test composed from the stabilizers of the star or the line state
    '''
    if same_graph(group.graph, star_state()):
        base = _star_variants()
    elif same_graph(group.graph, line_state()):
        base = _line_variants()
    else:
        raise RuntimeErrorWithLog("no two-setting Mermin construction is known for this graph.")

    result : Dict[str, List[Label]] = {}
    for name, (terms, subs) in base.items():
        result[name] = list(terms)
        for a, b in subs:
            result[name + " g" + str(a) + "->g" + str(a) + "g" + str(b)] = [
                product_label(sum(((a, b) if i == a else (i,) for i in t), ())) for t in terms
            ]
    return result


def mermin_two_setting(group : StabilizerGroup, expectations : Mapping[Label, float],
    variant : str | None = None, errors : Mapping[Label, float] | None = None) -> MerminResult:
    '''
    sum of the four stabilizer expectations of a two-setting test; variant None picks
    the optimum and the result lists every variant
    '''
    variants = mermin_variants(group)
    if variant is not None and variant not in variants:
        raise RuntimeErrorWithLog("unknown Mermin variant '" + variant + "', expected one of "
            + ", ".join(variants) + ".")
    values = {name : float(sum(expectations[t] for t in terms)) for name, terms in variants.items()}
    if variant is None:
        variant = max(values, key = lambda k : values[k])
    terms = variants[variant]
    err = 0.
    if errors is not None:
        err = float(np.sqrt(sum(errors[t]**2 for t in terms)))
    return MerminResult(values[variant], 2., 4., terms, err, variant, values)


MERMIN_III_CLASSICAL = {2 : 2., 3 : 6., 4 : 12.}

def mermin_three_setting(group : StabilizerGroup, expectations : Mapping[Label, float],
    errors : Mapping[Label, float] | None = None) -> MerminResult:
    '''
    sum over all 2^n stabilizers, equal to 2^n F
    '''
    terms = group.labels
    value = float(sum(expectations[t] for t in terms))
    err = 0.
    if errors is not None:
        err = float(np.sqrt(sum(errors[t]**2 for t in terms)))
    return MerminResult(value, MERMIN_III_CLASSICAL.get(group.n, float("nan")), float(2**group.n),
        terms, err, "III", {"III" : value})


# analyzer settings of the Bell-CHSH test on |Phi+>: A0 = Z, A1 = X, B0/B1 = (Z +- X)/sqrt2,
# as logical (theta, phi) pairs
CHSH_ANGLES : Dict[str, Tuple[Tuple[float, float], Tuple[float, float]]] = {
    "A0B0" : ((0., 0.), (np.pi/4, 0.)),
    "A0B1" : ((0., 0.), (np.pi/4, np.pi)),
    "A1B0" : ((np.pi/2, 0.), (np.pi/4, 0.)),
    "A1B1" : ((np.pi/2, 0.), (np.pi/4, np.pi)),
}


def correlator_from_counts(table : CountsTable, setting : str) -> float:
    '''
    mean of the product of all local +-1 outcomes
    '''
    counts = table.counts(setting).astype(float)
    total = counts.sum()
    if total == 0:
        raise NumericErrorWithLog("no counts for the setting '" + setting + "'.")
    return float(np.dot(PauliString("Z" * table.n_qubits).eigenvalues(), counts) / total)


def chsh(correlators : Mapping[str, float], errors : Mapping[str, float] | None = None) -> MerminResult:
    '''
    S = E(A0B0) + E(A0B1) + E(A1B0) - E(A1B1), classical bound 2, quantum bound 2 sqrt2
    '''
    signs = {"A0B0" : 1., "A0B1" : 1., "A1B0" : 1., "A1B1" : -1.}
    value = float(sum(signs[k] * correlators[k] for k in signs))
    err = 0.
    if errors is not None:
        err = float(np.sqrt(sum(errors[k]**2 for k in signs)))
    return MerminResult(value, 2., 2. * np.sqrt(2.), [], err, "CHSH", {"CHSH" : value})


############################################################
# projections and ideal states
############################################################

def project_zero(g : Graph, qubits_to_remove : Iterable[int]) -> Graph:
    '''
    measuring vertices in Z with outcome |0> deletes them with their edges
    '''
    remove = set(qubits_to_remove)
    if not remove <= set(g.nodes):
        raise RuntimeErrorWithLog("cannot remove " + str(sorted(remove - set(g.nodes))) + ": not vertices.")
    if remove == set(g.nodes):
        raise RuntimeErrorWithLog("cannot project every vertex of the graph.")
    h = g.copy()
    h.remove_nodes_from(remove)
    return h


def ideal_state_vector(g : Graph) -> np.ndarray:
    '''
    |G> = prod_edges CZ |+>^n, qubits in sorted vertex order, the first one most significant
    '''
    n = g.number_of_nodes()
    if n > Settings.cur().MAX_GRAPH_VERTICES:
        raise RuntimeErrorWithLog("graph with " + str(n) + " vertices is too large.")
    pos = {v : k for k, v in enumerate(sorted(g.nodes))}
    idx = np.arange(2**n)
    parity = np.zeros(2**n, dtype = int)
    for u, v in g.edges:
        parity ^= ((idx >> (n - 1 - pos[u])) & 1) & ((idx >> (n - 1 - pos[v])) & 1)
    return (1. - 2. * parity).astype(complex) / np.sqrt(2.**n)


def project_vector_zero(g : Graph, qubits_to_remove : Iterable[int]) -> np.ndarray:
    '''
    normalized <0|_S |G>, the state vector path of project_zero
    '''
    remove = set(qubits_to_remove)
    vertices = sorted(g.nodes)
    n = len(vertices)
    v = ideal_state_vector(g)
    idx = np.arange(2**n)
    keep = np.ones(2**n, dtype = bool)
    for k, w in enumerate(vertices):
        if w in remove:
            keep &= ((idx >> (n - 1 - k)) & 1) == 0
    r = v[keep]
    return r / np.linalg.norm(r)


def state_fidelity(a : np.ndarray, b : np.ndarray) -> float:
    '''
    |<a|b>|^2 of normalized vectors
    '''
    return float(abs(np.vdot(a, b))**2 / (np.vdot(a, a).real * np.vdot(b, b).real))
