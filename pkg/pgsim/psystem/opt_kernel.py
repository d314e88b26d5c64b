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
# opt_kernel.py
#
# small linear algebra tools shared by the simulator modules
# ------------------------------------------------------------
from __future__ import annotations
from typing import Dict, Sequence

import numpy as np

from .settings import Settings

# single qubit operators, row index first
optlib : Dict[str, np.ndarray] = {
    "I" : np.array(
        [[1., 0.],
        [0., 1.]], dtype=complex
    ),

    "X" : np.array(
        [[0., 1.],
        [1., 0.]], dtype=complex
    ),

    "Y" : np.array(
        [[0., -1.j],
        [1.j, 0.]], dtype=complex
    ),

    "Z" : np.array(
        [[1., 0.],
        [0., -1.]], dtype=complex
    ),

    "H" : np.array(
        [[1., 1.],
        [1., -1.]], dtype=complex
    )/np.sqrt(2),
}


def np_complex_norm(m : np.ndarray) -> np.ndarray:
    '''
    calculate the element wise norm
    '''
    return np.sqrt(m.real * m.real + m.imag * m.imag)


def np_eps_equal(a : np.ndarray, b : np.ndarray, eps : float | None = None) -> bool:
    '''
    check whether two tensors a and b are equal, according to maximum norm.
    '''
    if a.shape != b.shape :
        return False
    if eps is None:
        eps = Settings.cur().EPS
    if a.size == 0:
        return True

    diff = np.max(np_complex_norm(a - b))
    return bool(diff < eps)


def check_unity(m : np.ndarray) -> bool:
    '''
    check whether the square matrix m is unitary, entrywise to UNITARY_TOL
    '''
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False

    dim = m.shape[0]
    return np_eps_equal(np.conj(m).T @ m, np.eye(dim), Settings.cur().UNITARY_TOL)


def dagger(m : np.ndarray) -> np.ndarray:
    return np.conj(m).T


def kron_all(ms : Sequence[np.ndarray]) -> np.ndarray:
    '''
    tensor product of a list of matrices (or vectors), first factor most significant
    '''
    r = np.ones((1,), dtype=complex) if ms[0].ndim == 1 else np.ones((1, 1), dtype=complex)
    for m in ms:
        r = np.kron(r, m)
    return r


def pauli_matrix(letters : str) -> np.ndarray:
    '''
    matrix of a Pauli string such as 'XZZI', qubit 1 most significant
    '''
    return kron_all([optlib[c] for c in letters])


def bloch_state(theta : float, phi : float) -> np.ndarray:
    '''
    the qubit state cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>
    '''
    return np.array([np.cos(theta/2), np.exp(1j*phi)*np.sin(theta/2)], dtype=complex)


def bloch_angles(psi : np.ndarray) -> tuple[float, float]:
    '''
    inverse of bloch_state, angles wrapped into [0, pi] x [0, 2 pi)
    '''
    psi = psi / np.linalg.norm(psi)
    theta = 2*np.arccos(min(1.0, abs(psi[0])))
    if abs(psi[0]) < 1e-15 or abs(psi[1]) < 1e-15:
        phi = 0.0
    else:
        phi = float(np.mod(np.angle(psi[1]) - np.angle(psi[0]), 2*np.pi))
    return float(theta), phi
