import numpy as np
import pytest

from gpt_tomo.core import CLASSICAL, QUANTUM, REAL, system

I2 = np.eye(2)
PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]])
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]])

KET0 = np.array([1.0, 0.0])
KET1 = np.array([0.0, 1.0])
PHI_PLUS = (np.kron(KET0, KET0) + np.kron(KET1, KET1)) / np.sqrt(2.0)
PHI_MINUS = (np.kron(KET0, KET0) - np.kron(KET1, KET1)) / np.sqrt(2.0)
PSI_PLUS = (np.kron(KET0, KET1) + np.kron(KET1, KET0)) / np.sqrt(2.0)
PSI_MINUS = (np.kron(KET0, KET1) - np.kron(KET1, KET0)) / np.sqrt(2.0)


def proj(vec: np.ndarray) -> np.ndarray:
    return np.outer(vec, vec.conj())


@pytest.fixture
def qubit():
    return system(QUANTUM, 2)


@pytest.fixture
def qutrit():
    return system(QUANTUM, 3)


@pytest.fixture
def rebit():
    return system(REAL, 2)


@pytest.fixture
def bit():
    return system(CLASSICAL, 2)
