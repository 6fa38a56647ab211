from typing import List, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from ..errors import ConvergenceFailure
from ..hilbert import HermitianObservable, WaveFunction


__all__ = ('eigenstates', 'eigen_decomposition', 'fix_phase')

# Above this size the dense eigensolver is replaced by shift-invert Lanczos
DENSE_LIMIT = 1024


def fix_phase(vectors: np.ndarray) -> np.ndarray:
    "Rotate each column so its largest-magnitude entry is real and positive"
    idx = np.argmax(np.abs(vectors), axis=0)
    peak = vectors[idx, np.arange(vectors.shape[1])]
    return vectors * (np.abs(peak) / peak)


def eigen_decomposition(hamiltonian: HermitianObservable, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """The `k` lowest eigenpairs as (energies, vectors) with vectors in the
    columns, normalised to sum |v|^2 dx = 1 and phase-fixed."""
    n = hamiltonian.grid.n_points
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must be between 1 and n_points={n}")
    try:
        if n <= DENSE_LIMIT or k > n // 2:
            energies, vectors = scipy.linalg.eigh(
                hamiltonian.dense(), subset_by_index=[0, k - 1])
        else:
            # Gershgorin lower bound, so the shift sits below the whole spectrum
            m = hamiltonian.matrix
            diag = m.diagonal().real
            radius = np.asarray(abs(m).sum(axis=1)).ravel() - np.abs(diag)
            sigma = float(np.min(diag - radius)) - 1.
            energies, vectors = scipy.sparse.linalg.eigsh(
                hamiltonian.matrix, k=k, sigma=sigma, which="LM")
            order = np.argsort(energies)
            energies, vectors = energies[order], vectors[:, order]
    except (np.linalg.LinAlgError, scipy.sparse.linalg.ArpackNoConvergence) as e:
        raise ConvergenceFailure(f"eigensolver failed: {e}") from e
    vectors = fix_phase(vectors / np.sqrt(hamiltonian.grid.dx))
    return energies, vectors


def eigenstates(hamiltonian: HermitianObservable, k: int) -> List[Tuple[float, WaveFunction]]:
    "k lowest (energy, state) pairs, energies ascending, states orthonormal"
    energies, vectors = eigen_decomposition(hamiltonian, k)
    grid = hamiltonian.grid
    return [(float(e), WaveFunction(grid, vectors[:, i]))
            for i, e in enumerate(energies)]
