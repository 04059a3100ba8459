"""Occupation-number representation of the photon-number-truncated Fock space.

States are occupation vectors n over the modes of a ModeGrid with
sum(n) <= L, grouped by total photon number. Ladder operators use
orthonormal per-mode oscillators; the quadrature weights enter through the
smearing a(f) = sum_i sqrt(w_i) conj(f_i) a_i, so the canonical commutator
[a(f), a*(g)] reproduces the weighted L2 pairing and continuum formulas
transcribe verbatim. Transitions that would leave the truncated space are
dropped (projector sandwich), so the commutation relations hold exactly off
the truncation boundary and are tested there.
"""

from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import comb

import numpy as np
import scipy.sparse as sp

from .modes import GridMismatchError, ModeGrid

DIMENSION_CAP = 200_000


class ResourceError(RuntimeError):
    """Requested truncation exceeds the configured dimension cap."""


@dataclass(frozen=True)
class FockBasis:
    grid: ModeGrid
    n_photon_max: int                # photon-number cutoff L
    occupations: np.ndarray          # (D, K) ints, grouped by total number
    block_slices: tuple               # slice per photon number M

    @property
    def dim(self):
        return self.occupations.shape[0]

    @property
    def n_modes(self):
        return len(self.grid)

    def index_of(self, occupation):
        occ = np.asarray(occupation, dtype=int)
        matches = np.nonzero((self.occupations == occ).all(axis=1))[0]
        if matches.size == 0:
            raise KeyError(f"occupation {occupation} not in basis")
        return int(matches[0])

    def total_numbers(self):
        return self.occupations.sum(axis=1)


def fock_dimension(n_modes, n_photon_max):
    return sum(comb(m + n_modes - 1, m) for m in range(n_photon_max + 1))


def enumerate_basis(grid, n_photon_max, dimension_cap=DIMENSION_CAP):
    """All occupation vectors with sum <= L, ordered by photon number then
    lexicographically by the sorted mode tuple. Deterministic."""
    if n_photon_max < 0:
        raise ValueError("photon-number cutoff must be >= 0")
    n_modes = len(grid)
    dim = fock_dimension(n_modes, n_photon_max)
    if dim > dimension_cap:
        raise ResourceError(f"Fock dimension {dim} exceeds cap {dimension_cap}")

    rows = []
    slices = []
    start = 0
    for m in range(n_photon_max + 1):
        block = []
        for combo in combinations_with_replacement(range(n_modes), m):
            occ = np.zeros(n_modes, dtype=int)
            for idx in combo:
                occ[idx] += 1
            block.append(occ)
        rows.extend(block)
        slices.append(slice(start, start + len(block)))
        start += len(block)
    return FockBasis(
        grid=grid,
        n_photon_max=n_photon_max,
        occupations=np.array(rows, dtype=int).reshape(dim, n_modes),
        block_slices=tuple(slices),
    )


def _mode_lowering(basis, mode):
    """Sparse elementary annihilator for one mode (amplitude sqrt(n))."""
    occ = basis.occupations
    src = np.nonzero(occ[:, mode] > 0)[0]
    data = np.sqrt(occ[src, mode].astype(float))
    lowered = occ[src].copy()
    lowered[:, mode] -= 1
    # Row lookup for lowered occupations via a dict keyed on bytes.
    index = {row.tobytes(): i for i, row in enumerate(occ)}
    dst = np.array([index[row.tobytes()] for row in lowered], dtype=int)
    return sp.csr_matrix((data, (dst, src)), shape=(basis.dim, basis.dim))


def _lowering_cache(basis):
    cache = getattr(basis, "_lowering", None)
    if cache is None:
        cache = [_mode_lowering(basis, i) for i in range(basis.n_modes)]
        object.__setattr__(basis, "_lowering", cache)
    return cache


def annihilator(basis, f):
    """Smeared annihilator a(f) = sum_i sqrt(w_i) conj(f_i) a_i, dense."""
    if f.grid is not basis.grid:
        raise GridMismatchError("mode function and basis use different grids")
    coeff = np.sqrt(basis.grid.weights) * np.conj(f.values)
    ops = _lowering_cache(basis)
    out = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    for c, op in zip(coeff, ops):
        if c != 0.0:
            out = out + c * op
    return np.asarray(out.todense())


def creator(basis, f):
    return annihilator(basis, f).conj().T


def segal_field(basis, f):
    """Self-adjoint field operator (a(f) + a*(f)) / sqrt(2)."""
    a = annihilator(basis, f)
    return (a + a.conj().T) / np.sqrt(2.0)


def dgamma(basis, omega):
    """Second quantization of a one-mode multiplier: diagonal sum_i omega_i n_i."""
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (basis.n_modes,):
        raise ValueError("need one frequency per mode")
    return basis.occupations @ omega


def field_hamiltonian(basis):
    """Free field energy, diagonal in the occupation basis."""
    return dgamma(basis, basis.grid.k_norms)


def number_projector(basis, m):
    """Diagonal 0/1 vector selecting total photon number == m."""
    if not 0 <= m <= basis.n_photon_max:
        raise ValueError(f"photon number {m} outside truncation 0..{basis.n_photon_max}")
    return (basis.total_numbers() == m).astype(float)


def number_leq_projector(basis, m):
    return (basis.total_numbers() <= m).astype(float)


def vacuum_state(basis):
    vec = np.zeros(basis.dim, dtype=complex)
    vec[0] = 1.0
    return vec


def one_photon_index(basis, mode):
    """Basis index of the single-photon state of the given mode."""
    occ = np.zeros(basis.n_modes, dtype=int)
    occ[mode] = 1
    return basis.index_of(occ)


def basic_estimate_ratio(basis, fs, kinds, rng=None):
    """Norm of a#(f_1)...a#(f_n) (H_f + 1)^(-n/2) over prod ||f_i||_omega.

    Boundedness diagnostic: the ratio must stay O(1) across random smearing
    functions at fixed n. Fails for n exceeding the photon cutoff, where the
    truncation falsifies the norm.
    """
    from .modes import norm_omega

    n = len(fs)
    if len(kinds) != n:
        raise ValueError("need one kind per smearing function")
    if n > basis.n_photon_max:
        raise ValueError(f"string length {n} exceeds photon cutoff {basis.n_photon_max}")
    op = np.eye(basis.dim, dtype=complex)
    for f, kind in zip(fs, kinds):
        mat = annihilator(basis, f) if kind == "a" else creator(basis, f)
        op = op @ mat
    weight = (field_hamiltonian(basis) + 1.0) ** (-0.5 * n)
    op = op * weight[None, :]
    denom = 1.0
    for f in fs:
        denom *= norm_omega(f)
    if denom == 0.0:
        return 0.0
    return float(np.linalg.norm(op, 2)) / denom
