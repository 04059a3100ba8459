"""Finite-dimensional particle space: N particles on a periodic axis grid.

Each particle lives on an n_x-point periodic grid embedded on the z-axis
(position x_j = q_j * zhat); momenta are spectral (Fourier-diagonal) and
carry the small parameter epsilon, p_j = -i eps d/dq_j. An optional spin-1/2
factor per particle multiplies the dimension by 2^N. Pair separations use
the minimal image on the circle so that kinetic + Coulomb commutes with the
grid translation.
"""

from dataclasses import dataclass, field

import numpy as np

from . import modes as _modes

PAULI = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class ParticleSpace:
    n: int                      # particle count N
    n_grid: int                 # grid points per particle
    box: float                  # periodic length
    masses: tuple
    charges: tuple
    epsilon: float
    spin: bool = False

    positions: np.ndarray = field(init=False)       # (n_grid,)
    momenta: np.ndarray = field(init=False)         # (n_grid,) eps-momentum lattice

    def __post_init__(self):
        if len(self.masses) != self.n or len(self.charges) != self.n:
            raise UsageError("need one mass and one charge per particle")
        if min(self.masses) <= 0:
            raise UsageError("masses must be positive")
        if not 0 < self.epsilon <= 1:
            raise UsageError("epsilon must lie in (0, 1]")
        dq = self.box / self.n_grid
        object.__setattr__(self, "positions", dq * np.arange(self.n_grid))
        freqs = np.fft.fftfreq(self.n_grid, d=1.0 / self.n_grid)  # signed band
        object.__setattr__(self, "momenta", self.epsilon * 2.0 * np.pi * freqs / self.box)

    @property
    def dx(self):
        return self.box / self.n_grid

    @property
    def dim_grid(self):
        return self.n_grid ** self.n

    @property
    def dim_spin(self):
        return 2 ** self.n if self.spin else 1

    @property
    def dim(self):
        return self.dim_grid * self.dim_spin

    def grid_coordinates(self, j):
        """Diagonal of q_j over the flattened grid factor, shape (dim_grid,)."""
        shape = [1] * self.n
        shape[j] = self.n_grid
        coords = self.positions.reshape(shape)
        return np.broadcast_to(coords, (self.n_grid,) * self.n).reshape(-1)

    def minimal_image(self, d):
        return (d + 0.5 * self.box) % self.box - 0.5 * self.box


def _embed_grid(space, op1d, j):
    """Kron-embed a one-particle grid operator at slot j (grid factor only)."""
    out = np.array([[1.0 + 0j]])
    eye = np.eye(space.n_grid)
    for slot in range(space.n):
        out = np.kron(out, op1d if slot == j else eye)
    return out


def _embed_spin(space, op2, j):
    out = np.array([[1.0 + 0j]])
    eye = np.eye(2)
    for slot in range(space.n):
        out = np.kron(out, op2 if slot == j else eye)
    return out


def _with_spin(space, grid_op):
    if not space.spin:
        return grid_op
    return np.kron(grid_op, np.eye(space.dim_spin))


def momentum_1d(space):
    """Spectral eps-momentum on one grid factor (dense, Hermitian)."""
    f = np.fft.fft(np.eye(space.n_grid), axis=0)
    finv = np.fft.ifft(np.eye(space.n_grid), axis=0)
    p = finv @ (space.momenta[:, None] * f)
    return 0.5 * (p + p.conj().T)


def momentum_operator(space, j):
    """eps-momentum of particle j on the full space."""
    if not 0 <= j < space.n:
        raise UsageError(f"particle index {j} out of range")
    return _with_spin(space, _embed_grid(space, momentum_1d(space), j))


def kinetic_term(space):
    """sum_j p_j^2 / (2 m_j), Hermitian positive semidefinite."""
    p2 = momentum_1d(space)
    p2 = p2 @ p2
    out = np.zeros((space.dim_grid, space.dim_grid), dtype=complex)
    for j in range(space.n):
        out += _embed_grid(space, p2, j) / (2.0 * space.masses[j])
    return _with_spin(space, out)


class PairKernel:
    """Box-periodic pair kernel: the trigonometric interpolation of the
    quadrature Coulomb kernel through the lattice separations.

    Values coincide with the raw kernel on every grid separation, but the
    interpolation is a smooth periodic function, so classical flows see no
    derivative kink at the antipode and energy is conserved to integrator
    order; the quantum diagonal, the force entering the photon-emission
    coupling, and the trajectories all share this one convention.
    """

    def __init__(self, space, grid, sigma=None):
        seps = space.minimal_image(space.dx * np.arange(space.n_grid))
        samples = _modes.coulomb_kernel(grid, np.abs(seps), sigma)
        self.box = space.box
        # minimal-image samples are even-periodic, so the spectrum is real
        spectrum = np.fft.rfft(samples)
        assert np.max(np.abs(spectrum.imag)) < 1e-10 * max(np.max(np.abs(spectrum)), 1e-300)
        self.coeffs = spectrum.real / space.n_grid
        self.coeffs[1:] *= 2.0
        if space.n_grid % 2 == 0:
            self.coeffs[-1] *= 0.5
        self.freqs = 2.0 * np.pi * np.arange(len(self.coeffs)) / space.box

    def value(self, r):
        r = np.asarray(r, dtype=float)
        return np.cos(np.multiply.outer(r, self.freqs)) @ self.coeffs

    def gradient(self, r):
        r = np.asarray(r, dtype=float)
        return -np.sin(np.multiply.outer(r, self.freqs)) @ (self.freqs * self.coeffs)


def pair_kernel(space, grid, sigma=None):
    key = ("_pair_kernel", id(grid), None if sigma is None else round(float(sigma), 12))
    cache = getattr(space, "_kernel_cache", None)
    if cache is None:
        cache = {}
        object.__setattr__(space, "_kernel_cache", cache)
    if key not in cache:
        cache[key] = PairKernel(space, grid, sigma)
    return cache[key]


def coulomb_diagonal(space, grid, sigma=None):
    """Smeared Coulomb potential on the grid diagonal, self-energies included.

    V(q) = 1/2 sum_{j,l} e_j e_l C(q_j - q_l) with C the quadrature pair
    kernel (values on lattice separations are those of the raw kernel).
    Real by construction (cosine kernel), translation invariant.
    """
    kern = pair_kernel(space, grid, sigma)
    qs = [space.grid_coordinates(j) for j in range(space.n)]
    out = np.zeros(space.dim_grid)
    for j in range(space.n):
        for l in range(space.n):
            out += 0.5 * space.charges[j] * space.charges[l] * kern.value(qs[j] - qs[l])
    return out


def coulomb_potential(space, grid, sigma=None):
    """Diagonal matrix of the smeared Coulomb potential on the full space."""
    return _with_spin(space, np.diag(coulomb_diagonal(space, grid, sigma)))


def coulomb_gradient_diagonal(space, grid, j, sigma=None):
    """d V / d q_j on the grid diagonal, from the periodic kernel derivative."""
    kern = pair_kernel(space, grid, sigma)
    qs = [space.grid_coordinates(l) for l in range(space.n)]
    out = np.zeros(space.dim_grid)
    for l in range(space.n):
        if l == j:
            continue  # C'(0) = 0 anyway
        out += space.charges[j] * space.charges[l] * kern.gradient(qs[j] - qs[l])
    return out


def spin_operators(space, j):
    """Pauli vector (sx, sy, sz) of particle j on the full space."""
    if not space.spin:
        raise UsageError("spin operators requested on a spinless space")
    mats = []
    for axis in ("x", "y", "z"):
        spin_part = _embed_spin(space, PAULI[axis], j)
        mats.append(np.kron(np.eye(space.dim_grid), spin_part))
    return tuple(mats)


def translation_operator(space):
    """One-site cyclic shift applied to every particle (grid factor)."""
    shift = np.roll(np.eye(space.n_grid), 1, axis=0)
    out = np.array([[1.0 + 0j]])
    for _ in range(space.n):
        out = np.kron(out, shift)
    return _with_spin(space, out)


def particle_hamiltonian(space, grid, sigma=None):
    """Kinetic + smeared Coulomb on the particle space."""
    return kinetic_term(space) + coulomb_potential(space, grid, sigma)


def gaussian_packet(space, centers, widths, momenta=None):
    """Normalized product of Gaussian wavepackets, one per particle.

    Packet j is exp(-(q - c_j)^2 / (4 s_j^2) + i p_j q / eps) on the grid;
    tails must be negligible at the box edge for the phase mismatch across
    the boundary to be irrelevant. Spin factor, when present, is polarized up.
    """
    momenta = [0.0] * space.n if momenta is None else momenta
    psi = np.array([1.0 + 0j])
    for c, s, p in zip(centers, widths, momenta):
        amp = np.exp(-((space.positions - c) ** 2) / (4.0 * s ** 2))
        amp = amp * np.exp(1j * p * space.positions / space.epsilon)
        psi = np.kron(psi, amp)
    if space.spin:
        up = np.zeros(space.dim_spin)
        up[0] = 1.0
        psi = np.kron(psi, up)
    return psi / np.linalg.norm(psi)


def wrap_risk(space, centers, widths, drift=0.0):
    """Largest packet amplitude at the box boundary after an optional drift.

    Used to warn when a configured run lets wavepackets touch the wrap.
    """
    worst = 0.0
    for c, s in zip(centers, widths):
        margin = min((c + drift) % space.box, space.box - ((c + drift) % space.box))
        margin = max(margin, 1e-12)
        worst = max(worst, float(np.exp(-(margin ** 2) / (4.0 * s ** 2))))
    return worst
