"""Classical flows, Weyl quantization, and the radiated one-photon state.

The classical equations of motion use the same quadrature Coulomb kernel as
the quantum grid (analytic gradient, minimal-image separations), integrated
with velocity Verlet. Weyl quantization uses the midpoint kernel on the
periodic grid: matrix elements are lattice DFT phases times the symbol at
the circle midpoint of the two grid points, which lies exactly on the
half-step lattice, so x-only and p-only symbols are quantized exactly.

The radiated one-photon state is the oscillatory time integral of the
quantized, classically transported Coulomb-force symbol, weighted per mode
by the infrared-regular coupling, with the free phase applied mode-wise.
The radiated power compares its energy derivative against the closed-form
dipole expression (eps^3 / 3 pi^2) <Op(|D..|^2)>.
"""

from dataclasses import dataclass

import numpy as np

from . import fock as _fock
from . import modes as _modes

LARMOR_COEFFICIENT = 1.0 / (3.0 * np.pi ** 2)


class FlowError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# classical trajectories
# ---------------------------------------------------------------------------

def _forces(space, grid, positions):
    """F_j = -dV/dq_j for an (..., N) array of configurations.

    Uses the box-periodic pair kernel shared with the quantum diagonal, so
    flows are smooth across the whole circle.
    """
    from .particles import pair_kernel

    kern = pair_kernel(space, grid)
    charges = np.asarray(space.charges)
    out = np.zeros_like(positions)
    for j in range(space.n):
        acc = np.zeros(positions.shape[:-1])
        for l in range(space.n):
            if l == j:
                continue
            acc += charges[j] * charges[l] * kern.gradient(positions[..., j] - positions[..., l])
        out[..., j] = -acc
    return out


def _potential(space, grid, positions):
    from .particles import pair_kernel

    kern = pair_kernel(space, grid)
    charges = np.asarray(space.charges)
    out = np.zeros(positions.shape[:-1])
    for j in range(space.n):
        for l in range(space.n):
            out += 0.5 * charges[j] * charges[l] * kern.value(
                positions[..., j] - positions[..., l]
            )
    return out


@dataclass
class ClassicalTrajectory:
    times: np.ndarray        # (S,)
    positions: np.ndarray    # (S, ..., N)
    momenta: np.ndarray
    forces: np.ndarray
    energy_drift: float
    dt: float

    def accelerations(self, space):
        masses = np.asarray(space.masses)
        return self.forces / masses

    def dipole_acceleration(self, space):
        """D.. = sum_j (e_j / m_j^2) F_j, the radiated-dipole source."""
        weights = np.asarray(space.charges) / np.asarray(space.masses) ** 2
        return np.tensordot(self.forces, weights, axes=([-1], [0]))

    def force_symbol(self, space):
        """sum_j (e_j / m_j) dV/dq_j along the flow (enters the one-photon
        amplitude; equals -m D.. at equal masses)."""
        weights = np.asarray(space.charges) / np.asarray(space.masses)
        return -np.tensordot(self.forces, weights, axes=([-1], [0]))


def integrate_flow(space, grid, x0, p0, sample_times, steps_per_unit=400,
                   drift_tol=1e-6):
    """Velocity-Verlet flow sampled exactly at the requested times.

    x0, p0 have shape (..., N); sample times must be nondecreasing and start
    at >= 0. Raises when the relative energy drift exceeds drift_tol,
    advising refinement.
    """
    x0 = np.asarray(x0, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    sample_times = np.asarray(sample_times, dtype=float)
    if np.any(np.diff(sample_times) < 0) or sample_times[0] < 0:
        raise ValueError("sample times must be nondecreasing and nonnegative")
    masses = np.asarray(space.masses)

    x = x0.copy()
    p = p0.copy()
    f = _forces(space, grid, x)
    t_now = 0.0
    xs, ps, fs = [], [], []

    def record():
        xs.append(x.copy())
        ps.append(p.copy())
        fs.append(f.copy())

    e0 = float(np.max(np.abs(np.sum(p0 ** 2 / (2 * masses), axis=-1) + _potential(space, grid, x0))))
    dt_target = 1.0 / steps_per_unit
    for t_sample in sample_times:
        span = t_sample - t_now
        if span > 1e-15:
            n_sub = max(1, int(np.ceil(span / dt_target)))
            dt = span / n_sub
            for _ in range(n_sub):
                x = x + dt * p / masses + 0.5 * dt ** 2 * f / masses
                f_new = _forces(space, grid, x)
                p = p + 0.5 * dt * (f + f_new)
                f = f_new
            t_now = t_sample
        record()

    energy = np.sum(np.stack(ps) ** 2 / (2 * masses), axis=-1) + _potential(
        space, grid, np.stack(xs)
    )
    scale = max(float(np.max(np.abs(energy))), abs(e0), 1e-300)
    drift = float(np.max(np.abs(energy - energy[0]))) / scale
    if drift > drift_tol:
        raise FlowError(
            f"classical energy drift {drift:.2e} exceeds {drift_tol:.0e}; "
            "increase steps_per_unit"
        )
    return ClassicalTrajectory(
        times=sample_times,
        positions=np.stack(xs),
        momenta=np.stack(ps),
        forces=np.stack(fs),
        energy_drift=drift,
        dt=dt_target,
    )


def classical_trajectory(space, grid, x0, p0, t, steps=400):
    """Single-configuration flow over [0, t] with uniform sampling."""
    times = np.linspace(0.0, t, max(int(abs(t) * steps), 2) + 1)
    return integrate_flow(space, grid, np.asarray(x0, float), np.asarray(p0, float),
                          times, steps_per_unit=steps)


# ---------------------------------------------------------------------------
# Weyl quantization on the periodic grid
# ---------------------------------------------------------------------------

def _midpoint_index(n_grid):
    """Half-step lattice index of the circle midpoint of grid points (i, j)."""
    i = np.arange(n_grid)[:, None]
    j = np.arange(n_grid)[None, :]
    diff = (j - i + n_grid // 2) % n_grid - n_grid // 2   # shortest arc
    return (2 * i + diff) % (2 * n_grid)


def phase_space_lattice(space):
    """Half-step position lattice and the eps-momentum lattice."""
    half_positions = 0.5 * space.dx * np.arange(2 * space.n_grid)
    return half_positions, space.momenta


@dataclass(frozen=True)
class SampledSymbol:
    """Symbol samples on (half-step x lattice)^N x (momentum lattice)^N."""

    values: np.ndarray    # shape (2 n_x,)*N + (n_x,)*N


def sample_symbol(space, fn):
    """Evaluate a callable symbol fn(X, P) -> scalar on the sampling lattice.

    X and P are passed with shape (..., N).
    """
    half_positions, momenta = phase_space_lattice(space)
    n = space.n
    grids = np.meshgrid(*([half_positions] * n + [momenta] * n), indexing="ij")
    X = np.stack(grids[:n], axis=-1)
    P = np.stack(grids[n:], axis=-1)
    return SampledSymbol(np.asarray(fn(X, P), dtype=complex))


def weyl_quantize(space, symbol, hermitian=True):
    """Midpoint-rule quantization of a symbol on the particle grid.

    symbol is a SampledSymbol or a callable fn(X, P). The matrix element
    between grid configurations x and y is the DFT phase times the symbol at
    the per-axis circle midpoints; x-only and p-only symbols come out exact.
    """
    if callable(symbol):
        symbol = sample_symbol(space, symbol)
    n, n_grid = space.n, space.n_grid
    mid = _midpoint_index(n_grid)                       # (n_x, n_x) half-step indices
    # DFT phases exp(i p (x - y) / eps) = exp(2 pi i m (ix - iy) / n_x)
    m_idx = np.fft.fftfreq(n_grid, d=1.0 / n_grid).astype(int)
    ix = np.arange(n_grid)
    phase = np.exp(2j * np.pi * np.multiply.outer(m_idx, ix[:, None] - ix[None, :]) / n_grid)
    vals = symbol.values
    if n == 1:
        sym_mid = vals[mid]                             # (x, y, m)
        mat = np.einsum("abm,mab->ab", sym_mid, phase, optimize=True) / n_grid
    elif n == 2:
        # indices: a,b = x1,y1  c,d = x2,y2  m,n = momentum slots
        sym_mid = vals[mid[:, :, None, None], mid[None, None, :, :]]   # (a,b,c,d,m,n)
        mat = np.einsum("abcdmn,mab,ncd->acbd", sym_mid, phase, phase, optimize=True)
        mat = mat.reshape(n_grid ** 2, n_grid ** 2) / n_grid ** 2
    else:
        raise ValueError("Weyl quantization supports N <= 2 axis coordinates")
    if space.spin:
        mat = np.kron(mat, np.eye(space.dim_spin))
    if hermitian:
        mat = 0.5 * (mat + mat.conj().T)
    return mat


# ---------------------------------------------------------------------------
# transported symbols from flow bundles
# ---------------------------------------------------------------------------

def flow_bundle(space, grid, sample_times, steps_per_unit=400):
    """Flow launched from every (half-step x, momentum-lattice p) node."""
    half_positions, momenta = phase_space_lattice(space)
    n = space.n
    grids = np.meshgrid(*([half_positions] * n + [momenta] * n), indexing="ij")
    X0 = np.stack(grids[:n], axis=-1)
    P0 = np.stack(grids[n:], axis=-1)
    return integrate_flow(space, grid, X0, P0, sample_times, steps_per_unit)


def transported_symbol(space, bundle, index, reducer):
    """SampledSymbol of a reduction of the bundle at one sample time."""
    return SampledSymbol(np.asarray(reducer(bundle, index), dtype=complex))


def egorov_residual(space, grid, symbol_fn, s, epsilon, h_particle,
                    steps_per_unit=400):
    """Norm of exp(i s h/eps) Op(a) exp(-i s h/eps) - Op(a o flow_s).

    h_particle is the (dense) particle Hamiltonian generating the quantum
    side. Warns through FlowError when the transported momenta leave the
    sampled lattice band.
    """
    from . import dynamics as _dyn
    from . import hamiltonians as _ham

    op_a = weyl_quantize(space, symbol_fn)
    if s == 0.0:
        return 0.0
    spec = _ham.diagonalize(_ham.hermitize(h_particle))
    u = spec.propagator(-s, epsilon)         # exp(+i s h / eps)
    left = u @ op_a @ u.conj().T

    bundle = flow_bundle(space, grid, np.array([0.0, s]), steps_per_unit)
    x_s = bundle.positions[-1]
    p_s = bundle.momenta[-1]
    values = np.asarray(symbol_fn(x_s % space.box, p_s), dtype=complex)
    # flag band exits only where the transported symbol actually lives
    band = float(np.max(np.abs(space.momenta))) * (1.0 + 1e-9)
    exited = np.max(np.abs(p_s), axis=-1) > band
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    if scale > 0.0 and float(np.max(np.abs(values[exited]), initial=0.0)) > 1e-6 * scale:
        raise FlowError("classical flow left the sampled momentum band "
                        "where the symbol is supported")
    transported = SampledSymbol(values)
    right = weyl_quantize(space, transported)
    return float(_dyn.operator_norm(left - right))


# ---------------------------------------------------------------------------
# radiated one-photon state and dipole power
# ---------------------------------------------------------------------------

def _gauss_legendre_nodes(t, n_nodes):
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    return 0.5 * t * (x + 1.0), 0.5 * t * w


def check_phase_resolution(grid, t, epsilon, n_nodes, guard=np.pi / 4):
    """Refuse under-resolved oscillatory quadrature (max |k| ds / eps)."""
    ds = t / n_nodes
    worst = float(np.max(grid.k_norms)) * ds / epsilon
    if worst > guard:
        needed = int(np.ceil(float(np.max(grid.k_norms)) * t / (epsilon * guard)))
        raise FlowError(
            f"oscillatory phase step {worst:.2f} rad exceeds the guard; "
            f"use at least {needed} time nodes"
        )


def radiated_one_photon_amplitudes(space, grid, basis_grid, psi_particle, t,
                                   epsilon, sigma, h_particle, s_nodes=64,
                                   steps_per_unit=400, guard=np.pi / 4):
    """Per-mode one-photon amplitudes of the radiated piece, shape (K, dim).

    Amplitude for mode i (orthonormal occupation basis):
      sqrt(w_i) (eps/sqrt(2)) phihat_sigma(k_i) |k_i|^(-3/2) (pol_i . zhat)
      * exp(-i t h_p / eps) integral_0^t ds exp(i (s-t)|k_i|/eps) Op(G_s) psi
    with G_s the classically transported Coulomb-force symbol
    sum_j (e_j/m_j) dV/dq_j o flow_s. `basis_grid` is the mode grid carrying
    the photon modes (it may be finer than the coupling grid used for V).
    """
    from . import hamiltonians as _ham

    if t == 0.0:
        return np.zeros((len(basis_grid), space.dim), dtype=complex)
    check_phase_resolution(basis_grid, t, epsilon, s_nodes, guard)
    s_vals, s_weights = _gauss_legendre_nodes(t, s_nodes)

    bundle = flow_bundle(space, grid, s_vals, steps_per_unit)
    spec = _ham.diagonalize(_ham.hermitize(h_particle))

    # Op(G_s) psi for every quadrature node
    g_all = bundle.force_symbol(space)
    columns = np.empty((len(s_vals), space.dim), dtype=complex)
    for idx in range(len(s_vals)):
        g_s = SampledSymbol(np.asarray(g_all[idx], dtype=complex))
        columns[idx] = weyl_quantize(space, g_s) @ psi_particle

    ff = basis_grid.form_factors(sigma)
    pref = (
        np.sqrt(basis_grid.weights)
        * (epsilon / np.sqrt(2.0))
        * ff
        / basis_grid.k_norms ** 1.5
        * basis_grid.pols[:, 2]
    )
    phases = np.exp(1j * np.outer(basis_grid.k_norms, (s_vals - t)) / epsilon)  # (K, S)
    integral = (phases * s_weights[None, :]) @ columns                          # (K, dim)
    out = pref[:, None] * integral
    # free particle phase applied mode-wise
    return np.array([spec.apply_propagator(t, epsilon, row) for row in out])


def embed_one_photon(model, amplitudes):
    """Composite state from per-mode one-photon amplitude rows."""
    basis = model.basis
    state = np.zeros((model.space.dim, basis.dim), dtype=complex)
    for mode in range(basis.n_modes):
        state[:, _fock.one_photon_index(basis, mode)] = amplitudes[mode]
    return state.reshape(-1)


def radiated_state_formula(model, psi_particle, t, epsilon, sigma,
                           h_particle, s_nodes=64, steps_per_unit=400):
    """Composite one-photon radiated state on the model's Fock basis."""
    amps = radiated_one_photon_amplitudes(
        model.space, model.grid, model.grid, psi_particle, t, epsilon, sigma,
        h_particle, s_nodes, steps_per_unit,
    )
    return embed_one_photon(model, amps)


def one_photon_energy(basis_grid, amplitudes):
    """Field energy of an amplitude table (K, dim): sum_i |k_i| ||A_i||^2."""
    norms = np.sum(np.abs(amplitudes) ** 2, axis=1)
    return float(np.sum(basis_grid.k_norms * norms))


def larmor_power(space, grid, psi_particle, t, epsilon, steps_per_unit=400):
    """(eps^3 / 3 pi^2) <psi| Op(|D..(t)|^2) |psi>, the dipole radiated power."""
    if np.all(np.asarray(space.charges) == 0.0):
        return 0.0
    bundle = flow_bundle(space, grid, np.array([0.0, float(t)]), steps_per_unit)
    ddots = bundle.dipole_acceleration(space)[-1]
    op = weyl_quantize(space, SampledSymbol(np.asarray(ddots ** 2, dtype=complex)))
    expect = float(np.real(np.vdot(psi_particle, op @ psi_particle)))
    return epsilon ** 3 * LARMOR_COEFFICIENT * expect
