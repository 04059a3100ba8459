"""Propagation and the scaling experiments.

The time evolution exp(-i t H / eps) is evaluated through the exact
eigendecomposition at desk scale and through an adaptive Krylov applicator
(expm_multiply) beyond a configurable dimension. A DressingFrame bundles the
operators one (epsilon, sigma) point needs: the Hamiltonian with and without
the infrared window, their spectral data, the energy cutoff, the dressing
generator and unitary, and dressed projectors. Sweep drivers fit log-log
slopes over at least four geometrically spaced points.
"""

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from . import fock as _fock
from . import hamiltonians as _ham
from . import particles as _particles

DENSE_PROPAGATION_LIMIT = 6000


class NumericalError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------

class Propagator:
    """exp(-i t H / eps) applicator with cached spectral data when dense."""

    def __init__(self, h_matrix, epsilon, dense_limit=DENSE_PROPAGATION_LIMIT):
        self.epsilon = epsilon
        self.dim = h_matrix.shape[0]
        self.dense = self.dim <= dense_limit
        if self.dense:
            self.spectral = _ham.diagonalize(h_matrix)
            self._h = None
        else:
            self.spectral = None
            self._h = h_matrix

    def apply(self, state, t):
        if t == 0.0:
            return state.copy()
        if self.dense:
            return self.spectral.apply_propagator(t, self.epsilon, state)
        out = spla.expm_multiply(-1j * t / self.epsilon * self._h, state)
        drift = abs(np.linalg.norm(out) - np.linalg.norm(state))
        if drift > 1e-8 * max(np.linalg.norm(state), 1e-300):
            raise NumericalError(f"Krylov propagation norm drift {drift:.3e}")
        return out

    def matrix(self, t):
        if not self.dense:
            raise NumericalError("propagator matrix requested in Krylov mode")
        return self.spectral.propagator(t, self.epsilon)


def propagate(h_matrix, state, t, epsilon, dense_limit=DENSE_PROPAGATION_LIMIT):
    return Propagator(h_matrix, epsilon, dense_limit).apply(state, t)


def operator_norm(mat, seed=7, tol=1e-6, max_iter=400):
    """Largest singular value by power iteration on the explicit matrix."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(mat.shape[1]) + 1j * rng.standard_normal(mat.shape[1])
    v /= np.linalg.norm(v)
    prev = 0.0
    for _ in range(max_iter):
        w = mat @ v
        v = mat.conj().T @ w
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return 0.0
        v /= nv
        est = np.sqrt(nv)
        if abs(est - prev) <= tol * max(est, 1e-300):
            return float(est)
        prev = est
    return float(prev)


# ---------------------------------------------------------------------------
# dressing frame: everything one (epsilon, sigma) point needs
# ---------------------------------------------------------------------------

@dataclass
class DressingFrame:
    space: object
    basis: object
    epsilon: float
    sigma: float
    chi: _ham.CutoffFunction
    model: object = None
    _cache: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model is None:
            self.model = _ham.CompositeModel(self.space, self.basis)

    # -- lazily built pieces ---------------------------------------------------

    def _get(self, key, builder):
        if key not in self._cache:
            self._cache[key] = builder()
        return self._cache[key]

    @property
    def ir_window_is_trivial(self):
        """True when no grid mode falls below sigma (H^eps == H^eps,sigma)."""
        return not np.any(self.basis.grid.k_norms <= self.sigma)

    def h_term(self, term, sigma):
        key = ("h", term, round(float(sigma), 12))
        return self._get(
            key, lambda: _ham.assemble_h(self.model, term, self.epsilon, sigma)
        )

    def hamiltonian(self, sigma):
        key = ("H", round(float(sigma), 12))

        def build():
            mat = (
                self.h_term("h0", sigma).matrix
                + self.epsilon * self.h_term("h1", sigma).matrix
                + self.epsilon ** 2 * self.h_term("h2", sigma).matrix
            )
            return _ham.AssembledOperator(
                _ham.hermitize(mat),
                label="H",
                meta={"epsilon": self.epsilon, "sigma": sigma},
            )
        return self._get(key, build)

    @property
    def h_sigma(self):
        return self.hamiltonian(self.sigma)

    @property
    def h_full(self):
        if self.ir_window_is_trivial:
            return self.h_sigma
        return self.hamiltonian(0.0)

    def spectral(self, sigma):
        key = ("spec", round(float(sigma), 12))
        return self._get(key, lambda: _ham.diagonalize(self.hamiltonian(sigma)))

    @property
    def spectral_sigma(self):
        return self.spectral(self.sigma)

    @property
    def spectral_full(self):
        if self.ir_window_is_trivial:
            return self.spectral_sigma
        return self.spectral(0.0)

    def chi_matrix(self, sigma):
        key = ("chi", round(float(sigma), 12))
        return self._get(key, lambda: self.spectral(sigma).function(self.chi))

    @property
    def dressing_generator(self):
        def build():
            t_op, correction = _ham.dressing_generator(
                self.model, self.chi_matrix(self.sigma), self.sigma
            )
            t_op.meta["epsilon"] = self.epsilon
            return t_op
        return self._get("T", build)

    @property
    def dressing_unitary(self):
        return self._get(
            "U", lambda: _ham.dressing_unitary(self.dressing_generator, self.epsilon)
        )

    def dressed_projector(self, m):
        return self._get(
            ("P", m), lambda: _ham.dressed_projector(self.dressing_unitary, self.model, m)
        )

    def propagator_full(self, t):
        """Dense matrix of exp(-i t H^eps / eps)."""
        return self.spectral_full.propagator(t, self.epsilon)

    # -- states ----------------------------------------------------------------

    def embed_vacuum(self, psi_particle):
        out = np.zeros((self.space.dim, self.basis.dim), dtype=complex)
        out[:, 0] = psi_particle
        return out.reshape(-1)

    def prepare_dressed_state(self, psi_particle, m=0):
        """Dressed m-photon state built from a particle wavepacket.

        The packet (tensor vacuum) is compressed by an inner energy cutoff,
        then projected on the dressed m-photon subspace; chi(H) acts as the
        identity on the result by construction of the plateau.
        """
        chi_inner = self.chi.inner()
        base = self.embed_vacuum(psi_particle)
        if m > 0:
            occ = np.zeros((self.space.dim, self.basis.dim), dtype=complex)
            block = self.basis.block_slices[m]
            occ[:, block.start] = psi_particle
            base = occ.reshape(-1)
        state = self.spectral_full.apply_function(chi_inner, base)
        state = self.dressed_projector(m).matrix @ state
        norm = np.linalg.norm(state)
        if norm < 1e-12:
            raise NumericalError("dressed-state preparation annihilated the packet")
        return state / norm

    def free_cache(self, keep=()):
        self._cache = {k: v for k, v in self._cache.items() if k in keep}


# ---------------------------------------------------------------------------
# experiment primitives
# ---------------------------------------------------------------------------

def invariance_norm(frame, m, t, seed=7):
    """Operator norm of [exp(-i t H/eps), P_m] chi(H) on the full dynamics."""
    if t == 0.0:
        return 0.0
    u_t = frame.propagator_full(t)
    p_m = frame.dressed_projector(m).matrix
    chi_mat = (
        frame.chi_matrix(frame.sigma)
        if frame.ir_window_is_trivial
        else frame.chi_matrix(0.0)
    )
    comm = u_t @ p_m - p_m @ u_t
    return operator_norm(comm @ chi_mat, seed=seed)


def radiated_state_direct(frame, psi_composite, t):
    """(1 - P_0) exp(-i t H/eps) P_0 chi(H) psi, evaluated exactly."""
    p0 = frame.dressed_projector(0).matrix
    chi_psi = frame.spectral_full.apply_function(frame.chi, psi_composite)
    inside = p0 @ chi_psi
    evolved = frame.spectral_full.apply_propagator(t, frame.epsilon, inside)
    return evolved - p0 @ evolved


def radiated_energy(model, state):
    """Field energy content <state| 1 x H_f |state>."""
    diag = model.embed_field_diag(_fock.field_hamiltonian(model.basis))
    return float(np.real(np.sum(diag * np.abs(state) ** 2)))


def radiated_power_series(energies, times):
    """Centered finite differences of E(t) on a uniform t grid."""
    energies = np.asarray(energies, dtype=float)
    times = np.asarray(times, dtype=float)
    dt = times[1] - times[0]
    power = np.gradient(energies, dt)
    return power


def photon_content(model, state):
    diag = model.embed_field_diag(model.basis.total_numbers().astype(float))
    return float(np.real(np.sum(diag * np.abs(state) ** 2)))


def partial_trace_field(omega, dim_particle, dim_field):
    """Trace over the field factor; accepts a state vector or density matrix."""
    if omega.ndim == 1:
        psi = omega.reshape(dim_particle, dim_field)
        return psi @ psi.conj().T
    omega4 = omega.reshape(dim_particle, dim_field, dim_particle, dim_field)
    return np.einsum("pfqf->pq", omega4)


def effective_compare(frame, s_particle, omega, t, h_eff_particle):
    """Particle-observable trace under the full and the effective dynamics.

    Returns (trace_full, trace_eff, diff). `omega` may be a composite state
    vector or a composite density matrix; the effective evolution acts on
    its field-traced particle state with exp(-i t H_eff / eps).
    """
    dim_p, dim_f = frame.space.dim, frame.basis.dim
    if omega.ndim == 1:
        evolved = frame.spectral_full.apply_propagator(t, frame.epsilon, omega)
        rho_t = partial_trace_field(evolved, dim_p, dim_f)
    else:
        u_t = frame.propagator_full(t)
        rho_t = partial_trace_field(u_t @ omega @ u_t.conj().T, dim_p, dim_f)
    trace_full = float(np.real(np.trace(s_particle @ rho_t)))

    rho_p = partial_trace_field(omega, dim_p, dim_f)
    spec_eff = _ham.diagonalize(_ham.hermitize(h_eff_particle))
    u_eff = spec_eff.propagator(t, frame.epsilon)
    rho_eff = u_eff @ rho_p @ u_eff.conj().T
    trace_eff = float(np.real(np.trace(s_particle @ rho_eff)))
    return trace_full, trace_eff, trace_full - trace_eff


def spectral_support(state, spectral, threshold):
    """Probability mass of the state on eigenvalues above the threshold."""
    coeff = spectral.vectors.conj().T @ state
    total = float(np.sum(np.abs(coeff) ** 2))
    if total == 0.0:
        return 0.0
    mask = spectral.energies > threshold
    return float(np.sum(np.abs(coeff[mask]) ** 2) / total)


def energy_support_bound(chi, e_infinity, lambda_uv):
    """Threshold below which annihilated low-photon states stay supported.

    c_xi = 2 d_chi + E_inf with d_chi = 2 c_chi + E_inf + min(c_chi, Lambda),
    c_chi the top of the cutoff's support.
    """
    c_chi = abs(chi.support_max)
    d_chi = 2.0 * c_chi + e_infinity + min(c_chi, lambda_uv)
    return 2.0 * d_chi + e_infinity


# ---------------------------------------------------------------------------
# sweeps and slope fits
# ---------------------------------------------------------------------------

def fit_loglog_slope(values, norms):
    """Least-squares slope of log(norm) against log(value)."""
    values = np.asarray(values, dtype=float)
    norms = np.asarray(norms, dtype=float)
    if len(values) < 4:
        raise ValueError("slope fits need at least four points")
    if np.any(norms <= 0.0):
        raise ValueError("slope fits need positive data")
    x = np.log(values)
    y = np.log(norms)
    coeffs, residuals, *_ = np.polyfit(x, y, 1, full=True)
    rms = float(np.sqrt(residuals[0] / len(x))) if len(residuals) else 0.0
    return float(coeffs[0]), float(coeffs[1]), rms


@dataclass
class SweepResult:
    name: str
    param_name: str
    values: list
    rows: list                 # one dict per point
    slope: float = float("nan")
    intercept: float = float("nan")
    residual_rms: float = float("nan")
    runtime_s: float = 0.0
    errors: list = field(default_factory=list)

    def column(self, key):
        return np.array([row[key] for row in self.rows])


def run_sweep(name, param_name, values, point_fn, fit_key=None):
    """Run point_fn per parameter value, collect rows, fit the slope.

    point_fn returns a dict of measured columns; failures are recorded and
    the sweep continues (partial result with an error record).
    """
    rows, errors = [], []
    t0 = time.perf_counter()
    for value in values:
        t_point = time.perf_counter()
        try:
            row = dict(point_fn(value))
        except Exception as exc:  # noqa: BLE001 - error record per spec
            errors.append({param_name: value, "error": repr(exc)})
            continue
        row[param_name] = value
        row["runtime_s"] = time.perf_counter() - t_point
        rows.append(row)
    result = SweepResult(
        name=name,
        param_name=param_name,
        values=list(values),
        rows=rows,
        runtime_s=time.perf_counter() - t0,
        errors=errors,
    )
    if fit_key is not None and len(rows) >= 4:
        slope, intercept, rms = fit_loglog_slope(
            [row[param_name] for row in rows], [row[fit_key] for row in rows]
        )
        result.slope, result.intercept, result.residual_rms = slope, intercept, rms
    return result
