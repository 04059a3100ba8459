"""Operators on the composite space (particles tensor field) and the dressing.

Composite indices are (particle, fock) row-major, i.e. kron(particle_op,
fock_op). Position-dependent field operators are block structures over the
particle index: the field matrix attached to column index p is evaluated at
the axis coordinate of the relevant particle in configuration p.

Every p.Phi product is symmetrized, (p Phi + Phi p)/2. On the one-axis
reduction the per-component transversality argument that would let p and the
position-dependent field commute is unavailable, and the symmetrized ordering
restores exact (anti-)hermiticity of the coupling term and of the dressing
generator; the continuum operators coincide with either ordering.

The dressing unitary is built from the generator T (an energy-cutoff
compression of the velocity-field coupling) as (1 + eps T)(1 - eps^2 T^2)^(-1/2),
exactly unitary whenever eps ||T|| < 1.
"""

from dataclasses import dataclass, field

import numpy as np

from . import fock as _fock
from . import modes as _modes
from . import particles as _particles


class DomainError(ValueError):
    pass


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# labeled operator wrapper
# ---------------------------------------------------------------------------

@dataclass
class AssembledOperator:
    matrix: np.ndarray
    label: str
    meta: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def hermiticity_residual(self):
        scale = np.linalg.norm(self.matrix)
        if scale == 0.0:
            return 0.0
        return float(np.linalg.norm(self.matrix - self.matrix.conj().T) / scale)

    def unitarity_residual(self):
        gram = self.matrix.conj().T @ self.matrix
        return float(np.linalg.norm(gram - np.eye(self.dim)))


def hermitize(mat):
    return 0.5 * (mat + mat.conj().T)


# ---------------------------------------------------------------------------
# smooth energy cutoff
# ---------------------------------------------------------------------------

def _smooth_step(x):
    """C-infinity ramp: 0 for x <= 0, 1 for x >= 1."""
    x = np.clip(x, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        f = np.where(x > 0.0, np.exp(-1.0 / np.where(x > 0.0, x, 1.0)), 0.0)
        g = np.where(x < 1.0, np.exp(-1.0 / np.where(x < 1.0, 1.0 - x, 1.0)), 0.0)
    return f / (f + g)


@dataclass(frozen=True)
class CutoffFunction:
    """Compactly supported plateau bump on the energy axis.

    Equals 1 on |E - center| <= half_width - margin, 0 outside
    |E - center| >= half_width, with a C-infinity shoulder in between.
    The plateau is what lets prepared states satisfy chi(H) psi = psi
    exactly; the classic single-point bump cannot.
    """

    center: float
    half_width: float
    margin: float

    def __post_init__(self):
        if not 0.0 < self.margin < self.half_width:
            raise UsageError("need 0 < margin < half_width")

    def __call__(self, energies):
        e = np.asarray(energies, dtype=float)
        u = np.abs(e - self.center)
        plateau = self.half_width - self.margin
        out = _smooth_step((self.half_width - u) / self.margin)
        out = np.where(u <= plateau, 1.0, out)
        return out if out.ndim else float(out)

    def inner(self, shrink=None):
        """A cutoff supported inside this one's plateau (chi * inner = inner)."""
        shrink = self.margin if shrink is None else shrink
        width = self.half_width - self.margin
        if width <= shrink:
            raise UsageError("no room inside the plateau for an inner cutoff")
        return CutoffFunction(self.center, width, shrink)

    def outer(self, grow):
        """A cutoff equal to 1 on this one's support (outer * chi = chi)."""
        return CutoffFunction(self.center, self.half_width + grow, 0.5 * grow)

    @property
    def support_max(self):
        return self.center + self.half_width


# ---------------------------------------------------------------------------
# composite assembly
# ---------------------------------------------------------------------------

class CompositeModel:
    """Assembly cache for a particle space tensor a Fock basis.

    Holds per-grid-point field matrices so that Hamiltonian terms, dressing
    generators and off-diagonal couplings can be built without recomputing
    the smeared ladder operators.

    The axial phase frequency of every coupling function is snapped to the
    particle momentum lattice (exp(-i K_z q) with K_z the nearest multiple
    of 2 pi / box). A non-lattice frequency is a fractional Fourier shift
    whose slow tails put spurious weight at the top of the kinetic band and
    destroy the uniform domain bounds the dressing relies on; snapping makes
    photon momentum transfer exactly resolvable by the grid while |k| keeps
    its quadrature value in weights, frequencies and polarizations.
    """

    def __init__(self, space, basis, snap_phases=True):
        if basis.grid.k_vecs.shape[0] != len(basis.grid):
            raise UsageError("broken grid")
        self.space = space
        self.basis = basis
        self.grid = basis.grid
        self.dim = space.dim * basis.dim
        self.snap_phases = snap_phases
        self._phi_vz = {}        # sigma -> list over grid points of Phi(v_z)
        self._phi_dress = {}     # (sigma, L) -> list of Phi(i v_sigma/|k|)_z, L-sandwiched
        self._normal_a2 = {}     # sigma -> list of :A(x)^2: blocks
        self._phi_curl = {}      # sigma -> list of 3-tuples Phi((i k x v)_alpha)
        self._momentum_full = None
        self._q_index = None

    @property
    def phase_frequencies(self):
        """Axial coupling frequencies, lattice-snapped when enabled."""
        kz = self.grid.k_vecs[:, 2]
        if not self.snap_phases:
            return kz
        unit = 2.0 * np.pi / self.space.box
        return unit * np.round(kz / unit)

    def coupling_components(self, q, variant, sigma):
        """Coupling functions at axial position q with snapped phases."""
        grid = self.grid
        phase = np.exp(-1j * self.phase_frequencies * q)
        ff = grid.form_factors(sigma)
        base = grid.pols * (ff / np.sqrt(grid.k_norms))[:, None] * phase[:, None]
        if variant == "v":
            comps = base
        elif variant == "v_over_omega":
            comps = base / grid.k_norms[:, None]
        elif variant == "curl_v":
            comps = 1j * np.cross(grid.k_vecs, base)
        else:
            raise UsageError(f"unknown coupling variant {variant!r}")
        return tuple(
            _modes.ModeFunction(np.ascontiguousarray(comps[:, a]), grid) for a in range(3)
        )

    # -- particle-side helpers ------------------------------------------------

    @property
    def q_index(self):
        """Grid-point index of each particle per flattened particle state."""
        if self._q_index is None:
            space = self.space
            grid_idx = np.arange(space.dim_grid)
            per_particle = []
            for j in range(space.n):
                shape = [1] * space.n
                shape[j] = space.n_grid
                coords = np.arange(space.n_grid).reshape(shape)
                coords = np.broadcast_to(coords, (space.n_grid,) * space.n).reshape(-1)
                if space.spin:
                    coords = np.repeat(coords, space.dim_spin)
                per_particle.append(coords)
            self._q_index = per_particle
        return self._q_index

    def momentum(self, j):
        if self._momentum_full is None:
            self._momentum_full = [
                _particles.momentum_operator(self.space, jj) for jj in range(self.space.n)
            ]
        return self._momentum_full[j]

    # -- cached field blocks ---------------------------------------------------

    def _field_blocks(self, maker, cache, key):
        if key not in cache:
            cache[key] = [maker(q) for q in self.space.positions]
        return cache[key]

    def phi_vz_blocks(self, sigma):
        def make(q):
            comps = self.coupling_components(q, "v", sigma)
            return _fock.segal_field(self.basis, comps[2])
        return self._field_blocks(make, self._phi_vz, round(float(sigma), 12))

    def phi_dress_blocks(self, sigma, n_sandwich=None):
        """z-component of Phi(i v_sigma / |k|), photon-number sandwiched."""
        if max(float(sigma), self.grid.sigma_ir) <= 0.0:
            raise DomainError("dressing requires a positive infrared cutoff")
        lsand = self.basis.n_photon_max if n_sandwich is None else n_sandwich

        def make(q):
            comps = self.coupling_components(q, "v_over_omega", sigma)
            fz = _modes.ModeFunction(1j * comps[2].values, self.grid)
            phi = _fock.segal_field(self.basis, fz)
            if lsand < self.basis.n_photon_max:
                qle = _fock.number_leq_projector(self.basis, lsand)
                phi = qle[:, None] * phi * qle[None, :]
            return phi
        return self._field_blocks(make, self._phi_dress, (round(float(sigma), 12), lsand))

    def normal_ordered_a2_blocks(self, sigma):
        """:A(x)^2: summed over Cartesian components, per grid point."""
        def make(q):
            comps = self.coupling_components(q, "v", sigma)
            out = np.zeros((self.basis.dim, self.basis.dim), dtype=complex)
            for comp in comps:
                a = _fock.annihilator(self.basis, comp)
                ad = a.conj().T
                out += 0.5 * (a @ a + ad @ ad + 2.0 * (ad @ a))
            return out
        return self._field_blocks(make, self._normal_a2, round(float(sigma), 12))

    def phi_curl_blocks(self, sigma):
        def make(q):
            comps = self.coupling_components(q, "curl_v", sigma)
            return tuple(_fock.segal_field(self.basis, c) for c in comps)
        return self._field_blocks(make, self._phi_curl, round(float(sigma), 12))

    # -- composite products ----------------------------------------------------

    def particle_times_blocks(self, p_mat, blocks, j):
        """Composite matrix of (particle operator) x (field block at column q_j)."""
        P, F = self.space.dim, self.basis.dim
        out = np.zeros((P, F, P, F), dtype=complex)
        qidx = self.q_index[j]
        for iq in range(self.space.n_grid):
            mask = qidx == iq
            out[:, :, mask, :] = p_mat[:, mask][:, None, :, None] * blocks[iq][None, :, None, :]
        return out.reshape(self.dim, self.dim)

    def blockdiag_field(self, diag_particle, blocks, j):
        """Composite block-diagonal: diag_particle[p] * block at q_j(p)."""
        P, F = self.space.dim, self.basis.dim
        out = np.zeros((P, F, P, F), dtype=complex)
        qidx = self.q_index[j]
        for p in range(P):
            out[p, :, p, :] = diag_particle[p] * blocks[qidx[p]]
        return out.reshape(self.dim, self.dim)

    def kron_particle(self, p_mat):
        return np.kron(p_mat, np.eye(self.basis.dim))

    def kron_field_diag(self, fock_diag):
        return np.kron(np.eye(self.space.dim), np.diag(fock_diag))

    def embed_field_diag(self, fock_diag):
        """Diagonal vector of 1 x diag(fock_diag) on the composite space."""
        return np.tile(fock_diag, self.space.dim)

    def number_projector_diag(self, m):
        return self.embed_field_diag(_fock.number_projector(self.basis, m))


# ---------------------------------------------------------------------------
# Hamiltonian terms
# ---------------------------------------------------------------------------

def assemble_h(model, term, epsilon, sigma=0.0, include_spin=None):
    """One coefficient of the slow-particle expansion, or the full operator.

    term "h0":   kinetic + smeared Coulomb + field energy
    term "h1":   minus sum_j (e_j/m_j) sym(p_j, Phi(v_xj))_z
    term "h2":   normal-ordered quadratic coupling (+ spin-field term when
                 the space carries spin)
    term "full": h0 + eps h1 + eps^2 h2
    """
    space, basis = model.space, model.basis
    include_spin = space.spin if include_spin is None else include_spin
    if term == "h0":
        hp = _particles.particle_hamiltonian(space, model.grid, sigma)
        mat = model.kron_particle(hp) + np.diag(
            model.embed_field_diag(_fock.field_hamiltonian(basis)).astype(complex)
        )
    elif term == "h1":
        blocks = model.phi_vz_blocks(sigma)
        mat = np.zeros((model.dim, model.dim), dtype=complex)
        for j in range(space.n):
            pb = model.particle_times_blocks(model.momentum(j), blocks, j)
            mat -= (space.charges[j] / space.masses[j]) * 0.5 * (pb + pb.conj().T)
    elif term == "h2":
        a2 = model.normal_ordered_a2_blocks(sigma)
        mat = np.zeros((model.dim, model.dim), dtype=complex)
        ones = np.ones(space.dim)
        for j in range(space.n):
            mat += (space.charges[j] ** 2 / (2.0 * space.masses[j])) * model.blockdiag_field(
                ones, a2, j
            )
        if include_spin:
            if not space.spin:
                raise UsageError("spin term requested on a spinless space")
            curl = model.phi_curl_blocks(sigma)
            for j in range(space.n):
                sx, sy, sz = _particles.spin_operators(space, j)
                for s_mat, alpha in zip((sx, sy, sz), range(3)):
                    blocks = [c[alpha] for c in curl]
                    pb = model.particle_times_blocks(s_mat, blocks, j)
                    mat += (space.charges[j] / (2.0 * space.masses[j])) * 0.5 * (
                        pb + pb.conj().T
                    )
    elif term == "full":
        mat = (
            assemble_h(model, "h0", epsilon, sigma).matrix
            + epsilon * assemble_h(model, "h1", epsilon, sigma).matrix
            + epsilon ** 2 * assemble_h(model, "h2", epsilon, sigma, include_spin).matrix
        )
    else:
        raise UsageError(f"unknown term {term!r}")
    mat = hermitize(mat)
    return AssembledOperator(
        mat,
        label=f"H[{term}]",
        meta={"epsilon": epsilon, "sigma": sigma, "L": basis.n_photon_max, "term": term},
    )


# ---------------------------------------------------------------------------
# spectral calculus
# ---------------------------------------------------------------------------

@dataclass
class SpectralData:
    energies: np.ndarray
    vectors: np.ndarray

    def function(self, fn):
        vals = fn(self.energies)
        return (self.vectors * vals[None, :]) @ self.vectors.conj().T

    def propagator(self, t, epsilon):
        phases = np.exp(-1j * t * self.energies / epsilon)
        return (self.vectors * phases[None, :]) @ self.vectors.conj().T

    def apply_function(self, fn, vec):
        coeff = self.vectors.conj().T @ vec
        return self.vectors @ (fn(self.energies) * coeff)

    def apply_propagator(self, t, epsilon, vec):
        coeff = self.vectors.conj().T @ vec
        return self.vectors @ (np.exp(-1j * t * self.energies / epsilon) * coeff)


def diagonalize(op):
    mat = op.matrix if isinstance(op, AssembledOperator) else op
    if np.linalg.norm(mat - mat.conj().T) > 1e-9 * max(np.linalg.norm(mat), 1e-300):
        raise UsageError("spectral calculus needs a Hermitian operator")
    w, v = np.linalg.eigh(mat)
    return SpectralData(w, v)


def spectral_function(op, chi, spectral=None):
    """chi(H) by exact eigendecomposition."""
    spectral = diagonalize(op) if spectral is None else spectral
    mat = spectral.function(chi)
    label = getattr(op, "label", "H")
    return AssembledOperator(hermitize(mat), label=f"chi({label})")


# ---------------------------------------------------------------------------
# dressing transformation
# ---------------------------------------------------------------------------

def velocity_coupling_generator(model, sigma, n_sandwich=None):
    """U1 = i sum_j (e_j/m_j) sym(Phi_dress_j, p_j); exactly anti-Hermitian."""
    blocks = model.phi_dress_blocks(sigma, n_sandwich)
    space = model.space
    mat = np.zeros((model.dim, model.dim), dtype=complex)
    for j in range(space.n):
        pb = model.particle_times_blocks(model.momentum(j), blocks, j)
        mat += (space.charges[j] / space.masses[j]) * 0.5 * (pb + pb.conj().T)
    return 1j * mat


def dressing_generator(model, chi_matrix, sigma, n_sandwich=None):
    """T = chi(H) U1 + (1 - chi(H)) U1 chi(H), antisymmetrized.

    Returns (T, correction) where correction is the norm of the discarded
    symmetric part relative to ||T|| (expected at round-off level).
    """
    u1 = velocity_coupling_generator(model, sigma, n_sandwich)
    a = u1 @ chi_matrix
    t = chi_matrix @ u1 + a - chi_matrix @ a
    anti = 0.5 * (t - t.conj().T)
    scale = max(np.linalg.norm(t), 1e-300)
    correction = float(np.linalg.norm(t - anti) / scale)
    return AssembledOperator(
        anti, label="T", meta={"sigma": sigma, "antisym_correction": correction}
    ), correction


def _double_factorial_coeffs(n_terms):
    coeffs = [1.0]
    for j in range(1, n_terms):
        coeffs.append(coeffs[-1] * (2 * j - 1) / (2 * j))
    return coeffs


def dressing_unitary(t_op, epsilon, method="eig", n_terms=12):
    """Exact unitarization (1 + eps T)(1 - eps^2 T^2)^(-1/2).

    method "eig" inverts the square root through the eigendecomposition of
    the Hermitian positive matrix 1 - eps^2 T^2; method "series" sums the
    binomial series as a cross-check. Requires eps ||T|| < 1.
    """
    t = t_op.matrix if isinstance(t_op, AssembledOperator) else t_op
    dim = t.shape[0]
    if epsilon == 0.0:
        return AssembledOperator(np.eye(dim, dtype=complex), label="U", meta={"epsilon": 0.0})
    t2 = t @ t
    w_mat = np.eye(dim) - epsilon ** 2 * t2
    if method == "eig":
        spec = diagonalize(hermitize(w_mat))
        # for anti-Hermitian T the spectrum of 1 - eps^2 T^2 is 1 + (eps theta)^2
        radius = float(np.sqrt(max(spec.energies.max() - 1.0, 0.0)))
        if radius >= 1.0 or spec.energies.min() <= 0.0:
            raise DomainError(
                f"eps ||T|| = {radius:.3f} >= 1; the square-root series diverges"
            )
        inv_sqrt = spec.function(lambda e: e ** -0.5)
    elif method == "series":
        x = epsilon ** 2 * t2
        inv_sqrt = np.zeros_like(w_mat)
        power = np.eye(dim, dtype=complex)
        for c in _double_factorial_coeffs(n_terms):
            inv_sqrt = inv_sqrt + c * power
            power = power @ x
    else:
        raise UsageError(f"unknown method {method!r}")
    u = (np.eye(dim) + epsilon * t) @ inv_sqrt
    out = AssembledOperator(u, label="U", meta={"epsilon": epsilon, "method": method})
    return out


def dressed_hamiltonian(u_op, h_op):
    """Unitary transform U H U* of the Hamiltonian."""
    u = u_op.matrix
    mat = hermitize(u @ h_op.matrix @ u.conj().T)
    return AssembledOperator(mat, label="H_dressed", meta=dict(h_op.meta))


def commutator(a, b):
    return a @ b - b @ a


def expansion_coefficients(t_op, h0, h1, h2):
    """Order-by-order coefficients of U H U* in eps.

    c0 = h0, c1 = h1 + [T, h0], c2 = h2 + [T, h1] + 1/2 [T, [T, h0]].
    These are the exact Taylor coefficients of the unitarized dressing, so
    the remainder of the truncated expansion scales as eps^3.
    """
    t = t_op.matrix if isinstance(t_op, AssembledOperator) else t_op
    c1 = h1.matrix + commutator(t, h0.matrix)
    tc0 = commutator(t, h0.matrix)
    c2 = h2.matrix + commutator(t, h1.matrix) + 0.5 * commutator(t, tc0)
    return (
        AssembledOperator(hermitize(h0.matrix), label="h0_dressed"),
        AssembledOperator(hermitize(c1), label="h1_dressed"),
        AssembledOperator(hermitize(c2), label="h2_dressed"),
    )


def dressed_projector(u_op, model, m):
    """P_m = U* (1 x Q_m) U, the dressed m-photon projector."""
    if m > model.basis.n_photon_max:
        raise DomainError(f"photon number {m} exceeds truncation")
    u = u_op.matrix
    qdiag = model.number_projector_diag(m)
    mat = hermitize((u.conj().T * qdiag[None, :]) @ u)
    return AssembledOperator(mat, label=f"P[{m}]", meta={"m": m})


# ---------------------------------------------------------------------------
# effective (particle-only) Hamiltonians
# ---------------------------------------------------------------------------

def darwin_term(space, grid, sigma=None, snap_phases=True):
    """Velocity-velocity pair interaction with the transverse projector.

    Ordering follows the printed formula, exp(i k q_j) p_j (1 - kk)_zz p_l
    exp(-i k q_l); hermiticity is restored by the (A + A*)/2 average, the
    discrete stand-in for the k <-> -k symmetric integral. The transverse
    projector enters through the per-mode polarization components, whose
    helicity sum is exactly (1 - kk)_zz. Phase frequencies are snapped to
    the momentum lattice like every composite coupling.
    """
    ff2 = grid.form_factors(sigma) ** 2
    kz = grid.k_vecs[:, 2]
    if snap_phases:
        unit = 2.0 * np.pi / space.box
        kz = unit * np.round(kz / unit)
    coef = grid.weights * ff2 * grid.pols[:, 2] ** 2 / (2.0 * grid.k_norms ** 2)
    live = coef != 0.0
    coef, kz = coef[live], kz[live]
    p_ops = [_particles.momentum_operator(space, j) for j in range(space.n)]
    qs = [space.grid_coordinates(j) for j in range(space.n)]
    if space.spin:
        qs = [np.repeat(q, space.dim_spin) for q in qs]
    out = np.zeros((space.dim, space.dim), dtype=complex)
    for j in range(space.n):
        for l in range(space.n):
            pjpl = p_ops[j] @ p_ops[l]
            phases_j = np.exp(1j * np.outer(kz, qs[j]))   # (K, dim)
            phases_l = np.exp(-1j * np.outer(kz, qs[l]))
            weighted = np.einsum("k,kp,pq,kq->pq", coef, phases_j, pjpl, phases_l, optimize=True)
            out -= (space.charges[j] * space.charges[l] / (space.masses[j] * space.masses[l])) * weighted
    return hermitize(out)


def spin_contact_term(space, grid, sigma=None):
    """Contact-type sigma_j . sigma_l pair term of the weak-coupling limit.

    The position dependence is a diagonal kernel, so each (j, l) summand is
    the kernel diagonal times the spin dot product on the full space.
    """
    if not space.spin:
        raise UsageError("spin contact term requires a spin-carrying space")
    qs = [space.grid_coordinates(j) for j in range(space.n)]
    out = np.zeros((space.dim, space.dim), dtype=complex)
    for j in range(space.n):
        for l in range(space.n):
            sep = space.minimal_image(qs[j] - qs[l])
            kernel = np.repeat(_modes.contact_kernel(grid, sep, sigma), space.dim_spin)
            coupling = -space.charges[j] * space.charges[l] / (
                12.0 * space.masses[j] * space.masses[l]
            )
            sj = _particles.spin_operators(space, j)
            sl = _particles.spin_operators(space, l)
            dot = sum(sj[a] @ sl[a] for a in range(3))
            out += coupling * (kernel[:, None] * dot)
    return hermitize(out)


def spin_contact_polarized(space, grid, sigma=None):
    """Spin contact term compressed to the fully polarized spin sector.

    sigma_j . sigma_l acts as 1 for j != l (and 3 for j = l) on polarized
    states, leaving a scalar pair potential on the grid diagonal. Used to
    inject the would-be spin correction into spinless comparisons.
    """
    qs = [space.grid_coordinates(j) for j in range(space.n)]
    out = np.zeros(space.dim_grid)
    for j in range(space.n):
        for l in range(space.n):
            sep = space.minimal_image(qs[j] - qs[l])
            factor = 3.0 if j == l else 1.0
            out -= (
                factor
                * space.charges[j]
                * space.charges[l]
                / (12.0 * space.masses[j] * space.masses[l])
            ) * _modes.contact_kernel(grid, sep, sigma)
    return out


def effective_hamiltonian(space, grid, kind, epsilon=None, c=None, include_darwin=True):
    """Particle-only effective Hamiltonian.

    kind "darwin_eps":  kinetic + Coulomb + eps^2 V_darwin (slow-particle limit;
                        no spin-dependent term appears at this order)
    kind "c_infinity":  kinetic + Coulomb + c^-2 (V_darwin + V_spin)
                        (weak-coupling limit; requires a spin space)
    """
    hp = _particles.particle_hamiltonian(space, grid)
    if kind == "darwin_eps":
        if epsilon is None:
            raise UsageError("darwin_eps needs epsilon")
        mat = hp.astype(complex)
        if include_darwin and epsilon != 0.0:
            mat = mat + epsilon ** 2 * darwin_term(space, grid)
        label = "H_eff[darwin]"
    elif kind == "c_infinity":
        if c is None:
            raise UsageError("c_infinity needs c")
        mat = hp + c ** -2 * (darwin_term(space, grid) + spin_contact_term(space, grid))
        label = "H_eff[c_infinity]"
    else:
        raise UsageError(f"unknown effective kind {kind!r}")
    return AssembledOperator(hermitize(mat), label=label, meta={"kind": kind})


def offdiagonal_hamiltonian(model, sigma):
    """Photon-number off-diagonal coupling through the Coulomb force.

    sum_j (e_j/m_j) Phi_dress_j . (dV/dq_j); block diagonal in position,
    linear in ladder operators, so it maps photon number m to m +/- 1
    exactly.
    """
    blocks = model.phi_dress_blocks(sigma)
    space = model.space
    mat = np.zeros((model.dim, model.dim), dtype=complex)
    for j in range(space.n):
        grad = _particles.coulomb_gradient_diagonal(space, model.grid, j)
        if space.spin:
            grad = np.repeat(grad, space.dim_spin)
        mat += (space.charges[j] / space.masses[j]) * model.blockdiag_field(grad, blocks, j)
    return AssembledOperator(hermitize(mat), label="h2_offdiag", meta={"sigma": sigma})
