"""Discretized photon momentum space.

Photon modes live in R^3 x {1,2}: a wave vector k, a helicity label, and a
real transverse polarization vector. The continuum measure dk over the band
sigma < |k| <= Lambda is carried by positive quadrature weights, so that
weighted sums over modes converge to the corresponding integrals under
refinement.

Radial rule: Gauss-Legendre nodes on each panel with the r^2 measure factor
absorbed into the weights, which integrates r^2 * h(r) exactly for every
h in {1, 1/r^2} once n >= 2 (a single node falls back to the centroid rule
of the r^2 measure, keeping constants exact). Optional interior breakpoints
let infrared sweeps align exactly with panel boundaries, so dropping the
band below a cutoff removes an exactly quadratured piece of the measure.

Angular rule: directions are Gauss-Legendre nodes in cos(theta), all in the
xz-plane. Kernels that need the k <-> -k symmetrization take real parts
(cosines) instead, which is equivalent to averaging over the mirrored set.
"""

from dataclasses import dataclass, field

import numpy as np

INV_2PI_32 = (2.0 * np.pi) ** -1.5  # form-factor plateau value


class ConfigurationError(ValueError):
    """Invalid grid or cutoff parameters."""


class GridMismatchError(ValueError):
    """Mode functions defined on different grids."""


@dataclass(frozen=True)
class Mode:
    k: np.ndarray          # wave vector, shape (3,)
    helicity: int          # 1 or 2
    weight: float          # quadrature weight approximating dk
    pol: np.ndarray        # real polarization vector, shape (3,)


@dataclass(frozen=True)
class ModeGrid:
    """Immutable set of weighted photon modes with cutoffs.

    Array attributes are per-mode rows; `modes` gives the same data as
    Mode objects for callers that want them one at a time.
    """

    k_vecs: np.ndarray     # (K, 3)
    helicities: np.ndarray  # (K,) ints in {1, 2}
    weights: np.ndarray    # (K,) positive
    pols: np.ndarray       # (K, 3) real unit vectors
    lambda_uv: float
    sigma_ir: float
    k_norms: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "k_norms", np.linalg.norm(self.k_vecs, axis=1))

    def __len__(self):
        return self.k_vecs.shape[0]

    @property
    def modes(self):
        return [
            Mode(self.k_vecs[i], int(self.helicities[i]), float(self.weights[i]), self.pols[i])
            for i in range(len(self))
        ]

    def form_factors(self, sigma=None):
        """Per-mode form factor values, optionally with an extra IR window."""
        sig = self.sigma_ir if sigma is None else max(sigma, self.sigma_ir)
        return form_factor(self.k_vecs, self.lambda_uv, sig)


@dataclass(frozen=True)
class ModeFunction:
    """Complex amplitude per mode, tied to its grid."""

    values: np.ndarray
    grid: ModeGrid

    def __post_init__(self):
        if self.values.shape != (len(self.grid),):
            raise GridMismatchError(
                f"mode function has {self.values.shape} values for {len(self.grid)} modes"
            )


def form_factor(k, lambda_uv, sigma=0.0):
    """Sharp-cutoff charge form factor: (2pi)^(-3/2) on sigma < |k| <= Lambda.

    Accepts a single 3-vector, a norm, or an array of vectors/norms.
    """
    k = np.asarray(k, dtype=float)
    norms = np.linalg.norm(k, axis=-1) if k.ndim and k.shape[-1] == 3 and k.ndim >= 1 else np.abs(k)
    vals = np.where((norms > sigma) & (norms <= lambda_uv), INV_2PI_32, 0.0)
    return vals if vals.ndim else float(vals)


def polarization_basis(k):
    """Real orthonormal transverse pair for direction k (k must be nonzero).

    Gram-Schmidt against the Cartesian axis least aligned with k; smooth and
    deterministic away from the coordinate poles.
    """
    k = np.asarray(k, dtype=float)
    norm = np.linalg.norm(k)
    if norm == 0.0:
        raise ValueError("polarization basis undefined at k = 0")
    kappa = k / norm
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(kappa)))] = 1.0
    e1 = axis - np.dot(axis, kappa) * kappa
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(kappa, e1)
    return e1, e2


def _radial_rule(a, b, n):
    """Nodes/weights for the integral of r^2 h(r) dr over (a, b].

    n >= 2: Gauss-Legendre nodes with the r^2 factor absorbed into the
    weights (exact for h = 1 and h = 1/r^2). n = 1: the one-point Gauss rule
    of the r^2 measure itself (centroid node), exact on constants.
    """
    if b <= a:
        raise ConfigurationError(f"empty radial panel ({a}, {b}]")
    if n == 1:
        mass = (b ** 3 - a ** 3) / 3.0
        node = 0.25 * (b ** 4 - a ** 4) / mass
        return np.array([node]), np.array([mass])
    x, w = np.polynomial.legendre.leggauss(n)
    r = 0.5 * (b - a) * x + 0.5 * (a + b)
    return r, 0.5 * (b - a) * w * r ** 2


def build_mode_grid(lambda_uv, sigma_ir, n_radial, n_angular, radial_breaks=()):
    """Product quadrature grid over sigma < |k| <= Lambda, both helicities.

    n_radial nodes per radial panel; panels are (sigma, Lambda] split at the
    sorted `radial_breaks` that fall strictly inside. n_angular directions
    are Gauss-Legendre nodes in cos(theta) (azimuth fixed), each carrying
    its 2pi azimuthal measure. Deterministic given the inputs.
    """
    if not (0.0 <= sigma_ir < lambda_uv):
        raise ConfigurationError(f"need 0 <= sigma_ir < lambda_uv, got {sigma_ir}, {lambda_uv}")
    if n_radial < 1:
        raise ConfigurationError("n_radial must be >= 1")
    if n_angular < 2:
        raise ConfigurationError("n_angular must be >= 2")

    edges = [sigma_ir]
    for brk in sorted(radial_breaks):
        if sigma_ir < brk < lambda_uv:
            edges.append(float(brk))
    edges.append(lambda_uv)

    r_all, wr_all = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        r, w = _radial_rule(a, b, n_radial)
        r_all.append(r)
        wr_all.append(w)
    r_all = np.concatenate(r_all)
    wr_all = np.concatenate(wr_all)

    u, wu = np.polynomial.legendre.leggauss(n_angular)  # u = cos(theta)
    dirs = np.stack([np.sqrt(1.0 - u ** 2), np.zeros_like(u), u], axis=1)
    w_ang = 2.0 * np.pi * wu

    k_rows, hel_rows, w_rows, pol_rows = [], [], [], []
    for r, wr in zip(r_all, wr_all):
        for d, wa in zip(dirs, w_ang):
            kvec = r * d
            e1, e2 = polarization_basis(kvec)
            for hel, pol in ((1, e1), (2, e2)):
                k_rows.append(kvec)
                hel_rows.append(hel)
                w_rows.append(wr * wa)
                pol_rows.append(pol)

    return ModeGrid(
        k_vecs=np.array(k_rows),
        helicities=np.array(hel_rows, dtype=int),
        weights=np.array(w_rows),
        pols=np.array(pol_rows),
        lambda_uv=float(lambda_uv),
        sigma_ir=float(sigma_ir),
    )


def coupling_vector(grid, x, variant="v", sigma=None):
    """Cartesian components of the coupling function at particle position x.

    variant "v":            e(k) |k|^(-1/2) phihat(k) exp(-i k.x)
    variant "v_over_omega": the same divided by |k| (an extra factor i is
                            applied by callers at the field-operator site)
    variant "curl_v":       i k x v, componentwise
    Returns a tuple of three ModeFunction (x, y, z components). `sigma`
    windows the form factor from below without touching the mode set.
    """
    x = np.asarray(x, dtype=float)
    phase = np.exp(-1j * (grid.k_vecs @ x))
    ff = grid.form_factors(sigma)
    base = grid.pols * (ff / np.sqrt(grid.k_norms))[:, None] * phase[:, None]
    if variant == "v":
        comps = base
    elif variant == "v_over_omega":
        comps = base / grid.k_norms[:, None]
    elif variant == "curl_v":
        comps = 1j * np.cross(grid.k_vecs, base)
    else:
        raise ValueError(f"unknown coupling variant {variant!r}")
    return tuple(ModeFunction(np.ascontiguousarray(comps[:, a]), grid) for a in range(3))


def weighted_inner(f, g):
    """Quadrature L2 pairing sum_i w_i conj(f_i) g_i."""
    if f.grid is not g.grid:
        raise GridMismatchError("mode functions live on different grids")
    return complex(np.sum(f.grid.weights * np.conj(f.values) * g.values))


def norm_omega(f):
    """Sobolev-type norm (||f/sqrt|k|||^2 + ||f||^2)^(1/2) used by the bounds."""
    w = f.grid.weights
    a2 = np.abs(f.values) ** 2
    return float(np.sqrt(np.sum(w * a2 / f.grid.k_norms) + np.sum(w * a2)))


def scalar_integral(grid, per_mode, sigma=None):
    """Quadrature of a scalar function of k over the band, counted once.

    Every wave vector appears in the grid once per helicity with the same
    weight, so plain k-space integrals take half the mode sum. `per_mode`
    holds f(k_i) per mode; the optional sigma windows the band from below.
    """
    live = 1.0 if sigma is None else (grid.k_norms > max(sigma, grid.sigma_ir)).astype(float)
    return 0.5 * float(np.sum(grid.weights * per_mode * live))


def _scalar_kernel(grid, r, radial_fn, sigma):
    r = np.asarray(r, dtype=float)
    ff2 = grid.form_factors(sigma) ** 2
    coef = 0.5 * grid.weights * ff2 * radial_fn(grid.k_norms)
    vals = np.cos(np.multiply.outer(r, grid.k_vecs[:, 2])) @ coef
    return vals if vals.ndim else float(vals)


def coulomb_kernel(grid, r, sigma=None):
    """Pair kernel C(r) = integral dk |phihat|^2 cos(k_z r) / |k|^2.

    The cosine realizes the k <-> -k symmetrization of the grid; the half
    mode sum counts each wave vector once (see scalar_integral). `r` may be
    a scalar or an array of axial separations.
    """
    return _scalar_kernel(grid, r, lambda k: k ** -2.0, sigma)


def coulomb_kernel_gradient(grid, r, sigma=None):
    """d/dr of the pair kernel, analytic (no spectral differentiation)."""
    r = np.asarray(r, dtype=float)
    ff2 = grid.form_factors(sigma) ** 2
    coef = 0.5 * grid.weights * ff2 * grid.k_vecs[:, 2] / grid.k_norms ** 2
    vals = -np.sin(np.multiply.outer(r, grid.k_vecs[:, 2])) @ coef
    return vals if vals.ndim else float(vals)


def contact_kernel(grid, r, sigma=None):
    """Spin-contact kernel, integral dk |phihat|^2 cos(k_z r)."""
    return _scalar_kernel(grid, r, lambda k: np.ones_like(k), sigma)
