"""Acceptance experiments: one callable per criterion, shared by the CLI
check-all subcommand and the pytest acceptance module.

Each criterion returns a CriterionResult with pass/fail, the measured
numbers, and CSV-ready rows. Frames are cached per criterion family so
sweeps share eigendecompositions. Windows and tolerances are pinned here;
two criteria contain clauses that desk-scale analysis shows unattainable
as stated (the infrared sweep window and the dipole-power constant match);
they are measured faithfully and report their honest outcome, with the
diagnostic columns that document the discrepancy.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import dynamics as dyn
from . import fock as _fock
from . import hamiltonians as ham
from . import modes as _modes
from . import particles as _particles
from . import semiclassics as sc


@dataclass
class CriterionResult:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    runtime_s: float = 0.0

    def summary(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.one_line_detail()}"

    def one_line_detail(self):
        parts = []
        for key, value in self.details.items():
            if isinstance(value, float):
                parts.append(f"{key}={value:.4g}")
            else:
                parts.append(f"{key}={value}")
        return " ".join(parts)


def _timed(fn):
    def wrapper(config):
        t0 = time.perf_counter()
        result = fn(config)
        result.runtime_s = time.perf_counter() - t0
        return result
    return wrapper


# ---------------------------------------------------------------------------
# shared builders
# ---------------------------------------------------------------------------

def _compact_grid():
    return _modes.build_mode_grid(1.0, 0.0, 2, 2)


def _chi_main():
    return ham.CutoffFunction(center=0.3, half_width=0.5, margin=0.2)


def _single_particle(eps, n_x, box, charge):
    return _particles.ParticleSpace(
        n=1, n_grid=n_x, box=box, masses=(1.0,), charges=(charge,), epsilon=eps
    )


def _pair_space(eps, charges, n_x=8, box=4.0):
    return _particles.ParticleSpace(
        n=2, n_grid=n_x, box=box, masses=(1.0, 1.0), charges=charges, epsilon=eps
    )


EPS_SWEEP = (0.4, 0.28, 0.2, 0.14, 0.1)
SIGMA_SWEEP = (0.1, 0.03, 0.01, 0.003)


# ---------------------------------------------------------------------------
# criterion 1: algebra suite
# ---------------------------------------------------------------------------

@_timed
def criterion_algebra(config):
    grid = _compact_grid()
    basis = _fock.enumerate_basis(grid, 2)
    rng = np.random.default_rng(config["seed"])
    k = len(grid)
    f = _modes.ModeFunction(rng.standard_normal(k) + 1j * rng.standard_normal(k), grid)
    g = _modes.ModeFunction(rng.standard_normal(k) + 1j * rng.standard_normal(k), grid)

    a_f = _fock.annihilator(basis, f)
    c_g = _fock.creator(basis, g)
    qle = _fock.number_leq_projector(basis, basis.n_photon_max - 1)
    ccr = qle[:, None] * (
        a_f @ c_g - c_g @ a_f - _modes.weighted_inner(f, g) * np.eye(basis.dim)
    ) * qle[None, :]
    ccr_resid = float(np.max(np.abs(ccr)))

    phi = _fock.segal_field(basis, f)
    herm_resid = float(np.max(np.abs(phi - phi.conj().T)))

    omega = grid.k_norms
    dg = np.diag(_fock.dgamma(basis, omega).astype(complex))
    c_of = _fock.creator(basis, _modes.ModeFunction(omega * f.values, grid))
    ladder = ((dg @ c_g - c_g @ dg) - _fock.creator(
        basis, _modes.ModeFunction(omega * g.values, grid))
    ) * qle[None, :]
    dgamma_resid = float(np.max(np.abs(ladder)))
    phi_iof = _fock.segal_field(basis, _modes.ModeFunction(1j * omega * f.values, grid))
    comm2 = dg @ (1j * phi) - (1j * phi) @ dg
    dgamma_phi_resid = float(np.max(np.abs(
        qle[:, None] * (comm2 - phi_iof) * qle[None, :]
    )))

    total = sum(_fock.number_projector(basis, m) for m in range(3))
    completeness = float(np.max(np.abs(total - 1.0)))

    worst = max(ccr_resid, herm_resid, dgamma_resid, dgamma_phi_resid, completeness)
    return CriterionResult(
        "1 algebra",
        worst <= 1e-10,
        details={"worst_residual": worst},
        rows=[{"check": "ccr", "residual": ccr_resid},
              {"check": "segal_hermitian", "residual": herm_resid},
              {"check": "dgamma_ladder", "residual": dgamma_resid},
              {"check": "dgamma_field", "residual": dgamma_phi_resid},
              {"check": "projector_completeness", "residual": completeness}],
    )


# ---------------------------------------------------------------------------
# criterion 2: quadrature suite
# ---------------------------------------------------------------------------

@_timed
def criterion_quadrature(config):
    grid = _modes.build_mode_grid(1.0, 0.0, 64, 26)
    grid_ir = _modes.build_mode_grid(1.0, 0.1, 64, 26)
    checks = {
        "ones": (
            _modes.scalar_integral(grid, np.ones(len(grid))), 4.0 * np.pi / 3.0
        ),
        "coulomb_kernel": (
            _modes.scalar_integral(grid, grid.form_factors() ** 2 / grid.k_norms ** 2),
            1.0 / (2.0 * np.pi ** 2),
        ),
        "inverse_cube": (
            _modes.scalar_integral(grid_ir, grid_ir.k_norms ** -3.0),
            4.0 * np.pi * np.log(10.0),
        ),
    }
    rows = []
    worst = 0.0
    for name, (value, target) in checks.items():
        err = abs(value - target)
        worst = max(worst, err)
        rows.append({"integrand": name, "value": value, "target": target, "abs_error": err})
    return CriterionResult("2 quadrature", worst <= 1e-6,
                           details={"worst_abs_error": worst}, rows=rows)


# ---------------------------------------------------------------------------
# criterion 3: Coulomb law recovery
# ---------------------------------------------------------------------------

@_timed
def criterion_coulomb(config):
    from scipy.special import sici

    grid = _modes.build_mode_grid(1.0, 0.0, 64, 26)
    r = 1.0
    si, _ = sici(r)
    pair = _modes.coulomb_kernel(grid, r)
    err_si = abs(pair - si / (2 * np.pi ** 2 * r))

    grid_far = _modes.build_mode_grid(1.0, 0.0, 96, 160)
    r_far = 50.0
    val = _modes.coulomb_kernel(grid_far, r_far)
    rel_far = abs(val / (1.0 / (4 * np.pi * r_far)) - 1.0)
    return CriterionResult(
        "3 coulomb law",
        err_si <= 1e-6 and rel_far <= 0.02,
        details={"si_abs_error": err_si, "far_rel_error": rel_far},
        rows=[{"check": "sine_integral", "value": pair, "error": err_si},
              {"check": "coulomb_tail", "value": val, "error": rel_far}],
    )


# ---------------------------------------------------------------------------
# frames for criteria 4, 6, 7
# ---------------------------------------------------------------------------

_FRAME_CACHE = {}


def _frame(key, builder):
    if key not in _FRAME_CACHE:
        _FRAME_CACHE[key] = builder()
    return _FRAME_CACHE[key]


def clear_frames():
    _FRAME_CACHE.clear()


def _invariance_frame(config, eps):
    def build():
        grid = _compact_grid()
        basis = _fock.enumerate_basis(grid, 2)
        acc = config["acceptance"]["invariance"]
        space = _single_particle(eps, acc["n_x"], acc["box_length"], acc["charge"])
        model = ham.CompositeModel(space, basis, snap_phases=False)
        return dyn.DressingFrame(space, basis, eps, sigma=eps ** 3,
                                 chi=_chi_main(), model=model)
    return _frame(("inv", eps), build)


def _remainder_frame(config, eps):
    def build():
        grid = _compact_grid()
        basis = _fock.enumerate_basis(grid, 2)
        acc = config["acceptance"]["effective"]
        space = _single_particle(eps, acc["n_x"], acc["box_length"], acc["charge"])
        return dyn.DressingFrame(space, basis, eps, sigma=eps ** 3, chi=_chi_main())
    return _frame(("rem", eps), build)


# ---------------------------------------------------------------------------
# criterion 4: unitarity / self-adjointness
# ---------------------------------------------------------------------------

@_timed
def criterion_unitarity(config):
    frame = _remainder_frame(config, 0.1)
    u = frame.dressing_unitary
    unit_resid = u.unitarity_residual()
    herm = max(
        frame.h_term(term, frame.sigma).hermiticity_residual()
        for term in ("h0", "h1", "h2")
    )
    herm = max(herm, frame.h_sigma.hermiticity_residual())
    h_dres = ham.dressed_hamiltonian(u, frame.h_sigma)
    w1 = np.sort(frame.spectral_sigma.energies)
    w2 = np.sort(np.linalg.eigvalsh(h_dres.matrix))
    spec_resid = float(np.max(np.abs(w1 - w2)))
    passed = unit_resid <= 1e-10 and herm <= 1e-12 and spec_resid <= 1e-10
    return CriterionResult(
        "4 unitarity",
        passed,
        details={"unitarity": unit_resid, "hermiticity": herm, "spectrum": spec_resid},
        rows=[{"check": "unitarity", "residual": unit_resid},
              {"check": "hermiticity", "residual": herm},
              {"check": "dressed_spectrum", "residual": spec_resid}],
    )


# ---------------------------------------------------------------------------
# criterion 5: infrared scaling (measured faithfully; see ledger)
# ---------------------------------------------------------------------------

@_timed
def criterion_ir_scaling(config):
    acc = config["acceptance"]["ir_scaling"]
    grid = _modes.build_mode_grid(1.0, 0.0, 1, 2, radial_breaks=(0.003, 0.01, 0.03, 0.1))
    basis = _fock.enumerate_basis(grid, acc["photon_cutoff_L"])
    eps, t_obs = 0.1, 1.0
    space = _single_particle(eps, acc["n_x"], acc["box_length"], acc["charge"])
    frame = dyn.DressingFrame(space, basis, eps, sigma=0.0, chi=_chi_main())
    psi_p = _particles.gaussian_packet(
        space, centers=(2.0,), widths=(0.5,), momenta=(acc["packet_momentum"],)
    )
    psi = frame.spectral_full.apply_function(_chi_main().inner(), frame.embed_vacuum(psi_p))
    psi /= np.linalg.norm(psi)
    full = frame.spectral_full.apply_propagator(t_obs, eps, psi)
    rows = []
    for sigma in SIGMA_SWEEP:
        t0 = time.perf_counter()
        cut = ham.diagonalize(frame.hamiltonian(sigma)).apply_propagator(t_obs, eps, psi)
        rows.append({"epsilon": eps, "sigma": sigma,
                     "norm": float(np.linalg.norm(full - cut)),
                     "runtime_s": time.perf_counter() - t0})
    slope, _, _ = dyn.fit_loglog_slope([r["sigma"] for r in rows], [r["norm"] for r in rows])
    passed = 0.35 <= slope <= 0.65
    return CriterionResult(
        "5 ir scaling",
        passed,
        details={"slope": slope, "window": "[0.35,0.65]",
                 "note": "sigma^1 is the saturated rate at desk scale (ledger)"},
        rows=rows,
    )


# ---------------------------------------------------------------------------
# criterion 6: subspace invariance
# ---------------------------------------------------------------------------

@_timed
def criterion_invariance(config):
    t_obs = config["dynamics"]["t"]
    rows = []
    norms = {0: [], 1: []}
    for eps in EPS_SWEEP:
        frame = _invariance_frame(config, eps)
        for m in (0, 1):
            t0 = time.perf_counter()
            val = dyn.invariance_norm(frame, m, t_obs, seed=config["seed"])
            norms[m].append(val)
            rows.append({"epsilon": eps, "sigma": eps ** 3, "m": m, "norm": val,
                         "runtime_s": time.perf_counter() - t0})
        frame.free_cache()
    slope0, _, _ = dyn.fit_loglog_slope(EPS_SWEEP, norms[0])
    slope1, _, _ = dyn.fit_loglog_slope(EPS_SWEEP, norms[1])
    ratio = float(np.mean(np.array(norms[1]) / np.array(norms[0])))
    passed = 0.8 <= slope0 <= 1.2 and 1.0 <= ratio <= 2.0
    return CriterionResult(
        "6 invariance",
        passed,
        details={"slope_m0": slope0, "slope_m1": slope1, "m1_m0_ratio": ratio},
        rows=rows,
    )


# ---------------------------------------------------------------------------
# criterion 7: dressed-expansion remainder
# ---------------------------------------------------------------------------

@_timed
def criterion_dressed_remainder(config):
    rows = []
    for eps in EPS_SWEEP:
        t0 = time.perf_counter()
        frame = _remainder_frame(config, eps)
        t_op = frame.dressing_generator
        c0, c1, c2 = ham.expansion_coefficients(
            t_op,
            frame.h_term("h0", frame.sigma),
            frame.h_term("h1", frame.sigma),
            frame.h_term("h2", frame.sigma),
        )
        h_dres = ham.dressed_hamiltonian(frame.dressing_unitary, frame.h_sigma)
        residual = h_dres.matrix - (
            c0.matrix + eps * c1.matrix + eps ** 2 * c2.matrix
        )
        norm = dyn.operator_norm(residual, seed=config["seed"])
        rows.append({"epsilon": eps, "sigma": eps ** 3, "norm": norm,
                     "runtime_s": time.perf_counter() - t0})
    slope, _, _ = dyn.fit_loglog_slope(EPS_SWEEP, [r["norm"] for r in rows])
    passed = 2.6 <= slope <= 3.2
    return CriterionResult("7 dressed remainder", passed,
                           details={"slope": slope, "window": "[2.6,3.2]"}, rows=rows)


# ---------------------------------------------------------------------------
# criterion 8: effective dynamics (first-order theorem, M=0)
# ---------------------------------------------------------------------------

def _first_order_residual(frame, grid, psi_p, t_obs, include_darwin,
                          extra_potential=None, s_nodes=48):
    """State-norm residual of the first-order approximation.

    || [exp(-i t H_dres/eps) - exp(-i t H_D2/eps) + i eps Duhamel(h_2OD)] Psi ||
    for the dressed-vacuum state built from psi_p.
    """
    space, basis, eps = frame.space, frame.basis, frame.epsilon
    state = frame.prepare_dressed_state(psi_p, 0)
    u_mat = frame.dressing_unitary.matrix
    state_d = u_mat @ state
    evolved = u_mat @ frame.spectral_sigma.apply_propagator(
        t_obs, eps, u_mat.conj().T @ state_d
    )
    hf = _fock.field_hamiltonian(basis)
    h_p = _particles.particle_hamiltonian(space, grid)
    spec_p = ham.diagonalize(ham.hermitize(h_p))

    def h0_prop(vec, tt):
        st = vec.reshape(space.dim, basis.dim)
        return ((spec_p.propagator(tt, eps) @ st)
                * np.exp(-1j * tt * hf / eps)[None, :]).reshape(-1)

    # Duhamel correction through the off-diagonal Coulomb-force coupling
    h2od = ham.offdiagonal_hamiltonian(frame.model, frame.sigma).matrix
    s_vals, s_weights = np.polynomial.legendre.leggauss(s_nodes)
    s_vals = 0.5 * t_obs * (s_vals + 1.0)
    s_weights = 0.5 * t_obs * s_weights
    correction = np.zeros_like(state_d)
    for s_, w_ in zip(s_vals, s_weights):
        v = h0_prop(state_d, s_)
        v = h2od @ v
        correction += w_ * h0_prop(v, t_obs - s_)
    correction *= -1j * eps

    hp_eff = ham.effective_hamiltonian(
        space, grid, "darwin_eps", epsilon=eps, include_darwin=include_darwin
    ).matrix
    if extra_potential is not None:
        hp_eff = hp_eff + eps ** 2 * np.diag(extra_potential)
    spec_eff = ham.diagonalize(ham.hermitize(hp_eff))
    st = state_d.reshape(space.dim, basis.dim)
    eff = ((spec_eff.propagator(t_obs, eps) @ st)
           * np.exp(-1j * t_obs * hf / eps)[None, :]).reshape(-1)
    return float(np.linalg.norm(evolved - eff - correction))


@_timed
def criterion_effective_dynamics(config):
    acc = config["acceptance"]["effective"]
    grid = _compact_grid()
    t_obs = acc["t"]
    rows = []
    resid = {"darwin": [], "no_darwin": []}
    for eps in EPS_SWEEP:
        frame = _remainder_frame(config, eps)
        space = frame.space
        psi_p = _particles.gaussian_packet(
            space, centers=(acc["packet_center"],), widths=(acc["packet_width"],),
            momenta=(acc["packet_momentum"],),
        )
        for label, include in (("darwin", True), ("no_darwin", False)):
            t0 = time.perf_counter()
            value = _first_order_residual(frame, grid, psi_p, t_obs, include)
            resid[label].append(value)
            # trace comparison reported alongside
            s_obs = np.diag(space.grid_coordinates(0).astype(complex))
            h_eff = ham.effective_hamiltonian(space, grid, "darwin_eps",
                                              epsilon=eps, include_darwin=include).matrix
            state = frame.prepare_dressed_state(psi_p, 0)
            tf, te, diff = dyn.effective_compare(frame, s_obs, state, t_obs, h_eff)
            rows.append({"epsilon": eps, "sigma": eps ** 3, "t": t_obs,
                         "trace_full": tf, "trace_eff": te, "diff": value,
                         "variant": label, "trace_diff": diff,
                         "runtime_s": time.perf_counter() - t0})
        frame.free_cache(keep=[("spec", round(eps ** 3, 12))])
    slope_with, _, _ = dyn.fit_loglog_slope(EPS_SWEEP, resid["darwin"])
    slope_without, _, _ = dyn.fit_loglog_slope(EPS_SWEEP, resid["no_darwin"])
    passed = 1.6 <= slope_with <= 2.2 and slope_without < 1.4
    return CriterionResult(
        "8 effective dynamics",
        passed,
        details={"slope_darwin": slope_with, "slope_no_darwin": slope_without},
        rows=rows,
    )


# ---------------------------------------------------------------------------
# criteria 9 and 12a: radiated piece and spin-term absence
# ---------------------------------------------------------------------------

def _radiated_grid(config):
    lam = config["acceptance"]["radiated"]["lambda_uv"]
    return _modes.build_mode_grid(1.0, 0.0, 1, 2, radial_breaks=(lam,))


def _radiated_frame(config, eps, charges):
    def build():
        grid = _radiated_grid(config)
        basis = _fock.enumerate_basis(grid, 2)
        space = _pair_space(eps, charges)
        chi = ham.CutoffFunction(center=0.2, half_width=0.45, margin=0.2)
        return dyn.DressingFrame(space, basis, eps, sigma=eps ** 3, chi=chi)
    return _frame(("rad", eps, charges), build)


def _radiated_packet(space):
    return _particles.gaussian_packet(
        space, centers=(1.4, 2.6), widths=(0.5, 0.5), momenta=(0.3, -0.3)
    )


@_timed
def criterion_radiated(config):
    t_obs = config["acceptance"]["radiated"]["t"]
    charge = 1.6
    rows = []
    fids = []
    norms_direct = []
    for eps in EPS_SWEEP:
        t0 = time.perf_counter()
        frame = _radiated_frame(config, eps, (charge, -charge))
        grid, space = frame.basis.grid, frame.space
        psi_p = _radiated_packet(space)
        direct = dyn.radiated_state_direct(frame, frame.embed_vacuum(psi_p), t_obs)
        h_p = _particles.particle_hamiltonian(space, grid)
        spec_p = ham.diagonalize(ham.hermitize(h_p))
        psi_red = spec_p.apply_function(frame.chi, psi_p)
        amps = sc.radiated_one_photon_amplitudes(
            space, grid, grid, psi_red, t_obs, eps, frame.sigma, h_p,
            s_nodes=config["semiclassics"]["s_nodes"] * 2,
        )
        formula = sc.embed_one_photon(frame.model, amps)
        fid = abs(np.vdot(formula, direct)) / max(
            np.linalg.norm(formula) * np.linalg.norm(direct), 1e-300
        )
        fids.append(fid)
        norms_direct.append(float(np.linalg.norm(direct)))
        rows.append({"epsilon": eps, "sigma": eps ** 3,
                     "norm_direct": norms_direct[-1],
                     "norm_formula": float(np.linalg.norm(formula)),
                     "fidelity": fid,
                     "e_rad_direct": dyn.radiated_energy(frame.model, direct),
                     "e_rad_formula": sc.one_photon_energy(grid, amps),
                     "variant": "unequal",
                     "runtime_s": time.perf_counter() - t0})
    # equal-particle suppression at the smallest epsilon
    eps = EPS_SWEEP[-1]
    frame_eq = _radiated_frame(config, eps, (charge, charge))
    psi_p = _radiated_packet(frame_eq.space)
    direct_eq = dyn.radiated_state_direct(frame_eq, frame_eq.embed_vacuum(psi_p), t_obs)
    suppression = norms_direct[-1] / max(float(np.linalg.norm(direct_eq)), 1e-300)
    rows.append({"epsilon": eps, "sigma": eps ** 3,
                 "norm_direct": float(np.linalg.norm(direct_eq)),
                 "norm_formula": 0.0, "fidelity": 0.0,
                 "e_rad_direct": dyn.radiated_energy(frame_eq.model, direct_eq),
                 "e_rad_formula": 0.0, "variant": "equal", "runtime_s": 0.0})
    slope_direct, _, _ = dyn.fit_loglog_slope(EPS_SWEEP, norms_direct)
    monotone = all(b >= a - 1e-9 for a, b in zip(fids, fids[1:]))
    passed = fids[-1] >= 0.7 and monotone and suppression >= 10.0
    return CriterionResult(
        "9 radiated piece",
        passed,
        details={"fidelity_smallest": fids[-1], "monotone": monotone,
                 "suppression": suppression, "direct_norm_slope": slope_direct},
        rows=rows,
    )


@_timed
def criterion_spin_absence(config):
    # paired run: inserting the polarized-sector spin potential into the
    # effective Hamiltonian must worsen the first-order residual at small eps
    t_obs = config["acceptance"]["radiated"]["t"]
    charge = 1.6
    rows = []
    worsened = []
    for eps in EPS_SWEEP[-2:]:
        frame = _radiated_frame(config, eps, (charge, -charge))
        grid, space = frame.basis.grid, frame.space
        psi_p = _radiated_packet(space)
        base = _first_order_residual(frame, grid, psi_p, t_obs, True)
        spin_pot = ham.spin_contact_polarized(space, grid)
        with_spin = _first_order_residual(frame, grid, psi_p, t_obs, True,
                                          extra_potential=spin_pot)
        worsened.append(with_spin > base)
        rows.append({"epsilon": eps, "residual": base, "residual_with_spin": with_spin,
                     "variant": "paired"})
    # c -> infinity builder: V_spin matrix against the quadrature oracle
    from scipy.integrate import quad

    spin_space = _particles.ParticleSpace(
        n=2, n_grid=4, box=4.0, masses=(1.0, 2.0), charges=(0.8, -0.5),
        epsilon=0.1, spin=True,
    )
    fine = _modes.build_mode_grid(1.0, 0.0, 64, 26)
    v_spin = ham.spin_contact_term(spin_space, fine)

    def contact_oracle(r):
        val, err = quad(
            lambda k: 4 * np.pi * k ** 2 * (2 * np.pi) ** -3 * np.sinc(k * r / np.pi),
            0.0, 1.0, limit=200,
        )
        return val

    qs = [spin_space.grid_coordinates(j) for j in range(2)]
    expected = np.zeros_like(v_spin)
    for j in range(2):
        for l in range(2):
            sep = spin_space.minimal_image(qs[j] - qs[l])
            kernel = np.repeat(
                np.array([contact_oracle(abs(r)) for r in sep]), spin_space.dim_spin
            )
            coupling = -spin_space.charges[j] * spin_space.charges[l] / (
                12.0 * spin_space.masses[j] * spin_space.masses[l]
            )
            sj = _particles.spin_operators(spin_space, j)
            sl = _particles.spin_operators(spin_space, l)
            dot = sum(sj[a] @ sl[a] for a in range(3))
            expected += coupling * (kernel[:, None] * dot)
    oracle_resid = float(np.max(np.abs(v_spin - expected)))
    rows.append({"epsilon": 0.0, "residual": oracle_resid,
                 "residual_with_spin": 0.0, "variant": "c_infinity_oracle"})
    passed = all(worsened) and oracle_resid <= 1e-6
    return CriterionResult(
        "12 spin absence",
        passed,
        details={"paired_worsened": all(worsened), "vspin_oracle_resid": oracle_resid},
        rows=rows,
    )


# ---------------------------------------------------------------------------
# criterion 10: Larmor power
# ---------------------------------------------------------------------------

@_timed
def criterion_larmor(config):
    grid_v = _modes.build_mode_grid(1.0, 0.0, 8, 4)
    grid_fine = _modes.build_mode_grid(1.0, 0.0, 48, 4)
    t_obs, dt = 1.0, 0.04
    rows = []
    ratios_printed = []
    ratios_si = []
    for eps in (0.2, 0.14, 0.1):
        space = _pair_space(eps, (1.6, -1.6))
        h_p = _particles.particle_hamiltonian(space, grid_v)
        psi = _radiated_packet(space)
        energies = []
        for t in (t_obs - dt, t_obs, t_obs + dt):
            amps = sc.radiated_one_photon_amplitudes(
                space, grid_v, grid_fine, psi, t, eps, 0.0, h_p, s_nodes=96
            )
            energies.append(sc.one_photon_energy(grid_fine, amps))
        p_fd = (energies[2] - energies[0]) / (2 * dt)
        p_larmor = sc.larmor_power(space, grid_v, psi, t_obs, eps)
        ratios_printed.append(p_fd / p_larmor)
        ratios_si.append(p_fd / (0.5 * np.pi * p_larmor))
        rows.append({"t": t_obs, "p_rad": p_larmor, "e_rad": energies[1],
                     "e_rad_fd": p_fd, "epsilon": eps})
    rel_printed = abs(ratios_printed[-1] - 1.0)
    rel_si = abs(ratios_si[-1] - 1.0)
    improving = abs(ratios_printed[-1] - 1.0) <= abs(ratios_printed[0] - 1.0) + 1e-9
    # exact coefficient unit check
    coeff_ok = sc.LARMOR_COEFFICIENT == 1.0 / (3.0 * np.pi ** 2)
    passed = rel_printed <= 0.25 and improving and coeff_ok
    return CriterionResult(
        "10 larmor",
        passed,
        details={"rel_err_printed": rel_printed, "rel_err_si_corrected": rel_si,
                 "improving": improving,
                 "note": "printed constant misses Si(inf)=pi/2 (ledger)"},
        rows=rows,
    )


# ---------------------------------------------------------------------------
# criterion 11: semiclassics
# ---------------------------------------------------------------------------

@_timed
def criterion_semiclassics(config):
    grid = _modes.build_mode_grid(1.0, 0.0, 8, 4)
    space0 = _pair_space(0.1, (1.0, -1.0))
    steps = config["semiclassics"]["steps"]
    traj = sc.classical_trajectory(space0, grid, (1.3, 2.7), (0.0, 0.0), 10.0, steps=steps)
    drift = traj.energy_drift

    eye = sc.weyl_quantize(space0, lambda X, P: np.ones(X.shape[:-1]))
    op1_resid = float(np.max(np.abs(eye - np.eye(space0.dim))))

    def symbol(box):
        def fn(X, P):
            dx = (X - np.array([1.4, 2.6])) % box
            dx = np.where(dx > 0.5 * box, dx - box, dx)
            dp = P - np.array([0.05, -0.05])
            return np.exp(-np.sum(dx ** 2, axis=-1) / (2 * 0.5 ** 2)
                          - np.sum(dp ** 2, axis=-1) / (2 * 0.08 ** 2))
        return fn

    residuals = []
    for eps in EPS_SWEEP:
        space = _pair_space(eps, (1.0, -1.0))
        h_p = _particles.particle_hamiltonian(space, grid)
        residuals.append(
            sc.egorov_residual(space, grid, symbol(space.box), 0.5, eps, h_p)
        )
    slope, _, _ = dyn.fit_loglog_slope(EPS_SWEEP, residuals)
    passed = slope >= 1.6 and slope <= 2.4 and drift < 1e-8 and op1_resid <= 1e-10
    rows = [{"check": "energy_drift", "value": drift},
            {"check": "op_identity", "value": op1_resid},
            {"check": "egorov_slope", "value": slope}]
    rows += [{"check": f"egorov_eps_{eps}", "value": r}
             for eps, r in zip(EPS_SWEEP, residuals)]
    return CriterionResult(
        "11 semiclassics",
        passed,
        details={"egorov_slope": slope, "energy_drift": drift, "op1": op1_resid},
        rows=rows,
    )


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

ALL_CRITERIA = (
    criterion_algebra,
    criterion_quadrature,
    criterion_coulomb,
    criterion_unitarity,
    criterion_ir_scaling,
    criterion_invariance,
    criterion_dressed_remainder,
    criterion_effective_dynamics,
    criterion_radiated,
    criterion_larmor,
    criterion_semiclassics,
    criterion_spin_absence,
)


def run_all(config):
    results = []
    for criterion in ALL_CRITERIA:
        results.append(criterion(config))
    clear_frames()
    return results
