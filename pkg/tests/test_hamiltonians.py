"""Composite operators, dressing transformation, effective Hamiltonians."""

import numpy as np
import pytest
from scipy.integrate import quad

from paulifierz import dynamics as dyn
from paulifierz import fock, hamiltonians as ham, modes, particles


@pytest.fixture(scope="module")
def setup():
    grid = modes.build_mode_grid(1.0, 0.0, 2, 2)
    space = particles.ParticleSpace(
        n=1, n_grid=8, box=4.0, masses=(1.0,), charges=(0.6,), epsilon=0.1
    )
    basis = fock.enumerate_basis(grid, 2)
    model = ham.CompositeModel(space, basis)
    return grid, space, basis, model


# ---------------------------------------------------------------------------
# cutoff function
# ---------------------------------------------------------------------------

def test_cutoff_plateau_and_support():
    chi = ham.CutoffFunction(center=1.0, half_width=0.8, margin=0.3)
    assert chi(1.0) == 1.0
    assert chi(1.5) == 1.0   # inside plateau 1 +- 0.5
    assert chi(1.81) < 1.0
    assert chi(2.5) == 0.0
    es = np.linspace(-1, 3, 400)
    vals = chi(es)
    assert np.all(vals >= 0.0) and np.all(vals <= 1.0)
    inner = chi.inner()
    assert np.all(chi(es) * inner(es) == inner(es))  # chi == 1 on supp inner
    outer = chi.outer(0.4)
    assert np.all(outer(es) * vals == vals)
    with pytest.raises(ham.UsageError):
        ham.CutoffFunction(center=0.0, half_width=0.2, margin=0.3)


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def test_hamiltonian_terms_hermitian(setup):
    grid, space, basis, model = setup
    for term in ("h0", "h1", "h2", "full"):
        op = ham.assemble_h(model, term, epsilon=0.1, sigma=0.05)
        assert op.hermiticity_residual() < 1e-12


def test_h0_vacuum_sector(setup):
    grid, space, basis, model = setup
    h0 = ham.assemble_h(model, "h0", 0.1).matrix
    # constant grid state x vacuum: kinetic zero mode, energy = Coulomb constant
    psi = np.zeros(model.dim, dtype=complex)
    flat = np.ones(space.dim) / np.sqrt(space.dim)
    psi = np.kron(flat, fock.vacuum_state(basis))
    energy = np.real(np.vdot(psi, h0 @ psi))
    v_const = particles.coulomb_diagonal(space, grid)[0]
    assert energy == pytest.approx(v_const, rel=1e-12)


def test_normal_ordered_square_vacuum(setup):
    grid, space, basis, model = setup
    blocks = model.normal_ordered_a2_blocks(0.0)
    for block in blocks[:2]:
        assert abs(block[0, 0]) < 1e-14


def test_spin_field_term_requires_spin(setup):
    grid, space, basis, model = setup
    with pytest.raises(ham.UsageError):
        ham.assemble_h(model, "h2", 0.1, include_spin=True)


def test_spin_field_term_hermitian():
    grid = modes.build_mode_grid(1.0, 0.0, 1, 2)
    space = particles.ParticleSpace(
        n=1, n_grid=4, box=2.0, masses=(1.0,), charges=(0.7,), epsilon=0.1, spin=True
    )
    basis = fock.enumerate_basis(grid, 1)
    model = ham.CompositeModel(space, basis)
    op = ham.assemble_h(model, "h2", 0.1)
    assert op.hermiticity_residual() < 1e-12
    full = ham.assemble_h(model, "full", 0.1)
    assert full.hermiticity_residual() < 1e-12


# ---------------------------------------------------------------------------
# spectral calculus
# ---------------------------------------------------------------------------

def test_spectral_function_identities(setup):
    grid, space, basis, model = setup
    h = ham.assemble_h(model, "full", 0.1)
    spec = ham.diagonalize(h)
    ident = ham.spectral_function(h, lambda e: np.ones_like(e), spectral=spec)
    assert np.allclose(ident.matrix, np.eye(model.dim), atol=1e-12)
    # step that covers the whole spectrum acts as the identity
    top = spec.energies.max() + 1.0
    step = ham.spectral_function(h, lambda e: (e < top).astype(float), spectral=spec)
    assert np.allclose(step.matrix, np.eye(model.dim), atol=1e-12)
    with pytest.raises(ham.UsageError):
        ham.diagonalize(1j * h.matrix)


# ---------------------------------------------------------------------------
# dressing generator and unitary
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def dressing(setup):
    grid, space, basis, model = setup
    h = ham.assemble_h(model, "full", 0.1, sigma=0.0)
    spec = ham.diagonalize(h)
    chi = ham.CutoffFunction(center=0.3, half_width=0.5, margin=0.2)
    chi_mat = spec.function(chi)
    t_op, correction = ham.dressing_generator(model, chi_mat, sigma=1e-3)
    return model, h, spec, chi_mat, t_op, correction


def test_generator_antihermitian(dressing):
    model, h, spec, chi_mat, t_op, correction = dressing
    assert correction < 1e-12
    assert np.linalg.norm(t_op.matrix + t_op.matrix.conj().T) < 1e-12


def test_generator_ladder_structure(dressing):
    model, h, spec, chi_mat, t_op, correction = dressing
    basis = model.basis
    tn = basis.total_numbers()
    u1 = ham.velocity_coupling_generator(model, 1e-3)
    t4 = t_op.matrix.reshape(model.space.dim, basis.dim, model.space.dim, basis.dim)
    u4 = u1.reshape(model.space.dim, basis.dim, model.space.dim, basis.dim)
    for m in range(3):
        for mp in range(3):
            if abs(m - mp) == 1:
                continue
            u_block = u4[:, tn == mp][:, :, :, tn == m]
            assert np.max(np.abs(u_block)) < 1e-14  # exact for the bare coupling
            t_block = t4[:, tn == mp][:, :, :, tn == m]
            assert np.max(np.abs(t_block)) < 1e-4   # energy cutoff mixes at O(eps)


def test_generator_requires_infrared_cutoff(setup):
    grid, space, basis, model = setup
    chi_mat = np.eye(model.dim)
    with pytest.raises(ham.DomainError):
        ham.dressing_generator(model, chi_mat, sigma=0.0)


def test_dressing_unitary_properties(dressing):
    model, h, spec, chi_mat, t_op, correction = dressing
    u0 = ham.dressing_unitary(t_op, 0.0)
    assert np.allclose(u0.matrix, np.eye(model.dim))
    u = ham.dressing_unitary(t_op, 0.1)
    assert u.unitarity_residual() < 1e-10
    # series and eigendecomposition square roots agree
    norm_t = np.linalg.norm(t_op.matrix, 2)
    eps = 0.3 / norm_t
    u_eig = ham.dressing_unitary(t_op, eps, method="eig")
    u_ser = ham.dressing_unitary(t_op, eps, method="series", n_terms=12)
    assert np.linalg.norm(u_eig.matrix - u_ser.matrix, 2) < 1e-8
    with pytest.raises(ham.DomainError):
        ham.dressing_unitary(t_op, 1.2 / norm_t)


def test_dressed_hamiltonian_spectrum(dressing):
    model, h, spec, chi_mat, t_op, correction = dressing
    u = ham.dressing_unitary(t_op, 0.1)
    h_dres = ham.dressed_hamiltonian(u, h)
    w1 = np.sort(spec.energies)
    w2 = np.sort(np.linalg.eigvalsh(h_dres.matrix))
    assert np.max(np.abs(w1 - w2)) < 1e-10


def test_h1_dressed_matches_block_form(dressing):
    # the exact commutator coefficient agrees with the cutoff-sandwich block
    # form (1-chi) Qle h1 Qle (1-chi) + Qgt h1 Qle + ... up to O(eps)
    model, h, spec, chi_mat, t_op, correction = dressing
    eps = 0.1
    h0 = ham.assemble_h(model, "h0", eps, sigma=1e-3)
    h1 = ham.assemble_h(model, "h1", eps, sigma=1e-3)
    h2 = ham.assemble_h(model, "h2", eps, sigma=1e-3)
    _, c1, _ = ham.expansion_coefficients(t_op, h0, h1, h2)
    qle = model.embed_field_diag(
        fock.number_leq_projector(model.basis, model.basis.n_photon_max)
    )
    one_minus = np.eye(model.dim) - chi_mat
    inner = qle[:, None] * h1.matrix * qle[None, :]
    block_form = one_minus @ inner @ one_minus + (h1.matrix - inner)
    # difference carries at least one power of eps relative to h1's scale
    diff = np.linalg.norm(c1.matrix - block_form, 2)
    assert diff < 0.6 * eps * max(np.linalg.norm(h1.matrix, 2), 1.0)


def test_dressed_projector_properties(dressing):
    model, h, spec, chi_mat, t_op, correction = dressing
    u = ham.dressing_unitary(t_op, 0.1)
    total = np.zeros((model.dim, model.dim), dtype=complex)
    for m in range(model.basis.n_photon_max + 1):
        p_m = ham.dressed_projector(u, model, m)
        assert np.linalg.norm(p_m.matrix @ p_m.matrix - p_m.matrix, 2) < 1e-10
        assert p_m.hermiticity_residual() < 1e-10
        # trace preserved under dressing
        assert np.trace(p_m.matrix).real == pytest.approx(
            model.space.dim * int(np.sum(fock.number_projector(model.basis, m))), abs=1e-8
        )
        total += p_m.matrix
    assert np.allclose(total, np.eye(model.dim), atol=1e-10)
    # eps = 0 reduces to the bare projector
    u0 = ham.dressing_unitary(t_op, 0.0)
    p0 = ham.dressed_projector(u0, model, 0)
    assert np.allclose(p0.matrix, np.diag(model.number_projector_diag(0)), atol=1e-14)
    with pytest.raises(ham.DomainError):
        ham.dressed_projector(u, model, model.basis.n_photon_max + 1)


# ---------------------------------------------------------------------------
# effective Hamiltonians
# ---------------------------------------------------------------------------

def test_darwin_coefficient_quadrature():
    # sum of mode coefficients equals Lambda/(6 pi^2) (angular (1-u^2) exact)
    grid = modes.build_mode_grid(1.0, 0.0, 2, 2)
    coef = np.sum(
        grid.weights * grid.form_factors() ** 2 * grid.pols[:, 2] ** 2
        / (2.0 * grid.k_norms ** 2)
    )
    oracle, err = quad(
        lambda r: 4 * np.pi * r ** 2 * (2 * np.pi) ** -3 * (2.0 / 3.0) / (2 * r ** 2), 0, 1
    )
    assert err < 1e-12
    assert oracle == pytest.approx(1.0 / (6 * np.pi ** 2), rel=1e-12)
    assert coef == pytest.approx(oracle, abs=1e-13)


def test_darwin_plane_wave_oracle_commensurate_grid():
    # bespoke grid with lattice-commensurate k_z: the assembled operator acts
    # on momentum eigenstates exactly as the shifted-momentum average
    box = 2 * np.pi
    space = particles.ParticleSpace(
        n=1, n_grid=8, box=box, masses=(1.0,), charges=(0.8,), epsilon=0.1
    )
    kvec = np.array([1.0, 0.0, 1.0])  # k_z = 1 = one lattice unit
    e1p, e2p = modes.polarization_basis(kvec)
    e1m, e2m = modes.polarization_basis(-kvec)
    w = 0.37
    grid = modes.ModeGrid(
        k_vecs=np.array([kvec, kvec, -kvec, -kvec]),
        helicities=np.array([1, 2, 1, 2]),
        weights=np.array([w, w, w, w]),
        pols=np.array([e1p, e2p, e1m, e2m]),
        lambda_uv=2.0,
        sigma_ir=0.0,
    )
    vd = ham.darwin_term(space, grid)
    knorm2 = 2.0
    coef = w * (2 * np.pi) ** -3 * (e1p[2] ** 2 + e2p[2] ** 2) / (2 * knorm2)
    # +-k pair averages the recoil shift: (p -+ eps k_z)^2 -> p^2 + (eps k_z)^2
    for slot in (-1, 0, 2):
        wave = np.exp(2j * np.pi * slot * space.positions / box) / np.sqrt(8)
        p = space.epsilon * 2 * np.pi * slot / box
        expected = -2.0 * (0.8 ** 2) * coef * (p ** 2 + (space.epsilon * 1.0) ** 2)
        val = np.vdot(wave, vd @ wave).real
        assert val == pytest.approx(expected, abs=1e-14)


def test_darwin_continuum_coefficient_leading():
    # grid operator reproduces -eps^2 (e/m)^2 Lambda/(6 pi^2) p^2 up to the
    # lattice-snap and recoil corrections (documented, few-percent here)
    grid = modes.build_mode_grid(1.0, 0.0, 4, 4)
    space = particles.ParticleSpace(
        n=1, n_grid=16, box=2 * np.pi, masses=(1.0,), charges=(1.0,), epsilon=0.1
    )
    vd = ham.darwin_term(space, grid)
    slot = 3
    wave = np.exp(2j * np.pi * slot * space.positions / space.box) / np.sqrt(16)
    p = 0.1 * slot
    val = np.vdot(wave, vd @ wave).real
    lead = -p ** 2 / (6 * np.pi ** 2)
    assert val == pytest.approx(lead, rel=0.08)


def test_effective_kinds(setup):
    grid, space, basis, model = setup
    h_eff = ham.effective_hamiltonian(space, grid, "darwin_eps", epsilon=0.0)
    h_p = particles.particle_hamiltonian(space, grid)
    assert np.allclose(h_eff.matrix, h_p, atol=1e-13)
    h_eff2 = ham.effective_hamiltonian(space, grid, "darwin_eps", epsilon=0.2)
    assert h_eff2.hermiticity_residual() < 1e-12
    with pytest.raises(ham.UsageError):
        ham.effective_hamiltonian(space, grid, "c_infinity", c=10.0)  # needs spin
    with pytest.raises(ham.UsageError):
        ham.effective_hamiltonian(space, grid, "bogus", epsilon=0.1)


def spin_space():
    return particles.ParticleSpace(
        n=2, n_grid=4, box=4.0, masses=(1.0, 2.0), charges=(0.8, -0.5),
        epsilon=0.1, spin=True,
    )


def test_spin_contact_oracle():
    # independent radial quadrature of int dk phihat^2 cos(k r) per separation
    space = spin_space()
    grid = modes.build_mode_grid(1.0, 0.0, 64, 26)
    vs = ham.spin_contact_term(space, grid)
    assert np.linalg.norm(vs - vs.conj().T) < 1e-12

    def contact_oracle(r):
        val, err = quad(
            lambda k: 4 * np.pi * k ** 2 * (2 * np.pi) ** -3 * np.sinc(k * r / np.pi),
            0.0, 1.0, limit=200,
        )
        assert err < 1e-11
        return val

    qs = [space.grid_coordinates(j) for j in range(space.n)]
    expected = np.zeros_like(vs)
    for j in range(space.n):
        for l in range(space.n):
            sep = space.minimal_image(qs[j] - qs[l])
            kernel = np.repeat(
                np.array([contact_oracle(abs(r)) for r in sep]), space.dim_spin
            )
            coupling = -space.charges[j] * space.charges[l] / (
                12.0 * space.masses[j] * space.masses[l]
            )
            sj = particles.spin_operators(space, j)
            sl = particles.spin_operators(space, l)
            dot = sum(sj[a] @ sl[a] for a in range(3))
            expected += coupling * (kernel[:, None] * dot)
    assert np.max(np.abs(vs - expected)) < 1e-6


def test_spin_contact_zero_separation_value():
    # at zero separation the pair coefficient is Lambda^3/(6 pi^2)
    grid = modes.build_mode_grid(1.0, 0.0, 8, 4)
    space = particles.ParticleSpace(
        n=2, n_grid=2, box=2.0, masses=(1.0, 1.0), charges=(1.0, 1.0),
        epsilon=0.1, spin=True,
    )
    vs = ham.spin_contact_term(space, grid)
    sj = particles.spin_operators(space, 0)
    sl = particles.spin_operators(space, 1)
    dot12 = sum(sj[a] @ sl[a] for a in range(3))
    # pick the grid block q1 == q2 == 0 (first spin block of 4)
    c0 = 1.0 / (6 * np.pi ** 2)
    expected_pair = -(1.0 / 12.0) * c0 * 2.0 * dot12[:4, :4]
    self_const = -(3.0 / 12.0) * c0 * 2.0 * np.eye(4)
    block = vs[:4, :4]
    assert np.allclose(block, expected_pair + self_const, atol=1e-12)


def test_offdiagonal_hamiltonian(setup):
    grid, space, basis, model = setup
    # single particle: gradient of the constant self-energy vanishes
    op = ham.offdiagonal_hamiltonian(model, sigma=1e-3)
    assert np.linalg.norm(op.matrix) < 1e-14
    # two particles: exact photon-number ladder structure
    space2 = particles.ParticleSpace(
        n=2, n_grid=4, box=4.0, masses=(1.0, 1.0), charges=(0.8, -0.8), epsilon=0.1
    )
    model2 = ham.CompositeModel(space2, basis)
    op2 = ham.offdiagonal_hamiltonian(model2, sigma=1e-3)
    assert op2.hermiticity_residual() < 1e-12
    tn = basis.total_numbers()
    o4 = op2.matrix.reshape(space2.dim, basis.dim, space2.dim, basis.dim)
    for m in range(3):
        block = o4[:, tn == m][:, :, :, tn == m]
        assert np.max(np.abs(block)) < 1e-14
    with pytest.raises(ham.DomainError):
        ham.offdiagonal_hamiltonian(model2, sigma=0.0)
