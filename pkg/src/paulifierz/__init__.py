"""Desk-scale laboratory for slow charged particles coupled to a quantized field.

The package assembles the minimally coupled Hamiltonian of N slow charged
particles interacting with a UV-truncated, mode-discretized radiation field,
builds the dressing transformation that makes photon-number subspaces almost
invariant, and verifies the associated scaling laws (effective Coulomb +
Darwin dynamics, radiated one-photon wave function, dipole radiated power)
by direct propagation.

Layout
------
modes         photon momentum grid, form factors, polarizations, couplings
fock          occupation-number basis, ladder/field operators, projectors
particles     N-particle grid space, momenta, smeared Coulomb potential, spin
hamiltonians  composite operators, dressing transformation, effective models
dynamics      propagation, scaling experiments, sweeps, slope fits
semiclassics  classical flows, Weyl quantization, radiated state, Larmor power
cli           configuration, subcommands, CSV/JSONL emission, report figures
"""

__version__ = "0.1.0"
