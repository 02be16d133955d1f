"""chi2atom: desk-scale simulator for a chi(2) microcavity artificial atom.

A strongly nonlinear doubly resonant microcavity behaves as a two-level
"artificial atom": the two-excitation levels hybridize and split, blocking a
second photon from entering. The subpackages cover the pieces needed to work
with that system end to end:

- ``fock``       truncated multimode Fock bases and Hamiltonians
- ``dynamics``   Lindblad / pulsed non-Hermitian time evolution
- ``scattering`` two-photon waveguide scattering and joint spectra
- ``storage``    antenna-mediated single-photon storage and retrieval
- ``czgate``     full photon-photon control-Z sequence and fidelity sweeps
- ``service``    FastAPI wrapper; ``cli`` is a thin client of it

All rates are expressed in units of a reference decay rate (kappa_ref = 1)
and all times in 1/kappa_ref.
"""

__version__ = "0.1.0"
