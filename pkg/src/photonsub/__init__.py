"""Desk-scale simulator for CW photon subtraction with narrowband optical filtering.

Subpackages cover Fock-space state algebra (:mod:`photonsub.fock`), temporal
mode construction (:mod:`photonsub.temporal`), squeezing spectra and
wave-packet variances (:mod:`photonsub.spectra`), homodyne trace synthesis
(:mod:`photonsub.simulate`), temporal-mode estimation
(:mod:`photonsub.mode_est`), maximum-likelihood tomography
(:mod:`photonsub.tomography`), and the scenario pipeline CLI
(:mod:`photonsub.cli`).
"""

__version__ = "0.1.0"
