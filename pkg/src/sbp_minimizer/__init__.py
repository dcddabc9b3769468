"""Normalized local minimizers of the Sobolev-critical Schrödinger–Bopp–Podolsky energy.

Radial fields on a graded grid, exact radial reductions of the Coulomb and
Yukawa kernels, a brute-force 3D oracle, estimated inequality constants with
the closed-form thresholds ``c0`` and ``rho0``, and a projected descent on the
mass sphere.
"""
__version__ = "0.1.0"
