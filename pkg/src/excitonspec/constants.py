"""Physical constants and unit conventions.

Units used throughout the package:

* energies and angular-frequency axes in eV,
* times in fs,
* transition/state dipoles in atomic units (e * a0),
* distances in Angstrom.

``hbar`` in eV*fs converts between the two; phases are accumulated as
``E * t / HBAR_EV_FS``.
"""

from __future__ import annotations

#: Reduced Planck constant in eV*fs.
HBAR_EV_FS = 0.6582119569

#: Hartree energy in eV.
HARTREE_EV = 27.2114

#: Bohr radius in Angstrom.
BOHR_ANG = 0.529177

#: Prefactor of the point-dipole coupling when dipoles are given in atomic
#: units and distances in Angstrom: 1 au^2/Ang^3 expressed in eV.
DIPOLE_COUPLING_EV = HARTREE_EV * BOHR_ANG**3

#: Cartesian component labels, in the order used for isotropic averaging.
CARTESIAN = ("x", "y", "z")
