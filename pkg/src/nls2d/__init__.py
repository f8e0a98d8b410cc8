"""nls2d: variational objects of the 2D NLS limit of trapped Bose gases.

Grids and spectral calculus (grids), one-body energy functionals
(functionals), constrained minimizers and the Townes profile (minimize),
small-N exact diagonalization (manybody), coherent-state de Finetti
measures (definetti), and the bootstrap exponent schedule (exponents).
"""

__version__ = "0.1.0"

from .grids import Field2D, Grid2D, VectorField2D  # noqa: F401
