"""Energy-method stability, gain and ISS certificates for laminar flows.

The pipeline builds the certificate matrices of a streamwise-constant flow,
relaxes ``M(x) >= 0 on Omega`` to a semidefinite program (directly when the
matrix is constant, via matrix sums of squares otherwise) and solves it with
a small dense interior-point method.
"""

__version__ = "0.1.0"

from .errors import InputError, SolverError  # noqa: E402

__all__ = ["InputError", "SolverError", "__version__"]
