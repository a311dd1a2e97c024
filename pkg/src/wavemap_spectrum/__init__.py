"""Linear stability spectrum of the self-similar blowup of the 3+1 wave-map equation.

The eigenvalues of perturbations of ``U0 = 2 arctan(rho)`` are computed by a
continued fraction (minimal solution of a three-term recurrence), checked by
shooting to a midpoint and by structural facts, and confirmed dynamically by
evolving the nonlinear equation to blowup.
"""

__version__ = "0.1.0"

from .contfrac import (  # noqa: E402
    EigenRecord,
    cf_ratio,
    eigen_fn,
    eigenmode,
    find_complex_eigenvalues,
    find_real_eigenvalues,
    minimal_ratio_test,
)
from .series import build_spectral_ode, build_transformed_ode, evaluate_series, frobenius_series  # noqa: E402
from .shooting import oracle_eigenvalues, wronskian_mid  # noqa: E402

__all__ = [
    "EigenRecord",
    "build_spectral_ode",
    "build_transformed_ode",
    "cf_ratio",
    "eigen_fn",
    "eigenmode",
    "evaluate_series",
    "find_complex_eigenvalues",
    "find_real_eigenvalues",
    "frobenius_series",
    "minimal_ratio_test",
    "oracle_eigenvalues",
    "wronskian_mid",
]
