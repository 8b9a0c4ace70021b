"""Soliton-gas tau functions for the focusing nonlinear Schrodinger
equation, computed three independent ways and cross-validated:

* exact N-soliton determinants (``nsoliton``), with extended-precision
  linear algebra (``ddarith``) for the exponentially stiff regime;
* Fredholm-determinant tau functions of the condensed gas (``fredholm``),
  in both the half-line Hankel and the 2-D block form;
* closed-form elliptic asymptotics of the left oscillatory region
  (``elliptic``), with the supporting special functions (``special``).

``geometry`` holds the spectral domain (an ellipse with foci on the
imaginary axis) and its quadratures and samplers; ``harness`` drives the
cross-validation scenarios; ``cli`` is the command-line face.
"""

from .elliptic import AsymptoticProfile, EllipticParams, SpectralCurve, \
    big_delta, elliptic_params
from .fredholm import TauEvaluation, abs_psi_sq, log_tau_2d, log_tau_hankel
from .geometry import (EllipseDomain, QuadratureRule2D, SolitonDensity,
                       cut_function_r, quadrature_2d, sample_uniform_paired,
                       schwarz_delta, segment_grid)
from .harness import (MatchingReport, RunConfig, load_config,
                      run_crosscheck, run_matching, run_shielding,
                      run_verify)
from .nsoliton import (SolitonRangeError, SpectralData, condense_2d,
                       condense_segment, gram_residue_check, log_tau_n,
                       psi_and_log_tau, psi_n)
from .special import elliptic_E, elliptic_K, jacobi_dn, theta3, theta4

__version__ = "0.1.0"

__all__ = [
    "AsymptoticProfile", "EllipseDomain", "EllipticParams",
    "MatchingReport", "QuadratureRule2D", "RunConfig", "SolitonDensity",
    "SolitonRangeError", "SpectralCurve", "SpectralData", "TauEvaluation",
    "abs_psi_sq", "big_delta", "condense_2d", "condense_segment",
    "cut_function_r", "elliptic_E", "elliptic_K", "elliptic_params",
    "gram_residue_check", "jacobi_dn", "load_config", "log_tau_2d",
    "log_tau_hankel", "log_tau_n", "psi_and_log_tau", "psi_n",
    "quadrature_2d", "run_crosscheck", "run_matching", "run_shielding",
    "run_verify", "sample_uniform_paired", "schwarz_delta", "segment_grid",
    "theta3", "theta4", "__version__",
]
