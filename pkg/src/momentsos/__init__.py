"""Moment/SOS relaxations for polynomial optimization.

Modules:
    poly     -- sparse multivariate polynomials over exact rationals or floats
    certify  -- problems, exact lower-bound certificates, verification, transforms
    relax    -- moment/SOS SDP assembly, hierarchy driver, minimizer extraction
    sdp      -- dense primal-dual interior-point semidefinite solver
    gallery  -- built-in example problems with frozen expected results
    cli      -- command-line interface (solve / verify / transform / suite)
"""

from .certify import (Certificate, EpsilonCertificate, EpsilonCertificateFamily,
                      PREORDERING, Problem, QMODULE, SosExpression, Verdict,
                      epsilon_certificate, gradient_problem, interpolants,
                      offset_polynomial, preordering_products, square_equalities,
                      verify_certificate)
from .poly import (EXACT, MonomialBasis, ParseError, Polynomial, basis,
                   basis_size, format_polynomial, parse_polynomial)
from .relax import (HierarchyOptions, HierarchyResult, MomentVector, OrderRecord,
                    assemble_moment_sdp, assemble_sos_sdp, default_order_range,
                    extract_minimizers, flat_truncation, run_hierarchy)
from .sdp import (LmiBlock, SdpProblem, SdpSolution, SolveOptions, export_sdpa,
                  solve)

__version__ = "0.1.0"

__all__ = [
    "Certificate", "EpsilonCertificate", "EpsilonCertificateFamily",
    "PREORDERING", "Problem", "QMODULE", "SosExpression", "Verdict",
    "epsilon_certificate", "gradient_problem", "interpolants",
    "offset_polynomial", "preordering_products", "square_equalities",
    "verify_certificate",
    "EXACT", "MonomialBasis", "ParseError", "Polynomial", "basis",
    "basis_size", "format_polynomial", "parse_polynomial",
    "HierarchyOptions", "HierarchyResult", "MomentVector", "OrderRecord",
    "assemble_moment_sdp", "assemble_sos_sdp", "default_order_range",
    "extract_minimizers", "flat_truncation", "run_hierarchy",
    "LmiBlock", "SdpProblem", "SdpSolution", "SolveOptions", "export_sdpa",
    "solve",
    "__version__",
]
