"""Factor tree copula models for ordinal item-response data."""

__version__ = "0.1.0"

from .copula import (BVN, FRANK, GUMBEL, INDEPENDENCE, SGUMBEL, T2, T5, CopulaFamily,  # noqa: E402
                     cdf, cond_cdf, family_from_name, inv_cond_cdf, tau_to_theta, theta_to_tau)
from .data import CutpointSet, ResponseMatrix, estimate_cutpoints, read_csv, write_csv  # noqa: E402
from .diagnose import VuongResult, discrepancies, model_corr_matrix, vuong  # noqa: E402
from .errors import (BoundaryError, DataError, DomainError, FactorTreeError,  # noqa: E402
                     InitializationError, InvalidInputError, NumericError)
from .estimate import (FitOptions, FitResult, fit_ifm, standard_errors, transform,  # noqa: E402
                       untransform)
from .likelihood import (loglik, pmf, pmf_1factor, pmf_1factor_tree, pmf_2factor,  # noqa: E402
                         pmf_2factor_tree, pmf_vine)
from .model import EdgeSet, ModelSpec, ParamVector  # noqa: E402
from .quadrature import QuadratureRule, gauss_legendre_unit  # noqa: E402
from .select import (loadings_normal_ogive, mst, partial_corr, polychoric,  # noqa: E402
                     polychoric_matrix, select_families, select_tree)
from .semicorr import observed_semi_corr, theoretical_semi_corr  # noqa: E402
from .simulate import SimDesign, draw, builtin_designs  # noqa: E402
