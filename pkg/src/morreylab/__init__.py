"""morreylab: scale-weighted seminorms and Sobolev interpolation checks
on uniform grids, with numba-accelerated kernels and a numpy fallback."""

__version__ = "0.1.0"

from .families import (Concentration, Family, GaussianBump, ModulatedBump,
                       MultiBump, RandomFourier, SmoothPlateau,
                       family_from_dict)
from .grid import (Ball, DerivativeField, Domain, GridFunction, ball_average,
                   ball_members, derivative_field, lp_norm, read_grid, sample,
                   write_grid)
from .polyfit import FitResult, PolyBasis, best_polynomial
from .seminorms import (INF, CenterGrid, RadiusGrid, bmo_seminorm,
                        campanato_seminorm, gagliardo_energy,
                        gagliardo_pointwise, localized_maximal,
                        maximal_function, morrey_norm, riesz_potential,
                        riesz_potential_radial, sobolev_energy)
from .harness import (EvalCache, InequalityCase, RatioReport, evaluate_case,
                      default_matrix, default_named_cases, generate_corpus)

__all__ = [name for name in dir() if not name.startswith("_")]
