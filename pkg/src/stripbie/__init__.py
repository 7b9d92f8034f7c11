"""Boundary-integral solver for heat conduction in a strip with inclusions."""

from .bie import (MappedBoundary, NystromOperators, RHPData, SolveResult, apply_M, apply_N,
                  build_rhp, discretize, solve_ie)
from .effective import (EffectiveResult, cma_conductors, cma_insulators, cma_three_phase,
                        lambda_y, trig_interpolate)
from .errors import (ConvergenceError, DomainError, MaskedPointError, PackingError,
                     ResolutionError, SceneError, SingularityError, StripBIEError)
from .geometry import (Circle, Ellipse, Inclusion, InclusionKind, RandomSceneSpec, StripScene,
                       concentration_circles, concentration_ellipses, example_scene,
                       random_scene, read_scene, reflect_x, reflect_y, scene_from_text,
                       scene_to_text, slit_density, write_scene)
from .potential import (FieldGrid, GridSpec, Solution, cauchy_eval, complex_flux,
                        evaluate_grid, read_field_grid, solve_scene, temperature,
                        write_field_grid)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
