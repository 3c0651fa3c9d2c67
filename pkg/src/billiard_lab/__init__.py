"""Open dispersing billiards: orbits, holonomies, displacement and length-spectrum rigidity."""

from .geometry import (BumpPerturbation, GeometryError, Table, apply_isometry, build_table,
                       check_non_eclipse, curvature_jet, perturb_boundary, table_config, tri_table)
from .dynamics import (EscapeError, FlowPoint, PhasePoint, TangencyError, billiard_map,
                       coordinate_jacobian, jacobi_perp_propagator)
from .symbolic import HeteroclinicCode, SymbolError, Word, bracket, bridge_word, enumerate_words
from .orbits import (ConvergenceError, PeriodicOrbit, marked_length_spectrum, solve_anchored_segment,
                     solve_periodic_orbit)
from .displacement import (Quadrilateral, full_report, quadrilateral_area, small_quad_asymptotics,
                           standard_quad, temporal_displacement)
from .rigidity import (bowen_dimension, conjugacy_consequence_report, gap_perturbation_experiment,
                       iso_length_spectral_report, match_periodic_orbits, trace_cover,
                       unstable_density_ratio)
from .tablefile import load_table, save_table

__version__ = "0.1.0"
