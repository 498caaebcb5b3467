"""Contact-implicit trajectory optimization toolkit.

A closed-form, friction-cone-satisfying contact model embedded in a
configuration-only direct transcription, plus a reference NCP/PGS
time-stepping simulator used to validate it.  See README.md for the
scenario format and the command-line entry points.
"""

import jax

# Double precision throughout; the solvers and acceptance tolerances
# assume float64.
jax.config.update("jax_enable_x64", True)

from .contact import (  # noqa: E402
    ContactParams,
    ImpulseSet,
    contact_impulses,
    normal_impulse,
    smooth_max,
    smooth_norm,
    tangential_impulse,
)
from .dynamics import (  # noqa: E402
    ContactKinematics,
    bias_forces,
    contact_kinematics,
    mass_matrix,
)
from .models import (  # noqa: E402
    Configuration,
    FloatingBody,
    GeneralizedVelocity,
    PlanarHopper,
    ball_model,
    brick_model,
    hopper_model,
)
from .rotations import mrp_from_rotation, mrp_rate, mrp_to_rotation  # noqa: E402

__all__ = [
    "ContactParams",
    "ImpulseSet",
    "contact_impulses",
    "normal_impulse",
    "smooth_max",
    "smooth_norm",
    "tangential_impulse",
    "ContactKinematics",
    "bias_forces",
    "contact_kinematics",
    "mass_matrix",
    "Configuration",
    "FloatingBody",
    "GeneralizedVelocity",
    "PlanarHopper",
    "ball_model",
    "brick_model",
    "hopper_model",
    "mrp_from_rotation",
    "mrp_rate",
    "mrp_to_rotation",
]

__version__ = "0.1.0"
