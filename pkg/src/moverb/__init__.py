"""Moving-sound-source reverberation engine.

Renders the reverberant signal a listener hears while a sound source
travels through a rectangular room.  The room response is decomposed
into mirror-image sources whose per-sample delays drive a polynomial
fractional-delay interpolator; distant images follow a decimated copy
of the trajectory so the distance work scales with the update rate
instead of the audio rate.
"""

from ._kernels import using_numba
from .farrow import FarrowFilter, design, split_delay
from .reference import compare, full_rate_moving_oracle, splice_baseline, static_rir
from .room import Room, enumerate_images, estimate_image_count
from .synth import BudgetError, SynthesisConfig, cost_report, render
from .trajectory import Trajectory, TrajectorySpec, generate

__version__ = "0.1.0"

__all__ = [
    "BudgetError",
    "FarrowFilter",
    "Room",
    "SynthesisConfig",
    "Trajectory",
    "TrajectorySpec",
    "compare",
    "cost_report",
    "design",
    "enumerate_images",
    "estimate_image_count",
    "full_rate_moving_oracle",
    "generate",
    "render",
    "splice_baseline",
    "split_delay",
    "static_rir",
    "using_numba",
    "__version__",
]
