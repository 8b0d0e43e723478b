"""tacdiff: depth-conditioned diffusion for vision-based tactile images.

Pipeline: a desk-scale tactile sensor simulator renders gel-penetration
depth maps and oracle "real" tactile images; a conditional diffusion model
learns to translate depth into realistic tactile foregrounds; a braille
classification harness measures how much the generated data closes the gap
between training on simulation and testing on "real" images.
"""

from tacdiff.diffusion import (
    NoiseSchedule,
    ancestral_sample,
    ancestral_sample_batch,
    estimate_y0,
    forward_sample,
    iterative_forward,
    make_linear_schedule,
    posterior_params,
    reverse_step,
)

__version__ = "0.1.0"
