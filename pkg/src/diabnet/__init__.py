"""diabnet: tabular deep-learning pipeline for diabetes detection.

Class-balances with a variational autoencoder, lifts 8 features to 400
with a sparse autoencoder, classifies with an MLP or a CNN over the
20x20 reshape (separately or jointly trained), and compares runs with
one-way ANOVA + Tukey HSD.
"""

from .optim import Adam
from .rng import Rng
from .tensor import Tape, Tensor, backward

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "Rng",
    "Tape",
    "Tensor",
    "backward",
    "__version__",
]
