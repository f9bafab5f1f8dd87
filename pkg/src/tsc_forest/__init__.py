"""tsc-forest - transformational sparse coding forests."""

__version__ = "0.1.0"

from tsc_forest.forest import Forest
from tsc_forest.liegroup import build_generators
from tsc_forest.solver import feature_sign
from tsc_forest.training import Trainer, train

__all__ = ["Forest", "Trainer", "build_generators", "feature_sign", "train", "__version__"]
