"""Transportation-mode recognition from smartphone motion sensors.

Pipeline stages: synthetic trace generation (datagen), resampling and
windowing (sigproc), time/frequency feature extraction (features),
random-forest feature selection (selection), from-scratch classifiers
(classifiers), the two-layer Bayes-fused framework (hierarchy), and a
cross-validation harness (evaluation). The ``modesense`` CLI wires the
stages together on disk artifacts.
"""

__version__ = "0.1.0"

from .datagen import GenSpec, ModeLabel, SensorTrace, generate_dataset, generate_trace

__all__ = [
    "GenSpec",
    "ModeLabel",
    "SensorTrace",
    "generate_dataset",
    "generate_trace",
    "__version__",
]
