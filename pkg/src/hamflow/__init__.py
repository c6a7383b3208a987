"""hamflow: learning the two-way map between driving fields and spin dynamics.

The package has three layers:

* ``hamflow.dynamics`` and ``hamflow.fields`` simulate driven spin systems
  and generate random driving fields;
* ``hamflow.neural`` is a self-contained recurrent network (stacked LSTM with
  feed-forward initial-state encoders) trained by exact backpropagation
  through time;
* ``hamflow.pipeline`` ties them together: dataset generation, bidirectional
  training, prediction, field inference, and desk-scale reproductions of the
  headline experiments, all driveable from the ``hamflow`` command line.
"""

__version__ = "0.1.0"

from . import dynamics, fields
from .errors import ConfigError, DomainError, HamflowError, NumericalError

__all__ = [
    "ConfigError",
    "DomainError",
    "HamflowError",
    "NumericalError",
    "dynamics",
    "fields",
    "__version__",
]
