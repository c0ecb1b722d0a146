"""Link-level simulator for the uplink of a cell-free massive MIMO network
with iterative detection and decoding and CPU-side LLR refinement."""

__version__ = "0.1.0"

from .errors import CfiddError, ConfigError, NumericalError  # noqa: F401
