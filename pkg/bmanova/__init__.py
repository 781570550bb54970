"""beta-MANOVA sampler, analytic laws and goodness-of-fit harness."""
from bmanova.combinatorics import BetaParam, Partition
from bmanova.errors import (BmanovaError, ConvergenceError, DomainError, NumericalError,
                            ParameterError)
from bmanova.sampler import ManovaParams, RngStream

__version__ = "0.1.0"
