"""Drug-pair synergy prediction from several drug representations.

Learners, representation handling, cross-validation and a greedy weighted
ensemble, all implemented on numpy.
"""
__version__ = "0.1.0"

from synergy._backend import BACKEND  # noqa: E402

__all__ = ["BACKEND", "__version__"]
