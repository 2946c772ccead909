"""Contact canonical frames on 3-manifolds.

Explicit models with frames {R, X1, X2} and scalars I, J, K; numerical
checks of the frame identities and curvature; Reeb dynamics; Conley-Zehnder
indices from the asymptotic operator; Sturm oscillation; toric rigidity
scans; and the K = 0 monodromy data.
"""

__version__ = "0.1.0"

from .core import ChartPoint, ClosedOrbitDescriptor, ContactModel, FrameSample, TangentVector, sample_points
from .errors import CFLError
from .models import MODEL_NAMES, ellipsoid_K, make_model

__all__ = [
    "__version__", "ChartPoint", "ClosedOrbitDescriptor", "ContactModel", "FrameSample", "TangentVector",
    "sample_points", "CFLError", "MODEL_NAMES", "ellipsoid_K", "make_model",
]
