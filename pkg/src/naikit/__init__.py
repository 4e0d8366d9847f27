"""Constructive approximate-identity networks from activation functions."""

__version__ = "0.1.0"

from .activations import (  # noqa: E402
    ActivationError,
    ActivationSpec,
    custom_activation,
    eval_activation,
    generalized_sigmoid,
    get_activation,
    list_catalog,
    make_activation,
)
from .bfunction import (  # noqa: E402
    BFunction1D,
    BFunctionError,
    IntegrationError,
    abs_integral,
    build_bfunction,
    eval_bfunction,
    signed_integral,
    tail_mass,
)
from .composed import (  # noqa: E402
    ComposedB,
    ScaledAI,
    estimate_integrals,
    eval_composed,
    make_approximate_identity,
)
from .network import (  # noqa: E402
    LayeredNetwork,
    build_mc_network,
    build_quadrature_network_1d,
    error_budget,
    eval_network,
    export_network,
    import_network,
)
from .quadrature import Partition1D, riemann_sum, uniform_partition  # noqa: E402

__all__ = [name for name in dir() if not name.startswith("_")]
