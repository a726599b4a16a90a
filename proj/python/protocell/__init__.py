"""Python bindings for the protocell cathode transport simulator."""

from ._protocell import (
    ConfigError,
    ConvergenceError,
    DivergenceError,
    Error,
    Formulation,
    GeometryKind,
    Kinetics,
    ModelConfig,
    ResourceError,
    Solution,
    ValidationError,
    __version__,
    field_dump,
    gci,
    mesh_summary,
    mixed_order_extrapolate,
    observed_order,
    response_csv,
    responses,
    richardson_extrapolate,
    solve,
    sweep,
)

__all__ = [name for name in dir() if not name.startswith("_")]
