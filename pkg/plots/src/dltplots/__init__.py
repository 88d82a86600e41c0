"""Figure generation for the DAG-ledger access-control simulator's CSVs."""

from .render import KINDS, SchemaError, cdf_points, render

__version__ = "0.1.0"
__all__ = ["KINDS", "SchemaError", "cdf_points", "render"]
