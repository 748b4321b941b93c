"""Ensemble weapon-detection pipeline (Python bindings)."""

from ._wdp import (
    ConfigError,
    DataError,
    Ensemble,
    NumericError,
    WdpError,
    aggregate_mean,
    class_names,
    confusion,
    export_synth,
    preprocess_frame,
    synth_generate,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Ensemble",
    "NumericError",
    "WdpError",
    "aggregate_mean",
    "class_names",
    "confusion",
    "export_synth",
    "preprocess_frame",
    "synth_generate",
]
