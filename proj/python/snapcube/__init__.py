"""Snapshot interferometric 3D imaging: simulation and reconstruction core.

Arrays follow the library layout: images are (nx, ny) and cubes are
(nz, nx, ny) in C order, so the last axis (y) is fastest.
"""

from ._core import (
    ConfigError,
    IoError,
    NumericalError,
    SensingOperator,
    ValidationError,
    axial_resolution_um,
    decode_depth,
    dense_oracle,
    encode_depth,
    random_binary_aperture,
    read_array,
    run_dataset,
    shear,
    simulate,
    solve,
    theoretical_sensitivity_db,
    unshear,
    write_array,
    x_update,
)
from .container import load_container, read_header
from .dataset import Dataset, Sample

__all__ = [
    "ConfigError",
    "Dataset",
    "IoError",
    "NumericalError",
    "Sample",
    "SensingOperator",
    "ValidationError",
    "axial_resolution_um",
    "decode_depth",
    "dense_oracle",
    "encode_depth",
    "load_container",
    "random_binary_aperture",
    "read_array",
    "read_header",
    "run_dataset",
    "shear",
    "simulate",
    "solve",
    "theoretical_sensitivity_db",
    "unshear",
    "write_array",
    "x_update",
]
