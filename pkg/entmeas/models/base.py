from typing import Annotated, Any

import numpy as np
from pydantic import BaseModel, ConfigDict, PlainSerializer, PlainValidator

# Tolerances shared across modules.
HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
COMPLETENESS_TOL = 1e-10
NORMALIZATION_TOL = 1e-8
PPT_THRESHOLD = -1e-9


def _as_complex_matrix(value: Any) -> np.ndarray:
    """Accept an ndarray, nested complex lists, or nested ``[re, im]`` pairs."""
    if isinstance(value, np.ndarray):
        arr = value.astype(np.complex128, copy=False)
    else:
        raw = np.asarray(value)
        if raw.dtype != object and raw.ndim == 3 and raw.shape[-1] == 2 and not np.iscomplexobj(raw):
            arr = raw[..., 0].astype(np.float64) + 1j * raw[..., 1].astype(np.float64)
        else:
            arr = np.asarray(value, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    return arr


def _complex_to_pairs(arr: np.ndarray) -> list:
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def _as_real_array(value: Any) -> np.ndarray:
    return np.asarray(value, dtype=np.float64)


def _as_int_array(value: Any) -> np.ndarray:
    arr = np.asarray(value)
    if arr.size and not np.all(np.equal(np.mod(arr, 1), 0)):
        raise ValueError("counts must be integers")
    return arr.astype(np.int64)


ComplexMatrix = Annotated[
    np.ndarray,
    PlainValidator(_as_complex_matrix),
    PlainSerializer(_complex_to_pairs, return_type=list),
]
RealTensor = Annotated[
    np.ndarray,
    PlainValidator(_as_real_array),
    PlainSerializer(lambda arr: arr.tolist(), return_type=list),
]
IntTensor = Annotated[
    np.ndarray,
    PlainValidator(_as_int_array),
    PlainSerializer(lambda arr: arr.tolist(), return_type=list),
]


class ArrayModel(BaseModel):
    """Base for models that carry numpy arrays."""

    model_config = ConfigDict(arbitrary_types_allowed=True)
