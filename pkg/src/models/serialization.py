"""JSON helpers for complex arrays (stored as [re, im] pairs)."""

from __future__ import annotations

from typing import Any, Iterable, List

import numpy as np
from numpy.typing import NDArray


def complex_to_pairs(values: Iterable[complex] | NDArray[np.complex128]) -> List[List[float]]:
    array = np.asarray(values, dtype=np.complex128).ravel()
    return [[float(v.real), float(v.imag)] for v in array]


def pairs_to_complex(pairs: Iterable[Any]) -> NDArray[np.complex128]:
    """Accept [[re, im], ...] or plain real numbers."""

    values = []
    for entry in pairs:
        if isinstance(entry, (list, tuple)):
            if len(entry) != 2:
                raise ValueError(f"Complex entries must be [re, im] pairs, got {entry!r}")
            values.append(complex(float(entry[0]), float(entry[1])))
        else:
            values.append(complex(float(entry), 0.0))
    return np.asarray(values, dtype=np.complex128)


def matrix_to_pairs(matrix: NDArray[np.complex128]) -> List[List[List[float]]]:
    return [complex_to_pairs(row) for row in np.asarray(matrix, dtype=np.complex128)]
