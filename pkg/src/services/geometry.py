"""Index-set machinery: difference sets, selections and Cantor arrays."""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.logger import get_logger
from src.models.arrays import CompressionReport, ConditionCheck, IndexSet, SelectionOperator
from src.services.core_linalg import ShapeError

logger = get_logger()

MAX_INDEX = int(np.iinfo(np.intp).max)
# 2**MAX_CANTOR_ELEMENTS_LOG2 elements is the largest array we materialize
MAX_CANTOR_ELEMENTS_LOG2 = 24


class CapacityError(OverflowError):
    """Raised when a construction does not fit the index type or memory budget."""


def difference_set(index_set: IndexSet) -> IndexSet:
    """Nonnegative pairwise differences {i1 - i2 >= 0}."""

    if len(index_set) == 0:
        raise ValueError("Difference set of an empty index set is undefined")
    values = index_set.as_array()
    lags = values[:, None] - values[None, :]
    return IndexSet(tuple(int(v) for v in np.unique(lags[lags >= 0])), index_set.ambient)


def cantor_array(order: int) -> IndexSet:
    """C_1 = {0, 1}; C_{k+1} = C_k U (C_k + 2 * 3^(k-1)).

    |C_order| = 2^order and the aperture is 3^(order-1) + 1.
    """

    if order < 1:
        raise ValueError(f"Cantor order must be at least 1, got {order}")
    if 3 ** (order - 1) + 1 > MAX_INDEX:
        raise CapacityError(f"Cantor order {order} overflows the index type")
    if order > MAX_CANTOR_ELEMENTS_LOG2:
        raise CapacityError(f"Cantor order {order} has 2^{order} elements, too many to materialize")

    elements = np.array([0, 1], dtype=np.intp)
    for k in range(1, order):
        elements = np.concatenate([elements, elements + 2 * 3 ** (k - 1)])
    return IndexSet(tuple(int(v) for v in elements), 3 ** (order - 1) + 1)


def ula(n: int) -> IndexSet:
    """Uniform linear array {0, ..., n-1}."""
    return IndexSet.full(n)


def is_complete(array: IndexSet) -> bool:
    """True iff the difference co-array covers every lag 0, ..., N-1."""

    if len(array) == 0:
        return False
    return difference_set(array).indices == tuple(range(array.ambient))


def compression_ratio(array: IndexSet) -> float:
    """log|J| / log N; approaches log 2 / log 3 for Cantor arrays."""

    if array.ambient < 2 or len(array) < 1:
        return 1.0
    return math.log(len(array)) / math.log(array.ambient)


def select(op: SelectionOperator, x: ArrayLike) -> NDArray[np.complex128]:
    vector = np.asarray(x, dtype=np.complex128)
    if vector.ndim != 1 or vector.shape[0] != op.cols:
        raise ShapeError(f"Selection expects a vector of length {op.cols}, got shape {vector.shape}")
    return vector[op.source.as_array()]


def embed(op: SelectionOperator, v: ArrayLike) -> NDArray[np.complex128]:
    """P^H v: scatter into a zero vector of the ambient length."""

    values = np.asarray(v, dtype=np.complex128)
    if values.ndim != 1 or values.shape[0] != op.rows:
        raise ShapeError(f"Embedding expects a vector of length {op.rows}, got shape {values.shape}")
    out = np.zeros(op.cols, dtype=np.complex128)
    out[op.source.as_array()] = values
    return out


def selection_matrix(op: SelectionOperator) -> NDArray[np.complex128]:
    matrix = np.zeros((op.rows, op.cols), dtype=np.complex128)
    matrix[np.arange(op.rows), op.source.as_array()] = 1.0
    return matrix


def validate_compression(compression: IndexSet, omega: IndexSet, p: int) -> CompressionReport:
    """Check 0 in I, difference set of I inside Omega, and p < |I|."""

    report = CompressionReport(max_recoverable_sources=max(len(compression) - 1, 0))

    has_zero = 0 in compression
    report.checks.append(ConditionCheck("0 in I", has_zero, "" if has_zero else "compression set omits index 0"))

    if len(compression) > 0:
        missing = difference_set(compression).missing_from(omega)
    else:
        missing = []
    report.missing_lags = missing
    report.checks.append(
        ConditionCheck(
            "difference set of I within Omega",
            not missing,
            "" if not missing else f"lags missing from Omega: {missing}",
        )
    )

    fewer = p < len(compression)
    report.checks.append(ConditionCheck("p < M", fewer, "" if fewer else f"p={p}, M={len(compression)}"))

    if not report.passed:
        logger.debug(f"Compression hypotheses not met: {report.failures()}")
    return report
