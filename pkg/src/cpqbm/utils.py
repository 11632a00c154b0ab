import attr
import numpy as np

from .error_types import DimensionMismatch

# Operator identities only hold away from the truncation corner. Checks and
# comparisons are made on levels INTERIOR_LOW_MARGIN .. dim - INTERIOR_HIGH_MARGIN - 1.
INTERIOR_LOW_MARGIN = 2
INTERIOR_HIGH_MARGIN = 2


@attr.s
class ConfigSource(object):
    """
    Bundle of data used to indicate a specific location within a scenario
    config file, down to the key level.
    """
    filename = attr.ib()
    line = attr.ib()
    key = attr.ib(default=None)

    def display_location(self):
        if self.key is None:
            return "{0}:{1}".format(self.filename, self.line)
        return "{0}:{1}: {2}".format(self.filename, self.line, self.key)


def dagger(a):
    return a.conj().T


def check_same_dim(*mats):
    shapes = set(m.shape for m in mats)
    if len(shapes) != 1:
        raise DimensionMismatch(
            "Operator dimensions do not match: {0}".format(sorted(shapes)))
    shape = shapes.pop()
    if len(shape) != 2 or shape[0] != shape[1]:
        raise DimensionMismatch("Operator is not square: {0}".format(shape))
    return shape[0]


def interior_slice(dim):
    return slice(INTERIOR_LOW_MARGIN, dim - INTERIOR_HIGH_MARGIN)


def interior_block(mat):
    s = interior_slice(mat.shape[0])
    return mat[s, s]


def leading_block(mat):
    """
    Everything except the last row and column, where products of truncated
    ladder matrices are defective.
    """
    n = mat.shape[0] - 1
    return mat[:n, :n]


def hermiticity_defect(mat):
    return np.max(np.abs(mat - dagger(mat))) if mat.size else 0.0


def hermitize(mat):
    return 0.5 * (mat + dagger(mat))


def max_abs(mat):
    return float(np.max(np.abs(mat))) if mat.size else 0.0


def relative_deviation(a, b):
    """
    Frobenius norm of a - b relative to the norm of b (absolute if b is zero).
    """
    scale = np.linalg.norm(b)
    diff = np.linalg.norm(a - b)
    if scale == 0.0:
        return float(diff)
    return float(diff / scale)
