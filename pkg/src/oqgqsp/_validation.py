"""Input validation helpers used by the estimators and public functions."""

import numbers

import numpy as np


def check_scalar(x, name, *, min_val=None, max_val=None, include_min=True,
                 include_max=True, integer=False):
    """Validate a finite scalar and return it as float (or int)."""
    kind = numbers.Integral if integer else numbers.Real
    if isinstance(x, bool) or not isinstance(x, kind):
        raise TypeError(f"{name} must be {'an integer' if integer else 'a real number'}, got {x!r}")
    if not np.isfinite(x):
        raise ValueError(f"{name} must be finite, got {x!r}")
    if min_val is not None:
        if x < min_val or (x == min_val and not include_min):
            op = ">=" if include_min else ">"
            raise ValueError(f"{name} must be {op} {min_val}, got {x!r}")
    if max_val is not None:
        if x > max_val or (x == max_val and not include_max):
            op = "<=" if include_max else "<"
            raise ValueError(f"{name} must be {op} {max_val}, got {x!r}")
    return int(x) if integer else float(x)


def check_vector(v, name, *, dtype=complex, ndim=1):
    arr = np.asarray(v, dtype=dtype)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_square(m, name):
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_normalized(psi, name="state", atol=1e-8):
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > atol:
        raise ValueError(f"{name} is not normalized (norm={nrm:.3e})")
    return psi


def check_laurent(coeffs, name="coefficients"):
    """Laurent coefficient vector c_{-d..d}; returns (array, d)."""
    c = check_vector(coeffs, name)
    if c.size % 2 != 1:
        raise ValueError(f"{name} must have odd length 2d+1, got {c.size}")
    return c, c.size // 2
