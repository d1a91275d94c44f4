"""JSON document schemas used by the command-line interface.

A system document holds n, m, R, one coupling variant (raw C, or complex
Lq/Lp as separate real and imaginary arrays), one scattering variant (raw
Sigma, or complex S), and optional tolerance overrides.  A decomposition
report holds the transformation, the transformed matrices, the state
labels, and the residual summary.  All floats serialize with the shortest
round-trip representation, so identical inputs give byte-identical output.
"""

from __future__ import annotations

import json

import numpy as np

from . import __version__
from .errors import DocumentError
from .kalman import KalmanDecomposition
from .linalg import TolerancePolicy
from .model import PhysicalSpec, QuadratureSystem, build_system, from_physical

SCHEMA_VERSION = 1


def _require(data: dict, field: str, kind=None):
    if field not in data:
        raise DocumentError(field, "missing")
    value = data[field]
    if kind is not None and not isinstance(value, kind):
        raise DocumentError(field, f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def _array(data: dict, field: str, shape: tuple[int, int]) -> np.ndarray:
    raw = _require(data, field, list)
    try:
        arr = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DocumentError(field, f"not a numeric array: {exc}") from None
    if arr.ndim != 2 or arr.shape != shape:
        raise DocumentError(field, f"expected shape {shape}, got {arr.shape if arr.ndim == 2 else 'non-2D'}")
    if not np.isfinite(arr).all():
        raise DocumentError(field, "contains non-finite entries")
    return arr


def matrix_to_lists(arr) -> list[list[float]]:
    return [[float(x) for x in row] for row in np.asarray(arr)]


def canonical_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def system_to_document(sys: QuadratureSystem, tolerance: float | None = None) -> dict:
    doc = {
        "schema": SCHEMA_VERSION,
        "n": sys.n,
        "m": sys.m,
        "R": matrix_to_lists(sys.R),
        "coupling": {"C": matrix_to_lists(sys.C)},
        "scattering": {"Sigma": matrix_to_lists(sys.Sigma)},
    }
    if tolerance is not None:
        doc["tolerance"] = float(tolerance)
    return doc


def physical_to_document(spec: PhysicalSpec, R, tolerance: float | None = None) -> dict:
    doc = {
        "schema": SCHEMA_VERSION,
        "n": spec.n,
        "m": spec.m,
        "R": matrix_to_lists(R),
        "coupling": {
            "Lq_re": matrix_to_lists(spec.Lq.real),
            "Lq_im": matrix_to_lists(spec.Lq.imag),
            "Lp_re": matrix_to_lists(spec.Lp.real),
            "Lp_im": matrix_to_lists(spec.Lp.imag),
        },
        "scattering": {
            "S_re": matrix_to_lists(spec.S.real),
            "S_im": matrix_to_lists(spec.S.imag),
        },
    }
    if tolerance is not None:
        doc["tolerance"] = float(tolerance)
    return doc


def parse_system_document(data) -> tuple[QuadratureSystem, float | None]:
    """Validate a system document and build the system it describes.

    Returns the system together with the document's tolerance override,
    if present.  Raises DocumentError naming the offending field.
    """
    if not isinstance(data, dict):
        raise DocumentError("document", "top level must be a JSON object")
    schema = _require(data, "schema", int)
    if schema != SCHEMA_VERSION:
        raise DocumentError("schema", f"unsupported version {schema}, expected {SCHEMA_VERSION}")
    n = _require(data, "n", int)
    m = _require(data, "m", int)
    if n < 1 or m < 1:
        raise DocumentError("n" if n < 1 else "m", "must be a positive integer")
    R = _array(data, "R", (2 * n, 2 * n))

    coupling = _require(data, "coupling", dict)
    raw_c = "C" in coupling
    physical_c = any(key in coupling for key in ("Lq_re", "Lq_im", "Lp_re", "Lp_im"))
    if raw_c == physical_c:
        raise DocumentError("coupling", "exactly one of the C or Lq/Lp variants must be present")

    scattering = _require(data, "scattering", dict)
    raw_s = "Sigma" in scattering
    physical_s = any(key in scattering for key in ("S_re", "S_im"))
    if raw_s == physical_s:
        raise DocumentError("scattering", "exactly one of the Sigma or S variants must be present")
    if raw_c != raw_s:
        raise DocumentError("coupling", "coupling and scattering variants must match (both raw or both physical)")

    tolerance = data.get("tolerance")
    if tolerance is not None:
        if not isinstance(tolerance, (int, float)) or not np.isfinite(tolerance) or tolerance <= 0:
            raise DocumentError("tolerance", "must be a positive finite number")
        tolerance = float(tolerance)

    try:
        if raw_c:
            C = _array(coupling, "C", (2 * m, 2 * n))
            Sigma = _array(scattering, "Sigma", (2 * m, 2 * m))
        else:
            Lq = (_array(coupling, "Lq_re", (m, n))
                  + 1j * _array(coupling, "Lq_im", (m, n)))
            Lp = (_array(coupling, "Lp_re", (m, n))
                  + 1j * _array(coupling, "Lp_im", (m, n)))
            S = (_array(scattering, "S_re", (m, m))
                 + 1j * _array(scattering, "S_im", (m, m)))
            C, Sigma = from_physical(PhysicalSpec(S=S, Lq=Lq, Lp=Lp))
        system = build_system(R, C, Sigma)
    except DocumentError:
        raise
    except Exception as exc:
        raise DocumentError("document", str(exc)) from exc
    if system.n != n or system.m != m:
        raise DocumentError("n", "matrix shapes disagree with the declared mode/field counts")
    return system, tolerance


def decomposition_to_report(dec: KalmanDecomposition, mode: str,
                            policy: TolerancePolicy) -> dict:
    checks = dec.residual_report
    return {
        "schema": SCHEMA_VERSION,
        "tool_version": __version__,
        "mode": mode,
        "tolerance_policy": {"scale": policy.scale, "absolute_floor": policy.absolute_floor},
        "dims": {"k": dec.k, "l": dec.l, "d": dec.d},
        "labels": list(dec.labels),
        "V": matrix_to_lists(dec.V),
        "A_hat": matrix_to_lists(dec.A_hat),
        "B_hat": matrix_to_lists(dec.B_hat),
        "C_hat": matrix_to_lists(dec.C_hat),
        "D": matrix_to_lists(dec.D),
        "residuals": {
            "symplecticity": checks.ccr_residual,
            "pattern": checks.pattern_residual,
            "reconstruction": dec.factorization.residual,
        },
    }


def parse_report(data) -> dict:
    """Validate the shape of a decomposition report and return its pieces."""
    if not isinstance(data, dict):
        raise DocumentError("report", "top level must be a JSON object")
    schema = _require(data, "schema", int)
    if schema != SCHEMA_VERSION:
        raise DocumentError("schema", f"unsupported version {schema}, expected {SCHEMA_VERSION}")
    dims = _require(data, "dims", dict)
    k = _require(dims, "k", int)
    l = _require(dims, "l", int)
    d = _require(dims, "d", int)
    if min(k, l, d) < 0:
        raise DocumentError("dims", "k, l, d must be nonnegative")
    n = k + l + d
    out = {
        "k": k, "l": l, "d": d,
        "labels": _require(data, "labels", list),
        "V": _array(data, "V", (2 * n, 2 * n)),
        "A_hat": _array(data, "A_hat", (2 * n, 2 * n)),
    }
    for field in ("B_hat", "C_hat", "D"):
        raw = _require(data, field, list)
        try:
            arr = np.array(raw, dtype=float)
        except (TypeError, ValueError) as exc:
            raise DocumentError(field, f"not a numeric array: {exc}") from None
        if arr.ndim != 2 or not np.isfinite(arr).all():
            raise DocumentError(field, "must be a finite 2-D array")
        out[field] = arr
    residuals = _require(data, "residuals", dict)
    for field in ("symplecticity", "pattern", "reconstruction"):
        value = _require(residuals, field, (int, float))
        if not np.isfinite(value):
            raise DocumentError(f"residuals.{field}", "must be finite")
    out["residuals"] = residuals
    if len(out["labels"]) != 2 * n:
        raise DocumentError("labels", f"expected {2 * n} labels, got {len(out['labels'])}")
    return out
