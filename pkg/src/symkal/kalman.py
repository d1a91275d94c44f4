"""Kalman decomposition of a quadrature system by a symplectic state change.

The observability stack is factored as Q E Z^{-1}; the state transformation
V = Z^{-1} is symplectic, so the transformed system is again a valid
quadrature model, and the canonical sparsity of E forces the transformed
(A, B, C) into a block pattern that separates the four controllability and
observability classes while keeping conjugate coordinate pairs together.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConsistencyError,
    RefinementRejectedError,
    StructureError,
    ValidationError,
)
from .factorization import (
    CanonicalE,
    SymplecticFactorization,
    one_sided_symplectic_svd,
)
from .linalg import (
    DEFAULT_POLICY,
    EPS,
    SubspaceBasis,
    TolerancePolicy,
    as_matrix,
    is_symplectic,
    jmat,
    numerical_rank,
    orthonormal_columns,
    principal_angles,
    readonly,
    sharp_adjoint,
)
from .model import QuadratureSystem, krylov_matrices

LABEL_CO = "co"
LABEL_NCO = "nco"
LABEL_CNO = "cno"
LABEL_NCNO = "ncno"

LABEL_MEANINGS = {
    LABEL_CO: "controllable and observable",
    LABEL_NCO: "uncontrollable, observable",
    LABEL_CNO: "controllable, unobservable",
    LABEL_NCNO: "uncontrollable and unobservable",
}

# Zero blocks of the transformed matrices on the 6-way grid
# (q_a, q_b, q_c, p_a, p_b, p_c) with block sizes (k, l, d, k, l, d).
A_ZERO_BLOCKS = (
    (0, 2), (0, 4), (0, 5),
    (1, 0), (1, 2), (1, 3), (1, 4), (1, 5),
    (2, 0), (2, 3), (2, 4),
    (3, 2), (3, 4), (3, 5),
    (5, 0), (5, 3), (5, 4),
)
B_ZERO_BLOCK_ROWS = (1, 2, 5)
C_ZERO_BLOCK_COLS = (2, 4, 5)

_CLASSICAL_BLOCKS = {
    "A_co": ((0, 3), (0, 3)),
    "A_nco": ((1,), (1,)),
    "A_cno": ((4,), (4,)),
    "A_ncno": ((2, 5), (2, 5)),
    "A_13": ((0, 3), (1,)),
    "A_21": ((4,), (0, 3)),
    "A_23": ((4,), (1,)),
    "A_24": ((4,), (2, 5)),
    "A_43": ((2, 5), (1,)),
    "B_co": ((0, 3), None),
    "B_cno": ((4,), None),
    "C_co": (None, (0, 3)),
    "C_nco": (None, (1,)),
}


def state_labels(k: int, l: int, d: int) -> tuple[str, ...]:
    """Per-state classification in the (q_a, q_b, q_c, p_a, p_b, p_c) order."""
    return tuple([LABEL_CO] * k + [LABEL_NCO] * l + [LABEL_NCNO] * d
                 + [LABEL_CO] * k + [LABEL_CNO] * l + [LABEL_NCNO] * d)


def block_slices(k: int, l: int, d: int) -> list[slice]:
    sizes = (k, l, d, k, l, d)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    return [slice(int(offsets[i]), int(offsets[i + 1])) for i in range(6)]


def pattern_residuals(A_hat, B_hat, C_hat, k: int, l: int, d: int) -> tuple[float, float, float]:
    """Largest magnitude inside each set of mandated zero blocks."""
    slices = block_slices(k, l, d)
    a_max = 0.0
    for i, j in A_ZERO_BLOCKS:
        piece = A_hat[slices[i], slices[j]]
        if piece.size:
            a_max = max(a_max, float(np.max(np.abs(piece))))
    b_max = max((float(np.max(np.abs(B_hat[slices[i], :])))
                 for i in B_ZERO_BLOCK_ROWS if B_hat[slices[i], :].size), default=0.0)
    c_max = max((float(np.max(np.abs(C_hat[:, slices[j]])))
                 for j in C_ZERO_BLOCK_COLS if C_hat[:, slices[j]].size), default=0.0)
    return a_max, b_max, c_max


@dataclass(frozen=True)
class DecompositionChecks:
    """Residuals and oracle comparisons for one decomposition."""

    ccr_residual: float
    ccr_ok: bool
    pattern_a: float
    pattern_b: float
    pattern_c: float
    pattern_scale: float
    pattern_ok: bool
    controllable_angle: float
    unobservable_angle: float
    subspaces_ok: bool
    k: int
    l: int
    d: int
    k_oracle: int
    l_oracle: int
    counts_ok: bool

    @property
    def pattern_residual(self) -> float:
        return max(self.pattern_a, self.pattern_b, self.pattern_c)

    @property
    def passed(self) -> bool:
        return self.ccr_ok and self.pattern_ok and self.subspaces_ok and self.counts_ok

    def as_dict(self) -> dict:
        return {
            "ccr_residual": self.ccr_residual,
            "ccr_ok": self.ccr_ok,
            "pattern_a": self.pattern_a,
            "pattern_b": self.pattern_b,
            "pattern_c": self.pattern_c,
            "pattern_scale": self.pattern_scale,
            "pattern_ok": self.pattern_ok,
            "controllable_angle": self.controllable_angle,
            "unobservable_angle": self.unobservable_angle,
            "subspaces_ok": self.subspaces_ok,
            "k": self.k,
            "l": self.l,
            "d": self.d,
            "k_oracle": self.k_oracle,
            "l_oracle": self.l_oracle,
            "counts_ok": self.counts_ok,
        }


@dataclass(frozen=True)
class KalmanDecomposition:
    """A symplectic V with the transformed system and state classification.

    State ordering after the transformation is (q_a, q_b, q_c, p_a, p_b, p_c)
    with block sizes (k, l, d, k, l, d); conjugate pairs stay aligned, and
    the q_b block is conjugate to the p_b block.
    """

    system: QuadratureSystem
    factorization: SymplecticFactorization
    V: np.ndarray
    k: int
    l: int
    d: int
    A_hat: np.ndarray
    B_hat: np.ndarray
    C_hat: np.ndarray
    D: np.ndarray
    labels: tuple[str, ...]
    residual_report: DecompositionChecks

    def __post_init__(self):
        for name in ("V", "A_hat", "B_hat", "C_hat", "D"):
            object.__setattr__(self, name, readonly(getattr(self, name)))

    @property
    def n(self) -> int:
        return self.system.n

    def v_inverse(self) -> np.ndarray:
        """Exact inverse of the symplectic V via the sharp adjoint."""
        return sharp_adjoint(self.V)

    def classical_block(self, name: str) -> np.ndarray:
        """Named view into A_hat/B_hat/C_hat in classical grouping.

        Recognized names: A_co, A_nco, A_cno, A_ncno, A_13, A_21, A_23,
        A_24, A_43, B_co, B_cno, C_co, C_nco.
        """
        if name not in _CLASSICAL_BLOCKS:
            raise KeyError(f"unknown block {name!r}")
        rows, cols = _CLASSICAL_BLOCKS[name]
        slices = block_slices(self.k, self.l, self.d)

        def gather(mat, row_blocks, col_blocks):
            row_idx = np.concatenate([np.arange(s.start, s.stop) for s in
                                      (slices[i] for i in row_blocks)]) if row_blocks else None
            col_idx = np.concatenate([np.arange(s.start, s.stop) for s in
                                      (slices[j] for j in col_blocks)]) if col_blocks else None
            if row_idx is None:
                return mat[:, col_idx]
            if col_idx is None:
                return mat[row_idx, :]
            return mat[np.ix_(row_idx, col_idx)]

        if name.startswith("A"):
            return gather(self.A_hat, rows, cols)
        if name.startswith("B"):
            return gather(self.B_hat, rows, None)
        return gather(self.C_hat, None, cols)


def _transformed(sys: QuadratureSystem, V: np.ndarray):
    V_inv = sharp_adjoint(V)
    return V @ sys.A @ V_inv, V @ sys.B, sys.C @ V_inv, sys.D


def _count_oracles(obs: np.ndarray, n: int, policy) -> tuple[int, int]:
    M = obs @ jmat(n) @ obs.T
    sv_o = np.linalg.svd(obs, compute_uv=False)
    sigma = float(sv_o[0]) if sv_o.size else 0.0
    sv_m = np.linalg.svd(M, compute_uv=False)
    cut_m = policy.cutoff(M.shape, float(sv_m[0]) if sv_m.size else 0.0,
                          floor=max(M.shape[0], 2 * n) * EPS * sigma * sigma)
    k2 = int(np.sum(sv_m > cut_m))
    rank_o = int(np.sum(sv_o > policy.cutoff(obs.shape, sigma)))
    return k2 // 2, rank_o - k2


def class_dimension_oracles(sys: QuadratureSystem,
                            policy: TolerancePolicy | None = None) -> tuple[int, int]:
    """Independent (k, l) for a system: half the rank of the form carried by
    the observability stack, and its rank beyond those paired directions."""
    policy = policy or DEFAULT_POLICY
    obs = np.asarray(krylov_matrices(sys, variant="jr").observability)
    return _count_oracles(obs, sys.n, policy)


def _run_checks(sys: QuadratureSystem, V: np.ndarray, A_hat, B_hat, C_hat,
                k: int, l: int, d: int, tol: float, policy) -> DecompositionChecks:
    n = sys.n
    J = jmat(n)
    ccr_residual = float(np.linalg.norm(V @ J @ V.T - J))
    pattern_a, pattern_b, pattern_c = pattern_residuals(A_hat, B_hat, C_hat, k, l, d)
    pattern_scale = tol * (1.0 + float(np.linalg.norm(A_hat)))
    pattern_ok = max(pattern_a, pattern_b, pattern_c) <= pattern_scale

    kry = krylov_matrices(sys, variant="jr")
    obs = np.asarray(kry.observability)
    ctl = np.asarray(kry.controllability)
    controllable = numerical_rank(ctl, policy).image
    unobservable = numerical_rank(obs, policy).kernel

    V_inv = sharp_adjoint(V)
    ctl_slots = list(range(k)) + list(range(n, n + k + l))
    unobs_slots = list(range(k + l, n)) + list(range(n + k, 2 * n))
    ctl_span = SubspaceBasis(orthonormal_columns(V_inv[:, ctl_slots], policy))
    unobs_span = SubspaceBasis(orthonormal_columns(V_inv[:, unobs_slots], policy))

    angle_tol = 1e-7
    if controllable.dim == ctl_span.dim:
        controllable_angle = (float(np.max(principal_angles(controllable, ctl_span)))
                              if controllable.dim else 0.0)
        ctl_ok = controllable_angle <= angle_tol
    else:
        controllable_angle = float(np.pi / 2)
        ctl_ok = False
    if unobservable.dim == unobs_span.dim:
        unobservable_angle = (float(np.max(principal_angles(unobservable, unobs_span)))
                              if unobservable.dim else 0.0)
        unobs_ok = unobservable_angle <= angle_tol
    else:
        unobservable_angle = float(np.pi / 2)
        unobs_ok = False

    k_oracle, l_oracle = _count_oracles(obs, n, policy)
    return DecompositionChecks(
        ccr_residual=ccr_residual,
        ccr_ok=ccr_residual <= 1e-9,
        pattern_a=pattern_a,
        pattern_b=pattern_b,
        pattern_c=pattern_c,
        pattern_scale=pattern_scale,
        pattern_ok=pattern_ok,
        controllable_angle=controllable_angle,
        unobservable_angle=unobservable_angle,
        subspaces_ok=ctl_ok and unobs_ok,
        k=k,
        l=l,
        d=d,
        k_oracle=k_oracle,
        l_oracle=l_oracle,
        counts_ok=(k_oracle == k) and (l_oracle == l),
    )


def kalman_decompose(sys: QuadratureSystem, policy: TolerancePolicy | None = None,
                     mode: str = "strict", tol: float = 1e-8) -> KalmanDecomposition:
    """Decompose a system into its four controllability/observability classes.

    Factors the observability stack, takes V = Z^{-1}, and verifies the
    block-zero pattern, the symplecticity of V, and agreement of the state
    classification with rank oracles computed on the untransformed system.
    A ConsistencyError (with the full report attached) is raised instead of
    returning a silently inconsistent decomposition.
    """
    policy = policy or DEFAULT_POLICY
    obs = np.asarray(krylov_matrices(sys, variant="jr").observability)
    fact = one_sided_symplectic_svd(obs, policy=policy, mode=mode)
    n = sys.n
    k, l = fact.E.k, fact.E.l
    d = n - k - l
    V = sharp_adjoint(fact.Z)
    A_hat, B_hat, C_hat, D = _transformed(sys, V)
    checks = _run_checks(sys, V, A_hat, B_hat, C_hat, k, l, d, tol, policy)
    if not checks.passed:
        raise ConsistencyError("decomposition failed verification", report=checks)
    return KalmanDecomposition(
        system=sys, factorization=fact, V=V, k=k, l=l, d=d,
        A_hat=A_hat, B_hat=B_hat, C_hat=C_hat, D=D,
        labels=state_labels(k, l, d), residual_report=checks)


def verify_decomposition(sys: QuadratureSystem, dec: KalmanDecomposition,
                         tol: float = 1e-8,
                         policy: TolerancePolicy | None = None) -> DecompositionChecks:
    """Re-derive every invariant of a decomposition from scratch."""
    policy = policy or DEFAULT_POLICY
    if dec.V.shape != (2 * sys.n, 2 * sys.n):
        raise StructureError(
            f"V has shape {dec.V.shape}, expected {(2 * sys.n, 2 * sys.n)}")
    return _run_checks(sys, np.asarray(dec.V), np.asarray(dec.A_hat),
                       np.asarray(dec.B_hat), np.asarray(dec.C_hat),
                       dec.k, dec.l, dec.d, tol, policy)


@dataclass(frozen=True)
class RefinementPair:
    """A left factor X and a symplectic Y that reshape E while keeping the
    decomposition valid: X E Y must match the canonical pattern with all
    stored diagonal entries nonzero."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = as_matrix(self.X, "X")
        Y = as_matrix(self.Y, "Y")
        if X.shape[0] != X.shape[1]:
            raise StructureError(f"X must be square, got {X.shape}")
        if Y.shape[0] != Y.shape[1] or Y.shape[0] % 2:
            raise StructureError(f"Y must be square and even-dimensional, got {Y.shape}")
        object.__setattr__(self, "X", readonly(X))
        object.__setattr__(self, "Y", readonly(Y))


def _pattern_violations(T: np.ndarray, k: int, l: int, r: int, tol: float):
    """Offending 4x6 block coordinates of a matrix tested against the
    refined-E pattern, plus any vanishing mandated diagonal entries."""
    s = T.shape[0]
    row_sizes = (k, l, k, s - 2 * k - l)
    col_sizes = (k, l, r - k - l, k, l, r - k - l)
    row_off = np.concatenate([[0], np.cumsum(row_sizes)])
    col_off = np.concatenate([[0], np.cumsum(col_sizes)])
    scale = tol * (1.0 + float(np.linalg.norm(T)))
    diag_blocks = {(0, 0), (1, 1), (2, 3)}
    bad = []
    for i in range(4):
        for j in range(6):
            piece = T[row_off[i]:row_off[i + 1], col_off[j]:col_off[j + 1]]
            if not piece.size:
                continue
            if (i, j) in diag_blocks:
                off = piece - np.diag(np.diag(piece))
                if float(np.max(np.abs(off))) > scale:
                    bad.append((i, j))
                elif np.any(np.abs(np.diag(piece)) <= scale):
                    bad.append((i, j))
            elif float(np.max(np.abs(piece))) > scale:
                bad.append((i, j))
    return bad


def refine(dec: KalmanDecomposition, E: CanonicalE, pair: RefinementPair,
           tol: float = 1e-8,
           policy: TolerancePolicy | None = None) -> KalmanDecomposition:
    """Rebuild the decomposition with V' = Y^{-1} V for a validated pair.

    The pair is validated against the supplied E: Y symplectic, X
    invertible, and X E Y matching the canonical pattern with nonzero
    diagonals.  Counts and labels are preserved; every invariant is
    re-verified on the result.
    """
    policy = policy or DEFAULT_POLICY
    E_mat = E.materialize()
    if pair.X.shape[0] != E.s or pair.Y.shape[0] != 2 * E.r:
        raise StructureError(
            f"pair shapes {pair.X.shape}, {pair.Y.shape} do not match E ({E.s} x {2 * E.r})")
    y_check = is_symplectic(pair.Y, tol=1e-9)
    if not y_check.ok:
        raise ValidationError("Y symplectic", residual=y_check.residual)
    sv_x = np.linalg.svd(pair.X, compute_uv=False)
    if sv_x[-1] <= E.s * EPS * sv_x[0]:
        raise ValidationError("X invertible", residual=float(sv_x[-1]))

    transformed_E = pair.X @ E_mat @ pair.Y
    violations = _pattern_violations(transformed_E, E.k, E.l, E.r, tol)
    if violations:
        raise RefinementRejectedError(
            "X E Y does not match the canonical pattern", blocks=violations)

    V_new = sharp_adjoint(pair.Y) @ dec.V
    A_hat, B_hat, C_hat, D = _transformed(dec.system, V_new)
    checks = _run_checks(dec.system, V_new, A_hat, B_hat, C_hat,
                         dec.k, dec.l, dec.d, tol, policy)
    if not checks.passed:
        raise ConsistencyError("refined decomposition failed verification", report=checks)
    return KalmanDecomposition(
        system=dec.system, factorization=dec.factorization, V=V_new,
        k=dec.k, l=dec.l, d=dec.d,
        A_hat=A_hat, B_hat=B_hat, C_hat=C_hat, D=D,
        labels=dec.labels, residual_report=checks)


@dataclass(frozen=True)
class StateClassification:
    index: int
    label: str
    coordinates: np.ndarray


def classify_states(dec: KalmanDecomposition) -> list[StateClassification]:
    """Per transformed state: its class and its row of V over the original
    position/momentum coordinates."""
    return [StateClassification(index=i, label=dec.labels[i],
                                coordinates=np.array(dec.V[i, :]))
            for i in range(2 * dec.n)]
