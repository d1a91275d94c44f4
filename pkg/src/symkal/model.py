"""State-space models of coupled oscillator networks in quadrature form.

A system is the data (R, C, Sigma): a symmetric energy matrix R on the
2n-dimensional phase space, a real coupling matrix C into 2m field
quadratures, and a symplectic feedthrough Sigma.  The drift and input
matrices A = J R - C# C / 2 and B = -C# Sigma are derived on demand.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag, expm

from .errors import StructureError, ValidationError
from .linalg import (
    TolerancePolicy,
    as_complex_matrix,
    as_matrix,
    is_symplectic,
    jmat,
    numerical_rank,
    readonly,
    sharp_adjoint,
)

_SYMMETRY_TOL = 1e-10
_SYMPLECTIC_TOL = 1e-10
_UNITARY_TOL = 1e-10


@dataclass(frozen=True)
class QuadratureSystem:
    """An n-mode, m-field linear system in the quadrature representation."""

    R: np.ndarray
    C: np.ndarray
    Sigma: np.ndarray

    def __post_init__(self):
        R = as_matrix(self.R, "R")
        C = as_matrix(self.C, "C")
        Sigma = as_matrix(self.Sigma, "Sigma")
        if R.shape[0] != R.shape[1] or R.shape[0] % 2 or R.shape[0] == 0:
            raise ValidationError("R is 2n x 2n", detail=f"got shape {R.shape}")
        two_n = R.shape[0]
        if C.shape[1] != two_n or C.shape[0] % 2 or C.shape[0] == 0:
            raise ValidationError("C is 2m x 2n", detail=f"got shape {C.shape} against 2n={two_n}")
        two_m = C.shape[0]
        if Sigma.shape != (two_m, two_m):
            raise ValidationError("Sigma is 2m x 2m", detail=f"got shape {Sigma.shape} against 2m={two_m}")
        sym_residual = float(np.linalg.norm(R - R.T))
        if sym_residual > _SYMMETRY_TOL * max(1.0, float(np.linalg.norm(R))):
            raise ValidationError("R symmetric", residual=sym_residual)
        check = is_symplectic(Sigma, tol=_SYMPLECTIC_TOL)
        if not check.ok:
            raise ValidationError("Sigma symplectic", residual=check.residual)
        object.__setattr__(self, "R", readonly(R))
        object.__setattr__(self, "C", readonly(C))
        object.__setattr__(self, "Sigma", readonly(Sigma))

    @property
    def n(self) -> int:
        return self.R.shape[0] // 2

    @property
    def m(self) -> int:
        return self.C.shape[0] // 2

    @property
    def A(self) -> np.ndarray:
        return jmat(self.n) @ self.R - 0.5 * sharp_adjoint(self.C) @ self.C

    @property
    def B(self) -> np.ndarray:
        return -sharp_adjoint(self.C) @ self.Sigma

    @property
    def D(self) -> np.ndarray:
        return np.array(self.Sigma)


def build_system(R, C, Sigma=None) -> QuadratureSystem:
    """Assemble and validate a system from its raw matrices.

    ``Sigma`` defaults to the identity feedthrough.
    """
    C = as_matrix(C, "C")
    if Sigma is None:
        Sigma = np.eye(C.shape[0])
    return QuadratureSystem(R=R, C=C, Sigma=Sigma)


@dataclass(frozen=True)
class PhysicalSpec:
    """Complex coupling data: scattering S and the position/momentum
    coefficients Lq, Lp of the coupling operator L = Lq q + Lp p."""

    S: np.ndarray
    Lq: np.ndarray
    Lp: np.ndarray

    def __post_init__(self):
        S = as_complex_matrix(self.S, "S")
        Lq = as_complex_matrix(self.Lq, "Lq")
        Lp = as_complex_matrix(self.Lp, "Lp")
        if S.shape[0] != S.shape[1] or S.shape[0] == 0:
            raise ValidationError("S square", detail=f"got shape {S.shape}")
        m = S.shape[0]
        if Lq.shape != Lp.shape or Lq.shape[0] != m:
            raise ValidationError(
                "Lq, Lp are m x n", detail=f"got {Lq.shape} and {Lp.shape} against m={m}")
        unitary_residual = float(np.linalg.norm(S.conj().T @ S - np.eye(m)))
        if unitary_residual > _UNITARY_TOL:
            raise ValidationError("S unitary", residual=unitary_residual)
        object.__setattr__(self, "S", readonly(S))
        object.__setattr__(self, "Lq", readonly(Lq))
        object.__setattr__(self, "Lp", readonly(Lp))

    @property
    def m(self) -> int:
        return self.S.shape[0]

    @property
    def n(self) -> int:
        return self.Lq.shape[1]


def from_physical(spec: PhysicalSpec) -> tuple[np.ndarray, np.ndarray]:
    """Realify complex coupling data into the (C, Sigma) quadrature matrices.

    C = (1/sqrt 2) [[Lq + Lq*, Lp + Lp*], [-i(Lq - Lq*), -i(Lp - Lp*)]] and
    Sigma = [[Re S, -Im S], [Im S, Re S]]; both are real by construction and
    Sigma is orthogonal symplectic.
    """
    Lq, Lp, S = spec.Lq, spec.Lp, spec.S
    C_complex = np.block([
        [Lq + Lq.conj(), Lp + Lp.conj()],
        [-1j * (Lq - Lq.conj()), -1j * (Lp - Lp.conj())],
    ]) / np.sqrt(2.0)
    Sigma_complex = 0.5 * np.block([
        [S + S.conj(), 1j * (S - S.conj())],
        [-1j * (S - S.conj()), S + S.conj()],
    ])
    for name, arr in (("C", C_complex), ("Sigma", Sigma_complex)):
        imag = float(np.max(np.abs(arr.imag))) if arr.size else 0.0
        if imag > 1e-12 * max(1.0, float(np.max(np.abs(arr.real)))):
            raise ValidationError(f"{name} real-valued", residual=imag)
    return C_complex.real.copy(), Sigma_complex.real.copy()


@dataclass(frozen=True)
class KrylovMatrices:
    """Stacked controllability/observability matrices for one power basis."""

    controllability: np.ndarray
    observability: np.ndarray
    variant: str
    depth: int

    def __post_init__(self):
        object.__setattr__(self, "controllability", readonly(self.controllability))
        object.__setattr__(self, "observability", readonly(self.observability))


def krylov_matrices(sys: QuadratureSystem, variant: str = "jr",
                    early_stop: bool = False,
                    policy: TolerancePolicy | None = None) -> KrylovMatrices:
    """Build [B, G B, ..., G^{d-1} B] and the stacked [C; C G; ...; C G^{d-1}].

    ``variant`` selects the power basis G: the drift matrix A ("a") or the
    closed-loop-free generator J R ("jr").  Both give the same image and
    kernel.  The full depth is d = 2n; with ``early_stop`` the iteration
    ends once both ranks are unchanged by one extra power.
    """
    if variant not in ("a", "jr"):
        raise StructureError(f"variant must be 'a' or 'jr', got {variant!r}")
    G = sys.A if variant == "a" else jmat(sys.n) @ sys.R
    B = sys.B
    C = sys.C
    ctl_blocks = [B]
    obs_blocks = [C]
    if early_stop:
        prev_ctl = prev_obs = -1
        for _ in range(2 * sys.n - 1):
            ctl_blocks.append(G @ ctl_blocks[-1])
            obs_blocks.append(obs_blocks[-1] @ G)
            rank_ctl = numerical_rank(np.hstack(ctl_blocks), policy).rank
            rank_obs = numerical_rank(np.vstack(obs_blocks), policy).rank
            if rank_ctl == prev_ctl and rank_obs == prev_obs:
                break
            prev_ctl, prev_obs = rank_ctl, rank_obs
    else:
        for _ in range(2 * sys.n - 1):
            ctl_blocks.append(G @ ctl_blocks[-1])
            obs_blocks.append(obs_blocks[-1] @ G)
    return KrylovMatrices(
        controllability=np.hstack(ctl_blocks),
        observability=np.vstack(obs_blocks),
        variant=variant,
        depth=len(ctl_blocks),
    )


def t0_matrix(n: int, m: int, D) -> np.ndarray:
    """The fixed full-rank matrix relating the two structured Krylov stacks.

    T0 = diag(D, ..., D) diag(J_2m, -J_2m, ...) J_4nm satisfies
    observability = T0 @ sharp_adjoint(controllability) for the "jr" variant
    of any system whose feedthrough is D.  T0 T0# equals (-1)^n D D^T tiled,
    so T0 is symplectic exactly when n is even and D is orthogonal.
    """
    if n < 1 or m < 1:
        raise StructureError(f"t0_matrix needs n, m >= 1, got n={n}, m={m}")
    Dm = as_matrix(D, "D")
    if Dm.shape != (2 * m, 2 * m):
        raise ValidationError("D is 2m x 2m", detail=f"got shape {Dm.shape} against 2m={2 * m}")
    check = is_symplectic(Dm, tol=1e-9)
    if not check.ok:
        raise ValidationError("D symplectic", residual=check.residual)
    J2m = jmat(m)
    signs = block_diag(*[J2m if i % 2 == 0 else -J2m for i in range(2 * n)])
    stacked = block_diag(*([Dm] * (2 * n)))
    return stacked @ signs @ jmat(2 * n * m)


def random_system(n: int, m: int, seed: int, sigma: str = "exp") -> QuadratureSystem:
    """Deterministic random system for a given seed.

    R is symmetric standard normal, C is standard normal scaled by
    1/sqrt(2m), and Sigma is either the identity or exp(J K) for a random
    symmetric K, which is symplectic by construction.
    """
    if n < 1 or m < 1:
        raise StructureError(f"random_system needs n, m >= 1, got n={n}, m={m}")
    if sigma not in ("exp", "identity"):
        raise StructureError(f"sigma must be 'exp' or 'identity', got {sigma!r}")
    rng = np.random.default_rng(seed)
    R0 = rng.standard_normal((2 * n, 2 * n))
    R = 0.5 * (R0 + R0.T)
    C = rng.standard_normal((2 * m, 2 * n)) / np.sqrt(2 * m)
    if sigma == "identity":
        Sigma = np.eye(2 * m)
    else:
        K0 = rng.standard_normal((2 * m, 2 * m))
        Sigma = expm(jmat(m) @ (0.5 * (K0 + K0.T)))
    return QuadratureSystem(R=R, C=C, Sigma=Sigma)


def transfer_matrix(A, B, C, D, s: complex) -> np.ndarray:
    """Frequency response C (sI - A)^{-1} B + D at one complex point."""
    A = np.asarray(A)
    dim = A.shape[0]
    return C @ np.linalg.solve(s * np.eye(dim) - A, B) + D
