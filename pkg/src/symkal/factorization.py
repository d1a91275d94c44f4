"""One-sided symplectic factorization F = Q E Z^{-1}.

Any real F of shape s x 2r factors with Q invertible (orthogonal in strict
mode), Z real symplectic, and E in a fixed sparse canonical pattern whose
shape is controlled by two integers: k, half the rank of the form F J F^T
carried onto the row space, and l, the rank of F beyond those paired
directions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RankAmbiguityError, StructureError
from .linalg import (
    DEFAULT_POLICY,
    EPS,
    SubspaceBasis,
    TolerancePolicy,
    as_matrix,
    is_symplectic,
    jmat,
    nullspace_rows,
    numerical_rank,
    orthonormal_columns,
    principal_angles,
    readonly,
    skew_canonical,
    symplectic_gram_schmidt,
)


@dataclass(frozen=True)
class CanonicalE:
    """The sparse middle factor of the factorization.

    Nonzero entries occupy three diagonal runs: (rows 0..k-1, cols 0..k-1)
    holding xi_top, (rows k..k+l-1, cols k..k+l-1) holding ones_block, and
    (rows k+l..2k+l-1, cols r..r+k-1) holding xi_mid.  Strict-mode outputs
    have xi_mid == xi_top and ones_block all ones.
    """

    s: int
    r: int
    k: int
    l: int
    xi_top: np.ndarray
    xi_mid: np.ndarray
    ones_block: np.ndarray

    def __post_init__(self):
        xi_top = np.asarray(self.xi_top, dtype=float)
        xi_mid = np.asarray(self.xi_mid, dtype=float)
        ones_block = np.asarray(self.ones_block, dtype=float)
        if self.k < 0 or self.l < 0:
            raise StructureError("k and l must be nonnegative")
        if self.k + self.l > self.r:
            raise StructureError(f"k + l = {self.k + self.l} exceeds r = {self.r}")
        if 2 * self.k + self.l > self.s:
            raise StructureError(f"2k + l = {2 * self.k + self.l} exceeds s = {self.s}")
        if xi_top.shape != (self.k,) or xi_mid.shape != (self.k,) or ones_block.shape != (self.l,):
            raise StructureError("diagonal arrays do not match the k, l counts")
        for name, arr in (("xi_top", xi_top), ("xi_mid", xi_mid), ("ones_block", ones_block)):
            if arr.size and not (np.isfinite(arr).all() and (arr > 0).all()):
                raise StructureError(f"{name} entries must be positive and finite")
        object.__setattr__(self, "xi_top", readonly(xi_top))
        object.__setattr__(self, "xi_mid", readonly(xi_mid))
        object.__setattr__(self, "ones_block", readonly(ones_block))

    @property
    def d(self) -> int:
        return self.r - self.k - self.l

    def materialize(self) -> np.ndarray:
        E = np.zeros((self.s, 2 * self.r))
        k, l, r = self.k, self.l, self.r
        E[np.arange(k), np.arange(k)] = self.xi_top
        E[k + np.arange(l), k + np.arange(l)] = self.ones_block
        E[k + l + np.arange(k), r + np.arange(k)] = self.xi_mid
        return E

    def kernel_column_indices(self) -> list[int]:
        """Columns annihilated by the pattern."""
        k, l, r = self.k, self.l, self.r
        return list(range(k + l, r)) + list(range(r + k, 2 * r))


@dataclass(frozen=True)
class SymplecticFactorization:
    """The triple (Q, E, Z) with F Z = Q E and Z symplectic."""

    Q: np.ndarray
    E: CanonicalE
    Z: np.ndarray
    mode: str
    residual: float
    z_condition: float

    def __post_init__(self):
        object.__setattr__(self, "Q", readonly(self.Q))
        object.__setattr__(self, "Z", readonly(self.Z))

    @property
    def k(self) -> int:
        return self.E.k

    @property
    def l(self) -> int:
        return self.E.l


def one_sided_symplectic_svd(F, policy: TolerancePolicy | None = None,
                             mode: str = "strict") -> SymplecticFactorization:
    """Factor F = Q E Z^{-1} with Z real symplectic and E canonical sparse.

    Strict mode returns an orthogonal Q, twin xi blocks, and a unit l-block;
    relaxed mode keeps Q merely invertible and stores the l-block column
    norms in E instead of orthonormalizing.

    The counts are pinned to independent rank decisions: k is half the rank
    of F J F^T and l = rank(F) - 2k, both thresholded by ``policy``.  When
    those decisions cannot be reconciled, a RankAmbiguityError carrying the
    two spectra is raised rather than guessing.
    """
    if mode not in ("strict", "relaxed"):
        raise StructureError(f"mode must be 'strict' or 'relaxed', got {mode!r}")
    A = as_matrix(F, "F")
    s, cols = A.shape
    if s == 0 or cols == 0 or cols % 2:
        raise StructureError(f"F must be s x 2r with s, r >= 1, got {A.shape}")
    r = cols // 2
    policy = policy or DEFAULT_POLICY
    J = jmat(r)

    sv_full = np.linalg.svd(A, compute_uv=False)
    sigma_f = float(sv_full[0]) if sv_full.size else 0.0
    M_raw = A @ J @ A.T
    M = 0.5 * (M_raw - M_raw.T)  # remove the rounding asymmetry of the product
    # Rounding in the product M sits at the eps * sigma_f^2 level, so the
    # skew spectrum needs an absolute floor at that scale.
    canon = skew_canonical(M, policy=policy, floor=max(s, cols) * EPS * sigma_f * sigma_f)
    k = canon.k

    rank_f, _, kernel_f, sv = numerical_rank(A, policy)
    l = rank_f - 2 * k
    d = r - k - l
    if l < 0 or d < 0:
        raise RankAmbiguityError(
            f"rank(F)={rank_f} and rank(F J F^T)={2 * k} imply l={l}, d={d}",
            singular_values=sv, skew_values=canon.mus)

    xi = np.sqrt(canon.mus)
    u_cols = canon.U[:, 0:2 * k:2]
    v_cols = canon.U[:, 1:2 * k:2]
    if k:
        Za = (J @ (A.T @ v_cols)) / xi[None, :]
        Za_partner = -(J @ (A.T @ u_cols)) / xi[None, :]
    else:
        Za = np.zeros((2 * r, 0))
        Za_partner = np.zeros((2 * r, 0))

    N = kernel_f.basis
    if N.shape[1]:
        G_raw = N.T @ J @ N
        G = 0.5 * (G_raw - G_raw.T)
        canon_ker = skew_canonical(G, policy=policy, floor=cols * EPS)
        if canon_ker.k < d:
            raise RankAmbiguityError(
                f"kernel of F carries only {canon_ker.k} symplectic pairs, expected {d}",
                singular_values=sv, skew_values=canon_ker.mus)
        # Pairs beyond the d mandated ones are threshold noise on an exactly
        # degenerate form; fold them into the radical.
        pair_cols = N @ canon_ker.U[:, :2 * d]
        roots = np.sqrt(canon_ker.mus[:d])
        Zc = pair_cols[:, 0::2] / roots[None, :] if d else np.zeros((2 * r, 0))
        Zc_partner = pair_cols[:, 1::2] / roots[None, :] if d else np.zeros((2 * r, 0))
        W0 = N @ canon_ker.U[:, 2 * d:]
    else:
        Zc = np.zeros((2 * r, 0))
        Zc_partner = np.zeros((2 * r, 0))
        W0 = np.zeros((2 * r, 0))
    if W0.shape[1] != l:
        raise RankAmbiguityError(
            f"kernel radical has dimension {W0.shape[1]}, expected l={l}",
            singular_values=sv, skew_values=canon.mus)

    if l:
        Zb = _paired_directions(A, J, Za, Za_partner, Zc, Zc_partner, W0, policy, sv)
    else:
        Zb = np.zeros((2 * r, 0))

    Z = np.hstack([Za, Zb, Zc, Za_partner, W0, Zc_partner])
    Z, scales = symplectic_gram_schmidt(Z, r)
    xi = xi * scales[:k]

    if l:
        Zb = Z[:, k:k + l]
        W0 = Z[:, r + k:r + k + l]
        Qb_raw = A @ Zb
        if mode == "strict":
            gram = Qb_raw.T @ Qb_raw
            try:
                L = np.linalg.cholesky(gram)
            except np.linalg.LinAlgError as exc:
                raise RankAmbiguityError(
                    "image of the paired directions is numerically rank deficient",
                    singular_values=sv) from exc
            W0 = W0 @ L
            Zb = Zb @ np.linalg.inv(L).T
            Qb = A @ Zb
            ones = np.ones(l)
        else:
            norms = np.linalg.norm(Qb_raw, axis=0)
            if np.any(norms <= policy.cutoff(A.shape, sigma_f)):
                raise RankAmbiguityError(
                    "a paired direction maps below the rank threshold",
                    singular_values=sv)
            Qb = Qb_raw / norms[None, :]
            ones = norms
        Z = Z.copy()
        Z[:, k:k + l] = Zb
        Z[:, r + k:r + k + l] = W0
    else:
        Qb = np.zeros((s, 0))
        ones = np.zeros(0)

    Q_lead = np.hstack([u_cols, Qb, v_cols])
    if Q_lead.shape[1] < s:
        Q_rest = (nullspace_rows(Q_lead.T, expected_dim=s - Q_lead.shape[1], policy=policy)
                  if Q_lead.shape[1] else np.eye(s))
        Q = np.hstack([Q_lead, Q_rest])
    else:
        Q = Q_lead

    E = CanonicalE(s=s, r=r, k=k, l=l, xi_top=xi, xi_mid=xi.copy(), ones_block=ones)
    residual = float(np.linalg.norm(A @ Z - Q @ E.materialize()))
    z_condition = float(np.linalg.cond(Z))
    return SymplecticFactorization(Q=Q, E=E, Z=Z, mode=mode,
                                   residual=residual, z_condition=z_condition)


def _paired_directions(A, J, Za, Za_partner, Zc, Zc_partner, W0, policy, sv):
    """Directions dual to the kernel radical W0.

    They live in the form-orthogonal complement of the paired blocks, carry
    unit pairing with W0, and are sheared isotropic.  Being form-orthogonal
    to the a-block forces their images under A to be Euclidean-orthogonal to
    the a-block image, which is what lets strict mode keep Q orthogonal.
    """
    l = W0.shape[1]
    anchor = orthonormal_columns(np.hstack([Za, Za_partner, Zc, Zc_partner]), policy)
    constraints = np.vstack([anchor.T @ J, W0.T]) if anchor.shape[1] else W0.T
    candidates = nullspace_rows(constraints, expected_dim=l, policy=policy)
    pairing = candidates.T @ J @ W0
    sv_pair = np.linalg.svd(pairing, compute_uv=False)
    if sv_pair[-1] <= policy.cutoff(pairing.shape, float(sv_pair[0])) or sv_pair[-1] < 1e-8 * sv_pair[0]:
        raise RankAmbiguityError(
            "pairing between the kernel radical and its complement is numerically degenerate",
            singular_values=sv, skew_values=sv_pair)
    Zb = candidates @ np.linalg.inv(pairing).T
    shear = Zb.T @ J @ Zb
    return Zb + W0 @ (-shear / 2.0)


@dataclass(frozen=True)
class FactorizationChecks:
    """Residual report for a factorization against its input."""

    reconstruction_residual: float
    reconstruction_ok: bool
    z_symplectic_residual: float
    z_symplectic_ok: bool
    q_residual: float
    q_ok: bool
    q_condition: float
    pattern_exact: bool
    k: int
    l: int
    k_oracle: int
    l_oracle: int
    counts_ok: bool
    kernel_angle: float
    kernel_ok: bool

    @property
    def passed(self) -> bool:
        return (self.reconstruction_ok and self.z_symplectic_ok and self.q_ok
                and self.pattern_exact and self.counts_ok and self.kernel_ok)

    def as_dict(self) -> dict:
        return {
            "reconstruction_residual": self.reconstruction_residual,
            "reconstruction_ok": self.reconstruction_ok,
            "z_symplectic_residual": self.z_symplectic_residual,
            "z_symplectic_ok": self.z_symplectic_ok,
            "q_residual": self.q_residual,
            "q_ok": self.q_ok,
            "q_condition": self.q_condition,
            "pattern_exact": self.pattern_exact,
            "k": self.k,
            "l": self.l,
            "k_oracle": self.k_oracle,
            "l_oracle": self.l_oracle,
            "counts_ok": self.counts_ok,
            "kernel_angle": self.kernel_angle,
            "kernel_ok": self.kernel_ok,
        }


def factor_count_oracles(F, policy: TolerancePolicy | None = None) -> tuple[int, int]:
    """Independent (k, l) from SVD ranks: k = rank(F J F^T) / 2, l = rank(F) - 2k.

    Computed without the eigendecomposition route the factorization uses.
    An odd thresholded rank of F J F^T raises a RankAmbiguityError.
    """
    A = as_matrix(F, "F")
    s, cols = A.shape
    r = cols // 2
    policy = policy or DEFAULT_POLICY
    sv_f = np.linalg.svd(A, compute_uv=False)
    sigma_f = float(sv_f[0]) if sv_f.size else 0.0
    M = A @ jmat(r) @ A.T
    sv_m = np.linalg.svd(M, compute_uv=False)
    cut_m = policy.cutoff(M.shape, float(sv_m[0]) if sv_m.size else 0.0,
                          floor=max(s, cols) * EPS * sigma_f * sigma_f)
    rank_m = int(np.sum(sv_m > cut_m))
    if rank_m % 2:
        raise RankAmbiguityError(
            f"rank of F J F^T thresholded to the odd value {rank_m}",
            singular_values=sv_f, skew_values=sv_m)
    cut_f = policy.cutoff(A.shape, sigma_f)
    rank_f = int(np.sum(sv_f > cut_f))
    return rank_m // 2, rank_f - rank_m


def verify_factorization(F, fact: SymplecticFactorization, tol: float = 1e-8,
                         policy: TolerancePolicy | None = None) -> FactorizationChecks:
    """Check every postcondition of a factorization, reporting residuals.

    Reconstruction is judged against tol * max(1, ||F||_F); the Z and Q
    residuals against tol directly.  The kernel check compares Ker F with
    Z applied to the pattern's kernel columns through principal angles.
    """
    A = as_matrix(F, "F")
    policy = policy or DEFAULT_POLICY
    E_mat = fact.E.materialize()
    if A.shape != E_mat.shape:
        raise StructureError(f"F has shape {A.shape} but the factorization expects {E_mat.shape}")
    scale = max(1.0, float(np.linalg.norm(A)))
    reconstruction = float(np.linalg.norm(A @ fact.Z - fact.Q @ E_mat))
    z_check = is_symplectic(fact.Z, tol=tol)
    s = A.shape[0]
    q_residual = float(np.linalg.norm(fact.Q.T @ fact.Q - np.eye(s)))
    q_condition = float(np.linalg.cond(fact.Q))
    if fact.mode == "strict":
        q_ok = q_residual <= tol
    else:
        q_ok = bool(np.isfinite(q_condition)) and q_condition < 1.0 / (s * EPS)

    mask = np.ones_like(E_mat, dtype=bool)
    k, l, r = fact.E.k, fact.E.l, fact.E.r
    mask[np.arange(k), np.arange(k)] = False
    mask[k + np.arange(l), k + np.arange(l)] = False
    mask[k + l + np.arange(k), r + np.arange(k)] = False
    pattern_exact = bool(np.all(E_mat[mask] == 0.0))

    k_oracle, l_oracle = factor_count_oracles(A, policy)
    counts_ok = (k_oracle == fact.E.k) and (l_oracle == fact.E.l)

    kernel = numerical_rank(A, policy).kernel
    kernel_idx = fact.E.kernel_column_indices()
    z_kernel = SubspaceBasis(orthonormal_columns(np.asarray(fact.Z)[:, kernel_idx], policy))
    if kernel.dim != z_kernel.dim:
        kernel_angle = float(np.pi / 2)
    elif kernel.dim == 0:
        kernel_angle = 0.0
    else:
        kernel_angle = float(np.max(principal_angles(kernel, z_kernel)))

    return FactorizationChecks(
        reconstruction_residual=reconstruction,
        reconstruction_ok=reconstruction <= tol * scale,
        z_symplectic_residual=z_check.residual,
        z_symplectic_ok=z_check.residual <= tol,
        q_residual=q_residual,
        q_ok=q_ok,
        q_condition=q_condition,
        pattern_exact=pattern_exact,
        k=fact.E.k,
        l=fact.E.l,
        k_oracle=k_oracle,
        l_oracle=l_oracle,
        counts_ok=counts_ok,
        kernel_angle=kernel_angle,
        kernel_ok=kernel_angle <= max(tol, 1e-7) if kernel.dim == z_kernel.dim else False,
    )
