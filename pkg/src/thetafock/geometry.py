"""Hermitian/symplectic scaffolding and isotropic lattices.

A positive definite hermitian form H on C^g (linear in the first slot,
conjugate-linear in the second) induces the symplectic form
E(u, v) = Im H(u, v).  A rank-r discrete subgroup spanned by generators
w_1..w_r is isotropic when E vanishes on all generator pairs, which forces
r <= g and makes G[j,k] = H(w_j, w_k) a real symmetric positive definite
matrix.  The generators are completed to a C-basis of C^g by an
H-orthonormal complement, and every downstream computation works in the
coordinates of that basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    NonUnitModulus,
    NotHermitian,
    NotIndependent,
    NotIsotropic,
    NotPositiveDefinite,
    RankExceedsG,
    SingularBasis,
)

__all__ = [
    "HermitianSpace",
    "IsotropicLattice",
    "Character",
    "PointCoordinates",
    "RdqReport",
    "validate_space",
    "symplectic_form",
    "build_lattice",
    "check_rdq",
    "coordinates",
    "to_ambient",
    "coordinates_many",
    "to_ambient_many",
    "coordinate_conjugate",
    "b_form",
    "b_form_full",
    "ambient_measure_factor",
]

# Relative tolerance used for all form/shape validations.
FORM_TOL_SCALE = 1e-10


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class HermitianSpace:
    """Validated ambient space (C^g, H)."""

    g: int
    matrix: np.ndarray  # g x g hermitian positive definite
    tol: float  # absolute tolerance, already scaled to H

    def __post_init__(self):
        object.__setattr__(self, "matrix", _readonly(self.matrix))

    def hermitian(self, u, v):
        """H(u, v), broadcasting over leading axes of u and v."""
        u = np.asarray(u, dtype=complex)
        v = np.asarray(v, dtype=complex)
        if u.shape[-1] != self.g or v.shape[-1] != self.g:
            raise DimensionMismatch(
                f"expected vectors of length {self.g}, got {u.shape[-1]} and {v.shape[-1]}"
            )
        return np.einsum("...j,jk,...k->...", u, self.matrix, np.conj(v))

    def symplectic(self, u, v):
        """E(u, v) = Im H(u, v)."""
        return np.imag(self.hermitian(u, v))


def validate_space(H, tol_scale: float = FORM_TOL_SCALE) -> HermitianSpace:
    """Validate a hermitian positive definite matrix and wrap it.

    Raises NotHermitian or NotPositiveDefinite, naming the failing entry
    pair or the smallest eigenvalue.
    """
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise NotHermitian("matrix contains non-finite entries")
    g = H.shape[0]
    scale = max(1.0, float(np.abs(H).max())) if H.size else 1.0
    tol = tol_scale * scale
    defect = np.abs(H - H.conj().T)
    if defect.max() > tol:
        j, k = np.unravel_index(int(defect.argmax()), defect.shape)
        raise NotHermitian(
            f"H[{j}][{k}] = {H[j, k]} is not the conjugate of H[{k}][{j}] = {H[k, j]}"
        )
    eigs = np.linalg.eigvalsh(0.5 * (H + H.conj().T))
    if eigs.min() <= tol:
        raise NotPositiveDefinite(f"smallest eigenvalue {eigs.min():.6e} is not positive")
    return HermitianSpace(g=g, matrix=0.5 * (H + H.conj().T), tol=tol)


def symplectic_form(space: HermitianSpace, u, v):
    """E(u, v) = Im H(u, v); antisymmetric, and H(u,v) = E(iu,v) + iE(u,v)."""
    return space.symplectic(u, v)


@dataclass(frozen=True)
class Character:
    """Unit character m -> exp(2 pi i alpha . m) on Z^r.

    alpha is stored with each component reduced into [0, 1); the character
    and everything built from it are invariant under integer shifts of
    alpha (the lattice sum reindexes).
    """

    alpha: np.ndarray

    def __post_init__(self):
        a = np.mod(np.asarray(self.alpha, dtype=float).reshape(-1), 1.0)
        # mod can return 1.0 for tiny negative inputs
        a[a >= 1.0] = 0.0
        object.__setattr__(self, "alpha", _readonly(a))

    @property
    def r(self) -> int:
        return self.alpha.shape[0]

    def __call__(self, m) -> complex:
        m = np.asarray(m, dtype=float)
        if m.shape[-1] != self.r:
            raise DimensionMismatch(f"expected integer vectors of length {self.r}")
        return np.exp(2j * np.pi * (m @ self.alpha))


@dataclass(frozen=True)
class PointCoordinates:
    """A point of C^g split into lattice-span and complement coordinates."""

    z: np.ndarray  # (r,) complex, coordinates along w_1..w_r
    z_perp: np.ndarray  # (g-r,) complex, coordinates along w_{r+1}..w_g

    def __post_init__(self):
        object.__setattr__(self, "z", _readonly(np.asarray(self.z, dtype=complex).reshape(-1)))
        object.__setattr__(
            self, "z_perp", _readonly(np.asarray(self.z_perp, dtype=complex).reshape(-1))
        )


@dataclass(frozen=True)
class IsotropicLattice:
    """Rank-r isotropic lattice with its adapted basis of C^g.

    Fields
    ------
    generators : (r, g) complex — lattice generators in ambient coordinates.
    complement : (g-r, g) complex — H-orthonormal completion, H-orthogonal
        to the generator span.
    B : (r, r) real symmetric positive definite, B[j,k] = H(w_j, w_k).
    basis_matrix : (g, g) complex with columns w_1..w_g.
    """

    space: HermitianSpace
    r: int
    generators: np.ndarray
    complement: np.ndarray
    B: np.ndarray
    B_inv: np.ndarray
    basis_matrix: np.ndarray
    inv_basis_matrix: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        for name in ("generators", "complement", "B", "B_inv", "basis_matrix"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        if self.inv_basis_matrix is None:
            try:
                inv = np.linalg.inv(self.basis_matrix)
            except np.linalg.LinAlgError as exc:
                raise SingularBasis(str(exc)) from None
            object.__setattr__(self, "inv_basis_matrix", _readonly(inv))
        else:
            object.__setattr__(self, "inv_basis_matrix", _readonly(self.inv_basis_matrix))

    @property
    def g(self) -> int:
        return self.space.g

    @property
    def det_b(self) -> float:
        """det B, with the empty 0x0 determinant equal to 1."""
        return float(np.linalg.det(self.B)) if self.r else 1.0

    def gamma(self, m) -> np.ndarray:
        """Ambient lattice point for an integer vector m."""
        m = np.asarray(m, dtype=float)
        if m.shape[-1] != self.r:
            raise DimensionMismatch(f"expected integer vectors of length {self.r}")
        return m @ self.generators


def _real_stack(vectors: np.ndarray) -> np.ndarray:
    """(k, g) complex -> (2g, k) real matrix of stacked Re/Im parts."""
    return np.concatenate([vectors.real, vectors.imag], axis=1).T


def build_lattice(space: HermitianSpace, generators) -> IsotropicLattice:
    """Validate generators and build the adapted basis.

    Checks R-linear independence (singular values of the 2g x r real
    matrix) and pairwise isotropy, forms B and its inverse, and completes
    the generators to a C-basis: candidate standard basis vectors are
    H-projected onto the current span, the one with the largest residual
    H-norm is kept (deterministic given input order), and the residuals
    are H-orthonormalized.
    """
    g = space.g
    gens = np.asarray(generators, dtype=complex)
    if gens.size == 0:
        gens = np.zeros((0, g), dtype=complex)
    gens = np.atleast_2d(gens)
    if gens.shape[1] != g:
        raise DimensionMismatch(f"generators must be vectors of length {g}, got {gens.shape}")
    r = gens.shape[0]
    if r > g:
        raise RankExceedsG(f"{r} generators in complex dimension {g}: isotropic rank is at most g")

    if r:
        real_mat = _real_stack(gens)
        svals = np.linalg.svd(real_mat, compute_uv=False)
        if svals.min() <= 1e-10 * svals.max():
            raise NotIndependent(
                f"generators are not R-linearly independent (sigma_min/sigma_max = "
                f"{svals.min() / svals.max():.3e})"
            )

    gram = space.hermitian(gens[:, None, :], gens[None, :, :]) if r else np.zeros((0, 0))
    for j in range(r):
        for k in range(j + 1, r):
            e_jk = float(np.imag(gram[j, k]))
            if abs(e_jk) > space.tol:
                raise NotIsotropic((j, k), e_jk)

    B = np.real(gram)
    B = 0.5 * (B + B.T)
    if r:
        b_eigs = np.linalg.eigvalsh(B)
        if b_eigs.min() <= space.tol:
            raise NotPositiveDefinite(
                f"lattice Gram matrix has non-positive eigenvalue {b_eigs.min():.6e}"
            )
        B_inv = np.linalg.inv(B)
    else:
        B_inv = np.zeros((0, 0))

    complement = _complete_basis(space, gens)
    basis_matrix = np.concatenate([gens, complement], axis=0).T if g else np.zeros((0, 0))
    return IsotropicLattice(
        space=space,
        r=r,
        generators=gens,
        complement=complement,
        B=B,
        B_inv=B_inv,
        basis_matrix=basis_matrix,
    )


def _complete_basis(space: HermitianSpace, gens: np.ndarray) -> np.ndarray:
    """H-orthonormal complement of span_C(gens), greedy over e_1..e_g."""
    g = space.g
    r = gens.shape[0]
    basis = list(gens)  # current spanning set; first r entries stay untouched
    complement = []
    for _ in range(g - r):
        residuals = []
        for i in range(g):
            cand = np.zeros(g, dtype=complex)
            cand[i] = 1.0
            res = _h_project_out(space, cand, basis)
            residuals.append((math.sqrt(max(np.real(space.hermitian(res, res)), 0.0)), i, res))
        norm, _, res = max(residuals, key=lambda t: (t[0], -t[1]))
        if norm <= math.sqrt(space.tol):
            raise SingularBasis("cannot complete generators to a basis of C^g")
        vec = res / norm
        complement.append(vec)
        basis.append(vec)
    return np.array(complement) if complement else np.zeros((0, g), dtype=complex)


def _h_project_out(space: HermitianSpace, v: np.ndarray, basis) -> np.ndarray:
    """Residual of v after H-orthogonal projection onto span_C(basis)."""
    if not basis:
        return v
    mat = np.array(basis)
    gram = space.hermitian(mat[:, None, :], mat[None, :, :])
    rhs = space.hermitian(v[None, :], mat)  # H(v, b_j)
    # v - sum_j c_j b_j with H(v - sum c b, b_k) = 0  =>  gram^T c = rhs
    try:
        coeffs = np.linalg.solve(gram.T, rhs.reshape(-1))
    except np.linalg.LinAlgError as exc:
        raise SingularBasis(str(exc)) from None
    return v - coeffs @ mat


def coordinates(lattice: IsotropicLattice, u) -> PointCoordinates:
    """Coordinates of an ambient point w.r.t. the adapted basis."""
    u = np.asarray(u, dtype=complex).reshape(-1)
    if u.shape[0] != lattice.g:
        raise DimensionMismatch(f"expected a vector of length {lattice.g}")
    zfull = lattice.inv_basis_matrix @ u
    return PointCoordinates(z=zfull[: lattice.r], z_perp=zfull[lattice.r :])


def to_ambient(lattice: IsotropicLattice, coords: PointCoordinates) -> np.ndarray:
    zfull = np.concatenate([coords.z, coords.z_perp])
    if zfull.shape[0] != lattice.g:
        raise DimensionMismatch(f"expected {lattice.g} coordinates")
    return lattice.basis_matrix @ zfull


def coordinates_many(lattice: IsotropicLattice, points):
    """Batch version of :func:`coordinates`: (N, g) -> (N, r), (N, g-r)."""
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    if pts.shape[-1] != lattice.g:
        raise DimensionMismatch(f"expected vectors of length {lattice.g}")
    zfull = pts @ lattice.inv_basis_matrix.T
    return zfull[..., : lattice.r], zfull[..., lattice.r :]


def to_ambient_many(lattice: IsotropicLattice, z, z_perp) -> np.ndarray:
    zfull = np.concatenate(
        [np.atleast_2d(np.asarray(z, dtype=complex)), np.atleast_2d(np.asarray(z_perp, dtype=complex))],
        axis=-1,
    )
    return zfull @ lattice.basis_matrix.T


def coordinate_conjugate(lattice: IsotropicLattice, u) -> np.ndarray:
    """The point whose adapted-basis coordinates are the conjugated ones.

    This is the conjugation under which the lattice is pointwise fixed;
    it realizes the bilinear (non-sesquilinear) pairing below.
    """
    c = coordinates(lattice, u)
    return to_ambient(lattice, PointCoordinates(np.conj(c.z), np.conj(c.z_perp)))


def b_form(lattice: IsotropicLattice, z, w):
    """Symmetric bilinear form z^T B w on lattice-span coordinates."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if z.shape[-1] != lattice.r or w.shape[-1] != lattice.r:
        raise DimensionMismatch(f"expected coordinate vectors of length {lattice.r}")
    if lattice.r == 0:
        return np.zeros(np.broadcast_shapes(z.shape[:-1], w.shape[:-1]), dtype=complex)[()]
    return np.einsum("...j,jk,...k->...", z, lattice.B, w)


def b_form_full(lattice: IsotropicLattice, u, v):
    """Bilinear extension to C^g: H(u, conj(v)) with conjugation in coordinates."""
    zu, pu = coordinates_many(lattice, np.atleast_2d(u))
    zv, pv = coordinates_many(lattice, np.atleast_2d(v))
    val = b_form(lattice, zu, zv) + np.einsum("...j,...j->...", pu, pv)
    return val[0] if np.asarray(u).ndim == 1 else val


def ambient_measure_factor(lattice: IsotropicLattice) -> float:
    """|det P|^2 converting coordinate Lebesgue measure to the ambient one.

    Reported alongside results; never applied silently.
    """
    return float(abs(np.linalg.det(lattice.basis_matrix)) ** 2)


@dataclass(frozen=True)
class RdqReport:
    passed: bool
    worst_defect: float
    worst_pair: tuple
    pairs_checked: int


def _rdq_test_set(r: int) -> np.ndarray:
    """Deterministic small battery of integer vectors in Z^r."""
    vecs = [np.zeros(r, dtype=int)]
    eye = np.eye(r, dtype=int)
    for i in range(r):
        vecs.extend([eye[i], -eye[i], 2 * eye[i]])
    for i in range(r):
        for j in range(i + 1, r):
            vecs.extend([eye[i] + eye[j], eye[i] - eye[j]])
    return np.array(vecs, dtype=int) if vecs else np.zeros((1, 0), dtype=int)


def check_rdq(lattice: IsotropicLattice, chi, nu: float, tol: float = 1e-9) -> RdqReport:
    """Check the cocycle condition chi(m+m') = chi(m) chi(m') e^{i nu E}.

    For an isotropic lattice E vanishes on lattice pairs, so the condition
    reduces to chi being a character; the symplectic factor is kept anyway
    so the reported defect is the literal cocycle defect.  Raises
    NonUnitModulus when |chi| strays from 1 on the test set.
    """
    ms = _rdq_test_set(lattice.r)
    vals = {tuple(m): complex(chi(m)) for m in ms}
    sums = {tuple(m + mp) for m in ms for mp in ms}
    for s in sums:
        if s not in vals:
            vals[s] = complex(chi(np.array(s, dtype=int)))
    for m, v in vals.items():
        if abs(abs(v) - 1.0) > tol:
            raise NonUnitModulus(f"|chi({m})| = {abs(v):.12f}")

    worst = 0.0
    worst_pair = (tuple(ms[0]), tuple(ms[0]))
    for m in ms:
        gm = lattice.gamma(m)
        for mp in ms:
            e_val = float(lattice.space.symplectic(gm, lattice.gamma(mp))) if lattice.r else 0.0
            defect = abs(
                vals[tuple(m + mp)] - vals[tuple(m)] * vals[tuple(mp)] * np.exp(1j * nu * e_val)
            )
            if defect > worst:
                worst = defect
                worst_pair = (tuple(m), tuple(mp))
    return RdqReport(
        passed=worst <= tol,
        worst_defect=worst,
        worst_pair=worst_pair,
        pairs_checked=len(ms) ** 2,
    )
