"""Seeded property-verification campaigns.

Each suite takes a space configuration and a seeded generator and returns
a list of PropertyOutcome records with measured defects; the CLI renders
them and the acceptance tests drive them across many configurations.
Random configurations are sampled here as well: isotropic generators are
drawn by projecting random vectors onto the symplectic annihilator of the
ones already chosen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import quadrature as Q
from . import space as S
from . import theta as T
from .errors import NotIndependent
from .geometry import (
    Character,
    HermitianSpace,
    IsotropicLattice,
    PointCoordinates,
    b_form_full,
    build_lattice,
    check_rdq,
    coordinate_conjugate,
    coordinates,
    coordinates_many,
    to_ambient,
    validate_space,
)

__all__ = [
    "PropertyOutcome",
    "random_hermitian_space",
    "random_isotropic_generators",
    "random_config",
    "random_field",
    "random_point",
    "verify_geometry",
    "verify_theta",
    "verify_orthogonality",
    "verify_reproducing",
    "verify_bounds",
    "SUITES",
    "run_suite",
]


@dataclass(frozen=True)
class PropertyOutcome:
    name: str
    passed: bool
    defect: float
    tolerance: float
    detail: str = ""


def _outcome(name, defect, tolerance, detail=""):
    return PropertyOutcome(
        name=name, passed=bool(defect <= tolerance), defect=float(defect),
        tolerance=float(tolerance), detail=detail,
    )


# ---------------------------------------------------------------------------
# random sampling


def random_hermitian_space(rng, g: int, complex_form: bool = True) -> HermitianSpace:
    A = rng.standard_normal((g, g))
    if complex_form:
        A = A + 1j * rng.standard_normal((g, g))
    H = A.conj().T @ A / g + 0.4 * np.eye(g)
    return validate_space(H)


def random_isotropic_generators(rng, space: HermitianSpace, r: int) -> np.ndarray:
    """Draw r generators with pairwise vanishing symplectic form.

    Each new vector is projected onto the joint kernel of the real-linear
    functionals v -> E(w_j, v); H-norms are normalized to 1 so the induced
    bilinear Gram matrix stays well scaled.
    """
    g = space.g
    gens: list[np.ndarray] = []
    attempts = 0
    while len(gens) < r:
        attempts += 1
        if attempts > 50 * r:
            raise NotIndependent("could not sample independent isotropic generators")
        v = rng.standard_normal(g) + 1j * rng.standard_normal(g)
        if gens:
            rows = []
            for w in gens:
                c = w @ space.matrix
                rows.append(np.concatenate([c.imag, -c.real]))
            A = np.array(rows)
            vr = np.concatenate([v.real, v.imag])
            vr = vr - A.T @ np.linalg.lstsq(A @ A.T, A @ vr, rcond=None)[0]
            v = vr[:g] + 1j * vr[g:]
        nrm = math.sqrt(float(np.real(space.hermitian(v, v))))
        if nrm < 1e-6:
            continue
        v = v / nrm
        stack = np.array(gens + [v])
        sv = np.linalg.svd(
            np.concatenate([stack.real, stack.imag], axis=1).T, compute_uv=False
        )
        if sv.min() < 1e-3 * sv.max():
            continue
        gens.append(v)
    return np.array(gens) if gens else np.zeros((0, g), dtype=complex)


def random_config(rng, g: int, r: int, nu_range=(1.5, 4.0), min_b_eig: float = 0.35) -> S.SpaceConfig:
    """Random well-conditioned configuration.

    Lattices whose Gram matrix B nears singularity are resampled: the norm
    exponent 2 pi^2/nu (n+a) B^-1 (n+a) leaves the double range at |n| <= 2
    once B is badly conditioned, which is an input problem rather than an
    implementation one.
    """
    space = random_hermitian_space(rng, g)
    for _ in range(60):
        lattice = build_lattice(space, random_isotropic_generators(rng, space, r))
        if r == 0 or np.linalg.eigvalsh(lattice.B).min() >= min_b_eig:
            break
    else:
        raise NotIndependent("could not sample a well-conditioned isotropic lattice")
    alpha = rng.uniform(0.0, 1.0, size=r)
    nu = float(rng.uniform(*nu_range))
    return S.make_config(lattice, alpha, nu)


def random_field(rng, config: S.SpaceConfig, max_terms: int = 4, n_inf: int = 2,
                 k_total: int = 2) -> S.CoefficientField:
    r, m = config.r, config.g - config.r
    available = (2 * n_inf + 1) ** r * math.comb(k_total + m, m)
    entries = {}
    n_terms = min(int(rng.integers(1, max_terms + 1)), available)
    while len(entries) < n_terms:
        n = tuple(int(v) for v in rng.integers(-n_inf, n_inf + 1, size=r))
        k = tuple(int(v) for v in rng.integers(0, k_total + 1, size=m))
        if sum(k) > k_total:
            continue
        a = complex(rng.standard_normal(), rng.standard_normal())
        entries[S.BasisIndex(n=n, k=k)] = a
    return S.CoefficientField.from_dict(entries)


def random_point(rng, config: S.SpaceConfig, scale: float = 0.5) -> PointCoordinates:
    r, m = config.r, config.g - config.r
    z = scale * (rng.standard_normal(r) + 1j * rng.standard_normal(r))
    zp = scale * (rng.standard_normal(m) + 1j * rng.standard_normal(m))
    return PointCoordinates(z=z, z_perp=zp)


# ---------------------------------------------------------------------------
# geometry suite


def verify_geometry(config: S.SpaceConfig, rng) -> list[PropertyOutcome]:
    lat = config.lattice
    space = lat.space
    out = []

    if lat.r:
        gram = space.hermitian(lat.generators[:, None, :], lat.generators[None, :, :])
        out.append(_outcome("generator-isotropy", float(np.abs(gram.imag).max()), space.tol))
        out.append(
            _outcome(
                "gram-positive-definite",
                max(0.0, -float(np.linalg.eigvalsh(lat.B).min())),
                0.0,
                detail=f"min eigenvalue {np.linalg.eigvalsh(lat.B).min():.6e}",
            )
        )
        bb = lat.B @ lat.B_inv - np.eye(lat.r)
        out.append(_outcome("gram-inverse", float(np.abs(bb).max()), space.tol))

    # conjugating both slots in coordinates transposes the pairing on the
    # lattice span: H(conj(v), conj(u)) = H(u, v)
    worst = 0.0
    for _ in range(20):
        zc = rng.standard_normal(lat.r) + 1j * rng.standard_normal(lat.r)
        wc = rng.standard_normal(lat.r) + 1j * rng.standard_normal(lat.r)
        u = to_ambient(lat, PointCoordinates(zc, np.zeros(lat.g - lat.r)))
        v = to_ambient(lat, PointCoordinates(wc, np.zeros(lat.g - lat.r)))
        lhs = space.hermitian(u, v)
        rhs = space.hermitian(coordinate_conjugate(lat, v), coordinate_conjugate(lat, u))
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), 1.0))
    out.append(_outcome("span-conjugation-symmetry", worst, 1e-10))

    # H(u, gamma) equals the bilinear extension on lattice vectors
    worst = 0.0
    worst3 = 0.0
    for _ in range(20):
        u = rng.standard_normal(lat.g) + 1j * rng.standard_normal(lat.g)
        m = rng.integers(-3, 4, size=lat.r)
        gam = lat.gamma(m)
        h = complex(space.hermitian(u, gam))
        bt = complex(b_form_full(lat, u, gam))
        worst = max(worst, abs(h - bt) / max(abs(h), 1.0))
        lhs = complex(b_form_full(lat, u + gam, u + gam))
        rhs = complex(b_form_full(lat, u, u)) + 2.0 * complex(space.hermitian(u + 0.5 * gam, gam))
        worst3 = max(worst3, abs(lhs - rhs) / max(abs(lhs), 1.0))
    out.append(_outcome("lattice-bilinear-pairing", worst, 1e-10))
    out.append(_outcome("bilinear-square-expansion", worst3, 1e-10))

    # hermitian form decomposes over the adapted coordinates
    worst = 0.0
    for _ in range(20):
        u = rng.standard_normal(lat.g) + 1j * rng.standard_normal(lat.g)
        v = rng.standard_normal(lat.g) + 1j * rng.standard_normal(lat.g)
        zu, pu = coordinates_many(lat, u[None, :])
        zv, pv = coordinates_many(lat, v[None, :])
        lhs = complex(space.hermitian(u, v))
        ht = complex(np.einsum("j,jk,k->", zu[0], lat.B.astype(complex), np.conj(zv[0]))) if lat.r else 0.0
        rhs = ht + complex(pu[0] @ np.conj(pv[0]))
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), 1.0))
    out.append(_outcome("form-coordinate-decomposition", worst, 1e-10))

    # coordinate round trip
    worst = 0.0
    for _ in range(20):
        u = rng.standard_normal(lat.g) + 1j * rng.standard_normal(lat.g)
        worst = max(worst, float(np.abs(to_ambient(lat, coordinates(lat, u)) - u).max()))
    out.append(_outcome("coordinate-round-trip", worst, 1e-12))

    # cocycle gate: the configured character passes, a warped one fails
    rep = check_rdq(lat, config.character, config.nu)
    out.append(_outcome("cocycle-character", rep.worst_defect, 1e-9))
    if lat.r >= 2:
        bad = _non_character(config.alpha)
        rep_bad = check_rdq(lat, bad, config.nu)
        out.append(
            _outcome(
                "cocycle-rejects-non-character",
                0.0 if (not rep_bad.passed and rep_bad.worst_defect > 1e-6) else 1.0,
                0.0,
                detail=f"defect {rep_bad.worst_defect:.3e} at {rep_bad.worst_pair}",
            )
        )
    return out


def _non_character(alpha):
    def chi(m):
        m = np.asarray(m, dtype=float)
        cross = m[0] * m[1] if m.shape[0] >= 2 else m[0] ** 2
        return np.exp(2j * np.pi * (m @ alpha) + 1j * cross)

    return chi


# ---------------------------------------------------------------------------
# theta suite


def verify_theta(config: S.SpaceConfig, rng) -> list[PropertyOutcome]:
    params = config.theta_params
    out = []
    r = params.r
    if r == 0:
        val = T.theta_eval(params, np.zeros(0), 1e-12)
        out.append(_outcome("empty-rank-value", abs(val.value - 1.0), 0.0))
        return out

    z0 = 0.4 * (rng.standard_normal(r) + 1j * rng.standard_normal(r))
    a1 = T.theta_eval(params, z0, 1e-12)
    a2 = T.theta_eval(params, z0, 1e-12)
    out.append(
        _outcome("determinism", 0.0 if (a1.value == a2.value and a1.tail_bound == a2.tail_bound) else 1.0, 0.0)
    )

    tol = 1e-10
    worst = 0.0
    for _ in range(10):
        z = 0.6 * (rng.standard_normal(r) + 1j * rng.standard_normal(r))
        m = rng.integers(-2, 3, size=r)
        m2 = rng.integers(-1, 2, size=r)
        d = T.theta_quasiperiodicity_defect(params, z, m, m2, tol)
        # configs with large Im F make both sides big; measure the defect
        # against their scale, where the truncation budget is meaningful
        scale = max(
            1.0,
            abs(T.theta_eval(params, z + m, tol).value),
            abs(T.theta_eval(params, z + params.F @ m2, tol).value),
        )
        worst = max(worst, d / scale)
    out.append(_outcome("quasi-periodicity", worst, 2 * tol))

    worst = 0.0
    for _ in range(10):
        z = 0.6 * (rng.standard_normal(r) + 1j * rng.standard_normal(r))
        m = rng.integers(-2, 3, size=r)
        shifted = T.validate_parameters(params.F, alpha=params.alpha + m, beta=params.beta)
        worst = max(
            worst,
            abs(T.theta_eval(shifted, z, tol).value - T.theta_eval(params, z, tol).value),
        )
    out.append(_outcome("characteristic-shift", worst, 2 * tol))

    # empirical tails never exceed the certified bound along a radius grid
    z = 0.5 * (rng.standard_normal(r) + 1j * rng.standard_normal(r))
    ref_plan = T.truncation_plan(params, z, 1e-13)
    ref = T.eval_with_plan(params, z, ref_plan)
    worst = 0.0
    for tol_k in np.logspace(-2, -9, 8):
        plan = T.truncation_plan(params, z, float(tol_k))
        approx = T.eval_with_plan(params, z, plan)
        excess = abs(approx - ref) - (plan.tail_bound + ref_plan.tail_bound)
        worst = max(worst, excess)
    out.append(_outcome("tail-soundness", worst, 0.0))

    # every term larger than tail/|set| lies inside the planned set
    plan = T.truncation_plan(params, z, 1e-6)
    cap = plan.tail_bound / max(plan.index_set.shape[0], 1)
    grid = np.array(
        np.meshgrid(*([np.arange(-12, 13)] * r), indexing="ij")
    ).reshape(r, -1).T
    mags = np.exp(np.real(T._term_exponents(params, np.asarray(z), grid)))
    inside = {tuple(row) for row in plan.index_set}
    missing = [
        tuple(row) for row, mag in zip(grid, mags) if mag > cap and tuple(row) not in inside
    ]
    out.append(
        _outcome("plan-soundness", float(len(missing)), 0.0, detail=f"{len(missing)} escapees")
    )
    return out


# ---------------------------------------------------------------------------
# orthogonality suite


def verify_orthogonality(
    config: S.SpaceConfig,
    rng,
    n_inf: int = 2,
    k_total: int = 2,
    compact_nodes: int = Q._DEFAULT_COMPACT_NODES,
    unbounded_nodes: int = Q._DEFAULT_UNBOUNDED_NODES,
) -> list[PropertyOutcome]:
    out = []
    grid = Q.build_grid(
        config, compact_nodes=compact_nodes, unbounded_nodes=unbounded_nodes
    )
    out.append(_outcome("grid-self-calibration", grid.estimated_error, 1e-9))

    idxs = [
        S.BasisIndex(n=n, k=k)
        for n in S._integer_box(config.r, n_inf)
        for k in S._multi_indices(config.g - config.r, k_total)
    ]
    fam = S.basis_family(config, idxs)
    G, _ = Q.gram_matrix(config, fam, grid)
    norms = np.array([S.basis_norm_sq(config, i) for i in idxs])
    diag_defect = float((np.abs(np.diag(G).real - norms) / norms).max())
    out.append(_outcome("norms-match-closed-form", diag_defect, 1e-6))
    geo = np.sqrt(np.outer(norms, norms))
    off = np.abs(G - np.diag(np.diag(G))) / geo
    out.append(_outcome("off-diagonal-orthogonality", float(off.max()), 1e-6))

    # Parseval for a random finite field
    coeffs = random_field(rng, config)
    f = S.synthesized_function(config, coeffs)
    quad_norm = Q.inner_product(config, f, f, grid).value
    closed = S.growth_functional(config, coeffs)
    out.append(
        _outcome("parseval", abs(quad_norm.real - closed) / max(closed, 1e-300), 1e-6)
    )

    # the norm is independent of where the compact box sits
    shift = rng.uniform(0.1, 0.9, size=config.r)
    grid_shifted = Q.build_grid(
        config,
        compact_nodes=compact_nodes,
        unbounded_nodes=unbounded_nodes,
        box_offset=shift,
    )
    quad_shifted = Q.inner_product(config, f, f, grid_shifted).value
    out.append(
        _outcome(
            "translation-invariance",
            abs(quad_shifted - quad_norm) / max(abs(quad_norm), 1e-300),
            1e-8,
            detail=f"box offset {np.round(shift, 3).tolist()}",
        )
    )
    return out


# ---------------------------------------------------------------------------
# reproducing-kernel suite


def verify_reproducing(
    config: S.SpaceConfig,
    rng,
    pairs: int = 5,
    compact_nodes: int = Q._DEFAULT_COMPACT_NODES,
    unbounded_nodes: int = Q._DEFAULT_UNBOUNDED_NODES,
) -> list[PropertyOutcome]:
    out = []
    grid = Q.build_grid(
        config, compact_nodes=compact_nodes, unbounded_nodes=unbounded_nodes
    )

    worst = 0.0
    for _ in range(pairs):
        coeffs = random_field(rng, config, max_terms=3, n_inf=1, k_total=1)
        v = random_point(rng, config, scale=0.3)
        f = S.synthesized_function(config, coeffs)
        section = S.kernel_section(config, v, 1e-10)
        lhs = Q.inner_product(config, f, section, grid, refine=False).value
        rhs = S.synthesize(config, coeffs, v)
        worst = max(worst, abs(lhs - rhs) / (1.0 + abs(rhs)))
    out.append(_outcome("reproducing-property", worst, 1e-5))

    worst = 0.0
    for _ in range(pairs):
        u = random_point(rng, config, scale=0.4)
        v = random_point(rng, config, scale=0.4)
        closed = S.kernel_eval(config, u, v, 1e-12)
        series = _kernel_series(config, u, v)
        worst = max(worst, abs(closed - series))
    out.append(_outcome("kernel-series-agreement", worst, 1e-8))

    worst = 0.0
    for _ in range(pairs):
        u = random_point(rng, config, scale=0.6)
        v = random_point(rng, config, scale=0.6)
        worst = max(
            worst,
            abs(
                S.kernel_eval(config, u, v, 1e-12)
                - np.conj(S.kernel_eval(config, v, u, 1e-12))
            ),
        )
    out.append(_outcome("kernel-hermitian-symmetry", worst, 1e-10))
    return out


def _kernel_series(config: S.SpaceConfig, u, v, n_radius: int = 8, k_total: int = 40) -> complex:
    """Brute-force basis expansion of the kernel, grown until stable.

    Inverse norms go through log space: indices whose norm overflows the
    double range contribute below resolution and underflow to zero.
    """
    idxs = S.series_indices(config, n_radius, k_total)
    vals_u = S.basis_eval_many(config, idxs, u.z[None, :], u.z_perp[None, :])[:, 0]
    vals_v = S.basis_eval_many(config, idxs, v.z[None, :], v.z_perp[None, :])[:, 0]
    inv_norms = np.exp(-np.array([S.basis_norm_sq_log(config, i) for i in idxs]))
    return complex(np.sum(vals_u * np.conj(vals_v) * inv_norms))


# ---------------------------------------------------------------------------
# bounds suite


def verify_bounds(config: S.SpaceConfig, rng, cases: int = 100) -> list[PropertyOutcome]:
    out = []
    failures = 0
    worst_ratio = 0.0
    for _ in range(cases):
        coeffs = random_field(rng, config)
        u = random_point(rng, config, scale=0.8)
        rep = S.evaluation_bound_check(config, coeffs, u)
        if not rep.holds:
            failures += 1
        if rep.rhs > 0:
            worst_ratio = max(worst_ratio, rep.lhs / rep.rhs)
    out.append(
        _outcome(
            "evaluation-bound", float(failures), 0.0,
            detail=f"worst |f|/bound ratio {worst_ratio:.6f}",
        )
    )

    worst = 0.0
    for _ in range(5):
        u = random_point(rng, config, scale=0.6)
        kd = S.kernel_diagonal(config, u, 1e-12)
        ke = S.kernel_eval(config, u, u, 1e-12)
        worst = max(worst, abs(kd - ke) / max(kd, 1e-300))
        if kd <= 0:
            worst = math.inf
    out.append(_outcome("diagonal-consistency", worst, 1e-10))

    pts = [random_point(rng, config, scale=0.5) for _ in range(6)]
    K = np.array([[S.kernel_eval(config, a, b, 1e-12) for b in pts] for a in pts])
    eigs = np.linalg.eigvalsh(0.5 * (K + K.conj().T))
    out.append(
        _outcome(
            "kernel-positive-semidefinite",
            max(0.0, -float(eigs.min())),
            1e-8 * float(np.trace(K).real),
        )
    )

    # truncated diagonal series approaches the closed-form diagonal
    worst = 0.0
    for _ in range(3):
        u = random_point(rng, config, scale=0.4)
        kd = S.kernel_diagonal(config, u, 1e-12)
        series = _kernel_series(config, u, u).real
        worst = max(worst, abs(series - kd))
    out.append(_outcome("diagonal-series-identity", worst, 1e-8))

    # K(z, t z_perp) grows with |t| through the exp(nu |z_perp|^2) factor
    monotone_ok = True
    for _ in range(5):
        u = random_point(rng, config, scale=0.5)
        if config.g == config.r:
            break
        u2 = PointCoordinates(z=u.z, z_perp=2.0 * u.z_perp)
        if S.kernel_diagonal(config, u2, 1e-12) < S.kernel_diagonal(config, u, 1e-12):
            monotone_ok = False
    out.append(_outcome("diagonal-perp-monotonicity", 0.0 if monotone_ok else 1.0, 0.0))
    return out


SUITES = {
    "geometry": verify_geometry,
    "theta": verify_theta,
    "orthogonality": verify_orthogonality,
    "reproducing": verify_reproducing,
    "bounds": verify_bounds,
}


def run_suite(config: S.SpaceConfig, suite: str, seed: int = 0, **kwargs) -> list[PropertyOutcome]:
    """Run one named suite (or 'all') with a fixed seed."""
    names = list(SUITES) if suite == "all" else [suite]
    results = []
    for name in names:
        if name not in SUITES:
            raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)} or 'all'")
        rng = np.random.default_rng(seed)
        fn = SUITES[name]
        accepted = {}
        if name in ("orthogonality", "reproducing"):
            for key in ("compact_nodes", "unbounded_nodes"):
                if key in kwargs:
                    accepted[key] = kwargs[key]
        results.extend(fn(config, rng, **accepted))
    return results
