"""Coordinates, measures, quadrature rules, samplers and Haar-random unitaries.

Every integral in the package reduces to one of:

* radial integrals over tau(B^m) = {r in R_+^m : |r| < 1} against the weight
  (1 - |r|^2)^lam * prod_j r_j^(2 k_j + 2 kappa_j - 1),
* integrals over the unit sphere of C^k with Riemannian surface measure,
  factored through positive-orthant coordinates xi = t * s,
* Monte Carlo expectations over the normalized weighted ball measure, and
* Haar averages over products of unitary groups.

Deterministic rules are spectrally accurate for smooth integrands; Monte
Carlo results always carry a standard error.  Randomness is counter-based
(Philox) with substreams keyed on (seed, task labels) so parallel runs are
bit-reproducible.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, roots_jacobi, roots_legendre

from .mindex import Partition

#: default absolute tolerance for deterministic quadrature comparisons
DETERMINISTIC_TOL = 1e-8

#: Monte Carlo acceptance band, in units of the propagated standard error
SIGMA_BAND = 5.0


@dataclass(frozen=True)
class QuadratureSpec:
    """Node counts, sample counts and the seed: the reproducibility contract.

    ``lam`` is the weight exponent recorded for a run; operations that take
    an explicit ``lam`` argument use that argument.
    """

    lam: float = 0.0
    radial_nodes: int = 24
    torus_nodes: int = 16
    sphere_nodes: int = 24
    ball_samples: int = 200_000
    haar_samples: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if not self.lam > -1:
            raise ValueError(f"lam must be > -1, got {self.lam}")
        for name in ("radial_nodes", "torus_nodes", "sphere_nodes"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("ball_samples", "haar_samples"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass(frozen=True)
class PolarCoords:
    """Per-block polar data of points in the ball.

    ``r[q, j]`` is |z_(j)|, ``xi[j]`` the unit direction of block j+1,
    ``s[j]`` and ``t[j]`` its modulus/phase split xi = t * s componentwise.
    At r_j = 0 the direction defaults to the first coordinate vector; zero
    components get phase 1.
    """

    r: np.ndarray
    xi: tuple[np.ndarray, ...]
    s: tuple[np.ndarray, ...]
    t: tuple[np.ndarray, ...]


def block_radii(Z: np.ndarray, p: Partition) -> np.ndarray:
    """Block radii |z_(j)| for row-stacked points Z of shape (N, n)."""
    Z = np.atleast_2d(Z)
    return np.stack(
        [np.linalg.norm(Z[:, sl], axis=1) for sl in p.block_slices()], axis=1
    )


def block_direction(Z: np.ndarray, p: Partition, j: int) -> np.ndarray:
    """Unit direction xi_(j) of block j; first basis vector where r_j = 0."""
    Z = np.atleast_2d(Z)
    zj = Z[:, p.block_slice(j)]
    r = np.linalg.norm(zj, axis=1)
    safe = np.where(r > 0, r, 1.0)
    xi = zj / safe[:, None]
    if np.any(r == 0):
        e1 = np.zeros(zj.shape[1], dtype=complex)
        e1[0] = 1.0
        xi[r == 0] = e1
    return xi


def phase_split(xi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Componentwise split xi = t * s with s = |xi| >= 0 and |t| = 1."""
    s = np.abs(xi)
    t = np.where(s > 0, xi / np.where(s > 0, s, 1.0), 1.0 + 0.0j)
    return s, t


def polar_coords(Z: np.ndarray, p: Partition) -> PolarCoords:
    """Full polar decomposition of row-stacked points."""
    r = block_radii(Z, p)
    xi, s, t = [], [], []
    for j in range(1, p.m + 1):
        x = block_direction(Z, p, j)
        sj, tj = phase_split(x)
        xi.append(x)
        s.append(sj)
        t.append(tj)
    return PolarCoords(r, tuple(xi), tuple(s), tuple(t))


# ---------------------------------------------------------------------------
# reproducible random streams
# ---------------------------------------------------------------------------


def _tag(label) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label) & 0xFFFFFFFF
    digest = hashlib.blake2s(str(label).encode(), digest_size=4).digest()
    return int.from_bytes(digest, "little")


def substream(seed: int, *labels) -> np.random.Generator:
    """Counter-based generator for the task identified by the labels.

    Streams with distinct (seed, labels) are statistically independent and
    do not depend on creation order, so per-block work can run in parallel
    without losing bit-reproducibility.
    """
    key = tuple(_tag(l) for l in labels)
    seq = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=key)
    return np.random.Generator(np.random.Philox(seq))


# ---------------------------------------------------------------------------
# normalizing constant and exact sphere moments
# ---------------------------------------------------------------------------


def c_lambda(n: int, lam: float) -> float:
    """Normalizing constant Gamma(n+lam+1) / (pi^n Gamma(lam+1))."""
    if not lam > -1:
        raise ValueError(f"lam must be > -1, got {lam}")
    return math.exp(gammaln(n + lam + 1) - gammaln(lam + 1) - n * math.log(math.pi))


def sphere_monomial_integral(k: int, alpha, beta) -> float:
    """Integral of xi^alpha * conj(xi)^beta over the unit sphere of C^k.

    Equals 2 pi^k alpha! / (k - 1 + |alpha|)! when alpha == beta and zero
    otherwise (surface measure, not normalized).
    """
    alpha = tuple(int(a) for a in alpha)
    beta = tuple(int(b) for b in beta)
    if len(alpha) != k or len(beta) != k:
        raise ValueError("exponent length must equal k")
    if alpha != beta:
        return 0.0
    num = 2 * math.pi**k
    fac = 1
    for a in alpha:
        fac *= math.factorial(a)
    return num * fac / math.factorial(k - 1 + sum(alpha))


# ---------------------------------------------------------------------------
# deterministic rules
# ---------------------------------------------------------------------------


def _jacobi_rule_01(nodes: int, exp_x: float, exp_1mx: float):
    """Nodes/weights for integral over [0,1] of x^exp_x (1-x)^exp_1mx f(x)."""
    t, w = roots_jacobi(nodes, exp_1mx, exp_x)
    x = 0.5 * (t + 1.0)
    w = w * 0.5 ** (exp_x + exp_1mx + 1.0)
    return x, w


def radial_rule(p: Partition, kappa, spec: QuadratureSpec, lam: float | None = None):
    """Weighted nodes on tau(B^m) for the radial part of the block integrals.

    Returns (R, w) with R of shape (Q, m) such that sum(w * phi(R)) approximates
    the integral of phi(r) (1-|r|^2)^lam prod_j r_j^(2 k_j + 2 kappa_j - 1)
    over tau(B^m).  Exact to roundoff for phi polynomial in r^2 of degree
    below the node count in each variable.

    The substitution u_j = r_j^2 maps the domain to the simplex; an iterated
    (Duffy-type) factorization then turns the weight into a product of
    classical Jacobi weights, one per dimension.
    """
    lam = spec.lam if lam is None else lam
    if not lam > -1:
        raise ValueError(f"lam must be > -1, got {lam}")
    kappa = tuple(int(v) for v in kappa)
    if len(kappa) != p.m:
        raise ValueError(f"kappa length {len(kappa)} != m = {p.m}")
    a = [kj + cj for kj, cj in zip(p.k, kappa)]  # u_j exponent is a_j - 1
    m = p.m
    # trailing degree sums A_i = sum_{l>i} a_l
    tail = np.concatenate((np.cumsum(a[::-1])[::-1][1:], [0.0]))
    axes = [
        _jacobi_rule_01(spec.radial_nodes, a[i] - 1.0, lam + tail[i])
        for i in range(m)
    ]
    grids = np.meshgrid(*[x for x, _ in axes], indexing="ij")
    X = np.stack([g.reshape(-1) for g in grids], axis=1)  # (Q, m) in [0,1]^m
    W = axes[0][1]
    for i in range(1, m):
        W = np.multiply.outer(W, axes[i][1])
    W = np.asarray(W).reshape(-1)
    # iterated map x -> u on the simplex: u_i = x_i * prod_{l<i} (1 - x_l)
    U = np.empty_like(X)
    rem = np.ones(X.shape[0])
    for i in range(m):
        U[:, i] = X[:, i] * rem
        rem = rem * (1.0 - X[:, i])
    R = np.sqrt(U)
    return R, W / (2.0**m)


def torus_rule(k_j: int, nodes: int):
    """Equispaced product rule on the k_j-torus with total mass (2 pi)^k_j.

    Exact for the characters t^gamma with every |gamma_i| < nodes.
    """
    if nodes < 1:
        raise ValueError("nodes must be >= 1")
    if k_j < 1:
        raise ValueError("k_j must be >= 1")
    angles = 2.0 * math.pi * np.arange(nodes) / nodes
    circle = np.exp(1j * angles)
    grids = np.meshgrid(*([circle] * k_j), indexing="ij")
    T = np.stack([g.reshape(-1) for g in grids], axis=1)
    w = np.full(T.shape[0], (2.0 * math.pi / nodes) ** k_j)
    return T, w


def positive_sphere_rule(k_j: int, nodes: int):
    """Nodes/weights for the positive part of the unit sphere of R^k_j.

    Integrates against the Riemannian surface measure.  For k_j = 1 the
    domain is the single point s = 1.  Otherwise the domain is parameterized
    by k_j - 1 angles in [0, pi/2] with Gauss-Legendre per angle and the
    spherical Jacobian prod_i sin(theta_i)^(k_j - 1 - i).
    """
    if k_j < 1:
        raise ValueError("k_j must be >= 1")
    if k_j == 1:
        return np.ones((1, 1)), np.ones(1)
    t, w = roots_legendre(nodes)
    theta = 0.25 * math.pi * (t + 1.0)
    wt = 0.25 * math.pi * w
    grids = np.meshgrid(*([theta] * (k_j - 1)), indexing="ij")
    Th = np.stack([g.reshape(-1) for g in grids], axis=1)  # (Q, k_j-1)
    wgrids = np.meshgrid(*([wt] * (k_j - 1)), indexing="ij")
    W = np.prod([g.reshape(-1) for g in wgrids], axis=0)
    for i in range(k_j - 1):
        W *= np.sin(Th[:, i]) ** (k_j - 2 - i)
    S = np.empty((Th.shape[0], k_j))
    sin_prod = np.ones(Th.shape[0])
    for i in range(k_j - 1):
        S[:, i] = np.cos(Th[:, i]) * sin_prod
        sin_prod = sin_prod * np.sin(Th[:, i])
    S[:, k_j - 1] = sin_prod
    return S, W


def complex_sphere_rule(k_j: int, spec: QuadratureSpec):
    """Combined rule on the unit sphere of C^k_j via xi = t * s.

    Returns (Xi, w) with Xi complex of shape (Q, k_j); the weights include
    the coordinate-change Jacobian s^(1,...,1), so sum(w * F(Xi))
    approximates the surface integral of F.
    """
    S, ws = positive_sphere_rule(k_j, spec.sphere_nodes)
    T, wt = torus_rule(k_j, spec.torus_nodes)
    Xi = T[None, :, :] * S[:, None, :]
    w = (ws * np.prod(S, axis=1))[:, None] * wt[None, :]
    return Xi.reshape(-1, k_j), w.reshape(-1)


# ---------------------------------------------------------------------------
# Haar-random unitaries and ball sampling
# ---------------------------------------------------------------------------


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed d x d unitary (QR of a complex Ginibre matrix)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    G = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2)
    Q, R = np.linalg.qr(G)
    diag = np.diagonal(R)
    return Q * (diag / np.abs(diag))


def haar_unitary_batch(d: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Stack of independent Haar unitaries, shape (count, d, d)."""
    G = (rng.standard_normal((count, d, d))
         + 1j * rng.standard_normal((count, d, d))) / math.sqrt(2)
    Q, R = np.linalg.qr(G)
    diag = np.diagonal(R, axis1=-2, axis2=-1)
    return Q * (diag / np.abs(diag))[:, None, :]


def haar_uk_sample(p: Partition, rng: np.random.Generator) -> np.ndarray:
    """Block-diagonal unitary with independent Haar blocks of sizes k_j."""
    A = np.zeros((p.n, p.n), dtype=complex)
    for sl, kj in zip(p.block_slices(), p.k):
        A[sl, sl] = haar_unitary(kj, rng)
    return A


def sample_group(p: Partition, group: str, rng: np.random.Generator,
                 j: int | None = None) -> np.ndarray:
    """Random element of one of the named subgroups of U(n).

    ``group`` is one of ``"tm"`` (per-block scalar phases), ``"tn"``
    (diagonal phases), ``"uk"`` (block-diagonal unitaries), ``"ukjt"``
    (block-diagonal with block j replaced by a scalar phase) or ``"un"``.
    """
    n = p.n
    if group == "un":
        return haar_unitary(n, rng)
    if group == "tn":
        return np.diag(np.exp(2j * math.pi * rng.random(n)))
    if group == "tm":
        phases = np.exp(2j * math.pi * rng.random(p.m))
        d = np.concatenate([np.full(kj, ph) for kj, ph in zip(p.k, phases)])
        return np.diag(d)
    if group == "uk":
        return haar_uk_sample(p, rng)
    if group == "ukjt":
        if j is None or not 1 <= j <= p.m:
            raise ValueError("group 'ukjt' needs a block index j in 1..m")
        A = np.zeros((n, n), dtype=complex)
        for l, (sl, kj) in enumerate(zip(p.block_slices(), p.k), start=1):
            if l == j:
                A[sl, sl] = np.exp(2j * math.pi * rng.random()) * np.eye(kj)
            else:
                A[sl, sl] = haar_unitary(kj, rng)
        return A
    raise ValueError(f"unknown group label {group!r}")


def sample_ball(n: int, lam: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Points of B^n distributed per the normalized weighted measure.

    The squared radius follows Beta(n, lam + 1) (the one-dimensional
    marginal of the weight (1 - |z|^2)^lam) and the direction is uniform.
    """
    if not lam > -1:
        raise ValueError(f"lam must be > -1, got {lam}")
    v = rng.beta(n, lam + 1.0, size)
    W = rng.standard_normal((size, n)) + 1j * rng.standard_normal((size, n))
    W /= np.linalg.norm(W, axis=1)[:, None]
    return np.sqrt(v)[:, None] * W


def ball_sampler(n: int, lam: float, rng: np.random.Generator, batch: int = 65536):
    """Infinite stream of sample batches from the weighted ball measure."""
    while True:
        yield sample_ball(n, lam, batch, rng)
