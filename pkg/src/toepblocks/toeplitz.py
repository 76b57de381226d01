"""Truncated Toeplitz operators in the orthonormal monomial basis.

Operators are stored blockwise: one dense complex matrix per isotypic degree
vector kappa, rows and columns following the graded-lex basis enumeration.
Four assembly paths exist:

* ``toeplitz_block_oracle`` -- brute-force Monte Carlo against the weighted
  ball measure (works for every bounded symbol, carries standard errors),
* ``toeplitz_block_f`` / ``toeplitz_block_g`` -- deterministic quadrature of
  the single-block matrix coefficients for phase-invariant direction
  payloads, with the off-slice entries exactly zero,
* ``gamma_quasi_radial`` + ``assemble_diagonal`` -- scalar action per block
  for symbols that depend on the block radii only.

``toeplitz_operator`` dispatches on the declared symbol class.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from scipy.special import gammaln

from .mindex import (
    Partition,
    alpha_factorial,
    compositions,
    dim_P,
    enumerate_basis,
    enumerate_kappas,
    grlex_key,
)
from .quad import (
    DETERMINISTIC_TOL,
    QuadratureSpec,
    complex_sphere_rule,
    positive_sphere_rule,
    radial_rule,
    sample_ball,
    substream,
    torus_rule,
)
from .symbols import (
    QUASI_RADIAL,
    TM_INVARIANT,
    Symbol,
    _is_block_diagonal,
    kj_quasi_homogeneous,
)


def monomial_norm_sq(n: int, lam: float, alpha) -> float:
    """Squared Bergman norm of z^alpha: alpha! G(n+lam+1) / G(n+lam+|alpha|+1)."""
    if not lam > -1:
        raise ValueError(f"lam must be > -1, got {lam}")
    alpha = tuple(int(a) for a in alpha)
    log = gammaln(n + lam + 1) - gammaln(n + lam + sum(alpha) + 1)
    log += sum(gammaln(a + 1) for a in alpha)
    return float(math.exp(log))


def _monomial_rows(Z: np.ndarray, alphas) -> np.ndarray:
    """Rows z^alpha over the sample points; shape (len(alphas), N)."""
    Z = np.atleast_2d(Z)
    A = np.asarray(list(alphas), dtype=int)
    out = np.ones((A.shape[0], Z.shape[0]), dtype=complex)
    for i in range(Z.shape[1]):
        d = A[:, i]
        mx = int(d.max()) if len(d) else 0
        if mx == 0:
            continue
        pw = np.empty((mx + 1, Z.shape[0]), dtype=complex)
        pw[0] = 1.0
        for e in range(1, mx + 1):
            pw[e] = pw[e - 1] * Z[:, i]
        out *= pw[d]
    return out


def orthonormal_rows(Z: np.ndarray, alphas, n: int, lam: float) -> np.ndarray:
    """Rows e_alpha(z) of the orthonormal monomial basis."""
    E = _monomial_rows(Z, alphas)
    norms = np.array([monomial_norm_sq(n, lam, a) for a in alphas])
    return E / np.sqrt(norms)[:, None]


@dataclass
class BlockOperator:
    """kappa-indexed family of dense matrices representing a truncation.

    ``blocks[kappa]`` is the matrix of the operator restricted to the slice
    P_kappa in the orthonormal basis, entry [row beta, col alpha] equal to
    <T e_alpha, e_beta>.  ``block_errors`` is a scalar error estimate per
    block (max standard error for Monte Carlo blocks, the nominal quadrature
    tolerance otherwise); ``block_stderr`` holds entrywise standard errors
    when the block came from the sampling oracle.
    """

    partition: Partition
    lam: float
    degree: int
    blocks: dict
    provenance: str
    block_errors: dict = field(default_factory=dict)
    block_stderr: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def kappas(self):
        return sorted(self.blocks.keys(), key=grlex_key)

    def block(self, kappa) -> np.ndarray:
        return self.blocks[tuple(kappa)]

    def compatible_with(self, other: "BlockOperator") -> bool:
        return (
            self.partition == other.partition
            and self.lam == other.lam
            and self.degree == other.degree
        )


# ---------------------------------------------------------------------------
# Monte Carlo oracle
# ---------------------------------------------------------------------------

_CHUNK_BUDGET = 4_000_000  # complex numbers per evaluation chunk


def oracle_matrix(a: Symbol, alphas, betas, lam: float, spec: QuadratureSpec,
                  rng, n_samples: int | None = None):
    """Monte Carlo estimate of the Gram-type matrix <a e_alpha, e_beta>.

    Entries are expectations of a(z) e_alpha(z) conj(e_beta(z)) under the
    normalized weighted ball measure.  Returns (mean, stderr) with stderr
    the entrywise standard error of the mean.
    """
    p = a.partition
    alphas = [tuple(al) for al in alphas]
    betas = [tuple(be) for be in betas]
    same = alphas == betas
    N = int(n_samples if n_samples is not None else spec.ball_samples)
    rows = max(len(alphas), len(betas), 1)
    chunk = max(1024, min(N, _CHUNK_BUDGET // rows))
    S1 = np.zeros((len(betas), len(alphas)), dtype=complex)
    S2 = np.zeros((len(betas), len(alphas)))
    done = 0
    while done < N:
        c = min(chunk, N - done)
        Z = sample_ball(p.n, lam, c, rng)
        av = a(Z)
        Ea = orthonormal_rows(Z, alphas, p.n, lam)
        Eb = Ea if same else orthonormal_rows(Z, betas, p.n, lam)
        S1 += np.conj(Eb) @ (av[:, None] * Ea.T)
        S2 += np.abs(Eb) ** 2 @ (np.abs(av[:, None]) ** 2 * np.abs(Ea.T) ** 2)
        done += c
    mean = S1 / N
    var = np.maximum(S2 / N - np.abs(mean) ** 2, 0.0)
    return mean, np.sqrt(var / N)


def toeplitz_block_oracle(a: Symbol, kappa, lam: float, spec: QuadratureSpec,
                          rng):
    """Monte Carlo estimate of the block of T_a on the slice P_kappa."""
    basis = enumerate_basis(a.partition, kappa)
    return oracle_matrix(a, basis.alphas, basis.alphas, lam, spec, rng)


# ---------------------------------------------------------------------------
# deterministic single-block paths
# ---------------------------------------------------------------------------


def _single_block_prefactor(p: Partition, j: int, kappa, lam: float,
                            block_basis) -> np.ndarray:
    """Prefactor matrix for the single-block matrix coefficients."""
    n, m = p.n, p.m
    kj = p.k[j - 1]
    base = (m - 1) * math.log(2.0)
    base += gammaln(n + lam + sum(kappa) + 1) - gammaln(lam + 1)
    base -= kj * math.log(math.pi)
    for l, (kl, cl) in enumerate(zip(p.k, kappa), start=1):
        if l != j:
            base -= gammaln(kl + cl)
    half_lg = np.array(
        [0.5 * math.log(alpha_factorial(b)) for b in block_basis]
    )
    return np.exp(base - half_lg[:, None] - half_lg[None, :])


def _embed_single_block(M: np.ndarray, p: Partition, kappa, j: int) -> np.ndarray:
    """Kronecker-embed the block-j matrix M into the full P_kappa layout."""
    mats = []
    for l, (kl, cl) in enumerate(zip(p.k, kappa), start=1):
        if l == j:
            mats.append(M)
        else:
            mats.append(np.eye(math.comb(kl + cl - 1, cl), dtype=complex))
    return reduce(np.kron, mats)


def _require_payload(a: Symbol, j: int, which: str):
    payload = getattr(a, which)
    if payload is None or a.j != j:
        raise ValueError(
            f"symbol {a.name!r} has no {which} on block {j}"
        )
    if not a.klass.implies(kj_quasi_homogeneous(j)):
        raise ValueError(
            f"symbol {a.name!r} (class {a.klass.kind}) is not declared "
            f"invariant for the circle-times-blocks group of block {j}"
        )
    return payload


def mblock_f(a: Symbol, j: int, kappa, lam: float, spec: QuadratureSpec
             ) -> np.ndarray:
    """Single-block matrix of T_a on P_kappa from the direction payload.

    Entry [beta_(j), alpha_(j)] carries the quadrature of
    f(r, xi) xi^alpha_(j) conj(xi)^beta_(j) against the radial weight and
    the sphere surface measure, times the closed-form prefactor.
    """
    f = _require_payload(a, j, "f_payload")
    p = a.partition
    kappa = tuple(int(v) for v in kappa)
    kj = p.k[j - 1]
    block_basis = list(compositions(kappa[j - 1], kj))
    R, wr = radial_rule(p, kappa, spec, lam)
    Xi, wxi = complex_sphere_rule(kj, spec)
    Qx = Xi.shape[0]
    Wx = np.zeros(Qx, dtype=complex)
    r_chunk = max(1, _CHUNK_BUDGET // Qx)
    for start in range(0, R.shape[0], r_chunk):
        Rc = R[start:start + r_chunk]
        wc = wr[start:start + r_chunk]
        nc = Rc.shape[0]
        rr = np.repeat(Rc, Qx, axis=0)
        xx = np.tile(Xi, (nc, 1))
        F = np.asarray(f(rr, xx), dtype=complex).reshape(nc, Qx)
        Wx += wc @ F
    Wx *= wxi  # radial contraction done; apply sphere weights
    X = _monomial_rows(Xi, block_basis)  # (d_j, Qx)
    inner = (X * Wx) @ np.conj(X.T)  # [alpha, beta]
    pref = _single_block_prefactor(p, j, kappa, lam, block_basis)
    return pref * inner.T


def mblock_g(a: Symbol, j: int, kappa, lam: float, spec: QuadratureSpec
             ) -> np.ndarray:
    """Single-block matrix from the modulus/phase payload g(r, s, t).

    Same prefactor as the direction form; the integrand is
    g(r, s, t) s^(alpha + beta + 1) t^(alpha - beta) over the positive
    sphere part and the torus.
    """
    g = _require_payload(a, j, "g_payload")
    p = a.partition
    kappa = tuple(int(v) for v in kappa)
    kj = p.k[j - 1]
    kapj = kappa[j - 1]
    block_basis = list(compositions(kapj, kj))
    d = len(block_basis)
    R, wr = radial_rule(p, kappa, spec, lam)
    S, ws = positive_sphere_rule(kj, spec.sphere_nodes)
    T, wt = torus_rule(kj, spec.torus_nodes)
    Qs, Qt = S.shape[0], T.shape[0]

    # contract the radial direction first
    Wst = np.zeros((Qs, Qt), dtype=complex)
    r_chunk = max(1, _CHUNK_BUDGET // (Qs * Qt))
    st_s = np.repeat(S, Qt, axis=0)
    st_t = np.tile(T, (Qs, 1))
    for start in range(0, R.shape[0], r_chunk):
        Rc = R[start:start + r_chunk]
        wc = wr[start:start + r_chunk]
        nc = Rc.shape[0]
        rr = np.repeat(Rc, Qs * Qt, axis=0)
        sg = np.tile(st_s, (nc, 1))
        tg = np.tile(st_t, (nc, 1))
        G = np.asarray(g(rr, sg, tg), dtype=complex).reshape(nc, Qs * Qt)
        Wst += (wc @ G).reshape(Qs, Qt)
    Wst = Wst * ws[:, None] * wt[None, :]

    # power tables for s^(a+b+1) and t^(a-b)
    A = np.asarray(block_basis, dtype=int)  # (d, kj)
    smax = 2 * kapj + 1
    spw = np.empty((kj, smax + 1, Qs))
    spw[:, 0, :] = 1.0
    for i in range(kj):
        for e in range(1, smax + 1):
            spw[i, e] = spw[i, e - 1] * S[:, i]
    tpw = np.empty((kj, 2 * kapj + 1, Qt), dtype=complex)
    tpw[:, kapj, :] = 1.0
    for i in range(kj):
        for e in range(1, kapj + 1):
            tpw[i, kapj + e] = tpw[i, kapj + e - 1] * T[:, i]
            tpw[i, kapj - e] = tpw[i, kapj - e + 1] * np.conj(T[:, i])
    SP = np.ones((d, d, Qs))
    TP = np.ones((d, d, Qt), dtype=complex)
    for i in range(kj):
        SP *= spw[i][A[None, :, i] + A[:, None, i] + 1]
        TP *= tpw[i][kapj + A[None, :, i] - A[:, None, i]]
    inner = np.einsum("bas,st,bat->ba", SP, Wst, TP)
    pref = _single_block_prefactor(p, j, kappa, lam, block_basis)
    return pref * inner


def toeplitz_block_f(a: Symbol, j: int, kappa, lam: float,
                     spec: QuadratureSpec) -> np.ndarray:
    """Full P_kappa block for a direction-payload symbol on block j."""
    M = mblock_f(a, j, kappa, lam, spec)
    return _embed_single_block(M, a.partition, tuple(int(v) for v in kappa), j)


def toeplitz_block_g(a: Symbol, j: int, kappa, lam: float,
                     spec: QuadratureSpec) -> np.ndarray:
    """Full P_kappa block for a modulus/phase-payload symbol on block j."""
    M = mblock_g(a, j, kappa, lam, spec)
    return _embed_single_block(M, a.partition, tuple(int(v) for v in kappa), j)


def gamma_quasi_radial(profile, kappa, lam: float, p: Partition,
                       spec: QuadratureSpec) -> complex:
    """Scalar by which a block-radial symbol acts on the slice P_kappa.

    Equals the closed-form prefactor 2^m G(n+lam+|kappa|+1) /
    (G(lam+1) prod_j (k_j+kappa_j-1)!) times the radial integral of the
    profile against the block weight.
    """
    kappa = tuple(int(v) for v in kappa)
    R, w = radial_rule(p, kappa, spec, lam)
    vals = np.asarray(profile(R), dtype=complex)
    log_pref = p.m * math.log(2.0) + gammaln(p.n + lam + sum(kappa) + 1)
    log_pref -= gammaln(lam + 1)
    for kj, cj in zip(p.k, kappa):
        log_pref -= gammaln(kj + cj)
    return complex(math.exp(log_pref) * (w @ vals))


def assemble_diagonal(gamma, p: Partition, degree: int, lam: float
                      ) -> BlockOperator:
    """Block operator with block kappa equal to gamma(kappa) times identity."""
    blocks, errors = {}, {}
    for kappa in enumerate_kappas(p, degree):
        d = dim_P(p, kappa)
        blocks[kappa] = complex(gamma(kappa)) * np.eye(d, dtype=complex)
        errors[kappa] = 0.0
    return BlockOperator(p, lam, degree, blocks, "diagonal-gamma", errors)


def unitary_action_matrix(A: np.ndarray, p: Partition, kappa,
                          lam: float = 0.0) -> np.ndarray:
    """Matrix of the substitution action f -> f(A^{-1} z) on the slice P_kappa.

    A must be block diagonal for the partition so the slice is preserved.
    Within a fixed-degree slice the orthonormal-basis matrix does not depend
    on lam (the Gamma factors in the norms cancel); the argument is kept for
    interface symmetry.
    """
    A = np.asarray(A, dtype=complex)
    if A.shape != (p.n, p.n):
        raise ValueError(f"matrix shape {A.shape} does not match n = {p.n}")
    if not _is_block_diagonal(A, p):
        raise ValueError("matrix must be block diagonal for the partition")
    if np.max(np.abs(A.conj().T @ A - np.eye(p.n))) > 1e-10:
        raise ValueError("matrix is not unitary to tolerance 1e-10")
    kappa = tuple(int(v) for v in kappa)
    if len(kappa) != p.m:
        raise ValueError(f"kappa length {len(kappa)} != m = {p.m}")
    mats = []
    for j0, (sl, kj) in enumerate(zip(p.block_slices(), p.k)):
        basis = list(compositions(kappa[j0], kj))
        index = {b: i for i, b in enumerate(basis)}
        B = A[sl, sl].conj().T
        d = len(basis)
        Rj = np.zeros((d, d), dtype=complex)
        sq = {b: math.sqrt(alpha_factorial(b)) for b in basis}
        for ai, al in enumerate(basis):
            poly = {(0,) * kj: 1.0 + 0.0j}
            for coord in range(kj):
                row = B[coord]
                for _ in range(al[coord]):
                    poly = _mul_linear(poly, row, kj)
            inv = 1.0 / sq[al]
            for be, c in poly.items():
                Rj[index[be], ai] = c * sq[be] * inv
        mats.append(Rj)
    return reduce(np.kron, mats)


def _mul_linear(poly: dict, row: np.ndarray, k: int) -> dict:
    out: dict = {}
    for mi, c in poly.items():
        for l in range(k):
            cl = row[l]
            if cl == 0:
                continue
            key = mi[:l] + (mi[l] + 1,) + mi[l + 1:]
            out[key] = out.get(key, 0.0 + 0.0j) + c * cl
    return out


def average_operator(T: BlockOperator, p: Partition, n_samples: int, rng
                     ) -> BlockOperator:
    """Haar average of R(A) T R(A)* over block-diagonal unitaries A.

    Traces are preserved per block (similarity invariance); the reported
    per-block error is the Frobenius distance to the nearest scalar matrix,
    which measures how far the finite average still is from the Haar limit.
    """
    if p != T.partition:
        raise ValueError("partition does not match the operator")
    from .quad import haar_uk_sample

    acc = {kappa: np.zeros_like(B) for kappa, B in T.blocks.items()}
    for _ in range(int(n_samples)):
        A = haar_uk_sample(p, rng)
        for kappa, B in T.blocks.items():
            R = unitary_action_matrix(A, p, kappa, T.lam)
            acc[kappa] += R @ B @ R.conj().T
    blocks = {kappa: M / n_samples for kappa, M in acc.items()}
    errors = {}
    for kappa, B in blocks.items():
        d = B.shape[0]
        scal = np.trace(B) / d
        errors[kappa] = float(np.linalg.norm(B - scal * np.eye(d), "fro"))
    meta = dict(T.meta)
    meta["averaging_samples"] = int(n_samples)
    return BlockOperator(p, T.lam, T.degree, blocks, "averaged", errors,
                         meta=meta)


def toeplitz_operator(a: Symbol, p: Partition, degree: int, lam: float,
                      spec: QuadratureSpec, rng=None) -> BlockOperator:
    """Assemble all blocks with |kappa| <= degree, choosing the best path.

    Quasi-radial symbols with a radial profile go through the diagonal
    scalar path, direction/phase payloads through the deterministic
    single-block quadratures, and everything else through the sampling
    oracle.  For symbols without block-torus invariance the result is the
    compression to total degree <= degree and a warning is recorded.
    """
    if a.partition != p:
        raise ValueError("symbol partition does not match")
    warnings = []
    if a.klass.implies(QUASI_RADIAL) and a.radial_profile is not None:
        op = assemble_diagonal(
            lambda kappa: gamma_quasi_radial(a.radial_profile, kappa, lam, p, spec),
            p, degree, lam)
        op.meta.update(symbol=a.name, seed=spec.seed)
        return op
    blocks, errors, stderrs = {}, {}, {}
    if a.f_payload is not None and a.j is not None:
        provenance = "f-form"
        for kappa in enumerate_kappas(p, degree):
            blocks[kappa] = toeplitz_block_f(a, a.j, kappa, lam, spec)
            errors[kappa] = DETERMINISTIC_TOL
    elif a.g_payload is not None and a.j is not None:
        provenance = "g-form"
        for kappa in enumerate_kappas(p, degree):
            blocks[kappa] = toeplitz_block_g(a, a.j, kappa, lam, spec)
            errors[kappa] = DETERMINISTIC_TOL
    else:
        provenance = "oracle"
        if not a.klass.implies(TM_INVARIANT):
            warnings.append(
                "symbol is not declared block-torus invariant: the result is "
                "the compression to total degree <= "
                f"{degree}; off-block entries are dropped"
            )
        for kappa in enumerate_kappas(p, degree):
            block_rng = rng if rng is not None else substream(
                spec.seed, "oracle", a.name, repr(lam), repr(kappa))
            G, SE = toeplitz_block_oracle(a, kappa, lam, spec, block_rng)
            blocks[kappa] = G
            stderrs[kappa] = SE
            errors[kappa] = float(np.max(SE)) if SE.size else 0.0
    return BlockOperator(p, lam, degree, blocks, provenance, errors, stderrs,
                         meta={"symbol": a.name, "seed": spec.seed,
                               "warnings": warnings})


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

_FORMAT = "toepblocks.block-operator"
_VERSION = 1


def _matrix_to_pairs(M: np.ndarray):
    return [[[float(v.real), float(v.imag)] for v in row] for row in M]


def _pairs_to_matrix(rows):
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def operator_to_json(T: BlockOperator) -> dict:
    blocks = []
    for kappa in T.kappas():
        B = T.blocks[kappa]
        entry = {
            "kappa": list(kappa),
            "dim": B.shape[0],
            "matrix": _matrix_to_pairs(B),
            "error": float(T.block_errors.get(kappa, 0.0)),
        }
        if kappa in T.block_stderr:
            entry["stderr"] = [
                [float(v) for v in row] for row in T.block_stderr[kappa]
            ]
        blocks.append(entry)
    return {
        "format": _FORMAT,
        "version": _VERSION,
        "partition": list(T.partition.k),
        "lambda": float(T.lam),
        "degree": int(T.degree),
        "provenance": T.provenance,
        "meta": T.meta,
        "blocks": blocks,
    }


def operator_from_json(doc: dict) -> BlockOperator:
    if doc.get("format") != _FORMAT:
        raise ValueError("not a block-operator document")
    if doc.get("version") != _VERSION:
        raise ValueError(f"unsupported version {doc.get('version')!r}")
    p = Partition(tuple(doc["partition"]))
    blocks, errors, stderrs = {}, {}, {}
    for entry in doc["blocks"]:
        kappa = tuple(int(v) for v in entry["kappa"])
        blocks[kappa] = _pairs_to_matrix(entry["matrix"])
        errors[kappa] = float(entry.get("error", 0.0))
        if "stderr" in entry:
            stderrs[kappa] = np.array(entry["stderr"])
    return BlockOperator(p, float(doc["lambda"]), int(doc["degree"]), blocks,
                         doc["provenance"], errors, stderrs,
                         meta=doc.get("meta", {}))


def save_operator(T: BlockOperator, path) -> None:
    with open(path, "w") as fh:
        json.dump(operator_to_json(T), fh, indent=1)


def load_operator(path) -> BlockOperator:
    with open(path) as fh:
        return operator_from_json(json.load(fh))


def _fmt_complex(z: complex) -> str:
    return f"{z.real:.17g}{z.imag:+.17g}j"


def block_to_csv(T: BlockOperator, kappa, fh) -> None:
    """One CSV per block: beta labels across, alpha labels down."""
    kappa = tuple(int(v) for v in kappa)
    basis = enumerate_basis(T.partition, kappa)
    B = T.blocks[kappa]
    writer = csv.writer(fh)
    labels = [";".join(str(v) for v in al) for al in basis]
    writer.writerow(["alpha\\beta"] + labels)
    for col, al in enumerate(labels):
        writer.writerow([al] + [_fmt_complex(B[row, col]) for row in range(len(basis))])
