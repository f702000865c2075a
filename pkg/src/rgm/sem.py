"""Gaussian simultaneous equation model ``Y = A Y + B X + E``.

Genes are indexed ``0..p-1`` internally. DNA-level column ``2i`` is the copy
number of gene ``i`` and column ``2i+1`` its methylation, so ``B`` may only be
nonzero at ``(i, 2i)`` and ``(i, 2i+1)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .graph import ReciprocalGraph


class ModelError(ValueError):
    """Invalid SEM parameters, data, or scenario settings."""


def b_mask(p: int) -> np.ndarray:
    """Boolean (p, 2p) mask of the allowed DNA -> gene coefficients."""
    mask = np.zeros((p, 2 * p), dtype=bool)
    rows = np.arange(p)
    mask[rows, 2 * rows] = True
    mask[rows, 2 * rows + 1] = True
    return mask


def compact_b(B: np.ndarray) -> np.ndarray:
    """(p, 2p) masked matrix -> (p, 2) [copy number, methylation] per gene."""
    p = B.shape[0]
    rows = np.arange(p)
    return np.stack([B[rows, 2 * rows], B[rows, 2 * rows + 1]], axis=1)


def expand_b(Bc: np.ndarray) -> np.ndarray:
    """Inverse of :func:`compact_b`; works on a trailing (p, 2) axis pair."""
    p = Bc.shape[-2]
    out = np.zeros(Bc.shape[:-2] + (p, 2 * p), dtype=Bc.dtype)
    rows = np.arange(p)
    out[..., rows, 2 * rows] = Bc[..., :, 0]
    out[..., rows, 2 * rows + 1] = Bc[..., :, 1]
    return out


@dataclass(frozen=True)
class SemParameters:
    A: np.ndarray
    B: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        B = np.asarray(self.B, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float).reshape(-1)
        p = sigma.shape[0]
        if A.shape != (p, p):
            raise ModelError(f"A must be {p}x{p}, got {A.shape}")
        if B.shape != (p, 2 * p):
            raise ModelError(f"B must be {p}x{2 * p}, got {B.shape}")
        if np.any(np.diag(A) != 0):
            raise ModelError("A must have a zero diagonal")
        if np.any(B[~b_mask(p)] != 0):
            raise ModelError("B is nonzero outside the intragenic mask")
        if np.any(~(sigma > 0)) or not np.all(np.isfinite(sigma)):
            raise ModelError("sigma entries must be positive and finite")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise ModelError("A and B must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "sigma", sigma)

    @property
    def p(self) -> int:
        return self.sigma.shape[0]

    def to_dict(self) -> dict:
        return {"p": self.p, "A": self.A.tolist(), "B": self.B.tolist(), "sigma": self.sigma.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "SemParameters":
        try:
            return cls(np.array(doc["A"], dtype=float), np.array(doc["B"], dtype=float),
                       np.array(doc["sigma"], dtype=float))
        except KeyError as exc:
            raise ModelError(f"missing key {exc} in parameter document") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SemParameters":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class DataSet:
    Y: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        Y = np.atleast_2d(np.asarray(self.Y, dtype=float))
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        if Y.shape[0] != X.shape[0]:
            raise ModelError(f"Y has {Y.shape[0]} rows but X has {X.shape[0]}")
        if X.shape[1] != 2 * Y.shape[1]:
            raise ModelError(f"X needs {2 * Y.shape[1]} columns for p={Y.shape[1]}, got {X.shape[1]}")
        if not (np.all(np.isfinite(Y)) and np.all(np.isfinite(X))):
            raise ModelError("data contain non-finite values")
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "X", X)

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    @property
    def p(self) -> int:
        return self.Y.shape[1]

    @classmethod
    def empty(cls, p: int) -> "DataSet":
        return cls(np.zeros((0, p)), np.zeros((0, 2 * p)))

    def standardized(self) -> "DataSet":
        """Column-centred, unit-variance copy (constant columns are only centred)."""
        def _std(M):
            M = M - M.mean(axis=0)
            sd = M.std(axis=0)
            sd[sd == 0] = 1.0
            return M / sd
        return DataSet(_std(self.Y), _std(self.X))

    def gram_blocks(self) -> np.ndarray:
        """Per-gene Gram matrices over ``[Y, X_2i, X_2i+1]``, shape (p, p+2, p+2)."""
        p = self.p
        out = np.empty((p, p + 2, p + 2))
        for i in range(p):
            Z = np.column_stack([self.Y, self.X[:, 2 * i], self.X[:, 2 * i + 1]])
            out[i] = Z.T @ Z
        return out


@dataclass(frozen=True)
class ScenarioSpec:
    scenario: int = 1
    n: int = 276
    p: int = 10
    effect: Optional[float] = None
    noise_variance: Optional[float] = None
    a_density: float = 1 / 5
    b_density: float = 2 / 3
    df: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if self.scenario not in (1, 2, 3):
            raise ModelError(f"scenario must be 1, 2 or 3, got {self.scenario}")
        if self.n < 1 or self.p < 1:
            raise ModelError("n and p must be positive")
        if self.scenario == 3 and not self.df > 2:
            raise ModelError("scenario 3 needs df > 2")
        if not (0 <= self.a_density <= 1 and 0 <= self.b_density <= 1):
            raise ModelError("densities must lie in [0, 1]")

    @property
    def effect_magnitude(self) -> float:
        if self.effect is not None:
            return self.effect
        return 0.4 if self.scenario == 2 else 0.5

    @property
    def noise(self) -> float:
        if self.noise_variance is not None:
            return self.noise_variance
        return 1.0 if self.scenario == 2 else 0.25

    def to_dict(self) -> dict:
        return {"scenario": self.scenario, "n": self.n, "p": self.p, "effect": self.effect_magnitude,
                "noise_variance": self.noise, "a_density": self.a_density, "b_density": self.b_density,
                "df": self.df, "seed": self.seed}

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioSpec":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in doc.items() if k in known})


def log_density(params: SemParameters, y, x) -> float:
    """Log density of one observation ``y | x`` without inverting ``I - A``.

    Returns ``-inf`` when ``|det(I - A)| < 1e-12``.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(x))):
        raise ModelError("non-finite observation")
    logdet = _kernels.logdet_i_minus(params.A)
    if logdet == -np.inf:
        return -np.inf
    eps = y - params.A @ y - params.B @ x
    return float(logdet - 0.5 * np.sum(np.log(2 * np.pi * params.sigma) + eps**2 / params.sigma))


def log_likelihood(params: SemParameters, data: DataSet) -> float:
    """Sum of :func:`log_density` over the rows of ``data``."""
    if data.n == 0:
        return 0.0
    logdet = _kernels.logdet_i_minus(params.A)
    if logdet == -np.inf:
        return -np.inf
    E = data.Y - data.Y @ params.A.T - data.X @ params.B.T
    rss = np.sum(E**2, axis=0)
    return float(data.n * logdet - 0.5 * np.sum(data.n * np.log(2 * np.pi * params.sigma) + rss / params.sigma))


def conditional_moments(params: SemParameters, x) -> Tuple[np.ndarray, np.ndarray]:
    """Mean and covariance of ``Y | X = x`` (explicit inverse; reporting path only)."""
    M = np.eye(params.p) - params.A
    if _kernels.lu_logabsdet(M) == -np.inf:
        raise ModelError("I - A is singular")
    Minv = np.linalg.inv(M)
    mean = Minv @ (params.B @ np.asarray(x, dtype=float))
    cov = Minv @ np.diag(params.sigma) @ Minv.T
    return mean, 0.5 * (cov + cov.T)


def path_diagram(params: SemParameters, psi_blocks: Optional[Iterable[Iterable[int]]] = None) -> ReciprocalGraph:
    """Path diagram on ``3p`` vertices: ``1..p`` are Y, ``p+1..3p`` are X.

    ``psi_blocks`` lists groups of 1-based X indices (``1..2p``) whose
    covariance block is full; members of a block are joined by undirected edges.
    """
    p = params.p
    directed = set()
    for i, j in zip(*np.nonzero(params.A)):
        directed.add((int(j) + 1, int(i) + 1))
    for i, k in zip(*np.nonzero(params.B)):
        directed.add((p + int(k) + 1, int(i) + 1))
    undirected = set()
    for block in psi_blocks or []:
        members = sorted(int(v) for v in block)
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                undirected.add((p + members[a], p + members[b]))
    return ReciprocalGraph(3 * p, frozenset(directed), frozenset(undirected))


def _random_support(rng, candidates: int, density: float) -> np.ndarray:
    """Exactly ``round(density * candidates)`` randomly chosen positions set True."""
    k = int(round(density * candidates))
    chosen = np.zeros(candidates, dtype=bool)
    chosen[rng.choice(candidates, size=k, replace=False)] = True
    return chosen


def _draw_truth(spec: ScenarioSpec, rng) -> SemParameters:
    p = spec.p
    mag = spec.effect_magnitude
    offdiag = ~np.eye(p, dtype=bool)
    while True:
        A = np.zeros((p, p))
        support = _random_support(rng, p * (p - 1), spec.a_density)
        signs = rng.choice([-1.0, 1.0], size=p * (p - 1))
        A[offdiag] = np.where(support, mag * signs, 0.0)
        if _kernels.logdet_i_minus(A) > -np.inf:
            break
    Bc = _random_support(rng, 2 * p, spec.b_density).reshape(p, 2).astype(float)
    if spec.scenario == 2:
        silent = rng.integers(p)
    else:
        silent = -1
    for i in range(p):
        if i == silent:
            Bc[i] = 0.0
        elif not Bc[i].any():
            Bc[i, rng.integers(2)] = 1.0
    Bc *= rng.choice([-1.0, 1.0], size=(p, 2)) * mag
    return SemParameters(A, expand_b(Bc), np.full(p, spec.noise))


def simulate_from(params: SemParameters, n: int, rng, df: Optional[float] = None) -> DataSet:
    """Draw ``X ~ N(0, I)`` and ``Y | X`` from the SEM (multivariate t if ``df`` given)."""
    p = params.p
    X = rng.standard_normal((n, 2 * p))
    E = rng.standard_normal((n, p)) * np.sqrt(params.sigma)
    if df is not None:
        E /= np.sqrt(rng.chisquare(df, size=n) / df)[:, None]
    M = np.eye(p) - params.A
    Y = np.linalg.solve(M, (X @ params.B.T + E).T).T
    return DataSet(Y, X)


def simulate(spec: ScenarioSpec, rng=None) -> Tuple[DataSet, SemParameters]:
    """Generate one simulation replicate and its ground truth.

    Scenario 1: effects +-0.5, noise 0.25, every gene keeps a DNA edge.
    Scenario 2: effects +-0.4, noise 1, one random gene has no DNA edges.
    Scenario 3: scenario 1 with multivariate-t(df) errors.
    """
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    truth = _draw_truth(spec, rng)
    data = simulate_from(truth, spec.n, rng, df=spec.df if spec.scenario == 3 else None)
    return data, truth


def cascade_parameters(tiers: Sequence[int], effect: float = 0.5, noise: float = 0.25,
                       rng=None) -> SemParameters:
    """Layered ground truth: every gene regulates every gene in all later tiers.

    With these skip connections, in-degree minus out-degree increases strictly
    from tier to tier. Each gene gets one random DNA edge of size ``effect``;
    gene-gene signs are random.
    """
    rng = np.random.default_rng() if rng is None else rng
    tier_of = np.repeat(np.arange(len(tiers)), tiers)
    p = tier_of.size
    A = np.zeros((p, p))
    for i in range(p):
        for j in range(p):
            if tier_of[j] < tier_of[i]:
                A[i, j] = effect * rng.choice([-1.0, 1.0])
    Bc = np.zeros((p, 2))
    Bc[np.arange(p), rng.integers(2, size=p)] = effect * rng.choice([-1.0, 1.0], size=p)
    return SemParameters(A, expand_b(Bc), np.full(p, noise))
