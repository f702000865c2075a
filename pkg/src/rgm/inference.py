"""Thresholded-prior posterior sampling for the SEM.

Model, for gene ``i``, ``j != i`` and its two DNA columns ``k``::

    a_ij = at_ij * 1(|at_ij| > t_i)      at_ij ~ N(0, tau_ij),  tau_ij ~ IG(a_tau, b_tau)
    b_ik = bt_ik * 1(|bt_ik| > t_i)      bt_ik ~ N(0, nu_ik),   nu_ik  ~ IG(a_nu, b_nu)
    t_i ~ Uniform(0, t0)                 sigma_i ~ IG(a_sigma, b_sigma)

The sampler is Metropolis-within-Gibbs: random-walk moves on the latent
coefficients and thresholds, exact inverse-gamma draws for the variances.
``I - A`` is never inverted; its log-determinant comes from an LU factorisation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import stats

from . import _kernels
from .sem import DataSet, ModelError, SemParameters, b_mask, compact_b, expand_b, log_likelihood

logger = logging.getLogger(__name__)

_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class Hyperparameters:
    alpha_tau: float = 0.01
    beta_tau: float = 0.01
    alpha_nu: float = 0.01
    beta_nu: float = 0.01
    alpha_sigma: float = 0.01
    beta_sigma: float = 0.01
    t0: float = 1.0

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not (np.isfinite(value) and value > 0):
                raise ModelError(f"hyperparameter {name} must be positive, got {value}")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class McmcConfig:
    iterations: int = 50_000
    burn_in: int = 25_000
    thin: int = 5
    sd_a: float = 0.1
    sd_b: float = 0.1
    sd_t: float = 0.05  # multiplied by t0
    seed: int = 0
    chains: int = 1
    adapt: bool = True
    adapt_batch: int = 50

    def __post_init__(self):
        if self.iterations < 1 or not (0 <= self.burn_in < self.iterations):
            raise ModelError("need 0 <= burn_in < iterations")
        if self.thin < 1 or self.chains < 1 or self.adapt_batch < 2:
            raise ModelError("thin, chains must be >= 1 and adapt_batch >= 2")
        if min(self.sd_a, self.sd_b, self.sd_t) <= 0:
            raise ModelError("proposal scales must be positive")

    @property
    def n_retained(self) -> int:
        return (self.iterations - self.burn_in) // self.thin

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class PriorState:
    """One point of the sampler's state space (full-size arrays)."""

    A_tilde: np.ndarray
    B_tilde: np.ndarray
    t: np.ndarray
    tau: np.ndarray
    nu: np.ndarray
    sigma: np.ndarray

    @property
    def p(self) -> int:
        return self.t.shape[0]

    def copy(self) -> "PriorState":
        return PriorState(*(np.array(getattr(self, f)) for f in self.__dataclass_fields__))

    def effective(self) -> SemParameters:
        """Thresholded ``(A, B, sigma)``."""
        A, B = effective_coefficients(self.A_tilde, self.B_tilde, self.t)
        return SemParameters(A, B, self.sigma)


def effective_coefficients(A_tilde, B_tilde, t) -> Tuple[np.ndarray, np.ndarray]:
    """Apply per-row thresholds; works on single draws or stacks of draws."""
    A_tilde = np.asarray(A_tilde)
    B_tilde = np.asarray(B_tilde)
    t = np.asarray(t)[..., :, None]
    p = A_tilde.shape[-1]
    A = np.where(np.abs(A_tilde) > t, A_tilde, 0.0)
    A[..., np.arange(p), np.arange(p)] = 0.0
    B = np.where((np.abs(B_tilde) > t) & b_mask(p), B_tilde, 0.0)
    return A, B


def initial_state(data: DataSet, hyper: Hyperparameters) -> PriorState:
    p = data.p
    sigma = data.Y.var(axis=0, ddof=1) if data.n >= 2 else np.ones(p)
    sigma = np.where(sigma > 0, sigma, 1.0)
    return PriorState(
        A_tilde=np.zeros((p, p)),
        B_tilde=np.zeros((p, 2 * p)),
        t=np.full(p, hyper.t0 / 2),
        tau=np.ones((p, p)),
        nu=np.ones((p, 2 * p)),
        sigma=sigma,
    )


def log_prior(state: PriorState, hyper: Hyperparameters) -> float:
    p = state.p
    off = ~np.eye(p, dtype=bool)
    mask = b_mask(p)
    if np.any(state.t <= 0) or np.any(state.t >= hyper.t0):
        return -np.inf
    lp = np.sum(stats.norm.logpdf(state.A_tilde[off], scale=np.sqrt(state.tau[off])))
    lp += np.sum(stats.invgamma.logpdf(state.tau[off], hyper.alpha_tau, scale=hyper.beta_tau))
    lp += np.sum(stats.norm.logpdf(state.B_tilde[mask], scale=np.sqrt(state.nu[mask])))
    lp += np.sum(stats.invgamma.logpdf(state.nu[mask], hyper.alpha_nu, scale=hyper.beta_nu))
    lp += np.sum(stats.invgamma.logpdf(state.sigma, hyper.alpha_sigma, scale=hyper.beta_sigma))
    lp -= p * np.log(hyper.t0)
    return float(lp)


def log_posterior(state: PriorState, data: DataSet, hyper: Hyperparameters) -> float:
    """Unnormalised log posterior: likelihood at the thresholded coefficients plus log prior."""
    if data.p != state.p:
        raise ModelError("state and data disagree on p")
    lp = log_prior(state, hyper)
    if lp == -np.inf:
        return lp
    ll = log_likelihood(state.effective(), data)
    return lp + ll


class _Workspace:
    """Compact kernel-side view of a :class:`PriorState` plus cached likelihood pieces."""

    def __init__(self, state: PriorState, data: DataSet, gram: Optional[np.ndarray] = None):
        p = state.p
        self.n = data.n
        self.S = data.gram_blocks() if gram is None else gram
        self.At = np.array(state.A_tilde, dtype=float)
        self.Bt = np.ascontiguousarray(compact_b(state.B_tilde), dtype=float)
        self.t = np.array(state.t, dtype=float)
        self.tau = np.array(state.tau, dtype=float)
        self.nu = np.ascontiguousarray(compact_b(state.nu), dtype=float)
        self.sigma = np.array(state.sigma, dtype=float)
        self.Aeff = np.zeros((p, p))
        self.Beff = np.zeros((p, 2))
        for i in range(p):
            _kernels.threshold_row(i, self.At, self.Bt, self.t, self.Aeff, self.Beff)
        self.logdet = _kernels.logdet_i_minus(self.Aeff) if self.n > 0 else 0.0
        self.rss = np.array([_kernels.row_rss(i, self.Aeff, self.Beff, self.S) for i in range(p)])
        self.counters = np.zeros(1, dtype=np.int64)

    def to_state(self, template: PriorState) -> PriorState:
        nu = np.array(template.nu)
        nu[b_mask(self.t.shape[0])] = self.nu.reshape(-1)
        return PriorState(self.At.copy(), expand_b(self.Bt), self.t.copy(), self.tau.copy(), nu,
                          self.sigma.copy())


def update_coefficient(state: PriorState, data: DataSet, hyper: Hyperparameters, target,
                       rng: np.random.Generator, sd: float = 0.1) -> Tuple[PriorState, bool]:
    """One random-walk Metropolis step on a latent coefficient.

    ``target`` is ``("A", i, j)`` with ``i != j`` or ``("B", i, k)`` with
    ``k in (2i, 2i+1)``; indices are 0-based array positions.
    """
    kind, i, j = target
    p = state.p
    ws = _Workspace(state, data)
    z = rng.standard_normal()
    log_u = np.log(rng.random())
    if kind == "A":
        if i == j or not (0 <= i < p and 0 <= j < p):
            raise ModelError(f"A target ({i}, {j}) is not an off-diagonal entry")
        ok, _, _ = _kernels.update_a(i, j, z, log_u, sd, ws.n, ws.At, ws.Bt, ws.t, ws.tau, ws.sigma,
                                     ws.Aeff, ws.Beff, ws.S, ws.logdet, ws.rss, ws.counters)
    elif kind == "B":
        if not (0 <= i < p) or j not in (2 * i, 2 * i + 1):
            raise ModelError(f"B target ({i}, {j}) is outside the intragenic mask")
        ok, _ = _kernels.update_b(i, j - 2 * i, z, log_u, sd, ws.n, ws.At, ws.Bt, ws.t, ws.nu, ws.sigma,
                                  ws.Aeff, ws.Beff, ws.S, ws.rss)
    else:
        raise ModelError(f"unknown target kind {kind!r}")
    return ws.to_state(state), bool(ok)


def update_threshold(state: PriorState, data: DataSet, hyper: Hyperparameters, gene: int,
                     rng: np.random.Generator, sd: Optional[float] = None) -> Tuple[PriorState, bool]:
    """Reflected random-walk Metropolis step on ``t[gene]`` within ``(0, t0)``."""
    sd = 0.05 * hyper.t0 if sd is None else sd
    ws = _Workspace(state, data)
    z = rng.standard_normal()
    log_u = np.log(rng.random())
    ok, _, _ = _kernels.update_t(gene, z, log_u, sd, hyper.t0, ws.n, ws.At, ws.Bt, ws.t, ws.sigma,
                                 ws.Aeff, ws.Beff, ws.S, ws.logdet, ws.rss, ws.counters)
    return ws.to_state(state), bool(ok)


def _gamma_draws(rng, shape, size):
    return np.maximum(rng.standard_gamma(shape, size), _TINY)


def update_variances(state: PriorState, data: DataSet, hyper: Hyperparameters,
                     rng: np.random.Generator) -> PriorState:
    """Exact Gibbs draws of ``tau``, ``nu`` and ``sigma`` from their inverse-gamma conditionals."""
    ws = _Workspace(state, data)
    p = state.p
    g_tau = _gamma_draws(rng, hyper.alpha_tau + 0.5, (p, p))
    g_nu = _gamma_draws(rng, hyper.alpha_nu + 0.5, (p, 2))
    g_sig = _gamma_draws(rng, hyper.alpha_sigma + data.n / 2, p)
    _kernels.update_variances(g_tau, g_nu, g_sig, ws.n, ws.At, ws.Bt, ws.tau, ws.nu, ws.sigma, ws.rss,
                              hyper.alpha_tau, hyper.beta_tau, hyper.alpha_nu, hyper.beta_nu,
                              hyper.alpha_sigma, hyper.beta_sigma)
    return ws.to_state(state)


@dataclass
class SampleStore:
    """Retained draws, stacked along axis 0, possibly from several chains."""

    A_tilde: np.ndarray
    B_tilde: np.ndarray
    t: np.ndarray
    tau: np.ndarray
    nu: np.ndarray
    sigma: np.ndarray
    chain: np.ndarray
    acceptance: List[Dict[str, float]] = field(default_factory=list)
    det_evaluations: int = 0

    def __len__(self) -> int:
        return self.t.shape[0]

    @property
    def p(self) -> int:
        return self.t.shape[1]

    @property
    def effective(self) -> Tuple[np.ndarray, np.ndarray]:
        return effective_coefficients(self.A_tilde, self.B_tilde, self.t)

    @property
    def gamma_A(self) -> np.ndarray:
        return self.effective[0] != 0

    @property
    def gamma_B(self) -> np.ndarray:
        return self.effective[1] != 0

    def draw(self, index: int) -> PriorState:
        return PriorState(self.A_tilde[index].copy(), self.B_tilde[index].copy(), self.t[index].copy(),
                          self.tau[index].copy(), self.nu[index].copy(), self.sigma[index].copy())

    def select_chain(self, c: int) -> "SampleStore":
        keep = self.chain == c
        return SampleStore(self.A_tilde[keep], self.B_tilde[keep], self.t[keep], self.tau[keep],
                           self.nu[keep], self.sigma[keep], self.chain[keep],
                           [self.acceptance[c]] if c < len(self.acceptance) else [], 0)

    @classmethod
    def concatenate(cls, stores: List["SampleStore"]) -> "SampleStore":
        if not stores:
            raise ModelError("no stores to concatenate")
        cat = lambda name: np.concatenate([getattr(s, name) for s in stores])
        acc = [a for s in stores for a in s.acceptance]
        return cls(cat("A_tilde"), cat("B_tilde"), cat("t"), cat("tau"), cat("nu"), cat("sigma"),
                   cat("chain"), acc, sum(s.det_evaluations for s in stores))


def _adapt(sd, accepted, attempts, batch_no, lo, hi, target=0.44):
    """Roberts-Rosenthal style log-scale nudging toward ``target`` acceptance."""
    delta = min(0.1, 1.0 / np.sqrt(batch_no))
    rate = accepted / attempts
    sd *= np.exp(np.where(rate > target, delta, -delta))
    return np.clip(sd, lo, hi)


def _run_single_chain(data: DataSet, hyper: Hyperparameters, config: McmcConfig, chain_id: int,
                      gram: np.ndarray) -> SampleStore:
    p = data.p
    n = data.n
    rng = np.random.default_rng(config.seed + chain_id)
    ws = _Workspace(initial_state(data, hyper), data, gram)
    m = config.n_retained
    out_At = np.empty((m, p, p))
    out_Bt = np.empty((m, p, 2))
    out_t = np.empty((m, p))
    out_tau = np.empty((m, p, p))
    out_nu = np.empty((m, p, 2))
    out_sigma = np.empty((m, p))
    out_pos = np.zeros(1, dtype=np.int64)
    scalars = np.array([ws.logdet])

    sdA = np.full((p, p), config.sd_a)
    sdB = np.full((p, 2), config.sd_b)
    sdT = np.full(p, config.sd_t * hyper.t0)
    accA = np.zeros((2, p, p), dtype=np.int64)
    accB = np.zeros((2, p, 2), dtype=np.int64)
    accT = np.zeros(p, dtype=np.int64)
    shape_tau = hyper.alpha_tau + 0.5
    shape_nu = hyper.alpha_nu + 0.5
    shape_sig = hyper.alpha_sigma + n / 2

    it = 0
    batch_no = 0
    while it < config.iterations:
        adapting = config.adapt and it < config.burn_in
        size = config.adapt_batch if adapting else 1000
        size = min(size, config.iterations - it)
        if adapting:
            size = min(size, config.burn_in - it)
        zA = rng.standard_normal((size, p, p))
        uA = np.log(rng.random((size, p, p)))
        zB = rng.standard_normal((size, p, 2))
        uB = np.log(rng.random((size, p, 2)))
        zT = rng.standard_normal((size, p))
        uT = np.log(rng.random((size, p)))
        gTau = _gamma_draws(rng, shape_tau, (size, p, p))
        gNu = _gamma_draws(rng, shape_nu, (size, p, 2))
        gSig = _gamma_draws(rng, shape_sig, (size, p))
        gPA = _gamma_draws(rng, hyper.alpha_tau, (size, p, p))
        gPB = _gamma_draws(rng, hyper.alpha_nu, (size, p, 2))
        before = (accA[0].copy(), accB[0].copy(), accT.copy())
        _kernels.run_block(size, it, config.burn_in, config.thin, n, hyper.t0,
                           ws.At, ws.Bt, ws.t, ws.tau, ws.nu, ws.sigma, ws.Aeff, ws.Beff, ws.S, scalars, ws.rss,
                           sdA, sdB, sdT, zA, uA, zB, uB, zT, uT, gTau, gNu, gSig, gPA, gPB,
                           accA, accB, accT, ws.counters,
                           out_At, out_Bt, out_t, out_tau, out_nu, out_sigma, out_pos,
                           hyper.alpha_tau, hyper.beta_tau, hyper.alpha_nu, hyper.beta_nu,
                           hyper.alpha_sigma, hyper.beta_sigma)
        if adapting:
            batch_no += 1
            even = (size + (it % 2 == 0)) // 2
            if even > 0:
                sdA = _adapt(sdA, accA[0] - before[0], even, batch_no, 1e-4, 10.0)
                sdB = _adapt(sdB, accB[0] - before[1], even, batch_no, 1e-4, 10.0)
            sdT = _adapt(sdT, accT - before[2], size, batch_no, 1e-4 * hyper.t0, hyper.t0)
        it += size

    iters = config.iterations
    even_iters = (iters + 1) // 2
    odd_iters = iters // 2
    off = ~np.eye(p, dtype=bool)
    acceptance = {
        "chain": chain_id,
        "A_tuned_scale": float(accA[0][off].sum() / max(1, even_iters * off.sum())),
        "A_prior_draw": float(accA[1][off].sum() / max(1, odd_iters * off.sum())),
        "B_tuned_scale": float(accB[0].sum() / max(1, even_iters * 2 * p)),
        "B_prior_draw": float(accB[1].sum() / max(1, odd_iters * 2 * p)),
        "t": float(accT.sum() / (iters * p)),
    }
    logger.info("chain %d done: acceptance %s", chain_id, acceptance)
    nu_full = np.ones((m, p, 2 * p))
    nu_full[:, b_mask(p)] = out_nu.reshape(m, -1)
    return SampleStore(out_At, expand_b(out_Bt), out_t, out_tau, nu_full, out_sigma,
                       np.full(m, chain_id, dtype=np.int64), [acceptance], int(ws.counters[0]))


def run_chain(data: DataSet, hyper: Hyperparameters = Hyperparameters(),
              config: McmcConfig = McmcConfig()) -> SampleStore:
    """Run ``config.chains`` independent chains (seeds ``seed, seed+1, ...``) and pool them."""
    if data.p < 1:
        raise ModelError("need at least one gene")
    gram = data.gram_blocks()
    return SampleStore.concatenate([_run_single_chain(data, hyper, config, c, gram)
                                    for c in range(config.chains)])


def effective_sample_size(x: np.ndarray) -> float:
    """Geyer initial-monotone-sequence ESS of a 1-d series."""
    x = np.asarray(x, dtype=float)
    m = x.size
    if m < 4:
        return float(m)
    x = x - x.mean()
    var = x @ x / m
    if var == 0 or not np.isfinite(var):
        return float(m)
    f = np.fft.rfft(x, n=2 * m)
    acov = np.fft.irfft(f * np.conj(f))[:m] / m
    rho = acov / acov[0]
    pairs = rho[: m - (m % 2)].reshape(-1, 2).sum(axis=1)
    positive = np.argmax(pairs <= 0) if np.any(pairs <= 0) else pairs.size
    pairs = np.minimum.accumulate(pairs[:positive])
    tau = -1.0 + 2.0 * pairs.sum()
    return float(m / max(tau, 1.0 / m))


def diagnostics(store: SampleStore) -> dict:
    """Acceptance rates and per-parameter ESS for each chain and for the pooled draws."""
    p = store.p
    off = ~np.eye(p, dtype=bool)
    mask = b_mask(p)

    def ess_block(s: SampleStore) -> dict:
        return {
            "A_tilde": [effective_sample_size(col) for col in s.A_tilde[:, off].T],
            "B_tilde": [effective_sample_size(col) for col in s.B_tilde[:, mask].T],
            "t": [effective_sample_size(col) for col in s.t.T],
            "sigma": [effective_sample_size(col) for col in s.sigma.T],
        }

    chains = sorted(set(store.chain.tolist()))
    per_chain = []
    for c in chains:
        sub = store.select_chain(c)
        entry = {"chain": int(c), "draws": len(sub), "ess": ess_block(sub)}
        if sub.acceptance:
            entry["acceptance"] = sub.acceptance[0]
        per_chain.append(entry)
    pooled_ess = {k: [float(sum(ch["ess"][k][i] for ch in per_chain)) for i in range(len(per_chain[0]["ess"][k]))]
                  for k in per_chain[0]["ess"]}
    return {"chains": per_chain,
            "pooled": {"draws": len(store), "ess": pooled_ess, "det_evaluations": store.det_evaluations}}
