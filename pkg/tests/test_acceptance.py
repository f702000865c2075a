"""Acceptance criteria, one test each, at the stated tolerances.

Each test records a PASS/FAIL line that pytest prints in an
"acceptance criteria" section at the end of the run.
"""

import filecmp
import warnings
from pathlib import Path

import numpy as np
import pytest
from scipy import stats
from scipy.special import gammaln

from conftest import EXAMPLE_GRAPHS, record_criterion
from rgm import cli
from rgm.evaluation import confusion, kendall_distance, metrics, ordering_score, roc, score_ranks
from rgm.graph import implied_independencies, markov_equivalent
from rgm.inference import Hyperparameters, McmcConfig, initial_state, run_chain, update_variances
from rgm.selection import EdgeProbabilityTable, edge_probabilities, select_fdr, select_mpm
from rgm.sem import DataSet, ScenarioSpec, SemParameters, b_mask, cascade_parameters, log_density, simulate, simulate_from

REPLICATES = 10


def check(number, name, passed, detail=""):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {name} {detail}"
    print(line)
    record_criterion(number, name, passed, detail)
    assert passed, line


def scenario_study(scenario):
    rows = []
    for r in range(REPLICATES):
        data, truth = simulate(ScenarioSpec(scenario, seed=1000 * scenario + r))
        table = edge_probabilities(run_chain(data, Hyperparameters(), McmcConfig(seed=r)))
        m = metrics(confusion(select_mpm(table), truth))
        rows.append([m.mcc, m.tpr, m.fdr, roc(table, truth).auc])
    return dict(zip(["mcc", "tpr", "fdr", "auc"], np.mean(rows, axis=0)))


def _fmt(summary):
    return " ".join(f"{k}={v:.3f}" for k, v in summary.items())


def test_criterion_01_scenario_1():
    s = scenario_study(1)
    ok = s["mcc"] >= 0.95 and s["tpr"] >= 0.99 and s["fdr"] <= 0.05 and s["auc"] >= 0.99
    check(1, "scenario 1 recovery", ok, _fmt(s))


def test_criterion_02_scenario_2():
    s = scenario_study(2)
    ok = 0.50 <= s["mcc"] <= 0.95 and s["fdr"] <= 0.45 and s["auc"] >= 0.90
    check(2, "scenario 2 recovery", ok, _fmt(s))


def test_criterion_03_scenario_3():
    s = scenario_study(3)
    ok = s["mcc"] >= 0.70 and s["auc"] >= 0.95
    check(3, "scenario 3 recovery", ok, _fmt(s))


def _direct_log_density(params, y, x):
    """Normal density with mean (I-A)^{-1} B x and covariance (I-A)^{-1} Sigma (I-A)^{-T}."""
    M = np.linalg.inv(np.eye(params.p) - params.A)
    mean = M @ params.B @ x
    cov = M @ np.diag(params.sigma) @ M.T
    return stats.multivariate_normal(mean, cov).logpdf(y)


def test_criterion_04_density_oracle():
    rng = np.random.default_rng(404)
    worst = 0.0
    for k in range(1000):
        p = 1 + k % 6
        A = rng.normal(0, 0.3, (p, p))
        np.fill_diagonal(A, 0.0)
        B = np.where(b_mask(p), rng.normal(0, 1, (p, 2 * p)), 0.0)
        params = SemParameters(A, B, rng.uniform(0.1, 2.0, p))
        y, x = rng.normal(size=p), rng.normal(size=2 * p)
        worst = max(worst, abs(log_density(params, y, x) - _direct_log_density(params, y, x)))
    check(4, "density oracle", worst < 1e-8, f"max|diff|={worst:.2e}")


def test_criterion_05_prior_recovery():
    h = Hyperparameters()
    store = run_chain(DataSet.empty(2), h, McmcConfig(iterations=110_000, burn_in=10_000, thin=10, seed=5))
    assert len(store) == 10_000
    a_prior = stats.t(df=2 * h.alpha_tau, scale=np.sqrt(h.beta_tau / h.alpha_tau))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # draws reach ~1e150 under the df=0.02 prior
        ks = {
            "a": stats.kstest(store.A_tilde[:, 0, 1], a_prior.cdf).statistic,
            "t": stats.kstest(store.t[:, 0], stats.uniform(0, h.t0).cdf).statistic,
            "sigma": stats.kstest(store.sigma[:, 0], stats.invgamma(h.alpha_sigma, scale=h.beta_sigma).cdf).statistic,
        }
    detail = " ".join(f"KS_{k}={v:.4f}" for k, v in ks.items())
    check(5, "prior recovery", max(ks.values()) < 0.05, detail)


def _ig_raw_moment(a, b, k):
    return np.exp(k * np.log(b) + gammaln(a - k) - gammaln(a))


def test_criterion_06_conjugate_sigma():
    rng = np.random.default_rng(606)
    params = SemParameters(np.array([[0, 0.5, 0], [0, 0, -0.5], [0, 0, 0]]),
                           np.where(b_mask(3), 0.5, 0.0), np.array([0.3, 0.6, 1.0]))
    data = simulate_from(params, 50, rng)
    h = Hyperparameters()
    state = initial_state(data, h)
    state.A_tilde = params.A.copy()
    state.B_tilde = params.B.copy()
    state.t[:] = 0.1
    E = data.Y - data.Y @ params.A.T - data.X @ params.B.T
    reps = 20_000
    draws = np.array([update_variances(state, data, h, rng).sigma for _ in range(reps)])
    worst = 0.0
    for i in range(3):
        a, b = h.alpha_sigma + data.n / 2, h.beta_sigma + 0.5 * np.sum(E[:, i] ** 2)
        m1, m2, m3, m4 = (_ig_raw_moment(a, b, k) for k in (1, 2, 3, 4))
        var = m2 - m1**2
        mu4 = m4 - 4 * m1 * m3 + 6 * m1**2 * m2 - 3 * m1**4
        z_mean = (draws[:, i].mean() - m1) / np.sqrt(var / reps)
        z_var = (draws[:, i].var(ddof=1) - var) / np.sqrt((mu4 - var**2) / reps)
        worst = max(worst, abs(z_mean), abs(z_var))
    check(6, "conjugate sigma update", worst < 3, f"max|z|={worst:.2f}")


def test_criterion_07_graph_semantics():
    singles = {(min(a), min(b), tuple(sorted(c))) for a, b, c in implied_independencies(EXAMPLE_GRAPHS["a"])
               if len(a) == 1 and len(b) == 1}
    ok_a = singles == {(3, 4, ()), (3, 4, (1, 2))}
    ok_eq = all(markov_equivalent(EXAMPLE_GRAPHS[x], EXAMPLE_GRAPHS[y]) for x in "efgh" for y in "efgh")
    ok_neq = all(not markov_equivalent(EXAMPLE_GRAPHS[x], EXAMPLE_GRAPHS[y]) for x in "abcd" for y in "abcd" if x < y)
    check(7, "graph semantics", ok_a and ok_eq and ok_neq, f"1a={ok_a} e-h equivalent={ok_eq} a-d distinct={ok_neq}")


def test_criterion_08_fdr_selector():
    est = select_fdr(EdgeProbabilityTable.from_probabilities([0.9, 0.8, 0.6, 0.3]), 0.1)
    ok = [e[1] for e in est.edges] == [0] and abs(est.expected_fdr - 0.10) < 1e-12
    check(8, "FDR selector", ok, f"selected={est.probs} fdr={est.expected_fdr:.3f}")


def test_criterion_09_cascade_ordering():
    tiers = [3, 2, 1, 2, 2]
    reference = np.repeat(np.arange(len(tiers)), tiers)
    distances = []
    for seed in range(3):
        rng = np.random.default_rng(900 + seed)
        params = cascade_parameters(tiers, effect=0.5, noise=0.25, rng=rng)
        data = simulate_from(params, 276, rng)
        table = edge_probabilities(run_chain(data, Hyperparameters(), McmcConfig(seed=seed)))
        est = select_fdr(table, 0.1)
        distances.append(kendall_distance(score_ranks(ordering_score(est)), reference))
    check(9, "cascade ordering", max(distances) <= 0.15,
          "kendall=" + ",".join(f"{d:.3f}" for d in distances))


def _pipeline(root: Path):
    sim = root / "sim"
    assert cli.main(["simulate", "--scenario", "1", "--seed", "42", "--out-dir", str(sim)]) == 0
    rep = sim / "rep_000"
    assert cli.main(["fit", str(rep), "--seed", "42"]) == 0
    assert cli.main(["select", str(rep)]) == 0
    assert cli.main(["evaluate", str(rep), "--out-dir", str(root / "eval")]) == 0
    assert cli.main(["analyze", str(rep)]) == 0


def test_criterion_10_determinism(tmp_path):
    _pipeline(tmp_path / "run1")
    _pipeline(tmp_path / "run2")
    files = sorted(p.relative_to(tmp_path / "run1") for p in (tmp_path / "run1").rglob("*") if p.is_file())
    names = {f.name for f in files}
    required = {"data.csv", "truth.json", "samples.csv", "samples_meta.json", "estimate.json", "metrics.csv"}
    same = [filecmp.cmp(tmp_path / "run1" / f, tmp_path / "run2" / f, shallow=False) for f in files]
    ok = required <= names and all(same)
    check(10, "determinism", ok, f"{sum(same)}/{len(files)} files byte-identical")
