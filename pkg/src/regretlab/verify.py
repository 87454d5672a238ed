"""Monte-Carlo checks of the concentration and anti-concentration statements
behind the agent's analysis.

Each check returns a :class:`CheckReport` comparing an empirical estimate
with a target at a 3-sigma normal-approximation margin. Constants hidden in
asymptotic statements are exposed as keyword arguments with the defaults
documented on each function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .agents import run_psrl
from .mdp import Mdp, UsageError
from .sampling import (PsrlConfig, box_max_deviation, sample_beta, sample_dirichlet,
                       simple_optimistic_from_counts, stick_breaking_coordinates,
                       stick_breaking_quantities)
from .solvers import diameter

MIN_TRIALS = 10**4
SIGMAS = 3.0
REPORT_COLUMNS = ("name", "trials", "estimate", "target", "direction", "standard_error", "pass")


class PremiseError(UsageError):
    """The statement being checked does not apply to these parameters."""


@dataclass(frozen=True)
class CheckReport:
    name: str
    trials: int
    estimate: float
    target: float
    direction: str
    standard_error: float
    passed: bool = field(init=False)
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.direction not in (">=", "<="):
            raise ValueError(f"direction must be '>=' or '<=', got {self.direction!r}")
        object.__setattr__(self, "passed", passes(self.estimate, self.target,
                                                  self.direction, self.standard_error))

    def row(self) -> tuple:
        return (self.name, self.trials, repr(float(self.estimate)), repr(float(self.target)),
                self.direction, repr(float(self.standard_error)), int(self.passed))

    def __str__(self):
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{verdict} {self.name}: estimate {self.estimate:.6g} {self.direction} "
                f"target {self.target:.6g} (se {self.standard_error:.3g}, n={self.trials})")


def passes(estimate: float, target: float, direction: str, standard_error: float) -> bool:
    if direction == ">=":
        return estimate + SIGMAS * standard_error >= target
    return estimate - SIGMAS * standard_error <= target


def _trials(trials: int) -> int:
    if trials < MIN_TRIALS:
        raise UsageError(f"frequency checks need at least {MIN_TRIALS} trials, got {trials}")
    return int(trials)


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def frequency_report(name, hits, target, direction, **details) -> CheckReport:
    hits = np.asarray(hits, dtype=bool)
    n = hits.size
    freq = float(hits.mean())
    se = math.sqrt(freq * (1.0 - freq) / n)
    return CheckReport(name, n, freq, float(target), direction, se, details)


def _check_premise(p_bar, m):
    p_bar = np.asarray(p_bar, dtype=np.float64)
    if np.any(m * p_bar < 6):
        raise PremiseError(f"need m * p_bar_i >= 6 for every i, got min {float(np.min(m * p_bar)):.4g}")
    return p_bar


def _box_height(h, D):
    h = np.asarray(h, dtype=np.float64)
    if np.any(h < 0):
        raise PremiseError("h must be non-negative (h in [0, D]^S)")
    return h, (float(h.max()) if D is None else float(D))


# Beta and Dirichlet anti-concentration


def beta_threshold(a: float, b: float, C: float) -> float:
    """``mean + C * sd + C / (a + b)`` of Beta(a, b)."""
    s = a + b
    return a / s + C * math.sqrt(a * b / (s * s * (s + 1))) + C / s


def check_beta_anticoncentration(a: float, b: float, C: float = 0.5, trials: int = 10**5,
                                 rng=None) -> CheckReport:
    """P(X >= beta_threshold(a, b, C)) for X ~ Beta(a, b), against 0.15."""
    if a < 6 or b < 6:
        raise PremiseError("need a, b >= 6")
    if not (0 <= C <= 0.5):
        raise PremiseError("need 0 <= C <= 0.5")
    x = sample_beta(a, b, _rng(rng), size=_trials(trials))
    return frequency_report("beta_anti", x >= beta_threshold(a, b, C), 0.15, ">=",
                            a=a, b=b, C=C)


def dirichlet_anti_threshold(p_bar, h, m, rho, D) -> float:
    sb = stick_breaking_quantities(p_bar, h)
    S = len(p_bar)
    return (math.sqrt(float(np.sum(sb.gamma * sb.c**2)) / m) / 8.0
            - 2.0 * S * D * math.log(2.0 / rho) / m)


def check_dirichlet_anticoncentration(p_bar, h, m: float, trials: int = 10**5, rng=None, *,
                                      c: float = 0.05, rho: float = 1e-6,
                                      D: float | None = None) -> CheckReport:
    """P((p~ - p_bar).h >= threshold) for p~ ~ Dir(m p_bar), against ``c / S``.

    ``D`` defaults to ``max(h)``; ``c`` stands in for the unquantified
    Omega(1/S) constant.
    """
    p_bar = _check_premise(p_bar, m)
    h, D = _box_height(h, D)
    S = len(p_bar)
    thr = dirichlet_anti_threshold(p_bar, h, m, rho, D)
    p_tilde = sample_dirichlet(m * p_bar, _rng(rng), size=_trials(trials))
    return frequency_report("dirichlet_anti", (p_tilde - p_bar) @ h >= thr, c / S, ">=",
                            m=m, threshold=thr)


def stick_breaking_variances(p_bar, m) -> np.ndarray:
    """Variance of each ``y_i = p_i / (p_i + ... + p_S)`` under Dir(m p_bar)."""
    p_bar = np.asarray(p_bar, dtype=np.float64)
    tail = np.cumsum(p_bar[::-1])[::-1]
    after = np.append(tail[1:], 0.0)
    return p_bar * after / (tail**2 * (m * tail + 1.0))


def check_stickbreaking_anticoncentration(p_bar, z, m: float, trials: int = 10**5, rng=None, *,
                                          c: float = 0.05) -> CheckReport:
    """P(sum_i (y~_i - y_bar_i) z_i >= sqrt(sum_i var_i z_i^2) / 4), against ``c / S``."""
    p_bar = _check_premise(p_bar, m)
    z = np.asarray(z, dtype=np.float64)
    S = len(p_bar)
    thr = 0.25 * math.sqrt(float(np.sum(stick_breaking_variances(p_bar, m) * z**2)))
    y_bar = stick_breaking_coordinates(p_bar)
    y = stick_breaking_coordinates(sample_dirichlet(m * p_bar, _rng(rng), size=_trials(trials)))
    return frequency_report("stickbreaking_anti", (y - y_bar) @ z >= thr, c / S, ">=",
                            m=m, threshold=thr)


# optimism of the two sampling branches


def _tie_tol(h) -> float:
    return 1e-12 * max(1.0, float(np.max(np.abs(h))))


def check_simple_sampling_optimism(p, h, n: int, trials: int = 10**5,
                                   rng=None) -> tuple[CheckReport, CheckReport]:
    """Optimism P(q.h >= p.h) and pessimism P(q.h <= p.h) of simple optimistic
    sampling, each against ``1 / (2S)``.

    Every trial draws fresh counts of size ``n`` from ``p`` and one sample.
    Ties within 1e-12 count for both events.
    """
    rng = _rng(rng)
    p = np.asarray(p, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if n < 1:
        raise UsageError("need n >= 1")
    S = len(p)
    counts = rng.multinomial(n, p, size=_trials(trials))
    q = simple_optimistic_from_counts(counts, rng)
    qh, ph, tol = q @ h, float(p @ h), _tie_tol(h)
    return (frequency_report("simple_optimism", qh >= ph - tol, 1.0 / (2 * S), ">=", n=n),
            frequency_report("simple_pessimism", qh <= ph + tol, 1.0 / (2 * S), ">=", n=n))


def optimism_premise(cfg: PsrlConfig, n: int, S: int, strict: bool = True) -> list[str]:
    problems = []
    if cfg.omega < 613 * math.log(2 / cfg.rho):
        problems.append(f"omega={cfg.omega} < 613 log(2/rho)")
    if not n > 12 * cfg.omega * S**2:
        problems.append(f"n={n} <= 12 omega S^2 = {12 * cfg.omega * S**2}")
    if not math.isclose(cfg.kappa, cfg.omega / 6, rel_tol=1e-9):
        problems.append(f"kappa={cfg.kappa} != omega/6")
    if problems and strict:
        raise PremiseError("; ".join(problems))
    return problems


def _posterior_hits(p, h, n, cfg, trials, rng, samples_per_trial, c):
    p = np.asarray(p, dtype=np.float64)
    h, D = _box_height(h, None)
    S = len(p)
    slack = c * D * S * math.log(n / cfg.rho) ** 2 / n
    counts = rng.multinomial(n, p, size=trials)
    alpha = (counts + cfg.omega) / cfg.kappa
    alpha = np.broadcast_to(alpha[:, None, :], (trials, samples_per_trial, S))
    values = sample_dirichlet(alpha, rng) @ h
    return (values >= p @ h - slack).any(axis=1), slack


def check_posterior_optimism_rate(p, h, n: int, cfg: PsrlConfig, trials: int = 10**4, rng=None,
                                  *, c: float = 1.0, c_prime: float = 0.05) -> CheckReport:
    """P(p~.h >= p.h - c D S log^2(n/rho) / n) for one boosted-posterior draw, against ``c_prime / S``.

    Each trial draws counts of size ``n`` from ``p``, forms the boosted
    parameters and one Dirichlet sample. ``cfg`` must satisfy the premise
    checked by :func:`optimism_premise`.
    """
    S = len(p)
    optimism_premise(cfg, n, S)
    hits, slack = _posterior_hits(p, h, n, cfg, _trials(trials), _rng(rng), 1, c)
    return frequency_report("posterior_optimism", hits, c_prime / S, ">=", n=n, slack=slack)


def check_posterior_optimism_amplification(p, h, n: int, cfg: PsrlConfig, num_actions: int,
                                           trials: int = 10**4, rng=None, *,
                                           c: float = 1.0) -> CheckReport:
    """P(at least one of ``cfg.psi`` posterior draws is optimistic), against ``1 - rho / (S A)``."""
    S = len(p)
    optimism_premise(cfg, n, S)
    hits, slack = _posterior_hits(p, h, n, cfg, _trials(trials), _rng(rng), cfg.psi, c)
    return frequency_report("posterior_amplification", hits,
                            1.0 - cfg.rho / (S * num_actions), ">=", n=n, psi=cfg.psi, slack=slack)


# deviation of sampled vectors from the truth


def sample_branch(counts, cfg: PsrlConfig, rng, branch: str, size=None) -> np.ndarray:
    if branch == "dirichlet":
        return sample_dirichlet((np.asarray(counts) + cfg.omega) / cfg.kappa, rng, size)
    if branch == "simple":
        return simple_optimistic_from_counts(counts, rng, size)
    raise UsageError(f"unknown branch {branch!r}; expected 'dirichlet' or 'simple'")


def deviation_samples(p, n: int, cfg: PsrlConfig, trials: int, rng, *, branch="dirichlet",
                      D: float = 1.0) -> np.ndarray:
    """Box deviations ``max over h in [0, 2D]^S of (Q - p).h`` over fresh counts and samples."""
    rng = _rng(rng)
    p = np.asarray(p, dtype=np.float64)
    counts = rng.multinomial(n, p, size=trials)
    return box_max_deviation(sample_branch(counts, cfg, rng, branch), p, 2 * D)


def quantile_with_error(values, level: float) -> tuple[float, float]:
    """Empirical ``level`` quantile and an order-statistic standard error."""
    values = np.sort(np.asarray(values))
    n = len(values)
    est = float(np.quantile(values, level))
    width = math.sqrt(n * level * (1 - level))
    lo = values[max(0, int(math.floor(n * level - width)))]
    hi = values[min(n - 1, int(math.ceil(n * level + width)))]
    return est, float(hi - lo) / 2.0


def deviation_bound(n: int, S: int, A: int, T: int, rho: float, D: float, c: float,
                    branch: str) -> float:
    L = math.log(S * A * T / rho)
    if branch == "dirichlet":
        return c * (D * math.sqrt(L / n) + D * S * L / n)
    return c * (D * math.sqrt(S * L / n) + D * S * math.log(S) / n)


def check_deviation_bound(p, n: int, cfg: PsrlConfig, trials: int = 10**4, rng=None, *,
                          num_actions: int = 1, D: float = 1.0, c: float = 4.0,
                          branch: str = "dirichlet") -> CheckReport:
    """Empirical ``1 - rho`` quantile of the box deviation against the branch's bound."""
    if n < 1:
        raise UsageError("need n >= 1")
    dev = deviation_samples(p, n, cfg, _trials(trials), rng, branch=branch, D=D)
    est, se = quantile_with_error(dev, 1 - cfg.rho)
    bound = deviation_bound(n, len(p), num_actions, cfg.horizon, cfg.rho, D, c, branch)
    return CheckReport(f"deviation_{branch}", len(dev), est, bound, "<=", se,
                       {"n": n, "branch": branch})


def check_deviation_scaling(p, n: int, cfg: PsrlConfig, trials: int = 2 * 10**4, rng=None, *,
                            branch: str = "dirichlet", level: float = 0.95) -> dict:
    """Ratio of the ``level`` deviation quantile at ``4 n`` to that at ``n``."""
    rng = _rng(rng)
    q1, se1 = quantile_with_error(deviation_samples(p, n, cfg, _trials(trials), rng, branch=branch), level)
    q4, se4 = quantile_with_error(deviation_samples(p, 4 * n, cfg, trials, rng, branch=branch), level)
    ratio = q4 / q1
    se = ratio * math.hypot(se1 / q1, se4 / q4)
    return {"quantile_n": q1, "quantile_4n": q4, "ratio": ratio, "standard_error": se}


def check_dirichlet_concentration(p_bar, m: float, D: float, rho: float, trials: int = 10**5,
                                  rng=None) -> tuple[CheckReport, CheckReport]:
    """Violation rates of the box-deviation bounds for a Dirichlet draw and for an
    empirical average of ``round(m)`` multinoulli trials, each against ``rho``."""
    rng = _rng(rng)
    p_bar = np.asarray(p_bar, dtype=np.float64)
    trials = _trials(trials)
    p_tilde = sample_dirichlet(m * p_bar, rng, size=trials)
    dir_bound = D * math.sqrt(2 * math.log(2 / rho) / m)
    dir_hits = box_max_deviation(p_tilde, p_bar, D) > dir_bound
    n = int(round(m))
    p_hat = rng.multinomial(n, p_bar, size=trials) / n
    emp_bound = D * math.sqrt(2 * math.log(1 / rho) / n)
    emp_hits = box_max_deviation(p_hat, p_bar, D) > emp_bound
    return (frequency_report("dirichlet_concentration", dir_hits, rho, "<=", bound=dir_bound),
            frequency_report("multinoulli_concentration", emp_hits, rho, "<=", bound=emp_bound))


# diameter of the extended MDP


def check_extended_diameter(env: Mdp, cfg: PsrlConfig, epochs_to_check: Iterable[int] | None = None,
                            seed: int | Sequence[int] = 0, *,
                            budget: int = 20_000) -> CheckReport:
    """Fraction of epochs whose extended MDP has diameter at most twice the true one.

    The agent is run once per seed; epochs listed in ``epochs_to_check``
    (1-indexed, all when None) are measured. Epochs whose extended action
    table ``S * A * psi`` exceeds ``budget`` are skipped.
    """
    D = diameter(env)
    wanted = None if epochs_to_check is None else set(epochs_to_check)
    seeds = [seed] if np.isscalar(seed) else list(seed)
    outcomes, skipped = [], 0
    too_big = env.num_states * env.num_actions * cfg.psi > budget

    def on_epoch(k, tau, counts, ext, ext_policy):
        nonlocal skipped
        if wanted is not None and k not in wanted:
            return
        if too_big:
            skipped += 1
            return
        outcomes.append(diameter(ext.to_mdp()) <= 2 * D)

    for s in seeds:
        run_psrl(env, cfg, s, on_epoch=on_epoch)
    hits = np.asarray(outcomes, dtype=bool)
    if hits.size == 0:
        raise UsageError("no epochs were measured (all skipped by the budget guard?)")
    return frequency_report("extended_diameter", hits, 1.0 - cfg.rho, ">=",
                            true_diameter=D, skipped=skipped)


def check_sample_pessimism(p, h, n: int, cfg: PsrlConfig, trials: int = 10**4, rng=None, *,
                           c: float = 1.0) -> CheckReport:
    """P(some of ``cfg.psi`` samples has Q.h <= p.h + slack), against ``1 - rho``.

    The branch follows ``n`` versus ``cfg.small_n``; the slack is
    ``c (D sqrt(log(1/rho) / eta) + D S log(T/rho) / eta)`` with ``eta = cfg.small_n``.
    """
    rng = _rng(rng)
    p = np.asarray(p, dtype=np.float64)
    h, D = _box_height(h, None)
    S = len(p)
    eta = max(1, cfg.small_n)
    slack = c * (D * math.sqrt(math.log(1 / cfg.rho) / eta)
                 + D * S * math.log(cfg.horizon / cfg.rho) / eta)
    trials = _trials(trials)
    counts = rng.multinomial(n, p, size=trials)
    counts = np.broadcast_to(counts[:, None, :], (trials, cfg.psi, S))
    branch = "dirichlet" if n >= cfg.small_n else "simple"
    values = sample_branch(counts, cfg, rng, branch) @ h
    hits = (values <= p @ h + slack + _tie_tol(h)).any(axis=1)
    return frequency_report("sample_pessimism", hits, 1.0 - cfg.rho, ">=", branch=branch, slack=slack)


# classical deviation inequalities


def bernstein_bound(V: float, K: float, n: int, delta: float) -> float:
    """Martingale Bernstein bound ``2 sqrt(V log(n/delta)) + 3 K log(n/delta)``; needs n >= 96."""
    if n < 96:
        raise UsageError("the Bernstein bound needs n >= 96")
    if not (0 < delta < 1):
        raise UsageError("delta must lie in (0, 1)")
    L = math.log(n / delta)
    return 2.0 * math.sqrt(V * L) + 3.0 * K * L


def check_bernstein_martingale(n: int = 100, delta: float = 0.1, trials: int = 10**5,
                               rng=None) -> CheckReport:
    """Violation rate of the Bernstein bound for sums of fair +-1 steps (K = 1, V = n)."""
    rng = _rng(rng)
    heads = rng.binomial(n, 0.5, size=_trials(trials))
    M = 2 * heads - n
    bound = bernstein_bound(float(n), 1.0, n, delta)
    return frequency_report("bernstein", np.abs(M) > bound, delta, "<=", bound=bound)


def chernoff_radius(x, n: int, rho: float):
    L = math.log(2 / rho)
    return np.sqrt(3 * L * np.asarray(x) / n) + 3 * L / n


def check_chernoff(mu: float = 0.3, n: int = 500, rho: float = 0.05, trials: int = 10**5,
                   rng=None) -> CheckReport:
    """Violation rate of the empirical multiplicative Chernoff radius for Bernoulli(mu) averages."""
    rng = _rng(rng)
    x = rng.binomial(n, mu, size=_trials(trials)) / n
    return frequency_report("chernoff", np.abs(x - mu) >= chernoff_radius(x, n, rho), rho, "<=")
