"""Independent brute-force oracles and statistical verifiers.

Everything here checks the main implementation from the outside: the FTRL
closed form against a numeric argmin search, analytic gradients against
central finite differences, the per-step surrogate bound by Monte Carlo,
the regret-bound inequality on recorded runs, and the linear rate on
PL quadratics. All checks are deterministic given their seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Sequence

import numpy as np

from .core import RngStream, sq_norm
from .online import DEFAULT_ALPHA
from .optimizers import Sgdol, run
from .oracles import (
    Dataset,
    GradientPair,
    QuadraticOracle,
    RosenbrockOracle,
    SigmoidLossOracle,
    StochasticOracle,
    rosenbrock_grad,
    sigmoid_loss_grad,
)

__all__ = [
    "ftrl_argmin_oracle",
    "finite_diff_grad",
    "SurrogateBoundVerdict",
    "surrogate_bound_check",
    "smoothness_probe",
    "CheckResult",
    "run_verification",
]

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def ftrl_argmin_oracle(alpha: float, M: float, history: Sequence[GradientPair],
                       curvature_scale: float = 1.0, tol: float = 1e-10) -> float:
    """Numerically minimize regularizer + past surrogate losses over [0, 2/M].

    Golden-section search down to an interval of width ``tol``, followed by
    one parabola fit through wide-spaced probes (the losses are quadratics,
    so the vertex refines away the flat-basin rounding noise that limits pure
    golden-section to roughly sqrt(machine epsilon)). Serves as the
    independent reference for the closed-form FTRL stepsize; an empty history
    returns the regularizer's own minimizer 1/M.
    """
    if alpha <= 0 or M <= 0:
        raise ValueError("alpha and M must be > 0")
    stats = [(sq_norm(p.g), float(np.dot(p.g, p.g_prime))) for p in history]
    half_curv = 0.5 * curvature_scale * M

    def objective(eta: float) -> float:
        diff = eta - 1.0 / M
        terms = [0.5 * M * alpha * diff * diff]
        for a_j, b_j in stats:
            terms.append(half_curv * eta * eta * a_j - eta * b_j)
        return math.fsum(terms)

    lo, hi = 0.0, 2.0 / M
    c = hi - _INVPHI * (hi - lo)
    d = lo + _INVPHI * (hi - lo)
    fc, fd = objective(c), objective(d)
    while hi - lo > tol:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - _INVPHI * (hi - lo)
            fc = objective(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INVPHI * (hi - lo)
            fd = objective(d)
    guess = 0.5 * (lo + hi)

    def diff(x: float, y: float) -> float:
        # objective(x) - objective(y) in factored form: every term carries the
        # common factor (x - y), so the difference avoids the cancellation
        # that limits direct subtraction of nearby objective values.
        terms = [0.5 * M * alpha * (x + y - 2.0 / M)]
        for a_j, b_j in stats:
            terms.append(half_curv * (x + y) * a_j - b_j)
        return math.fsum(terms) * (x - y)

    span = 2.0 / M
    h = 0.45 * span
    x1, x3 = max(0.0, guess - h), min(span, guess + h)
    x2 = guess
    if x2 <= x1 or x2 >= x3:
        x2 = 0.5 * (x1 + x3)
    d23 = diff(x2, x3)
    d21 = diff(x2, x1)
    num = (x2 - x1) ** 2 * d23 - (x2 - x3) ** 2 * d21
    den = (x2 - x1) * d23 - (x2 - x3) * d21
    if den != 0.0:
        vertex = min(max(x2 - 0.5 * num / den, 0.0), span)
        if diff(vertex, guess) <= 0.0:
            return vertex
    return guess


def finite_diff_grad(f: Callable[[np.ndarray], float], x: np.ndarray, h: float) -> np.ndarray:
    """Central-difference gradient estimate, one coordinate at a time."""
    if h <= 0:
        raise ValueError(f"h must be > 0, got {h}")
    grad = np.empty_like(x, dtype=np.float64)
    for i in range(x.shape[0]):
        xp = x.astype(np.float64).copy()
        xm = xp.copy()
        xp[i] += h
        xm[i] -= h
        grad[i] = (f(xp) - f(xm)) / (2.0 * h)
    return grad


@dataclass(frozen=True)
class SurrogateBoundVerdict:
    """Monte Carlo comparison of expected decrease against expected surrogate."""

    mean_decrease: float
    mean_surrogate: float
    std_err: float
    n: int
    passed: bool


def surrogate_bound_check(oracle: StochasticOracle, x: np.ndarray, eta: float,
                   N: int, rng: RngStream) -> SurrogateBoundVerdict:
    """Check E[f(x - eta*g) - f(x)] <= E[surrogate(eta)] at 3 standard errors.

    Draws N fresh pairs at a fixed x with eta chosen before sampling, as the
    bound requires. The standard error pools both sample variances, so the
    zero-noise case degenerates to a deterministic comparison with SE = 0.
    """
    if not oracle.exact_f:
        raise ValueError("surrogate_bound_check needs an oracle with exact f")
    if oracle.smoothness is None:
        raise ValueError("surrogate_bound_check needs the oracle's smoothness constant")
    gen = rng.generator()
    M = oracle.smoothness
    gs, gps = oracle.sample_pairs(x, N, gen)
    f0 = oracle.f(x)
    decreases = oracle.f_many(x - eta * gs) - f0
    surrogates = 0.5 * M * eta * eta * np.sum(gs * gs, axis=1) - eta * np.sum(gs * gps, axis=1)
    mean_d = float(np.mean(decreases))
    mean_s = float(np.mean(surrogates))
    if N > 1:
        se = math.sqrt((np.var(decreases, ddof=1) + np.var(surrogates, ddof=1)) / N)
    else:
        se = 0.0
    return SurrogateBoundVerdict(mean_d, mean_s, se, N, mean_d <= mean_s + 3.0 * se)


def smoothness_probe(grad: Callable[[np.ndarray], np.ndarray],
                     sample_point: Callable[[np.random.Generator], np.ndarray],
                     pairs: int, rng: RngStream) -> float:
    """Max gradient-difference ratio over sampled pairs: a lower bound on M."""
    if pairs < 1:
        raise ValueError(f"pairs must be >= 1, got {pairs}")
    gen = rng.generator()
    best = 0.0
    for _ in range(pairs):
        x1 = sample_point(gen)
        x2 = sample_point(gen)
        den = math.sqrt(sq_norm(x1 - x2))
        if den == 0.0:
            continue
        num = math.sqrt(sq_norm(grad(x1) - grad(x2)))
        best = max(best, num / den)
    return best


# ----------------------------------------------------------------------------
# Verification suite (backs the CLI's `verify` subcommand)
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check_ftrl_closed_form(seed: int) -> CheckResult:
    gen = RngStream(seed, 1).generator()
    worst = 0.0
    from .online import FtrlState

    for _ in range(60):
        T = int(gen.integers(0, 31))
        d = int(gen.integers(1, 6))
        alpha = float(gen.choice(np.array([0.1, 1.0, 10.0])))
        M = float(gen.choice(np.array([0.5, 1.0, 2.0])))
        history = []
        state = FtrlState(alpha=alpha, M=M)
        for _ in range(T):
            g = gen.uniform(-1.0, 1.0, size=d)
            gp = gen.uniform(-1.0, 1.0, size=d)
            history.append(GradientPair(g, gp))
            state.observe_pair(g, gp)
        worst = max(worst, abs(state.stepsize() - ftrl_argmin_oracle(alpha, M, history)))
    return CheckResult("ftrl closed form vs numeric argmin",
                       worst < 1e-8, f"max deviation {worst:.3e}")


def _check_gradients(seed: int) -> CheckResult:
    gen = RngStream(seed, 2).generator()
    worst = 0.0
    from .oracles import rosenbrock_f

    for _ in range(100):
        x = gen.uniform(-2.0, 2.0, size=2)
        fd = finite_diff_grad(rosenbrock_f, x, 1e-6)
        worst = max(worst, float(np.max(np.abs(fd - rosenbrock_grad(x)))))
    feats = gen.uniform(-1.0, 1.0, size=(5, 4))
    labels = np.where(gen.uniform(size=5) < 0.5, -1.0, 1.0)
    data = Dataset(feats, labels)
    from .oracles import sigmoid_loss_f

    for _ in range(20):
        x = gen.uniform(-1.0, 1.0, size=4)
        fd = finite_diff_grad(lambda v: sigmoid_loss_f(v, data), x, 1e-6)
        an = sigmoid_loss_grad(x, feats, labels)
        worst = max(worst, float(np.max(np.abs(fd - an))))
    return CheckResult("analytic gradients vs finite differences",
                       worst < 1e-5, f"max abs deviation {worst:.3e}")


def _check_zero_noise(seed: int) -> CheckResult:
    gen = RngStream(seed, 3).generator()
    oracle = RosenbrockOracle(sigma=0.0)
    ok = True
    for _ in range(10):
        x = gen.uniform(-2.0, 2.0, size=2)
        pair = oracle.sample_pair(x, gen)
        exact = oracle.grad(x)
        ok = ok and np.array_equal(pair.g, exact) and np.array_equal(pair.g_prime, exact)
    return CheckResult("zero-noise oracle returns exact gradients", ok,
                       "g == g' == grad f" if ok else "mismatch found")


def _check_surrogate_bound(seed: int, n: int) -> CheckResult:
    details = []
    ok = True
    for sigma in (0.2, 5.0):
        oracle = RosenbrockOracle(sigma=sigma)
        v = surrogate_bound_check(oracle, np.array([0.3, -0.2]), 1.0 / oracle.smoothness,
                           n, RngStream(seed, 4))
        ok = ok and v.passed
        details.append(f"rosenbrock sigma={sigma}: {v.passed}")
    gen = RngStream(seed, 5).generator()
    feats = gen.uniform(-1.0, 1.0, size=(50, 8))
    labels = np.where(gen.uniform(size=50) < 0.5, -1.0, 1.0)
    oracle = SigmoidLossOracle(Dataset(feats, labels), batch_size=1)
    v = surrogate_bound_check(oracle, np.zeros(8), 1.0 / oracle.smoothness, n, RngStream(seed, 6))
    ok = ok and v.passed
    details.append(f"sigmoid batch=1: {v.passed}")
    return CheckResult("per-step surrogate bound (Monte Carlo)", ok, "; ".join(details))


def _check_smoothness_probe(seed: int) -> CheckResult:
    probe = smoothness_probe(lambda x: 2.0 * x,
                             lambda gen: gen.uniform(-1.0, 1.0, size=3),
                             pairs=50, rng=RngStream(seed, 7))
    ok = abs(probe - 2.0) < 1e-12
    return CheckResult("smoothness probe on linear field", ok, f"probe {probe:.12f}")


def _check_noiseless_fixed_point(seed: int) -> CheckResult:
    oracle = RosenbrockOracle(sigma=0.0)
    opt = Sgdol(np.zeros(2), M=1002.0, alpha=DEFAULT_ALPHA)
    res = run(opt, oracle, T=500, rng=RngStream(seed, 8), report_every=1)
    ok = bool(np.all(res.trajectory.stepsize == 1.0 / 1002.0))
    return CheckResult("noiseless stepsizes equal 1/M exactly", ok,
                       "all 500 stepsizes exact" if ok else "drift detected")


def _check_pl_rate(seed: int) -> CheckResult:
    diag = np.linspace(0.1, 1.0, 5)
    oracle = QuadraticOracle(diag, sigma=0.0)
    opt = Sgdol(np.ones(5), M=1.0, alpha=DEFAULT_ALPHA)
    res = run(opt, oracle, T=100, rng=RngStream(seed, 9), report_every=1)
    f = res.trajectory.f_value
    rate = 1.0 - oracle.pl_constant / 1.0
    f1 = f[0]
    ok = all(f[t] <= rate ** t * f1 for t in range(len(f)))
    return CheckResult("PL quadratic linear rate", bool(ok),
                       f"f after 100 steps {f[-1]:.3e} vs bound {rate ** 99 * f1:.3e}")


def _check_regret_bound(seed: int) -> CheckResult:
    oracle = RosenbrockOracle(sigma=5.0)
    opt = Sgdol(np.zeros(2), M=1002.0, alpha=DEFAULT_ALPHA)
    res = run(opt, oracle, T=2000, rng=RngStream(seed, 10), record_regret=True)
    ledger = res.ledger
    L = ledger.max_grad_norm()
    grid = np.linspace(0.0, 2.0 / 1002.0, 32)
    margin = min(ledger.regret_bound_rhs(float(e), L) - ledger.regret_vs(float(e))
                 for e in grid)
    return CheckResult("regret bound inequality on recorded run",
                       margin >= 0.0, f"min slack {margin:.3e}")


def run_verification(seed: int = 20190901, mc_samples: int = 20000) -> List[CheckResult]:
    """Run the full diagnostic suite; deterministic for a fixed seed."""
    return [
        _check_ftrl_closed_form(seed),
        _check_gradients(seed),
        _check_zero_noise(seed),
        _check_surrogate_bound(seed, mc_samples),
        _check_smoothness_probe(seed),
        _check_noiseless_fixed_point(seed),
        _check_pl_rate(seed),
        _check_regret_bound(seed),
    ]
