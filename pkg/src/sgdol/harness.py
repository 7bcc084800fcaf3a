"""Seeded experiment runner: configs, repetition averaging, and CSV output.

An experiment is (oracle x optimizer list x T x repetitions x seed). Each
repetition owns one oracle noise stream shared by every optimizer, so
optimizers see identical gradient pairs and their series are directly
comparable; the uniformly sampled output index gets its own stream per
(optimizer, repetition). Averages over repetitions are plain arithmetic
means. CSV output uses shortest round-trip decimals, so identical specs
produce byte-identical files.
"""

from __future__ import annotations

import configparser
import csv
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .core import RngStream, derive_stream_id
from .optimizers import OptimizerConfig, RunResult, run
from .oracles import (
    QuadraticOracle,
    RosenbrockOracle,
    SigmoidLossOracle,
    StochasticOracle,
    balance_subsample,
    load_libsvm,
)

__all__ = [
    "OracleSpec",
    "ExperimentSpec",
    "OptimizerSeries",
    "ResultTable",
    "ConfigError",
    "run_experiment",
    "write_csv",
    "read_csv_series",
    "parse_config",
]

# Stream purposes folded into stream ids; oracle noise is keyed by repetition
# only, so all optimizers share each repetition's gradient pairs.
_PURPOSE_ORACLE = 1
_PURPOSE_OUTPUT = 2
_PURPOSE_BALANCE = 3


class ConfigError(ValueError):
    """Invalid experiment configuration; ``problems`` lists offending fields."""

    def __init__(self, problems: List[str]):
        super().__init__("invalid experiment spec: " + "; ".join(problems))
        self.problems = problems


@dataclass
class OracleSpec:
    """Which objective to run on, and its noise / data parameters."""

    kind: str  # rosenbrock | quadratic | sigmoid
    sigma: float = 0.0
    diag: Optional[np.ndarray] = None
    dataset: Optional[str] = None
    batch_size: Optional[int] = None
    append_bias: bool = True
    balance: bool = False

    def validate(self) -> List[str]:
        problems = []
        if self.kind not in ("rosenbrock", "quadratic", "sigmoid"):
            return [f"oracle: unknown kind {self.kind!r}"]
        if self.kind in ("rosenbrock", "quadratic") and self.sigma < 0:
            problems.append(f"sigma: must be >= 0, got {self.sigma}")
        if self.kind == "quadratic" and self.diag is None:
            problems.append("diag: required for the quadratic oracle")
        if self.kind == "sigmoid":
            if self.dataset is None:
                problems.append("dataset: required for the sigmoid oracle")
            if self.batch_size is None:
                problems.append("batch_size: required for the sigmoid oracle")
            elif self.batch_size < 1:
                problems.append(f"batch_size: must be >= 1, got {self.batch_size}")
        return problems

    def build(self, seed: int) -> StochasticOracle:
        if self.kind == "rosenbrock":
            return RosenbrockOracle(sigma=self.sigma)
        if self.kind == "quadratic":
            return QuadraticOracle(self.diag, sigma=self.sigma)
        data = load_libsvm(self.dataset, append_bias=self.append_bias)
        if self.balance:
            gen = RngStream(seed, derive_stream_id(_PURPOSE_BALANCE)).generator()
            data = balance_subsample(data, gen)
        batch = min(self.batch_size, len(data))
        return SigmoidLossOracle(data, batch_size=batch)


@dataclass
class ExperimentSpec:
    """Full description of one experiment; fully determines its outputs."""

    oracle: OracleSpec
    optimizers: List[Tuple[str, OptimizerConfig]]
    T: int
    repetitions: int
    seed: int
    report_every: Optional[int] = None
    output_dir: Optional[str] = None
    keep_raw: bool = False

    def validate(self) -> List[str]:
        problems = list(self.oracle.validate())
        if self.T < 1:
            problems.append(f"T: must be >= 1, got {self.T}")
        if self.repetitions < 1:
            problems.append(f"repetitions: must be >= 1, got {self.repetitions}")
        if not 0 <= self.seed < 2**64:
            problems.append(f"seed: must be a 64-bit unsigned integer, got {self.seed}")
        if self.report_every is not None and self.report_every < 1:
            problems.append(f"report_every: must be >= 1, got {self.report_every}")
        if not self.optimizers:
            problems.append("optimizers: at least one optimizer section is required")
        names = [name for name, _ in self.optimizers]
        if len(set(names)) != len(names):
            problems.append("optimizers: names must be unique")
        for name, cfg in self.optimizers:
            problems.extend(
                f"optimizer.{name}.{p}" for p in cfg.validate(deferred_ok=True))
        return problems


@dataclass
class OptimizerSeries:
    """Repetition-averaged series for one optimizer."""

    name: str
    kind: str
    t: np.ndarray
    grad_sq_norm: Optional[np.ndarray]
    f_value: Optional[np.ndarray]
    stepsize_mean: np.ndarray
    stepsize_coords: Optional[np.ndarray] = None
    optimality_gap: Optional[np.ndarray] = None
    raw: Optional[List[RunResult]] = None


@dataclass
class ResultTable:
    """All optimizer series from one experiment."""

    series: Dict[str, OptimizerSeries] = field(default_factory=dict)
    f_star: Optional[float] = None


def _fill_sgd_gl(cfg: OptimizerConfig, oracle: StochasticOracle, x0, T: int) -> OptimizerConfig:
    # The theoretically tuned constant stepsize needs problem constants; fill
    # anything left unset from the oracle so configs stay terse.
    if cfg.kind != "sgd_gl":
        return cfg
    if cfg.sigma is None and hasattr(oracle, "sigma"):
        cfg.sigma = float(np.sqrt(np.sum(np.asarray(oracle.sigma) ** 2)))
    if cfg.T is None:
        cfg.T = T
    if cfg.f_gap is None and oracle.exact_f and oracle.f_star is not None:
        cfg.f_gap = oracle.f(x0) - oracle.f_star
    if cfg.M is None and oracle.smoothness is not None:
        cfg.M = oracle.smoothness
    return cfg


def run_experiment(spec: ExperimentSpec) -> ResultTable:
    """Execute repetitions x optimizers runs, average, and write CSV output.

    The start point is all zeros for every oracle. Files are written only
    when the spec names an output directory.
    """
    problems = spec.validate()
    if problems:
        raise ConfigError(problems)
    oracle = spec.oracle.build(spec.seed)
    x0 = np.zeros(oracle.dim)
    table = ResultTable(f_star=oracle.f_star)
    for opt_idx, (name, cfg) in enumerate(spec.optimizers):
        cfg = _fill_sgd_gl(cfg, oracle, x0, spec.T)
        strict = cfg.validate()
        if strict:
            raise ConfigError([f"optimizer.{name}.{p}" for p in strict])
        sums = None
        raws: List[RunResult] = []
        for rep in range(spec.repetitions):
            optimizer = cfg.build(x0)
            oracle_rng = RngStream(spec.seed, derive_stream_id(_PURPOSE_ORACLE, rep))
            output_rng = RngStream(
                spec.seed, derive_stream_id(_PURPOSE_OUTPUT, opt_idx, rep))
            result = run(optimizer, oracle, spec.T, oracle_rng,
                         report_every=spec.report_every, output_rng=output_rng)
            traj = result.trajectory
            if sums is None:
                sums = {
                    "t": traj.t.copy(),
                    "gsq": None if traj.true_grad_sq_norm is None
                    else traj.true_grad_sq_norm.astype(np.float64).copy(),
                    "f": None if traj.f_value is None else traj.f_value.copy(),
                    "step": traj.stepsize.copy(),
                    "coords": None if traj.stepsize_coords is None
                    else traj.stepsize_coords.copy(),
                }
            else:
                if sums["gsq"] is not None:
                    sums["gsq"] += traj.true_grad_sq_norm
                if sums["f"] is not None:
                    sums["f"] += traj.f_value
                sums["step"] += traj.stepsize
                if sums["coords"] is not None:
                    sums["coords"] += traj.stepsize_coords
            if spec.keep_raw:
                raws.append(result)
        reps = spec.repetitions
        mean_f = None if sums["f"] is None else sums["f"] / reps
        gap = None
        if mean_f is not None and oracle.f_star is not None:
            gap = mean_f - oracle.f_star
        table.series[name] = OptimizerSeries(
            name=name,
            kind=cfg.kind,
            t=sums["t"],
            grad_sq_norm=None if sums["gsq"] is None else sums["gsq"] / reps,
            f_value=mean_f,
            stepsize_mean=sums["step"] / reps,
            stepsize_coords=None if sums["coords"] is None else sums["coords"] / reps,
            optimality_gap=gap,
            raw=raws if spec.keep_raw else None,
        )
    if spec.output_dir is not None:
        write_csv(table, spec.output_dir)
    return table


def _fmt(v) -> str:
    return repr(float(v))


def write_csv(table: ResultTable, out_dir):
    """One CSV per optimizer: t,grad_sq_norm,f_value,stepsize_mean[,...].

    Per-coordinate optimizers append stepsize_1..stepsize_d columns; when the
    oracle declares a known optimum, an optimality_gap column is appended
    last. Numbers are shortest round-trip decimals.
    """
    os.makedirs(out_dir, exist_ok=True)
    for name, s in table.series.items():
        path = os.path.join(out_dir, f"{name}.csv")
        header = ["t", "grad_sq_norm", "f_value", "stepsize_mean"]
        n_coords = 0 if s.stepsize_coords is None else s.stepsize_coords.shape[1]
        header += [f"stepsize_{i + 1}" for i in range(n_coords)]
        if s.optimality_gap is not None:
            header.append("optimality_gap")
        try:
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(header)
                for i in range(len(s.t)):
                    row = [
                        str(int(s.t[i])),
                        "" if s.grad_sq_norm is None else _fmt(s.grad_sq_norm[i]),
                        "" if s.f_value is None else _fmt(s.f_value[i]),
                        _fmt(s.stepsize_mean[i]),
                    ]
                    row += [_fmt(s.stepsize_coords[i, j]) for j in range(n_coords)]
                    if s.optimality_gap is not None:
                        row.append(_fmt(s.optimality_gap[i]))
                    writer.writerow(row)
        except OSError as exc:
            raise OSError(f"failed writing {path}: {exc}") from exc


def read_csv_series(path) -> Dict[str, np.ndarray]:
    """Parse back a written CSV into named float columns (t as int64)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        cols: Dict[str, list] = {h: [] for h in header}
        for row in reader:
            for h, v in zip(header, row):
                cols[h].append(v)
    out: Dict[str, np.ndarray] = {}
    for h, vals in cols.items():
        if h == "t":
            out[h] = np.array([int(v) for v in vals], dtype=np.int64)
        else:
            out[h] = np.array([float(v) if v else np.nan for v in vals])
    return out


# ----------------------------------------------------------------------------
# Config files
# ----------------------------------------------------------------------------

_EXPERIMENT_KEYS = {
    "oracle", "sigma", "diag", "dataset", "batch_size", "append_bias",
    "balance", "t", "repetitions", "seed", "report_every", "output_dir",
    "keep_raw",
}
_OPTIMIZER_KEYS = {
    "kind", "m", "alpha", "lr", "beta1", "beta2", "eps", "sigma", "t",
    "f_gap", "c",
}


def _get_typed(section, key, cast, problems, where, default=None):
    if key not in section:
        return default
    raw = section[key]
    try:
        if cast is bool:
            lowered = raw.strip().lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return cast(raw)
    except ValueError:
        problems.append(f"{where}.{key}: cannot parse {raw!r}")
        return default


def parse_config(path) -> ExperimentSpec:
    """Parse the INI-style experiment config documented in the README.

    Collects every problem it finds and raises one ConfigError naming all
    offending fields. Missing file surfaces as an OSError.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    with open(path) as fh:
        parser.read_file(fh)
    problems: List[str] = []
    if "experiment" not in parser:
        raise ConfigError(["experiment: section missing"])
    exp = parser["experiment"]
    for key in exp:
        if key not in _EXPERIMENT_KEYS:
            problems.append(f"experiment.{key}: unknown key")
    kind = exp.get("oracle", "")
    diag = None
    if "diag" in exp:
        try:
            diag = np.array([float(v) for v in exp["diag"].split()])
        except ValueError:
            problems.append(f"experiment.diag: cannot parse {exp['diag']!r}")
    oracle = OracleSpec(
        kind=kind,
        sigma=_get_typed(exp, "sigma", float, problems, "experiment", 0.0),
        diag=diag,
        dataset=exp.get("dataset"),
        batch_size=_get_typed(exp, "batch_size", int, problems, "experiment"),
        append_bias=_get_typed(exp, "append_bias", bool, problems, "experiment", True),
        balance=_get_typed(exp, "balance", bool, problems, "experiment", False),
    )
    optimizers: List[Tuple[str, OptimizerConfig]] = []
    for section in parser.sections():
        if section == "experiment":
            continue
        if not section.startswith("optimizer."):
            problems.append(f"{section}: unknown section (expected optimizer.<name>)")
            continue
        name = section[len("optimizer."):]
        sec = parser[section]
        for key in sec:
            if key not in _OPTIMIZER_KEYS:
                problems.append(f"{section}.{key}: unknown key")
        cfg = OptimizerConfig(
            kind=sec.get("kind", ""),
            M=_get_typed(sec, "m", float, problems, section),
            alpha=_get_typed(sec, "alpha", float, problems, section),
            lr=_get_typed(sec, "lr", float, problems, section),
            beta1=_get_typed(sec, "beta1", float, problems, section, 0.9),
            beta2=_get_typed(sec, "beta2", float, problems, section, 0.999),
            eps=_get_typed(sec, "eps", float, problems, section, 1e-8),
            sigma=_get_typed(sec, "sigma", float, problems, section),
            T=_get_typed(sec, "t", int, problems, section),
            f_gap=_get_typed(sec, "f_gap", float, problems, section),
            c=_get_typed(sec, "c", float, problems, section, 1.0),
        )
        optimizers.append((name, cfg))
    spec = ExperimentSpec(
        oracle=oracle,
        optimizers=optimizers,
        T=_get_typed(exp, "t", int, problems, "experiment", 0),
        repetitions=_get_typed(exp, "repetitions", int, problems, "experiment", 0),
        seed=_get_typed(exp, "seed", int, problems, "experiment", 0),
        report_every=_get_typed(exp, "report_every", int, problems, "experiment"),
        output_dir=exp.get("output_dir"),
        keep_raw=_get_typed(exp, "keep_raw", bool, problems, "experiment", False),
    )
    problems.extend(spec.validate())
    if problems:
        raise ConfigError(problems)
    return spec
