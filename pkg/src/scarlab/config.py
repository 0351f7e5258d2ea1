"""Plain key = value run configuration.

One scalar per line, `#` comments, commas for the one sweepable key
(temperature).  Each experiment declares exactly the keys it accepts; unknown
keys, missing keys and out-of-domain values are all reported together with
their line numbers rather than one at a time.
"""

from __future__ import annotations

import difflib
from dataclasses import dataclass, field, fields
from pathlib import Path

EXPERIMENTS = (
    "meanfield", "selfenergy", "bs-lyapunov", "floquet-scan",
    "otoc-envelope", "perturbed-otoc", "ssb",
)


class ConfigError(ValueError):
    """Carries every violation found in a config file."""

    def __init__(self, path, violations):
        self.path = str(path)
        self.violations = list(violations)
        lines = "\n".join(f"  {self.path}:{ln}: {msg}" if ln else f"  {self.path}: {msg}"
                          for ln, msg in self.violations)
        super().__init__(f"invalid config:\n{lines}")


@dataclass
class RunConfig:
    experiment: str
    L: int = 1024
    hopping: float = 1.0
    mu: float = 2.5
    eta: float | None = None          # None -> 3/L
    J: float = 1.0
    alpha_sq: float = 1.0
    beta_sq: float = 1.0
    epsilon: float = 0.3
    temperature: list[float] = field(default_factory=lambda: [0.5, 1.0, 2.0, 5.0])
    dt: float = 0.01
    t_max: float = 40.0
    steps_per_period: int = 4096
    tol: float = 1e-10
    fp_damping: float = 0.5
    max_iter: int = 100_000
    workers: int = 1
    output_dir: str = "."
    emit_svg: bool = False

    def resolved_eta(self) -> float:
        return 3.0 / self.L if self.eta is None else self.eta

    def gap(self) -> float:
        return self.mu - 2.0 * self.hopping


# keys each experiment accepts beyond `experiment` itself
_COMMON = ("output_dir", "emit_svg", "workers")
_LATTICE = ("L", "hopping", "mu", "eta")
KEYS_BY_EXPERIMENT: dict[str, tuple[str, ...]] = {
    "meanfield": _COMMON + _LATTICE + ("J", "temperature", "tol", "max_iter"),
    "selfenergy": _COMMON + _LATTICE,
    "bs-lyapunov": _COMMON + _LATTICE + ("tol", "max_iter"),
    "floquet-scan": _COMMON + _LATTICE + ("J", "beta_sq", "steps_per_period"),
    "otoc-envelope": _COMMON + _LATTICE + ("J", "beta_sq", "steps_per_period", "t_max"),
    "perturbed-otoc": _COMMON + _LATTICE + (
        "J", "alpha_sq", "epsilon", "dt", "t_max", "tol", "fp_damping", "max_iter"),
    "ssb": ("output_dir", "emit_svg", "hopping", "mu", "J"),
}

# per-experiment defaults that differ from the dataclass baseline
_DEFAULT_OVERRIDES: dict[str, dict] = {
    "meanfield": {"tol": 1e-11, "max_iter": 10_000},
    "floquet-scan": {"J": 0.1},
    "otoc-envelope": {"J": 0.1},
    "perturbed-otoc": {"J": 0.1, "alpha_sq": 3.75, "max_iter": 400},
}

_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_INT_KEYS = {"L", "steps_per_period", "max_iter", "workers"}
_BOOL_KEYS = {"emit_svg"}
_STR_KEYS = {"output_dir", "experiment"}
_LIST_KEYS = {"temperature"}


def _parse_value(key: str, raw: str):
    if key in _STR_KEYS:
        return raw
    if key in _BOOL_KEYS:
        low = raw.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if key in _LIST_KEYS:
        return [float(tok) for tok in raw.split(",") if tok.strip() != ""]
    if key in _INT_KEYS:
        return int(raw)
    return float(raw)


def _domain_violation(cfg: RunConfig) -> list[str]:
    """Experiment-specific value checks; returns human-readable messages."""
    msgs = []
    if cfg.L < 4:
        msgs.append(f"L must be >= 4, got {cfg.L}")
    if cfg.hopping <= 0:
        msgs.append(f"hopping must be > 0, got {cfg.hopping}")
    if cfg.eta is not None and cfg.eta <= 0:
        msgs.append(f"eta must be > 0, got {cfg.eta}")
    if cfg.workers < 1:
        msgs.append(f"workers must be >= 1, got {cfg.workers}")
    needs_gap = cfg.experiment != "ssb"
    if needs_gap and cfg.gap() <= 0:
        msgs.append(f"gapped dispersion required: mu - 2*hopping = {cfg.gap()} <= 0")
    if cfg.experiment == "meanfield":
        if cfg.J < 0:
            msgs.append(f"J must be >= 0, got {cfg.J}")
        if not cfg.temperature:
            msgs.append("temperature list is empty")
        elif any(t <= 0 for t in cfg.temperature):
            msgs.append(f"temperatures must be > 0, got {cfg.temperature}")
    if cfg.experiment in ("floquet-scan", "otoc-envelope") and cfg.beta_sq < 0:
        msgs.append(f"beta_sq must be >= 0, got {cfg.beta_sq}")
    if cfg.experiment == "perturbed-otoc":
        if cfg.epsilon < 0:
            msgs.append(f"epsilon must be >= 0, got {cfg.epsilon}")
        elif cfg.epsilon >= cfg.gap():
            msgs.append(
                f"epsilon = {cfg.epsilon} must stay below the gap {cfg.gap()} "
                "(the Dyson branch requires a stable band)")
        if not 0 < cfg.fp_damping <= 1:
            msgs.append(f"fp_damping must be in (0, 1], got {cfg.fp_damping}")
        if cfg.dt <= 0 or cfg.t_max <= 0:
            msgs.append("dt and t_max must be > 0")
        if 8.0 * cfg.J * cfg.alpha_sq <= 0:
            msgs.append("drive strength 8*J*alpha_sq must be > 0")
    if cfg.experiment in ("floquet-scan", "otoc-envelope") and cfg.steps_per_period < 64:
        msgs.append(f"steps_per_period must be >= 64, got {cfg.steps_per_period}")
    if cfg.experiment == "ssb" and cfg.J <= 0:
        msgs.append(f"J must be > 0, got {cfg.J}")
    return msgs


def parse_config(path, experiment: str | None = None) -> RunConfig:
    """Read and fully validate a config file.

    Collects every violation (unknown key with a close-match suggestion,
    unparsable value, out-of-domain value) before raising ConfigError.
    """
    path = Path(path)
    violations: list[tuple[int | None, str]] = []
    pairs: dict[str, tuple[int, str]] = {}
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(path, [(None, f"cannot read: {exc}")]) from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            violations.append((lineno, f"expected 'key = value', got {raw.strip()!r}"))
            continue
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key in pairs:
            violations.append((lineno, f"duplicate key {key!r}"))
            continue
        pairs[key] = (lineno, value)

    exp_from_file = pairs.pop("experiment", None)
    if exp_from_file is not None:
        lineno, value = exp_from_file
        if value not in EXPERIMENTS:
            violations.append((lineno, f"unknown experiment {value!r}; "
                                       f"choose from {', '.join(EXPERIMENTS)}"))
        elif experiment is not None and value != experiment:
            violations.append((lineno, f"config names experiment {value!r} but "
                                       f"{experiment!r} was requested"))
        else:
            experiment = experiment or value
    if experiment is None:
        violations.append((None, "no experiment given (CLI subcommand or 'experiment =' line)"))
        raise ConfigError(path, violations)
    if experiment not in EXPERIMENTS:
        violations.append((None, f"unknown experiment {experiment!r}"))
        raise ConfigError(path, violations)

    allowed = KEYS_BY_EXPERIMENT[experiment]
    values = dict(_DEFAULT_OVERRIDES.get(experiment, {}))
    for key, (lineno, raw) in pairs.items():
        if key not in allowed:
            hint = difflib.get_close_matches(key, allowed, n=1, cutoff=0.6)
            suffix = f"; did you mean {hint[0]!r}?" if hint else ""
            scope = "not a config key" if key not in _FIELD_TYPES \
                else f"not used by experiment {experiment!r}"
            violations.append((lineno, f"unknown key {key!r} ({scope}){suffix}"))
            continue
        try:
            values[key] = _parse_value(key, raw)
        except ValueError as exc:
            violations.append((lineno, f"bad value for {key!r}: {exc}"))

    # domain checks run on whatever parsed cleanly, so a single bad key does
    # not hide out-of-range values elsewhere in the file
    cfg = RunConfig(experiment=experiment, **values)
    for msg in _domain_violation(cfg):
        violations.append((None, msg))
    if violations:
        raise ConfigError(path, violations)
    return cfg


def config_lines(cfg: RunConfig) -> list[str]:
    """Resolved config as re-parseable 'key = value' lines."""
    out = [f"experiment = {cfg.experiment}"]
    for key in KEYS_BY_EXPERIMENT[cfg.experiment]:
        val = getattr(cfg, key)
        if key == "eta":
            val = cfg.resolved_eta()
        if isinstance(val, bool):
            text = "true" if val else "false"
        elif isinstance(val, float):
            text = format(val, ".17g")
        elif isinstance(val, list):
            text = ",".join(format(v, ".17g") for v in val)
        else:
            text = str(val)
        out.append(f"{key} = {text}")
    return out
