"""Command line entry point: single runs, parameter sweeps and self-checks.

Config files are JSON.  A run document holds ScenarioConfig fields::

    {"M": 20, "N": 10, "C": 0.3, "Q": 0.2, "trials": 100, "seed": 1,
     "policy": "PC_D2D_OPTIMAL"}

A sweep document names the swept variable, its values, the policies and a
base scenario::

    {"variable": "C", "values": [0.1, 0.5, 0.9],
     "policies": ["PC_D2D_OPTIMAL", "FC_D2D"],
     "base": {"M": 20, "N": 10, "C": 0.1, "Q": 0.2, "trials": 100, "seed": 1}}
"""

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, fields, replace
from typing import Callable, List, Optional, Tuple, Union

from .schedulers import Policy
from .simulator import ScenarioConfig, config_problems, run_experiment, with_value

CSV_HEADER = ("variable", "value", "policy", "mean_delay", "std_delay", "trials", "seconds")
SWEEP_VARIABLES = ("C", "M", "N", "P")
_CONFIG_FIELDS = {f.name for f in fields(ScenarioConfig)}
_REQUIRED = ("M", "N", "C", "Q")


class ConfigError(ValueError):
    """Invalid config document; ``problems`` lists (field path, message) pairs."""

    def __init__(self, problems: List[Tuple[str, str]], source: str = "config"):
        self.problems = list(problems)
        self.source = source
        lines = [f"{source}: {path}: {msg}" for path, msg in self.problems]
        super().__init__("\n".join(lines))


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: Tuple[float, ...]
    base: ScenarioConfig
    policies: Tuple[Policy, ...]

    def __post_init__(self):
        problems = _sweep_problems(self.variable, list(self.values), list(self.policies))
        if problems:
            raise ConfigError(problems)
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "policies", tuple(Policy(p) for p in self.policies))

    def points(self) -> List[ScenarioConfig]:
        return [with_value(self.base, self.variable, v) for v in self.values]

    def to_dict(self) -> dict:
        return {"variable": self.variable, "values": list(self.values),
                "policies": [p.value for p in self.policies], "base": self.base.to_dict()}


def _sweep_problems(variable, values, policies, prefix="") -> List[Tuple[str, str]]:
    out = []
    if variable not in SWEEP_VARIABLES:
        out.append((prefix + "variable", f"must be one of {', '.join(SWEEP_VARIABLES)}"))
    if not isinstance(values, list) or not values:
        out.append((prefix + "values", "must be a nonempty list"))
    else:
        for k, v in enumerate(values):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                out.append((f"{prefix}values[{k}]", "must be a number"))
        nums = [v for v in values if isinstance(v, (int, float)) and not isinstance(v, bool)]
        if len(nums) == len(values) and any(b <= a for a, b in zip(nums, nums[1:])):
            out.append((prefix + "values", "must be strictly increasing"))
        if variable in ("M", "N") and any(not float(v).is_integer() or v < 1 for v in nums):
            out.append((prefix + "values", f"{variable} values must be positive integers"))
    if not isinstance(policies, list) or not policies:
        out.append((prefix + "policies", "must be a nonempty list"))
    else:
        for k, p in enumerate(policies):
            try:
                Policy(p)
            except ValueError:
                out.append((f"{prefix}policies[{k}]", f"unknown policy {p!r}"))
    return out


def config_from_dict(doc, prefix: str = "") -> ScenarioConfig:
    """Validate a scenario mapping and build the config, collecting every problem."""
    if not isinstance(doc, dict):
        raise ConfigError([(prefix.rstrip(".") or "<root>", "must be an object")])
    problems = []
    for key in doc:
        if key not in _CONFIG_FIELDS:
            problems.append((prefix + key, "unknown field"))
    for key in _REQUIRED:
        if key not in doc:
            problems.append((prefix + key, "required"))
    if "policy" in doc:
        try:
            Policy(doc["policy"])
        except ValueError:
            problems.append((prefix + "policy", f"unknown policy {doc['policy']!r}"))
    for key in ("M", "N", "trials", "seed", "max_rounds"):
        v = doc.get(key)
        if v is not None and (isinstance(v, bool) or not isinstance(v, int)):
            problems.append((prefix + key, "must be an integer"))
    for key in ("C", "P", "Q"):
        v = doc.get(key)
        if v is not None and (isinstance(v, bool) or not isinstance(v, (int, float))):
            problems.append((prefix + key, "must be a number"))
    for key in ("strict_definition1", "pin_topology"):
        if key in doc and not isinstance(doc[key], bool):
            problems.append((prefix + key, "must be true or false"))
    typed = not any(msg != "unknown field" for _, msg in problems)
    values = {k: doc[k] for k in doc if k in _CONFIG_FIELDS}
    for key in ("C", "P", "Q"):
        if typed and values.get(key) is not None:
            values[key] = float(values[key])
    if typed:
        probe = _Probe(**{k: values.get(k) for k in ("M", "N", "C", "Q", "P", "trials", "seed",
                                                     "max_rounds")})
        problems += [(prefix + k, msg) for k, msg in config_problems(probe)]
    if problems:
        raise ConfigError(problems)
    return ScenarioConfig(**values)


@dataclass
class _Probe:
    M: int
    N: int
    C: float
    Q: float
    P: Optional[float]
    trials: Optional[int]
    seed: Optional[int]
    max_rounds: Optional[int]

    def __post_init__(self):
        self.trials = 1 if self.trials is None else self.trials
        self.seed = 0 if self.seed is None else self.seed


def document_to_config(doc) -> Union[ScenarioConfig, SweepSpec]:
    if isinstance(doc, dict) and ("variable" in doc or "values" in doc or "base" in doc):
        problems = []
        for key in ("variable", "values", "policies", "base"):
            if key not in doc:
                problems.append((key, "required"))
        for key in doc:
            if key not in ("variable", "values", "policies", "base"):
                problems.append((key, "unknown field"))
        if problems:
            raise ConfigError(problems)
        problems = _sweep_problems(doc["variable"], doc["values"], doc["policies"])
        try:
            base = config_from_dict(doc["base"], "base.")
        except ConfigError as err:
            problems += err.problems
        if problems:
            raise ConfigError(problems)
        return SweepSpec(doc["variable"], tuple(doc["values"]), base, tuple(doc["policies"]))
    return config_from_dict(doc)


def parse_config(path) -> Union[ScenarioConfig, SweepSpec]:
    """Read a run or sweep document; raises :class:`ConfigError` with field paths."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as err:
        raise ConfigError([(f"line {err.lineno}", err.msg)], str(path)) from None
    try:
        return document_to_config(doc)
    except ConfigError as err:
        raise ConfigError(err.problems, str(path)) from None


def serialize(config: Union[ScenarioConfig, SweepSpec]) -> str:
    return json.dumps(config.to_dict(), indent=2, sort_keys=True)


# -- sweeps ------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    variable: str
    value: float
    policy: Policy
    mean_delay: float
    std_delay: float
    trials: int
    seconds: float
    summary: dict

    def csv_fields(self, timing: bool = False) -> list:
        return [self.variable, _fmt(self.value), self.policy.value, repr(self.mean_delay),
                repr(self.std_delay), self.trials, f"{self.seconds:.3f}" if timing else ""]


def _fmt(v) -> str:
    return str(v) if isinstance(v, int) else repr(float(v))


def run_sweep(spec: SweepSpec, on_row: Optional[Callable[[SweepRow], None]] = None,
              workers: int = 1) -> List[SweepRow]:
    """One row per (value, policy), in sweep order."""
    rows = []
    for value, point in zip(spec.values, spec.points()):
        for policy in spec.policies:
            res = run_experiment(replace(point, policy=policy), workers=workers)
            row = SweepRow(spec.variable, value, policy, res.mean_delay, res.std_delay,
                           len(res.trials), res.seconds, res.summary())
            rows.append(row)
            if on_row is not None:
                on_row(row)
    return rows


def csv_text(rows: List[SweepRow], timing: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.csv_fields(timing))
    return buf.getvalue()


def emit_outputs(rows: List[SweepRow], out_dir, spec: SweepSpec, name: str = "sweep",
                 timing: bool = False) -> dict:
    """Write ``<name>.csv``, ``<name>.json`` and ``<name>.svg`` into ``out_dir``."""
    if not rows:
        raise ValueError("nothing to write: the result table is empty")
    paths = {ext: os.path.join(out_dir, f"{name}.{ext}") for ext in ("csv", "json", "svg")}
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(paths["csv"], "w", newline="") as fh:
            fh.write(csv_text(rows, timing))
        doc = {
            "sweep": spec.to_dict(),
            "rows": [{"variable": r.variable, "value": r.value, "policy": r.policy.value,
                      "mean_delay": r.mean_delay, "std_delay": r.std_delay, "trials": r.trials,
                      "seconds": r.seconds, **r.summary} for r in rows],
        }
        with open(paths["json"], "w") as fh:
            json.dump(doc, fh, indent=2)
        _chart(rows, spec, paths["svg"])
    except OSError as err:
        raise OSError(f"cannot write results to {err.filename or out_dir}: {err.strerror}") from err
    return paths


AXIS_LABELS = {"C": "connectivity index C", "M": "number of devices M",
               "N": "number of packets N", "P": "D2D erasure probability P (Q = 2P)"}


def _chart(rows: List[SweepRow], spec: SweepSpec, path: str):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "idnc-d2d"
    fig, ax = plt.subplots(figsize=(6, 4))
    for policy in spec.policies:
        pts = [(r.value, r.mean_delay) for r in rows if r.policy is policy]
        ax.plot([x for x, _ in pts], [y for _, y in pts], marker="o", label=policy.value)
    ax.set_xlabel(AXIS_LABELS[spec.variable])
    ax.set_ylabel("mean decoding delay per device")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


# -- command line ------------------------------------------------------------

def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _policy(text: str) -> Policy:
    try:
        return Policy(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"unknown policy {text!r}; choose from {', '.join(p.value for p in Policy)}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="idnc-d2d", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for verb, helptext in (("run", "simulate one scenario"), ("sweep", "sweep one variable")):
        p = sub.add_parser(verb, help=helptext)
        p.add_argument("config", help="JSON config document")
        p.add_argument("--out", default="results", help="output directory (default: results)")
        p.add_argument("--seed", type=_u64, help="override the config seed")
        p.add_argument("--policy", type=_policy, action="append",
                       help="policy to run (repeatable); overrides the config")
        p.add_argument("--strict-definition1", action="store_true",
                       help="count an erased packet as a delay for the device that missed it")
        p.add_argument("--workers", type=int, default=1, help="worker processes for trials")
        p.add_argument("--timing", action="store_true",
                       help="fill the seconds column (makes the CSV run-dependent)")
    v = sub.add_parser("verify", help="run the bundled oracle and invariant checks")
    v.add_argument("--seed", type=_u64, default=0, help="seed for the randomized checks")
    v.add_argument("--quick", action="store_true", help="fewer random instances")
    return parser


def _as_sweep(cfg: Union[ScenarioConfig, SweepSpec], args) -> SweepSpec:
    policies = tuple(args.policy) if args.policy else None
    if isinstance(cfg, SweepSpec):
        base = replace(cfg.base, seed=args.seed if args.seed is not None else cfg.base.seed,
                       strict_definition1=cfg.base.strict_definition1 or args.strict_definition1)
        return SweepSpec(cfg.variable, cfg.values, base, policies or cfg.policies)
    base = replace(cfg, seed=args.seed if args.seed is not None else cfg.seed,
                   strict_definition1=cfg.strict_definition1 or args.strict_definition1)
    return SweepSpec("C", (cfg.C,), base, policies or (cfg.policy,))


def _run_table(spec: SweepSpec, args, name: str) -> int:
    os.makedirs(args.out, exist_ok=True)
    partial = os.path.join(args.out, f"{name}.csv")
    rows: List[SweepRow] = []
    with open(partial, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)

        def flush(row: SweepRow):
            rows.append(row)
            writer.writerow(row.csv_fields(args.timing))
            fh.flush()
            print(f"{row.variable}={_fmt(row.value)} {row.policy.value}: "
                  f"mean delay {row.mean_delay:.4f} (sd {row.std_delay:.4f}, "
                  f"{row.summary['completed']}/{row.trials} completed, {row.seconds:.1f} s)",
                  flush=True)

        run_sweep(spec, flush, workers=args.workers)
    paths = emit_outputs(rows, args.out, spec, name, args.timing)
    print("wrote " + ", ".join(paths.values()))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "verify":
        from .verify import run_verification
        return 0 if run_verification(seed=args.seed, quick=args.quick) else 1
    try:
        cfg = parse_config(args.config)
    except (ConfigError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    if args.command == "sweep" and not isinstance(cfg, SweepSpec):
        print(f"error: {args.config} is a run document; use 'run'", file=sys.stderr)
        return 2
    if args.command == "run" and isinstance(cfg, SweepSpec):
        print(f"error: {args.config} is a sweep document; use 'sweep'", file=sys.stderr)
        return 2
    spec = _as_sweep(cfg, args)
    name = os.path.splitext(os.path.basename(args.config))[0]
    return _run_table(spec, args, name)


if __name__ == "__main__":
    sys.exit(main())
