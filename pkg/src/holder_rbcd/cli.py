"""Command-line harness: ``rbcd run|certify|norms|ratefit``.

Experiments are described by a YAML file::

    objective:
      family: quadratic          # quadratic | power | regularized_power | nonconvex
      params: {diag: [1.0, 4.0]}
      x0: [1.0, 1.0]
    partition: [[0], [1]]        # 0-based coordinate indices per block
    solver:
      alpha: 1.0
      iters: 10
      seeds: [0]
    analysis:
      theorem: strongly_convex_linear_T3a
      depth: 8                   # tree enumeration depth (m^depth <= budget)
      mc_seeds: 0                # > 0 switches certification to Monte Carlo
      convention: as_printed
      s_alpha_scale: 1.0
    output_dir: out

Exit codes: 0 success, 2 configuration or usage error, 3 numerical failure,
4 a certified inequality failed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import analysis as an
from .blocks import BlockPartition
from .norms import property_sweep
from .objectives import FAMILIES, ObjectiveModel, build_objective
from .rbcd import NumericalError, RunTrace, SolverConfig, run

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_FAIL = 0, 2, 3, 4
ENV_OUTPUT_DIR = "RBCD_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "rbcd_out"


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class ObjectiveSection:
    family: str
    params: dict
    x0: list[float]


@dataclass
class SolverSection:
    alpha: float
    iters: int
    seeds: list[int]


@dataclass
class AnalysisSection:
    theorem: str | None = None
    depth: int = 8
    mc_seeds: int = 0
    convention: str = "as_printed"
    s_alpha_scale: float = 1.0
    budget: int = 10**6


@dataclass
class ExperimentConfig:
    objective: ObjectiveSection
    partition: list[list[int]]
    solver: SolverSection
    analysis: AnalysisSection = field(default_factory=AnalysisSection)
    output_dir: str | None = None

    @classmethod
    def from_dict(cls, data) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("<root>", "config must be a mapping")
        _no_extra(data, {"objective", "partition", "solver", "analysis", "output_dir"}, "")
        obj = _section(data, "objective", {"family", "params", "x0"})
        sol = _section(data, "solver", {"alpha", "iters", "seeds"})
        ana = data.get("analysis") or {}
        if not isinstance(ana, dict):
            raise ConfigError("analysis", "must be a mapping")
        _no_extra(ana, set(AnalysisSection.__dataclass_fields__), "analysis.")
        if "partition" not in data:
            raise ConfigError("partition", "missing")
        params = obj.get("params") or {}
        if not isinstance(params, dict):
            raise ConfigError("objective.params", "must be a mapping")
        try:
            cfg = cls(
                ObjectiveSection(str(obj["family"]), dict(params), [float(v) for v in obj["x0"]]),
                [[int(j) for j in b] for b in data["partition"]],
                SolverSection(float(sol["alpha"]), _as_int(sol["iters"], "solver.iters"),
                              [_as_int(s, "solver.seeds") for s in _as_list(sol["seeds"], "solver.seeds")]),
                AnalysisSection(**ana),
                None if data.get("output_dir") is None else str(data["output_dir"]),
            )
        except KeyError as e:
            raise ConfigError(str(e.args[0]), "missing") from None
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError("<root>", str(e)) from None
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def validate(self) -> ObjectiveModel:
        """Check every field; returns the objective the config describes."""
        try:
            part = BlockPartition(self.partition)
        except ValueError as e:
            raise ConfigError("partition", str(e)) from None
        if len(self.objective.x0) != part.dim:
            raise ConfigError("objective.x0", f"length {len(self.objective.x0)} does not match partition dim {part.dim}")
        if not all(np.isfinite(self.objective.x0)):
            raise ConfigError("objective.x0", "must be finite")
        if self.objective.family not in FAMILIES:
            raise ConfigError("objective.family", f"unknown family {self.objective.family!r}; choose from {sorted(FAMILIES)}")
        s = self.solver
        if not 0.0 <= s.alpha <= 1.0:
            raise ConfigError("solver.alpha", f"alpha must lie in [0,1], got {s.alpha}")
        if s.iters < 1:
            raise ConfigError("solver.iters", "must be a positive integer")
        if not s.seeds:
            raise ConfigError("solver.seeds", "must be a nonempty list")
        if any(not 0 <= v < 2**64 for v in s.seeds):
            raise ConfigError("solver.seeds", "seeds must be 64-bit unsigned integers")
        if len(set(s.seeds)) != len(s.seeds):
            raise ConfigError("solver.seeds", "seeds must be distinct")
        a = self.analysis
        if a.theorem is not None:
            try:
                an.Theorem(a.theorem)
            except ValueError:
                raise ConfigError("analysis.theorem", f"unknown theorem {a.theorem!r}; choose from {[t.value for t in an.Theorem]}") from None
        try:
            an.ExponentConvention(a.convention)
        except ValueError:
            raise ConfigError("analysis.convention", f"unknown convention {a.convention!r}") from None
        if not isinstance(a.depth, int) or a.depth < 0:
            raise ConfigError("analysis.depth", "must be a nonnegative integer")
        if part.m**a.depth > a.budget:
            raise ConfigError("analysis.depth", f"m^depth = {part.m}^{a.depth} exceeds the enumeration budget {a.budget}")
        if not isinstance(a.mc_seeds, int) or a.mc_seeds < 0:
            raise ConfigError("analysis.mc_seeds", "must be a nonnegative integer")
        if not a.s_alpha_scale > 0:
            raise ConfigError("analysis.s_alpha_scale", "must be positive")
        try:
            return build_objective(self.objective.family, part, self.objective.params, np.asarray(self.objective.x0))
        except (TypeError, ValueError) as e:
            raise ConfigError("objective.params", str(e)) from None


def _no_extra(d: dict, allowed: set, prefix: str):
    extra = sorted(set(d) - allowed)
    if extra:
        raise ConfigError(prefix + extra[0], "unknown field")


def _section(data: dict, name: str, allowed: set) -> dict:
    sec = data.get(name)
    if not isinstance(sec, dict):
        raise ConfigError(name, "missing or not a mapping")
    _no_extra(sec, allowed, name + ".")
    for k in sorted(allowed - {"params"}):
        if k not in sec:
            raise ConfigError(f"{name}.{k}", "missing")
    return sec


def _as_int(v, name: str) -> int:
    if isinstance(v, bool) or int(v) != v:
        raise ConfigError(name, f"expected an integer, got {v!r}")
    return int(v)


def _as_list(v, name: str) -> list:
    if not isinstance(v, list):
        raise ConfigError(name, "expected a list")
    return v


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError("<file>", str(e)) from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError("<file>", f"invalid YAML: {e}") from None
    return ExperimentConfig.from_dict(data)


def atomic_write(path: Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def resolve_output_dir(cfg: ExperimentConfig | None, flag: str | None) -> Path:
    if flag:
        return Path(flag)
    if cfg is not None and cfg.output_dir:
        return Path(cfg.output_dir)
    return Path(os.environ.get(ENV_OUTPUT_DIR) or DEFAULT_OUTPUT_DIR)


def apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if getattr(args, "alpha", None) is not None:
        cfg.solver.alpha = args.alpha
    if getattr(args, "iters", None) is not None:
        cfg.solver.iters = args.iters
    if getattr(args, "seeds", None) is not None:
        cfg.solver.seeds = list(args.seeds)
    if getattr(args, "theorem", None) is not None:
        cfg.analysis.theorem = args.theorem
    if getattr(args, "depth", None) is not None:
        cfg.analysis.depth = args.depth
    if getattr(args, "mc_seeds", None) is not None:
        cfg.analysis.mc_seeds = args.mc_seeds
    if getattr(args, "convention", None) is not None:
        cfg.analysis.convention = args.convention
    if getattr(args, "s_alpha_scale", None) is not None:
        cfg.analysis.s_alpha_scale = args.s_alpha_scale
    if getattr(args, "output_dir", None) is not None:
        cfg.output_dir = args.output_dir
    return cfg


def _profile_dict(model: ObjectiveModel) -> dict:
    p = model.profile
    return {
        "gamma": p.gamma,
        "nu": p.nu,
        "block_constants": list(p.block_constants),
        "block_moduli": None if p.block_moduli is None else list(p.block_moduli),
        "validity_radius": p.validity_radius,
    }


# ---------------------------------------------------------------------------
# subcommands


def cmd_run(cfg: ExperimentConfig, out_dir: Path, workers: int = 1) -> int:
    model = cfg.validate()
    x0 = np.asarray(cfg.objective.x0)
    s = cfg.solver

    def one(seed):
        return run(model, SolverConfig(s.alpha, s.iters, seed), x0)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        traces = list(pool.map(one, s.seeds))
    files = []
    for seed, tr in zip(s.seeds, traces):
        for ext, text in (("csv", tr.to_csv()), ("json", tr.to_json())):
            name = f"trace_seed{seed}.{ext}"
            atomic_write(out_dir / name, text)
            files.append(name)
    # the output location is left out so reruns elsewhere are byte-identical
    echo = cfg.to_dict()
    echo["output_dir"] = None
    manifest = {
        "command": "run",
        "model": model.name,
        "profile": _profile_dict(model),
        "config": echo,
        "files": files,
    }
    atomic_write(out_dir / "manifest.json", json.dumps(manifest, indent=1, allow_nan=False))
    print(f"wrote {len(traces)} trace(s) to {out_dir}")
    return EXIT_OK


def certification_source(model: ObjectiveModel, cfg: ExperimentConfig):
    x0 = np.asarray(cfg.objective.x0)
    a = cfg.analysis
    if a.mc_seeds > 0:
        sc = SolverConfig(cfg.solver.alpha, cfg.solver.iters, cfg.solver.seeds[0])
        return an.monte_carlo_expectation([run(model, sc, x0, j) for j in range(a.mc_seeds)])
    return an.expectation_tree(model, cfg.solver.alpha, x0, a.depth, budget=a.budget)


def cmd_certify(cfg: ExperimentConfig, out_dir: Path) -> int:
    model = cfg.validate()
    a = cfg.analysis
    if a.theorem is None:
        raise ConfigError("analysis.theorem", "certify needs a theorem")
    x0 = np.asarray(cfg.objective.x0)
    try:
        spec = an.make_bound_spec(model, x0, cfg.solver.alpha, a.theorem, a.convention, a.s_alpha_scale)
    except ValueError as e:
        raise ConfigError("analysis.theorem", str(e)) from None
    source = certification_source(model, cfg)
    report = an.certify_run(source, spec, model.optimum_value)
    other = "corrected" if a.convention == "as_printed" else "as_printed"
    alongside = {}
    if spec.theorem is not an.Theorem.NONCONVEX_T1:
        alt = an.make_bound_spec(model, x0, cfg.solver.alpha, a.theorem, other, a.s_alpha_scale)
        alongside[f"convention={other}"] = an.certify_run(source, alt, model.optimum_value).to_dict()
    if spec.theorem is an.Theorem.STRONGLY_CONVEX_SUBLINEAR_T3B:
        alongside["form=corrected"] = an.certify_run(source, spec, model.optimum_value, form="corrected").to_dict()
    report.alongside = alongside
    doc = report.to_dict()
    doc["config"] = cfg.to_dict()
    doc["config"]["output_dir"] = None
    atomic_write(out_dir / "certify_report.json", json.dumps(doc, indent=1, allow_nan=False))
    print(report.table())
    for name, rep in alongside.items():
        print(f"alongside {name}: {'PASS' if rep['passed'] else 'FAIL'} (min slack {rep['min_slack']:.4e})")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_norms(alpha: float, p: float, weights, trials: int, seed: int,
              block_sizes=None, beta: float = 0.0) -> int:
    if not p > 1:
        raise ConfigError("--p", f"p must exceed 1 for a conjugate exponent, got {p}")
    if trials < 1:
        raise ConfigError("--trials", "must be >= 1")
    if not weights or any(not w > 0 for w in weights):
        raise ConfigError("--weights", "need positive weights")
    if block_sizes is not None and (len(block_sizes) != len(weights) or min(block_sizes) < 1):
        raise ConfigError("--block-sizes", "need one positive size per weight")
    sw = property_sweep(alpha, p, weights, trials, seed, block_sizes, beta)
    ok = sw.worst_ratio <= 1 + 1e-12 and sw.extremal_residual < 1e-10 and sw.sandwich_ok is not False
    doc = asdict(sw)
    doc.update(alpha=alpha, p=p, beta=beta, weights=list(weights), passed=ok)
    print(json.dumps(doc, indent=1, allow_nan=False))
    return EXIT_OK if ok else EXIT_FAIL


def loglog_slope(ks, values) -> float:
    """Least-squares slope of ``log value`` against ``log k``."""
    ks = np.asarray(ks, dtype=float)
    v = np.asarray(values, dtype=float)
    return float(np.polyfit(np.log(ks), np.log(v), 1)[0])


RATE_EXPONENT = {
    an.Theorem.NONCONVEX_T1: lambda nu: -1.0 / nu,
    an.Theorem.CONVEX_T2: lambda nu: -1.0 / (nu - 1.0),
    an.Theorem.STRONGLY_CONVEX_SUBLINEAR_T3B: lambda nu: -2.0 / (nu - 2.0),
}


def rate_fit(trace_dir: Path, theorem: str, burn_in: int = 5, min_points: int = 10) -> dict:
    manifest_path = Path(trace_dir) / "manifest.json"
    try:
        manifest = json.loads(manifest_path.read_text())
    except (OSError, ValueError) as e:
        raise ConfigError("trace_dir", f"cannot read {manifest_path}: {e}") from None
    cfg = ExperimentConfig.from_dict(manifest["config"])
    model = cfg.validate()
    traces = [RunTrace.from_dict(json.loads((Path(trace_dir) / f).read_text()))
              for f in manifest["files"] if f.endswith(".json")]
    if not traces:
        raise ConfigError("trace_dir", "no traces listed in the manifest")
    try:
        th = an.Theorem(theorem)
    except ValueError:
        raise ConfigError("--theorem", f"unknown theorem {theorem!r}") from None
    mc = an.monte_carlo_expectation(traces)
    if th is an.Theorem.NONCONVEX_T1:
        observed = np.minimum.accumulate(mc.grad_norm)
    else:
        observed = mc.mean_f - model.optimum_value
    x0 = np.asarray(cfg.objective.x0)
    try:
        spec = an.make_bound_spec(model, x0, cfg.solver.alpha, th, cfg.analysis.convention)
    except ValueError as e:
        raise ConfigError("--theorem", str(e)) from None
    ks = np.arange(len(observed))
    bound = np.array([an.evaluate_bound(spec, int(k)) for k in ks])
    use = (ks >= max(1, burn_in)) & (observed > 0) & np.isfinite(observed) & (bound > 0)
    if use.sum() < min_points:
        raise ConfigError("trace_dir", f"insufficient data: {int(use.sum())} usable k values, need {min_points}")
    obs_slope = loglog_slope(ks[use], observed[use])
    bound_slope = loglog_slope(ks[use], bound[use])
    nu = model.profile.nu
    expo = RATE_EXPONENT.get(th)
    return {
        "theorem": th.value,
        "points": int(use.sum()),
        "burn_in": burn_in,
        "observed_slope": obs_slope,
        "bound_slope": bound_slope,
        "asymptotic_exponent": None if expo is None or nu == 2.0 and th is an.Theorem.STRONGLY_CONVEX_SUBLINEAR_T3B else expo(nu),
        "passed": bool(obs_slope <= bound_slope + 0.1),
    }


def cmd_ratefit(trace_dir: Path, theorem: str, burn_in: int, min_points: int = 10) -> int:
    doc = rate_fit(trace_dir, theorem, burn_in, min_points)
    atomic_write(Path(trace_dir) / "ratefit_report.json", json.dumps(doc, indent=1, allow_nan=False))
    print(json.dumps(doc, indent=1, allow_nan=False))
    return EXIT_OK if doc["passed"] else EXIT_FAIL


# ---------------------------------------------------------------------------


def _float_list(s: str) -> list[float]:
    return [float(v) for v in s.split(",") if v.strip()]


def _int_list(s: str) -> list[int]:
    return [int(v) for v in s.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rbcd", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def experiment(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config")
        p.add_argument("--alpha", type=float)
        p.add_argument("--iters", type=int)
        p.add_argument("--seeds", type=_int_list, help="comma-separated")
        p.add_argument("--theorem", choices=[t.value for t in an.Theorem])
        p.add_argument("--depth", type=int)
        p.add_argument("--mc-seeds", type=int, dest="mc_seeds")
        p.add_argument("--convention", choices=[c.value for c in an.ExponentConvention])
        p.add_argument("--s-alpha-scale", type=float, dest="s_alpha_scale")
        p.add_argument("--output-dir", dest="output_dir")
        return p

    experiment("run", "run the solver for every seed and write traces").add_argument("--workers", type=int, default=1)
    experiment("certify", "check a bound against exact or Monte Carlo expectations")

    p = sub.add_parser("norms", help="property sweep for the weighted norms")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--weights", type=_float_list, required=True, help="comma-separated block constants")
    p.add_argument("--block-sizes", type=_int_list, dest="block_sizes")
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("ratefit", help="log-log slope of observed and bound curves")
    p.add_argument("trace_dir")
    p.add_argument("--theorem", required=True)
    p.add_argument("--burn-in", type=int, default=5, dest="burn_in")
    p.add_argument("--min-points", type=int, default=10, dest="min_points")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    try:
        if args.command in ("run", "certify"):
            cfg = apply_overrides(load_config(args.config), args)
            out = resolve_output_dir(cfg, args.output_dir)
            if args.command == "run":
                return cmd_run(cfg, out, args.workers)
            return cmd_certify(cfg, out)
        if args.command == "norms":
            return cmd_norms(args.alpha, args.p, args.weights, args.trials, args.seed, args.block_sizes, args.beta)
        return cmd_ratefit(Path(args.trace_dir), args.theorem, args.burn_in, args.min_points)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as e:
        print(f"numerical failure at {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except an.BudgetExceeded as e:
        print(f"config error: analysis.depth: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, FloatingPointError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
