"""Command-line front end: instance generation, solver runs, audits, metrics.

Subcommands write plain files (binary arrays, CSV traces, JSON reports)
into an output directory; exit codes are 0 on success, 1 on audit
failure, 2 on solver numeric failure and 3 on usage or parse errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import fileio
from .core import TwoBlockPoint
from .diagnostics import audit_report, metrics
from .extractor import FeatureExtractor, IdentityExtractor
from .objectives import JointRecovery, QuadraticToy
from .operators import Instance, InstanceSpec, KSpaceData, MaskedDft, generate_instance
from .solver import (
    EXIT_LINE_SEARCH,
    EXIT_NUMERIC,
    LpamConfig,
    lpam_run,
    read_trace_csv,
    write_trace_csv,
)


class ConfigError(ValueError):
    pass


_INSTANCE_KEYS = {"height", "width", "mask_type", "ratio", "noise_std", "phantom", "seed"}
_OBJECTIVE_KEYS = {"kind", "weights_file", "act_delta", "lam"}
_SOLVER_KEYS = {f.name for f in dataclasses.fields(LpamConfig)}
_AUDIT_KEYS = {"decrease", "segments", "lmax"}
_TOP_KEYS = {"instance", "objective", "solver", "audits"}


@dataclasses.dataclass
class RunConfig:
    """Parsed and validated configuration for one CLI invocation."""

    instance: InstanceSpec
    seed: int
    objective_kind: str  # "quadratic" | "identity" | "extractor"
    weights_file: str | None
    act_delta: float
    lam: float
    solver: LpamConfig
    audits: dict

    @staticmethod
    def from_dict(raw: dict) -> "RunConfig":
        _reject_unknown(raw, _TOP_KEYS, "top level")
        inst = dict(raw.get("instance", {}))
        _reject_unknown(inst, _INSTANCE_KEYS, "instance")
        seed = int(inst.pop("seed", 0))
        spec = InstanceSpec(
            height=int(inst.get("height", 32)),
            width=int(inst.get("width", 32)),
            mask_type=str(inst.get("mask_type", "radial")),
            ratio=float(inst.get("ratio", 0.3)),
            noise_std=float(inst.get("noise_std", 0.0)),
            phantom=str(inst.get("phantom", "shared")),
        )

        objc = dict(raw.get("objective", {}))
        _reject_unknown(objc, _OBJECTIVE_KEYS, "objective")
        kind = str(objc.get("kind", "identity"))
        if kind not in ("quadratic", "identity", "extractor"):
            raise ConfigError(f"unknown objective kind {kind!r}")
        lam = float(objc.get("lam", 0.0093))
        if lam < 0:
            raise ConfigError("objective.lam must be nonnegative")
        act_delta = float(objc.get("act_delta", 0.01))
        weights_file = objc.get("weights_file")
        if kind == "extractor" and not weights_file:
            raise ConfigError("objective.weights_file required for kind 'extractor'")

        sol = dict(raw.get("solver", {}))
        _reject_unknown(sol, _SOLVER_KEYS, "solver")
        for key in ("step_alpha", "step_tau", "step_beta", "step_gamma"):
            if key in sol:
                sol[key] = tuple(float(v) for v in sol[key])
        solver = LpamConfig(**sol)
        solver.validate()

        audits = dict(raw.get("audits", {}))
        _reject_unknown(audits, _AUDIT_KEYS, "audits")
        audits = {k: bool(audits.get(k, True)) for k in _AUDIT_KEYS}

        spec.validate()
        return RunConfig(
            instance=spec,
            seed=seed,
            objective_kind=kind,
            weights_file=weights_file,
            act_delta=act_delta,
            lam=lam,
            solver=solver,
            audits=audits,
        )


def _reject_unknown(d: dict, allowed: set, where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys in {where}: {sorted(unknown)}")


def load_config(path: str, overrides: list[str], mode: str | None, seed: int | None) -> RunConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    for ov in overrides:
        if "=" not in ov:
            raise ConfigError(f"override must look like key=value: {ov!r}")
        key, value = ov.split("=", 1)
        _apply_override(raw, key, value)
    if mode is not None:
        raw.setdefault("solver", {})["mode"] = {"lpam": "lpam", "bcd": "bcd_only"}[mode]
    if seed is not None:
        raw.setdefault("instance", {})["seed"] = seed
    return RunConfig.from_dict(raw)


def _apply_override(raw: dict, dotted: str, value: str) -> None:
    try:
        parsed = json.loads(value)
    except json.JSONDecodeError:
        parsed = value
    parts = dotted.split(".")
    node = raw
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override path {dotted!r} crosses a non-object")
    node[parts[-1]] = parsed


def build_objective(cfg: RunConfig, instance: Instance | None):
    if cfg.objective_kind == "quadratic":
        return QuadraticToy()
    assert instance is not None
    h, w = cfg.instance.height, cfg.instance.width
    if cfg.objective_kind == "identity":
        extractor = IdentityExtractor(h, w)
    else:
        weights = fileio.read_weights(cfg.weights_file)
        extractor = FeatureExtractor(h, w, weights, cfg.act_delta)
    return JointRecovery(instance.dft, instance.kspace, extractor, cfg.lam)


def _load_instance(cfg: RunConfig, out: Path) -> Instance:
    truth1 = fileio.read_array(out / "truth1.arr")
    truth2 = fileio.read_array(out / "truth2.arr")
    mask = fileio.read_array(out / "mask.arr")
    f1 = fileio.read_array(out / "kspace1.arr")
    f2 = fileio.read_array(out / "kspace2.arr")
    return Instance(truth1, truth2, MaskedDft(mask), KSpaceData(f1, f2), cfg.seed)


def _dump_json(path: Path, obj: dict) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_generate(cfg: RunConfig, out: Path) -> int:
    inst = generate_instance(cfg.instance, cfg.seed)
    out.mkdir(parents=True, exist_ok=True)
    try:
        fileio.write_array(out / "truth1.arr", inst.truth1)
        fileio.write_array(out / "truth2.arr", inst.truth2)
        fileio.write_array(out / "mask.arr", inst.dft.mask)
        fileio.write_array(out / "kspace1.arr", inst.kspace.f1)
        fileio.write_array(out / "kspace2.arr", inst.kspace.f2)
    except OSError as exc:
        print(f"error: cannot write to {out}: {exc}", file=sys.stderr)
        return 3
    manifest = {
        "seed": cfg.seed,
        "height": cfg.instance.height,
        "width": cfg.instance.width,
        "mask_type": cfg.instance.mask_type,
        "requested_ratio": cfg.instance.ratio,
        "achieved_ratio": inst.achieved_ratio,
        "noise_std": cfg.instance.noise_std,
    }
    _dump_json(out / "manifest.json", manifest)
    print(json.dumps(manifest, sort_keys=True))
    return 0


def cmd_solve(cfg: RunConfig, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    h, w = cfg.instance.height, cfg.instance.width
    if cfg.objective_kind == "quadratic":
        obj = QuadraticToy()
        n = h * w
        X0 = TwoBlockPoint(np.ones(n), np.ones(n))
        instance = None
    else:
        instance = _load_instance(cfg, out)
        obj = build_objective(cfg, instance)
        X0 = obj.zero_filled()

    runner = lpam_run  # mode is carried inside the config
    state, reason = runner(obj, X0, cfg.solver)
    write_trace_csv(state.trace, out / "trace.csv")
    fileio.write_array(out / "recon1.arr", state.X.x1.reshape(h, w))
    fileio.write_array(out / "recon2.arr", state.X.x2.reshape(h, w))

    result: dict = {"exit_reason": reason, "iterations": state.k}
    if instance is not None:
        zf = obj.zero_filled()
        result["recon"] = {
            "channel1": metrics(state.X.x1.reshape(h, w), instance.truth1).as_dict(),
            "channel2": metrics(state.X.x2.reshape(h, w), instance.truth2).as_dict(),
        }
        result["zero_filled"] = {
            "channel1": metrics(zf.x1.reshape(h, w), instance.truth1).as_dict(),
            "channel2": metrics(zf.x2.reshape(h, w), instance.truth2).as_dict(),
        }
    _dump_json(out / "metrics.json", result)
    print(json.dumps({"exit_reason": reason, "iterations": state.k}, sort_keys=True))
    if reason in (EXIT_NUMERIC, EXIT_LINE_SEARCH):
        return 2
    return 0


def cmd_audit(cfg: RunConfig, out: Path, trace_path: Path | None) -> int:
    path = trace_path or (out / "trace.csv")
    trace = read_trace_csv(path)
    if cfg.objective_kind == "quadratic":
        obj = build_objective(cfg, None)
    else:
        obj = build_objective(cfg, _load_instance(cfg, out))
    report = audit_report(
        trace,
        cfg.solver,
        obj.lipschitz_estimate,
        check_decrease=cfg.audits["decrease"],
        check_segments=cfg.audits["segments"],
        check_lmax=cfg.audits["lmax"],
    )
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(out / "report.json", report)
    print(json.dumps({"passed": report["passed"]}, sort_keys=True))
    return 0 if report["passed"] else 1


def cmd_metrics(x_path: str, y_path: str, squared_peak: bool) -> int:
    x = fileio.read_array(x_path)
    y = fileio.read_array(y_path)
    rep = metrics(np.real(x), np.real(y), squared_peak=squared_peak)
    print(json.dumps(rep.as_dict(), sort_keys=True))
    return 0


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lpam", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="JSON run configuration")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--mode", choices=("lpam", "bcd"), default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument(
            "--override",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="dotted-path config override, e.g. solver.max_iter=50",
        )

    common(sub.add_parser("generate", help="write a synthetic instance to disk"))
    common(sub.add_parser("solve", help="run the solver on a generated instance"))
    sp = sub.add_parser("audit", help="run convergence audits on a trace")
    common(sp)
    sp.add_argument("--trace", default=None, help="trace CSV (default: OUT/trace.csv)")
    sp = sub.add_parser("metrics", help="image quality metrics between two arrays")
    sp.add_argument("recon", help="reconstruction array file")
    sp.add_argument("truth", help="ground-truth array file")
    sp.add_argument("--squared-peak", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "metrics":
            return cmd_metrics(args.recon, args.truth, args.squared_peak)
        cfg = load_config(args.config, args.override, args.mode, args.seed)
        out = Path(args.out)
        if args.command == "generate":
            return cmd_generate(cfg, out)
        if args.command == "solve":
            return cmd_solve(cfg, out)
        if args.command == "audit":
            trace = Path(args.trace) if args.trace else None
            return cmd_audit(cfg, out, trace)
        raise AssertionError(args.command)
    except (ConfigError, fileio.FormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
