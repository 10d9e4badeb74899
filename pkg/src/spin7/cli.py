"""Command-line driver.

    spin7 verify [--json]
    spin7 flow run --config <path> --out <dir>
    spin7 flow resume --checkpoint <path> --out <dir>
    spin7 theta --checkpoint C1 [C2 ...] --t0 T [--center i,j,...] --out-csv F
    spin7 entropy --checkpoint C --sigma S [--t-samples N] [--x-stride K] --out-csv F
    spin7 rescale --checkpoint C --factor c --out-checkpoint F [--report-csv F]
    spin7 soliton-check --checkpoint C [--x-seed N] --out-csv F

Exit codes: 0 success, 1 verification failure, 2 config error, 3 runtime
abort.  SPIN7_THREADS caps parallelism; the engine itself is
single-threaded for bit-stable output, so any positive cap is honored by
pinning the linear-algebra backend to one thread.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone


def _pin_threads() -> None:
    # must run before numpy is imported anywhere in this process
    cap = os.environ.get("SPIN7_THREADS")
    if cap is not None:
        try:
            if int(cap) < 1:
                raise ValueError
        except ValueError:
            print(f"error: SPIN7_THREADS={cap!r} is not a positive integer", file=sys.stderr)
            raise SystemExit(2)
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(var, "1")


_pin_threads()

import numpy as np  # noqa: E402

from . import flow, storage, verify  # noqa: E402
from .flow import FlowAbort, FlowConfig  # noqa: E402
from .lattice import LatticeSpec  # noqa: E402


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config parsing (strict: unknown keys are errors)

_TOP_KEYS = {"lattice", "initial", "cfl", "t_end", "max_steps", "diag_cadence",
             "checkpoint_cadence", "div_tol", "blowup_factor", "integrator"}
_LATTICE_KEYS = {"active_axes", "points", "period", "stencil_order"}
_INITIAL_KEYS = {"family", "params", "seed"}


def _reject_unknown(d: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r} in {where}")


def parse_config(config_dict: dict) -> FlowConfig:
    if not isinstance(config_dict, dict):
        raise ConfigError("config root must be a JSON object")
    _reject_unknown(config_dict, _TOP_KEYS, "config")
    try:
        lat = config_dict["lattice"]
    except KeyError:
        raise ConfigError("missing required key 'lattice'")
    _reject_unknown(lat, _LATTICE_KEYS, "lattice")
    try:
        spec = LatticeSpec.from_dict(lat)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad lattice spec: {exc}")
    init = config_dict.get("initial", {})
    _reject_unknown(init, _INITIAL_KEYS, "initial")
    try:
        return FlowConfig(
            spec=spec,
            family=init.get("family", "rotation-field"),
            params=dict(init.get("params", {})),
            seed=int(init.get("seed", 0)),
            cfl=float(config_dict.get("cfl", 0.1)),
            t_end=(None if config_dict.get("t_end") is None
                   else float(config_dict["t_end"])),
            max_steps=(None if config_dict.get("max_steps") is None
                       else int(config_dict["max_steps"])),
            diag_cadence=int(config_dict.get("diag_cadence", 10)),
            checkpoint_cadence=int(config_dict.get("checkpoint_cadence", 0)),
            div_tol=float(config_dict.get("div_tol", 1e-8)),
            blowup_factor=float(config_dict.get("blowup_factor", 1e6)),
            integrator=config_dict.get("integrator", "lie-euler"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc))


def load_config(path: str) -> tuple[FlowConfig, dict]:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    return parse_config(raw), raw


# ---------------------------------------------------------------------------
# subcommands

def cmd_verify(args) -> int:
    table = None
    if args.corrupt_octonion_table:
        from .octonion import OCT_TABLE
        table = OCT_TABLE.copy()
        table[3, 5] = -table[3, 5]  # test fixture: break one product
    results = verify.run_suite(octonion_table=table)
    if args.json:
        print(json.dumps([r.as_dict() for r in results], indent=2))
    else:
        width = max(len(r.name) for r in results)
        for r in results:
            status = "ok  " if r.passed else "FAIL"
            print(f"{status}  {r.name:<{width}}  max err {r.max_error:.3e}  "
                  f"(tol {r.tolerance:.1e})")
    failing = [r for r in results if not r.passed]
    if failing:
        print(f"verification FAILED: {failing[0].name}", file=sys.stderr)
        return 1
    return 0


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _run_and_write(config: FlowConfig, raw_config: dict, out_dir: str,
                   state=None, prev_record=None) -> int:
    os.makedirs(out_dir, exist_ok=True)
    manifest_path = os.path.join(out_dir, "manifest.json")
    started = _now()
    storage.write_manifest(manifest_path, raw_config, config.seed, config.spec,
                           started, None, "running")
    writer = storage.SeriesWriter(os.path.join(out_dir, "series.csv"))

    def on_checkpoint(st, prev):
        path = os.path.join(out_dir, f"ckpt_{st.step:08d}.s7fl")
        storage.write_checkpoint(path, st, prev_record=prev, config_dict=raw_config)

    try:
        result = flow.run_flow(config, state=state, prev_record=prev_record,
                               on_record=writer.append, on_checkpoint=on_checkpoint)
    except FlowAbort as exc:
        writer.flush()
        storage.write_manifest(manifest_path, raw_config, config.seed, config.spec,
                               started, _now(), f"abort: {exc}")
        print(f"runtime abort: {exc}", file=sys.stderr)
        return 3
    writer.flush()
    storage.write_manifest(manifest_path, raw_config, config.seed, config.spec,
                           started, _now(), result.exit_reason)
    print(f"flow finished: {result.exit_reason} at t={result.state.t:.6g} "
          f"({result.state.step} steps, {len(result.records)} records)")
    return 0


def cmd_flow_run(args) -> int:
    config, raw = load_config(args.config)
    return _run_and_write(config, raw, args.out)


def cmd_flow_resume(args) -> int:
    loaded = storage.read_checkpoint(args.checkpoint)
    if loaded.config_dict is None:
        raise ConfigError("checkpoint carries no run config; cannot resume")
    config, raw = parse_config(loaded.config_dict), loaded.config_dict
    if config.spec != loaded.state.spec:
        raise ConfigError("checkpoint lattice disagrees with its embedded config")
    return _run_and_write(config, raw, args.out, state=loaded.state,
                          prev_record=loaded.prev_record)


def _load_states(paths):
    loaded = [storage.read_checkpoint(p) for p in paths]
    specs = {ld.state.spec for ld in loaded}
    if len(specs) > 1:
        raise ConfigError("checkpoints live on incompatible lattices")
    return [ld.state for ld in loaded]


def _parse_center(text: str | None, spec) -> tuple[int, ...]:
    if text is None:
        return (spec.points // 2,) * spec.n_axes
    parts = tuple(int(x) for x in text.split(","))
    if len(parts) != spec.n_axes:
        raise ConfigError(f"--center needs {spec.n_axes} comma-separated indices")
    return parts


def cmd_theta(args) -> int:
    states = _load_states(args.checkpoint)
    spec = states[0].spec
    center = _parse_center(args.center, spec)
    vals = flow.theta_functional(states, center, args.t0)
    rows = [(st.t, v) for st, v in zip(states, vals)]
    storage.write_series_csv(args.out_csv, rows, ("t", "theta"))
    print(f"theta: {len(rows)} rows -> {args.out_csv}")
    return 0


def cmd_entropy(args) -> int:
    (state,) = _load_states([args.checkpoint])
    val = flow.entropy(state, args.sigma, t_samples=args.t_samples, x_stride=args.x_stride)
    storage.write_series_csv(args.out_csv, [(args.sigma, val)], ("sigma", "entropy"))
    print(f"entropy({args.sigma:g}) = {val:.16e} -> {args.out_csv}")
    return 0


def cmd_rescale(args) -> int:
    loaded = storage.read_checkpoint(args.checkpoint)
    new_state, report = flow.parabolic_rescale(loaded.state, args.factor)
    storage.write_checkpoint(args.out_checkpoint, new_state,
                             prev_record=loaded.prev_record,
                             config_dict=loaded.config_dict)
    if args.report_csv:
        cols = tuple(sorted(report))
        storage.write_series_csv(args.report_csv, [tuple(report[c] for c in cols)], cols)
    worst = max(report.values())
    print(f"rescale c={args.factor:g}: worst identity error {worst:.3e} "
          f"-> {args.out_checkpoint}")
    return 0 if worst < 1e-12 else 3


def cmd_soliton_check(args) -> int:
    (state,) = _load_states([args.checkpoint])
    if args.x_seed is None:
        x_field = np.zeros(state.spec.grid_shape + (8,))
    else:
        rng = np.random.default_rng(args.x_seed)
        x_field = np.broadcast_to(rng.standard_normal(8),
                                  state.spec.grid_shape + (8,)).copy()
    residual = flow.soliton_residual(state, x_field)
    storage.write_series_csv(args.out_csv, [(state.t, residual)], ("t", "residual"))
    print(f"soliton residual at t={state.t:.6g}: {residual:.16e} -> {args.out_csv}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spin7",
                                description="Cayley-form flow laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the exact-identity suite")
    v.add_argument("--json", action="store_true")
    v.add_argument("--corrupt-octonion-table", action="store_true",
                   help=argparse.SUPPRESS)  # negative-control test fixture
    v.set_defaults(func=cmd_verify)

    fl = sub.add_parser("flow", help="run or resume the gradient flow")
    fsub = fl.add_subparsers(dest="flow_command", required=True)
    fr = fsub.add_parser("run")
    fr.add_argument("--config", required=True)
    fr.add_argument("--out", required=True)
    fr.set_defaults(func=cmd_flow_run)
    fs = fsub.add_parser("resume")
    fs.add_argument("--checkpoint", required=True)
    fs.add_argument("--out", required=True)
    fs.set_defaults(func=cmd_flow_resume)

    th = sub.add_parser("theta", help="localized torsion functional over checkpoints")
    th.add_argument("--checkpoint", nargs="+", required=True)
    th.add_argument("--t0", type=float, required=True)
    th.add_argument("--center", default=None, help="grid indices, comma-separated")
    th.add_argument("--out-csv", required=True)
    th.set_defaults(func=cmd_theta)

    en = sub.add_parser("entropy", help="scale-maximized torsion concentration")
    en.add_argument("--checkpoint", required=True)
    en.add_argument("--sigma", type=float, required=True)
    en.add_argument("--t-samples", type=int, default=16)
    en.add_argument("--x-stride", type=int, default=1)
    en.add_argument("--out-csv", required=True)
    en.set_defaults(func=cmd_entropy)

    rs = sub.add_parser("rescale", help="parabolic rescaling with exactness report")
    rs.add_argument("--checkpoint", required=True)
    rs.add_argument("--factor", type=float, required=True)
    rs.add_argument("--out-checkpoint", required=True)
    rs.add_argument("--report-csv", default=None)
    rs.set_defaults(func=cmd_rescale)

    so = sub.add_parser("soliton-check", help="stationary-soliton residual")
    so.add_argument("--checkpoint", required=True)
    so.add_argument("--x-seed", type=int, default=None,
                    help="seed for a constant random vector field (default: zero field)")
    so.add_argument("--out-csv", required=True)
    so.set_defaults(func=cmd_soliton_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except storage.CheckpointError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FlowAbort as exc:
        print(f"runtime abort: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"runtime abort (i/o): {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
