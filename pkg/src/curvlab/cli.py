"""Command-line runner: reproducible batch runs with machine-readable output.

Five subcommands tie the library together: ``check`` (cone membership of
a tensor file), ``verify`` (the claim registry), ``flow`` (one
trajectory with CSV trace and snapshots), ``sample`` (cone-conditioned
tensor files) and ``sweep`` (sample + flow + invariance table).

Exit codes are uniform: 0 success, 1 a violation or runtime failure,
2 invalid input.  Every run directory gets a manifest (command line,
master seed, versions, input hashes, per-task seeds, wall clock) that is
sufficient to reproduce the outputs bit-identically; worker count never
changes results because all parallelism draws from per-index derived
seeds and outputs are merged by index.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .cones import OptimizerConfig, cone_spec, defect
from .errors import BlowUpError, IntegrityError, InvalidInputError, SamplerError
from .flow import (
    StepControl,
    assemble_invariance,
    integrate,
    invariance_tasks,
    trajectory_task,
)
from .rng import task_seed
from .samplers import SamplerConfig, sample_in_cone
from .tensor_io import load_tensor, save_tensor
from .verifiers import claim_ids, registry_csv, resolve_claim, verify

JOBS_ENV = "CURVLAB_JOBS"

_KNOWN_FUNCTIONALS = ("scal", "norm", "ric_min", "ric_min2", "ric_min3", "nob_shift")


# ---------------------------------------------------------------------------
# manifests and small helpers


@dataclass
class RunManifest:
    """Everything needed to re-execute a run bit-identically."""

    command: list
    master_seed: int
    versions: dict
    input_hashes: dict
    task_seeds: dict
    outputs: list
    wall_clock: float
    notes: dict = field(default_factory=dict)


def _versions() -> dict:
    return {
        "curvlab": __version__,
        "numpy": np.__version__,
        "python": sys.version.split()[0],
    }


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _write_manifest(outdir: Path, manifest: RunManifest) -> Path:
    path = outdir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(asdict(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _jobs_default() -> int:
    try:
        return max(1, int(os.environ.get(JOBS_ENV, "1")))
    except ValueError:
        return 1


def _run_parallel(fn, items, jobs: int) -> list:
    """Map fn over items, in order, optionally on a process pool."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _functional_ids(spec: str) -> tuple:
    """CLI track tokens -> functional ids (cone tokens become defects)."""
    ids = []
    for token in spec.split(","):
        token = token.strip()
        if not token:
            continue
        name = token.replace("-", "_")
        if name in _KNOWN_FUNCTIONALS:
            ids.append(name)
        else:
            ids.append(f"defect:{token}")
    return tuple(ids)


def _resolve_kind(cone: str, dim: int, kind_flag: str | None) -> str:
    spec = cone_spec(cone, dim)
    if spec.kind != "both":
        if kind_flag is not None and kind_flag != spec.kind:
            raise InvalidInputError(
                f"cone {cone!r} applies to {spec.kind} tensors, not {kind_flag}"
            )
        return spec.kind
    if kind_flag is None:
        raise InvalidInputError(
            f"cone {cone!r} applies to both tensor kinds; pass --kind"
        )
    return kind_flag


def _step_control(args) -> StepControl:
    return StepControl(
        dt_init=args.dt_init,
        rtol=args.rtol,
        atol=args.atol,
        max_steps=args.max_steps,
        stop_multiple=args.stop_multiple,
        t_end=args.t_end,
        dt_max=args.dt_max,
    )


# ---------------------------------------------------------------------------
# subcommands


def cmd_check(args) -> int:
    T = load_tensor(args.input, project=args.project)
    spec = cone_spec(args.cone, T.dim)
    tensor_kind = "kahler" if np.iscomplexobj(T.components) else "riemann"
    if spec.kind != "both" and spec.kind != tensor_kind:
        raise InvalidInputError(
            f"cone {args.cone!r} applies to {spec.kind} tensors; "
            f"{args.input} holds a {tensor_kind} tensor"
        )
    cfg = OptimizerConfig(max_restarts=args.restarts, seed=args.seed)
    rep = defect(T, args.cone, cfg)
    scale = max(T.norm, 1.0)
    member = bool(rep.defect >= -args.tol * scale)
    payload = {
        "cone": args.cone,
        "dim": T.dim,
        "kind": tensor_kind,
        "defect": rep.defect,
        "scale": scale,
        "tol": args.tol,
        "member": member,
        "report": rep.to_dict(),
    }
    text = json.dumps(payload, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    print(
        f"check: cone={args.cone} defect={rep.defect:.6e} "
        f"member={'yes' if member else 'NO'}",
        file=sys.stderr,
    )
    return 0 if member else 1


def _verify_task(params):
    tag, dim, samples, restarts, seed = params
    return verify(tag, dim, samples=samples, search_restarts=restarts, seed=seed)


def cmd_verify(args) -> int:
    if args.claim.lower() == "all":
        if args.dim < 5:
            raise InvalidInputError("the full registry needs dim >= 5")
        tags = claim_ids()
        tasks = [
            (tag, args.dim, args.samples, args.restarts, task_seed(args.seed, k))
            for k, tag in enumerate(tags)
        ]
        reports = _run_parallel(_verify_task, tasks, args.jobs)
    else:
        tag = resolve_claim(args.claim)
        reports = [_verify_task((tag, args.dim, args.samples, args.restarts, args.seed))]
    csv_text = registry_csv(reports)
    if args.out:
        out = Path(args.out)
        out.write_text(csv_text)
        if not args.no_figures:
            from .figures import render_verifier_table

            render_verifier_table(reports, out.with_suffix(".png"))
    sys.stdout.write(csv_text)
    return 0 if all(r.passed for r in reports) else 1


def cmd_flow(args) -> int:
    started = time.time()
    T0 = load_tensor(args.input, project=args.project)
    tracked = _functional_ids(args.track)
    ctrl = _step_control(args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    blowup = False
    try:
        trace = integrate(T0, ctrl, tracked=tracked, seed=args.seed)
    except BlowUpError as err:
        # the guarded stop: keep the partial trace, report success
        trace = err.trace
        blowup = True

    outputs = []
    csv_path = outdir / "trace.csv"
    csv_path.write_text(trace.to_csv())
    outputs.append(csv_path.name)
    snapshots = []
    for j, (pos, state) in enumerate(zip(trace.state_index, trace.states)):
        name = f"state_{j:04d}.json"
        save_tensor(outdir / name, state)
        snapshots.append({"file": name, "t": float(trace.times[pos])})
        outputs.append(name)
    if not args.no_figures:
        from .figures import render_flow_trace

        fig_path = outdir / "trace.png"
        render_flow_trace(trace, fig_path)
        outputs.append(fig_path.name)
    manifest = RunManifest(
        command=list(sys.argv),
        master_seed=args.seed,
        versions=_versions(),
        input_hashes={str(args.input): _sha256(args.input)},
        task_seeds={"integrate": args.seed},
        outputs=outputs,
        wall_clock=time.time() - started,
        notes={
            "stopped": trace.stopped,
            "blowup": blowup,
            "accepted": trace.meta["accepted"],
            "rejected": trace.meta["rejected"],
            "snapshots": snapshots,
            "ctrl": asdict(ctrl),
            "tracked": list(tracked),
        },
    )
    _write_manifest(outdir, manifest)
    print(
        f"flow: stopped={trace.stopped} steps={trace.meta['accepted']} "
        f"t_final={trace.final_time:.6e} scal={trace.functionals['scal'][-1]:.6e}",
        file=sys.stderr,
    )
    return 0


def _sample_task(params):
    kind, cfg, index = params
    try:
        T, rep = sample_in_cone(kind, cfg, index)
        return ("ok", T, float(rep.defect))
    except SamplerError as err:
        return ("error", str(err), None)


def cmd_sample(args) -> int:
    started = time.time()
    kind = _resolve_kind(args.cone, args.dim, args.kind)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    cfg = SamplerConfig(dim=args.dim, seed=args.seed, cone=args.cone, margin=args.margin)
    tasks = [(kind, cfg, i) for i in range(args.count)]
    results = _run_parallel(_sample_task, tasks, args.jobs)

    outputs = []
    rows = ["index,file,defect"]
    failures = []
    for i, res in enumerate(results):
        if res[0] == "ok":
            name = f"sample_{i:04d}.json"
            save_tensor(outdir / name, res[1])
            rows.append(f"{i},{name},{res[2]:.16e}")
            outputs.append(name)
        else:
            failures.append((i, res[1]))
    csv_path = outdir / "samples.csv"
    csv_path.write_text("\n".join(rows) + "\n")
    outputs.append(csv_path.name)
    manifest = RunManifest(
        command=list(sys.argv),
        master_seed=args.seed,
        versions=_versions(),
        input_hashes={},
        task_seeds={str(i): args.seed for i in range(args.count)},
        outputs=outputs,
        wall_clock=time.time() - started,
        notes={
            "cone": args.cone,
            "dim": args.dim,
            "kind": kind,
            "margin": args.margin,
            "failures": [{"index": i, "error": msg} for i, msg in failures],
        },
    )
    _write_manifest(outdir, manifest)
    for i, msg in failures:
        print(f"sample {i} failed: {msg}", file=sys.stderr)
    print(
        f"sample: wrote {args.count - len(failures)}/{args.count} tensors to {outdir}",
        file=sys.stderr,
    )
    return 1 if failures else 0


def _sweep_task(params):
    try:
        return ("ok", trajectory_task(params))
    except SamplerError as err:
        return ("error", str(err))


def cmd_sweep(args) -> int:
    started = time.time()
    cones = []
    for spec in args.cone or []:
        cones.extend(c.strip() for c in spec.split(",") if c.strip())
    if not cones:
        raise InvalidInputError("sweep needs at least one --cone")
    ctrl = _step_control(args)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    inputs = []
    input_hashes = {}
    for path in args.inputs or []:
        inputs.append(load_tensor(path, project=args.project))
        input_hashes[str(path)] = _sha256(path)

    reports = []
    failures = []
    seeds = {}
    for ci, cone in enumerate(cones):
        cone_seed = task_seed(args.seed, ci)
        seeds[cone] = cone_seed
        if inputs:
            results = []
            for ii, T0 in enumerate(inputs):
                fid = f"defect:{cone}"
                try:
                    trace = integrate(
                        T0, ctrl, tracked=(fid,), seed=task_seed(cone_seed, 8, ii)
                    )
                    blew = False
                except BlowUpError as err:
                    trace = err.trace
                    blew = True
                s = np.maximum(trace.functionals["norm"], 1.0)
                results.append(
                    {
                        "excursion": float(np.min(trace.functionals[fid] / s)),
                        "margin": float("nan"),
                        "steps": int(trace.meta["accepted"]),
                        "blowup": blew,
                        "filtered": 0,
                        "trace": None,
                    }
                )
            reports.append(assemble_invariance(cone, inputs[0].dim, results))
        else:
            tasks = invariance_tasks(
                cone,
                args.dim,
                args.count,
                ctrl,
                seed=cone_seed,
                sample_cone=args.sample_cone,
                margin=args.margin,
            )
            outcomes = _run_parallel(_sweep_task, tasks, args.jobs)
            good = [o[1] for o in outcomes if o[0] == "ok"]
            failures.extend(o[1] for o in outcomes if o[0] == "error")
            if good:
                reports.append(assemble_invariance(cone, args.dim, good))

    outputs = []
    rows = ["cone,dim,count,worst_excursion,blowups,filtered"]
    for rep in reports:
        rows.append(
            f"{rep.cone},{rep.dim},{rep.count},{rep.worst_excursion:.16e},"
            f"{rep.blowups},{rep.filtered}"
        )
    csv_path = outdir / "sweep.csv"
    csv_path.write_text("\n".join(rows) + "\n")
    outputs.append(csv_path.name)
    if reports and not args.no_figures:
        from .figures import render_invariance

        fig_path = outdir / "sweep.png"
        render_invariance(reports, fig_path)
        outputs.append(fig_path.name)
    manifest = RunManifest(
        command=list(sys.argv),
        master_seed=args.seed,
        versions=_versions(),
        input_hashes=input_hashes,
        task_seeds=seeds,
        outputs=outputs,
        wall_clock=time.time() - started,
        notes={
            "cones": cones,
            "ctrl": asdict(ctrl),
            "failures": failures,
            "from_inputs": bool(inputs),
        },
    )
    _write_manifest(outdir, manifest)
    for rep in reports:
        print(
            f"sweep: cone={rep.cone} worst_excursion={rep.worst_excursion:.6e} "
            f"blowups={rep.blowups}",
            file=sys.stderr,
        )
    for msg in failures:
        print(f"sweep failure: {msg}", file=sys.stderr)
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# parser plumbing


def _add_step_flags(p: argparse.ArgumentParser, max_steps: int, stop_multiple: float):
    p.add_argument("--dt-init", type=float, default=1e-3)
    p.add_argument("--dt-max", type=float, default=None)
    p.add_argument("--rtol", type=float, default=1e-8)
    p.add_argument("--atol", type=float, default=1e-10)
    p.add_argument("--max-steps", type=int, default=max_steps)
    p.add_argument("--stop-multiple", type=float, default=stop_multiple)
    p.add_argument("--t-end", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curvlab",
        description="curvature-cone membership, claim verification and reaction flows",
    )
    parser.add_argument("--config", default=None, help="JSON file of flag defaults; flags win")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("check", help="cone membership of one tensor file")
    p.add_argument("--cone", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--restarts", type=int, default=64)
    p.add_argument("--tol", type=float, default=1e-6,
                   help="membership slack relative to max(norm, 1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write the report JSON here")
    p.add_argument("--project", action="store_true",
                   help="project the input onto the valid symmetry class")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("verify", help="run claim verifiers")
    p.add_argument("--claim", required=True, help="claim tag, alias, or 'all'")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--samples", type=int, default=40)
    p.add_argument("--restarts", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=_jobs_default())
    p.add_argument("--out", default=None, help="write the CSV summary here")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("flow", help="integrate one tensor file")
    p.add_argument("--input", required=True)
    p.add_argument("--track", default="",
                   help="comma list: functionals or cone ids (cones track their defect)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="flow_run")
    p.add_argument("--project", action="store_true")
    p.add_argument("--no-figures", action="store_true")
    _add_step_flags(p, max_steps=4000, stop_multiple=10.0)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("sample", help="cone-conditioned tensor files")
    p.add_argument("--cone", required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--margin", type=float, default=0.0)
    p.add_argument("--kind", choices=("riemann", "kahler"), default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=_jobs_default())
    p.add_argument("--out", default="samples")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("sweep", help="sample + flow + invariance table")
    p.add_argument("--cone", action="append",
                   help="repeatable; comma lists are split")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--margin", type=float, default=None,
                   help="fixed conditioning margin; default mixes boundary and interior")
    p.add_argument("--sample-cone", default=None,
                   help="draw members here but track the --cone defect")
    p.add_argument("--inputs", nargs="*", default=None,
                   help="flow these tensor files instead of sampling")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=_jobs_default())
    p.add_argument("--out", default="sweep_run")
    p.add_argument("--project", action="store_true")
    p.add_argument("--no-figures", action="store_true")
    _add_step_flags(p, max_steps=600, stop_multiple=2.0)
    p.set_defaults(func=cmd_sweep)

    parser.subcommands = {
        name: action.choices[name]
        for action in parser._actions
        if isinstance(action, argparse._SubParsersAction)
        for name in action.choices
    }
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv) -> None:
    """Config-file values become defaults everywhere; explicit flags win."""
    path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
    if path is None:
        return
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise InvalidInputError(f"bad config file {path}: {err}") from None
    if not isinstance(cfg, dict):
        raise InvalidInputError(f"config file {path} must hold a JSON object")
    flat = {str(k).replace("-", "_"): v for k, v in cfg.items()}
    parser.set_defaults(**flat)
    for p in parser.subcommands.values():
        p.set_defaults(**flat)


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        if getattr(args, "func", None) is None:
            parser.print_help()
            return 2
        return int(args.func(args))
    except InvalidInputError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (IntegrityError, SamplerError) as err:
        print(f"failure: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
