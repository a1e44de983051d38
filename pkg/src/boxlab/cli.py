"""Command-line front end: ``lab <command> [options]``.

Exit codes: 0 success, 2 validation error, 3 budget or precision error.
stdout always carries exactly one JSON line.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import signal
import sys
import threading
import time
from typing import Any, Callable

import numpy as np

from . import config as cfgmod
from .corners import PlaneSet, khintchine_report, load_plane_set, popular_scan
from .errors import BoxLabError, BudgetError, NegativityError, PrecisionError, ValidationError
from .finitary import (
    DirectionSet,
    GridFunction,
    RegularityCapError,
    box_inverse_witness,
    grid_box_norm,
    grid_box_norm_mc,
    regularity_decompose,
    u2_inverse_witness,
)
from .seminorms import (
    box_seminorm,
    box_seminorm_power,
    cube_duality,
    dual_function,
    joint_invariant_expectation,
    magic_extension,
    magic_property_check,
    parse_spec,
)
from .sequences import (
    NoObstructionUpTo,
    NotIntersective,
    Satisfied,
    Violated,
    classify_log_away,
    find_nk,
    is_intersective_bounded,
    parse_hardy,
    parse_polynomial,
    parse_sequence,
    sequence_eval,
    sequence_residues,
)
from .systems import map_order
from .verify import (
    compare_averages,
    compare_factorial,
    linear_control_check,
    nil_orbit_average,
    parse_trig_poly,
    weyl_sum,
)

EXIT_OK, EXIT_VALIDATION, EXIT_BUDGET = 0, 2, 3
_VOLATILE = {"workers", "out_dir", "budget_ms"}


class _UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


# --------------------------------------------------------------------------
# helpers


class Context:
    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.cfg = cfgmod.parse_config(args.config) if getattr(args, "config", None) else cfgmod.ExperimentConfig()
        self.tables: dict[str, tuple[list[str], list[list]]] = {}
        self.timings: dict[str, float] = {}

    def opt(self, name: str, key: str | None = None, required: bool = True):
        val = getattr(self.args, name, None)
        if val is not None:
            return val
        key = key or name
        if self.cfg.has(key):
            return self.cfg.raw(key)
        if required:
            raise ValidationError(f"missing --{name.replace('_', '-')} (or '{key}' in the config)")
        return None

    def system(self):
        if not self.cfg.has("system"):
            raise ValidationError("this command needs --config with a [system] section")
        return cfgmod.build_system(self.cfg)

    def observable(self, sys_, spec_or_key: str, name: str):
        text = self.cfg.raw(spec_or_key) if self.cfg.has(spec_or_key) else spec_or_key
        try:
            return cfgmod.parse_observable(sys_, text, self.args.seed, name)
        except ValidationError as exc:
            where = self.cfg.where(spec_or_key) if self.cfg.has(spec_or_key) else name
            raise ValidationError(f"{where}: {exc}") from exc

    def table(self, name: str, header: list[str], rows: list[list]):
        self.tables[name] = (header, rows)

    def timed(self, label: str, fn: Callable, *a, **kw):
        t0 = time.perf_counter()
        out = fn(*a, **kw)
        self.timings[label] = round((time.perf_counter() - t0) * 1000, 3)
        return out


def _jsonable(x: Any):
    if isinstance(x, complex) or isinstance(x, np.complexfloating):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def _ints(text: str) -> list[int]:
    return cfgmod.parse_int_list(str(text))


def _Ns(text) -> list[int]:
    vals = _ints(text)
    if not vals or min(vals) < 1:
        raise ValidationError("N ladder must be a nonempty list of positive integers")
    return vals


def _load_grid(path: str) -> GridFunction:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read grid file {path!r}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"grid file {path!r} is not valid JSON: {exc}") from exc
    return GridFunction.from_json(data)


# --------------------------------------------------------------------------
# command handlers


def cmd_seminorm(ctx: Context) -> dict:
    sys_ = ctx.system()
    f = ctx.observable(sys_, ctx.opt("f", "f"), "f")
    spec = parse_spec(ctx.opt("words"), sys_.ell)
    value = ctx.timed("seminorm", box_seminorm, sys_, f, spec, workers=ctx.args.workers)
    return {"value": value, "s": spec.s, "periods": [map_order(sys_, w) for w in spec.words]}


def cmd_dual(ctx: Context) -> dict:
    sys_ = ctx.system()
    f = ctx.observable(sys_, ctx.opt("f", "f"), "f")
    spec = parse_spec(ctx.opt("words"), sys_.ell)
    D = ctx.timed("dual", dual_function, sys_, f, spec, workers=ctx.args.workers)
    pairing = complex(np.dot(sys_.weights, f.values * D.values))
    power = box_seminorm_power(sys_, f, spec, workers=ctx.args.workers)
    ctx.table("dual", ["point", "re", "im"], [[i, repr(float(z.real)), repr(float(z.imag))] for i, z in enumerate(D.values)])
    return {"pairing": pairing, "seminorm_power": power.real, "abs_diff": abs(pairing - power.real), "s": spec.s}


def cmd_cube(ctx: Context) -> dict:
    sys_ = ctx.system()
    spec = parse_spec(ctx.opt("words"), sys_.ell)
    from .seminorms import cubic_measure

    cube = ctx.timed("cube", cubic_measure, sys_, spec)
    out = {"s": spec.s, "support_size": cube.size, "marginal_error": float(np.max(np.abs(cube.projection(0) - sys_.weights)))}
    if ctx.args.check_duality:
        f = ctx.observable(sys_, ctx.opt("f", "f"), "f")
        lhs = cube_duality(cube, f)
        power = box_seminorm_power(sys_, f, spec).real
        out.update({"duality": lhs, "seminorm_power": power, "abs_diff": abs(lhs - power)})
    return out


def cmd_magic(ctx: Context) -> dict:
    sys_ = ctx.system()
    spec = parse_spec(ctx.opt("words"), sys_.ell)
    cube = ctx.timed("extension", magic_extension, sys_, spec)
    ext = cube.as_system()
    out = {
        "s": spec.s,
        "support_size": cube.size,
        "marginal_error": float(np.max(np.abs(cube.projection(0) - sys_.weights))),
        "maps_preserve_measure": True,
    }
    if ctx.args.check_property:
        rng = np.random.default_rng(cfgmod.derived_seed(ctx.args.seed, "magic"))
        consistent = 0
        rows = []
        for t in range(ctx.args.trials):
            g = rng.normal(size=cube.size) + 1j * rng.normal(size=cube.size)
            if t % 2:
                g = g - joint_invariant_expectation(cube, g, range(spec.s))
            res = magic_property_check(cube, g)
            consistent += int(res["consistent"])
            rows.append([t, repr(res["seminorm"]), repr(res["conditional_norm"]), int(res["consistent"])])
        ctx.table("magic", ["trial", "seminorm", "conditional_norm", "consistent"], rows)
        out.update({"trials": ctx.args.trials, "consistent": consistent})
    del ext
    return out


def cmd_grid_norm(ctx: Context) -> dict:
    f = _load_grid(ctx.args.input)
    dirs = DirectionSet.parse(ctx.opt("dirs"), f.ell)
    if ctx.args.mc:
        est = ctx.timed("grid_norm_mc", grid_box_norm_mc, f, dirs, ctx.args.mc, ctx.args.seed, ctx.args.workers)
        return {"mode": "monte_carlo", "value": est.value, "power": est.power, "stderr": est.stderr, "samples": est.samples}
    value = ctx.timed("grid_norm", grid_box_norm, f, dirs, workers=ctx.args.workers)
    return {"mode": "exact", "value": value, "power": value ** (2**dirs.s), "s": dirs.s}


def cmd_inverse_witness(ctx: Context) -> dict:
    f = _load_grid(ctx.args.input)
    scale = (2 * f.N + 1) ** f.ell
    if ctx.args.kind == "u2":
        w = ctx.timed("u2_witness", u2_inverse_witness, f)
        ctx.table("witness", ["y", "phi", "psi"], [[y - f.N, repr(float(p)), repr(float(q))] for y, (p, q) in enumerate(zip(w.phi, w.psi))])
        return {"kind": "u2", "correlation": w.correlation, "normalised": w.correlation / scale, "delta": w.delta, "constant": w.constant}
    w = ctx.timed("box_witness", box_inverse_witness, f, workers=ctx.args.workers)
    flat = np.asarray(w.phi).ravel()
    ctx.table("witness", ["index", "phi"], [[i, repr(float(p))] for i, p in enumerate(flat)])
    return {"kind": "box", "correlation": w.correlation, "normalised": w.correlation / scale, "m": list(w.m)}


def cmd_regularity(ctx: Context) -> dict:
    f = _load_grid(ctx.args.input)
    eps = float(ctx.opt("eps"))
    try:
        out = ctx.timed("regularity", regularity_decompose, f, eps, max_rounds=ctx.args.max_rounds, workers=ctx.args.workers)
    except RegularityCapError as exc:
        p = exc.partial
        raise BudgetError(f"{exc} (partial: M={p.M}, residual box power {p.unif_power:.3g})") from exc
    ctx.table("energies", ["round", "energy"], [[i + 1, repr(e)] for i, e in enumerate(out.energies)])
    return {
        "M": out.M,
        "rounds": out.rounds,
        "sml_l2": out.sml_l2,
        "unif_power": out.unif_power,
        "unif_threshold": out.unif_threshold,
        "sup_str": float(np.max(np.abs(out.str_values.values))),
        "sup_sml": float(np.max(np.abs(out.f_sml.values))),
        "sup_unif": float(np.max(np.abs(out.f_unif.values))),
    }


def _scan_table(ctx: Context, report) -> dict:
    ctx.table("scan", ["n", "shift", "density", "above_threshold"], report.csv_rows())
    return report.summary()


def cmd_corners_scan(ctx: Context) -> dict:
    L = load_plane_set(ctx.args.set)
    v1, v2 = _ints(ctx.opt("v1")), _ints(ctx.opt("v2"))
    s = parse_sequence(ctx.opt("seq"))
    N = int(ctx.opt("N"))
    eps = float(ctx.opt("eps", required=False) or 0.05)
    rep = ctx.timed("scan", popular_scan, (L, v1, v2), s, N, eps, workers=ctx.args.workers)
    return _scan_table(ctx, rep)


def cmd_corners_popular(ctx: Context) -> dict:
    sys_ = ctx.system()
    A_text = ctx.opt("A")
    A = cfgmod.parse_set(sys_.point_count, A_text, ctx.args.seed, "A")
    s = parse_sequence(ctx.opt("seq"))
    N = int(ctx.opt("N"))
    eps = float(ctx.opt("eps"))
    rep = ctx.timed("scan", popular_scan, (sys_, A), s, N, eps, workers=ctx.args.workers)
    out = _scan_table(ctx, rep)
    grid = ctx.opt("eps_grid", required=False)
    if grid:
        eps_grid = [float(v) for v in str(grid).replace(",", " ").split()]
        rows = khintchine_report(sys_, A, s, N, eps_grid, workers=ctx.args.workers)
        ctx.table("khintchine", ["eps", "fraction"], [[repr(e), repr(f)] for e, f in rows])
        out["khintchine"] = rows
    return out


def _triple(ctx: Context, sys_):
    return [ctx.observable(sys_, ctx.opt(k, k), k) for k in ("f0", "f1", "f2")]


def cmd_verify_identity(ctx: Context) -> dict:
    sys_ = ctx.system()
    fs = _triple(ctx, sys_)
    s = parse_sequence(ctx.opt("seq"))
    rep = ctx.timed("identity", compare_averages, sys_, *fs, s, _Ns(ctx.opt("Ns")))
    ctx.table("identity", ["N", "avg_a_re", "avg_a_im", "avg_id_re", "avg_id_im", "diff"],
              [[r.N, repr(r.avg_along_a.real), repr(r.avg_along_a.imag), repr(r.avg_along_id.real),
                repr(r.avg_along_id.imag), repr(r.abs_diff)] for r in rep.records])
    return rep.summary()


def cmd_verify_factorial(ctx: Context) -> dict:
    sys_ = ctx.system()
    fs = _triple(ctx, sys_)
    p = parse_polynomial(ctx.opt("p"))
    kmax = int(ctx.opt("kmax"))
    N = int(ctx.opt("N", required=False) or 1000)
    rows = ctx.timed("factorial", compare_factorial, sys_, *fs, p, range(1, kmax + 1), N)
    ctx.table("factorial", ["k", "n_k", "diff"], [[r.k, r.n_k, repr(r.diff)] for r in rows])
    return {"N": N, "diffs": {str(r.k): r.diff for r in rows}, "n_k": {str(r.k): r.n_k for r in rows}}


def cmd_verify_weyl(ctx: Context) -> dict:
    s = parse_sequence(ctx.opt("seq"))
    beta = cfgmod.parse_real(ctx.opt("beta"))
    rep = ctx.timed("weyl", weyl_sum, s, beta, _Ns(ctx.opt("Ns")))
    ctx.table("weyl", ["N", "magnitude"], [[n, repr(m)] for n, m in zip(rep.Ns, rep.magnitudes)])
    return rep.summary()


def cmd_verify_nil(ctx: Context) -> dict:
    from .systems import SkewProductSystem

    alpha = cfgmod.parse_real(ctx.opt("alpha"))
    start = tuple(cfgmod.parse_real(v) for v in str(ctx.opt("start", required=False) or "0,0").split(","))
    skew = SkewProductSystem(alpha, start)
    F = parse_trig_poly(ctx.opt("F", required=False) or "e(x)+e(y)")
    s = parse_sequence(ctx.opt("seq"))
    rep = ctx.timed("nil", nil_orbit_average, skew, F, s, _Ns(ctx.opt("Ns")))
    ctx.table("nil", ["N", "diff"], [[r.N, repr(r.abs_diff)] for r in rep.records])
    return rep.summary()


def cmd_verify_linear(ctx: Context) -> dict:
    sys_ = ctx.system()
    lhs, rhs = ctx.timed("linear", linear_control_check, sys_, *_triple(ctx, sys_))
    return {"lhs": lhs, "rhs": rhs, "holds": lhs <= rhs + 1e-9}


def cmd_seq_nk(ctx: Context) -> dict:
    return {"n_k": find_nk(parse_polynomial(ctx.opt("p")), int(ctx.opt("k")))}


def cmd_seq_eval(ctx: Context) -> dict:
    s = parse_sequence(ctx.opt("seq"))
    n = int(ctx.args.n)
    return {"n": n, "value": str(sequence_eval(s, n))}


def cmd_seq_residues(ctx: Context) -> dict:
    s = parse_sequence(ctx.opt("seq"))
    q, N = int(ctx.args.q), int(ctx.opt("N"))
    res = sequence_residues(s, q, N)
    hist = np.bincount(res, minlength=q)
    ctx.table("residues", ["r", "count"], [[r, int(c)] for r, c in enumerate(hist)])
    return {"q": q, "N": N, "frequencies": (hist / N).tolist()}


def cmd_seq_intersective(ctx: Context) -> dict:
    verdict = is_intersective_bounded(parse_polynomial(ctx.opt("p")), ctx.args.bound)
    if isinstance(verdict, NotIntersective):
        return {"verdict": "not_intersective", "obstruction": verdict.witness_modulus}
    return {"verdict": "no_obstruction_up_to", "prime_bound": verdict.prime_bound, "lift_bound": verdict.lift_bound}


def cmd_seq_classify(ctx: Context) -> dict:
    verdict = classify_log_away(parse_hardy(ctx.args.hardy))
    if isinstance(verdict, Violated):
        return {"verdict": "violated", "c": str(verdict.c), "p": str(verdict.p)}
    return {"verdict": "satisfied" if isinstance(verdict, Satisfied) else "unknown"}


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", "--system", dest="config", help="experiment config file")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--out-dir", dest="out_dir")
    common.add_argument("--budget-ms", dest="budget_ms", type=int)

    p = _Parser(prog="lab", description="Box seminorm and corner experiment laboratory.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, parent=sub, **kw):
        sp = parent.add_parser(name, parents=[common], **kw)
        sp.set_defaults(handler=fn)
        return sp

    for name, fn in (("seminorm", cmd_seminorm), ("dual", cmd_dual)):
        sp = add(name, fn)
        sp.add_argument("--f")
        sp.add_argument("--words")
    sp = add("cube", cmd_cube)
    sp.add_argument("--words")
    sp.add_argument("--f")
    sp.add_argument("--check-duality", action="store_true")
    sp = add("magic", cmd_magic)
    sp.add_argument("--words")
    sp.add_argument("--check-property", action="store_true")
    sp.add_argument("--trials", type=int, default=50)
    sp = add("grid-norm", cmd_grid_norm)
    sp.add_argument("--input", required=True)
    sp.add_argument("--dirs")
    sp.add_argument("--mc", type=int)
    sp = add("inverse-witness", cmd_inverse_witness)
    sp.add_argument("--input", required=True)
    sp.add_argument("--kind", choices=["box", "u2"], default="box")
    sp = add("regularity", cmd_regularity)
    sp.add_argument("--input", required=True)
    sp.add_argument("--eps", type=float)
    sp.add_argument("--max-rounds", dest="max_rounds", type=int, default=64)

    corners = sub.add_parser("corners").add_subparsers(dest="action", required=True, parser_class=_Parser)
    sp = add("scan", cmd_corners_scan, corners)
    sp.add_argument("--set", required=True)
    sp.add_argument("--v1")
    sp.add_argument("--v2")
    sp.add_argument("--seq")
    sp.add_argument("--N", type=int)
    sp.add_argument("--eps", type=float)
    sp = add("popular", cmd_corners_popular, corners)
    sp.add_argument("--A")
    sp.add_argument("--seq")
    sp.add_argument("--N", type=int)
    sp.add_argument("--eps", type=float)
    sp.add_argument("--eps-grid", dest="eps_grid")

    verify = sub.add_parser("verify").add_subparsers(dest="action", required=True, parser_class=_Parser)
    sp = add("identity", cmd_verify_identity, verify)
    sp.add_argument("--seq")
    sp.add_argument("--Ns")
    for k in ("f0", "f1", "f2"):
        sp.add_argument(f"--{k}")
    sp = add("factorial", cmd_verify_factorial, verify)
    sp.add_argument("--p")
    sp.add_argument("--kmax", type=int)
    sp.add_argument("--N", type=int)
    for k in ("f0", "f1", "f2"):
        sp.add_argument(f"--{k}")
    sp = add("weyl", cmd_verify_weyl, verify)
    sp.add_argument("--seq")
    sp.add_argument("--beta")
    sp.add_argument("--Ns")
    sp = add("nil", cmd_verify_nil, verify)
    sp.add_argument("--alpha")
    sp.add_argument("--start")
    sp.add_argument("--F")
    sp.add_argument("--seq")
    sp.add_argument("--Ns")
    sp = add("linear", cmd_verify_linear, verify)
    for k in ("f0", "f1", "f2"):
        sp.add_argument(f"--{k}")

    seq = sub.add_parser("seq").add_subparsers(dest="action", required=True, parser_class=_Parser)
    sp = add("nk", cmd_seq_nk, seq)
    sp.add_argument("--p")
    sp.add_argument("--k", type=int)
    sp = add("eval", cmd_seq_eval, seq)
    sp.add_argument("--seq")
    sp.add_argument("--n", type=int, required=True)
    sp = add("residues", cmd_seq_residues, seq)
    sp.add_argument("--seq")
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--N", type=int)
    sp = add("intersective", cmd_seq_intersective, seq)
    sp.add_argument("--p")
    sp.add_argument("--bound", type=int, default=1000)
    sp = add("classify", cmd_seq_classify, seq)
    sp.add_argument("--hardy", required=True)
    return p


# --------------------------------------------------------------------------
# entry point


def _canonical_command(args: argparse.Namespace) -> list[str]:
    parts = [args.command] + ([args.action] if getattr(args, "action", None) else [])
    for k in sorted(vars(args)):
        if k in _VOLATILE or k in ("command", "action", "handler"):
            continue
        v = getattr(args, k)
        if v is not None and v is not False:
            parts.append(f"{k}={v}")
    return parts


class _Budget:
    """Wall-clock budget enforced with SIGALRM when running on the main thread."""

    def __init__(self, ms: int | None):
        self.ms = ms
        self.active = False

    def __enter__(self):
        if self.ms is None:
            return self
        if self.ms <= 0:
            raise ValidationError("--budget-ms must be positive")
        if threading.current_thread() is threading.main_thread() and hasattr(signal, "SIGALRM"):
            def _expire(signum, frame):
                raise BudgetError(f"time budget of {self.ms} ms exceeded")

            self.prev = signal.signal(signal.SIGALRM, _expire)
            signal.setitimer(signal.ITIMER_REAL, self.ms / 1000.0)
            self.active = True
        return self

    def __exit__(self, *exc):
        if self.active:
            signal.setitimer(signal.ITIMER_REAL, 0)
            signal.signal(signal.SIGALRM, self.prev)
        return False


def _write_artifacts(out_dir: str, name: str, result: dict, tables: dict, manifest: cfgmod.RunManifest):
    os.makedirs(out_dir, exist_ok=True)
    digest = manifest.digest()
    with open(os.path.join(out_dir, f"{name}.json"), "w") as fh:
        json.dump({"manifest_digest": digest, "result": _jsonable(result)}, fh, sort_keys=True, indent=1)
        fh.write("\n")
    for tname, (header, rows) in tables.items():
        buf = io.StringIO()
        buf.write(f"# manifest_digest: {digest}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        with open(os.path.join(out_dir, f"{name}_{tname}.csv"), "w") as fh:
            fh.write(buf.getvalue())
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest.to_json(), fh, sort_keys=True, indent=1)
        fh.write("\n")


def _emit(payload: dict, stream=None):
    stream = stream or sys.stdout
    stream.write(json.dumps(_jsonable(payload), sort_keys=True) + "\n")
    stream.flush()


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    t0 = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        if args.workers < 1:
            raise ValidationError("--workers must be >= 1")
        with _Budget(args.budget_ms):
            ctx = Context(args)
            result = args.handler(ctx)
        name = args.command + (f"-{args.action}" if getattr(args, "action", None) else "")
        manifest = cfgmod.RunManifest(
            _canonical_command(args),
            ctx.cfg.digest() if args.config else None,
            args.seed,
            cfgmod.versions(),
            round((time.perf_counter() - t0) * 1000, 3),
            ctx.timings,
        )
        if args.out_dir:
            _write_artifacts(args.out_dir, name, result, ctx.tables, manifest)
        _emit({
            "status": "ok",
            "command": name,
            "manifest_digest": manifest.digest(),
            "runtime_ms": manifest.wall_clock_ms,
            **result,
        })
        return EXIT_OK
    except ValidationError as exc:
        code = EXIT_VALIDATION
        msg = str(exc)
    except (BudgetError, PrecisionError, NegativityError) as exc:
        code = EXIT_BUDGET
        msg = str(exc)
    except BoxLabError as exc:
        code = EXIT_VALIDATION
        msg = str(exc)
    sys.stderr.write(f"lab: error: {msg}\n")
    _emit({"status": "error", "exit_code": code, "error": msg})
    return code


if __name__ == "__main__":
    sys.exit(main())
