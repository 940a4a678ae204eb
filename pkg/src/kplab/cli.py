"""Command-line entry points: validate | field | compare | ridges | frame.

All outputs are deterministic under a fixed seed: CSV numbers are written
with 17 significant digits (lossless double round-trip), JSON reports are
key-sorted, and sweep parallelism collects rows through a single ordered
collector.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import asymptotics as asym
from . import fredholm, reduction, validation
from .config import RunConfig, parse_config
from .domain import build_quadrature, validate_domain
from .errors import ConfigError, KplabError
from .phase import FrameCache, frame_at

FMT = "%.16e"


def _fmt(v: float) -> str:
    return FMT % v


def _write_csv(path: str, header: list, rows: list) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if isinstance(v, float) else str(v)
                              for v in row) + "\n")


def _write_json(path: str, payload: dict) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _x_grid(cfg: RunConfig, f_min: float, t: float) -> np.ndarray:
    if cfg.window == "xi":
        return f_min * t + np.linspace(cfg.x_min, cfg.x_max, cfg.n_x)
    return np.linspace(cfg.x_min, cfg.x_max, cfg.n_x)


def _rule_for(cfg: RunConfig, domain, cache: FrameCache, Y: float, t: float):
    layered = cfg.layered == "always" or (
        cfg.layered == "auto" and t >= cfg.layered_threshold)
    if layered:
        frame = cache.get(Y)
        spec = reduction.subdomain_spec(domain, frame, cfg.N)
        return reduction.layered_rule(domain, spec, cfg.n_radial, cfg.n_angular,
                                      n_r=cfg.moment_n_r, n_s=32, t=t)
    return build_quadrature(domain, cfg.n_radial, cfg.n_angular)


def _field_row(task) -> list:
    """One y-row of the field sweep; module-level for process pools."""
    cfg, source, t, y = task
    domain = cfg.domain()
    cache = FrameCache(domain)
    Y = y / t
    frame = cache.get(Y)
    xs = _x_grid(cfg, frame.f_min, t)
    out = []
    if source == "exact":
        rule = _rule_for(cfg, domain, cache, Y, t)
        for x in xs:
            u, imres = fredholm.u_exact_with_residual(domain, rule, float(x), y, t)
            out.append((float(x), y, t, u, imres))
    elif source == "degenerate":
        spec = reduction.subdomain_spec(domain, frame, cfg.N)
        for x in xs:
            u = reduction.u_degenerate(domain, spec, float(x), y, t,
                                       n_r=cfg.moment_n_r, n_s=cfg.moment_n_s)
            out.append((float(x), y, t, u, 0.0))
    elif source in ("theta", "train"):
        params = asym.train_params(domain, cfg.N, Y, cache=cache)
        xi = np.asarray(xs) - frame.f_min * t
        vals = (asym.u_theta(params, xi, t) if source == "theta"
                else asym.soliton_train(params, np.asarray(xs), y, t))
        for x, u in zip(xs, np.atleast_1d(vals)):
            out.append((float(x), y, t, float(u), 0.0))
    else:
        raise ConfigError(f"unknown source {source!r}")
    return out


def cmd_validate(cfg: RunConfig, out_dir: str) -> int:
    domain = cfg.domain()
    report = validate_domain(domain)
    failures = [c.name for c in report.checks if not c.passed]
    payload = {"domain": report.as_dict(), "frames": {}, "positivity": {}}

    if not failures:
        y_samples = sorted({cfg.Y, 0.25, 1.0})
        for Y in y_samples:
            try:
                payload["frames"][repr(Y)] = frame_at(domain, Y).as_dict()
            except KplabError as exc:
                payload["frames"][repr(Y)] = {"error": f"{type(exc).__name__}: {exc}"}
                failures.append(f"frame@Y={Y}")
        rule = build_quadrature(domain, cfg.n_radial, cfg.n_angular)
        rng = np.random.default_rng(cfg.seed)
        for i in range(3):
            # probes are drawn xi-relative: the certified tolerances are
            # absolute, so the kernel scale must stay O(1)
            Y = float(rng.uniform(-1.0, 1.0))
            t = float(rng.uniform(0.5, 3.0))
            xi = float(rng.uniform(-4.0, 1.5))
            x = frame_at(domain, Y).f_min * t + xi
            y = Y * t
            op = fredholm.assemble_A(domain, rule, x, y, t)
            rep = fredholm.check_positivity(op, trials=50, seed=cfg.seed + i)
            key = f"({x:.3f},{y:.3f},{t:.3f})"
            payload["positivity"][key] = rep.as_dict()
            if rep.min_ratio < -1e-10 or rep.resolvent_norm > 1.0 + 1e-8:
                failures.append(f"positivity@{key}")

    payload["failures"] = failures
    _write_json(os.path.join(out_dir, "validate.json"), payload)
    print(json.dumps({"ok": not failures, "failures": failures}, sort_keys=True))
    return 0 if not failures else 1


def cmd_field(cfg: RunConfig, source: str, out_dir: str,
              dump_moments: str | None = None) -> int:
    if source in ("theta", "train"):
        cfg.require_asymptotic_t()
    tasks = [(cfg, source, t, y) for t in cfg.t_list for y in cfg.y_values(t)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            blocks = list(pool.map(_field_row, tasks))
    else:
        blocks = [ _field_row(task) for task in tasks ]
    rows = [row for block in blocks for row in block]
    path = os.path.join(out_dir, f"field_{source}.csv")
    _write_csv(path, ["x", "y", "t", "u", "im_residual"], rows)

    u = np.array([r[3] for r in rows])
    summary = {
        "source": source,
        "rows": len(rows),
        "max_u": float(np.max(u)),
        "min_u": float(np.min(u)),
        "l2": float(np.sqrt(np.mean(u * u))),
        "max_im_residual": float(max(r[4] for r in rows)),
    }
    if source == "exact":
        domain = cfg.domain()
        cache = FrameCache(domain)
        t = cfg.t_list[0]
        y = cfg.y_values(t)[0]
        frame = cache.get(y / t)
        rule = _rule_for(cfg, domain, cache, y / t, t)
        mid = float(np.median(_x_grid(cfg, frame.f_min, t)))
        summary["condition_estimate"] = fredholm.condition_estimate(
            fredholm.assemble_A(domain, rule, mid, y, t))
    _write_json(os.path.join(out_dir, f"field_{source}_summary.json"), summary)

    if dump_moments is not None:
        domain = cfg.domain()
        t = cfg.t_list[0]
        y = cfg.y_values(t)[0]
        frame = frame_at(domain, y / t)
        spec = reduction.subdomain_spec(domain, frame, cfg.N)
        x = float(_x_grid(cfg, frame.f_min, t)[0])
        mom = reduction.moments(domain, spec, x, t,
                                n_r=cfg.moment_n_r, n_s=cfg.moment_n_s)
        cm = reduction.c_matrix(cfg.N, frame.p0)
        _write_json(dump_moments, {
            "x": x, "t": t, "Y": y / t, "N": cfg.N,
            "log_scale": mom.log_scale,
            "J_scaled_real": mom.scaled.real.tolist(),
            "J_scaled_imag": mom.scaled.imag.tolist(),
            "det_DN": reduction.det_DN(cm, mom),
            "psiN_inner_logdet": reduction.psiN_inner_logdet(cm, mom),
            "psiN_inner_rowrep": reduction.psiN_inner_rowrep(cm, mom),
        })
    print(f"wrote {path} ({len(rows)} rows)")
    return 0


def cmd_compare(cfg: RunConfig, out_dir: str) -> int:
    cfg.require_asymptotic_t()
    domain = cfg.domain()
    cache = FrameCache(domain)
    Y = cfg.Y
    frame = cache.get(Y)
    spec1 = reduction.subdomain_spec(domain, frame, 1)
    cm1 = reduction.c_matrix(1, frame.p0)
    params = asym.train_params(domain, cfg.N, Y, cache=cache)

    rows = []
    metrics: dict = {"tier12_diff": [], "theta_train_sup": []}
    for t in cfg.t_list:
        x = frame.f_min * t + cfg.xi_ref
        mom = reduction.moments(domain, spec1, x, t,
                                n_r=cfg.moment_n_r, n_s=cfg.moment_n_s)
        pn = reduction.psiN_inner_logdet(cm1, mom)
        lay = reduction.layered_rule(domain, spec1, cfg.n_radial, cfg.n_angular,
                                     n_r=cfg.moment_n_r, n_s=32, t=t)
        op = fredholm.assemble_A(domain, lay, x, Y * t, t)
        pe = fredholm.inner_psi_e(fredholm.solve_psi(op))
        d12 = abs(pe - pn)
        metrics["tier12_diff"].append(d12)
        rows.append((t, "tier12_diff", d12))

        lo, hi = asym.intervals_In(frame.p0, t, 1, cfg.eps)
        xi = np.linspace(hi - 25.0 / frame.p0, hi, 800)
        th = asym.u_theta(params, xi, t)
        tr = asym.soliton_train(params, frame.f_min * t + xi, Y * t, t)
        sup = float(np.max(np.abs(th - tr)))
        metrics["theta_train_sup"].append(sup)
        rows.append((t, "theta_train_sup", sup))
        rows.append((t, "theta_train_sup_t14", sup * t**0.25))

    _write_csv(os.path.join(out_dir, "compare_metrics.csv"),
               ["t", "metric", "value"], rows)

    fits: dict = {"t_list": list(cfg.t_list)}
    if len(cfg.t_list) >= 2:
        for key, vals in metrics.items():
            safe = [max(v, 1e-300) for v in vals]
            fits[key + "_exponent"] = validation.fit_loglog_slope(cfg.t_list, safe)
    else:
        fits["note"] = "single t: no fit, raw metrics only"
    _write_json(os.path.join(out_dir, "compare_fit.json"), fits)
    print(json.dumps(fits, sort_keys=True))
    return 0


def cmd_ridges(cfg: RunConfig, out_dir: str) -> int:
    cfg.require_asymptotic_t()
    domain = cfg.domain()
    cache = FrameCache(domain)
    rows = []
    train_records = []
    n_max = (cfg.N + 1) // 2
    for t in cfg.t_list:
        ys = cfg.y_values(t)
        for n in range(1, n_max + 1):
            curve = asym.ridge_curves(domain, t, n, ys, N=cfg.N, cache=cache)
            for pt in curve.points:
                rows.append((t, n, pt.y, pt.x_refined, pt.u_peak))
            for y, reason in curve.gaps:
                rows.append((t, n, y, math.nan, math.nan))
        for y in ys:
            try:
                params = asym.train_params(domain, cfg.N, y / t, cache=cache)
                train_records.append(params.as_dict())
            except KplabError as exc:
                train_records.append({"y_ratio": y / t,
                                      "error": f"{type(exc).__name__}: {exc}"})
    _write_csv(os.path.join(out_dir, "ridges.csv"),
               ["t", "n", "y", "x_ridge", "u_peak"], rows)
    _write_json(os.path.join(out_dir, "train_params.json"),
                {"trains": train_records})
    print(f"wrote ridges.csv ({len(rows)} rows)")
    return 0


def cmd_frame(cfg: RunConfig, out_path: str | None) -> int:
    domain = cfg.domain()
    record = frame_at(domain, cfg.Y).as_dict()
    text = json.dumps(record, indent=2, sort_keys=True)
    if out_path:
        _write_json(out_path, record)
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="kplab",
        description="Spectral-plane construction and soliton-train asymptotics "
                    "of non-localized KP-I fields",
    )
    ap.add_argument("--config", default=None, help="config file path")
    ap.add_argument("--out", default=None, help="output directory")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--t", default=None, help="comma-separated t values")
    ap.add_argument("--N", type=int, default=None, help="truncation order")
    ap.add_argument("--eps", type=float, default=None, help="interval exponent margin")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", help="domain, frame, and positivity audit")
    p_field = sub.add_parser("field", help="evaluate a field tier on a grid")
    p_field.add_argument("--source", required=True,
                         choices=["exact", "degenerate", "theta", "train"])
    p_field.add_argument("--dump-moments", default=None,
                         help="write moment/determinant diagnostics JSON here")
    sub.add_parser("compare", help="tier-vs-tier convergence studies")
    sub.add_parser("ridges", help="ridge curves and train parameters")
    p_frame = sub.add_parser("frame", help="dump the minimizer frame as JSON")
    p_frame.add_argument("--frame-out", default=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config) if args.config else RunConfig()
        if args.seed is not None:
            cfg.seed = args.seed
        if args.workers is not None:
            cfg.workers = args.workers
        if args.t is not None:
            cfg.t_list = tuple(float(v) for v in args.t.split(","))
        if args.N is not None:
            cfg.N = args.N
        if args.eps is not None:
            cfg.eps = args.eps
        cfg.validate()
        out_dir = args.out if args.out is not None else cfg.out_dir

        if args.command == "validate":
            return cmd_validate(cfg, out_dir)
        if args.command == "field":
            return cmd_field(cfg, args.source, out_dir,
                             dump_moments=args.dump_moments)
        if args.command == "compare":
            return cmd_compare(cfg, out_dir)
        if args.command == "ridges":
            return cmd_ridges(cfg, out_dir)
        if args.command == "frame":
            return cmd_frame(cfg, args.frame_out)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(json.dumps({"error": "config", "detail": str(exc)}), file=sys.stderr)
        return 2
    except KplabError as exc:
        print(json.dumps({"error": type(exc).__name__, "detail": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
