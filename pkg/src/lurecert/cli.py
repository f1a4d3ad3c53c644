"""Command-line front end.

Subcommands: ``certify``, ``threshold``, ``simulate``, ``verify``,
``equilibrium``, ``example1`` and ``example2``.

Exit codes: 0 success, 1 mathematical failure (a certificate, estimate or
equilibrium check did not hold), 2 usage or configuration error.
"""

import argparse
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .certify import (
    CertificateH1,
    CertificateH2,
    check_H1,
    check_H2,
    construct_H1_certificate,
    verify_H1_certificate,
)
from .config import bundled_config, load_config
from .equilibria import find_perron_weight, solve_equilibrium, uniqueness_probe
from .errors import ConfigError, LureCertError, PreconditionError
from .linalg import spectral_abscissa
from .metrics import (
    PairSampling,
    sample_pairs,
    verify_cor1_Ls,
    verify_cor_Sp,
    verify_L1xi_gain,
    verify_S1_io,
    verify_thm1_H1,
    verify_thm1_H2,
)
from .simulate import simulate

__all__ = ["main", "write_trajectory_csv"]

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
DEFAULT_OUT = "lurecert-out"


class _Run:
    """Per-invocation state: parsed config, output directory, report and manifest."""

    def __init__(self, cfg, args, command):
        self.cfg = cfg
        self.args = args
        self.command = command
        self.out = Path(args.out) if getattr(args, "out", None) else None
        self.results = {}
        self.manifest = []
        self.timings = {}
        self.ok = True
        self._t0 = time.perf_counter()

    def phase(self, name):
        run = self

        class _Phase:
            def __enter__(self):
                self.start = time.perf_counter()

            def __exit__(self, *exc):
                run.timings[name] = round(time.perf_counter() - self.start, 6)
                return False

        return _Phase()

    def outdir(self):
        if self.out is None:
            self.out = Path(DEFAULT_OUT)
        self.out.mkdir(parents=True, exist_ok=True)
        return self.out

    def add_file(self, path, rows, cols):
        data = Path(path).read_bytes()
        self.manifest.append({
            "file": Path(path).name,
            "rows": int(rows),
            "columns": int(cols),
            "sha256": hashlib.sha256(data).hexdigest(),
        })

    def report(self):
        doc = {
            "command": self.command,
            "config": {"sha256": self.cfg.sha256, "text": self.cfg.raw},
            "results": self.results,
            "manifest": sorted(self.manifest, key=lambda m: m["file"]),
            "status": "ok" if self.ok else "failed",
        }
        if getattr(self.args, "timings", False):
            self.timings["total"] = round(time.perf_counter() - self._t0, 6)
            doc["timings"] = self.timings
        return doc

    def finish(self):
        doc = _jsonable(self.report())
        text = json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"
        if self.out is not None:
            self.outdir()
            (self.out / "report.json").write_text(text, encoding="utf-8")
        return EXIT_OK if self.ok else EXIT_FAIL


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        val = float(obj)
        if math.isnan(val):
            return "nan"
        if math.isinf(val):
            return "inf" if val > 0 else "-inf"
        return val
    return obj


def _threads():
    raw = os.environ.get("LURECERT_THREADS")
    if raw is None:
        return max(1, min(4, os.cpu_count() or 1))
    try:
        val = int(raw)
    except ValueError as exc:
        raise ConfigError(f"LURECERT_THREADS must be an integer, got '{raw}'") from exc
    if val < 1:
        raise ConfigError("LURECERT_THREADS must be at least 1")
    return val


def _pmap(func, items):
    items = list(items)
    workers = min(_threads(), max(1, len(items)))
    if workers == 1:
        return [func(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def _fmt(vec):
    return "[" + ", ".join(f"{v:.6g}" for v in np.atleast_1d(vec)) + "]"


def _say(msg):
    print(msg, flush=True)


# --- CSV / SVG ---------------------------------------------------------------

def trajectory_header(traj):
    n, p1, p2, m2 = traj.x.shape[1], traj.y1.shape[1], traj.y2.shape[1], traj.w.shape[1]
    cols = ["t"] + [f"x{i + 1}" for i in range(n)]
    cols += [f"y1_{i + 1}" for i in range(p1)] + [f"y2_{i + 1}" for i in range(p2)]
    cols += [f"w{i + 1}" for i in range(m2)]
    return cols


def write_trajectory_csv(traj, path):
    """Write ``t, x.., y1_.., y2_.., w..`` rows with 17 significant digits."""
    data = np.column_stack([traj.times, traj.x, traj.y1, traj.y2, traj.w])
    header = ",".join(trajectory_header(traj))
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=header, comments="")
    return data.shape


def _write_difference_csv(ta, tb, path):
    dx = ta.x - tb.x
    dy2 = ta.y2 - tb.y2
    dw = ta.w - tb.w
    data = np.column_stack([ta.times, dx, dy2, dw])
    cols = ["t"] + [f"dx{i + 1}" for i in range(dx.shape[1])]
    cols += [f"dy2_{i + 1}" for i in range(dy2.shape[1])] + [f"dw{i + 1}" for i in range(dw.shape[1])]
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=",".join(cols), comments="")
    return data.shape


def write_svg(series, path, width=640, height=360, max_points=2000):
    """Minimal line plot: ``series`` maps a label to ``(t, y)`` arrays."""
    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    t_all = np.concatenate([np.asarray(t) for t, _ in series.values()])
    y_all = np.concatenate([np.asarray(y) for _, y in series.values()])
    t_lo, t_hi = float(t_all.min()), float(t_all.max())
    y_lo, y_hi = float(y_all.min()), float(y_all.max())
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    if t_hi == t_lo:
        t_hi = t_lo + 1.0
    pad = 40
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect x="{pad}" y="{pad / 2}" width="{width - 1.5 * pad}" height="{height - 1.5 * pad}" '
        'fill="none" stroke="#999"/>',
        f'<text x="{pad}" y="{height - 8}" font-size="11">t in [{t_lo:.4g}, {t_hi:.4g}], '
        f'y in [{y_lo:.4g}, {y_hi:.4g}]</text>',
    ]
    for idx, (label, (t, y)) in enumerate(sorted(series.items())):
        t, y = np.asarray(t), np.asarray(y)
        step = max(1, t.size // max_points)
        px = pad + (t[::step] - t_lo) / (t_hi - t_lo) * (width - 1.5 * pad)
        py = pad / 2 + (1 - (y[::step] - y_lo) / (y_hi - y_lo)) * (height - 1.5 * pad)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        color = palette[idx % len(palette)]
        lines.append(f'<polyline fill="none" stroke="{color}" stroke-width="1" points="{pts}"/>')
        lines.append(f'<text x="{width - 1.5 * pad}" y="{pad / 2 + 14 * (idx + 1)}" '
                     f'font-size="11" fill="{color}" text-anchor="end">{label}</text>')
    lines.append("</svg>")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# --- building blocks -----------------------------------------------------------

def _simulate_named(run, names):
    cfg = run.cfg
    specs = [cfg.trajectory(nm) for nm in names]

    def one(spec):
        return simulate(cfg.system, cfg.nonlinearity, cfg.forcing[spec.forcing], spec.x0, cfg.sim)

    return dict(zip(names, _pmap(one, specs)))


def _h1_block(run):
    cfg = run.cfg
    holds, rep = check_H1(cfg.system, cfg.Delta)
    block = {
        "holds": holds,
        "abscissa_A": rep.abscissa_A,
        "rho_G11_Delta": rep.gain_radius,
        "closed_loop_abscissa": rep.closed_loop_abscissa,
        "equivalence_consistent": rep.consistent,
    }
    if not rep.consistent:
        block["warning"] = "small-gain and closed-loop Hurwitz tests disagree"
    return holds, block


def _h1_certificate(run):
    cfg = run.cfg
    xi = cfg.certificate.get("xi")
    closed = spectral_abscissa(cfg.system.closed_loop(cfg.Delta))
    if xi is not None and not xi < -closed:
        xi = None
    cert = construct_H1_certificate(cfg.system, cfg.Delta, xi, cfg.certificate.get("c"))
    return cert


def _h2_report(run):
    cfg = run.cfg
    c = cfg.certificate
    return check_H2(cfg.system, cfg.Delta, c["xi"], c["q"], c["r"], rescale_q=c["rescale_q"])


def _h2_block(rep):
    block = {
        "holds": rep.holds,
        "shifted_hurwitz": rep.shifted_hurwitz,
        "standing_assumption_ok": rep.standing_assumption_ok,
        "woodbury_checked": rep.woodbury_checked,
        "q_scale": rep.q_scale,
        "notes": rep.notes,
    }
    if rep.dissipation is not None:
        d = rep.dissipation
        block.update({
            "p": d.p, "l": d.l, "k": d.k, "margin": d.margin,
            "residuals": list(d.residuals),
            "p_strictly_positive": d.p_strictly_positive,
            "observability_ok": d.observability_ok,
        })
    if rep.woodbury_margin is not None:
        block["woodbury_margin"] = rep.woodbury_margin
    return block


# --- commands -------------------------------------------------------------------

def cmd_certify(run):
    cfg = run.cfg
    with run.phase("certify"):
        holds, block = _h1_block(run)
        _say(f"H1: {'holds' if holds else 'fails'}  rho(G11(0) Delta) = {block['rho_G11_Delta']:.6g}, "
             f"abscissa(A + B1 Delta C1) = {block['closed_loop_abscissa']:.6g}")
        if holds:
            cert = _h1_certificate(run)
            block["certificate"] = {"xi": cert.xi, "p": cert.p,
                                    "verified": verify_H1_certificate(cfg.system, cfg.Delta, cert)}
            _say(f"    certificate xi = {cert.xi:.6g}, p = {_fmt(cert.p)}")
        run.results["H1"] = block
        run.ok = run.ok and holds
        if "q" in cfg.certificate:
            try:
                rep = _h2_report(run)
                h2 = _h2_block(rep)
            except PreconditionError as exc:
                h2 = {"holds": False, "precondition": str(exc)}
            run.results["H2"] = h2
            run.ok = run.ok and h2["holds"]
            if "p" in h2:
                _say(f"H2: {'holds' if h2['holds'] else 'fails'}  p = {_fmt(h2['p'])}, "
                     f"k = {_fmt(h2['k'])}, residuals = {_fmt(h2['residuals'])}")
            else:
                _say(f"H2: fails ({h2.get('precondition') or '; '.join(h2.get('notes', []))})")
    return run


def bisect_threshold(system, pattern, lo, hi, tol):
    """Largest ``delta`` with H1 at ``delta * pattern``, bracketed to width ``tol``."""
    pattern = np.asarray(pattern, dtype=float)
    if not np.any(pattern):
        raise ConfigError("delta pattern is zero: H1 has no dependence on delta")
    if not (tol > 0 and hi > lo >= 0):
        raise ConfigError("threshold needs 0 <= lo < hi and tol > 0")
    probes = []

    def holds(delta):
        h = check_H1(system, delta * pattern)[0]
        probes.append((float(delta), bool(h)))
        return h

    if not holds(lo):
        raise ConfigError(f"invalid bracket: H1 already fails at lo={lo}")
    if holds(hi):
        raise ConfigError(f"invalid bracket: H1 still holds at hi={hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if holds(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), (lo, hi), probes


def cmd_threshold(run):
    cfg, args = run.cfg, run.args
    th = dict(cfg.threshold)
    for key in ("lo", "hi"):
        if getattr(args, key, None) is not None:
            th[key] = args.__dict__[key]
    if args.tol is not None:
        th["tol"] = args.tol
    if (args.param or "delta") != "delta":
        raise ConfigError(f"unknown threshold parameter '{args.param}' (only 'delta' is supported)")
    with run.phase("threshold"):
        value, bracket, probes = bisect_threshold(cfg.system, cfg.delta_pattern, th["lo"], th["hi"],
                                                  th["tol"])
    monotone = all(h == (d <= bracket[0]) for d, h in probes)
    run.results["threshold"] = {"delta": value, "bracket": list(bracket), "tol": th["tol"],
                                "probes": [list(p) for p in probes], "monotone": monotone}
    _say(f"threshold delta* = {value:.6f}  (bracket [{bracket[0]:.6f}, {bracket[1]:.6f}])")
    return run


def cmd_simulate(run):
    cfg, args = run.cfg, run.args
    names = args.traj or [t.name for t in cfg.trajectories]
    if not names:
        raise ConfigError("no trajectories configured")
    with run.phase("simulate"):
        trajs = _simulate_named(run, names)
    out = run.outdir()
    sims = {}
    for name in sorted(trajs):
        tr = trajs[name]
        path = out / f"{name}.csv"
        rows, cols = write_trajectory_csv(tr, path)
        run.add_file(path, rows, cols)
        sims[name] = {"samples": tr.N, "final_state": tr.x[-1],
                      "positivity_checked": tr.positivity_checked}
        _say(f"{name}: {tr.N} samples, x(T) = {_fmt(tr.x[-1])} -> {path}")
    if getattr(args, "svg", False):
        path = out / "y2.svg"
        write_svg({nm: (trajs[nm].times, trajs[nm].y2[:, 0]) for nm in trajs}, path)
        sims["svg"] = path.name
    run.results["simulations"] = sims
    return run, trajs


def _certificates_for_verify(run):
    """H1 and (optionally) H2 certificates; supplied ``p`` is used verbatim."""
    cfg = run.cfg
    c = cfg.certificate
    info = {}
    cert1 = cert2 = None
    if "p" in c:
        p = c["p"]
        xi = c.get("xi")
        if xi is None:
            raise ConfigError("a supplied certificate p needs xi")
        cert1 = CertificateH1(xi, p)
        info["source"] = "supplied"
        info["H1_valid"] = verify_H1_certificate(cfg.system, cfg.Delta, cert1)
        if "q" in c:
            n, m2 = cfg.system.n, cfg.system.m2
            l = c.get("l", np.zeros(n))
            k = c.get("k", np.clip(c["r"] - cfg.system.B2.T @ p, 0, None))
            cert2 = CertificateH2(xi, p, c["q"], c["r"], l, np.asarray(k).reshape(m2))
        return cert1, cert2, info
    info["source"] = "constructed"
    if "q" in c:
        try:
            rep = _h2_report(run)
        except PreconditionError as exc:
            rep = None
            info["H2"] = {"holds": False, "precondition": str(exc)}
        if rep is not None:
            info["H2"] = {"holds": rep.holds, "notes": rep.notes}
            if rep.holds:
                cert2 = rep.certificate
                cert1 = cert2.as_h1()
    if cert1 is None:
        holds, _ = check_H1(cfg.system, cfg.Delta)
        info["H1"] = {"holds": holds}
        if holds:
            cert1 = _h1_certificate(run)
    return cert1, cert2, info


def _run_estimates(run, trajs, cert1, cert2):
    cfg = run.cfg
    ver = cfg.verification
    sampling = PairSampling(ver["coarse"], ver["random"], ver["seed"])
    sysm = cfg.system
    results = []
    for a, b in ver["pairs"]:
        ta, tb = trajs[a], trajs[b]
        pairs = sample_pairs(ta.N, sampling)
        wa, wb = cfg.forcing[cfg.trajectory(a).forcing], cfg.forcing[cfg.trajectory(b).forcing]
        same_x0 = bool(np.array_equal(cfg.trajectory(a).x0, cfg.trajectory(b).x0))
        for est in ver["estimates"]:
            needs_h2 = est in ("thm1_H2", "S1_io", "L1xi_gain")
            cert = cert2 if needs_h2 else cert1
            label = f"{a}|{b}"
            if cert is None:
                results.append({"pair": label, "estimate": est, "holds": False,
                                "error": "no valid certificate for this estimate"})
                continue
            reps = []
            if est == "thm1_H1":
                reps.append(verify_thm1_H1(ta, tb, cert, sysm.B2, pairs,
                                           r=None if cert2 is None else cert2.r))
            elif est == "thm1_H2":
                reps.append(verify_thm1_H2(ta, tb, cert, sysm.C2, pairs))
            elif est == "cor1_Ls":
                for s in ver["s"]:
                    reps.append(verify_cor1_Ls(ta, tb, cert, s, sysm.B2, pairs, signals=(wa, wb)))
            elif est == "cor_Sp":
                for s in ver["s"]:
                    if math.isfinite(s):
                        reps.append(verify_cor_Sp(ta, tb, cert, s, ver["beta0"], ver["xi0"],
                                                  B2=sysm.B2, pairs=pairs))
            elif est == "S1_io":
                reps.append(verify_S1_io(ta, tb, cert, ver["beta0"]))
            elif est == "L1xi_gain":
                if not same_x0:
                    results.append({"pair": label, "estimate": est, "holds": True,
                                    "skipped": "initial states differ"})
                    continue
                reps.append(verify_L1xi_gain(ta, tb, cert.xi, cert.q, cert.r))
            for rep in reps:
                entry = rep.to_dict()
                entry.update({"pair": label, "estimate": rep.name})
                results.append(entry)
    return results


def cmd_verify(run):
    cfg = run.cfg
    ver = cfg.verification
    if not ver["estimates"]:
        run.results["verification"] = {"status": "nothing requested"}
        _say("verification: nothing requested")
        return run
    with run.phase("certificates"):
        cert1, cert2, info = _certificates_for_verify(run)
    names = sorted({nm for pair in ver["pairs"] for nm in pair})
    with run.phase("simulate"):
        trajs = _simulate_named(run, names)
    with run.phase("verify"):
        results = _run_estimates(run, trajs, cert1, cert2)
    failing = [r for r in results if not r["holds"]]
    run.ok = run.ok and not failing
    run.results["verification"] = {"certificate": info, "estimates": results,
                                   "failing": [f"{r['estimate']} on {r['pair']}" for r in failing]}
    _say(f"{'estimate':<16} {'pair':<18} {'holds':<6} worst margin")
    for r in results:
        margin = r.get("worst_margin")
        extra = r.get("skipped") or r.get("error") or ""
        margin_txt = f"{margin:.3e}" if isinstance(margin, float) else ""
        _say(f"{r['estimate']:<16} {r['pair']:<18} {str(r['holds']):<6} {margin_txt} {extra}".rstrip())
    for r in failing:
        _say(f"FAILED: {r['estimate']} on pair {r['pair']}")
    return run


def _w_star_value(cfg, name):
    sig = cfg.forcing[name]
    lim = sig.limit()
    if lim is None:
        raise ConfigError(f"forcing '{name}' is not constant and has no closed-form limit")
    return lim, sig.kind != "Constant"


def cmd_equilibrium(run):
    cfg, args = run.cfg, run.args
    entries = cfg.equilibrium
    if args.w_star:
        entries = [e for e in entries if e["w_star"] == args.w_star] or [
            {"w_star": args.w_star, "tol": 1e-10}]
        if args.w_star not in cfg.forcing:
            raise ConfigError(f"unknown forcing '{args.w_star}'")
    if not entries:
        raise ConfigError("no equilibrium requested (add an 'equilibrium' block or --w-star)")
    out = []
    for entry in entries:
        name = entry["w_star"]
        w_star, from_limit = _w_star_value(cfg, name)
        tol = args.tol if args.tol is not None else entry["tol"]
        block = {"w_star_name": name, "w_star": w_star, "from_limit": from_limit}
        try:
            pw = find_perron_weight(cfg.system, cfg.Delta, entry.get("v"), entry.get("rho"))
        except PreconditionError as exc:
            block.update({"ok": False, "error": str(exc),
                          "guidance": "no contraction weight; certify incremental stability "
                                      "through the H2 path instead (lurecert certify with q, r)"})
            _say(f"{name}: {exc}\n    hint: {block['guidance']}")
            run.ok = False
            out.append(block)
            continue
        with run.phase(f"equilibrium:{name}"):
            eq = solve_equilibrium(cfg.system, cfg.nonlinearity, w_star, pw, tol)
            unique, spread = uniqueness_probe(cfg.system, cfg.nonlinearity, w_star, pw, 20, tol,
                                              seed=args.seed or 0, return_spread=True)
        block.update(eq.to_dict())
        block.update({"rho": pw.rho, "v": pw.v, "unique": unique, "restart_spread": spread,
                      "ok": bool(unique)})
        _say(f"{name}: x* = {_fmt(eq.x_star)}, residual = {eq.residual:.3e}, "
             f"iterations = {eq.iterations}, restarts agree = {unique}")
        if "cross_check" in entry:
            cc = entry["cross_check"]
            with run.phase(f"cross_check:{name}"):
                tr = simulate(cfg.system, cfg.nonlinearity, cfg.forcing[name], cc["x0"], cc["sim"])
            gap = float(np.max(np.abs(tr.x[-1] - eq.x_star)))
            block["cross_check"] = {"T": cc["sim"].T, "dt": cc["sim"].dt, "terminal_gap": gap,
                                    "tol": cc["tol"], "ok": gap <= cc["tol"]}
            block["ok"] = block["ok"] and gap <= cc["tol"]
            _say(f"    simulation to T={cc['sim'].T:g}: |x(T) - x*|_inf = {gap:.3e}")
        run.ok = run.ok and block["ok"]
        out.append(block)
    run.results["equilibria"] = out
    return run


def _example_common(run, trajs):
    """Difference CSVs for the configured verification pairs."""
    out = run.outdir()
    for a, b in run.cfg.verification["pairs"]:
        path = out / f"diff_{a}__{b}.csv"
        rows, cols = _write_difference_csv(trajs[a], trajs[b], path)
        run.add_file(path, rows, cols)


def cmd_example1(run):
    cfg = run.cfg
    cmd_threshold(run)
    cmd_certify(run)
    _, trajs = cmd_simulate(run)
    _example_common(run, trajs)
    cmd_verify_with(run, trajs)
    cmd_equilibrium(run)
    conv = {}
    eq_by_name = {e["w_star_name"]: e for e in run.results.get("equilibria", []) if "x_star" in e}
    for spec in cfg.trajectories:
        e = eq_by_name.get(spec.forcing)
        if e is None:
            continue
        gap = float(np.max(np.abs(trajs[spec.name].x[-1] - np.asarray(e["x_star"]))))
        conv[spec.name] = {"terminal_gap": gap, "T": trajs[spec.name].T}
    run.results["finite_horizon_convergence"] = conv
    for name, c in sorted(conv.items()):
        _say(f"{name}: |x(T) - x*|_inf at T={c['T']:g} is {c['terminal_gap']:.3e}")
    return run


def cmd_verify_with(run, trajs):
    """Verification reusing already simulated trajectories."""
    cfg = run.cfg
    if not cfg.verification["estimates"]:
        return run
    cert1, cert2, info = _certificates_for_verify(run)
    results = _run_estimates(run, trajs, cert1, cert2)
    failing = [r for r in results if not r["holds"]]
    run.ok = run.ok and not failing
    run.results["verification"] = {"certificate": info, "estimates": results,
                                   "failing": [f"{r['estimate']} on {r['pair']}" for r in failing]}
    for r in results:
        margin = r.get("worst_margin")
        margin_txt = f"{margin:.3e}" if isinstance(margin, float) else (r.get("skipped") or "")
        _say(f"{r['estimate']:<16} {r['pair']:<18} {str(r['holds']):<6} {margin_txt}")
    return run


def cmd_example2(run):
    cmd_certify(run)
    _, trajs = cmd_simulate(run)
    _example_common(run, trajs)
    cmd_verify_with(run, trajs)
    return run


COMMANDS = {
    "certify": cmd_certify,
    "threshold": cmd_threshold,
    "simulate": lambda run: cmd_simulate(run)[0],
    "verify": cmd_verify,
    "equilibrium": cmd_equilibrium,
    "example1": cmd_example1,
    "example2": cmd_example2,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment configuration (YAML)")
    common.add_argument("--out", help="output directory for CSV files and report.json")
    common.add_argument("--dt", type=float, help="override simulation step")
    common.add_argument("--horizon", type=float, help="override simulation horizon T")
    common.add_argument("--seed", type=int, help="override the window-sampling seed")
    common.add_argument("--tol", type=float, help="bisection or fixed-point tolerance")
    common.add_argument("--delta", type=float, help="override the scalar multiplying the delta pattern")
    common.add_argument("--timings", action="store_true", help="record wall-clock timings in the report")
    parser = argparse.ArgumentParser(prog="lurecert", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("certify", parents=[common], help="check H1 and, if configured, H2")
    th = sub.add_parser("threshold", parents=[common], help="bisect the H1 threshold in delta")
    th.add_argument("--param", default="delta")
    th.add_argument("--lo", type=float)
    th.add_argument("--hi", type=float)
    sim = sub.add_parser("simulate", parents=[common], help="simulate trajectories to CSV")
    sim.add_argument("--traj", action="append", help="trajectory name (repeatable)")
    sim.add_argument("--svg", action="store_true", help="also write a y2 line plot")
    sub.add_parser("verify", parents=[common], help="check incremental estimates on trajectory pairs")
    eq = sub.add_parser("equilibrium", parents=[common], help="compute constant trajectories")
    eq.add_argument("--w-star", dest="w_star", help="name of a constant (or convergent) forcing")
    for name in ("example1", "example2"):
        ex = sub.add_parser(name, parents=[common], help=f"run the bundled {name} experiment")
        ex.add_argument("--svg", action="store_true")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    for attr in ("traj", "svg", "w_star", "lo", "hi", "param"):
        if not hasattr(args, attr):
            setattr(args, attr, None if attr != "traj" else [])
    overrides = {}
    if args.dt is not None:
        overrides["simulation.dt"] = args.dt
    if args.horizon is not None:
        overrides["simulation.T"] = args.horizon
    if args.seed is not None:
        overrides["verification.sampling.seed"] = args.seed
    if args.delta is not None:
        overrides["delta.value"] = args.delta
    try:
        path = args.config
        if path is None:
            if args.command in ("example1", "example2"):
                path = bundled_config(args.command)
            else:
                raise ConfigError("--config is required for this command")
        cfg = load_config(path, overrides)
        run = _Run(cfg, args, args.command)
        if args.command in ("example1", "example2") and run.out is None:
            run.out = Path(DEFAULT_OUT) / args.command
        COMMANDS[args.command](run)
        return run.finish()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LureCertError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
