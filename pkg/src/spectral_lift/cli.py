"""Command-line front end: build, analyze, lift, verify.

Exit codes: 0 success / checks pass, 1 verification failure,
2 usage or parse error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import io as sio
from .approx import InsufficientLevelsError, classify_smoothness
from .digraph import (
    DirectedPair,
    build_directed_pair,
    dyadic_depth,
    frame_check,
    lp_norm,
    pair_from_system,
    tau_pyramid,
)
from .filters import LowPassFilter
from .jacobi import build_circle_system, build_hemisphere_disc_pair, verify_jacobi_ultra
from .system import build_undirected_system, estimate_gaussian_bound, orthonormality_residual
from .tauber import measure_from_pair, verify_localization
from .twosys import JointDistance, joint_lift, landmark_connection, tensor_lift

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULTS = {
    "filter": {"order": 4, "profile": "smoothed-polynomial"},
    "epsilon": 0.1,
    "k": None,
    "levels": None,
    "p": 2.0,
    "tol": None,
    "seed": 0,
    "n": None,
    "trials": 100,
    "normalization": "unnormalized",
    "mode": "joint",
}


class UsageError(Exception):
    pass


def _p_value(s) -> float:
    if isinstance(s, (int, float)):
        return float(s)
    if str(s).lower() in ("inf", "infinity"):
        return math.inf
    return float(s)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--builtin", choices=["circle", "jacobi-pair"])
    common.add_argument("--filter-order", type=int, dest="filter_order")
    common.add_argument("--filter-profile", dest="filter_profile",
                        choices=["smoothed-polynomial", "exp", "cutoff"])
    common.add_argument("--epsilon", type=float)
    common.add_argument("--k", type=int)
    common.add_argument("--n", type=int, help="grid size for builtin systems")
    common.add_argument("--levels", type=int, help="dyadic depth J")
    common.add_argument("--p", choices=["1", "2", "inf"])
    common.add_argument("--tol", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--out", help="output directory")

    ap = argparse.ArgumentParser(prog="spectral-lift", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", parents=[common], help="build a system or directed pair")
    b.add_argument("--points", help="point-cloud CSV (undirected system)")
    b.add_argument("--matrix", help="dense weight matrix CSV (directed pair)")
    b.add_argument("--edges", help="edge-list CSV src,dst,weight (directed pair)")
    b.add_argument("--normalization", choices=["unnormalized", "random-walk"])

    a = sub.add_parser("analyze", parents=[common], help="tau pyramid and smoothness report")
    a.add_argument("--system", help="system or pair JSON")
    a.add_argument("--function", help="function samples CSV")
    a.add_argument("--signal", choices=["sawtooth", "sqrt-abs"], help="builtin circle signal")

    l = sub.add_parser("lift", parents=[common], help="lift a function from system 2 to system 1")
    l.add_argument("--sys1")
    l.add_argument("--sys2")
    l.add_argument("--landmarks", help="landmark CSV")
    l.add_argument("--connection", help="connection JSON")
    l.add_argument("--function", help="function samples CSV on system 2")
    l.add_argument("--mode", choices=["tensor", "joint"])

    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("target", help="localization | frame | jacobi | gaussian")
    return ap


def resolve_config(args) -> dict:
    cfg = json.loads(json.dumps(DEFAULTS))
    if args.config:
        doc = sio.load_json(args.config)
        if not isinstance(doc, dict):
            raise sio.ParseError(f"{args.config}: config must be a JSON object")
        for key, val in doc.items():
            if key == "filter" and isinstance(val, dict):
                cfg["filter"].update(val)
            else:
                cfg[key] = val
    for key in ("epsilon", "k", "n", "levels", "tol", "seed", "trials", "normalization", "mode"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if args.p is not None:
        cfg["p"] = args.p
    if args.filter_order is not None:
        cfg["filter"]["order"] = args.filter_order
    if args.filter_profile is not None:
        cfg["filter"]["profile"] = args.filter_profile
    cfg["p"] = _p_value(cfg["p"])
    if not cfg["p"] >= 1:
        raise UsageError("p must be >= 1")
    if args.builtin:
        cfg["builtin"] = args.builtin
    return cfg


def _filter(cfg) -> LowPassFilter:
    try:
        return LowPassFilter.from_config(cfg["filter"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _json_cfg(cfg) -> dict:
    out = dict(cfg)
    if math.isinf(out["p"]):
        out["p"] = "inf"
    return out


def _report(cfg, command, status, tolerances, **payload) -> dict:
    doc = {"version": __version__, "command": command, "status": status,
           "config": _json_cfg(cfg), "tolerances": tolerances}
    doc.update(payload)
    return doc


def _emit(cfg, doc, name="report.json"):
    text = json.dumps(doc, indent=1, default=_default)
    if cfg.get("out"):
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)
    print(text)


def _default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(type(o).__name__)


def _outdir(cfg) -> Path | None:
    if not cfg.get("out"):
        return None
    p = Path(cfg["out"])
    p.mkdir(parents=True, exist_ok=True)
    return p


# signals on the circle ------------------------------------------------------

def circle_signal(name: str, theta) -> np.ndarray:
    t = np.pi - np.mod(np.pi - np.asarray(theta, dtype=float), 2 * np.pi)  # (-pi, pi]
    if name == "sawtooth":
        return t / 2.0
    if name == "sqrt-abs":
        return np.sqrt(np.abs(t))
    raise UsageError(f"unknown signal {name!r}")


# commands -------------------------------------------------------------------

def _summary(system) -> dict:
    lam = system.eigenvalues
    return {"name": system.name, "N": system.n_points, "K": system.n_modes,
            "lambda_min": float(lam[0]), "lambda_max": float(lam[-1]),
            "orthonormality_residual": orthonormality_residual(system),
            "provenance": system.provenance}


def cmd_build(args, cfg) -> int:
    out = _outdir(cfg)
    sources = [x for x in (args.points, args.matrix, args.edges) if x]
    if cfg.get("builtin") and sources or len(sources) > 1:
        raise UsageError("give exactly one of --builtin, --points, --matrix, --edges")
    if cfg.get("builtin") == "circle":
        n = cfg["n"] or 256
        k = cfg["k"] or 50
        system = build_circle_system(n, k)
        if out:
            sio.save_json(out / "system.json", sio.system_to_json(system))
        _emit(cfg, _report(cfg, "build", "ok", {}, systems=[_summary(system)]))
        return EXIT_OK
    if cfg.get("builtin") == "jacobi-pair":
        n = cfg["n"] or 64
        k = cfg["k"] or 8
        P = build_hemisphere_disc_pair(n, n, k, k)
        if out:
            sio.save_json(out / "hemisphere.json", sio.system_to_json(P.hemisphere))
            sio.save_json(out / "disc.json", sio.system_to_json(P.disc))
            sio.save_json(out / "connection.json", P.connection.to_json())
            sio.save_json(out / "lift_connection.json", P.lift_connection.to_json())
        _emit(cfg, _report(cfg, "build", "ok", {"orthonormality": 1e-6},
                           systems=[_summary(P.hemisphere), _summary(P.disc)],
                           metadata=P.metadata))
        return EXIT_OK
    if args.points:
        pts, w = sio.read_points_csv(args.points)
        k = cfg["k"] or min(len(pts), 20)
        system = build_undirected_system(pts, float(cfg["epsilon"]), int(k),
                                         normalization=cfg["normalization"], weights=w)
        if out:
            sio.save_json(out / "system.json", sio.system_to_json(system))
        _emit(cfg, _report(cfg, "build", "ok", {"orthonormality": 1e-8},
                           systems=[_summary(system)]))
        return EXIT_OK
    if args.matrix or args.edges:
        W = sio.read_matrix_csv(args.matrix) if args.matrix else sio.read_edge_list_csv(args.edges)
        if W.shape[0] != W.shape[1]:
            raise sio.ParseError(f"weight matrix must be square, got {W.shape}")
        pair = build_directed_pair(W, cfg["k"])
        if out:
            sio.save_json(out / "pair.json", sio.pair_to_json(pair))
        doc = _report(cfg, "build", "ok", {"orthonormality": 1e-8},
                      systems=[_summary(pair.base), _summary(pair.dual)],
                      undirected_degenerate=pair.undirected,
                      non_unique_isometry=pair.non_unique_isometry)
        _emit(cfg, doc)
        return EXIT_OK
    raise UsageError("build needs --builtin, --points, --matrix or --edges")


def _analysis_input(args, cfg):
    if cfg.get("builtin") == "circle":
        system = build_circle_system(cfg["n"] or 8192, cfg["k"] or 2047)
        if args.function:
            f = sio.read_function_csv(args.function)
        else:
            f = circle_signal(args.signal or "sawtooth", system.points[:, 0])
        return pair_from_system(system), f
    if not args.system or not args.function:
        raise UsageError("analyze needs --system and --function (or --builtin circle)")
    obj = sio.load_system_or_pair(args.system)
    f = sio.read_function_csv(args.function)
    pair = obj if isinstance(obj, DirectedPair) else pair_from_system(obj)
    if len(f) != pair.n_points:
        raise UsageError(f"function has {len(f)} samples, system has {pair.n_points} points")
    return pair, f


def cmd_analyze(args, cfg) -> int:
    pair, f = _analysis_input(args, cfg)
    h = _filter(cfg)
    if cfg["levels"] is not None:
        J = cfg["levels"]
    elif cfg.get("builtin") == "circle":
        # deepest level whose whole frequency band is stored
        J = int(math.floor(math.log2(pair.eigenvalues[-1] + 1)))
    else:
        J = dyadic_depth(pair.eigenvalues)
    p = cfg["p"]
    taus = tau_pyramid(pair, h, int(J), f)
    norms = [lp_norm(pair.base, t, p) for t in taus]
    payload = {"per_level_norms": norms, "levels": int(J)}
    if not pair.undirected or pair.base is not pair.dual:
        fc = frame_check(pair, h, f, J=int(J))
        payload["frame_check"] = {"sum_sq": fc.sum_sq, "energy": fc.energy,
                                  "lower_ok": fc.lower_ok, "upper_ok": fc.upper_ok}
    try:
        rep = classify_smoothness(norms, p, first_level=1)
        payload["smoothness"] = rep.to_json()
        status = "ok"
    except InsufficientLevelsError as exc:
        payload["smoothness"] = {"error": str(exc), "per_level_norms": norms,
                                 "p": "inf" if math.isinf(p) else p}
        status = "insufficient levels"
    out = _outdir(cfg)
    if out:
        sio.write_pyramid_csv(out / "pyramid.csv", taus)
        sio.save_json(out / "smoothness.json", payload["smoothness"])
    _emit(cfg, _report(cfg, "analyze", status, {"noise_floor": 1e-12}, **payload))
    return EXIT_OK


def cmd_lift(args, cfg) -> int:
    h = _filter(cfg)
    J = int(cfg["levels"] or 8)
    tol = float(cfg["tol"] or 1e-8)
    p = cfg["p"]
    extra = {}
    if cfg.get("builtin") == "jacobi-pair":
        n = cfg["n"] or 64
        k = cfg["k"] or 8
        P = build_hemisphere_disc_pair(n, n, k, k)
        sys1, sys2, A = P.hemisphere, P.disc, P.lift_connection
        if args.function:
            f = sio.read_function_csv(args.function)
        else:
            rng = np.random.default_rng(cfg["seed"])
            c = np.zeros(sys2.n_modes, dtype=complex)
            m = min(20, sys2.n_modes)
            c[:m] = rng.normal(size=m) + 1j * rng.normal(size=m)
            f = sys2.eigenfunctions @ c
        res = joint_lift(sys1, sys2, A, h, f, J, tol, p)
        # on the shared grid the usual lifting is f itself
        extra["pointwise_lift_error"] = float(np.max(np.abs(res.lift - f)))
        mode = "joint"
    else:
        if not (args.sys1 and args.sys2 and args.function):
            raise UsageError("lift needs --sys1, --sys2 and --function (or --builtin jacobi-pair)")
        sys1 = sio.system_from_json(sio.load_json(args.sys1))
        sys2 = sio.system_from_json(sio.load_json(args.sys2))
        f = sio.read_function_csv(args.function)
        if len(f) != sys2.n_points:
            raise UsageError(f"function has {len(f)} samples, system 2 has {sys2.n_points} points")
        mode = cfg["mode"]
        if args.connection:
            from .twosys import ConnectionMatrix
            A = ConnectionMatrix.from_json(sio.load_json(args.connection),
                                           shape=(sys1.n_modes, sys2.n_modes))
            if mode == "tensor":
                raise UsageError("tensor mode needs landmarks, not a connection")
            res = joint_lift(sys1, sys2, A, h, f, J, tol, p)
        elif args.landmarks:
            lm = sio.read_landmarks_csv(args.landmarks)
            gamma = landmark_connection(sys1, sys2, lm)
            if mode == "tensor":
                res = tensor_lift(sys1, sys2, gamma, h, f, J, tol, p)
            else:
                res = joint_lift(sys1, sys2, gamma, h, f, J, tol, p)
            jd = JointDistance.from_landmarks(sys1, sys2, lm)
            extra["joint_distance_range"] = [float(jd.table.min()), float(jd.table.max())]
        else:
            raise UsageError("lift needs --landmarks or --connection")
    out = _outdir(cfg)
    if out:
        sio.write_samples_csv(out / "lift.csv", res.lift)
    doc = _report(cfg, "lift", "converged" if res.converged else "not converged", {"tol": tol},
                  mode=mode, **res.to_json(), **extra)
    doc["lift_samples"] = sio.encode_array(np.asarray(res.lift, dtype=complex))
    _emit(cfg, doc, "lift.json")
    return EXIT_OK


def _random_directed(rng, n):
    W = rng.random((n, n))
    W[rng.random((n, n)) < 0.5] = 0.0
    return W


def verify_frame(cfg) -> tuple[bool, dict]:
    rng = np.random.default_rng(cfg["seed"])
    h = _filter(cfg)
    trials = int(cfg["trials"])
    nmax = int(cfg["n"] or 40)
    rtol = float(cfg["tol"] or 1e-9)
    viol, worst = 0, 0.0
    for _ in range(trials):
        n = int(rng.integers(2, nmax + 1))
        pair = build_directed_pair(_random_directed(rng, n))
        for _ in range(20):
            f = rng.normal(size=n)
            fc = frame_check(pair, h, f, rtol=rtol)
            viol += (not fc.lower_ok) + (not fc.upper_ok)
            if fc.sum_sq > 0:
                worst = max(worst, fc.energy / fc.sum_sq)
    return viol == 0, {"violations": viol, "worst_energy_ratio": worst, "trials": trials,
                       "functions_per_trial": 20, "tolerances": {"relative_slack": rtol}}


def verify_jacobi(cfg) -> tuple[bool, dict]:
    tol = float(cfg["tol"] or 1e-10)
    thetas = np.linspace(0, np.pi / 2, 50)
    worst = 0.0
    for a in (0, 1, 2, 3):
        for j in range(21):
            worst = max(worst, verify_jacobi_ultra(a, j, thetas).abs_diff)
    return worst < tol, {"max_abs_diff": worst, "tolerances": {"abs": tol}}


def verify_localization_cmd(cfg) -> tuple[bool, dict]:
    h = _filter(cfg)
    if cfg.get("builtin", "circle") != "circle":
        raise UsageError("localization check runs on the circle system")
    N = int(cfg["n"] or 512)
    K = int(cfg["k"] or 128)
    system = build_circle_system(N, K)
    pair = pair_from_system(system)
    j = int(round(N / (2 * np.pi)))  # point closest to distance 1
    r = system.distance(0, j)
    # log-spaced so each octave of n r in [4, 64] weighs the same in the fit
    ns = np.geomspace(4 / r, 64 / r, 33)
    mu = measure_from_pair(pair, 0, j)
    tol = float(cfg["tol"] or 0.75)
    rep = verify_localization(mu, h, 1.0, h.smoothness_order, r, ns, slope_tol=tol)
    if rep.status == "non-smooth filter":
        return False, rep.to_json() | {"tolerances": {"slope": tol}}
    return bool(rep.slope_ok), rep.to_json() | {"r": r, "tolerances": {"slope": tol}}


def verify_gaussian(cfg) -> tuple[bool, dict]:
    ts = 2.0 ** -np.arange(2, 6)
    if cfg.get("builtin") == "jacobi-pair":
        n = cfg["n"] or 48
        P = build_hemisphere_disc_pair(n, n, cfg["k"] or 16, cfg["k"] or 16)
        system, q_ref, tol = P.hemisphere, 2.0, float(cfg["tol"] or 0.5)
    else:
        system = build_circle_system(int(cfg["n"] or 512), int(cfg["k"] or 255))
        q_ref, tol = 1.0, float(cfg["tol"] or 0.3)
    fit = estimate_gaussian_bound(system, ts)
    ok = abs(fit.q_hat - q_ref) <= tol
    return ok, {"q_hat": fit.q_hat, "q_expected": q_ref, "c1_hat": fit.c1_hat, "c2_hat": fit.c2_hat,
                "max_violation": fit.max_violation, "t_grid": ts.tolist(),
                "tolerances": {"q": tol}}


VERIFY = {
    "frame": verify_frame,
    "jacobi": verify_jacobi,
    "localization": verify_localization_cmd,
    "gaussian": verify_gaussian,
}


def cmd_verify(args, cfg) -> int:
    fn = VERIFY.get(args.target)
    if fn is None:
        raise UsageError(f"unknown verify target {args.target!r}; choose from {sorted(VERIFY)}")
    ok, payload = fn(cfg)
    tol = payload.pop("tolerances", {})
    if "status" in payload:
        payload["check_status"] = payload.pop("status")
    _emit(cfg, _report(cfg, "verify " + args.target, "pass" if ok else "fail", tol, **payload))
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {"build": cmd_build, "analyze": cmd_analyze, "lift": cmd_lift, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args)
        cfg["out"] = args.out
        return COMMANDS[args.command](args, cfg)
    except (UsageError, sio.ParseError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (np.linalg.LinAlgError, ArithmeticError, FloatingPointError, RuntimeError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
