"""Command-line experiment runner.

    meanval run <config.json> [--seed N] [--out DIR] [--eps X] [--n-max N]
    meanval validate <config.json>

Exit codes: 0 converged (or strong mean value), 2 oscillating (or not
strong, or a failed invariance check), 3 iteration cap reached, 1 error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, _backend, asymptotics, exprlang, hilbert, measures, meanvalue, products
from .errors import ConfigInvalid, MeanValError
from .meanvalue import CONVERGED, OSCILLATING, ConvergenceCriteria, _jsonable

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE, EXIT_MAXITER = 0, 1, 2, 3


def load_schema() -> dict:
    return json.loads(resources.files("meanval").joinpath("schema/config.schema.json").read_text())


def validate_config(cfg) -> None:
    import jsonschema

    validator = jsonschema.Draft7Validator(load_schema())
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        path = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigInvalid(f"{path}: {e.message}")


# --- builders ------------------------------------------------------------------

def build_measure(spec: dict) -> measures.Measure:
    t = spec["type"]
    scale = spec.get("scale", 1.0)
    if t == "lebesgue":
        return measures.Density(spec.get("dim", 1), None, scale)
    if t == "density":
        return measures.Density(spec["dim"], exprlang.parse(spec["expr"], spec["dim"]), scale, spec["expr"])
    if t == "gaussian":
        return measures.gaussian(spec.get("dim", 1), scale)
    if t == "dirac":
        return measures.Dirac(spec["points"], spec.get("weights"), scale)
    if t == "counting":
        return measures.Counting(scale)
    terms = [build_measure(s) for s in spec["terms"]]
    total = terms[0]
    for m in terms[1:]:
        total = total + m
    return total


def build_renorm(spec: dict) -> measures.RenormSequence:
    t = spec["type"]
    dim = spec.get("dim", 1)
    if t == "cubes":
        u = measures.cubes(dim)
    elif t == "balls":
        u = measures.balls(dim, spec.get("norm", "euclidean"), spec.get("center"))
    elif t == "dyadic":
        u = measures.dyadic_cubes(dim, spec.get("base", 2.0))
    elif t == "prefixes":
        u = measures.prefixes()
    elif t == "sin_oscillation":
        u = measures.sin_oscillation_renorm()
    else:
        if len(spec["lower"]) != len(spec["upper"]):
            raise ConfigInvalid("renorm: lower and upper need the same length")
        lo = [exprlang.parse(s, 1) for s in spec["lower"]]
        hi = [exprlang.parse(s, 1) for s in spec["upper"]]

        def gen(n, lo=lo, hi=hi):
            x = np.array([[float(n)]])
            return measures.HyperRect([float(exprlang.evaluate(e, x)[0]) for e in lo],
                                      [float(exprlang.evaluate(e, x)[0]) for e in hi])

        u = measures.RenormSequence(gen, spec.get("label", "box"), len(lo))
    if "translate" in spec:
        u = measures.translate_renorm(u, spec["translate"])
    return u


def build_function(spec, dim: int):
    if isinstance(spec, list):
        return [exprlang.parse(s, dim) for s in spec]
    return exprlang.parse(spec, dim)


def build_criteria(cfg: dict) -> ConvergenceCriteria:
    c = cfg.get("criteria", {})
    return ConvergenceCriteria(c.get("eps", 1e-3), c.get("window", 5), c.get("n_max", 200))


def t_grid(spec) -> np.ndarray:
    if isinstance(spec, list):
        return np.array(spec, dtype=np.float64)
    return spec["start"] * spec["ratio"] ** np.arange(spec["count"])


def _status_code(status: str) -> int:
    return {CONVERGED: EXIT_OK, OSCILLATING: EXIT_NEGATIVE}.get(status, EXIT_MAXITER)


def _series_csv(results, labels) -> str:
    if len(results) == 1:
        return results[0].csv_text()
    out = io.StringIO()
    for i, (r, label) in enumerate(zip(results, labels)):
        lines = r.csv_text().splitlines()
        if i == 0:
            out.write("series," + lines[0] + "\n")
        for line in lines[1:]:
            out.write(f"{label},{line}\n")
    return out.getvalue()


# --- runners -------------------------------------------------------------------

def run_wmv(cfg, crit, seed):
    mu = build_measure(cfg["measure"])
    u = build_renorm(cfg["renorm"])
    res = meanvalue.wmv(build_function(cfg["f"], u.dim), mu, u, crit, cfg.get("tol"), seed,
                        aitken=cfg.get("aitken", False))
    return res.to_dict(), res.csv_text(), _status_code(res.status)


def run_mv_check(cfg, crit, seed):
    mu = build_measure(cfg["measure"])
    us = [build_renorm(s) for s in cfg["renorms"]]
    chk = meanvalue.mv_check(build_function(cfg["f"], us[0].dim), mu, us, crit, cfg.get("tol"), seed)
    report = {"strong": chk.strong, "max_gap": chk.max_gap, "value": chk.value,
              "per_renorm": {label: r.to_dict() for label, r in zip(chk.labels, chk.results)}}
    return report, _series_csv(chk.results, chk.labels), EXIT_OK if chk.strong else EXIT_NEGATIVE


def run_continuum(cfg, crit, seed):
    mu = build_measure(cfg["measure"])
    grid = t_grid(cfg["t_grid"])
    hw = exprlang.parse(cfg["box_halfwidth"], 1)
    crit = ConvergenceCriteria(crit.eps, crit.window, min(crit.n_max, len(grid) - 1))
    res = meanvalue.wmv_continuum(build_function(cfg["f"], mu.dim), mu, exprlang.parse(cfg["F"], mu.dim), grid,
                                  crit, cfg.get("tol"), seed,
                                  box=lambda t: float(exprlang.evaluate(hw, np.array([[t]]))[0]))
    return res.to_dict(), res.csv_text(), _status_code(res.status)


def run_cesaro(cfg, crit, seed):
    res = meanvalue.cesaro(exprlang.parse(cfg["seq"], 1), crit)
    return res.to_dict(), res.csv_text(), _status_code(res.status)


def run_asymptotics(cfg, crit, seed):
    mu, nu = build_measure(cfg["mu"]), build_measure(cfg["nu"])
    u = build_renorm(cfg["renorm"])
    tol = cfg.get("tol")
    cmp = asymptotics.compare(mu, nu, u, crit, tol, seed)
    report = {"comparison": cmp.to_dict()}
    code = EXIT_MAXITER if cmp.classification == asymptotics.UNDETERMINED else EXIT_OK
    if "rho" in cfg:
        comp = asymptotics.check_composition(mu, nu, build_measure(cfg["rho"]), u, crit, tol, seed)
        report["composition"] = comp.to_dict()
        report["composition_ok"] = comp.ok
        if not comp.ok:
            code = EXIT_NEGATIVE
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "ratio", "big_theta"])
    for (n, r), (_, t) in zip(cmp.history, cmp.theta_history):
        w.writerow([n, repr(float(r)), repr(float(t))])
    return report, buf.getvalue(), code


def _space(cfg):
    factors = [(build_measure(f["measure"]), build_renorm(f["renorm"])) for f in cfg.get("factors", [])]
    default = None
    if "default_factor" in cfg:
        d = cfg["default_factor"]
        default = (build_measure(d["measure"]), build_renorm(d["renorm"]))
    return products.ProductSpace(factors, default)


def _cyl(space, spec):
    support = sorted(set(spec["support"]))
    k = sum(space.dims(support))
    return products.CylindricalFunction(support, exprlang.parse(spec["kernel"], k))


def run_product(cfg, crit, seed):
    space = _space(cfg)
    if "cylindrical" in cfg:
        res = products.wmv_cylindrical(space, _cyl(space, cfg["cylindrical"]), crit, cfg.get("tol"), seed,
                                       check_enlargement=True)
    else:
        sched = products.ApproximantSchedule(tuple((_cyl(space, s), s.get("eps", 0.0)) for s in cfg["schedule"]))
        res = products.wmv_uniform_limit(space, sched, crit, cfg.get("tol"), seed)
    return res.to_dict(), res.csv_text(), _status_code(res.status)


def build_cylapprox(cfg) -> hilbert.CylApprox:
    terms = tuple((exprlang.parse(t["kernel"], t["dim"]), t["dim"], t.get("eps", 0.0)) for t in cfg["terms"])
    approx = hilbert.CylApprox(terms)
    for tr in cfg.get("transforms", []):
        if "scale" in tr:
            approx = hilbert.scale_transform(approx, tr["scale"])
        if "translate" in tr:
            approx = hilbert.translate_transform(approx, tr["translate"])
        if "unitary" in tr:
            approx = hilbert.unitary_transform(approx, np.array(tr["unitary"]), tr.get("carry_flag", True))
        if "restrict" in tr:
            approx = hilbert.restrict(approx, tr["restrict"])
    return approx


def run_hilbert(cfg, crit, seed):
    res = hilbert.wmv_hilbert(hilbert.HilbertModel(), build_cylapprox(cfg), crit, cfg.get("tol"), seed)
    return res.to_dict(), res.csv_text(), _status_code(res.status)


def run_homology(cfg, crit, seed):
    h = meanvalue.homology_nullity(cfg["a"], crit, cfg.get("tol", 1e-4), seed)
    report = {"value": h.value, "is_null": h.is_null, "eps_null": h.eps_null, "result": h.result.to_dict()}
    return report, h.result.csv_text(), _status_code(h.result.status)


# --- invariance suite ----------------------------------------------------------

SUITE_GROUPS = ("mixing", "scaling", "translation", "hilbert", "restriction")


def _gap(a, b) -> float:
    if a is None or b is None:
        return math.inf
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def invariance_suite(groups=SUITE_GROUPS, eps: float = 1e-3, seed: int = 0) -> list:
    """Rows ``{id, anchor, residual, tolerance, pass}``; the pass threshold is ``3*eps``.

    Values are computed with fixed internal accuracy, so ``eps = 0`` shows
    that some tolerance is needed.
    """
    tolerance = 3 * eps
    crit = ConvergenceCriteria(1e-4, 5, 60)
    leb1 = measures.lebesgue(1)
    dy1 = measures.dyadic_cubes(1)
    rows = []

    def add(cid, anchor, residual):
        rows.append({"id": cid, "anchor": anchor, "residual": residual, "tolerance": tolerance,
                     "pass": bool(residual <= tolerance)})

    f1 = "0.5 + 1/(1 + x0^2)"
    if "mixing" in groups:
        r = meanvalue.wmv_measure_sum(f1, leb1, measures.gaussian(1), dy1, crit, None, seed)
        add("mixing.lebesgue_gaussian", "mean under a sum of measures equals the theta-weighted mix", r.residual)
        r = meanvalue.wmv_measure_sum(f1, leb1, 3 * leb1, dy1, crit, None, seed)
        add("mixing.multiples", "mean under a sum of proportional measures", r.residual)
    if "scaling" in groups:
        base = meanvalue.wmv(f1, leb1, dy1, crit, None, seed).value
        for k in (0.5, 2.0, 10.0):
            add(f"scaling.k={k:g}", "mean is unchanged when the measure is multiplied by a constant",
                _gap(base, meanvalue.wmv(f1, k * leb1, dy1, crit, None, seed).value))
    if "translation" in groups:
        v = 1.5
        base = meanvalue.wmv(f1, leb1, dy1, crit, None, seed).value
        add("translation.shifted_renorm_1d", "mean over translated exhaustion",
            _gap(base, meanvalue.wmv(f1, leb1, measures.translate_renorm(dy1, [v]), crit, None, seed).value))
        add("translation.shifted_function_1d", "mean of translated function",
            _gap(base, meanvalue.wmv(f"0.5 + 1/(1 + (x0 - {v})^2)", leb1, dy1, crit, None, seed).value))
        f2 = "0.25 + exp(-x0^2 - x1^2)"
        leb2, k2 = measures.lebesgue(2), measures.cubes(2)
        c2 = ConvergenceCriteria(1e-4, 5, 200)
        base2 = meanvalue.wmv(f2, leb2, k2, c2, None, seed).value
        add("translation.shifted_renorm_2d", "mean over translated cubes",
            _gap(base2, meanvalue.wmv(f2, leb2, measures.translate_renorm(k2, [1.0, -0.5]), c2, None, seed).value))
    if "hilbert" in groups or "restriction" in groups:
        approx = hilbert.CylApprox((("1 + exp(-x0^2 - x1^2)", 2, 0.0),
                                    ("1 + exp(-x0^2 - x1^2 - x2^2)*(1 + 0.5*cos(x2))", 3, 0.0)))
        model = hilbert.HilbertModel()
        hc = ConvergenceCriteria(1e-3, 5, 200)
        base = hilbert.wmv_hilbert(model, approx, hc, None, seed).value
        if "hilbert" in groups:
            add("hilbert.scale", "integer dilation invariance",
                _gap(base, hilbert.wmv_hilbert(model, hilbert.scale_transform(approx, 2), hc, None, seed).value))
            add("hilbert.translation", "translation invariance along the flag",
                _gap(base, hilbert.wmv_hilbert(model, hilbert.translate_transform(approx, [0.5, -1.0, 0.25]),
                                               hc, None, seed).value))
            q = hilbert.rotation(0.7, 0, 2, 3)
            add("hilbert.unitary", "rotation invariance with the flag carried along",
                _gap(base, hilbert.wmv_hilbert(model, hilbert.unitary_transform(approx, q), hc, None, seed).value))
        if "restriction" in groups:
            add("restriction.subspace", "restriction to a subspace containing the flag",
                _gap(base, hilbert.wmv_hilbert(model, hilbert.restrict(approx, [0, 1, 2]), hc, None, seed).value))
    return rows


def run_suite(cfg, crit, seed):
    eps = cfg.get("eps", crit.eps)
    rows = invariance_suite(tuple(cfg.get("groups", SUITE_GROUPS)), eps, seed)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", "anchor", "residual", "tolerance", "pass"])
    for r in rows:
        w.writerow([r["id"], r["anchor"], repr(float(r["residual"])), repr(float(r["tolerance"])), r["pass"]])
    ok = all(r["pass"] for r in rows)
    return {"checks": rows, "all_pass": ok}, buf.getvalue(), EXIT_OK if ok else EXIT_NEGATIVE


RUNNERS = {
    "wmv": run_wmv, "mv_check": run_mv_check, "continuum": run_continuum, "cesaro": run_cesaro,
    "asymptotics": run_asymptotics, "product": run_product, "hilbert": run_hilbert,
    "homology": run_homology, "invariance_suite": run_suite,
}


def run_config(cfg: dict, out_dir, seed=None, eps=None, n_max=None) -> int:
    """Validate, run, write ``report.json`` and ``history.csv``; return the exit code."""
    validate_config(cfg)
    cfg = json.loads(json.dumps(cfg))
    if eps is not None:
        cfg.setdefault("criteria", {})["eps"] = eps
        if cfg["kind"] == "invariance_suite":
            cfg["eps"] = eps
    if n_max is not None:
        cfg.setdefault("criteria", {})["n_max"] = n_max
    seed = cfg.get("seed", 0) if seed is None else seed
    cfg["seed"] = seed
    crit = build_criteria(cfg)
    result, history, code = RUNNERS[cfg["kind"]](cfg, crit, seed)
    out = Path(out_dir or cfg.get("output", "."))
    out.mkdir(parents=True, exist_ok=True)
    report = {"kind": cfg["kind"], "result": _jsonable(result), "parameters": cfg, "version": __version__,
              "seed": seed, "backend": _backend.NAME, "exit_code": code}
    status = result.get("status") if isinstance(result, dict) else None
    if status:
        report["status"] = status
    (out / "report.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    (out / "history.csv").write_text(history)
    return code


def _load(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise ConfigInvalid(f"malformed JSON at line {e.lineno} column {e.colno}: {e.msg}") from e
    except OSError as e:
        raise ConfigInvalid(f"cannot read config: {e}") from e


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="meanval", description="Renormalized mean value experiments")
    sub = p.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--eps", type=float)
    r.add_argument("--n-max", type=int, dest="n_max")
    v = sub.add_parser("validate", help="schema check only")
    v.add_argument("config")
    args = p.parse_args(argv)
    try:
        cfg = _load(args.config)
        if args.cmd == "validate":
            validate_config(cfg)
            print("ok")
            return EXIT_OK
        code = run_config(cfg, args.out, args.seed, args.eps, args.n_max)
        print(Path(args.out or cfg.get("output", ".")) / "report.json")
        return code
    except MeanValError as e:
        print(f"error [{e.code}]: {e}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, TypeError, KeyError) as e:
        print(f"error [runtime]: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
