"""Command-line front end.

    confsym [--config cfg.json] [--out report.json] [--seed 0] [--threads 1]
            [--exact] [--csv dump.csv] COMMAND key=value ...

Reports are JSON with a fixed field order: rationals as "num/den" strings,
floats with 17 significant digits.  Exit codes: 0 success, 1 usage or
parameter error, 2 failed verification (mismatch, non-convergence).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Integral

from .errors import ConfsymError, VerificationError

COMMANDS = ("spectrum", "zeta", "heat-fit", "invariants", "functional", "optimize",
            "branch", "discrete-spectrum", "cone")

EXIT_OK, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def parse_value(text):
    """'3' -> 3, '3/2' -> Fraction(3, 2), '0.5' -> 0.5, 'a,b' -> list, anything else stays a string."""
    if not isinstance(text, str):
        return text
    if "," in text:
        return [parse_value(t) for t in text.split(",") if t]
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(text)
    except ValueError:
        pass
    if "/" in text:
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError):
            return text
    try:
        return float(text)
    except ValueError:
        return text


def _plain(value):
    """JSON-compatible form of a parameter; Fractions become 'num/den'."""
    if isinstance(value, Fraction):
        return str(value) if value.denominator != 1 else str(value.numerator)
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


@dataclass
class RunConfig:
    command: str
    parameters: dict = field(default_factory=dict)
    seed: int = 0
    threads: int = 1
    exact: bool = False
    out: str | None = None
    csv: str | None = None

    def to_dict(self) -> dict:
        return {"command": self.command,
                "parameters": {k: _plain(self.parameters[k]) for k in sorted(self.parameters)},
                "seed": self.seed, "threads": self.threads, "exact": self.exact,
                "out": self.out, "csv": self.csv}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        params = {k: parse_value(v) if isinstance(v, str) else
                  [parse_value(x) for x in v] if isinstance(v, list) else v
                  for k, v in (d.get("parameters") or {}).items()}
        return cls(command=d.get("command", ""), parameters=params, seed=int(d.get("seed", 0)),
                   threads=int(d.get("threads", 1)), exact=bool(d.get("exact", False)),
                   out=d.get("out"), csv=d.get("csv"))

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="confsym", description="Spectral and representation-theoretic checks on conformal spheres.")
    # validated in resolve_config so that a config file may supply the command
    ap.add_argument("command", nargs="?", help=", ".join(COMMANDS))
    ap.add_argument("params", nargs="*", help="key=value parameters")
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--out", help="write the JSON report here instead of stdout")
    ap.add_argument("--threads", type=int, help="thread count exported to the BLAS runtime")
    ap.add_argument("--exact", action="store_true", default=None, help="rational output in CSV dumps")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--csv", help="CSV dump (spectrum lines, branching labels, optimizer trajectory)")
    ap.add_argument("--dump-config", action="store_true", help="print the resolved configuration and exit")
    return ap


def resolve_config(args) -> RunConfig:
    """Flags override the config file, which overrides defaults."""
    if args.config:
        with open(args.config) as fh:
            cfg = RunConfig.loads(fh.read())
    else:
        cfg = RunConfig(command="")
    params = list(args.params)
    if args.command and "=" in args.command:
        params.insert(0, args.command)
    elif args.command:
        cfg.command = args.command
    for item in params:
        if "=" not in item:
            raise UsageError(f"parameters must be key=value, got {item!r}")
        key, val = item.split("=", 1)
        cfg.parameters[key.strip()] = parse_value(val.strip())
    for name in ("seed", "threads", "out", "csv", "exact"):
        v = getattr(args, name)
        if v is not None:
            setattr(cfg, name, v)
    if cfg.command not in COMMANDS:
        raise UsageError(f"unknown or missing command {cfg.command!r}; choose from {', '.join(COMMANDS)}")
    if cfg.threads < 1:
        raise UsageError(f"--threads must be >= 1, got {cfg.threads}")
    if cfg.exact:
        cfg.parameters = {k: _exactify(v) for k, v in cfg.parameters.items()}
    return cfg


def _exactify(v):
    if isinstance(v, float) and math.isfinite(v):
        return Fraction(repr(v))
    if isinstance(v, list):
        return [_exactify(x) for x in v]
    return v


class UsageError(ConfsymError):
    pass


# ---------------------------------------------------------------------------
# report rendering
# ---------------------------------------------------------------------------

def _encode(obj, indent: int = 0) -> str:
    pad, inner = "  " * indent, "  " * (indent + 1)
    if hasattr(obj, "tolist"):  # numpy arrays and scalars
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_encode(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(_encode(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + _encode(v, indent + 1) for v in obj) + "\n" + pad + "]"
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, Fraction):
        return json.dumps(_plain(obj))
    if isinstance(obj, Integral):
        return str(int(obj))
    if isinstance(obj, float) or hasattr(obj, "__float__") and not isinstance(obj, str):
        x = float(obj)
        if not math.isfinite(x):
            return json.dumps(str(x))
        return format(x, ".17g")
    return json.dumps(str(obj))


def emit_report(results: dict) -> str:
    """Deterministic JSON text for a report dict (insertion order is kept)."""
    return _encode(results) + "\n"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

class Params:
    """Typed access to the key=value map; unknown keys are reported as usage errors."""

    def __init__(self, params: dict):
        self._p = dict(params)
        self._used = set()

    def get(self, key, default=None, kind=None):
        self._used.add(key)
        v = self._p.get(key, default)
        if v is None or kind is None:
            return v
        try:
            if kind is int:
                if isinstance(v, Fraction) and v.denominator == 1:
                    v = v.numerator
                if isinstance(v, float) and v.is_integer():
                    v = int(v)
                if not isinstance(v, Integral):
                    raise ValueError
                return int(v)
            if kind is float:
                return float(v)
            if kind is str:
                return str(v)
            if kind is list:
                return v if isinstance(v, list) else [v]
        except (TypeError, ValueError):
            raise UsageError(f"parameter {key}={v!r} is not a valid {kind.__name__}") from None
        return kind(v)

    def require(self, key, kind=None):
        if key not in self._p:
            raise UsageError(f"missing required parameter {key}=")
        return self.get(key, kind=kind)

    def check_unused(self):
        extra = sorted(set(self._p) - self._used)
        if extra:
            raise UsageError(f"unknown parameters: {', '.join(extra)}")


def _table(P: Params, K_default: int = 10):
    from .model_spectra import spectrum_table
    kind = P.get("op", P.get("kind", "laplace"), str)
    params = {}
    if kind != "integers":
        params["n"] = P.require("n", int)
    r = P.get("r", kind=int)
    if r is not None:
        params["r"] = r
    p = P.get("p")
    if p is not None:
        params["p"] = p
    table = spectrum_table(kind, params, P.get("K_max", K_default, int))
    scale = P.get("scale")
    return table.scaled(scale) if scale is not None else table


def cmd_spectrum(cfg: RunConfig, P: Params) -> dict:
    table = _table(P)
    if cfg.csv:
        table.to_csv(cfg.csv, exact=cfg.exact)
    return {"operator": table.kind, "params": {k: table.params[k] for k in sorted(table.params)},
            "dim": table.dim, "order": table.order,
            "lines": [{"k": ln.k, "eig": ln.eigenvalue, "mult": ln.multiplicity} for ln in table.lines]}


def _zeta_kw(P):
    return {"N": P.get("N", 24, int), "n_series": P.get("n_series", 64, int), "n_em": P.get("n_em", 12, int)}


def cmd_zeta(cfg: RunConfig, P: Params) -> dict:
    from .zeta_heat import direct_zeta_sum, spectral_zeta, zeta_report
    table = _table(P)
    kw = _zeta_kw(P)
    rep = zeta_report(table, **kw)
    out = {"operator": rep.operator, "n": rep.n, "d": rep.d, "coefficients": [],
           "zeta0": rep.zeta0_exact if rep.zeta0_exact is not None else rep.zeta0,
           "zeta0_float": rep.zeta0, "zeta_prime0": rep.zeta_prime0, "det": rep.det,
           "kernel_dim": rep.kernel_dim, "conformal_index": (rep.zeta0_exact if rep.zeta0_exact is not None
                                                            else rep.zeta0) + rep.kernel_dim}
    values = []
    for s in P.get("s", [], list):
        z = spectral_zeta(table, float(s), **kw)
        row = {"s": s, "zeta": z.value}
        if P.get("direct", False):
            row["direct_sum"] = direct_zeta_sum(table, float(s))
        values.append(row)
    out["values"] = values
    if P.get("fit", False):
        out["coefficients"] = _fit_rows(_fit(table, P))
    return out


def _fit(table, P):
    from .zeta_heat import heat_coefficients_fit
    return heat_coefficients_fit(table, t_min=P.get("t_min", kind=float), t_max=P.get("t_max", kind=float),
                                 num=P.get("num", 60, int), n_terms=P.get("n_terms", kind=int),
                                 residual_tol=P.get("residual_tol", 1e-9, float))


def _fit_rows(rep):
    return [{"power": pw, "value": float(c), "uncertainty": float(u)}
            for pw, c, u in zip(rep.powers, rep.coefficients, rep.uncertainties)]


def cmd_heat_fit(cfg: RunConfig, P: Params) -> dict:
    from .zeta_heat import heat_trace
    table = _table(P)
    rep = _fit(table, P)
    out = {"operator": rep.operator, "n": rep.n, "d": rep.d, "coefficients": _fit_rows(rep),
           "residual": rep.residual, "t_window": [float(rep.t_grid[0]), float(rep.t_grid[-1])]}
    ts = P.get("t", [], list)
    if ts:
        out["trace"] = [{"t": t, "value": heat_trace(table, float(t))} for t in ts]
    return out


# named scalar quantities; each entry: (callable taking Params, description)
def _invariant_registry():
    import numpy as np
    from . import flat_model as fm
    from . import model_spectra as ms
    from . import sphere_geometry as sg
    from . import specfun as sf
    from . import zeta_heat as zh

    def i(P, k):
        return P.require(k, int)

    def num(P, k):
        v = P.require(k)
        return v if isinstance(v, (int, Fraction)) else float(v)

    def quadrature(P):
        rule = sg.quadrature_rule(i(P, "n"), i(P, "L"))
        x1 = rule.nodes[:, 0]
        return {"size": rule.size, "volume": rule.volume, "exactness_degree": rule.exactness_degree,
                "second_moment_x1": rule.integrate(x1 ** 2)}

    def constant_coefficient(P):
        n, L = i(P, "n"), i(P, "L")
        rule = sg.quadrature_rule(n, L)
        c = sg.analyze(np.full(rule.size, float(P.get("value", 1.0))), rule, L)
        return {"coefficients": c.coeffs, "degree_energy": c.degree_energy()}

    def linear_energy(P):
        n, L = i(P, "n"), i(P, "L")
        rule = sg.quadrature_rule(n, L)
        c = sg.analyze(rule.nodes[:, n], rule, L)
        return {"degree_energy": c.degree_energy()}

    def round_trip(P):
        n, L = i(P, "n"), i(P, "L")
        f = sg.BandlimitedFunction.random(n, L, np.random.default_rng(P.get("seed_fn", 0, int)))
        rule = sg.quadrature_rule(n, L)
        g = sg.analyze(sg.synthesize(f, rule.nodes), rule, L)
        return float(np.max(np.abs(g.coeffs - f.coeffs)))

    def conformal_fields(P):
        n = i(P, "n")
        fields = sg.conformal_vector_fields(n)
        pts = sg.random_unit_vectors(n, 16, np.random.default_rng(0))
        return {"count": len(fields), "labels": [X.label for X in fields],
                "max_conformal_factor_rotations": max(float(np.max(np.abs(X.conformal_factor(pts))))
                                                      for X in fields if X.label.startswith("rot"))}

    def mobius_identity(P):
        n = i(P, "n")
        y = sg.random_unit_vectors(n, 4, np.random.default_rng(0))
        z, omega = sg.mobius_action(sg.ConformalMap.identity(n), y)
        return {"max_point_error": float(np.max(np.abs(z - y))), "max_factor_error": float(np.max(np.abs(omega - 1)))}

    def heat_trace(P):
        return zh.heat_trace(_table(P), P.require("t", float))

    def integrated_U(P):
        n = i(P, "n")
        a = P.get("a")
        a = zh.yamabe_coupling(n) if a is None else a
        return zh.integrated_heat_invariant(i(P, "i"), n, float(a))

    def U(P):
        n = i(P, "n")
        a = P.get("a")
        a = zh.yamabe_coupling(n) if a is None else a
        return zh.heat_invariant_U(i(P, "i"), n, float(a), zh.round_sphere_curvature(n))

    def embedding(P):
        zp = [Fraction(v) for v in P.get("zp", [0], list)]
        zpp = [Fraction(v) for v in P.get("zpp", [0], list)]
        x, y = fm.parabolic_embedding(zp, zpp)
        return {"x": list(x), "y": list(y), "null_defect": fm.null_defect(x, y)}

    return {
        "log_gamma": lambda P: sf.log_gamma(float(P.require("x"))),
        "gamma_ratio": lambda P: sf.gamma_ratio(float(P.require("a")), float(P.require("b"))),
        "bessel_k": lambda P: sf.bessel_k(float(P.require("nu")), float(P.require("x"))),
        "sphere_volume": lambda P: sf.sphere_volume(i(P, "n")),
        "quadrature": quadrature,
        "constant_coefficient": constant_coefficient,
        "linear_energy": linear_energy,
        "round_trip": round_trip,
        "conformal_fields": conformal_fields,
        "mobius_identity": mobius_identity,
        "harmonic_dim": lambda P: ms.harmonic_dim(i(P, "p"), i(P, "k")),
        "laplace_eigenvalue": lambda P: ms.laplace_eigenvalue(i(P, "n"), i(P, "k")),
        "yamabe_eigenvalue": lambda P: ms.yamabe_eigenvalue(i(P, "n"), i(P, "k")),
        "gjms_eigenvalue": lambda P: ms.gjms_eigenvalue(i(P, "n"), i(P, "r"), i(P, "k")),
        "knapp_stein_gamma": lambda P: ms.knapp_stein_gamma(i(P, "n"), num(P, "p"), i(P, "k")),
        "hls_constant": lambda P: ms.hls_constant(i(P, "n"), num(P, "p")),
        "log_sobolev_coeff": lambda P: ms.log_sobolev_coeff(i(P, "n"), i(P, "k")),
        "universal_hessian_eigenvalue": lambda P: ms.universal_hessian_eigenvalue(i(P, "n"), i(P, "j"), i(P, "q")),
        "helmholtz_numbers": lambda P: ms.helmholtz_numbers(i(P, "n")),
        "gjms_factorization_poly": lambda P: ms.gjms_factorization_poly(i(P, "n")),
        "round_sphere_curvature": lambda P: list(zh.round_sphere_curvature(i(P, "n"))),
        "heat_invariant_U": U,
        "integrated_heat_invariant": integrated_U,
        "heat_trace": heat_trace,
        "cone_measure_weight": lambda P: fm.cone_measure_weight(i(P, "p"), i(P, "q"), num(P, "r")),
        "bessel_ktype_v0": lambda P: fm.bessel_ktype_v0(i(P, "p"), i(P, "q"), float(P.require("r")),
                                                         P.get("convention", "euclidean", str)),
        "parabolic_embedding": embedding,
    }


def cmd_invariants(cfg: RunConfig, P: Params) -> dict:
    registry = _invariant_registry()
    name = P.require("name", str)
    if name not in registry:
        raise UsageError(f"unknown invariant {name!r}; known: {', '.join(sorted(registry))}")
    value = registry[name](P)
    return {"name": name, "args": {k: v for k, v in sorted(P._p.items()) if k != "name"}, "value": value}


def _input_function(cfg: RunConfig, P: Params, n: int, L: int):
    """Band-limited input: random (seeded), zero, constant or a Mobius log-factor."""
    import numpy as np
    from .conformal_lab import MobiusLogFactor
    from .sphere_geometry import BandlimitedFunction
    source = P.get("input", "random", str)
    if source == "random":
        return BandlimitedFunction.random(n, L, np.random.default_rng(cfg.seed), scale=P.get("scale", 0.3, float))
    if source == "zero":
        return BandlimitedFunction.zeros(n, L)
    if source == "constant":
        return BandlimitedFunction.constant(n, L, P.get("c", 1.0, float))
    if source == "mobius":
        m = MobiusLogFactor.along(n, P.get("axis", 0, int), P.get("rapidity", 0.5, float))
        return m.to_bandlimited(max(L, P.get("band", 20, int)))
    raise UsageError(f"input must be random, zero, constant or mobius, got {source!r}")


def cmd_functional(cfg: RunConfig, P: Params) -> dict:
    import numpy as np
    from . import conformal_lab as cl
    from .sphere_geometry import BandlimitedFunction, conformal_vector_fields
    kind = P.require("kind", str)
    n, L = P.get("n", 2, int), P.get("L", 2, int)
    F = _input_function(cfg, P, n, L)
    terms, value = {}, None
    if kind in ("onofri_endpoint", "log_sobolev", "hls_spectral"):
        if kind == "onofri_endpoint" and P.get("input", "random", str) == "mobius":
            F = F * 2.0
        if kind == "log_sobolev":
            F = cl.normalize_l2(F)
        rep = cl.sharp_inequality_deficit(kind, F, p=P.get("p"))
        value, terms = rep.value, dict(rep.terms)
    elif kind in ("S1", "S2", "beckner"):
        bv = cl.beckner_functionals_S4(F, betas=tuple(P.get("betas", list(cl.DEFAULT_BETAS), list)))
        terms = {"S1": bv.S1, "S2": bv.S2, "det_ratio": bv.det_ratio}
        value = {"S1": bv.S1, "S2": bv.S2, "beckner": bv.S1 + bv.S2}[kind]
    elif kind == "polyakov":
        pred = cl.polyakov_prediction(F)
        value = pred.functional
        terms = {"area_ratio": pred.area_ratio, "log_det_ratio_normalized": pred.log_det_ratio_normalized,
                 "log_det_ratio_bare": pred.log_det_ratio_bare}
    elif kind == "gauss_bonnet":
        value = cl.gauss_bonnet(F)
        terms = {"target": 4 * math.pi, "error": abs(value - 4 * math.pi)}
    elif kind == "covariance":
        f = BandlimitedFunction.random(n, L, np.random.default_rng(cfg.seed + 1))
        value = cl.yamabe_covariance_residual(n, F, f)
    elif kind == "pohozaev":
        method = P.get("method", "direct", str)
        res = {X.label: cl.pohozaev_residual(n, F, X, method=method) for X in conformal_vector_fields(n)}
        value, terms = max(res.values()), res
    elif kind == "variation":
        vc = cl.variation_check_U1(F, h=P.get("h", 1e-3, float), a=P.get("a", 0.0, float))
        value = vc.gap
        terms = {"lhs": vc.lhs, "rhs": vc.rhs, "error_estimate": vc.error_estimate, "step": vc.step}
    else:
        raise UsageError(f"unknown functional kind {kind!r}")
    return {"functional": kind, "n": n, "L": L, "value": value, "terms": terms, "iterations": 0}


def cmd_optimize(cfg: RunConfig, P: Params) -> dict:
    from .conformal_lab import extremal_search
    kind = P.get("kind", "onofri_endpoint", str)
    n = P.get("n", 2 if kind == "onofri_endpoint" else 4, int)
    L = P.get("L", 2, int)
    seed = None if P.get("input", "random", str) == "zero" else cfg.seed
    res = extremal_search(kind, n, L, seed=seed, scale=P.get("scale", 0.1, float),
                          max_iter=P.get("max_iter", 500, int), tol=P.get("tol", 1e-5, float),
                          trajectory_path=cfg.csv)
    traj = res.trajectory
    return {"functional": kind, "n": n, "L": L, "value": res.value, "iterations": res.iterations,
            "terms": {}, "trajectory": {"length": len(traj), "initial_value": traj[0][1],
                                        "final_value": traj[-1][1], "final_grad_norm": traj[-1][2]},
            "omega": res.omega.coeffs}


def cmd_branch(cfg: RunConfig, P: Params) -> dict:
    from . import minrep_branching as mb
    kind = P.get("kind", "verify", str)
    if kind == "verify":
        p, q = P.require("p", int), P.require("q", int)
        q1, q2 = P.require("q1", int), P.require("q2", int)
        cutoff = P.get("cutoff", 12, int)
        rep = mb.branching_verify_compact(p, q, q1, q2, cutoff)
        if cfg.csv:
            rep.lhs.to_csv(cfg.csv, header=["m", "b1", "b2", "mult"])
        out = {"signature": list(rep.signature), "cutoff": cutoff, "lhs_count": rep.lhs_count,
               "rhs_count": rep.rhs_count, "equal": rep.equal}
        if not rep.equal:
            w = rep.witnesses[0]
            out["first_mismatch"] = {"label": list(w["label"]), "lhs": w["lhs"], "rhs": w["rhs"]}
        out["contributing_l"] = rep.contributing_l()
        out["plancherel"] = [{"l": l, "lambda": lam} for l, lam in sorted(rep.plancherel.items())]
        out["excluded"] = rep.excluded
        if not rep.equal:
            out["_exit"] = EXIT_VERIFY
        return out
    if kind == "minrep":
        p, q = P.require("p", int), P.require("q", int)
        ks = mb.minrep_ktypes(p, q, P.get("cutoff", 12, int))
        if cfg.csv:
            ks.to_csv(cfg.csv, header=["a", "b", "mult"])
        return {"kind": kind, "signature": [p, q], "ktypes": [list(k) for k in ks.labels()],
                "norm_factors": [mb.norm_factor(p, a) for a, _ in ks.labels()]}
    if kind == "elliptic":
        p, q = P.require("p", int), P.require("q", int)
        ks = mb.elliptic_rep_ktypes(p, q, P.require("lam"), P.get("cutoff", 12, int), P.get("sign", "+", str))
        if cfg.csv:
            ks.to_csv(cfg.csv, header=["m", "n", "mult"])
        return {"kind": kind, "signature": [p, q], "lambda": ks.descriptor["lambda"], "b": ks.descriptor["b"],
                "discrete_series": ks.descriptor["discrete_series"], "ktypes": [list(k) for k in ks.labels()]}
    if kind == "harmonic":
        q1, q2, b = P.require("q1", int), P.require("q2", int), P.require("b", int)
        return {"kind": kind, "q1": q1, "q2": q2, "b": b,
                "pairs": [[b1, b2, m] for b1, b2, m in mb.harmonic_branching(q1, q2, b)],
                "dimension_gap": mb.branching_dimension_gap(q1, q2, b)}
    raise UsageError(f"branch kind must be verify, minrep, elliptic or harmonic, got {kind!r}")


def cmd_discrete_spectrum(cfg: RunConfig, P: Params) -> dict:
    from .minrep_branching import discrete_spectrum_params
    sig = [P.require(k, int) for k in ("p1", "q1", "p2", "q2")]
    lam_max = P.require("lam_max")
    params = discrete_spectrum_params(*sig, lam_max)
    return {"signature": sig, "lam_max": lam_max,
            "params": [{"lambda": lam, "orientation": "".join(o)} for lam, o in params]}


def cmd_cone(cfg: RunConfig, P: Params) -> dict:
    import warnings

    import numpy as np
    from . import flat_model as fm
    p, q = P.require("p", int), P.require("q", int)
    convention = P.get("convention", "euclidean", str)
    out = {"p": p, "q": q}
    if (p + q) % 2 == 0 and p + q > 4 and p >= q >= 2:
        nrm = fm.v0_norm_sq(p, q, convention=convention)
        out["v0_norm_sq"] = nrm.value
        out["radial_integral"] = nrm.radial_integral
        out["convention"] = convention
    else:
        out["v0_norm_sq"] = None
    n = p + q - 2
    rng = np.random.default_rng(cfg.seed)
    psi = fm.bump_density(p, q, direction=rng.standard_normal(n), sharpness=P.get("sharpness", 0.5, float))
    h = P.get("h", 1e-2, float)
    min_order = P.get("min_order", 1.9, float)
    samples = []
    for _ in range(P.get("samples", 3, int)):
        x = rng.uniform(-1, 1, n)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            rep = fm.ultrahyperbolic_residual(lambda pts: fm.synthesize_solution(psi, pts), x, h, p, q)
        samples.append({"x": list(x), "h": h, "residual": rep.residual, "residual_half": rep.residual_half,
                        "order": rep.order})
    out["residual_samples"] = samples
    orders = [s["order"] for s in samples]
    out["min_order"] = min(orders) if orders else None
    if orders and min(orders) < min_order:
        out["_exit"] = EXIT_VERIFY
    return out


HANDLERS = {"spectrum": cmd_spectrum, "zeta": cmd_zeta, "heat-fit": cmd_heat_fit,
            "invariants": cmd_invariants, "functional": cmd_functional, "optimize": cmd_optimize,
            "branch": cmd_branch, "discrete-spectrum": cmd_discrete_spectrum, "cone": cmd_cone}


def run(cfg: RunConfig) -> tuple[int, str]:
    """Execute a resolved configuration; returns (exit code, report text)."""
    P = Params(cfg.parameters)
    try:
        results = HANDLERS[cfg.command](cfg, P)
        P.check_unused()
        code = results.pop("_exit", EXIT_OK)
        status = "ok" if code == EXIT_OK else "verification_failed"
        error = None
    except VerificationError as exc:
        results, code, status, error = {}, EXIT_VERIFY, "verification_failed", str(exc)
    except (UsageError, ValueError, KeyError, TypeError) as exc:
        results, code, status, error = {}, EXIT_USAGE, "usage_error", f"{type(exc).__name__}: {exc}"
    except ConfsymError as exc:
        # numerical failures (no convergence, conditioning) count as failed verification
        results, code, status, error = {}, EXIT_VERIFY, "verification_failed", f"{type(exc).__name__}: {exc}"
    report = {"command": cfg.command, "status": status}
    if error is not None:
        report["error"] = error
    report.update(results)
    report["config"] = {"parameters": {k: _plain(v) for k, v in sorted(cfg.parameters.items())},
                        "seed": cfg.seed, "threads": cfg.threads, "exact": cfg.exact}
    return code, emit_report(report)


def _set_threads(k: int):
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(k)


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_intermixed_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args)
    except (UsageError, OSError, ValueError) as exc:
        print(f"confsym: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.dump_config:
        print(cfg.dumps())
        return EXIT_OK
    # takes effect only if numpy has not been loaded yet in this process
    _set_threads(cfg.threads)
    code, text = run(cfg)
    try:
        if cfg.out:
            with open(cfg.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"confsym: error: cannot write report: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if code != EXIT_OK:
        first = json.loads(text).get("error")
        if first:
            print(f"confsym: {first}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
