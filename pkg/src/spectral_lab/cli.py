"""Command-line front end: ``spectral-lab <command> [inputs] [flags]``.

Matrices are read from JSON files ``{"n", "re", "im"}`` and sigma-points from
``{"n", "re", "im"}`` with flat arrays. Results are written to stdout as JSON
with sorted keys, or as a flat ``key: value`` table.

Exit codes: 0 success, 1 error, 2 inconclusive certificate, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Any

import numpy as np

from . import bounds, discontinuity_lab as dl, gn_geometry as geo, lifting, matrix_core as mc
from .config import RunConfig
from .discs import AnalyticDisc
from .errors import CertificateFailed, SpectralLabError

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 64
SEED_ENV = "SPECTRAL_LAB_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _load(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _matrix(path: str) -> np.ndarray:
    return mc.matrix_from_json(_load(path))


def _point(path: str) -> np.ndarray:
    return geo.point_from_json(_load(path))


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _encode(obj: Any):
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _plain(x):
    if isinstance(x, list):
        return [_plain(v) for v in x]
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def _flatten(obj: Any, prefix: str = "") -> list[tuple[str, Any]]:
    if isinstance(obj, dict):
        out = []
        for k in sorted(obj):
            out += _flatten(obj[k], f"{prefix}.{k}" if prefix else str(k))
        return out
    return [(prefix, obj)]


def emit(result: dict, cfg: RunConfig, stream=None) -> None:
    stream = stream or sys.stdout
    text = json.dumps(result, sort_keys=True, default=_encode)
    if cfg.output == "json":
        stream.write(text + "\n")
        return
    for key, value in _flatten(json.loads(text)):
        stream.write(f"{key}: {json.dumps(value)}\n")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_sigma(args, cfg):
    return {"coords": geo.point_to_json(mc.sigma(_matrix(args.A)))}


def cmd_cyclic(args, cfg):
    A = _matrix(args.A)
    sd = mc.spectral_data(A, cfg.tol)
    return {
        "cyclic": mc.is_cyclic(A, cfg.tol, cfg.seed),
        "eigen": [{"value": e.value, "alg_mult": e.alg_mult, "geo_mult": e.geo_mult,
                   "min_mult": e.min_mult} for e in sd.eigen],
    }


def cmd_bharali(args, cfg):
    return {"value": bounds.bharali_lower(_matrix(args.A), _matrix(args.B), cfg.tol)}


def cmd_cara3(args, cfg):
    return {"value": geo.caratheodory_lb_G3(_point(args.s), _point(args.t), cfg.grid)}


def cmd_disc_search(args, cfg):
    s, t = _point(args.s), _point(args.t)
    alpha, disc = bounds.disc_search_upper(s, t, cfg.degree_for(s.size), cfg.restarts, cfg.seed)
    return {"alpha": alpha, "disc": disc.to_json()}


def cmd_lift(args, cfg):
    B, A = _matrix(args.B), _matrix(args.A)
    phi = AnalyticDisc.from_json(_load(args.phi))
    W = lifting.lift_through(B, A, phi, args.zeta0, cfg.tol, cfg.seed)
    out = {"verified": True, "n": W.n, "zeta0": args.zeta0}
    try:
        form, _ = lifting.nilpotent_normal_form(B, cfg.tol)
        out["F0"] = list(form.F0)
        out["degree_vector"] = list(lifting.degree_vector(form))
    except SpectralLabError:
        pass
    return out


def _spec(args) -> dl.PerturbationSpec:
    A1 = _matrix(args.A1) if getattr(args, "A1", None) else np.zeros((0, 0))
    return dl.PerturbationSpec(args.m, tuple(args.J), args.delta, A1)


def cmd_detcheck(args, cfg):
    d = dl.det_identity_details(_spec(args))
    return {"residual": d["residual"], "sigma": geo.point_to_json(d["sigma"]),
            "target": d["target"], "sign": d["sign"]}


def cmd_discont(args, cfg):
    return dl.discontinuity_certificate(_spec(args), tuple(args.j), cfg, not args.no_shrink).to_json()


def cmd_example51(args, cfg):
    return dl.example_5_1(args.eps, cfg, auto_shrink=args.shrink).to_json()


def cmd_example52(args, cfg):
    return dl.example_5_2(args.mu, cfg).to_json()


def cmd_green_chain(args, cfg):
    return dl.green_vs_lempert_chain(_matrix(args.A), args.mu, args.alpha, cfg)


def cmd_ball_radius(args, cfg):
    R = geo.ball_radius_in_Gn(args.n, cfg.directions, cfg.seed)
    return {"n": args.n, "R_safe": R, "directions": cfg.directions, "seed": cfg.seed}


COMMANDS = {
    "sigma": (cmd_sigma, "sigma-coordinates of a matrix"),
    "cyclic": (cmd_cyclic, "cyclicity test and eigenvalue multiplicities"),
    "bharali": (cmd_bharali, "spectral lower bound for l_Omega(A, B)"),
    "cara3": (cmd_cara3, "Caratheodory-type lower bound on G_3"),
    "disc-search": (cmd_disc_search, "explicit disc upper bound for l_G(s, t)"),
    "lift": (cmd_lift, "lift a polynomial disc through B and A"),
    "detcheck": (cmd_detcheck, "determinant identity of the perturbation"),
    "discont": (cmd_discont, "discontinuity certificate"),
    "example51": (cmd_example51, "first worked example (gap between Omega_3 and G_3)"),
    "example52": (cmd_example52, "second worked example (equality case)"),
    "green-chain": (cmd_green_chain, "Lempert function strictly above Green function"),
    "ball-radius": (cmd_ball_radius, "radius of a Euclidean ball inside G_n"),
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    d = RunConfig()
    common.add_argument("--tol", type=float, default=d.tol)
    common.add_argument("--grid", type=int, default=d.grid)
    common.add_argument("--degree", type=int, default=None)
    common.add_argument("--restarts", type=int, default=d.restarts)
    common.add_argument("--seed", type=int, default=d.seed)
    common.add_argument("--margin", type=float, default=d.margin)
    common.add_argument("--directions", type=int, default=d.directions)
    common.add_argument("--output", choices=("json", "table"), default=d.output)

    parser = _Parser(prog="spectral-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = {name: sub.add_parser(name, help=help_, parents=[common]) for name, (_, help_) in COMMANDS.items()}

    p["sigma"].add_argument("A")
    p["cyclic"].add_argument("A")
    for name in ("bharali",):
        p[name].add_argument("A")
        p[name].add_argument("B")
    for name in ("cara3", "disc-search"):
        p[name].add_argument("s")
        p[name].add_argument("t")
    p["lift"].add_argument("B")
    p["lift"].add_argument("A")
    p["lift"].add_argument("phi")
    p["lift"].add_argument("--zeta0", type=_complex, required=True)
    for name in ("detcheck", "discont"):
        p[name].add_argument("--m", type=int, required=True)
        p[name].add_argument("--J", type=int, nargs="*", default=[])
        p[name].add_argument("--delta", type=float, required=True)
        p[name].add_argument("--A1", default=None, help="matrix JSON for the invertible block")
    p["discont"].add_argument("--j", type=int, nargs="+", default=[10, 100])
    p["discont"].add_argument("--no-shrink", action="store_true")
    p["example51"].add_argument("--eps", type=float, default=0.1)
    p["example51"].add_argument("--shrink", action="store_true")
    p["example52"].add_argument("--mu", type=_complex, default=0.2)
    p["green-chain"].add_argument("A")
    p["green-chain"].add_argument("--mu", type=_complex, default=0)
    p["green-chain"].add_argument("--alpha", type=_complex, required=True)
    p["ball-radius"].add_argument("--n", type=int, required=True)
    return parser


def _config(args) -> RunConfig:
    seed = args.seed
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            seed = int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    try:
        return RunConfig(tol=args.tol, grid=args.grid, degree=args.degree, restarts=args.restarts,
                         seed=seed, margin=args.margin, output=args.output, directions=args.directions)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def dispatch(command: str, args, cfg: RunConfig, stream=None) -> int:
    func, _ = COMMANDS[command]
    try:
        result = func(args, cfg)
    except CertificateFailed as exc:
        emit({"conclusion": False, "error": str(exc), "diagnostics": exc.diagnostics}, cfg, stream)
        return EXIT_INCONCLUSIVE
    except (SpectralLabError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    emit(result, cfg, stream)
    if isinstance(result, dict) and result.get("conclusion") is False:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _config(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    return dispatch(args.command, args, cfg)


if __name__ == "__main__":
    sys.exit(main())
