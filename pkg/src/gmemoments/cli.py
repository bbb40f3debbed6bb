"""Command-line entry point.

Verdicts live in the printed or written records. A nonzero exit status
only signals an operational problem (bad label, unreadable config,
unwritable output).
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from typing import Sequence

import numpy as np

from .catalog import MAP_LABELS, STATE_LABELS, MapSpec, UnknownLabel, parse_state
from .gme import build_gme_map, estimate_nu
from .maps import apply_on_sites, transposition_map
from .moments import compute_moments
from .qcore import SystemShape
from .realization import (MultiCopyObservable, build_term_observable, expectation_complex, phi_hat,
                          sample_expectation, second_moment_via_operators, swap_op, swap_triple,
                          third_moment_via_operators)
from .states import random_density
from .sweep import DETECTORS, SweepConfig, run_detect, run_sweep

EXIT_USAGE = 2
EXIT_IO = 3

DEFAULTS = {
    "state": "ghz3",
    "map": "transposition",
    "modify": "none",
    "n": None,
    "c": "auto",
    "orders": 3,
    "grid": "0,1,101",
    "tol": 5e-4,
    "seed": 0,
    "out": None,
    "format": None,
    "detectors": ",".join(DETECTORS),
    "trials": 500,
    "n_states": 20,
    "shots": 10000,
    "observable": "swap-triple",
}


def _add_shared(p: argparse.ArgumentParser):
    # defaults stay None so config-file values can fill the gaps
    p.add_argument("--config", help="flat key = value file mirroring the flags")
    p.add_argument("--state", help=f"state label: {', '.join(STATE_LABELS)}")
    p.add_argument("--map", help=f"base map: {', '.join(MAP_LABELS)}")
    p.add_argument("--modify", choices=["none", "sx"], help="post-apply sigma_x")
    p.add_argument("--n", type=int, help="number of sites (default: from the state)")
    p.add_argument("--c", help="GME constant: auto or a number")
    p.add_argument("--orders", type=int, help="highest Hankel order L")
    p.add_argument("--grid", help="sweep grid as min,max,points")
    p.add_argument("--tol", type=float, help="bisection tolerance")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=["csv", "json", "text"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gmemoments",
                                     description="GME detection from moments of positive maps")
    sub = parser.add_subparsers(dest="command", required=True)
    detect = sub.add_parser("detect", help="detector report for one state")
    sweep = sub.add_parser("sweep", help="threshold sweep over a state family")
    sweep.add_argument("--detectors", help=f"comma list from {', '.join(DETECTORS)}")
    verify = sub.add_parser("verify-realization",
                            help="compare operator-expectation moments with direct spectra")
    verify.add_argument("--n-states", dest="n_states", type=int)
    nu = sub.add_parser("nu", help="estimate the minimum output eigenvalue of id ⊗ map")
    nu.add_argument("--trials", type=int)
    sample = sub.add_parser("sample", help="finite-shot estimate of a multi-copy observable")
    sample.add_argument("--shots", type=int)
    sample.add_argument("--observable",
                        help="swap-triple, phi-hat:i,j (parties, 1-based) or term:i,j[,k] "
                             "(bipartition indices, 1-based)")
    for p in (detect, sweep, verify, nu, sample):
        _add_shared(p)
    return parser


def read_config(path: str) -> dict[str, str]:
    cp = configparser.ConfigParser(interpolation=None)
    with open(path, encoding="utf-8") as fh:
        cp.read_string("[cli]\n" + fh.read())
    return {k.replace("-", "_"): v for k, v in cp["cli"].items()}


def resolve(args: argparse.Namespace) -> dict:
    """Flags override config-file values, which override defaults."""
    file_vals = read_config(args.config) if args.config else {}
    unknown = set(file_vals) - set(DEFAULTS)
    if unknown:
        raise UnknownLabel(f"unknown config keys: {', '.join(sorted(unknown))}")
    out = dict(DEFAULTS)
    out.update(file_vals)
    out.update({k: v for k, v in vars(args).items() if v is not None and k in DEFAULTS})
    for key, conv in (("orders", int), ("seed", int), ("tol", float), ("trials", int),
                      ("n_states", int), ("shots", int)):
        out[key] = conv(out[key])
    if out["n"] is not None:
        out["n"] = int(out["n"])
    return out


def _map_spec(opts: dict) -> MapSpec:
    return MapSpec.parse(opts["map"], opts["modify"], opts["n"], opts["c"])


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_detect(opts: dict) -> None:
    rho = parse_state(opts["state"])
    report = run_detect(opts["state"], rho, _map_spec(opts), opts["orders"])
    if opts["format"] == "json":
        _emit(json.dumps(report.to_json(), indent=2) + "\n", opts["out"])
    else:
        _emit(report.to_text(), opts["out"])


def cmd_sweep(opts: dict) -> None:
    lo, hi, points = opts["grid"].split(",")
    fmt = opts["format"] or "csv"
    if fmt == "text":
        raise UnknownLabel("sweep output format must be csv or json")
    config = SweepConfig(
        family=opts["state"],
        map_spec=_map_spec(opts),
        detectors=tuple(d.strip() for d in opts["detectors"].split(",") if d.strip()),
        grid=(float(lo), float(hi), int(points)),
        bisection_tol=opts["tol"],
        output_path=opts["out"],
        output_format=fmt,
        seed=opts["seed"],
    )
    result = run_sweep(config)
    if opts["out"] is None:
        sys.stdout.write(result.json_text() if fmt == "json" else result.csv_text())
        sys.stderr.write(result.summary())
    else:
        sys.stdout.write(result.summary())


def verify_realization(n_states: int, seed: int) -> tuple[str, bool]:
    g = build_gme_map(3, transposition_map())
    shape = SystemShape.qubits(3)
    rng = np.random.default_rng(seed)
    d2 = d3 = dterm = 0.0
    for _ in range(n_states):
        rho = random_density(shape, int(rng.integers(2 ** 63)))
        m = compute_moments(g, rho, n_max=3)
        d2 = max(d2, abs(second_moment_via_operators(rho, g) - m.s(2)))
        d3 = max(d3, abs(third_moment_via_operators(rho, g) - m.s(3)))
    rho = random_density(shape, seed)
    outs = [_partial_t(g, k, rho) for k in range(3)]
    for i, j, k in np.ndindex(3, 3, 3):
        direct = np.trace(outs[i] @ outs[j] @ outs[k])
        obs = build_term_observable((i, j, k), g)
        dterm = max(dterm, abs(expectation_complex(obs, rho) - direct))
    ok2, ok3, okt = d2 < 1e-9, d3 < 1e-8, dterm < 1e-9
    lines = [
        f"states: {n_states} (seed {seed})",
        f"max |ds2|: {d2:.3e} {'PASS' if ok2 else 'FAIL'} (limit 1e-09)",
        f"max |ds3|: {d3:.3e} {'PASS' if ok3 else 'FAIL'} (limit 1e-08)",
        f"max |dterm| over 27 strings: {dterm:.3e} {'PASS' if okt else 'FAIL'} (limit 1e-09)",
        "overall: " + ("PASS" if ok2 and ok3 and okt else "FAIL"),
    ]
    return "\n".join(lines) + "\n", ok2 and ok3 and okt


def _partial_t(g, k, rho):
    return apply_on_sites(g.base, g.bipartitions[k].a_side, rho).matrix


def cmd_verify(opts: dict) -> None:
    text, _ = verify_realization(opts["n_states"], opts["seed"])
    _emit(text, opts["out"])


def cmd_nu(opts: dict) -> None:
    spec = _map_spec(opts)
    est = estimate_nu(spec.single_site(), trials=opts["trials"], seed=opts["seed"])
    text = (f"map: {spec.label}\nnu: {est.value:.12g}\ntrials: {est.trials}\n"
            f"refined: {'converged' if est.refined else 'step budget exhausted'}\n")
    _emit(text, opts["out"])


def parse_observable(label: str, rho) -> MultiCopyObservable:
    name, _, params = label.partition(":")
    idx = [int(x) - 1 for x in params.split(",") if x.strip()] if params else []
    if name == "swap-triple" and not idx:
        return swap_triple()
    if name == "phi-hat" and len(idx) == 2:
        n = rho.shape.n_sites
        if not all(0 <= i < n for i in idx) or idx[0] == idx[1]:
            raise UnknownLabel(f"phi-hat parties must be two distinct values in 1..{n}")
        sw, ph = swap_op(2), phi_hat(2)
        return MultiCopyObservable(2, 2, tuple(ph if u in idx else sw for u in range(n)))
    if name == "term" and idx:
        g = build_gme_map(rho.shape.n_sites, transposition_map())
        return build_term_observable(idx, g)
    raise UnknownLabel(f"unknown observable {label!r}; known: swap-triple, phi-hat:i,j, term:i,j[,k]")


def cmd_sample(opts: dict) -> None:
    rho = parse_state(opts["state"])
    obs = parse_observable(opts["observable"], rho)
    try:
        est = sample_expectation(obs, rho, opts["shots"], opts["seed"])
    except ValueError:
        # non-Hermitian three-copy term: its Hermitian part has the same expectation
        est = sample_expectation(obs.hermitian_part(), rho, opts["shots"], opts["seed"])
    text = (f"observable: {opts['observable']}\nstate: {opts['state']}\nshots: {est.shots}\n"
            f"mean: {est.mean:.12g}\nstderr: {est.stderr:.12g}\nexact: {est.exact:.12g}\n")
    _emit(text, opts["out"])


COMMANDS = {
    "detect": cmd_detect,
    "sweep": cmd_sweep,
    "verify-realization": cmd_verify,
    "nu": cmd_nu,
    "sample": cmd_sample,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve(args)
        COMMANDS[args.command](opts)
    except UnknownLabel as exc:
        parser.error(str(exc))
    except OSError as exc:
        print(f"gmemoments: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"gmemoments: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
