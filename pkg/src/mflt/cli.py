"""Command-line laboratory entry point.

Every subcommand reads its parameters from flags (optionally seeded from a
JSON config file; flags win), validates them without side effects, runs
one computation, and writes a manifest plus data artifacts.  Outputs are
byte-identical across reruns of the same configuration: no timestamps, no
wall-clock seeds, stable key order, and floats printed with 17 significant
digits.

Exit codes: 0 success, 2 invalid configuration, 3 cap or budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field

from . import __version__
from .errors import CapError
from .plane_tree import DEFAULT_ENUMERATION_CAP, enumerate_plane_trees, size_probability_exact
from .embedding import moment_sum_exact, two_point_coefficient_exact
from .genfun import two_point_hat
from .shapes import DEFAULT_SHAPE_CAP, enumerate_shapes
from .ise import A_hat, a_density, moment_char
from .scaling import lemma41_check, lemma42_check, moment_convergence_mc
from .wsaw import CENSUS_CAPS, ENUMERATION_CAPS, enumerate_lattice_trees, partition_function, q_mass_of_lattice_tree


def _fmt_float(x: float) -> str:
    return "%.17g" % x


@dataclass
class RunConfig:
    """One resolved CLI invocation: the subcommand plus its parameter map."""

    command: str
    params: dict = field(default_factory=dict)

    def manifest(self, outputs: list) -> dict:
        return {
            "command": self.command,
            "params": _jsonable(self.params),
            "version": __version__,
            "outputs": outputs,
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    return obj


@dataclass(frozen=True)
class Diagnostic:
    kind: str  # "missing" | "invalid" | "cap"
    message: str


def _parse_vector(text: str, typ=float) -> tuple:
    try:
        return tuple(typ(part) for part in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad vector {text!r}: {exc}")


def _parse_int_list(text: str) -> tuple:
    return _parse_vector(text, int)


def _parse_beta(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity"):
        return math.inf
    return float(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mflt",
        description="exact and Monte Carlo computations for mean-field lattice trees",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, flags):
        p = sub.add_parser(name, help=help_text)
        for args, kwargs in flags:
            p.add_argument(*args, **kwargs)
        p.add_argument("--out", type=str, default=None, help="output path stem")
        p.add_argument("--format", dest="fmt", choices=("csv", "json"), default=None)
        p.add_argument("--threads", type=int, default=None, help="worker cap for parallel parts")
        p.add_argument("--config", type=str, default=None, help="JSON file with defaults")
        return p

    n_flag = (("--n",), {"type": int, "default": None})
    d_flag = (("--d",), {"type": int, "default": None})
    add("enumerate-trees", "list all plane trees of a given size", [n_flag])
    add("size-dist", "exact size-law table", [
        (("--n-max",), {"type": int, "default": None}),
    ])
    add("two-point", "exact two-point coefficients on the lattice", [
        n_flag, d_flag,
        (("--include-depth",), {"action": "store_true", "default": False}),
    ])
    add("mpoint", "exact multi-point moment sums", [
        n_flag, d_flag,
        (("--l",), {"type": int, "default": None}),
        (("--x",), {"action": "append", "type": _parse_int_list, "default": None,
                    "help": "marked site (comma-separated ints); repeat l times"}),
    ])
    add("shapes", "enumerate canonical skeleton shapes", [
        (("--m",), {"type": int, "default": None}),
        (("--count-only",), {"action": "store_true", "default": False}),
    ])
    add("ise-eval", "ISE characteristic-function values", [
        (("--m",), {"type": int, "default": None}),
        (("--l",), {"type": int, "default": None}),
        (("--k",), {"action": "append", "type": _parse_vector, "default": None,
                    "help": "momentum vector (comma-separated floats); repeatable"}),
    ])
    add("genfun-eval", "closed-form generating-function values on a (z, zeta, k) grid", [
        d_flag,
        (("--k",), {"action": "append", "type": _parse_vector, "default": None}),
        (("--z",), {"action": "append", "type": float, "default": None}),
        (("--zeta",), {"action": "append", "type": float, "default": None}),
    ])
    add("scaling-lemma41", "full-coefficient asymptotics ratio check", [
        d_flag,
        (("--m",), {"type": int, "default": None}),
        (("--k",), {"action": "append", "type": _parse_vector, "default": None}),
        (("--n-grid",), {"type": _parse_int_list, "default": None}),
    ])
    add("scaling-lemma42", "fixed-backbone-length asymptotics ratio check", [
        d_flag,
        (("--k",), {"action": "append", "type": _parse_vector, "default": None}),
        (("--u",), {"type": float, "default": None}),
        (("--n-grid",), {"type": _parse_int_list, "default": None}),
    ])
    add("mc-moments", "Monte Carlo empirical moment characteristic functions", [
        n_flag, d_flag,
        (("--l",), {"type": int, "default": None}),
        (("--k",), {"action": "append", "type": _parse_vector, "default": None}),
        (("--samples",), {"type": int, "default": None}),
        (("--seed",), {"type": int, "default": None}),
        (("--batches",), {"type": int, "default": None}),
    ])
    add("wsaw", "weakly self-avoiding partition functions and masses", [
        n_flag, d_flag,
        (("--beta",), {"action": "append", "type": _parse_beta, "default": None}),
    ])
    add("lattice-count", "count lattice trees containing the origin", [
        n_flag, d_flag,
        (("--n-max",), {"type": int, "default": None}),
    ])
    return parser


_PARAM_NAMES = ("n", "d", "m", "l", "beta", "k", "seed", "samples", "out", "fmt",
                "threads", "n_max", "n_grid", "u", "x", "include_depth",
                "count_only", "batches", "z", "zeta", "k_grid", "y_grid", "t")


def config_from_args(args: argparse.Namespace) -> RunConfig:
    params = {}
    file_params = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            file_params = json.load(fh)
        if not isinstance(file_params, dict):
            raise ValueError("config file must hold a JSON object")
    for name in _PARAM_NAMES:
        flag_value = getattr(args, name, None)
        if flag_value is None or flag_value is False:
            if name in file_params:
                value = file_params[name]
                if name == "beta" and isinstance(value, list):
                    value = [math.inf if v == "inf" else float(v) for v in value]
                if name in ("k", "x") and isinstance(value, list):
                    value = [tuple(v) for v in value]
                if name == "n_grid" and isinstance(value, list):
                    value = tuple(value)
                params[name] = value
            elif flag_value is False:
                params[name] = False
        else:
            params[name] = flag_value
    return RunConfig(args.command, params)


_CAPS_NOTE = {
    "enumerate-trees": DEFAULT_ENUMERATION_CAP,
    "two-point": DEFAULT_ENUMERATION_CAP,
    "mpoint": DEFAULT_ENUMERATION_CAP,
    "size-dist": None,
}


def validate(config: RunConfig) -> list:
    """All problems with a configuration, without executing it."""
    p = config.params
    diags: list = []

    def need(name, cond=None):
        if p.get(name) is None:
            diags.append(Diagnostic("missing", f"{config.command} requires --{name.replace('_', '-')}"))
            return False
        if cond is not None and not cond(p[name]):
            diags.append(Diagnostic("invalid", f"--{name.replace('_', '-')} value {p[name]!r} is not valid"))
            return False
        return True

    cmd = config.command
    if p.get("fmt") not in (None, "csv", "json"):
        diags.append(Diagnostic("invalid", f"unknown format {p['fmt']!r}"))
    if p.get("threads") is not None and p["threads"] < 1:
        diags.append(Diagnostic("invalid", "--threads must be at least 1"))

    if cmd == "enumerate-trees":
        if need("n", lambda n: n >= 1) and p["n"] > DEFAULT_ENUMERATION_CAP:
            diags.append(Diagnostic(
                "cap", f"--n {p['n']} exceeds the exact enumeration cap {DEFAULT_ENUMERATION_CAP}"))
    elif cmd == "size-dist":
        need("n_max", lambda n: n >= 1)
    elif cmd == "two-point":
        if need("n", lambda n: n >= 1) and p["n"] > DEFAULT_ENUMERATION_CAP:
            diags.append(Diagnostic(
                "cap", f"--n {p['n']} exceeds the exact enumeration cap {DEFAULT_ENUMERATION_CAP}"))
        need("d", lambda d: d >= 1)
    elif cmd == "mpoint":
        if need("n", lambda n: n >= 1) and p["n"] > DEFAULT_ENUMERATION_CAP:
            diags.append(Diagnostic(
                "cap", f"--n {p['n']} exceeds the exact enumeration cap {DEFAULT_ENUMERATION_CAP}"))
        need("d", lambda d: d >= 1)
        if need("l", lambda l: l >= 1):
            if p.get("x") is not None and len(p["x"]) != p["l"]:
                diags.append(Diagnostic("invalid", f"--x must be given exactly {p['l']} times"))
    elif cmd == "shapes":
        if need("m", lambda m: m >= 2) and p["m"] > DEFAULT_SHAPE_CAP:
            diags.append(Diagnostic(
                "cap", f"--m {p['m']} exceeds the shape enumeration cap {DEFAULT_SHAPE_CAP}"))
    elif cmd == "ise-eval":
        if (p.get("m") is None) == (p.get("l") is None):
            diags.append(Diagnostic("invalid", "give exactly one of --m (edge momenta) or --l (external momenta)"))
        elif p.get("m") is not None:
            q = 2 * p["m"] - 3
            if p["m"] < 2:
                diags.append(Diagnostic("invalid", "--m must be at least 2"))
            elif p["m"] > 4:
                diags.append(Diagnostic("cap", "--m above 4 exceeds the default quadrature budget"))
            elif len(p.get("k") or ()) != q:
                diags.append(Diagnostic("invalid", f"--m {p['m']} needs {q} --k vectors"))
        else:
            if p["l"] < 1:
                diags.append(Diagnostic("invalid", "--l must be at least 1"))
            elif p["l"] > 3:
                diags.append(Diagnostic("cap", "--l above 3 exceeds the default quadrature budget"))
            elif len(p.get("k") or ()) != p["l"]:
                diags.append(Diagnostic("invalid", f"--l {p['l']} needs {p['l']} --k vectors"))
    elif cmd == "scaling-lemma41":
        need("d", lambda d: d >= 1)
        need("n_grid", lambda g: len(g) > 0 and all(n >= 1 for n in g))
        if len(p.get("k") or ()) != 1:
            diags.append(Diagnostic("invalid", "scaling-lemma41 needs exactly one --k vector"))
    elif cmd == "scaling-lemma42":
        need("d", lambda d: d >= 1)
        need("n_grid", lambda g: len(g) > 0 and all(n >= 1 for n in g))
        need("u", lambda u: u > 0)
        if len(p.get("k") or ()) != 1:
            diags.append(Diagnostic("invalid", "scaling-lemma42 needs exactly one --k vector"))
    elif cmd == "mc-moments":
        need("n", lambda n: n >= 1)
        need("d", lambda d: d >= 1)
        need("samples", lambda s: s >= 1)
        need("seed")  # explicit seeds only; no wall-clock defaults
        if need("l", lambda l: 1 <= l <= 3):
            if len(p.get("k") or ()) != p["l"]:
                diags.append(Diagnostic("invalid", f"--l {p['l']} needs {p['l']} --k vectors"))
    elif cmd == "wsaw":
        if need("d", lambda d: d >= 1) and p["d"] not in CENSUS_CAPS:
            diags.append(Diagnostic("cap", f"--d {p['d']} has no exact census cap (d <= 3)"))
        elif need("n", lambda n: n >= 1) and p.get("d") in CENSUS_CAPS \
                and p["n"] > CENSUS_CAPS[p["d"]]:
            diags.append(Diagnostic(
                "cap", f"--n {p['n']} exceeds the census cap {CENSUS_CAPS[p['d']]} for d={p['d']}"))
    elif cmd == "lattice-count":
        if need("d", lambda d: d >= 1) and p["d"] not in ENUMERATION_CAPS:
            diags.append(Diagnostic("cap", f"--d {p['d']} has no enumeration cap (d <= 3)"))
        else:
            n_top = p.get("n_max") or p.get("n")
            if n_top is None:
                diags.append(Diagnostic("missing", "lattice-count requires --n or --n-max"))
            elif p.get("d") in ENUMERATION_CAPS and n_top > ENUMERATION_CAPS[p["d"]]:
                diags.append(Diagnostic(
                    "cap", f"n={n_top} exceeds the enumeration cap {ENUMERATION_CAPS[p['d']]} for d={p['d']}"))
    return diags


def _write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(obj, sort_keys=True, indent=2))
        fh.write("\n")


def _write_csv(path: str, header: list, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def _emit(config: RunConfig, stem: str, fmt: str, header: list, rows: list,
          json_payload) -> list:
    """Write the data artifactplus manifest; returns the file list."""
    outputs = []
    if fmt == "csv":
        data_path = stem + ".csv"
        _write_csv(data_path, header, rows)
    else:
        data_path = stem + ".json"
        _write_json(data_path, json_payload)
    outputs.append(data_path)
    manifest_path = stem + ".manifest.json"
    _write_json(manifest_path, config.manifest([data_path]))
    outputs.append(manifest_path)
    for path in outputs:
        print(f"wrote {path}")
    return outputs


def _exact_cols(w) -> list:
    return [str(w.coeff.numerator), str(w.coeff.denominator), w.epow]


def _run_enumerate_trees(config: RunConfig) -> int:
    n = config.params["n"]
    trees = list(enumerate_plane_trees(n))
    print(f"{len(trees)} plane trees of size {n}")
    if config.params.get("out"):
        rows = [[i, " ".join(map(str, t.child_counts))] for i, t in enumerate(trees)]
        payload = {"n": n, "count": len(trees),
                   "trees": [list(t.child_counts) for t in trees]}
        _emit(config, config.params["out"], config.params.get("fmt") or "csv",
              ["index", "child_counts"], rows, payload)
    return 0


def _run_size_dist(config: RunConfig) -> int:
    n_max = config.params["n_max"]
    rows = []
    payload = []
    for n in range(1, n_max + 1):
        w = size_probability_exact(n)
        rows.append([n] + _exact_cols(w))
        payload.append({"n": n, "p": w.to_json()})
    if config.params.get("out"):
        _emit(config, config.params["out"], config.params.get("fmt") or "csv",
              ["n", "num", "den", "epow"], rows, payload)
    else:
        for row in rows:
            print(",".join(map(str, row)))
    return 0


def _run_two_point(config: RunConfig) -> int:
    n, d = config.params["n"], config.params["d"]
    if config.params.get("include_depth"):
        graded = two_point_coefficient_exact(n, d, include_depth=True)
        rows = []
        payload = {}
        for s in sorted(graded):
            payload[str(s)] = graded[s].to_json()
            for x, w in sorted(graded[s].support.items()):
                rows.append([s] + list(x) + _exact_cols(w))
        header = ["s"] + [f"x{i}" for i in range(d)] + ["num", "den", "epow"]
    else:
        dist = two_point_coefficient_exact(n, d)
        rows = [list(x) + _exact_cols(w) for x, w in sorted(dist.support.items())]
        payload = dist.to_json()
        header = [f"x{i}" for i in range(d)] + ["num", "den", "epow"]
    if config.params.get("out"):
        _emit(config, config.params["out"], config.params.get("fmt") or "csv",
              header, rows, payload)
    else:
        print(f"{len(rows)} support rows")
    return 0


def _run_mpoint(config: RunConfig) -> int:
    n, d, l = config.params["n"], config.params["d"], config.params["l"]
    xs_list = config.params.get("x")
    if xs_list is None:
        reach = range(-(n - 1), n)
        from itertools import product
        sites = [tuple(v) for v in product(reach, repeat=d)]
        xs_list = [combo for combo in product(sites, repeat=l)]
    else:
        xs_list = [tuple(tuple(x) for x in xs_list)]
    rows = []
    payload = []
    for xs in xs_list:
        w = moment_sum_exact(n, d, l, xs)
        if w.is_zero and config.params.get("x") is None:
            continue
        flat = [c for x in xs for c in x]
        rows.append(flat + _exact_cols(w))
        payload.append({"x": [list(x) for x in xs], "w": w.to_json()})
    header = [f"x{j}_{i}" for j in range(1, l + 1) for i in range(d)] + ["num", "den", "epow"]
    if config.params.get("out"):
        _emit(config, config.params["out"], config.params.get("fmt") or "csv",
              header, rows, payload)
    else:
        for row in rows:
            print(",".join(map(str, row)))
    return 0


def _run_shapes(config: RunConfig) -> int:
    m = config.params["m"]
    shapes = enumerate_shapes(m)
    if config.params.get("count_only"):
        print(len(shapes))
        return 0
    print(f"{len(shapes)} shapes for m={m}")
    if config.params.get("out"):
        rows = []
        for idx, s in enumerate(shapes):
            for l, u, v in s.edges:
                rows.append([idx, l, u, v])
        payload = [s.to_json() for s in shapes]
        _emit(config, config.params["out"], config.params.get("fmt") or "csv",
              ["shape", "label", "parent", "child"], rows, payload)
    return 0


def _run_ise_eval(config: RunConfig) -> int:
    ks = config.params.get("k") or ()
    if config.params.get("m") is not None:
        m = config.params["m"]
        shapes = enumerate_shapes(m)
        rows = [[i, _fmt_float(A_hat(s, tuple(ks)))] for i, s in enumerate(shapes)]
        header = ["shape", "value"]
        payload = [{"shape": i, "value": float(r[1])} for i, r in enumerate(rows)]
        label = f"A_hat m={m}"
    else:
        l = config.params["l"]
        value = moment_char(l, tuple(ks))
        rows = [[l, _fmt_float(value)]]
        header = ["l", "value"]
        payload = {"l": l, "value": value}
        label = f"moment_char l={l}"
    print(label + ": " + ", ".join(r[-1] for r in rows))
    if config.params.get("out"):
        _emit(config, config.params["out"], config.params.get("fmt") or "csv",
              header, rows, payload)
    return 0


def _ratio_artifacts(config: RunConfig, report) -> int:
    rows = [[n, _fmt_float(obs), _fmt_float(pred), _fmt_float(ratio)]
            for n, obs, pred, ratio in report.rows]
    print(f"{report.label}: max |ratio - 1| = {report.max_deviation:.6g}")
    if config.params.get("out"):
        _emit(config, config.params["out"], config.params.get("fmt") or "csv",
              ["n", "observed", "predicted", "ratio"], rows, report.to_json())
    return 0


def _run_lemma41(config: RunConfig) -> int:
    k = config.params["k"][0]
    report = lemma41_check(k, config.params["n_grid"], config.params["d"],
                           m=config.params.get("m") or 2)
    return _ratio_artifacts(config, report)


def _run_lemma42(config: RunConfig) -> int:
    k = config.params["k"][0]
    report = lemma42_check(k, config.params["u"], config.params["n_grid"],
                           config.params["d"])
    return _ratio_artifacts(config, report)


def _run_mc_moments(config: RunConfig) -> int:
    p = config.params
    report = moment_convergence_mc(
        p["n"], p["l"], p["k"], p["samples"], p["seed"], d=p["d"],
        batches=p.get("batches") or 100, threads=p.get("threads") or 1,
    )
    print(f"estimate {report.estimate:.6f} +- {report.std_error:.6f}"
          f" (target {report.target:.6f}, imag {report.imag_estimate:.2e})")
    if p.get("out"):
        rows = [[report.n, report.l, report.samples, report.seed,
                 _fmt_float(report.estimate), _fmt_float(report.std_error),
                 _fmt_float(report.imag_estimate), _fmt_float(report.imag_std_error),
                 _fmt_float(report.target)]]
        _emit(config, p["out"], p.get("fmt") or "csv",
              ["n", "l", "samples", "seed", "estimate", "std_error",
               "imag_estimate", "imag_std_error", "target"],
              rows, report.to_json())
    return 0


def _run_wsaw(config: RunConfig) -> int:
    p = config.params
    n, d = p["n"], p["d"]
    betas = [0.0] + sorted(b for b in (p.get("beta") or ()) if b not in (0.0, math.inf)) \
        + [math.inf]
    part_rows = []
    part_payload = []
    for beta in betas:
        z = partition_function(n, d, beta)
        if isinstance(z, float):
            part_rows.append([n, d, _fmt_float(beta), "", "", "", _fmt_float(z)])
            part_payload.append({"beta": beta, "z_float": z})
        else:
            label = "inf" if beta == math.inf else _fmt_float(beta)
            part_rows.append([n, d, label] + _exact_cols(z) + [""])
            part_payload.append({"beta": _jsonable(beta), "z": z.to_json()})
    trees = enumerate_lattice_trees(n, d)
    mass_rows = []
    mass_payload = []
    for idx, L in enumerate(trees):
        mass = q_mass_of_lattice_tree(L, math.inf)
        mass_rows.append([idx, json.dumps(L.to_json(), sort_keys=True),
                          str(mass.numerator), str(mass.denominator)])
        mass_payload.append({"bonds": L.to_json(),
                             "mass": {"num": str(mass.numerator), "den": str(mass.denominator)}})
    print(f"{len(trees)} lattice trees; Z rows for {len(betas)} beta values")
    if p.get("out"):
        stem = p["out"]
        fmt = p.get("fmt") or "csv"
        outputs = []
        if fmt == "csv":
            part_path, mass_path = stem + ".partition.csv", stem + ".masses.csv"
            _write_csv(part_path, ["n", "d", "beta", "num", "den", "epow", "z_float"], part_rows)
            _write_csv(mass_path, ["index", "bonds", "mass_num", "mass_den"], mass_rows)
        else:
            part_path, mass_path = stem + ".partition.json", stem + ".masses.json"
            _write_json(part_path, part_payload)
            _write_json(mass_path, mass_payload)
        outputs += [part_path, mass_path]
        manifest_path = stem + ".manifest.json"
        _write_json(manifest_path, config.manifest(outputs))
        outputs.append(manifest_path)
        for path in outputs:
            print(f"wrote {path}")
    return 0


def _run_lattice_count(config: RunConfig) -> int:
    p = config.params
    d = p["d"]
    ns = range(1, p["n_max"] + 1) if p.get("n_max") else [p["n"]]
    rows = []
    for n in ns:
        count = len(enumerate_lattice_trees(n, d))
        rows.append([n, d, count])
        print(count)
    if p.get("out"):
        payload = [{"n": r[0], "d": r[1], "count": r[2]} for r in rows]
        _emit(config, p["out"], p.get("fmt") or "csv", ["n", "d", "count"], rows, payload)
    return 0


_HANDLERS = {
    "enumerate-trees": _run_enumerate_trees,
    "size-dist": _run_size_dist,
    "two-point": _run_two_point,
    "mpoint": _run_mpoint,
    "shapes": _run_shapes,
    "ise-eval": _run_ise_eval,
    "scaling-lemma41": _run_lemma41,
    "scaling-lemma42": _run_lemma42,
    "mc-moments": _run_mc_moments,
    "wsaw": _run_wsaw,
    "lattice-count": _run_lattice_count,
}


def run(config: RunConfig) -> int:
    """Validate and execute a configuration; returns the process exit code."""
    diags = validate(config)
    if diags:
        for diag in diags:
            print(f"{diag.kind}: {diag.message}", file=sys.stderr)
        return 3 if all(d.kind == "cap" for d in diags) else 2
    try:
        return _HANDLERS[config.command](config)
    except CapError as exc:
        print(f"cap: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
