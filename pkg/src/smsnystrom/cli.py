"""Command-line front end.

Subcommands: ``gen``, ``spectrum``, ``histogram``, ``approx``, ``sweep``,
``embed`` and ``extend``.  Any flag may also come from a JSON file passed
with ``--config``; flags given on the command line win.  The default seed is
read from ``SMSNYSTROM_SEED`` (0 when unset).

Exit codes: 0 success, 2 bad parameters, 3 I/O or file-format errors,
4 numerical failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import algorithms as alg
from . import evaluation as ev
from . import generators as gen
from .core import (
    DenseOracle,
    IndexSample,
    MatrixFormatError,
    NumericError,
    ParameterError,
    PreconditionError,
    SimApproxError,
    make_rng,
    symmetrize_oracle,
)
from .linalg import DEFAULT_RCOND, min_eigenvalue
from .matrix_io import format_float, read_matrix, write_matrix

SEED_ENV = "SMSNYSTROM_SEED"
EXIT_PARAM, EXIT_IO, EXIT_NUMERIC = 2, 3, 4

APPROX_METHODS = ("nystrom", "sms", "sms-rescaled", "skeleton", "sicur",
                  "stacur-s", "stacur-d", "optimal")
EMBED_METHODS = ("nystrom", "sms", "sms-rescaled", "skeleton", "sicur", "stacur-s", "stacur-d")

REQUIRED = {
    "gen": ("kind", "n", "out"),
    "spectrum": ("matrix", "out"),
    "histogram": ("matrix", "sample", "out"),
    "approx": ("matrix", "method", "s1", "report"),
    "sweep": ("matrix", "methods", "fractions", "out"),
    "embed": ("matrix", "method", "s1", "out"),
    "extend": ("landmarks", "similarities", "out"),
}


class UsageError(ParameterError):
    pass


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _csv_list(cast):
    def parse(text):
        try:
            return [cast(x) for x in str(text).split(",") if x.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return parse


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with default flag values")

    parser = argparse.ArgumentParser(
        prog="smsnystrom",
        description="Sublinear approximation of indefinite similarity matrices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("gen", parents=[common], help="generate a similarity matrix file")
    p.add_argument("kind", nargs="?", choices=("psd", "planted", "expdist"))
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--profile", help='planted spectrum, e.g. "45:0.5..1,5:-0.1..-0.001"')
    p.add_argument("--eigenvalues", type=_csv_list(float), help="explicit planted spectrum")
    p.add_argument("--dim", type=int, default=2, help="expdist point dimension")
    p.add_argument("--gamma", type=float, default=1.0, help="expdist decay rate")
    p.add_argument("--format", choices=("csv", "binary"))
    p.add_argument("--analyze", action="store_true", help="print symmetry and spectrum summary")
    p.add_argument("--out")
    subs["gen"] = p

    p = sub.add_parser("spectrum", parents=[common], help="eigenvalues by magnitude")
    p.add_argument("--matrix")
    p.add_argument("--from", dest="from_rank", type=int, default=1)
    p.add_argument("--to", dest="to_rank", type=int)
    p.add_argument("--out")
    subs["spectrum"] = p

    p = sub.add_parser("histogram", parents=[common], help="pooled eigenvalues of sampled blocks")
    p.add_argument("--matrix")
    p.add_argument("--sample", type=int)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--out")
    p.add_argument("--bins-out", help="binned summary CSV (default: OUT with .bins.csv)")
    subs["histogram"] = p

    p = sub.add_parser("approx", parents=[common], help="approximate a matrix and report the error")
    _method_flags(p, APPROX_METHODS)
    p.add_argument("--out-factor", help="write the factor matrices (.npz)")
    p.add_argument("--report", help="ErrorReport CSV")
    p.add_argument("--timing", action="store_true",
                   help="fill the wall_time column (left empty otherwise, for reproducible output)")
    subs["approx"] = p

    p = sub.add_parser("sweep", parents=[common], help="error versus sample fraction")
    p.add_argument("--matrix")
    p.add_argument("--methods", type=_csv_list(str))
    p.add_argument("--fractions", type=_csv_list(float))
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha", type=float, default=1.5)
    p.add_argument("--rcond", type=float, default=DEFAULT_RCOND)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out")
    subs["sweep"] = p

    p = sub.add_parser("embed", parents=[common], help="write point embeddings and landmarks")
    _method_flags(p, EMBED_METHODS)
    p.add_argument("--out")
    p.add_argument("--landmarks-out", help="landmark JSON (default: OUT with .landmarks.json)")
    subs["embed"] = p

    p = sub.add_parser("extend", parents=[common], help="embed new points from landmark similarities")
    p.add_argument("--landmarks")
    p.add_argument("--similarities",
                   help="CSV rows: point id (negative for new points), then one value per landmark")
    p.add_argument("--out")
    subs["extend"] = p
    return parser, subs


def _method_flags(p, methods):
    p.add_argument("--matrix")
    p.add_argument("--method", choices=methods)
    p.add_argument("--s1", type=int)
    p.add_argument("--s2", type=int)
    p.add_argument("--alpha", type=float, default=1.5)
    p.add_argument("--shift-mode", choices=alg.SHIFT_MODES, default="clamped")
    p.add_argument("--sampling", choices=("nested", "independent"),
                   help="skeleton sampling (default independent)")
    p.add_argument("--seed", type=int)
    p.add_argument("--rcond", type=float, default=DEFAULT_RCOND)


def parse_args(argv) -> argparse.Namespace:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    sp = subs[args.command]
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise MatrixFormatError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        known = {a.dest for a in sp._actions}
        defaults = {}
        for key, value in cfg.items():
            dest = key.replace("-", "_")
            if dest == "from":
                dest = "from_rank"
            elif dest == "to":
                dest = "to_rank"
            if dest not in known or dest in ("help", "config"):
                raise UsageError(f"unknown config key {key!r} for {args.command}")
            if dest in ("methods", "fractions", "eigenvalues") and isinstance(value, str):
                value = _csv_list(float if dest != "methods" else str)(value)
            defaults[dest] = value
        sp.set_defaults(**defaults)
        args = parser.parse_args(argv)
    missing = [name for name in REQUIRED[args.command] if getattr(args, name, None) is None]
    if missing:
        raise UsageError(f"{args.command}: missing required option(s): "
                         + ", ".join("--" + m.replace("_", "-") for m in missing))
    if getattr(args, "seed", "absent") is None:
        args.seed = _default_seed()
    return args


def _load_oracle(path) -> DenseOracle:
    return DenseOracle(read_matrix(path))


def _open_out(path):
    try:
        return open(path, "w", encoding="ascii", newline="\n")
    except OSError as exc:
        raise MatrixFormatError(f"cannot write {path}: {exc}") from exc


def _write_rows(path, header, rows):
    with _open_out(path) as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format_float(x)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_gen(args):
    if args.n < 1:
        raise UsageError("--n must be positive")
    if args.kind == "psd":
        oracle = gen.random_psd(args.n, args.seed)
    elif args.kind == "planted":
        if args.eigenvalues is not None:
            oracle = gen.planted_spectrum(args.n, args.eigenvalues, args.seed)
        elif args.profile is not None:
            oracle = gen.planted_profile(args.n, args.profile, args.seed)
        else:
            raise UsageError("planted needs --profile or --eigenvalues")
    else:
        if args.dim < 1:
            raise UsageError("--dim must be positive")
        points = make_rng(args.seed, "points").standard_normal((args.n, args.dim))
        oracle = gen.exp_distance_oracle(points, args.gamma)
    K = oracle.dense()
    try:
        write_matrix(args.out, K, args.format)
    except OSError as exc:
        raise MatrixFormatError(f"cannot write {args.out}: {exc}") from exc
    if args.analyze:
        sym = bool(DenseOracle(K).symmetric_hint)
        print(f"n={K.shape[0]}")
        print(f"symmetric={str(sym).lower()}")
        if sym:
            count, mass = ev.negativity_summary(K)
            print(f"lambda_min={format_float(min_eigenvalue(K))}")
            print(f"negative_count={count}")
            print(f"negative_mass_fraction={format_float(mass)}")
    return 0


def cmd_spectrum(args):
    K = read_matrix(args.matrix)
    prof = ev.spectrum_profile(K, args.from_rank, args.to_rank)
    _write_rows(args.out, ("rank", "eigenvalue"),
                ((str(args.from_rank + k), format_float(v)) for k, v in enumerate(prof)))
    return 0


def cmd_histogram(args):
    oracle = _load_oracle(args.matrix)
    hist = ev.eigen_histogram(oracle, args.sample, args.trials, args.seed, args.bins)
    idx = np.tile(np.arange(args.sample), args.trials)
    _write_rows(args.out, ("trial", "index", "eigenvalue"),
                ((str(t), str(i), format_float(v))
                 for t, i, v in zip(hist.trial, idx, hist.eigenvalues)))
    bins_out = args.bins_out or _with_suffix(args.out, ".bins.csv")
    _write_rows(bins_out, ("bin_left", "bin_right", "count"),
                ((format_float(lo), format_float(hi), str(int(c)))
                 for lo, hi, c in zip(hist.edges[:-1], hist.edges[1:], hist.counts)))
    return 0


def _with_suffix(path, suffix):
    root, ext = os.path.splitext(path)
    return (root if ext.lower() == ".csv" else path) + suffix


def _method_name(method, shift_mode):
    if method == "sms" and shift_mode == "verbatim":
        return "sms-verbatim"
    if method == "sms-rescaled" and shift_mode == "verbatim":
        raise UsageError("sms-rescaled supports only the clamped shift mode")
    return method


def cmd_approx(args):
    oracle = _load_oracle(args.matrix)
    method = _method_name(args.method, args.shift_mode)
    if method.startswith("sms") and args.s2 is not None and args.s2 < args.s1:
        raise UsageError("sms needs --s2 >= --s1")
    approx, rep = ev.evaluate_method(oracle, method, args.s1, args.s2, args.alpha, args.seed,
                                     args.rcond, sampling=args.sampling)
    alpha = rep.alpha
    _write_rows(args.report,
                ("method", "s1", "s2", "alpha", "seed", "rel_fro_error", "oracle_calls", "wall_time"),
                [(args.method if method != "sms-verbatim" else method, _cell(rep.s1), _cell(rep.s2),
                  _cell(alpha), _cell(rep.seed), _cell(rep.rel_fro_error),
                  _cell(rep.oracle_calls), _cell(rep.wall_time) if args.timing else "")])
    if args.out_factor:
        _save_factor(args.out_factor, approx)
    return 0


def _save_factor(path, approx):
    if isinstance(approx, alg.NystromFactor):
        arrays = dict(kind="nystrom", Z=approx.Z, signs=approx.signs,
                      landmarks=approx.landmarks.indices, inner_root=approx.inner_root,
                      shift=approx.shift, alpha=approx.alpha, rescale_beta=approx.rescale_beta)
    elif isinstance(approx, alg.CURFactor):
        arrays = dict(kind=approx.method, C=approx.C, U=approx.U, R=approx.R,
                      col_landmarks=approx.col_landmarks.indices,
                      row_landmarks=approx.row_landmarks.indices)
    else:
        arrays = dict(kind="optimal", vectors=approx.vectors, values=approx.values)
    try:
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)
    except OSError as exc:
        raise MatrixFormatError(f"cannot write {path}: {exc}") from exc


def cmd_sweep(args):
    oracle = _load_oracle(args.matrix)
    reports = ev.error_sweep(oracle, args.methods, args.fractions, args.trials, args.seed,
                             args.alpha, args.rcond, threads=args.threads)
    rows = ev.summarize(reports)
    _write_rows(args.out, ("method", "fraction", "s1", "s2", "mean_err", "std_err", "mean_calls"),
                ((r.method, format_float(r.fraction), _cell(r.s1), _cell(r.s2),
                  format_float(r.mean_err), format_float(r.std_err), format_float(r.mean_calls))
                 for r in rows))
    return 0


def cmd_embed(args):
    oracle = _load_oracle(args.matrix)
    if not oracle.symmetric_hint:
        oracle = symmetrize_oracle(oracle)
    method = _method_name(args.method, args.shift_mode)
    factor = ev.run_method(oracle, method, args.s1, args.s2, args.alpha, args.seed,
                           args.rcond, args.sampling)
    if isinstance(factor, alg.NystromFactor):
        try:
            Z = alg.embed_nystrom(factor)
        except NumericError as exc:
            raise NumericError(f"{exc} Hint: use --method sms for indefinite matrices.") from exc
        meta = {
            "kind": "nystrom",
            "method": factor.method,
            "n": factor.n,
            "landmarks": factor.landmarks.indices.tolist(),
            "shift": factor.shift,
            "alpha": factor.alpha,
            "rescale_beta": factor.rescale_beta,
            "inner_root": factor.inner_root.tolist(),
        }
    else:
        proj = alg.cur_projection(factor, args.rcond)
        Z = factor.C @ proj
        meta = {
            "kind": "cur",
            "method": factor.method,
            "n": factor.n,
            "landmarks": factor.col_landmarks.indices.tolist(),
            "row_landmarks": factor.row_landmarks.indices.tolist(),
            "shift": 0.0,
            "alpha": None,
            "rescale_beta": 1.0,
            "inner_root": proj.tolist(),
        }
    _write_embedding(args.out, np.arange(Z.shape[0]), Z)
    lm_out = args.landmarks_out or _with_suffix(args.out, ".landmarks.json")
    with _open_out(lm_out) as fh:
        json.dump(meta, fh, indent=1)
        fh.write("\n")
    return 0


def _write_embedding(path, ids, Z):
    header = ["index"] + [f"e{k + 1}" for k in range(Z.shape[1])]
    _write_rows(path, header,
                ([str(int(i))] + [format_float(v) for v in row] for i, row in zip(ids, Z)))


def _read_similarity_rows(path, width):
    try:
        with open(path, encoding="ascii") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except (OSError, UnicodeDecodeError) as exc:
        raise MatrixFormatError(f"cannot read {path}: {exc}") from exc
    ids, rows = [], []
    for k, ln in enumerate(lines):
        cells = ln.split(",")
        try:
            pid = int(cells[0])
            vals = [float(c) for c in cells[1:]]
        except ValueError:
            if k == 0:
                continue  # header
            raise MatrixFormatError(f"{path}: line {k + 1} is not numeric") from None
        if len(vals) != width:
            raise UsageError(f"{path}: line {k + 1} has {len(vals)} similarities, "
                             f"expected {width} (one per landmark)")
        ids.append(pid)
        rows.append(vals)
    return ids, np.array(rows, dtype=np.float64).reshape(len(rows), width)


def _landmark_factor(meta) -> tuple[alg.NystromFactor, int]:
    """Minimal factor carrying what extension needs, plus the original ``n``."""
    n = int(meta["n"])
    lm = IndexSample(meta["landmarks"], n)
    W = np.array(meta["inner_root"], dtype=np.float64).reshape(len(lm), -1)
    factor = alg.NystromFactor(Z=np.zeros((0, W.shape[1])), signs=np.ones(W.shape[1]),
                               landmarks=lm, inner_root=W, shift=float(meta["shift"] or 0.0))
    return factor, n


def cmd_extend(args):
    try:
        with open(args.landmarks, encoding="utf-8") as fh:
            meta = json.load(fh)
        factor, n = _landmark_factor(meta)
    except OSError as exc:
        raise MatrixFormatError(f"cannot read {args.landmarks}: {exc}") from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise MatrixFormatError(f"{args.landmarks}: malformed landmark file ({exc})") from exc
    ids, X = _read_similarity_rows(args.similarities, len(factor.landmarks))
    if not ids:
        _open_out(args.out).close()
        return 0
    out = np.array([alg.extend_embedding(factor, x, pid if 0 <= pid < n else None)
                    for pid, x in zip(ids, X)]).reshape(len(ids), factor.inner_root.shape[1])
    _write_embedding(args.out, ids, out)
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "spectrum": cmd_spectrum,
    "histogram": cmd_histogram,
    "approx": cmd_approx,
    "sweep": cmd_sweep,
    "embed": cmd_embed,
    "extend": cmd_extend,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code) if isinstance(exc.code, int) else EXIT_PARAM
    except (ParameterError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except (MatrixFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SimApproxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
