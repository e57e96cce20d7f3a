"""Command-line interface: ``topolasso betti|path|select|simulate``.

Exit codes: 0 success, 2 input error, 3 method failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .homology import betti_numbers
from .regression import (
    TEST, TRAIN, VALIDATION, Dataset, DegenerateColumnError, NotApplicableError, build_design,
    cv_lasso, lars_lasso_path, nonnegative_garrote, random_split, standardize_response,
)
from .selection import (
    BETTI_PRESETS, CriterionConfig, SelectionFailed, annotate_path, betti_weights, choose_by_error,
    maic, select_lars_ols, select_lasso, select_model, support_betti,
)
from .simulate import ConfigError, load_config, run_experiment
from .terms import (
    ModelSupport, TermParseError, enumerate_candidate_terms, hierarchical_closure,
    parse_term_file, to_simplicial_complex,
)

EXIT_OK, EXIT_INPUT, EXIT_METHOD = 0, 2, 3
SELECT_METHODS = ("cc", "lars-ols", "lasso", "cv", "nng", "maic")


class InputError(Exception):
    pass


class MethodError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    options: dict
    inputs: dict[str, str]
    seed: int | None
    version: str = __version__
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())


def digest(path: Path) -> str:
    return "sha256:" + hashlib.sha256(path.read_bytes()).hexdigest()


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def emit(args, stem: str, text: str, doc: dict) -> None:
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        write_atomic(out / f"{stem}.txt", text)
        write_atomic(out / f"{stem}.json", _json(doc))


def read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise InputError(f"{path} is not UTF-8 text") from None


def read_csv(path: str, response: str) -> Dataset:
    """Header row required; ``response`` names the response column, the rest are predictors."""
    rows = list(csv.reader(io.StringIO(read_text(path))))
    if not rows:
        raise InputError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if response not in header:
        raise InputError(f"{path}: no response column {response!r} (columns: {', '.join(header)})")
    values = []
    for r, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise InputError(f"{path}: row {r} has {len(row)} fields, header has {len(header)}")
        parsed = []
        for name, cell in zip(header, row):
            try:
                v = float(cell)
            except ValueError:
                raise InputError(f"{path}: non-numeric value {cell!r} at row {r}, column {name!r}") from None
            if not np.isfinite(v):
                raise InputError(f"{path}: non-finite value at row {r}, column {name!r}")
            parsed.append(v)
        values.append(parsed)
    if len(values) < 2:
        raise InputError(f"{path}: need at least 2 data rows")
    a = np.array(values)
    j = header.index(response)
    keep = [i for i in range(len(header)) if i != j]
    if not keep:
        raise InputError(f"{path}: no predictor columns")
    return Dataset(a[:, keep], a[:, j], names=tuple(header[i] for i in keep))


def _floats(text: str, what: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise InputError(f"bad {what}: {text!r}") from None


def resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get("TOPOLASSO_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise InputError(f"TOPOLASSO_SEED must be an integer, got {env!r}") from None


def parse_mu_grid(text: str | None) -> tuple[float, ...]:
    """An integer N means N+1 equispaced points on [0, 1]; otherwise a comma list."""
    if text is None:
        text = "100"
    if text.strip().isdigit():
        steps = int(text)
        if steps < 1:
            raise InputError("mu grid needs at least 1 step")
        return tuple(float(x) for x in np.linspace(0, 1, steps + 1))
    return _floats(text, "mu grid")


def parse_betti_weights(text: str | None, order: int) -> tuple[float, ...]:
    if text is None:
        text = "all"
    if text in BETTI_PRESETS:
        return betti_weights(text, order)
    w = _floats(text, "Betti weights")
    if len(w) > order:
        raise InputError(f"{len(w)} Betti weights given but Betti vectors have length {order}")
    return w + (0.0,) * (order - len(w))


def candidate_terms(p: int, order: int) -> ModelSupport:
    if not 1 <= order <= p:
        raise InputError(f"--order must be between 1 and the number of predictors ({p}), got {order}")
    return enumerate_candidate_terms(p, order)


def _fmt(x: float) -> str:
    s = f"{x:.2f}"
    return "0" if s in ("0.00", "-0.00") else s


def _set(labels) -> str:
    return "{" + ",".join(labels) + "}"


def _table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(header)]
    line = lambda cells: "  ".join(c.rjust(w) for c, w in zip(cells, widths)).rstrip()
    return "\n".join([line(header), line(["-" * w for w in widths])] + [line(r) for r in rows]) + "\n"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_betti(args) -> int:
    text = read_text(args.termfile)
    support = parse_term_file(text, args.p)
    closure = hierarchical_closure(support)
    cx = to_simplicial_complex(closure)
    if args.order is not None and args.order < 1:
        raise InputError("--order must be >= 1")
    max_dim = None if args.order is None else args.order - 1
    betti, summary = betti_numbers(cx, max_dim)
    doc = {
        "manifest": asdict(RunManifest("betti", {"order": args.order, "p": args.p},
                                       {args.termfile: digest(Path(args.termfile))}, None)),
        "support": support.index_lists(),
        "closure": closure.index_lists(),
        "f_vector": list(cx.f_vector()),
        "betti": list(betti),
    }
    lines = [
        f"support:  {_set(support.labels())}",
        f"closure:  {_set(closure.labels())}",
        "faces:    " + (", ".join(f"dim {d}: {c}" for d, c in enumerate(cx.f_vector())) or "none (void complex)"),
        f"betti:    ({','.join(str(b) for b in betti)})",
    ]
    emit(args, "betti", "\n".join(lines) + "\n", doc)
    return EXIT_OK


def _design(args, data: Dataset):
    terms = candidate_terms(data.p, args.order)
    try:
        dm = build_design(data, terms, interactions=args.interactions)
    except DegenerateColumnError as exc:
        raise InputError(str(exc)) from None
    return terms, dm


def cmd_path(args) -> int:
    data = read_csv(args.csvfile, args.response)
    terms, dm = _design(args, data)
    y, _, _ = standardize_response(data.y)
    path = lars_lasso_path(dm.columns, y, args.scaling, terms)
    order = terms.max_degree
    rows, entries = [], []
    for lam, coef in zip(path.lambdas, path.coefs):
        support = terms.subset(coef != 0)
        closure, betti = support_betti(support, order)
        entries.append({
            "lambda": float(lam),
            "coefficients": [float(c) for c in coef],
            "support": support.index_lists(),
            "closure": closure.index_lists(),
            "betti": list(betti),
        })
        rows.append([_fmt(lam)] + [_fmt(c) for c in coef] + [
            _set(support.labels()), _set(closure.labels()), "(" + ",".join(map(str, betti)) + ")"])
    header = ["lambda"] + terms.labels() + ["M", "closure", "betti"]
    doc = {
        "manifest": asdict(RunManifest("path", _opts(args), {args.csvfile: digest(Path(args.csvfile))}, None)),
        "terms": terms.index_lists(),
        "term_labels": terms.labels(),
        "variables": list(data.names),
        "scaling": args.scaling,
        "breakpoints": entries,
    }
    emit(args, "path", _table(header, rows), doc)
    return EXIT_OK


def _opts(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}


def cmd_select(args) -> int:
    seed = resolve_seed(args.seed)
    data = read_csv(args.csvfile, args.response)
    splits = _floats(args.splits, "splits")
    try:
        tags = random_split(data.n, splits, np.random.default_rng(seed))
    except ValueError as exc:
        raise InputError(str(exc)) from None
    counts = [int(np.sum(tags == s)) for s in (TRAIN, VALIDATION, TEST)]
    if counts[0] < 2 or counts[1] < 1:
        raise InputError(f"splits leave too few rows (train/validation/test = {counts})")
    data = Dataset(data.X, data.y, tags, data.names)
    terms, dm = _design(args, data)
    y, y_mean, y_scale = standardize_response(data.y, tags == TRAIN)
    X = {s: dm.part(s) for s in (TRAIN, VALIDATION, TEST)}
    ys = {s: y[tags == s] for s in (TRAIN, VALIDATION, TEST)}
    have_test = counts[2] > 0
    weights = parse_betti_weights(args.betti_weights, terms.max_degree)
    crit = CriterionConfig(parse_mu_grid(args.mu_grid), weights, "validation", args.mu_choice)
    methods = args.method or ["cc"]

    annotated = None

    def annotated_path():
        nonlocal annotated
        if annotated is None:
            path = lars_lasso_path(X[TRAIN], ys[TRAIN], args.scaling, terms)
            annotated = annotate_path(path, X[TRAIN], ys[TRAIN], X[VALIDATION], ys[VALIDATION], terms,
                                      None, X[TEST] if have_test else None, ys[TEST] if have_test else None)
        return annotated

    def test_mse(coef):
        if not have_test:
            return None
        pred = y_mean + y_scale * (X[TEST] @ coef)
        return float(np.mean((data.y[tags == TEST] - pred) ** 2))

    results = []
    for method in methods:
        try:
            if method == "cc":
                r = select_model(annotated_path(), crit, "cc")
            elif method == "maic":
                r = maic(annotated_path(), crit)
            elif method == "lars-ols":
                r = select_lars_ols(annotated_path())
            elif method == "lasso":
                r = select_lasso(annotated_path())
            elif method == "cv":
                cv = cv_lasso(X[TRAIN], ys[TRAIN], folds=args.folds, seed=seed, convention=args.scaling)
                results.append(_plain("cv", cv.lam, None, terms, cv.coef))
                continue
            elif method == "nng":
                g = nonnegative_garrote(X[TRAIN], ys[TRAIN])
                errs = [float(np.sum((ys[VALIDATION] - X[VALIDATION] @ c) ** 2)) for c in g.coefs]
                i = choose_by_error(errs)
                results.append(_plain("nng", float(g.lambdas[i]), None, terms, g.coefs[i]))
                continue
            doc = r.to_dict()
            results.append(doc)
        except (NotApplicableError, SelectionFailed) as exc:
            raise MethodError(f"{method}: {exc}") from None
    for doc in results:
        coef = np.array(doc["coefficients"])
        doc["test_mse"] = test_mse(coef)
        doc["selected_terms"] = [terms.terms[i].name(data.names) for i in np.flatnonzero(coef)]
    opts = _opts(args)
    opts.update(seed=seed, betti_weights=list(weights), mu_grid_size=len(crit.mu_grid), method=methods)
    primary = dict(results[0])
    primary["manifest"] = asdict(RunManifest("select", opts, {args.csvfile: digest(Path(args.csvfile))}, seed))
    primary["candidate_size"] = len(terms)
    primary["split_counts"] = dict(zip(("train", "validation", "test"), counts))
    primary["comparison"] = [
        {k: d[k] for k in ("method", "lambda_star", "mu_star", "support", "coefficients", "test_mse",
                           "selected_terms")}
        for d in results
    ]
    lines = [f"candidate terms: {len(terms)}  (train {counts[0]}, validation {counts[1]}, test {counts[2]})"]
    rows = []
    for d in results:
        mu = "" if d["mu_star"] is None else _fmt(d["mu_star"])
        mse = "n/a" if d["test_mse"] is None else f"{d['test_mse']:.4f}"
        rows.append([d["method"], _fmt(d["lambda_star"]), mu, str(len(d["support"])), mse])
    lines.append(_table(["method", "lambda", "mu", "terms", "test MSE"], rows).rstrip())
    for d in results:
        lines.append(f"{d['method']}: " + (", ".join(d["selected_terms"]) or "(none)"))
    emit(args, "select", "\n".join(lines) + "\n", primary)
    return EXIT_OK


def _plain(method, lam, mu, terms: ModelSupport, coef) -> dict:
    support = terms.subset(np.asarray(coef) != 0)
    return {
        "method": method, "lambda_star": lam, "mu_star": mu,
        "support": support.index_lists(), "support_labels": support.labels(),
        "candidate_terms": terms.index_lists(),
        "coefficients": [float(c) for c in coef],
        "betti_per_breakpoint": [], "criterion_surface": [], "mu_grid": [], "notes": [],
    }


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None or "TOPOLASSO_SEED" in os.environ:
        cfg = replace(cfg, seed=resolve_seed(args.seed))
    if args.replications is not None:
        cfg = replace(cfg, replications=args.replications)
    if args.jobs < 1:
        raise InputError("--jobs must be >= 1")
    report = run_experiment(cfg, jobs=args.jobs)
    doc = report.to_dict()
    src = Path(args.config)
    inputs = {args.config: digest(src)} if src.is_file() else {args.config: "bundled"}
    doc["manifest"] = asdict(RunManifest("simulate", _opts(args), inputs, cfg.seed))
    emit(args, "simulate", report.to_text(), doc)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="topolasso", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"topolasso {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", metavar="DIR", help="also write .txt and .json reports here")

    def data_opts(p):
        p.add_argument("csvfile")
        p.add_argument("--response", required=True, help="name of the response column")
        p.add_argument("--order", type=int, required=True, help="maximum interaction order k")
        p.add_argument("--scaling", choices=("standard", "lars"), default="standard",
                       help="lambda convention: (1/2n) loss, or unit-norm columns as in R lars")
        p.add_argument("--interactions", choices=("standardized", "raw"), default="standardized",
                       help="build interactions from standardized or raw variables")

    p = sub.add_parser("betti", help="Betti numbers of the closure of a term list")
    p.add_argument("termfile")
    p.add_argument("--order", type=int, help="Betti vector length (default: closure dimension + 1)")
    p.add_argument("--p", type=int, help="number of variables (default: largest index)")
    common(p)
    p.set_defaults(func=cmd_betti)

    p = sub.add_parser("path", help="LASSO path with supports, closures and Betti numbers")
    data_opts(p)
    common(p)
    p.set_defaults(func=cmd_path)

    p = sub.add_parser("select", help="model selection on a CSV data set")
    data_opts(p)
    p.add_argument("--method", action="append", choices=SELECT_METHODS,
                   help="repeat to run several methods; the first is the primary report (default cc)")
    p.add_argument("--betti-weights", help="preset (all, no0, higher, lower) or comma list A")
    p.add_argument("--mu-grid", help="number of steps on [0,1] or a comma list (default 100)")
    p.add_argument("--mu-choice", choices=("test", "joint"), default="test")
    p.add_argument("--splits", default="0.6,0.2,0.2", help="train,validation,test fractions")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, help="RNG seed (fallback: TOPOLASSO_SEED, then 0)")
    common(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("simulate", help="run a simulation experiment")
    p.add_argument("config", help="config file or bundled config name")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--replications", type=int)
    common(p)
    p.set_defaults(func=cmd_simulate)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, TermParseError, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except MethodError as exc:
        print(f"method failed: {exc}", file=sys.stderr)
        return EXIT_METHOD


if __name__ == "__main__":
    sys.exit(main())
