"""Command-line front end.

Subcommands: ``nc``, ``moebius``, ``cumulants``, ``moments``,
``product-eval``, ``convolve``, ``verify``.  Output is JSON (default) or an
aligned table; scalars print as exact rational strings, never floats, and
the output is byte-identical across runs for identical inputs.

Exit status: 0 on success, 1 when ``verify`` finds a mathematical violation,
2 on parse/validation errors.  ``NCPROB_LOG`` sets the log level.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Sequence

from . import cumulant_calculus as cc
from .errors import NCProbError, SpecFormatError
from .free_product import ProductSpace, product_space_from_json
from .moment_space import (
    GeneratorSymbol,
    Letter,
    Word,
    factor_state_from_json,
    parse_word,
)
from .nc_lattice import enumerate_nc, moebius, parse_partition
from .scalar import ComplexRational
from .verification import (
    check_freeness_cumulants,
    check_freeness_moments,
    check_positivity,
)

log = logging.getLogger("ncprob")


def _load_json(path: str) -> object:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SpecFormatError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    except OSError as exc:
        raise SpecFormatError(f"{path}: {exc.strerror}") from exc


def _load_space(path: str) -> ProductSpace:
    obj = _load_json(path)
    if isinstance(obj, dict) and "factors" in obj:
        return product_space_from_json(obj)
    return ProductSpace([factor_state_from_json(obj)])


def _emit(args, payload: dict, table_lines: list[str]) -> None:
    if args.output == "table":
        for line in table_lines:
            print(line)
    else:
        print(json.dumps(payload, sort_keys=True, indent=2))


def _parse_moment_file(obj: object, key: str, path: str) -> list[ComplexRational]:
    if not isinstance(obj, dict) or key not in obj:
        raise SpecFormatError(f"{path}: expected an object with a {key!r} list")
    raw = obj[key]
    if not isinstance(raw, list) or not all(isinstance(v, str) for v in raw):
        raise SpecFormatError(f"{path}: {key!r} must be a list of scalar strings")
    return [ComplexRational.parse(v) for v in raw]


def _cmd_nc(args) -> int:
    partitions = enumerate_nc(args.n)
    texts = [str(p) for p in partitions]
    _emit(args, {"n": args.n, "count": len(texts), "partitions": texts}, texts)
    return 0


def _cmd_moebius(args) -> int:
    sigma = parse_partition(args.sigma)
    pi = parse_partition(args.pi)
    if sigma.n != args.n or pi.n != args.n:
        raise SpecFormatError(
            f"partitions cover {sigma.n} and {pi.n} elements, expected {args.n}"
        )
    value = moebius(sigma, pi)
    _emit(
        args,
        {"n": args.n, "sigma": str(sigma), "pi": str(pi), "moebius": value},
        [str(value)],
    )
    return 0


def _letter_tuples(letters: Sequence[Letter], max_order: int):
    tuples: list[tuple[Letter, ...]] = [()]
    for _ in range(max_order):
        tuples = [t + (l,) for t in tuples for l in letters]
        yield from tuples


def _cmd_cumulants(args) -> int:
    obj = _load_json(args.from_moments)
    if isinstance(obj, dict) and "generators" in obj:
        state = factor_state_from_json(obj)
        table = cc.CumulantTable.from_state(state)
        values = {}
        for tup in _letter_tuples(state.letters(), state.degree_bound):
            values[Word(tup).text()] = str(table.value(tup))
        payload = {
            "factor": state.factor,
            "degree_bound": state.degree_bound,
            "cumulants": values,
        }
        lines = [f"{w}  {v}" for w, v in sorted(values.items())]
    else:
        moments = _parse_moment_file(obj, "moments", args.from_moments)
        kappas = cc.cumulants_from_moment_sequence(cc.MomentSequence.of(moments))
        payload = {"cumulants": [str(k) for k in kappas]}
        lines = [f"{n + 1}  {k}" for n, k in enumerate(kappas)]
    _emit(args, payload, lines)
    return 0


def _cmd_moments(args) -> int:
    obj = _load_json(args.from_cumulants)
    if isinstance(obj, dict) and "generators" in obj:
        try:
            raw = obj["cumulants"]
            factor = obj["factor"]
            degree_bound = obj["degree_bound"]
        except KeyError as exc:
            raise SpecFormatError(f"missing key {exc.args[0]!r}") from exc
        if not isinstance(raw, dict):
            raise SpecFormatError("'cumulants' must be an object of word -> scalar")
        generators = [
            GeneratorSymbol(g["name"], bool(g.get("selfadjoint", False)))
            for g in obj["generators"]
        ]
        letters_by_name = {g.name: Letter(g, False, factor) for g in generators}
        letters = []
        for g in generators:
            letters.append(Letter(g, False, factor))
            if not g.selfadjoint:
                letters.append(Letter(g, True, factor))
        values = {}
        for word_text, scalar_text in raw.items():
            word = parse_word(word_text, letters_by_name)
            values[word.letters] = ComplexRational.parse(scalar_text)
        table = cc.CumulantTable.from_values(factor, degree_bound, values)
        out = {}
        for tup in _letter_tuples(letters, degree_bound):
            out[Word(tup).text()] = str(cc.moments_from_cumulants(table, tup))
        payload = {"factor": factor, "degree_bound": degree_bound, "moments": out}
        lines = [f"{w}  {v}" for w, v in sorted(out.items())]
    else:
        kappas = _parse_moment_file(obj, "cumulants", args.from_cumulants)
        seq = cc.moment_sequence_from_cumulants(kappas)
        payload = {"moments": [str(m) for m in seq.values]}
        lines = [f"{n + 1}  {m}" for n, m in enumerate(seq.values)]
    _emit(args, payload, lines)
    return 0


def _cmd_product_eval(args) -> int:
    space = _load_space(args.spec)
    letters = space.parse_letters(args.word)
    value = space.state_eval(letters)
    _emit(
        args,
        {"word": " ".join(l.text() for l in letters), "value": str(value)},
        [str(value)],
    )
    return 0


def _cmd_convolve(args) -> int:
    x = cc.MomentSequence.of(
        _parse_moment_file(_load_json(args.x), "moments", args.x)
    )
    y = cc.MomentSequence.of(
        _parse_moment_file(_load_json(args.y), "moments", args.y)
    )
    result = cc.free_convolve_additive(x, y)
    payload = {"moments": [str(m) for m in result.values]}
    _emit(args, payload, [f"{n + 1}  {m}" for n, m in enumerate(result.values)])
    return 0


def _cmd_verify(args) -> int:
    space = _load_space(args.spec)
    reports = []
    failed = False
    if args.mode in ("moments", "both"):
        reports.append(check_freeness_moments(space, args.max_degree))
    if args.mode in ("cumulants", "both"):
        reports.append(check_freeness_cumulants(space, args.max_degree))
    payload: dict = {}
    lines: list[str] = []
    if reports:
        payload["reports"] = [r.to_json() for r in reports]
        for r in reports:
            failed = failed or not r.ok
            lines.append(
                f"mode={r.mode} max_degree={r.max_degree} "
                f"checked={r.checked_words} violations={len(r.violations)}"
            )
            for word, value in r.violations:
                lines.append(f"  {word} = {value}")
    if args.mode == "positivity":
        result = check_positivity(space, args.max_degree)
        payload["positivity"] = result.to_json()
        failed = failed or not result.psd or result.schur_consistent is False
        lines.append(
            f"psd={result.psd} schur_consistent={result.schur_consistent} "
            f"basis_size={result.gram.size}"
        )
        if result.witness is not None:
            lines.append("  witness: " + ", ".join(str(x) for x in result.witness))
    _emit(args, payload, lines)
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ncprob",
        description="Exact free-cumulant calculus and free products.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument(
            "--output", choices=("json", "table"), default="json",
            help="output format (default: json)",
        )
        return p

    p = add("nc", _cmd_nc, "enumerate the non-crossing partitions of {1..n}")
    p.add_argument("n", type=int)

    p = add("moebius", _cmd_moebius, "Moebius function of an NC(n) interval")
    p.add_argument("n", type=int)
    p.add_argument("sigma", help='partition text, e.g. "{1,3}{2}"')
    p.add_argument("pi", help='partition text, e.g. "{1,2,3}"')

    p = add("cumulants", _cmd_cumulants, "free cumulants from moments")
    p.add_argument("--from-moments", required=True, metavar="FILE")

    p = add("moments", _cmd_moments, "moments from free cumulants")
    p.add_argument("--from-cumulants", required=True, metavar="FILE")

    p = add("product-eval", _cmd_product_eval, "evaluate the product state on a word")
    p.add_argument("--spec", required=True, metavar="FILE")
    p.add_argument("--word", required=True, help='e.g. "a b a b"')

    p = add("convolve", _cmd_convolve, "free additive convolution of moment files")
    p.add_argument("x", metavar="X.json")
    p.add_argument("y", metavar="Y.json")

    p = add("verify", _cmd_verify, "freeness / positivity verification suite")
    p.add_argument("--spec", required=True, metavar="FILE")
    p.add_argument("--max-degree", required=True, type=int)
    p.add_argument(
        "--mode", choices=("moments", "cumulants", "both", "positivity"),
        default="both",
    )

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("NCPROB_LOG", "WARNING"))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NCProbError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
