"""Command-line front-end: kernels, zhu, bimodule, corr, fusion and selftest.

JSON is the machine interface.  LaTeX output only reformats numbers that
were computed for the JSON path; no arithmetic happens in the emitters.
Exit codes: 0 success, 1 a check failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import random
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from . import checks
from .correlation import CheckReport, WindowExceeded, n_point
from .fusion import STANDARD_QUERIES, FusionEngine, FusionQuery, make_algebra, make_module, table
from .kernels import f_kernel, f_kernel_expansion
from .series import ExpansionSite, as_q, fmt_q
from .voa import monomial_from_string
from .zhu import OutOfWindow, quotient_algebra, quotient_bimodule

log = logging.getLogger("voatwist")

VERMA_NOTE = "M2 and the dual of M3 are assumed to be generalized Verma modules; not checkable at a truncation"


class UsageError(Exception):
    def __init__(self, flag, message):
        super().__init__(f"{flag}: {message}")
        self.flag = flag


@dataclass(frozen=True)
class SessionConfig:
    voa: str = "lattice-a1"
    twist: str = "theta"
    denominator: int = 2
    trunc: Fraction = Fraction(4)
    fmt: str = "json"
    seed: int = 0

    @property
    def T(self):
        return 2 if self.twist == "theta" else 1

    def validate(self):
        if self.twist not in ("id", "theta"):
            raise UsageError("--twist", f"expected id or theta, got {self.twist!r}")
        if self.voa not in ("heisenberg", "lattice-a1"):
            raise UsageError("--voa", f"expected heisenberg or lattice-a1, got {self.voa!r}")
        if self.denominator <= 0 or self.denominator % self.T:
            raise UsageError("--denominator", f"{self.denominator} is not a positive multiple of T={self.T}")
        if self.trunc < 0:
            raise UsageError("--trunc", "truncation must be >= 0")
        if self.fmt not in ("json", "latex", "text"):
            raise UsageError("--format", f"expected json, latex or text, got {self.fmt!r}")
        return self


def read_config(path):
    """key=value lines; '#' starts a comment.  Keys mirror the long flags."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError("--config", str(exc)) from exc
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError("--config", f"{path}:{n}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def _inline_or_file(text):
    """A datum is either a key=value file or an inline 'k=v,k=v' string."""
    if os.path.exists(text):
        return read_config(text)
    out = {}
    # module names such as M(1,1) contain commas, so split only before a key
    for part in re.split(r",(?=\s*\w+=)", text):
        if "=" not in part:
            raise UsageError("--datum", f"expected key=value pairs or a config file, got {text!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _q(text, flag):
    try:
        return as_q(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(flag, f"not a rational number: {text!r}") from exc


def _threads():
    raw = os.environ.get("VOATWIST_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise UsageError("VOATWIST_THREADS", f"not an integer: {raw!r}") from exc


def _pmap(fn, items):
    """Order-preserving map over a process pool capped by VOATWIST_THREADS."""
    items = list(items)
    workers = min(_threads(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- emitters ----------------------------------------------------------------


def _latex_q(x):
    x = as_q(x)
    if x.denominator == 1:
        return str(x.numerator)
    sign = "-" if x < 0 else ""
    return rf"{sign}\tfrac{{{abs(x.numerator)}}}{{{x.denominator}}}"


def _latex_exp(text):
    x = as_q(text)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _latex_coef(text):
    try:
        return _latex_q(text)
    except ValueError:
        body = re.sub(r"\^\(([^)]*)\)", lambda m: "^{" + _latex_exp(m.group(1)) + "}", text)
        body = re.sub(r"\b(\d+)/1\b", r"\1", body)
        return rf"\left({body.replace('*', ' ')}\right)"


def _latex_series(js):
    var = js["var"]
    parts = [f"{_latex_coef(t['coef'])}\\,{var}^{{{_latex_exp(t['exp'])}}}" for t in js["terms"]]
    lo, hi = js["window"]
    body = " + ".join(parts) or "0"
    if hi != "inf":
        body += r" + \cdots"
    if lo != "-inf":
        body = r"\cdots + " + body
    return body


def emit(data, cfg, out):
    if cfg.fmt == "latex" and isinstance(data, dict) and "latex" in data:
        text = data["latex"]
    elif cfg.fmt == "text":
        text = "\n".join(_text_lines(data)) + "\n"
    else:
        payload = {k: v for k, v in data.items() if k != "latex"} if isinstance(data, dict) else data
        text = json.dumps(payload, indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _text_lines(data, prefix=""):
    if isinstance(data, dict):
        for k, v in data.items():
            if k == "latex":
                continue
            if isinstance(v, (dict, list)):
                yield f"{prefix}{k}:"
                yield from _text_lines(v, prefix + "  ")
            else:
                yield f"{prefix}{k}: {v}"
    elif isinstance(data, list):
        for v in data:
            if isinstance(v, (dict, list)):
                yield f"{prefix}-"
                yield from _text_lines(v, prefix + "  ")
            else:
                yield f"{prefix}- {v}"
    else:
        yield f"{prefix}{data}"


# -- subcommands ---------------------------------------------------------------


def cmd_kernels(args, cfg):
    n = _q(args.n, "--n")
    if (n * cfg.T).denominator != 1:
        raise UsageError("--n", f"{fmt_q(n)} is not in (1/{cfg.T})Z")
    if args.i < 0:
        raise UsageError("--i", "must be >= 0")
    terms = int(cfg.trunc) if args.terms_given else 12
    if terms < 1:
        raise UsageError("--trunc", "need at least one term")
    f = f_kernel(n, args.i)
    sites = {
        "zero": (ExpansionSite.at_zero("z"), terms - 1 - n),
        "infinity": (ExpansionSite.at_infinity("z"), -n - terms),
        "diagonal": (ExpansionSite.at_diagonal("z", "w"), terms - 2 - args.i),
    }
    expansions = {k: f_kernel_expansion(n, args.i, s, t).to_json() for k, (s, t) in sites.items()}
    latex = [rf"F_{{{fmt_q(n)},{args.i}}}(z,w) = z^{{{fmt_q(-n)}}}\frac{{1}}{{{args.i}!}}\partial_w^{{{args.i}}}\frac{{w^{{{fmt_q(n)}}}}}{{z-w}}"]
    for k, js in expansions.items():
        latex.append(rf"\iota_{{\mathrm{{{k}}}}} F = {_latex_series(js)}")
    return 0, {
        "n": fmt_q(n),
        "i": args.i,
        "T": cfg.T,
        "terms": terms,
        "function": str(f),
        "rational": f.to_json(),
        "expansions": expansions,
        "latex": "\\begin{align*}\n" + " \\\\\n".join(latex) + "\n\\end{align*}\n",
    }


def cmd_zhu(args, cfg):
    alg = make_algebra(cfg.voa, cfg.twist)
    A = quotient_algebra(alg, cfg.trunc)
    data = A.to_json()
    data.update(voa=cfg.voa, twist=cfg.twist, trunc=fmt_q(cfg.trunc))
    return 0, data


def _parse_mode(text):
    if text in ("Ag", "A"):
        return "A", None
    if text.startswith("Bg:") or text.startswith("B:"):
        return "B", _q(text.split(":", 1)[1], "--mode")
    raise UsageError("--mode", f"expected Ag or Bg:<lambda>, got {text!r}")


def _module(alg, name, flag):
    try:
        return make_module(alg, name)
    except ValueError as exc:
        raise UsageError(flag, str(exc)) from exc


def cmd_bimodule(args, cfg):
    alg = make_algebra(cfg.voa, cfg.twist)
    M = _module(alg, args.module, "--module")
    mode, lam = _parse_mode(args.mode)
    B = quotient_bimodule(alg, M, mode, cfg.trunc, lam)
    data = B.to_json()
    data.update(voa=cfg.voa, module=args.module, trunc=fmt_q(cfg.trunc), commute=B.actions_commute())
    return 0, data


def _query(fields, cfg, flag):
    voa = fields.get("voa", cfg.voa)
    alg = make_algebra(voa)
    names = []
    for key in ("m1", "m2", "m3"):
        if key not in fields:
            raise UsageError(flag, f"missing {key}")
        _module(alg, fields[key], flag)
        names.append(fields[key])
    mode, lam = _parse_mode(fields.get("mode", "Ag"))
    return FusionQuery(voa, *names, mode, lam)


def cmd_corr(args, cfg):
    if args.emit:
        return _corr_emit(args, cfg)
    if not args.datum:
        raise UsageError("--datum", "required unless --emit is given")
    fields = _inline_or_file(args.datum)
    q = _query(fields, cfg, "--datum")
    window = _q(fields["trunc"], "--datum") if "trunc" in fields else cfg.trunc
    which = checks.BLOCK_CHECKS if args.check == "all" else (args.check,)
    depth = int(fields.get("depth", 1))
    engine = FusionEngine(window)
    space = engine.blocks(q)
    rng = random.Random(cfg.seed)
    blocks = []
    failed = False
    for idx, block in enumerate(space.blocks()):
        reps = checks.block_checks(block, rng, depth, which)
        failed |= any(not r.ok for r in reps)
        blocks.append({"block": idx, "table": {k: fmt_q(v) for k, v in block.table().items()},
                       "reports": [r.to_json() for r in reps]})
    return int(failed), {
        "query": q.label(),
        "blocks_dimension": space.dim,
        "check": args.check,
        "assumption": VERMA_NOTE,
        "results": blocks,
    }


def _corr_emit(args, cfg):
    if args.emit != "n-point":
        raise UsageError("--emit", f"only n-point is supported, got {args.emit!r}")
    if not args.inputs:
        raise UsageError("--inputs", "required with --emit")
    try:
        with open(args.inputs) as fh:
            fields = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError("--inputs", str(exc)) from exc
    q = _query(fields, cfg, "--inputs")
    window = _q(str(fields.get("trunc", cfg.trunc)), "--inputs")
    engine = FusionEngine(window)
    space = engine.blocks(q)
    blocks = space.blocks()
    idx = int(fields.get("block", 0))
    if not 0 <= idx < len(blocks):
        raise UsageError("--inputs", f"block {idx} out of range; the block space has dimension {len(blocks)}")
    alg = engine.algebra(q.voa)
    try:
        a_list = [{monomial_from_string(s, alg): 1} for s in fields.get("insertions", [])]
        v = {monomial_from_string(fields.get("v", "1"), alg): 1}
    except (ValueError, IndexError) as exc:
        raise UsageError("--inputs", f"bad vector: {exc}") from exc
    f = n_point(blocks[idx], a_list, v, fields.get("insertion_index"))
    return 0, {"query": q.label(), "block": idx, "function": str(f), "serialized": f.to_json()}


def _fusion_row(args):
    q, window = args
    engine = FusionEngine(window)
    out = engine.cross_validate(q, strict=False)
    return q, out["tensor"], out["blocks"], out["stable"]


def cmd_fusion(args, cfg):
    if args.table:
        rows = _pmap(_fusion_row, [(q, cfg.trunc) for q in STANDARD_QUERIES])
        failed = any(t != b for _, t, b, _ in rows)
        data = {
            "trunc": fmt_q(cfg.trunc),
            "assumption": VERMA_NOTE,
            "rows": [{"query": q.label(), "stable": s, "route": {"tensor": t, "blocks": b}} for q, t, b, s in rows],
            "latex": table([(q, t, b) for q, t, b, _ in rows]),
        }
        return int(failed), data
    missing = [f for f in ("m1", "m2", "m3") if getattr(args, f) is None]
    if missing:
        raise UsageError(f"--{missing[0]}", "required unless --table is given")
    fields = {"voa": cfg.voa, "m1": args.m1, "m2": args.m2, "m3": args.m3, "mode": args.mode}
    q = _query(fields, cfg, "--m1")
    _, t, b, stable = _fusion_row((q, cfg.trunc))
    data = {
        "query": q.label(),
        "dimension": t if t == b else None,
        "stable": stable,
        "route": {"tensor": t, "blocks": b},
        "assumption": VERMA_NOTE,
    }
    data["latex"] = table([(q, t, b)])
    return int(t != b), data


def _reconstruction(seed):
    merged = CheckReport("reconstruction")
    for tag, reps in checks.reconstruction_suite(seed=seed).items():
        for r in reps:
            merged.cases += r.cases
            merged.failures += [(tag, r.check, f) for f in r.failures]
    return merged


SUITES = {
    "kernels": lambda seed: checks.kernel_suite(),
    "residue": lambda seed: checks.residue_suite(seed=seed),
    "jacobi": lambda seed: checks.jacobi_suite(),
    "zhu": lambda seed: checks.zhu_suite(),
    "bimodule": lambda seed: checks.bimodule_suite(),
    "fusion": lambda seed: checks.fusion_suite(),
    "reconstruction": _reconstruction,
    "lambda": lambda seed: checks.lambda_suite(),
    "surjection": lambda seed: checks.surjection_suite(),
}


def _run_suite(item):
    name, seed = item
    return SUITES[name](seed).to_json()


def cmd_selftest(args, cfg):
    names = args.suites.split(",") if args.suites else list(SUITES)
    for n in names:
        if n not in SUITES:
            raise UsageError("--suites", f"unknown suite {n!r}; choose from {', '.join(SUITES)}")
    results = _pmap(_run_suite, [(n, cfg.seed) for n in names])
    failed = [r["check"] for r in results if r["failures"]]
    return int(bool(failed)), {"seed": cfg.seed, "suites": results, "failed": failed}


COMMANDS = {
    "kernels": cmd_kernels,
    "zhu": cmd_zhu,
    "bimodule": cmd_bimodule,
    "corr": cmd_corr,
    "fusion": cmd_fusion,
    "selftest": cmd_selftest,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(self.prog, message)


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--voa")
    common.add_argument("--twist")
    common.add_argument("--trunc")
    common.add_argument("--denominator")
    common.add_argument("--format", dest="fmt")
    common.add_argument("--seed")
    common.add_argument("--out")
    common.add_argument("--config", help="key=value file; explicit flags win")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="voatwist", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    k = sub.add_parser("kernels", parents=[common])
    k.add_argument("--n", required=True)
    k.add_argument("--i", type=int, default=0)
    sub.add_parser("zhu", parents=[common])
    b = sub.add_parser("bimodule", parents=[common])
    b.add_argument("--module", required=True)
    b.add_argument("--mode", default="Ag")
    c = sub.add_parser("corr", parents=[common])
    c.add_argument("--datum")
    c.add_argument("--check", default="all", choices=["locality", "assoc", "l-1", "generating", "all"])
    c.add_argument("--emit")
    c.add_argument("--inputs")
    f = sub.add_parser("fusion", parents=[common])
    f.add_argument("--m1")
    f.add_argument("--m2")
    f.add_argument("--m3")
    f.add_argument("--mode", default="Ag")
    f.add_argument("--table", action="store_true")
    s = sub.add_parser("selftest", parents=[common])
    s.add_argument("--suites", help="comma-separated subset")
    return p


def _config(args):
    raw = read_config(args.config) if args.config else {}
    for key in ("voa", "twist", "trunc", "denominator", "fmt", "seed", "out"):
        val = getattr(args, key)
        if val is not None:
            raw[key] = val
    if "format" in raw:
        raw.setdefault("fmt", raw.pop("format"))
    try:
        twist = raw.get("twist", "theta")
        cfg = SessionConfig(
            voa=raw.get("voa", "lattice-a1"),
            twist=twist,
            denominator=int(raw.get("denominator", 2 if twist == "theta" else 1)),
            trunc=as_q(raw.get("trunc", 4)),
            fmt=raw.get("fmt", "json"),
            seed=int(raw.get("seed", 0)),
        )
    except ValueError as exc:
        raise UsageError("--config" if args.config else "flags", str(exc)) from exc
    return cfg.validate(), raw


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("voatwist", "a subcommand is required: " + ", ".join(COMMANDS))
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
        cfg, raw = _config(args)
        args.terms_given = "trunc" in raw
        code, data = COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (OutOfWindow, WindowExceeded) as exc:
        print(f"window too small: {exc}", file=sys.stderr)
        return 1
    emit(data, cfg, raw.get("out"))
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
