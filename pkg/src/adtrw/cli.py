"""Command-line front end.

Every subcommand reads optional defaults from a flat ``key = value`` config
(``--config``); explicit flags win. Outputs carry a metadata block (tool
version, resolved configuration, seed, truncation diagnostics) and are
written atomically. Exit codes: 0 success, 1 invalid input, 2 request
outside a numerical envelope.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from adtrw import __version__
from adtrw.errors import AdtrwError, EnvelopeError, ParameterError

SCHEMA_VERSION = 1
DEFAULT_HORIZON = 1024
NO_CONFIG_KEYS = {"command", "config", "handler"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParameterError(f"{self.prog}: {message}")


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, Path):
        return str(x)
    return x


class Output:
    """One result: metadata, an optional table and an optional JSON payload."""

    def __init__(self, meta: dict, columns=None, rows=None, payload: dict | None = None):
        self.meta = meta
        self.columns = columns
        self.rows = rows
        self.payload = payload

    def render(self, fmt: str) -> str:
        if fmt == "json":
            doc = {"meta": self.meta}
            if self.payload is not None:
                doc.update(self.payload)
            if self.columns is not None:
                doc["columns"] = list(self.columns)
                doc["rows"] = [list(r) for r in self.rows]
            return json.dumps(_jsonable(doc), indent=2, sort_keys=False) + "\n"
        if self.columns is None:
            raise ParameterError("this result has no tabular form; use --format json")
        buf = io.StringIO()
        for key, value in self.meta.items():
            buf.write(f"# {key}: {json.dumps(_jsonable(value), sort_keys=False)}\n")
        if self.payload:
            for key, value in self.payload.items():
                buf.write(f"# {key}: {json.dumps(_jsonable(value), sort_keys=False)}\n")
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(_fmt(v) for v in row) + "\n")
        return buf.getvalue()


def write_atomic(path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, out) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        write_atomic(out, text)


# ---------------------------------------------------------------- config


def load_config(path) -> list[tuple[int, str, str]]:
    """``(line number, key, raw value)`` triples from a flat ``key = value`` file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParameterError(f"cannot read config {path}: {exc}") from None
    seen = {}
    entries = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ParameterError(f"config {path}, line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key = key.replace("-", "_")
        if key in seen:
            raise ParameterError(f"config {path}, line {lineno}: duplicate key {key!r} (first on line {seen[key]})")
        seen[key] = lineno
        entries.append((lineno, key, value))
    return entries


def _config_defaults(parser: argparse.ArgumentParser, path, entries) -> dict:
    actions = {a.dest: a for a in parser._actions if a.dest not in ("help",) and a.dest not in NO_CONFIG_KEYS}
    out = {}
    for lineno, key, value in entries:
        action = actions.get(key)
        if action is None:
            raise ParameterError(
                f"config {path}, line {lineno}: unknown key {key!r} for '{parser.prog}'"
            )
        if isinstance(action, argparse._StoreTrueAction):
            if value.lower() not in ("true", "false"):
                raise ParameterError(f"config {path}, line {lineno}: {key} expects true or false, got {value!r}")
            out[key] = value.lower() == "true"
            continue
        convert = action.type or str
        try:
            converted = convert(value)
        except (ValueError, TypeError, ParameterError) as exc:
            raise ParameterError(f"config {path}, line {lineno}: bad value for {key!r}: {exc}") from None
        if action.choices is not None and converted not in action.choices:
            raise ParameterError(
                f"config {path}, line {lineno}: {key} must be one of {sorted(action.choices)}, got {value!r}"
            )
        out[key] = converted
    return out


# ---------------------------------------------------------------- argument types


def _int_range(text: str) -> list[int]:
    """``a..b`` (inclusive) or a comma list of integers."""
    text = text.strip()
    if ".." in text:
        lo, _, hi = text.partition("..")
        try:
            a, b = int(lo), int(hi)
        except ValueError:
            raise ValueError(f"malformed range {text!r}; expected like -5..5") from None
        if b < a:
            raise ValueError(f"empty range {text!r}")
        return list(range(a, b + 1))
    return [int(x) for x in text.split(",")]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _time_grid(text: str) -> list[float]:
    """``start:stop:step`` (stop included when on the grid) or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"time grid {text!r} must be start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ValueError(f"time grid {text!r} needs step > 0 and stop >= start")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + k * step for k in range(count)]
    return _float_list(text)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise ValueError(f"expected a positive integer, got {text}")
    return value


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise ValueError(f"expected a non-negative integer, got {text}")
    return value


def _float_spec(text: str) -> str:
    if not text.startswith("file:"):
        raise ValueError("expected file:<path>")
    return text


# ---------------------------------------------------------------- helpers


def _meta(args, **extra) -> dict:
    config = {k: v for k, v in vars(args).items() if k not in NO_CONFIG_KEYS}
    meta = {
        "tool": "adtrw",
        "version": __version__,
        "schema_version": SCHEMA_VERSION,
        "command": args.command,
        "config": _jsonable(config),
    }
    meta.update(_jsonable(extra))
    return meta


def _require(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            flag = "--" + name.replace("_", "-")
            raise ParameterError(f"{args.command}: {flag} is required (flag or config key {name!r})")


def _density(args, horizon=None):
    from adtrw.dtrp_core import make_density

    _require(args, "density")
    h = horizon if horizon is not None else args.horizon
    if args.density.startswith("file:") and args.horizon is None and horizon is None:
        h = None
    elif h is None:
        h = DEFAULT_HORIZON
    return make_density(args.density, h)


def _jumps(args):
    from adtrw.walk import Direction, JumpDensity

    wplus = JumpDensity.from_file(args.wplus, Direction.POSITIVE) if args.wplus else JumpDensity.unit(Direction.POSITIVE)
    wminus = (
        JumpDensity.from_file(args.wminus, Direction.NEGATIVE) if args.wminus else JumpDensity.unit(Direction.NEGATIVE)
    )
    return wplus, wminus


def _tail_assumption(args):
    from adtrw.dtrp_core import TailClass

    return {None: None, "light": TailClass.LIGHT, "fat": TailClass.FAT}[args.assume_tail]


def _density_info(d) -> dict:
    return {
        "name": d.name,
        "horizon": d.horizon,
        "tail": d.tail.value,
        "mean_wait": d.mean_wait,
        "tail_mass": d.tail_mass,
    }


# ---------------------------------------------------------------- subcommands


def cmd_density(args) -> Output:
    from adtrw.dtrp_core import survival

    d = _density(args)
    s = survival(d)
    rows = [(t, d.probs[t - 1], s[t]) for t in range(1, d.horizon + 1)]
    return Output(_meta(args, density=_density_info(d)), ("t", "psi", "survival"), rows)


def cmd_states(args) -> Output:
    from adtrw.dtrp_core import state_table

    _require(args, "t_max")
    d = _density(args, args.horizon or max(args.t_max, 1))
    table = state_table(d, args.t_max, n_max=args.n_max)
    rows = [
        (t, n, table.probs[n, t]) for t in range(table.t_max + 1) for n in range(min(t, table.n_max) + 1)
    ]
    return Output(_meta(args, density=_density_info(d)), ("t", "n", "probability"), rows)


def cmd_bell(args) -> Output:
    from adtrw.bell import incomplete_bell

    _require(args, "r_max")
    d = _density(args, args.horizon or max(args.r_max, 1))
    table = incomplete_bell(d, args.r_max)
    return Output(_meta(args, density=_density_info(d)), ("r", "n", "value"), list(table.to_rows()))


def cmd_walk(args) -> Output:
    from adtrw.walk import general_walk_dist, simple_walk_dist

    _require(args, "t")
    d = _density(args, args.horizon or max(args.t, 1))
    wplus, wminus = _jumps(args)
    if wplus.is_unit and wminus.is_unit:
        dist = simple_walk_dist(d, args.t)
    else:
        dist = general_walk_dist(d, wplus, wminus, args.t)
    rows = [(args.t, int(s), p) for s, p in zip(dist.sites, dist.probs)]
    return Output(_meta(args, density=_density_info(d), total=dist.total), ("t", "site", "probability"), rows)


def cmd_mc(args) -> Output:
    from adtrw.mc import mc_sample

    _require(args, "t_max", "samples", "seed")
    d = _density(args, args.horizon or max(args.t_max, 1))
    wplus, wminus = _jumps(args)
    times = args.record_times
    ens = mc_sample(d, wplus, wminus, args.t_max, args.samples, args.seed, record_times=times)
    summary = ens.summary()
    rows = []
    for k, t in enumerate(ens.times):
        counts = ens.position_counts[k]
        for j in np.flatnonzero(counts):
            rows.append((int(t), ens.position_offset + int(j), int(counts[j]), counts[j] / ens.sample_count))
    meta = _meta(
        args,
        density=_density_info(d),
        seed=args.seed,
        sample_count=ens.sample_count,
        shard_count=ens.shard_count,
        truncation_count=ens.truncated,
    )
    if args.summary_out:
        write_atomic(args.summary_out, Output(meta, payload={"summary": summary}).render("json"))
    payload = {"summary": summary} if args.format == "json" else None
    return Output(meta, ("t", "site", "count", "frequency"), rows, payload)


def cmd_analyze(args) -> Output:
    from adtrw.recurrence import analyze, site_table

    d = _density(args, args.horizon or max(args.t_max, 1))
    assume = _tail_assumption(args)
    report = analyze(d, assume, args.recurrence_tol)
    sites = site_table(d, args.sites, args.t_max, assume, args.recurrence_tol)
    return Output(
        _meta(args, density=_density_info(d)),
        ("site", "est_exact", "est_numeric"),
        sites,
        {"report": report.to_dict()},
    )


def cmd_invert_bias(args) -> Output:
    from adtrw.dtrp_core import read_values
    from adtrw.recurrence import invert_bias

    _require(args, "f")
    values = read_values(args.f[len("file:"):], "bias")
    result = invert_bias(values)
    report = {"admissible": result.admissible, "message": result.message, "first_bad_t": result.first_bad_t}
    meta = _meta(args, report=report)
    if args.report_out:
        write_atomic(args.report_out, Output(meta).render("json"))
    if not result.admissible:
        raise ParameterError(result.message)
    psi = result.coefficients
    if args.density_out:
        # plain values, readable back through --density file:<path>
        header = f"# adtrw {__version__} invert-bias; psi(t) for t = 1..{psi.size}\n"
        write_atomic(args.density_out, header + "".join(_fmt(v) + "\n" for v in psi))
    return Output(meta, ("t", "psi"), [(t, psi[t - 1]) for t in range(1, psi.size + 1)])


def cmd_sibuya(args) -> Output:
    from adtrw.sibuya import sibuya_figures

    rows = sibuya_figures(args.beta, args.fig, args.t_max)
    columns = {
        "1": ("beta", "t", "state_poly_v0.1"),
        "2": ("beta", "t", "return_probability"),
        "3": ("beta", "t", "expected_position"),
        "est": ("beta", "est_origin"),
    }[args.fig]
    return Output(_meta(args), columns, rows)


def cmd_actrw(args) -> Output:
    from adtrw.actrw import MLParams, actrw_mc, composed_states

    _require(args, "mu", "t")
    clock = MLParams(args.mu, args.xi0)
    if args.mc:
        _require(args, "samples", "seed")
        d = _density(args)
        wplus, wminus = _jumps(args)
        ens = actrw_mc(d, clock, wplus, wminus, args.t, args.samples, args.seed)
        rows = []
        for k, t in enumerate(ens.times):
            probs = ens.success_counts[k] / ens.sample_count
            rows += [(float(t), n, probs[n]) for n in range(probs.size) if args.n_max is None or n <= args.n_max]
        meta = _meta(
            args,
            density=_density_info(d),
            seed=args.seed,
            sample_count=ens.sample_count,
            shard_count=ens.shard_count,
            truncation_count=ens.truncated,
        )
        return Output(meta, ("t", "n", "probability"), rows, {"summary": ens.summary()} if args.format == "json" else None)
    d = _density(args)
    table = composed_states(d, clock, args.t, args.n_max)
    rows = [
        (float(t), n, table.probs[k, n]) for k, t in enumerate(table.times) for n in range(table.probs.shape[1])
    ]
    diagnostics = {
        "clock_states_used": table.m_used.tolist(),
        "clock_mass_deficit": table.deficits.tolist(),
        "state_mass": table.probs.sum(axis=1).tolist(),
    }
    return Output(_meta(args, density=_density_info(d), truncation=diagnostics), ("t", "n", "probability"), rows)


def cmd_verify(args) -> int:
    from adtrw.acceptance import run_all

    results = run_all(args.only, echo=lambda line: print(line, flush=True))
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed" + (f"; failed: {failed}" if failed else ""))
    return 0 if not failed else 1


# ---------------------------------------------------------------- parser


def _common(p, fmt="csv", density=True, horizon=True):
    p.add_argument("--config", help="flat key = value file supplying defaults")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=fmt)
    if density:
        p.add_argument("--density", help="geometric:p=.. | sibuya:beta=.. | poisson:lambda=.. | trivial | file:<path>")
    if horizon:
        p.add_argument("--horizon", type=_positive_int, help="tabulation horizon of the waiting-time density")


def _jump_args(p):
    p.add_argument("--wplus", help="file of right-jump probabilities for magnitudes 1, 2, ...")
    p.add_argument("--wminus", help="file of left-jump probabilities for magnitudes 1, 2, ...")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="adtrw", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"adtrw {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("density", help="tabulate a waiting-time density and its survival")
    _common(p)
    p.set_defaults(handler=cmd_density)

    p = sub.add_parser("states", help="state probabilities P(N(t) = n)")
    _common(p)
    p.add_argument("--t-max", type=_nonneg_int)
    p.add_argument("--n-max", type=_nonneg_int)
    p.set_defaults(handler=cmd_states)

    p = sub.add_parser("bell", help="incomplete ordinary Bell polynomials B(r, n)")
    _common(p)
    p.add_argument("--r-max", type=_nonneg_int)
    p.set_defaults(handler=cmd_bell)

    p = sub.add_parser("walk", help="exact position distribution at time t")
    _common(p)
    p.add_argument("--t", type=_nonneg_int)
    _jump_args(p)
    p.set_defaults(handler=cmd_walk)

    p = sub.add_parser("mc", help="Monte Carlo position histograms")
    _common(p)
    p.add_argument("--t-max", type=_nonneg_int)
    p.add_argument("--samples", type=_positive_int)
    p.add_argument("--seed", type=_nonneg_int)
    p.add_argument("--record-times", type=lambda s: _int_range(s), help="times to histogram, e.g. 0..20 or 5,10")
    p.add_argument("--summary-out", help="also write the JSON summary here")
    _jump_args(p)
    p.set_defaults(handler=cmd_mc)

    p = sub.add_parser("analyze", help="recurrence, EST and bias report")
    _common(p, fmt="json")
    p.add_argument("--sites", type=_int_range, default=list(range(-5, 6)))
    p.add_argument("--t-max", type=_nonneg_int, default=2048)
    p.add_argument("--assume-tail", choices=("light", "fat"), help="tail class for tabulated densities")
    p.add_argument("--recurrence-tol", type=float, default=1e-9)
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("invert-bias", help="waiting-time density from a prescribed expected position")
    _common(p, density=False, horizon=False)
    p.add_argument("--f", type=_float_spec, help="file:<path> with f(1), f(2), ... one per line")
    p.add_argument("--report-out", help="also write the admissibility report (JSON) here")
    p.add_argument("--density-out", help="also write psi as a density file, one value per line")
    p.set_defaults(handler=cmd_invert_bias)

    p = sub.add_parser("sibuya", help="Sibuya walk figure data")
    _common(p, density=False, horizon=False)
    p.add_argument("--beta", type=_float_list, default=[0.1, 0.5, 0.9])
    p.add_argument("--t-max", type=_nonneg_int)
    p.add_argument("--fig", choices=("1", "2", "3", "est"), default="3")
    p.set_defaults(handler=cmd_sibuya)

    p = sub.add_parser("actrw", help="walk on a fractional Poisson clock")
    _common(p)
    p.add_argument("--mu", type=float)
    p.add_argument("--xi0", type=float, default=1.0)
    p.add_argument("--t", type=_time_grid, help="times as start:stop:step or a comma list")
    p.add_argument("--n-max", type=_nonneg_int)
    p.add_argument("--mc", action="store_true", help="Monte Carlo instead of the series")
    p.add_argument("--samples", type=_positive_int)
    p.add_argument("--seed", type=_nonneg_int)
    _jump_args(p)
    p.set_defaults(handler=cmd_actrw)

    p = sub.add_parser("verify", help="run the acceptance criteria")
    p.add_argument("--config", help="flat key = value file supplying defaults")
    p.add_argument("--only", type=_int_range, help="criterion numbers, e.g. 1..9 or 4,10")
    p.set_defaults(handler=cmd_verify)
    return parser


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            sp = _subparser(parser, args.command)
            sp.set_defaults(**_config_defaults(sp, args.config, load_config(args.config)))
            args = parser.parse_args(argv)
        result = args.handler(args)
        if isinstance(result, int):
            return result
        _emit(result.render(args.format), args.out)
        return 0
    except EnvelopeError as exc:
        print(f"adtrw: outside numerical envelope: {exc}", file=sys.stderr)
        return 2
    except (AdtrwError, ValueError) as exc:
        print(f"adtrw: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    try:
        code = run()
        sys.stdout.flush()
    except BrokenPipeError:
        # reader closed early (e.g. `| head`); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        code = 0
    sys.exit(code)


if __name__ == "__main__":
    main()
