"""Command line driver.

  drwlog verify  --config FILE [--jobs K] [--out FILE] [--timings]
  drwlog decompose --model "p=3 d=1 e=1 f=1 g=1 r=1 N=5" --form "dlog(1+T1)"
  drwlog explore --config FILE [--out FILE]

Exit codes: 0 all checks pass, 1 a check failed, 2 bad config or input, 3 size clamp exceeded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .divmodel import LocalModel
from .wittdrw import SizeClampExceeded

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CLAMP = 0, 1, 2, 3

SUITES = ("thm1", "decompose", "lemma3", "appendixB", "appendixC", "compare", "bgk", "thm2", "cor1")
MODEL_SUITES = {"thm1", "decompose", "appendixB", "appendixC", "bgk"}
LEVEL2_SUITES = {"thm2", "cor1"}
SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Unreadable or invalid configuration."""


@dataclass
class Scenario:
    id: str
    p: int
    d: int
    r: tuple[int, ...]
    q: int
    N: int
    suites: tuple[str, ...]
    m: int = 1
    n: int = 1
    e: int | None = None
    f: int | None = None
    g: int | None = None
    samples: int = 100
    seed: int = 0
    internal_prec: int | None = None
    r_tilde: tuple[int, ...] | None = None
    reading: str = "literal"
    h_max: int | None = None
    extra: dict = field(default_factory=dict)

    def model(self) -> LocalModel:
        if None in (self.e, self.f, self.g):
            raise ConfigError(f"scenario {self.id}: suites {sorted(MODEL_SUITES & set(self.suites))} need e, f, g")
        return LocalModel(self.p, self.d, self.e, self.f, self.g, self.r, self.N, self.m, 1)


SCENARIO_KEYS = {"id", "p", "m", "n", "d", "e", "f", "g", "r", "q", "N", "suites", "samples", "seed",
                 "internal_prec", "r_tilde", "reading", "h_max"}
TOP_KEYS = {"schema", "seed", "scenario"}


def _int(table: dict, key: str, where: str, default=None, required: bool = True) -> int | None:
    if key not in table:
        if required and default is None:
            raise ConfigError(f"{where}: missing key '{key}'")
        return default
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: '{key}' must be an integer")
    return value


def _int_list(table: dict, key: str, where: str) -> tuple[int, ...] | None:
    if key not in table:
        return None
    value = table[key]
    if not isinstance(value, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in value):
        raise ConfigError(f"{where}: '{key}' must be a list of integers")
    return tuple(value)


def env_seed() -> int | None:
    raw = os.environ.get("DRWLOG_SEED")
    if raw is None or raw == "":
        return None
    try:
        value = int(raw, 0)
    except ValueError as exc:
        raise ConfigError(f"DRWLOG_SEED={raw!r} is not an integer") from exc
    if not 0 <= value < 2**64:
        raise ConfigError("DRWLOG_SEED must be a 64-bit unsigned integer")
    return value


def parse_config(text: str) -> list[Scenario]:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error: {exc}") from exc
    unknown = set(data) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    if data.get("schema", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema {data.get('schema')!r}")
    tables = data.get("scenario", [])
    if not isinstance(tables, list) or not tables:
        raise ConfigError("config needs at least one [[scenario]] table")
    default_seed = _int(data, "seed", "config", default=0, required=False)
    override = env_seed()
    scenarios, seen = [], set()
    for index, table in enumerate(tables):
        where = f"scenario #{index + 1}"
        unknown = set(table) - SCENARIO_KEYS
        if unknown:
            raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
        r = _int_list(table, "r", where)
        if r is None:
            raise ConfigError(f"{where}: missing key 'r'")
        suites = table.get("suites")
        if not isinstance(suites, list) or not suites or not all(isinstance(s, str) for s in suites):
            raise ConfigError(f"{where}: 'suites' must be a non-empty list of names")
        bad = [s for s in suites if s not in SUITES]
        if bad:
            raise ConfigError(f"{where}: unknown suites {bad}; choose from {list(SUITES)}")
        reading = table.get("reading", "literal")
        if reading not in ("literal", "corrected"):
            raise ConfigError(f"{where}: 'reading' must be 'literal' or 'corrected'")
        seed = _int(table, "seed", where, default=default_seed, required=False)
        scenario = Scenario(
            id=str(table.get("id", f"s{index + 1:03d}")),
            p=_int(table, "p", where), d=_int(table, "d", where, default=len(r), required=False),
            r=r, q=_int(table, "q", where), N=_int(table, "N", where), suites=tuple(suites),
            m=_int(table, "m", where, default=1, required=False), n=_int(table, "n", where, default=1, required=False),
            e=_int(table, "e", where, required=False), f=_int(table, "f", where, required=False),
            g=_int(table, "g", where, required=False),
            samples=_int(table, "samples", where, default=100, required=False),
            seed=override if override is not None else seed,
            internal_prec=_int(table, "internal_prec", where, required=False),
            r_tilde=_int_list(table, "r_tilde", where), reading=reading,
            h_max=_int(table, "h_max", where, required=False))
        if scenario.id in seen:
            raise ConfigError(f"{where}: duplicate scenario id {scenario.id!r}")
        seen.add(scenario.id)
        _validate(scenario, where)
        scenarios.append(scenario)
    return scenarios


def _validate(s: Scenario, where: str) -> None:
    if len(s.r) != s.d:
        raise ConfigError(f"{where}: r has length {len(s.r)} but d={s.d}")
    if s.m != 1:
        raise ConfigError(f"{where}: only m = 1 (coefficients F_p) is supported")
    if not 0 <= s.q <= s.d:
        raise ConfigError(f"{where}: need 0 <= q <= d")
    if s.N < 1 or s.samples < 0:
        raise ConfigError(f"{where}: N must be positive and samples non-negative")
    level2 = LEVEL2_SUITES & set(s.suites)
    if level2 and s.n != 2:
        raise ConfigError(f"{where}: suites {sorted(level2)} need n = 2")
    if not level2 and s.n != 1:
        raise ConfigError(f"{where}: level n = {s.n} is only used by the thm2 and cor1 suites")
    if MODEL_SUITES & set(s.suites) or "lemma3" in s.suites:
        if None in (s.e, s.f, s.g):
            raise ConfigError(f"{where}: suites {sorted((MODEL_SUITES | {'lemma3'}) & set(s.suites))} need e, f, g")
    if MODEL_SUITES & set(s.suites):
        try:
            s.model()
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from exc


def run_suite(s: Scenario, suite: str):
    from .engine import appendix, compare, express, graded, thm1, thm2
    sid = f"{s.id}:{suite}"
    if suite == "thm1":
        return thm1.verify_thm1(s.model(), s.q, s.N, s.internal_prec, scenario=sid, r_tilde_override=s.r_tilde)
    if suite == "decompose":
        return express.verify_decomposition(s.model(), s.q, s.samples, s.seed, scenario=sid)
    if suite == "lemma3":
        return graded.verify_lemma3(s.p, s.d, s.e, s.q, s.N, s.h_max, s.reading, scenario=sid)
    if suite == "appendixB":
        return appendix.verify_appendix_d(s.model(), s.q, s.N, scenario=sid, seed=s.seed,
                                          epsilon_samples=min(s.samples, 50) or 50)
    if suite == "appendixC":
        return appendix.verify_ses_Finv(s.model(), s.q, s.N, scenario=sid)
    if suite == "compare":
        return compare.verify_strict_inclusions(s.p, s.r, s.q, s.N, scenario=sid, internal_prec=s.internal_prec)
    if suite == "bgk":
        return compare.verify_bgk_n1(s.model(), s.q, s.N, scenario=sid)
    if suite == "thm2":
        return thm2.verify_thm2_restricted(s.p, s.r, s.q, s.N, scenario=sid)
    if suite == "cor1":
        return thm2.verify_cor1(s.p, s.r, s.q, s.N, seed=s.seed, reading=s.reading, scenario=sid)
    raise ConfigError(f"unknown suite {suite}")  # pragma: no cover


def run_scenario(s: Scenario, timings: bool = False) -> list[dict]:
    if LEVEL2_SUITES & set(s.suites):
        from .wittdrw import check_clamp
        check_clamp(s.p, s.d, s.n, s.N)
    return [run_suite(s, suite).as_json(timings) for suite in s.suites]


def run(scenarios: Sequence[Scenario], jobs: int = 1, timings: bool = False) -> list[dict]:
    """Reports in scenario order (then suite order), independent of the worker count."""
    if jobs > 1 and len(scenarios) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            batches = list(pool.map(run_scenario, scenarios, [timings] * len(scenarios)))
    else:
        batches = [run_scenario(s, timings) for s in scenarios]
    return [report for batch in batches for report in batch]


def _dump(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False, default=_json_default) + "\n"


def _json_default(value):
    if hasattr(value, "tolist"):
        return value.tolist()
    if isinstance(value, (set, frozenset)):
        return sorted(value)
    raise TypeError(f"not serializable: {type(value).__name__}")


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def cmd_verify(args) -> int:
    try:
        with open(args.config, encoding="utf-8") as handle:
            scenarios = parse_config(handle.read())
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        reports = run(scenarios, args.jobs, args.timings)
    except SizeClampExceeded as exc:
        print(f"clamp: {exc}", file=sys.stderr)
        return EXIT_CLAMP
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _emit(_dump(reports), args.out)
    for report in reports:
        status = "PASS" if report["passed"] else "FAIL"
        print(f"{status} {report['scenario']}", file=sys.stderr)
        if not report["passed"]:
            for witness in report["witnesses"][:2]:
                print(f"    witness: {witness}", file=sys.stderr)
    return EXIT_OK if all(r["passed"] for r in reports) else EXIT_FAIL


def parse_model(text: str) -> tuple[LocalModel, dict]:
    """'p=3 d=2 e=1 f=1 g=2 r=1,3 N=5' (whitespace separated key=value; r comma separated)."""
    values: dict[str, Any] = {}
    for token in text.split():
        if "=" not in token:
            raise ConfigError(f"model token {token!r} is not key=value")
        key, raw = token.split("=", 1)
        if key not in {"p", "m", "d", "e", "f", "g", "r", "N"}:
            raise ConfigError(f"unknown model key {key!r}")
        try:
            values[key] = tuple(int(x) for x in raw.split(",")) if key == "r" else int(raw)
        except ValueError as exc:
            raise ConfigError(f"model value {token!r} is not an integer") from exc
    missing = {"p", "e", "f", "g", "r"} - set(values)
    if missing:
        raise ConfigError(f"model is missing {sorted(missing)}")
    d = values.get("d", len(values["r"]))
    if values.get("m", 1) != 1:
        raise ConfigError("only m = 1 is supported")
    try:
        model = LocalModel(values["p"], d, values["e"], values["f"], values["g"], values["r"], values.get("N", 6))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return model, values


def cmd_decompose(args) -> int:
    from .engine.express import NoRefinement, express_as_dlog_products
    from .engine.graded import NotInLogPart
    from .engine.thm1 import model_ring
    from .formparse import FormSyntaxError, FormTypeError, evaluate_text
    from .forms import LogForm
    try:
        model, _ = parse_model(args.model)
        ring = model_ring(model)
        value = evaluate_text(args.form, ring, model.d, model.prec, model.log_axes)
    except (ConfigError, FormSyntaxError, FormTypeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not isinstance(value, LogForm):
        print("input error: the expression is a function, not a form", file=sys.stderr)
        return EXIT_CONFIG
    try:
        fact = express_as_dlog_products(value, model)
    except NotInLogPart as exc:
        print(f"not decomposable: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except NoRefinement as exc:
        print(f"refinement failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    back = fact.evaluate(ring, model.d, model.prec, model.log_axes)
    ok = (back - value).is_zero()
    print(f"# {model.label()} q={value.q} axis={'-' if fact.axis is None else fact.axis + 1}")
    for line in fact.to_text():
        print(line)
    print(f"# round trip: {'ok' if ok else 'MISMATCH'}")
    return EXIT_OK if ok else EXIT_FAIL


EXPLORE_KEYS = {"p", "max_d", "cap", "N", "q"}


def cmd_explore(args) -> int:
    from .engine.compare import explore, remark_witnesses
    try:
        with open(args.config, encoding="utf-8") as handle:
            data = tomllib.loads(handle.read())
        table = data.get("explore")
        if not isinstance(table, dict) or set(data) - {"schema", "explore"}:
            raise ConfigError("explore config needs exactly one [explore] table")
        unknown = set(table) - EXPLORE_KEYS
        if unknown:
            raise ConfigError(f"unknown explore keys {sorted(unknown)}")
        p_values = table.get("p", [2, 3])
        q_values = table.get("q", [1, 2])
        max_d = _int(table, "max_d", "explore", default=3, required=False)
        cap = _int(table, "cap", "explore", default=3, required=False)
        N = _int(table, "N", "explore", default=4, required=False)
        if not isinstance(p_values, list) or not isinstance(q_values, list):
            raise ConfigError("'p' and 'q' must be lists")
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (tomllib.TOMLDecodeError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if max_d > 3 or cap > 6 or N > 6:
        print("clamp: explorer bounds are d <= 3, cap <= 6, N <= 6", file=sys.stderr)
        return EXIT_CLAMP
    result = explore(p_values, max_d, cap, N, q_values)
    must_find = []
    for p in p_values:
        r = (1, 1, p)
        if max_d >= 3 and cap >= p:
            witnesses = remark_witnesses(p, r, N)
            must_find.append({"p": p, "r": list(r), "witnesses": witnesses,
                              "ok": all(w["ok"] for w in witnesses)})
    result["must_find"] = must_find
    result["schema"] = SCHEMA_VERSION
    _emit(_dump(result), args.out)
    passed = not result["violations"] and all(row["ok"] for row in must_find)
    print(f"{len(result['rows'])} rows, {len(result['violations'])} violations, "
          f"{sum(1 for row in must_find if row['ok'])}/{len(must_find)} must-find rows confirmed", file=sys.stderr)
    return EXIT_OK if passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="drwlog", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    verify = sub.add_parser("verify", help="run the suites of a scenario config")
    verify.add_argument("--config", required=True)
    verify.add_argument("--jobs", type=int, default=1)
    verify.add_argument("--out")
    verify.add_argument("--timings", action="store_true", help="record elapsed_ms (reports stop being byte-stable)")
    verify.set_defaults(handler=cmd_verify)
    decompose = sub.add_parser("decompose", help="factor a log form into dlog products")
    decompose.add_argument("--model", required=True)
    decompose.add_argument("--form", required=True)
    decompose.set_defaults(handler=cmd_decompose)
    exp = sub.add_parser("explore", help="search for strict inclusions between the twisted subsheaves")
    exp.add_argument("--config", required=True)
    exp.add_argument("--out")
    exp.set_defaults(handler=cmd_explore)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    return args.handler(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
