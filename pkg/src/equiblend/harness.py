"""Scenario harness: JSON-described convergence runs with deterministic,
byte-stable reports.

A scenario names a registered two-variable function, an approximation
operator, an anchor scheme, and a list of (x, y) probes; the runner evaluates
the operator's level terms along a schedule and applies the tail criterion
against the function's own value at each probe.  Reports serialize with a
fixed float format and fixed key order, so identical runs produce identical
bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .connectors import affine_line, affine_space, warped_line
from .gallery import (
    FinSeq,
    SequentialPoint,
    TaggedReal,
    as_float,
    collapsing_instance,
    dirichlet_tower,
    example1_function,
    example2_eval,
    half_line_instance,
)
from .operators import (
    TAIL_K,
    SectionedFunction,
    anchored_cells,
    lambda_blend,
    piecewise_anchor,
    tail_check,
)
from .partitions import grid_scheme, sorgenfrey_scheme


class ConfigError(ValueError):
    pass


SCENARIO_KEYS = ("name", "x_space", "z_space", "function", "scheme", "operator", "probes", "schedule", "eps", "rng_seed")
OPERATORS = ("lambda_blend", "piecewise_anchor", "ambiguous_limit", "tower_tail")
DEFAULT_SCHEDULE = (1, 2, 4, 8, 16, 32, 64, 128, 256)
DEFAULT_EPS = 1e-3


# ---------------------------------------------------------------------------
# function registry


@dataclass(frozen=True)
class FunctionSpec:
    kind: str  # "pointwise" | "sequential" | "ambiguous"
    make: Callable
    summary: str


def _constant_function() -> SectionedFunction:
    return SectionedFunction.from_callable(lambda x, y: 0.5)


def _product_function() -> SectionedFunction:
    return SectionedFunction.from_callable(lambda x, y: float(x) * as_float(y))


def _bilinear_ratio(x, y) -> float:
    x = float(x)
    v = as_float(y)
    if x == 0.0 and v == 0.0:
        return 0.0
    return 2.0 * x * v / (x * x + v * v)


def _sine_sum_function() -> SectionedFunction:
    return SectionedFunction.from_callable(lambda x, y: math.sin(float(x) + as_float(y)))


def _collapsing_function() -> SectionedFunction:
    return SectionedFunction.from_callable(collapsing_instance())


def _head_sequence_function() -> SectionedFunction:
    # scalar x enters as the first coordinate of a finitely-supported sequence
    def f(x, y):
        return example2_eval(FinSeq.from_list([float(x)]), y)

    def regularity(x):
        return dirichlet_tower() if float(x) == 0.0 else None

    return SectionedFunction(eval=f, anchor_regularity=regularity, x_continuity_declared=True)


REGISTRY = {
    "constant": FunctionSpec("pointwise", _constant_function, "constant 0.5"),
    "product": FunctionSpec("pointwise", _product_function, "x * y on the line"),
    "bilinear_ratio": FunctionSpec("pointwise", lambda: SectionedFunction.from_callable(_bilinear_ratio), "2xy/(x^2+y^2), 0 at the origin"),
    "sine_sum": FunctionSpec("pointwise", _sine_sum_function, "sin(x + y)"),
    "collapsing_bump": FunctionSpec("pointwise", _collapsing_function, "collapsing bump on [-1, 1]"),
    "example1": FunctionSpec("sequential", example1_function, "spike towers on the sequential fan"),
    "example2": FunctionSpec("pointwise", _head_sequence_function, "nested-shell bump sum, scalar head coordinate"),
    "half_line_split": FunctionSpec("ambiguous", half_line_instance, "two-cell glued limit on the line"),
}

SCHEME_KINDS = ("grid", "sorgenfrey", "none")
Z_KINDS = ("line", "affine", "warped")


# ---------------------------------------------------------------------------
# scenario parsing


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def _as_number(v, message: str) -> float:
    _require(isinstance(v, (int, float)) and not isinstance(v, bool), message)
    value = float(v)
    _require(math.isfinite(value), message)
    return value


def _parse_y(spec) -> TaggedReal:
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return TaggedReal.plain(float(spec))
    if isinstance(spec, dict) and len(spec) == 1:
        if "rational" in spec:
            pq = spec["rational"]
            _require(
                isinstance(pq, (list, tuple)) and len(pq) == 2 and all(isinstance(v, int) and not isinstance(v, bool) for v in pq),
                f"rational y spec needs [p, q] integers, got {pq!r}",
            )
            _require(pq[1] != 0, "rational y spec needs a nonzero denominator")
            return TaggedReal.rational(pq[0], pq[1])
        if "irrational" in spec:
            return TaggedReal.irrational(_as_number(spec["irrational"], "irrational y spec needs a number"))
    raise ConfigError(f"bad y spec {spec!r}: expected a number, {{'rational': [p, q]}} or {{'irrational': v}}")


def _parse_x(spec, fn_kind: str):
    if isinstance(spec, dict):
        _require(set(spec) == {"sequential"}, f"bad x spec {spec!r}")
        _require(fn_kind == "sequential", "sequential x specs only apply to sequential-fan functions")
        form = spec["sequential"]
        _require(isinstance(form, (list, tuple)) and form and isinstance(form[0], str), f"bad sequential spec {form!r}")
        try:
            if form[0] == "origin" and len(form) == 1:
                return SequentialPoint.origin()
            if form[0] == "level" and len(form) == 2:
                return SequentialPoint.level(int(form[1]))
            if form[0] == "leaf" and len(form) == 3:
                return SequentialPoint.leaf(int(form[1]), int(form[2]))
        except ValueError as exc:
            raise ConfigError(f"bad sequential spec {form!r}: {exc}") from exc
        raise ConfigError(f"bad sequential spec {form!r}")
    _require(fn_kind != "sequential", "sequential-fan functions need {'sequential': ...} x specs")
    if isinstance(spec, (list, tuple)):
        values = [_as_number(v, f"bad x coordinate {v!r}") for v in spec]
        _require(len(values) >= 1, "x spec list must be nonempty")
        return np.array(values, dtype=float)
    return _as_number(spec, f"bad x spec {spec!r}")


def _check_x_space(cfg: dict, x, index: int) -> None:
    kind = cfg["kind"]
    if kind == "sequential_fan":
        _require(isinstance(x, SequentialPoint), f"probe {index}: fan scenarios need sequential points")
        return
    _require(not isinstance(x, SequentialPoint), f"probe {index}: sequential point outside a fan scenario")
    if kind == "real_line":
        return
    if kind == "half_open_line":
        lo, hi = cfg.get("domain", (0.0, 1.0))
        _require(np.ndim(x) == 0 and lo <= float(x) < hi, f"probe {index}: x {x!r} outside [{lo}, {hi})")
        return
    if kind == "box":
        lo, hi = cfg["lo"], cfg["hi"]
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        _require(arr.size == int(cfg.get("dim", 1)), f"probe {index}: x {x!r} has the wrong dimension")
        _require(bool(np.all(arr >= lo) and np.all(arr <= hi)), f"probe {index}: x {x!r} outside the box")
        return
    raise ConfigError(f"unknown x_space kind {kind!r}")


def _default_x_space(scheme_cfg: dict, fn_kind: str) -> dict:
    if fn_kind == "sequential":
        return {"kind": "sequential_fan"}
    if scheme_cfg["kind"] == "grid":
        return {"kind": "box", "dim": int(scheme_cfg.get("dim", 1)), "lo": scheme_cfg["lo"], "hi": scheme_cfg["hi"]}
    if scheme_cfg["kind"] == "sorgenfrey":
        return {"kind": "half_open_line", "domain": list(scheme_cfg.get("domain", (0.0, 1.0)))}
    return {"kind": "real_line"}


@dataclass
class Scenario:
    name: str
    fn_name: str
    operator: str
    x_cfg: dict
    z_cfg: dict
    scheme_cfg: dict
    probes: tuple  # ((x, y TaggedReal), ...) parsed
    probes_raw: tuple
    schedule: tuple
    eps: float
    rng_seed: int

    def echo(self) -> dict:
        return {
            "name": self.name,
            "x_space": self.x_cfg,
            "z_space": self.z_cfg,
            "function": self.fn_name,
            "scheme": self.scheme_cfg,
            "operator": self.operator,
            "probes": list(self.probes_raw),
            "schedule": list(self.schedule),
            "eps": self.eps,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        _require(isinstance(data, dict), "scenario must be a JSON object")
        unknown = set(data) - set(SCENARIO_KEYS)
        _require(not unknown, f"unknown scenario keys {sorted(unknown)!r}")
        for key in ("name", "function", "operator", "probes"):
            _require(key in data, f"scenario is missing {key!r}")
        name = data["name"]
        _require(isinstance(name, str) and name, "scenario name must be a nonempty string")
        fn_name = data["function"]
        _require(fn_name in REGISTRY, f"unknown function {fn_name!r}; see the list command")
        operator = data["operator"]
        _require(operator in OPERATORS, f"unknown operator {operator!r}")
        spec = REGISTRY[fn_name]

        scheme_cfg = data.get("scheme", {"kind": "none"})
        _require(isinstance(scheme_cfg, dict) and scheme_cfg.get("kind") in SCHEME_KINDS, f"bad scheme {scheme_cfg!r}")
        if operator in ("lambda_blend", "piecewise_anchor"):
            _require(scheme_cfg["kind"] != "none", f"{operator} needs a grid or sorgenfrey scheme")
            _require(spec.kind == "pointwise", f"{operator} needs a pointwise function")
        elif operator == "ambiguous_limit":
            _require(spec.kind == "ambiguous", f"{operator} needs an ambiguous-cell instance")
            _require(scheme_cfg["kind"] == "none", f"{operator} does not take a scheme")
        else:  # tower_tail
            _require(spec.kind != "ambiguous", f"{operator} needs a function with anchor towers")
            _require(scheme_cfg["kind"] == "none", f"{operator} does not take a scheme")
        if scheme_cfg["kind"] == "grid":
            for key in ("dim", "lo", "hi"):
                _require(key in scheme_cfg, f"grid scheme needs {key!r}")

        z_cfg = data.get("z_space", {"kind": "line", "dim": 1})
        _require(isinstance(z_cfg, dict) and z_cfg.get("kind") in Z_KINDS, f"bad z_space {z_cfg!r}")

        schedule_raw = data.get("schedule", list(DEFAULT_SCHEDULE))
        _require(
            isinstance(schedule_raw, (list, tuple)) and schedule_raw and all(isinstance(n, int) and not isinstance(n, bool) and n >= 1 for n in schedule_raw),
            f"schedule must be a nonempty list of positive integers, got {schedule_raw!r}",
        )
        schedule = tuple(int(n) for n in schedule_raw)
        _require(all(a < b for a, b in zip(schedule, schedule[1:])), "schedule must be strictly increasing")

        eps = data.get("eps", DEFAULT_EPS)
        eps = _as_number(eps, f"eps must be a finite number, got {eps!r}")
        _require(eps >= 0.0, "eps must be nonnegative")

        rng_seed = data.get("rng_seed", 0)
        _require(isinstance(rng_seed, int) and not isinstance(rng_seed, bool), "rng_seed must be an integer")

        probes_raw = data["probes"]
        _require(isinstance(probes_raw, list), "probes must be a list")
        x_cfg = data.get("x_space") or _default_x_space(scheme_cfg, spec.kind)
        _require(isinstance(x_cfg, dict) and "kind" in x_cfg, f"bad x_space {x_cfg!r}")
        parsed = []
        for index, probe in enumerate(probes_raw):
            _require(isinstance(probe, dict) and set(probe) == {"x", "y"}, f"probe {index} must be an object with keys x and y")
            x = _parse_x(probe["x"], spec.kind)
            _check_x_space(x_cfg, x, index)
            parsed.append((x, _parse_y(probe["y"])))
        return cls(
            name=name,
            fn_name=fn_name,
            operator=operator,
            x_cfg=x_cfg,
            z_cfg=z_cfg,
            scheme_cfg=scheme_cfg,
            probes=tuple(parsed),
            probes_raw=tuple(probes_raw),
            schedule=schedule,
            eps=eps,
            rng_seed=int(rng_seed),
        )


def load_scenario_file(path) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario {path} is not valid JSON: {exc}") from exc
    return Scenario.from_dict(data)


# ---------------------------------------------------------------------------
# running


def _build_scheme(cfg: dict, n_max: int):
    if cfg["kind"] == "grid":
        return grid_scheme(int(cfg["dim"]), (cfg["lo"], cfg["hi"]), n_max=n_max)
    domain = tuple(cfg.get("domain", (0.0, 1.0)))
    return sorgenfrey_scheme(n_max=n_max, domain=domain)


def _build_z_space(cfg: dict):
    if cfg["kind"] == "line":
        return affine_line(int(cfg.get("dim", 1)))
    if cfg["kind"] == "affine":
        return affine_space(cfg.get("lo", 0.0), cfg.get("hi", 1.0), int(cfg.get("dim", 1)))
    return warped_line()


@dataclass(frozen=True)
class ProbeRecord:
    x: object  # raw probe specs, echoed
    y: object
    target: float
    terms: tuple
    gaps: tuple
    passed: bool
    final_gap: float


@dataclass(frozen=True)
class ScenarioReport:
    scenario: dict
    records: tuple
    summary: dict


def _tower_terms(sf: SectionedFunction, x, y, schedule) -> tuple:
    tower = sf.tower_at(x) if sf.anchor_regularity is not None else None
    if tower is None:
        raise ConfigError(f"no anchor tower at {x!r}")
    if tower.depth == 0:
        value = tower.limit_eval(y)
        return tuple(value for _ in schedule), value
    terms = tuple(tower.tower(n).limit_eval(y) for n in schedule)
    return terms, tower.limit_eval(y)


def run_scenario(scenario: Scenario) -> ScenarioReport:
    spec = REGISTRY[scenario.fn_name]
    schedule = scenario.schedule
    per_probe = [[] for _ in scenario.probes]
    targets: list

    if scenario.operator in ("lambda_blend", "piecewise_anchor"):
        scheme = _build_scheme(scenario.scheme_cfg, n_max=max(schedule))
        z_space = _build_z_space(scenario.z_cfg)
        sf = spec.make()
        for n in schedule:
            if scenario.operator == "lambda_blend":
                term = lambda_blend(sf, scheme, z_space, n)
            else:
                cells, anchor_of, _ = anchored_cells(scheme, n)
                term = piecewise_anchor(sf, cells, anchor_of, n)
            for slot, (x, y) in zip(per_probe, scenario.probes):
                slot.append(term(x, y))
        targets = [sf.eval(x, y) for x, y in scenario.probes]
    elif scenario.operator == "ambiguous_limit":
        instance = spec.make()
        target_fn = instance.target()
        for n in schedule:
            term = instance.term(n)
            for slot, (x, y) in zip(per_probe, scenario.probes):
                slot.append(term(x, y))
        targets = [target_fn(x, y) for x, y in scenario.probes]
    else:  # tower_tail
        sf = spec.make()
        targets = []
        for slot, (x, y) in zip(per_probe, scenario.probes):
            terms, target = _tower_terms(sf, x, y, schedule)
            slot.extend(terms)
            targets.append(target)

    records = []
    for raw, terms, target in zip(scenario.probes_raw, per_probe, targets):
        passed, gaps, final_gap = tail_check(terms, target, scenario.eps, TAIL_K)
        records.append(
            ProbeRecord(
                x=raw["x"],
                y=raw["y"],
                target=float(target),
                terms=tuple(float(t) for t in terms),
                gaps=gaps,
                passed=passed,
                final_gap=float(final_gap),
            )
        )
    passed_count = sum(1 for r in records if r.passed)
    summary = {
        "probes": len(records),
        "passed": passed_count,
        "failed": len(records) - passed_count,
        "all_passed": passed_count == len(records),
    }
    return ScenarioReport(scenario=scenario.echo(), records=tuple(records), summary=summary)


def report_data(report: ScenarioReport) -> dict:
    return {
        "scenario": report.scenario,
        "records": [
            {
                "x": r.x,
                "y": r.y,
                "target": r.target,
                "terms": list(r.terms),
                "gaps": list(r.gaps),
                "passed": r.passed,
                "final_gap": r.final_gap,
            }
            for r in report.records
        ],
        "summary": report.summary,
    }


def suite_data(reports: Sequence[ScenarioReport]) -> dict:
    reports = list(reports)
    probes = sum(r.summary["probes"] for r in reports)
    passed = sum(r.summary["passed"] for r in reports)
    return {
        "scenarios": [report_data(r) for r in reports],
        "summary": {
            "scenarios": len(reports),
            "probes": probes,
            "passed": passed,
            "failed": probes - passed,
            "all_passed": passed == probes,
        },
    }


# ---------------------------------------------------------------------------
# deterministic rendering


def _fmt_float(v: float) -> str:
    if not math.isfinite(v):
        raise ValueError(f"non-finite value {v!r} in a report")
    return "%.17g" % v


def _render(obj, out: list, indent: int) -> None:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = list(obj.items())
        for pos, (key, value) in enumerate(items):
            out.append("  " * (indent + 1))
            out.append(json.dumps(str(key)))
            out.append(": ")
            _render(value, out, indent + 1)
            out.append(",\n" if pos < len(items) - 1 else "\n")
        out.append(pad)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        values = list(obj)
        if not values:
            out.append("[]")
            return
        out.append("[\n")
        for pos, value in enumerate(values):
            out.append("  " * (indent + 1))
            _render(value, out, indent + 1)
            out.append(",\n" if pos < len(values) - 1 else "\n")
        out.append(pad)
        out.append("]")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(_fmt_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif obj is None:
        out.append("null")
    elif isinstance(obj, np.ndarray):
        _render([float(v) for v in np.atleast_1d(obj)], out, indent)
    else:
        raise TypeError(f"cannot render {type(obj).__name__} in a report")


def render_json(data: dict) -> str:
    out: list = []
    _render(data, out, 0)
    out.append("\n")
    return "".join(out)


def _compact(obj) -> str:
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{_compact(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_compact(v) for v in obj) + "]"
    raise TypeError(f"cannot render {type(obj).__name__} in a report cell")


def render_csv(reports: Sequence[ScenarioReport]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["scenario", "probe", "x", "y", "target", "passed", "final_gap", "last_term"])
    for report in reports:
        name = report.scenario["name"]
        for index, r in enumerate(report.records):
            writer.writerow(
                [
                    name,
                    index,
                    _compact(r.x),
                    _compact(r.y),
                    _fmt_float(r.target),
                    "true" if r.passed else "false",
                    _fmt_float(r.final_gap),
                    _fmt_float(r.terms[-1]),
                ]
            )
    return buffer.getvalue()


# ---------------------------------------------------------------------------
# section probing


def section_probe(f, x: float, y_grid: Sequence[float], deltas: Sequence[float], sided: bool = False) -> tuple:
    """First-variable modulus, uniform over a probe grid of y values.

    For each delta, the largest |f(x +/- delta, y) - f(x, y)| over the grid;
    ``sided`` keeps only the rightward displacement, matching half-open
    tilings where the leftward step exits the tile.
    """
    fn = f.eval if isinstance(f, SectionedFunction) else f
    x = float(x)
    ys = [float(v) for v in y_grid]
    bases = [float(fn(x, y)) for y in ys]
    out = []
    for delta in deltas:
        delta = float(delta)
        if not delta > 0:
            raise ValueError("deltas must be positive")
        shifts = (delta,) if sided else (-delta, delta)
        worst = 0.0
        for y, base in zip(ys, bases):
            for s in shifts:
                worst = max(worst, abs(float(fn(x + s, y)) - base))
        out.append(worst)
    return tuple(out)
