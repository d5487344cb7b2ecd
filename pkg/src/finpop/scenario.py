"""Scenario files, experiment dispatch and report emission.

A scenario is a flat YAML mapping. Sizes, draw sizes, thresholds and
seeds are never defaulted: a scenario that omits one fails validation.

Example::

    name: lemma-n10
    seed: 7
    mode: exhaustive
    budget: 1000000
    population: {corpus: 10}
    experiment:
      kind: lemma_check
      l: [5, 4]
      epsilon: [0.41, 0.53, 0.67]
      version: [v1, v2]
    output: {json: out/lemma.json, csv: out/lemma.csv}
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
import platform
import time
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import __version__
from .bounds import BoundParams, class_vc, lemma_check, theorem_bound, theorem_check
from .combinatorics import combination_chunks
from .corpus import corpus_classes, corpus_population, synthetic_population
from .decomposition import horvitz_thompson, meng_decomposition, residual_tolerance
from .draws import DEFAULT_BUDGET, DrawSpec, counting_measure_from_errors, error_matrix, half_split_concentration
from .errors import BudgetError, FinPopError, ParseError
from .exact import as_fraction
from .hypotheses import HypothesisClass, effective_dichotomies, growth_bound_exact, growth_function, load_explicit_class
from .population import FinitePopulation, InclusionVector, load_population

KINDS = ("counting_measure", "lemma_check", "theorem_bound_sweep", "half_split", "meng", "ht_unbiasedness", "growth")

CSV_HEADERS = {
    "counting_measure": ["statistic", "epsilon", "bad", "total", "proportion"],
    "lemma_check": ["instance", "version", "epsilon", "l", "k", "lhs", "rhs", "factor", "holds", "vacuous"],
    "theorem_bound_sweep": ["epsilon", "l", "k", "h", "variant", "bound"],
    "half_split": ["epsilon", "proportion"],
    "meng": ["rho", "sigma_e", "factor", "gap", "rhs", "residual"],
    "ht_unbiasedness": ["N", "l", "draws", "mean_estimate", "population_mean", "equal"],
    "growth": ["class", "l", "growth", "bound", "below_bound"],
}

OUTPUT_ENV = "FINPOP_OUT"


class ValidationError(FinPopError):
    """The scenario is well-formed YAML but not a valid scenario."""


class ExperimentAssertionError(FinPopError):
    """An experiment ran but one of its checks failed."""


# --- scenario --------------------------------------------------------------


@dataclass
class Scenario:
    name: str
    seed: int
    mode: str
    budget: int
    population: dict | None
    hypothesis_class: dict | None
    experiment: dict
    trials: int | None = None
    workers: int = 1
    output: dict = field(default_factory=dict)
    base_dir: Path = field(default_factory=Path.cwd)

    def echo(self) -> dict:
        d = {
            "name": self.name,
            "seed": self.seed,
            "mode": self.mode,
            "budget": self.budget,
            "trials": self.trials,
            "population": self.population,
            "class": self.hypothesis_class,
            "experiment": self.experiment,
        }
        return _jsonable(d)


def _require(d: dict, key: str, where: str):
    if key not in d or d[key] is None:
        raise ValidationError(f"{where}: missing required field '{key}'")
    return d[key]


def _as_list(x) -> list:
    return list(x) if isinstance(x, (list, tuple)) else [x]


def parse_scenario(text: str, base_dir: str | os.PathLike = ".") -> Scenario:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"scenario is not valid YAML: {exc}") from None
    if not isinstance(raw, dict):
        raise ParseError("scenario must be a mapping")
    return validate_scenario(raw, base_dir)


def load_scenario(path: str | os.PathLike) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read scenario {path}: {exc}") from None
    return parse_scenario(text, path.parent)


def validate_scenario(raw: dict, base_dir: str | os.PathLike = ".") -> Scenario:
    name = str(_require(raw, "name", "scenario"))
    seed = _require(raw, "seed", "scenario")
    if not isinstance(seed, int):
        raise ValidationError("scenario: seed must be an integer")
    exp = _require(raw, "experiment", "scenario")
    if not isinstance(exp, dict):
        raise ValidationError("experiment must be a mapping")
    kind = _require(exp, "kind", "experiment")
    if kind not in KINDS:
        raise ValidationError(f"unknown experiment kind {kind!r}; expected one of {KINDS}")
    mode = raw.get("mode", "exhaustive")
    if mode not in ("exhaustive", "monte-carlo"):
        raise ValidationError(f"unknown mode {mode!r}")
    trials = raw.get("trials")
    if mode == "monte-carlo" and (not isinstance(trials, int) or trials < 1):
        raise ValidationError("monte-carlo mode needs an integer trials >= 1")
    budget = raw.get("budget", DEFAULT_BUDGET)
    workers = raw.get("workers", 1)
    if not isinstance(budget, int) or budget < 1 or not isinstance(workers, int) or workers < 1:
        raise ValidationError("budget and workers must be positive integers")
    pop = raw.get("population")
    cls = raw.get("class")
    sc = Scenario(name, seed, mode, budget, pop, cls, exp, trials, workers, raw.get("output") or {}, Path(base_dir))
    _validate_experiment(sc)
    return sc


def _validate_experiment(sc: Scenario) -> None:
    exp = sc.experiment
    kind = exp["kind"]
    where = f"experiment {kind}"
    needs_pop = kind in ("counting_measure", "lemma_check", "growth")
    if needs_pop:
        if not isinstance(sc.population, dict):
            raise ValidationError(f"{where}: needs a population block")
        if sc.hypothesis_class is None and "corpus" not in sc.population:
            raise ValidationError(f"{where}: needs a class block unless the population is the built-in corpus")
    if sc.population is not None:
        _validate_population(sc.population)
    if kind in ("counting_measure", "lemma_check"):
        for l in _as_list(_require(exp, "l", where)):
            if not isinstance(l, int) or l < 1:
                raise ValidationError(f"{where}: l must be a positive integer")
        for e in _as_list(_require(exp, "epsilon", where)):
            if not isinstance(e, (int, float, str)) or as_fraction(e) <= 0:
                raise ValidationError(f"{where}: epsilon must be > 0")
    if kind == "counting_measure":
        for s in _as_list(_require(exp, "statistic", where)):
            if s not in ("u_minus_vtr", "uprime_minus_vtr"):
                raise ValidationError(f"{where}: unknown statistic {s!r}")
    if kind == "lemma_check":
        for v in _as_list(_require(exp, "version", where)):
            if v not in ("v1", "v2"):
                raise ValidationError(f"{where}: version must be v1 or v2")
    if kind == "theorem_bound_sweep":
        for key in ("l", "k", "h", "epsilon"):
            _require(exp, key, where)
    if kind == "half_split":
        _require(exp, "epsilon", where)
        if "labels" not in exp and sc.population is None:
            raise ValidationError(f"{where}: needs labels or a population")
    if kind == "meng":
        if "randomized" in exp:
            rnd = exp["randomized"]
            _require(rnd, "N", where)
            _require(rnd, "instances", where)
        else:
            _require(exp, "errors", where)
            _require(exp, "inclusion", where)
    if kind == "ht_unbiasedness":
        _require(exp, "l", where)
        if "values" not in exp and sc.population is None:
            raise ValidationError(f"{where}: needs values or a population")
    if kind == "growth":
        _require(exp, "l", where)


def _validate_population(p: dict) -> None:
    sources = [k for k in ("file", "synthetic", "corpus") if k in p]
    if len(sources) != 1:
        raise ValidationError("population needs exactly one of file, synthetic, corpus")
    if "synthetic" in p:
        syn = p["synthetic"]
        _require(syn, "N", "population.synthetic")
        _require(syn, "seed", "population.synthetic")


# --- building inputs -------------------------------------------------------


def _build_population(sc: Scenario) -> FinitePopulation:
    p = sc.population
    if "file" in p:
        path = sc.base_dir / p["file"]
        if not path.exists():
            raise ValidationError(f"population file {path} does not exist")
        return load_population(path)
    if "synthetic" in p:
        syn = dict(p["synthetic"])
        N = syn.pop("N")
        try:
            return synthetic_population(N, **syn)
        except TypeError as exc:
            raise ValidationError(f"population.synthetic: {exc}") from None
    return corpus_population(int(p["corpus"]))


def _build_classes(sc: Scenario, pop: FinitePopulation) -> list[tuple[str, HypothesisClass]]:
    c = sc.hypothesis_class
    if c is None:
        return corpus_classes(int(sc.population["corpus"]))
    c = dict(c)
    kind = c.pop("kind", None)
    if kind is None:
        raise ValidationError("class: missing required field 'kind'")
    if kind == "explicit-finite":
        if "file" in c:
            path = sc.base_dir / c["file"]
            if not path.exists():
                raise ValidationError(f"class file {path} does not exist")
            return [(kind, load_explicit_class(path, c.get("declared_vc")))]
        return [(kind, HypothesisClass.explicit(c["labelings"], c.get("declared_vc")))]
    if "coords" in c:
        c["coords"] = tuple(c["coords"])
    try:
        return [(kind, HypothesisClass(kind, **c))]
    except TypeError as exc:
        raise ValidationError(f"class: {exc}") from None


def _spec(sc: Scenario, N: int, l: int) -> DrawSpec:
    if sc.mode == "exhaustive":
        return DrawSpec.exhaustive(N, l, budget=sc.budget, workers=sc.workers)
    return DrawSpec.monte_carlo(N, l, sc.trials, sc.seed, workers=sc.workers)


# --- experiments -----------------------------------------------------------


def _value(x):
    """JSON form: exact rationals as {num, den}."""
    if isinstance(x, Fraction):
        return {"num": x.numerator, "den": x.denominator}
    return x


def _csv_value(x) -> str:
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, bool):
        return "true" if x else "false"
    return str(x)


def _run_counting_measure(sc: Scenario):
    pop = _build_population(sc)
    results, rows = [], []
    for cname, cls in _build_classes(sc, pop):
        Err = error_matrix(pop, effective_dichotomies(cls, pop))
        for l in _as_list(sc.experiment["l"]):
            if l > pop.N:
                raise ValidationError(f"l={l} exceeds population size N={pop.N}")
            spec = _spec(sc, pop.N, l)
            for stat in _as_list(sc.experiment["statistic"]):
                for e in _as_list(sc.experiment["epsilon"]):
                    r = counting_measure_from_errors(Err, e, stat, spec)
                    results.append({"class": cname, "l": l, "statistic": stat, "epsilon": _value(as_fraction(e)), **r.to_json()})
                    rows.append([stat, as_fraction(e), r.bad, r.total, r.value])
    return results, rows, []


def _run_lemma(sc: Scenario):
    pop = _build_population(sc)
    results, rows, failures = [], [], []
    for cname, cls in _build_classes(sc, pop):
        Err = error_matrix(pop, effective_dichotomies(cls, pop))
        for l in _as_list(sc.experiment["l"]):
            if 2 * l > pop.N:
                raise ValidationError(f"l={l} needs 2l <= N={pop.N}")
            spec = _spec(sc, pop.N, l)
            for e in _as_list(sc.experiment["epsilon"]):
                eps = as_fraction(e)
                if not (pop.N - l >= l and l * eps > 2):
                    results.append({"class": cname, "l": l, "epsilon": _value(eps), "skipped": "outside k >= l > 2/eps"})
                    continue
                for v in _as_list(sc.experiment["version"]):
                    rep = lemma_check(pop, cls, eps, l, v, spec, error_mat=Err)
                    inst = f"{cname}-l{l}"
                    results.append(
                        {
                            "class": cname,
                            "hypothesis_class": rep.hypothesis_class,
                            "l": l,
                            "k": rep.k,
                            "epsilon": _value(eps),
                            "version": v,
                            "lhs": _value(rep.lhs),
                            "rhs": _value(rep.rhs),
                            "factor": _value(rep.factor),
                            "holds": rep.holds,
                            "vacuous": rep.vacuous,
                        }
                    )
                    rows.append([inst, v, eps, l, rep.k, rep.lhs, rep.rhs, rep.factor, rep.holds, rep.vacuous])
                    if not rep.holds:
                        failures.append(f"lemma {v} fails for {inst} eps={eps}")
    return results, rows, failures


def _run_bound_sweep(sc: Scenario):
    exp = sc.experiment
    results, rows = [], []
    for l, k, h, e in itertools.product(_as_list(exp["l"]), _as_list(exp["k"]), _as_list(exp["h"]), _as_list(exp["epsilon"])):
        try:
            params = BoundParams(l, k, h, float(e), bool(exp.get("allow_out_of_regime", False)))
        except FinPopError as exc:
            raise ValidationError(str(exc)) from None
        for variant in ("u", "uprime"):
            b = theorem_bound(params, variant)
            results.append({"l": l, "k": k, "h": h, "epsilon": float(e), "variant": variant, "bound": b, "vacuous": b >= 1})
            rows.append([float(e), l, k, h, variant, b])
    return results, rows, []


def _run_half_split(sc: Scenario):
    labels = sc.experiment.get("labels")
    if labels is None:
        labels = _build_population(sc).y.tolist()
    results, rows = [], []
    for e in _as_list(sc.experiment["epsilon"]):
        p = half_split_concentration(labels, e)
        results.append({"epsilon": _value(as_fraction(e)), "proportion": _value(p)})
        rows.append([as_fraction(e), p])
    return results, rows, []


def _run_meng(sc: Scenario):
    exp = sc.experiment
    reports = []
    if "randomized" in exp:
        rnd = exp["randomized"]
        rng = np.random.default_rng(sc.seed)
        for N in _as_list(rnd["N"]):
            for _ in range(int(rnd["instances"])):
                E = rng.normal(size=N) * rng.exponential()
                l = int(rng.integers(1, N))
                bits = np.zeros(N, dtype=int)
                bits[rng.choice(N, size=l, replace=False)] = 1
                reports.append(meng_decomposition(E, bits.tolist()))
    else:
        reports.append(meng_decomposition([float(as_fraction(v)) for v in exp["errors"]], InclusionVector(tuple(exp["inclusion"]))))
    results, rows, failures = [], [], []
    for rep in reports:
        results.append(rep.to_json())
        rows.append([rep.rho, rep.sigma_e, rep.quantity_factor, rep.gap_sample_minus_pop, rep.rhs_product, rep.residual])
        if abs(rep.residual) > residual_tolerance(rep.gap_sample_minus_pop):
            failures.append(f"identity residual {rep.residual} above tolerance")
    return results, rows, failures


def _run_ht(sc: Scenario):
    exp = sc.experiment
    if "values" in exp:
        values = [as_fraction(v) for v in exp["values"]]
    else:
        values = [Fraction(int(v)) for v in _build_population(sc).y]
    N = len(values)
    pop_mean = sum(values, Fraction(0)) / N
    results, rows, failures = [], [], []
    for l in _as_list(exp["l"]):
        if not 1 <= l <= N:
            raise ValidationError(f"l={l} must satisfy 1 <= l <= N={N}")
        draws = comb(N, l)
        if draws > sc.budget:
            raise BudgetError(f"{draws} draws exceed the enumeration budget {sc.budget}")
        probs = [Fraction(l, N)] * N
        total = Fraction(0)
        for idx in combination_chunks(N, l):
            for row in idx.tolist():
                total += horvitz_thompson(values, InclusionVector.from_indices(N, row), probs)
        mean_est = total / draws
        equal = mean_est == pop_mean
        results.append({"N": N, "l": l, "draws": draws, "mean_estimate": _value(mean_est), "population_mean": _value(pop_mean), "equal": equal})
        rows.append([N, l, draws, mean_est, pop_mean, equal])
        if not equal:
            failures.append(f"HT average {mean_est} != population mean {pop_mean} at l={l}")
    return results, rows, failures


def _run_growth(sc: Scenario):
    pop = _build_population(sc)
    results, rows = [], []
    for cname, cls in _build_classes(sc, pop):
        h = class_vc(cls, pop)
        for l in _as_list(sc.experiment["l"]):
            if not 1 <= l <= pop.N:
                raise ValidationError(f"l={l} must satisfy 1 <= l <= N={pop.N}")
            g = growth_function(cls, l, pop)
            bound = growth_bound_exact(l, h) if h >= 1 else None
            below = bool(bound is not None and g < bound)
            results.append({"class": cname, "l": l, "h": h, "growth": int(g), "lower_bound": g.lower_bound, "bound": _value(bound), "below_bound": below})
            rows.append([cname, l, int(g), bound, below])
    return results, rows, []


_RUNNERS = {
    "counting_measure": _run_counting_measure,
    "lemma_check": _run_lemma,
    "theorem_bound_sweep": _run_bound_sweep,
    "half_split": _run_half_split,
    "meng": _run_meng,
    "ht_unbiasedness": _run_ht,
    "growth": _run_growth,
}


# --- reports ---------------------------------------------------------------


@dataclass
class RunReport:
    scenario: dict
    kind: str
    results: list
    rows: list
    failures: list
    seed: int
    wall_time: float = 0.0
    versions: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def payload(self) -> dict:
        """Deterministic part of the report."""
        return _jsonable({"scenario": self.scenario, "kind": self.kind, "seed": self.seed, "results": self.results, "failures": self.failures})

    def to_json(self) -> dict:
        return {**self.payload(), "meta": {"wall_time": self.wall_time, "versions": self.versions}}


def _jsonable(x):
    if isinstance(x, Fraction):
        return {"num": x.numerator, "den": x.denominator}
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def canonical_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def report_csv(report: RunReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADERS[report.kind])
    for row in report.rows:
        w.writerow([_csv_value(v) for v in row])
    return buf.getvalue()


def run_experiment(scenario: Scenario | str | os.PathLike) -> RunReport:
    """Run one scenario and return its report (files are not written)."""
    sc = scenario if isinstance(scenario, Scenario) else load_scenario(scenario)
    t0 = time.perf_counter()
    results, rows, failures = _RUNNERS[sc.experiment["kind"]](sc)
    return RunReport(
        scenario=sc.echo(),
        kind=sc.experiment["kind"],
        results=results,
        rows=rows,
        failures=failures,
        seed=sc.seed,
        wall_time=time.perf_counter() - t0,
        versions={"finpop": __version__, "numpy": np.__version__, "python": platform.python_version()},
    )


def emit_report(report: RunReport, fmt: str, path: str | os.PathLike, *, include_meta: bool = True) -> Path:
    """Write the report as canonical JSON (sorted keys) or as the experiment's CSV table."""
    path = Path(path)
    if fmt == "json":
        text = canonical_json(report.to_json() if include_meta else report.payload())
    elif fmt == "csv":
        text = report_csv(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def output_paths(sc: Scenario, out_dir: str | os.PathLike | None = None) -> dict[str, Path]:
    """Requested output files; relative paths resolve against ``out_dir``,
    then ``$FINPOP_OUT``, then the scenario's directory."""
    base = Path(out_dir) if out_dir else Path(os.environ[OUTPUT_ENV]) if os.environ.get(OUTPUT_ENV) else sc.base_dir
    paths = {}
    for fmt in ("json", "csv"):
        if sc.output.get(fmt):
            p = Path(sc.output[fmt])
            paths[fmt] = p if p.is_absolute() else base / p
    if not paths:
        paths["json"] = base / f"{sc.name}.json"
    return paths
