"""JSON experiment configuration: schema validation, presets and object building."""

import copy
import json

import jsonschema

from bernfield.errors import ConfigurationError
from bernfield.fields import (
    DifferenceFieldModel, Example1Model, KernelFieldModel, VolterraFieldModel,
)
from bernfield.harness import DEFAULT_TESTS, MIN_REPS, NORMALIZATIONS, TESTS, ExperimentConfig
from bernfield.innovations import InnovationField, InnovationSpec, parse_seed
from bernfield.weights import (
    IndexSetWeights, MeasureSpec, ProductLinearWeights, RectangleWeights, Region,
    SetIndexedWeights, contiguous, example2_gamma, fractional_kernel,
)

__all__ = ["SCHEMA", "PRESETS", "parse_config", "load_config", "validate", "build_config",
           "build_model", "build_scheme", "preset"]

EXPERIMENTS = ("clt", "fdd", "paths", "counterexample1", "counterexample2", "dependence")

_INT_VEC = {"type": "array", "items": {"type": "integer"}, "minItems": 1}
_NUM_VEC = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_KERNEL = {
    "type": "array", "minItems": 1,
    "items": {"type": "array", "minItems": 2, "maxItems": 2,
              "items": [_INT_VEC, {"type": "number"}]},
}
_INNOVATION = {
    "type": "object", "additionalProperties": False, "required": ["law"],
    "properties": {
        "law": {"enum": ["rademacher", "gaussian", "two_point"]},
        "p": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "a": {"type": "number"}, "b": {"type": "number"},
    },
}
_MODEL = {
    "type": "object", "additionalProperties": False, "required": ["type"],
    "properties": {
        "type": {"enum": ["kernel", "volterra", "difference", "example1"]},
        "dim": {"type": "integer", "minimum": 1, "maximum": 16},
        "kernel": _KERNEL,
        "pairs": {"type": "array", "items": {"type": "array", "minItems": 3, "maxItems": 3}},
        "innovation": _INNOVATION,
        "preset": {"enum": ["full", "small"]},
        "k_max": {"type": "integer", "minimum": 1},
        "alpha": _NUM_VEC, "n_seq": _INT_VEC, "d_seq": _NUM_VEC,
    },
}
_AXIS_KERNEL = {
    "type": "object", "additionalProperties": False,
    "properties": {
        "fractional": {"type": "object", "additionalProperties": False, "required": ["H", "L"],
                       "properties": {"H": {"type": "number"},
                                      "L": {"type": "integer", "minimum": 1}}},
        "coefficients": {"type": "array", "minItems": 1,
                         "items": {"type": "array", "minItems": 2, "maxItems": 2,
                                   "items": {"type": "number"}}},
    },
}
_SCHEME = {
    "type": "object", "additionalProperties": False, "required": ["type"],
    "properties": {
        "type": {"enum": ["rectangle", "contiguous", "index_set", "example2", "set_indexed",
                          "product_linear"]},
        "n": {"type": "integer", "minimum": 1},
        "t": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1},
              "minItems": 1},
        "start": {"type": "integer"},
        "points": {"type": "array", "items": _INT_VEC, "minItems": 1},
        "gamma": {"type": "array", "items": {"type": "number", "exclusiveMinimum": -1},
                  "minItems": 1},
        "boxes": {"type": "array", "minItems": 1,
                  "items": {"type": "array", "minItems": 2, "maxItems": 2, "items": _NUM_VEC}},
        "kernels": {"type": "array", "items": _AXIS_KERNEL, "minItems": 1},
    },
}
SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object", "additionalProperties": False, "required": ["experiment"],
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "model": _MODEL,
        "scheme": _SCHEME,
        "points": {"type": "array", "items": _SCHEME, "minItems": 2},
        "reference": _SCHEME,
        "grid": {"type": "array", "items": _NUM_VEC, "minItems": 1},
        "reps": {"type": "integer", "minimum": MIN_REPS},
        "seed": {"type": ["integer", "string"]},
        "normalization": {"enum": list(NORMALIZATIONS)},
        "tests": {"type": "array", "items": {"enum": list(TESTS)}, "uniqueItems": True},
        "m": {"type": ["integer", "null"], "minimum": 0},
        "method": {"enum": ["auto", "effective", "direct"]},
        "workers": {"type": "integer", "minimum": 1},
        "level": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "variance_tol": {"type": "number", "exclusiveMinimum": 0},
        "covariance_tol": {"type": "number", "exclusiveMinimum": 0},
        "sigma_floor": {"type": "number", "minimum": 0},
        "degenerate_tol": {"type": "number", "exclusiveMinimum": 0},
        "target": {"enum": ["limit", "exact"]},
        "hurst": _NUM_VEC,
        "options": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "even_model": _MODEL, "odd_model": _MODEL,
                "even_k": {"type": "integer", "minimum": 2},
                "odd_k": {"type": "integer", "minimum": 1},
                "statistic": {"enum": ["layer", "full"]},
                "n_max": {"type": "integer", "minimum": 2, "maximum": 20},
                "mc_n": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "ps": {"type": "array", "items": {"enum": [2, 3, 4, 6]}, "minItems": 1},
                "n_outer": {"type": "integer", "minimum": 2},
                "n_inner": {"type": "integer", "minimum": 2},
                "window_radius": {"type": "integer", "minimum": 0},
            },
        },
    },
}

DEFAULTS = {
    "reps": 10000, "seed": 0, "normalization": "by_b_n", "m": None, "method": "auto",
    "workers": 1, "level": 0.01, "variance_tol": 0.05, "covariance_tol": 0.10,
    "sigma_floor": 1e-3, "degenerate_tol": 0.01, "target": "limit", "options": {},
}

_KERNEL_D2 = [[[0, 0], 1.0], [[1, 0], 0.5], [[0, 1], 0.5], [[1, 1], -0.25]]
_RAD = {"law": "rademacher"}
_GAUSS = {"law": "gaussian"}

# name -> (label, descriptor)
PRESETS = {
    "clt_iid_d2": ("CLT sanity: i.i.d. Rademacher, square n = 64", {
        "experiment": "clt", "model": {"type": "kernel", "dim": 2, "kernel": [[[0, 0], 1.0]],
                                       "innovation": _RAD},
        "scheme": {"type": "rectangle", "n": 64, "t": [1, 1]}}),
    "clt_kernel_d2": ("CLT with b_n normalisation: 4-point kernel field, square n = 64", {
        "experiment": "clt", "model": {"type": "kernel", "dim": 2, "kernel": _KERNEL_D2,
                                       "innovation": _RAD},
        "scheme": {"type": "rectangle", "n": 64, "t": [1, 1]}}),
    "clt_difference": ("Degenerate limit: difference field, contiguous n = 1024, b_n", {
        "experiment": "clt", "model": {"type": "difference", "innovation": _GAUSS},
        "scheme": {"type": "contiguous", "n": 1024}, "tests": ["variance_ratio"]}),
    "clt_difference_sigma": ("Degenerate limit normalised by sigma_n (Gaussian, exact)", {
        "experiment": "clt", "model": {"type": "difference", "innovation": _GAUSS},
        "scheme": {"type": "contiguous", "n": 1024}, "normalization": "by_sigma_n"}),
    "fdd_set_lebesgue": ("Set-indexed sums, Lebesgue measure, n = 64", {
        "experiment": "fdd", "model": {"type": "kernel", "dim": 2, "kernel": _KERNEL_D2,
                                       "innovation": _RAD},
        "points": [{"type": "set_indexed", "n": 64, "gamma": [0, 0], "boxes": [[[0, 0], [1, 1]]]},
                   {"type": "set_indexed", "n": 64, "gamma": [0, 0],
                    "boxes": [[[0, 0], [0.5, 1]], [[0.5, 0.5], [1, 1]]]}]}),
    "fdd_set_power": ("Set-indexed sums, density |x_1| (beta = 3), n = 64", {
        "experiment": "fdd", "model": {"type": "kernel", "dim": 2, "kernel": _KERNEL_D2,
                                       "innovation": _RAD},
        "points": [{"type": "set_indexed", "n": 64, "gamma": [1, 0], "boxes": [[[0, 0], [1, 1]]]},
                   {"type": "set_indexed", "n": 64, "gamma": [1, 0],
                    "boxes": [[[0, 0], [0.5, 1]], [[0.5, 0.5], [1, 1]]]}]}),
    "fdd_fbs_h05": ("fBs covariance, fractional kernel H = 0.5, L = 512, n = 2048", {
        "experiment": "fdd", "model": {"type": "kernel", "dim": 1, "kernel": [[[0], 1.0]],
                                       "innovation": _GAUSS},
        "hurst": [0.5],
        "points": [{"type": "product_linear", "n": 2048, "t": [0.5],
                    "kernels": [{"fractional": {"H": 0.5, "L": 512}}]},
                   {"type": "product_linear", "n": 2048, "t": [1.0],
                    "kernels": [{"fractional": {"H": 0.5, "L": 512}}]}]}),
    "fdd_fbs_h08": ("fBs covariance, fractional kernel H = 0.8, L = 512, n = 2048, exact target", {
        "experiment": "fdd", "model": {"type": "kernel", "dim": 1, "kernel": [[[0], 1.0]],
                                       "innovation": _GAUSS},
        "hurst": [0.8], "target": "exact",
        "points": [{"type": "product_linear", "n": 2048, "t": [0.5],
                    "kernels": [{"fractional": {"H": 0.8, "L": 512}}]},
                   {"type": "product_linear", "n": 2048, "t": [1.0],
                    "kernels": [{"fractional": {"H": 0.8, "L": 512}}]}]}),
    "paths_brownian": ("Paths of i.i.d. partial sums on a grid of [0, 1], n = 1024", {
        "experiment": "paths", "model": {"type": "kernel", "dim": 1, "kernel": [[[0], 1.0]],
                                         "innovation": _RAD},
        "scheme": {"type": "rectangle", "n": 1024, "t": [1]}, "reps": 2000,
        "grid": [[x / 8] for x in range(9)]}),
    "counterexample1": ("Layered counterexample: even layer k = 2 at full scale, "
                        "odd layer k = 3 from the small preset", {
        "experiment": "counterexample1",
        "options": {"even_model": {"type": "example1", "preset": "full", "k_max": 2},
                    "odd_model": {"type": "example1", "preset": "small", "k_max": 3},
                    "even_k": 2, "odd_k": 3, "statistic": "layer"}}),
    "counterexample2": ("Alternating-density sets: exact variance recursion for n <= 16", {
        "experiment": "counterexample2", "model": {"type": "difference", "innovation": _RAD},
        "reps": 4000, "options": {"n_max": 16, "mc_n": [6, 7, 8]}}),
    "dependence_volterra": ("Dependence coefficients of a Volterra field (Monte Carlo)", {
        "experiment": "dependence",
        "model": {"type": "volterra", "dim": 1, "kernel": [[[0], 1.0], [[2], 0.5]],
                  "pairs": [[[0], [1], 0.7]], "innovation": _RAD},
        "options": {"ps": [2, 4], "n_outer": 4000, "n_inner": 8}}),
    "dependence_kernel_d2": ("Dependence coefficients of the 4-point kernel field (exact)", {
        "experiment": "dependence", "model": {"type": "kernel", "dim": 2, "kernel": _KERNEL_D2,
                                              "innovation": _RAD},
        "options": {"ps": [2, 4]}}),
}


def _format_error(err):
    path = ".".join(str(p) for p in err.absolute_path) or "<root>"
    return f"{path}: {err.message}"


def validate(data):
    """Raise :class:`ConfigurationError` naming the first offending key."""
    validator = jsonschema.Draft7Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        raise ConfigurationError("invalid config: " + "; ".join(_format_error(e) for e in errors))


def preset(name):
    if name not in PRESETS:
        raise ConfigurationError(f"unknown preset {name!r}; see --list-presets")
    return copy.deepcopy(PRESETS[name][1])


def with_defaults(data):
    out = copy.deepcopy(DEFAULTS)
    out.update(copy.deepcopy(data))
    out["seed"] = parse_seed(out["seed"])
    if "tests" not in out:
        out["tests"] = list(DEFAULT_TESTS.get(out["experiment"], ()))
    return out


def build_innovation(desc, dim, seed):
    desc = desc or {"law": "rademacher"}
    law = desc["law"]
    if law == "two_point":
        if not {"p", "a", "b"} <= set(desc):
            raise ConfigurationError("two_point innovations need p, a and b")
        spec = InnovationSpec.two_point(desc["p"], desc["a"], desc["b"])
    else:
        spec = InnovationSpec(law)
    return InnovationField(spec, seed, dim=dim)


def build_model(desc, seed=0):
    kind = desc["type"]
    if kind == "example1":
        if "preset" in desc:
            return Example1Model.preset(desc["preset"], seed, desc.get("k_max"))
        missing = {"alpha", "n_seq", "d_seq", "k_max"} - set(desc)
        if missing:
            raise ConfigurationError(f"example1 model needs {sorted(missing)} or a preset")
        omega = InnovationField(InnovationSpec.uniform(), seed)
        return Example1Model(tuple(desc["alpha"]), tuple(desc["n_seq"]), tuple(desc["d_seq"]),
                             desc["k_max"], omega)
    dim = desc.get("dim", 1)
    fld = build_innovation(desc.get("innovation"), dim, seed)
    if kind == "difference":
        return DifferenceFieldModel(fld)
    kernel = [(tuple(k), c) for k, c in desc.get("kernel", [])]
    if kind == "kernel":
        if not kernel:
            raise ConfigurationError("model.kernel: a kernel field needs at least one entry")
        return KernelFieldModel(kernel, fld)
    pairs = [(tuple(k), tuple(l), c) for k, l, c in desc.get("pairs", [])]
    return VolterraFieldModel(kernel, pairs, fld)


def _axis_kernel(desc):
    if "fractional" in desc:
        return fractional_kernel(desc["fractional"]["H"], desc["fractional"]["L"])
    if "coefficients" in desc:
        return {int(i): float(c) for i, c in desc["coefficients"]}
    raise ConfigurationError("axis kernel needs 'fractional' or 'coefficients'")


def _need(desc, *keys):
    missing = [k for k in keys if k not in desc]
    if missing:
        raise ConfigurationError(f"scheme of type {desc['type']!r} needs {missing}")


def build_scheme(desc):
    kind = desc["type"]
    if kind == "rectangle":
        _need(desc, "n", "t")
        return RectangleWeights(desc["n"], tuple(desc["t"]))
    if kind == "contiguous":
        _need(desc, "n")
        return contiguous(desc["n"], desc.get("start", 0))
    if kind == "index_set":
        _need(desc, "points")
        return IndexSetWeights(desc["points"])
    if kind == "example2":
        _need(desc, "n")
        return example2_gamma(desc["n"])
    if kind == "set_indexed":
        _need(desc, "n", "gamma", "boxes")
        region = Region(tuple((tuple(lo), tuple(hi)) for lo, hi in desc["boxes"]))
        return SetIndexedWeights(MeasureSpec(tuple(desc["gamma"])), region, desc["n"])
    _need(desc, "n", "t", "kernels")
    return ProductLinearWeights(tuple(_axis_kernel(k) for k in desc["kernels"]), desc["n"],
                                tuple(desc["t"]))


def build_config(data):
    """Validated, defaulted descriptor -> :class:`ExperimentConfig`."""
    validate(data)
    full = with_defaults(data)
    seed = full["seed"]
    opts = dict(full["options"])
    for key in ("even_model", "odd_model"):
        if key in opts:
            opts[key] = build_model(opts[key], seed)
    needs_model = full["experiment"] in ("clt", "fdd", "paths", "dependence")
    if needs_model and "model" not in full:
        raise ConfigurationError(f"model: required for experiment {full['experiment']!r}")
    if full["experiment"] in ("clt", "paths") and "scheme" not in full:
        raise ConfigurationError(f"scheme: required for experiment {full['experiment']!r}")
    if full["experiment"] == "fdd" and "points" not in full:
        raise ConfigurationError("points: required for experiment 'fdd'")
    descriptor = dict(full)
    descriptor["seed"] = str(seed)
    return ExperimentConfig(
        experiment=full["experiment"],
        model=build_model(full["model"], seed) if "model" in full else None,
        scheme=build_scheme(full["scheme"]) if "scheme" in full else None,
        reps=full["reps"], seed=seed, normalization=full["normalization"],
        tests=tuple(full["tests"]), m=full["m"], method=full["method"],
        workers=full["workers"], level=full["level"], variance_tol=full["variance_tol"],
        covariance_tol=full["covariance_tol"], sigma_floor=full["sigma_floor"],
        degenerate_tol=full["degenerate_tol"],
        points=tuple(build_scheme(p) for p in full.get("points", [])),
        reference=build_scheme(full["reference"]) if "reference" in full else None,
        target=full["target"], hurst=tuple(full["hurst"]) if "hurst" in full else None,
        grid=tuple(tuple(g) for g in full.get("grid", [])), options=opts,
        descriptor=descriptor)


def load_config(path):
    """Read a JSON file and return the raw mapping."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: top level must be an object")
    return data


def parse_config(path, overrides=None):
    """Load, validate and build a config file; ``overrides`` patch top-level keys."""
    data = load_config(path)
    data.update(overrides or {})
    return build_config(data)
