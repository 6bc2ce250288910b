"""JSON problem specifications.

A spec looks like::

    {
      "components": [{"name": "1", "symbols": ["0", "1"]}, ...],
      "reproduction": [{"name": "1", "symbols": ["0", "1", "e"]}, ...],
      "pmf": [0.25, 0.25, 0.25, 0.25],
      "distortion": [0, 1, "forbidden", ...],
      "k": 1,
      "options": {"grid": 201, "lambda_points": 64}
    }

``pmf`` is flat row-major over the components. ``distortion`` is flat
row-major over (source value, reproduction value), both themselves flat
row-major, so entry ``x * |Y| + y``; an entry may be the string
``"forbidden"``. The whole field may instead be the string
``"probability_of_error"``. ``reproduction`` defaults to the source
components.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .distortion import probability_of_error
from .errors import ValidationError
from .prob import SUM_TOL, ComponentAlphabet, JointPmf
from .tables import DistortionTable

FORBIDDEN = "forbidden"
PE_TOKEN = "probability_of_error"
TOP_FIELDS = ("components", "reproduction", "pmf", "distortion", "k", "options")
OPTION_TYPES = {
    "lambda_min": float, "lambda_max": float, "lambda_points": int, "tol": float,
    "max_iter": int, "grid": int, "cap": int, "threads": int, "seed": int,
}


@dataclass(frozen=True)
class ProblemSpec:
    components: tuple
    reproduction: tuple
    pmf: tuple
    distortion: object  # tuple of floats / FORBIDDEN, or PE_TOKEN
    k: int
    options: dict = field(default_factory=dict)

    @property
    def m(self):
        return len(self.components)

    def joint_pmf(self):
        shape = tuple(len(c) for c in self.components)
        return JointPmf(self.components, np.array(self.pmf).reshape(shape))

    def distortion_table(self):
        src = tuple(len(c) for c in self.components)
        rep = tuple(len(c) for c in self.reproduction)
        if self.distortion == PE_TOKEN:
            return probability_of_error(src)
        n_x, n_y = int(np.prod(src)), int(np.prod(rep))
        forb = np.array([v == FORBIDDEN for v in self.distortion]).reshape(n_x, n_y)
        vals = np.array([0.0 if v == FORBIDDEN else v for v in self.distortion]).reshape(n_x, n_y)
        return DistortionTable(vals, forb, src, rep)

    def to_dict(self):
        dist = self.distortion if self.distortion == PE_TOKEN else list(self.distortion)
        return {
            "components": [{"name": c.name, "symbols": list(c.symbols)} for c in self.components],
            "reproduction": [{"name": c.name, "symbols": list(c.symbols)}
                             for c in self.reproduction],
            "pmf": list(self.pmf),
            "distortion": dist,
            "k": self.k,
            "options": dict(self.options),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_problem(cls, pmf, d, reproduction=None, k=1, options=None):
        """Spec for an in-memory (pmf, distortion) pair."""
        reproduction = tuple(reproduction or pmf.components)
        dist = [FORBIDDEN if f else float(v)
                for v, f in zip(d.filled().ravel(), d.forbidden.ravel())]
        return cls(tuple(pmf.components), reproduction,
                   tuple(float(v) for v in pmf.flat), tuple(dist), int(k),
                   dict(options or {}))


def _alphabets(raw, path, problems):
    if not isinstance(raw, list) or not raw:
        problems.append(f"{path}: expected a nonempty list of components")
        return None
    out = []
    for i, c in enumerate(raw):
        p = f"{path}[{i}]"
        if not isinstance(c, dict):
            problems.append(f"{p}: expected an object with name and symbols")
            continue
        for key in c:
            if key not in ("name", "symbols"):
                problems.append(f"{p}.{key}: unknown field")
        syms = c.get("symbols")
        if not isinstance(syms, list) or not syms:
            problems.append(f"{p}.symbols: expected a nonempty list")
            continue
        try:
            out.append(ComponentAlphabet(str(c.get("name", i + 1)), tuple(syms)))
        except ValidationError as exc:
            problems.append(f"{p}.symbols: {exc}")
    return tuple(out) if len(out) == len(raw) else None


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _pmf(raw, n, problems):
    if not isinstance(raw, list):
        problems.append("pmf: expected a list of probabilities")
        return None
    if n is not None and len(raw) != n:
        problems.append(f"pmf: length {len(raw)} does not match the {n} source values")
    ok = True
    for i, v in enumerate(raw):
        if not _is_number(v) or not np.isfinite(v):
            problems.append(f"pmf[{i}]: not a finite number")
            ok = False
        elif v < 0:
            problems.append(f"pmf[{i}]: negative probability {v}")
            ok = False
    if not ok or not raw:
        return None
    total = float(sum(raw))
    if abs(total - 1.0) > SUM_TOL:
        problems.append(f"pmf: sums to {total!r}, not 1 within {SUM_TOL}")
        return None
    return tuple(float(v) / total for v in raw)


def _distortion(raw, n, problems):
    if raw == PE_TOKEN:
        return PE_TOKEN
    if not isinstance(raw, list):
        problems.append(f"distortion: expected a list or {PE_TOKEN!r}")
        return None
    if n is not None and len(raw) != n:
        problems.append(f"distortion: length {len(raw)} does not match {n} (source x reproduction)")
    out = []
    for i, v in enumerate(raw):
        if v == FORBIDDEN:
            out.append(FORBIDDEN)
        elif _is_number(v) and np.isfinite(v) and v >= 0:
            out.append(float(v))
        else:
            problems.append(f"distortion[{i}]: expected a nonnegative number or {FORBIDDEN!r}")
    return tuple(out) if len(out) == len(raw) else None


def _options(raw, problems):
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        problems.append("options: expected an object")
        return {}
    out = {}
    for key, v in raw.items():
        kind = OPTION_TYPES.get(key)
        if kind is None:
            problems.append(f"options.{key}: unknown field")
        elif kind is int and not (isinstance(v, int) and not isinstance(v, bool) and v >= 1):
            problems.append(f"options.{key}: expected a positive integer")
        elif kind is float and not (_is_number(v) and v > 0):
            problems.append(f"options.{key}: expected a positive number")
        else:
            out[key] = kind(v)
    return out


def parse_problem_spec(text):
    """Parse and validate a spec, reporting every problem found at once."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"spec is not valid JSON: {exc}", [f"<root>: {exc}"]) from None
    if not isinstance(raw, dict):
        raise ValidationError("spec must be a JSON object", ["<root>: expected an object"])
    problems = [f"{key}: unknown field" for key in raw if key not in TOP_FIELDS]
    for key in ("components", "pmf", "distortion", "k"):
        if key not in raw:
            problems.append(f"{key}: missing")
    comps = _alphabets(raw.get("components"), "components", problems) \
        if "components" in raw else None
    repro = comps
    if "reproduction" in raw:
        repro = _alphabets(raw["reproduction"], "reproduction", problems)
    n_x = int(np.prod([len(c) for c in comps])) if comps else None
    n_y = int(np.prod([len(c) for c in repro])) if repro else None
    pmf = _pmf(raw["pmf"], n_x, problems) if "pmf" in raw else None
    if "distortion" in raw:
        n_d = n_x * n_y if n_x and n_y else None
        dist = _distortion(raw["distortion"], n_d, problems)
        if dist == PE_TOKEN and comps and repro and \
                [c.symbols for c in comps] != [c.symbols for c in repro]:
            problems.append(f"distortion: {PE_TOKEN!r} needs reproduction alphabets equal "
                            "to the source alphabets")
    else:
        dist = None
    k = raw.get("k")
    if "k" in raw:
        if not isinstance(k, int) or isinstance(k, bool):
            problems.append("k: expected an integer")
        elif comps and not 1 <= k <= len(comps):
            problems.append(f"k: {k} is outside [1, {len(comps)}]")
    opts = _options(raw.get("options"), problems)
    if pmf is not None and any(v <= 0 for v in pmf):
        bad = [i for i, v in enumerate(pmf) if v <= 0]
        problems.append(f"pmf: sources need full support; zero at {bad}")
    if dist is not None and dist != PE_TOKEN and n_x and n_y and len(dist) == n_x * n_y:
        rows = np.array([v == FORBIDDEN for v in dist]).reshape(n_x, n_y)
        for x in np.flatnonzero(rows.all(axis=1)):
            problems.append(f"distortion: every reproduction is forbidden for source value {x}")
    if problems:
        raise ValidationError(f"{len(problems)} problem(s) in spec:\n  " + "\n  ".join(problems),
                              problems)
    return ProblemSpec(comps, repro, pmf, dist, k, opts)

