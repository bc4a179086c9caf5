"""State of the generative model over program text.

The model expands typed expressions by one of seven productions (variable,
constant, primitive call, compound call, let, if, recur). Constants and
compound procedures are drawn through per-type reuse stores: a draw either
repeats an earlier value (proportionally to how often it has been used) or
falls back to a base distribution (proportionally to the store's
concentration). Stores are value-keyed, i.e. they realize the marginal
predictive of the underlying seating process

    P(next = v | history) = (count(v) + concentration * base(v)) / (concentration + n)

which is what makes program scores exactly normalized over enumerable
restrictions of the grammar.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from ..errors import ConfigError, SynthError
from ..lang import BOOL, REAL, Lambda, parse_program, to_text
from ..lang.primitives import PRIMITIVES, primitive_names

PRODUCTIONS = ("variable", "constant", "primitive", "compound", "let", "if", "recur")

# compound-procedure base: argument count is 1 + Poisson(1), capped at 3
ARITY_PMF = {1: math.exp(-1.0), 2: math.exp(-1.0), 3: 1.0 - 2.0 * math.exp(-1.0)}

DEFAULT_COMMON_CONSTANTS = (-2.0, -1.0, 0.0, 1.0, 2.0, math.pi)
DEFAULT_CONST_MIXTURE = {"normal": 0.45, "uniform": 0.45, "atoms": 0.10}

_NORMAL_SIGMA = 10.0
_UNIFORM_LO, _UNIFORM_HI = -100.0, 100.0
NEG_INF = float("-inf")


class UnsupportedProgram(SynthError):
    """The expression uses constructs absent from the grammar state."""


def _log(x: float) -> float:
    return math.log(x) if x > 0.0 else NEG_INF


def _logaddexp(a: float, b: float) -> float:
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    m = a if a > b else b
    return m + math.log(math.exp(a - m) + math.exp(b - m))


def _validate_categorical(dist: dict, what: str) -> None:
    if not dist:
        raise ConfigError(f"{what}: empty categorical")
    total = sum(dist.values())
    if abs(total - 1.0) > 1e-12:
        raise ConfigError(f"{what}: probabilities sum to {total}, not 1")
    if any(p <= 0.0 for p in dist.values()):
        raise ConfigError(f"{what}: probabilities must be strictly positive")


@dataclass
class ProductionProbs:
    """Per-type categoricals over productions and over primitive choices."""

    rules: dict  # TypeTag -> {production name -> prob}
    primitives: dict  # TypeTag -> {primitive name -> prob}, keyed by return type
    const_mixture: dict = field(default_factory=lambda: dict(DEFAULT_CONST_MIXTURE))

    def validate(self) -> None:
        for t, dist in self.rules.items():
            _validate_categorical(dist, f"rules[{t}]")
            unknown = set(dist) - set(PRODUCTIONS)
            if unknown:
                raise ConfigError(f"unknown productions {sorted(unknown)}")
        for t, dist in self.primitives.items():
            if dist:
                _validate_categorical(dist, f"primitives[{t}]")
            for name in dist:
                if PRIMITIVES[name].ret != t:
                    raise ConfigError(f"primitive {name} does not return {t}")
        if abs(sum(self.const_mixture.values()) - 1.0) > 1e-12:
            raise ConfigError("constant base mixture weights must sum to 1")

    def copy(self) -> "ProductionProbs":
        return ProductionProbs(
            rules={t: dict(d) for t, d in self.rules.items()},
            primitives={t: dict(d) for t, d in self.primitives.items()},
            const_mixture=dict(self.const_mixture),
        )


def uniform_production_probs(
    enabled: dict | None = None, extended_primitives: bool = False
) -> ProductionProbs:
    """Uniform categoricals; `enabled` optionally restricts productions per type."""
    rules = {}
    for t in (REAL, BOOL):
        names = list((enabled or {}).get(t, PRODUCTIONS))
        rules[t] = {n: 1.0 / len(names) for n in names}
    prims = {t: {} for t in (REAL, BOOL)}
    for name in primitive_names(extended_primitives):
        prims[PRIMITIVES[name].ret][name] = 0.0
    for t, dist in prims.items():
        for name in dist:
            dist[name] = 1.0 / len(dist)
    return ProductionProbs(rules=rules, primitives=prims)


class CrpStore:
    """Value-keyed reuse store: counts of previously drawn values plus a concentration."""

    __slots__ = ("counts", "total", "concentration")

    def __init__(self, concentration: float, counts: dict | None = None):
        if concentration <= 0.0:
            raise ConfigError("concentration must be positive")
        self.concentration = concentration
        self.counts = dict(counts or {})
        self.total = sum(self.counts.values())

    @property
    def tables(self) -> list:
        return list(self.counts.items())

    def log_predictive(self, value, base_logp: float) -> float:
        """Log probability that the next draw equals ``value``.

        ``base_logp`` is the base distribution's log mass/density at the value.
        """
        fresh = _log(self.concentration) + base_logp
        n_v = self.counts.get(value, 0)
        num = _logaddexp(_log(float(n_v)), fresh) if n_v else fresh
        return num - math.log(self.concentration + self.total)

    def observe(self, value) -> None:
        self.counts[value] = self.counts.get(value, 0) + 1
        self.total += 1

    def draw(self, rng, base_sampler):
        """One draw: fresh from the base w.p. conc/(conc+n), else an existing
        value proportionally to its count. The chosen value's count increments."""
        u = rng.random() * (self.concentration + self.total)
        if u >= self.total:
            value = base_sampler()
        else:
            acc = 0.0
            value = None
            for v, c in self.counts.items():
                acc += c
                if u < acc:
                    value = v
                    break
            if value is None:  # numeric edge of the cumulative scan
                value = next(reversed(self.counts))
        self.observe(value)
        return value

    def copy(self) -> "CrpStore":
        return CrpStore(self.concentration, self.counts)


@dataclass
class GrammarState:
    """Everything needed to sample or score a program: production
    probabilities, reuse stores, the constant atoms, and the depth cap.

    Sampling mutates the reuse stores; scoring works on internal copies. Use
    one state per chain and :meth:`copy` when a pristine snapshot is needed.
    """

    probs: ProductionProbs
    const_stores: dict
    proc_stores: dict
    max_depth: int = 12
    common_constants: tuple = ()  # ((value, weight), ...) normalized

    def __post_init__(self):
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        self.probs.validate()
        for t in (REAL, BOOL):
            if t not in self.const_stores or t not in self.proc_stores:
                raise ConfigError(f"missing reuse store for type {t}")

    # -- constant base distribution -----------------------------------------

    def _atom_weights(self) -> dict:
        return {v: w for v, w in self.common_constants}

    def const_base_logp(self, t: str, value) -> float:
        if t == BOOL:
            return math.log(0.5)
        mix = self.probs.const_mixture
        atoms = self._atom_weights()
        if value in atoms:
            return _log(mix.get("atoms", 0.0)) + _log(atoms[value])
        lp = NEG_INF
        w = mix.get("normal", 0.0)
        if w > 0.0:
            z = value / _NORMAL_SIGMA
            lp = _logaddexp(
                lp, math.log(w) - 0.5 * z * z - math.log(_NORMAL_SIGMA * math.sqrt(2.0 * math.pi))
            )
        w = mix.get("uniform", 0.0)
        if w > 0.0 and _UNIFORM_LO <= value <= _UNIFORM_HI:
            lp = _logaddexp(lp, math.log(w) - math.log(_UNIFORM_HI - _UNIFORM_LO))
        return lp

    def const_base_sample(self, t: str, rng):
        if t == BOOL:
            return rng.random() < 0.5
        mix = self.probs.const_mixture
        u = rng.random()
        if u < mix.get("normal", 0.0):
            return rng.normalvariate(0.0, _NORMAL_SIGMA)
        if u < mix.get("normal", 0.0) + mix.get("uniform", 0.0):
            return rng.uniform(_UNIFORM_LO, _UNIFORM_HI)
        acc = 0.0
        u = rng.random()
        for v, w in self.common_constants:
            acc += w
            if u < acc:
                return v
        return self.common_constants[-1][0]

    # -- snapshots ----------------------------------------------------------

    def copy(self) -> "GrammarState":
        return GrammarState(
            probs=self.probs.copy(),
            const_stores={t: s.copy() for t, s in self.const_stores.items()},
            proc_stores={t: s.copy() for t, s in self.proc_stores.items()},
            max_depth=self.max_depth,
            common_constants=self.common_constants,
        )

    # -- serialization ------------------------------------------------------

    def to_json(self) -> str:
        def const_items(store):
            return [[v, c] for v, c in store.counts.items()]

        def proc_items(store):
            return [[to_text(v), c] for v, c in store.counts.items()]

        doc = {
            "format_version": 1,
            "max_depth": self.max_depth,
            "rules": self.probs.rules,
            "primitives": self.probs.primitives,
            "const_mixture": self.probs.const_mixture,
            "common_constants": [[v, w] for v, w in self.common_constants],
            "concentrations": {
                "constants": self.const_stores[REAL].concentration,
                "procedures": self.proc_stores[REAL].concentration,
            },
            "stores": {
                "constants": {t: const_items(s) for t, s in self.const_stores.items()},
                "procedures": {t: proc_items(s) for t, s in self.proc_stores.items()},
            },
        }
        return json.dumps(doc, indent=2)

    @staticmethod
    def from_json(text: str) -> "GrammarState":
        doc = json.loads(text)
        probs = ProductionProbs(
            rules=doc["rules"], primitives=doc["primitives"], const_mixture=doc["const_mixture"]
        )
        alpha = doc["concentrations"]["constants"]
        beta = doc["concentrations"]["procedures"]
        const_stores = {}
        proc_stores = {}
        for t in (REAL, BOOL):
            const_counts = {
                (bool(v) if t == BOOL else float(v)): c
                for v, c in doc["stores"]["constants"].get(t, [])
            }
            proc_counts = {parse_program(s): c for s, c in doc["stores"]["procedures"].get(t, [])}
            const_stores[t] = CrpStore(alpha, const_counts)
            proc_stores[t] = CrpStore(beta, proc_counts)
        return GrammarState(
            probs=probs,
            const_stores=const_stores,
            proc_stores=proc_stores,
            max_depth=doc["max_depth"],
            common_constants=tuple((float(v), float(w)) for v, w in doc["common_constants"]),
        )


def make_grammar_state(
    probs: ProductionProbs | None = None,
    alpha: float = 1.0,
    beta: float = 1.0,
    max_depth: int = 12,
    common_constants=None,
    extended_primitives: bool = False,
) -> GrammarState:
    """Assemble a state with empty reuse stores."""
    if probs is None:
        probs = uniform_production_probs(extended_primitives=extended_primitives)
    if common_constants is None:
        n = len(DEFAULT_COMMON_CONSTANTS)
        common_constants = tuple((v, 1.0 / n) for v in DEFAULT_COMMON_CONSTANTS)
    return GrammarState(
        probs=probs,
        const_stores={t: CrpStore(alpha) for t in (REAL, BOOL)},
        proc_stores={t: CrpStore(beta) for t in (REAL, BOOL)},
        max_depth=max_depth,
        common_constants=tuple(common_constants),
    )
