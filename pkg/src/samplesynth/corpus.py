"""Human-written sampler corpus: loading, event counting, prior fitting.

Production probabilities are learned by counting grammar events in the
corpus programs and smoothing with a symmetric pseudocount. Fitting is
leave-one-out: entries whose target distribution matches the one being
learned are excluded, so the search is never shown the answer's text.
"""

from __future__ import annotations

import json
import os
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .grammar.state import (
    DEFAULT_COMMON_CONSTANTS,
    PRODUCTIONS,
    CrpStore,
    GrammarState,
    ProductionProbs,
)
from .lang import BOOL, REAL, Const, If, Lambda, Let, PrimCall, CompoundCall, Recur, Var
from .lang import parse_program
from .lang.primitives import PRIMITIVES, primitive_names

_DATA_DIR = Path(__file__).parent / "corpus_data"
CORPUS_DIR_ENV = "SYNTH_CORPUS_DIR"


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    target_distribution: str  # a reference-distribution id, or "none"
    program: Lambda
    path: str = ""


@dataclass
class ProductionCounts:
    rules: dict  # TypeTag -> Counter over production names
    prims: dict  # TypeTag -> Counter over primitive names
    constants: dict  # TypeTag -> Counter over constant values

    @staticmethod
    def empty() -> "ProductionCounts":
        return ProductionCounts(
            rules={t: Counter() for t in (REAL, BOOL)},
            prims={t: Counter() for t in (REAL, BOOL)},
            constants={t: Counter() for t in (REAL, BOOL)},
        )

    def add(self, other: "ProductionCounts") -> None:
        for t in (REAL, BOOL):
            self.rules[t] += other.rules[t]
            self.prims[t] += other.prims[t]
            self.constants[t] += other.constants[t]

    def total_events(self) -> int:
        return sum(sum(c.values()) for c in self.rules.values())


def count_productions(program: Lambda) -> ProductionCounts:
    """Count one production event per node, plus primitive-choice and
    constant-value events.

    Repeated occurrences of an identical inline procedure count its body
    once, mirroring how generation reuses rather than regenerates it.
    """
    counts = ProductionCounts.empty()
    seen_procs: set = set()

    def walk(e, t):
        if isinstance(e, Var):
            counts.rules[t]["variable"] += 1
        elif isinstance(e, Const):
            counts.rules[t]["constant"] += 1
            counts.constants[t][e.value] += 1
        elif isinstance(e, PrimCall):
            counts.rules[t]["primitive"] += 1
            counts.prims[t][e.op] += 1
            for a, at in zip(e.args, PRIMITIVES[e.op].arg_types):
                walk(a, at)
        elif isinstance(e, CompoundCall):
            counts.rules[t]["compound"] += 1
            if e.proc not in seen_procs:
                seen_procs.add(e.proc)
                walk(e.proc.body, e.proc.ret)
            for a, (_, at) in zip(e.args, e.proc.params):
                walk(a, at)
        elif isinstance(e, Let):
            counts.rules[t]["let"] += 1
            walk(e.value, REAL)
            walk(e.body, t)
        elif isinstance(e, If):
            counts.rules[t]["if"] += 1
            walk(e.cond, BOOL)
            walk(e.then, t)
            walk(e.orelse, t)
        elif isinstance(e, Recur):
            counts.rules[t]["recur"] += 1
            for a in e.args:
                walk(a, a.type)
        else:
            raise ConfigError(f"cannot count {type(e).__name__}")

    walk(program.body, program.ret)
    return counts


def corpus_counts(corpus, exclude: str | None = None) -> ProductionCounts:
    total = ProductionCounts.empty()
    for entry in corpus:
        if exclude is not None and entry.target_distribution == exclude:
            continue
        total.add(count_productions(entry.program))
    return total


def fit_priors(
    corpus,
    pseudocount: float = 1.0,
    exclude: str | None = None,
    enabled: dict | None = None,
    extended_primitives: bool = False,
) -> ProductionProbs:
    """Pseudocount-smoothed production probabilities from corpus counts,
    excluding entries that target ``exclude``."""
    if pseudocount <= 0.0:
        raise ConfigError("pseudocount must be positive")
    counts = corpus_counts(corpus, exclude)
    rules = {}
    for t in (REAL, BOOL):
        names = list((enabled or {}).get(t, PRODUCTIONS))
        total = sum(counts.rules[t][n] for n in names) + pseudocount * len(names)
        rules[t] = {n: (counts.rules[t][n] + pseudocount) / total for n in names}
    prims = {t: {} for t in (REAL, BOOL)}
    for name in primitive_names(extended_primitives):
        prims[PRIMITIVES[name].ret][name] = 0.0
    for t, dist in prims.items():
        total = sum(counts.prims[t][n] for n in dist) + pseudocount * len(dist)
        for name in dist:
            dist[name] = (counts.prims[t][name] + pseudocount) / total
    return ProductionProbs(rules=rules, primitives=prims)


def build_grammar_state(
    corpus,
    exclude: str | None = None,
    pseudocount: float = 1.0,
    alpha: float = 1.0,
    beta: float = 1.0,
    max_depth: int = 12,
    extended_primitives: bool = False,
    enabled: dict | None = None,
) -> GrammarState:
    """Fitted grammar state with empty reuse stores.

    Real constants observed in the corpus join the common-constant atoms with
    their empirical counts (defaults keep a pseudo-weight of one each); the
    atom weights are renormalized within the fixed mixture share.
    """
    probs = fit_priors(
        corpus,
        pseudocount=pseudocount,
        exclude=exclude,
        enabled=enabled,
        extended_primitives=extended_primitives,
    )
    counts = corpus_counts(corpus, exclude)
    atom_weights = Counter({v: 1.0 for v in DEFAULT_COMMON_CONSTANTS})
    for value, c in counts.constants[REAL].items():
        atom_weights[value] += c
    total = sum(atom_weights.values())
    atoms = tuple(sorted((v, w / total) for v, w in atom_weights.items()))
    return GrammarState(
        probs=probs,
        const_stores={t: CrpStore(alpha) for t in (REAL, BOOL)},
        proc_stores={t: CrpStore(beta) for t in (REAL, BOOL)},
        max_depth=max_depth,
        common_constants=atoms,
    )


def load_corpus(directory: str | os.PathLike | None = None) -> list:
    """Load corpus entries from a directory of ``.sx`` programs with ``.json``
    metadata. Falls back to ``$SYNTH_CORPUS_DIR``, then the shipped corpus."""
    if directory is None:
        directory = os.environ.get(CORPUS_DIR_ENV) or _DATA_DIR
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigError(f"corpus directory not found: {directory}")
    entries = []
    for meta_path in sorted(directory.glob("*.json")):
        sx_path = meta_path.with_suffix(".sx")
        if not sx_path.exists():
            raise ConfigError(f"missing program file for corpus entry {meta_path.name}")
        meta = json.loads(meta_path.read_text())
        program = parse_program(sx_path.read_text())
        entries.append(
            CorpusEntry(
                name=meta["name"],
                target_distribution=meta.get("target_distribution", "none"),
                program=program,
                path=str(sx_path),
            )
        )
    if not entries:
        raise ConfigError(f"no corpus entries found in {directory}")
    return entries
