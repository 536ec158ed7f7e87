"""Invariant specifications, symmetry abbreviation, index enumeration, and
product counting.

A specification is a list of tensor factors, each carrying one contraction
label per slot.  Enumeration walks every assignment of dimension values to
labels by odometer cycling, restricts abbreviated antisymmetric pairs to
strictly increasing values (compensated by a power-of-two multiplier), and
keeps only assignments whose components are all nonzero in the factors'
sparse stores.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Optional

from .expr import Expr
from .tensor import LOWER, UPPER, TensorField


class SpecError(Exception):
    """Malformed invariant specification."""


class PlanError(Exception):
    """Specification and tensors disagree (rank, variance, or dimension)."""


BASE_RANKS = {"R": 4}
BASE_ANTISYM = {"R": frozenset({(0, 1), (2, 3)})}
MAX_DERIVATIVE_ORDER = 2


@dataclass(frozen=True)
class FactorSpec:
    """One tensor factor: base symbol, derivative slots, and per-slot labels."""

    base: str
    derivative_order: int
    labels: tuple
    variance: tuple
    antisym_pairs: frozenset

    @property
    def rank(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class InvariantSpec:
    factors: tuple
    label_names: tuple  # id -> name, in order of first appearance
    free_labels: frozenset  # names marked free (appear exactly once)

    @property
    def label_count(self) -> int:
        return len(self.label_names)

    def label_id(self, name: str) -> int:
        return self.label_names.index(name)

    def factor_label_ids(self) -> list:
        index = {name: i for i, name in enumerate(self.label_names)}
        return [tuple(index[name] for name in f.labels) for f in self.factors]


_FACTOR_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\((.*)\)$")
_SLOT_RE = re.compile(r"([+\-−])(\*?)([A-Za-z_][A-Za-z0-9_]*)$")


def _parse_slot(token: str):
    m = _SLOT_RE.match(token.strip())
    if not m:
        raise SpecError("bad index slot %r" % token)
    sign, star, name = m.groups()
    return name, UPPER if sign == "+" else LOWER, bool(star)


def parse_spec(text: str) -> InvariantSpec:
    """Parse the invariant DSL: whitespace-separated factors of the form
    R(+a,+b,-c,-d[;+e[,+f]]) where + and - set slot variance, the segment
    after ';' lists covariant-derivative slots, and a '*' prefix marks a
    label as free (uncontracted)."""
    tokens = text.split()
    if not tokens:
        raise SpecError("empty specification")
    factors = []
    label_names = []
    free_names = set()
    seen_counts = {}
    for token in tokens:
        m = _FACTOR_RE.match(token)
        if not m:
            raise SpecError("bad factor %r" % token)
        base, body = m.groups()
        if base not in BASE_RANKS:
            raise SpecError("unknown base tensor %r" % base)
        head, _, deriv = body.partition(";")
        base_slots = [s for s in head.split(",") if s.strip()]
        deriv_slots = [s for s in deriv.split(",") if s.strip()]
        if len(base_slots) != BASE_RANKS[base]:
            raise SpecError(
                "%s takes %d indices, got %d" % (base, BASE_RANKS[base], len(base_slots))
            )
        if len(deriv_slots) > MAX_DERIVATIVE_ORDER:
            raise SpecError("at most %d derivative slots supported" % MAX_DERIVATIVE_ORDER)
        labels = []
        variance = []
        for token_slot in base_slots + deriv_slots:
            name, var, free = _parse_slot(token_slot)
            labels.append(name)
            variance.append(var)
            if name not in seen_counts:
                seen_counts[name] = 0
                label_names.append(name)
            seen_counts[name] += 1
            if free:
                free_names.add(name)
        factors.append(
            FactorSpec(
                base=base,
                derivative_order=len(deriv_slots),
                labels=tuple(labels),
                variance=tuple(variance),
                antisym_pairs=BASE_ANTISYM[base],
            )
        )
    for name, count in seen_counts.items():
        if name in free_names:
            if count != 1:
                raise SpecError("free label %r must appear exactly once" % name)
        elif count != 2:
            raise SpecError(
                "label %r appears %d times; contracted labels appear exactly twice"
                % (name, count)
            )
    return InvariantSpec(
        factors=tuple(factors),
        label_names=tuple(label_names),
        free_labels=frozenset(free_names),
    )


def detect_abbreviable_pairs(spec: InvariantSpec):
    """Label pairs whose summation can be restricted to ordered values.

    A pair abbreviates when two factors carry the same two labels, in the
    same order, on adjacent slot pairs that are both antisymmetric; each
    abbreviated pair doubles the multiplier.
    """
    pairs = set()
    factors = spec.factors
    for fi, f in enumerate(factors):
        for fj in range(fi, len(factors)):
            g = factors[fj]
            for i, i2 in f.antisym_pairs:
                for j, j2 in g.antisym_pairs:
                    if fi == fj and i == j:
                        continue
                    if f.labels[i] != g.labels[j] or f.labels[i2] != g.labels[j2]:
                        continue
                    if f.labels[i] in spec.free_labels or f.labels[i2] in spec.free_labels:
                        continue
                    pairs.add((f.labels[i], f.labels[i2]))
    return frozenset(pairs), 2 ** len(pairs)


def symmetric_derivative_pairs(spec: InvariantSpec):
    """Label pairs sitting on aligned second-derivative slots in two factors;
    counted as symmetric index pairs in the worst-case product estimate."""
    pairs = set()
    factors = spec.factors
    for fi, f in enumerate(factors):
        if f.derivative_order != 2:
            continue
        i = f.rank - 2
        for fj in range(fi, len(factors)):
            g = factors[fj]
            if g.derivative_order != 2 or (fi == fj):
                continue
            j = g.rank - 2
            if f.labels[i] == g.labels[j] and f.labels[i + 1] == g.labels[j + 1]:
                if f.labels[i] not in spec.free_labels and f.labels[i + 1] not in spec.free_labels:
                    pairs.add((f.labels[i], f.labels[i + 1]))
    return frozenset(pairs)


@dataclass(frozen=True)
class ContractionPlan:
    """Materialized enumeration: surviving label assignments in cycling order."""

    sum_index_array: tuple
    multiplier: int
    abbreviated_pairs: frozenset
    product_count: int
    dim: int
    label_count: int


def _check_tensors(spec: InvariantSpec, tensors, dim: int):
    if len(tensors) != len(spec.factors):
        raise PlanError(
            "spec has %d factors but %d tensors given" % (len(spec.factors), len(tensors))
        )
    for f, t in zip(spec.factors, tensors):
        if t.rank != f.rank:
            raise PlanError("factor rank %d vs tensor rank %d" % (f.rank, t.rank))
        if t.dim != dim:
            raise PlanError("tensor dimension %d does not match %d" % (t.dim, dim))
        if tuple(t.variance) != tuple(f.variance):
            raise PlanError(
                "tensor variance %s does not match factor %s"
                % ("".join(t.variance), "".join(f.variance))
            )


def _cycle_assignments(assignment: list, positions: list, dim: int) -> Iterator:
    """Odometer over the given label positions, first position fastest;
    yields after the initial all-zero state and stops when it cycles back."""
    while True:
        yield assignment
        k = 0
        while k < len(positions):
            p = positions[k]
            assignment[p] += 1
            if assignment[p] == dim:
                assignment[p] = 0
                k += 1
            else:
                break
        if k == len(positions):
            return


def enumerate_indices(spec: InvariantSpec, tensors, dim: int) -> ContractionPlan:
    """Walk all dim**label_count assignments by cycling, skip abbreviated
    pairs out of order, and keep assignments whose components all exist."""
    _check_tensors(spec, tensors, dim)
    abbreviated, multiplier = detect_abbreviable_pairs(spec)
    index = {name: i for i, name in enumerate(spec.label_names)}
    pair_ids = [(index[x], index[y]) for x, y in sorted(abbreviated)]
    factor_ids = spec.factor_label_ids()
    stores = [t.components for t in tensors]
    entries = []
    assignment = [0] * spec.label_count
    for state in _cycle_assignments(assignment, list(range(spec.label_count)), dim):
        if any(state[j] <= state[i] for i, j in pair_ids):
            continue
        for ids, store in zip(factor_ids, stores):
            if tuple(state[i] for i in ids) not in store:
                break
        else:
            entries.append(tuple(state))
    return ContractionPlan(
        sum_index_array=tuple(entries),
        multiplier=multiplier,
        abbreviated_pairs=abbreviated,
        product_count=len(entries),
        dim=dim,
        label_count=spec.label_count,
    )


class ProductEvaluator:
    """Evaluates one enumerated assignment to the product of its components."""

    def __init__(self, spec: InvariantSpec, tensors):
        self.factor_ids = spec.factor_label_ids()
        self.stores = [t.components for t in tensors]

    def __call__(self, entry: tuple) -> Expr:
        product = None
        for ids, store in zip(self.factor_ids, self.stores):
            value = store[tuple(entry[i] for i in ids)]
            product = value if product is None else product * value
        return product


def evaluate_product(spec: InvariantSpec, entry: tuple, tensors) -> Expr:
    """Product of the components addressed by one plan entry, canonical."""
    return ProductEvaluator(spec, tensors)(entry)


def worst_case_product_count(spec: InvariantSpec, dim: int) -> int:
    """Upper bound on enumerated products: D per lone label, D(D-1)/2 per
    abbreviated antisymmetric pair, D(D+1)/2 per symmetric derivative pair.

    The additional pair-exchange reduction is reported separately by
    :func:`pair_exchange_reduction_factor` and never applied here.
    """
    abbreviated, _ = detect_abbreviable_pairs(spec)
    symmetric = symmetric_derivative_pairs(spec)
    consumed = {name for pair in abbreviated | symmetric for name in pair}
    count = 1
    for _ in abbreviated:
        count *= dim * (dim - 1) // 2
    for _ in symmetric:
        count *= dim * (dim + 1) // 2
    lone = len([name for name in spec.label_names if name not in consumed])
    return count * dim ** lone


def pair_exchange_reduction_factor(dim: int) -> Fraction:
    """Informational reduction available from the pair-exchange symmetry for
    invariants such as the Kretschmann scalar; not used in enumeration."""
    return Fraction(2 * dim * (dim - 1), dim * (dim - 1) + 2)


def independent_component_count(dim: int) -> int:
    """D**2 (D**2 - 1) / 12 independent curvature components."""
    if dim < 2:
        raise ValueError("dimension must be >= 2")
    return dim * dim * (dim * dim - 1) // 12


def contract_free(spec: InvariantSpec, tensors, dim: int) -> TensorField:
    """Contract all paired labels once per assignment of the free labels,
    producing a field over the free slots (rank 0 when no label is free)."""
    _check_tensors(spec, tensors, dim)
    index = {name: i for i, name in enumerate(spec.label_names)}
    free_ids = [index[name] for name in spec.label_names if name in spec.free_labels]
    bound_ids = [i for i in range(spec.label_count) if i not in free_ids]
    abbreviated, multiplier = detect_abbreviable_pairs(spec)
    pair_ids = [(index[x], index[y]) for x, y in sorted(abbreviated)]
    factor_ids = spec.factor_label_ids()
    stores = [t.components for t in tensors]
    evaluator = ProductEvaluator(spec, tensors)

    slot_of = {}
    variance = []
    for fid in free_ids:
        for fi, ids in enumerate(factor_ids):
            if fid in ids:
                slot = ids.index(fid)
                slot_of[fid] = (fi, slot)
                variance.append(spec.factors[fi].variance[slot])
    env = tensors[0].env
    components = {}
    assignment = [0] * spec.label_count
    for free_state in _cycle_assignments(assignment, free_ids, dim):
        total = None
        inner = list(free_state)
        for state in _cycle_assignments(inner, bound_ids, dim):
            if any(state[j] <= state[i] for i, j in pair_ids):
                continue
            for ids, store in zip(factor_ids, stores):
                if tuple(state[i] for i in ids) not in store:
                    break
            else:
                value = evaluator(tuple(state))
                total = value if total is None else total + value
        if total is not None and not total.is_zero:
            key = tuple(free_state[i] for i in free_ids)
            components[key] = total * multiplier
    return TensorField(env, dim, tuple(variance), components)
