"""Finite subcategories of classical processings and functor-law checks.

Objects are pairs of spaces ``(inputs, outputs)`` of a set of distributions;
a comb ``f`` is a morphism from ``(f.S, f.T)`` to ``(f.R, f.U)``. Morphisms
are identified up to their action, the first construction found being kept
as the representative.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .combs import Comb, action_key, compose_combs, identity_comb, mix_combs
from .errors import ClosureExplosion, OpftError
from .ontology import OntComb, compose_ont, mix_ont, ont_equal, ont_identity
from .prob import to_rational

DEFAULT_MAX_MORPHISMS = 64


def max_morphisms() -> int:
    return int(os.environ.get("OPFT_MAX_MORPHISMS", DEFAULT_MAX_MORPHISMS))


def shape_class(obj) -> tuple:
    """Variable counts and cardinalities of an object, names forgotten."""
    S, T = obj
    return (S.cards, T.cards)


@dataclass
class Subcategory:
    objects: list
    morphisms: list
    generators: list
    _index: dict = field(default_factory=dict, repr=False)

    def find(self, f: Comb) -> Optional[Comb]:
        return self._index.get(action_key(f))

    def identity(self, obj) -> Comb:
        return self.find(identity_comb(*obj))

    def hom(self, dom, cod) -> list:
        return [f for f in self.morphisms if f.dom == dom and f.cod == cod]

    def composable_pairs(self):
        for g in self.morphisms:
            for f in self.morphisms:
                if g.dom == f.cod:
                    yield g, f

    def __len__(self):
        return len(self.morphisms)


def build_subcategory(
    generators: Sequence[Comb], closure_bound: int = 8, limit: Optional[int] = None
) -> Subcategory:
    """Close ``generators`` (plus identities) under composition.

    ``closure_bound`` caps the number of composition rounds; ``limit`` the
    number of distinct morphisms (``OPFT_MAX_MORPHISMS`` by default).
    """
    if closure_bound < 1:
        raise ValueError("closure_bound must be at least 1")
    limit = max_morphisms() if limit is None else limit
    cat = Subcategory([], [], list(generators))

    def add(f: Comb) -> bool:
        key = action_key(f)
        if key in cat._index:
            return False
        if len(cat.morphisms) >= limit:
            raise ClosureExplosion(f"subcategory exceeds {limit} morphisms")
        cat._index[key] = f
        cat.morphisms.append(f)
        return True

    for g in generators:
        for obj in (g.dom, g.cod):
            if obj not in cat.objects:
                cat.objects.append(obj)
    for obj in cat.objects:
        add(identity_comb(*obj))
    for g in generators:
        add(g)
    for _ in range(closure_bound):
        fresh = False
        for g, f in list(cat.composable_pairs()):
            fresh |= add(compose_combs(g, f))
        if not fresh:
            break
    return cat


@dataclass
class LawResult:
    law: str
    passed: bool
    checked: int
    counterexample: Optional[tuple] = None

    def text(self) -> str:
        status = "pass" if self.passed else "FAIL"
        line = f"{self.law}: {status} ({self.checked} checked)"
        if self.counterexample:
            line += " counterexample=(" + ", ".join(self.counterexample) + ")"
        return line


@dataclass
class FunctorReport:
    results: list

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.results)

    def result(self, law: str) -> LawResult:
        return next(r for r in self.results if r.law == law)

    def text(self) -> str:
        return "\n".join(r.text() for r in self.results)


def check_functor_laws(
    lift: Callable[[Comb], OntComb],
    category: Subcategory,
    sigmas: Sequence = ("1/2",),
) -> FunctorReport:
    """Identity, composition and convexity laws for ``lift`` on ``category``.

    Composites are looked up in the category, so ``lift`` is applied to the
    stored representative of ``g o f`` rather than to the literal composite.
    """
    sigmas = [to_rational(s) for s in sigmas]
    results = []

    bad, n = None, 0
    for obj in category.objects:
        I = category.identity(obj)
        h = lift(I)
        n += 1
        if h.Omega != h.Lam or not ont_equal(h, ont_identity(I.S, I.T, h.Lam)):
            bad = (I.name,)
            break
    results.append(LawResult("identity", bad is None, n, bad))

    bad, n = None, 0
    for g, f in category.composable_pairs():
        rep = category.find(compose_combs(g, f))
        n += 1
        try:
            same = ont_equal(lift(rep), compose_ont(lift(g), lift(f)))
        except OpftError:
            same = False
        if not same:
            bad = (g.name, f.name)
            break
    results.append(LawResult("composition", bad is None, n, bad))

    bad, n = None, 0
    for f in category.morphisms:
        if bad:
            break
        for g in category.hom(f.dom, f.cod):
            for sigma in sigmas:
                n += 1
                mixed = mix_combs(sigma, f, g)
                try:
                    same = ont_equal(lift(mixed), mix_ont(sigma, lift(f), lift(g)))
                except OpftError:
                    same = False
                if not same:
                    bad = (f.name, g.name, f"sigma={sigma}")
                    break
            if bad:
                break
    results.append(LawResult("convexity", bad is None, n, bad))
    return FunctorReport(results)
