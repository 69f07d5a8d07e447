"""Ontic extensions of distributions and of classical processings.

An ontological processing ``h`` acts on joints ``p(t, lam|s)`` and returns
``p(u, omega|r)``:

    sum_{lam,s,t,c} post(u, omega|lam, c, t) p(t, lam|s) pre(c, s|r)

Its post-processing input is ordered ``(lam, c, t)`` and its output
``(u, omega)``. Joint tables put operational outputs first, ontic last.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .combs import (
    Comb,
    combs_equal,
    fresh_corr_space,
    identity_comb,
    is_trivial_permutation,
    normal_form,
)
from .errors import ShapeMismatch, SigmaOutOfRange, SpaceMismatch, UnliftableComb
from .prob import (
    ONE,
    ZERO,
    CondDist,
    FiniteSpace,
    marginalize,
    product_dist,
    to_rational,
)

DEFAULT_ONTIC_NAME = "lam"


def ontic_space(size: int, name: str = DEFAULT_ONTIC_NAME) -> FiniteSpace:
    return FiniteSpace(((name, size),))


@dataclass(frozen=True)
class OnticExtensionDist:
    """``p(u, lam|r)`` whose ``lam``-marginal is exactly ``base``."""

    base: CondDist
    ontic: FiniteSpace
    joint: CondDist

    def __post_init__(self):
        if self.joint.input != self.base.input:
            raise SpaceMismatch("joint and base must share their input space")
        if self.joint.output != self.base.output.concat(self.ontic):
            raise SpaceMismatch("joint output must be (base outputs, ontic)")
        recovered = marginalize(self.joint, self.base.output.names)
        if recovered.columns != self.base.columns:
            raise ShapeMismatch("ontic marginal does not reproduce the base distribution")

    @classmethod
    def from_joint(cls, joint: CondDist, ontic: FiniteSpace) -> "OnticExtensionDist":
        op_names = [n for n in joint.output.names if n not in ontic]
        return cls(marginalize(joint, op_names), ontic, joint)


def trivial_extension(d: CondDist, prior: Sequence, ontic: Optional[FiniteSpace] = None) -> OnticExtensionDist:
    """Ontic state uncorrelated with everything operational."""
    ontic = ontic or ontic_space(len(prior))
    return OnticExtensionDist(d, ontic, product_dist(d, prior, ontic))


@dataclass(frozen=True, eq=False)
class OntComb:
    R: FiniteSpace
    S: FiniteSpace
    T: FiniteSpace
    U: FiniteSpace
    C: FiniteSpace
    Lam: FiniteSpace
    Omega: FiniteSpace
    pre: CondDist
    post: CondDist
    origin: tuple = ("table",)
    name: str = "h"

    def __post_init__(self):
        if self.pre.input != self.R or self.pre.output != self.C.concat(self.S):
            raise SpaceMismatch(f"pre-processing of {self.name} must map R to C x S")
        if self.post.input != self.Lam.concat(self.C).concat(self.T):
            raise SpaceMismatch(f"post-processing of {self.name} must read (Lam, C, T)")
        if self.post.output != self.U.concat(self.Omega):
            raise SpaceMismatch(f"post-processing of {self.name} must emit (U, Omega)")

    def post_index(self, lam: int, c: int, t: int) -> int:
        return (lam * self.C.size + c) * self.T.size + t

    def operational_at(self, lam: int) -> Comb:
        """The operational comb seen when the ontic input is fixed to ``lam``."""
        n_om = self.Omega.size
        cols = []
        for c in range(self.C.size):
            for t in range(self.T.size):
                src = self.post.columns[self.post_index(lam, c, t)]
                col = [ZERO] * self.U.size
                for uw, v in enumerate(src):
                    if v:
                        col[uw // n_om] += v
                cols.append(col)
        post = CondDist(self.C.concat(self.T), self.U, cols)
        return Comb(self.R, self.S, self.T, self.U, self.C, self.pre, post, name=f"{self.name}@{lam}")

    def __repr__(self):
        return f"OntComb({self.name}: {self.S.names}->{self.T.names} => {self.R.names}->{self.U.names}; {self.Lam.names}->{self.Omega.names})"


def ont_transfer(h: OntComb) -> dict:
    """``K[(u,om), r, (t,lam), s]`` with nonzero cells only."""
    ns, nt, nc, nl = h.S.size, h.T.size, h.C.size, h.Lam.size
    K = {}
    for r in range(h.R.size):
        for cs, p in h.pre.support(r):
            c, s = divmod(cs, ns)
            for lam in range(nl):
                for t in range(nt):
                    for uw, w in h.post.support((lam * nc + c) * nt + t):
                        key = (uw, r, t * nl + lam, s)
                        K[key] = K.get(key, ZERO) + p * w
    return K


def ont_action_key(h: OntComb) -> tuple:
    body = normal_form(
        ont_transfer(h), h.U.size * h.Omega.size, h.R.size, h.T.size * h.Lam.size, h.S.size
    )
    return (h.R, h.S, h.T, h.U, h.Lam, h.Omega, body)


def ont_equal(h1: OntComb, h2: OntComb) -> bool:
    return ont_action_key(h1) == ont_action_key(h2)


def _joint_of(d) -> CondDist:
    return d.joint if isinstance(d, OnticExtensionDist) else d


def apply_ont(h: OntComb, d) -> OnticExtensionDist:
    """Push a joint ``p(t, lam|s)`` through ``h``."""
    joint = _joint_of(d)
    if joint.input != h.S or joint.output != h.T.concat(h.Lam):
        raise SpaceMismatch(f"{h!r} cannot act on {joint!r}")
    ns, nt, nc, nl = h.S.size, h.T.size, h.C.size, h.Lam.size
    cols = []
    for r in range(h.R.size):
        out = [ZERO] * (h.U.size * h.Omega.size)
        for cs, p in h.pre.support(r):
            c, s = divmod(cs, ns)
            for tl, q in joint.support(s):
                t, lam = divmod(tl, nl)
                pq = p * q
                for uw, w in h.post.support((lam * nc + c) * nt + t):
                    out[uw] += pq * w
        cols.append(out)
    return OnticExtensionDist.from_joint(CondDist(h.R, h.U.concat(h.Omega), cols), h.Omega)


def lift_with_kernel(f: Comb, Lam: FiniteSpace, Omega: FiniteSpace, kernel: CondDist, name=None) -> OntComb:
    """``post_h(u, om|lam, c, t) = post_f(u|c, t) kernel(om|lam)``."""
    if kernel.input != Lam or kernel.output != Omega:
        raise SpaceMismatch("kernel must map Lam to Omega")
    taken = set(f.S.names + f.T.names + f.U.names + f.R.names)
    if taken & set(Lam.names) or taken & set(Omega.names):
        raise SpaceMismatch("ontic variable names clash with operational ones")
    n_om = Omega.size
    cols = []
    for lam in range(Lam.size):
        kcol = kernel.columns[lam]
        for ct in range(f.C.size * f.T.size):
            pcol = f.post.columns[ct]
            col = [ZERO] * (f.U.size * n_om)
            for u, a in enumerate(pcol):
                if a:
                    for om, b in enumerate(kcol):
                        if b:
                            col[u * n_om + om] = a * b
            cols.append(col)
    post = CondDist(Lam.concat(f.C).concat(f.T), f.U.concat(Omega), cols)
    return OntComb(
        f.R, f.S, f.T, f.U, f.C, Lam, Omega, f.pre, post,
        origin=("lift", f, kernel), name=name or f"h[{f.name}]",
    )


def bijection_kernel(Lam: FiniteSpace, Omega: FiniteSpace, k: Optional[Sequence[int]] = None) -> CondDist:
    """``delta_{om, k(lam)}``; ``k=None`` is the identity."""
    if k is None:
        k = tuple(range(Lam.size))
    k = tuple(k)
    if len(k) != Lam.size or sorted(k) != list(range(Omega.size)):
        raise UnliftableComb(f"{k} is not a bijection Lam -> Omega")
    return CondDist.deterministic(Lam, Omega, lambda a: Omega.assignment(k[Lam.index(a)]))


def ont_identity(S: FiniteSpace, T: FiniteSpace, Lam: FiniteSpace) -> OntComb:
    return lift_with_kernel(identity_comb(S, T), Lam, Lam, bijection_kernel(Lam, Lam), name="I_Lam")


def compose_ont(hg: OntComb, hf: OntComb) -> OntComb:
    """``hg`` after ``hf`` at the ontological level."""
    if hg.S != hf.R or hg.T != hf.U or hg.Lam != hf.Omega:
        raise SpaceMismatch(f"cannot compose {hg!r} after {hf!r}")
    cards = [c for c in hg.C.cards + hf.C.cards if c > 1] or [1]
    C = fresh_corr_space(cards, hf.S.names + hf.T.names)
    ncf, ncg = hf.C.size, hg.C.size
    ns, nmid_s = hf.S.size, hf.R.size
    nt, nmid_t = hf.T.size, hf.U.size
    nl, nmid_l = hf.Lam.size, hf.Omega.size

    pre_cols = []
    for r in range(hg.R.size):
        col = [ZERO] * (C.size * ns)
        for idx, p in hg.pre.support(r):
            cg, s_mid = divmod(idx, nmid_s)
            for jdx, q in hf.pre.support(s_mid):
                cf, s = divmod(jdx, ns)
                col[(cg * ncf + cf) * ns + s] += p * q
        pre_cols.append(col)

    post_cols = []
    n_out = hg.U.size * hg.Omega.size
    for lam in range(nl):
        for c in range(C.size):
            cg, cf = divmod(c, ncf)
            for t in range(nt):
                col = [ZERO] * n_out
                for tl_mid, q in hf.post.support((lam * ncf + cf) * nt + t):
                    t_mid, l_mid = divmod(tl_mid, nmid_l)
                    for uw, p in hg.post.support((l_mid * ncg + cg) * nmid_t + t_mid):
                        col[uw] += q * p
                post_cols.append(col)

    return OntComb(
        hg.R, hf.S, hf.T, hg.U, C, hf.Lam, hg.Omega,
        CondDist(hg.R, C.concat(hf.S), pre_cols),
        CondDist(hf.Lam.concat(C).concat(hf.T), hg.U.concat(hg.Omega), post_cols),
        origin=("compose", hg, hf),
        name=f"{hg.name}∘{hf.name}",
    )


def mix_ont(sigma, hf: OntComb, hg: OntComb) -> OntComb:
    sigma = to_rational(sigma)
    if not 0 <= sigma <= 1:
        raise SigmaOutOfRange(f"sigma={sigma} outside [0, 1]")
    if (hf.R, hf.S, hf.T, hf.U, hf.Lam, hf.Omega) != (hg.R, hg.S, hg.T, hg.U, hg.Lam, hg.Omega):
        raise SpaceMismatch("mix_ont needs parallel processings")
    ncf, ncg = hf.C.size, hg.C.size
    C = fresh_corr_space([ncf + ncg], hf.S.names + hf.T.names)
    ns, nt = hf.S.size, hf.T.size

    pre_cols = []
    for r in range(hf.R.size):
        col = [ZERO] * (C.size * ns)
        for idx, p in hf.pre.support(r):
            c, s = divmod(idx, ns)
            col[c * ns + s] += sigma * p
        for idx, p in hg.pre.support(r):
            c, s = divmod(idx, ns)
            col[(ncf + c) * ns + s] += (1 - sigma) * p
        pre_cols.append(col)

    post_cols = []
    for lam in range(hf.Lam.size):
        for c in range(C.size):
            src, cc = (hf, c) if c < ncf else (hg, c - ncf)
            for t in range(nt):
                post_cols.append(src.post.columns[src.post_index(lam, cc, t)])

    return OntComb(
        hf.R, hf.S, hf.T, hf.U, C, hf.Lam, hf.Omega,
        CondDist(hf.R, C.concat(hf.S), pre_cols),
        CondDist(hf.Lam.concat(C).concat(hf.T), hf.U.concat(hf.Omega), post_cols),
        origin=("mix", sigma, hf, hg),
        name=f"mix({sigma},{hf.name},{hg.name})",
    )


def canonical_lift(
    f: Comb,
    Lam: FiniteSpace,
    k: Optional[Sequence[int]] = None,
    lifts: Optional[Mapping[Comb, OntComb]] = None,
) -> OntComb:
    """The lift forced by structure preservation on the constructor algebra.

    Identity, set-input and discard leaves keep ``omega = lam``; permutation
    leaves that move something relabel the ontic state by ``k``; composites and mixtures lift
    recursively. Combs given only as tables need an entry in ``lifts``.
    """
    if lifts and f in lifts:
        h = lifts[f]
        if not check_ontic_extension_condition(h, f):
            raise UnliftableComb(f"user lift of {f.name} is not an ontic extension of it")
        return h
    kind = f.origin[0]
    if kind in ("identity", "set_input", "discard") or is_trivial_permutation(f):
        return lift_with_kernel(f, Lam, Lam, bijection_kernel(Lam, Lam))
    if kind == "permutation":
        return lift_with_kernel(f, Lam, Lam, bijection_kernel(Lam, Lam, k))
    if kind == "compose":
        _, g, inner = f.origin
        return compose_ont(canonical_lift(g, Lam, k, lifts), canonical_lift(inner, Lam, k, lifts))
    if kind == "mix":
        _, sigma, a, b = f.origin
        return mix_ont(sigma, canonical_lift(a, Lam, k, lifts), canonical_lift(b, Lam, k, lifts))
    raise UnliftableComb(f"{f.name} is not built from the constructor algebra and has no user lift")


def check_ontic_extension_condition(h: OntComb, f: Comb) -> bool:
    """Marginalizing ``omega`` leaves exactly ``f``, whatever ``lam`` is fed in."""
    if (h.R, h.S, h.T, h.U) != (f.R, f.S, f.T, f.U):
        raise SpaceMismatch(f"{h!r} and {f!r} have different operational spaces")
    return all(combs_equal(h.operational_at(lam), f) for lam in range(h.Lam.size))


def processed_joint(h: OntComb, d) -> dict:
    """``p(u, omega, lam|r)`` as ``{(r, u, om, lam): value}`` (nonzero cells)."""
    joint = _joint_of(d)
    if joint.input != h.S or joint.output != h.T.concat(h.Lam):
        raise SpaceMismatch(f"{h!r} cannot act on {joint!r}")
    ns, nt, nc, nl = h.S.size, h.T.size, h.C.size, h.Lam.size
    n_om = h.Omega.size
    out = {}
    for r in range(h.R.size):
        for cs, p in h.pre.support(r):
            c, s = divmod(cs, ns)
            for tl, q in joint.support(s):
                t, lam = divmod(tl, nl)
                for uw, w in h.post.support((lam * nc + c) * nt + t):
                    u, om = divmod(uw, n_om)
                    key = (r, u, om, lam)
                    out[key] = out.get(key, ZERO) + p * q * w
    return out


def check_sufficient_statistics(h: OntComb, context: Iterable) -> bool:
    """``p(u|omega, r) == p(u|lam, r)`` wherever ``p(omega, lam|r) > 0``.

    Conditioning events of probability zero are skipped.
    """
    context = list(context)
    if not context:
        raise ValueError("sufficient-statistics check needs at least one joint")
    for d in context:
        J = processed_joint(h, d)
        u_om, u_lam, om_lam, p_om, p_lam = {}, {}, {}, {}, {}
        for (r, u, om, lam), v in J.items():
            u_om[r, u, om] = u_om.get((r, u, om), ZERO) + v
            u_lam[r, u, lam] = u_lam.get((r, u, lam), ZERO) + v
            om_lam[r, om, lam] = om_lam.get((r, om, lam), ZERO) + v
            p_om[r, om] = p_om.get((r, om), ZERO) + v
            p_lam[r, lam] = p_lam.get((r, lam), ZERO) + v
        for (r, om, lam), v in om_lam.items():
            if not v:
                continue
            for u in range(h.U.size):
                lhs = u_om.get((r, u, om), ZERO) * p_lam[r, lam]
                rhs = u_lam.get((r, u, lam), ZERO) * p_om[r, om]
                if lhs != rhs:
                    return False
    return True


def check_structure_preservation(f: Comb, h: OntComb, lift: Callable[[Comb], OntComb]) -> list:
    """Clauses of structure preservation that ``h`` (claimed lift of ``f``) violates."""
    failures = []
    if f.R == f.S and f.U == f.T and combs_equal(f, identity_comb(f.S, f.T)):
        if not ont_equal(h, ont_identity(f.S, f.T, h.Lam)) or h.Omega != h.Lam:
            failures.append("identity")
    kind = f.origin[0]
    if kind == "compose":
        _, g, inner = f.origin
        if not ont_equal(h, compose_ont(lift(g), lift(inner))):
            failures.append("composition")
    elif kind == "mix":
        _, sigma, a, b = f.origin
        if not ont_equal(h, mix_ont(sigma, lift(a), lift(b))):
            failures.append("convexity")
    return failures


def all_bijections(n: int):
    return itertools.permutations(range(n))
