"""Classical processings as pre/post-processing pairs.

A comb turns ``p(t|s)`` into ``p(u|r)`` via

    p(u|r) = sum_{c,s,t} post(u|c,t) p(t|s) pre(c,s|r)

where ``c`` is a correlation variable shared by the two stages. Combs built
with the constructors below remember how they were built (``origin``); the
ontology module relies on that to lift them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import (
    CardinalityMismatch,
    SigmaOutOfRange,
    SpaceMismatch,
    UnknownVariable,
    ValueOutOfRange,
)
from .prob import ONE, ZERO, CondDist, FiniteSpace, deterministic_functions, to_rational


def fresh_corr_space(cards: Sequence[int], taken) -> FiniteSpace:
    """Correlation variables ``c``, ``c1``, ... avoiding the names in ``taken``."""
    taken = set(taken)
    names = []
    i = 0
    while len(names) < len(cards):
        name = "c" if i == 0 else f"c{i}"
        i += 1
        if name not in taken:
            names.append(name)
    return FiniteSpace(tuple(zip(names, cards)))


@dataclass(frozen=True, eq=False)
class Comb:
    R: FiniteSpace
    S: FiniteSpace
    T: FiniteSpace
    U: FiniteSpace
    C: FiniteSpace
    pre: CondDist
    post: CondDist
    origin: tuple = ("table",)
    name: str = "f"

    def __post_init__(self):
        if self.pre.input != self.R or self.pre.output != self.C.concat(self.S):
            raise SpaceMismatch(f"pre-processing of {self.name} must map R to C x S")
        if self.post.input != self.C.concat(self.T) or self.post.output != self.U:
            raise SpaceMismatch(f"post-processing of {self.name} must map C x T to U")

    @property
    def dom(self) -> tuple:
        return (self.S, self.T)

    @property
    def cod(self) -> tuple:
        return (self.R, self.U)

    def __repr__(self):
        return f"Comb({self.name}: {self.S.names}->{self.T.names} => {self.R.names}->{self.U.names})"


def apply(f: Comb, d: CondDist) -> CondDist:
    if d.input != f.S or d.output != f.T:
        raise SpaceMismatch(f"{f!r} cannot act on {d!r}")
    ns, nt = f.S.size, f.T.size
    columns = []
    for r in range(f.R.size):
        out = [ZERO] * f.U.size
        for cs, p in f.pre.support(r):
            c, s = divmod(cs, ns)
            for t, q in d.support(s):
                pq = p * q
                for u, w in f.post.support(c * nt + t):
                    out[u] += pq * w
        columns.append(out)
    return CondDist(f.R, f.U, columns)


def transfer_tensor(f: Comb) -> dict:
    """``K[u, r, t, s] = sum_c post(u|c,t) pre(c,s|r)`` (nonzero cells only)."""
    ns, nt = f.S.size, f.T.size
    K = {}
    for r in range(f.R.size):
        for cs, p in f.pre.support(r):
            c, s = divmod(cs, ns)
            for t in range(nt):
                for u, w in f.post.support(c * nt + t):
                    key = (u, r, t, s)
                    K[key] = K.get(key, ZERO) + p * w
    return K


def normal_form(K: dict, n_out: int, n_r: int, n_in: int, n_s: int) -> tuple:
    """Representation-independent form of a transfer tensor.

    Two tensors act identically on every stochastic input iff their
    differences are of the form ``g(s)`` with ``sum_s g(s) = 0`` for each
    output cell; subtracting the ``in = 0`` slice and keeping its total
    removes exactly that freedom.
    """
    rows = []
    for o in range(n_out):
        for r in range(n_r):
            base = [K.get((o, r, 0, s), ZERO) for s in range(n_s)]
            diffs = tuple(
                K.get((o, r, t, s), ZERO) - base[s] for t in range(1, n_in) for s in range(n_s)
            )
            rows.append((sum(base, ZERO), diffs))
    return tuple(rows)


def action_key(f: Comb) -> tuple:
    """Hashable key: equal keys iff equal action on every ``p(t|s)``."""
    K = transfer_tensor(f)
    body = normal_form(K, f.U.size, f.R.size, f.T.size, f.S.size)
    return (f.R, f.S, f.T, f.U, body)


def combs_equal(f: Comb, g: Comb) -> bool:
    return action_key(f) == action_key(g)


def identity_comb(S: FiniteSpace, T: FiniteSpace, corr: int = 1) -> Comb:
    """Trivial pre/post-processing; ``pre(c,s|r) = delta_{s,r}/|C|``."""
    C = fresh_corr_space([corr], S.names + T.names)
    weight = Fraction(1, corr)
    pre_cols = []
    for r in range(S.size):
        col = [ZERO] * (C.size * S.size)
        for c in range(C.size):
            col[c * S.size + r] = weight
        pre_cols.append(col)
    post_cols = []
    for c in range(C.size):
        for t in range(T.size):
            col = [ZERO] * T.size
            col[t] = ONE
            post_cols.append(col)
    return Comb(
        S, S, T, T, C,
        CondDist(S, C.concat(S), pre_cols),
        CondDist(C.concat(T), T, post_cols),
        origin=("identity",),
        name="I",
    )


def _deterministic_comb(R, S, T, U, pre_fn, post_fn, origin, name) -> Comb:
    C = fresh_corr_space([1], S.names + T.names)
    pre = CondDist.deterministic(R, C.concat(S), lambda r: (0,) + tuple(pre_fn(r)))
    post = CondDist.deterministic(C.concat(T), U, lambda ct: post_fn(ct[1:]))
    return Comb(R, S, T, U, C, pre, post, origin=origin, name=name)


def _check_permutation(space: FiniteSpace, perm: Sequence[str]) -> tuple:
    perm = tuple(perm)
    if sorted(perm) != sorted(space.names):
        raise UnknownVariable(f"{perm} is not a permutation of {space.names}")
    for target, source in zip(space.names, perm):
        if space.card(target) != space.card(source):
            raise CardinalityMismatch(
                f"cannot feed {source!r} (card {space.card(source)}) into "
                f"{target!r} (card {space.card(target)})"
            )
    return perm


def permutation_comb(
    S: FiniteSpace, T: FiniteSpace, perm_in: Sequence[str], perm_out: Sequence[str]
) -> Comb:
    """Relabel variables: ``s_i = r_{perm_in[i]}`` and ``u_i = t_{perm_out[i]}``.

    ``perm_in`` lists, for each input variable of the experiment in order, the
    name of the controlled variable that feeds it (likewise ``perm_out``).
    """
    perm_in = _check_permutation(S, perm_in)
    perm_out = _check_permutation(T, perm_out)
    src_in = [S.position(n) for n in perm_in]
    src_out = [T.position(n) for n in perm_out]
    return _deterministic_comb(
        S, S, T, T,
        lambda r: tuple(r[p] for p in src_in),
        lambda t: tuple(t[p] for p in src_out),
        origin=("permutation", perm_in, perm_out),
        name="P[" + ",".join(perm_in) + "|" + ",".join(perm_out) + "]",
    )


def swap_comb(S: FiniteSpace, T: FiniteSpace) -> Comb:
    """Reverse the order of inputs and of outputs (the two-party swap)."""
    return permutation_comb(S, T, tuple(reversed(S.names)), tuple(reversed(T.names)))


def set_input_comb(S: FiniteSpace, T: FiniteSpace, var: str, value: int) -> Comb:
    """Pre-processing that fixes input ``var`` to ``value`` (removed from R)."""
    pos = S.position(var)
    if not 0 <= value < S.card(var):
        raise ValueOutOfRange(f"{var}={value} outside 0..{S.card(var) - 1}")
    R = S.drop([var])
    return _deterministic_comb(
        R, S, T, T,
        lambda r: r[:pos] + (value,) + r[pos:],
        lambda t: t,
        origin=("set_input", var, value),
        name=f"set[{var}={value}]",
    )


def discard_output_comb(S: FiniteSpace, T: FiniteSpace, vars: Sequence[str]) -> Comb:
    """Post-processing that marginalizes away the outputs ``vars``."""
    vars = tuple(vars)
    U = T.drop(vars)
    keep = [T.position(n) for n in U.names]
    return _deterministic_comb(
        S, S, T, U,
        lambda r: r,
        lambda t: tuple(t[p] for p in keep),
        origin=("discard", vars),
        name="discard[" + ",".join(vars) + "]",
    )


def compose_combs(g: Comb, f: Comb) -> Comb:
    """``g`` after ``f``; correlation variables merge as ``C_g x C_f``."""
    if g.S != f.R or g.T != f.U:
        raise SpaceMismatch(f"cannot compose {g!r} after {f!r}")
    cards = [c for c in g.C.cards + f.C.cards if c > 1] or [1]
    C = fresh_corr_space(cards, f.S.names + f.T.names)
    ncf = f.C.size
    ns, nmid_s, nt, nmid_t = f.S.size, f.R.size, f.T.size, f.U.size

    pre_cols = []
    for r in range(g.R.size):
        col = [ZERO] * (C.size * ns)
        for idx, p in g.pre.support(r):
            cg, s_mid = divmod(idx, nmid_s)
            for jdx, q in f.pre.support(s_mid):
                cf, s = divmod(jdx, ns)
                col[(cg * ncf + cf) * ns + s] += p * q
        pre_cols.append(col)

    post_cols = []
    for c in range(C.size):
        cg, cf = divmod(c, ncf)
        for t in range(nt):
            col = [ZERO] * g.U.size
            for t_mid, q in f.post.support(cf * nt + t):
                for u, p in g.post.support(cg * nmid_t + t_mid):
                    col[u] += q * p
            post_cols.append(col)

    return Comb(
        g.R, f.S, f.T, g.U, C,
        CondDist(g.R, C.concat(f.S), pre_cols),
        CondDist(C.concat(f.T), g.U, post_cols),
        origin=("compose", g, f),
        name=f"{g.name}∘{f.name}",
    )


def mix_combs(sigma, f: Comb, g: Comb) -> Comb:
    """``sigma f + (1 - sigma) g``; ``c`` selects which branch ran."""
    sigma = to_rational(sigma)
    if not 0 <= sigma <= 1:
        raise SigmaOutOfRange(f"sigma={sigma} outside [0, 1]")
    if (f.R, f.S, f.T, f.U) != (g.R, g.S, g.T, g.U):
        raise SpaceMismatch("mix_combs needs parallel combs")
    ncf, ncg = f.C.size, g.C.size
    C = fresh_corr_space([ncf + ncg], f.S.names + f.T.names)
    ns, nt = f.S.size, f.T.size

    pre_cols = []
    for r in range(f.R.size):
        col = [ZERO] * (C.size * ns)
        for idx, p in f.pre.support(r):
            c, s = divmod(idx, ns)
            col[c * ns + s] += sigma * p
        for idx, p in g.pre.support(r):
            c, s = divmod(idx, ns)
            col[(ncf + c) * ns + s] += (1 - sigma) * p
        pre_cols.append(col)

    post_cols = []
    for c in range(C.size):
        src, cc = (f, c) if c < ncf else (g, c - ncf)
        for t in range(nt):
            post_cols.append(src.post.columns[cc * nt + t])

    return Comb(
        f.R, f.S, f.T, f.U, C,
        CondDist(f.R, C.concat(f.S), pre_cols),
        CondDist(C.concat(f.T), f.U, post_cols),
        origin=("mix", sigma, f, g),
        name=f"mix({sigma},{f.name},{g.name})",
    )


def is_trivial_permutation(f: Comb) -> bool:
    """A permutation leaf that leaves every variable in place."""
    return f.origin[0] == "permutation" and f.origin[1] == f.S.names and f.origin[2] == f.T.names


def is_involution(f: Comb) -> bool:
    """True iff applying ``f`` twice is the identity on every deterministic input."""
    if f.R != f.S or f.U != f.T:
        return False
    for d in deterministic_functions(f.S, f.T):
        twice = apply(f, apply(f, d))
        if twice.columns != d.columns:
            return False
    return True


def state_of(d: CondDist) -> Comb:
    """The state morphism from the trivial object that prepares ``d``."""
    trivial = FiniteSpace.empty()
    C = fresh_corr_space([d.input.size], ())
    pre = CondDist.deterministic(d.input, C, lambda r: (d.input.index(r),))
    post = CondDist(C, d.output, d.columns)
    return Comb(d.input, trivial, trivial, d.output, C, pre, post, origin=("table",), name="state")


def dist_of_state(f: Comb) -> CondDist:
    if f.S.size != 1 or f.T.size != 1:
        raise SpaceMismatch("a state acts on the trivial object")
    trivial = CondDist(f.S, f.T, [[ONE]])
    return apply(f, trivial)
