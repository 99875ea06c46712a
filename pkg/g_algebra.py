# g_algebra.py
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import pandas as pd

import config
from group_core import GSubset, find_nonassociative_triple, inverse_set

logger = logging.getLogger(__name__)


class AlgebraError(ValueError):
    """An algebra precondition (membership, invariance, d-closedness) failed."""


class AlgebraBudgetExceeded(AlgebraError):
    def __init__(self, atoms):
        super().__init__(f"d-closure exceeded the atom budget ({atoms} > {config.ATOM_BUDGET})")
        self.atoms = atoms


def _canonical(labels):
    """Relabels blocks 0, 1, ... in order of their first element."""
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first)] = np.arange(first.size)
    return rank[inverse.ravel()]


def _refine(labels, rows):
    """Common refinement of a labelling with per-element signatures (one row per element)."""
    packed = np.packbits(rows, axis=1) if rows.dtype == bool else rows
    keys = {}
    refined = np.empty(labels.size, dtype=np.int64)
    for x in range(labels.size):
        key = (int(labels[x]), packed[x].tobytes())
        refined[x] = keys.setdefault(key, len(keys))
    return refined


# --- 1. G-Algebras ---

@dataclass(frozen=True, eq=False)
class GAlgebra:
    """A Boolean algebra of subsets of a finite group, stored as its atom partition."""

    group: object
    atom_of: np.ndarray

    def __post_init__(self):
        labels = _canonical(np.asarray(self.atom_of))
        if labels.shape != (self.group.order,):
            raise AlgebraError("Atom labelling must cover the carrier")
        labels.setflags(write=False)
        object.__setattr__(self, "atom_of", labels)

    @property
    def atom_count(self):
        return int(self.atom_of.max()) + 1

    @cached_property
    def members(self):
        """Element indices of each atom, ascending."""
        order = np.argsort(self.atom_of, kind="stable")
        bounds = np.cumsum(np.bincount(self.atom_of, minlength=self.atom_count))[:-1]
        return tuple(np.split(order, bounds))

    def atom(self, i):
        return GSubset(self.group, self.atom_of == i)

    @property
    def atoms(self):
        return [self.atom(i) for i in range(self.atom_count)]

    def block_union(self, atom_indices):
        chosen = np.zeros(self.atom_count, dtype=bool)
        chosen[list(atom_indices)] = True
        return GSubset(self.group, chosen[self.atom_of])

    def atoms_meeting(self, U):
        hits = np.zeros(self.atom_count, dtype=bool)
        hits[self.atom_of[U.bits]] = True
        return hits

    def atoms_inside(self, U):
        outside = np.zeros(self.atom_count, dtype=bool)
        outside[self.atom_of[~U.bits]] = True
        return ~outside

    def contains(self, U):
        """True iff U is a union of atoms."""
        return bool(np.array_equal(self.atoms_meeting(U), self.atoms_inside(U)))

    def __repr__(self):
        return f"GAlgebra(order={self.group.order}, atoms={self.atom_count})"


def _generate(group, seeds, labels, right_translates):
    n = group.order
    rows_index = np.arange(n)[:, None]
    for S in seeds:
        if S.group is not group:
            raise AlgebraError("Seed belongs to a different group")
        s_inv = inverse_set(S).elements()
        if not s_inv.size:
            continue
        # x lies in g*S exactly for g in x*S^-1
        member = np.zeros((n, n), dtype=bool)
        member[rows_index, group.table[:, s_inv]] = True
        labels = _refine(labels, member)
    if right_translates:
        # x ~ x' iff xh ~ x'h for every h; this adds every two-sided translate gSh
        labels = _refine(np.zeros(n, dtype=np.int64), _canonical(labels)[group.table].astype(np.int64))
    return labels


def generate_algebra(group, seeds, right_translates=False):
    """
    Smallest left-invariant algebra containing every seed, as the common refinement of
    the translate families. With right_translates, two-sided translates are adjoined as well.
    """
    if not seeds:
        raise AlgebraError("generate_algebra needs at least one seed")
    labels = _generate(group, seeds, np.zeros(group.order, dtype=np.int64), right_translates)
    alg = GAlgebra(group, labels)
    logger.info(f"Generated algebra with {alg.atom_count} atoms from {len(seeds)} seeds.")
    return alg


def is_left_invariant(alg):
    """x ~ x' must imply gx ~ gx' for every g (translates of atoms are then unions of atoms)."""
    moved = alg.atom_of[alg.group.table]  # [g, x] -> atom of gx
    for idx in alg.members:
        if not (moved[:, idx] == moved[:, idx[:1]]).all():
            return False
    return True


def translate_targets(alg, q):
    """For each g, the atom containing g*q, or -1 when g*q straddles atoms."""
    images = alg.atom_of[alg.group.table[:, alg.members[q]]]
    targets = images[:, 0].copy()
    targets[~(images == images[:, :1]).all(axis=1)] = -1
    return targets


def d_operator(alg, q, U):
    """d_q(U) = {g : g^-1 U contains the atom q} = {g : g*q is inside U}."""
    if not alg.contains(U):
        raise AlgebraError("d_operator needs U to be a union of atoms")
    inside = U.bits[alg.group.table[:, alg.members[q]]]
    return GSubset(alg.group, inside.all(axis=1))


def is_d_closed(alg):
    # translates of atoms are atoms here, so checking atoms U suffices
    for q in range(alg.atom_count):
        targets = translate_targets(alg, q)
        for idx in alg.members:
            if not (targets[idx] == targets[idx[0]]).all():
                return False
    return True


def d_closure(alg):
    """
    Least d-closed refinement: adjoin every d_q(atom of e) and re-refine until fixpoint.
    d_q(gU) = g d_q(U) and every atom is a translate of the identity's atom, so these seeds suffice.
    """
    if not is_left_invariant(alg):
        raise AlgebraError("d_closure needs a left-invariant algebra")
    group = alg.group
    current = alg
    rounds = 0
    while True:
        rounds += 1
        home = current.atom_of[group.identity]
        seeds = [
            GSubset(group, translate_targets(current, q) == home)
            for q in range(current.atom_count)
        ]
        labels = _generate(group, seeds, current.atom_of.copy(), False)
        refined = GAlgebra(group, labels)
        if refined.atom_count > config.ATOM_BUDGET:
            raise AlgebraBudgetExceeded(refined.atom_count)
        logger.debug(f"d-closure round {rounds}: {current.atom_count} -> {refined.atom_count} atoms")
        if refined.atom_count == current.atom_count:
            logger.info(f"d-closure reached a fixpoint after {rounds} round(s) with {refined.atom_count} atoms.")
            return refined
        current = refined


# --- 2. Stone Semigroup ---

@dataclass(frozen=True, eq=False)
class StoneSemigroup:
    algebra: GAlgebra
    op: np.ndarray
    levels: np.ndarray  # levels[n, p]: atom p inside X^n (row 0 is {e})

    @property
    def order(self):
        return int(self.op.shape[0])

    @property
    def n_max(self):
        return int(self.levels.shape[0]) - 1

    def mul(self, p, q):
        return int(self.op[p, q])

    def embed(self, g):
        return int(self.algebra.atom_of[g])

    def filtration(self, n):
        return np.flatnonzero(self.levels[n])

    def level_of(self, p):
        hits = np.flatnonzero(self.levels[:, p])
        return int(hits[0]) if hits.size else None


def stone_semigroup(alg, X_powers):
    """U is in p*q iff d_q(U) is in p, computed on atoms."""
    k = alg.atom_count
    reps = np.array([idx[0] for idx in alg.members])
    op = np.empty((k, k), dtype=np.int64)
    for q in range(k):
        targets = translate_targets(alg, q)
        if (targets < 0).any():
            raise AlgebraError("A translate of an atom straddles atoms; the algebra is not left-invariant")
        column = targets[reps]
        if not (targets == column[alg.atom_of]).all():
            raise AlgebraError("Algebra is not d-closed: members of one atom act differently")
        op[:, q] = column
    bad = find_nonassociative_triple(op)
    if bad is not None:
        raise AlgebraError(f"Stone product is not associative at {bad}")
    table = alg.group.table
    if not (op[alg.atom_of[:, None], alg.atom_of[None, :]] == alg.atom_of[table]).all():
        raise AlgebraError("Stone product does not extend the group action")

    identity = alg.group.singleton(alg.group.identity)
    levels = np.array([alg.atoms_inside(U) for U in [identity, *X_powers]])
    if not (levels[:-1] <= levels[1:]).all():
        raise AlgebraError("Filtration levels are not nested; X_powers is not a power filtration")
    op.setflags(write=False)
    levels.setflags(write=False)
    logger.info(f"Stone semigroup on {k} atoms, filtration up to n={len(X_powers)}.")
    return StoneSemigroup(alg, op, levels)


def check_level_products(S):
    """Triples (p, q, r=p*q) where q in level n, r in level m, but p is not in level n+m."""
    level = [S.level_of(p) for p in range(S.order)]
    violations = []
    for p in range(S.order):
        for q in range(S.order):
            r = S.mul(p, q)
            if level[q] is None or level[r] is None or level[q] + level[r] > S.n_max:
                continue
            if level[p] is None or level[p] > level[q] + level[r]:
                violations.append((p, q, r))
    return violations


@dataclass(frozen=True)
class TranslationRepresentation:
    maps: dict
    injective: bool
    closed_under_composition: bool


def left_translation_representation(S):
    """p -> l_p with l_p(q) = p*q; finite stand-in for the Ellis-semigroup isomorphism."""
    maps = {p: tuple(int(v) for v in S.op[p]) for p in range(S.order)}
    image = set(maps.values())
    closed = all(
        tuple(int(v) for v in S.op[p][S.op[q]]) in image
        for p in range(S.order)
        for q in range(S.order)
    )
    return TranslationRepresentation(maps, len(image) == S.order, closed)


def collapse_report(S):
    """The finite collapse: atoms act uniformly, S is a group, atoms are cosets of a normal subgroup."""
    alg = S.algebra
    group = alg.group
    uniform = True
    for q in range(S.order):
        targets = translate_targets(alg, q)
        uniform &= bool((targets == S.op[alg.atom_of, q]).all())
    home = S.embed(group.identity)
    carrier = np.arange(S.order)
    neutral = bool((S.op[home] == carrier).all() and (S.op[:, home] == carrier).all())
    latin = bool(((S.op == home).sum(axis=1) == 1).all())
    kernel = alg.atom(home)
    cosets = all(alg.atom(alg.atom_of[g]) == GSubset(group, kernel.bits[group.table[group.inv(g)]])
                 for g in range(group.order))
    normal = bool((alg.atom_of[group.table[group.table[:, kernel.elements()], group.inverses[:, None]]] == home).all())
    return {
        "atoms_act_uniformly": uniform,
        "is_group": neutral and latin,
        "atoms_are_cosets": cosets,
        "kernel_is_normal": normal,
    }


# --- 3. Dumps ---

def algebra_dump(alg):
    return "\n".join(
        f"atom {i}: {[int(v) for v in idx]}" for i, idx in enumerate(alg.members)
    )


def semigroup_table(S):
    labels = list(range(S.order))
    return pd.DataFrame(S.op, index=pd.Index(labels, name="p"), columns=pd.Index(labels, name="q"))
