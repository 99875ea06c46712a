# ellis_engine.py
import itertools
import logging
import random
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

import config
from g_algebra import translate_targets
from group_core import FiniteGroup, GroupError, find_nonassociative_triple, is_normal, product

logger = logging.getLogger(__name__)


class EllisError(ValueError):
    """A semigroup precondition failed or a structural invariant was contradicted."""


def _read_only(array):
    array.setflags(write=False)
    return array


# --- 1. Finite Semigroups ---

@dataclass(frozen=True, eq=False)
class FiniteSemigroup:
    """
    A finite semigroup on 0..order-1.
    tags[g] is the image of group element g; action[g, q] is the translate of q by g.
    Untagged semigroups act on themselves (every element is its own tag).
    """

    table: np.ndarray
    labels: tuple
    tags: np.ndarray = None
    action: np.ndarray = None
    levels: np.ndarray = None

    def __post_init__(self):
        if self.tags is None:
            object.__setattr__(self, "tags", _read_only(np.arange(self.order)))
            object.__setattr__(self, "action", self.table)

    @property
    def order(self):
        return int(self.table.shape[0])

    def mul(self, a, b):
        return int(self.table[a, b])

    @classmethod
    def from_table(cls, table, labels=None):
        table = np.array(table, dtype=np.int64)
        n = table.shape[0]
        if table.shape != (n, n) or n == 0 or table.min() < 0 or table.max() >= n:
            raise EllisError("Semigroup table must be a square table over its own carrier")
        bad = find_nonassociative_triple(table)
        if bad is not None:
            raise EllisError(f"Operation is not associative at {bad}")
        labels = tuple(str(v) for v in (labels if labels is not None else range(n)))
        return cls(_read_only(table), labels)

    @classmethod
    def from_stone(cls, S):
        """Tags are the embedding of G; the action is the atom of each translate."""
        alg = S.algebra
        action = np.stack([translate_targets(alg, q) for q in range(S.order)], axis=1)
        if (action < 0).any():
            raise EllisError("Stone algebra is not left-invariant")
        return cls(S.op, tuple(str(p) for p in range(S.order)),
                   alg.atom_of, _read_only(action), S.levels)


def full_transformation_monoid(n):
    """All maps {0..n-1} -> {0..n-1}, composed as (f*g)(x) = f(g(x))."""
    maps = list(itertools.product(range(n), repeat=n))
    return _from_maps(maps)


def transformation_semigroup(generators):
    """Closure of the generator maps under composition."""
    gens = [tuple(int(v) for v in g) for g in generators]
    if not gens:
        raise EllisError("At least one generator map is required")
    known = dict.fromkeys(gens)
    frontier = list(known)
    while frontier:
        nxt = []
        for f in frontier:
            for g in gens:
                h = tuple(f[g[x]] for x in range(len(g)))
                if h not in known:
                    known[h] = None
                    nxt.append(h)
        frontier = nxt
    return _from_maps(list(known))


def _from_maps(maps):
    index = {m: i for i, m in enumerate(maps)}
    n = len(maps)
    table = np.empty((n, n), dtype=np.int64)
    for i, f in enumerate(maps):
        for j, g in enumerate(maps):
            table[i, j] = index[tuple(f[x] for x in g)]
    return FiniteSemigroup(_read_only(table), tuple("".join(map(str, m)) for m in maps))


def rees_matrix_semigroup(A, I, L, P):
    """
    M(A; I, L; P) with (i,a,l)(j,b,m) = (i, a*P[l][j]*b, m).
    Element (i, a, l) has index (i*|A| + a)*L + l.
    """
    P = np.array(P, dtype=np.int64)
    if P.shape != (L, I):
        raise EllisError(f"Sandwich matrix must be {L}x{I}, got {P.shape}")
    size = A.order
    i1, a1, l1 = np.meshgrid(np.arange(I), np.arange(size), np.arange(L), indexing="ij")
    i1, a1, l1 = i1.ravel(), a1.ravel(), l1.ravel()
    left = A.table[a1[:, None], P[l1[:, None], i1[None, :]]]  # a * P[l][j]
    middle = A.table[left, a1[None, :]]  # (a * P[l][j]) * b
    table = (i1[:, None] * size + middle) * L + l1[None, :]
    labels = [f"({i},{A.label(a)},{l})" for i, a, l in zip(i1, a1, l1)]
    return FiniteSemigroup.from_table(table, labels)


# --- 2. Minimal Left Ideals, Idempotents, Ellis Groups ---

def minimal_left_ideals(S):
    """Minimal principal left ideals S^1 s; each returned ideal is re-verified."""
    n = S.order
    principal = np.zeros((n, n), dtype=bool)
    principal[np.arange(n)[:, None], S.table.T] = True  # row s: {t*s}
    principal[np.arange(n), np.arange(n)] = True
    # S^1 s is minimal iff s lies in S^1 t for every t in S^1 s
    minimal = (~principal | principal.T).all(axis=1)
    ideals, seen = [], set()
    for s in np.flatnonzero(minimal):
        key = principal[s].tobytes()
        if key not in seen:
            seen.add(key)
            ideals.append(_read_only(np.flatnonzero(principal[s])))
    for M in ideals:
        for p in M:
            if not np.array_equal(np.unique(S.table[:, p]), M):
                raise EllisError(f"S*p != M for p={p}")
            if not np.array_equal(np.unique(S.table[M, p]), M):
                raise EllisError(f"M*p != M for p={p}")
    logger.info(f"Found {len(ideals)} minimal left ideal(s) of sizes {[len(M) for M in ideals]}.")
    return ideals


def brute_force_minimal_left_ideals(S, subset_scan_limit=12):
    """
    Independent enumerator: scans every subset for order <= subset_scan_limit,
    otherwise closes each element under left multiplication.
    """
    n = S.order
    if n <= subset_scan_limit:
        ideals = []
        for mask in range(1, 1 << n):
            members = [i for i in range(n) if mask >> i & 1]
            if all(S.mul(t, m) in members for t in range(n) for m in members):
                ideals.append(frozenset(members))
    else:
        ideals = []
        for s in range(n):
            closure = {s}
            frontier = [s]
            while frontier:
                fresh = {S.mul(t, x) for t in range(n) for x in frontier} - closure
                closure |= fresh
                frontier = list(fresh)
            ideals.append(frozenset(closure))
    minimal = {I for I in ideals if not any(J < I for J in ideals)}
    return sorted(minimal, key=min)


@dataclass(frozen=True, eq=False)
class GroupComponent:
    ideal: int
    idempotent: int
    elements: np.ndarray  # semigroup indices, ascending
    group: FiniteGroup  # induced operation on local indices

    def local(self, element):
        return int(np.searchsorted(self.elements, element))


def _require_left_ideal(S, M):
    M = np.asarray(M)
    inside = np.zeros(S.order, dtype=bool)
    inside[M] = True
    if not inside[S.table[:, M]].all():
        raise EllisError("Set is not a left ideal")
    return M


def _component(S, u, members, ideal):
    elements = np.unique(S.table[u, members])
    position = np.full(S.order, -1, dtype=np.int64)
    position[elements] = np.arange(elements.size)
    local = position[S.table[np.ix_(elements, elements)]]
    if (local < 0).any():
        raise EllisError(f"uM is not closed under the operation (u={u})")
    try:
        group = FiniteGroup.from_table(local, [S.labels[e] for e in elements])
    except GroupError as e:
        raise EllisError(f"uM is not a group for u={u}: {e}") from e
    if elements[group.identity] != u:
        raise EllisError(f"Identity of uM is not u={u}")
    return GroupComponent(ideal, int(u), _read_only(elements), group)


def idempotents_and_groups(S, M, ideal=0):
    """J(M) and the groups uM, with the disjoint-union check M = union of uM."""
    M = _require_left_ideal(S, M)
    J = [int(u) for u in M if S.table[u, u] == u]
    if not J:
        raise EllisError("Minimal ideal without idempotents")
    components = [_component(S, u, M, ideal) for u in J]
    seen = np.zeros(S.order, dtype=np.int64)
    for comp in components:
        seen[comp.elements] += 1
    if not ((seen[M] == 1).all() and seen.sum() == len(M)):
        raise EllisError("The groups uM do not partition M")
    return J, components


def _try_map(source, target, image):
    """image: semigroup index for each local element of source; returns local map or None."""
    position = {int(e): i for i, e in enumerate(target.elements)}
    mapping = [position.get(int(v)) for v in image]
    if None in mapping or len(set(mapping)) != len(mapping):
        return None
    mapping = np.array(mapping)
    G, H = source.group, target.group
    if not (mapping[G.table] == H.table[mapping[:, None], mapping[None, :]]).all():
        return None
    return mapping


def find_isomorphism(G, H):
    """Backtracking over generator images with matching element orders."""
    if G.order != H.order or G.order > config.ISO_SEARCH_LIMIT:
        return None

    def orders(K):
        result = []
        for g in range(K.order):
            k, x = 1, g
            while x != K.identity:
                x, k = K.mul(x, g), k + 1
            result.append(k)
        return result

    g_orders, h_orders = orders(G), orders(H)
    gens, span = [], {G.identity}
    for g in range(G.order):
        if g not in span:
            gens.append(g)
            span = _span(G, gens)
    choices = [[h for h in range(H.order) if h_orders[h] == g_orders[g]] for g in gens]
    for images in itertools.product(*choices):
        mapping = {G.identity: H.identity}
        queue = [G.identity]
        ok = True
        while queue and ok:
            x = queue.pop()
            for g, h in zip(gens, images):
                y, fy = G.mul(x, g), H.mul(mapping[x], h)
                if y not in mapping:
                    mapping[y] = fy
                    queue.append(y)
                elif mapping[y] != fy:
                    ok = False
                    break
        if not ok or len(set(mapping.values())) != G.order:
            continue
        candidate = np.array([mapping[x] for x in range(G.order)])
        if (candidate[G.table] == H.table[candidate[:, None], candidate[None, :]]).all():
            return candidate
    return None


def _span(G, gens):
    span, frontier = {G.identity}, [G.identity]
    while frontier:
        fresh = {G.mul(x, g) for x in frontier for g in gens} - span
        span |= fresh
        frontier = list(fresh)
    return span


def group_isomorphisms(components, S):
    """
    Verified isomorphisms between every ordered pair of group components.
    Structured candidates x -> v x, x -> v x v, x -> x v are tried before brute force.
    """
    witnesses = {}
    for a, b in itertools.permutations(range(len(components)), 2):
        src, dst = components[a], components[b]
        if len(src.elements) != len(dst.elements):
            raise EllisError("Ellis groups of different orders")
        v = dst.idempotent
        mapping = None
        for image in (S.table[v, src.elements],
                      S.table[S.table[v, src.elements], v],
                      S.table[src.elements, v]):
            mapping = _try_map(src, dst, image)
            if mapping is not None:
                break
        if mapping is None:
            mapping = find_isomorphism(src.group, dst.group)
        if mapping is None:
            raise EllisError(f"No isomorphism found between components {a} and {b}")
        witnesses[(a, b)] = {int(src.elements[i]): int(dst.elements[j]) for i, j in enumerate(mapping)}
    return witnesses


# --- 3. Circle Operation, tau-Closure, H(uM) ---

def circle(S, p, Q):
    """p o Q = {g.q : g a group element tagged p, q in Q}; finite nets are eventually constant."""
    preimages = np.flatnonzero(S.tags == p)
    if not preimages.size:
        raise EllisError(f"Element {p} is not the image of a group element")
    Q = np.asarray(sorted(Q), dtype=np.int64)
    if not Q.size:
        return set()
    return {int(v) for v in np.unique(S.action[np.ix_(preimages, Q)])}


def ellis_group_of(S, u):
    """uM for an idempotent u lying in a minimal left ideal M = S u."""
    if S.table[u, u] != u:
        raise EllisError(f"{u} is not idempotent")
    ideal = np.unique(np.append(S.table[:, u], u))
    if not all(u in S.table[:, t] for t in ideal):
        raise EllisError(f"{u} does not lie in a minimal left ideal")
    return set(int(v) for v in np.unique(S.table[u, ideal]))


def tau_closure(S, u, Q, uM=None):
    """cl_tau(Q) = u(u o Q) for Q inside uM."""
    uM = ellis_group_of(S, u) if uM is None else uM
    if not set(Q) <= uM:
        raise EllisError("tau_closure needs Q inside uM")
    return {S.mul(u, r) for r in circle(S, u, Q)}


def _sample_subsets(elements, seed=0, count=200):
    elements = sorted(elements)
    if len(elements) <= 10:
        for r in range(len(elements) + 1):
            yield from (set(c) for c in itertools.combinations(elements, r))
        return
    rng = random.Random(seed)
    yield set()
    yield set(elements)
    for e in elements:
        yield {e}
    for _ in range(count):
        yield {e for e in elements if rng.random() < 0.5}


def check_closure_operator(S, u, seed=0):
    """Extensive, monotone, idempotent: exhaustively for |uM| <= 10, sampled otherwise."""
    uM = ellis_group_of(S, u)
    verdict = {"extensive": True, "monotone": True, "idempotent": True}
    for Q in _sample_subsets(uM, seed):
        closed = tau_closure(S, u, Q, uM)
        verdict["extensive"] &= Q <= closed
        verdict["idempotent"] &= tau_closure(S, u, closed, uM) == closed
        for extra in uM - Q:
            verdict["monotone"] &= closed <= tau_closure(S, u, Q | {extra}, uM)
    return verdict


def check_circle_calculus(S, seed=0):
    """(p o R)q = p o (Rq) and pR inside p o R, for tag images p."""
    rng = random.Random(seed)
    images = sorted(set(int(t) for t in S.tags))
    verdict = {"associates": True, "contains_product": True}
    for p in images:
        for _ in range(8):
            R = set(rng.sample(range(S.order), min(2, S.order)))
            q = rng.randrange(S.order)
            p_R = circle(S, p, R)
            verdict["associates"] &= {S.mul(r, q) for r in p_R} == circle(S, p, {S.mul(r, q) for r in R})
            verdict["contains_product"] &= {S.mul(p, r) for r in R} <= p_R
    return verdict


def h_subgroup(S, u):
    """
    H(uM): intersection of cl_tau(V) over tau-open V containing u.
    The minimal open neighbourhood is {p : u in cl_tau({p})}; for |uM| <= 12 the
    intersection over all open V is also computed literally and must agree.
    """
    uM = ellis_group_of(S, u)
    neighbourhood = {p for p in uM if u in tau_closure(S, u, {p}, uM)}
    H = tau_closure(S, u, neighbourhood, uM)
    if len(uM) <= 12:
        literal = set(uM)
        rest = sorted(uM - {u})
        for r in range(len(rest) + 1):
            for extra in itertools.combinations(rest, r):
                V = {u, *extra}
                if u not in tau_closure(S, u, uM - V, uM):
                    literal &= tau_closure(S, u, V, uM)
        if literal != H:
            raise EllisError(f"H computed two ways disagrees: {sorted(literal)} vs {sorted(H)}")
    return H


def h_subgroup_and_quotient(S, component):
    """Returns (H, quotient group, projection) with projection[-1 outside uM]."""
    u = component.idempotent
    H = h_subgroup(S, u)
    G = component.group
    H_local = G.subset([component.local(h) for h in H])
    if not (product(H_local, H_local) <= H_local and G.identity in H_local and is_normal(H_local)):
        raise EllisError("H(uM) is not a normal subgroup")
    coset_of, keys = {}, []
    h_idx = H_local.elements()
    for x in range(G.order):
        key = tuple(np.sort(G.table[x, h_idx]))
        if key not in coset_of:
            coset_of[key] = len(keys)
            keys.append(key)
    label = np.array([coset_of[tuple(np.sort(G.table[x, h_idx]))] for x in range(G.order)])
    reps = [key[0] for key in keys]
    table = np.array([[label[G.mul(a, b)] for b in reps] for a in reps], dtype=np.int64)
    quotient = FiniteGroup.from_table(table, [S.labels[component.elements[r]] for r in reps])
    projection = np.full(S.order, -1, dtype=np.int64)
    projection[component.elements] = label
    return frozenset(H), quotient, _read_only(projection)


# --- 4. Decomposition ---

@dataclass(frozen=True, eq=False)
class EllisDecomposition:
    semigroup: FiniteSemigroup
    ideals: tuple
    idempotents: tuple
    components: tuple
    isomorphisms: dict
    chosen: GroupComponent
    H: frozenset
    quotient: FiniteGroup
    projection: np.ndarray
    notes: dict = field(default_factory=dict)

    @property
    def u(self):
        return self.chosen.idempotent

    @property
    def uM(self):
        return self.chosen.elements


def decompose(S):
    ideals = minimal_left_ideals(S)
    idempotents, components = [], []
    for k, M in enumerate(ideals):
        J, comps = idempotents_and_groups(S, M, k)
        idempotents.append(tuple(J))
        components.extend(comps)
    isomorphisms = group_isomorphisms(components, S)
    chosen = components[0]
    H, quotient, projection = h_subgroup_and_quotient(S, chosen)
    logger.info(
        f"Decomposition: {len(ideals)} ideal(s), |J|={[len(J) for J in idempotents]}, "
        f"|uM|={len(chosen.elements)}, |H|={len(H)}, quotient order {quotient.order}."
    )
    return EllisDecomposition(S, tuple(ideals), tuple(idempotents), tuple(components),
                              isomorphisms, chosen, H, quotient, projection)


def collapse_checks(dec):
    """u o Q = uQ, cl_tau discrete, H = {u}; asserted independently of any pipeline."""
    S, u = dec.semigroup, dec.u
    uM = set(int(v) for v in dec.uM)
    circle_is_product = all(circle(S, u, {q}) == {S.mul(u, q)} for q in range(S.order))
    discrete = all(tau_closure(S, u, {p}, uM) == {p} for p in uM)
    return {
        "circle_is_product": circle_is_product,
        "tau_discrete": discrete,
        "H_trivial": dec.H == frozenset({u}),
    }


def decomposition_report(dec):
    """Structured summary plus the isomorphism matrix as a DataFrame."""
    n = len(dec.components)
    names = [f"{c.ideal}:{c.idempotent}" for c in dec.components]
    matrix = pd.DataFrame("-", index=names, columns=names)
    for i in range(n):
        matrix.iloc[i, i] = "id"
    for (a, b) in dec.isomorphisms:
        matrix.iloc[a, b] = "iso"
    report = {
        "ideal_count": len(dec.ideals),
        "ideal_sizes": [int(len(M)) for M in dec.ideals],
        "idempotents_per_ideal": [len(J) for J in dec.idempotents],
        "group_orders": [int(len(c.elements)) for c in dec.components],
        "H_order": len(dec.H),
        "quotient_order": dec.quotient.order,
        "quotient_table": dec.quotient.table.tolist(),
    }
    return report, matrix
