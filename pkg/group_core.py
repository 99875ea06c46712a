# group_core.py
import logging
from dataclasses import dataclass

import numpy as np
import sympy

import config

logger = logging.getLogger(__name__)

PROVENANCES = (
    "table",
    "permutation-generators",
    "matrix-generators-over-prime-field",
    "central-extension",
)
MAX_ENUMERATED_ORDER = 8192


class GroupError(ValueError):
    """A group axiom or a subset precondition does not hold."""


class _SearchBudgetExhausted(Exception):
    pass


def _read_only(array):
    array.setflags(write=False)
    return array


# --- 1. Finite Groups ---

def find_nonassociative_triple(table, seed=0):
    """
    Returns an offending triple (a, b, c) with (ab)c != a(bc), or None.
    Exhaustive for small tables, sampled above config.EXHAUSTIVE_ASSOCIATIVITY_LIMIT.
    """
    n = table.shape[0]
    if n <= config.EXHAUSTIVE_ASSOCIATIVITY_LIMIT:
        for a in range(n):
            left = table[table[a]]  # [b, c] -> (ab)c
            right = table[a][table]  # [b, c] -> a(bc)
            bad = np.argwhere(left != right)
            if bad.size:
                return (a, int(bad[0][0]), int(bad[0][1]))
        return None
    rng = np.random.default_rng(seed)
    triples = rng.integers(0, n, size=(config.SAMPLED_TRIPLES, 3))
    a, b, c = triples.T
    bad = np.nonzero(table[table[a, b], c] != table[a, table[b, c]])[0]
    logger.info(f"Associativity sampled on {config.SAMPLED_TRIPLES} triples (order {n}).")
    if bad.size:
        return tuple(int(v) for v in triples[bad[0]])
    return None


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    """A finite group on the dense carrier 0..order-1, given by its multiplication table."""

    table: np.ndarray
    identity: int
    inverses: np.ndarray
    labels: tuple
    provenance: str = "table"

    @property
    def order(self):
        return int(self.table.shape[0])

    def mul(self, a, b):
        return int(self.table[a, b])

    def inv(self, a):
        return int(self.inverses[a])

    def label(self, a):
        return self.labels[a]

    def index_of(self, label):
        """Accepts an element index or a display label."""
        if isinstance(label, (int, np.integer)) and not isinstance(label, bool):
            if 0 <= int(label) < self.order:
                return int(label)
            raise GroupError(f"Element index {label} outside 0..{self.order - 1}")
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise GroupError(f"Unknown element label {label!r}") from None

    def subset(self, elements):
        return GSubset.of(self, elements)

    def empty(self):
        return GSubset(self, np.zeros(self.order, dtype=bool))

    def full(self):
        return GSubset(self, np.ones(self.order, dtype=bool))

    def singleton(self, g):
        return GSubset.of(self, [g])

    def is_abelian(self):
        return bool((self.table == self.table.T).all())

    def __repr__(self):
        return f"FiniteGroup(order={self.order}, provenance={self.provenance!r})"

    # --- constructors ---

    @classmethod
    def from_table(cls, table, labels=None, provenance="table"):
        """Validates the group axioms of a Cayley table and returns the group."""
        if provenance not in PROVENANCES:
            raise GroupError(f"Unknown provenance {provenance!r}")
        table = np.array(table, dtype=np.int32)
        if table.ndim != 2 or table.shape[0] != table.shape[1] or table.shape[0] == 0:
            raise GroupError(f"Multiplication table must be square and nonempty, got shape {table.shape}")
        n = table.shape[0]
        if table.min() < 0 or table.max() >= n:
            raise GroupError("Multiplication table has entries outside the carrier")
        carrier = np.arange(n)
        left_neutral = np.nonzero((table == carrier).all(axis=1))[0]
        if not left_neutral.size:
            raise GroupError("No identity element")
        identity = int(left_neutral[0])
        if not (table[:, identity] == carrier).all():
            raise GroupError(f"Element {identity} is only a left identity")
        hits = table == identity
        if not (hits.sum(axis=1) == 1).all():
            raise GroupError("Some element has no unique right inverse")
        inverses = hits.argmax(axis=1).astype(np.int32)
        if not (table[inverses, carrier] == identity).all():
            raise GroupError("Right inverses are not left inverses")
        bad = find_nonassociative_triple(table)
        if bad is not None:
            raise GroupError(f"Multiplication is not associative at {bad}")
        if labels is None:
            labels = tuple(str(i) for i in range(n))
        labels = tuple(str(label) for label in labels)
        if len(labels) != n:
            raise GroupError("One label per element is required")
        return cls(_read_only(table), identity, _read_only(inverses), labels, provenance)

    @classmethod
    def cyclic(cls, n):
        if n < 1:
            raise GroupError("Cyclic group order must be positive")
        return cls.from_table(np.add.outer(np.arange(n), np.arange(n)) % n)

    @classmethod
    def from_permutations(cls, generators):
        """
        Enumerates the group generated by permutations given as image lists.
        Product convention: (p*q)(i) = p(q(i)).
        """
        gens = [tuple(int(v) for v in g) for g in generators]
        if not gens:
            raise GroupError("At least one generator is required")
        degree = len(gens[0])
        for g in gens:
            if len(g) != degree or sorted(g) != list(range(degree)):
                raise GroupError(f"Not a permutation of 0..{degree - 1}: {g}")

        def compose(p, q):
            return tuple(p[q[i]] for i in range(degree))

        elements, table = _enumerate_closure(tuple(range(degree)), gens, compose)
        return cls.from_table(table, [_cycle_label(p) for p in elements], "permutation-generators")

    @classmethod
    def from_matrices(cls, generators, p):
        """Enumerates the group generated by invertible k x k matrices over Z/p (p prime, p <= 13)."""
        if not sympy.isprime(p) or p > 13:
            raise GroupError(f"Matrix groups need a prime p <= 13, got {p}")
        mats = [np.array(g, dtype=np.int64) % p for g in generators]
        if not mats:
            raise GroupError("At least one generator is required")
        k = mats[0].shape[0]
        for m in mats:
            if m.shape != (k, k):
                raise GroupError("Generators must be square matrices of one size")
            if sympy.Matrix(m.tolist()).det() % p == 0:
                raise GroupError(f"Singular generator mod {p}: {m.tolist()}")

        def compose(a, b):
            prod = (np.array(a).reshape(k, k) @ np.array(b).reshape(k, k)) % p
            return tuple(int(v) for v in prod.ravel())

        flat_gens = [tuple(int(v) for v in m.ravel()) for m in mats]
        identity = tuple(int(v) for v in np.eye(k, dtype=np.int64).ravel())
        elements, table = _enumerate_closure(identity, flat_gens, compose)
        labels = [str([list(e[r * k:(r + 1) * k]) for r in range(k)]) for e in elements]
        return cls.from_table(table, labels, "matrix-generators-over-prime-field")


def _enumerate_closure(identity, gens, compose):
    """
    Breadth-first closure of the generators under right multiplication.
    Column j of the table is filled from its BFS parent: x*e_j = (x*e_parent)*gen.
    """
    elements = [identity]
    index = {identity: 0}
    parents = [None]
    right = [[] for _ in gens]
    i = 0
    while i < len(elements):
        current = elements[i]
        for s, gen in enumerate(gens):
            image = compose(current, gen)
            j = index.get(image)
            if j is None:
                j = len(elements)
                if j >= MAX_ENUMERATED_ORDER:
                    raise GroupError(f"Group exceeds {MAX_ENUMERATED_ORDER} elements")
                index[image] = j
                elements.append(image)
                parents.append((i, s))
            right[s].append(j)
        i += 1
    n = len(elements)
    right = [np.array(r, dtype=np.int32) for r in right]
    table = np.empty((n, n), dtype=np.int32)
    table[:, 0] = np.arange(n)
    for j in range(1, n):
        parent, s = parents[j]
        table[:, j] = right[s][table[:, parent]]
    return elements, table


def _cycle_label(perm):
    seen, cycles = set(), []
    for start in range(len(perm)):
        if start in seen or perm[start] == start:
            continue
        cycle, i = [], start
        while i not in seen:
            seen.add(i)
            cycle.append(str(i))
            i = perm[i]
        cycles.append("(" + " ".join(cycle) + ")")
    return "".join(cycles) or "()"


# --- 2. Subsets ---

@dataclass(frozen=True, eq=False)
class GSubset:
    """A subset of a group's carrier as a read-only membership bitset."""

    group: FiniteGroup
    bits: np.ndarray

    def __post_init__(self):
        bits = np.array(self.bits, dtype=bool)
        if bits.shape != (self.group.order,):
            raise GroupError(f"Bitset length {bits.shape} does not match group order {self.group.order}")
        object.__setattr__(self, "bits", _read_only(bits))

    @classmethod
    def of(cls, group, elements):
        bits = np.zeros(group.order, dtype=bool)
        idx = [group.index_of(e) for e in elements]
        if idx:
            bits[idx] = True
        return cls(group, bits)

    def elements(self):
        return np.flatnonzero(self.bits)

    def to_list(self):
        return [int(v) for v in self.elements()]

    def __len__(self):
        return int(self.bits.sum())

    def __iter__(self):
        return iter(self.to_list())

    def __contains__(self, g):
        return bool(self.bits[g])

    def __eq__(self, other):
        if not isinstance(other, GSubset):
            return NotImplemented
        return self.group is other.group and bool(np.array_equal(self.bits, other.bits))

    def __hash__(self):
        return hash((id(self.group), self.bits.tobytes()))

    def __or__(self, other):
        _same_group(self, other)
        return GSubset(self.group, self.bits | other.bits)

    def __and__(self, other):
        _same_group(self, other)
        return GSubset(self.group, self.bits & other.bits)

    def __sub__(self, other):
        _same_group(self, other)
        return GSubset(self.group, self.bits & ~other.bits)

    def __le__(self, other):
        _same_group(self, other)
        return bool(not (self.bits & ~other.bits).any())

    def complement(self):
        return GSubset(self.group, ~self.bits)

    def is_empty(self):
        return not self.bits.any()

    def __repr__(self):
        return f"GSubset({self.to_list()})"


def _same_group(*subsets):
    group = subsets[0].group
    for s in subsets[1:]:
        if s.group is not group:
            raise GroupError("Subsets belong to different groups")


def _from_indices(group, indices):
    bits = np.zeros(group.order, dtype=bool)
    bits[np.asarray(indices, dtype=np.int64).ravel()] = True
    return GSubset(group, bits)


def product(A, B):
    """Returns {ab : a in A, b in B}."""
    _same_group(A, B)
    group = A.group
    left, right = A.elements(), B.elements()
    if not left.size or not right.size:
        return group.empty()
    return _from_indices(group, group.table[np.ix_(left, right)])


def inverse_set(A):
    return _from_indices(A.group, A.group.inverses[A.elements()])


def translate_left(g, A):
    return _from_indices(A.group, A.group.table[g, A.elements()])


def translate_right(A, g):
    return _from_indices(A.group, A.group.table[A.elements(), g])


def conjugation_closure(A):
    """All conjugates g a g^-1 of members of A."""
    group = A.group
    idx = A.elements()
    if not idx.size:
        return group.empty()
    left = group.table[:, idx]  # [g, a] -> g a
    return _from_indices(group, group.table[left, group.inverses[:, None]])


def is_normal(A):
    return conjugation_closure(A) <= A


def is_symmetric(A):
    return inverse_set(A) == A


def _require_symmetric(X):
    if X.group.identity not in X:
        raise GroupError("X must contain the identity")
    if not is_symmetric(X):
        raise GroupError("X must be symmetric (X^-1 = X)")


def subset_power(A, k):
    """A^k with A^0 = {e}; detects the eventual cycle of powers instead of multiplying k times."""
    if k < 0:
        raise GroupError("Subset powers need k >= 0")
    current = A.group.singleton(A.group.identity)
    seen, history = {}, []
    for step in range(k + 1):
        key = current.bits.tobytes()
        if key in seen:
            start = seen[key]
            return history[start + (k - start) % (step - start)]
        seen[key] = step
        history.append(current)
        if step == k:
            return current
        current = product(current, A)
    return current


def power_filtration(X, n_max):
    """
    Returns [X, X^2, ..., X^n_max] for a symmetric X containing e.
    The chain is monotone and stabilizes at the subgroup generated by X.
    """
    _require_symmetric(X)
    if n_max < 1:
        raise GroupError("n_max must be at least 1")
    powers = [X]
    while len(powers) < n_max:
        nxt = product(powers[-1], X)
        if nxt == powers[-1]:
            powers.extend([nxt] * (n_max - len(powers)))
            break
        powers.append(nxt)
    return powers


def generated_subgroup(X):
    """
    Re-indexes <X> as a FiniteGroup of its own.
    Returns (subgroup, embedding) where embedding[i] is the ambient index of element i.
    """
    group = X.group
    seed = X | inverse_set(X) | group.singleton(group.identity)
    span = seed
    while True:
        nxt = product(span, seed)
        if nxt == span:
            break
        span = nxt
    embedding = span.elements()
    position = np.full(group.order, -1, dtype=np.int64)
    position[embedding] = np.arange(embedding.size)
    sub_table = position[group.table[np.ix_(embedding, embedding)]]
    labels = [group.labels[i] for i in embedding]
    subgroup = FiniteGroup.from_table(sub_table, labels, group.provenance)
    return subgroup, _read_only(embedding.astype(np.int64))


def pull_back(A, subgroup, embedding):
    """Restricts an ambient subset to a subgroup produced by generated_subgroup."""
    return GSubset(subgroup, A.bits[embedding])


# --- 3. Covers and Approximate-Subgroup Diagnostics ---

@dataclass(frozen=True)
class ApproxWitness:
    K: int
    F: GSubset
    exact: bool = True


def _greedy_cover(target, tile, prefer=None):
    group = target.group
    tile_idx = tile.elements()
    candidates = product(target, inverse_set(tile)).to_list()
    if prefer is not None and prefer in candidates:
        candidates.remove(prefer)
        candidates.insert(0, prefer)
    candidates = np.array(candidates, dtype=np.int64)
    rows = group.table[np.ix_(candidates, tile_idx)]
    remaining = target.bits.copy()
    chosen = []
    while remaining.any():
        gains = remaining[rows].sum(axis=1)
        best = int(np.argmax(gains))
        chosen.append(int(candidates[best]))
        remaining[rows[best]] = False
    return chosen


def _exact_cover(target, tile, size, budget):
    """A cover of target by `size` left translates of tile, None if there is none."""
    group = target.group
    tile_idx = tile.elements()
    tile_inv = inverse_set(tile).elements()
    nodes = 0

    def search(remaining, chosen):
        nonlocal nodes
        left = int(remaining.sum())
        if left == 0:
            return list(chosen)
        if left > (size - len(chosen)) * tile_idx.size:
            return None
        nodes += 1
        if nodes > budget:
            raise _SearchBudgetExhausted()
        t = int(np.argmax(remaining))
        # translates containing t are exactly t * tile^-1
        for g in np.unique(group.table[t, tile_inv]):
            nxt = remaining.copy()
            nxt[group.table[g, tile_idx]] = False
            found = search(nxt, chosen + [int(g)])
            if found is not None:
                return found
        return None

    return search(target.bits.copy(), [])


def _minimize_cover(target, tile, greedy, max_exact, prefer=None):
    """Tries every size below the greedy count (up to max_exact); returns (translates, exact)."""
    best = greedy
    for size in range(1, min(len(greedy) - 1, max_exact) + 1):
        try:
            found = _exact_cover(target, tile, size, config.COVER_SEARCH_NODES)
        except _SearchBudgetExhausted:
            logger.warning(f"Exact cover search of size {size} ran out of budget; keeping greedy bound {len(best)}.")
            return best, False
        if found is not None:
            return found, True
    return best, len(greedy) - 1 <= max_exact


def doubling_witness(X):
    """Smallest F (greedy, refined exhaustively for |F| <= 4) with X*X contained in F*X."""
    _require_symmetric(X)
    target = product(X, X)
    greedy = _greedy_cover(target, X, prefer=X.group.identity)
    translates, exact = _minimize_cover(target, X, greedy, 4)
    F = X.group.subset(translates)
    if not target <= product(F, X):
        raise GroupError("Doubling witness failed re-verification")
    return ApproxWitness(len(F), F, exact)


def covering_number(target, tile):
    """
    Returns (count, translates) with target contained in the union of g*tile.
    Greedy count; certified minimal by exhaustive search when the greedy count is at most 3.
    """
    _same_group(target, tile)
    if tile.is_empty():
        raise GroupError("Cannot cover with an empty tile")
    if target.is_empty():
        return 0, []
    greedy = _greedy_cover(target, tile)
    translates, _ = _minimize_cover(target, tile, greedy, 2) if len(greedy) <= 3 else (greedy, False)
    covered = product(target.group.subset(translates), tile)
    if not target <= covered:
        raise GroupError("Covering failed re-verification")
    return len(translates), translates


def is_approximate_subgroup(X, K):
    if X.group.identity not in X or not is_symmetric(X):
        return False
    return doubling_witness(X).K <= K


def commensurable(A, B):
    """Both covering counts; finite nonempty sets are always commensurable."""
    if A.is_empty() or B.is_empty():
        return False, (None, None)
    a_by_b, _ = covering_number(A, B)
    b_by_a, _ = covering_number(B, A)
    return True, (a_by_b, b_by_a)


# --- 4. Central Extensions ---

def _cocycle_array(base, m, cocycle):
    n = base.order
    if callable(cocycle):
        values = np.array([[cocycle(a, b) for b in range(n)] for a in range(n)], dtype=np.int64)
    else:
        values = np.array(cocycle, dtype=np.int64)
    if values.shape != (n, n):
        raise GroupError(f"Cocycle must be a {n}x{n} table")
    return values % m


def find_cocycle_violation(base, m, values):
    """Offending (a, b, x) for c(a,b)+c(ab,x) = c(a,bx)+c(b,x) mod m, or None."""
    T = base.table
    limit = config.EXHAUSTIVE_ASSOCIATIVITY_LIMIT
    rows = range(base.order) if base.order <= limit else np.random.default_rng(0).integers(0, base.order, limit)
    for a in rows:
        lhs = values[a][:, None] + values[T[a]]  # [b, x]: c(a,b) + c(ab,x)
        rhs = values[a][T] + values  # [b, x]: c(a,bx) + c(b,x)
        bad = np.argwhere((lhs - rhs) % m != 0)
        if bad.size:
            return (int(a), int(bad[0][0]), int(bad[0][1]))
    return None


def central_extension(base, m, cocycle):
    """
    The group on base x Z/m with (a1,b1)(a2,b2) = (a1 a2, b1 + b2 + c(a1,a2)).
    Element (a, b) has index a*m + b.
    """
    if m < 1:
        raise GroupError("Extension modulus must be positive")
    values = _cocycle_array(base, m, cocycle)
    bad = find_cocycle_violation(base, m, values)
    if bad is not None:
        raise GroupError(f"2-cocycle identity fails at {bad}")
    n = base.order
    a1 = np.arange(n)[:, None, None, None]
    b1 = np.arange(m)[None, :, None, None]
    a2 = np.arange(n)[None, None, :, None]
    b2 = np.arange(m)[None, None, None, :]
    table = base.table[a1, a2] * m + (b1 + b2 + values[a1, a2]) % m
    labels = [f"({base.label(a)},{b})" for a in range(n) for b in range(m)]
    return FiniteGroup.from_table(table.reshape(n * m, n * m), labels, "central-extension")
