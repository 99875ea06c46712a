# glcm_pipeline.py
import logging
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import pandas as pd

import config
from certificate import Certificate, CheckResult, CheckSpec
from ellis_engine import EllisError, FiniteSemigroup, collapse_checks, decompose, tau_closure
from g_algebra import AlgebraError, collapse_report, d_closure, generate_algebra, stone_semigroup
from group_core import (
    FiniteGroup,
    GSubset,
    GroupError,
    central_extension,
    conjugation_closure,
    covering_number,
    generated_subgroup,
    inverse_set,
    power_filtration,
    product,
    pull_back,
    subset_power,
    translate_right,
)

logger = logging.getLogger(__name__)

# --- Configuration ---
EQUIVALENCE_MODES = ("atoms", "coarse-atoms")
REQUIRED_HORIZON = 34
MAIN_BASE = 7
IMAGE_POWER_BOUND = 8
U_ENUMERATION_LIMIT = 12

LEDGER = {
    "base": MAIN_BASE,
    "error_level": 3,
    "fhat_error_level": 5,
    "conjugation_levels": [7, 8],
    "C_level": 10,
    "C_preimage": 30,
    "U_preimage": 14,
    "UC_preimage": 34,
    "separation_l": 2,
    "preimage_shift": 4,
    "H_level": 3,
    "neighbourhood_level": 4,
    "alt_base3": {"C_preimage": 22, "UC_preimage": 26},
    "alt_base1": {"C_preimage": 18},
}

CHECK_SCHEMA = {
    "thm-main-error": CheckSpec(
        "error_r(f) ∪ error_l(f) ⊆ π[F̃₃ ∩ uM]",
        "Every right and left error value of f lies in the image of the third tower level.",
        "Section 3.2, proof of the main theorem, part (1)",
        r"We will show more, namely that $\error_r(f) \subseteq (\tilde{F}_{3} \cap u\M)/H(u\M)$",
    ),
    "thm-main-error-c": CheckSpec(
        "f(e) = id, error_r(f) ∪ error_l(f) ⊆ C",
        "f is a quasi-homomorphism with error set C in both handednesses.",
        "Section 3.2, main theorem",
        r"is a generalized definable locally compact model of $X$",
    ),
    "thm-main-c-normal": CheckSpec(
        "C = C⁻¹, C normal, C ⊆ π[F̃₁₀ ∩ uM]",
        "The error set is symmetric, normal and inside the image of the tenth tower level.",
        "Section 3.2, lemma on the key properties of the F̃_n, item (4)",
        r"$C \subseteq (\tilde{F}_{10} \cap u\M)/H(u\M)$",
    ),
    "thm-main-c30": CheckSpec(
        "f⁻¹[C] ⊆ X³⁰",
        "The preimage of the error set lies in the 30th power of X.",
        "Section 3.2, main theorem",
        r"Moreover, $f^{-1}[C] \subseteq X^{30}$",
    ),
    "thm-main-u14": CheckSpec(
        "f⁻¹[U] ⊆ X¹⁴, f⁻¹[UC] ⊆ X³⁴ for U = {id}",
        "A neighbourhood of the identity pulls back into X¹⁴, and its C-thickening into X³⁴.",
        "Section 3.2, main theorem",
        r"$f^{-1}[U] \subseteq X^{14}$ and $f^{-1}[UC] \subseteq X^{34}$",
    ),
    "thm-main-separation": CheckSpec(
        "C²Y ∩ C²Z = ∅ ⟹ ∃ block-union D: f⁻¹[Y] ⊆ D, D ∩ f⁻¹[Z] = ∅",
        "Preimages of C²-separated sets are separated by a set of the algebra (l = 2).",
        "Section 3.2, main theorem",
        r"which is witnessed by $l=2$",
    ),
    "thm-main-two-sets": CheckSpec(
        "C²Y ∩ C²Z = ∅ ⟹ disjoint block-unions D₁ ⊇ f⁻¹[Y], D₂ ⊇ f⁻¹[Z]",
        "The separating sets can be chosen as two disjoint sets of the algebra.",
        "Remark after Definition 2.1, separation by two sets",
        r"there are didjoint definable subsets $D_1$ and $D_2$ of some $X^n$",
    ),
    "thm-main-generic": CheckSpec(
        "X ⊆ ⋃ gᵢ f⁻¹[UC]",
        "Finitely many left translates of f⁻¹[UC] cover X.",
        "Fact 2.4(1)",
        r"finitely many left translates of $f^{-1}[UC]$ cover $X$",
    ),
    "thm-main-image-powers": CheckSpec(
        "f[Xⁱ] ⊆ f[X]ⁱ Cⁱ⁻¹",
        "Images of powers of X are controlled by powers of f[X] and C.",
        "Remark after Definition 2.1, images of powers",
        r"$\cl(f[X^i]) \subseteq \cl(f[X])^iC^{i-1}$",
    ),
    "tower-u-level": CheckSpec(
        "u ∈ F̃₁, u ∈ S_{X²}",
        "The idempotent lies in the first tower level and the X² level.",
        "Section 3.2, lemma on u and the F̃_n, item (1)",
        r"$u \in \tilde{F}_1 \subseteq S_{X^2,M}(N)$",
    ),
    "tower-preimage": CheckSpec(
        "{g : ugu ∈ S_{Xⁿ}} ⊆ X^{n+4}",
        "Elements whose u-conjugate lies in the n-th level lie in X^{n+4}.",
        "Section 3.2, lemma on u and the F̃_n, item (4)",
        r"$F^{-1}[S_{X^n,M}(N) \cap u\M] \subseteq X^{n+4}$",
    ),
    "tower-conjugation": CheckSpec(
        "(F̃₇ ∩ uM)^{uM} ⊆ F̃₈ ∩ uM",
        "Conjugating the seventh tower level inside uM lands in the eighth.",
        "Section 3.2, lemma on the key properties of the F̃_n, item (1)",
        r"$(\tilde{F}_7 \cap u\M)^{u\M} \subseteq \tilde{F}_8 \cap u\M$",
    ),
    "tower-h-bound": CheckSpec(
        "H(uM) ⊆ F̃₃",
        "The kernel of the Hausdorff quotient lies in the third tower level.",
        "Lemma 3.24",
        r"$H(u\M) \subseteq \tilde{F}_3 \cap u\M$",
    ),
    "tower-fhat-error": CheckSpec(
        "error_r(f̂) ∪ error_l(f̂) ⊆ π[F̃₅ ∩ uM]",
        "The extension of f to the semigroup has errors in the image of the fifth tower level.",
        "Section 3.3, proposition on the error of f̂",
        r"is a quasi-homomorphism with $\error_r(\hat{f}) \cup \error_l(\hat{f}) \subseteq (\widetilde{F}_5 \cap u\mathcal{M})/H(u\mathcal{M})$",
    ),
    "tower-f-bound": CheckSpec(
        "F_n ⊆ X^{2n}, F₁ = {xy⁻¹ : x, y ∈ X, x ≡ y}",
        "Tower sets stay inside even powers of X and F₁ is the set of within-class differences.",
        "Lemma 3.18",
        r"In particular, $F_n \subseteq \bar X^{2n}$",
    ),
    "tower-inverse-step": CheckSpec(
        "p ∈ F̃_n ∩ uM ⟹ p⁻¹ ∈ F̃_{n+1}",
        "Inverting in uM raises the tower level by at most one.",
        "Section 3.2, lemma on u and the F̃_n, item (2)",
        r"If $p \in \tilde{F}_n \cap u\M$, then $p^{-1} \in \tilde{F}_{n+1} \cap u\M$",
    ),
    "tower-neighbourhood": CheckSpec(
        "{p ∈ uM : u ∈ cl_τ({p})} ⊆ S_{X⁴}",
        "The minimal τ-neighbourhood of u lies in the X⁴ level.",
        "Section 3.2, lemma on the existence of V",
        r"such that $V\subseteq S_{X^4,M}(N)$",
    ),
    "collapse": CheckSpec(
        "atoms act uniformly, u∘Q = uQ, cl_τ discrete, H = {u}",
        "A finite d-closed algebra yields a group semigroup with trivial τ-topology.",
        "Lemma 3.14, read on a finite algebra",
        r"$\cl_\tau(Q):=(u\M)\cap (u\circ Q)=u(u\circ Q)$",
    ),
    "alt-base3": CheckSpec(
        "C from F̃₃: f⁻¹[C] ⊆ X²², f⁻¹[UC] ⊆ X²⁶",
        "Building C from the third tower level gives the sharper X²² and X²⁶ bounds.",
        "Section 3.3, concrete numbers",
        r"yield $f^{-1}[C] \subseteq X^{22}$",
    ),
    "alt-base1": CheckSpec(
        "C from F̃₁: f⁻¹[C] ⊆ X¹⁸",
        "Building C from the first tower level gives the X¹⁸ bound.",
        "Section 3.3, concrete numbers",
        r"$f^{-1}[C] \subseteq X^{18}$",
    ),
    "alt-level-products": CheckSpec(
        "F̃_n * F̃_m vs F̃_{n+m}",
        "Evidence only: both inclusions are scanned and counterexamples reported.",
        "Section 3.3, question on tower products",
        r"Does $\widetilde{F}_n * \widetilde{F}_m = \widetilde{F}_{n+m}$?",
    ),
}


class HorizonTooSmall(ValueError):
    def __init__(self, needed):
        super().__init__(f"Filtration horizon too small: n_max must be at least {needed}")
        self.needed = needed


# --- 1. Instances ---

@dataclass(frozen=True, eq=False)
class PipelineInstance:
    """Everything the theorem's construction needs, computed inside the group generated by X."""

    group: FiniteGroup
    X: GSubset
    n_max: int
    powers: tuple
    algebra: object
    equivalence: object
    stone: object
    semigroup: FiniteSemigroup
    dec: object
    equivalence_mode: str = "atoms"
    embedding: np.ndarray = None
    label: str = ""

    @property
    def u(self):
        return self.dec.u

    @property
    def quotient(self):
        return self.dec.quotient

    def power(self, n):
        if n > self.n_max:
            raise HorizonTooSmall(n)
        if n == 0:
            return self.group.singleton(self.group.identity)
        return self.powers[n - 1]

    @cached_property
    def in_uM(self):
        mask = np.zeros(self.semigroup.order, dtype=bool)
        mask[self.dec.uM] = True
        return mask

    @cached_property
    def atom_level(self):
        """Least n with the atom inside Xⁿ; n_max + 1 when there is none."""
        levels = self.stone.levels
        return np.where(levels.any(axis=0), levels.argmax(axis=0), self.n_max + 1)


def build_instance(group, X, n_max=config.DEFAULT_N_MAX, seeds=(), equivalence_mode="atoms", label=""):
    """
    Restricts to <X>, seeds the algebra with X, ..., X^n_max plus any extra seeds,
    closes it under d and decomposes the Stone semigroup.
    """
    if n_max < REQUIRED_HORIZON:
        raise HorizonTooSmall(REQUIRED_HORIZON)
    if equivalence_mode not in EQUIVALENCE_MODES:
        raise ValueError(f"Unknown equivalence mode {equivalence_mode!r}; expected one of {EQUIVALENCE_MODES}")
    sub, embedding = generated_subgroup(X)
    X_sub = pull_back(X, sub, embedding)
    powers = power_filtration(X_sub, n_max)
    power_seeds = list(dict.fromkeys(powers))
    seed_sets = power_seeds + [pull_back(S, sub, embedding) for S in seeds]
    algebra = d_closure(generate_algebra(sub, seed_sets))
    if equivalence_mode == "atoms":
        equivalence = algebra
    else:
        # two-sided translates of the X-powers only; extra seeds are point predicates
        equivalence = generate_algebra(sub, power_seeds, right_translates=True)
    stone = stone_semigroup(algebra, powers)
    semigroup = FiniteSemigroup.from_stone(stone)
    dec = decompose(semigroup)
    logger.info(
        f"Instance {label or '(unnamed)'}: |<X>|={sub.order}, |X|={len(X_sub)}, "
        f"{algebra.atom_count} atoms, quotient order {dec.quotient.order}."
    )
    return PipelineInstance(sub, X_sub, n_max, tuple(powers), algebra, equivalence, stone,
                            semigroup, dec, equivalence_mode, embedding, label)


def f_map(inst):
    """f(g) = π(u · g · u) for every element index g of <X>."""
    S, u = inst.semigroup, inst.u
    values = inst.dec.projection[S.table[S.table[u, S.tags], u]]
    if (values < 0).any():
        raise EllisError("u·g·u left uM")
    return values


def f_hat(inst):
    """f̂(p) = π(u · p · u) for every atom p."""
    S, u = inst.semigroup, inst.u
    return inst.dec.projection[S.table[S.table[u, np.arange(S.order)], u]]


def preimage(inst, f, Y):
    return GSubset(inst.group, Y.bits[f])


# --- 2. F Tower and Error Sets ---

@dataclass(frozen=True, eq=False)
class FTower:
    F: dict  # n -> GSubset
    Ftilde: dict  # n -> bool mask over atoms
    C: GSubset
    base: int = MAIN_BASE


def _first_level(inst):
    group, eq = inst.group, inst.equivalence
    bits = np.zeros(group.order, dtype=bool)
    for idx in eq.members:
        bits[group.table[np.ix_(idx, group.inverses[idx])]] = True
    return GSubset(group, bits)


def level_image(inst, mask):
    """π[mask ∩ uM] as a subset of the quotient group."""
    hits = inst.dec.projection[np.flatnonzero(mask & inst.in_uM)]
    return inst.quotient.subset(np.unique(hits).tolist())


def quotient_closure(inst, Y):
    """cl_τ on uM/H: project the closure of the full preimage."""
    dec = inst.dec
    uM = {int(p) for p in dec.uM}
    pre = {p for p in uM if Y.bits[dec.projection[p]]}
    closed = tau_closure(inst.semigroup, inst.u, pre, uM)
    return inst.quotient.subset(sorted({int(dec.projection[p]) for p in closed}))


def error_set(inst, mask):
    """cl_τ of the quotient-conjugation closure of π[mask ∩ uM], symmetrized."""
    closed = quotient_closure(inst, conjugation_closure(level_image(inst, mask)))
    return closed | inverse_set(closed)


def build_F_tower(inst, base=MAIN_BASE, top=None):
    top = top or max(11, base + 1, inst.n_max // 2)
    F = {1: _first_level(inst)}
    for n in range(2, top + 1):
        F[n] = product(F[n - 1], F[1])
    Ftilde = {n: inst.algebra.atoms_meeting(F[n]) for n in F}
    for mask in Ftilde.values():
        mask.setflags(write=False)
    C = error_set(inst, Ftilde[base])
    logger.info(f"F tower up to n={top}; |F₁|={len(F[1])}, |C|={len(C)} (base {base}).")
    return FTower(F, Ftilde, C, base)


# --- 3. Certificate Checks ---

def _pair_indices(n, seed=0):
    if n * n <= config.EXHAUSTIVE_PAIR_LIMIT:
        xs, ys = np.divmod(np.arange(n * n), n)
        return xs, ys, True
    logger.warning(f"Error-set scan sampled on {config.SAMPLED_PAIRS} pairs (order {n}).")
    rng = np.random.default_rng(seed)
    return rng.integers(0, n, config.SAMPLED_PAIRS), rng.integers(0, n, config.SAMPLED_PAIRS), False


def error_values(Q, values, table, seed=0):
    """Right and left error values f(y)⁻¹f(x)⁻¹f(xy) and f(xy)f(y)⁻¹f(x)⁻¹ over (sampled) pairs."""
    xs, ys, exhaustive = _pair_indices(table.shape[0], seed)
    fx, fy, fxy = values[xs], values[ys], values[table[xs, ys]]
    qt, qi = Q.table, Q.inverses
    right = qt[qt[qi[fy], qi[fx]], fxy]
    left = qt[qt[fxy, qi[fy]], qi[fx]]
    return xs, ys, right, left, exhaustive


def _errors_inside(Q, values, table, allowed, seed=0):
    xs, ys, right, left, exhaustive = error_values(Q, values, table, seed)
    witnesses = {"exhaustive": exhaustive}
    for side, errs in (("right", right), ("left", left)):
        witnesses[f"{side}_errors"] = np.unique(errs)
        bad = np.flatnonzero(~allowed.bits[errs])
        if bad.size:
            i = bad[0]
            witnesses["offending"] = {"side": side, "x": xs[i], "y": ys[i], "value": errs[i]}
            return False, witnesses
    return True, witnesses


def _check_error(inst, tower, f):
    allowed = level_image(inst, tower.Ftilde[3])
    ok, witnesses = _errors_inside(inst.quotient, f, inst.group.table, allowed)
    witnesses["allowed"] = allowed.to_list()
    return CheckResult("thm-main-error", ok, {"level": 3}, witnesses)


def _check_error_c(inst, tower, f):
    identity_ok = f[inst.group.identity] == inst.quotient.identity
    ok, witnesses = _errors_inside(inst.quotient, f, inst.group.table, tower.C)
    witnesses["f_e"] = f[inst.group.identity]
    return CheckResult("thm-main-error-c", bool(identity_ok) and ok, {}, witnesses)


def _check_c_normal(inst, tower, f):
    C = tower.C
    bound = level_image(inst, tower.Ftilde[10])
    symmetric = inverse_set(C) == C
    normal = conjugation_closure(C) <= C
    inside = C <= bound
    witnesses = {"C": C.to_list(), "bound": bound.to_list(), "symmetric": symmetric, "normal": normal}
    if not inside:
        witnesses["outside"] = (C - bound).to_list()
    return CheckResult("thm-main-c-normal", symmetric and normal and inside, {"level": 10}, witnesses)


def _inside_power(inst, A, n):
    target = inst.power(n)
    return A <= target, (A - target).to_list()


def _check_c30(inst, tower, f):
    pre = preimage(inst, f, tower.C)
    ok, outside = _inside_power(inst, pre, 30)
    witnesses = {"preimage_C": pre.to_list()}
    if outside:
        witnesses["outside"] = outside
    return CheckResult("thm-main-c30", ok, {"power": 30}, witnesses)


def _u_bounds(inst, f, U, C):
    pre_U = preimage(inst, f, U)
    pre_UC = preimage(inst, f, product(U, C))
    return pre_U, pre_UC, pre_U <= inst.power(14) and pre_UC <= inst.power(34)


def _check_u14(inst, tower, f):
    Q = inst.quotient
    U = Q.singleton(Q.identity)
    pre_U, pre_UC, ok = _u_bounds(inst, f, U, tower.C)
    witnesses = {"U": U.to_list(), "preimage_U": pre_U.to_list(), "preimage_UC": pre_UC.to_list()}
    if not ok:
        witnesses["outside_U"] = (pre_U - inst.power(14)).to_list()
        witnesses["outside_UC"] = (pre_UC - inst.power(34)).to_list()
    if Q.order <= U_ENUMERATION_LIMIT:
        others = [q for q in range(Q.order) if q != Q.identity]
        working = 0
        for mask in range(1 << len(others)):
            chosen = [Q.identity] + [q for i, q in enumerate(others) if mask >> i & 1]
            working += _u_bounds(inst, f, Q.subset(chosen), tower.C)[2]
        witnesses["working_neighbourhoods"] = working
    return CheckResult("thm-main-u14", ok, {"U": 14, "UC": 34}, witnesses)


def disjoint_translates(T):
    """disjoint[y, z] iff T y and T z do not meet."""
    shifted = np.array([translate_right(T, y).bits for y in range(T.group.order)], dtype=np.int64)
    return (shifted @ shifted.T) == 0


def separation_scan(C, l, values, atom_of):
    """
    Returns (disjoint, fibres, conflicts): disjoint[y, z] when C^l y and C^l z are disjoint,
    fibres[y] the atoms meeting the preimage of y, conflicts the pairs no block-union separates.
    Singleton pairs suffice: a pair of sets is separable iff all its point pairs are.
    """
    disjoint = disjoint_translates(subset_power(C, l))
    fibres = np.zeros((C.group.order, int(atom_of.max()) + 1), dtype=bool)
    fibres[values, atom_of] = True
    fib = fibres.astype(np.int64)
    shared = (fib @ fib.T) > 0
    return disjoint, fibres, np.argwhere(disjoint & shared)


def _check_separation(inst, tower, f):
    disjoint, fibres, conflicts = separation_scan(tower.C, 2, f, inst.algebra.atom_of)
    witnesses = {"separated_pairs": int(disjoint.sum()) // 2}
    smallest = None
    for l in range(1, config.WITNESS_BOUND + 1):
        if not separation_scan(tower.C, l, f, inst.algebra.atom_of)[2].size:
            smallest = l
            break
    witnesses["smallest_l"] = smallest
    if conflicts.size:
        y, z = conflicts[0]
        witnesses["offending"] = {"y": y, "z": z, "atom": np.flatnonzero(fibres[y] & fibres[z])[0]}
    return CheckResult("thm-main-separation", not conflicts.size, {"l": 2}, witnesses)


def _check_two_sets(inst, tower, f):
    disjoint, fibres, conflicts = separation_scan(tower.C, 2, f, inst.algebra.atom_of)
    level = np.where(fibres, inst.atom_level[None, :], 0).max(axis=1)
    pair_levels = np.maximum(level[:, None], level[None, :])[disjoint]
    needed = int(pair_levels.max()) if pair_levels.size else 0
    witnesses = {"power_level": needed if needed <= inst.n_max else None}
    if conflicts.size:
        witnesses["offending"] = {"y": conflicts[0][0], "z": conflicts[0][1]}
    return CheckResult("thm-main-two-sets", not conflicts.size, {"l": 2}, witnesses)


def _check_generic(inst, tower, f):
    Q = inst.quotient
    tile = preimage(inst, f, product(Q.singleton(Q.identity), tower.C))
    G = inst.group
    count, translates = covering_number(inst.X, tile)
    count_G, translates_G = covering_number(G.full(), tile)
    missed_X = inst.X - product(G.subset(translates), tile)
    missed_G = G.full() - product(G.subset(translates_G), tile)
    witnesses = {
        "tile": tile.to_list(),
        "translates_X": translates,
        "translates_G": translates_G,
    }
    ok = missed_X.is_empty() and missed_G.is_empty()
    if not ok:
        witnesses["uncovered_X"] = missed_X.to_list()
        witnesses["uncovered_G"] = missed_G.to_list()
    return CheckResult("thm-main-generic", ok, {"cover_X": count, "cover_G": count_G}, witnesses)


def _check_image_powers(inst, tower, f):
    Q = inst.quotient
    f_X = Q.subset(np.unique(f[inst.X.elements()]).tolist())
    for i in range(1, min(IMAGE_POWER_BOUND, inst.n_max) + 1):
        image = Q.subset(np.unique(f[inst.power(i).elements()]).tolist())
        bound = product(subset_power(f_X, i), subset_power(tower.C, i - 1))
        if not image <= bound:
            return CheckResult("thm-main-image-powers", False, {"i": i},
                               {"offending": (image - bound).to_list()})
    return CheckResult("thm-main-image-powers", True, {"i_max": min(IMAGE_POWER_BOUND, inst.n_max)}, {})


def _check_u_level(inst, tower, f):
    u = inst.u
    in_first = bool(tower.Ftilde[1][u])
    in_square = bool(inst.stone.levels[2, u])
    return CheckResult("tower-u-level", in_first and in_square, {"level": 2},
                       {"u": u, "in_F1": in_first, "in_X2": in_square})


def _check_preimage(inst, tower, f):
    S, u = inst.semigroup, inst.u
    image = S.table[S.table[u, S.tags], u]
    for n in range(1, inst.n_max - 3):
        members = GSubset(inst.group, inst.stone.levels[n][image])
        ok, outside = _inside_power(inst, members, n + 4)
        if not ok:
            return CheckResult("tower-preimage", False, {"n": n, "power": n + 4}, {"outside": outside})
    return CheckResult("tower-preimage", True, {"shift": 4}, {"n_max": inst.n_max - 4})


def _uM_local(inst, mask):
    comp = inst.dec.chosen
    return comp.group.subset([comp.local(p) for p in comp.elements if mask[p]])


def _check_conjugation(inst, tower, f):
    comp = inst.dec.chosen
    conj = conjugation_closure(_uM_local(inst, tower.Ftilde[7]))
    image = comp.elements[conj.elements()]
    bad = image[~tower.Ftilde[8][image]]
    witnesses = {"offending": bad.tolist()} if bad.size else {}
    return CheckResult("tower-conjugation", not bad.size, {"from": 7, "to": 8}, witnesses)


def _check_h_bound(inst, tower, f):
    H = sorted(inst.dec.H)
    bad = [p for p in H if not tower.Ftilde[3][p]]
    return CheckResult("tower-h-bound", not bad, {"level": 3}, {"H": H, "offending": bad})


def _check_fhat_error(inst, tower, f):
    allowed = level_image(inst, tower.Ftilde[5])
    ok, witnesses = _errors_inside(inst.quotient, f_hat(inst), inst.semigroup.table, allowed)
    return CheckResult("tower-fhat-error", ok, {"level": 5}, witnesses)


def _check_f_bound(inst, tower, f):
    group, eq = inst.group, inst.equivalence
    for n in sorted(tower.F):
        if 2 * n > inst.n_max:
            break
        ok, outside = _inside_power(inst, tower.F[n], 2 * n)
        if not ok:
            return CheckResult("tower-f-bound", False, {"n": n, "power": 2 * n}, {"outside": outside})
    xs = inst.X.elements()
    same = eq.atom_of[xs][:, None] == eq.atom_of[xs][None, :]
    diffs = group.table[xs[:, None], group.inverses[xs][None, :]][same]
    within = group.subset(np.unique(diffs).tolist())
    witnesses = {"F1": tower.F[1].to_list()}
    if within != tower.F[1]:
        witnesses["within_class_differences"] = within.to_list()
    return CheckResult("tower-f-bound", within == tower.F[1], {"factor": 2}, witnesses)


def _check_inverse_step(inst, tower, f):
    comp = inst.dec.chosen
    for n in range(1, 11):
        for p in comp.elements[tower.Ftilde[n][comp.elements]]:
            inverse = comp.elements[comp.group.inv(comp.local(p))]
            if not tower.Ftilde[n + 1][inverse]:
                return CheckResult("tower-inverse-step", False, {"n": n},
                                   {"p": p, "inverse": inverse})
    return CheckResult("tower-inverse-step", True, {"n_max": 10}, {})


def _check_neighbourhood(inst, tower, f):
    S, u = inst.semigroup, inst.u
    uM = {int(p) for p in inst.dec.uM}
    W = sorted(p for p in uM if u in tau_closure(S, u, {p}, uM))
    bad = [p for p in W if not inst.stone.levels[4, p]]
    return CheckResult("tower-neighbourhood", not bad, {"level": 4}, {"neighbourhood": W, "offending": bad})


def _check_collapse(inst, tower, f):
    verdicts = {**collapse_report(inst.stone), **collapse_checks(inst.dec)}
    if not all(verdicts.values()):
        logger.warning(f"Collapse contradicted on {inst.label or 'instance'}: {verdicts}")
    return CheckResult("collapse", all(verdicts.values()), {}, verdicts)


_CHECKS = {
    "thm-main-error": _check_error,
    "thm-main-error-c": _check_error_c,
    "thm-main-c-normal": _check_c_normal,
    "thm-main-c30": _check_c30,
    "thm-main-u14": _check_u14,
    "thm-main-separation": _check_separation,
    "thm-main-two-sets": _check_two_sets,
    "thm-main-generic": _check_generic,
    "thm-main-image-powers": _check_image_powers,
    "tower-u-level": _check_u_level,
    "tower-preimage": _check_preimage,
    "tower-conjugation": _check_conjugation,
    "tower-h-bound": _check_h_bound,
    "tower-fhat-error": _check_fhat_error,
    "tower-f-bound": _check_f_bound,
    "tower-inverse-step": _check_inverse_step,
    "tower-neighbourhood": _check_neighbourhood,
    "collapse": _check_collapse,
}
ALT_CHECKS = ("alt-base3", "alt-base1", "alt-level-products")


def level_product_evidence(inst, tower, top=10):
    """Both inclusions between F̃_n * F̃_m and F̃_{n+m}, n + m <= top."""
    op = inst.semigroup.table
    rows = []
    for n in range(1, top):
        for m in range(1, top - n + 1):
            made = np.zeros(op.shape[0], dtype=bool)
            made[op[np.ix_(np.flatnonzero(tower.Ftilde[n]), np.flatnonzero(tower.Ftilde[m]))]] = True
            target = tower.Ftilde[n + m]
            forward = np.flatnonzero(made & ~target)
            backward = np.flatnonzero(target & ~made)
            rows.append({
                "n": n,
                "m": m,
                "forward_holds": not forward.size,
                "backward_holds": not backward.size,
                "forward_counterexample": int(forward[0]) if forward.size else None,
                "backward_counterexample": int(backward[0]) if backward.size else None,
            })
    return pd.DataFrame(rows)


def alt_error_sets(inst, tower=None):
    """Error sets from the third and first tower levels, plus product evidence for the tower."""
    tower = tower or build_F_tower(inst)
    f = f_map(inst)
    checks = []
    for base, check_id, bounds in ((3, "alt-base3", (22, 26)), (1, "alt-base1", (18, None))):
        C = error_set(inst, tower.Ftilde[base])
        pre_C = preimage(inst, f, C)
        ok = pre_C <= inst.power(bounds[0])
        witnesses = {"C": C.to_list(), "preimage_C": pre_C.to_list()}
        exponents = {"base": base, "C": bounds[0]}
        if bounds[1] is not None:
            Q = inst.quotient
            pre_UC = preimage(inst, f, product(Q.singleton(Q.identity), C))
            ok = ok and pre_UC <= inst.power(bounds[1])
            witnesses["preimage_UC"] = pre_UC.to_list()
            exponents["UC"] = bounds[1]
        checks.append(CheckResult(check_id, ok, exponents, witnesses))
    evidence = level_product_evidence(inst, tower)
    summary = {
        "pairs": len(evidence),
        "forward_failures": int((~evidence["forward_holds"]).sum()),
        "backward_failures": int((~evidence["backward_holds"]).sum()),
    }
    checks.append(CheckResult("alt-level-products", True, {"top": 10}, summary, "evidence only"))
    return {"checks": checks, "level_products": evidence}


def _subject(inst):
    return {
        "label": inst.label,
        "group_order": inst.group.order,
        "provenance": inst.group.provenance,
        "X": inst.X.to_list(),
        "n_max": inst.n_max,
        "equivalence_mode": inst.equivalence_mode,
        "atoms": inst.algebra.atom_count,
        "uM_order": len(inst.dec.uM),
        "H_order": len(inst.dec.H),
        "quotient_order": inst.quotient.order,
        "embedding": inst.embedding,
    }


def theorem_certificate(inst, checks=None, seed=0, tower=None):
    """Runs the selected checks (all by default) and assembles the certificate."""
    selected = list(CHECK_SCHEMA) if checks is None else list(checks)
    unknown = [c for c in selected if c not in CHECK_SCHEMA]
    if unknown:
        raise ValueError(f"Unknown check id(s): {', '.join(unknown)}")
    if inst.n_max < REQUIRED_HORIZON:
        raise HorizonTooSmall(REQUIRED_HORIZON)
    tower = tower or build_F_tower(inst)
    f = f_map(inst)
    cert = Certificate(_subject(inst), [_CHECKS[c](inst, tower, f) for c in selected if c in _CHECKS],
                       seed, dict(LEDGER))
    if any(c in ALT_CHECKS for c in selected):
        cert.extend(r for r in alt_error_sets(inst, tower)["checks"] if r.check_id in selected)
    logger.info(f"Certificate for {inst.label or 'instance'}: {len(cert.checks)} checks, failures={cert.failures()}")
    return cert


def verify_certificate_witnesses(document, group, X):
    """Re-checks the X-power containments and cover translates of a certificate from group and X alone."""
    failures = []
    sub, embedding = generated_subgroup(X)
    powers = power_filtration(pull_back(X, sub, embedding), REQUIRED_HORIZON)
    checks = document.get("checks", {})

    def passed(check_id):
        return checks.get(check_id, {}).get("verdict") == "pass"

    claims = (("thm-main-c30", "preimage_C", 30), ("thm-main-u14", "preimage_U", 14),
              ("thm-main-u14", "preimage_UC", 34))
    for check_id, key, power in claims:
        if not passed(check_id):
            continue
        members = sub.subset(checks[check_id]["witnesses"].get(key, []))
        if not members <= powers[power - 1]:
            failures.append(f"{check_id}: {key} not inside X^{power}: {(members - powers[power - 1]).to_list()}")
    if passed("thm-main-generic"):
        w = checks["thm-main-generic"]["witnesses"]
        tile = sub.subset(w["tile"])
        if passed("thm-main-u14") and tile != sub.subset(checks["thm-main-u14"]["witnesses"]["preimage_UC"]):
            failures.append("thm-main-generic: tile differs from the f⁻¹[UC] witness")
        covered = product(sub.subset(w["translates_X"]), tile)
        if not powers[0] <= covered:
            failures.append(f"thm-main-generic: translates miss {(powers[0] - covered).to_list()}")
    return failures


# --- 4. Randomized Instances ---

def _cyclic_subgroup(group, g):
    members, x = [group.identity], g
    while x != group.identity:
        members.append(x)
        x = group.mul(x, g)
    return group.subset(members)


def _random_group(rng):
    kind = rng.choice(["cyclic", "dihedral", "symmetric", "alternating", "sl2-3", "extension"])
    if kind == "cyclic":
        return kind, FiniteGroup.cyclic(rng.randint(2, 64))
    if kind == "dihedral":
        k = rng.randint(3, 24)
        rotation = [(i + 1) % k for i in range(k)]
        reflection = [(-i) % k for i in range(k)]
        return kind, FiniteGroup.from_permutations([rotation, reflection])
    if kind == "symmetric":
        degree = rng.choice([3, 4, 5])
        swap = [1, 0] + list(range(2, degree))
        cycle = [(i + 1) % degree for i in range(degree)]
        return kind, FiniteGroup.from_permutations([swap, cycle])
    if kind == "alternating":
        if rng.random() < 0.5:
            return kind, FiniteGroup.from_permutations([[1, 2, 0, 3], [0, 2, 3, 1]])
        return kind, FiniteGroup.from_permutations([[1, 2, 0, 3, 4], [1, 2, 3, 4, 0]])
    if kind == "sl2-3":
        return kind, FiniteGroup.from_matrices([[[1, 1], [0, 1]], [[1, 0], [1, 1]]], 3)
    k = rng.randint(2, 32)
    def carry(a, b):
        return 1 if a + b >= k else 0

    return kind, central_extension(FiniteGroup.cyclic(k), 2, carry)


def random_instance(seed):
    """A seeded instance with |G| <= 256 and X = H·Y·H for a cyclic H and symmetric Y containing e."""
    rng = random.Random(seed)
    kind, G = _random_group(rng)
    e = G.identity
    H = _cyclic_subgroup(G, rng.randrange(G.order)) if rng.random() < 2 / 3 else G.singleton(e)
    Y = G.subset([e, *rng.sample(range(G.order), min(G.order, rng.randint(1, 3)))])
    Y = Y | inverse_set(Y)
    X = product(product(H, Y), H)
    seeds = ()
    if rng.random() < 0.25:
        seeds = (G.subset(rng.sample(range(G.order), min(G.order, rng.randint(1, 3)))),)
    mode = "coarse-atoms" if rng.random() < 0.2 else "atoms"
    return build_instance(G, X, seeds=seeds, equivalence_mode=mode, label=f"random-{seed}:{kind}")


def _batch_row(seed):
    row = {"seed": seed, "label": "", "group_order": None, "X_size": None, "atoms": None,
           "quotient_order": None, "passed": False, "failures": "", "error": ""}
    try:
        inst = random_instance(seed)
        cert = theorem_certificate(inst, seed=seed)
        row.update(label=inst.label, group_order=inst.group.order, X_size=len(inst.X),
                   atoms=inst.algebra.atom_count, quotient_order=inst.quotient.order,
                   passed=cert.passed, failures=",".join(cert.failures()))
    except (GroupError, AlgebraError, EllisError, HorizonTooSmall) as e:
        logger.error(f"Random instance {seed} could not be built: {e}")
        row["error"] = str(e)
    return row


def run_random_batch(count=100, seed=0, workers=None):
    """Per-instance verdicts for seeds seed..seed+count-1, optionally in worker processes."""
    workers = workers or config.worker_count()
    seeds = range(seed, seed + count)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_batch_row, seeds))
    else:
        rows = [_batch_row(s) for s in seeds]
    frame = pd.DataFrame(rows)
    logger.info(f"Random batch of {count}: {int(frame['passed'].sum())} passed.")
    return frame
