# quasihom_calculus.py
import dataclasses
import itertools
import logging
import random
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
import sympy

import config
from certificate import CheckResult, CheckSpec
from glcm_pipeline import (
    build_F_tower,
    build_instance,
    disjoint_translates,
    error_values,
    f_map,
    separation_scan,
)
from group_core import (
    FiniteGroup,
    GSubset,
    conjugation_closure,
    inverse_set,
    power_filtration,
    product,
    subset_power,
)

logger = logging.getLogger(__name__)

CHECK_SCHEMA = {
    "glcm-definition": CheckSpec(
        "errors ⊆ C; f⁻¹(y) ⊆ X^i; CˡY ∩ CˡZ = ∅ ⟹ separated",
        "The map is a quasi-homomorphism with error set C whose fibres are bounded and separable.",
        "Definition 2.1",
        r"separated by a definable set",
    ),
    "good-quasihom": CheckSpec(
        "h[S] ⊆ Tⁿ; TᵐY ∩ TᵐZ = ∅ ⟹ S h⁻¹[Y] ∩ S h⁻¹[Z] = ∅",
        "The quasi-homomorphism is good for the pair (H, S).",
        "Definition 4.1",
        r"$h[S] \subseteq T^n$",
    ),
    "derived-exponents": CheckSpec(
        "n_m = m·n + (m−1)·e, k_n = n_{n−1} + e, m_n = k_n + m",
        "Powers of S map into the derived powers of T and thickened fibres separate at m_n.",
        "Remark 4.2, proof of (2)",
        r"We will show that $m_n: =k_n +m$ works",
    ),
    "compose-k": CheckSpec(
        "k = 4k₂ + k₂·n_{k₁}",
        "The composite of two morphisms is a morphism with the composite exponent.",
        "Remark 4.3, proof",
        r"S_3^{4k_2+k_2n_{k_1}}",
    ),
    "univ-hstar-error": CheckSpec(
        "h* : G → L : S^{4l+1}",
        "The type-wise choice of h has errors in S^{4l+1}.",
        "Theorem 4.7, proof, item (1)",
        r"$h^*\colon \bar G \to H : S^{4l+1}$",
    ),
    "univ-hbar-error": CheckSpec(
        "h̄ : S_G → L : S^{4l+1}",
        "The extension to the semigroup has errors in S^{4l+1}.",
        "Theorem 4.7, proof, item (2)",
        r"$\bar h \colon S_{G,M}(N) \to H:S^{4l+1}$",
    ),
    "univ-hbar-ugu": CheckSpec(
        "h̄(ugu) ∈ h(g)S^{4(4l+1)}",
        "h̄ of a u-conjugate stays close to h.",
        "Theorem 4.7, proof, item (3)",
        r"$\bar h(ugu) \in h(g)S^{4(4l+1)}$",
    ),
    "univ-hstar-inverse": CheckSpec(
        "h*(a⁻¹) ∈ h*(a)⁻¹S^{2(4l+1)}",
        "h* respects inverses up to S^{2(4l+1)}.",
        "Theorem 4.7, proof, Claim 1(i)",
        r"$h^*(a^{-1}) \in h^*(a)^{-1} S^{2(4l+1)}$",
    ),
    "univ-hstar-tower": CheckSpec(
        "h*[F_n] ⊆ S^{(4n−1)(4l+1)}",
        "h* maps the tower sets into controlled powers of S.",
        "Theorem 4.7, proof, Claim 1(iii)",
        r"$h^*[F_n] \subseteq S^{(4n-1)(4l+1)}$",
    ),
    "univ-htilde-near-hbar": CheckSpec(
        "h̃(p/H) ∈ h̄(p)S^{12(4l+1)}",
        "The coset choice stays close to h̄.",
        "Theorem 4.7, proof, Claim 2",
        r"$\tilde{h} (p/H(u\M)) \in \bar h(p)S^{12(4l+1)}$",
    ),
    "univ-htilde-error": CheckSpec(
        "h̃ : uM/H → L : S^{37(4l+1)}",
        "The induced map on the quotient has errors in S^{37(4l+1)}.",
        "Theorem 4.7, proof, item (6)",
        r"$\tilde{h} \colon u\M/H(u\M) \to H : S^{37(4l+1)}$",
    ),
    "univ-htilde-factor": CheckSpec(
        "h̃(f(g)) ∈ h(g)S^{16(4l+1)}",
        "h̃ composed with f stays close to h.",
        "Theorem 4.7, proof, item (7)",
        r"$\tilde{h}(f(g)) \in h(g)S^{16(4l+1)}$",
    ),
    "univ-htilde-c": CheckSpec(
        "h̃[C] ⊆ S^{51(4l+1)}",
        "The error set of f maps into S^{51(4l+1)}.",
        "Theorem 4.7, proof, item (10)",
        r"$\tilde{h}[C] \subseteq S^{51(4l+1)}$",
    ),
    "univ-htilde-separation": CheckSpec(
        "S^mY ∩ S^mZ = ∅ ⟹ C h̃⁻¹[Y] ∩ C h̃⁻¹[Z] = ∅, m = 56(4l+1)+2l",
        "h̃ satisfies the separation item of goodness with the stated m.",
        "Theorem 4.7, proof of separation",
        r"S^{56(4l+1)+2l}Y",
    ),
    "uniqueness-n": CheckSpec(
        "ρ(p/H) ∈ h̃(p/H)Sⁿ, n = 4·max(m₂, k + 12(4l+1))",
        "Any morphism from f agrees with h̃ up to Sⁿ.",
        "Theorem 4.9, proof",
        r"We will show that $n:=4\max(m_2, k+12(4l+1))$ works.",
    ),
    "category-exponent": CheckSpec(
        "ρ₂′ρ₁′(p) ∈ ρ₂ρ₁(p)S₃^{k₂′n_{l₁}+l₂+k₂′}",
        "Composition respects equivalence of morphisms with the stated exponent.",
        "Proposition 4.10, proof",
        r"S_3^{k_2'n_{l_1}+l_2+k_2'}",
    ),
    "equivalence-laws": CheckSpec(
        "~ reflexive, symmetric, transitive with l ≤ l₁ + l₂",
        "Equivalence of morphisms is an equivalence relation.",
        "Definition 4.8",
        r"$\rho_1'(p) \in \rho_1(p) T^l$",
    ),
}
# alternate ids accepted by explain
CHECK_ALIASES = {"rem43-k": "compose-k"}


class QuasiHomError(ValueError):
    """A quasi-homomorphism, morphism or error-set precondition failed."""


# --- 1. Error Budgets ---

@dataclass(frozen=True)
class LedgerEntry:
    name: str
    value: int
    formula: str
    inputs: tuple  # ((symbol, value), ...)


def _evaluate(formula, inputs):
    symbols = {name: sympy.Symbol(name) for name in inputs}
    expr = sympy.sympify(formula, locals=symbols)
    return int(expr.subs({symbols[k]: v for k, v in inputs.items()}))


@dataclass(frozen=True)
class ErrorBudget:
    """Exponents with the identity that produced each one; every entry can be replayed."""

    entries: tuple = ()

    def __getitem__(self, name):
        for entry in reversed(self.entries):
            if entry.name == name:
                return entry.value
        raise KeyError(name)

    def __contains__(self, name):
        return any(entry.name == name for entry in self.entries)

    def given(self, **values):
        added = tuple(LedgerEntry(k, int(v), "given", ()) for k, v in values.items())
        return ErrorBudget(self.entries + added)

    def record(self, name, formula, **inputs):
        value = _evaluate(formula, inputs)
        entry = LedgerEntry(name, value, formula, tuple(sorted((k, int(v)) for k, v in inputs.items())))
        return ErrorBudget(self.entries + (entry,))

    def replay(self):
        """Names of entries whose recorded value differs from recomputation."""
        return [e.name for e in self.entries if e.formula != "given" and _evaluate(e.formula, dict(e.inputs)) != e.value]

    def as_dict(self):
        return {e.name: e.value for e in self.entries}

    def to_frame(self):
        return pd.DataFrame(
            [{"name": e.name, "value": e.value, "formula": e.formula,
              "inputs": ", ".join(f"{k}={v}" for k, v in e.inputs)} for e in self.entries],
            columns=["name", "value", "formula", "inputs"],
        )


def derived_exponents(budget, m_max=None):
    """
    From n (h[S] ⊆ Tⁿ) and e (errors ⊆ Tᵉ): n_j = j·n + (j−1)·e, k_1 = 0, k_j = n_{j−1} + e,
    and m_j = k_j + m when m (the separation witness) is known.
    """
    m_max = m_max or config.WITNESS_BOUND
    n, e = budget["n"], budget["e"]
    for j in range(1, m_max + 1):
        budget = budget.record(f"n_{j}", "j*n + (j - 1)*e", j=j, n=n, e=e)
        if j == 1:
            budget = budget.record("k_1", "0")
        else:
            budget = budget.record(f"k_{j}", "n_prev + e", n_prev=budget[f"n_{j - 1}"], e=e)
        if "m" in budget:
            budget = budget.record(f"m_{j}", "k_j + m", k_j=budget[f"k_{j}"], m=budget["m"])
    return budget


# --- 2. Quasi-Homomorphisms ---

def power_chain(S):
    """[S⁰, S¹, ...] up to the first repeat; powers are nested because e ∈ S."""
    chain = [S.group.singleton(S.group.identity)]
    while True:
        nxt = product(chain[-1], S)
        if nxt == chain[-1]:
            return chain
        chain.append(nxt)


def least_power(S, members, start=0):
    """Least j >= start with members ⊆ Sʲ, or None when no power contains them."""
    members = np.unique(np.asarray(members, dtype=np.int64))
    chain = power_chain(S)
    for j in range(start, max(start, len(chain) - 1) + 1):
        if chain[min(j, len(chain) - 1)].bits[members].all():
            return j
    return None


def _require_error_base(S):
    if S.group.identity not in S:
        raise QuasiHomError("An error set must contain the identity")
    if inverse_set(S) != S:
        raise QuasiHomError("An error set must be symmetric")
    if not conjugation_closure(S) <= S:
        raise QuasiHomError("An error set must be normal")


@dataclass(frozen=True, eq=False)
class QuasiHom:
    source: FiniteGroup
    target: FiniteGroup
    values: np.ndarray
    error_base: GSubset
    err_exp: int
    exhaustive: bool = True

    def image(self, A):
        return self.target.subset(np.unique(self.values[A.elements()]).tolist())

    def preimage(self, Y):
        return GSubset(self.source, Y.bits[self.values])


def _errors(f):
    _, _, right, left, exhaustive = error_values(f.target, f.values, f.source.table)
    return right, left, exhaustive


def error_right(f):
    """{f(y)⁻¹f(x)⁻¹f(xy)}."""
    return f.target.subset(np.unique(_errors(f)[0]).tolist())


def error_left(f):
    """{f(xy)f(y)⁻¹f(x)⁻¹}."""
    return f.target.subset(np.unique(_errors(f)[1]).tolist())


def make_quasihom(source, target, values, error_base):
    values = np.array(values, dtype=np.int64)
    if values.shape != (source.order,) or values.min() < 0 or values.max() >= target.order:
        raise QuasiHomError("Value table must send every source element into the target")
    if error_base.group is not target:
        raise QuasiHomError("Error base must be a subset of the target")
    _require_error_base(error_base)
    values.setflags(write=False)
    _, _, right, left, exhaustive = error_values(target, values, source.table)
    err_exp = least_power(error_base, np.concatenate([right, left]))
    if err_exp is None:
        raise QuasiHomError("Errors escape every power of the error base")
    return QuasiHom(source, target, values, error_base, err_exp, exhaustive)


@dataclass(frozen=True)
class GlcmVerdict:
    passed: bool
    i_bounds: dict
    l: int
    items: dict

    def to_check(self):
        return CheckResult("glcm-definition", self.passed, {"l": self.l},
                           {"i_bounds": self.i_bounds, **self.items})


def check_glcm(f, X, C=None, algebra=None, bound=None):
    """
    Finite reading of the model definition: errors inside C, every fibre inside some Xⁱ,
    image of X automatically compact, and the least l <= bound for which C^l-separated
    targets have preimages separated by block-unions of the algebra.
    """
    C = f.error_base if C is None else C
    _require_error_base(C)
    bound = bound or config.WITNESS_BOUND
    right, left, _ = _errors(f)
    errors_ok = bool(C.bits[right].all() and C.bits[left].all())

    powers = power_filtration(X, f.source.order)
    i_bounds = {}
    for y in np.unique(f.values):
        fibre = f.preimage(f.target.singleton(int(y)))
        i_bounds[int(y)] = next((i + 1 for i, P in enumerate(powers) if fibre <= P), None)
    bounded = None not in i_bounds.values()

    atom_of = algebra.atom_of if algebra is not None else np.arange(f.source.order)
    l = next((l for l in range(1, bound + 1) if not separation_scan(C, l, f.values, atom_of)[2].size), None)
    l_two = not separation_scan(C, 2, f.values, atom_of)[2].size
    items = {
        "errors_in_C": errors_ok,
        "fibres_bounded": bounded,
        "image_compact": "auto-pass (finite target)",
        "l_two_holds": l_two,
    }
    return GlcmVerdict(errors_ok and bounded and l is not None, i_bounds, l, items)


def separation_conflicts(values, T, A):
    """Pairs (y, z) with T y ∩ T z empty while A·h⁻¹(y) and A·h⁻¹(z) meet."""
    L, H = T.group, A.group
    fibre = np.zeros((L.order, H.order), dtype=bool)
    fibre[values, np.arange(H.order)] = True
    thick = np.array([product(A, GSubset(H, fibre[y])).bits for y in range(L.order)], dtype=np.int64)
    shared = (thick @ thick.T) > 0
    return np.argwhere(disjoint_translates(T) & shared)


@dataclass(frozen=True)
class GoodVerdict:
    passed: bool
    n: int
    m: int
    items: dict
    counterexample: tuple = None

    def to_check(self):
        witnesses = dict(self.items)
        if self.counterexample is not None:
            witnesses["counterexample"] = list(self.counterexample)
        return CheckResult("good-quasihom", self.passed, {"n": self.n, "m": self.m}, witnesses)


def check_good(h, S, bound=None):
    """Least n, m <= bound witnessing items (3) and (4); items (1) and (2) auto-pass finitely."""
    if S.group is not h.source:
        raise QuasiHomError("S must be a subset of the source of h")
    _require_error_base(S)
    bound = bound or config.WITNESS_BOUND
    T = h.error_base
    n = least_power(T, h.values[S.elements()], start=1)
    n = n if n is not None and n <= bound else None
    m, counterexample = None, None
    for candidate in range(1, bound + 1):
        conflicts = separation_conflicts(h.values, subset_power(T, candidate), S)
        if not conflicts.size:
            m = candidate
            break
        counterexample = tuple(int(v) for v in conflicts[0])
    items = {"preimages_compact": "auto-pass (finite source)", "images_compact": "auto-pass (finite target)"}
    return GoodVerdict(n is not None and m is not None, n, m, items, None if m is not None else counterexample)


def check_derived(h, S, budget, m_max=None):
    """Exact scan of h[Sʲ] ⊆ T^{n_j} and of the m_j separation claim for j <= m_max."""
    m_max = m_max or config.WITNESS_BOUND
    T = h.error_base
    failures = []
    for j in range(1, m_max + 1):
        Sj = subset_power(S, j)
        if not h.image(Sj) <= subset_power(T, budget[f"n_{j}"]):
            failures.append(f"n_{j}")
        if f"m_{j}" in budget and separation_conflicts(h.values, subset_power(T, budget[f"m_{j}"]), Sj).size:
            failures.append(f"m_{j}")
    return CheckResult("derived-exponents", not failures, budget.as_dict(), {"failures": failures})


# --- 3. Morphisms and Their Category ---

@dataclass(frozen=True, eq=False)
class Morphism:
    """ρ : H₁ → H₂ from the model f₁ : G → H₁ to f₂ : G → H₂ with witness k."""

    source: QuasiHom
    target: QuasiHom
    rho: QuasiHom
    k: int

    @property
    def values(self):
        return self.rho.values


def _with_base(h, T):
    return dataclasses.replace(h, error_base=T, err_exp=1)


def _factor_offsets(f_from, f_to, values):
    """f₂(g)⁻¹ ρ(f₁(g)) for every g."""
    H2 = f_to.target
    return H2.table[H2.inverses[f_to.values], values[f_from.values]]


def make_morphism(f_from, f_to, values, bound=None):
    """The least k making ρ a good quasi-homomorphism into S₂ᵏ with ρ∘f₁ within f₂·S₂ᵏ."""
    if f_from.source is not f_to.source:
        raise QuasiHomError("Models must share the source group")
    S1, S2 = f_from.error_base, f_to.error_base
    rho = make_quasihom(f_from.target, f_to.target, values, S2)
    k_factor = least_power(S2, _factor_offsets(f_from, f_to, rho.values))
    if k_factor is None:
        raise QuasiHomError("ρ∘f₁ is not within any power of S₂ of f₂")
    chain = power_chain(S2)
    limit = max(len(chain), config.WITNESS_BOUND)
    for k in range(max(rho.err_exp, k_factor), limit + 1):
        if check_good(_with_base(rho, subset_power(S2, k)), S1, bound=limit).passed:
            return Morphism(f_from, f_to, rho, k)
    raise QuasiHomError(f"ρ is not good for (H₁, S₁) with any k <= {limit}")


def compose_morphisms(rho, delta):
    """Returns (δρ with k = 4k₂ + k₂·n_{k₁}, CheckResult re-verifying both containments)."""
    if rho.target is not delta.source:
        raise QuasiHomError("Morphisms do not compose: codomain model differs from domain model")
    k1, k2 = rho.k, delta.k
    S2, S3 = rho.target.error_base, delta.target.error_base
    limit = max(len(power_chain(S3)), config.WITNESS_BOUND)
    good = check_good(_with_base(delta.rho, subset_power(S3, k2)), S2, bound=limit)
    if not good.passed:
        raise QuasiHomError("δ is not a morphism: goodness fails")
    budget = ErrorBudget().given(n=good.n, e=1)
    budget = derived_exponents(budget, m_max=max(k1, 1))
    budget = budget.record("k", "4*k2 + k2*n_k1", k2=k2, n_k1=budget[f"n_{max(k1, 1)}"])
    k = budget["k"]

    values = delta.values[rho.values]
    composite = make_quasihom(rho.rho.source, delta.rho.target, values, S3)
    Sk = subset_power(S3, k)
    errors_ok = composite.err_exp <= k
    offsets = _factor_offsets(rho.source, delta.target, composite.values)
    factor_ok = bool(Sk.bits[offsets].all())
    check = CheckResult("compose-k", errors_ok and factor_ok, budget.as_dict(),
                        {"minimal_error_exponent": composite.err_exp,
                         "minimal_factor_exponent": least_power(S3, offsets)})
    return Morphism(rho.source, delta.target, composite, k), check


def equivalence_witness(rho, rho_prime, T=None):
    """Least l with ρ′(p) ∈ ρ(p)Tˡ for every p, or None."""
    H = rho.rho.target
    T = rho.target.error_base if T is None else T
    offsets = H.table[H.inverses[rho.values], rho_prime.values]
    return least_power(T, offsets)


def equivalence_laws(morphisms):
    """Reflexivity, symmetry and transitivity (witness <= sum) over a list of parallel morphisms."""
    reflexive = all(equivalence_witness(r, r) == 0 for r in morphisms)
    symmetric, transitive = True, True
    for a, b in itertools.permutations(morphisms, 2):
        symmetric &= equivalence_witness(a, b) == equivalence_witness(b, a)
    for a, b, c in itertools.permutations(morphisms, 3):
        ab, bc, ac = equivalence_witness(a, b), equivalence_witness(b, c), equivalence_witness(a, c)
        if ab is not None and bc is not None:
            transitive &= ac is not None and ac <= ab + bc
    return CheckResult("equivalence-laws", reflexive and symmetric and transitive, {},
                       {"reflexive": reflexive, "symmetric": symmetric, "transitive": transitive})


def category_laws(rho1, rho1_prime, rho2, rho2_prime):
    """ρ₂ρ₁ ~ ρ₂′ρ₁′ with exponent k₂′·n_{l₁} + l₂ + k₂′."""
    l1 = equivalence_witness(rho1, rho1_prime)
    l2 = equivalence_witness(rho2, rho2_prime)
    if l1 is None or l2 is None:
        raise QuasiHomError("Morphisms are not equivalent")
    S2, S3 = rho1.target.error_base, rho2.target.error_base
    k2p = rho2_prime.k
    limit = max(len(power_chain(S3)), config.WITNESS_BOUND)
    good = check_good(_with_base(rho2_prime.rho, subset_power(S3, k2p)), S2, bound=limit)
    if not good.passed:
        raise QuasiHomError("ρ₂′ is not a morphism: goodness fails")
    budget = derived_exponents(ErrorBudget().given(n=good.n, e=1), m_max=max(l1, 1))
    budget = budget.record("exponent", "k2p*n_l1 + l2 + k2p", k2p=k2p, n_l1=budget[f"n_{max(l1, 1)}"], l2=l2)
    H3 = rho2.rho.target
    first = rho2.values[rho1.values]
    second = rho2_prime.values[rho1_prime.values]
    offsets = H3.table[H3.inverses[first], second]
    exponent = budget["exponent"]
    ok = bool(subset_power(S3, exponent).bits[offsets].all())
    return CheckResult("category-exponent", ok, {"l1": l1, "l2": l2, "k2_prime": k2p, "exponent": exponent},
                       {"minimal": least_power(S3, offsets)})


# --- 4. Universality ---

def model_of(inst, tower=None):
    """The pipeline's f : G → uM/H : C as a QuasiHom."""
    tower = tower or build_F_tower(inst)
    return make_quasihom(inst.group, inst.quotient, f_map(inst), tower.C)


@dataclass(frozen=True, eq=False)
class UniversalityReport:
    l: int
    h_M: np.ndarray  # atom -> target
    h_star: np.ndarray  # group element -> target
    h_tilde: np.ndarray  # quotient element -> target
    checks: list
    budget: ErrorBudget
    minimal: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)


def _offsets_inside(L, lhs, rhs, P):
    """Positions where lhs ∉ rhs·P."""
    return np.flatnonzero(~P.bits[L.table[L.inverses[rhs], lhs]])


def _choose(candidates, rng):
    return min(candidates) if rng is None else rng.choice(sorted(candidates))


def universality_construct(inst, h, tower=None, choice_seed=None):
    """
    Finite semantics: h_M(atom) is a chosen value of h on the atom, h* and h̄ read it off the atom,
    and h̃ picks a value of h̄ over each H-coset of uM. Every containment of the ledger is scanned.
    """
    if h.source is not inst.group:
        raise QuasiHomError("h must be defined on the instance group")
    tower = tower or build_F_tower(inst)
    S, L = h.error_base, h.target
    verdict = check_glcm(h, inst.X, S, inst.algebra)
    if verdict.l is None:
        raise QuasiHomError("No separation witness l <= bound for h")
    l = verdict.l
    rng = random.Random(choice_seed) if choice_seed is not None else None

    alg, dec, semigroup = inst.algebra, inst.dec, inst.semigroup
    h_M = np.array([_choose({int(v) for v in h.values[idx]}, rng) for idx in alg.members], dtype=np.int64)
    h_star = h_M[alg.atom_of]
    h_bar = h_M
    Q = inst.quotient
    h_tilde = np.empty(Q.order, dtype=np.int64)
    for q in range(Q.order):
        coset = dec.uM[dec.projection[dec.uM] == q]
        h_tilde[q] = _choose({int(h_bar[p]) for p in coset}, rng)
    f = f_map(inst)

    budget = ErrorBudget().given(l=l)
    for name, formula in (("hstar_error", "4*l + 1"), ("hbar_ugu", "4*(4*l + 1)"),
                          ("hstar_inverse", "2*(4*l + 1)"), ("htilde_near", "12*(4*l + 1)"),
                          ("htilde_error", "37*(4*l + 1)"), ("htilde_factor", "16*(4*l + 1)"),
                          ("htilde_c", "51*(4*l + 1)"), ("htilde_m", "56*(4*l + 1) + 2*l")):
        budget = budget.record(name, formula, l=l)
    for n in range(1, 4):
        budget = budget.record(f"hstar_F{n}", "(4*n - 1)*(4*l + 1)", n=n, l=l)

    checks, minimal = [], {}

    def errors_check(check_id, values, table, exponent):
        _, _, right, left, _ = error_values(L, values, table)
        errs = np.concatenate([right, left])
        P = subset_power(S, budget[exponent])
        minimal[check_id] = least_power(S, errs)
        bad = np.flatnonzero(~P.bits[errs])
        checks.append(CheckResult(check_id, not bad.size, {"power": budget[exponent], "minimal": minimal[check_id]},
                                  {"offending_value": int(errs[bad[0]])} if bad.size else {}))

    def near_check(check_id, lhs, rhs, exponent):
        offsets = L.table[L.inverses[rhs], lhs]
        minimal[check_id] = least_power(S, offsets)
        bad = _offsets_inside(L, lhs, rhs, subset_power(S, budget[exponent]))
        checks.append(CheckResult(check_id, not bad.size, {"power": budget[exponent], "minimal": minimal[check_id]},
                                  {"offending_index": int(bad[0])} if bad.size else {}))

    errors_check("univ-hstar-error", h_star, inst.group.table, "hstar_error")
    errors_check("univ-hbar-error", h_bar, semigroup.table, "hstar_error")
    u = inst.u
    ugu = semigroup.table[semigroup.table[u, semigroup.tags], u]
    near_check("univ-hbar-ugu", h_bar[ugu], h.values, "hbar_ugu")
    near_check("univ-hstar-inverse", h_star[inst.group.inverses], L.inverses[h_star], "hstar_inverse")

    tower_ok, tower_minimal = True, {}
    for n in range(1, 4):
        image = h_star[tower.F[n].elements()]
        tower_minimal[n] = least_power(S, image)
        tower_ok &= bool(subset_power(S, budget[f"hstar_F{n}"]).bits[image].all())
    minimal["univ-hstar-tower"] = tower_minimal
    checks.append(CheckResult("univ-hstar-tower", tower_ok,
                              {f"F{n}": budget[f"hstar_F{n}"] for n in range(1, 4)}, {"minimal": tower_minimal}))

    uM = dec.uM
    near_check("univ-htilde-near-hbar", h_tilde[dec.projection[uM]], h_bar[uM], "htilde_near")
    errors_check("univ-htilde-error", h_tilde, Q.table, "htilde_error")
    near_check("univ-htilde-factor", h_tilde[f], h.values, "htilde_factor")

    c_values = h_tilde[tower.C.elements()]
    minimal["univ-htilde-c"] = least_power(S, c_values)
    checks.append(CheckResult("univ-htilde-c", bool(subset_power(S, budget["htilde_c"]).bits[c_values].all()),
                              {"power": budget["htilde_c"], "minimal": minimal["univ-htilde-c"]}, {}))

    conflicts = separation_conflicts(h_tilde, subset_power(S, budget["htilde_m"]), tower.C)
    checks.append(CheckResult("univ-htilde-separation", not conflicts.size, {"m": budget["htilde_m"]},
                              {"offending": conflicts[0].tolist()} if conflicts.size else {}))
    logger.info(f"Universality with l={l}: failures={[c.check_id for c in checks if not c.passed]}")
    return UniversalityReport(l, h_M, h_star, h_tilde, checks, budget, minimal)


def uniqueness_bound(report, rho, C):
    """ρ(q) ∈ h̃(q)Sⁿ for every q with n = 4·max(m₂, k + 12(4l+1)); m₂ measured in powers of S."""
    S = rho.target.error_base
    L = rho.rho.target
    C2 = subset_power(C, 2)
    limit = max(len(power_chain(S)), config.WITNESS_BOUND)
    m2 = next((m for m in range(0, limit + 1)
               if not separation_conflicts(rho.values, subset_power(S, m), C2).size), None)
    if m2 is None:
        raise QuasiHomError("No m₂ within the power chain of S")
    budget = report.budget.given(k=rho.k, m2=m2)
    budget = budget.record("uniqueness_n", "4*Max(m2, k + 12*(4*l + 1))", m2=m2, k=rho.k, l=report.l)
    n = budget["uniqueness_n"]
    offsets = L.table[L.inverses[report.h_tilde], rho.values]
    bad = np.flatnonzero(~subset_power(S, n).bits[offsets])
    return CheckResult("uniqueness-n", not bad.size, {"n": n, "m2": m2, "k": rho.k, "l": report.l},
                       {"minimal": least_power(S, offsets), **({"offending": int(bad[0])} if bad.size else {})})


# --- 5. Random Model Chains ---

CHAINS = ((24, 12, 6), (24, 12, 4), (24, 8, 4), (36, 12, 6), (36, 18, 6), (30, 15, 5))


@dataclass(frozen=True, eq=False)
class ModelChain:
    instance: object
    models: tuple  # f1, f2, f3
    morphisms: tuple  # rho1: f1 -> f2, rho2: f2 -> f3
    alternates: tuple  # rho1', rho2' with the same endpoints


def _interval(group, radius):
    return group.subset(sorted({r % group.order for r in range(-radius, radius + 1)}))


def _noisy_reduction(rng, source_order, modulus, amplitude):
    return [(x % modulus + rng.randint(-amplitude, amplitude)) % modulus for x in range(source_order)]


def random_model_chain(seed):
    """Three models G → ℤ/a₁ → ℤ/a₂ → ℤ/a₃ given by noisy reductions, with morphisms between them."""
    rng = random.Random(seed)
    a1, a2, a3 = rng.choice(CHAINS)
    G = FiniteGroup.cyclic(a1)
    inst = build_instance(G, _interval(G, 2), seeds=(G.singleton(G.identity),), label=f"chain-{seed}")
    targets = [FiniteGroup.cyclic(a) for a in (a1, a2, a3)]
    models = tuple(
        make_quasihom(inst.group, H, _noisy_reduction(rng, inst.group.order, H.order, rng.choice([0, 1])),
                      _interval(H, 1))
        for H in targets
    )

    def morphism(i):
        values = _noisy_reduction(rng, targets[i].order, targets[i + 1].order, rng.choice([0, 1]))
        return make_morphism(models[i], models[i + 1], values)

    morphisms = (morphism(0), morphism(1))
    alternates = (morphism(0), morphism(1))
    return ModelChain(inst, models, morphisms, alternates)
