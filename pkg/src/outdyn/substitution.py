"""Substitutions on finite alphabets: matrices, block substitutions and limit frequencies."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import networkx as nx
import numpy as np

from .errors import CapExhausted, DomainError

PRIMITIVE, IRREDUCIBLE, REDUCIBLE = "primitive", "irreducible", "reducible"


@dataclass
class SubstitutionSystem:
    """Letters are strings; words are tuples of letters."""
    alphabet: list
    rules: dict
    blocks: list | None = None
    p: int | None = None
    _derived: bool = field(default=False, repr=False)

    def __post_init__(self):
        self.alphabet = list(self.alphabet)
        aset = set(self.alphabet)
        if len(aset) != len(self.alphabet):
            raise DomainError("repeated letter in the alphabet")
        rules = {}
        for x in self.alphabet:
            if x not in self.rules:
                raise DomainError(f"no rule for letter {x!r}")
            img = tuple(self.rules[x])
            if not img:
                raise DomainError(f"rule for {x!r} is empty")
            if not set(img) <= aset:
                raise DomainError(f"rule for {x!r} uses letters outside the alphabet")
            rules[x] = img
        self.rules = rules
        if self.blocks is None:
            self.blocks = _scc_blocks(self)
            self._derived = True
        else:
            self.blocks = [list(b) for b in self.blocks]
            flat = [x for b in self.blocks for x in b]
            if sorted(flat) != sorted(self.alphabet):
                raise DomainError("blocks must partition the alphabet")
            where = {x: i for i, b in enumerate(self.blocks) for x in b}
            for x in self.alphabet:
                for y in self.rules[x]:
                    if where[y] < where[x]:
                        raise DomainError(f"rule for {x!r} enters an earlier block: not lower block triangular")
        if self.p is None:
            self.p = len(self.blocks)
        self.block_of = {x: i for i, b in enumerate(self.blocks) for x in b}

    @classmethod
    def from_json(cls, doc: dict) -> "SubstitutionSystem":
        rules = {k: tuple(v) if isinstance(v, list) else tuple(v) for k, v in doc["rules"].items()}
        return cls(doc.get("alphabet", list(rules)), rules, doc.get("blocks"), doc.get("p"))

    def apply(self, word: Sequence) -> tuple:
        out = []
        for x in word:
            out.extend(self.rules[x])
        return tuple(out)

    def iterate(self, word: Sequence, n: int, cap: int = 10 ** 7) -> tuple:
        w = tuple(word)
        for _ in range(n):
            if sum(len(self.rules[x]) for x in w) > cap:
                raise CapExhausted(f"expansion exceeds {cap} letters")
            w = self.apply(w)
        return w

    def power(self, n: int) -> "SubstitutionSystem":
        return SubstitutionSystem(self.alphabet, {x: self.iterate((x,), n) for x in self.alphabet},
                                  None if self._derived else self.blocks, self.p)

    def weight(self, word) -> int:
        """Letters of ``word`` lying in a block of index < p."""
        return sum(1 for x in word if self.block_of[x] < self.p)


def _scc_blocks(sys: SubstitutionSystem) -> list:
    g = nx.DiGraph()
    g.add_nodes_from(sys.alphabet)
    for x in sys.alphabet:
        for y in sys.rules[x]:
            g.add_edge(x, y)
    cond = nx.condensation(g)
    pos = {x: i for i, x in enumerate(sys.alphabet)}
    order = nx.lexicographical_topological_sort(
        cond, key=lambda c: min(pos[x] for x in cond.nodes[c]["members"]))
    return [sorted(cond.nodes[c]["members"], key=pos.get) for c in order]


def transition_matrix_sub(sys: SubstitutionSystem) -> np.ndarray:
    """M[a, b] = occurrences of a in rule(b)."""
    idx = {x: i for i, x in enumerate(sys.alphabet)}
    n = len(idx)
    m = np.zeros((n, n), dtype=object)
    for b in sys.alphabet:
        for a in sys.rules[b]:
            m[idx[a], idx[b]] += 1
    return m


def primitivity_check(matrix) -> str:
    m = np.asarray(matrix, dtype=object)
    n = m.shape[0]
    g = nx.DiGraph()
    g.add_nodes_from(range(n))
    g.add_edges_from((i, j) for i in range(n) for j in range(n) if m[i, j] != 0)
    if not nx.is_strongly_connected(g):
        return REDUCIBLE
    b = (m != 0).astype(np.int64)
    p = b.copy()
    for _ in range((n - 1) ** 2 + 1):
        if (p > 0).all():
            return PRIMITIVE
        p = ((p @ b) > 0).astype(np.int64)
    return IRREDUCIBLE


# -- block substitutions ---------------------------------------------------------

def _block_image(sys: SubstitutionSystem, x: tuple, ell: int) -> tuple:
    img = sys.apply(x)
    return tuple(img[i:i + ell] for i in range(len(sys.rules[x[0]])))


def block_substitution(sys: SubstitutionSystem, ell: int, seed_depth: int = 8) -> SubstitutionSystem:
    """Substitution on the occurring length-ell words."""
    if ell < 1:
        raise DomainError("block length must be positive")
    words = set()
    for x in sys.alphabet:
        w = (x,)
        for _ in range(seed_depth + 1):
            for i in range(len(w) - ell + 1):
                words.add(w[i:i + ell])
            if len(w) > 10 ** 5:
                break
            w = sys.apply(w)
    frontier = list(words)
    rules = {}
    while frontier:
        u = frontier.pop()
        if u in rules:
            continue
        rules[u] = _block_image(sys, u, ell)
        for v in rules[u]:
            if v not in rules:
                words.add(v)
                frontier.append(v)
    alphabet = sorted(words, key=lambda u: tuple(sys.alphabet.index(c) for c in u))
    # induced partition: tilde(B_i) then bar(B_i) placed before it
    blocks = []
    for i, _ in enumerate(sys.blocks):
        tilde = [u for u in alphabet if sys.block_of[u[0]] == i and all(sys.block_of[c] >= i for c in u)]
        bar = [u for u in alphabet if sys.block_of[u[0]] == i and any(sys.block_of[c] < i for c in u)]
        if bar:
            blocks.append(bar)
        if tilde:
            blocks.append(tilde)
    out = SubstitutionSystem(alphabet, rules, blocks)
    out.origin = (sys, ell)
    return out


def induced_blocks(sys: SubstitutionSystem, sub: SubstitutionSystem, i: int):
    """(tilde B_i, bar B_i) inside the block substitution ``sub``."""
    tilde = [u for u in sub.alphabet if sys.block_of[u[0]] == i and all(sys.block_of[c] >= i for c in u)]
    bar = [u for u in sub.alphabet if sys.block_of[u[0]] == i and any(sys.block_of[c] < i for c in u)]
    return tilde, bar


def submatrix(sys: SubstitutionSystem, letters: Sequence) -> np.ndarray:
    m = transition_matrix_sub(sys)
    idx = [sys.alphabet.index(x) for x in letters]
    return np.asarray(m[np.ix_(idx, idx)], dtype=float) if idx else np.zeros((0, 0))


def eigenvalues(m: np.ndarray) -> np.ndarray:
    if m.size == 0:
        return np.zeros(0, dtype=complex)
    return np.linalg.eigvals(np.asarray(m, dtype=float))


def spectral_containment(sys: SubstitutionSystem, ell: int, tol: float = 1e-8) -> list:
    """Per block: eigenvalues of M_{B_i} appear in the tilde block, extras have modulus <= 1."""
    sub = block_substitution(sys, ell)
    report = []
    for i, b in enumerate(sys.blocks):
        base = list(eigenvalues(submatrix(sys, b)))
        tilde, bar = induced_blocks(sys, sub, i)
        ev = list(eigenvalues(submatrix(sub, tilde)))
        missing = []
        for z in base:
            j = min(range(len(ev)), key=lambda k: abs(ev[k] - z), default=None)
            if j is None or abs(ev[j] - z) > max(tol, tol * abs(z)):
                missing.append(z)
            else:
                ev.pop(j)
        extra_ok = all(abs(z) <= 1 + tol for z in ev)
        bar_ev = eigenvalues(submatrix(sub, bar))
        bar_ok = all(abs(z) <= 1 + tol for z in bar_ev)
        report.append({"block": i, "contained": not missing, "extra_le_1": extra_ok,
                       "bar_le_1": bar_ok, "missing": missing})
    return report


# -- frequencies -------------------------------------------------------------------

def _prefix_word(sys: SubstitutionSystem, a, ell: int) -> tuple:
    w = (a,)
    for _ in range(10 ** 4):
        if len(w) >= ell:
            return w[:ell]
        nw = sys.apply(w)
        if len(nw) == len(w):
            break
        w = nw
    raise DomainError(f"iterates of {a!r} never reach length {ell}")


def check_hypotheses(sys: SubstitutionSystem, a) -> int:
    """Index of a primitive expanding block below p reachable from a."""
    if a not in sys.rules:
        raise DomainError(f"unknown letter {a!r}")
    if sys.rules[a][0] != a:
        raise DomainError(f"hypothesis failed: rule({a!r}) does not start with {a!r}")
    reach = {a}
    stack = [a]
    while stack:
        x = stack.pop()
        for y in sys.rules[x]:
            if y not in reach:
                reach.add(y)
                stack.append(y)
    for j, b in enumerate(sys.blocks):
        if j >= sys.p or not set(b) & reach:
            continue
        m = submatrix(sys, b)
        if primitivity_check(m.astype(int)) != PRIMITIVE:
            continue
        lam = max(abs(eigenvalues(m)))
        if lam > 1 + 1e-9:
            return j
    raise DomainError("hypothesis failed: no primitive block with Perron-Frobenius eigenvalue > 1 "
                      "below p is reachable")


@dataclass
class FrequencyEstimate:
    value: float
    tolerance: float
    iterations: int
    zero: bool = False

    def __float__(self):
        return self.value


def limit_frequency(sys: SubstitutionSystem, a, w: Sequence, tol=1e-10, cap=10_000) -> FrequencyEstimate:
    """lim (w, z^n(a)) / ||z^n(a)||_(p) by renormalized matrix iteration."""
    check_hypotheses(sys, a)
    w = tuple(w)
    ell = len(w)
    if ell == 0:
        raise DomainError("empty word")
    sub = block_substitution(sys, ell) if ell > 1 else sys
    letters = sub.alphabet
    alpha = _prefix_word(sys, a, ell) if ell > 1 else a
    M1 = np.asarray(transition_matrix_sub(sys), dtype=float)
    Ml = np.asarray(transition_matrix_sub(sub), dtype=float)
    u = np.zeros(len(sys.alphabet))
    u[sys.alphabet.index(a)] = 1.0
    v = np.zeros(len(letters))
    v[letters.index(alpha)] = 1.0
    key = w if ell > 1 else w[0]
    if key not in letters:
        return FrequencyEstimate(0.0, 0.0, 0, True)
    wi = letters.index(key)
    mask = np.array([1.0 if sys.block_of[x] < sys.p else 0.0 for x in sys.alphabet])
    hist = []
    warmup = 2 * len(letters) + 10
    for n in range(1, cap + 1):
        u = M1 @ u
        v = Ml @ v
        s = u.sum()
        u /= s
        v /= s
        den = mask @ u
        est = v[wi] / den if den > 0 else float("nan")
        hist.append(est)
        if n > warmup and den > 0:
            # several consecutive agreements guard against periodic plateaus
            gap = max(abs(est - h) for h in hist[-4:-1])
            if gap < tol:
                return FrequencyEstimate(float(est), float(gap), n, bool(est == 0))
    raise CapExhausted("frequency iteration did not converge")


def _summarize(word: tuple, w: tuple) -> tuple:
    k = len(w) - 1
    cnt = sum(1 for i in range(len(word) - len(w) + 1) if word[i:i + len(w)] == w)
    return (len(word), cnt, word[:k] if k else (), word[-k:] if k else ())


def _join(A, B, w):
    la, ca, pa, sa = A[:4]
    lb, cb, pb, sb = B[:4]
    k = len(w) - 1
    cross = 0
    if k:
        s = sa + pb
        for i in range(len(sa)):
            if i + len(w) > len(sa) and s[i:i + len(w)] == w:
                cross += 1
    pre = (pa + pb)[:k] if k else ()
    suf = (sa + sb)[-k:] if k else ()
    return (la + lb, ca + cb + cross, pre, suf)


def _expanded(sys: SubstitutionSystem, a, n: int) -> np.ndarray:
    """Letter codes of z^n(a), built level by level with a padded rule table."""
    cache = sys.__dict__.setdefault("_expansions", {})
    if (a, n) in cache:
        return cache[(a, n)]
    code = {x: i for i, x in enumerate(sys.alphabet)}
    rl = np.array([len(sys.rules[x]) for x in sys.alphabet])
    table = np.zeros((len(sys.alphabet), rl.max()), dtype=np.int64)
    for x in sys.alphabet:
        table[code[x], :rl[code[x]]] = [code[y] for y in sys.rules[x]]
    word = np.array([code[a]], dtype=np.int64)
    for _ in range(n):
        lens = rl[word]
        starts = np.repeat(np.cumsum(lens) - lens, lens)
        word = table[np.repeat(word, lens), np.arange(int(lens.sum())) - starts]
    cache.clear()
    cache[(a, n)] = word
    return word


def brute_frequency_oracle(sys: SubstitutionSystem, a, w: Sequence, n: int, cap=10 ** 7) -> Fraction:
    """Exact (w, z^n(a)) / ||z^n(a)||_(p).

    Expands literally up to ``cap`` letters; beyond that an exact recursive
    counter over prefix and suffix summaries is used.
    """
    w = tuple(w)
    word = (a,)
    lengths = {x: 1 for x in sys.alphabet}
    for _ in range(n):
        lengths = {x: sum(lengths[y] for y in sys.rules[x]) for x in sys.alphabet}
    if lengths[a] <= cap:
        arr = _expanded(sys, a, n)
        code = {x: i for i, x in enumerate(sys.alphabet)}
        if any(x not in code for x in w):
            cnt = 0
        elif len(w) > len(arr):
            cnt = 0
        else:
            hit = np.ones(len(arr) - len(w) + 1, dtype=bool)
            for j, x in enumerate(w):
                hit &= arr[j:len(arr) - len(w) + 1 + j] == code[x]
            cnt = int(hit.sum())
        heavy = np.array([sys.block_of[x] < sys.p for x in sys.alphabet])
        den = int(heavy[arr].sum())
        if den == 0:
            raise DomainError("zero weight word")
        return Fraction(cnt, den)
    # summaries: (length, count, prefix, suffix) plus block weight
    summ = {x: _summarize((x,), w) + (sys.weight((x,)),) for x in sys.alphabet}
    for _ in range(n):
        new = {}
        for x in sys.alphabet:
            acc = None
            wt = 0
            for y in sys.rules[x]:
                acc = summ[y] if acc is None else _join(acc, summ[y], w)
                wt += summ[y][4]
            new[x] = acc[:4] + (wt,)
        summ = new
    _, cnt, _, _, den = summ[a]
    if den == 0:
        raise DomainError("zero weight word")
    return Fraction(cnt, den)
