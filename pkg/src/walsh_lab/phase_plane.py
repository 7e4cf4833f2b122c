"""Bitiles, trees, the tree square function, size and density.

Size and density are suprema over tops that need not belong to the
collection.  Both are evaluated exhaustively over every dominating bitile,
which is finite on a resolution-``res`` grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .dyadic import DyadicFunction, DyadicInterval
from .walsh import Tile, packet_coefficients
from .weights import Weight


@dataclass(frozen=True, order=True)
class Bitile:
    """Area-two rectangle I x omega, |I| = 2^-k, omega = [2^(k+1) n, 2^(k+1) (n+1))."""

    k: int
    m: int
    n: int

    def __post_init__(self):
        if self.k < 0 or not 0 <= self.m < (1 << self.k) or self.n < 0:
            raise ValueError(f"invalid bitile {self.k, self.m, self.n}")

    @property
    def interval(self) -> DyadicInterval:
        return DyadicInterval(self.k, self.m)

    @property
    def freq(self) -> tuple[int, int]:
        return self.n << (self.k + 1), (self.n + 1) << (self.k + 1)

    @property
    def lower(self) -> Tile:
        return Tile(self.k, self.m, 2 * self.n)

    @property
    def upper(self) -> Tile:
        return Tile(self.k, self.m, 2 * self.n + 1)

    def resolvable(self, res: int) -> bool:
        return self.k + 1 <= res and ((self.n + 1) << (self.k + 1)) <= (1 << res)


def bitile_less(P: Bitile, Q: Bitile) -> bool:
    """P < Q: rectangles intersect and I_P is inside I_Q."""
    if not Q.interval.contains(P.interval):
        return False
    a, b = P.freq, Q.freq
    return a[0] < b[1] and b[0] < a[1]


def _tile_le(p: Tile, q: Tile) -> bool:
    if not q.interval.contains(p.interval):
        return False
    a, b = p.freq, q.freq
    return a[0] < b[1] and b[0] < a[1]


@dataclass(frozen=True)
class Tree:
    top: Bitile
    members: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(self.members))
        for P in self.members:
            if not bitile_less(P, self.top):
                raise ValueError(f"{P} is not below the tree top {self.top}")

    @property
    def interval(self) -> DyadicInterval:
        return self.top.interval

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(sorted(self.members))

    def is_two_overlapping(self) -> bool:
        return all(_tile_le(P.upper, self.top.upper) for P in self.members)

    def is_one_overlapping(self) -> bool:
        return all(_tile_le(P.lower, self.top.lower) for P in self.members)


def split_tree(T: Tree) -> tuple[Tree, Tree]:
    """(T1, T2): T2 collects P with P_2 < top_2, the rest is 1-overlapping."""
    two = frozenset(P for P in T.members if _tile_le(P.upper, T.top.upper))
    return Tree(T.top, T.members - two), Tree(T.top, two)


@dataclass
class Linearization:
    """Per-cell increasing frequencies N_0 < ... < N_M and weights a_1..a_M.

    ``freqs[x]`` has length M(x)+1 (empty when M(x) = 0) and ``coeffs[x]``
    has length M(x).
    """

    res: int
    r: float
    freqs: list
    coeffs: list

    def __post_init__(self):
        n = 1 << self.res
        if len(self.freqs) != n or len(self.coeffs) != n:
            raise ValueError("one frequency/coefficient list per cell is required")
        rp = conjugate(self.r)
        self.freqs = [np.asarray(f, dtype=np.int64) for f in self.freqs]
        self.coeffs = [np.asarray(a, dtype=np.float64) for a in self.coeffs]
        for x, (N, a) in enumerate(zip(self.freqs, self.coeffs)):
            if a.size == 0:
                if N.size > 1:
                    raise ValueError(f"cell {x}: frequencies without coefficients")
                continue
            if N.size != a.size + 1:
                raise ValueError(f"cell {x}: need M+1 frequencies for M coefficients")
            if np.any(np.diff(N) <= 0):
                raise ValueError(f"cell {x}: frequencies must be strictly increasing")
            if N[0] < 0 or N[-1] > n:
                raise ValueError(f"cell {x}: frequencies outside [0, 2**res]")
            s = np.sum(np.abs(a) ** rp)
            if abs(s - 1.0) > 1e-9:
                raise ValueError(f"cell {x}: sum |a_k|^r' = {s} != 1")

    @property
    def counts(self) -> np.ndarray:
        return np.array([a.size for a in self.coeffs])

    @classmethod
    def empty(cls, res: int, r: float) -> "Linearization":
        n = 1 << res
        return cls(res, r, [np.zeros(0, np.int64)] * n, [np.zeros(0)] * n)

    def mass_array(self, g: DyadicFunction, w: Weight) -> np.ndarray:
        """A[x, N] = 2^-res |g(x)|^r' w(x) sum_{k >= 1 : N_k(x) = N} |a_k(x)|^r'.

        The frequency axis has 2**res + 1 slots.
        """
        n = 1 << self.res
        rp = conjugate(self.r)
        A = np.zeros((n, n + 1))
        scale = np.abs(g.values) ** rp * w.values / n
        for x in range(n):
            a = self.coeffs[x]
            if a.size:
                np.add.at(A[x], self.freqs[x][1:], np.abs(a) ** rp * scale[x])
        return A


def conjugate(r: float) -> float:
    """Hoelder conjugate r' = r / (r - 1)."""
    if np.isinf(r):
        return 1.0
    if r <= 1:
        raise ValueError("conjugate exponent needs r > 1")
    return r / (r - 1.0)


class BitileArrays:
    """Column view (k, m, n) of a sorted bitile collection."""

    def __init__(self, bitiles: Iterable[Bitile]):
        self.items = tuple(sorted(set(bitiles)))
        self.k = np.array([P.k for P in self.items], dtype=np.int64)
        self.m = np.array([P.m for P in self.items], dtype=np.int64)
        self.n = np.array([P.n for P in self.items], dtype=np.int64)

    def __len__(self):
        return len(self.items)

    def coefficients(self, f: DyadicFunction, pc: list | None = None) -> np.ndarray:
        """<f, phi_{P_1}> for each bitile."""
        if pc is None:
            pc = packet_coefficients(f)
        return np.array([pc[k][m, 2 * n] for k, m, n in zip(self.k, self.m, self.n)])

    def interval_masses(self, w: Weight) -> np.ndarray:
        lo = self.m << (w.res - self.k)
        hi = (self.m + 1) << (w.res - self.k)
        return w.prefix[hi] - w.prefix[lo]

    def energies(self, f: DyadicFunction, w: Weight, pc: list | None = None) -> np.ndarray:
        """|<f, phi_{P_1}>|^2 w(I_P) / |I_P| = ||S_{P} f||_{L^2(w)}^2."""
        c = self.coefficients(f, pc)
        return c ** 2 * self.interval_masses(w) * (2.0 ** self.k)


def _check_resolvable(bitiles: Sequence[Bitile], res: int):
    for P in bitiles:
        if not P.resolvable(res):
            raise ValueError(f"bitile {P} is not resolvable at res {res}")


def tree_square_function(T: Tree | Iterable[Bitile], f: DyadicFunction) -> DyadicFunction:
    """S_T f = (sum_P |<f, phi_{P_1}>|^2 1_{I_P} / |I_P|)^(1/2)."""
    members = T.members if isinstance(T, Tree) else frozenset(T)
    _check_resolvable(list(members), f.res)
    arr = BitileArrays(members)
    out = np.zeros(1 << f.res)
    if len(arr):
        c = arr.coefficients(f)
        for i, P in enumerate(arr.items):
            out[P.interval.cells(f.res)] += c[i] ** 2 * 2.0 ** P.k
    return DyadicFunction(np.sqrt(out))


# -- candidate tops ---------------------------------------------------------

def size_tops(P: Bitile) -> list[Bitile]:
    """Every bitile Q with P_2 < Q_2 (P itself included)."""
    out = [P]
    for kq in range(P.k - 1, -1, -1):
        d = P.k - kq
        base = (2 * P.n + 1) << (d - 1)
        mq = P.m >> d
        out.extend(Bitile(kq, mq, base + t) for t in range(1 << (d - 1)))
    return out


def density_tops(P: Bitile) -> list[Bitile]:
    """Every bitile Q with P < Q, i.e. I_P in I_Q and omega_Q in omega_P."""
    out = []
    for kq in range(P.k, -1, -1):
        d = P.k - kq
        mq = P.m >> d
        out.extend(Bitile(kq, mq, (P.n << d) + t) for t in range(1 << d))
    return out


def _as_arrays(tops: Iterable[Bitile]):
    tops = list(tops)
    return (np.array([Q.k for Q in tops], dtype=np.int64),
            np.array([Q.m for Q in tops], dtype=np.int64),
            np.array([Q.n for Q in tops], dtype=np.int64))


def _upper_below(arr: BitileArrays, qk, qm, qn) -> np.ndarray:
    """Boolean matrix [q, p]: P_2 < Q_2 evaluated from interval arithmetic."""
    pk, pm, pn = arr.k[None, :], arr.m[None, :], arr.n[None, :]
    qk, qm, qn = qk[:, None], qm[:, None], qn[:, None]
    shift = np.maximum(pk - qk, 0)
    time_ok = (pk >= qk) & ((pm >> shift) == qm)
    # upper tiles: [ (2n+1) 2^k, (2n+2) 2^k )
    plo, phi = (2 * pn + 1) << pk, (2 * pn + 2) << pk
    qlo, qhi = (2 * qn + 1) << qk, (2 * qn + 2) << qk
    return time_ok & (plo < qhi) & (qlo < phi)


def size(bitiles: Iterable[Bitile], f: DyadicFunction, w: Weight, *, return_top: bool = False):
    """Best constant C with ||S_T f||_{L^2(w)} <= C w(I_T)^(1/2) over 2-overlapping trees.

    For a fixed top Q the largest admissible tree is {P : P_2 < Q_2}, so the
    supremum runs over tops only.
    """
    arr = BitileArrays(bitiles)
    if len(arr) == 0:
        return (0.0, None) if return_top else 0.0
    _check_resolvable(arr.items, f.res)
    e = arr.energies(f, w)
    tops = sorted({Q for P in arr.items for Q in size_tops(P)})
    qk, qm, qn = _as_arrays(tops)
    best, best_q = 0.0, None
    chunk = max(1, 2_000_000 // len(arr))
    for s in range(0, len(tops), chunk):
        sl = slice(s, s + chunk)
        num = _upper_below(arr, qk[sl], qm[sl], qn[sl]).astype(np.float64) @ e
        wq = (w.prefix[(qm[sl] + 1) << (w.res - qk[sl])] - w.prefix[qm[sl] << (w.res - qk[sl])])
        ratio = num / wq
        i = int(np.argmax(ratio))
        if ratio[i] > best:
            best, best_q = float(ratio[i]), tops[s + i]
    val = float(np.sqrt(best))
    return (val, best_q) if return_top else val


def _density_table(A: np.ndarray, w: Weight, kq: int) -> np.ndarray:
    """Z[m, n] = int over I_(kq,m) of the mass with frequencies in omega_(kq,n),
    normalised by w(I).  Computed by block reduction."""
    K = A.shape[0]
    # the extra frequency slot 2**res lies in no omega
    blocks = A[:, :K].reshape(1 << kq, K >> kq, K >> (kq + 1), 1 << (kq + 1))
    Z = blocks.sum(axis=(1, 3))
    return Z / w.interval_masses(kq)[:, None]


def density(bitiles: Iterable[Bitile], lin: Linearization, g: DyadicFunction, w: Weight, r: float,
            *, return_top: bool = False):
    """sup over P and Q > P of (w(I_Q)^-1 int_{I_Q} |g|^r' sum_{N_k in omega_Q} |a_k|^r' w)^(1/r')."""
    if r <= 2:
        raise ValueError("density is defined for r > 2")
    if lin.r != r:
        raise ValueError("linearization was built for a different r")
    items = sorted(set(bitiles))
    if not items:
        return (0.0, None) if return_top else 0.0
    _check_resolvable(items, g.res)
    A = lin.mass_array(g, w)
    tables = {}
    best, best_q = 0.0, None
    for P in items:
        for Q in density_tops(P):
            if Q.k not in tables:
                tables[Q.k] = _density_table(A, w, Q.k)
            v = tables[Q.k][Q.m, Q.n]
            if v > best:
                best, best_q = float(v), Q
    val = best ** (1.0 / conjugate(r))
    return (val, best_q) if return_top else val


def counting_function(forest: Iterable[Tree], res: int) -> DyadicFunction:
    """N(x) = number of trees whose top interval contains x."""
    out = np.zeros(1 << res)
    for T in forest:
        out[T.interval.cells(res)] += 1.0
    return DyadicFunction(out)


# -- text format ------------------------------------------------------------

class BitileParseError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


def parse_bitiles(text: str) -> list[Bitile]:
    """One bitile per line as ``k m n``; ``#`` starts a comment."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise BitileParseError(lineno, f"expected 3 integers 'k m n', got {raw!r}")
        try:
            k, m, n = (int(s) for s in parts)
        except ValueError:
            raise BitileParseError(lineno, f"non-integer field in {raw!r}") from None
        try:
            out.append(Bitile(k, m, n))
        except ValueError as exc:
            raise BitileParseError(lineno, str(exc)) from None
    return out


def format_bitiles(bitiles: Iterable[Bitile], header: str | None = None) -> str:
    lines = [f"# {header}"] if header else []
    lines += [f"{P.k} {P.m} {P.n}" for P in sorted(set(bitiles))]
    return "\n".join(lines) + "\n"


def read_bitiles(path) -> list[Bitile]:
    with open(path, encoding="utf-8") as fh:
        return parse_bitiles(fh.read())


def write_bitiles(path, bitiles: Iterable[Bitile], header: str | None = None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_bitiles(bitiles, header))


def weak_l1_norm(values, w: Weight) -> float:
    """||g||_{L^{1,inf}(w)} = sup_lambda lambda w(|g| > lambda), exact by a
    sweep over the value set."""
    v = np.abs(np.asarray(getattr(values, "values", values), dtype=np.float64))
    order = np.argsort(-v, kind="stable")
    mass = np.cumsum(w.values[order]) / v.size
    sv = v[order]
    # lambda just below sv[i] catches every cell with |g| >= sv[i]
    last = np.r_[sv[1:] != sv[:-1], True]
    return float(np.max(sv[last] * mass[last])) if v.size else 0.0


def bmo_sides(bitiles: Iterable[Bitile], f: DyadicFunction, w: Weight, p: float) -> tuple[float, float]:
    """Both sides of the BMO characterization of size:
    sup_T ||S_T f||_{L^p(w)} / w(I_T)^(1/p) and sup_T ||S_T f||_{L^{1,inf}(w)} / w(I_T),
    over maximal 2-overlapping trees (one per candidate top)."""
    arr = BitileArrays(bitiles)
    if len(arr) == 0:
        return 0.0, 0.0
    res = f.res
    pc = packet_coefficients(f)
    c2 = arr.coefficients(f, pc) ** 2 * 2.0 ** arr.k
    tops = sorted({Q for P in arr.items for Q in size_tops(P)})
    qk, qm, qn = _as_arrays(tops)
    inc = _upper_below(arr, qk, qm, qn)
    lhs = rhs = 0.0
    for i, Q in enumerate(tops):
        sq = np.zeros(1 << res)
        for j in np.nonzero(inc[i])[0]:
            P = arr.items[j]
            sq[P.interval.cells(res)] += c2[j]
        S = np.sqrt(sq)
        wq = w.measure(Q.interval)
        lhs = max(lhs, float((np.sum(S ** p * w.values) / S.size) ** (1 / p)) / wq ** (1 / p))
        rhs = max(rhs, weak_l1_norm(S, w) / wq)
    return lhs, rhs
