"""Bell inequalities as a marginal problem.

Four bivariate tables ``p_ij(a, b)`` (setting ``i`` on side A, ``j`` on side
B, outcomes ``a, b`` in ``{+1, -1}``) are consistent with one quadrivariate
distribution ``q(a1, a2, b1, b2)`` iff a 16-variable linear system has a
nonnegative solution.  For no-signalling tables this is equivalent to the
eight CHSH inequalities (Fine); both routes are implemented independently.

Array layout: outcome index 0 is ``+1`` and index 1 is ``-1``; tables are
stored as ``p[i, j, a, b]`` with zero-based settings.
"""

from __future__ import annotations

import csv
import functools
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import linprog, nnls

from .errors import MarginalError, NoSignallingError, SingularCovarianceError
from .kernels import SpectralKernel
from .smearing import covariance_matrix

TOL = 1e-9
OUTCOMES = (1, -1)
_SYMBOL = {1: "+", -1: "-"}
_FROM_SYMBOL = {"+": 1, "-": -1, "+1": 1, "-1": -1, "1": 1}


def chsh_value(E11, E12, E21, E22) -> float:
    """S = E11 + E12 + E21 - E22."""
    for e in (E11, E12, E21, E22):
        if abs(e) > 1 + 1e-12:
            raise ValueError(f"correlator {e} outside [-1, 1]")
    return E11 + E12 + E21 - E22


def chsh_patterns(E) -> list[tuple[tuple[int, int, int, int], float]]:
    """All eight CHSH combinations ``sum s_ij E_ij`` with one odd sign.

    ``E`` is indexed ``E[i][j]``; the returned sign tuples are ordered
    ``(s11, s12, s21, s22)``.
    """
    flat = [E[0][0], E[0][1], E[1][0], E[1][1]]
    out = []
    for minus in range(4):
        for overall in (1, -1):
            signs = tuple(overall * (-1 if p == minus else 1) for p in range(4))
            out.append((signs, sum(s * e for s, e in zip(signs, flat))))
    return out


def sign_correlator(rho: float) -> float:
    """E[sgn X sgn Y] for standard bivariate normal X, Y with correlation rho."""
    if abs(rho) > 1 + 1e-12:
        raise ValueError(f"correlation {rho} outside [-1, 1]")
    return 2.0 / math.pi * math.asin(max(-1.0, min(1.0, rho)))


# ---------------------------------------------------------------------------
# marginal tables


@dataclass
class MarginalSet:
    tables: np.ndarray
    exact: bool = False
    tol: float = TOL

    def __post_init__(self):
        t = np.array(self.tables, dtype=object if self.exact else float)
        if t.shape != (2, 2, 2, 2):
            raise MarginalError(f"need four 2x2 tables, got shape {t.shape}")
        if self.exact:
            t = np.vectorize(Fraction, otypes=[object])(t)
        self.tables = t

    @classmethod
    def from_correlators(cls, E, a_means=(0, 0), b_means=(0, 0), exact=False) -> "MarginalSet":
        """Tables ``(1 + a<A_i> + b<B_j> + ab E_ij) / 4``."""
        num = Fraction if exact else float
        t = np.empty((2, 2, 2, 2), dtype=object if exact else float)
        for i, j, ia, ib in itertools.product(range(2), repeat=4):
            a, b = OUTCOMES[ia], OUTCOMES[ib]
            t[i, j, ia, ib] = (
                num(1) + a * num(a_means[i]) + b * num(b_means[j]) + a * b * num(E[i][j])
            ) / 4
        return cls(t, exact=exact)

    @classmethod
    def from_boxes(cls, weights: Sequence[float], boxes: Sequence["MarginalSet"]) -> "MarginalSet":
        t = sum(w * np.asarray(b.tables, dtype=float) for w, b in zip(weights, boxes))
        return cls(t)

    def correlators(self) -> np.ndarray:
        E = np.empty((2, 2), dtype=object if self.exact else float)
        for i, j in itertools.product(range(2), repeat=2):
            p = self.tables[i, j]
            E[i, j] = p[0, 0] - p[0, 1] - p[1, 0] + p[1, 1]
        return E

    def a_marginal(self, i: int, j: int):
        return self.tables[i, j].sum(axis=1)

    def b_marginal(self, i: int, j: int):
        return self.tables[i, j].sum(axis=0)

    def validate(self):
        """Raise on malformed tables, then on signalling marginals."""
        tol = 0 if self.exact else self.tol
        t = self.tables
        if not self.exact and not np.all(np.isfinite(t)):
            raise MarginalError("non-finite probability")
        for i, j in itertools.product(range(2), repeat=2):
            p = t[i, j]
            if min(p.ravel()) < -tol:
                raise MarginalError(f"table ({i + 1},{j + 1}) has a negative entry")
            if abs(sum(p.ravel()) - 1) > tol:
                raise MarginalError(f"table ({i + 1},{j + 1}) sums to {sum(p.ravel())}, not 1")
        for i in range(2):
            if max(abs(x) for x in self.a_marginal(i, 0) - self.a_marginal(i, 1)) > tol:
                raise NoSignallingError(f"A's marginal under setting {i + 1} depends on B's setting")
        for j in range(2):
            if max(abs(x) for x in self.b_marginal(0, j) - self.b_marginal(1, j)) > tol:
                raise NoSignallingError(f"B's marginal under setting {j + 1} depends on A's setting")
        return self

    # --- serialization

    def to_dict(self) -> dict:
        fmt = (lambda x: str(x)) if self.exact else float
        tables = {}
        for i, j in itertools.product(range(2), repeat=2):
            tables[f"{i + 1}{j + 1}"] = {
                _SYMBOL[a] + _SYMBOL[b]: fmt(self.tables[i, j, ia, ib])
                for (ia, a), (ib, b) in itertools.product(enumerate(OUTCOMES), repeat=2)
            }
        return {"exact": self.exact, "tables": tables}

    @classmethod
    def from_dict(cls, data: dict, exact: bool | None = None) -> "MarginalSet":
        exact = bool(data.get("exact", False)) if exact is None else exact
        num = Fraction if exact else float
        t = np.zeros((2, 2, 2, 2), dtype=object if exact else float)
        seen = set()
        try:
            for key, table in data["tables"].items():
                i, j = int(key[0]) - 1, int(key[1]) - 1
                for outcome, p in table.items():
                    a, b = _FROM_SYMBOL[outcome[0]], _FROM_SYMBOL[outcome[1]]
                    t[i, j, OUTCOMES.index(a), OUTCOMES.index(b)] = num(p)
                    seen.add((i, j, a, b))
        except (KeyError, ValueError, IndexError, TypeError) as exc:
            raise MarginalError(f"malformed marginal JSON: {exc}") from exc
        if len(seen) != 16:
            raise MarginalError(f"expected 16 table entries, found {len(seen)}")
        return cls(t, exact=exact)

    @classmethod
    def from_json(cls, text: str, exact: bool | None = None) -> "MarginalSet":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MarginalError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data, exact)

    def to_csv(self) -> str:
        rows = ["i,j,a,b,p"]
        for i, j, ia, ib in itertools.product(range(2), repeat=4):
            p = self.tables[i, j, ia, ib]
            rows.append(f"{i + 1},{j + 1},{OUTCOMES[ia]},{OUTCOMES[ib]},{p if self.exact else repr(float(p))}")
        return "\n".join(rows) + "\n"

    @classmethod
    def from_csv(cls, text: str, exact: bool = False) -> "MarginalSet":
        num = Fraction if exact else float
        t = np.zeros((2, 2, 2, 2), dtype=object if exact else float)
        seen = set()
        try:
            for row in csv.DictReader(text.splitlines()):
                i, j = int(row["i"]) - 1, int(row["j"]) - 1
                a, b = int(row["a"]), int(row["b"])
                if i not in (0, 1) or j not in (0, 1) or a not in OUTCOMES or b not in OUTCOMES:
                    raise ValueError(f"bad row {row}")
                t[i, j, OUTCOMES.index(a), OUTCOMES.index(b)] = num(row["p"].strip())
                seen.add((i, j, a, b))
        except (KeyError, ValueError, TypeError) as exc:
            raise MarginalError(f"malformed marginal CSV: {exc}") from exc
        if len(seen) != 16:
            raise MarginalError(f"expected 16 table entries, found {len(seen)}")
        return cls(t, exact=exact)


# canonical boxes

def product_box(pa=(0.5, 0.5), pb=(0.5, 0.5)) -> MarginalSet:
    """Independent sides, ``pa[i] = P(A_i = +1)``."""
    t = np.empty((2, 2, 2, 2))
    for i, j in itertools.product(range(2), repeat=2):
        A = np.array([pa[i], 1 - pa[i]])
        B = np.array([pb[j], 1 - pb[j]])
        t[i, j] = np.outer(A, B)
    return MarginalSet(t)


def pr_box() -> MarginalSet:
    return MarginalSet.from_correlators([[1, 1], [1, -1]])


def uniform_box() -> MarginalSet:
    return MarginalSet.from_correlators([[0, 0], [0, 0]])


def tsirelson_box() -> MarginalSet:
    h = math.sqrt(0.5)
    return MarginalSet.from_correlators([[h, h], [h, -h]])


def deterministic_box(a1: int, a2: int, b1: int, b2: int) -> MarginalSet:
    t = np.zeros((2, 2, 2, 2))
    A, B = (a1, a2), (b1, b2)
    for i, j in itertools.product(range(2), repeat=2):
        t[i, j, OUTCOMES.index(A[i]), OUTCOMES.index(B[j])] = 1.0
    return MarginalSet(t)


# ---------------------------------------------------------------------------
# feasibility


# joint outcomes (a1, a2, b1, b2), ordered lexicographically with +1 first
JOINT_OUTCOMES = tuple(itertools.product(OUTCOMES, repeat=4))


def marginal_matrix() -> np.ndarray:
    """16x16 0/1 matrix mapping q(a1, a2, b1, b2) to p[i, j, a, b] (C order)."""
    return _marginal_matrix().copy()


@functools.lru_cache(maxsize=1)
def _marginal_matrix() -> np.ndarray:
    A = np.zeros((16, 16))
    for row, (i, j, ia, ib) in enumerate(itertools.product(range(2), repeat=4)):
        for col, (a1, a2, b1, b2) in enumerate(JOINT_OUTCOMES):
            if (a1, a2)[i] == OUTCOMES[ia] and (b1, b2)[j] == OUTCOMES[ib]:
                A[row, col] = 1.0
    return A


@dataclass
class FeasibilityResult:
    feasible: bool
    witness: np.ndarray | None = None  # q[a1, a2, b1, b2], index 0 = +1
    certificate: dict | None = None
    chsh_max: float = 0.0
    residual: float = 0.0
    exact: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "feasible" if self.feasible else "infeasible"

    def to_dict(self) -> dict:
        num = str if self.exact else float
        out = {"verdict": self.verdict, "chsh_max": num(self.chsh_max)}
        if self.witness is not None:
            flat = self.witness.reshape(-1)
            out["witness"] = {
                "".join(_SYMBOL[o] for o in outcome): num(q) for outcome, q in zip(JOINT_OUTCOMES, flat)
            }
            out["max_marginal_residual"] = num(self.residual)
        if self.certificate is not None:
            out["certificate"] = {k: (num(v) if k == "value" else v) for k, v in self.certificate.items()}
        return out


def fine_criterion(marginals: MarginalSet, tol: float = TOL) -> tuple[bool, tuple, float]:
    """CHSH route: feasible iff all eight CHSH values are <= 2 (+ tol)."""
    signs, value = max(chsh_patterns(marginals.correlators()), key=lambda sv: sv[1])
    bound = 2 if marginals.exact else 2 + tol
    return value <= bound, signs, value


def _certificate(marginals: MarginalSet) -> tuple[dict, float]:
    signs, value = max(chsh_patterns(marginals.correlators()), key=lambda sv: sv[1])
    return {"inequality": "CHSH", "signs": list(signs), "bound": 2, "value": value}, value


def _lp_float(p: np.ndarray, tol: float):
    """min t s.t. |A q - p| <= t, sum q = 1, q >= 0."""
    A = _marginal_matrix()
    ones = np.ones((16, 1))
    A_ub = np.block([[A, -ones], [-A, -ones]])
    b_ub = np.concatenate([p, -p])
    A_eq = np.concatenate([np.ones(16), [0.0]])[None, :]
    c = np.zeros(17)
    c[-1] = 1.0
    res = linprog(
        c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0], bounds=[(0, None)] * 17, method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise RuntimeError(f"LP solver failed: {res.message}")
    return max(res.x[-1], 0.0), res.x[:16]


def _polish(q: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Tighten a feasible LP witness with nonnegative least squares; keep the better one."""
    A = _marginal_matrix()
    system = np.vstack([A, np.ones(16)])
    target = np.concatenate([p, [1.0]])
    best = None
    for cand in (nnls(system, target)[0], q):
        cand = np.clip(cand, 0.0, None)
        cand = cand / cand.sum()
        err = np.abs(A @ cand - p).max()
        if best is None or err < best[0]:
            best = (err, cand)
    return best[1]


def _product_witness(marginals: MarginalSet, tol: float):
    """Fully factorized q when the four tables are themselves products, else None."""
    t = marginals.tables
    a = [marginals.a_marginal(i, 0) for i in range(2)]
    b = [marginals.b_marginal(0, j) for j in range(2)]
    q = np.einsum("i,j,k,l->ijkl", a[0], a[1], b[0], b[1]) if not marginals.exact else np.array(
        [a[0][w] * a[1][x] * b[0][y] * b[1][z] for w, x, y, z in itertools.product(range(2), repeat=4)],
        dtype=object,
    ).reshape(2, 2, 2, 2)
    gap = witness_marginals(q) - t
    if max(abs(x) for x in gap.ravel()) <= (0 if marginals.exact else tol):
        return q
    return None


def joint_feasible(marginals: MarginalSet, tol: float | None = None) -> FeasibilityResult:
    """Decide whether one q(a1, a2, b1, b2) has the four tables as marginals.

    Product tables get the fully factorized witness; otherwise the witness is
    whatever vertex the solver lands on.
    """
    marginals.validate()
    tol = marginals.tol if tol is None else tol
    cert, chsh_max = _certificate(marginals)
    product = _product_witness(marginals, tol)
    if product is not None:
        residual = max(abs(x) for x in (witness_marginals(product) - marginals.tables).ravel())
        return FeasibilityResult(
            True, witness=product, chsh_max=chsh_max, exact=marginals.exact,
            residual=residual if marginals.exact else float(residual),
        )
    if marginals.exact:
        witness = _simplex_exact(marginals)
        if witness is None:
            return FeasibilityResult(False, certificate=cert, chsh_max=chsh_max, exact=True)
        return FeasibilityResult(True, witness=witness.reshape(2, 2, 2, 2), chsh_max=chsh_max, exact=True)
    p = marginals.tables.reshape(-1).astype(float)
    t, q = _lp_float(p, tol)
    if t > tol:
        return FeasibilityResult(False, certificate=cert, chsh_max=chsh_max, extra={"lp_residual": t})
    q = _polish(q, p)
    residual = float(np.abs(_marginal_matrix() @ q - p).max())
    return FeasibilityResult(True, witness=q.reshape(2, 2, 2, 2), chsh_max=chsh_max, residual=residual)


def witness_marginals(q: np.ndarray) -> np.ndarray:
    """Tables p[i, j, a, b] implied by a joint q[a1, a2, b1, b2]."""
    q = np.asarray(q)
    t = np.empty((2, 2, 2, 2), dtype=q.dtype)
    for i, j in itertools.product(range(2), repeat=2):
        # drop the other A setting, leaving axes (a_i, b1, b2), then the other B setting
        t[i, j] = q.sum(axis=1 - i).sum(axis=2 - j)
    return t


def _simplex_exact(marginals: MarginalSet):
    """Phase-I simplex in exact rationals with Bland's rule; q or None."""
    A = [[Fraction(int(x)) for x in row] for row in marginal_matrix()]
    A.append([Fraction(1)] * 16)
    b = [Fraction(x) for x in marginals.tables.reshape(-1)] + [Fraction(1)]
    m, n = len(A), 16
    # tableau rows: [A | I | b], artificials keep b >= 0 (b is a probability vector here)
    tab = [A[r] + [Fraction(int(r == c)) for c in range(m)] + [b[r]] for r in range(m)]
    basis = [n + r for r in range(m)]
    ncol = n + m
    cost = [Fraction(0)] * n + [Fraction(1)] * m
    while True:
        # reduced costs of the phase-I objective
        red = [cost[c] - sum(cost[basis[r]] * tab[r][c] for r in range(m)) for c in range(ncol)]
        enter = next((c for c in range(ncol) if red[c] < 0), None)
        if enter is None:
            break
        ratios = [(tab[r][-1] / tab[r][enter], basis[r], r) for r in range(m) if tab[r][enter] > 0]
        if not ratios:
            break
        _, _, leave = min(ratios)
        piv = tab[leave][enter]
        tab[leave] = [x / piv for x in tab[leave]]
        for r in range(m):
            if r != leave and tab[r][enter] != 0:
                f = tab[r][enter]
                tab[r] = [x - f * y for x, y in zip(tab[r], tab[leave])]
        basis[leave] = enter
    if any(basis[r] >= n and tab[r][-1] != 0 for r in range(m)):
        return None
    q = np.array([Fraction(0)] * n, dtype=object)
    for r in range(m):
        if basis[r] < n:
            q[basis[r]] = tab[r][-1]
    return q


# ---------------------------------------------------------------------------
# random-field CHSH


def field_correlators(fA1, fA2, fB1, fB2, kernel: SpectralKernel, **quad_kw) -> np.ndarray:
    """E_ij = <sgn chi_{A_i} sgn chi_{B_j}> for sign-binned smeared observables."""
    C = covariance_matrix([fA1, fA2, fB1, fB2], kernel, **quad_kw)
    return correlators_from_covariance(C)


def correlators_from_covariance(C: np.ndarray) -> np.ndarray:
    C = np.asarray(C, dtype=float)
    sd = np.sqrt(np.clip(np.diag(C), 0, None))
    if np.any(sd <= 0):
        raise SingularCovarianceError("an observable has zero variance; its sign is undefined")
    E = np.empty((2, 2))
    for i, j in itertools.product(range(2), repeat=2):
        E[i, j] = sign_correlator(C[i, 2 + j] / (sd[i] * sd[2 + j]))
    return E


def field_chsh(fA1, fA2, fB1, fB2, kernel: SpectralKernel, **quad_kw) -> float:
    """CHSH value of four sign-binned smeared observables of one Gaussian field."""
    E = field_correlators(fA1, fA2, fB1, fB2, kernel, **quad_kw)
    return chsh_value(E[0, 0], E[0, 1], E[1, 0], E[1, 1])
