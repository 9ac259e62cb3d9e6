"""Representation-theoretic constants and combinatorics for su(2)_k.

Everything here is exact: parameters are :class:`fractions.Fraction` and the
counting functions work on plain integers.  Spin labels ``j`` are twice the
spin, so the bcc operator (spin 1/2) carries ``j = 1`` and the weight
``j * Lambda`` is the spin-``j/2`` representation.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

__all__ = [
    "ModelParams",
    "GeneralAlgebraData",
    "ArchTopology",
    "FusionPath",
    "model_params",
    "su2_data",
    "conformal_weight",
    "central_charge",
    "kostka",
    "enumerate_arch_topologies",
    "enumerate_fusion_paths",
    "tensor_decomposition_oracle",
]


@dataclass(frozen=True)
class GeneralAlgebraData:
    """Lie algebra data entering the Sugawara construction."""

    dim_g: int
    dual_coxeter: int

    def casimir(self, j: int) -> Fraction:
        """(lambda, lambda + 2 rho) for lambda = j * Lambda (su(2) only)."""
        return Fraction(j * (j + 2), 2)


def su2_data() -> GeneralAlgebraData:
    return GeneralAlgebraData(dim_g=3, dual_coxeter=2)


def central_charge(k: int, data: GeneralAlgebraData | None = None) -> Fraction:
    data = data or su2_data()
    return Fraction(k * data.dim_g, k + data.dual_coxeter)


def conformal_weight(k: int, j: int, data: GeneralAlgebraData | None = None) -> Fraction:
    """h = (lambda, lambda + 2 rho) / (2 (k + h_dual))."""
    data = data or su2_data()
    return data.casimir(j) / (2 * (k + data.dual_coxeter))


@dataclass(frozen=True)
class ModelParams:
    """Level-k constants of the su(2)_k multiple SLE.

    For ``k = 1`` only ``kappa + 2 tau = 4`` is fixed by the null-state
    condition; the convention ``kappa = 4, tau = 0`` (the c = 1 point) is
    stored here so no downstream code has to re-derive it.
    """

    k: int
    kappa: Fraction
    tau: Fraction
    central_charge: Fraction

    def weight_of(self, j: int) -> Fraction:
        if not 0 <= j <= self.k:
            raise ValueError(f"weight {j}*Lambda does not exist at level {self.k}")
        return conformal_weight(self.k, j)

    @property
    def h_fund(self) -> Fraction:
        return self.weight_of(1)

    @property
    def h_adj(self) -> Fraction:
        """h_{2 Lambda}; only defined for k >= 2."""
        return self.weight_of(2)

    def delta(self, channel: int) -> Fraction:
        """Two-point exponent h_{channel*Lambda} - 2 h_Lambda for channel 0 or 2."""
        if channel not in (0, 2):
            raise ValueError("channel must be 0 or 2")
        return self.weight_of(channel) - 2 * self.h_fund

    def as_floats(self) -> dict[str, float]:
        return {
            "kappa": float(self.kappa),
            "tau": float(self.tau),
            "c": float(self.central_charge),
            "h_fund": float(self.h_fund),
        }


def model_params(k: int) -> ModelParams:
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"level must be a positive integer, got {k!r}")
    if k == 1:
        kappa, tau = Fraction(4), Fraction(0)
    else:
        kappa, tau = Fraction(4 * (k + 2), k + 3), Fraction(2, k + 3)
    return ModelParams(k=k, kappa=kappa, tau=tau, central_charge=central_charge(k))


def kostka(m: int, n: int) -> int:
    """c_{m,n} = C(m, n) - C(m, n-1): multiplicity of L_{(m-2n)Lambda} in L_Lambda^{(x)m}."""
    if m < 0 or n < 0 or 2 * n > m:
        raise ValueError(f"need 0 <= n <= m/2, got m={m}, n={n}")
    return comb(m, n) - (comb(m, n - 1) if n >= 1 else 0)


@dataclass(frozen=True, order=True)
class ArchTopology:
    """Pairing of the seeds 1..m into arches, the rest running to infinity.

    Indices are 1-based and pairs are stored as sorted ``(a, b)`` tuples with
    ``a < b``; the dataclass ordering is lexicographic on ``pairs``.
    """

    m: int
    pairs: tuple[tuple[int, int], ...]
    rays: tuple[int, ...] = field(default=())

    def __post_init__(self):
        pairs = tuple(sorted(tuple(sorted(p)) for p in self.pairs))
        object.__setattr__(self, "pairs", pairs)
        used = [i for p in pairs for i in p]
        rays = tuple(sorted(set(range(1, self.m + 1)) - set(used)))
        if self.rays and tuple(sorted(self.rays)) != rays:
            raise ValueError("rays must be exactly the unpaired indices")
        object.__setattr__(self, "rays", rays)
        if len(set(used)) != len(used) or any(not 1 <= i <= self.m for i in used):
            raise ValueError(f"invalid pairing {pairs} for m={self.m}")

    @property
    def n(self) -> int:
        return len(self.pairs)

    def is_planar(self) -> bool:
        for (a, b), (c, d) in itertools.combinations(self.pairs, 2):
            if a < c < b < d or c < a < d < b:
                return False
        return not any(a < r < b for a, b in self.pairs for r in self.rays)

    def label(self) -> str:
        parts = [f"({a},{b})" for a, b in self.pairs] + [f"{r}->inf" for r in self.rays]
        return " ".join(parts) if parts else "empty"


def enumerate_arch_topologies(m: int, n: int) -> list[ArchTopology]:
    """All planar arch systems with n arches on m ordered seeds, sorted."""
    if m < 0 or n < 0 or 2 * n > m:
        raise ValueError(f"need 0 <= 2n <= m, got m={m}, n={n}")

    # Reading left to right, a seed either opens an arch, closes the innermost
    # open one, or (only when nothing is open) runs to infinity.
    out: list[tuple[tuple[int, int], ...]] = []

    def walk(i: int, stack: list[int], pairs: list[tuple[int, int]], rays: int):
        if i > m:
            if not stack and len(pairs) == n:
                out.append(tuple(pairs))
            return
        remaining = m - i + 1
        if len(pairs) + len(stack) < n and len(stack) < remaining:
            walk(i + 1, stack + [i], pairs, rays)
        if stack:
            walk(i + 1, stack[:-1], pairs + [(stack[-1], i)], rays)
        elif rays < m - 2 * n:
            walk(i + 1, stack, pairs, rays + 1)

    walk(1, [], [], 0)
    return sorted(ArchTopology(m, p) for p in out)


@dataclass(frozen=True)
class FusionPath:
    """Spin labels j_0 = 0, j_1 = 1, ..., j_m along successive fusions with psi_Lambda."""

    labels: tuple[int, ...]

    @property
    def final(self) -> int:
        return self.labels[-1]


def enumerate_fusion_paths(k: int, m: int, j_final: int) -> list[FusionPath]:
    if k < 1 or m < 1:
        raise ValueError("need k >= 1 and m >= 1")
    if not 0 <= j_final <= k:
        raise ValueError(f"weight {j_final}*Lambda is forbidden at level {k}")
    paths: list[FusionPath] = []

    def walk(labels: list[int]):
        if len(labels) == m + 1:
            if labels[-1] == j_final:
                paths.append(FusionPath(tuple(labels)))
            return
        j = labels[-1]
        # psi_j x psi_1 = psi_{j-1} + psi_{j+1}, truncated at j+1 <= 2k - j - 1
        for nxt in (j - 1, j + 1):
            if 0 <= nxt <= min(j + 1, 2 * k - j - 1):
                walk(labels + [nxt])

    walk([0])
    return paths


def tensor_decomposition_oracle(m: int) -> dict[int, int]:
    """Multiplicities of L_{j Lambda} in L_Lambda^{(x)m} by brute-force weight counting.

    Enumerates all 2^m product states, tallies their J^3 weights and peels
    off irreducibles from the top weight down.  Independent of the fusion
    rules and of the Kostka formula.
    """
    if not 1 <= m <= 12:
        raise ValueError("oracle is limited to 1 <= m <= 12")
    weights = Counter(sum(s) for s in itertools.product((1, -1), repeat=m))
    mult: dict[int, int] = {}
    for top in range(m, -1, -2):
        c = weights[top] - weights[top + 2]
        if c:
            mult[top] = c
    return mult
