"""Normal ordering of affine su(2)_k and Virasoro modes on a highest-weight multiplet.

Only what the level-2 null-state check needs: words whose result sits at
affine level <= 2, the commutators

    [J^a_n, J^b_m] = i sqrt(2) eps_abc J^c_{n+m} + k n delta_ab delta_{n+m,0}
    [L_n, J^a_m]   = -m J^a_{n+m}
    [L_n, L_m]     = (n - m) L_{n+m} + c/12 (n^3 - n) delta_{n+m,0}

and the zero-mode action on the (j+1)-dimensional multiplet.  The sqrt(2) is
the orthonormal-Killing normalisation in which long roots have length^2 = 2,
so that h_dual = 2 and sum_a t^a t^a = j(j+2)/2.  L and J are kept as
independent symbols; the Sugawara relation only holds modulo the radical of
the Shapovalov form, which is all the residual computation sees.

A state is a dict mapping a word of creation modes (leftmost acts last) to a
(j+1) x (j+1) complex matrix whose column ``m`` is the multiplet vector the
word acts on when the input is the basis vector ``|m>``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .algebra import conformal_weight, central_charge

__all__ = [
    "Mode",
    "L",
    "J",
    "HighestWeightModule",
    "normal_order",
    "null_state_residual",
]

SQRT2 = np.sqrt(2.0)
MAX_LEVEL = 2


@dataclass(frozen=True)
class Mode:
    kind: str  # "L" or "J"
    n: int
    a: int = 0  # su(2) index 1..3 for J, 0 for L

    def dagger(self) -> "Mode":
        return Mode(self.kind, -self.n, self.a)

    def __repr__(self):
        return f"L_{self.n}" if self.kind == "L" else f"J^{self.a}_{self.n}"


def L(n: int) -> Mode:
    return Mode("L", n)


def J(a: int, n: int) -> Mode:
    if a not in (1, 2, 3):
        raise ValueError("su(2) index must be 1, 2 or 3")
    return Mode("J", n, a)


def _levi_civita(a: int, b: int, c: int) -> int:
    return int(np.sign((b - a) * (c - a) * (c - b)))


def spin_matrices(j: int) -> list[np.ndarray]:
    """Spin-j/2 matrices S^1, S^2, S^3 with [S^a, S^b] = i eps_abc S^c."""
    s = j / 2
    ms = s - np.arange(j + 1)  # basis ordered from the top weight down
    sp = np.zeros((j + 1, j + 1), dtype=complex)
    for i in range(1, j + 1):
        m = ms[i]
        sp[i - 1, i] = np.sqrt(s * (s + 1) - m * (m + 1))
    sm = sp.conj().T
    return [(sp + sm) / 2, (sp - sm) / 2j, np.diag(ms).astype(complex)]


class HighestWeightModule:
    """Level-k module generated from the spin-j/2 highest-weight multiplet."""

    def __init__(self, k: int, j: int):
        if k < 1 or not 0 <= j <= k:
            raise ValueError(f"need k >= 1 and 0 <= j <= k, got k={k}, j={j}")
        self.k, self.j = k, j
        self.dim = j + 1
        self.h = float(conformal_weight(k, j))
        self.c = float(central_charge(k))
        self.rho = [SQRT2 * s for s in spin_matrices(j)]

    # -- states -----------------------------------------------------------
    def vacuum(self) -> dict:
        return {(): np.eye(self.dim, dtype=complex)}

    @staticmethod
    def level(word: tuple[Mode, ...]) -> int:
        return -sum(m.n for m in word)

    def commutator(self, x: Mode, y: Mode) -> list[tuple[complex, Mode | None]]:
        """[x, y] as a list of (coefficient, mode); mode None is the identity."""
        n, m = x.n, y.n
        if x.kind == "J" and y.kind == "J":
            out: list[tuple[complex, Mode | None]] = []
            for c in (1, 2, 3):
                e = _levi_civita(x.a, y.a, c)
                if e:
                    out.append((1j * SQRT2 * e, J(c, n + m)))
            if x.a == y.a and n + m == 0 and n != 0:
                out.append((self.k * n, None))
            return out
        if x.kind == "L" and y.kind == "J":
            return [(-m, J(y.a, n + m))] if m else []
        if x.kind == "J" and y.kind == "L":
            return [(n, J(x.a, n + m))] if n else []
        out = [(n - m, L(n + m))] if n != m else []
        if n + m == 0 and n**3 - n != 0:
            out.append((self.c / 12 * (n**3 - n), None))
        return out

    def _apply_term(self, x: Mode, word: tuple[Mode, ...], mat: np.ndarray) -> dict:
        if x.n < 0:
            return {(x,) + word: mat}
        if not word:
            if x.n > 0:
                return {}
            if x.kind == "L":
                return {(): self.h * mat}
            return {(): self.rho[x.a - 1] @ mat}
        # x c rest = c (x rest) + [x, c] rest
        head, rest = word[0], word[1:]
        out: dict = {}
        for w, v in self._apply_term(x, rest, mat).items():
            _accumulate(out, (head,) + w, v)
        for coef, y in self.commutator(x, head):
            if y is None:
                _accumulate(out, rest, coef * mat)
            else:
                for w, v in self._apply_term(y, rest, mat).items():
                    _accumulate(out, w, coef * v)
        return out

    def apply(self, x: Mode, state: dict) -> dict:
        out: dict = {}
        for w, v in state.items():
            for w2, v2 in self._apply_term(x, w, v).items():
                _accumulate(out, w2, v2)
        return _prune(out)

    def apply_word(self, word: Iterable[Mode], state: dict | None = None) -> dict:
        """Apply ``word`` (written left to right, rightmost acts first)."""
        state = self.vacuum() if state is None else state
        for x in reversed(tuple(word)):
            state = self.apply(x, state)
        return state

    # -- Shapovalov form --------------------------------------------------
    def _reduce(self, word: tuple[Mode, ...], target: dict) -> np.ndarray:
        """<hw| word^dagger target>, a dim x dim matrix."""
        state = target
        for x in word:
            state = self.apply(x.dagger(), state)
        total = np.zeros((self.dim, self.dim), dtype=complex)
        for w, v in state.items():
            if w:
                raise RuntimeError(f"unreduced word {w} after full contraction")
            total += v
        return total

    def gram(self, u: dict, v: dict, sweep: str = "left") -> np.ndarray:
        """Matrix of <u_m', v_m> over multiplet components.

        ``sweep="left"`` contracts u's words onto v; ``"right"`` contracts v's
        onto u and takes the adjoint.  The two agree for a consistent engine.
        """
        if sweep == "right":
            return self.gram(v, u, "left").conj().T
        g = np.zeros((self.dim, self.dim), dtype=complex)
        for wu, mu in u.items():
            r = self._reduce(wu, v)
            g += mu.conj().T @ r
        return g

    def creation_words(self, level: int) -> list[tuple[Mode, ...]]:
        """Words of L_{-n}, J^a_{-n} (n >= 1) of total level ``level``; they span that level."""
        if level == 0:
            return [()]
        out = []
        for n in range(1, level + 1):
            for mode in [L(-n)] + [J(a, -n) for a in (1, 2, 3)]:
                out += [(mode,) + w for w in self.creation_words(level - n)]
        return out

    def pairing_residual(self, state: dict) -> float:
        """max over spanning words w of |<w psi, state>| (spectral norm over the multiplet).

        Zero exactly when ``state`` lies in the radical of the Shapovalov form.
        Linear in the state, so it does not lose half the digits the way
        ``norm`` (a square root of a Gram eigenvalue) does.
        """
        levels = {self.level(w) for w in state}
        r = 0.0
        for lev in levels:
            for w in self.creation_words(lev):
                g = self.gram(self.apply_word(w), state)
                r = max(r, float(np.linalg.norm(g, 2)))
        return r

    def norm(self, state: dict) -> float:
        g = self.gram(state, state)
        g = (g + g.conj().T) / 2
        return float(np.sqrt(max(np.linalg.eigvalsh(g).max(), 0.0)))


def _accumulate(out: dict, key, val):
    if key in out:
        out[key] = out[key] + val
    else:
        out[key] = val


def _prune(state: dict, tol: float = 0.0) -> dict:
    return {w: v for w, v in state.items() if np.abs(v).max() > tol}


def normal_order(word: Iterable[Mode], j: int, k: int) -> dict:
    """Normal form of ``word |psi_{j Lambda}>`` as a state dict."""
    word = tuple(word)
    module = HighestWeightModule(k, j)
    if HighestWeightModule.level(word) > MAX_LEVEL:
        raise ValueError(f"word {word} leaves the level <= {MAX_LEVEL} scope")
    return module.apply_word(word)


def null_state_residual(
    k: int, j: int, kappa: float | Fraction, tau: float | Fraction
) -> tuple[float, float]:
    """(r1, r2): size of J^b_1 chi and J^b_2 chi, maximised over b, for the level-2 candidate

    chi = (kappa/2 L_{-1}^2 - 2 L_{-2} + tau/2 sum_a J^a_{-1} J^a_{-1}) psi_{j Lambda}.

    Sizes are measured through the Shapovalov pairing with a spanning set of
    states at the same level, so both vanish iff chi is null.
    """
    module = HighestWeightModule(k, j)
    kappa, tau = float(kappa), float(tau)
    chi: dict = {}
    eye = np.eye(module.dim, dtype=complex)
    _accumulate(chi, (L(-1), L(-1)), kappa / 2 * eye)
    _accumulate(chi, (L(-2),), -2 * eye)
    for a in (1, 2, 3):
        _accumulate(chi, (J(a, -1), J(a, -1)), tau / 2 * eye)
    r1 = max(module.pairing_residual(module.apply(J(b, 1), chi)) for b in (1, 2, 3))
    r2 = max(module.pairing_residual(module.apply(J(b, 2), chi)) for b in (1, 2, 3))
    return r1, r2
