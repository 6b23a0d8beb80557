"""Quantum channels in Choi form, their tangents, and parametric families.

Choi convention: ``C = sum_ij |i><j| (x) Phi(|i><j|)`` with the input factor
first, so ``tr C = d_in`` and ``tr_out C = I_in`` for trace-preserving maps.
The 4-index view ``C.reshape(d_in, d_out, d_in, d_out)[i, a, j, b]`` equals
``<a| Phi(|i><j|) |b>``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .linalg import (
    X, Y, Z, hermitian, kron, min_eigenvalue, partial_trace, permute_factors,
)

CP_TOL = 1e-9
TP_TOL = 1e-9
FD_STEP = 1e-5
# largest Choi dimension handled by n_copy (qubits: n <= 4)
CHOI_BUDGET = 256


class SpecError(ValueError):
    """Invalid family name, parameter or channel-spec field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class BudgetExceeded(ValueError):
    pass


def _tp_residual(choi: np.ndarray, d_in: int, d_out: int, target: np.ndarray) -> float:
    return float(np.max(np.abs(partial_trace(choi, (d_in, d_out), keep=0) - target)))


@dataclass(frozen=True, eq=False)
class Channel:
    """A CPTP map ``d_in -> d_out`` stored as its Choi matrix."""

    d_in: int
    d_out: int
    choi: np.ndarray = field(repr=False)
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        choi = hermitian(self.choi, tol=1e-10)
        if choi.shape != (self.d_in * self.d_out,) * 2:
            raise ValueError(f"Choi shape {choi.shape} does not match d_in={self.d_in}, d_out={self.d_out}")
        object.__setattr__(self, "choi", choi)
        if self.check:
            rep = cp_check(choi, self.d_in, self.d_out)
            if not rep.is_cptp:
                raise ValueError(
                    f"not CPTP: min eigenvalue {rep.min_eig:.3e}, trace-preservation residual {rep.tp_residual:.3e}"
                )

    @property
    def tensor4(self) -> np.ndarray:
        return self.choi.reshape(self.d_in, self.d_out, self.d_in, self.d_out)


@dataclass(frozen=True, eq=False)
class ChannelTangent:
    """Tangent vector at a channel: Hermitian Choi matrix with vanishing output partial trace."""

    d_in: int
    d_out: int
    choi: np.ndarray = field(repr=False)
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        choi = hermitian(self.choi, tol=1e-10)
        if choi.shape != (self.d_in * self.d_out,) * 2:
            raise ValueError(f"Choi shape {choi.shape} does not match d_in={self.d_in}, d_out={self.d_out}")
        object.__setattr__(self, "choi", choi)
        if self.check:
            scale = max(1.0, float(np.linalg.norm(choi)))
            res = _tp_residual(choi, self.d_in, self.d_out, np.zeros((self.d_in, self.d_in)))
            if res > TP_TOL * scale:
                raise ValueError(f"tangent output partial trace is not zero (residual {res:.3e})")

    @property
    def tensor4(self) -> np.ndarray:
        return self.choi.reshape(self.d_in, self.d_out, self.d_in, self.d_out)

    def __mul__(self, c: float) -> "ChannelTangent":
        return ChannelTangent(self.d_in, self.d_out, float(c) * self.choi, check=False)

    __rmul__ = __mul__


LinearMap = Channel | ChannelTangent


@dataclass(frozen=True)
class CPReport:
    is_cptp: bool
    min_eig: float
    tp_residual: float


def cp_check(C, d_in: int, d_out: int) -> CPReport:
    """Complete positivity and trace preservation of a Choi matrix."""
    C = hermitian(C, tol=1e-10)
    if C.shape != (d_in * d_out,) * 2:
        raise ValueError(f"Choi shape {C.shape} does not match d_in={d_in}, d_out={d_out}")
    lam = min_eigenvalue(C)
    res = _tp_residual(C, d_in, d_out, np.eye(d_in))
    return CPReport(lam >= -CP_TOL and res <= TP_TOL, lam, res)


# --- construction helpers -------------------------------------------------

def kraus_to_choi(kraus: Sequence[np.ndarray]) -> np.ndarray:
    d_out, d_in = np.shape(kraus[0])
    C = np.zeros((d_in * d_out,) * 2, dtype=complex)
    for K in kraus:
        v = np.asarray(K, dtype=complex).T.reshape(-1)
        C += np.outer(v, v.conj())
    return C


def choi_to_kraus(ch: LinearMap, tol: float = 1e-12) -> list[np.ndarray]:
    """Kraus operators from the eigendecomposition of a (PSD) Choi matrix."""
    w, V = np.linalg.eigh(ch.choi)
    out = []
    for lam, v in zip(w, V.T):
        if lam > tol:
            out.append(np.sqrt(lam) * v.reshape(ch.d_in, ch.d_out).T)
    return out


def identity_channel(d: int) -> Channel:
    return Channel(d, d, kraus_to_choi([np.eye(d)]))


def unitary_channel(U) -> Channel:
    U = np.asarray(U, dtype=complex)
    return Channel(U.shape[1], U.shape[0], kraus_to_choi([U]))


# --- action ---------------------------------------------------------------

def apply(ch: LinearMap, rho) -> np.ndarray:
    """``Phi(rho)``; equals ``tr_in[(rho^T (x) I) C]``."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (ch.d_in, ch.d_in):
        raise ValueError(f"input has shape {rho.shape}, channel expects dimension {ch.d_in}")
    return np.einsum("ij,iajb->ab", rho, ch.tensor4)


def apply_extended(ch: LinearMap, rho, d_anc: int) -> np.ndarray:
    """``(Phi (x) I_anc)(rho)`` for ``rho`` on ``in (x) anc``."""
    D = ch.d_in * d_anc
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (D, D):
        raise ValueError(f"input has shape {rho.shape}, expected ({D}, {D})")
    R = rho.reshape(ch.d_in, d_anc, ch.d_in, d_anc)
    out = np.tensordot(R, ch.tensor4, axes=([0, 2], [0, 2]))  # k l a b
    out = out.transpose(2, 0, 3, 1)
    d = ch.d_out * d_anc
    return out.reshape(d, d)


def apply_pure_extended(ch: LinearMap, psi, d_anc: int) -> np.ndarray:
    """``(Phi (x) I_anc)(|psi><psi|)`` without forming the input projector."""
    c = np.asarray(psi, dtype=complex).reshape(ch.d_in, d_anc)
    T = np.tensordot(c, ch.tensor4, axes=([0], [0]))  # k a j b
    out = np.tensordot(T, c.conj(), axes=([2], [0]))  # k a b l
    out = out.transpose(1, 0, 2, 3)
    d = ch.d_out * d_anc
    return out.reshape(d, d)


def apply_adjoint(ch: LinearMap, A) -> np.ndarray:
    """Heisenberg-picture map: ``tr[Phi(rho) A] == tr[rho Phi*(A)]``."""
    A = np.asarray(A, dtype=complex)
    if A.shape != (ch.d_out, ch.d_out):
        raise ValueError(f"observable has shape {A.shape}, channel output dimension is {ch.d_out}")
    return np.einsum("iajb,ba->ji", ch.tensor4, A)


def apply_adjoint_extended(ch: LinearMap, A, d_anc: int) -> np.ndarray:
    """Adjoint of ``Phi (x) I_anc`` applied to ``A`` on ``out (x) anc``."""
    d = ch.d_out * d_anc
    A = np.asarray(A, dtype=complex)
    if A.shape != (d, d):
        raise ValueError(f"observable has shape {A.shape}, expected ({d}, {d})")
    B = A.reshape(ch.d_out, d_anc, ch.d_out, d_anc)  # b l a k
    Yt = np.tensordot(ch.tensor4, B, axes=([1, 3], [2, 0]))  # i j l k
    D = ch.d_in * d_anc
    return Yt.transpose(1, 2, 0, 3).reshape(D, D)


# --- algebra --------------------------------------------------------------

def _result(tangent: bool, d_in: int, d_out: int, C: np.ndarray) -> LinearMap:
    if tangent:
        return ChannelTangent(d_in, d_out, C, check=False)
    return Channel(d_in, d_out, C, check=False)


def compose(outer: LinearMap, inner: LinearMap) -> LinearMap:
    """Choi matrix of ``outer o inner``; a tangent if either argument is one."""
    if inner.d_out != outer.d_in:
        raise ValueError(f"cannot compose: inner outputs {inner.d_out}, outer expects {outer.d_in}")
    if isinstance(outer, ChannelTangent) and isinstance(inner, ChannelTangent):
        raise TypeError("composition of two tangents is not a tangent")
    C = np.einsum("iajb,acbd->icjd", inner.tensor4, outer.tensor4)
    n = inner.d_in * outer.d_out
    tangent = isinstance(outer, ChannelTangent) or isinstance(inner, ChannelTangent)
    return _result(tangent, inner.d_in, outer.d_out, C.reshape(n, n))


def tensor(a: LinearMap, b: LinearMap) -> LinearMap:
    """``a (x) b`` with Choi factors reordered to ``(in_a, in_b | out_a, out_b)``."""
    if isinstance(a, ChannelTangent) and isinstance(b, ChannelTangent):
        raise TypeError("tensor product of two tangents is not a tangent")
    C = permute_factors(kron(a.choi, b.choi), (a.d_in, a.d_out, b.d_in, b.d_out), (0, 2, 1, 3))
    tangent = isinstance(a, ChannelTangent) or isinstance(b, ChannelTangent)
    return _result(tangent, a.d_in * b.d_in, a.d_out * b.d_out, C)


def n_copy(phi: Channel, delta: ChannelTangent, n: int, budget: int = CHOI_BUDGET):
    """``(Phi^{(x)n}, Delta^{(n)})`` where ``Delta^{(n)}`` sums ``Delta`` over each slot."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if (phi.d_in * phi.d_out) ** n > budget:
        raise BudgetExceeded(
            f"n={n} copies need a Choi matrix of dimension {(phi.d_in * phi.d_out) ** n} > budget {budget}"
        )
    powers = [phi]
    for _ in range(n - 1):
        powers.append(tensor(powers[-1], phi))
    total = None
    for k in range(n):
        # Phi^{(x)k} (x) Delta (x) Phi^{(x)(n-k-1)}
        term = delta
        if k > 0:
            term = tensor(powers[k - 1], term)
        if k < n - 1:
            term = tensor(term, powers[n - k - 2])
        total = term.choi if total is None else total + term.choi
    return powers[-1], ChannelTangent(delta.d_in ** n, delta.d_out ** n, total, check=False)


# --- families -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ChannelFamily:
    """One-parameter family ``theta -> Phi_theta`` with an optional analytic derivative."""

    name: str
    d_in: int
    d_out: int
    choi_fn: Callable[[float], np.ndarray] = field(repr=False)
    dchoi_fn: Callable[[float], np.ndarray] | None = field(default=None, repr=False)
    domain: tuple[float, float] = (-np.inf, np.inf)
    params: dict = field(default_factory=dict)

    def channel(self, theta: float) -> Channel:
        return Channel(self.d_in, self.d_out, self.choi_fn(float(theta)))

    def tangent(self, theta: float, h: float = FD_STEP) -> ChannelTangent:
        if self.dchoi_fn is None:
            return self.finite_difference(theta, h)
        return ChannelTangent(self.d_in, self.d_out, self.dchoi_fn(float(theta)))

    def finite_difference(self, theta: float, h: float = FD_STEP) -> ChannelTangent:
        C = (self.choi_fn(theta + h) - self.choi_fn(theta - h)) / (2 * h)
        return ChannelTangent(self.d_in, self.d_out, C)

    def local(self, theta: float) -> tuple[Channel, ChannelTangent]:
        return self.channel(theta), self.tangent(theta)


def _vec(K: np.ndarray) -> np.ndarray:
    return np.asarray(K, dtype=complex).T.reshape(-1)


def _poly(coeffs, name: str) -> np.ndarray:
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))
    if c.ndim != 1 or c.size == 0:
        raise SpecError(f"params.{name}", "expected a number or a list of polynomial coefficients")
    return c


def pauli_family(px=(0.0, 1.0), py=(0.0, 1.0), pz=(0.0, 1.0), name: str = "pauli") -> ChannelFamily:
    """``rho -> (1 - sum p) rho + p_x X rho X + p_y Y rho Y + p_z Z rho Z``.

    Each ``p_k(theta)`` is a polynomial given by its coefficients, lowest order first.
    """
    coeffs = [_poly(px, "px"), _poly(py, "py"), _poly(pz, "pz")]
    derivs = [P.polyder(c) for c in coeffs]
    vecs = [_vec(np.eye(2))] + [_vec(s) for s in (X, Y, Z)]
    projs = [np.outer(v, v.conj()) for v in vecs]

    def probs(theta):
        p = np.array([P.polyval(theta, c) for c in coeffs])
        if np.any(p < -1e-12) or p.sum() > 1 + 1e-12:
            raise ValueError(f"Pauli probabilities {p} invalid at theta={theta}")
        return p

    def choi(theta):
        p = probs(theta)
        w = np.concatenate([[1 - p.sum()], p])
        return sum(wk * Pk for wk, Pk in zip(w, projs))

    def dchoi(theta):
        dp = np.array([P.polyval(theta, c) for c in derivs])
        w = np.concatenate([[-dp.sum()], dp])
        return sum(wk * Pk for wk, Pk in zip(w, projs))

    def pvec(theta):
        p = probs(theta)
        dp = np.array([P.polyval(theta, c) for c in derivs])
        return np.concatenate([[1 - p.sum()], p]), np.concatenate([[-dp.sum()], dp])

    domain = _pauli_domain(coeffs)
    fam = ChannelFamily(name, 2, 2, choi, dchoi, domain, {"px": coeffs[0].tolist(), "py": coeffs[1].tolist(), "pz": coeffs[2].tolist()})
    object.__setattr__(fam, "pauli_probabilities", pvec)
    return fam


def _pauli_domain(coeffs) -> tuple[float, float]:
    # exact for affine coefficients; otherwise unrestricted (evaluation still validates)
    if any(c.size > 2 for c in coeffs):
        return (-np.inf, np.inf)
    lo, hi = -np.inf, np.inf
    rows = [np.pad(c, (0, 2 - c.size)) for c in coeffs]
    rows.append(-sum(rows) + np.array([1.0, 0.0]))  # 1 - sum p >= 0
    for a, b in rows:  # a + b theta >= 0
        if b > 0:
            lo = max(lo, -a / b)
        elif b < 0:
            hi = min(hi, -a / b)
        elif a < 0:
            return (float('nan'), float('nan'))
    return (float(lo), float(hi))


def bitflip_family() -> ChannelFamily:
    return pauli_family((0.0, 1.0), (0.0,), (0.0,), name="bitflip")


def _unitary_parts(generator):
    H = hermitian(generator)
    w, V = np.linalg.eigh(H)

    def U(theta):
        return (V * np.exp(-1j * theta * w)) @ V.conj().T

    return H, U


def phase_unitary_family(generator=None) -> ChannelFamily:
    """``rho -> U rho U^H`` with ``U = exp(-i theta H)``; ``H = Z/2`` by default."""
    H, U = _unitary_parts(Z / 2 if generator is None else generator)
    d = H.shape[0]

    def choi(theta):
        v = _vec(U(theta))
        return np.outer(v, v.conj())

    def dchoi(theta):
        u = U(theta)
        v, dv = _vec(u), _vec(-1j * H @ u)
        A = np.outer(dv, v.conj())
        return A + A.conj().T

    return ChannelFamily("phase_unitary", d, d, choi, dchoi, params={"generator": _to_pairs(H)})


def depolarized_phase_family(r: float = 0.1, generator=None) -> ChannelFamily:
    """``(1 - r) U rho U^H + r tr(rho) I/d``."""
    r = float(r)
    if not 0 <= r <= 1:
        raise SpecError("params.r", f"noise weight must lie in [0, 1], got {r}")
    base = phase_unitary_family(generator)
    d = base.d_in
    noise = np.eye(d * d) / d

    def choi(theta):
        return (1 - r) * base.choi_fn(theta) + r * noise

    def dchoi(theta):
        return (1 - r) * base.dchoi_fn(theta)

    return ChannelFamily("depolarized_phase", d, d, choi, dchoi, params={"r": r, **base.params})


def constant_state_family(rho, delta, d_in: int = 2, theta0: float = 0.0) -> ChannelFamily:
    """Replacement channel ``sigma -> tr(sigma) rho_theta`` with ``rho_theta = rho + (theta - theta0) delta``."""
    rho = hermitian(rho)
    delta = hermitian(delta)
    if rho.shape != delta.shape:
        raise SpecError("params.delta", "shape differs from params.rho")
    d = rho.shape[0]
    eye = np.eye(d_in)

    def choi(theta):
        return np.kron(eye, rho + (theta - theta0) * delta)

    def dchoi(theta):
        return np.kron(eye, delta)

    return ChannelFamily(
        "constant_state", d_in, d, choi, dchoi,
        params={"rho": _to_pairs(rho), "delta": _to_pairs(delta), "d_in": d_in, "theta0": theta0},
    )


def classical_finite_family(transition=None) -> ChannelFamily:
    """Classical channel ``T(theta)[x, y] = sum_k theta^k T_k[x, y]`` embedded as a dephasing map.

    The default is the binary symmetric channel with flip probability ``theta``.
    """
    if transition is None:
        transition = [np.eye(2), [[-1.0, 1.0], [1.0, -1.0]]]
    coeffs = np.asarray(transition, dtype=float)
    if coeffs.ndim == 2:
        coeffs = coeffs[None]
    if coeffs.ndim != 3:
        raise SpecError("params.transition", "expected a list of row-stochastic coefficient matrices")
    sums = coeffs.sum(axis=2)
    target = np.zeros_like(sums)
    target[0] = 1.0
    if not np.allclose(sums, target, atol=1e-12):
        raise SpecError("params.transition", "rows must sum to 1 (constant term) and 0 (higher terms)")
    d_in, d_out = coeffs.shape[1:]
    dcoeffs = np.array([k * coeffs[k] for k in range(1, len(coeffs))]) if len(coeffs) > 1 else np.zeros_like(coeffs)

    def T(theta):
        M = sum(theta ** k * c for k, c in enumerate(coeffs))
        if np.any(M < -1e-12):
            raise ValueError(f"transition matrix has negative entries at theta={theta}")
        return M

    def dT(theta):
        return sum(theta ** k * c for k, c in enumerate(dcoeffs))

    fam = ChannelFamily(
        "classical_finite", d_in, d_out,
        lambda t: np.diag(T(t).reshape(-1)).astype(complex),
        lambda t: np.diag(dT(t).reshape(-1)).astype(complex),
        params={"transition": coeffs.tolist()},
    )
    object.__setattr__(fam, "transition", T)
    object.__setattr__(fam, "dtransition", dT)
    return fam


def random_family(d_in: int, d_out: int, rng: np.random.Generator, n_kraus: int | None = None) -> ChannelFamily:
    """Random family ``V(theta) = exp(-i theta H) V0`` of Stinespring isometries.

    With ``d_in * d_out`` Kraus operators the Choi matrix is full rank, so the
    family sits in the interior of the channel set.
    """
    r = n_kraus or d_in * d_out
    G = rng.normal(size=(r * d_out, d_in)) + 1j * rng.normal(size=(r * d_out, d_in))
    V0, _ = np.linalg.qr(G)
    A = rng.normal(size=(r * d_out,) * 2) + 1j * rng.normal(size=(r * d_out,) * 2)
    H = (A + A.conj().T) / 4
    w, W = np.linalg.eigh(H)

    def iso(theta):
        return (W * np.exp(-1j * theta * w)) @ W.conj().T @ V0

    def kraus_vecs(M):
        return [_vec(M[m * d_out:(m + 1) * d_out]) for m in range(r)]

    def choi(theta):
        vs = np.array(kraus_vecs(iso(theta)))
        return vs.T @ vs.conj()

    def dchoi(theta):
        V = iso(theta)
        vs = np.array(kraus_vecs(V))
        dvs = np.array(kraus_vecs(-1j * H @ V))
        A = dvs.T @ vs.conj()
        return A + A.conj().T

    return ChannelFamily("random", d_in, d_out, choi, dchoi)


def _to_pairs(M) -> list:
    M = np.asarray(M, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def _from_pairs(data, name: str) -> np.ndarray:
    if isinstance(data, np.ndarray) and np.iscomplexobj(data) and data.ndim == 2:
        return data.astype(complex)
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SpecError(name, f"cannot parse matrix: {exc}") from None
    if arr.ndim == 3 and arr.shape[2] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    if arr.ndim == 2:
        return arr.astype(complex)
    raise SpecError(name, "expected a matrix of numbers or of [re, im] pairs")


FAMILIES = ("pauli", "bitflip", "phase_unitary", "depolarized_phase", "constant_state", "classical_finite")

_ALLOWED = {
    "pauli": {"px", "py", "pz"},
    "bitflip": set(),
    "phase_unitary": {"generator"},
    "depolarized_phase": {"r", "generator"},
    "constant_state": {"rho", "delta", "d_in", "theta0"},
    "classical_finite": {"transition"},
}


def family_catalog(name: str, params: dict | None = None) -> ChannelFamily:
    """Build a catalog family from its name and JSON-style parameters."""
    params = dict(params or {})
    if name not in _ALLOWED:
        raise SpecError("name", f"unknown family {name!r}; expected one of {', '.join(FAMILIES)}")
    extra = set(params) - _ALLOWED[name]
    if extra:
        raise SpecError(f"params.{sorted(extra)[0]}", f"not a parameter of family {name!r}")
    if "generator" in params:
        params["generator"] = _from_pairs(params["generator"], "params.generator")
    try:
        if name == "pauli":
            return pauli_family(**params)
        if name == "bitflip":
            return bitflip_family()
        if name == "phase_unitary":
            return phase_unitary_family(**params)
        if name == "depolarized_phase":
            return depolarized_phase_family(**params)
        if name == "constant_state":
            if "rho" not in params or "delta" not in params:
                raise SpecError("params.rho" if "rho" not in params else "params.delta", "required")
            rho = _from_pairs(params.pop("rho"), "params.rho")
            delta = _from_pairs(params.pop("delta"), "params.delta")
            return constant_state_family(rho, delta, **params)
        return classical_finite_family(params.get("transition"))
    except SpecError:
        raise
    except (TypeError, ValueError) as exc:
        raise SpecError("params", str(exc)) from None
