"""Gauss-Newton refinement onto a factorization manifold.

For a structure with factors p_1..p_r of multiplicities k_1..k_r the unknown is
``z = (gamma, [p_1], ..., [p_r])`` and the map is

    phi(z) = ([gamma * p_1**k_1 * ... * p_r**k_r], b_1 . [p_1], ..., b_r . [p_r])

with unit scaling vectors ``b_i``.  Its least-squares residual against
``([f], 1, ..., 1)`` is exactly the backward error of the factorization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .polycore import (
    Factorization,
    MultiPoly,
    conv_matrix_dense,
    dense_mul,
    dense_pow,
    dim,
    lex_pack,
    pack_dense,
    unpack_dense,
)
from .structure import FactorStructure

UNIT_ROUNDOFF = float(np.finfo(float).eps) / 2


class Diverged(RuntimeError):
    pass


@dataclass
class GNState:
    z: np.ndarray
    residual_norm: float
    iteration: int
    converged: bool
    diverged: bool = False
    history: list[float] = field(default_factory=list)


def gauss_newton_solve(
    fun: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]],
    z0: np.ndarray,
    max_iter: int = 50,
    stagnation: float = 0.5,
    floor: float = 0.0,
    scale_columns: bool = True,
) -> GNState:
    """Generic Gauss-Newton for ``min ||r(z)||`` where ``fun(z) = (r, J)``.

    Iterates while either the residual or the step length keeps contracting by
    ``stagnation``; the best iterate seen is returned.
    """
    z = np.array(z0, dtype=complex)
    r, J = fun(z)
    res = float(np.linalg.norm(r))
    history = [res]
    best = (res, z.copy(), 0)
    prev_step = np.inf
    monotone = True
    it = 0
    for it in range(1, max_iter + 1):
        if res <= floor:
            break
        if scale_columns:
            d = np.linalg.norm(J, axis=0)
            d[d == 0] = 1.0
            dz = kernels.lstsq_min_norm(J / d, r) / d
        else:
            dz = kernels.lstsq_min_norm(J, r)
        z_new = z - dz
        r_new, J_new = fun(z_new)
        res_new = float(np.linalg.norm(r_new))
        history.append(res_new)
        step = float(np.linalg.norm(dz))
        if not np.isfinite(res_new):
            monotone = False
            break
        if res_new >= 10 * history[0] and res_new > floor:
            return GNState(best[1], best[0], it, False, True, history)
        improving = res_new < stagnation * res
        contracting = step < stagnation * prev_step and step > 1e-15 * max(1.0, np.linalg.norm(z))
        if res_new > res * (1 + 1e-8) and res > floor:
            monotone = monotone and res_new <= 2 * best[0]
        z, r, J, res, prev_step = z_new, r_new, J_new, res_new, step
        if res < best[0]:
            best = (res, z.copy(), it)
        if not (improving or contracting):
            break
    converged = monotone and best[0] <= 2 * history[0] + floor
    return GNState(best[1], best[0], it, converged, False, history)


# -- the factorization map -----------------------------------------------------

@dataclass
class PhiSystem:
    """phi for one structure: factor blocks in a fixed order, target and scaling vectors."""

    vars: tuple[str, ...]
    blocks: list[tuple[tuple[int, ...], int]]
    target: np.ndarray
    scaling: list[np.ndarray]

    @property
    def structure(self) -> FactorStructure:
        return FactorStructure(tuple(self.blocks))

    @property
    def degree(self) -> tuple[int, ...]:
        return self.structure.total_degree()

    @property
    def offsets(self) -> list[int]:
        off = [1]
        for d, _ in self.blocks:
            off.append(off[-1] + dim(d))
        return off

    @property
    def nvar(self) -> int:
        return self.offsets[-1]

    def split(self, z: np.ndarray) -> tuple[complex, list[np.ndarray]]:
        if z.shape != (self.nvar,):
            raise ValueError(f"z has shape {z.shape}, expected ({self.nvar},)")
        off = self.offsets
        return z[0], [z[off[i] : off[i + 1]] for i in range(len(self.blocks))]

    def join(self, gamma: complex, factors: Sequence[np.ndarray]) -> np.ndarray:
        return np.concatenate([[gamma], *factors]).astype(complex)

    def factorization(self, z: np.ndarray) -> Factorization:
        gamma, ps = self.split(z)
        fs = tuple(
            (MultiPoly.from_dense(self.vars, unpack_dense(p, d)), k) for p, (d, k) in zip(ps, self.blocks)
        )
        return Factorization(gamma, fs)


def _products(sys: PhiSystem, ps: Sequence[np.ndarray]):
    """Dense powers p_i**k_i, their full product, and all-but-one-copy products."""
    dens = [unpack_dense(p, d) for p, (d, _) in zip(ps, sys.blocks)]
    powers = [dense_pow(a, k) for a, (_, k) in zip(dens, sys.blocks)]
    r = len(powers)
    prefix = [None] * (r + 1)
    suffix = [None] * (r + 1)
    one = np.ones((1,) * len(sys.vars), dtype=complex)
    prefix[0] = one
    for i in range(r):
        prefix[i + 1] = dense_mul(prefix[i], powers[i])
    suffix[r] = one
    for i in range(r - 1, -1, -1):
        suffix[i] = dense_mul(powers[i], suffix[i + 1])
    others = []
    for i, (a, (_, k)) in enumerate(zip(dens, sys.blocks)):
        o = dense_mul(prefix[i], suffix[i + 1])
        if k > 1:
            o = dense_mul(o, dense_pow(a, k - 1))
        others.append(o)
    return prefix[r], others


def _phi_and_jacobian(sys: PhiSystem, z: np.ndarray, want_jac: bool = True):
    gamma, ps = sys.split(z)
    prod, others = _products(sys, ps)
    r = np.concatenate(
        [gamma * pack_dense(prod) - sys.target, [np.vdot(b, p) - 1 for b, p in zip(sys.scaling, ps)]]
    )
    if not want_jac:
        return r, None
    m = dim(sys.degree)
    J = np.zeros((m + len(ps), sys.nvar), dtype=complex)
    J[:m, 0] = pack_dense(prod)
    off = sys.offsets
    for i, ((d, k), o) in enumerate(zip(sys.blocks, others)):
        # d(gamma * prod)/dp_i is multiplication by k_i * gamma * (prod / p_i)
        J[:m, off[i] : off[i + 1]] = conv_matrix_dense(k * gamma * o, d)
        J[m + i, off[i] : off[i + 1]] = sys.scaling[i].conj()
    return r, J


def phi_eval(sys: PhiSystem, z: np.ndarray) -> np.ndarray:
    """phi(z) - ([f], 1, ..., 1)."""
    return _phi_and_jacobian(sys, z, want_jac=False)[0]


def jacobian(sys: PhiSystem, z: np.ndarray) -> np.ndarray:
    return _phi_and_jacobian(sys, z)[1]


@dataclass
class GNOptions:
    max_iter: int = 50
    stagnation: float = 0.5
    floor: float | None = None
    scale_columns: bool = True


def gauss_newton(sys: PhiSystem, z0: np.ndarray, opts: GNOptions | None = None) -> GNState:
    opts = opts or GNOptions()
    floor = opts.floor
    if floor is None:
        floor = 1e2 * UNIT_ROUNDOFF * float(np.linalg.norm(sys.target))
    state = gauss_newton_solve(
        lambda z: _phi_and_jacobian(sys, z), z0, opts.max_iter, opts.stagnation, floor, opts.scale_columns
    )
    if state.diverged:
        raise Diverged(f"residual grew from {state.history[0]:.3g} to {max(state.history):.3g}")
    return state


def condition_number(sys: PhiSystem, z: np.ndarray) -> float:
    """||J(z)^+||_2 at the computed representative; inf when J is numerically singular."""
    J = jacobian(sys, z)
    s = kernels.singular_values(J)
    if s.size == 0 or s[-1] <= s[0] * 1e2 * UNIT_ROUNDOFF:
        return float("inf")
    return float(1 / s[-1])


def make_system(f: MultiPoly, F: Factorization, rng: np.random.Generator | None = None):
    """Phi system and starting point from an initial factorization of ``f``.

    Scaling vectors are the normalized initial factors; gamma starts at the
    least-squares optimum for those factors.
    """
    blocks = [(p.degree, k) for p, k in F.factors]
    target = lex_pack(f, F.degree())
    scaling = []
    ps = []
    for p, _ in F.factors:
        v = lex_pack(p, p.degree)
        v = v / np.linalg.norm(v)
        scaling.append(v)
        ps.append(v.copy())
    sys = PhiSystem(tuple(f.vars), blocks, target, scaling)
    prod, _ = _products(sys, ps)
    g = pack_dense(prod)
    gamma = np.vdot(g, target) / np.vdot(g, g)
    return sys, sys.join(gamma, ps)


def rescale_system(sys: PhiSystem, z: np.ndarray, rng: np.random.Generator | None = None) -> tuple[PhiSystem, np.ndarray]:
    """Re-anchor the scaling vectors at the current factors (keeps b_i . p_i away from 0)."""
    gamma, ps = sys.split(z)
    new_b = []
    new_p = []
    for b, p in zip(sys.scaling, ps):
        nrm = np.linalg.norm(p)
        if abs(np.vdot(b, p)) < 1e-3 * nrm:
            if rng is not None:
                v = rng.standard_normal(p.size) + 1j * rng.standard_normal(p.size)
                v = p + 1e-2 * nrm * v / np.linalg.norm(v)
            else:
                v = p
            b = v / np.linalg.norm(v)
        s = np.vdot(b, p)
        new_b.append(b)
        new_p.append(p / s)
    new_sys = PhiSystem(sys.vars, sys.blocks, sys.target, new_b)
    prod, _ = _products(new_sys, new_p)
    g = pack_dense(prod)
    gamma = np.vdot(g, sys.target) / np.vdot(g, g)
    return new_sys, new_sys.join(gamma, new_p)


@dataclass
class NumFactResult:
    factorization: Factorization
    backward_error: float
    sin_backward: float
    structure: FactorStructure
    condition_number: float
    iterations: int
    converged: bool
    seed: int = 0
    squarefree: Factorization | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def codim(self) -> int:
        from .structure import codim

        return codim(self.structure)
