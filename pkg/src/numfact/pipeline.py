"""Numerical factorization within a backward tolerance, end to end.

The fast path proposes the most singular structure the data supports
(squarefree sweep + splitting), refines it by Gauss-Newton and certifies the
backward distance.  When certification fails it walks down the embedding
lattice one combine/split move at a time, most singular candidates first.
The exhaustive mode instead refines every structure of the degree from
random starts and picks the highest codimension within tolerance.
"""

from __future__ import annotations

import heapq
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .polycore import (
    Factorization,
    MultiPoly,
    dim,
    expand,
    fact_distance,
    lex_pack,
    sin_distance,
    tuple_max,
)
from .refine import (
    UNIT_ROUNDOFF,
    Diverged,
    GNOptions,
    NumFactResult,
    condition_number,
    gauss_newton,
    make_system,
    rescale_system,
)
from .split import SplitError, identify_structure, root_cluster_initial, univariate_roots
from .structure import FactorStructure, StructureError, codim, enumerate_structures, select_max_codim

log = logging.getLogger(__name__)

EXHAUSTIVE_GUARD = 24


class FactorizationFailed(RuntimeError):
    pass


@dataclass
class Config:
    epsilon: float
    seed: int = 0
    unit_roundoff: float = UNIT_ROUNDOFF
    structure_hint: FactorStructure | None = None
    max_retries: int = 3
    normalize: bool = False
    exhaustive: bool = False
    max_candidates: int = 200
    starts: int = 16
    workers: int = 4
    gn: GNOptions = field(default_factory=GNOptions)

    def __post_init__(self):
        if not self.epsilon > self.unit_roundoff:
            raise ValueError(f"epsilon {self.epsilon:g} must exceed the unit round-off")


def certify_distance(f: MultiPoly, F: Factorization) -> float:
    """min over gamma of ||f - gamma * prod f_i**k_i||."""
    g = expand(Factorization(1.0, F.factors), f.vars)
    n = tuple_max(g.degree, f.degree)
    gv, fv = lex_pack(g, n), lex_pack(f, n)
    gg = np.vdot(gv, gv)
    if gg == 0:
        return float(np.linalg.norm(fv))
    gamma = np.vdot(gv, fv) / gg
    return float(np.linalg.norm(fv - gamma * gv))


def optimal_alpha(f: MultiPoly, F: Factorization) -> complex:
    g = expand(Factorization(1.0, F.factors), f.vars)
    n = tuple_max(g.degree, f.degree)
    gv, fv = lex_pack(g, n), lex_pack(f, n)
    return complex(np.vdot(gv, fv) / np.vdot(gv, gv))


def forward_report(computed: Factorization, reference: Factorization) -> float:
    return fact_distance(computed, reference)


# -- presentation -------------------------------------------------------------

def trim_roundoff(p: MultiPoly, rel: float = 1e2 * UNIT_ROUNDOFF) -> MultiPoly:
    """Drop terms at round-off level relative to the largest coefficient."""
    top = max(abs(c) for c in p.terms.values())
    return MultiPoly(p.vars, {e: c for e, c in p.terms.items() if abs(c) > rel * top})


def display_normalize(p: MultiPoly) -> MultiPoly:
    """Monic for one variable, otherwise the largest coefficient (first in lex on ties) becomes 1."""
    p = trim_roundoff(p)
    live = p.variables_used()
    if len(live) == 1:
        return p / p.terms[max(p.terms)]
    mags = {e: abs(c) for e, c in p.terms.items()}
    top = max(mags.values())
    lead = max(e for e, v in mags.items() if v >= top * (1 - 1e-9))
    return p / p.terms[lead]


def _is_real(f: MultiPoly) -> bool:
    return all(c.imag == 0 for c in f.terms.values())


def _realify(F: Factorization) -> Factorization | None:
    fs = []
    for p, k in F.factors:
        q = display_normalize(p)
        if max(abs(c.imag) for c in q.terms.values()) > 1e-6:
            return None
        fs.append((MultiPoly(q.vars, {e: c.real for e, c in q.terms.items()}), k))
    return Factorization(1.0, tuple(fs))


def squarefree_form(F: Factorization) -> Factorization:
    """Group irreducible factors by multiplicity: alpha * prod h_k**k."""
    groups: dict[int, MultiPoly] = {}
    for p, k in F.factors:
        groups[k] = p if k not in groups else groups[k] * p
    return Factorization(F.alpha, tuple((groups[k], k) for k in sorted(groups)))


# -- refinement of one candidate ------------------------------------------------

@dataclass
class Candidate:
    factorization: Factorization
    distance: float
    iterations: int
    converged: bool
    condition: float


def refine_candidate(f: MultiPoly, F: Factorization, opts: GNOptions | None = None, seed: int = 0) -> Candidate | None:
    """Gauss-Newton from ``F`` and the certified distance of the result."""
    rng = np.random.default_rng([seed, 99])
    try:
        sys, z0 = make_system(f, F)
        st = gauss_newton(sys, z0, opts)
        # re-anchor scaling vectors once at the refined point
        sys2, z1 = rescale_system(sys, st.z, rng)
        st2 = gauss_newton(sys2, z1, opts)
    except (Diverged, np.linalg.LinAlgError, ValueError) as exc:
        log.debug("refinement failed: %s", exc)
        return None
    if st2.residual_norm <= st.residual_norm:
        sys, st = sys2, st2
    Fz = sys.factorization(st.z)
    if _is_real(f):
        Fr = _realify(Fz)
        if Fr is not None:
            try:
                sys_r, zr = make_system(f, Fr)
                st_r = gauss_newton(sys_r, zr, opts)
            except (Diverged, np.linalg.LinAlgError, ValueError):
                st_r = None
            if st_r is not None and st_r.residual_norm <= st.residual_norm * (1 + 1e-6) + 10 * UNIT_ROUNDOFF * f.norm():
                sys, st, Fz = sys_r, st_r, sys_r.factorization(st_r.z)
    dist = certify_distance(f, Fz)
    return Candidate(Fz, dist, st.iteration, st.converged, condition_number(sys, st.z))


# -- lattice descent ------------------------------------------------------------

def _moves(F: Factorization, labels, rng):
    """Single combine/split moves on a factor list; labels track original factor indices."""
    fs = list(F.factors)
    for i, j in itertools.combinations(range(len(fs)), 2):
        (p, k), (q, kq) = fs[i], fs[j]
        if k != kq:
            continue
        rest = [fs[n] for n in range(len(fs)) if n not in (i, j)]
        rest_l = [labels[n] for n in range(len(fs)) if n not in (i, j)]
        yield Factorization(F.alpha, tuple(rest + [(p * q, k)])), rest_l + [(labels[i][0] | labels[j][0], k)]
    for i, (p, k) in enumerate(fs):
        for k_hat in range(1, k // 2 + 1):
            # identical copies make the Jacobian singular, so nudge one of them
            noise = {e: c * (1 + 1e-3 * (rng.standard_normal() + 1j * rng.standard_normal())) for e, c in p.terms.items()}
            q = MultiPoly(p.vars, noise)
            rest = fs[:i] + fs[i + 1 :]
            rest_l = labels[:i] + labels[i + 1 :]
            yield (
                Factorization(F.alpha, tuple(rest + [(p, k_hat), (q, k - k_hat)])),
                rest_l + [(labels[i][0], k_hat), (labels[i][0] | frozenset({-1 - i}), k - k_hat)],
            )


def _structure(F: Factorization) -> FactorStructure:
    return FactorStructure(tuple((p.degree, k) for p, k in F.factors))


def _trivial(f: MultiPoly) -> Candidate:
    return Candidate(Factorization(1.0, ((f, 1),)), 0.0, 0, True, float("nan"))


def descend(f: MultiPoly, F0: Factorization, cfg: Config, eps_abs: float) -> tuple[Candidate, list[str]]:
    """Refine and certify, falling back through lattice moves in order of codimension."""
    notes = []
    rng = np.random.default_rng([cfg.seed, 4242])
    counter = itertools.count()
    labels0 = [(frozenset({i}), k) for i, (_, k) in enumerate(F0.factors)]
    heap = [(-codim(_structure(F0)), next(counter), F0, labels0)]
    seen = set()
    tried = 0
    while heap and tried < cfg.max_candidates:
        negc, _, F, labels = heapq.heappop(heap)
        key = tuple(sorted((tuple(sorted(l)), k) for l, k in labels))
        if key in seen:
            continue
        seen.add(key)
        tried += 1
        if len(F.factors) == 1 and F.factors[0][1] == 1:
            cand = _trivial(f)
        else:
            cand = refine_candidate(f, F, cfg.gn, cfg.seed + tried)
        if cand is not None and cand.distance < eps_abs:
            if tried > 1:
                notes.append(f"certified after {tried} candidates on the embedding lattice")
            return cand, notes
        log.debug(
            "structure %s not certified (distance %s)", _structure(F), "n/a" if cand is None else f"{cand.distance:.3g}"
        )
        base = cand.factorization if cand is not None else F
        for G, lab in _moves(base, labels, rng):
            heapq.heappush(heap, (-codim(_structure(G)), next(counter), G, lab))
    notes.append("no candidate certified; falling back to the trivial factorization")
    return _trivial(f), notes


# -- exhaustive oracle ------------------------------------------------------------

def _random_start(f: MultiPoly, S: FactorStructure, rng) -> Factorization:
    fs = []
    for d, k in S.components:
        v = rng.standard_normal(dim(d)) + 1j * rng.standard_normal(dim(d))
        a = np.zeros(tuple(e + 1 for e in d), dtype=complex)
        a.flat[:] = v / np.linalg.norm(v)
        fs.append((MultiPoly.from_dense(f.vars, a), k))
    return Factorization(1.0, tuple(fs))


def _root_start(f: MultiPoly, S: FactorStructure, ax: int, roots: np.ndarray, rng, sweeps: int = 20) -> Factorization:
    """Size-constrained k-means on the roots: one group of k roots per linear factor of multiplicity k."""
    sizes = [k for d, k in S.components for _ in range(d[ax])]
    owner = np.repeat(np.arange(len(sizes)), sizes)
    centers = rng.choice(roots, size=len(sizes), replace=False)
    for _ in range(sweeps):
        cost = np.abs(roots[:, None] - centers[owner][None, :]) ** 2
        r, c = linear_sum_assignment(cost)
        groups = owner[c[np.argsort(r)]]
        new = np.array([roots[groups == g].mean() for g in range(len(sizes))])
        if np.allclose(new, centers):
            break
        centers = new
    fs, g = [], 0
    for d, k in S.components:
        p = MultiPoly.constant(1.0, f.vars)
        for _ in range(d[ax]):
            e = [0] * f.nvars
            e[ax] = 1
            p = p * MultiPoly(f.vars, {tuple(e): 1.0, (0,) * f.nvars: -centers[g]})
            g += 1
        fs.append((p, k))
    return Factorization(1.0, tuple(fs))


def _best_from_starts(f: MultiPoly, S: FactorStructure, cfg: Config, index: int) -> tuple[FactorStructure, Candidate | None]:
    if len(S) == 1 and S.components[0][1] == 1:
        return S, _trivial(f)
    best = None
    roots = univariate_roots(f) if len(f.variables_used()) == 1 else None
    for s in range(cfg.starts):
        rng = np.random.default_rng([cfg.seed, index, s, 5])
        # univariate: half the starts group the computed roots, the rest are random
        if roots is not None and s % 2 == 0 and len(roots[1]) == f.degree[roots[0]]:
            F0 = _root_start(f, S, roots[0], roots[1], rng)
        else:
            F0 = _random_start(f, S, rng)
        try:
            F0 = Factorization(1.0, F0.factors)
        except ValueError:
            continue
        cand = refine_candidate(f, F0, cfg.gn, cfg.seed + s)
        if cand is not None and (best is None or cand.distance < best.distance):
            best = cand
    return S, best


def exhaustive_candidates(f: MultiPoly, cfg: Config, eps_abs: float) -> list[tuple[FactorStructure, Candidate | None]]:
    m = f.degree
    if dim(m) > EXHAUSTIVE_GUARD:
        raise StructureError(f"exhaustive search is limited to dim <= {EXHAUSTIVE_GUARD}, degree {m} has {dim(m)}")
    structs = enumerate_structures(m)
    out = []
    by_codim = itertools.groupby(enumerate(structs), key=lambda t: codim(t[1]))
    with ThreadPoolExecutor(max_workers=max(1, cfg.workers)) as pool:
        for c, group in by_codim:
            group = list(group)
            results = list(pool.map(lambda t: _best_from_starts(f, t[1], cfg, t[0]), group))
            out.extend(results)
            if any(cand is not None and cand.distance < eps_abs for _, cand in results):
                # nothing of lower codimension can win the selection
                break
    return out


def exhaustive_select(f: MultiPoly, cfg: Config, eps_abs: float) -> tuple[FactorStructure, Candidate, list[str]]:
    results = exhaustive_candidates(f, cfg, eps_abs)
    cands = [(S, c.distance) for S, c in results if c is not None]
    winner, tied = select_max_codim(cands, eps_abs)
    notes = []
    if tied:
        notes.append("tie at maximal codimension: " + ", ".join(str(S) for S in tied))
    cand = next(c for S, c in results if S == winner)
    return winner, cand, notes


# -- entry point --------------------------------------------------------------------

def numerical_factor(f: MultiPoly, cfg: Config) -> NumFactResult:
    """Numerical irreducible factorization of ``f`` within ``cfg.epsilon``."""
    if f.is_zero():
        raise ValueError("cannot factor the zero polynomial")
    if f.is_constant():
        raise ValueError("cannot factor a constant polynomial")
    scale = f.norm() if cfg.normalize else 1.0
    fw = f / scale if cfg.normalize else f
    eps = cfg.epsilon
    notes: list[str] = []

    if cfg.exhaustive:
        S, cand, notes = exhaustive_select(fw, cfg, eps)
        try:
            fast = _fast_path(fw, cfg, eps, [])
            if _structure(fast.factorization) != S:
                log.warning("fast path chose %s, exhaustive search chose %s", _structure(fast.factorization), S)
                notes.append(f"fast path disagrees: {_structure(fast.factorization)}")
        except FactorizationFailed as exc:
            notes.append(f"fast path failed: {exc}")
    else:
        cand = _fast_path(fw, cfg, eps, notes)
    return _assemble(f, fw, scale, cand, cfg, notes)


def _fast_path(fw: MultiPoly, cfg: Config, eps: float, notes: list[str]) -> Candidate:
    last = None
    for attempt in range(cfg.max_retries + 1):
        seed = cfg.seed if attempt == 0 else cfg.seed * 1000 + attempt
        try:
            _, F0 = identify_structure(fw, eps, seed, cfg.structure_hint)
        except SplitError as exc:
            last = exc
            log.debug("identification attempt %d failed: %s", attempt, exc)
            if cfg.structure_hint is None and len(fw.variables_used()) == 1:
                return _univariate_fallback(fw, cfg, eps, notes)
            continue
        if cfg.structure_hint is not None:
            cand = refine_candidate(fw, F0, cfg.gn, seed)
            if cand is None:
                last = FactorizationFailed("refinement from the hinted structure diverged")
                continue
            if cand.distance >= eps:
                notes.append(f"hinted structure only reaches distance {cand.distance:.3g}")
            return cand
        cand, more = descend(fw, F0, cfg, eps)
        notes.extend(more)
        return cand
    raise FactorizationFailed(str(last))


def _univariate_fallback(fw: MultiPoly, cfg: Config, eps: float, notes: list[str]) -> Candidate:
    """The gcd sweep found no consistent multiplicities; search the lattice directly."""
    if dim(fw.degree) <= EXHAUSTIVE_GUARD:
        notes.append("squarefree sweep failed; structure chosen by exhaustive search")
        _, cand, more = exhaustive_select(fw, cfg, eps)
        notes.extend(more)
        return cand
    notes.append("squarefree sweep failed; starting from root clusters")
    cand, more = descend(fw, root_cluster_initial(fw), cfg, eps)
    notes.extend(more)
    return cand


def _assemble(f, fw, scale, cand: Candidate, cfg: Config, notes) -> NumFactResult:
    F = cand.factorization
    fs = tuple((display_normalize(p), k) for p, k in F.factors)
    F = Factorization(1.0, fs)
    F = Factorization(optimal_alpha(f, F), fs)
    backward = certify_distance(f, F)
    S = _structure(F)
    return NumFactResult(
        factorization=F,
        backward_error=backward,
        sin_backward=sin_distance(f, expand(F)),
        structure=S,
        condition_number=cand.condition,
        iterations=cand.iterations,
        converged=cand.converged,
        seed=cfg.seed,
        squarefree=squarefree_form(F),
        notes=notes,
    )
