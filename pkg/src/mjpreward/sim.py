"""Exact-in-law path simulation by thinning, and a Monte-Carlo harness.

Paths are simulated in lockstep batches with numpy.  Every path draws its
random numbers from a counter-based generator keyed by ``(seed, path index,
stream)``, so a path's trajectory does not depend on which batch or worker
simulated it.

Streams (each with its own counter per path):

* ``DYNAMICS``: three uniforms per thinning proposal (holding time,
  accept/reject, destination);
* ``JUMP``, ``EXTERNAL``, ``SCHEDULED``: uniforms for the lump rewards, in
  time order within each stream;
* ``INITIAL``: the initial state and the state drawn at every reset.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import ModelSpec

__all__ = [
    "SimulationError",
    "Substream",
    "Path",
    "RewardSample",
    "SampleStats",
    "simulate_path",
    "accumulate_reward",
    "simulate_rewards",
    "monte_carlo",
    "sample_stats",
    "integrate_reward_rate",
]

log = logging.getLogger(__name__)

DYNAMICS, JUMP, EXTERNAL, SCHEDULED, INITIAL = range(5)
_N_STREAMS = 5

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


class SimulationError(RuntimeError):
    """A simulation bound was violated (rate above its declared maximum)."""


# --------------------------------------------------------------------------
# Counter-based random numbers


def _mix(z):
    # SplitMix64 output function
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _keys(seed: int, indices, stream: int) -> np.ndarray:
    with np.errstate(over="ignore"):
        base = _mix(np.uint64(seed % 2**64) + _GOLDEN)
        k = _mix(base + (np.asarray(indices, dtype=np.uint64) + np.uint64(1)) * _GOLDEN)
        return _mix(k ^ _mix(np.uint64(stream + 1) * _GOLDEN))


def _uniforms(keys: np.ndarray, counters: np.ndarray, k: int) -> np.ndarray:
    """Uniforms in (0, 1), shape ``(len(keys), k)``."""
    with np.errstate(over="ignore"):
        c = counters[:, None] + np.arange(k, dtype=np.uint64)[None, :]
        z = _mix(keys[:, None] + c * _GOLDEN)
    return ((z >> np.uint64(11)).astype(float) + 0.5) * 2.0**-53


@dataclass(frozen=True)
class Substream:
    """The random-number substream of one path: ``(seed, index)``."""

    seed: int
    index: int

    def uniforms(self, stream: int, start: int, count: int) -> np.ndarray:
        """``count`` uniforms from ``stream`` beginning at counter ``start``."""
        key = _keys(self.seed, [self.index], stream)
        return _uniforms(key, np.array([start], dtype=np.uint64), count)[0]


class _Draws:
    def __init__(self, seed, indices):
        self.keys = [_keys(seed, indices, s) for s in range(_N_STREAMS)]
        self.counters = [np.zeros(len(indices), dtype=np.uint64) for _ in range(_N_STREAMS)]

    def __call__(self, stream, paths, k=1):
        c = self.counters[stream]
        u = _uniforms(self.keys[stream][paths], c[paths], k)
        c[paths] += np.uint64(k)
        return u


# --------------------------------------------------------------------------
# Results


@dataclass
class Path:
    """One simulated trajectory on [0, horizon].

    ``jump_times[j]`` is the time of the (j+1)-th jump and ``jump_states[j]``
    the state entered there.  Resets (if any) replace the state at integer
    times without a transition and earn no jump reward.
    """

    horizon: float
    initial_state: int
    jump_times: np.ndarray
    jump_states: np.ndarray
    external_times: np.ndarray
    external_states: np.ndarray
    reset_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    reset_states: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))

    def pieces(self):
        """``(start, end, state)`` of the maximal constant-state intervals."""
        times = np.concatenate([self.jump_times, self.reset_times])
        states = np.concatenate([self.jump_states, self.reset_states]).astype(int)
        order = np.argsort(times, kind="stable")
        times, states = times[order], states[order]
        starts = np.concatenate([[0.0], times])
        ends = np.concatenate([times, [self.horizon]])
        return starts, ends, np.concatenate([[self.initial_state], states]).astype(int)

    def state_at(self, t: float) -> int:
        """State at ``t`` (right-continuous)."""
        starts, _, states = self.pieces()
        return int(states[np.searchsorted(starts, t, side="right") - 1])


@dataclass(frozen=True)
class RewardSample:
    integrated: float
    jump: float
    scheduled: float
    external: float

    @property
    def total(self) -> float:
        return self.integrated + self.jump + self.scheduled + self.external


# --------------------------------------------------------------------------
# Integration of the reward rate over constant-state intervals

_GL_LO = np.polynomial.legendre.leggauss(8)
_GL_HI = np.polynomial.legendre.leggauss(16)


def _state_function_eval(families, state_family, t, x):
    out = np.empty(len(t))
    fam_id = state_family[x]
    for f, fam in enumerate(families):
        mask = fam_id == f
        if np.any(mask):
            out[mask] = fam.fn(t[mask], x[mask].astype(float))
    return out


def _family_lookup(families, n):
    lookup = np.full(n, -1, dtype=np.intp)
    for f, fam in enumerate(families):
        lookup[fam.index] = f
    return lookup


def _gauss(fn, a, b, nodes):
    xg, wg = nodes
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    t = mid[:, None] + half[:, None] * xg[None, :]
    vals = fn(t)
    return half * (vals @ wg)


def integrate_reward_rate(model: ModelSpec, a, b, x, breakpoints=(), tol: float = 1e-10, max_depth: int = 40) -> np.ndarray:
    """Integrals of ``r(t, x_i)`` over ``[a_i, b_i]`` for arrays of intervals.

    Each interval is first cut at the given breakpoints, then integrated by
    adaptive Gauss-Legendre quadrature (8 vs 16 nodes, bisection until the
    two agree to ``tol`` relative to ``max(1, |value|)``).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    x = np.asarray(x, dtype=np.intp)
    out = np.zeros(len(a))
    if len(a) == 0:
        return out
    ev = model.evaluator
    fams = ev._r_fams
    lookup = _family_lookup(fams, model.d)
    owner = np.arange(len(a))
    bp = np.asarray(breakpoints, dtype=float)
    if len(bp):
        lo = np.searchsorted(bp, a, side="right")
        hi = np.searchsorted(bp, b, side="left")
        extra = np.maximum(hi - lo, 0)
        reps = extra + 1
        owner = np.repeat(owner, reps)
        first = np.repeat(np.cumsum(reps) - reps, reps)
        k = np.arange(len(owner)) - first  # piece number within its interval
        lo_r = np.repeat(lo, reps)
        n_r = np.repeat(extra, reps)
        bp_pad = np.concatenate([bp, [np.inf]])
        start = np.where(k == 0, a[owner], bp_pad[np.minimum(lo_r + k - 1, len(bp))])
        stop = np.where(k == n_r, b[owner], bp_pad[np.minimum(lo_r + k, len(bp))])
        a_p, b_p = start, stop
    else:
        a_p, b_p = a, b
    x_p = x[owner]
    keep = b_p > a_p
    a_p, b_p, x_p, owner = a_p[keep], b_p[keep], x_p[keep], owner[keep]

    for depth in range(max_depth):
        if len(a_p) == 0:
            break

        def fn(t, x_p=x_p):
            shape = t.shape
            xs = np.broadcast_to(x_p[:, None], shape).ravel()
            return _state_function_eval(fams, lookup, t.ravel(), xs).reshape(shape)

        lo_v = _gauss(fn, a_p, b_p, _GL_LO)
        hi_v = _gauss(fn, a_p, b_p, _GL_HI)
        done = np.abs(hi_v - lo_v) <= tol * np.maximum(1.0, np.abs(hi_v))
        if depth == max_depth - 1:
            # accept the last estimate where bisection did not settle
            done[:] = True
        np.add.at(out, owner[done], hi_v[done])
        nd = ~done
        if not np.any(nd):
            break
        m = 0.5 * (a_p[nd] + b_p[nd])
        a_p = np.concatenate([a_p[nd], m])
        b_p = np.concatenate([m, b_p[nd]])
        x_p = np.tile(x_p[nd], 2)
        owner = np.tile(owner[nd], 2)
    return out


# --------------------------------------------------------------------------
# Lump sampling


def _sample_lumps(families, lookup, ids, xs, t, draws, stream, paths):
    out = np.zeros(len(ids))
    fam_id = lookup[ids]
    for f, fam in enumerate(families):
        mask = fam_id == f
        if not np.any(mask):
            continue
        law = fam.fn
        k = law.n_uniforms
        u = draws(stream, paths[mask], k) if k else np.empty((int(mask.sum()), 0))
        out[mask] = law.sample(t[mask], xs[mask].astype(float), u)
    return out


def _sample_state(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)


# --------------------------------------------------------------------------
# The batch engine


class _Engine:
    def __init__(self, model: ModelSpec, horizon: float, reset_laws=None):
        if model.bounds is None:
            raise ValueError(f"model {model.name!r} has no simulation bounds")
        self.model = model
        self.horizon = float(horizon)
        ev = model.evaluator
        self.ev = ev
        d = model.d
        self.lam_bar = np.asarray(model.bounds.lambda_bar, dtype=float)
        self.beta_bar = np.asarray(model.bounds.beta_bar, dtype=float) if ev.has_external else np.zeros(d)
        # out-edge table, padded with -1
        out = [[] for _ in range(d)]
        for i, (s, t) in enumerate(zip(ev.src, ev.dst)):
            out[s].append(i)
        width = max(1, max((len(o) for o in out), default=1))
        self.out_edge = np.full((d, width), -1, dtype=np.intp)
        for s, o in enumerate(out):
            self.out_edge[s, : len(o)] = o
        self.edge_family = _family_lookup(ev._rate_fams, max(ev.n_edges, 1))
        self.jump_lookup = _family_lookup(ev._jump_fams, max(ev.n_edges, 1))
        if ev.has_external:
            self.beta_lookup = _family_lookup(ev._beta_fams, d)
            self.ext_lookup = _family_lookup(ev._ext_fams, d)
        if ev.has_schedule:
            self.sched_lookup = _family_lookup(ev._sched_fams, d)
        sched = model.rewards.schedule.times(0.0, self.horizon)
        self.sched = np.concatenate([sched, [np.inf]])
        self.breakpoints = np.unique(
            np.concatenate([model.breakpoints.expand(0.0, self.horizon), sched, _rate_points(model, self.horizon)])
        )
        self.cdf0 = np.cumsum(model.mu)
        self.reset_cdfs = None
        if reset_laws is not None:
            self.reset_cdfs = [np.cumsum(np.asarray(p, dtype=float)) for p in reset_laws]
            self.cdf0 = self.reset_cdfs[0]

    def reset_cdf(self, n: int):
        return self.reset_cdfs[min(n, len(self.reset_cdfs) - 1)]

    def edge_rates(self, t, x):
        """Rates of the out-edges of ``x`` at ``t``: ``(len(x), width)``, zero padded."""
        E = self.out_edge[x]
        R = np.zeros(E.shape)
        fam_of = np.where(E >= 0, self.edge_family[np.maximum(E, 0)], -1)
        tt = np.broadcast_to(t[:, None], E.shape)
        xx = np.broadcast_to(x[:, None].astype(float), E.shape)
        for f, fam in enumerate(self.ev._rate_fams):
            mask = fam_of == f
            if np.any(mask):
                R[mask] = fam.fn(tt[mask], xx[mask])
        return R, E

    def run(self, seed: int, indices, record: bool = False, buffer_limit: int = 200_000):
        indices = np.asarray(indices, dtype=np.int64)
        n = len(indices)
        ev = self.ev
        draws = _Draws(seed, indices)
        H = self.horizon
        comps = np.zeros((n, 4))
        all_paths = np.arange(n)
        x = _sample_state(self.cdf0, draws(INITIAL, all_paths)[:, 0])
        x0 = x.copy()
        tau = np.zeros(n)
        t_last = np.zeros(n)
        next_reset = np.full(n, 1.0 if self.reset_cdfs is not None else np.inf)
        sched_ptr = np.zeros(n, dtype=np.intp)
        buf = []
        buffered = 0
        events = [] if record else None  # (path, time, kind, state)

        def close(paths, end):
            nonlocal buffered
            buf.append((t_last[paths].copy(), np.asarray(end, dtype=float).copy(), x[paths].copy(), paths.copy()))
            buffered += len(paths)

        def flush():
            nonlocal buffered, buf
            if not buf:
                return
            a, b, xs, ps = (np.concatenate(c) for c in zip(*buf))
            vals = integrate_reward_rate(self.model, a, b, xs, self.breakpoints)
            np.add.at(comps[:, 0], ps, vals)
            buf = []
            buffered = 0

        def scheduled(paths, stop):
            if not ev.has_schedule:
                return
            while len(paths):
                due = self.sched[sched_ptr[paths]] <= stop
                paths, stop = paths[due], stop[due]
                if not len(paths):
                    return
                ti = self.sched[sched_ptr[paths]]
                xs = x[paths]
                vals = _sample_lumps(ev._sched_fams, self.sched_lookup, xs, xs, ti, draws, SCHEDULED, paths)
                np.add.at(comps[:, 2], paths, vals)
                sched_ptr[paths] += 1

        active = all_paths
        while active.size:
            xa = x[active]
            tot = self.lam_bar[xa] + self.beta_bar[xa]
            u1 = draws(DYNAMICS, active, 3)
            with np.errstate(divide="ignore"):
                E = -np.log(u1[:, 0]) / tot
            tnew = tau[active] + E
            barrier = np.minimum(H, next_reset[active])
            stop = np.minimum(tnew, barrier)
            scheduled(active, stop)

            hit = tnew >= barrier
            if np.any(hit):
                hp = active[hit]
                bt = barrier[hit]
                close(hp, bt)
                tau[hp] = bt
                t_last[hp] = bt
                rs = bt < H
                if np.any(rs):
                    rp = hp[rs]
                    nper = np.rint(bt[rs]).astype(int)
                    u = draws(INITIAL, rp)[:, 0]
                    newx = np.empty(len(rp), dtype=np.intp)
                    for nn in np.unique(nper):
                        m = nper == nn
                        newx[m] = _sample_state(self.reset_cdf(nn), u[m])
                    x[rp] = newx
                    next_reset[rp] += 1.0
                    if record:
                        events.append((rp, bt[rs], np.full(len(rp), 2), newx))

            prop = ~hit
            if np.any(prop):
                pp = active[prop]
                tp = tnew[prop]
                xp = x[pp]
                v = u1[prop, 1] * tot[prop]
                R, Eidx = self.edge_rates(tp, xp)
                lam = R.sum(axis=1)
                lb = self.lam_bar[xp]
                bad = lam > lb * (1 + 1e-12) + 1e-12
                if np.any(bad):
                    i = int(np.flatnonzero(bad)[0])
                    raise SimulationError(
                        f"exit rate {lam[i]:.6g} of state {xp[i]} at t={tp[i]:.6g} exceeds lambda_bar {lb[i]:.6g}"
                    )
                is_jump = v < lam
                is_ext = np.zeros(len(pp), dtype=bool)
                if ev.has_external:
                    cand = (~is_jump) & (v >= lb)
                    if np.any(cand):
                        bvals = _state_function_eval(ev._beta_fams, self.beta_lookup, tp[cand], xp[cand])
                        bb = self.beta_bar[xp[cand]]
                        if np.any(bvals > bb * (1 + 1e-12) + 1e-12):
                            i = int(np.flatnonzero(bvals > bb * (1 + 1e-12) + 1e-12)[0])
                            raise SimulationError(
                                f"external intensity {bvals[i]:.6g} at t={tp[cand][i]:.6g} exceeds beta_bar {bb[i]:.6g}"
                            )
                        is_ext[np.flatnonzero(cand)[v[cand] - lb[cand] < bvals]] = True
                if np.any(is_ext):
                    ep = pp[is_ext]
                    et = tp[is_ext]
                    ex = xp[is_ext]
                    vals = _sample_lumps(ev._ext_fams, self.ext_lookup, ex, ex, et, draws, EXTERNAL, ep)
                    np.add.at(comps[:, 3], ep, vals)
                    if record:
                        events.append((ep, et, np.full(len(ep), 1), ex))
                if np.any(is_jump):
                    jp = pp[is_jump]
                    jt = tp[is_jump]
                    jx = xp[is_jump]
                    Rj = R[is_jump]
                    cum = np.cumsum(Rj, axis=1)
                    target = u1[prop, 2][is_jump] * lam[is_jump]
                    col = np.minimum((cum <= target[:, None]).sum(axis=1), Rj.shape[1] - 1)
                    # never pick a padding column
                    valid = (Eidx[is_jump] >= 0).sum(axis=1) - 1
                    col = np.minimum(col, valid)
                    edge = Eidx[is_jump][np.arange(len(jp)), col]
                    close(jp, jt)
                    if ev.has_jump_rewards:
                        vals = _sample_lumps(ev._jump_fams, self.jump_lookup, edge, jx, jt, draws, JUMP, jp)
                        comps[jp, 1] += vals
                    y = ev.dst[edge]
                    x[jp] = y
                    t_last[jp] = jt
                    if record:
                        events.append((jp, jt, np.full(len(jp), 0), y))
                tau[pp] = tp

            finished = tau[active] >= H
            active = active[~finished]
            if buffered >= buffer_limit:
                flush()
        flush()
        paths = None
        if record:
            paths = _assemble_paths(events, n, x0, H)
        return comps, paths


def _rate_points(model: ModelSpec, horizon: float) -> np.ndarray:
    pts = []
    for f in model.rewards.rate:
        pts.append(f.declared_points(0.0, horizon))
    return np.concatenate(pts) if pts else np.empty(0)


def _assemble_paths(events, n, x0, horizon):
    if events:
        p = np.concatenate([e[0] for e in events])
        t = np.concatenate([e[1] for e in events])
        k = np.concatenate([e[2] for e in events])
        s = np.concatenate([e[3] for e in events])
    else:
        p = t = k = s = np.empty(0)
    out = []
    for i in range(n):
        m = p == i
        ti, ki, si = t[m], k[m], s[m].astype(int)
        order = np.argsort(ti, kind="stable")
        ti, ki, si = ti[order], ki[order], si[order]
        out.append(
            Path(
                horizon=horizon,
                initial_state=int(x0[i]),
                jump_times=ti[ki == 0],
                jump_states=si[ki == 0],
                external_times=ti[ki == 1],
                external_states=si[ki == 1],
                reset_times=ti[ki == 2],
                reset_states=si[ki == 2],
            )
        )
    return out


# --------------------------------------------------------------------------
# Public API


def simulate_path(model: ModelSpec, horizon: float, rng: Substream, reset_laws=None) -> Path:
    """Simulate one trajectory using the substream ``rng``."""
    _, paths = _Engine(model, horizon, reset_laws).run(rng.seed, [rng.index], record=True)
    return paths[0]


def accumulate_reward(model: ModelSpec, path: Path, rng: Substream) -> RewardSample:
    """Evaluate the reward of a recorded path.

    Lump rewards are drawn from the substream in the same order the batch
    simulator uses (per stream, in time order), so the result equals the
    simulator's own accounting for that path.
    """
    ev = model.evaluator
    starts, ends, states = path.pieces()
    bps = _Engine(model, path.horizon).breakpoints if model.bounds is not None else _rate_points(model, path.horizon)
    integrated = float(integrate_reward_rate(model, starts, ends, states, bps).sum())

    def draw_lump(law, stream, counter, t, xv):
        k = law.n_uniforms
        u = rng.uniforms(stream, counter, k) if k else np.empty(0)
        return float(np.ravel(law.sample(t, float(xv), u[None, :]))[0]), counter + k

    jump = 0.0
    if ev.has_jump_rewards and len(path.jump_times):
        prev = [_state_before(path, t) for t in path.jump_times]
        c = 0
        for t, a, b in zip(path.jump_times, prev, path.jump_states):
            law = model.rewards.jump.get((int(a), int(b)))
            if law is not None:
                v, c = draw_lump(law, JUMP, c, t, a)
                jump += v
    external = 0.0
    if ev.has_external:
        c = 0
        for t, s in zip(path.external_times, path.external_states):
            v, c = draw_lump(model.rewards.external.laws[int(s)], EXTERNAL, c, t, s)
            external += v
    scheduled = 0.0
    if ev.has_schedule:
        c = 0
        for t in model.rewards.schedule.times(0.0, path.horizon):
            s = path.state_at(t)
            v, c = draw_lump(model.rewards.scheduled_laws[s], SCHEDULED, c, t, s)
            scheduled += v
    return RewardSample(integrated, jump, scheduled, external)


def _state_before(path: Path, t: float) -> int:
    starts, _, states = path.pieces()
    return int(states[np.searchsorted(starts, t, side="left") - 1])


def _run_chunk(args):
    model, horizon, seed, indices, reset_laws = args
    comps, _ = _Engine(model, horizon, reset_laws).run(seed, indices)
    return comps


def simulate_rewards(
    model: ModelSpec,
    horizon: float,
    n_paths: int,
    seed: int = 0,
    workers: int = 1,
    batch_size: int = 4096,
    reset_laws=None,
    first_index: int = 0,
) -> np.ndarray:
    """Reward components of paths ``first_index .. first_index+n_paths-1``.

    Returns an ``(n_paths, 4)`` array with columns integrated, jump,
    scheduled and external.  The values are identical for any ``workers``
    and ``batch_size``.
    """
    idx = np.arange(first_index, first_index + n_paths)
    chunks = [idx[i : i + batch_size] for i in range(0, n_paths, batch_size)]
    jobs = [(model, horizon, seed, c, reset_laws) for c in chunks]
    if workers <= 1 or len(chunks) == 1:
        parts = [_run_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    return np.concatenate(parts) if parts else np.zeros((0, 4))


@dataclass(frozen=True)
class SampleStats:
    n: int
    mean: float
    variance: float
    se_mean: float
    se_variance: float
    query_points: tuple = ()
    ecdf: tuple = ()
    ecdf_halfwidth: tuple = ()
    samples: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    components: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def summary(self) -> dict:
        out = {
            "n_paths": self.n,
            "mean": self.mean,
            "variance": self.variance,
            "se_mean": self.se_mean,
            "se_variance": self.se_variance,
        }
        if self.query_points:
            out["ecdf"] = [
                {"z": z, "F": f, "ci_halfwidth": h} for z, f, h in zip(self.query_points, self.ecdf, self.ecdf_halfwidth)
            ]
        return out


def sample_stats(samples, query_points: Sequence[float] = ()) -> SampleStats:
    """Mean, variance, their standard errors, and the empirical CDF at ``query_points``.

    The standard error of the sample variance uses the fourth central
    moment: ``Var(s^2) ~ (m4 - (n-3)/(n-1) s^4) / n``.
    """
    r = np.asarray(samples, dtype=float)
    n = len(r)
    if n < 2:
        raise ValueError("need at least two samples")
    mean = float(np.mean(r))
    var = float(np.var(r, ddof=1))
    m4 = float(np.mean((r - mean) ** 4))
    se_var = math.sqrt(max(m4 - (n - 3) / (n - 1) * var * var, 0.0) / n)
    srt = np.sort(r)
    F = tuple(float(np.searchsorted(srt, q, side="right") / n) for q in query_points)
    hw = tuple(1.96 * math.sqrt(f * (1.0 - f) / n) for f in F)
    return SampleStats(
        n=n,
        mean=mean,
        variance=var,
        se_mean=math.sqrt(var / n),
        se_variance=se_var,
        query_points=tuple(float(q) for q in query_points),
        ecdf=F,
        ecdf_halfwidth=hw,
        samples=r,
    )


def monte_carlo(
    model: ModelSpec,
    horizon: float,
    n_paths: int,
    seed: int = 0,
    workers: int = 1,
    query_points: Sequence[float] = (),
    reset_laws=None,
    batch_size: int = 4096,
) -> SampleStats:
    """Monte-Carlo estimate of the law of R(horizon) from ``n_paths`` independent paths."""
    if n_paths < 2:
        raise ValueError("n_paths must be at least 2")
    comps = simulate_rewards(model, horizon, n_paths, seed, workers, batch_size, reset_laws)
    stats = sample_stats(comps.sum(axis=1), query_points)
    return SampleStats(**{**stats.__dict__, "components": comps})
