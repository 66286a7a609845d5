"""Driver path generators: Brownian, fractional Brownian, Levy.

All generators are deterministic functions of their spec (same spec, same
bits).  Brownian paths on dyadic grids are built by midpoint-bridge
refinement with per-level RNG streams keyed on (seed, level), so regenerating
at a finer dyadic level literally preserves the coarse values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field

import numpy as np

from .paths import SampledPath

KINDS = ("brownian", "fbm", "levy", "deterministic-file")

_FBM_GRID_LIMIT = 2**14


@dataclass(frozen=True)
class DriverSpec:
    """Serializable description of a driver path.

    mesh may be given directly or as a dyadic level (mesh = 2^-level).
    params carries kind-specific settings (H for fbm; drift / covariance /
    jump settings for levy; path for deterministic-file).
    """

    kind: str
    dim: int = 1
    T: float = 1.0
    mesh: float | None = None
    level: int | None = None
    seed: int = 0
    params: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown driver kind {self.kind!r}; expected one of {KINDS}")
        if self.kind != "deterministic-file":
            if (self.mesh is None) == (self.level is None):
                raise ValueError("exactly one of mesh, level must be set")
            if self.T <= 0:
                raise ValueError("horizon T must be positive")
            if self.dim < 1:
                raise ValueError("dim must be >= 1")

    @property
    def step(self) -> float:
        return self.mesh if self.mesh is not None else 2.0 ** (-self.level)

    def generate(self) -> SampledPath:
        return generate(self)

    def to_json(self) -> str:
        return json.dumps({
            "kind": self.kind, "dim": self.dim, "T": self.T,
            "mesh": self.mesh, "level": self.level, "seed": self.seed,
            "params": self.params,
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DriverSpec":
        raw = json.loads(text)
        known = {"kind", "dim", "T", "mesh", "level", "seed", "params"}
        extra = set(raw) - known
        if extra:
            raise ValueError(f"unknown driver spec fields: {sorted(extra)}")
        return cls(**raw)


def generate(spec: DriverSpec) -> SampledPath:
    """Dispatch on spec.kind."""
    if spec.kind == "brownian":
        return brownian(spec)
    if spec.kind == "fbm":
        return fbm(spec)
    if spec.kind == "levy":
        return levy(spec)
    return SampledPath.from_csv(spec.params["path"])


def _grid(spec: DriverSpec):
    h = spec.step
    n = h and spec.T / h
    n_cells = int(round(n))
    if abs(n - n_cells) > 1e-9 or n_cells < 1:
        raise ValueError(f"mesh {h} must divide the horizon T={spec.T} into whole cells")
    return np.linspace(0.0, spec.T, n_cells + 1), n_cells


def _level_rng(seed, level):
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(level)]))


def brownian(spec: DriverSpec) -> SampledPath:
    """Standard Brownian path, one independent coordinate per dim.

    On dyadic grids (cell count a power of two) the path is built by midpoint
    bridge refinement: level 0 draws W_T, level l fills the midpoints of the
    level l-1 cells from an RNG stream keyed on (seed, l).  Values on coarser
    dyadic grids are therefore preserved bit for bit under refinement with
    the same seed.  Non-dyadic cell counts fall back to plain sequential
    increments (deterministic, but without the refinement property).
    """
    if spec.kind != "brownian":
        raise ValueError("spec.kind must be 'brownian'")
    times, n_cells = _grid(spec)
    d = spec.dim
    if n_cells & (n_cells - 1) == 0:
        L = n_cells.bit_length() - 1
        W = np.zeros((n_cells + 1, d))
        W[-1] = np.sqrt(spec.T) * _level_rng(spec.seed, 0).standard_normal(d)
        for lev in range(1, L + 1):
            seg = n_cells >> (lev - 1)          # index stride of the parent cells
            half = seg >> 1
            left = np.arange(0, n_cells, seg)
            z = _level_rng(spec.seed, lev).standard_normal((left.shape[0], d))
            sd = 0.5 * np.sqrt(spec.T * 2.0 ** (-(lev - 1)))
            W[left + half] = 0.5 * (W[left] + W[left + seg]) + sd * z
        return SampledPath(times, W)
    # key far above any bridge level index (SeedSequence wants nonnegative)
    rng = np.random.default_rng(np.random.SeedSequence([int(spec.seed), 2 ** 20]))
    incs = np.sqrt(spec.step) * rng.standard_normal((n_cells, d))
    W = np.vstack([np.zeros((1, d)), np.cumsum(incs, axis=0)])
    return SampledPath(times, W)


_fbm_factor_cache: dict = {}


def _fbm_cholesky(H, times, jitter):
    key = (float(H), float(jitter), times.tobytes())
    hit = _fbm_factor_cache.get(key)
    if hit is not None:
        return hit
    t = times[1:]
    s, u = np.meshgrid(t, t, indexing="ij")
    cov = 0.5 * (s**(2 * H) + u**(2 * H) - np.abs(s - u)**(2 * H))
    if jitter:
        cov = cov + jitter * np.eye(cov.shape[0])
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            "fbm covariance factorization failed; pass params={'jitter': 1e-10} "
            f"(or larger) to regularize ({exc})"
        ) from None
    if len(_fbm_factor_cache) >= 4:
        _fbm_factor_cache.pop(next(iter(_fbm_factor_cache)))
    _fbm_factor_cache[key] = L
    return L


def fbm(spec: DriverSpec) -> SampledPath:
    """Fractional Brownian path by exact covariance factorization.

    Covariance C(s,t) = (s^2H + t^2H - |t-s|^2H)/2 per coordinate; the grid
    (less t=0) is factorized by Cholesky and multiplied against seeded
    standard normals.  Exact in distribution at the sampled times for any
    H in (0, 1).  Grid size is capped at 2^14 (dense factorization).
    """
    if spec.kind != "fbm":
        raise ValueError("spec.kind must be 'fbm'")
    H = float(spec.params.get("H", 0.5))
    if not (0.0 < H < 1.0):
        raise ValueError(f"Hurst index must lie in (0, 1), got {H}")
    times, n_cells = _grid(spec)
    if n_cells + 1 > _FBM_GRID_LIMIT:
        raise ValueError(f"fbm grid capped at {_FBM_GRID_LIMIT} points, got {n_cells + 1}")
    L = _fbm_cholesky(H, times, float(spec.params.get("jitter", 0.0)))
    rng = np.random.default_rng(np.random.SeedSequence([int(spec.seed), 2]))
    z = rng.standard_normal((n_cells, spec.dim))
    vals = np.vstack([np.zeros((1, spec.dim)), L @ z])
    return SampledPath(times, vals)


def _jump_sampler(params, dim):
    """Returns sampler(rng, n) -> (n, dim) jump sizes with finite moments.

    Named samplers keep the jump measure integrable by construction: uniform
    and fixed have bounded support, normal has all moments, pareto is
    truncated at a hard cap.
    """
    dist = params.get("dist", "uniform")
    scale = float(params.get("scale", 1.0))
    if dist == "uniform":
        return lambda rng, n: scale * rng.uniform(-1.0, 1.0, size=(n, dim))
    if dist == "normal":
        return lambda rng, n: scale * rng.standard_normal((n, dim))
    if dist == "fixed":
        size = np.asarray(params["size"], dtype=float).reshape(1, dim)
        return lambda rng, n: np.repeat(size, n, axis=0)
    if dist == "pareto":
        cap = float(params.get("cap", 100.0))
        shape = float(params.get("shape", 2.5))
        def draw(rng, n):
            mag = np.minimum(scale * (1.0 + rng.pareto(shape, size=n)), cap)
            sign = rng.choice([-1.0, 1.0], size=n)
            out = np.zeros((n, dim))
            out[:, 0] = mag * sign
            return out
        return draw
    raise ValueError(f"unknown jump dist {dist!r}")


def levy(spec: DriverSpec) -> SampledPath:
    """Levy path: drift + correlated Brownian part + compound Poisson jumps.

    params: drift (vector), cov (dim x dim PSD matrix or scalar), intensity
    (jump rate), jump (sampler settings), optional explicit jumps
    [[time, [sizes]], ...] overriding the Poisson draw, optional jump_floor.
    Jump times are inserted as extra grid points; the value AT an inserted
    time includes its jump, so the increment ending there carries it.  Jumps
    below jump_floor are dropped with their compensator (rate x mean of the
    dropped part, estimated once from 1e5 sampler draws) folded into the
    drift.
    """
    if spec.kind != "levy":
        raise ValueError("spec.kind must be 'levy'")
    p = spec.params
    d = spec.dim
    base_times, _ = _grid(spec)
    drift = np.broadcast_to(np.asarray(p.get("drift", 0.0), dtype=float), (d,)).astype(float)
    cov = np.asarray(p.get("cov", 0.0), dtype=float)
    if cov.ndim == 0:
        cov = float(cov) * np.eye(d)
    if cov.shape != (d, d):
        raise ValueError(f"cov must be scalar or ({d}, {d})")
    intensity = float(p.get("intensity", 0.0))
    rng = np.random.default_rng(np.random.SeedSequence([int(spec.seed), 3]))

    if "jumps" in p:
        jump_times = np.asarray([jt for jt, _ in p["jumps"]], dtype=float)
        jump_sizes = np.asarray([js for _, js in p["jumps"]], dtype=float).reshape(-1, d)
    elif intensity > 0:
        n_jumps = rng.poisson(intensity * spec.T)
        jump_times = np.sort(rng.uniform(0.0, spec.T, size=n_jumps))
        jump_sizes = _jump_sampler(p.get("jump", {}), d)(rng, n_jumps)
    else:
        jump_times = np.empty(0)
        jump_sizes = np.empty((0, d))

    floor = float(p.get("jump_floor", 0.0))
    if floor > 0 and intensity > 0 and "jumps" not in p:
        sampler = _jump_sampler(p.get("jump", {}), d)
        probe = sampler(np.random.default_rng(np.random.SeedSequence([int(spec.seed), 4])), 100_000)
        small = np.linalg.norm(probe, axis=1) < floor
        compensator = intensity * probe[small].sum(axis=0) / probe.shape[0]
        drift = drift + compensator
        keep = np.linalg.norm(jump_sizes, axis=1) >= floor
        jump_times, jump_sizes = jump_times[keep], jump_sizes[keep]

    # merge jump times into the grid (dedupe against existing points)
    times = base_times
    for jt in jump_times:
        if np.min(np.abs(times - jt)) > 1e-12 * max(1.0, spec.T):
            times = np.insert(times, np.searchsorted(times, jt), jt)
    n = times.shape[0]

    vals = times[:, None] * drift[None, :]
    if np.any(cov):
        Lc = np.linalg.cholesky(cov + 1e-15 * np.eye(d))
        dt = np.diff(times)
        dW = np.sqrt(dt)[:, None] * rng.standard_normal((n - 1, d))
        vals = vals + np.vstack([np.zeros((1, d)), np.cumsum(dW @ Lc.T, axis=0)])
    if jump_times.shape[0]:
        steps = np.zeros((n, d))
        for jt, js in zip(jump_times, jump_sizes):
            idx = int(np.argmin(np.abs(times - jt)))
            steps[idx:] += js
        vals = vals + steps
    return SampledPath(times, vals)
