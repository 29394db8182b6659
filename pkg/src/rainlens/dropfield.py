"""Stochastic droplet population on the virtual pane.

Droplets spawn with a per-pixel probability, carry a physical diameter and a
random per-axis scale, and on every timestep large droplets (diameter above
4 mm) slip: a 5-pixel downward move with the configured probability plus a
normal horizontal jitter with standard deviation 3 pixels. Droplets at or
below 4 mm never move. Nearby droplets merge visually through a shared
metaball field.

All randomness flows through three named generator streams (spawn, scale,
slip) seeded from the config seed, so a field replayed with the same config
and operation sequence reproduces its droplet list element-wise.
"""

from dataclasses import dataclass, replace
from typing import List, Tuple

import numpy as np

from .errors import ParameterError

# Slip model constants: droplets at or below the diameter threshold are
# pinned; larger ones move 5 px down per slip event and jitter sideways.
SLIP_DIAMETER_MM = 4.0
SLIP_STEP_PX = 5.0
SLIP_JITTER_STD_PX = 3.0

# Metaball kernel support, as a multiple of the droplet footprint radius.
KERNEL_REACH = 1.5


@dataclass
class Droplet:
    id: int
    u: float
    v: float
    diameter_mm: float
    sx: float
    sy: float
    age: int = 0

    def semi_axes(self, pixels_per_mm):
        """Footprint semi-axes (ax, ay) in pixels."""
        r = self.diameter_mm * pixels_per_mm / 2.0
        return self.sx * r, self.sy * r


@dataclass
class FieldConfig:
    """Tunable parameters of the droplet population."""

    p_r: float = 0.0006        # per-pixel per-frame spawn probability
    p_d: float = 0.3           # vertical slip probability per step
    scale_range: Tuple[float, float] = (0.8, 1.2)
    diameter_range_mm: Tuple[float, float] = (1.0, 8.0)
    pixels_per_mm: float = 8.0
    metaball_threshold: float = 0.4
    seed: int = 0
    max_drops: int = 2000
    spawn_every_frame: bool = False

    def __post_init__(self):
        if not 0.0 <= self.p_r <= 1.0:
            raise ParameterError(f"p_r must be in [0, 1], got {self.p_r}")
        if not 0.0 <= self.p_d <= 1.0:
            raise ParameterError(f"p_d must be in [0, 1], got {self.p_d}")
        for name, rng in (("scale_range", self.scale_range),
                          ("diameter_range_mm", self.diameter_range_mm)):
            lo, hi = rng
            if not (0.0 < lo <= hi):
                raise ParameterError(f"{name} must satisfy 0 < min <= max, got {rng}")
        if self.pixels_per_mm <= 0:
            raise ParameterError(f"pixels_per_mm must be positive, got {self.pixels_per_mm}")
        if not 0.0 < self.metaball_threshold <= 1.0:
            # A single droplet's kernel peaks at 1.0, so thresholds above 1
            # would erase isolated droplets.
            raise ParameterError(
                f"metaball_threshold must be in (0, 1], got {self.metaball_threshold}")
        if self.max_drops < 0:
            raise ParameterError(f"max_drops must be >= 0, got {self.max_drops}")

    def to_dict(self):
        return {
            "p_r": self.p_r,
            "p_d": self.p_d,
            "scale_range": list(self.scale_range),
            "diameter_range_mm": list(self.diameter_range_mm),
            "pixels_per_mm": self.pixels_per_mm,
            "metaball_threshold": self.metaball_threshold,
            "seed": int(self.seed),
            "max_drops": self.max_drops,
            "spawn_every_frame": self.spawn_every_frame,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["scale_range"] = tuple(d["scale_range"])
        d["diameter_range_mm"] = tuple(d["diameter_range_mm"])
        return cls(**d)

    def with_seed(self, seed):
        return replace(self, seed=int(seed))


def _metaball_term(rho2):
    """Kernel value for squared normalized distance (footprint edge at 1).

    Must mirror the expression in the _kernels backends exactly; the
    composite alpha support is defined as this field reaching the threshold.
    """
    q = 1.0 - rho2 / (KERNEL_REACH * KERNEL_REACH)
    return np.where(q > 0.0, q * q, 0.0)


class DropField:
    """Mutable droplet population over an image pane.

    Single-owner state: call spawn/step sequentially. Distinct fields are
    independent and may be evolved on distinct threads.
    """

    def __init__(self, config: FieldConfig, image_dims: Tuple[int, int]):
        w, h = image_dims
        if w <= 0 or h <= 0:
            raise ParameterError(f"image_dims must be positive, got {image_dims}")
        self.config = config
        self.width = int(w)
        self.height = int(h)
        self.droplets: List[Droplet] = []
        self.frame = 0
        self._next_id = 0
        seqs = np.random.SeedSequence(config.seed).spawn(3)
        self.rng_streams = {
            "spawn": np.random.default_rng(seqs[0]),
            "scale": np.random.default_rng(seqs[1]),
            "slip": np.random.default_rng(seqs[2]),
        }

    def spawn(self, image_dims=None):
        """Spawn new droplets; each pixel is a Bernoulli(p_r) spawn site.

        Implemented as one Binomial(W*H, p_r) draw for the count plus
        uniform placement, which is distributionally identical to the
        per-pixel formulation. Saturates at max_drops. Consumes only the
        spawn and scale streams.
        """
        if image_dims is not None:
            w, h = image_dims
            if w <= 0 or h <= 0:
                raise ParameterError(f"image_dims must be positive, got {image_dims}")
        else:
            w, h = self.width, self.height
        cfg = self.config
        if cfg.p_r == 0.0 or cfg.max_drops == 0:
            return self
        spawn_rng = self.rng_streams["spawn"]
        scale_rng = self.rng_streams["scale"]
        k = int(spawn_rng.binomial(int(w) * int(h), cfg.p_r))
        k = min(k, cfg.max_drops - len(self.droplets))
        if k <= 0:
            return self
        us = spawn_rng.uniform(0.0, w, k)
        vs = spawn_rng.uniform(0.0, h, k)
        sxs = scale_rng.uniform(cfg.scale_range[0], cfg.scale_range[1], k)
        sys_ = scale_rng.uniform(cfg.scale_range[0], cfg.scale_range[1], k)
        ds = scale_rng.uniform(cfg.diameter_range_mm[0], cfg.diameter_range_mm[1], k)
        for i in range(k):
            self.droplets.append(Droplet(
                id=self._next_id, u=float(us[i]), v=float(vs[i]),
                diameter_mm=float(ds[i]), sx=float(sxs[i]), sy=float(sys_[i])))
            self._next_id += 1
        return self

    def step(self):
        """Advance one timestep: slip large droplets, cull exited ones.

        Droplets with diameter <= 4 mm keep their center and consume no
        randomness. Larger droplets draw, in list order, a horizontal jitter
        N(0, 3^2) and a Bernoulli(p_d) event for a 5 px downward slip, both
        from the slip stream. Droplets whose footprint has fully left the
        bottom edge are removed. With spawn_every_frame set, spawning runs
        after motion.
        """
        cfg = self.config
        slip_rng = self.rng_streams["slip"]
        survivors = []
        for d in self.droplets:
            if d.diameter_mm > SLIP_DIAMETER_MM:
                dx = slip_rng.normal(0.0, SLIP_JITTER_STD_PX)
                slipped = slip_rng.random() < cfg.p_d
                d.u += dx
                if slipped:
                    d.v += SLIP_STEP_PX
            d.age += 1
            _, ay = d.semi_axes(cfg.pixels_per_mm)
            if d.v - ay > self.height - 1:
                continue
            survivors.append(d)
        self.droplets = survivors
        if cfg.spawn_every_frame:
            self.spawn()
        self.frame += 1
        return self

    def field_function(self, x, y):
        """Summed metaball field at sub-pixel positions (x, y).

        Accepts scalars or arrays; returns matching shape. The field of an
        empty population is zero; at any droplet center it is at least the
        kernel peak of 1.0.
        """
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        total = np.zeros(np.broadcast(x, y).shape, dtype=np.float64)
        ppmm = self.config.pixels_per_mm
        for d in self.droplets:
            ax, ay = d.semi_axes(ppmm)
            nx = (x - d.u) / ax
            ny = (y - d.v) / ay
            total += _metaball_term(ny * ny + nx * nx)
        if total.ndim == 0:
            return float(total)
        return total

    def to_record(self):
        """Per-frame state record: frame index, seed, and droplet tuples."""
        return {
            "frame": self.frame,
            "seed": int(self.config.seed),
            "droplets": [[d.id, d.u, d.v, d.diameter_mm, d.sx, d.sy]
                         for d in self.droplets],
        }

    @classmethod
    def from_record(cls, config, image_dims, record):
        """Rebuild a field from a recorded state (used by replay).

        The droplet list is restored verbatim; generator streams are seeded
        fresh, so only rendering (not further stochastic evolution) is
        reproducible from a record.
        """
        out = cls(config, image_dims)
        out.frame = int(record["frame"])
        for did, u, v, dmm, sx, sy in record["droplets"]:
            out.droplets.append(Droplet(
                id=int(did), u=float(u), v=float(v),
                diameter_mm=float(dmm), sx=float(sx), sy=float(sy)))
        out._next_id = 1 + max((d.id for d in out.droplets), default=-1)
        return out

    def __len__(self):
        return len(self.droplets)
