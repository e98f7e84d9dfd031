"""One-ring multipath channels for the active users."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ChannelParams:
    M: int = 64
    L_path: int = 16
    delta_deg: float = 15.0
    L_cp: int = 64
    bandwidth: float = 1.4e6
    antenna_spacing_ratio: float = 0.5

    def __post_init__(self):
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if self.L_path < 1:
            raise ValueError(f"L_path must be >= 1, got {self.L_path}")
        if not 0.0 <= self.delta_deg < 90.0:
            raise ValueError(f"delta_deg must lie in [0, 90), got {self.delta_deg}")
        if self.antenna_spacing_ratio <= 0:
            raise ValueError("antenna_spacing_ratio must be positive")

    @property
    def delta(self) -> float:
        return np.deg2rad(self.delta_deg)


@dataclass
class UserRealization:
    pilot_index: int
    frame_delay: int
    center_angle: float
    gains: np.ndarray
    angles: np.ndarray
    tap_delays: np.ndarray
    channel: np.ndarray = field(repr=False)

    @property
    def paths(self):
        return list(zip(self.gains, self.angles, self.tap_delays))


def array_response(angle, M: int, spacing_ratio: float = 0.5) -> np.ndarray:
    """ULA steering vector; entry m is exp(-2j*pi*m*(d/lambda)*sin(angle))."""
    m = np.arange(M)
    return np.exp(-2j * np.pi * m * spacing_ratio * np.sin(angle))


def assemble_channel(gains, angles, tap_delays, params: ChannelParams) -> np.ndarray:
    steer = array_response(np.asarray(angles)[:, None], params.M, params.antenna_spacing_ratio)
    phase = np.exp(1j * np.pi * np.asarray(tap_delays) * params.bandwidth)
    return (np.asarray(gains) * phase) @ steer


def draw_user(params: ChannelParams, n_pilots: int, t_m: int, rng: np.random.Generator) -> UserRealization:
    pilot = int(rng.integers(n_pilots))
    delay = int(rng.integers(t_m + 1))
    delta = params.delta
    center = rng.uniform(-np.pi / 2 + delta, np.pi / 2 - delta)
    angles = rng.uniform(center - delta, center + delta, size=params.L_path)
    gains = (rng.standard_normal(params.L_path) + 1j * rng.standard_normal(params.L_path)) / np.sqrt(2)
    taus = rng.uniform(0.0, params.L_cp / params.bandwidth, size=params.L_path)
    return UserRealization(
        pilot_index=pilot,
        frame_delay=delay,
        center_angle=float(center),
        gains=gains,
        angles=angles,
        tap_delays=taus,
        channel=assemble_channel(gains, angles, taus, params),
    )


def sample_actives(K: int, params: ChannelParams, n_pilots: int, t_m: int, rng) -> list[UserRealization]:
    """K independent users; (pilot, delay) collisions are allowed."""
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    return [draw_user(params, n_pilots, t_m, rng) for _ in range(K)]


def format_ground_truth(users) -> str:
    """One line per user: pilot, delay, center angle, then channel re/im pairs."""
    lines = []
    for u in users:
        coeffs = " ".join(f"{z.real:.17g} {z.imag:.17g}" for z in u.channel)
        lines.append(f"{u.pilot_index} {u.frame_delay} {u.center_angle:.17g} {coeffs}")
    return "\n".join(lines) + "\n"
