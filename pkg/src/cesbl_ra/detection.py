"""User detection in the delay-angle domain and AD/CE scoring."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NMSE_FLOOR_DB = -200.0
# theta1 = 1 would demand every row, including numerical dust
THETA1_CAP = 1.0 - 1e-9


def theta1_for_snr(snr_db: float) -> float:
    return min(1.0 / (1.0 + 10.0 ** (-snr_db / 10.0)), THETA1_CAP)


@dataclass(frozen=True)
class DetectorConfig:
    theta1: float = theta1_for_snr(15.0)
    theta2: float = 0.98
    theta3: int = 3
    user_nmse_gate_db: float = -15.0

    def __post_init__(self):
        if not 0.0 < self.theta1 < 1.0:
            raise ValueError(f"theta1 must lie in (0, 1), got {self.theta1}")
        if not 0.0 < self.theta2 <= 1.0:
            raise ValueError(f"theta2 must lie in (0, 1], got {self.theta2}")
        if self.theta3 < 1:
            raise ValueError(f"theta3 must be >= 1, got {self.theta3}")

    @classmethod
    def for_snr(cls, snr_db: float, **overrides):
        return cls(theta1=theta1_for_snr(snr_db), **overrides)


@dataclass
class DetectedUser:
    row_index: int
    pilot_index: int
    delay: int
    cluster_bins: list  # selected bins, circular order
    kept: np.ndarray  # bins kept when isolating this cluster
    channel_estimate: np.ndarray
    matched_truth: int | None = None
    nmse_db: float = float("nan")

    @property
    def matched(self) -> bool:
        return self.matched_truth is not None


@dataclass
class ScoreReport:
    mu_ad: float
    nmse_ce_db: float
    detected_count: int
    truth_count: int
    false_rows: int
    user_nmse_db: list = field(default_factory=list)


def nmse_db(estimate, truth) -> float:
    """10 log10(||est - truth||^2 / ||est||^2), normalised by the estimate."""
    num = float(np.sum(np.abs(np.asarray(estimate) - np.asarray(truth)) ** 2))
    den = float(np.sum(np.abs(estimate) ** 2))
    if num == 0.0:
        return NMSE_FLOOR_DB
    if den == 0.0:
        return -NMSE_FLOOR_DB
    return float(np.clip(10.0 * np.log10(num / den), NMSE_FLOOR_DB, -NMSE_FLOOR_DB))


def _energy_prefix(values: np.ndarray, fraction: float) -> np.ndarray:
    order = np.argsort(-values, kind="stable")
    cum = np.cumsum(values[order])
    if cum[-1] == 0.0:
        return order[:0]
    k = int(np.searchsorted(cum, fraction * cum[-1], side="left"))
    return order[: min(k, len(order) - 1) + 1]


def detect_rows(X_est, theta1: float) -> list[int]:
    """Fewest rows, strongest first, holding at least theta1 of the total energy."""
    energy = np.sum(np.abs(np.asarray(X_est)) ** 2, axis=1)
    return [int(r) for r in _energy_prefix(energy, theta1)]


def dominant_bins(row, fraction: float) -> np.ndarray:
    return np.sort(_energy_prefix(np.abs(np.asarray(row)) ** 2, fraction))


def group_circular(bins, M: int, theta3: int) -> list[list[int]]:
    """Split sorted bins into runs whose circular gaps are at most theta3."""
    bins = sorted(int(b) for b in bins)
    if not bins:
        return []
    if len(bins) == 1:
        return [bins]
    gaps = np.diff(bins + [bins[0] + M])
    if np.all(gaps <= theta3):
        return [bins]
    start = (int(np.argmax(gaps > theta3)) + 1) % len(bins)
    seq = bins[start:] + bins[:start]
    groups, current = [], [seq[0]]
    for prev, nxt in zip(seq[:-1], seq[1:]):
        if (nxt - prev) % M <= theta3:
            current.append(nxt)
        else:
            groups.append(current)
            current = [nxt]
    groups.append(current)
    return sorted(groups, key=min)


def segment_clusters(row, theta2: float, theta3: int) -> list[list[int]]:
    row = np.asarray(row)
    return group_circular(dominant_bins(row, theta2), row.shape[0], theta3)


def kept_bins(clusters, M: int) -> list[np.ndarray]:
    """Bins kept for each cluster: everything except the other clusters' bins."""
    out = []
    for i in range(len(clusters)):
        keep = np.ones(M, dtype=bool)
        for j, other in enumerate(clusters):
            if j != i:
                keep[list(other)] = False
        out.append(np.flatnonzero(keep))
    return out


def recover_user_channels(row_index, row, clusters, Psi):
    """Zero the other clusters of the row and map it back to the antenna domain."""
    row = np.asarray(row)
    out = []
    for cluster, keep in zip(clusters, kept_bins(clusters, row.shape[0])):
        masked = np.zeros_like(row)
        masked[keep] = row[keep]
        out.append((cluster, keep, masked @ Psi.conj().T))
    return out


def extract_identity(row_index: int, t_m: int, n_rows: int | None = None) -> tuple[int, int]:
    if row_index < 0 or (n_rows is not None and row_index >= n_rows):
        raise IndexError(f"row {row_index} outside [0, {n_rows})")
    pilot, delay = divmod(int(row_index), t_m + 1)
    return pilot, delay


def detect_users(X_est, t_m: int, cfg: DetectorConfig, Psi) -> list[DetectedUser]:
    X_est = np.asarray(X_est)
    found = []
    for r in detect_rows(X_est, cfg.theta1):
        row = X_est[r]
        clusters = segment_clusters(row, cfg.theta2, cfg.theta3)
        pilot, delay = extract_identity(r, t_m, X_est.shape[0])
        for bins, keep, est in recover_user_channels(r, row, clusters, Psi):
            found.append(DetectedUser(r, pilot, delay, list(bins), keep, est))
    return found


def match_and_score(truth, detections, cfg: DetectorConfig, X_est=None, Psi=None) -> ScoreReport:
    """Pair truth users with detected clusters and compute mu_AD and NMSE_CE."""
    users = truth.users
    if not users:
        raise ValueError("ground truth holds no users")
    M = truth.X_hat.shape[1]
    if Psi is None:
        from .airlink import dft_transform_matrix

        Psi = dft_transform_matrix(M)
    dominant = [set(dominant_bins(u.channel @ Psi, cfg.theta2).tolist()) for u in users]
    pairs = []
    for k, row in enumerate(truth.user_rows):
        for di, det in enumerate(detections):
            if det.row_index != row:
                continue
            overlap = len(dominant[k] & set(det.cluster_bins))
            if overlap > 0:
                pairs.append((-overlap, min(det.cluster_bins), k, di))
    pairs.sort()
    user_taken, det_taken = {}, set()
    for _, _, k, di in pairs:
        if k in user_taken or di in det_taken:
            continue
        user_taken[k] = di
        det_taken.add(di)
    for det in detections:
        det.matched_truth = None
    detected, per_user = 0, []
    for k, u in enumerate(users):
        di = user_taken.get(k)
        if di is None:
            per_user.append(float("nan"))
            continue
        det = detections[di]
        det.matched_truth = k
        det.nmse_db = nmse_db(det.channel_estimate, u.channel)
        per_user.append(det.nmse_db)
        if det.nmse_db <= cfg.user_nmse_gate_db:
            detected += 1
    false_rows = len({d.row_index for d in detections} - set(truth.support_rows))
    nmse_ce = nmse_db(X_est, truth.X_hat) if X_est is not None else float("nan")
    return ScoreReport(
        mu_ad=detected / len(users),
        nmse_ce_db=nmse_ce,
        detected_count=detected,
        truth_count=len(users),
        false_rows=false_rows,
        user_nmse_db=per_user,
    )


def format_detections(detections) -> str:
    lines = []
    for d in detections:
        bins = ",".join(str(b) for b in d.cluster_bins)
        lines.append(f"{d.pilot_index} {d.delay} {bins} {d.nmse_db:.3f} {int(d.matched)}")
    return "\n".join(lines) + "\n"
