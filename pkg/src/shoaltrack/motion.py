"""Constant-velocity Kalman filter over (cx, cy, w, h) box state.

State is ``(cx, cy, w, h, vcx, vcy, vw, vh)``. All noise standard deviations
scale with the box height, as in the SORT/ByteTrack family.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mot_io import BBox

_NDIM = 4
_F = np.eye(2 * _NDIM)
_F[:_NDIM, _NDIM:] = np.eye(_NDIM)
_H = np.eye(_NDIM, 2 * _NDIM)
MIN_SIZE = 1.0


@dataclass(frozen=True)
class KalmanNoise:
    std_weight_position: float = 0.05
    std_weight_velocity: float = 0.00625
    std_weight_measurement: float = 0.05


@dataclass(frozen=True, eq=False)
class KalmanState:
    mean: np.ndarray
    covariance: np.ndarray

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KalmanState):
            return NotImplemented
        return np.array_equal(self.mean, other.mean) and np.array_equal(
            self.covariance, other.covariance
        )

    def to_box(self) -> BBox:
        cx, cy, w, h = self.mean[:4]
        return BBox.from_center(float(cx), float(cy), max(float(w), MIN_SIZE), max(float(h), MIN_SIZE))


def _clamp_size(mean: np.ndarray) -> np.ndarray:
    mean[2] = max(mean[2], MIN_SIZE)
    mean[3] = max(mean[3], MIN_SIZE)
    return mean


def kf_init(box: BBox, noise: KalmanNoise = KalmanNoise()) -> KalmanState:
    mean = np.array([box.cx, box.cy, box.width, box.height, 0.0, 0.0, 0.0, 0.0])
    pos_std = 2.0 * noise.std_weight_position * box.height
    std = np.r_[np.full(_NDIM, pos_std), np.full(_NDIM, 10.0 * pos_std)]
    return KalmanState(mean, np.diag(std**2))


def kf_predict(state: KalmanState, noise: KalmanNoise = KalmanNoise()) -> KalmanState:
    h = state.mean[3]
    std = np.r_[
        np.full(_NDIM, noise.std_weight_position * h),
        np.full(_NDIM, noise.std_weight_velocity * h),
    ]
    mean = _clamp_size(_F @ state.mean)
    cov = _F @ state.covariance @ _F.T + np.diag(std**2)
    return KalmanState(mean, 0.5 * (cov + cov.T))


def kf_update(
    state: KalmanState, measurement: BBox, noise: KalmanNoise = KalmanNoise()
) -> KalmanState:
    z = np.array([measurement.cx, measurement.cy, measurement.width, measurement.height])
    if not np.all(np.isfinite(z)):
        raise ValueError(f"non-finite measurement {z}")
    r_std = noise.std_weight_measurement * state.mean[3]
    innovation_cov = _H @ state.covariance @ _H.T + np.diag(np.full(_NDIM, r_std**2))
    pht = state.covariance @ _H.T
    gain = np.linalg.solve(innovation_cov, pht.T).T
    mean = _clamp_size(state.mean + gain @ (z - _H @ state.mean))
    # Joseph form keeps the covariance PSD under rounding.
    ikh = np.eye(2 * _NDIM) - gain @ _H
    r = np.diag(np.full(_NDIM, r_std**2))
    cov = ikh @ state.covariance @ ikh.T + gain @ r @ gain.T
    return KalmanState(mean, 0.5 * (cov + cov.T))
