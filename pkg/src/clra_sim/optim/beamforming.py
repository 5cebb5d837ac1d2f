#!/usr/bin/env python3
"""
Receive beamforming and rate evaluation

MRC and MMSE receivers (the MMSE inverse goes through the Woodbury
identity so only a (K-1) x (K-1) system is solved), per-user SINR and
sum rate. Beamformers are rows w_k with w_k @ h_k real and non-negative.
"""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from scipy import linalg

from ..core.utils import log_message

WOODBURY_COND_LIMIT = 1e12


@dataclass
class BeamformerSet:
    """K x Q unit-norm receive beamformers, one row per user"""

    weights: np.ndarray
    fallback: List[bool] = field(default_factory=list)

    @property
    def num_users(self) -> int:
        return self.weights.shape[0]

    @property
    def used_fallback(self) -> bool:
        return any(self.fallback)


@dataclass
class RateReport:
    """Per-user SINR and rate plus the sum rate (bits/s/Hz)"""

    sinr: np.ndarray
    rates: np.ndarray
    sum_rate: float


def _unit_row(v: np.ndarray) -> np.ndarray:
    """conj(v) / ||v||, or the first unit vector when v vanishes"""
    norm = np.linalg.norm(v)
    if norm == 0:
        w = np.zeros(v.shape[0], dtype=complex)
        w[0] = 1.0
        return w
    return np.conj(v) / norm


def mrc(h: np.ndarray) -> np.ndarray:
    """
    Maximum ratio combiner for channel h

    Raises:
        ValueError: For an all-zero channel
    """
    h = np.asarray(h, dtype=complex).ravel()
    if not np.any(h):
        raise ValueError("MRC is undefined for a zero channel")
    return np.conj(h) / np.linalg.norm(h)


def _mmse_direction(
    H: np.ndarray, powers: np.ndarray, k: int, cond_limit: float
) -> Tuple[np.ndarray, bool]:
    """C_k^{-1} h_k and whether the direct Q x Q solve was needed"""
    h = H[:, k]
    others = [i for i in range(H.shape[1]) if i != k and powers[i] > 0]
    if not others:
        return h.copy(), False

    H_i = H[:, others]
    inner = np.diag(1.0 / powers[others]) + H_i.conj().T @ H_i
    if np.linalg.cond(inner) <= cond_limit:
        correction = linalg.solve(inner, H_i.conj().T @ h, assume_a="her")
        return h - H_i @ correction, False

    C = np.eye(H.shape[0]) + (H_i * powers[others]) @ H_i.conj().T
    return linalg.solve(C, h, assume_a="her"), True


def mmse(
    H: np.ndarray, powers: np.ndarray, k: int, cond_limit: float = WOODBURY_COND_LIMIT
) -> np.ndarray:
    """
    MMSE receiver of user k

    Args:
        H: Q x K channel matrix
        powers: Normalised transmit powers P_i / sigma^2
        k: User index
        cond_limit: Condition number above which the Woodbury inner solve
            is replaced by a direct Q x Q solve

    Returns:
        Unit-norm row vector w_k
    """
    H = np.asarray(H, dtype=complex)
    if not 0 <= k < H.shape[1]:
        raise ValueError(f"User index {k} out of range")
    v, fell_back = _mmse_direction(H, np.asarray(powers, dtype=float), k, cond_limit)
    if fell_back:
        log_message(
            f"Woodbury inner matrix ill-conditioned for user {k}; used direct solve",
            "WARNING",
        )
    return _unit_row(v)


def mmse_direct(H: np.ndarray, powers: np.ndarray, k: int) -> np.ndarray:
    """MMSE receiver through an explicit Q x Q inverse (reference implementation)"""
    H = np.asarray(H, dtype=complex)
    powers = np.asarray(powers, dtype=float)
    C = np.eye(H.shape[0], dtype=complex)
    for i in range(H.shape[1]):
        if i != k:
            C += powers[i] * np.outer(H[:, i], H[:, i].conj())
    return _unit_row(np.linalg.inv(C) @ H[:, k])


def mmse_beamformers(
    H: np.ndarray, powers: np.ndarray, cond_limit: float = WOODBURY_COND_LIMIT
) -> BeamformerSet:
    """MMSE receivers for all users"""
    H = np.asarray(H, dtype=complex)
    powers = np.asarray(powers, dtype=float)
    rows, flags = [], []
    for k in range(H.shape[1]):
        v, fell_back = _mmse_direction(H, powers, k, cond_limit)
        rows.append(_unit_row(v))
        flags.append(fell_back)
    if any(flags):
        log_message(
            f"Direct solve used for {sum(flags)} of {len(flags)} MMSE receivers",
            "WARNING",
        )
    return BeamformerSet(np.vstack(rows), flags)


def mrc_beamformers(H: np.ndarray) -> BeamformerSet:
    """MRC receivers for all users (zero columns get the first unit vector)"""
    H = np.asarray(H, dtype=complex)
    return BeamformerSet(np.vstack([_unit_row(H[:, k]) for k in range(H.shape[1])]))


def _weights(W) -> np.ndarray:
    return W.weights if isinstance(W, BeamformerSet) else np.atleast_2d(W)


def sinr_all(H: np.ndarray, W, powers: np.ndarray) -> np.ndarray:
    """SINR of every user"""
    weights = _weights(W)
    powers = np.asarray(powers, dtype=float)
    gains = np.abs(weights @ np.asarray(H, dtype=complex)) ** 2  # [k, i] = |w_k h_i|^2
    signal = powers * np.diag(gains)
    interference = gains @ powers - signal
    noise = np.sum(np.abs(weights) ** 2, axis=1)
    return signal / (interference + noise)


def sinr(H: np.ndarray, W, powers: np.ndarray, k: int) -> float:
    """P_k|w_k h_k|^2 / (sum_{i != k} P_i |w_k h_i|^2 + ||w_k||^2)"""
    weights = _weights(W)
    w = weights[k]
    H = np.asarray(H, dtype=complex)
    powers = np.asarray(powers, dtype=float)
    responses = np.abs(w @ H) ** 2
    interference = sum(powers[i] * responses[i] for i in range(H.shape[1]) if i != k)
    return float(powers[k] * responses[k] / (interference + np.vdot(w, w).real))


def sum_rate(H: np.ndarray, W, powers: np.ndarray) -> RateReport:
    """Per-user rates log2(1 + SINR) and their sum"""
    gamma = np.maximum(sinr_all(H, W, powers), 0.0)
    rates = np.log2(1.0 + gamma)
    return RateReport(sinr=gamma, rates=rates, sum_rate=float(np.sum(rates)))


def mmse_sum_rate(H: np.ndarray, powers: np.ndarray) -> RateReport:
    """Sum rate achieved by MMSE receivers on channel H"""
    return sum_rate(H, mmse_beamformers(H, powers), powers)
