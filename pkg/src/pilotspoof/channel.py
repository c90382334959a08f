"""Channel generation, attack-instance construction, and wiretap SNR evaluation.

The attackers transmit the legitimate pilot with complex weights during
uplink training, steering the downlink beam toward a designated target
eavesdropper. Every scenario reduces to one fractional-quadratic
maximization instance over the weight vector; this module builds those
instances and evaluates their objective/SNR.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import detection

__all__ = [
    "SystemParams",
    "ChannelRealization",
    "AttackInstance",
    "dbm_to_linear",
    "generate_channels",
    "write_channels",
    "read_channels",
    "build_unaware_unknown_user",
    "build_unaware_known_user",
    "build_detection_aware",
    "objective",
    "evaluate_snr",
    "noncooperative_snr",
]


def dbm_to_linear(value_dbm: float) -> float:
    """Convert a dBm quantity to linear scale (0 dBm == 1.0)."""
    return float(10.0 ** (np.asarray(value_dbm) / 10.0))


@dataclass(frozen=True)
class SystemParams:
    """Static system configuration shared by all scenarios.

    Powers and variances are linear-scale and strictly positive.
    ``eve_noise_var`` and ``attack_power_caps`` carry one entry per
    eavesdropper.
    """

    n_antennas: int
    n_eves: int
    pilot_len: int
    train_power: float
    signal_power: float
    train_noise_var: float
    eve_noise_var: np.ndarray
    attack_power_caps: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "eve_noise_var", np.asarray(self.eve_noise_var, dtype=float))
        object.__setattr__(
            self, "attack_power_caps", np.asarray(self.attack_power_caps, dtype=float)
        )
        if self.n_antennas < 1 or self.n_eves < 1 or self.pilot_len < 1:
            raise ValueError("antenna count, eavesdropper count, and pilot length must be >= 1")
        for name in ("train_power", "signal_power", "train_noise_var"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        for name in ("eve_noise_var", "attack_power_caps"):
            arr = getattr(self, name)
            if arr.shape != (self.n_eves,):
                raise ValueError(f"{name} must have one entry per eavesdropper")
            if np.any(arr <= 0):
                raise ValueError(f"{name} entries must be strictly positive")

    @property
    def combined_train_var(self) -> float:
        """Variance of the pilot observation absent any attack: 1 + noise/(tau*P)."""
        return 1.0 + self.train_noise_var / (self.pilot_len * self.train_power)

    @classmethod
    def from_dbm(
        cls,
        n_antennas: int,
        n_eves: int,
        train_power_dbm: float,
        signal_power_dbm: float,
        attack_power_dbm: float,
        pilot_len: int = 16,
        train_noise_dbm: float = 0.0,
        eve_noise_dbm: float = 0.0,
    ) -> "SystemParams":
        """Build params from dBm inputs; all eavesdroppers share one cap/noise."""
        k = n_eves
        return cls(
            n_antennas=n_antennas,
            n_eves=k,
            pilot_len=pilot_len,
            train_power=dbm_to_linear(train_power_dbm),
            signal_power=dbm_to_linear(signal_power_dbm),
            train_noise_var=dbm_to_linear(train_noise_dbm),
            eve_noise_var=np.full(k, dbm_to_linear(eve_noise_dbm)),
            attack_power_caps=np.full(k, dbm_to_linear(attack_power_dbm)),
        )


@dataclass(frozen=True)
class ChannelRealization:
    """One i.i.d. Rayleigh draw: user channel (N,) and per-Eve channels (N, K)."""

    user_channel: np.ndarray
    eve_channels: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.user_channel, dtype=complex)
        g = np.asarray(self.eve_channels, dtype=complex)
        if h.ndim != 1 or g.ndim != 2 or g.shape[0] != h.shape[0]:
            raise ValueError("user channel (N,) and eve channels (N, K) must share N")
        if not (np.all(np.isfinite(h)) and np.all(np.isfinite(g))):
            raise ValueError("channel entries must be finite")
        object.__setattr__(self, "user_channel", h)
        object.__setattr__(self, "eve_channels", g)


@dataclass(frozen=True)
class AttackInstance:
    """One weight-optimization instance.

    The objective is ``|target_corr^H w + target_user_corr|^2 /
    (||channel_map @ w + user_offset||^2 + noise_floor)`` over weight
    vectors ``w`` with per-entry caps ``|w_k|^2 <= power_caps[k]`` and the
    aggregate cap ``||channel_map @ w||^2 <= aggregate_cap_sq``.
    ``snr_scale`` converts objective values to receive SNR.
    """

    channel_map: np.ndarray
    target_corr: np.ndarray
    target_user_corr: complex
    user_offset: np.ndarray
    noise_floor: float
    power_caps: np.ndarray
    aggregate_cap_sq: float
    snr_scale: float

    def __post_init__(self):
        a = np.asarray(self.channel_map, dtype=complex)
        object.__setattr__(self, "channel_map", a)
        object.__setattr__(self, "target_corr", np.asarray(self.target_corr, dtype=complex))
        object.__setattr__(self, "user_offset", np.asarray(self.user_offset, dtype=complex))
        object.__setattr__(self, "power_caps", np.asarray(self.power_caps, dtype=float))
        object.__setattr__(self, "target_user_corr", complex(self.target_user_corr))
        if self.target_corr.shape != (a.shape[1],) or self.power_caps.shape != (a.shape[1],):
            raise ValueError("per-eavesdropper vectors must match the map's column count")
        if self.user_offset.shape != (a.shape[0],):
            raise ValueError("user offset must match the map's row count")
        if self.noise_floor <= 0:
            raise ValueError("noise floor must be strictly positive")
        if not self.aggregate_cap_sq > 0:
            raise ValueError("aggregate cap must be positive (may be infinite)")

    @property
    def n_eves(self) -> int:
        return self.channel_map.shape[1]

    @property
    def gram(self) -> np.ndarray:
        """Gram matrix of the weight-to-aggregate-channel map."""
        return self.channel_map.conj().T @ self.channel_map


def generate_channels(rng_seed, n_antennas: int, n_eves: int) -> ChannelRealization:
    """Draw all channels i.i.d. standard complex Gaussian, deterministically."""
    if n_antennas < 1 or n_eves < 1:
        raise ValueError("antenna and eavesdropper counts must be >= 1")
    rng = np.random.default_rng(rng_seed)
    shape = (n_antennas, n_eves + 1)
    draws = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    return ChannelRealization(user_channel=draws[:, 0], eve_channels=draws[:, 1:])


def write_channels(channels: ChannelRealization, path) -> None:
    """Serialize a realization: header ``N K``, then ``re im`` rows.

    User channel first, then eavesdropper channels column-major.
    """
    n, k = channels.eve_channels.shape
    entries = np.concatenate([channels.user_channel, channels.eve_channels.T.reshape(-1)])
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{n} {k}\n")
        for z in entries:
            fh.write(f"{z.real:.17g} {z.imag:.17g}\n")


def read_channels(path) -> ChannelRealization:
    """Parse the plain-text format produced by :func:`write_channels`."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError("channels file must start with a 'N K' header line")
        n, k = int(header[0]), int(header[1])
        rows = [line.split() for line in fh if line.strip()]
    if len(rows) != n * (k + 1):
        raise ValueError(f"expected {n * (k + 1)} entries, found {len(rows)}")
    entries = np.array([float(r) + 1j * float(i) for r, i in rows])
    return ChannelRealization(
        user_channel=entries[:n],
        eve_channels=entries[n:].reshape(k, n).T,
    )


def _target_order(n_eves: int, target: int | None) -> np.ndarray:
    """Column permutation placing the target eavesdropper last."""
    t = n_eves - 1 if target is None else int(target)
    if not 0 <= t < n_eves:
        raise ValueError(f"target index {t} out of range for {n_eves} eavesdroppers")
    return np.array([k for k in range(n_eves) if k != t] + [t])


def _base_instance(params: SystemParams, channels: ChannelRealization, target: int | None):
    order = _target_order(params.n_eves, target)
    eves = channels.eve_channels[:, order]
    caps = params.attack_power_caps[order]
    noise = params.eve_noise_var[order][-1]
    a = eves / np.sqrt(params.train_power)
    target_channel = eves[:, -1]
    alpha = a.conj().T @ target_channel
    return a, alpha, caps, noise, target_channel


def build_unaware_unknown_user(
    params: SystemParams, channels: ChannelRealization, target: int | None = None
) -> AttackInstance:
    """Instance for an unaware base station when the user channel is unknown."""
    a, alpha, caps, noise, target_channel = _base_instance(params, channels, target)
    sigma_bt2 = params.combined_train_var
    varrho = (
        params.signal_power * sigma_bt2 / noise * float(np.vdot(target_channel, target_channel).real)
        + params.n_antennas * sigma_bt2
    )
    return AttackInstance(
        channel_map=a,
        target_corr=alpha,
        target_user_corr=0.0,
        user_offset=np.zeros(params.n_antennas, dtype=complex),
        noise_floor=varrho,
        power_caps=caps,
        aggregate_cap_sq=np.inf,
        snr_scale=params.signal_power / noise,
    )


def build_unaware_known_user(
    params: SystemParams, channels: ChannelRealization, target: int | None = None
) -> AttackInstance:
    """Instance when the attackers also know the user channel (performance upper bound)."""
    a, alpha, caps, noise, target_channel = _base_instance(params, channels, target)
    resid_var = params.train_noise_var / (params.pilot_len * params.train_power)
    varrho = (
        params.signal_power * resid_var / noise * float(np.vdot(target_channel, target_channel).real)
        + params.n_antennas * resid_var
    )
    return AttackInstance(
        channel_map=a,
        target_corr=alpha,
        target_user_corr=complex(np.vdot(target_channel, channels.user_channel)),
        user_offset=channels.user_channel,
        noise_floor=varrho,
        power_caps=caps,
        aggregate_cap_sq=np.inf,
        snr_scale=params.signal_power / noise,
    )


def build_detection_aware(
    params: SystemParams,
    channels: ChannelRealization,
    model: detection.DetectionModel,
    epsilon: float,
    target: int | None = None,
) -> AttackInstance:
    """Unknown-user instance with the aggregate-channel cap that keeps the
    detection probability at the budget ``epsilon``."""
    cap = detection.evasion_power_cap(model, epsilon)
    base = build_unaware_unknown_user(params, channels, target)
    return AttackInstance(
        channel_map=base.channel_map,
        target_corr=base.target_corr,
        target_user_corr=base.target_user_corr,
        user_offset=base.user_offset,
        noise_floor=base.noise_floor,
        power_caps=base.power_caps,
        aggregate_cap_sq=cap * cap,
        snr_scale=base.snr_scale,
    )


def objective(data: AttackInstance, weights: np.ndarray) -> float:
    """Fractional objective value at ``weights`` (unscaled by snr_scale)."""
    w = np.asarray(weights, dtype=complex)
    if w.shape != (data.n_eves,):
        raise ValueError(f"weights shape {w.shape} incompatible with {data.n_eves} eavesdroppers")
    num = abs(np.vdot(data.target_corr, w) + data.target_user_corr) ** 2
    leak = data.channel_map @ w + data.user_offset
    return float(num / (np.vdot(leak, leak).real + data.noise_floor))


def evaluate_snr(data: AttackInstance, weights: np.ndarray) -> float:
    """Receive SNR of the target eavesdropper at ``weights``."""
    return data.snr_scale * objective(data, weights)


def noncooperative_snr(params: SystemParams, channels: ChannelRealization) -> float:
    """SNR of the full-power, non-cooperating baseline.

    Every eavesdropper transmits at its cap; the reported value is the
    best receive SNR across candidate targets, each evaluated with its
    own noise variance and noise floor.
    """
    weights = np.sqrt(params.attack_power_caps)
    a = channels.eve_channels / np.sqrt(params.train_power)
    aggregate = a @ weights
    leak_sq = float(np.vdot(aggregate, aggregate).real)
    sigma_bt2 = params.combined_train_var
    best = 0.0
    for k in range(params.n_eves):
        target_channel = channels.eve_channels[:, k]
        noise = params.eve_noise_var[k]
        num = abs(np.vdot(target_channel, aggregate)) ** 2
        varrho = (
            params.signal_power * sigma_bt2 / noise * float(np.vdot(target_channel, target_channel).real)
            + params.n_antennas * sigma_bt2
        )
        best = max(best, params.signal_power / noise * num / (leak_sq + varrho))
    return best
