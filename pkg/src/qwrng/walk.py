"""History-dependent quantum walks on a cycle.

A walker lives on a P-cycle and carries kappa coin qubits: kappa - 1
memory coins plus one active coin.  A single step applies, in order,

* the coin unitary on the active coin,
* a coin-conditioned shift of the position (active coin 0 moves +1,
  active coin 1 moves -1, modulo P),
* a cyclic rotation of the coin register that retires the active coin
  into memory and promotes the oldest memory coin to active duty.

Basis states are indexed position-major with the coin register read as a
big-endian bit string: (x, c_0, ..., c_{kappa-1}) sits at index
x * 2**kappa + sum(c_j << (kappa - 1 - j)), the active coin c_{kappa-1}
being the least significant bit, and the all-zeros point at index 0.
Amplitudes are complex128.  Every operation is a pure function returning
a new state and preserving the 2-norm, so states can be shared freely
across workers.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

_SQRT_HALF = 1.0 / math.sqrt(2.0)


class MeasurementMode(enum.Enum):
    """Which registers the user reads out after the walk."""

    ALL = "all"  # position plus every coin, d = 2**kappa * P
    MEMORY_ONLY = "memory"  # position plus memory coins, d = 2**(kappa-1) * P
    POSITION_ONLY = "position"  # position alone, d = P


def mode_dimension(P: int, kappa: int, mode: MeasurementMode) -> int:
    """Outcome-space size of `mode` for a (P, kappa) walker."""
    if mode is MeasurementMode.ALL:
        return (1 << kappa) * P
    if mode is MeasurementMode.MEMORY_ONLY:
        return (1 << (kappa - 1)) * P
    return P


class FlipOperator(enum.Enum):
    """One-shot unitary applied to the active coin before the walk runs."""

    I = "i"
    X = "x"
    Y = "y"

    def matrix(self) -> np.ndarray:
        if self is FlipOperator.I:
            return np.eye(2, dtype=np.complex128)
        if self is FlipOperator.X:
            return np.array([[1, 1], [1, -1]], dtype=np.complex128) * _SQRT_HALF
        return np.array([[1, 1], [1j, -1j]], dtype=np.complex128) * _SQRT_HALF


def generalized_coin_matrix(theta: float, phi: float) -> np.ndarray:
    """Two-angle coin unitary.

    Rows are (e^{i phi} cos theta, e^{i phi} sin theta) and
    (-e^{-i phi} sin theta, e^{-i phi} cos theta); unitary for every
    angle pair, and the identity at theta = phi = 0.
    """
    ct, st = math.cos(theta), math.sin(theta)
    ep = complex(math.cos(phi), math.sin(phi))
    em = ep.conjugate()
    return np.array([[ep * ct, ep * st], [-em * st, em * ct]], dtype=np.complex128)


@dataclass(frozen=True)
class CoinOperator:
    """2x2 unitary tossed on the active coin each step.

    `kind` is "hadamard" (the angles are ignored) or "general" (the
    two-angle family of :func:`generalized_coin_matrix`).
    """

    kind: str = "hadamard"
    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("hadamard", "general"):
            raise ValueError(f"unknown coin kind {self.kind!r}")

    @classmethod
    def hadamard(cls) -> "CoinOperator":
        return cls("hadamard")

    @classmethod
    def generalized(cls, theta: float, phi: float) -> "CoinOperator":
        return cls("general", theta, phi)

    def matrix(self) -> np.ndarray:
        if self.kind == "hadamard":
            return np.array([[1, 1], [1, -1]], dtype=np.complex128) * _SQRT_HALF
        return generalized_coin_matrix(self.theta, self.phi)


@dataclass(frozen=True)
class BasisPoint:
    """Computational basis label: position x and coin bits (c_0, ..., c_{kappa-1}).

    The last bit is the active coin; earlier bits are memory coins,
    oldest first.
    """

    x: int
    coins: tuple[int, ...]

    def index(self, P: int) -> int:
        """Flat index under the position-major, big-endian-coins layout."""
        kappa = len(self.coins)
        if kappa < 1:
            raise ValueError("a basis point needs at least the active coin")
        if not 0 <= self.x < P:
            raise ValueError(f"position {self.x} outside the cycle [0, {P})")
        code = 0
        for c in self.coins:
            if c not in (0, 1):
                raise ValueError(f"coin value {c!r} is not a bit")
            code = (code << 1) | c
        return self.x * (1 << kappa) + code

    @classmethod
    def from_index(cls, i: int, P: int, kappa: int) -> "BasisPoint":
        nc = 1 << kappa
        if not 0 <= i < P * nc:
            raise ValueError(f"index {i} outside the walker space of size {P * nc}")
        x, code = divmod(i, nc)
        coins = tuple((code >> (kappa - 1 - j)) & 1 for j in range(kappa))
        return cls(x, coins)


@dataclass(frozen=True)
class WalkConfig:
    """Full description of one walk: dimensions, depth, coin, flip, start point."""

    P: int
    kappa: int
    T: int
    coin: CoinOperator = CoinOperator("hadamard")
    flip: FlipOperator = FlipOperator.I
    initial: BasisPoint | None = None  # None means the all-zeros point

    def __post_init__(self) -> None:
        if self.P < 2:
            raise ValueError("need P >= 2: a one-site cycle has nowhere to walk")
        if self.kappa < 1:
            raise ValueError("need kappa >= 1: the active coin is mandatory")
        if self.T < 0:
            raise ValueError("step count T must be non-negative")
        if self.initial is not None:
            if len(self.initial.coins) != self.kappa:
                raise ValueError(
                    f"initial point has {len(self.initial.coins)} coins, config has kappa={self.kappa}"
                )
            self.initial.index(self.P)  # validates ranges

    @property
    def dim(self) -> int:
        """Walker dimension 2**kappa * P."""
        return (1 << self.kappa) * self.P

    def start_point(self) -> BasisPoint:
        if self.initial is not None:
            return self.initial
        return BasisPoint(0, (0,) * self.kappa)


@dataclass(frozen=True)
class WalkState:
    """Amplitude vector over the walker basis, tied to its config.

    Treat `amplitudes` as read-only; operations return fresh states.
    """

    amplitudes: np.ndarray  # shape (2**kappa * P,), complex128
    config: WalkConfig

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class Distribution:
    """Outcome probabilities of one measurement mode, indexed densely.

    Outcome i of MEMORY_ONLY keeps the layout of the full index with the
    active-coin bit stripped; POSITION_ONLY outcomes are positions.
    """

    probs: np.ndarray
    mode: MeasurementMode

    @property
    def d(self) -> int:
        return int(self.probs.shape[0])

    def max_outcome(self) -> tuple[int, float]:
        i = int(np.argmax(self.probs))
        return i, float(self.probs[i])


def _apply_active_coin(state: WalkState, u: np.ndarray) -> WalkState:
    # The active coin is the least significant index bit, so adjacent
    # amplitude pairs share everything but the active coin.
    pairs = state.amplitudes.reshape(-1, 2)
    return WalkState((pairs @ u.T).reshape(-1), state.config)


def initial_state(config: WalkConfig) -> WalkState:
    """Basis state at the start point with the flip applied to the active coin.

    The identity flip leaves a pure basis state; X and Y spread it over
    the two active-coin values before any step runs.
    """
    amps = np.zeros(config.dim, dtype=np.complex128)
    amps[config.start_point().index(config.P)] = 1.0
    state = WalkState(amps, config)
    if config.flip is not FlipOperator.I:
        state = _apply_active_coin(state, config.flip.matrix())
    return state


def apply_coin(state: WalkState, coin: CoinOperator) -> WalkState:
    """Toss the active coin; position and memory coins are untouched."""
    return _apply_active_coin(state, coin.matrix())


def apply_shift(state: WalkState) -> WalkState:
    """Move the position by +1 where the active coin is 0 and -1 where it is 1."""
    cfg = state.config
    grid = state.amplitudes.reshape(cfg.P, -1, 2)
    out = np.empty_like(grid)
    out[:, :, 0] = np.roll(grid[:, :, 0], 1, axis=0)
    out[:, :, 1] = np.roll(grid[:, :, 1], -1, axis=0)
    return WalkState(out.reshape(-1), cfg)


def memory_rotation_gather(kappa: int) -> np.ndarray:
    """Source indices realizing the right rotation of the coin register.

    new[j] = old[gather[j]] rotates (c_0, ..., c_{kappa-1}) to
    (c_{kappa-1}, c_0, ..., c_{kappa-2}) on big-endian coin codes.
    """
    nc = 1 << kappa
    codes = np.arange(nc)
    return ((codes << 1) | (codes >> (kappa - 1))) & (nc - 1)


def apply_memory(state: WalkState) -> WalkState:
    """Rotate the coin register right: the active coin becomes the newest memory."""
    cfg = state.config
    if cfg.kappa == 1:
        return state
    nc = 1 << cfg.kappa
    out = state.amplitudes.reshape(cfg.P, nc)[:, memory_rotation_gather(cfg.kappa)]
    return WalkState(out.reshape(-1).copy(), cfg)


def evolve(config: WalkConfig) -> WalkState:
    """Run the walk: T repetitions of coin toss, shift, memory rotation."""
    state = initial_state(config)
    coin = config.coin
    for _ in range(config.T):
        state = apply_memory(apply_shift(apply_coin(state, coin)))
    return state


def distribution(state: WalkState, mode: MeasurementMode) -> Distribution:
    """Measurement statistics of the state in the given mode.

    ALL keeps every basis outcome; MEMORY_ONLY marginalizes the active
    coin; POSITION_ONLY marginalizes the whole coin register.  For
    kappa = 1 the last two coincide, both tracing out the lone coin.
    """
    cfg = state.config
    weights = np.abs(state.amplitudes) ** 2
    if mode is MeasurementMode.ALL:
        probs = weights
    elif mode is MeasurementMode.MEMORY_ONLY:
        probs = weights.reshape(-1, 2).sum(axis=1)
    elif mode is MeasurementMode.POSITION_ONLY:
        probs = weights.reshape(cfg.P, -1).sum(axis=1)
    else:
        raise ValueError(f"unknown measurement mode {mode!r}")
    return Distribution(probs, mode)


def fidelity_with(state_a: WalkState, state_b: WalkState) -> float:
    """Squared overlap |<a|b>|^2 of two states of equal dimension."""
    if state_a.amplitudes.shape != state_b.amplitudes.shape:
        raise ValueError("states live in different walker spaces")
    return float(abs(np.vdot(state_a.amplitudes, state_b.amplitudes)) ** 2)


__all__ = [
    "MeasurementMode",
    "FlipOperator",
    "CoinOperator",
    "BasisPoint",
    "WalkConfig",
    "WalkState",
    "Distribution",
    "generalized_coin_matrix",
    "memory_rotation_gather",
    "mode_dimension",
    "initial_state",
    "apply_coin",
    "apply_shift",
    "apply_memory",
    "evolve",
    "distribution",
    "fidelity_with",
]
