"""End-to-end protocol runs: sample signals, test a random subset, hash the rest.

The source emits N copies of the configured walker state; each copy is
independently depolarized with probability Q.  A random size-m subset is
measured with the two-outcome honest-state test, the remaining n = N - m
signals are measured in the extraction mode, and the resulting digit
string is compressed by a seeded binary Toeplitz matrix to the output
length that the observed test weight certifies.

All randomness flows from one 64-bit seed through fixed, numbered
Philox streams (see _stream); renumbering them would silently change
every seeded run, so the layout is part of the file-format contract.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import signal as _signal

from qwrng.maxprob import gamma_from_g, max_outcome_prob
from qwrng.rates import ProtocolCase, ProtocolParams, RateResult, rate_for_mode
from qwrng.walk import (
    MeasurementMode,
    WalkConfig,
    distribution,
    evolve,
    mode_dimension,
)

# stream numbers: depolarization mask, test outcomes, honest extraction
# draws, depolarized extraction draws, subset choice, hash seed
_S_DEPOLARIZE, _S_TEST, _S_HONEST, _S_MIXED, _S_SUBSET, _S_HASH = range(6)

# t_subset is written out in full below this size and digested above it
SUBSET_INLINE_LIMIT = 10_000

# switch from exact integer convolution to FFT above this many
# multiply-adds; FFT results are rounded back to exact bit counts
_FFT_MIN_WORK = 1 << 26


def _stream(seed: int, which: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(which,))))


@dataclass(frozen=True)
class SourceModel:
    """Signal source: honest walker states, each depolarized with probability Q."""

    config: WalkConfig
    Q: float = 0.0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.Q <= 1.0:
            raise ValueError("depolarization weight Q must lie in [0, 1]")


def sample_outcomes(
    source: SourceModel, N: int, mode: MeasurementMode
) -> tuple[np.ndarray, np.ndarray]:
    """Draw per-signal results for both roles a signal can play.

    Returns (digits, test_bits).  digits[i] is the outcome signal i
    would give under the extraction measurement in `mode`; test_bits[i]
    is what the honest-state test would return on it.  Honest signals
    pass the test with certainty and extract from the exact walk
    distribution; depolarized ones fail the test with probability
    1 - 1/(2**kappa P), the maximally mixed state's overlap, and extract
    uniformly.  Fully deterministic given the source seed.
    """
    if N < 2:
        raise ValueError("need at least two signals")
    cfg = source.config
    probs = distribution(evolve(cfg), mode).probs
    d = probs.shape[0]
    seed = source.rng_seed

    depolarized = _stream(seed, _S_DEPOLARIZE).random(N) < source.Q
    test_bits = depolarized & (
        _stream(seed, _S_TEST).random(N) < 1.0 - 1.0 / cfg.dim
    )
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0  # guard accumulated rounding so every draw lands
    honest = np.searchsorted(cdf, _stream(seed, _S_HONEST).random(N), side="right")
    mixed = _stream(seed, _S_MIXED).integers(0, d, size=N)
    digits = np.where(depolarized, mixed, honest).astype(np.int64)
    return digits, test_bits.astype(np.uint8)


def digit_width(d: int) -> int:
    """Bits per encoded digit: fixed width ceil(log2 d)."""
    if d < 2:
        raise ValueError("alphabet size d must be at least 2")
    return (d - 1).bit_length()


def encode_digits(digits: np.ndarray, d: int) -> np.ndarray:
    """Big-endian fixed-width bit encoding of a digit string over 0..d-1."""
    digits = np.asarray(digits, dtype=np.int64)
    if digits.size and (digits.min() < 0 or digits.max() >= d):
        raise ValueError("digit outside the alphabet")
    shifts = np.arange(digit_width(d) - 1, -1, -1, dtype=np.int64)
    return ((digits[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)


def decode_digits(bits: np.ndarray, d: int) -> np.ndarray:
    """Inverse of encode_digits; rejects codes outside the alphabet."""
    w = digit_width(d)
    bits = np.asarray(bits, dtype=np.int64)
    if bits.size % w:
        raise ValueError("bit count is not a multiple of the digit width")
    weights = (1 << np.arange(w - 1, -1, -1)).astype(np.int64)
    digits = bits.reshape(-1, w) @ weights
    if digits.size and digits.max() >= d:
        raise ValueError("bit pattern outside the alphabet")
    return digits


def toeplitz_seed_bits(seed: int, ell: int, length: int) -> np.ndarray:
    """Seed bit string s defining the hash matrix T[i, j] = s[i - j + length - 1].

    ell + length - 1 bits drawn from a Philox generator keyed by the
    seed alone; the matrix is public once chosen.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    return rng.integers(0, 2, size=ell + length - 1, dtype=np.uint8)


def _binary_convolve(s: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Full integer convolution of two bit strings."""
    if s.shape[0] * x.shape[0] <= _FFT_MIN_WORK:
        return np.convolve(s.astype(np.int64), x.astype(np.int64))
    conv = _signal.fftconvolve(s.astype(np.float64), x.astype(np.float64))
    rounded = np.rint(conv)
    # entries are exact bit counts; a residual near 0.5 would mean the
    # float path lost them
    if np.abs(conv - rounded).max() > 1e-2:
        raise FloatingPointError("convolution residual too large for exact bit counts")
    return rounded.astype(np.int64)


def privacy_amplify(raw: np.ndarray, ell: int, seed: int, *, d: int) -> np.ndarray:
    """Hash raw digits down to ell bits with a seeded binary Toeplitz matrix.

    The digits are encoded to a bit string x of length L (fixed width
    per digit), and output bit i is xor_j T[i, j] x_j with
    T[i, j] = s[i - j + L - 1] over the seed bits s.  The Toeplitz
    family is two-universal, and the map is linear over GF(2).  The
    product is evaluated as one convolution: exact integer arithmetic
    when small, FFT rounded back to integers when large.
    """
    if ell < 0:
        raise ValueError("output length cannot be negative")
    bits = encode_digits(raw, d)
    L = bits.shape[0]
    if ell > L:
        raise ValueError(f"cannot stretch {L} input bits to {ell} output bits")
    if ell == 0:
        return np.zeros(0, dtype=np.uint8)
    s = toeplitz_seed_bits(seed, ell, L)
    conv = _binary_convolve(s, bits)
    return (conv[L - 1 : L - 1 + ell] & 1).astype(np.uint8)


@dataclass(frozen=True)
class RunRecord:
    """Everything one protocol run produced, enough to replay or audit it."""

    case: ProtocolCase
    config: WalkConfig
    source_Q: float
    rng_seed: int
    params: ProtocolParams
    t_subset: np.ndarray  # sorted test indices, size m
    q: np.ndarray  # test outcomes on t_subset, 1 = failed the honest test
    w_q: float
    gamma: float
    delta: float
    ell: float
    rate: float
    aborted: bool
    raw: np.ndarray  # extraction digits, size N - m
    output: np.ndarray  # hashed bits, size floor(max(0, ell))
    seed_matrix_id: int

    def output_bytes(self) -> bytes:
        """Output bits packed big-endian, zero-padded to a whole byte."""
        return np.packbits(self.output).tobytes() if self.output.size else b""

    def write_output_bits(self, path) -> None:
        """Raw binary dump for external statistical test suites."""
        with open(path, "wb") as fh:
            fh.write(self.output_bytes())

    def summary_items(self) -> list[tuple[str, str]]:
        cfg = self.config
        if len(self.t_subset) > SUBSET_INLINE_LIMIT:
            subset = _digest(",".join(map(str, self.t_subset)))
        else:
            subset = ",".join(map(str, self.t_subset))
        return [
            ("case", self.case.value),
            ("P", str(cfg.P)),
            ("kappa", str(cfg.kappa)),
            ("T", str(cfg.T)),
            ("coin", cfg.coin.kind),
            ("theta", repr(cfg.coin.theta)),
            ("phi", repr(cfg.coin.phi)),
            ("flip", cfg.flip.name),
            ("Q", repr(self.source_Q)),
            ("rng_seed", str(self.rng_seed)),
            ("N", str(self.params.N)),
            ("m", str(self.params.m)),
            ("epsilon", repr(self.params.epsilon)),
            ("epsilon_pa", repr(self.params.epsilon_pa)),
            ("beta", repr(self.params.beta)),
            ("t_subset", subset),
            ("q_digest", _digest("".join(map(str, self.q)))),
            ("w_q", repr(self.w_q)),
            ("gamma", repr(self.gamma)),
            ("delta", repr(self.delta)),
            ("ell", repr(self.ell)),
            ("rate", repr(self.rate)),
            ("aborted", str(self.aborted).lower()),
            ("output_bits", str(int(self.output.size))),
            ("seed_matrix_id", str(self.seed_matrix_id)),
            ("output_hex", self.output_bytes().hex()),
        ]

    def to_text(self) -> str:
        return "".join(f"{k}: {v}\n" for k, v in self.summary_items())

    def to_json_dict(self) -> dict:
        return dict(self.summary_items())


def _digest(text: str) -> str:
    return "sha256:" + hashlib.sha256(text.encode("ascii")).hexdigest()


def run_protocol(
    source: SourceModel,
    params: ProtocolParams,
    case: MeasurementMode,
    gamma: float | None = None,
) -> RunRecord:
    """One full run: sample, test a random m-subset, hash the remainder.

    gamma defaults to the per-signal min-entropy of the configured walk
    in this mode; pass a sweep optimum to model the tuned protocol.  The
    output length always comes from the observed test weight, never the
    configured Q, and a non-positive length aborts the run with an empty
    output.
    """
    cfg = source.config
    if gamma is None:
        gamma = gamma_from_g(max_outcome_prob(cfg, case))

    N, m = params.N, params.m
    digits, test_bits = sample_outcomes(source, N, case)
    t_subset = np.sort(_stream(source.rng_seed, _S_SUBSET).choice(N, size=m, replace=False))
    q = test_bits[t_subset]
    w_q = float(q.mean())
    keep = np.ones(N, dtype=bool)
    keep[t_subset] = False
    raw = digits[keep]

    observed = replace(params, Q=w_q)
    rr: RateResult = rate_for_mode(observed, gamma, cfg.P, cfg.kappa, case)
    aborted = rr.ell <= 0.0
    ell_bits = 0 if aborted else math.floor(rr.ell)
    seed_matrix_id = int(_stream(source.rng_seed, _S_HASH).integers(0, 2**63, dtype=np.int64))
    if aborted:
        output = np.zeros(0, dtype=np.uint8)
    else:
        output = privacy_amplify(
            raw, ell_bits, seed_matrix_id, d=mode_dimension(cfg.P, cfg.kappa, case)
        )
    return RunRecord(
        case=rr.case,
        config=cfg,
        source_Q=source.Q,
        rng_seed=source.rng_seed,
        params=params,
        t_subset=t_subset,
        q=q,
        w_q=w_q,
        gamma=gamma,
        delta=rr.delta,
        ell=rr.ell,
        rate=rr.rate,
        aborted=aborted,
        raw=raw,
        output=output,
        seed_matrix_id=seed_matrix_id,
    )


__all__ = [
    "SourceModel",
    "RunRecord",
    "SUBSET_INLINE_LIMIT",
    "sample_outcomes",
    "run_protocol",
    "privacy_amplify",
    "toeplitz_seed_bits",
    "digit_width",
    "encode_digits",
    "decode_digits",
]
