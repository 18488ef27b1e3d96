"""Bit-level somewhat-homomorphic encryption over the integers.

A bit ``m`` is encrypted as ``c = m + 2r + pk * Q`` under a public key
``pk = sk * q0`` with an odd secret key ``sk``; decryption is
``(c mod sk) mod 2``.  Ciphertext addition computes XOR and multiplication
computes AND, as long as the accumulated noise ``(c mod sk)`` stays below
``sk``.  Noise is tracked alongside every ciphertext as a bit-length upper
bound, so validity is decidable without the secret key.

Parameters follow a single security knob ``lam``: the public key is
``lam**3`` bits, fresh noise ``r`` is ``lam`` bits, and the multiplier ``Q``
is ``lam**2`` bits.  The secret key width ``eta`` defaults to ``lam**2`` and
may be raised to buy multiplicative depth; the public key widens along with
it when needed.
"""

from __future__ import annotations

import contextlib
import random
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

from . import bignum
from .bignum import Natural

TWO = Natural(2)


@dataclass(frozen=True, slots=True)
class SecurityParams:
    """Size schedule for one instance of the scheme.

    ``reduce_mod_pk`` keeps ciphertexts reduced modulo ``pk`` after every
    homomorphic operation; since ``pk`` is a multiple of ``sk`` this never
    changes the decryption or the noise residue.
    """

    lam: int
    eta: int
    pk_bits: int
    r_bits: int
    q_bits: int
    reduce_mod_pk: bool = True

    def __post_init__(self) -> None:
        if self.lam < 2:
            raise ValueError(f"lam must be at least 2, got {self.lam}")
        if self.eta < self.lam + 2:
            raise ValueError(f"eta must be at least lam + 2, got eta={self.eta} lam={self.lam}")
        if self.pk_bits - self.eta < 2:
            raise ValueError(
                f"pk_bits must exceed eta by at least 2 bits, got pk_bits={self.pk_bits} eta={self.eta}"
            )
        if self.r_bits < 1 or self.q_bits < 1:
            raise ValueError("r_bits and q_bits must be positive")

    @classmethod
    def from_lambda(
        cls, lam: int, eta: int | None = None, reduce_mod_pk: bool = True
    ) -> "SecurityParams":
        """Standard schedule: pk lam**3 bits, r lam bits, Q lam**2 bits.

        When ``eta`` is raised beyond the default ``lam**2`` the public key
        widens to ``eta + lam`` bits if the cubic schedule no longer leaves
        room above the secret key.
        """
        if eta is None:
            eta = lam * lam
        pk_bits = max(lam**3, eta + max(lam, 2))
        return cls(
            lam=lam,
            eta=eta,
            pk_bits=pk_bits,
            r_bits=lam,
            q_bits=lam * lam,
            reduce_mod_pk=reduce_mod_pk,
        )

    @property
    def fresh_ct_bits(self) -> int:
        """Upper bound on a fresh ciphertext's bit length."""
        return self.pk_bits + self.q_bits + 2


@dataclass(frozen=True, slots=True)
class KeyPair:
    sk: Natural
    pk: Natural
    q0: Natural


@dataclass(frozen=True, slots=True)
class Ciphertext:
    """An encrypted bit plus a key-free upper bound on its noise bit length."""

    value: Natural
    noise_bits: int

    def __post_init__(self) -> None:
        if self.noise_bits < 0:
            raise ValueError(f"noise_bits cannot be negative: {self.noise_bits}")


def fresh_noise_bits(params: SecurityParams) -> int:
    """Noise bound of a fresh encryption: |m + 2r| <= lam + 2 bits."""
    return params.lam + 2


def add_noise_bits(n1: int, n2: int) -> int:
    """Noise bound after ciphertext addition."""
    return max(n1, n2) + 1


def mul_noise_bits(n1: int, n2: int) -> int:
    """Noise bound after ciphertext multiplication."""
    return n1 + n2


def noise_ok(ct: Ciphertext, params: SecurityParams) -> bool:
    """True when the tracked noise still guarantees correct decryption."""
    return ct.noise_bits <= params.eta - 1


def keygen(params: SecurityParams, rng: random.Random) -> KeyPair:
    """Sample sk (odd, eta bits) and q0 (odd) with pk = sk * q0 exactly pk_bits wide.

    For narrow q0 some secret keys admit no q0 that lands the product on
    exactly pk_bits bits, so after a bounded number of q0 draws the secret
    key is resampled as well.
    """
    q_width = params.pk_bits - params.eta
    for _ in range(1000):
        sk = bignum.random_odd(params.eta, rng)
        for _ in range(64):
            q0 = bignum.random_odd(q_width, rng)
            pk = bignum.mul(sk, q0)
            if pk.bit_length == params.pk_bits:
                return KeyPair(sk=sk, pk=pk, q0=q0)
    raise RuntimeError("key generation failed to hit the target public key width")


def encrypt_bit(
    pk: Natural,
    m: int,
    params: SecurityParams,
    rng: random.Random,
    *,
    _forced_r: int | None = None,
    _forced_q: int | None = None,
) -> Ciphertext:
    """Encrypt one bit as m + 2r + pk * Q.

    ``_forced_r`` and ``_forced_q`` pin the random draws; they exist for
    tests that need exact ciphertext values and must not be used otherwise.
    """
    if m not in (0, 1):
        raise ValueError(f"plaintext bit must be 0 or 1, got {m!r}")
    r = Natural(_forced_r) if _forced_r is not None else bignum.random_bits(params.r_bits, rng)
    q = Natural(_forced_q) if _forced_q is not None else bignum.random_bits(params.q_bits, rng)
    value = Natural(m) + TWO * r + bignum.mul(pk, q)
    ct = Ciphertext(value=value, noise_bits=fresh_noise_bits(params))
    _notify_audit(ct)
    return ct


def decrypt_bit(sk: Natural, ct: Ciphertext) -> int:
    return int((ct.value % sk) % TWO)


def he_add(c1: Ciphertext, c2: Ciphertext, pk: Natural, params: SecurityParams) -> Ciphertext:
    """Homomorphic XOR of the underlying bits."""
    value = c1.value + c2.value
    if params.reduce_mod_pk:
        value = value % pk
    ct = Ciphertext(value=value, noise_bits=add_noise_bits(c1.noise_bits, c2.noise_bits))
    _notify_audit(ct)
    return ct


def he_mul(c1: Ciphertext, c2: Ciphertext, pk: Natural, params: SecurityParams) -> Ciphertext:
    """Homomorphic AND of the underlying bits."""
    value = bignum.mul(c1.value, c2.value)
    if params.reduce_mod_pk:
        value = value % pk
    ct = Ciphertext(value=value, noise_bits=mul_noise_bits(c1.noise_bits, c2.noise_bits))
    _notify_audit(ct)
    return ct


def encrypt_value(
    pk: Natural, v: int, width: int, params: SecurityParams, rng: random.Random
) -> tuple[Ciphertext, ...]:
    """Encrypt an integer bitwise, least significant bit first."""
    if width < 1:
        raise ValueError(f"width must be positive, got {width}")
    if not 0 <= v < (1 << width):
        raise ValueError(f"value {v} does not fit in {width} bits")
    return tuple(encrypt_bit(pk, (v >> i) & 1, params, rng) for i in range(width))


def decrypt_value(sk: Natural, cts: Sequence[Ciphertext]) -> int:
    """Decrypt a bitwise encryption, least significant bit first; () -> 0."""
    v = 0
    for i, ct in enumerate(cts):
        v |= decrypt_bit(sk, ct) << i
    return v


# Audit hook: when installed, every ciphertext produced by encrypt_bit,
# he_add, and he_mul is reported.  Used by tests to check tracked noise
# bounds against true residues without touching the hot path's structure.

_audit_hook: Callable[[Ciphertext], None] | None = None


def _notify_audit(ct: Ciphertext) -> None:
    if _audit_hook is not None:
        _audit_hook(ct)


@contextlib.contextmanager
def audit_ciphertexts(hook: Callable[[Ciphertext], None]) -> Iterator[None]:
    """Install ``hook`` for every ciphertext produced inside the block."""
    global _audit_hook
    previous = _audit_hook
    _audit_hook = hook
    try:
        yield
    finally:
        _audit_hook = previous
