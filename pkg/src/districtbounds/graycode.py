"""Binarization, reflective Gray codes, and the rotation/reflection geometry
that identifies which angular slice of the positive quadrant contains a point.

Codes are big-endian bit tuples: ``binarize(i, nu)[0]`` is the 2^(nu-1) bit.
Successive rotations halve the wedge; recording which steps needed a
reflection yields exactly the reflective Gray code of the slice index.
"""

from __future__ import annotations

import math


def binarize(i: int, nu: int):
    """Standard big-endian binarization of ``i`` with ``nu`` bits."""
    _check_range(i, nu)
    return tuple((i >> (nu - 1 - j)) & 1 for j in range(nu))


def gray(i: int, nu: int):
    """Reflective Gray code of ``i``: first bit kept, then adjacent XORs."""
    beta = binarize(i, nu)
    return (beta[0],) + tuple(beta[j] ^ beta[j - 1] for j in range(1, nu))


def gray_inverse(code) -> int:
    """Integer whose Gray code is ``code`` (prefix XOR recovers the bits)."""
    if len(code) == 0:
        raise ValueError("empty code")
    bit = 0
    value = 0
    for c in code:
        if c not in (0, 1):
            raise ValueError(f"code bits must be 0/1, got {c!r}")
        bit ^= c
        value = (value << 1) | bit
    return value


def strengthened_support(code):
    """Indices (1-based) of the leading bits that identify this slice.

    For code alpha^i, this is {1..j} where j is the last set bit of the plain
    binarization of i; empty exactly when i = 0.  Slices with larger indices
    agree with alpha^i on fewer leading bits, so checking these bits alone
    certifies the point lies at index >= i.
    """
    i = gray_inverse(code)
    beta = binarize(i, len(code))
    last = 0
    for j, b in enumerate(beta, start=1):
        if b:
            last = j
    return tuple(range(1, last + 1))


def rotation_angle(j: int) -> float:
    """Angle applied at stage j = 1..nu; the wedge halves each stage."""
    return math.pi / (4.0 * 2.0 ** j)


def slice_count(nu: int) -> int:
    return 1 << nu


def slice_angles(i: int, nu: int):
    """[lower, upper] angle of slice i; slice 0 touches pi/4, the last touches 0."""
    w = math.pi / (4.0 * 2.0 ** nu)
    upper = math.pi / 4.0 - i * w
    return upper - w, upper


def slice_index(x1: float, x2: float, nu: int):
    """Locate the angular slice of (x1, x2) with 0 <= x2 <= x1, not both zero.

    Applies the halving rotations, reflecting back into the upper half plane
    whenever the rotated second coordinate goes negative, and records each
    reflection as a bit.  Returns ``(i, code, (xi, eta))`` where ``code`` is
    the reflective Gray code of the slice index ``i`` and ``(xi, eta)`` is the
    final rotated point, whose angle lies in [0, pi/4 / 2^nu].
    """
    if nu < 1:
        raise ValueError("nu must be >= 1")
    if not (0.0 <= x2 <= x1) or (x1 == 0.0 and x2 == 0.0):
        raise ValueError(f"need 0 <= x2 <= x1, not both zero; got ({x1}, {x2})")
    xi, eta = float(x1), float(x2)
    bits = []
    for j in range(1, nu + 1):
        t = rotation_angle(j)
        c, s = math.cos(t), math.sin(t)
        xi, eta_t = c * xi + s * eta, -s * xi + c * eta
        if eta_t < 0.0:
            bits.append(1)
            eta = -eta_t
        else:
            bits.append(0)
            eta = eta_t
    code = tuple(bits)
    return gray_inverse(code), code, (xi, eta)


def slice_index_by_angle(x1: float, x2: float, nu: int) -> int:
    """Independent slice location from the arctangent alone."""
    theta = math.atan2(x2, x1)
    q = (1.0 - theta / (math.pi / 4.0)) * (1 << nu)
    i = math.ceil(q) - 1
    return min(max(i, 0), (1 << nu) - 1)


def _check_range(i: int, nu: int):
    if nu < 1:
        raise ValueError("nu must be >= 1")
    if not (0 <= i < (1 << nu)):
        raise ValueError(f"index {i} outside [0, 2^{nu})")
