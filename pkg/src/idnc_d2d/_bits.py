"""Small helpers for sets of indices packed into Python ints."""

from typing import Iterable, List


def mask_of(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        if i < 0:
            raise ValueError(f"negative index {i}")
        m |= 1 << int(i)
    return m


def members(mask: int) -> List[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def popcount(mask: int) -> int:
    return mask.bit_count()


def lowest(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


def as_mask(items) -> int:
    """Accept either an int mask or an iterable of indices."""
    if isinstance(items, int):
        return items
    return mask_of(items)
