"""
Baker-Campbell-Hausdorff series log(exp(x) exp(y)) truncated at a given
nilpotency step.

Coefficients come from Dynkin's formula expanded over right-nested words
[w1, [w2, [..., wk]]] in the letters x and y.
"""
import functools
import math
import operator
from collections import defaultdict
from fractions import Fraction
from typing import Callable
from typing import Dict
from typing import Iterator
from typing import List
from typing import Tuple

MAX_STEP = 6


class UnsupportedStepError(Exception):
    pass


def _blocks(budget: int) -> Iterator[Tuple[int, int]]:
    for total in range(1, budget + 1):
        for r in range(total + 1):
            yield r, total - r


def _sequences(length: int, budget: int) -> Iterator[List[Tuple[int, int]]]:
    if length == 0:
        yield []
        return
    for r, s in _blocks(budget - (length - 1)):
        for rest in _sequences(length - 1, budget - r - s):
            yield [(r, s)] + rest


@functools.lru_cache(maxsize=None)
def dynkin_table(step: int) -> Dict[str, Fraction]:
    """Right-nested words of length ≤ step with their exact coefficients."""
    if step > MAX_STEP:
        raise UnsupportedStepError(
            f"BCH coefficients are tabulated up to step {MAX_STEP}, got {step}",
        )
    table: Dict[str, Fraction] = defaultdict(Fraction)
    for count in range(1, step + 1):
        sign = Fraction((-1) ** (count - 1), count)
        for blocks in _sequences(count, step):
            word = "".join("x" * r + "y" * s for r, s in blocks)
            if len(word) >= 2 and word[-1] == word[-2]:
                continue
            weight = len(word) * math.prod(
                math.factorial(r) * math.factorial(s) for r, s in blocks
            )
            table[word] += sign / weight
    return {word: c for word, c in sorted(table.items()) if c}


def bch_series(
    x,
    y,
    bracket: Callable,
    step: int,
    add: Callable = operator.add,
    scale: Callable = None,
):
    """
    Σ_w c_w [w1, [w2, ...]] for a Lie algebra given by ``bracket`` that is
    nilpotent of the given step. ``scale(c, a)`` multiplies by a Fraction.
    """
    if step < 1:
        raise UnsupportedStepError(f"Step must be positive, got {step}")
    scale = scale or (lambda c, a: a * c)
    letters = {"x": x, "y": y}
    nested: Dict[str, object] = {}

    def right_nested(word):
        if len(word) == 1:
            return letters[word]
        if word not in nested:
            nested[word] = bracket(letters[word[0]], right_nested(word[1:]))
        return nested[word]

    result = None
    for word, coeff in dynkin_table(step).items():
        term = scale(coeff, right_nested(word))
        result = term if result is None else add(result, term)
    return result
