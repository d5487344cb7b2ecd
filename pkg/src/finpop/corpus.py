"""Synthetic populations and the built-in desk-scale verification corpus."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from .errors import ParameterError
from .exact import as_fraction
from .hypotheses import HypothesisClass
from .population import FinitePopulation

CORPUS_SIZES = (8, 10, 12)
CORPUS_EPSILONS = ("0.41", "0.53", "0.67")
CORPUS_SEED = 20240601


def synthetic_population(
    N: int,
    *,
    seed: int,
    dim: int = 1,
    threshold: float = 0.5,
    noise: float = 0.0,
    coord: int = 0,
) -> FinitePopulation:
    """Uniform features on [0, 1)^dim; label ``x[coord] >= threshold``,
    each label flipped with probability ``noise``."""
    if N < 1 or dim < 1:
        raise ParameterError("synthetic population needs N >= 1 and dim >= 1")
    if not 0 <= noise <= 1:
        raise ParameterError("noise must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    X = rng.random((N, dim))
    y = (X[:, coord] >= threshold).astype(int)
    flip = rng.random(N) < noise
    y = np.where(flip, 1 - y, y)
    return FinitePopulation.from_arrays(X, y)


@dataclass(frozen=True)
class CorpusInstance:
    name: str
    pop: FinitePopulation
    cls: HypothesisClass
    l: int
    eps: Fraction


def corpus_population(N: int, seed: int = CORPUS_SEED) -> FinitePopulation:
    return synthetic_population(N, seed=seed + N, threshold=0.5, noise=0.2)


def corpus_classes(N: int, seed: int = CORPUS_SEED) -> list[tuple[str, HypothesisClass]]:
    rng = np.random.default_rng(seed + 1000 + N)
    out = [("threshold", HypothesisClass("threshold-1d")), ("interval", HypothesisClass("interval-1d"))]
    for j in range(3):
        size = int(rng.integers(2, 9))
        labs = rng.integers(0, 2, size=(size, N))
        out.append((f"finite{j}", HypothesisClass.explicit(labs.tolist())))
    return out


def lemma_corpus(sizes=CORPUS_SIZES, epsilons=CORPUS_EPSILONS, seed: int = CORPUS_SEED) -> Iterator[CorpusInstance]:
    """Every (N, l, class, eps) with ``l`` in ``{N/2, N/2 - 1}`` and ``l > 2/eps``."""
    for N in sizes:
        pop = corpus_population(N, seed)
        classes = corpus_classes(N, seed)
        for l in (N // 2, N // 2 - 1):
            for cname, cls in classes:
                for e in epsilons:
                    eps = as_fraction(e)
                    if l * eps <= 2:
                        continue
                    yield CorpusInstance(f"N{N}-l{l}-{cname}-eps{e}", pop, cls, l, eps)
