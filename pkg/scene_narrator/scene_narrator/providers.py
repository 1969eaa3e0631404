"""Inference provider contracts and the scripted backends used for simulation."""

from __future__ import annotations

import logging
import re
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Protocol

from scene_narrator.core import FrameRecord, ProviderError, Tier
from scene_narrator.intent import (
    Attribute,
    IntentDecomposer,
    IntentDecomposition,
    IntentKind,
    IntentProfile,
    Verbosity,
)


if TYPE_CHECKING:
    from scene_narrator.genpipe import DescriptionPacket
    from scene_narrator.ranker import RankedSentence


logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Contracts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DescriptionRequest:
    tier: Tier
    frame: FrameRecord
    requested_at: float
    prompt: str | None = None
    verbosity: Verbosity | None = None


@dataclass(frozen=True)
class DescriptionResult:
    sentences: tuple[str, ...]
    latency: float | None = None


class Describer(Protocol):
    """Returns None when the backend declines the request."""

    def describe(self, request: DescriptionRequest) -> DescriptionResult | None: ...


class Embedder(Protocol):
    def embed(self, text: str) -> Sequence[float] | None: ...


class SentenceScorer(Protocol):
    def score(
        self, packet: DescriptionPacket, profile: IntentProfile
    ) -> list[RankedSentence]: ...


class RegionLocator(Protocol):
    def locate(self, sentence: str, frame_id: int) -> set[tuple[int, int]]: ...


class DepthEstimator(Protocol):
    def depth_map(self, frame_id: int) -> Sequence[Sequence[float]]: ...


def normalize_text(text: str) -> str:
    return " ".join(re.sub(r"[^\w\s]", " ", text.lower()).split())


# ---------------------------------------------------------------------------
# Scripted backends
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScriptedOutput:
    sentences: tuple[str, ...]
    latency: float | None = None
    sim_scores: tuple[float, ...] = ()
    depth_scores: tuple[float, ...] = ()


@dataclass
class ScriptedDescriber:
    """Serves outputs keyed by (frame_id, tier); a missing key is a refusal."""

    outputs: Mapping[tuple[int, Tier], ScriptedOutput] = field(default_factory=dict)

    def describe(self, request: DescriptionRequest) -> DescriptionResult | None:
        scripted = self.outputs.get((request.frame.frame_id, request.tier))
        if scripted is None:
            logger.debug(
                "no scripted %s output for frame %d", request.tier.value, request.frame.frame_id
            )
            return None
        return DescriptionResult(sentences=scripted.sentences, latency=scripted.latency)


@dataclass
class ScriptedEmbedder:
    vectors: Mapping[str, Sequence[float]] = field(default_factory=dict)
    _by_normalized: dict[str, Sequence[float]] = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self) -> None:
        self._by_normalized = {normalize_text(text): vec for text, vec in self.vectors.items()}

    def embed(self, text: str) -> Sequence[float] | None:
        return self._by_normalized.get(normalize_text(text))


_SPECIFIC_MARKERS = ("find", "looking for", "where is")

_ATTRIBUTE_KEYWORDS: dict[Attribute, tuple[str, ...]] = {
    Attribute.COLOR: (
        "color", "colour", "colors", "colours", "red", "orange", "yellow", "green",
        "blue", "purple", "pink", "brown", "black", "white", "gray", "grey", "silver", "gold",
    ),
    Attribute.TEXTURE: ("texture", "textures", "smooth", "rough", "glossy"),
    Attribute.MATERIAL: ("material", "materials", "wooden", "metal", "plastic", "fabric"),
    Attribute.SHAPE: ("shape", "shapes", "round", "square", "rectangular"),
    Attribute.SPATIAL: (
        "spatial", "where", "on the", "near", "beside", "around", "behind", "under",
        "next to", "left", "right",
    ),
}


def _mentions(text: str, phrase: str) -> bool:
    return re.search(rf"\b{re.escape(phrase)}\b", text) is not None


@dataclass
class RuleBasedDecomposer:
    """Keyword classifier: search phrases make an intent specific, everything else is general."""

    vocabulary: Sequence[str] = ()

    def decompose(self, text: str) -> IntentDecomposition:
        lowered = normalize_text(text)
        specific = any(_mentions(lowered, marker) for marker in _SPECIFIC_MARKERS)
        verbose = tuple(
            attribute
            for attribute, words in _ATTRIBUTE_KEYWORDS.items()
            if any(_mentions(lowered, word) for word in words)
        )
        if not specific:
            return IntentDecomposition(IntentKind.GENERAL, (), verbose)

        found = [
            (match.start(), cls)
            for cls in self.vocabulary
            if (match := re.search(rf"\b{re.escape(cls.lower())}s?\b", lowered)) is not None
        ]
        classes = tuple(cls for _, cls in sorted(found))
        if not classes:
            raise ProviderError(f"no known object class mentioned in '{text}'")
        return IntentDecomposition(IntentKind.SPECIFIC, classes, verbose)


@dataclass
class ScriptedDecomposer:
    script: Mapping[str, IntentDecomposition] = field(default_factory=dict)
    fallback: IntentDecomposer | None = None

    def decompose(self, text: str) -> IntentDecomposition:
        key = normalize_text(text)
        for scripted_text, decomposition in self.script.items():
            if normalize_text(scripted_text) == key:
                return decomposition
        if self.fallback is None:
            raise ProviderError(f"no scripted decomposition for '{text}'")
        return self.fallback.decompose(text)


# ---------------------------------------------------------------------------
# Decomposer registry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecomposerContext:
    script: Mapping[str, IntentDecomposition] = field(default_factory=dict)
    vocabulary: tuple[str, ...] = ()


DecomposerFactory = Callable[[DecomposerContext], IntentDecomposer]


def _build_scripted_decomposer(context: DecomposerContext) -> IntentDecomposer:
    return ScriptedDecomposer(
        script=context.script, fallback=RuleBasedDecomposer(vocabulary=context.vocabulary)
    )


def _build_rule_based_decomposer(context: DecomposerContext) -> IntentDecomposer:
    return RuleBasedDecomposer(vocabulary=context.vocabulary)


DECOMPOSER_FACTORIES: dict[str, DecomposerFactory] = {
    "scripted": _build_scripted_decomposer,
    "rules": _build_rule_based_decomposer,
}


def list_decomposers() -> list[str]:
    return sorted(DECOMPOSER_FACTORIES.keys())


def build_decomposer(name: str, context: DecomposerContext) -> IntentDecomposer:
    if name not in DECOMPOSER_FACTORIES:
        supported = ", ".join(list_decomposers())
        raise ValueError(f"Unknown decomposer '{name}'. Supported decomposers: {supported}")
    return DECOMPOSER_FACTORIES[name](context)
