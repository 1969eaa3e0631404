"""User intent: general/specific classification, object classes and attribute verbosity."""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Protocol

from scene_narrator.core import DomainError, ProviderError


logger = logging.getLogger(__name__)


class IntentKind(str, Enum):
    UNSPECIFIED = "unspecified"
    GENERAL = "general"
    SPECIFIC = "specific"


class Attribute(str, Enum):
    COLOR = "color"
    TEXTURE = "texture"
    MATERIAL = "material"
    SHAPE = "shape"
    SPATIAL = "spatial"


class AttributeLevel(str, Enum):
    DISABLED = "disabled"
    NORMAL = "normal"
    VERBOSE = "verbose"


class VerbosityMode(str, Enum):
    ADAPTIVE = "adaptive"
    CONCISE = "concise"
    NORMAL = "normal"
    VERBOSE = "verbose"


# Abbreviated COCO class list used when no intent narrows the vocabulary.
COCO_CLASSES: tuple[str, ...] = (
    "person", "bicycle", "car", "motorcycle", "airplane", "bus", "train", "truck",
    "boat", "traffic light", "fire hydrant", "stop sign", "bench", "bird", "cat",
    "dog", "backpack", "umbrella", "handbag", "bottle", "cup", "chair", "couch",
    "potted plant", "bed", "dining table", "toilet", "tv", "laptop", "mouse",
    "remote", "keyboard", "cell phone", "microwave", "oven", "sink",
    "refrigerator", "book", "clock", "vase",
)


def _normal_attributes() -> dict[Attribute, AttributeLevel]:
    return {attribute: AttributeLevel.NORMAL for attribute in Attribute}


@dataclass(frozen=True)
class IntentDecomposition:
    kind: IntentKind
    classes: tuple[str, ...] = ()
    verbose_attributes: tuple[Attribute, ...] = ()

    def __post_init__(self) -> None:
        if self.kind is IntentKind.UNSPECIFIED:
            raise DomainError("a decomposition is either general or specific")
        if self.kind is IntentKind.SPECIFIC and not self.classes:
            raise DomainError("a specific intent needs at least one object class")


@dataclass(frozen=True)
class IntentProfile:
    raw_text: str
    kind: IntentKind
    object_classes: tuple[str, ...]
    attributes: Mapping[Attribute, AttributeLevel] = field(default_factory=_normal_attributes)
    verbosity_mode: VerbosityMode = VerbosityMode.ADAPTIVE
    dataset_classes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if (self.kind is IntentKind.UNSPECIFIED) != (self.raw_text == ""):
            raise DomainError("kind is unspecified exactly when the intent text is empty")
        if not self.object_classes:
            raise DomainError("object_classes must not be empty")
        if set(self.attributes) != set(Attribute):
            raise DomainError("every attribute needs a level")

    def level(self, attribute: Attribute) -> AttributeLevel:
        return self.attributes[attribute]

    def relevant_classes(self, labels: Sequence[str]) -> list[str]:
        wanted = {c.lower() for c in self.object_classes}
        return [label for label in labels if label.lower() in wanted]


class IntentDecomposer(Protocol):
    def decompose(self, text: str) -> IntentDecomposition: ...


def default_profile(dataset_classes: Sequence[str]) -> IntentProfile:
    if not dataset_classes:
        raise DomainError("dataset_classes must not be empty")
    classes = tuple(dataset_classes)
    return IntentProfile(
        raw_text="",
        kind=IntentKind.UNSPECIFIED,
        object_classes=classes,
        dataset_classes=classes,
    )


def set_intent(
    profile: IntentProfile, text: str, decomposer: IntentDecomposer
) -> IntentProfile:
    """Replace the intent; on any provider failure the profile is left as it was.

    Every attribute goes back to Normal first, manual toggles such as Disabled
    included, and then the decomposition's verbose attributes are raised.
    """
    if not text.strip():
        raise DomainError("intent text must not be empty")
    try:
        decomposition = decomposer.decompose(text)
    except DomainError as exc:
        raise ProviderError(f"intent decomposition rejected: {exc}") from exc

    attributes = _normal_attributes()
    for attribute in decomposition.verbose_attributes:
        attributes[attribute] = AttributeLevel.VERBOSE

    dataset = profile.dataset_classes or profile.object_classes
    classes = dataset if decomposition.kind is IntentKind.GENERAL else decomposition.classes
    logger.info("intent set to %s with %d classes", decomposition.kind.value, len(classes))
    return replace(
        profile,
        raw_text=text,
        kind=decomposition.kind,
        object_classes=tuple(classes),
        attributes=attributes,
        dataset_classes=tuple(dataset),
    )


def apply_attribute_command(
    profile: IntentProfile, attribute: str | Attribute, level: str | AttributeLevel
) -> IntentProfile:
    try:
        key = Attribute(attribute)
    except ValueError as exc:
        raise DomainError(f"unknown attribute '{attribute}'") from exc
    try:
        new_level = AttributeLevel(level)
    except ValueError as exc:
        raise DomainError(f"unknown attribute level '{level}'") from exc
    attributes = dict(profile.attributes)
    attributes[key] = new_level
    return replace(profile, attributes=attributes)


def set_verbosity_mode(profile: IntentProfile, mode: str | VerbosityMode) -> IntentProfile:
    try:
        return replace(profile, verbosity_mode=VerbosityMode(mode))
    except ValueError as exc:
        raise DomainError(f"unknown verbosity mode '{mode}'") from exc


def merge_classes(
    profile: IntentProfile, add: Sequence[str] = (), remove: Sequence[str] = ()
) -> IntentProfile:
    removed = set(remove)
    merged = [c for c in profile.object_classes if c not in removed]
    for cls in add:
        if cls not in merged and cls not in removed:
            merged.append(cls)
    if not merged:
        raise DomainError("merging would leave no object classes")
    return replace(profile, object_classes=tuple(merged))


class Verbosity(str, Enum):
    """Length constraint applied to one Detailed-tier request."""

    CONCISE = "concise"
    NORMAL = "normal"
    VERBOSE = "verbose"
