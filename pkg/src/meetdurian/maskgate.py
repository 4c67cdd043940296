"""Mask/no-mask decision from facial-landmark confidences.

Landmark extraction happens behind a provider boundary (file fixture, stub
HTTP service, or a real cloud client); this module never touches pixels.
The rule: a face is present when the eye region is confidently detected,
and the face is masked when the occludable region (nose bottom, mouth,
lips, chin) is suppressed while the eyes stay confident.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor, TimeoutError as FutureTimeout
from dataclasses import dataclass, field

#: The 27-name landmark enumeration, fixed in code so fixtures are stable
#: across providers.
LANDMARK_NAMES: tuple[str, ...] = (
    "left_eye",
    "right_eye",
    "left_of_left_eyebrow",
    "right_of_left_eyebrow",
    "left_of_right_eyebrow",
    "right_of_right_eyebrow",
    "left_eye_left_corner",
    "left_eye_right_corner",
    "left_eye_top",
    "left_eye_bottom",
    "right_eye_left_corner",
    "right_eye_right_corner",
    "right_eye_top",
    "right_eye_bottom",
    "forehead_glabella",
    "nose_tip",
    "nose_bottom_left",
    "nose_bottom_right",
    "nose_bottom_center",
    "mouth_left",
    "mouth_right",
    "mouth_center",
    "upper_lip",
    "lower_lip",
    "chin_gnathion",
    "left_cheek",
    "right_cheek",
)

#: Landmarks whose confidence establishes that a face is in frame at all.
EYE_REGION: tuple[str, ...] = LANDMARK_NAMES[0:14]

#: Landmarks a face mask covers; suppressed confidences here mean "masked".
OCCLUDABLE_REGION: tuple[str, ...] = (
    "nose_bottom_left",
    "nose_bottom_right",
    "mouth_left",
    "mouth_right",
    "mouth_center",
    "upper_lip",
    "lower_lip",
    "chin_gnathion",
)


@dataclass(frozen=True)
class Landmark:
    confidence: float
    x: float | None = None
    y: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class LandmarkSet:
    entries: dict[str, Landmark] = field(default_factory=dict)

    def __post_init__(self):
        unknown = set(self.entries) - set(LANDMARK_NAMES)
        if unknown:
            raise ValueError(f"unknown landmark names: {sorted(unknown)}")

    @classmethod
    def from_confidences(cls, confidences: dict[str, float]) -> "LandmarkSet":
        return cls(entries={k: Landmark(confidence=v) for k, v in confidences.items()})

    @classmethod
    def from_json(cls, doc: dict) -> "LandmarkSet":
        entries = {}
        for name, v in doc.items():
            entries[name] = Landmark(
                confidence=float(v["confidence"]), x=v.get("x"), y=v.get("y")
            )
        return cls(entries=entries)


@dataclass(frozen=True)
class MaskThresholds:
    t_face: float = 0.6
    t_occluded: float = 0.35


@dataclass(frozen=True)
class MaskVerdict:
    masked: bool
    score: float
    missing_face: bool
    detail: dict[str, float]


class ProviderError(Exception):
    pass


class ProviderTimeout(ProviderError):
    pass


def _region_mean(landmarks: LandmarkSet, names: tuple[str, ...]) -> float:
    # absent entries count as zero confidence: an undetected landmark is
    # indistinguishable from a fully suppressed one
    total = sum(landmarks.entries[n].confidence for n in names if n in landmarks.entries)
    return total / len(names)


def classify_mask(
    landmarks: LandmarkSet, thresholds: MaskThresholds = MaskThresholds()
) -> MaskVerdict:
    """Deterministic region-mean rule.

    face present  iff eye-region mean >= t_face
    masked        iff face present and occludable-region mean <= t_occluded
    score = eye_mean * (1 - occluded_mean), 0 when no face
    """
    eye_mean = _region_mean(landmarks, EYE_REGION)
    occluded_mean = _region_mean(landmarks, OCCLUDABLE_REGION)
    detail = {"eye_mean": eye_mean, "occluded_mean": occluded_mean}

    if eye_mean < thresholds.t_face:
        return MaskVerdict(masked=False, score=0.0, missing_face=True, detail=detail)

    masked = occluded_mean <= thresholds.t_occluded
    score = min(1.0, max(0.0, eye_mean * (1.0 - occluded_mean)))
    return MaskVerdict(masked=masked, score=score, missing_face=False, detail=detail)


PROVIDER_TIMEOUT_S = 5.0


def gate_entry(
    provider,
    image_ref: str,
    thresholds: MaskThresholds = MaskThresholds(),
    timeout_s: float = PROVIDER_TIMEOUT_S,
) -> MaskVerdict:
    """Fetch landmarks for ``image_ref`` from the provider and classify.

    Provider failures and timeouts raise and therefore never admit the
    player; callers treat both as retriable.
    """
    pool = ThreadPoolExecutor(max_workers=1)
    future = pool.submit(provider.landmarks, image_ref)
    try:
        landmarks = future.result(timeout=timeout_s)
    except FutureTimeout:
        raise ProviderTimeout(f"landmark provider exceeded {timeout_s} s")
    except ProviderError:
        raise
    except Exception as e:
        raise ProviderError(str(e)) from e
    finally:
        # wait=False: a stuck provider thread must not block the caller past
        # the timeout budget
        pool.shutdown(wait=False)
    return classify_mask(landmarks, thresholds)


class FileLandmarkProvider:
    """Provider backed by JSON fixture files; image_ref is a file path."""

    def landmarks(self, image_ref: str) -> LandmarkSet:
        try:
            with open(image_ref, "r", encoding="utf-8") as f:
                return LandmarkSet.from_json(json.load(f))
        except (OSError, json.JSONDecodeError, KeyError, ValueError) as e:
            raise ProviderError(f"cannot read landmark fixture {image_ref}: {e}") from e


class StaticLandmarkProvider:
    """Provider returning a fixed LandmarkSet regardless of image_ref, with an
    optional artificial delay for latency/fault testing."""

    def __init__(self, landmarks: LandmarkSet, delay_s: float = 0.0):
        self._landmarks = landmarks
        self._delay_s = delay_s

    def landmarks(self, image_ref: str) -> LandmarkSet:
        if self._delay_s:
            time.sleep(self._delay_s)
        return self._landmarks
