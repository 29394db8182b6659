"""Bundled data: the 20-image clean calibration corpus."""

from pathlib import Path


def corpus_dir():
    """Directory of the bundled clean image corpus."""
    return Path(__file__).parent / "corpus"


def corpus_images():
    """Sorted paths of the bundled clean corpus images."""
    return sorted(corpus_dir().glob("*.png"))
