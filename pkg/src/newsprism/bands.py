"""Stance-distribution scalar helpers shared by the data model, feed, and classifier.

Extremeness is the maximum class probability; the high band starts at 0.95
and the moderate band at 0.80. The moderate band's lower edge doubles as the
reference point that topic-bundle selection targets.
"""

HIGH_BAND_MIN = 0.95
MODERATE_BAND_MIN = 0.80
MODERATE_REFERENCE = MODERATE_BAND_MIN

# five-class order is fixed everywhere: index 0..4
FIVE_CLASSES = ("left", "lean_left", "center", "lean_right", "right")


def extremeness_value(p) -> float:
    """Max class probability of a 5-way distribution (sequence of 5 reals)."""
    return float(max(p))


def band_of(value: float) -> str:
    if value >= HIGH_BAND_MIN:
        return "high"
    if value >= MODERATE_BAND_MIN:
        return "moderate"
    return "low"


def binary_polarity(p):
    """Collapse a 5-class distribution to (polarity, strength).

    s = (p_right + p_lean_right) - (p_left + p_lean_left); positive s is
    conservative, zero breaks toward liberal.
    """
    s = (p[4] + p[3]) - (p[0] + p[1])
    polarity = "conservative" if s > 0 else "liberal"
    return polarity, abs(float(s))
