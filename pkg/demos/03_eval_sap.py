"""Structural average precision on a small hand-checked instance.

Three predictions against a two-line ground truth: one exact hit, one far
miss, one near hit. Walk the ranked list, print the PR points, and show
that only the ranking of scores matters, never their scale.
"""

import numpy as np

from wkit import metrics
from wkit.tensorio import Annotation


def seg(p1, p2, score):
    return metrics.ScoredSegment(
        p1=np.asarray(p1, float), p2=np.asarray(p2, float), score=score
    )


gt = Annotation(
    size=(128, 128),
    junctions=np.array([[10.0, 10.0], [60.0, 10.0], [60.0, 80.0]]),
    lines=[(0, 1), (1, 2)],
)
preds = [
    seg([10, 10], [60, 10], 0.9),   # exact
    seg([100, 100], [120, 120], 0.8),  # nowhere near
    seg([60, 11], [60, 81], 0.7),   # off by one pixel at both ends
]

result = metrics.sap([preds], [gt])
print(f"sAP@{result.threshold:g} = {result.ap:.4f}")
print("rank  matched  recall  precision")
for i, m in enumerate(result.matches):
    print(
        f"{i + 1:4d}  {str(bool(m)):7s}  {result.recalls[i]:.3f}"
        f"   {result.precisions[i]:.3f}"
    )

# squashing every score through a monotone map leaves the AP alone
warped = [seg(s.p1, s.p2, float(np.exp(7 * s.score))) for s in preds]
print("after exp-warping the scores:", metrics.sap([warped], [gt]).ap)

# predictions made at full image resolution get rescaled before matching
big = [seg([40, 40], [240, 40], 0.9)]
small = metrics.scale_to_eval(big, (512, 512), (128, 128))
print("512px segment on the eval grid:", small[0].p1, small[0].p2)
