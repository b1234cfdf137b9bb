"""Decode keypoints from heatmaps and assemble them into a line graph.

Starts from a hand-drawn triangle annotation, renders the training targets
for it, then runs the decode -> assemble half of the pipeline and prints
what comes out at each step.
"""

import numpy as np

from wkit import supervision
from wkit.assemble import build_graph, make_proposals, match_endpoints
from wkit.decode import apply_offsets, nms_local_maxima, read_shift
from wkit.tensorio import Annotation

# a triangle on a 128 x 128 image; junction coordinates are x, y
ann = Annotation(
    size=(128, 128),
    junctions=np.array([[20.0, 20.0], [100.0, 24.0], [60.0, 100.0]]),
    lines=[(0, 1), (1, 2), (2, 0)],
)
maps = supervision.make_gt_maps(ann, stride=4, sigma=1.0)
print("heatmap shape at stride 4:", maps.junction_heat.data.shape)

# peaks in the two heatmaps, then sub-cell refinement from the offset maps
junction_pk = nms_local_maxima(maps.junction_heat, 3, 0.008, 300)
center_pk = nms_local_maxima(maps.center_heat, 3, 0.008, 300)
junctions = apply_offsets(junction_pk, maps.junction_offset, 4)
centers = apply_offsets(center_pk, maps.center_offset, 4)
shifts = read_shift(centers, maps.shift, 4)
print("decoded junctions:")
for kp in junctions:
    print(f"  ({kp.pos[0]:6.1f}, {kp.pos[1]:6.1f})  score {kp.score:.3f}")

# each center + shift proposes two endpoints; matching snaps them onto the
# nearest decoded junction within the radius
proposals = make_proposals(centers, shifts, [c.score for c in centers])
kept, used = match_endpoints(proposals, junctions, 15.0)
graph = build_graph(kept)
print(f"{len(kept)} lines survived matching, {len(used)} junctions used")
for q in graph.vertices:
    print(
        f"  ({q.j1[0]:g}, {q.j1[1]:g}) -- ({q.j2[0]:g}, {q.j2[1]:g})"
    )

# adjacency is 1 exactly when two lines share a snapped endpoint
print("adjacency:")
print(graph.adjacency)
