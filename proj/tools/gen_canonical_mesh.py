#!/usr/bin/env python3
"""Regenerates core/data/canonical_mesh_v1.txt.

The forehead construction here must stay operation-for-operation identical to
facegeom::extend_landmarks so that extending the stored 68 canonical points
reproduces the stored 85 vertices bit for bit.
"""
import math
import sys
import zlib

import numpy as np
from scipy.spatial import Delaunay

# Mean frontal 68-point shape (Multi-PIE ordering), unit-box normalized.
TEMPLATE = [
    (0.0792396913815, 0.339223741112), (0.0829219487236, 0.456955367943),
    (0.0967927109165, 0.575648016728), (0.122141515615, 0.691921601066),
    (0.168687863544, 0.800341263616), (0.239789390707, 0.895732504778),
    (0.325662452515, 0.977068762493), (0.422318282013, 1.04329000149),
    (0.531777802068, 1.06080371126), (0.641296298053, 1.03981924107),
    (0.738105872266, 0.972268833998), (0.824444363295, 0.889624082279),
    (0.894792677532, 0.792494155836), (0.939395486253, 0.681546643421),
    (0.96111933829, 0.562238253072), (0.970579841181, 0.441758925744),
    (0.971193274221, 0.322118743967), (0.163846223133, 0.249151738053),
    (0.21780354657, 0.204255863861), (0.291299351124, 0.192367318323),
    (0.367460241458, 0.203582210627), (0.4392945113, 0.233135599851),
    (0.586445962425, 0.228141644834), (0.660152671635, 0.195923841854),
    (0.737466449096, 0.182360984545), (0.813236546239, 0.192828009114),
    (0.8707571886, 0.235293377042), (0.51534533827, 0.31863546193),
    (0.516221448289, 0.396200446263), (0.517118861835, 0.473797687758),
    (0.51816430343, 0.553157797772), (0.433701156035, 0.604054457668),
    (0.475501237769, 0.62076344024), (0.520712933176, 0.634268222208),
    (0.565874114041, 0.618796581487), (0.607054002672, 0.60157671656),
    (0.252418718401, 0.331052263829), (0.298663015648, 0.302646354002),
    (0.355749724218, 0.303020650651), (0.403718978315, 0.33867711083),
    (0.352507175597, 0.349987615384), (0.296791759886, 0.350478978225),
    (0.631326076346, 0.334136672344), (0.679073381078, 0.29645404267),
    (0.73597236153, 0.294721285802), (0.782865376271, 0.321305281656),
    (0.740312274764, 0.341849376713), (0.68499850091, 0.343734332172),
    (0.353167761422, 0.746189164237), (0.414587777921, 0.719053835073),
    (0.477677654595, 0.706835892494), (0.522732900812, 0.717092275768),
    (0.569832064287, 0.705414478982), (0.635195811927, 0.71565572516),
    (0.69951672331, 0.739419187253), (0.639447159575, 0.805236879972),
    (0.576410514055, 0.835436670169), (0.525398405766, 0.841706377792),
    (0.47641545769, 0.837505914975), (0.41379548902, 0.810045601727),
    (0.380084785646, 0.749979603086), (0.477955996282, 0.74513234612),
    (0.523389793327, 0.748924302636), (0.571057789237, 0.74332894691),
    (0.672409137852, 0.744177032192), (0.572539621444, 0.776609286626),
    (0.5240106503, 0.783370783245), (0.477561227414, 0.781950341949),
]

BROW_LIFT = 1.4         # eyebrow offset from the jaw line is extended by this factor
ARC_HEIGHT = 0.6        # outer forehead arc height relative to jaw-line width
RASTER = 180
MARGIN = 0.10


def arc_table():
    cs = []
    for k in range(6):
        th = math.pi * (k + 1) / 7.0
        cs.append((float(f"{math.cos(th):.17g}"), float(f"{math.sin(th):.17g}")))
    return cs


ARC = arc_table()


def forehead(p):
    ax, ay = p[0]
    bx, by = p[16]
    chx, chy = p[8]
    vx = bx - ax
    vy = by - ay
    w = math.sqrt(vx * vx + vy * vy)
    ex = vx / w
    ey = vy / w
    nx = -ey
    ny = ex
    if nx * (chx - ax) + ny * (chy - ay) > 0.0:
        nx = -nx
        ny = -ny
    out = []
    # 68..77: eyebrow points pushed away from the jaw line
    for i in range(17, 27):
        px, py = p[i]
        d = nx * (px - ax) + ny * (py - ay)
        lift = d * BROW_LIFT
        out.append((px + nx * lift, py + ny * lift))
    # 78: glabella apex, midway between the two lifted inner brow ends
    out.append(((out[4][0] + out[5][0]) * 0.5, (out[4][1] + out[5][1]) * 0.5))
    # 79..84: outer arc over the forehead, left to right
    cx = (ax + bx) * 0.5
    cy = (ay + by) * 0.5
    half = w * 0.5
    height = w * ARC_HEIGHT
    for c, s in ARC:
        u = -c * half
        h = s * height
        out.append((cx + ex * u + nx * h, cy + ey * u + ny * h))
    return out


def inside(poly, x, y):
    n = len(poly)
    ok = False
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            xi = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < xi:
                ok = not ok
    return ok


def main(out_path):
    t85 = TEMPLATE + forehead(TEMPLATE)
    xs = [p[0] for p in t85]
    ys = [p[1] for p in t85]
    bw = max(xs) - min(xs)
    bh = max(ys) - min(ys)
    scale = (1.0 - 2.0 * MARGIN) * (RASTER - 1) / max(bw, bh)
    ox = (RASTER - 1) / 2.0 - scale * (min(xs) + max(xs)) / 2.0
    oy = (RASTER - 1) / 2.0 - scale * (min(ys) + max(ys)) / 2.0
    p68 = [(float(f"{x * scale + ox:.17g}"), float(f"{y * scale + oy:.17g}")) for x, y in TEMPLATE]
    pts = p68 + forehead(p68)

    tri = Delaunay(np.array(pts))
    holes = [pts[36:42], pts[42:48], pts[60:68]]
    kept = []
    for t in tri.simplices:
        cx = sum(pts[i][0] for i in t) / 3.0
        cy = sum(pts[i][1] for i in t) / 3.0
        if any(inside(h, cx, cy) for h in holes):
            continue
        i, j, k = (int(v) for v in t)
        # counter-clockwise in image coordinates (y down): positive signed area
        a = (pts[j][0] - pts[i][0]) * (pts[k][1] - pts[i][1]) - (pts[k][0] - pts[i][0]) * (pts[j][1] - pts[i][1])
        if a < 0:
            j, k = k, j
        kept.append((i, j, k))
    kept.sort(key=lambda t: (min(t), t))
    print(f"delaunay={len(tri.simplices)} hull={len(tri.convex_hull)} kept={len(kept)}", file=sys.stderr)

    body = [f"vertices {len(pts)}"]
    body += [f"{i} {x!r} {y!r}" for i, (x, y) in enumerate(pts)]
    body.append(f"triangles {len(kept)}")
    body += [f"{i} {j} {k}" for i, j, k in kept]
    text = "\n".join(body) + "\n"
    crc = zlib.crc32(text.encode()) & 0xFFFFFFFF
    with open(out_path, "w") as f:
        f.write("# canonical face mesh\n")
        f.write(f"version canonical-mesh/1 raster {RASTER} {RASTER}\n")
        f.write(f"checksum crc32 {crc:08x}\n")
        f.write(text)
    for c, s in ARC:
        print(f"{c!r} {s!r}", file=sys.stderr)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "core/data/canonical_mesh_v1.txt")
