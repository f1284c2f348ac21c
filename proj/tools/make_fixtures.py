#!/usr/bin/env python3
# Copyright The dcfem Authors.
# SPDX-License-Identifier: Apache-2.0
"""Generate the Gmsh 2.2 ASCII fixtures in data/.

Requires the gmsh Python module (pip install gmsh). Output is deterministic
for a fixed gmsh version; the committed files were produced with gmsh 4.15.

square_circle.msh
    [-1,1]^2 with the circle r0 = 0.2 around the origin embedded as an
    interface. Regions: 1 = outside the circle, 3 = disk. Outer boundary
    lines carry tag 1. Mesh size 0.4 at the square corners, 0.1 on the circle,
    interpolated in between.

c_magnet.msh
    Linear C-shaped iron yoke in a rectangular air box. Regions:
    1 = iron (mu_r = 1000), 2 = air, 3 = rectangular region in the gap (air),
    4 = coil carrying +I, 5 = coil carrying -I. The pole faces are tilted
    against each other so the gap field has a nonzero gradient. Outer box
    lines carry tag 1. All lengths in meters.
"""

import argparse
import pathlib
import sys

import gmsh


def square_circle(path, lc_outer=0.4, lc_circle=0.1, r0=0.2):
    gmsh.model.add("square_circle")
    occ = gmsh.model.occ
    square = occ.addRectangle(-1, -1, 0, 2, 2)
    disk = occ.addDisk(0, 0, 0, r0, r0)
    out, _ = occ.fragment([(2, square)], [(2, disk)])
    occ.synchronize()
    inner, outer = [], []
    for dim, tag in out:
        # the disk is the piece with the small area; the holed square has its centroid at 0 too
        (inner if occ.getMass(dim, tag) < 3.15 * r0 * r0 else outer).append(tag)
    gmsh.model.addPhysicalGroup(2, outer, 1)
    gmsh.model.addPhysicalGroup(2, inner, 3)
    boundary = [abs(t) for d, t in gmsh.model.getBoundary([(2, t) for t in outer + inner], oriented=False)]
    gmsh.model.addPhysicalGroup(1, boundary, 1)
    gmsh.model.mesh.setSize(gmsh.model.getEntities(0), lc_outer)
    circle_pts = gmsh.model.getBoundary([(2, t) for t in inner], combined=False, recursive=True)
    gmsh.model.mesh.setSize(circle_pts, lc_circle)
    gmsh.model.mesh.generate(2)
    write(path)


def c_magnet(path, lc_air=0.05, lc_iron=0.02, lc_gap=0.006):
    gmsh.model.add("c_magnet")
    occ = gmsh.model.occ
    # yoke: outer 0.40 x 0.36 block centred at the origin, window cut out, gap on the right
    yoke = occ.addRectangle(-0.20, -0.18, 0, 0.40, 0.36)
    window = occ.addRectangle(-0.12, -0.10, 0, 0.20, 0.20)
    # gap with tilted pole faces: wider at x = 0.20 than at x = 0.08
    g = [occ.addPoint(0.07, -0.015, 0), occ.addPoint(0.21, -0.035, 0),
         occ.addPoint(0.21, 0.035, 0), occ.addPoint(0.07, 0.015, 0)]
    lines = [occ.addLine(g[i], g[(i + 1) % 4]) for i in range(4)]
    gap = occ.addPlaneSurface([occ.addCurveLoop(lines)])
    iron, _ = occ.cut([(2, yoke)], [(2, window), (2, gap)])
    coil_p = occ.addRectangle(-0.11, -0.09, 0, 0.05, 0.18)
    coil_m = occ.addRectangle(-0.28, -0.09, 0, 0.05, 0.18)
    roi = occ.addRectangle(0.10, -0.008, 0, 0.06, 0.016)
    box = occ.addRectangle(-0.60, -0.55, 0, 1.20, 1.10)
    tools = iron + [(2, coil_p), (2, coil_m), (2, roi)]
    out, children = occ.fragment([(2, box)], tools)
    occ.synchronize()
    # children[0] belongs to the box, then one entry per tool in order
    owner = {}
    for region, kids in zip([1] * len(iron) + [4, 5, 3], children[1:]):
        for dim, tag in kids:
            owner[tag] = region

    def classify(tag):
        return owner.get(tag, 2)

    groups = {}
    for dim, tag in out:
        if dim == 2:
            groups.setdefault(classify(tag), []).append(tag)
    for region, tags in sorted(groups.items()):
        gmsh.model.addPhysicalGroup(2, tags, region)
    outer = [abs(t) for d, t in gmsh.model.getBoundary([(2, t) for t in groups[2]], oriented=False)
             if is_box_curve(abs(t))]
    gmsh.model.addPhysicalGroup(1, outer, 1)
    gmsh.model.mesh.setSize(gmsh.model.getEntities(0), lc_air)
    for region, size in ((1, lc_iron), (4, lc_iron), (5, lc_iron), (3, lc_gap)):
        pts = gmsh.model.getBoundary([(2, t) for t in groups[region]], combined=False, recursive=True)
        gmsh.model.mesh.setSize(pts, size)
    gmsh.model.mesh.generate(2)
    write(path)


def is_box_curve(tag):
    x0, y0, _, x1, y1, _ = gmsh.model.getBoundingBox(1, tag)
    return min(abs(x0 + 0.60), abs(x1 - 0.60), abs(y0 + 0.55), abs(y1 - 0.55)) < 1e-6 and (
        abs(x0 - x1) < 1e-6 or abs(y0 - y1) < 1e-6)


def write(path):
    gmsh.option.setNumber("Mesh.MshFileVersion", 2.2)
    gmsh.option.setNumber("Mesh.Binary", 0)
    gmsh.option.setNumber("Mesh.SaveAll", 0)
    gmsh.write(str(path))
    print(f"wrote {path}")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data"))
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    gmsh.initialize(["-v", "2"])
    gmsh.option.setNumber("General.Terminal", 1)
    gmsh.option.setNumber("Mesh.Algorithm", 6)
    try:
        square_circle(out / "square_circle.msh")
        c_magnet(out / "c_magnet.msh")
    finally:
        gmsh.finalize()
    return 0


if __name__ == "__main__":
    sys.exit(main())
