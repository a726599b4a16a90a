#!/usr/bin/env python3
"""Convert a protocell field dump to a legacy VTK rectilinear grid.

Cell fields become CELL_DATA scalars; face fields are skipped (the dump
already carries cell-centred velocity components).

    python3 dump_to_vtk.py Q350.dump Q350.vtk
"""

import argparse
import sys


def read_dump(path):
    with open(path) as f:
        lines = f.read().splitlines()
    pos = 0

    def take():
        nonlocal pos
        line = lines[pos]
        pos += 1
        return line

    magic = take().split()
    if magic[:1] != ["PROTOCELL_FIELD_DUMP"]:
        raise ValueError(f"{path}: not a field dump")
    header = {}
    while True:
        key, _, rest = take().partition(" ")
        if key == "CONFIG":
            pos += int(rest)
        elif key in ("X_FACES", "Y_FACES", "Z_FACES"):
            n = int(rest)
            header[key] = lines[pos:pos + n]
            pos += n
            if key == "Z_FACES":
                break
        else:
            header[key] = rest
    fields = []
    while pos < len(lines):
        _, name, location, count = take().split()
        n = int(count)
        if location == "CELL":
            fields.append((name, lines[pos:pos + n]))
        pos += n
    return header, fields


def write_vtk(header, fields, path):
    nx, ny, nz = (int(v) for v in header["DIMENSIONS"].split())
    out = [
        "# vtk DataFile Version 3.0",
        f"protocell Q_ccm={header.get('Q_CCM', '?')} {header.get('FINGERPRINT', '')}",
        "ASCII",
        "DATASET RECTILINEAR_GRID",
        f"DIMENSIONS {nx + 1} {ny + 1} {nz + 1}",
    ]
    for axis, key in (("X", "X_FACES"), ("Y", "Y_FACES"), ("Z", "Z_FACES")):
        coords = header[key]
        out.append(f"{axis}_COORDINATES {len(coords)} double")
        out.extend(coords)
    out.append(f"CELL_DATA {nx * ny * nz}")
    for name, values in fields:
        out.append(f"SCALARS {name} double 1")
        out.append("LOOKUP_TABLE default")
        out.extend(values)
    with open(path, "w") as f:
        f.write("\n".join(out) + "\n")


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("dump")
    p.add_argument("vtk")
    args = p.parse_args(argv)
    header, fields = read_dump(args.dump)
    write_vtk(header, fields, args.vtk)
    return 0


if __name__ == "__main__":
    sys.exit(main())
