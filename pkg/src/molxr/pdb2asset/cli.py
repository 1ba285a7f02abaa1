"""Command-line entry point: PDB in, GLB out.

    pdb2asset --in molecule.pdb --out molecule.glb \
              [--style ball_and_stick|space_filling] [--quality 1..4]

Exit codes: 0 success, 1 input problem, 2 generation failure, 3 output
problem; each failure prints a one-line diagnostic to stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bonds import infer_bonds
from .glb import MeshTooLarge, write_glb
from .mesh import STYLES, build_mesh
from .pdbparse import PdbError, parse_pdb

EXIT_INPUT = 1
EXIT_GENERATION = 2
EXIT_OUTPUT = 3


class _ArgumentParser(argparse.ArgumentParser):
    # flag mistakes are input errors (exit 1), not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="pdb2asset",
                             description="Convert a PDB structure file to a GLB 3D asset.")
    parser.add_argument("--in", dest="infile", required=True, metavar="FILE.pdb",
                        help="input PDB file")
    parser.add_argument("--out", dest="outfile", required=True, metavar="FILE.glb",
                        help="output GLB file")
    parser.add_argument("--style", choices=STYLES, default="ball_and_stick")
    parser.add_argument("--quality", type=int, choices=range(1, 5), default=2,
                        metavar="1..4", help="tessellation quality (default 2)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    infile = Path(args.infile)
    try:
        text = infile.read_text("utf-8", errors="replace")
    except OSError as exc:
        print(f"pdb2asset: cannot read {infile}: {exc.strerror}", file=sys.stderr)
        return EXIT_INPUT
    try:
        model = infer_bonds(parse_pdb(text))
    except PdbError as exc:
        print(f"pdb2asset: {infile}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        mesh = build_mesh(model, style=args.style, quality=args.quality)
        data = write_glb(mesh, label=infile.stem)
    except (ValueError, MeshTooLarge) as exc:
        print(f"pdb2asset: generation failed: {exc}", file=sys.stderr)
        return EXIT_GENERATION
    try:
        Path(args.outfile).write_bytes(data)
    except OSError as exc:
        print(f"pdb2asset: cannot write {args.outfile}: {exc.strerror}", file=sys.stderr)
        return EXIT_OUTPUT
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
