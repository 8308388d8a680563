"""Command-line surface: sensor extraction, field dumps, retargeting,
metrics and fixture generation.

Exit codes: 0 success, 1 validation/data failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import fileio
from .errors import MeshMotionError
from .interaction import build_interaction_mask, compute_dmi_field, sensor_forward_kinematics
from .losses import RetargetConfig
from .metrics import evaluate
from .optimize import OptimizerSettings, retarget
from .sensors import coordinate_grid, derive_sensors
from .synthetic import BipedSpec, generate_synthetic


def _parse_grid(text: str):
    try:
        bones, n_l, n_phi = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError("grid must look like BONESxLxPHI, e.g. 18x4x4")
    if bones < 1 or n_l < 1 or n_phi < 1:
        raise argparse.ArgumentTypeError("grid counts must be positive")
    return bones, n_l, n_phi


def _grid_for(character, grid):
    if grid is None:
        return None
    bones, n_l, n_phi = grid
    if bones > character.num_bones:
        raise MeshMotionError(f"grid asks for {bones} bones, character has {character.num_bones}")
    return coordinate_grid(bones, n_l, n_phi)


def _cmd_scs(args) -> int:
    character = fileio.load_character(args.character)
    sensors = derive_sensors(character, _grid_for(character, args.grid))
    fileio.save_sensors(sensors, args.out, character.name)
    print(f"wrote {len(sensors)} sensors ({int(sensors.valid.sum())} valid) to {args.out}")
    return 0


def _cmd_dmi(args) -> int:
    character = fileio.load_character(args.character)
    sensors = fileio.load_sensors(args.sensors, character)
    motion, names = fileio.load_motion(args.motion)
    fileio.bind_motion(motion, names, character)
    trajectory = sensor_forward_kinematics(character, sensors, motion)
    mask = build_interaction_mask(sensors)
    field = compute_dmi_field(trajectory, mask, sensors.coordinates, pair_count=args.pairs)
    fileio.save_dmi_field(field, args.out)
    print(f"wrote {field.num_entries} field entries over {field.num_frames} frames to {args.out}")
    return 0


def _cmd_retarget(args) -> int:
    source = fileio.load_character(args.source_char)
    target = fileio.load_character(args.target_char)
    motion, names = fileio.load_motion(args.motion)
    fileio.bind_motion(motion, names, source)
    config = RetargetConfig(
        lambda_rec=args.lambda_rec,
        lambda_dmi=args.lambda_dmi,
        lambda_ef=args.lambda_ef,
        pair_count=args.pairs,
    )
    settings = OptimizerSettings(max_iterations=args.iters, seed=args.seed)
    result = retarget(motion, source, target, config=config, settings=settings)
    fileio.save_motion(result.motion, args.out, target.joint_names)
    best = min(b.total for b in result.loss_trace)
    print(
        f"wrote {args.out}: {result.iterations} iterations, converged={result.converged}, "
        f"total {result.loss_trace[0].total:.6g} -> {best:.6g}"
    )
    return 0


def _cmd_metrics(args) -> int:
    source_char = fileio.load_character(args.source_char)
    target_char = fileio.load_character(args.target_char)
    source_motion, names = fileio.load_motion(args.source)
    fileio.bind_motion(source_motion, names, source_char)
    candidate, names = fileio.load_motion(args.candidate)
    fileio.bind_motion(candidate, names, target_char)
    ground_truth = None
    if args.ground_truth:
        ground_truth, names = fileio.load_motion(args.ground_truth)
        fileio.bind_motion(ground_truth, names, target_char)
    sensors_a = derive_sensors(source_char)
    sensors_b = derive_sensors(target_char)
    report = evaluate(source_motion, source_char, sensors_a, candidate, target_char, sensors_b, ground_truth)
    for key, value in report.as_dict().items():
        print(f"{key} = {value:.9g}")
    return 0


def _cmd_gen_synthetic(args) -> int:
    source_spec, target_spec = fileio.load_biped_spec(args.spec) if args.spec else (BipedSpec(), None)
    fixture = generate_synthetic(source_spec, target_spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fileio.save_character(fixture.source, out / "source.json")
    fileio.save_character(fixture.target, out / "target.json")
    for name, motion in fixture.motions.items():
        fileio.save_motion(motion, out / f"{name}.json", fixture.source.joint_names)
    written = ["source.json", "target.json"] + [f"{n}.json" for n in fixture.motions]
    print(f"wrote {', '.join(written)} to {out}")
    return 0


def _cmd_validate(args) -> int:
    character = fileio.load_character(args.character)
    print(f"character {character.name!r}: OK ({character.num_joints} joints, {len(character.vertices)} vertices)")
    if args.motion:
        motion, names = fileio.load_motion(args.motion)
        fileio.bind_motion(motion, names, character)
        print(f"motion: OK ({motion.num_frames} frames at {motion.fps:g} fps)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="meshmotion",
        description="Skeletal motion retargeting driven by dense surface-sensor interaction fields.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scs", help="derive surface sensors for a character")
    p.add_argument("--character", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--grid", type=_parse_grid, default=None, help="BONESxLxPHI, default: all bones x 4 x 4")
    p.set_defaults(func=_cmd_scs)

    p = sub.add_parser("dmi", help="compute the interaction field of a motion")
    p.add_argument("--character", required=True)
    p.add_argument("--sensors", required=True)
    p.add_argument("--motion", required=True)
    p.add_argument("--pairs", type=int, default=20)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_dmi)

    p = sub.add_parser("retarget", help="retarget a motion onto another character")
    p.add_argument("--source-char", required=True)
    p.add_argument("--target-char", required=True)
    p.add_argument("--motion", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lambda-rec", type=float, default=1.0)
    p.add_argument("--lambda-dmi", type=float, default=5.0)
    p.add_argument("--lambda-ef", type=float, default=1.0)
    p.add_argument("--pairs", type=int, default=20)
    p.add_argument("--iters", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_retarget)

    p = sub.add_parser("metrics", help="evaluate a retargeted motion")
    p.add_argument("--source-char", required=True)
    p.add_argument("--target-char", required=True)
    p.add_argument("--source", required=True)
    p.add_argument("--candidate", required=True)
    p.add_argument("--ground-truth", default=None)
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("gen-synthetic", help="generate the synthetic biped fixtures")
    p.add_argument("--spec", default=None, help="JSON multiplier spec; defaults apply if omitted")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_gen_synthetic)

    p = sub.add_parser("validate", help="audit a character (and optional motion) file")
    p.add_argument("--character", required=True)
    p.add_argument("--motion", default=None)
    p.set_defaults(func=_cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MeshMotionError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
