"""Command-line surface: one subcommand per pipeline stage.

Exit codes: 0 success, 1 usage, 2 data error (parse/dimension/index),
3 numerical failure (solver divergence, non-PSD systems). Machine-readable
error JSON goes to stderr; stdout carries only data.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import io
from .bbw import HandleSet, solve_bbw
from .deform import lbs_deform
from .errors import DataError, LapDeformError, NumericalError
from .fem import cotan_laplacian, deformation_energy, inverse_mass, lumped_mass
from .synth import synth_shape

# the learning stack (scikit-learn) and service (fastapi) import lazily so
# plain pipeline subcommands stay fast in scripted chains


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 (not 2) on usage errors, with JSON on stderr."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(json.dumps({"error": "Usage", "detail": message}) + "\n")
        raise SystemExit(1)


def _split_pair(value, flag):
    parts = value.split(",")
    if len(parts) != 2:
        raise DataError(f"{flag} expects two comma-separated paths, got {value!r}")
    return parts


def _cloud_format(path):
    return "ply-ascii" if str(path).lower().endswith(".ply") else "xyz"


def _load_cloud(path):
    return io.load_point_cloud(path, format=_cloud_format(path))


def _save_cloud(cloud, path):
    io.save_point_cloud(cloud, path, format=_cloud_format(path))


def _cmd_laplacian(args):
    node, ele = _split_pair(args.mesh, "--mesh")
    mesh = io.load_tet_mesh(node, ele)
    io.save_ssm(cotan_laplacian(mesh), args.out)
    if args.mass:
        io.save_dia(lumped_mass(mesh), args.mass)


def _cmd_energy(args):
    lap = io.load_ssm(args.lap)
    minv = io.load_dia(args.invmass)
    io.save_ssm(deformation_energy(lap, minv), args.out)


def _cmd_bbw(args):
    energy = io.load_ssm(args.energy)
    handles = HandleSet(io.load_handles_json(args.handles))
    weights, report = solve_bbw(energy, handles, tol=args.tol)
    if args.out.endswith(".lbsw"):
        io.save_weights_lbsw(weights, args.out)
    else:
        io.save_weights_csv(weights, args.out)
    sys.stderr.write(json.dumps(report.to_dict()) + "\n")


def _cmd_deform(args):
    cloud = _load_cloud(args.cloud)
    weights = io.load_weights_csv(args.weights)
    transforms = io.load_transforms_json(args.transforms)
    _save_cloud(lbs_deform(cloud, weights, transforms), args.out)


def _cmd_kps(args):
    from .laplearn import kps as kps_pairs

    cloud = _load_cloud(args.cloud)
    pairs = kps_pairs(cloud, args.k)
    with open(args.out, "w") as fh:
        for i, j in pairs:
            fh.write(f"{i} {j}\n")


def _cmd_pcl_lap(args):
    from .pcl import knn_graph_laplacian

    cloud = _load_cloud(args.cloud)
    lap_path, dia_path = _split_pair(args.out, "--out")
    lap, mass = knn_graph_laplacian(cloud, k=args.k, bandwidth=args.bandwidth)
    io.save_ssm(lap, lap_path)
    io.save_dia(inverse_mass(mass), dia_path)


def _cmd_synth(args):
    node, ele = _split_pair(args.out, "--out")
    mesh = synth_shape(args.kind, args.res, args.seed)
    io.save_tet_mesh(mesh, node, ele)


def _cmd_train(args):
    from .laplearn.model_io import save_model
    from .laplearn.train import TrainConfig, dataset_from_meshes, save_history_csv, train

    pairs = io.load_manifest(args.manifest)
    meshes = [io.load_tet_mesh(node, ele) for node, ele in pairs]
    cfg_doc = {}
    if args.config:
        with open(args.config) as fh:
            cfg_doc = json.load(fh)
    config = TrainConfig(**cfg_doc)
    result = train(dataset_from_meshes(meshes), config)
    save_model(result.params, args.out, k=config.k, c_m=result.c_m)
    if args.history:
        save_history_csv(result.history, args.history)
    sys.stderr.write(
        json.dumps({"best_epoch": result.best_epoch, "best_loss": result.best_loss}) + "\n"
    )


def _cmd_predict(args):
    from .laplearn import LaplacianLearner

    cloud = _load_cloud(args.cloud)
    lap_path, dia_path = _split_pair(args.out, "--out")
    learner = LaplacianLearner.from_file(args.model)
    learner.gate_threshold = args.gate_threshold
    pred = learner.predict(cloud)
    io.save_ssm(pred.lap, lap_path)
    io.save_dia(pred.minv, dia_path)


def _parse_model_source(spec_str):
    if spec_str == "oracle":
        return "oracle"
    if spec_str.startswith("baseline"):
        k = int(spec_str.split(":", 1)[1]) if ":" in spec_str else 12
        return ("baseline", k)
    from .laplearn import LaplacianLearner

    return LaplacianLearner.from_file(spec_str)


def _cmd_eval(args):
    from .metrics import eval_pipeline, report_csv_row

    cloud = _load_cloud(args.cloud)
    node, ele = _split_pair(args.gt, "--gt")
    mesh = io.load_tet_mesh(node, ele)
    model = _parse_model_source(args.model)
    report = eval_pipeline(
        cloud, mesh, model, handle_count=args.handles, n_deformations=args.deformations,
        seed=args.seed,
    )
    with open(args.out, "w") as fh:
        json.dump(report, fh, indent=1)
    sys.stdout.write(report_csv_row(report, label=args.model) + "\n")


def _cmd_serve(args):
    import uvicorn

    from .service import create_app

    app = create_app(static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


def build_parser():
    parser = _Parser(prog="lapdeform", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("laplacian", help="assemble the FEM Laplacian of a tet mesh")
    p.add_argument("--mesh", required=True, metavar="NODE,ELE")
    p.add_argument("--out", required=True)
    p.add_argument("--mass", default=None, help="also write the lumped mass diagonal")
    p.set_defaults(func=_cmd_laplacian)

    p = sub.add_parser("energy", help="deformation energy A = L Minv L")
    p.add_argument("--lap", required=True)
    p.add_argument("--invmass", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_energy)

    p = sub.add_parser("bbw", help="bounded biharmonic weights")
    p.add_argument("--energy", required=True)
    p.add_argument("--handles", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=_cmd_bbw)

    p = sub.add_parser("deform", help="linear blend skinning")
    p.add_argument("--cloud", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--transforms", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_deform)

    p = sub.add_parser("kps", help="KNN point pair sampling")
    p.add_argument("--cloud", required=True)
    p.add_argument("--k", type=int, default=32)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_kps)

    p = sub.add_parser("pcl-lap", help="KNN-graph baseline Laplacian")
    p.add_argument("--cloud", required=True)
    p.add_argument("--k", type=int, default=12)
    p.add_argument("--bandwidth", default="auto")
    p.add_argument("--out", required=True, metavar="LAP.SSM,MINV.DIA")
    p.set_defaults(func=_cmd_pcl_lap)

    p = sub.add_parser("synth", help="synthetic tet-mesh fixture")
    p.add_argument("--kind", required=True, choices=["bar", "ellipsoid", "lshape"])
    p.add_argument("--res", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, metavar="NODE,ELE")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train the Laplacian learning network")
    p.add_argument("--manifest", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--history", default=None, help="write loss history CSV here")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="predict Laplacian + inverse mass from a cloud")
    p.add_argument("--cloud", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--gate-threshold", type=float, default=None)
    p.add_argument("--out", required=True, metavar="LAP.SSM,MINV.DIA")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("eval", help="weight/shape metrics against FEM ground truth")
    p.add_argument("--cloud", required=True)
    p.add_argument("--gt", required=True, metavar="NODE,ELE")
    p.add_argument("--model", required=True, help="model path, 'oracle', or 'baseline[:k]'")
    p.add_argument("--handles", type=int, default=16)
    p.add_argument("--deformations", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("serve", help="run the interactive deformation service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--static", default=None, help="directory served under /app")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except NumericalError as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "detail": str(exc)}) + "\n")
        return 3
    except (DataError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "detail": str(exc)}) + "\n")
        return 2
    except LapDeformError as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "detail": str(exc)}) + "\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
