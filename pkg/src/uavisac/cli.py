"""Command-line front end.

Subcommands: `scenario init`, `dataset generate`, `train`, `synthesize`,
`eval trajectory`, `eval eirp`.  All randomness flows from --seed; failures
print one machine-readable JSON error line on stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from .beampattern import SynthesisRequest, export_cut_csv, pattern_cut, synthesize
from .geometry import DirectionAngles, Pose, RotationAngles
from .neuralnet import TrainConfig
from .pipeline import (
    ModelBundle,
    eirp_stats,
    evaluate_trajectory,
    generate_dataset,
    read_dataset_jsonl,
    read_records_csv,
    train_models,
    write_dataset_jsonl,
    write_records_csv,
    write_stats_csv,
)
from .scenario import Scenario, generate_trajectories


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uavisac")
    sub = parser.add_subparsers(dest="command", required=True)

    scenario_cmd = sub.add_parser("scenario", help="scenario file management")
    scenario_sub = scenario_cmd.add_subparsers(dest="scenario_command", required=True)
    init_cmd = scenario_sub.add_parser("init", help="write the default scenario JSON")
    init_cmd.add_argument("--out", required=True)

    dataset_cmd = sub.add_parser("dataset", help="dataset generation")
    dataset_sub = dataset_cmd.add_subparsers(dest="dataset_command", required=True)
    gen_cmd = dataset_sub.add_parser("generate", help="synthesize an optimizer-labeled dataset")
    gen_cmd.add_argument("--scenario", required=True)
    gen_cmd.add_argument("--trajectories", type=int, required=True)
    gen_cmd.add_argument("--policy", choices=["closest", "angle", "sinr", "optimal"], required=True)
    gen_cmd.add_argument("--seed", type=int, required=True)
    gen_cmd.add_argument("--out", required=True)

    train_cmd = sub.add_parser("train", help="train both networks on a dataset")
    train_cmd.add_argument("--data", required=True)
    train_cmd.add_argument("--epochs", type=int, default=200)
    train_cmd.add_argument("--batch", type=int, default=128)
    train_cmd.add_argument("--lr", type=float, default=1e-3)
    train_cmd.add_argument("--split", type=float, default=0.7)
    train_cmd.add_argument("--seed", type=int, required=True)
    train_cmd.add_argument("--out", required=True)

    synth_cmd = sub.add_parser("synthesize", help="single-point beam synthesis")
    synth_cmd.add_argument("--scenario", required=True)
    synth_cmd.add_argument(
        "--az", type=float, required=True,
        help="pointing azimuth from the array broadside axis, degrees",
    )
    synth_cmd.add_argument(
        "--el", type=float, required=True,
        help="pointing elevation above the array plane, degrees",
    )
    synth_cmd.add_argument("--sll-az", type=float, required=True, help="minimum azimuth-cut SLL, dB")
    synth_cmd.add_argument("--sll-el", type=float, required=True, help="minimum elevation-cut SLL, dB")
    synth_cmd.add_argument("--eirp", type=float, required=True, help="EIRP target, dBm")
    synth_cmd.add_argument(
        "--null", action="append", default=[], metavar="AZ,EL",
        help="null direction in broadside-relative degrees, repeatable",
    )
    synth_cmd.add_argument("--out-cuts", required=True,
                           help="CSV path stem; writes <stem>_az.csv and <stem>_el.csv")

    eval_cmd = sub.add_parser("eval", help="evaluation commands")
    eval_sub = eval_cmd.add_subparsers(dest="eval_command", required=True)
    traj_cmd = eval_sub.add_parser("trajectory", help="evaluate one seeded trajectory")
    traj_cmd.add_argument("--scenario", required=True)
    traj_cmd.add_argument("--bundle", default=None)
    traj_cmd.add_argument(
        "--policy", choices=["closest", "angle", "sinr", "optimal", "nn"], required=True
    )
    traj_cmd.add_argument("--source", choices=["optimizer", "nn"], required=True)
    traj_cmd.add_argument("--seed", type=int, required=True)
    traj_cmd.add_argument("--out", required=True)
    eirp_cmd = eval_sub.add_parser("eirp", help="ECDF, outage and mean rate from records")
    eirp_cmd.add_argument("--records", required=True)
    eirp_cmd.add_argument("--thresholds", required=True, help="comma-separated dBm values")
    eirp_cmd.add_argument("--out", required=True)

    return parser


def _broadside_direction(az_deg: float, el_deg: float) -> DirectionAngles:
    """Map broadside-relative azimuth/elevation onto polar direction angles.

    Azimuth is measured from the broadside axis (+y of the unrotated array),
    elevation above the array plane: theta = 90 - el, phi = 90 - az.
    """
    return DirectionAngles(
        theta=math.radians(90.0 - el_deg), phi=math.radians(90.0 - az_deg)
    )


def _parse_null(text: str) -> DirectionAngles:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"null must be 'az,el' in degrees, got {text!r}")
    az, el = (float(p) for p in parts)
    return _broadside_direction(az, el)


def _run_scenario_init(args) -> int:
    Scenario().save(args.out)
    print(f"wrote default scenario to {args.out}")
    return 0


def _run_dataset_generate(args) -> int:
    scenario = Scenario.load(args.scenario)
    samples = generate_dataset(scenario, args.trajectories, args.policy, args.seed)
    write_dataset_jsonl(args.out, samples, scenario, args.policy, args.seed)
    print(f"wrote {len(samples)} samples to {args.out}")
    return 0


def _report_csv_path(bundle_path: str) -> str:
    stem = bundle_path[:-5] if bundle_path.endswith(".json") else bundle_path
    return stem + "_report.csv"


def _run_train(args) -> int:
    samples, scenario, _ = read_dataset_jsonl(args.data)
    config = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch,
        learning_rate=args.lr,
        train_fraction=args.split,
        seed=args.seed,
    )
    bundle = train_models(samples, scenario, config)
    bundle.save(args.out)
    report_path = _report_csv_path(args.out)
    report = bundle.beamformer_report
    with open(report_path, "w", newline="") as fh:
        fh.write("epoch,train_loss,val_loss,val_beampattern_error\n")
        metric = report.val_metric or [float("nan")] * len(report.train_loss)
        for epoch, (tl, vl, vm) in enumerate(
            zip(report.train_loss, report.val_loss, metric), start=1
        ):
            fh.write(f"{epoch},{tl!r},{vl!r},{vm!r}\n")
    print(f"wrote bundle to {args.out} and report to {report_path}")
    return 0


def _run_synthesize(args) -> int:
    scenario = Scenario.load(args.scenario)
    request = SynthesisRequest(
        pointing=_broadside_direction(args.az, args.el),
        sll_min_az_db=args.sll_az,
        sll_min_el_db=args.sll_el,
        eirp_target_dbm=args.eirp,
        nulls=tuple(_parse_null(n) for n in args.null),
        k1=scenario.cost_k1,
        k2=scenario.cost_k2,
        threshold=scenario.cost_threshold,
        counter_max=scenario.counter_max,
    )
    if args.eirp > scenario.eirp_max_dbm:
        raise ValueError(
            f"EIRP target {args.eirp} dBm exceeds the scenario cap {scenario.eirp_max_dbm} dBm"
        )
    pose = Pose(position=scenario.start_m, angles=RotationAngles(0.0, 0.0, 0.0))
    result = synthesize(request, scenario.array, pose)
    stem = args.out_cuts[:-4] if args.out_cuts.endswith(".csv") else args.out_cuts
    for plane, suffix in (("azimuth", "_az.csv"), ("elevation", "_el.csv")):
        cut = pattern_cut(result.weights, scenario.array, pose, plane, request.pointing)
        export_cut_csv(cut, stem + suffix)
    print(
        "achieved_sll_az_db={:.4g} achieved_sll_el_db={:.4g} achieved_eirp_dbm={:.6g} "
        "active_elements={} iterations={} cost={:.6g} converged={}".format(
            result.achieved_sll_az_db,
            result.achieved_sll_el_db,
            result.achieved_eirp_dbm,
            result.active_elements,
            result.iterations,
            result.cost,
            result.converged,
        )
    )
    return 0


def _run_eval_trajectory(args) -> int:
    scenario = Scenario.load(args.scenario)
    bundle = ModelBundle.load(args.bundle) if args.bundle else None
    trajectory = generate_trajectories(scenario, 1, args.seed)[0]
    records = evaluate_trajectory(
        scenario, trajectory, args.policy, weight_source=args.source, bundle=bundle
    )
    write_records_csv(args.out, records)
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def _run_eval_eirp(args) -> int:
    records = read_records_csv(args.records)
    thresholds = [float(t) for t in args.thresholds.split(",") if t.strip()]
    stats = eirp_stats(records, thresholds)
    write_stats_csv(args.out, stats)
    outage_text = " ".join(f"outage@{t:g}dBm={v:.4f}" for t, v in stats.outage.items())
    print(f"mean_rate_bps={stats.mean_rate_bps!r} {outage_text}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "scenario":
            return _run_scenario_init(args)
        if args.command == "dataset":
            return _run_dataset_generate(args)
        if args.command == "train":
            return _run_train(args)
        if args.command == "synthesize":
            return _run_synthesize(args)
        if args.command == "eval":
            if args.eval_command == "trajectory":
                return _run_eval_trajectory(args)
            return _run_eval_eirp(args)
        raise ValueError(f"unknown command {args.command!r}")
    except Exception as exc:  # noqa: BLE001 - single CLI error funnel
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
