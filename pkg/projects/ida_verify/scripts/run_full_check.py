#!/usr/bin/env python3
"""
Script to run the whole verification pipeline into one output directory.
"""

import argparse
import sys

from projects.ida_verify.src.cli import main as cli_main


def parse_args():
    parser = argparse.ArgumentParser(description="Run the full IDA-PBC verification pipeline")

    parser.add_argument(
        "--out",
        type=str,
        default="ida_verify_out",
        help="Output directory shared by every stage (default: ida_verify_out)",
    )

    parser.add_argument(
        "--seed",
        type=int,
        default=0,
        help="Seed for every sampled state (default: 0)",
    )

    parser.add_argument(
        "--samples",
        type=int,
        default=1000,
        help="Samples per sweep (default: 1000)",
    )

    parser.add_argument("--fd-step", type=float, help="Finite-difference step (settings default)")
    parser.add_argument(
        "--fd-order", type=int, choices=[2, 4], help="Finite-difference order (settings default)"
    )
    return parser.parse_args()


def main():
    args = parse_args()
    common = ["--out", args.out, "--seed", str(args.seed)]
    if args.fd_step is not None:
        common += ["--fd-step", str(args.fd_step)]
    if args.fd_order is not None:
        common += ["--fd-order", str(args.fd_order)]
    samples = ["--samples", str(args.samples)]

    # Run the stages; the report aggregates whatever they wrote
    stages = {
        "check-matching iwp": ["check-matching", "--model", "iwp", *common, *samples],
        "check-matching rip": ["check-matching", "--model", "rip", *common, *samples],
        "analyze-iss iwp": ["analyze-iss", "--model", "iwp", *common],
        "simulate iwp": [
            "simulate",
            "--model",
            "iwp",
            "--mode",
            "disturbed",
            "--disturbance",
            "matched_sinusoid",
            *common,
        ],
        "report": ["report", *common],
    }
    codes = {name: cli_main(argv) for name, argv in stages.items()}

    print("\nPipeline Results:")
    for name, code in codes.items():
        print(f"{name}: exit {code}")

    return 2 if any(code == 2 for code in codes.values()) else 0


if __name__ == "__main__":
    sys.exit(main())
