#!/usr/bin/env python3
"""
Study Protocol Driver for BasketOptimizer
Runs the optimizer benchmark, hands its selected algorithm to the utility comparison
and finishes with the boundary and TOER-curve analyses
Usage: python run_protocol.py [desk|full] [--workers N] [--out-root DIR]
"""

import sys
import os
import argparse
from pathlib import Path
from typing import Any, Dict, Optional

# Add parent directory to path to import basketopt modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from basketopt.cli import dispatch
from basketopt.config import RunConfig, apply_overrides, get_config_manager, validate_config
from basketopt.errors import BasketOptError, exit_code_for
from basketopt.experiment_runner import run_part1, run_part2_3
from basketopt.logging_config import get_logger

logger = get_logger('basketopt.protocol', 'studies')


class ProtocolRun:
    """Chains the three protocol stages over one configuration profile"""

    def __init__(self, profile: str = "desk", workers: Optional[int] = None, out_root: Optional[str] = None):
        self.profile = profile
        self.workers = workers
        self.out_root = Path(out_root) if out_root else None
        self.config_manager = get_config_manager()

        print(f"🧪 Study protocol ({profile} profile)")
        print(f"⚙️  Benchmark config: benchmark_{profile}, study config: study_{profile}, analyses config: analyses")
        if profile == "full":
            print("⚠️  The full profile runs 50 seeds per algorithm and takes days on a single machine")

    def _config(self, name: str, command: str, study_overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
        data = self.config_manager.load_config(name)
        if self.out_root is not None:
            data["out_dir"] = str(self.out_root / Path(data.get("out_dir", name)).name)
        if study_overrides:
            data.setdefault("study", {}).update(study_overrides)
        return validate_config(apply_overrides(data, {"command": command, "workers": self.workers}))

    def run_benchmark(self) -> str:
        """Part I; returns the path of the benchmark report"""
        config = self._config(f"benchmark_{self.profile}", "benchmark")
        logger.info(f"Part I: {len(config.benchmark.algorithms)} algorithms, {config.benchmark.n_runs} runs each")
        print("\n🚀 Part I: optimizer benchmark")
        report = run_part1(config)
        logger.info(f"Part I selected {report['selection']['winner']}")
        return str(Path(config.out_dir) / "benchmark.json")

    def run_study(self, winner_from: Optional[str]) -> Dict[str, Any]:
        """Parts II and III with the benchmark winner, or the configured optimizer when there is none"""
        overrides = {"winner_from": winner_from} if winner_from else None
        config = self._config(f"study_{self.profile}", "study", overrides)
        logger.info(f"Parts II/III on sets {', '.join(config.study.sets)} (optimizer from {config.study.winner_from or 'config'})")
        print("\n🚀 Parts II and III: utility comparison")
        return run_part2_3(config)

    def run_analyses(self):
        """Extreme borrowing boundary and the two-stratum TOER curve"""
        print("\n🚀 Further analyses: borrowing boundary and TOER curve")
        for command in ("boundary", "toer-curve"):
            artifacts = dispatch(self._config("analyses", command))
            logger.info(f"{command} written to {artifacts['csv']}")
            print(f"📁 {command}: {artifacts['csv']}")

    def run(self, skip_benchmark: bool = False):
        winner_from = None if skip_benchmark else self.run_benchmark()
        self.run_study(winner_from)
        self.run_analyses()
        logger.info("Protocol completed")
        print("\n✅ Protocol completed!")


def parse_arguments():
    """Parse command line arguments"""
    parser = argparse.ArgumentParser(
        description="BasketOptimizer study protocol",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python run_protocol.py                        # Desk-scale profile (default)
  python run_protocol.py desk --workers 8       # Desk-scale on 8 worker threads
  python run_protocol.py full --out-root runs   # Full protocol, outputs under runs/
  python run_protocol.py desk --skip-benchmark  # Reuse the report named in study_desk.json
        """
    )
    parser.add_argument('profile', nargs='?', default='desk', choices=['desk', 'full'],
                        help='Configuration profile (default: desk)')
    parser.add_argument('--workers', type=int, help='Worker threads (default: available parallelism)')
    parser.add_argument('--out-root', help='Directory replacing the results/ root of every profile config')
    parser.add_argument('--skip-benchmark', action='store_true',
                        help='Skip Part I and use the winner_from report of the study config')
    return parser.parse_args()


def main():
    """Run the protocol with argument parsing"""
    args = parse_arguments()
    logger.info(f"Starting protocol run, profile {args.profile}")
    try:
        ProtocolRun(args.profile, args.workers, args.out_root).run(args.skip_benchmark)
    except BasketOptError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"❌ Protocol failed: {e}")
        return exit_code_for(e)
    except KeyboardInterrupt:
        print("\n⏹️  Protocol interrupted by user")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
