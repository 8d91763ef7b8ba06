#!/usr/bin/env python3
"""
Simulation study runner
Replays seeded replications of a simulation setting and reports mean(sd) of
the estimated band count and Rand index
"""
import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List

import numpy as np

from bandscan import config
from bandscan.inchworm import BandPartition
from bandscan.pipeline import run_analysis
from bandscan.schemas import AnalysisConfig
from bandscan.simgen import SETTINGS, get_setting, rand_index, simulate_fts


@dataclass
class Replication:
    seed: int
    p_hat: int
    cuts: List[float]
    rand: float
    bandwidth: float


class SimulationStudy:
    def __init__(self, setting: str, T_B: int, B: int, R: int, cfg: AnalysisConfig):
        self.setting = get_setting(setting)
        self.T_B = T_B
        self.B = B
        self.R = R
        self.cfg = cfg

    def run_replication(self, seed: int) -> Replication:
        """Simulate one series, analyze it and score it against the true partition"""
        X = simulate_fts(self.setting, self.T_B * self.B, self.R, seed)
        cfg = self.cfg.model_copy(update={"B": self.B, "seed": seed, "stationarity": False})
        run = run_analysis(X, cfg, workers=1)
        grid = run.spectrum.grid
        score = rand_index(run.partition, BandPartition(self.setting.cuts), grid.N_B, T_B=grid.T_B)
        return Replication(seed=seed, p_hat=run.partition.p_hat, cuts=list(run.partition.cuts), rand=score,
                           bandwidth=run.spectrum.bandwidth)

    def run(self, replications: int, first_seed: int = 1, processes: int = 1) -> List[Replication]:
        print(f"🔄 Running {replications} replications of '{self.setting.id}' "
              f"(T_B={self.T_B}, B={self.B}, R={self.R})...")
        seeds = list(range(first_seed, first_seed + replications))
        batch_size = max(processes, 10)
        results: List[Replication] = []
        with ProcessPoolExecutor(max_workers=processes) as pool:
            for batch_start in range(0, replications, batch_size):
                batch = seeds[batch_start:batch_start + batch_size]
                results.extend(pool.map(self.run_replication, batch))
                print(f"  ✅ Completed {len(results)}/{replications} replications")
        return results

    def hit_rate(self, results: List[Replication]) -> float:
        """Share of runs placing every true cut within one bandwidth of an estimated cut"""
        if not self.setting.cuts:
            return float(np.mean([r.p_hat == 1 for r in results]))
        hits = [
            all(any(abs(c - truth) <= r.bandwidth for c in r.cuts) for truth in self.setting.cuts)
            for r in results
        ]
        return float(np.mean(hits))


def main():
    parser = argparse.ArgumentParser(description="Replicate a simulation-table row")
    parser.add_argument("--setting", choices=sorted(SETTINGS), default="white-noise")
    parser.add_argument("--T_B", type=int, default=200)
    parser.add_argument("--B", type=int, default=10)
    parser.add_argument("--R", type=int, default=5)
    parser.add_argument("--replications", type=int, default=20)
    parser.add_argument("--first-seed", type=int, default=1)
    parser.add_argument("--d0", type=int, default=config.DEFAULT_D0)
    parser.add_argument("--processes", type=int, default=1)
    args = parser.parse_args()
    config.configure_logging("WARNING")

    print("📊 Frequency Band Simulation Study")
    print("=" * 40)
    study = SimulationStudy(args.setting, args.T_B, args.B, args.R, AnalysisConfig(d0=args.d0))
    results = study.run(args.replications, first_seed=args.first_seed, processes=args.processes)

    p_hats = np.array([r.p_hat for r in results], dtype=float)
    rands = np.array([r.rand for r in results])
    print("\n📋 Summary:")
    print(f"  • p_hat: {p_hats.mean():.3f}({p_hats.std(ddof=1) if len(results) > 1 else 0.0:.3f})")
    print(f"  • Rand index: {rands.mean():.3f}({rands.std(ddof=1) if len(results) > 1 else 0.0:.3f})")
    print(f"  • Cuts within one bandwidth: {study.hit_rate(results):.0%}")


if __name__ == "__main__":
    try:
        main()
        print("\n🎉 Simulation study completed successfully!")
    except Exception as e:
        print(f"\n❌ Simulation study failed: {e}")
        sys.exit(1)
