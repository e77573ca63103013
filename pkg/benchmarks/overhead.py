"""
benchmarks/overhead.py
======================
Tracking overhead microbenchmark. Times alloc/free pairs through:

  baseline  - the allocator alone, no tracker involved
  disabled  - traced_alloc/traced_free on a disabled tracker
  exact     - enabled, every event recorded
  sampled   - enabled, every 128th event recorded

Ratios against baseline are printed, never asserted. The disabled ratio is
expected to stay within 1.5x.

Run: python benchmarks/overhead.py [--count 10000000] [--size 16]
"""

import argparse
import gc
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from hooks.interceptor import BytearrayAllocator, Interceptor  # noqa: E402


def bench_baseline(count: int, size: int) -> float:
    allocator = BytearrayAllocator()
    allocate, release = allocator.allocate, allocator.release
    start = time.perf_counter()
    for _ in range(count):
        release(allocate(size))
    return time.perf_counter() - start


def bench_tracker(count: int, size: int, *, enabled: bool, rate: int = 1) -> float:
    tracker = Interceptor(enabled=enabled, sampling_rate=rate)
    alloc, free = tracker.traced_alloc, tracker.traced_free
    with tracker.scopes.scope("bench"):
        start = time.perf_counter()
        for _ in range(count):
            free(alloc(size))
        elapsed = time.perf_counter() - start
    snapshot = tracker.take_snapshot()
    if enabled and snapshot.total_live_bytes != 0:
        raise RuntimeError(f"tracker did not drain: {snapshot.total_live_bytes} live bytes")
    return elapsed


def main() -> None:
    parser = argparse.ArgumentParser(description="memattr tracking overhead")
    parser.add_argument("--count", type=int, default=10_000_000)
    parser.add_argument("--size", type=int, default=16)
    args = parser.parse_args()

    gc.disable()
    results = {"baseline": bench_baseline(args.count, args.size)}
    results["disabled"] = bench_tracker(args.count, args.size, enabled=False)
    results["exact"] = bench_tracker(args.count, args.size, enabled=True)
    results["sampled_128"] = bench_tracker(args.count, args.size, enabled=True, rate=128)
    gc.enable()

    baseline = results["baseline"]
    print(f"{args.count} alloc/free pairs of {args.size} bytes")
    for name, elapsed in results.items():
        print(f"  {name:<12} {elapsed:8.2f}s  ratio={elapsed / baseline:5.2f}x")


if __name__ == "__main__":
    main()
