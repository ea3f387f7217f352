"""Compare the proposal-based matching with the exhaustive optimum on small
seeded instances and report the value ratio, quota and stability checks.

    python scripts/matching_gap.py --faps 1 --fues 4 --subchannels 2 --q 2 --q-ue 1
"""

import argparse

import numpy as np

from nomafran.caching import CacheConfig, content_popularity, place_cache
from nomafran.channel import SpectrumConfig, draw_channel_gains
from nomafran.game import UtilityParams
from nomafran.matching import blocking_pairs, brute_force_optimum, matching_value, run_matching
from nomafran.topology import GeometryConfig, generate_topology
from nomafran.units import dbm_to_watt


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--faps", type=int, default=1)
    ap.add_argument("--fues", type=int, default=4)
    ap.add_argument("--subchannels", type=int, default=2)
    ap.add_argument("--q", type=int, default=2)
    ap.add_argument("--q-ue", type=int, default=None)
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--no-stabilize", action="store_true")
    args = ap.parse_args()
    # same power per subchannel as a full 50-subchannel F-AP at 41 dBm
    params = UtilityParams(p_max_fap=float(dbm_to_watt(41.0)) * args.subchannels / 50)
    ratios, stable = [], 0
    for seed in range(args.seeds):
        rng = np.random.default_rng(seed)
        topo = generate_topology(GeometryConfig(n_faps=args.faps, n_fues_per_fap=args.fues), rng)
        ch = draw_channel_gains(topo, SpectrumConfig(n_subchannels=args.subchannels), rng)
        cache = place_cache(content_popularity(100, 0.8), CacheConfig(), topo, rng)
        m = run_matching(ch, cache, params, args.q, args.q_ue, stabilize=not args.no_stabilize)
        _, best = brute_force_optimum(ch, cache, params, args.q, args.q_ue)
        ratios.append(matching_value(m, ch, cache, params) / best if best > 0 else 1.0)
        stable += not blocking_pairs(m, ch, cache, params)
    r = np.array(ratios)
    print(f"ratio min {r.min():.3f} p10 {np.quantile(r, 0.1):.3f} mean {r.mean():.3f}; "
          f"stable {stable}/{args.seeds}")


if __name__ == "__main__":
    main()
