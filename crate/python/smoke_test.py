"""Smoke test for the compiled extension.

    pip install maturin
    maturin develop -m crates/python/Cargo.toml
    python python/smoke_test.py
"""

import math

import basiscorr as bc


def main():
    d = bc.outcome_distribution()
    print("diagonal:", [round(p, 4) for p in d])

    hardy = bc.hardy_chain_check(d)
    print("facts:", hardy["facts"], hardy["verdict"])
    assert hardy["verdict"] == "CONTRADICTION"

    dq3, dq4, signaling = bc.no_signaling_check(d)
    print(f"delta_q3={dq3} delta_q4={dq4} signaling={signaling}")
    assert signaling

    s = bc.chsh_value(0.0, math.pi / 2, -math.pi / 4, math.pi / 4)
    print("CHSH at the optimal angles:", s)
    assert abs(s - 2 * math.sqrt(2)) < 1e-9

    print("PR box:", bc.local_polytope_check(bc.pr_box()))

    counts = bc.sample(d, 1_000_000, 42)
    empirical = [c / 1_000_000 for c in counts]
    sampled = bc.hardy_chain_check(empirical, 0.01)
    print("empirical facts:", sampled["facts"], sampled["verdict"])
    assert sampled["verdict"] == "CONTRADICTION"

    print("ok")


if __name__ == "__main__":
    main()
