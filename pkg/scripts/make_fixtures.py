import sys
from pathlib import Path

import numpy as np

# Add project root to path
sys.path.append(str(Path(__file__).parent.parent))

from atypicality.binarize import format_bit_text, randu_bits
from atypicality.montecarlo import ANOMALOUS_CHAIN, TYPICAL_CHAIN, generate_binary_markov, generate_markov
from atypicality.utils import derive_rng


def write_bits(directory: Path, name: str, bits) -> None:
    path = directory / name
    path.write_text(format_bit_text(bits), encoding="utf-8")
    print(f"✅ {path} ({len(bits)} bits)")


def main(directory: Path, seed: int = 0):
    directory.mkdir(parents=True, exist_ok=True)
    print(f"--- Writing synthetic fixtures to {directory} (seed={seed}) ---")

    # 20,000 fair bits with a 500-bit p=0.8 insertion at 10,000
    gen = derive_rng(seed, 1)
    bits = gen.integers(0, 2, size=20_000, dtype=np.uint8)
    bits[10_000:10_500] = (gen.random(500) < 0.8).astype(np.uint8)
    write_bits(directory, "insertion.txt", bits)

    # RANDU stream with 1,000 numpy-generated fair bits spliced in at 5,000
    randu = randu_bits(10_000, seed=2 * seed + 1)
    randu[5_000:6_000] = derive_rng(seed, 2).integers(0, 2, size=1_000, dtype=np.uint8)
    write_bits(directory, "randu_insertion.txt", randu)

    write_bits(directory, "alternating.txt", np.array([0, 1] * 5_000, dtype=np.uint8))

    # order-2 binary Markov source, P(1 | last two bits)
    write_bits(directory, "markov_order2.txt",
               generate_binary_markov([0.9, 0.2, 0.7, 0.1], 100_000, derive_rng(seed, 3)))

    # three-state chains: training stream and a test stream with an anomalous middle segment
    rng = derive_rng(seed, 4)
    training, _ = generate_markov(TYPICAL_CHAIN, 100_000, rng)
    head, state = generate_markov(TYPICAL_CHAIN, 4_000, rng)
    middle, state = generate_markov(ANOMALOUS_CHAIN, 2_000, rng, state)
    tail, _ = generate_markov(TYPICAL_CHAIN, 4_000, rng, state)
    write_bits(directory, "markov_training.txt", training)
    write_bits(directory, "markov_test.txt", np.concatenate([head, middle, tail]))


if __name__ == "__main__":
    target = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("fixtures")
    main(target, int(sys.argv[2]) if len(sys.argv) > 2 else 0)
