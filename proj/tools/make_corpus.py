#!/usr/bin/env python3
"""Regenerates the token corpora under data/. Output is deterministic."""
import random
import sys
from pathlib import Path

MAX_LEN = 16


def markov_corpus(rng, count):
    tokens = list(range(1, 16))
    succ = {t: rng.sample(tokens, 3) for t in tokens}
    weights = [0.6, 0.3, 0.1]

    def sample():
        n = rng.randint(6, 14)
        seq = [rng.choice(tokens)]
        while len(seq) < n:
            seq.append(rng.choices(succ[seq[-1]], weights)[0])
        return tuple(seq)

    seen = set()
    target = sample()
    while len(target) != 12:
        target = sample()
    seen.add(target)
    out = []
    while len(out) < count:
        s = sample()
        if s not in seen:
            seen.add(s)
            out.append(s)
    return target, out


def expression_corpus(rng, count):
    digits = list(range(1, 11))
    ops = [11, 12, 13]
    target = (14, 13, 14, 12, 4, 13, 14, 11, 3)
    seen = {target}
    out = []
    while len(out) < count:
        n_operands = rng.randint(1, 6)
        seq = []
        for i in range(n_operands):
            if i:
                seq.append(rng.choice(ops))
            seq.append(14 if rng.random() < 0.5 else rng.choice(digits[1:]))
        if len(seq) <= MAX_LEN and tuple(seq) not in seen:
            seen.add(tuple(seq))
            out.append(tuple(seq))
    return out


def write(path, header, seqs):
    with open(path, "w", newline="\n") as f:
        f.write(header)
        for s in seqs:
            f.write(" ".join(map(str, s)) + "\n")


def main():
    data = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data")
    data.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20240917)
    target, seqs = markov_corpus(rng, 1000)
    write(data / "target_string.tokens",
          "# target_string corpus: sparse Markov chain over tokens 1..15\n"
          f"# target (held out): {' '.join(map(str, target))}\n", seqs)
    write(data / "micro_expression.tokens",
          "# micro_expression corpus: 1 digit-0 .. 10 digit-9, 11 +, 12 -, 13 *, 14 x\n",
          expression_corpus(rng, 1000))


if __name__ == "__main__":
    main()
