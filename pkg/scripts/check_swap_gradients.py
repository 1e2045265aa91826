#!/usr/bin/env python3
"""Finite-difference audit of the toy swap model's backprop.

Sweeps every parameter tensor with central differences and prints the
per-tensor relative error, then trains briefly and reports the loss
trajectory and held-out swap direction.
"""

import argparse
import time

import numpy as np

from deidkit import TrainConfig, init_model, swap, train
from deidkit.faceswap import INPUT_DIM, losses_and_grads, reconstruction_loss
from deidkit.synth import default_identity_specs, gen_identity_dataset


def gradient_sweep(seed: int, batch: int, eps: float) -> None:
    model = init_model(seed)
    rng = np.random.default_rng(seed)
    bx = rng.uniform(0, 1, (batch, INPUT_DIM))
    by = rng.uniform(0, 1, (batch, INPUT_DIM))
    _, _, analytic = losses_and_grads(model, bx, by)

    def combined():
        return reconstruction_loss(model, bx, "X") + reconstruction_loss(model, by, "Y")

    start = time.perf_counter()
    for name in sorted(model.params):
        flat = model.params[name].reshape(-1)
        numeric = np.empty(flat.size)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + eps
            plus = combined()
            flat[idx] = orig - eps
            numeric[idx] = (plus - combined()) / (2 * eps)
            flat[idx] = orig
        a = analytic[name].reshape(-1)
        rel = np.linalg.norm(a - numeric) / max(np.linalg.norm(a) + np.linalg.norm(numeric),
                                                1e-12)
        print(f"  {name:<10} {flat.size:>6} params  relative error {rel:.3e}")
    print(f"sweep took {time.perf_counter() - start:.1f}s")


def training_run(seed: int, steps: int) -> None:
    spec_x, spec_y = default_identity_specs()
    dataset = gen_identity_dataset(spec_x, spec_y, 256, seed=seed)
    model = init_model(seed)
    history = train(model, dataset, TrainConfig(steps=steps, seed=seed))
    print(f"loss: {sum(history[0]):.5f} -> {sum(history[-1]):.5f} over {steps} steps")
    held = gen_identity_dataset(spec_x, spec_y, 100, seed=seed + 1)
    xs = np.stack([s.pixels.ravel() for s in dataset if s.identity == "X"])
    ys = np.stack([s.pixels.ravel() for s in dataset if s.identity == "Y"])
    held_x = np.stack([s.pixels.ravel() for s in held if s.identity == "X"])
    swapped = swap(model, held_x).reshape(-1, INPUT_DIM)
    nearer = (np.linalg.norm(swapped - ys.mean(0), axis=1)
              < np.linalg.norm(swapped - xs.mean(0), axis=1)).mean()
    print(f"held-out X frames swapping nearer the Y centroid: {nearer:.1%}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--batch", type=int, default=2)
    parser.add_argument("--eps", type=float, default=1e-5)
    parser.add_argument("--steps", type=int, default=500)
    args = parser.parse_args()
    gradient_sweep(args.seed, args.batch, args.eps)
    training_run(args.seed, args.steps)


if __name__ == "__main__":
    main()
