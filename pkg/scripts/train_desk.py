#!/usr/bin/env python3
"""Desk-scale training experiment: three 32x32 scene kinds at 1000 FPS,
noisy inputs (spp=64 analog), reference-simulator targets, 20 epochs.

Prints per-epoch losses and the final comparison against the stateless
frame-difference baseline.  Same configuration as the acceptance run.

Usage: python scripts/train_desk.py [outdir] [--epochs N]
"""

import argparse
import time
from pathlib import Path

import numpy as np

from evsynth.loss import LossConfig, total_loss
from evsynth.metrics import stream_distance
from evsynth.refsim import RefSimConfig, naive_baseline
from evsynth.scenegen import NoiseModel, SceneSpec
from evsynth.spikenet import SpikeNetConfig, infer_stream, save_checkpoint
from evsynth.train import (TrainConfig, _stack_pixels, evaluate_holdout,
                           holdout_split, make_dataset, train,
                           write_history_csv)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("outdir", nargs="?", default="out/desk")
    ap.add_argument("--epochs", type=int, default=20)
    args = ap.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)

    scenes = [SceneSpec(kind, 32, 32, 1000.0, 0.513, velocity=200.0, seed=i)
              for i, kind in enumerate(("moving_edge", "grating",
                                        "flashing_light"))]
    noise = NoiseModel(spp=64, gain=0.5, seed=1)
    ref = RefSimConfig(seed=2)
    net_cfg = SpikeNetConfig()
    t_cfg = TrainConfig(epochs=args.epochs, batch=128, lr=2e-3, seed=0)

    t0 = time.perf_counter()
    data = make_dataset(scenes, noise, ref)
    print(f"dataset: {sum(p.x.data[0].size for p in data)} pixels, "
          f"K={data[0].x.k}, "
          f"{sum(int(np.abs(p.e.data).sum()) for p in data)} target events")

    params, history = train(data, net_cfg, t_cfg, checkpoint_dir=out,
                            verbose=True)
    save_checkpoint(out / "model.evsn", params, net_cfg)
    write_history_csv(history, out / "history.csv")

    lcfg = LossConfig(t_cfg.count_weight)
    xs, es = _stack_pixels(data)
    hold, _ = holdout_split(xs.shape[0], t_cfg)
    net_loss = evaluate_holdout(xs[hold], es[hold], params, net_cfg, lcfg)
    naive_px = np.concatenate(
        [naive_baseline(p.x, ref.theta).pixel_sequences() for p in data])
    naive_loss = total_loss(es[hold], naive_px[hold], lcfg).total

    emds = []
    for pair in data:
        net_emd = stream_distance(infer_stream(pair.x, params, net_cfg),
                                  pair.e).emd
        nv_emd = stream_distance(naive_baseline(pair.x, ref.theta), pair.e).emd
        emds.append((net_emd, nv_emd))
        print(f"{pair.provenance['scene'].kind:15s} stream EMD: "
              f"net {net_emd:.3f} vs naive {nv_emd:.3f}")

    print(f"holdout loss: net {net_loss:.3f} vs naive {naive_loss:.3f} "
          f"(ratio {net_loss / naive_loss:.3f})")
    print(f"total time {(time.perf_counter() - t0) / 60:.1f} min; "
          f"checkpoints in {out}")


if __name__ == "__main__":
    main()
