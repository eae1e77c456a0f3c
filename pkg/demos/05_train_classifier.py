"""Train the satisfiability classifier on a generated dataset.

The default is a short run for a quick look; ``--full`` uses the standard
2,000-formula set and 150 epochs (several minutes per seed).

    python3 demos/05_train_classifier.py [--full]
"""

import sys
import time

from milpsat.generator import GenParams, build_dataset
from milpsat.train import TrainConfig, train

full = "--full" in sys.argv
params = GenParams(size=2000, seed=0) if full else GenParams(n_min=10, n_max=20, size=400, seed=0)
cfg = TrainConfig() if full else TrainConfig(epochs=20, learning_rate=1e-3)

t0 = time.perf_counter()
ds = build_dataset(params)
print(f"dataset: {ds.counts()} in {time.perf_counter() - t0:.1f} s")


def progress(epoch, m):
    if (epoch + 1) % 5 == 0:
        print(f"epoch {epoch + 1:3d}  loss {m.train_loss[-1]:.4f}  train {m.train_acc[-1]:.3f}  valid {m.valid_acc[-1]:.3f}")


model, metrics = train(ds, cfg, progress)
t = metrics.test
print(f"best epoch {metrics.best_epoch}: valid {metrics.valid.accuracy:.3f}, test {t.accuracy:.3f} "
      f"(tp {t.tp} tn {t.tn} fp {t.fp} fn {t.fn})")
