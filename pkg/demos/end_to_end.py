"""End-to-end walkthrough: synthesize, train, score, evaluate.

Run:  python3 demos/end_to_end.py
Writes nothing to disk; prints the training trajectory and the seven
evaluation metrics for a small synthetic benchmark.
"""

import numpy as np

from adclust import (EmbedderConfig, SynthSpec, TrainConfig, apply_normalizer,
                     evaluate, fit_normalizer, label_scores, score_single,
                     synth_dataset, train)


def main():
    # a normal-only training series and a labeled test series
    train_raw = synth_dataset(SynthSpec(length=1200, dim=2, anomaly_ratio=0.0, seed=3))
    test_raw = synth_dataset(SynthSpec(length=1200, dim=2, anomaly_ratio=0.1, seed=4))
    stats = fit_normalizer(train_raw)
    train_ds = apply_normalizer(train_raw, stats)
    test_ds = apply_normalizer(test_raw, stats)

    config = TrainConfig(
        embedder=EmbedderConfig(kind="mlp_window", input_dim=2, hidden_dim=8,
                                layers=1, dilations=(1,)),
        epochs=40,
        batch_windows=6,
        lr=0.02,
        window=100,
        seed=3,
    )
    model, log = train(train_ds, config, normalizer=stats)

    print("epoch    nu     r_sq   mean_dist  l_total")
    for r in log.records[::5]:
        print(f"{r.epoch:5d}  {r.nu:.4f}  {r.r_sq:8.4f}  {r.mean_dist:9.5f}  {r.l_total:8.4f}")

    scores = score_single(test_ds, model)
    series = label_scores(scores, alpha=0.1)
    print(f"\nthreshold={series.threshold:.4f}  flagged={series.labels.sum()} "
          f"of {test_ds.length} points")

    report = evaluate(test_raw.labels, series.labels, scores=scores,
                      vus_buffers=range(0, 51))
    print("\nmetric   value")
    for name, value in zip(("f1", "aff_p", "aff_r", "r_a_r", "r_a_p", "v_roc", "v_pr"),
                           report.as_row()):
        print(f"{name:7s}  {value:.4f}")

    anomalous = scores[test_raw.labels == 1]
    normal = scores[test_raw.labels == 0]
    print(f"\nmean score: anomalous {np.mean(anomalous):.4f} vs normal {np.mean(normal):.4f}")


if __name__ == "__main__":
    main()
