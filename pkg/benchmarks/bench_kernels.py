"""Compare the compiled and pure-Python kernel backends.

Times a set of kernel micro-benchmarks at model-typical shapes, then a
full forward+backward pass of both networks on a synthetic sample.

Usage: python benchmarks/bench_kernels.py [--repeat N] [--macro-repeat N]
"""

import argparse
import time

import numpy as np

from dspn import model
from dspn import ndgrad as nd
from dspn.dataset import EncodedDay, EncodedSample
from dspn.model import DspnConfig
from dspn.ndgrad import Tape, available_backends, use_backend

VOCAB = {"units": 5001, "advertisers": 2501, "categories": 13,
         "tags": 41, "positions": 9}


def micro_cases():
    rng = np.random.default_rng(0)
    a108 = rng.normal(size=(1, 108))
    w108 = rng.normal(size=(108, 32))
    q = rng.normal(size=(8, 8))
    v = rng.normal(size=(8, 8))
    x24 = rng.normal(size=(1, 24))
    w24 = rng.normal(size=(24, 18))
    u18 = rng.normal(size=(18, 18))
    s18 = rng.normal(size=(1, 18))
    b18 = rng.normal(size=(1, 18))
    table = rng.normal(size=(41, 8))
    ids = np.array([3, 17, 40, 0, 1, 2, 5, 9], dtype=np.int64)
    mask = np.array([1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0])

    return [
        ("matmul 1x108 @ 108x32",
         lambda: nd.matmul(nd.tensor(a108), nd.tensor(w108))),
        ("matmul_t 8x8 @ 8x8.T",
         lambda: nd.matmul_t(nd.tensor(v), nd.tensor(q))),
        ("affine3 day step",
         lambda: nd.affine3(nd.tensor(x24), nd.tensor(w24), nd.tensor(s18),
                            nd.tensor(u18), nd.tensor(b18))),
        ("sigmoid 1x18",
         lambda: nd.sigmoid(nd.tensor(s18))),
        ("tanh 1x18",
         lambda: nd.tanh(nd.tensor(s18))),
        ("softmax_rows 8x8 masked",
         lambda: nd.softmax_rows(nd.tensor(q), mask)),
        ("gather_rows 8 of 41",
         lambda: nd.gather_rows(nd.tensor(table), ids)),
    ]


def bench_micro(repeat):
    rows = []
    for name, fn in micro_cases():
        per_backend = {}
        for backend in available_backends():
            with use_backend(backend):
                fn()  # warm up
                t0 = time.perf_counter()
                for _ in range(repeat):
                    fn()
                per_backend[backend] = (time.perf_counter() - t0) / repeat
        rows.append((name, per_backend))
    return rows


def synth_sample(config, rng):
    n_a = config.n_a

    def day():
        kinds = rng.integers(1, 7, size=n_a).astype(np.int64)
        return EncodedDay(
            report_norm=rng.normal(size=config.n_i),
            tag_kinds=kinds,
            tag_targets=rng.integers(0, VOCAB["tags"], size=n_a),
            tag_values=rng.normal(size=n_a),
            tag_mask=(rng.random(n_a) < 0.6).astype(float),
            pos_kinds=kinds.copy(),
            pos_targets=rng.integers(0, VOCAB["positions"], size=n_a),
            pos_values=rng.normal(size=n_a),
            pos_mask=(rng.random(n_a) < 0.4).astype(float),
            ult_tag_ids=rng.integers(0, VOCAB["tags"], size=n_a),
            ult_tag_values=rng.normal(size=n_a),
            ult_tag_mask=(rng.random(n_a) < 0.5).astype(float),
            ult_pos_ids=rng.integers(0, VOCAB["positions"], size=n_a),
            ult_pos_values=rng.normal(size=n_a),
            ult_pos_mask=(rng.random(n_a) < 0.3).astype(float),
        )

    return EncodedSample(unit=7, advertiser=3, category=1,
                         days=[day() for _ in range(config.l)], label=1)


def bench_macro(repeat):
    config = DspnConfig()
    enc = synth_sample(config, np.random.default_rng(1))
    results = {}
    for kind in ("dspn", "baseline"):
        per_backend = {}
        for backend in available_backends():
            with use_backend(backend):
                if kind == "dspn":
                    params = model.init_dspn_params(config, VOCAB, seed=3)
                else:
                    params = model.init_baseline_params(config, VOCAB, seed=3)

                def step():
                    params.zero_grads()
                    tape = Tape()
                    leaves = model.watch_all(tape, params)
                    if kind == "dspn":
                        p, _ = model.dspn_forward(leaves, enc, config)
                    else:
                        p = model.mlp_baseline_forward(leaves, enc, config)
                    nd.backward(tape, model.bce_loss(p, 1))

                step()  # warm up
                t0 = time.perf_counter()
                for _ in range(repeat):
                    step()
                per_backend[backend] = (time.perf_counter() - t0) / repeat
        results[kind] = per_backend
    return results


def fmt(seconds):
    if seconds < 1e-3:
        return f"{seconds * 1e6:8.1f} us"
    return f"{seconds * 1e3:8.2f} ms"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=2000,
                        help="iterations per micro case")
    parser.add_argument("--macro-repeat", type=int, default=50,
                        help="iterations per full model pass")
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    if len(backends) < 2:
        print("note: compiled kernels unavailable, timing fallback only")

    print("\nkernel micro-benchmarks (per call):")
    header = f"{'case':32s}" + "".join(f"{b:>14s}" for b in backends)
    print(header)
    for name, per_backend in bench_micro(args.repeat):
        row = f"{name:32s}"
        for b in backends:
            row += f"{fmt(per_backend[b]):>14s}"
        if len(backends) == 2 and per_backend[backends[1]] > 0:
            ratio = per_backend[backends[1]] / per_backend[backends[0]]
            row += f"   x{ratio:.2f}"
        print(row)

    print(f"\nfull forward+backward (per sample, {args.macro_repeat} reps):")
    for kind, per_backend in bench_macro(args.macro_repeat).items():
        row = f"{kind:32s}"
        for b in backends:
            row += f"{fmt(per_backend[b]):>14s}"
        if len(backends) == 2 and per_backend[backends[1]] > 0:
            ratio = per_backend[backends[1]] / per_backend[backends[0]]
            row += f"   x{ratio:.2f}"
        print(row)


if __name__ == "__main__":
    main()
