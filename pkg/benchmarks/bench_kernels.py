"""Compare the compiled LSTM kernel against the numpy fallback.

Times one forward and one forward+backward pass per backend at the ci and
paper sizes, plus a short end-to-end training run, and checks the backends
agree on the result.

    python benchmarks/bench_kernels.py [--repeat 20]
"""

import time

import click
import numpy as np

from coredrift.predictor import Architecture, TrainConfig, init_params, kernels, make_windows, train


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_case(mod, W, b, X):
    hs, cs, gates = mod.lstm_forward(W, b, X)
    return mod.lstm_backward(W, X, hs, cs, gates, np.ones_like(hs[-1]))


def train_case(arch, samples, epochs):
    def run():
        return train(init_params(arch, seed=0), samples, TrainConfig(epochs=epochs, seed=0))
    return run


@click.command()
@click.option("--repeat", default=20, show_default=True)
@click.option("--batch", default=32, show_default=True, help="Minibatch size for the kernel timings.")
def main(repeat, batch):
    if "cython" not in kernels.BACKENDS:
        raise click.ClickException("compiled kernel not built; run `python setup.py build_ext --inplace`")
    py, cy = kernels.BACKENDS["python"], kernels.BACKENDS["cython"]
    rng = np.random.default_rng(0)

    click.echo(f"{'case':<28}{'python ms':>12}{'cython ms':>12}{'speedup':>10}")
    for hidden in (16, 100):
        W = rng.uniform(-0.1, 0.1, (4 * hidden, 1 + hidden))
        b = rng.uniform(-0.1, 0.1, 4 * hidden)
        X = rng.random((10, batch))
        a, c = kernel_case(py, W, b, X), kernel_case(cy, W, b, X)
        np.testing.assert_allclose(a[0], c[0], rtol=1e-10, atol=1e-12)
        for name, fn in (("forward", lambda m: m.lstm_forward(W, b, X)),
                         ("forward+backward", lambda m: kernel_case(m, W, b, X))):
            tp, tc = best_of(lambda: fn(py), repeat), best_of(lambda: fn(cy), repeat)
            click.echo(f"{f'H={hidden} {name}':<28}{tp * 1e3:>12.3f}{tc * 1e3:>12.3f}{tp / tc:>9.2f}x")

    lengths = rng.integers(1, 1401, 1000)
    samples = make_windows(lengths.tolist(), 10)
    for hidden in (16, 100):
        arch = Architecture(10, hidden, (75, 50, 25))
        times = {}
        for name, mod in (("python", py), ("cython", cy)):
            kernels._active = mod
            times[name] = best_of(train_case(arch, samples, 2), max(1, repeat // 10))
        kernels._active = kernels.BACKENDS[kernels.BACKEND]
        tp, tc = times["python"], times["cython"]
        click.echo(f"{f'H={hidden} train 2 epochs':<28}{tp * 1e3:>12.1f}{tc * 1e3:>12.1f}{tp / tc:>9.2f}x")


if __name__ == "__main__":
    main()
