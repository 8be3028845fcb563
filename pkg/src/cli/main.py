"""
Command-Line Interface
======================

``evlens`` entry point with the train, fit, explain, bench and lab
subcommands. Results are printed to stdout, logs go to stderr. A failure
prints one line ``error: <ErrorClass>: <message>`` on stderr and exits with
status 1, or 2 when parameters are invalid.
"""

from typing import Any, Callable, Dict, List, NoReturn, Optional, Sequence, Tuple, TypeVar, cast
from dataclasses import dataclass
from functools import wraps
from pathlib import Path
import sys
import time

import click
import numpy as np
import orjson
from pydantic import BaseModel, ValidationError

from src import __version__
from src.cli.transforms import apply_transform, mean_pixel, read_input_image
from src.config.logging import get_logger, setup_logging
from src.config.settings import Settings, get_settings
from src.core.evidence.algorithms import explain as explain_image
from src.core.evidence.fillers import AnyModel
from src.core.evidence.maps import EvidenceError, EvidenceMap
from src.core.evidence.passes import count_batches
from src.core.lab.activations import activation_stats, write_activation_csvs
from src.core.lab.bounds import maxout_bound_check, random_branches, relu_bound_check
from src.core.lab.mean_comparison import am_vs_ngm, sample_fluctuation
from src.core.lab.reporting import LabError, error_histogram, write_csv, write_histogram_csv
from src.core.nn.architectures import make_rng, mnist_cnn
from src.core.nn.datasets import DatasetFormatError, TrainingError, load_mnist
from src.core.nn.layers import NetworkError
from src.core.nn.network import Network
from src.core.nn.training import train as train_network
from src.core.nn.weights_io import load_weights, save_weights
from src.core.patches.gaussian import (
    MarginalModel,
    PatchModel,
    PatchModelError,
    fit_marginal,
    fit_patch_model,
)
from src.core.patches.model_io import load_model, save_model
from src.core.rendering.heatmap import RenderError, grayscale_rgb, overlay, render_heatmap
from src.core.rendering.panels import compose_panel
from src.core.rendering.ppm import write_image
from src.models.schemas import (
    BenchRow,
    BoundCheck,
    ExplainConfig,
    ExplainReport,
    FitConfig,
    Method,
    RunConfig,
    Sampling,
    TrainConfig,
    Transform,
)

logger = get_logger(__name__)

F = TypeVar("F", bound=Callable[..., Any])

DOMAIN_ERRORS = (
    NetworkError,
    TrainingError,
    DatasetFormatError,
    PatchModelError,
    EvidenceError,
    LabError,
    RenderError,
    OSError,
    ValueError,
)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")

PATH = click.Path(path_type=Path)
SPLITS = click.Choice(["train", "test"])

BOUND_HEADER = (
    "name",
    "mus",
    "sigmas",
    "estimate",
    "std_error",
    "at_mean",
    "gap",
    "expected_gap",
    "lower",
    "upper",
    "samples",
    "passed",
)

BENCH_HEADER = (
    "method",
    "forward_passes",
    "backward_passes",
    "batches",
    "wall_clock_ms",
    "speedup",
)


@dataclass
class CliState:
    """Options shared by every subcommand."""

    settings: Settings
    threads: int
    seed: int


# Error reporting


def fail(error: Exception, code: int) -> NoReturn:
    """Print a single-line error and exit."""
    if isinstance(error, ValidationError):
        message = "; ".join(
            f"{'.'.join(str(part) for part in err['loc']) or 'config'}: {err['msg']}"
            for err in error.errors()
        )
    else:
        message = str(error)
    echo_error(type(error).__name__, message)
    logger.debug("Command failed", error_type=type(error).__name__, exit_code=code)
    click.get_current_context().exit(code)
    raise AssertionError("unreachable")  # pragma: no cover


def echo_error(kind: str, message: str) -> None:
    click.echo(f"error: {kind}: {' '.join(message.split())}", err=True)


class OneLineErrorGroup(click.Group):
    """Group that reports click usage errors in the same one-line form as library errors."""

    def main(self, *args: Any, standalone_mode: bool = True, **kwargs: Any) -> Any:
        if not standalone_mode:
            return super().main(*args, standalone_mode=False, **kwargs)
        try:
            # Exit (help, version, fail) comes back as its exit code
            rv = super().main(*args, standalone_mode=False, **kwargs)
        except click.ClickException as e:
            echo_error(type(e).__name__, e.format_message())
            sys.exit(e.exit_code)
        except click.Abort:
            echo_error("Abort", "aborted")
            sys.exit(1)
        sys.exit(rv if isinstance(rv, int) else 0)


def handle_errors(func: F) -> F:
    """Turn library errors into single-line messages and exit codes."""

    @wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except ValidationError as e:
            fail(e, 2)
        except DOMAIN_ERRORS as e:
            fail(e, 1)

    return cast(F, wrapper)


# Option helpers


def settings_option(*decls: str, setting: str, **kwargs: Any) -> Callable[[F], F]:
    """Option whose default comes from Settings (and so from EVLENS_* variables)."""
    field = Settings.model_fields[setting]
    return click.option(
        *decls,
        default=lambda: getattr(get_settings(), setting),
        show_default=f"EVLENS_{setting.upper()} or {field.default}",
        **kwargs,
    )


def parse_transform(ctx: click.Context, param: click.Parameter, value: str) -> Transform:
    try:
        return Transform.parse(value)
    except (ValueError, ValidationError) as e:
        raise click.BadParameter(" ".join(str(e).split())) from e


def parse_window(ctx: click.Context, param: click.Parameter, value: str) -> Tuple[int, int]:
    try:
        top, left = (int(part) for part in value.split(","))
    except ValueError as e:
        raise click.BadParameter(f"expected TOP,LEFT, got {value!r}") from e
    if top < 0 or left < 0:
        raise click.BadParameter(f"window corner must be non-negative, got {value!r}")
    return top, left


def parse_counts(ctx: click.Context, param: click.Parameter, value: str) -> List[int]:
    try:
        return [int(part) for part in value.split(",") if part.strip()]
    except ValueError as e:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}") from e


def _apply(options: Sequence[Callable[[F], F]], func: F) -> F:
    for option in reversed(options):
        func = option(func)
    return func


weights_option = click.option("--weights", type=PATH, required=True, help="Network weight file")
model_option = click.option(
    "--model", "model_path", type=PATH, required=True, help="Window model file"
)
data_dir_option = click.option(
    "--data-dir",
    type=PATH,
    default=None,
    show_default="EVLENS_DATA_DIR",
    help="MNIST IDX directory",
)
class_option = click.option(
    "--class", "class_index", type=int, default=None, show_default="predicted", help="Class"
)
window_option = click.option(
    "--window", default="12,12", callback=parse_window, help="Window corner TOP,LEFT"
)
out_dir_option = click.option(
    "--out-dir", type=PATH, default=None, show_default="EVLENS_OUTPUT_DIR", help="Output directory"
)


def out_option(name: str, help_text: str) -> Callable[[F], F]:
    return click.option(
        "--out", type=PATH, default=None, show_default=f"<output_dir>/{name}", help=help_text
    )


def image_options(func: F) -> F:
    """--image / --dataset input selection plus --transform."""
    return _apply(
        [
            click.option("--image", type=PATH, default=None, help="Image file (PNG, PPM, PGM)"),
            click.option(
                "--dataset", "dataset_dir", type=PATH, default=None, help="MNIST IDX directory"
            ),
            click.option("--index", type=click.IntRange(min=0), default=0, help="Dataset entry"),
            click.option("--split", type=SPLITS, default="test", help="Dataset split"),
            click.option(
                "--transform",
                default="none",
                callback=parse_transform,
                help="none, rot90, rot180, rot270, fliph or crop(x,y,w,h)",
            ),
        ],
        func,
    )


def geometry_options(func: F) -> F:
    """-k / -l window geometry."""
    return _apply(
        [
            settings_option(
                "-k",
                "--window-size",
                "k",
                setting="window_size",
                type=click.IntRange(min=1),
                help="Inner window side",
            ),
            settings_option(
                "-l",
                "--outer-size",
                "l",
                setting="outer_size",
                type=click.IntRange(min=1),
                help="Outer patch side",
            ),
        ],
        func,
    )


def window_options(func: F) -> F:
    """Explanation parameters shared by explain and bench."""
    return _apply(
        [
            geometry_options,
            settings_option(
                "--samples",
                setting="samples",
                type=click.IntRange(min=1),
                help="Samples per window (S)",
            ),
            settings_option(
                "--batch-size",
                setting="batch_size",
                type=click.IntRange(min=1),
                help="Forward batch size (m)",
            ),
            settings_option("--eps", setting="eps", type=float, help="Probability clamp"),
        ],
        func,
    )


# Loading


def sampling_for(model: Optional[AnyModel]) -> Sampling:
    return Sampling.CONDITIONAL if isinstance(model, PatchModel) else Sampling.MARGINAL


def load_image(
    net: Network,
    model: Optional[AnyModel],
    image: Optional[Path],
    dataset_dir: Optional[Path],
    index: int,
    split: str,
    transform: Transform,
) -> np.ndarray:
    """Explanation input as (C, H, W), transformed.

    Crops are padded with the dataset mean pixel, or the window model's mean
    for image files.
    """
    if (image is None) == (dataset_dir is None):
        raise click.UsageError("give exactly one of --image or --dataset")
    if image is not None:
        x = read_input_image(image, net.input_shape[0])
        fill = 0.0
        if isinstance(model, (PatchModel, MarginalModel)):
            fill = float(np.mean(model.mean))
    else:
        assert dataset_dir is not None
        data = load_mnist(dataset_dir, split)
        if index >= len(data):
            raise click.UsageError(f"--index {index} out of range for {len(data)} images")
        x = data.images[index]
        fill = mean_pixel(data.images)
    return apply_transform(x, transform, fill)


def load_run(
    subcommand: str,
    weights: Path,
    model_path: Optional[Path],
    image: Optional[Path] = None,
    dataset_dir: Optional[Path] = None,
    output_dir: Optional[Path] = None,
) -> Tuple[RunConfig, Network, Optional[AnyModel]]:
    """Validate input paths, then load the network and window model."""
    run = RunConfig(
        subcommand=subcommand,
        weights=weights,
        patch_model=model_path,
        image=image,
        dataset=dataset_dir,
        output_dir=output_dir or get_settings().output_dir,
    )
    net = load_weights(weights)
    model = load_model(model_path) if model_path is not None else None
    return run, net, model


def require_data_dir(data_dir: Optional[Path]) -> Path:
    resolved = data_dir or get_settings().data_dir
    if resolved is None:
        raise click.UsageError("--data-dir or EVLENS_DATA_DIR is required")
    return resolved


def write_report(path: Path, report: BaseModel) -> Path:
    payload = orjson.dumps(
        report.model_dump(mode="json"), option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS
    )
    path.write_bytes(payload + b"\n")
    return path


def _elapsed_ms(started: float) -> float:
    return round(1000.0 * (time.perf_counter() - started), 3)


def _output(state: CliState, out: Optional[Path], name: str) -> Path:
    return out if out is not None else state.settings.output_dir / name


# Commands


@click.group(
    cls=OneLineErrorGroup,
    context_settings={"help_option_names": ["-h", "--help"], "show_default": True},
)
@click.version_option(__version__, prog_name="evlens")
@click.option(
    "--log-level",
    type=click.Choice(LOG_LEVELS, case_sensitive=False),
    default=None,
    show_default="EVLENS_LOG_LEVEL or INFO",
    help="Logging level",
)
@click.option(
    "--threads",
    type=click.IntRange(min=1),
    default=None,
    show_default="EVLENS_THREADS or 1",
    help="Workers for window-parallel methods",
)
@click.option(
    "--seed",
    type=click.IntRange(min=0),
    default=None,
    show_default="EVLENS_SEED or 0",
    help="Base seed for every random stream",
)
@click.pass_context
def cli(
    ctx: click.Context, log_level: Optional[str], threads: Optional[int], seed: Optional[int]
) -> None:
    """Explain CNN classifier decisions by marginalizing image windows."""
    settings = get_settings()
    setup_logging(log_level)
    ctx.obj = CliState(
        settings=settings,
        threads=threads or settings.threads,
        seed=settings.seed if seed is None else seed,
    )


@cli.command()
@data_dir_option
@out_option("mnist.evln", "Weight file")
@settings_option("--epochs", setting="epochs", type=click.IntRange(min=0), help="Training epochs")
@settings_option(
    "--lr",
    "learning_rate",
    setting="learning_rate",
    type=click.FloatRange(min=0.0),
    help="SGD learning rate",
)
@settings_option(
    "--batch-size", setting="train_batch_size", type=click.IntRange(min=1), help="Minibatch size"
)
@click.option("--limit", type=click.IntRange(min=0), default=None, help="First N training images")
@click.option("--test-limit", type=click.IntRange(min=0), default=None, help="First N test images")
@click.pass_obj
@handle_errors
def train(
    state: CliState,
    data_dir: Optional[Path],
    out: Optional[Path],
    epochs: int,
    learning_rate: float,
    batch_size: int,
    limit: Optional[int],
    test_limit: Optional[int],
) -> None:
    """Train the MNIST network and write its weights."""
    data_dir = require_data_dir(data_dir)
    config = TrainConfig(
        epochs=epochs, learning_rate=learning_rate, batch_size=batch_size, seed=state.seed
    )
    train_set = load_mnist(data_dir, "train", limit)
    test_set = load_mnist(data_dir, "test", test_limit)
    net = mnist_cnn(state.seed, state.settings, input_shape=train_set.images.shape[1:])
    trained, report = train_network(net, train_set, config, test_set if len(test_set) else None)

    out = _output(state, out, "mnist.evln")
    out.parent.mkdir(parents=True, exist_ok=True)
    save_weights(trained, out)
    write_report(out.with_suffix(".json"), report)
    click.echo(f"train accuracy: {report.train_accuracy:.4f}")
    if report.test_accuracy is not None:
        click.echo(f"test accuracy: {report.test_accuracy:.4f}")
    click.echo(f"weights: {out}")


@cli.command()
@data_dir_option
@click.option("--split", type=SPLITS, default="train", help="Dataset split")
@click.option("--limit", type=click.IntRange(min=0), default=None, help="First N images")
@geometry_options
@click.option(
    "--sampling",
    type=click.Choice([s.value for s in Sampling]),
    default=Sampling.MARGINAL.value,
    help="Model kind to fit",
)
@click.option(
    "--ridge",
    type=click.FloatRange(min=0.0),
    default=None,
    show_default="scaled",
    help="Absolute ridge",
)
@settings_option(
    "--ridge-scale",
    setting="ridge_scale",
    type=click.FloatRange(min=0.0),
    help="Ridge as a fraction of the mean covariance diagonal",
)
@out_option("<sampling>-k<k>.evgm", "Model file")
@click.pass_obj
@handle_errors
def fit(
    state: CliState,
    data_dir: Optional[Path],
    split: str,
    limit: Optional[int],
    k: int,
    l: int,  # noqa: E741
    sampling: str,
    ridge: Optional[float],
    ridge_scale: float,
    out: Optional[Path],
) -> None:
    """Fit a conditional or marginal window model from a dataset."""
    config = FitConfig(k=k, l=l, ridge=ridge, ridge_scale=ridge_scale, sampling=Sampling(sampling))
    images = load_mnist(require_data_dir(data_dir), split, limit).images

    model: AnyModel
    if config.sampling == Sampling.CONDITIONAL:
        model = fit_patch_model(images, config.k, config.l, config.ridge, config.ridge_scale)
        low, high = model.eigenvalue_range()
        summary = [
            "kind: conditional",
            f"k: {model.k}",
            f"l: {model.l}",
            f"ridge: {model.ridge:.6g}",
            f"eigenvalues: [{low:.6g}, {high:.6g}]",
            "cholesky: ok",
        ]
    else:
        model = fit_marginal(images, config.k)
        variance = model.variance
        summary = [
            "kind: marginal",
            f"k: {model.k}",
            f"variance: [{float(variance.min()):.6g}, {float(variance.max()):.6g}]",
        ]

    out = _output(state, out, f"{config.sampling.value}-k{config.k}.evgm")
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    for line in summary:
        click.echo(line)
    click.echo(f"model: {out}")


def write_explanation(
    evidence: EvidenceMap, x: np.ndarray, out: Path, alpha: float, panel: Optional[Path]
) -> Dict[str, str]:
    heat = render_heatmap(evidence)
    blended = overlay(evidence, x, alpha)
    outputs = {
        "evidence": out / "evidence.txt",
        "heatmap": out / "heatmap.ppm",
        "overlay": out / "overlay.ppm",
    }
    evidence.save_text(outputs["evidence"])
    write_image(heat, outputs["heatmap"])
    write_image(blended, outputs["overlay"])
    if panel is not None:
        compose_panel([[grayscale_rgb(x), heat, blended]], panel)
        outputs["panel"] = panel
    return {name: str(path) for name, path in outputs.items()}


@cli.command()
@weights_option
@click.option(
    "--model",
    "model_path",
    type=PATH,
    default=None,
    help="Window model file (not needed for saliency)",
)
@image_options
@class_option
@click.option(
    "--method",
    type=click.Choice([m.value for m in Method]),
    default=Method.EFFICIENT.value,
    help="Attribution method",
)
@window_options
@out_dir_option
@click.option("--panel", type=PATH, default=None, help="Also write an input|heatmap|overlay panel")
@click.option("--alpha", type=click.FloatRange(0.0, 1.0), default=0.5, help="Overlay opacity")
@click.pass_obj
@handle_errors
def explain(
    state: CliState,
    weights: Path,
    model_path: Optional[Path],
    image: Optional[Path],
    dataset_dir: Optional[Path],
    index: int,
    split: str,
    transform: Transform,
    class_index: Optional[int],
    method: str,
    k: int,
    l: int,  # noqa: E741
    samples: int,
    batch_size: int,
    eps: float,
    out_dir: Optional[Path],
    panel: Optional[Path],
    alpha: float,
) -> None:
    """Explain one image and write the evidence grid, heatmap and overlay."""
    run, net, model = load_run("explain", weights, model_path, image, dataset_dir, out_dir)
    config = ExplainConfig(
        k=k,
        l=l,
        samples=samples,
        batch_size=batch_size,
        seed=state.seed,
        eps=eps,
        method=Method(method),
        sampling=sampling_for(model),
        threads=state.threads,
    )
    run = run.model_copy(update={"explain": config, "transform": transform})
    out = run.prepare_output()
    x = load_image(net, model, image, dataset_dir, index, split, transform)
    predicted, probs = net.predict(x)
    c = predicted if class_index is None else class_index
    if not 0 <= c < net.class_count:
        raise EvidenceError(f"class index {c} out of range [0, {net.class_count})")

    started = time.perf_counter()
    evidence = explain_image(net, x, c, model, config)
    elapsed = _elapsed_ms(started)

    report = ExplainReport(
        method=config.method,
        class_index=c,
        predicted_class=predicted,
        probability=float(probs[c]),
        forward_passes=evidence.forward_passes,
        backward_passes=evidence.backward_passes,
        wall_clock_ms=elapsed,
        outputs=write_explanation(evidence, x, out, alpha, panel),
    )
    write_report(out / "report.json", report)
    click.echo(f"predicted class: {predicted}")
    click.echo(f"P(c={c}|x): {report.probability:.6f}")
    click.echo(f"forward passes: {report.forward_passes}")
    click.echo(f"backward passes: {report.backward_passes}")
    click.echo(f"wall clock: {elapsed:.3f} ms")


@cli.command()
@weights_option
@model_option
@image_options
@class_option
@window_options
@click.option(
    "--methods", default="original,efficient,gradient", help="Comma-separated methods to time"
)
@out_option("bench.csv", "Timing table")
@click.pass_obj
@handle_errors
def bench(
    state: CliState,
    weights: Path,
    model_path: Path,
    image: Optional[Path],
    dataset_dir: Optional[Path],
    index: int,
    split: str,
    transform: Transform,
    class_index: Optional[int],
    k: int,
    l: int,  # noqa: E741
    samples: int,
    batch_size: int,
    eps: float,
    methods: str,
    out: Optional[Path],
) -> None:
    """Time the attribution methods on one image.

    Speedup is relative to the original method when it is selected, else to
    the first method listed.
    """
    try:
        selected = [Method(name.strip()) for name in methods.split(",") if name.strip()]
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint="--methods") from e
    if not selected:
        raise click.BadParameter("no methods selected", param_hint="--methods")
    _, net, model = load_run("bench", weights, model_path, image, dataset_dir)
    base = ExplainConfig(
        k=k,
        l=l,
        samples=samples,
        batch_size=batch_size,
        seed=state.seed,
        eps=eps,
        sampling=sampling_for(model),
        threads=state.threads,
    )
    x = load_image(net, model, image, dataset_dir, index, split, transform)
    c = net.predict(x)[0] if class_index is None else class_index

    timings: List[Tuple[Method, EvidenceMap, float]] = []
    for method in selected:
        config = base.model_copy(update={"method": method})
        started = time.perf_counter()
        evidence = explain_image(net, x, c, model, config)
        timings.append((method, evidence, _elapsed_ms(started)))
        logger.info("Benchmarked", method=method.value, elapsed_ms=timings[-1][2])

    reference = next((ms for m, _, ms in timings if m == Method.ORIGINAL), timings[0][2])
    rows = [
        BenchRow(
            method=method,
            forward_passes=evidence.forward_passes,
            backward_passes=evidence.backward_passes,
            batches=count_batches(evidence.forward_passes, batch_size),
            wall_clock_ms=ms,
            speedup=reference / ms if ms > 0 else 0.0,
        )
        for method, evidence, ms in timings
    ]
    table = [
        (r.method.value, r.forward_passes, r.backward_passes, r.batches, r.wall_clock_ms, r.speedup)
        for r in rows
    ]
    out = write_csv(_output(state, out, "bench.csv"), BENCH_HEADER, table, state.seed)
    click.echo(
        f"{'method':<14}{'forward':>10}{'backward':>10}{'batches':>9}"
        f"{'ms':>12}{'speedup':>9}"
    )
    for r in rows:
        click.echo(
            f"{r.method.value:<14}{r.forward_passes:>10}{r.backward_passes:>10}{r.batches:>9}"
            f"{r.wall_clock_ms:>12.3f}{r.speedup:>9.2f}"
        )
    click.echo(f"table: {out}")


# Labs


def bound_row(check: BoundCheck) -> Tuple[Any, ...]:
    return (
        check.name,
        ";".join(format(m, ".17g") for m in check.mus),
        ";".join(format(s, ".17g") for s in check.sigmas),
        check.estimate,
        check.std_error,
        check.at_mean,
        check.gap,
        check.expected_gap if check.expected_gap is not None else "",
        check.lower,
        check.upper,
        check.samples,
        check.passed,
    )


@cli.group()
def lab() -> None:
    """Numerical checks of the mean approximation."""


@lab.command("am-vs-ngm")
@weights_option
@model_option
@data_dir_option
@click.option("--split", type=SPLITS, default="test", help="Dataset split")
@click.option("--count", type=click.IntRange(min=0), default=200, help="Number of images")
@window_option
@click.option("--samples", type=click.IntRange(min=1), default=500, help="Samples per AM estimate")
@out_option("am_vs_ngm.csv", "Case table")
@click.option(
    "--histogram",
    type=PATH,
    default=None,
    show_default="<output_dir>/am_vs_ngm_hist.csv",
    help="Error histogram",
)
@click.pass_obj
@handle_errors
def am_vs_ngm_command(
    state: CliState,
    weights: Path,
    model_path: Path,
    data_dir: Optional[Path],
    split: str,
    count: int,
    window: Tuple[int, int],
    samples: int,
    out: Optional[Path],
    histogram: Optional[Path],
) -> None:
    """Arithmetic vs normalized geometric mean over dataset images."""
    data_dir = require_data_dir(data_dir)
    _, net, model = load_run("lab am-vs-ngm", weights, model_path, dataset_dir=data_dir)
    assert model is not None
    images = load_mnist(data_dir, split, count).images
    cases = am_vs_ngm(net, list(images), model, window, samples, seed=state.seed)

    errors = [m.error for m in cases]
    out = write_csv(
        _output(state, out, "am_vs_ngm.csv"),
        ("case", "am", "ngm", "error", "std_error", "samples"),
        [(m.case, m.am, m.ngm, m.error, m.std_error, m.samples) for m in cases],
        state.seed,
    )
    counts, edges = error_histogram(errors)
    hist = write_histogram_csv(
        _output(state, histogram, "am_vs_ngm_hist.csv"), counts, edges, state.seed
    )
    click.echo(f"cases: {len(cases)}")
    click.echo(f"mean error: {float(np.mean(errors)):.6g}")
    click.echo(f"lowest bin: {int(counts[0])} of {len(cases)}")
    click.echo(f"table: {out}")
    click.echo(f"histogram: {hist}")


@lab.command("relu-bound")
@click.option("--mu", type=float, default=0.0, help="Input mean")
@click.option("--sigma", type=float, default=1.0, help="Input standard deviation")
@click.option("--samples", type=click.IntRange(min=2), default=1_000_000, help="Monte-Carlo draws")
@out_option("relu_bound.csv", "Result table")
@click.pass_obj
@handle_errors
def relu_bound_command(
    state: CliState, mu: float, sigma: float, samples: int, out: Optional[Path]
) -> None:
    """Monte-Carlo check of the ReLU mean-approximation gap."""
    check = relu_bound_check(mu, sigma, samples, state.seed)
    out = write_csv(
        _output(state, out, "relu_bound.csv"), BOUND_HEADER, [bound_row(check)], state.seed
    )
    click.echo(f"E[relu(x)]: {check.estimate:.6f} +- {check.std_error:.2g}")
    click.echo(f"gap: {check.gap:.6f} (closed form {check.expected_gap:.6f})")
    click.echo(f"passed: {str(check.passed).lower()}")
    click.echo(f"table: {out}")


@lab.command("maxout-bound")
@click.option("--branches", type=click.IntRange(min=0), default=4, help="Branches per unit (k)")
@click.option("--dim", type=click.IntRange(min=1), default=8, help="Input dimension")
@click.option("--sets", type=click.IntRange(min=1), default=50, help="Random branch sets")
@click.option("--input-std", type=click.FloatRange(min=0.0), default=0.1, help="Input std")
@click.option("--weight-scale", type=click.FloatRange(min=0.0), default=1.0, help="Weight scale")
@click.option("--samples", type=click.IntRange(min=2), default=100_000, help="Draws per set")
@out_option("maxout_bound.csv", "Result table")
@click.pass_obj
@handle_errors
def maxout_bound_command(
    state: CliState,
    branches: int,
    dim: int,
    sets: int,
    input_std: float,
    weight_scale: float,
    samples: int,
    out: Optional[Path],
) -> None:
    """Monte-Carlo check of the maxout expectation bounds on random branch sets.

    Set i draws its branches, input mean and samples from ``seed + i``.
    """
    if branches == 0:
        raise LabError("maxout needs at least one branch (k = 0)")
    checks = []
    for i in range(sets):
        rng = make_rng(state.seed + i)
        branch_set = random_branches(rng, branches, dim, weight_scale)
        input_mean = rng.standard_normal(dim)
        std = np.full(dim, input_std)
        checks.append(maxout_bound_check(branch_set, input_mean, std, samples, state.seed + i))
    out = write_csv(
        _output(state, out, "maxout_bound.csv"),
        BOUND_HEADER,
        [bound_row(check) for check in checks],
        state.seed,
    )
    click.echo(f"sets passed: {sum(check.passed for check in checks)} of {len(checks)}")
    click.echo(f"largest gap: {max(check.gap for check in checks):.6g}")
    click.echo(f"table: {out}")


@lab.command("activation-stats")
@weights_option
@model_option
@image_options
@window_option
@click.option("--samples", type=click.IntRange(min=1), default=160, help="Sampled fills")
@out_dir_option
@click.pass_obj
@handle_errors
def activation_stats_command(
    state: CliState,
    weights: Path,
    model_path: Path,
    image: Optional[Path],
    dataset_dir: Optional[Path],
    index: int,
    split: str,
    transform: Transform,
    window: Tuple[int, int],
    samples: int,
    out_dir: Optional[Path],
) -> None:
    """Dense-layer activation statistics under sampled window fills."""
    run, net, model = load_run(
        "lab activation-stats", weights, model_path, image, dataset_dir, out_dir
    )
    assert model is not None
    x = load_image(net, model, image, dataset_dir, index, split, transform)
    stats = activation_stats(net, x, model, window, samples, state.seed)
    paths = write_activation_csvs(stats, run.prepare_output(), state.seed)
    for s in stats:
        click.echo(
            f"layer {s.layer}: {s.neurons} neurons, mean {float(np.mean(s.mean)):.6g}, "
            f"std {float(np.mean(s.std)):.6g}"
        )
    click.echo(f"tables: {len(paths)} files in {run.output_dir}")


@lab.command("fluctuation")
@weights_option
@model_option
@image_options
@class_option
@window_option
@click.option(
    "--samples-list", default="1,10,100,1000", callback=parse_counts, help="Ascending sample counts"
)
@click.option("--repeats", type=click.IntRange(min=1), default=10, help="Seeds per sample count")
@out_option("fluctuation.csv", "Curve table")
@click.pass_obj
@handle_errors
def fluctuation_command(
    state: CliState,
    weights: Path,
    model_path: Path,
    image: Optional[Path],
    dataset_dir: Optional[Path],
    index: int,
    split: str,
    transform: Transform,
    class_index: Optional[int],
    window: Tuple[int, int],
    samples_list: List[int],
    repeats: int,
    out: Optional[Path],
) -> None:
    """|AM_S - NGM| and its spread across seeds as S grows."""
    _, net, model = load_run("lab fluctuation", weights, model_path, image, dataset_dir)
    assert model is not None
    x = load_image(net, model, image, dataset_dir, index, split, transform)
    c = net.predict(x)[0] if class_index is None else class_index
    curve = sample_fluctuation(net, x, c, model, window, samples_list, repeats, state.seed)
    out = write_csv(
        _output(state, out, "fluctuation.csv"),
        ("samples", "mean_abs_diff", "std_across_seeds", "ngm"),
        [(p.samples, p.mean_abs_diff, p.std_across_seeds, p.ngm) for p in curve],
        state.seed,
    )
    for p in curve:
        click.echo(f"S={p.samples}: |AM-NGM| {p.mean_abs_diff:.6g}, std {p.std_across_seeds:.6g}")
    click.echo(f"table: {out}")


def main() -> None:
    cli(prog_name="evlens")


if __name__ == "__main__":
    main()
