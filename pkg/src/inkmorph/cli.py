"""Command-line surface: every library capability as a subcommand.

JSON goes to stdout, images and figures to files, diagnostics to stderr.
Every run materializes its full configuration into a manifest (embedded in
the stdout JSON for print-only commands, written as a file next to file
outputs), so any run can be reproduced bit-for-bit from manifest + inputs.
Exit codes: 0 success, 1 validation failure, 2 I/O failure, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .diffusion import forward_sample, linear_schedule, sample, zero_denoiser
from .dis_loss import DisWeights, dis_loss
from .glyph_synth import GlyphSpec, synth_glyph
from .metrics import evaluate
from .optimize import NumericalError, OptimizeConfig, gradient_check, run_descent
from .pgm import PgmError, load_pgm, save_pgm
from .rng import RandomStream
from .soft_morph import MorphConfig, hard_morph, soft_dilation, soft_erosion
from .staf import StafParams, composite_weight, fuse, layer_factor, spatial_attention, time_factor
from .image_core import sobel_magnitude

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2
EXIT_NUMERIC = 3


class _CliParser(argparse.ArgumentParser):
    """Single-line diagnostics on stderr, validation exit code."""

    def error(self, message):
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


class _Outputs:
    """Registry of files written by the current run, removed on failure."""

    def __init__(self):
        self.paths: list[Path] = []

    def register(self, path) -> Path:
        p = Path(path)
        self.paths.append(p)
        return p

    def cleanup(self) -> None:
        for p in self.paths:
            try:
                p.unlink()
            except OSError:
                pass


def _manifest(command: str, config: dict, inputs: dict, outputs: dict) -> dict:
    return {
        "tool": "inkmorph",
        "version": __version__,
        "command": command,
        "config": config,
        "inputs": inputs,
        "outputs": outputs,
    }


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n")


def _print_json(doc: dict) -> None:
    print(json.dumps(doc, indent=2))


def _save_image(outputs: _Outputs, path, image, invert: bool) -> str:
    p = outputs.register(path)
    save_pgm(p, image, invert=invert)
    return str(p)


def _ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


# ---------------------------------------------------------------- morph


def _cmd_morph(args, outputs: _Outputs) -> int:
    cfg = MorphConfig(tau=args.tau, radius=args.radius)  # validates both flags for every op
    image = load_pgm(args.input, invert=args.invert)
    if args.op in ("erode", "dilate"):
        result = soft_erosion(image, cfg) if args.op == "erode" else soft_dilation(image, cfg)
    else:
        mode = "erode" if args.op == "hard-erode" else "dilate"
        result = hard_morph(image, cfg.radius, mode)

    out = _save_image(outputs, args.output, result, args.invert)
    config = {"op": args.op, "tau": args.tau, "radius": args.radius, "invert": args.invert}
    manifest = _manifest("morph", config, {"input": args.input}, {"image": out})
    _write_json(outputs.register(Path(args.output).with_suffix(".manifest.json")), manifest)
    return EXIT_OK


# ---------------------------------------------------------------- dis-loss


def _weights_from_args(args) -> DisWeights:
    return DisWeights(
        lambda_c=args.lambda_c,
        lambda_b=args.lambda_b,
        lambda_lap=args.lambda_lap,
        morph=MorphConfig(tau=args.tau, radius=args.radius),
        mask_radius=args.mask_radius,
    )


def _weights_dict(w: DisWeights) -> dict:
    return {
        "lambda_c": w.lambda_c,
        "lambda_b": w.lambda_b,
        "lambda_lap": w.lambda_lap,
        "tau": w.morph.tau,
        "radius": w.morph.radius,
        "mask_radius": w.effective_mask_radius,
    }


def _cmd_dis_loss(args, outputs: _Outputs) -> int:
    generated = load_pgm(args.generated, invert=args.invert)
    target = load_pgm(args.target, invert=args.invert)
    w = _weights_from_args(args)
    breakdown = dis_loss(generated, target, w)

    doc = breakdown.to_dict()
    doc["weights"] = _weights_dict(w)
    doc["manifest"] = _manifest(
        "dis-loss",
        {**_weights_dict(w), "invert": args.invert},
        {"generated": args.generated, "target": args.target},
        {},
    )
    _print_json(doc)
    return EXIT_OK


# ---------------------------------------------------------------- gradcheck


def _cmd_gradcheck(args, outputs: _Outputs) -> int:
    result = gradient_check(seed=args.seed, size=args.size, probes=args.probes, h=args.h)
    passed = result["max_rel_error"] <= args.tol
    config = {"seed": args.seed, "size": args.size, "probes": args.probes, "h": args.h, "tol": args.tol}

    out_files: dict = {}
    if args.out_dir is not None:
        out_dir = _ensure_dir(args.out_dir)
        csv_path = outputs.register(out_dir / "gradcheck.csv")
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["function", "max_rel_error", "probes"])
            for name, err in result["per_function"].items():
                writer.writerow([name, repr(err), result["probes"][name]])
        from .report import save_gradcheck_scatter

        fig_path = outputs.register(out_dir / "gradcheck.png")
        save_gradcheck_scatter(result["per_function"], args.tol, fig_path)
        out_files = {"csv": str(csv_path), "figure": str(fig_path)}
        manifest = _manifest("gradcheck", config, {}, out_files)
        _write_json(outputs.register(out_dir / "manifest.json"), manifest)

    doc = {
        "max_rel_error": result["max_rel_error"],
        "per_function": result["per_function"],
        "probes": result["probes"],
        "tolerance": args.tol,
        "passed": passed,
        "manifest": _manifest("gradcheck", config, {}, out_files),
    }
    _print_json(doc)
    return EXIT_OK if passed else EXIT_INVALID


# ---------------------------------------------------------------- optimize


def _cmd_optimize(args, outputs: _Outputs) -> int:
    target = load_pgm(args.target, invert=args.invert)
    stream = RandomStream(args.seed)
    init = target + stream.uniform_field(*target.shape, amplitude=args.noise_amplitude)

    cfg = OptimizeConfig(
        steps=args.steps,
        learning_rate=args.lr,
        lambda_dis=args.lambda_dis,
        dis_weights=_weights_from_args(args),
        seed=args.seed,
        log_every=args.log_every,
    )
    trace = run_descent(init, target, cfg)

    out_dir = _ensure_dir(args.out_dir)
    trace_path = outputs.register(out_dir / "trace.jsonl")
    with open(trace_path, "w") as fh:
        for record in trace.records:
            fh.write(json.dumps(record.to_dict()) + "\n")
    init_path = _save_image(outputs, out_dir / "init.pgm", init, args.invert)
    final_path = _save_image(outputs, out_dir / "final.pgm", trace.final_image, args.invert)

    from .report import save_descent_panels, save_loss_curves

    curve_path = outputs.register(out_dir / "loss_curve.png")
    save_loss_curves(trace.records, curve_path)
    panels_path = outputs.register(out_dir / "descent_panels.png")
    save_descent_panels(target, init, trace.final_image, panels_path)

    config = {
        "steps": args.steps,
        "lr": args.lr,
        "lambda_dis": args.lambda_dis,
        "seed": args.seed,
        "log_every": args.log_every,
        "noise_amplitude": args.noise_amplitude,
        "invert": args.invert,
        **_weights_dict(cfg.dis_weights),
    }
    out_files = {
        "trace": str(trace_path),
        "init": init_path,
        "final": final_path,
        "loss_curve": str(curve_path),
        "panels": str(panels_path),
    }
    manifest = _manifest("optimize", config, {"target": args.target}, out_files)
    _write_json(outputs.register(out_dir / "manifest.json"), manifest)

    first, last = trace.records[0], trace.records[-1]
    _print_json(
        {
            "initial_total": first.total,
            "final_total": last.total,
            "reduction": last.total / first.total if first.total > 0 else 0.0,
            "steps": args.steps,
            "outputs": out_files,
        }
    )
    return EXIT_OK


# ---------------------------------------------------------------- diffuse


def _schedule_config(args) -> dict:
    return {"T": args.total_timesteps, "beta_start": args.beta_start, "beta_end": args.beta_end}


def _cmd_diffuse_forward(args, outputs: _Outputs) -> int:
    image = load_pgm(args.input, invert=args.invert)
    schedule = linear_schedule(args.total_timesteps, args.beta_start, args.beta_end)
    eps = RandomStream(args.seed).gaussian_field(*image.shape)
    x_t = forward_sample(image, args.t, eps, schedule)

    out = _save_image(outputs, args.output, x_t, args.invert)
    config = {**_schedule_config(args), "t": args.t, "seed": args.seed, "invert": args.invert}
    manifest = _manifest("diffuse-forward", config, {"input": args.input}, {"image": out})
    _write_json(outputs.register(Path(args.output).with_suffix(".manifest.json")), manifest)
    return EXIT_OK


def _cmd_diffuse_sample(args, outputs: _Outputs) -> int:
    schedule = linear_schedule(args.total_timesteps, args.beta_start, args.beta_end)
    out_dir = _ensure_dir(args.out_dir)
    dumps: list[str] = []

    def on_step(t: int, x: np.ndarray) -> None:
        if args.dump_every > 0 and (t - 1) % args.dump_every == 0 and t > 1:
            dumps.append(_save_image(outputs, out_dir / f"x_{t - 1:05d}.pgm", x, args.invert))

    result = sample(
        zero_denoiser,
        None,
        (args.size, args.size),
        schedule,
        seed=args.seed,
        sigma_mode=args.sigma,
        on_step=on_step,
    )
    final_path = _save_image(outputs, out_dir / "sample.pgm", result, args.invert)

    config = {
        **_schedule_config(args),
        "size": args.size,
        "seed": args.seed,
        "sigma": args.sigma,
        "dump_every": args.dump_every,
        "denoiser": "zero",
        "invert": args.invert,
    }
    manifest = _manifest("diffuse-sample", config, {}, {"sample": final_path, "dumps": dumps})
    _write_json(outputs.register(out_dir / "manifest.json"), manifest)
    _print_json({"sample": final_path, "dumps": dumps})
    return EXIT_OK


# ---------------------------------------------------------------- staf-demo


def _cmd_staf_demo(args, outputs: _Outputs) -> int:
    content = load_pgm(args.content, invert=args.invert)
    if args.params is not None:
        params = StafParams.from_json(Path(args.params).read_text())
    else:
        params = StafParams()
    overrides = {}
    if args.alpha_global is not None:
        overrides["alpha_global"] = args.alpha_global
    if args.alpha_base is not None:
        overrides["alpha_base"] = args.alpha_base
    params = dataclasses.replace(params, total_timesteps=args.total_timesteps, **overrides)

    f_c = content[None, :, :]
    f_hf = sobel_magnitude(content)[None, :, :]
    fused = fuse(f_c, f_hf, params, args.layer, args.t)
    attention = spatial_attention(f_hf, params, content.shape[0], content.shape[1])

    out_dir = _ensure_dir(args.out_dir)
    fused_path = _save_image(outputs, out_dir / "fused.pgm", fused[0], args.invert)
    # attention lives in (0, 1); remap to the ink-signed range for PGM output
    attn_path = _save_image(outputs, out_dir / "attention.pgm", 2.0 * attention[0] - 1.0, args.invert)

    config = {
        "layer": args.layer,
        "t": args.t,
        "T": args.total_timesteps,
        "invert": args.invert,
        "params": json.loads(params.to_json()),
    }
    out_files = {"fused": fused_path, "attention": attn_path}
    manifest = _manifest("staf-demo", config, {"content": args.content, "params": args.params}, out_files)
    _write_json(outputs.register(out_dir / "manifest.json"), manifest)

    _print_json(
        {
            "composite_weight": composite_weight(params, args.layer, args.t),
            "layer_factor": layer_factor(args.layer, params.gamma_layer),
            "time_factor": time_factor(args.t, params.total_timesteps, params.gamma_time),
            "alpha_global": params.alpha_global,
            "outputs": out_files,
        }
    )
    return EXIT_OK


# ---------------------------------------------------------------- metrics


def _metric_row(report) -> dict:
    return report.to_json_dict()


def _ssim_kwargs(args) -> dict:
    return {
        "ssim_window": args.ssim_window,
        "ssim_sigma": args.ssim_sigma,
        "ssim_k1": args.ssim_k1,
        "ssim_k2": args.ssim_k2,
    }


def _cmd_metrics(args, outputs: _Outputs) -> int:
    ssim_kw = _ssim_kwargs(args)
    if args.pairs_dir is None:
        if args.a is None or args.b is None:
            raise ValueError("metrics needs either --a and --b, or --pairs-dir")
        report = evaluate(load_pgm(args.a, invert=args.invert), load_pgm(args.b, invert=args.invert), **ssim_kw)
        doc = _metric_row(report)
        doc["manifest"] = _manifest(
            "metrics", {"invert": args.invert, **ssim_kw}, {"a": args.a, "b": args.b}, {}
        )
        _print_json(doc)
        return EXIT_OK

    pairs_dir = Path(args.pairs_dir)
    names = sorted(p.name[: -len("_a.pgm")] for p in pairs_dir.glob("*_a.pgm"))
    if not names:
        raise ValueError(f"no '<name>_a.pgm' files found in {pairs_dir}")
    rows = []
    reports = []
    for name in names:
        a = load_pgm(pairs_dir / f"{name}_a.pgm", invert=args.invert)
        b = load_pgm(pairs_dir / f"{name}_b.pgm", invert=args.invert)
        report = evaluate(a, b, **ssim_kw)
        reports.append(report)
        row = _metric_row(report)
        rows.append([name, row["ssim"], row["l1"], row["rmse"], row["psnr"]])

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["pair", "ssim", "l1", "rmse", "psnr"])
    writer.writerows(rows)
    csv_text = buffer.getvalue()

    config = {"pairs_dir": args.pairs_dir, "invert": args.invert, **ssim_kw}
    out_files: dict = {}
    if args.out_dir is not None:
        out_dir = _ensure_dir(args.out_dir)
        csv_path = outputs.register(out_dir / "metrics.csv")
        csv_path.write_text(csv_text)
        from .report import save_metric_chart

        fig_path = outputs.register(out_dir / "metrics.png")
        save_metric_chart(names, reports, fig_path)
        out_files = {"csv": str(csv_path), "figure": str(fig_path)}
        manifest = _manifest("metrics", config, {"pairs": names}, out_files)
        _write_json(outputs.register(out_dir / "manifest.json"), manifest)
    sys.stdout.write(csv_text)
    return EXIT_OK


# ---------------------------------------------------------------- synth-glyph


def _cmd_synth_glyph(args, outputs: _Outputs) -> int:
    if args.spec_json is not None:
        spec = GlyphSpec(**json.loads(Path(args.spec_json).read_text()))
    else:
        spec = GlyphSpec(
            size=args.size,
            stroke_count=args.stroke_count,
            stroke_width=args.stroke_width,
            halo_radius=args.halo_radius,
            halo_decay=args.halo_decay,
            seed=args.seed,
        )
    glyph = synth_glyph(spec)
    out = _save_image(outputs, args.output, glyph, args.invert)
    sidecar = outputs.register(Path(args.output).with_suffix(".json"))
    _write_json(sidecar, spec.to_dict())

    manifest = _manifest(
        "synth-glyph",
        {**spec.to_dict(), "invert": args.invert},
        {"spec_json": args.spec_json},
        {"image": out, "sidecar": str(sidecar)},
    )
    _write_json(outputs.register(Path(args.output).with_suffix(".manifest.json")), manifest)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _add_invert(parser) -> None:
    parser.add_argument("--invert", action="store_true", help="treat black (0) as ink in PGM I/O")


def _add_morph_weights(parser) -> None:
    parser.add_argument("--lambda-c", type=float, default=1.0, help="core term weight")
    parser.add_argument("--lambda-b", type=float, default=1.0, help="boundary term weight")
    parser.add_argument("--lambda-lap", type=float, default=1.0, help="smoothness term weight")
    parser.add_argument("--tau", type=float, default=0.5, help="soft morphology temperature")
    parser.add_argument("--radius", type=int, default=2, help="structuring element radius")
    parser.add_argument("--mask-radius", type=int, default=None, help="boundary mask radius (defaults to --radius)")


def _add_schedule(parser) -> None:
    parser.add_argument("--T", dest="total_timesteps", type=int, default=1000, help="number of diffusion steps")
    parser.add_argument("--beta-start", type=float, default=1e-4)
    parser.add_argument("--beta-end", type=float, default=0.02)


def build_parser() -> argparse.ArgumentParser:
    parser = _CliParser(prog="inkmorph", description=__doc__)
    parser.add_argument("--version", action="version", version=f"inkmorph {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_CliParser)

    p = sub.add_parser("morph", help="apply a soft or hard morphological operator")
    p.add_argument("--input", required=True)
    p.add_argument("--op", required=True, choices=["erode", "dilate", "hard-erode", "hard-dilate"])
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--radius", type=int, default=2)
    p.add_argument("--output", required=True)
    _add_invert(p)
    p.set_defaults(func=_cmd_morph)

    p = sub.add_parser("dis-loss", help="ink-structure loss breakdown between two images")
    p.add_argument("--generated", required=True)
    p.add_argument("--target", required=True)
    _add_morph_weights(p)
    _add_invert(p)
    p.set_defaults(func=_cmd_dis_loss)

    p = sub.add_parser("gradcheck", help="validate analytic gradients against finite differences")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=16)
    p.add_argument("--probes", type=int, default=100)
    p.add_argument("--h", type=float, default=1e-4)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--out-dir", default=None, help="also write gradcheck.csv and a figure here")
    p.set_defaults(func=_cmd_gradcheck)

    p = sub.add_parser("optimize", help="pixel-space descent toward a target glyph")
    p.add_argument("--target", required=True)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--lambda-dis", type=float, default=0.02)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log-every", type=int, default=1)
    p.add_argument("--noise-amplitude", type=float, default=0.3)
    p.add_argument("--out-dir", required=True)
    _add_morph_weights(p)
    _add_invert(p)
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("diffuse", help="diffusion forward noising and ancestral sampling demos")
    dsub = p.add_subparsers(dest="diffuse_command", required=True, parser_class=_CliParser)

    pf = dsub.add_parser("forward", help="closed-form noising of an input image")
    pf.add_argument("--input", required=True)
    pf.add_argument("--t", type=int, required=True)
    pf.add_argument("--seed", type=int, default=0)
    pf.add_argument("--output", required=True)
    _add_schedule(pf)
    _add_invert(pf)
    pf.set_defaults(func=_cmd_diffuse_forward)

    ps = dsub.add_parser("sample", help="ancestral sampling with the zero demo denoiser")
    ps.add_argument("--size", type=int, default=96)
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--sigma", choices=["beta", "zero"], default="beta")
    ps.add_argument("--dump-every", type=int, default=0, help="write x_t every N steps (0 = never)")
    ps.add_argument("--out-dir", required=True)
    _add_schedule(ps)
    _add_invert(ps)
    ps.set_defaults(func=_cmd_diffuse_sample)

    p = sub.add_parser("staf-demo", help="fuse Sobel detail into a content image")
    p.add_argument("--content", required=True)
    p.add_argument("--layer", type=int, default=0)
    p.add_argument("--t", type=int, default=0)
    p.add_argument("--T", dest="total_timesteps", type=int, default=1000)
    p.add_argument("--params", default=None, help="StafParams JSON file")
    p.add_argument("--alpha-global", type=float, default=None)
    p.add_argument("--alpha-base", type=float, default=None)
    p.add_argument("--out-dir", required=True)
    _add_invert(p)
    p.set_defaults(func=_cmd_staf_demo)

    p = sub.add_parser("metrics", help="image quality metrics for a pair or a directory of pairs")
    p.add_argument("--a", default=None)
    p.add_argument("--b", default=None)
    p.add_argument("--pairs-dir", default=None, help="directory of <name>_a.pgm / <name>_b.pgm pairs")
    p.add_argument("--out-dir", default=None, help="also write metrics.csv and a figure here")
    p.add_argument("--ssim-window", type=int, default=11)
    p.add_argument("--ssim-sigma", type=float, default=1.5)
    p.add_argument("--ssim-k1", type=float, default=0.01)
    p.add_argument("--ssim-k2", type=float, default=0.03)
    _add_invert(p)
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("synth-glyph", help="deterministic synthetic glyph fixture")
    p.add_argument("--spec-json", default=None, help="GlyphSpec JSON file (overrides the flags)")
    p.add_argument("--size", type=int, default=96)
    p.add_argument("--stroke-count", type=int, default=3)
    p.add_argument("--stroke-width", type=float, default=3.0)
    p.add_argument("--halo-radius", type=int, default=2)
    p.add_argument("--halo-decay", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    _add_invert(p)
    p.set_defaults(func=_cmd_synth_glyph)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    outputs = _Outputs()
    try:
        return args.func(args, outputs)
    except PgmError as exc:
        outputs.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        outputs.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericalError as exc:
        outputs.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        outputs.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
