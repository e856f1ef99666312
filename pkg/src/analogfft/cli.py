"""Command-line interface: ``analogfft <command> [options]``.

Exit codes: 0 ok, 2 configuration error, 3 unfactorable size, 4 file error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import cost, engine, fileio, fixtures, sigproc
from .device import US, HardwareModel, calibrate_gmax, dft_array, weight_error_stats
from .core import dft_matrix
from .errors import AnalogFFTError, ConfigError, FileFormatError
from .metrics import psnr
from .plan import Leaf, plan_factorization, plan_from_spec, plan_to_spec


def _load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def _model(args, config: dict) -> HardwareModel:
    spec = config.get("model", {})
    if args.model:
        if args.model in ("default", "ideal", "noiseless"):
            spec = {"preset": args.model}
        else:
            spec = _load_json(args.model)
    model = HardwareModel.from_dict(spec) if spec else HardwareModel()
    if args.seed is not None:
        model = model.with_seed(args.seed)
    return model


def _parse_ints(text: str | None):
    if text is None:
        return None
    try:
        return [int(t) for t in text.replace("x", ",").split(",") if t]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from exc


def _emit(obj) -> None:
    def enc(v):
        if isinstance(v, float) and math.isinf(v):
            return "inf"
        raise TypeError(type(v))
    print(json.dumps(obj, indent=2, sort_keys=True, default=enc))


def _plan_for(n: int, args, config: dict):
    spec = _parse_ints(args.plan) if getattr(args, "plan", None) else config.get("plan")
    if spec:
        plan = plan_from_spec(spec)
        if plan.size != n:
            raise ConfigError(f"plan {spec} covers {plan.size} points, need {n}")
        return plan
    return plan_factorization(n, args.k_max)


def cmd_program(args, config):
    model = _model(args, config)
    g_max = args.gmax * US if args.gmax else engine.lookup_gmax(engine.AUDIO_GMAX, args.size)
    tiles = args.tiles or engine.default_tiles(args.size)
    arr = dft_array(args.size, g_max, model, tiles, array_id=args.size, inverse=args.inverse)
    if args.out:
        fileio.save_array(args.out, arr)
    _emit({"size": args.size, "rows": arr.rows, "cols": arr.cols, "g_max_uS": g_max / US,
           "tiles": tiles, **weight_error_stats(arr)})


def _audio(args):
    if args.input:
        return fileio.read_wav(args.input)
    return fixtures.speech_fixture()


def _image(args):
    return fileio.read_ppm(args.input) if args.input else fixtures.image_fixture()


def cmd_calibrate(args, config):
    model = _model(args, config)
    k = args.size
    if args.kind == "audio":
        x, _ = _audio(args)
        frames = sigproc.frame_signal(x, k, k)
    else:
        img = _image(args).astype(float)
        cols = np.moveaxis(img, -1, 0).reshape(-1, img.shape[1])
        frames = np.concatenate([c.reshape(-1, k) for c in cols[:, : (img.shape[1] // k) * k]])
    signed = args.kind == "audio"
    g = calibrate_gmax(dft_matrix(k), list(frames[: args.max_samples]), model, args.percentile,
                       bits=13 if signed else 8, signed=signed)
    _emit({"size": k, "kind": args.kind, "percentile": args.percentile, "g_max_uS": g / US})


def _audio_config(args, config, plan):
    model = _model(args, config)
    cfg = sigproc.audio_config(set(plan.leaves()), model, plan=plan, workers=args.workers)
    return cfg


def cmd_fft(args, config):
    x, rate = _audio(args)
    x, _ = sigproc.quantize_waveform(x)
    n = args.n or 1 << int(math.ceil(math.log2(len(x))))
    if len(x) > n:
        x = x[:n]
    plan = _plan_for(n, args, config)
    cfg = _audio_config(args, config, plan)
    res = sigproc.full_spectrum(x, plan, cfg)
    ref = sigproc.full_spectrum(x, plan, None)
    if args.out:
        _write_spectrum(args.out, res.spectrum)
    if args.trace:
        fileio.write_text(args.trace, res.trace.to_csv())
    _emit({"n": n, "plan": plan_to_spec(plan), "padded": res.padded, "sample_rate": rate,
           "bin_spacing_hz": rate / n, "psnr_db": psnr(ref.magnitude, res.magnitude),
           "adc_conversions": res.trace.adc_conversions, "mvms": res.trace.mvms})


def _write_spectrum(path, X):
    if str(path).endswith(".csv"):
        fileio.write_text(path, fileio.spectrum_csv(X))
    else:
        fileio.save_tensor(path, X)


def cmd_spectrogram(args, config):
    x, rate = _audio(args)
    x, _ = sigproc.quantize_waveform(x)
    plan = _plan_for(args.window, args, config)
    scfg = sigproc.SpectrogramConfig(args.window, args.hop, plan, args.db_floor, pad=args.pad)
    cfg = _audio_config(args, config, plan)
    res = sigproc.spectrogram(x, scfg, cfg)
    ideal = sigproc.spectrogram(x, scfg, None)
    db = res.dbfs(ideal.magnitude.max(), args.db_floor)
    if args.out:
        fileio.write_text(args.out, fileio.matrix_csv(db))
    if args.trace:
        fileio.write_text(args.trace, res.trace.to_csv())
    if args.wav_out:
        rec = sigproc.reconstruct_audio(res.spectra, args.hop, len(x))
        fileio.write_wav(args.wav_out, rec, rate)
    _emit({"frames": res.magnitude.shape[1], "bins": res.magnitude.shape[0],
           "plan": plan_to_spec(plan), "psnr_db": sigproc.spectrogram_psnr(res, ideal),
           "dbfs_reference": "ideal spectrogram maximum",
           "adc_conversions": res.trace.adc_conversions})


def cmd_image(args, config):
    img = _image(args)
    model = _model(args, config)
    cfg = sigproc.image_config(args.method, model, k=args.k, k_max=args.k_max,
                               workers=args.workers)
    params = _parse_ints(args.params)
    res = sigproc.image_spectrum_and_reconstruct(img, args.method, cfg, params, k_max=args.k_max)
    if args.out:
        fileio.write_ppm(args.out, res.reconstruction)
    if args.spectrum:
        fileio.save_tensor(args.spectrum, res.spectra)
    if args.trace:
        fileio.write_text(args.trace, res.trace.to_csv())
    if args.method == "direct":
        ideal = np.fft.fft2(np.moveaxis(img.astype(float), -1, 0))
        streak = [engine.dc_streak_flag(res.spectra[c], ideal[c]) for c in range(len(ideal))]
    else:
        streak = None
    _emit({"method": args.method, "quality": res.quality.to_dict(),
           "quality_uncorrected": res.quality_uncorrected.to_dict(),
           "parseval_factors": res.factors,
           "dc_streak": [{"flag": bool(f), "ratio": r} for f, r in streak] if streak else None})


def cmd_cost(args, config):
    table = cost.EnergyTable.from_dict(config["energy_table"]) if "energy_table" in config \
        else cost.EnergyTable()
    ks = _parse_ints(args.k) or [16, 64, 256]
    ns = [2 ** e for e in range(args.log2_min, args.log2_max + 1)]
    rows = cost.scaling_report(ks, ns, table, dims=args.dims,
                               digital_coefficient=args.digital_coefficient)
    text = cost.report_csv(rows)
    if args.out:
        fileio.write_text(args.out, text)
    else:
        sys.stdout.write(text)


def run_selftest(out: Path, model: HardwareModel, workers: int = 1) -> dict:
    """Small deterministic end-to-end run; writes artifacts into ``out``."""
    out.mkdir(parents=True, exist_ok=True)
    x, rate = fixtures.speech_fixture()
    x, _ = sigproc.quantize_waveform(x[:16384])
    summary = {}

    plan = plan_factorization(4096, 256)
    cfg = sigproc.audio_config({256, 64, 16}, model, plan=plan, workers=workers,
                               subsample_from=256)
    res = sigproc.full_spectrum(x[:4096], plan, cfg)
    fileio.save_tensor(out / "fft4096.anft", res.spectrum)
    fileio.write_text(out / "fft4096_trace.csv", res.trace.to_csv())
    summary["fft4096_psnr_db"] = psnr(sigproc.full_spectrum(x[:4096], plan, None).magnitude,
                                      res.magnitude)

    splan = plan_factorization(256, 16)
    scfg = sigproc.SpectrogramConfig(256, 128, splan)
    acfg = sigproc.audio_config({16}, model, plan=splan, workers=workers)
    spec = sigproc.spectrogram(x, scfg, acfg)
    ideal = sigproc.spectrogram(x, scfg, None)
    fileio.write_text(out / "spectrogram_dbfs.csv",
                      fileio.matrix_csv(spec.dbfs(ideal.magnitude.max())))
    summary["spectrogram_psnr_db"] = sigproc.spectrogram_psnr(spec, ideal)

    img = fixtures.image_fixture()[::4, ::4]
    icfg = sigproc.image_config("vr", model, k=8, workers=workers)
    ires = sigproc.image_spectrum_and_reconstruct(img, "vr", icfg, (8, 8, 8, 8))
    fileio.write_ppm(out / "image_vr.ppm", ires.reconstruction)
    fileio.save_tensor(out / "image_vr_spectrum.anft", ires.spectra)
    summary["image_psnr_db"] = ires.quality.psnr_db
    summary["image_ssim"] = ires.quality.ssim

    fileio.write_text(out / "cost.csv", cost.report_csv(
        cost.scaling_report([16, 256], [256, 4096, 65536])))
    fileio.write_text(out / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def cmd_selftest(args, config):
    out = Path(args.out or "selftest_out")
    _emit(run_selftest(out, _model(args, config), args.workers))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="analogfft", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON file with model, plan and energy_table sections")
    p.add_argument("--seed", type=int, help="hardware model RNG seed")
    p.add_argument("--model", help="JSON hardware model file, or default|ideal|noiseless")
    p.add_argument("--out", help="primary output file (directory for selftest)")
    p.add_argument("--workers", type=int, default=1, help="threads per analog stage")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("program", help="program a DFT array and save a snapshot")
    s.add_argument("--size", type=int, required=True)
    s.add_argument("--gmax", type=float, help="maximum conductance in uS")
    s.add_argument("--tiles", type=int)
    s.add_argument("--inverse", action="store_true", help="store the conjugate transpose")
    s.set_defaults(func=cmd_program)

    s = sub.add_parser("calibrate", help="search g_max against ADC clipping")
    s.add_argument("--size", type=int, required=True)
    s.add_argument("--input", help="WAV (audio) or PPM (image); bundled fixture if omitted")
    s.add_argument("--kind", choices=["audio", "image"], default="audio")
    s.add_argument("--percentile", type=float, default=99.99)
    s.add_argument("--max-samples", type=int, default=2048)
    s.set_defaults(func=cmd_calibrate)

    for name, func, helptext in (("fft", cmd_fft, "whole-signal analog FFT"),
                                 ("spectrogram", cmd_spectrogram, "analog STFT magnitudes")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--input", help="16-bit mono WAV; bundled fixture if omitted")
        s.add_argument("--plan", help="factor list, e.g. 16,16")
        s.add_argument("--k-max", type=int, default=256)
        s.add_argument("--trace", help="write the stage trace CSV here")
        s.set_defaults(func=func)
        if name == "fft":
            s.add_argument("--n", type=int, help="transform size (zero-pads or truncates)")
        else:
            s.add_argument("--window", type=int, default=256)
            s.add_argument("--hop", type=int, default=128)
            s.add_argument("--db-floor", type=float, default=-80.0)
            s.add_argument("--pad", action="store_true", help="zero-pad the tail window")
            s.add_argument("--wav-out", help="write the overlap-add reconstruction")

    s = sub.add_parser("image", help="2-D analog transform and reconstruction")
    s.add_argument("--input", help="P6 PPM; bundled fixture if omitted")
    s.add_argument("--method", choices=["vr", "direct"], default="vr")
    s.add_argument("--params", help="p,q,r,s for the vector-radix split")
    s.add_argument("--k", type=int, default=16, help="elementary DFT size for vr")
    s.add_argument("--k-max", type=int, default=256, help="array size for direct")
    s.add_argument("--spectrum", help="write the complex spectra (ANFT)")
    s.add_argument("--trace")
    s.set_defaults(func=cmd_image)

    s = sub.add_parser("cost", help="conversion and energy scaling report (CSV)")
    s.add_argument("--k", help="elementary sizes, e.g. 16,64,256")
    s.add_argument("--log2-min", type=int, default=4)
    s.add_argument("--log2-max", type=int, default=20)
    s.add_argument("--dims", type=int, choices=[1, 2], default=1)
    s.add_argument("--digital-coefficient", type=float,
                   help="user-fit J per N^2 log2 N for a digital comparator row")
    s.set_defaults(func=cmd_cost)

    s = sub.add_parser("selftest", help="deterministic end-to-end run")
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_json(args.config) if args.config else {}
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        _model(args, config)
        args.func(args, config)
    except AnalogFFTError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
