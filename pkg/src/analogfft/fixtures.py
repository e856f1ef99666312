"""Deterministic synthetic test inputs bundled with the package.

``speech.wav``: 65,536 samples of 16 kHz speech-like audio (voiced syllables
with a moving pitch and formants, fricative bursts and pauses).
``scene.ppm``: a 256x256 RGB scene with smooth gradients, hard edges and
fine texture.

Run ``python -m analogfft.fixtures`` to regenerate the files.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from . import fileio

SAMPLE_RATE = 16000
SPEECH_SAMPLES = 65536
IMAGE_SIZE = 256

_FORMANTS = [(730, 1090, 2440), (270, 2290, 3010), (300, 870, 2240),
             (530, 1840, 2480), (640, 1190, 2390), (490, 1350, 1690)]


def synth_speech(n: int = SPEECH_SAMPLES, rate: int = SAMPLE_RATE, seed: int = 7) -> np.ndarray:
    """Speech-like int16 waveform."""
    rng = np.random.default_rng(seed)
    out = np.zeros(n)
    t0 = int(0.15 * rate)
    while t0 < n - int(0.1 * rate):
        dur = int(rng.uniform(0.12, 0.35) * rate)
        dur = min(dur, n - t0)
        t = np.arange(dur) / rate
        env = np.sin(np.pi * np.arange(dur) / dur) ** 1.5
        if rng.random() < 0.25:
            # fricative: high-passed noise
            noise = rng.normal(size=dur)
            noise = np.diff(noise, prepend=0.0)
            out[t0:t0 + dur] += 0.25 * env * noise
        else:
            f0 = rng.uniform(100, 210) * (1 + 0.15 * np.sin(2 * np.pi * rng.uniform(1, 4) * t))
            phase = 2 * np.pi * np.cumsum(f0) / rate
            formants = _FORMANTS[rng.integers(len(_FORMANTS))]
            voiced = np.zeros(dur)
            for h in range(1, 40):
                fh = h * f0.mean()
                if fh > rate / 2 - 200:
                    break
                amp = sum(np.exp(-0.5 * ((fh - f) / (60 + 0.08 * f)) ** 2) for f in formants)
                voiced += (amp + 0.02) / h ** 0.5 * np.sin(h * phase)
            out[t0:t0 + dur] += env * voiced
        t0 += dur + int(rng.uniform(0.02, 0.2) * rate)
    out += 0.002 * rng.normal(size=n)
    out *= 0.6 * 32767 / np.abs(out).max()
    return np.rint(out).astype(np.int16)


def synth_scene(size: int = IMAGE_SIZE, seed: int = 11) -> np.ndarray:
    """RGB uint8 scene (rows, cols, 3)."""
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:size, 0:size] / size
    sky = np.stack([90 + 80 * y, 140 + 70 * y, 230 - 40 * y], axis=-1)
    img = sky.copy()
    sun = (x - 0.75) ** 2 + (y - 0.2) ** 2 < 0.08 ** 2
    img[sun] = [250, 230, 150]
    horizon = 0.55 + 0.06 * np.sin(2 * np.pi * 1.3 * x) + 0.03 * np.sin(2 * np.pi * 4.1 * x + 1)
    ground = y > horizon
    grass = np.stack([60 + 40 * y, 120 + 50 * np.sin(30 * x * y), 50 + 0 * y], axis=-1)
    img[ground] = grass[ground]
    for _ in range(7):
        x0 = rng.uniform(0.02, 0.85)
        w = rng.uniform(0.05, 0.12)
        top = rng.uniform(0.3, 0.6)
        bld = (x >= x0) & (x < x0 + w) & (y >= top) & (y < 0.85)
        shade = rng.uniform(60, 200)
        img[bld] = [shade, shade * 0.9, shade * 0.8]
        win = bld & ((np.floor(x * size) % 6) < 3) & ((np.floor(y * size) % 8) < 4)
        img[win] = [230, 220, 120] if rng.random() < 0.5 else [30, 40, 60]
    road = (y > 0.85) & (np.abs(x - 0.5) < 0.45 - 0.3 * (1 - y))
    img[road] = [80, 80, 85]
    stripe = road & (np.abs(x - 0.5) < 0.01) & ((np.floor(y * size) % 10) < 5)
    img[stripe] = [240, 240, 240]
    img += rng.normal(0, 4, img.shape)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def _data_path(name: str):
    return resources.files("analogfft") / "data" / name


def speech_fixture() -> tuple[np.ndarray, int]:
    with resources.as_file(_data_path("speech.wav")) as p:
        return fileio.read_wav(p)


def image_fixture() -> np.ndarray:
    with resources.as_file(_data_path("scene.ppm")) as p:
        return fileio.read_ppm(p)


def write_fixtures(directory) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    fileio.write_wav(d / "speech.wav", synth_speech(), SAMPLE_RATE)
    fileio.write_ppm(d / "scene.ppm", synth_scene())


if __name__ == "__main__":
    write_fixtures(Path(__file__).parent / "data")
