"""Batch command-line interface.

Subcommands map one-to-one onto the library pipelines: whisperize, enhance,
mix, mel, embed, centroids, pca, voicing, eval. All file outputs are written
to a temporary file in the destination directory and renamed into place, so
a failing run never leaves partial output. Exit codes: 0 success, 1
processing error (malformed content, numeric failure), 2 argument error
(bad flags, missing files, invalid values).
"""

from __future__ import annotations

import argparse
import contextlib
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .analysis import pca_fit, pca_project, projections_to_csv, voicing_ratio
from .audio import FrameSpec
from .convert import EnhanceConfig, NoiseMixSpec, WhisperConfig, enhance, mix_at_snr, whisperize
from .embedding import (
    EncoderDims,
    StyleEmbedding,
    embed,
    embeddings_from_csv,
    embeddings_to_csv,
    init_random,
    load_weights,
    style_centroid,
)
from .errors import FormatError, VoxstyleError
from .evalstats import (
    ab_from_csv,
    ab_table_to_csv,
    mos_from_csv,
    mos_mean,
    mos_table_to_csv,
    read_references,
    wrr_from_csv,
    wrr_table_to_csv,
)
from .manifest import read_manifest
from .spectral import features_to_csv, log_mel, mel_bank, mel_cepstra, stft
from .wavio import read_wav, write_wav


@contextlib.contextmanager
def _atomic_output(path):
    """Yield a temp path in the target directory; rename over path on success."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-",
                               suffix=os.path.splitext(path)[1])
    os.close(fd)
    try:
        yield tmp
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.remove(tmp)
        raise


def _frame_spec_args(parser, frame_ms=25.0, hop_ms=10.0):
    parser.add_argument("--frame-ms", type=float, default=frame_ms,
                        help=f"analysis frame length in ms (default {frame_ms})")
    parser.add_argument("--hop-ms", type=float, default=hop_ms,
                        help=f"frame shift in ms (default {hop_ms})")


def _mel_args(parser):
    parser.add_argument("--fft-size", type=int, default=1024)
    parser.add_argument("--n-mels", type=int, default=80)
    parser.add_argument("--n-ceps", type=int, default=20)


def _cepstra_matrix(buf, args) -> np.ndarray:
    spec = FrameSpec.from_milliseconds(buf.sample_rate, args.frame_ms, args.hop_ms)
    sgram = stft(buf, spec, args.fft_size)
    bank = mel_bank(args.n_mels, args.fft_size, buf.sample_rate)
    return mel_cepstra(log_mel(sgram, bank), args.n_ceps).mel_cepstra


def cmd_whisperize(args) -> int:
    buf = read_wav(args.input)
    frame_spec = None
    if args.frame_ms is not None:
        hop_ms = args.hop_ms if args.hop_ms is not None else args.frame_ms / 2.0
        frame_spec = FrameSpec.from_milliseconds(buf.sample_rate, args.frame_ms, hop_ms)
    cfg = WhisperConfig(
        frame_spec=frame_spec, lpc_order=args.lpc_order, seed=args.seed,
        freq_scale=args.freq_scale, bw_exponent=args.bw_exponent,
        freq_cutoff=args.freq_cutoff, tilt_db_per_octave=args.tilt,
        pre_emphasis=not args.no_pre_emphasis,
    )
    out = whisperize(buf, cfg)
    with _atomic_output(args.output) as tmp:
        write_wav(out, tmp, codec=args.codec)
    return 0


def cmd_enhance(args) -> int:
    buf = read_wav(args.input)
    cfg = EnhanceConfig(
        band_lo=args.band_lo, band_hi=args.band_hi, band_boost_db=args.band_boost,
        tilt_db_per_octave=args.tilt, tilt_corner_hz=args.tilt_corner,
        ratio=args.ratio, attack_ms=args.attack_ms, release_ms=args.release_ms,
        rms_match=not args.no_rms_match,
    )
    out = enhance(buf, cfg)
    with _atomic_output(args.output) as tmp:
        write_wav(out, tmp, codec=args.codec)
    return 0


def cmd_mix(args) -> int:
    speech = read_wav(args.input)
    noise = read_wav(args.noise)
    out = mix_at_snr(speech, NoiseMixSpec(snr_db=args.snr, noise=noise))
    with _atomic_output(args.output) as tmp:
        write_wav(out, tmp, codec=args.codec)
    return 0


def cmd_mel(args) -> int:
    buf = read_wav(args.input)
    spec = FrameSpec.from_milliseconds(buf.sample_rate, args.frame_ms, args.hop_ms)
    sgram = stft(buf, spec, args.fft_size)
    bank = mel_bank(args.n_mels, args.fft_size, buf.sample_rate)
    feats = log_mel(sgram, bank)
    if args.features == "cepstra":
        matrix, prefix = mel_cepstra(feats, args.n_ceps).mel_cepstra, "c"
    else:
        matrix, prefix = feats.log_mel, "mel"
    with _atomic_output(args.output) as tmp:
        features_to_csv(matrix, tmp, prefix)
    return 0


def cmd_embed(args) -> int:
    manifest = read_manifest(args.manifest)
    if len(manifest) == 0:
        raise ValueError(f"manifest {args.manifest} has no records")
    if args.weights:
        weights = load_weights(args.weights)
        if weights.dims.input_dim != args.n_ceps:
            raise ValueError(
                f"weight input dim {weights.dims.input_dim} does not match --n-ceps {args.n_ceps}")
    else:
        dims = EncoderDims(input_dim=args.n_ceps, hidden=args.hidden, embed=args.embed_dim)
        weights = init_random(dims, args.seed)

    base = os.path.dirname(os.path.abspath(args.manifest))

    def one(record):
        path = record.path if os.path.isabs(record.path) else os.path.join(base, record.path)
        vec = embed(_cepstra_matrix(read_wav(path), args), weights,
                    combine=args.combine).vector
        return (record.utterance_id, record.speaker, record.style, vec)

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(one, manifest))
    else:
        rows = [one(r) for r in manifest]
    with _atomic_output(args.output) as tmp:
        embeddings_to_csv(rows, tmp)
    return 0


def cmd_centroids(args) -> int:
    rows = embeddings_from_csv(args.embeddings)
    if not rows:
        raise ValueError(f"{args.embeddings} has no embedding rows")
    groups = {}
    for utt, speaker, style, vec in rows:
        groups.setdefault((speaker, style), []).append(
            StyleEmbedding(vector=vec / np.linalg.norm(vec), speaker=speaker, style=style))
    k = len(rows[0][3])
    header = "speaker,style," + ",".join(f"e{i}" for i in range(k))
    with _atomic_output(args.output) as tmp:
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(header + "\n")
            for (speaker, style) in sorted(groups):
                c = style_centroid(groups[(speaker, style)])
                vals = ",".join(repr(float(v)) for v in c.vector)
                fh.write(f"{speaker},{style},{vals}\n")
    return 0


def cmd_pca(args) -> int:
    rows = embeddings_from_csv(args.embeddings)
    if not rows:
        raise ValueError(f"{args.embeddings} has no embedding rows")
    data = np.vstack([vec for _, _, _, vec in rows])
    model = pca_fit(data, args.components)
    projected = pca_project(model, data)
    records = [(utt, style, projected[i]) for i, (utt, _, style, _) in enumerate(rows)]
    with _atomic_output(args.output) as tmp:
        projections_to_csv(records, tmp)
    return 0


def cmd_voicing(args) -> int:
    ratio = voicing_ratio(read_wav(args.input), f0_lo=args.f0_lo, f0_hi=args.f0_hi)
    print(f"{ratio:.4f}")
    return 0


def cmd_eval(args) -> int:
    if args.kind == "ab":
        results = ab_from_csv(args.responses)
        with _atomic_output(args.output) as tmp:
            ab_table_to_csv(results, tmp)
    elif args.kind == "mos":
        summaries = {system: mos_mean(rs) for system, rs in mos_from_csv(args.responses).items()}
        with _atomic_output(args.output) as tmp:
            mos_table_to_csv(summaries, tmp)
    else:
        if not args.references:
            raise ValueError("--references is required for --kind wrr")
        results = wrr_from_csv(args.responses, read_references(args.references),
                               confidence=args.confidence)
        with _atomic_output(args.output) as tmp:
            wrr_table_to_csv(results, tmp)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voxstyle",
        description="Speech style conversion, embedding, and evaluation toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("whisperize", help="convert speech to whisper-like speech")
    p.add_argument("--in", dest="input", required=True, help="input WAV")
    p.add_argument("--out", dest="output", required=True, help="output WAV")
    p.add_argument("--seed", type=int, default=0, help="noise PRNG seed")
    p.add_argument("--frame-ms", type=float, default=None)
    p.add_argument("--hop-ms", type=float, default=None)
    p.add_argument("--lpc-order", type=int, default=None)
    p.add_argument("--freq-scale", type=float, default=1.15)
    p.add_argument("--bw-exponent", type=float, default=1.2)
    p.add_argument("--freq-cutoff", type=float, default=2000.0)
    p.add_argument("--tilt", type=float, default=3.0, help="dB/octave spectral tilt")
    p.add_argument("--no-pre-emphasis", action="store_true")
    p.add_argument("--codec", choices=("pcm16", "float32"), default="float32")
    p.set_defaults(func=cmd_whisperize)

    p = sub.add_parser("enhance", help="spectral shaping + compression")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--band-lo", type=float, default=1000.0)
    p.add_argument("--band-hi", type=float, default=4000.0)
    p.add_argument("--band-boost", type=float, default=6.0)
    p.add_argument("--tilt", type=float, default=2.0)
    p.add_argument("--tilt-corner", type=float, default=1000.0)
    p.add_argument("--ratio", type=float, default=2.0)
    p.add_argument("--attack-ms", type=float, default=5.0)
    p.add_argument("--release-ms", type=float, default=50.0)
    p.add_argument("--no-rms-match", action="store_true")
    p.add_argument("--codec", choices=("pcm16", "float32"), default="float32")
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("mix", help="add noise at an exact SNR")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--noise", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--snr", type=float, required=True, help="target SNR in dB")
    p.add_argument("--codec", choices=("pcm16", "float32"), default="float32")
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("mel", help="log-mel or mel-cepstral features to CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--features", choices=("logmel", "cepstra"), default="logmel")
    _frame_spec_args(p)
    _mel_args(p)
    p.set_defaults(func=cmd_mel)

    p = sub.add_parser("embed", help="embed every manifest utterance to CSV")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--weights", default=None, help="weight descriptor file")
    p.add_argument("--seed", type=int, default=0, help="weight init seed")
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--embed-dim", type=int, default=32)
    p.add_argument("--combine", choices=("last", "mean"), default="last")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel workers; output is identical for any value")
    _frame_spec_args(p)
    _mel_args(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("centroids", help="per-(speaker, style) embedding centroids")
    p.add_argument("--embeddings", required=True, help="embeddings CSV from `embed`")
    p.add_argument("--out", dest="output", required=True)
    p.set_defaults(func=cmd_centroids)

    p = sub.add_parser("pca", help="project embeddings onto principal components")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--components", type=int, default=2)
    p.set_defaults(func=cmd_pca)

    p = sub.add_parser("voicing", help="print the voicing ratio of a WAV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--f0-lo", type=float, default=60.0)
    p.add_argument("--f0-hi", type=float, default=400.0)
    p.set_defaults(func=cmd_voicing)

    p = sub.add_parser("eval", help="summarize listening-test responses")
    p.add_argument("--responses", required=True, help="responses CSV")
    p.add_argument("--kind", choices=("ab", "mos", "wrr"), required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--references", default=None, help="utterance_id,text CSV (wrr)")
    p.add_argument("--confidence", type=float, default=0.95)
    p.set_defaults(func=cmd_eval)

    return parser


def _apply_config(argv: list) -> list:
    """Splice `--config FILE` key=value lines in as flags after the subcommand.

    Flags given on the command line come later and therefore win. Boolean
    switches are spelled as `name=true` in the file.
    """
    argv = list(argv)
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise ValueError("--config requires a file path")
    cfg_path = argv[i + 1]
    del argv[i: i + 2]
    tokens = []
    with open(cfg_path, encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(f"{cfg_path}:{ln}: expected key=value, got {line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            flag = "--" + key.replace("_", "-")
            if value.lower() == "true":
                tokens.append(flag)
            elif value.lower() == "false":
                pass
            else:
                tokens.extend([flag, value])
    for j, tok in enumerate(argv):
        if not tok.startswith("-"):
            return argv[: j + 1] + tokens + argv[j + 1:]
    return argv + tokens


def main(argv=None) -> int:
    parser = build_parser()
    try:
        argv = _apply_config(sys.argv[1:] if argv is None else argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse has already printed its message
        return int(exc.code or 0)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except VoxstyleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except VoxstyleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
