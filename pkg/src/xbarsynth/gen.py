"""Seeded synthetic trace generator with two-level bursty structure.

Each initiator alternates burst and gap periods: burst k+1 starts
``burst_len_mean + jittered gap`` cycles after burst k started, so gap
jitter accumulates into a slow phase drift and pairs of initiators sweep
through different relative alignments over the horizon.  A burst occupies
a jittered span; within the span, ``runs_per_burst`` contiguous busy runs
cover an ``intra_duty`` fraction of the span and are emitted as
back-to-back packets.  With the default duty of 1.0 and a single run the
burst is one solid busy block, which keeps per-initiator busy mass at
``horizon * burst / (burst + gap)`` up to jitter; a duty below 1.0 scales
that mass by the same factor.

``phase_correlation`` interpolates between lockstep (1.0: identical
start phases and a gap-jitter sequence shared by all initiators, so
every burst of every initiator starts on the same cycle) and full
independence (0.0: uniform phases, private jitter).  Randomness comes
from one PCG64 stream per initiator plus one shared stream, spawned
from the spec seed, so traces are reproducible bit for bit and adding
an initiator never perturbs the others.

Bursts never straddle the horizon: a burst whose span would end past it
is dropped, biasing totals slightly low.
"""

from __future__ import annotations

from dataclasses import MISSING, dataclass, fields, replace

import numpy as np

from .trace import REQUEST, Trace, Transaction

PRESET_NAMES = ("mat2like", "uniform", "hotspot")

# Shared-target accesses are sized so every shared target carries at most
# a twentieth of a private target's busy mass, half the documented 10% cap.
_SHARED_MASS_DIVISOR = 20


class GenError(ValueError):
    """Invalid GenSpec or a horizon too small to fit any burst."""


@dataclass(frozen=True)
class GenSpec:
    """Parameters of the synthetic workload.

    ``shared_target_ids`` names targets that receive only low-rate
    traffic (one short access per initiator per burst, round-robin);
    every remaining target is a private target, assigned to initiators
    in id order (initiator i -> private target ((i-1) mod n_priv) + 1).
    ``critical_stream_pairs`` lists (initiator_id, target_id) streams
    whose transactions are flagged critical.
    """

    num_initiators: int
    num_targets: int
    burst_len_mean: int
    burst_len_jitter: float
    inter_burst_gap_mean: int
    phase_correlation: float
    shared_target_ids: tuple[int, ...]
    critical_stream_pairs: tuple[tuple[int, int], ...]
    horizon: int
    seed: int
    # Texture knobs beyond the basic burst/gap alternation.  Defaults
    # reproduce the plain model: one solid busy run per burst.
    intra_duty: float = 1.0
    runs_per_burst: int = 1
    packet_len: int = 0  # 0 = one transaction per run
    run_jitter: float = 0.0

    def __post_init__(self):
        if self.num_initiators < 1 or self.num_targets < 1:
            raise GenError("num_initiators and num_targets must be positive")
        if self.burst_len_mean < 1:
            raise GenError("burst_len_mean must be positive")
        if not 0.0 <= self.burst_len_jitter < 1.0:
            raise GenError("burst_len_jitter must lie in [0, 1)")
        if self.inter_burst_gap_mean < 1:
            raise GenError("inter_burst_gap_mean must be positive")
        if not 0.0 <= self.phase_correlation <= 1.0:
            raise GenError("phase_correlation must lie in [0, 1]")
        if self.horizon < 1:
            raise GenError("horizon must be positive")
        if not 0.0 < self.intra_duty <= 1.0:
            raise GenError("intra_duty must lie in (0, 1]")
        if self.runs_per_burst < 1:
            raise GenError("runs_per_burst must be positive")
        if self.packet_len < 0:
            raise GenError("packet_len must be non-negative")
        if not 0.0 <= self.run_jitter <= 1.0:
            raise GenError("run_jitter must lie in [0, 1]")
        bad = [t for t in self.shared_target_ids if not 1 <= t <= self.num_targets]
        if bad:
            raise GenError(f"shared_target_ids outside 1..{self.num_targets}: {bad}")
        if len(set(self.shared_target_ids)) == self.num_targets:
            raise GenError("at least one target must remain private")
        for init, tgt in self.critical_stream_pairs:
            if not 1 <= init <= self.num_initiators or not 1 <= tgt <= self.num_targets:
                raise GenError(f"critical stream ({init}, {tgt}) out of range")

    @property
    def slot_period(self) -> int:
        return self.burst_len_mean + self.inter_burst_gap_mean

    def private_targets(self) -> list[int]:
        shared = set(self.shared_target_ids)
        return [t for t in range(1, self.num_targets + 1) if t not in shared]


def _emit_run(out: list[Transaction], start: int, length: int, init: int,
              tgt: int, critical: bool, packet_len: int) -> None:
    """Append one busy run as back-to-back packet transactions."""
    if packet_len <= 0 or packet_len >= length:
        out.append(Transaction(start, length, init, tgt, critical))
        return
    off = 0
    while off < length:
        piece = min(packet_len, length - off)
        out.append(Transaction(start + off, piece, init, tgt, critical))
        off += piece


def generate(spec: GenSpec) -> Trace:
    """Produce a deterministic trace for ``spec``.

    Raises GenError when the horizon is too small for at least one full
    burst per initiator.
    """
    period = spec.slot_period
    privates = spec.private_targets()
    shared = spec.shared_target_ids
    critical_set = set(spec.critical_stream_pairs)
    # Short shared accesses: sized so each shared target's mass stays
    # well under a tenth of a private target's.
    if shared:
        busy_mean = max(1, round(spec.burst_len_mean * spec.intra_duty))
        shared_len = max(
            1, busy_mean * len(shared) // (_SHARED_MASS_DIVISOR * len(privates))
        )

    seq = np.random.SeedSequence(spec.seed).spawn(spec.num_initiators + 1)
    txs: list[Transaction] = []
    spread = 1.0 - spec.phase_correlation
    pc = spec.phase_correlation
    for idx in range(spec.num_initiators):
        init = idx + 1
        rng = np.random.Generator(np.random.PCG64(seq[idx]))
        # Every initiator replays the same shared jitter sequence; mixing
        # it with the private one by phase_correlation makes the walks
        # identical at 1.0 and independent at 0.0.
        common = np.random.Generator(np.random.PCG64(seq[-1]))
        tgt = privates[idx % len(privates)]
        span_start = int(spread * rng.random() * period)
        # Persistent run placement inside the span, drawn once so the
        # initiator keeps its sub-burst rhythm from burst to burst.
        home_frac = np.sort(rng.random(spec.runs_per_burst))
        emitted = 0
        for slot in range(spec.horizon // period + 1):
            u = rng.random()
            eps = pc * (2 * common.random() - 1) + spread * (2 * rng.random() - 1)
            span = max(
                spec.runs_per_burst,
                round(spec.burst_len_mean * (1.0 + spec.burst_len_jitter * (2 * u - 1))),
            )
            if span_start + span > spec.horizon:
                break
            busy = max(spec.runs_per_burst, round(span * spec.intra_duty))
            base, extra = divmod(busy, spec.runs_per_burst)
            lengths = [base + (1 if q < extra else 0) for q in range(spec.runs_per_burst)]
            slack = span - busy
            frac = home_frac
            if spec.run_jitter > 0.0:
                fresh = np.sort(rng.random(spec.runs_per_burst))
                frac = (1.0 - spec.run_jitter) * home_frac + spec.run_jitter * fresh
            offset = 0
            for q, run_len in enumerate(lengths):
                run_start = span_start + int(frac[q] * slack) + offset
                crit = (init, tgt) in critical_set
                _emit_run(txs, run_start, run_len, init, tgt, crit, spec.packet_len)
                offset += run_len
            emitted += 1
            if shared:
                stgt = shared[(idx + slot) % len(shared)]
                rank = idx // len(shared)
                sstart = span_start + span + rank * (shared_len + 1)
                if sstart + shared_len <= spec.horizon:
                    crit = (init, stgt) in critical_set
                    txs.append(Transaction(sstart, shared_len, init, stgt, crit))
            gap = round(
                spec.inter_burst_gap_mean * (1.0 + spec.burst_len_jitter * eps)
            )
            span_start += spec.burst_len_mean + max(1, gap)
        if emitted == 0:
            raise GenError(
                f"horizon {spec.horizon} too small: initiator i_{init} "
                f"cannot fit one burst of ~{spec.burst_len_mean} cycles"
            )
    return Trace(spec.num_initiators, spec.num_targets, txs, horizon=spec.horizon)


def benchmark_preset(name: str) -> GenSpec:
    """Named workload shapes: a 9-core platform with three low-rate
    shared targets and correlated phases (mat2like), a 20-core uniform
    benchmark with independent phases (uniform), and an 8-initiator
    single-hot-target stress (hotspot)."""
    if name == "mat2like":
        return GenSpec(
            num_initiators=9,
            num_targets=12,
            burst_len_mean=1000,
            burst_len_jitter=0.2,
            inter_burst_gap_mean=19_000,
            phase_correlation=0.4,
            shared_target_ids=(10, 11, 12),
            critical_stream_pairs=((1, 1), (2, 2), (3, 3)),
            horizon=240_000,
            seed=2024,
            intra_duty=0.4,
            runs_per_burst=1,
            packet_len=10,
            run_jitter=0.3,
        )
    if name == "uniform":
        return GenSpec(
            num_initiators=20,
            num_targets=20,
            burst_len_mean=1000,
            burst_len_jitter=0.15,
            inter_burst_gap_mean=14_000,
            phase_correlation=0.0,
            shared_target_ids=(),
            critical_stream_pairs=(),
            horizon=120_000,
            seed=2024,
            intra_duty=0.8,
            runs_per_burst=1,
            packet_len=25,
            run_jitter=0.3,
        )
    if name == "hotspot":
        return GenSpec(
            num_initiators=8,
            num_targets=4,
            burst_len_mean=1000,
            burst_len_jitter=0.1,
            inter_burst_gap_mean=5000,
            phase_correlation=0.0,
            shared_target_ids=(2, 3, 4),
            critical_stream_pairs=(),
            horizon=60_000,
            seed=2024,
            packet_len=50,
        )
    raise GenError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")


_FLOAT_FIELDS = {"burst_len_jitter", "phase_correlation", "intra_duty", "run_jitter"}


def spec_to_text(spec: GenSpec) -> str:
    """Render a GenSpec as a key=value config file."""
    lines = []
    for f in fields(spec):
        v = getattr(spec, f.name)
        if f.name == "shared_target_ids":
            v = ",".join(str(t) for t in v)
        elif f.name == "critical_stream_pairs":
            v = ";".join(f"{i}:{t}" for i, t in v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


def spec_from_text(text: str) -> GenSpec:
    """Parse the key=value config format written by spec_to_text.

    Unknown keys and malformed lines raise GenError; omitted keys take
    the GenSpec defaults (required fields must appear).
    """
    by_name = {f.name: f for f in fields(GenSpec)}
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise GenError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in by_name:
            raise GenError(f"line {lineno}: unknown key {key!r}")
        try:
            if key == "shared_target_ids":
                values[key] = tuple(
                    int(t) for t in val.replace(";", ",").split(",") if t.strip()
                )
            elif key == "critical_stream_pairs":
                pairs = []
                for chunk in val.split(";"):
                    chunk = chunk.strip()
                    if not chunk:
                        continue
                    a, _, b = chunk.partition(":")
                    pairs.append((int(a), int(b)))
                values[key] = tuple(pairs)
            elif key in _FLOAT_FIELDS:
                values[key] = float(val)
            else:
                values[key] = int(val)
        except ValueError as exc:
            raise GenError(f"line {lineno}: bad value for {key}: {val!r}") from exc
    required = [
        f.name for f in fields(GenSpec) if f.default is MISSING and f.name not in values
    ]
    if required:
        raise GenError(f"missing required keys: {', '.join(required)}")
    return GenSpec(**values)


def with_seed(spec: GenSpec, seed: int) -> GenSpec:
    return replace(spec, seed=seed)
