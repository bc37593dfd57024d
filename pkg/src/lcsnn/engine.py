"""Simulation engine: the three-phase per-sample loop, layer-wise training,
group-vote decoding, and checkpointing.

Topology and timing
-------------------
A network is input pixels -> locally connected feature layer -> dense
decoding layer, with static lateral inhibition inside each spiking layer.
Within one clock tick the feedforward sweep is instantaneous (input spikes
drive feature neurons, whose spikes drive decoder neurons in the same
tick) while lateral inhibition acts with a one-tick delay, since all
neurons of a layer update simultaneously.

Each sample is presented as one continuous Poisson stream split into
three phases: an adaptation period that lets the winner-take-all
competition settle, a decision period whose decoder spike counts elect
the predicted class by group vote, and a learning period during which the
plastic connection is updated.  Weights never change outside the learning
period.  Membrane potentials and refractory counters are reset between
samples; the adaptive threshold offsets persist across samples during
training (they are the slow homeostatic variable) and are left untouched
by evaluation, which runs every sample from a private copy of the state.

Feature-layer training (`stdp_lc` mode) simulates only the learning
period: unmodulated trace updates every tick, followed by renormalizing
each neuron's incoming weights.  Decoder training (`rstdp_decoder` mode)
runs all three phases; the modulation scalar is computed once from the
decision's validity right after the decision period and is applied to
every learning-period tick.

Determinism
-----------
Every stochastic choice flows from one run seed through
:func:`sample_rng`, which derives an independent, index-addressable
stream per (stage, sample).  Given (seed, configuration, dataset), every
spike, decision, and weight is reproducible bit for bit.  A frozen
network may be shared across evaluation workers; a training network is
owned by exactly one sequential run.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt
from .encoding import EncoderParams, encode
from .monitors import RunMetrics
from .neurons import NeuronParams, make_state, step
from .plasticity import (
    PlasticityParams,
    apply_rstdp,
    apply_stdp,
    eligibility,
    lc_eligibility,
    make_traces,
    normalize_incoming,
    update_traces,
)
from .reward import RewardState, compute_reward, modulate
from .topology import (
    DenseConnection,
    InhibitionMask,
    LcShape,
    LocalConnection,
    build_decoder_inhibition,
    build_lc_inhibition,
    count_parameters,
    make_dense_connection,
    make_local_connection,
)

MODE_NONE = "none"
MODE_STDP_LC = "stdp_lc"
MODE_RSTDP_DECODER = "rstdp_decoder"

# rng stages; see sample_rng
STAGE_INIT = 0
STAGE_LC = 1
STAGE_DECODER = 2
STAGE_EVAL = 3
STAGE_FEATURES = 4
STAGE_MODEL = 5
STAGE_XOR = 6


class EngineError(RuntimeError):
    """Raised when a run is requested in an inconsistent configuration."""


def sample_rng(seed: int, stage: int, index: int = 0) -> np.random.Generator:
    """Independent generator for one (stage, sample) pair of a run.

    Derivation is fixed: the run seed is the entropy of a seed sequence
    spawned at key (stage, index), so streams never collide across stages
    or samples and any sample's stream can be reconstructed in isolation
    (which is what makes frozen-network evaluation order-independent).
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(stage, index)))


@dataclass(frozen=True)
class PhaseSchedule:
    """Phase durations in clock ticks."""

    t_adapt: int = 256
    t_dec: int = 256
    t_learn: int = 256

    def __post_init__(self) -> None:
        if self.t_adapt < 0 or self.t_dec < 0 or self.t_learn < 0:
            raise ValueError("phase durations must be non-negative")

    @property
    def total(self) -> int:
        return self.t_adapt + self.t_dec + self.t_learn


@dataclass
class Network:
    """Layers, connections, and the slow state that outlives single samples."""

    encoder: EncoderParams
    lc_params: NeuronParams
    lc_conn: LocalConnection
    lc_inhib: InhibitionMask
    dec_params: NeuronParams
    dec_conn: DenseConnection
    dec_inhib: InhibitionMask
    n_c: int
    lc_plasticity: PlasticityParams
    dec_plasticity: PlasticityParams
    lc_g: np.ndarray
    dec_g: np.ndarray

    def __post_init__(self) -> None:
        if self.n_c < 1 or self.dec_conn.n_post % self.n_c != 0:
            raise ValueError(
                f"class count {self.n_c} must divide decoder size {self.dec_conn.n_post}"
            )
        if self.dec_conn.n_pre != self.lc_conn.n_post:
            raise ValueError("decoder input size does not match feature layer size")

    @property
    def n_in(self) -> int:
        return self.lc_conn.n_pre

    @property
    def n_lc(self) -> int:
        return self.lc_conn.n_post

    @property
    def n_out(self) -> int:
        return self.dec_conn.n_post

    @property
    def group_size(self) -> int:
        return self.n_out // self.n_c

    def parameter_counts(self) -> tuple[int, int]:
        return count_parameters(self.lc_conn, self.dec_conn)


def build_network(
    *,
    h_in: int,
    w_in: int,
    ch_lc: int,
    k: int,
    s: int,
    n_out: int,
    n_c: int,
    seed: int,
    encoder: EncoderParams | None = None,
    lc_params: NeuronParams | None = None,
    dec_params: NeuronParams | None = None,
    lc_plasticity: PlasticityParams | None = None,
    dec_plasticity: PlasticityParams | None = None,
    w_inh: float = -100.0,
    dec_within_group: bool = False,
) -> Network:
    """Assemble a network with uniformly random plastic weights.

    The feature layer is adaptive, the decoder is plain LIF unless
    overridden via ``dec_params``.  Weight initialization draws the local
    filters first, then the dense decoder, from the run's init stream.

    The default decoder parameters reflect the calibrated operating
    point: a drive gain well above 1 (winner-take-all competition keeps
    feature-layer spikes sparse relative to the threshold gap) and an
    asymmetric trace window (a symmetric one cancels potentiation against
    depression in expectation, leaving the reward nothing to modulate).
    """
    shape = LcShape(h_in=h_in, w_in=w_in, ch_out=ch_lc, k=k, s=s)
    rng = sample_rng(seed, STAGE_INIT)
    lc_conn = make_local_connection(shape, rng)
    dec_conn = make_dense_connection(shape.n_post, n_out, rng)
    if lc_params is None:
        lc_params = NeuronParams(adaptive=True)
    if dec_params is None:
        dec_params = NeuronParams(adaptive=False, r_mem=8.0)
    if lc_plasticity is None:
        lc_plasticity = PlasticityParams(eta_pre=0.0001, eta_post=0.01, c_norm=0.25)
    if dec_plasticity is None:
        dec_plasticity = PlasticityParams(eta_pre=0.1, eta_post=0.1, tau_minus=10.0)
    return Network(
        encoder=encoder or EncoderParams(),
        lc_params=lc_params,
        lc_conn=lc_conn,
        lc_inhib=build_lc_inhibition(shape, w_inh),
        dec_params=dec_params,
        dec_conn=dec_conn,
        dec_inhib=build_decoder_inhibition(n_out, n_c, w_inh, within_group=dec_within_group),
        n_c=n_c,
        lc_plasticity=lc_plasticity,
        dec_plasticity=dec_plasticity,
        lc_g=np.zeros(shape.n_post, dtype=np.float64),
        dec_g=np.zeros(n_out, dtype=np.float64),
    )


@dataclass
class SampleResult:
    group_counts: np.ndarray | None
    decision: int | None
    reward: float
    modulation: float
    lc_activation: np.ndarray | None = None


def decide(group_counts: np.ndarray, rng: np.random.Generator) -> int:
    """Most active group wins; exact ties are broken uniformly at random.

    The generator is consumed only when there actually is a tie, so
    unambiguous decisions cost no randomness.
    """
    counts = np.asarray(group_counts)
    tied = np.flatnonzero(counts == counts.max())
    if tied.size == 1:
        return int(tied[0])
    return int(tied[rng.integers(tied.size)])


def run_sample(
    net: Network,
    image: np.ndarray,
    schedule: PhaseSchedule,
    rng: np.random.Generator,
    mode: str = MODE_NONE,
    dt: float = 1.0,
    target: int | None = None,
    reward_state: RewardState | None = None,
    collect_lc_activation: bool = False,
    on_step=None,
) -> SampleResult:
    """Present one image for a full phase schedule and return the outcome.

    ``mode`` selects which connection may learn: ``"none"`` leaves all
    weights bit-identical (pure evaluation), ``"stdp_lc"`` trains the
    feature filters unsupervised over just the learning period, and
    ``"rstdp_decoder"`` runs all three phases and updates the decoder with
    the reward-modulated rule (requires ``target`` and ``reward_state``).
    ``on_step(t, net)`` is called after every tick, for monitoring.
    """
    if mode == MODE_STDP_LC:
        if not net.lc_conn.plastic:
            raise EngineError("stdp_lc mode requires a plastic feature connection")
        if net.dec_conn.plastic:
            raise EngineError("stdp_lc mode requires a frozen decoder (layer-wise training)")
        return _run_lc_sample(net, image, schedule, rng, dt, on_step)
    if mode == MODE_RSTDP_DECODER:
        if not net.dec_conn.plastic:
            raise EngineError("rstdp_decoder mode requires a plastic decoder connection")
        if net.lc_conn.plastic:
            raise EngineError("rstdp_decoder mode requires frozen feature filters")
        if target is None or reward_state is None:
            raise EngineError("rstdp_decoder mode needs a target label and a reward state")
        if schedule.t_dec < 1:
            raise EngineError("decoder training needs a decision period")
    elif mode != MODE_NONE:
        raise EngineError(f"unknown plasticity mode {mode!r}")

    learning = mode == MODE_RSTDP_DECODER
    spikes_in = encode(image, schedule.total, dt, rng, net.encoder)

    lc_state = make_state(net.n_lc, net.lc_params)
    lc_state.g[:] = net.lc_g
    dec_state = make_state(net.n_out, net.dec_params)
    dec_state.g[:] = net.dec_g
    traces = make_traces(net.n_lc, net.n_out) if learning else None

    lc_prev = np.zeros(net.n_lc, dtype=bool)
    dec_prev = np.zeros(net.n_out, dtype=bool)
    group_counts = np.zeros(net.n_c, dtype=np.int64)
    lc_counts = np.zeros(net.n_lc, dtype=np.int64) if collect_lc_activation else None

    r_lc = net.lc_params.r_mem
    r_dec = net.dec_params.r_mem
    decision: int | None = None
    reward_value = 0.0
    m = 0.0
    dec_window_end = schedule.t_adapt + schedule.t_dec

    for t in range(schedule.total):
        x = spikes_in[t]
        lc_drive = net.lc_conn.forward(x) + net.lc_inhib.drive(lc_prev)
        if r_lc != 1.0:
            lc_drive *= r_lc
        lc_spikes = step(lc_state, net.lc_params, lc_drive, dt)

        dec_drive = net.dec_conn.forward(lc_spikes) + net.dec_inhib.drive(dec_prev)
        if r_dec != 1.0:
            dec_drive *= r_dec
        dec_spikes = step(dec_state, net.dec_params, dec_drive, dt)

        if schedule.t_adapt <= t < dec_window_end:
            group_counts += dec_spikes.reshape(net.n_c, net.group_size).sum(axis=1)
            if lc_counts is not None:
                lc_counts += lc_spikes
            if t == dec_window_end - 1:
                decision = decide(group_counts, rng)
                if learning:
                    r = compute_reward(decision, target)
                    reward_value = float(r)
                    m = modulate(reward_state, r)

        if learning:
            update_traces(traces, lc_spikes, dec_spikes, net.dec_plasticity, dt)
            if t >= dec_window_end:
                xi = eligibility(traces, lc_spikes, dec_spikes)
                net.dec_conn.weights = apply_rstdp(net.dec_conn.weights, xi, m, net.dec_plasticity)

        lc_prev = lc_spikes
        dec_prev = dec_spikes
        if on_step is not None:
            on_step(t, net)

    if learning:
        # adaptation is part of training; evaluation leaves it untouched
        net.lc_g = lc_state.g
        net.dec_g = dec_state.g
    return SampleResult(
        group_counts=group_counts,
        decision=decision,
        reward=reward_value,
        modulation=m,
        lc_activation=lc_counts,
    )


def _run_lc_sample(
    net: Network,
    image: np.ndarray,
    schedule: PhaseSchedule,
    rng: np.random.Generator,
    dt: float,
    on_step=None,
) -> SampleResult:
    """Unsupervised feature training: the learning period only, with the
    decoder left out of the loop entirely."""
    spikes_in = encode(image, schedule.t_learn, dt, rng, net.encoder)
    lc_state = make_state(net.n_lc, net.lc_params)
    lc_state.g[:] = net.lc_g
    traces = make_traces(net.n_in, net.n_lc)
    lc_prev = np.zeros(net.n_lc, dtype=bool)
    r_lc = net.lc_params.r_mem
    params = net.lc_plasticity

    for t in range(schedule.t_learn):
        x = spikes_in[t]
        lc_drive = net.lc_conn.forward(x) + net.lc_inhib.drive(lc_prev)
        if r_lc != 1.0:
            lc_drive *= r_lc
        lc_spikes = step(lc_state, net.lc_params, lc_drive, dt)
        update_traces(traces, x, lc_spikes, params, dt)
        xi = lc_eligibility(net.lc_conn, traces, x, lc_spikes)
        net.lc_conn.weights = apply_stdp(net.lc_conn.weights, xi, params)
        if params.c_norm is not None:
            normalize_incoming(net.lc_conn, params.c_norm, params.w_max)
        lc_prev = lc_spikes
        if on_step is not None:
            on_step(t, net)

    net.lc_g = lc_state.g
    return SampleResult(group_counts=None, decision=None, reward=0.0, modulation=0.0)


def train_lc(
    net: Network,
    dataset,
    n_samples: int,
    schedule: PhaseSchedule,
    seed: int,
    window: int = 100,
) -> list[float]:
    """Unsupervised pass over ``n_samples`` images (labels are never read).

    Returns the weight-change norm of each ``window``-sample block, a
    cheap convergence monitor.
    """
    if not net.lc_conn.plastic or net.dec_conn.plastic:
        raise EngineError("train_lc expects a plastic feature layer and a frozen decoder")
    norms: list[float] = []
    w_ref = net.lc_conn.weights.copy()
    for i in range(n_samples):
        image = dataset.images[i % len(dataset)]
        run_sample(net, image, schedule, sample_rng(seed, STAGE_LC, i), mode=MODE_STDP_LC)
        if (i + 1) % window == 0:
            norms.append(float(np.linalg.norm(net.lc_conn.weights - w_ref)))
            w_ref = net.lc_conn.weights.copy()
    return norms


def train_decoder(
    net: Network,
    dataset,
    n_samples: int,
    schedule: PhaseSchedule,
    reward_state: RewardState,
    seed: int,
    target_for=None,
    window: int = 100,
) -> RunMetrics:
    """Reward-modulated decoder training over ``n_samples`` presentations.

    Targets come from the dataset labels unless ``target_for(i)`` is
    given (the conditioning protocol fixes the rewarded class regardless
    of the input).  Only the decision's validity ever feeds back into the
    network.
    """
    if not net.dec_conn.plastic or net.lc_conn.plastic:
        raise EngineError("train_decoder expects a frozen feature layer and a plastic decoder")
    metrics = RunMetrics(window=window)
    for i in range(n_samples):
        idx = i % len(dataset)
        target = int(target_for(i)) if target_for is not None else int(dataset.labels[idx])
        res = run_sample(
            net,
            dataset.images[idx],
            schedule,
            sample_rng(seed, STAGE_DECODER, i),
            mode=MODE_RSTDP_DECODER,
            target=target,
            reward_state=reward_state,
        )
        metrics.add(res.reward, res.modulation, res.reward > 0)
    return metrics


def evaluate(
    net: Network,
    dataset,
    schedule: PhaseSchedule,
    seed: int,
    n_samples: int | None = None,
) -> tuple[float, np.ndarray]:
    """Fraction of samples whose group vote matches the label.

    All connections must be frozen.  The learning period is skipped (it
    cannot influence the decision), and nothing in the network is
    mutated, so repeated evaluation from the same seed is bit-identical.
    """
    if net.lc_conn.plastic or net.dec_conn.plastic:
        raise EngineError("evaluate expects all connections frozen")
    if schedule.t_dec < 1:
        raise EngineError("evaluation needs a decision period")
    eval_schedule = PhaseSchedule(schedule.t_adapt, schedule.t_dec, 0)
    n = len(dataset) if n_samples is None else min(n_samples, len(dataset))
    decisions = np.empty(n, dtype=np.int64)
    correct = 0
    for i in range(n):
        res = run_sample(
            net, dataset.images[i], eval_schedule, sample_rng(seed, STAGE_EVAL, i)
        )
        decisions[i] = res.decision
        if res.decision == int(dataset.labels[i]):
            correct += 1
    return correct / n if n else 0.0, decisions


# --- checkpointing ---------------------------------------------------------


def _neuron_params_to_vec(p: NeuronParams) -> np.ndarray:
    return np.array(
        [p.u_rest, p.u_reset, p.u_thr0, p.tau_m, p.r_mem, p.delta_t_ref, p.g0, p.tau_g,
         float(p.adaptive)]
    )


def _neuron_params_from_vec(v: np.ndarray) -> NeuronParams:
    return NeuronParams(
        u_rest=v[0], u_reset=v[1], u_thr0=v[2], tau_m=v[3], r_mem=v[4],
        delta_t_ref=v[5], g0=v[6], tau_g=v[7], adaptive=bool(v[8]),
    )


def _plasticity_to_vec(p: PlasticityParams) -> np.ndarray:
    return np.array(
        [p.eta_pre, p.eta_post, p.tau_plus, p.tau_minus, p.gamma, p.w_min, p.w_max,
         np.nan if p.c_norm is None else p.c_norm]
    )


def _plasticity_from_vec(v: np.ndarray) -> PlasticityParams:
    return PlasticityParams(
        eta_pre=v[0], eta_post=v[1], tau_plus=v[2], tau_minus=v[3], gamma=v[4],
        w_min=v[5], w_max=v[6], c_norm=None if np.isnan(v[7]) else float(v[7]),
    )


def network_to_arrays(net: Network) -> dict[str, np.ndarray]:
    sh = net.lc_conn.shape
    return {
        "lc_shape": np.array([sh.h_in, sh.w_in, sh.ch_out, sh.k, sh.s], dtype=np.float64),
        "layout": np.array(
            [net.n_out, net.n_c, float(net.dec_inhib.scope == "all"),
             float(net.lc_conn.plastic), float(net.dec_conn.plastic)]
        ),
        "inhibition": np.array([net.lc_inhib.w_inh, net.dec_inhib.w_inh]),
        "encoder": np.array([net.encoder.f_max, net.encoder.intensity_max]),
        "lc_neurons": _neuron_params_to_vec(net.lc_params),
        "dec_neurons": _neuron_params_to_vec(net.dec_params),
        "lc_plasticity": _plasticity_to_vec(net.lc_plasticity),
        "dec_plasticity": _plasticity_to_vec(net.dec_plasticity),
        "lc_weights": net.lc_conn.weights,
        "dec_weights": net.dec_conn.weights,
        "lc_g": net.lc_g,
        "dec_g": net.dec_g,
    }


def network_from_arrays(arrays: dict[str, np.ndarray]) -> Network:
    try:
        h_in, w_in, ch_out, k, s = (int(v) for v in arrays["lc_shape"])
        n_out, n_c, within, lc_plastic, dec_plastic = arrays["layout"]
        shape = LcShape(h_in=h_in, w_in=w_in, ch_out=ch_out, k=k, s=s)
        lc_conn = LocalConnection(
            shape=shape, weights=arrays["lc_weights"].copy(), plastic=bool(lc_plastic)
        )
        dec_conn = DenseConnection(
            weights=arrays["dec_weights"].copy(), plastic=bool(dec_plastic)
        )
        w_inh_lc, w_inh_dec = arrays["inhibition"]
        enc = arrays["encoder"]
        return Network(
            encoder=EncoderParams(f_max=float(enc[0]), intensity_max=float(enc[1])),
            lc_params=_neuron_params_from_vec(arrays["lc_neurons"]),
            lc_conn=lc_conn,
            lc_inhib=build_lc_inhibition(shape, float(w_inh_lc)),
            dec_params=_neuron_params_from_vec(arrays["dec_neurons"]),
            dec_conn=dec_conn,
            dec_inhib=build_decoder_inhibition(
                int(n_out), int(n_c), float(w_inh_dec), within_group=bool(within)
            ),
            n_c=int(n_c),
            lc_plasticity=_plasticity_from_vec(arrays["lc_plasticity"]),
            dec_plasticity=_plasticity_from_vec(arrays["dec_plasticity"]),
            lc_g=arrays["lc_g"].copy(),
            dec_g=arrays["dec_g"].copy(),
        )
    except KeyError as e:
        raise ckpt.CheckpointError(f"checkpoint is missing array {e.args[0]!r}") from e
    except ValueError as e:
        raise ckpt.CheckpointError(f"inconsistent checkpoint contents: {e}") from e


def checkpoint_save(net: Network, path: str | Path) -> None:
    ckpt.save_arrays(path, network_to_arrays(net))


def checkpoint_load(path: str | Path) -> Network:
    return network_from_arrays(ckpt.load_arrays(path))
