"""Recurrent architecture controller trained with REINFORCE.

The policy conditions on the previous architecture and the measured
distribution shift, then emits one architecture autoregressively: for
each unit a depth token, then kernel and expansion tokens for each active
layer. Conditioning path:

    one-hot(prev arch) -> two-layer FC encoder -> arch embedding
    d_t -> log bucket -> learned shift embedding
    concat -> tanh projection -> initial hidden state of a GRU cell

Each decision reads a linear head off the hidden state; the chosen
token's embedding is the next GRU input. Training maximizes

    (R - b) * log pi(traj) + w_e * H(traj) - wd * ||theta||^2 / 2

by reverse-mode gradients written out by hand (numpy only), applied with
Adam by default or plain gradient ascent when ``use_adam`` is off. R is the
accuracy improvement minus a shift-scaled MAdds penalty, b an optional
exponential moving average baseline.

All parameter arrays live in a ControllerParams dict in a fixed order;
``save_params`` writes them as a little-endian binary blob (magic "AXPT",
u32 version, then u64-length-prefixed float64 arrays in that order).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .datagen import SnapshotMeta
from .errors import (
    DivisionByZeroShift,
    InvalidConfig,
    InvalidData,
    InvalidToken,
    NumericalError,
)
from .evaluator import Evaluator
from .search_space import Architecture, SpaceConfig, madds

__all__ = [
    "TrainerConfig",
    "ControllerParams",
    "PolicyState",
    "Decision",
    "Trajectory",
    "TrainerState",
    "TraceRow",
    "init_params",
    "arch_onehot",
    "bucket_index",
    "default_bucket_edges",
    "embed_state",
    "sample",
    "score",
    "greedy_decode",
    "reward",
    "objective_value",
    "objective_gradients",
    "reinforce_step",
    "train",
    "save_params",
    "load_params",
    "write_trace",
]

_MAGIC = b"AXPT"
_VERSION = 1

_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8


@dataclass(frozen=True)
class TrainerConfig:
    """Training hyperparameters plus controller layout.

    Defaults follow the reference training recipe (Adam at 2e-4, weight
    decay 5e-4, entropy bonus 2e-4). ``use_baseline=False`` together with
    ``use_adam=False`` gives the literal update theta += lr * R * grad.
    """

    learning_rate: float = 2e-4
    weight_decay: float = 5e-4
    iterations: int = 6000
    entropy_weight: float = 2e-4
    lam: float = 2.5e-4
    baseline_decay: float = 0.95
    use_baseline: bool = True
    use_adam: bool = True
    batch_size: int = 1
    bucket_count: int = 8
    bucket_edges: tuple[float, ...] | None = None
    hidden_size: int = 64
    encoder_hidden: int = 64
    arch_embed_dim: int = 32
    shift_embed_dim: int = 16
    token_embed_dim: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise InvalidConfig(f"learning_rate must be positive, got {self.learning_rate}")
        if self.iterations < 1 or self.batch_size < 1:
            raise InvalidConfig("iterations and batch_size must be >= 1")
        if self.weight_decay < 0 or self.entropy_weight < 0 or self.lam < 0:
            raise InvalidConfig("weight_decay, entropy_weight and lam must be >= 0")
        if not (0.0 <= self.baseline_decay < 1.0):
            raise InvalidConfig(f"baseline_decay must lie in [0, 1), got {self.baseline_decay}")
        if self.bucket_count < 1:
            raise InvalidConfig(f"bucket_count must be >= 1, got {self.bucket_count}")
        for name in (
            "hidden_size",
            "encoder_hidden",
            "arch_embed_dim",
            "shift_embed_dim",
            "token_embed_dim",
        ):
            if getattr(self, name) < 1:
                raise InvalidConfig(f"{name} must be >= 1")
        if self.bucket_edges is not None:
            edges = tuple(float(e) for e in self.bucket_edges)
            if len(edges) != self.bucket_count - 1:
                raise InvalidConfig(
                    f"need {self.bucket_count - 1} bucket edges, got {len(edges)}"
                )
            if any(b <= a for a, b in zip(edges, edges[1:])):
                raise InvalidConfig(f"bucket edges must be strictly increasing: {edges}")
            object.__setattr__(self, "bucket_edges", edges)


def default_bucket_edges(bucket_count: int) -> tuple[float, ...]:
    """Log-spaced fallback edges covering shifts from 1e-3 to 1e3."""
    if bucket_count < 2:
        return ()
    return tuple(np.logspace(-3.0, 3.0, bucket_count - 1))


@dataclass
class ControllerParams:
    """Named parameter arrays in the fixed serialization order."""

    space: SpaceConfig
    arrays: dict[str, np.ndarray]

    def copy(self) -> "ControllerParams":
        return ControllerParams(
            space=self.space,
            arrays={k: v.copy() for k, v in self.arrays.items()},
        )

    def l2_norm_sq(self) -> float:
        return float(sum(np.sum(a * a) for a in self.arrays.values()))


def _onehot_length(space: SpaceConfig) -> int:
    d_max = space.depth_choices[-1]
    per_unit = (
        len(space.depth_choices)
        + d_max * (len(space.kernel_choices) + 1)
        + d_max * (len(space.expansion_choices) + 1)
    )
    return space.n_units * per_unit


def init_params(space: SpaceConfig, cfg: TrainerConfig, seed: int = 0) -> ControllerParams:
    """Fresh parameters, uniform in [-0.1, 0.1]; shapes depend only on config."""
    rng = np.random.default_rng(seed)
    n_d = len(space.depth_choices)
    n_k = len(space.kernel_choices)
    n_e = len(space.expansion_choices)
    length = _onehot_length(space)
    h, eh = cfg.hidden_size, cfg.encoder_hidden
    a, s, x = cfg.arch_embed_dim, cfg.shift_embed_dim, cfg.token_embed_dim

    shapes = [
        ("enc_w1", (eh, length)),
        ("enc_b1", (eh,)),
        ("enc_w2", (a, eh)),
        ("enc_b2", (a,)),
        ("shift_emb", (cfg.bucket_count, s)),
        ("init_w", (h, a + s)),
        ("init_b", (h,)),
        ("start_emb", (x,)),
        ("depth_emb", (n_d, x)),
        ("kernel_emb", (n_k, x)),
        ("expansion_emb", (n_e, x)),
        ("gru_wr", (h, x)),
        ("gru_ur", (h, h)),
        ("gru_br", (h,)),
        ("gru_wz", (h, x)),
        ("gru_uz", (h, h)),
        ("gru_bz", (h,)),
        ("gru_wn", (h, x)),
        ("gru_un", (h, h)),
        ("gru_bn", (h,)),
        ("head_depth_w", (n_d, h)),
        ("head_depth_b", (n_d,)),
        ("head_kernel_w", (n_k, h)),
        ("head_kernel_b", (n_k,)),
        ("head_expansion_w", (n_e, h)),
        ("head_expansion_b", (n_e,)),
    ]
    arrays = {name: rng.uniform(-0.1, 0.1, size=shape) for name, shape in shapes}
    return ControllerParams(space=space, arrays=arrays)


def arch_onehot(arch: Architecture, space: SpaceConfig) -> np.ndarray:
    """Flat one-hot token encoding; absent layers use an explicit off slot."""
    if len(arch.units) != space.n_units:
        raise InvalidToken(f"architecture has {len(arch.units)} units, space wants {space.n_units}")
    d_max = space.depth_choices[-1]
    parts = []
    for unit in arch.units:
        depth_vec = np.zeros(len(space.depth_choices))
        try:
            depth_vec[space.depth_choices.index(len(unit))] = 1.0
        except ValueError:
            raise InvalidToken(f"depth {len(unit)} not in {space.depth_choices}") from None
        parts.append(depth_vec)
        for slot in range(d_max):
            k_vec = np.zeros(len(space.kernel_choices) + 1)
            e_vec = np.zeros(len(space.expansion_choices) + 1)
            if slot < len(unit):
                k, e = unit[slot]
                try:
                    k_vec[space.kernel_choices.index(k)] = 1.0
                    e_vec[space.expansion_choices.index(e)] = 1.0
                except ValueError:
                    raise InvalidToken(f"token k{k}e{e} outside choice sets") from None
            else:
                k_vec[-1] = 1.0
                e_vec[-1] = 1.0
            parts.append(k_vec)
            parts.append(e_vec)
    return np.concatenate(parts)


def bucket_index(shift: float, cfg: TrainerConfig) -> int:
    """Bucket of a shift value; out-of-range shifts clamp to the end buckets."""
    edges = cfg.bucket_edges if cfg.bucket_edges is not None else default_bucket_edges(cfg.bucket_count)
    return int(np.searchsorted(np.asarray(edges), shift, side="left"))


@dataclass(frozen=True)
class PolicyState:
    """Embedded conditioning state plus the raw inputs it came from."""

    vector: np.ndarray
    prev_arch: Architecture
    shift: float
    bucket: int


def embed_state(
    params: ControllerParams,
    prev_arch: Architecture,
    shift: float,
    cfg: TrainerConfig,
) -> PolicyState:
    """Concatenate the encoded previous architecture with the shift embedding."""
    if not np.isfinite(shift) or shift < 0:
        raise InvalidData(f"shift must be finite and nonnegative, got {shift}")
    p = params.arrays
    onehot = arch_onehot(prev_arch, params.space)
    e1 = np.tanh(p["enc_w1"] @ onehot + p["enc_b1"])
    arch_emb = p["enc_w2"] @ e1 + p["enc_b2"]
    bucket = bucket_index(shift, cfg)
    vector = np.concatenate([arch_emb, p["shift_emb"][bucket]])
    return PolicyState(vector=vector, prev_arch=prev_arch, shift=float(shift), bucket=bucket)


@dataclass(frozen=True)
class Decision:
    decision_id: str
    kind: str
    choice: int
    log_prob: float
    entropy: float


@dataclass(frozen=True)
class Trajectory:
    arch: Architecture
    decisions: tuple[Decision, ...]
    log_prob: float
    entropy: float
    prev_arch: Architecture
    shift: float


@dataclass
class TrainerState:
    """Optimizer state carried across reinforce steps."""

    step: int = 0
    baseline: float | None = None
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def _softmax_logprobs(logits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    z = logits - np.max(logits)
    logp = z - np.log(np.sum(np.exp(z)))
    return np.exp(logp), logp


_KIND_HEAD = {"depth": "head_depth", "kernel": "head_kernel", "expansion": "head_expansion"}
_KIND_EMB = {"depth": "depth_emb", "kernel": "kernel_emb", "expansion": "expansion_emb"}


def _forward(
    params: ControllerParams,
    pstate: PolicyState,
    actions: list[int] | None = None,
    rng: np.random.Generator | None = None,
    greedy: bool = False,
):
    """One pass over the decision sequence.

    actions given: teacher-forced scoring of that choice sequence.
    greedy: argmax decoding (ties go to the lowest index via argmax).
    otherwise: ancestral sampling with rng.

    Returns (decisions, units, cache); the cache holds everything the
    backward pass needs.
    """
    p = params.arrays
    space = params.space

    onehot = arch_onehot(pstate.prev_arch, space)
    e1 = np.tanh(p["enc_w1"] @ onehot + p["enc_b1"])
    arch_emb = p["enc_w2"] @ e1 + p["enc_b2"]
    state_vec = np.concatenate([arch_emb, p["shift_emb"][pstate.bucket]])
    h = np.tanh(p["init_w"] @ state_vec + p["init_b"])

    cache = {
        "onehot": onehot,
        "e1": e1,
        "state_vec": state_vec,
        "h0": h,
        "bucket": pstate.bucket,
        "steps": [],
    }

    x = p["start_emb"]
    x_source = ("start", 0)
    decisions: list[Decision] = []
    units: list[tuple[tuple[int, int], ...]] = []
    cursor = 0

    def consume(kind: str, decision_id: str) -> int:
        nonlocal h, x, x_source, cursor
        h_prev = h
        unh = p["gru_un"] @ h_prev
        r = 1.0 / (1.0 + np.exp(-(p["gru_wr"] @ x + p["gru_ur"] @ h_prev + p["gru_br"])))
        z = 1.0 / (1.0 + np.exp(-(p["gru_wz"] @ x + p["gru_uz"] @ h_prev + p["gru_bz"])))
        n = np.tanh(p["gru_wn"] @ x + r * unh + p["gru_bn"])
        h = (1.0 - z) * h_prev + z * n

        head = _KIND_HEAD[kind]
        logits = p[head + "_w"] @ h + p[head + "_b"]
        probs, logp = _softmax_logprobs(logits)
        if actions is not None:
            choice = actions[cursor]
        elif greedy:
            choice = int(np.argmax(logits))
        else:
            choice = int(rng.choice(logits.size, p=probs / probs.sum()))
        entropy = float(-np.sum(probs * logp))
        decisions.append(
            Decision(decision_id, kind, choice, float(logp[choice]), entropy)
        )
        cache["steps"].append(
            {
                "kind": kind,
                "x": x,
                "x_source": x_source,
                "h_prev": h_prev,
                "unh": unh,
                "r": r,
                "z": z,
                "n": n,
                "h": h,
                "probs": probs,
                "logp": logp,
                "choice": choice,
                "entropy": entropy,
            }
        )
        x = p[_KIND_EMB[kind]][choice]
        x_source = (kind, choice)
        cursor += 1
        return choice

    for u in range(space.n_units):
        d_idx = consume("depth", f"u{u}.depth")
        depth = space.depth_choices[d_idx]
        layers = []
        for layer in range(depth):
            k_idx = consume("kernel", f"u{u}.l{layer}.kernel")
            e_idx = consume("expansion", f"u{u}.l{layer}.expansion")
            layers.append((space.kernel_choices[k_idx], space.expansion_choices[e_idx]))
        units.append(tuple(layers))

    return decisions, units, cache


def _actions_for(arch: Architecture, space: SpaceConfig) -> list[int]:
    """Choice-index sequence that deterministically reproduces arch."""
    actions = []
    if len(arch.units) != space.n_units:
        raise InvalidToken(f"architecture has {len(arch.units)} units, space wants {space.n_units}")
    for unit in arch.units:
        try:
            actions.append(space.depth_choices.index(len(unit)))
            for k, e in unit:
                actions.append(space.kernel_choices.index(k))
                actions.append(space.expansion_choices.index(e))
        except ValueError as exc:
            raise InvalidToken(f"architecture not in space: {exc}") from None
    return actions


def _make_trajectory(decisions, units, pstate: PolicyState) -> Trajectory:
    return Trajectory(
        arch=Architecture(units=tuple(units)),
        decisions=tuple(decisions),
        log_prob=float(sum(d.log_prob for d in decisions)),
        entropy=float(sum(d.entropy for d in decisions)),
        prev_arch=pstate.prev_arch,
        shift=pstate.shift,
    )


def sample(params: ControllerParams, pstate: PolicyState, rng: np.random.Generator) -> Trajectory:
    """Draw one architecture from the current policy."""
    decisions, units, _ = _forward(params, pstate, rng=rng)
    return _make_trajectory(decisions, units, pstate)


def score(params: ControllerParams, pstate: PolicyState, arch: Architecture) -> Trajectory:
    """Teacher-forced log-probability of producing a given architecture."""
    actions = _actions_for(arch, params.space)
    decisions, units, _ = _forward(params, pstate, actions=actions)
    traj = _make_trajectory(decisions, units, pstate)
    assert traj.arch == arch
    return traj


def greedy_decode(params: ControllerParams, pstate: PolicyState) -> Architecture:
    """Argmax decoding; equal logits resolve to the lowest choice index."""
    _, units, _ = _forward(params, pstate, greedy=True)
    return Architecture(units=tuple(units))


def reward(
    v_new: float,
    v_prev: float,
    c_new: float,
    c_prev: float,
    lam: float,
    shift: float,
) -> float:
    """Accuracy gain minus the shift-scaled cost increase.

    R = (v_new - v_prev) - (lam / shift) * (c_new - c_prev), with MAdds in
    raw millions. A larger shift relaxes the cost penalty. shift <= 0
    raises DivisionByZeroShift.
    """
    if shift <= 0.0:
        raise DivisionByZeroShift(f"shift must be positive, got {shift}")
    return (v_new - v_prev) - (lam / shift) * (c_new - c_prev)


def _zero_grads(params: ControllerParams) -> dict[str, np.ndarray]:
    return {k: np.zeros_like(v) for k, v in params.arrays.items()}


def _backward(
    params: ControllerParams,
    cache: dict,
    advantage: float,
    cfg: TrainerConfig,
) -> dict[str, np.ndarray]:
    """Gradients of advantage*logpi + w_e*entropy - wd*||theta||^2/2."""
    p = params.arrays
    g = _zero_grads(params)
    we = cfg.entropy_weight

    dh_next = np.zeros_like(cache["h0"])
    for step in reversed(cache["steps"]):
        probs, logp, choice = step["probs"], step["logp"], step["choice"]
        head = _KIND_HEAD[step["kind"]]
        # d/dlogits of logp[choice] is onehot - probs; of entropy is
        # -probs * (logp + H)
        dlogits = advantage * (-probs.copy())
        dlogits[choice] += advantage
        if we != 0.0:
            dlogits += we * (-probs * (logp + step["entropy"]))
        g[head + "_w"] += np.outer(dlogits, step["h"])
        g[head + "_b"] += dlogits
        dh = p[head + "_w"].T @ dlogits + dh_next

        h_prev, r, z, n, unh, x = (
            step["h_prev"],
            step["r"],
            step["z"],
            step["n"],
            step["unh"],
            step["x"],
        )
        dz = dh * (n - h_prev)
        dn = dh * z
        dh_prev = dh * (1.0 - z)

        da_n = dn * (1.0 - n * n)
        g["gru_wn"] += np.outer(da_n, x)
        g["gru_bn"] += da_n
        dx = p["gru_wn"].T @ da_n
        dr = da_n * unh
        dunh = da_n * r
        g["gru_un"] += np.outer(dunh, h_prev)
        dh_prev = dh_prev + p["gru_un"].T @ dunh

        da_r = dr * r * (1.0 - r)
        g["gru_wr"] += np.outer(da_r, x)
        g["gru_ur"] += np.outer(da_r, h_prev)
        g["gru_br"] += da_r
        dx += p["gru_wr"].T @ da_r
        dh_prev = dh_prev + p["gru_ur"].T @ da_r

        da_z = dz * z * (1.0 - z)
        g["gru_wz"] += np.outer(da_z, x)
        g["gru_uz"] += np.outer(da_z, h_prev)
        g["gru_bz"] += da_z
        dx += p["gru_wz"].T @ da_z
        dh_prev = dh_prev + p["gru_uz"].T @ da_z

        source_kind, source_idx = step["x_source"]
        if source_kind == "start":
            g["start_emb"] += dx
        else:
            g[_KIND_EMB[source_kind]][source_idx] += dx
        dh_next = dh_prev

    # into the initial state projection and the encoder
    h0 = cache["h0"]
    dh0pre = dh_next * (1.0 - h0 * h0)
    g["init_w"] += np.outer(dh0pre, cache["state_vec"])
    g["init_b"] += dh0pre
    dstate = p["init_w"].T @ dh0pre
    a_dim = p["enc_w2"].shape[0]
    darch_emb = dstate[:a_dim]
    g["shift_emb"][cache["bucket"]] += dstate[a_dim:]
    e1 = cache["e1"]
    g["enc_w2"] += np.outer(darch_emb, e1)
    g["enc_b2"] += darch_emb
    de1 = p["enc_w2"].T @ darch_emb
    de1pre = de1 * (1.0 - e1 * e1)
    g["enc_w1"] += np.outer(de1pre, cache["onehot"])
    g["enc_b1"] += de1pre

    if cfg.weight_decay != 0.0:
        for name, arr in p.items():
            g[name] -= cfg.weight_decay * arr
    return g


def _rebuild_state(params: ControllerParams, traj: Trajectory, cfg: TrainerConfig) -> PolicyState:
    return embed_state(params, traj.prev_arch, traj.shift, cfg)


def objective_value(
    params: ControllerParams,
    traj: Trajectory,
    advantage: float,
    cfg: TrainerConfig,
) -> float:
    """Scalar objective for the trajectory's fixed action sequence.

    Recomputed teacher-forced, so finite differences of this function
    validate the analytic gradients.
    """
    pstate = _rebuild_state(params, traj, cfg)
    rescored = score(params, pstate, traj.arch)
    value = advantage * rescored.log_prob + cfg.entropy_weight * rescored.entropy
    return value - 0.5 * cfg.weight_decay * params.l2_norm_sq()


def objective_gradients(
    params: ControllerParams,
    traj: Trajectory,
    advantage: float,
    cfg: TrainerConfig,
) -> dict[str, np.ndarray]:
    """Analytic gradients of objective_value w.r.t. every parameter array."""
    pstate = _rebuild_state(params, traj, cfg)
    actions = _actions_for(traj.arch, params.space)
    _, _, cache = _forward(params, pstate, actions=actions)
    return _backward(params, cache, advantage, cfg)


def _apply_update(
    params: ControllerParams,
    grads: dict[str, np.ndarray],
    cfg: TrainerConfig,
    state: TrainerState,
) -> None:
    """Ascend the objective; Adam moments live in the trainer state."""
    lr = cfg.learning_rate
    if not cfg.use_adam:
        for name, arr in params.arrays.items():
            arr += lr * grads[name]
        state.step += 1
        return
    if not state.m:
        state.m = _zero_grads(params)
        state.v = _zero_grads(params)
    state.step += 1
    t = state.step
    bias1 = 1.0 - _ADAM_BETA1**t
    bias2 = 1.0 - _ADAM_BETA2**t
    for name, arr in params.arrays.items():
        gradient = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= _ADAM_BETA1
        m += (1.0 - _ADAM_BETA1) * gradient
        v *= _ADAM_BETA2
        v += (1.0 - _ADAM_BETA2) * gradient * gradient
        arr += lr * (m / bias1) / (np.sqrt(v / bias2) + _ADAM_EPS)


def _advance_baseline(state: TrainerState, reward_value: float, cfg: TrainerConfig) -> float:
    """Return the advantage and update the moving average."""
    if not cfg.use_baseline:
        return reward_value
    if state.baseline is None:
        state.baseline = reward_value
    advantage = reward_value - state.baseline
    state.baseline = cfg.baseline_decay * state.baseline + (1.0 - cfg.baseline_decay) * reward_value
    return advantage


def reinforce_step(
    params: ControllerParams,
    traj: Trajectory,
    reward_value: float,
    cfg: TrainerConfig,
    state: TrainerState,
) -> tuple[ControllerParams, TrainerState]:
    """One policy-gradient update from a single sampled trajectory.

    Mutates params and state in place and returns them.
    """
    advantage = _advance_baseline(state, reward_value, cfg)
    grads = objective_gradients(params, traj, advantage, cfg)
    for key, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"non-finite gradient in {key!r}")
    _apply_update(params, grads, cfg, state)
    return params, state


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    reward: float
    entropy: float
    madds: float


def train(
    params: ControllerParams,
    prev_arch: Architecture,
    shift: float,
    meta: SnapshotMeta,
    evaluate: Evaluator,
    cfg: TrainerConfig,
) -> tuple[ControllerParams, list[TraceRow]]:
    """Run cfg.iterations REINFORCE updates for one adaptation round.

    Deterministic given cfg.seed. Each iteration samples batch_size
    trajectories (default 1), averages their gradients, and applies one
    update. Returns the trained params and the per-iteration trace.
    """
    space = params.space
    rng = np.random.default_rng(cfg.seed)
    state = TrainerState()
    v_prev = evaluate(prev_arch, meta)
    c_prev = madds(prev_arch, space)
    trace: list[TraceRow] = []

    for it in range(cfg.iterations):
        batch = []
        for _ in range(cfg.batch_size):
            pstate = embed_state(params, prev_arch, shift, cfg)
            decisions, units, cache = _forward(params, pstate, rng=rng)
            traj = _make_trajectory(decisions, units, pstate)
            v_new = evaluate(traj.arch, meta)
            c_new = madds(traj.arch, space)
            r = reward(v_new, v_prev, c_new, c_prev, cfg.lam, shift)
            batch.append((traj, cache, r, c_new))

        mean_reward = float(np.mean([b[2] for b in batch]))
        mean_advantage = _advance_baseline(state, mean_reward, cfg)
        baseline_used = mean_reward - mean_advantage
        grads = _zero_grads(params)
        for traj, cache, r, _ in batch:
            for name, arr in _backward(params, cache, r - baseline_used, cfg).items():
                grads[name] += arr
        if cfg.batch_size > 1:
            for arr in grads.values():
                arr /= cfg.batch_size
        _apply_update(params, grads, cfg, state)

        trace.append(
            TraceRow(
                iteration=it,
                reward=mean_reward,
                entropy=float(np.mean([b[0].entropy for b in batch])),
                madds=float(np.mean([b[3] for b in batch])),
            )
        )
    return params, trace


def write_trace(path, rows: list[TraceRow]) -> None:
    lines = ["iteration,reward,entropy,madds"]
    for row in rows:
        lines.append(f"{row.iteration},{row.reward!r},{row.entropy!r},{row.madds!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def save_params(params: ControllerParams, path) -> None:
    """Binary dump: magic, u32 version, then length-prefixed f64 arrays."""
    blob = bytearray()
    blob += _MAGIC
    blob += struct.pack("<I", _VERSION)
    for name in params.arrays:
        flat = np.ascontiguousarray(params.arrays[name], dtype="<f8").ravel()
        blob += struct.pack("<Q", flat.size)
        blob += flat.tobytes()
    Path(path).write_bytes(bytes(blob))


def load_params(path, space: SpaceConfig, cfg: TrainerConfig) -> ControllerParams:
    """Read arrays back into the shapes implied by (space, cfg)."""
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise InvalidData(f"bad magic {raw[:4]!r} in {path}")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != _VERSION:
        raise InvalidData(f"unsupported params version {version}")
    offset = 8
    template = init_params(space, cfg, seed=0)
    arrays = {}
    for name, ref in template.arrays.items():
        if offset + 8 > len(raw):
            raise InvalidData(f"truncated params file {path} at array {name}")
        (count,) = struct.unpack_from("<Q", raw, offset)
        offset += 8
        if count != ref.size:
            raise InvalidData(
                f"array {name} has {count} values, config implies {ref.size}"
            )
        end = offset + 8 * count
        if end > len(raw):
            raise InvalidData(f"truncated params file {path} at array {name}")
        arrays[name] = (
            np.frombuffer(raw[offset:end], dtype="<f8").astype(float).reshape(ref.shape)
        )
        offset = end
    if offset != len(raw):
        raise InvalidData(f"{len(raw) - offset} trailing bytes in {path}")
    return ControllerParams(space=space, arrays=arrays)
