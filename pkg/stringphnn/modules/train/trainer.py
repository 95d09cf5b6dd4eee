"""训练循环

每个优化步从训练集抽取一批一步样本 (y^t, f^{t+1/2}, s_e) -> y^{t+1}，
对 StringPHNN 反向传播穿过一个完整的 SAV 步。
"""

import copy
import time as _time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from loguru import logger

from stringphnn.modules.config.schema import ExperimentDocument
from stringphnn.modules.core.errors import InstabilityError, TapeError
from stringphnn.modules.datagen.pairs import PairBatch, PairSampler, all_pairs, collate
from stringphnn.modules.datagen.trajectory import Trajectory
from stringphnn.modules.integrator.stability import operator_stability
from stringphnn.modules.model.baseline import BaselineModel
from stringphnn.modules.model.io import Model, save_model
from stringphnn.modules.model.phnn import StringPHNN
from stringphnn.modules.nn.optim import Adam, clip_grad_norm
from stringphnn.modules.nn.tensor import Tape
from stringphnn.modules.train.loss import absolute_error_sum, train_loss
from stringphnn.modules.train.types import CurvePoint, TrainResult, write_curve_csv

CHECKPOINT_NAME = "checkpoint.sphnn"
CURVE_NAME = "curve.csv"
NORMALIZATION_PAIRS = 20000
MAX_INIT_ATTEMPTS = 20


def seed_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """由训练种子派生 (批采样流, 验证抽样流)"""
    sampler_seq, val_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(sampler_seq), np.random.default_rng(val_seq)


def sample_pairs(trajectories: Sequence[Trajectory], count: int, rng: np.random.Generator) -> PairBatch:
    """无放回抽取至多 count 个 (轨迹, t) 样本"""
    index = all_pairs(trajectories)
    if len(index) == 0:
        raise ValueError("数据集中没有可用样本")
    take = rng.choice(len(index), size=min(count, len(index)), replace=False)
    return collate(trajectories, index[np.sort(take)])


def initialize_model(kind: str, document: ExperimentDocument, seed: int) -> tuple[Model, int]:
    """按种子初始化模型；StringPHNN 初始 θ 不满足稳定界时换派生流重抽

    返回 (模型, 尝试次数)。
    """
    if kind == BaselineModel.kind:
        return BaselineModel.create(document, seed), 1
    for attempt in range(MAX_INIT_ATTEMPTS):
        model = StringPHNN.create(document, seed, attempt=attempt)
        try:
            operator_stability(model.operators(detached=True), document.time.dt, strict=True)
        except InstabilityError as e:
            logger.warning(f"种子 {seed} 第 {attempt + 1} 次初始化不稳定，重新抽样: {e}")
            continue
        return model, attempt + 1
    raise InstabilityError(
        f"种子 {seed} 连续 {MAX_INIT_ATTEMPTS} 次初始化均不满足稳定界",
        step_index=0,
        provenance={"seed": seed, "init_spread": document.train.init_spread},
    )


def gradient_step(model: Model, batch: PairBatch, dt: float) -> float:
    """前向 + 反向，梯度累加到参数 .grad，返回损失值"""
    model.zero_grad()
    with Tape() as tape:
        predicted = model.forward(batch)
        loss = train_loss(predicted, (batch.target_q, batch.target_p), dt)
        value = loss.item()
        if np.isfinite(value):
            tape.backward(loss)
    return value


def validation_loss(model: Model, batch: PairBatch, dt: float, chunk: int) -> float:
    """固定验证集上的 MAE/dt（不记录磁带）"""
    total, count = 0.0, 0
    for start in range(0, len(batch), chunk):
        part = _slice_batch(batch, start, start + chunk)
        predicted = model.forward(part)
        s, c = absolute_error_sum(predicted, (part.target_q, part.target_p))
        total += s
        count += c
    return total / count / dt


def _slice_batch(batch: PairBatch, start: int, stop: int) -> PairBatch:
    return PairBatch(
        q=batch.q[start:stop],
        p=batch.p[start:stop],
        f=batch.f[start:stop],
        node=batch.node[start:stop],
        target_q=batch.target_q[start:stop],
        target_p=batch.target_p[start:stop],
        psi=None if batch.psi is None else batch.psi[start:stop],
    )


def _grads_finite(model: Model) -> bool:
    return all(t.grad is None or np.all(np.isfinite(t.grad)) for t in model.parameters().values())


class Trainer:
    """单种子训练：Adam、可选梯度裁剪、按验证损失保留最优参数"""

    def __init__(
        self,
        model: Model,
        document: ExperimentDocument,
        train_set: Sequence[Trajectory],
        val_set: Sequence[Trajectory],
        seed: int,
        output_dir: Optional[Path] = None,
        dataset_hash: Optional[str] = None,
    ):
        self.model = model
        self.document = document
        self.cfg = document.train
        self.dt = document.time.dt
        self.seed = seed
        self.output_dir = Path(output_dir) if output_dir else None
        self.dataset_hash = dataset_hash

        sampler_rng, val_rng = seed_streams(seed)
        self.sampler = PairSampler(train_set, self.cfg.batch_size, sampler_rng)
        self.val_batch = sample_pairs(val_set, self.cfg.val_pairs, val_rng)
        if isinstance(model, BaselineModel):
            model.fit_normalization(sample_pairs(train_set, NORMALIZATION_PAIRS, np.random.default_rng(seed)))

        self.optimizer = Adam(
            model.parameters(),
            lr=self.cfg.learning_rate,
            beta1=self.cfg.beta1,
            beta2=self.cfg.beta2,
            eps=self.cfg.eps,
        )
        self.curve: list[CurvePoint] = []
        self.skipped = 0

    def _snapshot(self) -> tuple[dict[str, np.ndarray], object]:
        params = {name: t.data.copy() for name, t in self.model.parameters().items()}
        return params, copy.deepcopy(self.optimizer.state)

    def _restore(self, snapshot) -> None:
        params, state = snapshot
        for name, tensor in self.model.parameters().items():
            tensor.data = params[name].copy()
        self.optimizer.state = state

    def _validate(self) -> float:
        with np.errstate(all="ignore"):
            loss = validation_loss(self.model, self.val_batch, self.dt, self.cfg.batch_size)
        return loss if np.isfinite(loss) else float("inf")

    def run(self) -> TrainResult:
        cfg = self.cfg
        kind = self.model.kind
        started = _time.perf_counter()
        logger.info(f"开始训练 {kind} (seed={self.seed}, steps={cfg.steps}, batch={cfg.batch_size}, "
                    f"lr={cfg.learning_rate:g})")

        best_val = self._validate()
        best_step = 0
        best = self._snapshot()
        self.curve.append(CurvePoint(step=0, train_loss=None, val_loss=best_val, learning_rate=self.optimizer.lr))
        logger.info(f"[{kind}/seed {self.seed}] 初始验证损失 {best_val:.6e}")

        consecutive = 0
        window: list[float] = []
        for step in range(1, cfg.steps + 1):
            batch = self.sampler.next_batch()
            try:
                with np.errstate(all="ignore"):
                    loss = gradient_step(self.model, batch, self.dt)
                ok = np.isfinite(loss) and _grads_finite(self.model)
            except (InstabilityError, FloatingPointError) as e:
                logger.debug(f"第 {step} 步前向失败: {e}")
                ok = False
                loss = float("nan")

            if not ok:
                consecutive += 1
                self.skipped += 1
                self.model.zero_grad()
                logger.warning(f"[{kind}/seed {self.seed}] 第 {step} 步损失非有限，跳过该批次 "
                               f"(连续 {consecutive} 次)")
                if consecutive >= cfg.nan_abort_after:
                    logger.error(f"[{kind}/seed {self.seed}] 连续 {consecutive} 个批次非有限，终止训练")
                    raise InstabilityError(
                        "训练连续出现非有限损失",
                        step_index=step,
                        provenance={"seed": self.seed, "last_good_val_loss": best_val, "kind": kind},
                    )
                if consecutive % cfg.nan_halving_after == 0:
                    self.optimizer.lr *= 0.5
                    logger.warning(f"[{kind}/seed {self.seed}] 学习率减半为 {self.optimizer.lr:g}")
            else:
                consecutive = 0
                if cfg.grad_clip is not None:
                    clip_grad_norm(self.optimizer.params, cfg.grad_clip)
                self.optimizer.step()
                window.append(loss)

            if step % cfg.val_interval == 0 or step == cfg.steps:
                val = self._validate()
                train_mean = float(np.mean(window)) if window else None
                window = []
                self.curve.append(CurvePoint(step=step, train_loss=train_mean, val_loss=val,
                                             learning_rate=self.optimizer.lr))
                if val < best_val:
                    best_val, best_step = val, step
                    best = self._snapshot()
                    logger.info(f"[{kind}/seed {self.seed}] 第 {step} 步验证损失改善: {val:.6e}")
                else:
                    logger.debug(f"[{kind}/seed {self.seed}] 第 {step} 步验证损失 {val:.6e}")

        self._restore(best)
        result = TrainResult(
            kind=kind,
            seed=self.seed,
            steps_run=cfg.steps,
            best_step=best_step,
            best_val_loss=best_val,
            final_learning_rate=self.optimizer.lr,
            skipped_batches=self.skipped,
            curve=self.curve,
        )
        if isinstance(self.model, StringPHNN):
            result.exposed_parameters = self.model.physical.values()
        if self.output_dir is not None:
            self._write_outputs(result)
        logger.info(f"[{kind}/seed {self.seed}] 训练完成: 最优步 {best_step}, 验证损失 {best_val:.6e}, "
                    f"跳过 {self.skipped} 批, 用时 {_time.perf_counter() - started:.1f}s")
        return result

    def _write_outputs(self, result: TrainResult) -> None:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        extra = {"seed": self.seed, "step": result.best_step, "best_val_loss": result.best_val_loss}
        if self.dataset_hash:
            extra["dataset_hash"] = self.dataset_hash
        checkpoint = save_model(self.output_dir / CHECKPOINT_NAME, self.model, self.document,
                                optimizer=self.optimizer, extra=extra)
        curve = write_curve_csv(self.output_dir / CURVE_NAME, self.curve)
        result.checkpoint_path = str(checkpoint)
        result.curve_path = str(curve)


def train_model(
    model: Model,
    train_set: Sequence[Trajectory],
    val_set: Sequence[Trajectory],
    document: ExperimentDocument,
    seed: int,
    output_dir: Optional[Path] = None,
    dataset_hash: Optional[str] = None,
) -> TrainResult:
    """训练 cfg.steps 步，返回结果；模型参数恢复为验证损失最低时的值"""
    try:
        return Trainer(model, document, train_set, val_set, seed, output_dir, dataset_hash).run()
    except TapeError:
        logger.exception("自动微分磁带错误")
        raise
