"""Instance construction, training, prediction and cross-validation.

Both tasks share one model: reflex prediction masks each attested language in
turn, proto-language reconstruction always masks the proto-language.  Training
alignments include the target word and are trimmed; inference alignments are
built from the attested words only, untrimmed, with an all-[MASK] row added.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import torch

from .alignment import Msa, progressive_align
from .dataio import CognateSet, Dataset
from .encoding import (DecodedWord, TokenGrid, Vocabulary, build_vocab, collate, decode,
                       encode)
from .errors import (TooFewCognateSets, TooFewWords, UnknownLanguageToken,
                     VocabMismatch)
from .metrics import EvalReport, aggregate, evaluate
from .model import CognateTransformer, ModelConfig, init_params, loss as loss_fn
from .phonology import SoundClassModel, default_model
from .trimming import trim

log = logging.getLogger(__name__)

TASKS = ("reflex", "proto")


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 64
    epochs: int = 32
    weight_decay: float = 0.01
    schedule: str = "linear"
    seed: int = 0
    task: str = "reflex"

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}")
        if self.learning_rate <= 0 or self.batch_size <= 0 or self.epochs < 0:
            raise ValueError("learning rate and batch size must be positive, epochs >= 0")
        if self.weight_decay < 0:
            raise ValueError("weight decay must be non-negative")
        if self.schedule not in ("linear", "constant"):
            raise ValueError("schedule must be 'linear' or 'constant'")

    def to_dict(self) -> dict:
        return asdict(self)


# epoch counts and batch sizes of the published runs
TRAIN_PRESETS = {
    "pretrain": dict(epochs=48, batch_size=64, task="reflex"),
    "finetune": dict(epochs=9, batch_size=48, task="proto"),
    "proto": dict(epochs=24, batch_size=64, task="proto"),
    "reflex": dict(epochs=32, batch_size=64, task="reflex"),
}


def train_preset(name: str, **overrides) -> TrainConfig:
    return TrainConfig(**{**TRAIN_PRESETS[name], **overrides})


@dataclass
class Example:
    """An aligned, not yet encoded instance."""

    rows: list[tuple[str, list[str]]]
    target: str
    family: str
    set_id: str
    mode: str
    gold: list[str] | None = None


@dataclass
class TrainingInstance:
    grid: TokenGrid
    family: str
    target_language: str
    set_id: str = ""
    gold: list[str] | None = None


def _set_examples(cs: CognateSet, task: str, mode: str, proto: str | None,
                  m: SoundClassModel) -> list[Example]:
    words = cs.words
    if mode == "train":
        if task == "proto":
            if proto is None or proto not in words:
                raise TooFewWords(f"set {cs.id}: no proto-language word to train on")
            if len(words) < 2:
                raise TooFewWords(f"set {cs.id}: needs the proto word and at least one reflex")
            targets = [proto]
        else:
            if len(words) < 2:
                return []
            targets = list(words)
        msa = trim(progressive_align(list(words.items()), m))
        return [Example(msa.rows, t, cs.family, cs.id, mode, list(words[t])) for t in targets]

    if task == "proto":
        if proto is None:
            raise TooFewWords(f"set {cs.id}: no proto-language declared")
        targets = [proto]
    elif cs.target is not None:
        targets = [cs.target]
    else:
        targets = list(words) if len(words) >= 2 else []
    out = []
    for t in targets:
        attested = [(lang, w) for lang, w in words.items() if lang != t]
        if not attested:
            if task == "proto":
                raise TooFewWords(f"set {cs.id}: no attested reflex to reconstruct from")
            continue
        msa = progressive_align(attested, m)
        gold = list(words[t]) if t in words else None
        out.append(Example(msa.rows, t, cs.family, cs.id, mode, gold))
    return out


def _dataset_examples(args) -> list[Example]:
    dataset, task, mode, m = args
    out = []
    for cs in dataset.cognate_sets:
        out.extend(_set_examples(cs, task, mode, dataset.proto_language, m))
    return out


def prepare_examples(datasets: Sequence[Dataset], task: str, mode: str,
                     m: SoundClassModel | None = None, workers: int = 1) -> list[Example]:
    """Align (and in train mode trim) every cognate set of every dataset."""
    if task not in TASKS or mode not in ("train", "infer"):
        raise ValueError(f"bad task/mode {task}/{mode}")
    m = m or default_model()
    jobs = [(d, task, mode, m) for d in datasets]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            chunks = list(pool.map(_dataset_examples, jobs))
    else:
        chunks = [_dataset_examples(j) for j in jobs]
    return [ex for chunk in chunks for ex in chunk]


def encode_examples(examples: Sequence[Example], vocab: Vocabulary) -> list[TrainingInstance]:
    return [TrainingInstance(encode(ex.rows, ex.target, vocab, ex.mode), ex.family, ex.target,
                             ex.set_id, ex.gold)
            for ex in examples]


def make_instances(datasets: Sequence[Dataset], task: str, mode: str, vocab: Vocabulary,
                   m: SoundClassModel | None = None, workers: int = 1) -> list[TrainingInstance]:
    return encode_examples(prepare_examples(datasets, task, mode, m, workers), vocab)


def all_languages(datasets: Sequence[Dataset]) -> list[str]:
    langs = []
    for d in datasets:
        langs.extend(d.languages)
    return list(dict.fromkeys(langs))


def vocab_for(examples: Sequence[Example], languages: Sequence[str]) -> Vocabulary:
    return build_vocab((Msa(ex.rows) for ex in examples if ex.mode == "train"), languages)


def _param_groups(model: torch.nn.Module, weight_decay: float):
    decay, no_decay = [], []
    for name, p in model.named_parameters():
        owner = model.get_submodule(name.rpartition(".")[0])
        if name.endswith("bias") or isinstance(owner, torch.nn.LayerNorm):
            no_decay.append(p)
        else:
            decay.append(p)
    return [{"params": decay, "weight_decay": weight_decay},
            {"params": no_decay, "weight_decay": 0.0}]


def _batch_tensors(batch: Sequence[TrainingInstance]):
    ids, pad, labels = collate([inst.grid for inst in batch])
    return torch.from_numpy(ids), torch.from_numpy(pad), torch.from_numpy(labels)


def train(model: CognateTransformer, instances: Sequence[TrainingInstance], cfg: TrainConfig,
          on_epoch: Callable[[int, float], None] | None = None):
    """AdamW with decoupled weight decay and linear decay of the learning rate to 0.

    Returns the model (updated in place) and the per-epoch mean loss.
    """
    if not instances:
        raise ValueError("no training instances")
    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    opt = torch.optim.AdamW(_param_groups(model, cfg.weight_decay), lr=cfg.learning_rate,
                            betas=(0.9, 0.999), eps=1e-8)
    steps_per_epoch = math.ceil(len(instances) / cfg.batch_size)
    total = max(1, steps_per_epoch * cfg.epochs)
    if cfg.schedule == "linear":
        sched = torch.optim.lr_scheduler.LambdaLR(opt, lambda s: max(0.0, 1.0 - s / total))
    else:
        sched = torch.optim.lr_scheduler.LambdaLR(opt, lambda s: 1.0)
    losses = []
    model.train()
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(instances))
        total_loss, total_tokens = 0.0, 0
        for start in range(0, len(order), cfg.batch_size):
            batch = [instances[i] for i in order[start:start + cfg.batch_size]]
            ids, pad, labels = _batch_tensors(batch)
            opt.zero_grad(set_to_none=True)
            batch_loss = loss_fn(model(ids, pad), labels)
            batch_loss.backward()
            opt.step()
            sched.step()
            n = int((labels != -100).sum())
            total_loss += float(batch_loss.detach()) * n
            total_tokens += n
        losses.append(total_loss / total_tokens)
        if on_epoch:
            on_epoch(epoch + 1, losses[-1])
    model.eval()
    return model, losses


def predict_instances(model: CognateTransformer, instances: Sequence[TrainingInstance],
                      vocab: Vocabulary, batch_size: int = 64) -> list[DecodedWord]:
    """Per-column argmax over the site columns of each grid."""
    model.eval()
    out = []
    with torch.no_grad():
        for start in range(0, len(instances), batch_size):
            batch = instances[start:start + batch_size]
            ids, pad, _ = _batch_tensors(batch)
            best = model(ids, pad).argmax(dim=-1).numpy()
            for inst, row in zip(batch, best):
                sites = row[2:inst.grid.width - 1]
                out.append(decode(sites, vocab, inst.target_language))
    return out


def predict(model: CognateTransformer, vocab: Vocabulary, words: dict[str, Sequence[str]],
            target_language: str, m: SoundClassModel | None = None) -> DecodedWord:
    """Predict the word of ``target_language`` from the attested ``words``."""
    vocab.language_id(target_language)
    attested = [(lang, list(w)) for lang, w in words.items() if lang != target_language]
    if not attested:
        raise TooFewWords("prediction needs at least one attested word")
    msa = progressive_align(attested, m or default_model())
    grid = encode(msa.rows, target_language, vocab, "infer")
    return predict_instances(model, [TrainingInstance(grid, "", target_language)], vocab)[0]


def evaluate_model(model: CognateTransformer, vocab: Vocabulary, datasets: Sequence[Dataset],
                   task: str, m: SoundClassModel | None = None, workers: int = 1):
    """Predict every held-out word of ``datasets`` and score it.

    Returns the report and the (prediction, gold, family) triples.
    """
    m = m or default_model()
    examples = [ex for ex in prepare_examples(datasets, task, "infer", m, workers)
                if ex.gold is not None]
    instances = encode_examples(examples, vocab)
    preds = predict_instances(model, instances, vocab)
    triples = [(p.phonemes, inst.gold, inst.family) for p, inst in zip(preds, instances)]
    return evaluate(triples, m), triples


def new_model(vocab: Vocabulary, model_cfg: ModelConfig | dict, seed: int) -> CognateTransformer:
    if isinstance(model_cfg, dict):
        model_cfg = ModelConfig(vocab_size=len(vocab), **model_cfg)
    elif model_cfg.vocab_size != len(vocab):
        model_cfg = replace(model_cfg, vocab_size=len(vocab))
    return init_params(model_cfg, seed)


def fit(datasets: Sequence[Dataset], task: str, model_cfg: ModelConfig | dict,
        cfg: TrainConfig, m: SoundClassModel | None = None, workers: int = 1,
        on_epoch=None):
    """Build the vocabulary, initialise a model and train it from scratch."""
    examples = prepare_examples(datasets, task, "train", m, workers)
    vocab = vocab_for(examples, all_languages(datasets))
    model = new_model(vocab, model_cfg, cfg.seed)
    model, losses = train(model, encode_examples(examples, vocab), cfg, on_epoch)
    return model, vocab, losses


def pretraining_corpus(datasets: Sequence[Dataset]) -> list[Dataset]:
    """Reflex-style corpus with every proto-language row removed."""
    return [d.without_language(d.proto_language) if d.proto_language else d for d in datasets]


def check_vocab(model: CognateTransformer, vocab: Vocabulary, languages: Sequence[str]) -> None:
    if model.config.vocab_size != len(vocab):
        raise VocabMismatch(
            f"model expects {model.config.vocab_size} tokens, vocabulary has {len(vocab)}")
    for lang in languages:
        try:
            vocab.language_id(lang)
        except UnknownLanguageToken as exc:
            raise VocabMismatch(str(exc)) from exc


def pretrain(reflex_datasets: Sequence[Dataset], proto_datasets: Sequence[Dataset],
             model_cfg: ModelConfig | dict, cfg_pre: TrainConfig,
             m: SoundClassModel | None = None, workers: int = 1, on_epoch=None):
    """Masked-word pre-training on the union corpus without proto-languages.

    The vocabulary also covers the proto-task training alignments and every
    language (proto-languages included) so fine-tuning keeps the same ids.
    """
    m = m or default_model()
    pre_examples = prepare_examples(pretraining_corpus(list(reflex_datasets) + list(proto_datasets)),
                                    "reflex", "train", m, workers)
    fine_examples = prepare_examples(proto_datasets, "proto", "train", m, workers)
    vocab = vocab_for(pre_examples + fine_examples,
                      all_languages(list(reflex_datasets) + list(proto_datasets)))
    model = new_model(vocab, model_cfg, cfg_pre.seed)
    model, losses = train(model, encode_examples(pre_examples, vocab),
                          replace(cfg_pre, task="reflex"), on_epoch)
    return model, vocab, losses


def finetune(model: CognateTransformer, vocab: Vocabulary, proto_datasets: Sequence[Dataset],
             cfg_fine: TrainConfig, m: SoundClassModel | None = None, workers: int = 1,
             on_epoch=None):
    check_vocab(model, vocab, all_languages(proto_datasets))
    if cfg_fine.epochs == 0:
        return model, []
    instances = make_instances(proto_datasets, "proto", "train", vocab, m, workers)
    return train(model, instances, replace(cfg_fine, task="proto"), on_epoch)


def pretrain_then_finetune(reflex_datasets: Sequence[Dataset], proto_datasets: Sequence[Dataset],
                           model_cfg: ModelConfig | dict, cfg_pre: TrainConfig,
                           cfg_fine: TrainConfig, m: SoundClassModel | None = None,
                           workers: int = 1):
    model, vocab, pre_losses = pretrain(reflex_datasets, proto_datasets, model_cfg, cfg_pre,
                                        m, workers)
    model, fine_losses = finetune(model, vocab, proto_datasets, cfg_fine, m, workers)
    return model, vocab, pre_losses, fine_losses


def kfold(datasets: Sequence[Dataset], k: int, seed: int) -> list[tuple[list[Dataset], list[Dataset]]]:
    """Seeded k-fold partition of every dataset's cognate sets."""
    if k < 2:
        raise TooFewCognateSets("cross-validation needs k >= 2")
    for d in datasets:
        if len(d) < k:
            raise TooFewCognateSets(f"{d.family}: {len(d)} cognate sets for {k} folds")
    rng = np.random.default_rng(seed)
    assignments = []
    for d in datasets:
        perm = rng.permutation(len(d))
        fold_of = np.empty(len(d), dtype=int)
        fold_of[perm] = np.arange(len(d)) % k
        assignments.append(fold_of)
    folds = []
    for f in range(k):
        train_sets, test_sets = [], []
        for d, fold_of in zip(datasets, assignments):
            train_sets.append(d.subset(cs for cs, g in zip(d.cognate_sets, fold_of) if g != f))
            test_sets.append(d.subset(cs for cs, g in zip(d.cognate_sets, fold_of) if g == f))
        folds.append((train_sets, test_sets))
    return folds


@dataclass
class CrossValidation:
    summary: dict
    reports: list[EvalReport] = field(default_factory=list)


def cross_validate(datasets: Sequence[Dataset], k: int, cfg: TrainConfig,
                   model_cfg: ModelConfig | dict, m: SoundClassModel | None = None,
                   workers: int = 1) -> CrossValidation:
    """Train on k-1 folds, evaluate on the remaining one, for every fold."""
    reports = []
    for i, (train_sets, test_sets) in enumerate(kfold(datasets, k, cfg.seed)):
        model, vocab, _ = fit(train_sets, cfg.task, model_cfg, cfg, m, workers)
        report, _ = evaluate_model(model, vocab, test_sets, cfg.task, m, workers)
        log.info("fold %d/%d: ed %.4f ned %.4f bc %.4f", i + 1, k, report.ed, report.ned, report.bc)
        reports.append(report)
    return CrossValidation(aggregate(reports), reports)
