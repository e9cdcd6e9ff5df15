import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from seq2seq.bleu import corpus_bleu
from seq2seq.model import Example, Graph2SeqModel
from stages.stage1_generate import read_records
from stages.stage2_train import load_model
from utils.errors import EvalError

logger = logging.getLogger("LDGCN")

# (label, lower exclusive, upper inclusive)
SIZE_BUCKETS = (("(0,20]", 0, 20), ("(20,30]", 20, 30), ("(30,40]", 30, 40), (">40", 40, None))
REENTRANCY_BUCKETS = (("0", 0, 0), ("1", 1, 1), ("2", 2, 2), (">=3", 3, None))


@dataclass
class EvalResult:
    token_accuracy: float
    bleu: float
    hypotheses: List[List[str]] = field(default_factory=list)
    by_size: Dict[str, Dict[str, float]] = field(default_factory=dict)
    by_reentrancies: Dict[str, Dict[str, float]] = field(default_factory=dict)

    def to_dict(self):
        return {
            "token_accuracy": self.token_accuracy,
            "bleu": self.bleu,
            "by_size": self.by_size,
            "by_reentrancies": self.by_reentrancies,
            "hypotheses": [" ".join(h) for h in self.hypotheses],
        }


def _size_bucket(n: int) -> str:
    for label, low, high in SIZE_BUCKETS:
        if n > low and (high is None or n <= high):
            return label
    return SIZE_BUCKETS[0][0]


def _reentrancy_bucket(r: int) -> str:
    for label, low, high in REENTRANCY_BUCKETS:
        if r >= low and (high is None or r <= high):
            return label
    return REENTRANCY_BUCKETS[-1][0]


def _bucket_scores(examples, outputs, key) -> Dict[str, Dict[str, float]]:
    """Example count, token accuracy and corpus BLEU per bucket label."""
    groups: Dict[str, List[int]] = {}
    for i, ex in enumerate(examples):
        groups.setdefault(key(ex), []).append(i)
    scores = {}
    for label, idx in sorted(groups.items()):
        correct = sum(outputs[i][0] for i in idx)
        total = sum(outputs[i][1] for i in idx)
        scores[label] = {
            "count": len(idx),
            "token_accuracy": correct / total,
            "bleu": corpus_bleu([outputs[i][2] for i in idx], [[list(examples[i].target)] for i in idx]),
        }
    return scores


def check_vocab(model: Graph2SeqModel, examples: List[Example]):
    """Every concept and target token of the dataset must be known to the model."""
    unknown = sorted({
        tok
        for ex in examples
        for tok in list(ex.graph.concepts) + list(ex.target)
        if tok not in model.vocab
    })
    if unknown:
        raise EvalError(f"{len(unknown)} dataset tokens missing from the checkpoint vocabulary: {unknown[:10]}")


def evaluate_model(model: Graph2SeqModel, examples: List[Example], beam: int = 1,
                   workers: int = 1) -> EvalResult:
    """
    Teacher-forced token accuracy and corpus BLEU of the decoded outputs.
    Examples may be spread over `workers` threads; results keep dataset order.
    """
    if not examples:
        raise EvalError("cannot evaluate an empty dataset")
    check_vocab(model, examples)

    def run(example: Example):
        _, correct, total = model.loss(None, example)
        return correct, total, model.decode(example, beam=beam)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        outputs = list(pool.map(run, examples))

    correct = sum(c for c, _, _ in outputs)
    total = sum(t for _, t, _ in outputs)
    hypotheses = [h for _, _, h in outputs]
    result = EvalResult(
        token_accuracy=correct / total,
        bleu=corpus_bleu(hypotheses, [[list(ex.target)] for ex in examples]),
        hypotheses=hypotheses,
        by_size=_bucket_scores(examples, outputs, lambda ex: _size_bucket(ex.graph.n)),
        by_reentrancies=_bucket_scores(examples, outputs, lambda ex: _reentrancy_bucket(ex.graph.reentrancies())),
    )
    logger.info(f"Evaluated {len(examples)} examples: token_acc={result.token_accuracy:.4f} BLEU={result.bleu:.4f}")
    return result


def evaluate(checkpoint, dataset, beam: int = 1, workers: int = 1, model: Optional[Graph2SeqModel] = None) -> EvalResult:
    """Loads the checkpoint (unless a model is given) and evaluates it on a dataset file."""
    model = model or load_model(checkpoint)
    examples = [
        Example.from_graph(i, graph, target or [])
        for i, (graph, target) in enumerate(read_records(dataset))
    ]
    return evaluate_model(model, examples, beam=beam, workers=workers)
