"""Grouping-design sentence detection with a multinomial naive Bayes classifier.

Features mix lowercased unigrams, hits from a cue lexicon (patients,
randomized, placebo, ...) and surface patterns typical of trial protocol
descriptions: doses, dosing frequency, treatment duration, allocation ratios.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from importlib import resources

from .textproc import Sentence

DESIGN = "design"
OTHER = "other"

FeatureVector = dict[str, int]

_NUM_RE = re.compile(r"(?:\d+(?:\.\d+)?|\.\d+)")
_RATIO_RE = re.compile(r"\d+:\d+")
_DOSE_UNITS = {"mg", "g", "ml", "µg", "mcg", "iu"}
_FUSED_DOSE_RE = re.compile(r"(?:\d+(?:\.\d+)?|\.\d+)(?:mg|g|ml|µg|mcg|iu)")
_DURATION_UNITS = {"day", "days", "week", "weeks"}

_DEFAULT_LEXICON: frozenset[str] | None = None


def load_cue_lexicon(path: str | None = None) -> frozenset[str]:
    """Load the cue-word lexicon (one word per line, # comments)."""
    if path is None:
        text = resources.files("icoe.data").joinpath("cue_lexicon.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    words = set()
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            words.add(line.lower())
    return frozenset(words)


def _default_lexicon() -> frozenset[str]:
    global _DEFAULT_LEXICON
    if _DEFAULT_LEXICON is None:
        _DEFAULT_LEXICON = load_cue_lexicon()
    return _DEFAULT_LEXICON


def featurize_sentence(sentence: Sentence, lexicon: frozenset[str] | None = None) -> FeatureVector:
    """Count unigram, cue and pattern features for one sentence."""
    if lexicon is None:
        lexicon = _default_lexicon()
    feats: FeatureVector = {}

    def bump(feature: str) -> None:
        feats[feature] = feats.get(feature, 0) + 1

    toks = [t.surface.lower() for t in sentence.tokens]
    for tok in toks:
        bump("w:" + tok)
        if tok in lexicon:
            bump("cue:" + tok)

    has_dose = has_freq = has_duration = has_ratio = False
    for i, tok in enumerate(toks):
        if _RATIO_RE.fullmatch(tok):
            has_ratio = True
        if tok.endswith("/day") or tok.endswith("/d") or tok in {"daily", "twice"}:
            has_freq = True
        if i + 1 < len(toks) and tok in {"per", "a"} and toks[i + 1] == "day":
            has_freq = True
        if _NUM_RE.fullmatch(tok):
            if i + 1 < len(toks) and toks[i + 1] in _DOSE_UNITS:
                has_dose = True
            if i > 0 and toks[i - 1] == "for" and i + 1 < len(toks) and toks[i + 1] in _DURATION_UNITS:
                has_duration = True
        elif _FUSED_DOSE_RE.fullmatch(tok):
            has_dose = True
    if has_dose:
        bump("HAS_DOSE")
    if has_freq:
        bump("HAS_FREQ")
    if has_duration:
        bump("HAS_DURATION")
    if has_ratio:
        bump("HAS_RATIO")
    return feats


@dataclass
class NBModel:
    alpha: float
    class_log_prior: dict[str, float]
    feature_log_likelihood: dict[str, dict[str, float]]
    vocabulary: frozenset[str]


def train_nb(labeled: list[tuple[FeatureVector, str]], alpha: float = 1.0) -> NBModel:
    """Train multinomial naive Bayes with additive smoothing.

    Deterministic and order-independent: parameters are pure functions of the
    per-class feature counts.
    """
    if alpha <= 0:
        raise ValueError(f"smoothing alpha must be positive, got {alpha}")
    labels = sorted({label for _, label in labeled})
    if len(labels) < 2:
        raise ValueError(f"degenerate label set: {labels}")
    vocab = sorted({f for fv, _ in labeled for f in fv})
    n_docs = {label: 0 for label in labels}
    feat_counts = {label: {f: 0 for f in vocab} for label in labels}
    totals = {label: 0 for label in labels}
    for fv, label in labeled:
        n_docs[label] += 1
        for f, c in fv.items():
            feat_counts[label][f] += c
            totals[label] += c
    n = len(labeled)
    prior = {label: math.log(n_docs[label] / n) for label in labels}
    loglik = {
        label: {
            f: math.log((feat_counts[label][f] + alpha) / (totals[label] + alpha * len(vocab)))
            for f in vocab
        }
        for label in labels
    }
    return NBModel(
        alpha=alpha,
        class_log_prior=prior,
        feature_log_likelihood=loglik,
        vocabulary=frozenset(vocab),
    )


def classify(
    model: NBModel, sentence: Sentence, lexicon: frozenset[str] | None = None
) -> tuple[str, float]:
    """Classify one sentence; returns (label, posterior of that label).

    Features unseen at training time are ignored. Exact score ties go to the
    non-design label.
    """
    fv = featurize_sentence(sentence, lexicon)
    scores: dict[str, float] = {}
    for label in sorted(model.class_log_prior):
        score = model.class_log_prior[label]
        ll = model.feature_log_likelihood[label]
        for f, c in fv.items():
            if f in model.vocabulary:
                score += c * ll[f]
        scores[label] = score
    m = max(scores.values())
    z = m + math.log(sum(math.exp(s - m) for s in scores.values()))
    label = DESIGN if scores.get(DESIGN, -math.inf) > scores.get(OTHER, -math.inf) else OTHER
    return label, math.exp(scores[label] - z)


def select_design_sentence(
    model: NBModel, sentences: list[Sentence], lexicon: frozenset[str] | None = None
) -> int | None:
    """Pick the design-classified sentence with the highest posterior."""
    best: int | None = None
    best_posterior = -1.0
    for sentence in sentences:
        label, posterior = classify(model, sentence, lexicon)
        if label == DESIGN and posterior > best_posterior:
            best = sentence.index
            best_posterior = posterior
    return best


def save_nb(model: NBModel, path: str) -> None:
    obj = {
        "alpha": model.alpha,
        "priors": model.class_log_prior,
        "vocabulary": sorted(model.vocabulary),
        "log_likelihoods": model.feature_log_likelihood,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, ensure_ascii=False, sort_keys=True, indent=1)
        fh.write("\n")


def load_nb(path: str) -> NBModel:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    return NBModel(
        alpha=obj["alpha"],
        class_log_prior=obj["priors"],
        feature_log_likelihood=obj["log_likelihoods"],
        vocabulary=frozenset(obj["vocabulary"]),
    )
