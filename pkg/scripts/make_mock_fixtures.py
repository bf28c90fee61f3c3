#!/usr/bin/env python3
"""Synthesise the canned responses shipped in data/mock_fixtures.json.

The fixtures let the whole pipeline run offline: one entry per
(model, language, prompt) triple, 600 in total for the shipped configs.
``gpt-4o-mini`` plays a strong endpoint that mostly answers in the target
language with occasional code-switching; ``gemini-2.5-flash`` plays a weak
one that sometimes returns nothing, sometimes answers entirely in the
colonial language, and code-switches more.  Response text is sampled from
the packaged seed corpora, so the built-in language identifier has a fair
shot at it.

Every response is drawn from an RNG seeded with the output id, so
re-running this script reproduces the file byte for byte.
"""
from __future__ import annotations

import argparse
import json
import random
from pathlib import Path

from lexglean import data_dir
from lexglean.generation import output_id_for
from lexglean.taxonomy import load_language_configs, load_model_configs, load_taxonomy

# Which seed corpus supplies code-switched lines for each colonial language.
CONTAMINANT_LABELS = {"English": "eng_Latn", "French": "fra_Latn"}

# Base probability that a response contains at least one colonial-language
# sentence.  Chosen so the two shipped targets land on visibly different
# fidelity numbers without either being hopeless.
BASE_SWITCH_PROB = {
    "gpt-4o-mini": {"hau": 0.08, "fon": 0.45},
    "gemini-2.5-flash": {"hau": 0.20, "fon": 0.60},
}

# Task types that make switching less / more likely.
TASK_SWITCH_FACTOR = {
    "constrained": 0.4,
    "topic_switch": 1.6,
}


def read_lines(path: Path) -> list[str]:
    return [line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def switch_prob(model_id: str, iso_code: str, task_type: str) -> float:
    base = BASE_SWITCH_PROB.get(model_id, BASE_SWITCH_PROB["gpt-4o-mini"]).get(iso_code, 0.2)
    return min(0.95, base * TASK_SWITCH_FACTOR.get(task_type, 1.0))


def contaminate(rng: random.Random, lines: list[str], colonial: list[str]) -> list[str]:
    """Insert one or two colonial-language sentences at interior positions."""
    out = list(lines)
    for _ in range(rng.randint(1, 2)):
        position = rng.randint(1, len(out)) if out else 0
        out.insert(position, rng.choice(colonial))
    return out


def strong_response(rng, target, colonial, prob):
    lines = rng.choices(target, k=rng.randint(6, 12))
    if rng.random() < prob:
        lines = contaminate(rng, lines, colonial)
    finish = "length" if len(lines) >= 12 else "stop"
    return " ".join(lines), finish


def weak_response(rng, target, colonial, prob):
    roll = rng.random()
    if roll < 0.15:
        return "", "content_filter"
    if roll < 0.25:
        return " ".join(rng.choices(colonial, k=rng.randint(3, 6))), "stop"
    lines = rng.choices(target, k=rng.randint(1, 4))
    if rng.random() < prob:
        lines = contaminate(rng, lines, colonial)
    return " ".join(lines), "stop"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--out",
        type=Path,
        default=data_dir() / "mock_fixtures.json",
        help="where to write the fixtures file",
    )
    args = parser.parse_args()

    templates = load_taxonomy(data_dir() / "taxonomy.json")
    languages = load_language_configs(data_dir() / "languages.json")
    models = load_model_configs(data_dir() / "models.json")
    seeds = {path.stem: read_lines(path) for path in sorted((data_dir() / "seeds").glob("*.txt"))}

    fixtures = {}
    for model in models:
        weak = model.model_id == "gemini-2.5-flash"
        for lang in languages:
            target = seeds[lang.target_lid_label]
            colonial = seeds[CONTAMINANT_LABELS[lang.colonial_language]]
            for template in sorted(templates, key=lambda t: t.id):
                output_id = output_id_for(
                    model.model_id, lang.iso_code, template.task_type, template.id
                )
                rng = random.Random(f"mockfix:{output_id}")
                prob = switch_prob(model.model_id, lang.iso_code, template.task_type)
                if weak:
                    text, finish = weak_response(rng, target, colonial, prob)
                else:
                    text, finish = strong_response(rng, target, colonial, prob)
                fixtures[output_id] = {
                    "response_text": text,
                    "finish_reason": finish,
                    "status_schedule": [200],
                }

    args.out.write_text(
        json.dumps(fixtures, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    print(f"wrote {len(fixtures)} fixtures to {args.out}")


if __name__ == "__main__":
    main()
