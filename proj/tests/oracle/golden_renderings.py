"""Writes the expected renderings for a fixture, one file per setting x kind.

Independent of the C++ implementation: built directly from the template
strings. Usage: golden_renderings.py FIXTURE OUT_DIR
"""
import json
import pathlib
import sys

SETTINGS = ("WithLongPrompt", "WithShortPrompt", "WithoutPrompt")


def instruction(rec, setting):
    if setting == "WithLongPrompt":
        return f"Given the context {rec['context']} and the long prompt {rec['long_prompt']}, generate a Question"
    if setting == "WithShortPrompt":
        return f"Given the context {rec['context']} and the short prompt {rec['short_prompt']}, generate a Question"
    return f"Given the context {rec['context']}, generate a Question"


def segmented_source(rec, setting):
    if setting == "WithLongPrompt":
        return f"[CLS] {rec['context']} [SEP] {rec['long_prompt']} [SEP]"
    if setting == "WithShortPrompt":
        return f"[CLS] {rec['context']} [SEP] {rec['short_prompt']} [SEP]"
    return f"[CLS] {rec['context']} [SEP]"


def segmented_target(rec, _setting):
    return f"[CLS] {rec['question']} [SEP]"


KINDS = {
    "instruction": instruction,
    "segmented-source": segmented_source,
    "segmented-target": segmented_target,
}


def main():
    fixture, out = pathlib.Path(sys.argv[1]), pathlib.Path(sys.argv[2])
    records = [json.loads(l) for l in fixture.read_text(encoding="utf-8").splitlines() if l.strip()]
    out.mkdir(parents=True, exist_ok=True)
    for setting in SETTINGS:
        for kind, fn in KINDS.items():
            lines = "".join(fn(r, setting) + "\n" for r in records)
            (out / f"{setting}.{kind}.txt").write_text(lines, encoding="utf-8")


if __name__ == "__main__":
    main()
