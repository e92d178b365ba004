import json
import os

import pytest

from olle.lexicon.frequency import FrequencyLexicon


def make_lexicon(words, language="en"):
    """Lexicon whose ranks follow the given word order."""
    n = len(words)
    return FrequencyLexicon(
        language=language, entries=[(w, n - i) for i, w in enumerate(words)]
    )


def write_lexicon_file(path, words, counts=None):
    with open(path, "w", encoding="utf-8") as fh:
        for i, word in enumerate(words):
            count = counts[i] if counts is not None else len(words) - i
            fh.write(f"{word} {count}\n")
    return str(path)


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record) + "\n")
    return str(path)


def post(user_id, text, country="AA", lang="en", gender="unknown", region=None):
    return {
        "user_id": user_id,
        "country": country,
        "region": region,
        "gender": gender,
        "lang": lang,
        "text": text,
    }


@pytest.fixture(scope="session")
def e2e_chain(tmp_path_factory):
    """One full command-line run: synth -> detect-loff -> estimate -> gaps -> report.

    Detection needs several thousand users per language before head
    noise stops spoofing early knees, so this is the one deliberately
    heavyweight fixture; every CLI artifact assertion shares it.
    """
    from olle.cli import main

    root = tmp_path_factory.mktemp("e2e")
    corpus = root / "corpus"
    rc = main(
        [
            "synth",
            "--out",
            str(corpus),
            "--param",
            "n_countries=12",
            "--param",
            "users_per_country=[2000, 2000]",
            "--param",
            "gender_effect=0.04",
            "--param",
            "region_effect=0.03",
            "--param",
            "latent_range=[0.55, 0.8]",
            "--param",
            "seed=1",
        ]
    )
    assert rc == 0
    config = str(corpus / "olle.toml")

    covariates = root / "covariates.csv"
    with open(covariates, "w", encoding="utf-8") as fh:
        fh.write("country,civic\n")
        for i in range(12):
            fh.write(f"C{i:03d},{0.2 + 0.05 * i:.2f}\n")
    specs = root / "regressions.json"
    specs.write_text(
        json.dumps(
            [
                {
                    "dv": "gap",
                    "ivs": ["olle", "civic"],
                    "interactions": [["olle", "civic"]],
                    "geo_controls": True,
                },
                {
                    "dv": "disparity",
                    "ivs": ["benchmark"],
                    "transforms": {"benchmark": "log"},
                },
            ]
        )
    )

    assert main(["detect-loff", "--config", config]) == 0
    assert main(["estimate", "--config", config]) == 0
    assert (
        main(
            [
                "gaps",
                "--config",
                config,
                "--set",
                "min_group_size=400",
                "--set",
                f"covariates={covariates}",
                "--set",
                f"regression_specs={specs}",
            ]
        )
        == 0
    )
    assert main(["report", "--config", config]) == 0
    return {"config": config, "outdir": str(corpus / "out"), "corpus": str(corpus)}


def read_artifact(chain, name):
    path = os.path.join(chain["outdir"], name)
    with open(path, "r", encoding="utf-8") as fh:
        if name.endswith(".json"):
            return json.load(fh)
        return fh.read()
