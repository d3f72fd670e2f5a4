"""Acceptance suite: one test per release criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s`. Everything here is offline:
chat traffic goes through scripted or deterministic local mocks only.
"""

import json
import math
import random
import time

import pytest
from click.testing import CliRunner

from slimraft.clients import MockChatClient
from slimraft.cli import main
from slimraft.corpus import (
    ProductRecord,
    QaTemplate,
    generate_corpus,
    render_record,
    split_holdout,
)
from slimraft.errors import ChapterOutOfRangeError
from slimraft.evaluation import EvalItem, JudgeVerdict, aggregate, run_eval
from slimraft.nomenclature import NcmCode, ancestors, format_code, parse_code
from slimraft.prompting import canonicalize
from slimraft.retrieval import (
    ContextDocument,
    assemble_prompt,
    build_index,
    search,
    tokenize,
)

import bruteforce
import helpers


def _announce(criterion: str, details: str) -> None:
    print(f"PASS [{criterion}] {details}")


def test_counting_law(wine_table):
    start = time.monotonic()
    checked = 0
    for q in range(1, 5):
        for v in range(1, 5):
            for n in (1, 10, 100):
                templates = helpers.make_templates(q)
                variations = helpers.make_variations(templates, v - 1)
                records = helpers.make_records(n)
                plan, stream = generate_corpus(templates, variations, records, wine_table)
                emitted = sum(1 for _ in stream)
                assert emitted == q * v * n == plan.total
                checked += 1
    elapsed = time.monotonic() - start
    assert elapsed < 10.0
    _announce("counting-law", f"{checked} (q,v,n) grids exact in {elapsed:.2f}s")


def test_wine_golden_record(wine_dir, golden_path, tmp_path):
    result = CliRunner().invoke(
        main,
        [
            "corpus", "generate",
            "--nomenclature", str(wine_dir / "nomenclature.csv"),
            "--templates", str(wine_dir / "templates.json"),
            "--records", str(wine_dir / "records.csv"),
            "--output-dir", str(tmp_path),
        ],
    )
    assert result.exit_code == 0, result.output
    emitted = (tmp_path / "corpus.jsonl").read_bytes()
    assert emitted == golden_path.read_bytes()
    _announce("wine-golden-record", f"{len(emitted)} bytes identical")


def test_placeholder_hygiene(wine_table):
    rng = random.Random(1910)
    placeholders = ["{{product}}", "{{NCM}}", "{{category}}"]

    def random_mask() -> str:
        pieces = rng.sample(helpers.WORDS, rng.randint(1, 4))
        for _ in range(rng.randint(0, 2)):
            pieces.insert(rng.randrange(len(pieces) + 1), rng.choice(placeholders))
        return " ".join(pieces)

    combos = 0
    for i in range(1000):
        template = QaTemplate(
            id=f"rand-{i}",
            context_masks=tuple(random_mask() for _ in range(rng.randint(1, 3))),
            question_mask=random_mask() + "?",
            answer_mask=random_mask(),
        )
        record = ProductRecord(
            id=f"rec-{i}",
            description=" ".join(rng.sample(helpers.WORDS, rng.randint(1, 6)))[:120],
            ncm_code=NcmCode("22041010"),
        )
        rendered = render_record(template.question_mask, template, record, wine_table)
        for message in rendered.messages:
            assert "{{" not in message.content and "}}" not in message.content
        combos += 1
    _announce("placeholder-hygiene", f"{combos} randomized combinations clean")


def test_parser_roundtrip():
    rng = random.Random(97)
    table = helpers.random_toy_table(rng, 200)
    assert len(table) == 200
    for key in table.entries:
        code = NcmCode(key)
        assert parse_code(format_code(code, "dotted")) == code
        assert parse_code(format_code(code, "plain")) == code
    subitems = [key for key in table.entries if len(key) == 8]
    assert subitems
    for key in subitems:
        lengths = {len(a.digits) for a in ancestors(NcmCode(key))}
        assert lengths == {2, 4, 6, 7}
    for bad in ("98", "9801", "0010", "00", "98011010"):
        with pytest.raises(ChapterOutOfRangeError):
            parse_code(bad)
    parse_code("0101.21.10")
    parse_code("9706.00.90")
    _announce("parser-roundtrip", f"{len(table)} codes round-tripped, chapter bounds enforced")


def test_retrieval_oracle():
    start = time.monotonic()
    rng = random.Random(2204)
    total_queries = 0
    for entry_count in (10, 50, 200):
        table = helpers.random_toy_table(rng, entry_count)
        index = build_index(table)
        keys = sorted(table.entries)
        for _ in range(100):
            kind = rng.random()
            if kind < 0.5:
                entry = table.entries[rng.choice(keys)]
                tokens = tokenize(entry.description)
                query = " ".join(rng.sample(tokens, min(len(tokens), rng.randint(1, 3))))
            elif kind < 0.8:
                code = NcmCode(rng.choice(keys))
                query = format_code(code, rng.choice(["plain", "dotted"]))
            else:
                query = " ".join(rng.sample(helpers.WORDS, rng.randint(1, 3)))
            hits = search(index, query, k=3)
            oracle = bruteforce.brute_force_search(table, query, 3)
            if not oracle:
                assert hits == []
            else:
                assert hits, f"index returned nothing for {query!r}"
                assert hits[0].source_code.digits == oracle[0][1], (
                    f"top-1 mismatch for {query!r} on {entry_count}-entry table"
                )
            total_queries += 1
    elapsed = time.monotonic() - start
    assert elapsed < 30.0
    _announce("retrieval-oracle", f"{total_queries} queries, 100% top-1 agreement in {elapsed:.2f}s")


def test_format_identity(wine_table):
    rng = random.Random(808)

    def stable_text() -> str:
        return canonicalize(" ".join(rng.sample(helpers.WORDS, rng.randint(1, 5))))

    for i in range(100):
        contexts = [stable_text() for _ in range(rng.randint(1, 4))]
        question = stable_text() + "?"
        instruction = stable_text() + ":"
        docs = [
            ContextDocument(text=text, source_code=NcmCode("22041010"), score=1.0)
            for text in contexts
        ]
        inference_prompt = assemble_prompt(docs, question, instruction)
        template = QaTemplate(
            id=f"fmt-{i}",
            context_masks=tuple(contexts),
            question_mask=question,
            answer_mask="resposta",
        )
        record = ProductRecord(id="r", description="PRODUTO", ncm_code=NcmCode("22041010"))
        training_message = render_record(
            question, template, record, wine_table, instruction
        ).messages[0].content
        assert inference_prompt == training_message
    assert assemble_prompt([], "Q?", "responda:") == "responda: Q?"
    _announce("format-identity", "100 randomized pairs byte-equal across both renderers")


def test_aggregation():
    verdicts = [JudgeVerdict(f"v{i}", score, "") for i, score in enumerate([0.0, 5.0, 10.0])]
    report = aggregate(verdicts, model_tag="demo")
    assert f"{report.average:.2f}" == "5.00"
    assert abs(report.std_dev - math.sqrt(50 / 3)) < 1e-9
    assert report.min_score == 0.0 and report.max_score == 10.0
    constant = aggregate([JudgeVerdict(f"c{i}", 7.5, "") for i in range(5)], model_tag="demo")
    assert constant.std_dev == 0.0
    _announce("aggregation", "avg 5.00, std within 1e-9 of sqrt(50/3), constant std exactly 0")


def test_blindness():
    tag = "TAG-MUST-NEVER-LEAK-7f3a"
    items = [
        EvalItem(
            id=f"i{i}",
            question=f"Pergunta {i}: qual a categoria NCM correta para o produto: vinho?",
            expected_answer="vinhos de uvas frescas",
            model_answer=f"resposta candidata {i}",
            model_tag=tag,
        )
        for i in range(100)
    ]
    client = MockChatClient(responder=lambda messages: "Score: 7")
    report = run_eval(items, client)
    assert report.judged == 100
    assert len(client.requests) == 100
    for request in client.requests:
        for message in request:
            assert tag not in message["content"]
    _announce("blindness", "100 judge payloads scanned, model tag absent from all")


def test_holdout_disjointness():
    records = helpers.make_records(1000)
    for seed in range(20):
        train, held_out = split_holdout(records, 100, seed=seed)
        assert len(train) == 900 and len(held_out) == 100
        train_ids = {record.id for record in train}
        held_ids = {record.id for record in held_out}
        assert train_ids.isdisjoint(held_ids)
        again_train, again_held = split_holdout(records, 100, seed=seed)
        assert again_train == train and again_held == held_out
    _announce("holdout-disjointness", "20 seeds disjoint and seed-deterministic")


def test_mock_end_to_end(tmp_path):
    items_path = tmp_path / "items.jsonl"
    expected = "vinhos de uvas frescas incluindo os enriquecidos com álcool"
    with items_path.open("w", encoding="utf-8") as fh:
        for i in range(100):
            answer = expected if i % 3 == 0 else f"resposta parcial {i} sobre vinhos"
            fh.write(
                json.dumps(
                    {
                        "id": f"item-{i}",
                        "question": "Qual a categoria NCM correta para o produto: vinho?",
                        "expected_answer": expected,
                        "model_answer": answer,
                        "model_tag": "demo-model",
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    start = time.monotonic()
    result = CliRunner().invoke(
        main,
        ["eval", "run", "--items", str(items_path), "--output-dir", str(tmp_path / "out"),
         "--mock-judge"],
    )
    elapsed = time.monotonic() - start
    assert result.exit_code == 0, result.output
    assert elapsed < 5.0
    header = result.output.splitlines()[0]
    for column in ("Model", "Aver.", "St. Dev.", "Min.", "Max."):
        assert column in header
    report = json.loads((tmp_path / "out" / "eval_report.json").read_text(encoding="utf-8"))
    assert report["coverage"] == {"judged": 100, "total": 100}
    _announce("mock-end-to-end", f"100 items judged, report columns complete, exit 0 in {elapsed:.2f}s")
