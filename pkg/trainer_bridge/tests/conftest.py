import json
import subprocess

import pytest

NOMENCLATURE = """code,description
22,"Bebidas, líquidos alcoólicos e vinagres."
2204,Vinho de uvas frescas
220410,- Vinho espumante
22041010,Vinho tinto em garrafa
2203,Cerveja de malte
220300,- Cerveja clara
22030010,Cerveja pilsen em garrafa
09,"Café, chá, mate e especiarias"
0901,Café torrado não descafeinado
090111,- Café em grão
09011110,Café torrado em embalagem de até 2 kg
10,Cereais
1006,Arroz
100630,- Arroz semibranqueado
10063021,Arroz parboilizado polido
33,Óleos essenciais e perfumaria
3303,Perfume e água-de-colônia
330300,- Perfume líquido
33030010,Perfume floral de toucador
"""

TEMPLATE = [
    {
        "id": "categoria-produto",
        "context_masks": [
            "o produto {{product}} tem código {{NCM}}",
            "o código {{NCM}} é da categoria {{category}}",
        ],
        "question_mask": "Qual a categoria NCM correta para o produto: {{product}}?",
        "answer_mask": "o produto {{product}} possui categoria: {{category}}",
    }
]

SUBITEMS = ["22041010", "22030010", "09011110", "10063021", "33030010"]
PRODUCTS = ["VINHO TINTO", "CERVEJA PILSEN", "CAFE TORRADO", "ARROZ TIPO 1", "PERFUME FLORAL"]


def run_pipeline_cli(*args):
    return subprocess.run(["slimraft", *args], capture_output=True, text=True)


@pytest.fixture(scope="session")
def toy_pipeline(tmp_path_factory):
    """Toy corpus + index produced through the pipeline's own CLI."""
    root = tmp_path_factory.mktemp("pipeline")
    nomenclature = root / "nomenclature.csv"
    nomenclature.write_text(NOMENCLATURE, encoding="utf-8")
    templates = root / "templates.json"
    templates.write_text(json.dumps(TEMPLATE, ensure_ascii=False), encoding="utf-8")
    rows = ["id,description,ncm_code"]
    for i in range(50):
        code = SUBITEMS[i % 5]
        product = PRODUCTS[i % 5]
        rows.append(f"rec-{i},{product} LOTE {i},{code}")
    records = root / "records.csv"
    records.write_text("\n".join(rows) + "\n", encoding="utf-8")

    generate = run_pipeline_cli(
        "corpus", "generate",
        "--nomenclature", str(nomenclature),
        "--templates", str(templates),
        "--records", str(records),
        "--output-dir", str(root),
    )
    assert generate.returncode == 0, generate.stderr
    build = run_pipeline_cli(
        "index", "build", "--nomenclature", str(nomenclature), "--output", str(root / "index.json")
    )
    assert build.returncode == 0, build.stderr

    questions = root / "questions.jsonl"
    with questions.open("w", encoding="utf-8") as fh:
        for i, product in enumerate(PRODUCTS):
            fh.write(
                json.dumps(
                    {
                        "id": f"q-{i}",
                        "question": f"Qual a categoria NCM correta para o produto: {product}?",
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    return {
        "root": root,
        "corpus": root / "corpus.jsonl",
        "index": root / "index.json",
        "questions": questions,
    }


@pytest.fixture(scope="session")
def trained(toy_pipeline, tmp_path_factory):
    """One shared toy training run: base model init + 1-epoch fine-tune."""
    from trainer_bridge.toy_model import init_base_model
    from trainer_bridge.training import TrainRunConfig, train

    run_dir = tmp_path_factory.mktemp("train-run")
    base_dir = run_dir / "base"
    parameter_count = init_base_model(toy_pipeline["corpus"], base_dir, vocab_size=384, seed=11)
    result = train(
        TrainRunConfig(
            corpus_path=str(toy_pipeline["corpus"]),
            base_model=str(base_dir),
            output_dir=str(run_dir / "out"),
            epochs=1,
            seed=11,
        )
    )
    return {"parameters": parameter_count, "result": result, "run_dir": run_dir}
