"""Shared builders for toy tables, templates and product records."""

from __future__ import annotations

import random

from slimraft.corpus import ProductRecord, QaTemplate, VariationSet
from slimraft.nomenclature import NcmCode, NomenclatureEntry, NomenclatureTable, build_table

WORDS = [
    "vinho", "suco", "maçã", "pera", "arroz", "feijão", "café", "açúcar",
    "limpador", "sabão", "papel", "toalha", "fralda", "perfume", "cerveja",
    "leite", "queijo", "pneu", "parafuso", "motor", "tinta", "óleo", "farinha",
    "chocolate", "biscoito", "garrafa", "lata", "caixa", "pacote", "natural",
    "integral", "descartável", "importado", "nacional", "premium", "fresco",
]


def make_table(pairs: dict[str, str], source_id: str = "toy") -> NomenclatureTable:
    return build_table(
        [NomenclatureEntry(NcmCode(code), description) for code, description in pairs.items()],
        source_id=source_id,
    )


def fruit_table() -> NomenclatureTable:
    """Six-entry cutout of the fruit chapter, Portuguese descriptions."""
    return make_table(
        {
            "08": "Frutas comestíveis; cascas de cítricos ou de melões",
            "0808": "Maçãs, peras e marmelos, frescos",
            "080810": "- Maçã fresca",
            "080830": "- Pera fresca",
            "080840": "- Marmelo fresco",
            "0813": "Frutas secas e misturas de frutas secas",
        }
    )


def wine_table() -> NomenclatureTable:
    return make_table(
        {
            "22": "Bebidas, líquidos alcoólicos e vinagres.",
            "2204": (
                "Vinhos de uvas frescas, incluindo os vinhos enriquecidos com "
                "álcool; mostos de uvas, excluindo os da posição 20.09."
            ),
            "220410": "- Vinhos espumantes e vinhos espumosos",
            "22041010": "Tipo champanha (champagne)",
        }
    )


def random_subitem_digits(rng: random.Random) -> str:
    chapter = rng.randint(1, 97)
    return f"{chapter:02d}" + "".join(str(rng.randint(0, 9)) for _ in range(6))


def random_toy_table(rng: random.Random, entry_count: int) -> NomenclatureTable:
    """Hierarchically consistent table with randomized descriptions."""
    pairs: dict[str, str] = {}
    while len(pairs) < entry_count:
        digits = random_subitem_digits(rng)
        for prefix_length in (2, 4, 6, 8):
            if len(pairs) >= entry_count:
                break
            prefix = digits[:prefix_length]
            if prefix not in pairs:
                description = " ".join(rng.sample(WORDS, rng.randint(2, 5)))
                pairs[prefix] = description
    return make_table(pairs)


def make_templates(q: int) -> list[QaTemplate]:
    return [
        QaTemplate(
            id=f"tpl-{i}",
            context_masks=(
                "o produto {{product}} tem código {{NCM}}",
                "o código {{NCM}} corresponde à categoria {{category}}",
            ),
            question_mask=f"Pergunta {i}: qual a categoria de {{product}}?",
            answer_mask="o produto {{product}} possui categoria: {{category}}",
        )
        for i in range(q)
    ]


def make_variations(templates: list[QaTemplate], extra_variants: int) -> dict[str, VariationSet]:
    return {
        template.id: VariationSet(
            template_id=template.id,
            question_variants=tuple(
                f"Variação {j} ({template.id}): em que categoria {{product}} se enquadra?"
                for j in range(extra_variants)
            ),
        )
        for template in templates
    }


def make_records(n: int, code: str = "22041010") -> list[ProductRecord]:
    return [
        ProductRecord(id=f"rec-{i}", description=f"PRODUTO TESTE {i} 750ML", ncm_code=NcmCode(code))
        for i in range(n)
    ]
