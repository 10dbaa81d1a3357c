import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # makes oracles importable

from ugcmt.core import SentencePair

# A compact French-ish vocabulary used to synthesize fixture corpora.
FRENCH_WORDS = [
    "le", "la", "les", "un", "une", "des", "et", "ou", "mais", "donc",
    "est", "sont", "était", "très", "trop", "bien", "bon", "bonne", "mauvais",
    "petit", "petite", "grand", "grande", "joli", "jolie", "nul", "super",
    "carte", "menu", "cadre", "cuisine", "plat", "plats", "dessert", "entrée",
    "serveur", "serveuse", "service", "accueil", "terrasse", "salle", "table",
    "pizza", "burger", "frites", "pâtes", "salade", "fromage", "poulet",
    "vin", "bière", "café", "eau", "prix", "cher", "chère", "correct",
    "manger", "mangé", "appelle", "apercevoir", "merci", "bonjour", "honte",
    "ça", "va", "vu", "je", "tu", "il", "elle", "nous", "vous", "ils",
    "recommande", "conseille", "adore", "déteste", "reviendrai", "jamais",
    "toujours", "souvent", "quand", "avec", "sans", "pour", "dans", "sur",
    "endroit", "lieu", "quartier", "ambiance", "musique", "bruit", "monde",
    "attente", "rapide", "lent", "lente", "chaud", "chaude", "froid", "froide",
    "délicieux", "délicieuse", "excellent", "excellente", "parfait", "parfaite",
    "copieux", "généreux", "frais", "fraîche", "maison", "qualité", "quantité",
    "été", "hier", "soir", "midi", "semaine", "fois", "personne", "personnes",
]


def make_rng(seed: int = 0) -> random.Random:
    return random.Random(seed)


def make_sentence(rng: random.Random, min_words: int = 4, max_words: int = 14) -> str:
    n = rng.randint(min_words, max_words)
    return " ".join(rng.choice(FRENCH_WORDS) for _ in range(n))


def make_parallel(rng: random.Random, n: int) -> list[SentencePair]:
    pairs = []
    for i in range(1, n + 1):
        src = make_sentence(rng)
        tgt = make_sentence(rng)
        pairs.append(SentencePair(src=src, tgt=tgt, line_no=i))
    return pairs


def write_lines(path, lines):
    with open(path, "w", encoding="utf-8") as out:
        for line in lines:
            out.write(line + "\n")
    return str(path)


def corrupt(rng: random.Random, word: str) -> str:
    """Apply one random perturbation: drop, add, swap, replace, or repeat."""
    kind = rng.randrange(5)
    pos = rng.randrange(len(word))
    if kind == 0 and len(word) > 1:
        return word[:pos] + word[pos + 1 :]
    if kind == 1:
        return word[:pos] + rng.choice("abcdeé") + word[pos:]
    if kind == 2 and pos + 1 < len(word):
        return word[:pos] + word[pos + 1] + word[pos] + word[pos + 2 :]
    if kind == 3:
        return word[:pos] + rng.choice("abcdeé") + word[pos + 1 :]
    return word[: pos + 1] + word[pos] * rng.randint(1, 4) + word[pos + 1 :]


@pytest.fixture
def rng():
    return make_rng(12345)


@pytest.fixture
def small_lexicon():
    from ugcmt.lexnoise import Lexicon

    freq = {word: 1000 - i for i, word in enumerate(FRENCH_WORDS)}
    return Lexicon(FRENCH_WORDS, freq)
