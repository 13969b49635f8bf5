"""Synthetic number-agreement corpora for English and Dutch.

Five sentence templates (Simple, NounPP, NamePP, SConj, ThatNounPP) are
instantiated from small curated lexicons. Each item carries the sentence
prefix up to the target verb, the congruent/incongruent verb forms, the
condition code (one S/P letter per inflected noun, surface order) and the
token span of the target subject.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from importlib import resources

from .checkpoint import UNK_TOKEN, Vocab
from .decompose import RelevantSpan

LANGUAGES = ("en", "nl")

SINGULAR = "S"
PLURAL = "P"


class CorpusError(ValueError):
    """Lexicon or generation input violates the corpus contract."""


@dataclass(frozen=True)
class LexiconEntry:
    category: str  # noun | verb | name | prep | det | conj | comp
    language: str
    singular: str
    plural: str | None = None
    det: str | None = None  # determiner for Dutch nouns; "clause" tag on verbs

    def form(self, number: str) -> str:
        if number == SINGULAR:
            return self.singular
        if self.plural is None:
            raise CorpusError(f"{self.singular!r} has no plural form")
        return self.plural

    @property
    def takes_clause(self) -> bool:
        return self.category == "verb" and self.det == "clause"


class Lexicon:
    def __init__(self, language: str, entries: list[LexiconEntry]):
        if language not in LANGUAGES:
            raise CorpusError(f"unsupported language {language!r}")
        self.language = language
        self.entries = entries

    def by_category(self, category: str) -> list[LexiconEntry]:
        found = [e for e in self.entries if e.category == category]
        if not found:
            raise CorpusError(f"lexicon has no entries of category {category!r}")
        return found

    @property
    def nouns(self):
        return self.by_category("noun")

    def verbs(self, clause: bool = False):
        found = [e for e in self.by_category("verb") if e.takes_clause == clause]
        if not found:
            kind = "clause-taking" if clause else "plain"
            raise CorpusError(f"lexicon has no {kind} verbs")
        return found

    @property
    def names(self):
        return self.by_category("name")

    @property
    def preps(self):
        return self.by_category("prep")

    @property
    def conjunction(self) -> str:
        return self.by_category("conj")[0].singular

    @property
    def complementizer(self) -> str:
        return self.by_category("comp")[0].singular

    def determiner(self, noun: LexiconEntry, number: str) -> str:
        if self.language == "en":
            return "the"
        # Dutch: plural nouns always take "de"; singular keeps the noun's own.
        return "de" if number == PLURAL else (noun.det or "de")

    def all_forms(self) -> set[str]:
        forms: set[str] = set()
        for e in self.entries:
            forms.add(e.singular)
            if e.plural:
                forms.add(e.plural)
        for noun in self.nouns:
            for number in (SINGULAR, PLURAL):
                det = self.determiner(noun, number)
                forms.add(det)
                forms.add(det.capitalize())
        return forms


def parse_lexicon(language: str, text: str) -> Lexicon:
    entries = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise CorpusError(f"lexicon line {lineno}: expected 4 tab-separated fields")
        category, sg, pl, det = fields
        entries.append(
            LexiconEntry(
                category=category,
                language=language,
                singular=sg,
                plural=None if pl == "-" else pl,
                det=None if det == "-" else det,
            )
        )
    return Lexicon(language, entries)


def load_lexicon(language: str, path=None) -> Lexicon:
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            return parse_lexicon(language, fh.read())
    text = resources.files("cdlens.lexicons").joinpath(f"{language}.tsv").read_text("utf-8")
    return parse_lexicon(language, text)


def build_vocab(lexicon: Lexicon) -> Vocab:
    """A vocabulary covering every surface form the lexicon can produce."""
    return Vocab([UNK_TOKEN] + sorted(lexicon.all_forms()))


@dataclass(frozen=True)
class Template:
    id: str
    arity: int  # independently inflected noun positions
    target_index: int  # which condition letter marks the target subject

    @property
    def conditions(self) -> list[str]:
        return ["".join(c) for c in itertools.product((SINGULAR, PLURAL), repeat=self.arity)]


TEMPLATES = {
    "Simple": Template("Simple", arity=1, target_index=0),
    "NounPP": Template("NounPP", arity=2, target_index=0),
    "NamePP": Template("NamePP", arity=1, target_index=0),
    "SConj": Template("SConj", arity=2, target_index=1),
    "ThatNounPP": Template("ThatNounPP", arity=3, target_index=1),
}


@dataclass(frozen=True)
class CorpusItem:
    """One generated sentence prefix with its target verb pair."""

    language: str
    template: str
    condition: str
    target_index: int
    tokens: tuple[str, ...]  # prefix up to but excluding the target verb
    congruent: str
    incongruent: str
    span: RelevantSpan

    @property
    def prediction_point(self) -> int:
        return len(self.tokens) - 1


def _verb_pair(verb: LexiconEntry, number: str) -> tuple[str, str]:
    other = PLURAL if number == SINGULAR else SINGULAR
    return verb.form(number), verb.form(other)


def _realize(lexicon: Lexicon, template: Template, filler: tuple, condition: str):
    """Build (tokens, span, congruent, incongruent) for one filler + condition."""
    lang = lexicon.language
    tid = template.id
    if tid == "Simple":
        (noun, verb) = filler
        c = condition[0]
        tokens = [lexicon.determiner(noun, c).capitalize(), noun.form(c)]
        span = RelevantSpan(1, 2)
        congruent, incongruent = _verb_pair(verb, c)
    elif tid == "NounPP":
        (noun1, prep, noun2, verb) = filler
        c1, c2 = condition
        tokens = [
            lexicon.determiner(noun1, c1).capitalize(),
            noun1.form(c1),
            prep.singular,
            lexicon.determiner(noun2, c2),
            noun2.form(c2),
        ]
        span = RelevantSpan(1, 2)
        congruent, incongruent = _verb_pair(verb, c1)
    elif tid == "NamePP":
        (noun, prep, name, verb) = filler
        c = condition[0]
        tokens = [
            lexicon.determiner(noun, c).capitalize(),
            noun.form(c),
            prep.singular,
            name.singular,
        ]
        span = RelevantSpan(1, 2)
        congruent, incongruent = _verb_pair(verb, c)
    elif tid == "SConj":
        (noun1, verb1, noun2, verb2) = filler
        c1, c2 = condition
        tokens = [
            lexicon.determiner(noun1, c1).capitalize(),
            noun1.form(c1),
            verb1.form(c1),
            lexicon.conjunction,
            lexicon.determiner(noun2, c2),
            noun2.form(c2),
        ]
        span = RelevantSpan(5, 6)
        congruent, incongruent = _verb_pair(verb2, c2)
    elif tid == "ThatNounPP":
        (noun1, cverb, noun2, prep, noun3, verb) = filler
        c1, c2, c3 = condition
        tokens = [
            lexicon.determiner(noun1, c1).capitalize(),
            noun1.form(c1),
            cverb.form(c1),
            lexicon.complementizer,
            lexicon.determiner(noun2, c2),
            noun2.form(c2),
            prep.singular,
            lexicon.determiner(noun3, c3),
            noun3.form(c3),
        ]
        span = RelevantSpan(4 + 1, 4 + 2)
        congruent, incongruent = _verb_pair(verb, c2)
    else:
        raise CorpusError(f"unknown template {tid!r}")
    return CorpusItem(
        language=lang,
        template=tid,
        condition=condition,
        target_index=template.target_index,
        tokens=tuple(tokens),
        congruent=congruent,
        incongruent=incongruent,
        span=span,
    )


def _fillers(lexicon: Lexicon, template: Template):
    nouns = lexicon.nouns
    verbs = lexicon.verbs(clause=False)
    tid = template.id
    if tid == "Simple":
        return [(n, v) for n in nouns for v in verbs]
    if tid == "NounPP":
        return [
            (n1, p, n2, v)
            for n1 in nouns
            for p in lexicon.preps
            for n2 in nouns
            if n1 is not n2
            for v in verbs
        ]
    if tid == "NamePP":
        return [
            (n, p, name, v)
            for n in nouns
            for p in lexicon.preps
            for name in lexicon.names
            for v in verbs
        ]
    if tid == "SConj":
        return [
            (n1, v1, n2, v2)
            for n1 in nouns
            for v1 in verbs
            for n2 in nouns
            if n1 is not n2
            for v2 in verbs
            if v1 is not v2
        ]
    if tid == "ThatNounPP":
        cverbs = lexicon.verbs(clause=True)
        return [
            (n1, cv, n2, p, n3, v)
            for n1 in nouns
            for cv in cverbs
            for n2 in nouns
            if n2 is not n1
            for p in lexicon.preps
            for n3 in nouns
            if n3 is not n1 and n3 is not n2
            for v in verbs
        ]
    raise CorpusError(f"unknown template {tid!r}")


def _check_vocab(item: CorpusItem, vocab: Vocab) -> None:
    for form in (*item.tokens, item.congruent, item.incongruent):
        if form not in vocab:
            raise CorpusError(f"form {form!r} is not in the vocabulary")


def generate_corpus(
    language: str,
    template_id: str,
    lexicon: Lexicon | None = None,
    vocab: Vocab | None = None,
    limit: int = 10,
    seed: int = 0,
) -> list[CorpusItem]:
    """Generate up to ``limit`` items per number condition, deterministically."""
    if template_id not in TEMPLATES:
        raise CorpusError(f"unknown template {template_id!r}, expected one of {sorted(TEMPLATES)}")
    if limit < 1:
        raise CorpusError("limit must be >= 1")
    template = TEMPLATES[template_id]
    if lexicon is None:
        lexicon = load_lexicon(language)
    if lexicon.language != language:
        raise CorpusError(f"lexicon language {lexicon.language!r} != requested {language!r}")
    fillers = _fillers(lexicon, template)
    rng = random.Random(seed)
    items: list[CorpusItem] = []
    seen: set[tuple] = set()
    for condition in template.conditions:
        order = list(fillers)
        rng.shuffle(order)
        taken = 0
        for filler in order:
            if taken >= limit:
                break
            item = _realize(lexicon, template, filler, condition)
            key = (item.tokens, item.congruent)
            if key in seen:
                continue
            seen.add(key)
            if vocab is not None:
                _check_vocab(item, vocab)
            items.append(item)
            taken += 1
    return items


# --- line format (documented in docs/corpus-format.md) ---

CORPUS_COLUMNS = (
    "language",
    "template",
    "condition",
    "target_index",
    "tokens",
    "congruent",
    "incongruent",
    "span_start",
    "span_end",
)


def format_item(item: CorpusItem) -> str:
    return "\t".join(
        [
            item.language,
            item.template,
            item.condition,
            str(item.target_index),
            " ".join(item.tokens),
            item.congruent,
            item.incongruent,
            str(item.span.start),
            str(item.span.end),
        ]
    )


def parse_item(line: str) -> CorpusItem:
    fields = line.rstrip("\n").split("\t")
    if len(fields) != len(CORPUS_COLUMNS):
        raise CorpusError(f"corpus line has {len(fields)} fields, expected {len(CORPUS_COLUMNS)}")
    lang, template, condition, target_index, tokens, congruent, incongruent, s, e = fields
    return CorpusItem(
        language=lang,
        template=template,
        condition=condition,
        target_index=int(target_index),
        tokens=tuple(tokens.split(" ")),
        congruent=congruent,
        incongruent=incongruent,
        span=RelevantSpan(int(s), int(e)),
    )


def write_corpus(items: list[CorpusItem], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for item in items:
            fh.write(format_item(item) + "\n")


def read_corpus(path) -> list[CorpusItem]:
    with open(path, encoding="utf-8") as fh:
        return [parse_item(line) for line in fh if line.strip()]
