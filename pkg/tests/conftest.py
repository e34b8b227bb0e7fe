"""Shared fixtures: the worked-example newsgroup post, the two-record
knowledge-base sample, and the lexical resources the golden tests use."""

from __future__ import annotations

import pytest

from kbcat.kbindex import KnowledgeRecord
from kbcat.textproc import EntityTag, Gazetteer, Representation, TaggedDocument, Token

# A 20-Newsgroups style post used as the golden representation fixture.
SAMPLE_POST = (
    "Why? He, Reno, and the FBI got what they wanted -- a reminder of who is "
    "the boss in America -- the thugs who work for the government.-- "
    "Clayton E. Cramer {uunet,pyramid}!optilink!cramer My opinions, all mine!"
)

# Stop words the golden fixture removes; deliberately small so the worked
# example keeps words like "got", "of" and "who".
SAMPLE_STOPLIST = {
    "why", "he", "and", "the", "what", "they", "a", "is", "in", "for",
    "my", "all", "e",
}

SAMPLE_NOUNS = {
    "boss": True,
    "thugs": True,
    "opinions": True,
    "mine": True,
    "uunet": True,
}

SAMPLE_GAZETTEER_ENTRIES = {
    "Reno": EntityTag.PERSON,
    "FBI": EntityTag.ORGANIZATION,
    "America": EntityTag.LOCATION,
    "Clayton E. Cramer": EntityTag.PERSON,
    "Clayton Cramer": EntityTag.PERSON,
}


@pytest.fixture()
def sample_gazetteer() -> Gazetteer:
    return Gazetteer(SAMPLE_GAZETTEER_ENTRIES)


# The knowledge-base sample: a health-insurance concept and a managed-care
# organization, with the fields a record dump carries.
HEALTH_RECORD = KnowledgeRecord(
    title="Health insurance in the United States",
    redirects=["Health insurance in US", "Health insurance reform"],
    entity_types=[],
    categories=[
        "Health insurance",
        "Medicare and Medicaid (United States)",
        "Healthcare in the United States",
    ],
    linked_concepts=[
        "American Enterprise Institute",
        "Congressional Budget Office",
        "Newborns' and Mothers' Health Protection Act",
        "American College of Physicians",
        "United States Census Bureau",
        "TRICARE",
        "Medicare (United States)",
    ],
    contents=(
        "health insurance coverage in the united states government programs "
        "medicare medicaid employer private plans"
    ),
    page_rank=6,
)

KAISER_RECORD = KnowledgeRecord(
    title="Kaiser Permanente",
    redirects=[
        "Kaiser Foundation Research Institute",
        "Kaiser Permanente Hospital",
        "Kaiser Permanente entities",
    ],
    entity_types=["Freebase: organization"],
    categories=[
        "Health care companies of the United States",
        "Hospital networks",
        "Non-profit organizations based in the United States",
        "Health maintenance organizations",
        "Medical and health organizations based in the United States",
        "Companies based in Oakland, California",
    ],
    linked_concepts=[
        "AFL-CIO",
        "Elk City, Oklahoma",
        "Ohio",
        "Georgia (U.S. state)",
        "Preventive medicine",
        "Los Angeles Times",
        "Henry J. Kaiser",
        "Centers for Disease Control and Prevention",
        "Sieko",
    ],
    contents=(
        "kaiser permanente integrated managed care consortium hospitals "
        "health plan members oakland california"
    ),
    page_rank=8,
)


@pytest.fixture()
def kb_sample() -> list[KnowledgeRecord]:
    return [HEALTH_RECORD, KAISER_RECORD]


def make_tagged(
    surfaces: list[str],
    doc_id: str = "doc",
    labels: set[str] | None = None,
    representation: Representation = Representation.T1,
    tags: list[EntityTag] | None = None,
) -> TaggedDocument:
    """Build a TaggedDocument directly from token surfaces (bypassing
    tokenize), the way enrichment receives already-tokenized text."""
    tag_list = tags or [EntityTag.NONE] * len(surfaces)
    return TaggedDocument(
        id=doc_id,
        tokens=[(Token(s, i), t) for i, (s, t) in enumerate(zip(surfaces, tag_list))],
        labels=labels or set(),
        representation=representation,
    )
