import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from calkit.corpus import Corpus, DocumentRecord, Topic
from calkit.learner import LearnerConfig

from benchmark import Benchmark, make_benchmark


@pytest.fixture
def tiny_corpus() -> Corpus:
    return Corpus(
        [
            DocumentRecord("d1", title="virus spread", abstract="virus origin study"),
            DocumentRecord("d2", title="economic impact", abstract="markets and trade"),
            DocumentRecord("d3", title="virus vaccine", abstract="vaccine trials virus"),
            DocumentRecord("d4", title="weather report", abstract="storm and rain"),
            DocumentRecord("d5", title="spread model", abstract="virus spread model fit"),
        ]
    )


@pytest.fixture
def topic() -> Topic:
    return Topic(topic_id=1, query="virus spread", question="how does the virus spread",
                 narrative="studies about virus transmission and spread")


@pytest.fixture
def fast_learner() -> LearnerConfig:
    return LearnerConfig(lambda_=1e-4, loop_type="roc-pair", iterations=3000, seed=11)


@pytest.fixture(scope="session")
def bench() -> Benchmark:
    return make_benchmark()
