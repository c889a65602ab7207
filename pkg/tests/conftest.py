import pytest

from speceval.corpus import bundled_corpus_root, load_corpus


@pytest.fixture(scope="session")
def corpus():
    return load_corpus(bundled_corpus_root())


@pytest.fixture(scope="session")
def palindrome(corpus):
    return corpus.entry("palindrome_check")


@pytest.fixture(scope="session")
def fizzbuzz(corpus):
    return corpus.entry("fizzbuzz_code")


@pytest.fixture(scope="session")
def intsquare(corpus):
    return corpus.entry("int_square")


@pytest.fixture(scope="session")
def swapdiff(corpus):
    return corpus.entry("swap_diff")
