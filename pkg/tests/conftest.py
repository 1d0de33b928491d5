import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the release-gate results where capture cannot swallow them."""
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in RESULTS:
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{name}: {status} ({detail})")


@pytest.fixture
def tiny_tokenizer_dir(tmp_path: Path) -> Path:
    """A miniature merge-based vocabulary over plain ASCII bytes."""
    # Byte-level BPE maps bytes to printable stand-ins; for ASCII letters the
    # stand-in is the letter itself, so these entries are literal.
    vocab = {chr(c): c - 33 for c in range(33, 127)}
    base = len(vocab)
    for k, piece in enumerate(["th", "he", "the", "er", "in", "re", "an"]):
        vocab[piece] = base + k
    merges = ["t h", "h e", "th e", "e r", "i n", "r e", "a n"]
    d = tmp_path / "tok"
    d.mkdir()
    (d / "vocab.json").write_text(json.dumps(vocab), encoding="utf-8")
    (d / "merges.txt").write_text(
        "#version: tiny\n" + "\n".join(merges) + "\n", encoding="utf-8"
    )
    return d
