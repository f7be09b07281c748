"""Hormone value parsing against a hand-pinned corpus."""

from __future__ import annotations

import json
import math
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ivf_advisor.core.types import ANALYTES, DetectionFlag
from ivf_advisor.ingest.values import (
    HormoneParseError,
    convert_to_canonical,
    parse_hormone_value,
    tokenize_value,
)

CORPUS = json.loads((Path(__file__).parent / "data" / "hormone_values.json").read_text())


def _case_id(entry):
    return f"{entry['analyte']}:{entry['raw']!r}"


@pytest.mark.parametrize("entry", CORPUS, ids=_case_id)
def test_corpus_entry(entry):
    if entry.get("error"):
        with pytest.raises(HormoneParseError):
            parse_hormone_value(entry["raw"], entry["analyte"])
        return
    value, flag = parse_hormone_value(entry["raw"], entry["analyte"])
    assert math.isclose(value, entry["value"], rel_tol=1e-9, abs_tol=1e-12), (
        f"{entry['raw']!r}: got {value!r}, pinned {entry['value']!r}"
    )
    expected_flag = DetectionFlag(entry["flag"]) if entry["flag"] else None
    assert flag == expected_flag


def test_corpus_covers_all_analytes_and_both_outcomes():
    analytes = {entry["analyte"] for entry in CORPUS}
    assert analytes == set(ANALYTES)
    assert sum(1 for e in CORPUS if e.get("error")) >= 10
    assert sum(1 for e in CORPUS if not e.get("error")) >= 30


def test_tokenize_separates_flag_number_and_unit():
    assert tokenize_value("<0.5 IU/L") == (0.5, DetectionFlag.BELOW_LIMIT, "iu/l")
    assert tokenize_value("7.2") == (7.2, None, None)


def test_convert_rejects_unknown_analyte():
    with pytest.raises(KeyError):
        convert_to_canonical("tsh", 1.0, None)


@given(raw=st.text(max_size=30), analyte=st.sampled_from(ANALYTES))
def test_parser_never_crashes_or_returns_garbage(raw, analyte):
    try:
        value, flag = parse_hormone_value(raw, analyte)
    except HormoneParseError:
        return
    assert math.isfinite(value) and value >= 0
    assert flag is None or isinstance(flag, DetectionFlag)
