# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
import difflib
from pathlib import Path

import pytest

from .trace_io import dumps
from .trace_io import to_structured


def _golden_dir(config):
    return Path(config.rootpath, config.getini("hytccp_golden_dir"))


@pytest.fixture
def trace_recorder(pytestconfig):
    """Record traces for the trace report.

    .. code-block:: python

        def test_cooler(trace_recorder):
            trace = explorer.run(program, init)
            trace_recorder("cooler", trace)
    """

    def record(name, trace, program_name=None, source=None):
        document = to_structured(trace, program_name, source)
        pytestconfig.hook.pytest_hytccp_trace_recorded(name=name, document=document)
        return document

    return record


@pytest.fixture
def golden_trace(pytestconfig, trace_recorder):
    """Compare a trace byte for byte with ``<golden dir>/<name>.jsonl``.

    Missing golden files are written and the test is skipped; run with
    ``--hytccp-golden-update`` to rewrite existing ones.
    """
    update = pytestconfig.getoption("hytccp_golden_update")

    def compare(name, trace, program_name=None, source=None):
        document = trace_recorder(name, trace, program_name, source)
        text = dumps(document)
        path = _golden_dir(pytestconfig) / f"{name}.jsonl"
        if update or not path.exists():
            existed = path.exists()
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
            if not existed and not update:
                pytest.skip(f"golden trace {path} created")
            return document
        expected = path.read_text(encoding="utf-8")
        if expected != text:
            diff = difflib.unified_diff(
                expected.splitlines(keepends=True),
                text.splitlines(keepends=True),
                fromfile=str(path),
                tofile=name,
            )
            pytest.fail("trace differs from golden file:\n" + "".join(diff))
        return document

    return compare


@pytest.fixture
def hytccp_corpus(pytestconfig):
    """Directory of the shipped ``.hyt`` programs."""
    return Path(pytestconfig.rootpath, pytestconfig.getini("hytccp_corpus_dir"))
