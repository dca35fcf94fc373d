# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
import os
from pathlib import Path

from .fixtures import golden_trace  # noqa: F401
from .fixtures import hytccp_corpus  # noqa: F401
from .fixtures import trace_recorder  # noqa: F401
from .report import SelfContainedTraceReport
from .report import TraceReport
from .util import _read_template
from .util import report_css
from .util import RESOURCES


def pytest_addhooks(pluginmanager):
    from . import hooks

    pluginmanager.add_hookspecs(hooks)


def pytest_addoption(parser):
    group = parser.getgroup("hytccp", "hy-tccp golden traces")
    group.addoption(
        "--hytccp-golden-update",
        action="store_true",
        dest="hytccp_golden_update",
        default=False,
        help="rewrite golden trace files instead of comparing against them.",
    )
    group.addoption(
        "--hytccp-report",
        action="store",
        dest="hytccp_report",
        metavar="path",
        default=None,
        help="create an html report of every recorded trace at given path.",
    )
    group.addoption(
        "--hytccp-self-contained",
        action="store_true",
        dest="hytccp_self_contained",
        default=False,
        help="inline the stylesheet into the trace report.",
    )
    parser.addini(
        "hytccp_golden_dir",
        default="testing/golden",
        help="directory of golden trace files, relative to the rootdir.",
    )
    parser.addini(
        "hytccp_corpus_dir",
        default="corpus",
        help="directory of the shipped hy-tccp programs, relative to the rootdir.",
    )
    parser.addini(
        "hytccp_report_title",
        default="",
        help="title of the trace report (defaults to the file name).",
    )
    parser.addini(
        "hytccp_report_css",
        type="linelist",
        default=[],
        help="css files appended to the trace report style.",
    )


def pytest_configure(config):
    report_path = config.getoption("hytccp_report")
    if not report_path:
        return
    extra_css = [
        Path(os.path.expandvars(css)).expanduser()
        for css in config.getini("hytccp_report_css")
    ]
    missing_css_files = [str(path) for path in extra_css if not path.exists()]
    if missing_css_files:
        raise OSError(
            f"Missing CSS file{'s' if len(missing_css_files) > 1 else ''}:"
            f" {', '.join(missing_css_files)}"
        )

    if not hasattr(config, "workerinput"):
        # prevent opening the report on worker nodes (xdist)
        template = _read_template([RESOURCES])
        css = report_css(extra_css)
        if config.getoption("hytccp_self_contained"):
            report = SelfContainedTraceReport(report_path, config, template, css)
        else:
            report = TraceReport(report_path, config, template, css)
        config.pluginmanager.register(report, "hytccp-report")


def pytest_unconfigure(config):
    report = config.pluginmanager.getplugin("hytccp-report")
    if report:
        config.pluginmanager.unregister(report)
