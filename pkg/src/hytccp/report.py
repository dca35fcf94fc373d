# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
"""HTML reports of the traces recorded during a pytest session."""
import datetime
import os
import warnings
from collections import Counter
from pathlib import Path

import pytest

from . import __version__
from .exceptions import HytccpWarning


def _label(record):
    label = record["label"]
    if label == "sigma":
        return "σ"
    return f"τ={label['tau']['exact']}"


def _continuous(record):
    return ", ".join(
        f"{item['var']}↦({item['value']['exact']},{item['flow']['exact']})"
        for item in record["continuous"]
    )


def report_entry(name, document):
    """Flatten a trace document into what the template displays."""
    policy = document.header.get("policy") or {}
    steps = [
        {
            "step": 0,
            "label": "",
            "time": "0",
            "discrete": document.header["initial"]["discrete"],
            "continuous": _continuous(document.header["initial"]),
        }
    ]
    for record in document.steps:
        steps.append(
            {
                "step": record["step"],
                "label": _label(record),
                "time": record["time"]["exact"],
                "discrete": record["store"]["discrete"],
                "continuous": _continuous(record["store"]),
            }
        )
    return {
        "name": name,
        "terminal": document.footer["terminal"],
        "time": document.footer["time"]["exact"],
        "policy": policy.get("name"),
        "steps": steps,
    }


def _run_count(entries):
    count = len(entries)
    return f"{count} {'traces' if count != 1 else 'trace'} recorded."


def render_report(
    template, title, styles, entries, environment=None, self_contained=True
):
    generated = datetime.datetime.now()
    terminals = Counter(entry["terminal"] for entry in entries)
    return template.render(
        title=title,
        date=generated.strftime("%d-%b-%Y"),
        time=generated.strftime("%H:%M:%S"),
        version=__version__,
        styles=styles,
        self_contained=self_contained,
        environment=environment or {},
        run_count=_run_count(entries),
        terminals=dict(sorted(terminals.items())),
        traces=entries,
    )


class BaseTraceReport:
    def __init__(self, report_path, config, template, css):
        self._report_path = (
            Path.cwd() / Path(os.path.expandvars(report_path)).expanduser()
        )
        self._report_path.parent.mkdir(parents=True, exist_ok=True)
        self._config = config
        self._template = template
        self._css = css
        self._entries = []
        self._environment = {}
        self.title = config.getini("hytccp_report_title") or self._report_path.name

    @property
    def css(self):
        # implement in subclasses
        return

    @property
    def entries(self):
        return list(self._entries)

    def add_trace(self, name, document):
        self._entries.append(report_entry(name, document))

    def _generate_environment(self):
        try:
            from pytest_metadata.plugin import metadata_key
        except ImportError:
            return {}
        return dict(self._config.stash.get(metadata_key, {}))

    def _generate_report(self, self_contained=False):
        rendered_report = render_report(
            self._template,
            self.title,
            self.css,
            self._entries,
            environment=self._environment,
            self_contained=self_contained,
        )
        self._write_report(rendered_report)

    def _write_report(self, rendered_report):
        with self._report_path.open("w", encoding="utf-8") as f:
            f.write(rendered_report)

    @pytest.hookimpl(trylast=True)
    def pytest_sessionstart(self, session):
        self._environment = self._generate_environment()
        session.config.hook.pytest_hytccp_report_title(report=self)

    @pytest.hookimpl(trylast=True)
    def pytest_hytccp_trace_recorded(self, name, document):
        self.add_trace(name, document)

    @pytest.hookimpl(trylast=True)
    def pytest_sessionfinish(self, session):
        self._generate_report()

    @pytest.hookimpl(trylast=True)
    def pytest_terminal_summary(self, terminalreporter):
        terminalreporter.write_sep(
            "-",
            f"Generated trace report: {self._report_path.as_uri()}",
        )


class TraceReport(BaseTraceReport):
    def __init__(self, report_path, config, template, css):
        super().__init__(report_path, config, template, css)
        self._assets_path = Path(self._report_path.parent, "assets")
        self._assets_path.mkdir(parents=True, exist_ok=True)
        self._css_path = Path(self._assets_path, "style.css")

        with self._css_path.open("w", encoding="utf-8") as f:
            f.write(self._css)

    @property
    def css(self):
        return Path(self._assets_path.name, "style.css")


class SelfContainedTraceReport(BaseTraceReport):
    @property
    def css(self):
        return self._css

    def _generate_report(self, *args, **kwargs):
        if "@import" in self._css:
            warnings.warn(
                HytccpWarning(
                    "Self-contained trace report imports an external stylesheet"
                )
            )
        super()._generate_report(self_contained=True)
