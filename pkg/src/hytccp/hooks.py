# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.


def pytest_hytccp_report_title(report):
    """Called before the title is written to the trace report"""


def pytest_hytccp_trace_recorded(name, document):
    """Called after a trace has been recorded or compared to its golden file."""
