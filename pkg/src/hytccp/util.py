# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.
from pathlib import Path

from jinja2 import Environment
from jinja2 import FileSystemLoader
from jinja2 import select_autoescape

from .linear import render_rational

RESOURCES = Path(__file__).parent.joinpath("resources")


def _read_template(search_paths, template_name="report.html.jinja2", autoescape=True):
    env = Environment(
        loader=FileSystemLoader(search_paths),
        autoescape=select_autoescape(
            enabled_extensions=("html.jinja2",),
            default_for_string=False,
            default=False,
        )
        if autoescape
        else False,
        keep_trailing_newline=True,
        trim_blocks=True,
        lstrip_blocks=True,
    )
    env.filters["rational"] = render_rational
    return env.get_template(template_name)


def report_css(extra_css=()):
    """The bundled report stylesheet followed by each ini-listed sheet, in order."""
    parts = [RESOURCES.joinpath("style.css").read_text(encoding="utf-8")]
    for path in extra_css:
        parts.append(f"/*\n * hytccp_report_css\n * {path}\n */")
        parts.append(Path(path).read_text(encoding="utf-8"))
    return "\n".join(parts)
